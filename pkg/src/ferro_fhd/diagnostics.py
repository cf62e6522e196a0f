"""
Дискретная энергия и диссипация, относительные ошибки и порядки сходимости.
"""

from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import sparse

from .constants import CELL_CHUNK, ERROR_COLUMNS, ERROR_QUAD_DEGREE
from .errors import FhdError
from .mms import ExactSolution
from .models import EnergyRecord, ErrorRecord
from .quadrature import tetrahedron_rule
from .spaces import SpaceKind, cell_chunks


def _quadratic(matrix, x: np.ndarray, y: np.ndarray = None) -> float:
    y = x if y is None else y
    return float(y @ (matrix @ x))


def energy(disc, state, n: int = 0) -> EnergyRecord:
    """
    Энергия E и диссипация F слоя n.

    Используются те же матрицы, что и в схеме, поэтому нормы точны
    для конечно-элементных полей.
    """
    prm, ops = disc.params, disc.ops
    u, w = state.u.coeffs, state.omega.coeffs
    m, H, k = state.m.coeffs, state.H.coeffs, state.k.coeffs

    mass_u = ops.mass(SpaceKind.VELOCITY_MINI)
    mass_w = ops.mass(SpaceKind.ANGULAR_P1)
    mass_rt = ops.mass(SpaceKind.FACE_RT0)
    div_rt = ops.div_div(SpaceKind.FACE_RT0)
    coupling = ops.bilinear(
        "angular_curl", SpaceKind.ANGULAR_P1, SpaceKind.VELOCITY_MINI
    )

    energy_terms = {
        "u": prm.rho * _quadratic(mass_u, u),
        "omega": prm.rho * prm.kappa * _quadratic(mass_w, w),
        "m": _quadratic(mass_rt, m),
        "H": prm.mu0 * _quadratic(mass_rt, H),
    }
    # |curl u - 2 omega|^2 = |curl u|^2 - 4 (omega, curl u) + 4 |omega|^2
    rotation = (
        _quadratic(ops.curl_curl(SpaceKind.VELOCITY_MINI), u)
        - 4.0 * _quadratic(coupling, w, u)
        + 4.0 * _quadratic(mass_w, w)
    )
    dissipation_terms = {
        "grad_u": prm.eta * _quadratic(ops.grad_grad(SpaceKind.VELOCITY_MINI), u),
        "grad_omega": prm.eta_prime
        * _quadratic(ops.grad_grad(SpaceKind.ANGULAR_P1), w),
        "div_omega": (prm.eta_prime + prm.lambda_prime)
        * _quadratic(ops.div_div(SpaceKind.ANGULAR_P1), w),
        "m": _quadratic(mass_rt, m) / prm.tau,
        "H": (1.0 + (1.0 + prm.mu0) * prm.chi0) / prm.tau * _quadratic(mass_rt, H),
        "div_m": prm.sigma * _quadratic(div_rt, m),
        "k": prm.sigma * _quadratic(ops.mass(SpaceKind.EDGE_NE0), k),
        "div_H": prm.mu0 * prm.sigma * _quadratic(div_rt, H),
        "rotation": prm.zeta * max(rotation, 0.0),
    }
    return EnergyRecord(
        n=n,
        t=float(state.t),
        E=float(sum(energy_terms.values())),
        F=float(sum(dissipation_terms.values())),
        energy_terms=energy_terms,
        dissipation_terms=dissipation_terms,
    )


# (поле состояния, оператор, точное поле) для каждого столбца ошибок
_ERROR_TERMS = {
    "u_l2": ("u", "value", "u"),
    "u_h1": ("u", "grad", "grad_u"),
    "p_l2": ("p", "value", "p"),
    "m_l2": ("m", "value", "m"),
    "div_m": ("m", "div", "div_m"),
    "H_l2": ("H", "value", "H"),
    "div_H": ("H", "div", "div_H"),
    "z_l2": ("z", "value", "z"),
    "k_l2": ("k", "value", "k"),
    "w_l2": ("omega", "value", "omega"),
    "w_h1": ("omega", "grad", "grad_omega"),
    "phi_l2": ("phi", "value", "phi"),
}


def _sum_squares(values: np.ndarray, weights: np.ndarray) -> float:
    values = values.reshape(values.shape[:2] + (-1,))
    return float(np.einsum("cq,cqk,cqk->", weights, values, values))


def errors(disc, state, exact: ExactSolution, t: float) -> ErrorRecord:
    """
    Относительные ошибки ||v_h - v|| / ||v|| в порядке столбцов таблицы.

    Потенциал phi сравнивается с точностью до константы (средние вычитаются).
    Если точная норма равна нулю, возвращается абсолютная ошибка.
    """
    if state.t is not None and abs(state.t - t) > 1e-12 * max(1.0, abs(t)):
        raise FhdError(f"время состояния {state.t} не совпадает с t={t}")
    mesh = disc.mesh
    rule = tetrahedron_rule(ERROR_QUAD_DEGREE)
    fields = state.fields()
    numer = dict.fromkeys(ERROR_COLUMNS, 0.0)
    denom = dict.fromkeys(ERROR_COLUMNS, 0.0)
    phi_moments = np.zeros(2)

    for chunk in cell_chunks(mesh.n_cells, CELL_CHUNK):
        x = mesh.physical_points(rule.points, chunk)
        weights = 6.0 * mesh.volumes[chunk][:, None] * rule.weights[None, :]
        for column, (name, op, exact_name) in _ERROR_TERMS.items():
            discrete = fields[name].at_points(rule.points, op, chunk)
            reference = np.broadcast_to(exact(exact_name)(x, t), discrete.shape)
            difference = discrete - reference
            numer[column] += _sum_squares(difference, weights)
            denom[column] += _sum_squares(reference, weights)
            if column == "phi_l2":
                phi_moments += [
                    float(np.einsum("cq,cq->", weights, difference)),
                    float(np.einsum("cq,cq->", weights, reference)),
                ]

    # |Omega| = 1: ||f - mean f||^2 = ||f||^2 - (mean f)^2
    diff_mean, exact_mean = phi_moments
    numer["phi_l2"] = max(numer["phi_l2"] - diff_mean**2, 0.0)
    denom["phi_l2"] = max(denom["phi_l2"] - exact_mean**2, 0.0)

    values = {}
    for column in ERROR_COLUMNS:
        error = np.sqrt(numer[column])
        if denom[column] > 0:
            error = error / np.sqrt(denom[column])
        values[column] = float(error)
    return ErrorRecord(**values)


def convergence_orders(
    pairs: Sequence[Tuple[float, float]],
) -> Tuple[float, float]:
    """
    Порядок сходимости по парам (h, ошибка).

    Returns:
        (наклон МНК в координатах log h - log e, порядок по двум последним)

    Raises:
        FhdError: Если пар меньше двух или ошибка не положительна
    """
    if len(pairs) < 2:
        raise FhdError("для порядка нужно не менее двух сеток")
    h = np.array([pair[0] for pair in pairs], dtype=float)
    e = np.array([pair[1] for pair in pairs], dtype=float)
    if np.any(h <= 0) or np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise FhdError("шаги сетки и ошибки должны быть положительными")
    log_h, log_e = np.log(h), np.log(e)
    slope = np.polyfit(log_h, log_e, 1)[0]
    last = (log_e[-1] - log_e[-2]) / (log_h[-1] - log_h[-2])
    return float(slope), float(last)


def convergence_order(pairs: Sequence[Tuple[float, float]]) -> float:
    """Наклон МНК log(ошибка) от log(h)."""
    return convergence_orders(pairs)[0]


def _relative(residual: np.ndarray, scale: float) -> float:
    norm = float(np.linalg.norm(residual))
    return norm / scale if scale > 0 else norm


def _remove_mode(residual: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Убрать составляющую вдоль окаймляющего столбца множителя."""
    return residual - weights * (weights @ residual) / (weights @ weights)


def constraint_residuals(disc, state) -> Dict[str, float]:
    """
    Относительные невязки ограничений слоя.

    incompressibility: (div u, q) = 0;
    magnetostatic: mu0 D (H + m) + (div H_e, r) = 0;
    k_consistency: (k, Q) - (m, curl Q) = 0 на свободных рёбрах.

    Составляющая вдоль множителя среднего не учитывается: её
    поглощает множитель Лагранжа.
    """
    ops = disc.ops
    u, m, H, k = state.u.coeffs, state.m.coeffs, state.H.coeffs, state.k.coeffs

    coupling = ops.bilinear(
        "pressure_div", SpaceKind.VELOCITY_MINI, SpaceKind.PRESSURE_P1
    )
    incompressibility = _remove_mode(
        coupling @ u, disc.spaces["p"].mean_weights()
    )
    incompressibility_scale = np.linalg.norm(abs(coupling) @ np.abs(u))

    mu0 = disc.params.mu0
    div = ops.div()
    load = disc.forcing_load("gauss", "phi", state.t)
    gauss = mu0 * (div @ (H + m)) + load
    if disc.spaces["H"].normal_constrained:
        gauss = _remove_mode(gauss, disc.spaces["phi"].mean_weights())
    gauss_scale = mu0 * np.linalg.norm(abs(div) @ (np.abs(H) + np.abs(m)))
    gauss_scale += np.linalg.norm(load)

    free = disc.spaces["k"].free
    mass_ne = ops.mass(SpaceKind.EDGE_NE0)
    curl_rt = sparse.csr_matrix(
        ops.bilinear("curl_rt", SpaceKind.EDGE_NE0, SpaceKind.FACE_RT0)
    )
    consistency = (mass_ne @ k - curl_rt.T @ m)[free]
    consistency_scale = np.linalg.norm((abs(mass_ne) @ np.abs(k))[free])
    consistency_scale += np.linalg.norm((abs(curl_rt.T) @ np.abs(m))[free])

    return {
        "incompressibility": _relative(incompressibility, incompressibility_scale),
        "magnetostatic": _relative(gauss, gauss_scale),
        "k_consistency": _relative(consistency, consistency_scale),
    }


def energy_law(records: Sequence[EnergyRecord], dt: float) -> Dict[str, float]:
    """
    Проверка убывания энергии по записям траектории.

    Returns:
        max_increase: max (E^n - E^{n-1}) / E^{n-1};
        law_defect: max (E^n + 2 dt F^n - E^{n-1}) / E^0.
        Отрицательные значения означают, что неравенство выполнено.
    """
    if len(records) < 2:
        return {"max_increase": 0.0, "law_defect": 0.0}
    E = np.array([record.E for record in records])
    F = np.array([record.F for record in records])
    previous = np.maximum(E[:-1], np.finfo(float).tiny)
    scale = E[0] if E[0] > 0 else 1.0
    return {
        "max_increase": float(np.max((E[1:] - E[:-1]) / previous)),
        "law_defect": float(np.max(E[1:] + 2.0 * dt * F[1:] - E[:-1]) / scale),
    }
