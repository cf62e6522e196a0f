"""
Полностью дискретная схема: квазиньютоновская развязка шага по времени.

Подшаги одного прохода: (1) магнитостатика (H, phi) по m-,
(2) уравнение углового момента для omega, (3) связанная система
намагниченности (m, z, k), (4) Навье - Стокс (u, p). После прохода
замороженные итерации u-, omega-, m- заменяются новыми значениями.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from .errors import FhdError, SolverError, StepError
from .forms import (
    Operators,
    assemble_c_form,
    assemble_convection,
    assemble_cross,
    assemble_functional,
    assemble_load,
    fe_product,
)
from .linsolve import solve_saddle
from .mesh import Mesh, build_uniform_mesh
from .mms import Problem, get_problem, zero_problem
from .models import RunConfig, StepRecord
from .spaces import (
    DofMap,
    FeFunction,
    SpaceKind,
    build_dofmap,
    interpolate,
)

UNKNOWNS = ("u", "p", "omega", "m", "z", "k", "H", "phi")
ITERATED = ("u", "omega", "m")

Sink = Callable[[StepRecord], None]


@dataclass(frozen=True)
class State:
    """Восемь дискретных неизвестных на одном временном слое."""

    u: FeFunction
    p: FeFunction
    omega: FeFunction
    m: FeFunction
    z: FeFunction
    k: FeFunction
    H: FeFunction
    phi: FeFunction
    t: float

    def fields(self) -> Dict[str, FeFunction]:
        return {name: getattr(self, name) for name in UNKNOWNS}

    def is_zero(self) -> bool:
        return all(not np.any(fe.coeffs) for fe in self.fields().values())


@dataclass(frozen=True)
class StepInfo:
    """Сведения о квазиньютоновских проходах одного шага."""

    sweeps: int
    update: float


class Discretization:
    """
    Сетка, пространства, постоянные матрицы и постановка задачи.

    Args:
        config: Конфигурация расчёта
        problem: Постановка; по умолчанию пример config.example
            (или нулевые данные, если пример не задан)
        mesh: Готовая сетка (по умолчанию строится по config.K)
    """

    def __init__(
        self,
        config: RunConfig,
        problem: Optional[Problem] = None,
        mesh: Optional[Mesh] = None,
    ):
        self.config = config
        self.params = config.params
        if problem is None:
            problem = (
                get_problem(config.example, config.params)
                if config.example is not None
                else zero_problem(config.params)
            )
        self.problem = problem
        self.mesh = mesh or build_uniform_mesh(config.K)

        edge = build_dofmap(
            SpaceKind.EDGE_NE0,
            self.mesh,
            constrain_tangential=config.constrain_edge_tangential,
        )
        self.spaces: Dict[str, DofMap] = {
            "u": build_dofmap(SpaceKind.VELOCITY_MINI, self.mesh),
            "p": build_dofmap(SpaceKind.PRESSURE_P1, self.mesh),
            "omega": build_dofmap(SpaceKind.ANGULAR_P1, self.mesh),
            "m": build_dofmap(SpaceKind.FACE_RT0, self.mesh),
            "z": edge,
            "k": edge,
            "H": build_dofmap(
                SpaceKind.FACE_RT0,
                self.mesh,
                constrain_normal=config.constrain_h_normal,
            ),
            "phi": build_dofmap(SpaceKind.CONST_P0, self.mesh),
        }
        self.ops = Operators({
            SpaceKind.VELOCITY_MINI: self.spaces["u"],
            SpaceKind.PRESSURE_P1: self.spaces["p"],
            SpaceKind.ANGULAR_P1: self.spaces["omega"],
            SpaceKind.FACE_RT0: self.spaces["m"],
            SpaceKind.EDGE_NE0: edge,
            SpaceKind.CONST_P0: self.spaces["phi"],
        })

    @property
    def dt(self) -> float:
        return self.config.dt

    @property
    def lift_velocity(self) -> bool:
        """Задавать ли на границе точную скорость (только при точном решении)."""
        if not self.problem.has_exact:
            return False
        lift = self.config.lift_velocity
        return True if lift is None else bool(lift)

    def forcing_load(self, equation: str, name: str, t: float) -> np.ndarray:
        """Вектор (f(t), psi_i) или нули, если источников нет."""
        space = self.spaces[name]
        if self.problem.forcing is None:
            return np.zeros(space.n_dofs)
        return assemble_load(self.problem.forcing(equation), space, t)

    def velocity_boundary(self, t: float) -> Optional[np.ndarray]:
        """Полный вектор с граничными значениями скорости или None."""
        if not self.lift_velocity:
            return None
        exact_u = self.problem.boundary_velocity()
        return interpolate(self.spaces["u"], exact_u, t).coeffs

    def zeros(self, name: str, t: Optional[float] = None) -> FeFunction:
        return FeFunction.zeros(self.spaces[name], t)

    def __repr__(self) -> str:
        counts = ", ".join(f"{name}={dm.n_free}" for name, dm in self.spaces.items())
        return f"Discretization(K={self.mesh.K}, dt={self.dt}, {counts})"


def _curl_rt(disc: Discretization) -> sparse.csr_matrix:
    """(curl Theta_j, F_i)."""
    return disc.ops.bilinear("curl_rt", SpaceKind.EDGE_NE0, SpaceKind.FACE_RT0)


def _angular_curl(disc: Discretization) -> sparse.csr_matrix:
    """(s_j, curl v_i): строки - скорость, столбцы - угловая скорость."""
    return disc.ops.bilinear(
        "angular_curl", SpaceKind.ANGULAR_P1, SpaceKind.VELOCITY_MINI
    )


def pressure_div(disc: Discretization) -> sparse.csr_matrix:
    """B: (q_i, div v_j)."""
    return disc.ops.bilinear(
        "pressure_div", SpaceKind.VELOCITY_MINI, SpaceKind.PRESSURE_P1
    )


def gauss_load(disc: Discretization, t: float) -> np.ndarray:
    """(div H_e(t), r) по ячейкам."""
    return disc.forcing_load("gauss", "phi", t)


def magnetostatic_step(
    disc: Discretization,
    m_minus: FeFunction,
    t: float,
) -> Tuple[FeFunction, FeFunction]:
    """
    Седловая система для (H, phi):

        (H, G) + (phi, div G) = 0,
        (div H, r) = -(div H_e, r) / mu0 - (div m-, r).
    """
    mu0 = disc.params.mu0
    mass = disc.ops.mass(SpaceKind.FACE_RT0)
    div = disc.ops.div()
    h_space, phi_space = disc.spaces["H"], disc.spaces["phi"]

    rhs_phi = -gauss_load(disc, t) / mu0 - div @ m_minus.coeffs
    mean_blocks = [1] if h_space.normal_constrained else []
    H, phi = solve_saddle(
        [[mass, div.T], [div, None]],
        [np.zeros(h_space.n_dofs), rhs_phi],
        [h_space, phi_space],
        mean_blocks=mean_blocks,
        options=disc.config.solver,
    )
    return FeFunction(h_space, H, t), FeFunction(phi_space, phi, t)


def angular_step(
    disc: Discretization,
    u_minus: FeFunction,
    omega_minus: FeFunction,
    omega_prev: FeFunction,
    m_minus: FeFunction,
    H_minus: FeFunction,
    t: float,
) -> FeFunction:
    """Уравнение углового момента с замороженными u-, omega-, m-, H-."""
    prm, dt = disc.params, disc.dt
    kind = SpaceKind.ANGULAR_P1
    space = disc.spaces["omega"]
    rho_kappa = prm.rho * prm.kappa
    mass = disc.ops.mass(kind)

    matrix = (
        (rho_kappa + 4.0 * prm.zeta * dt) * mass
        + prm.eta_prime * dt * disc.ops.grad_grad(kind)
        + (prm.eta_prime + prm.lambda_prime) * dt * disc.ops.div_div(kind)
    )
    convection = assemble_convection(u_minus, space)
    torque = assemble_functional(fe_product(np.cross, m_minus, H_minus), space)
    rhs = (
        rho_kappa * (mass @ omega_prev.coeffs)
        - rho_kappa * dt * (convection @ omega_minus.coeffs)
        + prm.mu0 * dt * torque
        + 2.0 * prm.zeta * dt * (_angular_curl(disc).T @ u_minus.coeffs)
        + dt * disc.forcing_load("angular", "omega", t)
    )
    (omega,) = solve_saddle(
        [[matrix]], [rhs], [space], options=disc.config.solver
    )
    return FeFunction(space, omega, t)


def magnetization_step(
    disc: Discretization,
    u_minus: FeFunction,
    m_prev: FeFunction,
    m_minus: FeFunction,
    omega: FeFunction,
    H: FeFunction,
    t: float,
) -> Tuple[FeFunction, FeFunction, FeFunction]:
    """
    Связанная система для (m, z, k):

        (1 + dt/tau)(m, F) + sigma dt (div m, div F) + sigma dt (curl k, F)
            - dt/2 (u- x k, F) - dt/2 (curl z, F) = правая часть,
        (z, L) - (u- x m, L) = 0,
        (k, Q) - (m, curl Q) = 0.
    """
    prm, dt = disc.params, disc.dt
    m_space, edge = disc.spaces["m"], disc.spaces["k"]
    mass_rt = disc.ops.mass(SpaceKind.FACE_RT0)
    mass_ne = disc.ops.mass(SpaceKind.EDGE_NE0)
    curl_rt = _curl_rt(disc)

    u_cross_k = assemble_cross(u_minus, edge, m_space)
    u_cross_m = assemble_cross(u_minus, m_space, edge)
    blocks = [
        [
            (1.0 + dt / prm.tau) * mass_rt
            + prm.sigma * dt * disc.ops.div_div(SpaceKind.FACE_RT0),
            -0.5 * dt * curl_rt,
            prm.sigma * dt * curl_rt - 0.5 * dt * u_cross_k,
        ],
        [-u_cross_m, mass_ne, None],
        [-curl_rt.T, None, mass_ne],
    ]

    c_form = assemble_c_form(u_minus, m_space)
    m_cross_curl_u = assemble_functional(
        fe_product(np.cross, m_minus, u_minus, ops=("value", "curl")), m_space
    )
    omega_cross_m = assemble_functional(
        fe_product(np.cross, omega, m_minus), m_space
    )
    rhs_m = (
        mass_rt @ m_prev.coeffs
        + prm.chi0 * dt / prm.tau * (mass_rt @ H.coeffs)
        + dt * (c_form @ m_minus.coeffs)
        + 0.5 * dt * m_cross_curl_u
        + dt * omega_cross_m
        + dt * disc.forcing_load("magnetization", "m", t)
    )
    m, z, k = solve_saddle(
        blocks,
        [rhs_m, np.zeros(edge.n_dofs), np.zeros(edge.n_dofs)],
        [m_space, edge, edge],
        options=disc.config.solver,
    )
    return (
        FeFunction(m_space, m, t),
        FeFunction(edge, z, t),
        FeFunction(edge, k, t),
    )


def _kelvin_density(m, div_m, H, div_H):
    """1/2 (m div H - H div m) для c(v, m, H)."""
    return 0.5 * (m * div_H[..., None] - H * div_m[..., None])


def ns_step(
    disc: Discretization,
    u_prev: FeFunction,
    u_minus: FeFunction,
    m: FeFunction,
    k: FeFunction,
    H: FeFunction,
    omega: FeFunction,
    t: float,
) -> Tuple[FeFunction, FeFunction]:
    """Навье - Стокс для (u, p) с нулевым средним давления."""
    prm, dt = disc.params, disc.dt
    kind = SpaceKind.VELOCITY_MINI
    u_space, p_space = disc.spaces["u"], disc.spaces["p"]
    mass = disc.ops.mass(kind)
    matrix = (
        prm.rho * mass
        + dt * prm.eta * disc.ops.grad_grad(kind)
        + dt * prm.zeta * disc.ops.curl_curl(kind)
    )
    coupling = pressure_div(disc)

    convection = assemble_convection(u_minus, u_space)
    kelvin = assemble_functional(
        fe_product(
            _kelvin_density, m, m, H, H, ops=("value", "div", "value", "div")
        ),
        u_space,
    )
    k_cross_h = assemble_functional(fe_product(np.cross, k, H), u_space)
    h_cross_m = assemble_functional(fe_product(np.cross, H, m), u_space, op="curl")
    rhs_u = (
        prm.rho * (mass @ u_prev.coeffs)
        - dt * prm.rho * (convection @ u_minus.coeffs)
        + dt * prm.mu0 * kelvin
        + 0.5 * prm.mu0 * dt * k_cross_h
        + 0.5 * prm.mu0 * dt * h_cross_m
        + 2.0 * dt * prm.zeta * (_angular_curl(disc) @ omega.coeffs)
        + dt * disc.forcing_load("momentum", "u", t)
    )
    u, p = solve_saddle(
        [[matrix, -dt * coupling.T], [coupling, None]],
        [rhs_u, np.zeros(p_space.n_dofs)],
        [u_space, p_space],
        fixed=[disc.velocity_boundary(t), None],
        options=disc.config.solver,
    )
    return FeFunction(u_space, u, t), FeFunction(p_space, p, t)


def initialize(disc: Discretization) -> State:
    """
    Начальный слой: интерполяция u0, omega0, m0 и магнитостатика для H.

    Без подъёма скорости граничные значения u0 обнуляются.
    """
    initial = disc.problem.initial
    u = interpolate(disc.spaces["u"], initial["u"], 0.0)
    if not disc.lift_velocity:
        u = u.zero_constrained()
    omega = interpolate(disc.spaces["omega"], initial["omega"], 0.0)
    omega = omega.zero_constrained()
    m = interpolate(disc.spaces["m"], initial["m"], 0.0).zero_constrained()
    H, phi = magnetostatic_step(disc, m, 0.0)
    return State(
        u=u,
        p=disc.zeros("p", 0.0),
        omega=omega,
        m=m,
        z=disc.zeros("z", 0.0),
        k=disc.zeros("k", 0.0),
        H=H,
        phi=phi,
        t=0.0,
    )


def _relative_update(new: FeFunction, old: FeFunction) -> float:
    scale = np.linalg.norm(new.coeffs)
    change = np.linalg.norm(new.coeffs - old.coeffs)
    if scale == 0.0:
        return float(change)
    return float(change / scale)


def advance(
    disc: Discretization,
    state: State,
    step: Optional[int] = None,
) -> Tuple[State, StepInfo]:
    """
    Перейти от слоя n-1 к слою n.

    Выполняет M проходов подшагов (1)-(4); в строгом режиме проходы
    повторяются, пока относительное изменение u, omega, m не станет
    меньше strict_tol.

    Raises:
        StepError: При сбое любого подшага (с номером шага)
    """
    config = disc.config
    step = step if step is not None else int(round(state.t / disc.dt)) + 1
    t = state.t + disc.dt
    max_sweeps = config.strict_max_sweeps if config.strict else config.sweeps

    u_minus, omega_minus, m_minus = state.u, state.omega, state.m
    update = np.inf
    try:
        for sweep in range(1, max_sweeps + 1):
            H, phi = magnetostatic_step(disc, m_minus, t)
            omega = angular_step(
                disc, u_minus, omega_minus, state.omega, m_minus, H, t
            )
            m, z, k = magnetization_step(
                disc, u_minus, state.m, m_minus, omega, H, t
            )
            u, p = ns_step(disc, state.u, u_minus, m, k, H, omega, t)

            update = max(
                _relative_update(u, u_minus),
                _relative_update(omega, omega_minus),
                _relative_update(m, m_minus),
            )
            u_minus, omega_minus, m_minus = u, omega, m
            if config.strict and update <= config.strict_tol:
                break
        else:
            if config.strict:
                raise SolverError(
                    f"строгий режим: {max_sweeps} проходов без сходимости",
                    update,
                )
        # (H^n, phi^n) решают магнитостатику для итогового m^n; по ним считается E^n
        H, phi = magnetostatic_step(disc, m, t)
    except FhdError as e:
        raise StepError(step, e)

    new_state = State(u=u, p=p, omega=omega, m=m, z=z, k=k, H=H, phi=phi, t=t)
    return new_state, StepInfo(sweeps=sweep, update=float(update))


@dataclass
class RunResult:
    """Итог расчёта: последний слой и записи диагностики по шагам."""

    state: State
    records: List[StepRecord]
    discretization: Discretization
    initial_residuals: Dict[str, float] = field(default_factory=dict)


def _record(disc: Discretization, state: State, n: int, sweeps: int) -> StepRecord:
    from .diagnostics import constraint_residuals, energy, errors

    record_errors = None
    if disc.config.track_errors and disc.problem.has_exact and n > 0:
        record_errors = errors(disc, state, disc.problem.exact, state.t)
    return StepRecord(
        energy=energy(disc, state, n),
        residuals=constraint_residuals(disc, state),
        sweeps=sweeps,
        errors=record_errors,
    )


def run(
    config: RunConfig,
    problem: Optional[Problem] = None,
    sink: Optional[Sink] = None,
) -> RunResult:
    """
    Выполнить N = T / dt шагов.

    Запись для n = 0 описывает начальный слой; далее по одной записи
    на шаг. Каждая запись передаётся в sink сразу после шага.
    """
    disc = Discretization(config, problem)
    state = initialize(disc)
    first = _record(disc, state, 0, 0)
    records = [first]
    if sink is not None:
        sink(first)
    for n in range(1, config.n_steps + 1):
        state, info = advance(disc, state, n)
        # время без накопления ошибок округления
        state = replace(state, t=n * config.dt)
        record = _record(disc, state, n, info.sweeps)
        records.append(record)
        if sink is not None:
            sink(record)
    return RunResult(
        state=state,
        records=records,
        discretization=disc,
        initial_residuals=dict(first.residuals),
    )
