"""
Точные решения примеров 1-3 и правые части метода
искусственных решений.

Правые части выводятся символьно (sympy) из сильной формы уравнений
и превращаются в векторизованные функции numpy.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional

import numpy as np
import sympy as sp

from .constants import EXAMPLES, PROBLEM_CACHE_SIZE
from .errors import ExampleError
from .models import ModelParams

Field = Callable[[np.ndarray, float], np.ndarray]

X, Y, Z, T = sp.symbols("x y z t", real=True)
COORDS = (X, Y, Z)

EXACT_FIELDS = (
    "u",
    "p",
    "omega",
    "m",
    "H",
    "phi",
    "z",
    "k",
    "grad_u",
    "grad_omega",
    "curl_u",
    "div_m",
    "div_H",
)
EQUATIONS = ("momentum", "angular", "magnetization", "gauss")
INITIAL_FIELDS = ("u", "omega", "m")


# --- векторный анализ над sympy.Matrix --------------------------------------

def _grad(f) -> sp.Matrix:
    return sp.Matrix([sp.diff(f, c) for c in COORDS])


def _jacobian(v: sp.Matrix) -> sp.Matrix:
    """J[i, j] = d v_i / d x_j."""
    return v.jacobian(sp.Matrix(COORDS))


def _div(v: sp.Matrix):
    return sum(sp.diff(v[i], c) for i, c in enumerate(COORDS))


def _curl(v: sp.Matrix) -> sp.Matrix:
    return sp.Matrix([
        sp.diff(v[2], Y) - sp.diff(v[1], Z),
        sp.diff(v[0], Z) - sp.diff(v[2], X),
        sp.diff(v[1], X) - sp.diff(v[0], Y),
    ])


def _laplace(v: sp.Matrix) -> sp.Matrix:
    return sp.Matrix([sum(sp.diff(v[i], c, 2) for c in COORDS) for i in range(3)])


def _advect(w: sp.Matrix, v: sp.Matrix) -> sp.Matrix:
    """(w . grad) v."""
    return _jacobian(v) * w


# --- данные примеров -------------------------------------------------------

def _time_factor(example: int):
    if example == 1:
        return sp.sin(T)
    if example == 2:
        return sp.exp(-T)
    return sp.Integer(1)


def _profiles(example: int) -> Dict[str, sp.Expr]:
    """Символьные поля примера (для примера 3 - начальные данные)."""
    g = _time_factor(example)
    pi = sp.pi
    bump = (X**2 - X) * (Y**2 - Y) * (Z**2 - Z)
    phi = 1000 * g * bump**2
    return {
        "u": g * sp.Matrix([sp.sin(pi * Y), sp.sin(pi * Z), sp.sin(pi * X)]),
        "p": 120 * X**2 * Y * Z - 40 * Y**3 * Z - 40 * Y * Z**3,
        "omega": g * sp.Matrix([bump, 0, 0]),
        "m": g * sp.Matrix([sp.sin(pi * X) * sp.sin(pi * Y) * sp.sin(pi * Z), 0, 0]),
        "phi": phi,
        "H": _grad(phi),
    }


def _lambdify(expr) -> Field:
    """Векторизованная функция f(x, t) от точек (..., 3)."""
    if isinstance(expr, sp.MatrixBase):
        shape = expr.shape
        entries = [_lambdify(entry) for entry in expr]

        def matrix_field(x, t):
            values = np.stack([f(x, t) for f in entries], axis=-1)
            if shape[1] == 1:
                return values
            return values.reshape(values.shape[:-1] + shape)

        return matrix_field

    compiled = sp.lambdify((X, Y, Z, T), expr, modules="numpy")

    def scalar_field(x, t):
        x = np.asarray(x, dtype=float)
        value = compiled(x[..., 0], x[..., 1], x[..., 2], t)
        return np.broadcast_to(np.asarray(value, dtype=float), x.shape[:-1])

    return scalar_field


@dataclass(frozen=True)
class ExactSolution:
    """Точные поля примера и их производные как функции f(x, t)."""

    example: int
    fields: Dict[str, Field]
    symbols: Dict[str, sp.Expr]

    def __call__(self, name: str) -> Field:
        try:
            return self.fields[name]
        except KeyError:
            raise ExampleError(f"неизвестное поле '{name}'")


@dataclass(frozen=True)
class Forcing:
    """Правые части f_u, f_omega, f_m и div H_e."""

    momentum: Field
    angular: Field
    magnetization: Field
    gauss: Field
    symbols: Dict[str, sp.Expr]

    def __call__(self, equation: str) -> Field:
        if equation not in EQUATIONS:
            raise ExampleError(f"неизвестное уравнение '{equation}'")
        return getattr(self, equation)


@dataclass(frozen=True)
class Problem:
    """
    Постановка расчёта: начальные данные, точное решение и источники.

    Для примера 3 точного решения и источников нет (exact, forcing = None),
    внешнее поле нулевое.
    """

    example: int
    params: ModelParams
    initial: Dict[str, Field]
    exact: Optional[ExactSolution] = None
    forcing: Optional[Forcing] = None

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    def boundary_velocity(self) -> Optional[Field]:
        """Граничные значения скорости для подъёма (None - нулевые)."""
        return self.exact("u") if self.exact is not None else None


def _derive_exact(example: int) -> Dict[str, sp.Expr]:
    fields = _profiles(example)
    u, w, m, H = fields["u"], fields["omega"], fields["m"], fields["H"]
    fields.update({
        "z": u.cross(m),
        "k": _curl(m),
        "grad_u": _jacobian(u),
        "grad_omega": _jacobian(w),
        "curl_u": _curl(u),
        "div_m": _div(m),
        "div_H": _div(H),
    })
    return fields


def _derive_forcing(fields: Dict[str, sp.Expr], params: ModelParams):
    """Невязки сильной формы уравнений на точном решении."""
    rho, kappa = params.rho, params.kappa
    eta, zeta, mu0 = params.eta, params.zeta, params.mu0
    sigma, eta_p, lambda_p = params.sigma, params.eta_prime, params.lambda_prime
    tau, chi0 = params.tau, params.chi0

    u, p_tilde, w = fields["u"], fields["p"], fields["omega"]
    m, H = fields["m"], fields["H"]
    pressure = p_tilde + sp.Rational(1, 2) * mu0 * m.dot(H)

    f_u = (
        rho * (sp.diff(u, T) + _advect(u, u))
        - (eta + zeta) * _laplace(u)
        + _grad(pressure)
        - mu0 * _advect(m, H)
        - 2 * zeta * _curl(w)
    )
    f_w = (
        rho * kappa * (sp.diff(w, T) + _advect(u, w))
        - eta_p * _laplace(w)
        - (eta_p + lambda_p) * _grad(_div(w))
        - mu0 * m.cross(H)
        - 2 * zeta * (_curl(u) - 2 * w)
    )
    f_m = (
        sp.diff(m, T)
        + _advect(u, m)
        - sigma * _laplace(m)
        - w.cross(m)
        + (m - chi0 * H) / tau
    )
    div_he = -mu0 * _div(H + m)
    return {"momentum": f_u, "angular": f_w, "magnetization": f_m, "gauss": div_he}


@lru_cache(maxsize=PROBLEM_CACHE_SIZE)
def _build_problem(example: int, params: ModelParams) -> Problem:
    profiles = _profiles(example)
    initial_symbols = {name: profiles[name].subs(T, 0) for name in INITIAL_FIELDS}
    initial = {name: _lambdify(expr) for name, expr in initial_symbols.items()}
    if example == 3:
        return Problem(example=example, params=params, initial=initial)

    symbols = _derive_exact(example)
    exact = ExactSolution(
        example=example,
        fields={name: _lambdify(symbols[name]) for name in EXACT_FIELDS},
        symbols=symbols,
    )
    forcing_symbols = _derive_forcing(symbols, params)
    forcing = Forcing(
        symbols=forcing_symbols,
        **{name: _lambdify(expr) for name, expr in forcing_symbols.items()},
    )
    return Problem(
        example=example,
        params=params,
        initial=initial,
        exact=exact,
        forcing=forcing,
    )


def get_problem(example: int, params: Optional[ModelParams] = None) -> Problem:
    """
    Постановка примера с кешированием по (пример, параметры).

    Raises:
        ExampleError: Для неизвестного номера примера
    """
    if example not in EXAMPLES:
        raise ExampleError(f"неизвестный пример {example}")
    return _build_problem(example, params or ModelParams())


def _zero_vector(x, t):
    return np.zeros(np.shape(x))


def user_problem(
    initial: Dict[str, Field],
    params: Optional[ModelParams] = None,
) -> Problem:
    """
    Постановка с пользовательскими начальными полями без точного решения.

    Недостающие из u, omega, m считаются нулевыми; поля не проверяются.
    """
    unknown = set(initial) - set(INITIAL_FIELDS)
    if unknown:
        raise ExampleError(f"неизвестные начальные поля: {sorted(unknown)}")
    fields = {name: initial.get(name, _zero_vector) for name in INITIAL_FIELDS}
    return Problem(example=0, params=params or ModelParams(), initial=fields)


def zero_problem(params: Optional[ModelParams] = None) -> Problem:
    """Нулевые начальные данные, без источников."""
    return user_problem({}, params)


def exact(example: int, field: str, x: np.ndarray, t: float) -> np.ndarray:
    """Значение точного поля field примера в точках x в момент t."""
    problem = get_problem(example)
    if not problem.has_exact:
        raise ExampleError(f"у примера {example} нет точного решения")
    return problem.exact(field)(x, t)


def forcing(example: int, equation: str, x: np.ndarray, t: float) -> np.ndarray:
    """Значение правой части уравнения equation (параметры по умолчанию)."""
    problem = get_problem(example)
    if problem.forcing is None:
        raise ExampleError(f"у примера {example} нет источников")
    return problem.forcing(equation)(x, t)
