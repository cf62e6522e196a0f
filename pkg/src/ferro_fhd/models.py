from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

from .constants import (
    DEFAULT_FINAL_TIME,
    DEFAULT_MAX_ITER,
    DEFAULT_OUT_DIR,
    DEFAULT_PARAM_VALUE,
    DEFAULT_SOLVER_METHOD,
    DEFAULT_SOLVER_TOL,
    DEFAULT_SWEEPS,
    ERROR_COLUMNS,
    EXAMPLES,
    MODES,
    PARAM_NAMES,
    SOLVER_METHODS,
    STRICT_MAX_SWEEPS,
    STRICT_TOL,
)
from .errors import ConfigError


@dataclass(frozen=True)
class ModelParams:
    """Десять физических констант модели Розенцвейга."""

    rho: float = DEFAULT_PARAM_VALUE
    kappa: float = DEFAULT_PARAM_VALUE
    eta: float = DEFAULT_PARAM_VALUE
    zeta: float = DEFAULT_PARAM_VALUE
    mu0: float = DEFAULT_PARAM_VALUE
    sigma: float = DEFAULT_PARAM_VALUE
    eta_prime: float = DEFAULT_PARAM_VALUE
    lambda_prime: float = DEFAULT_PARAM_VALUE
    tau: float = DEFAULT_PARAM_VALUE
    chi0: float = DEFAULT_PARAM_VALUE

    def __post_init__(self):
        """Проверить положительность всех параметров."""
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(name, f"ожидается положительное число, {value}")

    def to_dict(self) -> Dict[str, float]:
        """Преобразовать параметры в словарь."""
        return {name: float(getattr(self, name)) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelParams":
        """Создать параметры из словаря; отсутствующие берутся по умолчанию."""
        for key in data:
            if key not in PARAM_NAMES:
                raise ConfigError(key, "неизвестный параметр модели")
        return cls(**{key: float(value) for key, value in data.items()})


@dataclass(frozen=True)
class SolverOptions:
    """Настройки линейного решателя."""

    method: str = DEFAULT_SOLVER_METHOD
    tol: float = DEFAULT_SOLVER_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.method not in SOLVER_METHODS:
            raise ConfigError("solver", f"неизвестный метод {self.method}")
        if not self.tol > 0:
            raise ConfigError("solver_tol", "допуск должен быть положительным")
        if self.max_iter < 1:
            raise ConfigError("max_iter", "ожидается целое >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def resolve_dt(rule: str, K: int) -> float:
    """
    Вычислить шаг по времени по правилу.

    Args:
        rule: "1/K", дробь вида "1/32" или десятичное число
        K: Число разбиений сетки

    Returns:
        Шаг по времени

    Raises:
        ConfigError: Если правило не разбирается или шаг не положителен
    """
    text = str(rule).strip().replace(" ", "")
    if text.upper() == "1/K":
        return 1.0 / K
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ConfigError("dt", f"не удалось разобрать '{rule}'")
    if not value > 0:
        raise ConfigError("dt", f"шаг должен быть положительным: '{rule}'")
    return value


def step_count(T: float, dt: float) -> int:
    """Число шагов N = T / dt; T обязано быть кратно dt."""
    ratio = T / dt
    n_steps = int(round(ratio))
    if n_steps < 1 or abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
        raise ConfigError("T", f"T={T} не кратно шагу dt={dt}")
    return n_steps


@dataclass
class RunConfig:
    """Конфигурация одного расчёта на фиксированной сетке."""

    K: int
    dt: float
    T: float
    params: ModelParams = field(default_factory=ModelParams)
    sweeps: int = DEFAULT_SWEEPS
    example: Optional[int] = None
    strict: bool = False
    strict_tol: float = STRICT_TOL
    strict_max_sweeps: int = STRICT_MAX_SWEEPS
    solver: SolverOptions = field(default_factory=SolverOptions)
    constrain_h_normal: bool = True
    constrain_edge_tangential: bool = False
    lift_velocity: Optional[bool] = None
    track_errors: bool = False
    out_dir: str = DEFAULT_OUT_DIR

    def __post_init__(self):
        """Проверить согласованность шагов и числа итераций."""
        if self.K < 1:
            raise ConfigError("k", "ожидается K >= 1")
        if not self.dt > 0:
            raise ConfigError("dt", "шаг должен быть положительным")
        if self.sweeps < 1:
            raise ConfigError("sweeps", "ожидается M >= 1")
        if self.example is not None and self.example not in EXAMPLES:
            raise ConfigError("example", f"неизвестный пример {self.example}")
        step_count(self.T, self.dt)

    @property
    def n_steps(self) -> int:
        """Число шагов по времени."""
        return step_count(self.T, self.dt)


@dataclass
class ExperimentSpec:
    """Полностью разрешённое описание эксперимента."""

    mode: str
    example: int
    k_list: List[int]
    dt_rules: List[str]
    T: float
    sweeps: int = DEFAULT_SWEEPS
    params: ModelParams = field(default_factory=ModelParams)
    solver: SolverOptions = field(default_factory=SolverOptions)
    strict_energy: bool = False
    constrain_h_normal: bool = True
    constrain_edge_tangential: bool = False
    lift_velocity: Optional[bool] = None
    out_dir: str = DEFAULT_OUT_DIR
    force: bool = False

    def __post_init__(self):
        """Проверить инварианты: режим, список K, разрешимость шагов."""
        if self.mode not in MODES:
            raise ConfigError("mode", f"неизвестный режим {self.mode}")
        if self.example not in EXAMPLES:
            raise ConfigError("example", f"неизвестный пример {self.example}")
        if not self.k_list:
            raise ConfigError("k", "список K пуст")
        if any(k < 1 for k in self.k_list):
            raise ConfigError("k", "ожидаются K >= 1")
        if list(self.k_list) != sorted(set(self.k_list)):
            raise ConfigError("k", "список K должен строго возрастать")
        if not self.dt_rules:
            raise ConfigError("dt", "не задан шаг по времени")
        if self.mode != "energy" and len(self.dt_rules) != 1:
            raise ConfigError("dt", "несколько шагов допустимо только в режиме energy")
        if self.sweeps < 1:
            raise ConfigError("sweeps", "ожидается M >= 1")
        if self.mode in ("converge", "run") and self.example == 3:
            raise ConfigError("example", "у примера 3 нет точного решения")
        for K in self.k_list:
            for rule in self.dt_rules:
                step_count(self.T, resolve_dt(rule, K))

    def run_config(self, K: int, rule: str) -> RunConfig:
        """Собрать RunConfig для одного K и одного правила шага."""
        return RunConfig(
            K=K,
            dt=resolve_dt(rule, K),
            T=self.T,
            params=self.params,
            sweeps=self.sweeps,
            example=self.example,
            strict=self.strict_energy,
            solver=self.solver,
            constrain_h_normal=self.constrain_h_normal,
            constrain_edge_tangential=self.constrain_edge_tangential,
            lift_velocity=self.lift_velocity,
            out_dir=self.out_dir,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Словарное представление для JSON сериализации."""
        return {
            "mode": self.mode,
            "example": self.example,
            "k": list(self.k_list),
            "dt": list(self.dt_rules),
            "T": self.T,
            "sweeps": self.sweeps,
            "params": self.params.to_dict(),
            "solver": self.solver.to_dict(),
            "strict_energy": self.strict_energy,
            "constrain_h_normal": self.constrain_h_normal,
            "constrain_edge_tangential": self.constrain_edge_tangential,
            "lift_velocity": self.lift_velocity,
            "out": self.out_dir,
            "force": self.force,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentSpec":
        """Создать описание эксперимента из словаря."""
        return cls(
            mode=data["mode"],
            example=int(data["example"]),
            k_list=[int(k) for k in data["k"]],
            dt_rules=[str(rule) for rule in data["dt"]],
            T=float(data.get("T", DEFAULT_FINAL_TIME[int(data["example"])])),
            sweeps=int(data.get("sweeps", DEFAULT_SWEEPS)),
            params=ModelParams.from_dict(data.get("params", {})),
            solver=SolverOptions(**data.get("solver", {})),
            strict_energy=bool(data.get("strict_energy", False)),
            constrain_h_normal=bool(data.get("constrain_h_normal", True)),
            constrain_edge_tangential=bool(
                data.get("constrain_edge_tangential", False)
            ),
            lift_velocity=data.get("lift_velocity"),
            out_dir=str(data.get("out", DEFAULT_OUT_DIR)),
            force=bool(data.get("force", False)),
        )


@dataclass(frozen=True)
class EnergyRecord:
    """Дискретная энергия и диссипация на шаге n."""

    n: int
    t: float
    E: float
    F: float
    energy_terms: Dict[str, float]
    dissipation_terms: Dict[str, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "t": self.t,
            "E": self.E,
            "F": self.F,
            "energy_terms": dict(self.energy_terms),
            "dissipation_terms": dict(self.dissipation_terms),
        }


@dataclass(frozen=True)
class ErrorRecord:
    """Относительные ошибки в порядке столбцов таблицы сходимости."""

    u_l2: float
    u_h1: float
    p_l2: float
    m_l2: float
    div_m: float
    H_l2: float
    div_H: float
    z_l2: float
    k_l2: float
    w_l2: float
    w_h1: float
    phi_l2: float

    def values(self) -> List[float]:
        """Значения в порядке ERROR_COLUMNS."""
        return [getattr(self, name) for name in ERROR_COLUMNS]

    def to_dict(self) -> Dict[str, float]:
        return {name: float(getattr(self, name)) for name in ERROR_COLUMNS}


@dataclass(frozen=True)
class StepRecord:
    """Диагностика одного шага по времени."""

    energy: EnergyRecord
    residuals: Dict[str, float]
    sweeps: int
    errors: Optional[ErrorRecord] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            **self.energy.to_dict(),
            "residuals": dict(self.residuals),
            "sweeps": self.sweeps,
        }
        if self.errors is not None:
            data["errors"] = self.errors.to_dict()
        return data


@dataclass
class Outcome:
    """Результат выполнения эксперимента или команды."""

    code: int
    message: str
    files: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.code == 0

    def __str__(self) -> str:
        return self.message
