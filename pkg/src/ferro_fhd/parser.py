"""Разбор конфигурации эксперимента: файл key = value или JSON и флаги."""

import json
import re
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .constants import (
    DEFAULT_DT_RULE,
    DEFAULT_FINAL_TIME,
    DEFAULT_K,
    DEFAULT_MAX_ITER,
    DEFAULT_OUT_DIR,
    DEFAULT_SOLVER_METHOD,
    DEFAULT_SOLVER_TOL,
    DEFAULT_SWEEPS,
    ENERGY_DT_RULES,
    MODES,
    PARAM_NAMES,
)
from .errors import ConfigError
from .models import ExperimentSpec, ModelParams, SolverOptions


class ParseError(Exception):
    """Исключение при ошибке синтаксиса конфигурации или флагов."""
    pass


# Флаг -> (ключ конфигурации, значение для флага без аргумента)
VALUE_FLAGS = {
    "--example": "example",
    "--k": "k",
    "--dt": "dt",
    "--T": "T",
    "--sweeps": "sweeps",
    "--out": "out",
    "--solver": "solver",
    "--solver-tol": "solver_tol",
    "--max-iter": "max_iter",
    "--config": "config",
}
VALUE_FLAGS.update({f"--{name.replace('_', '-')}": name for name in PARAM_NAMES})

SWITCH_FLAGS = {
    "--strict-energy": ("strict_energy", True),
    "--free-h-normal": ("constrain_h_normal", False),
    "--constrain-edge-tangential": ("constrain_edge_tangential", True),
    "--no-lift": ("lift_velocity", False),
    "--force": ("force", True),
}

CONFIG_KEYS = {
    "mode",
    "example",
    "k",
    "dt",
    "T",
    "sweeps",
    "out",
    "solver",
    "solver_tol",
    "max_iter",
    "strict_energy",
    "constrain_h_normal",
    "constrain_edge_tangential",
    "lift_velocity",
    "force",
    "params",
} | set(PARAM_NAMES)

TRUE_WORDS = {"1", "true", "yes", "on", "да"}
FALSE_WORDS = {"0", "false", "no", "off", "нет"}
NONE_WORDS = {"", "none", "null", "auto"}

LINE_PATTERN = re.compile(r"^\s*([A-Za-z_][\w]*)\s*=\s*(.*?)\s*$")


def _as_list(key: str, value: Any) -> List[str]:
    if isinstance(value, (list, tuple)):
        return [str(item).strip() for item in value]
    items = [item.strip() for item in re.split(r"[,\s]+", str(value)) if item.strip()]
    if not items:
        raise ConfigError(key, "пустой список")
    return items


def _as_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(key, f"ожидается целое число, получено {value!r}")
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"ожидается целое число, получено {value!r}")
    if not number.is_integer():
        raise ConfigError(key, f"ожидается целое число, получено {value!r}")
    return int(number)


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(key, f"ожидается число, получено {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"ожидается число, получено {value!r}")


def _as_bool(key: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    word = str(value).strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ConfigError(key, f"ожидается логическое значение, получено {value!r}")


def _as_optional_bool(key: str, value: Any) -> Optional[bool]:
    if value is None or str(value).strip().lower() in NONE_WORDS:
        return None
    return _as_bool(key, value)


def parse_config_text(text: str) -> Dict[str, Any]:
    """
    Разобрать текст конфигурации: JSON-объект или строки key = value.

    Пустые строки и строки, начинающиеся с '#', пропускаются.

    Raises:
        ParseError: Если строка не имеет вида key = value или JSON некорректен
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise ParseError(f"Некорректный JSON: {e}")
        if not isinstance(data, dict):
            raise ParseError("JSON-конфигурация должна быть объектом")
        return data

    data: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        match = LINE_PATTERN.match(line)
        if not match:
            raise ParseError(
                f"Строка {number}: ожидается формат <ключ> = <значение>"
            )
        key, value = match.group(1), match.group(2)
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        data[key] = value
    return data


def read_config_file(path: str) -> Dict[str, Any]:
    """Прочитать файл конфигурации (формат определяется по содержимому)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_config_text(f.read())
    except OSError as e:
        raise ConfigError("config", f"не удалось прочитать '{path}': {e}")


def parse_flags(args: Sequence[str]) -> Tuple[Optional[str], Dict[str, Any]]:
    """
    Разобрать аргументы командной строки.

    Формат: [<режим>] [--флаг значение | --флаг=значение | --переключатель]...

    Returns:
        Кортеж (режим или None, словарь значений по ключам конфигурации)

    Raises:
        ParseError: Для неизвестного флага или флага без значения
    """
    mode = None
    values: Dict[str, Any] = {}
    index = 0
    args = list(args)
    if args and not args[0].startswith("--"):
        mode = args[0].lower()
        index = 1

    while index < len(args):
        token = args[index]
        flag, _, inline = token.partition("=")
        if flag in SWITCH_FLAGS:
            if inline:
                raise ParseError(f"Флаг {flag} не принимает значение")
            key, value = SWITCH_FLAGS[flag]
            values[key] = value
            index += 1
        elif flag in VALUE_FLAGS:
            if inline:
                value = inline
                index += 1
            elif index + 1 < len(args):
                value = args[index + 1]
                index += 2
            else:
                raise ParseError(f"Флаг {flag} требует значение")
            values[VALUE_FLAGS[flag]] = value
        else:
            raise ParseError(f"Неизвестный флаг: {token}")
    return mode, values


def _flatten(data: Dict[str, Any]) -> Dict[str, Any]:
    """Развернуть вложенные params и solver (формат emit_config)."""
    flat = dict(data)
    params = flat.pop("params", None)
    if params is not None:
        if not isinstance(params, dict):
            raise ConfigError("params", "ожидается объект")
        flat.update(params)
    solver = flat.get("solver")
    if isinstance(solver, dict):
        flat.pop("solver")
        for key, target in (("method", "solver"), ("tol", "solver_tol"),
                            ("max_iter", "max_iter")):
            if key in solver:
                flat[target] = solver[key]
    return flat


def build_spec(data: Dict[str, Any]) -> ExperimentSpec:
    """
    Собрать ExperimentSpec из словаря ключей с подстановкой значений
    по умолчанию.

    Raises:
        ConfigError: Неизвестный ключ, неразбираемое значение или
            несогласованные T и dt
    """
    data = _flatten(data)
    for key in data:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, "неизвестный ключ")

    mode = str(data.get("mode", "")).strip().lower()
    if mode not in MODES:
        raise ConfigError("mode", f"ожидается одно из {sorted(MODES)}, '{mode}'")

    default_example = 3 if mode == "energy" else 1
    example = _as_int("example", data.get("example", default_example))
    if example not in DEFAULT_FINAL_TIME:
        raise ConfigError("example", f"неизвестный пример {example}")

    k_list = [_as_int("k", k) for k in _as_list("k", data.get("k", DEFAULT_K[mode]))]
    default_dt = ENERGY_DT_RULES if mode == "energy" else [DEFAULT_DT_RULE]
    dt_rules = _as_list("dt", data.get("dt", default_dt))
    T = _as_float("T", data.get("T", DEFAULT_FINAL_TIME[example]))

    params = ModelParams(**{
        name: _as_float(name, data[name]) for name in PARAM_NAMES if name in data
    })
    solver = SolverOptions(
        method=str(data.get("solver", DEFAULT_SOLVER_METHOD)).strip().lower(),
        tol=_as_float("solver_tol", data.get("solver_tol", DEFAULT_SOLVER_TOL)),
        max_iter=_as_int("max_iter", data.get("max_iter", DEFAULT_MAX_ITER)),
    )
    return ExperimentSpec(
        mode=mode,
        example=example,
        k_list=k_list,
        dt_rules=dt_rules,
        T=T,
        sweeps=_as_int("sweeps", data.get("sweeps", DEFAULT_SWEEPS)),
        params=params,
        solver=solver,
        strict_energy=_as_bool("strict_energy", data.get("strict_energy", False)),
        constrain_h_normal=_as_bool(
            "constrain_h_normal", data.get("constrain_h_normal", True)
        ),
        constrain_edge_tangential=_as_bool(
            "constrain_edge_tangential", data.get("constrain_edge_tangential", False)
        ),
        lift_velocity=_as_optional_bool("lift_velocity", data.get("lift_velocity")),
        out_dir=str(data.get("out", DEFAULT_OUT_DIR)),
        force=_as_bool("force", data.get("force", False)),
    )


def parse_config(args: Sequence[str], mode: Optional[str] = None) -> ExperimentSpec:
    """
    Полностью разрешённое описание эксперимента из флагов и файла конфигурации.

    Флаги имеют приоритет над значениями файла (--config путь).

    Args:
        args: Аргументы командной строки (режим первым или в mode)
        mode: Режим, если он не указан в args

    Returns:
        ExperimentSpec со значениями по умолчанию для незаданных ключей
    """
    flag_mode, flags = parse_flags(args)
    data: Dict[str, Any] = {}
    path = flags.pop("config", None)
    if path is not None:
        data.update(_flatten(read_config_file(path)))
    data.update(flags)
    chosen = flag_mode or mode
    if chosen is not None:
        data["mode"] = chosen
    return build_spec(data)


def emit_config(spec: ExperimentSpec) -> str:
    """JSON-представление эксперимента, которое parse_config_text читает обратно."""
    return json.dumps(spec.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)
