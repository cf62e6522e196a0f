"""Иерархия исключений расчётного пакета."""

from typing import Optional


class FhdError(Exception):
    """Базовое исключение для всех ошибок расчёта."""
    pass


class ConfigError(FhdError):
    """Ошибка конфигурации эксперимента (неизвестный ключ, плохое значение)."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"параметр '{key}': {message}")


class MeshError(FhdError):
    """Некорректные аргументы построения сетки или вырожденная ячейка."""
    pass


class SpaceError(FhdError):
    """Несовместимые пространства или неподдерживаемая форма."""
    pass


class ExampleError(FhdError):
    """Неизвестный пример или поле."""
    pass


class SolverError(FhdError):
    """Линейный решатель не сошёлся."""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (невязка {residual:.3e})"
        super().__init__(message)


class SingularMatrixError(SolverError):
    """Матрица системы структурно вырождена."""
    pass


class StepError(FhdError):
    """Сбой подшага на конкретном шаге по времени."""

    def __init__(self, step: int, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"шаг n={step}: {cause}")
