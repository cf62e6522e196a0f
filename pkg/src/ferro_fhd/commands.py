import shlex
from abc import ABC, abstractmethod
from typing import Dict, List, Sequence, Type

from .core import ConfigError, Experiment
from .models import ExperimentSpec, Outcome
from .parser import ParseError, emit_config, parse_config


class InvalidCommandError(Exception):
    """Исключение для некорректных команд."""
    pass


class ExperimentCommand(ABC):
    """Абстрактный базовый класс для команд экспериментов."""

    @abstractmethod
    def execute(self, experiment: Experiment) -> Outcome:
        """
        Выполнить команду.

        Args:
            experiment: Оркестратор экспериментов

        Returns:
            Результат с кодом возврата и сообщением для пользователя
        """
        pass

    @classmethod
    @abstractmethod
    def from_input(cls, args: List[str]) -> "ExperimentCommand":
        """
        Создать экземпляр команды из пользовательского ввода.

        Args:
            args: Список аргументов команды (первый элемент - имя команды)

        Returns:
            Экземпляр команды

        Raises:
            InvalidCommandError: Если ввод некорректен для данной команды
        """
        pass

    @classmethod
    @abstractmethod
    def get_command_name(cls) -> str:
        """Получить имя команды, которое запускает данную команду."""
        pass


class SpecCommand(ExperimentCommand):
    """Общая часть команд, принимающих флаги эксперимента."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec

    @classmethod
    def _parse(cls, args: List[str], mode: str) -> ExperimentSpec:
        command_name = args[0]
        if command_name.lower() != cls.get_command_name():
            raise InvalidCommandError(f"Неверное имя команды: {command_name}")
        try:
            return parse_config(args[1:], mode=mode)
        except (ParseError, ConfigError) as e:
            raise InvalidCommandError(f"Ошибка конфигурации: {e}")

    @classmethod
    def from_input(cls, args: List[str]) -> "SpecCommand":
        return cls(cls._parse(args, cls.get_command_name()))


class ConvergeCommand(SpecCommand):
    """Команда исследования сходимости."""

    def execute(self, experiment: Experiment) -> Outcome:
        return experiment.converge(self.spec)

    @classmethod
    def get_command_name(cls) -> str:
        return "converge"


class EnergyCommand(SpecCommand):
    """Команда энергетического теста."""

    def execute(self, experiment: Experiment) -> Outcome:
        return experiment.energy(self.spec)

    @classmethod
    def get_command_name(cls) -> str:
        return "energy"


class RunCommand(SpecCommand):
    """Команда одиночного расчёта."""

    def execute(self, experiment: Experiment) -> Outcome:
        return experiment.single_run(self.spec)

    @classmethod
    def get_command_name(cls) -> str:
        return "run"


class ConfigCommand(SpecCommand):
    """Команда печати полностью разрешённой конфигурации в JSON."""

    def execute(self, experiment: Experiment) -> Outcome:
        return Outcome(0, emit_config(self.spec))

    @classmethod
    def from_input(cls, args: List[str]) -> "ConfigCommand":
        """Разобрать команду config <режим> [флаги...]."""
        if len(args) < 2:
            raise InvalidCommandError(
                "Некорректное значение: укажите режим (converge, energy, run)."
            )
        return cls(cls._parse(args, mode=None))

    @classmethod
    def get_command_name(cls) -> str:
        return "config"


class ExperimentCommandRegistry:
    """Реестр команд экспериментов."""

    def __init__(self):
        self._commands: Dict[str, Type[ExperimentCommand]] = {}
        self._register_default_commands()

    def _register_default_commands(self):
        """Зарегистрировать все команды по умолчанию."""
        self.register_command(ConvergeCommand)
        self.register_command(EnergyCommand)
        self.register_command(RunCommand)
        self.register_command(ConfigCommand)

    def register_command(self, command_class: Type[ExperimentCommand]):
        """Зарегистрировать класс команды."""
        command_name = command_class.get_command_name()
        self._commands[command_name] = command_class

    def is_experiment_command(self, command_name: str) -> bool:
        """Проверить, является ли имя команды командой эксперимента."""
        return command_name.lower() in self._commands

    def parse_args(self, args: Sequence[str]) -> ExperimentCommand:
        """
        Создать команду из уже разбитых аргументов.

        Raises:
            InvalidCommandError: Если команда неизвестна или аргументы некорректны
        """
        args = list(args)
        if not args:
            raise InvalidCommandError("Пустая команда")

        command_name = args[0].lower()
        if not self.is_experiment_command(command_name):
            raise InvalidCommandError(f"Неизвестная команда: {command_name}")

        command_class = self._commands[command_name]
        return command_class.from_input(args)

    def parse_command(self, user_input: str) -> ExperimentCommand:
        """
        Разобрать строку пользовательского ввода и создать команду.

        Raises:
            InvalidCommandError: Если команда недействительна
        """
        if not user_input.strip():
            raise InvalidCommandError("Пустая команда")

        try:
            args = shlex.split(user_input)
        except ValueError:
            raise InvalidCommandError("Некорректная команда. Попробуйте снова.")

        return self.parse_args(args)

    def get_experiment_commands(self) -> List[str]:
        """Получить список имён доступных команд."""
        return list(self._commands.keys())
