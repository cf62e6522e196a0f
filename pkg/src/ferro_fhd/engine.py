import shlex
from typing import List, Optional

import prompt

from .commands import ExperimentCommandRegistry, InvalidCommandError
from .core import Experiment
from .models import Outcome


def print_welcome():
    """Prints the welcome message with all available commands."""
    print("\n***Феррожидкость: смешанная МКЭ-схема***")
    print("\nЭксперименты:")
    print(
        "<command> converge [--example 1|2] [--k 4,8,16] [--dt 1/K] [--T 1] "
        "- исследование сходимости"
    )
    print(
        "<command> energy [--example 3] [--k 16] [--dt 1/16,1/32,1/64] "
        "[--strict-energy] - энергетический тест"
    )
    print("<command> run [--example 2] [--k 8] [--T 2] - одиночный расчёт")
    print("<command> config <режим> [флаги...] - показать итоговую конфигурацию")
    print("\nОбщие флаги:")
    print(
        "--sweeps M, --out DIR, --solver direct|iterative, --solver-tol TOL, "
        "--max-iter N, --config FILE, --force"
    )
    print(
        "--rho, --kappa, --eta, --zeta, --mu0, --sigma, --eta-prime, "
        "--lambda-prime, --tau, --chi0 - параметры модели"
    )
    print(
        "--free-h-normal, --constrain-edge-tangential, --no-lift - "
        "варианты граничных условий"
    )
    print("\nОбщие команды:")
    print("<command> exit - выход из программы")
    print("<command> help - справочная информация\n")


def print_help():
    """Prints the help message for the current mode."""
    print_welcome()


def execute(
    args: List[str],
    experiment: Optional[Experiment] = None,
    registry: Optional[ExperimentCommandRegistry] = None,
) -> Outcome:
    """
    Выполнить одну команду, заданную списком аргументов.

    Некорректная команда даёт Outcome с кодом 2.
    """
    experiment = experiment or Experiment()
    registry = registry or ExperimentCommandRegistry()
    try:
        command = registry.parse_args(args)
    except InvalidCommandError as e:
        return Outcome(2, str(e))
    return command.execute(experiment)


def run(argv: Optional[List[str]] = None) -> int:
    """
    Main function: one-shot command from argv or the interactive shell.

    Returns:
        Exit code of the last executed command
    """
    if argv:
        if argv[0].lower() == "help":
            print_help()
            return 0
        outcome = execute(argv)
        print(outcome.message)
        return outcome.code

    print_welcome()

    experiment = Experiment()
    command_registry = ExperimentCommandRegistry()
    code = 0

    while True:
        user_input = prompt.string("\n>>>Введите команду: ")

        if not user_input.strip():
            continue

        try:
            args = shlex.split(user_input)
        except ValueError:
            print("Некорректная команда. Попробуйте снова.")
            continue

        if not args:
            continue

        command_name = args[0].lower()

        if command_name == "exit":
            break
        elif command_name == "help":
            print_help()
        elif command_registry.is_experiment_command(command_name):
            outcome = execute(args, experiment, command_registry)
            code = outcome.code
            print(outcome.message)
        else:
            available = ", ".join(command_registry.get_experiment_commands())
            print(f"Функции {command_name} нет. Доступные команды: {available}.")

    return code
