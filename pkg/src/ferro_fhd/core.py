import os
from typing import Any, Dict, List

from prettytable import PrettyTable

from .constants import (
    CONVERGE_FILE,
    ENERGY_COLUMNS,
    ENERGY_FILE,
    ENERGY_SLACK,
    ERROR_COLUMNS,
    RUN_FILE,
)
from .decorators import confirm_action, handle_fhd_errors, log_time
from .diagnostics import convergence_orders, energy_law, errors
from .errors import (
    ConfigError,
    ExampleError,
    FhdError,
    MeshError,
    SingularMatrixError,
    SolverError,
    SpaceError,
    StepError,
)
from .mms import get_problem
from .models import ExperimentSpec, Outcome, StepRecord
from .stepper import run
from .utils import format_float, save_csv, save_json

__all__ = [
    "ConfigError",
    "ExampleError",
    "Experiment",
    "FhdError",
    "MeshError",
    "SingularMatrixError",
    "SolverError",
    "SpaceError",
    "StepError",
]


def _dt_label(rule: str) -> str:
    return str(rule).replace(" ", "").replace("/", "-")


def _overwrites_results(experiment: "Experiment", spec: ExperimentSpec) -> bool:
    """Есть ли уже файлы результатов, которые будут перезаписаны."""
    if spec.force:
        return False
    return any(os.path.exists(path) for path in experiment.output_files(spec))


class Experiment:
    """Оркестратор экспериментов: сходимость, энергия, одиночный расчёт."""

    def __init__(self, verbose: bool = True):
        """
        Инициализировать оркестратор.

        Args:
            verbose: Печатать ли строку диагностики после каждого шага
        """
        self.verbose = verbose

    def output_files(self, spec: ExperimentSpec) -> List[str]:
        """Пути файлов, которые запишет эксперимент, в порядке записи."""
        out = spec.out_dir
        if spec.mode == "converge":
            stem = os.path.join(out, CONVERGE_FILE.format(example=spec.example))
            return [f"{stem}.csv", f"{stem}.json"]
        if spec.mode == "energy":
            return [
                os.path.join(
                    out,
                    ENERGY_FILE.format(
                        example=spec.example, K=K, dt=_dt_label(rule)
                    ) + ".csv",
                )
                for K in spec.k_list
                for rule in spec.dt_rules
            ]
        return [
            os.path.join(out, RUN_FILE.format(example=spec.example, K=K) + ".json")
            for K in spec.k_list
        ]

    def _sink(self, record: StepRecord) -> None:
        if not self.verbose:
            return
        energy = record.energy
        print(
            f"  n={energy.n:<5d} t={format_float(energy.t):<10} "
            f"E={format_float(energy.E):<12} F={format_float(energy.F)}"
        )

    def _problem(self, spec: ExperimentSpec, need_exact: bool):
        problem = get_problem(spec.example, spec.params)
        if need_exact and not problem.has_exact:
            raise ExampleError(f"у примера {spec.example} нет точного решения")
        return problem

    def run(self, spec: ExperimentSpec) -> Outcome:
        """Выполнить эксперимент в режиме spec.mode."""
        handlers = {
            "converge": self.converge,
            "energy": self.energy,
            "run": self.single_run,
        }
        return handlers[spec.mode](spec)

    @handle_fhd_errors
    @confirm_action("перезапись результатов", when=_overwrites_results)
    @log_time
    def converge(self, spec: ExperimentSpec) -> Outcome:
        """
        Исследование сходимости: расчёт до T на каждой сетке из spec.k_list.

        Пишет CSV (строка на K и строки порядков) и JSON-двойник.

        Args:
            spec: Спецификация в режиме converge

        Returns:
            Outcome с таблицей ошибок и путями файлов
        """
        problem = self._problem(spec, need_exact=True)
        rule = spec.dt_rules[0]
        rows: List[Dict[str, Any]] = []

        for K in spec.k_list:
            config = spec.run_config(K, rule)
            if self.verbose:
                print(f"K={K}, dt={format_float(config.dt)}, N={config.n_steps}")
            result = run(config, problem, sink=self._sink)
            disc, state = result.discretization, result.state
            record = errors(disc, state, problem.exact, state.t)
            rows.append({
                "K": K,
                "h": disc.mesh.h,
                "dt": config.dt,
                "errors": record.to_dict(),
                "initial_residuals": result.initial_residuals,
                "final_residuals": dict(result.records[-1].residuals),
            })

        orders: Dict[str, Dict[str, float]] = {"lsq": {}, "last": {}}
        if len(rows) >= 2:
            for column in ERROR_COLUMNS:
                pairs = [(row["h"], row["errors"][column]) for row in rows]
                try:
                    slope, last = convergence_orders(pairs)
                except FhdError:
                    slope = last = float("nan")
                orders["lsq"][column] = slope
                orders["last"][column] = last

        csv_path, json_path = self.output_files(spec)
        header = ["K", "h", "dt", *ERROR_COLUMNS]
        csv_rows = [
            [row["K"], row["h"], row["dt"], *(row["errors"][c] for c in ERROR_COLUMNS)]
            for row in rows
        ]
        for name, values in orders.items():
            if values:
                csv_rows.append(
                    [f"order_{name}", "", "", *(values[c] for c in ERROR_COLUMNS)]
                )
        save_csv(csv_path, header, csv_rows)
        save_json(json_path, {"spec": spec.to_dict(), "rows": rows, "orders": orders})

        table = PrettyTable()
        table.field_names = ["K", *ERROR_COLUMNS]
        for row in csv_rows:
            table.add_row(
                [row[0], *(c if c == "" else format_float(c) for c in row[3:])]
            )
        return Outcome(
            0,
            f"{table}\nРезультаты сохранены: {csv_path}, {json_path}",
            [csv_path, json_path],
        )

    @handle_fhd_errors
    @confirm_action("перезапись результатов", when=_overwrites_results)
    @log_time
    def energy(self, spec: ExperimentSpec) -> Outcome:
        """
        Энергетический тест: ряды (n, t, E, F) для каждой пары (K, dt).

        Args:
            spec: Спецификация в режиме energy

        Returns:
            Outcome со сводкой убывания энергии и путями файлов
        """
        problem = self._problem(spec, need_exact=False)
        paths = iter(self.output_files(spec))
        files = []
        defects = []

        table = PrettyTable()
        table.field_names = ["K", "dt", "N", "E0", "EN", "max рост E", "дефект закона"]
        for K in spec.k_list:
            for rule in spec.dt_rules:
                config = spec.run_config(K, rule)
                if self.verbose:
                    print(f"K={K}, dt={format_float(config.dt)}, N={config.n_steps}")
                result = run(config, problem, sink=self._sink)
                series = [record.energy for record in result.records]
                path = next(paths)
                save_csv(
                    path,
                    ENERGY_COLUMNS,
                    [(e.n, e.t, e.E, e.F) for e in series],
                )
                files.append(path)
                law = energy_law(series, config.dt)
                defects.append(law["law_defect"])
                table.add_row([
                    K,
                    rule,
                    config.n_steps,
                    format_float(series[0].E),
                    format_float(series[-1].E),
                    format_float(law["max_increase"]),
                    format_float(law["law_defect"]),
                ])

        message = f"{table}\nРезультаты сохранены: {', '.join(files)}"
        if problem.forcing is None and spec.strict_energy:
            if max(defects) > ENERGY_SLACK:
                message += "\nВнимание: энергетическое неравенство нарушено."
        return Outcome(0, message, files)

    @handle_fhd_errors
    @confirm_action("перезапись результатов", when=_overwrites_results)
    @log_time
    def single_run(self, spec: ExperimentSpec) -> Outcome:
        """
        Одиночный расчёт до T для каждого K; диагностика последнего слоя в JSON.

        Args:
            spec: Спецификация в режиме run

        Returns:
            Outcome с ошибками последнего слоя и путями файлов
        """
        problem = self._problem(spec, need_exact=True)
        rule = spec.dt_rules[0]
        files = []

        table = PrettyTable()
        table.field_names = ["K", "E", "F", *ERROR_COLUMNS]
        for K, path in zip(spec.k_list, self.output_files(spec)):
            config = spec.run_config(K, rule)
            result = run(config, problem, sink=self._sink)
            disc, state = result.discretization, result.state
            final = result.records[-1]
            record = errors(disc, state, problem.exact, state.t)
            save_json(path, {
                "spec": spec.to_dict(),
                "K": K,
                "h": disc.mesh.h,
                "dt": config.dt,
                "n_steps": config.n_steps,
                "t": state.t,
                "errors": record.to_dict(),
                "energy": final.energy.to_dict(),
                "residuals": dict(final.residuals),
                "initial_residuals": result.initial_residuals,
                "steps": [step.to_dict() for step in result.records],
            })
            files.append(path)
            table.add_row([
                K,
                format_float(final.energy.E),
                format_float(final.energy.F),
                *(format_float(value) for value in record.values()),
            ])
        return Outcome(0, f"{table}\nРезультаты сохранены: {', '.join(files)}", files)
