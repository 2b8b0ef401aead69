import time
from enum import Enum
from logging import Logger
from typing import Any, Callable, Optional

from rich.console import Console
from rich.live import Live
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from teamltl.datatypes import DisjunctDiagnostic, FragmentInfo, Verdict


class StepState(Enum):
    TODO = "TODO"
    PENDING = "PENDING"
    DONE = "DONE"
    FAIL = "FAIL"


class Step:
    def __init__(self, name: str, func: Callable[..., dict]):
        self.name = name
        self.func = func
        self.state = StepState.TODO
        self.output = {}
        self.elapsed_ms = 0.0

    def set_state(self, state: StepState):
        self.state = state

    def run(self, **kwargs) -> dict:
        start = time.perf_counter()
        try:
            return self.func(**kwargs) or {}
        finally:
            self.elapsed_ms = (time.perf_counter() - start) * 1000

    def render(self):
        table = Table.grid(padding=(0, 1))
        table.add_column(width=4)  # Column for symbol/spinner
        table.add_column(ratio=1)  # Column for label

        if self.state == StepState.TODO:
            table.add_row(Text("[ ]", style="grey50"), Text(self.name, style="grey50"))
        elif self.state == StepState.PENDING:
            table.add_row(Text("[~]", style="yellow"), Text(self.name, style="yellow"))
        elif self.state == StepState.DONE:
            table.add_row(Text("[✔]", style="bold green"), Text(self.name, style="bold green"))
        elif self.state == StepState.FAIL:
            table.add_row(Text("[✘]", style="bold red"), Text(self.name, style="bold red"))

        return table


class Workflow:
    def __init__(
        self,
        steps: list[Step],
        console: Console,
        logger: Logger,
        quiet: bool = False,
        inputs: Optional[dict] = None,
    ):
        """
        Creates a workflow of linear steps to be executed in order.
        When `run` is called, the outputs of each step are passed as inputs to the next step along with the
        global `inputs` passed to every step.
        Args:
            steps: the steps, run in order
            console: where progress is displayed (stderr, never the report stream)
            inputs: any kwargs to pass to each executor
            quiet: if True, show no progress at all
        """
        self.steps = steps
        self.inputs = inputs or {}
        self.console = console
        self.logger = logger
        self.quiet = quiet

    def render(self):
        table = Table.grid(padding=(0, 1))
        for step in self.steps:
            table.add_row(step.render())
        return Panel(table, title="teamltl", border_style="cyan")

    def timings(self) -> dict[str, float]:
        return {step.name: round(step.elapsed_ms, 3) for step in self.steps if step.state == StepState.DONE}

    def run(self) -> dict[str, Any]:
        if self.quiet or not self.console.is_terminal:
            return self._run_plain()
        return self._run_live()

    def _run_step(self, step: Step, prev_output: dict) -> dict:
        try:
            # Merge previous outputs and global args
            output = step.run(**{**prev_output, **self.inputs})
        except Exception:
            step.set_state(StepState.FAIL)
            self.logger.debug(f"Step '{step.name}' failed")
            raise
        step.output = output
        step.set_state(StepState.DONE)
        return output

    def _run_live(self) -> dict[str, Any]:
        with Live(self.render(), console=self.console, refresh_per_second=10, transient=True) as live:
            prev_output = {}
            for step in self.steps:
                step.set_state(StepState.PENDING)
                live.update(self.render())
                try:
                    prev_output = self._run_step(step, prev_output)
                finally:
                    live.update(self.render())
        return prev_output

    def _run_plain(self) -> dict[str, Any]:
        prev_output = {}
        for i, step in enumerate(self.steps, 1):
            prev_output = self._run_step(step, prev_output)
            if not self.quiet:
                self.console.print(f"[{i}/{len(self.steps)}] {step.name} ✓", highlight=False, markup=False)
        return prev_output


# Reports


def verdict_word(holds: bool) -> str:
    return "true" if holds else "false"


def render_fragment_info(info: FragmentInfo, console: Console) -> None:
    table = Table(title="Fragment", show_header=False)
    table.add_column("property")
    table.add_column("value")
    for key, value in info.model_dump().items():
        table.add_row(key, str(value).lower())
    console.print(table)


def render_disjuncts(title: str, lines: list[str], console: Console) -> None:
    table = Table(title=f"{title} ({len(lines)} disjuncts)")
    table.add_column("#", justify="right")
    table.add_column("disjunct", overflow="fold")
    for index, line in enumerate(lines):
        table.add_row(str(index), Text(line))
    console.print(table)


def render_diagnostics(diagnostics: list[DisjunctDiagnostic], console: Console) -> None:
    table = Table(title="Disjuncts examined")
    table.add_column("#", justify="right")
    table.add_column("disjunct", overflow="fold")
    table.add_column("holds")
    table.add_column("evidence", overflow="fold")
    for diagnostic in diagnostics:
        evidence = diagnostic.counterexample or ", ".join(diagnostic.witnesses)
        table.add_row(
            str(diagnostic.index),
            Text(diagnostic.disjunct),
            Text(verdict_word(diagnostic.holds), style="green" if diagnostic.holds else "red"),
            Text(evidence or ""),
        )
    console.print(table)


def render_verdict(verdict: Verdict, console: Console) -> None:
    style = "bold green" if verdict.holds else "bold red"
    console.print(Text(verdict_word(verdict.holds), style=style))
    if verdict.disjunct_index is not None:
        console.print(f"disjunct: {verdict.disjunct_index}", highlight=False, markup=False)
    if verdict.witness is not None:
        console.print(f"witness: {verdict.witness}", highlight=False, markup=False)
    if verdict.witness_team is not None:
        console.print("witness team:", highlight=False, markup=False)
        for t in verdict.witness_team:
            console.print(f"  {t}", highlight=False, markup=False)
    if verdict.diagnostics:
        render_diagnostics(verdict.diagnostics, console)
