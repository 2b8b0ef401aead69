import sys
from functools import wraps
from pathlib import Path
from typing import Any, Callable, NamedTuple, Optional

import click
from rich.console import Console
from rich.logging import RichHandler

from teamltl.datatypes import (
    CommandReport,
    DecisionMode,
    Direction,
    ResourceLimitExceeded,
    ResourceLimits,
    Semantics,
    TeamLTLError,
    Verdict,
)
from teamltl.decide import model_check, satisfiable
from teamltl.evalcore import eval_audited, eval_lax, eval_strict
from teamltl.formula import classify, parse_formula, parse_tef_formula, render
from teamltl.ltlengine import parse_kripke
from teamltl.normform import eval_dnf, eval_quasiflat, to_dnf, to_quasiflat
from teamltl.package_config import (
    DEFAULT_AUDIT_BOUND,
    EXIT_FAILS,
    EXIT_HOLDS,
    EXIT_RESOURCE,
    EXIT_USAGE,
    LIMITS_ENV_NAME,
    REPORT_SCHEMA_VERSION,
)
from teamltl.package_logger import logger, set_verbosity
from teamltl.team import parse_team
from teamltl.teamctl import eval_tef, translate
from teamltl.ui import (
    Step,
    Workflow,
    render_disjuncts,
    render_fragment_info,
    render_verdict,
    verdict_word,
)
from teamltl.utils import load_limits


class CliContext(NamedTuple):
    console: Console
    err_console: Console
    json_output: bool
    limits_spec: Optional[str]

    def limits(self) -> ResourceLimits:
        limits = load_limits()
        if self.limits_spec:
            limits = ResourceLimits.from_string(self.limits_spec, base=limits)
        return limits


def report_errors(func: Callable) -> Callable:
    """Map teamltl errors to the CLI exit codes."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ResourceLimitExceeded as e:
            logger.error(f"{e}\nRaise the bound with {LIMITS_ENV_NAME} or --limits if the input is meant to be this large.")
            sys.exit(EXIT_RESOURCE)
        except (TeamLTLError, ValueError) as e:
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(EXIT_USAGE)

    return wrapper


# Workflow steps


def parse_formula_step(formula_text: str, tef: bool = False, **kwargs) -> dict[str, Any]:
    parse = parse_tef_formula if tef else parse_formula
    return dict(formula=parse(formula_text))


def load_team_step(formula, team_path: Path, **kwargs) -> dict[str, Any]:
    return dict(formula=formula, team=parse_team(team_path.read_text()))


def load_kripke_step(formula, kripke_path: Path, **kwargs) -> dict[str, Any]:
    return dict(formula=formula, kripke=parse_kripke(kripke_path.read_text()))


def run_workflow(obj: CliContext, steps: list[Step], **inputs) -> tuple[dict[str, Any], dict[str, float]]:
    workflow = Workflow(
        steps=steps,
        console=obj.err_console,
        logger=logger,
        quiet=obj.json_output,
        inputs=inputs,
    )
    output = workflow.run()
    return output, workflow.timings()


def finish(obj: CliContext, report: CommandReport, render_report: Callable[[], None]) -> None:
    if obj.json_output:
        click.echo(report.model_dump_json(indent=2))
    else:
        render_report()
    sys.exit(EXIT_FAILS if report.verdict is False else EXIT_HOLDS)


def verdict_report(command: str, verdict: Verdict, timings: dict[str, float]) -> CommandReport:
    witness = None
    if verdict.witness_team is not None:
        witness = [str(t) for t in verdict.witness_team]
    elif verdict.witness is not None:
        witness = str(verdict.witness)
    return CommandReport(
        schema_version=REPORT_SCHEMA_VERSION,
        command=command,
        verdict=verdict.holds,
        witness=witness,
        disjunct_index=verdict.disjunct_index,
        timings=timings,
        result=dict(
            stats=verdict.stats,
            diagnostics=[d.model_dump() for d in verdict.diagnostics],
        ),
    )


# Commands


formula_option = click.option("-f", "--formula", "formula_text", required=True, metavar="FORMULA", help="Formula in concrete syntax.")


def team_option(required: bool = False):
    return click.option(
        "--team",
        "team_path",
        required=required,
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        metavar="FILE",
        help="Team file: `trace NAME = STEPS / STEPS` and `multi NAME xK` lines.",
    )


jobs_option = click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1), help="Disjuncts checked in parallel.")
mode_option = click.option(
    "--mode",
    type=click.Choice([m.value for m in DecisionMode]),
    default=DecisionMode.DNF.value,
    show_default=True,
    help="Decision procedure: selection DNF, quasi-flat form, or plain LTL.",
)
diagnostics_option = click.option("--diagnostics", is_flag=True, help="Report every disjunct examined.")
dedupe_option = click.option("--dedupe", is_flag=True, help="Drop syntactically repeated disjuncts.")


@click.group(
    help="""Check asynchronous TeamLTL properties of finite teams of lasso traces.

Examples:\n
  teamltl classify -f "G (p or q)"\n
  teamltl eval --semantics lax --team ex1.team -f "G (p or q)"\n
  teamltl mc --kripke k.kripke -f "G p or G q" --mode dnf\n
  teamltl sat -f "~p" --mode quasiflat --json
"""
)
@click.version_option(package_name="teamltl", message="Running teamltl version %(version)s")
@click.option("--json", "json_output", is_flag=True, help="Print a machine-readable JSON report.")
@click.option("-v", "--verbose", is_flag=True, help="Log debug information to stderr.")
@click.option("--limits", "limits_spec", default=None, metavar="SPEC", help=f"Resource limits such as traces=6,pos=8,depth=10 (overrides {LIMITS_ENV_NAME}).")
@click.pass_context
def main(ctx: click.Context, json_output: bool, verbose: bool, limits_spec: Optional[str]) -> None:
    err_console = Console(stderr=True)
    if not any(isinstance(handler, RichHandler) for handler in logger.handlers):
        logger.addHandler(RichHandler(console=err_console, show_time=False))
    set_verbosity(verbose)
    ctx.obj = CliContext(
        console=Console(),
        err_console=err_console,
        json_output=json_output,
        limits_spec=limits_spec,
    )


@main.command(name="classify", help="Print the fragment information of a formula.")
@formula_option
@click.pass_obj
@report_errors
def classify_cmd(obj: CliContext, formula_text: str) -> None:
    output, timings = run_workflow(
        obj,
        [
            Step("Parsing formula", parse_formula_step),
            Step("Classifying", lambda formula, **kwargs: dict(info=classify(formula))),
        ],
        formula_text=formula_text,
        tef=True,
    )
    info = output["info"]
    report = CommandReport(schema_version=REPORT_SCHEMA_VERSION, command="classify", timings=timings, result=info.model_dump())
    finish(obj, report, lambda: render_fragment_info(info, obj.console))


def normal_form_command(name: str, title: str, build: Callable, evaluate: Callable):
    def normal_form_step(formula, dedupe: bool, team=None, **kwargs) -> dict[str, Any]:
        form = build(formula, dedupe=dedupe)
        holds = None if team is None else evaluate(team.support(), form)
        return dict(lines=form.lines(), holds=holds)

    @main.command(name=name, help=f"Print the {title.lower()} of a formula, optionally evaluated on a team.")
    @formula_option
    @dedupe_option
    @team_option()
    @click.pass_obj
    @report_errors
    def command(obj: CliContext, formula_text: str, dedupe: bool, team_path: Optional[Path]) -> None:
        steps = [Step("Parsing formula", parse_formula_step)]
        if team_path is not None:
            steps.append(Step("Loading team", load_team_step))
        steps.append(Step(f"Building {title.lower()}", normal_form_step))
        output, timings = run_workflow(obj, steps, formula_text=formula_text, team_path=team_path, dedupe=dedupe)

        lines, holds = output["lines"], output["holds"]
        report = CommandReport(
            schema_version=REPORT_SCHEMA_VERSION,
            command=name,
            verdict=holds,
            timings=timings,
            result=dict(disjuncts=lines),
        )

        def render_report():
            render_disjuncts(title, lines, obj.console)
            if holds is not None:
                obj.console.print(f"team satisfies normal form: {verdict_word(holds)}", highlight=False)

        finish(obj, report, render_report)

    return command


normal_form_command("dnf", "Disjunctive normal form", to_dnf, eval_dnf)
normal_form_command("quasiflat", "Quasi-flat normal form", to_quasiflat, eval_quasiflat)


def evaluate_step(formula, team, semantics: str, audit_bound: int, limits: ResourceLimits, **kwargs) -> dict[str, Any]:
    evaluate = eval_lax if Semantics(semantics) is Semantics.LAX else eval_strict
    return dict(holds=eval_audited(evaluate, team, formula, audit_bound, limits=limits))


@main.command(name="eval", help="Evaluate a formula on a team under the lax or strict semantics.")
@click.option("--semantics", type=click.Choice([s.value for s in Semantics]), required=True)
@team_option(required=True)
@formula_option
@click.option(
    "--audit-bound",
    default=DEFAULT_AUDIT_BOUND,
    show_default=True,
    type=click.IntRange(min=1),
    help="Re-evaluate with positions up to prefix + B * loop and require agreement.",
)
@click.pass_obj
@report_errors
def eval_cmd(obj: CliContext, semantics: str, team_path: Path, formula_text: str, audit_bound: int) -> None:
    output, timings = run_workflow(
        obj,
        [
            Step("Parsing formula", parse_formula_step),
            Step("Loading team", load_team_step),
            Step(f"Evaluating ({semantics})", evaluate_step),
        ],
        formula_text=formula_text,
        team_path=team_path,
        semantics=semantics,
        audit_bound=audit_bound,
        limits=obj.limits(),
    )
    holds = output["holds"]
    report = CommandReport(schema_version=REPORT_SCHEMA_VERSION, command="eval", verdict=holds, timings=timings)
    finish(obj, report, lambda: obj.console.print(verdict_word(holds), highlight=False))


def model_check_step(formula, kripke, mode: str, jobs: int, diagnostics: bool, dedupe: bool, **kwargs) -> dict[str, Any]:
    verdict = model_check(kripke, formula, DecisionMode(mode), jobs=jobs, diagnostics=diagnostics, dedupe=dedupe)
    return dict(verdict=verdict)


@main.command(name="mc", help="Model check a formula against every trace of a Kripke structure.")
@click.option(
    "--kripke",
    "kripke_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    metavar="FILE",
    help="Kripke file: `states:`, `init:`, `label` and `edge` lines.",
)
@formula_option
@mode_option
@jobs_option
@diagnostics_option
@dedupe_option
@click.pass_obj
@report_errors
def mc_cmd(
    obj: CliContext, kripke_path: Path, formula_text: str, mode: str, jobs: int, diagnostics: bool, dedupe: bool
) -> None:
    output, timings = run_workflow(
        obj,
        [
            Step("Parsing formula", parse_formula_step),
            Step("Loading Kripke structure", load_kripke_step),
            Step(f"Model checking ({mode})", model_check_step),
        ],
        formula_text=formula_text,
        kripke_path=kripke_path,
        mode=mode,
        jobs=jobs,
        diagnostics=diagnostics,
        dedupe=dedupe,
    )
    verdict = output["verdict"]
    finish(obj, verdict_report("mc", verdict, timings), lambda: render_verdict(verdict, obj.console))


def satisfiability_step(
    formula, mode: str, jobs: int, diagnostics: bool, dedupe: bool, limits: ResourceLimits, **kwargs
) -> dict[str, Any]:
    verdict = satisfiable(formula, DecisionMode(mode), jobs=jobs, diagnostics=diagnostics, limits=limits, dedupe=dedupe)
    return dict(verdict=verdict)


@main.command(name="sat", help="Decide whether some nonempty team satisfies a formula.")
@formula_option
@mode_option
@jobs_option
@diagnostics_option
@dedupe_option
@click.pass_obj
@report_errors
def sat_cmd(obj: CliContext, formula_text: str, mode: str, jobs: int, diagnostics: bool, dedupe: bool) -> None:
    output, timings = run_workflow(
        obj,
        [
            Step("Parsing formula", parse_formula_step),
            Step(f"Deciding satisfiability ({mode})", satisfiability_step),
        ],
        formula_text=formula_text,
        mode=mode,
        jobs=jobs,
        diagnostics=diagnostics,
        dedupe=dedupe,
        limits=obj.limits(),
    )
    verdict = output["verdict"]
    finish(obj, verdict_report("sat", verdict, timings), lambda: render_verdict(verdict, obj.console))


@main.command(name="translate", help="Translate between the left-flat tef fragment and left-flat TeamLTL.")
@formula_option
@click.option("--direction", type=click.Choice([d.value for d in Direction]), required=True)
@click.pass_obj
@report_errors
def translate_cmd(obj: CliContext, formula_text: str, direction: str) -> None:
    target = Direction(direction)
    output, timings = run_workflow(
        obj,
        [
            Step("Parsing formula", parse_formula_step),
            Step("Translating", lambda formula, **kwargs: dict(translated=render(translate(formula, target)))),
        ],
        formula_text=formula_text,
        tef=target is Direction.TO_LTL,
    )
    translated = output["translated"]
    report = CommandReport(schema_version=REPORT_SCHEMA_VERSION, command="translate", timings=timings, result=translated)
    finish(obj, report, lambda: obj.console.print(translated, highlight=False, markup=False))


@main.command(name="tefeval", help="Evaluate a tef formula on a multiteam via its configuration graph.")
@team_option(required=True)
@formula_option
@click.pass_obj
@report_errors
def tefeval_cmd(obj: CliContext, team_path: Path, formula_text: str) -> None:
    output, timings = run_workflow(
        obj,
        [
            Step("Parsing formula", parse_formula_step),
            Step("Loading team", load_team_step),
            Step(
                "Exploring configurations",
                lambda formula, team, limits, **kwargs: dict(holds=eval_tef(team, formula, limits=limits)),
            ),
        ],
        formula_text=formula_text,
        team_path=team_path,
        tef=True,
        limits=obj.limits(),
    )
    holds = output["holds"]
    report = CommandReport(schema_version=REPORT_SCHEMA_VERSION, command="tefeval", verdict=holds, timings=timings)
    finish(obj, report, lambda: obj.console.print(verdict_word(holds), highlight=False))


if __name__ == "__main__":
    main()
