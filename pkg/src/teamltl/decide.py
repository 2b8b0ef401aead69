"""Team-level model checking and satisfiability.

The Boolean-disjunction fragment is decided disjunct by disjunct straight from
the selection stream, so only the disjuncts of the current window are ever
built. The left-downward-closed fragment goes through the quasi-flat normal
form, which is materialized up front.
"""

from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from threading import Lock
from typing import Any, Callable, Iterable, Iterator, NamedTuple, Optional

from teamltl.datatypes import (
    DecisionMode,
    DisjunctDiagnostic,
    KripkeStructure,
    ResourceLimitExceeded,
    ResourceLimits,
    Verdict,
    WitnessVerificationError,
)
from teamltl.evalcore import eval_lax
from teamltl.formula import Formula, and_, dual, render
from teamltl.ltlengine import mc_ltl, sat_ltl
from teamltl.normform import QuasiFlatDisjunct, SelectionCursor, to_quasiflat
from teamltl.package_logger import logger
from teamltl.team import LassoTrace, sorted_traces


class _Outcome(NamedTuple):
    holds: bool
    witness: Any
    diagnostic: DisjunctDiagnostic


class _Residency:
    """Disjuncts pulled from the stream whose check has not finished yet."""

    def __init__(self):
        self.current = 0
        self.peak = 0
        self._lock = Lock()

    def track(self, items: Iterator[tuple[int, Any]]) -> Iterator[tuple[int, Any]]:
        for item in items:
            with self._lock:
                self.current += 1
                self.peak = max(self.peak, self.current)
            yield item

    def release(self) -> None:
        with self._lock:
            self.current -= 1


def _decide_disjuncts(
    items: Iterator[tuple[int, Any]],
    check: Callable[[tuple[int, Any]], _Outcome],
    jobs: int = 1,
    diagnostics: bool = False,
) -> Verdict:
    """Check disjuncts in order, `jobs` at a time; the least holding index wins."""
    if jobs < 1:
        raise ValueError("jobs must be at least 1")
    stats = {"disjuncts_checked": 0, "peak_resident": 0}
    residency = _Residency()
    tracked = residency.track(items)

    def run(item: tuple[int, Any]) -> _Outcome:
        try:
            return check(item)
        finally:
            residency.release()

    collected: list[DisjunctDiagnostic] = []
    first_witness = None
    executor = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    mapper = executor.map if executor else map
    try:
        while window := list(islice(tracked, jobs)):
            for outcome in mapper(run, window):
                stats["disjuncts_checked"] += 1
                stats["peak_resident"] = residency.peak
                if diagnostics:
                    collected.append(outcome.diagnostic)
                if outcome.holds:
                    return Verdict(
                        holds=True,
                        witness=outcome.witness,
                        disjunct_index=outcome.diagnostic.index,
                        diagnostics=collected,
                        stats=stats,
                    )
                if first_witness is None:
                    first_witness = outcome.witness
    finally:
        if executor:
            executor.shutdown(cancel_futures=True)
    return Verdict(holds=False, witness=first_witness, diagnostics=collected, stats=stats)


def _first_occurrences(disjuncts: Iterable[Formula]) -> Iterator[Formula]:
    seen = set()
    for alpha in disjuncts:
        if alpha not in seen:
            seen.add(alpha)
            yield alpha


def _verify_team(team: list[LassoTrace], f: Formula, limits: Optional[ResourceLimits]) -> None:
    try:
        verified = eval_lax(team, f, limits=limits)
    except ResourceLimitExceeded as e:
        logger.warning(f"Skipping witness verification for '{render(f)}': {e}")
        return
    if not verified:
        shown = ", ".join(t.omega() for t in team)
        raise WitnessVerificationError(f"witness team {{{shown}}} does not satisfy '{render(f)}'")


# Boolean-disjunction fragment


def mc_team_dnf(
    kripke: KripkeStructure, f: Formula, jobs: int = 1, diagnostics: bool = False, dedupe: bool = False
) -> Verdict:
    """Traces(K) satisfies `f` iff every trace of K satisfies some single selection disjunct.

    With `dedupe`, repeated selections are skipped and indices count distinct disjuncts.
    """
    cursor = SelectionCursor(f)

    def check(item: tuple[int, Formula]) -> _Outcome:
        index, alpha = item
        verdict = mc_ltl(kripke, alpha)
        logger.debug(f"disjunct {index} '{render(alpha)}': {'holds' if verdict.holds else 'refuted'}")
        return _Outcome(
            verdict.holds,
            verdict.witness,
            DisjunctDiagnostic(
                index=index,
                disjunct=render(alpha),
                holds=verdict.holds,
                counterexample=None if verdict.witness is None else str(verdict.witness),
            ),
        )

    disjuncts = _first_occurrences(cursor) if dedupe else cursor
    verdict = _decide_disjuncts(enumerate(disjuncts), check, jobs, diagnostics)
    verdict.stats["disjuncts_total"] = len(cursor)
    return verdict


def sat_team_dnf(
    f: Formula,
    jobs: int = 1,
    diagnostics: bool = False,
    limits: Optional[ResourceLimits] = None,
    dedupe: bool = False,
) -> Verdict:
    """Satisfiable iff some selection disjunct is LTL-satisfiable; the witness is a singleton team."""
    cursor = SelectionCursor(f)

    def check(item: tuple[int, Formula]) -> _Outcome:
        index, alpha = item
        verdict = sat_ltl(alpha)
        logger.debug(f"disjunct {index} '{render(alpha)}': {'satisfiable' if verdict.holds else 'unsatisfiable'}")
        return _Outcome(
            verdict.holds,
            verdict.witness,
            DisjunctDiagnostic(
                index=index,
                disjunct=render(alpha),
                holds=verdict.holds,
                witnesses=[] if verdict.witness is None else [str(verdict.witness)],
            ),
        )

    disjuncts = _first_occurrences(cursor) if dedupe else cursor
    verdict = _decide_disjuncts(enumerate(disjuncts), check, jobs, diagnostics)
    verdict.stats["disjuncts_total"] = len(cursor)
    if verdict.holds:
        verdict.witness_team = [verdict.witness]
        _verify_team(verdict.witness_team, f, limits)
    return verdict


# Left-downward-closed fragment


def mc_team_quasiflat(
    kripke: KripkeStructure, f: Formula, jobs: int = 1, diagnostics: bool = False, dedupe: bool = False
) -> Verdict:
    """Some disjunct has its flat part valid on K and a trace of K for each existential part."""
    qf = to_quasiflat(f, dedupe=dedupe)

    def check(item: tuple[int, QuasiFlatDisjunct]) -> _Outcome:
        index, disjunct = item
        diagnostic = DisjunctDiagnostic(index=index, disjunct=str(disjunct), holds=False)
        flat = mc_ltl(kripke, disjunct.alpha)
        if not flat.holds:
            diagnostic.counterexample = str(flat.witness)
            return _Outcome(False, flat.witness, diagnostic)
        for beta in disjunct.betas:
            # a counterexample to the dual is a trace of K satisfying beta
            refuted = mc_ltl(kripke, dual(beta))
            if refuted.holds:
                logger.debug(f"disjunct {index}: no trace satisfies '{render(beta)}'")
                return _Outcome(False, None, diagnostic)
            diagnostic.witnesses.append(str(refuted.witness))
        diagnostic.holds = True
        return _Outcome(True, None, diagnostic)

    verdict = _decide_disjuncts(enumerate(qf.disjuncts), check, jobs, diagnostics)
    verdict.stats["disjuncts_total"] = len(qf.disjuncts)
    return verdict


def sat_team_quasiflat(
    f: Formula,
    jobs: int = 1,
    diagnostics: bool = False,
    limits: Optional[ResourceLimits] = None,
    dedupe: bool = False,
) -> Verdict:
    """Some disjunct has alpha & beta_j satisfiable for every j (alpha alone when there is no beta)."""
    qf = to_quasiflat(f, dedupe=dedupe)

    def check(item: tuple[int, QuasiFlatDisjunct]) -> _Outcome:
        index, disjunct = item
        diagnostic = DisjunctDiagnostic(index=index, disjunct=str(disjunct), holds=False)
        goals = [and_(disjunct.alpha, beta) for beta in disjunct.betas] or [disjunct.alpha]
        team = set()
        for goal in goals:
            verdict = sat_ltl(goal)
            if not verdict.holds:
                logger.debug(f"disjunct {index}: '{render(goal)}' is unsatisfiable")
                return _Outcome(False, None, diagnostic)
            team.add(verdict.witness)
            diagnostic.witnesses.append(str(verdict.witness))
        diagnostic.holds = True
        return _Outcome(True, sorted_traces(team), diagnostic)

    verdict = _decide_disjuncts(enumerate(qf.disjuncts), check, jobs, diagnostics)
    verdict.stats["disjuncts_total"] = len(qf.disjuncts)
    if verdict.holds:
        verdict.witness_team = verdict.witness
        verdict.witness = None
        _verify_team(verdict.witness_team, f, limits)
    return verdict


# Dispatch


def model_check(
    kripke: KripkeStructure,
    f: Formula,
    mode: DecisionMode = DecisionMode.DNF,
    jobs: int = 1,
    diagnostics: bool = False,
    dedupe: bool = False,
) -> Verdict:
    match mode:
        case DecisionMode.LTL:
            return mc_ltl(kripke, f)
        case DecisionMode.QUASIFLAT:
            return mc_team_quasiflat(kripke, f, jobs=jobs, diagnostics=diagnostics, dedupe=dedupe)
    return mc_team_dnf(kripke, f, jobs=jobs, diagnostics=diagnostics, dedupe=dedupe)


def satisfiable(
    f: Formula,
    mode: DecisionMode = DecisionMode.DNF,
    jobs: int = 1,
    diagnostics: bool = False,
    limits: Optional[ResourceLimits] = None,
    dedupe: bool = False,
) -> Verdict:
    match mode:
        case DecisionMode.LTL:
            verdict = sat_ltl(f)
            if verdict.holds:
                verdict.witness_team = [verdict.witness]
            return verdict
        case DecisionMode.QUASIFLAT:
            return sat_team_quasiflat(f, jobs=jobs, diagnostics=diagnostics, limits=limits, dedupe=dedupe)
    return sat_team_dnf(f, jobs=jobs, diagnostics=diagnostics, limits=limits, dedupe=dedupe)
