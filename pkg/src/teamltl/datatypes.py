from enum import Enum
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from teamltl.package_config import (
    DEFAULT_MAX_CONFIGURATIONS,
    DEFAULT_MAX_DEPTH,
    DEFAULT_MAX_POSITIONS,
    DEFAULT_MAX_TRACES,
)


class TeamLTLError(Exception):
    """Base class of every error raised by teamltl."""


class FormulaSyntaxError(TeamLTLError, ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class FragmentViolation(TeamLTLError, ValueError):
    """The formula is outside the fragment an operation is defined on."""


class ModelFormatError(TeamLTLError, ValueError):
    def __init__(self, message: str, line_no: Optional[int] = None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}{message}")
        self.line_no = line_no


class NotLeftTotal(ModelFormatError):
    def __init__(self, state: str):
        super().__init__(f"state {state} has no outgoing edge")
        self.state = state


class ResourceLimitExceeded(TeamLTLError):
    def __init__(self, limit: str, value: int, bound: int):
        super().__init__(f"resource limit '{limit}' exceeded: {value} > {bound}")
        self.limit = limit
        self.value = value
        self.bound = bound


class WitnessVerificationError(TeamLTLError, AssertionError):
    """An internally produced witness failed re-verification."""


class AuditMismatch(TeamLTLError):
    """Evaluation with an extended position range disagreed with the canonical one."""


class Semantics(Enum):
    LAX = "lax"
    STRICT = "strict"


class DecisionMode(Enum):
    DNF = "dnf"
    QUASIFLAT = "quasiflat"
    LTL = "ltl"


class Direction(Enum):
    TO_LTL = "to-ltl"
    TO_CTL = "to-ctl"


class ResourceLimits(BaseModel):
    traces: int = Field(default=DEFAULT_MAX_TRACES, gt=0)
    pos: int = Field(default=DEFAULT_MAX_POSITIONS, gt=0)
    depth: int = Field(default=DEFAULT_MAX_DEPTH, gt=0)
    configs: int = Field(default=DEFAULT_MAX_CONFIGURATIONS, gt=0)

    model_config = ConfigDict(frozen=True, extra="forbid")

    @classmethod
    def from_string(cls, spec: str, base: Optional["ResourceLimits"] = None):
        """Parse `traces=6,pos=8,depth=10` on top of `base` (defaults when omitted)."""
        values = (base or cls()).model_dump()
        for item in filter(None, (part.strip() for part in spec.split(","))):
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep or key not in values:
                raise ValueError(f"Invalid resource limit entry '{item}'")
            try:
                values[key] = int(raw)
            except ValueError as e:
                raise ValueError(f"Resource limit {key} must be an integer, got '{raw}'") from e
        return cls(**values)


class FragmentInfo(BaseModel):
    is_ltl: bool
    is_left_flat: bool
    is_left_dc: bool
    bor_count: int = Field(ge=0)
    has_bneg: bool
    has_atoms: bool
    has_tef: bool = False
    size: int = Field(ge=1)

    @model_validator(mode="after")
    def check_fragment_chain(self):
        if self.is_ltl and not self.is_left_flat:
            raise ValueError("an LTL formula is always left-flat")
        if self.is_left_flat and not self.is_left_dc:
            raise ValueError("a left-flat formula is always left-downward-closed")
        return self


class DisjunctDiagnostic(BaseModel):
    index: int
    disjunct: str
    holds: bool
    counterexample: Optional[str] = None
    witnesses: List[str] = []


class Verdict(BaseModel):
    """Outcome of a model-checking or satisfiability check.

    `witness` is the counterexample lasso for a failed model check or the model
    lasso for a satisfiable LTL formula. Team-level satisfiability fills
    `witness_team` instead.
    """

    holds: bool
    witness: Optional[Any] = None
    witness_team: Optional[List[Any]] = None
    disjunct_index: Optional[int] = None
    diagnostics: List[DisjunctDiagnostic] = []
    stats: dict[str, int] = {}

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("disjunct_index")
    @classmethod
    def check_index(cls, value):
        if value is not None and value < 0:
            raise ValueError("disjunct_index must be nonnegative")
        return value


class KripkeStructure(BaseModel):
    states: List[str]
    edges: dict[str, List[str]]
    labels: dict[str, frozenset[str]]
    initial: str

    model_config = ConfigDict(frozen=True)

    def check_structure(self) -> "KripkeStructure":
        """Raise ModelFormatError or NotLeftTotal unless the structure is well-formed."""
        known = set(self.states)
        if self.initial not in known:
            raise ModelFormatError(f"initial state {self.initial} is not declared")
        for source, targets in self.edges.items():
            for state in (source, *targets):
                if state not in known:
                    raise ModelFormatError(f"edge mentions undeclared state {state}")
        for state in self.states:
            if not self.edges.get(state):
                raise NotLeftTotal(state)
        for state in self.states:
            if state not in self.labels:
                raise ModelFormatError(f"state {state} has no label")
        return self

    def successors(self, state: str) -> List[str]:
        return sorted(set(self.edges.get(state, [])))

    def label(self, state: str) -> frozenset[str]:
        return self.labels[state]


class CommandReport(BaseModel):
    """Stable machine-readable shape of every CLI report."""

    schema_version: int
    command: str
    verdict: Optional[bool] = None
    witness: Optional[Any] = None
    disjunct_index: Optional[int] = None
    timings: dict[str, float] = {}
    result: Optional[Any] = None
