"""
Pydantic data models for equipped Markov compacta
Documents (graph, cotransition and measure files), paths, tableaux and reports
"""

from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

from pydantic import (
    BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer,
    field_validator, model_validator,
)


def parse_rational(value: Any) -> Fraction:
    """
    Parse an exact rational

    Accepts Fraction, int, "a/b", "a" and exact decimals such as "0.6".
    Floats are rejected because they are not exact.
    """
    if isinstance(value, bool):
        raise ValueError("bool is not a rational")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ValueError(f"float {value!r} is not exact; pass a string like \"a/b\"")
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise ValueError(f"unsupported rational type: {type(value).__name__}")


def format_rational(value: Fraction) -> str:
    """Serialize a rational as "a/b" """
    return f"{value.numerator}/{value.denominator}"


Rational = Annotated[
    Fraction,
    BeforeValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str),
]


class ExactModel(BaseModel):
    """Base model allowing Fraction fields and "from" aliases"""
    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)


# Graphs

class GraphEdge(ExactModel):
    """Edge record of the JSON graph format"""
    from_: str = Field(alias="from")
    to: str
    mult: int = Field(default=1, ge=0)


class GraphDocument(ExactModel):
    """JSON graph format; level index is the array position"""
    levels: List[List[str]]
    edges: List[GraphEdge] = []
    mode: Literal["graph", "compactum"] = "graph"


class FinitePath(ExactModel):
    """Path prefix through consecutive levels, with parallel-edge choices"""
    model_config = ConfigDict(frozen=True)

    start_level: int = Field(default=0, ge=0)
    vertices: Tuple[str, ...] = Field(min_length=1)
    edge_choices: Tuple[int, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_edge_choices(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("edge_choices"):
            vertices = data.get("vertices") or ()
            data = {**data, "edge_choices": tuple(0 for _ in range(max(len(vertices) - 1, 0)))}
        return data

    @model_validator(mode="after")
    def _check_lengths(self) -> "FinitePath":
        if len(self.edge_choices) != len(self.vertices) - 1:
            raise ValueError("edge_choices must have one entry per step")
        if any(e < 0 for e in self.edge_choices):
            raise ValueError("edge choices must be nonnegative")
        return self

    @property
    def end_level(self) -> int:
        return self.start_level + len(self.vertices) - 1

    @property
    def endpoint(self) -> str:
        return self.vertices[-1]

    @property
    def steps(self) -> int:
        return len(self.edge_choices)

    def prefix(self, steps: int) -> "FinitePath":
        """First `steps` steps of the path"""
        return FinitePath(
            start_level=self.start_level,
            vertices=self.vertices[:steps + 1],
            edge_choices=self.edge_choices[:steps],
        )

    def extend(self, vertex: str, edge: int = 0) -> "FinitePath":
        return FinitePath(
            start_level=self.start_level,
            vertices=self.vertices + (vertex,),
            edge_choices=self.edge_choices + (edge,),
        )

    def label(self) -> str:
        """Compact text form: v0;v1;v2 with #e after a vertex reached by edge e > 0"""
        parts = [self.vertices[0]]
        for vertex, edge in zip(self.vertices[1:], self.edge_choices):
            parts.append(f"{vertex}#{edge}" if edge else vertex)
        return ";".join(parts)

    @classmethod
    def parse(cls, text: str, start_level: int = 0) -> "FinitePath":
        """Inverse of label()"""
        vertices, edges = [], []
        for i, token in enumerate(t.strip() for t in text.split(";")):
            if not token:
                raise ValueError(f"empty vertex in path {text!r}")
            vertex, _, edge = token.partition("#")
            vertices.append(vertex)
            if i > 0:
                edges.append(int(edge) if edge else 0)
            elif edge:
                raise ValueError("the first vertex carries no edge choice")
        return cls(start_level=start_level, vertices=tuple(vertices), edge_choices=tuple(edges))


class CocycleValue(ExactModel):
    """Value of a cocycle on a pair of paths; undefined for x/0"""
    value: Optional[Rational] = None
    undefined: bool = False

    @model_validator(mode="after")
    def _check_value(self) -> "CocycleValue":
        if self.undefined != (self.value is None):
            raise ValueError("exactly one of value and undefined must be set")
        if self.value is not None and self.value < 0:
            raise ValueError("cocycle values are nonnegative")
        return self

    @classmethod
    def of(cls, value: Fraction) -> "CocycleValue":
        return cls(value=value)

    @classmethod
    def undefined_flag(cls) -> "CocycleValue":
        return cls(undefined=True)

    @property
    def is_defined(self) -> bool:
        return not self.undefined

    def __str__(self) -> str:
        return "undefined" if self.undefined else format_rational(self.value)


class Violation(BaseModel):
    """One violated graph invariant"""
    kind: str
    vertex: Optional[str] = None
    level: Optional[int] = None
    detail: str


class ValidationReport(BaseModel):
    """Result of graph validation"""
    passed: bool
    depth: int
    violations: List[Violation] = []


# Equipments

class CotransitionEntry(ExactModel):
    from_: str = Field(alias="from")
    edge: int = Field(default=0, ge=0)
    p: Rational


class CotransitionTable(ExactModel):
    """Row P^{level,to}: distribution over predecessors (at `level`) of `to`"""
    level: int = Field(ge=0)
    to: str
    rows: List[CotransitionEntry] = []
    unreachable: bool = False


class CocycleCounterexample(ExactModel):
    axiom: Literal["identity", "inverse", "multiplicative"]
    paths: List[FinitePath]
    values: List[CocycleValue]
    detail: str


class CocycleCheckReport(ExactModel):
    passed: bool
    level_bound: int
    pairs_checked: int = 0
    triples_checked: int = 0
    undefined_skipped: int = 0
    counterexample: Optional[CocycleCounterexample] = None


# Measures

class InitialEntry(ExactModel):
    vertex: str
    p: Rational


class TransitionEntry(ExactModel):
    to: str
    edge: int = Field(default=0, ge=0)
    p: Rational


class TransitionTable(ExactModel):
    """Forward row P_{level,from}: distribution over outgoing edges"""
    level: int = Field(ge=0)
    from_: str = Field(alias="from")
    rows: List[TransitionEntry] = []


class MeasureDocument(ExactModel):
    """JSON measure format mirroring the cotransition format"""
    initial: List[InitialEntry]
    forward: List[TransitionTable] = []


class WitnessPair(ExactModel):
    """Tail-equivalent pair on which the measure and the equipment disagree"""
    p: FinitePath
    q: FinitePath
    measure_ratio: CocycleValue
    equipment_ratio: CocycleValue


class RowMismatch(ExactModel):
    """Induced cotransition row differing from the equipment row; keys are "y#e" """
    level: int
    vertex: str
    induced: Dict[str, Rational]
    expected: Dict[str, Rational]


class MatchReport(ExactModel):
    passed: bool
    depth: int
    pairs_checked: int = 0
    rows_checked: int = 0
    witness: Optional[WitnessPair] = None
    row_mismatch: Optional[RowMismatch] = None


class SampledPath(ExactModel):
    path_id: int
    path: FinitePath


# Absolute

class DistributionEntry(ExactModel):
    vertex: str
    p: Rational


class BackwardDistribution(ExactModel):
    terminal: str
    level: int
    entries: List[DistributionEntry]


class MartinEntry(ExactModel):
    path: FinitePath
    value: Rational


class MartinTable(ExactModel):
    """Martin kernels K(p, w_N) for all level-n prefixes p"""
    level: int
    terminal: str
    entries: List[MartinEntry]


class BoundarySequence(BaseModel):
    """Terminal vertices w_N at strictly increasing levels N"""
    rule: str
    terminals: List[str]
    levels: List[int]

    @model_validator(mode="after")
    def _check_levels(self) -> "BoundarySequence":
        if len(self.terminals) != len(self.levels):
            raise ValueError("one terminal per level")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must strictly increase")
        return self


class LimitPoint(ExactModel):
    level: int
    terminal: str
    value: Rational
    delta: Optional[float] = None


class LimitReport(ExactModel):
    """Raw kernel sequence with successive deltas; no limit is claimed"""
    event: str
    points: List[LimitPoint]
    last_value: Rational
    last_delta: Optional[float] = None
    max_delta: Optional[float] = None
    tolerance: float
    stable: bool
    target: Optional[Rational] = None
    target_gap: Optional[float] = None


class StatisticSpec(BaseModel):
    """
    Level-n statistic of a sampled path

    coordinate: label coordinate `coordinate` of x_n divided by n
    indicator: fraction of the paths ending at x_n that pass through `vertex`
    """
    kind: Literal["coordinate", "indicator"] = "coordinate"
    coordinate: int = Field(default=1, ge=0)
    vertex: Optional[str] = None

    @model_validator(mode="after")
    def _check_vertex(self) -> "StatisticSpec":
        if self.kind == "indicator" and not self.vertex:
            raise ValueError("indicator statistic needs a vertex")
        return self

    @classmethod
    def parse(cls, text: str) -> "StatisticSpec":
        """Parse "coordinate:1" or "indicator:<vertex label>" """
        kind, _, arg = text.partition(":")
        if kind == "coordinate":
            return cls(kind="coordinate", coordinate=int(arg) if arg else 1)
        if kind == "indicator":
            return cls(kind="indicator", vertex=arg)
        raise ValueError(f"unknown statistic {text!r}")


class VarianceRow(BaseModel):
    level: int
    mean: float
    variance: float
    stderr: float


class ErgodicityReport(BaseModel):
    statistic: StatisticSpec
    samples: int
    seed: int
    threshold: float
    rows: List[VarianceRow]
    decreasing: bool
    floor: Optional[float] = None
    floor_stderr: Optional[float] = None
    verdict: Literal["consistent with ergodic", "inconsistent with ergodic", "undetermined"]


class ExchangeWitness(ExactModel):
    p: FinitePath
    q: FinitePath
    p_prob: Rational
    q_prob: Rational


class ExchangeabilityReport(ExactModel):
    passed: bool
    level: int
    paths_checked: int
    witness: Optional[ExchangeWitness] = None


# RSK

class Tableau(BaseModel):
    """Semistandard (P) or standard (Q) Young tableau"""
    rows: List[List[int]] = []
    kind: Literal["semistandard", "standard"] = "semistandard"

    @model_validator(mode="after")
    def _check_tableau(self) -> "Tableau":
        lengths = [len(row) for row in self.rows]
        if any(length == 0 for length in lengths):
            raise ValueError("tableau rows must be nonempty")
        if any(b > a for a, b in zip(lengths, lengths[1:])):
            raise ValueError("row lengths must weakly decrease")
        strict_rows = self.kind == "standard"
        for row in self.rows:
            for a, b in zip(row, row[1:]):
                if b < a or (strict_rows and b == a):
                    raise ValueError(f"row {row} is not increasing")
        for upper, lower in zip(self.rows, self.rows[1:]):
            for a, b in zip(upper, lower):
                if b <= a:
                    raise ValueError("columns must strictly increase")
        if self.kind == "standard":
            entries = sorted(v for row in self.rows for v in row)
            if entries != list(range(1, len(entries) + 1)):
                raise ValueError("standard tableau entries must be 1..n")
        return self

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(row) for row in self.rows)

    @property
    def size(self) -> int:
        return sum(self.shape)


class YoungPath(BaseModel):
    """
    Path in the Young graph from the empty partition, stored as the row
    (0-based) receiving the box at each step
    """
    rows: List[int] = []

    @field_validator("rows")
    @classmethod
    def _check_growth(cls, rows: List[int]) -> List[int]:
        shape: List[int] = []
        for step, r in enumerate(rows):
            if r == len(shape):
                shape.append(1)
            elif 0 <= r < len(shape) and (r == 0 or shape[r - 1] > shape[r]):
                shape[r] += 1
            else:
                raise ValueError(f"step {step}: cannot add a box in row {r} of {tuple(shape)}")
        return rows

    @property
    def length(self) -> int:
        return len(self.rows)

    def shapes(self) -> List[Tuple[int, ...]]:
        """λ(0)=∅, λ(1), ..., λ(n)"""
        shape: List[int] = []
        out = [()]
        for r in self.rows:
            if r == len(shape):
                shape.append(1)
            else:
                shape[r] += 1
            out.append(tuple(shape))
        return out

    @property
    def shape(self) -> Tuple[int, ...]:
        shape: List[int] = []
        for r in self.rows:
            if r == len(shape):
                shape.append(1)
            else:
                shape[r] += 1
        return tuple(shape)


class LetterDistribution(ExactModel):
    """Atoms α_1 ≥ α_2 ≥ ... ≥ 0 with Σα ≤ 1; the rest is continuous mass γ"""
    atoms: List[Rational] = []

    @field_validator("atoms")
    @classmethod
    def _check_atoms(cls, atoms: List[Fraction]) -> List[Fraction]:
        if any(a < 0 for a in atoms):
            raise ValueError("atoms must be nonnegative")
        if any(b > a for a, b in zip(atoms, atoms[1:])):
            raise ValueError("atoms must be listed in decreasing order")
        if sum(atoms, Fraction(0)) > 1:
            raise ValueError("atoms must sum to at most 1")
        return atoms

    @property
    def continuous_mass(self) -> Fraction:
        return 1 - sum(self.atoms, Fraction(0))


class FrequencyRow(BaseModel):
    index: int
    frequency: float
    stderr: float


class FrequencyEstimate(BaseModel):
    """Mean row (and column) lengths divided by n, with standard errors"""
    n: int
    samples: int
    rows: List[FrequencyRow]
    columns: List[FrequencyRow] = []


class ChiSquareReport(BaseModel):
    statistic: float
    dof: int
    p_value: float
    categories: int


# CLI

class RunConfig(BaseModel):
    """Validated CLI invocation"""
    command: List[str]
    inputs: List[str] = []
    depth: Optional[int] = Field(default=None, ge=1)
    level: Optional[int] = Field(default=None, ge=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    samples: Optional[int] = Field(default=None, ge=1)
    tolerance: Optional[float] = Field(default=None, gt=0)
    threshold: Optional[float] = Field(default=None, gt=0)
    out: Optional[str] = None
    fmt: Literal["text", "json", "csv", "md"] = "text"
