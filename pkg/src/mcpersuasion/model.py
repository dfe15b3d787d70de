"""Core data model: states, priors, communication structures, utilities.

All probabilities and utility values are exact rationals
(fractions.Fraction).  External formats serialize rationals as
"num/den" strings, never as floats, and index receivers, channels and
states starting from 1; in memory everything is 0-indexed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    BadEpsilon,
    GridMismatch,
    MatrixShapeMismatch,
    NonPositivePrior,
    PriorNotNormalized,
    StateSpaceMismatch,
    ValidationError,
)

#: A posterior over the state space, ordered like StateSpace.states.
Posterior = tuple[Fraction, ...]

_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:/[1-9]\d*)?$")


def parse_rational(text) -> Fraction:
    """Parse a "num/den" (or plain integer) string into a Fraction.

    Floats and decimal notation are rejected on purpose: every number in
    an input file is meant to be exact.
    """
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text.strip()):
        raise ValidationError(f"not a rational literal: {text!r}")
    return Fraction(text.strip())


def format_rational(value: Fraction) -> str:
    """Canonical string form, gcd-reduced, "n" or "n/d"."""
    value = Fraction(value)
    return str(value)


def parse_posterior(items: Sequence) -> Posterior:
    point = tuple(parse_rational(x) for x in items)
    check_posterior(point)
    return point


def format_posterior(point: Posterior) -> list[str]:
    return [format_rational(x) for x in point]


def check_posterior(point: Sequence[Fraction]) -> None:
    if any(x < 0 for x in point):
        raise ValidationError(f"negative coordinate in posterior {point}")
    if sum(point) != 1:
        raise ValidationError(f"posterior does not sum to 1: {point}")


@dataclass(frozen=True)
class StateSpace:
    """Finite ordered set of state names."""

    states: tuple[str, ...]

    def __post_init__(self):
        if len(self.states) == 0:
            raise ValidationError("state space is empty")
        if len(set(self.states)) != len(self.states):
            raise ValidationError("state names are not unique")
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise ValidationError(f"unknown state {state!r}") from None


@dataclass(frozen=True)
class Prior:
    """Full-support prior over a state space."""

    space: StateSpace
    values: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))
        if len(self.values) != self.space.size:
            raise MatrixShapeMismatch(
                f"prior has {len(self.values)} entries for {self.space.size} states"
            )
        if any(v <= 0 for v in self.values):
            raise NonPositivePrior(f"prior entries must be positive: {self.values}")
        if sum(self.values) != 1:
            raise PriorNotNormalized(f"prior sums to {sum(self.values)}, not 1")

    def point(self) -> Posterior:
        """The prior viewed as a posterior point."""
        return self.values

    def __getitem__(self, i: int) -> Fraction:
        return self.values[i]


@dataclass(frozen=True)
class CommunicationStructure:
    """Binary k x n observation matrix: entry (i, j) is 1 iff receiver i
    observes channel j."""

    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.matrix)
        object.__setattr__(self, "matrix", rows)
        if len(rows) == 0:
            raise MatrixShapeMismatch("structure has no receivers")
        n = len(rows[0])
        if n == 0:
            raise MatrixShapeMismatch("structure has no channels")
        for row in rows:
            if len(row) != n:
                raise MatrixShapeMismatch("ragged structure matrix")
            for x in row:
                if x not in (0, 1):
                    raise MatrixShapeMismatch(f"matrix entry {x} is not 0/1")

    @property
    def k(self) -> int:
        return len(self.matrix)

    @property
    def n(self) -> int:
        return len(self.matrix[0])

    def observes(self, receiver: int, channel: int) -> bool:
        return self.matrix[receiver][channel] == 1

    def channels_of(self, receiver: int) -> tuple[int, ...]:
        return tuple(j for j, x in enumerate(self.matrix[receiver]) if x)

    def observers_of(self, channel: int) -> tuple[int, ...]:
        return tuple(i for i in range(self.k) if self.matrix[i][channel])

    def row_masks(self) -> tuple[int, ...]:
        """Each row as an integer bitmask, bit j set iff channel j observed."""
        return tuple(
            sum(1 << j for j, x in enumerate(row) if x) for row in self.matrix
        )

    def has_duplicate_rows(self) -> bool:
        return len(set(self.matrix)) != self.k


def merge_duplicate_receivers(
    structure: CommunicationStructure,
) -> tuple[CommunicationStructure, tuple[int, ...]]:
    """Collapse receivers with identical rows into one representative.

    Returns the merged structure and a mapping old index -> new index.
    Representatives keep the order of first occurrence, so merging an
    already duplicate-free structure is the identity.
    """
    seen: dict[tuple[int, ...], int] = {}
    rows: list[tuple[int, ...]] = []
    mapping: list[int] = []
    for row in structure.matrix:
        if row not in seen:
            seen[row] = len(rows)
            rows.append(row)
        mapping.append(seen[row])
    return CommunicationStructure(tuple(rows)), tuple(mapping)


# ---------------------------------------------------------------------------
# Receiver utilities (additive family)

PIECEWISE_CONSTANT = "piecewise-constant"
LIPSCHITZ = "lipschitz"


class ReceiverUtility:
    """One receiver's utility as a function of his marginal posterior.

    Subclasses implement value_at.  The declared smoothness class is
    metadata used for reporting; every kind except "linear" is piecewise
    constant.
    """

    kind = "abstract"
    smoothness = PIECEWISE_CONSTANT

    def value_at(self, point: Posterior, space: StateSpace) -> Fraction:
        raise NotImplementedError

    def to_doc(self, space: StateSpace) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantUtility(ReceiverUtility):
    value: Fraction

    kind = "constant"

    def value_at(self, point, space):
        return self.value

    def to_doc(self, space):
        return {"kind": "constant", "value": format_rational(self.value)}


@dataclass(frozen=True)
class ThresholdUtility(ReceiverUtility):
    """high when the named state's probability clears the cutoff, else low.

    With strict=False the cutoff itself earns high, which makes the
    function upper semi-continuous whenever high >= low.
    """

    state: str
    cutoff: Fraction
    high: Fraction = Fraction(1)
    low: Fraction = Fraction(0)
    strict: bool = False

    kind = "threshold"

    def value_at(self, point, space):
        q = point[space.index(self.state)]
        hit = q > self.cutoff if self.strict else q >= self.cutoff
        return self.high if hit else self.low

    def to_doc(self, space):
        return {
            "kind": "threshold",
            "state": self.state,
            "cutoff": format_rational(self.cutoff),
            "high": format_rational(self.high),
            "low": format_rational(self.low),
            "strict": self.strict,
        }


@dataclass(frozen=True)
class PointUtility(ReceiverUtility):
    """value at one exact posterior point, otherwise elsewhere."""

    point: Posterior
    value: Fraction
    otherwise: Fraction = Fraction(0)

    kind = "point"

    def value_at(self, point, space):
        if len(self.point) != space.size:
            raise MatrixShapeMismatch("point utility dimension mismatch")
        return self.value if point == self.point else self.otherwise

    def to_doc(self, space):
        return {
            "kind": "point",
            "point": format_posterior(self.point),
            "value": format_rational(self.value),
            "otherwise": format_rational(self.otherwise),
        }


@dataclass(frozen=True)
class PiecewiseUtility(ReceiverUtility):
    """Piecewise constant in one state's probability.

    values[j] holds on the open interval between consecutive breakpoints
    (with 0 and 1 as outer endpoints).  At a breakpoint the value is the
    max of the two adjacent pieces, so the function is upper
    semi-continuous, which is what makes aligned grids lossless.
    """

    state: str
    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    kind = "piecewise"

    def __post_init__(self):
        if len(self.values) != len(self.breakpoints) + 1:
            raise MatrixShapeMismatch("piecewise utility needs len(values) == len(breakpoints) + 1")
        bps = self.breakpoints
        if any(not (0 < b < 1) for b in bps) or list(bps) != sorted(set(bps)):
            raise ValidationError("breakpoints must be strictly increasing inside (0, 1)")

    def value_at(self, point, space):
        q = point[space.index(self.state)]
        idx = sum(1 for b in self.breakpoints if b < q)
        if q in self.breakpoints:
            # on a breakpoint both neighbouring pieces compete
            return max(self.values[idx], self.values[idx + 1])
        return self.values[idx]

    def to_doc(self, space):
        return {
            "kind": "piecewise",
            "state": self.state,
            "breakpoints": [format_rational(b) for b in self.breakpoints],
            "values": [format_rational(v) for v in self.values],
        }


@dataclass(frozen=True)
class LinearUtility(ReceiverUtility):
    """offset + sum_b coeffs[b] * q_b; the one Lipschitz kind."""

    coeffs: tuple[Fraction, ...]
    offset: Fraction = Fraction(0)

    kind = "linear"
    smoothness = LIPSCHITZ

    def value_at(self, point, space):
        if len(self.coeffs) != len(point):
            raise MatrixShapeMismatch("linear utility dimension mismatch")
        return self.offset + sum(c * q for c, q in zip(self.coeffs, point))

    def lipschitz_constant(self) -> Fraction:
        if not self.coeffs:
            return Fraction(0)
        return max(self.coeffs) - min(self.coeffs)

    def to_doc(self, space):
        return {
            "kind": "linear",
            "coeffs": [format_rational(c) for c in self.coeffs],
            "offset": format_rational(self.offset),
        }


@dataclass(frozen=True)
class TableUtility(ReceiverUtility):
    """Explicit tabulation on a fixed point set; consuming it on a grid
    that contains points outside the table raises GridMismatch."""

    table: tuple[tuple[Posterior, Fraction], ...]

    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "table", tuple((tuple(p), Fraction(v)) for p, v in self.table))
        if len({p for p, _ in self.table}) != len(self.table):
            raise ValidationError("table utility has duplicate points")

    def value_at(self, point, space):
        for p, v in self.table:
            if p == point:
                return v
        raise GridMismatch(f"utility table has no value at {point}")

    def to_doc(self, space):
        return {
            "kind": "table",
            "points": [format_posterior(p) for p, _ in self.table],
            "values": [format_rational(v) for _, v in self.table],
        }


@dataclass(frozen=True)
class AdditiveUtility:
    """Sender utility sum_i u^i(p^i), one ReceiverUtility per receiver."""

    receivers: tuple[ReceiverUtility, ...]

    kind = "additive"

    def evaluate(self, profile: Sequence[Posterior], space: StateSpace) -> Fraction:
        if len(profile) != len(self.receivers):
            raise MatrixShapeMismatch("profile length does not match receiver count")
        return sum(
            (u.value_at(p, space) for u, p in zip(self.receivers, profile)),
            Fraction(0),
        )

    def to_doc(self, space):
        return {"kind": "additive", "receivers": [u.to_doc(space) for u in self.receivers]}


# ---------------------------------------------------------------------------
# Supermajority utilities (group family used by the hardness generator)


@dataclass(frozen=True)
class MemberRule:
    """Predicate on one receiver's posterior: p(state) OP cutoff."""

    op: str
    state: str
    cutoff: Fraction

    _OPS = {
        "le": lambda a, b: a <= b,
        "lt": lambda a, b: a < b,
        "ge": lambda a, b: a >= b,
        "gt": lambda a, b: a > b,
        "eq": lambda a, b: a == b,
    }

    def __post_init__(self):
        if self.op not in self._OPS:
            raise ValidationError(f"unknown member rule op {self.op!r}")

    def holds(self, point: Posterior, space: StateSpace) -> bool:
        return self._OPS[self.op](point[space.index(self.state)], self.cutoff)

    def to_doc(self):
        return {"op": self.op, "state": self.state, "cutoff": format_rational(self.cutoff)}


@dataclass(frozen=True)
class Group:
    members: tuple[int, ...]
    weight: Fraction
    threshold: int
    rule: MemberRule

    def __post_init__(self):
        if self.weight < 0:
            raise ValidationError("group weight must be nonnegative")
        if not (0 <= self.threshold <= len(self.members)):
            raise ValidationError("group threshold must lie in [0, group size]")


@dataclass(frozen=True)
class SupermajorityUtility:
    """Sender utility sum_l r_l * [at least t_l members of T_l satisfy
    their rule], over a partition of the receivers into groups."""

    k: int
    groups: tuple[Group, ...]

    kind = "supermajority"

    def __post_init__(self):
        covered: list[int] = []
        for g in self.groups:
            covered.extend(g.members)
        if sorted(covered) != list(range(self.k)):
            raise ValidationError("groups must partition the receiver set")

    def evaluate(self, profile: Sequence[Posterior], space: StateSpace) -> Fraction:
        if len(profile) != self.k:
            raise MatrixShapeMismatch("profile length does not match receiver count")
        total = Fraction(0)
        for g in self.groups:
            hits = sum(1 for i in g.members if g.rule.holds(profile[i], space))
            if hits >= g.threshold:
                total += g.weight
        return total

    def to_doc(self, space):
        return {
            "kind": "supermajority",
            "groups": [
                {
                    "members": [i + 1 for i in g.members],
                    "weight": format_rational(g.weight),
                    "threshold": g.threshold,
                    "condition": g.rule.to_doc(),
                }
                for g in self.groups
            ],
        }


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class PersuasionInstance:
    space: StateSpace
    prior: Prior
    structure: CommunicationStructure
    utilities: AdditiveUtility | SupermajorityUtility
    epsilon: Fraction | None = None

    def __post_init__(self):
        if self.prior.space != self.space:
            raise StateSpaceMismatch("prior and instance disagree on the state space")
        if isinstance(self.utilities, AdditiveUtility):
            if len(self.utilities.receivers) != self.structure.k:
                raise MatrixShapeMismatch(
                    f"{len(self.utilities.receivers)} utilities for {self.structure.k} receivers"
                )
        elif isinstance(self.utilities, SupermajorityUtility):
            if self.utilities.k != self.structure.k:
                raise MatrixShapeMismatch("supermajority utility covers wrong receiver count")
        else:
            raise ValidationError("unknown utility container")
        if self.epsilon is not None and not (0 < self.epsilon < 1):
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def k(self) -> int:
        return self.structure.k


def _parse_receiver_utility(doc: Mapping, space: StateSpace) -> ReceiverUtility:
    if not isinstance(doc, Mapping) or "kind" not in doc:
        raise ValidationError(f"utility entry must be an object with a 'kind': {doc!r}")
    kind = doc["kind"]
    try:
        if kind == "constant":
            return ConstantUtility(parse_rational(doc["value"]))
        if kind == "threshold":
            space.index(str(doc["state"]))
            return ThresholdUtility(
                state=str(doc["state"]),
                cutoff=parse_rational(doc["cutoff"]),
                high=parse_rational(doc.get("high", "1")),
                low=parse_rational(doc.get("low", "0")),
                strict=bool(doc.get("strict", False)),
            )
        if kind == "point":
            point = parse_posterior(doc["point"])
            if len(point) != space.size:
                raise MatrixShapeMismatch("point utility dimension mismatch")
            return PointUtility(
                point=point,
                value=parse_rational(doc["value"]),
                otherwise=parse_rational(doc.get("otherwise", "0")),
            )
        if kind == "piecewise":
            space.index(str(doc["state"]))
            return PiecewiseUtility(
                state=str(doc["state"]),
                breakpoints=tuple(parse_rational(b) for b in doc["breakpoints"]),
                values=tuple(parse_rational(v) for v in doc["values"]),
            )
        if kind == "linear":
            coeffs = tuple(parse_rational(c) for c in doc["coeffs"])
            if len(coeffs) != space.size:
                raise MatrixShapeMismatch("linear utility dimension mismatch")
            return LinearUtility(coeffs=coeffs, offset=parse_rational(doc.get("offset", "0")))
        if kind == "table":
            points = [parse_posterior(p) for p in doc["points"]]
            values = [parse_rational(v) for v in doc["values"]]
            if len(points) != len(values):
                raise MatrixShapeMismatch("table utility points/values length mismatch")
            for p in points:
                if len(p) != space.size:
                    raise MatrixShapeMismatch("table utility dimension mismatch")
            return TableUtility(tuple(zip(points, values)))
    except KeyError as exc:
        raise ValidationError(f"utility of kind {kind!r} is missing field {exc}") from None
    raise ValidationError(f"unknown utility kind {kind!r}")


def _parse_utilities(doc, space: StateSpace, k: int):
    if isinstance(doc, Mapping) and doc.get("kind") == "supermajority":
        groups = []
        for g in doc["groups"]:
            cond = g["condition"]
            rule = MemberRule(
                op=str(cond["op"]),
                state=str(cond["state"]),
                cutoff=parse_rational(cond["cutoff"]),
            )
            space.index(rule.state)
            members = tuple(int(i) - 1 for i in g["members"])
            if any(not (0 <= i < k) for i in members):
                raise ValidationError("group member index out of range")
            groups.append(
                Group(
                    members=members,
                    weight=parse_rational(g["weight"]),
                    threshold=int(g["threshold"]),
                    rule=rule,
                )
            )
        return SupermajorityUtility(k=k, groups=tuple(groups))
    if isinstance(doc, Mapping) and doc.get("kind", "additive") == "additive":
        entries = doc["receivers"]
    elif isinstance(doc, Sequence) and not isinstance(doc, (str, bytes)):
        entries = doc
    else:
        raise ValidationError("utilities must be a list or an additive/supermajority object")
    return AdditiveUtility(tuple(_parse_receiver_utility(u, space) for u in entries))


def validate_instance(raw: Mapping) -> PersuasionInstance:
    """Parse and validate a raw instance description (decoded JSON)."""
    if not isinstance(raw, Mapping):
        raise ValidationError("instance document must be a JSON object")
    for key in ("states", "prior", "structure", "utilities"):
        if key not in raw:
            raise ValidationError(f"instance is missing required field {key!r}")
    space = StateSpace(tuple(str(s) for s in raw["states"]))
    prior = Prior(space, tuple(parse_rational(p) for p in raw["prior"]))
    structure = CommunicationStructure(tuple(tuple(row) for row in raw["structure"]))
    utilities = _parse_utilities(raw["utilities"], space, structure.k)
    epsilon = None
    if raw.get("epsilon") is not None:
        epsilon = parse_rational(raw["epsilon"])
    return PersuasionInstance(
        space=space, prior=prior, structure=structure, utilities=utilities, epsilon=epsilon
    )


def instance_to_doc(inst: PersuasionInstance) -> dict:
    doc = {
        "states": list(inst.space.states),
        "prior": [format_rational(p) for p in inst.prior.values],
        "structure": [list(row) for row in inst.structure.matrix],
        "utilities": inst.utilities.to_doc(inst.space),
    }
    if inst.epsilon is not None:
        doc["epsilon"] = format_rational(inst.epsilon)
    return doc
