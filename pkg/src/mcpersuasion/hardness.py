"""Reduction from minimum b-union to multi-channel persuasion.

Given sets Q_1 .. Q_t over a universe [w] and a budget b, the reduction
builds a two-state instance whose optimal sender value is governed by the
smallest union of b sets.  One channel per set; the set receiver R_{Q_j}
hears only channel j, while the universe receiver R_i hears every channel
whose set contains i.  A supermajority bonus of 4w fires when at least b
set receivers are certain of state 1, and each universe receiver pays the
sender 1 as long as his own posterior on state 1 stays at or below 9/10.

Revealing the state on the b channels of a minimum union h informs
exactly h universe receivers, so the sender banks, per state, w in state
0 and 4w + (w - h) in state 1, for an expected (6w - h)/2 under the
uniform prior.  Shrinking h is the only way up, which is what makes
optimal signaling here as hard as minimum b-union.  With b = 0 the bonus
is unconditional and saying nothing at all yields 5w.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Optional

from .errors import BudgetExceeded, ValidationError
from .forest import SignalingTable, evaluate_table
from .model import (
    CommunicationStructure,
    Group,
    MemberRule,
    PersuasionInstance,
    Prior,
    StateSpace,
    SupermajorityUtility,
)

DEFAULT_UNION_BUDGET = 1_000_000

_SPACE = StateSpace(("0", "1"))
_UNIFORM = (Fraction(1, 2), Fraction(1, 2))
_CUTOFF = Fraction(9, 10)


@dataclass(frozen=True)
class BUnionInstance:
    """Universe size w, sets Q_1 .. Q_t with 1-based elements, budget b.

    b = 0 is admitted as a degenerate budget: the empty selection has an
    empty union, and the reduction's bonus group then fires everywhere.
    """

    w: int
    sets: tuple[frozenset[int], ...]
    b: int

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        if self.w < 1:
            raise ValidationError(f"universe size must be positive, got {self.w}")
        if not self.sets:
            raise ValidationError("at least one set is required")
        for idx, s in enumerate(self.sets):
            if not s:
                raise ValidationError(f"set {idx + 1} is empty")
            if not all(isinstance(e, int) and 1 <= e <= self.w for e in s):
                raise ValidationError(
                    f"set {idx + 1} strays outside the universe 1..{self.w}"
                )
        if not 0 <= self.b <= self.t:
            raise ValidationError(
                f"budget {self.b} must lie between 0 and {self.t}"
            )

    @property
    def t(self) -> int:
        return len(self.sets)


def min_b_union(
    inst: BUnionInstance, budget: Optional[int] = DEFAULT_UNION_BUDGET
) -> tuple[int, tuple[int, ...]]:
    """Exact minimum union cardinality over all b-subsets of the sets,
    with the lexicographically first witness (0-based set indices)."""
    if budget is not None and comb(inst.t, inst.b) > budget:
        raise BudgetExceeded(
            f"{comb(inst.t, inst.b)} selections exceed the budget of {budget}"
        )
    best_h = None
    best: tuple[int, ...] = ()
    for pick in combinations(range(inst.t), inst.b):
        union = frozenset().union(*(inst.sets[j] for j in pick)) if pick else frozenset()
        if best_h is None or len(union) < best_h:
            best_h, best = len(union), pick
    return best_h, best


def reduction_structure(inst: BUnionInstance) -> CommunicationStructure:
    """Set receivers first (rows 1..t, one private channel each), then
    universe receivers (rows t+1..t+w, hearing the channels of the sets
    that contain them)."""
    rows = [
        tuple(1 if j == i else 0 for j in range(inst.t)) for i in range(inst.t)
    ]
    for e in range(1, inst.w + 1):
        rows.append(tuple(1 if e in inst.sets[j] else 0 for j in range(inst.t)))
    return CommunicationStructure(tuple(rows))


def reduction_utilities(inst: BUnionInstance) -> SupermajorityUtility:
    certain_of_one = MemberRule(op="ge", state="1", cutoff=Fraction(1))
    staying_calm = MemberRule(op="le", state="1", cutoff=_CUTOFF)
    groups = [
        Group(
            members=tuple(range(inst.t)),
            weight=Fraction(4 * inst.w),
            threshold=inst.b,
            rule=certain_of_one,
        )
    ]
    for i in range(inst.w):
        groups.append(
            Group(
                members=(inst.t + i,),
                weight=Fraction(1),
                threshold=1,
                rule=staying_calm,
            )
        )
    return SupermajorityUtility(k=inst.t + inst.w, groups=tuple(groups))


def claimed_dominance_pairs(inst: BUnionInstance) -> frozenset[tuple[int, int]]:
    """The textbook description of the reduction's dominance set: each
    universe receiver dominates the set receivers of the sets containing
    him.  Degenerate instances (an element in no set, or one universe row
    containing another) have additional pairs on top of these."""
    pairs = set()
    for i in range(inst.w):
        for j in range(inst.t):
            if (i + 1) in inst.sets[j]:
                pairs.add((inst.t + i, j))
    return frozenset(pairs)


def optimal_value(w: int, h: int, b: int) -> Fraction:
    """Expected sender optimum: state 0 pays w, state 1 pays 4w + (w - h)
    once the bonus fires on a minimum union; b = 0 makes the bonus free
    in both states."""
    if b == 0:
        return Fraction(5 * w)
    return Fraction(6 * w - h, 2)


def witness_table(
    inst: BUnionInstance,
    structure: CommunicationStructure,
    picks: tuple[int, ...],
) -> SignalingTable:
    """The revealing scheme: channel j announces the state when j is
    picked and stays silent otherwise; labels follow from each receiver's
    channel bundle."""
    chosen = set(picks)
    per_state = {}
    for state in _SPACE.states:
        signals = tuple(
            state if j in chosen else "quiet" for j in range(structure.n)
        )
        profile = tuple(
            tuple(signals[j] for j in structure.channels_of(i))
            for i in range(structure.k)
        )
        per_state[state] = {profile: Fraction(1)}
    prior = Prior(_SPACE, _UNIFORM)
    return SignalingTable.from_signals(prior, per_state)


@dataclass(frozen=True)
class ReductionOutput:
    bunion: BUnionInstance
    instance: PersuasionInstance
    h: int
    witness_sets: tuple[int, ...]
    value: Fraction
    witness: SignalingTable


def build_reduction(
    inst: BUnionInstance, budget: Optional[int] = DEFAULT_UNION_BUDGET
) -> ReductionOutput:
    h, picks = min_b_union(inst, budget=budget)
    structure = reduction_structure(inst)
    instance = PersuasionInstance(
        space=_SPACE,
        prior=Prior(_SPACE, _UNIFORM),
        structure=structure,
        utilities=reduction_utilities(inst),
    )
    return ReductionOutput(
        bunion=inst,
        instance=instance,
        h=h,
        witness_sets=picks,
        value=optimal_value(inst.w, h, inst.b),
        witness=witness_table(inst, structure, picks),
    )


@dataclass(frozen=True)
class ReductionReport:
    ok: bool
    failures: tuple[str, ...]
    value: Fraction

    def to_doc(self) -> dict:
        from .model import format_rational

        return {
            "ok": self.ok,
            "failures": list(self.failures),
            "witness_value": format_rational(self.value),
        }


def verify_reduction(out: ReductionOutput) -> ReductionReport:
    """Achievability audit of a reduction output.

    Checks, in exact arithmetic: the witness table is the one induced by
    revealing on the witness channels; in state 1 exactly the witness set
    receivers are certain of the state; the universe receivers pushed
    past 9/10 are exactly the witness union; and the witness value equals
    the recorded optimum.  Global optimality is the point of the
    construction, not something re-proved by search here.
    """
    inst = out.bunion
    failures: list[str] = []
    prior = out.instance.prior
    try:
        out.witness.validate(prior)
    except Exception as exc:
        failures.append(f"witness table is not self-consistent: {exc}")
    rebuilt = witness_table(inst, out.instance.structure, out.witness_sets)
    if rebuilt != out.witness:
        failures.append(
            "witness table differs from the scheme that reveals on the witness channels"
        )
    one = _SPACE.index("1")
    row = out.witness.rows["1"]
    certain_sets: set[int] = set()
    alarmed_universe: set[int] = set()
    for idx, mass in enumerate(row):
        if not mass:
            continue
        profile = out.witness.profiles[idx]
        for j in range(inst.t):
            if profile[j][one] == 1:
                certain_sets.add(j)
        for i in range(inst.w):
            if profile[inst.t + i][one] > _CUTOFF:
                alarmed_universe.add(i + 1)
    if certain_sets != set(out.witness_sets):
        failures.append(
            f"set receivers certain of state 1 are {sorted(x + 1 for x in certain_sets)}, "
            f"expected {sorted(x + 1 for x in out.witness_sets)}"
        )
    union = (
        frozenset().union(*(inst.sets[j] for j in out.witness_sets))
        if out.witness_sets
        else frozenset()
    )
    if alarmed_universe != set(union):
        failures.append(
            f"universe receivers past 9/10 are {sorted(alarmed_universe)}, "
            f"expected {sorted(union)}"
        )
    achieved = evaluate_table(out.witness, out.instance)
    if achieved != out.value:
        failures.append(
            f"witness value {achieved} differs from the recorded optimum {out.value}"
        )
    return ReductionReport(
        ok=not failures, failures=tuple(failures), value=achieved
    )
