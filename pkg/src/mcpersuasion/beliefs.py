"""Posterior-belief geometry.

Finite distributions over exact posterior points, the Bayes-plausibility
test, mean-preserving-spread couplings decided by a feasibility LP, and
a single-receiver concavification computed by support enumeration.  The
enumeration route is deliberate: it shares no machinery with the
simplex solver, so the two can vouch for each other in tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping

from . import lp
from .errors import PriorOutsideHull, StateSpaceMismatch, ValidationError
from .model import Posterior, Prior, check_posterior


@dataclass(frozen=True)
class BeliefDistribution:
    """Finite-support distribution over posterior points.

    Canonical form: distinct support points in sorted order, strictly
    positive masses summing to one.  Build through from_pairs, which
    merges duplicates and drops zeros.
    """

    points: tuple[Posterior, ...]
    masses: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.points) != len(self.masses):
            raise ValidationError("support and mass lists differ in length")
        if not self.points:
            raise ValidationError("belief distribution has empty support")
        dim = len(self.points[0])
        for p in self.points:
            if len(p) != dim:
                raise StateSpaceMismatch("support points of mixed dimension")
            check_posterior(p)
        if any(m <= 0 for m in self.masses):
            raise ValidationError("masses must be positive in canonical form")
        if sum(self.masses) != 1:
            raise ValidationError("masses must sum to 1")
        if list(self.points) != sorted(set(self.points)):
            raise ValidationError(
                "support must be sorted and duplicate-free; use from_pairs"
            )

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Posterior, Fraction]]) -> "BeliefDistribution":
        acc: dict[Posterior, Fraction] = {}
        for point, mass in pairs:
            point = tuple(Fraction(x) for x in point)
            mass = Fraction(mass)
            if mass < 0:
                raise ValidationError(f"negative mass {mass} at {point}")
            if mass:
                acc[point] = acc.get(point, Fraction(0)) + mass
        items = sorted(acc.items())
        return cls(tuple(p for p, _ in items), tuple(m for _, m in items))

    @classmethod
    def point_mass(cls, point: Posterior) -> "BeliefDistribution":
        return cls.from_pairs([(point, Fraction(1))])

    @property
    def dim(self) -> int:
        return len(self.points[0])

    def mean(self) -> Posterior:
        out = [Fraction(0)] * self.dim
        for point, mass in zip(self.points, self.masses):
            for b, x in enumerate(point):
                out[b] += mass * x
        return tuple(out)

    def mass_at(self, point: Posterior) -> Fraction:
        for p, m in zip(self.points, self.masses):
            if p == point:
                return m
        return Fraction(0)

    def expectation(self, values: Mapping[Posterior, Fraction]) -> Fraction:
        return sum(
            (m * values[p] for p, m in zip(self.points, self.masses)), Fraction(0)
        )


def is_bayes_plausible(dist: BeliefDistribution, prior: Prior) -> bool:
    """True iff the mass-weighted mean of the support equals the prior."""
    if dist.dim != prior.space.size:
        raise StateSpaceMismatch(
            f"distribution over {dist.dim} states, prior over {prior.space.size}"
        )
    return dist.mean() == prior.values


@dataclass(frozen=True)
class Coupling:
    """Witness that source spreads target: a joint flow whose rows have
    the source masses, whose columns have the target masses, and whose
    flow-weighted barycenter over each target column equals that target
    point."""

    source: BeliefDistribution
    target: BeliefDistribution
    flow: Mapping[tuple[Posterior, Posterior], Fraction]

    def __post_init__(self):
        if self.source.dim != self.target.dim:
            raise StateSpaceMismatch("coupling endpoints of mixed dimension")
        clean = {}
        for (l, r), f in self.flow.items():
            f = Fraction(f)
            if f < 0:
                raise ValidationError(f"negative flow at ({l}, {r})")
            if f:
                clean[(tuple(l), tuple(r))] = f
        object.__setattr__(self, "flow", clean)
        for l, mass in zip(self.source.points, self.source.masses):
            row = sum(
                (f for (a, _), f in clean.items() if a == l), Fraction(0)
            )
            if row != mass:
                raise ValidationError(f"row sum {row} != source mass {mass} at {l}")
        for r, mass in zip(self.target.points, self.target.masses):
            col = [(a, f) for (a, b), f in clean.items() if b == r]
            total = sum((f for _, f in col), Fraction(0))
            if total != mass:
                raise ValidationError(f"column sum {total} != target mass {mass} at {r}")
            for b_idx in range(self.source.dim):
                moment = sum((f * a[b_idx] for a, f in col), Fraction(0))
                if moment != mass * r[b_idx]:
                    raise ValidationError(f"barycenter violated at target {r}")


def mps_coupling(
    spread: BeliefDistribution, coarse: BeliefDistribution
) -> Coupling | None:
    """A coupling witnessing spread ⊒ coarse, or None when none exists.

    Decided by an exact feasibility program over the transport polytope
    with the per-column barycenter equalities.  The final barycenter
    coordinate is implied by the column sum, so only dim - 1 are posed.
    """
    if spread.dim != coarse.dim:
        raise StateSpaceMismatch("cannot couple distributions of mixed dimension")
    nl, nr = len(spread.points), len(coarse.points)
    var = {
        (li, ri): li * nr + ri for li in range(nl) for ri in range(nr)
    }
    constraints = []
    for li, mass in enumerate(spread.masses):
        constraints.append(
            ({var[(li, ri)]: Fraction(1) for ri in range(nr)}, lp.EQ, mass)
        )
    for ri, mass in enumerate(coarse.masses):
        constraints.append(
            ({var[(li, ri)]: Fraction(1) for li in range(nl)}, lp.EQ, mass)
        )
    for ri, r in enumerate(coarse.points):
        for b in range(spread.dim - 1):
            row = {
                var[(li, ri)]: l[b] - r[b]
                for li, l in enumerate(spread.points)
                if l[b] != r[b]
            }
            constraints.append((row, lp.EQ, Fraction(0)))
    sol = lp.solve(lp.LinearProgram(nl * nr, {}, constraints))
    if sol.status != lp.OPTIMAL:
        return None
    flow = {
        (l, r): sol.assignment[var[(li, ri)]]
        for li, l in enumerate(spread.points)
        for ri, r in enumerate(coarse.points)
        if sol.assignment[var[(li, ri)]]
    }
    return Coupling(source=spread, target=coarse, flow=flow)


def _solve_unique(rows, rhs):
    """Exact solution of an overdetermined system if it exists and is
    unique; None on inconsistency or underdetermination."""
    m, s = len(rows), len(rows[0]) if rows else 0
    aug = [list(r) + [v] for r, v in zip(rows, rhs)]
    pivots = []
    row_at = 0
    for col in range(s):
        pivot = next((i for i in range(row_at, m) if aug[i][col]), None)
        if pivot is None:
            return None  # free column: not unique
        aug[row_at], aug[pivot] = aug[pivot], aug[row_at]
        pv = aug[row_at][col]
        aug[row_at] = [v / pv for v in aug[row_at]]
        for i in range(m):
            if i != row_at and aug[i][col]:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[row_at])]
        pivots.append(col)
        row_at += 1
    for i in range(row_at, m):
        if aug[i][s]:
            return None  # inconsistent
    return [aug[r][s] for r in range(s)]


def concavify_single(
    u_table: Mapping[Posterior, Fraction],
    prior: Prior,
    points: Iterable[Posterior] | None = None,
) -> Fraction:
    """Best expected value of u over Bayes-plausible distributions
    supported on the given points (defaults: the table's own keys)."""
    value, _ = concavify_support(u_table, prior, points)
    return value


def concavify_support(
    u_table: Mapping[Posterior, Fraction],
    prior: Prior,
    points: Iterable[Posterior] | None = None,
) -> tuple[Fraction, BeliefDistribution]:
    """concavify_single together with an optimal distribution.

    Works by exhausting supports of at most |states| points: some
    optimal distribution is basic for the moment system, hence has a
    support of that size with linearly independent moment columns, and
    on such a support the weights are the unique solution of the
    system.  Larger or dependent supports never need to be examined.
    """
    pts = sorted(points) if points is not None else sorted(u_table)
    dim = prior.space.size
    for p in pts:
        if len(p) != dim:
            raise StateSpaceMismatch("grid point dimension differs from the prior's")
    target = list(prior.values) + [Fraction(1)]
    best: tuple[Fraction, BeliefDistribution] | None = None
    for size in range(1, dim + 1):
        for support in combinations(pts, size):
            rows = [[p[b] for p in support] for b in range(dim)]
            rows.append([Fraction(1)] * size)
            weights = _solve_unique(rows, target)
            if weights is None or any(w < 0 for w in weights):
                continue
            value = sum(
                (w * u_table[p] for w, p in zip(weights, support)), Fraction(0)
            )
            if best is None or value > best[0]:
                best = (
                    value,
                    BeliefDistribution.from_pairs(zip(support, weights)),
                )
    if best is None:
        raise PriorOutsideHull(
            "prior is not a convex combination of the given grid points"
        )
    return best
