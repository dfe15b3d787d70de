"""Grid relaxation and signaling-table extraction for forest structures.

The pipeline: discretize the simplex at a unit-fraction step, assemble
the mass/coupling linear program over the covering edges of the
dominance forest, solve exactly, then unwind the solution into a
per-state table of posterior-label profiles.  Dominating receivers sit
on the spread side of every coupling; trees of the forest are kept
conditionally independent given the state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from . import lp
from .beliefs import BeliefDistribution, Coupling, is_bayes_plausible
from .dominance import DominationGraph, domination_graph
from .errors import (
    BadEpsilon,
    InvariantViolation,
    NotAForest,
    ValidationError,
)
from .model import (
    AdditiveUtility,
    PersuasionInstance,
    Posterior,
    Prior,
    ReceiverUtility,
    StateSpace,
)


@dataclass(frozen=True)
class PosteriorGrid:
    """All points of the simplex with coordinates in (1/denominator)Z."""

    dim: int
    denominator: int

    def __post_init__(self):
        if self.dim < 1 or self.denominator < 1:
            raise ValidationError("grid needs dim >= 1 and denominator >= 1")

    @property
    def step(self) -> Fraction:
        return Fraction(1, self.denominator)

    @classmethod
    def for_epsilon(cls, dim: int, epsilon: Fraction) -> "PosteriorGrid":
        epsilon = Fraction(epsilon)
        if not 0 < epsilon < 1:
            raise BadEpsilon(f"epsilon must lie in (0, 1), got {epsilon}")
        d = -((-epsilon.denominator) // epsilon.numerator)
        return cls(dim=dim, denominator=d)

    def points(self) -> tuple[Posterior, ...]:
        d = self.denominator
        out: list[Posterior] = []

        def rec(prefix, remaining, slots):
            if slots == 1:
                out.append(tuple(prefix + [Fraction(remaining, d)]))
                return
            for l in range(remaining + 1):
                rec(prefix + [Fraction(l, d)], remaining - l, slots - 1)

        rec([], d, self.dim)
        return tuple(sorted(out))

    def contains(self, point: Posterior) -> bool:
        return (
            len(point) == self.dim
            and all(x >= 0 and (x * self.denominator).denominator == 1 for x in point)
            and sum(point) == 1
        )


def tabulate(
    utility: ReceiverUtility, space: StateSpace, grid_points: Iterable[Posterior]
) -> dict[Posterior, Fraction]:
    """Exact values of one receiver's utility on the given points."""
    return {p: utility.value_at(p, space) for p in grid_points}


@dataclass(frozen=True)
class GridLP:
    """The assembled program plus the variable bookkeeping needed to
    read a solution back: x_index[(receiver, point)] and
    y_index[(parent, child, spread point, coarse point)]."""

    program: lp.LinearProgram
    grid: PosteriorGrid
    points: tuple[Posterior, ...]
    edges: tuple[tuple[int, int], ...]
    x_index: Mapping[tuple[int, Posterior], int]
    y_index: Mapping[tuple[int, int, Posterior, Posterior], int]


def _forest_edges(instance: PersuasionInstance) -> tuple[DominationGraph, tuple]:
    graph = domination_graph(instance.structure)
    if not graph.is_forest:
        raise NotAForest(
            "dominance covering graph has a receiver with two incomparable dominators"
        )
    return graph, tuple(sorted(graph.edges))


def build_grid_lp(instance: PersuasionInstance, grid: PosteriorGrid) -> GridLP:
    """Assemble the exact grid program for a forest instance.

    Families, in row order: Bayes-plausibility per receiver per state;
    per covering edge the spread-side row sums, coarse-side column
    sums, and per-coarse-point barycenter equalities (one per state but
    the last, which is implied); one normalization row per receiver.
    Nonnegativity is carried by the solver's variable bounds.
    """
    if not isinstance(instance.utilities, AdditiveUtility):
        raise ValidationError("grid program needs additive per-receiver utilities")
    if grid.dim != instance.space.size:
        raise ValidationError("grid dimension differs from the state space")
    graph, edges = _forest_edges(instance)
    pts = grid.points()
    k = instance.k
    dim = grid.dim

    x_index: dict[tuple[int, Posterior], int] = {}
    names: list[str] = []
    for i in range(k):
        for w in pts:
            x_index[(i, w)] = len(names)
            names.append(f"x{i + 1}@({','.join(str(c) for c in w)})")
    y_index: dict[tuple[int, int, Posterior, Posterior], int] = {}
    for i1, i2 in edges:
        for l in pts:
            for r in pts:
                y_index[(i1, i2, l, r)] = len(names)
                names.append(
                    f"y{i1 + 1}>{i2 + 1}@({','.join(str(c) for c in l)}"
                    f"|{','.join(str(c) for c in r)})"
                )

    tables = [
        tabulate(u, instance.space, pts) for u in instance.utilities.receivers
    ]
    objective = {}
    for i in range(k):
        for w in pts:
            v = tables[i][w]
            if v:
                objective[x_index[(i, w)]] = v

    constraints = []
    for i in range(k):
        for b in range(dim):
            row = {
                x_index[(i, w)]: w[b] for w in pts if w[b]
            }
            constraints.append((row, lp.EQ, instance.prior[b]))
    for i1, i2 in edges:
        for l in pts:
            row = {y_index[(i1, i2, l, r)]: Fraction(1) for r in pts}
            row[x_index[(i1, l)]] = Fraction(-1)
            constraints.append((row, lp.EQ, Fraction(0)))
        for r in pts:
            row = {y_index[(i1, i2, l, r)]: Fraction(1) for l in pts}
            row[x_index[(i2, r)]] = Fraction(-1)
            constraints.append((row, lp.EQ, Fraction(0)))
        for r in pts:
            for b in range(dim - 1):
                row = {
                    y_index[(i1, i2, l, r)]: l[b] - r[b]
                    for l in pts
                    if l[b] != r[b]
                }
                constraints.append((row, lp.EQ, Fraction(0)))
    for i in range(k):
        row = {x_index[(i, w)]: Fraction(1) for w in pts}
        constraints.append((row, lp.EQ, Fraction(1)))

    program = lp.LinearProgram(len(names), objective, constraints, var_names=names)
    return GridLP(
        program=program,
        grid=grid,
        points=pts,
        edges=edges,
        x_index=x_index,
        y_index=y_index,
    )


@dataclass(frozen=True)
class GridSolution:
    """Solved masses: one belief distribution per receiver, one coupling
    per covering edge (spread side = dominating receiver), and the exact
    objective."""

    step: Fraction
    marginals: tuple[BeliefDistribution, ...]
    couplings: Mapping[tuple[int, int], Coupling]
    objective: Fraction

    def validate(self, instance: PersuasionInstance) -> None:
        """Re-check every invariant against the instance; raises
        InvariantViolation on the first failure."""
        if len(self.marginals) != instance.k:
            raise InvariantViolation("marginal count differs from receiver count")
        for i, dist in enumerate(self.marginals):
            if not is_bayes_plausible(dist, instance.prior):
                raise InvariantViolation(f"marginal of receiver {i + 1} is not Bayes-plausible")
        for (i1, i2), coupling in self.couplings.items():
            if coupling.source != self.marginals[i1]:
                raise InvariantViolation(
                    f"coupling ({i1 + 1},{i2 + 1}) spread side is not receiver {i1 + 1}'s marginal"
                )
            if coupling.target != self.marginals[i2]:
                raise InvariantViolation(
                    f"coupling ({i1 + 1},{i2 + 1}) coarse side is not receiver {i2 + 1}'s marginal"
                )
        if isinstance(instance.utilities, AdditiveUtility):
            total = Fraction(0)
            for dist, u in zip(self.marginals, instance.utilities.receivers):
                total += sum(
                    (m * u.value_at(p, instance.space) for p, m in zip(dist.points, dist.masses)),
                    Fraction(0),
                )
            if total != self.objective:
                raise InvariantViolation(
                    f"stored objective {self.objective} != recomputed {total}"
                )


def _read_solution(
    glp: GridLP, assignment, objective, instance: PersuasionInstance
) -> GridSolution:
    marginals = []
    for i in range(instance.k):
        pairs = [
            (w, assignment[glp.x_index[(i, w)]])
            for w in glp.points
            if assignment[glp.x_index[(i, w)]]
        ]
        marginals.append(BeliefDistribution.from_pairs(pairs))
    couplings = {}
    for i1, i2 in glp.edges:
        flow = {}
        for l in glp.points:
            for r in glp.points:
                f = assignment[glp.y_index[(i1, i2, l, r)]]
                if f:
                    flow[(l, r)] = f
        couplings[(i1, i2)] = Coupling(
            source=marginals[i1], target=marginals[i2], flow=flow
        )
    return GridSolution(
        step=glp.grid.step,
        marginals=tuple(marginals),
        couplings=couplings,
        objective=objective,
    )


def solve_grid(instance: PersuasionInstance, grid: PosteriorGrid) -> GridSolution:
    """Assemble and solve at a fixed grid; the LP is always feasible and
    bounded, so anything but an optimal status is a solver defect."""
    glp = build_grid_lp(instance, grid)
    sol = lp.solve(glp.program)
    if sol.status != lp.OPTIMAL:
        raise InvariantViolation(f"grid program reported {sol.status}")
    solution = _read_solution(glp, sol.assignment, sol.objective, instance)
    solution.validate(instance)
    return solution


def solve_fptas(
    instance: PersuasionInstance, epsilon: Fraction | None = None
) -> tuple[GridSolution, "SignalingTable"]:
    """Solve to additive accuracy epsilon and extract the table.

    epsilon falls back to the instance's own; the grid step is the unit
    fraction 1/ceil(1/epsilon).
    """
    if epsilon is None:
        epsilon = instance.epsilon
    if epsilon is None:
        raise BadEpsilon("no epsilon given and the instance carries none")
    grid = PosteriorGrid.for_epsilon(instance.space.size, Fraction(epsilon))
    solution = solve_grid(instance, grid)
    return solution, extract_table(solution, instance)


@dataclass(frozen=True)
class SignalingTable:
    """Per-state conditional distribution over posterior-label profiles.

    profiles are sorted and distinct; rows maps each state name to the
    probability vector aligned with profiles.
    """

    space: StateSpace
    profiles: tuple[tuple[Posterior, ...], ...]
    rows: Mapping[str, tuple[Fraction, ...]]

    def __post_init__(self):
        if not self.profiles:
            raise ValidationError("table has no profiles")
        k = len(self.profiles[0])
        if any(len(p) != k for p in self.profiles):
            raise ValidationError("profiles of unequal receiver count")
        if list(self.profiles) != sorted(set(self.profiles)):
            raise ValidationError("profiles must be sorted and distinct")
        rows = {s: tuple(Fraction(v) for v in vec) for s, vec in self.rows.items()}
        object.__setattr__(self, "rows", rows)
        if set(rows) != set(self.space.states):
            raise ValidationError("table rows do not cover the state space")
        for state, vec in rows.items():
            if len(vec) != len(self.profiles):
                raise ValidationError(f"row {state!r} has wrong length")
            if any(v < 0 for v in vec):
                raise ValidationError(f"negative probability in row {state!r}")
            if sum(vec) != 1:
                raise ValidationError(f"row {state!r} sums to {sum(vec)}, not 1")

    @property
    def k(self) -> int:
        return len(self.profiles[0])

    def joint_law(self, prior: Prior) -> dict[tuple[str, int], Fraction]:
        """Map (state, profile index) -> unconditional probability."""
        out = {}
        for b, state in enumerate(self.space.states):
            vec = self.rows[state]
            for idx in range(len(self.profiles)):
                if vec[idx]:
                    out[(state, idx)] = prior[b] * vec[idx]
        return out

    def receiver_marginal(self, i: int, prior: Prior) -> BeliefDistribution:
        acc: dict[Posterior, Fraction] = {}
        for (state, idx), mass in self.joint_law(prior).items():
            label = self.profiles[idx][i]
            acc[label] = acc.get(label, Fraction(0)) + mass
        return BeliefDistribution.from_pairs(acc.items())

    def validate(self, prior: Prior) -> None:
        """Check that every receiver's posterior given his own label is
        that label; raises InvariantViolation with the offender."""
        if prior.space != self.space:
            raise InvariantViolation("table and prior disagree on the state space")
        joint = self.joint_law(prior)
        for i in range(self.k):
            mass: dict[Posterior, Fraction] = {}
            weighted: dict[Posterior, list[Fraction]] = {}
            for (state, idx), m in joint.items():
                label = self.profiles[idx][i]
                b = self.space.index(state)
                mass[label] = mass.get(label, Fraction(0)) + m
                weighted.setdefault(label, [Fraction(0)] * self.space.size)
                weighted[label][b] += m
            for label, total in mass.items():
                for b in range(self.space.size):
                    if weighted[label][b] != label[b] * total:
                        raise InvariantViolation(
                            f"receiver {i + 1}: posterior given label {label} "
                            f"diverges from the label in state {self.space.states[b]!r}"
                        )

    @classmethod
    def from_signals(
        cls,
        prior: Prior,
        per_state: Mapping[str, Mapping[tuple, Fraction]],
    ) -> "SignalingTable":
        """Canonicalize an arbitrary-signal table: each receiver's signal
        is renamed to the posterior it induces, equal-label profiles are
        merged."""
        space = prior.space
        if set(per_state) != set(space.states):
            raise ValidationError("signal table does not cover the state space")
        k = None
        for state, dist in per_state.items():
            for prof in dist:
                if k is None:
                    k = len(prof)
                elif len(prof) != k:
                    raise ValidationError("signal profiles of unequal receiver count")
        if k is None:
            raise ValidationError("signal table is empty")
        # joint mass of (state, raw profile), then per-receiver posteriors
        posteriors: list[dict] = []
        for i in range(k):
            acc: dict = {}
            for b, state in enumerate(space.states):
                for prof, p in per_state[state].items():
                    if p:
                        sig = prof[i]
                        vec = acc.setdefault(sig, [Fraction(0)] * space.size)
                        vec[b] += prior[b] * p
            posteriors.append(
                {
                    sig: tuple(v / sum(vec) for v in vec)
                    for sig, vec in acc.items()
                }
            )
        merged: dict[str, dict[tuple, Fraction]] = {s: {} for s in space.states}
        labels = set()
        for state in space.states:
            for prof, p in per_state[state].items():
                if not p:
                    continue
                labeled = tuple(posteriors[i][prof[i]] for i in range(k))
                labels.add(labeled)
                merged[state][labeled] = merged[state].get(labeled, Fraction(0)) + p
        profiles = tuple(sorted(labels))
        index = {prof: idx for idx, prof in enumerate(profiles)}
        rows = {}
        for state in space.states:
            vec = [Fraction(0)] * len(profiles)
            for prof, p in merged[state].items():
                vec[index[prof]] = p
            rows[state] = tuple(vec)
        return cls(space=space, profiles=profiles, rows=rows)


def extract_table(
    solution: GridSolution, instance: PersuasionInstance
) -> SignalingTable:
    """Turn a grid solution into an explicit per-state table.

    Within each tree, labels are drawn top-down: the root from its
    marginal, each child from its parent's coupling column.  Distinct
    trees are independent given the state.  Conditioning on the state
    reweights a profile by prod_roots label_root(state)/prior(state),
    which is exactly Bayes' rule because only root labels carry direct
    state information.
    """
    solution.validate(instance)
    graph, edges = _forest_edges(instance)
    parent = graph.parent
    order = graph.top_down()

    # profile assignments per tree, as {receiver: label} with joint mass
    trees: dict[int, list[tuple[dict[int, Posterior], Fraction]]] = {}
    root_of: dict[int, int] = {}
    for v in order:
        if parent[v] is None:
            root_of[v] = v
            trees[v] = [
                ({v: point}, mass)
                for point, mass in zip(
                    solution.marginals[v].points, solution.marginals[v].masses
                )
            ]
        else:
            p = parent[v]
            root_of[v] = root_of[p]
            coupling = solution.couplings[(p, v)]
            parent_mass = {
                point: mass
                for point, mass in zip(
                    solution.marginals[p].points, solution.marginals[p].masses
                )
            }
            extended = []
            for labels, mass in trees[root_of[v]]:
                lp_point = labels[p]
                for (l, r), f in coupling.flow.items():
                    if l == lp_point:
                        extended.append(({**labels, v: r}, mass * f / parent_mass[l]))
            trees[root_of[v]] = extended

    roots = sorted(trees)
    combined: list[tuple[dict[int, Posterior], Fraction]] = [({}, Fraction(1))]
    for root in roots:
        combined = [
            ({**labels, **tree_labels}, mass * tree_mass)
            for labels, mass in combined
            for tree_labels, tree_mass in trees[root]
        ]

    profile_mass: dict[tuple[Posterior, ...], Fraction] = {}
    for labels, mass in combined:
        profile = tuple(labels[i] for i in range(instance.k))
        profile_mass[profile] = profile_mass.get(profile, Fraction(0)) + mass

    profiles = tuple(sorted(profile_mass))
    rows = {}
    for b, state in enumerate(instance.space.states):
        vec = []
        for profile in profiles:
            scale = Fraction(1)
            for root in roots:
                scale *= profile[root][b] / instance.prior[b]
            vec.append(profile_mass[profile] * scale)
        if sum(vec) != 1:
            raise InvariantViolation(
                f"extracted row for state {state!r} sums to {sum(vec)}"
            )
        rows[state] = tuple(vec)
    table = SignalingTable(space=instance.space, profiles=profiles, rows=rows)
    table.validate(instance.prior)
    return table


def evaluate_table(table: SignalingTable, instance: PersuasionInstance) -> Fraction:
    """Exact expected sender utility of a table under the instance."""
    if table.k != instance.k:
        raise ValidationError("table and instance disagree on receiver count")
    total = Fraction(0)
    for b, state in enumerate(instance.space.states):
        vec = table.rows[state]
        for idx, profile in enumerate(table.profiles):
            if vec[idx]:
                total += (
                    instance.prior[b]
                    * vec[idx]
                    * instance.utilities.evaluate(profile, instance.space)
                )
    return total
