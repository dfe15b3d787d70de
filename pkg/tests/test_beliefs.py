import random
from fractions import Fraction

import pytest

from mcpersuasion.beliefs import (
    BeliefDistribution,
    Coupling,
    concavify_single,
    concavify_support,
    is_bayes_plausible,
    mps_coupling,
)
from mcpersuasion.errors import PriorOutsideHull, StateSpaceMismatch, ValidationError
from mcpersuasion.model import Prior, StateSpace

F = Fraction
TWO = StateSpace(("0", "1"))


def pt(*xs):
    return tuple(F(x) for x in xs)


def binary_grid(d):
    return [pt(F(d - l, d), F(l, d)) for l in range(d + 1)]


def test_from_pairs_canonicalizes():
    d = BeliefDistribution.from_pairs(
        [
            (pt(1, 0), F(1, 4)),
            (pt(0, 1), F(1, 2)),
            (pt(1, 0), F(1, 4)),
            (pt("1/2", "1/2"), F(0)),
        ]
    )
    assert d.points == (pt(0, 1), pt(1, 0))
    assert d.masses == (F(1, 2), F(1, 2))
    with pytest.raises(ValidationError):
        BeliefDistribution.from_pairs([(pt(1, 0), F(1, 2))])
    with pytest.raises(ValidationError):
        BeliefDistribution.from_pairs([(pt(1, 0), F(-1)), (pt(0, 1), F(2))])


def test_bayes_plausibility():
    prior = Prior(TWO, (F(1, 2), F(1, 2)))
    assert is_bayes_plausible(BeliefDistribution.point_mass(prior.point()), prior)
    full = BeliefDistribution.from_pairs([(pt(1, 0), F(1, 2)), (pt(0, 1), F(1, 2))])
    assert is_bayes_plausible(full, prior)
    assert not is_bayes_plausible(BeliefDistribution.point_mass(pt(1, 0)), prior)
    with pytest.raises(StateSpaceMismatch):
        is_bayes_plausible(
            BeliefDistribution.point_mass(pt(1, 0, 0)), prior
        )


def test_identity_coupling_always_feasible():
    rng = random.Random(3)
    for _ in range(30):
        d = rng.randint(2, 6)
        pairs = []
        remaining = F(1)
        pts = rng.sample(binary_grid(6), d)
        for i, p in enumerate(pts):
            m = remaining if i == d - 1 else F(rng.randint(1, 3), 12)
            if m > remaining:
                m = remaining
            pairs.append((p, m))
            remaining -= m
            if remaining == 0:
                break
        dist = BeliefDistribution.from_pairs(pairs)
        c = mps_coupling(dist, dist)
        assert c is not None


def test_spread_to_point_mass():
    prior = Prior(TWO, (F(1, 2), F(1, 2)))
    full = BeliefDistribution.from_pairs([(pt(1, 0), F(1, 2)), (pt(0, 1), F(1, 2))])
    c = mps_coupling(full, BeliefDistribution.point_mass(prior.point()))
    assert c is not None
    # the other direction collapses information and must fail
    assert mps_coupling(BeliefDistribution.point_mass(prior.point()), full) is None


def test_worked_two_by_two_flows():
    spread = BeliefDistribution.from_pairs([(pt(1, 0), F(1, 2)), (pt(0, 1), F(1, 2))])
    coarse = BeliefDistribution.from_pairs(
        [(pt("3/4", "1/4"), F(1, 2)), (pt("1/4", "3/4"), F(1, 2))]
    )
    c = mps_coupling(spread, coarse)
    assert c is not None
    # the 2x2 transport system has a unique solution
    assert c.flow[(pt(1, 0), pt("3/4", "1/4"))] == F(3, 8)
    assert c.flow[(pt(0, 1), pt("3/4", "1/4"))] == F(1, 8)
    assert c.flow[(pt(1, 0), pt("1/4", "3/4"))] == F(1, 8)
    assert c.flow[(pt(0, 1), pt("1/4", "3/4"))] == F(3, 8)


def test_coupling_validation_rejects_bad_flows():
    spread = BeliefDistribution.from_pairs([(pt(1, 0), F(1, 2)), (pt(0, 1), F(1, 2))])
    coarse = BeliefDistribution.point_mass(pt("1/2", "1/2"))
    with pytest.raises(ValidationError):
        Coupling(
            source=spread,
            target=coarse,
            flow={(pt(1, 0), pt("1/2", "1/2")): F(1)},
        )


def _random_grid_distribution(rng, pts, max_support):
    chosen = rng.sample(pts, rng.randint(1, max_support))
    weights = [rng.randint(1, 4) for _ in chosen]
    total = sum(weights)
    return BeliefDistribution.from_pairs(
        (p, F(w, total)) for p, w in zip(chosen, weights)
    )


def _coarsen(rng, dist):
    """Merge a random partition of the support onto group barycenters."""
    groups = {}
    labels = [rng.randint(0, 2) for _ in dist.points]
    for label, p, m in zip(labels, dist.points, dist.masses):
        groups.setdefault(label, []).append((p, m))
    pairs = []
    for members in groups.values():
        total = sum(m for _, m in members)
        bary = tuple(
            sum(m * p[b] for p, m in members) / total for b in range(dist.dim)
        )
        pairs.append((bary, total))
    return BeliefDistribution.from_pairs(pairs)


def test_mps_transitivity_and_mean_preservation():
    rng = random.Random(11)
    pts = binary_grid(6)
    for _ in range(40):
        A = _random_grid_distribution(rng, pts, 5)
        B = _coarsen(rng, A)
        C = _coarsen(rng, B)
        ab = mps_coupling(A, B)
        bc = mps_coupling(B, C)
        assert ab is not None and bc is not None
        assert A.mean() == B.mean() == C.mean()
        assert mps_coupling(A, C) is not None
        # unequal means can never couple
        if A.mean() != pts[0]:
            assert mps_coupling(A, BeliefDistribution.point_mass(pts[0])) is None


def test_concavify_constant():
    grid = binary_grid(4)
    prior = Prior(TWO, (F(1, 4), F(3, 4)))
    table = {p: F(7, 2) for p in grid}
    assert concavify_single(table, prior) == F(7, 2)


def test_concavify_threshold_worked_example():
    # reward 1 once the second state's probability reaches 1/2
    grid = binary_grid(10)
    prior = Prior(TWO, (F(7, 10), F(3, 10)))
    table = {p: (F(1) if p[1] >= F(1, 2) else F(0)) for p in grid}
    value, dist = concavify_support(table, prior)
    assert value == F(3, 5)
    assert dist.mass_at(pt("1/2", "1/2")) == F(3, 5)
    assert dist.mass_at(pt(1, 0)) == F(2, 5)
    assert is_bayes_plausible(dist, prior)


def test_concavify_prior_at_maximizer():
    grid = binary_grid(4)
    prior = Prior(TWO, (F(1, 2), F(1, 2)))
    table = {p: (F(2) if p == prior.point() else F(0)) for p in grid}
    assert concavify_single(table, prior) == F(2)


def test_concavify_outside_hull():
    prior = Prior(TWO, (F(1, 2), F(1, 2)))
    table = {pt(1, 0): F(1), pt("3/4", "1/4"): F(0)}
    with pytest.raises(PriorOutsideHull):
        concavify_single(table, prior)


def _concavify_oracle(table, prior):
    """Brute force over all support pairs on a binary grid."""
    pts = sorted(table)
    best = None
    for p in pts:
        if p == prior.point():
            best = table[p]
    for a in pts:
        for b in pts:
            if a[1] == b[1]:
                continue
            lam = (prior.point()[1] - b[1]) / (a[1] - b[1])
            if 0 <= lam <= 1:
                val = lam * table[a] + (1 - lam) * table[b]
                if best is None or val > best:
                    best = val
    return best


def test_concavify_matches_brute_force_binary():
    rng = random.Random(29)
    for _ in range(60):
        d = rng.randint(2, 6)
        grid = binary_grid(d)
        table = {p: F(rng.randint(-3, 6)) for p in grid}
        num = rng.randint(1, 2 * d - 1)
        prior = Prior(TWO, (F(2 * d - num, 2 * d), F(num, 2 * d)))
        assert concavify_single(table, prior) == _concavify_oracle(table, prior)
