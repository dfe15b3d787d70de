import random
from dataclasses import replace
from fractions import Fraction
from itertools import combinations

import pytest

from mcpersuasion.dominance import dominance_set
from mcpersuasion.errors import BudgetExceeded, ValidationError
from mcpersuasion.forest import evaluate_table
from mcpersuasion.hardness import (
    BUnionInstance,
    verify_reduction,
    build_reduction,
    claimed_dominance_pairs,
    min_b_union,
    optimal_value,
    reduction_structure,
    witness_table,
)

MID = (Fraction(1, 2), Fraction(1, 2))


def _inst(w, sets, b):
    return BUnionInstance(w=w, sets=tuple(frozenset(s) for s in sets), b=b)


FLAGSHIP = _inst(3, [{1}, {2}, {1, 2}], 2)


def test_instance_validation():
    with pytest.raises(ValidationError):
        _inst(3, [{1}, set()], 1)
    with pytest.raises(ValidationError):
        _inst(3, [{1, 4}], 1)
    with pytest.raises(ValidationError):
        _inst(3, [{1}], 2)
    with pytest.raises(ValidationError):
        _inst(3, [{1}], -1)
    with pytest.raises(ValidationError):
        _inst(0, [{1}], 1)
    assert _inst(3, [{1}], 0).b == 0


def test_min_union_enumerates_exactly():
    assert min_b_union(FLAGSHIP) == (2, (0, 1))
    # forced selection
    assert min_b_union(_inst(4, [{1, 2}, {3}], 2)) == (3, (0, 1))
    # duplicated sets keep the first witness
    assert min_b_union(_inst(3, [{1}, {1}, {2, 3}], 2)) == (1, (0, 1))
    assert min_b_union(_inst(3, [{1}, {2}], 0)) == (0, ())


def test_min_union_budget():
    inst = _inst(4, [{1}, {2}, {3}, {4}], 2)
    with pytest.raises(BudgetExceeded):
        min_b_union(inst, budget=5)
    assert min_b_union(inst, budget=6)[0] == 2


def test_structure_layout():
    structure = reduction_structure(FLAGSHIP)
    assert structure.matrix == (
        (1, 0, 0),
        (0, 1, 0),
        (0, 0, 1),
        (1, 0, 1),
        (0, 1, 1),
        (0, 0, 0),
    )


def test_flagship_reduction_is_consistent():
    out = build_reduction(FLAGSHIP)
    assert out.h == 2
    assert out.witness_sets == (0, 1)
    # state 0 pays the w universe receivers; state 1 pays the 4w bonus
    # plus the single uninformed universe receiver
    assert out.value == Fraction(3, 2) + Fraction(12 + 1, 2)
    assert out.value == Fraction(8)
    assert evaluate_table(out.witness, out.instance) == Fraction(8)
    report = verify_reduction(out)
    assert report.ok, report.failures
    assert report.value == Fraction(8)


def test_tiny_universe_value():
    out = build_reduction(_inst(1, [{1}], 1))
    assert out.h == 1
    assert out.value == Fraction(5, 2)
    assert verify_reduction(out).ok


def test_degenerate_budget_pays_the_bonus_everywhere():
    out = build_reduction(_inst(3, [{1}, {2}], 0))
    assert out.h == 0
    assert out.value == Fraction(15)
    assert len(out.witness.profiles) == 1
    assert all(label == MID for label in out.witness.profiles[0])
    assert verify_reduction(out).ok


def test_silence_earns_only_the_universe():
    out = build_reduction(FLAGSHIP)
    silent = witness_table(FLAGSHIP, out.instance.structure, ())
    assert evaluate_table(silent, out.instance) == Fraction(3)


def test_nonminimal_witness_is_reported():
    inst = _inst(3, [{1}, {2}, {1, 2}], 1)
    out = build_reduction(inst)
    assert out.h == 1 and out.witness_sets == (0,)
    assert out.value == Fraction(17, 2)
    wasteful = witness_table(inst, out.instance.structure, (2,))
    assert evaluate_table(wasteful, out.instance) == Fraction(16, 2)
    report = verify_reduction(replace(out, witness=wasteful))
    assert not report.ok
    assert any("set receivers" in f for f in report.failures)
    assert any("differs from the recorded optimum" in f for f in report.failures)


def test_dominance_claim_on_flagship_is_an_undercount():
    out = build_reduction(FLAGSHIP)
    claimed = claimed_dominance_pairs(FLAGSHIP)
    actual = dominance_set(out.instance.structure)
    assert claimed < actual
    # universe element 3 sits in no set: its empty row is dominated by all
    assert (0, 5) in actual and (0, 5) not in claimed


def test_dominance_claim_is_exact_without_degeneracies():
    inst = _inst(2, [{1}, {2}, {1, 2}], 2)
    structure = reduction_structure(inst)
    assert claimed_dominance_pairs(inst) == dominance_set(structure)


def _clean(inst):
    """No universe row inside another, none inside a single channel."""
    rows = [
        frozenset(j for j in range(inst.t) if (i + 1) in inst.sets[j])
        for i in range(inst.w)
    ]
    for r in rows:
        if len(r) <= 1:
            return False
    for a, c in combinations(rows, 2):
        if a <= c or c <= a:
            return False
    return True


def test_random_instances_round_out_the_claims():
    rng = random.Random(404)
    for _ in range(40):
        w = rng.randint(1, 6)
        t = rng.randint(1, 5)
        sets = [
            frozenset(rng.sample(range(1, w + 1), rng.randint(1, w)))
            for _ in range(t)
        ]
        b = rng.randint(0, t)
        inst = _inst(w, sets, b)
        out = build_reduction(inst)
        # independent minimum-union search
        best = None
        for pick in combinations(range(t), b):
            union = set()
            for j in pick:
                union |= sets[j]
            best = len(union) if best is None else min(best, len(union))
        assert out.h == best
        expected = (
            Fraction(5 * w)
            if b == 0
            else Fraction(w, 2) + Fraction(4 * w + (w - out.h), 2)
        )
        assert out.value == expected
        assert evaluate_table(out.witness, out.instance) == expected
        assert verify_reduction(out).ok
        claimed = claimed_dominance_pairs(inst)
        actual = dominance_set(out.instance.structure)
        assert claimed <= actual
        if _clean(inst):
            assert claimed == actual


def test_value_moves_the_right_way_with_the_budget():
    sets = [{1}, {2, 3}, {1, 4}, {2}]
    prev_h, prev_value = None, None
    for b in range(0, 5):
        inst = _inst(4, sets, b)
        h, _ = min_b_union(inst)
        value = optimal_value(4, h, b)
        if b >= 2:
            assert h >= prev_h
            assert value <= prev_value
        if b == 1:
            assert value <= prev_value
        prev_h, prev_value = h, value
