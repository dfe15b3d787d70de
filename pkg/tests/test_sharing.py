import random
from dataclasses import replace
from fractions import Fraction
from itertools import combinations, product

import pytest

from mcpersuasion.dominance import dominance_set
from mcpersuasion.errors import (
    AlphabetTooSmall,
    BudgetExceeded,
    DominatedTarget,
    DuplicateRows,
    NoCarrierChannel,
    SuperiorityViolated,
    ValidationError,
)
from mcpersuasion.forest import SignalingTable
from mcpersuasion.model import (
    AdditiveUtility,
    CommunicationStructure,
    ConstantUtility,
    PersuasionInstance,
    Prior,
    StateSpace,
)
from mcpersuasion.sharing import (
    ChannelScheme,
    LabelAlphabet,
    Slot,
    emulate_private_subset,
    enumerate_executions,
    receiver_view,
    shield_receiver,
    transport_scheme,
    verify_scheme,
)

BIN = StateSpace(("0", "1"))
HALF = Prior(BIN, (Fraction(1, 2), Fraction(1, 2)))
SPERNER3 = CommunicationStructure(((1, 1, 0), (0, 1, 1), (1, 0, 1)))

LO = (Fraction(0), Fraction(1))
HI = (Fraction(1), Fraction(0))
MID = (Fraction(1, 2), Fraction(1, 2))


def _identity(k):
    return CommunicationStructure(
        tuple(tuple(1 if i == j else 0 for j in range(k)) for i in range(k))
    )


def _instance(structure):
    receivers = tuple(ConstantUtility(Fraction(1)) for _ in range(structure.k))
    return PersuasionInstance(BIN, HALF, structure, AdditiveUtility(receivers))


def _reveal_to_first(k):
    """Full revelation to receiver 1, no information to anyone else."""
    rest = (MID,) * (k - 1)
    return SignalingTable(
        space=BIN,
        profiles=((LO,) + rest, (HI,) + rest),
        rows={"0": (Fraction(0), Fraction(1)), "1": (Fraction(1), Fraction(0))},
    )


def _independent_table(rng, k, signals=2, den=6):
    """Each receiver gets his own conditionally independent binary-ish
    signal; labels come out of the posterior relabeling."""
    rows = []
    for _ in range(k):
        per_state = []
        for _ in range(2):
            cuts = sorted(rng.randint(0, den) for _ in range(signals - 1))
            probs, prev = [], 0
            for c in cuts:
                probs.append(Fraction(c - prev, den))
                prev = c
            probs.append(Fraction(den - prev, den))
            per_state.append(probs)
        rows.append(per_state)
    per_state_dist = {}
    for b, state in enumerate(BIN.states):
        dist = {}
        for prof in product(range(signals), repeat=k):
            p = Fraction(1)
            for i, sig in enumerate(prof):
                p *= rows[i][b][sig]
            if p:
                dist[prof] = p
        per_state_dist[state] = dist
    return SignalingTable.from_signals(HALF, per_state_dist)


def test_alphabet_codes_by_sorted_order():
    alpha = LabelAlphabet(3, (LO, MID, HI))
    assert alpha.code(LO) == 0
    assert alpha.code(MID) == 1
    assert alpha.decode(2) == HI
    with pytest.raises(ValidationError):
        alpha.code((Fraction(1, 3), Fraction(2, 3)))


def test_alphabet_rejects_small_modulus():
    with pytest.raises(AlphabetTooSmall):
        LabelAlphabet(2, (LO, MID, HI))
    with pytest.raises(AlphabetTooSmall):
        LabelAlphabet(1, (LO,))


def test_one_time_pad_is_uniform():
    for q in range(2, 8):
        for c in range(q):
            image = sorted((c + e) % q for e in range(q))
            assert image == list(range(q))


def test_scheme_rejects_dangling_key():
    table = _reveal_to_first(1)
    with pytest.raises(ValidationError):
        ChannelScheme(
            q=2,
            structure=_identity(1),
            covered=frozenset({0}),
            alphabets=(LabelAlphabet(2, (LO, HI)),),
            slots=(Slot(0, 0, (0,)),),
            key_count=1,
            table=table,
        )


def test_scheme_rejects_uncovered_owner():
    table = _reveal_to_first(2)
    with pytest.raises(ValidationError):
        ChannelScheme(
            q=2,
            structure=_identity(2),
            covered=frozenset({0}),
            alphabets=(LabelAlphabet(2, (LO, HI)), None),
            slots=(Slot(0, 0, ()), Slot(1, 1, ())),
            key_count=0,
            table=table,
        )


def test_private_structure_needs_no_keys():
    k = 3
    table = _reveal_to_first(k)
    scheme = emulate_private_subset(_identity(k), range(k), table)
    assert scheme.key_count == 0
    assert scheme.slots == tuple(Slot(i, i, ()) for i in range(k))
    report = verify_scheme(scheme, _identity(k), table, _instance(_identity(k)))
    assert report.ok


def test_emulate_single_target_on_shared_channels():
    table = _reveal_to_first(3)
    scheme = emulate_private_subset(SPERNER3, [0], table, q=2)
    # payload for receiver 1 on channel 1, one key against the channel's
    # co-observer (receiver 3), fetched over channel 2 which receiver 3
    # cannot watch
    assert scheme.slots == (Slot(1, None, (0,)), Slot(0, 0, (0,)))
    assert scheme.key_count == 1
    report = verify_scheme(scheme, SPERNER3, table, _instance(SPERNER3))
    assert report.ok
    # the other receivers' views are uniform and state independent
    views = {1: {}, 2: {}}
    for rec in enumerate_executions(scheme):
        for r in views:
            key = (rec.state, receiver_view(scheme, rec, r).symbols)
            views[r][key] = views[r].get(key, Fraction(0)) + rec.probability
    for r, acc in views.items():
        by_state = {}
        for (state, symbols), mass in acc.items():
            by_state.setdefault(state, {})[symbols] = mass
        assert by_state["0"] == by_state["1"]
        assert len(set(by_state["0"].values())) == 1


def test_emulate_whole_antichain():
    table = _independent_table(random.Random(7), 3)
    scheme = emulate_private_subset(SPERNER3, [0, 1, 2], table)
    report = verify_scheme(scheme, SPERNER3, table, _instance(SPERNER3))
    assert report.ok
    assert report.law_matches


def test_emulate_rejects_dominated_target():
    nested = CommunicationStructure(((1, 1), (0, 1)))
    table = _reveal_to_first(2)
    with pytest.raises(DominatedTarget):
        emulate_private_subset(nested, [1], table)


def test_emulate_needs_a_carrier():
    deaf = CommunicationStructure(((0,),))
    table = _reveal_to_first(1)
    with pytest.raises(NoCarrierChannel):
        emulate_private_subset(deaf, [0], table)


def test_emulate_respects_explicit_modulus():
    third = (Fraction(1, 3), Fraction(2, 3))
    table = SignalingTable(
        space=BIN,
        profiles=((LO,), (third,), (HI,)),
        rows={
            "0": (Fraction(0), Fraction(1, 2), Fraction(1, 2)),
            "1": (Fraction(1, 2), Fraction(1, 2), Fraction(0)),
        },
    )
    with pytest.raises(AlphabetTooSmall):
        emulate_private_subset(_identity(1), [0], table, q=2)


def test_shield_skips_channels_guarded_by_dominated_receivers():
    nested = CommunicationStructure(((1, 1), (0, 1)))
    table = SignalingTable(
        space=BIN,
        profiles=((MID, LO), (MID, HI)),
        rows={"0": (Fraction(0), Fraction(1)), "1": (Fraction(1), Fraction(0))},
    )
    base = ChannelScheme(
        q=2,
        structure=nested,
        covered=frozenset({1}),
        alphabets=(None, LabelAlphabet(2, (LO, HI))),
        slots=(Slot(1, 1, ()),),
        key_count=0,
        table=table,
    )
    shielded = shield_receiver(nested, 0, base)
    # receiver 2 already guards the only channel receiver 1 watches, so
    # nothing changes: receiver 1 is entitled to receiver 2's label
    assert shielded == base
    report = verify_scheme(shielded, nested, table, _instance(nested))
    assert report.ok
    # receiver 1's posterior given his view equals the posterior given
    # exactly receiver 2's label
    by_view = {}
    by_label = {}
    for rec in enumerate_executions(shielded):
        b = BIN.index(rec.state)
        view = receiver_view(shielded, rec, 0).symbols
        label = table.profiles[rec.branch][1]
        for acc, key in ((by_view, view), (by_label, label)):
            vec = acc.setdefault(key, [Fraction(0), Fraction(0)])
            vec[b] += HALF[b] * rec.probability
    for rec in enumerate_executions(shielded):
        view = receiver_view(shielded, rec, 0).symbols
        label = table.profiles[rec.branch][1]
        v, l = by_view[view], by_label[label]
        assert tuple(x / sum(v) for x in v) == tuple(x / sum(l) for x in l)


def test_shield_leaves_unwatched_schemes_alone():
    table = _reveal_to_first(3)
    base = ChannelScheme(
        q=2,
        structure=SPERNER3,
        covered=frozenset({1}),
        alphabets=(None, LabelAlphabet(2, (MID,)), None),
        slots=(Slot(2, 1, ()),),
        key_count=0,
        table=table,
    )
    assert shield_receiver(SPERNER3, 0, base) == base


def test_transport_between_identical_private_structures():
    k = 3
    table = _independent_table(random.Random(3), k)
    scheme = transport_scheme(_identity(k), _identity(k), table)
    assert scheme.key_count == 0
    report = verify_scheme(scheme, _identity(k), table, _instance(_identity(k)))
    assert report.ok


def test_transport_private_to_antichain_layout():
    table = _independent_table(random.Random(11), 3)
    scheme = transport_scheme(_identity(3), SPERNER3, table)
    # deepest bundle first: receiver 3's payload lands bare on channel 1,
    # receiver 2's on channel 2; shielding receiver 1 re-encrypts both
    # with keys fetched over channel 3; receiver 1's own payload is keyed
    # against receiver 3, the key riding channel 2
    assert scheme.slots == (
        Slot(0, 2, (0,)),
        Slot(1, 1, (1,)),
        Slot(2, None, (0,)),
        Slot(2, None, (1,)),
        Slot(1, None, (2,)),
        Slot(0, 0, (2,)),
    )
    assert scheme.key_count == 3
    report = verify_scheme(scheme, SPERNER3, table, _instance(SPERNER3))
    assert report.ok
    assert report.law_matches


def test_transport_into_nested_rows():
    # source structure has both receivers behind one channel, so their
    # labels always agree; the nested destination may let receiver 1 read
    # receiver 2's label outright
    merged = CommunicationStructure(((1,), (1,)))
    nested = CommunicationStructure(((1, 1), (0, 1)))
    per_state = {
        "0": {(0, 0): Fraction(3, 4), (1, 1): Fraction(1, 4)},
        "1": {(0, 0): Fraction(1, 4), (1, 1): Fraction(3, 4)},
    }
    table = SignalingTable.from_signals(HALF, per_state)
    scheme = transport_scheme(merged, nested, table)
    report = verify_scheme(scheme, nested, table, _instance(nested))
    assert report.ok
    assert report.law_matches


def test_transport_refuses_weaker_destinations():
    table = _reveal_to_first(2)
    with pytest.raises(SuperiorityViolated):
        transport_scheme(
            _identity(2), CommunicationStructure(((1, 1), (0, 1))), table
        )


def test_transport_refuses_duplicate_destination_rows():
    table = _reveal_to_first(2)
    with pytest.raises(DuplicateRows):
        transport_scheme(
            CommunicationStructure(((1,), (1,))),
            CommunicationStructure(((1,), (1,))),
            table,
        )


def test_misrouted_key_is_caught():
    table = _reveal_to_first(3)
    scheme = emulate_private_subset(SPERNER3, [0], table, q=2)
    # move the key onto channel 1, which receiver 3 watches as well: he
    # can now strip the mask from receiver 1's payload
    slots = tuple(
        Slot(0, s.owner, s.keys) if s.owner is None else s for s in scheme.slots
    )
    broken = replace(scheme, slots=slots)
    report = verify_scheme(broken, SPERNER3, table, _instance(SPERNER3))
    assert not report.ok
    assert not report.recovery_failures
    assert any(f.startswith("receiver 3") for f in report.privacy_failures)


def test_verify_budget_is_enforced():
    table = _reveal_to_first(3)
    scheme = emulate_private_subset(SPERNER3, [0], table, q=2)
    with pytest.raises(BudgetExceeded):
        verify_scheme(scheme, SPERNER3, table, _instance(SPERNER3), budget=3)


def _antichain_structures(k, n):
    out = []
    for rows in combinations(range(1, 2**n), k):
        if all(a | b not in (a, b) for a, b in combinations(rows, 2)):
            matrix = tuple(
                tuple((m >> j) & 1 for j in range(n)) for m in rows
            )
            out.append(CommunicationStructure(matrix))
    return out


def test_every_small_antichain_emulates_cleanly():
    rng = random.Random(2024)
    structures = []
    for k, n in ((2, 2), (3, 3), (3, 4)):
        structures.extend(_antichain_structures(k, n))
    assert structures
    for structure in structures:
        assert not dominance_set(structure)
        table = _independent_table(rng, structure.k)
        scheme = emulate_private_subset(structure, range(structure.k), table)
        report = verify_scheme(scheme, structure, table, _instance(structure))
        assert report.ok, (structure.matrix, report)


def test_sampled_four_receiver_antichains_emulate_cleanly():
    rng = random.Random(5)
    pool = _antichain_structures(4, 4)
    for structure in rng.sample(pool, 4):
        table = _independent_table(rng, 4)
        scheme = emulate_private_subset(structure, range(4), table)
        report = verify_scheme(
            scheme, structure, table, _instance(structure), budget=10**6
        )
        assert report.ok, (structure.matrix, report)


def test_random_transports_reproduce_the_law():
    rng = random.Random(17)
    destinations = _antichain_structures(3, 4)
    for destination in rng.sample(destinations, 5):
        table = _independent_table(rng, 3)
        scheme = transport_scheme(_identity(3), destination, table)
        report = verify_scheme(
            scheme, destination, table, _instance(destination), budget=10**6
        )
        assert report.ok, (destination.matrix, report)
        assert report.law_matches
