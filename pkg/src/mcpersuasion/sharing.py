"""One-time-pad realization of signaling tables on shared channels.

A signaling table prescribes, per state, a joint distribution over
posterior-label profiles.  When receivers share channels the table cannot
simply be broadcast: a receiver reading a channel meant for somebody else
would learn more than his own label.  The constructions here hide labels
behind additive masks over Z_q so that each receiver recovers exactly the
labels of the receivers he information-dominates, plus his own, and
nothing else.  All randomness is finite, so the zero-leak property is
checked by exhaustive enumeration instead of being asserted.

Wire format: each channel carries a fixed-length tuple of Z_q symbols.  A
slot is either a payload (the owner's label code plus a sum of keys, mod
q) or a bare key (uniform on Z_q, independent of everything else).  A
receiver's view is the concatenation of the tuples on his channels, in
channel order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterator, Optional

from .dominance import dominance_set, is_superior
from .errors import (
    AlphabetTooSmall,
    BudgetExceeded,
    DominatedTarget,
    DuplicateRows,
    InvariantViolation,
    NoCarrierChannel,
    NoKeyChannel,
    ReceiverCountMismatch,
    StateSpaceMismatch,
    SuperiorityViolated,
    ValidationError,
)
from .forest import SignalingTable
from .model import CommunicationStructure, PersuasionInstance, Posterior, format_rational

DEFAULT_VERIFY_BUDGET = 10_000_000


def _fmt_label(label: Posterior) -> str:
    return "(" + ", ".join(format_rational(c) for c in label) + ")"


@dataclass(frozen=True)
class LabelAlphabet:
    """Injective coding of a receiver's posterior labels into Z_q.

    Codes are assigned by sorted label order, so a given label set always
    codes the same way.
    """

    modulus: int
    labels: tuple[Posterior, ...]

    def __post_init__(self):
        if self.modulus < 2:
            raise AlphabetTooSmall(f"modulus {self.modulus} is below 2")
        labels = tuple(self.labels)
        if list(labels) != sorted(set(labels)):
            raise ValidationError("alphabet labels must be sorted and distinct")
        if len(labels) > self.modulus:
            raise AlphabetTooSmall(
                f"{len(labels)} labels do not fit into Z_{self.modulus}"
            )
        object.__setattr__(self, "labels", labels)

    def code(self, label: Posterior) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"label {_fmt_label(label)} not in alphabet") from None

    def decode(self, symbol: int) -> Posterior:
        if not 0 <= symbol < len(self.labels):
            raise ValidationError(f"symbol {symbol} does not decode to a label")
        return self.labels[symbol]


@dataclass(frozen=True)
class Slot:
    """One Z_q symbol position on a channel.

    owner None marks a bare key slot; it carries the single key listed in
    keys.  Otherwise the slot is a payload: the owner's label code plus
    the sum of the listed keys, mod q.
    """

    channel: int
    owner: Optional[int]
    keys: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(self.keys))
        if self.owner is None and len(self.keys) != 1:
            raise ValidationError("a bare key slot carries exactly one key")


@dataclass(frozen=True)
class ChannelScheme:
    """A per-state randomized program emitting symbol tuples on channels.

    Sampling has two independent stages: draw a profile index from the
    table row of the realized state, draw every key uniformly on Z_q,
    then fill the slots.  The slot list fixes the wire layout; channel j
    carries the subsequence of slots with slot.channel == j, in order, so
    tuple arities are constant across executions.
    """

    q: int
    structure: CommunicationStructure
    covered: frozenset[int]
    alphabets: tuple[Optional[LabelAlphabet], ...]
    slots: tuple[Slot, ...]
    key_count: int
    table: SignalingTable

    def __post_init__(self):
        object.__setattr__(self, "covered", frozenset(self.covered))
        object.__setattr__(self, "alphabets", tuple(self.alphabets))
        object.__setattr__(self, "slots", tuple(self.slots))
        k, n = self.structure.k, self.structure.n
        if self.q < 2:
            raise AlphabetTooSmall(f"modulus {self.q} is below 2")
        if self.table.k != k:
            raise ReceiverCountMismatch(
                f"table speaks of {self.table.k} receivers, structure of {k}"
            )
        if not self.covered <= set(range(k)):
            raise ValidationError("covered set names an unknown receiver")
        if len(self.alphabets) != k:
            raise ValidationError("one alphabet entry per receiver expected")
        for i in range(k):
            have = self.alphabets[i] is not None
            if have != (i in self.covered):
                raise ValidationError(
                    f"receiver {i + 1}: alphabet present iff receiver is covered"
                )
            if have and self.alphabets[i].modulus != self.q:
                raise ValidationError(f"receiver {i + 1}: alphabet modulus differs")
        bare = []
        for slot in self.slots:
            if not 0 <= slot.channel < n:
                raise ValidationError(f"slot on unknown channel {slot.channel + 1}")
            if slot.owner is None:
                bare.append(slot.keys[0])
            elif slot.owner not in self.covered:
                raise ValidationError(
                    f"payload for uncovered receiver {slot.owner + 1}"
                )
            if any(not 0 <= e < self.key_count for e in slot.keys):
                raise ValidationError("slot references an unknown key")
        if sorted(bare) != list(range(self.key_count)):
            raise ValidationError("each key must ride exactly one bare slot")

    def arity(self, channel: int) -> int:
        return sum(1 for slot in self.slots if slot.channel == channel)

    def channel_slots(self, channel: int) -> tuple[Slot, ...]:
        return tuple(s for s in self.slots if s.channel == channel)


@dataclass(frozen=True)
class ExecutionRecord:
    """One concrete emission: realized state, table branch, key values,
    and the per-channel symbol tuples.  probability is conditional on the
    state."""

    state: str
    branch: int
    keys: tuple[int, ...]
    probability: Fraction
    channels: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ReceiverView:
    receiver: int
    symbols: tuple[int, ...]


def _fill_channels(
    scheme: ChannelScheme, profile: tuple[Posterior, ...], keys: tuple[int, ...]
) -> tuple[tuple[int, ...], ...]:
    wires: list[list[int]] = [[] for _ in range(scheme.structure.n)]
    for slot in scheme.slots:
        if slot.owner is None:
            value = keys[slot.keys[0]]
        else:
            value = scheme.alphabets[slot.owner].code(profile[slot.owner])
            for e in slot.keys:
                value += keys[e]
        wires[slot.channel].append(value % scheme.q)
    return tuple(tuple(w) for w in wires)


def enumerate_executions(scheme: ChannelScheme) -> Iterator[ExecutionRecord]:
    """All positive-probability executions, state by state, branch by
    branch, keys in lexicographic order."""
    key_mass = Fraction(1, scheme.q**scheme.key_count)
    for state in scheme.table.space.states:
        row = scheme.table.rows[state]
        for branch, mass in enumerate(row):
            if mass == 0:
                continue
            profile = scheme.table.profiles[branch]
            for keys in product(range(scheme.q), repeat=scheme.key_count):
                yield ExecutionRecord(
                    state=state,
                    branch=branch,
                    keys=keys,
                    probability=mass * key_mass,
                    channels=_fill_channels(scheme, profile, keys),
                )


def receiver_view(
    scheme: ChannelScheme, execution: ExecutionRecord, receiver: int
) -> ReceiverView:
    chans = scheme.structure.channels_of(receiver)
    symbols = tuple(s for j in chans for s in execution.channels[j])
    return ReceiverView(receiver, symbols)


class _SchemeBuilder:
    """Mutable scaffolding shared by the construction routines."""

    def __init__(self, q: int, structure: CommunicationStructure, table: SignalingTable):
        self.q = q
        self.structure = structure
        self.table = table
        self.slots: list[Slot] = []
        self.covered: set[int] = set()
        self.alphabets: list[Optional[LabelAlphabet]] = [None] * structure.k
        self.key_count = 0

    @classmethod
    def resume(cls, base: ChannelScheme) -> "_SchemeBuilder":
        builder = cls(base.q, base.structure, base.table)
        builder.slots = list(base.slots)
        builder.covered = set(base.covered)
        builder.alphabets = list(base.alphabets)
        builder.key_count = base.key_count
        return builder

    def _alphabet_for(self, i: int) -> LabelAlphabet:
        labels = sorted({profile[i] for profile in self.table.profiles})
        return LabelAlphabet(self.q, tuple(labels))

    def _new_key(self) -> int:
        kappa = self.key_count
        self.key_count += 1
        return kappa

    def _route(self, seer: int, hidden_from: int) -> int:
        """Lowest channel that seer observes and hidden_from does not."""
        for j in self.structure.channels_of(seer):
            if not self.structure.observes(hidden_from, j):
                return j
        raise NoKeyChannel(
            f"no channel reaches receiver {seer + 1} past receiver {hidden_from + 1}"
        )

    def add_bundle(self, i: int, audience: set[int]) -> None:
        """Append receiver i's payload on his lowest channel, keyed once
        against each co-observer of that channel inside audience."""
        chans = self.structure.channels_of(i)
        if not chans:
            raise NoCarrierChannel(f"receiver {i + 1} observes no channel")
        carrier = chans[0]
        keys = []
        for c in self.structure.observers_of(carrier):
            if c == i or c not in audience:
                continue
            kappa = self._new_key()
            self.slots.append(Slot(self._route(i, c), None, (kappa,)))
            keys.append(kappa)
        self.slots.append(Slot(carrier, i, tuple(keys)))
        self.covered.add(i)
        self.alphabets[i] = self._alphabet_for(i)

    def shield(self, i: int) -> None:
        """Re-encrypt every channel i watches that none of the receivers
        he dominates watch for him.

        Each payload on such a channel is replaced by one copy per
        covered co-observer, encrypted with a fresh key that the
        co-observer can fetch and i cannot.  Bare keys stay as they are:
        alone they carry nothing.
        """
        if i in self.covered:
            raise InvariantViolation(
                f"receiver {i + 1} is already covered; shielding would cut him off"
            )
        dominated = {d for (a, d) in dominance_set(self.structure) if a == i}
        guards = dominated & self.covered
        for j in self.structure.channels_of(i):
            watchers = self.structure.observers_of(j)
            if any(c in guards for c in watchers):
                continue
            rebuilt: list[Slot] = []
            fresh: list[Slot] = []
            for slot in self.slots:
                if slot.channel != j or slot.owner is None:
                    rebuilt.append(slot)
                    continue
                for c in watchers:
                    if c == i or c not in self.covered:
                        continue
                    kappa = self._new_key()
                    fresh.append(Slot(self._route(c, i), None, (kappa,)))
                    rebuilt.append(Slot(j, slot.owner, slot.keys + (kappa,)))
            self.slots = rebuilt + fresh

    def build(self) -> ChannelScheme:
        return ChannelScheme(
            q=self.q,
            structure=self.structure,
            covered=frozenset(self.covered),
            alphabets=tuple(self.alphabets),
            slots=tuple(self.slots),
            key_count=self.key_count,
            table=self.table,
        )


def _default_modulus(table: SignalingTable, receivers) -> int:
    widest = 2
    for i in receivers:
        widest = max(widest, len({p[i] for p in table.profiles}))
    return widest


def emulate_private_subset(
    M: CommunicationStructure,
    I,
    table: SignalingTable,
    q: Optional[int] = None,
) -> ChannelScheme:
    """Deliver the table's labels to the receivers in I and pure noise to
    everyone else.

    Each target's payload travels on his lowest channel, encrypted once
    per co-observer of that channel; the key against a co-observer rides
    a channel the target sees and the co-observer does not.  Such a
    channel exists precisely because no target is dominated.
    """
    targets = sorted(set(I))
    if not targets:
        raise ValidationError("the target subset is empty")
    if any(i < 0 or i >= M.k for i in targets):
        raise ValidationError("target subset names an unknown receiver")
    if table.k != M.k:
        raise ReceiverCountMismatch(
            f"table speaks of {table.k} receivers, structure of {M.k}"
        )
    dom = dominance_set(M)
    for i in targets:
        offender = next((a for a in range(M.k) if (a, i) in dom), None)
        if offender is not None:
            raise DominatedTarget(
                f"receiver {i + 1} is dominated by receiver {offender + 1}; "
                "his label cannot be kept private"
            )
    builder = _SchemeBuilder(q or _default_modulus(table, targets), M, table)
    everyone = set(range(M.k))
    for i in targets:
        builder.add_bundle(i, audience=everyone)
    return builder.build()


def shield_receiver(
    M: CommunicationStructure, i: int, base: ChannelScheme
) -> ChannelScheme:
    """Rework base so that receiver i can recover only the labels of the
    receivers he dominates, leaving every covered receiver's decoding
    intact."""
    if base.structure != M:
        raise ValidationError("scheme was built for a different structure")
    if not 0 <= i < M.k:
        raise ValidationError(f"unknown receiver {i + 1}")
    builder = _SchemeBuilder.resume(base)
    builder.shield(i)
    return builder.build()


def transport_scheme(
    M1: CommunicationStructure,
    M2: CommunicationStructure,
    table: SignalingTable,
    q: Optional[int] = None,
) -> ChannelScheme:
    """Realize under M2 a table realizable under M1.

    Peeling order: repeatedly pick the lowest-indexed receiver that no
    other remaining receiver dominates.  The scheme is then assembled
    from the deepest pick outward; each receiver is shielded from the
    channels of the scheme built so far before his own bundle is
    appended, keyed only against the still-remaining receivers.  Earlier
    picks never need keys at append time: their shielding re-encrypts
    whatever they could see.
    """
    if M1.k != M2.k:
        raise ReceiverCountMismatch(
            f"cannot transport between {M1.k} and {M2.k} receivers"
        )
    if table.k != M2.k:
        raise ReceiverCountMismatch(
            f"table speaks of {table.k} receivers, structures of {M2.k}"
        )
    if M2.has_duplicate_rows():
        raise DuplicateRows(
            "destination structure has duplicate rows; merge them first"
        )
    if not is_superior(M2, M1):
        raise SuperiorityViolated(
            "destination structure admits dominating pairs absent from the source"
        )
    dom = dominance_set(M2)
    order: list[int] = []
    active = set(range(M2.k))
    while active:
        pick = min(
            i for i in active if not any((a, i) in dom for a in active if a != i)
        )
        order.append(pick)
        active.remove(pick)
    builder = _SchemeBuilder(q or _default_modulus(table, range(M2.k)), M2, table)
    for t in range(len(order) - 1, -1, -1):
        builder.shield(order[t])
        builder.add_bundle(order[t], audience=set(order[t:]))
    return builder.build()


@dataclass(frozen=True)
class SchemeReport:
    """Outcome of exhaustive scheme verification.

    recovery_failures: receivers whose view fails to pin down their
    target label, or pins down the wrong posterior.
    privacy_failures: receivers whose view, conditioned on the labels of
    the receivers they dominate (and their own), still depends on the
    state or on other labels, or is not uniform on its support.
    """

    ok: bool
    recovery_failures: tuple[str, ...]
    privacy_failures: tuple[str, ...]
    law_matches: bool
    execution_count: int

    def to_doc(self) -> dict:
        return {
            "ok": self.ok,
            "label_recovery": {
                "ok": not self.recovery_failures,
                "failures": list(self.recovery_failures),
            },
            "privacy": {
                "ok": not self.privacy_failures,
                "failures": list(self.privacy_failures),
            },
            "law_matches": self.law_matches,
            "executions": self.execution_count,
        }


def _covered_law(
    table: SignalingTable, prior, covered: tuple[int, ...]
) -> dict[tuple[str, tuple[Posterior, ...]], Fraction]:
    law: dict[tuple[str, tuple[Posterior, ...]], Fraction] = {}
    for (state, idx), mass in table.joint_law(prior).items():
        key = (state, tuple(table.profiles[idx][i] for i in covered))
        law[key] = law.get(key, Fraction(0)) + mass
    return law


def verify_scheme(
    scheme: ChannelScheme,
    M: CommunicationStructure,
    target: SignalingTable,
    instance: PersuasionInstance,
    budget: Optional[int] = DEFAULT_VERIFY_BUDGET,
) -> SchemeReport:
    """Enumerate every execution and check, in exact arithmetic, that the
    scheme delivers labels and leaks nothing.

    Three checks.  Recovery: for every covered receiver, each possible
    view is consistent with a single target label, and the posterior over
    states given the view equals that label.  Privacy: for every
    receiver, the distribution of his view conditioned on the labels he
    is entitled to is the same across all states and branches, and
    uniform on its support.  Law: the joint distribution of state and
    covered labels matches the target table under the instance's prior.
    """
    if scheme.structure != M:
        raise ValidationError("scheme was built for a different structure")
    if target.k != M.k:
        raise ReceiverCountMismatch(
            f"target table speaks of {target.k} receivers, structure of {M.k}"
        )
    space = instance.space
    if scheme.table.space != space or target.space != space:
        raise StateSpaceMismatch("scheme, target, and instance disagree on states")
    size = space.size * len(scheme.table.profiles) * scheme.q**scheme.key_count
    if budget is not None and size > budget:
        raise BudgetExceeded(
            f"verification needs about {size} executions, budget allows {budget}"
        )
    prior = instance.prior
    records = list(enumerate_executions(scheme))
    covered = tuple(sorted(scheme.covered))

    recovery: list[str] = []
    for r in covered:
        by_view: dict[tuple[int, ...], list[ExecutionRecord]] = {}
        for rec in records:
            by_view.setdefault(receiver_view(scheme, rec, r).symbols, []).append(rec)
        for view, grp in sorted(by_view.items()):
            labels = {scheme.table.profiles[rec.branch][r] for rec in grp}
            if len(labels) > 1:
                recovery.append(
                    f"receiver {r + 1}: view {view} is consistent with "
                    f"{len(labels)} different labels"
                )
                continue
            label = labels.pop()
            mass = [Fraction(0)] * space.size
            for rec in grp:
                mass[space.index(rec.state)] += prior[space.index(rec.state)] * rec.probability
            total = sum(mass)
            posterior = tuple(m / total for m in mass)
            if posterior != label:
                recovery.append(
                    f"receiver {r + 1}: view {view} yields posterior "
                    f"{_fmt_label(posterior)} instead of {_fmt_label(label)}"
                )

    dom = dominance_set(M)
    privacy: list[str] = []
    for r in range(M.k):
        entitled = sorted(
            ({r} if r in scheme.covered else set())
            | {d for d in scheme.covered if (r, d) in dom}
        )
        groups: dict[tuple, dict[tuple[str, int], dict[tuple[int, ...], int]]] = {}
        for rec in records:
            cond = tuple(scheme.table.profiles[rec.branch][d] for d in entitled)
            event = (rec.state, rec.branch)
            dist = groups.setdefault(cond, {}).setdefault(event, {})
            view = receiver_view(scheme, rec, r).symbols
            dist[view] = dist.get(view, 0) + 1
        for cond, by_event in sorted(groups.items()):
            events = sorted(by_event)
            reference = by_event[events[0]]
            conditioning = ", ".join(_fmt_label(c) for c in cond) or "nothing"
            for event in events[1:]:
                if by_event[event] != reference:
                    privacy.append(
                        f"receiver {r + 1}: view law given labels [{conditioning}] "
                        f"differs between (state {events[0][0]}, profile "
                        f"{events[0][1] + 1}) and (state {event[0]}, profile "
                        f"{event[1] + 1})"
                    )
                    break
            if len(set(reference.values())) > 1:
                privacy.append(
                    f"receiver {r + 1}: view law given labels [{conditioning}] "
                    "is not uniform on its support"
                )

    law_matches = _covered_law(scheme.table, prior, covered) == _covered_law(
        target, prior, covered
    )
    return SchemeReport(
        ok=not recovery and not privacy and law_matches,
        recovery_failures=tuple(recovery),
        privacy_failures=tuple(privacy),
        law_matches=law_matches,
        execution_count=len(records),
    )
