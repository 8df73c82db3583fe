"""Anonymous-transmission protocols over shared GHZ states.

Implements the classical-bit broadcast (anon_send), anonymous
entanglement between a hidden sender and receiver (ae_establish), qubit
transfer by teleportation over that entanglement (anonq_send), the
rotation-based collision detection used to test for exactly one willing
sender, and the scheduling and key-exchange constructions layered on
top.

Every run yields, besides its output value, a Transcript of what was
broadcast and a RandomnessLedger of the random values each player drew.
Data items and role assignments are deliberately kept out of ledgers:
they are the secrets whose leakage the analysis layer checks for.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .qsim import (
    DenseState,
    GhzPhaseState,
    PAULI_X,
    PAULI_Z,
    apply_phase_flip,
    apply_rz,
    bell_measure,
    dense_apply_gate,
    hadamard_measure_all,
    hadamard_measure_subset,
    make_ghz,
    tensor,
)
from .rng import RngStream


class Role(enum.Enum):
    SENDER = "sender"
    RECEIVER = "receiver"
    NONE = "none"


@dataclass(frozen=True)
class PlayerConfig:
    """Static per-player setup for one protocol run."""

    id: int
    role: Role = Role.NONE
    data_item: object = None
    honest: bool = True


def make_player_configs(
    n: int,
    sender: Optional[int] = None,
    receiver: Optional[int] = None,
    data_item: object = None,
    withholders: Iterable[int] = (),
) -> list[PlayerConfig]:
    """Role table for a run; validates the sender/receiver assignment."""
    withheld = set(withholders)
    if sender is not None and not 0 <= sender < n:
        raise ValueError(f"sender {sender} out of range for n={n}")
    if receiver is not None and not 0 <= receiver < n:
        raise ValueError(f"receiver {receiver} out of range for n={n}")
    if sender is not None and sender == receiver:
        raise ValueError("sender and receiver must differ")
    for w in withheld:
        if not 0 <= w < n:
            raise ValueError(f"withholding player {w} out of range for n={n}")
    configs = []
    for p in range(n):
        role = Role.NONE
        data = None
        if p == sender:
            role = Role.SENDER
            data = data_item
        elif p == receiver:
            role = Role.RECEIVER
        configs.append(PlayerConfig(p, role, data, honest=p not in withheld))
    return configs


@dataclass(frozen=True)
class BroadcastEntry:
    """One broadcast message: who sent it and its bits as 0/1 text."""

    player: int
    bits: str


class Transcript:
    """Ordered broadcast rounds of one protocol run.

    Each round is the list of BroadcastEntry values actually sent, in
    player order.  `aborted` is set when some player failed to broadcast;
    partial rounds are preserved.
    """

    def __init__(self, protocol: str, n: int) -> None:
        self.protocol = protocol
        self.n = n
        self.rounds: list[list[BroadcastEntry]] = []
        self.aborted = False

    def add_round(self, entries: Sequence[BroadcastEntry]) -> None:
        self.rounds.append(list(entries))

    def extend(self, other: "Transcript") -> None:
        self.rounds.extend([list(r) for r in other.rounds])
        self.aborted = self.aborted or other.aborted

    def round_parity(self, index: int) -> int:
        return sum(int(e.bits, 2) for e in self.rounds[index]) & 1

    def to_json(self) -> dict:
        return {
            "rounds": [
                [{"player": e.player, "bits": e.bits} for e in rnd]
                for rnd in self.rounds
            ],
            "aborted": self.aborted,
        }


class RandomnessLedger:
    """Append-only record of the random values each player drew.

    Entries are (name, value) pairs; names label the draw for human
    readers and are stripped when adversary views are built.  Data items
    and roles are never recorded here.
    """

    def __init__(self) -> None:
        self._entries: dict[int, list[tuple[str, int]]] = {}

    def record(self, player: int, name: str, value: int) -> None:
        self._entries.setdefault(player, []).append((name, int(value)))

    def entries(self, player: int) -> tuple[tuple[str, int], ...]:
        return tuple(self._entries.get(player, ()))

    def players(self) -> tuple[int, ...]:
        return tuple(sorted(self._entries))

    def values(self, player: int) -> tuple[int, ...]:
        return tuple(v for _, v in self._entries.get(player, ()))

    def extend(self, other: "RandomnessLedger") -> None:
        for player in other.players():
            for name, value in other.entries(player):
                self.record(player, name, value)

    def to_json(self) -> dict:
        return {
            str(p): [{"name": name, "value": value} for name, value in self.entries(p)]
            for p in self.players()
        }


def _validate_group(n: int, minimum: int = 3) -> None:
    if n < minimum:
        raise ValueError(f"need at least {minimum} players, got {n}")


def _validate_bit(d: int) -> int:
    if d not in (0, 1):
        raise ValueError(f"data bit must be 0 or 1, got {d!r}")
    return d


def anon_send(
    n: int,
    sender: int,
    d: int,
    rng: RngStream,
    *,
    withholders: Iterable[int] = (),
    disruptors: Iterable[int] = (),
) -> tuple[Optional[int], Transcript, RandomnessLedger]:
    """Anonymously broadcast one classical bit over a fresh GHZ state.

    The sender phase-flips their share iff d = 1, everyone applies a
    Hadamard and measures, and each player broadcasts their outcome bit.
    The parity of the broadcast round is the decoded bit; the outcome
    string itself carries no information about who flipped.

    `withholders` simulate players that refuse to broadcast: the run is
    marked aborted and decoded is None.  `disruptors` apply an extra
    phase flip each (a known active attack: every extra flip toggles the
    decoded bit).
    """
    _validate_group(n)
    _validate_bit(d)
    withheld = set(withholders)
    make_player_configs(n, sender=sender, data_item=d, withholders=withheld)
    flippers = set(disruptors)
    for p in flippers:
        if not 0 <= p < n:
            raise ValueError(f"disruptor {p} out of range for n={n}")

    state = make_ghz(n)
    if d == 1:
        state = apply_phase_flip(state, sender)
    for p in sorted(flippers):
        state = apply_phase_flip(state, p)

    record = hadamard_measure_all(state, rng)
    transcript = Transcript("anon", n)
    ledger = RandomnessLedger()
    entries = []
    for p in range(n):
        ledger.record(p, "measurement", record.outcomes[p])
        if p not in withheld:
            entries.append(BroadcastEntry(p, str(record.outcomes[p])))
    transcript.add_round(entries)
    if withheld:
        transcript.aborted = True
        return None, transcript, ledger
    decoded = transcript.round_parity(0)
    return decoded, transcript, ledger


def anon_multiparty_parity(
    n: int, flippers: Iterable[int], rng: RngStream
) -> tuple[int, Transcript, RandomnessLedger]:
    """Broadcast round in which every player in `flippers` phase-flips.

    Decodes to the parity of |flippers|: simultaneous senders collide
    into a parity, they do not queue.  Returns (parity, transcript,
    ledger).
    """
    _validate_group(n)
    flip_set = set(flippers)
    for p in flip_set:
        if not 0 <= p < n:
            raise ValueError(f"flipper {p} out of range for n={n}")
    state = make_ghz(n)
    for p in sorted(flip_set):
        state = apply_phase_flip(state, p)
    record = hadamard_measure_all(state, rng)
    transcript = Transcript("anon", n)
    ledger = RandomnessLedger()
    entries = []
    for p in range(n):
        ledger.record(p, "measurement", record.outcomes[p])
        entries.append(BroadcastEntry(p, str(record.outcomes[p])))
    transcript.add_round(entries)
    return transcript.round_parity(0), transcript, ledger


def ae_establish(
    n: int,
    sender: int,
    receiver: int,
    rng: RngStream,
    *,
    withholders: Iterable[int] = (),
) -> tuple[Optional[GhzPhaseState], Transcript, RandomnessLedger]:
    """Distill a shared EPR pair between sender and receiver.

    Everyone except the pair Hadamard-measures their share and
    broadcasts the outcome; the sender broadcasts a random bit b and
    phase-flips iff b = 1; the receiver broadcasts a random decoy bit
    b' (never used, it only makes the receiver's traffic look like the
    sender's) and phase-flips iff b xor (parity of the measurement
    broadcasts) = 1.  The two flips cancel the measurement back-action
    exactly, so the residual pair is (|00> + |11>)/sqrt(2) with phase
    numerator exactly 0.

    Returns (pair, transcript, ledger); pair is None on abort.
    """
    _validate_group(n)
    make_player_configs(n, sender=sender, receiver=receiver)
    withheld = set(withholders)
    for w in withheld:
        if not 0 <= w < n:
            raise ValueError(f"withholding player {w} out of range for n={n}")

    state = make_ghz(n)
    measured = tuple(p for p in range(n) if p not in (sender, receiver))
    record, residual = hadamard_measure_subset(state, measured, rng)
    outcome_of = dict(zip(measured, record.outcomes))
    b = rng.bit()
    b_prime = rng.bit()

    pair = residual.state
    if b == 1:
        pair = apply_phase_flip(pair, 0)
    if (b ^ record.parity) == 1:
        pair = apply_phase_flip(pair, 1)

    transcript = Transcript("ae", n)
    ledger = RandomnessLedger()
    entries = []
    for p in range(n):
        if p == sender:
            ledger.record(p, "coin", b)
            bit = b
        elif p == receiver:
            ledger.record(p, "decoy", b_prime)
            bit = b_prime
        else:
            ledger.record(p, "measurement", outcome_of[p])
            bit = outcome_of[p]
        if p not in withheld:
            entries.append(BroadcastEntry(p, str(bit)))
    transcript.add_round(entries)
    if withheld:
        transcript.aborted = True
        return None, transcript, ledger
    return pair, transcript, ledger


def anonq_send(
    n: int,
    sender: int,
    receiver: int,
    qubit: Sequence[complex],
    rng: RngStream,
    *,
    withholders: Iterable[int] = (),
) -> tuple[Optional[np.ndarray], Transcript, RandomnessLedger]:
    """Teleport an arbitrary qubit from a hidden sender to a hidden receiver.

    First establishes an anonymous EPR pair, then the sender Bell-measures
    the input qubit against their half and announces the two outcome bits
    with two anonymous broadcasts.  The receiver applies Z^m0 then X^m1.
    Returns (received amplitudes, transcript, ledger); amplitudes are None
    if any stage aborted.
    """
    amps = np.asarray(qubit, dtype=complex).reshape(-1)
    if amps.size != 2:
        raise ValueError("qubit must be a pair of amplitudes")
    if abs(float(np.linalg.norm(amps)) - 1.0) > 1e-9:
        raise ValueError("qubit amplitudes must be normalized")

    pair, transcript, ledger = ae_establish(
        n, sender, receiver, rng, withholders=withholders
    )
    transcript.protocol = "anonq"
    if pair is None:
        return None, transcript, ledger

    # Qubit 0: input.  Qubit 1: sender's pair half.  Qubit 2: receiver's.
    combined = tensor(DenseState(1, amps), pair.to_dense())
    m0, m1, post = bell_measure(combined, 0, 1, rng)

    decoded0, t0, l0 = anon_send(n, sender, m0, rng)
    decoded1, t1, l1 = anon_send(n, sender, m1, rng)
    transcript.extend(t0)
    transcript.extend(t1)
    ledger.extend(l0)
    ledger.extend(l1)
    if decoded0 is None or decoded1 is None:
        return None, transcript, ledger

    corrected = post
    if decoded0 == 1:
        corrected = dense_apply_gate(corrected, PAULI_Z, (2,))
    if decoded1 == 1:
        corrected = dense_apply_gate(corrected, PAULI_X, (2,))
    base = m0 | (m1 << 1)
    received = np.array(
        [corrected.amplitudes[base], corrected.amplitudes[base | 4]], dtype=complex
    )
    return received, transcript, ledger


def _ceil_log2(n: int) -> int:
    if n < 1:
        raise ValueError(f"need a positive integer, got {n}")
    return (n - 1).bit_length()


def prepare_rotated_states(n: int) -> list[GhzPhaseState]:
    """Designated preparation for collision detection.

    State j of the ceil(log2 n)+1 states carries phase -pi/2^j (so state
    0 carries phase pi).  All states share the denominator exponent
    J = ceil(log2 n), large enough for every rotation used later.
    """
    if n < 2:
        raise ValueError(f"need at least 2 players, got {n}")
    big_j = _ceil_log2(n)
    states = []
    for j in range(big_j + 1):
        state = make_ghz(n).with_denom_exp(big_j)
        states.append(apply_rz(state, 0, -1, j))
    return states


def decompose_k(k: int) -> tuple[int, int]:
    """Unique (j, m) with k = 2^j * m + 1 and m odd, for k >= 2.

    j is the round in which collision detection deterministically sees
    an odd parity when k players wish to send.
    """
    if k < 2:
        raise ValueError(f"decomposition needs k >= 2, got {k}")
    r = k - 1
    j = (r & -r).bit_length() - 1
    return j, r >> j


class CollisionOutcome(enum.Enum):
    EXACTLY_ONE = "exactly_one"
    NOT_EXACTLY_ONE = "not_exactly_one"


@dataclass(frozen=True)
class CollisionVerdict:
    """Result of one collision-detection run.

    `parities` holds the broadcast parity of each executed round; the
    run stops at the first odd round.  The verdict is EXACTLY_ONE iff
    every executed round had even parity.
    """

    parities: tuple[int, ...]
    verdict: CollisionOutcome
    first_odd_round: Optional[int]

    @property
    def rounds_used(self) -> int:
        return len(self.parities)

    def to_json(self) -> dict:
        return {
            "parities": list(self.parities),
            "verdict": self.verdict.value,
            "first_odd_round": self.first_odd_round,
        }


def collision_detect(
    n: int, wishers: Iterable[int], rng: RngStream
) -> CollisionVerdict:
    """Test anonymously whether exactly one player wishes to send.

    Round j starts from the prepared state with phase -pi/2^j; each of
    the k wishers applies a rotation of +pi/2^j, leaving phase
    (k-1)*pi/2^j.  Everyone Hadamard-measures and broadcasts.  With
    k = 2^j*m + 1 (m odd) the parity is deterministically even before
    round j and odd at round j; with k = 1 every round is even; with
    k = 0 round 0 sees phase -pi and is odd.  The run ends at the first
    odd round.
    """
    if n < 2:
        raise ValueError(f"need at least 2 players, got {n}")
    wish_set = set(wishers)
    for w in wish_set:
        if not 0 <= w < n:
            raise ValueError(f"wisher {w} out of range for n={n}")

    parities = []
    first_odd = None
    for j, state in enumerate(prepare_rotated_states(n)):
        for w in sorted(wish_set):
            state = apply_rz(state, w, 1, j)
        record = hadamard_measure_all(state, rng)
        parities.append(record.parity)
        if record.parity == 1:
            first_odd = j
            break
    verdict = (
        CollisionOutcome.EXACTLY_ONE
        if first_odd is None
        else CollisionOutcome.NOT_EXACTLY_ONE
    )
    return CollisionVerdict(tuple(parities), verdict, first_odd)


@dataclass(frozen=True)
class AlohaSchedule:
    """Outcome of slotted-retransmission scheduling over collision detection."""

    rounds: tuple[frozenset[int], ...]
    transmitted: dict[int, int]
    completed: bool
    backoff_draws: dict[int, tuple[int, ...]]


def aloha_schedule(
    n: int,
    wishers: Iterable[int],
    max_backoff: int,
    rng: RngStream,
    *,
    round_cap: int = 1000,
) -> AlohaSchedule:
    """Schedule contending senders with random backoff after collisions.

    Every wisher first attempts in round 1.  A round with exactly one
    attempting wisher (verified by collision_detect) lets that wisher
    transmit; on a collision each attempting wisher redraws a uniform
    backoff in [1, max_backoff] and retries that many rounds later.
    Rounds where nobody attempts are recorded as empty sets.  Gives up
    (completed=False) past `round_cap` rounds.
    """
    if max_backoff < 1:
        raise ValueError(f"max_backoff must be >= 1, got {max_backoff}")
    pending = set(wishers)
    for w in pending:
        if not 0 <= w < n:
            raise ValueError(f"wisher {w} out of range for n={n}")
    next_attempt = {w: 1 for w in pending}
    rounds: list[frozenset[int]] = []
    transmitted: dict[int, int] = {}
    draws: dict[int, list[int]] = {w: [] for w in pending}
    r = 1
    while pending and r <= round_cap:
        active = frozenset(w for w in pending if next_attempt[w] == r)
        rounds.append(active)
        if active:
            verdict = collision_detect(n, active, rng)
            if verdict.verdict is CollisionOutcome.EXACTLY_ONE:
                winner = next(iter(active))
                transmitted[winner] = r
                pending.discard(winner)
            else:
                for w in sorted(active):
                    delay = rng.integer(1, max_backoff)
                    draws[w].append(delay)
                    next_attempt[w] = r + delay
        r += 1
    return AlohaSchedule(
        tuple(rounds),
        transmitted,
        completed=not pending,
        backoff_draws={w: tuple(v) for w, v in draws.items()},
    )


def elect_sender_receiver(
    n: int,
    sender_wishers: Iterable[int],
    receiver_wishers: Iterable[int],
    rng: RngStream,
) -> Optional[tuple[int, int]]:
    """Run collision detection for each role; elect only on a clean pair.

    Returns (sender, receiver) when each role has exactly one wisher and
    they are distinct players, otherwise None.
    """
    senders = set(sender_wishers)
    receivers = set(receiver_wishers)
    v_s = collision_detect(n, senders, rng)
    v_r = collision_detect(n, receivers, rng)
    if v_s.verdict is not CollisionOutcome.EXACTLY_ONE:
        return None
    if v_r.verdict is not CollisionOutcome.EXACTLY_ONE:
        return None
    s = next(iter(senders))
    r = next(iter(receivers))
    if s == r:
        return None
    return s, r


def anonymous_key_exchange(
    n: int,
    node_i: int,
    node_j: int,
    key_len: int,
    rng: RngStream,
    *,
    bits_i: Optional[Sequence[int]] = None,
    bits_j: Optional[Sequence[int]] = None,
) -> tuple[list[int], list[int], Transcript]:
    """Grow a shared key between two nodes out of anonymous broadcasts.

    For each of `key_len` indices both nodes announce one private random
    bit through anon_send.  Indices where the announced bits are equal
    are discarded; where they differ, the key bit is the value node_i
    announced (node_j knows which announcement was not their own, so
    both reconstruct the same bit while outsiders cannot attribute
    either announcement).  Expect about half the indices to survive.

    `bits_i`/`bits_j` override the private bit draws, for tests.
    """
    _validate_group(n)
    if node_i == node_j:
        raise ValueError("key exchange needs two distinct nodes")
    for node in (node_i, node_j):
        if not 0 <= node < n:
            raise ValueError(f"node {node} out of range for n={n}")
    if key_len < 0:
        raise ValueError(f"key_len must be nonnegative, got {key_len}")
    if bits_i is not None and len(bits_i) != key_len:
        raise ValueError("bits_i must have length key_len")
    if bits_j is not None and len(bits_j) != key_len:
        raise ValueError("bits_j must have length key_len")

    transcript = Transcript("anon", n)
    key_i: list[int] = []
    key_j: list[int] = []
    for idx in range(key_len):
        bi = _validate_bit(bits_i[idx]) if bits_i is not None else rng.bit()
        bj = _validate_bit(bits_j[idx]) if bits_j is not None else rng.bit()
        announced_i, t_i, _ = anon_send(n, node_i, bi, rng)
        announced_j, t_j, _ = anon_send(n, node_j, bj, rng)
        transcript.extend(t_i)
        transcript.extend(t_j)
        if announced_i != announced_j:
            key_i.append(announced_i)
            key_j.append(announced_i)
    return key_i, key_j, transcript
