"""Adversary models and anonymity measurements.

The measurement model: an adversary sees the broadcast transcript C and,
depending on its power, the recorded random draws of t corrupted players
(plain collusion) or of every player (full randomness hijack).  A
protocol keeps the target role anonymous when the Bayes-optimal
posterior over candidate players, given that view, stays at the uniform
baseline 1/(n - t).

The classical comparison point is a pairwise-key XOR network (dining
cryptographers).  There the announcements are deterministic functions of
the keys, so a full-randomness adversary replays every player's expected
announcement both as a non-sender and as a sender and identifies the
sender of a 1 exactly.  The GHZ protocols do not have that failure mode:
their transcript distributions are identical for every candidate.

Exact mode enumerates distributions with rational arithmetic; sampled
mode estimates them from repeated runs and compares candidates by total
variation distance.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Optional, Sequence

from .keygraph import KeySharingGraph, is_connected
from .protocols import (
    BroadcastEntry,
    RandomnessLedger,
    Transcript,
    ae_establish,
    anon_send,
    anonq_send,
)
from .rng import RngStream

ENUM_PLAYER_LIMIT = 12
ANONQ_ENUM_PLAYER_LIMIT = 6
DCNET_EDGE_LIMIT = 16

DEFAULT_SAMPLED_TRIALS = 10_000
DEFAULT_TV_TOLERANCE = 0.05


@dataclass(frozen=True)
class AdversaryView:
    """What an adversary gets to see of one run.

    `messages` mirrors the transcript rounds; `randomness` lists, for
    each watched player, the raw values of their recorded draws.  Names,
    roles and data items never appear here: views are built by redaction
    from full run records.
    """

    corrupted: tuple[int, ...]
    hijacked_all: bool
    messages: tuple[tuple[tuple[int, str], ...], ...]
    randomness: tuple[tuple[int, tuple[int, ...]], ...]

    def key(self) -> tuple:
        return (self.messages, self.randomness)

    def to_json(self) -> dict:
        return {
            "corrupted": list(self.corrupted),
            "hijacked_all": self.hijacked_all,
            "messages": [
                [{"player": p, "bits": bits} for p, bits in rnd]
                for rnd in self.messages
            ],
            "randomness": {
                str(p): list(values) for p, values in self.randomness
            },
        }


def adversary_view(
    transcript: Transcript,
    ledger: RandomnessLedger,
    corrupted: Iterable[int],
    *,
    hijacked_all: bool = False,
) -> AdversaryView:
    """Redact a run record down to what the adversary observes."""
    corrupted = tuple(sorted(set(corrupted)))
    n = transcript.n
    for p in corrupted:
        if not 0 <= p < n:
            raise ValueError(f"corrupted player {p} out of range for n={n}")
    if len(corrupted) > n - 2:
        raise ValueError(
            f"at most n-2={n - 2} corrupted players are modeled, got {len(corrupted)}"
        )
    watchers = tuple(range(n)) if hijacked_all else corrupted
    messages = tuple(
        tuple((e.player, e.bits) for e in rnd) for rnd in transcript.rounds
    )
    randomness = tuple((p, ledger.values(p)) for p in watchers)
    return AdversaryView(corrupted, hijacked_all, messages, randomness)


@dataclass(frozen=True)
class DcNetInstance:
    """One configured round of the pairwise-key XOR network."""

    graph: KeySharingGraph
    keys: Mapping[tuple[int, int], int]
    sender: int
    d: int

    def __post_init__(self) -> None:
        g = self.graph
        if not is_connected(g):
            raise ValueError("key-sharing graph must be connected")
        if set(self.keys) != set(g.edges):
            raise ValueError("keys must cover exactly the graph's edges")
        for e, bit in self.keys.items():
            if bit not in (0, 1):
                raise ValueError(f"key bit for edge {e} must be 0 or 1")
        if not 0 <= self.sender < g.num_nodes:
            raise ValueError(f"sender {self.sender} out of range")
        if self.d not in (0, 1):
            raise ValueError(f"data bit must be 0 or 1, got {self.d!r}")


def _dcnet_announcements(
    graph: KeySharingGraph,
    keys: Mapping[tuple[int, int], int],
    sender: int,
    d: int,
) -> tuple[int, ...]:
    ann = []
    for p in range(graph.num_nodes):
        bit = 0
        for e in graph.edges:
            if p in e:
                bit ^= keys[e]
        if p == sender:
            bit ^= d
        ann.append(bit)
    return tuple(ann)


def dcnet_round(instance: DcNetInstance) -> tuple[tuple[int, ...], int]:
    """Announce one bit per player; the XOR of all announcements is d.

    Each announcement is the XOR of the player's incident key bits, plus
    the data bit for the sender.  Every key enters exactly two
    announcements, so the total parity reduces to d.
    """
    ann = _dcnet_announcements(instance.graph, instance.keys, instance.sender, instance.d)
    decoded = 0
    for bit in ann:
        decoded ^= bit
    return ann, decoded


def dcnet_record(
    instance: DcNetInstance,
) -> tuple[tuple[int, ...], int, Transcript, RandomnessLedger]:
    """Run one round and package it as a transcript plus ledger.

    Each player's ledger holds their incident key bits in edge order;
    the sender's data bit is not a ledger entry.
    """
    ann, decoded = dcnet_round(instance)
    n = instance.graph.num_nodes
    transcript = Transcript("dcnet", n)
    transcript.add_round([BroadcastEntry(p, str(ann[p])) for p in range(n)])
    ledger = RandomnessLedger()
    for p in range(n):
        for e in sorted(instance.graph.edges):
            if p in e:
                ledger.record(p, f"key:{e[0]}-{e[1]}", instance.keys[e])
    return ann, decoded, transcript, ledger


def trace_attack(
    graph: KeySharingGraph,
    keys: Mapping[tuple[int, int], int],
    announcements: Sequence[int],
    d: int,
) -> Optional[int]:
    """Identify the sender from hijacked randomness, when possible.

    For each player, replay their announcement both ways: as a
    non-sender (XOR of their incident keys) and as the sender (the same
    XOR plus d).  A player whose observed announcement matches only the
    sender replay is identified.  For d = 0 the two replays coincide and
    nobody is distinguishable.  Returns the identified player or None.
    """
    if d not in (0, 1):
        raise ValueError(f"data bit must be 0 or 1, got {d!r}")
    n = graph.num_nodes
    if len(announcements) != n:
        raise ValueError(f"expected {n} announcements, got {len(announcements)}")
    matches = []
    for p in range(n):
        non_sender = 0
        for e in graph.edges:
            if p in e:
                non_sender ^= keys[e]
        as_sender = non_sender ^ d
        if announcements[p] == as_sender and announcements[p] != non_sender:
            matches.append(p)
    if len(matches) == 1:
        return matches[0]
    return None


def exact_transcript_distribution(
    protocol: str,
    n: int,
    *,
    sender: Optional[int] = None,
    receiver: Optional[int] = None,
    d: int = 0,
) -> dict[tuple[int, ...], Fraction]:
    """Exact broadcast distribution of one run, keyed by per-player bits.

    For the anonymous bit broadcast the support is the outcome strings
    whose parity equals d, each with probability 1/2^(n-1).  For the
    entanglement protocol every per-player assignment of one bit is
    equally likely (measurement outcomes, the sender's coin and the
    receiver's decoy are all uniform and independent), probability
    1/2^n.  Both are derived here through the protocol semantics, not
    asserted; the sender index genuinely drops out of the result.

    Each player also holds exactly the bit they broadcast as their only
    recorded draw, so this map doubles as the joint distribution of
    (transcript, all randomness).
    """
    if n > ENUM_PLAYER_LIMIT:
        raise ValueError(
            f"exact enumeration supports n <= {ENUM_PLAYER_LIMIT}; "
            "use sampled mode for larger groups"
        )
    if protocol == "anon":
        if sender is None or not 0 <= sender < n:
            raise ValueError("anon distribution needs a sender in range")
        if d not in (0, 1):
            raise ValueError(f"data bit must be 0 or 1, got {d!r}")
        from .qsim import apply_phase_flip, make_ghz

        state = make_ghz(n)
        if d == 1:
            state = apply_phase_flip(state, sender)
        target_parity = 1 if state.is_phase_pi() else 0
        prob = Fraction(1, 1 << (n - 1))
        return {
            bits: prob
            for bits in product((0, 1), repeat=n)
            if (sum(bits) & 1) == target_parity
        }
    if protocol == "ae":
        if sender is None or receiver is None or sender == receiver:
            raise ValueError("ae distribution needs distinct sender and receiver")
        for who in (sender, receiver):
            if not 0 <= who < n:
                raise ValueError(f"player {who} out of range for n={n}")
        measured = tuple(p for p in range(n) if p not in (sender, receiver))
        prob = Fraction(1, 1 << n)
        dist: dict[tuple[int, ...], Fraction] = {}
        for outcome in product((0, 1), repeat=n - 2):
            for b in (0, 1):
                for b_prime in (0, 1):
                    bits = [0] * n
                    for q, v in zip(measured, outcome):
                        bits[q] = v
                    bits[sender] = b
                    bits[receiver] = b_prime
                    dist[tuple(bits)] = prob
        return dist
    raise ValueError(f"unknown protocol for exact enumeration: {protocol!r}")


def tv_distance(p: Mapping, q: Mapping):
    """Total variation distance between two distributions given as maps."""
    keys = set(p) | set(q)
    zero = Fraction(0)
    total = sum(abs(p.get(k, zero) - q.get(k, zero)) for k in keys)
    return total / 2


@dataclass(frozen=True)
class AnonymityVerdict:
    """Outcome of one anonymity measurement.

    `posterior_max` is the largest posterior the Bayes-optimal adversary
    assigns to any candidate on any view of nonzero probability;
    `baseline` is the uniform prior 1/(n - t).  Exact mode reports both
    as rationals and the verdict is exact equality; sampled mode reports
    floats and the verdict is max_tv <= tolerance.
    """

    protocol: str
    n: int
    t: int
    target: str
    mode: str
    posterior_max: Fraction | float
    baseline: Fraction | float
    verdict: bool
    hijacked_all: bool = False
    trials: Optional[int] = None
    seed: Optional[int] = None
    max_tv: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "n": self.n,
            "t": self.t,
            "target": self.target,
            "mode": self.mode,
            "posterior_max": float(self.posterior_max),
            "baseline": float(self.baseline),
            "verdict": self.verdict,
            "hijacked_all": self.hijacked_all,
            "trials": self.trials,
            "seed": self.seed,
            "max_tv": None if self.max_tv is None else float(self.max_tv),
        }


def _bayes_posterior_max(dists: Mapping[int, Mapping]) -> Fraction:
    """Max over views of the max posterior, uniform prior over candidates."""
    views = set()
    for dist in dists.values():
        views.update(dist)
    best = Fraction(0)
    zero = Fraction(0)
    for view in views:
        weights = [dist.get(view, zero) for dist in dists.values()]
        total = sum(weights)
        if total == 0:
            continue
        local = max(weights) / total
        if local > best:
            best = local
    return best


def _enum_view_key(
    round_bits: tuple[tuple[int, ...], ...], watchers: Sequence[int]
) -> tuple:
    messages = tuple(
        tuple((p, str(b)) for p, b in enumerate(rnd)) for rnd in round_bits
    )
    randomness = tuple(
        (p, tuple(rnd[p] for rnd in round_bits)) for p in watchers
    )
    return (messages, randomness)


def _partner_for(candidate: int, n: int) -> int:
    return next(p for p in range(n) if p != candidate)


def _exact_view_dists(
    protocol: str,
    n: int,
    candidates: Sequence[int],
    *,
    target: str,
    d: int,
    watchers: Sequence[int],
) -> dict[int, dict]:
    dists: dict[int, dict] = {}
    for cand in candidates:
        if target == "sender":
            sender, receiver = cand, _partner_for(cand, n)
        else:
            receiver, sender = cand, _partner_for(cand, n)
        if protocol == "anon":
            base = exact_transcript_distribution("anon", n, sender=sender, d=d)
            dists[cand] = {
                _enum_view_key((bits,), watchers): prob
                for bits, prob in base.items()
            }
        elif protocol == "ae":
            base = exact_transcript_distribution(
                "ae", n, sender=sender, receiver=receiver
            )
            dists[cand] = {
                _enum_view_key((bits,), watchers): prob
                for bits, prob in base.items()
            }
        elif protocol == "anonq":
            if n > ANONQ_ENUM_PLAYER_LIMIT:
                raise ValueError(
                    f"exact enumeration of the qubit protocol supports "
                    f"n <= {ANONQ_ENUM_PLAYER_LIMIT}; use sampled mode"
                )
            ae_base = exact_transcript_distribution(
                "ae", n, sender=sender, receiver=receiver
            )
            half = Fraction(1, 2)
            anon_base = {
                bit: exact_transcript_distribution("anon", n, sender=sender, d=bit)
                for bit in (0, 1)
            }
            dist: dict = {}
            for ae_bits, p_ae in ae_base.items():
                for m0 in (0, 1):
                    for bits0, p0 in anon_base[m0].items():
                        for m1 in (0, 1):
                            for bits1, p1 in anon_base[m1].items():
                                key = _enum_view_key(
                                    (ae_bits, bits0, bits1), watchers
                                )
                                prob = p_ae * half * p0 * half * p1
                                dist[key] = dist.get(key, Fraction(0)) + prob
            dists[cand] = dist
        else:
            raise ValueError(f"unknown protocol: {protocol!r}")
    return dists


def _exact_dcnet_dists(
    graph: KeySharingGraph,
    candidates: Sequence[int],
    *,
    d: int,
    watchers: Sequence[int],
) -> dict[int, dict]:
    edges = sorted(graph.edges)
    if len(edges) > DCNET_EDGE_LIMIT:
        raise ValueError(
            f"exact enumeration supports at most {DCNET_EDGE_LIMIT} edges; "
            "use sampled mode"
        )
    n = graph.num_nodes
    prob = Fraction(1, 1 << len(edges))
    dists: dict[int, dict] = {}
    for cand in candidates:
        dist: dict = {}
        for mask in range(1 << len(edges)):
            keys = {e: (mask >> i) & 1 for i, e in enumerate(edges)}
            ann = _dcnet_announcements(graph, keys, cand, d)
            messages = (tuple((p, str(ann[p])) for p in range(n)),)
            randomness = tuple(
                (p, tuple(keys[e] for e in edges if p in e)) for p in watchers
            )
            key = (messages, randomness)
            dist[key] = dist.get(key, Fraction(0)) + prob
        dists[cand] = dist
    return dists


def _sample_view(
    protocol: str,
    n: int,
    cand: int,
    *,
    target: str,
    d: int,
    watchers: Sequence[int],
    graph: Optional[KeySharingGraph],
    rng: RngStream,
) -> tuple:
    if target == "sender":
        sender, receiver = cand, _partner_for(cand, n)
    else:
        receiver, sender = cand, _partner_for(cand, n)
    if protocol == "anon":
        _, transcript, ledger = anon_send(n, sender, d, rng)
    elif protocol == "ae":
        _, transcript, ledger = ae_establish(n, sender, receiver, rng)
    elif protocol == "anonq":
        _, transcript, ledger = anonq_send(n, sender, receiver, (0.6, 0.8), rng)
    elif protocol == "dcnet":
        assert graph is not None
        edges = sorted(graph.edges)
        keys = {e: rng.bit() for e in edges}
        ann = _dcnet_announcements(graph, keys, cand, d)
        messages = (tuple((p, str(ann[p])) for p in range(n)),)
        randomness = tuple(
            (p, tuple(keys[e] for e in edges if p in e)) for p in watchers
        )
        return (messages, randomness)
    else:
        raise ValueError(f"unknown protocol: {protocol!r}")
    messages = tuple(
        tuple((e.player, e.bits) for e in rnd) for rnd in transcript.rounds
    )
    randomness = tuple((p, ledger.values(p)) for p in watchers)
    return (messages, randomness)


def anonymity_verdict(
    protocol: str,
    n: int,
    *,
    target: str = "sender",
    t: int = 0,
    colluders: Optional[Iterable[int]] = None,
    d: int = 1,
    graph: Optional[KeySharingGraph] = None,
    mode: str = "exact",
    trials: int = DEFAULT_SAMPLED_TRIALS,
    tolerance: Optional[float] = None,
    rng: Optional[RngStream] = None,
    hijack_all_randomness: bool = False,
) -> AnonymityVerdict:
    """Measure how well the target role stays hidden from t colluders.

    Builds, for every candidate player in the target role, the
    distribution of the adversary's view, and reports the Bayes-optimal
    posterior maximum against the uniform baseline 1/(n - t).

    Exact mode enumerates views with rational arithmetic; the verdict is
    posterior_max == baseline (or within `tolerance` if one is given).
    Sampled mode estimates each candidate's view distribution from
    `trials` runs and passes iff the largest pairwise total variation
    distance is at most `tolerance` (default 0.05); it needs an
    RngStream.

    `colluders` picks the corrupted set explicitly (default: the t
    highest-index players).  With `hijack_all_randomness` the adversary
    additionally reads every player's recorded draws, the strongest
    model this package checks.
    """
    if protocol not in ("anon", "ae", "anonq", "dcnet"):
        raise ValueError(f"unknown protocol: {protocol!r}")
    if target not in ("sender", "receiver"):
        raise ValueError(f"target must be 'sender' or 'receiver', got {target!r}")
    if protocol == "dcnet":
        if target != "sender":
            raise ValueError("the XOR network models sender anonymity only")
        if graph is None:
            raise ValueError("dcnet verdict needs a key-sharing graph")
        if graph.num_nodes != n:
            raise ValueError(
                f"graph has {graph.num_nodes} nodes but n={n} was requested"
            )
        if not is_connected(graph):
            raise ValueError("key-sharing graph must be connected")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"mode must be 'exact' or 'sampled', got {mode!r}")
    if colluders is None:
        colluder_set = frozenset(range(n - t, n))
    else:
        colluder_set = frozenset(colluders)
        if t and len(colluder_set) != t:
            raise ValueError(
                f"asked for t={t} colluders but got {len(colluder_set)}"
            )
        t = len(colluder_set)
    if t > n - 2:
        raise ValueError(f"at most n-2={n - 2} colluders are modeled, got t={t}")
    for p in colluder_set:
        if not 0 <= p < n:
            raise ValueError(f"colluder {p} out of range for n={n}")

    candidates = tuple(sorted(set(range(n)) - colluder_set))
    watchers = tuple(range(n)) if hijack_all_randomness else tuple(sorted(colluder_set))
    baseline = Fraction(1, len(candidates))

    if mode == "exact":
        if protocol == "dcnet":
            dists = _exact_dcnet_dists(graph, candidates, d=d, watchers=watchers)
        else:
            dists = _exact_view_dists(
                protocol, n, candidates, target=target, d=d, watchers=watchers
            )
        posterior_max = _bayes_posterior_max(dists)
        if tolerance is None:
            verdict = posterior_max == baseline
        else:
            verdict = abs(float(posterior_max) - float(baseline)) <= tolerance
        return AnonymityVerdict(
            protocol, n, t, target, "exact", posterior_max, baseline, verdict,
            hijacked_all=hijack_all_randomness,
        )

    if rng is None:
        raise ValueError("sampled mode needs an RngStream")
    tol = DEFAULT_TV_TOLERANCE if tolerance is None else tolerance
    counts: dict[int, Counter] = {}
    for cand in candidates:
        counter: Counter = Counter()
        for _ in range(trials):
            counter[
                _sample_view(
                    protocol,
                    n,
                    cand,
                    target=target,
                    d=d,
                    watchers=watchers,
                    graph=graph,
                    rng=rng,
                )
            ] += 1
        counts[cand] = counter
    dists = {
        cand: {view: Fraction(c, trials) for view, c in counter.items()}
        for cand, counter in counts.items()
    }
    max_tv = Fraction(0)
    cand_list = list(candidates)
    for i in range(len(cand_list)):
        for j in range(i + 1, len(cand_list)):
            dist = tv_distance(dists[cand_list[i]], dists[cand_list[j]])
            if dist > max_tv:
                max_tv = dist
    posterior_max = _bayes_posterior_max(dists)
    verdict = float(max_tv) <= tol
    return AnonymityVerdict(
        protocol,
        n,
        t,
        target,
        "sampled",
        float(posterior_max),
        baseline,
        verdict,
        hijacked_all=hijack_all_randomness,
        trials=trials,
        seed=rng.seed,
        max_tv=float(max_tv),
    )


def traceless_verdict(
    protocol: str,
    n: int,
    **kwargs,
) -> AnonymityVerdict:
    """anonymity_verdict under the full randomness hijack.

    The adversary reads every player's recorded draws in addition to the
    transcript.  This is the model under which the XOR network's sender
    of a 1 is traced with certainty while the GHZ protocols keep the
    posterior at baseline.
    """
    kwargs["hijack_all_randomness"] = True
    return anonymity_verdict(protocol, n, **kwargs)
