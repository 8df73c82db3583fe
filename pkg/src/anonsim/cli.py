"""Command line front end.

One subcommand per protocol plus `verdict` for anonymity measurements
and `sweep` for parameter grids.  Runs are reproducible: the same
arguments and seed always produce byte-identical output files.

Exit codes: 0 success, 2 configuration error, 3 protocol abort,
4 failed anonymity verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import anonymity, keygraph, protocols, qsim, serialize
from .rng import RngStream, derive_stream_id

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_VERDICT = 4

OUTDIR_ENV = "ANONSIM_OUTDIR"


def _out_path(args, default_name: str) -> str:
    if getattr(args, "out", None):
        return args.out
    base = os.environ.get(OUTDIR_ENV, ".")
    return os.path.join(base, default_name)


def _parse_ids(text: Optional[str]) -> list[int]:
    if not text:
        return []
    return [int(part) for part in text.split(",") if part != ""]


def _parse_span(text: str) -> tuple[int, int]:
    """'2:16' -> (2, 16); a single number spans itself."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return int(lo), int(hi)
    value = int(text)
    return value, value


def _parse_graph(spec: str) -> keygraph.KeySharingGraph:
    """'complete:5', 'cycle:6', 'star:5', 'path:4', or a file path."""
    if ":" in spec:
        kind, _, size = spec.partition(":")
        makers = {
            "complete": keygraph.KeySharingGraph.complete,
            "cycle": keygraph.KeySharingGraph.cycle,
            "star": keygraph.KeySharingGraph.star,
            "path": keygraph.KeySharingGraph.path,
        }
        if kind in makers:
            return makers[kind](int(size))
        raise ValueError(f"unknown graph family {kind!r}")
    if not os.path.exists(spec):
        raise ValueError(f"graph file not found: {spec}")
    return keygraph.load_graph(spec)


def _summary(pairs: list[tuple[str, object]]) -> str:
    def fmt(v: object) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if v is None:
            return "none"
        return str(v)

    return " ".join(f"{k}={fmt(v)}" for k, v in pairs)


def _emit(args, record: dict, default_name: str) -> str:
    path = _out_path(args, default_name)
    serialize.write_json(path, record)
    return path


def cmd_anon(args) -> int:
    rng = RngStream(args.seed, args.stream_id)
    withholders = _parse_ids(args.withhold)
    if args.flippers is not None:
        flippers = _parse_ids(args.flippers)
        parity, transcript, ledger = protocols.anon_multiparty_parity(
            args.n, flippers, rng
        )
        verdicts = {"parity": parity}
        record = serialize.run_record(
            "anon", args.n, args.seed, args.stream_id, transcript, ledger,
            verdicts, config={"flippers": flippers},
        )
        path = _emit(args, record, f"anon_n{args.n}_seed{args.seed}.json")
        print(_summary([("protocol", "anon"), ("n", args.n), ("parity", parity)]))
        print(f"record: {path}")
        return EXIT_OK
    if args.sender is None or args.d is None:
        raise ValueError("anon needs --sender and --d (or --flippers for parity mode)")
    decoded, transcript, ledger = protocols.anon_send(
        args.n, args.sender, args.d, rng,
        withholders=withholders, disruptors=_parse_ids(args.disruptors),
    )
    verdicts = {"decoded": decoded, "aborted": transcript.aborted}
    record = serialize.run_record(
        "anon", args.n, args.seed, args.stream_id, transcript, ledger, verdicts,
        config={"sender": args.sender, "d": args.d, "withhold": withholders},
    )
    path = _emit(args, record, f"anon_n{args.n}_seed{args.seed}.json")
    print(_summary([
        ("protocol", "anon"), ("n", args.n), ("sender", args.sender),
        ("d", args.d), ("decoded", decoded), ("aborted", transcript.aborted),
    ]))
    print(f"record: {path}")
    return EXIT_ABORT if transcript.aborted else EXIT_OK


def cmd_ae(args) -> int:
    rng = RngStream(args.seed, args.stream_id)
    pair, transcript, ledger = protocols.ae_establish(
        args.n, args.sender, args.receiver, rng,
        withholders=_parse_ids(args.withhold),
    )
    if pair is None:
        verdicts = {"aborted": True}
        record = serialize.run_record(
            "ae", args.n, args.seed, args.stream_id, transcript, ledger, verdicts,
            config={"sender": args.sender, "receiver": args.receiver},
        )
        path = _emit(args, record, f"ae_n{args.n}_seed{args.seed}.json")
        print(_summary([("protocol", "ae"), ("n", args.n), ("aborted", True)]))
        print(f"record: {path}")
        return EXIT_ABORT
    epr_fidelity = qsim.fidelity(pair.to_dense(), qsim.ghz_dense(2))
    verdicts = {
        "phase_numerator": pair.phase_numerator,
        "phase_denom_exp": pair.phase_denom_exp,
        "fidelity_with_epr": epr_fidelity,
        "aborted": False,
    }
    record = serialize.run_record(
        "ae", args.n, args.seed, args.stream_id, transcript, ledger, verdicts,
        config={"sender": args.sender, "receiver": args.receiver},
    )
    path = _emit(args, record, f"ae_n{args.n}_seed{args.seed}.json")
    print(_summary([
        ("protocol", "ae"), ("n", args.n),
        ("phase_numerator", pair.phase_numerator),
        ("fidelity", f"{epr_fidelity:.12f}"),
    ]))
    print(f"record: {path}")
    return EXIT_OK


def cmd_anonq(args) -> int:
    rng = RngStream(args.seed, args.stream_id)
    alpha = complex(args.alpha)
    beta = complex(args.beta)
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if norm <= 0.0:
        raise ValueError("qubit amplitudes must not both be zero")
    scale = norm ** -0.5
    qubit = (alpha * scale, beta * scale)
    received, transcript, ledger = protocols.anonq_send(
        args.n, args.sender, args.receiver, qubit, rng
    )
    if received is None:
        record = serialize.run_record(
            "anonq", args.n, args.seed, args.stream_id, transcript, ledger,
            {"aborted": True},
            config={"sender": args.sender, "receiver": args.receiver},
        )
        path = _emit(args, record, f"anonq_n{args.n}_seed{args.seed}.json")
        print(_summary([("protocol", "anonq"), ("n", args.n), ("aborted", True)]))
        print(f"record: {path}")
        return EXIT_ABORT
    sent = np.array(qubit, dtype=complex)
    transfer_fidelity = float(abs(np.vdot(sent, received)) ** 2)
    verdicts = {"fidelity": transfer_fidelity, "aborted": False}
    record = serialize.run_record(
        "anonq", args.n, args.seed, args.stream_id, transcript, ledger, verdicts,
        config={
            "sender": args.sender, "receiver": args.receiver,
            "alpha": args.alpha, "beta": args.beta,
        },
    )
    path = _emit(args, record, f"anonq_n{args.n}_seed{args.seed}.json")
    print(_summary([
        ("protocol", "anonq"), ("n", args.n),
        ("fidelity", f"{transfer_fidelity:.12f}"),
    ]))
    print(f"record: {path}")
    return EXIT_OK


def cmd_collision(args) -> int:
    rng = RngStream(args.seed, args.stream_id)
    wishers = _parse_ids(args.wishers)
    verdict = protocols.collision_detect(args.n, wishers, rng)
    transcript = protocols.Transcript("collision", args.n)
    ledger = protocols.RandomnessLedger()
    record = serialize.run_record(
        "collision", args.n, args.seed, args.stream_id, transcript, ledger,
        verdict.to_json(), config={"wishers": wishers},
    )
    path = _emit(args, record, f"collision_n{args.n}_seed{args.seed}.json")
    print(_summary([
        ("protocol", "collision"), ("n", args.n), ("k", len(wishers)),
        ("verdict", verdict.verdict.value),
        ("first_odd_round", verdict.first_odd_round),
        ("rounds_used", verdict.rounds_used),
    ]))
    print(f"record: {path}")
    return EXIT_OK


def cmd_dcnet(args) -> int:
    rng = RngStream(args.seed, args.stream_id)
    graph = _parse_graph(args.graph)
    keys = {e: rng.bit() for e in sorted(graph.edges)}
    instance = anonymity.DcNetInstance(graph, keys, args.sender, args.d)
    announcements, decoded, transcript, ledger = anonymity.dcnet_record(instance)
    traced = None
    if args.trace:
        traced = anonymity.trace_attack(graph, keys, announcements, args.d)
    verdicts = {"decoded": decoded, "traced": traced}
    record = serialize.run_record(
        "dcnet", graph.num_nodes, args.seed, args.stream_id, transcript, ledger,
        verdicts, config={"graph": args.graph, "sender": args.sender, "d": args.d},
    )
    path = _emit(args, record, f"dcnet_n{graph.num_nodes}_seed{args.seed}.json")
    pairs = [
        ("protocol", "dcnet"), ("n", graph.num_nodes),
        ("d", args.d), ("decoded", decoded),
    ]
    if args.trace:
        pairs.append(("traced", traced))
    print(_summary(pairs))
    print(f"record: {path}")
    return EXIT_OK


def cmd_keygraph(args) -> int:
    graph = _parse_graph(args.graph)
    degree_report = keygraph.min_degree(graph)
    tol = keygraph.tolerance(graph)
    report = {
        "num_nodes": graph.num_nodes,
        "num_edges": len(graph.edges),
        "min_degree": degree_report.value,
        "meets_degree_requirement": degree_report.meets_requirement,
        "tolerance": tol,
        "adjacency": keygraph.to_adjacency_json(graph)["adjacency"],
    }
    pairs = [
        ("nodes", graph.num_nodes), ("edges", len(graph.edges)),
        ("min_degree", degree_report.value),
        ("degree_ok", degree_report.meets_requirement),
        ("tolerance", tol),
    ]
    if args.colluders is not None:
        colluders = _parse_ids(args.colluders)
        partitioning = keygraph.is_partitioning_set(graph, colluders)
        report["colluders"] = colluders
        report["partitioning"] = partitioning
        pairs.append(("partitioning", partitioning))
    if args.bound_t is not None:
        bound = keygraph.key_lower_bound(graph.num_nodes, args.bound_t)
        report["key_lower_bound"] = {"t": args.bound_t, "keys": bound}
        pairs.append(("key_lower_bound", bound))
    path = _out_path(args, f"keygraph_n{graph.num_nodes}.json")
    serialize.write_json(path, report)
    print(_summary(pairs))
    print(f"report: {path}")
    return EXIT_OK


def cmd_verdict(args) -> int:
    graph = _parse_graph(args.graph) if args.graph else None
    rng = None
    if args.mode == "sampled":
        rng = RngStream(args.seed, args.stream_id)
    kwargs = dict(
        target=args.target,
        t=args.t,
        d=args.d,
        mode=args.mode,
        trials=args.trials,
        tolerance=args.tolerance,
        rng=rng,
        graph=graph,
    )
    if args.colluders is not None:
        kwargs["colluders"] = _parse_ids(args.colluders)
    if args.traceless:
        verdict = anonymity.traceless_verdict(args.protocol, args.n, **kwargs)
    else:
        verdict = anonymity.anonymity_verdict(args.protocol, args.n, **kwargs)
    path = _out_path(
        args, f"verdict_{args.protocol}_n{args.n}_t{verdict.t}.json"
    )
    serialize.write_json(path, verdict.to_json())
    outcome = "PASS" if verdict.verdict else "FAIL"
    print(_summary([
        ("posterior_max", f"{float(verdict.posterior_max):g}"),
        ("baseline", f"{float(verdict.baseline):g}"),
    ]) + f" {outcome}")
    print(f"report: {path}")
    return EXIT_OK if verdict.verdict else EXIT_VERDICT


def _sweep_collision(args) -> tuple[list[str], list[list]]:
    lo, hi = _parse_span(args.n)
    header = [
        "n", "k", "verdict", "first_odd_round", "predicted_first_odd",
        "rounds_used", "parities", "match", "error",
    ]
    rows = []
    for n in range(lo, hi + 1):
        for k in range(0, n + 1):
            try:
                stream = RngStream(
                    args.seed, derive_stream_id(args.seed, "collision", n, k)
                )
                verdict = protocols.collision_detect(n, range(k), stream)
                if k == 1:
                    predicted = None
                elif k == 0:
                    predicted = 0
                else:
                    predicted = protocols.decompose_k(k)[0]
                match = verdict.first_odd_round == predicted and (
                    (verdict.verdict is protocols.CollisionOutcome.EXACTLY_ONE)
                    == (k == 1)
                )
                rows.append([
                    n, k, verdict.verdict.value,
                    "" if verdict.first_odd_round is None else verdict.first_odd_round,
                    "" if predicted is None else predicted,
                    verdict.rounds_used,
                    "".join(str(p) for p in verdict.parities),
                    match, "",
                ])
            except Exception as exc:  # cell failures stay in-row
                rows.append([n, k, "", "", "", "", "", "", str(exc)])
    return header, rows


def _sweep_anon(args) -> tuple[list[str], list[list]]:
    lo, hi = _parse_span(args.n)
    d_values = _parse_ids(args.d) or [0, 1]
    header = ["n", "sender", "d", "decoded", "ok", "error"]
    rows = []
    for n in range(lo, hi + 1):
        for sender in range(n):
            for d in d_values:
                try:
                    stream = RngStream(
                        args.seed, derive_stream_id(args.seed, "anon", n, sender, d)
                    )
                    decoded, _, _ = protocols.anon_send(n, sender, d, stream)
                    rows.append([n, sender, d, decoded, decoded == d, ""])
                except Exception as exc:
                    rows.append([n, sender, d, "", "", str(exc)])
    return header, rows


def _sweep_graphs(args) -> tuple[list[str], list[list]]:
    from itertools import combinations

    n = args.nodes
    if n > 6:
        raise ValueError("graph sweep supports at most 6 nodes")
    pairs = list(combinations(range(n), 2))
    header = [
        "mask", "num_edges", "edges", "connected", "min_degree", "tolerance",
        "error",
    ]
    rows = []
    for mask in range(1 << len(pairs)):
        try:
            edges = [pairs[i] for i in range(len(pairs)) if (mask >> i) & 1]
            g = keygraph.KeySharingGraph.from_edges(n, edges)
            rows.append([
                mask, len(edges),
                ";".join(f"{i}-{j}" for i, j in sorted(edges)),
                keygraph.is_connected(g),
                keygraph.min_degree(g).value,
                keygraph.tolerance(g),
                "",
            ])
        except Exception as exc:
            rows.append([mask, "", "", "", "", "", str(exc)])
    return header, rows


def cmd_sweep(args) -> int:
    if args.family == "collision":
        header, rows = _sweep_collision(args)
    elif args.family == "anon":
        header, rows = _sweep_anon(args)
    else:
        header, rows = _sweep_graphs(args)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            ["true" if v is True else "false" if v is False else v for v in row]
        )
    path = _out_path(args, f"sweep_{args.family}.csv")
    serialize.write_text(path, buf.getvalue())
    failures = sum(1 for row in rows if row[-1])
    print(_summary([
        ("sweep", args.family), ("rows", len(rows)), ("failures", failures),
    ]))
    print(f"table: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonsim",
        description="Anonymous transmission over shared GHZ states.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_seed=True):
        if needs_seed:
            p.add_argument("--seed", type=int, required=True, help="64-bit run seed")
            p.add_argument("--stream-id", type=int, default=0, dest="stream_id")
        p.add_argument("--out", help="output file (default: in $ANONSIM_OUTDIR)")

    p = sub.add_parser("anon", help="anonymous one-bit broadcast")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sender", type=int)
    p.add_argument("--d", type=int, choices=(0, 1))
    p.add_argument("--flippers", help="parity mode: comma list of flipping players")
    p.add_argument("--withhold", help="players that refuse to broadcast")
    p.add_argument("--disruptors", help="players applying an extra phase flip")
    add_common(p)
    p.set_defaults(func=cmd_anon)

    p = sub.add_parser("ae", help="anonymous entanglement")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sender", type=int, required=True)
    p.add_argument("--receiver", type=int, required=True)
    p.add_argument("--withhold", help="players that refuse to broadcast")
    add_common(p)
    p.set_defaults(func=cmd_ae)

    p = sub.add_parser("anonq", help="anonymous qubit transfer")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sender", type=int, required=True)
    p.add_argument("--receiver", type=int, required=True)
    p.add_argument("--alpha", default="1", help="amplitude of |0>, complex literal")
    p.add_argument("--beta", default="0", help="amplitude of |1>, complex literal")
    add_common(p)
    p.set_defaults(func=cmd_anonq)

    p = sub.add_parser("collision", help="exactly-one-sender detection")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--wishers", help="comma list of wishing players")
    add_common(p)
    p.set_defaults(func=cmd_collision)

    p = sub.add_parser("dcnet", help="pairwise-key XOR network round")
    p.add_argument("--graph", required=True,
                   help="complete:N | cycle:N | star:N | path:N | file path")
    p.add_argument("--sender", type=int, required=True)
    p.add_argument("--d", type=int, choices=(0, 1), required=True)
    p.add_argument("--trace", action="store_true",
                   help="run the full-randomness trace attack")
    add_common(p)
    p.set_defaults(func=cmd_dcnet)

    p = sub.add_parser("keygraph", help="key-sharing graph audit")
    p.add_argument("--graph", required=True,
                   help="complete:N | cycle:N | star:N | path:N | file path")
    p.add_argument("--colluders", help="check whether this set partitions")
    p.add_argument("--bound-t", type=int, dest="bound_t",
                   help="also report key_lower_bound(n, t)")
    add_common(p, needs_seed=False)
    p.set_defaults(func=cmd_keygraph)

    p = sub.add_parser("verdict", help="anonymity measurement")
    p.add_argument("--protocol", required=True,
                   choices=("anon", "ae", "anonq", "dcnet"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--target", default="sender", choices=("sender", "receiver"))
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--colluders")
    p.add_argument("--d", type=int, choices=(0, 1), default=1)
    p.add_argument("--mode", default="exact", choices=("exact", "sampled"))
    p.add_argument("--trials", type=int, default=anonymity.DEFAULT_SAMPLED_TRIALS)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--graph", help="key-sharing graph (dcnet only)")
    p.add_argument("--traceless", action="store_true",
                   help="adversary reads every player's randomness")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream-id", type=int, default=0, dest="stream_id")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verdict)

    p = sub.add_parser("sweep", help="parameter grids to CSV")
    p.add_argument("family", choices=("collision", "anon", "graphs"))
    p.add_argument("--n", default="3:6", help="range lo:hi (collision, anon)")
    p.add_argument("--d", help="comma list of data bits (anon)")
    p.add_argument("--nodes", type=int, default=5, help="node count (graphs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
