"""Command-line entry point: ``gari inspect|transform|decode|simulate``."""

from __future__ import annotations

import argparse
import csv
import json
import pathlib
import sys

import numpy as np

from .augment import build_correlated, build_gari, load_model, save_model, table_stats
from .decoder import ALPHA_DEFAULT, MAX_ITERS_DEFAULT, DecoderConfig, decode
from .dem import load_dem, parse_coordinate_rule
from .harness import ExperimentConfig, run_shots, summarize


def _typing_arg(args):
    if args.typing_coord:
        return parse_coordinate_rule(args.typing_coord)
    return args.typing


def _load(args):
    model = load_dem(args.dem, _typing_arg(args))
    cm = build_correlated(model, memory_basis=args.basis.upper())
    return cm, build_gari(cm)


def parse_syndrome_token(tok: str, n: int) -> np.ndarray:
    """``0x``-prefixed hex (bit i = row i) or a 0/1 bitstring of length ``n``."""
    if tok.lower().startswith("0x"):
        v = int(tok, 16)
        if v >> n:
            raise ValueError(f"hex syndrome {tok} has bits beyond row {n - 1}")
        return np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)
    if len(tok) != n or set(tok) - {"0", "1"}:
        raise ValueError(f"expected a {n}-bit 0/1 string, got {tok!r}")
    return np.frombuffer(tok.encode(), dtype=np.uint8) - ord("0")


def _write_stats(stats: dict, fmt: str, out) -> None:
    if fmt == "json":
        out.write(json.dumps(stats, indent=1, sort_keys=True) + "\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["matrix", "num_rows", "num_cols", "nnz", "avg_row_weight", "num_4cycles"])
    for name in ("D_X", "D_Z", "D_XYZ", "bottom"):
        s = stats[name]
        w.writerow([name, s["num_rows"], s["num_cols"], s["nnz"],
                    f"{s['avg_row_weight']:.2f}", s["num_4cycles"]])


def cmd_inspect(args) -> int:
    cm, gm = _load(args)
    _write_stats(table_stats(cm, gm), args.format, sys.stdout)
    return 0


def cmd_transform(args) -> int:
    cm, gm = _load(args)
    extra = {"stats": table_stats(cm, gm), "source": str(args.dem)}
    if args.distance is not None:
        extra["distance"] = args.distance
    out = save_model(gm, args.out, extra)
    print(out / "manifest.json")
    return 0


def cmd_decode(args) -> int:
    gm = load_model(args.model)
    cfg = DecoderConfig(alpha=args.alpha, max_iters=args.max_iters, seed=args.seed,
                        check_both=args.check_both)
    with open(args.syndromes) as fh:
        for lineno, line in enumerate(fh, 1):
            toks = line.split("#", 1)[0].split()
            if not toks:
                continue
            if len(toks) != 2:
                raise SystemExit(f"{args.syndromes}:{lineno}: expected s_X and s_Z tokens")
            s_x = parse_syndrome_token(toks[0], gm.num_x_rows)
            s_z = parse_syndrome_token(toks[1], gm.num_z_rows)
            res = decode(gm, s_x, s_z, cfg)
            print(json.dumps({"converged": res.converged, "iterations": res.iterations,
                              "observable_mask": res.predicted_obs, "weight": res.weight},
                             sort_keys=True))
    return 0


def cmd_simulate(args) -> int:
    cm, gm = _load(args)
    rounds = args.rounds if args.rounds is not None else (args.distance or 1)
    seed = args.base_seed if args.base_seed is not None else args.seed
    cfg = ExperimentConfig(
        shots=args.shots, rounds=rounds, seed=seed,
        decoder=DecoderConfig(alpha=args.alpha, max_iters=args.max_iters,
                              check_both=args.check_both),
        ensemble_size=args.ensemble, physical_p=args.p,
        per_iter_ns=args.per_iter_ns, budget_ns_per_round=args.budget_ns,
        output_format=args.format,
    )
    records = run_shots(gm, cm, cfg, args.workers)
    if args.records:
        with open(args.records, "w") as fh:
            fh.write("shot,converged,iterations,member,failed\n")
            for i, r in enumerate(records):
                fh.write(f"{i},{r[0]},{r[1]},{r[2]},{r[3]}\n")
    sys.stdout.write(summarize(records, cfg).render(args.format))
    return 0


def _add_dem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dem", required=True, type=pathlib.Path, help="DEM file (.dem or .dem.gz)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--typing", type=pathlib.Path,
                   help="detector typing sidecar (default: <name>.typing next to the DEM)")
    g.add_argument("--typing-coord", metavar="RULE",
                   help='type detectors by a coordinate, e.g. "3:0=X,1=Z"')
    p.add_argument("--basis", choices=("z", "x", "Z", "X"), default="z",
                   help="memory basis (default z)")


def _add_decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=ALPHA_DEFAULT)
    p.add_argument("--max-iters", type=int, default=MAX_ITERS_DEFAULT)
    p.add_argument("--check-both", action="store_true",
                   help="stop only when both syndromes are satisfied")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gari", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="matrix statistics of D_X, D_Z, D_XYZ and the bottom part")
    _add_dem_args(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("transform", help="write the GARI matrix blocks and a manifest")
    _add_dem_args(p)
    p.add_argument("--out", required=True, type=pathlib.Path)
    p.add_argument("--distance", type=int, help="code distance recorded in the manifest")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("decode", help="decode syndromes against a transformed model")
    p.add_argument("--model", required=True, type=pathlib.Path)
    p.add_argument("--syndromes", required=True, type=pathlib.Path,
                   help="one shot per line: s_X then s_Z, as 0/1 strings or 0x hex")
    p.add_argument("--seed", type=int, default=0)
    _add_decoder_args(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="Monte-Carlo memory experiment")
    _add_dem_args(p)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-seed", type=int, help="alias of --seed for ensemble runs")
    p.add_argument("--ensemble", type=int, default=1, metavar="S")
    _add_decoder_args(p)
    p.add_argument("--rounds", type=int, help="syndrome rounds r (default: --distance, else 1)")
    p.add_argument("--distance", type=int)
    p.add_argument("--p", type=float, help="physical error rate label for the report")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--per-iter-ns", type=float)
    p.add_argument("--budget-ns", type=float, help="per-round latency budget")
    p.add_argument("--workers", type=int, help="worker processes (default: $GARI_WORKERS or 1)")
    p.add_argument("--records", type=pathlib.Path, help="write per-shot records as CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"gari: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
