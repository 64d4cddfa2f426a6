"""``loqsim`` command line."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .codec import FormatSpec, RoundingMode
from .gates import GateError, parse_circuit
from .simulator import PackedState, ReferenceState, SimulationError, run

COMMANDS = {
    "tables": "tables",
    "budget": "budget",
    "sigma-vs-g": "sigma_vs_g",
    "roundtrip": "roundtrip",
    "qft-test": "qft_test",
    "porter-thomas": "porter_thomas",
    "histograms": "histograms",
    "rootz": "rootz_stress",
}

_HELP = {
    "tables": "optimal (E,F,A) per word size and qubit count",
    "budget": "conversion errors and gate budgets per word size",
    "sigma-vs-g": "random-circuit error growth against the model",
    "roundtrip": "circuit followed by its inverse, error against the model",
    "qft-test": "QFT of a plane wave, error against the model",
    "porter-thomas": "output-probability distribution of random circuits",
    "histograms": "rounding-error histograms with uniformity tests",
    "rootz": "repeated small phase rotations on one qubit",
}


def _int_list(text: str) -> list[int]:
    """``"8-40"``, ``"16,20,24"`` or a mix of both."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _triplets(text: str) -> list[tuple[int, int, int]]:
    specs = [FormatSpec.parse(chunk) for chunk in text.split(";") if chunk.strip()]
    return [(s.E, s.F, s.A) for s in specs]


def _on_off(text: str) -> bool:
    t = text.lower()
    if t in ("on", "true", "1", "yes"):
        return True
    if t in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on|off, got {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--qubits", type=_int_list, help="qubit count (comma list for tables / qft-test)")
    p.add_argument("--bits", type=_int_list, help="word sizes B, e.g. 16,20,24 or 8-40")
    p.add_argument("--triplet", action="append", type=_triplets, help="E,F,A (repeatable, or ';'-separated)")
    p.add_argument("--cycles", type=int, help="random-circuit cycles C")
    p.add_argument("--seed", type=_int_list, help="seed or comma list of seeds")
    p.add_argument("--sigma", type=float, help="error tolerance sigma")
    p.add_argument("--regime", choices=("random", "biased"), default="random")
    p.add_argument("--mod-jitter", type=_on_off, metavar="on|off")
    p.add_argument("--phase-jitter", type=_on_off, metavar="on|off")
    p.add_argument("--norm-threshold", type=float, metavar="ETA")
    p.add_argument("--table-qubits", type=int, help="Q used to pick optimal triplets for --bits (default 20)")
    p.add_argument("--approximate", action="store_true", help="qft-test: use the approximate QFT")
    p.add_argument("--exact", action="store_true", help="roundtrip: double precision only")
    p.add_argument("--W", type=int, help="rootz: rotation pi/W (default 2**(A+2))")
    p.add_argument("--count", type=int, help="rootz: number of rotations (default W)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes over seeds")
    p.add_argument("--out", type=Path, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loqsim", description="Low-precision log-polar state-vector simulation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(sub.add_parser(name, help=_HELP[name]))
    sim = sub.add_parser("simulate", help="run a circuit file")
    sim.add_argument("--circuit", type=Path, required=True)
    sim.add_argument("--qubits", type=int)
    sim.add_argument("--triplet", type=FormatSpec.parse, default=FormatSpec(4, 5, 7))
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--mod-jitter", type=_on_off, default=False, metavar="on|off")
    sim.add_argument("--phase-jitter", type=_on_off, default=False, metavar="on|off")
    sim.add_argument("--norm-threshold", type=float, metavar="ETA", help="renormalize when |norm^2-1| > ETA")
    sim.add_argument("--load-state", type=Path, help="initial state in LQS1 format (default |0>)")
    sim.add_argument("--save-state", type=Path, help="write the final packed state in LQS1 format")
    sim.add_argument("--out", type=Path)
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def config_from_args(args) -> harness.ExperimentConfig:
    experiment = COMMANDS[args.command]
    kw = {"experiment": experiment, "regime": args.regime, "jobs": args.jobs}
    if args.qubits:
        kw["qubits"] = args.qubits[0]
        kw["qubit_list"] = list(args.qubits)
    elif experiment == "budget":
        kw["qubits"] = 50
    elif experiment == "roundtrip":
        kw["qubits"] = 12
    elif experiment == "rootz_stress":
        kw["qubits"] = 1
    elif experiment == "qft_test":
        kw["qubit_list"] = [12, 14]
        kw["qubits"] = 14
    if args.bits:
        kw["bits"] = args.bits
    if args.triplet:
        kw["triplets"] = [t for group in args.triplet for t in group]
    if args.cycles is not None:
        kw["cycles"] = args.cycles
    elif experiment == "roundtrip":
        kw["cycles"] = 4
    if args.seed:
        kw["seeds"] = args.seed
    if args.sigma is not None:
        kw["sigma"] = args.sigma
    if args.mod_jitter is not None:
        kw["modulus_jitter"] = args.mod_jitter
    if args.phase_jitter is not None:
        kw["phase_jitter"] = args.phase_jitter
    if args.norm_threshold is not None:
        kw["norm_threshold"] = args.norm_threshold
    if args.table_qubits is not None:
        kw["table_qubits"] = args.table_qubits
    kw["approximate"] = args.approximate
    kw["exact"] = args.exact
    kw["W"] = args.W
    kw["count"] = args.count
    return harness.ExperimentConfig(**kw)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def write_rows(rows: list[dict], fh, fmt: str, meta: dict | None = None) -> None:
    if fmt == "json":
        doc = dict(meta or {})
        doc["rows"] = rows
        json.dump(doc, fh, indent=2, default=_jsonable)
        fh.write("\n")
        return
    if not rows:
        return
    writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def _emit(rows, args, meta):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_rows(rows, fh, args.format, meta)
    else:
        write_rows(rows, sys.stdout, args.format, meta)


def _simulate(args) -> int:
    circuit = parse_circuit(args.circuit.read_text(), args.qubits)
    mode = RoundingMode(args.mod_jitter, args.phase_jitter)
    if args.load_state:
        state = PackedState.load(args.load_state, mode, args.seed)
        if state.q != circuit.n_qubits:
            raise SimulationError(f"state has {state.q} qubits, circuit needs {circuit.n_qubits}")
        ref = ReferenceState(state.amplitudes())
        ref.normalize()
    else:
        q = max(circuit.n_qubits, 1)
        state = PackedState.basis(q, args.triplet, 0, mode, args.seed)
        ref = ReferenceState.basis(q)
    report = run(state, circuit, ref, renormalize=args.norm_threshold is not None, norm_threshold=args.norm_threshold)
    rows = [
        {"gate": n, "G": g, "norm_sq": nrm, "sigma_sq": s}
        for n, (g, nrm, s) in enumerate(zip(report.effective_g, report.norm_sq, report.sigma_sq))
    ]
    if args.save_state:
        state.save(args.save_state)
    meta = {"config": {k: str(v) for k, v in vars(args).items()}, "renormalized_at": report.renormalized_at}
    _emit(rows, args, meta)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args)
        cfg = config_from_args(args)
        result = harness.run_experiment(cfg)
    except (ValueError, GateError, SimulationError, OSError) as exc:
        print(f"loqsim: error: {exc}", file=sys.stderr)
        return 2
    meta = {"config": result.to_json_dict()["config"], "summary": result.summary}
    _emit(result.rows, args, meta)
    if result.summary and args.format == "csv":
        print(json.dumps(result.summary, indent=2, default=_jsonable), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
