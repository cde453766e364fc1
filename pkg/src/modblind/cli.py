"""Command-line entry point: ``modblind <subcommand> [options]``.

Exit codes: 0 on success, 1 when an experiment or selftest fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness, selftest
from .harness import InstanceSpec, load_config, solver_config_from
from .spectral import ProblemDims

DEFAULTS = {
    "trials": 20,
    "seed": 0,
    "threads": 1,
    "sigma": 0.0,
    "d0": 1.0,
    "success_threshold": harness.SUCCESS_THRESHOLD,
    "Q": 320,
    "K": 32,
    "M": 16,
    "K_values": [8, 24, 48, 80, 112, 144, 176],
    "M_values": [8, 24, 48, 80, 112, 144, 176],
    "snr_db": [10.0, 20.0, 30.0, 40.0],
    "ratios": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0],
}


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flags from clobbering global ones.
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="master seed (default 0)")
    common.add_argument("--threads", type=int, help="worker processes (default 1)")
    common.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    common.add_argument("--config", type=Path, help="flat TOML config file")
    common.add_argument("--trials", type=int, help="trials per cell (default 20)")
    common.add_argument("--eta", type=float, help="fixed step size (default 0.2/d)")
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--projection", choices=["dykstra", "clip"])
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="modblind",
        description="Blind deconvolution of randomly modulated signals: trials and experiments.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("trial", parents=[common], help="run one seeded trial")
    p.add_argument("--Q", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--dump", type=Path, metavar="PREFIX",
                   help="write h0, x0, yhat, u, v as binary complex vectors PREFIX_<name>.cvec")

    p = sub.add_parser("phase-transition", parents=[common], help="K vs M success grid at fixed Q")
    p.add_argument("--Q", type=int)
    p.add_argument("--K-values", dest="K_values", type=_ints, metavar="K1,K2,...")
    p.add_argument("--M-values", dest="M_values", type=_ints, metavar="M1,M2,...")

    p = sub.add_parser("noise-sweep", parents=[common], help="relative error against SNR")
    p.add_argument("--Q", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--snr-db", dest="snr_db", type=_floats, metavar="S1,S2,...")

    p = sub.add_parser("oversampling-sweep", parents=[common],
                       help="noise-free relative error against Q/(K+M)")
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--ratios", type=_floats, metavar="R1,R2,...")

    sub.add_parser("selftest", parents=[common], help="check operator, adjoint and gradient invariants")
    return parser


def _resolve(args) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        opts.update(load_config(args.config))
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command", "dump", "out", "verbose"):
            opts[key] = value
    return opts


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = _resolve(args)
        config = solver_config_from(opts)
    except (ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"modblind: error: {exc}", file=sys.stderr)
        return 2

    cmd = args.command
    out = getattr(args, "out", None)
    try:
        if cmd == "selftest":
            return 0 if selftest.run(opts["seed"]) else 1

        if cmd == "trial":
            dims = ProblemDims(opts["Q"], opts["K"], opts["M"])
            spec = InstanceSpec(dims, opts["seed"], opts["sigma"], opts["d0"])
            record, details = harness.run_trial(spec, config, opts["success_threshold"],
                                                return_details=True)
            print(record)
            if out is not None:
                grid = harness.GridResult(harness.TRIAL_HEADER, [record.csv_row()], 1)
                grid.to_csv(out)
            if getattr(args, "dump", None) is not None and details is not None:
                inst, it, _, _ = details
                for name, vec in (("h0", inst.h0), ("x0", inst.x0), ("yhat", inst.yhat),
                                  ("u", it.u), ("v", it.v)):
                    harness.write_cvec(f"{args.dump}_{name}.cvec", vec)
            return 0

        common = dict(n_trials=opts["trials"], config=config, master_seed=opts["seed"],
                      threads=opts["threads"], d0=opts["d0"])
        if cmd == "phase-transition":
            grid = harness.phase_transition(opts["Q"], opts["K_values"], opts["M_values"],
                                            sigma=opts["sigma"],
                                            success_threshold=opts["success_threshold"], **common)
        elif cmd == "noise-sweep":
            dims = ProblemDims(opts["Q"], opts["K"], opts["M"])
            grid = harness.noise_sweep(dims, opts["snr_db"], **common)
        else:
            grid = harness.oversampling_sweep(opts["K"], opts["M"], opts["ratios"], **common)
        _emit(grid.to_csv(), out)
        return 0
    except ValueError as exc:
        print(f"modblind: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).exception("experiment failed")
        print(f"modblind: experiment failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
