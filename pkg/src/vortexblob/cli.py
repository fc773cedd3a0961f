"""Command-line interface.

Subcommands: init (tile the t=0 ensemble), run (integrate + diagnostics
CSV), diagnose (one record from a snapshot), converge (epsilon study with
PASS/FAIL trend verdicts).

Exit codes: 0 success, 2 configuration/format problem, 3 degenerate input
(empty support, unexecutable schedule, gate refusal), 4 blow-up (partial
diagnostics are still written).

Every output file records the canonical config hash in its header; re-running
the same config overwrites its own outputs bit-identically, while a config
with a different hash refuses to overwrite them.
"""
from __future__ import annotations

import argparse
import os
import sys

from .config import (ConfigError, parse_run_config, parse_study_config,
                     config_hash, run_config_text, study_config_text)
from .diagnostics import (DiagnosticsRecord, ZeroMeanGateError, equi_tail_profile,
                          grid_for_ensemble, impulses, kinetic_energy, lp_norm,
                          f_eps_norms, reconstruct_vorticity)
from .discretization import DegenerateInputError
from .dynamics import BlowUpError
from .snapshots import (SnapshotFormatError, fmt, read_ensemble, recorded_hash,
                        write_csv, write_ensemble, write_summary)
from .study import execute_run, prepare_ensemble, run_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_BLOWUP = 4


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _ensure_out(out_dir: str, targets: list[str], cfg_hash: str) -> str | None:
    """Replay protection: refuse to overwrite outputs of a different config."""
    os.makedirs(out_dir, exist_ok=True)
    for name in targets:
        old = recorded_hash(os.path.join(out_dir, name))
        if old is not None and old != cfg_hash:
            return (f"{os.path.join(out_dir, name)} was written by config "
                    f"{old}; current config is {cfg_hash} -- refusing to "
                    "overwrite (use a fresh --out or remove the old outputs)")
    return None


def _write_config_copy(out_dir: str, text: str, cfg_hash: str) -> None:
    with open(os.path.join(out_dir, "config.txt"), "w", newline="\n") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        fh.write(text)


def _float_list(text: str) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(float("inf") if tok == "inf" else float(tok))
    return tuple(out)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_init(args) -> int:
    cfg = parse_run_config(_read_text(args.config))
    canon = run_config_text(cfg)
    h = config_hash(canon)
    out = args.out or cfg.out_dir
    clash = _ensure_out(out, ["ensemble_t0.txt", "summary.txt"], h)
    if clash:
        return _fail(EXIT_CONFIG, clash)
    e0, _w0eps, summary = prepare_ensemble(cfg)
    _write_config_copy(out, canon, h)
    write_ensemble(e0, os.path.join(out, "ensemble_t0.txt"), {"config_hash": h})
    write_summary(summary, os.path.join(out, "summary.txt"), {"config_hash": h})
    _say(args.quiet, f"tiled {e0.n_blobs} blobs (eps={cfg.epsilon}, "
         f"delta={summary['delta']:.6g}, h={summary['h']:.6g}) -> {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = parse_run_config(_read_text(args.config))
    canon = run_config_text(cfg)
    h = config_hash(canon)
    out = args.out or cfg.out_dir
    clash = _ensure_out(out, ["diagnostics.csv", "ensemble_final.txt",
                              "ensemble_t0.txt", "summary.txt"], h)
    if clash:
        return _fail(EXIT_CONFIG, clash)
    _write_config_copy(out, canon, h)
    try:
        result = execute_run(cfg)
    except BlowUpError as exc:
        write_csv(list(exc.records), os.path.join(out, "diagnostics.csv"),
                  {"config_hash": h})
        return _fail(EXIT_BLOWUP, f"{exc} (partial diagnostics written to {out})")
    write_ensemble(result.initial, os.path.join(out, "ensemble_t0.txt"),
                   {"config_hash": h})
    write_ensemble(result.final, os.path.join(out, "ensemble_final.txt"),
                   {"config_hash": h})
    write_csv(result.rows, os.path.join(out, "diagnostics.csv"), {"config_hash": h})
    write_summary(result.summary, os.path.join(out, "summary.txt"),
                  {"config_hash": h})
    _say(args.quiet, f"ran {result.initial.n_blobs} blobs to t={cfg.t_end} "
         f"({len(result.rows)} observations) -> {out}")
    return EXIT_OK


def cmd_converge(args) -> int:
    study = parse_study_config(_read_text(args.config))
    canon = study_config_text(study)
    h = config_hash(canon)
    out = args.out or study.base.out_dir
    clash = _ensure_out(out, ["study.csv", "verdicts.txt"], h)
    if clash:
        return _fail(EXIT_CONFIG, clash)
    _write_config_copy(out, canon, h)

    def on_member(eps, result) -> None:
        member_dir = os.path.join(out, f"eps_{eps:g}")
        os.makedirs(member_dir, exist_ok=True)
        write_csv(result.rows, os.path.join(member_dir, "diagnostics.csv"),
                  {"config_hash": h})
        write_ensemble(result.final, os.path.join(member_dir, "ensemble_final.txt"),
                       {"config_hash": h})

    result = run_study(study, on_member=on_member)
    write_csv(result.table, os.path.join(out, "study.csv"), {"config_hash": h})
    lines = [f"{q}: {v}" for q, v in result.verdicts.items()]
    if result.error is not None:
        lines.append(f"study: FAIL at eps={result.failed_epsilon:g} ({result.error})")
    with open(os.path.join(out, "verdicts.txt"), "w", newline="\n") as fh:
        fh.write(f"# config_hash={h}\n")
        fh.writelines(ln + "\n" for ln in lines)
    for ln in lines:
        print(ln)
    if result.error is not None:
        if isinstance(result.error, BlowUpError):
            return EXIT_BLOWUP
        if isinstance(result.error, DegenerateInputError):
            return EXIT_DEGENERATE
        return EXIT_CONFIG
    return EXIT_OK


def cmd_diagnose(args) -> int:
    e = read_ensemble(args.snapshot)
    total, linear, angular = impulses(e)
    rec = DiagnosticsRecord(e.time, total, (float(linear[0]), float(linear[1])),
                            angular)
    norms = _float_list(args.norms)
    grid = grid_for_ensemble(e, spacing=args.spacing)
    omega = reconstruct_vorticity(e, grid)
    for p in norms:
        rec.lp_norms[p] = lp_norm(omega, p)
    if args.energy is not None:
        spacing = args.energy_spacing if args.energy_spacing is not None \
            else e.epsilon / 4.0
        rec.energy = kinetic_energy(e, args.energy, spacing)
    if args.f_eps:
        rec.f_eps_l1, rec.f_eps_l2 = f_eps_norms(e, grid)
    if args.equi:
        radii = _float_list(args.equi)
        rec.equi_tail = dict(zip(radii, equi_tail_profile(e, radii)))
    for key, value in rec.to_row().items():
        print(f"{key} = {fmt(value) if isinstance(value, float) else value}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser / entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexblob",
        description="Vortex-blob simulation and diagnostics for 2D incompressible flow.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="configuration file")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=0,
                       help="0 = serial deterministic mode (any value currently "
                            "runs the serial path)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    common(sub.add_parser("init", help="tile the t=0 ensemble and write a snapshot"))
    common(sub.add_parser("run", help="integrate and write diagnostics CSV"))
    common(sub.add_parser("converge", help="epsilon study with trend verdicts"))

    diag = sub.add_parser("diagnose", help="diagnostics record from one snapshot")
    diag.add_argument("snapshot", help="ensemble snapshot file")
    diag.add_argument("--norms", default="1,2,inf",
                      help="comma-separated p values (default: 1,2,inf)")
    diag.add_argument("--spacing", type=float, default=None,
                      help="reconstruction grid spacing (default eps/4)")
    diag.add_argument("--energy", type=float, default=None, metavar="R",
                      help="kinetic energy on the ball of radius R (+ tail bound)")
    diag.add_argument("--energy-spacing", type=float, default=None)
    diag.add_argument("--f-eps", action="store_true", dest="f_eps",
                      help="consistency-error L1/L2 norms")
    diag.add_argument("--equi", default="", help="tail-mass radii, comma-separated")
    diag.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 0) < 0:
        return _fail(EXIT_CONFIG, f"--threads must be >= 0, got {args.threads}")
    handlers = {"init": cmd_init, "run": cmd_run, "converge": cmd_converge,
                "diagnose": cmd_diagnose}
    try:
        return handlers[args.command](args)
    except (ConfigError, SnapshotFormatError) as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    except (DegenerateInputError, ZeroMeanGateError) as exc:
        return _fail(EXIT_DEGENERATE, str(exc))
    except BlowUpError as exc:
        return _fail(EXIT_BLOWUP, str(exc))


if __name__ == "__main__":
    sys.exit(main())
