"""Command-line interface.

Subcommands: ``rpca``, ``complete``, ``inpaint``, ``phase``, ``table3`` and
``rankest``. Any error prints one line to stderr and exits with status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    RNG_NAME,
    make_rng,
    phase_csv,
    phase_transition,
    psnr,
    random_observation_mask,
    table3_csv,
    table3_experiment,
)
from .completion import COMPLETERS
from .dense import ObservationMask, read_mask, read_matrix, write_matrix
from .pnm import PortableImage, read_pnm, write_pnm
from .rank import estimate_rank
from .rpca import SOLVERS, SolverOptions, SolverReport


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def parse_range(text: str) -> list[float]:
    """Parse ``start:stop:step``; ``stop`` is included when it lies on the grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"range {text!r} must be start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise CliError(f"range {text!r} has a non-numeric field") from None
    if step <= 0 or stop < start:
        raise CliError(f"range {text!r} needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _int_range(text: str) -> list[int]:
    vals = parse_range(text)
    if any(v != int(v) for v in vals):
        raise CliError(f"rank range {text!r} must contain integers")
    return [int(v) for v in vals]


def _load(path: str, mask_path: str | None, require_mask: bool = False):
    if not Path(path).is_file():
        raise CliError(f"input file not found: {path}")
    D, mask = read_matrix(path)
    if mask_path is not None:
        if not Path(mask_path).is_file():
            raise CliError(f"mask file not found: {mask_path}")
        extra = read_mask(mask_path)
        if extra.shape != D.shape:
            raise CliError(f"mask shape {extra.shape} does not match input shape {D.shape}")
        mask = ObservationMask(mask.array & extra.array)
    elif require_mask and mask.count == mask.array.size:
        raise CliError("--mask is required when the input has no missing entries")
    if mask.count == 0:
        raise CliError("no observed entries")
    return D, mask


def _options(args) -> SolverOptions:
    return SolverOptions(
        d=None if args.estimate_rank else args.rank,
        lam=args.lam,
        epsilon=args.epsilon,
        max_iters=args.max_iters,
    )


def _config_row(method: str, shape, rep: SolverReport) -> dict:
    o = rep.options
    return {"method": method, "m": shape[0], "n": shape[1], "d": o.d, "lambda": o.lam,
            "mu0": o.mu0, "rho": o.rho, "mu_max": o.mu_max, "epsilon": o.epsilon,
            "max_iters": o.max_iters, "termination": rep.termination.value,
            "iterations": rep.iterations}


def _write_trace(path: str, method: str, shape, rep: SolverReport) -> None:
    cfg = _config_row(method, shape, rep)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = list(cfg) + ["iteration", "objective", "residual", "stop_metric", "y1_norm", "y2_norm"]
    w.writerow(head)
    for k in range(rep.iterations):
        y = rep.multiplier_norm_trace[k]
        w.writerow([*cfg.values(), k + 1, repr(float(rep.objective_trace[k])),
                    repr(float(rep.residual_trace[k])), repr(float(rep.stop_metric_trace[k])),
                    repr(float(y[0])), repr(float(y[1]))])
    Path(path).write_text(buf.getvalue())


def _add_solver_tail(p, out_s_required: bool) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rank", type=int, help="factor rank d")
    g.add_argument("--estimate-rank", action="store_true",
                   help="estimate d from the data (default when --rank is absent)")
    p.add_argument("--lambda", dest="lam", type=float, help="regularization weight")
    p.add_argument("--epsilon", type=float, default=1e-5, help="stopping tolerance")
    p.add_argument("--max-iters", type=int, default=500, help="iteration cap")
    p.add_argument("--out-l", required=True, help="output file for the low-rank part")
    p.add_argument("--out-s", required=out_s_required, help="output file for the sparse part")
    p.add_argument("--trace", help="per-iteration CSV trace")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bifactor", description="Factored Schatten quasi-norm RPCA and completion.")
    p.add_argument("--version", action="version", version=f"bifactor {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("rpca", help="low-rank plus sparse decomposition of a matrix file")
    r.add_argument("--method", required=True, choices=sorted(SOLVERS))
    r.add_argument("--input", required=True)
    r.add_argument("--mask")
    _add_solver_tail(r, out_s_required=True)

    c = sub.add_parser("complete", help="fill missing entries of a matrix file")
    c.add_argument("--method", required=True, choices=sorted(COMPLETERS))
    c.add_argument("--input", required=True)
    c.add_argument("--mask", required=True)
    _add_solver_tail(c, out_s_required=False)

    i = sub.add_parser("inpaint", help="drop random pixels of an image and recover them")
    i.add_argument("--method", required=True, choices=sorted(COMPLETERS))
    i.add_argument("--image", required=True)
    i.add_argument("--missing-ratio", type=float, required=True)
    i.add_argument("--seed", type=int, required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--report")
    i.add_argument("--rank", type=int, help="factor rank d (default: estimated per channel)")
    i.add_argument("--lambda", dest="lam", type=float)
    i.add_argument("--epsilon", type=float, default=1e-4)
    i.add_argument("--max-iters", type=int, default=500)

    ph = sub.add_parser("phase", help="success-ratio grid over rank and corruption")
    ph.add_argument("--method", required=True, choices=sorted(SOLVERS))
    ph.add_argument("--size", type=int, required=True)
    ph.add_argument("--ranks", required=True, help="start:stop:step")
    ph.add_argument("--corruptions", required=True, help="start:stop:step")
    ph.add_argument("--trials", type=int, required=True)
    ph.add_argument("--seed", type=int, required=True)
    ph.add_argument("--out", required=True)
    ph.add_argument("--epsilon", type=float, default=1e-5)
    ph.add_argument("--max-iters", type=int, default=500)
    ph.add_argument("--jobs", type=int, help="worker processes (default: $BIFACTOR_JOBS or CPU count)")

    t = sub.add_parser("table3", help="compare the RPCA solvers on noisy synthetic data")
    t.add_argument("--sizes", required=True, help="comma-separated square sizes")
    t.add_argument("--trials", type=int, default=10)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epsilon", type=float, default=1e-5)
    t.add_argument("--max-iters", type=int, default=500)
    t.add_argument("--jobs", type=int)
    t.add_argument("--no-timing", action="store_true", help="omit wall-time column")

    k = sub.add_parser("rankest", help="estimate the rank of a matrix file")
    k.add_argument("--input", required=True)
    k.add_argument("--mask")
    k.add_argument("--k", type=int)
    return p


# -- handlers ---------------------------------------------------------------

def _cmd_rpca(args) -> None:
    D, mask = _load(args.input, args.mask)
    rep = SOLVERS[args.method](D, mask, _options(args))
    write_matrix(args.out_l, rep.L)
    write_matrix(args.out_s, rep.S)
    if args.trace:
        _write_trace(args.trace, args.method, D.shape, rep)
    print(f"{args.method}: {rep.termination.value} after {rep.iterations} iterations, d={rep.options.d}")


def _cmd_complete(args) -> None:
    D, mask = _load(args.input, args.mask)
    rep = COMPLETERS[args.method](D, mask, _options(args))
    write_matrix(args.out_l, rep.L)
    if args.out_s:
        write_matrix(args.out_s, rep.S)
    if args.trace:
        _write_trace(args.trace, args.method, D.shape, rep)
    print(f"{args.method}: {rep.termination.value} after {rep.iterations} iterations, d={rep.options.d}")


def _cmd_inpaint(args) -> None:
    if not (0.0 <= args.missing_ratio < 1.0):
        raise CliError("--missing-ratio must lie in [0, 1)")
    if not Path(args.image).is_file():
        raise CliError(f"image file not found: {args.image}")
    img = read_pnm(args.image)
    orig = img.pixels.astype(np.float64)
    rng = make_rng(args.seed)
    opts = SolverOptions(d=args.rank, lam=args.lam, epsilon=args.epsilon, max_iters=args.max_iters)
    out = np.empty_like(orig)
    zero = np.empty_like(orig)
    rows = []
    for ch in range(img.channels):
        mask = random_observation_mask(orig[ch].shape, args.missing_ratio, rng)
        zero[ch] = np.where(mask.array, orig[ch], 0.0)
        rep = COMPLETERS[args.method](orig[ch], mask, opts)
        # observed pixels are kept as given
        out[ch] = np.where(mask.array, orig[ch], rep.L)
        rows.append(rep)
    result = PortableImage.from_float(out)
    write_pnm(args.out, result)
    p_rec = psnr(result.pixels.astype(np.float64), orig)
    p_zero = psnr(zero, orig)
    if args.report:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "image", "width", "height", "channels", "missing_ratio", "seed", "rng",
                    "channel", "d", "lambda", "mu0", "rho", "mu_max", "epsilon", "max_iters",
                    "termination", "iterations", "psnr_recovered", "psnr_zero_fill"])
        for ch, rep in enumerate(rows):
            o = rep.options
            w.writerow([args.method, args.image, img.width, img.height, img.channels,
                        args.missing_ratio, args.seed, RNG_NAME, ch, o.d, repr(o.lam), repr(o.mu0),
                        o.rho, o.mu_max, o.epsilon, o.max_iters, rep.termination.value,
                        rep.iterations, repr(p_rec), repr(p_zero)])
        Path(args.report).write_text(buf.getvalue())
    print(f"PSNR recovered {p_rec:.2f} dB, zero-fill {p_zero:.2f} dB")


def _cmd_phase(args) -> None:
    ranks = _int_range(args.ranks)
    corr = parse_range(args.corruptions)
    if args.size < 1 or args.trials < 1:
        raise CliError("--size and --trials must be positive")
    if max(ranks) > args.size or min(ranks) < 1:
        raise CliError(f"ranks must lie in [1, {args.size}]")
    if max(corr) >= 1.0:
        raise CliError("corruption ratios must be below 1")
    grid = phase_transition(args.method, ranks, corr, args.size, args.trials, args.seed,
                            epsilon=args.epsilon, max_iters=args.max_iters, jobs=args.jobs)
    Path(args.out).write_text(phase_csv(args.method, ranks, corr, args.size, args.trials,
                                        args.seed, grid))


def _cmd_table3(args) -> None:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise CliError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes or min(sizes) < 2 or args.trials < 1:
        raise CliError("--sizes and --trials must be positive")
    rows = table3_experiment(sizes, args.trials, args.seed, epsilon=args.epsilon,
                             max_iters=args.max_iters, jobs=args.jobs)
    Path(args.out).write_text(table3_csv(rows, timing=not args.no_timing))


def _cmd_rankest(args) -> None:
    D, mask = _load(args.input, args.mask)
    print(estimate_rank(D, mask, args.k).rank)


_HANDLERS = {
    "rpca": _cmd_rpca,
    "complete": _cmd_complete,
    "inpaint": _cmd_inpaint,
    "phase": _cmd_phase,
    "table3": _cmd_table3,
    "rankest": _cmd_rankest,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _HANDLERS[args.command](args)
    except (CliError, ValueError, OSError, np.linalg.LinAlgError, RuntimeError) as exc:
        msg = " ".join(str(exc).split())
        print(f"bifactor: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
