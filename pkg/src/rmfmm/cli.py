"""Benchmark command line: generate instances, run solvers, evaluate estimates.

Exit codes: 0 success, 2 usage error, 3 solver hit the outer-iteration cap,
4 I/O or data error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .datagen import GroundTruthBundle, SyntheticSpec, generate, ground_truth_error, observed_error
from .errors import (
    DimensionMismatch,
    EmptyMask,
    InfeasibleFactors,
    InvalidFraction,
    NonFiniteObjective,
    ParseError,
    RankTooLarge,
)
from .kernels import truncated_svd_init
from .matrixio import load_factors, load_masked_matrix, save_factors, save_masked_matrix
from .mm import IterationReport, MmMode, run_mm
from .model import FactorPair, MaskedMatrix, RmfProblem, Variant

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4

DATA_FILE = "data.txt"
TRUTH_U_FILE = "truth_u.txt"
TRUTH_V_FILE = "truth_v.txt"
MANIFEST_FILE = "manifest.txt"
EST_U_FILE = "est_u.txt"
EST_V_FILE = "est_v.txt"
TRACE_FILE = "trace.csv"


class UsageError(Exception):
    pass


_KINDS = {"lrmr": Variant.LOW_RANK_RECOVERY, "nmf": Variant.ROBUST_NMF}
_MODES = {"lmmm": MmMode.LOCALLY_MAJORANT, "gmmm": MmMode.GLOBALLY_MAJORANT}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmf-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded synthetic instance to a directory")
    gen.add_argument("--kind", choices=sorted(_KINDS), required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--rank", type=int, required=True)
    gen.add_argument("--outlier-frac", type=float, default=None)
    gen.add_argument("--outlier-lo", type=float, default=None)
    gen.add_argument("--outlier-hi", type=float, default=None)
    gen.add_argument("--missing-frac", type=float, default=None)
    gen.add_argument("--sparsity-frac", type=float, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    solve = sub.add_parser("solve", help="run one solver configuration on a data file")
    solve.add_argument("--data", required=True)
    solve.add_argument("--variant", choices=sorted(_KINDS), required=True)
    solve.add_argument("--mm", choices=sorted(_MODES), required=True)
    solve.add_argument("--rank", type=int, required=True)
    solve.add_argument("--lambda-u", type=float, default=None)
    solve.add_argument("--lambda-v", type=float, default=None)
    solve.add_argument("--preset", choices=["synthetic", "clustering"], default="synthetic")
    solve.add_argument("--tol", type=float, default=1e-4)
    solve.add_argument("--max-outer", type=int, default=500)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--truth-u", default=None)
    solve.add_argument("--truth-v", default=None)
    solve.add_argument("--out", required=True)
    solve.set_defaults(func=cmd_solve)

    ev = sub.add_parser("eval", help="print metric,value lines for an estimate")
    ev.add_argument("--est-u", required=True)
    ev.add_argument("--est-v", required=True)
    ev.add_argument("--truth-u", default=None)
    ev.add_argument("--truth-v", default=None)
    ev.add_argument("--data", default=None)
    ev.set_defaults(func=cmd_eval)
    return parser


def _resolve_spec(args) -> SyntheticSpec:
    kind = _KINDS[args.kind]
    nmf = kind is Variant.ROBUST_NMF
    if args.sparsity_frac is not None and not nmf:
        raise UsageError("--sparsity-frac applies only to --kind nmf")
    lo, hi = (0.0, 10.0) if nmf else (-10.0, 10.0)
    return SyntheticSpec(
        kind=kind,
        m=args.m,
        n=args.n,
        r=args.rank,
        outlier_fraction=0.4 if args.outlier_frac is None else args.outlier_frac,
        outlier_range=(
            lo if args.outlier_lo is None else args.outlier_lo,
            hi if args.outlier_hi is None else args.outlier_hi,
        ),
        missing_fraction=(
            (0.0 if nmf else 0.8) if args.missing_frac is None else args.missing_frac
        ),
        sparsity_fraction=(
            (0.3 if nmf else 0.0) if args.sparsity_frac is None else args.sparsity_frac
        ),
        seed=args.seed,
    )


def _write_manifest(path: Path, spec: SyntheticSpec) -> None:
    pairs = [
        ("kind", spec.kind.value),
        ("m", spec.m),
        ("n", spec.n),
        ("rank", spec.r),
        ("outlier_fraction", spec.outlier_fraction),
        ("outlier_lo", spec.outlier_range[0]),
        ("outlier_hi", spec.outlier_range[1]),
        ("missing_fraction", spec.missing_fraction),
        ("sparsity_fraction", spec.sparsity_fraction),
        ("seed", spec.seed),
        ("rng", "numpy-pcg64"),
        ("data_file", DATA_FILE),
        ("truth_u_file", TRUTH_U_FILE),
        ("truth_v_file", TRUTH_V_FILE),
    ]
    path.write_text("".join(f"{k}={v}\n" for k, v in pairs), encoding="utf-8", newline="\n")


def cmd_generate(args) -> int:
    spec = _resolve_spec(args)
    bundle: GroundTruthBundle = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_masked_matrix(out / DATA_FILE, bundle.data)
    save_factors(out / TRUTH_U_FILE, out / TRUTH_V_FILE, bundle.true_factors)
    _write_manifest(out / MANIFEST_FILE, spec)
    return EXIT_OK


def _initial_factors(variant: Variant, data: MaskedMatrix, rank: int, seed: int) -> FactorPair:
    if variant is Variant.LOW_RANK_RECOVERY:
        return truncated_svd_init(data, rank, seed=seed)
    count = data.observed_count
    mean = float(data.values.sum()) / count if count else 1.0
    scale = mean / rank if mean > 0 else 1.0
    rng = np.random.default_rng(seed)
    m, n = data.shape
    return FactorPair(rng.uniform(size=(m, rank)) * scale, rng.uniform(size=(n, rank)) * scale)


def cmd_solve(args) -> int:
    variant = _KINDS[args.variant]
    if args.preset == "clustering" and variant is not Variant.ROBUST_NMF:
        raise UsageError("--preset clustering applies only to --variant nmf")
    if (args.truth_u is None) != (args.truth_v is None):
        raise UsageError("--truth-u and --truth-v must be given together")
    data = load_masked_matrix(args.data)
    m, n = data.shape
    if variant is Variant.ROBUST_NMF and np.any(data.values < 0.0):
        raise InfeasibleFactors("nmf data must be nonnegative at observed entries")
    lam_default = 20.0 / (m + n)
    lambda_u = args.lambda_u
    if lambda_u is None:
        lambda_u = 2000.0 / (m + n) if args.preset == "clustering" else lam_default
    lambda_v = lam_default if args.lambda_v is None else args.lambda_v
    problem = RmfProblem(variant=variant, rank=args.rank, lambda_u=lambda_u, lambda_v=lambda_v)
    init = _initial_factors(variant, data, args.rank, args.seed)
    truth = load_factors(args.truth_u, args.truth_v) if args.truth_u else None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = "iter,objective,rel_change,rho_u,rho_v,inner_iters,elapsed_ms"
    if truth is not None:
        header += ",rel_err_truth"
    with open(out / TRACE_FILE, "w", encoding="utf-8", newline="\n") as trace_file:
        trace_file.write(header + "\n")

        def emit(report: IterationReport) -> None:
            row = (
                f"{report.iteration},{report.objective:.17g},{report.rel_change:.17g},"
                f"{report.rho_u:.17g},{report.rho_v:.17g},{report.inner_iterations},"
                f"{report.elapsed_ms:.3f}"
            )
            if truth is not None:
                row += f",{ground_truth_error(report.factors, truth):.17g}"
            trace_file.write(row + "\n")
            trace_file.flush()

        final, trace = run_mm(
            problem,
            data,
            init,
            _MODES[args.mm],
            tol=args.tol,
            max_outer=args.max_outer,
            on_iteration=emit,
        )
    save_factors(out / EST_U_FILE, out / EST_V_FILE, final)
    return EXIT_OK if trace.converged else EXIT_NOT_CONVERGED


def cmd_eval(args) -> int:
    if (args.truth_u is None) != (args.truth_v is None):
        raise UsageError("--truth-u and --truth-v must be given together")
    if args.truth_u is None and args.data is None:
        raise UsageError("need --truth-u/--truth-v and/or --data")
    est = load_factors(args.est_u, args.est_v)
    if args.truth_u is not None:
        truth = load_factors(args.truth_u, args.truth_v)
        print(f"rel_err_truth,{ground_truth_error(est, truth):.17g}")
    if args.data is not None:
        data = load_masked_matrix(args.data)
        print(f"rel_err_observed,{observed_error(est, data):.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, InvalidFraction, RankTooLarge, ValueError) as exc:
        if isinstance(exc, (ParseError, DimensionMismatch, EmptyMask, InfeasibleFactors)):
            print(f"rmf-bench: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"rmf-bench: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, NonFiniteObjective) as exc:
        print(f"rmf-bench: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
