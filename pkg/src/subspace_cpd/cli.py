"""Command-line front end: detect, benchmark, simulate, and tune.

``detect`` runs the full pipeline on a CSV file: load, optionally
standardise, fill in any of ``d`` / ``lam`` / ``mu`` that were left on
automatic, then segment and write the result document.  Report files are
accompanied by rendered figures unless ``--no-plots`` is given.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import dataclass, replace

from . import __version__
from .detection import DetectionConfig, detect, detect_fixed_k
from .errors import DegenerateSeriesError
from .evaluation import run_benchmark
from .factorization import SolverOptions
from .io import (
    ResultDocument,
    load_csv,
    standardize,
    write_benchmark_csv,
    write_json_atomic,
    write_matrix_csv,
    write_text_atomic,
)
from .simulation import NOISE_VARIANCE, SyntheticSpec, generate
from .tuning import estimate_dim, estimate_lambda, slope_heuristic_mu

__all__ = ["RunConfig", "run_detect", "main"]

DEFAULT_TAU_MAX = 15


class PipelineError(RuntimeError):
    """Failure attributed to one named pipeline stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    """Everything one ``detect`` run needs.

    ``d``, ``lam`` and ``mu`` may be None, meaning "estimate from the data";
    at most one of ``mu`` and ``known_k`` may be set, since exactly one rule
    governs when splitting stops.
    """

    input: str
    has_header: bool = False
    time_column: int | str | None = None
    standardize: bool = False
    d: int | None = None
    lam: float | None = None
    mu: float | None = None
    known_k: int | None = None
    msl: int = 30
    grid_mode: bool = False
    refine_window: int = 10
    tau_max: int = DEFAULT_TAU_MAX
    init_fraction: float = 0.2
    seed: int = 0
    output: str | None = None
    fmt: str = "json"

    def __post_init__(self) -> None:
        if self.mu is not None and self.known_k is not None:
            raise ValueError("set at most one of mu and known_k")
        if self.msl < 1:
            raise ValueError("msl must be >= 1")
        if self.fmt not in ("json", "csv"):
            raise ValueError("format must be 'json' or 'csv'")


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def _loss_curve_rows(fit_curve, mu: float | None, n: int) -> list[dict]:
    pen_scale = (mu or 0.0) * math.log(n)
    return [
        {"k": k, "loss": float(loss), "penalized": float(loss + pen_scale * k)}
        for k, loss in enumerate(fit_curve)
    ]


def _profiles_as_dicts(profiles) -> list[dict]:
    return [
        {
            "segment": [int(p.segment[0]), int(p.segment[1])],
            "candidates": [int(t) for t in p.candidates],
            "statistics": [float(v) for v in p.statistics],
        }
        for p in profiles
    ]


def _segments_as_dicts(changepoints, losses, d: int, n: int) -> list[dict]:
    bounds = (0, *changepoints, n)
    return [
        {
            "start": int(a),
            "end": int(b),
            "d": int(d),
            "fit": float(sl.fit),
            "nuclear": float(sl.nuclear),
            "regularized": float(sl.regularized_total),
        }
        for (a, b), sl in zip(zip(bounds, bounds[1:]), losses)
    ]


def run_detect(cfg: RunConfig) -> ResultDocument:
    """Execute the detection pipeline for one input file."""
    X = _stage("load", load_csv, cfg.input, has_header=cfg.has_header,
               time_column=cfg.time_column)
    if cfg.standardize:
        X = _stage("standardize", standardize, X)
    n = X.shape[1]

    if cfg.d is not None:
        d = cfg.d
    else:
        d = _stage("estimate-dim", lambda: estimate_dim(X, cfg.init_fraction).d_hat)

    if cfg.lam is not None:
        lam = cfg.lam
    else:
        def _lam():
            try:
                return estimate_lambda(X)
            except DegenerateSeriesError as exc:
                warnings.warn(f"falling back to lam=0: {exc}", stacklevel=2)
                return 0.0
        lam = _stage("estimate-lambda", _lam)

    base = DetectionConfig(
        d=d,
        lam=lam,
        mu=0.0,
        msl=cfg.msl,
        grid_mode=cfg.grid_mode,
        refine_window=cfg.refine_window,
        solver=SolverOptions(seed=cfg.seed),
    )
    cache: dict = {}
    loss_curve: list[dict] = []
    mu: float | None

    if cfg.known_k is not None:
        fixed = _stage("detect", detect_fixed_k, X, base, cfg.known_k, cache)
        seg = fixed.segmentation
        mu = None
        loss_curve = _loss_curve_rows(fixed.fit_curve, None, n)
    else:
        if cfg.mu is not None:
            mu = cfg.mu
        else:
            # clamp the change budget to what msl admits on this series
            tau_max = min(cfg.tau_max, n // cfg.msl - 1)
            if tau_max < 5:
                raise PipelineError(
                    "slope-heuristic",
                    ValueError(
                        f"series of length {n} admits at most {max(tau_max, 0)} "
                        f"changes at msl={cfg.msl}; pass --mu or --known-k instead"
                    ),
                )
            slope = _stage("slope-heuristic", slope_heuristic_mu, X, tau_max,
                           base, cache)
            mu = slope.mu_hat
            fixed = detect_fixed_k(X, base, tau_max, cache)  # cache hit
            loss_curve = _loss_curve_rows(fixed.fit_curve, mu, n)
        seg = _stage("detect", detect, X, replace(base, mu=mu), cache)

    return ResultDocument(
        changepoints=list(seg.changepoints),
        lam=float(lam),
        mu=None if mu is None else float(mu),
        d=int(d),
        loss_curve=loss_curve,
        scan_profiles=_profiles_as_dicts(seg.scan_profiles),
        segments=_segments_as_dicts(seg.changepoints, seg.segment_losses, d, n),
        config={
            "input": str(cfg.input),
            "has_header": cfg.has_header,
            "time_column": cfg.time_column,
            "standardize": cfg.standardize,
            "msl": cfg.msl,
            "grid_mode": cfg.grid_mode,
            "refine_window": cfg.refine_window,
            "tau_max": cfg.tau_max,
            "init_fraction": cfg.init_fraction,
            "known_k": cfg.known_k,
            "seed": cfg.seed,
            "version": __version__,
            "n": int(n),
            "p": int(X.shape[0]),
        },
    )


def _out_stem(path: str) -> str:
    for suffix in (".json", ".csv"):
        if path.endswith(suffix):
            return path[: -len(suffix)]
    return path


def _auto(text: str, kind=float):
    return None if text == "auto" else kind(text)


def _parse_time_column(value):
    if value is None:
        return None
    text = str(value).strip()
    return int(text) if text.lstrip("-").isdigit() else text


def _write_detect_outputs(doc: ResultDocument, args) -> None:
    from . import plotting

    stem = _out_stem(args.output)
    write_text_atomic(stem + ".json", doc.to_json() + "\n")
    if args.fmt == "csv":
        lines = ["changepoint"] + [str(t) for t in doc.changepoints]
        write_text_atomic(stem + ".changepoints.csv", "\n".join(lines) + "\n")
        if doc.loss_curve:
            rows = ["k,loss,penalized"] + [
                f"{r['k']},{r['loss']!r},{r['penalized']!r}" for r in doc.loss_curve
            ]
            write_text_atomic(stem + ".loss_curve.csv", "\n".join(rows) + "\n")
        seg_rows = ["start,end,d,fit,nuclear,regularized"] + [
            f"{s['start']},{s['end']},{s['d']},{s['fit']!r},{s['nuclear']!r},{s['regularized']!r}"
            for s in doc.segments
        ]
        write_text_atomic(stem + ".segments.csv", "\n".join(seg_rows) + "\n")
    if not args.no_plots:
        if doc.loss_curve:
            plotting.save_loss_curve(
                doc.loss_curve, stem + ".loss_curve.png",
                chosen=len(doc.changepoints),
            )
        if doc.scan_profiles:
            plotting.save_scan_profiles(doc.scan_profiles, stem + ".scan.png")
        X = load_csv(args.input, has_header=args.has_header,
                     time_column=_parse_time_column(args.time_column))
        plotting.save_series_heatmap(
            X, stem + ".segments.png", changepoints=doc.changepoints
        )


def _cmd_detect(args) -> int:
    cfg = RunConfig(
        input=args.input,
        has_header=args.has_header,
        time_column=_parse_time_column(args.time_column),
        standardize=args.standardize,
        d=_auto(args.dim, int),
        lam=_auto(args.lam),
        mu=_auto(args.mu),
        known_k=args.known_k,
        msl=args.msl,
        grid_mode=args.grid,
        refine_window=args.refine_window,
        tau_max=args.tau_max,
        init_fraction=args.init_fraction,
        seed=args.seed,
        output=args.output,
        fmt=args.fmt,
    )
    doc = run_detect(cfg)
    if args.output:
        _write_detect_outputs(doc, args)
        print(f"detected {len(doc.changepoints)} change-point(s): {doc.changepoints}")
        print(f"wrote {_out_stem(args.output)}.json")
    else:
        print(doc.to_json())
    return 0


def _cmd_benchmark(args) -> int:
    from . import plotting

    report = run_benchmark(
        cells=[(args.p, int(args.dim), args.scenario)],
        replications=args.replications,
        base_seed=args.seed,
        n=args.n,
        changepoints=tuple(args.changepoints),
        msl=args.msl,
        grid_mode=args.grid,
        tau_max=args.tau_max,
        refine_window=args.refine_window,
        workers=args.workers,
    )
    for row in report.rows:
        print(
            f"p={row.p} d={row.d} scenario={row.scenario}: "
            f"TNC {row.tnc_count}/{row.completed} ({row.tnc_rate:.3f}), "
            f"mean VM {row.mean_vm:.4f}"
        )
    if args.output:
        stem = _out_stem(args.output)
        write_json_atomic(stem + ".json", report.to_dict())
        write_benchmark_csv(stem + ".csv", report)
        if not args.no_plots:
            plotting.save_benchmark_summary(report, stem + ".png")
        print(f"wrote {stem}.json and {stem}.csv")
    return 0


def _cmd_simulate(args) -> int:
    from . import plotting

    if not args.output:
        raise ValueError("simulate requires --output")
    d = int(args.dim)
    delta = args.delta if args.delta is not None else math.sqrt(d) / 2.0
    spec = SyntheticSpec(
        p=args.p,
        d=d,
        n=args.n,
        changepoints=tuple(args.changepoints),
        delta=delta,
        scenario=args.scenario,
        seed=args.seed,
        sigma2=args.sigma2,
    )
    X, truth = generate(spec)
    stem = _out_stem(args.output)
    write_matrix_csv(stem + ".csv", X)
    write_json_atomic(
        stem + ".truth.json",
        {
            "n": spec.n,
            "p": spec.p,
            "d": spec.d,
            "changepoints": list(spec.changepoints),
            "delta": spec.delta,
            "scenario": spec.scenario,
            "sigma": truth.sigma,
            "seed": spec.seed,
        },
    )
    if not args.no_plots:
        plotting.save_series_heatmap(
            X, stem + ".png", true_changepoints=spec.changepoints
        )
    print(f"wrote {stem}.csv ({spec.p} variables x {spec.n} points)")
    return 0


def _cmd_tune(args) -> int:
    X = load_csv(args.input, has_header=args.has_header,
                 time_column=_parse_time_column(args.time_column))
    if args.standardize:
        X = standardize(X)
    d = _auto(args.dim, int)
    if d is None:
        d = estimate_dim(X, args.init_fraction).d_hat
    try:
        lam = estimate_lambda(X)
    except DegenerateSeriesError as exc:
        warnings.warn(f"falling back to lam=0: {exc}", stacklevel=2)
        lam = 0.0
    base = DetectionConfig(
        d=d, lam=lam, msl=args.msl, grid_mode=args.grid,
        refine_window=args.refine_window, solver=SolverOptions(seed=args.seed),
    )
    cache: dict = {}
    tau_max = min(args.tau_max, X.shape[1] // args.msl - 1)
    slope = slope_heuristic_mu(X, tau_max, base, cache=cache)
    print(f"d      = {d}")
    print(f"lambda = {lam!r}")
    print(f"mu     = {slope.mu_hat!r}  (slope {slope.slope!r})")
    if args.output:
        from . import plotting

        stem = _out_stem(args.output)
        fixed = detect_fixed_k(X, base, tau_max, cache)
        curve = _loss_curve_rows(fixed.fit_curve, slope.mu_hat, X.shape[1])
        write_json_atomic(
            stem + ".json",
            {
                "d": d,
                "lambda": lam,
                "mu": slope.mu_hat,
                "slope": slope.slope,
                "intercept": slope.intercept,
                "points": [[t, v] for t, v in slope.points],
                "loss_curve": curve,
            },
        )
        if not args.no_plots:
            plotting.save_loss_curve(curve, stem + ".loss_curve.png")
        print(f"wrote {stem}.json")
    return 0


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--msl", type=int, default=30, help="minimum segment length")
    p.add_argument("--grid", action="store_true",
                   help="scan a log-size grid of candidates instead of all of them")
    p.add_argument("--refine-window", type=int, default=10,
                   help="half-width of grid-mode refinement")
    p.add_argument("--tau-max", type=int, default=DEFAULT_TAU_MAX,
                   help="change budget for the penalty calibration")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="output path stem")
    p.add_argument("--no-plots", action="store_true",
                   help="skip rendering figures next to the outputs")


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV file, one row per time point")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--time-column", default=None,
                   help="column to drop (0-based index, or name with --has-header)")
    p.add_argument("--standardize", action="store_true",
                   help="centre and unit-scale each variable first")
    p.add_argument("--dim", default="auto", help="subspace dimension, or 'auto'")
    p.add_argument("--init-fraction", type=float, default=0.2,
                   help="initial fraction of columns used to estimate the dimension")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subspace-cpd",
        description="Offline change-point detection for series with "
                    "piecewise low-dimensional subspace structure.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="segment one CSV series")
    _add_input(p_detect)
    p_detect.add_argument("--lambda", dest="lam", default="auto",
                          help="regularisation weight, or 'auto'")
    p_detect.add_argument("--mu", default="auto", help="change penalty scale, or 'auto'")
    p_detect.add_argument("--known-k", type=int, default=None,
                          help="detect exactly K changes instead of penalised stopping")
    p_detect.add_argument("--format", dest="fmt", choices=("json", "csv"),
                          default="json")
    _add_common(p_detect)

    p_bench = sub.add_parser("benchmark", help="score the pipeline on synthetic draws")
    p_bench.add_argument("--p", type=int, default=20, help="number of variables")
    p_bench.add_argument("--dim", default="2", help="subspace dimension")
    p_bench.add_argument("--scenario", choices=sorted(NOISE_VARIANCE), default="A")
    p_bench.add_argument("--replications", type=int, default=100)
    p_bench.add_argument("--n", type=int, default=500)
    p_bench.add_argument("--changepoints", type=_int_list, default=[100, 200, 300, 400])
    p_bench.add_argument("--workers", type=int, default=None)
    _add_common(p_bench)

    p_sim = sub.add_parser("simulate", help="write a synthetic series and its truth")
    p_sim.add_argument("--p", type=int, default=20)
    p_sim.add_argument("--dim", default="2")
    p_sim.add_argument("--n", type=int, default=500)
    p_sim.add_argument("--changepoints", type=_int_list, default=[100, 200, 300, 400])
    p_sim.add_argument("--delta", type=float, default=None,
                       help="subspace distance between adjacent segments "
                            "(default sqrt(d)/2)")
    p_sim.add_argument("--scenario", choices=sorted(NOISE_VARIANCE), default="A")
    p_sim.add_argument("--sigma2", type=float, default=None,
                       help="noise variance override (0 for noiseless)")
    _add_common(p_sim)

    p_tune = sub.add_parser("tune", help="print estimated lambda, mu, and d")
    _add_input(p_tune)
    _add_common(p_tune)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "detect": _cmd_detect,
        "benchmark": _cmd_benchmark,
        "simulate": _cmd_simulate,
        "tune": _cmd_tune,
    }
    try:
        return handlers[args.command](args)
    except PipelineError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
