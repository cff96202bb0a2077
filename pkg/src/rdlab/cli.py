"""Command line front end.

    rdlab <bounds|mi|rd|simulate|noise|report> --config FILE [--seed U64]
          [--out DIR] [--workers N] [--quiet]

Exit status: 0 success, 2 invalid config or flags, 3 computation error,
4 a simulate check (bound bracket or rate window) failed. Every output
directory gets a ``manifest.json`` holding the config, its sha256, the
master seed, the tool version and the sha256 of each written file. All
results are computed before anything is written.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

from . import __version__
from .bounds import (excess_lb_cor7, excess_lb_halfspace2d, excess_lb_margin,
                     inverted_rd, mer_upper, smooth_excess_lb, vc_upper_reference)
from .config import COMMANDS, ConfigError, ExperimentConfig, load
from .families import Kind, ModelFamily, family_from_spec, noisy_wrap
from .miest import (MIEstimate, MIMethod, gaussian_location_fisher_logdet, mi_clarke_barron,
                    mi_digamma_2d, mi_nested_mc, mi_vc_bound, noise_info_gap)
from .rdtheory import (RDCurve, RDMethod, RDPoint, SLBParams, blahut_arimoto,
                       discretize_family, slb_curve, slb_halfspace, slb_zero_one)
from .report import render_report, slug
from .seeding import MAX_SEED
from .simlab import (BracketViolation, Learner, NoiseSpec, check_bracket, loglog_slope,
                     run_experiment)
from .tables import (BOUND_COLUMNS, EXPERIMENT_COLUMNS, MI_COLUMNS, RD_COLUMNS, bound_row,
                     mi_row, rd_rows, render)

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_CHECK = 0, 2, 3, 4


@dataclass
class Outcome:
    files: dict[str, str]          # file name -> text
    summary: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)


@dataclass
class Context:
    cfg: ExperimentConfig
    workers: int
    base_dir: Path
    log: callable


# ---------------------------------------------------------------------------
# command-specific validation


def _families(cfg: ExperimentConfig) -> list[ModelFamily]:
    return [family_from_spec(f) for f in cfg.families]


def _check_command(cfg: ExperimentConfig) -> None:
    diags = []
    fams = _families(cfg)
    if cfg.command in ("simulate", "noise"):
        for f in fams:
            if not f.realizable:
                diags.append(f"families: {cfg.command} needs realizable families, got {f.id}")
    if cfg.command == "rd":
        for f in fams:
            if f.kind not in (Kind.INTERVAL_1D, Kind.HALFSPACE_ANGLE_2D, Kind.HALFSPACE_SPHERE):
                diags.append(f"families: rd has no distortion model for {f.id}")
    if cfg.command == "noise" and cfg.noise.rho <= 0:
        diags.append("noise.rho: noise needs rho > 0")
    if cfg.command in ("bounds", "mi", "simulate", "noise") and not cfg.n_list:
        diags.append("n_list: must not be empty")
    if diags:
        raise ConfigError(diags)


# ---------------------------------------------------------------------------
# commands


def _bounds(ctx: Context) -> Outcome:
    cfg, files = ctx.cfg, {}
    t = 1.0 - 2.0 * cfg.noise.rho
    for fam in _families(cfg):
        rows = []
        for n in cfg.n_list:
            reports = []
            if fam.mu is not None and n >= fam.d_vc and n >= 1:
                reports.append(excess_lb_cor7(fam.d_w, fam.d_vc, n, fam.mu, fam.prior_entropy))
                if cfg.noise.rho > 0 and t > 0:
                    reports.append(excess_lb_margin(fam.d_w, fam.d_vc, n, fam.mu,
                                                    fam.prior_entropy, t))
                if fam.kind is Kind.HALFSPACE_SPHERE:
                    rd = partial(slb_halfspace, fam.dim)
                else:
                    rd = partial(slb_zero_one, SLBParams.from_family(fam))
                reports.append(inverted_rd(rd, mi_vc_bound(fam.d_vc, n), n, d_w=fam.d_w,
                                           d_vc=fam.d_vc, mu=fam.mu, h_W=fam.prior_entropy))
            if fam.kind is Kind.HALFSPACE_ANGLE_2D and n >= 1:
                reports.append(excess_lb_halfspace2d(n))
            if fam.kind is Kind.GAUSSIAN_LOCATION and n >= 2:
                fisher = 1.0 / fam.sigma ** 2
                reports.append(smooth_excess_lb(fam.d_w, n, fisher, fisher))
            if fam.realizable and n >= fam.d_vc and n >= 1:
                reports.append(mer_upper(fam.d_vc, n))
            if fam.realizable and n >= 2:
                reports.append(vc_upper_reference(fam.d_vc, n))
            rows.extend(bound_row(r) for r in reports)
        files[f"bounds_{slug(fam.id)}.csv"] = render(BOUND_COLUMNS, rows)
    return Outcome(files)


def _closed_form(method: MIMethod, n: int, value: float) -> MIEstimate:
    return MIEstimate(value, 0.0, method, n, 0, 0, 0.0, None)


def _mi(ctx: Context) -> Outcome:
    cfg, rows, unreliable = ctx.cfg, [], []
    b = cfg.budgets
    for fam in _families(cfg):
        for n in cfg.n_list:
            if fam.realizable:
                ctx.log(f"mi {fam.id} n={n}")
                est = mi_nested_mc(fam, n, b.outer_mc, b.inner_mc, cfg.master_seed, ctx.workers)
                rows.append(mi_row(fam.id, est))
                if est.unreliable:
                    unreliable.append(f"{fam.id} n={n}")
                if n >= 1:
                    rows.append(mi_row(fam.id, _closed_form(MIMethod.VC_BOUND, n,
                                                            mi_vc_bound(fam.d_vc, n))))
            if fam.kind is Kind.HALFSPACE_ANGLE_2D and n >= 1:
                rows.append(mi_row(fam.id, _closed_form(MIMethod.DIGAMMA_2D, n,
                                                        mi_digamma_2d(n))))
            if fam.kind is Kind.GAUSSIAN_LOCATION and n >= 2:
                v = mi_clarke_barron(fam.d_w, n, gaussian_location_fisher_logdet(fam.sigma),
                                     fam.prior_entropy)
                rows.append(mi_row(fam.id, _closed_form(MIMethod.CLARKE_BARRON, n, v)))
    return Outcome({"mi.csv": render(MI_COLUMNS, rows)},
                   {"rows": len(rows), "unreliable": unreliable})


def _rd(ctx: Context) -> Outcome:
    cfg, files, summary = ctx.cfg, {}, {}
    b = cfg.budgets
    for fam in _families(cfg):
        if fam.kind is Kind.HALFSPACE_SPHERE:
            # analytic bound only, on a log grid of distortions
            Ds = [10 ** (-4 + 0.25 * k) for k in range(13)]
            pts = [RDPoint(D, slb_halfspace(fam.dim, D), -(fam.dim - 1) / D) for D in Ds]
            curve = RDCurve(pts, RDMethod.SHANNON_LB)
            text = render(RD_COLUMNS, rd_rows(curve))
        else:
            ctx.log(f"rd {fam.id} grid={b.grid}")
            ba = blahut_arimoto(discretize_family(fam, b.grid), b.ba_slopes, b.max_iter, b.tol)
            slb = slb_curve(SLBParams.from_family(fam), [p.D for p in ba.points if p.D > 0])
            text = render(RD_COLUMNS, rd_rows(ba) + rd_rows(slb))
            summary[fam.id] = {"convex": ba.is_convex(max(b.tol, 1e-9)),
                               "nonincreasing": ba.is_nonincreasing(1e-9)}
        files[f"rd_{slug(fam.id)}.csv"] = text
    return Outcome(files, summary)


def _simulate(ctx: Context) -> Outcome:
    cfg = ctx.cfg
    learner = Learner(cfg.learner)
    noise = NoiseSpec(cfg.noise.rho, cfg.noise.train_noisy, cfg.noise.test_noisy)
    rows, failures, summary = [], [], {}
    for fam in _families(cfg):
        results = []
        for n in cfg.n_list:
            ctx.log(f"simulate {fam.id} n={n} trials={cfg.budgets.trials}")
            res = run_experiment(fam, learner, n, cfg.budgets.trials, noise, cfg.master_seed,
                                 ctx.workers, cfg.noise.mc_check)
            results.append(res)
            rows.append(res.row())
            try:
                check_bracket(res, cfg.checks.n_sigma)
            except BracketViolation as e:
                failures.append(f"{fam.id} n={n}: {e}")
        info = {}
        if len(results) >= 2 and all(r.excess_mean > 0 for r in results):
            slope, _ = loglog_slope(cfg.n_list, [r.excess_mean for r in results])
            info["loglog_slope"] = slope
            sr = cfg.checks.slope_range
            if sr is not None and not sr[0] <= slope <= sr[1]:
                failures.append(f"{fam.id}: log-log slope {slope:.4f} outside [{sr[0]}, {sr[1]}]")
        summary[fam.id] = info
    return Outcome({"simulate.csv": render(EXPERIMENT_COLUMNS, rows)}, summary, failures)


def _noise(ctx: Context) -> Outcome:
    cfg, rows = ctx.cfg, []
    b = cfg.budgets
    for fam in _families(cfg):
        noisy = noisy_wrap(fam, cfg.noise.rho)
        for n in cfg.n_list:
            ctx.log(f"noise {noisy.id} n={n}")
            gap = noise_info_gap(noisy, n, b.outer_mc, b.inner_mc, cfg.master_seed,
                                 ctx.workers, cfg.noise.estimator)
            rows.append(mi_row(noisy.id, gap))
            clean = mi_nested_mc(fam, n, b.outer_mc, b.inner_mc, cfg.master_seed, ctx.workers)
            rows.append(mi_row(fam.id, clean))
    return Outcome({"noise.csv": render(MI_COLUMNS, rows)}, {"rows": len(rows)})


def _report(ctx: Context) -> Outcome:
    paths = [Path(p) if Path(p).is_absolute() else ctx.base_dir / p for p in ctx.cfg.inputs]
    files = render_report(paths)
    inputs = {name: hashlib.sha256(p.read_bytes()).hexdigest()
              for name, p in zip(ctx.cfg.inputs, paths)}
    return Outcome(files, {"input_sha256": inputs})


COMMAND_FUNCS = {"bounds": _bounds, "mi": _mi, "rd": _rd, "simulate": _simulate,
                 "noise": _noise, "report": _report}


# ---------------------------------------------------------------------------
# output


def manifest(cfg: ExperimentConfig, outcome: Outcome, files: dict[str, bytes]) -> str:
    doc = {
        "tool": "rdlab",
        "version": __version__,
        "command": cfg.command,
        "master_seed": cfg.master_seed,
        "config_sha256": cfg.sha256(),
        "config": cfg.content_dict(),
        "files": {name: hashlib.sha256(data).hexdigest() for name, data in sorted(files.items())},
        "summary": outcome.summary,
        "check_failures": outcome.failures,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir: Path, cfg: ExperimentConfig, outcome: Outcome) -> list[Path]:
    data = {name: text.encode() for name, text in outcome.files.items()}
    man = manifest(cfg, outcome, data).encode()
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, blob in data.items():
            p = out_dir / name
            p.write_bytes(blob)
            written.append(p)
        (out_dir / "manifest.json").write_bytes(man)
    except OSError:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written + [out_dir / "manifest.json"]


# ---------------------------------------------------------------------------
# entry point


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _workers(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("workers must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS,
                        help="YAML experiment config")
    common.add_argument("--seed", metavar="U64", type=_seed, default=argparse.SUPPRESS,
                        help="master seed; overrides the config")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS,
                        help="output directory; overrides the config")
    common.add_argument("--workers", metavar="N", type=_workers, default=argparse.SUPPRESS,
                        help="worker processes (results do not depend on this)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="suppress progress messages")
    parser = argparse.ArgumentParser(prog="rdlab", parents=[common],
                                     description="Rate-distortion excess-risk bounds and "
                                                 "simulations.")
    parser.add_argument("--version", action="version", version=f"rdlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {"bounds": "evaluate excess-risk bounds over n_list",
             "mi": "estimate I(Z^n; W) and its closed-form caps",
             "rd": "rate-distortion curves (Blahut-Arimoto and Shannon lower bound)",
             "simulate": "simulate learners against the bounds",
             "noise": "information lost to label noise",
             "report": "SVG plots from simulate CSVs"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    opts = vars(args)
    quiet = opts.get("quiet", False)

    def log(msg):
        if not quiet:
            print(msg, file=sys.stderr, flush=True)

    if "config" not in opts:
        print("rdlab: error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load(opts["config"], args.command)
        changes = {}
        if "seed" in opts:
            changes["master_seed"] = opts["seed"]
        if "out" in opts:
            changes["output_dir"] = opts["out"]
        if changes:
            cfg = cfg.replace(**changes)
        _check_command(cfg)
    except ConfigError as e:
        for d in e.diagnostics:
            print(f"config error: {d}", file=sys.stderr)
        return EXIT_CONFIG

    ctx = Context(cfg, opts.get("workers", 1), Path(opts["config"]).resolve().parent, log)
    try:
        outcome = COMMAND_FUNCS[cfg.command](ctx)
    except Exception as e:  # noqa: BLE001 - reported as a structured message
        err = {"error": type(e).__name__, "message": str(e), "command": cfg.command}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return EXIT_COMPUTE
    try:
        written = write_outputs(Path(cfg.output_dir), cfg, outcome)
    except OSError as e:
        err = {"error": "OSError", "message": str(e), "command": cfg.command}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return EXIT_COMPUTE
    for p in written:
        log(f"wrote {p}")
    if outcome.failures:
        for f in outcome.failures:
            print(f"check failed: {f}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
