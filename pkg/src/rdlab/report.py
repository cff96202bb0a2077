"""Log-log SVG plots of simulated excess risk against the bounds.

One SVG per family. Four series: empirical mean with +-2 standard-error
bars, the lower bound recorded in the CSV, the minimum-excess-risk cap and
the VC reference bound. Each series' main artist carries an SVG id of the
form ``series-<name>`` so the files can be inspected without rendering.
"""
from __future__ import annotations

import io
import math
import re
from collections import OrderedDict
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .bounds import mer_upper
from .families import family_from_id
from .tables import SchemaError, parse_float, read_table

matplotlib.rcParams["svg.hashsalt"] = "rdlab"  # stable clip-path ids across runs
matplotlib.rcParams["svg.fonttype"] = "none"

MARGIN = 0.10


def slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


def _log_limits(values, margin=MARGIN):
    logs = [math.log10(v) for v in values if v > 0 and math.isfinite(v)]
    lo, hi = min(logs), max(logs)
    span = hi - lo if hi > lo else 0.2
    return 10 ** (lo - margin * span), 10 ** (hi + margin * span)


def _collect(paths) -> "OrderedDict[str, list[dict]]":
    if not paths:
        raise SchemaError("no report inputs given")
    groups: OrderedDict[str, list[dict]] = OrderedDict()
    for path in paths:
        schema, rows = read_table(path)
        if schema != "experiment":
            raise SchemaError(f"{path}: expected a simulate CSV, got a '{schema}' table")
        if not rows:
            raise SchemaError(f"{path}: no data rows")
        for r in rows:
            groups.setdefault(r["family"], []).append(r)
    for fam, rows in groups.items():
        settings = {(r["learner"], r["rho"], r["train_noisy"], r["test_noisy"]) for r in rows}
        if len(settings) > 1:
            raise SchemaError(f"{fam}: rows mix learners or noise settings; one per family")
        rows.sort(key=lambda r: int(r["n"]))
    return groups


def _figure(family: str, rows: list[dict]) -> str:
    ns = [int(r["n"]) for r in rows]
    mean = [float(r["excess_mean"]) for r in rows]
    se = [float(r["excess_se"]) for r in rows]
    lb = [(int(r["n"]), parse_float(r["lb_value"])) for r in rows if r["lb_value"] != ""]
    ub = [(int(r["n"]), parse_float(r["ub_value"])) for r in rows if r["ub_value"] != ""]
    lb_name = next((r["lb_name"] for r in rows if r["lb_name"]), "lower bound")
    ub_name = next((r["ub_name"] for r in rows if r["ub_name"]), "VC_UB")
    d_vc = family_from_id(family).d_vc
    mer = [(n, mer_upper(d_vc, n).value) for n in ns if n >= d_vc]

    # keep the lower whisker positive on the log axis
    lower = [min(2 * s, m * (1 - 1e-9)) for m, s in zip(mean, se)]
    upper = [2 * s for s in se]

    fig = Figure(figsize=(6.0, 4.5))
    ax = fig.add_subplot()
    ax.set_xscale("log")
    ax.set_yscale("log")
    cont = ax.errorbar(ns, mean, yerr=[lower, upper], fmt="o", color="black", capsize=3,
                       label=f"empirical ({rows[0]['learner']})")
    cont.lines[0].set_gid("series-empirical")
    for k, art in enumerate(cont.lines[2]):
        art.set_gid(f"errorbar-{k}")
    for gid, pts, name, style in (("series-lower", lb, lb_name, "-"),
                                  ("series-mer", mer, "MER_UB", "--"),
                                  ("series-vc", ub, ub_name, ":")):
        if pts:
            (line,) = ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=name)
            line.set_gid(gid)
    ys = [m + u for m, u in zip(mean, upper)] + [m - lo for m, lo in zip(mean, lower)]
    ys += [v for _, v in lb + mer + ub]
    ax.set_xlim(*_log_limits(ns))
    ax.set_ylim(*_log_limits(ys))
    ax.set_xlabel("n")
    ax.set_ylabel("excess risk")
    ax.set_title(family)
    ax.legend(loc="best", fontsize=8)
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def render_report(csv_paths) -> dict[str, str]:
    """SVG text keyed by file name, one per family; nothing is written."""
    return {f"report_{slug(fam)}.svg": _figure(fam, rows)
            for fam, rows in _collect(list(csv_paths)).items()}


def plot_report(csv_paths, out_dir) -> list[Path]:
    """Render every figure first, then write them; on error no file is written."""
    svgs = render_report(csv_paths)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in svgs.items():
        p = out / name
        p.write_text(text)
        written.append(p)
    return written
