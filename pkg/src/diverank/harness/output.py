"""CSV tables and SVG line charts for experiment results."""

from __future__ import annotations

import csv
from collections.abc import Mapping, Sequence
from pathlib import Path
from xml.sax.saxutils import escape

from ..suddendeath import SDReport
from .config import BASELINE, ExperimentConfig
from .pipeline import DIVERSITY_METRICS, PRECISION, RELEVANCE_METRICS, ResultRow

METRICS_HEADER = ("algorithm", "lambda", "N", "metric", "value")
SD_HEADER = ("N", "lambda", "algorithm", "sd_score", "algs_roster")


def fmt_value(v: float) -> str:
    return f"{v:.6f}"


def fmt_lambda(lam: float) -> str:
    return f"{lam:g}"


def emit_csv(
    rows: Sequence[ResultRow],
    reports: Mapping[tuple[float, int], SDReport],
    out_dir: str | Path,
) -> tuple[Path, Path]:
    """Write ``metrics.csv`` and ``sd.csv`` (UTF-8, LF, six decimals).

    Rows are written in the order given; SD rows are ordered by N, lambda and
    roster position.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / "metrics.csv"
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow((r.algorithm, fmt_lambda(r.lam), r.n, r.metric, fmt_value(r.value)))
    sd_path = out / "sd.csv"
    with open(sd_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SD_HEADER)
        for lam, n in sorted(reports, key=lambda k: (k[1], k[0])):
            rep = reports[(lam, n)]
            for a in rep.algorithms:
                w.writerow((n, fmt_lambda(lam), a, fmt_value(rep.scores[a]), rep.roster()))
    return metrics_path, sd_path


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 480, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 120, 40, 48
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, k: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    step = (hi - lo) / (k - 1)
    return [lo + step * j for j in range(k)]


def _bounds(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.1 or 0.5
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def line_chart(
    series: Mapping[str, Sequence[tuple[float, float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    reference: tuple[float, float] | None = None,
    labels: Mapping[str, Sequence[str]] | None = None,
    metadata: Mapping[str, str] | None = None,
) -> str:
    """Render polylines (one per series) as a standalone SVG document.

    ``reference`` draws a dotted vertical line at its x and a dotted
    horizontal line at its y. ``labels`` optionally annotates each point.
    """
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    if reference is not None:
        xs.append(reference[0])
        ys.append(reference[1])
    if not xs:
        raise ValueError("nothing to plot")
    x0, x1 = _bounds(xs)
    y0, y1 = _bounds(ys)
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y: float) -> float:
        return MARGIN_T + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">'
    ]
    if metadata:
        out.append("<metadata>")
        for k, v in metadata.items():
            out.append(f'<entry key="{escape(k)}">{escape(v)}</entry>')
        out.append("</metadata>")
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    out.append(f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append(
        f'<rect class="plot-area" x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>'
    )
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.2f}" y="{MARGIN_T + ph + 16}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN_L - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.2f})">{escape(ylabel)}</text>'
    )
    if reference is not None:
        rx, ry = px(reference[0]), py(reference[1])
        out.append(
            f'<line class="reference" x1="{rx:.2f}" y1="{MARGIN_T}" x2="{rx:.2f}" y2="{MARGIN_T + ph}" '
            'stroke="gray" stroke-dasharray="2,3"/>'
        )
        out.append(
            f'<line class="reference" x1="{MARGIN_L}" y1="{ry:.2f}" x2="{MARGIN_L + pw}" y2="{ry:.2f}" '
            'stroke="gray" stroke-dasharray="2,3"/>'
        )
    for k, (name, pts) in enumerate(series.items()):
        colour = COLOURS[k % len(COLOURS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline data-series="{escape(name)}" points="{coords}" fill="none" '
            f'stroke="{colour}" stroke-width="1.5"/>'
        )
        for j, (x, y) in enumerate(pts):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{colour}"/>')
            if labels and name in labels:
                out.append(
                    f'<text x="{px(x) + 4:.2f}" y="{py(y) - 4:.2f}" font-size="8" fill="{colour}">'
                    f"{escape(labels[name][j])}</text>"
                )
        ly = MARGIN_T + 14 * k + 8
        lx = MARGIN_L + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 16}" y2="{ly}" stroke="{colour}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 20}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _lookup(rows: Sequence[ResultRow]) -> dict[tuple[str, float, int, str], float]:
    return {(r.algorithm, r.lam, r.n, r.metric): r.value for r in rows}


def emit_charts(
    rows: Sequence[ResultRow],
    reports: Mapping[tuple[float, int], SDReport],
    out_dir: str | Path,
    config: ExperimentConfig,
) -> list[Path]:
    """Write the four chart families as SVG files; returns the paths written.

    * ``diversity_vs_N_<metric>.svg``: each algorithm at its chart lambda;
    * ``relevance_vs_N_<metric>.svg``: same, for the relevance metrics;
    * ``tradeoff_precision_vs_<metric>.svg``: one point per lambda at the
      trade-off cutoff, with dotted reference lines at the baseline;
    * ``sd_vs_N.svg``: Sudden Death at the common chart lambda.
    """
    if not rows:
        raise ValueError("no result rows to chart")
    values = _lookup(rows)
    algorithms = [a for a in config.algorithms if any(k[0] == a for k in values)]
    cutoffs = sorted({k[2] for k in values})
    lambdas = sorted({k[1] for k in values})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def lam_of(a: str) -> float:
        lam = config.lambda_for(a)
        return lam if lam in lambdas else lambdas[0]

    meta_lams = ", ".join(f"{a}={fmt_lambda(lam_of(a))}" for a in algorithms)

    def save(name: str, svg: str) -> None:
        path = out / name
        path.write_text(svg, encoding="utf-8", newline="\n")
        written.append(path)

    for family, metric_names in (("diversity", DIVERSITY_METRICS), ("relevance", RELEVANCE_METRICS)):
        for m in metric_names:
            series = {
                a: [(n, values[(a, lam_of(a), n, m)]) for n in cutoffs if (a, lam_of(a), n, m) in values]
                for a in algorithms
            }
            series = {a: pts for a, pts in series.items() if pts}
            if not series:
                continue
            svg = line_chart(series, f"{m} vs N", "N", m, metadata={"lambda": meta_lams, "metric": m})
            save(f"{family}_vs_N_{m}.svg", svg)

    n = config.tradeoff_n
    for m in DIVERSITY_METRICS:
        series, labels = {}, {}
        for a in algorithms:
            if a == BASELINE:
                continue
            pts, labs = [], []
            for lam in lambdas:
                key_p, key_d = (a, lam, n, PRECISION), (a, lam, n, m)
                if key_p in values and key_d in values:
                    pts.append((values[key_p], values[key_d]))
                    labs.append(fmt_lambda(lam))
            if pts:
                series[a], labels[a] = pts, labs
        base = None
        base_lam = lam_of(BASELINE)
        if (BASELINE, base_lam, n, PRECISION) in values:
            base = (values[(BASELINE, base_lam, n, PRECISION)], values[(BASELINE, base_lam, n, m)])
        if not series and base is None:
            continue
        svg = line_chart(
            series, f"precision vs {m} (N={n})", PRECISION, m, reference=base, labels=labels,
            metadata={"N": str(n), "lambdas": ", ".join(fmt_lambda(x) for x in lambdas), "baseline": BASELINE},
        )
        save(f"tradeoff_precision_vs_{m}.svg", svg)

    sd_lam = config.chart_lambda
    sd_keys = sorted(n for lam, n in reports if lam == sd_lam)
    if sd_keys:
        roster = reports[(sd_lam, sd_keys[0])].algorithms
        series = {a: [(n, reports[(sd_lam, n)].scores[a]) for n in sd_keys] for a in roster}
        svg = line_chart(
            series, "Sudden Death vs N", "N", "SD score",
            metadata={"lambda": fmt_lambda(sd_lam), "roster": "|".join(roster)},
        )
        save("sd_vs_N.svg", svg)
    return written
