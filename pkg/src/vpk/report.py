"""Rendering of run reports as fixed-layout tables, JSON, or SVG.

Renderers only format values already present in the report; nothing is
computed at render time, so every printed number can be traced back to
the report JSON and from there to input digests.
"""

import json

CONDITION_ORDER = ("0L", "0S", "10", "20", "30", "40")


def _as_obj(report):
    if hasattr(report, "to_json_obj"):
        return report.to_json_obj()
    return dict(report)


def _norm_condition(tag):
    t = str(tag).upper()
    return t[2:] if t.startswith("OV") else t


def order_conditions(tags):
    """Canonical column order: 0L, 0S, then overlap percentages."""
    canon = {_norm_condition(t): t for t in tags}
    ordered = [canon[c] for c in CONDITION_ORDER if c in canon]
    rest = sorted(t for t in tags if _norm_condition(t) not in CONDITION_ORDER)
    return ordered + rest


def _fmt_row(cells, widths):
    return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()


def _table(rows):
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return [_fmt_row(r, widths) for r in rows]


def render_table(report) -> str:
    obj = _as_obj(report)
    results = obj.get("results", {})
    tool = obj.get("tool", {})
    lines = [f"{tool.get('name', 'vpk')} run report (version {tool.get('version', '?')})"]

    wer = results.get("wer")
    if wer is not None:
        lines += ["", "WER"]
        lines += _table([
            ["wer%", "S", "D", "I", "N"],
            [f"{wer['wer'] * 100:.2f}", wer["substitutions"], wer["deletions"],
             wer["insertions"], wer["ref_words"]],
        ])

    by_cond = results.get("wer_by_condition")
    if by_cond:
        tags = order_conditions(list(by_cond))
        lines += ["", "WER by overlap condition (%)"]
        lines += _table([
            ["condition"] + [str(t) for t in tags],
            ["wer"] + [f"{float(by_cond[t]):.1f}" for t in tags],
        ])

    abx_rows = [
        (name.split("_", 1)[1], results[name])
        for name in ("abx_within", "abx_across")
        if name in results
    ]
    if abx_rows:
        lines += ["", "ABX phoneme discriminability"]
        lines += _table(
            [["condition", "error", "cells", "triples"]]
            + [
                [cond, f"{r['error_rate']:.3f}", r["n_cells"], r["n_triples"]]
                for cond, r in abx_rows
            ]
        )

    probe = results.get("probe")
    if probe:
        lines += ["", "Attribute probes"]
        lines += _table(
            [["attribute", "classifier", "pooling", "accuracy%", "random%",
              "majority%", "n_test"]]
            + [
                [attr, r["classifier_id"], r["pooling_id"],
                 f"{r['accuracy'] * 100:.2f}", f"{r['random_guess'] * 100:.2f}",
                 f"{r['majority_baseline'] * 100:.2f}", r["n_test"]]
                for attr, r in sorted(probe.items())
            ]
        )

    comparison = results.get("probe_comparison")
    if comparison:
        lines += ["", "Leakage deltas (accuracy drop, percentage points)"]
        lines += _table(
            [["attribute", "before%", "after%", "delta"]]
            + [
                [row["attribute"], f"{row['before'] * 100:.2f}",
                 f"{row['after'] * 100:.2f}", f"{row['delta_points']:.2f}"]
                for row in comparison
            ]
        )

    summary = obj.get("summary", {}).get("rows")
    if summary:
        lines += ["", "Privacy-utility summary"]
        lines += _table(
            [["metric", "kind", "value"]]
            + [[r["metric"], r["kind"], f"{r['value']:.4f}"] for r in summary]
        )

    if len(lines) == 1:
        lines += ["", "(no evaluations requested)"]
    return "\n".join(lines) + "\n"


def svg_line_chart(series, title, xlabel, ylabel, width=640, height=400):
    """Minimal hand-built SVG line chart; series is {label: [(x, y), ...]}."""
    ml, mr, mt, mb = 60, 20, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    colors = ("#1f6fb2", "#b23a1f", "#3a9a4f", "#8a4fb2", "#b2901f")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" '
        'stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" '
        f'font-size="12">{xlabel}</text>',
        f'<text x="15" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 15 {mt + ph / 2:.1f})">{ylabel}</text>',
        f'<text x="{ml - 5}" y="{mt + ph + 4}" text-anchor="end" '
        f'font-size="10">{y0:g}</text>',
        f'<text x="{ml - 5}" y="{mt + 4}" text-anchor="end" font-size="10">{y1:g}</text>',
        f'<text x="{ml}" y="{mt + ph + 16}" text-anchor="middle" '
        f'font-size="10">{x0:g}</text>',
        f'<text x="{ml + pw}" y="{mt + ph + 16}" text-anchor="middle" '
        f'font-size="10">{x1:g}</text>',
    ]
    for i, (label, pts) in enumerate(series.items()):
        color = colors[i % len(colors)]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in sorted(pts))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            'stroke-width="2"/>'
        )
        for x, y in pts:
            parts.append(
                f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{ml + pw - 5}" y="{mt + 15 + 14 * i}" text-anchor="end" '
            f'font-size="11" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(report) -> dict:
    """SVG charts for whichever plottable series the report contains."""
    obj = _as_obj(report)
    results = obj.get("results", {})
    out = {}
    by_cond = results.get("wer_by_condition")
    if by_cond:
        overlap_pts = []
        for tag in order_conditions(list(by_cond)):
            norm = _norm_condition(tag)
            x = float(norm) if norm not in ("0L", "0S") else 0.0
            overlap_pts.append((x, float(by_cond[tag])))
        out["wer_by_condition.svg"] = svg_line_chart(
            {"WER": overlap_pts}, "WER vs overlap ratio", "overlap (%)", "WER (%)"
        )
    sweep = results.get("k_sweep")
    if sweep:
        series = {}
        for row in sweep:
            k = float(row["k"])
            for key in ("leakage_points", "abx_error"):
                if key in row:
                    series.setdefault(key, []).append((k, float(row[key])))
        if series:
            out["k_sweep.svg"] = svg_line_chart(
                series, "Privacy-utility trade-off vs codebook size", "k", "value"
            )
    return out


def render_report(report, format="table"):
    """Dispatch on format: table and json return text, svg returns a
    {filename: content} mapping."""
    if format == "table":
        return render_table(report)
    if format == "json":
        obj = _as_obj(report)
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if format == "svg":
        return render_svg(report)
    raise ValueError(f"unknown report format {format!r}")
