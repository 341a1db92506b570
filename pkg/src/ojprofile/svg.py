"""Small deterministic SVG charts.

Each renderer takes plain data and returns self-contained SVG text. Numeric
labels use two decimals; coordinates are rounded so equal input gives
byte-identical output.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .exceptions import UnknownNameError, ValidationError

WIDTH = 640
BAR_H = 22
FAIL_COLOR = "#d62728"
PASS_COLOR = "#1f77b4"
POS_COLOR = "#2ca02c"
NEG_COLOR = "#d62728"


def _c(v):
    return f"{v:.2f}"


def _doc(width, height, body, title):
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">\n'
        f"<title>{escape(title)}</title>\n"
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _text(x, y, s, anchor="start", extra=""):
    return f'<text x="{_c(x)}" y="{_c(y)}" text-anchor="{anchor}"{extra}>{escape(str(s))}</text>'


def _require(items, what):
    if not items:
        raise ValidationError(f"{what}: empty data series")


def _hbars(pairs, title, vmax=None):
    _require(pairs, title)
    vmax = vmax or max(max(v for _, v in pairs), 1e-12)
    left, right = 220, 60
    span = WIDTH - left - right
    body = [_text(WIDTH / 2, 20, title, "middle", ' font-weight="bold"')]
    for i, (label, v) in enumerate(pairs):
        y = 36 + i * (BAR_H + 6)
        w = max(0.0, v) / vmax * span
        body.append(_text(left - 6, y + BAR_H * 0.7, label, "end"))
        body.append(f'<rect class="bar" x="{left}" y="{y}" width="{_c(w)}" height="{BAR_H}" fill="{PASS_COLOR}"/>')
        body.append(_text(left + w + 4, y + BAR_H * 0.7, f"{v:.2f}"))
    return _doc(WIDTH, 48 + len(pairs) * (BAR_H + 6), body, title)


def bar_auc(results, title="Mean bag AUC"):
    """``results``: list of ``(name, mean_auc)``."""
    return _hbars([(n, float(v)) for n, v in results], title, vmax=1.0)


def importance_bar(ranking, title="Mean |Shapley value|"):
    """``ranking``: list of ``(feature, mean_abs_phi)``, already ordered."""
    return _hbars([(f, float(v)) for f, v in ranking], title)


def dependence_scatter(rows, feature, title=None):
    """``rows``: ``(raw value, phi, label)`` triples; points colored by label."""
    _require(rows, "dependence scatter")
    title = title or f"Shapley value of {feature}"
    h = 400
    left, right, top, bottom = 60, 20, 30, 40
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(max(ys), 0.0)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(v):
        return left + (v - x0) / (x1 - x0) * (WIDTH - left - right)

    def py(v):
        return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom)

    body = [_text(WIDTH / 2, 18, title, "middle", ' font-weight="bold"')]
    body.append(f'<line x1="{left}" y1="{_c(py(0))}" x2="{WIDTH - right}" y2="{_c(py(0))}" stroke="#999"/>')
    body.append(_text(left, h - 10, f"{x0:.2f}"))
    body.append(_text(WIDTH - right, h - 10, f"{x1:.2f}", "end"))
    body.append(_text(WIDTH / 2, h - 10, feature, "middle"))
    body.append(_text(left - 4, py(y1) + 4, f"{y1:.2f}", "end"))
    body.append(_text(left - 4, py(y0), f"{y0:.2f}", "end"))
    for value, phi, label in rows:
        color = PASS_COLOR if label else FAIL_COLOR
        body.append(f'<circle class="point" cx="{_c(px(value))}" cy="{_c(py(phi))}" r="2.5" fill="{color}"/>')
    return _doc(WIDTH, h, body, title)


def cohort_bars(impacts, title="Cohort impacts"):
    """``impacts``: :class:`CohortImpact` list; one +/- bar pair per feature and cohort."""
    _require(impacts, "cohort bars")
    features = impacts[0].features
    vmax = max(max(max(i.positive), max(i.negative)) for i in impacts) or 1.0
    left = 230
    half = (WIDTH - left - 60) / 2
    mid = left + half
    body = [_text(WIDTH / 2, 20, title, "middle", ' font-weight="bold"')]
    y = 36
    for imp in impacts:
        body.append(_text(10, y + 12, f"Cohort {imp.name} (n={imp.count})", extra=' font-weight="bold"'))
        y += 18
        for f, pos, neg in zip(features, imp.positive, imp.negative):
            wp, wn = pos / vmax * half, neg / vmax * half
            body.append(_text(left - 6, y + 12, f, "end"))
            body.append(f'<rect class="neg" x="{_c(mid - wn)}" y="{y}" width="{_c(wn)}" height="16" fill="{NEG_COLOR}"/>')
            body.append(f'<rect class="pos" x="{_c(mid)}" y="{y}" width="{_c(wp)}" height="16" fill="{POS_COLOR}"/>')
            body.append(_text(mid - wn - 4, y + 12, f"-{neg:.2f}", "end"))
            body.append(_text(mid + wp + 4, y + 12, f"+{pos:.2f}"))
            y += 20
        y += 6
    return _doc(WIDTH, y + 10, body, title)


def comparison_grid(names, pvalues, title="Row improves column"):
    """Heat grid of one-sided p-values; darker cells are significant at 95%, lighter at 90%."""
    _require(names, "comparison grid")
    n = len(names)
    cell = 44
    left, top = 150, 150
    size_w = left + n * cell + 20
    size_h = top + n * cell + 20
    body = [_text(size_w / 2, 18, title, "middle", ' font-weight="bold"')]
    for j, name in enumerate(names):
        x = left + j * cell + cell / 2
        body.append(_text(x, top - 6, name, "start", f' transform="rotate(-60 {_c(x)} {top - 6})"'))
    for i, name in enumerate(names):
        y = top + i * cell
        body.append(_text(left - 6, y + cell * 0.6, name, "end"))
        for j in range(n):
            x = left + j * cell
            p = pvalues[i][j]
            if p is None:
                fill, label = "#eeeeee", ""
            elif p < 0.05:
                fill, label = "#08519c", f"{p:.2f}"
            elif p < 0.10:
                fill, label = "#6baed6", f"{p:.2f}"
            else:
                fill, label = "#ffffff", f"{p:.2f}"
            body.append(f'<rect class="cell" x="{x}" y="{y}" width="{cell}" height="{cell}" fill="{fill}" stroke="#999"/>')
            if label:
                color = "white" if p < 0.05 else "black"
                body.append(_text(x + cell / 2, y + cell * 0.6, label, "middle", f' fill="{color}" font-size="10"'))
    return _doc(size_w, size_h, body, title)


PLOTS = {
    "bar_auc": bar_auc,
    "importance_bar": importance_bar,
    "dependence_scatter": dependence_scatter,
    "cohort_bars": cohort_bars,
    "comparison_grid": comparison_grid,
}


def render_svg(kind, *args, **kwargs):
    try:
        fn = PLOTS[kind]
    except KeyError:
        raise UnknownNameError(f"unknown plot {kind!r}; choose from {sorted(PLOTS)}") from None
    return fn(*args, **kwargs)
