import re
import xml.etree.ElementTree as ET

import pytest

from ojprofile.explain import CohortImpact
from ojprofile.exceptions import UnknownNameError, ValidationError
from ojprofile.svg import (
    FAIL_COLOR,
    PASS_COLOR,
    bar_auc,
    cohort_bars,
    comparison_grid,
    dependence_scatter,
    importance_bar,
    render_svg,
)


def test_single_bar_label():
    svg = bar_auc([("rf", 0.7)])
    assert "0.70" in svg
    ET.fromstring(svg)


def test_deterministic():
    data = [("rf", 0.71234), ("nb", 0.65)]
    assert bar_auc(data) == bar_auc(list(data))
    rows = [(i / 7, (-1) ** i * i / 100, i % 2) for i in range(30)]
    assert dependence_scatter(rows, "days_to_deadline") == dependence_scatter(list(rows), "days_to_deadline")


def test_scatter_points(rng):
    rows = [(float(rng.random()), float(rng.normal()), int(i % 3 == 0)) for i in range(100)]
    svg = dependence_scatter(rows, "days_to_deadline")
    points = re.findall(r'<circle class="point"[^>]*fill="([^"]+)"', svg)
    assert len(points) == 100
    assert points.count(PASS_COLOR) == sum(1 for r in rows if r[2])
    assert points.count(FAIL_COLOR) == sum(1 for r in rows if not r[2])
    ET.fromstring(svg)


def test_other_charts_parse():
    imp = CohortImpact("A", (0.1, 0, 0, 0, 0), (0.2, 0, 0, 0, 0), 3)
    for svg in (
        importance_bar([("days_to_deadline", 0.3), ("assignment", 0.01)]),
        cohort_bars([imp]),
        comparison_grid(["a", "b"], [[None, 0.01], [0.99, None]]),
    ):
        ET.fromstring(svg)
    assert "+0.10" in cohort_bars([imp]) and "-0.20" in cohort_bars([imp])
    assert "0.01" in comparison_grid(["a", "b"], [[None, 0.01], [0.99, None]])


def test_escaping():
    svg = bar_auc([("a<b & c", 0.5)])
    assert "a&lt;b &amp; c" in svg
    ET.fromstring(svg)


def test_empty_series():
    for fn, args in ((bar_auc, ([],)), (dependence_scatter, ([], "x")), (cohort_bars, ([],)), (comparison_grid, ([], []))):
        with pytest.raises(ValidationError):
            fn(*args)


def test_render_dispatch():
    assert render_svg("bar_auc", [("x", 0.5)]) == bar_auc([("x", 0.5)])
    with pytest.raises(UnknownNameError):
        render_svg("pie", [])
