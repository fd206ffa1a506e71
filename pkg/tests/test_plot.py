import pytest

from bcil.errors import Malformed
from bcil.plot import emit_plot, read_series, render_svg, unit_of


def _csv(tmp_path, text):
    p = tmp_path / "d.csv"
    p.write_text(text)
    return p


def test_units():
    assert unit_of("t_ms") == "ms"
    assert unit_of("s_th1") == "rad" and unit_of("m_dth2") == "rad/s" and unit_of("s_tau3") == "N·m"
    assert unit_of("mystery") == "-"


def test_read_series_skips_blanks(tmp_path):
    x, xs, series = read_series(_csv(tmp_path, "epoch,a,b\n1,0.5,\n2,0.25,3\n"))
    assert x == "epoch" and xs == [1.0, 2.0]
    assert series == {"a": [(1.0, 0.5), (2.0, 0.25)], "b": [(2.0, 3.0)]}


@pytest.mark.parametrize("text", ["", "x\n1\n", "x,a\n1,\n", "x,a\n1,2,3\n", "x,a\nq,1\n", "x,a\n1,q\n"])
def test_malformed_inputs(tmp_path, text):
    with pytest.raises(Malformed):
        read_series(_csv(tmp_path, text))


def test_svg_is_deterministic_and_labelled(tmp_path):
    p = _csv(tmp_path, "t_ms,s_th1,m_th1\n0,0,0.1\n1,0.2,0.3\n2,0.1,0.2\n")
    emit_plot(p, tmp_path / "a.svg", title="a < b")
    emit_plot(p, tmp_path / "b.svg", title="a < b")
    svg = (tmp_path / "a.svg").read_text()
    assert svg == (tmp_path / "b.svg").read_text()
    assert svg.count("<polyline") == 2
    assert "t_ms [ms]" in svg and "[rad]" in svg and "a &lt; b" in svg


def test_column_selection_and_log_scale(tmp_path):
    p = _csv(tmp_path, "epoch,loss,other\n1,1,5\n2,0.01,6\n")
    emit_plot(p, tmp_path / "a.svg", columns=["loss"], log_y=True)
    svg = (tmp_path / "a.svg").read_text()
    assert svg.count("<polyline") == 1 and "log10" in svg
    with pytest.raises(Malformed):
        emit_plot(p, tmp_path / "b.svg", columns=["nope"])
    with pytest.raises(Malformed):
        render_svg("x", {"a": [(0.0, -1.0)]}, log_y=True)


def test_flat_series_renders():
    assert "<polyline" in render_svg("x", {"a": [(1.0, 2.0)]})
