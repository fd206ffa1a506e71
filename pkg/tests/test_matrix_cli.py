import csv
import pytest

from bcil.cli import main, parse_grid, parse_task, UsageError
from bcil.episode import load_episode
from bcil.errors import Malformed
from bcil.matrix import ExperimentSpec, load_spec, run_matrix

TINY = """
[experiment]
task = draw
seed = 7
demo_trials = 1
eval_trials = 1
layers = 1
units = 4
window = 20
batch = 4
epochs = 2
eval_duration = 1.0

[train_grid]
angle_deg = 20

[eval_grid]
angle_deg = 20, 60
shift = 0
"""


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("matrix")
    (root / "tiny.ini").write_text(TINY)
    spec = load_spec(root / "tiny.ini")
    return spec, run_matrix(spec, root / "a"), root


def test_spec_parsing(tiny_run):
    spec, _, _ = tiny_run
    assert spec.layers == (1,) and spec.epochs == 2 and spec.eval_duration == 1.0
    assert spec.train_cells() == [{"angle_deg": 20.0, "shift": 0.0}]
    assert len(spec.eval_cells()) == 2


def test_spec_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[experiment]\ntask = draw\nbogus = 1\n[train_grid]\nangle_deg = 0\n")
    with pytest.raises(Malformed):
        load_spec(p)
    p.write_text("[experiment]\ntask = draw\n[train_grid]\nangle_deg = 0\n[eval_grid]\nangle_deg = 10\n")
    with pytest.raises(Malformed):
        load_spec(p)
    with pytest.raises(Malformed):
        load_spec(tmp_path / "missing.ini")


def test_five_model_rows_with_dimensions(tiny_run):
    _, report, root = tiny_run
    rows = _read(root / "a" / "success_table.csv")
    header, body = rows[0], rows[1:]
    assert [(r[0], r[2], r[3], r[4]) for r in body] == [
        ("S2S-w/o-AR", "9", "9", "no"), ("S2S-AR", "9", "9", "yes"), ("S2M-w/o-AR", "9", "9", "no"),
        ("SM2SM-w/o-AR", "18", "18", "no"), ("SM2SM-AR", "18", "18", "yes")]
    assert "shift=0/angle_deg=20*" in header and "shift=0/angle_deg=60" in header
    assert header[-3:] == ["learned", "unlearned", "total"]
    assert all(r[-1].endswith("/2)") for r in body)
    assert len(report.trials) == 10


def test_side_tables(tiny_run):
    _, _, root = tiny_run
    loss = _read(root / "a" / "loss_curves.csv")
    assert len(loss) == 3 and len(loss[0]) == 6
    models = _read(root / "a" / "models.csv")
    ol = {r[0]: r[6] for r in models[1:]}
    assert ol["S2M-w/o-AR"] == ""
    assert all(ol[k] != "" for k in ("S2S-w/o-AR", "S2S-AR", "SM2SM-w/o-AR", "SM2SM-AR"))
    assert len(list((root / "a" / "models").glob("*.bcil"))) == 5
    assert len(_read(root / "a" / "trials.csv")) == 11


def test_matrix_is_reproducible(tiny_run):
    spec, _, root = tiny_run
    run_matrix(spec, root / "b")
    for name in ("success_table.csv", "loss_curves.csv", "models.csv", "trials.csv"):
        assert (root / "a" / name).read_bytes() == (root / "b" / name).read_bytes()


def test_training_grid_only_spec():
    spec = ExperimentSpec("draw", {"angle_deg": [0.0, 20.0]}, {})
    assert spec.eval_cells() == spec.train_cells()
    assert len(spec.model_configs()) == 5
    assert [c.epochs for c in ExperimentSpec("draw", {"angle_deg": [0.0]}, {}, epochs=3,
                                             epochs_ar=9).model_configs()] == [3, 9, 3, 3, 9]


# -- command line ----------------------------------------------------------------

def test_parsers():
    t = parse_task("draw:angle_deg=30,shift=0.05", 2.0)
    assert t.params == {"angle_deg": 30.0, "shift": 0.05} and t.duration == 2.0
    assert parse_task("write:letter=B").params["letter"] == "B"
    assert parse_grid("a=1,2;b=x") == [{"a": 1.0, "b": "x"}, {"a": 2.0, "b": "x"}]
    for bad in ("draw:angle", "draw:tilt=3", "juggle"):
        with pytest.raises(UsageError):
            parse_task(bad)


def test_cli_pipeline(tmp_path, capsys):
    d = tmp_path / "demos"
    assert main(["demo", "--task", "draw", "--grid", "angle_deg=0,20", "--duration", "1",
                 "--out", str(d)]) == 0
    assert len(list(d.glob("*.csv"))) == 2
    m = tmp_path / "m.bcil"
    assert main(["train", "--variant", "SM2SM", "--ar", "--layers", "1", "--units", "4",
                 "--window", "10", "--batch", "4", "--epochs", "2", "--data", str(d), "--out", str(m)]) == 0
    assert len(_read(str(m) + ".loss.csv")) == 3
    run = tmp_path / "run.csv"
    assert main(["run", "--model", str(m), "--task", "draw:angle_deg=20", "--duration", "1",
                 "--out", str(run)]) == 0
    assert load_episode(run).meta["variant"] == "SM2SM"
    capsys.readouterr()
    assert main(["eval", "--episode", str(run)]) == 0
    metrics = dict(r for r in csv.reader(capsys.readouterr().out.splitlines()))
    assert metrics["success"] in ("0", "1") and "arc" in metrics
    svg = tmp_path / "loss.svg"
    assert main(["plot", "--csv", str(m) + ".loss.csv", "--out", str(svg), "--log-y"]) == 0
    assert svg.read_text().startswith("<svg")


def test_cli_exit_codes(tmp_path, draw_demo):
    from bcil.episode import save_episode
    demo = tmp_path / "demo.csv"
    save_episode(draw_demo, demo)
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
    assert main(["train", "--variant", "S2M", "--ar", "--data", str(demo), "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--model", str(tmp_path / "none.bcil"), "--task", "draw",
                 "--out", str(tmp_path / "r.csv")]) == 3
    assert main(["eval", "--episode", str(demo), "--task", "erase"]) == 3
    assert main(["plot", "--csv", str(tmp_path / "nothing.csv"), "--out", str(tmp_path / "p.svg")]) == 3

    m = tmp_path / "m.bcil"
    assert main(["train", "--variant", "S2S", "--layers", "1", "--units", "3", "--window", "10",
                 "--batch", "2", "--epochs", "1", "--data", str(demo), "--out", str(m)]) == 0
    assert main(["eval", "--episode", str(m) + ".loss.csv"]) == 3


def test_cli_numeric_failure_exit_code(tmp_path, monkeypatch, draw_demo):
    import bcil.cli
    from bcil.episode import save_episode
    from bcil.errors import NonFinite

    def diverge(*a, **k):
        raise NonFinite("autonomous run diverged", 17)

    demo = tmp_path / "demo.csv"
    save_episode(draw_demo, demo)
    m = tmp_path / "m.bcil"
    assert main(["train", "--variant", "S2S", "--layers", "1", "--units", "3", "--window", "10",
                 "--batch", "2", "--epochs", "1", "--data", str(demo), "--out", str(m)]) == 0
    monkeypatch.setattr(bcil.cli, "run_autonomous", diverge)
    assert main(["run", "--model", str(m), "--task", "draw", "--out", str(tmp_path / "r.csv")]) == 4
