import csv
import json
import logging

import numpy as np
import pytest

from sets_coreset import InvalidInputError, LossSpec, SetFamily, family_cost
from sets_coreset.harness import (
    ExperimentConfig,
    ReportRow,
    approximation_error,
    emit_report,
    gen_two_circles,
    load_grouped_csv,
    read_report,
    run_experiment_i,
    run_experiment_ii,
    summarize,
    write_family_csv,
)
from sets_coreset.harness.cli import main
from sets_coreset.harness.report import FIELDS

MEANS = LossSpec.means()


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# --- loader -------------------------------------------------------------


def test_loader_single_set(tmp_path):
    F = load_grouped_csv(write(tmp_path, "a,0,0\na,1,1\n"))
    assert F.n == 1 and F.sizes.tolist() == [2]


def test_loader_dedup_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        F = load_grouped_csv(write(tmp_path, "a,0,0\na,0,0\n"))
    assert F.sizes.tolist() == [1]
    assert "duplicate" in caplog.text


def test_loader_first_appearance(tmp_path):
    F = load_grouped_csv(write(tmp_path, "set_id,x1,x2\na,0,0\nb,1,1\na,2,2\n"))
    assert F.ids == ["a", "b"]
    assert F.sizes.tolist() == [2, 1]
    np.testing.assert_array_equal(F.sets[0].points, [[0, 0], [2, 2]])


@pytest.mark.parametrize("text,match", [
    ("a,0,0\nb,1,x\n", ":2:"),
    ("a,0,0\nb,1\n", ":2:"),
    ("", "no data"),
])
def test_loader_errors(tmp_path, text, match):
    with pytest.raises(InvalidInputError, match=match):
        load_grouped_csv(write(tmp_path, text))


def test_loader_dimension_argument(tmp_path):
    with pytest.raises(InvalidInputError):
        load_grouped_csv(write(tmp_path, "a,0,0\n"), d=3)


def test_write_read_roundtrip(tmp_path, rng):
    F = SetFamily.from_arrays([rng.normal(size=(m, 3)) for m in (2, 1, 3)], ids=["x", "y", "z"])
    write_family_csv(F, tmp_path / "f.csv")
    G = load_grouped_csv(tmp_path / "f.csv")
    assert G.ids == F.ids
    for a, b in zip(F.sets, G.sets):
        np.testing.assert_array_equal(a.points, b.points)


# --- generators ---------------------------------------------------------


def test_two_circles_geometry():
    F = gen_two_circles(50, 5, 1e6, np.random.default_rng(0))
    centers = np.zeros((55, 2))
    centers[50:, 0] = 1e6
    X = np.stack([s.points for s in F.sets])
    assert np.allclose(np.linalg.norm(X[:50, 0], axis=1), 1, atol=1e-9)
    assert np.allclose(np.linalg.norm(X[:, 1] - centers, axis=1), 30, atol=1e-9)
    assert np.allclose(np.linalg.norm(X[:, 0] - centers, axis=1), 1, atol=1e-9)


def test_two_circles_mean_near_origin():
    F = gen_two_circles(10_000, 1, 1e6, np.random.default_rng(1))
    inner = np.stack([s.points[0] for s in F.sets[:10_000]])
    assert np.linalg.norm(inner.mean(axis=0)) <= 0.05


def test_two_circles_validation():
    with pytest.raises(InvalidInputError):
        gen_two_circles(0, 1)


# --- approximation error ------------------------------------------------


def test_approximation_error():
    F = SetFamily.from_arrays([[[0.0]], [[2.0]]])
    assert approximation_error(F, [[1.0]], [[1.0]], MEANS) == 0
    # base cost 2, test cost 4 (at 0: 0 + 4)
    assert approximation_error(F, [[1.0]], [[0.0]], MEANS) == pytest.approx(1.0)
    G = SetFamily.from_arrays([[[0.0]]])
    with pytest.raises(InvalidInputError):
        approximation_error(G, [[0.0]], [[1.0]], MEANS)


def test_relative_error_symmetric():
    from sets_coreset.harness.experiments import relative_error
    assert relative_error(10, 15) == 0.5
    assert relative_error(10, 5) == 0.5


# --- experiments --------------------------------------------------------


def small_config(**kw):
    base = dict(dataset={"generator": "blobs", "n": 40, "m": 2, "d": 2, "seed": 3}, k=2,
                sigmas=[10, 20], trials=3, seed=11, restarts=2, coreset={"b_sens": 1.0, "b_stop": 4},
                timing=False)
    base.update(kw)
    return ExperimentConfig(**base)


def test_experiment_i_row_count():
    rows = run_experiment_i(small_config())
    assert len(rows) == 3 * 2 * 2 + 3
    assert all(r.approx_error >= 0 and np.isfinite(r.cost) for r in rows)
    assert {r.method for r in rows} == {"full", "coreset", "uniform"}


def test_experiment_i_costs_reproducible():
    cfg = small_config()
    F = cfg.load_family()
    for r in run_experiment_i(cfg, F):
        assert family_cost(F, np.array(r.centers), MEANS) == pytest.approx(r.cost, rel=1e-9)


def test_experiment_i_workers_match_serial():
    a = run_experiment_i(small_config())
    b = run_experiment_i(small_config(workers=3))
    assert [(r.method, r.sigma, r.trial, r.cost) for r in a] == [(r.method, r.sigma, r.trial, r.cost) for r in b]


def test_experiment_i_rejects_bad_sigma():
    with pytest.raises(InvalidInputError):
        run_experiment_i(small_config(sigmas=[100]))


def test_default_sigmas_truncated():
    from sets_coreset.harness.experiments import resolve_sigmas
    assert resolve_sigmas(small_config(sigmas=None), 100) == [20, 30, 40, 50]
    assert resolve_sigmas(small_config(sigmas=None), 300) == list(range(20, 141, 10))


def test_experiment_ii(caplog):
    cfg = small_config(mode="experiment-ii", k=1, prefixes=[5, 10], trials=4,
                       dataset={"generator": "planted", "n": 20, "m": 2, "d": 2, "seed": 0})
    with caplog.at_level(logging.WARNING):
        rows = run_experiment_ii(cfg)
    assert "clamped" in caplog.text
    by_key = {}
    for r in rows:
        by_key.setdefault((r.trial, r.sigma), {})[r.method] = r.cost
    assert len(by_key) == 8
    for costs in by_key.values():
        assert set(costs) == {"full", "coreset_div10", "coreset_div5"}
        assert costs["full"] <= min(costs["coreset_div10"], costs["coreset_div5"]) * (1 + 1e-9)


def test_experiment_ii_budget_skip(caplog):
    cfg = small_config(mode="experiment-ii", k=2, prefixes=[20], trials=1,
                       dataset={"generator": "blobs", "n": 20, "m": 2, "d": 2, "seed": 0})
    with caplog.at_level(logging.WARNING):
        rows = run_experiment_ii(cfg)
    assert rows == [] and "skipped" in caplog.text


# --- reports ------------------------------------------------------------


def sample_rows():
    return [
        ReportRow("uniform", 20, 1, 3.5, 0.25, 0.01, 7, [[0.0, 1.0]]),
        ReportRow("coreset", 20, 1, 3.1, 0.1 + 0.2, 0.02, 7, [[0.5, 1.0]]),
        ReportRow("full", 40, 0, 1 / 3, 0.0, 0.5, 5, [[0.25, 0.0]]),
        ReportRow("coreset", 10, 0, 2e-17, 1e300, 0.0, 5),
    ]


def test_csv_header_only(tmp_path):
    emit_report([], tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == ",".join(FIELDS) + "\n"


def test_csv_roundtrip_and_order(tmp_path):
    emit_report(sample_rows(), tmp_path / "r.csv")
    back = read_report(tmp_path / "r.csv")
    assert back == sorted(sample_rows(), key=ReportRow.sort_key)
    assert [(r.trial, r.sigma, r.method) for r in back] == [
        (0, 10, "coreset"), (0, 40, "full"), (1, 20, "coreset"), (1, 20, "uniform")]


def test_json_report(tmp_path):
    emit_report(sample_rows(), tmp_path / "r.json", "json")
    payload = json.loads((tmp_path / "r.json").read_text())
    assert all(set(FIELDS) <= set(obj) for obj in payload)
    assert read_report(tmp_path / "r.json") == sorted(sample_rows(), key=ReportRow.sort_key)


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path / "r.x", "xml")


def test_deterministic_csv(tmp_path):
    for name in ("a.csv", "b.csv"):
        emit_report(run_experiment_i(small_config()), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_summarize():
    rows = [ReportRow("full", 40, t, 1.0, 0.0, 2.0, 0) for t in range(2)]
    rows += [ReportRow("coreset", 10, t, 1.0, e, 1.0, 0) for t, e in enumerate((0.1, 0.3))]
    s = {x["method"]: x for x in summarize(rows)}
    assert s["coreset"]["mean_error"] == pytest.approx(0.2)
    assert s["coreset"]["stderr"] == pytest.approx(0.1)
    assert s["coreset"]["relative_time"] == pytest.approx(0.5)


# --- CLI ----------------------------------------------------------------


def test_cli_pipeline(tmp_path, capsys):
    fam = tmp_path / "fam.csv"
    assert main(["generate", "--n1", "60", "--n2", "4", "--seed", "1", "--out", str(fam)]) == 0
    F = load_grouped_csv(fam)
    assert F.n == 64

    core = tmp_path / "core.csv"
    assert main(["coreset", str(fam), "--k", "2", "--sigma", "20", "--b-sens", "1", "--b-stop", "4",
                 "--out", str(core)]) == 0
    with core.open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["set_id", "weight", "multiplicity"]
    assert sum(int(r["multiplicity"]) for r in rows) == 20

    out = tmp_path / "sol.json"
    assert main(["solve", str(fam), "--coreset", str(core), "--k", "2", "--restarts", "2",
                 "--out", str(out)]) == 0
    sol = json.loads(out.read_text())
    assert np.array(sol["centers"]).shape == (2, 2)
    assert sol["full_cost"] == pytest.approx(family_cost(F, np.array(sol["centers"]), MEANS), rel=1e-9)
    assert sol["iterations"] <= 12

    assert main(["coreset", str(fam), "--uniform", "--sigma", "5"]) == 0
    assert capsys.readouterr().out.startswith("set_id,weight,multiplicity")


def test_cli_oracle(tmp_path, capsys, monkeypatch):
    fam = write(tmp_path, "a,0\na,100\nb,1\nb,-100\n")
    assert main(["oracle", str(fam)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["centers"] == [[0.5]] and out["cost"] == pytest.approx(0.5)

    monkeypatch.setenv("SETS_CORESET_BUDGET", "2")
    assert main(["oracle", str(fam)]) == 2
    assert "SETS_CORESET_BUDGET" in capsys.readouterr().err

    monkeypatch.delenv("SETS_CORESET_BUDGET")
    assert main(["oracle", str(fam), "--loss", "median"]) == 2


def test_cli_experiment(tmp_path, capsys):
    cfg = {"dataset": {"generator": "blobs", "n": 30, "m": 2, "d": 2, "seed": 1}, "k": 2,
           "sigmas": [10], "coreset": {"b_sens": 1.0, "b_stop": 4}, "timing": False}
    path = write(tmp_path, json.dumps(cfg), "cfg.json")
    out = tmp_path / "rep.json"
    assert main(["experiment", str(path), "--trials", "2", "--restarts", "2", "--format", "json",
                 "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 2 * 2 + 2
    assert "coreset" in capsys.readouterr().out


def test_cli_bad_input(tmp_path, capsys):
    fam = write(tmp_path, "a,0\nb,x\n")
    assert main(["solve", str(fam)]) == 2
    assert ":2:" in capsys.readouterr().err
