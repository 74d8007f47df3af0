import json

import pytest

from lspn import bench
from lspn.bench import ExperimentSpec, TrialReport, format_csv, run_experiment, summarize


def spec(**kw):
    base = {"solver": "brute", "points": [(20, 3, 0.0)], "trials": 2, "master_seed": 3,
            "record_timing": False}
    base.update(kw)
    return ExperimentSpec(**base)


def test_single_point_brute():
    reports = run_experiment(spec(trials=1))
    assert len(reports) == 1 and reports[0].success and reports[0].status == "ok"


def test_csv_header_and_determinism():
    a = format_csv(run_experiment(spec()))
    b = format_csv(run_experiment(spec()))
    assert a == b
    assert a.splitlines()[0] == "solver,n,k,eta,seed,trial,success,wall_ms,samples,iterations,status,recovered"


def test_workers_do_not_change_output():
    s = spec(points=[(20, 3, 0.0), (16, 2, 0.05)], trials=3)
    assert format_csv(run_experiment(s)) == format_csv(run_experiment(spec(
        points=[(20, 3, 0.0), (16, 2, 0.05)], trials=3, workers=2)))


def test_grid_expansion_and_validation():
    s = ExperimentSpec.from_dict({"solver": "low", "grid": {"n": [64], "k": [2], "eta": [0.02, 0.04]}})
    assert s.points == [(64, 2, 0.02), (64, 2, 0.04)]
    with pytest.raises(ValueError):
        ExperimentSpec(solver="nope", points=[(1, 1, 0.0)])
    with pytest.raises(ValueError):
        ExperimentSpec(solver="low", points=[])
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({"solver": "low", "points": [[8, 1, 0.0]], "bogus": 1})


def test_errors_are_recorded_not_raised():
    reports = run_experiment(spec(solver="high", points=[(20, 5, 0.1)], trials=1))
    assert reports[0].status == "error" and not reports[0].success


def test_seeds_depend_on_point_and_trial():
    reports = run_experiment(spec(points=[(20, 3, 0.0), (20, 3, 0.0)], trials=2))
    assert len({r.seed for r in reports}) == 4


def row(success, status="ok", eta=0.04, wall=10):
    return TrialReport("low", 64, 2, eta, 1, 0, success, wall, 100, 1, status, ())


def test_summarize():
    rs = [row(True)] * 18 + [row(False, "capped")] * 2
    (s,) = summarize(rs)
    assert s["rate"] == pytest.approx(0.9) and s["trials"] == 20
    assert summarize([]) == []
    two = summarize([row(True), row(False, eta=0.02)])
    assert sorted(x["rate"] for x in two) == [0.0, 1.0]


def test_aggregation_over_eta_grid():
    s = ExperimentSpec.from_dict({"solver": "low", "grid": {"n": [128], "k": [2], "eta": [0.02, 0.04]},
                                  "trials": 2, "record_timing": False})
    reports = run_experiment(s)
    assert all(r.status == "ok" for r in reports)
    out = summarize(reports)
    assert [x["eta"] for x in out] == [0.02, 0.04]
    assert all(0.0 <= x["rate"] <= 1.0 for x in out)


def test_spec_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"solver": "brute", "points": [[20, 3, 0.0]], "trials": 1}))
    assert bench.load_spec(p).points == [(20, 3, 0.0)]
