import json

import numpy as np
import pytest

from scfs.cli import RunSpec, convergence_trace, main, run
from scfs.data import generate_planted, read_report, read_trace_csv, write_dataset_csv


@pytest.fixture
def planted(tmp_path):
    ds = generate_planted(60, 5, 45, 3, 8.0, seed=0)
    path = tmp_path / "planted.csv"
    write_dataset_csv(ds, path)
    return path, ds


def test_run_single_cell(planted, tmp_path):
    path, _ = planted
    out = tmp_path / "r.json"
    rep = run(RunSpec(data=str(path), out=str(out), alpha_grid=(1.0,), beta_grid=(100.0,),
                      k_list=(5,), trials=1))
    assert len(rep.cells) == 1 and len(rep.best) == 1
    assert rep.cells[0].evaluations[5]["report"].trials == 1
    assert read_report(out) == rep


def test_run_default_grid_recovers_planted(planted, tmp_path, monkeypatch):
    path, ds = planted
    monkeypatch.setenv("SCFS_THREADS", "4")
    rep = run(RunSpec(data=str(path), k_list=(5,), trials=5))
    assert len(rep.cells) == 25
    assert all(set(c.evaluations) == {5} for c in rep.cells)
    assert all(c.config.alpha == c.alpha and c.config.beta == c.beta for c in rep.cells)
    best = rep.best[0]
    assert len(set(best["features"]) & set(ds.meta["informative"])) >= 4


def test_run_deterministic_files(planted, tmp_path, monkeypatch):
    path, _ = planted
    outs = []
    for i, threads in enumerate(["0", "3"]):
        monkeypatch.setenv("SCFS_THREADS", threads)
        out = tmp_path / f"r{i}.json"
        run(RunSpec(data=str(path), out=str(out), alpha_grid=(0.01, 1.0), beta_grid=(1.0, 100.0),
                    k_list=(5, 10), trials=3, record_timings=False))
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_run_best_cell_ordering(planted):
    path, _ = planted
    rep = run(RunSpec(data=str(path), alpha_grid=(1e-4, 1.0), beta_grid=(1e-4, 100.0),
                      k_list=(5,), trials=3))
    key = lambda c: (-c.evaluations[5]["report"].acc_mean, -c.evaluations[5]["report"].nmi_mean,
                     c.alpha, c.beta)
    top = min(rep.cells, key=key)
    assert (rep.best[0]["alpha"], rep.best[0]["beta"]) == (top.alpha, top.beta)


def test_run_rejects_k_above_p(planted):
    path, _ = planted
    with pytest.raises(Exception, match="exceed"):
        run(RunSpec(data=str(path), k_list=(50, 100)))


def test_trace_single_iteration(planted, tmp_path):
    path, _ = planted
    out = tmp_path / "t.csv"
    convergence_trace(RunSpec(data=str(path), max_iter=1), 1.0, 100.0, path=out)
    assert len(read_trace_csv(out)) == 1


def test_trace_stopping_rule_and_monotone(planted, tmp_path):
    path, _ = planted
    out = tmp_path / "t.csv"
    res = convergence_trace(RunSpec(data=str(path), out=str(out)), 1.0, 100.0)
    trace = read_trace_csv(out)
    assert res.converged
    prev, last = trace[-2:]
    assert (prev - last) / last < 1e-5
    pen = np.array(res.penalized_trace)
    assert np.all(pen[1:] <= pen[:-1] * (1 + 1e-8))


def test_main_end_to_end(tmp_path, capsys):
    data = tmp_path / "s.csv"
    assert main(["synth", "--out", str(data), "--seed", "2"]) == 0
    meta = json.loads(data.with_suffix(".meta.json").read_text())
    assert len(meta["informative"]) == 5
    out = tmp_path / "r.json"
    assert main(["run", "--data", str(data), "--alpha-grid", "1", "--beta-grid", "100,10000",
                 "--k-list", "5,10", "--trials", "2", "--out", str(out)]) == 0
    rep = read_report(out)
    assert len(rep.cells) == 2 and rep.feature_counts == [5, 10]
    trace = tmp_path / "t.csv"
    assert main(["trace", "--data", str(data), "--alpha", "1", "--beta", "100",
                 "--out", str(trace)]) == 0
    assert trace.read_text().startswith("iteration,objective\n")


def test_main_error_exit_status(tmp_path, capsys):
    assert main(["run", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o.json")]) == 1
    assert "error" in capsys.readouterr().err
    data = tmp_path / "s.csv"
    main(["synth", "--out", str(data)])
    assert main(["trace", "--data", str(data), "--alpha-grid", "1,2", "--beta-grid", "1",
                 "--out", str(tmp_path / "t.csv")]) == 1


def test_failed_run_flushes_partial_report(planted, tmp_path, monkeypatch):
    import scfs.cli as cli
    from scfs.errors import SolverError

    path, _ = planted
    real = cli.fit

    def failing(X, cfg, **kw):
        if cfg.beta == 100.0:
            raise SolverError("boom", config=cfg)
        return real(X, cfg, **kw)

    monkeypatch.setattr(cli, "fit", failing)
    out = tmp_path / "partial.json"
    with pytest.raises(SolverError, match="beta=100.0"):
        run(RunSpec(data=str(path), out=str(out), alpha_grid=(1.0,), beta_grid=(1.0, 100.0),
                    k_list=(5,), trials=1))
    rep = read_report(out)
    assert len(rep.cells) == 1 and "boom" in rep.error
