import csv
import io
import json
import math

import numpy as np
import pytest

from lambda_ecs import cli
from lambda_ecs.analytic import concurrence_pure, evolve_amplitudes
from lambda_ecs.cli import RunConfig, build_parser, config_from_args, main
from lambda_ecs.core import CoherentPair
from lambda_ecs.exceptions import ConfigError


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _table(text):
    lines = text.splitlines()
    assert lines[0].startswith("# schema: lambda-ecs ")
    reader = csv.reader(io.StringIO("\n".join(lines[1:])))
    header = next(reader)
    return header, [[float(x) for x in row] for row in reader]


def _cfg(*argv):
    return config_from_args(build_parser().parse_args(list(argv)))


def test_fig2_defaults_and_structure(capsys):
    code, out, _ = _run(capsys, "fig2")
    assert code == 0
    assert out.splitlines()[0].startswith("# schema: lambda-ecs fig2 v1")
    header, rows = _table(out)
    assert header == ["t", "C_paper", "C_wootters"]
    assert len(rows) == 400
    t = np.array([r[0] for r in rows])
    c = np.array([r[1] for r in rows])
    assert t[0] == 0 and c[0] == 0
    assert t[-1] == pytest.approx(4 * math.pi / 2.5)
    assert np.nanmax(np.abs(c - np.array([r[2] for r in rows]))) < 1e-8
    # zeros at t = 2 n pi / g_eff, within one grid step
    dt = t[1] - t[0]
    for n in (1, 2):
        near = np.abs(t - 2 * n * math.pi / 2.5) <= dt
        assert c[near].min() < 0.05
    peak = int(np.argmax(c))
    want = concurrence_pure(evolve_amplitudes(CoherentPair(1, 1.5), 2.5, t[peak]), 1).concurrence
    assert rows[peak][2] == pytest.approx(want, abs=1e-8)


def test_fig2_period(capsys):
    g = 2.5
    period = 2 * math.pi / g
    cfg = RunConfig("fig2", t_end=2 * period, n_points=201, oracle=False)
    rows = cli.cmd_fig2(cfg).rows
    c = [r[1] for r in rows]
    for i in range(100):
        assert c[i] == pytest.approx(c[i + 100], abs=1e-12)


def test_fig3_defaults(capsys):
    code, out, _ = _run(capsys, "fig3", "--points", "51")
    assert code == 0
    header, rows = _table(out)
    assert header == ["t", "C_k0.1", "C_k0.2", "C_k0.5"]
    assert rows[0] == [0.0, 0.0, 0.0, 0.0]
    assert rows[-1][0] == 10.0


def test_fig3_with_oracle_columns(capsys):
    code, out, _ = _run(
        capsys, "fig3", "--points", "3", "--t-max", "1", "--kappas", "0.3",
        "--alpha", "0.5", "--beta", "0.7", "--n-max", "12", "--oracle", "on",
    )
    assert code == 0
    header, rows = _table(out)
    assert header == ["t", "C_k0.3", "O_k0.3"]
    for r in rows:
        assert r[2] == pytest.approx(r[1], abs=1e-5)


def test_sweep_swap_symmetry_and_limits(capsys):
    code, out, _ = _run(
        capsys, "sweep", "--alphas", "0.5,1.2", "--betas", "0.5,1.2", "--kappas", "0,0.2", "--times", "0.3:2.7:4",
    )
    assert code == 0
    header, rows = _table(out)
    assert header == cli.SWEEP_COLUMNS
    assert len(rows) == 2 * 2 * 1 * 2 * 4
    by_key = {tuple(r[:5]): r for r in rows}
    for (a, b, g, k, t), r in by_key.items():
        swapped = by_key[(b, a, g, k, t)]
        assert r[5] == pytest.approx(swapped[5], abs=1e-12)
        assert r[6] == pytest.approx(swapped[6], abs=1e-12)
        if k == 0:
            assert r[6] == pytest.approx(r[5], abs=1e-12)
            assert r[7] == 1.0
        assert r[9] + r[10] == pytest.approx(1, abs=1e-12)
    assert [tuple(r[:5]) for r in rows] == sorted(by_key)


def test_single_point_sweep_matches_fig2():
    t = 0.9
    fig2 = cli.cmd_fig2(RunConfig("fig2", t_start=t, t_end=t + 1, n_points=2, oracle=False)).rows[0]
    sweep = cli.cmd_sweep(_cfg("sweep", "--times", str(t)))
    assert len(sweep.rows) == 1
    assert sweep.rows[0][5] == fig2[1]


def test_sweep_parallel_matches_serial(monkeypatch):
    cfg = _cfg("sweep", "--alphas", "0.2:1.4:5", "--times", "0:3:20")
    serial = cli.cmd_sweep(cfg).rows
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    assert cli.cmd_sweep(cfg).rows == serial
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    with pytest.raises(ConfigError):
        cli.cmd_sweep(cfg)


def test_grid_cap(capsys):
    code, _, err = _run(capsys, "sweep", "--times", "0:1:50", "--alphas", "0:1:50", "--max-rows", "100")
    assert code == 1
    assert "cap" in err


def test_json_output(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out, _ = _run(capsys, "fig2", "--points", "5", "--format", "json", "--out", str(path))
    assert code == 0 and out == ""
    doc = json.loads(path.read_text())
    assert doc["schema"] == "lambda-ecs fig2 v1"
    assert doc["columns"] == ["t", "C_paper", "C_wootters"]
    assert len(doc["rows"]) == 5


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("alpha = 0.7\nbeta = 0.4\npoints = 12\n")
    cfg = _cfg("fig2", "--config", str(conf), "--beta", "0.9")
    assert (cfg.alpha, cfg.beta, cfg.n_points) == (0.7, 0.9, 12)


@pytest.mark.parametrize(
    "argv",
    [
        ["fig2", "--points", "1"],
        ["fig2", "--t-max", "-1"],
        ["fig3", "--kappas", "0.1,-0.2"],
        ["fig2", "--config", "/nonexistent/file.cfg"],
        ["sweep", "--times", "a:b:c"],
    ],
)
def test_bad_config_exit_code(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1
    assert "config error" in err


def test_unknown_config_key(capsys, tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("colour = blue\n")
    assert _run(capsys, "fig2", "--config", str(conf))[0] == 1


def test_verify_reports_truncation(capsys):
    code, out, err = _run(capsys, "verify", "--n-max", "3", "--alpha", "1.5")
    assert code == 3
    assert "truncation failure" in out
    assert "error" in err


def test_minus_sign_changes_outcome():
    plus = cli.cmd_fig2(RunConfig("fig2", t_end=1.0, n_points=5)).rows
    minus = cli.cmd_fig2(RunConfig("fig2", t_end=1.0, n_points=5, sign="minus")).rows
    assert plus[2][1] != minus[2][1]


@pytest.mark.slow
def test_verify_defaults_pass(capsys):
    code, out, _ = _run(capsys, "verify")
    assert code == 0, out
    header, *rows = list(csv.reader(io.StringIO("\n".join(out.splitlines()[1:]))))
    assert header == ["name", "status", "measured", "threshold", "detail"]
    assert {r[0] for r in rows} == {
        "su2_disentangle", "pure_evolution", "eta_extraction", "lossy_state_fidelity",
        "wootters_pure", "rwa_trend", "adiabatic_scaling",
    }
    assert all(r[1] == "pass" for r in rows)
