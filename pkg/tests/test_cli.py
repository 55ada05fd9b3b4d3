import json
from pathlib import Path

import numpy as np
import pytest

from lindjump import __version__
from lindjump.cli import (
    CSV_HEADER, ConfigError, RunConfig, config_to_text, emit_csv, emit_wigner_json,
    figure_config, main, parse_config, read_csv, read_wigner_json, simulate, wigner_grid,
)
from lindjump.gaussian import WignerGrid
from lindjump.model import example1_reference

MINIMAL = "model=position-measurement\nmethod=lindblad\nt_end=10\n"


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.dt, cfg.hbar, cfg.zeta, cfg.z0, cfg.seed) == (1e-3, 1.0, 2.0, (2.0, 0.0), 0)


@pytest.mark.parametrize("text, needle", [
    (MINIMAL + "gamma=-1\n", "gamma"),
    (MINIMAL + "colour=red\n", "colour"),
    ("model=position-measurement\nmethod=lindblad\n", "t_end"),
    (MINIMAL + "dt=0.3\n", "dt"),
    (MINIMAL + "z0=1\n", "z0"),
])
def test_config_errors_name_the_key(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(text)


def test_error_names_line():
    with pytest.raises(ConfigError, match="line 4"):
        parse_config(MINIMAL + "gamma=-1  # bad\n")


def test_config_round_trip():
    cfg = figure_config(1)
    assert parse_config(config_to_text(cfg)) == cfg
    custom = parse_config("model=custom\nmethod=sse\nt_end=1\ngradL=0.3,0.1j\nL0=0.5+0.2j\nH2=1,0.1,2\n")
    assert parse_config(config_to_text(custom)) == custom


def test_empty_record_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    cols = {k: [] for k in CSV_HEADER.split(",")}
    emit_csv(cols, path)
    assert path.read_text() == CSV_HEADER + "\n"


def test_lindblad_csv_golden(tmp_path):
    cfg = parse_config(MINIMAL + "output_stride=100\n")
    path = tmp_path / "run.csv"
    rec = simulate(cfg)
    emit_csv(rec, path, ["hello"])
    meta, cols = read_csv(path)
    assert meta == ["hello"]
    ref = example1_reference(cols["t"])
    assert cols["t"].size == 101
    assert np.abs(cols["var_x"] - ref["var_x"]).max() < 1e-7
    assert np.abs(cols["var_p"] - ref["var_p"]).max() < 1e-7
    # repr round trip is exact
    cov = rec.covariances(1.0)
    assert np.array_equal(cols["var_x"], cov[:, 0, 0])
    assert np.array_equal(cols["x_mean"], rec.centres[:, 0])


def test_wigner_json_round_trip(tmp_path):
    grid = WignerGrid(-1.0, 1.0, -2.0, 2.0, np.array([[0.1, -0.2], [1 / 3, 4e-17]]))
    path = tmp_path / "w.json"
    emit_wigner_json(grid, path, ["m"])
    back, meta = read_wigner_json(path)
    assert meta == ["m"]
    assert np.array_equal(back.values, grid.values)
    assert (back.q_min, back.q_max, back.p_min, back.p_max) == (-1.0, 1.0, -2.0, 2.0)
    assert set(json.loads(path.read_text())) >= {"q_min", "q_max", "p_min", "p_max", "nq", "np", "values"}


def test_gaussian_grid_peak_at_centre():
    cfg = parse_config("model=position-measurement\nmethod=lindblad\nt_end=1\nwigner_n=65\n"
                       "wigner_time=0\nz0=0.7,-0.4\n")
    g = wigner_grid(cfg)
    i, j = np.unravel_index(np.argmax(g.values), g.values.shape)
    q = np.linspace(g.q_min, g.q_max, g.nq)
    p = np.linspace(g.p_min, g.p_max, g.np)
    dq, dp = q[1] - q[0], p[1] - p[0]
    assert abs(q[j] - 0.7) <= dq / 2 + 1e-12 and abs(p[i] + 0.4) <= dp / 2 + 1e-12


def test_post_jump_snapshot_negative():
    base = "model=damped-oscillator\nmethod=jump-b\nt_end=10\nwigner_n=65\nwigner_jump=0\n"
    for seed in range(50):
        cfg = parse_config(base + f"seed={seed}\n")
        if simulate(cfg).jumps:
            break
    assert wigner_grid(cfg).values.min() < 0


def test_every_method_runs_and_agrees(tmp_path):
    base = "model=damped-oscillator\nt_end=2\ndt=1e-3\nn_max=48\noutput_stride=500\nseed=1\n"
    rec = {m: simulate(parse_config(base + f"method={m}\n"))
           for m in ("lindblad", "fock-lindblad", "sse", "fock-sse", "jump-a", "jump-b", "fock-jump")}
    for m, r in rec.items():
        path = tmp_path / f"{m}.csv"
        emit_csv(r, path)
        assert read_csv(path)[1]["t"][-1] == 2.0
    lin = read_csv(tmp_path / "lindblad.csv")[1]
    fock = read_csv(tmp_path / "fock-lindblad.csv")[1]
    assert np.abs(lin["var_x"] - fock["var_x"]).max() < 1e-6


def _write(tmp_path, text):
    path = tmp_path / "c.cfg"
    path.write_text(text)
    return str(path)


def test_main_exit_codes_and_metadata(tmp_path, capsys):
    cfg = _write(tmp_path, MINIMAL)
    out = tmp_path / "a.csv"
    assert main(["simulate", cfg, "--out", str(out), "--set", "output_stride=1000"]) == 0
    text = out.read_text()
    assert f"# lindjump {__version__}" in text
    for line in config_to_text(parse_config(MINIMAL + f"output_stride=1000\nout={out}\n")).splitlines():
        assert f"# {line}\n" in text
    assert main(["simulate", cfg, "--set", "gamma=-1"]) == 2
    assert "gamma" in capsys.readouterr().err
    assert main(["simulate", str(tmp_path / "missing.cfg")]) == 2
    assert main(["ensemble", cfg, "--set", "method=fock-sse"]) == 2
    assert main(["validate", "--only", "99"]) == 2
    assert main(["validate", "--only", "1,3"]) == 0


def test_outputs_byte_identical(tmp_path):
    cfg = _write(tmp_path, "model=damped-oscillator\nmethod=jump-b\nt_end=3\nn_traj=6\noutput_stride=500\n")
    outs = []
    for k, workers in enumerate((1, 1, 2)):
        path = tmp_path / f"o{k}.csv"
        assert main(["ensemble", cfg, "--out", str(path), "--set", f"workers={workers}"]) == 0
        # the workers key itself appears in the metadata; compare everything else
        outs.append([l for l in path.read_text().splitlines() if not l.startswith(("# workers=", "# out="))])
    assert outs[0] == outs[1] == outs[2]
    w = [tmp_path / f"w{k}.json" for k in range(2)]
    for path in w:
        assert main(["wigner", cfg, "--out", str(path), "--set", "wigner_n=33"]) == 0
    a, b = (json.loads(p.read_text()) for p in w)
    assert a["values"] == b["values"]


@pytest.mark.parametrize("number", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10])
def test_reproduce_fig(tmp_path, number, capsys):
    assert main(["reproduce-fig", str(number), "--out", str(tmp_path), "--grid", "33"]) == 0
    paths = capsys.readouterr().out.split()
    assert paths
    assert all(Path(p).exists() for p in paths)


def test_reproduce_fig_out_of_range(tmp_path):
    assert main(["reproduce-fig", "11", "--out", str(tmp_path)]) == 2


def test_runconfig_is_frozen():
    with pytest.raises(Exception):
        RunConfig("position-measurement", "lindblad", 1.0).dt = 2
