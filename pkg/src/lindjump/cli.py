"""Command line: config parsing, run orchestration and data emission.

Configs are plain ``key = value`` lines with ``#`` comments. Every emitted
file starts with the resolved config and the package version as metadata.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import NoiseDriver, ParamTrajectory, lindblad_closed_form, run_sse
from .ensemble import EnsembleStats, run_ensemble
from .flow import propagate_frames
from .gaussian import (
    GaussianState, WignerGrid, default_grid_spec, hagedorn_from_g,
    wigner_gaussian_on_grid,
)
from .hagedorn import b_matrix, eval_basis_stack, wigner_of_coefficients, wigner_window
from .jump import FrameTable, JumpTrajectory, run_scheme_a, run_scheme_b
from .model import (
    PRESETS, LinearLindbladian, ModelConfig, QuadraticHamiltonian, build_effective_k,
    example1_reference, example2_reference, preset,
)

log = logging.getLogger(__name__)

METHODS = ("lindblad", "sse", "jump-a", "jump-b", "fock-lindblad", "fock-sse", "fock-jump")
ENSEMBLE_METHODS = ("sse", "jump-a", "jump-b", "lindblad")
CSV_COLUMNS = ("t", "x_mean", "p_mean", "var_x", "var_p", "cov_xp", "norm", "n_jumps")
CSV_HEADER = ",".join(CSV_COLUMNS)
N_FIGURES = 10


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending line or key."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration.

    ``model`` is a preset name or ``custom``; the latter reads ``H2`` as
    ``(xx, xp, pp)``, ``h1``, ``h0``, ``gradL`` and ``L0``. ``n_max`` is the
    number-basis truncation used by the ``fock-*`` methods. ``output_stride``
    counts integrator steps between emitted rows.
    """

    model: str
    method: str
    t_end: float
    omega: float = 1.0
    gamma: float = 0.2
    zeta: float = 2.0
    hbar: float = 1.0
    z0: tuple = (2.0, 0.0)
    dt: float = 1e-3
    seed: int = 0
    n_traj: int = 1
    n_max: int = 96
    output_stride: int = 10
    workers: int = 1
    wigner_n: int = 257
    wigner_width: float = 6.0
    wigner_time: float = None
    wigner_jump: int = -1
    H2: tuple = (1.0, 0.0, 1.0)
    h1: tuple = (0.0, 0.0)
    h0: float = 0.0
    gradL: tuple = (0j, 0j)
    L0: complex = 0j
    out: str = "-"


REQUIRED = ("model", "method", "t_end")
_FLOAT = ("t_end", "omega", "gamma", "zeta", "hbar", "dt", "wigner_width", "h0")
_INT = ("seed", "n_traj", "n_max", "output_stride", "workers", "wigner_n", "wigner_jump")
_VEC = {"z0": (2, float), "H2": (3, float), "h1": (2, float), "gradL": (2, complex)}


def _convert(key, raw):
    if key in _FLOAT:
        return float(raw)
    if key in _INT:
        return int(raw)
    if key in _VEC:
        size, kind = _VEC[key]
        parts = [kind(v) for v in raw.split(",")]
        if len(parts) != size:
            raise ValueError(f"expected {size} comma-separated values")
        return tuple(parts)
    if key == "L0":
        return complex(raw)
    if key == "wigner_time":
        return None if raw.lower() == "none" else float(raw)
    return raw


def _range_problem(key, value, cfg):
    positive = ("t_end", "dt", "omega", "zeta", "hbar", "wigner_width")
    if key in positive and not value > 0:
        return "must be positive"
    if key == "gamma" and not value >= 0:
        return "must be non-negative"
    if key in ("n_traj", "output_stride", "workers") and value < 1:
        return "must be at least 1"
    if key == "seed" and value < 0:
        return "must be non-negative"
    if key == "n_max" and value < 8:
        return "must be at least 8"
    if key == "wigner_n" and value < 3:
        return "must be at least 3"
    if key == "method" and value not in METHODS:
        return f"must be one of {', '.join(METHODS)}"
    if key == "model" and value not in PRESETS + ("custom",):
        return f"must be one of {', '.join(PRESETS + ('custom',))}"
    if key in ("z0", "H2", "h1", "gradL", "L0", "h0") and not np.all(np.isfinite(np.asarray(value))):
        return "must be finite"
    if key == "wigner_time" and value is not None and not 0 <= value:
        return "must be non-negative"
    return None


def parse_config(text, overrides=()):
    """Parse ``key = value`` lines into a validated :class:`RunConfig`.

    ``overrides`` are extra ``key=value`` strings applied after the text.
    """
    known = {f.name for f in fields(RunConfig)}
    values, where = {}, {}
    lines = [(f"line {i}", line) for i, line in enumerate(text.splitlines(), 1)]
    lines += [(f"override {o!r}", o) for o in overrides]
    for label, line in lines:
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{label}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in known:
            raise ConfigError(f"{label}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{label}: bad value for {key!r}: {exc}") from None
        where[key] = label
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    if values["model"] == "custom" and "gradL" not in values:
        raise ConfigError("missing required key 'gradL' for model=custom")
    cfg = RunConfig(**values)
    for f in fields(RunConfig):
        problem = _range_problem(f.name, getattr(cfg, f.name), cfg)
        if problem:
            label = where.get(f.name, "default")
            raise ConfigError(f"{label}: {f.name}={getattr(cfg, f.name)!r} {problem}")
    n = round(cfg.t_end / cfg.dt)
    if abs(n * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
        raise ConfigError(f"{where.get('dt', 'default')}: dt={cfg.dt!r} must divide t_end={cfg.t_end!r}")
    if cfg.wigner_time is not None and cfg.wigner_time > cfg.t_end:
        raise ConfigError(f"{where['wigner_time']}: wigner_time must not exceed t_end")
    return cfg


def _format_value(v):
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, (float, complex)):
        return repr(v)
    return str(v)


def config_to_text(cfg):
    """Serialise every field, defaults included; :func:`parse_config` inverts it."""
    return "".join(f"{f.name}={_format_value(getattr(cfg, f.name))}\n" for f in fields(cfg))


def load_config(path, overrides=()):
    if path == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text, overrides)


def build_model(cfg):
    if cfg.model == "custom":
        xx, xp, pp = cfg.H2
        ham = QuadraticHamiltonian(H2=[[xx, xp], [xp, pp]], h1=cfg.h1, h0=cfg.h0)
        lin = LinearLindbladian(gradL=cfg.gradL, L0=cfg.L0)
        return ModelConfig(ham, lin, cfg.hbar, "custom")
    return preset(cfg.model, cfg.omega, cfg.gamma, cfg.hbar)


def initial_state(cfg):
    return GaussianState.squeezed(cfg.zeta, cfg.z0)


def _meta(cfg, **extra):
    lines = [f"lindjump {__version__}"]
    lines += [f"{k}={v}" for k, v in extra.items()]
    if cfg is not None:
        lines += config_to_text(cfg).splitlines()
    return lines


# -- records and emission ---------------------------------------------------------

def record_table(record, hbar=1.0):
    """Columns of the CSV contract for any supported record type."""
    if isinstance(record, dict):
        return {k: np.asarray(record[k]) for k in CSV_COLUMNS}
    if isinstance(record, ParamTrajectory):
        cov = record.covariances(hbar) if len(record.times) else np.zeros((0, 2, 2))
        n = len(record.times)
        return _table(record.times, record.centres, cov, np.ones(n), np.zeros(n, dtype=int))
    if isinstance(record, JumpTrajectory):
        return _table(record.times, record.centres, record.covariances, record.norms, record.n_jumps)
    if isinstance(record, EnsembleStats):
        n = len(record.times)
        norm = np.ones(n) if record.mean_norm is None else record.mean_norm
        jumps = np.zeros(n, dtype=int) if record.mean_jumps is None else record.mean_jumps
        return _table(record.times, record.mean, record.mixture_cov, norm, jumps)
    raise TypeError(f"cannot tabulate {type(record).__name__}")


def _table(times, centres, covs, norms, jumps):
    centres = np.asarray(centres, dtype=float).reshape(-1, 2)
    covs = np.asarray(covs, dtype=float).reshape(-1, 2, 2)
    return dict(
        t=np.asarray(times, dtype=float), x_mean=centres[:, 0], p_mean=centres[:, 1],
        var_x=covs[:, 0, 0], var_p=covs[:, 1, 1], cov_xp=covs[:, 0, 1],
        norm=np.asarray(norms, dtype=float), n_jumps=np.asarray(jumps),
    )


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def emit_csv(record, path, meta=(), hbar=1.0):
    """Write the trajectory CSV: ``#`` metadata lines, header, one row per time."""
    table = record_table(record, hbar)
    fh, close = _open_out(path)
    try:
        for line in meta:
            fh.write(f"# {line}\n")
        fh.write(CSV_HEADER + "\n")
        for i in range(len(table["t"])):
            fh.write(",".join(_fmt(table[k][i]) for k in CSV_COLUMNS) + "\n")
    finally:
        if close:
            fh.close()


def read_csv(path):
    """Inverse of :func:`emit_csv`: ``(meta lines, columns)``."""
    meta, rows, header = [], [], None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                meta.append(line[2:] if line.startswith("# ") else line[1:])
            elif header is None:
                header = line.split(",")
                if tuple(header) != CSV_COLUMNS:
                    raise ValueError(f"unexpected CSV header {line!r}")
            elif line:
                rows.append(line.split(","))
    cols = {}
    for j, key in enumerate(CSV_COLUMNS):
        vals = [r[j] for r in rows]
        if key == "n_jumps" and all(v.lstrip("-").isdigit() for v in vals):
            cols[key] = np.array([int(v) for v in vals], dtype=int)
        else:
            cols[key] = np.array([float(v) for v in vals], dtype=float)
    return meta, cols


def emit_wigner_json(grid, path, meta=None):
    """Write ``{q_min, q_max, p_min, p_max, nq, np, values}`` with row-major values."""
    obj = dict(
        q_min=float(grid.q_min), q_max=float(grid.q_max), p_min=float(grid.p_min),
        p_max=float(grid.p_max), nq=int(grid.nq), np=int(grid.np),
        values=[float(v) for v in np.asarray(grid.values, dtype=float).ravel()],
    )
    if meta is not None:
        obj["meta"] = list(meta)
    fh, close = _open_out(path)
    try:
        json.dump(obj, fh)
        fh.write("\n")
    finally:
        if close:
            fh.close()


def read_wigner_json(path):
    """Inverse of :func:`emit_wigner_json`: ``(WignerGrid, meta or None)``."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    values = np.array(obj["values"], dtype=float).reshape(obj["np"], obj["nq"])
    grid = WignerGrid(obj["q_min"], obj["q_max"], obj["p_min"], obj["p_max"], values)
    return grid, obj.get("meta")


def write_dat(path, columns, names, comments=()):
    """Whitespace-separated columns with ``#`` comments, readable by gnuplot."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(*columns):
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


# -- runs ---------------------------------------------------------------------------

def _grid(cfg, t_end=None):
    t_end = cfg.t_end if t_end is None else t_end
    n = int(round(t_end / cfg.dt))
    idx = np.arange(0, n + 1, cfg.output_stride)
    if idx[-1] != n:
        idx = np.append(idx, n)
    return n, idx, cfg.dt * idx


def _fock_setup(cfg, model):
    from .oracle import fock_operators, gaussian_to_fock

    ops = fock_operators(model, cfg.n_max)
    return ops, gaussian_to_fock(initial_state(cfg), model.hbar, cfg.n_max)


def _fock_table(states_or_rhos, ops, times, norms, jumps):
    from .oracle import expectation_moments

    mom = [expectation_moments(s, ops) for s in states_or_rhos]
    return _table(times, [m[0] for m in mom], [m[1] for m in mom], norms, jumps)


def simulate(cfg, t_end=None):
    """Single realisation (or deterministic solution) of ``cfg.method``."""
    model = build_model(cfg)
    state = initial_state(cfg)
    t_end = cfg.t_end if t_end is None else t_end
    n, idx, times = _grid(cfg, t_end)
    driver = NoiseDriver(cfg.seed, 0)
    method = cfg.method
    if method == "lindblad":
        states = [lindblad_closed_form(state, model, t) for t in times]
        return ParamTrajectory(times, np.array([s.centre for s in states]),
                               np.array([s.G for s in states]), "lindblad")
    if method == "sse":
        tr = run_sse(model, state, t_end, cfg.dt, driver)
        return ParamTrajectory(tr.times[idx], tr.centres[idx], tr.G[idx], "sse")
    if method == "jump-a":
        return run_scheme_a(model, state, t_end, driver, output_times=times)
    if method == "jump-b":
        return run_scheme_b(model, state, FrameTable(model, state, t_end, cfg.dt), driver, output_indices=idx)

    from .oracle import fock_jump_trajectory, fock_lindblad_evolve, fock_sse_trajectory

    ops, psi0 = _fock_setup(cfg, model)
    if method == "fock-lindblad":
        rhos = fock_lindblad_evolve(np.outer(psi0, psi0.conj()), ops, t_end, cfg.dt, sample_times=times)
        return _fock_table(rhos, ops, times, np.ones(times.size), np.zeros(times.size, dtype=int))
    if method == "fock-sse":
        _, states = fock_sse_trajectory(psi0, ops, t_end, cfg.dt, driver)
        return _fock_table(states[idx], ops, times, np.ones(times.size), np.zeros(times.size, dtype=int))
    rec = fock_jump_trajectory(psi0, ops, t_end, cfg.dt, driver)
    counts = np.searchsorted(np.asarray(rec.jump_times), times, side="right")
    return _fock_table(rec.states[idx], ops, times, rec.norms[idx], counts)


def ensemble(cfg):
    if cfg.method not in ENSEMBLE_METHODS:
        raise ConfigError(f"method={cfg.method} has no ensemble mode; use one of {', '.join(ENSEMBLE_METHODS)}")
    model = build_model(cfg)
    _, _, times = _grid(cfg)
    return run_ensemble(cfg.method, model, initial_state(cfg), cfg.t_end, cfg.n_traj, seed=cfg.seed,
                        dt=cfg.dt, output_times=times, workers=cfg.workers)


def wigner_grid(cfg):
    """Wigner function of the ``cfg.method`` state at ``wigner_time``.

    For jump methods ``wigner_jump >= 0`` selects the state right after that
    jump instead.
    """
    model = build_model(cfg)
    hbar = model.hbar
    t = cfg.t_end if cfg.wigner_time is None else cfg.wigner_time
    n, w = cfg.wigner_n, cfg.wigner_width
    if cfg.method in ("lindblad", "sse"):
        if t == 0:
            g = initial_state(cfg)
        elif cfg.method == "lindblad":
            g = lindblad_closed_form(initial_state(cfg), model, t)
        else:
            tr = simulate(cfg, t_end=t)
            g = GaussianState(tr.centres[-1], tr.G[-1])
        return wigner_gaussian_on_grid(g, hbar, default_grid_spec(g, hbar, n, w))
    if cfg.method in ("jump-a", "jump-b"):
        if t == 0:
            g = initial_state(cfg)
            return wigner_gaussian_on_grid(g, hbar, default_grid_spec(g, hbar, n, w))
        tr = simulate(cfg, t_end=t)
        if cfg.wigner_jump >= 0:
            if cfg.wigner_jump >= len(tr.jumps):
                raise ConfigError(f"wigner_jump={cfg.wigner_jump} but the run has {len(tr.jumps)} jumps")
            _, frame, d = tr.jumps[cfg.wigner_jump]
        else:
            frame, d = tr.final_frame, tr.final_coefficients
        return wigner_of_coefficients(d, frame, hbar, n, n, w)
    if cfg.method == "fock-lindblad":
        raise ConfigError("wigner output needs a pure state; use method=lindblad for the mixed Gaussian")
    return _fock_wigner(cfg, model, t)


def _fock_wigner(cfg, model, t):
    from .oracle import FOCK_FRAME, expectation_moments, fock_jump_trajectory, fock_sse_trajectory

    ops, psi0 = _fock_setup(cfg, model)
    driver = NoiseDriver(cfg.seed, 0)
    if t == 0:
        psi = psi0
    elif cfg.method == "fock-sse":
        psi = fock_sse_trajectory(psi0, ops, t, cfg.dt, driver)[1][-1]
    else:
        psi = fock_jump_trajectory(psi0, ops, t, cfg.dt, driver).states[-1]
    mean, cov = expectation_moments(psi, ops)
    hbar = model.hbar

    def fn(x):
        return psi @ eval_basis_stack(psi.size - 1, FOCK_FRAME, hbar, x)

    n = cfg.wigner_n
    return wigner_window(fn, mean, np.sqrt(np.diag(cov)), hbar, n, n, cfg.wigner_width)


# -- figures ------------------------------------------------------------------------

_FIG_MODEL = {1: "position-measurement", 2: "position-measurement", 3: "position-measurement",
              4: "position-measurement", 5: "position-measurement", 6: "position-measurement",
              7: "damped-oscillator", 8: "damped-oscillator", 9: "damped-oscillator",
              10: "damped-oscillator"}


def figure_config(number, method="lindblad", seed=0):
    return RunConfig(model=_FIG_MODEL[number], method=method, t_end=10.0, seed=seed)


def reproduce_figure(number, out_dir, seed=0, n_grid=257):
    """Write the data behind figure ``number`` (1-10) into ``out_dir``.

    Returns the list of written paths.
    """
    if number not in _FIG_MODEL:
        raise ConfigError(f"figure must be between 1 and {N_FIGURES}, got {number}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kind = {1: _fig_moments, 7: _fig_moments, 2: _fig_jump_snapshots, 8: _fig_jump_snapshots,
            3: _fig_frame_params, 9: _fig_frame_params, 4: _fig_basis, 5: _fig_basis,
            6: _fig_final_wigner, 10: _fig_final_wigner}[number]
    return kind(number, out, seed, n_grid)


def _fig_moments(number, out, seed, n_grid):
    paths = []
    for method in ("lindblad", "sse", "jump-b"):
        cfg = figure_config(number, method, seed)
        path = out / f"fig{number}_{method}.csv"
        emit_csv(simulate(cfg), path, _meta(cfg, figure=number), cfg.hbar)
        paths.append(path)
    return paths


def _fig_jump_snapshots(number, out, seed, n_grid, max_search=1000):
    cfg = figure_config(number, "jump-b", seed)
    model, state = build_model(cfg), initial_state(cfg)
    table = FrameTable(model, state, cfg.t_end, cfg.dt)
    # the first stream index from ``seed`` on whose trajectory jumps at least twice
    for index in range(max_search):
        tr = run_scheme_b(model, state, table, NoiseDriver(cfg.seed, index), output_stride=cfg.output_stride)
        if len(tr.jumps) >= 2:
            break
    else:
        raise RuntimeError(f"no trajectory with two jumps among {max_search} streams")
    paths = [out / f"fig{number}_path.csv"]
    emit_csv(tr, paths[0], _meta(cfg, figure=number, stream_index=index), cfg.hbar)
    k1 = int(round(tr.jump_times[0] / cfg.dt))
    k_before = max(k1 - 10, 0)
    snaps = [("before_jump1", table.times[k_before], table.frames[k_before], np.array([1.0 + 0j]),
              np.array([1.0 + 0j]))]
    for j in range(2):
        t_j, frame, d = tr.jumps[j]
        snaps.append((f"after_jump{j + 1}", t_j, frame, d, tr.evolved_coefficients[j][1]))
    width = max(len(s[4]) for s in snaps)
    cols = [np.arange(width)]
    names = ["n"]
    for label, t, frame, d, c in snaps:
        if label == "before_jump1":
            d = table.orthonormal(k_before, c)
        grid = wigner_of_coefficients(d, frame, cfg.hbar, n_grid, n_grid, cfg.wigner_width)
        path = out / f"fig{number}_wigner_{label}.json"
        emit_wigner_json(grid, path, _meta(cfg, figure=number, snapshot=label, t=repr(float(t))))
        paths.append(path)
        mag = np.zeros(width)
        mag[: c.size] = np.abs(c) / np.abs(c).max()
        cols.append(mag)
        names.append(f"{label}(t={float(t):.3f})")
    path = out / f"fig{number}_coefficients.dat"
    write_dat(path, cols, names, _meta(cfg, figure=number,
                                       note="relative |c_n| in the propagated initial basis"))
    paths.append(path)
    return paths


def _fig_frame_params(number, out, seed, n_grid):
    cfg = figure_config(number, "jump-b", seed)
    model, state = build_model(cfg), initial_state(cfg)
    t = np.linspace(0, cfg.t_end, 1001)
    frames = propagate_frames(hagedorn_from_g(state.G), state.centre, build_effective_k(model), cfg.hbar, t)
    N = np.array([f.N for f in frames])
    M = np.array([f.M for f in frames])
    if cfg.model == "position-measurement":
        ref = example1_reference(t, cfg.omega, cfg.gamma, cfg.zeta, cfg.hbar)
        N_asym = ref.N_inf * np.exp(-ref.N_rate * t)
    else:
        ref = example2_reference(t, cfg.omega, cfg.gamma, cfg.zeta, cfg.hbar, cfg.z0)
        N_asym = ref.N_inf_coeff * np.exp(-cfg.gamma * t / 2)
    M_inf = complex(ref.M_inf)
    path = out / f"fig{number}_frame_params.dat"
    write_dat(path, [t, N, M.real, M.imag, N_asym], ["t", "N", "Re_M", "Im_M", "N_asymptote"],
              _meta(cfg, figure=number, M_limit_re=repr(M_inf.real), M_limit_im=repr(M_inf.imag)))
    return [path]


def _fig_basis(number, out, seed, n_grid, levels=5):
    """Figure 4: moving basis states; figure 5: propagated initial basis states."""
    cfg = figure_config(number, "jump-b", seed)
    model, state = build_model(cfg), initial_state(cfg)
    frames = propagate_frames(hagedorn_from_g(state.G), state.centre, build_effective_k(model), cfg.hbar,
                              [0.0, 5.0, 10.0])
    paths = []
    for frame in frames:
        B = b_matrix(frame, levels - 1)
        for n in range(levels):
            if number == 4:
                d = np.eye(levels, dtype=complex)[n]
                label = "moving"
            else:
                d = B[n]
                label = "propagated"
            grid = wigner_of_coefficients(d[: n + 1], frame, cfg.hbar, n_grid, n_grid, cfg.wigner_width)
            path = out / f"fig{number}_{label}_n{n}_t{frame.t:g}.json"
            emit_wigner_json(grid, path, _meta(cfg, figure=number, n=n, t=repr(frame.t)))
            paths.append(path)
    return paths


def _fig_final_wigner(number, out, seed, n_grid):
    paths = []
    for method in ("lindblad", "sse", "jump-b"):
        cfg = replace(figure_config(number, method, seed), wigner_n=n_grid)
        path = out / f"fig{number}_{method}_path.csv"
        emit_csv(simulate(cfg), path, _meta(cfg, figure=number), cfg.hbar)
        paths.append(path)
        path = out / f"fig{number}_{method}_wigner.json"
        emit_wigner_json(wigner_grid(cfg), path, _meta(cfg, figure=number))
        paths.append(path)
    return paths


# -- entry point --------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="lindjump", description=__doc__.splitlines()[0])
    p.add_argument("--verbose", "-v", action="store_true")
    p.add_argument("--version", action="version", version=f"lindjump {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("simulate", "one trajectory (or the deterministic solution) as CSV"),
                        ("ensemble", "ensemble mean and mixture covariance as CSV"),
                        ("wigner", "Wigner grid of a state as JSON")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="config file, or '-' for stdin")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        s.add_argument("--out", help="output path (overrides the 'out' key; '-' for stdout)")
    v = sub.add_parser("validate", help="run the acceptance checks")
    v.add_argument("--only", help="comma-separated criterion numbers")
    v.add_argument("--quick", action="store_true", help="skip the slow statistical checks")
    f = sub.add_parser("reproduce-fig", help="regenerate the data behind a figure")
    f.add_argument("number", type=int, help=f"figure number, 1-{N_FIGURES}")
    f.add_argument("--out", default=".", help="output directory")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--grid", type=int, default=257, help="Wigner grid points per axis")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            from .validation import CHECKS, run_checks

            numbers = None
            if args.only:
                try:
                    numbers = [int(x) for x in args.only.split(",")]
                except ValueError:
                    raise ConfigError(f"--only expects numbers, got {args.only!r}") from None
                bad = [k for k in numbers if k not in CHECKS]
                if bad:
                    raise ConfigError(f"unknown criterion {bad[0]}")
            results = run_checks(numbers, quick=args.quick)
            return 0 if all(r.passed for r in results) else 1
        if args.command == "reproduce-fig":
            for path in reproduce_figure(args.number, args.out, args.seed, args.grid):
                print(path)
            return 0
        overrides = list(args.set)
        if args.out is not None:
            overrides.append(f"out={args.out}")
        cfg = load_config(args.config, overrides)
        meta = _meta(cfg, command=args.command)
        if args.command == "simulate":
            emit_csv(simulate(cfg), cfg.out, meta, cfg.hbar)
        elif args.command == "ensemble":
            emit_csv(ensemble(cfg), cfg.out, meta, cfg.hbar)
        else:
            emit_wigner_json(wigner_grid(cfg), cfg.out, meta)
        return 0
    except ConfigError as exc:
        print(f"lindjump: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
