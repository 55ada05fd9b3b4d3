"""Monte Carlo ensembles of unravellings and comparison with Lindblad dynamics."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import NoiseDriver, _drift_parts, lindblad_closed_form, sse_g_closed_form, sse_noise_matrix
from .gaussian import covariance_from_g
from .jump import FrameTable, run_scheme_a, run_scheme_b

log = logging.getLogger(__name__)

METHODS = ("lindblad", "sse", "jump-a", "jump-b")


@dataclass(frozen=True)
class EnsembleStats:
    times: np.ndarray
    mean: np.ndarray  # (T, 2)
    se: np.ndarray  # (T, 2) standard error of the mean centre
    mixture_cov: np.ndarray  # (T, 2, 2)
    n_traj: int
    method: str
    mean_norm: np.ndarray = None
    mean_jumps: np.ndarray = None


def mixture_moments(centres, covariances):
    """Mean centre and covariance of an equal-weight mixture.

    ``Sigma_mix = mean(covariances) + population covariance of the centres``.
    Leading axis indexes trajectories; further leading axes (e.g. time) are
    carried through.
    """
    centres = np.asarray(centres, dtype=float)
    covariances = np.asarray(covariances, dtype=float)
    if centres.shape[0] == 0:
        raise ValueError("empty ensemble")
    mean = centres.mean(axis=0)
    dev = centres - mean
    spread = np.einsum("n...i,n...j->...ij", dev, dev) / centres.shape[0]
    return mean, covariances.mean(axis=0) + spread


def _stats(times, centres, covs, method, norms=None, jumps=None):
    n = centres.shape[0]
    mean, mix = mixture_moments(centres, covs)
    se = centres.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return EnsembleStats(
        np.asarray(times), mean, se, mix, n, method,
        None if norms is None else norms.mean(axis=0),
        None if jumps is None else jumps.mean(axis=0),
    )


def _sse_ensemble(model, state, times, dt, n_traj, seed, chunk=2000):
    """Vectorised Gaussian SSE over trajectories; each keeps its own noise stream."""
    n = int(round(times[-1] / dt))
    out_idx = np.rint(np.asarray(times) / dt).astype(int)
    grid = dt * np.arange(n + 1)
    G = sse_g_closed_form(state.G, model, grid)
    B = sse_noise_matrix(G, model)
    F, b = _drift_parts(model)
    drivers = [NoiseDriver(seed, i) for i in range(n_traj)]
    x = np.full(n_traj, state.centre[0])
    p = np.full(n_traj, state.centre[1])
    centres = np.empty((n_traj, out_idx.size, 2))
    want = {k: j for j, k in enumerate(out_idx)}
    if 0 in want:
        centres[:, want[0]] = state.centre
    k = 0
    while k < n:
        m = min(chunk, n - k)
        dW = np.stack([drv.increments(dt, m) for drv in drivers])  # (traj, m, 2)
        for s in range(m):
            i = k + s
            w0, w1 = dW[:, s, 0], dW[:, s, 1]
            Bi = B[i]
            dx = (F[0, 0] * x + F[0, 1] * p + b[0]) * dt + Bi[0, 0] * w0 + Bi[0, 1] * w1
            dp = (F[1, 0] * x + F[1, 1] * p + b[1]) * dt + Bi[1, 0] * w0 + Bi[1, 1] * w1
            x, p = x + dx, p + dp
            if i + 1 in want:
                centres[:, want[i + 1], 0] = x
                centres[:, want[i + 1], 1] = p
        k += m
    cov = covariance_from_g_batch(G[out_idx], model.hbar)
    covs = np.broadcast_to(cov, (n_traj,) + cov.shape)
    return centres, covs


def covariance_from_g_batch(G, hbar):
    return 0.5 * hbar * np.linalg.inv(G)


def _jump_worker(args):
    kind, model, state, t_end, dt, seed, indices, times, table = args
    res = []
    if kind == "jump-b" and table is None:
        table = FrameTable(model, state, t_end, dt)
    out_idx = np.rint(np.asarray(times) / dt).astype(int)
    for i in indices:
        drv = NoiseDriver(seed, i)
        if kind == "jump-b":
            tr = run_scheme_b(model, state, table, drv, output_indices=out_idx)
        else:
            tr = run_scheme_a(model, state, t_end, drv, output_times=times)
        res.append((tr.centres, tr.covariances, tr.norms, tr.n_jumps))
    return res


def run_ensemble(method, model, state, t_end, n_traj, seed=0, dt=1e-3, output_times=None,
                 workers=1):
    """Run ``n_traj`` trajectories and accumulate moments at ``output_times``.

    ``method`` is one of ``"lindblad"``, ``"sse"``, ``"jump-a"``, ``"jump-b"``.
    Trajectory ``i`` draws from the stream ``(seed, i)``, so results do not
    depend on ``workers``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    times = np.linspace(0, t_end, 11) if output_times is None else np.asarray(output_times, float)
    if method == "lindblad":
        states = [lindblad_closed_form(state, model, t) for t in times]
        centres = np.array([s.centre for s in states])[None]
        covs = np.array([covariance_from_g(s, model.hbar) for s in states])[None]
        return _stats(times, centres, covs, method)
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    if method == "sse":
        centres, covs = _sse_ensemble(model, state, times, dt, n_traj, seed)
        return _stats(times, centres, covs, method)

    table = FrameTable(model, state, t_end, dt) if method == "jump-b" else None
    batches = np.array_split(np.arange(n_traj), max(1, workers * 4))
    jobs = [(method, model, state, t_end, dt, seed, idx, times, table) for idx in batches if idx.size]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_jump_worker, jobs))
    else:
        results = [_jump_worker(job) for job in jobs]
    flat = [r for batch in results for r in batch]
    centres = np.array([r[0] for r in flat])
    covs = np.array([r[1] for r in flat])
    norms = np.array([r[2] for r in flat])
    jumps = np.array([r[3] for r in flat])
    return _stats(times, centres, covs, method, norms, jumps)


def compare_to_lindblad(stats, model, state, z_max=3.0, rel_max=0.05):
    """Z-scores of the mean centre and relative Frobenius errors of the mixture covariance.

    Returns a dict with per-time arrays and an overall ``passed`` flag.
    """
    ref = [lindblad_closed_form(state, model, t) for t in stats.times]
    zc = np.array([r.centre for r in ref])
    sig = np.array([covariance_from_g(r, model.hbar) for r in ref])
    dev = stats.mean - zc
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stats.se > 0, np.abs(dev) / stats.se, np.where(np.abs(dev) < 1e-12, 0.0, np.inf))
    rel = np.linalg.norm(stats.mixture_cov - sig, axis=(1, 2)) / np.linalg.norm(sig, axis=(1, 2))
    passed = bool(np.all(z <= z_max) and np.all(rel <= rel_max))
    return dict(times=stats.times, z_scores=z, rel_cov_error=rel, passed=passed,
                reference_centre=zc, reference_cov=sig)
