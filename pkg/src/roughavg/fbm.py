"""Fractional Brownian motion sampling and its rough-path lift.

Sampling uses circulant embedding (Davies-Harte, O(n log n)) with a dense
Cholesky fallback when the embedding is not nonnegative definite.  Randomness
is keyed by (seed, path index, component) through ``numpy``'s SeedSequence
spawning + the Philox counter-based generator, so ensembles are reproducible
regardless of evaluation order.

The lift stores the Levy area per grid step only; values for arbitrary node
pairs are reconstructed through Chen's relation, which is lossless on
per-step geometric data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, NumericalError
from .grid import GridPath, HurstIndex


def fbm_covariance(h: HurstIndex | float, s: float, t: float) -> float:
    """Covariance E[B_s B_t] of a one-dimensional FBM pinned at zero at time 0.

    Per component; the full matrix is this scalar times the identity.
    """
    hh = 2.0 * float(h)
    return 0.5 * (abs(t) ** hh + abs(s) ** hh - abs(t - s) ** hh)


def _fgn_autocov(h: float, n: int) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise, lags 0..n-1."""
    k = np.arange(n, dtype=float)
    hh = 2.0 * h
    return 0.5 * (np.abs(k + 1) ** hh + np.abs(k - 1) ** hh - 2.0 * np.abs(k) ** hh)


def _circulant_eigenvalues(h: float, n: int) -> np.ndarray | None:
    """Eigenvalues of the circulant embedding, or None if any is negative."""
    c = _fgn_autocov(h, n)
    row = np.concatenate([c, [0.0], c[-1:0:-1]])
    lam = np.fft.fft(row).real
    if np.min(lam) < -1e-9 * np.max(lam):
        return None
    return np.maximum(lam, 0.0)


def _fgn_batch_circulant(lam: np.ndarray, rngs, n: int) -> np.ndarray:
    """Davies-Harte draws for a batch of generators; one fGn row per rng."""
    m = 2 * n
    out = np.empty((len(rngs), n))
    sq = np.sqrt(lam / m)
    for b, rng in enumerate(rngs):
        z0 = rng.standard_normal()
        zn = rng.standard_normal()
        v = rng.standard_normal((n - 1, 2))
        w = np.empty(m, dtype=complex)
        w[0] = z0
        w[n] = zn
        w[1:n] = (v[:, 0] + 1j * v[:, 1]) / np.sqrt(2.0)
        w[n + 1 :] = np.conj(w[1:n][::-1])
        out[b] = np.fft.fft(sq * w).real[:n]
    return out


def _fgn_batch_cholesky(h: float, rngs, n: int) -> np.ndarray:
    """Dense Cholesky fallback (exact covariance, O(n^3) setup)."""
    i = np.arange(n)
    cov = _fgn_autocov(h, n)[np.abs(i[:, None] - i[None, :])]
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"fGn covariance not factorizable for H={h}, n={n}"
        ) from exc
    return np.stack([chol @ rng.standard_normal(n) for rng in rngs])


def sample_fbm_ensemble(
    h: HurstIndex | float,
    dim: int,
    t0: float,
    dt: float,
    n_steps: int,
    seed: int,
    n_paths: int,
) -> np.ndarray:
    """Sample n_paths independent FBM paths; shape (n_paths, n_steps+1, dim).

    Each path starts at zero at t0.  Component (p, c) is driven by the
    stream keyed (seed, p, c), so any sub-ensemble is bit-reproducible.
    """
    h = HurstIndex(float(h)).value
    if dt <= 0 or n_steps < 1 or dim < 1 or n_paths < 1:
        raise ValueError("need dt > 0, n_steps >= 1, dim >= 1, n_paths >= 1")

    lam = _circulant_eigenvalues(h, n_steps)
    out = np.empty((n_paths, n_steps + 1, dim))
    out[:, 0, :] = 0.0
    scale = dt**h
    for c in range(dim):
        rngs = [
            np.random.Generator(np.random.Philox(np.random.SeedSequence(
                entropy=seed, spawn_key=(p, c))))
            for p in range(n_paths)
        ]
        if lam is not None:
            fgn = _fgn_batch_circulant(lam, rngs, n_steps)
        else:
            fgn = _fgn_batch_cholesky(h, rngs, n_steps)
        out[:, 1:, c] = np.cumsum(scale * fgn, axis=1)
    return out


def sample_fbm(
    h: HurstIndex | float,
    dim: int,
    t0: float,
    dt: float,
    n_steps: int,
    seed: int,
) -> GridPath:
    """Sample one multidimensional FBM path as a GridPath, zero at t0."""
    values = sample_fbm_ensemble(h, dim, t0, dt, n_steps, seed, 1)[0]
    return GridPath(t0, dt, values)


def rebase_at(path: GridPath, t: float) -> GridPath:
    """Shift node values so the path vanishes at time t (t must be a node)."""
    return path.shifted(-path.value_at(t))


def rescale_time(path: GridPath, eps: float, dt_out: float | None = None) -> GridPath:
    """Time-rescaled path t -> path(t / eps).

    Default output grid keeps every input node (dt_out = eps * dt).  A coarser
    dt_out is allowed when dt_out / eps is an integer multiple of the input dt.
    """
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    if dt_out is None:
        return GridPath(path.t0 * eps, path.dt * eps, path.values)
    ratio = dt_out / (eps * path.dt)
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * max(1.0, ratio):
        raise GridError(
            f"dt_out={dt_out} with eps={eps} is not representable on the input "
            f"grid (dt={path.dt}); need dt_out/eps to be a multiple of dt"
        )
    sub = path.subsample(stride) if stride > 1 else path
    return GridPath(sub.t0 * eps, sub.dt * eps, sub.values)


@dataclass(frozen=True, eq=False)
class RoughLift:
    """A rough path over a grid: base path plus per-step Levy areas.

    step_area[k] is the second-order increment over [t_k, t_{k+1}], shape
    (n_steps, dim, dim).  Arbitrary pairs come from Chen's relation via the
    cached anchored areas X_{t_0, t_j}.
    """

    base: GridPath
    step_area: np.ndarray

    def __post_init__(self):
        area = np.ascontiguousarray(np.asarray(self.step_area, dtype=float))
        n, d = self.base.n_steps, self.base.dim
        if area.shape != (n, d, d):
            raise ValueError(f"step_area must have shape {(n, d, d)}")
        area.setflags(write=False)
        object.__setattr__(self, "step_area", area)
        # anchored areas X_{t_0, t_j}, built once by Chen's relation
        anchored = np.empty((n + 1, d, d))
        anchored[0] = 0.0
        vals = self.base.values
        inc = np.diff(vals, axis=0)
        cross = np.einsum("ki,kj->kij", vals[:-1] - vals[0], inc)
        np.cumsum(area + cross, axis=0, out=anchored[1:])
        anchored.setflags(write=False)
        object.__setattr__(self, "_anchored", anchored)

    @property
    def dim(self) -> int:
        return self.base.dim

    def area(self, i: int, j: int) -> np.ndarray:
        """Levy area X_{t_i, t_j} for grid indices i <= j."""
        vals = self.base.values
        return (
            self._anchored[j]
            - self._anchored[i]
            - np.einsum("i,j->ij", vals[i] - vals[0], vals[j] - vals[i])
        )

    def areas_from(self, i, j: int) -> np.ndarray:
        """Vectorized X_{t_i, t_j} for an index array i (all <= j)."""
        vals = self.base.values
        left = vals[i] - vals[0]
        right = vals[j] - vals[i]
        return (
            self._anchored[j]
            - self._anchored[i]
            - np.einsum("ki,kj->kij", left, right)
        )

    def restrict(self, s: float, t: float) -> "RoughLift":
        i, j = self.base.index_of(s), self.base.index_of(t)
        return RoughLift(self.base.restrict(s, t), self.step_area[i:j])

    def subsample(self, stride: int) -> "RoughLift":
        """Chen-coarsened lift on every stride-th node (lossless on-grid)."""
        sub = self.base.subsample(stride)
        idx = np.arange(0, self.base.n_steps + 1, stride)
        areas = np.stack(
            [self.area(int(a), int(b)) for a, b in zip(idx[:-1], idx[1:])]
        )
        return RoughLift(sub, areas)


def lift_piecewise_linear(path: GridPath) -> RoughLift:
    """Canonical lift of the piecewise-linear interpolant of a grid path.

    The per-step iterated integral of a linear segment is exactly
    X^{k,l} = x_inc^k * x_inc^l / 2, so the lift is geometric by construction.
    """
    inc = path.increments()
    area = 0.5 * np.einsum("ki,kj->kij", inc, inc)
    return RoughLift(path, area)
