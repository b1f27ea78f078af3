"""Controlled rough paths and the compensated-sum rough integral.

A controlled path is the triple (y, y', R^y) with R^y_{s,t} = y_{s,t} -
y'_s x_{s,t}; remainders are never stored densely, they are evaluated per
requested pair from the defining identity.  The rough integral is the
compensated Riemann sum over the full grid (the finest partition available);
refinement studies quantify the residual.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridError
from .fbm import RoughLift
from .grid import GridPath
from .variation import (
    RoughnessParams,
    TwoIndexFunction,
    _resolve_interval,
    p_var_norm,
)


@dataclass(frozen=True, eq=False)
class ControlledPath:
    """(value, Gubinelli derivative) over the grid of a reference rough path.

    value: (n+1, *vshape); deriv: (n+1, *vshape, V) where V is the reference
    dimension.  vshape is () for nothing, (W,) for vector paths or (W, V) for
    integrand-shaped paths.
    """

    reference: GridPath
    value: np.ndarray
    deriv: np.ndarray

    def __post_init__(self):
        val = np.ascontiguousarray(np.asarray(self.value, dtype=float))
        der = np.ascontiguousarray(np.asarray(self.deriv, dtype=float))
        n1 = self.reference.n_steps + 1
        v = self.reference.dim
        if val.shape[0] != n1 or der.shape != val.shape + (v,):
            raise GridError(
                f"controlled path shapes {val.shape}/{der.shape} do not match "
                f"{n1} nodes over a dim-{v} reference"
            )
        val.setflags(write=False)
        der.setflags(write=False)
        object.__setattr__(self, "value", val)
        object.__setattr__(self, "deriv", der)

    @property
    def vshape(self):
        return self.value.shape[1:]

    def remainder_pair(self, i, j: int) -> np.ndarray:
        """R^y_{t_i, t_j} = y_{i,j} - y'_i x_{i,j}, vectorized over i."""
        i = np.atleast_1d(i)
        xinc = self.reference.values[j] - self.reference.values[i]
        first = self.value[j] - self.value[i]
        second = np.einsum("k...v,kv->k...", self.deriv[i], xinc)
        return first - second

    @property
    def remainder(self) -> TwoIndexFunction:
        def norm_fn(i, j):
            r = self.remainder_pair(i, j)
            return np.linalg.norm(r.reshape(len(r), -1), axis=1)

        return TwoIndexFunction(
            self.reference.times,
            norm_fn,
            value_fn=lambda i, j: self.remainder_pair(np.array([i]), j)[0],
        )

    def deriv_path(self) -> GridPath:
        flat = self.deriv.reshape(self.deriv.shape[0], -1)
        return GridPath(self.reference.t0, self.reference.dt, flat)


def make_controlled(value, deriv, reference: RoughLift | GridPath) -> ControlledPath:
    """Build a controlled path from node values and Gubinelli derivatives.

    value may be a GridPath (vector values) or an ndarray; deriv must carry a
    trailing axis of the reference dimension.
    """
    ref = reference.base if isinstance(reference, RoughLift) else reference
    val = value.values if isinstance(value, GridPath) else np.asarray(value, float)
    der = deriv.values if isinstance(deriv, GridPath) else np.asarray(deriv, float)
    if der.shape != val.shape + (ref.dim,):
        raise GridError(
            f"deriv shape {der.shape} incompatible with value {val.shape} over "
            f"a dim-{ref.dim} reference"
        )
    return ControlledPath(ref, val, der)


def identity_controlled(reference: RoughLift) -> ControlledPath:
    """The reference path controlled by itself (y = x, y' = Id, R = 0)."""
    base = reference.base
    n1, d = base.n_steps + 1, base.dim
    deriv = np.broadcast_to(np.eye(d), (n1, d, d)).copy()
    return ControlledPath(base, base.values, deriv)


@dataclass(frozen=True)
class SmoothCoefficient:
    """A C^3-smooth coefficient with evaluation callbacks for G, DG, D2G, D3G.

    Callbacks are vectorized over leading axes: fn maps (..., in_dim) to
    (..., *out_shape); each derivative appends one (..., in_dim) axis.  bound
    is the reported sup-norm constant over the relevant range.
    """

    fn: Callable
    d1: Callable
    d2: Callable | None = None
    d3: Callable | None = None
    bound: float = float("inf")

    def __call__(self, y):
        return self.fn(y)

    def check_derivatives(
        self, box_lo, box_hi, n_points: int = 100, rtol: float = 1e-5, seed: int = 0
    ) -> float:
        """Max relative mismatch of DG (and D2G) vs central finite differences."""
        rng = np.random.default_rng(seed)
        lo = np.atleast_1d(np.asarray(box_lo, float))
        hi = np.atleast_1d(np.asarray(box_hi, float))
        pts = rng.uniform(lo, hi, size=(n_points, len(lo)))
        eps = 1e-6 * max(1.0, float(np.max(np.abs(hi))))
        worst = 0.0
        pairs = [(self.fn, self.d1)]
        if self.d2 is not None:
            pairs.append((self.d1, self.d2))
        for f, df in pairs:
            exact = np.asarray(df(pts))
            scale = max(1.0, float(np.max(np.abs(exact))))
            for k in range(len(lo)):
                e = np.zeros(len(lo))
                e[k] = eps
                fd = (np.asarray(f(pts + e)) - np.asarray(f(pts - e))) / (2 * eps)
                worst = max(worst, float(np.max(np.abs(fd - exact[..., k]))) / scale)
        if worst > rtol:
            raise ValueError(
                f"coefficient derivatives disagree with finite differences "
                f"(max relative error {worst:.2e} > {rtol:.0e})"
            )
        return worst


def compose_smooth(
    g: SmoothCoefficient, y: ControlledPath, reference: RoughLift | GridPath
) -> ControlledPath:
    """(G(y), DG(y) y') as a controlled path; y must have vector values."""
    if len(y.vshape) != 1:
        raise GridError("compose_smooth expects a vector-valued controlled path")
    value = np.asarray(g.fn(y.value), dtype=float)
    dg = np.asarray(g.d1(y.value), dtype=float)  # (n+1, *gshape, W)
    deriv = np.einsum("n...w,nwv->n...v", dg, y.deriv)
    ref = reference.base if isinstance(reference, RoughLift) else reference
    return ControlledPath(ref, value, deriv)


def _integrand_slices(y: ControlledPath, x: RoughLift, s, t):
    if len(y.vshape) != 2 or y.vshape[1] != x.dim:
        raise GridError(
            f"integrand must be L(V, W)-shaped with V={x.dim}, got {y.vshape}"
        )
    if not y.reference.same_grid(x.base):
        raise GridError("controlled path and driver live on different grids")
    base = x.base
    lo, hi = _resolve_interval(base.times, base.t0, base.dt, base.n_steps, s, t)
    return lo, hi


def rough_integral(
    y: ControlledPath, x: RoughLift, s: float | None = None, t: float | None = None
) -> np.ndarray:
    """Compensated Riemann sum over grid steps in [s, t].

    Per step [u, v]: y_u x_{u,v} + y'_u X_{u,v}, with the canonical index
    convention (y' X)^w = sum_{k,l} y'^{w}_{k,l} X^{k,l}.
    """
    lo, hi = _integrand_slices(y, x, s, t)
    xinc = np.diff(x.base.values[lo : hi + 1], axis=0)
    first = np.einsum("kwv,kv->kw", y.value[lo:hi], xinc)
    second = np.einsum("kwab,kab->kw", y.deriv[lo:hi], x.step_area[lo:hi])
    return np.sum(first + second, axis=0)


@dataclass(frozen=True)
class CertificateReport:
    """Local sewing defect vs the p-variation bound terms on one interval."""

    s: float
    t: float
    defect: float
    bound_term: float
    ratio: float

    def csv_row(self) -> str:
        return f"{self.s},{self.t},{self.defect},{self.bound_term},{self.ratio}"


def local_error_certificate(
    y: ControlledPath,
    x: RoughLift,
    params: RoughnessParams,
    s: float | None = None,
    t: float | None = None,
) -> CertificateReport:
    """Empirical sewing-lemma certificate on [s, t].

    Reports ||integral - y_s x_{s,t} - y'_s X_{s,t}|| against the bound terms
    pvar(x) qvar(R^y) + pvar(y') qvar(X); the ratio estimates the sewing
    constant, which is reported and never assumed.
    """
    lo, hi = _integrand_slices(y, x, s, t)
    base = x.base
    s_t, t_t = base.times[lo], base.times[hi]
    integral = rough_integral(y, x, s_t, t_t)
    xinc = base.values[hi] - base.values[lo]
    euler = y.value[lo] @ xinc + np.einsum("wab,ab->w", y.deriv[lo], x.area(lo, hi))
    defect = float(np.linalg.norm(integral - euler))
    area_fn = TwoIndexFunction.from_area(x)
    bound = p_var_norm(base, params.p, s_t, t_t) * p_var_norm(
        y.remainder, params.q, s_t, t_t
    ) + p_var_norm(y.deriv_path(), params.p, s_t, t_t) * p_var_norm(
        area_fn, params.q, s_t, t_t
    )
    ratio = defect / bound if bound > 0 else 0.0
    return CertificateReport(s_t, t_t, defect, float(bound), float(ratio))
