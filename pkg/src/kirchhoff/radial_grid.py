"""Compactified Chebyshev grid on [0, inf) and sector-wise bilinear forms.

Radii are images of Chebyshev-Gauss-Lobatto points under the algebraic map
``r = L (1 + t) / (1 - t)``.  The two endpoints (r = 0 and r = inf) are not
unknowns: a grid function is the vector of values at the ``n`` interior
nodes, extended to the endpoints by the boundary conditions of its angular
sector ``ell``:

* ``r = inf``: the value is zero (decay).
* ``r = 0``: ``f'(0) = 0`` for ``ell = 0`` and ``f(0) = 0`` for ``ell >= 1``
  (regularity ``f ~ r**ell``).

A grid function therefore stands for the degree ``n + 1`` polynomial in
``t`` through the extended values, and every bilinear form is the exact
Ritz form of these polynomials, integrated with an over-resolved
Gauss-Legendre rule in ``t``.  Forms carry the full measure of R^3: a sector
function ``f(r) Y(omega)`` is paired with the angular factor normalised so
that ``int |Y|^2 d omega = 4 pi``.  For ``ell = 0`` this makes the forms the
ordinary integrals over R^3 of radial functions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .closed_form import BubbleSpec, u_radial

MIN_NODES = 16


@dataclass(frozen=True)
class GridSpec:
    n: int
    map_scale: float = 1.0
    map_kind: str = "algebraic"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise ValueError(f"n must be an integer >= {MIN_NODES}, got {self.n}")
        if not np.isfinite(self.map_scale) or self.map_scale <= 0.0:
            raise ValueError(f"map_scale must be positive and finite, got {self.map_scale}")
        if self.map_kind != "algebraic":
            raise ValueError(f"unknown map_kind {self.map_kind!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "map_scale", float(self.map_scale))


def default_grid_spec(spec: BubbleSpec, n: int = 256) -> GridSpec:
    """Grid whose map scale is the bubble's intrinsic length ``sqrt(c) lam``."""
    return GridSpec(n=n, map_scale=spec.length_scale)


@dataclass(frozen=True)
class _SectorBasis:
    ext: np.ndarray      # (n+2, n) extension by boundary conditions
    val: np.ndarray      # values at Gauss points
    dt: np.ndarray       # d/dt at Gauss points
    h: np.ndarray        # f / (1 - t) at Gauss points
    h_end: np.ndarray    # f / (1 - t) at t = 1 (the r -> inf coefficient of 1/r)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Immutable grid data; build with :func:`build_grid`.

    ``quad_weights`` integrate ``f(r) r^2 dr`` from node samples (Fejer's
    second rule in ``t``, which needs no endpoint values).  ``d1`` and ``d2``
    map extended values (length ``n + 2``) to ``f'(r)`` and ``f''(r)`` at the
    interior nodes.
    """

    spec: GridSpec
    t_full: np.ndarray
    nodes: np.ndarray
    quad_weights: np.ndarray
    dr_weights: np.ndarray
    cc_weights: np.ndarray
    D1: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    gauss_t: np.ndarray
    gauss_w: np.ndarray
    gauss_r: np.ndarray
    gauss_drdt: np.ndarray
    _bases: dict = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def L(self) -> float:
        return self.spec.map_scale

    @property
    def t(self) -> np.ndarray:
        return self.t_full[1:-1]

    def basis(self, ell: int) -> _SectorBasis:
        _check_ell(ell)
        return self._bases["neumann" if ell == 0 else "dirichlet"]

    def extend(self, f, ell: int) -> np.ndarray:
        """Values at all ``n + 2`` Lobatto points, endpoints from the boundary conditions."""
        return self.basis(ell).ext @ np.asarray(f, dtype=float)


def _check_ell(ell):
    if int(ell) != ell or ell < 0:
        raise ValueError(f"angular index must be a nonnegative integer, got {ell}")


def _lobatto(N: int):
    """Ascending Chebyshev-Lobatto points ``-cos(j pi / N)`` and their barycentric weights."""
    j = np.arange(N + 1)
    # sin form keeps the points exactly antisymmetric
    t = np.sin(np.pi * (2.0 * j - N) / (2.0 * N))
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    return t, w


def _cheb_diff(t, w):
    X = t[:, None] - t[None, :]
    np.fill_diagonal(X, 1.0)
    D = (w[None, :] / w[:, None]) / X
    np.fill_diagonal(D, 0.0)
    D[np.diag_indices_from(D)] = -D.sum(axis=1)
    return D


def _bary_matrix(nodes, weights, x):
    X = x[:, None] - nodes[None, :]
    hit = X == 0.0
    X[hit] = 1.0
    M = weights[None, :] / X
    M /= M.sum(axis=1, keepdims=True)
    rows = np.any(hit, axis=1)
    if np.any(rows):
        M[rows] = hit[rows].astype(float)
    return M


def _bary_weights(nodes):
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    # log-sum keeps the products in range for a few hundred nodes
    logs = np.sum(np.log(np.abs(diff)), axis=1)
    sign = np.prod(np.sign(diff), axis=1)
    w = sign * np.exp(-(logs - logs.min()))
    return w / np.abs(w).max()


def _fejer2_weights(n: int):
    """Fejer's second rule on the interior points of the (n+2)-point Lobatto set."""
    N = n + 1
    theta = np.pi * np.arange(1, N) / N
    j = np.arange(1, N // 2 + 1)
    s = np.sin(np.outer(theta, 2 * j - 1)) / (2 * j - 1)
    return 4.0 * np.sin(theta) / N * s.sum(axis=1)


def _clenshaw_curtis_weights(N: int):
    """Clenshaw-Curtis weights on ``cos(j pi / N)``, j = 0..N (symmetric)."""
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    inner = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(N * theta[inner]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / N
    return w


def build_grid(spec: GridSpec, n_gauss: int | None = None) -> RadialGrid:
    n, L = spec.n, spec.map_scale
    N = n + 1
    t_full, bw = _lobatto(N)
    D1 = _cheb_diff(t_full, bw)
    t = t_full[1:-1]
    r = L * (1.0 + t) / (1.0 - t)
    drdt = 2.0 * L / (1.0 - t) ** 2
    fejer = _fejer2_weights(n)

    dtdr = 2.0 * L / (r + L) ** 2
    d2tdr2 = -4.0 * L / (r + L) ** 3
    d1 = dtdr[:, None] * D1[1:-1]
    d2 = (dtdr ** 2)[:, None] * (D1 @ D1)[1:-1] + d2tdr2[:, None] * D1[1:-1]

    M = n_gauss or 2 * n + 16
    x, gw = leggauss(M)
    gr = L * (1.0 + x) / (1.0 - x)
    gdrdt = 2.0 * L / (1.0 - x) ** 2
    I_full = _bary_matrix(t_full, bw, x)
    t_red = t_full[:N]
    I_red = _bary_matrix(t_red, _bary_weights(t_red), x)
    I_red_end = _bary_matrix(t_red, _bary_weights(t_red), np.array([1.0]))[0]

    bases = {}
    for bc in ("neumann", "dirichlet"):
        E = np.zeros((N + 1, n))
        E[1:N, :] = np.eye(n)
        if bc == "neumann":
            E[0, :] = -D1[0, 1:N] / D1[0, 0]
        H = E[:N] / (1.0 - t_red)[:, None]
        b = _SectorBasis(ext=E, val=I_full @ E, dt=I_full @ (D1 @ E), h=I_red @ H,
                         h_end=I_red_end @ H)
        for arr in (b.ext, b.val, b.dt, b.h, b.h_end):
            arr.setflags(write=False)
        bases[bc] = b

    arrays = dict(t_full=t_full, nodes=r, quad_weights=fejer * drdt * r * r,
                  dr_weights=fejer * drdt, cc_weights=_clenshaw_curtis_weights(N)[::-1].copy(),
                  D1=D1, d1=d1, d2=d2, gauss_t=x, gauss_w=gw, gauss_r=gr, gauss_drdt=gdrdt)
    for arr in arrays.values():
        arr.setflags(write=False)
    return RadialGrid(spec=spec, _bases=bases, **arrays)


# -- sampling and integration ----------------------------------------------

def sample(grid: RadialGrid, f) -> np.ndarray:
    """Grid function of ``f`` (values at the interior nodes)."""
    return np.asarray(f(grid.nodes), dtype=float)


def integrate(grid: RadialGrid, f, weight: str = "r2") -> float:
    """``int_0^inf f(r) w(r) dr`` for a callable ``f`` with ``w = r^2`` or ``1``.

    Clenshaw-Curtis in ``t`` over all Lobatto points; the value at ``r = inf``
    is the limit of ``f(r) w(r) dr/dt``, estimated by Richardson extrapolation
    in ``1/r``.  The integrand must decay at least like ``1/r^2``.
    """
    if weight not in ("r2", "dr"):
        raise ValueError("weight must be 'r2' or 'dr'")
    L = grid.L

    def g(r):
        r = np.asarray(r, dtype=float)
        val = np.asarray(f(r), dtype=float) * (r + L) ** 2 / (2.0 * L)
        return val * r * r if weight == "r2" else val

    inner = grid.cc_weights[1:-1] @ g(grid.nodes)
    start = g(np.array([0.0]))[0]
    R = 1e6 * L
    end = 2.0 * g(np.array([2.0 * R]))[0] - g(np.array([R]))[0]
    return float(inner + grid.cc_weights[0] * start + grid.cc_weights[-1] * end)


def integrate_samples(grid: RadialGrid, values) -> float:
    """``int_0^inf f r^2 dr`` from node samples of ``f``."""
    return float(grid.quad_weights @ np.asarray(values, dtype=float))


def derivative(grid: RadialGrid, f, ell: int = 0, order: int = 1) -> np.ndarray:
    """``f'`` or ``f''`` at the nodes, for a grid function in sector ``ell``."""
    full = grid.extend(f, ell)
    if order == 1:
        return grid.d1 @ full
    if order == 2:
        return grid.d2 @ full
    raise ValueError("order must be 1 or 2")


# -- bilinear forms --------------------------------------------------------

def _gram(B, w):
    M = B.T @ (w[:, None] * B)
    return 0.5 * (M + M.T)


def sector_stiffness(grid: RadialGrid, ell: int) -> np.ndarray:
    """``4 pi int (f' g' + ell(ell+1) f g / r^2) r^2 dr`` on grid functions."""
    b = grid.basis(ell)
    L, x, w = grid.L, grid.gauss_t, grid.gauss_w
    # r^2 dt/dr = L (1+t)^2 / 2, so the radial part is polynomial in t
    K = _gram(b.dt, 4.0 * np.pi * w * 0.5 * L * (1.0 + x) ** 2)
    if ell > 0:
        # ell(ell+1) f g dr = ell(ell+1) h_f h_g 2L dt with h = f/(1-t)
        K = K + _gram(b.h, 4.0 * np.pi * ell * (ell + 1) * w * 2.0 * L)
    return 0.5 * (K + K.T)


def sector_gram(grid: RadialGrid, ell: int) -> np.ndarray:
    """Metric of D^{1,2} restricted to sector ``ell``; identical to the stiffness form."""
    return sector_stiffness(grid, ell)


def sector_mass(grid: RadialGrid, ell: int = 0) -> np.ndarray:
    """``4 pi int f g r^2 dr``.

    Functions decaying like ``1/r`` are not in L^2(R^3); for them the value is
    a truncation at the Gauss resolution, see :func:`mass_value`.
    """
    b = grid.basis(ell)
    L, x, w = grid.L, grid.gauss_t, grid.gauss_w
    weight = 4.0 * np.pi * w * 2.0 * L ** 3 * (1.0 + x) ** 2 / (1.0 - x) ** 2
    return _gram(b.h, weight)


def has_l2_tail(grid: RadialGrid, f, ell: int = 0, rtol: float = 1e-8) -> bool:
    """True when the ``1/r`` coefficient of ``f`` at infinity vanishes."""
    b = grid.basis(ell)
    f = np.asarray(f, dtype=float)
    coeff = abs(b.h_end @ f)
    scale = np.max(np.abs(b.h @ f)) if f.size else 0.0
    return bool(coeff <= rtol * max(scale, np.finfo(float).tiny))


def mass_value(grid: RadialGrid, f, ell: int = 0):
    """``(value, integrable)``: the mass form on ``(f, f)`` and the L^2 tail flag."""
    f = np.asarray(f, dtype=float)
    return float(f @ sector_mass(grid, ell) @ f), has_l2_tail(grid, f, ell)


def potential_weight(grid: RadialGrid, spec: BubbleSpec) -> np.ndarray:
    """``5 u^4`` at the nodes."""
    return 5.0 * u_radial(spec, grid.nodes) ** 4


def potential_matrix(grid: RadialGrid, spec: BubbleSpec, ell: int = 0) -> np.ndarray:
    """``4 pi int 5 u^4 f g r^2 dr`` with u centred on the grid origin."""
    b = grid.basis(ell)
    r = grid.gauss_r
    wt = 4.0 * np.pi * grid.gauss_w * 5.0 * u_radial(spec, r) ** 4 * r * r * grid.gauss_drdt
    return _gram(b.val, wt)


def load_vector(grid: RadialGrid, f, ell: int = 0) -> np.ndarray:
    """``(4 pi int f p_i r^2 dr)_i`` for a callable ``f`` and nodal basis ``p_i``."""
    b = grid.basis(ell)
    r = grid.gauss_r
    return b.val.T @ (4.0 * np.pi * grid.gauss_w * np.asarray(f(r), dtype=float) * r * r
                      * grid.gauss_drdt)


def gradient_load_vector(grid: RadialGrid, df, ell: int = 0) -> np.ndarray:
    """``(4 pi int f'(r) p_i'(r) r^2 dr)_i`` given the exact derivative ``df`` of ``f``."""
    b = grid.basis(ell)
    x, r = grid.gauss_t, grid.gauss_r
    f_t = np.asarray(df(r), dtype=float) * grid.gauss_drdt
    return b.dt.T @ (4.0 * np.pi * grid.gauss_w * 0.5 * grid.L * (1.0 + x) ** 2 * f_t)


def form(M, f, g=None) -> float:
    """Evaluate the bilinear form ``f^T M g`` (``g`` defaults to ``f``)."""
    f = np.asarray(f, dtype=float)
    g = f if g is None else np.asarray(g, dtype=float)
    return float(f @ M @ g)
