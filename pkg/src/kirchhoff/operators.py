"""Sector-wise forms of the linearized operators and rank-one aware solves.

For a radial solution u with nonlocal coefficient c, the local operator is
``A phi = -c Laplace(phi) - 5 u^4 phi`` and the full linearization adds the
nonlocal term ``-2b (int grad u . grad phi) Laplace(u)``.  Tested against
``psi`` and integrated by parts, that term becomes ``+2b g(phi) g(psi)`` with
``g(phi) = int grad u . grad phi``, a rank-one positive semidefinite
correction.  Since u is radial, ``g`` vanishes identically on every sector
``ell >= 1`` and the correction lives in the radial sector only.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from .closed_form import BubbleSpec, du_radial, e0_radial
from .radial_grid import (
    RadialGrid,
    gradient_load_vector,
    potential_matrix,
    sample,
    sector_gram,
    sector_stiffness,
)


# Jacobi-scaled forms have reciprocal condition numbers near 1e-18 when they
# carry a kernel mode and above 1e-7 otherwise (n <= 256)
RCOND_MIN = 1e-12


class DegenerateSolveError(np.linalg.LinAlgError):
    """The form is singular on the working subspace, or the rank-one update breaks down."""


@dataclass(frozen=True, eq=False)
class SectorOperator:
    ell: int
    kind: str               # "A" or "Lplus"
    c: float
    A_form: np.ndarray
    gram: np.ndarray
    potential: np.ndarray
    rank_one: tuple[float, np.ndarray] | None
    kernel_mode: np.ndarray | None
    grid: RadialGrid
    spec: BubbleSpec

    @property
    def n(self) -> int:
        return self.A_form.shape[0]

    @property
    def form(self) -> np.ndarray:
        """Matrix of the operator's bilinear form, rank-one term included."""
        if self.rank_one is None:
            return self.A_form
        coef, g = self.rank_one
        M = self.A_form + coef * np.outer(g, g)
        return 0.5 * (M + M.T)

    @property
    def effective_potential(self) -> np.ndarray:
        """``P_eff`` with ``form = c * gram - P_eff``."""
        if self.rank_one is None:
            return self.potential
        coef, g = self.rank_one
        M = self.potential - coef * np.outer(g, g)
        return 0.5 * (M + M.T)


def nonlocal_vector(grid: RadialGrid, spec: BubbleSpec) -> np.ndarray:
    """``g_i = int grad u . grad p_i`` for the radial nodal basis ``p_i``.

    Computed from the exact derivative of u, so ``g @ phi`` is the pairing of
    the true solution with the grid function ``phi``.
    """
    return gradient_load_vector(grid, lambda r: du_radial(spec, r), ell=0)


def nonlocal_pairing(grid: RadialGrid, spec: BubbleSpec, phi) -> float:
    """``int grad u . grad phi`` for a radial grid function ``phi``."""
    return float(nonlocal_vector(grid, spec) @ np.asarray(phi, dtype=float))


def analytic_kernel_mode(grid: RadialGrid, spec: BubbleSpec, ell: int) -> np.ndarray | None:
    """Sampled radial profile of the known kernel mode in sector ``ell``.

    ``e0 = u/2 + r u'`` for ``ell = 0``, ``u'`` for ``ell = 1`` (the profile of
    every translation mode ``u_{x_i} = u'(r) x_i / r``), none above.
    """
    if ell == 0:
        return sample(grid, lambda r: e0_radial(spec, r))
    if ell == 1:
        return sample(grid, lambda r: du_radial(spec, r))
    return None


def assemble_A_sector(grid: RadialGrid, spec: BubbleSpec, ell: int) -> SectorOperator:
    c = spec.constants.c
    K = sector_stiffness(grid, ell)
    P = potential_matrix(grid, spec, ell)
    A = c * K - P
    A = 0.5 * (A + A.T)
    return SectorOperator(ell=ell, kind="A", c=c, A_form=A, gram=K, potential=P,
                          rank_one=None, kernel_mode=analytic_kernel_mode(grid, spec, ell),
                          grid=grid, spec=spec)


def assemble_Lplus_sector(grid: RadialGrid, spec: BubbleSpec, ell: int) -> SectorOperator:
    op = assemble_A_sector(grid, spec, ell)
    b = spec.params.b
    if ell != 0 or b == 0.0:
        # angular orthogonality removes the pairing exactly; no numerical cancellation
        return replace(op, kind="Lplus")
    g = nonlocal_vector(grid, spec)
    g.setflags(write=False)
    return replace(op, kind="Lplus", rank_one=(2.0 * b, g))


def assemble_sector(grid: RadialGrid, spec: BubbleSpec, ell: int, kind: str = "Lplus"):
    if kind == "Lplus":
        return assemble_Lplus_sector(grid, spec, ell)
    if kind == "A":
        return assemble_A_sector(grid, spec, ell)
    raise ValueError(f"unknown operator kind {kind!r}")


# -- linear algebra --------------------------------------------------------

def _jacobi(op: SectorOperator) -> np.ndarray:
    return 1.0 / np.sqrt(np.diag(op.gram))


def complement_basis(op: SectorOperator, mode) -> np.ndarray:
    """Columns spanning the Gram-orthogonal complement of ``mode``.

    Built in Jacobi-scaled coordinates, which keeps the projected systems far
    better conditioned than the raw nodal basis.
    """
    d = _jacobi(op)
    w = (op.gram @ np.asarray(mode, dtype=float)) * d
    Z = linalg.null_space(w[None, :])
    return d[:, None] * Z


def dual_norm(op: SectorOperator, r) -> float:
    """``sqrt(r^T G^{-1} r)``: size of a form residual as a functional on D."""
    d = _jacobi(op)
    cf = linalg.cho_factor(d[:, None] * op.gram * d[None, :])
    y = linalg.cho_solve(cf, d * np.asarray(r, dtype=float))
    return float(np.sqrt(max((d * r) @ y, 0.0)))


def gram_norm(op: SectorOperator, f) -> float:
    f = np.asarray(f, dtype=float)
    return float(np.sqrt(f @ op.gram @ f))


def gram_cosine(op: SectorOperator, f, g) -> float:
    """Cosine of the angle between ``f`` and ``g`` in the Gram metric."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    cos = float((f @ op.gram @ g) / (gram_norm(op, f) * gram_norm(op, g)))
    return min(max(cos, -1.0), 1.0)


@dataclass(frozen=True)
class RankOneSolution:
    x: np.ndarray
    denominator: float   # 1 + coef g^T A^{-1} g on the working subspace
    pairing: float       # g^T x (zero when there is no rank-one term)


def rank_one_solve(op: SectorOperator, rhs, deflate="auto") -> RankOneSolution:
    """Solve ``(A_form + coef g g^T) x = rhs`` by Sherman-Morrison.

    The local form is singular along its kernel mode, so by default the solve
    runs on the Gram-orthogonal complement of ``op.kernel_mode`` (pass
    ``deflate=None`` to solve on the full space, or a vector to deflate it
    instead).  Two solves with one LU factorization of the projected,
    Jacobi-scaled ``A_form``: one for ``rhs``, one for ``g``.
    """
    rhs = np.asarray(rhs, dtype=float)
    if isinstance(deflate, str) and deflate == "auto":
        deflate = op.kernel_mode
    if deflate is None:
        Z = np.diag(_jacobi(op))
    else:
        Z = complement_basis(op, deflate)
    A0, r0 = Z.T @ op.A_form @ Z, Z.T @ rhs

    lu, piv, info = lapack.dgetrf(A0)
    rcond, _ = lapack.dgecon(lu, np.linalg.norm(A0, 1)) if info == 0 else (0.0, None)
    if rcond < RCOND_MIN:
        raise DegenerateSolveError(f"A_form is singular on the working subspace (rcond {rcond:.1e})")

    y = linalg.lu_solve((lu, piv), r0)
    if op.rank_one is None:
        den, pairing = 1.0, 0.0
    else:
        coef, g = op.rank_one
        g0 = Z.T @ g
        z = linalg.lu_solve((lu, piv), g0)
        den = 1.0 + coef * float(g0 @ z)
        if abs(den) < 1e-10:
            raise DegenerateSolveError(f"Sherman-Morrison denominator {den:.3e} vanishes")
        y = y - coef * float(g0 @ y) / den * z
    x = Z @ y
    if op.rank_one is not None:
        pairing = float(op.rank_one[1] @ x)
    return RankOneSolution(x=x, denominator=float(den), pairing=pairing)
