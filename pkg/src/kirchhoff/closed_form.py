"""Closed-form positive solutions of the critical Kirchhoff equation on R^3.

Every positive energy solution of

    -(a + b * int |grad u|^2) Laplace(u) = u^5    in R^3

is a rescaled Aubin-Talenti bubble ``Q(x) = 3**0.25 / sqrt(1 + |x|^2)``:

    u(x) = lam**-0.5 * Q((x / sqrt(c) - x0) / lam),

where the nonlocal coefficient ``c = a + b * int |grad u|^2`` depends only on
``(a, b)``.  This module evaluates those functions, their derivatives and the
kernel modes of the linearization analytically.  Points are arrays whose last
axis has length 3; radii are arrays of nonnegative reals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

Q0 = 3.0 ** 0.25
#: int_{R^3} |grad Q|^2, confirmed against adaptive quadrature in
#: :mod:`kirchhoff.quadrature` (see ``verify_gradQ_closed_form``).
GRADQ_NORM_SQ = 3.0 * math.sqrt(3.0) * math.pi ** 2 / 4.0


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class KirchhoffParams:
    """Coefficients ``a > 0`` and ``b >= 0`` of the Kirchhoff equation.

    ``b = 0`` is accepted: it is the Yamabe (local) limit of the problem.
    """

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise DomainError(f"coefficients must be finite, got a={a}, b={b}")
        if a <= 0.0:
            raise DomainError(f"a must be positive, got {a}")
        if b < 0.0:
            raise DomainError(f"b must be nonnegative, got {b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class ScalingConstants:
    gradQ_sq: float
    sqrt_c: float
    c: float


@dataclass(frozen=True)
class BubbleSpec:
    """One member of the solution family, fixed by ``(a, b, lam, x0)``.

    ``x0`` is stored exactly as it enters ``Q((x/sqrt(c) - x0)/lam)``; the
    physical center of the bubble is ``center = sqrt(c) * x0``.
    """

    params: KirchhoffParams
    lam: float = 1.0
    x0: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))

    def __post_init__(self):
        lam = float(self.lam)
        if not np.isfinite(lam) or lam <= 0.0:
            raise DomainError(f"lam must be positive and finite, got {self.lam}")
        x0 = tuple(float(v) for v in self.x0)
        if len(x0) != 3 or not all(np.isfinite(x0)):
            raise DomainError(f"x0 must be three finite reals, got {self.x0}")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "x0", x0)

    @property
    def constants(self) -> ScalingConstants:
        return scaling_constants(self.params)

    @property
    def center(self) -> np.ndarray:
        """Center of the bubble in physical coordinates."""
        return self.constants.sqrt_c * np.asarray(self.x0)

    @property
    def length_scale(self) -> float:
        """Radial scale ``sqrt(c) * lam`` at which u drops to u(center)/sqrt(2)."""
        return self.constants.sqrt_c * self.lam


def _radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise DomainError("radius must be finite")
    if np.any(r < 0.0):
        raise DomainError("radius must be nonnegative")
    return r


def _points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (3,):
        raise DomainError(f"points must have a trailing axis of length 3, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("points must be finite")
    return x


def eval_Q(r):
    """Aubin-Talenti bubble ``3**(1/4) (1 + r^2)**(-1/2)``."""
    r = _radius(r)
    return Q0 / np.sqrt(1.0 + r * r)


def gradQ_norm_sq() -> float:
    """``||grad Q||_2^2 = 3 sqrt(3) pi^2 / 4``."""
    return GRADQ_NORM_SQ


def scaling_constants(params: KirchhoffParams) -> ScalingConstants:
    """Positive root of ``c = a + b sqrt(c) ||grad Q||^2``."""
    g = GRADQ_NORM_SQ
    a, b = params.a, params.b
    bg = b * g
    # bg + sqrt(bg^2 + 4a) has no cancellation; both terms are nonnegative
    sqrt_c = 0.5 * (bg + math.sqrt(bg * bg + 4.0 * a))
    # c from the defining relation rather than sqrt_c**2: exact (c = a) when b = 0
    return ScalingConstants(gradQ_sq=g, sqrt_c=float(sqrt_c), c=float(a + bg * sqrt_c))


# -- profiles in the bubble's own radial coordinate ------------------------
#
# With s = sqrt(c), rho = r / (s lam) and amplitude k = lam**-0.5:
#   u   = k Q(rho)
#   u'  = k Q'(rho) / (s lam)
#   e0  = k (Q/2 + rho Q')(rho)
# All radial functions below are measured from the bubble center.

def _rho(spec: BubbleSpec, r):
    return _radius(r) / spec.length_scale


def u_radial(spec: BubbleSpec, r):
    """u as a function of the distance r from its center."""
    rho = _rho(spec, r)
    return spec.lam ** -0.5 * Q0 / np.sqrt(1.0 + rho * rho)


def du_radial(spec: BubbleSpec, r):
    """Radial derivative u'(r)."""
    rho = _rho(spec, r)
    return -spec.lam ** -0.5 * Q0 * rho * (1.0 + rho * rho) ** -1.5 / spec.length_scale


def d2u_radial(spec: BubbleSpec, r):
    rho = _rho(spec, r)
    q2 = Q0 * (2.0 * rho * rho - 1.0) * (1.0 + rho * rho) ** -2.5
    return spec.lam ** -0.5 * q2 / spec.length_scale ** 2


def e0_radial(spec: BubbleSpec, r):
    """Dilation mode ``u/2 + r u'(r)``."""
    rho = _rho(spec, r)
    return spec.lam ** -0.5 * Q0 * (1.0 - rho * rho) / (2.0 * (1.0 + rho * rho) ** 1.5)


def de0_radial(spec: BubbleSpec, r):
    rho = _rho(spec, r)
    val = Q0 * rho * (rho * rho - 5.0) / (2.0 * (1.0 + rho * rho) ** 2.5)
    return spec.lam ** -0.5 * val / spec.length_scale


def laplacian_e0_radial(spec: BubbleSpec, r):
    rho = _rho(spec, r)
    val = 15.0 * Q0 * (rho * rho - 1.0) / (2.0 * (1.0 + rho * rho) ** 3.5)
    return spec.lam ** -0.5 * val / spec.length_scale ** 2


# -- pointwise evaluation in R^3 -------------------------------------------

def _offset(spec: BubbleSpec, x):
    x = _points(x)
    return x - spec.center


def eval_u(spec: BubbleSpec, x):
    """``lam**-0.5 Q((x/sqrt(c) - x0)/lam)`` at points ``x`` (shape ``(..., 3)``)."""
    d = _offset(spec, x)
    return u_radial(spec, np.linalg.norm(d, axis=-1))


def eval_grad_u(spec: BubbleSpec, x):
    d = _offset(spec, x)
    ell = spec.length_scale
    rho2 = np.sum(d * d, axis=-1) / ell ** 2
    factor = -spec.lam ** -0.5 * Q0 * (1.0 + rho2) ** -1.5 / ell ** 2
    return factor[..., None] * d


def eval_laplacian_u(spec: BubbleSpec, x):
    """Exact Laplacian; equals ``-u**5 / c`` up to rounding."""
    d = _offset(spec, x)
    ell = spec.length_scale
    rho2 = np.sum(d * d, axis=-1) / ell ** 2
    return -3.0 * spec.lam ** -0.5 * Q0 * (1.0 + rho2) ** -2.5 / ell ** 2


def grad_u_norm_sq(spec: BubbleSpec) -> float:
    """``int |grad u|^2 = sqrt(c) ||grad Q||^2``, independent of lam and x0."""
    k = spec.constants
    return k.sqrt_c * k.gradQ_sq


def dilation_mode(spec: BubbleSpec, x):
    """``u/2 + (x - center) . grad u``."""
    d = _offset(spec, x)
    return e0_radial(spec, np.linalg.norm(d, axis=-1))


def laplacian_dilation_mode(spec: BubbleSpec, x):
    d = _offset(spec, x)
    return laplacian_e0_radial(spec, np.linalg.norm(d, axis=-1))


def translation_mode(spec: BubbleSpec, i: int, x):
    """Partial derivative ``du/dx_i`` for axis ``i`` in {1, 2, 3}."""
    if i not in (1, 2, 3):
        raise DomainError(f"axis index must be 1, 2 or 3, got {i}")
    return eval_grad_u(spec, x)[..., i - 1]


def laplacian_translation_mode(spec: BubbleSpec, i: int, x):
    """Laplacian of ``du/dx_i`` from the explicit third derivatives of Q.

    Not derived from ``Laplace(u) = -u^5/c``; that shortcut would make the
    kernel identity for translation modes hold by construction.
    """
    if i not in (1, 2, 3):
        raise DomainError(f"axis index must be 1, 2 or 3, got {i}")
    d = _offset(spec, x)
    ell = spec.length_scale
    z = d / ell
    rho2 = np.sum(z * z, axis=-1)
    # Laplace_z of z_i (1+|z|^2)^{-3/2} = z_i * (15 |z|^2 (1+|z|^2)^{-7/2} - 15 (1+|z|^2)^{-5/2})
    lap = z[..., i - 1] * 15.0 * (rho2 * (1.0 + rho2) ** -3.5 - (1.0 + rho2) ** -2.5)
    return -spec.lam ** -0.5 * Q0 * lap / ell ** 3


# -- residual of the Kirchhoff equation ------------------------------------

class Candidate(Protocol):
    """Anything that can be plugged into :func:`residual`."""

    params: KirchhoffParams
    grad_norm_sq: float

    def value(self, x): ...

    def laplacian(self, x): ...


@dataclass(frozen=True)
class ScaledBubble:
    """``amplitude * Q((x - center)/scale)``, tested against a given (a, b).

    Used to feed functions that are *not* solutions through :func:`residual`.
    """

    params: KirchhoffParams
    amplitude: float = Q0
    scale: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def grad_norm_sq(self) -> float:
        return (self.amplitude / Q0) ** 2 * self.scale * GRADQ_NORM_SQ

    def value(self, x):
        d = _points(x) - np.asarray(self.center)
        rho2 = np.sum(d * d, axis=-1) / self.scale ** 2
        return self.amplitude / np.sqrt(1.0 + rho2)

    def laplacian(self, x):
        d = _points(x) - np.asarray(self.center)
        rho2 = np.sum(d * d, axis=-1) / self.scale ** 2
        return -3.0 * self.amplitude * (1.0 + rho2) ** -2.5 / self.scale ** 2


def residual(candidate, x):
    """``-(a + b int|grad v|^2) Laplace(v)(x) - v(x)^5``.

    ``candidate`` is either a :class:`BubbleSpec` (analytic derivatives) or
    an object exposing ``params``, ``grad_norm_sq``, ``value`` and
    ``laplacian`` (see :class:`Candidate`).
    """
    if isinstance(candidate, BubbleSpec):
        p = candidate.params
        coeff = p.a + p.b * grad_u_norm_sq(candidate)
        v = eval_u(candidate, x)
        lap = eval_laplacian_u(candidate, x)
    else:
        p = candidate.params
        coeff = p.a + p.b * candidate.grad_norm_sq
        v = candidate.value(x)
        lap = candidate.laplacian(x)
    return -coeff * lap - v ** 5


def A_apply_u(spec: BubbleSpec, x):
    """Pointwise ``c (-Laplace u) - 5 u^4 u``; should equal ``-4 u^5``."""
    c = spec.constants.c
    u = eval_u(spec, x)
    return -c * eval_laplacian_u(spec, x) - 5.0 * u ** 5


def A_apply_e0(spec: BubbleSpec, x):
    """Pointwise ``c (-Laplace e0) - 5 u^4 e0``; should vanish."""
    c = spec.constants.c
    u = eval_u(spec, x)
    return -c * laplacian_dilation_mode(spec, x) - 5.0 * u ** 4 * dilation_mode(spec, x)


def A_apply_translation(spec: BubbleSpec, i: int, x):
    c = spec.constants.c
    u = eval_u(spec, x)
    return -c * laplacian_translation_mode(spec, i, x) - 5.0 * u ** 4 * translation_mode(spec, i, x)


def kappa(params: KirchhoffParams) -> float:
    """Contraction factor ``b int|grad u|^2 / (2c)``; always below 1/2."""
    k = scaling_constants(params)
    return params.b * k.sqrt_c * k.gradQ_sq / (2.0 * k.c)
