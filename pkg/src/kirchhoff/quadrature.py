"""Adaptive quadrature oracle for radial integrals on [0, inf).

Independent of the collocation grid: QUADPACK's adaptive Gauss-Kronrod rule
on ``[0, R]`` plus the tail ``[R, inf)`` mapped onto ``(0, 1]`` by
``r = R / s``.  Used to confirm closed-form constants and to cross-check the
grid quadrature.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .closed_form import GRADQ_NORM_SQ

_EPSREL = 1e-13
_EPSABS = 1e-15


def adaptive_radial_integral(f, r_split: float = 1.0, *, epsrel: float = _EPSREL,
                             epsabs: float = _EPSABS, points=None) -> float:
    """Integrate a scalar function ``f(r)`` over ``[0, inf)``.

    ``r_split`` should sit near the scale where the integrand turns over.
    """
    if r_split <= 0.0:
        raise ValueError("r_split must be positive")
    core, _ = integrate.quad(f, 0.0, r_split, epsrel=epsrel, epsabs=epsabs,
                             limit=400, points=points)

    def mapped(s):
        if s == 0.0:
            return 0.0
        return f(r_split / s) * r_split / (s * s)

    tail, _ = integrate.quad(mapped, 0.0, 1.0, epsrel=epsrel, epsabs=epsabs, limit=400)
    return core + tail


def radial_l2_pairing(f, g, r_split: float = 1.0) -> float:
    """``4 pi int_0^inf f(r) g(r) r^2 dr`` for radial functions on R^3."""
    return 4.0 * np.pi * adaptive_radial_integral(lambda r: f(r) * g(r) * r * r, r_split)


def _dQ(r):
    # derivative of 3^{1/4} (1 + r^2)^{-1/2}, written out here so the oracle
    # does not route through closed_form's evaluation helpers
    return -(3.0 ** 0.25) * r * (1.0 + r * r) ** -1.5


@functools.cache
def gradQ_by_quadrature() -> float:
    """``4 pi int_0^inf Q'(r)^2 r^2 dr`` by adaptive quadrature."""
    return radial_l2_pairing(_dQ, _dQ)


@functools.cache
def Q6_by_quadrature() -> float:
    """``4 pi int_0^inf Q(r)^6 r^2 dr``; equals ``||grad Q||^2`` since ``-Laplace Q = Q^5``."""
    return 4.0 * np.pi * adaptive_radial_integral(
        lambda r: 3.0 ** 1.5 * (1.0 + r * r) ** -3 * r * r)


@dataclass(frozen=True)
class ConstantCheck:
    quadrature: float
    closed_form: float
    rel_error: float

    def ok(self, tol: float = 1e-10) -> bool:
        return self.rel_error < tol


def verify_gradQ_closed_form() -> ConstantCheck:
    q = gradQ_by_quadrature()
    return ConstantCheck(q, GRADQ_NORM_SQ, abs(q - GRADQ_NORM_SQ) / GRADQ_NORM_SQ)
