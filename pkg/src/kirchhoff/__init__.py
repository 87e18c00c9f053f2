"""Numerical verification of positive solutions of the critical Kirchhoff equation

    -(a + b int |grad u|^2) Laplace(u) = u^5    in R^3

and of the nondegeneracy of their linearization.

Modules
-------
closed_form   explicit solution family, derivatives, kernel modes, residuals
quadrature    adaptive radial quadrature used as an independent oracle
radial_grid   compactified Chebyshev grid and sector-wise bilinear forms
operators     linearized operators per angular sector, rank-one solves
spectral      kernel counts, proof-chain checks, refinement studies
shooting      ODE shooting and the fixed-point oracle for the coefficient c
report        verification reports (JSON / CSV)
cli           command-line front end
"""
from .closed_form import (
    GRADQ_NORM_SQ,
    Q0,
    BubbleSpec,
    DomainError,
    KirchhoffParams,
    ScalingConstants,
    eval_Q,
    eval_u,
    kappa,
    residual,
    scaling_constants,
)
from .report import FAIL, INCONCLUSIVE, PASS, Check, KernelSummary, VerificationReport

__version__ = "0.1.0"

__all__ = [
    "GRADQ_NORM_SQ", "Q0", "BubbleSpec", "DomainError", "KirchhoffParams", "ScalingConstants",
    "eval_Q", "eval_u", "kappa", "residual", "scaling_constants",
    "FAIL", "INCONCLUSIVE", "PASS", "Check", "KernelSummary", "VerificationReport",
]
