import numpy as np
import pytest

from kirchhoff import closed_form as cf
from kirchhoff.closed_form import BubbleSpec, KirchhoffParams
from kirchhoff.operators import assemble_A_sector, assemble_Lplus_sector
from kirchhoff.radial_grid import build_grid, default_grid_spec, sample
from kirchhoff.report import PASS
from kirchhoff.spectral import (
    EigenResult,
    convergence_sweep,
    kernel_report,
    lowest_eigenpairs,
    negative_index,
    proof_chain_check,
    restricted_spectrum,
    summarize_sector,
)


def sphere_ratios(ell, count):
    """Exact mu / c of the local form in sector ``ell``.

    Stereographic projection turns ``-Laplace phi = nu Q^4 phi`` into the
    conformal Laplacian on S^3 (u^4 is 3/4 of the conformal factor), whose
    degree-k harmonics give ``nu_k = (4k(k+2) + 3)/3``; sector ``ell`` holds
    the degrees ``k >= ell``.  Then ``mu = c (1 - 5/nu_k)``.
    """
    return np.array([1.0 - 15.0 / (4 * k * (k + 2) + 3) for k in range(ell, ell + count)])


@pytest.mark.parametrize("ell", [0, 1, 2, 3, 4])
def test_local_spectrum_matches_sphere(grid256, spec11, ell):
    op = assemble_A_sector(grid256, spec11, ell)
    mu = lowest_eigenpairs(op, 4).eigenvalues / op.c
    np.testing.assert_allclose(mu, sphere_ratios(ell, 4), atol=1e-9)


def test_full_radial_spectrum_shifts_only_the_negative_direction(grid256, spec11):
    op = assemble_Lplus_sector(grid256, spec11, 0)
    mu = lowest_eigenpairs(op, 4).eigenvalues
    c, b = op.c, spec11.params.b
    gu = cf.grad_u_norm_sq(spec11)
    # u spans the negative direction and A u = -4 u^5 makes it an eigenvector
    expected = np.concatenate(([-4.0 * c + 2.0 * b * gu], c * sphere_ratios(0, 4)[1:]))
    np.testing.assert_allclose(mu, expected, atol=1e-8 * c)


def test_eigenvectors_gram_orthonormal(grid128, spec11):
    op = assemble_Lplus_sector(grid128, spec11, 0)
    X = lowest_eigenpairs(op, 5).eigenvectors
    np.testing.assert_allclose(X.T @ op.gram @ X, np.eye(5), atol=1e-10)
    with pytest.raises(ValueError):
        lowest_eigenpairs(op, 0)


@pytest.fixture(scope="module")
def report11(grid256, spec11):
    return kernel_report(grid256, spec11, l_max=4)


def test_kernel_report_one_one(report11):
    ks = report11.kernel
    assert report11.status == PASS
    assert ks.dim == 4
    assert ks.counts == {0: 1, 1: 1, 2: 0, 3: 0, 4: 0}
    assert ks.alignments[0] > 0.999 and ks.alignments[1] > 0.999


def test_radial_sector_kernel(report11):
    ks = report11.kernel
    near = [m for m in ks.eigenvalues[0] if abs(m) < ks.tol_kernel]
    assert len(near) == 1


def test_sector2_gap_not_below_sector1(report11):
    g = report11.kernel.sector_gaps
    # the two gaps coincide exactly (both 4c/7); require no drop
    assert g[2] >= g[1] * (1 - 1e-8)
    assert g[3] > g[2] and g[4] > g[3]


@pytest.mark.parametrize("b", [0.0, 1e-8])
def test_kernel_yamabe_limit(b):
    spec = BubbleSpec(KirchhoffParams(1.0, b))
    rep = kernel_report(build_grid(default_grid_spec(spec, 256)), spec, l_max=4)
    assert rep.status == PASS
    assert rep.kernel.dim == 4


def test_local_operator_radial_kernel(grid256, spec11):
    rep = kernel_report(grid256, spec11, l_max=2, kind="A")
    assert rep.kernel.counts[0] == 1
    assert rep.kernel.negative_index[0] == 1


def test_kernel_report_general_member():
    spec = BubbleSpec(KirchhoffParams(0.3, 4.0), lam=2.5, x0=(1.0, -0.5, 0.2))
    rep = kernel_report(build_grid(default_grid_spec(spec, 192)), spec, l_max=4)
    assert rep.status == PASS and rep.kernel.dim == 4


def test_kernel_report_threads_match_serial(grid128, spec11):
    a = kernel_report(grid128, spec11, l_max=3, workers=1)
    b = kernel_report(grid128, spec11, l_max=3, workers=3)
    assert a.to_json() == b.to_json()


def test_kernel_report_rejects_small_lmax(grid128, spec11):
    with pytest.raises(ValueError):
        kernel_report(grid128, spec11, l_max=1)


def test_tiny_tolerance_is_reported(grid128, spec11):
    rep = kernel_report(grid128, spec11, l_max=2, tol_kernel=1e-30)
    assert rep.kernel.dim == 0
    assert rep.status != PASS


def test_negative_index(grid256, spec11):
    A0 = assemble_A_sector(grid256, spec11, 0)
    u = sample(grid256, lambda r: cf.u_radial(spec11, r))
    assert u @ A0.form @ u < 0.0
    assert negative_index(A0) >= 1
    assert negative_index(assemble_Lplus_sector(grid256, spec11, 3)) == 0
    assert negative_index(assemble_Lplus_sector(grid256, spec11, 0)) == 1


def test_counts_stable_under_refinement(spec11, report11):
    coarse = kernel_report(build_grid(default_grid_spec(spec11, 128)), spec11, l_max=4)
    assert coarse.kernel.counts == report11.kernel.counts


def test_restricted_spectrum_has_no_kernel(grid256, spec11):
    L0 = assemble_Lplus_sector(grid256, spec11, 0)
    mu = restricted_spectrum(L0, L0.kernel_mode)
    assert np.min(np.abs(mu)) > 0.5 * L0.c


@pytest.mark.parametrize("a, b, lam", [(1.0, 1.0, 1.0), (0.5, 3.0, 2.0), (10.0, 0.1, 0.5), (1.0, 0.0, 1.0)])
def test_proof_chain(a, b, lam):
    spec = BubbleSpec(KirchhoffParams(a, b), lam=lam)
    rep = proof_chain_check(build_grid(default_grid_spec(spec, 256)), spec)
    assert rep.status == PASS, [c for c in rep.checks if not c.passed]
    assert rep.data["denominator"] == pytest.approx(1.0 - cf.kappa(spec.params), abs=1e-8)


@pytest.fixture(scope="module")
def sweep11(spec11):
    return convergence_sweep(spec11, [96, 128, 192, 256], l_max=4)


def test_sweep_passes(sweep11):
    assert sweep11.status == PASS, [c for c in sweep11.checks if not c.passed]
    assert [h["dim"] for h in sweep11.convergence] == [4, 4, 4, 4]


def test_sweep_gap_stable(sweep11):
    g = [h["sector_gaps"]["2"] for h in sweep11.convergence]
    assert abs(g[-1] - g[-2]) / g[-1] < 0.10


def test_sweep_kernel_eigenvalues_fall_then_floor(spec11):
    # before the rounding floor the kernel eigenvalues fall fast
    rep = convergence_sweep(spec11, [16, 20, 24], l_max=2)
    for ell in ("0", "1"):
        vals = [h["kernel_eigenvalues"][ell] for h in rep.convergence]
        assert None not in vals
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_sweep_rejects_bad_sizes(spec11):
    with pytest.raises(ValueError):
        convergence_sweep(spec11, [128])
    with pytest.raises(ValueError):
        convergence_sweep(spec11, [128, 96])


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_local_and_full_spectra_agree_off_radial_sector(grid128, spec11, ell):
    a = lowest_eigenpairs(assemble_A_sector(grid128, spec11, ell), 5).eigenvalues
    b = lowest_eigenpairs(assemble_Lplus_sector(grid128, spec11, ell), 5).eigenvalues
    np.testing.assert_array_equal(a, b)


def test_counts_unchanged_by_eigenvector_sign(grid128, spec11):
    op = assemble_Lplus_sector(grid128, spec11, 0)
    eig = lowest_eigenpairs(op, 5)
    flipped = EigenResult(eig.ell, eig.kind, eig.eigenvalues, -eig.eigenvectors)
    s1 = summarize_sector(op, eig, 1e-8)
    s2 = summarize_sector(op, flipped, 1e-8)
    assert (s1.count, s1.gap, s1.alignment) == (s2.count, s2.gap, s2.alignment)


def test_eigenvector_sign_convention(grid128, spec11):
    X = lowest_eigenpairs(assemble_Lplus_sector(grid128, spec11, 1), 4).eigenvectors
    idx = np.argmax(np.abs(X), axis=0)
    assert np.all(X[idx, np.arange(X.shape[1])] > 0)


def test_scaling_covariance(params11):
    reps = []
    for lam in (1.0, 2.0):
        spec = BubbleSpec(params11, lam=lam)
        reps.append(kernel_report(build_grid(default_grid_spec(spec, 160)), spec, l_max=3).kernel)
    assert reps[0].counts == reps[1].counts
    for ell in range(4):
        assert reps[0].sector_gaps[ell] == pytest.approx(reps[1].sector_gaps[ell], rel=1e-9)
