import numpy as np
import pytest
from scipy.linalg import eigh

from robinwg.errors import NearSpectrumError, SingularDenominatorError
from robinwg.transverse import (IMAGINARY, ZERO, asymmetric_spectrum,
                                beta_coefficient, beta_table,
                                lambda2_coefficient, mu_table,
                                perturbation_coefficients, resolvent_kernel,
                                symmetric_spectrum)

D = 1.0


def bisect_longdouble(f, lo, hi, iters=200):
    """Plain bisection in extended precision; the independent root oracle."""
    lo, hi = np.longdouble(lo), np.longdouble(hi)
    flo = f(lo)
    for _ in range(iters):
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


# --- frozen oracle values (computed by the bisection oracle below) ---------
KAPPA_HALF = 0.771702319209104      # kappa tanh(kappa) = 0.5
P0_ALPHA1 = 0.860333589019380       # p tan(p) = 1


def test_bisection_oracle_pins_negative_mode():
    root = bisect_longdouble(lambda k: k * np.tanh(k) - np.longdouble(0.5),
                             1e-8, 10.0)
    assert abs(float(root) - KAPPA_HALF) < 1e-14
    mode = symmetric_spectrum(-0.5, D, 0)[0]
    assert mode.branch == IMAGINARY
    assert abs(mode.eigenvalue - (-float(root) ** 2)) < 1e-13


def test_bisection_oracle_pins_first_even_root():
    root = bisect_longdouble(lambda p: p * np.tan(p) - np.longdouble(1.0),
                             1e-8, np.pi / 2 - 1e-8)
    assert abs(float(root) - P0_ALPHA1) < 1e-14
    mode = symmetric_spectrum(1.0, D, 0)[0]
    assert abs(mode.k - float(root)) < 1e-13


def test_neumann_spectrum_analytic():
    modes = symmetric_spectrum(0.0, D, 5)
    for n, m in enumerate(modes):
        assert abs(m.eigenvalue - (n * np.pi / 2) ** 2) < 1e-12
    assert modes[0].branch == ZERO


def test_negative_eigenvalue_counts():
    for alpha, expected in ((0.5, 0), (2.0, 0), (0.0, 0), (-0.5, 1),
                            (-0.999, 1), (-1.5, 2), (-4.0, 2)):
        modes = symmetric_spectrum(alpha, D, 5)
        n_neg = sum(m.eigenvalue < -1e-12 for m in modes)
        assert n_neg == expected, (alpha, n_neg)


def test_eigencondition_residuals():
    rng = np.random.default_rng(0)
    for _ in range(20):
        alpha = rng.uniform(-4, 4)
        for m in symmetric_spectrum(alpha, D, 8):
            assert m.residual() < 1e-12


def test_orthonormality_gram():
    x, w = np.polynomial.legendre.leggauss(400)
    u = x * D
    wq = w * D
    for alpha in (0.7, -1.8, 3.0):
        modes = symmetric_spectrum(alpha, D, 9)
        cols = np.array([m(u) for m in modes])
        G = (cols * wq) @ cols.T
        assert np.max(np.abs(G - np.eye(10))) < 1e-10


def test_asymmetric_reduces_to_symmetric():
    for alpha in (0.4, -0.7, 2.2):
        sym = symmetric_spectrum(alpha, D, 5)
        asym = asymmetric_spectrum(alpha, alpha, D, 5)
        for ms, ma in zip(sym, asym):
            assert abs(ms.eigenvalue - ma.eigenvalue) < 1e-12


def test_swap_invariance():
    a1, a2 = 0.3, -1.1
    e1 = [m.eigenvalue for m in asymmetric_spectrum(a1, a2, D, 5)]
    e2 = [m.eigenvalue for m in asymmetric_spectrum(a2, a1, D, 5)]
    assert np.allclose(e1, e2, rtol=0, atol=1e-12)


def test_asymmetric_residuals_and_boundary_conditions():
    rng = np.random.default_rng(1)
    for _ in range(10):
        a1, a2 = rng.uniform(-3, 3, 2)
        for m in asymmetric_spectrum(a1, a2, D, 6):
            assert m.residual() < 1e-12
            # boundary conditions satisfied by the recovered coefficients
            bc1 = m.deriv(D) + a1 * m(D)
            bc2 = -m.deriv(-D) + a2 * m(-D)
            scale = max(1.0, abs(m.k)) * (1 + abs(a1) + abs(a2))
            assert abs(bc1) < 1e-10 * scale
            assert abs(bc2) < 1e-10 * scale


def test_asymmetric_zero_mode():
    # 2 d a1 a2 + a1 + a2 = 0 puts an eigenvalue exactly at zero
    a1 = 1.0
    a2 = -a1 / (2 * D * a1 + 1)
    modes = asymmetric_spectrum(a1, a2, D, 3)
    assert any(m.branch == ZERO for m in modes)
    mz = next(m for m in modes if m.branch == ZERO)
    u = np.linspace(-D, D, 11)
    # eigenfunction is linear
    assert np.max(np.abs(np.diff(mz(u), 2))) < 1e-12


def test_eigenvalue_count_matches_finite_differences():
    rng = np.random.default_rng(7)
    n_grid = 500
    hu = 2 * D / n_grid
    trials = 0
    while trials < 20:
        a1, a2 = rng.uniform(-3, 3, 2)
        modes = asymmetric_spectrum(a1, a2, D, 9)
        eigs = np.array([m.eigenvalue for m in modes])
        lam_cut = rng.uniform(eigs[0] - 1.0, eigs[-1])
        if np.min(np.abs(eigs - lam_cut)) < 0.2:
            continue  # avoid count flips from FD eigenvalue error near the cut
        B = np.zeros((n_grid + 1, n_grid + 1))
        idx = np.arange(1, n_grid)
        B[idx, idx] = 2 / hu ** 2
        B[idx, idx - 1] = B[idx, idx + 1] = -1 / hu ** 2
        B[0, 0] = (2 + 2 * hu * a2) / hu ** 2
        B[0, 1] = -2 / hu ** 2
        B[-1, -1] = (2 + 2 * hu * a1) / hu ** 2
        B[-1, -2] = -2 / hu ** 2
        w = np.ones(n_grid + 1)
        w[0] = w[-1] = 0.5
        fd = eigh(w[:, None] * B, np.diag(w), eigvals_only=True)
        assert np.sum(fd < lam_cut) == np.sum(eigs < lam_cut)
        trials += 1


def test_mu_curves_monotone_in_alpha():
    grid = np.linspace(-5, 5, 81)
    rows = mu_table(grid, D, 3)
    mus = np.array([r[1] for r in rows])
    assert np.all(np.diff(mus, axis=0) > 0)


# ---------------------------------------------------------------------------
# resolvent kernel
# ---------------------------------------------------------------------------

def neumann_mode(n, d):
    p0 = n * np.pi / (2 * d)
    if n == 0:
        return (lambda u: np.ones_like(np.asarray(u, float)) / np.sqrt(2 * d)), 0.0
    if n % 2 == 0:
        return (lambda u: np.cos(p0 * u) / np.sqrt(d)), p0 * p0
    return (lambda u: np.sin(p0 * u) / np.sqrt(d)), p0 * p0


def neumann_kernel_images(w, d, u, up, n_images=200):
    """Interval Neumann kernel by the method of images (all + signs)."""
    tot = 0.0j
    for m in range(-n_images, n_images + 1):
        tot += np.exp(1j * w * abs(u - up - 4 * d * m))
        tot += np.exp(1j * w * abs(u + up - 2 * d - 4 * d * m))
    return 1j / (2 * w) * tot


def test_kernel_symmetry():
    rng = np.random.default_rng(3)
    k = np.sqrt(2.3 + 1.7j)
    for _ in range(100):
        a1, a2 = rng.uniform(-2, 2, 2)
        u, up = rng.uniform(-D, D, 2)
        g1 = resolvent_kernel(a1, a2, D, k, u, up)
        g2 = resolvent_kernel(a1, a2, D, k, up, u)
        assert abs(g1 - g2) < 1e-12


def test_kernel_matches_spectral_sum():
    """Closed form vs the 200-eigenpair expansion.

    The raw truncated sum has an oscillatory O(1/N) tail, so it is telescoped
    against the Neumann reference problem whose eigen-data are elementary and
    whose kernel has an independent image-series representation; the
    difference series then converges absolutely like 1/n^3.
    """
    rng = np.random.default_rng(5)
    z = 2.3 + 1.7j
    w = np.sqrt(z)
    for alpha in (0.7, -0.9):
        modes = symmetric_spectrum(alpha, D, 200)
        nmods = [neumann_mode(n, D) for n in range(201)]
        for _ in range(25):
            u, up = rng.uniform(-D, D, 2)
            if abs(u - up) < 0.05:
                continue
            g0 = neumann_kernel_images(w, D, u, up)
            ssum = g0 + sum(
                m(u) * m(up) / (m.eigenvalue - z) - nf(u) * nf(up) / (nl - z)
                for m, (nf, nl) in zip(modes, nmods))
            gc = resolvent_kernel(alpha, alpha, D, w, u, up)
            assert abs(ssum - gc) < 1e-6


def test_kernel_pole_residue():
    # (lambda_0 - k^2) g -> phi_0(u) phi_0(u') as k^2 -> lambda_0
    alpha = 0.8
    m0 = symmetric_spectrum(alpha, D, 0)[0]
    u, up = 0.31, -0.66
    target = m0(u) * m0(up)
    vals = []
    for eta in (1e-3, 1e-4, 1e-5):
        z = m0.eigenvalue + eta * 1j
        g = resolvent_kernel(alpha, alpha, D, np.sqrt(z), u, up)
        vals.append((m0.eigenvalue - z) * g)
    # residues converge linearly in eta; extrapolate the 10:1 pair
    extrap = (10 * vals[2] - vals[1]) / 9
    assert abs(vals[2] - target) < 1e-4
    assert abs(extrap - target) < 1e-6


def test_kernel_near_spectrum_error():
    alpha = 0.8
    m0 = symmetric_spectrum(alpha, D, 0)[0]
    with pytest.raises(NearSpectrumError):
        resolvent_kernel(alpha, alpha, D, np.sqrt(m0.eigenvalue + 0j) + 1e-13,
                         0.3, 0.1)


# ---------------------------------------------------------------------------
# perturbation coefficients
# ---------------------------------------------------------------------------

def test_lambda2_landmarks_neumann():
    # alpha = 0: lambda2 = 1 for n >= 1 (beta 3/4); limit 1/4 at n = 0 (beta 0)
    for n in (1, 2, 3):
        pc = perturbation_coefficients(0.0, D, n)
        assert abs(pc.lambda2 - 1.0) < 1e-12
        assert abs(pc.beta - 0.75) < 1e-12
    pc0 = perturbation_coefficients(0.0, D, 0)
    assert abs(pc0.lambda2 - 0.25) < 1e-12
    assert abs(pc0.beta) < 1e-12


def test_lambda2_dirichlet_limit():
    # alpha -> -inf: only n >= 2 approach -1/4; the two modes riding the
    # negative eigenvalues are the documented anomalous pair
    for n in (0, 1, 2, 3):
        pc = perturbation_coefficients(1e4, D, n)
        assert abs(pc.beta - (-0.25)) < 1e-3
    for n in (2, 3):
        pc = perturbation_coefficients(-1e4, D, n)
        assert abs(pc.beta - (-0.25)) < 1e-3


def test_lambda2_singular_denominator_raises():
    # alpha + d (alpha^2 + mu) = 0 with mu away from the joint origin limit
    alpha = -2.0
    mu = -alpha / D - alpha ** 2  # forces the second factor to vanish
    with pytest.raises(SingularDenominatorError):
        lambda2_coefficient(alpha, mu, D)


def _asym_pair(alpha, eta, d=D):
    return (alpha - eta / (2 * (1 + d * eta)),
            alpha + eta / (2 * (1 - d * eta)))


def test_finite_eta_fit_matches_lambda2():
    """Quadratic fits of lambda_n(eta) pin the formula; linear term ~ 0."""
    rng = np.random.default_rng(11)
    etas = np.array([4e-3, 2e-3, 1e-3, 5e-4])
    X = np.vstack([np.ones_like(etas), D * etas, (D * etas) ** 2]).T
    for _ in range(10):
        alpha = rng.uniform(0.2, 3.0)
        n = int(rng.integers(0, 4))
        mode = symmetric_spectrum(alpha, D, n)[n]
        lams = []
        for eta in etas:
            a1, a2 = _asym_pair(alpha, eta)
            la = asymmetric_spectrum(a1, a2, D, n)[n].eigenvalue
            lams.append(la)
        coef, *_ = np.linalg.lstsq(X, np.array(lams), rcond=None)
        l2 = lambda2_coefficient(alpha, mode.eigenvalue, D)
        assert abs(coef[2] - l2) < 1e-3 * abs(l2)
        assert abs(coef[1]) < 1e-6 * abs(coef[2])


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def test_beta_table_neumann_row():
    rows = beta_table([0.0], D, 3)
    assert np.allclose(rows[0].beta, (0.0, 0.75, 0.75, 0.75), atol=1e-10)


def test_beta_table_large_alpha_row():
    rows = beta_table([1e4], D, 3)
    assert np.allclose(rows[0].beta, -0.25, atol=1e-3)


def test_beta_table_marks_bad_points_not_fatal():
    # a grid crossing the lambda2 pole region for n=1 must not abort
    rows = beta_table(np.linspace(-3.0, -0.2, 57), D, 3)
    assert len(rows) == 57
    for row in rows:
        for n in range(4):
            if not row.bad[n]:
                assert np.isfinite(row.beta[n])


def test_beta_anomalous_low_modes_at_large_negative_alpha():
    # the two negative eigenvalues drag beta_0, beta_1 away from the -1/4
    # asymptote reached by the higher modes
    rows = beta_table([-30.0], D, 3)
    b = rows[0].beta
    dev = [abs(x + 0.25) if x is not None else np.inf for x in b]
    assert dev[2] < 0.05 and dev[3] < 0.05  # regular modes near the asymptote
    assert dev[0] > 100 * max(dev[2], dev[3])
    assert dev[1] > 100 * max(dev[2], dev[3])


def test_symmetric_spectrum_input_validation():
    with pytest.raises(ValueError):
        symmetric_spectrum(0.0, -1.0, 3)
    with pytest.raises(ValueError):
        symmetric_spectrum(0.0, 1.0, -1)


def test_beta_coefficient_matches_definition():
    pc = perturbation_coefficients(1.3, D, 2)
    assert abs(beta_coefficient(1.3, pc.mu, D) - pc.beta) < 1e-15
