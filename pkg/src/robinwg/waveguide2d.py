"""Direct discretisation of the 2D waveguide operator and its reduction.

Two variants on the flattened strip R x (-d, d):

    full        -d/ds (1+u eta)^-2 d/ds - delta^-2 d^2/du^2 + eps^-2 V(s,u)
                with V the three-term curvature potential
    simplified  -d^2/ds^2 - delta^-2 d^2/du^2 - gamma^2(s/eps)/(4 eps^2)

both with s-dependent Robin rows at u = +-d implemented by second-order
ghost elimination.  Multiplying the boundary rows by the trapezoid weight
1/2 restores symmetry (the recorded weighted symmetrisation); the linear
systems are then (A - shift*M) x = M F with M the u-weight diagonal.

The reduced resolvent projects onto transverse modes computed per s-column
by the `transverse` module, after subtracting the *discrete* transverse
threshold of the flat columns so the renormalised problem is
delta-independent at machine level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh, solve_banded

from .effective_1d import Grid1D, build_h_n_eps, resolvent_solve
from .errors import (GridResolutionError, ProfileError, RobinwgError,
                     SolverConvergenceError)
from .geometry import WaveguideGeometry
from .graph_limit import (DECOUPLED, GraphOperatorSpec, resolvent_apply,
                          sqrt_upper)
from .report import (VERDICT_INCONCLUSIVE, VERDICT_MATCH, VERDICT_MISMATCH,
                     ConvergenceReport, extrapolate_linear, fit_decay_exponent)
from .resonance import Potential1D, detect_resonance
from .transverse import asymmetric_spectrum, beta_coefficient, symmetric_spectrum

FULL = "full"
SIMPLIFIED = "simplified"

# Gregory end-corrected trapezoid weights, O(h^6); needs >= 14 points.
_GREGORY6 = np.array([95.0 / 288, 317.0 / 240, 23.0 / 30, 793.0 / 720,
                      157.0 / 160])


def gregory_weights(n_points: int, h: float) -> np.ndarray:
    """High-order uniform-grid quadrature weights (end-corrected trapezoid)."""
    if n_points < 2 * len(_GREGORY6) + 4:
        w = np.full(n_points, h)
        w[0] = w[-1] = h / 2
        return w
    w = np.ones(n_points)
    w[:5] = _GREGORY6
    w[-5:] = _GREGORY6[::-1]
    return w * h


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid: s uniform on [-L, L] (Dirichlet caps), u on [-d, d]."""

    s_half_length: float
    n_s: int               # s cells, even so s = 0 is a node
    n_u: int               # u cells
    d: float

    def __post_init__(self):
        if self.n_s % 2 or self.n_s < 8:
            raise GridResolutionError("n_s must be even and >= 8")
        if self.n_u < 16:
            raise GridResolutionError("n_u must be >= 16")
        if self.s_half_length <= 0 or self.d <= 0:
            raise GridResolutionError("lengths must be positive")

    @property
    def h_s(self):
        return 2 * self.s_half_length / self.n_s

    @property
    def h_u(self):
        return 2 * self.d / self.n_u

    @property
    def s_points(self):
        return np.linspace(-self.s_half_length, self.s_half_length, self.n_s + 1)

    @property
    def s_interior(self):
        return self.s_points[1:-1]

    @property
    def u_points(self):
        return np.linspace(-self.d, self.d, self.n_u + 1)

    @property
    def u_mass(self):
        w = np.ones(self.n_u + 1)
        w[0] = w[-1] = 0.5
        return w

    def check_mode_resolution(self, n_max: int):
        # >= 8 points per half wavelength of the highest projected mode,
        # whose wavenumber is below (n_max + 1) pi / (2 d)
        p = (n_max + 1) * np.pi / (2 * self.d)
        if (np.pi / p) / self.h_u < 8 - 1e-12:
            raise GridResolutionError(
                f"n_u = {self.n_u} under-resolves transverse mode {n_max}")

    def check_curvature_resolution(self, geometry: WaveguideGeometry,
                                   factor: int = 50):
        if geometry.profile.sup_abs() == 0:
            return
        width = geometry.profile.support_width
        eps = geometry.scaling.epsilon
        if width > 0 and self.h_s > eps * width / factor:
            raise GridResolutionError(
                f"h_s = {self.h_s:.3g} exceeds eps*support/{factor}")


def _flat_transverse(alpha, d, n_u):
    """Ghost-eliminated flat Robin matrix, its weighted form and eigenpairs.

    Returns (B_weighted, mass, eigvals, eigvecs) with eigvecs mass-orthonormal.
    """
    hu = 2 * d / n_u
    nu = n_u + 1
    B = np.zeros((nu, nu))
    idx = np.arange(1, n_u)
    B[idx, idx] = 2 / hu ** 2
    B[idx, idx - 1] = -1 / hu ** 2
    B[idx, idx + 1] = -1 / hu ** 2
    B[0, 0] = (2 + 2 * hu * alpha) / hu ** 2
    B[0, 1] = -2 / hu ** 2
    B[n_u, n_u] = (2 + 2 * hu * alpha) / hu ** 2
    B[n_u, n_u - 1] = -2 / hu ** 2
    w = np.ones(nu)
    w[0] = w[-1] = 0.5
    Bw = w[:, None] * B
    lam, Phi = eigh(Bw, np.diag(w))
    return Bw, w, lam, Phi


@dataclass
class DiscreteWaveguideOperator:
    """Weighted-symmetric sparse operator over the (s interior) x u grid."""

    geometry: WaveguideGeometry
    grid: Grid2D
    variant: str
    matrix: sp.csr_matrix          # weighted form M*A
    mass: np.ndarray               # diagonal of M (u-weights tiled over s)
    flat_eigvals: np.ndarray       # discrete flat transverse eigenvalues
    flat_eigvecs: np.ndarray       # mass-orthonormal columns
    potential_s: np.ndarray        # flat part of the potential, per s node

    @property
    def shape(self):
        return (len(self.grid.s_interior), self.grid.n_u + 1)

    def apply(self, field: np.ndarray) -> np.ndarray:
        """Unweighted operator action on a (n_s-1, n_u+1) field."""
        vec = (self.matrix @ field.ravel()) / self.mass
        return vec.reshape(self.shape)

    def transverse_threshold(self, n: int) -> float:
        """Discrete flat threshold subtracted by the renormalisation."""
        return float(self.flat_eigvals[n])


def build_waveguide(geometry: WaveguideGeometry, variant: str,
                    n_context: int, grid: Grid2D) -> DiscreteWaveguideOperator:
    """Assemble the sparse waveguide operator (without threshold shift).

    The full variant needs gamma'': non-smooth profiles are rejected.
    For gamma == 0 both variants reduce exactly to the separable sum of the
    1D Dirichlet Laplacian and the transverse Robin operator.
    """
    if variant not in (FULL, SIMPLIFIED):
        raise RobinwgError(f"unknown variant {variant!r}")
    if variant == FULL and not geometry.profile.is_smooth:
        raise ProfileError("full variant requires a smooth profile (gamma'')")
    if abs(grid.d - geometry.d) > 1e-14:
        raise RobinwgError("grid.d must match geometry.d")
    grid.check_mode_resolution(n_context)
    grid.check_curvature_resolution(geometry)

    sc = geometry.scaling
    eps, delta = sc.epsilon, sc.delta
    defo = sc.deformation_factor
    si = grid.s_interior
    u = grid.u_points
    nsi, nu = len(si), grid.n_u + 1
    hs, hu = grid.h_s, grid.h_u
    wu = grid.u_mass
    alpha = geometry.alpha

    Bw, _, lam, Phi = _flat_transverse(alpha, grid.d, grid.n_u)
    A = sp.kron(sp.eye(nsi), Bw / delta ** 2, format="csr")

    # s-dependent Robin rows differ from the flat ones only on the diagonal
    a1, a2 = geometry.robin_coefficients(si)
    corr = np.zeros((nsi, nu))
    corr[:, 0] = (a2 - alpha) / hu / delta ** 2      # weight 1/2 * 2/hu
    corr[:, -1] = (a1 - alpha) / hu / delta ** 2
    A = A + sp.diags(corr.ravel())

    gscaled = defo * geometry.profile.sample(si / eps)   # sqrt(1+2 eps b) gamma(s/eps)
    if variant == SIMPLIFIED:
        D2s = sp.diags([np.full(nsi - 1, -1.0), np.full(nsi, 2.0),
                        np.full(nsi - 1, -1.0)], [-1, 0, 1]) / hs ** 2
        A = A + sp.kron(D2s, sp.diags(wu), format="csr")
        Vs = -gscaled ** 2 / (4 * eps ** 2)
        V2d = np.repeat(Vs, nu) * np.tile(wu, nsi)
        A = A + sp.diags(V2d)
    else:
        # conservative -d/ds a(s,u) d/ds, a = (1 + u eta)^-2, midpoint fluxes;
        # the Dirichlet cap cells lie in the flat region where a = 1
        s_all = grid.s_points
        smid = 0.5 * (s_all[:-1] + s_all[1:])
        eta_mid = geometry.eta(smid)
        a_mid = 1.0 / (1.0 + np.outer(eta_mid, u)) ** 2   # (nsi+1, nu)
        aL, aR = a_mid[:-1, :], a_mid[1:, :]
        A = A + sp.diags(((aL + aR) * wu).ravel() / hs ** 2)
        off = (-aR[:-1, :] * wu).ravel() / hs ** 2
        n2 = nsi * nu
        A = A + sp.diags(off, nu, shape=(n2, n2)) + sp.diags(off, -nu, shape=(n2, n2))

        eta_s = geometry.eta(si)
        one = 1.0 + np.outer(eta_s, u)
        g2d = gscaled[:, None]
        g1 = defo * geometry.profile.deriv(si / eps)[:, None]
        g2 = defo * geometry.profile.deriv2(si / eps)[:, None]
        dr = delta / eps
        U = u[None, :]
        V = (-g2d ** 2 / (4 * one ** 2)
             + dr * U * g2 / (2 * one ** 3)
             - 1.25 * dr ** 2 * U ** 2 * g1 ** 2 / one ** 4) / eps ** 2
        A = A + sp.diags((V * wu).ravel())
        Vs = -gscaled ** 2 / (4 * eps ** 2)    # flat part, for preconditioning

    mass = np.tile(wu, nsi)
    return DiscreteWaveguideOperator(geometry, grid, variant, A.tocsr(),
                                     mass, lam, Phi, Vs)


# ---------------------------------------------------------------------------
# transverse-mode projector
# ---------------------------------------------------------------------------

@dataclass
class ModeProjector:
    """Per-column transverse modes phi_n(alpha^eps(s), .) on the u grid.

    Flat columns (eta = 0) share the symmetric-problem modes; curved columns
    get their own asymmetric solve.  Projection integrals use Gregory
    end-corrected weights so sampled products integrate to ~1e-9.
    """

    geometry: WaveguideGeometry
    grid: Grid2D
    n_max: int
    modes: np.ndarray = field(init=False)     # (n_max+1, n_s-1, n_u+1)
    quad: np.ndarray = field(init=False)

    def __post_init__(self):
        si = self.grid.s_interior
        u = self.grid.u_points
        eta = self.geometry.eta(si)
        self.quad = gregory_weights(len(u), self.grid.h_u)
        flat = symmetric_spectrum(self.geometry.alpha, self.grid.d, self.n_max)
        flat_cols = np.array([m(u) for m in flat])      # (n_max+1, nu)
        self.modes = np.empty((self.n_max + 1, len(si), len(u)))
        self.modes[:] = flat_cols[:, None, :]
        curved = np.nonzero(eta != 0.0)[0]
        a1, a2 = self.geometry.robin_coefficients(si[curved])
        for i, col in enumerate(curved):
            mset = asymmetric_spectrum(a1[i], a2[i], self.grid.d, self.n_max,
                                       validate=False)
            for n, m in enumerate(mset):
                vals = m(u)
                # fix the sign to follow the flat modes continuously
                if np.dot(vals, flat_cols[n]) < 0:
                    vals = -vals
                self.modes[n, col] = vals

    def synthesize(self, f_s: np.ndarray, n: int) -> np.ndarray:
        """F(s, u) = f(s) phi_n(alpha(s), u)."""
        return f_s[:, None] * self.modes[n]

    def project(self, field: np.ndarray, m: int) -> np.ndarray:
        """Per-column inner product with phi_m."""
        return (field * self.modes[m]) @ self.quad

    def gram_deviation(self) -> float:
        """Worst per-column deviation of the mode Gram matrix from identity."""
        worst = 0.0
        for i in range(self.modes.shape[1]):
            cols = self.modes[:, i, :]
            G = (cols * self.quad) @ cols.T
            worst = max(worst, float(np.max(np.abs(G - np.eye(len(G))))))
        return worst


# ---------------------------------------------------------------------------
# reduced resolvent
# ---------------------------------------------------------------------------

def _separable_preconditioner(op: DiscreteWaveguideOperator, n: int, z):
    """Inverse of the flat separable operator by transverse diagonalisation.

    Per transverse eigenmode j the s-problem is tridiagonal with diagonal
    2/hs^2 + V_flat(s) + (lam_j - lam_n)/delta^2 - z; exact for gamma == 0.
    """
    nsi, nu = op.shape
    hs = op.grid.h_s
    delta = op.geometry.scaling.delta
    lam = op.flat_eigvals
    Phi = op.flat_eigvecs
    shifts = (lam - lam[n]) / delta ** 2 - z
    bands = []
    for j in range(nu):
        ab = np.zeros((3, nsi), dtype=complex)
        ab[0, 1:] = -1.0 / hs ** 2
        ab[1, :] = 2.0 / hs ** 2 + op.potential_s + shifts[j]
        ab[2, :-1] = -1.0 / hs ** 2
        bands.append(ab)

    def apply(r):
        Rt = np.asarray(r, dtype=complex).reshape(nsi, nu) @ Phi
        Y = np.empty((nsi, nu), dtype=complex)
        for j in range(nu):
            Y[:, j] = solve_banded((1, 1), bands[j], Rt[:, j])
        return (Y @ Phi.T).ravel()

    return apply


def reduced_resolvent(op: DiscreteWaveguideOperator, projector: ModeProjector,
                      m: int, n: int, z, f_s: np.ndarray,
                      rtol: float = 1e-9, maxiter: int = 400):
    """g(s) = <phi_m, (Op - mu_n/delta^2 - z)^{-1} f phi_n> per column.

    mu_n is the discrete flat transverse threshold of the assembled operator
    (subtracting the continuum value would leave an O(h_u^2)/delta^2 drift).
    GMRES preconditioned by the flat separable solve; convergence is judged
    on the preconditioned residual, which is the well-scaled one here.
    Returns (g, info dict); raises SolverConvergenceError with the residual
    history when the target is missed.
    """
    if complex(z).imag == 0:
        raise RobinwgError("reduced resolvent needs Im z != 0")
    nsi, nu = op.shape
    delta = op.geometry.scaling.delta
    shift = op.transverse_threshold(n) / delta ** 2 + z
    A = op.matrix - sp.diags(shift * op.mass)
    F = projector.synthesize(np.asarray(f_s, dtype=complex), n)
    rhs = op.mass * F.ravel()
    prec = _separable_preconditioner(op, n, z)
    Mop = spla.LinearOperator(A.shape, matvec=prec, dtype=complex)
    history = []
    g, code = spla.gmres(A, rhs, M=Mop, rtol=rtol, atol=0.0, restart=80,
                         maxiter=max(1, maxiter // 80),
                         callback=lambda pr: history.append(float(pr)),
                         callback_type="pr_norm")
    pr_res = np.linalg.norm(prec(rhs - A @ g)) / np.linalg.norm(prec(rhs))
    if code != 0 and pr_res > 10 * rtol:
        raise SolverConvergenceError(
            f"GMRES stalled at preconditioned residual {pr_res:.3g}", history)
    true_res = np.linalg.norm(A @ g - rhs) / np.linalg.norm(rhs)
    G = g.reshape(nsi, nu)
    out = projector.project(G, m)
    info = {"iterations": len(history), "preconditioned_residual": float(pr_res),
            "raw_residual": float(true_res), "field": G}
    return out, info


# ---------------------------------------------------------------------------
# theorem verification driver
# ---------------------------------------------------------------------------

def _free_line_resolvent(grid: Grid2D, z, f_s):
    """Discrete free 1D resolvent on the interior s grid (reference field)."""
    g1 = Grid1D(grid.s_half_length, grid.n_s)
    from .geometry import CurvatureProfile, SMOOTH_BUMP
    flat = CurvatureProfile(SMOOTH_BUMP, amplitude=0.0, half_width=1.0)
    op = build_h_n_eps(flat, 0.0, 1.0, 0.0, g1)
    full = np.zeros(grid.n_s + 1, dtype=complex)
    full[1:-1] = f_s
    return resolvent_solve(op, z, full)[1:-1]


def theorem_check(geometry: WaveguideGeometry, n: int, z, probes, eps_list,
                  n_max: int = None, n_u: int = 32, variant: str = FULL,
                  error_threshold: float = 0.05) -> ConvergenceReport:
    """Reduced-resolvent convergence of the 2D operator against the graph limit.

    For each eps the geometry is rebuilt with the same delta/eps ratio and b,
    the operator assembled and r_{n,n} compared (L2 over |s| > 1) with the
    limit predicted by the resonance analysis of beta_n gamma^2.
    Off-diagonal norms ||r_{m,n} f|| are recorded for every other m <= n_max.
    """
    eps_list = list(eps_list)
    if n_max is None:
        n_max = max(n + 1, 1)
    sc = geometry.scaling
    if sc.delta_ratio is None:
        sc.require_convergence_regime()

    mu_n = symmetric_spectrum(geometry.alpha, geometry.d, n)[n].eigenvalue
    beta_n = beta_coefficient(geometry.alpha, mu_n, geometry.d)
    pot = Potential1D.from_profile(geometry.profile, beta_n)
    res = detect_resonance(pot)
    predicted = GraphOperatorSpec.from_resonance(res, sc.b)
    alt = (GraphOperatorSpec.free() if predicted.kind == DECOUPLED
           else GraphOperatorSpec.decoupled())

    w = sqrt_upper(z)
    L = max(12.0, 10.0 / w.imag + 1.0)
    width = geometry.profile.support_width
    probes = probes if isinstance(probes, (list, tuple)) else [probes]

    errors, alt_errors, leak, taus = [], [], [], []
    offdiag = {m: [] for m in range(n_max + 1) if m != n}
    notes = [f"variant={variant}; delta/eps fixed at "
             f"{sc.delta / sc.epsilon:.4g} (desk-scale protocol)"]
    for eps in eps_list:
        scaling = type(sc)(epsilon=eps, a=sc.a, b=sc.b,
                           delta_ratio=sc.delta / sc.epsilon
                           if sc.delta_ratio is not None else None)
        geo = WaveguideGeometry(geometry.profile, geometry.d, scaling,
                                geometry.alpha)
        n_s = int(np.ceil(2 * L / (eps * width / 50)))
        n_s += n_s % 2
        grid = Grid2D(L, n_s, n_u, geometry.d)
        op = build_waveguide(geo, variant, n_max, grid)
        proj = ModeProjector(geo, grid, n_max)
        si = grid.s_interior
        outer = np.abs(si) > 1.0
        e_pred = e_alt = 0.0
        first = True
        for probe in probes:
            fs = probe(si)
            nf = np.sqrt(np.trapezoid(np.abs(fs) ** 2, si))
            g, info = reduced_resolvent(op, proj, n, n, z, fs)
            g_pred = resolvent_apply(predicted, z, si, fs)
            g_alt = resolvent_apply(alt, z, si, fs)
            e_pred = max(e_pred, np.sqrt(np.trapezoid(
                np.abs(g - g_pred)[outer] ** 2, si[outer])) / nf)
            e_alt = max(e_alt, np.sqrt(np.trapezoid(
                np.abs(g - g_alt)[outer] ** 2, si[outer])) / nf)
            if first:
                # the 2D field from the same solve projects onto every m
                for m in offdiag:
                    gm = proj.project(info["field"], m)
                    offdiag[m].append(float(np.sqrt(np.trapezoid(
                        np.abs(gm) ** 2, si)) / nf))
                mass_left = np.trapezoid(np.abs(fs[si < 0]) ** 2, si[si < 0])
                if mass_left > (1 - 1e-12) * nf ** 2:
                    far = si > 1.0
                    leak.append(float(np.sqrt(np.trapezoid(
                        np.abs(g[far]) ** 2, si[far])) / nf))
                    if predicted.kind != DECOUPLED:
                        ref = _free_line_resolvent(grid, z, fs)
                        win = (si > 2.0) & (si < 6.0)
                        taus.append(complex(np.mean(g[win] / ref[win])))
                first = False
        errors.append(e_pred)
        alt_errors.append(e_alt)

    strictly = all(a > b for a, b in zip(errors, errors[1:]))
    pred_wins = errors[-1] < alt_errors[-1]
    if not pred_wins:
        verdict = VERDICT_MISMATCH
    elif strictly and errors[-1] < error_threshold:
        verdict = VERDICT_MATCH
    else:
        verdict = VERDICT_INCONCLUSIVE

    tau_ext = None
    if len(taus) >= 3:
        tau_ext = complex(extrapolate_linear(eps_list, np.array(taus)))
    elif taus:
        tau_ext = taus[-1]

    return ConvergenceReport(
        predicted=predicted.to_dict(), eps_list=eps_list, errors=errors,
        alt_kind=alt.kind, alt_errors=alt_errors, z=complex(z),
        norm="L2(|s|>1)/||f||", verdict=verdict,
        fitted_exponent=fit_decay_exponent(eps_list, errors),
        leakage=leak, transmission=taus, transmission_extrapolated=tau_ext,
        offdiagonal=offdiag, notes=notes)
