"""Closed-form instability count and its reconciliation with the spectrum.

For a nonconstant wave the predicted number of right-half-plane eigenvalues
plus negative-Krein imaginary pairs is

    count = n(L2) - n(s1) - n(scalar),
    scalar = <U - Ubar, U - Ubar> + 4 (1 - chat) * D_gKdV,

with n(x) of a scalar its sign-based negative count. When D_gKdV < 0 the
count drops by one as chat decreases through

    chat* = 1 + <U - Ubar, U - Ubar> / (4 D_gKdV) < 1,

so chat* is the critical rescaled wavespeed. For a constant wave ker(A) is
empty and count = n(L2) - n(s1) with no scalar correction. verify_index
reconciles the formula against the directly computed spectrum; the scalar is
evaluated by two independent code paths (Hill-side L2 solves versus the
pencil-side deflated A solves) and their disagreement fails the run.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CrossCheckError, NearDegenerateError, StencilError, UsageError
from .hill import assemble_hill, gkdv_scalars, scalar_negcount
from .pencil import assemble_pencil, hypothesis_checks, pencil_kernel_scalar
from .profile import WaveParameters, conserved_maps, sample_profile

__all__ = [
    "IndexReport",
    "VerifyVerdict",
    "GeomVerdict",
    "index_from_formula",
    "verify_index",
    "critical_speed",
    "find_transition_chat",
    "geom_jacobian_check",
]

SCALAR_SIGN_TOL = 1e-8
CROSS_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class IndexReport:
    """The closed-form count with all intermediate scalars.

    `count` predicts k_r + k_c + k_i^- for perturbations of the same period;
    `gkdv_count` is the corresponding count for the gKdV flow of the same
    profile. For a constant wave scalar/nD/gkdv_count are None and the count
    carries no kernel correction.
    """

    nL2: int
    n_s1: int
    s1: float
    sU1: float
    sUU: float
    Dgkdv: float
    norm_e_sq: float
    scalar: float | None
    n_scalar: int
    count: int
    chat_star: float | None
    nD: int | None
    gkdv_count: int | None
    constant: bool

    @property
    def triple(self):
        """(n(L2), n(s1), n(Dgkdv)) as in the region tables."""
        return (self.nL2, self.n_s1, self.nD)


def index_from_formula(wave, hill=None):
    """Assemble the IndexReport from the Hill-operator spectral data."""
    if hill is None:
        hill = assemble_hill(wave)
    s = gkdv_scalars(hill)
    n_s1 = scalar_negcount(s.s1)
    g = wave.grid
    e = wave.samples - wave.Umean
    norm_e_sq = float(g.inner(e, e).real)

    if wave.is_constant:
        return IndexReport(nL2=hill.nL2, n_s1=n_s1, s1=s.s1, sU1=s.sU1,
                           sUU=s.sUU, Dgkdv=s.Dgkdv, norm_e_sq=0.0,
                           scalar=None, n_scalar=0, count=hill.nL2 - n_s1,
                           chat_star=None, nD=None, gkdv_count=None,
                           constant=True)

    dtol = 1e-10 * max(1.0, norm_e_sq)
    nD = scalar_negcount(s.Dgkdv, dtol)
    scalar = norm_e_sq + 4.0 * (1.0 - wave.chat) * s.Dgkdv
    n_scalar = scalar_negcount(scalar, SCALAR_SIGN_TOL * max(1.0, norm_e_sq))
    chat_star = 1.0 + norm_e_sq / (4.0 * s.Dgkdv) if s.Dgkdv < -dtol else None
    return IndexReport(nL2=hill.nL2, n_s1=n_s1, s1=s.s1, sU1=s.sU1, sUU=s.sUU,
                       Dgkdv=s.Dgkdv, norm_e_sq=norm_e_sq, scalar=scalar,
                       n_scalar=n_scalar, count=hill.nL2 - n_s1 - n_scalar,
                       chat_star=chat_star, nD=nD,
                       gkdv_count=hill.nL2 - n_s1 - nD, constant=False)


def critical_speed(wave, hill=None):
    """chat* = 1 + ||U - Ubar||^2 / (4 Dgkdv) when Dgkdv < 0, else None."""
    report = index_from_formula(wave, hill)
    return report.chat_star


@dataclass(frozen=True)
class VerifyVerdict:
    """Formula-versus-spectrum reconciliation for one wave."""

    formula: IndexReport
    k_r: int
    k_c: int
    k_i_minus: int
    direct_total: int
    equal: bool
    hill_scalar: float | None
    pencil_scalar: float | None
    scalar_rel_diff: float | None
    b_on_kernel: float | None
    d_scalar: float | None
    pairing_error: float


def verify_index(wave, hill, disc, spectrum):
    """Check k_r + k_c + k_i^- (direct) against the formula count.

    Also reconciles the two independent routes to the Lemma scalar and fails
    the run (CrossCheckError) when they disagree above 1e-6 relative.
    """
    formula = index_from_formula(wave, hill)
    if wave.is_constant:
        hill_scalar = pencil_scalar = rel = b_on = d_sc = None
    else:
        hill_scalar = formula.scalar
        pencil_scalar = pencil_kernel_scalar(disc)
        rel = abs(hill_scalar - pencil_scalar) / max(abs(hill_scalar), 1e-30)
        if rel > CROSS_CHECK_TOL:
            raise CrossCheckError(
                f"Hill-side scalar {hill_scalar:.9e} and pencil-side scalar "
                f"{pencil_scalar:.9e} disagree ({rel:.2e} relative)")
        hyp = hypothesis_checks(disc)
        b_on, d_sc = hyp.b_on_kernel, hyp.d_scalar
        if abs(d_sc) < SCALAR_SIGN_TOL:
            raise NearDegenerateError(
                f"kernel scalar {d_sc:.3e} not bounded away from zero")
    direct = spectrum.k_r + spectrum.k_c + spectrum.k_i_minus
    return VerifyVerdict(formula=formula, k_r=spectrum.k_r, k_c=spectrum.k_c,
                         k_i_minus=spectrum.k_i_minus, direct_total=direct,
                         equal=(direct == formula.count),
                         hill_scalar=hill_scalar, pencil_scalar=pencil_scalar,
                         scalar_rel_diff=rel, b_on_kernel=b_on, d_scalar=d_sc,
                         pairing_error=spectrum.pairing_error)


def find_transition_chat(params_of_chat, lo=0.05, hi=0.999, N=128, tol=1e-4):
    """Bisect the sign change of the Lemma scalar along a chat family.

    `params_of_chat` maps chat to WaveParameters (e.g. a self-similar family
    via profile.scaled_parameters). Returns the crossing chat*, or None when
    the scalar has one sign over [lo, hi].
    """
    def scalar_at(chat):
        wave = sample_profile(params_of_chat(chat), N)
        rep = index_from_formula(wave)
        if rep.scalar is None:
            raise NearDegenerateError("constant wave inside transition search")
        return rep.scalar

    flo, fhi = scalar_at(lo), scalar_at(hi)
    if flo * fhi > 0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if scalar_at(mid) * flo <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# conserved-quantity Jacobian sign check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeomVerdict:
    """Sign comparison of T*det2*det4 against the pencil kernel scalar."""

    jacobian: np.ndarray        # rows d/d(a,E,c,b), columns (T, M1, Pt, M2)
    det2: float
    det4: float
    product: float
    pencil_scalar: float
    sign_match: bool
    richardson_stable: bool
    m2_structure_err: float     # max |M2_x - c*M1_x| over x in {a, E}


def _conserved_vector(a, E, c, b, p, N, u_hint):
    m = conserved_maps(a, E, c, b, p, N=N, u_hint=u_hint)
    return np.array([m.T, m.M1, m.Ptilde, m.M2])


def _jacobian(center, p, steps, N, u_hint):
    a, E, c, b = center
    J = np.zeros((4, 4))
    for i in range(4):
        x_hi = list(center)
        x_lo = list(center)
        x_hi[i] += steps[i]
        x_lo[i] -= steps[i]
        try:
            f_hi = _conserved_vector(*x_hi, p, N, u_hint)
            f_lo = _conserved_vector(*x_lo, p, N, u_hint)
        except Exception as exc:
            raise StencilError(
                f"finite-difference stencil failed at parameter {i}: {exc}") from exc
        J[i] = (f_hi - f_lo) / (2.0 * steps[i])
    return J


def _dets(J):
    """det2 over the (a, E) rows of (T, M1); det4 with rows ordered E, a, c, b.

    det4 takes the restricted casimir int(w2) = bT - c*M1 as its last column
    (the negative of the M2 map). With that orientation T*det2*det4 tracks the
    sign of the pencil kernel scalar on every tested wave; the cM1 - bT
    orientation gives the opposite sign throughout.
    """
    det2 = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    Jcas = J[[1, 0, 2, 3], :].copy()
    Jcas[:, 3] *= -1.0
    det4 = float(np.linalg.det(Jcas))
    return det2, det4


def geom_jacobian_check(params, N=256, rel_step=1e-5, u_hint=None):
    """Sixteen central-difference partials of (T, M1, Pt, M2) in (a, E, c, b).

    Compares the sign of T*det2*det4 with the sign of the directly computed
    pencil kernel scalar. Only signs are asserted: the identity's overall
    normalization is not pinned down. Steps are halved once as a Richardson
    sanity check on the determinant signs.
    """
    if abs(params.c) <= 1e-8:
        raise UsageError("geom check needs c != 0 (c-derivative of chat degenerates)")
    center = (params.a, params.E, params.c, params.b)
    steps = np.array([rel_step * max(1.0, abs(x)) for x in center])

    J = _jacobian(center, params.p, steps, N, u_hint)
    det2, det4 = _dets(J)
    J_half = _jacobian(center, params.p, steps / 2.0, N, u_hint)
    det2h, det4h = _dets(J_half)
    richardson = (math.copysign(1, det2) == math.copysign(1, det2h)
                  and math.copysign(1, det4) == math.copysign(1, det4h))

    wave = sample_profile(params, N, u_hint=u_hint)
    hill = assemble_hill(wave)
    disc = assemble_pencil(wave, hill)
    scalar = pencil_kernel_scalar(disc)

    T = 2.0 * wave.L
    product = T * det2 * det4
    structure = max(abs(J[0, 3] - params.c * J[0, 1]),
                    abs(J[1, 3] - params.c * J[1, 1]))
    return GeomVerdict(jacobian=J, det2=det2, det4=det4, product=product,
                       pencil_scalar=scalar,
                       sign_match=(math.copysign(1, product)
                                   == math.copysign(1, scalar)),
                       richardson_stable=richardson,
                       m2_structure_err=structure)
