"""Quadratic pencil P2(lam) = A + lam*B + lam^2*C on the mean-zero subspace.

With D the spectral derivative restricted to the retained trigonometric modes
(k = 1..N/2-1, Nyquist cosine dropped so D is invertible and skew),

    A = -D (Pi0 L2 Pi0) D,   B = -2c D,   C = I,

all real, A symmetric, B antisymmetric. U - Ubar spans ker(A) for a
nonconstant wave. The equivalent linear Hamiltonian problem uses the
companion pair L = diag(A, C^{-1}), J = [[0, I], [-I, -B]]; nonzero
eigenvalues are computed from the projected operator (Pi J Pi)(Pi L Pi)
restricted to the orthogonal complement of ker(L) + J^{-1} ker(L).

Each purely imaginary eigenvalue lam = i*mu carries a Krein sign, the sign of
the real quantity <u, (-lam)(B + 2*lam*C) u> evaluated on the pencil
eigenvector u (for clusters, the negative count of the corresponding Gram
matrix over an orthonormalized eigenvector set). The 1x1 Krein matrix is the
scalar meromorphic function whose zeros on the imaginary axis locate the
pencil eigenvalues with a nonzero ker(A) component.
"""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg as sla

from .errors import (DegenerateKernelError, IndeterminateKreinError,
                     KernelStructureError, LinearAlgebraError, PoleError)

__all__ = [
    "PencilDiscretization",
    "SpectrumReport",
    "ImaginaryMode",
    "assemble_pencil",
    "build_projector",
    "pencil_spectrum",
    "unprojected_eigenvalues",
    "leading_unstable_mode",
    "hypothesis_checks",
    "pencil_kernel_scalar",
    "krein_matrix_eval",
    "krein_zero_scan",
]

RE_TOL_REL = 1e-6
IM_TOL_REL = 1e-6
SIGN_TOL = 1e-8
CLUSTER_TOL_REL = 1e-6


@dataclass
class PencilDiscretization:
    """Dense truncations of (A, B, C), companion pair, and kernel data.

    Matrices act on the (N-2)-dimensional coefficient space. `kerA_vector`
    holds the coefficients of U - Ubar (None for a constant wave);
    `kernel_refined` is the eigenvector of A at the numerically smallest
    |eigenvalue|, used to build the projector. `projector` and `pbasis` are
    filled by build_projector.
    """

    wave: object
    hill: object
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    Lmat: np.ndarray = field(repr=False)
    Jmat: np.ndarray = field(repr=False)
    kerA_vector: np.ndarray | None
    kernel_refined: np.ndarray | None
    A_eigvals: np.ndarray = field(repr=False)
    A_eigvecs: np.ndarray = field(repr=False)
    kerA_tol: float
    nA: int
    projector: np.ndarray | None = field(default=None, repr=False)
    pbasis: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self):
        return self.A.shape[0]

    @property
    def kernel_dim(self):
        return int(np.sum(np.abs(self.A_eigvals) <= self.kerA_tol))

    @property
    def kerA_residual(self):
        """|| A (U - Ubar) || / || U - Ubar || in coefficient space."""
        if self.kerA_vector is None:
            return 0.0
        v = self.kerA_vector
        return float(np.linalg.norm(self.A @ v) / np.linalg.norm(v))


def assemble_pencil(wave, hill):
    """Assemble A, B, C and the companion pair from a wave and its Hill operator."""
    g = wave.grid
    Dc = g.compress(g.D)
    Dc = 0.5 * (Dc - Dc.T)
    Mc = g.compress(hill.matrix)
    Mc = 0.5 * (Mc + Mc.T)
    A = -Dc @ Mc @ Dc
    A = 0.5 * (A + A.T)
    B = -2.0 * wave.c * Dc
    B = 0.5 * (B - B.T)
    m = A.shape[0]
    C = np.eye(m)

    try:
        avals, avecs = sla.eigh(A)
    except sla.LinAlgError as exc:
        raise LinearAlgebraError(f"eigendecomposition of A failed: {exc}") from exc
    # the spectrum of A spans ~k^4, so a max|eig|-relative band would swallow
    # O(1) eigenvalues; set the zero band just above the floor achievable by
    # the eigensolver and by the sampled kernel vector
    floor = 1e4 * np.finfo(float).eps * float(np.max(np.abs(avals)))

    coef = g.to_coef(wave.samples)
    if np.linalg.norm(coef) > 1e-12 * (1.0 + g.norm(wave.samples)):
        kerA = coef
        tol = max(floor, 50.0 * float(np.linalg.norm(A @ (coef / np.linalg.norm(coef)))))
        refined = avecs[:, int(np.argmin(np.abs(avals)))].copy()
        # orient the refined vector along U - Ubar
        if np.dot(refined, kerA) < 0:
            refined = -refined
    else:
        kerA = None
        tol = floor
        refined = None

    Lmat = np.block([[A, np.zeros((m, m))], [np.zeros((m, m)), C]])
    Jmat = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), -B]])
    return PencilDiscretization(wave=wave, hill=hill, A=A, B=B, C=C,
                                Lmat=Lmat, Jmat=Jmat,
                                kerA_vector=kerA, kernel_refined=refined,
                                A_eigvals=avals, A_eigvecs=avecs,
                                kerA_tol=tol, nA=int(np.sum(avals < -tol)))


def build_projector(disc):
    """Orthogonal projector onto [ker(L) + J^{-1} ker(L)]^perp.

    ker(L) is spanned by (a0, 0) and J^{-1} ker(L) by (-B a0, a0); these are
    exactly orthogonal since B is skew. For a constant wave ker(A) is empty
    and the projector is the identity. Returns the projector matrix and also
    stores an orthonormal basis of its range for the restricted eigensolve.
    """
    m = disc.size
    if disc.kerA_vector is None:
        if disc.kernel_dim != 0:
            raise DegenerateKernelError(
                "constant wave but A has a numerical zero eigenvalue "
                "(resonant period)")
        disc.projector = np.eye(2 * m)
        disc.pbasis = np.eye(2 * m)
        return disc.projector
    if disc.kernel_dim != 1:
        raise DegenerateKernelError(
            f"ker(A) certificate failed: {disc.kernel_dim} numerical zero modes")
    a0 = disc.kernel_refined
    s1 = np.concatenate([a0, np.zeros(m)])
    s2 = np.concatenate([-disc.B @ a0, a0])
    s1 /= np.linalg.norm(s1)
    s2 /= np.linalg.norm(s2)
    S = np.column_stack([s1, s2])
    Q = sla.null_space(S.T)
    if Q.shape[1] != 2 * m - 2:
        raise KernelStructureError(
            f"projector rank {Q.shape[1]} != {2 * m - 2}")
    disc.pbasis = Q
    disc.projector = Q @ Q.T
    return disc.projector


def unprojected_eigenvalues(disc):
    """Eigenvalues of the raw companion operator J L (kernel included)."""
    try:
        return sla.eigvals(disc.Jmat @ disc.Lmat)
    except sla.LinAlgError as exc:
        raise LinearAlgebraError(f"companion eigensolve failed: {exc}") from exc


class ImaginaryMode(NamedTuple):
    lam: complex
    multiplicity: int
    neg_count: int
    krein_sign: int     # +1 all positive, -1 all negative, 0 mixed


@dataclass(frozen=True)
class SpectrumReport:
    """Classified spectrum of the projected companion problem.

    k_r: real eigenvalues with Re > re_tol; k_c: eigenvalues with Re > re_tol
    and |Im| > im_tol; imaginary_modes lists one entry per clustered imaginary
    eigenvalue with its multiplicity and negative-Krein count; k_i_minus sums
    the negative counts. pairing_error measures the defect of the lam -> -lam,
    lam -> conj(lam) multiset symmetry, relative to max(1, scale).
    """

    eigenvalues: np.ndarray = field(repr=False)
    k_r: int
    k_c: int
    imaginary_modes: tuple
    k_i_minus: int
    re_tol: float
    im_tol: float
    sign_tol: float
    scale: float
    pairing_error: float

    @property
    def rhp_total(self):
        return self.k_r + self.k_c + self.k_i_minus

    @property
    def min_magnitude(self):
        return float(np.min(np.abs(self.eigenvalues)))


def _canonical_sort(lams):
    order = np.lexsort((lams.imag, lams.real))
    return lams[order]


def _pairing_error(lams, scale):
    err = 0.0
    for target in (-lams, np.conj(lams)):
        for z in target:
            err = max(err, float(np.min(np.abs(lams - z))))
    return err / max(1.0, scale)


def _krein_quantity_matrix(B, lam, U):
    """Gram matrix of <u_i, (-lam)(B + 2 lam C) u_j> on the cluster span."""
    G = U.conj().T @ ((-lam) * (B @ U) + (-2.0 * lam * lam) * U)
    return 0.5 * (G + G.conj().T)


def pencil_spectrum(disc, re_tol_rel=RE_TOL_REL, im_tol_rel=IM_TOL_REL,
                    sign_tol=SIGN_TOL, cluster_tol_rel=CLUSTER_TOL_REL):
    """Solve the projected companion problem and classify its eigenvalues.

    Eigenvectors of imaginary eigenvalues are pulled back to the pencil first
    component for the Krein evaluation. Raises IndeterminateKreinError when a
    Krein quantity sits inside the sign tolerance band.
    """
    if disc.pbasis is None:
        build_projector(disc)
    Q = disc.pbasis
    T = (Q.T @ disc.Jmat @ Q) @ (Q.T @ disc.Lmat @ Q)
    try:
        lams, vecs = sla.eig(T)
    except sla.LinAlgError as exc:
        raise LinearAlgebraError(f"projected eigensolve failed: {exc}") from exc

    scale = float(np.max(np.abs(lams))) if lams.size else 1.0
    re_tol = re_tol_rel * scale
    im_tol = im_tol_rel * scale
    cluster_tol = cluster_tol_rel * scale

    is_imag = np.abs(lams.real) <= re_tol
    rhp = lams.real > re_tol
    k_r = int(np.sum(rhp & (np.abs(lams.imag) <= im_tol)))
    k_c = int(np.sum(rhp & (np.abs(lams.imag) > im_tol)))

    m = disc.size
    modes = []
    k_i_minus = 0
    idx = np.flatnonzero(is_imag)
    if idx.size:
        order = idx[np.argsort(lams[idx].imag)]
        clusters = [[order[0]]]
        for i in order[1:]:
            if lams[i].imag - lams[clusters[-1][-1]].imag <= cluster_tol:
                clusters[-1].append(i)
            else:
                clusters.append([i])
        for cl in clusters:
            mu = float(np.mean(lams[cl].imag))
            lam = 1j * mu
            U = (Q @ vecs[:, cl])[:m, :]
            nrm = np.linalg.norm(U, axis=0)
            if np.any(nrm < 1e-13):
                raise LinearAlgebraError("pencil component of an eigenvector vanished")
            U = U / nrm
            U, _ = np.linalg.qr(U)
            G = _krein_quantity_matrix(disc.B, lam, U)
            gv = np.linalg.eigvalsh(G)
            neg = int(np.sum(gv < -sign_tol))
            pos = int(np.sum(gv > sign_tol))
            if neg + pos < len(cl):
                raise IndeterminateKreinError(
                    f"Krein quantity within {sign_tol:g} of zero at lam = {lam:.6g}")
            k_i_minus += neg
            sign = -1 if neg == len(cl) else (1 if neg == 0 else 0)
            modes.append(ImaginaryMode(lam=lam, multiplicity=len(cl),
                                       neg_count=neg, krein_sign=sign))

    lams_sorted = _canonical_sort(lams)
    return SpectrumReport(eigenvalues=lams_sorted, k_r=k_r, k_c=k_c,
                          imaginary_modes=tuple(modes), k_i_minus=k_i_minus,
                          re_tol=re_tol, im_tol=im_tol, sign_tol=sign_tol,
                          scale=scale, pairing_error=_pairing_error(lams_sorted, scale))


# ---------------------------------------------------------------------------
# index-theorem hypothesis data
# ---------------------------------------------------------------------------

class HypothesisChecks(NamedTuple):
    b_on_kernel: float      # |<a, B a>| (exactly 0 for real skew B)
    d_scalar: float         # <a, (C - B A^{-1} B) a>, deflated inverse


def _quadratic_pinv_form(disc, rhs):
    """<rhs, A^+ rhs> for rhs orthogonal to ker(A).

    The spectrum of A spans ~k^4, so a raw eigendecomposition loses ~cond(A)
    digits. Conjugating by the inverse-derivative weights S = diag(1/k) drops
    the conditioning to ~k^2: A^+ = S (S A S)^+ S on the relevant subspace.
    """
    m = disc.size
    ks = np.pi * np.repeat(np.arange(1, m // 2 + 1), 2) / disc.wave.grid.L
    s = 1.0 / ks
    At = (s[:, None] * disc.A) * s[None, :]
    At = 0.5 * (At + At.T)
    try:
        vals, vecs = sla.eigh(At)
    except sla.LinAlgError as exc:
        raise LinearAlgebraError(f"preconditioned A eigensolve failed: {exc}") from exc
    tol = max(1e4 * np.finfo(float).eps * float(np.max(np.abs(vals))),
              abs(float(vals[int(np.argmin(np.abs(vals)))])) * 10.0)
    keep = np.abs(vals) > tol
    w = s * rhs
    coef = vecs.T @ w
    return float(np.dot(coef[keep] / vals[keep], coef[keep]))


def hypothesis_checks(disc):
    """Both index-theorem hypotheses on the kernel of A.

    (i)  B restricted to ker(A) vanishes;
    (ii) the scalar <a, (C - B A^{-1} B) a> = 1 + <B a, A^{-1} B a> with the
         deflated inverse is bounded away from zero.
    """
    if disc.kernel_refined is None:
        raise DegenerateKernelError("constant wave: ker(A) is empty")
    a0 = disc.kernel_refined
    Ba = disc.B @ a0
    return HypothesisChecks(b_on_kernel=abs(float(a0 @ Ba)),
                            d_scalar=1.0 + _quadratic_pinv_form(disc, Ba))


def pencil_kernel_scalar(disc):
    """<a,(C - B A^{-1} B)a> * ||U - Ubar||^2: the pencil-side route to the
    Lemma-scalar, independent of the Hill-side solves."""
    d = hypothesis_checks(disc).d_scalar
    return d * float(np.dot(disc.kerA_vector, disc.kerA_vector))


# ---------------------------------------------------------------------------
# Krein matrix (1x1 since z(A) = 1)
# ---------------------------------------------------------------------------

def leading_unstable_mode(disc):
    """(lam, pencil eigenvector coefficients) of the largest-Re eigenvalue."""
    if disc.pbasis is None:
        build_projector(disc)
    Q = disc.pbasis
    T = (Q.T @ disc.Jmat @ Q) @ (Q.T @ disc.Lmat @ Q)
    try:
        lams, vecs = sla.eig(T)
    except sla.LinAlgError as exc:
        raise LinearAlgebraError(f"projected eigensolve failed: {exc}") from exc
    i = int(np.argmax(lams.real))
    u = (Q @ vecs[:, i])[:disc.size]
    return complex(lams[i]), u / np.linalg.norm(u)


def _krein_blocks(disc):
    """lam-independent projected blocks for the Krein matrix (cached)."""
    blocks = getattr(disc, "_krein_blocks_cache", None)
    if blocks is None:
        a0 = disc.kernel_refined
        W = disc.A_eigvecs[:, np.setdiff1d(
            np.arange(disc.size),
            [int(np.argmin(np.abs(disc.A_eigvals)))])]
        blocks = {
            "WAW": W.T @ disc.A @ W,
            "WBW": W.T @ disc.B @ W,
            "WAa": W.T @ (disc.A @ a0),
            "WBa": W.T @ (disc.B @ a0),
            "aAa": float(a0 @ (disc.A @ a0)),
            "aBa": float(a0 @ (disc.B @ a0)),   # exactly 0 for skew B
        }
        disc._krein_blocks_cache = blocks
    return blocks


def krein_matrix_eval(disc, lam):
    """The scalar Krein matrix at lam.

    K(lam) = <a, P2(lam) a> - <(Pp P2(lam) Pp)^{-1} Pp P2(lam) a, P2(lam)^adj a>
    with a the normalized kernel vector of A, Pp the projector off ker(A), and
    P2^adj = A - conj(lam) B + conj(lam)^2 C. Real on the imaginary axis; its
    zeros there locate pencil eigenvalues whose eigenfunctions have a nonzero
    ker(A) component. Raises PoleError when the inner solve is singular.
    """
    if disc.kernel_refined is None:
        raise DegenerateKernelError("constant wave: ker(A) is empty")
    lam = complex(lam)
    blk = _krein_blocks(disc)
    lam2 = lam * lam
    lamc = np.conj(lam)
    head = blk["aAa"] + lam * blk["aBa"] + lam2       # <a, P2 a>, ||a|| = 1
    Mred = blk["WAW"] + lam * blk["WBW"] + lam2 * np.eye(blk["WAW"].shape[0])
    rhs = blk["WAa"] + lam * blk["WBa"]               # W^T P2 a (C slot empty)
    adj = blk["WAa"] - lamc * blk["WBa"]              # W^T P2^adj a
    try:
        with warnings.catch_warnings():
            # near-pole evaluations are legitimately ill conditioned; the
            # residual check below decides whether to reject them
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            x = sla.solve(Mred, rhs)
    except sla.LinAlgError as exc:
        raise PoleError(f"Krein-matrix inner solve singular at {lam}",
                        lam=lam) from exc
    res = np.linalg.norm(Mred @ x - rhs)
    if not np.isfinite(res) or res > 1e-6 * max(1.0, np.linalg.norm(rhs)):
        raise PoleError(f"Krein-matrix inner solve residual {res:.3e} at {lam}",
                        lam=lam)
    # <x_full, P2^adj a> with the first slot conjugated
    return complex(head - np.conj(x) @ adj)


def krein_zero_scan(disc, mu_max, samples=2000, value_tol_rel=1e-6):
    """Zeros of K(i mu) on (0, mu_max] located by sign changes.

    Sign changes across poles are discarded by requiring |K| small at the
    refined point relative to the neighboring sample magnitudes.
    """
    from scipy import optimize

    mus = np.linspace(mu_max / samples, mu_max, samples)
    vals = np.empty(samples)
    for i, mu in enumerate(mus):
        try:
            k = krein_matrix_eval(disc, 1j * mu)
        except PoleError:
            vals[i] = np.nan
            continue
        vals[i] = k.real
    zeros = []
    for i in range(samples - 1):
        v0, v1 = vals[i], vals[i + 1]
        if not (np.isfinite(v0) and np.isfinite(v1)) or v0 * v1 >= 0:
            continue
        f = lambda mu: krein_matrix_eval(disc, 1j * mu).real
        try:
            root = optimize.brentq(f, mus[i], mus[i + 1], xtol=1e-12)
        except (ValueError, PoleError):
            continue
        local = max(abs(v0), abs(v1))
        if abs(f(root)) <= value_tol_rel * max(1.0, local):
            zeros.append(root)
    return np.array(zeros)
