"""Hill operator L2 = -d^2/dx^2 + chat - f'(U) on the 2L-periodic grid.

Assembled by Fourier collocation as a dense symmetric matrix. Its negative
eigenvalue count, the kernel spanned by U' (translation mode), and the three
inverse inner products s1 = <L2^{-1} 1, 1>, sU1 = <L2^{-1} U, 1>,
sUU = <L2^{-1} U, U> are the ingredients of the closed-form instability count;
D_gKdV = (sUU*s1 - sU1^2)/s1 ties the count to the gKdV one for the same
profile. Solves against L2 deflate the numerical zero mode and return the
solution orthogonal to the kernel.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .errors import (AccuracyError, DegenerateKernelError, LinearAlgebraError,
                     NearDegenerateError, SolvabilityError)
from .profile import PeriodicWave, nonlinearity_prime

__all__ = [
    "HillOperator",
    "GkdvScalars",
    "assemble_hill",
    "solve_modulo_kernel",
    "gkdv_scalars",
    "scalar_negcount",
    "meanzero_negcount",
]

KERNEL_TOL_REL = 1e-7   # zero-mode band, relative to the largest |eigenvalue|
S1_TOL = 1e-10          # |s1| below this is treated as the degenerate set


@dataclass(frozen=True)
class HillOperator:
    """Dense truncation of L2 with its eigendata and kernel certificate.

    `kernel_vector` holds the L2-normalized grid samples of U' (None for a
    constant wave, whose translation mode vanishes identically); deflated
    solves use the refined numerical zero eigenvector instead. `nL2` counts
    eigenvalues strictly below -kernel_tol.
    """

    wave: PeriodicWave
    matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    kernel_vector: np.ndarray | None
    kernel_tol: float
    nL2: int

    @property
    def zero_indices(self):
        return np.flatnonzero(np.abs(self.eigenvalues) <= self.kernel_tol)

    @property
    def kernel_residual(self):
        """|| L2 U' || / || U' || (0 for a constant wave)."""
        if self.kernel_vector is None:
            return 0.0
        g = self.wave.grid
        return g.norm(self.matrix @ self.kernel_vector)


def assemble_hill(wave, kernel_tol_rel=KERNEL_TOL_REL):
    """Assemble -D2 + chat*I - diag(f'(U)) and its eigendecomposition."""
    g = wave.grid
    p = wave.params
    M = -g.D2 + p.chat * np.eye(g.N) - np.diag(nonlinearity_prime(wave.samples, p.p))
    M = 0.5 * (M + M.T)
    try:
        vals, vecs = sla.eigh(M)
    except sla.LinAlgError as exc:
        raise LinearAlgebraError(f"Hill eigensolve failed: {exc}") from exc
    tol = kernel_tol_rel * float(np.max(np.abs(vals)))
    dU = g.D @ wave.samples
    nrm = g.norm(dU)
    kvec = dU / nrm if nrm > 1e-12 * (1.0 + g.norm(wave.samples)) else None
    return HillOperator(wave=wave, matrix=M, eigenvalues=vals, eigenvectors=vecs,
                        kernel_vector=kvec, kernel_tol=tol,
                        nL2=int(np.sum(vals < -tol)))


def solve_modulo_kernel(op, rhs):
    """Unique w with L2 w = rhs and w orthogonal to the kernel.

    Requires <rhs, kernel_vector> below 1e-8 * ||rhs|| (Fredholm solvability);
    solved by eigendecomposition with the numerical zero mode deflated. More
    than one numerical zero eigenvalue is an error: the analytic kernel is
    one-dimensional whenever s1 is nonzero.
    """
    g = op.wave.grid
    rhs = np.asarray(rhs, dtype=float)
    zeros = op.zero_indices
    if zeros.size > 1:
        raise DegenerateKernelError(
            f"{zeros.size} numerical zero eigenvalues in the Hill operator")
    if op.kernel_vector is not None:
        overlap = abs(g.inner(rhs, op.kernel_vector))
        if overlap > 1e-8 * g.norm(rhs):
            raise SolvabilityError(
                f"rhs has kernel overlap {overlap:.3e} (not solvable)")
    keep = np.setdiff1d(np.arange(op.eigenvalues.size), zeros)
    V = op.eigenvectors[:, keep]
    w = V @ ((V.T @ rhs) / op.eigenvalues[keep])
    if op.kernel_vector is not None:
        kv = op.kernel_vector
        w = w - (g.inner(kv, w) / g.inner(kv, kv)) * kv
    res = g.norm(op.matrix @ w - rhs)
    if res > 1e-8 * max(1.0, g.norm(rhs)):
        raise AccuracyError(f"deflated solve residual {res:.3e}", achieved=res)
    return w


@dataclass(frozen=True)
class GkdvScalars:
    """The inverse inner products of the index formula and their determinant ratio."""

    s1: float
    sUU: float
    sU1: float
    Dgkdv: float


def gkdv_scalars(op):
    """s1, sUU, sU1 by trapezoid inner products; Dgkdv = (sUU s1 - sU1^2)/s1.

    Both right-hand sides (1 and U) are orthogonal to the kernel U' by the
    even-profile normalization, so the deflated solves are well posed.
    """
    g = op.wave.grid
    one = np.ones(g.N)
    U = op.wave.samples
    w1 = solve_modulo_kernel(op, one)
    wU = solve_modulo_kernel(op, U)
    s1 = float(g.inner(w1, one).real)
    if abs(s1) <= S1_TOL:
        raise NearDegenerateError(f"<L2^-1 1, 1> = {s1:.3e} inside tolerance band")
    sU1 = float(g.inner(wU, one).real)
    sUU = float(g.inner(wU, U).real)
    return GkdvScalars(s1=s1, sUU=sUU, sU1=sU1,
                       Dgkdv=(sUU * s1 - sU1**2) / s1)


def scalar_negcount(x, tol=S1_TOL):
    """n(x) of a scalar: 1 if x < -tol, 0 if x > tol, error inside the band."""
    if x < -tol:
        return 1
    if x > tol:
        return 0
    raise NearDegenerateError(f"scalar {x:.3e} inside the sign-tolerance band")


def meanzero_negcount(op):
    """Negative count of L2 compressed to the mean-zero trigonometric basis.

    Independent route to n(A): by congruence through the invertible spectral
    derivative, n(A) equals this count.
    """
    g = op.wave.grid
    vals = sla.eigvalsh(g.compress(op.matrix))
    return int(np.sum(vals < -op.kernel_tol))
