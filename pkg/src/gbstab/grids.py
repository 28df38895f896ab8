"""Periodic Fourier-collocation grid on [-L, L) and its dense spectral operators.

Everything downstream (Hill operator, pencil, time stepper) shares this grid:
N uniform nodes xi_j = -L + 2L j/N, trapezoid inner products (spectrally exact
for trigonometric polynomials below the Nyquist mode), dense differentiation
matrices built by FFT, and the real trigonometric basis of the mean-zero
subspace with the Nyquist cosine dropped so that differentiation is invertible
on the retained modes.
"""

import numpy as np

from .errors import UsageError

__all__ = ["PeriodicGrid"]


class PeriodicGrid:
    """Uniform periodic grid with dense spectral operators.

    Attributes
    ----------
    N : int
        Number of nodes (even, >= 8).
    L : float
        Half-period; the domain is [-L, L).
    xi : ndarray
        Node coordinates.
    weight : float
        Trapezoid quadrature weight 2L/N.
    """

    def __init__(self, N, L):
        if N % 2 != 0 or N < 8:
            raise UsageError(f"grid size must be even and >= 8, got {N}")
        if not L > 0:
            raise UsageError(f"half-period must be positive, got {L}")
        self.N = int(N)
        self.L = float(L)
        self.xi = -L + 2.0 * L * np.arange(N) / N
        self.weight = 2.0 * L / N
        # angular wavenumbers in FFT order; k[N/2] is the Nyquist mode
        self.k = 2.0 * np.pi * np.fft.fftfreq(N, d=2.0 * L / N)
        self._D = None
        self._D2 = None
        self._basis = None

    # -- dense operators -------------------------------------------------

    def _symbol_matrix(self, sym):
        F = np.fft.fft(np.eye(self.N), axis=0)
        return np.fft.ifft(sym[:, None] * F, axis=0).real

    @property
    def D(self):
        """First-derivative matrix (Nyquist mode zeroed; exactly antisymmetric)."""
        if self._D is None:
            sym = 1j * self.k.copy()
            sym[self.N // 2] = 0.0  # odd derivative of the Nyquist cosine vanishes
            M = self._symbol_matrix(sym)
            self._D = 0.5 * (M - M.T)
        return self._D

    @property
    def D2(self):
        """Second-derivative matrix (full -k^2 symbol, Nyquist included)."""
        if self._D2 is None:
            M = self._symbol_matrix(-self.k**2)
            self._D2 = 0.5 * (M + M.T)
        return self._D2

    # -- inner products ---------------------------------------------------

    def inner(self, f, g):
        """L2 inner product by the trapezoid rule (exact on the periodic grid)."""
        return self.weight * np.dot(np.conj(f), g)

    def norm(self, f):
        return np.sqrt(self.inner(f, f).real)

    def mean(self, f):
        return np.mean(f)

    # -- mean-zero trigonometric basis -------------------------------------

    @property
    def basis(self):
        """Orthonormal columns cos(k xi)/sqrt(L), sin(k xi)/sqrt(L), k=1..N/2-1.

        Spans the mean-zero subspace with the Nyquist cosine dropped; size
        N x (N-2). Columns are ordered (cos_1, sin_1, cos_2, sin_2, ...).
        """
        if self._basis is None:
            cols = []
            root = 1.0 / np.sqrt(self.L)
            for k in range(1, self.N // 2):
                kt = np.pi * k / self.L
                cols.append(np.cos(kt * self.xi) * root)
                cols.append(np.sin(kt * self.xi) * root)
            self._basis = np.column_stack(cols)
        return self._basis

    @property
    def nmodes(self):
        """Dimension of the retained mean-zero subspace (N-2)."""
        return self.N - 2

    def to_coef(self, f):
        """Expand a grid function in the mean-zero basis (mean/Nyquist dropped)."""
        return self.weight * (self.basis.T @ f)

    def from_coef(self, v):
        """Grid samples of a coefficient vector."""
        return self.basis @ v

    def compress(self, Op):
        """Matrix of a grid-space operator in the orthonormal mean-zero basis."""
        return self.weight * (self.basis.T @ Op @ self.basis)
