"""Pseudospectral time integration of the first-order Boussinesq system

    u_t = d/dx v,    v_t = d/dx (-u_xx + u - f(u)),    f(u) = u^(p+1),

on the 2L-periodic grid, used as desk-scale dynamical evidence for the
spectral predictions. The stiff linear part (fourth-order symbol, purely
imaginary eigenvalues +-i k sqrt(1+k^2)) is handled exactly by a per-mode
2x2 matrix exponential (integrating factor); the nonlinear part by classical
RK4 stages with 2/3-rule dealiasing. A traveling wave (U, -c U) is an exact
solution translating at speed c; the conserved quantities

    H = int [ (u_x)^2/2 + u^2/2 - F(u) + v^2/2 ],  Q = <u, v>,
    M1 = int u,  M2 = int v

are monitored along every run.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowupError, InconclusiveError, UsageError

__all__ = [
    "SimulationState",
    "BoussinesqIntegrator",
    "invariants",
    "orbit_distance",
    "mode_seed",
    "traveling_state",
    "growth_rate_experiment",
    "boundedness_experiment",
]


def _power(u, q):
    if abs(q - round(q)) < 1e-12:
        return u ** int(round(q))
    return u ** q


@dataclass
class SimulationState:
    """Fields on the periodic grid at time t plus the invariant log."""

    u: np.ndarray
    v: np.ndarray
    t: float
    dt: float
    invariants_log: list = field(default_factory=list)

    def record(self, inv):
        self.invariants_log.append((self.t, *inv))

    def max_invariant_drift(self):
        """Max relative drift of (H, Q, M1, M2) against the initial record."""
        log = np.asarray(self.invariants_log)
        if log.shape[0] < 2:
            return 0.0
        first = log[0, 1:]
        scale = np.maximum(np.abs(first), 1e-8)
        return float(np.max(np.abs(log[:, 1:] - first) / scale))


def invariants(u, v, L, p):
    """(H, Q, M1, M2) by the trapezoid rule with spectral u_x."""
    N = u.size
    w = 2.0 * L / N
    k = 2.0 * np.pi * np.fft.rfftfreq(N, d=2.0 * L / N)
    ux = np.fft.irfft(1j * k * np.fft.rfft(u), n=N)
    F = _power(u, p + 2.0) / (p + 2.0)
    H = w * float(np.sum(0.5 * ux**2 + 0.5 * u**2 - F + 0.5 * v**2))
    Q = w * float(np.sum(u * v))
    return (H, Q, w * float(np.sum(u)), w * float(np.sum(v)))


class BoussinesqIntegrator:
    """Integrating-factor RK4 stepper in Fourier (rfft) space.

    dt may be negative (used by the time-reversal check). The per-mode linear
    propagator over tau is cos(w tau) I + sin(w tau)/w * M with
    M = [[0, ik], [ik(1+k^2), 0]], w = k sqrt(1+k^2).
    """

    def __init__(self, N, L, p, dt, dealias=True):
        if N % 2 != 0 or N < 16:
            raise UsageError(f"N must be even and >= 16, got {N}")
        self.N = int(N)
        self.L = float(L)
        self.p = float(p)
        self.dt = float(dt)
        self.k = 2.0 * np.pi * np.fft.rfftfreq(N, d=2.0 * L / N)
        kmax = float(np.max(self.k))
        self.mask = (self.k <= (2.0 / 3.0) * kmax) if dealias \
            else np.ones_like(self.k, dtype=bool)
        self._half = self._propagator(0.5 * self.dt)
        self._full = self._propagator(self.dt)

    def _propagator(self, tau):
        k = self.k
        w = k * np.sqrt(1.0 + k * k)
        cw = np.cos(w * tau)
        sw = np.empty_like(w)
        nz = w > 0
        sw[nz] = np.sin(w[nz] * tau) / w[nz]
        sw[~nz] = tau          # multiplies M = 0 at k = 0 anyway
        return cw, sw * (1j * k), sw * (1j * k * (1.0 + k * k))

    @staticmethod
    def _apply(prop, uh, vh):
        cw, m01, m10 = prop
        return cw * uh + m01 * vh, m10 * uh + cw * vh

    def _nonlinear(self, uh):
        """v-slot forcing -ik * dealias(fft(f(u)))."""
        u = np.fft.irfft(uh, n=self.N)
        fh = np.fft.rfft(_power(u, self.p + 1.0))
        return -1j * self.k * (fh * self.mask)

    def step_spectral(self, uh, vh):
        # classical IF-RK4: stages propagated to their evaluation times, the
        # nonlinearity enters the v slot only but rotates into both under E
        h = self.dt
        zero = np.zeros_like(uh)
        n1 = self._nonlinear(uh)
        y2u, _ = self._apply(self._half, uh, vh + 0.5 * h * n1)
        n2 = self._nonlinear(y2u)
        yhu, _ = self._apply(self._half, uh, vh)
        n3 = self._nonlinear(yhu)           # Y3 adds h/2*N2 in the v slot only
        yfu, yfv = self._apply(self._full, uh, vh)
        e3u, _ = self._apply(self._half, zero, n3)
        n4 = self._nonlinear(yfu + h * e3u)
        e1u, e1v = self._apply(self._full, zero, n1)
        e2u, e2v = self._apply(self._half, zero, n2 + n3)
        uf = yfu + (h / 6.0) * (e1u + 2.0 * e2u)
        vf = yfv + (h / 6.0) * (e1v + 2.0 * e2v + n4)
        return uf, vf

    def run(self, state, n_steps, sample_every=10):
        """Advance n_steps from state (in place), logging invariants."""
        uh = np.fft.rfft(state.u)
        vh = np.fft.rfft(state.v)
        t0 = state.t
        if not state.invariants_log:
            state.record(invariants(state.u, state.v, self.L, self.p))
        for i in range(1, n_steps + 1):
            uh, vh = self.step_spectral(uh, vh)
            if not np.all(np.isfinite(uh)) or np.max(np.abs(uh)) > 1e12:
                raise BlowupError("solution lost finiteness", t=t0 + i * self.dt)
            if i % sample_every == 0 or i == n_steps:
                state.u = np.fft.irfft(uh, n=self.N)
                state.v = np.fft.irfft(vh, n=self.N)
                state.t = t0 + i * self.dt
                state.record(invariants(state.u, state.v, self.L, self.p))
        return state


# ---------------------------------------------------------------------------
# wave-relative measurements and experiments
# ---------------------------------------------------------------------------

def orbit_distance(u, wave):
    """L2 distance from u to the translation orbit {U(. - s)}.

    The best shift maximizes the trigonometric cross correlation, found on a
    zero-padded grid and polished by Newton on its derivative.
    """
    N = wave.N
    w = wave.grid.weight
    uh = np.fft.fft(u)
    Uh = np.fft.fft(wave.samples)
    k = 2.0 * np.pi * np.fft.fftfreq(N, d=2.0 * L_of(wave) / N)
    prod = uh * np.conj(Uh)

    pad = 8
    corr = np.fft.ifft(np.concatenate([prod[:N // 2], np.zeros((pad - 1) * N),
                                       prod[N // 2:]])).real * pad
    j = int(np.argmax(corr))
    s = j * 2.0 * L_of(wave) / (pad * N)

    # Newton on C'(s) = (w/N) Re sum ik prod e^{iks}
    for _ in range(4):
        e = np.exp(1j * k * s)
        d1 = float(np.real(np.sum(1j * k * prod * e)))
        d2 = float(np.real(np.sum(-(k**2) * prod * e)))
        if d2 >= 0 or not math.isfinite(d1 / d2):
            break
        s -= d1 / d2
    Ushift = np.fft.ifft(Uh * np.exp(-1j * k * s)).real
    return float(np.sqrt(w * np.sum((u - Ushift) ** 2))), s


def L_of(wave):
    return wave.L


def mode_seed(wave, disc, lam, vec_coef):
    """Physical perturbation pair from a pencil eigenvector.

    The pencil variable w gives the u-perturbation d/dx w and the
    v-perturbation lam*w - c d/dx w; the real part is normalized to unit L2
    norm in the u slot.
    """
    g = wave.grid
    w_phys = g.from_coef(vec_coef.real) + 1j * g.from_coef(vec_coef.imag)
    du = g.D @ w_phys
    dv = lam * w_phys - wave.c * du
    du, dv = du.real.copy(), dv.real.copy()
    nrm = g.norm(du)
    if nrm < 1e-13:
        raise InconclusiveError("eigenvector has vanishing u-perturbation")
    return du / nrm, dv / nrm


def traveling_state(wave, dt):
    """Initial data (U, -c U) for the exact traveling solution."""
    return SimulationState(u=wave.samples.copy(),
                           v=-wave.c * wave.samples.copy(), t=0.0, dt=dt)


def growth_rate_experiment(wave, lam_max, seed_pair, amplitude, horizon,
                           dt=None, sample_every=None):
    """Seed the wave with an unstable eigenmode and fit the growth rate.

    Fits log(orbit distance) linearly in t over the window where the
    perturbation lies in [10*amplitude, 1e-3*||U||]; raises InconclusiveError
    if fewer than five samples land in the window. Returns (rate, samples).
    """
    g = wave.grid
    normU = g.norm(wave.samples)
    if amplitude > 1e-6 * max(normU, 1e-30):
        raise UsageError("amplitude must be <= 1e-6 * ||U||")
    if dt is None:
        dt = min(0.01, 0.25 * 2.0 * wave.L / wave.N)
    n_steps = int(math.ceil(horizon / dt))
    if sample_every is None:
        sample_every = max(1, n_steps // 400)

    du, dv = seed_pair
    state = SimulationState(u=wave.samples + amplitude * du,
                            v=-wave.c * wave.samples + amplitude * dv,
                            t=0.0, dt=dt)
    stepper = BoussinesqIntegrator(wave.N, wave.L, wave.params.p, dt)
    uh = np.fft.rfft(state.u)
    vh = np.fft.rfft(state.v)
    times, dists = [], []
    lower, upper = 10.0 * amplitude, 1e-3 * normU
    t = 0.0
    for i in range(1, n_steps + 1):
        uh, vh = stepper.step_spectral(uh, vh)
        t = i * dt
        if i % sample_every == 0:
            u = np.fft.irfft(uh, n=wave.N)
            d, _ = orbit_distance(u, wave)
            times.append(t)
            dists.append(d)
            if d > upper:
                break
    times = np.array(times)
    dists = np.array(dists)
    window = (dists >= lower) & (dists <= upper)
    if np.sum(window) < 5:
        raise InconclusiveError(
            f"growth window had {int(np.sum(window))} samples (need >= 5)")
    slope = np.polyfit(times[window], np.log(dists[window]), 1)[0]
    return float(slope), (times, dists)


def boundedness_experiment(wave, amplitude, horizon, dt=None, seed=0,
                           sample_every=None):
    """Generic small perturbation of an index-zero wave; returns the max
    ratio of orbit distance to the seeded amplitude over the horizon."""
    g = wave.grid
    if dt is None:
        dt = min(0.01, 0.25 * 2.0 * wave.L / wave.N)
    n_steps = int(math.ceil(horizon / dt))
    if sample_every is None:
        sample_every = max(1, n_steps // 200)

    rng = np.random.default_rng(seed)
    xi = g.xi
    du = np.zeros(wave.N)
    dv = np.zeros(wave.N)
    for k in range(1, 5):
        kt = np.pi * k / wave.L
        au, bu, av, bv = rng.standard_normal(4)
        du += au * np.cos(kt * xi) + bu * np.sin(kt * xi)
        dv += av * np.cos(kt * xi) + bv * np.sin(kt * xi)
    du /= g.norm(du)
    dv /= g.norm(dv)

    state = SimulationState(u=wave.samples + amplitude * du,
                            v=-wave.c * wave.samples + amplitude * dv,
                            t=0.0, dt=dt)
    stepper = BoussinesqIntegrator(wave.N, wave.L, wave.params.p, dt)
    uh = np.fft.rfft(state.u)
    vh = np.fft.rfft(state.v)
    worst = 0.0
    series = []
    for i in range(1, n_steps + 1):
        uh, vh = stepper.step_spectral(uh, vh)
        if i % sample_every == 0 or i == n_steps:
            u = np.fft.irfft(uh, n=wave.N)
            d, _ = orbit_distance(u, wave)
            series.append((i * dt, d))
            worst = max(worst, d / amplitude)
    return worst, series
