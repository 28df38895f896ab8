"""Periodic traveling-wave profiles of the good Boussinesq equation.

In the co-moving frame a 2L-periodic wave U solves the planar ODE

    U'' = a_eff + chat*U - f(U),    f(u) = u^(p+1),  chat = 1 - c^2,

with a_eff = a + c*b, which has the first integral

    E = (U')^2 / 2 + V(U),    V(u) = -a_eff*u - chat*u^2/2 + u^(p+2)/(p+2).

A periodic orbit lives between two adjacent simple roots U- < U+ of V(u) = E
with V < E in between. Profiles are built by inverting the quadrature map

    xi(U) = (1/sqrt(2)) * int_{U-}^{U} dW / sqrt(E - V(W)),

never by marching the ODE. The substitution U = m - h*cos(theta) with
m = (U+ + U-)/2, h = (U+ - U-)/2 removes the square-root endpoint
singularities, so the integrand extends to a smooth even 2pi-periodic function
of theta and both the half-period L = xi(U+) and the inverse map are obtained
spectrally from a cosine expansion.

The phase is normalized to U(0) = U-, giving an even profile with odd spectral
derivative, so the translation mode is exactly grid-orthogonal to constants
and to U itself.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import optimize

from .errors import (AccuracyError, DegenerateOrbitError, NonexistenceError,
                     UsageError)
from .grids import PeriodicGrid

__all__ = [
    "WaveParameters",
    "PeriodicWave",
    "ConservedMaps",
    "potential",
    "turning_points",
    "half_period",
    "sample_profile",
    "profile_values",
    "constant_wave",
    "equilibrium_energy",
    "conserved_maps",
    "scaled_parameters",
]

_DOUBLE_ROOT_CUTOFF = 1e-8
_QUAD_TOL = 1e-12
_EQUILIBRIUM_TOL = 1e-13


# ---------------------------------------------------------------------------
# parameters and nonlinearity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveParameters:
    """Identifies one periodic wave: (p, a, b, E, chat, sign of c).

    chat = 1 - c^2 is the rescaled wavespeed; chat in (0, 1] with
    c = csign * sqrt(1 - chat) (chat = 1 gives the stationary wave c = 0).
    """

    p: float
    a: float
    E: float
    chat: float
    b: float = 0.0
    csign: int = 1

    def __post_init__(self):
        if not self.p >= 1.0:
            raise UsageError(f"nonlinearity exponent must satisfy p >= 1, got {self.p}")
        if not (0.0 < self.chat <= 1.0):
            raise UsageError(f"chat must lie in (0, 1], got {self.chat}")
        if self.csign not in (-1, 1):
            raise UsageError(f"csign must be +1 or -1, got {self.csign}")
        for name in ("p", "a", "E", "chat", "b"):
            if not math.isfinite(getattr(self, name)):
                raise UsageError(f"parameter {name} must be finite")

    @property
    def c(self):
        return self.csign * math.sqrt(1.0 - self.chat)

    @property
    def a_eff(self):
        """Quadrature constant actually entering the profile ODE: a + c*b."""
        return self.a + self.c * self.b


def _p_is_integer(p):
    return abs(p - round(p)) < 1e-12


def _check_domain(u, p):
    if not _p_is_integer(p) and np.any(np.asarray(u) < 0.0):
        raise UsageError(f"non-integer p={p} requires u >= 0")


def nonlinearity(u, p):
    """f(u) = u^(p+1)."""
    _check_domain(u, p)
    if _p_is_integer(p):
        return np.asarray(u) ** (int(round(p)) + 1)
    return np.asarray(u) ** (p + 1.0)


def nonlinearity_prime(u, p):
    """f'(u) = (p+1) u^p."""
    _check_domain(u, p)
    if _p_is_integer(p):
        return (p + 1.0) * np.asarray(u) ** int(round(p))
    return (p + 1.0) * np.asarray(u) ** p


def nonlinearity_antiderivative(u, p):
    """F(u) = u^(p+2)/(p+2), F' = f."""
    _check_domain(u, p)
    if _p_is_integer(p):
        return np.asarray(u) ** (int(round(p)) + 2) / (p + 2.0)
    return np.asarray(u) ** (p + 2.0) / (p + 2.0)


def _potential_raw(u, p, a_eff, chat):
    u = np.asarray(u, dtype=float)
    return -a_eff * u - 0.5 * chat * u**2 + nonlinearity_antiderivative(u, p)


def _potential_d1(u, p, a_eff, chat):
    u = np.asarray(u, dtype=float)
    return -a_eff - chat * u + nonlinearity(u, p)


def _potential_d2(u, p, a_eff, chat):
    u = np.asarray(u, dtype=float)
    return -chat + nonlinearity_prime(u, p)


def potential(u, params):
    """Potential V(u) of the profile ODE first integral."""
    return _potential_raw(u, params.p, params.a_eff, params.chat)


# ---------------------------------------------------------------------------
# wells and turning points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Well:
    Um: float
    Up: float
    center: float       # interior minimum of V
    Vmin: float
    degenerate: bool


def _critical_points(p, a_eff, chat):
    """Real critical points of V, ascending (u > 0 only for non-integer p)."""
    if _p_is_integer(p):
        # u^(p+1) - chat*u - a_eff = 0 as a polynomial root find
        deg = int(round(p)) + 1
        coefs = np.zeros(deg + 1)
        coefs[0] = -a_eff
        coefs[1] = -chat
        coefs[deg] = 1.0
        roots = np.polynomial.polynomial.polyroots(coefs)
        crit = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-10)
    else:
        # scan u > 0 for sign changes of V'
        hi = max(2.0, (2.0 * (chat + abs(a_eff) + 1.0)) ** (1.0 / p))
        us = np.linspace(1e-12, hi, 4001)
        d1 = _potential_d1(us, p, a_eff, chat)
        crit = []
        for i in np.flatnonzero(np.sign(d1[:-1]) * np.sign(d1[1:]) < 0):
            r = optimize.brentq(lambda u: float(_potential_d1(u, p, a_eff, chat)),
                                us[i], us[i + 1], xtol=1e-14, rtol=1e-15)
            crit.append(float(r))
    # dedupe near-coincident roots
    out = []
    for r in crit:
        if not out or abs(r - out[-1]) > 1e-10 * (1.0 + abs(r)):
            out.append(r)
    return out


def _scan_bounds(p, a_eff, chat, E):
    """Interval guaranteed to contain every root of V(u) = E."""
    lo = 0.0 if not _p_is_integer(p) else -2.0
    hi = 2.0
    for _ in range(200):
        if _potential_raw(hi, p, a_eff, chat) > E + 1.0 + abs(E):
            break
        hi *= 1.5
    if _p_is_integer(p):
        pint = int(round(p))
        if pint % 2 == 0:
            # even p: V -> +inf on both sides; extend until above E
            for _ in range(200):
                if _potential_raw(lo, p, a_eff, chat) > E + 1.0 + abs(E):
                    break
                lo *= 1.5
        else:
            # odd p: V -> -inf as u -> -inf, so no well closes below the
            # leftmost critical point
            crit = _critical_points(p, a_eff, chat)
            lo = (crit[0] - 1.0) if crit else -2.0
    return lo, hi


def _find_wells(params):
    """All periodic wells at energy E: adjacent simple roots with V < E between.

    V is monotone between consecutive critical points, so bracketing each
    segment by its endpoint signs finds every root exactly (a blind scan would
    miss the exponentially thin wells near the equilibrium limit).
    """
    p, a_eff, chat, E = params.p, params.a_eff, params.chat, params.E
    lo, hi = _scan_bounds(p, a_eff, chat, E)
    crit = [u for u in _critical_points(p, a_eff, chat) if lo < u < hi]
    nodes = [lo] + crit + [hi]

    def vres(u):
        return float(_potential_raw(u, p, a_eff, chat)) - E

    roots = []
    for left, right in zip(nodes[:-1], nodes[1:]):
        fl, fr = vres(left), vres(right)
        if fl == 0.0:
            roots.append(left)
            continue
        if fl * fr < 0.0:
            roots.append(float(optimize.brentq(vres, left, right,
                                               xtol=1e-15, rtol=1e-15)))
    if nodes and vres(nodes[-1]) == 0.0:
        roots.append(nodes[-1])
    roots = sorted(set(roots))

    wells = []
    minima = [u for u in crit if _potential_d2(u, p, a_eff, chat) > 0]
    for r1, r2 in zip(roots[:-1], roots[1:]):
        if vres(0.5 * (r1 + r2)) >= 0.0:
            continue
        width = r2 - r1
        d1m = float(_potential_d1(r1, p, a_eff, chat))
        d1p = float(_potential_d1(r2, p, a_eff, chat))
        d2m = float(_potential_d2(r1, p, a_eff, chat))
        d2p = float(_potential_d2(r2, p, a_eff, chat))
        degen = (abs(d1m) <= _DOUBLE_ROOT_CUTOFF * max(1.0, abs(d2m) * width)
                 or abs(d1p) <= _DOUBLE_ROOT_CUTOFF * max(1.0, abs(d2p) * width)
                 or width <= 1e-9 * max(1.0, abs(r1), abs(r2)))
        inside = [u for u in minima if r1 < u < r2]
        center = min(inside, key=lambda u: float(_potential_raw(u, p, a_eff, chat))) \
            if inside else 0.5 * (r1 + r2)
        wells.append(_Well(Um=r1, Up=r2, center=float(center),
                           Vmin=float(_potential_raw(center, p, a_eff, chat)),
                           degenerate=degen))
    return wells


def _select_well(wells, u_hint):
    if not wells:
        raise NonexistenceError("no periodic orbit: V(u) = E has no bracketing well")
    if u_hint is not None:
        inside = [w for w in wells if w.Um <= u_hint <= w.Up]
        if inside:
            return inside[0]
        return min(wells, key=lambda w: abs(w.center - u_hint))
    # default: the well with the deepest minimum, ties broken toward larger u
    best = min(w.Vmin for w in wells)
    tol = 1e-12 * (1.0 + abs(best))
    deepest = [w for w in wells if w.Vmin <= best + tol]
    return max(deepest, key=lambda w: w.center)


def turning_points(params, u_hint=None):
    """Adjacent simple roots U- < U+ of V(u) = E bracketing the selected well.

    Raises NonexistenceError when no well exists and DegenerateOrbitError when
    either root is (numerically) a double root, i.e. at the homoclinic or
    equilibrium limit. With several wells, `u_hint` picks the one containing
    (or nearest to) the hint; the default is the deepest well.
    """
    well = _select_well(_find_wells(params), u_hint)
    if well.degenerate:
        raise DegenerateOrbitError(
            f"double root near (U-, U+) = ({well.Um:.6g}, {well.Up:.6g})")
    scale = max(1.0, abs(params.E))
    for r in (well.Um, well.Up):
        res = abs(float(_potential_raw(r, params.p, params.a_eff, params.chat)) - params.E)
        if res > 1e-12 * scale:
            raise AccuracyError(f"turning-point residual {res:.3e} exceeds 1e-12*scale",
                                achieved=res)
    return well.Um, well.Up


# ---------------------------------------------------------------------------
# quadrature in the cosine variable
# ---------------------------------------------------------------------------

@dataclass
class _Quadrature:
    params: WaveParameters
    Um: float
    Up: float
    m: float
    h: float
    L: float
    coef: np.ndarray = field(repr=False)   # cosine coefficients of the integrand
    M: int = 0


def _energy_slope(W, r, t, p, a_eff, chat):
    """Divided difference [Q(W) - Q(r)] / (W - r) with Q = E - V, stable at t=0.

    Treating Q(r) as exactly zero at a turning point r removes the endpoint
    root without the catastrophic cancellation of E - V(W) (which destroys
    thin near-equilibrium orbits). The power term uses symmetric power sums
    for integer p and an expm1/log1p form for non-integer p (domain u > 0).
    """
    W = np.asarray(W, dtype=float)
    t = np.asarray(t, dtype=float)
    quad = a_eff + 0.5 * chat * (W + r)
    q = p + 2.0
    if _p_is_integer(p):
        n = int(round(q))
        S = np.zeros_like(W)
        for j in range(n):
            S = S + W**j * r ** (n - 1 - j)
        pow_part = S / n
    else:
        pow_part = np.empty_like(W)
        tiny = np.abs(t) <= 1e-300
        if np.any(~tiny):
            tt = t[~tiny]
            pow_part[~tiny] = r**q * np.expm1(q * np.log1p(tt / r)) / (q * tt)
        pow_part[tiny] = r ** (q - 1.0)
    return quad - pow_part


def _integrand_values(theta, params, Um, Up):
    """1/sqrt(G(theta)) with G = (E - V) / ((W - U-)(U+ - W)), W = m - h cos."""
    p, a_eff, chat = params.p, params.a_eff, params.chat
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    h = 0.5 * (Up - Um)
    t1 = 2.0 * h * np.sin(0.5 * theta) ** 2   # W - U-
    t2 = 2.0 * h * np.cos(0.5 * theta) ** 2   # U+ - W
    W = Um + t1
    G = np.empty_like(theta)

    # anchor at whichever turning point is closer, so the divisor stays >= h
    lo = t1 <= t2
    hi = ~lo
    if np.any(lo):
        G[lo] = _energy_slope(W[lo], Um, t1[lo], p, a_eff, chat) / t2[lo]
    if np.any(hi):
        G[hi] = -_energy_slope(W[hi], Up, -t2[hi], p, a_eff, chat) / t1[hi]

    if np.any(G <= 0.0):
        raise AccuracyError("regularized quadrature integrand lost positivity "
                            "(orbit too close to degenerate)")
    return 1.0 / np.sqrt(G)


def _build_quadrature(params, Um, Up, tol=_QUAD_TOL):
    """Cosine expansion of the regularized integrand, refined by node doubling."""
    m = 0.5 * (Up + Um)
    h = 0.5 * (Up - Um)
    L_prev = None
    for M in (64, 128, 256, 512, 1024, 2048, 4096, 8192):
        theta = np.pi * np.arange(M + 1) / M
        vals = _integrand_values(theta, params, Um, Up)
        coef = sfft.dct(vals, type=1) / M
        coef[0] *= 0.5
        coef[-1] *= 0.5
        # coef[0] is now the mean of the integrand over [0, pi]
        L = coef[0] * np.pi / np.sqrt(2.0)
        tail = np.max(np.abs(coef[M // 2:])) / max(np.abs(coef[0]), 1e-300)
        if L_prev is not None and abs(L - L_prev) <= tol * abs(L) and tail < 10 * tol:
            return _Quadrature(params=params, Um=Um, Up=Up, m=m, h=h,
                               L=float(L), coef=coef, M=M)
        L_prev = L
    raise AccuracyError("quadrature did not converge at 8192 nodes "
                        "(orbit too close to degenerate)")


def _phi(quad, theta):
    """xi(theta) = (1/sqrt 2) * int_0^theta of the integrand (vectorized)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = np.arange(1, quad.M + 1)
    series = np.sin(np.outer(theta, k)) @ (quad.coef[1:] / k)
    return (quad.coef[0] * theta + series) / np.sqrt(2.0)


def _invert_profile_map(quad, xi):
    """theta(xi) on [0, L] by safeguarded vectorized Newton."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    theta = np.clip(np.pi * xi / quad.L, 0.0, np.pi)
    tol = 1e-13 * max(quad.L, 1.0)
    for _ in range(100):
        r = _phi(quad, theta) - xi
        if np.max(np.abs(r)) <= tol:
            break
        slope = _integrand_values(theta, quad.params, quad.Um, quad.Up) / np.sqrt(2.0)
        theta = np.clip(theta - r / slope, 0.0, np.pi)
    r = _phi(quad, theta) - xi
    bad = np.flatnonzero(np.abs(r) > tol)
    for i in bad:
        theta[i] = optimize.brentq(lambda t: float(_phi(quad, t)[0] - xi[i]),
                                   0.0, np.pi, xtol=1e-15, rtol=1e-15)
    return theta


def half_period(params, u_hint=None):
    """Half-period L of the selected orbit, accurate to ~1e-12 relative.

    Internally doubles the quadrature node count until L and the coefficient
    tail stabilize; propagates DegenerateOrbitError from the turning points.
    """
    Um, Up = turning_points(params, u_hint=u_hint)
    return _build_quadrature(params, Um, Up).L


# ---------------------------------------------------------------------------
# sampled periodic waves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicWave:
    """A profile sampled on the uniform grid xi_j = -L + 2L j/N.

    `residual` is the max pointwise ODE residual |U'' - (a_eff + chat U - f(U))|
    with spectral derivatives; `energy_residual` the max pointwise defect of
    the first integral. The profile is even with U(0) = U-.
    """

    params: WaveParameters
    N: int
    L: float
    samples: np.ndarray
    Umean: float
    Uminus: float
    Uplus: float
    residual: float
    energy_residual: float
    grid: PeriodicGrid

    @property
    def is_constant(self):
        return self.Uplus - self.Uminus <= 1e-12 * max(1.0, abs(self.Uplus))

    @property
    def c(self):
        return self.params.c

    @property
    def chat(self):
        return self.params.chat


def _wave_from_samples(params, grid, samples, Um, Up, residual_tol):
    dU = grid.D @ samples
    ode_res = grid.D2 @ samples - (params.a_eff + params.chat * samples
                                   - nonlinearity(samples, params.p))
    en_res = 0.5 * dU**2 + _potential_raw(samples, params.p, params.a_eff,
                                          params.chat) - params.E
    residual = float(np.max(np.abs(ode_res)))
    energy_residual = float(np.max(np.abs(en_res)))
    if energy_residual > residual_tol:
        raise AccuracyError(
            f"energy-identity residual {energy_residual:.3e} exceeds "
            f"{residual_tol:.1e}; increase N", achieved=energy_residual)
    return PeriodicWave(params=params, N=grid.N, L=grid.L, samples=samples,
                        Umean=float(np.mean(samples)), Uminus=Um, Uplus=Up,
                        residual=residual, energy_residual=energy_residual,
                        grid=grid)


def equilibrium_energy(params_or_p, chat=None, a=0.0, u_hint=None):
    """Energy E*(a, chat) of the selected potential-well minimum."""
    if isinstance(params_or_p, WaveParameters):
        p, a_eff, chat = params_or_p.p, params_or_p.a_eff, params_or_p.chat
        E_probe = params_or_p.E
    else:
        p, a_eff = float(params_or_p), a
        E_probe = None
    crit = _critical_points(p, a_eff, chat)
    minima = [u for u in crit if _potential_d2(u, p, a_eff, chat) > 0]
    if not minima:
        raise NonexistenceError("potential has no well minimum")
    def _pick(key_fn):
        best = min(key_fn(u) for u in minima)
        tol = 1e-12 * (1.0 + abs(best))
        return max(u for u in minima if key_fn(u) <= best + tol)

    if u_hint is not None:
        u0 = _pick(lambda u: abs(u - u_hint))
    elif E_probe is not None:
        # the minimum whose energy is nearest the probe, larger u on ties
        u0 = _pick(lambda u: abs(float(_potential_raw(u, p, a_eff, chat)) - E_probe))
    else:
        u0 = _pick(lambda u: float(_potential_raw(u, p, a_eff, chat)))
    return float(_potential_raw(u0, p, a_eff, chat)), float(u0)


def constant_wave(p, chat, N, L=None, a=0.0, csign=1, u_hint=None):
    """Equilibrium (constant) wave U = u_min with prescribed period 2L.

    Default L is the small-amplitude limit period pi/sqrt(V''(u_min)).
    """
    probe = WaveParameters(p=p, a=a, E=0.0, chat=chat, csign=csign)
    Estar, u0 = equilibrium_energy(probe.p, chat=chat, a=probe.a_eff, u_hint=u_hint)
    params = WaveParameters(p=p, a=a, E=Estar, chat=chat, csign=csign)
    if L is None:
        L = np.pi / math.sqrt(float(_potential_d2(u0, p, params.a_eff, chat)))
    grid = PeriodicGrid(N, L)
    samples = np.full(N, u0)
    return PeriodicWave(params=params, N=N, L=float(L), samples=samples,
                        Umean=u0, Uminus=u0, Uplus=u0,
                        residual=0.0, energy_residual=0.0, grid=grid)


def sample_profile(params, N, u_hint=None, residual_tol=1e-8):
    """Grid-sampled periodic wave, built by inverting the quadrature map.

    N must be even and >= 32. At E = E*(a, chat) exactly (to ~1e-13 relative)
    the constant equilibrium profile with the limit period is returned.
    """
    if N % 2 != 0 or N < 32:
        raise UsageError(f"N must be even and >= 32, got {N}")
    try:
        Estar, u0 = equilibrium_energy(params, u_hint=u_hint)
        if abs(params.E - Estar) <= _EQUILIBRIUM_TOL * max(1.0, abs(Estar)):
            return constant_wave(params.p, params.chat, N, a=params.a,
                                 csign=params.csign, u_hint=u0)
    except NonexistenceError:
        pass
    Um, Up = turning_points(params, u_hint=u_hint)
    quad = _build_quadrature(params, Um, Up)
    grid = PeriodicGrid(N, quad.L)
    theta = _invert_profile_map(quad, np.abs(grid.xi))
    samples = quad.m - quad.h * np.cos(theta)
    return _wave_from_samples(params, grid, samples, Um, Up, residual_tol)


def profile_values(params, x, u_hint=None):
    """U evaluated at arbitrary points (periodic fold plus even reflection)."""
    Um, Up = turning_points(params, u_hint=u_hint)
    quad = _build_quadrature(params, Um, Up)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    folded = np.abs(np.mod(x + quad.L, 2.0 * quad.L) - quad.L)
    theta = _invert_profile_map(quad, folded)
    return quad.m - quad.h * np.cos(theta)


# ---------------------------------------------------------------------------
# conserved-quantity maps on the wave manifold
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConservedMaps:
    """(T, M1, Ptilde, M2) evaluated on the wave at (a, E, c, b).

    T = 2L, M1 = int u, Ptilde = -P + b*M1 with P = c int u^2, M2 = c*M1 - b*T.
    """

    T: float
    M1: float
    Ptilde: float
    M2: float


def conserved_maps(a, E, c, b, p, N=256, u_hint=None):
    """Trapezoid-rule conserved quantities over one period.

    The profile is built with the shifted constant a + c*b; chat = 1 - c^2.
    """
    if not abs(c) < 1.0:
        raise UsageError(f"wavespeed must satisfy |c| < 1, got {c}")
    chat = 1.0 - c * c
    csign = -1 if c < 0 else 1
    params = WaveParameters(p=p, a=a, E=E, chat=chat, b=b, csign=csign)
    wave = sample_profile(params, N, u_hint=u_hint)
    w = wave.grid.weight
    M1 = w * float(np.sum(wave.samples))
    P = c * w * float(np.sum(wave.samples**2))
    T = 2.0 * wave.L
    return ConservedMaps(T=T, M1=M1, Ptilde=-P + b * M1, M2=c * M1 - b * T)


def scaled_parameters(p, a_scaled, E_scaled, chat, csign=1, b=0.0):
    """Parameters of the self-similar family with fixed normalized shape.

    a = a_scaled * chat^((p+1)/p), E = E_scaled * chat^((p+2)/p): the profile
    ODE rescales chat out, so the wave exists for every chat in (0, 1] and its
    shape (hence all sign data of the index) is chat-independent.
    """
    return WaveParameters(p=p,
                          a=a_scaled * chat ** ((p + 1.0) / p),
                          E=E_scaled * chat ** ((p + 2.0) / p),
                          chat=chat, csign=csign, b=b)
