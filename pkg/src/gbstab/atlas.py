"""Parameter-space scans and asymptotic-limit checks.

scan_plane evaluates the closed-form index triple over an (a, E) grid at
fixed nonlinearity and rescaled speed, tolerating per-point nonexistence;
results stream to CSV/JSON (and an optional SVG heatmap). The two limit
checks probe the ends of the a = b = 0 family: the solitary-wave limit
E -> 0^- where sign(D_gKdV) stabilizes to -sign(4 - p), and the equilibrium
limit E -> E*^+ where the period approaches 2*pi/sqrt(p*chat), D_gKdV stays
negative, and the critical speed c* tends to 0 (chat* -> 1).
"""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .errors import (DegenerateOrbitError, GbstabError, LimitInconclusive,
                     NearDegenerateError, NonexistenceError, UsageError)
from .index import index_from_formula
from .profile import WaveParameters, equilibrium_energy, sample_profile

__all__ = [
    "ScanPoint",
    "scan_plane",
    "write_scan_csv",
    "write_scan_json",
    "write_scan_svg",
    "dispersion_eigenvalues",
    "solitary_limit_check",
    "equilibrium_limit_check",
]

CSV_COLUMNS = ["p", "a", "E", "chat", "status", "nL2", "n_s1", "nD",
               "count", "chat_star"]


@dataclass(frozen=True)
class ScanPoint:
    """Formula-index data of one grid node; status ok | nonexistent |
    degenerate | error:<kind>."""

    p: float
    a: float
    E: float
    chat: float
    status: str
    nL2: int | None = None
    n_s1: int | None = None
    nD: int | None = None
    count: int | None = None
    chat_star: float | None = None

    def row(self):
        return [self.p, self.a, self.E, self.chat, self.status, self.nL2,
                self.n_s1, self.nD, self.count, self.chat_star]


def _scan_node(args):
    p, a, E, chat, csign, N, u_hint = args
    try:
        wave = sample_profile(
            WaveParameters(p=p, a=a, E=E, chat=chat, csign=csign), N,
            u_hint=u_hint)
        rep = index_from_formula(wave)
    except NonexistenceError:
        return ScanPoint(p=p, a=a, E=E, chat=chat, status="nonexistent")
    except (DegenerateOrbitError, NearDegenerateError):
        return ScanPoint(p=p, a=a, E=E, chat=chat, status="degenerate")
    except GbstabError as exc:
        return ScanPoint(p=p, a=a, E=E, chat=chat,
                         status=f"error:{type(exc).__name__}")
    return ScanPoint(p=p, a=a, E=E, chat=chat, status="ok", nL2=rep.nL2,
                     n_s1=rep.n_s1, nD=rep.nD, count=rep.count,
                     chat_star=rep.chat_star)


def scan_plane(p, a_range, E_range, chat, resolution, N=96, csign=1,
               u_hint=None, workers=None):
    """Index triples over a resolution x resolution grid of (a, E).

    Per-point failures are recorded in the point status, never fatal.
    Points are returned in row-major (a-major) order regardless of the
    worker pool's completion order.
    """
    if resolution < 2:
        raise UsageError(f"resolution must be >= 2, got {resolution}")
    a_vals = np.linspace(a_range[0], a_range[1], resolution)
    E_vals = np.linspace(E_range[0], E_range[1], resolution)
    tasks = [(p, float(a), float(E), chat, csign, N, u_hint)
             for a in a_vals for E in E_vals]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_scan_node, tasks, chunksize=8))
    else:
        points = [_scan_node(t) for t in tasks]
    return points


def write_scan_csv(points, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for pt in points:
            writer.writerow(["" if x is None else repr(x) if isinstance(x, float)
                             else x for x in pt.row()])


def write_scan_json(points, path, meta):
    payload = {"meta": dict(meta, version=__version__, columns=CSV_COLUMNS),
               "points": [asdict(pt) for pt in points]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def write_scan_svg(points, path):
    """Heatmap of `count` with non-ok statuses hatched out (optional output)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    a_vals = sorted({pt.a for pt in points})
    E_vals = sorted({pt.E for pt in points})
    grid = np.full((len(E_vals), len(a_vals)), np.nan)
    ai = {a: i for i, a in enumerate(a_vals)}
    Ei = {E: i for i, E in enumerate(E_vals)}
    for pt in points:
        if pt.status == "ok":
            grid[Ei[pt.E], ai[pt.a]] = pt.count
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=(a_vals[0], a_vals[-1], E_vals[0], E_vals[-1]),
                   interpolation="nearest", cmap="viridis")
    fig.colorbar(im, ax=ax, label="predicted instability count")
    ax.set_xlabel("a")
    ax.set_ylabel("E")
    fig.savefig(path, format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# asymptotic-limit checks
# ---------------------------------------------------------------------------

def dispersion_eigenvalues(p, chat, csign, L, nmodes):
    """Constant-state pencil eigenvalues lam = i c k +- i k sqrt(c^2 + k^2 - p chat)
    for the retained modes k = pi, 2pi, ..., nmodes*pi over L (both signs)."""
    c = csign * np.sqrt(1.0 - chat)
    lams = []
    for k in np.pi * np.arange(1, nmodes + 1) / L:
        r = np.emath.sqrt(c * c + k * k - p * chat)
        for s1 in (1.0, -1.0):
            for s2 in (1.0, -1.0):
                lams.append(s1 * 1j * c * k + s2 * 1j * k * r)
    return np.array(lams)


@dataclass(frozen=True)
class LimitVerdict:
    ok: bool
    detail: dict


def solitary_limit_check(p, chat, N=256, factors=(1e-2, 1e-3, 1e-4)):
    """sign(D_gKdV) along E = -|E*| * factors must stabilize to -sign(4 - p).

    At p = 4 the limit coefficient vanishes; the check there is a decreasing
    |D_gKdV| trend across the samples.
    """
    Estar, _ = equilibrium_energy(p, chat=chat, a=0.0)
    ds = []
    for fac in factors:
        wave = sample_profile(
            WaveParameters(p=p, a=0.0, E=-abs(Estar) * fac, chat=chat), N)
        ds.append(index_from_formula(wave).Dgkdv)
    detail = {"E_samples": [-abs(Estar) * f for f in factors], "Dgkdv": ds}
    if abs(p - 4.0) < 1e-12:
        ok = all(abs(d2) < abs(d1) for d1, d2 in zip(ds[:-1], ds[1:]))
        if not ok:
            raise LimitInconclusive("|Dgkdv| not decreasing at p = 4",
                                    samples=ds)
        return LimitVerdict(ok=True, detail=dict(detail, expected="|D| -> 0"))
    expected = -np.sign(4.0 - p)
    # stabilized: the closest sample has the limit sign, and either the next
    # one does too or the sequence moves monotonically toward that sign
    # (for p slightly above 4 the crossing sits inside the sampled window)
    settled = np.sign(ds[-1]) == expected and (
        np.sign(ds[-2]) == expected or np.sign(ds[-1] - ds[-2]) == expected)
    if not settled:
        raise LimitInconclusive(
            f"sign(Dgkdv) did not stabilize to {expected:+.0f}", samples=ds)
    return LimitVerdict(ok=True, detail=dict(detail, expected=float(expected)))


def equilibrium_limit_check(p, chat, N=128, rel_offsets=(1e-1, 3e-2, 1e-2),
                            period_offset=1e-6, period_rtol=1e-4):
    """Small-amplitude limit of the a = b = 0 family.

    Checks: the period tends to 2 pi / sqrt(p chat) within period_rtol
    (measured at period_offset, a pure quadrature evaluation); the nearby
    nonconstant waves have Dgkdv < 0; the critical speed trend
    c* = sqrt(1 - chat*) decreases toward 0 (chat* -> 1); and the constant
    state itself is spectrally stable at the limit period by the dispersion
    relation (both signs of c). The index rows stay at offsets where the
    Hill marginal mode (~1.5 * offset) is clear of the zero band.
    """
    from .profile import half_period

    Estar, _ = equilibrium_energy(p, chat=chat, a=0.0)
    T_limit = 2.0 * np.pi / np.sqrt(p * chat)
    rows = []
    for off in rel_offsets:
        E = Estar + abs(Estar) * off
        wave = sample_profile(WaveParameters(p=p, a=0.0, E=E, chat=chat), N)
        rep = index_from_formula(wave)
        if rep.chat_star is None:
            raise LimitInconclusive("Dgkdv >= 0 near the equilibrium",
                                    samples=[rep.Dgkdv])
        rows.append({"E": E, "T": 2.0 * wave.L, "Dgkdv": rep.Dgkdv,
                     "chat_star": rep.chat_star,
                     "c_star": float(np.sqrt(max(1.0 - rep.chat_star, 0.0)))})
    T_near = 2.0 * half_period(WaveParameters(
        p=p, a=0.0, E=Estar + abs(Estar) * period_offset, chat=chat))
    T_err = abs(T_near - T_limit) / T_limit
    if T_err > period_rtol:
        raise LimitInconclusive(
            f"period error {T_err:.2e} at offset {period_offset:g}",
            samples=[T_near])
    if not all(r["Dgkdv"] < 0 for r in rows):
        raise LimitInconclusive("Dgkdv lost negativity near the equilibrium",
                                samples=[r["Dgkdv"] for r in rows])
    cs = [r["c_star"] for r in rows]
    if not all(c2 < c1 for c1, c2 in zip(cs[:-1], cs[1:])):
        raise LimitInconclusive("c* not decreasing toward 0", samples=cs)

    L_limit = np.pi / np.sqrt(p * chat)
    max_growth = 0.0
    for csign in (1, -1):
        lams = dispersion_eigenvalues(p, chat, csign, L_limit, N // 2 - 1)
        max_growth = max(max_growth, float(np.max(lams.real)))
    ok = max_growth <= 1e-10
    if not ok:
        raise LimitInconclusive(
            f"constant state not dispersion-stable: max Re = {max_growth:.2e}")
    return LimitVerdict(ok=True, detail={
        "T_limit": T_limit, "T_err": T_err, "rows": rows,
        "max_dispersion_growth": max_growth})
