"""Parameter scans, region constancy, and asymptotic-limit verdicts."""

import json

import numpy as np
import pytest

from conftest import REGION_POINTS
from gbstab.atlas import (CSV_COLUMNS, equilibrium_limit_check, scan_plane,
                          solitary_limit_check, write_scan_csv,
                          write_scan_json, write_scan_svg)
from gbstab.errors import UsageError


def _point_at(points, a, E):
    return next(pt for pt in points
                if abs(pt.a - a) < 1e-12 and abs(pt.E - E) < 1e-12)


def test_scan_contains_region_samples_and_nonexistent():
    # grid rows hit the frozen (a) sample of p=2 and a nonexistent point
    pts = scan_plane(2.0, (0.10, 0.20), (-0.40, -0.02), 0.7, resolution=3,
                     N=96)
    assert len(pts) == 9
    ok = _point_at(pts, 0.10, -0.02)
    assert ok.status == "ok"
    assert (ok.nL2, ok.n_s1, ok.nD) == (1, 0, 1)
    outside = _point_at(pts, 0.10, -0.40)      # below the potential well
    assert outside.status == "nonexistent"


def test_scan_p4_region_c_sample():
    pts = scan_plane(4.0, (1.5, 1.6), (1.65, 1.75), 0.7, resolution=2, N=160)
    pt = _point_at(pts, 1.5, 1.65)
    assert pt.status == "ok"
    assert (pt.nL2, pt.n_s1, pt.nD) == (2, 1, 0)


def test_scan_never_fatal_and_statuses():
    pts = scan_plane(2.0, (0.0, 0.1), (-0.5, 0.3), 0.7, resolution=4, N=96)
    statuses = {pt.status for pt in pts}
    assert statuses <= {"ok", "nonexistent", "degenerate"} | \
        {s for s in statuses if s.startswith("error:")}
    assert any(pt.status == "ok" for pt in pts)
    assert any(pt.status == "nonexistent" for pt in pts)


def test_scan_resolution_validation():
    with pytest.raises(UsageError):
        scan_plane(2.0, (0, 1), (0, 1), 0.7, resolution=1)


def test_scan_worker_pool_deterministic():
    kw = dict(N=96)
    seq = scan_plane(2.0, (0.0, 0.15), (-0.2, 0.1), 0.7, 3, **kw)
    par = scan_plane(2.0, (0.0, 0.15), (-0.2, 0.1), 0.7, 3, workers=3, **kw)
    assert seq == par


def test_region_constancy_flood_fill():
    # interior box of the p=2 big-orbit region: all ok nodes share the triple
    pts = scan_plane(2.0, (0.02, 0.08), (0.01, 0.05), 0.7, resolution=4, N=96)
    triples = {(pt.nL2, pt.n_s1, pt.nD) for pt in pts if pt.status == "ok"}
    assert triples == {(2, 0, 1)}


def test_p1_global_triple_claim():
    pts = scan_plane(1.0, (-0.01, 0.05), (-0.12, -0.02), 1.0, resolution=4,
                     N=96)
    ok = [pt for pt in pts if pt.status == "ok"]
    assert ok
    assert {(pt.nL2, pt.n_s1, pt.nD) for pt in ok} == {(1, 0, 1)}
    assert all(0.0 < pt.chat_star < 1.0 for pt in ok)


def test_p5_long_period_waves_unstable(cache):
    # E near 0^- at a = b = 0: formula count 1 and direct k_r = 1
    Estar = -0.21676
    wave = cache.wave(5.0, 0.0, 0.001 * Estar, 0.7, N=256)
    _, _, rep, verdict = cache.full(wave)
    assert verdict.formula.count == 1
    assert rep.k_r == 1
    assert verdict.equal


def test_scan_csv_json_outputs(tmp_path):
    pts = scan_plane(2.0, (0.0, 0.1), (-0.2, 0.05), 0.7, resolution=3, N=96)
    csv_path = tmp_path / "scan.csv"
    json_path = tmp_path / "scan.json"
    write_scan_csv(pts, csv_path)
    write_scan_json(pts, json_path, meta={"grid": [3, 3]})
    header = csv_path.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    data = json.loads(json_path.read_text())
    assert data["meta"]["columns"] == CSV_COLUMNS
    assert len(data["points"]) == 9
    # deterministic rewrite
    write_scan_csv(pts, tmp_path / "scan2.csv")
    assert (tmp_path / "scan2.csv").read_bytes() == csv_path.read_bytes()


def test_scan_svg_smoke(tmp_path):
    pts = scan_plane(2.0, (0.0, 0.1), (-0.2, 0.05), 0.7, resolution=3, N=96)
    out = tmp_path / "scan.svg"
    write_scan_svg(pts, out)
    assert out.read_text().lstrip().startswith("<?xml")


# ---------------------------------------------------------------------------
# asymptotic limits
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("p,expected", [(2.0, -1.0), (5.0, 1.0)])
def test_solitary_limit_signs(p, expected):
    verdict = solitary_limit_check(p, 0.7)
    assert verdict.ok
    assert np.sign(verdict.detail["Dgkdv"][-1]) == expected


def test_solitary_limit_p4_trend():
    verdict = solitary_limit_check(4.0, 0.7)
    assert verdict.ok
    mags = [abs(d) for d in verdict.detail["Dgkdv"]]
    assert mags[2] < mags[1] < mags[0]


@pytest.mark.parametrize("p,chat,expected_T", [
    (2.0, 1.0, 2.0 * np.pi / np.sqrt(2.0)),
    (1.0, 0.5, 2.0 * np.pi / np.sqrt(0.5)),
])
def test_equilibrium_limit(p, chat, expected_T):
    verdict = equilibrium_limit_check(p, chat)
    assert verdict.ok
    assert verdict.detail["T_limit"] == pytest.approx(expected_T, rel=1e-12)
    assert verdict.detail["T_err"] < 1e-4
    # c* decreasing toward 0 (equivalently chat* -> 1)
    cs = [row["c_star"] for row in verdict.detail["rows"]]
    assert cs[-1] < cs[0]
    assert verdict.detail["max_dispersion_growth"] <= 1e-10
