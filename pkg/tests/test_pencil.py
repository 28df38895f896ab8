"""Pencil assembly, projector, direct spectrum, Krein data, Krein matrix."""

import numpy as np
import pytest

from gbstab.atlas import dispersion_eigenvalues
from gbstab.hill import assemble_hill, gkdv_scalars, scalar_negcount
from gbstab.pencil import (assemble_pencil, build_projector, hypothesis_checks,
                           krein_matrix_eval, krein_zero_scan,
                           pencil_kernel_scalar, pencil_spectrum,
                           unprojected_eigenvalues)
from gbstab.profile import WaveParameters, constant_wave


@pytest.fixture(scope="module")
def p1_setup(cache):
    wave = cache.wave(1.0, 0.0, -0.1 * 0.6**3, 0.6, N=128)  # c != 0
    return (wave,) + cache.full(wave)


def test_quadratic_form_identity(p1_setup, rng):
    wave, hill, disc, _, _ = p1_setup
    g = wave.grid
    Dc = g.compress(g.D)
    Mc = g.compress(hill.matrix)
    for _ in range(20):
        u = rng.standard_normal(disc.size)
        lhs = float(u @ (disc.A @ u))
        du = Dc @ u
        rhs = float(du @ (Mc @ du))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_matrix_structure(p1_setup):
    _, _, disc, _, _ = p1_setup
    assert np.max(np.abs(disc.A - disc.A.T)) < 1e-12
    assert np.max(np.abs(disc.B + disc.B.T)) < 1e-12
    assert np.array_equal(disc.C, np.eye(disc.size))
    assert disc.size == 126  # N - 2


def test_nA_matches_hill_count(cache):
    for args, N in [((1.0, 0.0, -0.1, 1.0), 128),
                    ((2.0, 0.05, 0.01, 0.7), 128),
                    ((4.0, 0.1, 0.022, 0.7), 160)]:
        wave = cache.wave(*args, N=N)
        hill = assemble_hill(wave)
        disc = assemble_pencil(wave, hill)
        s = gkdv_scalars(hill)
        assert disc.nA == hill.nL2 - scalar_negcount(s.s1)


def test_kernel_vector_certificates(p1_setup):
    _, _, disc, _, _ = p1_setup
    assert disc.kerA_residual < 1e-6
    a = disc.kerA_vector
    assert abs(a @ (disc.B @ a)) < 1e-12 * (a @ a)
    assert disc.kernel_dim == 1


def test_constant_wave_A_diagonal(cache):
    p, chat = 2.0, 0.8
    L = 0.8 * np.pi / np.sqrt(p * chat)
    wave = cache.constant(p, chat, 64, L=L)
    hill = assemble_hill(wave)
    disc = assemble_pencil(wave, hill)
    kts = np.pi * np.repeat(np.arange(1, 32), 2) / L
    expected = kts**2 * (kts**2 - p * chat)
    off = disc.A - np.diag(np.diag(disc.A))
    assert np.max(np.abs(off)) < 1e-9 * np.max(np.abs(disc.A))
    rel = np.abs(np.sort(np.diag(disc.A)) - np.sort(expected)) \
        / (1.0 + np.abs(np.sort(expected)))
    assert np.max(rel) < 1e-10


def test_projector_properties(p1_setup):
    _, _, disc, _, _ = p1_setup
    P = disc.projector
    m = disc.size
    assert np.max(np.abs(P - P.T)) < 1e-12
    assert np.max(np.abs(P @ P - P)) < 1e-12
    a0 = disc.kernel_refined
    s1 = np.concatenate([a0, np.zeros(m)])
    s2 = np.concatenate([-disc.B @ a0, a0])
    assert np.max(np.abs(P @ s1)) < 1e-12
    assert np.max(np.abs(P @ s2)) < 1e-11
    assert disc.pbasis.shape == (2 * m, 2 * m - 2)


def test_unprojected_zero_has_multiplicity_two(p1_setup):
    _, _, disc, _, _ = p1_setup
    mags = np.sort(np.abs(unprojected_eigenvalues(disc)))
    assert mags[0] < 1e-5 and mags[1] < 1e-5
    assert mags[2] > 1e-2


def test_projected_spectrum_kernel_removed(p1_setup):
    _, _, _, rep, _ = p1_setup
    assert rep.min_magnitude > 1e-5


def test_symmetry_pairing(p1_setup):
    _, _, _, rep, _ = p1_setup
    assert rep.pairing_error < 1e-8
    assert rep.k_c % 2 == 0 and rep.k_i_minus % 2 == 0


@pytest.mark.parametrize("csign", [1, -1])
def test_constant_wave_dispersion(cache, csign):
    p, chat = 2.0, 0.75
    L = np.pi / 0.8
    wave = cache.constant(p, chat, 128, L=L, csign=csign)
    hill = assemble_hill(wave)
    disc = assemble_pencil(wave, hill)
    build_projector(disc)
    rep = pencil_spectrum(disc)
    lam_exact = dispersion_eigenvalues(p, chat, csign, L, 63)
    err = max(float(np.min(np.abs(rep.eigenvalues - z))) / max(1.0, abs(z))
              for z in lam_exact)
    assert err < 1e-8
    # one unstable |k| band: with c != 0 the four unstable eigenvalues are
    # complex (nonzero imaginary part c*k), so they land in k_c
    assert rep.k_r == 0 and rep.k_c == 2
    assert rep.k_i_minus == 0


def test_constant_wave_c0_real_unstable_modes(cache):
    p, chat = 2.0, 1.0     # c = 0
    L = np.pi / 0.8        # k1 = 0.8, only |k| = 1 unstable (0.64 < 2)
    wave = cache.constant(p, chat, 64, L=L)
    hill = assemble_hill(wave)
    disc = assemble_pencil(wave, hill)
    build_projector(disc)
    rep = pencil_spectrum(disc)
    kts = np.pi * np.arange(1, 32) / L
    n_unstable_modes = 2 * int(np.sum(kts**2 < p * chat))
    assert rep.k_r == n_unstable_modes
    assert rep.k_c == 0


def test_constant_wave_negative_krein_band(cache):
    # modes with p*chat - c^2 < k^2 < p*chat are imaginary with negative sign
    p, chat, csign = 2.0, 0.75, 1
    kt1 = 1.17                       # 1.25 < 1.3689 < 1.5
    wave = cache.constant(p, chat, 128, L=np.pi / kt1, csign=csign)
    hill = assemble_hill(wave)
    disc = assemble_pencil(wave, hill)
    build_projector(disc)
    rep = pencil_spectrum(disc)
    assert rep.k_r == 0 and rep.k_c == 0
    assert rep.k_i_minus == 2
    negs = [m for m in rep.imaginary_modes if m.neg_count > 0]
    assert len(negs) == 2            # the +- pair carries the signature


def test_p1_above_critical_speed(cache):
    wave = cache.wave(1.0, 0.0, -0.1 * 0.995**3, 0.995, N=128)
    _, _, rep, _ = cache.full(wave)
    assert (rep.k_r, rep.k_c, rep.k_i_minus) == (1, 0, 0)


def test_hypothesis_checks_and_cross_identity(cache):
    for args, N in [((1.0, 0.0, -0.1 * 0.6**3, 0.6), 128),
                    ((2.0, 0.05, 0.01, 0.7), 128),
                    ((4.0, 0.1, 0.022, 0.7), 160)]:
        wave = cache.wave(*args, N=N)
        hill = assemble_hill(wave)
        disc = assemble_pencil(wave, hill)
        hyp = hypothesis_checks(disc)
        assert hyp.b_on_kernel < 1e-14
        assert abs(hyp.d_scalar) > 1e-8
        s = gkdv_scalars(hill)
        e = wave.samples - wave.Umean
        hill_scalar = float(wave.grid.inner(e, e).real) + \
            4.0 * (1.0 - wave.chat) * s.Dgkdv
        assert pencil_kernel_scalar(disc) == pytest.approx(hill_scalar, rel=1e-8)


def test_krein_matrix_zero_at_origin(p1_setup):
    _, _, disc, _, _ = p1_setup
    assert abs(krein_matrix_eval(disc, 0.0)) < 1e-10


def test_krein_matrix_large_lambda_symbol(p1_setup):
    _, _, disc, _, _ = p1_setup
    scale = 1e3
    val = krein_matrix_eval(disc, 1j * scale)
    assert val.real == pytest.approx(-(scale**2), rel=1e-2)
    assert abs(val.imag) < 1e-6 * scale**2


def test_krein_matrix_real_on_imaginary_axis(p1_setup):
    _, _, disc, _, _ = p1_setup
    for mu in (0.3, 1.7, 4.1):
        val = krein_matrix_eval(disc, 1j * mu)
        assert abs(val.imag) <= 1e-9 * max(1.0, abs(val.real))


def test_krein_zeros_match_kernel_coupled_eigenvalues(p1_setup):
    wave, _, disc, rep, _ = p1_setup
    mus = sorted(m.lam.imag for m in rep.imaginary_modes if m.lam.imag > 0)
    mu_max = mus[3] * 1.02
    zeros = krein_zero_scan(disc, mu_max, samples=1200)
    assert zeros.size >= 1
    # every zero is an imaginary eigenvalue
    for z in zeros:
        assert min(abs(z - mu) for mu in mus) < 1e-6
