"""Hill operator assembly, deflated solves, and the index scalars."""

import numpy as np
import pytest
from scipy import linalg as sla

from gbstab.errors import NearDegenerateError, SolvabilityError
from gbstab.hill import (assemble_hill, gkdv_scalars, meanzero_negcount,
                         scalar_negcount, solve_modulo_kernel)
from gbstab.profile import WaveParameters, constant_wave, equilibrium_energy, sample_profile

P_CONST = (2.0, 0.8)      # p, chat for the constant-wave cases
L_CONST = 0.8 * np.pi / np.sqrt(2.0 * 0.8)


@pytest.fixture(scope="module")
def const_hill(cache):
    wave = cache.constant(*P_CONST, 64, L=L_CONST)
    return wave, assemble_hill(wave)


@pytest.fixture(scope="module")
def p1_hill(cache):
    wave = cache.wave(1.0, 0.0, -0.1, 1.0, N=128)
    return wave, assemble_hill(wave)


def test_constant_wave_eigenvalues_exact(const_hill):
    wave, hill = const_hill
    p, chat = P_CONST
    kt = np.pi * np.fft.fftfreq(64, d=1.0 / 64) / wave.L
    expected = np.sort(kt**2 - p * chat)
    assert np.max(np.abs(np.sort(hill.eigenvalues) - expected)) < 1e-10
    assert hill.kernel_vector is None


def test_matrix_symmetric_real_spectrum(p1_hill):
    _, hill = p1_hill
    assert np.max(np.abs(hill.matrix - hill.matrix.T)) < 1e-12
    assert np.all(np.isreal(hill.eigenvalues))


def test_kernel_certificate(cache):
    for args in [(1.0, 0.0, -0.1, 1.0), (2.0, 0.05, 0.01, 0.7),
                 (4.0, 0.1, 0.022, 0.7)]:
        wave = cache.wave(*args, N=128)
        hill = assemble_hill(wave)
        assert hill.kernel_residual / 1.0 < 1e-6


def test_p1_wave_has_one_negative_eigenvalue(p1_hill):
    _, hill = p1_hill
    assert hill.nL2 == 1
    assert hill.zero_indices.size == 1


def test_solve_constant_wave_rhs_one(const_hill):
    wave, hill = const_hill
    p, chat = P_CONST
    w = solve_modulo_kernel(hill, np.ones(64))
    assert np.max(np.abs(w + 1.0 / (p * chat))) < 1e-10
    s = gkdv_scalars(hill)
    assert s.s1 == pytest.approx(-2.0 * wave.L / (p * chat), rel=1e-12)
    assert s.s1 < 0


def test_solve_kernel_rhs_raises(p1_hill):
    _, hill = p1_hill
    with pytest.raises(SolvabilityError):
        solve_modulo_kernel(hill, hill.kernel_vector)


def test_solve_mean_free_profile_rhs(p1_hill):
    wave, hill = p1_hill
    rhs = wave.samples - wave.Umean
    w = solve_modulo_kernel(hill, rhs)
    g = wave.grid
    assert g.norm(hill.matrix @ w - rhs) < 1e-8
    assert abs(g.inner(w, hill.kernel_vector)) < 1e-12

    # oracle: dense bordered solve at double resolution, compared through
    # the inner product with the rhs
    wave2 = sample_profile(wave.params, 256)
    hill2 = assemble_hill(wave2)
    g2 = wave2.grid
    rhs2 = wave2.samples - wave2.Umean
    k2 = g2.D @ wave2.samples
    k2 /= np.linalg.norm(k2)
    bordered = np.block([[hill2.matrix, k2[:, None]], [k2[None, :], 0.0]])
    sol = sla.solve(bordered, np.concatenate([rhs2, [0.0]]))
    w2 = sol[:-1]
    assert g.inner(w, rhs) == pytest.approx(g2.inner(w2, rhs2), rel=1e-8)


def test_gkdv_scalars_constant_closed_forms(const_hill):
    wave, hill = const_hill
    p, chat = P_CONST
    s = gkdv_scalars(hill)
    ueq = chat ** (1.0 / p)
    base = -2.0 * wave.L / (p * chat)
    assert s.s1 == pytest.approx(base, rel=1e-12)
    assert s.sU1 == pytest.approx(base * ueq, rel=1e-12)
    assert s.sUU == pytest.approx(base * ueq**2, rel=1e-12)
    assert abs(s.Dgkdv) < 1e-12


def test_gkdv_sign_p1(p1_hill):
    _, hill = p1_hill
    assert gkdv_scalars(hill).Dgkdv < 0


def test_gkdv_sign_near_equilibrium_p2(cache):
    Estar, _ = equilibrium_energy(2.0, chat=0.7, a=0.0)
    wave = cache.wave(2.0, 0.0, Estar * (1 - 1e-3), 0.7, N=128)
    assert gkdv_scalars(assemble_hill(wave)).Dgkdv < 0


def test_scalar_negcount_rule():
    assert scalar_negcount(-1.0) == 1
    assert scalar_negcount(2.0) == 0
    with pytest.raises(NearDegenerateError):
        scalar_negcount(1e-12)


def test_meanzero_negcount_matches_formula(cache):
    for args, N in [((1.0, 0.0, -0.1, 1.0), 128),
                    ((2.0, 0.05, 0.01, 0.7), 128),
                    ((2.0, 0.18, 0.117, 0.7), 160),
                    ((4.0, 0.1, 0.022, 0.7), 160)]:
        wave = cache.wave(*args, N=N)
        hill = assemble_hill(wave)
        s = gkdv_scalars(hill)
        assert meanzero_negcount(hill) == hill.nL2 - scalar_negcount(s.s1)


def test_spectral_convergence_lowest_eigenvalues(cache):
    for args in [(1.0, 0.0, -0.1, 1.0), (2.0, 0.1, -0.02, 0.7)]:
        lo = assemble_hill(cache.wave(*args, N=128)).eigenvalues[:10]
        hi = assemble_hill(cache.wave(*args, N=256)).eigenvalues[:10]
        assert np.max(np.abs(lo - hi)) < 1e-8
