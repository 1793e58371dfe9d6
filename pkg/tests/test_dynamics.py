import math

import numpy as np
import pytest
from scipy.special import jv

from crw_qed.dynamics import (
    Trajectory,
    bessel_jn_range,
    bessel_order_cutoff,
    bessel_propagate,
    default_fit_window,
    evolve,
    evolve_effective,
    fit_decay,
    fit_grid,
    load_amplitudes,
    momentum_average,
    wavepacket_scatter,
)
from crw_qed.errors import GeometryError
from crw_qed.model import (
    BathSpec,
    DissipationRates,
    SystemParams,
    build_system_hamiltonian,
    build_total_hamiltonian,
    discretize_flat_bath,
    single_mode_bath_hamiltonian,
    site_label,
)
from crw_qed.oracle import system_decomposition
from crw_qed.scattering import _amplitudes


# ---- Bessel route ---------------------------------------------------------

@pytest.mark.parametrize("x", [0.5, 2.0, 20.0, 200.0])
def test_bessel_matches_scipy(x):
    n = np.arange(0, int(x) + 40)
    np.testing.assert_allclose(bessel_jn_range(n[-1], x), jv(n, x), atol=1e-14)


def test_bessel_initial_condition():
    p = SystemParams(J=0.0)
    l = np.arange(-5, 6)
    phi = bessel_propagate(p, 0.1, l, 0.0)
    np.testing.assert_allclose(phi, (l == 0).astype(float), atol=0)


@pytest.mark.parametrize("t", [0.3, 3.0, 30.0])
def test_bessel_norm(t):
    p = SystemParams(J=0.0)
    L = bessel_order_cutoff(p, t)
    l = np.arange(-L, L + 1)
    assert np.sum(np.abs(bessel_propagate(p, 0.0, l, t)) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_bessel_example_against_ode():
    p = SystemParams(J=0.0, n_sites=401)
    phi0 = bessel_propagate(p, 0.1, 0, 1.0)
    assert abs(phi0) == pytest.approx(math.exp(-0.1) * abs(jv(0, 2.0)), abs=1e-14)
    assert abs(phi0) == pytest.approx(0.20258, abs=1e-5)
    tr = evolve_effective(p, DissipationRates(0.1, 0.0), site_label(0), np.linspace(0, 1, 11))
    np.testing.assert_allclose(tr.amplitudes[-1, : p.n_sites], bessel_propagate(p, 0.1, p.sites, 1.0), atol=1e-8)


def test_empty_baths_free_chain_matches_bessel():
    p = SystemParams(J=0.0, n_sites=401)
    h = build_total_hamiltonian(p, BathSpec.empty(), BathSpec.empty())
    t = np.linspace(0, 60, 7)
    tr = evolve(h, site_label(0), t)
    for i, ti in enumerate(t):
        np.testing.assert_allclose(tr.amplitudes[i, : p.n_sites], bessel_propagate(p, 0.0, p.sites, ti), atol=1e-8)


# ---- ODE route ------------------------------------------------------------

def test_eigenstate_is_stationary(resonant):
    p = resonant.replace(n_sites=41)
    ed = system_decomposition(p)
    v = ed.state(7)
    tr = evolve(build_system_hamiltonian(p), v, np.linspace(0, 20, 21))
    probs = np.abs(tr.amplitudes) ** 2
    np.testing.assert_allclose(probs, np.broadcast_to(np.abs(v) ** 2, probs.shape), atol=1e-10)
    phase = tr.amplitudes[-1] @ v.conj()
    assert phase == pytest.approx(np.exp(-1j * ed.energies[7] * 20), abs=1e-9)


def test_hermitian_norm_conserved():
    p = SystemParams(J=1.5, n_sites=21)
    h = build_total_hamiltonian(p, discretize_flat_bath(0.01, 5, 8, 50), discretize_flat_bath(0.16, 5, 8, 50))
    tr = evolve(h, "atom", np.linspace(0, 10, 51), store_amplitudes=False)
    assert tr.norm_drift < 1e-8 and tr.hermitian


def test_effective_zero_rates_equal_hermitian():
    p = SystemParams(J=1.5, n_sites=41)
    t = np.linspace(0, 10, 11)
    a = evolve(build_system_hamiltonian(p), "atom", t)
    b = evolve_effective(p, DissipationRates(), "atom", t)
    np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-10)


def test_bloch_wave_decays_uniformly():
    p = SystemParams(J=0.0, n_sites=31, periodic=True)
    k = 2 * math.pi * 4 / 31
    v = np.concatenate([np.exp(1j * k * p.sites) / math.sqrt(31), [0]])
    t = np.linspace(0, 10, 11)
    tr = evolve_effective(p, DissipationRates(0.1, 0.0), v, t)
    np.testing.assert_allclose(tr.system_norm, np.exp(-0.2 * t), rtol=1e-10)


def test_rk4_is_deterministic_and_accurate(tmp_path):
    p = SystemParams(J=1.5, n_sites=21)
    h = build_system_hamiltonian(p)
    t = np.linspace(0, 5, 11)
    a = evolve(h, "atom", t, method="rk4", dt=0.005)
    b = evolve(h, "atom", t, method="rk4", dt=0.005)
    ref = evolve(h, "atom", t)
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
    np.testing.assert_allclose(a.amplitudes, ref.amplitudes, atol=1e-7)
    assert a.to_csv(tmp_path / "a.csv").read_bytes() == b.to_csv(tmp_path / "b.csv").read_bytes()


def test_amplitude_dump_roundtrip(tmp_path):
    p = SystemParams(J=1.5, n_sites=5)
    tr = evolve(build_system_hamiltonian(p), "site:0", np.linspace(0, 1, 4))
    path = tr.dump_amplitudes(tmp_path / "amp.bin")
    raw = path.read_bytes()
    assert int.from_bytes(raw[:8], "little") == 6 and len(raw) == 8 + 4 * 6 * 16
    np.testing.assert_array_equal(load_amplitudes(path), tr.amplitudes)


def test_time_grid_checks():
    h = build_system_hamiltonian(SystemParams(n_sites=3))
    with pytest.raises(ValueError):
        evolve(h, "atom", [0.5, 1.0])
    with pytest.raises(ValueError):
        evolve(h, "atom", [0.0, 1.0, 0.5])


# ---- fits -----------------------------------------------------------------

def test_fit_identity():
    t = np.linspace(0, 10, 101)
    z = np.zeros_like(t)
    tr = Trajectory(t, np.exp(-2 * 0.37 * t), z, z, z)
    assert fit_decay(tr, (1.0, 9.0)).rate == pytest.approx(0.37, abs=1e-10)
    with pytest.raises(ValueError):
        fit_decay(tr, (1.0, 1.5))  # too few samples
    with pytest.raises(ValueError):
        fit_decay(Trajectory(t, np.exp(-2 * 0.37 * t), z, z, z, recurrence_time=5.0), (1.0, 9.0))


def test_single_mode_wigner_weisskopf():
    lam = 0.01
    h = single_mode_bath_hamiltonian(5.0, discretize_flat_bath(lam, 5, 8, 800))
    G = math.pi * lam
    w = default_fit_window(G)
    tr = evolve(h, np.eye(h.dimension)[0], fit_grid(w), store_amplitudes=False)
    assert fit_decay(tr, w).rate == pytest.approx(G, rel=0.05)


def test_equal_baths_any_state_decays_at_constant_rate():
    p = SystemParams(J=1.5, n_sites=7)
    lam = 0.02
    h = build_total_hamiltonian(p, discretize_flat_bath(lam, 5, 8, 800), discretize_flat_bath(lam, 5, 8, 800))
    ed = system_decomposition(p)
    G = math.pi * lam
    w = default_fit_window(G)
    for i in (0, 3, 7):
        tr = evolve(h, ed.state(i), fit_grid(w, 60), rtol=1e-9, atol=1e-11, store_amplitudes=False)
        assert fit_decay(tr, w).rate == pytest.approx(G, rel=0.05)


# ---- wavepackets ----------------------------------------------------------

def test_free_packet_transmits():
    res = wavepacket_scatter(SystemParams(J=0.0, n_sites=801), 1.2, 30)
    assert res.T == pytest.approx(1.0, abs=1e-6) and res.R < 1e-6 and abs(res.A) < 1e-6


def test_geometry_checks():
    with pytest.raises(GeometryError):
        wavepacket_scatter(SystemParams(J=1.0, n_sites=101), 1.0, 80)
    with pytest.raises(GeometryError):
        wavepacket_scatter(SystemParams(J=1.0, n_sites=2001), 1.0, 5)


def test_resonant_packet_reflects():
    p = SystemParams(J=1.5, Omega=6.0, n_sites=2001)
    k0, w = 2 * math.pi / 3, 80
    res = wavepacket_scatter(p, k0, w)
    avg = momentum_average(p, k0, w, res.center, lambda k: np.abs(_amplitudes(p, k)[1]) ** 2)
    assert res.R >= 0.98
    assert res.R == pytest.approx(avg, rel=0.01)


def test_ideal_example_k_pi_over_3():
    p = SystemParams(J=1.5, n_sites=2001)
    res = wavepacket_scatter(p, math.pi / 3, 80)
    assert res.T == pytest.approx(3 / 8.0625, rel=0.01)


def test_equal_rates_total_reflection_with_absorption():
    p = SystemParams(J=1.5, Omega=6.0, n_sites=2001)
    res = wavepacket_scatter(p, 2 * math.pi / 3, 80, d=DissipationRates(0.01, 0.01))
    assert res.A_raw > 0
    assert res.R == pytest.approx(1.0, abs=0.01)


@pytest.mark.slow
def test_effective_matches_explicit_baths():
    """Uniform weak loss; transmitted probability from the Markov reduction vs explicit baths."""
    p = SystemParams(J=1.5, Omega=6.0, n_sites=601)
    gamma = 0.01
    lam = gamma / math.pi
    eff = wavepacket_scatter(p, math.pi / 2, 30, d=DissipationRates(gamma, gamma))
    bath = discretize_flat_bath(lam, 5, 8, 300)
    full = wavepacket_scatter(p, math.pi / 2, 30, baths=(bath, bath))
    assert full.T_raw == pytest.approx(eff.T_raw, rel=0.03)
    assert full.T == pytest.approx(eff.T, rel=0.03)
