import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crw_qed.errors import BandEdgeError, OutOfBandError
from crw_qed.model import DissipationRates, SystemParams
from crw_qed.presets import FIG3_SERIES
from crw_qed.scattering import (
    SPECTRUM_HEADER,
    dispersion,
    dissipative_reflection,
    ideal_amplitudes,
    interior_grid,
    inverse_dispersion,
    resonance_fwhm,
    scan_spectrum,
)


def stationary_oracle(p: SystemParams, k: float, gamma_c: float = 0.0, gamma_A: float = 0.0):
    """Solve the site -1, 0, 1 and atom equations for (r, s, u_e) numerically.

    Plane-wave ansatz u_j = e^{ikj} + r e^{-ikj} (j <= 0), s e^{ikj} (j >= 0),
    energy E = omega_c - 2 xi cos k - i gamma_c.
    """
    E = p.omega_c - 2 * p.xi * math.cos(k) - 1j * gamma_c
    eps_c = p.omega_c - 1j * gamma_c
    eps_a = p.Omega - 1j * gamma_A
    e = np.exp(1j * k)
    # unknowns x = (r, s, u_e); continuity at j=0: 1 + r = s
    A = np.array([
        [1, -1, 0],
        # site 0: (E - eps_c) s + xi (u_-1 + u_1) - J u_e = 0
        [p.xi * e, (E - eps_c) + p.xi * e, -p.J],
        # atom: (E - eps_a) u_e - J s = 0
        [0, -p.J, E - eps_a],
    ], dtype=complex)
    b = np.array([-1, -p.xi / e, 0], dtype=complex)
    return np.linalg.solve(A, b)


def test_dispersion_values():
    p = SystemParams()
    assert dispersion(p, math.pi / 2) == pytest.approx(5.0, abs=1e-15)
    assert dispersion(p, 0.0) == 3.0 and dispersion(p, math.pi) == 7.0
    with pytest.raises(ValueError):
        dispersion(p, -0.1)


def test_inverse_dispersion():
    p = SystemParams()
    assert inverse_dispersion(p, 5.0) == pytest.approx(math.pi / 2)
    assert inverse_dispersion(p, 6.0) == pytest.approx(2 * math.pi / 3, abs=1e-15)
    assert inverse_dispersion(p, 7.0) == pytest.approx(math.pi)
    with pytest.raises(OutOfBandError, match="3.0.*7.0"):
        inverse_dispersion(p, 7.5)


@settings(max_examples=60, deadline=None)
@given(k=st.floats(1e-3, math.pi - 1e-3), J=st.floats(0, 3), Om=st.floats(2, 8))
def test_ideal_unitarity_property(k, J, Om):
    sol = ideal_amplitudes(SystemParams(Omega=Om, J=J), k)
    assert abs(sol.R + sol.T - 1) < 1e-12
    assert abs(sol.r - (sol.s - 1)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(k=st.floats(0.05, math.pi - 0.05), J=st.floats(0.1, 3), Om=st.floats(2, 8))
def test_ideal_matches_stationary_oracle(k, J, Om):
    p = SystemParams(Omega=Om, J=J)
    sol = ideal_amplitudes(p, k)
    r, s, ue = stationary_oracle(p, k)
    assert abs(sol.r - r) < 1e-10 and abs(sol.s - s) < 1e-10 and abs(sol.u_e - ue) < 1e-10


@settings(max_examples=40, deadline=None)
@given(k=st.floats(0.05, math.pi - 0.05), J=st.floats(0.1, 3), gc=st.floats(0, 0.5), ga=st.floats(0, 0.5))
def test_dissipative_matches_stationary_oracle(k, J, gc, ga):
    p = SystemParams(Omega=6.0, J=J)
    sol = dissipative_reflection(p, DissipationRates(gc, ga), k)
    r, s, _ = stationary_oracle(p, k, gc, ga)
    assert abs(sol.r - r) < 1e-10
    assert abs(sol.s - s) < 1e-10


@settings(max_examples=40, deadline=None)
@given(k=st.floats(0.05, math.pi - 0.05), J=st.floats(0, 3), g=st.floats(0, 0.5), extra=st.floats(0, 0.5))
def test_dissipation_only_removes_flux(k, J, g, extra):
    sol = dissipative_reflection(SystemParams(J=J, Omega=5.5), DissipationRates(g, g + extra), k)
    assert sol.R + sol.T <= 1 + 1e-12


def test_ideal_examples():
    p = SystemParams(J=0.0)
    sol = ideal_amplitudes(p, 1.0)
    assert sol.s == 1 and sol.r == 0
    q = SystemParams(J=1.5)
    res = ideal_amplitudes(q, math.pi / 2)
    assert res.s == 0 and res.r == -1 and res.R == 1
    sol = ideal_amplitudes(q, math.pi / 3)
    assert sol.T == pytest.approx(3 / 8.0625, abs=1e-12)
    assert sol.R == pytest.approx(1 - 3 / 8.0625, abs=1e-12)


def test_band_edges_rejected():
    with pytest.raises(BandEdgeError):
        ideal_amplitudes(SystemParams(J=1.0), 0.0)
    with pytest.raises(BandEdgeError):
        dissipative_reflection(SystemParams(J=1.0), DissipationRates(0.1, 0.1), math.pi)


def test_dissipative_examples():
    p, d = FIG3_SERIES["green-dotted"]
    assert dissipative_reflection(p, d, 2 * math.pi / 3).R == pytest.approx(1.0, abs=1e-12)
    assert dissipative_reflection(SystemParams(J=0.0), DissipationRates(0.1, 0.4), 1.0).r == 0
    p, d = FIG3_SERIES["blue-solid"]
    assert dissipative_reflection(p, d, math.pi / 2).R == pytest.approx(0.64 ** 2 / (0.6 + 0.64) ** 2, abs=1e-12)


def test_dissipative_reduces_to_ideal():
    p = SystemParams(J=1.1, Omega=5.3)
    for k in (0.4, 1.3, 2.9):
        a = ideal_amplitudes(p, k)
        b = dissipative_reflection(p, DissipationRates(0.2, 0.2), k)
        assert abs(a.r - b.r) < 1e-14
        assert b.metadata  # transmitted amplitude convention is documented


def test_black_dashed_resonance_signature():
    """At Omega_k = Omega the reflected amplitude is real, negative and lowered."""
    p, d = FIG3_SERIES["black-dashed"]
    k_res = 2 * math.pi / 3
    sol = dissipative_reflection(p, d, k_res)
    expected = p.J ** 2 / (0.3 * 2 * math.sin(k_res) + p.J ** 2)
    assert sol.r.real == pytest.approx(-expected, abs=1e-12)
    assert abs(sol.r.imag) < 1e-12


def test_scan_rows_unitary_and_csv(tmp_path):
    p = SystemParams(J=1.5, Omega=5.5)
    table = scan_spectrum(p, interior_grid(512))
    assert np.max(np.abs(table.R + table.T - 1)) < 1e-12
    path = table.to_csv(tmp_path / "s.csv")
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == SPECTRUM_HEADER and len(rows) == 513
    # shortest round-trip formatting
    assert float(rows[1][2]) == table.R[0]


def test_interior_grid_excludes_edges():
    k = interior_grid(4)
    assert k[0] > 0 and k[-1] < math.pi and k.size == 4


def test_fwhm_monotone_in_J():
    k = interior_grid(2048)
    widths = [resonance_fwhm(SystemParams(J=J), k) for J in np.linspace(0.5, 2.0, 16)]
    assert np.all(np.diff(widths) >= -1e-12)
    assert widths[-1] > widths[0]
