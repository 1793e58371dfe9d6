import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crw_qed.model import (
    ATOM,
    BasisLabel,
    BathSpec,
    DissipationRates,
    SystemParams,
    build_effective_hamiltonian,
    build_system_hamiltonian,
    build_total_hamiltonian,
    discretize_flat_bath,
    rates_from_flat_baths,
    single_mode_bath_hamiltonian,
    site_label,
    state_vector,
)


def test_four_by_four_spectrum():
    h = build_system_hamiltonian(SystemParams(n_sites=3, J=0.0))
    assert h.dimension == 4
    ev = np.linalg.eigvalsh(h.dense())
    np.testing.assert_allclose(ev, sorted([5 - math.sqrt(2), 5, 5, 5 + math.sqrt(2)]), atol=1e-12)


def test_decoupled_atom_row():
    h = build_system_hamiltonian(SystemParams(n_sites=5, J=0.0)).dense()
    a = h.shape[0] - 1
    assert np.all(h[a, :a] == 0) and np.all(h[:a, a] == 0)


def test_jaynes_cummings_doublet():
    # xi is validated positive; a vanishing hop is the limit of a tiny one
    h = build_system_hamiltonian(SystemParams(xi=1e-12, J=1.5, n_sites=3)).dense()
    i0 = 1  # site 0 in the ascending basis
    block = h[np.ix_([i0, 3], [i0, 3])]
    np.testing.assert_allclose(np.linalg.eigvalsh(block), [3.5, 6.5], atol=1e-12)


def test_basis_order_and_labels():
    h = build_total_hamiltonian(SystemParams(n_sites=3, J=1.0), discretize_flat_bath(0.01, 5, 8, 1),
                                discretize_flat_bath(0.01, 5, 8, 1))
    assert h.dimension == 3 + 1 + 3 + 1
    assert [str(x) for x in h.labels] == [
        "ResonatorSite(-1)", "ResonatorSite(0)", "ResonatorSite(1)", "AtomExcited",
        "ResonatorBathMode(-1,0)", "ResonatorBathMode(0,0)", "ResonatorBathMode(1,0)", "AtomBathMode(0)",
    ]


def test_empty_baths_equal_system():
    p = SystemParams(n_sites=7, J=1.2, Omega=5.5)
    h = build_total_hamiltonian(p, BathSpec.empty(), BathSpec.empty())
    np.testing.assert_array_equal(h.dense(), build_system_hamiltonian(p).dense())


@settings(max_examples=25, deadline=None)
@given(n=st.sampled_from([3, 5, 9]), J=st.floats(0, 3), M=st.integers(0, 6),
       lam=st.floats(0, 0.2), Om=st.floats(2, 8))
def test_total_hamiltonian_exactly_hermitian(n, J, M, lam, Om):
    p = SystemParams(n_sites=n, J=J, Omega=Om)
    bath = discretize_flat_bath(lam, 5, 8, M) if M else BathSpec.empty()
    h = build_total_hamiltonian(p, bath, bath)
    d = h.dense()
    assert np.array_equal(d, d.conj().T)


def test_effective_hamiltonian():
    p = SystemParams(n_sites=5, J=1.0)
    np.testing.assert_array_equal(build_effective_hamiltonian(p, DissipationRates()).dense(),
                                  build_system_hamiltonian(p).dense())
    h = build_effective_hamiltonian(p, DissipationRates(0.1, 0.3)).dense()
    np.testing.assert_array_equal(np.diag(h)[:5].imag, -0.1)
    assert np.diag(h)[5].imag == -0.3


def test_discretized_bath_arithmetic():
    b = discretize_flat_bath(0.01, 5.0, 8.0, 800)
    assert b.spacing == pytest.approx(0.01, rel=1e-12)
    np.testing.assert_allclose(b.couplings, 0.01, rtol=1e-12)
    assert b.recurrence_time == pytest.approx(2 * math.pi / 0.01)
    assert b.band_edges == (1.0, 9.0)
    assert np.all(discretize_flat_bath(0.0, 5, 8, 10).couplings == 0)


def test_flat_rates():
    d = rates_from_flat_baths(0.01, 0.16)
    assert d.gamma_c == pytest.approx(math.pi * 0.01) and d.gamma_A == pytest.approx(math.pi * 0.16)


@pytest.mark.parametrize("kw", [dict(n_sites=100), dict(n_sites=1), dict(xi=0.0), dict(J=-1.0),
                                dict(atom_site=1), dict(omega_c=math.nan)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        SystemParams(**kw)


def test_invalid_baths():
    with pytest.raises(ValueError):
        DissipationRates(-0.1, 0.0)
    with pytest.raises(ValueError):
        BathSpec("discretized", frequencies=np.array([1.0, 1.0]), couplings=np.array([0.1, 0.1]))
    with pytest.raises(ValueError):
        BathSpec("discretized", frequencies=np.array([1.0, 2.0]), couplings=np.array([0.1, -0.1]))
    with pytest.raises(ValueError):
        build_total_hamiltonian(SystemParams(n_sites=3), BathSpec.flat(0.01), BathSpec.empty())


def test_label_parsing_roundtrip():
    for text, lab in [("site:-3", site_label(-3)), ("atom", ATOM),
                      ("res_bath:2:7", BasisLabel("res_bath", 2, 7)), ("atom_bath:4", BasisLabel("atom_bath", None, 4))]:
        assert BasisLabel.parse(text) == lab
    with pytest.raises(ValueError):
        BasisLabel.parse("photon:1")


def test_state_vector_embedding_and_checks():
    p = SystemParams(n_sites=3, J=1.0)
    h = build_total_hamiltonian(p, discretize_flat_bath(0.01, 5, 8, 2), discretize_flat_bath(0.01, 5, 8, 2))
    v = state_vector(h, "atom")
    assert v[h.index(ATOM)] == 1 and v.sum() == 1
    sys_vec = np.zeros(4, complex)
    sys_vec[1] = 1
    assert state_vector(h, sys_vec)[h.index(site_label(0))] == 1
    with pytest.raises(ValueError):
        state_vector(h, 2 * sys_vec)


def test_single_mode_bath_hamiltonian():
    h = single_mode_bath_hamiltonian(5.0, discretize_flat_bath(0.01, 5, 8, 4))
    assert h.dimension == 5 and h.is_hermitian()


def test_serialisation():
    h = build_system_hamiltonian(SystemParams(n_sites=3, J=1.0))
    d = h.to_dict()
    assert d["dimension"] == 4 and len(d["entries"]) == 16 and d["basis_labels"][3] == "AtomExcited"
    assert d["entries"][0] == [5.0, 0.0]
