"""Brute-force reference: dense diagonalization of the finite chain.

Everything here is deliberately independent of the closed-form results in
``scattering``, ``bound_states`` and ``decay``; it is the referee those
modules are tested against.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelViolationError
from .model import HamiltonianMatrix, SystemParams, build_system_hamiltonian

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    energies: np.ndarray
    states: np.ndarray  # columns are eigenvectors
    labels: tuple
    band_window: tuple[float, float] | None = None
    xi: float = 1.0

    def __len__(self) -> int:
        return self.energies.size

    def state(self, i: int) -> np.ndarray:
        return self.states[:, i]


@dataclass(frozen=True, eq=False)
class DressedState:
    """Eigenstate of the closed system, as far as decay rates care.

    ``mode == "normalized-chain"``: ``chain_weights`` holds ``|u(j)|**2`` of a
    unit-norm finite-chain eigenvector. ``mode == "continuum"``: only
    ``atom_weight`` is known and it follows the scattering-state convention
    (unit incoming amplitude), so it may exceed one; the chain then carries
    the remainder ``1 - atom_weight`` by assumption.
    """

    label: tuple
    energy: float
    atom_weight: float
    chain_weights: np.ndarray | None = None
    mode: str = "normalized-chain"
    metadata: dict = field(default_factory=dict)

    @property
    def chain_weight(self) -> float:
        if self.chain_weights is None:
            return 1.0 - self.atom_weight
        return float(np.sum(self.chain_weights))

    @property
    def flagged(self) -> bool:
        return self.mode == "continuum" and self.atom_weight > 1.0


def _span_basis(v: np.ndarray) -> np.ndarray:
    """Basis-independent orthonormal basis for the span of ``v``'s columns.

    Projects the unit vectors e_0, e_1, ... onto the subspace and
    Gram-Schmidts them in index order, keeping the first ``d`` independent
    ones.
    """
    d = v.shape[1]
    proj = v @ v.conj().T
    basis: list[np.ndarray] = []
    for i in range(v.shape[0]):
        w = proj[:, i].copy()
        for b in basis:
            w -= b * (b.conj() @ w)
        n = np.linalg.norm(w)
        if n > 1e-6:
            basis.append(w / n)
            if len(basis) == d:
                break
    return np.column_stack(basis)


def _canonical_subspace(v: np.ndarray, atom_mask: np.ndarray | None = None) -> np.ndarray:
    """Deterministic basis of a degenerate eigenspace.

    The span is first split into eigenvectors of the atom-population
    operator restricted to it (ascending atom weight), so that degenerate
    states carrying no atom amplitude are not mixed with ones that do; that
    split is what keeps bath-induced decay diagonal. Whatever degeneracy is
    left goes through :func:`_span_basis`.
    """
    if atom_mask is None or not atom_mask.any():
        return _span_basis(v)
    va = v[atom_mask]
    weights, u = np.linalg.eigh(va.conj().T @ va)
    cols = []
    i = 0
    while i < weights.size:
        j = i + 1
        while j < weights.size and weights[j] - weights[i] < DEGENERACY_TOL:
            j += 1
        block = v @ u[:, i:j]
        cols.append(block if j - i == 1 else _span_basis(block))
        i = j
    return np.column_stack(cols)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    for col in range(v.shape[1]):
        x = v[:, col]
        nz = np.nonzero(np.abs(x) > 1e-12)[0]
        if nz.size:
            ph = x[nz[0]] / abs(x[nz[0]])
            v[:, col] = x / ph
    return v


def diagonalize(h: HamiltonianMatrix) -> EigenDecomposition:
    """Full spectrum of a Hermitian matrix, ascending and deterministically phased.

    Degenerate subspaces (splitting below ``DEGENERACY_TOL``) are replaced
    by the canonical basis of :func:`_canonical_subspace`; every vector's
    first nonzero component is then made real positive.
    """
    if h.effective or not h.is_hermitian(atol=0.0):
        raise ValueError("diagonalize needs a Hermitian matrix; use dynamics.evolve_effective for effective ones")
    m = h.dense()
    energies, vecs = np.linalg.eigh(m)
    vecs = vecs.astype(complex)
    atom_mask = np.array([lab.kind == "atom" for lab in h.labels])
    i = 0
    while i < energies.size:
        j = i + 1
        while j < energies.size and energies[j] - energies[i] < DEGENERACY_TOL:
            j += 1
        if j - i > 1:
            vecs[:, i:j] = _canonical_subspace(vecs[:, i:j], atom_mask)
        i = j
    vecs = _fix_phase(vecs)
    p = h.params
    window = p.band if p is not None else None
    return EigenDecomposition(energies, vecs, h.labels, window, p.xi if p is not None else 1.0)


@functools.lru_cache(maxsize=32)
def system_decomposition(p: SystemParams) -> EigenDecomposition:
    """Cached :func:`diagonalize` of the closed system for ``p``."""
    return diagonalize(build_system_hamiltonian(p))


def classify_states(ed: EigenDecomposition, margin: float = 1e-8) -> tuple[np.ndarray, dict]:
    """Split eigenstates into band states and out-of-band (bound) states.

    Returns ``(band_indices, {"below": idx or None, "above": idx or None})``.
    """
    if ed.band_window is None:
        raise ValueError("decomposition carries no band window")
    lo, hi = ed.band_window
    tol = margin * ed.xi
    below = np.nonzero(ed.energies < lo - tol)[0]
    above = np.nonzero(ed.energies > hi + tol)[0]
    if below.size > 1 or above.size > 1:
        raise ModelViolationError(
            f"found {below.size} states below and {above.size} above the band; at most one per side expected"
        )
    band = np.nonzero((ed.energies >= lo - tol) & (ed.energies <= hi + tol))[0]
    bound = {
        "below": int(below[0]) if below.size else None,
        "above": int(above[0]) if above.size else None,
    }
    return band, bound


def dressed_state_from_index(ed: EigenDecomposition, i: int) -> DressedState:
    v = ed.state(i)
    mask = np.array([lab.kind == "site" for lab in ed.labels])
    atom = np.array([lab.kind == "atom" for lab in ed.labels])
    w = np.abs(v) ** 2
    return DressedState(
        label=("eigen", int(i)),
        energy=float(ed.energies[i]),
        atom_weight=float(np.sum(w[atom])),
        chain_weights=w[mask],
        mode="normalized-chain",
    )


def extract_dressed_state(ed: EigenDecomposition, target_energy: float) -> DressedState:
    """Normalised eigenvector nearest ``target_energy``; ties go to the lower state."""
    dist = np.abs(ed.energies - target_energy)
    i = int(np.argmin(dist))
    meta = {}
    ties = np.nonzero(np.abs(dist - dist[i]) <= 1e-12)[0]
    if ties.size > 1:
        i = int(ties[np.argmin(ed.energies[ties])])
        meta["tie"] = f"{ties.size} states equidistant from target; lowest taken"
        log.debug("extract_dressed_state: %s", meta["tie"])
    state = dressed_state_from_index(ed, i)
    return DressedState(state.label, state.energy, state.atom_weight, state.chain_weights,
                        state.mode, meta)


def spectrum_dict(ed: EigenDecomposition) -> dict:
    """Debug dump of energies (eigenvectors omitted)."""
    return {
        "energies": [float(e) for e in ed.energies],
        "band_window": list(ed.band_window) if ed.band_window else None,
    }
