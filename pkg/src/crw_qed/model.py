"""Physical parameters and single-excitation Hamiltonians.

Basis ordering (fixed, so serialized matrices are stable):

1. resonator sites ``j = -(N-1)/2 ... (N-1)/2`` ascending,
2. the atomic excited state,
3. resonator bath modes, grouped by site (site ascending, mode ascending),
4. atom bath modes.

Sign conventions follow the tight-binding chain ``H = sum_j omega_c |j><j|
- xi sum_j (|j><j+1| + h.c.)`` with the atom coupled to site 0 with
strength ``J``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import sparse


class BasisLabel(NamedTuple):
    kind: str  # "site" | "atom" | "res_bath" | "atom_bath"
    site: int | None = None
    mode: int | None = None

    def __str__(self) -> str:
        if self.kind == "site":
            return f"ResonatorSite({self.site})"
        if self.kind == "atom":
            return "AtomExcited"
        if self.kind == "res_bath":
            return f"ResonatorBathMode({self.site},{self.mode})"
        return f"AtomBathMode({self.mode})"

    @classmethod
    def parse(cls, text: str) -> "BasisLabel":
        """Parse ``site:J``, ``atom``, ``res_bath:J:Q`` or ``atom_bath:Q``."""
        parts = text.strip().split(":")
        kind = parts[0]
        try:
            if kind == "site" and len(parts) == 2:
                return site_label(int(parts[1]))
            if kind == "atom" and len(parts) == 1:
                return ATOM
            if kind == "res_bath" and len(parts) == 3:
                return res_bath_label(int(parts[1]), int(parts[2]))
            if kind == "atom_bath" and len(parts) == 2:
                return atom_bath_label(int(parts[1]))
        except ValueError:
            pass
        raise ValueError(f"cannot parse basis label {text!r}")


def site_label(j: int) -> BasisLabel:
    return BasisLabel("site", int(j))


def res_bath_label(j: int, q: int) -> BasisLabel:
    return BasisLabel("res_bath", int(j), int(q))


def atom_bath_label(q: int) -> BasisLabel:
    return BasisLabel("atom_bath", None, int(q))


ATOM = BasisLabel("atom")


@dataclass(frozen=True)
class SystemParams:
    """Closed system: resonator chain plus one two-level atom.

    Energies are in arbitrary but common units (the figures use ``xi = 1``).
    ``n_sites`` is the finite truncation of the infinite chain used by every
    numerical route; analytic formulas ignore it.
    """

    omega_c: float = 5.0
    xi: float = 1.0
    Omega: float = 5.0
    J: float = 0.0
    n_sites: int = 101
    atom_site: int = 0
    periodic: bool = False

    def __post_init__(self):
        for name in ("omega_c", "xi", "Omega", "J"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.xi <= 0:
            raise ValueError(f"xi must be positive, got {self.xi!r}")
        if self.J < 0:
            raise ValueError(f"J must be non-negative, got {self.J!r}")
        if int(self.n_sites) != self.n_sites or self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ValueError(f"n_sites must be an odd integer >= 3, got {self.n_sites!r}")
        if self.atom_site != 0:
            raise ValueError("the atom sits in resonator 0")

    @property
    def half(self) -> int:
        return self.n_sites // 2

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)

    @property
    def band(self) -> tuple[float, float]:
        return (self.omega_c - 2 * self.xi, self.omega_c + 2 * self.xi)

    def site_index(self, j: int) -> int:
        if abs(j) > self.half:
            raise IndexError(f"site {j} outside chain of {self.n_sites} sites")
        return int(j) + self.half

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class DissipationRates:
    gamma_c: float = 0.0
    gamma_A: float = 0.0

    def __post_init__(self):
        for name in ("gamma_c", "gamma_A"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")


@dataclass(frozen=True, eq=False)
class BathSpec:
    """A bosonic reservoir attached to one resonator or to the atom.

    ``kind == "flat"`` carries only the memory-function value ``lam``
    (coupling squared times mode density). ``kind == "discretized"`` carries
    explicit mode frequencies and real couplings.
    """

    kind: str
    lam: float = 0.0
    band_center: float = 0.0
    bandwidth: float = 1.0
    frequencies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    couplings: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.kind not in ("flat", "discretized"):
            raise ValueError(f"unknown bath kind {self.kind!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.lam < 0:
            raise ValueError("memory function value must be non-negative")
        freqs = np.asarray(self.frequencies, dtype=float)
        coup = np.asarray(self.couplings, dtype=float)
        if freqs.shape != coup.shape or freqs.ndim != 1:
            raise ValueError("frequencies and couplings must be 1-d arrays of equal length")
        if np.any(coup < 0):
            raise ValueError("bath couplings must be real and non-negative")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ValueError("bath mode frequencies must be strictly increasing")
        freqs.flags.writeable = False
        coup.flags.writeable = False
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "couplings", coup)

    @classmethod
    def flat(cls, lam: float, band_center: float = 0.0, bandwidth: float = math.inf) -> "BathSpec":
        return cls("flat", lam=lam, band_center=band_center, bandwidth=bandwidth)

    @classmethod
    def empty(cls) -> "BathSpec":
        return cls("discretized")

    @property
    def n_modes(self) -> int:
        return int(self.frequencies.size)

    @property
    def spacing(self) -> float:
        if self.kind != "discretized" or self.n_modes == 0:
            return 0.0
        return self.bandwidth / self.n_modes

    @property
    def recurrence_time(self) -> float:
        """Time ``2 pi / d_omega`` after which a discretized bath feeds back."""
        return math.inf if self.spacing == 0 else 2 * math.pi / self.spacing

    @property
    def band_edges(self) -> tuple[float, float]:
        return (self.band_center - self.bandwidth / 2, self.band_center + self.bandwidth / 2)


def discretize_flat_bath(lam: float, band_center: float, bandwidth: float, M: int) -> BathSpec:
    """Equally spaced modes realising a flat memory function ``lam``.

    Modes sit at the midpoints of ``M`` cells of width ``bandwidth / M``
    covering ``[band_center - bandwidth/2, band_center + bandwidth/2]``; every
    coupling is ``sqrt(lam * d_omega)`` so that ``g**2 / d_omega == lam``.
    The discretization is faithful only for times well below
    ``2 pi / d_omega``.
    """
    if M < 1:
        raise ValueError("need at least one bath mode")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    dw = bandwidth / M
    freqs = band_center - bandwidth / 2 + dw * (np.arange(M) + 0.5)
    coup = np.full(M, math.sqrt(lam * dw))
    return BathSpec("discretized", lam=lam, band_center=band_center, bandwidth=bandwidth,
                    frequencies=freqs, couplings=coup)


def rates_from_flat_baths(resonator_lam: float, atom_lam: float) -> DissipationRates:
    """Markovian loss rates ``gamma = pi * Lambda`` of flat reservoirs."""
    return DissipationRates(gamma_c=math.pi * resonator_lam, gamma_A=math.pi * atom_lam)


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    entries: np.ndarray | sparse.csr_matrix
    labels: tuple[BasisLabel, ...]
    params: SystemParams | None = None
    effective: bool = False
    recurrence_time: float = math.inf

    def __post_init__(self):
        shape = self.entries.shape
        if shape[0] != shape[1] or shape[0] != len(self.labels):
            raise ValueError("matrix shape does not match basis labels")
        if isinstance(self.entries, np.ndarray):
            self.entries.flags.writeable = False

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.entries)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return self.entries.toarray()
        return np.array(self.entries)

    def is_hermitian(self, atol: float = 0.0) -> bool:
        if self.is_sparse:
            diff = (self.entries - self.entries.conj().T).tocoo()
            return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= atol
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= atol)

    def index(self, label: BasisLabel) -> int:
        return self.labels.index(label)

    def mask(self, *kinds: str) -> np.ndarray:
        return np.array([lab.kind in kinds for lab in self.labels])

    def basis_vector(self, label: BasisLabel) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=complex)
        v[self.index(label)] = 1.0
        return v

    def to_dict(self) -> dict:
        """JSON-ready form: row-major ``[re, im]`` pairs, flattened."""
        m = self.dense()
        flat = m.reshape(-1)
        return {
            "dimension": self.dimension,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
            "basis_labels": [str(lab) for lab in self.labels],
        }


def _system_labels(p: SystemParams) -> list[BasisLabel]:
    return [site_label(j) for j in p.sites] + [ATOM]


def _chain_block(p: SystemParams, onsite_site: complex, onsite_atom: complex) -> np.ndarray:
    n = p.n_sites
    dtype = complex if (np.iscomplexobj(onsite_site) or np.iscomplexobj(onsite_atom)) else float
    h = np.zeros((n + 1, n + 1), dtype=dtype)
    idx = np.arange(n)
    h[idx, idx] = onsite_site
    h[idx[:-1], idx[1:]] = -p.xi
    h[idx[1:], idx[:-1]] = -p.xi
    if p.periodic:
        h[0, n - 1] = h[n - 1, 0] = -p.xi
    a = p.site_index(p.atom_site)
    h[n, n] = onsite_atom
    h[a, n] = h[n, a] = p.J
    return h


def build_system_hamiltonian(p: SystemParams) -> HamiltonianMatrix:
    """Chain plus atom, dimension ``n_sites + 1``, Hermitian."""
    h = _chain_block(p, p.omega_c, p.Omega).astype(complex)
    return HamiltonianMatrix(h, tuple(_system_labels(p)), params=p)


def build_effective_hamiltonian(p: SystemParams, d: DissipationRates) -> HamiltonianMatrix:
    """Non-Hermitian chain: ``omega_c - i gamma_c`` on sites, ``Omega - i gamma_A`` on the atom."""
    h = _chain_block(p, complex(p.omega_c, -d.gamma_c), complex(p.Omega, -d.gamma_A))
    return HamiltonianMatrix(h.astype(complex), tuple(_system_labels(p)), params=p, effective=True)


def build_total_hamiltonian(
    p: SystemParams,
    resonator_bath: BathSpec,
    atom_bath: BathSpec,
    site_baths: Mapping[int, BathSpec] | None = None,
) -> HamiltonianMatrix:
    """System plus explicit bath modes (sparse CSR, Hermitian).

    Every resonator gets a copy of ``resonator_bath`` unless ``site_baths``
    overrides it for particular sites.
    """
    site_baths = dict(site_baths or {})
    for j in site_baths:
        p.site_index(j)
    baths = [site_baths.get(int(j), resonator_bath) for j in p.sites]
    for b in baths + [atom_bath]:
        if b.kind != "discretized":
            raise ValueError("explicit bath modes required: discretize the bath first")

    n = p.n_sites
    sys_block = sparse.coo_matrix(_chain_block(p, p.omega_c, p.Omega))
    rows = [sys_block.row]
    cols = [sys_block.col]
    vals = [sys_block.data.astype(complex)]
    labels = _system_labels(p)

    offset = n + 1
    for site_idx, (j, bath) in enumerate(zip(p.sites, baths)):
        m = bath.n_modes
        modes = offset + np.arange(m)
        rows += [modes, modes, np.full(m, site_idx)]
        cols += [modes, np.full(m, site_idx), modes]
        vals += [bath.frequencies.astype(complex), bath.couplings.astype(complex),
                 bath.couplings.astype(complex)]
        labels += [res_bath_label(j, q) for q in range(m)]
        offset += m

    m = atom_bath.n_modes
    modes = offset + np.arange(m)
    rows += [modes, modes, np.full(m, n)]
    cols += [modes, np.full(m, n), modes]
    vals += [atom_bath.frequencies.astype(complex), atom_bath.couplings.astype(complex),
             atom_bath.couplings.astype(complex)]
    labels += [atom_bath_label(q) for q in range(m)]
    offset += m

    h = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(offset, offset),
    ).tocsr()
    h.eliminate_zeros()
    t_rec = min(b.recurrence_time for b in baths + [atom_bath])
    return HamiltonianMatrix(h, tuple(labels), params=p, recurrence_time=t_rec)


def single_mode_bath_hamiltonian(omega: float, bath: BathSpec) -> HamiltonianMatrix:
    """One isolated resonator (site 0) coupled to ``bath``: the textbook
    Wigner-Weisskopf problem, used as an independent decay oracle."""
    if bath.kind != "discretized":
        raise ValueError("explicit bath modes required")
    m = bath.n_modes
    h = np.zeros((m + 1, m + 1), dtype=complex)
    h[0, 0] = omega
    h[np.arange(1, m + 1), np.arange(1, m + 1)] = bath.frequencies
    h[0, 1:] = bath.couplings
    h[1:, 0] = bath.couplings
    labels = (site_label(0),) + tuple(res_bath_label(0, q) for q in range(m))
    return HamiltonianMatrix(sparse.csr_matrix(h), labels, recurrence_time=bath.recurrence_time)


def state_vector(h: HamiltonianMatrix, initial) -> np.ndarray:
    """Normalise an initial condition given as a label, label string or vector."""
    if isinstance(initial, str):
        initial = BasisLabel.parse(initial)
    if isinstance(initial, BasisLabel):
        return h.basis_vector(initial)
    v = np.asarray(initial, dtype=complex)
    if v.shape == (h.dimension,):
        pass
    elif h.params is not None and v.shape == (h.params.n_sites + 1,):
        # system-only vector embedded into a larger (bath-inclusive) basis
        full = np.zeros(h.dimension, dtype=complex)
        full[: v.size] = v
        v = full
    else:
        raise ValueError(f"initial vector has shape {v.shape}, expected ({h.dimension},)")
    norm = np.linalg.norm(v)
    if not np.isclose(norm, 1.0, atol=1e-10):
        raise ValueError(f"initial state must be normalised (norm {norm!r})")
    return v


__all__: Sequence[str] = [
    "ATOM", "BasisLabel", "BathSpec", "DissipationRates", "HamiltonianMatrix", "SystemParams",
    "atom_bath_label", "build_effective_hamiltonian", "build_system_hamiltonian",
    "build_total_hamiltonian", "discretize_flat_bath", "rates_from_flat_baths",
    "res_bath_label", "single_mode_bath_hamiltonian", "site_label", "state_vector",
]
