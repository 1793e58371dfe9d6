"""Wigner-Weisskopf decay rates of the dressed states.

All rates are *amplitude* rates: an excitation prepared in a dressed state
keeps amplitude ``exp(-Gamma t)`` and population ``exp(-2 Gamma t)``.

The flat-bath constants ``g`` and ``beta_A`` are the square roots of the
memory-function values, ``Lambda_res = g**2`` and ``Lambda_atom =
beta_A**2`` (energy units), so that ``pi g**2`` is a rate.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bound_states import BoundState, bound_atom_amplitude
from .errors import OutOfBandError
from .model import BathSpec, SystemParams
from .oracle import DressedState, extract_dressed_state, system_decomposition
from .scattering import _check_interior, dispersion, fmt

log = logging.getLogger(__name__)

DECAY_HEADER = ("k", "gamma_continuum", "gamma_normalized", "atom_weight_continuum", "atom_weight_normalized")


@dataclass(frozen=True, eq=False)
class MemoryFunction:
    """Reservoir response ``Lambda(omega)`` (coupling squared times density)."""

    kind: str  # "flat" | "tabulated"
    value: float = 0.0
    omegas: np.ndarray | None = None
    values: np.ndarray | None = None
    role: str = "resonator"  # "resonator" | "atom"

    def __post_init__(self):
        if self.kind == "flat":
            if not self.value >= 0:
                raise ValueError("memory function must be non-negative")
        elif self.kind == "tabulated":
            w = np.asarray(self.omegas, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if w.shape != v.shape or w.ndim != 1 or w.size < 2:
                raise ValueError("tabulated memory function needs >= 2 matching samples")
            if np.any(np.diff(w) <= 0):
                raise ValueError("sample frequencies must increase")
            if np.any(v < 0):
                raise ValueError("memory function must be non-negative")
            object.__setattr__(self, "omegas", w)
            object.__setattr__(self, "values", v)
        else:
            raise ValueError(f"unknown memory-function kind {self.kind!r}")
        if self.role not in ("resonator", "atom"):
            raise ValueError(f"unknown role {self.role!r}")

    @classmethod
    def flat(cls, value: float, role: str = "resonator") -> "MemoryFunction":
        return cls("flat", value=value, role=role)

    def __call__(self, omega: float) -> float:
        if self.kind == "flat":
            return self.value
        lo, hi = self.omegas[0], self.omegas[-1]
        if not lo <= omega <= hi:
            raise OutOfBandError(omega, lo, hi)
        return float(np.interp(omega, self.omegas, self.values))


def memory_function_from_bath(bath: BathSpec, role: str = "resonator") -> MemoryFunction:
    """Flat value for analytic baths; ``g_q**2 / d_omega`` samples otherwise."""
    if bath.kind == "flat":
        return MemoryFunction.flat(bath.lam, role)
    if bath.n_modes < 2:
        raise ValueError("need at least two modes to tabulate a memory function")
    return MemoryFunction("tabulated", omegas=bath.frequencies,
                          values=bath.couplings ** 2 / bath.spacing, role=role)


def decay_rate_general(state: DressedState, lam_res: MemoryFunction, lam_atom: MemoryFunction) -> float:
    """``pi sum_j |u(j)|^2 Lambda_j(E) + pi |u_e|^2 Lambda_A(E)``.

    Every resonator bath shares ``lam_res``.
    """
    E = state.energy
    return math.pi * state.chain_weight * lam_res(E) + math.pi * state.atom_weight * lam_atom(E)


def atom_weight_continuum(p: SystemParams, k):
    """``|u_ek|^2`` of the scattering state with unit incoming amplitude."""
    k = _check_interior(k)
    s2 = np.sin(k) ** 2
    det = p.omega_c - 2 * p.xi * np.cos(k) - p.Omega
    out = 4 * p.xi ** 2 * p.J ** 2 * s2 / (4 * p.xi ** 2 * det ** 2 * s2 + p.J ** 4)
    return float(out) if np.ndim(out) == 0 else out


def atom_weight_normalized(p: SystemParams, k: float) -> float:
    """Atom weight of the finite-chain eigenvector nearest ``Omega_k``."""
    ed = system_decomposition(p)
    return extract_dressed_state(ed, dispersion(p, float(_check_interior(k)))).atom_weight


def _rate(g: float, beta_A: float, atom_weight):
    return math.pi * g ** 2 + math.pi * (beta_A ** 2 - g ** 2) * atom_weight


def decay_rate_scattering(p: SystemParams, g: float, beta_A: float, k: float, mode: str = "continuum") -> float:
    """``pi g^2 + pi (beta_A^2 - g^2) |u_ek|^2`` for a band state.

    ``continuum``: closed-form scattering-state atom weight (can exceed 1).
    ``normalized-chain``: atom weight of the unit-norm eigenvector of the
    ``p.n_sites`` chain nearest in energy.
    """
    if mode == "continuum":
        w = atom_weight_continuum(p, k)
        if w > 1:
            # scattering states are not normalisable; the weight is per unit incoming flux
            log.warning("continuum atom weight %.4g exceeds 1 at k=%.4g", w, k)
    elif mode == "normalized-chain":
        w = atom_weight_normalized(p, k)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _rate(g, beta_A, w)


def bound_atom_weight_closed_form(p: SystemParams, kappa: float) -> float:
    """Atom weight from the unresummed closed form ``1 - (J^2 + 2 xi^2 sinh 2kappa)^-1``."""
    return 1.0 - 1.0 / (p.J ** 2 + 2 * p.xi ** 2 * math.sinh(2 * kappa))


def decay_rate_bound(p: SystemParams, g: float, beta_A: float, b: BoundState, mode: str = "normalized") -> float:
    """Decay rate of a bound state.

    ``normalized`` uses ``|u_e|^2`` of the unit-norm bound state;
    ``closed-form`` uses :func:`bound_atom_weight_closed_form`.
    """
    if mode == "normalized":
        w = abs(bound_atom_amplitude(b, p)) ** 2
    elif mode == "closed-form":
        w = bound_atom_weight_closed_form(p, b.kappa)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _rate(g, beta_A, w)


def bound_decay_report(p: SystemParams, g: float, beta_A: float, b: BoundState) -> dict:
    """Both bound-state rates side by side, plus the closed resonant expression pi (2 g^2 + beta^2) / 3."""
    return {
        "branch": b.branch,
        "kappa": b.kappa,
        "gamma_normalized": decay_rate_bound(p, g, beta_A, b, "normalized"),
        "gamma_closed_form": decay_rate_bound(p, g, beta_A, b, "closed-form"),
        "gamma_resonant_formula": math.pi * (2 * g ** 2 + beta_A ** 2) / 3,
        "atom_weight_normalized": abs(bound_atom_amplitude(b, p)) ** 2,
        "atom_weight_closed_form": bound_atom_weight_closed_form(p, b.kappa),
    }


@dataclass(frozen=True, eq=False)
class DecaySpectrum:
    k: np.ndarray
    gamma_continuum: np.ndarray
    gamma_normalized: np.ndarray
    atom_weight_continuum: np.ndarray
    atom_weight_normalized: np.ndarray

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in DECAY_HEADER}

    def to_csv(self, path, energy_unit: float = 1.0) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DECAY_HEADER)
            for row in zip(*(getattr(self, n) for n in DECAY_HEADER)):
                row = list(row)
                row[1] /= energy_unit
                row[2] /= energy_unit
                w.writerow([fmt(x) for x in row])
        return path


def decay_spectrum(p: SystemParams, g: float, beta_A: float, k_grid) -> DecaySpectrum:
    k = np.asarray(k_grid, dtype=float)
    if k.size == 0:
        raise ValueError("empty k grid")
    w_cont = atom_weight_continuum(p, k)
    ed = system_decomposition(p)
    w_norm = np.array([extract_dressed_state(ed, E).atom_weight for E in dispersion(p, k)])
    return DecaySpectrum(k, _rate(g, beta_A, w_cont), _rate(g, beta_A, w_norm), w_cont, w_norm)


def lineshape_asymmetry(p: SystemParams, g: float, beta_A: float, k_grid) -> float:
    """Largest ``|Gamma(k) - Gamma(pi - k)|`` of the continuum lineshape on ``k_grid``."""
    k = np.asarray(k_grid, dtype=float)
    a = _rate(g, beta_A, atom_weight_continuum(p, k))
    b = _rate(g, beta_A, atom_weight_continuum(p, math.pi - k))
    return float(np.max(np.abs(a - b)))
