"""Single-photon scattering off the atom: dispersion, amplitudes, spectra."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BandEdgeError, OutOfBandError
from .model import DissipationRates, SystemParams


SPECTRUM_HEADER = ("k", "omega_k", "R", "T", "arg_r", "arg_s", "P_e")


def fmt(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def dispersion(p: SystemParams, k):
    """Bloch band ``omega_c - 2 xi cos k`` for ``k`` in ``[0, pi]``."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0) or np.any(k_arr > math.pi) or np.any(~np.isfinite(k_arr)):
        raise ValueError("wavenumber must lie in [0, pi]")
    out = p.omega_c - 2 * p.xi * np.cos(k_arr)
    return float(out) if out.ndim == 0 else out


def inverse_dispersion(p: SystemParams, E: float) -> float:
    lo, hi = p.band
    if not lo <= E <= hi:
        raise OutOfBandError(E, lo, hi)
    c = (p.omega_c - E) / (2 * p.xi)
    return math.acos(min(1.0, max(-1.0, c)))


def _check_interior(k) -> np.ndarray:
    k_arr = np.asarray(k, dtype=float)
    if np.any(~(k_arr > 0)) or np.any(~(k_arr < math.pi)) or np.any(np.sin(k_arr) == 0):
        raise BandEdgeError("k must lie strictly inside (0, pi); sin k = 0 is a degenerate band-edge mode")
    return k_arr


def _green(p: SystemParams, energy: float) -> float:
    if energy == p.Omega:
        return math.inf if p.J else 0.0
    return p.J / (energy - p.Omega)


@dataclass(frozen=True)
class ScatteringSolution:
    k: float
    Omega_k: float
    r: complex
    s: complex
    u_e: complex
    V_k: float
    G_k: float
    dissipative: bool = False

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def T(self) -> float:
        return abs(self.s) ** 2

    @property
    def P_e(self) -> float:
        return abs(self.u_e) ** 2

    @property
    def metadata(self) -> dict:
        if self.dissipative:
            return {"s": "defined as 1 + r; transmitted amplitude not given by the dissipative closed form"}
        return {}


def _amplitudes(p: SystemParams, k: np.ndarray, gamma_rel: float = 0.0):
    """Vectorised r, s, u_e. ``gamma_rel = gamma_A - gamma_c``.

    The chain's uniform loss only rescales every amplitude by the same
    factor, so what scatters is the atom's *excess* loss ``gamma_rel``.
    """
    Ok = p.omega_c - 2 * p.xi * np.cos(k)
    vs = 2 * p.xi * np.sin(k)
    detuning = Ok - p.Omega
    denom = 1j * vs * detuning - gamma_rel * vs - p.J ** 2
    r = p.J ** 2 / denom
    s = 1.0 + r
    # u_e = J s / (Omega_k - Omega + i gamma_rel), written without the pole
    u_e = 1j * vs * p.J / denom
    return Ok, r, s, u_e


def ideal_amplitudes(p: SystemParams, k: float) -> ScatteringSolution:
    """Lossless reflection/transmission at wavenumber ``k``.

    ``s = 2i xi (Omega_k - Omega) sin k / (2i xi (Omega_k - Omega) sin k - J^2)``
    and ``r = s - 1``; the atom amplitude is ``u_e = J s / (Omega_k - Omega)``,
    evaluated in a form that stays finite on resonance.
    """
    k = float(_check_interior(k))
    Ok, r, s, u_e = _amplitudes(p, np.asarray(k))
    Ok = float(Ok)
    V = p.omega_c - Ok
    G = _green(p, Ok)
    return ScatteringSolution(k, Ok, complex(r), complex(s), complex(u_e), V, G)


def dissipative_reflection(p: SystemParams, d: DissipationRates, k: float) -> ScatteringSolution:
    """Reflection with leaky resonators (``gamma_c``) and a lossy atom (``gamma_A``).

    ``r = J^2 / [2i xi sin k (Omega_k - Omega) - (gamma_A - gamma_c) 2 xi sin k - J^2]``.
    ``s`` is reported as ``1 + r``; ``|r|^2 + |s|^2`` may fall below one.
    """
    k = float(_check_interior(k))
    Ok, r, s, u_e = _amplitudes(p, np.asarray(k), d.gamma_A - d.gamma_c)
    Ok = float(Ok)
    V = p.omega_c - Ok
    G = _green(p, Ok)
    return ScatteringSolution(k, Ok, complex(r), complex(s), complex(u_e), V, G, dissipative=True)


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    k: np.ndarray
    omega_k: np.ndarray
    R: np.ndarray
    T: np.ndarray
    arg_r: np.ndarray
    arg_s: np.ndarray
    P_e: np.ndarray
    dissipative: bool = False

    def __len__(self) -> int:
        return self.k.size

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in SPECTRUM_HEADER}

    def rows(self):
        cols = [getattr(self, name) for name in SPECTRUM_HEADER]
        return list(zip(*cols))

    def to_csv(self, path, energy_unit: float = 1.0) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SPECTRUM_HEADER)
            for row in self.rows():
                row = list(row)
                row[1] = row[1] / energy_unit
                w.writerow([fmt(x) for x in row])
        return path


def scan_spectrum(p: SystemParams, k_grid, d: DissipationRates | None = None) -> SpectrumTable:
    """Evaluate the amplitudes on a strictly increasing grid inside ``(0, pi)``."""
    k = np.asarray(k_grid, dtype=float)
    if k.size == 0:
        raise ValueError("empty k grid")
    if k.ndim != 1 or np.any(np.diff(k) <= 0):
        raise ValueError("k grid must be strictly increasing")
    _check_interior(k)
    gamma_rel = 0.0 if d is None else d.gamma_A - d.gamma_c
    Ok, r, s, u_e = _amplitudes(p, k, gamma_rel)
    return SpectrumTable(
        k=k, omega_k=Ok, R=np.abs(r) ** 2, T=np.abs(s) ** 2,
        arg_r=np.angle(r), arg_s=np.angle(s), P_e=np.abs(u_e) ** 2,
        dissipative=d is not None,
    )


def interior_grid(n: int) -> np.ndarray:
    """``n`` equally spaced wavenumbers strictly inside the band."""
    if n < 1:
        raise ValueError("need at least one k point")
    return np.linspace(0.0, math.pi, n + 2)[1:-1]


def resonance_fwhm(p: SystemParams, k_grid, d: DissipationRates | None = None) -> float:
    """Width in ``k`` of the reflection line around the atomic resonance.

    Measured as the extent of the contiguous grid region containing the
    resonance where ``|r|^2`` stays above half its resonant value. When the
    line covers the whole band the result saturates at the grid span.
    """
    table = scan_spectrum(p, k_grid, d)
    k_res = inverse_dispersion(p, p.Omega)
    i0 = int(np.argmin(np.abs(table.k - k_res)))
    half = table.R[i0] / 2
    lo = i0
    while lo > 0 and table.R[lo - 1] >= half:
        lo -= 1
    hi = i0
    while hi < len(table) - 1 and table.R[hi + 1] >= half:
        hi += 1
    return float(table.k[hi] - table.k[lo])
