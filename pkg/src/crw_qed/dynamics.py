"""Time-domain single-excitation dynamics.

Routes:

* closed-form free propagation of the bare, uniformly leaky chain
  (lattice Bessel functions),
* ODE integration of ``i d psi/dt = H psi`` for any Hamiltonian built in
  :mod:`crw_qed.model` (system only, with explicit baths, or effective),
* Gaussian wavepacket scattering with an exact exponential propagator.
"""

from __future__ import annotations

import csv
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .errors import GeometryError, StiffnessError
from .model import (
    BathSpec,
    DissipationRates,
    HamiltonianMatrix,
    SystemParams,
    build_effective_hamiltonian,
    build_total_hamiltonian,
    state_vector,
)
from .scattering import fmt

log = logging.getLogger(__name__)

TRAJECTORY_HEADER = ("t", "system_norm", "atom_pop", "chain_norm", "bath_norm_res", "bath_norm_atom")
NORM_DRIFT_TOL = 1e-8


# --------------------------------------------------------------------------
# Bessel propagation
# --------------------------------------------------------------------------

def bessel_jn_range(nmax: int, x: float) -> np.ndarray:
    """``J_0(x) ... J_nmax(x)`` by Miller's downward recurrence.

    The recurrence is started far above both ``nmax`` and ``x`` with
    arbitrary seed values and normalised with ``J_0 + 2 sum_k J_2k = 1``.
    """
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    sign = 1.0
    if x < 0:
        x, sign = -x, -1.0
    out = np.zeros(nmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    start = max(nmax, int(math.ceil(x))) + 60 + int(10 * x ** (1 / 3))
    start += start % 2
    vals = np.zeros(start + 2)
    vals[start] = 1e-300
    for n in range(start, 0, -1):
        vals[n - 1] = 2 * n / x * vals[n] - vals[n + 1]
        if abs(vals[n - 1]) > 1e250:
            vals[n - 1:] *= 1e-250
    norm = vals[0] + 2 * vals[2:start + 1:2].sum()
    out[:] = vals[: nmax + 1] / norm
    if sign < 0:
        out[1::2] *= -1
    return out


def bessel_jn(l, x: float):
    """Integer-order Bessel ``J_l(x)`` for scalar or array ``l``."""
    l_arr = np.asarray(l, dtype=int)
    table = bessel_jn_range(int(np.max(np.abs(l_arr), initial=0)), x)
    out = table[np.abs(l_arr)] * np.where((l_arr < 0) & (l_arr % 2 == 1), -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def bessel_order_cutoff(p: SystemParams, t: float) -> int:
    return int(math.ceil(2 * p.xi * abs(t))) + 40


def bessel_propagate(p: SystemParams, gamma_c: float, l, t: float):
    """Amplitude at site ``l`` of an excitation started at site 0 on the bare chain.

    ``exp(-i omega_c t - gamma_c t) J_l(2 xi t) i**l`` (infinite chain, ``J`` ignored).
    """
    l_arr = np.asarray(l, dtype=int)
    bess = bessel_jn(l_arr, 2 * p.xi * t)
    phase = np.exp(-1j * p.omega_c * t - gamma_c * t) * (1j ** (l_arr % 4))
    out = phase * bess
    return complex(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    chain_norm: np.ndarray
    atom_pop: np.ndarray
    bath_norm_res: np.ndarray
    bath_norm_atom: np.ndarray
    amplitudes: np.ndarray | None = None  # shape (n_times, dimension)
    labels: tuple = ()
    hermitian: bool = True
    recurrence_time: float = math.inf

    @property
    def system_norm(self) -> np.ndarray:
        return self.chain_norm + self.atom_pop

    @property
    def total_norm(self) -> np.ndarray:
        return self.system_norm + self.bath_norm_res + self.bath_norm_atom

    @property
    def norm_drift(self) -> float:
        tn = self.total_norm
        return float(np.max(np.abs(tn - tn[0])))

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.times, "system_norm": self.system_norm, "atom_pop": self.atom_pop,
            "chain_norm": self.chain_norm, "bath_norm_res": self.bath_norm_res,
            "bath_norm_atom": self.bath_norm_atom,
        }

    def to_csv(self, path, time_unit: float = 1.0) -> Path:
        path = Path(path)
        cols = self.columns()
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_HEADER)
            for i in range(self.times.size):
                row = [cols[name][i] for name in TRAJECTORY_HEADER]
                row[0] = row[0] / time_unit
                w.writerow([fmt(x) for x in row])
        return path

    def dump_amplitudes(self, path) -> Path:
        """Little-endian binary: int64 dimension, then for each time the
        ``dimension`` complex amplitudes as interleaved float64 (re, im)."""
        if self.amplitudes is None:
            raise ValueError("trajectory was computed without storing amplitudes")
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(struct.pack("<q", self.amplitudes.shape[1]))
            fh.write(np.ascontiguousarray(self.amplitudes, dtype="<c16").tobytes())
        return path


def load_amplitudes(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (dim,) = struct.unpack("<q", raw[:8])
    data = np.frombuffer(raw[8:], dtype="<c16")
    return data.reshape(-1, dim)


def _partial_norms(h: HamiltonianMatrix, probs: np.ndarray):
    """Sum |psi|^2 over each basis kind; ``probs`` has shape (n_times, dim)."""
    out = []
    for kind in ("site", "atom", "res_bath", "atom_bath"):
        m = h.mask(kind)
        out.append(probs[:, m].sum(axis=1) if m.any() else np.zeros(probs.shape[0]))
    return out


def _reference_energy(h: HamiltonianMatrix) -> float:
    if h.params is not None:
        return h.params.omega_c
    diag = h.entries.diagonal()
    return float(np.mean(diag.real))


def _rk4(rhs, y0: np.ndarray, t_grid: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty((t_grid.size, y0.size), dtype=complex)
    out[0] = y0
    y = y0.copy()
    for i in range(1, t_grid.size):
        span = t_grid[i] - t_grid[i - 1]
        n = max(1, int(math.ceil(span / dt - 1e-12)))
        h = span / n
        t = t_grid[i - 1]
        for _ in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + h / 2, y + h / 2 * k1)
            k3 = rhs(t + h / 2, y + h / 2 * k2)
            k4 = rhs(t + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        out[i] = y
    return out


def _integrate(h: HamiltonianMatrix, Y0: np.ndarray, t_grid: np.ndarray, method: str,
               rtol: float, atol: float, dt: float | None) -> np.ndarray:
    """Integrate columns of ``Y0``; returns (n_times, dim, n_cols) in the lab frame."""
    dim, ncol = Y0.shape
    e_ref = _reference_energy(h)
    mat = h.entries
    shifted = (mat - e_ref * sparse.identity(dim, format="csr")) if h.is_sparse else (mat - e_ref * np.eye(dim))
    if h.is_sparse:
        shifted = sparse.csr_matrix(shifted)

    def rhs(t, y):
        return (-1j * (shifted @ y.reshape(dim, ncol))).reshape(-1)

    y0 = Y0.reshape(-1)
    if method == "rk4":
        if dt is None:
            raise ValueError("fixed-step integration needs dt")
        ys = _rk4(rhs, y0, t_grid, dt)
    else:
        sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, method=method, t_eval=t_grid,
                        rtol=rtol, atol=atol)
        if sol.status != 0:
            raise StiffnessError(f"integration failed at t={sol.t[-1] if sol.t.size else t_grid[0]!r}: {sol.message}")
        ys = sol.y.T
    phase = np.exp(-1j * e_ref * t_grid)
    return ys.reshape(t_grid.size, dim, ncol) * phase[:, None, None]


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid needs at least two points")
    if t[0] != 0.0:
        raise ValueError("time grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


def _trajectory(h: HamiltonianMatrix, amps: np.ndarray, t: np.ndarray, store: bool) -> Trajectory:
    probs = np.abs(amps) ** 2
    chain, atom, bres, batom = _partial_norms(h, probs)
    hermitian = not h.effective
    traj = Trajectory(t, chain, atom, bres, batom, amps if store else None, h.labels,
                      hermitian, h.recurrence_time)
    if hermitian and traj.norm_drift > NORM_DRIFT_TOL:
        log.warning("total norm drifted by %.3g (> %.0e)", traj.norm_drift, NORM_DRIFT_TOL)
    return traj


def evolve_many(h: HamiltonianMatrix, initials, t_grid, method: str = "DOP853",
                rtol: float = 1e-12, atol: float = 1e-13, dt: float | None = None,
                store_amplitudes: bool = False) -> list[Trajectory]:
    """Evolve several initial states together (one ODE system, shared steps)."""
    t = _check_grid(t_grid)
    Y0 = np.column_stack([state_vector(h, init) for init in initials])
    amps = _integrate(h, Y0, t, method, rtol, atol, dt)
    return [_trajectory(h, amps[:, :, c], t, store_amplitudes) for c in range(Y0.shape[1])]


def evolve(h: HamiltonianMatrix, initial, t_grid, method: str = "DOP853",
           rtol: float = 1e-12, atol: float = 1e-13, dt: float | None = None,
           store_amplitudes: bool = True) -> Trajectory:
    """Integrate ``i d psi/dt = H psi`` and record partial norms on ``t_grid``.

    ``method`` is any adaptive :func:`scipy.integrate.solve_ivp` scheme, or
    ``"rk4"`` for fixed steps of at most ``dt`` (bit-reproducible output).
    Integration runs in a frame rotating at ``omega_c`` and the phase is
    restored afterwards.
    """
    return evolve_many(h, [initial], t_grid, method, rtol, atol, dt, store_amplitudes)[0]


def evolve_effective(p: SystemParams, d: DissipationRates, initial, t_grid, **kwargs) -> Trajectory:
    return evolve(build_effective_hamiltonian(p, d), initial, t_grid, **kwargs)


# --------------------------------------------------------------------------
# Decay fits
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    rate: float
    window: tuple[float, float]
    rms_residual: float
    n_samples: int
    convention: str = "amplitude-rate"


def default_fit_window(gamma_est: float) -> tuple[float, float]:
    """Skip the early transient and stop well before the population is gone."""
    if not gamma_est > 0:
        raise ValueError("rate estimate must be positive")
    return (0.05 / gamma_est, 0.5 / gamma_est)


def fit_decay(traj: Trajectory, window: tuple[float, float]) -> DecayFit:
    """Least-squares line through ``log(system_norm)``; rate = -slope / 2."""
    t0, t1 = window
    if not t0 < t1:
        raise ValueError("empty fit window")
    if t0 < traj.times[0] or t1 > traj.times[-1] * (1 + 1e-12):
        raise ValueError(f"window {window} outside trajectory [{traj.times[0]}, {traj.times[-1]}]")
    if t1 >= traj.recurrence_time:
        raise ValueError(f"window end {t1} reaches the bath recurrence time {traj.recurrence_time}")
    sel = (traj.times >= t0) & (traj.times <= t1 * (1 + 1e-12))
    if sel.sum() < 10:
        raise ValueError(f"fit window holds {int(sel.sum())} samples; need at least 10")
    norm = traj.system_norm[sel]
    if np.any(norm < 1e-12):
        raise ValueError("system norm below 1e-12 inside the fit window")
    t = traj.times[sel]
    y = np.log(norm)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    return DecayFit(float(-slope / 2), (float(t0), float(t1)), float(np.sqrt(np.mean(resid ** 2))), int(sel.sum()))


def fit_grid(window: tuple[float, float], n: int = 200) -> np.ndarray:
    """Time grid from 0 through the end of ``window`` with ``n`` points inside it."""
    t0, t1 = window
    inner = np.linspace(t0, t1, n)
    return np.unique(np.concatenate([[0.0], inner]))


# --------------------------------------------------------------------------
# Wavepackets
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WavepacketResult:
    """Scattering probabilities of a Gaussian packet.

    ``R``, ``T`` and ``A = 1 - R - T`` are divided by the free-propagation
    survival ``exp(-2 gamma_c t_final)`` so that uniform resonator leakage,
    which scales every amplitude alike, does not count as absorption by the
    atom. The ``*_raw`` fields are the bare probabilities.
    """

    R: float
    T: float
    A: float
    R_raw: float
    T_raw: float
    A_raw: float
    survival: float
    t_final: float
    k0: float
    width: float
    center: int


def gaussian_packet(p: SystemParams, k0: float, width: float, center: int) -> np.ndarray:
    """``exp(-(j - center)**2 / (2 width**2) + i k0 j)`` on the chain, unit norm."""
    j = p.sites
    amp = np.exp(-((j - center) ** 2) / (2 * width ** 2) + 1j * k0 * j)
    return amp / np.linalg.norm(amp)


def packet_momentum_weights(p: SystemParams, k0: float, width: float, center: int,
                            n: int = 4001) -> tuple[np.ndarray, np.ndarray]:
    """``|phi(k)|**2`` of the lattice packet on a grid covering its support in (0, pi)."""
    span = 12.0 / width
    k = np.linspace(max(k0 - span, 1e-9), min(k0 + span, math.pi - 1e-9), n)
    psi = gaussian_packet(p, k0, width, center)
    phi = np.exp(-1j * np.outer(k, p.sites)) @ psi
    return k, np.abs(phi) ** 2


def momentum_average(p: SystemParams, k0: float, width: float, center: int, func) -> float:
    """Average of ``func(k)`` over the packet's momentum distribution."""
    k, w = packet_momentum_weights(p, k0, width, center)
    vals = np.asarray(func(k), dtype=float)
    return float(np.trapezoid(w * vals, k) / np.trapezoid(w, k))


def default_center(p: SystemParams) -> int:
    return -(p.half // 2)


def wavepacket_scatter(p: SystemParams, k0: float, width: float,
                       d: DissipationRates | None = None,
                       baths: tuple[BathSpec, BathSpec] | None = None,
                       center: int | None = None, t_final: float | None = None) -> WavepacketResult:
    """Launch a Gaussian packet at ``center < 0`` towards the atom and measure
    the left/right chain populations once the packets have separated.

    Dissipation enters either through ``d`` (effective non-Hermitian chain)
    or through explicit ``baths = (resonator_bath, atom_bath)``.
    """
    if d is not None and baths is not None:
        raise ValueError("give either effective rates or explicit baths, not both")
    if width < 10:
        raise GeometryError("packet width must be at least 10 sites")
    if not 0 < k0 < math.pi:
        raise ValueError("k0 must lie inside (0, pi)")
    half = p.half
    center = default_center(p) if center is None else int(center)
    reach = 4 * width
    if center >= 0 or -center < reach or half + center < reach:
        raise GeometryError(
            f"packet (center {center}, width {width}) does not fit between the wall and the atom; "
            f"increase n_sites (now {p.n_sites})"
        )
    v = 2 * p.xi * math.sin(k0)
    sep = half / 2
    if t_final is None:
        t_final = (-center + sep) / v
    psi0 = np.zeros(p.n_sites + 1, dtype=complex)
    psi0[: p.n_sites] = gaussian_packet(p, k0, width, center)

    gamma_c = 0.0
    if baths is None:
        rates = d or DissipationRates()
        gamma_c = rates.gamma_c
        h = build_effective_hamiltonian(p, rates)
        # remove the uniform site loss exactly; it is restored via ``survival``
        mat = sparse.csr_matrix(h.entries - complex(p.omega_c, -gamma_c) * np.eye(h.dimension))
        psi = expm_multiply(-1j * t_final * mat, psi0)
        survival = math.exp(-2 * gamma_c * t_final)
        raw_scale = survival
    else:
        res_bath, atom_bath = baths
        h = build_total_hamiltonian(p, res_bath, atom_bath)
        if t_final >= h.recurrence_time:
            raise GeometryError(f"scattering time {t_final} exceeds bath recurrence time {h.recurrence_time}")
        gamma_c = math.pi * res_bath.lam
        full0 = state_vector(h, psi0)
        mat = h.entries - p.omega_c * sparse.identity(h.dimension, format="csr")
        psi = expm_multiply(-1j * t_final * sparse.csr_matrix(mat), full0)
        survival = math.exp(-2 * gamma_c * t_final)
        raw_scale = 1.0

    prob = np.abs(psi[: p.n_sites]) ** 2 * raw_scale
    j = p.sites
    edge = np.abs(j) > half - 10
    if prob[edge].sum() > 1e-6 * raw_scale:
        raise GeometryError(f"packet reached the chain boundary; increase n_sites (now {p.n_sites})")
    near = np.abs(j) < sep / 4
    if prob[near].sum() > 1e-4 * max(raw_scale, survival):
        raise GeometryError("packet has not left the scattering region; increase n_sites or t_final")
    R_raw = float(prob[j < 0].sum())
    T_raw = float(prob[j > 0].sum())
    R = R_raw / survival
    T = T_raw / survival
    return WavepacketResult(R, T, 1.0 - R - T, R_raw, T_raw, 1.0 - R_raw - T_raw,
                            survival, float(t_final), float(k0), float(width), center)
