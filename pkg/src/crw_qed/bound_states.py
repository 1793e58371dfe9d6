"""Photon-atom bound states outside the band.

A bound state on branch ``sigma`` (+1 below the band, -1 above it) has
energy ``omega_c - 2 xi sigma cosh(kappa)`` and chain amplitudes
``C sigma**j exp(-kappa |j|)``. ``kappa > 0`` solves

    J**2 = 2 xi sigma (Omega - E_kappa) sinh(kappa).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import SolverError
from .model import SystemParams

BRANCHES = (+1, -1)
_KAPPA_XTOL = 1e-15


def _check_branch(branch: int) -> int:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be +1 (below band) or -1 (above band), got {branch!r}")
    return int(branch)


def bound_energy(p: SystemParams, branch: int, kappa: float) -> float:
    return p.omega_c - 2 * p.xi * branch * math.cosh(kappa)


def bound_condition(p: SystemParams, branch: int, kappa):
    """Mismatch ``f(kappa)`` of the bound-state condition; zero at a solution."""
    kappa = np.asarray(kappa, dtype=float)
    out = 2 * p.xi * branch * (p.Omega - p.omega_c + 2 * p.xi * branch * np.cosh(kappa)) * np.sinh(kappa) - p.J ** 2
    return float(out) if out.ndim == 0 else out


def kappa_max(p: SystemParams) -> float:
    # detuning term keeps far-detuned atoms bracketed: cosh(kappa) must reach |Omega - omega_c| / 2 xi
    return math.asinh(max(10.0, 10 * p.J ** 2 / p.xi ** 2, 2 * abs(p.Omega - p.omega_c) / p.xi))


@dataclass(frozen=True)
class BoundState:
    branch: int
    kappa: float
    Omega_kappa: float
    C: float
    residual: float
    C_closed_form: float

    @property
    def side(self) -> str:
        return "below" if self.branch > 0 else "above"


def normalize_bound(p: SystemParams, branch: int, kappa: float, mode: str = "resummed") -> float:
    """Normalisation constant ``C`` of the bound state.

    ``resummed``: ``[coth(kappa) + J**2 / (E - Omega)**2] ** -0.5``, using
    ``sum_j exp(-2 kappa |j|) = coth(kappa)``; this makes chain plus atom
    probability exactly one. ``closed-form`` swaps ``coth`` for ``tanh``.
    """
    branch = _check_branch(branch)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    E = bound_energy(p, branch, kappa)
    if E == p.Omega:
        raise ValueError("bound-state energy coincides with the atomic transition")
    atom = p.J ** 2 / (E - p.Omega) ** 2
    if mode == "resummed":
        chain = 1.0 / math.tanh(kappa)
    elif mode == "closed-form":
        chain = math.tanh(kappa)
    else:
        raise ValueError(f"unknown normalisation mode {mode!r}")
    return (chain + atom) ** -0.5


def solve_bound_state(p: SystemParams, branch: int) -> BoundState | None:
    """Bound state on one side of the band, or ``None`` if none exists.

    Bracketed root search on ``(0, kappa_max]``; the bracket is scanned
    first so that more than one sign change (which would break the
    single-root assumption) is reported instead of silently picking one.
    """
    branch = _check_branch(branch)
    if p.J == 0:
        return None
    hi = kappa_max(p)
    grid = np.linspace(0.0, hi, 2049)[1:]
    f = bound_condition(p, branch, grid)
    changes = np.nonzero(np.diff(np.sign(f)) != 0)[0]
    if f[0] > 0:
        changes = np.concatenate([[-1], changes])
    if changes.size == 0:
        return None
    if changes.size > 1:
        raise SolverError("bound-state condition is not monotone: several roots", (0.0, hi))
    i = int(changes[0])
    a = 0.0 if i < 0 else float(grid[i])
    b = float(grid[i + 1])
    if a == 0.0:
        a = np.nextafter(0.0, 1.0)
    try:
        kappa, info = optimize.brentq(
            lambda x: bound_condition(p, branch, x), a, b,
            xtol=_KAPPA_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500, full_output=True,
        )
    except (RuntimeError, ValueError) as exc:
        raise SolverError(f"root search failed: {exc}", (a, b)) from exc
    if not info.converged:
        raise SolverError("root search did not converge", (a, b))
    return BoundState(
        branch=branch,
        kappa=float(kappa),
        Omega_kappa=bound_energy(p, branch, kappa),
        C=normalize_bound(p, branch, kappa, "resummed"),
        residual=abs(bound_condition(p, branch, kappa)),
        C_closed_form=normalize_bound(p, branch, kappa, "closed-form"),
    )


def bound_profile(b: BoundState, p: SystemParams, j):
    """Chain amplitude ``C sigma**j exp(-kappa |j|)`` at site(s) ``j``."""
    j = np.asarray(j)
    out = b.C * np.where(j % 2 == 0, 1.0, float(b.branch)) * np.exp(-b.kappa * np.abs(j))
    return complex(out) if out.ndim == 0 else out.astype(complex)


def bound_atom_amplitude(b: BoundState, p: SystemParams) -> complex:
    return complex(b.C * p.J / (b.Omega_kappa - p.Omega))


def bound_state_vector(b: BoundState, p: SystemParams) -> np.ndarray:
    """Analytic state on the finite chain's system basis (sites, then atom)."""
    return np.concatenate([bound_profile(b, p, p.sites), [bound_atom_amplitude(b, p)]])


def bound_state_report(b: BoundState | None, p: SystemParams, branch: int) -> dict:
    if b is None:
        return {"branch": branch, "kappa": None, "omega_kappa": None, "C_resummed": None,
                "C_closed_form": None, "residual": None, "atom_weight": None}
    return {
        "branch": b.branch,
        "kappa": b.kappa,
        "omega_kappa": b.Omega_kappa,
        "C_resummed": b.C,
        "C_closed_form": b.C_closed_form,
        "residual": b.residual,
        "atom_weight": abs(bound_atom_amplitude(b, p)) ** 2,
    }
