"""``crw-qed`` command line front end.

Every parameter can come from a flag or from a config file (``--config``)
holding flat ``key = value`` lines (``#`` starts a comment) or a flat JSON
object. Flags win over the file. The resolved parameters are written to
``<output>/config.resolved.json``, which ``--config`` accepts back to replay
a run exactly.

Exit status: 0 success, 1 physics-domain error, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting, presets
from .adjudicate import compare_bound_decay
from .bound_states import BRANCHES, bound_state_report, solve_bound_state
from .decay import bound_decay_report, decay_spectrum
from .dynamics import evolve, momentum_average, wavepacket_scatter
from .errors import PhysicsError
from .model import (
    BasisLabel,
    DissipationRates,
    SystemParams,
    build_effective_hamiltonian,
    build_system_hamiltonian,
    build_total_hamiltonian,
    discretize_flat_bath,
)
from .oracle import system_decomposition
from .scattering import dispersion, fmt, interior_grid, scan_spectrum, SPECTRUM_HEADER

log = logging.getLogger("crw_qed")

SUBCOMMANDS = ("dispersion", "scatter", "bound", "decay", "evolve", "wavepacket",
               "reproduce-fig2", "reproduce-fig3")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key: (type, default, help); the flag is ``--`` + key with ``_`` -> ``-``
PARAMS: dict[str, tuple] = {
    "omega_c": (float, None, "resonator frequency"),
    "xi": (float, 1.0, "inter-resonator hopping"),
    "omega": (float, None, "atomic transition frequency"),
    "J": (float, None, "atom-resonator coupling"),
    "n_sites": (int, 401, "odd number of chain sites for numerical routes"),
    "periodic": (_bool, False, "periodic chain (dispersion checks only)"),
    "gamma_c": (float, None, "resonator leakage rate (effective model)"),
    "gamma_a": (float, None, "atom decay rate (effective model)"),
    "lambda_res": (float, 0.01, "resonator-bath memory function value"),
    "lambda_atom": (float, 0.16, "atom-bath memory function value"),
    "bath_modes": (int, 800, "modes per discretized bath"),
    "bath_bandwidth": (float, 8.0, "discretized bath bandwidth"),
    "bath_center": (float, None, "discretized bath centre (default omega_c)"),
    "k_points": (int, 512, "number of wavenumbers"),
    "t_max": (float, None, "final time"),
    "t_points": (int, 201, "number of output times"),
    "g": (float, None, "resonator bath constant (Lambda_res = g^2)"),
    "beta": (float, None, "atom bath constant (Lambda_atom = beta^2)"),
    "mode": (str, "system", "evolve: system | total | effective"),
    "initial": (str, "site:0", "evolve: site:J | atom | bound:+1 | bound:-1 | eigen:I"),
    "integrator": (str, "DOP853", "evolve: DOP853 (adaptive) or rk4 (fixed step)"),
    "dt": (float, 0.01, "rk4 step"),
    "k0": (float, None, "wavepacket central wavenumber"),
    "width": (float, 80.0, "wavepacket width (sites)"),
    "center": (int, None, "wavepacket start site (default -n_sites/4)"),
    "seed": (int, 0, "global phase of launched wavepackets"),
    "units": (str, "xi", "xi: report energies in units of xi; raw: as given"),
    "workers": (int, None, "worker threads for sweeps (env CRW_QED_THREADS)"),
    "figures": (_bool, True, "render PNG figures"),
    "dump_amplitudes": (_bool, False, "evolve: also write amplitudes.bin"),
    "adjudicate": (_bool, False, "bound: fit full bath dynamics against the analytic rates"),
    "adjudicate_sites": (int, 21, "bound: chain length for the dynamics fit"),
}

REQUIRED = {
    "dispersion": ("omega_c",),
    "scatter": ("omega_c", "omega", "J"),
    "bound": ("omega_c", "omega", "J"),
    "decay": ("omega_c", "omega", "J", "g", "beta"),
    "evolve": ("omega_c", "omega", "J", "t_max"),
    "wavepacket": ("omega_c", "omega", "J", "k0"),
    "reproduce-fig2": (),
    "reproduce-fig3": (),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    values: dict
    output: Path
    system: SystemParams | None = None
    dissipation: DissipationRates | None = None
    baths: tuple | None = None
    seed: int = 0
    workers: int = 1
    warnings: list = field(default_factory=list)

    @property
    def energy_unit(self) -> float:
        if self.values["units"] == "xi" and self.system is not None:
            return self.system.xi
        return 1.0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value or JSON config file")
    common.add_argument("--output", "-o", help="output directory (default: out)")
    for key, (typ, _default, help_) in PARAMS.items():
        flag = "--" + key.replace("_", "-")
        if typ is _bool:
            common.add_argument(flag, dest=key, type=_bool, nargs="?", const=True, default=None, help=help_)
            if key in ("figures", "periodic", "dump_amplitudes", "adjudicate"):
                common.add_argument("--no-" + key.replace("_", "-"), dest=key, action="store_const",
                                    const=False, help=argparse.SUPPRESS)
        else:
            common.add_argument(flag, dest=key, type=typ, default=None, help=help_)
    parser = argparse.ArgumentParser(prog="crw-qed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def read_config_file(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON: {exc}") from exc
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            raw[k] = v
    out = {}
    for k, v in raw.items():
        if k in ("subcommand", "output"):
            out[k] = v
            continue
        if k not in PARAMS:
            raise UsageError(f"{path}: unknown key {k!r}")
        if v is None:
            out[k] = None
            continue
        typ = PARAMS[k][0]
        try:
            out[k] = typ(v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{path}: bad value for {k}: {v!r}") from exc
    return out


def _default_workers() -> int:
    env = os.environ.get("CRW_QED_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CRW_QED_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def parse_config(argv=None) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subcommand
    file_vals = read_config_file(args.config) if args.config else {}
    if "subcommand" in file_vals and file_vals["subcommand"] != sub:
        raise UsageError(f"config file is for {file_vals['subcommand']!r}, not {sub!r}")

    warnings = []
    values = {}
    for key, (_typ, default, _help) in PARAMS.items():
        flag_val = getattr(args, key)
        if flag_val is not None:
            if key in file_vals and file_vals[key] is not None and file_vals[key] != flag_val:
                warnings.append(f"warning: --{key.replace('_', '-')} {flag_val!r} overrides config value {file_vals[key]!r}")
            values[key] = flag_val
        elif file_vals.get(key) is not None:
            values[key] = file_vals[key]
        else:
            values[key] = default
    output = args.output or file_vals.get("output") or "out"
    if args.output and file_vals.get("output") and args.output != file_vals["output"]:
        warnings.append(f"warning: --output {args.output!r} overrides config value {file_vals['output']!r}")

    for key in REQUIRED[sub]:
        if values[key] is None:
            raise UsageError(f"missing required parameter --{key.replace('_', '-')} (config key {key!r})")
    if values["units"] not in ("xi", "raw"):
        raise UsageError("--units must be 'xi' or 'raw'")
    if values["mode"] not in ("system", "total", "effective"):
        raise UsageError("--mode must be system, total or effective")
    if values["k_points"] < 1 or values["t_points"] < 2:
        raise UsageError("--k-points must be >= 1 and --t-points >= 2")
    if values["workers"] is None:
        values["workers"] = _default_workers()

    system = None
    if sub not in ("reproduce-fig2", "reproduce-fig3"):
        try:
            system = SystemParams(
                omega_c=values["omega_c"], xi=values["xi"],
                Omega=values["omega"] if values["omega"] is not None else values["omega_c"],
                J=values["J"] if values["J"] is not None else 0.0,
                n_sites=values["n_sites"], periodic=values["periodic"],
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    dissipation = None
    if values["gamma_c"] is not None or values["gamma_a"] is not None:
        try:
            dissipation = DissipationRates(values["gamma_c"] or 0.0, values["gamma_a"] or 0.0)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    baths = None
    if sub == "evolve" and values["mode"] == "total":
        center = values["bath_center"] if values["bath_center"] is not None else values["omega_c"]
        try:
            baths = (
                discretize_flat_bath(values["lambda_res"], center, values["bath_bandwidth"], values["bath_modes"]),
                discretize_flat_bath(values["lambda_atom"], center, values["bath_bandwidth"], values["bath_modes"]),
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return RunConfig(sub, values, Path(output), system, dissipation, baths, values["seed"],
                     values["workers"], warnings)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else fmt(x) for x in row])
    return path


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _parallel_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _scale(x, unit):
    return None if x is None else x / unit


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _run_dispersion(cfg: RunConfig) -> list[Path]:
    p = cfg.system
    eu = cfg.energy_unit
    k = np.linspace(0.0, math.pi, cfg.values["k_points"])
    om = dispersion(p, k)
    out = [write_csv(cfg.output / "dispersion.csv", ("k", "omega_k"), zip(k, om / eu))]
    out.append(plotting.write_plot_script(cfg.output / "dispersion_plot.py", "dispersion.png",
                                          ["dispersion.csv"], "k", "omega_k"))
    if cfg.values["figures"]:
        out.append(plotting.plot_dispersion(k, om / eu, cfg.output / "dispersion.png"))
    return out


def _run_scatter(cfg: RunConfig) -> list[Path]:
    table = scan_spectrum(cfg.system, interior_grid(cfg.values["k_points"]), cfg.dissipation)
    out = [table.to_csv(cfg.output / "spectrum.csv", cfg.energy_unit)]
    out.append(plotting.write_plot_script(cfg.output / "spectrum_plot.py", "spectrum.png",
                                          ["spectrum.csv"], "k", "R"))
    if cfg.values["figures"]:
        label = "dissipative" if cfg.dissipation else "ideal"
        out.append(plotting.plot_reflection({label: (table.k, table.R)}, cfg.output / "spectrum.png"))
    return out


def _bound_reports(cfg: RunConfig) -> dict:
    p = cfg.system
    eu = cfg.energy_unit
    reports = []
    for br in BRANCHES:
        b = solve_bound_state(p, br)
        rep = bound_state_report(b, p, br)
        rep["omega_kappa"] = _scale(rep["omega_kappa"], eu)
        if b is not None and cfg.values["g"] is not None and cfg.values["beta"] is not None:
            dec = bound_decay_report(p, cfg.values["g"], cfg.values["beta"], b)
            for key in ("gamma_normalized", "gamma_closed_form", "gamma_resonant_formula"):
                dec[key] /= eu
            rep["decay"] = dec
        reports.append(rep)
    return {"bound_states": reports}


def _run_bound(cfg: RunConfig) -> list[Path]:
    out = [write_json(cfg.output / "bound_states.json", _bound_reports(cfg))]
    if cfg.values["adjudicate"]:
        v = cfg.values
        if v["g"] is None or v["beta"] is None:
            raise UsageError("--adjudicate needs --g and --beta")

        def one(branch):
            try:
                return branch, compare_bound_decay(
                    cfg.system, v["g"], v["beta"], branch, n_sites=v["adjudicate_sites"],
                    bath_modes=v["bath_modes"], bandwidth=v["bath_bandwidth"], bath_center=v["bath_center"])
            except PhysicsError as exc:
                log.warning("branch %+d skipped: %s", branch, exc)
                return branch, None

        results = [(br, c) for br, c in _parallel_map(one, BRANCHES, cfg.workers) if c is not None]
        for br, c in results:
            tag = "below" if br == 1 else "above"
            out.append(c.to_csv(cfg.output / f"gamma_comparison_{tag}.csv", cfg.energy_unit))
            print(f"branch {br:+d}: {c.verdict}")
        out.append(write_json(cfg.output / "gamma_comparison.json", {"comparisons": [c.to_dict() for _, c in results]}))
    return out


def _run_decay(cfg: RunConfig) -> list[Path]:
    p = cfg.system
    decay_tab = decay_spectrum(p, cfg.values["g"], cfg.values["beta"], interior_grid(cfg.values["k_points"]))
    out = [decay_tab.to_csv(cfg.output / "decay.csv", cfg.energy_unit)]
    out.append(write_json(cfg.output / "bound_decay.json", _bound_reports(cfg)))
    out.append(plotting.write_plot_script(cfg.output / "decay_plot.py", "decay.png",
                                          ["decay.csv"], "k", "gamma_continuum"))
    if cfg.values["figures"]:
        out.append(plotting.plot_decay_panels([("continuum", decay_tab.k, decay_tab.gamma_continuum / cfg.energy_unit)],
                                              cfg.output / "decay.png"))
    return out


def _initial_state(cfg: RunConfig, h):
    text = cfg.values["initial"]
    p = cfg.system
    if text.startswith("bound:"):
        from .bound_states import bound_state_vector

        b = solve_bound_state(p, int(text.split(":", 1)[1]))
        if b is None:
            raise PhysicsError(f"no bound state on branch {text}")
        v = bound_state_vector(b, p)
        return v / np.linalg.norm(v)
    if text.startswith("eigen:"):
        ed = system_decomposition(p)
        return ed.state(int(text.split(":", 1)[1]))
    try:
        return BasisLabel.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _run_evolve(cfg: RunConfig) -> list[Path]:
    p = cfg.system
    mode = cfg.values["mode"]
    if mode == "system":
        h = build_system_hamiltonian(p)
    elif mode == "effective":
        h = build_effective_hamiltonian(p, cfg.dissipation or DissipationRates())
    else:
        h = build_total_hamiltonian(p, *cfg.baths)
    t = np.linspace(0.0, cfg.values["t_max"], cfg.values["t_points"])
    method = "rk4" if cfg.values["integrator"].lower() == "rk4" else cfg.values["integrator"]
    traj = evolve(h, _initial_state(cfg, h), t, method=method, dt=cfg.values["dt"],
                  store_amplitudes=cfg.values["dump_amplitudes"])
    time_unit = 1.0 / cfg.energy_unit
    out = [traj.to_csv(cfg.output / "trajectory.csv", time_unit)]
    if cfg.values["dump_amplitudes"]:
        out.append(traj.dump_amplitudes(cfg.output / "amplitudes.bin"))
    out.append(plotting.write_plot_script(cfg.output / "trajectory_plot.py", "trajectory.png",
                                          ["trajectory.csv"], "t", "system_norm"))
    if cfg.values["figures"]:
        cols = {k: v for k, v in traj.columns().items() if k != "t"}
        out.append(plotting.plot_trajectory(traj.times / time_unit, cols, cfg.output / "trajectory.png"))
    return out


def _run_wavepacket(cfg: RunConfig) -> list[Path]:
    from .scattering import _amplitudes

    p = cfg.system
    k0, width = cfg.values["k0"], cfg.values["width"]
    res = wavepacket_scatter(p, k0, width, d=cfg.dissipation, center=cfg.values["center"])
    gamma_rel = 0.0 if cfg.dissipation is None else cfg.dissipation.gamma_A - cfg.dissipation.gamma_c
    R_avg = momentum_average(p, k0, width, res.center, lambda k: np.abs(_amplitudes(p, k, gamma_rel)[1]) ** 2)
    T_avg = momentum_average(p, k0, width, res.center, lambda k: np.abs(_amplitudes(p, k, gamma_rel)[2]) ** 2)
    report = {
        "k0": k0, "width": width, "center": res.center, "seed": cfg.seed,
        "t_final": res.t_final * cfg.energy_unit,
        "R": res.R, "T": res.T, "A": res.A,
        "R_raw": res.R_raw, "T_raw": res.T_raw, "A_raw": res.A_raw,
        "survival": res.survival,
        "R_analytic_momentum_averaged": R_avg, "T_analytic_momentum_averaged": T_avg,
    }
    return [write_json(cfg.output / "wavepacket.json", report)]


def _run_fig2(cfg: RunConfig) -> list[Path]:
    k = interior_grid(cfg.values["k_points"])
    n_sites = cfg.values["n_sites"]

    def panel(name):
        p = presets.FIG2_PANELS[name].replace(n_sites=n_sites)
        return name, decay_spectrum(p, presets.FIG2_G, presets.FIG2_BETA, k)

    results = _parallel_map(panel, ["a", "b"], cfg.workers)
    out = [decay_tab.to_csv(cfg.output / f"fig2_{name}.csv") for name, decay_tab in results]
    out.append(plotting.write_plot_script(cfg.output / "fig2_plot.py", "fig2.png",
                                          ["fig2_a.csv", "fig2_b.csv"], "k", "gamma_continuum"))
    if cfg.values["figures"]:
        titles = {"a": r"(a) $\omega_c=5,\ \Omega=6$", "b": r"(b) $\omega_c=\Omega=5$"}
        out.append(plotting.plot_decay_panels([(titles[n], s.k, s.gamma_continuum) for n, s in results],
                                              cfg.output / "fig2.png"))
    return out


def _run_fig3(cfg: RunConfig) -> list[Path]:
    k = interior_grid(cfg.values["k_points"])

    def series(name):
        p, d = presets.FIG3_SERIES[name]
        return name, scan_spectrum(p, k, d)

    results = _parallel_map(series, list(presets.FIG3_SERIES), cfg.workers)
    rows = []
    for name, table in results:
        rows.extend((name, *row) for row in table.rows())
    out = [write_csv(cfg.output / "fig3.csv", ("series",) + SPECTRUM_HEADER, rows)]
    out.append(plotting.write_plot_script(cfg.output / "fig3_plot.py", "fig3.png", ["fig3.csv"],
                                          "k", "R", group="series"))
    if cfg.values["figures"]:
        out.append(plotting.plot_reflection({n: (t.k, t.R) for n, t in results}, cfg.output / "fig3.png"))
    return out


HANDLERS = {
    "dispersion": _run_dispersion,
    "scatter": _run_scatter,
    "bound": _run_bound,
    "decay": _run_decay,
    "evolve": _run_evolve,
    "wavepacket": _run_wavepacket,
    "reproduce-fig2": _run_fig2,
    "reproduce-fig3": _run_fig3,
}


def run(cfg: RunConfig) -> int:
    for line in cfg.warnings:
        print(line, file=sys.stderr)
    try:
        cfg.output.mkdir(parents=True, exist_ok=True)
        resolved = {"subcommand": cfg.subcommand, "output": str(cfg.output), **cfg.values}
        write_json(cfg.output / "config.resolved.json", resolved)
        written = HANDLERS[cfg.subcommand](cfg)
    except PhysicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
