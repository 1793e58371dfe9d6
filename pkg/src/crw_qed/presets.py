"""Parameter sets of the two reference figures (all in units of xi = 1)."""

from .model import DissipationRates, SystemParams

# decay-rate figure: g = 0.1, beta = 0.4, J = 1.5
FIG2_G = 0.1
FIG2_BETA = 0.4
FIG2_PANELS = {
    "a": SystemParams(omega_c=5.0, xi=1.0, Omega=6.0, J=1.5, n_sites=401),
    "b": SystemParams(omega_c=5.0, xi=1.0, Omega=5.0, J=1.5, n_sites=401),
}

# reflection figure: four (system, rates) series
FIG3_SERIES = {
    "blue-solid": (SystemParams(omega_c=5.0, Omega=5.0, J=0.8, n_sites=401), DissipationRates(0.1, 0.4)),
    "red-dot-dashed": (SystemParams(omega_c=5.0, Omega=5.0, J=1.5, n_sites=401), DissipationRates(0.1, 0.4)),
    "black-dashed": (SystemParams(omega_c=5.0, Omega=6.0, J=1.5, n_sites=401), DissipationRates(0.1, 0.4)),
    "green-dotted": (SystemParams(omega_c=5.0, Omega=6.0, J=1.5, n_sites=401), DissipationRates(0.1, 0.1)),
}

RESONANT = SystemParams(omega_c=5.0, xi=1.0, Omega=5.0, J=1.5, n_sites=401)
