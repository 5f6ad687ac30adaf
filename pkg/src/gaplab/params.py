"""Default numeric constants and the derived-parameter recipes.

Every constant that any experiment consumes lives in DEFAULTS so the CLI
can echo the complete set into its run manifest; nothing else in the
package hides a tunable number.
"""

import math

# All tunable constants with their default values.  Keys double as the
# config-file / CLI override names (CLI flags use dashes).
DEFAULTS = {
    # sphere-decomposition constants
    "c_dom": 0.5,        # dominated-tail ratio constant, in (0, 1)
    "cbar": 2.0,         # base of the compressibility radius recipe
    "omega": 0.1,        # partition block fraction
    # LCD constants
    "gamma": 0.1,        # anticoncentration calibration constant, in (0, 1)
    "alpha": 0.25,       # exponent knob for the default LCD search cap
    "coarse_step": 1e-3, # LCD grid resolution
    "refine_iters": 40,  # LCD bisection refinement steps
    # spectral experiment constants
    "k_norm": 3.5,       # operator-norm assertion hook: max ||M||/sqrt(pn)
    "tol_factor": 1e-8,  # simple-spectrum gap tolerance factor
    # nodal constants
    "zeta": 2.0 ** -40,  # near-zero scale: threshold = n * ||v||_inf * zeta
}


def rho_default(p, n, cbar=DEFAULTS["cbar"]):
    """Compressibility radius for a sparsity level p at dimension n.

    Uses the recipe rho = cbar**(-(l0 + 6)) with
    l0 = ceil(log(1/(8p)) / log(sqrt(pn))); the base cbar is exposed
    because only the functional form is canonical.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must be in (0, 1]")
    if p * n <= 1.0:
        raise ValueError("need pn > 1 for the radius recipe")
    l0 = math.ceil(math.log(1.0 / (8.0 * p)) / math.log(math.sqrt(p * n)))
    return float(cbar) ** (-(l0 + 6))


def omega_window(n):
    """Asymptotic legal window [n**(-1/7), 1/log n] for the block fraction.

    At desk-scale n the window is empty (the lower end exceeds the upper
    end for n below ~10^6), so callers treat it as advisory: use
    omega_in_window() to flag, never to reject.
    """
    return n ** (-1.0 / 7.0), 1.0 / math.log(n)


def omega_in_window(omega, n):
    lo, hi = omega_window(n)
    return lo <= omega <= hi


def default_theta_max(p, alpha=DEFAULTS["alpha"]):
    """Default LCD search cap p**(-1/2) * exp(1/alpha).

    Beyond this point the experiments only need to know the LCD is
    large, so the search reports a capped result.
    """
    return math.exp(1.0 / alpha) / math.sqrt(p)
