"""Heston PDE coefficients, payoffs and boundary data for the three options.

The pricing PDE is posed in time-to-maturity tau and log-moneyness
x = log(S / K_ref) with K_ref the strike stored in `HestonParams.K`
(the middle strike for a butterfly spread). In these variables the operator
is a diffusion-convection-reaction operator whose coefficients depend on the
variance v only.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ConfigurationError
from .fields import CoefficientField
from .mesh import SIDE_NAMES

PRESET_NAMES = ("european-call", "butterfly", "digital")


@dataclass(frozen=True)
class HestonParams:
    """Market and model constants (rates per year, variances dimensionless)."""

    kappa: float
    theta: float
    sigma: float
    rho: float
    r_d: float
    r_f: float
    T: float
    K: float
    S0: float
    v0: float

    def __post_init__(self):
        checks = [
            (self.kappa > 0, "kappa must be positive"),
            (self.theta > 0, "theta must be positive"),
            (self.sigma > 0, "sigma must be positive"),
            (-1.0 < self.rho < 1.0, "rho must lie in (-1, 1)"),
            (self.T > 0, "maturity must be positive"),
            (self.K > 0, "strike must be positive"),
            (self.S0 > 0, "spot must be positive"),
            (self.v0 > 0, "initial variance must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)


@dataclass(frozen=True)
class EuropeanCall:
    params: HestonParams
    blend: float = 0.5  # weight of the v_max value in the x_min condition

    def __post_init__(self):
        if not 0.0 <= self.blend <= 1.0:
            raise ConfigurationError("blend weight must lie in [0, 1]")


@dataclass(frozen=True)
class ButterflySpread:
    params: HestonParams
    k1: float
    k2: float
    k3: float

    def __post_init__(self):
        if not self.k1 < self.k3:
            raise ConfigurationError("butterfly requires K1 < K3")
        if abs(self.k2 - 0.5 * (self.k1 + self.k3)) > 1e-12:
            raise ConfigurationError("butterfly requires K2 = (K1 + K3) / 2")


@dataclass(frozen=True)
class DigitalCall:
    params: HestonParams


OptionSpec = EuropeanCall | ButterflySpread | DigitalCall


def preset(name):
    """Named option setups mirroring the three experiment parameter sets."""
    if name == "european-call":
        params = HestonParams(
            kappa=2.5, theta=0.06, sigma=0.4, rho=-0.9,
            r_d=0.0198, r_f=0.0, T=1.0, K=1.0, S0=1.0, v0=0.1683,
        )
        return EuropeanCall(params)
    if name == "butterfly":
        params = HestonParams(
            kappa=2.5, theta=0.06, sigma=0.4, rho=0.55,
            r_d=0.0198, r_f=0.0, T=1.0, K=0.5, S0=1.0, v0=0.1683,
        )
        return ButterflySpread(params, k1=0.1, k2=0.5, k3=0.9)
    if name == "digital":
        params = HestonParams(
            kappa=2.5, theta=0.06, sigma=0.5, rho=-0.1,
            r_d=math.log(1.052), r_f=math.log(1.048),
            T=0.25, K=1.0, S0=1.0, v0=0.05225,
        )
        return DigitalCall(params)
    raise ConfigurationError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def normal_cdf(y):
    """Standard normal CDF via the complementary error function."""
    y = np.asarray(y, dtype=float)
    out = 0.5 * special.erfc(-y / np.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def coefficients(params):
    """Diffusion matrix, convection field and reaction rate of the PDE.

    A(v) = (v/2) [[sigma^2, rho sigma], [rho sigma, 1]],
    b(v) = v (kappa, 1/2) + (-kappa theta + sigma^2/2,
                             -(r_d - r_f) + rho sigma / 2);
    both are independent of x, and A degenerates linearly as v -> 0.
    """
    kappa, theta, sig, rho = params.kappa, params.theta, params.sigma, params.rho
    drift = params.r_d - params.r_f

    def diffusion(v, x):
        v = np.asarray(v, dtype=float)
        a = np.empty(v.shape + (2, 2))
        a[..., 0, 0] = 0.5 * sig * sig * v
        a[..., 0, 1] = 0.5 * rho * sig * v
        a[..., 1, 0] = a[..., 0, 1]
        a[..., 1, 1] = 0.5 * v
        return a

    def convection(v, x):
        v = np.asarray(v, dtype=float)
        b = np.empty(v.shape + (2,))
        b[..., 0] = kappa * v - kappa * theta + 0.5 * sig * sig
        b[..., 1] = 0.5 * v - drift + 0.5 * rho * sig
        return b

    return CoefficientField(
        diffusion=diffusion, convection=convection, reaction=params.r_d
    )


def payoff(option, v, x):
    """Initial data g as a function of (v, x); independent of v throughout."""
    x = np.asarray(x, dtype=float)
    p = option.params
    if isinstance(option, EuropeanCall):
        out = np.maximum(p.K * np.exp(x) - p.K, 0.0)
    elif isinstance(option, ButterflySpread):
        s = option.k2 * np.exp(x)
        out = (
            np.maximum(s - option.k1, 0.0)
            - 2.0 * np.maximum(s - option.k2, 0.0)
            + np.maximum(s - option.k3, 0.0)
        )
    elif isinstance(option, DigitalCall):
        out = np.where(p.K * np.exp(x) > p.K, 1.0, 0.0)
    else:
        raise ConfigurationError(f"unsupported option {type(option).__name__}")
    return float(out) if out.ndim == 0 else out


def payoff_function(option):
    return lambda v, x: payoff(option, v, x)


def bc_tags(option):
    """Dirichlet/Neumann layout per rectangle side for each option type."""
    if isinstance(option, EuropeanCall):
        return {
            "v_min": "dirichlet", "v_max": "dirichlet",
            "x_min": "dirichlet", "x_max": "neumann",
        }
    return {
        "v_min": "neumann", "v_max": "neumann",
        "x_min": "dirichlet", "x_max": "dirichlet",
    }


def _european_vmin_value(params, tau, x, v_lo, v_hi, alt_bc):
    """Small-variance Dirichlet value at the lower variance boundary.

    The default is the constant-variance Black-Scholes value with variance
    v_lo in both d-terms and discounting e^{-r_d tau}; `alt_bc` switches to
    the variant that pairs d- with the upper variance bound and flips the
    discounting sign. The default is the form that actually reproduces
    semi-analytic prices; the variant is kept for comparison runs.
    """
    x = np.asarray(x, dtype=float)
    if tau <= 0.0:
        return np.maximum(params.K * np.exp(x) - params.K, 0.0)
    drift = params.r_d - params.r_f
    d_plus = (x + (drift + 0.5 * v_lo) * tau) / np.sqrt(v_lo * tau)
    if alt_bc:
        d_minus = (x + (drift - 0.5 * v_hi) * tau) / np.sqrt(v_hi * tau)
        discount = np.exp(params.r_d * tau)
    else:
        d_minus = (x + (drift - 0.5 * v_lo) * tau) / np.sqrt(v_lo * tau)
        discount = np.exp(-params.r_d * tau)
    return params.K * np.exp(x - params.r_f * tau) * normal_cdf(d_plus) - (
        params.K * discount * normal_cdf(d_minus)
    )


def _side_name(side):
    if isinstance(side, str):
        if side not in SIDE_NAMES:
            raise ConfigurationError(f"unknown side {side!r}")
        return side
    return SIDE_NAMES[int(side)]


def boundary_value(option, side, kind, tau, v, x, domain, alt_bc=False):
    """Boundary data of the option problem on one rectangle side.

    European call: Dirichlet on v_min, v_max and x_min (blended between the
    two v-boundary values), Neumann conormal flux (1/2) v K e^{x - r_f tau}
    on x_max. Butterfly: homogeneous everywhere (Dirichlet in x, Neumann in
    v). Digital: as butterfly except the Dirichlet value e^{x_max - r_f tau}
    on x_max.
    """
    side = _side_name(side)
    expected = bc_tags(option)[side]
    if kind != expected:
        raise ConfigurationError(
            f"{type(option).__name__} prescribes {expected} data on {side}"
        )
    p = option.params
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)

    if isinstance(option, ButterflySpread):
        out = np.zeros(np.broadcast(v, x).shape)
    elif isinstance(option, DigitalCall):
        if side == "x_max":
            out = np.exp(x - p.r_f * tau) * np.ones(np.broadcast(v, x).shape)
        else:
            out = np.zeros(np.broadcast(v, x).shape)
    else:  # EuropeanCall
        if side == "v_min":
            out = _european_vmin_value(p, tau, x, domain.v_min, domain.v_max, alt_bc)
        elif side == "v_max":
            out = p.K * np.exp(x - p.r_f * tau) * np.ones(np.broadcast(v, x).shape)
        elif side == "x_min":
            hi = p.K * np.exp(x - p.r_f * tau)
            lo = _european_vmin_value(p, tau, x, domain.v_min, domain.v_max, alt_bc)
            out = option.blend * hi + (1.0 - option.blend) * lo
        else:  # Neumann flux on x_max
            out = 0.5 * v * p.K * np.exp(x - p.r_f * tau)
    return float(out) if out.ndim == 0 else out


def boundary_data(option, domain, alt_bc=False):
    """BoundaryData closures for the assembler."""
    from .assembly import BoundaryData

    def dirichlet(side, t, v, x):
        return boundary_value(option, side, "dirichlet", t, v, x, domain, alt_bc)

    def neumann(side, t, v, x):
        return boundary_value(option, side, "neumann", t, v, x, domain, alt_bc)

    return BoundaryData(dirichlet=dirichlet, neumann=neumann)


def log_transform(params, S, t):
    """(x, tau) = (log(S / K_ref), T - t); inverse of `inverse_log_transform`."""
    S = np.asarray(S, dtype=float)
    if np.any(S <= 0):
        raise ConfigurationError("spot must be positive")
    x = np.log(S / params.K)
    tau = params.T - t
    return (float(x) if x.ndim == 0 else x), tau


def inverse_log_transform(params, x, tau):
    x = np.asarray(x, dtype=float)
    S = params.K * np.exp(x)
    t = params.T - tau
    return (float(S) if S.ndim == 0 else S), t
