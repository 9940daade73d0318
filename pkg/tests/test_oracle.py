import numpy as np
import pytest

from hestonrom import HestonParams, normal_cdf, reference_price_heston_cf
from hestonrom.heston import preset
from hestonrom.oracle import _log_price_cf


def test_black_scholes_limit():
    # sigma -> 0 with v0 = theta freezes the variance: price = 2 Phi(s/2) - 1
    params = HestonParams(kappa=2.5, theta=0.06, sigma=1e-3, rho=0.0,
                          r_d=0.0, r_f=0.0, T=1.0, K=1.0, S0=1.0, v0=0.06)
    bs = 2.0 * normal_cdf(np.sqrt(0.06) / 2.0) - 1.0
    assert bs == pytest.approx(0.097476, abs=1e-6)
    assert reference_price_heston_cf(params) == pytest.approx(bs, abs=2e-5)


def test_deep_itm_parity_limit():
    base = preset("european-call").params
    params = HestonParams(kappa=base.kappa, theta=base.theta, sigma=base.sigma,
                          rho=base.rho, r_d=0.0198, r_f=0.01, T=1.0,
                          K=1.0, S0=100.0, v0=base.v0)
    intrinsic = params.S0 * np.exp(-params.r_f * params.T) - params.K * np.exp(
        -params.r_d * params.T)
    price = reference_price_heston_cf(params)
    assert price == pytest.approx(intrinsic, rel=1e-6)


def test_cf_normalization_and_forward():
    params = preset("european-call").params
    assert _log_price_cf(0.0, params) == pytest.approx(1.0 + 0.0j, abs=1e-12)
    fw = _log_price_cf(-1j, params).real
    assert fw == pytest.approx(
        params.S0 * np.exp((params.r_d - params.r_f) * params.T), rel=1e-10)


def test_cf_mean_matches_closed_form():
    p = preset("european-call").params
    h = 1e-5
    mean_cf = (np.log(_log_price_cf(h, p)) - np.log(_log_price_cf(-h, p))).imag
    mean_cf /= 2.0 * h
    mean_exact = (
        np.log(p.S0)
        + (p.r_d - p.r_f) * p.T
        - 0.5 * (p.theta * p.T + (p.v0 - p.theta)
                 * (1 - np.exp(-p.kappa * p.T)) / p.kappa)
    )
    assert mean_cf == pytest.approx(mean_exact, abs=1e-8)


def test_table1_reference_price_regression():
    # frozen value cross-validated against a Monte Carlo run of the SDE
    # (full-truncation Euler, 8e5 effective paths: 0.129888 +- 0.000198)
    price = reference_price_heston_cf(preset("european-call").params)
    assert price == pytest.approx(0.1298374623, abs=1e-8)


def test_price_increasing_in_spot():
    base = preset("european-call").params
    prices = []
    for s0 in (0.8, 1.0, 1.3):
        params = HestonParams(**{**base.__dict__, "S0": s0})
        prices.append(reference_price_heston_cf(params))
    assert prices[0] < prices[1] < prices[2]
