"""Equations of motion, drive conversion, and amplitude rescaling."""

import math

import numpy as np
import pytest

from _cases import broadline_params, narrowline_params
from magpol.model import (TWO_PI, DriveSpec, ModeState, SystemParams,
                          eta_from_power, power_from_drive, rescale,
                          rhs_active, rhs_passive)

# Frozen conversion at P = 1 uW, omega_d = 2pi x 3 GHz, critical
# coupling kappa_ext = kappa/2 with kappa = 2pi x 1.5 MHz.
FLUX_PER_US = 503063393522.28723
ETA_1UW = 1539685.160047129
N0_1UW = 106753367690.20717


def drive_port_params(**over):
    kw = dict(kappa_ext=TWO_PI * 0.75, omega_d=TWO_PI * 3.0e3)
    kw.update(over)
    return broadline_params(**kw)


def test_quiescent_system_stays_quiescent():
    da, dm = rhs_passive(ModeState(a=0j, m=0j), broadline_params(),
                         DriveSpec(eta=0.0))
    assert da == 0 and dm == 0


def test_drive_enters_photon_mode_only():
    da, dm = rhs_passive(ModeState(a=0j, m=0j), broadline_params(),
                         DriveSpec(eta=3.5))
    assert da == 3.5 + 0j
    assert dm == 0


def test_decoupled_linear_cavity():
    p = broadline_params(g=0.0, kerr=0.0, delta_c=TWO_PI * 2.0)
    a = 0.3 - 0.7j
    da, dm = rhs_passive(ModeState(a=a, m=0j), p, DriveSpec(eta=1.1))
    assert da == pytest.approx(-(0.5 * p.kappa + 1j * p.delta_c) * a + 1.1)
    assert dm == 0


def test_passive_kerr_term():
    p = broadline_params(kerr=TWO_PI * 0.25, delta_m=TWO_PI * 4.0)
    m = 1.5 + 0.5j
    _, dm = rhs_passive(ModeState(a=0j, m=m), p, DriveSpec(eta=0.0))
    shift = p.delta_m + p.kerr * abs(m) ** 2
    assert dm == pytest.approx(-(0.5 * p.gamma + 1j * shift) * m)


def test_vdp_limit_cycle_amplitude_is_stationary():
    p = narrowline_params(g=0.0)
    a = math.sqrt(p.gain_eff / p.gamma_sat) * np.exp(0.37j)
    da, _ = rhs_active(ModeState(a=a, m=0j), p)
    assert abs(da) < 1e-9 * abs(a) * p.rate_scale()


def test_coupling_pulls_photon_mode():
    p = narrowline_params()
    m0 = 0.8 - 0.2j
    da, _ = rhs_active(ModeState(a=0j, m=m0), p)
    assert da == pytest.approx(-1j * p.g * m0)


def test_gain_absorbed_flag():
    raw = narrowline_params(kappa=TWO_PI * 1.5, gain_absorbed=False)
    assert raw.gain_eff == pytest.approx(raw.gain - 0.5 * raw.kappa)
    eff = narrowline_params()
    assert eff.gain_eff == eff.gain


def test_non_finite_state_rejected():
    p = broadline_params()
    with pytest.raises(OverflowError):
        rhs_passive(ModeState(a=complex(np.inf, 0), m=0j), p,
                    DriveSpec(eta=0.0))
    with pytest.raises(OverflowError):
        rhs_active(ModeState(a=0j, m=complex(np.nan, 0)),
                   narrowline_params())


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(kappa=-1.0)
    with pytest.raises(ValueError):
        SystemParams(gamma=np.inf)
    with pytest.raises(ValueError):
        SystemParams(g=-2.0)
    with pytest.raises(ValueError):
        SystemParams(kappa=1.0, kappa_ext=2.0)
    with pytest.raises(ValueError):
        DriveSpec(eta=-1.0)


def test_power_conversion_frozen_values():
    drive = eta_from_power(1e-6, drive_port_params())
    assert drive.s_in ** 2 == pytest.approx(FLUX_PER_US, rel=1e-12)
    assert drive.eta == pytest.approx(ETA_1UW, rel=1e-12)
    kappa = TWO_PI * 1.5
    n0 = drive.eta ** 2 / (0.5 * kappa) ** 2
    assert n0 == pytest.approx(N0_1UW, rel=1e-12)


def test_power_conversion_edge_cases():
    p = drive_port_params()
    assert eta_from_power(0.0, p).eta == 0.0
    d1 = eta_from_power(1e-6, p)
    d2 = eta_from_power(2e-6, p)
    assert d2.eta == pytest.approx(math.sqrt(2.0) * d1.eta, rel=1e-14)
    with pytest.raises(ValueError):
        eta_from_power(-1e-6, p)
    with pytest.raises(ValueError):
        eta_from_power(1e-6, broadline_params())  # no port configured


def test_power_round_trip():
    p = drive_port_params()
    rng = np.random.default_rng(11)
    for _ in range(20):
        power = 10.0 ** rng.uniform(-9, -3)
        drive = eta_from_power(power, p)
        assert power_from_drive(drive, p) == pytest.approx(power, rel=1e-12)


def test_rescale_identity_and_arithmetic():
    p = broadline_params()
    st = ModeState(a=1.0 + 2.0j, m=-0.5j)
    st1, p1, _ = rescale(st, p, 1.0)
    assert st1.a == st.a and p1 == p
    _, p2, _ = rescale(None, p, 1e3)
    assert p2.kerr == pytest.approx(TWO_PI * 9.8e-9, rel=1e-12)
    with pytest.raises(ValueError):
        rescale(None, p, 0.0)
    with pytest.raises(ValueError):
        rescale(None, p, -2.0)


def test_rescaled_rhs_is_original_over_s():
    """rhs of the rescaled system equals 1/s times the original rhs."""
    rng = np.random.default_rng(23)
    for _ in range(40):
        active = rng.random() < 0.5
        if active:
            p = SystemParams(
                gamma=TWO_PI * rng.uniform(2, 30),
                g=TWO_PI * rng.uniform(0, 40),
                kerr=TWO_PI * rng.uniform(-1, 1) * 10.0 ** rng.uniform(-13, -11),
                delta_m=TWO_PI * rng.uniform(-100, 100),
                gain=TWO_PI * rng.uniform(0.5, 30),
                gamma_sat=TWO_PI * 10.0 ** rng.uniform(-13, -11))
            drive = None
        else:
            p = SystemParams(
                kappa=TWO_PI * rng.uniform(0.5, 5),
                gamma=TWO_PI * rng.uniform(2, 30),
                g=TWO_PI * rng.uniform(0, 40),
                kerr=TWO_PI * rng.uniform(-1, 1) * 10.0 ** rng.uniform(-15, -12),
                delta_c=TWO_PI * rng.uniform(-100, 100),
                delta_m=TWO_PI * rng.uniform(-100, 100))
            drive = DriveSpec(eta=10.0 ** rng.uniform(3, 8))
        amp = 10.0 ** rng.uniform(2, 7)
        st = ModeState(a=amp * complex(rng.normal(), rng.normal()),
                       m=amp * complex(rng.normal(), rng.normal()))
        s = 10.0 ** rng.uniform(-3, 6)
        st_s, p_s, drive_s = rescale(st, p, s, drive)
        if active:
            ref = rhs_active(st, p)
            got = rhs_active(st_s, p_s)
        else:
            ref = rhs_passive(st, p, drive)
            got = rhs_passive(st_s, p_s, drive_s)
        for r, q in zip(ref, got):
            assert q == pytest.approx(r / s, rel=1e-12, abs=1e-300)


def test_rate_scale_covers_dominant_rate():
    p = broadline_params(delta_m=TWO_PI * 500.0)
    assert p.rate_scale() == TWO_PI * 500.0
    assert SystemParams().rate_scale() > 0
