"""Shared parameter factories for the test suite.

Two recurring parameter sets: a broad-line strong-coupling pair used
by the map tests (kerr per magnon of order 2pi x 10 nHz) and a
narrow-line pair with larger Kerr used by the sweep and bistability
tests. Rates are rad/us throughout; **over replaces any field.
"""

from magpol.model import SystemParams, TWO_PI


def broadline_params(**over) -> SystemParams:
    kw = dict(kappa=TWO_PI * 1.5, gamma=TWO_PI * 16.5, g=TWO_PI * 30.0,
              kerr=TWO_PI * 9.8e-15)
    kw.update(over)
    return SystemParams(**kw)


def narrowline_params(**over) -> SystemParams:
    kw = dict(gamma=TWO_PI * 10.3, g=TWO_PI * 25.0, kerr=TWO_PI * 3.2e-12,
              gamma_sat=TWO_PI * 0.8e-12, gain=TWO_PI * 15.45)
    kw.update(over)
    return SystemParams(**kw)
