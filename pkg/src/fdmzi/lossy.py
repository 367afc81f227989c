"""Lossy frequency-domain MZI driven by pump-power-dependent conversion.

Losses are modelled by attenuators placed before and after lossless
beamsplitters.  Pump power is in mW throughout; conversion rates in 1/mW.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .mzi import DegenerateFringeWarning, FringeResult, fringe_from_split, visibility_ratio


@dataclass(frozen=True)
class ConversionCurve:
    """R(P) = amplitude * sin^2(sqrt(rate * P))."""

    amplitude: float
    rate: float

    def __post_init__(self):
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError(f"amplitude must lie in (0, 1], got {self.amplitude}")
        if not (self.rate > 0.0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate}")


def conversion_efficiency(curve: ConversionCurve, power):
    p = np.asarray(power, dtype=float)
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise ValueError("pump power must be finite and non-negative")
    r = curve.amplitude * np.sin(np.sqrt(curve.rate * p)) ** 2
    return float(r) if r.ndim == 0 else r


def _transmittance(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class LossBudget:
    """Transmittances, arm-ratio factors and conversion curves of a lossy MZI.

    ``t_p`` scales the pump power reaching the second converter.  ``x1``/``x2``
    are upper-to-lower transmittance ratios of the loss behind each converter.
    ``t_u_out``/``t_l_out`` are output-coupling transmittances used by the
    noise model only.
    """

    t_l_in: float
    t_u: float
    t_l: float
    t_p: float
    x1: float
    x2: float
    t_u_out: float
    t_l_out: float
    curve1: ConversionCurve
    curve2: ConversionCurve
    x1_uncertainty: float = 0.0
    x2_uncertainty: float = 0.0

    def __post_init__(self):
        for name in ("t_l_in", "t_u", "t_l", "t_p", "t_u_out", "t_l_out"):
            _transmittance(name, getattr(self, name))
        for name in ("x1", "x2"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and positive, got {v}")
        if self.x1_uncertainty < 0 or self.x2_uncertainty < 0:
            raise ValueError("uncertainties must be non-negative")

    @classmethod
    def lossless(cls, curve1: ConversionCurve, curve2: ConversionCurve | None = None) -> "LossBudget":
        return cls(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, curve1, curve2 or curve1)


PAPER_PARAMETERS = LossBudget(
    t_l_in=0.64,
    t_u=0.63,
    t_l=0.60,
    t_p=0.54,
    x1=1.4,
    x2=1.0,
    t_u_out=0.71,
    t_l_out=0.13,
    curve1=ConversionCurve(0.94, 0.0042),
    curve2=ConversionCurve(0.58, 0.017),
    x1_uncertainty=0.1,
    x2_uncertainty=0.1,
)

# Acceptance bandwidths of the two converters (GHz, FWHM); documentation only.
ACCEPTANCE_BW_GHZ = (140.0, 70.0)


def split_ratios(p1, b: LossBudget):
    """Lossless (R1, T1, R2, T2) of both converters at first-converter pump ``p1``."""
    r1 = np.asarray(conversion_efficiency(b.curve1, p1))
    r2 = np.asarray(conversion_efficiency(b.curve2, b.t_p * np.asarray(p1, dtype=float)))
    return r1, 1.0 - r1, r2, 1.0 - r2


def effective_split(r1, t1, r2, t2, b: LossBudget):
    """Loss-substituted (R1, T1, R2, T2) for the upper and the lower output.

    Each entry is an ``(upper, lower)`` pair.  The upper output sees
    ``T2*T_U`` and ``R2*T_L*x2``; the lower output ``T2*T_L`` and ``R2*T_U/x2``.
    """
    r1e = r1 * b.t_l_in * b.x1
    t1e = t1 * b.t_l_in
    t2e = (t2 * b.t_u, t2 * b.t_l)
    r2e = (r2 * b.t_l * b.x2, r2 * b.t_u / b.x2)
    return (r1e, r1e), (t1e, t1e), r2e, t2e


def upper_terms(r1, t1, r2, t2, b: LossBudget):
    """Numerator and denominator of the lossy upper-mode visibility."""
    a = r1 * t2 * b.t_u * b.x1
    c = t1 * r2 * b.t_l * b.x2
    return 2.0 * np.sqrt(a * c), a + c


def lower_terms(r1, t1, r2, t2, b: LossBudget):
    a = r1 * r2 * b.t_u * b.x1 / b.x2
    c = t1 * t2 * b.t_l
    return 2.0 * np.sqrt(a * c), a + c


def _finish(num, den):
    v, deg = visibility_ratio(num, den)
    if np.any(deg):
        warnings.warn("degenerate fringe: visibility reported as 0", DegenerateFringeWarning,
                      stacklevel=3)
    return v


def lossy_visibility_u(p1, b: LossBudget):
    return _finish(*upper_terms(*split_ratios(p1, b), b))


def lossy_visibility_l(p1, b: LossBudget):
    return _finish(*lower_terms(*split_ratios(p1, b), b))


def lossy_fringe(p1: float, b: LossBudget, phases, n_in: float = 1.0) -> FringeResult:
    """Fringe of the lossy MZI.

    ``n_in`` is the photon number entering the first attenuator; the returned
    counts are those reaching the detectors.
    """
    r1, t1, r2, t2 = (float(v) for v in split_ratios(p1, b))
    return fringe_from_split(*effective_split(r1, t1, r2, t2, b), phases, n_in)


class PowerRow(NamedTuple):
    power_mw: float
    v_upper: float
    v_lower: float


def visibility_vs_power(b: LossBudget, powers) -> list[PowerRow]:
    p = np.atleast_1d(np.asarray(powers, dtype=float))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFringeWarning)
        vu = np.atleast_1d(lossy_visibility_u(p, b))
        vl = np.atleast_1d(lossy_visibility_l(p, b))
    return [PowerRow(float(a), float(u), float(v)) for a, u, v in zip(p, vu, vl)]


@dataclass(frozen=True)
class OptimumResult:
    power_mw: float
    v_upper: float
    v_lower: float
    degenerate: bool = False


def _min_visibility(p, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFringeWarning)
        return np.minimum(lossy_visibility_u(p, b), lossy_visibility_l(p, b))


def optimal_pump_power(b: LossBudget, lo: float = 0.0, hi: float = 400.0,
                       coarse_points: int = 401, xatol: float = 0.01) -> OptimumResult:
    """Pump power maximizing ``min(v_upper, v_lower)`` on ``[lo, hi]``.

    A coarse scan brackets the global maximum, then a bounded scalar search
    refines it to ``xatol`` mW.
    """
    if not (hi >= lo >= 0.0):
        raise ValueError("need 0 <= lo <= hi")
    if hi == lo:
        p = lo
    else:
        grid = np.linspace(lo, hi, coarse_points)
        vals = _min_visibility(grid, b)
        if float(vals.max() - vals.min()) < 1e-12:
            v = float(vals[0])
            return OptimumResult(float(lo), v, v, degenerate=True)
        k = int(np.argmax(vals))
        a, c = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(lambda x: -_min_visibility(x, b), bounds=(a, c), method="bounded",
                              options={"xatol": xatol})
        p = float(res.x) if -res.fun >= vals[k] else float(grid[k])
    vu = float(np.asarray(_finish_quiet(upper_terms, p, b)))
    vl = float(np.asarray(_finish_quiet(lower_terms, p, b)))
    return OptimumResult(p, vu, vl)


def _finish_quiet(terms, p, b):
    return visibility_ratio(*terms(*split_ratios(p, b), b))[0]


def sensitivity_corners(p1: float, b: LossBudget) -> list[tuple[float, float, float, float]]:
    """Visibilities at the four (x1 +/- dx1, x2 +/- dx2) corners.

    Rows are ``(x1, x2, v_upper, v_lower)``.
    """
    rows = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            x1 = b.x1 + s1 * b.x1_uncertainty
            x2 = b.x2 + s2 * b.x2_uncertainty
            corner = replace(b, x1=x1, x2=x2)
            rows.append((x1, x2, float(lossy_visibility_u(p1, corner)),
                         float(lossy_visibility_l(p1, corner))))
    return rows
