"""Background photons, filtering and single-photon-regime visibility.

Bandwidths are FWHM values in GHz; noise rates are detected counts per second
as functions of the first-converter pump power in mW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect

from .lossy import LossBudget, lower_terms, split_ratios, upper_terms
from .mzi import visibility_ratio

LN2 = math.log(2.0)

# Fraction of a transform-limited Gaussian pulse inside the measurement window.
WINDOW_COLLECTION_EFFICIENCY = 0.98
# Detector quantum efficiencies (upper, lower); metadata, rates are used as measured.
DETECTOR_EFFICIENCY = {"U": 0.3, "L": 0.6}

RATIO_BRACKET = (1.0 + 1e-6, 1e3)


@dataclass(frozen=True)
class NoiseFits:
    """Polynomial background-rate fits, coefficients highest power first."""

    d_u1: tuple[float, float, float]
    d_u2: tuple[float, float, float]
    d_l: tuple[float, float]
    ref_bw_u: float
    ref_bw_l: float

    def __post_init__(self):
        if len(self.d_u1) != 3 or len(self.d_u2) != 3 or len(self.d_l) != 2:
            raise ValueError("d_u1/d_u2 need 3 coefficients, d_l needs 2")
        if self.ref_bw_u <= 0 or self.ref_bw_l <= 0:
            raise ValueError("reference bandwidths must be positive")
        grid = np.linspace(0.0, 400.0, 401)
        for which in ("U1", "U2", "L"):
            if np.any(noise_rate(self, which, grid) < 0):
                raise ValueError(f"noise rate {which} negative within 0-400 mW")

    def scaled(self, factor: float) -> "NoiseFits":
        """All three rates multiplied by ``factor``."""
        return replace(
            self,
            d_u1=tuple(factor * c for c in self.d_u1),
            d_u2=tuple(factor * c for c in self.d_u2),
            d_l=tuple(factor * c for c in self.d_l),
        )


@dataclass(frozen=True)
class FilterScenario:
    input_bw: float
    filter_bw_u: float
    filter_bw_l: float
    mean_photon: float

    def __post_init__(self):
        if not self.input_bw > 0:
            raise ValueError("input bandwidth must be positive")
        if not (self.filter_bw_u > self.input_bw and self.filter_bw_l > self.input_bw):
            raise ValueError("filter bandwidths must exceed the input bandwidth")
        if not self.mean_photon > 0:
            raise ValueError(f"mean photon number must be positive, got {self.mean_photon}")

    @classmethod
    def from_ratios(cls, input_bw: float, ratio_u: float, ratio_l: float | None = None,
                    mean_photon: float = 1.0) -> "FilterScenario":
        ratio_l = ratio_u if ratio_l is None else ratio_l
        return cls(input_bw, ratio_u * input_bw, ratio_l * input_bw, mean_photon)

    def ratio(self, mode: str) -> float:
        return (self.filter_bw_u if _mode(mode) == "U" else self.filter_bw_l) / self.input_bw


def _mode(mode: str) -> str:
    m = mode.upper()
    if m not in ("U", "L"):
        raise ValueError(f"mode must be 'U' or 'L', got {mode!r}")
    return m


def _check_power(p1):
    p = np.asarray(p1, dtype=float)
    if np.any(p < 0) or np.any(~np.isfinite(p)):
        raise ValueError("pump power must be finite and non-negative")
    return p


def noise_rate(fits: NoiseFits, which: str, p1):
    """Background count rate (counts/s) of curve ``'U1'``, ``'U2'`` or ``'L'``."""
    coeffs = {"U1": fits.d_u1, "U2": fits.d_u2, "L": fits.d_l}.get(which.upper())
    if coeffs is None:
        raise ValueError(f"unknown noise curve {which!r}")
    r = np.polyval(coeffs, _check_power(p1))
    return float(r) if r.ndim == 0 else r


PAPER_NOISE = NoiseFits(
    d_u1=(3.5e3, 4.6e2, 9.1e3),
    d_u2=(2.0e3, 2.9e3, 4.8e4),
    d_l=(6.2e3, 2.6e4),
    ref_bw_u=99.0,
    ref_bw_l=69.0,
)


def measurement_window(input_bw: float) -> float:
    """Twice the FWHM duration (s) of a transform-limited Gaussian pulse of bandwidth ``input_bw`` GHz."""
    if not input_bw > 0:
        raise ValueError("input bandwidth must be positive")
    return 4.0 * LN2 / (math.pi * input_bw * 1e9)


def _per_window_factor(ref_bw: float, ratio: float) -> float:
    # Rate measured through a ref_bw filter, rescaled to a ratio*input_bw
    # filter and counted over a 4ln2/(pi*input_bw) window; input_bw cancels.
    return measurement_window(ref_bw) * ratio


def background_photons(fits: NoiseFits, scenario: FilterScenario, p1, mode: str):
    """Expected background photons per measurement window in output ``mode``."""
    m = _mode(mode)
    if m == "U":
        rate = noise_rate(fits, "U1", p1) + noise_rate(fits, "U2", p1)
        return rate * _per_window_factor(fits.ref_bw_u, scenario.ratio("U"))
    return noise_rate(fits, "L", p1) * _per_window_factor(fits.ref_bw_l, scenario.ratio("L"))


def filter_transmittance(input_bw: float, filter_bw: float) -> float:
    """Fraction of a Gaussian pulse spectrum passed by a unit-peak Gaussian filter."""
    if not (input_bw > 0 and filter_bw > 0):
        raise ValueError("bandwidths must be positive")
    return 1.0 / math.sqrt(1.0 + (input_bw / filter_bw) ** 2)


def output_transmittance(budget: LossBudget, scenario: FilterScenario, mode: str) -> float:
    m = _mode(mode)
    t_out, f_bw = ((budget.t_u_out, scenario.filter_bw_u) if m == "U"
                   else (budget.t_l_out, scenario.filter_bw_l))
    return t_out * filter_transmittance(scenario.input_bw, f_bw)


def expected_visibility(scenario: FilterScenario, p1, budget: LossBudget, fits: NoiseFits,
                        mode: str):
    """Visibility with background photons for mean input photon number ``scenario.mean_photon``."""
    m = _mode(mode)
    p = _check_power(p1)
    terms = upper_terms if m == "U" else lower_terms
    num, den = terms(*split_ratios(p, budget), budget)
    n_bg = background_photons(fits, scenario, p, m)
    signal = scenario.mean_photon * budget.t_l_in * output_transmittance(budget, scenario, m)
    v, _ = visibility_ratio(num, den + n_bg / signal)
    return v


@dataclass(frozen=True)
class FilterBound:
    """Largest filter-to-input bandwidth ratio keeping visibility at ``target``."""

    ratio: float
    feasible: bool
    input_bw: float = 1.0

    @property
    def filter_bw(self) -> float:
        return self.ratio * self.input_bw


def min_filter_ratio(target: float, mean_photon: float, p1: float, budget: LossBudget,
                     fits: NoiseFits, mode: str = "U", input_bw: float = 1.0) -> FilterBound:
    """Filter bandwidth bound (as a ratio to ``input_bw``) for ``visibility >= target``.

    Visibility falls monotonically with the ratio, so filters narrower than
    the returned bound reach the target.  Returns ``feasible=False`` when even
    the narrowest admissible filter misses it, and ``ratio=inf`` when the
    target holds across the whole bracket.
    """
    m = _mode(mode)
    lo, hi = RATIO_BRACKET

    def excess(r):
        sc = FilterScenario.from_ratios(input_bw, r, r, mean_photon)
        return float(expected_visibility(sc, p1, budget, fits, m)) - target

    if excess(lo) <= 0.0:
        return FilterBound(math.nan, False, input_bw)
    if excess(hi) >= 0.0:
        return FilterBound(math.inf, True, input_bw)
    r = bisect(excess, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=500)
    return FilterBound(float(r), True, input_bw)


class RatioRow(NamedTuple):
    ratio: float
    mu: float
    v_upper: float
    v_lower: float


def visibility_vs_ratio_table(input_bw: float, mus, ratios, p1: float, budget: LossBudget,
                              fits: NoiseFits) -> list[RatioRow]:
    """Rows ``(ratio, mu, v_upper, v_lower)``, grouped by ``mu`` in the given order."""
    ratios = np.asarray(ratios, dtype=float)
    if np.any(ratios <= 1.0):
        raise ValueError("filter ratios must exceed 1")
    rows = []
    for mu in mus:
        for r in ratios:
            sc = FilterScenario.from_ratios(input_bw, float(r), float(r), float(mu))
            rows.append(RatioRow(float(r), float(mu),
                                 float(expected_visibility(sc, p1, budget, fits, "U")),
                                 float(expected_visibility(sc, p1, budget, fits, "L"))))
    return rows
