"""Lossless frequency-domain beamsplitter and Mach-Zehnder algebra.

Amplitude vectors are always ordered ``(upper, lower)``: index 0 is the
upper-frequency mode, index 1 the lower-frequency mode.  Matrices act on
annihilation operators in the Heisenberg picture, ``a_out = M @ a_in``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class DegenerateFringeWarning(UserWarning):
    """Visibility requested for a fringe whose max + min is zero (0/0)."""


class VisibilityError(ValueError):
    """Phase grid too short to extract a visibility."""


def wrap_phase(phi):
    """Reduce an angle (or array of angles) to the interval (-pi, pi]."""
    w = math.pi - np.mod(math.pi - np.asarray(phi, dtype=float), TWO_PI)
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True)
class BeamSplitterParams:
    """One frequency-domain beamsplitter: conversion probability and pump phase."""

    reflectance: float
    pump_phase: float = 0.0

    def __post_init__(self):
        r = float(self.reflectance)
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"reflectance must lie in [0, 1], got {r}")
        if not math.isfinite(self.pump_phase):
            raise ValueError("pump_phase must be finite")
        object.__setattr__(self, "reflectance", r)
        object.__setattr__(self, "pump_phase", wrap_phase(self.pump_phase))

    @property
    def transmittance(self) -> float:
        return 1.0 - self.reflectance


@dataclass(frozen=True)
class MziConfig:
    bs1: BeamSplitterParams
    bs2: BeamSplitterParams
    phase_shift: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.phase_shift):
            raise ValueError("phase_shift must be finite")

    @property
    def relative_phase(self) -> float:
        """Net arm phase: pump phase 1 minus pump phase 2 minus phase shifter."""
        return wrap_phase(self.bs1.pump_phase - self.bs2.pump_phase - self.phase_shift)

    @classmethod
    def from_reflectances(cls, r1: float, r2: float, relative_phase: float = 0.0) -> "MziConfig":
        """Zero pump phases; the phase shifter carries ``-relative_phase``."""
        return cls(BeamSplitterParams(r1), BeamSplitterParams(r2), -relative_phase)

    def with_relative_phase(self, relative_phase: float) -> "MziConfig":
        shift = self.bs1.pump_phase - self.bs2.pump_phase - relative_phase
        return MziConfig(self.bs1, self.bs2, shift)


@dataclass(frozen=True)
class FringeResult:
    phases: np.ndarray
    p_upper: np.ndarray
    p_lower: np.ndarray
    v_upper: float
    v_lower: float
    degenerate_upper: bool = False
    degenerate_lower: bool = False


class Visibilities(NamedTuple):
    upper: float
    lower: float
    degenerate_upper: bool = False
    degenerate_lower: bool = False


def bs_matrix(p: BeamSplitterParams) -> np.ndarray:
    st = math.sqrt(p.transmittance)
    sr = math.sqrt(p.reflectance)
    e = np.exp(1j * p.pump_phase)
    return np.array([[st, -e * sr], [np.conj(e) * sr, st]], dtype=complex)


def phase_shift_matrix(phase_shift: float) -> np.ndarray:
    if not math.isfinite(phase_shift):
        raise ValueError("phase_shift must be finite")
    return np.diag([1.0, np.exp(1j * phase_shift)]).astype(complex)


def mzi_transfer(cfg: MziConfig) -> np.ndarray:
    return bs_matrix(cfg.bs2) @ phase_shift_matrix(cfg.phase_shift) @ bs_matrix(cfg.bs1)


def _fringe_values(r1, r2, dphi, n_in):
    t1, t2 = 1.0 - r1, 1.0 - r2
    dphi = np.asarray(dphi, dtype=float)
    p_u = np.abs(np.sqrt(r1 * t2) + np.exp(-1j * dphi) * np.sqrt(t1 * r2)) ** 2 * n_in
    p_l = np.abs(np.sqrt(t1 * t2) - np.exp(1j * dphi) * np.sqrt(r1 * r2)) ** 2 * n_in
    return p_u, p_l


def output_photon_numbers(cfg: MziConfig, n_in: float = 1.0) -> tuple[float, float]:
    """Mean photon numbers in (upper, lower) for ``n_in`` photons injected in the lower mode."""
    if n_in < 0:
        raise ValueError(f"n_in must be non-negative, got {n_in}")
    p_u, p_l = _fringe_values(cfg.bs1.reflectance, cfg.bs2.reflectance, cfg.relative_phase, n_in)
    return float(p_u), float(p_l)


def visibility_ratio(numerator, denominator):
    """Return ``numerator / denominator`` with 0 where the denominator vanishes.

    Works on scalars and arrays.  The second return value is a boolean (array)
    marking degenerate entries.
    """
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    degenerate = ~(den > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(degenerate, 0.0, num / np.where(degenerate, 1.0, den))
    v = np.clip(v, 0.0, 1.0)
    if v.ndim == 0:
        return float(v), bool(degenerate)
    return v, degenerate


def sampled_visibility(samples: np.ndarray) -> tuple[float, bool]:
    """(max - min)/(max + min) of a sampled fringe; ``(0, True)`` when max + min == 0."""
    hi = float(np.max(samples))
    lo = float(np.min(samples))
    return visibility_ratio(hi - lo, hi + lo)


def covers_full_period(grid: np.ndarray) -> bool:
    """True if a sorted grid spans 2*pi, counting one trailing step for half-open grids."""
    if grid.size < 2:
        return False
    span = float(grid.max() - grid.min())
    step = span / (grid.size - 1)
    return span + step >= TWO_PI * (1.0 - 1e-9)


def _check_grid(phases) -> np.ndarray:
    grid = np.asarray(phases, dtype=float).ravel()
    if grid.size == 0:
        raise VisibilityError("phase grid is empty")
    if not np.all(np.isfinite(grid)):
        raise VisibilityError("phase grid contains non-finite values")
    if not covers_full_period(grid):
        raise VisibilityError("phase grid spans less than 2*pi; visibility would be unreliable")
    return grid


def fringe_from_split(r1, t1, r2, t2, phases, n_in: float = 1.0) -> FringeResult:
    """Sweep the relative phase for arbitrary (possibly lossy) effective R/T values.

    The upper output uses the pair ``(r1, t2)`` / ``(t1, r2)``; the lower output
    uses ``(t1, t2)`` / ``(r1, r2)``.  Each argument may be a 2-tuple to give
    separate values for the upper and lower output paths.
    """
    grid = _check_grid(phases)
    if n_in < 0:
        raise ValueError(f"n_in must be non-negative, got {n_in}")

    def pick(v, k):
        return v[k] if isinstance(v, tuple) else v

    p_u = np.abs(np.sqrt(pick(r1, 0) * pick(t2, 0))
                 + np.exp(-1j * grid) * np.sqrt(pick(t1, 0) * pick(r2, 0))) ** 2 * n_in
    p_l = np.abs(np.sqrt(pick(t1, 1) * pick(t2, 1))
                 - np.exp(1j * grid) * np.sqrt(pick(r1, 1) * pick(r2, 1))) ** 2 * n_in
    v_u, deg_u = sampled_visibility(p_u)
    v_l, deg_l = sampled_visibility(p_l)
    return FringeResult(grid, p_u, p_l, v_u, v_l, deg_u, deg_l)


def fringe_sweep(cfg: MziConfig, phases, n_in: float = 1.0) -> FringeResult:
    """Sample both outputs over a grid of relative phases.

    Only the reflectances of ``cfg`` matter; its own phases are replaced by
    each grid value.  Visibilities come from the sampled extrema.
    """
    r1, r2 = cfg.bs1.reflectance, cfg.bs2.reflectance
    return fringe_from_split(r1, 1.0 - r1, r2, 1.0 - r2, phases, n_in)


def visibility_closed_form(r1: float, r2: float) -> Visibilities:
    for r in (r1, r2):
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"reflectance must lie in [0, 1], got {r}")
    t1, t2 = 1.0 - r1, 1.0 - r2
    num = 2.0 * math.sqrt(r1 * t1 * r2 * t2)
    v_u, deg_u = visibility_ratio(num, r1 * t2 + t1 * r2)
    v_l, deg_l = visibility_ratio(num, r1 * r2 + t1 * t2)
    if deg_u or deg_l:
        warnings.warn("degenerate fringe: visibility reported as 0", DegenerateFringeWarning,
                      stacklevel=2)
    return Visibilities(v_u, v_l, deg_u, deg_l)
