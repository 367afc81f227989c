"""Truncated two-mode Fock-space simulation of the frequency-domain MZI.

Basis states ``|n_U, n_L>`` with ``n_U + n_L <= n_max`` are grouped in blocks
of fixed total photon number ``N``; inside a block they are ordered by
``n_U = 0..N``.  The converter generator conserves ``N``, so every unitary
here is block diagonal and is exponentiated block by block.

With the generator ``theta * (e^{-i phi} a_L^dag a_U - e^{i phi} a_U^dag a_L)``
the one-photon block, reordered to ``(|1,0>, |0,1>)`` by
:meth:`BlockUnitary.single_photon_matrix`, equals :func:`fdmzi.mzi.bs_matrix`
exactly, with no extra global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

N_MAX_LIMIT = 60


def _check_n_max(n_max: int) -> int:
    n = int(n_max)
    if n != n_max or n < 1:
        raise ValueError(f"n_max must be a positive integer, got {n_max}")
    if n > N_MAX_LIMIT:
        raise ValueError(f"n_max={n} too large for dense exponentiation (limit {N_MAX_LIMIT})")
    return n


def block_offsets(n_max: int) -> np.ndarray:
    """Start index of each total-photon-number block (length ``n_max + 2``)."""
    sizes = np.arange(1, n_max + 2)
    return np.concatenate([[0], np.cumsum(sizes)])


def basis_numbers(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """``(n_U, n_L)`` of every basis state in storage order."""
    nu, nl = [], []
    for total in range(n_max + 1):
        for k in range(total + 1):
            nu.append(k)
            nl.append(total - k)
    return np.array(nu), np.array(nl)


def index(n_u: int, n_l: int) -> int:
    total = n_u + n_l
    return total * (total + 1) // 2 + n_u


@dataclass(frozen=True)
class BsGenerator:
    """Converter generator: ``theta = |chi| tau`` and pump phase ``phi``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("theta and phi must be finite")
        if self.theta < 0:
            raise ValueError("theta must be non-negative")

    @classmethod
    def from_reflectance(cls, reflectance: float, phi: float = 0.0) -> "BsGenerator":
        return cls(math.asin(math.sqrt(reflectance)), phi)


@dataclass(frozen=True)
class TwoModeState:
    amplitudes: np.ndarray
    n_max: int

    def __post_init__(self):
        n = _check_n_max(self.n_max)
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size != block_offsets(n)[-1]:
            raise ValueError("amplitude vector does not match the truncated basis size")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state not normalized (norm^2 = {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class BlockUnitary:
    """Block-diagonal unitary on the truncated space, one dense block per ``N``."""

    def __init__(self, blocks: list[np.ndarray]):
        self.blocks = blocks
        self.n_max = len(blocks) - 1

    def apply(self, state: TwoModeState) -> TwoModeState:
        if state.n_max != self.n_max:
            raise ValueError("operator and state truncations differ")
        off = block_offsets(self.n_max)
        out = np.empty_like(state.amplitudes)
        for n, blk in enumerate(self.blocks):
            out[off[n]:off[n + 1]] = blk @ state.amplitudes[off[n]:off[n + 1]]
        return TwoModeState(out, self.n_max)

    def block(self, n: int) -> np.ndarray:
        return self.blocks[n]

    def single_photon_matrix(self) -> np.ndarray:
        """One-photon block in (upper, lower) amplitude order."""
        return self.blocks[1][::-1, ::-1].copy()

    def matrix(self) -> np.ndarray:
        off = block_offsets(self.n_max)
        full = np.zeros((off[-1], off[-1]), dtype=complex)
        for n, blk in enumerate(self.blocks):
            full[off[n]:off[n + 1], off[n]:off[n + 1]] = blk
        return full


def generator_block(g: BsGenerator, total: int) -> np.ndarray:
    """Anti-Hermitian generator restricted to the ``N = total`` block."""
    k = np.arange(total)
    # a_L^dag a_U: |k+1, N-k-1> -> sqrt(k+1) sqrt(N-k) |k, N-k>
    down = np.sqrt((k + 1) * (total - k))
    blk = np.zeros((total + 1, total + 1), dtype=complex)
    blk[k, k + 1] = g.theta * np.exp(-1j * g.phi) * down
    blk[k + 1, k] = -g.theta * np.exp(1j * g.phi) * down
    return blk


@lru_cache(maxsize=256)
def _bs_blocks(theta: float, phi: float, n_max: int) -> tuple[np.ndarray, ...]:
    g = BsGenerator(theta, phi)
    return tuple(expm(generator_block(g, n)) for n in range(n_max + 1))


def build_bs_unitary(g: BsGenerator, n_max: int) -> BlockUnitary:
    n = _check_n_max(n_max)
    return BlockUnitary(list(_bs_blocks(float(g.theta), float(g.phi), n)))


def phase_shifter_unitary(phase_shift: float, n_max: int) -> BlockUnitary:
    """``exp(i phase_shift n_L)``, which maps ``a_L`` to ``e^{i phase_shift} a_L``."""
    n = _check_n_max(n_max)
    blocks = []
    for total in range(n + 1):
        n_l = total - np.arange(total + 1)
        blocks.append(np.diag(np.exp(1j * phase_shift * n_l)))
    return BlockUnitary(blocks)


def vacuum(n_max: int) -> TwoModeState:
    n = _check_n_max(n_max)
    amps = np.zeros(block_offsets(n)[-1], dtype=complex)
    amps[0] = 1.0
    return TwoModeState(amps, n)


def fock_state(n_u: int, n_l: int, n_max: int) -> TwoModeState:
    n = _check_n_max(n_max)
    if n_u < 0 or n_l < 0 or n_u + n_l > n:
        raise ValueError("occupation outside the truncated space")
    amps = np.zeros(block_offsets(n)[-1], dtype=complex)
    amps[index(n_u, n_l)] = 1.0
    return TwoModeState(amps, n)


def single_photon_input(n_max: int = 1) -> TwoModeState:
    return fock_state(0, 1, n_max)


def truncation_tail(alpha: complex, n_max: int) -> float:
    """Poisson probability of more than ``n_max`` photons in a coherent state."""
    mean = abs(alpha) ** 2
    if mean == 0:
        return 0.0
    n = np.arange(n_max + 1)
    log_p = -mean + n * math.log(mean) - np.array([math.lgamma(k + 1) for k in n])
    return max(0.0, 1.0 - float(np.sum(np.exp(log_p))))


def coherent_input(alpha: complex, n_max: int = 20) -> TwoModeState:
    """Coherent state in the lower mode, vacuum in the upper, renormalized after truncation."""
    n = _check_n_max(n_max)
    if abs(alpha) ** 2 > n / 4:
        raise ValueError(f"|alpha|^2 = {abs(alpha) ** 2:g} exceeds n_max/4 = {n / 4:g}")
    amps = np.zeros(block_offsets(n)[-1], dtype=complex)
    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    for k in range(1, n + 1):
        c[k] = c[k - 1] * alpha / math.sqrt(k)
    c /= np.linalg.norm(c)
    for k in range(n + 1):
        amps[index(0, k)] = c[k]
    return TwoModeState(amps, n)


def evolve_mzi(state: TwoModeState, bs1: BsGenerator, phase_shift: float,
               bs2: BsGenerator) -> TwoModeState:
    n = state.n_max
    state = build_bs_unitary(bs1, n).apply(state)
    state = phase_shifter_unitary(phase_shift, n).apply(state)
    return build_bs_unitary(bs2, n).apply(state)


def mean_photon_numbers(state: TwoModeState) -> tuple[float, float]:
    nu, nl = basis_numbers(state.n_max)
    p = state.probabilities()
    return float(p @ nu), float(p @ nl)
