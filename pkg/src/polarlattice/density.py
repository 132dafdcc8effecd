"""Quantized LLR densities and polar-code density evolution on the AMGN channel.

Densities live on a uniform symmetric grid of bin centers k * step,
k = -K..K; mass falling outside is folded into the end bins.  The variable
node operation is a plain convolution of bin masses.  The check node
operation is evaluated in sign/magnitude form: signs multiply, and the
output magnitude 2*atanh(tanh(x/2)*tanh(y/2)) lies within ln 2 below
min(x, y), collapsing to exactly min(x, y) (after rounding) once the inputs
are more than about ln(2/step) apart.  That makes the magnitude kernel a
narrow band around the diagonal plus a cheap running-minimum tail term, so
one check convolution costs O(K * band) instead of O(K^2).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .channels import llr_from_amgn, replica_radius

MAX_EVOLVE_N = 1 << 16


@dataclass(frozen=True)
class LlrGrid:
    """Symmetric uniform LLR grid: bin centers k*step for k in -K..K."""

    llr_max: float = 60.0
    step: float = 0.01

    def __post_init__(self):
        if not 0 < self.step:
            raise ValueError("step must be positive")
        if self.llr_max < self.step:
            raise ValueError("llr_max must cover at least one bin")

    @property
    def half_bins(self) -> int:
        return int(round(self.llr_max / self.step))

    @property
    def size(self) -> int:
        return 2 * self.half_bins + 1

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.size) - self.half_bins) * self.step


DEFAULT_GRID = LlrGrid()


@dataclass(frozen=True)
class LlrDensity:
    """Probability mass over an LlrGrid; nonnegative and summing to one."""

    grid: LlrGrid
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        object.__setattr__(self, "mass", mass)
        if mass.shape != (self.grid.size,):
            raise ValueError(f"mass must have shape ({self.grid.size},)")
        if np.any(mass < 0):
            raise ValueError("mass entries must be nonnegative")
        if abs(mass.sum() - 1.0) > 1e-9:
            raise ValueError(f"mass must sum to 1, got {mass.sum()!r}")

    @property
    def mean(self) -> float:
        return float(self.mass @ self.grid.centers)

    @property
    def error_probability(self) -> float:
        """Mass below zero, counting half of the zero bin."""
        k = self.grid.half_bins
        return float(self.mass[:k].sum() + 0.5 * self.mass[k])

    def to_csv(self, path_or_buf) -> None:
        """Dump (llr_bin_center, mass) rows for debugging."""
        buf = path_or_buf if hasattr(path_or_buf, "write") else open(path_or_buf, "w")
        try:
            buf.write("llr_bin_center,mass\n")
            for c, m in zip(self.grid.centers, self.mass):
                buf.write(f"{c!r},{m!r}\n")
        finally:
            if buf is not path_or_buf:
                buf.close()


def point_mass(grid: LlrGrid, llr_value: float) -> LlrDensity:
    """Density with all mass in the bin nearest llr_value."""
    k = grid.half_bins
    idx = int(np.clip(round(llr_value / grid.step), -k, k)) + k
    mass = np.zeros(grid.size)
    mass[idx] = 1.0
    return LlrDensity(grid, mass)


def density_from_samples(grid: LlrGrid, llr_samples: np.ndarray,
                         weights: np.ndarray | None = None) -> LlrDensity:
    """Bin LLR values (optionally weighted) onto the grid, folding overflow."""
    k = grid.half_bins
    idx = np.clip(np.round(np.asarray(llr_samples) / grid.step).astype(np.int64), -k, k) + k
    mass = np.bincount(idx, weights=weights, minlength=grid.size).astype(np.float64)
    return LlrDensity(grid, mass / mass.sum())


def amgn_llr_density(sigma2: float, grid: LlrGrid = DEFAULT_GRID,
                     fold_points: int = 1 << 17) -> LlrDensity:
    """LLR density of the folded channel conditioned on coset 0.

    Integrates the folded-Gaussian observation density over a fine grid on
    [0, 1] and pushes each cell's mass into the LLR bin it maps to.
    """
    if not sigma2 > 0:
        raise ValueError("sigma2 must be > 0")
    if grid.step > 0.5:
        raise ValueError(f"grid too coarse: step {grid.step} > 0.5")
    r = replica_radius(sigma2)
    shifts = 2.0 * np.arange(-r, r + 1)
    block = max(256, int(2e7 / (2 * r + 1)))
    llr = np.empty(fold_points)
    pdf = np.empty(fold_points)
    for lo in range(0, fold_points, block):
        y = (np.arange(lo, min(lo + block, fold_points)) + 0.5) / fold_points
        pdf[lo:lo + block] = np.exp(
            -((y[:, None] - shifts) ** 2) / (2.0 * sigma2)).sum(axis=1)
        llr[lo:lo + block] = llr_from_amgn(y, sigma2)
    pdf *= 2.0 / np.sqrt(2.0 * np.pi * sigma2)
    return density_from_samples(grid, llr, weights=pdf / fold_points)


def _fold_tails(full: np.ndarray, k: int) -> np.ndarray:
    """Reduce a convolution output over bins -2K..2K to -K..K, folding overflow."""
    out = full[k:3 * k + 1].copy()
    out[0] += full[:k].sum()
    out[-1] += full[3 * k + 1:].sum()
    return out


def vn_convolve(d1: LlrDensity, d2: LlrDensity) -> LlrDensity:
    """Variable-node combination: density of the sum of two LLRs."""
    if d1.grid != d2.grid:
        raise ValueError("grid mismatch")
    k = d1.grid.half_bins
    full = fftconvolve(d1.mass, d2.mass)
    out = np.clip(_fold_tails(full, k), 0.0, None)
    return LlrDensity(d1.grid, out / out.sum())


# --- check-node convolution -------------------------------------------------

_BAND_CACHE: dict = {}


def _band_table(grid: LlrGrid):
    """Rounded check-output bins for magnitude pairs (m, m+d), d < band width.

    Beyond the band the correction to min(x, y) is under half a bin, so the
    output bin is exactly the smaller input's bin.
    """
    key = (grid.llr_max, grid.step)
    if key not in _BAND_CACHE:
        step = grid.step
        kk = grid.half_bins
        width = int(np.ceil(-np.log(np.expm1(step / 2.0)) / step))
        m = np.arange(1, kk + 1, dtype=np.float64)[:, None] * step
        d = np.arange(width, dtype=np.float64)[None, :] * step
        out = m + np.logaddexp(0.0, -(2.0 * m + d)) - np.logaddexp(0.0, -d)
        table = np.round(out / step).astype(np.int32)
        _BAND_CACHE[key] = (width, table)
    return _BAND_CACHE[key]


def _mag_convolve(a: np.ndarray, b: np.ndarray, grid: LlrGrid) -> np.ndarray:
    """Check-node magnitude kernel applied to two magnitude mass vectors.

    a, b are indexed by magnitude bin 1..K (index 0 unused); returns the
    output magnitude masses, index 0 collecting outputs that round to zero.
    """
    kk = grid.half_bins
    width, table = _band_table(grid)
    hi = max(int(np.max(np.nonzero(a)[0], initial=0)),
             int(np.max(np.nonzero(b)[0], initial=0)))
    out = np.zeros(kk + 1)
    if hi == 0:
        return out
    m_max = hi  # check output magnitude never exceeds the smaller input

    pad = np.zeros(width)
    win_a = np.lib.stride_tricks.sliding_window_view(
        np.concatenate([a[1:], pad]), width)[:m_max]
    win_b = np.lib.stride_tricks.sliding_window_view(
        np.concatenate([b[1:], pad]), width)[:m_max]
    w = a[1:m_max + 1, None] * win_b + b[1:m_max + 1, None] * win_a
    w[:, 0] *= 0.5  # diagonal pairs counted once
    band = np.bincount(table[:m_max].ravel(), weights=w.ravel(), minlength=kk + 1)
    out += band[:kk + 1]

    # pairs separated by at least the band width: output is the smaller bin
    tail_a = np.concatenate([np.cumsum(a[::-1])[::-1], np.zeros(width + 1)])
    tail_b = np.concatenate([np.cumsum(b[::-1])[::-1], np.zeros(width + 1)])
    idx = np.arange(1, kk + 1)
    out[1:] += a[1:] * tail_b[idx + width] + b[1:] * tail_a[idx + width]
    return out


def cn_convolve(d1: LlrDensity, d2: LlrDensity) -> LlrDensity:
    """Check-node combination: density of 2*atanh(tanh(L1/2)*tanh(L2/2)).

    Signs multiply and zero-LLR mass absorbs; the magnitude part runs through
    the banded kernel twice (sum and difference of the sign components).
    """
    if d1.grid != d2.grid:
        raise ValueError("grid mismatch")
    grid = d1.grid
    kk = grid.half_bins

    def split(d: LlrDensity):
        z = d.mass[kk]
        pos = np.zeros(kk + 1)
        neg = np.zeros(kk + 1)
        pos[1:] = d.mass[kk + 1:]
        neg[1:] = d.mass[kk - 1::-1]
        return z, pos, neg

    z1, p1, n1 = split(d1)
    z2, p2, n2 = split(d2)
    c_sum = _mag_convolve(p1 + n1, p2 + n2, grid)
    c_diff = _mag_convolve(p1 - n1, p2 - n2, grid)
    out_pos = 0.5 * (c_sum + c_diff)
    out_neg = 0.5 * (c_sum - c_diff)

    mass = np.zeros(grid.size)
    mass[kk + 1:] = out_pos[1:]
    mass[kk - 1::-1] = out_neg[1:]
    mass[kk] = z1 + z2 - z1 * z2 + out_pos[0] + out_neg[0]
    mass = np.clip(mass, 0.0, None)
    return LlrDensity(grid, mass / mass.sum())


# --- density evolution --------------------------------------------------------


@dataclass(frozen=True)
class PositionReliabilities:
    """Per-position hard-decision error probabilities from density evolution."""

    n: int
    p: np.ndarray
    convolutions: int = 0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        object.__setattr__(self, "p", p)
        if p.shape != (self.n,):
            raise ValueError("p must have length n")

    def ordering(self):
        """Reliability order implied by these probabilities (ties by index)."""
        from .polar import ReliabilityOrder
        order = np.argsort(-self.p, kind="stable")
        return ReliabilityOrder(n=self.n, order=order, source="de")


def evolve(channel: LlrDensity, n: int) -> PositionReliabilities:
    """Propagate the channel density through the size-n polar transform.

    Position j's density applies, from the channel side inward, a check
    combination for each 0 bit and a variable combination for each 1 bit of
    j's binary expansion (most significant first).
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError("n must be a power of two")
    if n > MAX_EVOLVE_N:
        raise ValueError(f"n={n} exceeds the supported maximum {MAX_EVOLVE_N}")
    count = 0

    def rec(d: LlrDensity, levels: int) -> list:
        nonlocal count
        if levels == 0:
            return [d.error_probability]
        count += 2
        return rec(cn_convolve(d, d), levels - 1) + rec(vn_convolve(d, d), levels - 1)

    p = np.array(rec(channel, n.bit_length() - 1))
    return PositionReliabilities(n=n, p=p, convolutions=count)


def de_wer(p: PositionReliabilities | np.ndarray, info_set) -> float:
    """Word error rate 1 - prod(1 - p_j) over the information set."""
    probs = p.p if isinstance(p, PositionReliabilities) else np.asarray(p, dtype=np.float64)
    info = np.asarray(info_set, dtype=np.int64)
    if info.size == 0:
        return 0.0
    if info.min() < 0 or info.max() >= probs.size:
        raise ValueError("info_set index out of range")
    return float(-np.expm1(np.log1p(-probs[info]).sum()))
