"""Successive cancellation and CRC-aided list decoding of polar codes.

Both decoders share the same exact combining kernels, so a list size of 1
with no CRC reproduces plain SC bit for bit.  The batch entry points decode
many received words at once with array operations; Monte Carlo callers
should prefer them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar import PolarCode, crc_check_batch, polar_transform

_ATANH_CLAMP = 1.0 - 1e-15


def f_combine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Check combination 2*atanh(tanh(a/2)*tanh(b/2)), clamped near +-1."""
    prod = np.tanh(0.5 * a) * np.tanh(0.5 * b)
    return 2.0 * np.arctanh(np.clip(prod, -_ATANH_CLAMP, _ATANH_CLAMP))


def g_combine(a: np.ndarray, b: np.ndarray, left_bits: np.ndarray) -> np.ndarray:
    """Variable combination (-1)^left * a + b given the left re-encoded bits."""
    return (1.0 - 2.0 * left_bits) * a + b


def _phi(x: np.ndarray) -> np.ndarray:
    """Exact path-metric penalty ln(1 + exp(-x))."""
    return np.logaddexp(0.0, -x)


@dataclass(frozen=True)
class ScDecodeResult:
    u_hat: np.ndarray
    x_hat: np.ndarray


@dataclass(frozen=True)
class SclConfig:
    """List decoder settings; crc_bits must match the code's CRC width."""

    list_size: int = 8
    crc_bits: int = 0
    debug: bool = False

    def __post_init__(self):
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")
        if self.crc_bits < 0:
            raise ValueError("crc_bits must be >= 0")


def sc_decode_batch(llr: np.ndarray, code: PolarCode):
    """SC-decode a (batch, n) LLR array; returns (u_hat, x_hat) bit arrays."""
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    if llr.shape[-1] != code.n:
        raise ValueError(f"llr length {llr.shape[-1]} != n={code.n}")
    frozen = code.frozen_mask

    def rec(node_llr: np.ndarray, lo: int, hi: int):
        width = hi - lo
        if frozen[lo:hi].all():
            z = np.zeros(node_llr.shape, dtype=np.uint8)
            return z, z
        if width == 1:
            u = (node_llr < 0).astype(np.uint8)
            return u, u
        half = width // 2
        a, b = node_llr[..., :half], node_llr[..., half:]
        u_left, x_left = rec(f_combine(a, b), lo, lo + half)
        u_right, x_right = rec(g_combine(a, b, x_left), lo + half, hi)
        return (np.concatenate([u_left, u_right], axis=-1),
                np.concatenate([x_left ^ x_right, x_right], axis=-1))

    return rec(llr, 0, code.n)


def sc_decode(llr: np.ndarray, code: PolarCode) -> ScDecodeResult:
    """Decode one length-n LLR vector with successive cancellation."""
    u, x = sc_decode_batch(np.asarray(llr, dtype=np.float64)[None, :], code)
    return ScDecodeResult(u_hat=u[0], x_hat=x[0])


def genie_leaf_llrs(llr: np.ndarray) -> np.ndarray:
    """Per-position decision LLRs assuming all previous bits decode to zero.

    This is the decision statistic whose distribution density evolution
    tracks for the all-zeros word.
    """
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))

    def rec(v: np.ndarray) -> np.ndarray:
        if v.shape[-1] == 1:
            return v
        half = v.shape[-1] // 2
        a, b = v[..., :half], v[..., half:]
        return np.concatenate([rec(f_combine(a, b)), rec(a + b)], axis=-1)

    return rec(llr)


class _ListState:
    """Per-depth buffers for the list decoder.

    Path forks never move the big buffers.  Instead each depth keeps an
    ancestor map from current path slots to the slots its buffer was written
    under; reads gather through the map once.  bits buffers are always
    consumed before the next fork and need no map; decided bits are
    reconstructed afterwards by walking the fork records backwards.
    """

    def __init__(self, llr: np.ndarray, list_size: int, m: int):
        batch, n = llr.shape
        self.batch, self.L, self.m = batch, list_size, m
        self.root_llr = llr[:, None, :]        # identical across paths
        self.llr = [None] * (m + 1)            # depth d >= 1: (batch, L, n >> d)
        self.llr_anc = [None] * (m + 1)        # None: aligned with current slots
        self.left = [None] * (m + 1)
        self.left_anc = [None] * (m + 1)
        self.bits = [None] * (m + 1)
        self.pm = np.full((batch, list_size), np.inf)
        self.pm[:, 0] = 0.0
        self.forks = []                        # (pos, src, bit) records

    def node_llr(self, depth: int) -> np.ndarray:
        if depth == 0:
            return np.broadcast_to(self.root_llr,
                                   (self.batch, self.L) + self.root_llr.shape[2:])
        anc = self.llr_anc[depth]
        if anc is None:
            return self.llr[depth]
        self.llr[depth] = np.take_along_axis(self.llr[depth], anc[:, :, None], axis=1)
        self.llr_anc[depth] = None
        return self.llr[depth]

    def left_bits(self, depth: int) -> np.ndarray:
        anc = self.left_anc[depth]
        if anc is None:
            return self.left[depth]
        self.left[depth] = np.take_along_axis(self.left[depth], anc[:, :, None], axis=1)
        self.left_anc[depth] = None
        return self.left[depth]

    def fork(self, src: np.ndarray, pos: int) -> None:
        """Record a path selection; update the ancestor maps of live buffers.

        The llr buffer of the depth-d ancestor is only reread (for its right
        child) while the current position lies in its left subtree, i.e.
        while bit m-d-1 of pos is 0; dead buffers skip the update.
        """
        m = self.m
        for d in range(1, m):
            if self.llr[d] is not None and not (pos >> (m - d - 1)) & 1:
                anc = self.llr_anc[d]
                self.llr_anc[d] = src if anc is None else np.take_along_axis(anc, src, axis=1)
        for d in range(m):
            if self.left[d] is not None:
                anc = self.left_anc[d]
                self.left_anc[d] = src if anc is None else np.take_along_axis(anc, src, axis=1)

    def decided_bits(self, n: int) -> np.ndarray:
        """Reconstruct every path's decision vector from the fork records."""
        u = np.zeros((self.batch, self.L, n), dtype=np.uint8)
        cur = np.broadcast_to(np.arange(self.L), (self.batch, self.L))
        for pos, src, bit in reversed(self.forks):
            u[:, :, pos] = np.take_along_axis(bit, cur, axis=1)
            cur = np.take_along_axis(src, cur, axis=1)
        return u


def _scl_engine(llr: np.ndarray, code: PolarCode, cfg: SclConfig):
    """Core list decoder over a (batch, n) LLR array."""
    batch, n = llr.shape
    m, L = code.m, cfg.list_size
    frozen = code.frozen_mask
    state = _ListState(llr, L, m)

    def leaf(pos: int) -> None:
        lam = state.node_llr(m)[..., 0]  # (batch, L)
        if frozen[pos]:
            state.pm = state.pm + _phi(lam)
            bit = np.zeros((batch, L), dtype=np.uint8)
        else:
            pm2 = np.concatenate([state.pm + _phi(lam), state.pm + _phi(-lam)], axis=1)
            order = np.argsort(pm2, axis=1, kind="stable")
            kept = order[:, :L]
            if cfg.debug:
                kept_pm = np.take_along_axis(pm2, kept, axis=1)
                drop_pm = np.take_along_axis(pm2, order[:, L:], axis=1)
                assert np.all(kept_pm.max(axis=1) <= drop_pm.min(axis=1))
            bit = (kept >= L).astype(np.uint8)
            src = kept % L
            state.fork(src, pos)
            state.forks.append((pos, src, bit))
            state.pm = np.take_along_axis(pm2, kept, axis=1)
        state.bits[m] = bit[:, :, None]

    def descend(depth: int, lo: int, hi: int) -> None:
        if hi - lo == 1:
            leaf(lo)
            return
        half = (hi - lo) // 2
        node = state.node_llr(depth)
        a, b = node[..., :half], node[..., half:]
        state.llr[depth + 1] = f_combine(a, b)
        state.llr_anc[depth + 1] = None
        descend(depth + 1, lo, lo + half)
        state.left[depth] = state.bits[depth + 1]
        state.left_anc[depth] = None
        node = state.node_llr(depth)
        a, b = node[..., :half], node[..., half:]
        state.llr[depth + 1] = g_combine(a, b, state.left[depth])
        state.llr_anc[depth + 1] = None
        descend(depth + 1, lo + half, hi)
        left = state.left_bits(depth)
        state.bits[depth] = np.concatenate(
            [left ^ state.bits[depth + 1], state.bits[depth + 1]], axis=-1)
        state.left[depth] = None
        state.left_anc[depth] = None

    descend(0, 0, n)

    u_all = state.decided_bits(n)
    ranks = np.argsort(state.pm, axis=1, kind="stable")
    if cfg.crc_bits:
        if cfg.crc_bits != code.crc_bits:
            raise ValueError("cfg.crc_bits does not match the code's CRC width")
        msg_positions = np.concatenate([code.payload_positions, code.crc_positions])
        msgs = u_all[:, :, msg_positions]
        valid = crc_check_batch(msgs, cfg.crc_bits)
        valid_ranked = np.take_along_axis(valid, ranks, axis=1)
        first = np.argmax(valid_ranked, axis=1)
        first[~valid_ranked.any(axis=1)] = 0
        pick = np.take_along_axis(ranks, first[:, None], axis=1)[:, 0]
    else:
        pick = ranks[:, 0]
    u_best = u_all[np.arange(batch), pick]
    return u_best, polar_transform(u_best)


def scl_decode_batch(llr: np.ndarray, code: PolarCode, cfg: SclConfig):
    """List-decode a (batch, n) LLR array; returns (u_hat, x_hat)."""
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    if llr.shape[-1] != code.n:
        raise ValueError(f"llr length {llr.shape[-1]} != n={code.n}")
    return _scl_engine(llr, code, cfg)


def scl_decode(llr: np.ndarray, code: PolarCode, cfg: SclConfig) -> ScDecodeResult:
    """Decode one LLR vector with CRC-aided successive cancellation list decoding."""
    u, x = scl_decode_batch(np.asarray(llr, dtype=np.float64)[None, :], code, cfg)
    return ScDecodeResult(u_hat=u[0], x_hat=x[0])
