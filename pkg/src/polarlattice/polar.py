"""Binary polar codes: transform, reliability orderings, CRC, nested generators.

Bit indices are 0-based and natural order (no bit-reversal) everywhere:
position 0 is the fully check-combined (least reliable) input, position
n-1 the fully variable-combined (most reliable) one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PW_BETA = 2.0 ** 0.25

# Generator polynomials, MSB first, without the leading x^r term.
# Zero initial register, no final XOR.
CRC_POLYS = {
    6: 0b000011,            # x^6 + x + 1
    10: 0b1000110011,       # x^10 + x^9 + x^5 + x^4 + x + 1
}


def _check_block_length(n: int) -> int:
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"block length must be a power of two, got {n}")
    return int(n).bit_length() - 1


def polar_transform(bits: np.ndarray) -> np.ndarray:
    """Apply the polar transform over GF(2) along the last axis."""
    x = np.array(bits, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    _check_block_length(n)
    step = 1
    while step < n:
        for off in range(0, n, 2 * step):
            x[..., off:off + step] ^= x[..., off + step:off + 2 * step]
        step *= 2
    return x


def polar_transform_real(v: np.ndarray) -> np.ndarray:
    """Same butterfly with real addition: multiplies by the transform matrix over R."""
    x = np.array(v, dtype=np.int64, copy=True)
    n = x.shape[-1]
    _check_block_length(n)
    step = 1
    while step < n:
        for off in range(0, n, 2 * step):
            x[..., off:off + step] += x[..., off + step:off + 2 * step]
        step *= 2
    return x


@dataclass(frozen=True)
class ReliabilityOrder:
    """Permutation of {0..n-1} from least to most reliable position."""

    n: int
    order: np.ndarray
    source: str = ""

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        object.__setattr__(self, "order", order)
        if sorted(order.tolist()) != list(range(self.n)):
            raise ValueError("order must be a permutation of 0..n-1")

    def most_reliable(self, k: int) -> np.ndarray:
        """The k most reliable positions, sorted ascending."""
        if not 0 <= k <= self.n:
            raise ValueError(f"k={k} out of range [0, {self.n}]")
        return np.sort(self.order[self.n - k:])


def pw_ordering(n: int) -> ReliabilityOrder:
    """Channel-independent reliability order from the beta-expansion weight.

    Position j with binary digits b_i gets weight sum(b_i * beta^i),
    beta = 2^(1/4); larger weight means more reliable.
    """
    m = _check_block_length(n)
    idx = np.arange(n)
    weights = np.zeros(n)
    for i in range(m):
        weights += ((idx >> i) & 1) * PW_BETA ** i
    order = np.argsort(weights, kind="stable")
    return ReliabilityOrder(n=n, order=order, source="pw")


def select_info_set(order: ReliabilityOrder, k: int) -> np.ndarray:
    """Information set = the k most reliable positions (sorted ascending)."""
    return order.most_reliable(k)


@dataclass(frozen=True)
class PolarCode:
    """An (n, k) polar code: info set, optional CRC width, reliability ranking.

    ``crc_bits`` positions of the info set carry CRC check bits; they are the
    least reliable members of the info set, so the payload keeps the best
    positions.  ``rate`` counts the full info set, CRC included.
    """

    n: int
    info_set: np.ndarray
    crc_bits: int = 0
    info_ranking: np.ndarray | None = None  # info positions, most to least reliable

    def __post_init__(self):
        _check_block_length(self.n)
        info = np.asarray(self.info_set, dtype=np.int64)
        object.__setattr__(self, "info_set", np.sort(info))
        if info.size != np.unique(info).size:
            raise ValueError("info_set indices must be distinct")
        if info.size and (info.min() < 0 or info.max() >= self.n):
            raise ValueError("info_set indices out of range")
        if self.crc_bits < 0 or self.crc_bits > info.size:
            raise ValueError("crc_bits must be in [0, k]")
        if self.crc_bits and self.crc_bits not in CRC_POLYS:
            raise ValueError(f"unsupported CRC width {self.crc_bits}")
        if self.info_ranking is not None:
            ranking = np.asarray(self.info_ranking, dtype=np.int64)
            object.__setattr__(self, "info_ranking", ranking)
            if sorted(ranking.tolist()) != sorted(self.info_set.tolist()):
                raise ValueError("info_ranking must rank exactly the info set")
        elif self.crc_bits:
            raise ValueError("crc_bits > 0 requires info_ranking")

    @property
    def m(self) -> int:
        return self.n.bit_length() - 1

    @property
    def k(self) -> int:
        return int(self.info_set.size)

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.info_set] = False
        return mask

    @property
    def payload_positions(self) -> np.ndarray:
        """Info positions carrying payload bits, sorted ascending."""
        if self.crc_bits == 0:
            return self.info_set
        return np.sort(self.info_ranking[:self.k - self.crc_bits])

    @property
    def crc_positions(self) -> np.ndarray:
        """Info positions carrying CRC bits, sorted ascending."""
        if self.crc_bits == 0:
            return np.empty(0, dtype=np.int64)
        return np.sort(self.info_ranking[self.k - self.crc_bits:])


def make_polar_code(order: ReliabilityOrder, k: int, crc_bits: int = 0) -> PolarCode:
    """Build the (n, k) code using the k most reliable positions of ``order``."""
    info = select_info_set(order, k)
    ranking = order.order[::-1]
    ranking = ranking[np.isin(ranking, info)]
    return PolarCode(n=order.n, info_set=info, crc_bits=crc_bits, info_ranking=ranking)


def polar_encode(u: np.ndarray, code: PolarCode) -> np.ndarray:
    """Encode a full-length input vector (frozen positions must be zero)."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != code.n:
        raise ValueError(f"input length {u.shape[-1]} != n={code.n}")
    if np.any(u[..., code.frozen_mask]):
        raise ValueError("nonzero value in a frozen position")
    return polar_transform(u)


def crc_remainder(bits: np.ndarray, crc_bits: int) -> np.ndarray:
    """Remainder of bits * x^r modulo the width-r generator polynomial."""
    poly = CRC_POLYS[crc_bits]
    reg = 0
    for b in np.asarray(bits, dtype=np.uint8):
        msb = (reg >> (crc_bits - 1)) & 1
        reg = ((reg << 1) & ((1 << crc_bits) - 1)) | int(b)
        if msb:
            reg ^= poly
    # flush the register through r more shifts
    for _ in range(crc_bits):
        msb = (reg >> (crc_bits - 1)) & 1
        reg = (reg << 1) & ((1 << crc_bits) - 1)
        if msb:
            reg ^= poly
    out = [(reg >> (crc_bits - 1 - i)) & 1 for i in range(crc_bits)]
    return np.array(out, dtype=np.uint8)


def crc_attach(payload: np.ndarray, crc_bits: int) -> np.ndarray:
    """Append crc_bits check bits to the payload (identity for width 0)."""
    payload = np.asarray(payload, dtype=np.uint8)
    if crc_bits == 0:
        return payload.copy()
    if crc_bits not in CRC_POLYS:
        raise ValueError(f"unsupported CRC width {crc_bits}")
    return np.concatenate([payload, crc_remainder(payload, crc_bits)])


def crc_check(bits: np.ndarray, crc_bits: int) -> bool:
    """True iff the trailing crc_bits check the leading payload."""
    bits = np.asarray(bits, dtype=np.uint8)
    if crc_bits == 0:
        return True
    if crc_bits not in CRC_POLYS:
        raise ValueError(f"unsupported CRC width {crc_bits}")
    if bits.size < crc_bits:
        return False
    expected = crc_remainder(bits[:bits.size - crc_bits], crc_bits)
    return bool(np.array_equal(bits[bits.size - crc_bits:], expected))


_PARITY_CACHE: dict = {}


def crc_parity_matrix(payload_len: int, crc_bits: int) -> np.ndarray:
    """Matrix M with M @ payload % 2 = CRC bits; enables batched attach/check."""
    key = (payload_len, crc_bits)
    if key not in _PARITY_CACHE:
        if payload_len == 0:
            _PARITY_CACHE[key] = np.zeros((crc_bits, 0), dtype=np.uint8)
        else:
            cols = [crc_remainder(np.eye(payload_len, dtype=np.uint8)[i], crc_bits)
                    for i in range(payload_len)]
            _PARITY_CACHE[key] = np.array(cols, dtype=np.uint8).T.copy()
    return _PARITY_CACHE[key]


def crc_check_batch(bits: np.ndarray, crc_bits: int) -> np.ndarray:
    """Row-wise crc_check over a (..., payload+crc) bit array."""
    bits = np.asarray(bits, dtype=np.uint8)
    if crc_bits == 0:
        return np.ones(bits.shape[:-1], dtype=bool)
    payload, crc = bits[..., :-crc_bits], bits[..., -crc_bits:]
    m = crc_parity_matrix(payload.shape[-1], crc_bits)
    expected = (payload @ m.T.astype(np.int64)) & 1
    return np.all(expected == crc, axis=-1)


def message_to_u(code: PolarCode, payload: np.ndarray) -> np.ndarray:
    """Scatter payload plus CRC into a full-length input vector."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size != code.k - code.crc_bits:
        raise ValueError(f"payload length {payload.size} != {code.k - code.crc_bits}")
    u = np.zeros(code.n, dtype=np.uint8)
    u[code.payload_positions] = payload
    if code.crc_bits:
        u[code.crc_positions] = crc_remainder(payload, code.crc_bits)
    return u


def u_to_message(code: PolarCode, u: np.ndarray) -> np.ndarray:
    """Gather payload followed by CRC bits from a full-length input vector."""
    u = np.asarray(u, dtype=np.uint8)
    return np.concatenate([u[code.payload_positions], u[code.crc_positions]])


@dataclass(frozen=True)
class NestedCodeFamily:
    """Chain of nested information sets I_0 <= I_1 <= ... <= I_{a-1}."""

    n: int
    info_sets: tuple
    orderings: tuple = field(default=())

    def __post_init__(self):
        _check_block_length(self.n)
        sets = tuple(np.sort(np.asarray(s, dtype=np.int64)) for s in self.info_sets)
        object.__setattr__(self, "info_sets", sets)
        for i, s in enumerate(sets):
            if s.size and (s.min() < 0 or s.max() >= self.n):
                raise ValueError(f"info set {i} has indices out of range")
            if s.size != np.unique(s).size:
                raise ValueError(f"info set {i} has duplicate indices")
        for lo, hi in zip(sets, sets[1:]):
            if not np.all(np.isin(lo, hi)):
                raise ValueError("info sets are not nested")

    @property
    def a(self) -> int:
        return len(self.info_sets)

    @property
    def k_values(self) -> tuple:
        return tuple(int(s.size) for s in self.info_sets)


def transform_basis(n: int) -> np.ndarray:
    """The n x n binary matrix whose column j encodes unit input j."""
    return polar_transform(np.eye(n, dtype=np.uint8)).T


def nested_generators(family: NestedCodeFamily):
    """Per-level generator matrices (columns picked by each info set) plus the full basis."""
    g_full = transform_basis(family.n)
    mats = [g_full[:, s] for s in family.info_sets]
    return mats, g_full
