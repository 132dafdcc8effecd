"""Multilevel lattices over nested polar codes: encoding, volume, multistage decoding.

A lattice point is x = sum_i 2^i Gt_i u_i + 2^a Gt z with all products over
the reals (not GF(2)); Gt is the transposed polar transform matrix, whose
column j is the transform of unit input j, and Gt_i keeps the columns in
level i's information set.  Since Gt is unimodular, the top level is just
2^a Z^n.

The multistage decoder peels levels: fold into [0, 1], decode the level's
binary code from coset LLRs, re-encode over the reals, subtract and halve;
the residue is rounded to the nearest integer vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import channels
from .decoders import SclConfig, sc_decode_batch, scl_decode_batch
from .polar import NestedCodeFamily, PolarCode, polar_transform_real, transform_basis

LOG2_TWO_PI_E = float(np.log2(2.0 * np.pi * np.e))
FORMAT_VERSION = 1


@dataclass(frozen=True)
class LatticePoint:
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.int64))


@dataclass(frozen=True)
class LatticeDesign:
    """A multilevel lattice: nested code family plus design/decoder metadata.

    ``sigma2_a`` is the per-dimension noise at which the uncoded top level
    meets the per-level error target; level i of the deployed lattice then
    sees 4^(a-i) times that.  ``rates`` count full information sets, CRC
    positions included.
    """

    family: NestedCodeFamily
    sigma2_a: float
    target_wer: float
    decoder: str = "sc"
    crc_bits: int = 0
    list_size: int = 1
    level_rankings: tuple = ()
    level_predicted_wer: tuple = ()

    def __post_init__(self):
        if self.decoder not in ("sc", "scl"):
            raise ValueError(f"unknown decoder kind {self.decoder!r}")
        if not self.sigma2_a > 0:
            raise ValueError("sigma2_a must be > 0")
        rates = self.rates
        if any(r1 > r2 for r1, r2 in zip(rates, rates[1:])):
            raise ValueError("level rates must be nondecreasing")
        if self.decoder == "scl" and self.crc_bits and not self.level_rankings:
            raise ValueError("CRC placement requires level_rankings")

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def a(self) -> int:
        return self.family.a

    @property
    def k_values(self) -> tuple:
        return self.family.k_values

    @property
    def rates(self) -> tuple:
        return tuple(k / self.n for k in self.k_values)

    @property
    def design_sigma2(self) -> float:
        """Channel noise the design targets: level 0 sees 4^a * sigma2_a."""
        return self.sigma2_a * 4.0 ** self.a

    def level_code(self, i: int) -> PolarCode:
        ranking = self.level_rankings[i] if self.level_rankings else None
        crc = self.crc_bits if self.decoder == "scl" else 0
        return PolarCode(n=self.n, info_set=self.family.info_sets[i],
                         crc_bits=crc, info_ranking=ranking)

    def scl_config(self) -> SclConfig:
        return SclConfig(list_size=self.list_size, crc_bits=self.crc_bits)


def log2_volume(design: LatticeDesign) -> float:
    """log2 of the fundamental volume: a*n - sum(k_i)."""
    return design.a * design.n - sum(design.k_values)


def volume(design: LatticeDesign) -> float:
    return 2.0 ** log2_volume(design)


def vnr(design: LatticeDesign, sigma2: float) -> float:
    """Volume-to-noise ratio V^(2/n) / (2 pi e sigma2) in dB; 0 dB at the Poltyrev limit."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be > 0")
    log2_val = (2.0 / design.n) * log2_volume(design) - LOG2_TWO_PI_E - np.log2(sigma2)
    return float(10.0 * log2_val * np.log10(2.0))


def sigma2_for_vnr(design: LatticeDesign, vnr_db: float) -> float:
    """Channel noise variance that puts the design at the given VNR."""
    log2_sigma2 = (2.0 / design.n) * log2_volume(design) - LOG2_TWO_PI_E - vnr_db / (10.0 * np.log10(2.0))
    return float(2.0 ** log2_sigma2)


def generator_matrix(design: LatticeDesign) -> np.ndarray:
    """Real generator matrix: transform columns scaled by 2^(first level containing them)."""
    n, a = design.n, design.a
    g = transform_basis(n).astype(np.float64)
    scale = np.full(n, 2.0 ** a)
    for i in reversed(range(a)):
        scale[design.family.info_sets[i]] = 2.0 ** i
    return g * scale[None, :]


def _embed(u_bits: np.ndarray, info_set: np.ndarray, n: int) -> np.ndarray:
    u = np.zeros(u_bits.shape[:-1] + (n,), dtype=np.int64)
    u[..., info_set] = u_bits
    return u


def lattice_encode(u_list, z: np.ndarray, design: LatticeDesign) -> LatticePoint:
    """Map per-level information bits and an integer vector to a lattice point."""
    n, a = design.n, design.a
    if len(u_list) != a:
        raise ValueError(f"expected {a} bit vectors, got {len(u_list)}")
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (n,):
        raise ValueError("z must be an integer vector of length n")
    x = np.zeros(n, dtype=np.int64)
    for i, (u, info) in enumerate(zip(u_list, design.family.info_sets)):
        u = np.asarray(u, dtype=np.int64)
        if u.shape != (info.size,):
            raise ValueError(f"level {i} expects {info.size} bits, got {u.shape}")
        if np.any((u != 0) & (u != 1)):
            raise ValueError("information bits must be 0/1")
        x += (1 << i) * polar_transform_real(_embed(u, info, n))
    x += (1 << a) * polar_transform_real(z)
    return LatticePoint(x)


@dataclass(frozen=True)
class MultistageResult:
    point: LatticePoint
    level_u: tuple          # decoded full-length input vectors, one per coded level
    z_hat: np.ndarray = field(default=None)


def multistage_decode_batch(y: np.ndarray, design: LatticeDesign,
                            sigma2: float | None = None):
    """Decode a (batch, n) array of received vectors.

    Returns (x_hat (batch, n) int, level_u list of (batch, n) bit arrays,
    z_hat (batch, n) int).  ``sigma2`` is the actual channel noise variance;
    defaults to the design operating point.
    """
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y.shape[-1] != design.n:
        raise ValueError(f"y length {y.shape[-1]} != n={design.n}")
    if sigma2 is None:
        sigma2 = design.design_sigma2
    residue = y.copy()
    x_hat = np.zeros(y.shape, dtype=np.int64)
    level_u = []
    for i in range(design.a):
        eff_sigma2 = sigma2 / 4.0 ** i
        llr = channels.coset_llr(channels.mod_star(residue), eff_sigma2)
        code = design.level_code(i)
        if design.decoder == "scl":
            u, _ = scl_decode_batch(llr, code, design.scl_config())
        else:
            u, _ = sc_decode_batch(llr, code)
        xi = polar_transform_real(u.astype(np.int64))
        level_u.append(u)
        x_hat += (1 << i) * xi
        residue = (residue - xi) / 2.0
    z_hat = np.rint(residue).astype(np.int64)  # round-half-even
    x_hat += (1 << design.a) * z_hat
    return x_hat, level_u, z_hat


def multistage_decode(y: np.ndarray, design: LatticeDesign,
                      sigma2: float | None = None) -> MultistageResult:
    """Decode one received vector to a lattice point."""
    x, level_u, z = multistage_decode_batch(np.asarray(y, dtype=np.float64)[None, :],
                                            design, sigma2)
    return MultistageResult(point=LatticePoint(x[0]),
                            level_u=tuple(u[0] for u in level_u),
                            z_hat=z[0])


def nearest_point_exhaustive(y: np.ndarray, design: LatticeDesign) -> LatticePoint:
    """Exact nearest lattice point by enumerating all coded-bit combinations.

    The top level separates per dimension (the full basis is unimodular), so
    for each candidate bit assignment the best integer part is a rounding.
    Exponential in sum(k_i); intended as a small-dimension oracle.
    """
    y = np.asarray(y, dtype=np.float64)
    n, a = design.n, design.a
    ks = design.k_values
    best, best_d2 = None, np.inf
    for combo in range(1 << sum(ks)):
        shift = 0
        coded = np.zeros(n, dtype=np.int64)
        for i in range(a):
            bits = (combo >> shift) & ((1 << ks[i]) - 1)
            u = np.array([(bits >> j) & 1 for j in range(ks[i])], dtype=np.int64)
            coded += (1 << i) * polar_transform_real(_embed(u, design.family.info_sets[i], n))
            shift += ks[i]
        r = y - coded
        cand = coded + (1 << a) * np.rint(r / (1 << a)).astype(np.int64)
        d2 = float(((y - cand) ** 2).sum())
        if d2 < best_d2:
            best, best_d2 = cand, d2
    return LatticePoint(best)


# --- serialization ------------------------------------------------------------


def design_to_dict(design: LatticeDesign) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "n": design.n,
        "a": design.a,
        "k": list(design.k_values),
        "info_sets": [np.asarray(s).tolist() for s in design.family.info_sets],
        "level_rankings": [np.asarray(r).tolist() for r in design.level_rankings],
        "decoder": design.decoder,
        "crc_bits": design.crc_bits,
        "list_size": design.list_size,
        "sigma2_a": design.sigma2_a,
        "target_wer": design.target_wer,
        "level_predicted_wer": list(design.level_predicted_wer),
    }


def design_to_json(design: LatticeDesign) -> str:
    return json.dumps(design_to_dict(design), indent=2) + "\n"


def design_from_dict(doc: dict) -> LatticeDesign:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported design format_version {doc.get('format_version')!r}")
    family = NestedCodeFamily(n=int(doc["n"]),
                              info_sets=tuple(np.array(s, dtype=np.int64) for s in doc["info_sets"]))
    return LatticeDesign(
        family=family,
        sigma2_a=float(doc["sigma2_a"]),
        target_wer=float(doc["target_wer"]),
        decoder=doc["decoder"],
        crc_bits=int(doc["crc_bits"]),
        list_size=int(doc["list_size"]),
        level_rankings=tuple(np.array(r, dtype=np.int64) for r in doc.get("level_rankings", [])),
        level_predicted_wer=tuple(float(w) for w in doc.get("level_predicted_wer", [])),
    )


def design_from_json(text: str) -> LatticeDesign:
    return design_from_dict(json.loads(text))
