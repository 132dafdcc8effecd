"""Rate allocation for multilevel lattices under the equal-error-probability rule.

For a target word error rate P_e over a levels plus the integer level, each
level gets the per-level budget P_e / (a + 1).  The uncoded top level fixes
the design noise sigma2_a in closed form; level i then sees 4^(a-i) times
that, and its rate is the largest code size whose predicted word error rate
stays within the per-level budget.  Under SC decoding that predictor is the
density-evolution product; under list decoding it is Monte Carlo estimation
with noise-bisection and log-linear interpolation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, erfcinv

from . import channels
from .decoders import SclConfig, scl_decode_batch
from .density import DEFAULT_GRID, LlrGrid, amgn_llr_density, de_wer, evolve
from .lattice import LatticeDesign
from .polar import NestedCodeFamily, PolarCode, ReliabilityOrder, pw_ordering


def uncoded_dimension_error(sigma2: float) -> float:
    """Probability that Gaussian noise moves one coordinate past the midpoint."""
    return float(erfc(1.0 / np.sqrt(8.0 * sigma2)))


def uncoded_wer(sigma2: float, n: int) -> float:
    """Word error rate of plain integer rounding in n dimensions."""
    return float(-np.expm1(n * np.log1p(-uncoded_dimension_error(sigma2))))


def sigma2_for_uncoded_target(n: int, target: float) -> float:
    """Noise variance at which integer rounding meets the target word error rate.

    Closed-form inverse of ``uncoded_wer`` via the inverse complementary
    error function.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < target < 1.0:
        raise ValueError("target must be in (0, 1)")
    per_dim = -np.expm1(np.log1p(-target) / n)  # 1 - (1 - target)^(1/n)
    return float(1.0 / (8.0 * erfcinv(per_dim) ** 2))


@dataclass(frozen=True)
class RateQuery:
    """Inputs for one achievable-rate evaluation at a single noise point."""

    n: int
    target: float
    sigma2: float
    method: str = "de"          # "de" (SC, density evolution) or "mc" (SCL, Monte Carlo)
    ordering: str = "de"        # "de" or "pw"
    scl: SclConfig | None = None
    grid: LlrGrid = DEFAULT_GRID
    mc_min_errors: int = 100
    mc_max_trials: int = 200_000
    mc_batch: int = 2_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.target < 1.0:
            raise ValueError("target must be in (0, 1)")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be > 0")
        if self.method not in ("de", "mc"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.ordering not in ("de", "pw"):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if self.method == "mc" and self.scl is None:
            raise ValueError("Monte Carlo rate search needs an SclConfig")


@dataclass(frozen=True)
class RateResult:
    k: int
    rate: float
    predicted_wer: float
    feasible: bool = True


def _best_k_from_reliabilities(p: np.ndarray, target: float,
                               pool: np.ndarray | None = None):
    """Largest k with 1 - prod(1 - p_j) <= target over the k best positions.

    Positions are drawn from ``pool`` (default: all) in ascending-p order;
    the cumulative word error rate is nondecreasing in k, so the cut is a
    binary search over its prefix values.
    """
    idx = np.arange(p.size) if pool is None else np.asarray(pool, dtype=np.int64)
    ranked = idx[np.argsort(p[idx], kind="stable")]
    wer = -np.expm1(np.cumsum(np.log1p(-p[ranked])))
    k = int(np.searchsorted(wer, target, side="right"))
    predicted = float(wer[k - 1]) if k else 0.0
    return k, np.sort(ranked[:k]), predicted


def achievable_rate(query: RateQuery) -> RateResult:
    """Greatest code size whose decoder meets the target at the given noise."""
    if query.method == "de":
        rel = evolve(amgn_llr_density(query.sigma2, query.grid), query.n)
        if query.ordering == "pw":
            order = pw_ordering(query.n)
            ranked = order.order[::-1]
            wer = -np.expm1(np.cumsum(np.log1p(-rel.p[ranked])))
            k = int(np.searchsorted(wer, query.target, side="right"))
            predicted = float(wer[k - 1]) if k else 0.0
        else:
            k, _, predicted = _best_k_from_reliabilities(rel.p, query.target)
        return RateResult(k=k, rate=k / query.n, predicted_wer=predicted,
                          feasible=True)
    return _achievable_rate_mc(query)


# --- Monte Carlo rate search (list decoding) ----------------------------------


def _mc_wer(n: int, k: int, sigma2: float, cfg: SclConfig, ordering: ReliabilityOrder,
            min_errors: int, max_trials: int, batch: int, seed: int):
    """Word error rate of the (n, k) list-decoded code on the folded channel.

    Transmits the all-zeros word (the channel is symmetric and zero passes
    any CRC) and stops after min_errors errors or max_trials trials.
    """
    from .polar import make_polar_code

    code = make_polar_code(ordering, k, cfg.crc_bits)
    errors, trials, stream = 0, 0, 0
    while trials < max_trials and errors < min_errors:
        b = min(batch, max_trials - trials)
        noise = channels.awgn_sample(np.zeros((b, n)), sigma2, seed, stream)
        llr = channels.coset_llr(channels.mod_star(noise), sigma2)
        u, _ = scl_decode_batch(llr, code, cfg)
        errors += int(np.any(u != 0, axis=1).sum())
        trials += b
        stream += 1
    return errors / trials, errors, trials


def _mc_noise_tolerance(n: int, k: int, query: RateQuery) -> float:
    """Noise variance at which the (n, k) list-decoded code hits the target WER.

    Brackets the target by scaling sigma2 geometrically, bisects in log
    domain, then interpolates log-WER linearly in dB between the bracket
    ends.
    """
    ordering = pw_ordering(n) if query.ordering == "pw" else _de_ordering(n, query)
    cfg = query.scl

    def wer_at(s2):
        w, e, t = _mc_wer(n, k, s2, cfg, ordering, query.mc_min_errors,
                          query.mc_max_trials, query.mc_batch, query.seed)
        return max(w, 0.5 / t)  # zero-error points get a resolution floor

    lo = hi = query.sigma2  # lo: wer below target, hi: wer above
    w = wer_at(lo)
    if w <= query.target:
        hi = lo * 2.0
        while wer_at(hi) <= query.target:
            lo, hi = hi, hi * 2.0
            if hi > 1e6:
                return np.inf
    else:
        lo = hi / 2.0
        while wer_at(lo) > query.target:
            lo, hi = lo / 2.0, lo
            if lo < 1e-12:
                return 0.0
    for _ in range(4):
        mid = np.sqrt(lo * hi)
        if wer_at(mid) <= query.target:
            lo = mid
        else:
            hi = mid
    w_lo, w_hi = wer_at(lo), wer_at(hi)
    db_lo, db_hi = 10 * np.log10(lo), 10 * np.log10(hi)
    t = (np.log10(query.target) - np.log10(w_lo)) / (np.log10(w_hi) - np.log10(w_lo))
    return float(10.0 ** ((db_lo + t * (db_hi - db_lo)) / 10.0))


def _de_ordering(n: int, query: RateQuery) -> ReliabilityOrder:
    rel = evolve(amgn_llr_density(query.sigma2, query.grid), n)
    return rel.ordering()


def _achievable_rate_mc(query: RateQuery) -> RateResult:
    """Binary search over k using each candidate's Monte Carlo noise tolerance."""
    n, crc = query.n, query.scl.crc_bits
    k_floor = crc  # payload must be nonempty for a CRC-bearing code
    tol_cache: dict = {}

    def tolerable(k):
        if k not in tol_cache:
            tol_cache[k] = _mc_noise_tolerance(n, k, query)
        return tol_cache[k] >= query.sigma2

    lo, hi = k_floor, n  # lo: always-feasible sentinel, hi: best candidate
    if not tolerable(hi):
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if mid <= k_floor:
                break
            if tolerable(mid):
                lo = mid
            else:
                hi = mid
        hi = lo
    k = hi
    if k <= k_floor:
        return RateResult(k=0, rate=0.0, predicted_wer=0.0, feasible=False)
    ordering = pw_ordering(n) if query.ordering == "pw" else _de_ordering(n, query)
    wer, _, _ = _mc_wer(n, k, query.sigma2, query.scl, ordering, query.mc_min_errors,
                        query.mc_max_trials, query.mc_batch, query.seed)
    return RateResult(k=k, rate=k / n, predicted_wer=wer, feasible=True)


# --- full lattice design --------------------------------------------------------


class DesignInfeasibleError(RuntimeError):
    pass


def design_lattice(n: int, a: int, target_wer: float, decoder: str = "sc",
                   crc_bits: int = 0, list_size: int = 1,
                   grid: LlrGrid = DEFAULT_GRID, ordering: str | None = None,
                   mc_min_errors: int = 100, mc_max_trials: int = 200_000,
                   seed: int = 0) -> LatticeDesign:
    """Design an n-dimensional, a-level lattice for a target word error rate.

    Splits the budget evenly over the a + 1 levels, fixes the top-level noise
    in closed form, and allocates each coded level the largest rate meeting
    the per-level budget on its equivalent channel.  Nesting is enforced by
    restricting each level's candidate positions to the level above (under
    the channel-independent 'pw' ordering the restriction never binds).
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError("n must be a power of two")
    if a < 1:
        raise ValueError("a must be >= 1")
    if not 0.0 < target_wer < 1.0:
        raise ValueError("target_wer must be in (0, 1)")
    if decoder not in ("sc", "scl"):
        raise ValueError(f"unknown decoder kind {decoder!r}")
    if ordering is None:
        ordering = "de" if decoder == "sc" else "pw"

    per_level = target_wer / (a + 1)
    sigma2_a = sigma2_for_uncoded_target(n, per_level)

    info_sets = [None] * a
    rankings = [None] * a
    predicted = [0.0] * a
    pool = np.arange(n)
    for i in reversed(range(a)):
        sigma2_i = sigma2_a * 4.0 ** (a - i)
        if decoder == "sc":
            rel = evolve(amgn_llr_density(sigma2_i, grid), n)
            p = rel.p
            if ordering == "pw":
                pw = pw_ordering(n)
                ranked = pw.order[::-1]
                ranked = ranked[np.isin(ranked, pool)]
                wer = -np.expm1(np.cumsum(np.log1p(-p[ranked])))
                k = int(np.searchsorted(wer, per_level, side="right"))
                info, pred = np.sort(ranked[:k]), float(wer[k - 1]) if k else 0.0
            else:
                k, info, pred = _best_k_from_reliabilities(p, per_level, pool)
            rank_source = rel.ordering() if ordering == "de" else pw_ordering(n)
        else:
            query = RateQuery(n=n, target=per_level, sigma2=sigma2_i, method="mc",
                              ordering=ordering, scl=SclConfig(list_size, crc_bits),
                              grid=grid, mc_min_errors=mc_min_errors,
                              mc_max_trials=mc_max_trials, seed=seed)
            res = achievable_rate(query)
            if not res.feasible:
                raise DesignInfeasibleError(
                    f"level {i}: no code size meets {per_level} at sigma2={sigma2_i}")
            rank_source = pw_ordering(n) if ordering == "pw" else _de_ordering(n, query)
            ranked = rank_source.order[::-1]
            ranked = ranked[np.isin(ranked, pool)]
            k = min(res.k, pool.size)
            info, pred = np.sort(ranked[:k]), res.predicted_wer
        info_sets[i] = info
        predicted[i] = pred
        ranking = rank_source.order[::-1]
        rankings[i] = ranking[np.isin(ranking, info)]
        pool = info

    family = NestedCodeFamily(n=n, info_sets=tuple(info_sets))
    return LatticeDesign(family=family, sigma2_a=sigma2_a, target_wer=target_wer,
                         decoder=decoder, crc_bits=crc_bits if decoder == "scl" else 0,
                         list_size=list_size if decoder == "scl" else 1,
                         level_rankings=tuple(rankings),
                         level_predicted_wer=tuple(predicted))


def make_design(n: int, a: int, k_values, target_wer: float, decoder: str = "sc",
                crc_bits: int = 0, list_size: int = 1,
                ordering: str = "pw", grid: LlrGrid = DEFAULT_GRID) -> LatticeDesign:
    """Build a design from explicit per-level code sizes.

    Information sets are the k_i best positions under the chosen ordering
    ('pw', or 'de' evaluated at each level's design noise), restricted to the
    level above so the nesting condition always holds.
    """
    if len(k_values) != a:
        raise ValueError(f"expected {a} code sizes, got {len(k_values)}")
    if any(k1 > k2 for k1, k2 in zip(k_values, list(k_values)[1:])):
        raise ValueError("code sizes must be nondecreasing")
    per_level = target_wer / (a + 1)
    sigma2_a = sigma2_for_uncoded_target(n, per_level)
    info_sets = [None] * a
    rankings = [None] * a
    pool = np.arange(n)
    for i in reversed(range(a)):
        if ordering == "pw":
            order = pw_ordering(n)
        else:
            rel = evolve(amgn_llr_density(sigma2_a * 4.0 ** (a - i), grid), n)
            order = rel.ordering()
        ranked = order.order[::-1]
        ranked = ranked[np.isin(ranked, pool)]
        if k_values[i] > pool.size:
            raise DesignInfeasibleError(f"level {i}: k={k_values[i]} exceeds pool")
        info = np.sort(ranked[:k_values[i]])
        info_sets[i] = info
        rankings[i] = ranked[:k_values[i]]
        pool = info
    family = NestedCodeFamily(n=n, info_sets=tuple(info_sets))
    return LatticeDesign(family=family, sigma2_a=sigma2_a, target_wer=target_wer,
                         decoder=decoder, crc_bits=crc_bits, list_size=list_size,
                         level_rankings=tuple(rankings))


# --- rate curves ---------------------------------------------------------------


@dataclass(frozen=True)
class RateCurve:
    """Achievable rate as a function of noise at a fixed target error rate."""

    n: int
    target: float
    method: str
    points: tuple  # of (sigma2, k, rate, predicted_wer)

    def to_csv(self, path_or_buf=None) -> str | None:
        buf = io.StringIO()
        buf.write("sigma2,inv_sigma2_db,k,rate,predicted_wer\n")
        for sigma2, k, rate, wer in self.points:
            inv_db = float(10.0 * np.log10(1.0 / sigma2))
            buf.write(f"{float(sigma2)!r},{inv_db!r},{int(k)},{float(rate)!r},{float(wer)!r}\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as f:
                f.write(text)
        return None


def rate_curve(n: int, target: float, sigma2_grid, method: str = "de",
               ordering: str | None = None, scl: SclConfig | None = None,
               grid: LlrGrid = DEFAULT_GRID, seed: int = 0,
               mc_min_errors: int = 100, mc_max_trials: int = 200_000) -> RateCurve:
    """Evaluate the achievable rate over an ascending grid of noise variances."""
    sigma2_grid = [float(s) for s in sigma2_grid]
    if not sigma2_grid:
        raise ValueError("sigma2 grid must be nonempty")
    if sorted(sigma2_grid) != sigma2_grid:
        raise ValueError("sigma2 grid must be sorted ascending")
    if ordering is None:
        ordering = "de" if method == "de" else "pw"
    points = []
    for s2 in sigma2_grid:
        res = achievable_rate(RateQuery(n=n, target=target, sigma2=s2, method=method,
                                        ordering=ordering, scl=scl, grid=grid,
                                        seed=seed, mc_min_errors=mc_min_errors,
                                        mc_max_trials=mc_max_trials))
        points.append((s2, res.k, res.rate, res.predicted_wer))
    return RateCurve(n=n, target=target, method=method, points=tuple(points))
