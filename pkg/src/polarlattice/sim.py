"""Monte Carlo word-error-rate estimation for multilevel lattice designs.

Trials are dispatched in fixed-size batches; batch b of sweep point p draws
its noise from an independent counter-based stream keyed by (seed, p, b), so
results are identical for any worker count and workers never share state.
A word error is an exact integer mismatch between the decoded and
transmitted points; each erroneous trial is attributed to the first level
that decoded wrong (or to the integer level).
"""

from __future__ import annotations

import io
import multiprocessing
import time
from dataclasses import dataclass

import numpy as np

from . import channels
from .lattice import LatticeDesign, LatticePoint, lattice_encode, multistage_decode_batch, \
    sigma2_for_vnr, vnr
from .polar import crc_parity_matrix

WILSON_Z = 1.959963984540054  # 95%


@dataclass(frozen=True)
class SimPlan:
    design: LatticeDesign
    sweep: tuple                  # VNR points in dB, or noise variances
    sweep_unit: str = "vnr_db"    # "vnr_db" | "sigma2"
    max_trials: int = 100_000
    target_errors: int = 100
    seed: int = 0
    batch_size: int = 0           # 0: pick per decoder kind
    transmit_mode: str = "zero"   # "zero" | "random"
    workers: int = 1

    def __post_init__(self):
        if not self.sweep:
            raise ValueError("sweep must be nonempty")
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        if self.sweep_unit not in ("vnr_db", "sigma2"):
            raise ValueError(f"unknown sweep unit {self.sweep_unit!r}")
        if self.transmit_mode not in ("zero", "random"):
            raise ValueError(f"unknown transmit mode {self.transmit_mode!r}")
        object.__setattr__(self, "sweep", tuple(float(v) for v in self.sweep))

    def effective_batch(self) -> int:
        if self.batch_size:
            return self.batch_size
        return 2048 if self.design.decoder == "sc" else 64


@dataclass(frozen=True)
class SimStats:
    """Result row for one sweep point."""

    vnr_db: float
    sigma2: float
    trials: int
    errors: int
    level_errors: tuple   # a + 1 first-error counters; sums to errors
    seconds: float

    @property
    def wer(self) -> float:
        return self.errors / self.trials

    @property
    def ci95(self):
        """Wilson score interval for the word error rate."""
        p, nt, z2 = self.wer, self.trials, WILSON_Z ** 2
        denom = 1.0 + z2 / nt
        center = (p + z2 / (2 * nt)) / denom
        half = WILSON_Z * np.sqrt(p * (1 - p) / nt + z2 / (4 * nt * nt)) / denom
        lo = 0.0 if self.errors == 0 else float(max(0.0, center - half))
        hi = 1.0 if self.errors == self.trials else float(min(1.0, center + half))
        return lo, hi


def transmit_point(design: LatticeDesign, mode: str, seed,
                   rng: np.random.Generator | None = None):
    """Pick a transmitted lattice point: the origin, or a random encode.

    Random mode draws uniform payload bits (CRC bits, if any, are then fixed
    by the payload) and integer coordinates in {-2..2}.  Returns the point
    together with its per-level input vectors and integer part.
    """
    n, a = design.n, design.a
    if mode == "zero":
        u_full = [np.zeros(n, dtype=np.uint8) for _ in range(a)]
        return LatticePoint(np.zeros(n, dtype=np.int64)), u_full, np.zeros(n, dtype=np.int64)
    if mode != "random":
        raise ValueError(f"unknown transmit mode {mode!r}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    u_bits = []
    u_full = []
    for i in range(a):
        code = design.level_code(i)
        payload = rng.integers(0, 2, size=code.k - code.crc_bits).astype(np.uint8)
        from .polar import message_to_u
        u = message_to_u(code, payload)
        u_full.append(u)
        u_bits.append(u[code.info_set])
    z = rng.integers(-2, 3, size=n)
    point = lattice_encode(u_bits, z, design)
    return point, u_full, np.asarray(z, dtype=np.int64)


def _batch_transmit(design: LatticeDesign, mode: str, batch: int,
                    rng: np.random.Generator):
    """Transmitted points for one batch: (x (B, n) int, level u (B, n) bits)."""
    n, a = design.n, design.a
    if mode == "zero":
        x = np.zeros((batch, n), dtype=np.int64)
        return x, [np.zeros((batch, n), dtype=np.uint8) for _ in range(a)]
    from .polar import polar_transform_real
    x = np.zeros((batch, n), dtype=np.int64)
    level_u = []
    for i in range(a):
        code = design.level_code(i)
        payload = rng.integers(0, 2, size=(batch, code.k - code.crc_bits), dtype=np.int64)
        u = np.zeros((batch, n), dtype=np.uint8)
        u[:, code.payload_positions] = payload
        if code.crc_bits:
            m = crc_parity_matrix(code.k - code.crc_bits, code.crc_bits)
            u[:, code.crc_positions] = (payload @ m.T) & 1
        level_u.append(u)
        x += (1 << i) * polar_transform_real(u.astype(np.int64))
    z = rng.integers(-2, 3, size=(batch, n))
    x += (1 << a) * polar_transform_real(z)
    return x, level_u


def _run_batch(args):
    design, sigma2, mode, batch, seed, stream = args
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))
    x, true_u = _batch_transmit(design, mode, batch, rng)
    y = x + rng.normal(0.0, np.sqrt(sigma2), size=x.shape)
    x_hat, level_u, _ = multistage_decode_batch(y, design, sigma2)

    word_err = np.any(x_hat != x, axis=1)
    errors = int(word_err.sum())
    level_counts = np.zeros(design.a + 1, dtype=np.int64)
    unattributed = word_err.copy()
    for i in range(design.a):
        wrong = np.any(level_u[i] != true_u[i], axis=1) & unattributed
        level_counts[i] = int(wrong.sum())
        unattributed &= ~wrong
    level_counts[design.a] = int(unattributed.sum())
    return batch, errors, level_counts


def run_wer(plan: SimPlan) -> list:
    """Estimate the word error rate at every sweep point of the plan.

    Each point stops once target_errors errors are seen (the crossing batch
    is counted in full) or max_trials trials are spent.
    """
    design = plan.design
    results = []
    batch = plan.effective_batch()
    for point_idx, value in enumerate(plan.sweep):
        if plan.sweep_unit == "vnr_db":
            point_vnr, sigma2 = value, sigma2_for_vnr(design, value)
        else:
            sigma2 = value
            point_vnr = vnr(design, sigma2)
        n_batches = (plan.max_trials + batch - 1) // batch
        sizes = [batch] * (n_batches - 1) + [plan.max_trials - batch * (n_batches - 1)]
        args = ((design, sigma2, plan.transmit_mode, sizes[b], plan.seed,
                 (point_idx << 32) | b) for b in range(n_batches))

        t0 = time.perf_counter()
        trials = errors = 0
        level_counts = np.zeros(design.a + 1, dtype=np.int64)

        def consume(iterator):
            nonlocal trials, errors, level_counts
            for b_trials, b_errors, b_levels in iterator:
                trials += b_trials
                errors += b_errors
                level_counts += b_levels
                if errors >= plan.target_errors:
                    break

        if plan.workers > 1:
            with multiprocessing.Pool(plan.workers) as pool:
                consume(pool.imap(_run_batch, args))
                pool.terminate()
        else:
            consume(map(_run_batch, args))
        seconds = time.perf_counter() - t0
        results.append(SimStats(vnr_db=float(point_vnr), sigma2=float(sigma2),
                                trials=trials, errors=errors,
                                level_errors=tuple(int(c) for c in level_counts),
                                seconds=seconds))
    return results


def stats_to_csv(stats: list, path_or_buf=None, timing: bool = False) -> str | None:
    """Render sweep results as CSV.

    The seconds column is zeroed unless timing is requested, so that output
    for a fixed seed is byte-identical across runs and worker counts.
    """
    if not stats:
        raise ValueError("no stats to write")
    a = len(stats[0].level_errors) - 1
    buf = io.StringIO()
    level_cols = ",".join(f"err_l{i}" for i in range(a))
    sep = "," if a else ""
    buf.write(f"vnr_db,sigma2,trials,errors,wer,ci_low,ci_high,{level_cols}{sep}err_top,seconds\n")
    for s in stats:
        lo, hi = s.ci95
        levels = ",".join(str(c) for c in s.level_errors)
        secs = round(s.seconds, 3) if timing else 0.0
        buf.write(f"{s.vnr_db!r},{s.sigma2!r},{s.trials},{s.errors},"
                  f"{s.wer!r},{lo!r},{hi!r},{levels},{secs}\n")
    text = buf.getvalue()
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as f:
            f.write(text)
    return None
