"""Monte-Carlo estimates of reachability probabilities.

Path sampling draws 53-bit integers from numpy's PCG64 and compares them
against the exact cumulative distribution, so each successor is chosen with
probability equal to its exact value rounded to a multiple of 2^-53.
Paths still running at the horizon are censored and counted as misses.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import NormalDist

import numpy as np

from .chain import EffectiveChain
from .errors import InputError
from .numeric import Polynomial

GENERATOR = "PCG64"
_BITS = 53
_SCALE = 1 << _BITS
CSV_HEADER = ("seed", "trials", "hits", "censored", "low", "high")


def wilson_interval(hits: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    if trials < 1 or not 0 <= hits <= trials:
        raise InputError("need 0 <= hits <= trials and trials >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = hits / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class SampleReport:
    trials: int
    hits: int
    censored: int
    horizon: int
    seed: int
    confidence: float = 0.99
    generator: str = GENERATOR

    @property
    def estimate(self) -> Fraction:
        return Fraction(self.hits, self.trials)

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.hits, self.trials, self.confidence)

    def merge(self, other: "SampleReport") -> "SampleReport":
        """Pool two reports with the same horizon; the seed of ``self`` is kept."""
        if other.horizon != self.horizon or other.confidence != self.confidence:
            raise InputError("reports with different horizons or confidence cannot be pooled")
        return SampleReport(self.trials + other.trials, self.hits + other.hits,
                            self.censored + other.censored, self.horizon, self.seed,
                            self.confidence, self.generator)

    def to_dict(self) -> dict:
        low, high = self.wilson
        return {"seed": self.seed, "generator": self.generator, "trials": self.trials,
                "hits": self.hits, "censored": self.censored, "horizon": self.horizon,
                "estimate": f"{self.hits}/{self.trials}", "confidence": self.confidence,
                "low": round(low, 6), "high": round(high, 6)}

    def csv_row(self) -> list:
        low, high = self.wilson
        return [self.seed, self.trials, self.hits, self.censored, f"{low:.6f}", f"{high:.6f}"]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def worker_streams(seed: int, workers: int) -> list[np.random.Generator]:
    """Independent generators for worker ``0..workers-1`` derived from ``seed``."""
    return [np.random.Generator(np.random.PCG64(s))
            for s in np.random.SeedSequence(seed).spawn(workers)]


def _pick(row, u: int):
    """Inverse CDF: first successor whose cumulative mass exceeds u / 2^53."""
    cum = Fraction(0)
    for s, p in row:
        cum += p
        if u * cum.denominator < cum.numerator * _SCALE:
            return s
    return row[-1][0]


def _sample(chain: EffectiveChain, s0, A, horizon: int, trials: int,
            rng: np.random.Generator) -> tuple[int, int]:
    hits = censored = 0
    for _ in range(trials):
        s, outcome = s0, "censored"
        for _ in range(horizon + 1):
            if s in A:
                outcome = "hit"
                break
            row = chain.successors(s)
            if len(row) == 1 and row[0][0] == s:
                outcome = "miss"
                break
            s = _pick(row, int(rng.integers(0, _SCALE)))
        hits += outcome == "hit"
        censored += outcome == "censored"
    return hits, censored


def estimate_reach(chain: EffectiveChain, s0, A, horizon: int, trials: int, seed: int,
                   workers: int = 1, confidence: float = 0.99) -> SampleReport:
    """Fraction of ``trials`` sampled paths of length <= ``horizon`` that visit A.

    A path trapped in an absorbing state outside A is a plain miss; any other
    path that is still outside A after ``horizon`` steps is censored.  Trials
    are split across ``workers`` streams so that results depend only on
    ``seed`` and ``workers``.
    """
    if horizon < 1 or trials < 1 or workers < 1:
        raise InputError("horizon, trials and workers must be at least 1")
    report = None
    for k, rng in enumerate(worker_streams(seed, workers)):
        share = trials // workers + (1 if k < trials % workers else 0)
        if not share:
            continue
        hits, censored = _sample(chain, s0, A, horizon, share, rng)
        part = SampleReport(share, hits, censored, horizon, seed, confidence)
        report = part if report is None else report.merge(part)
    return report


def _down_probabilities(dec: Polynomial, inc: Polynomial, top: int) -> np.ndarray:
    a, b = dec.coefficients(), inc.coefficients()
    out = np.zeros(top + 2)
    for k in range(1, top + 1):
        x = sum(c * k ** i for i, c in enumerate(a))
        y = sum(c * k ** i for i, c in enumerate(b))
        out[k] = x / (x + y)
    return out


def estimate_walk_reach(dec: Polynomial, inc: Polynomial, start: int, horizon: int,
                        trials: int, seed: int, confidence: float = 0.99) -> SampleReport:
    """Sampler for the single-counter walk moving down with odds dec(k) : inc(k).

    Instead of following walkers one by one, it tracks how many sit at each
    counter value and splits each group binomially at every step.  Walkers in
    the same place are exchangeable, so the hit count has exactly the law of
    ``trials`` independent paths.  Walkers above the number of remaining
    steps cannot reach 0 in time and are censored at once.
    """
    if horizon < 1 or trials < 1 or start < 0:
        raise InputError("horizon and trials must be at least 1, start non-negative")
    if start == 0:
        return SampleReport(trials, trials, 0, horizon, seed, confidence)
    rng = worker_streams(seed, 1)[0]
    down = _down_probabilities(dec, inc, start + horizon)
    counts = np.zeros(start + horizon + 3, dtype=np.int64)
    counts[start] = trials
    lo = hi = start
    hits = 0
    for step in range(horizon):
        window = counts[lo:hi + 1]
        d = rng.binomial(window, down[lo:hi + 1])
        u = window - d
        window[:] = 0
        counts[lo - 1:hi] += d
        counts[lo + 1:hi + 2] += u
        lo, hi = lo - 1, hi + 1
        if lo == 0:
            hits += int(counts[0])
            counts[0] = 0
            lo = 1
        remaining = horizon - step - 1
        if hi > remaining:
            counts[remaining + 1:hi + 1] = 0
            hi = remaining
        if step % 16 == 15 or hi < lo:
            occupied = np.flatnonzero(counts[lo:hi + 1])
            if not occupied.size:
                break
            lo, hi = lo + int(occupied[0]), lo + int(occupied[-1])
    return SampleReport(trials, hits, trials - hits, horizon, seed, confidence)
