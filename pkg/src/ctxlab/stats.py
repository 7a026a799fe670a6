"""One-pass central moments with exact pairwise merging, plus histograms."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


class Moments:
    """Running count, mean and central sums M2, M3, M4.

    ``update`` uses the Welford/Terriberry recurrences; ``merge`` combines
    two accumulators with the pairwise formulas (Chan et al., Pebay), so
    chunks reduced in any fixed tree give the single-pass result up to
    rounding.
    """

    __slots__ = ("n", "mean", "m2", "m3", "m4")

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0
        self.m3 = 0.0
        self.m4 = 0.0

    def update(self, x: float) -> None:
        n1 = self.n
        self.n += 1
        n = self.n
        delta = x - self.mean
        dn = delta / n
        dn2 = dn * dn
        term1 = delta * dn * n1
        self.mean += dn
        self.m4 += term1 * dn2 * (n * n - 3 * n + 3) + 6 * dn2 * self.m2 - 4 * dn * self.m3
        self.m3 += term1 * dn * (n - 2) - 3 * dn * self.m2
        self.m2 += term1

    @classmethod
    def of(cls, values) -> "Moments":
        acc = cls()
        for x in np.asarray(values, dtype=float):
            acc.update(float(x))
        return acc

    def merge(self, other: "Moments") -> "Moments":
        out = Moments()
        na, nb = self.n, other.n
        if na == 0:
            out.n, out.mean, out.m2, out.m3, out.m4 = other.n, other.mean, other.m2, other.m3, other.m4
            return out
        if nb == 0:
            out.n, out.mean, out.m2, out.m3, out.m4 = self.n, self.mean, self.m2, self.m3, self.m4
            return out
        n = na + nb
        delta = other.mean - self.mean
        d2 = delta * delta
        out.n = n
        out.mean = self.mean + delta * nb / n
        out.m2 = self.m2 + other.m2 + d2 * na * nb / n
        out.m3 = (self.m3 + other.m3 + d2 * delta * na * nb * (na - nb) / (n * n)
                  + 3 * delta * (na * other.m2 - nb * self.m2) / n)
        out.m4 = (self.m4 + other.m4
                  + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n ** 3)
                  + 6 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
                  + 4 * delta * (na * other.m3 - nb * self.m3) / n)
        return out

    @property
    def variance(self) -> float:
        """Population variance (second central moment)."""
        return self.m2 / self.n if self.n else float("nan")

    @property
    def skewness(self) -> float:
        return (self.m3 / self.n) / self.variance ** 1.5 if self.m2 > 0 else 0.0

    @property
    def kurtosis(self) -> float:
        """Standardized fourth moment m4/m2^2 (not excess)."""
        return (self.m4 / self.n) / self.variance ** 2 if self.m2 > 0 else 0.0


def merge_tree(parts: list[Moments]) -> Moments:
    """Deterministic pairwise reduction in list order."""
    if not parts:
        return Moments()
    level = list(parts)
    while len(level) > 1:
        nxt = [level[i].merge(level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    median: float
    fraction_above: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def summarize_values(values, threshold: float, moments: Moments | None = None) -> SummaryStats:
    """Summary of a sample; ``moments`` may be supplied from a streaming pass."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot summarize an empty sample")
    m = moments if moments is not None else Moments.of(values)
    return SummaryStats(
        mean=m.mean,
        variance=m.variance,
        skewness=m.skewness,
        kurtosis=m.kurtosis,
        median=float(np.median(values)),
        fraction_above=float(np.count_nonzero(values > threshold)) / values.size,
        n=int(values.size),
    )


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def density(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            return np.zeros(len(self.counts))
        return self.counts / (total * np.diff(self.edges))

    def rows(self):
        dens = self.density
        for k in range(len(self.counts)):
            yield float(self.edges[k]), float(self.edges[k + 1]), int(self.counts[k]), float(dens[k])


def histogram(values, bins: int, low: float, high: float, slack: float = 1e-6) -> Histogram:
    """Uniform bins on [low, high]; the last bin is closed on the right.

    Values within ``slack`` of the range are clipped in, so rounding right at
    an edge (e.g. C = 6 + 1e-16) cannot drop a count; anything further out
    is an error.
    """
    if bins < 1 or not low < high:
        raise ValueError("need bins >= 1 and low < high")
    values = np.asarray(values, dtype=float)
    if values.size and (values.min() < low - slack or values.max() > high + slack):
        raise ValueError(f"values outside histogram range [{low}, {high}]")
    values = np.clip(values, low, high)
    counts, edges = np.histogram(values, bins=bins, range=(low, high))
    return Histogram(edges, counts)
