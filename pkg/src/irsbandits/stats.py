"""Order-independent mean and standard-error reductions."""

import math
from dataclasses import dataclass

import numpy as np


def mean_and_se(values):
    """Sample mean and sample-stddev / sqrt(n), both from exactly rounded sums."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    mean = math.fsum(values) / n
    if n < 2:
        return mean, float("nan")
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def paired_gap(a, b):
    """Mean of a - b and its standard error from the paired differences."""
    return mean_and_se(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))


@dataclass
class RunningStats:
    """Mergeable count / mean / M2 accumulator (Welford updates, Chan merges)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def extend(self, values):
        for x in values:
            self.push(float(x))
        return self

    def merge(self, other: "RunningStats") -> "RunningStats":
        n = self.count + other.count
        if n == 0:
            return RunningStats()
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2)

    @property
    def variance(self):
        return self.m2 / (self.count - 1) if self.count > 1 else float("nan")

    @property
    def std_error(self):
        return math.sqrt(self.variance / self.count) if self.count > 1 else float("nan")
