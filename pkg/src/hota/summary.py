"""Summary statistics over posterior sample sets.

Quantiles use the median-unbiased interpolation rule so results are
reproducible across implementations; the HPD interval is the shortest
window of order statistics containing the requested mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .errors import ValidationError

_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class SummaryReport:
    mean: float
    sd: float
    q025: float
    median: float
    q975: float
    hpd: tuple[float, float]
    T: int
    level: float = 0.95

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "q025": self.q025,
            "median": self.median,
            "q975": self.q975,
            "hpd": [self.hpd[0], self.hpd[1]],
            "T": self.T,
        }


def _draws(samples) -> np.ndarray:
    x = getattr(samples, "draws", samples)
    return np.asarray(x, dtype=float).ravel()


def hpd_interval(sorted_draws: np.ndarray, level: float) -> tuple[float, float]:
    """Shortest interval spanning ceil(level * T) order statistics."""
    T = sorted_draws.size
    m = min(T, max(1, ceil(level * T)))
    widths = sorted_draws[m - 1:] - sorted_draws[: T - m + 1]
    i = int(np.argmin(widths))
    return float(sorted_draws[i]), float(sorted_draws[i + m - 1])


def summarize(samples, level: float = 0.95) -> SummaryReport:
    """Mean, sd (ddof=1), quantiles, and the HPD interval of a sample set."""
    x = _draws(samples)
    if x.size < 100:
        raise ValidationError(f"need at least 100 samples, got {x.size}")
    if not 0.0 < level <= 1.0:
        raise ValidationError("level must be in (0, 1]")
    xs = np.sort(x)
    q025, med, q975 = np.quantile(xs, [0.025, 0.5, 0.975], method="median_unbiased")
    return SummaryReport(
        mean=float(np.mean(xs)),
        sd=float(np.std(xs, ddof=1)),
        q025=float(q025),
        median=float(med),
        q975=float(q975),
        hpd=hpd_interval(xs, level),
        T=int(xs.size),
        level=float(level),
    )


def _kde_values(x: np.ndarray, grid: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian kernel density of sample x on grid, evaluated in blocks to
    keep the (grid x sample) buffer small."""
    dens = np.empty(grid.size)
    for start in range(0, grid.size, 32):
        block = grid[start:start + 32, None]
        z = (block - x[None, :]) / bandwidth
        dens[start:start + 32] = np.exp(-0.5 * z * z).sum(axis=1)
    return dens / (x.size * bandwidth * _SQRT_2PI)


def normal_reference_bandwidth(x: np.ndarray) -> float:
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    iqr = float(q75 - q25)
    sigma = min(sd, iqr / 1.34) if iqr > 0 else sd
    if sigma <= 0:
        raise ValidationError("sample is degenerate; no density estimate")
    return 1.06 * sigma * x.size ** (-0.2)


def kde(samples, n_eval: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-kernel density estimate on an equispaced grid.

    The grid covers the sample range extended by four bandwidths on each
    side so the estimate integrates to one.
    """
    x = _draws(samples)
    if x.size < 100:
        raise ValidationError(f"need at least 100 samples, got {x.size}")
    h = normal_reference_bandwidth(x)
    grid = np.linspace(x.min() - 4.0 * h, x.max() + 4.0 * h, int(n_eval))
    return grid, _kde_values(x, grid, h)


def kde_on_grid(samples, grid: np.ndarray) -> np.ndarray:
    """Density values on a caller-supplied grid (for aligned overlays)."""
    x = _draws(samples)
    return _kde_values(x, np.asarray(grid, dtype=float), normal_reference_bandwidth(x))
