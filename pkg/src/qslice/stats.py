"""Outcome-probability statistics for deep random circuits.

Ideal outcome probabilities of universal random circuits follow a
truncated exponential; with depolarizing fidelity ``alpha`` mixed in,
the log-transformed variable z = log(N q) follows a truncated Gumbel
density on 1 - alpha <= e^z <= 1 + (N - 1) alpha.  This module holds
the analytic family, histogram building, goodness of fit and a
maximum-likelihood fidelity estimator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

DEFAULT_BINS = 100
ALPHA_FLOOR = 1e-6


@dataclass(frozen=True)
class DistributionParams:
    """Outcome count N = 2^n and circuit fidelity alpha in (0, 1]."""

    n_outcomes: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.n_outcomes < 2:
            raise ValueError("n_outcomes must be at least 2")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")

    @property
    def z_support(self) -> tuple[float, float]:
        lo = -np.inf if self.alpha == 1 else np.log(1 - self.alpha)
        hi = np.log(1 + (self.n_outcomes - 1) * self.alpha)
        return lo, hi


@dataclass
class ZHistogram:
    """Equal-width histogram of z = log(N p) values."""

    bin_edges: np.ndarray
    counts: np.ndarray
    total: int
    excluded_zeros: int = 0

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if not np.all(np.diff(self.bin_edges) > 0):
            raise ValueError("bin edges must be strictly ascending")
        if self.counts.sum() != self.total:
            raise ValueError("counts must sum to total")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def normalized(self) -> np.ndarray:
        if self.total == 0:
            raise ValueError("empty histogram")
        return self.counts / self.total


@dataclass
class FitReport:
    tv_distance: float
    chi_square: float
    dof: int
    alpha_used: float
    excluded_zeros: int

    def to_json(self) -> dict:
        return {
            "tv_distance": self.tv_distance,
            "chi_square": self.chi_square,
            "dof": self.dof,
            "alpha_used": self.alpha_used,
            "excluded_zeros": self.excluded_zeros,
        }


@dataclass
class FidelityEstimate:
    alpha: float
    log_likelihood: float
    degenerate: bool = False


def porter_thomas_pdf(p, n_outcomes: int):
    """Truncated exponential density of outcome probabilities on [0, 1]."""
    if n_outcomes < 2:
        raise ValueError("n_outcomes must be at least 2")
    p = np.asarray(p, dtype=float)
    norm = -np.expm1(-n_outcomes)  # 1 - e^-N without underflow
    out = np.where(
        (p >= 0) & (p <= 1), n_outcomes * np.exp(-n_outcomes * p) / norm, 0.0
    )
    return out if out.ndim else float(out)


def noisy_prob(p, params: DistributionParams):
    """Measured probability at fidelity alpha: q = alpha p + (1 - alpha)/N."""
    p = np.asarray(p, dtype=float)
    out = params.alpha * p + (1 - params.alpha) / params.n_outcomes
    return out if out.ndim else float(out)


def gumbel_pdf(z, params: DistributionParams):
    """Density of z = log(N q): truncated Gumbel at alpha = 1."""
    z = np.asarray(z, dtype=float)
    a, n = params.alpha, params.n_outcomes
    ez = np.exp(z)
    norm = -np.expm1(-n)
    body = (1 / a) * np.exp(z - (ez + a - 1) / a) / norm
    out = np.where((ez >= 1 - a) & (ez <= 1 + (n - 1) * a), body, 0.0)
    return out if out.ndim else float(out)


def gumbel_cdf(z, params: DistributionParams):
    """Cumulative distribution of z = log(N q); 0 below, 1 above support."""
    z = np.asarray(z, dtype=float)
    a, n = params.alpha, params.n_outcomes
    ez = np.exp(z)
    norm = -np.expm1(-n)
    body = -np.expm1(-(ez + a - 1) / a) / norm
    out = np.where(ez < 1 - a, 0.0, np.where(ez > 1 + (n - 1) * a, 1.0, body))
    return out if out.ndim else float(out)


def gumbel_ppf(u, params: DistributionParams):
    """Inverse cdf; the sampling oracle for self-tests."""
    u = np.asarray(u, dtype=float)
    a, n = params.alpha, params.n_outcomes
    norm = -np.expm1(-n)
    x = -a * np.log1p(-u * norm) + 1 - a
    out = np.log(x)
    return out if out.ndim else float(out)


def log_transform(probabilities, n_outcomes: int) -> tuple[np.ndarray, int]:
    """z = ln(N p); zero probabilities are dropped and counted separately."""
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    zero = int(np.count_nonzero(p == 0))
    with np.errstate(divide="ignore"):
        z = np.log(n_outcomes * p[p > 0])
    return z, zero


def build_histogram(
    z, bins: int = DEFAULT_BINS, value_range: tuple[float, float] | None = None
) -> ZHistogram:
    """Equal-width histogram; default range [-14, ln N + 2] needs z data.

    With no explicit range the data's own maximum anchors the upper
    edge (samples live below ln N + 2 for any N of interest).
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    z = np.asarray(z, dtype=float)
    if value_range is None:
        hi = float(z.max()) + 1e-9 if z.size else 1.0
        value_range = (-14.0, max(hi, -13.0))
    counts, edges = np.histogram(z, bins=bins, range=value_range)
    return ZHistogram(edges, counts, int(counts.sum()))


def default_range(n_outcomes: int) -> tuple[float, float]:
    """The plotting range used for deep-circuit histograms."""
    return (-14.0, float(np.log(n_outcomes)) + 2.0)


def goodness_of_fit(h: ZHistogram, params: DistributionParams) -> FitReport:
    """Total-variation distance and chi-square against the analytic law.

    The theoretical bin masses come from the cdf; mass outside the
    histogram range counts toward the distance as unmatchable.
    """
    if h.total < 1:
        raise ValueError("histogram is empty")
    cdf = gumbel_cdf(h.bin_edges, params)
    theo = np.diff(cdf)
    outside = 1.0 - theo.sum()
    emp = h.normalized()
    tv = 0.5 * (np.abs(emp - theo).sum() + abs(outside))
    expected = theo * h.total
    mask = expected > 1e-9
    chi = float(((h.counts[mask] - expected[mask]) ** 2 / expected[mask]).sum())
    dof = int(mask.sum()) - 1
    return FitReport(
        tv_distance=float(tv),
        chi_square=chi,
        dof=max(dof, 0),
        alpha_used=params.alpha,
        excluded_zeros=h.excluded_zeros,
    )


def _log_likelihood(z: np.ndarray, ez: np.ndarray, alpha: float, n: int) -> float:
    lo, hi = 1 - alpha, 1 + (n - 1) * alpha
    if np.any(ez < lo) or np.any(ez > hi):
        return -np.inf
    norm = -np.expm1(-n)
    return float(
        np.sum(z - (ez + alpha - 1) / alpha) - z.size * (np.log(alpha) + np.log(norm))
    )


def estimate_fidelity(z, n_outcomes: int, tol: float = 1e-6) -> FidelityEstimate:
    """Maximum-likelihood alpha over the truncated Gumbel family.

    The stationary point is mean(e^z) - 1, projected into the feasible
    interval implied by the sample support; a bounded 1-D minimization
    polishes it to ``tol``.
    """
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("no samples")
    ez = np.exp(z)
    # feasibility: 1 - alpha <= min(e^z) and max(e^z) <= 1 + (N-1) alpha
    lo = max(ALPHA_FLOOR, (ez.max() - 1) / (n_outcomes - 1), 1 - ez.min())
    lo = min(lo, 1.0)
    if lo >= 1.0:
        alpha = 1.0
        return FidelityEstimate(
            alpha, _log_likelihood(z, ez, alpha, n_outcomes), degenerate=False
        )
    result = minimize_scalar(
        lambda a: -_log_likelihood(z, ez, a, n_outcomes),
        bounds=(lo, 1.0),
        method="bounded",
        options={"xatol": tol},
    )
    alpha = float(result.x)
    degenerate = bool(alpha <= max(lo, ALPHA_FLOOR) + 2 * tol and ez.std() < 1e-12)
    return FidelityEstimate(alpha, -float(result.fun), degenerate=degenerate)


def histogram_csv_rows(h: ZHistogram, params: DistributionParams):
    """Rows of ``bin_left,bin_right,count,theoretical_density``."""
    dens = gumbel_pdf(0.5 * (h.bin_edges[:-1] + h.bin_edges[1:]), params)
    for left, right, count, d in zip(
        h.bin_edges[:-1], h.bin_edges[1:], h.counts, dens
    ):
        yield f"{left:.17g},{right:.17g},{int(count)},{d:.17g}"
