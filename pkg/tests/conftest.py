import numpy as np
import pytest

from magsample import (
    AbsDistanceKernel,
    InfoOverlapKernel,
    MagRange,
    SamplingDistribution,
)

STANDARDS = (0.25, 0.5, 1.0, 2.0)


@pytest.fixture(scope="session")
def mag_range():
    return MagRange()


@pytest.fixture(scope="session")
def info_kernel():
    return InfoOverlapKernel()


@pytest.fixture(scope="session")
def abs_kernel():
    return AbsDistanceKernel()


@pytest.fixture()
def du_dist(mag_range):
    return SamplingDistribution.discrete(mag_range, STANDARDS)


@pytest.fixture()
def cu_dist(mag_range):
    return SamplingDistribution.uniform(mag_range)


def quadrature_potential(kernel_fn, a, b, x, intervals=100_000):
    """Independent transfer-potential oracle: composite trapezoid of the raw
    kernel formula on a dense uniform grid."""
    ys = np.linspace(a, b, intervals + 1)
    return float(np.trapezoid(kernel_fn(x, ys), ys))


def raw_abs_kernel(x, y):
    return 1.0 / (1.0 + np.abs(np.asarray(x) - np.asarray(y)))


def raw_info_kernel(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    return (np.minimum(x, y) / np.maximum(x, y)) ** 2


def chi_square_gof(dist, samples, bins=20, alpha=1e-3):
    """Chi-square goodness-of-fit of samples against a distribution.

    Expected bin masses come from the exact CDF. Adjacent bins with an
    expected count below 5 are pooled (Cochran's rule) before computing the
    statistic. Returns (statistic, critical value, pooled bin count).
    """
    from scipy.stats import chi2

    samples = np.asarray(samples)
    edges = np.linspace(dist.range.a, dist.range.b, bins + 1)
    expected = dist.bin_masses(edges) * samples.size
    idx = np.clip(np.searchsorted(edges, samples, side="right") - 1, 0, bins - 1)
    observed = np.bincount(idx, minlength=bins).astype(float)

    pooled = []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= 5.0:
            pooled.append((acc_e, acc_o))
            acc_e = acc_o = 0.0
    if acc_e > 0 or acc_o > 0:
        if pooled:
            last_e, last_o = pooled.pop()
            pooled.append((last_e + acc_e, last_o + acc_o))
        else:
            pooled.append((acc_e, acc_o))
    exp = np.array([p[0] for p in pooled])
    obs = np.array([p[1] for p in pooled])
    stat = float(np.sum((obs - exp) ** 2 / exp))
    crit = float(chi2.ppf(1.0 - alpha, len(pooled) - 1))
    return stat, crit, len(pooled)
