import numpy as np
import pytest

from magsample import (
    DomainError,
    MagRange,
    ParameterError,
    SamplingDistribution,
    TabulatedKernel,
    accumulated_signal,
    entropy,
    mix,
    optimize_max_avg,
    optimize_max_min,
    regularized_objective,
    signal_summary,
)
from magsample.optimize import MAX_AVG_ENTROPY, MAX_MIN, OptimizationConfig

# Worst-case equalizer for the overlap kernel: in log-magnification the
# kernel is exp(-2|u - v|), whose equalizing distribution is flat plus
# boundary atoms, with worst-case value 1 / (1 + log(b/a)).
INFO_MAXMIN_T_ORACLE = 1.0 / (1.0 + np.log(8.0))


def _cfg(objective, kernel, grid_n=400, lam=1.0):
    return OptimizationConfig(
        objective=objective, kernel=kernel, mag_range=MagRange(), grid_n=grid_n, lam=lam
    )


def test_config_validation(info_kernel):
    with pytest.raises(ParameterError):
        OptimizationConfig(objective="fastest", kernel=info_kernel)
    with pytest.raises(ParameterError):
        OptimizationConfig(objective=MAX_MIN, kernel=info_kernel, grid_n=5)
    for lam in (0.0, -1.0):
        with pytest.raises(ParameterError):
            OptimizationConfig(objective=MAX_AVG_ENTROPY, kernel=info_kernel, lam=lam)


def test_objective_mismatch_rejected(info_kernel):
    with pytest.raises(ParameterError):
        optimize_max_avg(_cfg(MAX_MIN, info_kernel))
    with pytest.raises(ParameterError):
        optimize_max_min(_cfg(MAX_AVG_ENTROPY, info_kernel))


# -- entropy -------------------------------------------------------------------


def test_entropy_uniform(mag_range):
    u = SamplingDistribution.uniform(mag_range, 50)
    assert entropy(u) == pytest.approx(np.log(1.75), abs=1e-12)


def test_entropy_unit_width_uniform():
    u = SamplingDistribution.uniform(MagRange(0.5, 1.5), 10)
    assert entropy(u) == pytest.approx(0.0, abs=1e-12)


def test_entropy_rejects_atoms(du_dist, mag_range):
    with pytest.raises(DomainError):
        entropy(du_dist)
    mixed = SamplingDistribution(mag_range, atoms=[(1.0, 0.5)], density=[1.0])
    with pytest.raises(DomainError):
        entropy(mixed)


def test_entropy_handles_zero_cells(mag_range):
    d = SamplingDistribution.from_density(mag_range, [1.0, 0.0, 1.0, 0.0])
    v = 1.0 / (2 * (1.75 / 4))  # two live cells
    assert entropy(d) == pytest.approx(-np.log(v), abs=1e-12)


# -- max-average (Gibbs) ---------------------------------------------------------


def test_gibbs_large_lambda_is_nearly_uniform(info_kernel):
    dist = optimize_max_avg(_cfg(MAX_AVG_ENTROPY, info_kernel, grid_n=1000, lam=100.0))
    assert np.max(np.abs(dist.density - 1.0 / 1.75)) < 0.005


def test_gibbs_density_ratio_matches_closed_form(info_kernel, mag_range):
    dist = optimize_max_avg(_cfg(MAX_AVG_ENTROPY, info_kernel, grid_n=1000, lam=1.0))
    ratio = dist.density_at(1.338) / dist.density_at(0.25)
    formula = np.exp(
        info_kernel.transfer_potential(1.338, mag_range)
        - info_kernel.transfer_potential(0.25, mag_range)
    )
    assert ratio == pytest.approx(formula, abs=0.01)
    assert ratio == pytest.approx(1.949, abs=0.01)


def test_gibbs_constant_kernel_is_uniform():
    xs = np.linspace(0.25, 2.0, 6)
    const = TabulatedKernel(xs, xs, np.full((6, 6), 0.37))
    for lam in (0.2, 1.0, 10.0):
        dist = optimize_max_avg(_cfg(MAX_AVG_ENTROPY, const, grid_n=100, lam=lam))
        assert np.max(np.abs(dist.density - dist.density[0])) < 1e-12


def test_gibbs_entropy_below_uniform(info_kernel, mag_range):
    gibbs = optimize_max_avg(_cfg(MAX_AVG_ENTROPY, info_kernel, lam=1.0))
    assert entropy(gibbs) < np.log(1.75)


def test_gibbs_beats_random_densities(info_kernel, abs_kernel, mag_range):
    g = np.random.default_rng(41)
    for kernel in (info_kernel, abs_kernel):
        for lam in (0.5, 1.0):
            cfg = _cfg(MAX_AVG_ENTROPY, kernel, grid_n=200, lam=lam)
            best = regularized_objective(optimize_max_avg(cfg), cfg)
            for _ in range(100):
                rand = SamplingDistribution(mag_range, density=g.random(200) + 1e-3)
                assert best >= regularized_objective(rand, cfg) - 1e-6


def test_gibbs_beats_uniform(info_kernel, mag_range):
    cfg = _cfg(MAX_AVG_ENTROPY, info_kernel, lam=1.0)
    gibbs = optimize_max_avg(cfg)
    uniform = SamplingDistribution.uniform(mag_range, cfg.grid_n)
    assert regularized_objective(gibbs, cfg) >= regularized_objective(uniform, cfg)


def test_gibbs_flattens_monotonically_in_lambda(info_kernel):
    devs = []
    for lam in (0.1, 0.5, 1.0, 5.0, 100.0):
        dist = optimize_max_avg(_cfg(MAX_AVG_ENTROPY, info_kernel, lam=lam))
        devs.append(np.max(np.abs(dist.density - 1.0 / 1.75)))
    assert all(b <= a + 1e-12 for a, b in zip(devs, devs[1:]))


# -- max-min ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def maxmin_info(info_kernel):
    return optimize_max_min(
        OptimizationConfig(objective=MAX_MIN, kernel=info_kernel, grid_n=200)
    )


def test_maxmin_feasibility(maxmin_info, info_kernel):
    sol = maxmin_info
    dist = sol.distribution
    assert dist.has_density and not dist.has_atoms
    assert np.all(dist.density >= 0.0)
    assert abs(dist.density.sum() * dist.cell_width - 1.0) <= 1e-9
    mids = dist.cell_midpoints()
    K = info_kernel(mids[:, None], mids[None, :])
    signal = K @ (dist.density * dist.cell_width)
    assert np.all(signal >= sol.achieved_t - 1e-7)


def test_maxmin_certificate(maxmin_info):
    assert 0.0 <= maxmin_info.certificate_gap < 1e-6
    assert maxmin_info.achieved_t == pytest.approx(INFO_MAXMIN_T_ORACLE, abs=0.005)


def test_maxmin_active_set_spans_grid(maxmin_info):
    active = maxmin_info.active_set
    assert active.size > 0
    assert active.max() - active.min() > 100  # equalized across the whole range


def test_maxmin_dominates_other_strategies(maxmin_info, info_kernel, mag_range, du_dist):
    competitors = [
        SamplingDistribution.uniform(mag_range),
        du_dist,
        optimize_max_avg(_cfg(MAX_AVG_ENTROPY, info_kernel, grid_n=200, lam=0.5)),
        optimize_max_avg(_cfg(MAX_AVG_ENTROPY, info_kernel, grid_n=200, lam=1.0)),
    ]
    for c in competitors:
        assert maxmin_info.achieved_t > accumulated_signal(c, info_kernel, 200).min_value


def test_maxmin_oversamples_boundaries(info_kernel, abs_kernel):
    for kernel in (info_kernel, abs_kernel):
        sol = optimize_max_min(
            OptimizationConfig(objective=MAX_MIN, kernel=kernel, grid_n=200)
        )
        d = sol.distribution.density
        tenth = d.size // 10
        outer = 0.5 * (d[:tenth].mean() + d[-tenth:].mean())
        center = d[d.size // 2 - tenth // 2 : d.size // 2 + tenth // 2 + 1].mean()
        assert outer > 1.5 * center


def test_maxmin_signal_nearly_flat(maxmin_info, info_kernel):
    profile = accumulated_signal(maxmin_info.distribution, info_kernel, 200)
    assert profile.values.max() - profile.values.min() < 0.05 * profile.values.min()


def test_regularized_objective_is_signal_plus_entropy(info_kernel, mag_range):
    cfg = _cfg(MAX_AVG_ENTROPY, info_kernel, grid_n=100, lam=2.0)
    d = SamplingDistribution.uniform(mag_range, 100)
    from magsample import total_signal

    expected = total_signal(d, info_kernel) + 2.0 * entropy(d)
    assert regularized_objective(d, cfg) == pytest.approx(expected, abs=1e-12)
