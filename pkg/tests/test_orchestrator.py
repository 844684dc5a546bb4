"""Tests for metrics aggregation, design, and the strategy distribution."""

import math

import numpy as np
import pytest

from edgemig.errors import DomainError, IncompleteMetricsError
from edgemig.model import (
    BYTES_PER_S_PER_MBPS,
    ModelParams,
    MsProfile,
    StrategyKind,
    cold_kpis,
    min_bandwidth,
    precopy_kpis,
)
from edgemig.orchestrator import (
    AgentReport,
    BandwidthDistribution,
    MetricsView,
    MigrationTask,
    Objective,
    aggregate,
    design,
    strategy_distribution,
)

M = 10_485_760
GBPS = 1000.0 * BYTES_PER_S_PER_MBPS
PROFILE = MsProfile(state_size_bytes=M, dirty_rate_norm=4 / 2559)
PARAMS = ModelParams(
    ckpt_fixed_s=0.5, pre_ckpt_fixed_s=0.5, restore_fixed_s=0.35,
    transfer_signaling_s=0.003, ns_overhead_s=0.085, flow_update_s=0.004)


def md_task(target=5.0):
    return MigrationTask(container_id="ms-0", source_agent="a",
                         destination_agent="b",
                         objective=Objective.MINIMIZE_DOWNTIME,
                         target_duration_s=target)


def mr_task(target=1.2):
    return MigrationTask(container_id="ms-0", source_agent="a",
                         destination_agent="b",
                         objective=Objective.MINIMIZE_RESOURCES,
                         target_downtime_s=target)


def view(bw=GBPS):
    return MetricsView(profile=PROFILE, params=PARAMS,
                       available_bandwidth_bytes_per_s=bw)


# ---------------------------------------------------------------------------
# Task validation


def test_task_requires_matching_target():
    with pytest.raises(DomainError):
        MigrationTask(container_id="c", source_agent="a",
                      destination_agent="b",
                      objective=Objective.MINIMIZE_DOWNTIME)
    with pytest.raises(DomainError):
        MigrationTask(container_id="c", source_agent="a",
                      destination_agent="b",
                      objective=Objective.MINIMIZE_RESOURCES,
                      target_downtime_s=-1.0)
    with pytest.raises(DomainError):
        MigrationTask(container_id="c", source_agent="a",
                      destination_agent="a",
                      objective=Objective.MINIMIZE_RESOURCES,
                      target_downtime_s=1.0)


# ---------------------------------------------------------------------------
# Aggregation


def test_aggregate_takes_newest_pieces():
    stale_profile = MsProfile(state_size_bytes=1, dirty_rate_norm=0.5)
    reports = [
        AgentReport("a", 10.0, profile=stale_profile,
                    bandwidth_to={"b": 1.0}),
        AgentReport("a", 20.0, profile=PROFILE, bandwidth_to={"b": GBPS}),
        AgentReport("b", 15.0, params=PARAMS),
        AgentReport("c", 99.0, params=ModelParams()),  # bystander
    ]
    got = aggregate(reports, md_task())
    assert got.profile == PROFILE
    assert got.params == PARAMS
    assert got.available_bandwidth_bytes_per_s == GBPS
    assert not got.stale  # now defaults to the newest used timestamp


def test_aggregate_reports_missing_pieces():
    reports = [AgentReport("a", 1.0, profile=PROFILE)]
    with pytest.raises(IncompleteMetricsError) as err:
        aggregate(reports, md_task())
    text = str(err.value)
    assert "destination params" in text and "bandwidth estimate" in text


def test_aggregate_marks_stale_views():
    reports = [
        AgentReport("a", 0.0, profile=PROFILE, bandwidth_to={"b": GBPS}),
        AgentReport("b", 200.0, params=PARAMS),
    ]
    got = aggregate(reports, md_task(), now_s=200.0, staleness_horizon_s=60.0)
    assert got.stale
    fresh = aggregate(reports, md_task(), now_s=200.0,
                      staleness_horizon_s=500.0)
    assert not fresh.stale


# ---------------------------------------------------------------------------
# Design


def test_design_minimize_resources_allocates_exactly():
    config = design(mr_task(1.2), view())
    assert config.strategy.kind is StrategyKind.COLD
    assert config.target_met
    expected = min_bandwidth(PROFILE, PARAMS, 1.2, GBPS)
    assert config.bandwidth_bytes_per_s == pytest.approx(expected, rel=1e-12)
    assert config.predicted.downtime_s == pytest.approx(1.2, rel=1e-9)


def test_design_minimize_resources_infeasible_falls_back():
    config = design(mr_task(0.5), view())  # below the fixed-cost floor
    assert config.strategy.kind is StrategyKind.COLD
    assert not config.target_met
    assert config.bandwidth_bytes_per_s == GBPS
    assert config.predicted.downtime_s == pytest.approx(
        cold_kpis(PROFILE, PARAMS, GBPS).downtime_s, rel=1e-12)


def test_design_minimize_downtime_maximizes_iterations():
    config = design(md_task(5.0), view())
    assert config.strategy.kind is StrategyKind.ITERATIVE_PRE_COPY
    assert config.strategy.iterations == 6
    assert config.target_met
    assert config.bandwidth_bytes_per_s == GBPS
    assert config.predicted.total_s == pytest.approx(
        precopy_kpis(PROFILE, PARAMS, GBPS, 6).total_s, rel=1e-12)
    assert config.predicted.total_s <= 5.0


def test_design_minimize_downtime_infeasible_falls_back_cold():
    config = design(md_task(1.0), view())
    assert config.strategy.kind is StrategyKind.COLD
    assert not config.target_met
    assert config.bandwidth_bytes_per_s == GBPS


def test_design_is_pure():
    task, metrics = md_task(5.0), view()
    assert design(task, metrics) == design(task, metrics)


# ---------------------------------------------------------------------------
# Bandwidth distribution


def test_distribution_zero_std_is_a_point_mass():
    dist = BandwidthDistribution.from_mean_std(GBPS, 0.0)
    draws = dist.sample(100, seed=1)
    assert np.all(draws == GBPS)


def test_distribution_respects_truncation():
    dist = BandwidthDistribution.from_mean_std(GBPS, GBPS / 10)
    draws = dist.sample(10_000, seed=2)
    assert draws.min() >= dist.lower_bytes_per_s
    assert draws.max() <= dist.upper_bytes_per_s
    assert abs(np.mean(draws) - GBPS) < GBPS / 50  # loose sanity check


def test_distribution_sampling_is_deterministic():
    dist = BandwidthDistribution.from_mean_std(GBPS, GBPS / 10)
    assert np.array_equal(dist.sample(50, seed=3), dist.sample(50, seed=3))
    assert not np.array_equal(dist.sample(50, seed=3), dist.sample(50, seed=4))


def test_distribution_validation():
    with pytest.raises(DomainError):
        BandwidthDistribution.from_mean_std(-1.0, 1.0)
    with pytest.raises(DomainError):
        BandwidthDistribution.from_mean_std(GBPS, -1.0)
    with pytest.raises(DomainError):
        BandwidthDistribution(mean_bytes_per_s=GBPS, std_bytes_per_s=1.0,
                              lower_bytes_per_s=10.0, upper_bytes_per_s=5.0)
    dist = BandwidthDistribution.from_mean_std(GBPS, 1.0)
    with pytest.raises(DomainError):
        dist.sample(0, seed=1)


# ---------------------------------------------------------------------------
# Strategy distribution


def test_strategy_distribution_point_mass():
    dist = BandwidthDistribution.from_mean_std(GBPS, 0.0)
    got = strategy_distribution(md_task(5.0), PROFILE, PARAMS, dist,
                                sample_count=200, seed=0)
    assert got.strategy_probs["iterative_precopy"] == 1.0
    assert got.strategy_probs["cold"] == 0.0
    assert got.strategy_probs["precopy"] == 0.0
    assert got.iteration_pmf == {6: 1.0}


def test_strategy_distribution_probabilities_are_consistent():
    dist = BandwidthDistribution.from_mean_std(GBPS, GBPS / 5)
    got = strategy_distribution(md_task(2.2), PROFILE, PARAMS, dist,
                                sample_count=4000, seed=11)
    total = math.fsum(got.strategy_probs.values())
    assert total == pytest.approx(1.0, abs=1e-12)
    pmf_mass = math.fsum(got.iteration_pmf.values())
    assert abs(pmf_mass - got.strategy_probs["iterative_precopy"]) < 1e-12
    assert all(0.0 <= p <= 1.0 for p in got.strategy_probs.values())
    assert got.sample_count == 4000


def test_strategy_distribution_couples_across_targets():
    """Same seed per target point: cold probability cannot rise with slack."""
    dist = BandwidthDistribution.from_mean_std(GBPS, GBPS / 5)
    targets = np.linspace(1.4, 6.0, 8)
    p_cold, p_iter = [], []
    for theta in targets:
        got = strategy_distribution(md_task(float(theta)), PROFILE, PARAMS,
                                    dist, sample_count=500, seed=21)
        p_cold.append(got.strategy_probs["cold"])
        p_iter.append(got.strategy_probs["iterative_precopy"])
    assert all(b <= a + 1e-15 for a, b in zip(p_cold, p_cold[1:]))
    assert all(b >= a - 1e-15 for a, b in zip(p_iter, p_iter[1:]))
