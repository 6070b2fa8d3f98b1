from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adrsim import Scenario, metrics, run
from adrsim.phy import LossReason
from adrsim.sim import Injection
from adrsim.sim import kernel as K

DAY = 86_400.0


def _rx(times, dev=0, reason=LossReason.NONE, **kw):
    return [dict(t=t, dev=dev, reason=reason, **kw) for t in times]


class TestConvergence:
    def test_nth_reception_defines_convergence(self, trace_factory):
        ups = _rx([100.0 + 600.0 * k for k in range(25)])
        tr = trace_factory(ups, injections=[(0.0, 0)])
        rec = metrics.convergence_time(tr, 0)
        assert rec.converged
        assert rec.converged_rx_time == pytest.approx(tr.uplinks["end"][19])
        assert rec.convergence_minutes == pytest.approx(tr.uplinks["end"][19] / 60.0)

    def test_nineteen_receptions_not_converged(self, trace_factory):
        ups = _rx([600.0 * k for k in range(1, 20)]) + _rx([12_500.0, 13_000.0], reason=LossReason.COLLISION)
        rec = metrics.convergence_time(trace_factory(ups, injections=[(0.0, 0)]), 0)
        assert not rec.converged and rec.convergence_minutes is None

    def test_anchor_at_trace_end(self, trace_factory):
        tr = trace_factory(_rx([10.0, 20.0]), injections=[(DAY, 0)], duration=DAY)
        assert not metrics.convergence_time(tr, 0).converged

    def test_lost_uplinks_ignored(self, trace_factory):
        ups = _rx([50.0 * k for k in range(1, 41)])
        for k in range(0, 40, 2):
            ups[k]["reason"] = LossReason.UNDER_SENSITIVITY
        rec = metrics.convergence_time(trace_factory(ups, injections=[(0.0, 0)]), 0)
        assert rec.converged_rx_time == pytest.approx(2000.0 + 0.056576, abs=1e-6)

    def test_applied_time(self, trace_factory):
        ups = _rx([60.0 * k for k in range(1, 21)])
        ev = [(1300.0, 0, K.ADR_APPLIED, 9, 4), (900.0, 0, K.ADR_APPLIED, 10, 4)]
        ev.sort()
        rec = metrics.convergence_time(trace_factory(ups, injections=[(0.0, 0)], adr_events=ev), 0)
        assert rec.applied_minutes == pytest.approx(1300.0 / 60.0)

    def test_unknown_device_and_anchor(self, trace_factory):
        tr = trace_factory(_rx([1.0]), injections=[(0.0, 0)])
        with pytest.raises(KeyError):
            metrics.convergence_time(tr, 3)
        with pytest.raises(KeyError):
            metrics.convergence_time(tr, 0, anchor=5.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-1e5, 1e5))
    def test_translation_invariance(self, delta):
        from conftest import make_trace

        tr = make_trace(_rx([30.0 * k for k in range(1, 30)]), injections=[(15.0, 0)])
        a = metrics.convergence_time(tr, 0).convergence_minutes
        b = metrics.convergence_time(tr.shifted(delta), 0).convergence_minutes
        assert a == pytest.approx(b, abs=1e-6)

    def test_lone_device_perfect_link_about_200_minutes(self):
        vals = []
        for seed in range(50):
            s = Scenario(n_devices=1, fixed_distance_m=100.0, sim_duration_s=2 * DAY, seed=seed,
                         injections=(Injection(time=DAY / 2, delta_db=0.0, devices=(0,)),))
            vals.append(metrics.convergence_all(run(s))[0].convergence_minutes)
        assert 180 <= np.mean(vals) <= 220


class TestEnergy:
    def test_single_sf7_uplink(self, trace_factory):
        tr = trace_factory(_rx([10.0]))
        rec = metrics.energy(tr, 0)
        assert rec.joules * 1e3 == pytest.approx(8.215, abs=1e-3)
        assert rec.transmissions == 1

    def test_zero_transmissions(self, trace_factory):
        assert metrics.energy(trace_factory([]), 0).joules == 0.0

    def test_lost_attempts_count(self, trace_factory):
        one = metrics.energy(trace_factory(_rx([10.0])), 0).joules
        two = metrics.energy(trace_factory(_rx([10.0]) + _rx([20.0], reason=LossReason.COLLISION)), 0).joules
        assert two == pytest.approx(2 * one)

    def test_reversed_interval_rejected(self, trace_factory):
        with pytest.raises(ValueError):
            metrics.energy(trace_factory([]), 0, (5.0, 1.0))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(0, 1e4), max_size=30), st.floats(0, 1e4), st.floats(0, 1e4))
    def test_additive_over_disjoint_intervals(self, times, a, b):
        from conftest import make_trace

        lo, hi = sorted((a, b))
        tr = make_trace(_rx(sorted(times), sf=9, tpi=2))
        whole = metrics.energy(tr, 0, (0.0, 2e4)).joules
        parts = sum(metrics.energy(tr, 0, iv).joules for iv in ((0.0, lo), (lo, hi), (hi, 2e4)))
        assert whole == pytest.approx(parts)


class TestLoss:
    def test_partition_of_frames(self, trace_factory):
        ups = [
            dict(t=1.0, fcnt=0, reason=LossReason.NONE),
            dict(t=2.0, fcnt=1, reason=LossReason.COLLISION),
            dict(t=3.0, fcnt=2, reason=LossReason.UNDER_SENSITIVITY, confirmed=True),
            dict(t=9.0, fcnt=2, attempt=2, reason=LossReason.NONE, confirmed=True),
            dict(t=20.0, fcnt=3, reason=LossReason.GATEWAY_BUSY, confirmed=True),
            dict(t=25.0, fcnt=3, attempt=2, reason=LossReason.COLLISION, confirmed=True),
            dict(t=30.0, fcnt=4, reason=LossReason.GATEWAY_BUSY),
        ]
        lb = metrics.loss_breakdown(trace_factory(ups))
        assert lb.total == 5
        assert lb.counts == {"received": 2, "collision": 1, "under_sensitivity": 0, "gateway_busy": 1, "no_ack": 1}
        assert sum(lb.percentages.values()) == pytest.approx(100.0)

    def test_lone_device_good_link_no_loss(self):
        tr = run(Scenario(n_devices=1, fixed_distance_m=100.0, sim_duration_s=2 * DAY))
        assert metrics.loss_breakdown(tr).percent("received") == 100.0

    def test_partition_on_real_trace(self):
        tr = run(Scenario(n_devices=200, sim_duration_s=DAY / 2, confirmed_fraction=0.5, sigma_db=3.57, seed=3))
        lb = metrics.loss_breakdown(tr)
        frames = len(np.unique(tr.uplinks["dev"].astype(np.int64) << 32 | tr.uplinks["fcnt"]))
        assert lb.total == frames == sum(lb.counts.values())


class TestAggregate:
    def test_constant(self):
        agg = metrics.aggregate([5, 5, 5])
        assert (agg.mean, agg.std, agg.count) == (5.0, 0.0, 3)

    def test_two_values(self):
        agg = metrics.aggregate([1, 3])
        assert agg.mean == 2.0 and agg.std == pytest.approx(math.sqrt(2))

    def test_single(self):
        assert metrics.aggregate([7.5]) == metrics.Aggregate(7.5, 0.0, 1)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            metrics.aggregate([])

    def test_nan_skipped(self):
        assert metrics.aggregate([1.0, math.nan, 3.0]).count == 2


def test_summary_keys_and_non_converged_split():
    s = Scenario(n_devices=1, fixed_distance_m=40.0, sim_duration_s=2.5 * DAY,
                 injections=(Injection(time=2 * DAY, delta_db=40.0, devices=(0,)),))
    out = metrics.summarize(run(s))
    assert out["converged"] == 0 and out["non_converged"] == 1
    assert math.isnan(out["convergence_min"])
    assert {"energy_mj", "collision_pct", "no_ack_pct"} <= set(out)
