import math

import numpy as np
import pytest
from hypothesis import given, settings

from honestflow import (
    Billiard,
    BoundaryRule,
    BoundaryVector,
    Expansion,
    ParticleEnsemble,
    PiecewiseDensity,
    VelocitySpec,
    absorption_rate_estimate,
    defect,
    ensemble_trace_decay,
    flux_gap,
    honesty_on_interval,
    mass_defect_estimate,
    mass_loss,
    resolvent_defect,
    sample_ensemble,
    sufficient_honesty_check,
    transport_ensemble,
)

from conftest import dyadics


class TestFluxGap:
    def test_conservative_shift_gap_zero(self, unit_ladder, shift_rule):
        tr = BoundaryVector("outgoing", ((0, 2.0), (3, 0.5)))
        assert flux_gap(tr, shift_rule, unit_ladder) == 0.0

    def test_scaled_shift_gap(self, unit_ladder):
        rule = BoundaryRule("shift", scale=0.5)
        tr = BoundaryVector("outgoing", ((0, 2.0),))
        assert flux_gap(tr, rule, unit_ladder) == pytest.approx(1.0, abs=1e-15)

    def test_zero_trace(self, unit_ladder, shift_rule):
        assert flux_gap(BoundaryVector("outgoing"), shift_rule, unit_ladder) == 0.0

    def test_incoming_trace_rejected(self, unit_ladder, shift_rule):
        with pytest.raises(ValueError):
            flux_gap(BoundaryVector("incoming", ((0, 1.0),)), shift_rule, unit_ladder)


class TestDefect:
    def test_honest_ladder_full_window(self, unit_ladder, unit_box, shift_rule):
        rep = defect(0.0, 5.0, unit_box, unit_ladder, shift_rule, tol=1e-10)
        assert rep.stabilized
        assert rep.verdict == "honest"
        assert rep.limit_estimate == 0.0

    def test_plateau_does_not_fool_the_stop_rule(self, unit_ladder, unit_box, shift_rule):
        # entries sit at exactly 1.0 for ten orders (each order's trace
        # sweeps one full transit inside the window) before dropping to an
        # exact 0: the stop rule must ride out the plateau because the
        # arrival times keep marching
        rep = defect(0.0, 10.0, unit_box, unit_ladder, shift_rule, tol=1e-10)
        assert rep.verdict == "honest"
        assert rep.limit_estimate == 0.0
        assert len(rep.entries) == 11
        assert all(e == pytest.approx(1.0, abs=1e-12) for e in rep.entries[:10])
        assert rep.entries[-1] == 0.0

    def test_dishonest_ladder_limit(self, geometric_ladder, geo_box, shift_rule):
        rep = defect(0.0, 1.5, geo_box, geometric_ladder, shift_rule, tol=1e-10)
        assert rep.verdict == "dishonest"
        assert rep.limit_estimate == pytest.approx(0.5, abs=1e-10)

    def test_zero_density_honest(self, unit_ladder, shift_rule):
        rep = defect(0.0, 3.0, PiecewiseDensity.zero(), unit_ladder, shift_rule)
        assert rep.verdict == "honest"
        assert rep.entries == (0.0,)

    def test_entries_nonincreasing(self, unit_ladder, unit_box, geometric_ladder, geo_box, shift_rule):
        # conservative rule: each order's integrated trace norm cannot exceed
        # the previous order's
        for geom, f, t in ((unit_ladder, unit_box, 3.5), (geometric_ladder, geo_box, 1.5)):
            rep = defect(0.0, t, f, geom, shift_rule, tol=1e-10)
            for a, b in zip(rep.entries, rep.entries[1:]):
                assert b <= a + 1e-15

    def test_window_validation(self, unit_ladder, unit_box, shift_rule):
        with pytest.raises(ValueError):
            defect(2.0, 1.0, unit_box, unit_ladder, shift_rule)

    def test_negative_density_rejected(self, unit_ladder, shift_rule):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, -1.0)])
        with pytest.raises(ValueError):
            defect(0.0, 1.0, f, unit_ladder, shift_rule)

    def test_limit_additivity_over_windows(self, geometric_ladder, geo_box, shift_rule):
        # the window defect is additive: [0, s] + [s, t] = [0, t]
        lo = defect(0.0, 1.25, geo_box, geometric_ladder, shift_rule, tol=1e-10)
        hi = defect(1.25, 1.75, geo_box, geometric_ladder, shift_rule, tol=1e-10)
        full = defect(0.0, 1.75, geo_box, geometric_ladder, shift_rule, tol=1e-10)
        assert lo.limit_estimate + hi.limit_estimate == pytest.approx(
            full.limit_estimate, abs=1e-10
        )
        assert (lo.limit_estimate, full.limit_estimate) == (
            pytest.approx(0.25, abs=1e-10),
            pytest.approx(0.75, abs=1e-10),
        )

    @given(dyadics(0.0, 3.0, 4), dyadics(0.0, 3.0, 4), dyadics(0.0, 3.0, 4))
    @settings(max_examples=25, deadline=None)
    def test_per_order_window_additivity(self, x, y, z):
        from honestflow import IntervalUnion

        s, u, t = sorted((x, y, z))
        geom = IntervalUnion("affine", start=0.0, spacing=2.0, length=1.0)
        f = PiecewiseDensity.from_pieces(geom, [(0.0, 1.0, 1.0)])
        ex = Expansion(geom, BoundaryRule("shift"), f, t)
        for n in range(4):
            left = ex.integrated_trace(n, s, u).norm()
            right = ex.integrated_trace(n, u, t).norm()
            whole = ex.integrated_trace(n, s, t).norm()
            assert left + right == pytest.approx(whole, abs=1e-15)


class TestIntervalHonesty:
    def test_dishonest_window_witness(self, geometric_ladder, geo_box, shift_rule):
        rep = honesty_on_interval((1.0, 2.0), geo_box, geometric_ladder, shift_rule,
                                  tol=1e-10, grid_points=6)
        assert rep.verdict == "dishonest"
        assert rep.witness_window == (1.0, 2.0)
        assert rep.witness_limit == pytest.approx(1.0, abs=1e-10)

    def test_honest_window_before_escape(self, geometric_ladder, geo_box, shift_rule):
        rep = honesty_on_interval((0.5, 1.0), geo_box, geometric_ladder, shift_rule,
                                  tol=1e-10, grid_points=6)
        assert rep.verdict == "honest"
        assert rep.witness_limit <= 1e-10

    def test_subwindow_count(self, unit_ladder, unit_box, shift_rule):
        rep = honesty_on_interval((0.0, 2.0), unit_box, unit_ladder, shift_rule,
                                  grid_points=4)
        assert len(rep.reports) == 6  # all pairs from a 4-point grid
        assert rep.verdict == "honest"

    def test_degenerate_window_rejected(self, unit_ladder, unit_box, shift_rule):
        with pytest.raises(ValueError):
            honesty_on_interval((1.0, 1.0), unit_box, unit_ladder, shift_rule)


class TestResolventDefect:
    def test_honest_entries_exact_decay(self, unit_ladder, unit_box, shift_rule):
        rep = resolvent_defect(unit_box, 1.0, unit_ladder, shift_rule, tol=1e-8)
        assert rep.verdict == "honest"
        for n, entry in enumerate(rep.entries[:6]):
            assert entry == pytest.approx(
                (1.0 - math.exp(-1.0)) * math.exp(-float(n)), abs=1e-12
            )

    def test_verdict_lambda_independent(self, unit_ladder, unit_box, geometric_ladder,
                                        geo_box, shift_rule):
        for lam in (0.5, 1.0, 2.0):
            honest = resolvent_defect(unit_box, lam, unit_ladder, shift_rule)
            leaky = resolvent_defect(geo_box, lam, geometric_ladder, shift_rule)
            assert honest.verdict == "honest"
            assert leaky.verdict == "dishonest"

    def test_dishonest_limit_closed_form(self, geometric_ladder, geo_box, shift_rule):
        rep = resolvent_defect(geo_box, 1.0, geometric_ladder, shift_rule, tol=1e-10)
        assert rep.limit_estimate == pytest.approx(
            (1.0 - math.exp(-1.0)) * math.exp(-1.0), abs=1e-10
        )

    def test_zero_density(self, unit_ladder, shift_rule):
        rep = resolvent_defect(PiecewiseDensity.zero(), 1.0, unit_ladder, shift_rule)
        assert rep.verdict == "honest"
        assert rep.entries[-1] == 0.0

    def test_bad_lambda(self, unit_ladder, unit_box, shift_rule):
        with pytest.raises(ValueError):
            resolvent_defect(unit_box, 0.0, unit_ladder, shift_rule)


class TestSufficiency:
    def test_flat_profile_satisfied_on_shift(self, unit_ladder, shift_rule):
        rep = sufficient_honesty_check(unit_ladder, shift_rule, h=lambda k: 1.0)
        assert rep.mode == "profile"
        assert rep.satisfied
        assert rep.witness_index is None

    def test_decreasing_profile_violated_on_shift(self, unit_ladder, shift_rule):
        rep = sufficient_honesty_check(unit_ladder, shift_rule, h=lambda k: 2.0 ** (-k))
        assert not rep.satisfied
        assert rep.witness_index == 1
        assert (rep.lhs, rep.rhs) == (1.0, 0.5)

    def test_zero_profile_refused(self, unit_ladder, shift_rule):
        with pytest.raises(ValueError):
            sufficient_honesty_check(unit_ladder, shift_rule, h=lambda k: float(k))

    def test_domination_violated_on_leaky_ladder(self, geometric_ladder, geo_box, shift_rule):
        rep = sufficient_honesty_check(geometric_ladder, shift_rule, f=geo_box, lam=1.0)
        assert rep.mode == "domination"
        assert not rep.satisfied
        assert rep.witness_index == 1
        assert rep.lhs == pytest.approx(math.exp(-0.5) - math.exp(-1.5), abs=1e-15)
        assert rep.rhs == 0.0

    def test_domination_satisfied_on_finite_ladder(self):
        # decaying density on a finite ladder with an absorbing top: one
        # round trip lowers the resolvent trace everywhere
        from honestflow import IntervalUnion

        geom = IntervalUnion("explicit", intervals=((0.0, 1.0), (2.0, 3.0), (4.0, 5.0)))
        f = PiecewiseDensity.from_pieces(
            geom,
            [(0.0, 1.0, 1.0), (2.0, 3.0, math.exp(-1.0)), (4.0, 5.0, math.exp(-2.0))],
        )
        rep = sufficient_honesty_check(geom, BoundaryRule("shift"), f=f, lam=2.0)
        assert rep.mode == "domination"
        assert rep.satisfied

    def test_argument_exclusivity(self, unit_ladder, unit_box, shift_rule):
        with pytest.raises(ValueError):
            sufficient_honesty_check(unit_ladder, shift_rule)
        with pytest.raises(ValueError):
            sufficient_honesty_check(unit_ladder, shift_rule, h=lambda k: 1.0,
                                     f=unit_box, lam=1.0)


class TestMassAccounting:
    def test_no_loss_on_honest_ladder(self, unit_ladder, unit_box, shift_rule):
        res = mass_loss(0.0, 3.0, unit_box, unit_ladder, shift_rule, tol=1e-12)
        assert res.conclusive
        assert res.loss == pytest.approx(0.0, abs=1e-12)

    def test_leak_is_inconclusive_when_unconverged(self, geometric_ladder, geo_box, shift_rule):
        res = mass_loss(0.0, 2.5, geo_box, geometric_ladder, shift_rule, tol=1e-10, n_cap=40)
        assert not res.conclusive
        assert res.loss == pytest.approx(1.0, abs=1e-10)

    def test_defect_estimate_honest(self, unit_ladder, unit_box):
        rule = BoundaryRule("shift", scale=0.5)
        eta, converged = mass_defect_estimate(unit_box, 1.5, unit_ladder, rule, tol=1e-12)
        assert converged
        assert eta == pytest.approx(0.0, abs=1e-12)

    def test_defect_estimate_leaky(self, geometric_ladder, geo_box, shift_rule):
        eta, converged = mass_defect_estimate(geo_box, 1.5, geometric_ladder, shift_rule,
                                              tol=1e-10)
        assert not converged
        assert eta == pytest.approx(-0.5, abs=1e-10)

    def test_defect_estimate_monotone(self, geometric_ladder, geo_box, shift_rule):
        etas = [
            mass_defect_estimate(geo_box, t, geometric_ladder, shift_rule, tol=1e-10)[0]
            for t in (0.0, 0.5, 1.0, 1.25, 1.5, 2.0, 2.5)
        ]
        assert all(e <= 1e-12 for e in etas)
        for a, b in zip(etas, etas[1:]):
            assert b <= a + 1e-12

    def test_absorption_rate_worked(self, unit_ladder, unit_box):
        rule = BoundaryRule("shift", scale=0.5)
        rate, converged = absorption_rate_estimate(unit_box, 1.5, unit_ladder, rule,
                                                   tol=1e-12)
        assert converged
        assert rate == pytest.approx(0.625 / 1.5, abs=1e-12)

    def test_absorption_rate_zero_time_rejected(self, unit_ladder, unit_box, shift_rule):
        with pytest.raises(ValueError):
            absorption_rate_estimate(unit_box, 0.0, unit_ladder, shift_rule)


class TestEnsembleDecay:
    def test_disk_ensemble_honest(self):
        geom = Billiard("disk", center=(0.0, 0.0), radius=1.0,
                        velocities=VelocitySpec("speeds", speeds=(1.0,)))
        ens = sample_ensemble(geom, 20_000, seed=42)
        moved = transport_ensemble(ens, 5.0, geom)
        rep = ensemble_trace_decay(moved, 5.0)
        assert rep.verdict == "honest"
        assert rep.tail_weights[-1] == 0.0
        assert rep.degenerate_weight <= rep.stat_tol
        for a, b in zip(rep.tail_weights, rep.tail_weights[1:]):
            assert b <= a + 1e-15

    def test_degenerate_weight_blocks_verdict(self):
        n = 4
        ens = ParticleEnsemble(
            pos=np.zeros((n, 2)),
            vel=np.tile([1.0, 0.0], (n, 1)),
            weight=np.full(n, 0.25),
            rebounds=np.array([0, 1, 2, 3], dtype=np.int64),
            degenerate=np.array([True, True, False, False]),
            seed=0,
        )
        blocked = ensemble_trace_decay(ens, 1.0, stat_tol=0.1)
        assert blocked.verdict == "inconclusive"
        assert blocked.degenerate_weight == pytest.approx(0.5, abs=1e-15)
        relaxed = ensemble_trace_decay(ens, 1.0, stat_tol=0.6)
        assert relaxed.verdict == "honest"
        assert relaxed.max_rebounds == 3
        assert relaxed.tail_weights == (0.75, 0.5, 0.25, 0.0)
