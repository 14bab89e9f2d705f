import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from honestflow import (
    BoundaryRule,
    Expansion,
    PiecewiseDensity,
    composition_residual,
    evolve,
    evolve_scaled,
    mass_balance,
)
from honestflow.expansion import mc_mass_estimate

from conftest import dyadics


class TestOrders:
    def test_order_zero_is_free_stream(self, unit_ladder, unit_box, shift_rule):
        ex = Expansion(unit_ladder, shift_rule, unit_box, 2.0)
        d0 = ex.order_density(0, 0.4)
        assert d0.mass() == pytest.approx(0.6, abs=1e-15)
        assert d0(0.5, unit_ladder) == 1.0
        assert d0(0.3, unit_ladder) == 0.0

    def test_order_one_worked_value(self, unit_ladder, unit_box, shift_rule):
        # mass crossing b_0 = 1 re-enters at a_1 = 2 and drifts right
        ex = Expansion(unit_ladder, shift_rule, unit_box, 2.0)
        assert ex.order_value(1, 0.5, 2.3) == 1.0
        assert ex.order_value(1, 0.5, 2.7) == 0.0
        assert ex.order_mass(1, 0.5) == pytest.approx(0.5, abs=1e-15)

    def test_orders_partition_mass(self, unit_ladder, unit_box, shift_rule):
        ex = Expansion(unit_ladder, shift_rule, unit_box, 5.0)
        for t in (0.5, 1.5, 2.5, 4.5):
            total = sum(ex.order_mass(k, t) for k in range(8))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_higher_orders_empty_before_arrival(self, unit_ladder, unit_box, shift_rule):
        ex = Expansion(unit_ladder, shift_rule, unit_box, 2.0)
        assert ex.order_mass(2, 0.75) == 0.0  # second crossing needs t > 1
        assert ex.order_mass(3, 1.5) == 0.0  # third crossing needs t > 2

    def test_integrated_trace_worked(self, unit_ladder, unit_box, shift_rule):
        ex = Expansion(unit_ladder, shift_rule, unit_box, 2.0)
        tr = ex.integrated_trace(0, 0.0, 0.4)
        assert tr.to_dict() == {0: pytest.approx(0.4, abs=1e-15)}
        assert ex.integrated_trace(2, 0.0, 0.4).norm() == 0.0

    def test_t_outside_horizon_rejected(self, unit_ladder, unit_box, shift_rule):
        ex = Expansion(unit_ladder, shift_rule, unit_box, 1.0)
        with pytest.raises(ValueError):
            ex.order_density(0, 1.5)

    def test_specular_rejected(self, unit_ladder, unit_box):
        with pytest.raises(ValueError):
            Expansion(unit_ladder, BoundaryRule("specular"), unit_box, 1.0)

    def test_exhaustion_geometric(self, geometric_ladder, geo_box, shift_rule):
        # total transit length is 2; past that every history is empty
        ex = Expansion(geometric_ladder, shift_rule, geo_box, 2.5)
        found_empty = False
        for k in range(80):
            if not ex.outgoing_history(k):
                found_empty = True
                break
        assert not found_empty  # histories stay nonempty (they shrink forever)
        assert ex.order_mass(40, 2.5) == 0.0

    def test_exhaustion_unit(self, unit_ladder, unit_box, shift_rule):
        ex = Expansion(unit_ladder, shift_rule, unit_box, 3.0)
        # order k exits through b_k during (k, k+1); beyond t_max it is clipped away
        assert ex.outgoing_history(2)
        assert not ex.outgoing_history(3)


class TestEvolve:
    def test_conservative_mass(self, unit_ladder, unit_box, shift_rule):
        for t in (0.5, 1.5, 3.0):
            d, rep = evolve(t, unit_box, unit_ladder, shift_rule, tol=1e-12)
            assert d.mass() == pytest.approx(1.0, abs=1e-12)
            assert rep.converged
            assert rep.residual_bound < 1e-12

    def test_report_orders(self, unit_ladder, unit_box, shift_rule):
        d, rep = evolve(1.5, unit_box, unit_ladder, shift_rule, tol=1e-12)
        assert rep.n_used == 2
        assert rep.order_masses[0] == pytest.approx(0.0, abs=1e-15)
        assert rep.order_masses[1] == pytest.approx(0.5, abs=1e-15)
        assert rep.order_masses[2] == pytest.approx(0.5, abs=1e-15)

    def test_scaled_worked_value(self, unit_ladder, unit_box, shift_rule):
        # at t = 1.5 half the mass has crossed once (weight r), half twice (r^2)
        d, rep = evolve_scaled(1.5, unit_box, 0.5, unit_ladder, shift_rule, tol=1e-12)
        assert d.mass() == pytest.approx(0.375, abs=1e-15)
        assert rep.converged

    def test_unconverged_marked(self, geometric_ladder, geo_box, shift_rule):
        d, rep = evolve(2.5, geo_box, geometric_ladder, shift_rule, tol=1e-10, n_cap=32)
        assert not rep.converged
        assert d.mass() == 0.0
        assert rep.residual_bound == pytest.approx(1.0, abs=1e-12)

    def test_residual_bound_covers_missing_mass(self, unit_ladder, unit_box, shift_rule):
        # loose tol cuts after order 1; the certified bound equals the mass
        # actually missing (here the cut is tight: exactly order 2 is dropped)
        d_few, rep_few = evolve(1.5, unit_box, unit_ladder, shift_rule, tol=0.6)
        d_all, _ = evolve(1.5, unit_box, unit_ladder, shift_rule, tol=1e-13)
        missing = d_all.mass() - d_few.mass()
        assert rep_few.n_used == 1
        assert missing <= rep_few.residual_bound + 1e-15
        assert missing == pytest.approx(rep_few.residual_bound, abs=1e-15)

    @given(st.sampled_from([0.25, 0.5, 0.75, 1.0]), dyadics(0.25, 3.0, 4))
    @settings(max_examples=20, deadline=None)
    def test_mass_monotone_in_r(self, r, t):
        from honestflow import IntervalUnion

        geom = IntervalUnion("affine", start=0.0, spacing=2.0, length=1.0)
        f = PiecewiseDensity.from_pieces(geom, [(0.0, 1.0, 1.0)])
        rule = BoundaryRule("shift")
        d_r, _ = evolve_scaled(t, f, r, geom, rule, tol=1e-12)
        d_1, _ = evolve_scaled(t, f, 1.0, geom, rule, tol=1e-12)
        assert d_r.mass() <= d_1.mass() + 1e-12


class TestStructure:
    def test_mass_balance_conservative(self, unit_ladder, unit_box, shift_rule):
        rep = mass_balance(3, 1.5, unit_box, unit_ladder, shift_rule)
        assert rep.lhs == pytest.approx(rep.rhs, abs=1e-12)
        assert all(b == pytest.approx(0.0, abs=1e-15) for b in rep.bracket_terms)

    def test_mass_balance_substochastic_brackets(self, unit_ladder, unit_box):
        rule = BoundaryRule("shift", scale=0.9)
        rep = mass_balance(4, 2.5, unit_box, unit_ladder, rule)
        assert rep.lhs == pytest.approx(rep.rhs, abs=1e-12)
        assert all(b <= 1e-15 for b in rep.bracket_terms)
        assert any(b < -1e-3 for b in rep.bracket_terms)

    def test_composition_identity_dyadic(self, unit_ladder, unit_box, shift_rule):
        for k in range(3):
            for t in (0.25, 1.25):
                for s in (0.5, 0.75):
                    assert composition_residual(k, t, s, unit_box, unit_ladder, shift_rule) <= 1e-12

    def test_composition_identity_geometric(self, geometric_ladder, geo_box, shift_rule):
        assert composition_residual(1, 0.75, 0.5, geo_box, geometric_ladder, shift_rule) <= 1e-12


class TestMonteCarlo:
    def test_estimate_close_to_exact(self, unit_ladder, unit_box, shift_rule):
        n = 20_000
        est, err = mc_mass_estimate(unit_box, 1.5, 0.5, unit_ladder, n_particles=n, seed=3)
        exact, _ = evolve_scaled(1.5, unit_box, 0.5, unit_ladder, shift_rule, tol=1e-12)
        assert abs(est - exact.mass()) <= 3.0 / math.sqrt(n)
        assert err > 0.0

    def test_estimate_deterministic(self, unit_ladder, unit_box):
        a = mc_mass_estimate(unit_box, 1.5, 0.5, unit_ladder, n_particles=5000, seed=7)
        b = mc_mass_estimate(unit_box, 1.5, 0.5, unit_ladder, n_particles=5000, seed=7)
        assert a == b

    def test_conservative_estimate_is_exact_fraction(self, unit_ladder, unit_box):
        # with r = 1 nothing dies: the estimate must be exactly 1
        est, err = mc_mass_estimate(unit_box, 1.5, 1.0, unit_ladder, n_particles=2000, seed=1)
        assert est == pytest.approx(1.0, abs=1e-12)
        assert err == pytest.approx(0.0, abs=1e-12)

    def test_geometric_escape_counts_as_loss(self, geometric_ladder, geo_box):
        # beyond the total transit length nothing survives even with r = 1
        est, _ = mc_mass_estimate(geo_box, 2.5, 1.0, geometric_ladder, n_particles=2000, seed=2)
        assert est == pytest.approx(0.0, abs=1e-12)
