import numpy as np
import pytest

from honestflow import (
    Billiard,
    IntervalUnion,
    ParticleEnsemble,
    PiecewiseDensity,
    VelocitySpec,
    free_stream,
    restrict,
    sample_ensemble,
    sample_ladder_positions,
    transport_ensemble,
)


class TestPiecewiseDensity:
    def test_from_pieces_and_mass(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 0.5, 2.0), (2.25, 2.75, 1.0)])
        assert f.mass() == pytest.approx(1.5, abs=1e-15)
        assert f.indices() == [0, 1]
        assert f(0.25, unit_ladder) == 2.0
        assert f(2.5, unit_ladder) == 1.0
        assert f(1.5, unit_ladder) == 0.0  # gap point

    def test_from_pieces_rejects_outside(self, unit_ladder):
        with pytest.raises(ValueError):
            PiecewiseDensity.from_pieces(unit_ladder, [(1.25, 1.75, 1.0)])  # in a gap
        with pytest.raises(ValueError):
            PiecewiseDensity.from_pieces(unit_ladder, [(0.5, 2.5, 1.0)])  # spans intervals
        with pytest.raises(ValueError):
            PiecewiseDensity.from_pieces(unit_ladder, [(0.8, 0.2, 1.0)])  # empty

    def test_accepts_left_endpoint(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(2.0, 2.5, 1.0)])
        assert f.mass() == pytest.approx(0.5)

    def test_linear_ops(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0)])
        g = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 0.5, 1.0)])
        assert (f - g).mass() == pytest.approx(0.5)
        assert f.scale(2.0).mass() == pytest.approx(2.0)
        assert f.l1_distance(g) == pytest.approx(0.5)
        assert (f - f).mass() == 0.0

    def test_restrict(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0), (2.0, 3.0, 2.0)])
        assert restrict(f, 1).mass() == pytest.approx(2.0)
        assert restrict(f, 5).mass() == 0.0

    def test_to_rows(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 0.5, 2.0)])
        assert f.to_rows() == [(0, 0.0, 0.5, 2.0)]


class TestFreeStream:
    def test_drift_within_interval(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0)])
        g = free_stream(f, 0.4, unit_ladder)
        # block moved right by 0.4 and lost the part beyond b_0 = 1
        assert g(0.3, unit_ladder) == 0.0
        assert g(0.5, unit_ladder) == 1.0
        assert g.mass() == pytest.approx(0.6, abs=1e-15)

    def test_no_reentry(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0)])
        assert free_stream(f, 1.5, unit_ladder).mass() == 0.0

    def test_zero_time_identity(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.25, 0.75, 3.0)])
        assert free_stream(f, 0.0, unit_ladder) == f

    def test_negative_time_rejected(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0)])
        with pytest.raises(ValueError):
            free_stream(f, -0.1, unit_ladder)


def small_disk():
    return Billiard("disk", center=(0.0, 0.0), radius=1.0,
                    velocities=VelocitySpec("speeds", speeds=(1.0,)))


class TestEnsemble:
    def test_sampling_deterministic(self):
        disk = small_disk()
        e1 = sample_ensemble(disk, 500, seed=7)
        e2 = sample_ensemble(disk, 500, seed=7)
        assert np.array_equal(e1.pos, e2.pos)
        assert np.array_equal(e1.vel, e2.vel)
        e3 = sample_ensemble(disk, 500, seed=8)
        assert not np.array_equal(e1.pos, e3.pos)

    def test_sampling_inside_with_unit_speeds(self):
        disk = small_disk()
        ens = sample_ensemble(disk, 2000, seed=1)
        assert np.all(np.hypot(ens.pos[:, 0], ens.pos[:, 1]) < 1.0)
        assert np.allclose(ens.speeds(), 1.0, atol=1e-14)
        assert ens.mass() == pytest.approx(1.0, abs=1e-12)

    def test_annulus_speeds_in_band(self):
        disk = Billiard("disk", center=(0.0, 0.0), radius=1.0,
                        velocities=VelocitySpec("annulus", speed_min=0.5, speed_max=2.0))
        ens = sample_ensemble(disk, 2000, seed=3)
        sp = ens.speeds()
        assert sp.min() >= 0.5 - 1e-12
        assert sp.max() <= 2.0 + 1e-12

    def test_region_sampling(self):
        disk = small_disk()
        ens = sample_ensemble(disk, 1000, seed=2, region="disk:0.2,0.0,0.3")
        r = np.hypot(ens.pos[:, 0] - 0.2, ens.pos[:, 1])
        assert np.all(r < 0.3)
        ens = sample_ensemble(disk, 1000, seed=2, region="box:-0.3,-0.3,0.3,0.3")
        assert np.all(np.abs(ens.pos) < 0.3 + 1e-12)

    def test_region_outside_rejected(self):
        with pytest.raises(ValueError):
            sample_ensemble(small_disk(), 10, seed=0, region="box:-2,-2,2,2")

    def test_rebound_histogram_and_tails(self):
        disk = small_disk()
        ens = transport_ensemble(sample_ensemble(disk, 3000, seed=5), 3.0, disk)
        hist = ens.rebound_histogram()
        tails = ens.tail_weights()
        assert hist.sum() == pytest.approx(ens.mass(), abs=1e-12)
        # tails[n] = weight with more than n rebounds: complementary cumulative
        assert tails[0] == pytest.approx(ens.mass() - hist[0], abs=1e-12)
        assert np.all(np.diff(tails) <= 1e-15)
        assert tails[-1] == 0.0

    def test_transport_conserves_weight_and_speed(self):
        disk = small_disk()
        ens0 = sample_ensemble(disk, 3000, seed=11)
        ens = transport_ensemble(ens0, 7.0, disk)
        assert ens.mass() == pytest.approx(ens0.mass(), abs=1e-13)
        assert np.allclose(ens.speeds(), 1.0, atol=1e-12)
        assert np.all(np.hypot(ens.pos[:, 0], ens.pos[:, 1]) <= 1.0 + 1e-9)
        assert not np.array_equal(ens.pos, ens0.pos)
        # input untouched
        assert ens0.rebounds.max() == 0

    def test_transport_scale_reduces_weight(self):
        disk = small_disk()
        ens0 = sample_ensemble(disk, 1000, seed=13)
        damped = transport_ensemble(ens0, 5.0, disk, scale=0.5)
        full = transport_ensemble(ens0, 5.0, disk, scale=1.0)
        assert damped.mass() < full.mass()
        # weight = scale^rebounds exactly
        want = ens0.weight * 0.5 ** full.rebounds
        assert np.allclose(damped.weight, want, rtol=0, atol=1e-17)


class TestLadderSampling:
    def test_positions_follow_density(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 0.5, 1.0), (2.0, 3.0, 1.0)])
        xs, ks = sample_ladder_positions(f, unit_ladder, 40_000, seed=9)
        assert set(np.unique(ks)) == {0, 1}
        frac0 = np.mean(ks == 0)
        # a third of the mass sits in interval 0
        assert frac0 == pytest.approx(1.0 / 3.0, abs=3.0 / np.sqrt(40_000))
        assert np.all((xs >= 0.0) & (xs <= 3.0))

    def test_deterministic(self, unit_ladder):
        f = PiecewiseDensity.from_pieces(unit_ladder, [(0.0, 1.0, 1.0)])
        x1, k1 = sample_ladder_positions(f, unit_ladder, 100, seed=4)
        x2, k2 = sample_ladder_positions(f, unit_ladder, 100, seed=4)
        assert np.array_equal(x1, x2)
        assert np.array_equal(k1, k2)
