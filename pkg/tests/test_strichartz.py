import math

import numpy as np
import pytest

from latdisp.lattice import ComplexField, LatticeError, LatticeGrid, lp_norm
from latdisp.limits import GaussianProfile
from latdisp.strichartz import (
    AdmissiblePair,
    BandLimitedProfile,
    StrichartzReport,
    is_admissible,
    linear_norm_trajectory,
    mixed_norm,
    strichartz_sweep,
    write_sweep_csv,
    write_sweep_json,
)
from latdisp.evolve import Trajectory


class TestAdmissibility:
    @pytest.mark.parametrize("q,r", [(math.inf, 2), (8, 4), (4, math.inf), (12, 3)])
    def test_admissible(self, q, r):
        assert is_admissible(q, r)
        AdmissiblePair(q, r)

    @pytest.mark.parametrize("q,r", [(4, 4), (2, 2), (math.inf, 4), (8, 3), (1, 2)])
    def test_not_admissible(self, q, r):
        assert not is_admissible(q, r)
        with pytest.raises(LatticeError):
            AdmissiblePair(q, r)

    def test_label(self):
        assert AdmissiblePair(math.inf, 2).label() == ("inf", "2.0")


class TestMixedNorm:
    def constant_traj(self, value=3.0, n=11):
        g = LatticeGrid(2, 8, 0.125)  # L = 1 so every L^r norm equals |value|
        f = ComplexField(g, np.full(g.shape, value + 0j))
        return Trajectory(
            times=np.linspace(0.0, 1.0, n), kind="discrete", snapshots=[f] * n
        )

    def test_sup_in_time(self):
        traj = self.constant_traj()
        assert mixed_norm(traj, AdmissiblePair(math.inf, 2)) == pytest.approx(3.0)

    def test_finite_q_constant(self):
        traj = self.constant_traj()
        # integral of 3^8 over [0,1], eighth root
        assert mixed_norm(traj, AdmissiblePair(8, 4)) == pytest.approx(3.0, rel=1e-12)

    def test_single_sample_rejected(self):
        traj = self.constant_traj(n=1)
        with pytest.raises(LatticeError):
            mixed_norm(traj, AdmissiblePair(8, 4))

    def test_missing_norms(self):
        traj = Trajectory(
            times=np.linspace(0, 1, 5), kind="discrete", norms={2.0: np.ones(5)}
        )
        with pytest.raises(LatticeError):
            mixed_norm(traj, AdmissiblePair(8, 4))

    def test_nonuniform_samples_rejected(self):
        g = LatticeGrid(2, 8, 0.125)
        f = ComplexField(g, np.ones(g.shape))
        traj = Trajectory(
            times=np.array([0.0, 0.1, 1.0]), kind="discrete", snapshots=[f] * 3
        )
        with pytest.raises(LatticeError):
            mixed_norm(traj, AdmissiblePair(8, 4))


class TestLinearNormTrajectory:
    def test_matches_snapshot_path(self):
        from latdisp.evolve import linear_propagate

        g = LatticeGrid(2, 16, 1.0)
        rng = np.random.default_rng(3)
        f = ComplexField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
        times = np.linspace(0.0, 2.0, 5)
        traj = linear_norm_trajectory(f, times, [2.0, 4.0])
        for i, t in enumerate(times):
            u = linear_propagate(f, t)
            assert traj.norms[2.0][i] == pytest.approx(lp_norm(u, 2), rel=1e-12)
            assert traj.norms[4.0][i] == pytest.approx(lp_norm(u, 4), rel=1e-12)

    def test_scalar_rescaling_invariance(self):
        # ratios of mixed norm to data norm are invariant under f -> c f
        g = LatticeGrid(2, 16, 1.0)
        rng = np.random.default_rng(4)
        vals = rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)
        times = np.linspace(0.0, 1.0, 9)
        pair = AdmissiblePair(8, 4)
        out = []
        for c in (1.0, 5.5):
            f = ComplexField(g, c * vals)
            traj = linear_norm_trajectory(f, times, [4.0])
            out.append(mixed_norm(traj, pair) / lp_norm(f, 2))
        assert out[0] == pytest.approx(out[1], rel=1e-12)


class TestBandLimitedProfile:
    def test_deterministic(self):
        g = LatticeGrid(2, 32, 0.5)
        a = BandLimitedProfile(16.0, band=3, seed=7).sample(g)
        b = BandLimitedProfile(16.0, band=3, seed=7).sample(g)
        assert np.array_equal(a.values, b.values)

    def test_same_function_across_grids(self):
        # the coarse samples must be restrictions of the fine samples
        p = BandLimitedProfile(16.0, band=2, seed=5)
        coarse = p.sample(LatticeGrid(2, 16, 1.0))
        fine = p.sample(LatticeGrid(2, 64, 0.25))
        assert np.max(np.abs(fine.values[::4, ::4] - coarse.values)) <= 1e-10

    def test_period_mismatch(self):
        with pytest.raises(LatticeError):
            BandLimitedProfile(16.0, band=2).sample(LatticeGrid(2, 16, 0.5))

    def test_too_coarse(self):
        with pytest.raises(LatticeError):
            BandLimitedProfile(16.0, band=10).sample(LatticeGrid(2, 16, 1.0))


class TestSweep:
    def test_small_sweep(self, tmp_path):
        L = 16.0
        profiles = {
            "gaussian": GaussianProfile(center=(8.0, 8.0), width=1.2),
            "band_limited": BandLimitedProfile(L, band=2, seed=1),
        }
        reports = strichartz_sweep(
            profiles,
            [(math.inf, 2), (8, 4)],
            L,
            [1.0, 0.5, 0.25],
            T=2.0,
            n_samples=33,
            sup_ratio=True,
        )
        # 2 pairs + 1 sup_ratio row per profile
        assert len(reports) == 6
        for rep in reports:
            assert len(rep.ratios) == 3
            vals = [r for _, r in rep.ratios]
            assert max(vals) / min(vals) <= 2.0
        conservative = [r for r in reports if r.pair and r.pair.q == math.inf]
        for rep in conservative:
            for _, ratio in rep.ratios:
                assert ratio == pytest.approx(1.0, rel=1e-10)
        write_sweep_csv(reports, tmp_path / "s.csv")
        write_sweep_json(reports, tmp_path / "s.json")
        lines = (tmp_path / "s.csv").read_text().strip().splitlines()
        assert lines[0] == "pair_q,pair_r,profile,h,ratio"
        assert len(lines) == 1 + 6 * 3

    def test_report_validation(self):
        with pytest.raises(LatticeError):
            StrichartzReport(
                pair=AdmissiblePair(math.inf, 2),
                profile_name="x",
                ratios=((1.0, -2.0),),
                trend_slope=0.0,
                T=1.0,
            )
