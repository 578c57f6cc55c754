import numpy as np
import pytest

from oucert import oumodel, sim


def pure_ou(nu=1.0, sigma2=2.0):
    # K=1 reduction: p=1, R=[nu], alpha=nu, beta=0
    return oumodel.require_valid(
        oumodel.make_params(nu, 0.0, [[nu]], [1.0], [[sigma2]])
    )


def hyperexp_alpha1():
    spec = oumodel.HyperexpSpec(
        p1=0.5, nu1=2.0, nu2=2.0 / 3.0, c=2.0, alpha=1.0, beta=0.5
    )
    return oumodel.hyperexp_model(spec)


class TestSimConfig:
    def test_defaults_resolve(self):
        params = hyperexp_alpha1()
        cfg = sim.SimConfig().resolve(params)
        assert cfg.dt == 1e-3 * min(1.0, 1.0 / np.linalg.norm(params.R, 2))
        assert cfg.burn_in == 0.1 * cfg.horizon
        assert np.allclose(cfg.y0, 0.0)

    def test_invariants(self):
        params = pure_ou()
        with pytest.raises(ValueError, match="dt"):
            sim.SimConfig(dt=-0.1).resolve(params)
        with pytest.raises(ValueError, match="burn_in"):
            sim.SimConfig(burn_in=10.0, horizon=5.0).resolve(params)
        with pytest.raises(ValueError, match="replicas"):
            sim.SimConfig(replicas=0).resolve(params)
        with pytest.raises(ValueError, match="y0"):
            sim.SimConfig(y0=[1.0, 2.0]).resolve(params)


class TestSimulate:
    def test_same_seed_identical(self):
        params = hyperexp_alpha1()
        cfg = sim.SimConfig(horizon=2.0, seed=11)
        t1, y1 = sim.simulate(params, cfg)
        t2, y2 = sim.simulate(params, cfg)
        assert np.array_equal(y1, y2)
        assert np.array_equal(t1, t2)

    def test_different_replicas_differ(self):
        params = hyperexp_alpha1()
        cfg = sim.SimConfig(horizon=1.0, seed=11)
        _, y0 = sim.simulate(params, cfg, replica=0)
        _, y1 = sim.simulate(params, cfg, replica=1)
        assert not np.array_equal(y0, y1)

    def test_fluid_mode_fixed_point(self):
        # K=1, alpha=nu, beta>0: the ODE settles at -beta/nu
        nu, beta = 1.0, 0.5
        params = oumodel.make_params(nu, beta, [[nu]], [1.0])
        cfg = sim.SimConfig(horizon=30.0, dt=1e-3, y0=[2.0])
        _, path = sim.simulate(params, cfg, sigma_zero=True, record_every=1000)
        assert abs(path[-1, 0] - (-beta / nu)) < 1e-3

    def test_fluid_richardson_order_one(self):
        # deterministic part of the scheme is first order: halving dt
        # roughly halves the terminal error against the exact ODE flow
        nu = 1.0
        params = oumodel.make_params(nu, 0.0, [[nu]], [1.0])
        y0, T = 2.0, 1.0
        exact = y0 * np.exp(-nu * T)  # overload branch: dy = -alpha y

        def terminal(dt):
            cfg = sim.SimConfig(horizon=T, dt=dt, y0=[y0])
            _, path = sim.simulate(params, cfg, sigma_zero=True, record_every=10**9)
            return path[-1, 0]

        e1 = abs(terminal(0.02) - exact)
        e2 = abs(terminal(0.01) - exact)
        assert 1.7 <= e1 / e2 <= 2.3

    def test_weak_order_terminal_mean(self):
        # small noise so the O(dt) mean bias dominates the Monte Carlo error
        nu = 1.0
        params = oumodel.make_params(nu, 0.0, [[nu]], [1.0], [[0.01]])
        T, y0 = 1.0, 2.0
        exact = y0 * np.exp(-nu * T)

        def mean_terminal(dt):
            cfg = sim.SimConfig(horizon=T, dt=dt, replicas=2000, seed=3, y0=[y0])
            return float(sim.terminal_states(params, cfg).mean())

        e1 = abs(mean_terminal(0.05) - exact)
        e2 = abs(mean_terminal(0.025) - exact)
        assert e2 < e1
        assert 1.3 <= e1 / e2 <= 3.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_overflow_aborts(self):
        # dt far above the stability limit makes Euler-Maruyama explode
        params = pure_ou(nu=2.0)
        cfg = sim.SimConfig(dt=10.0, horizon=5000.0, y0=[1.0])
        with pytest.raises(sim.SimulationError, match="overflow"):
            sim.simulate(params, cfg, sigma_zero=True)

    def test_record_every(self):
        params = pure_ou()
        t, path = sim.simulate(params, sim.SimConfig(horizon=1.0, dt=0.01), record_every=10)
        assert len(t) == 11
        assert np.allclose(np.diff(t), 0.1)


class TestStationaryStats:
    def test_pure_ou_variance(self):
        # exact OU stationary law: mean 0, variance sigma^2/(2 nu) = 1
        st = sim.stationary_stats(pure_ou(), sim.SimConfig(horizon=120.0, seed=1))
        assert abs(st.mean[0]) <= 3 * st.se_mean[0] + 0.02
        assert abs(st.covariance[0, 0] - 1.0) <= 3 * st.se_var[0]
        assert st.ess > 100
        assert st.converged

    def test_piecewise_matches_quadrature_oracle(self):
        params = oumodel.require_valid(
            oumodel.make_params(2.0, 0.3, [[1.0]], [1.0], [[2.0]])
        )
        st = sim.stationary_stats(params, sim.SimConfig(horizon=150.0, seed=2))
        _, mean, var = sim.stationary_density_1d(params)
        assert abs(st.mean[0] - mean) <= 3 * st.se_mean[0]
        assert abs(st.covariance[0, 0] - var) <= 3 * st.se_var[0]

    def test_two_seeds_consistent(self):
        params = hyperexp_alpha1()
        cfg1 = sim.SimConfig(horizon=40.0, seed=5)
        cfg2 = sim.SimConfig(horizon=40.0, seed=6)
        s1 = sim.stationary_stats(params, cfg1)
        s2 = sim.stationary_stats(params, cfg2)
        pooled = np.sqrt(s1.se_mean**2 + s2.se_mean**2)
        assert np.all(np.abs(s1.mean - s2.mean) <= 3 * pooled)

    def test_histograms_recorded(self):
        st = sim.stationary_stats(pure_ou(), sim.SimConfig(horizon=20.0, replicas=8))
        assert set(st.histograms) == {"total", "y1"}
        h = st.histograms["total"]
        assert len(h["edges"]) == len(h["counts"]) + 1
        assert h["counts"].sum() > 0

    def test_covariance_psd_and_json(self):
        st = sim.stationary_stats(
            hyperexp_alpha1(), sim.SimConfig(horizon=20.0, replicas=8)
        )
        assert np.min(np.linalg.eigvalsh(st.covariance)) >= -1e-12
        assert np.all(st.se_mean >= 0) and np.all(st.se_var >= 0)
        out = st.to_json()
        assert "covariance" in out and "ess" in out

    def test_unstable_regime_rejected(self):
        params = oumodel.make_params(0.0, -1.0, [[1.0]], [1.0])
        with pytest.raises(ValueError, match="alpha"):
            sim.stationary_stats(params, sim.SimConfig(horizon=5.0))


class TestHittingTime:
    def test_start_inside_is_zero(self):
        est = sim.hitting_time(pure_ou(), [0.5], 1.0, sim.SimConfig())
        assert est.mean_time == 0.0
        assert est.censored_fraction == 0.0

    def test_two_discretizations_agree(self):
        params = pure_ou()
        y0, radius = [4.0], 1.0
        a = sim.hitting_time(
            params, y0, radius, sim.SimConfig(dt=2e-3, horizon=60.0, replicas=128, seed=4)
        )
        b = sim.hitting_time(
            params, y0, radius, sim.SimConfig(dt=1e-3, horizon=60.0, replicas=128, seed=9)
        )
        pooled = np.hypot(a.se, b.se)
        assert abs(a.mean_time - b.mean_time) <= 3 * pooled
        assert a.censored_fraction == 0.0

    def test_hyperexp_radius_ten(self):
        params = hyperexp_alpha1()
        y0 = np.array([10.0, 10.0]) / np.sqrt(2.0)
        est = sim.hitting_time(params, y0, 1.0, sim.SimConfig(horizon=60.0, replicas=128, seed=7))
        assert est.censored_fraction < 0.01
        assert np.isfinite(est.mean_time) and est.mean_time > 0


class TestErgodicity:
    def test_needs_replicas(self):
        with pytest.raises(ValueError, match="replicas"):
            sim.ergodicity_diagnostic(
                hyperexp_alpha1(), sim.SimConfig(horizon=5.0, replicas=16)
            )

    def test_decay_from_far_start(self):
        params = hyperexp_alpha1()
        cfg = sim.SimConfig(horizon=30.0, replicas=256, seed=5, y0=[6.0, 6.0])
        rep = sim.ergodicity_diagnostic(params, cfg)
        assert rep.tv_distance[0] > 0.5  # far start: law nearly disjoint from bulk
        assert rep.slope < 0
        assert rep.r_squared > 0.9
        out = rep.to_json()
        assert len(out["times"]) == len(out["tv_distance"])


class TestStationaryDensity1d:
    def test_pure_ou_matches_gaussian(self):
        pdf, mean, var = sim.stationary_density_1d(pure_ou())
        assert abs(mean) < 1e-9
        assert abs(var - 1.0) < 1e-9
        # density agrees with the exact standard normal pointwise
        for y in (-2.0, -0.5, 0.0, 1.0, 2.5):
            exact = np.exp(-y * y / 2) / np.sqrt(2 * np.pi)
            assert abs(pdf(y) - exact) < 1e-9

    def test_normalization(self):
        params = oumodel.make_params(2.0, 0.3, [[1.0]], [1.0], [[2.0]])
        pdf, _, _ = sim.stationary_density_1d(params)
        from scipy.integrate import quad

        total = quad(pdf, -np.inf, 0.0)[0] + quad(pdf, 0.0, np.inf)[0]
        assert abs(total - 1.0) < 1e-8

    def test_asymmetry_sign(self):
        # stronger pull on the positive side (alpha > nu) skews mass negative
        params = oumodel.make_params(4.0, 0.0, [[1.0]], [1.0])
        _, mean, _ = sim.stationary_density_1d(params)
        assert mean < 0

    def test_k2_rejected(self):
        with pytest.raises(ValueError, match="one-dimensional"):
            sim.stationary_density_1d(hyperexp_alpha1())
