"""Network variants: layout, Glorot init, feature scaling, forward modes,
and checkpoint round-trips."""

import numpy as np
import pytest

from fisher_pinn.errors import ConfigurationError, UsageError
from fisher_pinn.model import (
    FeatureScaler,
    Network,
    NetworkConfig,
    forward_reference,
    init_params,
    layout,
    load_checkpoint,
    param_count,
    save_checkpoint,
)
from fisher_pinn.physics import FisherProblem


def make_problem(generalizing=False, lam=1.0):
    if generalizing:
        return FisherProblem(rho=None, lam=lam, rho_range=(1e2, 1e4))
    return FisherProblem(rho=1e3, lam=lam)


class TestConfigAndLayout:
    def test_defaults(self):
        assert NetworkConfig(architecture="standard").hidden_layers == 2
        assert NetworkConfig(architecture="standard", generalizing=True).hidden_layers == 3

    def test_param_counts(self):
        assert param_count(NetworkConfig(architecture="standard")) == 501
        assert param_count(NetworkConfig(architecture="wave")) == 3 + 40 + 420 + 21
        assert param_count(NetworkConfig(architecture="standard", generalizing=True)) == 941

    def test_invalid_config(self):
        with pytest.raises(ConfigurationError):
            NetworkConfig(architecture="conv")
        with pytest.raises(ConfigurationError):
            NetworkConfig(activation="relu")

    def test_layout_is_bijective(self):
        cfg = NetworkConfig(architecture="wave", generalizing=True)
        pv = init_params(cfg, 0)
        seen = set()
        for block in layout(cfg):
            shape = block.shape
            if len(shape) == 1:
                idxs = [pv.index_of(block.name, i) for i in range(shape[0])]
            else:
                idxs = [pv.index_of(block.name, i, j)
                        for i in range(shape[0]) for j in range(shape[1])]
            assert len(set(idxs)) == len(idxs)
            seen.update(idxs)
        assert seen == set(range(param_count(cfg)))

    def test_index_bounds_checked(self):
        pv = init_params(NetworkConfig(architecture="wave"), 0)
        with pytest.raises(UsageError):
            pv.index_of("W0", 5, 0)


class TestInit:
    def test_deterministic(self):
        cfg = NetworkConfig(architecture="standard")
        a = init_params(cfg, seed=4).values
        b = init_params(cfg, seed=4).values
        assert np.array_equal(a, b)
        assert not np.array_equal(a, init_params(cfg, seed=5).values)

    def test_glorot_bounds_and_zero_biases(self):
        cfg = NetworkConfig(architecture="standard")
        pv = init_params(cfg, seed=1)
        w0 = pv.block("W0")
        bound = np.sqrt(6.0 / (2 + 20))
        assert np.all(np.abs(w0) <= bound)
        assert np.all(pv.block("b0") == 0.0)
        assert np.all(pv.block("b2") == 0.0)

    def test_wave_layer_init(self):
        pv = init_params(NetworkConfig(architecture="wave"), seed=2)
        th = pv.block("wave")
        assert abs(th[0]) <= np.sqrt(2.0) and abs(th[1]) <= np.sqrt(2.0)
        assert th[2] == 0.0
        pvg = init_params(NetworkConfig(architecture="wave", generalizing=True), seed=2)
        assert np.all(np.abs(pvg.block("wave")[:2]) <= np.sqrt(6.0 / 4.0))


class TestFeatureScaler:
    def test_standard_unit_range(self):
        sc = FeatureScaler("standard", (-5.0, 5.0), (0.0, 0.004))
        assert sc.scale_x(-5.0) == 0.0 and sc.scale_x(5.0) == 1.0
        assert sc.scale_t(0.004) == 1.0
        assert sc.s_x == pytest.approx(0.1)
        assert sc.s_t == pytest.approx(250.0)

    def test_wave_transform(self):
        sc = FeatureScaler("wave", (-5.0, 5.0), (0.0, 0.004))
        assert sc.scale_x(3.3) == 3.3
        assert sc.s_x == 1.0
        assert sc.s_t == pytest.approx(250.0)
        r1, r2 = sc.rho_features(1e4)
        assert r1 == pytest.approx(100.0) and r2 == pytest.approx(1e4)

    def test_degenerate_range_rejected(self):
        with pytest.raises(ConfigurationError):
            FeatureScaler("standard", (1.0, 1.0), (0.0, 1.0))


class TestForward:
    @pytest.mark.parametrize("arch", ["standard", "wave"])
    @pytest.mark.parametrize("generalizing", [False, True])
    def test_output_in_unit_interval(self, arch, generalizing):
        problem = make_problem(generalizing)
        cfg = NetworkConfig(architecture=arch, generalizing=generalizing)
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 0)
        rng = np.random.default_rng(0)
        x = rng.uniform(-5, 5, 256)
        t = rng.uniform(0, 0.004, 256)
        rho = rng.uniform(1e2, 1e4, 256) if generalizing else None
        u = net.value(pv.values, x, t, rho)
        assert np.all((u > 0) & (u < 1))

    def test_all_zero_params_give_half(self):
        problem = make_problem()
        cfg = NetworkConfig(architecture="standard")
        net = Network.for_problem(cfg, problem)
        u = net.value(np.zeros(param_count(cfg)), [0.3, -2.0], [0.001, 0.003])
        np.testing.assert_allclose(u, 0.5)

    def test_rho_argument_validation(self):
        net = Network.for_problem(NetworkConfig(architecture="wave"), make_problem())
        with pytest.raises(UsageError):
            net.value(init_params(net.config, 0).values, 0.0, 0.0, 100.0)
        gnet = Network.for_problem(
            NetworkConfig(architecture="wave", generalizing=True), make_problem(True))
        with pytest.raises(UsageError):
            gnet.value(init_params(gnet.config, 0).values, 0.0, 0.0)

    def test_wave_level_sets(self):
        """Output constant along th1*x + th2*t_scaled = const."""
        problem = make_problem()
        cfg = NetworkConfig(architecture="wave")
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 3)
        th1, th2 = pv.block("wave")[0], pv.block("wave")[1]
        x, t = 0.7, 0.001
        ts = net.scaler.scale_t(t)
        t2 = 0.0031
        ts2 = net.scaler.scale_t(t2)
        x2 = x + th2 * (ts - ts2) / th1
        u1 = net.value(pv.values, [x], [t])
        u2 = net.value(pv.values, [x2], [t2])
        assert u1[0] == pytest.approx(u2[0], rel=1e-12)

    def test_generalizing_wave_depends_only_on_z(self):
        problem = make_problem(True)
        cfg = NetworkConfig(architecture="wave", generalizing=True)
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 5)
        th1, th2 = pv.block("wave")[0], pv.block("wave")[1]
        # two different (x, t, rho) triples with equal z
        rho_a, rho_b = 400.0, 3600.0
        x_a, t_a = 0.5, 0.002
        ts_a = net.scaler.scale_t(t_a)
        z = th1 * np.sqrt(rho_a) * x_a + th2 * rho_a * ts_a
        t_b = 0.001
        ts_b = net.scaler.scale_t(t_b)
        x_b = (z - th2 * rho_b * ts_b) / (th1 * np.sqrt(rho_b))
        u_a = net.value(pv.values, [x_a], [t_a], [rho_a])
        u_b = net.value(pv.values, [x_b], [t_b], [rho_b])
        assert u_a[0] == pytest.approx(u_b[0], rel=1e-12)

    @pytest.mark.parametrize("arch", ["standard", "wave"])
    @pytest.mark.parametrize("generalizing", [False, True])
    def test_jet_mode_matches_value_and_fd(self, arch, generalizing):
        problem = make_problem(generalizing)
        cfg = NetworkConfig(architecture=arch, generalizing=generalizing)
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 8)
        rng = np.random.default_rng(1)
        x = rng.uniform(-4, 4, 20)
        t = rng.uniform(0.0005, 0.0035, 20)
        rho = rng.uniform(2e2, 5e3, 20) if generalizing else None

        jet = net.jet(pv.values, x, t, rho)
        np.testing.assert_allclose(jet.v, net.value(pv.values, x, t, rho), rtol=1e-13)

        hx = 1e-4 * 10.0  # step scaled to domain width
        ht = 1e-4 * 0.004
        ux_fd = (net.value(pv.values, x + hx, t, rho)
                 - net.value(pv.values, x - hx, t, rho)) / (2 * hx)
        ut_fd = (net.value(pv.values, x, t + ht, rho)
                 - net.value(pv.values, x, t - ht, rho)) / (2 * ht)
        uxx_fd = (net.value(pv.values, x + hx, t, rho) - 2 * jet.v
                  + net.value(pv.values, x - hx, t, rho)) / hx**2
        np.testing.assert_allclose(jet.dx, ux_fd, rtol=1e-5, atol=1e-10)
        np.testing.assert_allclose(jet.dt, ut_fd, rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(jet.dxx, uxx_fd, rtol=1e-4, atol=1e-7)

    @pytest.mark.parametrize("arch", ["standard", "wave"])
    @pytest.mark.parametrize("generalizing", [False, True])
    @pytest.mark.parametrize("activation", ["tanh", "swish", "sigmoid", "sine"])
    def test_kernels_match_scalar_reference(self, arch, generalizing, activation):
        problem = make_problem(generalizing)
        cfg = NetworkConfig(architecture=arch, generalizing=generalizing,
                            activation=activation)
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 9)
        rng = np.random.default_rng(2)
        for _ in range(4):
            x = float(rng.uniform(-5, 5))
            t = float(rng.uniform(0, 0.004))
            rho = float(rng.uniform(1e2, 1e4)) if generalizing else None
            ref = forward_reference(net, pv.values, x, t, rho)
            jet = net.jet(pv.values, np.array([x]), np.array([t]),
                          np.array([rho]) if generalizing else None)
            assert jet.v[0] == pytest.approx(ref.v, rel=1e-12)
            assert jet.dx[0] == pytest.approx(ref.dx, rel=1e-10, abs=1e-12)
            assert jet.dt[0] == pytest.approx(ref.dt, rel=1e-10, abs=1e-12)
            assert jet.dxx[0] == pytest.approx(ref.dxx, rel=1e-9, abs=1e-10)

    def test_extrapolation_allowed(self):
        problem = make_problem(True)
        cfg = NetworkConfig(architecture="wave", generalizing=True)
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 0)
        u = net.value(pv.values, [7.0], [0.006], [1e5])  # outside all ranges
        assert 0 < u[0] < 1


class TestCheckpoint:
    def test_round_trip_bit_for_bit(self, tmp_path):
        problem = make_problem()
        cfg = NetworkConfig(architecture="wave")
        net = Network.for_problem(cfg, problem)
        pv = init_params(cfg, 12)
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, {"config": {"model": "wave-pinn"}, "seed": 12,
                               "epoch": 100}, pv.values)
        header, values = load_checkpoint(path)
        assert header["seed"] == 12 and header["epoch"] == 100
        assert values.tobytes() == pv.values.tobytes()
        x = np.linspace(-5, 5, 17)
        t = np.linspace(0, 0.004, 17)
        assert np.array_equal(net.value(pv.values, x, t), net.value(values, x, t))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(UsageError):
            load_checkpoint(path)
