import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hyperdescent.barycenter import BarycenterProblem, objective
from hyperdescent.geometry import (
    DiskModel,
    DomainError,
    EuclGradient,
    Point,
    conformal_factor,
    distance,
)
from hyperdescent.optimizers import (
    RunConfig,
    Trace,
    euclidean_step,
    geodesic_step,
    make_rng,
    natural_step,
    rule_code,
    run,
)

UNIT = DiskModel(1.0, 2)
STEPS = (euclidean_step, natural_step, geodesic_step)


class TestRules:
    @pytest.mark.parametrize("step", STEPS)
    def test_zero_gradient_fixed_point(self, step):
        p = Point([0.3, -0.6], UNIT)
        q = step(p, EuclGradient(p, [0.0, 0.0]), 0.5)
        np.testing.assert_array_equal(q.coords, p.coords)

    def test_euclidean_hand_case(self):
        o = UNIT.origin()
        q = euclidean_step(o, EuclGradient(o, [1.0, 0.0]), 0.1)
        np.testing.assert_array_equal(q.coords, [-0.1, 0.0])

    def test_euclidean_clipped(self):
        p = Point([0.9, 0.0], UNIT)
        q = euclidean_step(p, EuclGradient(p, [-10.0, 0.0]), 1.0)
        assert np.linalg.norm(q.coords) == pytest.approx(1.0 - 1e-10, abs=2.3e-16)

    def test_natural_hand_case(self):
        o = UNIT.origin()
        q = natural_step(o, EuclGradient(o, [1.0, 0.0]), 0.1)
        np.testing.assert_array_equal(q.coords, [-0.025, 0.0])

    def test_geodesic_hand_case(self):
        o = UNIT.origin()
        # ||H^-1 g||_p = 2 * 4 / 4 = 2, so eta = ln 3 / 2 travels ln 3
        q = geodesic_step(o, EuclGradient(o, [4.0, 0.0]), math.log(3.0) / 2.0)
        np.testing.assert_allclose(q.coords, [-0.5, 0.0], atol=1e-15)

    @pytest.mark.parametrize("step", STEPS)
    def test_nonfinite_gradient(self, step):
        p = UNIT.origin()
        with pytest.raises(DomainError):
            step(p, _raw_gradient(p, [np.nan, 0.0]), 0.1)

    @pytest.mark.parametrize("step", STEPS)
    def test_bad_rate(self, step):
        p = UNIT.origin()
        with pytest.raises(ValueError):
            step(p, EuclGradient(p, [1.0, 0.0]), 0.0)

    def test_unknown_rule(self):
        with pytest.raises(ValueError):
            rule_code("adam")

    @settings(max_examples=300)
    @given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95), st.floats(-50, 50), st.floats(-50, 50),
           st.floats(1e-4, 2.0))
    def test_geodesic_step_length(self, a, b, ga, gb, eta):
        assume(math.hypot(a, b) < 0.95)
        p = Point([a, b], UNIT)
        g = np.array([ga, gb])
        expected = eta * math.sqrt(g @ g / conformal_factor(UNIT, p))
        # longer steps from the centre can reach the clipping radius (d ~ 23.7)
        assume(expected <= 20.0)
        q = geodesic_step(p, EuclGradient(p, g), eta)
        # near the boundary one ulp of |q| is worth 2 eps / (1 - |q|^2) in distance
        ulp_dist = 2.0 * np.finfo(float).eps / (1.0 - q.coords @ q.coords)
        assert abs(distance(p, q) - expected) <= 1e-9 * max(1.0, expected) + 4.0 * ulp_dist

    @settings(max_examples=200)
    @given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(-5, 5), st.floats(-5, 5),
           st.sampled_from(["euclidean", "natural", "geodesic"]))
    def test_iterates_interior(self, a, b, ga, gb, rule):
        assume(math.hypot(a, b) < 0.95)
        p = Point([a, b], UNIT)
        step = dict(zip(("euclidean", "natural", "geodesic"), STEPS))[rule]
        q = step(p, EuclGradient(p, [ga * 100, gb * 100]), 1.0)
        assert UNIT.contains(q.coords)

    def test_natural_close_to_geodesic(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = rng.uniform(-0.6, 0.6, 2)
            p = Point(x, UNIT)
            g = EuclGradient(p, rng.normal(size=2))
            errs = []
            for eta in (1e-3, 5e-4):
                a = natural_step(p, g, eta).coords
                b = geodesic_step(p, g, eta).coords
                errs.append(np.linalg.norm(a - b))
            # second order: halving eta quarters the gap
            assert errs[1] <= errs[0] / 3.0 + 1e-15
            assert errs[0] <= 10.0 * 1e-6


def _raw_gradient(p, partials):
    # bypasses the finiteness check of the EuclGradient constructor
    g = object.__new__(EuclGradient)
    object.__setattr__(g, "base", p)
    object.__setattr__(g, "partials", np.asarray(partials, dtype=np.float64))
    return g


def _fixture():
    q = np.array([[0.1, 0.2], [-0.3, 0.4], [0.5, -0.1]])
    return BarycenterProblem(q, UNIT)


class TestRun:
    def test_zero_steps(self):
        p0 = Point([0.2, 0.1], UNIT)
        tr = run(objective(_fixture()), p0, RunConfig(steps=0))
        assert len(tr) == 1
        np.testing.assert_array_equal(tr.iterates[0], p0.coords)

    def test_lengths(self):
        tr = run(objective(_fixture()), UNIT.origin(), RunConfig(steps=25))
        assert tr.iterates.shape == (26, 2)
        assert tr.loss_values.shape == (26,)

    def test_geodesic_converges(self):
        from scipy.optimize import minimize

        f = objective(_fixture())
        best = minimize(f.value, np.zeros(2), method="Nelder-Mead",
                        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 10000})
        tr = run(f, UNIT.origin(), RunConfig(rule="geodesic", learning_rate=0.2, steps=300))
        assert tr.loss_values[-1] - best.fun <= 1e-6
        assert not tr.failed

    def test_deterministic(self):
        f = objective(_fixture())
        cfg = RunConfig(rule="natural", learning_rate=0.05, steps=200, seed=7, stochastic=True)
        a = run(f, UNIT.origin(), cfg)
        b = run(f, UNIT.origin(), cfg)
        np.testing.assert_array_equal(a.iterates, b.iterates)
        c = run(f, UNIT.origin(), RunConfig(rule="natural", learning_rate=0.05, steps=200, seed=8,
                                            stochastic=True))
        assert not np.array_equal(a.iterates, c.iterates)

    def test_nonfinite_truncates(self):
        class Blowup:
            def value(self, x):
                return float(x @ x)

            def gradient(self, x):
                return np.array([np.nan, 0.0]) if x[0] < -0.15 else np.array([1.0, 0.0])

            stochastic_gradient = None

        tr = run(Blowup(), UNIT.origin(), RunConfig(rule="euclidean", learning_rate=0.1, steps=10))
        assert tr.failed
        assert "non-finite" in tr.reason
        assert len(tr) == 3

    def test_stuck_flag(self):
        class Outward:
            def value(self, x):
                return 0.0

            def gradient(self, x):
                return -np.array([1.0, 0.0])

        tr = run(Outward(), UNIT.origin(), RunConfig(rule="euclidean", learning_rate=1.0, steps=200,
                                                       stuck_window=100))
        assert tr.failed and "stuck" in tr.reason

    def test_csv(self, tmp_path):
        tr = run(objective(_fixture()), UNIT.origin(), RunConfig(steps=3))
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "step,loss,x1,x2"
        assert len(lines) == 5
        row = lines[2].split(",")
        assert float(row[1]) == tr.loss_values[1]
        assert float(row[2]) == tr.iterates[1, 0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RunConfig(learning_rate=-1.0)
        with pytest.raises(ValueError):
            RunConfig(steps=-1)
        with pytest.raises(ValueError):
            RunConfig(clip_eps=0.0)
        with pytest.raises(ValueError):
            RunConfig(rule="sgd")


class TestRng:
    def test_streams_differ(self):
        a = make_rng(0, 1).random(4)
        b = make_rng(0, 2).random(4)
        assert not np.array_equal(a, b)

    def test_matches_spawn(self):
        child = np.random.SeedSequence(5).spawn(3)[2]
        ref = np.random.Generator(np.random.PCG64(child)).random(3)
        np.testing.assert_array_equal(make_rng(5, 2).random(3), ref)


def test_trace_type():
    assert isinstance(run(objective(_fixture()), UNIT.origin(), RunConfig(steps=1)), Trace)
