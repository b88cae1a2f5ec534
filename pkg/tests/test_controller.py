import math

import numpy as np
import pytest

from ssmcontrol.controller import (ControllerParams, controller_eval,
                                   normalize_harmonics)

OMEGA = math.pi


class TestStructure:
    def test_harmonic_closure(self):
        assert normalize_harmonics([0, 1]) == (-1, 0, 1)
        assert normalize_harmonics([2]) == (-2, 2)
        assert normalize_harmonics([-1, 0, 1]) == (-1, 0, 1)

    def test_parameter_count_pendulum_family(self, controller_family):
        # Upsilon=1, |H|=3, m=o=1: n_p = 3*1*1 + 3*1*1 = 6
        assert controller_family.n_params == 6

    def test_parameter_count_formula(self):
        fam = ControllerParams.zeros(2, 3, 2, (0, 1), OMEGA)
        gamma = 3  # {-1, 0, 1}
        expected = sum(gamma * 2 * 3 ** j for j in range(3))
        assert fam.n_params == expected

    def test_flatten_round_trip(self):
        rng = np.random.default_rng(4)
        fam = ControllerParams.zeros(2, 2, 1, (0, 1, 2), OMEGA)
        vec = rng.normal(size=fam.n_params)
        again = fam.with_flat(vec).flatten()
        assert np.array_equal(vec, again)

    def test_dict_round_trip(self, controller_family):
        ctl = controller_family.with_flat(np.arange(6.0))
        doc = ctl.to_dict()
        back = ControllerParams.from_dict(doc)
        assert np.array_equal(back.flatten(), ctl.flatten())
        assert back.harmonics == ctl.harmonics


class TestEvaluation:
    def test_zero_controller(self, controller_family):
        for phi in (0.0, 1.3, 4.0):
            assert np.allclose(
                controller_eval(controller_family, np.array([0.4]), phi),
                0.0)

    def test_constant_term_only(self, controller_family):
        ctl = controller_family.with_flat(np.array([1.0, 0, 0, 0, 0, 0]))
        for phi in (0.0, 2.0):
            assert np.allclose(ctl.eval(np.array([123.0]), phi), [1.0])

    def test_linear_term_matches_output(self, controller_family):
        # u_p = (0,0,0,1,0,0): u = x1 * 1
        ctl = controller_family.with_flat(np.array([0, 0, 0, 1.0, 0, 0]))
        for phi in (0.0, 0.7, 3.3):
            assert np.allclose(ctl.eval(np.array([0.3]), phi), [0.3])

    def test_full_family_formula(self, controller_family):
        up = np.array([1.0, 0.5, -0.3, 2.0, 0.1, 0.7])
        ctl = controller_family.with_flat(up)
        y, phi = 0.3, 0.9
        want = (up[0] + up[1] * math.cos(phi) + up[2] * math.sin(phi)
                + y * (up[3] + up[4] * math.cos(phi)
                       + up[5] * math.sin(phi)))
        assert np.allclose(ctl.eval(np.array([y]), phi), [want], rtol=1e-15)

    def test_periodic_in_phi(self, controller_family):
        rng = np.random.default_rng(9)
        ctl = controller_family.with_flat(rng.normal(size=6))
        for phi in rng.uniform(0, 2 * math.pi, size=8):
            a = ctl.eval(np.array([0.2]), phi)
            b = ctl.eval(np.array([0.2]), phi + 2 * math.pi)
            assert np.allclose(a, b, atol=1e-12)

    def test_complex_tensor_consistency(self, controller_family):
        rng = np.random.default_rng(13)
        ctl = controller_family.with_flat(rng.normal(size=6))
        y, phi = np.array([0.45]), 1.234
        want = ctl.eval(y, phi)
        got = np.zeros(1, dtype=complex)
        for j in range(2):
            for h in ctl.harmonics:
                D = ctl.complex_tensor(j, h)
                val = D if j == 0 else D @ y
                got += val * np.exp(1j * h * phi)
        assert np.allclose(got.real, want, atol=1e-14)
        assert np.max(np.abs(got.imag)) < 1e-14

    def test_pack_matches_eval(self):
        rng = np.random.default_rng(21)
        fam = ControllerParams.zeros(2, 2, 2, (0, 1), OMEGA)
        ctl = fam.with_flat(rng.normal(size=fam.n_params))
        pack = ctl.pack()
        for _ in range(10):
            y = rng.normal(size=2)
            phi = rng.uniform(0, 2 * math.pi)
            assert np.allclose(pack.eval(y, phi), ctl.eval(y, phi),
                               rtol=1e-12, atol=1e-13)

    def test_output_dimension_checked(self, controller_family):
        with pytest.raises(ValueError):
            controller_family.eval(np.zeros(2), 0.0)

    def test_scaled(self, controller_family):
        ctl = controller_family.with_flat(np.arange(6.0))
        assert np.allclose(ctl.scaled(0.5).flatten(),
                           0.5 * np.arange(6.0))
