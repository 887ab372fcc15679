import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epholo.core import OMEGA, discriminant3, eigs, eigs3
from epholo.errors import ConfigError
from epholo.families import (
    Params,
    custom_affine,
    evaluate,
    family_from_dict,
    load_family,
    paper_2x2,
    paper_3x3,
    tep_3x3,
)
from epholo.tracker import ParameterLoop, track

coord = st.floats(-50, 50, allow_nan=False)


class TestModel3x3:
    def test_entry_vanishes(self):
        assert paper_3x3()(3, 1)[0, 0] == 0

    def test_at_2_2(self):
        m = paper_3x3()(2, 2)
        assert m[0, 0] == -1 - 1j and m[1, 1] == -1 - 1j and m[2, 2] == -2j

    def test_origin(self):
        assert paper_3x3()(0, 0)[1, 1] == 1 - 3j

    def test_diagonal_formula(self):
        a, b = 0.7, -1.3
        m = paper_3x3()(a, b)
        assert m[0, 0] == pytest.approx((a - 3) - 1j * (b - 1))
        assert m[1, 1] == pytest.approx((1 - a) - 1j * (3 - b))

    @given(coord, coord)
    def test_symmetric_couplings(self, a, b):
        m = paper_3x3()(a, b)
        off = m[~np.eye(3, dtype=bool)]
        assert np.all(off == 0.4)

    def test_discriminant_local_minimum_at_ep(self):
        # the model EP nearest the first target coordinate (alpha digits swapped)
        f = paper_3x3()
        a0, b0 = 1.0414839340, 1.9480027489
        centre = abs(discriminant3(f(a0, b0)))
        assert centre < 1e-8
        for da, db in [(1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)]:
            assert abs(discriminant3(f(a0 + da, b0 + db))) > centre

    def test_mirror_symmetry(self):
        # (a, b) -> (4 - a, 4 - b) exchanges the first two diagonal entries
        f = paper_3x3()
        v1 = sorted(eigs3(f(0.3, 1.1)).values, key=lambda z: (z.real, z.imag))
        v2 = sorted(eigs3(f(3.7, 2.9)).values, key=lambda z: (z.real, z.imag))
        assert np.allclose(v1, v2)


class TestModel2x2:
    def test_origin_is_ep(self):
        assert eigs(paper_2x2(E0=0.5)(0, 0)).values == (0.5, 0.5)

    def test_unit_delta(self):
        vals = eigs(paper_2x2()(1, 0)).values
        assert sorted(v.real for v in vals) == [-1, 1]

    def test_delta_scale(self):
        m = paper_2x2(delta_scale=4)(0, 1)
        assert m[1, 0] == 4j and m[0, 1] == 1

    def test_loop_swaps(self):
        res = track(paper_2x2(), ParameterLoop.circle((0, 0), 1.0), precheck=False)
        assert res.permutation == (1, 0)

    def test_bad_scale(self):
        with pytest.raises(ValueError):
            paper_2x2(delta_scale=0)


class TestTep:
    def test_nilpotent(self):
        assert eigs3(tep_3x3()(0, 0)).values == (0, 0, 0)

    def test_cube_roots(self):
        vals = eigs3(tep_3x3(1e-3)(1, 0)).values
        expected = [0.1, 0.1 * OMEGA, 0.1 * OMEGA.conjugate()]
        for e in expected:
            assert min(abs(v - e) for v in vals) < 1e-12

    @pytest.mark.parametrize("eps", [1e-6, 1e-4, 1e-2, 1.0])
    def test_analytic_roots(self, eps):
        rng = np.random.default_rng(7)
        for a, b in rng.uniform(-2, 2, size=(50, 2)):
            z = complex(a, b) * eps
            root = abs(z) ** (1 / 3) * np.exp(1j * np.angle(z) / 3)
            vals = eigs3(tep_3x3(eps)(a, b)).values
            for k in range(3):
                assert min(abs(v - root * OMEGA**k) for v in vals) < 1e-10

    def test_loop_cycles(self):
        loop = ParameterLoop.circle((0, 0), 1.0)
        res = track(tep_3x3(), loop, precheck=False)
        assert sorted(len(c) for c in res.signature.as_signed().cycles()) == [3]
        res3 = track(tep_3x3(), loop.replace(cycles=3), precheck=False)
        assert res3.cumulative[0].permutation == res.permutation
        assert res3.cumulative[-1].is_identity()


class TestEvaluate:
    @pytest.mark.parametrize("f", [paper_3x3(), paper_2x2(1 + 1j), tep_3x3(0.5)])
    def test_origin_is_base(self, f):
        assert np.array_equal(evaluate(f, Params(0.0, 0.0)), f.base)

    @settings(max_examples=200)
    @given(coord, coord, st.integers(-64, 64))
    def test_linearity(self, a, b, k):
        # c a power-of-two fraction keeps the arithmetic exact
        c = k / 16
        f = paper_3x3()
        diff = f(a + c, b) - f(a, b)
        assert np.array_equal(diff, c * f.grad_alpha) or np.allclose(diff, c * f.grad_alpha, atol=1e-13 * (1 + abs(a)))

    def test_batch_matches_scalar(self):
        f = paper_3x3()
        a = np.linspace(0, 4, 7)
        b = np.linspace(1, 3, 5)
        A, B = np.meshgrid(a, b, indexing="ij")
        out = f.batch(A, B)
        assert out.shape == (7, 5, 3, 3)
        assert np.array_equal(out[3, 2], f(a[3], b[2]))

    def test_immutable(self):
        f = paper_3x3()
        with pytest.raises(ValueError):
            f.base[0, 0] = 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            custom_affine(np.eye(2), np.eye(3), np.eye(3))


class TestDescriptors:
    @pytest.mark.parametrize("f", [paper_3x3(), paper_2x2(0.5 - 1j, 2.0), tep_3x3(0.01),
                                   custom_affine(np.eye(2), [[0, 1], [0, 0]], [[0, 0], [1j, 0]])])
    def test_round_trip(self, f):
        d = json.loads(json.dumps(f.to_dict()))
        assert family_from_dict(d) == f

    def test_builtin_by_kind(self):
        assert family_from_dict({"kind": "tep3x3", "epsilon": 0.5}) == tep_3x3(0.5)
        assert family_from_dict({"kind": "paper2x2", "E0": [1, 0]}) == paper_2x2(1)

    def test_load_builtin_and_file(self, tmp_path):
        assert load_family("paper3x3") == paper_3x3()
        p = tmp_path / "fam.json"
        p.write_text(json.dumps(tep_3x3(0.2).to_dict()))
        assert load_family(str(p)) == tep_3x3(0.2)

    @pytest.mark.parametrize(
        "doc, key",
        [
            ({"kind": "nope"}, "kind"),
            ({"kind": "custom-affine", "n": 2}, "base"),
            ({"kind": "custom-affine"}, "n"),
            ({"kind": "custom-affine", "n": 4}, "n"),
            ({"kind": "custom-affine", "n": 2, "base": [[1, 2], [3, 4]],
              "grad_alpha": [], "grad_beta": []}, "base"),
            ({"kind": "tep3x3", "epsilon": -1}, "epsilon"),
            ({"kind": "paper3x3", "colour": 1}, "colour"),
            ({"kind": "paper3x3", "n": 2}, "n"),
            ({"kind": "paper2x2", "E0": "x"}, "E0"),
        ],
    )
    def test_errors_name_key(self, doc, key):
        with pytest.raises(ConfigError) as exc:
            family_from_dict(doc)
        assert exc.value.key == key
        assert str(exc.value).startswith(f"{key}:")

    def test_missing_file(self):
        with pytest.raises(ConfigError) as exc:
            load_family("/nonexistent/family.json")
        assert exc.value.key == "family"
