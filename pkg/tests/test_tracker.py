import io
import json

import numpy as np
import pytest

from epholo.algebra import SignedPermutation, order
from epholo.errors import AmbiguousMatching, ConfigError, LoopTooCloseToEP
from epholo.families import custom_affine, paper_2x2, paper_3x3, tep_3x3
from epholo.locator import Region
from epholo.tracker import (
    HolonomySignature,
    ParameterLoop,
    TrackResult,
    compose_signatures,
    dense_permutation,
    holonomy_of,
    sheet_surface,
    signature_from_transport,
    track,
)
from epholo.verify import THREE_EP_LOOP, TWO_EP_LOOP

optimize = pytest.importorskip("scipy.optimize")

EP1 = (1.0414839340, 1.9480027489)
EP2 = (2.0721736378, 1.6859467860)
EP3 = (2.9585160660, 2.0519972511)


def lapack_oracle(f, loop, samples_per_segment=10_000):
    """Fixed dense sampling with LAPACK eigenvalues and Hungarian matching.

    Shares nothing with the tracker beyond the loop geometry.
    """
    point = loop.point_fn()
    steps = loop.n_segments * samples_per_segment
    s = np.arange(steps + 1) / steps
    pts = np.array([point(x) for x in s[:-1]] + [tuple(loop.base_point)])
    vals = np.linalg.eigvals(f.batch(pts[:, 0], pts[:, 1]))
    cur = vals[0][np.lexsort((vals[0].imag, vals[0].real))]
    base = cur.copy()
    for v in vals[1:]:
        rows, cols = optimize.linear_sum_assignment(np.abs(cur[:, None] - v[None, :]))
        cur = v[cols[np.argsort(rows)]]
    rows, cols = optimize.linear_sum_assignment(np.abs(cur[:, None] - base[None, :]))
    return tuple(int(c) for c in cols[np.argsort(rows)])


def cycle_type(perm):
    return SignedPermutation(perm, (1,) * len(perm)).cycle_type()


class TestOracleAgreement:
    @pytest.mark.parametrize(
        "loop, expected_type",
        [
            (ParameterLoop.rectangle(*TWO_EP_LOOP), (3,)),
            (ParameterLoop.rectangle(*THREE_EP_LOOP), (1, 2)),
            (ParameterLoop.circle(EP1, 0.1), (1, 2)),
            (ParameterLoop.circle(EP2, 0.1), (1, 2)),
            (ParameterLoop.circle(EP3, 0.1), (1, 2)),
            (ParameterLoop.circle((0.6, 1.9), 0.1), (1, 1, 1)),
        ],
    )
    def test_model_loops(self, loop, expected_type):
        f = paper_3x3()
        oracle = lapack_oracle(f, loop)
        assert cycle_type(oracle) == expected_type
        dense, ratio = dense_permutation(f, loop)
        assert dense == oracle
        assert ratio < 0.3
        assert track(f, loop).permutation == oracle

    def test_two_ep_rectangle_geometry(self):
        loop = ParameterLoop.rectangle(*TWO_EP_LOOP)
        assert loop.encloses(EP1) and loop.encloses(EP2) and not loop.encloses(EP3)
        loop = ParameterLoop.rectangle(*THREE_EP_LOOP)
        assert all(loop.encloses(e) for e in (EP1, EP2, EP3))

    def test_narrow_rectangle_misses_first_ep(self):
        # a rectangle starting at alpha = 1.1 leaves the first EP outside
        loop = ParameterLoop.rectangle((1.1, 1.55), (2.4, 2.00))
        assert not loop.encloses(EP1) and loop.encloses(EP2)
        assert cycle_type(lapack_oracle(paper_3x3(), loop, 2000)) == (1, 2)


class TestModel2x2:
    def test_swap(self):
        res = track(paper_2x2(), ParameterLoop.circle((0, 0), 1.0))
        assert res.permutation == (1, 0)
        assert res.samples[0][0] == res.samples[-1][0]

    def test_signs_two_cycles(self):
        loop = ParameterLoop.circle((0, 0), 1.0, cycles=2)
        res = track(paper_2x2(), loop, track_vectors=True)
        sig = res.signature
        assert sig.order_permutation == 2 and sig.order_signed == 4
        assert res.cumulative[1].permutation == (0, 1)
        assert res.cumulative[1].signs == (-1, -1)
        assert res.phase_defect < 0.05

    def test_four_cycles_identity(self):
        loop = ParameterLoop.circle((0, 0), 0.5, cycles=4)
        res = track(paper_2x2(E0=1 - 1j), loop, track_vectors=True)
        assert res.cumulative[-1].is_identity()
        assert not any(c.is_identity() for c in res.cumulative[:-1])

    def test_closure(self):
        res = track(paper_2x2(), ParameterLoop.circle((0, 0), 1.0, cycles=3))
        first = sorted(res.samples[0][1].values, key=lambda z: (z.real, z.imag))
        last = sorted(res.samples[-1][1].values, key=lambda z: (z.real, z.imag))
        assert np.allclose(first, last, atol=1e-9)


class TestInvariants:
    @pytest.mark.parametrize("loop", [ParameterLoop.rectangle(*TWO_EP_LOOP), ParameterLoop.circle(EP2, 0.2)])
    def test_doubling(self, loop):
        f = paper_3x3()
        a = track(f, loop.replace(samples_per_segment=50), track_vectors=True).signature
        b = track(f, loop.replace(samples_per_segment=100), track_vectors=True).signature
        assert a == b

    @pytest.mark.parametrize("loop", [ParameterLoop.rectangle(*TWO_EP_LOOP), ParameterLoop.rectangle(*THREE_EP_LOOP)])
    def test_orientation_inversion(self, loop):
        f = paper_3x3()
        fwd = track(f, loop).signature
        back = track(f, loop.replace(orientation="negative")).signature
        assert back.as_signed() == fwd.as_signed().inverse()
        assert back.order_permutation == fwd.order_permutation

    def test_orientation_inversion_signed(self):
        loop = ParameterLoop.circle((0, 0), 1.0)
        fwd = track(paper_2x2(), loop, track_vectors=True).signature
        back = track(paper_2x2(), loop.replace(orientation="negative"), track_vectors=True).signature
        assert back.order_signed == fwd.order_signed
        # inverse up to the diagonal gauge
        assert back.as_signed() == fwd.as_signed().inverse().canonical()

    @pytest.mark.parametrize(
        "f, loop",
        [
            (paper_3x3(), ParameterLoop.rectangle(*TWO_EP_LOOP, samples_per_segment=60)),
            (paper_3x3(), ParameterLoop.rectangle(*THREE_EP_LOOP, samples_per_segment=60)),
            (paper_2x2(), ParameterLoop.circle((0, 0), 1.0, samples_per_segment=60)),
            (tep_3x3(), ParameterLoop.circle((0, 0), 1.0, samples_per_segment=60)),
        ],
    )
    def test_multi_cycle_consistency(self, f, loop):
        res = track(f, loop.replace(cycles=6), track_vectors=True)
        one = res.per_cycle[0]
        for k in range(1, 7):
            assert res.cumulative[k - 1] == compose_signatures([one] * k)

    def test_homotopy(self):
        f = paper_3x3()
        base = (0.8, 1.45)
        rect = ParameterLoop(vertices=(base, (2.5, 1.45), (2.5, 2.1), (0.8, 2.1)))
        pent = ParameterLoop(vertices=(base, (2.3, 1.5), (2.6, 1.9), (1.7, 2.3), (0.7, 2.0)))
        assert rect.encloses(EP1) and rect.encloses(EP2) and not rect.encloses(EP3)
        assert pent.encloses(EP1) and pent.encloses(EP2) and not pent.encloses(EP3)
        a = track(f, rect).permutation
        b = track(f, pent).permutation
        assert cycle_type(a) == cycle_type(b) == (3,)

    def test_no_ep_identity(self):
        res = track(paper_3x3(), ParameterLoop.circle((0.6, 1.9), 0.15), track_vectors=True)
        assert res.signature.is_identity()
        assert res.signature.signs == (1, 1, 1)

    def test_orders(self):
        f = paper_3x3()
        two = track(f, ParameterLoop.rectangle(*TWO_EP_LOOP), track_vectors=True).signature
        assert (two.order_permutation, two.order_signed) == (3, 3)
        three = track(f, ParameterLoop.rectangle(*THREE_EP_LOOP), track_vectors=True).signature
        assert three.order_permutation == 2 and three.order_signed in (2, 4)
        tep = track(tep_3x3(), ParameterLoop.circle((0, 0), 1.0), track_vectors=True).signature
        assert tep.order_permutation == 3

    def test_signed_order_divisibility(self):
        f = paper_3x3()
        for loop in [ParameterLoop.circle(e, 0.1) for e in (EP1, EP2, EP3)]:
            sig = track(f, loop, track_vectors=True).signature
            assert sig.order_signed in (sig.order_permutation, 2 * sig.order_permutation)
            # a single EP behaves as the 2x2 case
            assert sig.order_signed == 4


class TestErrors:
    def test_loop_through_ep(self):
        with pytest.raises(LoopTooCloseToEP):
            track(paper_2x2(), ParameterLoop(vertices=((-1, 0), (1, 0), (1, 1))))

    def test_loop_near_model_ep(self):
        a, b = EP2
        loop = ParameterLoop(vertices=((a - 0.3, b + 0.0004), (a + 0.3, b + 0.0004), (a, b + 0.3)))
        with pytest.raises(LoopTooCloseToEP):
            track(paper_3x3(), loop)

    def test_ambiguous_without_precheck(self):
        loop = ParameterLoop(vertices=((-1, 0), (1, 0), (1, 1)), samples_per_segment=10)
        with pytest.raises(AmbiguousMatching):
            track(paper_2x2(), loop, precheck=False, max_depth=10)

    @pytest.mark.parametrize(
        "doc, key",
        [
            ({"vertices": [[0, 0], [1, 0], [1, 1]], "cycles": 0}, "cycles"),
            ({"vertices": [[0, 0], [1, 0], [1, 1]], "orientation": "cw"}, "orientation"),
            ({"vertices": [[0, 0], [1, 0]]}, "vertices"),
            ({"circle": {"center": [0, 0]}}, "circle"),
            ({"shape": 1}, "shape"),
            ({}, "loop"),
        ],
    )
    def test_loop_config_errors(self, doc, key):
        with pytest.raises(ConfigError) as exc:
            ParameterLoop.from_dict(doc)
        assert exc.value.key == key


class TestSerialisation:
    def test_loop_round_trip(self):
        for loop in [ParameterLoop.rectangle(*TWO_EP_LOOP, cycles=2), ParameterLoop.circle((1, 2), 0.5, orientation="negative")]:
            assert ParameterLoop.from_dict(json.loads(json.dumps(loop.to_dict()))) == loop

    def test_result_round_trip(self):
        res = track(paper_2x2(), ParameterLoop.circle((0, 0), 1.0, cycles=2, samples_per_segment=20), track_vectors=True)
        back = TrackResult.from_json(res.to_json())
        assert back.permutation == res.permutation and back.signs == res.signs
        assert back.per_cycle == res.per_cycle and back.cumulative == res.cumulative
        assert len(back.samples) == len(res.samples)
        for (p, e), (q, g) in zip(back.samples, res.samples):
            assert tuple(p) == tuple(q) and e.values == g.values

    def test_output_schema(self):
        d = track(paper_2x2(), ParameterLoop.circle((0, 0), 1.0, samples_per_segment=10)).to_dict()
        assert {"samples", "permutation", "orders"} <= set(d)
        assert "signs" not in d
        assert d["samples"][0]["params"] == [1.0, 0.0]


class TestSignatures:
    def test_holonomy_of(self):
        res = track(paper_2x2(), ParameterLoop.circle((0, 0), 1.0), track_vectors=True)
        sig = holonomy_of(res)
        assert sig.order_signed == 4 and sig.order_permutation == 2

    def test_identity(self):
        sig, defect = signature_from_transport((0, 1, 2), [1, 1, 1])
        assert sig.order_permutation == 1 and sig.order_signed == 1 and defect == 0

    def test_three_cycle(self):
        sig, _ = signature_from_transport((1, 2, 0))
        assert sig.order_permutation == 3 and sig.signs is None

    def test_gauge_invariance(self):
        # rescaling base vectors by c_i changes factors but not cycle products
        perm = (1, 0, 2)
        factors = [0.5j, 2j, 1]
        sig, defect = signature_from_transport(perm, factors)
        c = [2, 1j, -1]
        moved = [factors[i] * c[perm[i]] / c[i] for i in range(3)]
        assert signature_from_transport(perm, moved)[0] == sig
        assert sig.signs == (-1, 1, 1) and defect == pytest.approx(0)

    def test_divisibility(self):
        for perm in [(0, 1, 2), (1, 0, 2), (1, 2, 0)]:
            for signs in [(1, 1, 1), (-1, 1, 1), (-1, -1, 1)]:
                sig = HolonomySignature.from_signed(SignedPermutation(perm, signs))
                assert sig.order_signed % sig.order_permutation == 0
                assert sig.order_signed == order(SignedPermutation(perm, signs))

    def test_round_trip(self):
        sig = HolonomySignature.from_signed(SignedPermutation((1, 0, 2), (-1, 1, 1)))
        assert HolonomySignature.from_dict(sig.to_dict()) == sig

    def test_str(self):
        sig = HolonomySignature.from_signed(SignedPermutation((1, 0), (-1, 1)))
        assert str(sig) == "(0 1)[-,+] order=2 signed_order=4"


class TestSheetSurface:
    def test_model_region(self):
        r = Region(0.4, 3.5, 1.6, 2.2, 60, 25)
        surf = sheet_surface(paper_3x3(), r)
        assert surf.values.shape == (60, 25, 3)
        # continuity along each alpha scanline
        jumps = np.abs(np.diff(surf.values, axis=0)).max()
        assert jumps < 0.5

    def test_constant_family_flat(self):
        f = custom_affine(np.diag([0, 1, 3]).astype(complex), np.zeros((3, 3)), np.zeros((3, 3)))
        surf = sheet_surface(f, Region(-1, 1, -1, 1, 5, 4))
        assert np.allclose(surf.values, [0, 1, 3], atol=1e-14)
        assert not surf.flags.any()

    @pytest.mark.parametrize("axis", ["alpha", "beta"])
    def test_2x2_sqrt_profile(self, axis):
        r = Region(-1, 1, -1, 1, 20, 20)
        surf = sheet_surface(paper_2x2(), r, axis=axis)
        a, b = r.axes()
        A, B = r.mesh()
        gap = np.abs(surf.values[..., 0] - surf.values[..., 1])
        assert np.allclose(gap, 2 * np.sqrt(np.hypot(A, B)))

    def test_ep_on_node_flags_scanline(self):
        # odd grid puts the EP exactly on the centre node
        r = Region(-1, 1, -1, 1, 21, 21)
        surf = sheet_surface(paper_2x2(), r, axis="alpha")
        assert surf.flags[10] and surf.flags.sum() == 1
        buf = io.StringIO()
        rows = surf.write_csv(buf)
        assert rows == 21 * 21
        lines = buf.getvalue().splitlines()
        assert lines[0] == "alpha,beta,re1,im1,re2,im2,flag"
        flagged = [ln for ln in lines[1:] if ln.endswith(",1")]
        assert len(flagged) == 21
        assert all(float(ln.split(",")[1]) == 0 for ln in flagged)
