"""Acceptance checks, shared by ``epholo verify`` and the test suite.

Each check returns a :class:`CheckResult`; suites group them so
``--only algebra`` runs just the exact-arithmetic checks.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _backend
from .algebra import (
    chained_generators,
    compose,
    enumerate_orderings,
    paper_generators,
    spectrum_angles,
)
from .core import eigs3
from .families import paper_2x2, paper_3x3, tep_3x3
from .locator import Region, locate, residual_tol
from .tracker import ParameterLoop, compose_signatures, dense_permutation, track

TARGET_EPS = ((1.401, 1.948), (2.072, 1.686), (2.959, 2.052))
EP_TOL = 1e-3
MODEL_REGION = Region(0.4, 3.5, 1.6, 2.2, 200, 120)

# derived loops for the 3x3 model (see tests/test_tracker.py for the oracle)
TWO_EP_LOOP = ((0.9, 1.55), (2.4, 2.00))
THREE_EP_LOOP = ((1.0, 1.50), (3.3, 2.25))
SAMPLES = 150


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    limit: float
    failures: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.criterion}. {self.name} ({self.elapsed:.2f}s / {self.limit:g}s): {self.detail}"


def _timed(criterion, name, limit, fn) -> CheckResult:
    t0 = time.perf_counter()
    failures: list[str] = []
    try:
        detail = fn(failures)
    except Exception as exc:  # a crashing check is a failed check
        failures.append(f"{type(exc).__name__}: {exc}")
        detail = "raised"
    elapsed = time.perf_counter() - t0
    if elapsed > limit:
        failures.append(f"runtime {elapsed:.2f}s exceeds {limit:g}s")
    if failures:
        detail = detail + "; " + "; ".join(failures)
    return CheckResult(criterion, name, not failures, detail, elapsed, limit, failures)


# -- 1 ----------------------------------------------------------------------

def check_ep_coordinates() -> CheckResult:
    def body(fail):
        f = paper_3x3()
        recs = locate(f, MODEL_REGION)
        if len(recs) != 3:
            fail.append(f"found {len(recs)} EPs, expected 3")
        for rec in recs:
            if rec.residual > residual_tol(f(*rec.location)):
                fail.append(f"residual {rec.residual:.2e} at {rec.location}")
        for pa, pb in TARGET_EPS:
            near = [r for r in recs if abs(r.location[0] - pa) <= EP_TOL and abs(r.location[1] - pb) <= EP_TOL]
            if not near:
                closest = min(recs, key=lambda r: math.dist(r.location, (pa, pb)), default=None)
                got = f"({closest.location[0]:.4f}, {closest.location[1]:.4f})" if closest else "none"
                fail.append(f"no EP within {EP_TOL} of target ({pa}, {pb}); nearest {got}")
        return "EPs " + ", ".join(f"({r.location[0]:.4f}, {r.location[1]:.4f})" for r in recs)

    return _timed(1, "EP coordinates", 10.0, body)


# -- 2 ----------------------------------------------------------------------

def check_single_ep() -> CheckResult:
    def body(fail):
        res = track(paper_2x2(), ParameterLoop.circle((0.0, 0.0), 1.0, samples_per_segment=SAMPLES), track_vectors=True)
        sig = res.signature
        if sig.permutation != (1, 0):
            fail.append(f"permutation {sig.permutation}, expected swap")
        if sig.order_permutation != 2:
            fail.append(f"order {sig.order_permutation}, expected 2")
        if sig.order_signed != 4:
            fail.append(f"signed order {sig.order_signed}, expected 4")
        return str(sig)

    return _timed(2, "single-EP exchange", 1.0, body)


# -- 3 ----------------------------------------------------------------------

def check_two_ep() -> CheckResult:
    def body(fail):
        f = paper_3x3()
        loop = ParameterLoop.rectangle(*TWO_EP_LOOP, samples_per_segment=SAMPLES, cycles=3)
        oracle, _ = dense_permutation(f, loop, 10_000)
        if sorted(len(c) for c in _cycles(oracle)) != [3]:
            fail.append(f"dense oracle gives {oracle}, not a 3-cycle")
        res = track(f, loop, track_vectors=True)
        sig = res.signature
        if sig.permutation != oracle:
            fail.append(f"tracker {sig.permutation} disagrees with oracle {oracle}")
        if sig.order_permutation != 3 or sig.order_signed != 3:
            fail.append(f"orders {sig.order_permutation}/{sig.order_signed}, expected 3/3")
        total = compose_signatures(res.per_cycle)
        if not total.is_identity():
            fail.append(f"three cycles compose to {total}")
        if not res.cumulative[2].is_identity():
            fail.append(f"measured after 3 cycles: {res.cumulative[2]}")
        return f"{sig}; 3 cycles -> {total}"

    return _timed(3, "two-EP three-cycle", 30.0, body)


# -- 4 ----------------------------------------------------------------------

def _three_ep_track():
    loop = ParameterLoop.rectangle(*THREE_EP_LOOP, samples_per_segment=SAMPLES, cycles=2)
    return track(paper_3x3(), loop, track_vectors=True)


def check_three_ep() -> CheckResult:
    def body(fail):
        res = _three_ep_track()
        sig = res.signature
        lengths = sorted(len(c) for c in _cycles(sig.permutation))
        if lengths != [1, 2]:
            fail.append(f"cycle type {lengths}, expected a transposition")
        if sig.order_signed not in (2, 4):
            fail.append(f"signed order {sig.order_signed} not in {{2, 4}}")
        perm2 = res.cumulative[1].permutation
        if perm2 != (0, 1, 2):
            fail.append(f"modes not restored after 2 cycles: {perm2}")
        return f"{sig}; fixed mode returns after 1 cycle, pair after 2"

    return _timed(4, "three-EP behaviour", 30.0, body)


# -- 5 ----------------------------------------------------------------------

def check_tep() -> CheckResult:
    def body(fail):
        res = track(tep_3x3(1.0), ParameterLoop.circle((0.0, 0.0), 1.0, samples_per_segment=SAMPLES, cycles=3))
        sig = res.signature
        if sorted(len(c) for c in _cycles(sig.permutation)) != [3]:
            fail.append(f"TEP permutation {sig.permutation} is not a 3-cycle")
        if [s.permutation == (0, 1, 2) for s in res.cumulative] != [False, False, True]:
            fail.append("TEP modes not first restored after cycle 3")
        three = _three_ep_track().signature
        if not (sig.order_permutation == 3 and three.order_permutation == 2):
            fail.append(f"orders TEP={sig.order_permutation}, three EPs={three.order_permutation}")
        return f"TEP order {sig.order_permutation} vs three separate EPs order {three.order_permutation}"

    return _timed(5, "TEP cyclic shift", 5.0, body)


# -- 6, 7 -------------------------------------------------------------------

def check_four_mode() -> CheckResult:
    def body(fail):
        rows = enumerate_orderings(chained_generators(4))
        orders = [o for _, _, o in rows]
        if len(rows) != 6 or any(o != 4 for o in orders):
            fail.append(f"orders {orders}")
        return f"{len(rows)} orderings, orders {sorted(set(orders))}"

    return _timed(6, "four-mode algebra", 0.1, body)


def check_algebra() -> CheckResult:
    def body(fail):
        g = paper_generators(3)
        pairs = [("M12", "M23"), ("M23", "M12"), ("M23", "M31"), ("M31", "M23"), ("M31", "M12"), ("M12", "M31")]
        g["M31"] = g["M13"]
        cube = [Fraction(0), Fraction(1, 3), Fraction(2, 3)]
        for a, b in pairs:
            if spectrum_angles(compose(g[a], g[b])) != cube:
                fail.append(f"{a}{b} spectrum")
        triples = enumerate_orderings([g["M12"], g["M23"], g["M31"]])
        for idx, p, _ in triples:
            if any((2 * t) % 1 != 0 for t in spectrum_angles(p)):
                fail.append(f"M(3) ordering {idx} has gamma^2 != 1")
        if compose(g["M12"], g["M23"]) == compose(g["M23"], g["M12"]):
            fail.append("[M12, M23] = 0")
        return "six M(2) spectra {1, w, w'}; six M(3) with gamma^2 = 1; [M12, M23] != 0"

    return _timed(7, "algebra exhaustiveness", 0.1, body)


# -- 8 ----------------------------------------------------------------------

def vieta_failures(n_mats: int = 100_000, seed: int = 1) -> int:
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(n_mats, 3, 3)) + 1j * rng.normal(size=(n_mats, 3, 3))
    mats *= rng.uniform(0.1, 10.0, size=(n_mats, 1, 1))
    sc = np.maximum(1.0, np.abs(mats).max(axis=(1, 2)))
    tr = np.trace(mats, axis1=1, axis2=2)
    det = np.linalg.det(mats)
    bad = 0
    for vals in (_backend.eigvals_batch(mats), np.array([eigs3(m).values for m in mats])):
        a = -tr
        b = (
            mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
            + mats[:, 0, 0] * mats[:, 2, 2] - mats[:, 0, 2] * mats[:, 2, 0]
            + mats[:, 1, 1] * mats[:, 2, 2] - mats[:, 1, 2] * mats[:, 2, 1]
        )
        c = -det
        resid = np.abs(vals**3 + a[:, None] * vals**2 + b[:, None] * vals + c[:, None])
        bad += int(np.sum(np.abs(vals.sum(1) - tr) > 1e-10 * sc))
        bad += int(np.sum(np.abs(vals.prod(1) - det) > 1e-10 * sc**3))
        bad += int(np.sum(np.any(resid > 1e-10 * sc[:, None] ** 3, axis=1)))
    return bad


def discriminant_failures(n_mats: int = 10_000, seed: int = 2) -> int:
    """``-108 D`` against ``prod (l_i - l_j)^2`` from LAPACK eigenvalues."""
    rng = np.random.default_rng(seed)
    mats = rng.normal(size=(n_mats, 3, 3)) + 1j * rng.normal(size=(n_mats, 3, 3))
    sc = np.maximum(1.0, np.abs(mats).max(axis=(1, 2)))
    lam = np.linalg.eigvals(mats)
    brute = ((lam[:, 0] - lam[:, 1]) * (lam[:, 1] - lam[:, 2]) * (lam[:, 2] - lam[:, 0])) ** 2
    d = _backend.discriminant_batch(mats)
    return int(np.sum(np.abs(-108.0 * d - brute) > 1e-9 * sc**6))


def _cycles(perm):
    seen, out = set(), []
    for s in range(len(perm)):
        if s in seen:
            continue
        c, i = [], s
        while i not in seen:
            seen.add(i)
            c.append(i)
            i = perm[i]
        out.append(tuple(c))
    return out


def _cycle_type(perm):
    return tuple(sorted(len(c) for c in _cycles(perm)))


def homotopy_loops():
    """Three loop shapes for each enclosed EP subset of the 3x3 model.

    Keys name the enclosed EPs (1-3 ordered by alpha inside the model
    region); values are (shapes, expected cycle type).
    """
    e1, e2, e3 = (1.0415, 1.948), (2.0722, 1.6859), (2.9585, 2.052)

    def around(c, r):
        return [
            ParameterLoop.circle(c, r, samples_per_segment=80),
            ParameterLoop.rectangle((c[0] - r, c[1] - r), (c[0] + r, c[1] + r), samples_per_segment=80),
            ParameterLoop(vertices=((c[0] + r, c[1]), (c[0] - r, c[1] + r), (c[0] - r, c[1] - r)), samples_per_segment=80),
        ]

    return {
        "none": (around((0.6, 1.7), 0.1), (1, 1, 1)),
        "EP1": (around(e1, 0.1), (1, 2)),
        "EP2": (around(e2, 0.1), (1, 2)),
        "EP3": (around(e3, 0.1), (1, 2)),
        "EP1+EP2": (
            [
                ParameterLoop.rectangle(*TWO_EP_LOOP, samples_per_segment=80),
                ParameterLoop.circle((1.55, 1.80), 0.57, samples_per_segment=80),
                ParameterLoop(vertices=((0.8, 2.05), (1.5, 1.5), (2.5, 1.5), (2.4, 1.9)), samples_per_segment=80),
            ],
            (3,),
        ),
        "EP1+EP2+EP3": (
            [
                ParameterLoop.rectangle(*THREE_EP_LOOP, samples_per_segment=80),
                ParameterLoop(
                    vertices=((0.9, 1.9), (1.6, 1.45), (2.7, 1.5), (3.3, 2.0), (3.0, 2.2), (1.2, 2.15)),
                    samples_per_segment=80,
                ),
                ParameterLoop(vertices=((0.8, 2.0), (2.0, 1.4), (3.4, 2.1), (2.2, 2.2)), samples_per_segment=80),
            ],
            (1, 2),
        ),
    }


def check_properties() -> CheckResult:
    def body(fail):
        notes = []
        nv = vieta_failures()
        if nv:
            fail.append(f"{nv} Vieta/residual violations")
        nd = discriminant_failures()
        if nd:
            fail.append(f"{nd} discriminant mismatches")
        notes.append(f"Vieta 1e5 {'ok' if not nv else 'FAIL'}, discriminant 1e4 {'ok' if not nd else 'FAIL'}")

        f = paper_3x3()
        for name, (loops, ctype) in homotopy_loops().items():
            types = set()
            for loop in loops:
                sig = track(f, loop, precheck=False).signature
                types.add(_cycle_type(sig.permutation))
            if types != {ctype}:
                fail.append(f"{name}: cycle types {types}, expected {ctype}")
        notes.append("homotopy ok")

        loop = ParameterLoop.rectangle(*TWO_EP_LOOP, samples_per_segment=60)
        s1 = track(f, loop, track_vectors=True, precheck=False).signature
        s2 = track(f, loop.replace(samples_per_segment=120), track_vectors=True, precheck=False).signature
        if s1 != s2:
            fail.append(f"doubling changed {s1} -> {s2}")
        rev = track(f, loop.replace(orientation="negative"), track_vectors=True, precheck=False).signature
        inv = s1.as_signed().inverse()
        if rev.permutation != inv.perm or rev.order_signed != s1.order_signed:
            fail.append(f"reversed loop {rev} is not the inverse of {s1}")
        none = track(f, ParameterLoop.circle((0.6, 1.7), 0.1, samples_per_segment=60), track_vectors=True, precheck=False)
        if not none.signature.is_identity():
            fail.append(f"no-EP loop gave {none.signature}")
        notes.append("doubling/orientation/no-EP ok")
        return ", ".join(notes)

    return _timed(8, "property suites", 60.0, body)


SUITES = {
    "locator": [check_ep_coordinates],
    "tracker": [check_single_ep, check_two_ep, check_three_ep, check_tep],
    "algebra": [check_four_mode, check_algebra],
    "properties": [check_properties],
}

ALL_CHECKS = [
    check_ep_coordinates,
    check_single_ep,
    check_two_ep,
    check_three_ep,
    check_tep,
    check_four_mode,
    check_algebra,
    check_properties,
]


def run(only: str | None = None, echo=print) -> list[CheckResult]:
    if only is not None and only not in SUITES:
        raise ValueError(f"unknown suite {only!r}; choose from {', '.join(SUITES)}")
    checks = SUITES[only] if only else ALL_CHECKS
    results = []
    for check in checks:
        res = check()
        echo(res.line())
        results.append(res)
    return results
