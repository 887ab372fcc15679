"""Continue eigenvalue branches around closed parameter loops and measure
the resulting holonomy as a signed permutation.

Consecutive samples are matched by the cheapest of the n! assignments. A
step is accepted only when that cost is below ``AMBIGUITY * min_gap`` at
the earlier sample; otherwise it is bisected.

Eigenvectors, when tracked, follow biorthogonal transport: with left row
vectors ``y`` and right vectors ``r`` normalised so ``y^T r = 1``, each new
right vector is rescaled so that ``y_prev^T r_new = 1``. After a cycle,
mode ``k`` ends as ``m_k`` times the base vector of the mode it landed on.
The individual ``m_k`` depend on the base gauge; the product of the
``m_k`` around each cycle of the permutation does not, and is the
geometric-phase sign of that cycle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .algebra import SignedPermutation, order, render
from .core import EigenSet, eigvals, eigvec_pair, min_gap
from .errors import AmbiguousMatching, ConfigError, LoopTooCloseToEP
from .families import HamiltonianFamily, Params
from .locator import Region, locate

AMBIGUITY = 0.3
MAX_DEPTH = 24
EXCLUSION_RADIUS = 1e-3
VECTOR_DRIFT = 0.3
PRECHECK_GRID = 80


def _sorted_values(values) -> tuple:
    return tuple(sorted(values, key=lambda z: (z.real, z.imag)))


# -- loops --------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterLoop:
    """Closed polyline (``vertices``) or circle (``center``, ``radius``).

    The first vertex (or ``center + (radius, 0)``) is the base point.
    ``orientation="positive"`` traverses counter-clockwise.
    """

    vertices: tuple | None = None
    center: tuple | None = None
    radius: float | None = None
    samples_per_segment: int = 200
    orientation: str = "positive"
    cycles: int = 1

    def __post_init__(self):
        if (self.vertices is None) == (self.center is None):
            raise ValueError("give either vertices or center+radius")
        if self.vertices is not None:
            verts = tuple(Params(float(a), float(b)) for a, b in self.vertices)
            if len(verts) < 3:
                raise ValueError("a polyline loop needs at least 3 vertices")
            object.__setattr__(self, "vertices", verts)
        else:
            if self.radius is None or not self.radius > 0:
                raise ValueError("circle radius must be positive")
            object.__setattr__(self, "center", Params(float(self.center[0]), float(self.center[1])))
            object.__setattr__(self, "radius", float(self.radius))
        if self.orientation not in ("positive", "negative"):
            raise ValueError("orientation must be 'positive' or 'negative'")
        if self.samples_per_segment < 1 or self.cycles < 1:
            raise ValueError("samples_per_segment and cycles must be positive")

    @classmethod
    def circle(cls, center, radius, **kw) -> "ParameterLoop":
        return cls(center=tuple(center), radius=radius, **kw)

    @classmethod
    def rectangle(cls, lo, hi, **kw) -> "ParameterLoop":
        (a0, b0), (a1, b1) = lo, hi
        return cls(vertices=((a0, b0), (a1, b0), (a1, b1), (a0, b1)), **kw)

    def replace(self, **kw) -> "ParameterLoop":
        d = dict(
            vertices=self.vertices,
            center=self.center,
            radius=self.radius,
            samples_per_segment=self.samples_per_segment,
            orientation=self.orientation,
            cycles=self.cycles,
        )
        d.update(kw)
        return ParameterLoop(**d)

    @property
    def n_segments(self) -> int:
        return len(self.vertices) if self.vertices is not None else 4

    @property
    def base_point(self) -> Params:
        return self.point(0.0)

    def path(self) -> list[Params]:
        """Vertices in traversal order, base point first."""
        v = list(self.vertices)
        area = sum(p[0] * q[1] - q[0] * p[1] for p, q in zip(v, v[1:] + v[:1]))
        ccw = area > 0
        if ccw != (self.orientation == "positive"):
            v = [v[0]] + v[:0:-1]
        return v

    def point_fn(self) -> Callable[[float], Params]:
        """Map ``s`` in ``[0, cycles]`` to the loop; integers hit the base point."""
        if self.vertices is not None:
            v = self.path()
            nseg = len(v)

            def at(s):
                frac = s - math.floor(s)
                u = frac * nseg
                k = min(int(u), nseg - 1)
                t = u - k
                p, q = v[k], v[(k + 1) % nseg]
                if t == 0.0:
                    return p
                return Params(p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))

            return at

        cx, cy = self.center
        r = self.radius
        sign = 1.0 if self.orientation == "positive" else -1.0

        def at_circle(s):
            frac = s - math.floor(s)
            if frac == 0.0:
                return Params(cx + r, cy)
            th = sign * 2.0 * math.pi * frac
            return Params(cx + r * math.cos(th), cy + r * math.sin(th))

        return at_circle

    def point(self, s: float) -> Params:
        return self.point_fn()(s)

    def distance_to(self, p) -> float:
        if self.vertices is None:
            return abs(math.dist(p, self.center) - self.radius)
        v = self.vertices
        return min(_segment_distance(p, a, b) for a, b in zip(v, v[1:] + v[:1]))

    def encloses(self, p) -> bool:
        if self.vertices is None:
            return math.dist(p, self.center) < self.radius
        inside = False
        v = self.vertices
        for (x0, y0), (x1, y1) in zip(v, v[1:] + v[:1]):
            if (y0 > p[1]) != (y1 > p[1]):
                x = x0 + (p[1] - y0) * (x1 - x0) / (y1 - y0)
                if x > p[0]:
                    inside = not inside
        return inside

    def bbox(self) -> tuple[float, float, float, float]:
        if self.vertices is None:
            (cx, cy), r = self.center, self.radius
            return cx - r, cx + r, cy - r, cy + r
        a = [p[0] for p in self.vertices]
        b = [p[1] for p in self.vertices]
        return min(a), max(a), min(b), max(b)

    def to_dict(self) -> dict:
        d = {}
        if self.vertices is not None:
            d["vertices"] = [list(p) for p in self.vertices]
        else:
            d["circle"] = {"center": list(self.center), "radius": self.radius}
        d.update(
            samples_per_segment=self.samples_per_segment,
            orientation=self.orientation,
            cycles=self.cycles,
        )
        return d

    @classmethod
    def from_dict(cls, d) -> "ParameterLoop":
        if not isinstance(d, dict):
            raise ConfigError("loop descriptor must be a JSON object", "loop")
        allowed = {"vertices", "circle", "samples_per_segment", "orientation", "cycles"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError("unknown key", sorted(unknown)[0])
        kw = {}
        for key in ("samples_per_segment", "cycles"):
            if key in d:
                if not isinstance(d[key], int) or isinstance(d[key], bool) or d[key] < 1:
                    raise ConfigError(f"expected a positive integer, got {d[key]!r}", key)
                kw[key] = d[key]
        if "orientation" in d:
            if d["orientation"] not in ("positive", "negative"):
                raise ConfigError("expected 'positive' or 'negative'", "orientation")
            kw["orientation"] = d["orientation"]
        try:
            if "vertices" in d:
                return cls(vertices=tuple(tuple(map(float, p)) for p in d["vertices"]), **kw)
            if "circle" in d:
                c = d["circle"]
                return cls(center=tuple(map(float, c["center"])), radius=float(c["radius"]), **kw)
        except (TypeError, ValueError, KeyError) as exc:
            key = "vertices" if "vertices" in d else "circle"
            raise ConfigError(f"malformed ({exc})", key) from None
        raise ConfigError("need 'vertices' or 'circle'", "loop")


def _segment_distance(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - ax) * dx + (p[1] - ay) * dy) / L2))
    return math.hypot(p[0] - ax - t * dx, p[1] - ay - t * dy)


# -- signatures ---------------------------------------------------------------

@dataclass(frozen=True)
class HolonomySignature:
    permutation: tuple
    signs: tuple | None = None
    order_permutation: int = 1
    order_signed: int | None = None

    @classmethod
    def from_signed(cls, s: SignedPermutation, with_signs: bool = True) -> "HolonomySignature":
        if not with_signs:
            return cls(s.perm, None, order(s.unsigned), None)
        return cls(s.perm, s.signs, order(s.unsigned), order(s))

    def as_signed(self) -> SignedPermutation:
        signs = self.signs if self.signs is not None else (1,) * len(self.permutation)
        return SignedPermutation(self.permutation, signs)

    @property
    def n(self) -> int:
        return len(self.permutation)

    def is_identity(self) -> bool:
        return self.as_signed().is_identity()

    def __str__(self) -> str:
        s = self.as_signed()
        text = render(s) if self.signs is not None else render(s).split("[")[0]
        text += f" order={self.order_permutation}"
        if self.order_signed is not None:
            text += f" signed_order={self.order_signed}"
        return text

    def to_dict(self) -> dict:
        d = {"permutation": list(self.permutation)}
        if self.signs is not None:
            d["signs"] = list(self.signs)
        d["orders"] = {"permutation": self.order_permutation}
        if self.order_signed is not None:
            d["orders"]["signed"] = self.order_signed
        return d

    @classmethod
    def from_dict(cls, d) -> "HolonomySignature":
        signs = tuple(d["signs"]) if d.get("signs") is not None else None
        orders = d.get("orders", {})
        return cls(tuple(d["permutation"]), signs, orders["permutation"], orders.get("signed"))


def signature_from_transport(perm, factors=None) -> tuple[HolonomySignature, float]:
    """Build a canonical signature from ``M e_i = factors[i] e_{perm[i]}``.

    Returns the signature and the largest distance of a cycle product from
    the +-1 it was rounded to (0 without vectors).
    """
    perm = tuple(int(p) for p in perm)
    base = SignedPermutation(perm, (1,) * len(perm))
    if factors is None:
        return HolonomySignature.from_signed(base, with_signs=False), 0.0
    signs = [1] * len(perm)
    defect = 0.0
    for cyc in base.cycles():
        prod = complex(np.prod([factors[i] for i in cyc]))
        s = 1 if prod.real >= 0 else -1
        defect = max(defect, abs(prod - s))
        signs[cyc[0]] = s
    return HolonomySignature.from_signed(SignedPermutation(perm, tuple(signs))), defect


def compose_signatures(sigs) -> HolonomySignature:
    """Holonomy of traversing ``sigs[0]`` first, then ``sigs[1]``, ..."""
    sigs = list(sigs)
    with_signs = all(s.signs is not None for s in sigs)
    total = SignedPermutation.identity(sigs[0].n)
    for s in sigs:
        total = s.as_signed() @ total
    return HolonomySignature.from_signed(total.canonical(), with_signs)


# -- tracking -----------------------------------------------------------------

@dataclass(eq=True)
class TrackResult:
    samples: list
    permutation: tuple
    signs: tuple | None
    refinements: int
    per_cycle: list = field(default_factory=list)
    cumulative: list = field(default_factory=list)
    phase_defect: float | None = None

    @property
    def signature(self) -> HolonomySignature:
        return self.per_cycle[0]

    def to_dict(self) -> dict:
        sig = self.signature
        d = {
            "samples": [
                {"params": list(p), "eigs": [[z.real, z.imag] for z in e.values]}
                for p, e in self.samples
            ],
            "permutation": list(self.permutation),
        }
        if self.signs is not None:
            d["signs"] = list(self.signs)
        d["orders"] = sig.to_dict()["orders"]
        d["refinements"] = self.refinements
        d["per_cycle"] = [s.to_dict() for s in self.per_cycle]
        d["cumulative"] = [s.to_dict() for s in self.cumulative]
        if self.phase_defect is not None:
            d["phase_defect"] = self.phase_defect
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "TrackResult":
        samples = [
            (Params(*s["params"]), EigenSet(tuple(complex(re, im) for re, im in s["eigs"])))
            for s in d["samples"]
        ]
        return cls(
            samples=samples,
            permutation=tuple(d["permutation"]),
            signs=tuple(d["signs"]) if "signs" in d else None,
            refinements=d.get("refinements", 0),
            per_cycle=[HolonomySignature.from_dict(s) for s in d.get("per_cycle", [])],
            cumulative=[HolonomySignature.from_dict(s) for s in d.get("cumulative", [])],
            phase_defect=d.get("phase_defect"),
        )

    @classmethod
    def from_json(cls, text: str) -> "TrackResult":
        return cls.from_dict(json.loads(text))

    def summary(self) -> str:
        lines = [f"holonomy per cycle: {self.signature}"]
        for k, s in enumerate(self.cumulative, 1):
            tag = "identity" if s.is_identity() else str(s)
            lines.append(f"after cycle {k}: {tag}")
        return "\n".join(lines)


def holonomy_of(t: TrackResult) -> HolonomySignature:
    return t.signature


class _Walker:
    """Continuation state: mode-ordered values (and transported vectors)."""

    def __init__(self, f, point_fn, values, vectors=None, max_depth=MAX_DEPTH, record=True):
        self.f = f
        self.point_fn = point_fn
        self.values = tuple(values)
        self.vectors = vectors  # list of (r, y) with y^T r = 1
        self.max_depth = max_depth
        self.refinements = 0
        self.record = record
        self.samples = []

    def _try(self, s):
        p = self.point_fn(s)
        raw = eigvals(self.f(*p))
        perm, cost = _backend.best_assignment(self.values, raw)
        if not cost < AMBIGUITY * min_gap(self.values):
            return None
        new_vals = tuple(raw[perm[k]] for k in range(len(raw)))
        new_vecs = None
        if self.vectors is not None:
            m = self.f(*p)
            new_vecs = []
            for k, lam in enumerate(new_vals):
                r, left = eigvec_pair(m, lam, values=raw)
                y = np.conj(left)
                r_prev, y_prev = self.vectors[k]
                c = complex(y_prev @ r)
                r_t = r / c
                if np.linalg.norm(r_t - r_prev) > VECTOR_DRIFT * np.linalg.norm(r_prev):
                    return None
                new_vecs.append((r_t, y * c))
        return p, new_vals, new_vecs

    def advance(self, s0, s1, depth=0):
        """Move from ``s0`` (current state) to ``s1``, bisecting as needed."""
        step = self._try(s1)
        if step is None:
            if depth >= self.max_depth:
                raise AmbiguousMatching(
                    f"no unambiguous step near s={s0:.12g} after {depth} bisections"
                )
            self.refinements += 1
            mid = 0.5 * (s0 + s1)
            self.advance(s0, mid, depth + 1)
            self.advance(mid, s1, depth + 1)
            return
        p, self.values, vecs = step
        if vecs is not None:
            self.vectors = vecs
        if self.record:
            self.samples.append((p, EigenSet(self.values)))


def precheck_loop(f: HamiltonianFamily, loop: ParameterLoop, exclusion_radius: float = EXCLUSION_RADIUS):
    """Locate EPs around the loop; raise if any lies within ``exclusion_radius``.

    Returns the EP records found in the (padded) bounding box.
    """
    a0, a1, b0, b1 = loop.bbox()
    pad = max(exclusion_radius, 0.05 * max(a1 - a0, b1 - b0))
    region = Region(a0 - pad, a1 + pad, b0 - pad, b1 + pad, PRECHECK_GRID, PRECHECK_GRID)
    eps = locate(f, region)
    for rec in eps:
        d = loop.distance_to(rec.location)
        if d < exclusion_radius:
            raise LoopTooCloseToEP(
                f"loop passes {d:.3e} from the EP at ({rec.location[0]:.6g}, {rec.location[1]:.6g})"
            )
    return eps


def track(
    f: HamiltonianFamily,
    loop: ParameterLoop,
    track_vectors: bool = False,
    precheck: bool = True,
    exclusion_radius: float = EXCLUSION_RADIUS,
    max_depth: int = MAX_DEPTH,
) -> TrackResult:
    """Continue all branches around ``loop`` for ``loop.cycles`` cycles."""
    if precheck:
        precheck_loop(f, loop, exclusion_radius)
    point_fn = loop.point_fn()
    base = loop.base_point
    m0 = f(*base)
    base_vals = _sorted_values(eigvals(m0))
    n = len(base_vals)

    base_vecs = None
    if track_vectors:
        base_vecs = []
        for lam in base_vals:
            r, left = eigvec_pair(m0, lam, values=base_vals)
            base_vecs.append((r, np.conj(left)))

    walker = _Walker(f, point_fn, base_vals, list(base_vecs) if base_vecs else None, max_depth)
    walker.samples.append((base, EigenSet(base_vals)))

    steps = loop.n_segments * loop.samples_per_segment
    prev_perm = tuple(range(n))
    prev_factors = [1.0 + 0j] * n
    per_cycle, cumulative = [], []
    defect = 0.0
    for c in range(1, loop.cycles + 1):
        for j in range(1, steps + 1):
            s0 = (c - 1) + (j - 1) / steps
            s1 = c if j == steps else (c - 1) + j / steps
            walker.advance(s0, s1)
        # each mode now sits on some base eigenvalue
        perm, cost = _backend.best_assignment(walker.values, base_vals)
        if cost > 1e-9 * max(1.0, max(abs(z) for z in base_vals)):
            raise AmbiguousMatching(f"cycle {c} did not close (cost {cost:.3e})")
        factors = None
        if track_vectors:
            factors = [complex(base_vecs[perm[k]][1] @ walker.vectors[k][0]) for k in range(n)]
        tot, dtot = signature_from_transport(perm, factors)
        cumulative.append(tot)
        # this cycle alone: slot prev_perm[k] -> perm[k]
        cyc_perm = [0] * n
        cyc_factors = [0j] * n if factors is not None else None
        for k in range(n):
            cyc_perm[prev_perm[k]] = perm[k]
            if factors is not None:
                cyc_factors[prev_perm[k]] = factors[k] / prev_factors[k]
        sig, dcyc = signature_from_transport(cyc_perm, cyc_factors)
        per_cycle.append(sig)
        defect = max(defect, dtot, dcyc)
        prev_perm = perm
        if factors is not None:
            prev_factors = factors

    first = per_cycle[0]
    return TrackResult(
        samples=walker.samples,
        permutation=first.permutation,
        signs=first.signs,
        refinements=walker.refinements,
        per_cycle=per_cycle,
        cumulative=cumulative,
        phase_defect=defect if track_vectors else None,
    )


def dense_permutation(f: HamiltonianFamily, loop: ParameterLoop, samples_per_segment: int = 10_000):
    """Oracle: fixed fine sampling, batch eigenvalues, greedy matching.

    No adaptivity and no vectors; returns ``(permutation, worst_ratio)``
    where ``worst_ratio`` is the largest matching-cost / gap seen.
    """
    point_fn = loop.point_fn()
    steps = loop.n_segments * samples_per_segment
    pts = np.array([point_fn(j / steps) for j in range(steps)] + [loop.base_point])
    mats = f.batch(pts[:, 0], pts[:, 1])
    vals = _backend.eigvals_batch(mats)
    vals[0] = _sorted_values(vals[0])
    path, ratio = _backend.continue_path(vals)
    base = tuple(path[0])
    perm, _ = _backend.best_assignment(tuple(path[-1]), base)
    return tuple(perm), float(np.max(ratio))


# -- sheet surfaces -----------------------------------------------------------

@dataclass
class SheetSurface:
    alphas: np.ndarray
    betas: np.ndarray
    values: np.ndarray  # (len(alphas), len(betas), n), continued per scanline
    flags: np.ndarray  # per scanline; True where continuation fell back
    axis: str

    def row_flags(self) -> np.ndarray:
        if self.axis == "alpha":
            return np.broadcast_to(self.flags[None, :], self.values.shape[:2])
        return np.broadcast_to(self.flags[:, None], self.values.shape[:2])

    def write_csv(self, path_or_file) -> int:
        """CSV ``alpha,beta,re1,im1,...,flag``, alpha-major; returns rows written."""
        n = self.values.shape[2]
        header = ["alpha", "beta"] + [f"{p}{k}" for k in range(1, n + 1) for p in ("re", "im")] + ["flag"]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w") if own else path_or_file
        rows = 0
        flags = self.row_flags()
        try:
            fh.write(",".join(header) + "\n")
            for i, a in enumerate(self.alphas):
                for j, b in enumerate(self.betas):
                    cells = [f"{a:.17g}", f"{b:.17g}"]
                    for z in self.values[i, j]:
                        cells += [f"{z.real:.17g}", f"{z.imag:.17g}"]
                    cells.append(str(int(flags[i, j])))
                    fh.write(",".join(cells) + "\n")
                    rows += 1
        finally:
            if own:
                fh.close()
        return rows


def sheet_surface(f: HamiltonianFamily, r: Region, axis: str = "alpha", max_depth: int = MAX_DEPTH) -> SheetSurface:
    """Eigenvalues on the region grid, continued along each scanline.

    ``axis="alpha"`` sweeps alpha at fixed beta. Scanlines whose
    continuation hits the bisection limit are flagged and fall back to
    ordering by real part.
    """
    if axis not in ("alpha", "beta"):
        raise ValueError("axis must be 'alpha' or 'beta'")
    alphas, betas = r.axes()
    A, B = r.mesh()
    raw = _backend.eigvals_batch(f.batch(A, B).reshape(-1, f.n, f.n)).reshape(A.shape + (f.n,))
    if axis == "beta":
        lines = raw
        coords = [(np.full_like(betas, a), betas) for a in alphas]
    else:
        lines = raw.transpose(1, 0, 2)
        coords = [(alphas, np.full_like(alphas, b)) for b in betas]

    out = np.empty_like(lines)
    flags = np.zeros(len(lines), dtype=bool)
    for li, line in enumerate(lines):
        line = line.copy()
        line[0] = _sorted_values(line[0])
        path, ratio = _backend.continue_path(line)
        if np.all(ratio < AMBIGUITY):
            out[li] = path
            continue
        try:
            out[li] = _continue_scanline(f, coords[li], line, max_depth)
        except AmbiguousMatching:
            flags[li] = True
            out[li] = np.array([_sorted_values(v) for v in line])
    values = out if axis == "beta" else out.transpose(1, 0, 2)
    return SheetSurface(alphas, betas, np.ascontiguousarray(values), flags, axis)


def _continue_scanline(f, coords, line, max_depth):
    xs, ys = coords
    n_pts = len(xs)

    def point_fn(s):
        k = min(int(s), n_pts - 2)
        t = s - k
        if t == 0.0:
            return Params(float(xs[k]), float(ys[k]))
        if t == 1.0:
            return Params(float(xs[k + 1]), float(ys[k + 1]))
        return Params(xs[k] + t * (xs[k + 1] - xs[k]), ys[k] + t * (ys[k + 1] - ys[k]))

    walker = _Walker(f, point_fn, tuple(line[0]), max_depth=max_depth, record=False)
    out = [walker.values]
    for k in range(1, n_pts):
        walker.advance(float(k - 1), float(k))
        out.append(walker.values)
    return np.array(out)
