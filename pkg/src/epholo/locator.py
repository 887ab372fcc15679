"""Locate exceptional points by driving the eigenvalue discriminant to zero.

The discriminant is smooth through an EP while the eigenvalue gap has a
square-root cusp there, so Newton on ``(Re D, Im D)`` converges
quadratically where gap minimisation would crawl.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from . import _backend
from .core import discriminant, eigvals, scale
from .errors import EscapedRegion, NoConvergence
from .families import HamiltonianFamily, Params

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
STEP_TOL = 1e-10
MAX_ITER = 100
MAX_HALVINGS = 8
FD_STEP = 1e-6
MERGE_RADIUS = 1e-4


@dataclass(frozen=True)
class Region:
    alpha_min: float
    alpha_max: float
    beta_min: float
    beta_max: float
    grid_alpha: int = 200
    grid_beta: int = 120

    def __post_init__(self):
        vals = (self.alpha_min, self.alpha_max, self.beta_min, self.beta_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("region bounds must be finite")
        if not (self.alpha_min < self.alpha_max and self.beta_min < self.beta_max):
            raise ValueError("region needs min < max on both axes")
        if self.grid_alpha < 2 or self.grid_beta < 2:
            raise ValueError("grid sizes must be at least 2")

    def axes(self):
        return (
            np.linspace(self.alpha_min, self.alpha_max, self.grid_alpha),
            np.linspace(self.beta_min, self.beta_max, self.grid_beta),
        )

    def mesh(self):
        a, b = self.axes()
        return np.meshgrid(a, b, indexing="ij")

    def contains(self, p) -> bool:
        return self.alpha_min <= p[0] <= self.alpha_max and self.beta_min <= p[1] <= self.beta_max

    def inflated(self, factor: float = 2.0) -> "Region":
        ca = (self.alpha_min + self.alpha_max) / 2
        cb = (self.beta_min + self.beta_max) / 2
        ha = (self.alpha_max - self.alpha_min) * factor / 2
        hb = (self.beta_max - self.beta_min) * factor / 2
        return Region(ca - ha, ca + ha, cb - hb, cb + hb, self.grid_alpha, self.grid_beta)


@dataclass(frozen=True)
class EPRecord:
    location: Params
    residual: float
    coalescing_pair: tuple
    min_gap: float
    newton_iterations: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["location"] = list(self.location)
        d["coalescing_pair"] = list(self.coalescing_pair)
        return d

    @classmethod
    def from_dict(cls, d) -> "EPRecord":
        return cls(
            Params(*d["location"]),
            d["residual"],
            tuple(d["coalescing_pair"]),
            d["min_gap"],
            d["newton_iterations"],
        )


def residual_tol(m) -> float:
    """Convergence threshold on ``|D|``: ``1e-12 * scale^2`` for 2x2, ``scale^3`` for 3x3."""
    n = m.shape[0]
    return RESIDUAL_TOL * scale(m) ** n


def discriminant_grid(f: HamiltonianFamily, r: Region) -> np.ndarray:
    A, B = r.mesh()
    mats = f.batch(A, B).reshape(-1, f.n, f.n)
    return _backend.discriminant_batch(mats).reshape(A.shape)


def scan_seeds(f: HamiltonianFamily, r: Region) -> list[Params]:
    """Interior grid points that are strict local minima of ``|D|`` over
    their 8 neighbours, best first.

    Exact ties (an EP midway between nodes of a symmetric grid) go to the
    later node in row-major order, so a tied pair yields one seed, not none.
    """
    z = np.abs(discriminant_grid(f, r))
    core = z[1:-1, 1:-1]
    is_min = np.ones_like(core, dtype=bool)
    na, nb = z.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == dj == 0:
                continue
            nb_vals = z[1 + di : na - 1 + di, 1 + dj : nb - 1 + dj]
            earlier = di < 0 or (di == 0 and dj < 0)
            is_min &= (core <= nb_vals) if earlier else (core < nb_vals)
    ii, jj = np.nonzero(is_min)
    ii, jj = ii + 1, jj + 1
    order = np.argsort(z[ii, jj], kind="stable")
    a, b = r.axes()
    return [Params(float(a[ii[k]]), float(b[jj[k]])) for k in order]


def _d_vec(f, x) -> np.ndarray:
    d = discriminant(f(x[0], x[1]))
    return np.array([d.real, d.imag])


def _jacobian(f, x) -> np.ndarray:
    jac = np.empty((2, 2))
    for k in range(2):
        h = FD_STEP * max(1.0, abs(x[k]))
        e = np.zeros(2)
        e[k] = h
        jac[:, k] = (_d_vec(f, x + e) - _d_vec(f, x - e)) / (2 * h)
    return jac


def closest_pair(values) -> tuple[tuple[int, int], float]:
    pair = min(combinations(range(len(values)), 2), key=lambda ij: abs(values[ij[0]] - values[ij[1]]))
    return pair, abs(values[pair[0]] - values[pair[1]])


def refine_ep(f: HamiltonianFamily, seed, region: Region | None = None) -> EPRecord:
    """Damped Newton on ``(alpha, beta) -> (Re D, Im D)``.

    Raises NoConvergence after MAX_ITER iterations (or on a stall with a
    large residual) and EscapedRegion when the iterate leaves ``region``
    inflated twofold.
    """
    bounds = region.inflated(2.0) if region is not None else None
    x = np.array(seed, dtype=float)
    dv = _d_vec(f, x)
    for it in range(1, MAX_ITER + 1):
        tol = residual_tol(f(*x))
        if math.hypot(*dv) <= tol:
            return _record(f, x, it - 1)
        jac = _jacobian(f, x)
        try:
            step = -np.linalg.solve(jac, dv)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(jac, dv, rcond=None)[0]
        norm0 = math.hypot(*dv)
        t = 1.0
        for _ in range(MAX_HALVINGS):
            trial = _d_vec(f, x + t * step)
            if math.hypot(*trial) < norm0:
                break
            t *= 0.5
        else:
            trial = _d_vec(f, x + t * step)
        x = x + t * step
        dv = trial
        if bounds is not None and not bounds.contains(x):
            raise EscapedRegion(f"Newton iterate {tuple(x)} left {bounds}")
        if t * math.hypot(*step) < STEP_TOL:
            if math.hypot(*dv) <= residual_tol(f(*x)):
                return _record(f, x, it)
            raise NoConvergence(f"Newton stalled at {tuple(x)} with |D| = {math.hypot(*dv):.3e}")
    if math.hypot(*dv) <= residual_tol(f(*x)):
        return _record(f, x, MAX_ITER)
    raise NoConvergence(f"no convergence after {MAX_ITER} iterations from {tuple(seed)}")


def _record(f, x, iterations) -> EPRecord:
    m = f(*x)
    pair, gap = closest_pair(eigvals(m))
    return EPRecord(
        location=Params(float(x[0]), float(x[1])),
        residual=abs(discriminant(m)),
        coalescing_pair=pair,
        min_gap=gap,
        newton_iterations=iterations,
    )


def merge_duplicates(records, radius: float = MERGE_RADIUS) -> list[EPRecord]:
    kept: list[EPRecord] = []
    for rec in sorted(records, key=lambda r: r.residual):
        if all(math.dist(rec.location, k.location) >= radius for k in kept):
            kept.append(rec)
    return sorted(kept, key=lambda r: tuple(r.location))


def locate(f: HamiltonianFamily, r: Region) -> list[EPRecord]:
    """Seed, refine, keep EPs inside ``r``, merge duplicates."""
    records = []
    for seed in scan_seeds(f, r):
        try:
            rec = refine_ep(f, seed, r)
        except (NoConvergence, EscapedRegion) as exc:
            log.debug("seed %s dropped: %s", seed, exc)
            continue
        if r.contains(rec.location):
            records.append(rec)
    return merge_duplicates(records)


def gap_field(f: HamiltonianFamily, r: Region) -> np.ndarray:
    """Minimum pairwise eigenvalue separation on the region grid."""
    A, B = r.mesh()
    mats = f.batch(A, B).reshape(-1, f.n, f.n)
    vals = _backend.eigvals_batch(mats)
    return _backend.min_gap_batch(vals).reshape(A.shape)


def write_grid_csv(path_or_file, f: HamiltonianFamily, r: Region) -> None:
    """CSV ``alpha,beta,min_gap,abs_discriminant``, alpha-major."""
    A, B = r.mesh()
    gaps = gap_field(f, r)
    absd = np.abs(discriminant_grid(f, r))
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta", "min_gap", "abs_discriminant"])
        for a, b, g, d in zip(A.ravel(), B.ravel(), gaps.ravel(), absd.ravel()):
            w.writerow([f"{a:.17g}", f"{b:.17g}", f"{g:.17g}", f"{d:.17g}"])
    finally:
        if own:
            fh.close()
