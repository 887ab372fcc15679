"""Two-parameter affine matrix families ``H(a, b) = H0 + a Ha + b Hb``."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import as_matrix
from .errors import ConfigError

KINDS = ("paper3x3", "paper2x2", "tep3x3", "custom-affine")


class Params(NamedTuple):
    alpha: float
    beta: float


def _frozen(m) -> np.ndarray:
    arr = as_matrix(m)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HamiltonianFamily:
    base: np.ndarray
    grad_alpha: np.ndarray
    grad_beta: np.ndarray
    kind: str = "custom-affine"
    epsilon: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("base", "grad_alpha", "grad_beta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if not (self.base.shape == self.grad_alpha.shape == self.grad_beta.shape):
            raise ValueError("base and gradient matrices must share one dimension")
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")

    @property
    def n(self) -> int:
        return self.base.shape[0]

    def __call__(self, alpha, beta) -> np.ndarray:
        return evaluate(self, Params(alpha, beta))

    def batch(self, alphas, betas) -> np.ndarray:
        """Evaluate on broadcast arrays of parameters; shape ``(..., n, n)``."""
        a = np.asarray(alphas, dtype=float)[..., None, None]
        b = np.asarray(betas, dtype=float)[..., None, None]
        return self.base + a * self.grad_alpha + b * self.grad_beta

    def __eq__(self, other):
        if not isinstance(other, HamiltonianFamily):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.epsilon == other.epsilon
            and np.array_equal(self.base, other.base)
            and np.array_equal(self.grad_alpha, other.grad_alpha)
            and np.array_equal(self.grad_beta, other.grad_beta)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "n": self.n,
            "base": _encode(self.base),
            "grad_alpha": _encode(self.grad_alpha),
            "grad_beta": _encode(self.grad_beta),
        }
        if self.epsilon is not None:
            d["epsilon"] = self.epsilon
        d.update(self.extra)
        return d


def evaluate(f: HamiltonianFamily, p: Params) -> np.ndarray:
    alpha, beta = p
    return f.base + alpha * f.grad_alpha + beta * f.grad_beta


def paper_3x3() -> HamiltonianFamily:
    """Three modes with equal couplings 0.4 and diagonal
    ``(a-3) - i(b-1)``, ``(1-a) - i(3-b)``, ``-2i``."""
    d = 0.4
    base = np.array(
        [[-3 + 1j, d, d], [d, 1 - 3j, d], [d, d, -2j]],
        dtype=complex,
    )
    grad_alpha = np.diag([1.0, -1.0, 0.0]).astype(complex)
    grad_beta = np.diag([-1j, 1j, 0.0])
    return HamiltonianFamily(base, grad_alpha, grad_beta, kind="paper3x3")


def paper_2x2(E0: complex = 0j, delta_scale: float = 1.0) -> HamiltonianFamily:
    """``[[E0, 1], [W, E0]]`` with ``W = (a + i b) * delta_scale``.

    The (alpha, beta) plane is the complex plane of ``Delta = V W`` itself,
    so the single EP sits at the origin.
    """
    if not delta_scale > 0:
        raise ValueError("delta_scale must be positive")
    E0 = complex(E0)
    base = np.array([[E0, 1.0], [0.0, E0]], dtype=complex)
    grad_alpha = np.array([[0, 0], [delta_scale, 0]], dtype=complex)
    grad_beta = np.array([[0, 0], [1j * delta_scale, 0]], dtype=complex)
    extra = {"E0": [E0.real, E0.imag], "delta_scale": float(delta_scale)}
    return HamiltonianFamily(base, grad_alpha, grad_beta, kind="paper2x2", extra=extra)


def tep_3x3(epsilon: float = 1.0) -> HamiltonianFamily:
    """Perturbed 3x3 Jordan block ``J3 + (a + i b) eps E31``.

    The spectrum is the three cube roots of ``(a + i b) eps``: a triple
    EP at the origin.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    base = np.diag([1.0, 1.0], k=1).astype(complex)
    grad_alpha = np.zeros((3, 3), dtype=complex)
    grad_alpha[2, 0] = epsilon
    grad_beta = np.zeros((3, 3), dtype=complex)
    grad_beta[2, 0] = 1j * epsilon
    return HamiltonianFamily(base, grad_alpha, grad_beta, kind="tep3x3", epsilon=float(epsilon))


def custom_affine(base, grad_alpha, grad_beta) -> HamiltonianFamily:
    return HamiltonianFamily(base, grad_alpha, grad_beta, kind="custom-affine")


BUILTINS = {"paper3x3": paper_3x3, "paper2x2": paper_2x2, "tep3x3": tep_3x3}


# -- JSON descriptors ---------------------------------------------------------

def _encode(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _decode(obj, n, key) -> np.ndarray:
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a matrix of [re, im] pairs ({exc})", key) from None
    if arr.shape != (n, n, 2):
        raise ConfigError(f"expected shape ({n}, {n}, 2), got {arr.shape}", key)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("non-finite entry", key)
    return arr[..., 0] + 1j * arr[..., 1]


_DESCRIPTOR_KEYS = {"kind", "n", "base", "grad_alpha", "grad_beta", "epsilon", "E0", "delta_scale"}


def family_from_dict(d: dict) -> HamiltonianFamily:
    if not isinstance(d, dict):
        raise ConfigError("family descriptor must be a JSON object", "family")
    unknown = set(d) - _DESCRIPTOR_KEYS
    if unknown:
        raise ConfigError("unknown key", sorted(unknown)[0])
    kind = d.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"must be one of {', '.join(KINDS)}, got {kind!r}", "kind")

    has_matrices = "base" in d
    if kind == "custom-affine" or has_matrices:
        if "n" not in d:
            raise ConfigError("missing", "n")
        n = d["n"]
        if n not in (2, 3) or isinstance(n, bool):
            raise ConfigError(f"must be 2 or 3, got {n!r}", "n")
        mats = []
        for key in ("base", "grad_alpha", "grad_beta"):
            if key not in d:
                raise ConfigError("missing", key)
            mats.append(_decode(d[key], n, key))
        eps = d.get("epsilon")
        if eps is not None:
            eps = _positive(eps, "epsilon")
        extra = {k: d[k] for k in ("E0", "delta_scale") if k in d}
        return HamiltonianFamily(*mats, kind=kind, epsilon=eps, extra=extra)

    if kind == "paper3x3":
        fam = paper_3x3()
    elif kind == "tep3x3":
        fam = tep_3x3(_positive(d.get("epsilon", 1.0), "epsilon"))
    else:
        e0 = d.get("E0", [0.0, 0.0])
        try:
            e0 = complex(float(e0[0]), float(e0[1]))
        except (TypeError, ValueError, IndexError):
            raise ConfigError("expected [re, im]", "E0") from None
        fam = paper_2x2(e0, _positive(d.get("delta_scale", 1.0), "delta_scale"))
    if "n" in d and d["n"] != fam.n:
        raise ConfigError(f"{kind} has n={fam.n}, got {d['n']!r}", "n")
    return fam


def _positive(x, key) -> float:
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {x!r}", key) from None
    if not (x > 0 and math.isfinite(x)):
        raise ConfigError(f"must be positive and finite, got {x!r}", key)
    return x


def load_family(spec: str) -> HamiltonianFamily:
    """Resolve a builtin name or a path to a JSON family descriptor."""
    if spec in BUILTINS:
        return BUILTINS[spec]()
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"neither a builtin ({', '.join(BUILTINS)}) nor a file: {spec!r}", "family")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {spec}: {exc}", "family") from None
    return family_from_dict(d)
