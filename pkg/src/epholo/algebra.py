"""Exact algebra of signed permutation matrices (holonomy matrices).

A :class:`SignedPermutation` with ``perm`` and ``signs`` is the matrix
whose column ``i`` holds ``signs[perm[i]]`` in row ``perm[i]``, i.e.
``M e_i = signs[perm[i]] e_{perm[i]}``: mode ``i`` moves to slot
``perm[i]`` and ``signs[r]`` is the sign carried by output row ``r``.

Composition is matrix multiplication: ``a @ b`` applies ``b`` first. The
holonomy written as ``M12 M23`` therefore exchanges modes 2 and 3 before
1 and 2, the reverse of reading the product left to right.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from itertools import permutations

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange


@dataclass(frozen=True)
class SignedPermutation:
    perm: tuple
    signs: tuple

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        signs = tuple(int(s) for s in self.signs)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{perm} is not a permutation")
        if len(signs) != len(perm) or any(s not in (1, -1) for s in signs):
            raise ValueError(f"signs must be {len(perm)} values in {{+1, -1}}")
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls(tuple(range(n)), (1,) * n)

    @classmethod
    def from_matrix(cls, m) -> "SignedPermutation":
        m = np.asarray(m)
        n = m.shape[0]
        perm = [0] * n
        signs = [0] * n
        for i in range(n):
            (rows,) = np.nonzero(m[:, i])
            if len(rows) != 1:
                raise ValueError("not a signed permutation matrix")
            perm[i] = int(rows[0])
            signs[perm[i]] = int(m[rows[0], i])
        return cls(tuple(perm), tuple(signs))

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=int)
        for i, r in enumerate(self.perm):
            m[r, i] = self.signs[r]
        return m

    @property
    def unsigned(self) -> "SignedPermutation":
        return SignedPermutation(self.perm, (1,) * self.n)

    def is_identity(self) -> bool:
        return self.perm == tuple(range(self.n)) and all(s == 1 for s in self.signs)

    def __matmul__(self, other: "SignedPermutation") -> "SignedPermutation":
        return compose(self, other)

    def __pow__(self, k: int) -> "SignedPermutation":
        if k < 0:
            return self.inverse() ** (-k)
        out = SignedPermutation.identity(self.n)
        for _ in range(k):
            out = compose(self, out)
        return out

    def inverse(self) -> "SignedPermutation":
        inv = [0] * self.n
        for i, r in enumerate(self.perm):
            inv[r] = i
        # M^-1 = M^T for signed permutations
        signs = [0] * self.n
        for r, i in enumerate(inv):
            signs[i] = self.signs[r]
        return SignedPermutation(tuple(inv), tuple(signs))

    def cycles(self) -> list[tuple]:
        """Disjoint cycles, each starting at its smallest element."""
        seen = set()
        out = []
        for start in range(self.n):
            if start in seen:
                continue
            cyc = []
            i = start
            while i not in seen:
                seen.add(i)
                cyc.append(i)
                i = self.perm[i]
            out.append(tuple(cyc))
        return out

    def cycle_signs(self) -> list[int]:
        """Product of the signs met around each cycle of :meth:`cycles`."""
        return [math.prod(self.signs[i] for i in cyc) for cyc in self.cycles()]

    def cycle_type(self) -> tuple:
        return tuple(sorted(len(c) for c in self.cycles()))

    def canonical(self) -> "SignedPermutation":
        """Representative of the diagonal-gauge class: each cycle's sign
        product sits on the row of its smallest element."""
        signs = [1] * self.n
        for cyc, s in zip(self.cycles(), self.cycle_signs()):
            signs[cyc[0]] = s
        return SignedPermutation(self.perm, tuple(signs))

    def __str__(self) -> str:
        return render(self)

    def to_dict(self) -> dict:
        return {"n": self.n, "permutation": list(self.perm), "signs": list(self.signs)}

    @classmethod
    def from_dict(cls, d) -> "SignedPermutation":
        return cls(tuple(d["permutation"]), tuple(d["signs"]))


def render(s: SignedPermutation) -> str:
    """Cycle notation with sign annotations, e.g. ``(0 1)(2)[+,-,+]``."""
    cyc = "".join("(" + " ".join(str(i) for i in c) + ")" for c in s.cycles())
    return cyc + "[" + ",".join("+" if x > 0 else "-" for x in s.signs) + "]"


def generator(n: int, i: int, j: int, signed: bool = False, direction: str = "positive") -> SignedPermutation:
    """Transposition of modes ``i`` and ``j``.

    With ``signed``, one of the two exchanged rows carries -1: row ``i``
    for ``direction="positive"`` (``[[0, -1], [1, 0]]`` on the pair),
    row ``j`` for ``"negative"``.
    """
    if not (0 <= i < n and 0 <= j < n) or i == j:
        raise IndexOutOfRange(f"need distinct 0 <= i, j < {n}, got ({i}, {j})")
    if direction not in ("positive", "negative"):
        raise ValueError("direction must be 'positive' or 'negative'")
    perm = list(range(n))
    perm[i], perm[j] = j, i
    signs = [1] * n
    if signed:
        signs[i if direction == "positive" else j] = -1
    return SignedPermutation(tuple(perm), tuple(signs))


def compose(a: SignedPermutation, b: SignedPermutation) -> SignedPermutation:
    """Matrix product ``a b`` (``b`` acts first)."""
    if a.n != b.n:
        raise DimensionMismatch(f"cannot compose n={a.n} with n={b.n}")
    perm = tuple(a.perm[b.perm[i]] for i in range(a.n))
    signs = [0] * a.n
    for i in range(a.n):
        mid = b.perm[i]
        signs[a.perm[mid]] = b.signs[mid] * a.signs[a.perm[mid]]
    return SignedPermutation(perm, tuple(signs))


def product(seq, n: int | None = None) -> SignedPermutation:
    """``seq[0] @ seq[1] @ ...``; the empty product needs ``n``."""
    seq = list(seq)
    if not seq:
        if n is None:
            raise ValueError("empty product needs n")
        return SignedPermutation.identity(n)
    return reduce(compose, seq)


def spectrum_angles(s: SignedPermutation) -> list[Fraction]:
    """Eigenvalues as exact fractions of a full turn, sorted.

    A k-cycle with sign product +1 contributes the k-th roots of unity,
    one with -1 the k-th roots of -1.
    """
    out = []
    for cyc, sign in zip(s.cycles(), s.cycle_signs()):
        k = len(cyc)
        shift = Fraction(1, 2 * k) if sign < 0 else Fraction(0)
        out.extend(Fraction(j, k) + shift for j in range(k))
    return sorted(out)


def spectrum(s: SignedPermutation) -> list[complex]:
    return [complex(np.exp(2j * np.pi * float(t))) for t in spectrum_angles(s)]


def order(s: SignedPermutation) -> int:
    """Least k >= 1 with ``s**k`` the identity."""
    lengths = [len(c) * (2 if sign < 0 else 1) for c, sign in zip(s.cycles(), s.cycle_signs())]
    return math.lcm(*lengths)


def enumerate_orderings(generators) -> list[tuple[tuple, SignedPermutation, int]]:
    """Every ordering of ``generators`` with its product and order.

    Orderings are tuples of indices into ``generators``.
    """
    gens = list(generators)
    if not 1 <= len(gens) <= 5:
        raise ValueError("need between 1 and 5 generators")
    if len({g.n for g in gens}) != 1:
        raise DimensionMismatch("generators differ in dimension")
    out = []
    for idx in permutations(range(len(gens))):
        p = product(gens[k] for k in idx)
        out.append((idx, p, order(p)))
    return out


def _pair_generators(n, pairs):
    return [generator(n, *sorted(p)) for p in pairs]


def match_measurement(measured, enclosed_pairs, n: int | None = None) -> list[tuple]:
    """Orderings of the enclosed pairs' transpositions whose product
    permutes modes like ``measured``. Signs are ignored.

    ``measured`` is anything with ``.permutation`` (a HolonomySignature)
    or ``.perm``. Returns a list of orderings, each a tuple of pairs.
    """
    perm = tuple(getattr(measured, "permutation", None) or measured.perm)
    n = n or len(perm)
    pairs = [tuple(sorted(p)) for p in enclosed_pairs]
    for p in pairs:
        if not (0 <= p[0] < p[1] < n):
            raise IndexOutOfRange(f"pair {p} invalid for n={n}")
    if not pairs:
        return [()] if perm == tuple(range(n)) else []
    gens = _pair_generators(n, pairs)
    return [
        tuple(pairs[k] for k in idx)
        for idx, prod, _ in enumerate_orderings(gens)
        if prod.perm == perm
    ]


def paper_generators(n: int = 3, signed: bool = False) -> dict:
    """``M_ij`` for all mode pairs, keyed by the 1-based names ``"M12"``..."""
    return {
        f"M{i + 1}{j + 1}": generator(n, i, j, signed=signed)
        for i in range(n)
        for j in range(i + 1, n)
    }


def chained_generators(n: int, signed: bool = False) -> list[SignedPermutation]:
    """``M_12, M_23, ..., M_(n-1)n``."""
    return [generator(n, i, i + 1, signed=signed) for i in range(n - 1)]
