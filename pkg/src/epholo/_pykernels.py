"""Pure numpy implementations of the batch kernels.

Mirrors ``_ckernels.pyx`` function for function; used when the compiled
extension is unavailable or ``EPHOLO_PURE_PYTHON`` is set.
"""
from itertools import permutations

import numpy as np

OMEGA = complex(-0.5, np.sqrt(3.0) / 2.0)
OMEGA_BAR = OMEGA.conjugate()

_PERMS = {n: np.array(list(permutations(range(n))), dtype=np.intp) for n in (2, 3)}


def _char3(m):
    a = -(m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2])
    b = (
        m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
        + m[:, 0, 0] * m[:, 2, 2] - m[:, 0, 2] * m[:, 2, 0]
        + m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1]
    )
    det = (
        m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1])
        - m[:, 0, 1] * (m[:, 1, 0] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 0])
        + m[:, 0, 2] * (m[:, 1, 0] * m[:, 2, 1] - m[:, 1, 1] * m[:, 2, 0])
    )
    return a, b, -det


def _depressed(m):
    a, b, c = _char3(m)
    p = b / 3.0 - a * a / 9.0
    q = -c / 2.0 + a * b / 6.0 - a * a * a / 27.0
    return p, q, a / 3.0


def _cbrt(z):
    return np.abs(z) ** (1.0 / 3.0) * np.exp(1j * np.angle(z) / 3.0)


def eigvals_batch(mats):
    m = np.ascontiguousarray(mats, dtype=complex)
    n = m.shape[-1]
    if n == 2:
        e0 = (m[:, 0, 0] + m[:, 1, 1]) / 2.0
        d = (m[:, 0, 0] - m[:, 1, 1]) / 2.0
        root = np.sqrt(d * d + m[:, 0, 1] * m[:, 1, 0])
        return np.stack([e0 + root, e0 - root], axis=1)

    p, q, beta = _depressed(m)
    s = np.sqrt(q * q + p * p * p)
    wp, wm = q + s, q - s
    use_plus = np.abs(wp) >= np.abs(wm)
    w = np.where(use_plus, wp, wm)
    u = _cbrt(w)
    nz = u != 0
    v = np.zeros_like(u)
    v[nz] = -p[nz] / u[nz]
    ap = np.where(use_plus, u, v)
    am = np.where(use_plus, v, u)
    return np.stack(
        [
            ap + am - beta,
            OMEGA * ap + OMEGA_BAR * am - beta,
            OMEGA_BAR * ap + OMEGA * am - beta,
        ],
        axis=1,
    )


def discriminant_batch(mats):
    m = np.ascontiguousarray(mats, dtype=complex)
    if m.shape[-1] == 2:
        d = (m[:, 0, 0] - m[:, 1, 1]) / 2.0
        return d * d + m[:, 0, 1] * m[:, 1, 0]
    p, q, _ = _depressed(m)
    return q * q + p * p * p


def min_gap_batch(vals):
    v = np.asarray(vals, dtype=complex)
    n = v.shape[1]
    gaps = [np.abs(v[:, i] - v[:, j]) for i in range(n) for j in range(i + 1, n)]
    return np.min(np.stack(gaps, axis=1), axis=1)


def best_assignment(prev, nxt):
    """Minimum total-distance matching; ``perm[i]`` indexes ``nxt``."""
    prev = np.asarray(prev, dtype=complex)
    nxt = np.asarray(nxt, dtype=complex)
    perms = _PERMS[len(prev)]
    costs = np.abs(nxt[perms] - prev).sum(axis=1)
    k = int(np.argmin(costs))
    return tuple(int(i) for i in perms[k]), float(costs[k])


def continue_path(vals):
    """Relabel each row to continue the previous one.

    Returns the reordered array and, per step, the ratio of the matching
    cost to the smallest gap at the earlier sample.
    """
    v = np.asarray(vals, dtype=complex)
    out = np.empty_like(v)
    ratio = np.empty(max(len(v) - 1, 0))
    out[0] = v[0]
    perms = _PERMS[v.shape[1]]
    n = v.shape[1]
    for k in range(1, len(v)):
        prev = out[k - 1]
        costs = np.abs(v[k][perms] - prev).sum(axis=1)
        j = int(np.argmin(costs))
        out[k] = v[k][perms[j]]
        gap = min(abs(prev[a] - prev[b]) for a in range(n) for b in range(a + 1, n))
        ratio[k - 1] = costs[j] / gap if gap > 0 else np.inf
    return out, ratio
