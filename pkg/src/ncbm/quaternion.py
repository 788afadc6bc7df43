"""Quaternion scalars in the 2x2 complex representation, and self-dual
quaternion matrices with Dyson's quaternion determinant.

A quaternion q = q0 + q1 e1 + q2 e2 + q3 e3 (complex q_i) is stored only
through its representation

    C(q) = [[q0 + i q3, -q1 - i q2],
            [q1 - i q2,  q0 - i q3]],

so all algebra is plain 2x2 matrix algebra.  The dual swaps the diagonal
and negates the off-diagonal.  For a self-dual matrix Q the quaternion
determinant is Tdet Q = Pf(J C(Q)).
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from .errors import DomainError, SelfDualityError
from .pfaffian import pfaffian, pfaffian_reference

_E = {
    "1": np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex),
    "e1": np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex),
    "e2": np.array([[0.0, -1.0j], [-1.0j, 0.0]], dtype=complex),
    "e3": np.array([[1.0j, 0.0], [0.0, -1.0j]], dtype=complex),
}


class Quaternion:
    """A quaternion held as its 2x2 complex matrix C(q)."""

    __slots__ = ("m",)

    def __init__(self, m):
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError("Quaternion representation must be 2x2")
        self.m = m

    @classmethod
    def from_components(cls, q0=0.0, q1=0.0, q2=0.0, q3=0.0):
        return cls(q0 * _E["1"] + q1 * _E["e1"] + q2 * _E["e2"] + q3 * _E["e3"])

    @classmethod
    def unit(cls, name: str):
        return cls(_E[name].copy())

    def components(self):
        m = self.m
        q0 = 0.5 * (m[0, 0] + m[1, 1])
        q3 = (m[0, 0] - m[1, 1]) / 2j
        q1 = 0.5 * (m[1, 0] - m[0, 1])
        q2 = (-m[0, 1] - m[1, 0]) / 2j
        return q0, q1, q2, q3

    def dual(self) -> "Quaternion":
        """q0 - q1 e1 - q2 e2 - q3 e3: adjugate of the representation."""
        m = self.m
        return Quaternion(np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]))

    @property
    def scalar_part(self) -> complex:
        return complex(0.5 * (self.m[0, 0] + self.m[1, 1]))

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.m @ other.m)
        return Quaternion(self.m * other)

    __rmul__ = __mul__

    def __add__(self, other):
        return Quaternion(self.m + other.m)

    def __sub__(self, other):
        return Quaternion(self.m - other.m)

    def __repr__(self):
        return f"Quaternion({self.m.tolist()})"


def dual(q: Quaternion) -> Quaternion:
    return q.dual()


def j_matrix(n: int) -> np.ndarray:
    """Block-diagonal 2n x 2n matrix with blocks [[0, 1], [-1, 0]]."""
    j = np.zeros((2 * n, 2 * n))
    for k in range(n):
        j[2 * k, 2 * k + 1] = 1.0
        j[2 * k + 1, 2 * k] = -1.0
    return j


class QKernelMatrix:
    """Square matrix of quaternions stored as an (n, n, 2, 2) block array.

    ``block_index`` optionally maps a (time index, particle index) label
    to its row, for matrices assembled over multitime configurations.
    """

    def __init__(self, blocks, block_index=None):
        blocks = np.asarray(blocks, dtype=complex)
        if blocks.ndim != 4 or blocks.shape[0] != blocks.shape[1] \
                or blocks.shape[2:] != (2, 2):
            raise DomainError("blocks must have shape (n, n, 2, 2)")
        self.blocks = blocks
        self.block_index = dict(block_index) if block_index else {}

    @property
    def n_total(self) -> int:
        return self.blocks.shape[0]

    @classmethod
    def identity(cls, n: int):
        b = np.zeros((n, n, 2, 2), dtype=complex)
        b[np.arange(n), np.arange(n)] = np.eye(2)
        return cls(b)

    def c_matrix(self) -> np.ndarray:
        """Expand to the 2n x 2n complex matrix C(Q)."""
        n = self.n_total
        return self.blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)

    def dual_residual(self):
        """max |Q - Q^dagger| over blocks and the offending block index."""
        b = self.blocks
        adj = np.empty_like(b)
        t = b.transpose(1, 0, 2, 3)
        adj[..., 0, 0] = t[..., 1, 1]
        adj[..., 1, 1] = t[..., 0, 0]
        adj[..., 0, 1] = -t[..., 0, 1]
        adj[..., 1, 0] = -t[..., 1, 0]
        res = np.abs(b - adj)
        worst_flat = int(np.argmax(res))
        worst = np.unravel_index(worst_flat, res.shape)[:2]
        return float(res.max()), (int(worst[0]), int(worst[1]))

    def require_self_dual(self, tol: float = 1e-8):
        scale = max(float(np.max(np.abs(self.blocks))), 1e-300)
        res, worst = self.dual_residual()
        if res > tol * scale:
            raise SelfDualityError(
                f"matrix is not self-dual: block {worst} residual {res:.3e}",
                block=worst, residual=res)


def tdet(q: QKernelMatrix, check: bool = True, imag_rtol: float = 1e-8):
    """Quaternion determinant Tdet Q = Pf(J C(Q)) for self-dual Q.

    Returns (value, imag_diagnostic): the Pfaffian's real part and the
    relative size of its imaginary part (which must be negligible for
    the real kernel matrices built by this package).
    """
    if check:
        q.require_self_dual()
    n = q.n_total
    pf = pfaffian(j_matrix(n) @ q.c_matrix(), check=False)
    pf = complex(pf)
    denom = max(abs(pf), 1e-300)
    return pf.real, abs(pf.imag) / denom


def tdet_reference(q: QKernelMatrix) -> complex:
    """Dyson cycle-sum definition of Tdet; reference for n <= 5.

    Each exclusive cycle (a -> b -> ... -> a) of a permutation
    contributes the scalar part of the quaternion product along it, and
    the permutation carries sign (-1)^(n - #cycles).
    """
    n = q.n_total
    if n > 5:
        raise DomainError("reference Tdet is factorial; use n <= 5")
    b = q.blocks
    total = 0.0 + 0.0j
    for perm in permutations(range(n)):
        seen = [False] * n
        contrib = 1.0 + 0.0j
        cycles = 0
        for start in range(n):
            if seen[start]:
                continue
            cycles += 1
            m = np.eye(2, dtype=complex)
            i = start
            while True:
                seen[i] = True
                jnext = perm[i]
                m = m @ b[i, jnext]
                i = jnext
                if i == start:
                    break
            contrib *= 0.5 * (m[0, 0] + m[1, 1])
        total += ((-1.0) ** (n - cycles)) * contrib
    return total


def tdet_pf_reference(q: QKernelMatrix) -> complex:
    """Pf(J C(Q)) through the perfect-matching Pfaffian (n <= 6)."""
    n = q.n_total
    return pfaffian_reference(j_matrix(n) @ q.c_matrix())
