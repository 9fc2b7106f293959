"""Prime-field arithmetic, polynomial evaluation and Lagrange interpolation.

Scalars are plain Python ints (or :class:`FieldElement` wrappers); bulk
share arithmetic uses int64 numpy arrays through :class:`Field` methods that
dispatch to the kernels in :mod:`mpshuffle._kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import isprime
from sympy.ntheory import sqrt_mod

from . import _kernels

MERSENNE61 = (1 << 61) - 1
DEFAULT_MODULUS = MERSENNE61

_MODE_OBJECT = 2


class FieldError(ValueError):
    pass


class Field:
    """The prime field F_p.

    Array methods accept and return int64 arrays of canonical residues for
    ``p < 2**31`` and ``p = 2**61 - 1``; any other prime below ``2**63`` falls
    back to object arrays of Python ints.
    """

    def __init__(self, p: int = DEFAULT_MODULUS):
        p = int(p)
        if p < 2 or not isprime(p):
            raise FieldError(f"modulus {p} is not prime")
        self.p = p
        if (p - 1) * (p - 1) + p < (1 << 63):
            self.mode = _kernels.MODE_SMALL
        elif p == MERSENNE61:
            self.mode = _kernels.MODE_M61
        else:
            self.mode = _MODE_OBJECT
        self.dtype = object if self.mode == _MODE_OBJECT else np.int64

    def __repr__(self) -> str:
        return f"Field({self.p})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("Field", self.p))

    # -- scalars -----------------------------------------------------------

    def __call__(self, value: int) -> "FieldElement":
        return FieldElement(int(value) % self.p, self.p)

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        """Inverse by Fermat exponentiation."""
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return pow(a, self.p - 2, self.p)

    def inv_euclid(self, a: int) -> int:
        """Inverse by the extended Euclidean algorithm."""
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        r0, r1 = self.p, a
        s0, s1 = 0, 1
        while r1:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
        return s0 % self.p

    def sqrt(self, a: int) -> int:
        """Canonical square root: the root lying in ``[0, (p-1)/2]``."""
        return _canonical_sqrt(self.p, a % self.p)

    # -- arrays ------------------------------------------------------------

    def array(self, values) -> np.ndarray:
        if self.mode == _MODE_OBJECT:
            arr = np.array(values, dtype=object)
            return arr % self.p
        return np.asarray(values, dtype=np.int64) % self.p

    def add_arr(self, a, b) -> np.ndarray:
        return (a + b) % self.p

    def sub_arr(self, a, b) -> np.ndarray:
        return (a - b) % self.p

    def mul_arr(self, a, b) -> np.ndarray:
        if self.mode == _MODE_OBJECT:
            return (np.asarray(a, dtype=object) * np.asarray(b, dtype=object)) % self.p
        return _kernels.mulmod(a, b, self.p, self.mode)

    def matmul(self, A, B) -> np.ndarray:
        if self.mode == _MODE_OBJECT:
            return (np.asarray(A, dtype=object) @ np.asarray(B, dtype=object)) % self.p
        return _kernels.matmul_mod(A, B, self.p, self.mode)

    def random(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.p > (1 << 63) - 1:
            raise FieldError("array randomness needs p < 2**63")
        out = rng.integers(0, self.p, size=size, dtype=np.int64)
        return out.astype(object) if self.mode == _MODE_OBJECT else out

    def vandermonde(self, degree: int, points: Sequence[int]) -> np.ndarray:
        """Matrix V with V[i, j] = points[j] ** i, shape (degree + 1, len(points))."""
        return _vandermonde(self.p, degree, tuple(int(x) for x in points)).astype(self.dtype)

    def lagrange_coefficients(self, points: Sequence[int], at: int = 0) -> np.ndarray:
        return np.array(_lagrange_coeffs(self.p, tuple(int(x) for x in points), int(at)),
                        dtype=self.dtype)

    def parity_check(self, degree: int, points: Sequence[int]) -> np.ndarray:
        """Rows h with h . v == 0 for every evaluation vector v of a degree-``degree`` polynomial."""
        return _parity_check(self.p, degree, tuple(int(x) for x in points)).astype(self.dtype)


@lru_cache(maxsize=4096)
def _canonical_sqrt(p: int, a: int) -> int:
    if a == 0 or p == 2:
        return a
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
        if r * r % p != a:
            raise FieldError(f"{a} is not a quadratic residue mod {p}")
    else:
        r = sqrt_mod(a, p)
        if r is None:
            raise FieldError(f"{a} is not a quadratic residue mod {p}")
    return min(r, p - r)


@lru_cache(maxsize=256)
def _vandermonde(p: int, degree: int, points: tuple) -> np.ndarray:
    V = np.empty((degree + 1, len(points)), dtype=object)
    for j, x in enumerate(points):
        acc = 1
        for i in range(degree + 1):
            V[i, j] = acc
            acc = acc * x % p
    return V


@lru_cache(maxsize=256)
def _lagrange_coeffs(p: int, points: tuple, at: int) -> list[int]:
    if len(set(x % p for x in points)) != len(points):
        raise FieldError("interpolation points must be distinct")
    out = []
    for i, xi in enumerate(points):
        num, den = 1, 1
        for j, xj in enumerate(points):
            if i != j:
                num = num * (at - xj) % p
                den = den * (xi - xj) % p
        out.append(num * pow(den, p - 2, p) % p)
    return out


@lru_cache(maxsize=256)
def _parity_check(p: int, degree: int, points: tuple) -> np.ndarray:
    k = degree + 1
    extra = len(points) - k
    H = np.zeros((max(extra, 0), len(points)), dtype=object)
    base = points[:k]
    for r in range(extra):
        coeffs = _lagrange_coeffs(p, base, points[k + r])
        for i, c in enumerate(coeffs):
            H[r, i] = (-c) % p
        H[r, k + r] = 1
    return H


@dataclass(frozen=True)
class FieldElement:
    """An element of F_p carrying its modulus."""

    value: int
    modulus: int

    def __post_init__(self):
        if not 0 <= self.value < self.modulus:
            raise FieldError(f"value {self.value} outside [0, {self.modulus})")

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise FieldError(f"modulus mismatch: {self.modulus} vs {other.modulus}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other) % self.modulus
        return NotImplemented

    def _make(self, v: int) -> "FieldElement":
        return FieldElement(v % self.modulus, self.modulus)

    def __add__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._make(self.value + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._make(self.value - o)

    def __rsub__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._make(o - self.value)

    def __mul__(self, other):
        o = self._other(other)
        return NotImplemented if o is NotImplemented else self._make(self.value * o)

    __rmul__ = __mul__

    def __neg__(self):
        return self._make(-self.value)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return self._make(pow(self.value, self.modulus - 2, self.modulus))

    def __truediv__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return NotImplemented
        return self * self._make(o).inverse()

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def sub(a: FieldElement, b: FieldElement) -> FieldElement:
    return a - b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv_element(a: FieldElement) -> FieldElement:
    return a.inverse()


@dataclass(frozen=True)
class SecretPolynomial:
    """A sharing polynomial; ``coefficients[0]`` is the secret."""

    coefficients: tuple[int, ...]
    modulus: int

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def threshold(self) -> int:
        return len(self.coefficients)

    @property
    def secret(self) -> int:
        return self.coefficients[0]

    def __call__(self, x: int) -> int:
        return eval_poly(self, x)


def eval_poly(f: SecretPolynomial, x) -> int:
    """Horner evaluation of ``f`` at ``x``."""
    p = f.modulus
    x = int(x) % p
    acc = 0
    for c in reversed(f.coefficients):
        acc = (acc * x + c) % p
    return acc


def lagrange_interpolate(points: Iterable[tuple[int, int]], at, p: int) -> int:
    """Value at ``at`` of the unique polynomial of degree < len(points) through ``points``."""
    pts = [(int(x) % p, int(y) % p) for x, y in points]
    if not pts:
        raise FieldError("need at least one point")
    xs = tuple(x for x, _ in pts)
    lam = _lagrange_coeffs(p, xs, int(at) % p)
    return sum(l * y for l, (_, y) in zip(lam, pts)) % p


def interpolate_coefficients(points: Sequence[tuple[int, int]], p: int) -> list[int]:
    """Coefficients (low to high) of the interpolating polynomial; O(k^2) per basis term."""
    pts = [(int(x) % p, int(y) % p) for x, y in points]
    k = len(pts)
    out = [0] * k
    for i, (xi, yi) in enumerate(pts):
        basis = [1]
        den = 1
        for j, (xj, _) in enumerate(pts):
            if i == j:
                continue
            # multiply basis by (z - xj)
            nxt = [0] * (len(basis) + 1)
            for d, c in enumerate(basis):
                nxt[d] = (nxt[d] - xj * c) % p
                nxt[d + 1] = (nxt[d + 1] + c) % p
            basis = nxt
            den = den * (xi - xj) % p
        scale = yi * pow(den, p - 2, p) % p
        for d in range(k):
            out[d] = (out[d] + scale * basis[d]) % p
    return out
