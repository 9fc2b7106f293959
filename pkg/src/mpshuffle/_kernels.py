"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy
version with identical semantics. The numba path is used unless
``MPSHUFFLE_DISABLE_NUMBA=1`` is set in the environment or numba cannot be
imported. Both implementations stay importable (``NUMBA_IMPL`` and
``NUMPY_IMPL``) so tests and benchmarks can compare them directly.

Field arrays are int64 holding canonical residues in ``[0, p)``. Two
reduction modes are supported by the kernels:

* ``MODE_SMALL``: ``(p - 1) ** 2 + p < 2 ** 63`` so products fit in int64.
* ``MODE_M61``: ``p = 2 ** 61 - 1``; products are formed from 31/30-bit limbs
  in uint64 and folded with the Mersenne identity ``2 ** 61 == 1``.
"""
from __future__ import annotations

import os

import numpy as np

MODE_SMALL = 0
MODE_M61 = 1

M61 = (1 << 61) - 1
_U_M61 = np.uint64(M61)
_U_LO31 = np.uint64((1 << 31) - 1)
_U_LO30 = np.uint64((1 << 30) - 1)
_U31 = np.uint64(31)
_U30 = np.uint64(30)
_U61 = np.uint64(61)
_U1 = np.uint64(1)


def _mulmod_m61_body(a, b):
    # a, b: uint64 scalars or arrays, both < 2**61
    a0 = a & _U_LO31
    a1 = a >> _U31
    b0 = b & _U_LO31
    b1 = b >> _U31
    hi = a1 * b1
    mid = a1 * b0 + a0 * b1
    lo = a0 * b0
    m0 = mid & _U_LO30
    m1 = mid >> _U30
    s = (hi << _U1) + m1 + (m0 << _U31) + lo
    s = (s & _U_M61) + (s >> _U61)
    s = (s & _U_M61) + (s >> _U61)
    return s


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_mulmod(a, b, p, mode):
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if mode == MODE_SMALL:
        return (a * b) % p
    s = _mulmod_m61_body(a.astype(np.uint64), b.astype(np.uint64))
    s = np.where(s >= _U_M61, s - _U_M61, s)
    return s.astype(np.int64)


def _np_matmul_mod(A, B, p, mode):
    A = np.ascontiguousarray(A, dtype=np.int64)
    B = np.ascontiguousarray(B, dtype=np.int64)
    k = A.shape[1]
    if mode == MODE_SMALL and k * (p - 1) * (p - 1) < (1 << 63):
        return (A @ B) % p
    acc = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    for i in range(k):
        acc = acc + _np_mulmod(A[:, i:i + 1], B[i:i + 1, :], p, mode)
        acc %= p
    return acc


def _np_route_batch(swaps, final, bits):
    bits = np.asarray(bits)
    count = bits.shape[0]
    n = final.shape[0]
    state = np.broadcast_to(np.arange(n, dtype=np.int64), (count, n)).copy()
    for a, b, bit in swaps:
        m = bits[:, bit].astype(bool)
        col_a = state[:, a].copy()
        state[:, a] = np.where(m, state[:, b], col_a)
        state[:, b] = np.where(m, col_a, state[:, b])
    return state[:, final]


def _np_enumerate_codes(swaps, final, nbits, start, count, chunk=1 << 17):
    n = final.shape[0]
    weights = np.int64(n) ** np.arange(n, dtype=np.int64)
    out = np.empty(count, dtype=np.int64)
    shifts = np.arange(nbits, dtype=np.int64)
    for lo in range(0, count, chunk):
        hi = min(count, lo + chunk)
        codes = np.arange(start + lo, start + hi, dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
        perms = _np_route_batch(swaps, final, bits)
        out[lo:hi] = perms @ weights
    return out


def _np_encode_perms(perms):
    perms = np.asarray(perms, dtype=np.int64)
    n = perms.shape[1]
    weights = np.int64(n) ** np.arange(n, dtype=np.int64)
    return perms @ weights


NUMPY_IMPL = {
    "mulmod": _np_mulmod,
    "matmul_mod": _np_matmul_mod,
    "route_batch": _np_route_batch,
    "enumerate_codes": _np_enumerate_codes,
    "encode_perms": _np_encode_perms,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba_impl():
    from numba import njit

    mulmod_m61 = njit(cache=True, inline="always")(_mulmod_m61_body)

    @njit(cache=True)
    def _scalar_mulmod(x, y, p, mode):
        if mode == MODE_SMALL:
            return (x * y) % p
        s = mulmod_m61(np.uint64(x), np.uint64(y))
        if s >= _U_M61:
            s -= _U_M61
        return np.int64(s)

    @njit(cache=True)
    def mulmod_flat(a, b, p, mode):
        out = np.empty(a.shape[0], dtype=np.int64)
        for i in range(a.shape[0]):
            out[i] = _scalar_mulmod(a[i], b[i], p, mode)
        return out

    @njit(cache=True)
    def matmul_mod(A, B, p, mode):
        m, k = A.shape
        n = B.shape[1]
        out = np.empty((m, n), dtype=np.int64)
        for i in range(m):
            for j in range(n):
                acc = np.int64(0)
                for l in range(k):
                    acc += _scalar_mulmod(A[i, l], B[l, j], p, mode)
                    if acc >= p:
                        acc -= p
                out[i, j] = acc
        return out

    @njit(cache=True)
    def route_batch(swaps, final, bits):
        count = bits.shape[0]
        n = final.shape[0]
        out = np.empty((count, n), dtype=np.int64)
        state = np.empty(n, dtype=np.int64)
        for r in range(count):
            for k in range(n):
                state[k] = k
            for s in range(swaps.shape[0]):
                if bits[r, swaps[s, 2]]:
                    a = swaps[s, 0]
                    b = swaps[s, 1]
                    tmp = state[a]
                    state[a] = state[b]
                    state[b] = tmp
            for k in range(n):
                out[r, k] = state[final[k]]
        return out

    @njit(cache=True)
    def enumerate_codes(swaps, final, nbits, start, count):
        n = final.shape[0]
        out = np.empty(count, dtype=np.int64)
        state = np.empty(n, dtype=np.int64)
        for r in range(count):
            c = start + r
            for k in range(n):
                state[k] = k
            for s in range(swaps.shape[0]):
                if (c >> swaps[s, 2]) & 1:
                    a = swaps[s, 0]
                    b = swaps[s, 1]
                    tmp = state[a]
                    state[a] = state[b]
                    state[b] = tmp
            code = np.int64(0)
            w = np.int64(1)
            for k in range(n):
                code += state[final[k]] * w
                w *= n
            out[r] = code
        return out

    @njit(cache=True)
    def encode_perms(perms):
        count, n = perms.shape
        out = np.empty(count, dtype=np.int64)
        for r in range(count):
            code = np.int64(0)
            w = np.int64(1)
            for k in range(n):
                code += perms[r, k] * w
                w *= n
            out[r] = code
        return out

    def mulmod(a, b, p, mode):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
        shape = a.shape
        flat = mulmod_flat(np.ascontiguousarray(a).ravel(), np.ascontiguousarray(b).ravel(), p, mode)
        return flat.reshape(shape)

    def matmul_mod_checked(A, B, p, mode):
        A = np.asarray(A, dtype=np.int64)
        if mode == MODE_SMALL and A.shape[1] * (p - 1) * (p - 1) < (1 << 63):
            # numpy's integer matmul beats the loop when no reduction is needed mid-sum
            return (A @ np.asarray(B, dtype=np.int64)) % p
        return matmul_mod(np.ascontiguousarray(A, dtype=np.int64),
                          np.ascontiguousarray(B, dtype=np.int64), p, mode)

    def route_batch_checked(swaps, final, bits):
        return route_batch(swaps, final, np.ascontiguousarray(bits, dtype=np.uint8))

    def enumerate_codes_checked(swaps, final, nbits, start, count):
        return enumerate_codes(swaps, final, nbits, start, count)

    def encode_perms_checked(perms):
        return encode_perms(np.ascontiguousarray(perms, dtype=np.int64))

    return {
        "mulmod": mulmod,
        "matmul_mod": matmul_mod_checked,
        "route_batch": route_batch_checked,
        "enumerate_codes": enumerate_codes_checked,
        "encode_perms": encode_perms_checked,
    }


try:
    NUMBA_IMPL = _build_numba_impl()
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_IMPL = None

_disabled = os.environ.get("MPSHUFFLE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
BACKEND = "numpy" if (_disabled or NUMBA_IMPL is None) else "numba"
_ACTIVE = NUMPY_IMPL if BACKEND == "numpy" else NUMBA_IMPL


def mulmod(a, b, p, mode):
    return _ACTIVE["mulmod"](a, b, p, mode)


def matmul_mod(A, B, p, mode):
    return _ACTIVE["matmul_mod"](A, B, p, mode)


def route_batch(swaps, final, bits):
    """Route a batch of configurations; row r, column k = input index at output k."""
    return _ACTIVE["route_batch"](swaps, final, bits)


def enumerate_codes(swaps, final, nbits, start, count):
    """Permutation codes for configurations ``start .. start+count-1`` (bit g of the integer = gate bit g)."""
    return _ACTIVE["enumerate_codes"](swaps, final, nbits, start, count)


def encode_perms(perms):
    return _ACTIVE["encode_perms"](perms)
