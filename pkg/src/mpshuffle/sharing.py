"""t-of-n Shamir sharing with consistency verification and reconstruction.

Verification works at error-detection strength: a share vector is accepted
only if all of its points lie on one polynomial of degree at most t-1.
Callers abort on a failed check; there is no error correction.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .field import Field, FieldElement, SecretPolynomial, eval_poly, lagrange_interpolate


class SharingError(ValueError):
    pass


@dataclass(frozen=True)
class ShareVector:
    """Shares of one secret: ``shares`` holds (party_index, value) pairs."""

    shares: tuple[tuple[int, int], ...]
    threshold: int
    modulus: int

    def __post_init__(self):
        idx = [i for i, _ in self.shares]
        if len(set(idx)) != len(idx):
            raise SharingError("duplicate party indices in share vector")
        if any(i < 1 for i in idx):
            raise SharingError("party indices start at 1")

    def __len__(self) -> int:
        return len(self.shares)

    def subset(self, parties: Sequence[int]) -> "ShareVector":
        keep = set(parties)
        return ShareVector(tuple(s for s in self.shares if s[0] in keep), self.threshold, self.modulus)

    def value_of(self, party: int) -> int:
        for i, v in self.shares:
            if i == party:
                return v
        raise KeyError(party)

    def replace(self, party: int, value: int) -> "ShareVector":
        return ShareVector(tuple((i, value % self.modulus if i == party else v) for i, v in self.shares),
                           self.threshold, self.modulus)


def share(secret, t: int, parties: Sequence[int], rng, field: Field) -> ShareVector:
    """Deal ``secret`` with a uniformly random degree-(t-1) polynomial.

    ``rng`` only needs an ``integers(low, high, size=...)`` method, so a
    ``numpy.random.Generator`` or a scripted stub both work.
    """
    if t < 1:
        raise SharingError("threshold must be at least 1")
    if t > len(parties):
        raise SharingError(f"threshold {t} exceeds the {len(parties)} share holders")
    if isinstance(secret, FieldElement):
        if secret.modulus != field.p:
            raise SharingError("secret lives in a different field")
        secret = secret.value
    coeffs = [int(secret) % field.p]
    if t > 1:
        coeffs += [int(c) % field.p for c in rng.integers(0, field.p, size=t - 1)]
    f = SecretPolynomial(tuple(coeffs), field.p)
    return ShareVector(tuple((int(i), eval_poly(f, i)) for i in parties), t, field.p)


def reconstruct(shares: ShareVector) -> int:
    """Interpolate at 0 using every available share.

    All shares are used rather than exactly ``threshold`` of them; with more
    than ``threshold`` shares the vector is also checked for consistency.
    """
    if len(shares) < shares.threshold:
        raise SharingError(f"need {shares.threshold} shares, got {len(shares)}")
    if len(shares) > shares.threshold and not verify_consistency(shares):
        raise SharingError("inconsistent shares")
    pts = shares.shares[: shares.threshold] if len(shares) > shares.threshold else shares.shares
    return lagrange_interpolate(pts, 0, shares.modulus)


def verify_consistency(shares: ShareVector) -> bool:
    """True iff all points lie on one polynomial of degree <= threshold - 1."""
    t, p = shares.threshold, shares.modulus
    if len(shares) <= t:
        return True
    base = shares.shares[:t]
    return all(lagrange_interpolate(base, i, p) == v for i, v in shares.shares[t:])


def subset_secrets(shares: ShareVector) -> set[int]:
    """Secrets reconstructed from every size-t subset (a singleton when consistent)."""
    t, p = shares.threshold, shares.modulus
    return {lagrange_interpolate(sub, 0, p) for sub in combinations(shares.shares, t)}


# -- batched helpers used by the MPC layer -------------------------------------

def deal_batch(field: Field, secrets: np.ndarray, coeffs: np.ndarray, vander: np.ndarray) -> np.ndarray:
    """Evaluate one polynomial per row: ``[secret, coeffs...] @ vander``.

    ``secrets`` has shape (R,), ``coeffs`` (R, d) and ``vander`` (d + 1, s);
    the result has shape (R, s).
    """
    poly = np.concatenate([np.asarray(secrets).reshape(-1, 1), coeffs], axis=1)
    return field.matmul(poly, vander)


def inconsistent_rows(field: Field, share_rows: np.ndarray, parity: np.ndarray) -> np.ndarray:
    """Boolean mask of rows that fail the parity check (rows are share vectors)."""
    if parity.shape[0] == 0:
        return np.zeros(share_rows.shape[0], dtype=bool)
    syndrome = field.matmul(share_rows, parity.T)
    return np.any(syndrome != 0, axis=1)
