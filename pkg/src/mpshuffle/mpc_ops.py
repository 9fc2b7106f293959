"""Arithmetic on shared values held by quorums.

A :class:`Shared` is a batch of G independent sharings; row g is held by
quorum ``quorums[g]`` and ``shares[g, j]`` belongs to that quorum's j-th
member (evaluation point j + 1). Operations on a batch run all rows in the
same rounds, which is how gates of one network layer execute in parallel.

Round costs: add / cmul 0, mul / rand / reshare 1, rand2 / inv 2 and
random_swap 3.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .field import Field
from .runtime import Pending, ProtocolAbort, Quorum, Runtime
from .sharing import deal_batch, inconsistent_rows


@dataclass
class Shared:
    quorums: np.ndarray
    shares: np.ndarray
    threshold: int
    label: str = ""

    def __len__(self) -> int:
        return len(self.quorums)

    def __getitem__(self, idx) -> "Shared":
        if isinstance(idx, (int, np.integer)):
            idx = slice(int(idx), int(idx) + 1)
        return Shared(self.quorums[idx], self.shares[idx], self.threshold, self.label)

    @classmethod
    def concat(cls, parts: Sequence["Shared"]) -> "Shared":
        return cls(np.concatenate([p.quorums for p in parts]),
                   np.concatenate([p.shares for p in parts]),
                   parts[0].threshold, parts[0].label)


SharedHandle = Shared


class MPCContext:
    """Shared state for MPC operations: runtime, quorum table, threshold and cached matrices."""

    def __init__(self, runtime: Runtime, quorums: Sequence[Quorum], threshold: int | None = None,
                 *, test_mode: bool = False, test_seed=None):
        sizes = {q.size for q in quorums}
        if len(sizes) != 1:
            raise ValueError("all quorums must have the same size")
        self.runtime = runtime
        self.field: Field = runtime.field
        self.s = s = sizes.pop()
        self.k = (s + 1) // 2 if threshold is None else threshold
        if not 1 <= self.k or 2 * self.k - 1 > s:
            raise ValueError(f"multiplication needs quorum size >= 2t-1 (size {s}, t={self.k})")
        self.quorums = {q.id: q for q in quorums}
        self.members = np.zeros((max(self.quorums) + 1, s), dtype=np.int64)
        for q in quorums:
            self.members[q.id] = q.members
        f = self.field
        pts = list(range(1, s + 1))
        self.points = np.array(pts, dtype=np.int64)
        self.vander = {d: f.vandermonde(d, pts) for d in {self.k - 1, 2 * self.k - 2}}
        self.parity = {d: f.parity_check(d, pts) for d in {self.k - 1, 2 * self.k - 2}}
        self.lam = f.lagrange_coefficients(pts, 0).reshape(-1, 1)
        self.ones = f.array(np.ones((s, 1), dtype=np.int64))
        self.inv2 = f.inv(2) if f.p > 2 else None
        self.test_mode = test_mode
        self.coin_log: list[tuple[str, np.ndarray, np.ndarray]] = []
        self._test_rng = np.random.default_rng(test_seed)

    def holders(self, quorums: np.ndarray) -> np.ndarray:
        return self.members[np.asarray(quorums, dtype=np.int64)]

    # -- dealing / opening primitives --------------------------------------

    def deal_send(self, tag: str, senders, receivers, secrets, degrees: Sequence[int]) -> tuple[Pending, tuple]:
        """Each sender deals one polynomial per component to its row's receivers.

        ``senders`` (G, a), ``receivers`` (G, b), ``secrets`` (G, a, c).
        """
        f, rt = self.field, self.runtime
        senders = np.asarray(senders, dtype=np.int64)
        receivers = np.asarray(receivers, dtype=np.int64)
        G, a = senders.shape
        b = receivers.shape[1]
        secrets = np.asarray(secrets).reshape(G, a, len(degrees))
        coeffs = rt.draw(senders, sum(degrees))
        if f.dtype is object:
            coeffs = coeffs.astype(object)
        payload = np.empty((G, a, b, len(degrees)), dtype=f.dtype)
        pts = list(range(1, b + 1))
        off = 0
        for ci, d in enumerate(degrees):
            V = self.vander[d] if b == self.s and d in self.vander else f.vandermonde(d, pts)
            vals = deal_batch(f, secrets[:, :, ci].reshape(-1), coeffs[:, off:off + d], V)
            payload[..., ci] = vals.reshape(G, a, b)
            off += d
        if rt.tamper:
            for pid, fn in rt.tamper.items():
                hit = senders == pid
                if hit.any():
                    payload[hit] = fn(payload[hit]) % f.p
        return rt.post(tag, senders, receivers, payload, kind="share"), tuple(degrees)

    def deal_receive(self, pend: Pending, degrees: tuple) -> np.ndarray:
        """Check a delivered dealing and return the payload (G, a, b, c)."""
        self._check_missing(pend)
        payload = pend.payload
        G, a, b, c = payload.shape
        for ci, d in enumerate(degrees):
            rows = payload[..., ci].reshape(G * a, b)
            H = self.parity[d] if b == self.s and d in self.parity else self.field.parity_check(d, range(1, b + 1))
            bad = inconsistent_rows(self.field, rows, H)
            if bad.any():
                culprit = int(pend.batch.senders.reshape(-1)[np.argmax(bad)])
                raise ProtocolAbort(f"inconsistent sharing from party {culprit} in {pend.batch.tag}")
        return payload

    def open_send(self, tag: str, x_shares, quorums, receivers=None) -> Pending:
        """Members broadcast their share of each row to ``receivers`` (default: the quorum)."""
        f, rt = self.field, self.runtime
        senders = self.holders(quorums)
        receivers = senders if receivers is None else np.asarray(receivers, dtype=np.int64)
        vals = np.array(x_shares, dtype=f.dtype, copy=True)
        if rt.tamper:
            for pid, fn in rt.tamper.items():
                hit = senders == pid
                if hit.any():
                    vals[hit] = fn(vals[hit]) % f.p
        G, a = senders.shape
        payload = np.broadcast_to(vals.reshape(G, a, 1, 1), (G, a, receivers.shape[1], 1))
        return rt.post(tag, senders, receivers, payload, kind="open")

    def open_receive(self, pend: Pending, degree: int) -> np.ndarray:
        self._check_missing(pend)
        rows = pend.payload[:, :, 0, 0]
        bad = inconsistent_rows(self.field, rows, self.parity[degree])
        if bad.any():
            raise ProtocolAbort(f"inconsistent opening in {pend.batch.tag}")
        return self.field.matmul(rows, self.lam).reshape(-1)

    def _check_missing(self, pend: Pending) -> None:
        if pend.missing.any():
            who = sorted({int(v) for v in pend.batch.senders[pend.missing]})
            raise ProtocolAbort(f"no message from parties {who} in round {pend.batch.round} ({pend.batch.tag})")

    def combine(self, payload_component: np.ndarray) -> np.ndarray:
        """Degree reduction / resharing: receiver j takes sum_i lam_i * payload[g, i, j]."""
        G, a, b = payload_component.shape
        cols = np.ascontiguousarray(payload_component.transpose(0, 2, 1)).reshape(G * b, a)
        return self.field.matmul(cols, self.lam).reshape(G, b)

    def sum_received(self, payload_component: np.ndarray) -> np.ndarray:
        G, a, b = payload_component.shape
        cols = np.ascontiguousarray(payload_component.transpose(0, 2, 1)).reshape(G * b, a)
        return self.field.matmul(cols, self.ones).reshape(G, b)

    def constant(self, quorums, values) -> Shared:
        """Public constant as a (degree-0) sharing."""
        q = np.asarray(quorums, dtype=np.int64)
        v = self.field.array(np.broadcast_to(np.asarray(values).reshape(-1, 1), (q.size, self.s)))
        return Shared(q, v, self.k)

    def trusted_deal(self, quorums, values) -> Shared:
        """Fresh sharing dealt outside the protocol; test hook for forcing coins."""
        f = self.field
        q = np.asarray(quorums, dtype=np.int64)
        coeffs = f.random(self._test_rng, (q.size, self.k - 1))
        shares = deal_batch(f, f.array(values), coeffs, self.vander[self.k - 1])
        return Shared(q, shares, self.k)


# -- local operations ------------------------------------------------------------

def _same_quorums(x: Shared, y: Shared) -> None:
    if x.shares.shape != y.shares.shape or not np.array_equal(x.quorums, y.quorums):
        raise ValueError("operands are held by different quorums")
    if x.threshold != y.threshold:
        raise ValueError("operands use different thresholds")


def mpc_add(ctx: MPCContext, x: Shared, y: Shared) -> Shared:
    _same_quorums(x, y)
    return Shared(x.quorums, ctx.field.add_arr(x.shares, y.shares), x.threshold)


def mpc_sub(ctx: MPCContext, x: Shared, y: Shared) -> Shared:
    _same_quorums(x, y)
    return Shared(x.quorums, ctx.field.sub_arr(x.shares, y.shares), x.threshold)


def mpc_cmul(ctx: MPCContext, c, y: Shared) -> Shared:
    """Multiply by a public constant (scalar or one constant per row)."""
    f = ctx.field
    c = f.array(np.broadcast_to(np.asarray(c).reshape(-1, 1) if np.ndim(c) else c, y.shares.shape))
    return Shared(y.quorums, f.mul_arr(c, y.shares), y.threshold)


def mpc_affine(ctx: MPCContext, a, x: Shared, b) -> Shared:
    """a * [x] + b with public a, b."""
    f = ctx.field
    ax = mpc_cmul(ctx, a, x)
    b = f.array(np.broadcast_to(np.asarray(b).reshape(-1, 1) if np.ndim(b) else b, x.shares.shape))
    return Shared(x.quorums, f.add_arr(ax.shares, b), x.threshold)


# -- interactive operations ------------------------------------------------------

def input_share(ctx: MPCContext, dealers, values, quorums, tag: str = "input") -> Shared:
    """Each dealer party shares its value with the quorum of its row (one round)."""
    pend, deg = input_share_send(ctx, dealers, values, quorums, tag)
    ctx.runtime.deliver_round()
    return input_share_receive(ctx, pend, deg, quorums)


def input_share_send(ctx: MPCContext, dealers, values, quorums, tag: str = "input"):
    dealers = np.asarray(dealers, dtype=np.int64).reshape(-1, 1)
    secrets = ctx.field.array(values).reshape(-1, 1, 1)
    return ctx.deal_send(tag, dealers, ctx.holders(quorums), secrets, (ctx.k - 1,))


def input_share_receive(ctx: MPCContext, pend: Pending, degrees, quorums) -> Shared:
    payload = ctx.deal_receive(pend, degrees)
    return Shared(np.asarray(quorums, dtype=np.int64), payload[:, 0, :, 0].copy(), ctx.k)


def mpc_mul(ctx: MPCContext, x: Shared, y: Shared, tag: str = "mul") -> Shared:
    """[x*y]: local product of degree 2t-2, reshared at degree t-1 and recombined (one round)."""
    _same_quorums(x, y)
    members = ctx.holders(x.quorums)
    local = ctx.field.mul_arr(x.shares, y.shares)
    pend, deg = ctx.deal_send(tag, members, members, local[..., None], (ctx.k - 1,))
    ctx.runtime.deliver_round()
    payload = ctx.deal_receive(pend, deg)
    return Shared(x.quorums, ctx.combine(payload[..., 0]), ctx.k)


def mpc_rand(ctx: MPCContext, quorums, tag: str = "rand", contributions=None) -> Shared:
    """Shared uniform value: every member deals a private random contribution (one round)."""
    q = np.asarray(quorums, dtype=np.int64)
    members = ctx.holders(q)
    if contributions is None:
        contributions = ctx.runtime.draw(members, 1).reshape(members.shape)
    pend, deg = ctx.deal_send(tag, members, members, ctx.field.array(contributions)[..., None], (ctx.k - 1,))
    ctx.runtime.deliver_round()
    payload = ctx.deal_receive(pend, deg)
    return Shared(q, ctx.sum_received(payload[..., 0]), ctx.k)


def _masked_product_open(ctx: MPCContext, quorums: np.ndarray, other: Shared | None, tag: str):
    """Two rounds: deal [r] and a degree-(2t-2) sharing of zero, then open r*r (or r*x).

    Returns the fresh [r] and the opened product. The zero sharing re-randomises
    the degree-(2t-2) product so the opening reveals nothing beyond its value.
    """
    f, rt = ctx.field, ctx.runtime
    members = ctx.holders(quorums)
    contrib = rt.draw(members, 1).reshape(members.shape)
    secrets = np.stack([f.array(contrib), f.array(np.zeros_like(contrib))], axis=-1)
    pend, deg = ctx.deal_send(f"{tag}.deal", members, members, secrets, (ctx.k - 1, 2 * ctx.k - 2))
    rt.deliver_round()
    payload = ctx.deal_receive(pend, deg)
    r = Shared(quorums, ctx.sum_received(payload[..., 0]), ctx.k)
    z = ctx.sum_received(payload[..., 1])
    factor = r.shares if other is None else other.shares
    masked = f.add_arr(f.mul_arr(r.shares, factor), z)
    pend = ctx.open_send(f"{tag}.open", masked, quorums)
    rt.deliver_round()
    return r, ctx.open_receive(pend, 2 * ctx.k - 2)


def sign_bit(field: Field, r: int) -> int:
    """Plaintext form of the Rand2 map: (r / sqrt(r^2) + 1) / 2, i.e. 1 iff r is the canonical root."""
    s = field.mul(r, r)
    return field.mul(field.add(field.mul(r, field.inv(field.sqrt(s))), 1), field.inv(2))


def mpc_rand2(ctx: MPCContext, quorums, tag: str = "rand2", retries: int = 16) -> Shared:
    """Shared uniform bit via square-root masking (two rounds per attempt).

    With r uniform and s = r^2 opened, b = (r / sqrt(s) + 1) / 2 where sqrt is
    the canonical root; r / sqrt(s) is +1 or -1 with equal probability.
    """
    f = ctx.field
    if f.p == 2:
        raise ValueError("random bits need an odd prime field")
    q = np.asarray(quorums, dtype=np.int64)
    out_shares = np.empty((q.size, ctx.s), dtype=f.dtype)
    todo = np.arange(q.size)
    for attempt in range(retries + 1):
        label = tag if attempt == 0 else f"{tag}#retry{attempt}"
        r, s = _masked_product_open(ctx, q[todo], None, label)
        ok = s != 0
        if ok.any():
            scale = [f.mul(f.inv(f.sqrt(int(v))), ctx.inv2) for v in s[ok]]
            b = mpc_affine(ctx, np.array(scale, dtype=object), r[np.nonzero(ok)[0]], ctx.inv2)
            out_shares[todo[ok]] = b.shares
        todo = todo[~ok]
        if todo.size == 0:
            return Shared(q, out_shares, ctx.k, tag)
    raise ProtocolAbort(f"{tag}: opened r^2 = 0 on {retries + 1} attempts")


def mpc_inv(ctx: MPCContext, x: Shared, tag: str = "inv", retries: int = 16) -> Shared:
    """[1/x] by mask-and-open: open w = r*x, return w^-1 * [r] (two rounds per attempt)."""
    f = ctx.field
    out_shares = np.empty_like(x.shares)
    todo = np.arange(len(x))
    for attempt in range(retries + 1):
        label = tag if attempt == 0 else f"{tag}#retry{attempt}"
        r, w = _masked_product_open(ctx, x.quorums[todo], x[todo], label)
        ok = w != 0
        if ok.any():
            winv = np.array([f.inv(int(v)) for v in w[ok]], dtype=object)
            out_shares[todo[ok]] = mpc_cmul(ctx, winv, r[np.nonzero(ok)[0]]).shares
        todo = todo[~ok]
        if todo.size == 0:
            return Shared(x.quorums, out_shares, ctx.k, tag)
    raise ProtocolAbort(f"{tag}: masked value opened to 0 on {retries + 1} attempts (input is zero?)")


def random_swap(ctx: MPCContext, x: Shared, y: Shared, *, forced=None, tag: str = "swap") -> tuple[Shared, Shared]:
    """Obliviously swap each pair with probability 1/2 (three rounds).

    alpha = b*y + (1-b)*x and beta = (x + y) - alpha; the two products run in
    parallel in one multiplication round. ``forced`` replaces the coin by a
    trusted sharing of the given bits after Rand2 ran (tests only).
    """
    _same_quorums(x, y)
    G = len(x)
    b = mpc_rand2(ctx, x.quorums, tag=f"{tag}.rand2")
    if forced is not None:
        b = ctx.trusted_deal(x.quorums, np.asarray(forced, dtype=np.int64).reshape(G))
    if ctx.test_mode:
        ctx.coin_log.append((tag, x.quorums.copy(), b.shares.copy()))
    not_b = mpc_affine(ctx, ctx.field.p - 1, b, 1)
    prods = mpc_mul(ctx, Shared.concat([b, not_b]), Shared.concat([y, x]), tag=f"{tag}.mul")
    alpha = mpc_add(ctx, prods[:G], prods[G:])
    z = mpc_add(ctx, x, y)
    beta = mpc_sub(ctx, z, alpha)
    return alpha, beta


def reshare(ctx: MPCContext, x: Shared, to_quorums, tag: str = "reshare") -> Shared:
    """Move each row to a new quorum with fresh shares of the same secret (one round)."""
    pend, deg = reshare_send(ctx, x, to_quorums, tag)
    ctx.runtime.deliver_round()
    return reshare_receive(ctx, pend, deg, to_quorums)


def reshare_send(ctx: MPCContext, x: Shared, to_quorums, tag: str = "reshare"):
    src = ctx.holders(x.quorums)
    dst = ctx.holders(to_quorums)
    return ctx.deal_send(tag, src, dst, x.shares[..., None], (ctx.k - 1,))


def reshare_receive(ctx: MPCContext, pend: Pending, degrees, to_quorums) -> Shared:
    payload = ctx.deal_receive(pend, degrees)
    return Shared(np.asarray(to_quorums, dtype=np.int64), ctx.combine(payload[..., 0]), ctx.k)


def open_shared(ctx: MPCContext, x: Shared, receivers=None, tag: str = "open") -> np.ndarray:
    """Reconstruct every row towards ``receivers`` (default: the holding quorum); one round."""
    pend = ctx.open_send(tag, x.shares, x.quorums, receivers)
    ctx.runtime.deliver_round()
    return ctx.open_receive(pend, x.threshold - 1)


def reconstruct_rows(ctx: MPCContext, x: Shared) -> np.ndarray:
    """Omniscient reconstruction (no messages); for tests and test-mode tracing."""
    f = ctx.field
    if x.threshold - 1 not in ctx.parity:
        H = f.parity_check(x.threshold - 1, range(1, ctx.s + 1))
    else:
        H = ctx.parity[x.threshold - 1]
    if inconsistent_rows(f, x.shares, H).any():
        raise ValueError("inconsistent sharing")
    return f.matmul(x.shares, ctx.lam).reshape(-1)
