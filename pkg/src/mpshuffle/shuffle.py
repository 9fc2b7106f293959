"""Multiparty shuffling by routing shared inputs through a permutation network.

Each gate is run by quorum ``(gate_id mod n) + 1`` as a random swap. Wire
values move between quorums only at layer boundaries, where every wire a
layer consumes is reshared (or, on first use, dealt by its input party) to
the consuming gate's quorum; all of this happens in one round. After the
last layer every output wire is opened to all parties.

Any missing or inconsistent message aborts the whole run and no party
obtains output.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .field import DEFAULT_MODULUS, Field
from .mpc_ops import (MPCContext, Shared, input_share_receive, input_share_send, random_swap,
                      reconstruct_rows, reshare_receive, reshare_send)
from .permnet import (Configuration, NetworkTopology, Permutation, build_arbitrary_benes,
                      build_reduced_npi, build_symmetric_npi)
from .runtime import ProtocolAbort, Quorum, Runtime, quorum_gen

ROUNDS_PER_SWAP = 3


@dataclass
class ShuffleJob:
    protocol: str = "one"
    n: int | None = None
    n1: int | None = None
    n2: int | None = None
    t: int = 0
    p: int = DEFAULT_MODULUS
    seed: int = 0
    network: str = "benes"
    corrupt: tuple[int, ...] = ()
    crash: dict[int, int] = dc_field(default_factory=dict)
    quorum_size: int | None = None
    threshold: int | None = None

    def build_network(self) -> NetworkTopology:
        if self.protocol == "one":
            if self.network == "benes":
                return build_arbitrary_benes(self.n)
            if self.network == "npi":
                if self.n < 6 or (self.n - 2) % 4:
                    raise ValueError("symmetric blocking network needs n = 2m + 2 with m even")
                return build_symmetric_npi((self.n - 2) // 2)
            raise ValueError(f"unknown network {self.network!r}")
        if self.protocol == "two":
            return build_reduced_npi(self.n1, self.n2)
        raise ValueError(f"unknown protocol {self.protocol!r}")

    @property
    def size(self) -> int:
        return self.n if self.protocol == "one" else self.n1 * self.n2


@dataclass
class ShuffleOutcome:
    outputs: list[int] | None
    aborted: bool
    abort_reason: str | None
    rounds: int
    total_rounds: int
    network: NetworkTopology
    quorums: list[Quorum]
    runtime: Runtime
    realized: Permutation | None = None
    coins: Configuration | None = None
    layer_rounds: list[int] = dc_field(default_factory=list)

    def transcript_digest(self) -> str:
        return self.runtime.transcript_digest()

    def to_dict(self) -> dict:
        return {
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "outputs": None if self.outputs is None else [str(v) for v in self.outputs],
            "rounds": self.rounds,
            "total_rounds": self.total_rounds,
            "network": self.network.name,
            "permutation": None if self.realized is None else list(self.realized.one_based()),
            "transcript_digest": self.transcript_digest(),
        }


def gate_quorum(gate_id: int, n: int) -> int:
    return gate_id % n + 1


def network_round_cost(net: NetworkTopology) -> int:
    """Routing rounds: three per sequential swap step plus one reshare per layer boundary."""
    active = [li for li in range(net.depth) if net.layers[li]]
    return ROUNDS_PER_SWAP * sum(net.swap_steps(li) for li in active) + max(0, len(active) - 1)


def round_cost(protocol: str, n=None, n1=None, n2=None, network: str = "benes") -> int:
    job = ShuffleJob(protocol=protocol, n=n, n1=n1, n2=n2, network=network)
    return network_round_cost(job.build_network())


def run_network(net: NetworkTopology, inputs: Sequence[int], *, t: int = 0, p: int = DEFAULT_MODULUS,
                seed=0, corrupt: Sequence[int] = (), crash: dict[int, int] | None = None,
                forced: Sequence[int] | Configuration | None = None, test_mode: bool = False,
                quorum_size: int | None = None, threshold: int | None = None,
                tamper: dict[int, Callable] | None = None, record_coins: bool = False,
                quorums: Sequence[Quorum] | None = None) -> ShuffleOutcome:
    """Shuffle ``inputs`` (party k + 1 owns inputs[k]) through ``net``."""
    n = net.n
    if len(inputs) != n:
        raise ValueError(f"network has {n} wires but {len(inputs)} inputs were given")
    fld = Field(p)
    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    q_seed, rt_seed, test_seed = master.spawn(3)
    corrupt = tuple(sorted(set(int(c) for c in corrupt)))
    if len(corrupt) > t:
        raise ValueError(f"{len(corrupt)} corrupted parties exceed t={t}")
    if quorums is None:
        quorums = quorum_gen(n, t, q_seed, size=quorum_size, corrupted=corrupt if corrupt else None)
    rt = Runtime(n, fld, rt_seed, record_coins=record_coins)
    rt.corrupt(corrupt)
    for party, rnd in (crash or {}).items():
        rt.crash(party, rnd)
    if tamper:
        rt.tamper.update(tamper)
    ctx = MPCContext(rt, quorums, threshold, test_mode=test_mode, test_seed=test_seed)
    if isinstance(forced, Configuration):
        forced = forced.bits
    if forced is not None and len(forced) != net.nbits:
        raise ValueError("forced coin vector does not match the network")

    values = fld.array(list(inputs))
    state = _WireState(n, ctx.s, fld.dtype, values)
    coin_records: list[tuple[list[int], np.ndarray]] = []
    layer_rounds: list[int] = []
    routing_start = None
    outputs = None
    reason = None
    try:
        for li in range(net.depth):
            gates = net.layer_gates(li)
            if gates:
                layer_rounds.append(rt.round)
                _boundary(ctx, state, gates, n, tag=f"L{li}.in")
                if routing_start is None:
                    routing_start = rt.round
                for step in range(net.swap_steps(li)):
                    pairs = [g.swap_pairs()[step] for g in gates if step < len(g.swap_pairs())]
                    a = np.array([x[0] for x in pairs])
                    b = np.array([x[1] for x in pairs])
                    bits = [x[2] for x in pairs]
                    qs = state.quorum[a]
                    x = Shared(qs, state.shares[a], ctx.k)
                    y = Shared(qs, state.shares[b], ctx.k)
                    f = None if forced is None else [forced[bit] for bit in bits]
                    alpha, beta = random_swap(ctx, x, y, forced=f, tag=f"L{li}.s{step}")
                    if test_mode:
                        coin_records.append((bits, ctx.coin_log[-1][2]))
                    state.shares[a] = alpha.shares
                    state.shares[b] = beta.shares
            if net.routes[li] is not None:
                state.permute(np.array(net.routes[li]))
        routing_end = rt.round
        outputs = _open_outputs(ctx, state, n)
    except ProtocolAbort as exc:
        reason = str(exc)
        routing_end = rt.round
    total = rt.round
    rounds = 0 if routing_start is None else routing_end - routing_start
    outcome = ShuffleOutcome(outputs, outputs is None, reason, rounds, total, net, list(quorums), rt,
                             layer_rounds=layer_rounds)
    if outputs is not None:
        outcome.realized = _realized(list(values), outputs)
    if test_mode and outputs is not None:
        bits = [0] * net.nbits
        for idx, shares in coin_records:
            vals = reconstruct_rows(ctx, Shared(np.zeros(len(idx), dtype=np.int64), shares, ctx.k))
            for bit, v in zip(idx, vals):
                bits[bit] = int(v)
        outcome.coins = Configuration(tuple(bits))
    return outcome


class _WireState:
    """Who holds each wire position: a party in plaintext or a quorum as shares."""

    def __init__(self, n: int, s: int, dtype, values: np.ndarray):
        self.plain = np.ones(n, dtype=bool)
        self.owner = np.arange(1, n + 1, dtype=np.int64)
        self.values = values.copy()
        self.quorum = np.zeros(n, dtype=np.int64)
        self.shares = np.zeros((n, s), dtype=dtype)

    def permute(self, route: np.ndarray) -> None:
        self.plain = self.plain[route]
        self.owner = self.owner[route]
        self.values = self.values[route]
        self.quorum = self.quorum[route]
        self.shares = self.shares[route]


def _boundary(ctx: MPCContext, state: _WireState, gates, n: int, tag: str) -> None:
    """One round: deal or reshare every wire the layer consumes to its gate's quorum."""
    wires, targets = [], []
    for g in gates:
        for w in g.wires:
            wires.append(w)
            targets.append(gate_quorum(g.id, n))
    wires = np.array(wires)
    targets = np.array(targets, dtype=np.int64)
    plain = state.plain[wires]
    pend_in = pend_re = None
    if plain.any():
        w_in, q_in = wires[plain], targets[plain]
        pend_in = input_share_send(ctx, state.owner[w_in], state.values[w_in], q_in, tag=f"{tag}.input")
    if (~plain).any():
        w_re, q_re = wires[~plain], targets[~plain]
        src = Shared(state.quorum[w_re], state.shares[w_re], ctx.k)
        pend_re = reshare_send(ctx, src, q_re, tag=f"{tag}.reshare")
    ctx.runtime.deliver_round()
    if pend_in is not None:
        got = input_share_receive(ctx, *pend_in, q_in)
        state.shares[w_in] = got.shares
        state.quorum[w_in] = q_in
        state.plain[w_in] = False
    if pend_re is not None:
        got = reshare_receive(ctx, *pend_re, q_re)
        state.shares[w_re] = got.shares
        state.quorum[w_re] = q_re


def _open_outputs(ctx: MPCContext, state: _WireState, n: int) -> list[int]:
    """One round: every output wire is revealed to all parties; any fault aborts for everyone."""
    rt = ctx.runtime
    everyone = np.arange(1, n + 1, dtype=np.int64)
    sh = ~state.plain
    pend_sh = pend_pl = None
    if sh.any():
        recv = np.broadcast_to(everyone, (int(sh.sum()), n))
        pend_sh = ctx.open_send("output", state.shares[sh], state.quorum[sh], recv)
    if state.plain.any():
        m = int(state.plain.sum())
        pend_pl = rt.post("output.plain", state.owner[state.plain].reshape(-1, 1),
                          np.broadcast_to(everyone, (m, n)),
                          np.broadcast_to(state.values[state.plain].reshape(-1, 1, 1, 1), (m, 1, n, 1)),
                          kind="open")
    rt.deliver_round()
    out = np.zeros(n, dtype=object)
    if pend_sh is not None:
        out[sh] = [int(v) for v in ctx.open_receive(pend_sh, ctx.k - 1)]
    if pend_pl is not None:
        ctx._check_missing(pend_pl)
        out[state.plain] = [int(v) for v in pend_pl.payload[:, 0, 0, 0]]
    return [int(v) for v in out]


def _realized(inputs: list[int], outputs: list[int]) -> Permutation | None:
    if len(set(inputs)) != len(inputs):
        return None
    where = {v: i for i, v in enumerate(inputs)}
    return Permutation(tuple(where[v] for v in outputs))


def shuffle_one(inputs: Sequence[int], *, t: int = 0, p: int = DEFAULT_MODULUS, seed=0,
                network: str = "benes", **kw) -> ShuffleOutcome:
    """Shuffle n inputs through an n-input rearrangeable (or symmetric blocking) network."""
    job = ShuffleJob(protocol="one", n=len(inputs), t=t, p=p, network=network)
    return run_network(job.build_network(), inputs, t=t, p=p, seed=seed, **kw)


def shuffle_two(inputs: Sequence[int], n1: int, n2: int, *, t: int = 0, p: int = DEFAULT_MODULUS,
                seed=0, **kw) -> ShuffleOutcome:
    """Shuffle n1 * n2 inputs: n2 parallel n1-input blocks, then the riffle stage."""
    if n1 * n2 != len(inputs):
        raise ValueError(f"{len(inputs)} inputs do not split into {n2} blocks of {n1}")
    job = ShuffleJob(protocol="two", n1=n1, n2=n2, t=t, p=p)
    return run_network(job.build_network(), inputs, t=t, p=p, seed=seed, **kw)


def run_job(job: ShuffleJob, inputs: Sequence[int] | None = None, **kw) -> ShuffleOutcome:
    n = job.size
    if inputs is None:
        inputs = list(range(1, n + 1))
    return run_network(job.build_network(), inputs, t=job.t, p=job.p, seed=job.seed,
                       corrupt=job.corrupt, crash=job.crash, quorum_size=job.quorum_size,
                       threshold=job.threshold, **kw)
