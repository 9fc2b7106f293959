"""Deterministic simulation of synchronous parties with private pairwise channels.

Two message paths share one round clock:

* ``send`` / ``deliver_round`` / ``recv``: individual byte payloads queued
  per (sender, receiver) channel in FIFO order.
* ``post``: a batch of field-element messages (used by the MPC layer). A
  batch posted in round r returns a :class:`Pending` handle whose payload
  only becomes readable after the round barrier.

Randomness: one master seed drives a ``numpy.random.SeedSequence``; each
party owns a generator spawned from it, and nothing outside the party's
own dealing code draws from that generator.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .field import Field


class ProtocolAbort(RuntimeError):
    """Raised when a party detects a missing or inconsistent message."""


class SynchronyError(RuntimeError):
    pass


class QuorumError(ValueError):
    pass


@dataclass
class Party:
    index: int
    rng: np.random.Generator
    corrupted: bool = False
    crash_round: int | None = None
    inbox: dict[int, deque] = dc_field(default_factory=lambda: defaultdict(deque))

    def alive_at(self, rnd: int) -> bool:
        return self.crash_round is None or rnd < self.crash_round


@dataclass(frozen=True)
class Quorum:
    id: int
    members: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.members)


def default_quorum_size(n: int, c: float = 3.0) -> int:
    return max(1, min(n, math.ceil(c * math.log2(max(n, 2)))))


def quorum_gen(n: int, t: int, seed, *, size: int | None = None, c: float = 3.0,
               cap: int | None = None, corrupted: Iterable[int] | None = None,
               max_tries: int = 200) -> list[Quorum]:
    """Seeded trusted-setup quorum assignment.

    Draws ``n`` quorums of ``size`` distinct members and resamples until every
    quorum has a corrupted strict minority and no party sits in more than
    ``cap`` quorums. ``corrupted`` defaults to ``t`` parties chosen from the
    seed.
    """
    if n < 2:
        raise QuorumError("need at least two parties")
    if not 0 <= 3 * t < n:
        raise QuorumError(f"corruption bound t={t} must satisfy t < n/3 for n={n}")
    size = default_quorum_size(n, c) if size is None else size
    if not 1 <= size <= n:
        raise QuorumError(f"quorum size {size} out of range for n={n}")
    cap = 2 * size if cap is None else cap
    rng = np.random.default_rng(seed)
    if corrupted is None:
        bad = set(int(x) + 1 for x in rng.choice(n, size=t, replace=False)) if t else set()
    else:
        bad = set(int(x) for x in corrupted)
        if len(bad) > t:
            raise QuorumError(f"{len(bad)} corrupted parties exceed bound t={t}")
    for _ in range(max_tries):
        quorums = []
        for qid in range(1, n + 1):
            for _ in range(max_tries):
                members = tuple(sorted(int(x) + 1 for x in rng.choice(n, size=size, replace=False)))
                if 2 * sum(m in bad for m in members) < size:
                    break
            else:
                raise QuorumError("could not draw a good quorum; corruption too dense for this size")
            quorums.append(Quorum(qid, members))
        load = np.bincount([m for q in quorums for m in q.members], minlength=n + 1)
        if load.max() <= cap:
            return quorums
    raise QuorumError(f"no assignment within membership cap {cap} after {max_tries} tries")


def check_quorums(quorums: Sequence[Quorum], corrupted: Iterable[int], cap: int) -> bool:
    bad = set(corrupted)
    load: dict[int, int] = defaultdict(int)
    for q in quorums:
        if 2 * sum(m in bad for m in q.members) >= q.size:
            return False
        for m in q.members:
            load[m] += 1
    return max(load.values(), default=0) <= cap


@dataclass
class RoundClock:
    current_round: int = 0
    pending: set = dc_field(default_factory=set)

    def tick(self) -> None:
        self.current_round += 1
        self.pending.clear()


@dataclass
class Batch:
    """Field-element messages: payload[g, i, j, :] goes senders[g, i] -> receivers[g, j]."""

    round: int
    tag: str
    kind: str
    senders: np.ndarray
    receivers: np.ndarray
    payload: np.ndarray
    missing: np.ndarray


@dataclass
class ByteMessage:
    round: int
    tag: str
    sender: int
    receiver: int
    payload: bytes


class Pending:
    def __init__(self, runtime: "Runtime", batch: Batch):
        self._runtime = runtime
        self.batch = batch
        self.delivered = False

    @property
    def payload(self) -> np.ndarray:
        if not self.delivered:
            raise SynchronyError(f"batch {self.batch.tag!r} read in the round it was sent")
        return self.batch.payload

    @property
    def missing(self) -> np.ndarray:
        return self.batch.missing


class Runtime:
    def __init__(self, n: int, field: Field, seed=0, *, record_coins: bool = False):
        self.n = n
        self.field = field
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = ss.spawn(n)
        self.parties = {i: Party(i, np.random.Generator(np.random.PCG64(children[i - 1])))
                        for i in range(1, n + 1)}
        self.clock = RoundClock()
        self.record_coins = record_coins
        self.coins: dict[int, list[np.ndarray]] = defaultdict(list)
        self.tamper: dict[int, Callable[[np.ndarray], np.ndarray]] = {}
        self._bytes_out: list[ByteMessage] = []
        self._staged: list[Pending] = []
        self.transcript: list[Batch | ByteMessage] = []

    @property
    def round(self) -> int:
        return self.clock.current_round

    def party(self, i: int) -> Party:
        try:
            return self.parties[int(i)]
        except KeyError:
            raise KeyError(f"unknown party {i}") from None

    def crash(self, party: int, at_round: int | None = None) -> None:
        self.party(party).crash_round = self.round if at_round is None else at_round

    def corrupt(self, parties: Iterable[int]) -> None:
        for i in parties:
            self.party(i).corrupted = True

    @property
    def corrupted(self) -> set[int]:
        return {i for i, p in self.parties.items() if p.corrupted}

    # -- byte channel --------------------------------------------------------

    def send(self, frm: int, to: int, payload: bytes, *, round: int | None = None, tag: str = "msg") -> None:
        if round is not None and round != self.round:
            raise SynchronyError(f"send for round {round} during round {self.round}")
        sender = self.party(frm)
        self.party(to)
        if not sender.alive_at(self.round):
            return
        self.clock.pending.add(frm)
        self._bytes_out.append(ByteMessage(self.round, tag, int(frm), int(to), bytes(payload)))

    def recv(self, party: int, frm: int) -> bytes | None:
        q = self.party(party).inbox.get(int(frm))
        return q.popleft() if q else None

    # -- field batches ---------------------------------------------------------

    def post(self, tag: str, senders, receivers, payload, kind: str = "share") -> Pending:
        senders = np.asarray(senders, dtype=np.int64)
        receivers = np.asarray(receivers, dtype=np.int64)
        payload = np.asarray(payload)
        if payload.ndim == 3:
            payload = payload[..., None]
        rnd = self.round
        missing = np.zeros(senders.shape, dtype=bool)
        for i in np.unique(senders):
            if not self.parties[int(i)].alive_at(rnd):
                missing |= senders == i
        self.clock.pending.update(int(i) for i in np.unique(senders))
        pend = Pending(self, Batch(rnd, tag, kind, senders, receivers, payload, missing))
        self._staged.append(pend)
        return pend

    def deliver_round(self) -> None:
        """Round barrier: make everything sent this round readable and advance the clock."""
        for msg in self._bytes_out:
            self.parties[msg.receiver].inbox[msg.sender].append(msg.payload)
            self.transcript.append(msg)
        for pend in self._staged:
            pend.delivered = True
            self.transcript.append(pend.batch)
        self._bytes_out = []
        self._staged = []
        self.clock.tick()

    # -- randomness --------------------------------------------------------------

    def draw(self, party_ids, m: int) -> np.ndarray:
        """Row r holds ``m`` fresh field elements from party ``party_ids[r]``'s own generator."""
        ids = np.asarray(party_ids, dtype=np.int64).ravel()
        out = np.empty((ids.size, m), dtype=np.int64)
        if m == 0:
            return out
        order = np.argsort(ids, kind="stable")
        pids, starts, counts = np.unique(ids[order], return_index=True, return_counts=True)
        for pid, lo, cnt in zip(pids.tolist(), starts.tolist(), counts.tolist()):
            rows = order[lo:lo + cnt]
            vals = self.parties[pid].rng.integers(0, self.field.p, size=(cnt, m), dtype=np.int64)
            out[rows] = vals
            if self.record_coins:
                self.coins[int(pid)].append(vals.ravel().copy())
        return out

    # -- views and transcript ---------------------------------------------------

    def received(self, party: int, *, kinds: Sequence[str] | None = None) -> list[tuple[int, str, str, np.ndarray, np.ndarray]]:
        """Everything ``party`` received: (round, tag, kind, senders, values) per batch.

        ``values`` has one row per received message (missing senders dropped).
        """
        out = []
        for rec in self.transcript:
            if isinstance(rec, ByteMessage):
                if rec.receiver == party and (kinds is None or "bytes" in kinds):
                    out.append((rec.round, rec.tag, "bytes", np.array([rec.sender]),
                                np.frombuffer(rec.payload, dtype=np.uint8)[None, :]))
                continue
            if kinds is not None and rec.kind not in kinds:
                continue
            g_idx, j_idx = np.nonzero(rec.receivers == party)
            if g_idx.size == 0:
                continue
            # (m, a, c): all senders of row g towards receiver slot j
            vals = rec.payload[g_idx, :, j_idx, :]
            snd = rec.senders[g_idx, :]
            keep = ~rec.missing[g_idx, :]
            out.append((rec.round, rec.tag, rec.kind, snd[keep], vals[keep]))
        return out

    def transcript_lines(self) -> Iterator[str]:
        """JSON lines (round, tag, from, to, digest), one per delivered message."""
        for rec in self.transcript:
            if isinstance(rec, ByteMessage):
                yield json.dumps({"round": rec.round, "tag": rec.tag, "from": rec.sender,
                                  "to": rec.receiver, "digest": _digest(rec.payload)}, sort_keys=True)
                continue
            G, a = rec.senders.shape
            b = rec.receivers.shape[1]
            for g in range(G):
                for i in range(a):
                    if rec.missing[g, i]:
                        continue
                    frm = int(rec.senders[g, i])
                    for j in range(b):
                        vals = ",".join(str(int(v)) for v in rec.payload[g, i, j])
                        yield json.dumps({"round": rec.round, "tag": rec.tag, "from": frm,
                                          "to": int(rec.receivers[g, j]),
                                          "digest": _digest(vals.encode())}, sort_keys=True)

    def dump_transcript(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.transcript_lines():
                fh.write(line + "\n")

    def transcript_digest(self) -> str:
        h = hashlib.sha256()
        for line in self.transcript_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]
