"""Switching networks made of swap gates, and their plaintext semantics.

A network acts in place on ``n`` wire positions. Each layer is a set of
gates on disjoint positions followed by an optional route; a route ``r``
moves the value at position ``r[k]`` to position ``k``. A 2-input gate owns
one configuration bit; a 3-input gate on (a, b, c) owns three bits applied
as the transposition cycle (a, b), (b, c), (a, c).

Gates are numbered layer-major and left to right by their first position,
and configuration bits follow the same order.

Networks are also compiled to a flat list of physical swaps so the kernels
in :mod:`mpshuffle._kernels` can route many configurations at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernels

Layer = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Gate:
    id: int
    layer: int
    wires: tuple[int, ...]
    bit_offset: int

    @property
    def arity(self) -> int:
        return len(self.wires)

    @property
    def nbits(self) -> int:
        return 1 if self.arity == 2 else 3

    @property
    def inputs(self) -> tuple[int, ...]:
        return self.wires

    @property
    def outputs(self) -> tuple[int, ...]:
        return self.wires

    def swap_pairs(self) -> list[tuple[int, int, int]]:
        """(position, position, bit index) for each elementary swap, in order."""
        if self.arity == 2:
            a, b = self.wires
            return [(a, b, self.bit_offset)]
        a, b, c = self.wires
        o = self.bit_offset
        return [(a, b, o), (b, c, o + 1), (a, c, o + 2)]


class NetworkTopology:
    def __init__(self, n: int, layers: Sequence[Sequence[Sequence[int]]],
                 routes: Sequence[Sequence[int] | None], name: str = "network", params: dict | None = None):
        if len(layers) != len(routes):
            raise ValueError("one route slot per layer")
        self.n = n
        self.name = name
        self.params = dict(params or {})
        norm = []
        for gates in layers:
            gs = tuple(sorted(tuple(int(w) for w in g) for g in gates))
            used = [w for g in gs for w in g]
            if len(set(used)) != len(used):
                raise ValueError("gates of one layer must use disjoint wires")
            if any(not 0 <= w < n for w in used):
                raise ValueError("wire position out of range")
            if any(len(g) not in (2, 3) for g in gs):
                raise ValueError("gates have 2 or 3 inputs")
            norm.append(gs)
        self.layers: tuple[Layer, ...] = tuple(norm)
        rts = []
        for r in routes:
            if r is None:
                rts.append(None)
                continue
            r = tuple(int(x) for x in r)
            if sorted(r) != list(range(n)):
                raise ValueError("route must be a permutation of positions")
            rts.append(None if r == tuple(range(n)) else r)
        self.routes = tuple(rts)
        gates, off = [], 0
        for li, layer in enumerate(self.layers):
            for g in layer:
                gates.append(Gate(len(gates), li, g, off))
                off += 1 if len(g) == 2 else 3
        self.gates: tuple[Gate, ...] = tuple(gates)
        self.nbits = off

    def __repr__(self) -> str:
        return f"NetworkTopology({self.name}, n={self.n}, layers={self.depth}, gates={self.gate_count})"

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    def layer_gates(self, layer: int) -> list[Gate]:
        return [g for g in self.gates if g.layer == layer]

    def swap_steps(self, layer: int) -> int:
        """Sequential swap steps a layer needs (3 if it holds a 3-input gate)."""
        gates = self.layers[layer]
        if not gates:
            return 0
        return max(1 if len(g) == 2 else 3 for g in gates)

    @cached_property
    def compiled(self) -> tuple[np.ndarray, np.ndarray]:
        """(swaps, final): swaps[s] = (slot, slot, bit); output k reads slot final[k]."""
        M = np.arange(self.n, dtype=np.int64)
        swaps = []
        for li, layer in enumerate(self.layers):
            for g in self.layer_gates(li):
                for a, b, bit in g.swap_pairs():
                    swaps.append((M[a], M[b], bit))
            if self.routes[li] is not None:
                M = M[np.array(self.routes[li])]
        arr = np.array(swaps, dtype=np.int64).reshape(-1, 3)
        return arr, M.copy()

    def wiring(self) -> dict[tuple, tuple]:
        """Map (gate id, output wire) -> (next gate id, input wire) or ("out", terminal)."""
        prod: list[tuple] = [("in", k) for k in range(self.n)]
        out: dict[tuple, tuple] = {}
        for li, layer in enumerate(self.layers):
            for g in self.layer_gates(li):
                for w in g.wires:
                    if prod[w][0] == "gate":
                        out[(prod[w][1], prod[w][2])] = (g.id, w)
                    prod[w] = ("gate", g.id, w)
            if self.routes[li] is not None:
                prod = [prod[r] for r in self.routes[li]]
        for k, p in enumerate(prod):
            if p[0] == "gate":
                out[(p[1], p[2])] = ("out", k)
        return out

    def to_dot(self) -> str:
        lines = [f'digraph "{self.name}" {{', "  rankdir=LR;"]
        for k in range(self.n):
            lines.append(f'  in{k} [shape=plaintext,label="in {k + 1}"];')
            lines.append(f'  out{k} [shape=plaintext,label="out {k + 1}"];')
        for g in self.gates:
            shape = "box" if g.arity == 2 else "box3d"
            lines.append(f'  g{g.id} [shape={shape},label="G{g.id + 1}\\nL{g.layer + 1}"];')
        prod = [f"in{k}" for k in range(self.n)]
        for li, layer in enumerate(self.layers):
            for g in self.layer_gates(li):
                for w in g.wires:
                    lines.append(f"  {prod[w]} -> g{g.id};")
                    prod[w] = f"g{g.id}"
            if self.routes[li] is not None:
                prod = [prod[r] for r in self.routes[li]]
        for k in range(self.n):
            lines.append(f"  {prod[k]} -> out{k};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# -- configurations and permutations ---------------------------------------------

@dataclass(frozen=True)
class Configuration:
    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("configuration bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    @classmethod
    def from_int(cls, code: int, nbits: int) -> "Configuration":
        return cls(tuple((code >> i) & 1 for i in range(nbits)))

    @classmethod
    def zeros(cls, net: NetworkTopology) -> "Configuration":
        return cls((0,) * net.nbits)

    def as_int(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))

    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def matrix(self, net: NetworkTopology) -> list[list[int]]:
        """Bits as rows = gate slot within a layer, columns = layers (2-input gates only)."""
        _check(net, self)
        if any(g.arity != 2 for g in net.gates):
            raise ValueError("matrix layout needs 2-input gates only")
        width = max((len(layer) for layer in net.layers), default=0)
        rows = [[0] * net.depth for _ in range(width)]
        for li in range(net.depth):
            for slot, g in enumerate(net.layer_gates(li)):
                rows[slot][li] = self.bits[g.bit_offset]
        return rows


@dataclass(frozen=True)
class Permutation:
    """``mapping[k]`` is the (0-based) input index that ends up at output ``k``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError("not a bijection")

    def __len__(self) -> int:
        return len(self.mapping)

    def apply(self, seq: Sequence) -> list:
        if len(seq) != len(self.mapping):
            raise ValueError("length mismatch")
        return [seq[i] for i in self.mapping]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.mapping)
        for k, i in enumerate(self.mapping):
            inv[i] = k
        return Permutation(tuple(inv))

    def one_based(self) -> tuple[int, ...]:
        """pi(i) = output position of input i, both counted from 1."""
        return tuple(k + 1 for k in self.inverse().mapping)

    @property
    def code(self) -> int:
        n = len(self.mapping)
        return sum(v * n ** k for k, v in enumerate(self.mapping))

    @classmethod
    def from_code(cls, code: int, n: int) -> "Permutation":
        out = []
        for _ in range(n):
            code, r = divmod(code, n)
            out.append(r)
        return cls(tuple(out))


def _check(net: NetworkTopology, cfg: Configuration) -> None:
    if len(cfg) != net.nbits:
        raise ValueError(f"configuration has {len(cfg)} bits, network needs {net.nbits}")


def apply_configuration(net: NetworkTopology, cfg: Configuration, inputs: Sequence) -> list:
    """Route ``inputs`` through ``net`` layer by layer; returns the output sequence."""
    _check(net, cfg)
    if len(inputs) != net.n:
        raise ValueError(f"expected {net.n} inputs, got {len(inputs)}")
    cur = list(inputs)
    for li in range(net.depth):
        for g in net.layer_gates(li):
            for a, b, bit in g.swap_pairs():
                if cfg.bits[bit]:
                    cur[a], cur[b] = cur[b], cur[a]
        if net.routes[li] is not None:
            cur = [cur[r] for r in net.routes[li]]
    return cur


def configuration_permutation(net: NetworkTopology, cfg: Configuration) -> Permutation:
    return Permutation(tuple(apply_configuration(net, cfg, list(range(net.n)))))


def route_many(net: NetworkTopology, bits: np.ndarray) -> np.ndarray:
    """Kernel routing of a (count, nbits) bit matrix; row r is the mapping for configuration r."""
    swaps, final = net.compiled
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1, net.nbits)
    return _kernels.route_batch(swaps, final, bits)


def sample_configuration(net: NetworkTopology, rng) -> Configuration:
    return Configuration(tuple(int(b) for b in rng.integers(0, 2, size=net.nbits)))


# -- builders -----------------------------------------------------------------------

def _arbitrary(n: int) -> tuple[list[list[tuple]], list]:
    if n == 1:
        return [], []
    if n == 2:
        return [[(0, 1)]], [None]
    if n == 3:
        return [[(0, 1, 2)]], [None]
    top, bot = n // 2, n - n // 2
    layers: list[list[tuple]] = [[(2 * i, 2 * i + 1) for i in range(top)]]
    route_in = [2 * k for k in range(top)] + [2 * j + 1 if j < top else n - 1 for j in range(bot)]
    routes: list = [route_in]
    tl, tr = _arbitrary(top)
    bl, br = _arbitrary(bot)
    depth = max(len(tl), len(bl))
    tl += [[] for _ in range(depth - len(tl))]
    tr += [None] * (depth - len(tr))
    bl += [[] for _ in range(depth - len(bl))]
    br += [None] * (depth - len(br))
    for li in range(depth):
        layers.append(list(tl[li]) + [tuple(w + top for w in g) for g in bl[li]])
        t_route = list(range(top)) if tr[li] is None else list(tr[li])
        b_route = list(range(bot)) if br[li] is None else list(br[li])
        routes.append(t_route + [r + top for r in b_route])
    route_out = [0] * n
    for i in range(top):
        route_out[2 * i] = i
        route_out[2 * i + 1] = top + i
    if n % 2:
        route_out[n - 1] = n - 1
    last = np.array(routes[-1])
    routes[-1] = list(last[np.array(route_out)])
    layers.append([(2 * i, 2 * i + 1) for i in range(top)])
    routes.append(None)
    return layers, routes


def build_arbitrary_benes(n: int) -> NetworkTopology:
    """Rearrangeable network on any n >= 2 (a 3-input gate closes each odd sub-network)."""
    if n < 2:
        raise ValueError("need at least 2 inputs")
    layers, routes = _arbitrary(n)
    return NetworkTopology(n, layers, routes, name=f"benes{n}", params={"family": "benes", "n": n})


def build_benes(d: int) -> NetworkTopology:
    """Beneš network on 2**d wires: 2d - 1 layers of 2**(d-1) gates."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    net = build_arbitrary_benes(1 << d)
    net.params["d"] = d
    return net


def build_symmetric_npi(nc: int) -> NetworkTopology:
    """Two nc-input Beneš networks joined by two connector gates into N = 2nc + 2 wires.

    Layout: upper component on positions [0, nc), the two extra wires at nc and
    nc + 1, lower component on [nc + 2, 2nc + 2). Connector G1 takes the extra
    wires in the layer before the components' middle layer; its outputs then
    replace the upper component's position 0 and the lower component's last
    position, whose displaced values meet in connector G2 during the middle
    layer and leave on the two extra terminals.
    """
    if nc < 2 or nc % 2:
        raise ValueError("component size must be even and at least 2")
    N = 2 * nc + 2
    cl, cr = _arbitrary(nc)
    D = len(cl)
    low = nc + 2
    layers, routes = [], []
    for li in range(D):
        layers.append(list(cl[li]) + [tuple(w + low for w in g) for g in cl[li]])
        r = list(range(nc)) if cr[li] is None else list(cr[li])
        routes.append(r + [nc, nc + 1] + [x + low for x in r])
    m = D // 2
    if m == 0:
        layers.insert(0, [])
        routes.insert(0, None)
        m = 1
    layers[m - 1].append((nc, nc + 1))
    inject = list(range(N))
    inject[0], inject[nc] = nc, 0
    inject[N - 1], inject[nc + 1] = nc + 1, N - 1
    before = np.arange(N) if routes[m - 1] is None else np.array(routes[m - 1])
    routes[m - 1] = list(before[np.array(inject)])
    layers[m].append((nc, nc + 1))
    return NetworkTopology(N, layers, routes, name=f"npi{N}", params={"family": "symmetric_npi", "nc": nc})


def binary_riffle_layers(n: int, d2: int) -> list[list[tuple[int, int]]]:
    """Swap-pair levels mixing ``d2`` consecutive blocks of ``n // d2`` wires.

    Both halves are riffled recursively first; then element i + k is paired
    with mid + k across the whole span.
    """
    if d2 < 1 or d2 & (d2 - 1):
        raise ValueError("d2 must be a power of two")
    if n % d2:
        raise ValueError(f"{n} wires cannot be split into {d2} equal blocks")

    def rec(i: int, j: int, d: int) -> list[list[tuple[int, int]]]:
        if d <= 1:
            return []
        half = (j - i) // 2
        mid = i + half
        left, right = rec(i, mid, d // 2), rec(mid, j, d // 2)
        levels = [a + b for a, b in zip(left, right)]
        levels.append([(i + k, mid + k) for k in range(half)])
        return levels

    return rec(0, n, d2)


def build_reduced_npi(n1: int, n2: int) -> NetworkTopology:
    """n2 parallel n1-input Beneš blocks followed by a depth-log2(n2) riffle."""
    if n1 < 2:
        raise ValueError("block size must be at least 2")
    if n2 < 2 or n2 & (n2 - 1):
        raise ValueError("number of blocks must be a power of two >= 2")
    n = n1 * n2
    bl, br = _arbitrary(n1)
    layers, routes = [], []
    for li in range(len(bl)):
        gates, route = [], []
        r = list(range(n1)) if br[li] is None else list(br[li])
        for b in range(n2):
            off = b * n1
            gates += [tuple(w + off for w in g) for g in bl[li]]
            route += [x + off for x in r]
        layers.append(gates)
        routes.append(route)
    for level in binary_riffle_layers(n, n2):
        layers.append(level)
        routes.append(None)
    return NetworkTopology(n, layers, routes, name=f"reduced{n1}x{n2}",
                           params={"family": "reduced_npi", "n1": n1, "n2": n2})


def benes_depth(n: int) -> int:
    return build_arbitrary_benes(n).depth if n >= 2 else 0


def log2_exact(x: int) -> int:
    k = int(math.log2(x))
    if 1 << k != x:
        raise ValueError(f"{x} is not a power of two")
    return k
