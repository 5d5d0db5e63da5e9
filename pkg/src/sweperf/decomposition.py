"""Cartesian rank grid, block partition, reflective walls and packed halo exchange.

Ranks are threads of one process.  They talk only through a :class:`Fabric`
of ordered point-to-point channels, following the usual non-blocking pattern:
pack, post every send, wait on every receive, unpack.  Sends never block, so
the exchange cannot deadlock whatever the interleaving.
"""

from __future__ import annotations

import queue
import threading
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .grid import FieldSet, GridSpec

SIDES = ("left", "right", "down", "up")
OPPOSITE = {"left": "right", "right": "left", "down": "up", "up": "down"}
HALO_FIELDS = ("h", "hu", "hv")


class HaloTimeoutError(TimeoutError):
    def __init__(self, src, dst, tag):
        super().__init__(f"rank {dst} timed out waiting for message {tag!r} from rank {src}")
        self.src, self.dst, self.tag = src, dst, tag


class FabricAborted(RuntimeError):
    pass


def rank_to_coords(rank: int, px: int, py: int) -> tuple[int, int]:
    if not 0 <= rank < px * py:
        raise ValueError(f"rank {rank} outside a {px}x{py} process grid")
    return rank % px, rank // px


def coords_to_rank(pi: int, pj: int, px: int, py: int) -> int:
    return pj * px + pi


def block_partition(n: int, parts: int, coord: int) -> tuple[int, int]:
    """Cell count and offset of block ``coord`` when ``n`` cells are split into ``parts``.

    Sizes differ by at most one; the first ``n % parts`` blocks get the extra cell.
    """
    if parts > n:
        raise ValueError(f"cannot split {n} cells over {parts} ranks")
    base, extra = divmod(n, parts)
    count = base + (1 if coord < extra else 0)
    offset = coord * base + min(coord, extra)
    return count, offset


def local_extents(spec: GridSpec, dims: tuple[int, int], coords: tuple[int, int]) -> tuple[int, int, int, int]:
    """``(n_x, n_y, gi, gj)`` of the tile at ``coords``; ``gi, gj`` are global interior offsets."""
    nx, gi = block_partition(spec.n_x, dims[0], coords[0])
    ny, gj = block_partition(spec.n_y, dims[1], coords[1])
    return nx, ny, gi, gj


def rank_grid(workers: int) -> tuple[int, int]:
    """Most square ``(P_x, P_y)`` factorisation of ``workers`` with ``P_x >= P_y``."""
    py = int(np.sqrt(workers))
    while workers % py:
        py -= 1
    return workers // py, py


@dataclass(frozen=True)
class SubdomainLayout:
    px: int
    py: int
    rank: int
    coords: tuple[int, int]
    n_x: int
    n_y: int
    gi: int
    gj: int
    neighbors: dict = field(hash=False, compare=True)

    @classmethod
    def build(cls, spec: GridSpec, px: int, py: int, rank: int) -> "SubdomainLayout":
        pi, pj = rank_to_coords(rank, px, py)
        nx, ny, gi, gj = local_extents(spec, (px, py), (pi, pj))
        neighbors = {
            "left": coords_to_rank(pi - 1, pj, px, py) if pi > 0 else None,
            "right": coords_to_rank(pi + 1, pj, px, py) if pi < px - 1 else None,
            "down": coords_to_rank(pi, pj - 1, px, py) if pj > 0 else None,
            "up": coords_to_rank(pi, pj + 1, px, py) if pj < py - 1 else None,
        }
        return cls(px, py, rank, (pi, pj), nx, ny, gi, gj, neighbors)

    @property
    def size(self) -> int:
        return self.px * self.py

    def local_spec(self, spec: GridSpec) -> GridSpec:
        x0, y0 = spec.origin
        return GridSpec(self.n_x, self.n_y, spec.dx, (x0 + self.gi * spec.dx, y0 + self.gj * spec.dx))

    def wall_sides(self) -> tuple[str, ...]:
        return tuple(side for side in SIDES if self.neighbors[side] is None)


def decompose(spec: GridSpec, px: int, py: int) -> list[SubdomainLayout]:
    return [SubdomainLayout.build(spec, px, py, r) for r in range(px * py)]


def scatter(global_fields: FieldSet, layout: SubdomainLayout) -> FieldSet:
    """Copy the padded window of one tile (halos included) out of a global field set."""
    spec = layout.local_spec(global_fields.spec)
    local = FieldSet.zeros(spec)
    rows = slice(layout.gj, layout.gj + layout.n_y + 2)
    cols = slice(layout.gi, layout.gi + layout.n_x + 2)
    for name in ("h", "hu", "hv", "z"):
        local.grid(name)[...] = global_fields.grid(name)[rows, cols]
    return local


def gather(tiles: list[FieldSet], layouts: list[SubdomainLayout], spec: GridSpec) -> FieldSet:
    """Assemble tile interiors into a global field set (halos zero)."""
    out = FieldSet.zeros(spec)
    for tile, lay in zip(tiles, layouts):
        rows = slice(lay.gj + 1, lay.gj + lay.n_y + 1)
        cols = slice(lay.gi + 1, lay.gi + lay.n_x + 1)
        for name in ("h", "hu", "hv", "z"):
            out.grid(name)[rows, cols] = tile.interior(name)
    return out


def _strip(spec: GridSpec, side: str, halo: bool):
    """``(rows, cols)`` index of the one-cell strip along ``side``; corners excluded."""
    nx, ny = spec.n_x, spec.n_y
    inner = slice(1, -1)
    if side == "left":
        return inner, 0 if halo else 1
    if side == "right":
        return inner, nx + 1 if halo else nx
    if side == "down":
        return 0 if halo else 1, inner
    if side == "up":
        return ny + 1 if halo else ny, inner
    raise ValueError(f"unknown side {side!r}")


@dataclass
class HaloBuffer:
    """Packed boundary strip: ``[h..., hu..., hv...]``, each slab one edge long."""

    side: str
    payload: np.ndarray

    @property
    def edge_length(self) -> int:
        return len(self.payload) // 3


def edge_length(spec: GridSpec, side: str) -> int:
    return spec.n_y if side in ("left", "right") else spec.n_x


def pack_halo(fields: FieldSet, side: str) -> HaloBuffer:
    idx = _strip(fields.spec, side, halo=False)
    return HaloBuffer(side, np.concatenate([fields.grid(name)[idx] for name in HALO_FIELDS]))


def unpack_halo(fields: FieldSet, side: str, buffer: HaloBuffer) -> None:
    """Write a neighbour's packed strip into this tile's halo on ``side``."""
    n = edge_length(fields.spec, side)
    if len(buffer.payload) != 3 * n:
        raise ValueError(f"halo buffer of {len(buffer.payload)} values does not fit a {side} edge of {n} cells")
    idx = _strip(fields.spec, side, halo=True)
    for slab, name in enumerate(HALO_FIELDS):
        fields.grid(name)[idx] = buffer.payload[slab * n:(slab + 1) * n]


def apply_reflective_bc(fields: FieldSet, layout: SubdomainLayout | None = None) -> FieldSet:
    """Mirror h and z into wall halos, negate the wall-normal discharge, copy the tangential one."""
    sides = SIDES if layout is None else layout.wall_sides()
    spec = fields.spec
    for side in sides:
        halo = _strip(spec, side, halo=True)
        inner = _strip(spec, side, halo=False)
        normal = "hu" if side in ("left", "right") else "hv"
        for name in ("h", "hu", "hv", "z"):
            arr = fields.grid(name)
            if name == normal:
                arr[halo] = -arr[inner]
            else:
                arr[halo] = arr[inner]
    return fields


@dataclass
class FabricStats:
    messages: int = 0
    bytes: int = 0
    by_tag: Counter = field(default_factory=Counter)

    def as_dict(self) -> dict:
        return {"messages": self.messages, "bytes": self.bytes, "by_tag": dict(self.by_tag)}


class Fabric:
    """Ordered in-process channels between ``size`` ranks."""

    def __init__(self, size: int, timeout: float = 60.0):
        self.size = size
        self.timeout = timeout
        self._channels: dict = {}
        self._lock = threading.Lock()
        self._abort = threading.Event()
        self._barrier = threading.Barrier(size)
        self.stats = FabricStats()

    def _channel(self, src, dst, tag) -> queue.SimpleQueue:
        key = (src, dst, tag)
        with self._lock:
            chan = self._channels.get(key)
            if chan is None:
                chan = self._channels[key] = queue.SimpleQueue()
            return chan

    def send(self, src: int, dst: int, tag, payload) -> None:
        nbytes = payload.nbytes if isinstance(payload, np.ndarray) else 8
        with self._lock:
            self.stats.messages += 1
            self.stats.bytes += nbytes
            self.stats.by_tag[tag if isinstance(tag, str) else tag[0]] += 1
        self._channel(src, dst, tag).put(payload)

    def recv(self, src: int, dst: int, tag, timeout: float | None = None):
        chan = self._channel(src, dst, tag)
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while True:
            if self._abort.is_set():
                raise FabricAborted("fabric aborted by another rank")
            try:
                return chan.get(timeout=0.05)
            except queue.Empty:
                if time.monotonic() > deadline:
                    raise HaloTimeoutError(src, dst, tag) from None

    def barrier(self) -> None:
        if self.size > 1:
            self._barrier.wait()

    def abort(self) -> None:
        self._abort.set()
        self._barrier.abort()

    def comm(self, rank: int) -> "Communicator":
        return Communicator(self, rank)


@dataclass
class Communicator:
    fabric: Fabric
    rank: int

    @property
    def size(self) -> int:
        return self.fabric.size

    def send(self, dst, tag, payload):
        self.fabric.send(self.rank, dst, tag, payload)

    def recv(self, src, tag, timeout=None):
        return self.fabric.recv(src, self.rank, tag, timeout)

    def barrier(self):
        self.fabric.barrier()

    def gather(self, value, tag="gather"):
        """Values from every rank on rank 0 in rank order; ``None`` elsewhere."""
        if self.rank != 0:
            self.send(0, tag, value)
            return None
        return [value] + [self.recv(src, tag) for src in range(1, self.size)]

    def bcast(self, value, tag="bcast"):
        if self.rank == 0:
            for dst in range(1, self.size):
                self.send(dst, tag, value)
            return value
        return self.recv(0, tag)

    def allreduce_min(self, value: float) -> float:
        if self.size == 1:
            return value
        values = self.gather(value, "min")
        return self.bcast(min(values) if values is not None else None, "min-result")

    def allreduce_sum(self, value: float) -> float:
        """Sum in rank order, so the result does not depend on arrival order."""
        if self.size == 1:
            return value
        values = self.gather(value, "sum")
        total = None
        if values is not None:
            total = 0.0
            for v in values:
                total += v
        return self.bcast(total, "sum-result")


def post_halo_sends(fields: FieldSet, layout: SubdomainLayout, comm: Communicator) -> None:
    for side in SIDES:
        nb = layout.neighbors[side]
        if nb is not None:
            comm.send(nb, ("halo", side), pack_halo(fields, side).payload)


def wait_halo_receives(fields: FieldSet, layout: SubdomainLayout, comm: Communicator,
                       timeout: float | None = None) -> None:
    for side in SIDES:
        nb = layout.neighbors[side]
        if nb is not None:
            # the neighbour packed its strip facing us
            payload = comm.recv(nb, ("halo", OPPOSITE[side]), timeout)
            unpack_halo(fields, side, HaloBuffer(side, payload))


def exchange_halos(fields: FieldSet, layout: SubdomainLayout, comm: Communicator,
                   timeout: float | None = None) -> None:
    """One rank's share of a halo exchange; every rank of the fabric must call it."""
    post_halo_sends(fields, layout, comm)
    wait_halo_receives(fields, layout, comm, timeout)


def exchange_all(tiles: list[FieldSet], layouts: list[SubdomainLayout], fabric: Fabric | None = None) -> None:
    """Exchange halos among all tiles from a single thread (post every send, then every receive)."""
    if fabric is None:
        fabric = Fabric(len(tiles))
    comms = [fabric.comm(lay.rank) for lay in layouts]
    for tile, lay, comm in zip(tiles, layouts, comms):
        post_halo_sends(tile, lay, comm)
    for tile, lay, comm in zip(tiles, layouts, comms):
        wait_halo_receives(tile, lay, comm, timeout=1.0)


def run_ranks(size: int, target, *args, fabric: Fabric | None = None) -> list:
    """Run ``target(comm, *args)`` on ``size`` rank threads and return the results in rank order.

    The first exception raised by any rank aborts the fabric and is re-raised.
    """
    fabric = fabric or Fabric(size)
    if size == 1:
        return [target(fabric.comm(0), *args)]
    results = [None] * size
    errors: list = []

    def work(rank):
        try:
            results[rank] = target(fabric.comm(rank), *args)
        except BaseException as exc:
            errors.append((rank, exc))
            fabric.abort()

    threads = [threading.Thread(target=work, args=(r,), name=f"rank-{r}") for r in range(size)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        primary = [e for e in errors if not isinstance(e[1], (FabricAborted, threading.BrokenBarrierError))]
        rank, exc = (primary or errors)[0]
        raise exc
    return results
