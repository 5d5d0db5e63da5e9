import threading

import numpy as np
import pytest

from sweperf.decomposition import (Fabric, HaloBuffer, HaloTimeoutError, SubdomainLayout, apply_reflective_bc,
                                   block_partition, decompose, exchange_all, exchange_halos, gather, local_extents,
                                   pack_halo, rank_grid, rank_to_coords, run_ranks, scatter, unpack_halo)
from sweperf.grid import FieldSet, GridSpec
from sweperf.riemann import accumulate_flux_sweep


@pytest.mark.parametrize("rank, dims, expected", [(0, (3, 3), (0, 0)), (5, (4, 2), (1, 1)), (7, (4, 2), (3, 1))])
def test_rank_to_coords(rank, dims, expected):
    assert rank_to_coords(rank, *dims) == expected


def test_rank_to_coords_out_of_range():
    with pytest.raises(ValueError):
        rank_to_coords(8, 4, 2)


def test_local_extents_even():
    spec = GridSpec(10, 4)
    assert [local_extents(spec, (2, 1), (c, 0))[0] for c in range(2)] == [5, 5]


def test_local_extents_remainder():
    spec = GridSpec(10, 4)
    got = [local_extents(spec, (3, 1), (c, 0)) for c in range(3)]
    assert [g[0] for g in got] == [4, 3, 3]
    assert [g[2] for g in got] == [0, 4, 7]


def test_local_extents_large():
    spec = GridSpec(36000, 36000)
    assert [local_extents(spec, (2, 2), (c, 0))[0] for c in range(2)] == [18000, 18000]


def test_partition_tiles_exactly():
    for n in range(1, 40):
        for parts in range(1, n + 1):
            blocks = [block_partition(n, parts, c) for c in range(parts)]
            assert sum(b[0] for b in blocks) == n
            assert all(blocks[c][1] + blocks[c][0] == blocks[c + 1][1] for c in range(parts - 1))
            assert max(b[0] for b in blocks) - min(b[0] for b in blocks) <= 1


def test_too_many_ranks():
    with pytest.raises(ValueError):
        block_partition(3, 4, 0)


@pytest.mark.parametrize("workers, dims", [(1, (1, 1)), (2, (2, 1)), (4, (2, 2)), (6, (3, 2)), (8, (4, 2)), (7, (7, 1))])
def test_rank_grid(workers, dims):
    assert rank_grid(workers) == dims


def test_neighbors_are_mutual():
    spec = GridSpec(12, 9)
    layouts = decompose(spec, 4, 3)
    opposite = {"left": "right", "right": "left", "down": "up", "up": "down"}
    for lay in layouts:
        for side, nb in lay.neighbors.items():
            if nb is not None:
                assert layouts[nb].neighbors[opposite[side]] == lay.rank


def test_scatter_gather_round_trip(rng):
    spec = GridSpec(11, 7)
    f = FieldSet.zeros(spec)
    for name in ("h", "hu", "hv", "z"):
        getattr(f, name)[:] = rng.normal(size=spec.n_arr)
    layouts = decompose(spec, 3, 2)
    back = gather([scatter(f, lay) for lay in layouts], layouts, spec)
    for name in ("h", "hu", "hv", "z"):
        assert np.array_equal(back.interior(name), f.interior(name))


def test_every_cell_owned_once():
    spec = GridSpec(13, 10)
    paint = np.zeros((10, 13), dtype=int)
    for lay in decompose(spec, 3, 4):
        paint[lay.gj:lay.gj + lay.n_y, lay.gi:lay.gi + lay.n_x] += 1
    assert np.all(paint == 1)


def test_pack_unpack_loopback():
    f = FieldSet.zeros(GridSpec(5, 4))
    f.grid("h")[...] = np.arange(42.0).reshape(6, 7)
    for side, halo, inner in (("left", (slice(1, -1), 0), (slice(1, -1), 1)),
                              ("up", (5, slice(1, -1)), (4, slice(1, -1)))):
        unpack_halo(f, side, pack_halo(f, side))
        assert np.array_equal(f.grid("h")[halo], f.grid("h")[inner])


def test_buffer_layout_order():
    f = FieldSet.zeros(GridSpec(3, 2))
    f.grid("h")[1:3, 3] = [1, 2]
    f.grid("hu")[1:3, 3] = [3, 4]
    f.grid("hv")[1:3, 3] = [5, 6]
    buf = pack_halo(f, "right")
    assert list(buf.payload) == [1, 2, 3, 4, 5, 6]
    assert buf.edge_length == 2


def test_unpack_wrong_length():
    f = FieldSet.zeros(GridSpec(3, 2))
    with pytest.raises(ValueError):
        unpack_halo(f, "left", HaloBuffer("left", np.zeros(9)))


def test_ramp_exchange_two_ranks():
    spec = GridSpec(8, 3)
    f = FieldSet.zeros(spec)
    x, _ = spec.cell_centers()
    f.grid("h")[...] = x
    layouts = decompose(spec, 2, 1)
    tiles = [scatter(f, lay) for lay in layouts]
    for t in tiles:
        t.grid("h")[:, 0] = t.grid("h")[:, -1] = -1.0
    exchange_all(tiles, layouts)
    assert np.array_equal(tiles[0].grid("h")[1:-1, -1], tiles[1].grid("h")[1:-1, 1])
    assert np.array_equal(tiles[1].grid("h")[1:-1, 0], tiles[0].grid("h")[1:-1, -2])


def test_constant_tiles_2x2():
    spec = GridSpec(8, 8)
    layouts = decompose(spec, 2, 2)
    tiles = []
    for lay in layouts:
        t = FieldSet.zeros(lay.local_spec(spec))
        t.h[:] = 10.0 + lay.rank
        tiles.append(t)
    exchange_all(tiles, layouts)
    for lay, t in zip(layouts, tiles):
        g = t.grid("h")
        strips = {"left": g[1:-1, 0], "right": g[1:-1, -1], "down": g[0, 1:-1], "up": g[-1, 1:-1]}
        for side, nb in lay.neighbors.items():
            if nb is not None:
                assert np.all(strips[side] == 10.0 + nb)
            else:
                assert np.all(strips[side] == 10.0 + lay.rank)


def test_exchange_idempotent(rng):
    spec = GridSpec(9, 6)
    f = FieldSet.zeros(spec)
    f.h[:] = rng.uniform(1, 2, spec.n_arr)
    layouts = decompose(spec, 3, 2)
    tiles = [scatter(f, lay) for lay in layouts]
    exchange_all(tiles, layouts)
    snap = [t.copy() for t in tiles]
    exchange_all(tiles, layouts)
    assert all(np.array_equal(a.h, b.h) for a, b in zip(snap, tiles))


def test_single_rank_exchange_is_noop():
    spec = GridSpec(4, 4)
    f = FieldSet.zeros(spec)
    f.h[:] = 3.0
    lay = SubdomainLayout.build(spec, 1, 1, 0)
    before = f.copy()
    exchange_halos(f, lay, Fabric(1).comm(0))
    assert np.array_equal(f.h, before.h)


def test_threaded_exchange_matches_global_halos(rng):
    spec = GridSpec(10, 8)
    f = FieldSet.zeros(spec)
    f.h[:] = rng.uniform(1, 2, spec.n_arr)
    f.hu[:] = rng.normal(size=spec.n_arr)
    apply_reflective_bc(f)
    layouts = decompose(spec, 2, 2)
    tiles = [scatter(f, lay) for lay in layouts]
    for t in tiles:
        t.grid("h")[0, :] = t.grid("h")[-1, :] = 0.0

    def body(comm):
        exchange_halos(tiles[comm.rank], layouts[comm.rank], comm)
        apply_reflective_bc(tiles[comm.rank], layouts[comm.rank])

    run_ranks(4, body)
    for lay, t in zip(layouts, tiles):
        assert np.array_equal(t.grid("h")[1:-1, :], scatter(f, lay).grid("h")[1:-1, :])


def test_reflective_wall_negates_normal_discharge():
    f = FieldSet.zeros(GridSpec(3, 3))
    f.h[:] = 1.0
    f.grid("hu")[2, 3] = 2.0
    f.grid("hv")[2, 3] = 0.7
    apply_reflective_bc(f)
    assert f.grid("hu")[2, 4] == -2.0
    assert f.grid("hv")[2, 4] == 0.7
    assert f.grid("h")[2, 4] == 1.0


def test_still_water_wall_fluxes_zero():
    f = FieldSet.zeros(GridSpec(5, 5))
    f.h[:] = 1.0
    apply_reflective_bc(f)
    for orient in ("x", "y"):
        acc = accumulate_flux_sweep(f, orient)
        assert np.all(acc.dh == 0) and np.all(acc.dhu == 0) and np.all(acc.dhv == 0)


def test_interior_sides_untouched_by_walls():
    spec = GridSpec(6, 4)
    lay = SubdomainLayout.build(spec, 2, 1, 0)
    assert lay.wall_sides() == ("left", "down", "up")
    t = FieldSet.zeros(lay.local_spec(spec))
    t.grid("hu")[1:-1, -1] = 9.0
    apply_reflective_bc(t, lay)
    assert np.all(t.grid("hu")[1:-1, -1] == 9.0)


def test_missing_message_times_out():
    fabric = Fabric(2, timeout=0.1)
    with pytest.raises(HaloTimeoutError):
        fabric.comm(1).recv(0, "nothing")


def test_allreduce_deterministic():
    def body(comm):
        return comm.allreduce_sum(0.1 * (comm.rank + 1)), comm.allreduce_min(5.0 - comm.rank)

    results = run_ranks(4, body)
    total = 0.0
    for r in range(4):
        total += 0.1 * (r + 1)
    assert all(res == (total, 2.0) for res in results)


def test_rank_failure_propagates():
    def body(comm):
        if comm.rank == 1:
            raise RuntimeError("boom")
        comm.recv(1, "never")

    with pytest.raises(RuntimeError, match="boom"):
        run_ranks(3, body)
    assert threading.active_count() < 20
