"""Compiled core of the Gillespie event loop.

Everything here operates on flat arrays so numba can compile it once and the
simulator can run millions of events per second. The uniform stream is
xoshiro256++, kept in lockstep with the pure-Python mirror in ``_rng`` so a
seed reproduces the same run through either path.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, uint64

U64 = np.uint64
_DOUBLE_SCALE = 1.0 / 9007199254740992.0  # 2^-53

# kernel exit status
OK = 0
BLOCK_OVERFLOW = 1
EVENT_OVERFLOW = 2

# event kinds in recorded traces
KIND_CREATE = 0
KIND_DIFFUSE = 1


@njit(uint64(uint64[::1]), cache=True, nogil=True, inline="always")
def _next_u64(s):
    r = s[0] + s[3]
    result = ((r << U64(23)) | (r >> U64(41))) + s[0]
    t = s[1] << U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << U64(45)) | (s[3] >> U64(19))
    return result


@njit(cache=True, nogil=True, inline="always")
def _next_double(s):
    return (_next_u64(s) >> U64(11)) * _DOUBLE_SCALE


@njit(cache=True, nogil=True)
def random_stream(state, n):
    """n uniform doubles; test hook for lockstep with the Python generator."""
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _next_double(state)
    return out


@njit(cache=True, nogil=True)
def gillespie_kernel(
    dedge_src,      # int64[2E] source node of each directed edge
    dedge_dst,      # int64[2E] destination node
    out_start,      # int64[n+1] CSR offsets of outgoing directed edges
    out_eid,        # int64[2E] directed edge ids grouped by source
    eta_cum,        # float64[n] cumulative creator probabilities (last = 1)
    eta_total,      # float64 total creation rate (= 1/tau)
    tau_nd,         # float64 per-edge diffusion delay
    t_sim,          # float64 simulation horizon
    rng_state,      # uint64[4] xoshiro state, mutated in place
    parent,         # int64[cap_blocks] out
    height,         # int64[cap_blocks] out
    miner,          # int64[cap_blocks] out
    t_disc,         # float64[cap_blocks] out
    head_count,     # int32[cap_blocks] scratch, zeroed by caller
    heads,          # int64[n] in/out, initialised to genesis (0)
    active_pos,     # int64[2E] scratch, initialised to -1
    active_list,    # int64[2E] scratch
    record,         # bool: fill the event arrays below
    ev_time,        # float64[cap_events]
    ev_kind,        # uint8[cap_events]
    ev_actor,       # uint32[cap_events]
    ev_block,       # uint64[cap_events]
):
    """Run one seeded realisation until the clock reaches t_sim.

    Returns (n_blocks, consensus_time, n_events, status). The caller passes
    heads initialised to genesis (0), head_count zeroed and active_pos filled
    with -1; the kernel writes the genesis record itself.
    """
    n_nodes = heads.shape[0]
    cap_blocks = parent.shape[0]
    cap_events = ev_time.shape[0]

    # genesis
    parent[0] = -1
    height[0] = 0
    miner[0] = -1
    t_disc[0] = 0.0
    head_count[0] = n_nodes
    n_blocks = 1

    n_active = 0
    consensus = True
    t = 0.0
    t_c = 0.0
    n_events = 0
    status = OK

    while True:
        xi = eta_total + n_active / tau_nd
        u1 = _next_double(rng_state)
        dt = -math.log1p(-u1) / xi
        if t + dt >= t_sim:
            if consensus:
                t_c += t_sim - t
            t = t_sim
            break
        if consensus:
            t_c += dt
        t = t + dt

        u2 = _next_double(rng_state)
        u3 = _next_double(rng_state)
        if u2 * xi < eta_total:
            # block creation by node drawn with probability eta_i / sum(eta)
            i = np.searchsorted(eta_cum, u3, side="right")
            if i >= n_nodes:
                i = n_nodes - 1
            if n_blocks >= cap_blocks:
                status = BLOCK_OVERFLOW
                break
            b = n_blocks
            p = heads[i]
            parent[b] = p
            height[b] = height[p] + 1
            miner[b] = i
            t_disc[b] = t
            n_blocks += 1
            actor = i
            new_head = b
            kind = KIND_CREATE
        else:
            # diffusion over a uniformly chosen active directed edge i -> j
            idx = int(u3 * n_active)
            if idx >= n_active:
                idx = n_active - 1
            e = active_list[idx]
            actor = dedge_dst[e]
            new_head = heads[dedge_src[e]]
            kind = KIND_DIFFUSE

        # adopt the new head (strictly taller by construction in both branches)
        old = heads[actor]
        head_count[old] -= 1
        if consensus:
            consensus = False
        head_count[new_head] += 1
        if head_count[new_head] == n_nodes:
            consensus = True
        heads[actor] = new_head

        # re-derive activation of every directed edge touching the actor
        h_here = height[new_head]
        for k in range(out_start[actor], out_start[actor + 1]):
            e_out = out_eid[k]
            other = dedge_dst[e_out]
            h_other = height[heads[other]]
            e_in = e_out ^ 1
            if h_here > h_other:
                if active_pos[e_out] < 0:
                    active_pos[e_out] = n_active
                    active_list[n_active] = e_out
                    n_active += 1
            else:
                pos = active_pos[e_out]
                if pos >= 0:
                    last = active_list[n_active - 1]
                    active_list[pos] = last
                    active_pos[last] = pos
                    n_active -= 1
                    active_pos[e_out] = -1
            if h_other > h_here:
                if active_pos[e_in] < 0:
                    active_pos[e_in] = n_active
                    active_list[n_active] = e_in
                    n_active += 1
            else:
                pos = active_pos[e_in]
                if pos >= 0:
                    last = active_list[n_active - 1]
                    active_list[pos] = last
                    active_pos[last] = pos
                    n_active -= 1
                    active_pos[e_in] = -1

        if record:
            if n_events >= cap_events:
                status = EVENT_OVERFLOW
                break
            ev_time[n_events] = t
            ev_kind[n_events] = kind
            ev_actor[n_events] = actor
            ev_block[n_events] = new_head
        n_events += 1

    return n_blocks, t_c, n_events, status


@njit(cache=True, nogil=True)
def mc_hitting_times(indptr, indices, source, target, n_walks, rng_state):
    """Monte-Carlo hitting times of the simple random walk (test oracle).

    Returns (mean, variance-of-mean numerator): sum of steps and sum of
    squared steps over n_walks walks from source until target is hit.
    """
    total = 0.0
    total_sq = 0.0
    for _ in range(n_walks):
        pos = source
        steps = 0
        while pos != target:
            deg = indptr[pos + 1] - indptr[pos]
            u = _next_double(rng_state)
            k = int(u * deg)
            if k >= deg:
                k = deg - 1
            pos = indices[indptr[pos] + k]
            steps += 1
        total += steps
        total_sq += steps * steps
    return total, total_sq
