"""Compiled hot loops (numba).

Every kernel owns its RNG: it seeds numba's internal generator from an
explicit argument at entry (or once per replica for batched estimator
kernels), so results depend only on the arguments, never on process or
scheduling state.  Engine kernels are strictly single-threaded; replica
parallelism lives at the process level.

Jump clocks are realized by the direct method: with n active rate-1
clocks the next jump arrives after Exp(1)/n and belongs to a uniformly
chosen active particle, which by memorylessness is the same law as
per-particle clocks at O(1) per event.  Radial occupancy bins
(doubly-linked lists over 1-unit shells) let a cascade scan only the
shells its rounds actually cover.
"""
from __future__ import annotations

import numpy as np
from numba import njit

PI = np.pi


# ---------------------------------------------------------------------------
# growable array helpers

@njit(cache=True)
def _grow_f8(arr):
    out = np.empty(arr.size * 2, dtype=np.float64)
    out[: arr.size] = arr
    return out


@njit(cache=True)
def _grow_i8(arr):
    out = np.empty(arr.size * 2, dtype=np.int64)
    out[: arr.size] = arr
    return out


# ---------------------------------------------------------------------------
# exact event-driven engine

@njit(cache=True)
def _sweep_rounds(pos, orig, mass, n_act, cap, abs_flat, n_abs, rounds_flat, n_rounds):
    """Cascade rounds over the compact active set: absorb everything with
    |p|^2 <= mass/pi, enlarge, repeat; swap-removes into [n_act:).
    Everything below the previous threshold is already absorbed, so each
    pass counts exactly the new annulus."""
    exploded = 0
    while True:
        cur2 = mass / PI
        xi = 0
        s = 0
        while s < n_act:
            dx = pos[s, 0]
            dy = pos[s, 1]
            if dx * dx + dy * dy <= cur2:
                if n_abs == abs_flat.size:
                    abs_flat = _grow_i8(abs_flat)
                abs_flat[n_abs] = orig[s]
                n_abs += 1
                n_act -= 1
                pos[s, 0] = pos[n_act, 0]
                pos[s, 1] = pos[n_act, 1]
                orig[s] = orig[n_act]
                xi += 1
            else:
                s += 1
        if n_rounds == rounds_flat.size:
            rounds_flat = _grow_i8(rounds_flat)
        rounds_flat[n_rounds] = xi
        n_rounds += 1
        mass += xi
        if xi == 0:
            break
        if mass > cap:
            exploded = 1
            break
    return mass, n_act, n_abs, n_rounds, exploded, abs_flat, rounds_flat


@njit(cache=True)
def exact_run(xs, ys, mass0, horizon, cap, seed):
    """Event loop of the exact engine over the post-initial-cascade field.

    xs, ys are the active particles' coordinates; index i is particle i in
    the caller's numbering.  Returns the arrival-event record arrays plus
    an exploded flag (mass exceeded the cap mid-cascade).

    Active particles live in a compact slot array (swap-remove on
    absorption) so the per-event memory touch is one position row; RNG
    draws come from block buffers.  A cascade is a repeated compact sweep:
    rare enough that rescans beat maintaining a spatial index.
    """
    np.random.seed(seed)
    n = xs.size
    mass = mass0

    pos = np.empty((n, 2), dtype=np.float64)
    orig = np.empty(n, dtype=np.int64)
    for i in range(n):
        pos[i, 0] = xs[i]
        pos[i, 1] = ys[i]
        orig[i] = i
    n_act = n

    ev_time = np.empty(1024, dtype=np.float64)
    ev_mass = np.empty(1024, dtype=np.int64)
    rounds_flat = np.empty(1024, dtype=np.int64)
    rounds_off = np.empty(1025, dtype=np.int64)
    abs_flat = np.empty(1024, dtype=np.int64)
    abs_off = np.empty(1025, dtype=np.int64)
    rounds_off[0] = 0
    abs_off[0] = 0
    n_ev = 0
    n_rounds = 0
    n_abs = 0

    exploded_code = 0
    exploded_time = -1.0
    jumps = 0
    t = 0.0

    B = 8192
    e_blk = np.random.exponential(1.0, B)
    u_blk = np.random.random(B)
    g_blk = np.random.standard_normal(2 * B)
    ei = 0
    ui = 0
    gi = 0
    # loop-invariant between arrivals: hoist the divisions out of the hot path
    inv_n = 1.0 / n_act if n_act > 0 else 0.0
    f_n = float(n_act)
    thr = mass / PI

    while n_act > 0:
        if ei == B:
            e_blk = np.random.exponential(1.0, B)
            ei = 0
        t += e_blk[ei] * inv_n
        ei += 1
        if t > horizon:
            break
        jumps += 1
        if ui == B:
            u_blk = np.random.random(B)
            ui = 0
        a = int(u_blk[ui] * f_n)
        ui += 1
        if a == n_act:
            a = n_act - 1
        if gi == 2 * B:
            g_blk = np.random.standard_normal(2 * B)
            gi = 0
        x = pos[a, 0] + g_blk[gi]
        y = pos[a, 1] + g_blk[gi + 1]
        gi += 2
        d2 = x * x + y * y
        if d2 > thr:
            pos[a, 0] = x
            pos[a, 1] = y
            continue

        # arrival: release the jumper, then cascade over the rest
        jumper = orig[a]
        n_act -= 1
        pos[a, 0] = pos[n_act, 0]
        pos[a, 1] = pos[n_act, 1]
        orig[a] = orig[n_act]
        if n_abs == abs_flat.size:
            abs_flat = _grow_i8(abs_flat)
        abs_flat[n_abs] = jumper
        n_abs += 1

        mass += 1
        mass, n_act, n_abs, n_rounds, exploded_code, abs_flat, rounds_flat = _sweep_rounds(
            pos, orig, mass, n_act, cap, abs_flat, n_abs, rounds_flat, n_rounds
        )

        inv_n = 1.0 / n_act if n_act > 0 else 0.0
        f_n = float(n_act)
        thr = mass / PI

        if n_ev == ev_time.size:
            ev_time = _grow_f8(ev_time)
            ev_mass = _grow_i8(ev_mass)
            new_off = np.empty(2 * ev_time.size + 1, dtype=np.int64)
            new_off[: rounds_off.size] = rounds_off
            rounds_off = new_off
            new_off2 = np.empty(2 * ev_time.size + 1, dtype=np.int64)
            new_off2[: abs_off.size] = abs_off
            abs_off = new_off2
        ev_time[n_ev] = t
        ev_mass[n_ev] = mass
        n_ev += 1
        rounds_off[n_ev] = n_rounds
        abs_off[n_ev] = n_abs

        if exploded_code != 0:
            exploded_time = t
            break

    return (
        ev_time[:n_ev].copy(),
        ev_mass[:n_ev].copy(),
        rounds_flat[:n_rounds].copy(),
        rounds_off[: n_ev + 1].copy(),
        abs_flat[:n_abs].copy(),
        abs_off[: n_ev + 1].copy(),
        exploded_code,
        exploded_time,
        jumps,
        pos[:n_act].copy(),
        orig[:n_act].copy(),
    )


# ---------------------------------------------------------------------------
# estimator field simulations (direct-method clocks: same law, no queue)

@njit(cache=True, inline="always")
def _uniform_annulus_point(lo2, hi2):
    r = np.sqrt(lo2 + np.random.random() * (hi2 - lo2))
    th = 2.0 * PI * np.random.random()
    return r * np.cos(th), r * np.sin(th)


@njit(cache=True)
def first_entry_times(n_reps, intensity, target_r, trunc_r, t_max, seeds):
    """First time any particle of a PPP(intensity) field on the annulus
    (target_r, trunc_r) jumps into B(target_r); inf if none by t_max."""
    out = np.empty(n_reps, dtype=np.float64)
    r2 = target_r * target_r
    lo2 = r2
    hi2 = trunc_r * trunc_r
    area = PI * (hi2 - lo2)
    for rep in range(n_reps):
        np.random.seed(seeds[rep])
        n = np.random.poisson(intensity * area)
        hit = np.inf
        if n > 0:
            xs = np.empty(n, dtype=np.float64)
            ys = np.empty(n, dtype=np.float64)
            for i in range(n):
                xs[i], ys[i] = _uniform_annulus_point(lo2, hi2)
            t = 0.0
            while True:
                t += np.random.exponential(1.0) / n
                if t > t_max:
                    break
                i = np.random.randint(0, n)
                xs[i] += np.random.standard_normal()
                ys[i] += np.random.standard_normal()
                if xs[i] * xs[i] + ys[i] * ys[i] <= r2:
                    hit = t
                    break
        out[rep] = hit
    return out


@njit(cache=True)
def frozen_pool_replicas(n_reps, intensity, pool_r, trunc_r, horizon, ann_edges, seeds):
    """Field around a frozen pool: per replica, returns whether no particle
    ever jumped into the pool by the horizon, and the time-horizon counts
    in the radial annuli (edges ann_edges, intervals (e_k, e_{k+1}])."""
    n_ann = ann_edges.size - 1
    counts = np.zeros((n_reps, n_ann), dtype=np.int64)
    retained = np.zeros(n_reps, dtype=np.uint8)
    pool_r2 = pool_r * pool_r
    lo2 = pool_r2
    hi2 = trunc_r * trunc_r
    area = PI * (hi2 - lo2)
    for rep in range(n_reps):
        np.random.seed(seeds[rep])
        n = np.random.poisson(intensity * area)
        ok = True
        for i in range(n):
            x, y = _uniform_annulus_point(lo2, hi2)
            t = np.random.exponential(1.0)
            while t <= horizon:
                x += np.random.standard_normal()
                y += np.random.standard_normal()
                if x * x + y * y <= pool_r2:
                    ok = False
                    break
                t += np.random.exponential(1.0)
            if not ok:
                break
            d = np.sqrt(x * x + y * y)
            for a in range(n_ann):
                if ann_edges[a] < d and d <= ann_edges[a + 1]:
                    counts[rep, a] += 1
                    break
        retained[rep] = 1 if ok else 0
    return counts, retained


@njit(cache=True)
def avoidance_count(n_walkers, r_lo, r_hi, pool_r, horizon, seed):
    """Walkers started uniformly in the annulus (r_lo, r_hi): how many
    never jump into B(pool_r) within the horizon."""
    np.random.seed(seed)
    pool_r2 = pool_r * pool_r
    lo2 = r_lo * r_lo
    hi2 = r_hi * r_hi
    kept = 0
    for w in range(n_walkers):
        x, y = _uniform_annulus_point(lo2, hi2)
        t = np.random.exponential(1.0)
        avoided = True
        while t <= horizon:
            x += np.random.standard_normal()
            y += np.random.standard_normal()
            if x * x + y * y <= pool_r2:
                avoided = False
                break
            t += np.random.exponential(1.0)
        if avoided:
            kept += 1
    return kept


@njit(cache=True)
def refill_probe_counts(n_reps, intensity, vacuum_r, t, probe_lo, probe_hi, trunc_r, seeds):
    """Field starts as PPP(intensity) on B(trunc_r) \\ B(vacuum_r); each
    particle moves by its Poisson(t) jumps collapsed to one Gaussian.
    Returns the per-replica particle counts in the probe annulus."""
    counts = np.zeros(n_reps, dtype=np.int64)
    lo2 = vacuum_r * vacuum_r
    hi2 = trunc_r * trunc_r
    p_lo2 = probe_lo * probe_lo
    p_hi2 = probe_hi * probe_hi
    area = PI * (hi2 - lo2)
    for rep in range(n_reps):
        np.random.seed(seeds[rep])
        n = np.random.poisson(intensity * area)
        c = 0
        for i in range(n):
            x, y = _uniform_annulus_point(lo2, hi2)
            j = np.random.poisson(t)
            if j > 0:
                s = np.sqrt(1.0 * j)
                x += s * np.random.standard_normal()
                y += s * np.random.standard_normal()
            d2 = x * x + y * y
            if p_lo2 < d2 and d2 <= p_hi2:
                c += 1
        counts[rep] = c
    return counts


@njit(cache=True)
def entered_ball_counts(n_reps, intensity, horizon, ball_r, trunc_r, seeds):
    """Distinct particles of a PPP(intensity) field on B(trunc_r) whose
    walk visits B(ball_r) by the horizon (initial position included)."""
    counts = np.zeros(n_reps, dtype=np.int64)
    r2 = ball_r * ball_r
    hi2 = trunc_r * trunc_r
    area = PI * hi2
    for rep in range(n_reps):
        np.random.seed(seeds[rep])
        n = np.random.poisson(intensity * area)
        c = 0
        for i in range(n):
            x, y = _uniform_annulus_point(0.0, hi2)
            if x * x + y * y <= r2:
                c += 1
                continue
            n_jumps = np.random.poisson(horizon)
            for j in range(n_jumps):
                x += np.random.standard_normal()
                y += np.random.standard_normal()
                if x * x + y * y <= r2:
                    c += 1
                    break
        counts[rep] = c
    return counts


@njit(cache=True)
def hitting_count(n_reps, start_radius, horizon, ball_r, seed):
    """Single walkers from distance start_radius: how many enter B(ball_r)
    within the horizon."""
    np.random.seed(seed)
    r2 = ball_r * ball_r
    hits = 0
    for rep in range(n_reps):
        x = start_radius
        y = 0.0
        n_jumps = np.random.poisson(horizon)
        for j in range(n_jumps):
            x += np.random.standard_normal()
            y += np.random.standard_normal()
            if x * x + y * y <= r2:
                hits += 1
                break
    return hits


@njit(cache=True)
def free_field_ball_counts(n_reps, intensity, ball_r, trunc_r, times, seeds):
    """Counts in B(ball_r) at the given (sorted) times for a freely
    evolving PPP(intensity) field started on B(trunc_r)."""
    nt = times.size
    counts = np.zeros((n_reps, nt), dtype=np.int64)
    r2 = ball_r * ball_r
    hi2 = trunc_r * trunc_r
    area = PI * hi2
    for rep in range(n_reps):
        np.random.seed(seeds[rep])
        n = np.random.poisson(intensity * area)
        for i in range(n):
            x, y = _uniform_annulus_point(0.0, hi2)
            t_next = np.random.exponential(1.0)
            for k in range(nt):
                while t_next <= times[k]:
                    x += np.random.standard_normal()
                    y += np.random.standard_normal()
                    t_next += np.random.exponential(1.0)
                if x * x + y * y <= r2:
                    counts[rep, k] += 1
    return counts
