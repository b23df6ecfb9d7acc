"""Compiled interaction loops.

One kernel per protocol family, each driving the same per-step pipeline the
pure-Python engine uses: decide replacement, resolve the ordered pair (and
coin in Coin mode), apply the transition, update incremental metrics, and
optionally record traces and snapshots.  The model queries the adversary
every step, but every built-in strategy is a pure function of the step index
and current configuration, and substreams are addressed by step rather than
consumed in sequence, so a proposal that loses the replacement draw is
unobservable; the kernels therefore materialize proposals only on the steps
that keep them.  The randomness is the same counter-based substream
construction as rng.py, restated here in uint64 numpy arithmetic; tests pin
the two implementations draw-for-draw, and the python-engine differential
tests pin whole trials.

Numba promotes mixed uint64/int64 arithmetic to float64, which silently breaks
indexing, so the discipline throughout is: hashes and counters stay uint64,
agent indices become int64 exactly once (in _bounded), and never meet again.

Metric buffers are preallocated by the caller and sized from structural bounds
(a clock round needs at least M*S steps, a leaderless hour at least M+1, a
junta hour at least M_const), so the kernels never grow memory.  Scalars come
back as a flat int64 array to keep the signatures manageable.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import GOLDEN, MIX_A, MIX_B, STREAM_SALT

U64 = np.uint64
I64 = np.int64

_GOLDEN = U64(GOLDEN)
_MIX_A = U64(MIX_A)
_MIX_B = U64(MIX_B)
_SALT = U64(STREAM_SALT)

# indices into the substream base array handed to every kernel
REPL = 0
PAIR = 1
COIN = 2
ORDER = 3
ADV = 4

# indices into the scalar result array
R_STEPS = 0          # steps executed
R_RANDOM = 1         # steps with source=Random
R_COIN_HEADS = 2     # heads among drawn coins (Coin mode)
R_GMAX = 3           # final max hour
R_GMIN = 4           # final min hour
R_N_END = 5          # round-end events recorded
R_N_START = 6        # round-start events recorded
R_FINISH = 7         # epidemic finish step, -1 if none
R_STAB = 8           # step that reached a single leader, -1 if none
R_ZERO = 9           # step that reached zero leaders, -1 if none
R_TICKS_CONSUMED = 10
R_TICKS_INCREMENTED = 11
R_VIOLATIONS = 12    # invariant bitmask, 0 when clean
R_SNAPS = 13         # snapshots written
R_TRACE = 14         # trace rows written
R_MPRIME = 15        # final minute watermark
R_MEVENTS = 16       # minute-watermark events (round boundaries included)
N_RESULTS = 17

# violation bits
V_RANGE = 1          # a counter left its documented range
V_HOUR_DECREASE = 2  # an agent's true hour decreased
V_MAX_JUMP = 4       # the global max hour advanced by more than one
V_MPRIME_JUMP = 8    # the minute watermark advanced by more than one
V_LEADER_GROWTH = 16  # the leader count increased
V_MAX_LEVEL_UNLED = 32  # no leader holds the max level (amended mode)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX_A
    z = (z ^ (z >> U64(27))) * _MIX_B
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _u64_at(base, ctr):
    return _mix64(base + (ctr + U64(1)) * _GOLDEN)


@njit(cache=True, inline="always")
def _bounded(h32, bound):
    return I64((h32 * bound) >> U64(32))


@njit(cache=True, inline="always")
def _pair_of(h, n):
    ii = _bounded(h >> U64(32), U64(n))
    r = _bounded(h & U64(0xFFFFFFFF), U64(n - 1))
    rr = r + 1 if r >= ii else r
    return ii, rr


@njit(cache=True, inline="always")
def _replaced(bases, ctr, always, threshold):
    """Replacement decision for one step (threshold 0 means p = 0)."""
    if always:
        return True
    if threshold != U64(0):
        return _u64_at(bases[REPL], ctr) < threshold
    return False


@njit(cache=True, inline="always")
def _orient(bases, ctr, pa, pb):
    """Ordered-variant orientation draw applied to an unordered proposal."""
    lo, hi = (pa, pb) if pa < pb else (pb, pa)
    if _u64_at(bases[ORDER], ctr) >> U64(63):
        return lo, hi
    return hi, lo


@njit(cache=True)
def _hour_event(
    step, old_h, new_h, new_minute, minutes_m,
    cnt, r_end, r_start, timeline, tl_first,
    gmax, gmin, m_prime, n_end, n_start, mevents, viol,
):
    """Incremental round bookkeeping after one agent's (hour, minute) change.

    Returns the updated (gmax, gmin, m_prime, n_end, n_start, mevents, viol).
    minutes_m <= 0 disables the minute watermark (protocols without one).
    Callers gate the call on `new_h != old_h or (new_h == gmax and new_minute
    > m_prime)`, the exact condition under which anything here can change;
    keeping the tuple shuffle out of the per-step path is worth about 5x.
    """
    if new_h != old_h:
        if new_h < old_h:
            viol |= V_HOUR_DECREASE
        cnt[old_h] -= 1
        cnt[new_h] += 1
        if new_h > gmax:
            if new_h != gmax + 1:
                viol |= V_MAX_JUMP
            r_end[n_end] = step
            n_end += 1
            gmax = new_h
            m_prime = new_minute
            mevents += 1
        elif minutes_m > 0 and new_h == gmax and new_minute > m_prime:
            viol |= V_MPRIME_JUMP
        while gmin < gmax and cnt[gmin] == 0:
            gmin += 1
            r_start[n_start] = step
            n_start += 1
    elif minutes_m > 0 and new_h == gmax and new_minute > m_prime:
        if new_minute != m_prime + 1:
            viol |= V_MPRIME_JUMP
        m_prime = new_minute
        mevents += 1
        row = gmax - tl_first
        if 0 <= row < timeline.shape[0] and new_minute < timeline.shape[1]:
            timeline[row, new_minute] = step
    return gmax, gmin, m_prime, n_end, n_start, mevents, viol


@njit(cache=True)
def epidemic_kernel(
    bases, n, max_steps, always, threshold, ordered, draw_coins,
    adv_kind, adv_a, adv_b, adv_alt,
    x,
    stride, snap_steps, snap_x,
    trace_on, tr_init, tr_resp, tr_src, tr_coin,
    res,
):
    """One-way infection spread: the responder takes max(initiator, responder).

    adv_kind: 0 Null, 1 fixed pair, 3 stall (two infected when possible, else
    the two lowest susceptible, else agents 0 and 1).  Stops when everyone is
    infected; the all-infected configuration is a fixed point.
    """
    infected = 0
    inf1 = n
    inf2 = n
    sus1 = 0
    sus2 = 1
    for j in range(n):
        if x[j] == 1:
            infected += 1
            if j < inf1:
                inf2 = inf1
                inf1 = j
            elif j < inf2:
                inf2 = j
    while sus1 < n and x[sus1] == 1:
        sus1 += 1
    sus2 = sus1 + 1
    while sus2 < n and x[sus2] == 1:
        sus2 += 1

    random_steps = 0
    coin_heads = 0
    finish = I64(-1)
    n_snaps = 0
    n_trace = 0
    executed = I64(0)

    run_steps = max_steps
    if infected == n:
        run_steps = 0
    until_snap = stride
    for i in range(run_steps):
        ctr = U64(i)
        if _replaced(bases, ctr, always, threshold):
            ii, rr = _pair_of(_u64_at(bases[PAIR], ctr), n)
            is_random = True
            random_steps += 1
        else:
            is_random = False
            if adv_kind == 0:
                pa, pb = _pair_of(_u64_at(bases[ADV], ctr), n)
            elif adv_kind == 1:
                if adv_alt and (i & 1) == 1:
                    pa, pb = adv_b, adv_a
                else:
                    pa, pb = adv_a, adv_b
            else:
                if infected >= 2:
                    pa, pb = inf1, inf2
                elif n - infected >= 2:
                    pa, pb = sus1, sus2
                else:
                    pa, pb = 0, 1
            if ordered:
                ii, rr = _orient(bases, ctr, pa, pb)
            else:
                ii, rr = pa, pb
        coin = I64(-1)
        if draw_coins:
            coin = I64(_u64_at(bases[COIN], U64(i)) >> U64(63))
            coin_heads += coin

        if x[ii] == 1 and x[rr] == 0:
            x[rr] = 1
            infected += 1
            if rr < inf1:
                inf2 = inf1
                inf1 = rr
            elif rr < inf2 and rr != inf1:
                inf2 = rr
            if rr == sus1:
                sus1 = sus2 if sus2 > sus1 else sus1 + 1
                while sus1 < n and x[sus1] == 1:
                    sus1 += 1
                sus2 = sus1 + 1
                while sus2 < n and x[sus2] == 1:
                    sus2 += 1
            elif rr == sus2:
                sus2 += 1
                while sus2 < n and x[sus2] == 1:
                    sus2 += 1
            if infected == n:
                finish = i

        if trace_on:
            tr_init[n_trace] = ii
            tr_resp[n_trace] = rr
            tr_src[n_trace] = 0 if is_random else 1
            tr_coin[n_trace] = coin
            n_trace += 1
        executed = I64(i + 1)
        until_snap -= 1
        if until_snap == 0:
            until_snap = stride
            snap_steps[n_snaps] = i
            snap_x[n_snaps, :] = x
            n_snaps += 1
        if finish >= 0:
            break

    res[R_STEPS] = executed
    res[R_RANDOM] = random_steps
    res[R_COIN_HEADS] = coin_heads
    res[R_FINISH] = finish
    res[R_SNAPS] = n_snaps
    res[R_TRACE] = n_trace
    res[R_VIOLATIONS] = 0


@njit(cache=True)
def smoothed_clock_kernel(
    bases, n, max_steps, always, threshold, ordered,
    adv_kind, adv_a, adv_b, adv_alt,
    second, minute, hour,
    s_thresh, m_thresh, modulus,
    cnt, r_end, r_start, timeline, tl_first,
    stop_rounds, stop_mevents,
    stride, snap_steps, snap_second, snap_minute, snap_hour,
    trace_on, tr_init, tr_resp, tr_src, tr_coin,
    res,
):
    """Phase clock under the smoothed scheduler, Coin or Ordered variant.

    adv_kind: 0 Null, 1 fixed pair.  modulus > 0 switches hour comparisons to
    a wrapped window of modulus/2 while `hour` itself stays the true count.
    """
    gmax = hour[0]
    gmin = hour[0]
    for j in range(n):
        if hour[j] > gmax:
            gmax = hour[j]
        if hour[j] < gmin:
            gmin = hour[j]
    for j in range(n):
        cnt[hour[j]] += 1
    m_prime = I64(0)
    for j in range(n):
        if hour[j] == gmax and minute[j] > m_prime:
            m_prime = I64(minute[j])

    random_steps = 0
    coin_heads = 0
    n_end = 0
    n_start = 0
    mevents = I64(0)
    viol = I64(0)
    n_snaps = 0
    n_trace = 0
    executed = I64(0)

    run_steps = max_steps
    if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
        run_steps = 0
    until_snap = stride
    for i in range(run_steps):
        ctr = U64(i)
        if _replaced(bases, ctr, always, threshold):
            ii, rr = _pair_of(_u64_at(bases[PAIR], ctr), n)
            is_random = True
            random_steps += 1
        else:
            is_random = False
            if adv_kind == 0:
                pa, pb = _pair_of(_u64_at(bases[ADV], ctr), n)
            else:
                if adv_alt and (i & 1) == 1:
                    pa, pb = adv_b, adv_a
                else:
                    pa, pb = adv_a, adv_b
            if ordered:
                ii, rr = _orient(bases, ctr, pa, pb)
            else:
                ii, rr = pa, pb
        coin = I64(-1)
        if not ordered:
            coin = I64(_u64_at(bases[COIN], ctr) >> U64(63))
            coin_heads += coin

        old_h = hour[ii]
        if ordered:
            s = second[ii] + 1
            second[rr] = 0
        else:
            s = second[ii] + 1 if coin == 1 else 0
        m = minute[ii]
        h = old_h
        if s == s_thresh:
            m += 1
            s = 0
        if m == m_thresh:
            h += 1
            m = 0
        if modulus > 0:
            d = (hour[rr] - h) % modulus
            if d != 0 and 2 * d < modulus:
                h = hour[rr]
                m = 0
                s = 0
                d = 0
            if d == 0 and m < minute[rr]:
                m = minute[rr]
                s = 0
        else:
            if h < hour[rr]:
                h = hour[rr]
                m = 0
                s = 0
            if h == hour[rr] and m < minute[rr]:
                m = minute[rr]
                s = 0
        second[ii] = s
        minute[ii] = m
        hour[ii] = h
        if s < 0 or s >= s_thresh or m < 0 or m >= m_thresh:
            viol |= V_RANGE

        if h != old_h or (h == gmax and m > m_prime):
            gmax, gmin, m_prime, n_end, n_start, mevents, viol = _hour_event(
                I64(i), old_h, h, I64(m), m_thresh,
                cnt, r_end, r_start, timeline, tl_first,
                gmax, gmin, m_prime, n_end, n_start, mevents, viol,
            )

        if trace_on:
            tr_init[n_trace] = ii
            tr_resp[n_trace] = rr
            tr_src[n_trace] = 0 if is_random else 1
            tr_coin[n_trace] = coin
            n_trace += 1
        executed = I64(i + 1)
        until_snap -= 1
        if until_snap == 0:
            until_snap = stride
            snap_steps[n_snaps] = i
            snap_second[n_snaps, :] = second
            snap_minute[n_snaps, :] = minute
            snap_hour[n_snaps, :] = hour
            n_snaps += 1
        if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
            break
        if stop_mevents > 0 and mevents >= stop_mevents:
            break

    res[R_STEPS] = executed
    res[R_RANDOM] = random_steps
    res[R_COIN_HEADS] = coin_heads
    res[R_GMAX] = gmax
    res[R_GMIN] = gmin
    res[R_N_END] = n_end
    res[R_N_START] = n_start
    res[R_VIOLATIONS] = viol
    res[R_SNAPS] = n_snaps
    res[R_TRACE] = n_trace
    res[R_MPRIME] = m_prime
    res[R_MEVENTS] = mevents


@njit(cache=True)
def junta_clock_kernel(
    bases, n, max_steps, always, threshold, ordered, draw_coins,
    adv_kind, adv_a, adv_b, adv_alt,
    minute, junta, m_const,
    cnt, r_end, r_start,
    stop_rounds,
    stride, snap_steps, snap_minute,
    trace_on, tr_init, tr_resp, tr_src, tr_coin,
    res,
):
    """Junta-driven baseline clock; hour is minute // m_const.

    adv_kind: 0 Null, 1 fixed pair, 2 junta hammer (the two lowest junta
    members, alternating orientation; the junta rule only moves the initiator,
    so a fixed orientation would stall after one bump).
    """
    ja = I64(-1)
    jb = I64(-1)
    for j in range(n):
        if junta[j] == 1:
            if ja < 0:
                ja = I64(j)
            elif jb < 0:
                jb = I64(j)
                break
    gmax = I64(minute[0] // m_const)
    gmin = gmax
    for j in range(n):
        h = minute[j] // m_const
        if h > gmax:
            gmax = h
        if h < gmin:
            gmin = h
        cnt[h] += 1

    dummy_tl = np.empty((0, 0), dtype=np.int64)
    random_steps = 0
    coin_heads = 0
    n_end = 0
    n_start = 0
    mevents = I64(0)
    viol = I64(0)
    n_snaps = 0
    n_trace = 0
    executed = I64(0)

    run_steps = max_steps
    if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
        run_steps = 0
    until_snap = stride
    for i in range(run_steps):
        ctr = U64(i)
        if _replaced(bases, ctr, always, threshold):
            ii, rr = _pair_of(_u64_at(bases[PAIR], ctr), n)
            is_random = True
            random_steps += 1
        else:
            is_random = False
            if adv_kind == 0:
                pa, pb = _pair_of(_u64_at(bases[ADV], ctr), n)
            elif adv_kind == 1:
                if adv_alt and (i & 1) == 1:
                    pa, pb = adv_b, adv_a
                else:
                    pa, pb = adv_a, adv_b
            else:
                if jb >= 0 and (i & 1) == 1:
                    pa, pb = jb, ja
                else:
                    pa, pb = ja, (jb if jb >= 0 else (1 if ja == 0 else 0))
            if ordered:
                ii, rr = _orient(bases, ctr, pa, pb)
            else:
                ii, rr = pa, pb
        coin = I64(-1)
        if draw_coins:
            coin = I64(_u64_at(bases[COIN], ctr) >> U64(63))
            coin_heads += coin

        old_h = I64(minute[ii] // m_const)
        if junta[ii] == 1:
            m = max(minute[ii], minute[rr] + 1)
        else:
            m = max(minute[ii], minute[rr])
        minute[ii] = m
        new_h = I64(m // m_const)

        if new_h != old_h:
            gmax, gmin, m_prime, n_end, n_start, mevents, viol = _hour_event(
                I64(i), old_h, new_h, I64(0), I64(0),
                cnt, r_end, r_start, dummy_tl, I64(0),
                gmax, gmin, I64(0), n_end, n_start, mevents, viol,
            )

        if trace_on:
            tr_init[n_trace] = ii
            tr_resp[n_trace] = rr
            tr_src[n_trace] = 0 if is_random else 1
            tr_coin[n_trace] = coin
            n_trace += 1
        executed = I64(i + 1)
        until_snap -= 1
        if until_snap == 0:
            until_snap = stride
            snap_steps[n_snaps] = i
            snap_minute[n_snaps, :] = minute
            n_snaps += 1
        if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
            break

    res[R_STEPS] = executed
    res[R_RANDOM] = random_steps
    res[R_COIN_HEADS] = coin_heads
    res[R_GMAX] = gmax
    res[R_GMIN] = gmin
    res[R_N_END] = n_end
    res[R_N_START] = n_start
    res[R_VIOLATIONS] = viol
    res[R_SNAPS] = n_snaps
    res[R_TRACE] = n_trace


@njit(cache=True)
def leaderless_clock_kernel(
    bases, n, max_steps, always, threshold, ordered, draw_coins,
    adv_kind, adv_a, adv_b, adv_alt,
    hour, minute, m_thresh,
    cnt, r_end, r_start,
    stop_rounds,
    stride, snap_steps, snap_hour, snap_minute,
    trace_on, tr_init, tr_resp, tr_src, tr_coin,
    res,
):
    """Leaderless baseline clock: adopt a later hour, else count own minutes."""
    gmax = hour[0]
    gmin = hour[0]
    for j in range(n):
        if hour[j] > gmax:
            gmax = hour[j]
        if hour[j] < gmin:
            gmin = hour[j]
        cnt[hour[j]] += 1

    dummy_tl = np.empty((0, 0), dtype=np.int64)
    random_steps = 0
    coin_heads = 0
    n_end = 0
    n_start = 0
    mevents = I64(0)
    viol = I64(0)
    n_snaps = 0
    n_trace = 0
    executed = I64(0)

    run_steps = max_steps
    if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
        run_steps = 0
    until_snap = stride
    for i in range(run_steps):
        ctr = U64(i)
        if _replaced(bases, ctr, always, threshold):
            ii, rr = _pair_of(_u64_at(bases[PAIR], ctr), n)
            is_random = True
            random_steps += 1
        else:
            is_random = False
            if adv_kind == 0:
                pa, pb = _pair_of(_u64_at(bases[ADV], ctr), n)
            else:
                if adv_alt and (i & 1) == 1:
                    pa, pb = adv_b, adv_a
                else:
                    pa, pb = adv_a, adv_b
            if ordered:
                ii, rr = _orient(bases, ctr, pa, pb)
            else:
                ii, rr = pa, pb
        coin = I64(-1)
        if draw_coins:
            coin = I64(_u64_at(bases[COIN], ctr) >> U64(63))
            coin_heads += coin

        old_h = hour[ii]
        if hour[ii] < hour[rr]:
            hour[ii] = hour[rr]
            minute[ii] = 0
        elif minute[ii] == m_thresh:
            hour[ii] = old_h + 1
            minute[ii] = 0
        else:
            minute[ii] = minute[ii] + 1
        new_h = hour[ii]
        if minute[ii] < 0 or minute[ii] > m_thresh:
            viol |= V_RANGE

        if new_h != old_h:
            gmax, gmin, m_prime, n_end, n_start, mevents, viol = _hour_event(
                I64(i), old_h, new_h, I64(0), I64(0),
                cnt, r_end, r_start, dummy_tl, I64(0),
                gmax, gmin, I64(0), n_end, n_start, mevents, viol,
            )

        if trace_on:
            tr_init[n_trace] = ii
            tr_resp[n_trace] = rr
            tr_src[n_trace] = 0 if is_random else 1
            tr_coin[n_trace] = coin
            n_trace += 1
        executed = I64(i + 1)
        until_snap -= 1
        if until_snap == 0:
            until_snap = stride
            snap_steps[n_snaps] = i
            snap_hour[n_snaps, :] = hour
            snap_minute[n_snaps, :] = minute
            n_snaps += 1
        if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
            break

    res[R_STEPS] = executed
    res[R_RANDOM] = random_steps
    res[R_COIN_HEADS] = coin_heads
    res[R_GMAX] = gmax
    res[R_GMIN] = gmin
    res[R_N_END] = n_end
    res[R_N_START] = n_start
    res[R_VIOLATIONS] = viol
    res[R_SNAPS] = n_snaps
    res[R_TRACE] = n_trace


@njit(cache=True)
def _bucket_rescan(level, leader, lvl, n):
    """Two lowest follower indices at a level (sentinel n when absent)."""
    m1 = I64(n)
    m2 = I64(n)
    for j in range(n):
        if leader[j] == 0 and level[j] == lvl:
            if j < m1:
                m2 = m1
                m1 = I64(j)
            elif j < m2:
                m2 = I64(j)
    return m1, m2


@njit(cache=True)
def _global_rescan(leader, n):
    m1 = I64(n)
    m2 = I64(n)
    for j in range(n):
        if leader[j] == 0:
            if j < m1:
                m2 = m1
                m1 = I64(j)
            elif j < m2:
                m2 = I64(j)
    return m1, m2


@njit(cache=True)
def leader_kernel(
    bases, n, max_steps, always, threshold, ordered,
    adv_kind, adv_a, adv_b, adv_alt,
    second, minute, hour, level, leader, tick,
    s_thresh, m_thresh, modulus, ell_max, amended,
    cnt, r_end, r_start, timeline, tl_first, leaders_at_end,
    stop_stab, stop_rounds,
    stride, snap_steps, snap_second, snap_minute, snap_hour,
    snap_level, snap_leader, snap_tick,
    trace_on, tr_init, tr_resp, tr_src, tr_coin,
    res,
):
    """Leader election riding the phase clock (Coin or Ordered variant).

    adv_kind: 0 Null, 1 fixed pair, 4 isolation (the follower pair sharing a
    level whose first member has the lowest index, else the two lowest
    followers, else agents 0 and 1).  Incremental structures: per-level two
    lowest follower indices for the isolation strategy, and the count of
    leaders holding the maximum level for the invariant check.
    """
    gmax = hour[0]
    gmin = hour[0]
    for j in range(n):
        if hour[j] > gmax:
            gmax = hour[j]
        if hour[j] < gmin:
            gmin = hour[j]
        cnt[hour[j]] += 1
    m_prime = I64(0)
    for j in range(n):
        if hour[j] == gmax and minute[j] > m_prime:
            m_prime = I64(minute[j])

    leader_count = I64(0)
    for j in range(n):
        leader_count += leader[j]
    # max level and how many leaders hold it
    top_level = I64(level[0])
    for j in range(n):
        if level[j] > top_level:
            top_level = I64(level[j])
    top_leaders = I64(0)
    for j in range(n):
        if level[j] == top_level and leader[j] == 1:
            top_leaders += 1

    track_iso = adv_kind == 4
    f_cnt = np.zeros(ell_max + 1, dtype=np.int64)
    f_min1 = np.full(ell_max + 1, n, dtype=np.int64)
    f_min2 = np.full(ell_max + 1, n, dtype=np.int64)
    g_min1 = I64(n)
    g_min2 = I64(n)
    if track_iso:
        for j in range(n):
            if leader[j] == 0:
                lvl = level[j]
                f_cnt[lvl] += 1
                if j < f_min1[lvl]:
                    f_min2[lvl] = f_min1[lvl]
                    f_min1[lvl] = I64(j)
                elif j < f_min2[lvl]:
                    f_min2[lvl] = I64(j)
        g_min1, g_min2 = _global_rescan(leader, n)

    random_steps = 0
    coin_heads = 0
    n_end = 0
    n_start = 0
    mevents = I64(0)
    viol = I64(0)
    n_snaps = 0
    n_trace = 0
    executed = I64(0)
    stab = I64(-1)
    zero = I64(-1)
    ticks_consumed = I64(0)
    ticks_incremented = I64(0)

    run_steps = max_steps
    if stop_stab and leader_count <= 1:
        run_steps = 0
    if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
        run_steps = 0
    until_snap = stride
    for i in range(run_steps):
        ctr = U64(i)
        if _replaced(bases, ctr, always, threshold):
            ii, rr = _pair_of(_u64_at(bases[PAIR], ctr), n)
            is_random = True
            random_steps += 1
        else:
            is_random = False
            if adv_kind == 0:
                pa, pb = _pair_of(_u64_at(bases[ADV], ctr), n)
            elif adv_kind == 1:
                if adv_alt and (i & 1) == 1:
                    pa, pb = adv_b, adv_a
                else:
                    pa, pb = adv_a, adv_b
            else:
                best_lvl = I64(-1)
                best_idx = I64(n)
                for lvl in range(ell_max + 1):
                    if f_cnt[lvl] >= 2 and f_min1[lvl] < best_idx:
                        best_idx = f_min1[lvl]
                        best_lvl = I64(lvl)
                if best_lvl >= 0:
                    pa, pb = f_min1[best_lvl], f_min2[best_lvl]
                elif n - leader_count >= 2:
                    pa, pb = g_min1, g_min2
                else:
                    pa, pb = I64(0), I64(1)
            if ordered:
                ii, rr = _orient(bases, ctr, pa, pb)
            else:
                ii, rr = pa, pb
        coin = I64(-1)
        if not ordered:
            coin = I64(_u64_at(bases[COIN], ctr) >> U64(63))
            coin_heads += coin

        u_was_leader = leader[ii] == 1
        u_old_level = I64(level[ii])
        v_was_leader = leader[rr] == 1
        v_old_level = I64(level[rr])
        u_tick_pre = tick[ii] == 1
        v_tick_pre = tick[rr] == 1

        # embedded clock
        old_h = hour[ii]
        if ordered:
            s = second[ii] + 1
            second[rr] = 0
        else:
            s = second[ii] + 1 if coin == 1 else 0
        m = minute[ii]
        h = old_h
        if s == s_thresh:
            m += 1
            s = 0
        if m == m_thresh:
            h += 1
            m = 0
        if modulus > 0:
            d = (hour[rr] - h) % modulus
            if d != 0 and 2 * d < modulus:
                h = hour[rr]
                m = 0
                s = 0
                d = 0
            if d == 0 and m < minute[rr]:
                m = minute[rr]
                s = 0
        else:
            if h < hour[rr]:
                h = hour[rr]
                m = 0
                s = 0
            if h == hour[rr] and m < minute[rr]:
                m = minute[rr]
                s = 0
        second[ii] = s
        minute[ii] = m
        hour[ii] = h
        if s < 0 or s >= s_thresh or m < 0 or m >= m_thresh:
            viol |= V_RANGE

        # leader lines: level epidemic, tick consumption, two-leader rule
        u_leader = u_was_leader
        u_level = u_old_level
        u_tick = u_tick_pre
        if u_level < v_old_level:
            u_leader = False
            u_level = v_old_level
        if u_tick and u_leader:
            u_tick = False
            ticks_consumed += 1
            heads = True if ordered else coin == 1
            if heads and u_level < ell_max:
                u_level += 1
                ticks_incremented += 1
        v_leader = v_was_leader
        v_level = v_old_level
        v_tick = v_tick_pre
        if ordered and v_tick:
            v_tick = False
            if v_was_leader:
                ticks_consumed += 1
        if u_leader and v_leader:
            if amended:
                if ordered:
                    v_leader = False
                    if u_level > v_level:
                        v_level = u_level
                else:
                    if u_level > v_level:
                        v_leader = False
                        v_level = u_level
                    else:
                        u_leader = False
            else:
                if ordered:
                    v_leader = False
                else:
                    u_leader = False
        if h > old_h or (modulus > 0 and h != old_h):
            u_tick = True
        level[ii] = u_level
        leader[ii] = 1 if u_leader else 0
        tick[ii] = 1 if u_tick else 0
        level[rr] = v_level
        leader[rr] = 1 if v_leader else 0
        tick[rr] = 1 if v_tick else 0
        if u_level < 0 or u_level > ell_max or v_level < 0 or v_level > ell_max:
            viol |= V_RANGE

        # leader count and max-level holder maintenance
        delta = I64(0)
        if u_was_leader and not u_leader:
            delta -= 1
        if (not u_was_leader) and u_leader:
            delta += 1
            viol |= V_LEADER_GROWTH
        if v_was_leader and not v_leader:
            delta -= 1
        if (not v_was_leader) and v_leader:
            delta += 1
            viol |= V_LEADER_GROWTH
        leader_count += delta
        if delta != 0:
            if leader_count == 1 and stab < 0:
                stab = I64(i)
            if leader_count == 0 and zero < 0:
                zero = I64(i)

        new_top = top_level
        if u_level > new_top:
            new_top = I64(u_level)
        if v_level > new_top:
            new_top = I64(v_level)
        if new_top > top_level:
            top_level = new_top
            top_leaders = 0
            if u_level == top_level and u_leader:
                top_leaders += 1
            if v_level == top_level and v_leader:
                top_leaders += 1
        else:
            if u_old_level == top_level and u_was_leader:
                top_leaders -= 1
            if u_level == top_level and u_leader:
                top_leaders += 1
            if v_old_level == top_level and v_was_leader:
                top_leaders -= 1
            if v_level == top_level and v_leader:
                top_leaders += 1
        if amended and leader_count >= 1 and top_leaders == 0:
            viol |= V_MAX_LEVEL_UNLED

        if track_iso:
            # initiator bucket moves
            if u_was_leader and not u_leader:
                lvl = u_level
                f_cnt[lvl] += 1
                if ii < f_min1[lvl]:
                    f_min2[lvl] = f_min1[lvl]
                    f_min1[lvl] = I64(ii)
                elif ii < f_min2[lvl]:
                    f_min2[lvl] = I64(ii)
                if ii < g_min1:
                    g_min2 = g_min1
                    g_min1 = I64(ii)
                elif ii < g_min2:
                    g_min2 = I64(ii)
            elif (not u_was_leader) and u_old_level != u_level:
                f_cnt[u_old_level] -= 1
                if ii == f_min1[u_old_level] or ii == f_min2[u_old_level]:
                    f_min1[u_old_level], f_min2[u_old_level] = _bucket_rescan(
                        level, leader, u_old_level, n
                    )
                lvl = u_level
                f_cnt[lvl] += 1
                if ii < f_min1[lvl]:
                    f_min2[lvl] = f_min1[lvl]
                    f_min1[lvl] = I64(ii)
                elif ii < f_min2[lvl]:
                    f_min2[lvl] = I64(ii)
            if v_was_leader and not v_leader:
                lvl = v_level
                f_cnt[lvl] += 1
                if rr < f_min1[lvl]:
                    f_min2[lvl] = f_min1[lvl]
                    f_min1[lvl] = I64(rr)
                elif rr < f_min2[lvl]:
                    f_min2[lvl] = I64(rr)
                if rr < g_min1:
                    g_min2 = g_min1
                    g_min1 = I64(rr)
                elif rr < g_min2:
                    g_min2 = I64(rr)
            elif (not v_was_leader) and v_old_level != v_level:
                f_cnt[v_old_level] -= 1
                if rr == f_min1[v_old_level] or rr == f_min2[v_old_level]:
                    f_min1[v_old_level], f_min2[v_old_level] = _bucket_rescan(
                        level, leader, v_old_level, n
                    )
                lvl = v_level
                f_cnt[lvl] += 1
                if rr < f_min1[lvl]:
                    f_min2[lvl] = f_min1[lvl]
                    f_min1[lvl] = I64(rr)
                elif rr < f_min2[lvl]:
                    f_min2[lvl] = I64(rr)

        if h != old_h or (h == gmax and m > m_prime):
            prev_n_end = n_end
            gmax, gmin, m_prime, n_end, n_start, mevents, viol = _hour_event(
                I64(i), old_h, h, I64(m), m_thresh,
                cnt, r_end, r_start, timeline, tl_first,
                gmax, gmin, m_prime, n_end, n_start, mevents, viol,
            )
            if n_end > prev_n_end:
                leaders_at_end[n_end - 1] = leader_count

        if trace_on:
            tr_init[n_trace] = ii
            tr_resp[n_trace] = rr
            tr_src[n_trace] = 0 if is_random else 1
            tr_coin[n_trace] = coin
            n_trace += 1
        executed = I64(i + 1)
        until_snap -= 1
        if until_snap == 0:
            until_snap = stride
            snap_steps[n_snaps] = i
            snap_second[n_snaps, :] = second
            snap_minute[n_snaps, :] = minute
            snap_hour[n_snaps, :] = hour
            snap_level[n_snaps, :] = level
            snap_leader[n_snaps, :] = leader
            snap_tick[n_snaps, :] = tick
            n_snaps += 1
        if stop_stab and leader_count == 1:
            break
        if stop_rounds > 0 and min(gmax, gmin + 1) >= stop_rounds:
            break

    res[R_STEPS] = executed
    res[R_RANDOM] = random_steps
    res[R_COIN_HEADS] = coin_heads
    res[R_GMAX] = gmax
    res[R_GMIN] = gmin
    res[R_N_END] = n_end
    res[R_N_START] = n_start
    res[R_STAB] = stab
    res[R_ZERO] = zero
    res[R_TICKS_CONSUMED] = ticks_consumed
    res[R_TICKS_INCREMENTED] = ticks_incremented
    res[R_VIOLATIONS] = viol
    res[R_SNAPS] = n_snaps
    res[R_TRACE] = n_trace
    res[R_MPRIME] = m_prime
    res[R_MEVENTS] = mevents
