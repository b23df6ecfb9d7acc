"""Plain-tuple restatements of the four transition rules.

These exist to cross-check the engine, so they deliberately share nothing
with the package: no dataclasses, no helper functions, every branch written
out in order. Clock states are ``(second, minute, hour)`` tuples and leader
states are ``(leader, level, tick, clock)`` tuples. Keep it boring; the
whole point is that a reader can verify each function line by line against
the intended update rule without chasing abstractions.
"""

from __future__ import annotations


def clock_step_coin(u, v, coin, S, M):
    """One coin-mode clock interaction. Only the initiator changes."""
    sec, minute, hour = u
    v_sec, v_min, v_hour = v
    if coin:
        sec += 1
    else:
        sec = 0
    if sec == S:
        minute += 1
        sec = 0
    if minute == M:
        hour += 1
        minute = 0
    if hour < v_hour:
        hour = v_hour
        minute = 0
        sec = 0
    if hour == v_hour and minute < v_min:
        minute = v_min
        sec = 0
    return (sec, minute, hour)


def clock_step_ordered(u, v, S, M):
    """One ordered-mode clock interaction.

    The initiator counts the step as a success and the responder's streak
    is wiped; everything after the streak update matches the coin rule.
    """
    sec, minute, hour = u
    v_sec, v_min, v_hour = v
    sec += 1
    if sec == S:
        minute += 1
        sec = 0
    if minute == M:
        hour += 1
        minute = 0
    if hour < v_hour:
        hour = v_hour
        minute = 0
        sec = 0
    if hour == v_hour and minute < v_min:
        minute = v_min
        sec = 0
    return (sec, minute, hour), (0, v_min, v_hour)


def leader_step_coin(u, v, coin, ell_max, S, M, amended):
    """One coin-mode leader-election interaction.

    Order of the leader lines: level epidemic, then pending-tick
    consumption, then the two-leader rule. The embedded clock advances on
    the pre-interaction clock fields with the same coin, and a fresh tick
    is raised if the initiator's hour went up.
    """
    u_lead, u_level, u_tick, u_clock = u
    v_lead, v_level, v_tick, v_clock = v

    if u_level < v_level:
        u_lead = False
        u_level = v_level

    if u_tick and u_lead:
        u_tick = False
        if coin:
            u_level = min(u_level + 1, ell_max)

    if u_lead and v_lead:
        if amended:
            if u_level > v_level:
                v_lead = False
                v_level = u_level
            else:
                u_lead = False
        else:
            u_lead = False

    new_clock = clock_step_coin(u_clock, v_clock, coin, S, M)
    if new_clock[2] > u_clock[2]:
        u_tick = True

    return (
        (u_lead, u_level, u_tick, new_clock),
        (v_lead, v_level, v_tick, v_clock),
    )


def leader_step_ordered(u, v, ell_max, S, M, amended):
    """One ordered-mode leader-election interaction.

    An initiating leader always spends its tick on an increment, the
    responder's pending tick is cancelled, and the two-leader rule demotes
    the responder instead of the initiator.
    """
    u_lead, u_level, u_tick, u_clock = u
    v_lead, v_level, v_tick, v_clock = v

    if u_level < v_level:
        u_lead = False
        u_level = v_level

    if u_tick and u_lead:
        u_tick = False
        u_level = min(u_level + 1, ell_max)

    v_tick = False

    if u_lead and v_lead:
        if amended:
            v_lead = False
            v_level = max(u_level, v_level)
        else:
            v_lead = False

    new_u_clock, new_v_clock = clock_step_ordered(u_clock, v_clock, S, M)
    if new_u_clock[2] > u_clock[2]:
        u_tick = True

    return (
        (u_lead, u_level, u_tick, new_u_clock),
        (v_lead, v_level, v_tick, new_v_clock),
    )
