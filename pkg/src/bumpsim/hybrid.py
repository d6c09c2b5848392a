"""Hybrid executor: flows, collision events, jump maps, trace, metrics.

Each robot carries a discrete mode q alongside its pose: q = 0 runs the
predefined controller, q = 1 runs the constant-heading local escape
controller installed after a heading-changing collision.  The executor
integrates the unicycle flow with fixed-step classical RK4 under
zero-order-hold inputs, localizes contact events by bisection inside a
step, applies the collision/impulse jump maps, and records everything in
an ordered trace.

Two simulation modes exist: REDESIGNED runs the full strategy, while
PREDEFINED_ONLY still resolves collision physics (headings and speeds
jump) but never applies impulses or local phases - the ablation that
exhibits chattering/deadlock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Mapping

from .collision import (
    CONTACT_TOL,
    ContactQuery,
    ContactStatus,
    check_collision,
    resolve_collision,
)
from .controller import predefined_control
from .redesign import (
    LocalPhase,
    deconflict_headings,
    impulse,
    local_control,
    local_duration,
    select_escape_heading,
    tangent_rays,
)
from .scenario import Body, ControlInput, RobotState, Scenario, validate_scenario

EVENT_TIME_TOL = 1e-12


class Mode(IntEnum):
    PREDEFINED = 0
    LOCAL = 1


class SimMode(Enum):
    PREDEFINED_ONLY = "predefined"
    REDESIGNED = "redesigned"


# --------------------------------------------------------------------------
# Trace records


@dataclass(frozen=True, slots=True)
class FlowSample:
    t: float
    robot_id: int
    x: float
    y: float
    theta: float
    v: float
    w: float
    q: int


@dataclass(frozen=True, slots=True)
class CollisionRecord:
    """One robot's view of a rigid-body contact (robot-robot contacts
    produce one record per robot)."""

    t: float
    robot_id: int
    other_id: int
    x: float
    y: float
    theta_pre: float
    theta_post: float
    v_pre: float
    v_post: float
    phi: float
    lam: float
    mu: float
    q: int


@dataclass(frozen=True, slots=True)
class ImpulseRecord:
    t: float
    robot_id: int
    theta_escape: float
    dtheta: float


@dataclass(frozen=True, slots=True)
class SwitchRecord:
    t: float
    robot_id: int
    q_from: int
    q_to: int


@dataclass(frozen=True, slots=True)
class TargetReachedRecord:
    t: float
    robot_id: int


@dataclass(frozen=True, slots=True)
class FaultRecord:
    t: float
    reason: str
    fatal: bool


TraceRecord = (
    FlowSample
    | CollisionRecord
    | ImpulseRecord
    | SwitchRecord
    | TargetReachedRecord
    | FaultRecord
)


@dataclass(slots=True)
class Trace:
    scenario: Scenario
    sim_mode: SimMode
    records: list

    def of_type(self, record_type: type) -> list:
        return [r for r in self.records if isinstance(r, record_type)]

    def samples(self, robot_id: int) -> list[FlowSample]:
        return [r for r in self.records if isinstance(r, FlowSample) and r.robot_id == robot_id]

    def collisions(self, robot_id: int | None = None) -> list[CollisionRecord]:
        return [
            r
            for r in self.records
            if isinstance(r, CollisionRecord) and (robot_id is None or r.robot_id == robot_id)
        ]


# --------------------------------------------------------------------------
# Flow integration and event localization


def step_flow(state: RobotState, u: ControlInput, dt: float) -> RobotState:
    """One classical RK4 step of the unicycle flow under a held input.

    Constant-heading motion (w = 0) integrates exactly; the general case
    carries O(dt^5) local error.
    """
    v, w = u.v, u.w
    th1 = state.theta
    k1x, k1y = v * math.cos(th1), v * math.sin(th1)
    th2 = state.theta + 0.5 * dt * w
    k2x, k2y = v * math.cos(th2), v * math.sin(th2)
    th3 = state.theta + 0.5 * dt * w
    k3x, k3y = v * math.cos(th3), v * math.sin(th3)
    th4 = state.theta + dt * w
    k4x, k4y = v * math.cos(th4), v * math.sin(th4)
    return RobotState(
        x=state.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        y=state.y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        theta=state.theta + dt * w,
    )


@dataclass(frozen=True, slots=True)
class EventHit:
    """Earliest contact crossing inside a step: offset from the step start
    and the pair involved; `simultaneous` lists later-blocked ties."""

    t_offset: float
    robot_id: int
    other_id: int
    simultaneous: tuple[tuple[int, int], ...] = ()


def _contact_pairs(scenario: Scenario) -> list[tuple[int, int, float, bool]]:
    """(robot_id, other_id, radii sum, other_is_robot), robots sorted."""
    pairs: list[tuple[int, int, float, bool]] = []
    robots = sorted(scenario.robots(), key=lambda b: b.id)
    if len(robots) == 2:
        pairs.append((robots[0].id, robots[1].id, robots[0].radius + robots[1].radius, True))
    for robot in robots:
        for obstacle in scenario.obstacles():
            pairs.append((robot.id, obstacle.id, robot.radius + obstacle.radius, False))
    return pairs


def detect_event(
    scenario: Scenario,
    states: Mapping[int, RobotState],
    inputs: Mapping[int, ControlInput],
    h: float,
    next_states: Mapping[int, RobotState] | None = None,
    time_tol: float = EVENT_TIME_TOL,
) -> EventHit | None:
    """Find the earliest pair gap zero-crossing inside the step [0, h].

    A crossing needs a positive gap at the step start and a negative gap
    at the end; the hit time is then localized by bisection on the RK4
    flow to `time_tol` seconds, landing on the non-penetrating side.
    Simultaneous crossings (within time_tol) are reported with the
    lexicographically smallest pair first.
    """
    if next_states is None:
        next_states = {rid: step_flow(states[rid], inputs[rid], h) for rid in states}

    def gap_at(pair: tuple[int, int, float, bool], tau: float) -> float:
        i, j, rsum, j_is_robot = pair
        si = step_flow(states[i], inputs[i], tau)
        if j_is_robot:
            sj = step_flow(states[j], inputs[j], tau)
            jx, jy = sj.x, sj.y
        else:
            jb = scenario.body(j)
            jx, jy = jb.x, jb.y
        return math.hypot(jx - si.x, jy - si.y) - rsum

    hits: list[tuple[float, int, int]] = []
    for pair in _contact_pairs(scenario):
        i, j, rsum, j_is_robot = pair
        si0, si1 = states[i], next_states[i]
        if j_is_robot:
            j0 = states[j]
            j1 = next_states[j]
            gap0 = math.hypot(j0.x - si0.x, j0.y - si0.y) - rsum
            gap1 = math.hypot(j1.x - si1.x, j1.y - si1.y) - rsum
        else:
            jb = scenario.body(j)
            gap0 = math.hypot(jb.x - si0.x, jb.y - si0.y) - rsum
            gap1 = math.hypot(jb.x - si1.x, jb.y - si1.y) - rsum
        if gap0 > 0.0 and gap1 < 0.0:
            lo, hi = 0.0, h
            while hi - lo > time_tol:
                mid = 0.5 * (lo + hi)
                if gap_at(pair, mid) > 0.0:
                    lo = mid
                else:
                    hi = mid
            hits.append((lo, i, j))

    if not hits:
        return None
    t_first = min(tau for (tau, _, _) in hits)
    tied = sorted((i, j) for (tau, i, j) in hits if tau - t_first <= time_tol)
    return EventHit(
        t_offset=t_first,
        robot_id=tied[0][0],
        other_id=tied[0][1],
        simultaneous=tuple(tied[1:]),
    )


# --------------------------------------------------------------------------
# Hybrid state and jump maps


@dataclass(slots=True)
class HybridState:
    t: float
    states: dict[int, RobotState]
    modes: dict[int, Mode]
    phases: dict[int, LocalPhase | None]
    jumps: int = 0

    def copy(self) -> "HybridState":
        return HybridState(
            t=self.t,
            states=dict(self.states),
            modes=dict(self.modes),
            phases=dict(self.phases),
            jumps=self.jumps,
        )


@dataclass(frozen=True, slots=True)
class ContactEvent:
    """A localized collision between a robot and another body, carrying the
    currently commanded speeds of both parties (0 for static bodies)."""

    robot_id: int
    other_id: int
    v_robot: float
    v_other: float = 0.0


@dataclass(frozen=True, slots=True)
class ReactivationEvent:
    robot_id: int


def _escape_geometry(
    scenario: Scenario,
    robot_id: int,
    p_robot: tuple[float, float],
    p_other: tuple[float, float],
    contact_radius: float,
) -> tuple[float, float]:
    rays = tangent_rays(p_other, p_robot, contact_radius)
    target = scenario.targets[robot_id]
    return select_escape_heading(rays, (target.x, target.y))


def jump(
    hstate: HybridState,
    event: ContactEvent | ReactivationEvent,
    scenario: Scenario,
    sim_mode: SimMode = SimMode.REDESIGNED,
) -> tuple[HybridState, list, dict[int, float]]:
    """Apply one hybrid jump and return (new state, records, post speeds).

    A ReactivationEvent clears the robot's local phase and switches it back
    to the predefined controller with the pose untouched.  A ContactEvent
    resolves the collision physics for the pair; robots whose heading
    changes get the redesign treatment (escape impulse plus a fresh local
    phase) in REDESIGNED mode, while PREDEFINED_ONLY applies the heading
    jump alone.  Headings unchanged within tolerance leave the robot
    flowing in its current mode.  The returned speeds are the
    post-collision linear speeds of the involved robots.
    """
    out = hstate.copy()
    records: list = []
    post_speeds: dict[int, float] = {}

    if isinstance(event, ReactivationEvent):
        rid = event.robot_id
        out.phases[rid] = None
        out.modes[rid] = Mode.PREDEFINED
        records.append(SwitchRecord(t=out.t, robot_id=rid, q_from=1, q_to=0))
        out.jumps += 1
        return (out, records, post_speeds)

    i, j = event.robot_id, event.other_id
    body_i = scenario.body(i)
    body_j = scenario.body(j)
    state_i = out.states[i]
    if body_j.is_robot:
        state_j = out.states[j]
        p_j = state_j.position
        theta_j = state_j.theta
    else:
        state_j = None
        p_j = body_j.position
        theta_j = 0.0

    query = ContactQuery.build(
        i_id=i,
        j_id=j,
        p_i=state_i.position,
        p_j=p_j,
        r_i=body_i.radius,
        r_j=body_j.radius,
        m_i=body_i.mass,
        m_j=body_j.mass,
        v_i=event.v_robot,
        v_j=event.v_other,
        theta_i=state_i.theta,
        theta_j=theta_j,
    )
    delta = scenario.params.delta
    out_i, out_j = resolve_collision(
        query,
        delta_i=delta,
        delta_j=delta if body_j.is_robot else 0.0,
        body_j_is_robot=body_j.is_robot,
    )

    outcomes = [(i, j, body_j, out_i)]
    if out_j is not None:
        outcomes.append((j, i, body_i, out_j))

    redesigning = [
        (rid, other_id, other_body, oc)
        for (rid, other_id, other_body, oc) in outcomes
        if oc.redesign_needed and sim_mode is SimMode.REDESIGNED
    ]

    # Escape headings, deconflicted when both robots of a robot-robot
    # contact need the redesign.
    escapes: dict[int, float] = {}
    if redesigning:
        geo: dict[int, tuple[float, float]] = {}
        for rid, other_id, other_body, oc in redesigning:
            p_robot = out.states[rid].position
            p_other = out.states[other_id].position if other_body.is_robot else other_body.position
            contact_radius = scenario.body(rid).radius + other_body.radius
            geo[rid] = _escape_geometry(scenario, rid, p_robot, p_other, contact_radius)
        if len(redesigning) == 2:
            ids = [entry[0] for entry in redesigning]
            th1, th2 = deconflict_headings(
                geo[ids[0]][0], geo[ids[1]][0], geo[ids[0]][1], geo[ids[1]][1]
            )
            escapes[ids[0]] = th1
            escapes[ids[1]] = th2
        else:
            rid = redesigning[0][0]
            escapes[rid] = geo[rid][0]

    for rid, other_id, other_body, oc in outcomes:
        pre_state = out.states[rid]
        q_after = out.modes[rid].value
        post_speeds[rid] = oc.v_plus

        if oc.redesign_needed:
            # Physics heading applies first; the impulse then retargets it.
            out.states[rid] = RobotState(pre_state.x, pre_state.y, oc.theta_plus)
            if sim_mode is SimMode.REDESIGNED:
                theta_escape = escapes[rid]
                dtheta = impulse(theta_escape, oc.theta_plus)[2]
                out.states[rid] = RobotState(pre_state.x, pre_state.y, theta_escape)
                v_loc = scenario.params.m_v
                phase = LocalPhase(
                    collided_id=other_id,
                    p_ic=(pre_state.x, pre_state.y),
                    theta_escape=theta_escape,
                    v_loc=v_loc,
                    t_dur=local_duration(v_loc, other_body.is_robot, other_body.radius),
                )
                switch_needed = out.modes[rid] is Mode.PREDEFINED
                out.phases[rid] = phase
                out.modes[rid] = Mode.LOCAL
                q_after = Mode.LOCAL.value
                records.append(
                    CollisionRecord(
                        t=out.t,
                        robot_id=rid,
                        other_id=other_id,
                        x=pre_state.x,
                        y=pre_state.y,
                        theta_pre=oc.theta_pre,
                        theta_post=oc.theta_plus,
                        v_pre=oc.v_pre,
                        v_post=oc.v_plus,
                        phi=query.frame.phi,
                        lam=oc.lam,
                        mu=oc.mu,
                        q=q_after,
                    )
                )
                records.append(
                    ImpulseRecord(t=out.t, robot_id=rid, theta_escape=theta_escape, dtheta=dtheta)
                )
                if switch_needed:
                    records.append(SwitchRecord(t=out.t, robot_id=rid, q_from=0, q_to=1))
                continue

        records.append(
            CollisionRecord(
                t=out.t,
                robot_id=rid,
                other_id=other_id,
                x=pre_state.x,
                y=pre_state.y,
                theta_pre=oc.theta_pre,
                theta_post=oc.theta_plus if oc.redesign_needed else oc.theta_pre,
                v_pre=oc.v_pre,
                v_post=oc.v_plus,
                phi=query.frame.phi,
                lam=oc.lam,
                mu=oc.mu,
                q=q_after,
            )
        )

    out.jumps += sum(1 for r in records if isinstance(r, (CollisionRecord, SwitchRecord)))
    return (out, records, post_speeds)


# --------------------------------------------------------------------------
# Executor


def _norm3(state: RobotState, target: RobotState) -> float:
    return math.sqrt(
        (state.x - target.x) ** 2 + (state.y - target.y) ** 2 + (state.theta - target.theta) ** 2
    )


def simulate(scenario: Scenario, sim_mode: SimMode = SimMode.REDESIGNED) -> Trace:
    """Run one deterministic simulation and return the full trace.

    Terminates when every robot has been within target tolerance, when
    t reaches t_max, or when the jump counter hits the scenario's cap
    (recorded as a fatal non-convergence fault).  Raises
    PenetrationError/NonSeparableError on integration or separation
    failures, and ValueError when the scenario does not validate.
    """
    violations = validate_scenario(scenario)
    if violations:
        raise ValueError("scenario does not validate: " + "; ".join(violations))

    robots = sorted(scenario.robots(), key=lambda b: b.id)
    robot_ids = [b.id for b in robots]
    bodies = scenario.bodies
    params = scenario.params
    pairs = _contact_pairs(scenario)
    # Clearance list per robot for the reactivation test: every other body.
    other_bodies: dict[int, list[Body]] = {
        rid: [b for b in bodies if b.id != rid] for rid in robot_ids
    }

    hs = HybridState(
        t=0.0,
        states={b.id: b.state() for b in robots},
        modes={b.id: Mode.PREDEFINED for b in robots},
        phases={b.id: None for b in robots},
    )
    records: list = []
    reached = {rid: False for rid in robot_ids}
    fatal = False
    # Per-instant bookkeeping (cleared whenever t advances): robots already
    # involved in a collision, and the pairs already resolved.
    collided_marks: set[int] = set()
    resolved_pairs: set[tuple[int, int]] = set()

    def clearance_ok(rid: int) -> bool:
        px, py = hs.states[rid].position
        r_i = scenario.body(rid).radius
        for b in other_bodies[rid]:
            if b.is_robot:
                bx, by = hs.states[b.id].position
            else:
                bx, by = b.x, b.y
            if math.hypot(px - bx, py - by) <= r_i + b.radius:
                return False
        return True

    def cap_fault() -> bool:
        nonlocal fatal
        if hs.jumps >= scenario.jump_cap:
            records.append(
                FaultRecord(
                    t=hs.t,
                    reason=f"non-convergent: jump counter reached the cap ({scenario.jump_cap})",
                    fatal=True,
                )
            )
            fatal = True
            return True
        return False

    def compute_inputs() -> dict[int, ControlInput]:
        positions = {rid: hs.states[rid].position for rid in robot_ids}
        out: dict[int, ControlInput] = {}
        for rid in robot_ids:
            if hs.modes[rid] is Mode.LOCAL:
                out[rid] = local_control(hs.phases[rid])
            else:
                decision = predefined_control(
                    rid, hs.states[rid], scenario.targets[rid], bodies, positions, params
                )
                out[rid] = decision.u
        return out

    def apply_jump(event: ContactEvent | ReactivationEvent, inputs: dict[int, ControlInput] | None):
        nonlocal hs
        hs, recs, post_speeds = jump(hs, event, scenario, sim_mode)
        records.extend(recs)
        if inputs is not None:
            for rid, v_plus in post_speeds.items():
                if hs.modes[rid] is Mode.LOCAL and hs.phases[rid] is not None:
                    inputs[rid] = local_control(hs.phases[rid])
                else:
                    inputs[rid] = ControlInput(v_plus, inputs[rid].w)
        return cap_fault()

    def contact_sweep(inputs: dict[int, ControlInput]) -> None:
        # Resolve all touching-and-approaching pairs at the current instant.
        # Each robot participates in at most one collision per instant;
        # extra simultaneous contacts are deferred with a warning.
        progress = True
        while progress and not fatal:
            progress = False
            for (i, j, rsum, j_is_robot) in pairs:
                state_i = hs.states[i]
                if j_is_robot:
                    state_j = hs.states[j]
                    jx, jy = state_j.x, state_j.y
                else:
                    jb = scenario.body(j)
                    jx, jy = jb.x, jb.y
                gap = math.hypot(jx - state_i.x, jy - state_i.y) - rsum
                if gap > CONTACT_TOL:
                    continue
                body_i = scenario.body(i)
                body_j = scenario.body(j)
                query = ContactQuery.build(
                    i_id=i,
                    j_id=j,
                    p_i=state_i.position,
                    p_j=(jx, jy),
                    r_i=body_i.radius,
                    r_j=body_j.radius,
                    m_i=body_i.mass,
                    m_j=body_j.mass,
                    v_i=inputs[i].v,
                    v_j=inputs[j].v if j_is_robot else 0.0,
                    theta_i=state_i.theta,
                    theta_j=hs.states[j].theta if j_is_robot else 0.0,
                )
                if check_collision(query) is not ContactStatus.JUMP:
                    continue
                if (i, j) in resolved_pairs:
                    # this pair already jumped at this instant; it flows on
                    continue
                if i in collided_marks or (j_is_robot and j in collided_marks):
                    # a robot can take only one collision per instant
                    records.append(
                        FaultRecord(
                            t=hs.t,
                            reason=f"simultaneous contacts at one instant; pair ({i}, {j}) deferred",
                            fatal=False,
                        )
                    )
                    continue
                event = ContactEvent(
                    robot_id=i,
                    other_id=j,
                    v_robot=inputs[i].v,
                    v_other=inputs[j].v if j_is_robot else 0.0,
                )
                collided_marks.add(i)
                if j_is_robot:
                    collided_marks.add(j)
                resolved_pairs.add((i, j))
                progress = True
                if apply_jump(event, inputs):
                    return

    while True:
        # Local-phase expiries: reactivate when clearance holds, otherwise
        # extend the phase (bounded; raises NonSeparableError at the cap).
        if not fatal:
            for rid in robot_ids:
                phase = hs.phases[rid]
                if phase is not None and phase.expired():
                    if clearance_ok(rid):
                        if apply_jump(ReactivationEvent(rid), None):
                            break
                    else:
                        phase.extend()
        if not fatal:
            for rid in robot_ids:
                if not reached[rid] and _norm3(hs.states[rid], scenario.targets[rid]) <= scenario.target_tolerance:
                    reached[rid] = True
                    records.append(TargetReachedRecord(t=hs.t, robot_id=rid))

        inputs = compute_inputs() if not fatal else {rid: ControlInput(0.0, 0.0) for rid in robot_ids}
        if not fatal:
            contact_sweep(inputs)

        for rid in robot_ids:
            s = hs.states[rid]
            u = inputs[rid]
            records.append(
                FlowSample(
                    t=hs.t, robot_id=rid, x=s.x, y=s.y, theta=s.theta, v=u.v, w=u.w, q=hs.modes[rid].value
                )
            )

        if fatal or all(reached.values()) or hs.t >= scenario.t_max - 1e-12:
            break

        h = min(scenario.dt, scenario.t_max - hs.t)
        for rid in robot_ids:
            phase = hs.phases[rid]
            if phase is not None:
                remaining = phase.t_dur + phase.extension - phase.elapsed
                if remaining > 0.0:
                    h = min(h, remaining)

        next_states = {rid: step_flow(hs.states[rid], inputs[rid], h) for rid in robot_ids}
        hit = detect_event(scenario, hs.states, inputs, h, next_states)
        if hit is None:
            hs.states = next_states
            advance = h
        else:
            advance = hit.t_offset
            hs.states = {
                rid: step_flow(hs.states[rid], inputs[rid], advance) for rid in robot_ids
            }
        hs.t += advance
        for rid in robot_ids:
            phase = hs.phases[rid]
            if phase is not None:
                phase.elapsed += advance
        collided_marks.clear()
        resolved_pairs.clear()

        if hit is not None:
            for extra_pair in hit.simultaneous:
                records.append(
                    FaultRecord(
                        t=hs.t,
                        reason=(
                            "simultaneous contact crossings; pair "
                            f"({extra_pair[0]}, {extra_pair[1]}) deferred"
                        ),
                        fatal=False,
                    )
                )
            event = ContactEvent(
                robot_id=hit.robot_id,
                other_id=hit.other_id,
                v_robot=inputs[hit.robot_id].v,
                v_other=inputs[hit.other_id].v if hit.other_id in inputs else 0.0,
            )
            collided_marks.add(hit.robot_id)
            if hit.other_id in inputs:
                collided_marks.add(hit.other_id)
            resolved_pairs.add((hit.robot_id, hit.other_id))
            if apply_jump(event, None):
                # Cap hit exactly at this event: fall through to emit the
                # closing samples on the next loop pass.
                continue

    return Trace(scenario=scenario, sim_mode=sim_mode, records=records)


# --------------------------------------------------------------------------
# Metrics


@dataclass(slots=True)
class RobotMetrics:
    reached: bool
    completion_time: float | None
    collisions: int
    min_clearance: float | None


@dataclass(slots=True)
class TraceMetrics:
    robots: dict[int, RobotMetrics]
    total_jumps: int
    fault: bool
    fault_reasons: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "robots": {
                str(rid): {
                    "reached": m.reached,
                    "completion_time": m.completion_time,
                    "collisions": m.collisions,
                    "min_clearance": m.min_clearance,
                }
                for rid, m in sorted(self.robots.items())
            },
            "total_jumps": self.total_jumps,
            "fault": self.fault,
            "fault_reasons": list(self.fault_reasons),
        }


def metrics(trace: Trace) -> TraceMetrics:
    """Pure fold over the trace records."""
    scenario = trace.scenario
    robot_ids = sorted(scenario.robot_ids())
    radii = {b.id: b.radius for b in scenario.bodies}
    obstacles = [(b.x, b.y, b.radius) for b in scenario.obstacles()]

    per_robot = {
        rid: RobotMetrics(reached=False, completion_time=None, collisions=0, min_clearance=None)
        for rid in robot_ids
    }
    total_jumps = 0
    fault = False
    reasons: list[str] = []
    last_sample: dict[int, FlowSample] = {}

    def update_clearance(rid: int, value: float) -> None:
        m = per_robot[rid]
        if m.min_clearance is None or value < m.min_clearance:
            m.min_clearance = value

    for record in trace.records:
        if isinstance(record, FlowSample):
            rid = record.robot_id
            for (ox, oy, orad) in obstacles:
                update_clearance(
                    rid, math.hypot(record.x - ox, record.y - oy) - (radii[rid] + orad)
                )
            for other_id, other in last_sample.items():
                if other_id != rid and other.t == record.t:
                    clearance = (
                        math.hypot(record.x - other.x, record.y - other.y)
                        - (radii[rid] + radii[other_id])
                    )
                    update_clearance(rid, clearance)
                    update_clearance(other_id, clearance)
            last_sample[rid] = record
        elif isinstance(record, CollisionRecord):
            per_robot[record.robot_id].collisions += 1
            total_jumps += 1
        elif isinstance(record, SwitchRecord):
            total_jumps += 1
        elif isinstance(record, TargetReachedRecord):
            m = per_robot[record.robot_id]
            if not m.reached:
                m.reached = True
                m.completion_time = record.t
        elif isinstance(record, FaultRecord):
            if record.fatal:
                fault = True
            reasons.append(record.reason)

    return TraceMetrics(
        robots=per_robot, total_jumps=total_jumps, fault=fault, fault_reasons=tuple(reasons)
    )


# --------------------------------------------------------------------------
# Trace serialization

CSV_HEADER = "t,record_type,robot_id,other_id,x,y,theta,v,w,q,extra"


def _fmt(value: float) -> str:
    # 17 significant digits round-trips IEEE doubles bit-exactly.
    return format(value, ".17g")


def _csv_row(record: TraceRecord) -> str:
    t = _fmt(record.t)
    if isinstance(record, FlowSample):
        cells = [
            t, "sample", str(record.robot_id), "",
            _fmt(record.x), _fmt(record.y), _fmt(record.theta),
            _fmt(record.v), _fmt(record.w), str(record.q), "",
        ]
    elif isinstance(record, CollisionRecord):
        extra = (
            f"theta_pre={_fmt(record.theta_pre)};v_pre={_fmt(record.v_pre)};"
            f"phi={_fmt(record.phi)};lam={_fmt(record.lam)};mu={_fmt(record.mu)}"
        )
        cells = [
            t, "collision", str(record.robot_id), str(record.other_id),
            _fmt(record.x), _fmt(record.y), _fmt(record.theta_post),
            _fmt(record.v_post), "", str(record.q), extra,
        ]
    elif isinstance(record, ImpulseRecord):
        cells = [
            t, "impulse", str(record.robot_id), "",
            "", "", _fmt(record.theta_escape), "", "", "",
            f"dtheta={_fmt(record.dtheta)}",
        ]
    elif isinstance(record, SwitchRecord):
        cells = [
            t, "switch", str(record.robot_id), "",
            "", "", "", "", "", str(record.q_to), f"from={record.q_from}",
        ]
    elif isinstance(record, TargetReachedRecord):
        cells = [t, "target_reached", str(record.robot_id), "", "", "", "", "", "", "", ""]
    elif isinstance(record, FaultRecord):
        reason = record.reason.replace(",", ";")
        cells = [t, "fault", "", "", "", "", "", "", "", "", f"{reason};fatal={int(record.fatal)}"]
    else:  # pragma: no cover - records are a closed union
        raise TypeError(f"unknown record {record!r}")
    return ",".join(cells)


def trace_to_csv(trace: Trace) -> str:
    lines = [CSV_HEADER]
    lines.extend(_csv_row(r) for r in trace.records)
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(trace_to_csv(trace))


def plot_csv(trace: Trace, robot_id: int) -> str:
    lines = ["t,x,y,theta,v,w"]
    for s in trace.samples(robot_id):
        lines.append(
            ",".join((_fmt(s.t), _fmt(s.x), _fmt(s.y), _fmt(s.theta), _fmt(s.v), _fmt(s.w)))
        )
    return "\n".join(lines) + "\n"


def write_plot_csv(trace: Trace, robot_id: int, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(plot_csv(trace, robot_id))
