"""Contact detection and elastic collision resolution for cylinder pairs.

A contact event changes only headings and linear speeds: positions and
angular velocities are untouched, and the velocity component along the
pair frame's x-axis (tangential) is preserved exactly.  The component
along the y-axis (the line of centers) follows the one-dimensional
momentum/kinetic-energy exchange, optionally damped by a per-robot loss
coefficient delta, with the unbounded-mass case handled as an exact limit.

Post-collision velocities are reported in canonical form: a nonnegative
speed plus a quadrant-aware global heading.  (Carrying the normal sign on
the speed instead does not recompose to the post-collision velocity
vector; see the repo README for the convention note.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .frames import LocalFrame, build_local_frame

TWO_PI = 2.0 * math.pi

# |gap| <= CONTACT_TOL counts as touching; gap < -CONTACT_TOL is penetration
# and signals an integration fault.
CONTACT_TOL = 1e-9

# Headings whose post-collision change (mod 2*pi) stays below this are
# treated as unchanged: the robot keeps flowing and no redesign is needed.
HEADING_TOL = 1e-9

# Minimum normal closing speed for an approach to register; filters out
# sin() rounding noise when a robot slides exactly along the tangent.
APPROACH_EPS = 1e-12


class ContactStatus(Enum):
    FLOW = "flow"
    JUMP = "jump"


class PenetrationError(RuntimeError):
    """Bodies overlap beyond tolerance; event localization was missed."""


@dataclass(frozen=True, slots=True)
class ContactQuery:
    """Snapshot of a body pair at a candidate contact instant.

    Body i is always a robot; body j may be the other robot or a static
    obstacle (static bodies carry v = w = theta = 0).  Speeds are the
    currently commanded linear velocities.
    """

    i_id: int
    j_id: int
    p_i: tuple[float, float]
    p_j: tuple[float, float]
    r_i: float
    r_j: float
    m_i: float
    m_j: float  # may be math.inf
    v_i: float
    v_j: float
    theta_i: float
    theta_j: float
    frame: LocalFrame

    @classmethod
    def build(
        cls,
        i_id: int,
        j_id: int,
        p_i: tuple[float, float],
        p_j: tuple[float, float],
        r_i: float,
        r_j: float,
        m_i: float,
        m_j: float,
        v_i: float,
        v_j: float = 0.0,
        theta_i: float = 0.0,
        theta_j: float = 0.0,
    ) -> "ContactQuery":
        return cls(
            i_id=i_id,
            j_id=j_id,
            p_i=p_i,
            p_j=p_j,
            r_i=r_i,
            r_j=r_j,
            m_i=m_i,
            m_j=m_j,
            v_i=v_i,
            v_j=v_j,
            theta_i=theta_i,
            theta_j=theta_j,
            frame=build_local_frame(p_i, p_j),
        )


@dataclass(frozen=True, slots=True)
class CollisionOutcome:
    """Post-collision motion of one robot.

    lam and mu are the local velocity components along the pair frame's
    y- and x-axis after the exchange; v_plus = hypot(lam, mu) >= 0 and
    theta_plus recomposes them exactly:
    v_plus * (cos(theta_plus - phi), sin(theta_plus - phi)) = (mu, lam).
    """

    body_id: int
    theta_pre: float
    v_pre: float
    theta_plus: float
    v_plus: float
    lam: float
    mu: float
    redesign_needed: bool


def normal_speeds(query: ContactQuery) -> tuple[float, float]:
    """Velocity components of both bodies along the line of centers."""
    phi = query.frame.phi
    return (
        query.v_i * math.sin(query.theta_i - phi),
        query.v_j * math.sin(query.theta_j - phi),
    )


def check_collision(query: ContactQuery, tol: float = CONTACT_TOL) -> ContactStatus:
    """Decide whether the pair flows or jumps at this instant.

    Jump requires touching (|distance - radii sum| <= tol) AND a strict
    normal approach; touching pairs that drift apart or slide flow on.
    Raises PenetrationError when the gap is below -tol.
    """
    dist = math.hypot(query.p_j[0] - query.p_i[0], query.p_j[1] - query.p_i[1])
    gap = dist - (query.r_i + query.r_j)
    if gap < -tol:
        raise PenetrationError(
            f"bodies {query.i_id} and {query.j_id} overlap by {-gap:.3e} m (tolerance {tol:.1e})"
        )
    if gap > tol:
        return ContactStatus.FLOW
    v_iy, v_jy = normal_speeds(query)
    if v_iy - v_jy > APPROACH_EPS:
        return ContactStatus.JUMP
    return ContactStatus.FLOW


def resolve_normal(
    m_i: float,
    m_j: float,
    v_iy: float,
    v_jy: float,
    delta_i: float = 0.0,
    delta_j: float = 0.0,
) -> tuple[float, float]:
    """One-dimensional exchange of the normal velocity components.

    For finite masses this is the standard elastic pair exchange; an
    unbounded m_j uses the exact immovable limit (reflection about the
    other body's velocity).  delta scales each robot's outgoing component
    by (1 - delta) to model per-collision energy loss.
    """
    if math.isinf(m_i):
        raise ValueError("body i must have finite mass (robots are never unbounded)")
    if math.isinf(m_j):
        v_iy_plus = (1.0 - delta_i) * (-v_iy + 2.0 * v_jy)
        return (v_iy_plus, v_jy)
    total = m_i + m_j
    v_iy_plus = (1.0 - delta_i) * (((m_i - m_j) / total) * v_iy + (2.0 * m_j / total) * v_jy)
    v_jy_plus = (1.0 - delta_j) * (((m_j - m_i) / total) * v_jy + (2.0 * m_i / total) * v_iy)
    return (v_iy_plus, v_jy_plus)


def post_velocity(lam: float, mu: float, phi: float, theta_prev: float) -> tuple[float, float]:
    """Recompose local components (mu along x, lam along y) into (theta+, v+).

    The speed is nonnegative and the heading carries the full direction;
    when both components vanish the speed is zero and the previous heading
    is retained.
    """
    v_plus = math.hypot(lam, mu)
    if v_plus == 0.0:
        return (theta_prev, 0.0)
    return (phi + math.atan2(lam, mu), v_plus)


def heading_changed(theta_pre: float, theta_plus: float, tol: float = HEADING_TOL) -> bool:
    """True when the two headings differ by more than tol modulo 2*pi."""
    diff = (theta_plus - theta_pre) % TWO_PI
    return min(diff, TWO_PI - diff) > tol


def resolve_collision(
    query: ContactQuery,
    delta_i: float = 0.0,
    delta_j: float = 0.0,
    body_j_is_robot: bool = False,
) -> tuple[CollisionOutcome, CollisionOutcome | None]:
    """Resolve a contact for robot i (and for j when j is also a robot).

    Tangential components are carried over unchanged; positions and
    angular velocities never change.  A static unbounded body j stays at
    zero velocity and no outcome is produced for it unless it is a robot.
    """
    phi = query.frame.phi
    theta_bar_i = query.theta_i - phi
    theta_bar_j = query.theta_j - phi
    mu_i = query.v_i * math.cos(theta_bar_i)
    v_iy = query.v_i * math.sin(theta_bar_i)
    mu_j = query.v_j * math.cos(theta_bar_j)
    v_jy = query.v_j * math.sin(theta_bar_j)

    lam_i, lam_j = resolve_normal(query.m_i, query.m_j, v_iy, v_jy, delta_i, delta_j)

    theta_i_plus, v_i_plus = post_velocity(lam_i, mu_i, phi, query.theta_i)
    outcome_i = CollisionOutcome(
        body_id=query.i_id,
        theta_pre=query.theta_i,
        v_pre=query.v_i,
        theta_plus=theta_i_plus,
        v_plus=v_i_plus,
        lam=lam_i,
        mu=mu_i,
        redesign_needed=heading_changed(query.theta_i, theta_i_plus),
    )

    outcome_j = None
    if body_j_is_robot:
        theta_j_plus, v_j_plus = post_velocity(lam_j, mu_j, phi, query.theta_j)
        outcome_j = CollisionOutcome(
            body_id=query.j_id,
            theta_pre=query.theta_j,
            v_pre=query.v_j,
            theta_plus=theta_j_plus,
            v_plus=v_j_plus,
            lam=lam_j,
            mu=mu_j,
            redesign_needed=heading_changed(query.theta_j, theta_j_plus),
        )
    return (outcome_i, outcome_j)
