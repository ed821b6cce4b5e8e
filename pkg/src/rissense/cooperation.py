"""Composition of localization information across time and receivers.

All composition happens on the equivalent-information ellipsoid forms:
per-pair and per-receiver contributions are rank-decomposed along each
link's own range/azimuth/elevation directions and summed.  A receiver
with self-positioning covariance Q contributes a harmonically shrunk
ellipsoid; the general (anisotropic) case evaluates the exact Schur
complement of the joint [position, receiver-position] information, which
reduces to the per-direction shrink whenever Q is diagonal in the link
frame.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .channel import RisPhaseProfile, profile_delta
from .fisher import crlb, efim_position
from .scenario import ReceiverNode, Scenario

Schedule = Union[str, Sequence[RisPhaseProfile]]


@dataclass(frozen=True)
class CooperationPlan:
    """Receivers plus an observation schedule.

    ``phase_schedule`` is either "alternating" (the optimal pair applied
    in alternation, per receiver in disjoint time slots) or an explicit
    sequence of per-instant profiles.
    """

    receivers: tuple[ReceiverNode, ...]
    instants: int = 2
    phase_schedule: Schedule = "alternating"

    def __post_init__(self):
        if self.instants < 2:
            raise ValueError("a plan needs at least two observation instants")
        if not self.receivers:
            raise ValueError("a plan needs at least one receiver")
        if not isinstance(self.phase_schedule, str):
            if len(self.phase_schedule) != self.instants:
                raise ValueError("explicit schedules need one profile per instant")


def _single_receiver(scenario: Scenario, node: ReceiverNode) -> Scenario:
    """Scenario view with ``node`` as the only receiver.

    Profiles are re-optimized for the node (time-division slots) and the
    gain is re-solved at the node's design geometry unless the scenario
    pins an explicit gain.
    """
    return replace(scenario, receivers=(node,), rx_actual=None, ris_profiles=None)


def efim_time(scenario: Scenario, instants: Optional[int] = None, schedule: Schedule = "alternating") -> np.ndarray:
    """EFIM accumulated over T observation instants (T-1 differenced pairs).

    Under the optimal alternating schedule every pair contributes the
    same ellipsoid, so the result equals (T-1) times the single-pair
    EFIM; explicit schedules are evaluated pair by pair.
    """
    t_count = scenario.instants if instants is None else instants
    if t_count < 2:
        raise ValueError("instants must be >= 2")

    base = scenario.resolved()
    total = np.zeros((3, 3))
    if isinstance(schedule, str):
        if schedule != "alternating":
            raise ValueError(f"unknown schedule {schedule!r}")
        from .scenario import link_state

        minus, plus = link_state(base).profiles
        # consecutive pairs see the profile difference with opposite
        # signs; evaluate both orderings rather than assuming symmetry
        per_parity = {
            0: efim_position(replace(base, ris_profiles=(minus, plus))).matrix(),
            1: efim_position(replace(base, ris_profiles=(plus, minus))).matrix(),
        }
        for i in range(1, t_count):
            total += per_parity[i % 2]
        return total

    profiles = list(schedule)
    if len(profiles) != t_count:
        raise ValueError("explicit schedules need one profile per instant")
    for i in range(1, t_count):
        pair_scenario = replace(base, ris_profiles=(profiles[i - 1], profiles[i]))
        if np.allclose(profile_delta(profiles[i - 1], profiles[i]), 0.0):
            continue  # identical configurations carry no differential signal
        total += efim_position(pair_scenario).matrix()
    return total


def efim_network(scenario: Scenario, receivers: Optional[Sequence[ReceiverNode]] = None) -> np.ndarray:
    """EFIM of K cooperating anchor receivers (one pair each).

    Each receiver gets its own optimally phased time slot; contributions
    add along each receiver's own direction triad.
    """
    nodes = tuple(receivers) if receivers is not None else scenario.receivers
    if not nodes:
        raise ValueError("at least one receiver is required")
    for node in nodes:
        if not node.is_anchor:
            raise ValueError("efim_network expects anchors; use efim_with_self_error")
    total = np.zeros((3, 3))
    for node in nodes:
        total += efim_position(_single_receiver(scenario, node)).matrix()
    return total


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def efim_with_self_error(scenario: Scenario, node: ReceiverNode) -> np.ndarray:
    """EFIM contribution of a receiver with position covariance Q.

    In the link frame the contribution is B - B (B + Q~^-1)^-1 B, with B
    the diagonal of information intensities and Q~ the covariance
    rotated into the frame.  For Q~ diagonal this is the per-direction
    harmonic shrink lambda * eps^-1 / (lambda + eps^-1); Q = 0 returns
    the anchor ellipsoid unchanged, and the contribution vanishes as Q
    grows without bound.
    """
    single = _single_receiver(scenario, node)
    ell = efim_position(single)
    if node.is_anchor:
        return ell.matrix()

    q = np.asarray(node.error_cov, dtype=float)
    u = ell.basis
    b = ell.intensities
    q_tilde = u.T @ q @ u

    off = q_tilde - np.diag(np.diag(q_tilde))
    if np.max(np.abs(off)) <= 1e-12 * max(np.abs(q_tilde).max(), 1e-300):
        eps = np.diag(q_tilde)
        shrunk = b / (1.0 + eps * b)
        return (u * shrunk) @ u.T

    # General covariance: exact Schur complement in the link frame,
    # written with Q^(1/2) so singular covariances stay well defined.
    b_mat = np.diag(b)
    q_half = _psd_sqrt(q_tilde)
    inner = q_half @ b_mat @ q_half + np.eye(3)
    shrunk_mat = b_mat - b_mat @ q_half @ np.linalg.solve(inner, q_half @ b_mat)
    return u @ shrunk_mat @ u.T


def efim_plan(scenario: Scenario, plan: CooperationPlan) -> np.ndarray:
    """Total EFIM of a cooperation plan (receivers x instants).

    Anchor receivers contribute time-accumulated ellipsoids; receivers
    with self-positioning error contribute shrunk ellipsoids, likewise
    accumulated over the plan's instants.
    """
    total = np.zeros((3, 3))
    pairs = plan.instants - 1
    for node in plan.receivers:
        if node.is_anchor:
            total += efim_time(_single_receiver(scenario, node), plan.instants, plan.phase_schedule)
        else:
            total += pairs * efim_with_self_error(scenario, node)
    return total


def crlb_sandwich(
    scenario: Scenario,
    anchors: Sequence[ReceiverNode],
    extra: ReceiverNode,
) -> tuple[float, float, float]:
    """CRLB of (K+1 perfect, K perfect + errored extra, K perfect).

    The middle value is sandwiched by the outer two for every positive
    semidefinite receiver covariance.
    """
    if not anchors:
        raise ValueError("at least one anchor is required")
    f_anchors = efim_network(scenario, anchors)
    extra_anchor = ReceiverNode(extra.position, extra.array, None)
    f_perfect = efim_position(_single_receiver(scenario, extra_anchor)).matrix()
    f_err = efim_with_self_error(scenario, extra)
    return (
        crlb(f_anchors + f_perfect),
        crlb(f_anchors + f_err),
        crlb(f_anchors),
    )
