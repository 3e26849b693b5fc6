"""Discrete constraint-respecting updates toward the softmax equilibrium.

Two one-step maps are provided and kept deliberately distinct:

* ``exact_prox_step`` solves the KL-penalized free-energy maximization

      argmax_q  <q, s> + T H(q) - (1/eta) D(q || p)

  exactly.  First-order stationarity with the normalization multiplier gives
  log q_i = (log p_i + eta s_i) / (1 + eta T) + const, i.e.

      q_i  proportional to  p_i^(1/(1+eta*T)) * exp(eta s_i / (1 + eta T)),

  whose fixed point is softmax(s, T) for every eta > 0, and whose one-step
  free-energy gain is at least D(q||p)/eta.

* ``printed_mw_step`` is the plain multiplicative-weights map

      q_i  proportional to  p_i * exp((eta / T) s_i),

  which composes by adding step sizes and therefore drives all mass to the
  top-scoring tokens; its fixed points are faces of the argmax set, not
  softmax, and it carries no one-step ascent guarantee.

Both maps preserve normalization and strict interiority.  Iteration state is
kept as normalized log-probabilities so long concentrating runs survive far
past the underflow point of the probabilities themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import InteriorityError, InvalidInputError
from .simplex import (
    ScoreVector,
    SimplexPoint,
    check_step_size,
    check_temperature,
    log_softmax,
)
from .trajectory import TerminalStatus, TrajectoryRecord, TrajectorySample

DEFAULT_KL_TOL = 1e-12
DEFAULT_STEP_SIZE = 0.5


class MirrorStepKind(Enum):
    EXACT_PROX = "exact-prox"
    PRINTED_MW = "printed-mw"


@dataclass(frozen=True)
class AscentCertificate:
    """One-step record of the free-energy inequality F(q) >= F(p) + D(q||p)/eta.

    ``slack`` is F(q) - F(p) - D(q||p)/eta; it is guaranteed nonnegative (to
    rounding) for the exact prox step only.
    """

    f_before: float
    f_after: float
    kl_move: float
    slack: float


def _require_interior(p: SimplexPoint) -> None:
    if not p.interior:
        raise InteriorityError("step requires a strictly interior point")


def _normalize_logs(ell: np.ndarray) -> np.ndarray:
    m = float(ell.max())
    return ell - (m + math.log(float(np.exp(ell - m).sum())))


def _log_step(ell: np.ndarray, s: np.ndarray, t: float, eta: float, kind: MirrorStepKind) -> np.ndarray:
    if kind is MirrorStepKind.PRINTED_MW:
        return _normalize_logs(ell + (eta / t) * s)
    return _normalize_logs((ell + eta * s) / (1.0 + eta * t))


def _free_energy_logs(ell: np.ndarray, s: np.ndarray, t: float) -> float:
    p = np.exp(ell)
    return float(p @ s) - t * float(p @ ell)


def _kl_logs(ell_q: np.ndarray, ell_p: np.ndarray) -> float:
    q = np.exp(ell_q)
    return max(float(q @ (ell_q - ell_p)), 0.0)


def exact_prox_step(
    p: SimplexPoint, s: ScoreVector, temperature: float, eta: float
) -> SimplexPoint:
    """One exact KL-prox ascent step on the free energy; see module docstring."""
    t = check_temperature(temperature)
    eta = check_step_size(eta)
    _require_interior(p)
    ell = (np.log(p.probs) + eta * s.values) / (1.0 + eta * t)
    w = np.exp(ell - ell.max())
    return SimplexPoint(w / w.sum())


def printed_mw_step(
    p: SimplexPoint, s: ScoreVector, temperature: float, eta: float
) -> SimplexPoint:
    """One multiplicative-weights step q_i = p_i exp((eta/T) s_i) / Z.

    Max-shifted weights make constant scores an exact identity: the shifted
    exponent is identically zero, so q is p renormalized by its own sum.
    """
    t = check_temperature(temperature)
    eta = check_step_size(eta)
    _require_interior(p)
    z = (eta / t) * s.values
    w = p.probs * np.exp(z - z.max())
    return SimplexPoint(w / w.sum())


def ascent_certificate(
    kind: MirrorStepKind, p: SimplexPoint, s: ScoreVector, temperature: float, eta: float
) -> AscentCertificate:
    """Free energy before/after one step plus the prox inequality slack."""
    t = check_temperature(temperature)
    eta = check_step_size(eta)
    _require_interior(p)
    ell_p = _normalize_logs(np.log(p.probs))
    ell_q = _log_step(ell_p, s.values, t, eta, kind)
    f_before = _free_energy_logs(ell_p, s.values, t)
    f_after = _free_energy_logs(ell_q, s.values, t)
    kl_move = _kl_logs(ell_q, ell_p)
    return AscentCertificate(
        f_before=f_before,
        f_after=f_after,
        kl_move=kl_move,
        slack=f_after - f_before - kl_move / eta,
    )


def iterate(
    kind: MirrorStepKind,
    p0: SimplexPoint,
    s: ScoreVector,
    temperature: float,
    eta: float = DEFAULT_STEP_SIZE,
    *,
    max_steps: int = 10000,
    kl_tol: float = DEFAULT_KL_TOL,
) -> TrajectoryRecord:
    """Iterate a step map until the per-step KL move drops below ``kl_tol``.

    Samples use the step index as time; ``field_norm`` carries the per-step
    KL move and ``kl_to_target`` the KL to softmax(s, T).  One certificate is
    attached per executed step.  Hitting ``max_steps`` is reported as status
    MAX_TIME, not raised.
    """
    t = check_temperature(temperature)
    eta = check_step_size(eta)
    if max_steps < 0:
        raise InvalidInputError(f"max_steps must be nonnegative, got {max_steps}")
    _require_interior(p0)

    s_values = s.values
    ell_target = log_softmax(s, t)
    ell = _normalize_logs(np.log(p0.probs))

    def make_sample(step_index: int, ell_now: np.ndarray, f_now: float, kl_move: float) -> TrajectorySample:
        return TrajectorySample(
            t=float(step_index),
            p=SimplexPoint(np.exp(ell_now)),
            free_energy=f_now,
            kl_to_target=_kl_logs(ell_now, ell_target),
            field_norm=kl_move,
        )

    f_now = _free_energy_logs(ell, s_values, t)
    samples = [make_sample(0, ell, f_now, 0.0)]
    certificates: list[AscentCertificate] = []
    status = TerminalStatus.MAX_TIME
    for k in range(1, max_steps + 1):
        ell_next = _log_step(ell, s_values, t, eta, kind)
        kl_move = _kl_logs(ell_next, ell)
        f_next = _free_energy_logs(ell_next, s_values, t)
        certificates.append(
            AscentCertificate(
                f_before=f_now,
                f_after=f_next,
                kl_move=kl_move,
                slack=f_next - f_now - kl_move / eta,
            )
        )
        ell, f_now = ell_next, f_next
        samples.append(make_sample(k, ell, f_now, kl_move))
        if kl_move < kl_tol:
            status = TerminalStatus.CONVERGED
            break
    if max_steps == 0:
        status = TerminalStatus.CONVERGED

    return TrajectoryRecord(
        samples=samples,
        terminal_status=status,
        accepted_steps=len(certificates),
        certificates=certificates,
    )


def step_agreement_exponent(
    p: SimplexPoint,
    s: ScoreVector,
    temperature: float,
    etas=(1e-2, 1e-3, 1e-4),
) -> tuple[float, np.ndarray]:
    """Measured order in eta of the gap between the two one-step maps at the same point.

    Returns (fitted slope of log gap vs log eta, gap per eta).  The two maps
    share their O(eta) velocity only up to the entropic fitness difference,
    so the slope approaches 2 only where T * (centered log p) is small and
    the score scaling matches; the caller records the measurement rather
    than assuming the exponent.
    """
    gaps = np.array(
        [
            float(
                np.max(
                    np.abs(
                        exact_prox_step(p, s, temperature, e).probs
                        - printed_mw_step(p, s, temperature, e).probs
                    )
                )
            )
            for e in etas
        ]
    )
    usable = gaps > 1e-15
    if usable.sum() < 2:
        return math.inf, gaps
    slope = float(
        np.polyfit(np.log(np.asarray(etas)[usable]), np.log(gaps[usable]), 1)[0]
    )
    return slope, gaps
