"""Capacity and secrecy-capacity evaluation for a given weight vector.

Capacities are in bits/s/Hz.  Cooperative capacities carry the factor 1/2
for the two time slots of the decode-and-forward protocol; the direct
transmission baseline occupies a single slot and has no such factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, TargetUnachievable
from .numerics import as_matrix, as_vector

LN2 = math.log(2.0)


@dataclass(frozen=True)
class Stage1Accounting:
    """Maximal-ratio combining of the stage-1 local broadcast.

    When enabled, the leading ``1`` inside each stage-2 capacity is replaced
    by ``alpha = 1 + P1 |h0|^2 / noise`` at the destination and by
    ``mu_j = 1 + P1 |g0j|^2 / noise`` at eavesdropper ``j``.
    """

    enabled: bool = False
    stage1_power: float = 0.0

    def __post_init__(self):
        if self.stage1_power < 0:
            raise ValueError("stage1_power must be non-negative")

    def offset(self, gain0: complex, noise_power: float) -> float:
        if not self.enabled:
            return 1.0
        return 1.0 + self.stage1_power * abs(gain0) ** 2 / noise_power


OFF = Stage1Accounting()


@dataclass(frozen=True, eq=False)
class BeamformerSolution:
    w: np.ndarray
    transmit_power: float
    c_dest: float
    c_eav: tuple[float, ...]
    secrecy_capacity: float
    meta: dict = field(default_factory=dict)

    @property
    def secrecy_is_bound(self) -> bool:
        """True when ``secrecy_capacity`` is the ergodic lower bound."""
        return bool(self.meta.get("lower_bound", False))


def half_log2(offset: float, snr: float) -> float:
    """``0.5 * log2(offset + snr)`` evaluated without cancellation for small snr."""
    return 0.5 * (math.log(offset) + math.log1p(snr / offset)) / LN2


def _received_snr(w: np.ndarray, gain: np.ndarray, noise_power: float) -> float:
    if w.shape != gain.shape:
        raise DimensionMismatch(f"w has shape {w.shape}, channel has {gain.shape}")
    return abs(np.vdot(w, gain)) ** 2 / noise_power


def capacity_destination(w, h, noise_power: float, stage1: Stage1Accounting = OFF, h0=None) -> float:
    """Destination capacity ``0.5 log2(alpha + |w^H h|^2 / noise)``.

    ``h0`` is the source-to-destination gain used by stage-1 accounting; it
    defaults to ``h[0]`` since node 0 is the source.
    """
    w, h = as_vector(w, "w"), as_vector(h, "h")
    if noise_power <= 0:
        raise ValueError("noise_power must be positive")
    snr = _received_snr(w, h, noise_power)
    alpha = stage1.offset(h[0] if h0 is None else h0, noise_power)
    return half_log2(alpha, snr)


def capacity_eavesdropper(w, g_j, noise_power: float, stage1: Stage1Accounting = OFF, g0j=None) -> float:
    """Capacity at one eavesdropper, same form as :func:`capacity_destination`."""
    w, g_j = as_vector(w, "w"), as_vector(g_j, "g_j")
    if noise_power <= 0:
        raise ValueError("noise_power must be positive")
    snr = _received_snr(w, g_j, noise_power)
    mu = stage1.offset(g_j[0] if g0j is None else g0j, noise_power)
    return half_log2(mu, snr)


def secrecy_capacity(c_dest: float, c_eav: Sequence[float]) -> float:
    if len(c_eav) == 0:
        return float(c_dest)
    return max(0.0, float(c_dest) - max(c_eav))


def evaluate(
    w,
    h,
    G,
    noise_power: float,
    stage1: Stage1Accounting = OFF,
    r_delta=None,
    meta: dict | None = None,
) -> BeamformerSolution:
    """Bundle ``w`` with its power and capacities.

    With ``r_delta`` given, each eavesdropper term uses the expected
    correlation ``g_j g_j^H + r_delta`` (``G`` then holds the estimates) and
    the secrecy value is the Jensen lower bound on the ergodic secrecy
    capacity.
    """
    w, h = as_vector(w, "w"), as_vector(h, "h")
    G = as_matrix(np.reshape(G, (h.shape[0], -1)), "G")
    if w.shape != h.shape:
        raise DimensionMismatch("w and h differ in length")
    c_d = capacity_destination(w, h, noise_power, stage1)
    c_e = []
    for j in range(G.shape[1]):
        g = G[:, j]
        if r_delta is None:
            c_e.append(capacity_eavesdropper(w, g, noise_power, stage1))
        else:
            snr = (abs(np.vdot(w, g)) ** 2 + np.vdot(w, r_delta @ w).real) / noise_power
            c_e.append(half_log2(stage1.offset(g[0], noise_power), max(snr, 0.0)))
    info = dict(meta or {})
    if r_delta is not None:
        info["lower_bound"] = True
    return BeamformerSolution(
        w=w,
        transmit_power=float(np.vdot(w, w).real),
        c_dest=c_d,
        c_eav=tuple(c_e),
        secrecy_capacity=secrecy_capacity(c_d, c_e),
        meta=info,
    )


def stage1_validity(w, h, g, noise_power: float, stage1: Stage1Accounting) -> dict:
    """Check the monotonicity condition that the min-power duality needs.

    Scaling ``w`` by ``z`` changes the secrecy quotient
    ``(alpha s2 + z^2 a) / (mu s2 + z^2 b)`` with derivative sign
    ``mu a - alpha b``.  Both orderings are reported.
    """
    w, h, g = as_vector(w), as_vector(h), as_vector(g)
    a = abs(np.vdot(w, h)) ** 2
    b = abs(np.vdot(w, g)) ** 2
    alpha = stage1.offset(h[0], noise_power)
    mu = stage1.offset(g[0], noise_power)
    return {
        "alpha": alpha,
        "mu": mu,
        "mu_a_gt_alpha_b": mu * a > alpha * b,
        "alpha_a_gt_mu_b": alpha * a > mu * b,
    }


def _direct_terms(h0, g0, noise_power):
    a = abs(complex(h0)) ** 2 / noise_power
    b = max((abs(complex(x)) ** 2 for x in np.atleast_1d(g0)), default=0.0) / noise_power
    return a, b


def direct_secrecy(power: float, h0, g0, noise_power: float) -> float:
    """Secrecy capacity of source-only transmission in a single time slot."""
    if power < 0:
        raise ValueError("power must be non-negative")
    a, b = _direct_terms(h0, g0, noise_power)
    return max(0.0, (math.log1p(power * a) - math.log1p(power * b)) / LN2)


def direct_solution(power: float, h, G, noise_power: float) -> BeamformerSolution:
    """Source-only transmission at ``power`` expressed as a weight vector.

    Capacities are single-slot (no 1/2 factor).
    """
    h = as_vector(h, "h")
    G = as_matrix(np.reshape(G, (h.shape[0], -1)), "G")
    w = np.zeros_like(h)
    w[0] = math.sqrt(power)
    c_d = math.log1p(power * abs(h[0]) ** 2 / noise_power) / LN2
    c_e = tuple(math.log1p(power * abs(x) ** 2 / noise_power) / LN2 for x in G[0, :])
    return BeamformerSolution(
        w=w,
        transmit_power=float(power),
        c_dest=c_d,
        c_eav=c_e,
        secrecy_capacity=direct_secrecy(power, h[0], G[0, :], noise_power),
        meta={"design": "direct", "rate_factor": 1.0},
    )


def direct_min_power(target_cs: float, h0, g0, noise_power: float) -> float:
    """Smallest source power whose direct secrecy capacity reaches ``target_cs``.

    Raises TargetUnachievable when ``|h0|^2 <= 2^target * max_j |g0j|^2``.
    """
    if not target_cs > 0:
        raise ValueError("target_cs must be positive")
    a, b = _direct_terms(h0, g0, noise_power)
    ratio = 2.0**target_cs
    denom = a - ratio * b
    if not denom > 0:
        raise TargetUnachievable("eavesdropper channel too strong for direct transmission")
    return math.expm1(target_cs * LN2) / denom
