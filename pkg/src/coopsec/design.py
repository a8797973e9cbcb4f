"""Cooperative beamformer designs.

Single eavesdropper (optimal):
    :func:`max_secrecy_single`, :func:`min_power_single`.
Multiple eavesdroppers (complete nulling, closed form):
    :func:`null_max_secrecy_multi`, :func:`null_min_power_multi`.
Imperfect eavesdropper CSI (ergodic lower bound):
    :func:`imperfect_single_max`, :func:`imperfect_multi_max`,
    :func:`imperfect_min_power`.

All fixed-power designs reduce to maximizing

    (alpha * s2 + |w^H h|^2) / (mu * s2 + w^H Rg w),   w^H w = P0,

optionally with ``w`` restricted to the span of an orthonormal basis.  At
fixed power the constant terms can be written as ``(s2 / P0) w^H w`` and
the problem becomes the generalized eigenproblem of the pencil
``(Rh + alpha s2/P0 I, Rg + mu s2/P0 I)``.

The min-power designs alternate between that maximizer and a closed-form
rescaling that pins the secrecy capacity at the target.  Each rescaled
power is no larger than the previous one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateChannel,
    DimensionMismatch,
    InsufficientNodes,
    MaxIterationsExceeded,
    NotHermitian,
    NotPositiveDefinite,
    RankDeficient,
    TargetUnachievable,
)
from .numerics import (
    HERMITIAN_RTOL,
    RANK_RTOL,
    as_matrix,
    as_vector,
    largest_generalized_eigpair,
    min_norm_solve,
    normalize_phase,
    null_space_basis,
)
from .secrecy import LN2, OFF, BeamformerSolution, Stage1Accounting, evaluate

DEFAULT_THRESHOLD = 1e-9  # watts
DEFAULT_MAX_ITER = 100


class Objective(enum.Enum):
    MAX_SECRECY = "max_secrecy"  # fixed power P0
    MIN_POWER = "min_power"  # fixed secrecy capacity


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Which design to solve and with what fixed quantity.

    ``budget`` is watts for MAX_SECRECY and bits/s/Hz for MIN_POWER.
    ``r_delta`` selects imperfect CSI: a Hermitian PSD matrix, or a scalar
    ``eps`` meaning ``eps * I``.  ``None`` means perfect CSI.
    """

    objective: Objective
    budget: float
    r_delta: np.ndarray | float | None = None
    stage1: Stage1Accounting = OFF
    threshold: float = DEFAULT_THRESHOLD
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if not self.budget > 0:
            raise ValueError("budget must be positive")
        if isinstance(self.r_delta, (int, float)) and self.r_delta < 0:
            raise ValueError("scalar r_delta must be non-negative")

    @property
    def imperfect(self) -> bool:
        return self.r_delta is not None

    def r_delta_matrix(self, n: int) -> np.ndarray | None:
        if self.r_delta is None:
            return None
        if np.isscalar(self.r_delta):
            return float(self.r_delta) * np.eye(n, dtype=np.complex128)
        return check_psd(self.r_delta, n)


@dataclass
class IterationTrace:
    """Powers visited by the min-power iteration.

    ``records[k] = (k, P_k, rho_k)`` where ``rho_k`` scales the fixed-power
    maximizer at ``P_{k-1}`` onto the target (``rho_0`` scales the unit
    initial direction).
    """

    records: list[tuple[int, float, float]] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return max(len(self.records) - 1, 0)

    @property
    def powers(self) -> list[float]:
        return [p for _, p, _ in self.records]


def check_psd(r, n: int) -> np.ndarray:
    r = as_matrix(r, "r_delta")
    if r.shape != (n, n):
        raise DimensionMismatch(f"r_delta must be {n}x{n}, got {r.shape}")
    scale = max(np.linalg.norm(r), np.finfo(float).tiny)
    if np.linalg.norm(r - r.conj().T) > HERMITIAN_RTOL * scale:
        raise NotHermitian("r_delta is not Hermitian")
    r = 0.5 * (r + r.conj().T)
    if np.linalg.eigvalsh(r).min() < -HERMITIAN_RTOL * scale:
        raise NotPositiveDefinite("r_delta is not positive semidefinite")
    return r


def _target_ratio(target_cs: float) -> float:
    return math.exp(2.0 * target_cs * LN2)  # 4 ** target


def _required_excess(target_cs: float, alpha: float, mu: float) -> float:
    """``4**target * mu - alpha`` without cancellation when ``alpha == mu``."""
    return mu * math.expm1(2.0 * target_cs * LN2) + (mu - alpha)


def _eav_matrix(G, n: int) -> np.ndarray:
    if G is None:
        return np.zeros((n, 0), dtype=np.complex128)
    G = np.asarray(G, dtype=np.complex128)
    if G.ndim == 1:
        G = G.reshape(n, -1) if G.size else np.zeros((n, 0), dtype=np.complex128)
    G = as_matrix(G, "G")
    if G.shape[0] != n:
        raise DimensionMismatch(f"G must have {n} rows, got {G.shape}")
    return G


class _Quotient:
    """``(alpha s2 + |w^H h|^2) / (mu s2 + w^H Rg w)`` on the span of ``basis``."""

    def __init__(self, h, Rg, noise_power, alpha=1.0, mu=1.0, basis=None):
        self.noise_power = noise_power
        self.alpha = alpha
        self.mu = mu
        self.basis = basis
        if basis is None:
            self.h = h
            self.Rg = Rg
        else:
            self.h = basis.conj().T @ h
            self.Rg = basis.conj().T @ Rg @ basis
        self.Rh = np.outer(self.h, self.h.conj())
        self.dim = self.h.shape[0]

    def lift(self, q):
        return q if self.basis is None else self.basis @ q

    def terms(self, u):
        a = abs(np.vdot(u, self.h)) ** 2
        b = float(np.vdot(u, self.Rg @ u).real)
        return a, max(b, 0.0)

    def maximize(self, p0):
        """Unit direction maximizing the quotient at power ``p0``, and the maximum."""
        c = self.noise_power / p0
        eye = np.eye(self.dim)
        lam, q = largest_generalized_eigpair(self.Rh + self.alpha * c * eye, self.Rg + self.mu * c * eye)
        return q, lam

    def limit_direction(self):
        """Direction attaining ``sup a/b`` and that supremum (``inf`` if ``h`` escapes ``Rg``)."""
        vals, vecs = np.linalg.eigh(0.5 * (self.Rg + self.Rg.conj().T))
        top = vals.max() if vals.size else 0.0
        null = vals <= RANK_RTOL * top if top > 0 else np.ones(vals.shape, bool)
        coef = vecs.conj().T @ self.h
        hn = np.linalg.norm(self.h)
        if hn == 0:
            return None, 0.0
        if np.linalg.norm(coef[null]) > 1e-8 * hn:
            u = vecs[:, null] @ coef[null]
            return u / np.linalg.norm(u), math.inf
        u = vecs[:, ~null] @ (coef[~null] / vals[~null])
        sup = float(np.sum(np.abs(coef[~null]) ** 2 / vals[~null]))
        return u / np.linalg.norm(u), sup

    def scale_to_target(self, u, ratio, excess):
        """Power putting direction ``u`` exactly on ``quotient = ratio``, or None.

        ``excess`` is ``ratio * mu - alpha``.
        """
        a, b = self.terms(u)
        denom = a - ratio * b
        if not denom > 0:
            return None
        return self.noise_power * excess / denom


def _fixed_power(quot: _Quotient, p0: float) -> np.ndarray:
    q, _ = quot.maximize(p0)
    return math.sqrt(p0) * normalize_phase(quot.lift(q))


def _min_power(quot: _Quotient, target_cs: float, threshold: float, max_iter: int):
    """Alternate fixed-power maximization and rescaling onto the target.

    Returns the weight vector and its trace.
    """
    if not target_cs > 0:
        raise ValueError("target secrecy capacity must be positive")
    ratio = _target_ratio(target_cs)
    excess = _required_excess(target_cs, quot.alpha, quot.mu)
    trace = IterationTrace()
    if excess <= 0:
        # stage-1 signal alone already meets the target
        trace.records.append((0, 0.0, 0.0))
        trace.converged = True
        return np.zeros(quot.basis.shape[0] if quot.basis is not None else quot.dim, complex), trace

    u_lim, sup = quot.limit_direction()
    if not ratio < sup:
        raise TargetUnachievable(
            f"target needs quotient {ratio:.6g} but the supremum over all weights is {sup:.6g}"
        )

    # S0: matched filter, or the asymptotically best direction if that falls short
    u = quot.h / np.linalg.norm(quot.h)
    p = quot.scale_to_target(u, ratio, excess)
    if p is None:
        u = u_lim
        p = quot.scale_to_target(u, ratio, excess)
    trace.records.append((0, p, math.sqrt(p)))
    w = math.sqrt(p) * u

    for k in range(1, max_iter + 1):
        # S1 + S2
        q, _ = quot.maximize(p)
        p_new = quot.scale_to_target(q, ratio, excess)
        if p_new is None or p_new > p:
            # round-off at the fixed point; keep the previous iterate
            trace.converged = True
            break
        trace.records.append((k, p_new, math.sqrt(p_new / p)))
        w = math.sqrt(p_new) * q
        done = p - p_new < threshold
        p = p_new
        if done:
            trace.converged = True
            break
    if not trace.converged:
        raise MaxIterationsExceeded(f"no convergence within {max_iter} iterations (last power {p:.6g})")
    return normalize_phase(quot.lift(w)), trace


# --- single eavesdropper, perfect CSI ---------------------------------------


def _single_inputs(h, g):
    h = as_vector(h, "h")
    g = np.zeros_like(h) if g is None else as_vector(g, "g")
    if g.shape != h.shape:
        raise DimensionMismatch("h and g differ in length")
    if not np.any(h):
        raise DegenerateChannel("destination channel is zero")
    return h, g


def _offsets(h, G, noise_power, stage1):
    alpha = stage1.offset(h[0], noise_power)
    mu = max((stage1.offset(G[0, j], noise_power) for j in range(G.shape[1])), default=1.0)
    return alpha, mu


def max_secrecy_single(h, g, noise_power: float, p0: float, stage1: Stage1Accounting = OFF) -> BeamformerSolution:
    """Maximize the secrecy capacity against one eavesdropper at power ``p0``.

    The weights are ``sqrt(p0)`` times the top generalized eigenvector of
    ``((s2/p0) I + h h^H, (s2/p0) I + g g^H)``.
    """
    h, g = _single_inputs(h, g)
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    G = g.reshape(-1, 1)
    alpha, mu = _offsets(h, G, noise_power, stage1)
    quot = _Quotient(h, np.outer(g, g.conj()), noise_power, alpha, mu)
    w = _fixed_power(quot, p0)
    return evaluate(w, h, G, noise_power, stage1, meta={"design": "max_secrecy_single"})


def min_power_single(
    h,
    g,
    noise_power: float,
    target_cs: float,
    threshold: float = DEFAULT_THRESHOLD,
    max_iter: int = DEFAULT_MAX_ITER,
    stage1: Stage1Accounting = OFF,
) -> tuple[BeamformerSolution, IterationTrace]:
    """Minimum transmit power meeting ``target_cs`` against one eavesdropper."""
    try:
        h, g = _single_inputs(h, g)
    except DegenerateChannel as exc:
        raise TargetUnachievable(str(exc)) from exc
    G = g.reshape(-1, 1)
    alpha, mu = _offsets(h, G, noise_power, stage1)
    quot = _Quotient(h, np.outer(g, g.conj()), noise_power, alpha, mu)
    w, trace = _min_power(quot, target_cs, threshold, max_iter)
    sol = evaluate(w, h, G, noise_power, stage1, meta={"design": "min_power_single", "iterations": trace.iterations})
    return sol, trace


# --- multiple eavesdroppers, complete nulling --------------------------------


def _nulling_system(h, G):
    h = as_vector(h, "h")
    G = _eav_matrix(G, h.shape[0])
    n, j = G.shape
    if n < j + 1:
        raise InsufficientNodes(f"nulling {j} eavesdroppers needs at least {j + 1} nodes, have {n}")
    g_tilde = np.vstack([h.conj()[None, :], G.conj().T])
    e = np.zeros(j + 1, dtype=np.complex128)
    e[0] = 1.0
    return h, G, g_tilde, e


def null_direction(h, G) -> np.ndarray:
    """``G~^H (G~ G~^H)^-1 e`` with ``G~ = [h, G]^H`` and ``e = (1, 0, ..., 0)``."""
    _, _, g_tilde, e = _nulling_system(h, G)
    return min_norm_solve(g_tilde, e)


def null_min_power_multi(
    h,
    G,
    noise_power: float,
    target_cs: float,
    theta: float = 0.0,
    stage1: Stage1Accounting = OFF,
) -> BeamformerSolution:
    """Least-power weights that null every eavesdropper and reach ``target_cs``."""
    if not target_cs > 0:
        raise ValueError("target_cs must be positive")
    h, G, g_tilde, e = _nulling_system(h, G)
    alpha, mu = _offsets(h, G, noise_power, stage1)
    snr = _required_excess(target_cs, alpha, mu)
    if snr <= 0:
        w = np.zeros_like(h)
    else:
        w = math.sqrt(snr * noise_power) * np.exp(1j * theta) * min_norm_solve(g_tilde, e)
    return evaluate(w, h, G, noise_power, stage1, meta={"design": "null_min_power_multi"})


def null_max_secrecy_multi(h, G, noise_power: float, p0: float, stage1: Stage1Accounting = OFF) -> BeamformerSolution:
    """Maximum destination rate at power ``p0`` with every eavesdropper nulled."""
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    h, G, g_tilde, e = _nulling_system(h, G)
    v = min_norm_solve(g_tilde, e)
    # e^H (G~ G~^H)^-1 e == ||v||^2
    beta = math.sqrt(p0 / float(np.vdot(v, v).real))
    return evaluate(beta * v, h, G, noise_power, stage1, meta={"design": "null_max_secrecy_multi"})


# --- imperfect eavesdropper CSI ----------------------------------------------


def imperfect_single_max(
    h, g_hat, r_delta, noise_power: float, p0: float, stage1: Stage1Accounting = OFF
) -> BeamformerSolution:
    """Maximize the Jensen lower bound on ergodic secrecy capacity, one eavesdropper.

    Same as :func:`max_secrecy_single` with ``g g^H`` replaced by
    ``g_hat g_hat^H + r_delta``.
    """
    h, g_hat = _single_inputs(h, g_hat)
    r = check_psd(r_delta, h.shape[0])
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    G = g_hat.reshape(-1, 1)
    alpha, mu = _offsets(h, G, noise_power, stage1)
    quot = _Quotient(h, np.outer(g_hat, g_hat.conj()) + r, noise_power, alpha, mu)
    w = _fixed_power(quot, p0)
    return evaluate(w, h, G, noise_power, stage1, r_delta=r, meta={"design": "imperfect_single_max"})


def _nulling_quotient(h, G_hat, r, noise_power, stage1):
    n = h.shape[0]
    J = G_hat.shape[1]
    if J == 0:
        alpha, _ = _offsets(h, G_hat, noise_power, stage1)
        return _Quotient(h, np.zeros((n, n), complex), noise_power, alpha, 1.0)
    if n < J + 1:
        raise InsufficientNodes(f"nulling {J} eavesdroppers needs at least {J + 1} nodes, have {n}")
    T = null_space_basis(G_hat.conj().T)
    if T.shape[1] != n - J:
        raise RankDeficient("eavesdropper channel estimates are linearly dependent")
    alpha, mu = _offsets(h, G_hat, noise_power, stage1)
    return _Quotient(h, r, noise_power, alpha, mu, basis=T)


def imperfect_multi_max(
    h, G_hat, r_delta, noise_power: float, p0: float, stage1: Stage1Accounting = OFF
) -> BeamformerSolution:
    """Maximize the ergodic lower bound with every estimated eavesdropper channel nulled.

    ``w = sqrt(p0) T q`` where the columns of ``T`` span the null space of
    ``G_hat^H`` and ``q`` is the top generalized eigenvector of
    ``(T^H (Rh + s2/p0 I) T, T^H (r_delta + s2/p0 I) T)``.
    """
    h = as_vector(h, "h")
    G_hat = _eav_matrix(G_hat, h.shape[0])
    r = check_psd(r_delta, h.shape[0])
    if not p0 > 0:
        raise ValueError("p0 must be positive")
    if not np.any(h):
        raise DegenerateChannel("destination channel is zero")
    quot = _nulling_quotient(h, G_hat, r, noise_power, stage1)
    w = _fixed_power(quot, p0)
    return evaluate(w, h, G_hat, noise_power, stage1, r_delta=r, meta={"design": "imperfect_multi_max"})


def imperfect_min_power(
    h,
    g_hat,
    r_delta,
    noise_power: float,
    target_bound: float,
    threshold: float = DEFAULT_THRESHOLD,
    max_iter: int = DEFAULT_MAX_ITER,
    stage1: Stage1Accounting = OFF,
) -> tuple[BeamformerSolution, IterationTrace]:
    """Least power whose ergodic secrecy lower bound reaches ``target_bound``.

    A 1-D ``g_hat`` selects the single-eavesdropper design; a 2-D ``N x J``
    array selects the nulling design.
    """
    h = as_vector(h, "h")
    if not np.any(h):
        raise TargetUnachievable("destination channel is zero")
    r = check_psd(r_delta, h.shape[0])
    g_arr = np.asarray(g_hat)
    if g_arr.ndim == 1:
        h, g = _single_inputs(h, g_arr)
        G = g.reshape(-1, 1)
        alpha, mu = _offsets(h, G, noise_power, stage1)
        quot = _Quotient(h, np.outer(g, g.conj()) + r, noise_power, alpha, mu)
        design = "imperfect_min_power_single"
    else:
        G = _eav_matrix(g_arr, h.shape[0])
        quot = _nulling_quotient(h, G, r, noise_power, stage1)
        design = "imperfect_min_power_multi"
    w, trace = _min_power(quot, target_bound, threshold, max_iter)
    sol = evaluate(w, h, G, noise_power, stage1, r_delta=r, meta={"design": design, "iterations": trace.iterations})
    return sol, trace


# --- dispatch ------------------------------------------------------------------


def solve(problem: DesignProblem, h, G, noise_power: float) -> tuple[BeamformerSolution, IterationTrace | None]:
    """Pick the design for ``problem`` from the eavesdropper count.

    One eavesdropper uses the optimal designs; zero or several use nulling.
    """
    h = as_vector(h, "h")
    G = _eav_matrix(G, h.shape[0])
    J = G.shape[1]
    st = problem.stage1
    r = problem.r_delta_matrix(h.shape[0])
    if problem.objective is Objective.MAX_SECRECY:
        if r is not None:
            if J == 1:
                return imperfect_single_max(h, G[:, 0], r, noise_power, problem.budget, st), None
            return imperfect_multi_max(h, G, r, noise_power, problem.budget, st), None
        if J == 1:
            return max_secrecy_single(h, G[:, 0], noise_power, problem.budget, st), None
        return null_max_secrecy_multi(h, G, noise_power, problem.budget, stage1=st), None

    if r is not None:
        g = G[:, 0] if J == 1 else G
        return imperfect_min_power(h, g, r, noise_power, problem.budget, problem.threshold, problem.max_iter, st)
    if J == 1:
        return min_power_single(h, G[:, 0], noise_power, problem.budget, problem.threshold, problem.max_iter, st)
    return null_min_power_multi(h, G, noise_power, problem.budget, stage1=st), None
