"""Gaussian-approximation density evolution for min-sum with erasures.

All messages are modelled as symmetric Gaussians (variance twice the mean),
so a message family is summarised by one error probability. Two recurrences
are provided:

``scalar``
    Error probability ``x`` of variable messages for any decoder whose
    check messages are symmetric Gaussian with the min-sum sign rule::

        x' = sum_i lam_i Q(sqrt(1/sigma^2 + (i-1) Qinv((1 - rho(1-2x))/2)^2))

``joint``
    The pair ``(P, E)`` = (probability a variable message is negative,
    probability it is erased) for the self-corrected decoder::

        F  = 1 - rho(1-E)                       erased check messages
        R  = (rho(1-E) - rho(1-E-2P)) / 2       negative check messages
        mb = 2 Qinv(R / (1-F))^2               mean of unerased check messages
        Qi = Q(sqrt((m0 + rho(1-E) (i-1) mb) / 2))
        S  = sum_i lam_i Qi
        P' = (P + E) S
        E' = P + (1 - E - 2P) S

Q and its inverse come from :mod:`scipy.special` (``erfc``/``ndtri``,
Cephes implementations; absolute error of Q below 1e-15 on [-8, 8]).

``literal=True`` evaluates the compact closed forms with ``Qinv`` not
squared inside the square root; it exists for comparison only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .code import DegreeDistribution

SCALAR, JOINT = "scalar", "joint"
_RECURRENCE_ALIASES = {"scalar": SCALAR, "theorem1": SCALAR, "joint": JOINT, "theorem2": JOINT}


def recurrence_name(name: str) -> str:
    try:
        return _RECURRENCE_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown recurrence {name!r}") from None


def q_func(x):
    """Gaussian tail probability ``Q(x) = P(N(0,1) > x)``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def q_inv(p):
    """Inverse of :func:`q_func` on ``(0, 1)``; ``q_inv(0) = inf``."""
    return -special.ndtri(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class EnsembleParams:
    dist: DegreeDistribution
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if min(self.dist.lam) < 2:
            raise ValueError("density evolution needs variable degrees >= 2")

    @property
    def m0(self) -> float:
        """Mean of the channel LLR, ``2 / sigma^2``."""
        return 2.0 / self.sigma**2


@dataclass(frozen=True)
class DeState:
    """``P``: variable message negative, ``E``: variable message erased."""

    P: float
    E: float = 0.0

    @property
    def Pe(self) -> float:
        return self.P + self.E


@dataclass(frozen=True)
class CheckState:
    R: float
    F: float
    m_beta: float


def _domain(P: float, E: float) -> None:
    tol = 1e-12
    if P < -tol or E < -tol or P + E > 1 + tol:
        raise ValueError(f"state (P={P}, E={E}) outside P, E >= 0, P + E <= 1")


def erasure_step(E: float, dist: DegreeDistribution) -> float:
    """Probability a check message is erased, ``1 - rho(1 - E)``."""
    if not -1e-12 <= E <= 1 + 1e-12:
        raise ValueError(f"erasure probability {E} outside [0, 1]")
    return float(1.0 - dist.rho_poly(1.0 - E))


def negative_step(P: float, E: float, dist: DegreeDistribution) -> float:
    """Probability a check message is negative,
    ``(rho(1-E) - rho(1-E-2P)) / 2``."""
    _domain(P, E)
    return float((dist.rho_poly(1.0 - E) - dist.rho_poly(1.0 - E - 2.0 * P)) / 2.0)


def mean_from_R(R: float) -> float:
    """Mean of a symmetric Gaussian with ``P(X < 0) = R``: ``2 Qinv(R)^2``.

    ``R = 0`` gives ``inf`` (perfectly reliable messages).
    """
    if R < 0 or R > 0.5:
        raise ValueError(f"R={R} outside [0, 1/2]")
    if R == 0:
        return math.inf
    return float(2.0 * q_inv(R) ** 2)


def check_state(state: DeState, dist: DegreeDistribution, conditioned: bool = True) -> CheckState:
    """Statistics of check messages produced from variable state ``state``.

    The Gaussian mean describes unerased messages, so by default it is
    fitted to their negative probability ``R / (1 - F)``. With
    ``conditioned=False`` it is fitted to the unconditional ``R``; that
    variant drives ``Pe`` to zero at every noise level and has no threshold.
    A negative probability above 1/2 is clipped to 1/2 (mean 0), since a
    symmetric Gaussian cannot favour the wrong sign.
    """
    F = erasure_step(state.E, dist)
    R = negative_step(state.P, state.E, dist)
    r = R
    if conditioned:
        r = R / (1.0 - F) if F < 1.0 else 0.0
    r = min(max(r, 0.0), 0.5)
    return CheckState(R, F, mean_from_R(r))


def _qi_from_check(chk: CheckState, E: float, degrees: np.ndarray, params: EnsembleParams, literal: bool) -> np.ndarray:
    k = float(params.dist.rho_poly(1.0 - E))
    if k == 0.0 or chk.m_beta == 0.0:
        extra = np.zeros(len(degrees))
    elif math.isinf(chk.m_beta):
        return np.zeros(len(degrees))
    elif literal:
        # uncorrected display: m0/2 + k (i-1) Qinv(R)
        extra = k * (degrees - 1) * math.sqrt(chk.m_beta / 2.0)
        return q_func(np.sqrt(params.m0 / 2.0 + extra))
    else:
        extra = k * (degrees - 1) * chk.m_beta
    return q_func(np.sqrt((params.m0 + extra) / 2.0))


def q_i(P: float, E: float, i: int, params: EnsembleParams, *, conditioned: bool = True, literal: bool = False) -> float:
    """Probability that the extrinsic sum at a degree-``i`` variable is negative."""
    if i < 2:
        raise ValueError("variable degree must be >= 2")
    chk = check_state(DeState(P, E), params.dist, conditioned)
    return float(_qi_from_check(chk, E, np.array([i]), params, literal)[0])


def de_step_full(state: DeState, params: EnsembleParams, *, conditioned: bool = True, literal: bool = False) -> tuple[DeState, CheckState]:
    _domain(state.P, state.E)
    chk = check_state(state, params.dist, conditioned)
    degrees = np.array(list(params.dist.lam), dtype=float)
    weights = np.array(list(params.dist.lam.values()))
    S = float(weights @ _qi_from_check(chk, state.E, degrees, params, literal))
    x, y = state.P, state.E
    return DeState((x + y) * S, x + (1.0 - y - 2.0 * x) * S), chk


def de_step(state: DeState, params: EnsembleParams, *, conditioned: bool = True, literal: bool = False) -> DeState:
    """One iteration of the joint ``(P, E)`` recurrence."""
    return de_step_full(state, params, conditioned=conditioned, literal=literal)[0]


def scalar_terms(x: float, params: EnsembleParams, *, literal: bool = False) -> np.ndarray:
    """Per-degree summands ``Q(sqrt(1/sigma^2 + (i-1) Qinv(r)^2))`` (unweighted)."""
    if not -1e-12 <= x <= 0.5 + 1e-12:
        raise ValueError(f"error probability {x} outside [0, 1/2]")
    degrees = np.array(list(params.dist.lam), dtype=float)
    r = (1.0 - float(params.dist.rho_poly(1.0 - 2.0 * x))) / 2.0
    if r <= 0.0:
        return np.zeros(len(degrees))
    t = q_inv(min(r, 0.5))
    inner = t if literal else t * t
    return q_func(np.sqrt(1.0 / params.sigma**2 + (degrees - 1) * inner))


def scalar_step(x: float, params: EnsembleParams, *, literal: bool = False) -> float:
    """One iteration of the scalar recurrence on the error probability."""
    weights = np.array(list(params.dist.lam.values()))
    return float(weights @ scalar_terms(x, params, literal=literal))


# -- trajectories and thresholds --------------------------------------------

TRAJECTORY_COLUMNS = ("iteration", "P", "E", "Pe", "R", "F", "m_beta")


def initial_state(params: EnsembleParams) -> DeState:
    """Channel LLRs alone: ``P = Q(1/sigma)``, no erasures."""
    return DeState(float(q_func(1.0 / params.sigma)), 0.0)


def trajectory(
    params: EnsembleParams,
    recurrence: str = JOINT,
    *,
    max_iter: int = 10_000,
    target: float = 1e-9,
    conditioned: bool = True,
    literal: bool = False,
) -> list[tuple]:
    """Rows ``(iteration, P, E, Pe, R, F, m_beta)`` until ``Pe < target``
    or ``max_iter``; check columns of row ``l`` describe the messages that
    produced iteration ``l`` (NaN on row 0)."""
    recurrence = recurrence_name(recurrence)
    s = initial_state(params)
    nan = math.nan
    rows = [(0, s.P, s.E, s.Pe, nan, nan, nan)]
    for it in range(1, max_iter + 1):
        if s.Pe < target:
            break
        if recurrence == JOINT:
            s, chk = de_step_full(s, params, conditioned=conditioned, literal=literal)
        else:
            x = s.P
            R = (1.0 - float(params.dist.rho_poly(1.0 - 2.0 * x))) / 2.0
            chk = CheckState(R, 0.0, mean_from_R(min(max(R, 0.0), 0.5)))
            s = DeState(scalar_step(x, params, literal=literal), 0.0)
        rows.append((it, s.P, s.E, s.Pe, chk.R, chk.F, chk.m_beta))
    return rows


def iterations_to_converge(
    params: EnsembleParams,
    recurrence: str = JOINT,
    *,
    max_iter: int = 10_000,
    target: float = 1e-9,
    conditioned: bool = True,
    literal: bool = False,
) -> int | None:
    """Iterations needed to reach ``Pe < target``; None if not within ``max_iter``."""
    recurrence = recurrence_name(recurrence)
    s = initial_state(params)
    x = s.P
    for it in range(max_iter + 1):
        if recurrence == JOINT:
            if s.Pe < target:
                return it
            s = de_step(s, params, conditioned=conditioned, literal=literal)
        else:
            if x < target:
                return it
            x = scalar_step(x, params, literal=literal)
    return None


class BracketError(ValueError):
    pass


def threshold_search(
    dist: DegreeDistribution,
    recurrence: str = JOINT,
    tol: float = 1e-4,
    *,
    sigma_lo: float = 0.3,
    sigma_hi: float = 2.0,
    max_iter: int = 10_000,
    target: float = 1e-9,
    conditioned: bool = True,
    literal: bool = False,
) -> float:
    """Largest noise level sigma (within ``tol``) at which the recurrence
    started from the channel reaches ``Pe < target`` within ``max_iter``.

    Returns the lower end of the final bisection bracket, which always
    converges.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if min(dist.lam) < 2:
        raise ValueError("ensembles with degree-1 variable nodes are not supported")

    def ok(sigma: float) -> bool:
        n = iterations_to_converge(
            EnsembleParams(dist, sigma), recurrence,
            max_iter=max_iter, target=target, conditioned=conditioned, literal=literal,
        )
        return n is not None

    lo, hi = sigma_lo, sigma_hi
    if not ok(lo):
        raise BracketError(f"no convergence at sigma_lo={lo}")
    if ok(hi):
        raise BracketError(f"still converging at sigma_hi={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def sigma_to_ebno(sigma: float, rate: float) -> float:
    """Inverse of :func:`scms.channel.ebno_to_sigma`."""
    return float(10.0 * math.log10(1.0 / (2.0 * rate * sigma**2)))
