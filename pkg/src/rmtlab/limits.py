"""Deterministic limits, Stieltjes transforms and explicit tail-bound values.

``lambda_theta`` and ``lambda_theta_c`` are the almost-sure limits of the
outlier eigenvalues of the deformed GOE and of the spiked sample covariance.
:func:`bound_rhs` evaluates the right-hand side of each non-asymptotic
deviation inequality, selected by :class:`Theorem`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import DomainError, ParameterError


class Branch(str, enum.Enum):
    SUPERCRITICAL = "supercritical"
    BULK_EDGE_TOP = "bulk-edge-top"
    BULK_EDGE_BOTTOM = "bulk-edge-bottom"
    SUBCRITICAL_LOW = "subcritical-low"


class LimitModel(str, enum.Enum):
    GOE = "goe"
    SPIKED = "spiked"


@dataclass(frozen=True)
class DeterministicLimit:
    value: float
    branch: Branch
    model: LimitModel

    def __float__(self) -> float:
        return self.value


def lambda_theta(theta: float, sigma: float = 1.0) -> DeterministicLimit:
    """Limit of the outlier created by a rank-one spike ``theta`` in GOE noise of scale ``sigma``.

    ``theta + sigma^2/theta`` above the threshold ``theta > sigma``, the bulk
    edge ``2 sigma`` otherwise.
    """
    if not (theta > 0 and sigma > 0):
        raise DomainError(f"need theta > 0 and sigma > 0, got theta={theta}, sigma={sigma}")
    if theta > sigma:
        return DeterministicLimit(theta + sigma**2 / theta, Branch.SUPERCRITICAL, LimitModel.GOE)
    return DeterministicLimit(2.0 * sigma, Branch.BULK_EDGE_TOP, LimitModel.GOE)


def lambda_theta_c(theta_sq: float, c: float) -> DeterministicLimit:
    """Limit of the sample eigenvalue paired with population variance ``theta_sq``.

    ``c`` is the aspect ratio of the noise block.  Spikes beyond
    ``1 +/- sqrt(c)`` separate from the Marchenko-Pastur bulk and land at
    ``theta^2 + c theta^2 / (theta^2 - 1)``; the rest stick to the nearer edge.
    """
    if not theta_sq > 0:
        raise DomainError(f"theta^2 must be > 0, got {theta_sq}")
    if not c >= 0:
        raise DomainError(f"c must be >= 0, got {c}")
    if theta_sq == 1.0:
        raise DomainError("theta^2 = 1 is excluded (no spike)")
    rc = math.sqrt(c)
    if theta_sq > 1.0 + rc:
        return DeterministicLimit(
            theta_sq + c * theta_sq / (theta_sq - 1.0), Branch.SUPERCRITICAL, LimitModel.SPIKED
        )
    if theta_sq > 1.0:
        return DeterministicLimit((1.0 + rc) ** 2, Branch.BULK_EDGE_TOP, LimitModel.SPIKED)
    if c >= 1.0:
        raise DomainError(f"theta^2={theta_sq} < 1 has no limit when c={c} >= 1")
    if theta_sq < 1.0 - rc:
        return DeterministicLimit(
            theta_sq + c * theta_sq / (theta_sq - 1.0), Branch.SUBCRITICAL_LOW, LimitModel.SPIKED
        )
    return DeterministicLimit((1.0 - rc) ** 2, Branch.BULK_EDGE_BOTTOM, LimitModel.SPIKED)


def semicircle_stieltjes(z: float, sigma: float = 1.0):
    """Stieltjes transform ``g(z) = int (x - z)^{-1} dF(x)`` of the semicircle law and ``g'(z)``.

    Only real ``z > 2 sigma`` (right of the bulk) is supported.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    if not z > 2.0 * sigma:
        raise DomainError(f"z={z} must lie right of the bulk edge 2*sigma={2 * sigma}")
    root = math.sqrt(z * z - 4.0 * sigma**2)
    g = (-z + root) / (2.0 * sigma**2)
    gp = (-1.0 + z / root) / (2.0 * sigma**2)
    return g, gp


def mp_edges(c: float):
    rc = math.sqrt(c)
    return (1.0 - rc) ** 2, (1.0 + rc) ** 2


def mp_stieltjes(z: float, c: float):
    """Stieltjes transform of the limiting spectrum of ``Gt^T Gt`` (``n x n``, aspect ``c``) and its derivative.

    The law carries an atom of mass ``1 - c`` at zero when ``c < 1``.  The
    square-root branch follows ``sign(z - 1 - c)`` so that ``g(z) ~ -1/z`` at
    infinity on either side of the bulk.
    """
    if not c >= 0:
        raise DomainError(f"c must be >= 0, got {c}")
    lo, hi = mp_edges(c)
    if z == 0:
        raise DomainError("z = 0 is excluded")
    if lo <= z <= hi:
        raise DomainError(f"z={z} lies in the bulk [{lo}, {hi}]")
    disc = (z - 1.0 - c) ** 2 - 4.0 * c
    root = math.copysign(math.sqrt(max(disc, 0.0)), z - 1.0 - c)
    g = (c - 1.0 - z + root) / (2.0 * z)
    dnum = -1.0 + (z - 1.0 - c) / root
    gp = (dnum - 2.0 * g) / (2.0 * z)
    return g, gp


# ---------------------------------------------------------------------------
# tail-bound right-hand sides


class Theorem(str, enum.Enum):
    """Which displayed inequality :func:`bound_rhs` evaluates.

    ``T1*`` concern the deformed GOE, ``T2*`` the largest and ``T3*`` the
    smallest eigenvalues of the spiked sample covariance.  ``*i`` are the
    union-bound (tail-away-from-bulk) inequalities, ``*ii`` the
    approximate-eigenvector ones.
    """

    T1I = "T1i"
    T1II = "T1ii"
    T2I = "T2i"
    T2II = "T2ii"
    T3I = "T3i"
    T3II = "T3ii"


@dataclass(frozen=True)
class BoundParams:
    """Inputs of :func:`bound_rhs`.

    ``spikes`` follows :class:`~rmtlab.ensembles.EnsembleSpec`: the thetas for
    the deformed GOE, the population variances theta^2 for the spiked model.
    ``C1`` and ``C2`` default to 2 and 0.25 for the GOE reverse bound; for
    ``T2ii``/``T3ii`` ``C2`` is the leading factor and ``C3`` the (otherwise
    unspecified) rate, which must be supplied.
    """

    theorem: Theorem
    n: int
    t: float
    i: int = 1
    spikes: tuple = ()
    sigma: float = 1.0
    p: Optional[int] = None
    delta: Optional[float] = None
    C1: float = 2.0
    C2: Optional[float] = None
    C3: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "theorem", Theorem(self.theorem))
        object.__setattr__(self, "spikes", tuple(float(x) for x in self.spikes))

    def with_t(self, t: float) -> "BoundParams":
        return replace(self, t=float(t))

    @property
    def is_goe(self) -> bool:
        return self.theorem in (Theorem.T1I, Theorem.T1II)

    @property
    def r(self) -> int:
        if self.is_goe:
            return len(self.spikes)
        return sum(1 for x in self.spikes if x > 1.0)

    @property
    def s(self) -> int:
        return 0 if self.is_goe else len(self.spikes) - self.r

    @property
    def c(self) -> float:
        """``(p - r)/n``."""
        return (self.p - self.r) / self.n

    @property
    def c_prime(self) -> float:
        """``(p - r - s)/n``."""
        return (self.p - self.r - self.s) / self.n

    @property
    def theta1_or_1(self) -> float:
        """``max(theta_1, 1)`` in the spiked model (theta, not theta^2)."""
        return max(math.sqrt(self.spikes[0]), 1.0) if self.spikes else 1.0


def _goe_c1(t: float, theta: float, sigma: float, n: int) -> float:
    return 2.0 * t * (lambda_theta(theta, sigma).value + t) * n / sigma**2


def _spiked_c1(t: float, theta_sq: float, c: float, n: int) -> float:
    if theta_sq == 1.0:
        # max(theta_1, 1) = 1: continuous extension from theta^2 -> 1+, the top bulk edge
        lam = (1.0 + math.sqrt(c)) ** 2
    else:
        lam = lambda_theta_c(theta_sq, c).value
    return 2.0 * t * (math.sqrt(lam) + t) * n / theta_sq


def log_c_m(m: int, c1: float) -> float:
    """``log C_m`` from ``C_1``: ``C_0 = 1`` and ``C_m = 2m C_1 (1 + C_1/(m-1))^(m-1)`` for ``m >= 2``."""
    if m == 0:
        return 0.0
    if c1 <= 0:
        return -math.inf
    if m == 1:
        return math.log(c1)
    return math.log(2 * m) + math.log(c1) + (m - 1) * math.log1p(c1 / (m - 1))


def _require(cond: bool, msg: str):
    if not cond:
        raise ParameterError(msg)


def _delta_ok(delta, hi: float, name: str):
    _require(delta is not None and 0 < delta <= hi, f"{name}: delta must satisfy 0 < delta <= {hi:.6g}, got {delta}")


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def t_floor(params: BoundParams) -> float:
    """Smallest admissible ``t`` for the selected inequality."""
    th, n, i = params.theorem, params.n, params.i
    if th is Theorem.T1I and params.r > 0:
        _delta_ok(params.delta, 0.5, "T1i")
        k = params.r - i + 1
        return math.sqrt(2 * k) * params.sigma / math.sqrt(params.delta * (1 - params.delta) * n)
    if th is Theorem.T2I and params.r > 0:
        _delta_ok(params.delta, 1 / 3, "T2i")
        k = params.r - i + 1
        theta = math.sqrt(params.spikes[i - 1])
        return math.sqrt(k) * theta / math.sqrt(params.delta * (1 - params.delta) * n)
    if th is Theorem.T3I and (params.r > 0 or params.s > 0):
        _delta_ok(params.delta, 1 / 3, "T3i")
        k = params.r + params.s - i + 1 if params.s > 0 else params.r
        return math.sqrt(k) * params.theta1_or_1 / math.sqrt(params.delta * (1 - params.delta) * n)
    return 0.0


def bound_rhs(params: BoundParams) -> float:
    """Right-hand side of the selected tail inequality.

    Values above 1 are returned as computed (the bound is vacuous there).
    Raises :class:`ParameterError` naming the violated constraint when ``t``,
    ``delta`` or the eigenvalue index is out of range.
    """
    th, n, t, i = params.theorem, params.n, float(params.t), params.i
    _require(n >= 1, f"n must be >= 1, got {n}")
    _require(t >= 0, f"t must be >= 0, got {t}")
    if not params.is_goe:
        _require(params.p is not None and params.p >= 1, "spiked-model bounds need p >= 1")
        _require(len(params.spikes) <= params.p, "r+s must not exceed p")

    if th is Theorem.T1I:
        sigma, r = params.sigma, params.r
        if r == 0:
            _require(i == 1, "T1i null case concerns lambda_1 only (i = 1)")
            return _exp(-n * t**2 / (4 * sigma**2))
        _require(1 <= i <= r, f"T1i: need 1 <= i <= r={r}, got i={i}")
        floor = t_floor(params)
        _require(t >= floor, f"T1i: t={t} below floor sqrt(2(r-i+1)) sigma / sqrt(delta(1-delta)n) = {floor:.6g}")
        theta = params.spikes[i - 1]
        lc = log_c_m(r - i + 1, _goe_c1(t, theta, sigma, n))
        d = params.delta
        return _exp(math.log(2.0) + lc - (1 - d) ** 2 * n * t**2 / (4 * sigma**2))

    if th is Theorem.T1II:
        sigma, r = params.sigma, params.r
        r0 = sum(1 for x in params.spikes if x > sigma)
        _require(r0 > 0, "T1ii needs at least one spike theta > sigma")
        _require(1 <= i <= r0, f"T1ii: need 1 <= i <= r0={r0}, got i={i}")
        C2 = 0.25 if params.C2 is None else params.C2
        theta = params.spikes[i - 1]
        m = n - r
        first = _exp(-m * (theta - sigma) ** 4 / (16 * sigma**2 * theta**2))
        second = 8 * i * _exp(-C2 * m * (theta - sigma) ** 5 * t**2 / (sigma**4 * (theta + sigma) ** 3))
        return first + second

    if th is Theorem.T2I:
        r = params.r
        if r == 0:
            _require(i == 1, "T2i null case concerns lambda_1 only (i = 1)")
            return _exp(-n * t**2 / 2)
        _require(1 <= i <= r, f"T2i: need 1 <= i <= r={r}, got i={i}")
        floor = t_floor(params)
        _require(t >= floor, f"T2i: t={t} below floor sqrt(r-i+1) theta_i / sqrt(delta(1-delta)n) = {floor:.6g}")
        theta_sq = params.spikes[i - 1]
        lc = log_c_m(r - i + 1, _spiked_c1(t, theta_sq, params.c, n))
        d = params.delta
        return _exp(lc - (1 - d) ** 2 * n * t**2 / (2 * theta_sq))

    if th is Theorem.T3I:
        _require(n > params.p, f"T3i assumes n > p, got n={n}, p={params.p}")
        r, s = params.r, params.s
        if r == 0 and s == 0:
            _require(i == 1, "T3i null case concerns lambda_p only (i = 1)")
            return _exp(-n * t**2 / 2)
        floor = t_floor(params)
        th1 = params.theta1_or_1
        d = params.delta
        if s == 0:
            _require(i == 1, "T3i with s = 0 concerns lambda_p only (i = 1)")
            _require(t >= floor, f"T3i: t={t} below floor sqrt(r) theta_1 / sqrt(delta(1-delta)n) = {floor:.6g}")
            lc = log_c_m(r, _spiked_c1(t, th1**2, params.c, n))
            return _exp(math.log(2.0) + lc - (1 - d) ** 2 * n * t**2 / (2 * th1**2))
        _require(1 <= i <= s, f"T3i: need 1 <= i <= s={s}, got i={i}")
        _require(t >= floor, f"T3i: t={t} below floor sqrt(r+s-i+1) max(theta_1,1) / sqrt(delta(1-delta)n) = {floor:.6g}")
        c1 = _spiked_c1(t, th1**2, params.c, n)
        lead = _exp(log_c_m(r + s - i + 1, c1)) + _exp(log_c_m(r, c1))
        return lead * _exp(-(1 - d) ** 2 * n * t**2 / (2 * th1**2))

    # T2ii / T3ii: only the functional form is known
    _require(params.C3 is not None and params.C3 > 0, f"{th.value}: the rate C3 has no closed form and must be supplied (> 0)")
    C2 = 8.0 if params.C2 is None else params.C2
    if th is Theorem.T2II:
        c = params.c
        r0 = sum(1 for x in params.spikes if x > 1 + math.sqrt(c))
        _require(r0 > 0, "T2ii needs a spike with theta^2 > 1 + sqrt(c)")
        _require(1 <= i <= r0, f"T2ii: need 1 <= i <= r0={r0}, got i={i}")
    else:
        cp = params.c_prime
        small = params.spikes[params.r :]
        s0 = sum(1 for x in small if x < 1 - math.sqrt(cp)) if cp < 1 else 0
        _require(s0 > 0, "T3ii needs a spike with theta^2 < 1 - sqrt(c')")
        _require(1 <= i <= s0, f"T3ii: need 1 <= i <= s0={s0}, got i={i}")
    return C2 * i * _exp(-params.C3 * n * t**2)
