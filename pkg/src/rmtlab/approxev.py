"""Explicit approximate eigenvectors for outlier eigenvalues.

Both constructions split the matrix into a spike coordinate and a noise block
``Gt`` and place the remaining mass of ``x`` along ``R v``, where ``R`` is the
resolvent of the noise block at the predicted outlier location and ``v`` the
coupling vector.  The Rayleigh quotient ``x^T M x`` then lands near the
deterministic limit because ``L1 = v^T R v`` and ``L2 = v^T R^2 v`` concentrate
around the limiting Stieltjes transform and its derivative.

Every report carries the gap computed twice (directly and through the closed
algebraic expansion), so the implementation of the expansion is checked on
each call independently of the randomness.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .ensembles import Model, SampleDraw
from .errors import ParameterError, SubcriticalError
from .limits import lambda_theta, lambda_theta_c, mp_edges, mp_stieltjes, semicircle_stieltjes
from .linalg import Resolvent, eig_sym

#: Tolerance for the algebraic cross-checks.
CROSSCHECK_TOL = 1e-8


@dataclass
class ApproxEvReport:
    target: float
    lambda0: float
    event_B_ok: bool
    L1_pred: float
    L2_pred: float
    x: Optional[np.ndarray] = field(default=None, repr=False)
    rayleigh: float = math.nan
    gap: float = math.nan
    gap_expansion: float = math.nan
    L1: float = math.nan
    L2: float = math.nan
    trR_over_m: float = math.nan
    trR2_over_m: float = math.nan
    crosscheck: float = math.nan
    y_crosscheck: float = math.nan
    extreme_noise_eig: float = math.nan
    spike_index: int = 1
    replicate: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x"] = None if self.x is None else self.x.tolist()
        return d


def goe_blocks(draw: SampleDraw):
    """Split a deformed-GOE draw into ``(G, Gt, m)``.

    ``Gt = sqrt(n/m) * G[r:, r:]`` is GOE(m, sigma^2/m) with ``m = n - r``.
    """
    spec = draw.spec
    n, r = spec.n, len(spec.spikes)
    G = draw.matrix.entries.copy()
    G[np.arange(r), np.arange(r)] -= np.asarray(spec.spikes)
    m = n - r
    if m < 1:
        raise ParameterError("no noise block left: r = n")
    return G, math.sqrt(n / m) * G[r:, r:], m


def goe_approx_ev(draw: SampleDraw, i: int = 1, lambda0: Optional[float] = None) -> ApproxEvReport:
    """Approximate eigenvector for ``lambda_i`` of a deformed-GOE draw.

    ``x`` has ``x_i = sqrt(1 - sigma^2/theta_i^2)``, zeros on the other spike
    coordinates and ``-(sigma/theta_i) R v / sqrt(L2)`` on the noise block.
    When the noise block's top eigenvalue exceeds ``lambda0`` (default midway
    between ``2 sigma`` and the target) the report has ``event_B_ok = False``
    and no vector.
    """
    spec = draw.spec
    if spec.model is not Model.DEFORMED_GOE:
        raise ParameterError("goe_approx_ev needs a deformed-GOE draw")
    r, n, sigma = len(spec.spikes), spec.n, spec.sigma
    if not 1 <= i <= r:
        raise ParameterError(f"spike index must satisfy 1 <= i <= r={r}, got {i}")
    theta = spec.spikes[i - 1]
    if theta <= sigma:
        raise SubcriticalError(f"theta_{i}={theta} <= sigma={sigma}: no outlier to approximate")
    lam = lambda_theta(theta, sigma).value
    lam0 = 0.5 * (2 * sigma + lam) if lambda0 is None else float(lambda0)
    g, gp = semicircle_stieltjes(lam, sigma)

    G, Gt, m = goe_blocks(draw)
    spectrum = eig_sym(Gt, want_vectors=True)
    top = float(spectrum.eigenvalues[0])
    report = ApproxEvReport(lam, lam0, top <= lam0, g, gp, extreme_noise_eig=top, spike_index=i, replicate=draw.replicate_index)
    if not report.event_B_ok:
        return report

    scale = math.sqrt(m / n)
    v = G[i - 1, r:] / (sigma * scale)
    R = Resolvent(Gt, lam, spectrum)
    L1, L2 = R.quadratics(v)
    xi = math.sqrt(1.0 - sigma**2 / theta**2)
    x = np.zeros(n)
    x[i - 1] = xi
    x[r:] = -(sigma / theta) * R.apply(v) / math.sqrt(L2)

    A = draw.matrix.entries
    rayleigh = float(x @ A @ x)
    gap = lam - rayleigh
    s2, t2 = sigma**2, theta**2
    expansion = (
        (1.0 - scale) * 2 * s2 / theta
        - G[i - 1, i - 1] * (1.0 - s2 / t2)
        + scale * s2 / t2 * (-L1 / L2 - (t2 - s2) / theta)
        + scale * 2 * s2 / theta * xi * (L1 / math.sqrt(L2) + math.sqrt(t2 - s2) / theta)
    )
    report.x = x
    report.rayleigh = rayleigh
    report.gap = gap
    report.gap_expansion = expansion
    report.crosscheck = abs(gap - expansion)
    report.L1, report.L2 = L1, L2
    report.trR_over_m, report.trR2_over_m = R.trace_over_m, R.trace_sq_over_m
    return report


def spiked_blocks(draw: SampleDraw):
    """``(X, Gt, m)``: the data factor, its unit-variance noise rows ``Gt`` (``m x n``) and ``m = p - r - s``."""
    spec = draw.spec
    X = draw.data
    if X is None:
        raise ParameterError("spiked draw carries no data factor")
    k = len(spec.spikes)
    m = spec.p - k
    if m < 1:
        raise ParameterError("no noise block left: r + s = p")
    return X, X[k:], m


def spike_x_coordinate(theta_sq: float, c: float) -> float:
    """Optimal weight of the spike coordinate, ``sqrt(((t-1)^2 - c) / ((t-1)(t-1+c)))`` with ``t = theta^2``."""
    a = theta_sq - 1.0
    return math.sqrt(max(a * a - c, 0.0) / (a * (a + c)))


def spm_approx_ev(draw: SampleDraw, i: int = 1, smallest: bool = False, lambda0: Optional[float] = None) -> ApproxEvReport:
    """Approximate eigenvector for an outlier of a spiked sample covariance.

    With ``smallest=False`` this targets ``lambda_i`` and spike ``theta_i``
    (needs ``theta_i^2 > 1 + sqrt(c)``); with ``smallest=True`` it targets
    ``lambda_{p-i+1}`` and spike ``theta_{r+s-i+1}`` (needs
    ``theta^2 < 1 - sqrt(c)``).  Here ``c = m/n`` is the aspect ratio of the
    noise block.  ``x`` has weight :func:`spike_x_coordinate` on the spike and
    ``-sqrt(1 - x_k^2) R Gt v / sqrt(lambda L2 + L1)`` on the noise rows.
    """
    spec = draw.spec
    if spec.model is not Model.SPIKED_POPULATION:
        raise ParameterError("spm_approx_ev needs a spiked-population draw")
    r, s, n = spec.r, spec.s, spec.n
    X, Gt, m = spiked_blocks(draw)
    c = m / n
    if smallest:
        if not 1 <= i <= s:
            raise ParameterError(f"smallest-eigenvalue index must satisfy 1 <= i <= s={s}, got {i}")
        k = r + s - i + 1
        theta_sq = spec.spikes[k - 1]
        if not (c < 1 and theta_sq < 1 - math.sqrt(c)):
            raise SubcriticalError(f"theta^2={theta_sq} is not below 1 - sqrt(c)={1 - math.sqrt(c):.6g}")
        edge = mp_edges(c)[0]
    else:
        if not 1 <= i <= r:
            raise ParameterError(f"spike index must satisfy 1 <= i <= r={r}, got {i}")
        k = i
        theta_sq = spec.spikes[k - 1]
        if not theta_sq > 1 + math.sqrt(c):
            raise SubcriticalError(f"theta^2={theta_sq} is not above 1 + sqrt(c)={1 + math.sqrt(c):.6g}")
        edge = mp_edges(c)[1]
    lam = lambda_theta_c(theta_sq, c).value
    lam0 = 0.5 * (edge + lam) if lambda0 is None else float(lambda0)
    g, gp = mp_stieltjes(lam, c)

    H = Gt.T @ Gt
    spectrum = eig_sym(H, want_vectors=True)
    # the nonzero spectrum of Gt^T Gt is that of Gt Gt^T (m x m)
    if smallest:
        extreme = float(spectrum.eigenvalues[min(m, n) - 1])
        ok = extreme >= lam0
    else:
        extreme = float(spectrum.eigenvalues[0])
        ok = extreme <= lam0
    report = ApproxEvReport(lam, lam0, ok, g, gp, extreme_noise_eig=extreme, spike_index=i, replicate=draw.replicate_index)
    if not ok:
        return report

    theta = math.sqrt(theta_sq)
    v = X[k - 1] / theta
    S = Resolvent(H, lam, spectrum)
    L1, L2 = S.quadratics(v)
    xk = spike_x_coordinate(theta_sq, c)
    b = math.sqrt(1.0 - xk**2) / math.sqrt(lam * L2 + L1)
    a = theta * xk - b
    Sv = S.apply(v)
    x = np.zeros(spec.p)
    x[k - 1] = xk
    # R Gt v = Gt S v  (push-through identity)
    x[r + s :] = -b * (Gt @ Sv)

    y_direct = X.T @ x
    y_alt = a * v - lam * b * Sv
    rayleigh = float(x @ draw.matrix.entries @ x)
    gap = lam - rayleigh
    identity = lam * (1.0 - lam * b * b * L2) - a * a * float(v @ v) + 2.0 * a * b * lam * L1
    report.x = x
    report.rayleigh = rayleigh
    report.gap = gap
    report.gap_expansion = identity
    report.crosscheck = abs(gap - identity)
    report.y_crosscheck = float(np.max(np.abs(y_direct - y_alt)))
    report.L1, report.L2 = L1, L2
    report.trR_over_m, report.trR2_over_m = S.trace_over_m, S.trace_sq_over_m
    return report


def approx_ev(draw: SampleDraw, i: int = 1, smallest: bool = False, lambda0: Optional[float] = None) -> ApproxEvReport:
    if draw.spec.model is Model.DEFORMED_GOE:
        if smallest:
            raise ParameterError("the deformed-GOE construction targets the largest eigenvalues only")
        return goe_approx_ev(draw, i, lambda0)
    return spm_approx_ev(draw, i, smallest, lambda0)


# ---------------------------------------------------------------------------
# quadratic-form concentration


def l_concentration_bounds(m: int, lam: float, lam0: float, t: float) -> dict:
    """Conditional tail bounds for ``L_j - tr(R^j)/m`` given the noise block, on the event B.

    ``gap = lam - lam0`` controls the resolvent norm.  Keys: ``L1_lower``,
    ``L1_upper``, ``L2_lower``, ``L2_upper``.
    """
    gap = lam - lam0
    if not gap > 0:
        raise ParameterError(f"need lam > lam0, got lam={lam}, lam0={lam0}")
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    return {
        "L1_lower": math.exp(-0.25 * m * (math.sqrt(1 + 2 * gap * t) - 1) ** 2),
        "L1_upper": math.exp(-0.25 * m * gap**2 * t**2),
        "L2_lower": math.exp(-0.25 * m * gap**4 * t**2),
        "L2_upper": math.exp(-0.25 * m * (math.sqrt(1 + 2 * gap**2 * t) - 1) ** 2),
    }


@dataclass
class TraceProbe:
    m: int
    lam: float
    reps: int
    trR_over_m: float
    trR2_over_m: float
    L1_mean: float
    L1_std: float
    L2_mean: float
    L2_std: float
    L1_max_dev: float
    L2_max_dev: float
    tail_t: Optional[float] = None
    tail_freq: dict = field(default_factory=dict)
    tail_bounds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def noise_block(draw_or_matrix):
    """The matrix whose resolvent enters the construction: ``Gt`` (GOE) or ``Gt^T Gt`` (spiked)."""
    if isinstance(draw_or_matrix, SampleDraw):
        if draw_or_matrix.spec.model is Model.DEFORMED_GOE:
            return goe_blocks(draw_or_matrix)[1]
        Gt = spiked_blocks(draw_or_matrix)[1]
        return Gt.T @ Gt
    return np.asarray(draw_or_matrix, dtype=float)


def trace_concentration_probe(
    draw,
    lam: float,
    reps_of_v: int,
    stream: np.random.Generator,
    t: Optional[float] = None,
    lam0: Optional[float] = None,
) -> TraceProbe:
    """Spread of ``L1``, ``L2`` over fresh ``v ~ N(0, I/m)`` against ``tr R/m``, ``tr R^2/m``.

    ``draw`` is a :class:`SampleDraw` or the noise matrix itself.  With ``t``
    given, also reports the empirical frequency of each one-sided deviation
    ``>= t`` next to :func:`l_concentration_bounds` (``lam0`` defaults to the
    largest eigenvalue of the noise matrix).
    """
    M = noise_block(draw)
    R = Resolvent(M, lam)
    m = R.m
    V = stream.standard_normal((m, reps_of_v)) / math.sqrt(m)
    L1, L2 = R.quadratics(V)
    tr1, tr2 = R.trace_over_m, R.trace_sq_over_m
    probe = TraceProbe(
        m=m,
        lam=float(lam),
        reps=int(reps_of_v),
        trR_over_m=tr1,
        trR2_over_m=tr2,
        L1_mean=float(np.mean(L1)),
        L1_std=float(np.std(L1, ddof=1)) if reps_of_v > 1 else 0.0,
        L2_mean=float(np.mean(L2)),
        L2_std=float(np.std(L2, ddof=1)) if reps_of_v > 1 else 0.0,
        L1_max_dev=float(np.max(np.abs(L1 - tr1))),
        L2_max_dev=float(np.max(np.abs(L2 - tr2))),
    )
    if t is not None:
        if lam0 is None:
            lam0 = float(R.spectrum.eigenvalues[0])
        probe.tail_t = float(t)
        probe.tail_freq = {
            "L1_lower": float(np.mean(L1 - tr1 <= -t)),
            "L1_upper": float(np.mean(L1 - tr1 >= t)),
            "L2_lower": float(np.mean(L2 - tr2 <= -t)),
            "L2_upper": float(np.mean(L2 - tr2 >= t)),
        }
        probe.tail_bounds = l_concentration_bounds(m, lam, lam0, t)
    return probe
