"""Recover population spike variances from observed sample eigenvalues.

Inverting ``lambda = theta^2 + c theta^2/(theta^2 - 1)`` amounts to the
quadratic ``u^2 - (lambda + 1 - c) u + lambda = 0`` in ``u = theta^2``.
Outside the Marchenko-Pastur bulk it has two real roots; the larger one
belongs to an eigenvalue above the bulk, the smaller one to an eigenvalue
below it.  Eigenvalues inside the closed bulk carry no information about a
spike.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError, ParameterError
from .limits import mp_edges
from .linalg import Spectrum

DISCRIMINANT_CLAMP = 1e-12


class Side(str, enum.Enum):
    ABOVE_BULK = "above-bulk"
    BELOW_BULK = "below-bulk"
    IN_BULK = "in-bulk"


@dataclass(frozen=True)
class SpikeEstimate:
    lambda_obs: float
    c: float
    theta_sq_hat: Optional[float]
    detectable: bool
    side: Side
    index: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "lambda_obs": self.lambda_obs,
            "c": self.c,
            "theta_sq_hat": self.theta_sq_hat,
            "detectable": self.detectable,
            "side": self.side.value,
        }


def classify(lambda_obs: float, c: float) -> Side:
    lo, hi = mp_edges(c)
    if lambda_obs > hi:
        return Side.ABOVE_BULK
    if c < 1 and lambda_obs < lo:
        return Side.BELOW_BULK
    return Side.IN_BULK


def invert_spike(lambda_obs: float, c: float) -> SpikeEstimate:
    """Estimate ``theta^2`` from one sample eigenvalue at aspect ratio ``c``."""
    if not (lambda_obs >= 0 and c >= 0):
        raise DomainError(f"need lambda >= 0 and c >= 0, got lambda={lambda_obs}, c={c}")
    side = classify(lambda_obs, c)
    if side is Side.IN_BULK:
        return SpikeEstimate(float(lambda_obs), float(c), None, False, side)
    b = lambda_obs + 1.0 - c
    disc = b * b - 4.0 * lambda_obs
    if disc < 0:
        if disc < -DISCRIMINANT_CLAMP:
            raise DomainError(f"negative discriminant {disc} outside the bulk")
        disc = 0.0
    root = math.sqrt(disc)
    if side is Side.ABOVE_BULK:
        u = 0.5 * (b + root)
    else:
        # smaller root via Vieta, avoids cancellation
        big = 0.5 * (b + root)
        u = lambda_obs / big if big > 0 else 0.0
    return SpikeEstimate(float(lambda_obs), float(c), u, True, side)


def heteroscedastic_normalize(sample_eigs: Sequence[float], r: int):
    """Noise level ``sigma_hat^2`` (mean of the non-spike eigenvalues) and the top ``r`` eigenvalues divided by it."""
    eigs = np.asarray(sample_eigs, dtype=float)
    if r < 0 or r >= eigs.shape[0]:
        raise ParameterError(f"need 0 <= r < p={eigs.shape[0]}, got r={r}")
    if np.any(np.diff(eigs) > 0):
        raise ParameterError("sample eigenvalues must be sorted descending")
    sigma_hat_sq = float(np.mean(eigs[r:]))
    if not sigma_hat_sq > 0:
        raise ParameterError("non-spike eigenvalues must have a positive mean")
    return sigma_hat_sq, eigs[:r] / sigma_hat_sq


def estimate_all(spectrum, n: int, r_max: int) -> List[SpikeEstimate]:
    """Apply :func:`invert_spike` with ``c = p/n`` to the ``r_max`` largest and ``r_max`` smallest eigenvalues.

    Indices are 1-based positions in the descending spectrum; an eigenvalue
    shared by both ends (small ``p``) is classified once.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    eigs = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum, dtype=float)
    p = eigs.shape[0]
    c = p / n
    r_max = max(0, int(r_max))
    idx = list(range(min(r_max, p)))
    idx += [k for k in range(max(p - r_max, 0), p) if k not in idx]
    out = []
    for k in idx:
        est = invert_spike(max(float(eigs[k]), 0.0), c)
        out.append(SpikeEstimate(est.lambda_obs, est.c, est.theta_sq_hat, est.detectable, est.side, k + 1))
    return out


def read_eigenvalues_csv(text: str) -> np.ndarray:
    """One eigenvalue per line (first column); blank lines and ``#`` comments are skipped."""
    vals = []
    for row in csv.reader(io.StringIO(text)):
        if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
            continue
        try:
            vals.append(float(row[0]))
        except ValueError:
            if vals:
                raise ParameterError(f"cannot parse eigenvalue {row[0]!r}")
            # header line
    return np.sort(np.asarray(vals, dtype=float))[::-1]
