"""Seeded samplers for the GOE, the deformed GOE and the spiked population model.

Randomness comes from Philox, a counter-based bit generator.  Each draw gets
its own stream keyed by ``(master_seed, purpose, replicate)`` through
:class:`numpy.random.SeedSequence`, so a replicate is reproducible no matter
which process draws it or in what order.  Gaussian variates use numpy's
ziggurat sampler.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import SymMatrix

# stream purposes, used as the first spawn-key component
STREAM_DEFORMED = 1
STREAM_SPIKED = 2
STREAM_AUX = 3


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


class Model(str, enum.Enum):
    DEFORMED_GOE = "deformed-goe"
    SPIKED_POPULATION = "spiked"


@dataclass(frozen=True)
class EnsembleSpec:
    """Full description of a random-matrix model.

    For ``DEFORMED_GOE`` the spikes are the eigenvalues theta_1 >= ... > 0 of
    the perturbation and ``sigma`` the noise scale.  For ``SPIKED_POPULATION``
    they are the population variances theta_k^2 (non-increasing, positive);
    those above 1 count towards ``r`` and the rest towards ``s``.
    """

    model: Model
    n: int
    spikes: tuple = ()
    sigma: float = 1.0
    p: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "spikes", tuple(float(x) for x in self.spikes))
        spikes = np.asarray(self.spikes)
        if self.n < 1:
            raise DimensionError(f"n must be >= 1, got {self.n}")
        if np.any(spikes <= 0) or np.any(~np.isfinite(spikes)):
            raise ParameterError("spikes must be finite and strictly positive")
        if np.any(np.diff(spikes) > 0):
            raise ParameterError("spikes must be non-increasing")
        if self.model is Model.DEFORMED_GOE:
            if not self.sigma > 0:
                raise ParameterError(f"sigma must be > 0, got {self.sigma}")
            if len(spikes) > self.n:
                raise DimensionError(f"rank r={len(spikes)} exceeds n={self.n}")
        else:
            if self.p is None or self.p < 1:
                raise DimensionError("spiked model needs p >= 1")
            if len(spikes) > self.p:
                raise DimensionError(f"r+s={len(spikes)} exceeds p={self.p}")

    @property
    def dim(self) -> int:
        """Side length of the sampled symmetric matrix."""
        return self.n if self.model is Model.DEFORMED_GOE else self.p

    @property
    def r(self) -> int:
        if self.model is Model.DEFORMED_GOE:
            return len(self.spikes)
        return sum(1 for x in self.spikes if x > 1.0)

    @property
    def s(self) -> int:
        if self.model is Model.DEFORMED_GOE:
            return 0
        return len(self.spikes) - self.r

    def to_dict(self) -> dict:
        d = {"model": self.model.value, "n": self.n, "spikes": list(self.spikes), "seed": self.seed}
        if self.model is Model.DEFORMED_GOE:
            d["sigma"] = self.sigma
        else:
            d["p"] = self.p
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        return cls(
            model=Model(d["model"]),
            n=int(d["n"]),
            spikes=tuple(d.get("spikes", ())),
            sigma=float(d.get("sigma", 1.0)),
            p=None if d.get("p") is None else int(d["p"]),
            seed=int(d.get("seed", 0)),
        )


def deformed_goe(n: int, spikes: Sequence[float] = (), sigma: float = 1.0, seed: int = 0) -> EnsembleSpec:
    return EnsembleSpec(Model.DEFORMED_GOE, n=n, spikes=tuple(spikes), sigma=sigma, seed=seed)


def spiked_population(n: int, p: int, spikes: Sequence[float] = (), seed: int = 0) -> EnsembleSpec:
    return EnsembleSpec(Model.SPIKED_POPULATION, n=n, p=p, spikes=tuple(spikes), seed=seed)


@dataclass(frozen=True)
class SampleDraw:
    """One sampled matrix: ``A = P + G`` or ``S_n``.

    For the spiked model ``data`` holds the ``p x n`` factor
    ``Sigma^{1/2} G / sqrt(n)`` with ``S_n = data @ data.T``.
    """

    matrix: SymMatrix
    replicate_index: int
    spec: EnsembleSpec
    data: Optional[np.ndarray] = field(default=None, repr=False)


def sample_goe(n: int, sigma: float, stream: np.random.Generator) -> SymMatrix:
    """Draw from GOE(n, sigma^2/n).

    Off-diagonal entries have variance ``sigma^2/n`` and diagonal entries
    ``2 sigma^2/n``; entries on and above the diagonal are independent.
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    z = stream.standard_normal((n, n))
    a = np.triu(z, 1)
    a = a + a.T
    a[np.diag_indices(n)] = np.sqrt(2.0) * np.diag(z)
    a *= sigma / np.sqrt(n)
    return SymMatrix(a)


def sample_deformed(spec: EnsembleSpec, replicate: int = 0) -> SampleDraw:
    """``A = diag(theta_1, ..., theta_r, 0, ..., 0) + G`` for replicate ``replicate``."""
    if spec.model is not Model.DEFORMED_GOE:
        raise ParameterError(f"sample_deformed needs a deformed-GOE spec, got {spec.model.value}")
    if len(spec.spikes) > spec.n:
        raise DimensionError(f"rank r={len(spec.spikes)} exceeds n={spec.n}")
    G = sample_goe(spec.n, spec.sigma, rng_stream(spec.seed, STREAM_DEFORMED, replicate))
    a = G.entries
    r = len(spec.spikes)
    a[np.arange(r), np.arange(r)] += np.asarray(spec.spikes)
    return SampleDraw(SymMatrix(a), replicate, spec)


def spiked_factor(spec: EnsembleSpec, replicate: int = 0) -> np.ndarray:
    """The ``p x n`` matrix ``Sigma^{1/2} G / sqrt(n)`` for one replicate."""
    if spec.model is not Model.SPIKED_POPULATION:
        raise ParameterError(f"spiked sampler needs a spiked spec, got {spec.model.value}")
    p, n = spec.p, spec.n
    if len(spec.spikes) > p:
        raise DimensionError(f"r+s={len(spec.spikes)} exceeds p={p}")
    G = rng_stream(spec.seed, STREAM_SPIKED, replicate).standard_normal((p, n))
    scale = np.ones(p)
    scale[: len(spec.spikes)] = np.sqrt(spec.spikes)
    return (scale / np.sqrt(n))[:, None] * G


def sample_spiked(spec: EnsembleSpec, replicate: int = 0) -> SampleDraw:
    """Sample covariance ``S_n = (Sigma^{1/2} G)(Sigma^{1/2} G)^T / n``."""
    X = spiked_factor(spec, replicate)
    return SampleDraw(SymMatrix.from_array(X @ X.T, check=False), replicate, spec, data=X)


def sample(spec: EnsembleSpec, replicate: int = 0) -> SampleDraw:
    if spec.model is Model.DEFORMED_GOE:
        return sample_deformed(spec, replicate)
    return sample_spiked(spec, replicate)
