"""Epsilon-nets for the hemispheric metric rho_m on the unit ball.

``rho_m(x, y)`` is the Euclidean distance between the lifts
``(x, sqrt(1 - |x|^2))`` and ``(y, sqrt(1 - |y|^2))`` on the upper unit
hemisphere of R^{m+1}.  A rho_m-net of the ball B^m_2 lifts to a Euclidean
net of any sphere S^{n-1}, n > m, by completing the first m coordinates with
a rescaled tail (:func:`lift_to_sphere`).

The interval net follows the explicit recursion ``x_1 = 1/2``,
``x_{i+1} = x_i + 2 sqrt(x_i)``, ``eta_i = 1 - x_i eps^2``.  The ball net is
the product of a sphere net at ``a*eps`` and an interval net at
``(1-a)*eps`` with ``a = 1 - 1/m``; the sphere net is a greedy separated set
grown from a seeded random candidate stream, so its covering property is
certified afterwards by :func:`coverage_radius` rather than proved.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import CertificationError, DimensionError, ParameterError

#: Numerical slack used when checking |x| <= 1 and coverage radii.
BALL_TOL = 1e-12


def _lift(points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    h = np.sqrt(np.clip(1.0 - np.sum(points**2, axis=1), 0.0, None))
    return np.hstack([points, h[:, None]])


def rho(x, y) -> float:
    """The hemispheric metric on the unit ball B^m_2."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"rho needs two vectors of equal length, got {x.shape} and {y.shape}")
    for v in (x, y):
        if np.dot(v, v) > 1.0 + BALL_TOL:
            raise ParameterError(f"point {v} lies outside the unit ball")
    hx = math.sqrt(max(0.0, 1.0 - float(np.dot(x, x))))
    hy = math.sqrt(max(0.0, 1.0 - float(np.dot(y, y))))
    return math.sqrt(float(np.sum((x - y) ** 2)) + (hx - hy) ** 2)


def interval_size_bound(epsilon: float) -> float:
    return 2.0 / epsilon


def ball_size_bound(m: int, epsilon: float) -> float:
    """Certified size of the ball net: ``4 m^2/eps (1 + 2m/((m-1) eps))^(m-1)``."""
    if m == 1:
        return interval_size_bound(epsilon)
    return 4.0 * m**2 / epsilon * (1.0 + 2.0 * m / ((m - 1) * epsilon)) ** (m - 1)


def sphere_size_bound(m: int, epsilon: float) -> float:
    """Volume-counting bound ``2m (1 + 2/eps)^(m-1)`` on an eps-separated subset of S^{m-1}."""
    return 2.0 * m * (1.0 + 2.0 / epsilon) ** (m - 1)


@dataclass
class EpsilonNet:
    """A finite rho_m-net of B^m_2 (``m = 1``: of ``[0, 1]``).

    ``heuristic`` is set when part of the construction is randomized and the
    covering property rests on :func:`certify` rather than on the recursion.
    """

    points: np.ndarray
    epsilon: float
    m: int
    certified_size_bound: float
    heuristic: bool = False
    certified_radius: Optional[float] = None
    _tree: Optional[cKDTree] = field(default=None, init=False, repr=False, compare=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(_lift(self.points))
        return self._tree

    def nearest(self, x):
        """``(rho distance, index)`` of the net point nearest to each row of ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.m:
            raise DimensionError(f"query points have dimension {x.shape[1]}, net has m={self.m}")
        return self.tree.query(_lift(x))

    def header(self) -> dict:
        return {
            "m": self.m,
            "epsilon": self.epsilon,
            "size": self.size,
            "bound": self.certified_size_bound,
            "heuristic": self.heuristic,
            "certified_radius": self.certified_radius,
        }

    def to_json(self, extra: Optional[dict] = None) -> str:
        doc = {"header": {**(extra or {}), **self.header()}, "points": self.points.tolist()}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "EpsilonNet":
        doc = json.loads(text)
        h = doc["header"]
        pts = np.asarray(doc["points"], dtype=float).reshape(-1, h["m"])
        return cls(pts, h["epsilon"], h["m"], h["bound"], h.get("heuristic", False), h.get("certified_radius"))


def _check_epsilon(epsilon: float):
    if not (0 < epsilon <= 1.0 / 3.0 + 1e-15):
        raise ParameterError(f"epsilon must lie in (0, 1/3], got {epsilon}")


def interval_sequence(epsilon: float) -> List[float]:
    """The values ``x_1, x_2, ...`` of the recursion, up to the first with ``x_k eps^2 >= 1``."""
    xs = [0.5]
    while xs[-1] * epsilon**2 < 1.0:
        xs.append(xs[-1] + 2.0 * math.sqrt(xs[-1]))
    return xs


def net_interval(epsilon: float) -> EpsilonNet:
    """A rho_1-net of ``[0, 1]`` of size at most ``2/eps``."""
    _check_epsilon(epsilon)
    xs = interval_sequence(epsilon)
    etas = [1.0 - x * epsilon**2 for x in xs[:-1]]
    pts = np.array(etas + [0.0])[:, None]
    return EpsilonNet(pts, float(epsilon), 1, interval_size_bound(epsilon))


def greedy_sphere_net(m: int, epsilon: float, stream: np.random.Generator, patience: Optional[int] = None) -> np.ndarray:
    """Greedy eps-separated subset of S^{m-1} from random candidates.

    Candidates closer than ``eps`` to an accepted point are rejected; the
    search stops after ``patience`` consecutive rejections (default: ten
    times the volume bound).  The result is separated by construction and a
    net with high probability.
    """
    if patience is None:
        patience = int(10 * sphere_size_bound(m, epsilon))
    bound = int(sphere_size_bound(m, epsilon))
    pts = np.empty((bound + 1, m))
    k = 0
    misses = 0
    batch = 1024
    # unit vectors: |a - b|^2 < eps^2  <=>  a.b > 1 - eps^2/2
    cos_min = 1.0 - epsilon**2 / 2.0
    while misses < patience:
        cand = stream.standard_normal((batch, m))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
        if k:
            far = np.max(cand @ pts[:k].T, axis=1) <= cos_min
        else:
            far = np.ones(batch, dtype=bool)
        k_batch = k
        for j in range(batch):
            if far[j] and (k == k_batch or np.max(pts[k_batch:k] @ cand[j]) <= cos_min):
                if k > bound:
                    raise CertificationError("separated set exceeded its volume bound")
                pts[k] = cand[j]
                k += 1
                misses = 0
            else:
                misses += 1
                if misses >= patience:
                    break
    return pts[:k].copy()


def net_ball(m: int, epsilon: float, stream: np.random.Generator) -> EpsilonNet:
    """A rho_m-net of B^m_2 built as a product of a sphere net and an interval net."""
    if m < 2:
        raise DimensionError(f"net_ball needs m >= 2, got {m} (use net_interval for m = 1)")
    _check_epsilon(epsilon)
    a = 1.0 - 1.0 / m
    sphere = greedy_sphere_net(m, a * epsilon, stream)
    radii = net_interval((1.0 - a) * epsilon).points[:, 0]
    shells = [eta * sphere for eta in radii if eta > 0]
    if np.any(radii == 0):
        shells.append(np.zeros((1, m)))
    pts = np.vstack(shells)
    return EpsilonNet(pts, float(epsilon), m, ball_size_bound(m, epsilon), heuristic=True)


def build_net(m: int, epsilon: float, stream: Optional[np.random.Generator] = None) -> EpsilonNet:
    if m == 1:
        return net_interval(epsilon)
    if stream is None:
        raise ParameterError("ball nets need a random stream")
    return net_ball(m, epsilon, stream)


def sample_ball(m: int, count: int, stream: np.random.Generator) -> np.ndarray:
    """Test points for coverage: half uniform in the ball, half with uniform radius.

    The second half puts more mass near the origin and on thin shells near the
    boundary, where the hemispheric metric is most distorted.  For ``m = 1``
    the points lie in ``[0, 1]``.
    """
    if m == 1:
        return stream.uniform(0.0, 1.0, size=(count, 1))
    half = count // 2
    d = stream.standard_normal((count, m))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    radius = np.empty(count)
    radius[:half] = stream.uniform(size=half) ** (1.0 / m)
    radius[half:] = stream.uniform(size=count - half)
    return d * radius[:, None]


def coverage_radius(net: EpsilonNet, samples: np.ndarray) -> float:
    """Largest rho-distance from a sample point to its nearest net point."""
    dist, _ = net.nearest(samples)
    return float(np.max(dist))


def certify(net: EpsilonNet, stream: np.random.Generator, samples: int = 100_000) -> float:
    """Randomized coverage check; records and returns the observed covering radius.

    Raises :class:`CertificationError` when a sample is farther than eps from
    the net or the net exceeds its size bound.
    """
    if net.size > net.certified_size_bound:
        raise CertificationError(f"net has {net.size} points, bound is {net.certified_size_bound:.6g}")
    radius = coverage_radius(net, sample_ball(net.m, samples, stream))
    if radius > net.epsilon + BALL_TOL:
        raise CertificationError(f"coverage radius {radius:.6g} exceeds epsilon {net.epsilon:.6g}")
    net.certified_radius = radius
    return radius


def lift_to_sphere(x, net: EpsilonNet):
    """Map a unit vector ``x`` in R^n to a point of the lifted net within eps of it.

    Returns ``(y, u)`` where ``u`` is the net point nearest to the first
    ``m`` coordinates of ``x`` and ``y = (u, sqrt(1-|u|^2)/sqrt(1-|x'|^2) x'')``
    (``y = (u, 0)`` when the tail ``x''`` vanishes).  For ``m = 1`` the net
    covers ``[0, 1]`` only, so ``x_1 >= 0`` is required.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    m = net.m
    if not m < n:
        raise DimensionError(f"need m < n, got m={m}, n={n}")
    if abs(np.linalg.norm(x) - 1.0) > 1e-10:
        raise ParameterError("x must be a unit vector")
    head, tail = x[:m], x[m:]
    if m == 1 and head[0] < 0:
        raise ParameterError("the interval net only covers x_1 >= 0")
    dist, idx = net.nearest(head)
    dist, idx = float(dist[0]), int(idx[0])
    if dist > net.epsilon + BALL_TOL:
        raise CertificationError(f"no net point within epsilon={net.epsilon} (nearest at {dist:.6g})")
    u = net.points[idx]
    tail_norm_sq = 1.0 - float(np.dot(head, head))
    if np.linalg.norm(tail) == 0.0 or tail_norm_sq <= 0.0:
        y = np.concatenate([u, np.zeros(n - m)])
    else:
        scale = math.sqrt(max(0.0, 1.0 - float(np.dot(u, u)))) / math.sqrt(tail_norm_sq)
        y = np.concatenate([u, scale * tail])
    return y, u
