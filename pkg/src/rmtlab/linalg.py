"""Dense symmetric eigendecomposition, singular values and resolvent quadratics.

The eigensolver is LAPACK's symmetric driver (Householder tridiagonalization
followed by an implicit-shift / divide-and-conquer stage) reached through
:func:`numpy.linalg.eigh`.  Everything here returns eigenvalues in
*descending* order, matching the indexing lambda_1 >= ... >= lambda_n used
throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, SingularResolventError

#: Relative tolerance promised by the solver contract.
SOLVER_TOL = 1e-10
#: Minimum distance between a resolvent point and the spectrum.
RESOLVENT_GAP = 1e-8


@dataclass(frozen=True)
class SymMatrix:
    """A real symmetric matrix.

    Construction goes through :meth:`from_array`, which copies the upper
    triangle onto the lower one so the entries are symmetric bit for bit.
    """

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def from_array(cls, a, *, check: bool = True) -> "SymMatrix":
        a = np.array(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"expected a non-empty square matrix, got shape {a.shape}")
        if check and not np.all(np.isfinite(a)):
            raise InputError("matrix has non-finite entries")
        iu = np.triu_indices(a.shape[0], 1)
        a.T[iu] = a[iu]
        return cls(a)


def _as_array(A) -> np.ndarray:
    if isinstance(A, SymMatrix):
        a = A.entries
    else:
        a = np.asarray(A, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending, optionally with matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def residuals(self, A) -> np.ndarray:
        """Column norms of ``A V - V diag(lambda)``."""
        if self.eigenvectors is None:
            raise ValueError("spectrum carries no eigenvectors")
        a = _as_array(A)
        V = self.eigenvectors
        return np.linalg.norm(a @ V - V * self.eigenvalues, axis=0)


def _canonical_vectors(w: np.ndarray, V: np.ndarray) -> np.ndarray:
    # sign convention: first non-negligible entry of each column is positive
    idx = np.argmax(np.abs(V) > 1e-12 * np.abs(V).max(axis=0), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    V = V * signs
    # exact ties: order columns lexicographically (descending)
    start = 0
    n = w.shape[0]
    while start < n:
        stop = start + 1
        while stop < n and w[stop] == w[start]:
            stop += 1
        if stop - start > 1:
            block = V[:, start:stop]
            order = np.lexsort(block[::-1])[::-1]
            V[:, start:stop] = block[:, order]
        start = stop
    return V


def eig_sym(A, want_vectors: bool = False) -> Spectrum:
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    A : SymMatrix or array_like
        Square symmetric matrix with finite entries.  Only the lower triangle
        of a plain array is read.
    want_vectors : bool
        Also return orthonormal eigenvectors; column ``k`` pairs with
        ``eigenvalues[k]``.

    Returns
    -------
    Spectrum
    """
    a = _as_array(A)
    if not want_vectors:
        w = np.linalg.eigvalsh(a)
        return Spectrum(w[::-1].copy())
    w, V = np.linalg.eigh(a)
    w = w[::-1].copy()
    V = _canonical_vectors(w, V[:, ::-1].copy())
    return Spectrum(w, V)


def singular_values(M) -> np.ndarray:
    """Singular values of a real ``p x n`` matrix, sorted descending.

    Computed as square roots of the eigenvalues of ``M M^T`` clamped at zero,
    so the result has length ``p`` (``min(p, n)`` of them can be nonzero).
    """
    m = np.asarray(M, dtype=float)
    if m.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError("matrix has non-finite entries")
    if m.shape[0] == 0:
        return np.zeros(0)
    w = eig_sym(m @ m.T).eigenvalues
    return np.sqrt(np.clip(w, 0.0, None))


class Resolvent:
    """The resolvent ``R = (Gt - lam I)^{-1}`` held in the eigenbasis of ``Gt``.

    Building one costs a full eigendecomposition; evaluating quadratic forms
    against many vectors afterwards is cheap.
    """

    def __init__(self, Gt, lam: float, spectrum: Optional[Spectrum] = None):
        if spectrum is None or spectrum.eigenvectors is None:
            spectrum = eig_sym(Gt, want_vectors=True)
        self.lam = float(lam)
        self.spectrum = spectrum
        gaps = spectrum.eigenvalues - self.lam
        gap = np.min(np.abs(gaps))
        if not gap > RESOLVENT_GAP:
            raise SingularResolventError(
                f"lambda={lam!r} lies within {gap:.3g} of the spectrum (need > {RESOLVENT_GAP})"
            )
        self.d = 1.0 / gaps
        self.m = spectrum.n

    @property
    def trace_over_m(self) -> float:
        return float(np.mean(self.d))

    @property
    def trace_sq_over_m(self) -> float:
        return float(np.mean(self.d**2))

    def coords(self, v) -> np.ndarray:
        """Coordinates ``V^T v`` of ``v`` (or of the columns of ``v``)."""
        return self.spectrum.eigenvectors.T @ np.asarray(v, dtype=float)

    def quadratics(self, v):
        """Return ``(v^T R v, v^T R^2 v)``; vectorised over the columns of a 2-d ``v``."""
        w2 = self.coords(v) ** 2
        if w2.ndim == 1:
            return float(w2 @ self.d), float(w2 @ self.d**2)
        return self.d @ w2, (self.d**2) @ w2

    def apply(self, v) -> np.ndarray:
        """``R v`` computed through the eigenbasis."""
        V = self.spectrum.eigenvectors
        return V @ (self.d * (V.T @ np.asarray(v, dtype=float)))


def resolvent_quadratics(Gt, lam: float, v):
    """Quadratic forms of the resolvent of ``Gt`` at ``lam``.

    Returns ``(L1, L2, trR/m, trR^2/m)`` with ``L1 = v^T R v`` and
    ``L2 = v^T R^2 v``.  Raises :class:`SingularResolventError` when ``lam``
    is within ``1e-8`` of an eigenvalue.
    """
    v = np.asarray(v, dtype=float)
    R = Resolvent(Gt, lam)
    if v.shape != (R.m,):
        raise InputError(f"vector of length {v.shape} does not match dimension {R.m}")
    L1, L2 = R.quadratics(v)
    return L1, L2, R.trace_over_m, R.trace_sq_over_m
