"""Dense complex linear algebra used by every model class.

Conventions
-----------
* Vectorization is column-first: ``vectorize(m)[c * rows + r] == m[r, c]``.
  With this convention ``vectorize(X @ Y @ Z) == kron(Z.T, X) @ vectorize(Y)``
  and the Liouville operator of a Kraus set acting on ``vectorize(rho)`` is
  ``sum_b kron(conj(K_b), K_b)``.
* All arrays are ``complex128``. Functions never modify their inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    NonConvergence,
    NotHermitian,
    NotPositiveDefinite,
)

ATOL = 1e-10
RTOL = 1e-9
EIG_TOL = 1e-12
EIG_MAX_ITER = 100_000
DEGENERACY_THRESHOLD = 1e-8

# fixed start vector for power iteration; keeps results reproducible
_START_SEED = 20_201_231


def as_matrix(a, name="matrix"):
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_vector(a, name="vector"):
    v = np.asarray(a, dtype=np.complex128)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def _square(m, name="matrix"):
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    return m


def isclose(a, b, atol=ATOL, rtol=RTOL):
    """Symmetric mixed tolerance test ``|a-b| <= atol + rtol*max(|a|,|b|)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) <= atol + rtol * np.maximum(np.abs(a), np.abs(b))


def allclose(a, b, atol=ATOL, rtol=RTOL):
    return bool(np.all(isclose(a, b, atol, rtol)))


def kron(a, b):
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vectorize(m):
    """Column-first stacking of a matrix."""
    return as_matrix(m).reshape(-1, order="F")


def unvectorize(v, rows, cols):
    v = as_vector(v)
    if v.size != rows * cols:
        raise DimensionMismatch(f"cannot reshape vector of length {v.size} to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def vec_identity(n):
    return vectorize(np.eye(n))


def canonical_phase(v):
    """Rotate ``v`` so its largest-magnitude entry is real positive.

    Ties go to the lowest index (``np.argmax`` semantics).
    """
    v = as_vector(v)
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        return v.copy()
    out = v * (np.conj(v[k]) / abs(v[k]))
    out[k] = abs(v[k])  # exactly real, not merely up to rounding
    return out


@dataclass(frozen=True)
class FixedPointResult:
    """Dominant left eigenpair of a transfer operator.

    ``fixed_point`` satisfies ``fixed_point.conj() @ m ~= eigenvalue * fixed_point.conj()``
    and has unit 2-norm. ``gap_ratio`` is ``|lambda_2| / |lambda_1|``.
    """

    eigenvalue: complex
    fixed_point: np.ndarray
    gap_ratio: float
    iterations: int
    residual: float

    @property
    def spectral_gap(self):
        return 1.0 - self.gap_ratio


def spectral_ratio(m):
    """``|lambda_2| / |lambda_1|`` from the dense spectrum (0 for 1x1)."""
    m = _square(m)
    if m.shape[0] == 1:
        return 0.0 if m[0, 0] != 0 else 1.0
    mags = np.sort(np.abs(np.linalg.eigvals(m)))[::-1]
    if mags[0] == 0:
        return 1.0
    return float(mags[1] / mags[0])


def dominant_left_eigenpair(m, tol=EIG_TOL, max_iter=EIG_MAX_ITER, degeneracy=DEGENERACY_THRESHOLD):
    """Left Perron-type eigenpair of ``m`` by power iteration on ``m^H``.

    The residual ``||m^H s - conj(lam) s||`` is measured relative to
    ``max(1, |lam|)``. The returned vector is phase-canonical.

    Raises
    ------
    DegenerateSpectrum
        If ``|lambda_2|/|lambda_1| > 1 - degeneracy``.
    NonConvergence
        If the residual is still above ``tol`` after ``max_iter`` steps.
    """
    m = _square(m)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    ratio = spectral_ratio(m)
    if ratio > 1.0 - degeneracy:
        raise DegenerateSpectrum(f"|lambda_2|/|lambda_1| = {ratio:.12g} is within {degeneracy:g} of 1")

    mh = m.conj().T
    n = m.shape[0]
    rng = np.random.default_rng(_START_SEED)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)

    residual = np.inf
    for it in range(1, max_iter + 1):
        w = mh @ v
        mu = np.vdot(v, w)
        residual = float(np.linalg.norm(w - mu * v)) / max(1.0, abs(mu))
        if residual < tol:
            break
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise DegenerateSpectrum("iterate annihilated: operator is nilpotent on the start vector")
        v = w / nw
    else:
        raise NonConvergence(f"residual {residual:.3g} > {tol:g} after {max_iter} iterations")

    v = canonical_phase(v / np.linalg.norm(v))
    lam = complex(np.conj(np.vdot(v, mh @ v)))
    return FixedPointResult(lam, v, ratio, it, residual)


def _hermitian_eigh(p, tol):
    p = _square(p)
    scale = max(1.0, float(np.max(np.abs(p)))) if p.size else 1.0
    if np.max(np.abs(p - p.conj().T), initial=0.0) > tol * scale:
        raise NotHermitian("matrix is not Hermitian within tolerance")
    return np.linalg.eigh(0.5 * (p + p.conj().T))


def herm_sqrt(p, tol=ATOL):
    """Principal square root of a Hermitian PSD matrix."""
    w, v = _hermitian_eigh(p, tol)
    if w.size and w.min() < -tol:
        raise NotPositiveDefinite(f"eigenvalue {w.min():.3g} < -{tol:g}")
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def herm_inv_sqrt(p, tol=ATOL):
    """Inverse principal square root; every eigenvalue must exceed ``tol``."""
    w, v = _hermitian_eigh(p, tol)
    if w.size and w.min() <= tol:
        raise NotPositiveDefinite(f"eigenvalue {w.min():.3g} <= {tol:g}")
    return (v / np.sqrt(w)) @ v.conj().T


def is_hermitian(m, tol=ATOL):
    m = _square(m)
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_psd(m, tol=ATOL):
    m = _square(m)
    if not is_hermitian(m, tol):
        return False
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return bool(w.size == 0 or w.min() >= -tol)


def choi_reshuffle(l, n):
    """Exchange Liouville and Choi index orderings (an involution).

    ``kron(conj(K), K)`` maps to ``outer(vectorize(K), vectorize(K).conj())``.
    """
    l = _square(l)
    if l.shape[0] != n * n:
        raise DimensionMismatch(f"expected {n * n}x{n * n} matrix, got {l.shape}")
    return l.reshape(n, n, n, n).transpose(3, 1, 2, 0).reshape(n * n, n * n)
