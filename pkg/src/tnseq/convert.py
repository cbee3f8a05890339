"""Constructive conversions between model families.

Exact lifts (HMM/NOOM/uBM to PSR form, PSR to uMPS, NOOM to HQMM, HQMM to uLPS) preserve
every joint score. The fixed-point conversions (uMPS to PSR, uBM to NOOM,
uLPS to HQMM) rescale the operators by the dominant eigenvalue of the
transfer operator and, for the Born-type families, apply the similarity
``S = X^{1/2}`` where ``X`` is the fixed point reshaped to a matrix. They
preserve the non-terminating conditionals, not the finite joints.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import NotCompletelyPositive, NumericalError, OrthogonalBoundary
from .evaluate import require_valid, transfer_fixed_point
from .models import Hqmm, KrausSet, Noom, Psr, Ulps, Umps, model_kind, validate

CONVERSION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ConversionReport:
    rescale_factor: complex = 1.0
    similarity: np.ndarray = None
    residuals: dict = field(default_factory=dict)
    fixed_point: la.FixedPointResult = None


def _require(residuals, tol):
    bad = {k: v for k, v in residuals.items() if not v <= tol}
    if bad:
        raise NumericalError(f"conversion residuals above {tol:g}: {bad}")


def _maxabs(a):
    return float(np.max(np.abs(a), initial=0.0))


# --------------------------------------------------------------------------
# exact lifts


def hmm_to_psr(h):
    """Observable-operator form ``tau_y = diag(C[y]) A``, ``sigma = 1``."""
    require_valid(h)
    return Psr(np.ones(h.state_dim), h.observable_operators(), h.x0)


def noom_to_psr(m):
    """Kronecker lift ``tau_y = conj(phi_y) (x) phi_y`` with ``sigma = vec(I)``."""
    require_valid(m)
    ops = np.stack([np.kron(p.conj(), p) for p in m.phis])
    return Psr(la.vec_identity(m.dim), ops, np.kron(m.psi0.conj(), m.psi0))


def ubm_to_psr(b):
    """Kronecker lift of a uBM to the uMPS it is a special case of."""
    ops = np.stack([np.kron(a.conj(), a) for a in b.cores])
    return Umps(np.kron(b.alpha.conj(), b.alpha), ops, np.kron(b.omega0.conj(), b.omega0))


def psr_to_umps(p):
    """A PSR is a uMPS whose functional happens to be a fixed point."""
    require_valid(p)
    return Umps(p.sigma, p.ops, p.x0)


def noom_to_hqmm(m):
    """Singleton Kraus sets ``{phi_y}`` and ``rho0 = vec(psi0 psi0^H)``."""
    require_valid(m)
    kraus = tuple(KrausSet(p[None]) for p in m.phis)
    return Hqmm(kraus, la.vectorize(np.outer(m.psi0, m.psi0.conj())))


def hqmm_to_ulps(h):
    """uLPS with left boundary ``{I}`` and right boundary ``{rho0^{1/2}}``."""
    require_valid(h)
    n = h.state_dim
    root = la.herm_sqrt(h.rho0_matrix, tol=1e-9)
    return Ulps(KrausSet(np.eye(n)[None]), h.kraus, KrausSet(root[None]))


# --------------------------------------------------------------------------
# Kraus / Liouville / Choi


def kraus_to_liouville(k):
    if not isinstance(k, KrausSet):
        k = KrausSet(k)
    return k.liouville()


def liouville_to_kraus(l, tol=la.ATOL):
    """Kraus set from the eigendecomposition of the Choi matrix.

    Kraus operators are ordered by decreasing Choi eigenvalue and are
    phase-canonical; they are unique only up to unitary mixing.
    """
    l = la.as_matrix(l)
    n = math.isqrt(l.shape[0])
    if n * n != l.shape[0]:
        raise la.DimensionMismatch("Liouville matrix must be n^2 x n^2")
    choi = la.choi_reshuffle(l, n)
    if not la.is_hermitian(choi, tol * max(1.0, _maxabs(choi))):
        raise NotCompletelyPositive("Choi matrix is not Hermitian")
    w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    if w.min() < -tol * max(1.0, abs(w.max())):
        raise NotCompletelyPositive(f"Choi matrix has eigenvalue {w.min():.3g}")
    keep = np.flatnonzero(w > tol)[::-1]
    if keep.size == 0:
        raise NotCompletelyPositive("Liouville matrix is zero")
    ops = [math.sqrt(w[i]) * la.unvectorize(la.canonical_phase(v[:, i]), n, n) for i in keep]
    return KrausSet(np.stack(ops))


def choi_rank(l, tol=la.ATOL):
    n = math.isqrt(l.shape[0])
    w = np.linalg.eigvalsh(la.choi_reshuffle(l, n))
    return int(np.sum(w > tol))


# --------------------------------------------------------------------------
# fixed-point conversions


def umps_to_psr(u, tol=CONVERSION_TOL, max_iter=la.EIG_MAX_ITER):
    """Non-terminating uMPS to PSR.

    ``tau_y -> tau_y / lambda``, ``sigma -> sigma_*`` and
    ``x0 = rho0 / (sigma_*^H rho0)``.
    """
    fp = transfer_fixed_point(u, max_iter=max_iter)
    lam = fp.eigenvalue
    s = fp.fixed_point
    c = np.vdot(s, u.rho0)
    if abs(c) <= tol * np.linalg.norm(u.rho0):
        raise OrthogonalBoundary(f"sigma_*^H rho0 = {abs(c):.3g}")
    psr = Psr(s, u.cores / lam, u.rho0 / c)
    report = validate(psr, tol=tol)
    _require(report.residuals, tol)
    return psr, ConversionReport(lam, None, report.residuals, fp)


def _positive_eigenvalue(lam, tol=1e-8):
    if abs(lam.imag) >= tol * abs(lam) or lam.real <= 0:
        raise NumericalError(f"dominant eigenvalue {lam!r} of a CP transfer operator is not real positive")
    return lam.real


def _similarity(fp, n, tol):
    x = la.unvectorize(fp.fixed_point, n, n)
    herm_residual = _maxabs(x - x.conj().T)
    x = 0.5 * (x + x.conj().T)
    s = la.herm_sqrt(x, tol)
    s_inv = la.herm_inv_sqrt(x, tol)
    return s, s_inv, herm_residual


def ubm_to_noom(b, tol=CONVERSION_TOL, max_iter=la.EIG_MAX_ITER):
    """Non-terminating uBM to NOOM.

    ``phi_y = S (A_y / sqrt(lambda)) S^{-1}`` and ``psi0 = S omega0 / |S omega0|``
    with ``S`` the square root of the matricized fixed point.
    """
    fp = transfer_fixed_point(b, max_iter=max_iter)
    lam = _positive_eigenvalue(fp.eigenvalue)
    n = b.bond_dim
    s, s_inv, herm_residual = _similarity(fp, n, tol)
    phis = np.stack([s @ a @ s_inv for a in b.cores]) / math.sqrt(lam)
    psi = s @ b.omega0
    nrm = np.linalg.norm(psi)
    if nrm <= tol:
        raise OrthogonalBoundary("S omega0 vanishes")
    noom = Noom(phis, psi / nrm)
    report = validate(noom, tol=tol)
    residuals = dict(report.residuals, **{"fixed point hermiticity": herm_residual})
    _require(residuals, tol)
    return noom, ConversionReport(math.sqrt(lam), s, residuals, fp)


def ulps_to_hqmm(u, tol=CONVERSION_TOL, max_iter=la.EIG_MAX_ITER):
    """Non-terminating uLPS to HQMM.

    Each Kraus operator becomes ``S (K / sqrt(lambda)) S^{-1}``; the initial
    density matrix is ``S (sum K_R K_R^H) S``, Hermitized and trace-normalized.
    """
    fp = transfer_fixed_point(u, max_iter=max_iter)
    lam = _positive_eigenvalue(fp.eigenvalue)
    n = u.bond_dim
    s, s_inv, herm_residual = _similarity(fp, n, tol)
    scale = 1.0 / math.sqrt(lam)
    kraus = tuple(KrausSet(np.stack([scale * (s @ k @ s_inv) for k in ks.ops])) for ks in u.core_kraus)
    rho = s @ u.right_kraus.outer_sum() @ s
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if tr <= tol:
        raise OrthogonalBoundary("transformed right boundary has zero trace")
    h = Hqmm(kraus, la.vectorize(rho / tr))
    report = validate(h, tol=tol)
    residuals = dict(report.residuals, **{"fixed point hermiticity": herm_residual})
    _require(residuals, tol)
    return h, ConversionReport(math.sqrt(lam), s, residuals, fp)


# --------------------------------------------------------------------------
# similarity equivalence of PSRs


def verify_similarity(a, b, s, tol=CONVERSION_TOL):
    """Check that ``b`` is ``a`` transformed by ``s``.

    Relations: ``x0_b = S^{-1} x0_a``, ``tau_b = S^{-1} tau_a S`` and
    ``sigma_b^H = sigma_a^H S``. Returns the residual of each; finding ``S``
    is not attempted.
    """
    s = la.as_matrix(s)
    s_inv = np.linalg.inv(s)
    return {
        "initial state": _maxabs(b.x0 - s_inv @ a.x0),
        "operators": max(_maxabs(tb - s_inv @ ta @ s) for ta, tb in zip(a.ops, b.ops)),
        "evaluation functional": _maxabs(b.sigma.conj() - a.sigma.conj() @ s),
    }


CONVERSIONS = {
    ("hmm", "psr"): hmm_to_psr,
    ("noom", "psr"): noom_to_psr,
    ("ubm", "umps"): ubm_to_psr,
    ("psr", "umps"): psr_to_umps,
    ("noom", "hqmm"): noom_to_hqmm,
    ("hqmm", "ulps"): hqmm_to_ulps,
    ("umps", "psr"): umps_to_psr,
    ("ubm", "noom"): ubm_to_noom,
    ("ulps", "hqmm"): ulps_to_hqmm,
}


def convert(model, target, tol=CONVERSION_TOL, max_iter=la.EIG_MAX_ITER):
    """Dispatch to the conversion for ``(kind(model), target)``.

    Returns ``(converted, report_or_None)``.
    """
    kind = model_kind(model)
    if (kind, target) == ("qomdp", "io_hqmm"):
        from .controlled import qomdp_to_iohqmm

        return qomdp_to_iohqmm(model), None
    try:
        fn = CONVERSIONS[(kind, target)]
    except KeyError:
        raise ValueError(f"no conversion from {kind} to {target}") from None
    if fn in (umps_to_psr, ubm_to_noom, ulps_to_hqmm):
        return fn(model, tol=tol, max_iter=max_iter)
    return fn(model), None

