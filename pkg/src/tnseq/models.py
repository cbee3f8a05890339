"""Parameter bundles for every model family and their validators.

All models are immutable: constructors coerce inputs to read-only
``complex128`` arrays and check dimensional consistency (raising
:class:`~tnseq.errors.DimensionMismatch`). Definitional constraints such
as stochasticity or trace preservation are *not* enforced at construction;
:func:`validate` reports them as data.

Operator banks are stored as 3-d arrays indexed ``[observation, row, col]``.
"""

from dataclasses import dataclass, field
from functools import singledispatch

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch

VALIDATION_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise ValueError("parameters must be finite")
    a.setflags(write=False)
    return a


def _vector(a, name):
    v = _frozen(a)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {v.shape}")
    return v


def _bank(a, name, square=True):
    b = _frozen(a)
    if b.ndim != 3 or b.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty stack of matrices, got shape {b.shape}")
    if square and b.shape[1] != b.shape[2]:
        raise DimensionMismatch(f"{name} must hold square matrices, got {b.shape[1:]}")
    return b


def _set(obj, **kw):
    for k, v in kw.items():
        object.__setattr__(obj, k, v)


@dataclass(frozen=True, eq=False)
class Umps:
    """Uniform MPS ``sigma^H A[y_N] ... A[y_1] rho0``."""

    sigma: np.ndarray
    cores: np.ndarray
    rho0: np.ndarray

    def __post_init__(self):
        _set(self, sigma=_vector(self.sigma, "sigma"), cores=_bank(self.cores, "cores"),
             rho0=_vector(self.rho0, "rho0"))
        d = self.cores.shape[1]
        if self.sigma.size != d or self.rho0.size != d:
            raise DimensionMismatch("boundary vectors must match the bond dimension")

    @property
    def obs_count(self):
        return self.cores.shape[0]

    @property
    def bond_dim(self):
        return self.cores.shape[1]


@dataclass(frozen=True, eq=False)
class Psr:
    """Predictive state representation ``(sigma, {tau_y}, x0)``."""

    sigma: np.ndarray
    ops: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        _set(self, sigma=_vector(self.sigma, "sigma"), ops=_bank(self.ops, "ops"),
             x0=_vector(self.x0, "x0"))
        d = self.ops.shape[1]
        if self.sigma.size != d or self.x0.size != d:
            raise DimensionMismatch("sigma and x0 must match the state dimension")

    @property
    def obs_count(self):
        return self.ops.shape[0]

    @property
    def dim(self):
        return self.ops.shape[1]


@dataclass(frozen=True, eq=False)
class MpsChain:
    """Open-boundary, non-uniform MPS.

    ``sites[i]`` has shape ``(obs_i, D_{i+1}, D_i)``; the first site has one
    column and the last one row.
    """

    sites: tuple

    def __post_init__(self):
        sites = tuple(_bank(s, f"sites[{i}]", square=False) for i, s in enumerate(self.sites))
        if not sites:
            raise DimensionMismatch("an MPS chain needs at least one site")
        if sites[0].shape[2] != 1 or sites[-1].shape[1] != 1:
            raise DimensionMismatch("open boundaries require D_0 = D_N = 1")
        for i in range(1, len(sites)):
            if sites[i].shape[2] != sites[i - 1].shape[1]:
                raise DimensionMismatch(f"bond mismatch between sites {i - 1} and {i}")
        _set(self, sites=sites)

    @property
    def length(self):
        return len(self.sites)

    @property
    def obs_counts(self):
        return tuple(s.shape[0] for s in self.sites)


@dataclass(frozen=True, eq=False)
class Hmm:
    """Hidden Markov model with column-stochastic ``transition`` (n x n) and
    ``emission`` (obs x n)."""

    transition: np.ndarray
    emission: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        a = _frozen(self.transition)
        c = _frozen(self.emission)
        x0 = _vector(self.x0, "x0")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch("transition must be square")
        if c.ndim != 2 or c.shape[1] != a.shape[0] or c.shape[0] < 1:
            raise DimensionMismatch("emission must be (obs, n)")
        if x0.size != a.shape[0]:
            raise DimensionMismatch("x0 must have length n")
        _set(self, transition=a, emission=c, x0=x0)

    @property
    def obs_count(self):
        return self.emission.shape[0]

    @property
    def state_dim(self):
        return self.transition.shape[0]

    def observable_operators(self):
        """``T_y = diag(C[y, :]) @ A`` for every observation."""
        return self.emission[:, :, None] * self.transition[None, :, :]


@dataclass(frozen=True, eq=False)
class Ubm:
    """Uniform Born machine ``|alpha^H A[y_N] ... A[y_1] omega0|^2``."""

    alpha: np.ndarray
    cores: np.ndarray
    omega0: np.ndarray

    def __post_init__(self):
        _set(self, alpha=_vector(self.alpha, "alpha"), cores=_bank(self.cores, "cores"),
             omega0=_vector(self.omega0, "omega0"))
        d = self.cores.shape[1]
        if self.alpha.size != d or self.omega0.size != d:
            raise DimensionMismatch("boundary vectors must match the bond dimension")

    @property
    def obs_count(self):
        return self.cores.shape[0]

    @property
    def bond_dim(self):
        return self.cores.shape[1]


@dataclass(frozen=True, eq=False)
class Noom:
    """Norm-observable operator model ``({phi_y}, psi0)``."""

    phis: np.ndarray
    psi0: np.ndarray

    def __post_init__(self):
        _set(self, phis=_bank(self.phis, "phis"), psi0=_vector(self.psi0, "psi0"))
        if self.psi0.size != self.phis.shape[1]:
            raise DimensionMismatch("psi0 must match the operator dimension")

    @property
    def obs_count(self):
        return self.phis.shape[0]

    @property
    def dim(self):
        return self.phis.shape[1]


@dataclass(frozen=True, eq=False)
class KrausSet:
    """Kraus operators of one completely positive map (all the same shape).

    Boundary sets of a :class:`Ulps` may hold rectangular ``D x m`` blocks;
    core sets are square.
    """

    ops: np.ndarray

    def __post_init__(self):
        _set(self, ops=_bank(self.ops, "Kraus ops", square=False))

    @property
    def kraus_rank(self):
        return self.ops.shape[0]

    @property
    def shape(self):
        return self.ops.shape[1:]

    def liouville(self):
        """``sum_b kron(conj(K_b), K_b)``."""
        return sum(np.kron(k.conj(), k) for k in self.ops)

    def choi(self):
        vs = [la.vectorize(k) for k in self.ops]
        return sum(np.outer(v, v.conj()) for v in vs)

    def gram(self):
        """``sum_b K_b^H K_b``."""
        return np.einsum("bji,bjk->ik", self.ops.conj(), self.ops)

    def outer_sum(self):
        """``sum_b K_b K_b^H``."""
        return np.einsum("bij,bkj->ik", self.ops, self.ops.conj())


def _kraus_tuple(sets, name):
    out = tuple(s if isinstance(s, KrausSet) else KrausSet(s) for s in sets)
    if not out:
        raise DimensionMismatch(f"{name} must be non-empty")
    return out


@dataclass(frozen=True, eq=False)
class Hqmm:
    """Hidden quantum Markov model in Kraus form.

    ``kraus[y]`` is the Kraus set of observation ``y``; ``rho0`` is the
    column-first vectorized initial density matrix. Liouville and Choi forms
    are derived views.
    """

    kraus: tuple
    rho0: np.ndarray

    def __post_init__(self):
        kraus = _kraus_tuple(self.kraus, "kraus")
        n = kraus[0].shape[0]
        for ks in kraus:
            if ks.shape != (n, n):
                raise DimensionMismatch("all Kraus operators must be n x n")
        rho0 = _vector(self.rho0, "rho0")
        if rho0.size != n * n:
            raise DimensionMismatch("rho0 must be a vectorized n x n matrix")
        _set(self, kraus=kraus, rho0=rho0)

    @property
    def obs_count(self):
        return len(self.kraus)

    @property
    def state_dim(self):
        return self.kraus[0].shape[0]

    @property
    def state_dim_sq(self):
        return self.state_dim ** 2

    @property
    def rho0_matrix(self):
        n = self.state_dim
        return la.unvectorize(self.rho0, n, n)

    def liouville_ops(self):
        return np.stack([ks.liouville() for ks in self.kraus])

    def choi_matrices(self):
        return np.stack([ks.choi() for ks in self.kraus])


@dataclass(frozen=True, eq=False)
class Ulps:
    """Uniform locally purified state.

    The left and right boundary sets contribute the vectorized PSD matrices
    ``sum_b K_b K_b^H``; a singleton identity on the left gives the HQMM
    evaluation functional ``vec(I)``.
    """

    left_kraus: KrausSet
    core_kraus: tuple
    right_kraus: KrausSet

    def __post_init__(self):
        left = self.left_kraus if isinstance(self.left_kraus, KrausSet) else KrausSet(self.left_kraus)
        right = self.right_kraus if isinstance(self.right_kraus, KrausSet) else KrausSet(self.right_kraus)
        cores = _kraus_tuple(self.core_kraus, "core_kraus")
        d = cores[0].shape[0]
        for ks in cores:
            if ks.shape != (d, d):
                raise DimensionMismatch("core Kraus operators must be D x D")
        if left.shape[0] != d or right.shape[0] != d:
            raise DimensionMismatch("boundary Kraus operators must have D rows")
        _set(self, left_kraus=left, core_kraus=cores, right_kraus=right)

    @property
    def obs_count(self):
        return len(self.core_kraus)

    @property
    def bond_dim(self):
        return self.core_kraus[0].shape[0]

    def left_functional(self):
        return la.vectorize(self.left_kraus.outer_sum())

    def right_state(self):
        return la.vectorize(self.right_kraus.outer_sum())


# --------------------------------------------------------------------------
# linear (PSR-shaped) views


def linear_view(model):
    """Return ``(sigma, ops, x0)`` with ``score = sigma^H ops[y_T] ... ops[y_1] x0``.

    Born-type models are lifted to their ``n^2``-dimensional Kronecker form.
    """
    if isinstance(model, Umps):
        return model.sigma, model.cores, model.rho0
    if isinstance(model, Psr):
        return model.sigma, model.ops, model.x0
    if isinstance(model, Hmm):
        return np.ones(model.state_dim, dtype=complex), model.observable_operators(), model.x0
    if isinstance(model, Ubm):
        ops = np.stack([np.kron(a.conj(), a) for a in model.cores])
        return np.kron(model.alpha.conj(), model.alpha), ops, np.kron(model.omega0.conj(), model.omega0)
    if isinstance(model, Noom):
        ops = np.stack([np.kron(p.conj(), p) for p in model.phis])
        return la.vec_identity(model.dim), ops, np.kron(model.psi0.conj(), model.psi0)
    if isinstance(model, Hqmm):
        return la.vec_identity(model.state_dim), model.liouville_ops(), model.rho0
    if isinstance(model, Ulps):
        ops = np.stack([ks.liouville() for ks in model.core_kraus])
        return model.left_functional(), ops, model.right_state()
    raise TypeError(f"no linear view for {type(model).__name__}")


def transfer_operator(model):
    """Sum of the flat observation operators of a uMPS, PSR or HMM."""
    if isinstance(model, Umps):
        return model.cores.sum(axis=0)
    if isinstance(model, Psr):
        return model.ops.sum(axis=0)
    if isinstance(model, Hmm):
        return model.observable_operators().sum(axis=0)
    raise TypeError(f"use transfer_operator_lifted for {type(model).__name__}")


def transfer_operator_lifted(model):
    """Sum of the Kronecker-lifted operators of a uBM, NOOM, HQMM or uLPS."""
    if not isinstance(model, (Ubm, Noom, Hqmm, Ulps)):
        raise TypeError(f"{type(model).__name__} has no lifted transfer operator")
    return linear_view(model)[1].sum(axis=0)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    name: str
    residual: float
    tolerance: float

    def __str__(self):
        return f"{self.name} residual {self.residual:.6g} (tol {self.tolerance:g})"


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    violations: tuple = field(default_factory=tuple)
    residuals: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        if self.ok:
            return f"{self.kind}: valid"
        return f"{self.kind}: " + "; ".join(map(str, self.violations))


class _Checker:
    def __init__(self, kind, tol):
        self.kind = kind
        self.tol = tol
        self.violations = []
        self.residuals = {}

    def check(self, name, residual):
        residual = float(residual)
        self.residuals[name] = residual
        if not residual <= self.tol:
            self.violations.append(Violation(name, residual, self.tol))

    def real(self, name, *arrays):
        self.check(name, max((np.max(np.abs(np.imag(a)), initial=0.0) for a in arrays), default=0.0))

    def report(self):
        return ValidationReport(self.kind, tuple(self.violations), dict(self.residuals))


def _maxabs(a):
    return float(np.max(np.abs(a), initial=0.0))


@singledispatch
def validate(model, tol=VALIDATION_TOL, strict_real=False):
    """Check a model's definitional constraints.

    Returns a :class:`ValidationReport`; an empty violation list means
    the model is valid. With ``strict_real`` every parameter must also be
    real within ``tol``.
    """
    raise TypeError(f"cannot validate {type(model).__name__}")


@validate.register
def _(model: Umps, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("umps", tol)
    if strict_real:
        c.real("imaginary part", model.sigma, model.cores, model.rho0)
    return c.report()


@validate.register
def _(model: MpsChain, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("mps_chain", tol)
    if strict_real:
        c.real("imaginary part", *model.sites)
    return c.report()


@validate.register
def _(model: Ubm, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("ubm", tol)
    if strict_real:
        c.real("imaginary part", model.alpha, model.cores, model.omega0)
    return c.report()


@validate.register
def _(model: Ulps, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("ulps", tol)
    if strict_real:
        c.real("imaginary part", model.left_kraus.ops, model.right_kraus.ops,
               *(k.ops for k in model.core_kraus))
    return c.report()


@validate.register
def _(model: Psr, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("psr", tol)
    s = model.sigma.conj()
    c.check("normalization", abs(s @ model.x0 - 1.0))
    c.check("fixed point", _maxabs(s @ model.ops.sum(axis=0) - s))
    if strict_real:
        c.real("imaginary part", model.sigma, model.ops, model.x0)
    return c.report()


def _check_stochastic(c, prefix, a, emission):
    ones = np.ones(a.shape[0])
    c.real(f"{prefix}imaginary part", a, emission)
    c.check(f"{prefix}negativity", max(0.0, -float(np.min(a.real)), -float(np.min(emission.real))))
    c.check(f"{prefix}transition column sums", _maxabs(ones @ a - ones))
    c.check(f"{prefix}emission column sums", _maxabs(emission.sum(axis=0) - ones))


def _check_belief(c, x0):
    c.real("x0 imaginary part", x0)
    c.check("x0 negativity", max(0.0, -float(np.min(x0.real))))
    c.check("x0 normalization", abs(x0.sum() - 1.0))


@validate.register
def _(model: Hmm, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("hmm", tol)
    _check_stochastic(c, "", model.transition, model.emission)
    _check_belief(c, model.x0)
    return c.report()


@validate.register
def _(model: Noom, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("noom", tol)
    gram = np.einsum("yji,yjk->ik", model.phis.conj(), model.phis)
    c.check("completeness", _maxabs(gram - np.eye(model.dim)))
    c.check("psi0 norm", abs(np.linalg.norm(model.psi0) - 1.0))
    if strict_real:
        c.real("imaginary part", model.phis, model.psi0)
    return c.report()


def check_density(c, rho, prefix="rho0 "):
    c.check(prefix + "hermiticity", _maxabs(rho - rho.conj().T))
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    c.check(prefix + "positivity", max(0.0, -float(w.min())))
    c.check(prefix + "trace", abs(np.trace(rho) - 1.0))


def check_trace_preserving(c, kraus_sets, n, name="trace preservation"):
    gram = sum(ks.gram() for ks in kraus_sets)
    c.check(name, _maxabs(gram - np.eye(n)))


def check_completely_positive(c, kraus_sets, name="complete positivity"):
    """Most negative Choi eigenvalue; zero up to rounding for Kraus-form maps."""
    worst = 0.0
    for ks in kraus_sets:
        choi = ks.choi()
        worst = max(worst, -float(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T)).min()))
    c.check(name, worst)


@validate.register
def _(model: Hqmm, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("hqmm", tol)
    check_density(c, model.rho0_matrix)
    check_completely_positive(c, model.kraus)
    check_trace_preserving(c, model.kraus, model.state_dim)
    if strict_real:
        c.real("imaginary part", model.rho0, *(k.ops for k in model.kraus))
    return c.report()


@validate.register
def _(model: KrausSet, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("kraus", tol)
    if strict_real:
        c.real("imaginary part", model.ops)
    return c.report()


MODEL_TYPES = {
    "umps": Umps,
    "mps_chain": MpsChain,
    "psr": Psr,
    "hmm": Hmm,
    "ubm": Ubm,
    "noom": Noom,
    "hqmm": Hqmm,
    "ulps": Ulps,
}


def model_kind(model):
    for name, cls in MODEL_TYPES.items():
        if type(model) is cls:
            return name
    from . import controlled  # noqa: F401  (registers controlled kinds)
    for name, cls in controlled.CONTROLLED_TYPES.items():
        if type(model) is cls:
            return name
    raise TypeError(f"unknown model type {type(model).__name__}")
