"""Joint scores, recursive filtering and non-terminating conditionals.

Every product is applied right-to-left as successive matrix-vector (or,
for Kraus-form models, matrix-matrix) applications; operator products are
never materialized.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import (
    ComplexScoreWarning,
    DimensionMismatch,
    InvalidModel,
    NegativeScoreWarning,
    UnsupportedOperation,
    ZeroProbabilityPrefix,
)
from .models import (
    Hmm,
    Hqmm,
    MpsChain,
    Noom,
    Psr,
    Ubm,
    Ulps,
    Umps,
    linear_view,
    model_kind,
    validate,
)

ZERO_PROB = 1e-300
IMAG_TOL = 1e-9


def as_sequence(seq, obs_count):
    """Coerce ``seq`` to a tuple of ints and range-check it."""
    out = tuple(int(y) for y in seq)
    for y in out:
        if not 0 <= y < obs_count:
            raise ValueError(f"observation {y} outside [0, {obs_count})")
    return out


def require_valid(model, tol=None):
    kw = {} if tol is None else {"tol": tol}
    report = validate(model, **kw)
    if not report.ok:
        raise InvalidModel(str(report), report)
    return report


# --------------------------------------------------------------------------
# joint scores


def _apply_kraus(kraus_set, rho):
    return sum(k @ rho @ k.conj().T for k in kraus_set.ops)


def raw_joint(model, seq):
    """Un-projected joint score; complex for uMPS/PSR-type models."""
    if isinstance(model, MpsChain):
        if len(seq) != model.length:
            raise DimensionMismatch(f"sequence length {len(seq)} != chain length {model.length}")
        v = np.ones(1, dtype=complex)
        for site, y in zip(model.sites, seq):
            if not 0 <= y < site.shape[0]:
                raise ValueError(f"observation {y} out of range")
            v = site[y] @ v
        return complex(v[0])

    seq = as_sequence(seq, model.obs_count)
    if isinstance(model, Ubm):
        v = model.omega0
        for y in seq:
            v = model.cores[y] @ v
        return abs(np.vdot(model.alpha, v)) ** 2
    if isinstance(model, Noom):
        v = model.psi0
        for y in seq:
            v = model.phis[y] @ v
        return float(np.vdot(v, v).real)
    if isinstance(model, Hqmm):
        rho = model.rho0_matrix
        for y in seq:
            rho = _apply_kraus(model.kraus[y], rho)
        return complex(np.trace(rho))
    if isinstance(model, Ulps):
        rho = model.right_kraus.outer_sum()
        for y in seq:
            rho = _apply_kraus(model.core_kraus[y], rho)
        return complex(np.trace(model.left_kraus.outer_sum() @ rho))

    sigma, ops, v = linear_view(model)
    for y in seq:
        v = ops[y] @ v
    return complex(np.vdot(sigma, v))


def joint(model, seq, check=False):
    """Joint score of ``seq`` (a probability for the constructive classes).

    uMPS/PSR scores are complex in general: the real part is returned and a
    :class:`~tnseq.errors.ComplexScoreWarning` is issued when the imaginary
    part is not negligible. Negative values are returned as they are, with a
    :class:`~tnseq.errors.NegativeScoreWarning`.
    """
    if check:
        require_valid(model)
    z = raw_joint(model, seq)
    if isinstance(z, float):
        return z
    if abs(z.imag) > IMAG_TOL * max(abs(z.real), 1e-300):
        warnings.warn(f"score {z!r} has a non-negligible imaginary part", ComplexScoreWarning, stacklevel=2)
    if isinstance(model, (Umps, Psr, MpsChain)) and z.real < -IMAG_TOL:
        warnings.warn(f"negative score {z.real!r}", NegativeScoreWarning, stacklevel=2)
    return float(z.real)


def joint_lifted(model, seq):
    """Joint score through the Kronecker-lifted linear view (real part)."""
    seq = as_sequence(seq, model.obs_count)
    sigma, ops, v = linear_view(model)
    for y in seq:
        v = ops[y] @ v
    return float(np.vdot(sigma, v).real)


# --------------------------------------------------------------------------
# filtering


@dataclass(frozen=True)
class FilterState:
    """Normalized recursive state plus the accumulated prefix log-probability.

    ``sign`` tracks the sign of the prefix score; it only differs from +1
    for raw PSRs that assign negative values.
    """

    model_kind: str
    state: np.ndarray
    log_prob: float = 0.0
    sign: float = 1.0
    steps: int = 0

    @property
    def prob(self):
        return self.sign * math.exp(self.log_prob)

    def matrix(self):
        """The state as a density matrix (HQMM/QOMDP kinds only)."""
        n = math.isqrt(self.state.size)
        return la.unvectorize(self.state, n, n)


FILTERABLE = (Psr, Hmm, Noom, Hqmm)


def filter_init(model, check=True):
    if not isinstance(model, FILTERABLE):
        raise UnsupportedOperation(
            f"{type(model).__name__} has no recursive state; convert it first "
            "(umps_to_psr, ubm_to_noom, ulps_to_hqmm)"
        )
    if check:
        require_valid(model)
    if isinstance(model, Psr):
        x = model.x0
    elif isinstance(model, Hmm):
        x = model.x0
    elif isinstance(model, Noom):
        x = model.psi0
    else:
        x = model.rho0
    return FilterState(model_kind(model), np.array(x, dtype=complex))


def _unnormalized(model, state, y):
    """Return ``(new_state, normalizer)`` for one observation."""
    if isinstance(model, Psr):
        v = model.ops[y] @ state
        return v, complex(np.vdot(model.sigma, v))
    if isinstance(model, Hmm):
        v = model.emission[y] * (model.transition @ state)
        return v, complex(v.sum())
    if isinstance(model, Noom):
        v = model.phis[y] @ state
        nrm = float(np.linalg.norm(v))
        return v, nrm
    n = model.state_dim
    rho = _apply_kraus(model.kraus[y], la.unvectorize(state, n, n))
    return la.vectorize(rho), complex(np.trace(rho))


def _divide(v, p):
    """``v / p`` that stays exact for real ``p``.

    numpy divides a complex array by a scalar through its reciprocal, so
    ``0.4375 / 0.625`` would come out as ``0.7000000000000001``.
    """
    if p.imag != 0:
        return v / p
    out = np.empty_like(v)
    out.real = v.real / p.real
    out.imag = v.imag / p.real
    return out


def predict(model, st):
    """Per-observation probabilities ``P(y | state)`` (real parts)."""
    out = np.empty(model.obs_count)
    for y in range(model.obs_count):
        _, p = _unnormalized(model, st.state, y)
        out[y] = p ** 2 if isinstance(model, Noom) else p.real
    return out


def filter_step(model, st, y):
    """Condition ``st`` on observation ``y`` and renormalize."""
    y = as_sequence([y], model.obs_count)[0]
    v, p = _unnormalized(model, st.state, y)
    if isinstance(model, Noom):
        prob = p ** 2
        if p < math.sqrt(ZERO_PROB) or prob < ZERO_PROB:
            raise ZeroProbabilityPrefix(f"observation {y} has probability {prob:.3g}")
        return FilterState(st.model_kind, v / p, st.log_prob + math.log(prob), st.sign, st.steps + 1)
    if abs(p) < ZERO_PROB:
        raise ZeroProbabilityPrefix(f"observation {y} has probability {abs(p):.3g}")
    sign = st.sign * (1.0 if p.real >= 0 else -1.0)
    lp = st.log_prob + math.log(abs(p.real)) if p.real != 0 else -math.inf
    return FilterState(st.model_kind, _divide(v, p), lp, sign, st.steps + 1)


def filter_sequence(model, seq, check=True):
    """All filter states along ``seq``, starting with the initial state."""
    st = filter_init(model, check=check)
    states = [st]
    for y in seq:
        st = filter_step(model, st, y)
        states.append(st)
    return states


# --------------------------------------------------------------------------
# non-terminating limit


def transfer_fixed_point(model, tol=la.EIG_TOL, max_iter=la.EIG_MAX_ITER):
    """Dominant left eigenpair of the model's (flat or lifted) transfer operator."""
    _, ops, _ = linear_view(model)
    return la.dominant_left_eigenpair(ops.sum(axis=0), tol=tol, max_iter=max_iter)


def _prefix_state(model, prefix):
    _, ops, v = linear_view(model)
    prefix = as_sequence(prefix, ops.shape[0])
    for y in prefix:
        v = ops[y] @ v
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ZeroProbabilityPrefix("prefix annihilates the state")
        v = v / nrm
    return ops, v


def conditional_distribution_nonterminating(model, prefix, fp):
    """``P(y | prefix)`` for every ``y`` in the non-terminating limit.

    ``fp`` is the cached :class:`~tnseq.linalg.FixedPointResult` of the
    model's transfer operator; its vector replaces the evaluation functional.
    """
    ops, v = _prefix_state(model, prefix)
    s = fp.fixed_point
    nums = np.array([np.vdot(s, ops[y] @ v) for y in range(ops.shape[0])])
    den = np.vdot(s, ops.sum(axis=0) @ v)
    if abs(den) < ZERO_PROB:
        raise ZeroProbabilityPrefix("prefix has zero non-terminating probability")
    return (nums / den).real


def conditional_nonterminating(model, prefix, next_obs, fp):
    """Non-terminating ``P(next_obs | prefix)`` for a uMPS, uBM or uLPS."""
    return float(conditional_distribution_nonterminating(model, prefix, fp)[next_obs])


def effective_functional(model, steps):
    """``(tau^H)^steps sigma`` renormalized to unit 2-norm after every step."""
    sigma, ops, _ = linear_view(model)
    th = ops.sum(axis=0).conj().T
    s = sigma / np.linalg.norm(sigma)
    for _ in range(steps):
        s = th @ s
        s = s / np.linalg.norm(s)
    return s


def functional_errors(model, fp, max_steps=2000, floor=1e-12):
    """Distance of the effective functional from the fixed point, per step.

    The distance is phase-aligned, ``sqrt(2 - 2 |<sigma_*, sigma_t>|)``, since
    both vectors are only defined up to a unit scalar. Iteration stops once
    the distance drops below ``floor``.
    """
    sigma, ops, _ = linear_view(model)
    th = ops.sum(axis=0).conj().T
    target = fp.fixed_point
    s = sigma / np.linalg.norm(sigma)
    out = []
    for _ in range(max_steps + 1):
        err = math.sqrt(max(0.0, 2.0 - 2.0 * abs(np.vdot(target, s))))
        out.append(err)
        if err < floor:
            break
        s = th @ s
        s = s / np.linalg.norm(s)
    return np.array(out)
