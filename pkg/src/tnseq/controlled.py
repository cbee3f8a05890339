"""Action-conditioned models: POMDPs, input-output HQMMs and QOMDPs.

Sequences are tuples of ``(action, observation)`` pairs; operators are
applied right-to-left, earliest pair first. Rewards and planning are not
modelled; policies are open-loop action lists.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch, InvalidModel, ZeroProbabilityPrefix
from .evaluate import ZERO_PROB, FilterState, _divide
from .models import (
    KrausSet,
    Psr,
    _Checker,
    _bank,
    _check_belief,
    _check_stochastic,
    _frozen,
    _kraus_tuple,
    _set,
    _vector,
    check_completely_positive,
    check_density,
    check_trace_preserving,
    validate,
    VALIDATION_TOL,
)


@dataclass(frozen=True, eq=False)
class Pomdp:
    """``transitions[a]`` is ``n x n``, ``emissions[a]`` is ``obs x n``."""

    transitions: np.ndarray
    emissions: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        a = _bank(self.transitions, "transitions")
        c = _bank(self.emissions, "emissions", square=False)
        x0 = _vector(self.x0, "x0")
        n = a.shape[1]
        if c.shape[0] != a.shape[0] or c.shape[2] != n or x0.size != n:
            raise DimensionMismatch("inconsistent POMDP dimensions")
        _set(self, transitions=a, emissions=c, x0=x0)

    @property
    def action_count(self):
        return self.transitions.shape[0]

    @property
    def obs_count(self):
        return self.emissions.shape[1]

    @property
    def state_dim(self):
        return self.transitions.shape[1]

    def observable_operators(self, a):
        """``T^a_y = diag(C^a[y]) A^a`` stacked over ``y``."""
        return self.emissions[a][:, :, None] * self.transitions[a][None, :, :]


@dataclass(frozen=True, eq=False)
class IoHqmm:
    """``kraus[a][y]`` is the Kraus set for action ``a`` and observation ``y``."""

    kraus: tuple
    rho0: np.ndarray

    def __post_init__(self):
        kraus = tuple(_kraus_tuple(per_action, "kraus[a]") for per_action in self.kraus)
        if not kraus:
            raise DimensionMismatch("at least one action is required")
        n = kraus[0][0].shape[0]
        obs = len(kraus[0])
        for per_action in kraus:
            if len(per_action) != obs:
                raise DimensionMismatch("every action needs the same observation alphabet")
            if any(ks.shape != (n, n) for ks in per_action):
                raise DimensionMismatch("all Kraus operators must be n x n")
        rho0 = _vector(self.rho0, "rho0")
        if rho0.size != n * n:
            raise DimensionMismatch("rho0 must be a vectorized n x n matrix")
        _set(self, kraus=kraus, rho0=rho0)

    @property
    def action_count(self):
        return len(self.kraus)

    @property
    def obs_count(self):
        return len(self.kraus[0])

    @property
    def state_dim(self):
        return self.kraus[0][0].shape[0]

    @property
    def rho0_matrix(self):
        return la.unvectorize(self.rho0, self.state_dim, self.state_dim)


@dataclass(frozen=True, eq=False)
class Qomdp:
    """``kraus[a, y]`` is a single ``n x n`` operator; ``rho0`` a density matrix."""

    kraus: np.ndarray
    rho0: np.ndarray

    def __post_init__(self):
        k = _frozen(self.kraus)
        rho = _frozen(self.rho0)
        if k.ndim != 4 or k.shape[2] != k.shape[3] or k.shape[0] < 1 or k.shape[1] < 1:
            raise DimensionMismatch("kraus must have shape (actions, obs, n, n)")
        if rho.shape != k.shape[2:]:
            raise DimensionMismatch("rho0 must be n x n")
        _set(self, kraus=k, rho0=rho)

    @property
    def action_count(self):
        return self.kraus.shape[0]

    @property
    def obs_count(self):
        return self.kraus.shape[1]

    @property
    def state_dim(self):
        return self.kraus.shape[2]


CONTROLLED_TYPES = {"pomdp": Pomdp, "io_hqmm": IoHqmm, "qomdp": Qomdp}


# --------------------------------------------------------------------------
# validation


@validate.register
def _(model: Pomdp, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("pomdp", tol)
    for a in range(model.action_count):
        _check_stochastic(c, f"action {a} ", model.transitions[a], model.emissions[a])
    _check_belief(c, model.x0)
    return c.report()


@validate.register
def _(model: IoHqmm, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("io_hqmm", tol)
    check_density(c, model.rho0_matrix)
    for a, per_action in enumerate(model.kraus):
        check_completely_positive(c, per_action, f"action {a} complete positivity")
        check_trace_preserving(c, per_action, model.state_dim, f"action {a} trace preservation")
    return c.report()


@validate.register
def _(model: Qomdp, tol=VALIDATION_TOL, strict_real=False):
    c = _Checker("qomdp", tol)
    check_density(c, model.rho0)
    n = model.state_dim
    for a in range(model.action_count):
        gram = np.einsum("yji,yjk->ik", model.kraus[a].conj(), model.kraus[a])
        c.check(f"action {a} trace preservation", float(np.abs(gram - np.eye(n)).max()))
    return c.report()


def _require_valid(model):
    report = validate(model)
    if not report.ok:
        raise InvalidModel(str(report), report)


# --------------------------------------------------------------------------
# evaluation


def as_action_sequence(seq, action_count, obs_count):
    out = tuple((int(a), int(y)) for a, y in seq)
    for a, y in out:
        if not (0 <= a < action_count and 0 <= y < obs_count):
            raise ValueError(f"pair {a}:{y} out of range")
    return out


def parse_action_sequence(text):
    """Parse ``"a:y a:y ..."`` into pairs."""
    pairs = []
    for tok in text.split():
        a, sep, y = tok.partition(":")
        if not sep:
            raise ValueError(f"expected 'action:observation', got {tok!r}")
        pairs.append((int(a), int(y)))
    return tuple(pairs)


def _kraus_ops(model, a, y):
    if isinstance(model, Qomdp):
        return model.kraus[a, y][None]
    return model.kraus[a][y].ops


def _initial(model):
    if isinstance(model, Pomdp):
        return np.array(model.x0, dtype=complex)
    if isinstance(model, IoHqmm):
        return model.rho0_matrix
    if isinstance(model, Qomdp):
        return np.array(model.rho0)
    raise TypeError(f"{type(model).__name__} is not a controlled model")


def _apply(model, state, a, y):
    if isinstance(model, Pomdp):
        return model.emissions[a, y] * (model.transitions[a] @ state)
    return sum(k @ state @ k.conj().T for k in _kraus_ops(model, a, y))


def _mass(model, state):
    return state.sum() if isinstance(model, Pomdp) else np.trace(state)


def controlled_joint(model, seq, check=False):
    """Probability of the interleaved sequence under its open-loop actions.

    QOMDPs and IO-HQMMs use the density-matrix form
    ``tr(K ... rho0 ... K^H)``.
    """
    if check:
        _require_valid(model)
    seq = as_action_sequence(seq, model.action_count, model.obs_count)
    state = _initial(model)
    for a, y in seq:
        state = _apply(model, state, a, y)
    return float(np.real(_mass(model, state)))


def liouville(model, a, y):
    """``sum_b conj(K) (x) K`` for the pair ``(a, y)``."""
    return sum(np.kron(k.conj(), k) for k in _kraus_ops(model, a, y))


def controlled_joint_vectorized(model, seq):
    """``vec(I)^T L[a_T, y_T] ... L[a_1, y_1] vec(rho0)`` for quantum models."""
    if isinstance(model, Pomdp):
        raise TypeError("vectorized form applies to quantum controlled models")
    seq = as_action_sequence(seq, model.action_count, model.obs_count)
    n = model.state_dim
    v = la.vectorize(_initial(model))
    for a, y in seq:
        v = liouville(model, a, y) @ v
    return float(np.real(la.vec_identity(n) @ v))


def controlled_filter_init(model, check=True):
    if check:
        _require_valid(model)
    state = _initial(model)
    kind = {Pomdp: "pomdp", IoHqmm: "io_hqmm", Qomdp: "qomdp"}[type(model)]
    vec = state if isinstance(model, Pomdp) else la.vectorize(state)
    return FilterState(kind, vec)


def _state_of(model, st):
    if isinstance(model, Pomdp):
        return st.state
    return la.unvectorize(st.state, model.state_dim, model.state_dim)


def controlled_predict(model, st, a):
    """``P(y | state, action a)`` for every observation."""
    state = _state_of(model, st)
    return np.array([np.real(_mass(model, _apply(model, state, a, y))) for y in range(model.obs_count)])


def controlled_filter(model, st, a, y):
    """Apply action ``a``, condition on observation ``y`` and renormalize."""
    (a, y), = as_action_sequence([(a, y)], model.action_count, model.obs_count)
    new = _apply(model, _state_of(model, st), a, y)
    p = float(np.real(_mass(model, new)))
    if p < ZERO_PROB:
        raise ZeroProbabilityPrefix(f"pair {a}:{y} has probability {p:.3g}")
    new = _divide(new, complex(p))
    vec = new if isinstance(model, Pomdp) else la.vectorize(new)
    return FilterState(st.model_kind, vec, st.log_prob + math.log(p), st.sign, st.steps + 1)


# --------------------------------------------------------------------------
# conversions


def qomdp_to_iohqmm(q):
    """Embed a QOMDP as an IO-HQMM with singleton Kraus sets."""
    _require_valid(q)
    kraus = tuple(tuple(KrausSet(q.kraus[a, y][None]) for y in range(q.obs_count))
                  for a in range(q.action_count))
    return IoHqmm(kraus, la.vectorize(q.rho0))


@dataclass(frozen=True, eq=False)
class PolicyOperatorBanks:
    """Time-inhomogeneous PSR induced by a fixed open-loop action list."""

    sigma: np.ndarray
    banks: tuple
    x0: np.ndarray
    actions: tuple

    def joint(self, obs_seq):
        if len(obs_seq) != len(self.banks):
            raise DimensionMismatch("observation sequence must match the action list length")
        v = self.x0
        for bank, y in zip(self.banks, obs_seq):
            v = bank[y] @ v
        return float(np.real(np.vdot(self.sigma, v)))


def pomdp_to_psr_per_policy(p, actions):
    """Observable-operator banks of a POMDP under an open-loop action list.

    A constant action list yields a stationary :class:`~tnseq.models.Psr`;
    anything else yields :class:`PolicyOperatorBanks`.
    """
    actions = tuple(int(a) for a in actions)
    if not actions:
        raise ValueError("the action list must be non-empty")
    if any(not 0 <= a < p.action_count for a in actions):
        raise ValueError("action index out of range")
    _require_valid(p)
    sigma = np.ones(p.state_dim)
    if len(set(actions)) == 1:
        return Psr(sigma, p.observable_operators(actions[0]), p.x0)
    return PolicyOperatorBanks(sigma, tuple(p.observable_operators(a) for a in actions), p.x0, actions)


# --------------------------------------------------------------------------
# random instances


def random_controlled(kind, dim, obs, actions, rng, kraus_rank=2):
    from .gallery import _dirichlet_columns, random_density, random_isometry_blocks

    if kind == "pomdp":
        a = np.stack([_dirichlet_columns(rng, dim, dim) for _ in range(actions)])
        c = np.stack([_dirichlet_columns(rng, obs, dim) for _ in range(actions)])
        return Pomdp(a, c, rng.dirichlet(np.ones(dim)))
    if kind == "qomdp":
        k = np.stack([random_isometry_blocks(rng, dim, obs) for _ in range(actions)])
        return Qomdp(k, random_density(rng, dim, rank=1))
    if kind == "io_hqmm":
        kraus = []
        for _ in range(actions):
            blocks = random_isometry_blocks(rng, dim, obs * kraus_rank)
            kraus.append(tuple(KrausSet(blocks[y * kraus_rank:(y + 1) * kraus_rank]) for y in range(obs)))
        return IoHqmm(tuple(kraus), la.vectorize(random_density(rng, dim)))
    raise ValueError(f"unknown controlled kind {kind!r}")
