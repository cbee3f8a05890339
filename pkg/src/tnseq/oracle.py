"""Brute-force reference computations.

Everything here is deliberately naive: exhaustive enumeration of sequence
space and explicit marginalization over a finite future. The marginal
routines propagate states in each family's native form (vectors for
PSR-type models, density matrices for Born and Kraus models) so they do not
share the Kronecker-lifted code path used by :mod:`tnseq.evaluate`.
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NegativeConditional, TooLarge, UnsupportedOperation, ZeroProbabilityPrefix
from .evaluate import as_sequence, filter_init, filter_step, joint, predict
from .models import Hmm, Hqmm, MpsChain, Noom, Psr, Ubm, Ulps, Umps

MAX_ENUMERATION = 10 ** 7
DEFAULT_HORIZON = 300


@dataclass(frozen=True)
class Distribution:
    """Scores of every sequence of one length, in lexicographic order."""

    length: int
    entries: dict = field(default_factory=dict)

    def total(self):
        return float(sum(self.entries.values()))

    def min(self):
        return min(self.entries.values())

    def __getitem__(self, seq):
        return self.entries[tuple(seq)]

    def __len__(self):
        return len(self.entries)


def all_sequences(obs_count, length):
    """Lexicographic enumeration of ``range(obs_count) ** length``."""
    return itertools.product(range(obs_count), repeat=length)


def _guard(count):
    if count > MAX_ENUMERATION:
        raise TooLarge(f"{count} sequences exceed the enumeration limit {MAX_ENUMERATION}")


def _chunked_map(fn, items, threads):
    if threads is None or threads == 1 or len(items) < 64:
        return [fn(s) for s in items]
    workers = None if threads == 0 else threads
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // 64)))


def enumerate_joint(model, length, threads=1, score=None):
    """Joint score of every sequence of ``length``.

    Results are independent of ``threads`` (0 means one worker per core).
    """
    if isinstance(model, MpsChain):
        if length != model.length:
            raise ValueError(f"an MPS chain only scores sequences of length {model.length}")
        count = int(np.prod(model.obs_counts))
        _guard(count)
        seqs = list(itertools.product(*(range(k) for k in model.obs_counts)))
    else:
        _guard(model.obs_count ** length)
        seqs = list(all_sequences(model.obs_count, length))
    score = score or joint
    values = _chunked_map(lambda s: score(model, s), seqs, threads)
    return Distribution(length, dict(zip(seqs, values)))


def is_controlled(model):
    return hasattr(model, "action_count")


def enumerate_controlled(model, length, threads=1):
    """Joint of every interleaved ``(action, observation)`` sequence of ``length``."""
    from .controlled import controlled_joint

    pairs = list(itertools.product(range(model.action_count), range(model.obs_count)))
    _guard(len(pairs) ** length)
    seqs = list(itertools.product(pairs, repeat=length))
    values = _chunked_map(lambda s: controlled_joint(model, s), seqs, threads)
    return Distribution(length, dict(zip(seqs, values)))


# --------------------------------------------------------------------------
# native-form propagation


def _native(model):
    """``(init, apply(state, y), transfer(state), evaluate(state), normalize(state))``."""
    if isinstance(model, (Umps, Psr, Hmm)):
        if isinstance(model, Hmm):
            sigma = np.ones(model.state_dim)
            ops = model.emission[:, :, None] * model.transition[None, :, :]
            x0 = model.x0
        elif isinstance(model, Umps):
            sigma, ops, x0 = model.sigma, model.cores, model.rho0
        else:
            sigma, ops, x0 = model.sigma, model.ops, model.x0
        total = ops.sum(axis=0)
        return (np.array(x0, dtype=complex), lambda v, y: ops[y] @ v, lambda v: total @ v,
                lambda v: np.vdot(sigma, v), np.linalg.norm)

    if isinstance(model, (Ubm, Noom)):
        if isinstance(model, Ubm):
            mats, left = model.cores, np.outer(model.alpha, model.alpha.conj())
            w = model.omega0
        else:
            mats, left = model.phis, np.eye(model.dim)
            w = model.psi0
        kraus = [[a] for a in mats]
    elif isinstance(model, Hqmm):
        kraus = [list(ks.ops) for ks in model.kraus]
        left = np.eye(model.state_dim)
        rho0 = model.rho0_matrix
    elif isinstance(model, Ulps):
        kraus = [list(ks.ops) for ks in model.core_kraus]
        left = model.left_kraus.outer_sum()
        rho0 = model.right_kraus.outer_sum()
    else:
        raise TypeError(f"no marginal oracle for {type(model).__name__}")
    if isinstance(model, (Ubm, Noom)):
        rho0 = np.outer(w, w.conj())

    kraus = [np.stack(ks) for ks in kraus]
    every = np.concatenate(kraus)

    def conjugate(ks, rho):
        return np.einsum("bij,jk,blk->il", ks, rho, ks.conj())

    def apply(rho, y):
        return conjugate(kraus[y], rho)

    def transfer(rho):
        return conjugate(every, rho)

    return (rho0, apply, transfer, lambda rho: np.sum(left.conj() * rho),
            lambda rho: np.linalg.norm(rho))


def finite_marginal(model, prefix, total_len):
    """Exact length-``total_len`` marginal of ``prefix`` (future summed out).

    The result is the raw score; it is not normalized by the total mass.
    """
    prefix = as_sequence(prefix, model.obs_count)
    if total_len < len(prefix):
        raise ValueError("total_len must be at least the prefix length")
    state, apply, transfer, evaluate, _ = _native(model)
    for y in prefix:
        state = apply(state, y)
    for _ in range(total_len - len(prefix)):
        state = transfer(state)
    return float(np.real(evaluate(state)))


def total_mass(model, length):
    """Sum of joint scores over all sequences of ``length``."""
    return finite_marginal(model, (), length)


def finite_conditional(model, prefix, next_obs, total_len):
    """``finite_marginal(prefix + [y]) / finite_marginal(prefix)`` at ``total_len``.

    Both numerator and denominator are propagated with a shared scale so
    long horizons neither overflow nor underflow.
    """
    prefix = as_sequence(prefix, model.obs_count)
    if total_len < len(prefix) + 1:
        raise ValueError("total_len must exceed the prefix length")
    state, apply, transfer, evaluate, norm = _native(model)
    for y in prefix:
        state = apply(state, y)
        scale = norm(state)
        if scale == 0:
            raise ZeroProbabilityPrefix("prefix annihilates the state")
        state = state / scale
    num = apply(state, next_obs)
    den = transfer(state)
    for _ in range(total_len - len(prefix) - 1):
        num = transfer(num)
        den = transfer(den)
        scale = norm(den)
        if scale == 0:
            raise ZeroProbabilityPrefix("marginal vanishes")
        num, den = num / scale, den / scale
    d = evaluate(den)
    if abs(d) < 1e-300:
        raise ZeroProbabilityPrefix("prefix has zero marginal probability")
    return float(np.real(evaluate(num) / d))


def oracle_conditional(model, prefix, next_obs, horizon=DEFAULT_HORIZON):
    """Non-terminating conditional approximated with ``horizon`` future steps."""
    return finite_conditional(model, prefix, next_obs, len(prefix) + 1 + horizon)


# --------------------------------------------------------------------------
# equivalence


@dataclass(frozen=True)
class EquivalenceReport:
    max_deviation: float
    witness: tuple
    tol: float
    semantics: str
    per_length: dict = field(default_factory=dict)

    @property
    def equivalent(self):
        return self.max_deviation <= self.tol


def equivalent(m1, m2, max_len, tol=1e-9, semantics="joint", horizon=DEFAULT_HORIZON, threads=1):
    """Compare two models on every sequence of length ``1..max_len``.

    ``semantics="joint"`` compares joint scores; ``"conditional"`` compares
    non-terminating conditionals ``P(y_t | y_<t)`` for every sequence, with
    ``horizon`` future steps marginalized. Controlled models are compared on
    interleaved action-observation joints. The witness is the shortest,
    lexicographically smallest sequence attaining the maximum deviation.
    """
    if m1.obs_count != m2.obs_count:
        raise ValueError("models have different observation alphabets")
    if semantics not in ("joint", "conditional"):
        raise ValueError(f"unknown semantics {semantics!r}")
    controlled = is_controlled(m1)
    if controlled != is_controlled(m2) or (controlled and m1.action_count != m2.action_count):
        raise ValueError("models have different action alphabets")
    if controlled and semantics != "joint":
        raise UnsupportedOperation("controlled models are compared on joints only")
    worst, witness, per_length = 0.0, (), {}
    for length in range(1, max_len + 1):
        if controlled:
            d1 = enumerate_controlled(m1, length, threads)
            d2 = enumerate_controlled(m2, length, threads)
        elif semantics == "joint":
            d1 = enumerate_joint(m1, length, threads)
            d2 = enumerate_joint(m2, length, threads)
        else:
            def cond(m, s):
                return oracle_conditional(m, s[:-1], s[-1], horizon)
            d1 = enumerate_joint(m1, length, threads, score=cond)
            d2 = enumerate_joint(m2, length, threads, score=cond)
        level = 0.0
        for seq, v1 in d1.entries.items():
            dev = abs(v1 - d2.entries[seq])
            level = max(level, dev)
            if dev > worst:
                worst, witness = dev, seq
        per_length[length] = level
    return EquivalenceReport(worst, witness, tol, semantics, per_length)


# --------------------------------------------------------------------------
# sampling


def make_rng(seed):
    """The package's reference generator: numpy ``PCG64`` seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def _draw(p, rng, tol=1e-12):
    if np.any(p < -tol):
        raise NegativeConditional(f"conditional distribution {p} has negative entries")
    p = np.clip(p, 0.0, None)
    c = np.cumsum(p / p.sum())
    return int(min(np.searchsorted(c, rng.random(), side="right"), p.size - 1))


def sample(model, length, seed=0, rng=None, check=True):
    """Ancestral sample of ``length`` observations (deterministic given ``seed``)."""
    rng = make_rng(seed) if rng is None else rng
    st = filter_init(model, check=check)
    out = []
    for _ in range(length):
        y = _draw(predict(model, st), rng)
        out.append(y)
        st = filter_step(model, st, y)
    return tuple(out)


def sample_many(model, length, count, seed=0):
    """``count`` samples drawn from one generator stream."""
    rng = make_rng(seed)
    filter_init(model)
    return [sample(model, length, rng=rng, check=False) for _ in range(count)]
