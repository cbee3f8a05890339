"""Named instances and random model generators."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .convert import hmm_to_psr
from .models import Hmm, Hqmm, KrausSet, Noom, Psr, Ubm, Ulps, Umps


@dataclass(frozen=True)
class Fact:
    description: str
    expected: object
    tolerance: float
    compute: object = field(repr=False, compare=False)

    def check(self):
        actual = self.compute()
        if isinstance(self.expected, bool):
            return actual, bool(actual) == self.expected
        err = float(np.max(np.abs(np.asarray(actual) - np.asarray(self.expected))))
        return actual, err <= self.tolerance


@dataclass(frozen=True, eq=False)
class NamedInstance:
    name: str
    model: object
    provenance: str
    expected_facts: tuple = ()

    def verify(self):
        """``[(fact, actual, ok), ...]`` for every expected fact."""
        return [(f, *f.check()) for f in self.expected_facts]


# --------------------------------------------------------------------------
# instances


def appendix_hmm():
    """Two-state HMM whose third filtered state is a convex combination of
    the first two, which rules out any finite NOOM representation.

    Stored in operator form. Symbol 1 is the source's observation 1 and
    symbol 0 stands for its observation 2, so the highlighted sequence is
    ``(1, 1)`` in zero-based indexing.
    """
    from .evaluate import filter_sequence, joint

    tau_obs1 = np.array([[0.25, 0.5], [0.75, 0.0]])
    tau_obs2 = np.array([[0.0, 0.0], [0.0, 0.5]])
    model = Psr(np.ones(2), np.stack([tau_obs2, tau_obs1]), np.array([1.0, 0.0]))

    def states():
        return [s.state.real for s in filter_sequence(model, (1, 1))]

    facts = (
        Fact("x1 after observing 1", [0.25, 0.75], 1e-12, lambda: states()[1]),
        Fact("x2 after observing 1, 1", [0.7, 0.3], 1e-12, lambda: states()[2]),
        Fact("x2 - (0.6 x0 + 0.4 x1)", [0.0, 0.0], 1e-12,
             lambda: states()[2] - (0.6 * states()[0] + 0.4 * states()[1])),
        Fact("det[x0 x1]", 0.75, 1e-12, lambda: np.linalg.det(np.column_stack(states()[:2]))),
        Fact("P(1, 1)", 0.625, 1e-12, lambda: joint(model, (1, 1))),
        Fact("transfer operator column sums", [1.0, 1.0], 1e-15, lambda: model.ops.sum(axis=0).sum(axis=0).real),
    )
    return NamedInstance("appendix_hmm", model, "HMM-not-in-NOOM counterexample (operator form)", facts)


def _rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _complete(phi0):
    """``phi1 = (I - phi0^H phi0)^{1/2}`` so that the pair is complete."""
    g = np.eye(phi0.shape[1]) - phi0.conj().T @ phi0
    return la.herm_sqrt(0.5 * (g + g.conj().T), tol=1e-12)


def oscillating_conditionals(model, steps=20):
    """``P(0 | 0^t)`` for ``t = 0..steps`` by filtering."""
    from .evaluate import filter_init, filter_step, predict

    st = filter_init(model)
    out = []
    for _ in range(steps + 1):
        out.append(predict(model, st)[0])
        st = filter_step(model, st, 0)
    return np.array(out)


def local_minima(values):
    return [t for t in range(1, len(values) - 1) if values[t] < values[t - 1] and values[t] < values[t + 1]]


def oscillating_noom(theta=0.6, damping=0.9):
    """Two-state NOOM whose conditionals oscillate under repeated symbol 0.

    ``phi0 = sqrt(damping) R(theta) diag(1, 1/2)`` and ``phi1`` completes the
    pair. For large enough ``theta`` the eigenvalues of ``phi0`` form a complex
    pair, so the state keeps rotating and ``P(0 | 0^t)`` is non-monotone; as
    ``theta -> 0`` the rotation vanishes and the sequence becomes monotone.
    """
    if not 0 < theta < math.pi:
        raise ValueError("theta must lie in (0, pi)")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    phi0 = math.sqrt(damping) * _rotation(theta) @ np.diag([1.0, 0.5])
    model = Noom(np.stack([phi0, _complete(phi0)]), np.array([1.0, 0.0]))

    def completeness():
        return np.abs(np.einsum("yji,yjk->ik", model.phis.conj(), model.phis) - np.eye(2)).max()

    facts = (
        Fact("completeness residual", 0.0, 1e-12, completeness),
        Fact("P(0|0^t) has a local minimum on t in [0, 20]", True, 0,
             lambda: len(local_minima(oscillating_conditionals(model))) >= 1),
    )
    return NamedInstance(f"oscillating_noom(theta={theta!r}, damping={damping!r})", model,
                         "parameterized oscillating NOOM family", facts)


# --------------------------------------------------------------------------
# random models


def _cgauss(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_isometry_blocks(rng, n, blocks):
    """Slice a random ``(n*blocks) x n`` isometry into ``blocks`` ``n x n`` pieces.

    ``sum_b K_b^H K_b = I`` holds by construction.
    """
    q, r = np.linalg.qr(_cgauss(rng, n * blocks, n))
    q = q * (np.diag(r) / np.abs(np.diag(r)))  # unique QR phase convention
    return q.reshape(blocks, n, n)


def random_density(rng, n, rank=None):
    g = _cgauss(rng, n, rank or n)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _dirichlet_columns(rng, rows, cols):
    return rng.dirichlet(np.ones(rows), size=cols).T


def random_hmm(rng, dim, obs):
    return Hmm(_dirichlet_columns(rng, dim, dim), _dirichlet_columns(rng, obs, dim),
               rng.dirichlet(np.ones(dim)))


def random_model(kind, dim, obs, seed, kraus_rank=2, actions=2):
    """A valid random instance of ``kind``; deterministic given ``seed``.

    HMMs use Dirichlet columns; PSRs are HMMs seen through a random
    similarity transform; NOOM/HQMM Kraus sets are slices of a random
    isometry; uMPS entries are real Gaussian; uBM/uLPS entries are complex
    Gaussian.
    """
    if dim < 1 or obs < 1:
        raise ValueError("dim and obs must be >= 1")
    rng = np.random.default_rng(seed)
    scale = 1.0 / math.sqrt(dim)
    if kind == "hmm":
        return random_hmm(rng, dim, obs)
    if kind == "psr":
        base = hmm_to_psr(random_hmm(rng, dim, obs))
        s = np.eye(dim) + 0.5 * _cgauss(rng, dim, dim)
        s_inv = np.linalg.inv(s)
        return Psr(s.conj().T @ base.sigma, np.stack([s_inv @ t @ s for t in base.ops]), s_inv @ base.x0)
    if kind == "umps":
        return Umps(rng.standard_normal(dim), scale * rng.standard_normal((obs, dim, dim)),
                    rng.standard_normal(dim))
    if kind == "ubm":
        return Ubm(_cgauss(rng, dim), scale * _cgauss(rng, obs, dim, dim), _cgauss(rng, dim))
    if kind == "noom":
        psi = _cgauss(rng, dim)
        return Noom(random_isometry_blocks(rng, dim, obs), psi / np.linalg.norm(psi))
    if kind == "hqmm":
        blocks = random_isometry_blocks(rng, dim, obs * kraus_rank)
        kraus = tuple(KrausSet(blocks[y * kraus_rank:(y + 1) * kraus_rank]) for y in range(obs))
        return Hqmm(kraus, la.vectorize(random_density(rng, dim)))
    if kind == "ulps":
        left = KrausSet(_cgauss(rng, kraus_rank, dim, dim))
        cores = tuple(KrausSet(scale * _cgauss(rng, kraus_rank, dim, dim)) for _ in range(obs))
        right = KrausSet(_cgauss(rng, kraus_rank, dim, dim))
        return Ulps(left, cores, right)
    if kind in ("pomdp", "io_hqmm", "qomdp"):
        from .controlled import random_controlled

        return random_controlled(kind, dim, obs, actions, rng, kraus_rank)
    raise ValueError(f"unknown model kind {kind!r}")


# --------------------------------------------------------------------------
# bounded evidence that the gallery HMM has no small NOOM


def _noom_from_params(x, n, obs):
    m = x[: 2 * n * n * obs].reshape(2, n * obs, n)
    q, _ = np.linalg.qr(m[0] + 1j * m[1])
    p = x[2 * n * n * obs:].reshape(2, n)
    psi = p[0] + 1j * p[1]
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        psi, nrm = np.eye(n)[0].astype(complex), 1.0
    return Noom(q.reshape(obs, n, n), psi / nrm)


def noom_search_evidence(target=None, dim=2, max_len=3, trials=200, polish=5, seed=0):
    """Smallest joint-distribution deviation from ``target`` found over random
    ``dim``-dimensional NOOMs (plus local polishing of the best candidates).

    This is bounded search evidence, not a proof of non-existence.
    """
    from scipy.optimize import minimize

    from .oracle import enumerate_joint

    target = appendix_hmm().model if target is None else target
    obs = target.obs_count
    ref = [np.array(list(enumerate_joint(target, t).entries.values())) for t in range(1, max_len + 1)]
    size = 2 * dim * dim * obs + 2 * dim

    def deviation(x):
        m = _noom_from_params(x, dim, obs)
        return max(np.abs(np.array(list(enumerate_joint(m, t).entries.values())) - r).max()
                   for t, r in zip(range(1, max_len + 1), ref))

    rng = np.random.default_rng(seed)
    starts = rng.standard_normal((trials, size))
    scored = sorted((deviation(x), i) for i, x in enumerate(starts))
    best = scored[0][0]
    for _, i in scored[:polish]:
        res = minimize(deviation, starts[i], method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-10, "fatol": 1e-12})
        best = min(best, float(res.fun))
    return best
