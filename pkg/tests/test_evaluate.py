import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tnseq import evaluate as ev
from tnseq.convert import umps_to_psr
from tnseq.errors import ComplexScoreWarning, InvalidModel, NegativeScoreWarning, UnsupportedOperation, ZeroProbabilityPrefix
from tnseq.gallery import appendix_hmm, random_model
from tnseq.models import Hmm, MpsChain, Noom, Umps
from tnseq.oracle import oracle_conditional

from conftest import cgauss


def path_sum(h, seq):
    """Sum over hidden paths of the product of transition and emission probabilities."""
    a, c, x0 = h.transition.real, h.emission.real, h.x0.real
    n = a.shape[0]
    total = 0.0
    for path in itertools.product(range(n), repeat=len(seq) + 1):
        p = x0[path[0]]
        for t, y in enumerate(seq):
            p *= a[path[t + 1], path[t]] * c[y, path[t + 1]]
        total += p
    return total


def test_appendix_joint():
    assert ev.joint(appendix_hmm().model, (1, 1)) == pytest.approx(0.625, abs=1e-15)


def test_unitary_noom_scores_one():
    u, _ = np.linalg.qr(cgauss(np.random.default_rng(0), 3, 3))
    m = Noom(u[None], np.eye(3)[0])
    for seq in [(), (0,), (0, 0, 0, 0)]:
        assert ev.joint(m, seq) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(0, 10_000))
def test_hmm_joint_matches_path_sum(seed):
    h = random_model("hmm", 2, 2, seed)
    for seq in itertools.product(range(2), repeat=3):
        assert ev.joint(h, seq) == pytest.approx(path_sum(h, seq), abs=1e-12)


def test_filter_appendix_states():
    states = ev.filter_sequence(appendix_hmm().model, (1, 1))
    x = [s.state.real for s in states]
    assert np.allclose(x[1], [0.25, 0.75], atol=1e-12, rtol=0)
    assert np.allclose(x[2], [0.7, 0.3], atol=1e-12, rtol=0)
    assert np.linalg.norm(x[2] - (0.6 * x[0] + 0.4 * x[1])) < 1e-12
    assert states[-1].prob == pytest.approx(0.625, abs=1e-15)


def test_deterministic_hmm_filter_is_stationary():
    h = Hmm(np.eye(2), np.array([[1.0, 1.0]]), np.array([0.3, 0.7]))
    st0 = ev.filter_init(h)
    assert ev.predict(h, st0)[0] == pytest.approx(1.0)
    st1 = ev.filter_step(h, st0, 0)
    assert np.allclose(st1.state, st0.state)


@given(st.integers(0, 10_000), st.sampled_from(["hmm", "psr", "noom", "hqmm"]))
def test_filter_chain_rule(seed, kind):
    m = random_model(kind, 3, 2, seed)
    seq = tuple(np.random.default_rng(seed).integers(0, 2, size=4))
    st_ = ev.filter_init(m)
    prob = 1.0
    for y in seq:
        prob *= ev.predict(m, st_)[y]
        st_ = ev.filter_step(m, st_, y)
    assert st_.prob == pytest.approx(ev.joint(m, seq), rel=1e-10)
    assert prob == pytest.approx(ev.joint(m, seq), rel=1e-10)
    assert ev.predict(m, st_).sum() == pytest.approx(1.0, abs=1e-10)


def test_zero_probability_prefix():
    with pytest.raises(ZeroProbabilityPrefix):
        ev.filter_sequence(appendix_hmm().model, (0,))


def test_filter_rejects_non_recursive_and_invalid_models():
    with pytest.raises(UnsupportedOperation):
        ev.filter_init(random_model("umps", 2, 2, 0))
    with pytest.raises(InvalidModel):
        ev.filter_init(Noom(0.5 * np.eye(2)[None], [1.0, 0.0]))


def test_joint_flags_complex_and_negative_scores():
    m = Umps(np.ones(1), np.array([[[1j]], [[-1.0]]]), np.ones(1))
    with pytest.warns(ComplexScoreWarning):
        ev.joint(m, (0,))
    with pytest.warns(NegativeScoreWarning):
        assert ev.joint(m, (1,)) == -1.0
    assert ev.raw_joint(m, (0,)) == 1j


def test_joint_lifted_agrees_for_born_models():
    for kind in ("ubm", "noom", "hqmm", "ulps"):
        m = random_model(kind, 2, 2, 4)
        for seq in itertools.product(range(2), repeat=3):
            assert ev.joint_lifted(m, seq) == pytest.approx(ev.joint(m, seq), rel=1e-10, abs=1e-12)


def test_mps_chain_joint():
    sites = (np.array([[[1.0]], [[2.0]]]), np.array([[[3.0]], [[4.0]]]))
    chain = MpsChain(sites)
    assert ev.joint(chain, (1, 0)) == 6.0
    with pytest.raises(Exception):
        ev.joint(chain, (0,))


def test_conditional_on_a_psr_shaped_umps_equals_filtering():
    p = random_model("psr", 3, 2, 7)
    u = Umps(p.sigma, p.ops, p.x0)
    fp = ev.transfer_fixed_point(u)
    st_ = ev.filter_sequence(p, (0, 1))[-1]
    expect = ev.predict(p, st_)
    got = ev.conditional_distribution_nonterminating(u, (0, 1), fp)
    assert np.allclose(got, expect, atol=1e-10)


def test_single_symbol_umps_conditional_is_one():
    u = Umps(np.ones(2), 0.5 * np.eye(2)[None] + np.diag([0.0, -0.1])[None], np.ones(2))
    fp = ev.transfer_fixed_point(u)
    assert ev.conditional_nonterminating(u, (0, 0), 0, fp) == pytest.approx(1.0)


def test_ubm_conditional_matches_finite_horizon():
    b = random_model("ubm", 2, 2, 11)
    fp = ev.transfer_fixed_point(b)
    for prefix in itertools.product(range(2), repeat=2):
        for y in range(2):
            expect = oracle_conditional(b, prefix, y, horizon=200)
            assert ev.conditional_nonterminating(b, prefix, y, fp) == pytest.approx(expect, abs=1e-6)


def test_effective_functional():
    u = random_model("umps", 3, 2, 2)
    s0 = ev.effective_functional(u, 0)
    assert np.allclose(s0, u.sigma / np.linalg.norm(u.sigma))
    p, _ = umps_to_psr(u)
    for steps in (1, 5, 20):
        s = ev.effective_functional(p, steps)
        phase = np.vdot(s, p.sigma)
        assert np.allclose(s * phase / abs(phase), p.sigma / np.linalg.norm(p.sigma), atol=1e-10)


def test_functional_errors_contract_at_gap_rate():
    u = random_model("umps", 3, 2, 2)
    fp = ev.transfer_fixed_point(u)
    errs = ev.functional_errors(u, fp)
    idx = np.flatnonzero((errs < 1e-2) & (errs > 1e-10))
    rate = math.exp(np.polyfit(idx, np.log(errs[idx]), 1)[0])
    assert 0.5 < rate / fp.gap_ratio < 2.0


def test_sequence_range_checked():
    with pytest.raises(ValueError):
        ev.joint(appendix_hmm().model, (2,))
