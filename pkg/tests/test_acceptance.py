"""Acceptance checks, one test per criterion, each at its stated tolerance and time budget."""

import itertools
import time
import warnings

import numpy as np

from tnseq import cli
from tnseq import controlled as ctl
from tnseq import convert as cv
from tnseq import evaluate as ev
from tnseq.errors import DegenerateSpectrum
from tnseq.gallery import appendix_hmm, random_model
from tnseq.models import validate
from tnseq.oracle import all_sequences, enumerate_joint, oracle_conditional

from conftest import cgauss


def sequences(obs, max_len, min_len=0):
    for length in range(min_len, max_len + 1):
        yield from all_sequences(obs, length)


def gapped_umps(count, min_gap=0.05, dims=(2, 3)):
    """The first ``count`` random uMPS (2 symbols) whose spectral gap exceeds ``min_gap``."""
    out, seed = [], 0
    while len(out) < count:
        seed += 1
        u = random_model("umps", dims[seed % len(dims)], 2, seed)
        try:
            fp = ev.transfer_fixed_point(u)
        except DegenerateSpectrum:
            continue
        if fp.spectral_gap > min_gap:
            out.append((u, fp))
    return out


def max_conditional_error(converted, source, max_prefix=3, obs=2):
    """Largest |P_converted(y | prefix) - oracle(y | prefix)| over prefixes of length <= max_prefix."""
    worst = 0.0
    for prefix in sequences(obs, max_prefix):
        pred = ev.predict(converted, ev.filter_sequence(converted, prefix, check=False)[-1])
        for y in range(obs):
            worst = max(worst, abs(pred[y] - oracle_conditional(source, prefix, y)))
    return worst


def test_criterion_01_appendix_hmm(acceptance):
    m = appendix_hmm().model
    timings = []
    for _ in range(5):
        t0 = time.perf_counter()
        states = ev.filter_sequence(m, (1, 1))
        timings.append(time.perf_counter() - t0)
    x0, x1, x2 = (s.state.real for s in states)
    e1 = np.abs(x1 - [0.25, 0.75]).max()
    e2 = np.abs(x2 - [0.7, 0.3]).max()
    comb = np.linalg.norm(x2 - (0.6 * x0 + 0.4 * x1))
    best = min(timings)
    ok = e1 < 1e-12 and e2 < 1e-12 and comb < 1e-12 and best < 1e-3
    acceptance(1, ok, f"|x1 err| {e1:.1e}, |x2 err| {e2:.1e}, combination {comb:.1e}, {best * 1e3:.3f} ms")


def test_criterion_02_lift_identities(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        dim, obs = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        noom = random_model("noom", dim, obs, seed)
        psr = cv.noom_to_psr(noom)
        ubm = random_model("ubm", dim, obs, seed)
        umps = cv.ubm_to_psr(ubm)
        for s in sequences(obs, 4, 1):
            worst = max(worst, abs(ev.joint(noom, s) - ev.joint(psr, s)))
            worst = max(worst, abs(ev.joint(ubm, s) - ev.raw_joint(umps, s).real))
    elapsed = time.perf_counter() - t0
    acceptance(2, worst < 1e-12 and elapsed < 10, f"max deviation {worst:.1e}, {elapsed:.2f} s")


def test_criterion_03_umps_to_psr(acceptance):
    t0 = time.perf_counter()
    worst_res = worst = 0.0
    for u, _ in gapped_umps(50):
        psr, _ = cv.umps_to_psr(u)
        worst_res = max(worst_res, max(validate(psr).residuals.values()))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            worst = max(worst, max_conditional_error(psr, u))
    elapsed = time.perf_counter() - t0
    ok = worst_res < 1e-9 and worst < 1e-6 and elapsed < 30
    acceptance(3, ok, f"validation residual {worst_res:.1e}, conditional error {worst:.1e}, {elapsed:.2f} s")


def test_criterion_04_ubm_to_noom(acceptance):
    t0 = time.perf_counter()
    worst_tp = worst = 0.0
    for seed in range(50):
        b = random_model("ubm", 2 + seed % 2, 2, seed)
        noom, _ = cv.ubm_to_noom(b)
        gram = np.einsum("yji,yjk->ik", noom.phis.conj(), noom.phis)
        worst_tp = max(worst_tp, np.abs(gram - np.eye(noom.dim)).max())
        worst = max(worst, max_conditional_error(noom, b))
    elapsed = time.perf_counter() - t0
    ok = worst_tp < 1e-9 and worst < 1e-6 and elapsed < 30
    acceptance(4, ok, f"completeness residual {worst_tp:.1e}, conditional error {worst:.1e}, {elapsed:.2f} s")


def test_criterion_05_ulps_to_hqmm(acceptance):
    t0 = time.perf_counter()
    worst_cp = worst_tp = worst = 0.0
    for seed in range(25):
        u = random_model("ulps", 2, 2, seed, kraus_rank=1 + seed % 2)
        h, _ = cv.ulps_to_hqmm(u)
        res = validate(h).residuals
        worst_cp = max(worst_cp, res["complete positivity"])
        worst_tp = max(worst_tp, res["trace preservation"])
        worst = max(worst, max_conditional_error(h, u))
    elapsed = time.perf_counter() - t0
    ok = worst_cp < 1e-9 and worst_tp < 1e-9 and worst < 1e-6 and elapsed < 60
    acceptance(5, ok, f"CP {worst_cp:.1e}, TP {worst_tp:.1e}, conditional error {worst:.1e}, {elapsed:.2f} s")


def test_criterion_06_exponential_convergence(acceptance):
    t0 = time.perf_counter()
    ratios = []
    for u, fp in gapped_umps(20):
        errs = ev.functional_errors(u, fp)
        idx = np.flatnonzero((errs < 1e-2) & (errs > 1e-10))
        assert idx.size >= 3
        rate = float(np.exp(np.polyfit(idx, np.log(errs[idx]), 1)[0]))
        ratios.append(rate / fp.gap_ratio)
    elapsed = time.perf_counter() - t0
    lo, hi = min(ratios), max(ratios)
    ok = 0.5 <= lo and hi <= 2.0 and elapsed < 10
    acceptance(6, ok, f"measured/predicted contraction in [{lo:.3f}, {hi:.3f}], {elapsed:.2f} s")


def test_criterion_07_normalization(acceptance):
    t0 = time.perf_counter()
    worst_sum = 0.0
    worst_neg = 0.0
    for seed in range(100):
        constructive = [
            random_model("hmm", 3, 2, seed),
            cv.hmm_to_psr(random_model("hmm", 3, 2, seed)),
            random_model("noom", 3, 2, seed),
            random_model("hqmm", 3, 2, seed),
        ]
        for m in constructive:
            d = enumerate_joint(m, 4)
            worst_sum = max(worst_sum, abs(d.total() - 1))
            worst_neg = min(worst_neg, d.min())
        u = random_model("umps", 3, 2, seed)
        try:
            psr, _ = cv.umps_to_psr(u)
        except DegenerateSpectrum:
            continue
        total = sum(ev.raw_joint(psr, s).real for s in all_sequences(2, 4))
        worst_sum = max(worst_sum, abs(total - 1))
    elapsed = time.perf_counter() - t0
    ok = worst_sum < 1e-9 and worst_neg >= -1e-9 and elapsed < 60
    acceptance(7, ok, f"max |sum - 1| {worst_sum:.1e}, min entry {worst_neg:.1e}, {elapsed:.2f} s")


def test_criterion_08_controlled_identity(acceptance):
    t0 = time.perf_counter()
    worst_vec = worst_embed = 0.0
    pairs = list(itertools.product(range(2), range(2)))
    for seed in range(25):
        q = random_model("qomdp", 2, 2, seed, actions=2)
        io = ctl.qomdp_to_iohqmm(q)
        for length in (1, 2, 3):
            for seq in itertools.product(pairs, repeat=length):
                p = ctl.controlled_joint(q, seq)
                worst_vec = max(worst_vec, abs(p - ctl.controlled_joint_vectorized(q, seq)))
                worst_embed = max(worst_embed, abs(p - ctl.controlled_joint(io, seq)))
    elapsed = time.perf_counter() - t0
    ok = worst_vec < 1e-10 and worst_embed < 1e-12 and elapsed < 30
    acceptance(8, ok, f"trace vs vectorized {worst_vec:.1e}, embedding {worst_embed:.1e}, {elapsed:.2f} s")


def test_criterion_09_kraus_choi_round_trip(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    ranks_ok = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n, r = int(rng.integers(2, 4)), int(rng.integers(1, 4))
        l = cv.kraus_to_liouville(cgauss(rng, r, n, n))
        k = cv.liouville_to_kraus(l)
        worst = max(worst, np.abs(cv.kraus_to_liouville(k) - l).max())
        ranks_ok &= k.kraus_rank == cv.choi_rank(l)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-11 and ranks_ok and elapsed < 10
    acceptance(9, ok, f"Liouville round trip {worst:.1e}, ranks agree {ranks_ok}, {elapsed:.2f} s")


FIXTURE_RUNS = {
    "appendix_hmm": {"eval": ["1", "1"], "filter": ["1", "1"], "convert": "umps"},
    "random_noom": {"eval": ["0", "1", "1"], "filter": ["0", "1", "1"], "convert": "psr"},
    "random_qomdp": {"eval": ["0:1", "1:0"], "filter": ["0:1", "1:0"], "convert": "io_hqmm"},
}


def _cli_transcript(fixtures, workdir, threads, capsys):
    chunks = []
    for name, plan in FIXTURE_RUNS.items():
        path = str(fixtures / f"{name}.json")
        converted = str(workdir / f"{name}.{plan['convert']}.json")
        runs = [
            ["validate", path],
            ["eval", path, *plan["eval"]],
            ["filter", path, *plan["filter"]],
            ["convert", path, plan["convert"], "-o", converted],
            ["compare", path, converted, "--max-len", "3"],
        ]
        for args in runs:
            code = cli.main(["--porcelain", "--threads", str(threads), *args])
            out, err = capsys.readouterr()
            chunks.append(f"$ {' '.join(args[:1])} {name}\n{out}{err}exit={code}\n")
    return "".join(chunks)


def test_criterion_10_cli_determinism(acceptance, fixtures, tmp_path, capsys):
    t0 = time.perf_counter()
    transcripts = [_cli_transcript(fixtures, tmp_path, threads, capsys) for threads in (1, 1, 4, 0)]
    elapsed = time.perf_counter() - t0
    identical = all(t == transcripts[0] for t in transcripts)
    clean = "exit=0" in transcripts[0] and all(
        line == "exit=0" for line in transcripts[0].splitlines() if line.startswith("exit="))
    ok = identical and clean and elapsed < 5
    acceptance(10, ok, f"4 transcripts identical {identical}, all exits 0 {clean}, {elapsed:.2f} s")
