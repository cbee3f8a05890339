"""Walk a random uMPS, Born machine and LPS through their conversions.

Each converted model is checked against the brute-force oracle.
"""

import warnings

from tnseq import random_model, ubm_to_noom, ulps_to_hqmm, umps_to_psr
from tnseq.evaluate import filter_sequence, predict
from tnseq.oracle import all_sequences, oracle_conditional

warnings.simplefilter("ignore")  # uMPS-derived PSRs may predict small negative scores


def worst_gap(converted, source, max_prefix=3):
    worst = 0.0
    for length in range(max_prefix + 1):
        for prefix in all_sequences(source.obs_count, length):
            pred = predict(converted, filter_sequence(converted, prefix, check=False)[-1])
            for y in range(source.obs_count):
                worst = max(worst, abs(pred[y] - oracle_conditional(source, prefix, y)))
    return worst


umps = random_model("umps", 3, 2, seed=4)
psr, report = umps_to_psr(umps)
print("uMPS -> PSR     spectral gap", round(report.fixed_point.spectral_gap, 4), " max error", worst_gap(psr, umps))

ubm = random_model("ubm", 2, 2, seed=4)
noom, _ = ubm_to_noom(ubm)
print("uBM  -> NOOM    max error", worst_gap(noom, ubm))

ulps = random_model("ulps", 2, 2, seed=4)
hqmm, _ = ulps_to_hqmm(ulps)
print("uLPS -> HQMM    max error", worst_gap(hqmm, ulps))
