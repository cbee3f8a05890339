"""Finite-dimensional probabilistic sequence models built from tensor networks.

uMPS, Born machines, locally purified states, HMMs, PSRs, NOOMs, HQMMs and
their action-conditioned variants, with conversions between them and a
brute-force oracle for checking every conversion.
"""

from .controlled import (
    IoHqmm,
    Pomdp,
    Qomdp,
    controlled_filter,
    controlled_filter_init,
    controlled_joint,
    pomdp_to_psr_per_policy,
    qomdp_to_iohqmm,
)
from .convert import (
    hmm_to_psr,
    hqmm_to_ulps,
    kraus_to_liouville,
    liouville_to_kraus,
    noom_to_hqmm,
    noom_to_psr,
    ubm_to_noom,
    ubm_to_psr,
    ulps_to_hqmm,
    umps_to_psr,
)
from .errors import *  # noqa: F401,F403
from .evaluate import (
    FilterState,
    conditional_nonterminating,
    filter_init,
    filter_sequence,
    filter_step,
    joint,
    predict,
    raw_joint,
    transfer_fixed_point,
)
from .gallery import appendix_hmm, oscillating_noom, random_model
from .models import Hmm, Hqmm, KrausSet, MpsChain, Noom, Psr, Ubm, Ulps, Umps, validate
from .oracle import enumerate_joint, equivalent, finite_marginal, oracle_conditional, sample

__version__ = "0.1.0"
