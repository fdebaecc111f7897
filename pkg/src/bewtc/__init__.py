"""Wiretap coset codes and secrecy bounds for the noiseless-main,
binary-erasure-eavesdropper wiretap channel.

Submodules: gf2 (packed GF(2) linear algebra), codes (kernels,
precoders, generators, coset encoding), bitchannel (Monte-Carlo and
exact bit-channel erasure probabilities), secrecy (achievability,
converse, second-order, MDS closed form, greedy selection, exact
leakage), cli (command-line front end).
"""

from .gf2 import BitMatrix, SingularMatrixError, ShapeError
from .codes import (
    Kernel,
    CodeSpec,
    WiretapCode,
    SpecError,
    G2,
    G8,
    G16,
    conv_precoder,
    build_generator,
    inner_generator,
    rm_profile_order,
    encode,
    decode,
    code_from_generator,
    load_spec,
)
from .bitchannel import (
    Conditioning,
    ErasureTrialPlan,
    BitChannelEstimate,
    sample_erasure_pattern,
    bit_determined,
    mc_erasure_probs,
    exact_erasure_probs,
    polar_bec_recursion,
)
from .secrecy import (
    BoundResult,
    SelectionResult,
    g_n,
    h_n,
    achievability_delta,
    k_achiev,
    converse_max_k,
    second_order_rate,
    q_inv,
    mds_avg_tvd,
    select_message_set,
    exact_leakage,
    code_rate_curve,
)

__version__ = "0.1.0"
