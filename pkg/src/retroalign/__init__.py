"""Simulation and verification toolkit for secure retrospective
interference alignment on the K-user interference channel with delayed
transmitter-side channel knowledge.

Layers:

* params     -- exact big-integer/rational dimension and SDoF calculus
* channel    -- seeded channel blocks and the delayed-CSIT audit
* alignment  -- the W/X monomial bases and selection maps
* scheme     -- two-phase transmission, cancellation and decoding
* secrecy    -- stacked observation matrices, rank identities, rates
* cli        -- reproducible experiment front end
"""

from .params import (
    SecrecyModel, SchemeParams, SdofValue, SqrtBound, OptimalRounds,
    derive_params, sdof_formula, sdof_value, optimal_rounds,
    sdof_lower_bound, baseline_dof_no_secrecy, min_feasible_n,
    asymptotic_per_user_dof, admissible_rounds,
)
from .channel import (
    ChannelBlock, CsitLedger, MemoryCapError, generate_block,
    with_fresh_phase2, audit_delayed_csit, dump_block, load_block,
)
from .alignment import (
    cross_links, AlignmentBasis, build_basis, basis_for, evaluate_w,
    evaluate_x, selection_map, verify_alignment, AlignmentReport,
)
from .linalgx import RankPolicy, RankReport, rank_report, numerical_rank
from .scheme import (
    MixingMatrices, Payload, TransmissionRecord, DecodabilityCertificate,
    SingularSystemError, draw_mixing, draw_payload, run_phase1, run_phase2,
    run_block, cancel_and_decode, bk_matrix, certify_bk_full_rank,
)
from .secrecy import (
    EAVESDROPPER, StackedMatrices, SecrecyReport, logdet_entropy,
    build_stacks, verify_rank_identities, rank_product_oracle,
    achievable_rate, mutual_information_rate, sdof_slope, secrecy_report,
    rate_spectra, adversaries_for,
)

__version__ = "0.1.0"
