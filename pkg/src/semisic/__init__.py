"""Semi-SIC qubit POVMs: construction, witness maximization and self-testing."""

__version__ = "0.1.0"

from .bloch import (
    Alignment,
    QubitState,
    TwoOutcomeMeasurement,
    align_isometry,
    born_probability,
    gram,
)
from .optimizer import (
    GammaPoint,
    SeesawResult,
    Strategy,
    closed_form_optimum,
    gamma_stationarity_residual,
    hessian_probe,
    mu_branch_select,
    optimal_directions,
    optimal_states,
    seesaw,
    zero_term_perturbation_check,
)
from .povm import (
    Povm,
    PovmElement,
    SemiSicParams,
    build_semi_sic,
    disphenoid_edges,
    is_extremal_four_outcome,
    pairwise_trace_products,
    semi_sic_gram,
)
from .selftest import (
    CertificationReport,
    certify_povm,
    certify_states,
    reconstruct_fourth_povm,
    run_full_certification,
)
from .witness import (
    BehaviorTable,
    WitnessSpec,
    behavior_from,
    c_params_from_B,
    evaluate_extended_witness,
    evaluate_witness,
    q_of_b,
    q_of_c,
    q_prime,
)
