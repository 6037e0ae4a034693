"""Graph topology learning from smooth signals under partial node observation."""

__version__ = "0.1.0"

from .graphs import (
    Graph,
    GraphError,
    Spectrum,
    build_laplacian,
    eigendecompose,
    generate_er,
    generate_knn,
    generate_sbm,
    load_edge_list,
    save_edge_list,
    validate_in_laplacian_set,
)
from .harness import (
    RealConfig,
    TrialConfig,
    altitude_ground_truth,
    f1_score,
    run_real_experiment,
    run_sweep,
    run_trial,
)
from .observation import (
    ObservationMask,
    block_decompose,
    lift_surrogate_full,
    project_surrogate_partial,
    restrict_laplacian,
    restrict_signals,
    sample_observation,
)
from .signals import (
    GraphFilter,
    apply_filter,
    decompose_lowpass,
    frequency_response,
    generate_signals,
    quadratic_form,
    sharpness_ratio,
)
from .solver import (
    SolverConfig,
    SolveResult,
    objective,
    pairwise_energy_vector,
    simplex_projection,
    solve_gl_sigrep,
    threshold_edges,
)
from .theory import (
    BoundReport,
    check_sampling_condition,
    coherence,
    min_t_for_condition,
    nonideal_residual,
    rip_check,
    theorem_report,
)
