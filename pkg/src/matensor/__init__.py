"""Tensor-decomposition channel estimation for movable-antenna MIMO.

The package simulates field-response channels between antennas that move on
planar grids, runs a two-stage pilot protocol whose measurements fold into
low-rank tensors, recovers multipath angles and gains by canonical polyadic
decomposition, and benchmarks the approach against compressed-sensing
baselines with a deterministic Monte-Carlo harness.
"""

from .baselines import (
    AngleDictionary,
    CompressedSensingEstimator,
    build_dictionary,
    cs_estimate,
    omp,
    somp,
)
from .channel import (
    MultipathChannel,
    ScenarioConfig,
    channel_matrix,
    channel_nmse,
    enumerate_grid,
    field_response_rx,
    field_response_tx,
    full_grid_nmse,
    generate_channel,
    prm_variances,
    steering_matrix,
)
from .config_io import Settings, load_settings, write_config
from .cp import (
    AlsReport,
    CPDecomposition,
    FactorSet,
    cp_als,
    init_factors,
    kruskal_ok,
    reconstruct,
)
from .errors import ConfigurationError, DegenerateColumnError, EstimationError
from .estimation import (
    AngleEstimates,
    EstimationResult,
    TensorChannelEstimator,
    estimate_gains,
    estimate_generator,
    extract_angles_rx,
    extract_angles_tx,
    match_angle_sets,
    reconstruct_channel,
    run_algorithm1,
)
from .experiments import (
    ResultRow,
    SummaryRow,
    SweepSpec,
    aggregate,
    read_rows_csv,
    resolve_pilot_area,
    run_sweep,
    write_rows_csv,
    write_summary_csv,
)
from .pilots import (
    PilotObservation,
    PilotPlan,
    build_pilot_plan,
    exhaustive_pilot_bound,
    load_observation,
    make_pilot_matrix,
    pilot_overhead,
    save_observation,
    simulate_pilots,
    simulate_stage1,
    simulate_stage2,
    tensorize_stage1,
    tensorize_stage2,
)
from .presets import PRESETS, desk_scale, full_scale

__version__ = "0.1.0"
