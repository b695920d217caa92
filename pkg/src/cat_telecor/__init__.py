"""Simulation library for all-optical telecorrection of multicomponent cat codes."""

from .params import (
    CodeParams,
    CutoffExhaustionError,
    InternalConsistencyError,
    UnreachableTargetError,
    gamma_from_db,
    segment_loss,
)
from .algebra import (
    BasisOverlap,
    NormPair,
    basis_overlap,
    mean_photon,
    mismatch_curves,
    norm_constants,
    rx_overlap,
)
from .focklab import (
    FockDensity,
    FockVector,
    apply_loss,
    cat_fock,
    coherent_fock,
    teleport_oracle,
    teleport_oracle_maps,
    teleport_oracle_table,
    trace_distance,
    uncorrectable_mass,
)
from .syndromes import (
    SyndromeClassification,
    SyndromeTable,
    classify,
    exact_syndrome_map,
    kraus_element,
    minimal_loss_order,
)
from .channel import (
    LogicalSuperop,
    ScanResult,
    channel_fidelity,
    corrected_channel_superop,
    fidelity_sweep,
    min_iterations_scan,
)
from .deformation import (
    BiasTarget,
    Trajectory,
    bias_success_prob,
    bias_table,
    biased_syndrome_map,
    code_switch_map,
    deformation_corrected_stats,
    sample_trajectory,
    select_inverse_deformation,
)
from .diagnostics import KLReport, kl_report, mean_error_probability

__version__ = "0.1.0"
