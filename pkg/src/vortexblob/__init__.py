"""Vortex-blob simulation of 2D incompressible flow, with the diagnostics
needed to study the method itself: conserved impulses, vorticity norms,
kinetic energy with an analytic far-field tail, the consistency error of
the blob approximation, the blob-vs-transport Lagrangian gap, and a
velocity-increment identity residual.
"""
from .kernels import (Mollifier, Profile, RegularizedKernel, biot_savart,
                      kernel_translation_gap, translation_gap_constant)
from .discretization import (Blob, CustomGrid, DegenerateInputError, Ensemble,
                             GaussianDipole, Lattice, MollifiedField, Patch,
                             PowerSpike, Schedule, ScheduleMode, build_lattice,
                             initial_lp_norm, mollify_initial, schedule_parameters,
                             tile_and_weight)
from .dynamics import (DIRECT, BlowUpError, EvaluatorMethod, Integrator,
                       VelocityEvaluator, default_dt, rk4_step, run, step,
                       tree_velocity_all, velocity_at)
from .transport import (TracerCloud, advect_tracers, lagrangian_gap,
                        marker_value_range, seed_tracers, transport_field,
                        transport_field_at)
from .diagnostics import (DiagnosticsRecord, GridField, GridSpec, ZeroMeanGateError,
                          blob_velocities, consistency_error_field, divergence_check,
                          ensemble_centroid, ensemble_diameter, equi_tail_profile,
                          f_eps_norms, grid_for_ensemble, impulses, kinetic_energy,
                          lp_norm, make_observer, reconstruct_vorticity,
                          velocity_grid)
from .serfati import (collect_series, cutoff_kernel_fields, cutoff_profile,
                      serfati_residual)
from .config import (ConfigError, ConvergenceStudy, RunConfig, config_hash,
                     parse_run_config, parse_study_config, run_config_text,
                     study_config_text)
from .snapshots import (SnapshotFormatError, read_csv, read_ensemble,
                        read_grid_field, recorded_hash, write_csv,
                        write_ensemble, write_grid_field)
from .study import RunResult, StudyResult, execute_run, prepare_ensemble, run_study

__version__ = "0.1.0"

__all__ = [
    "Blob", "BlowUpError", "blob_velocities", "ConfigError", "ConvergenceStudy", "CustomGrid",
    "DIRECT", "DegenerateInputError", "DiagnosticsRecord", "Ensemble",
    "EvaluatorMethod", "GaussianDipole", "GridField", "GridSpec", "Integrator",
    "Lattice", "Mollifier", "MollifiedField", "Patch", "PowerSpike", "Profile",
    "RegularizedKernel", "RunConfig", "RunResult", "Schedule", "ScheduleMode",
    "SnapshotFormatError", "StudyResult", "TracerCloud", "VelocityEvaluator",
    "ZeroMeanGateError", "advect_tracers", "biot_savart", "build_lattice",
    "collect_series", "config_hash", "consistency_error_field",
    "cutoff_kernel_fields", "cutoff_profile", "default_dt", "divergence_check", "ensemble_centroid",
    "ensemble_diameter", "equi_tail_profile", "execute_run", "f_eps_norms",
    "grid_for_ensemble", "impulses", "initial_lp_norm", "kernel_translation_gap",
    "kinetic_energy", "lagrangian_gap", "lp_norm", "make_observer",
    "marker_value_range",
    "mollify_initial", "parse_run_config", "parse_study_config",
    "prepare_ensemble", "read_csv", "read_ensemble", "read_grid_field",
    "recorded_hash",
    "reconstruct_vorticity", "rk4_step", "run", "run_config_text", "run_study",
    "schedule_parameters", "seed_tracers", "serfati_residual", "step",
    "study_config_text", "tile_and_weight", "transport_field",
    "transport_field_at", "translation_gap_constant", "tree_velocity_all",
    "velocity_at",
    "velocity_grid", "write_csv", "write_ensemble", "write_grid_field",
]
