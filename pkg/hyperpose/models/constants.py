from __future__ import annotations

# fmt: off
# flake8: noqa

HYPERPOSE_VERSION = "0.1.0"

# -- Lorentz model numerical guards
EPS = 1e-7                 # arccosh clamp and generic guarded division
SMALL_NORM = 1e-6          # below this tangent norm exp_o/log_o use their Taylor series
R_Q = 3.0                  # Q/K tangent norm bound before the hyperboloid lift
R_SAFETY = 15.0            # global clip of the hidden tangent state
DRIFT_TOL_FP64 = 1e-6
DRIFT_TOL_FP32 = 1e-4
FP32_MACHINE_EPS = 1.19e-7
CHECKED_ENV_VAR = "HYPERPOSE_CHECKED"

# -- Losses
LIFT_SCALE = 1e-3          # mm -> m before lifting 3D joints onto H^3
CURRICULUM_ZERO_END = 9    # omega(e) = 0 for e <= 9
CURRICULUM_FULL = 20       # omega(e) = 1 for e >= 20
LOSS_TERMS = ["mpjpe", "vel", "bone"]

# -- Network
DEFAULT_TEMPORAL_WINDOWS = (3, 9, 27)
HOP_COUNT = 3
GELU_COEF = 0.044715
# number of trainable scalars quoted for the full-size configuration
REFERENCE_PARAMETER_COUNT = 21_845_677

# -- Files
DATASET_MAGIC = b"HPSE"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"HPCK"
CHECKPOINT_VERSION = 1
DATASET_DIMS = ("sequence", "frame", "joint", "channel")
MANIFEST_SUFFIX = ".manifest.yaml"
CHECKPOINT_SIDECAR_SUFFIX = ".config.yaml"

# -- Reports
DIAGNOSTIC_DEFINITION_ID = "hyperpose-local-v1"
AVG_ROW_LABEL = "AVG"
SEQUENCE_COLUMN = "sequence"
METRIC_COLUMNS = ["mpjpe", "p_mpjpe", "n_mpjpe", "mpjve", "accel", "blc",
                  "distortion", "map", "entropy"]
TRAIN_LOG_COLUMNS = ["epoch", "step", "lr", "omega",
                     "loss_total", "loss_mpjpe", "loss_vel", "loss_bone",
                     "sigma_sq_mpjpe", "sigma_sq_vel", "sigma_sq_bone",
                     "drift", "log10_drift", "grad_norm", "val_mpjpe", "wall_time"]
DRIFT_LOG_COLUMNS = ["step", "block", "site", "drift", "log10_drift"]
BENCH_COLUMNS = ["T", "W", "banded_macs", "dense_macs", "ratio",
                 "banded_seconds", "dense_seconds", "rss_mb"]
