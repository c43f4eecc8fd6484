"""Target tracking and assisted aiming for a two-axis gimbal turret."""
from .association import Track, Tracker, TrackerConfig, TrackStatus, build_cost, hungarian, reacquire
from .ballistics import DropModel, DropSample, FitReport, drop_to_pitch, fit, predict_drop, score
from .config import ConfigError, PipelineConfig, load_config
from .control import FirFilter, GimbalCommand, PidFfController, aim_to_command, design_lowpass, fir_step, pid_step
from .estimation import KalmanFilter1D, KalmanParams, MeasurementHistory, kalman_at_filter
from .geometry import BBox, CameraModel, Detection, Point3, Pose, estimate_distance, iou, rotation_matrix, to_world
from .metrics import EvalCounts, mean_ap, precision, recall
from .pipeline import AimPipeline
from .scenario import Scenario, load_scenario
from .selection import SelectedTarget, SelectionConfig, predict_aim, select
from .simharness import GimbalPlant, TickLog, run

__version__ = "0.1.0"
