"""Black-box transfer-function identification of grid-connected converters."""
from .emulator import REFERENCE_PLANT, EmulationScenario, ExcitationSpec, end_to_end_roundtrip, generate
from .estimation import (
    ArxModel,
    ModelOrder,
    build_regressors,
    fit_arx,
    fit_tf_arx,
    predict_one_step,
    simulate_free_run,
)
from .metrics import confidence_band, fpe, nrmse_fit
from .order_search import FitReport, SweepConfig, select_best, sweep
from .preprocess import PreprocessConfig, run_chain
from .tf import ContinuousTf, DiscreteTf, arx_to_continuous, poles_zeros
from .timeseries import Signal, SignalPair, load_csv, save_csv

__version__ = "0.1.0"
