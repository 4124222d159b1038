"""Link-level I/Q imbalance studies for THz MU-MIMO-OFDM."""

import json

from ._core import (
    IoError,
    NumericalError,
    ValidationError,
    __version__,
    amplitude_from_irr,
    closest_feasible_amplitude,
    default_scenario,
    ebn0_min,
    effective_channels,
    irr_db,
    max_irr_db,
    mismatch_matrices,
    oracle_check,
    path_loss,
    sinr_iqi,
    steering_vector,
    wideband_slope,
    write_study,
)
from ._core import run_study as _run_study

STUDIES = ("slope-sweep", "se-curve", "rate-vs-snr", "nulling")


def run_study(study, scenario=None):
    """Run one study. `scenario` is a (partial) scenario dict or JSON string layered over the defaults."""
    if isinstance(scenario, dict):
        scenario = json.dumps(scenario)
    return _run_study(study, scenario or "")


__all__ = [name for name in dir() if not name.startswith("_")]
