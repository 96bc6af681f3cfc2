"""Land-cover change modelling: Markov-chain and hidden-Markov-model quantity
models coupled with logistic-regression allocation (MC-LR and HMM-LR)."""

import json as _json

from . import _core
from ._core import (
    GaussianHmmParams,
    LulccError,
    baum_welch_train,
    class_frequencies,
    cramers_v,
    cramers_v_table,
    dn_to_radiance,
    estimate_transition_matrix,
    extrapolate_elementwise_power,
    extrapolate_matrix_power,
    fit_logistic,
    forward_backward,
    init_params,
    learned_quantum,
    log_likelihood,
    proximity_transform,
    read_categorical_grid,
    read_continuous_grid,
    sample_hmm_sequence,
    slc_gap_fill,
    slope_from_dem,
    slope_suitability,
    toa_reflectance,
    write_categorical_grid,
    write_continuous_grid,
)

VEGETATION, IMPERVIOUS, SOIL, WATER = 1, 2, 3, 4


def compute_quantum(classes, matrix, t0, mask=None, allowed=None):
    """Cells per allowed (from, to) transition, as a dict."""
    return _json.loads(_core.compute_quantum(classes, matrix, t0, mask, allowed))


def validation_report(actual, predicted, classes=(1, 2, 3), urban_code=2, mask=None):
    return _json.loads(_core.validation_report(actual, predicted, list(classes), urban_code, mask))


def synthesize(config, out_dir):
    """Writes a synthetic bundle and returns its pipeline config."""
    return _json.loads(_core.synthesize(str(config), str(out_dir)))


def run_pipeline(config, output_dir=None):
    """Runs MC-LR and HMM-LR and returns the comparison report."""
    return _json.loads(_core.run_pipeline(str(config), None if output_dir is None else str(output_dir)))


def cli(*args):
    """Runs a CLI subcommand in-process; returns (exit code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])


__all__ = [name for name in dir() if not name.startswith("_")]
