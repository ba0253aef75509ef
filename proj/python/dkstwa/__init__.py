"""Dissipative Kerr soliton simulator (GP mean field and truncated-Wigner ensembles)."""

from ._core import (
    DksError,
    GapFit,
    ModelParams,
    PowerLaw,
    Record,
    Scheme,
    baseline_model,
    contrast,
    detuning_profile,
    drive_threshold,
    evolve_gp,
    fit_gap,
    fit_gap_record,
    fwm_naive,
    fwm_spectral,
    gp_step,
    load_record,
    model_hash,
    power_law_fit,
    prepare_soliton,
    rescale,
    run_twa,
    save_record,
)

__version__ = "0.3.1"
