//! Response experiments: compressibility under a cosine tilt and
//! density-wave spectroscopy.

pub mod bragg;
pub mod compress;
pub mod tilt;

pub use bragg::{
    chi_from_poles, dominant_pole, driven_response, find_resonance, fourier_extract, linear_response_chi, mode_pattern,
    mode_variance, mode_weights, two_level_curve, two_level_response, DriveSpec, DrivenResponse, Resonance,
    SusceptibilityCurve, TwoLevelResponse, TwoLevelSpec,
};
pub use compress::{
    compressibility_ensemble, run_compressibility_protocol, CompressibilityRun, CompressibilitySetup, EnsembleStat,
    Protocol,
};
pub use tilt::{apply_tilt, applied_tilt_amplitude, compressibility, natural_tilt, tilt_pattern, TiltSpec};
