//! Derived science quantities: regime classification, the critical spectral
//! width, peak-intensity scaling exponents, reabsorption scaling, relaxation
//! times, and the eternal-non-Markovianity profile.

mod critical;
mod eternal;
mod exponent;
mod regime;
mod scan;

pub use critical::{find_critical_lambda, CriticalLambda};
pub use eternal::{eternal_nm_check, g_function, EternalNmReport};
pub use exponent::{
    local_exponent, peak_intensity, reabsorption_scan, relaxation_time, ExponentRow,
    ExponentTable, PeakSolver, ReabsorptionRow, RelaxationReport,
};
pub use regime::{classify_regime, intensity_epsilon, Regime, RegimeReport};
pub use scan::{analysis_horizon, oscillation_period, scan_extrema, ScanOptions, ScanOutcome};
