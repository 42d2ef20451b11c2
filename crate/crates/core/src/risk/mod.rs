//! Estimators for the quantities of the excess-risk and regularity theory:
//! statistical rates, decomposition terms, doubling constants, Hölder
//! exponents and the target-shift inequality.

mod decomposition;
mod doubling;
mod holder;
mod ood;
mod rate;
mod stat;

pub use decomposition::{decompose_excess_risk, RiskInputs, RiskReport};
pub use doubling::{doubling_probe, gauss_legendre, DoublingProbeResult, Ellipsoid, BOUNDARY_MARGIN, MAX_CONDITION};
pub use holder::{discrete_ot_images, holder_probe, sunflower_disk, HolderEstimate, HolderSource, R_MAX_FRACTION};
pub use ood::{ood_check, OodResult};
pub use rate::{fit_loglog, log_spaced, rate_sweep, run_stream, RateFit, RunRecord, SweepResult, SweepSpec};
pub use stat::{
    j2_closed_form_1d, j2_empirical_bound, j2_functional, stat_term, stat_term_mc, uniform_empirical_bound,
    MeanEstimate,
};
