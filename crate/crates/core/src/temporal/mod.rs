//! Temporal-scale models: the daily Fourier rhythm (macro), session-interval
//! distributions (meso) and intra-session action counts and gaps (micro).

mod density;
mod fit;
mod fourier;
mod inflection;

pub use density::{estimate_density, write_density_csv, DensityEstimate, DensityMethod};
pub use fit::{
    compare_families, fit_exponential, fit_exponential_points, fit_logarithmic, fit_power_law, fit_power_law_points,
    log_binned_density, Binning, ExponentialOptions, Family, FitMethod, FitResult, PowerLawOptions, DEFAULT_LOG_BINS,
    MIN_EXPONENTIAL_SAMPLES, MIN_POWER_LAW_SAMPLES,
};
pub use fourier::{eval_fourier, fit_fourier, FourierModel, REFERENCE_DAILY_RHYTHM};
pub use inflection::{detect_inflection, interval_endpoint_profile, EndpointProfile, Inflection};
