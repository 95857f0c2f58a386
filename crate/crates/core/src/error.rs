use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gapless qubit has no defined temperature")]
    GaplessQubit,

    #[error("pole of Bose factor at x = 0")]
    BosePole,

    #[error("integrand evaluation failed at ω = {omega:e}")]
    IntegrandNonFinite { omega: f64 },

    #[error("inversion window too small: atom + continuous mass = {total:.12}")]
    InversionWindow { total: f64 },

    #[error("perturbative breakdown: ln χ undefined (χ(iβ) = {0:e})")]
    PerturbativeBreakdown(f64),

    #[error("positivity constraint violated: ∫λ[iG⁻⁺ + iG⁺⁻] = {0:e} is outside (0, 2); reduce lambda0")]
    PositivityViolated(f64),

    #[error("negative work density {value:e} at W = {w:e}")]
    NegativeDensity { w: f64, value: f64 },

    #[error("all-order WCF available only for pure thermal bath")]
    NonperturbativeQubit,

    #[error("operation requires a {0}")]
    WrongMode(&'static str),

    #[error("heat split undefined at T_B = T_Q")]
    DegenerateTemperatures,

    #[error("population-inverted or infinite-temperature qubit excluded from engine analysis (p = {0})")]
    EngineExcluded(f64),

    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),

    #[error("{failed} of {total} sweep cells failed (first: {first})")]
    SweepFailed { failed: usize, total: usize, first: String },
}
