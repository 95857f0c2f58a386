//! Configuration and domain types shared by every module, plus range validation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this `t_int / l_c` the drive is flagged as non-adiabatic.
pub const ADIABATIC_RATIO_MIN: f64 = 10.0;

/// Relative weight of the drive envelope discarded beyond the integration window.
pub const DEFAULT_TAIL_EPS: f64 = 1e-16;

/// Largest supported Ohmic exponent.
pub const ALPHA_MAX: f64 = 50.0;

/// Gaussian drive `λ(t) = λ0 exp(-t²/(2 T_int²))`-type protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivenSource {
    pub lambda0: f64,
    pub t_int: f64,
}

impl Default for DrivenSource {
    fn default() -> Self {
        Self { lambda0: 0.01, t_int: 100.0 }
    }
}

/// Ohmic-family spectral density with exponent `alpha` and Gaussian cutoff time `l_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicSpectrum {
    pub alpha: f64,
    pub l_c: f64,
}

impl Default for OhmicSpectrum {
    fn default() -> Self {
        Self { alpha: 1.0, l_c: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Spin,
    Fermion,
    Topological,
}

impl Coupling {
    pub const ALL: [Coupling; 3] = [Coupling::Spin, Coupling::Fermion, Coupling::Topological];

    pub fn name(self) -> &'static str {
        match self {
            Coupling::Spin => "spin",
            Coupling::Fermion => "fermion",
            Coupling::Topological => "topological",
        }
    }
}

impl std::str::FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spin" => Ok(Coupling::Spin),
            "fermion" => Ok(Coupling::Fermion),
            "topological" => Ok(Coupling::Topological),
            other => Err(Error::InvalidParameter(format!("unknown coupling '{other}'"))),
        }
    }
}

/// Two-level system with gap `omega_gap` and ground-state population `p_ground`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    pub coupling: Coupling,
    pub omega_gap: f64,
    pub p_ground: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub beta: f64,
    pub spectrum: OhmicSpectrum,
    pub source: DrivenSource,
    pub qubit: Option<QubitSpec>,
}

impl SystemSpec {
    pub fn pure_bath(alpha: f64, beta: f64) -> Self {
        Self {
            beta,
            spectrum: OhmicSpectrum { alpha, l_c: 1.0 },
            source: DrivenSource::default(),
            qubit: None,
        }
    }

    pub fn with_qubit(mut self, coupling: Coupling, omega_gap: f64, p_ground: f64) -> Self {
        self.qubit = Some(QubitSpec { coupling, omega_gap, p_ground });
        self
    }

    pub fn with_lambda0(mut self, lambda0: f64) -> Self {
        self.source.lambda0 = lambda0;
        self
    }

    /// Fails with the first error-level issue reported by [`validate`].
    pub fn ensure_valid(&self) -> Result<()> {
        match validate(self).errors().next() {
            Some(issue) => Err(Error::InvalidParameter(issue.message.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadRule {
    Trapezoid,
    AdaptiveGK,
}

/// Integration window and rule for drive-weighted frequency integrals.
///
/// For `Trapezoid`, `n_points` is the node count per sub-interval. For
/// `AdaptiveGK` it sets the initial panel density (`n_points / 64` panels
/// per sub-interval, at least two).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub omega_max: f64,
    pub n_points: usize,
    pub rule: QuadRule,
}

impl FrequencyGrid {
    /// Symmetric window where the envelope `exp(-2ω²T²)` has dropped below `DEFAULT_TAIL_EPS`.
    pub fn for_source(source: &DrivenSource, rule: QuadRule) -> Self {
        Self::tilted(source, rule, 0.0)
    }

    /// Window for integrands that grow like `exp(tilt·|ω|)` on one side: the
    /// half-width solves `2ω²T² - tilt·ω = ln(1/tail_eps)`.
    pub fn tilted(source: &DrivenSource, rule: QuadRule, tilt: f64) -> Self {
        let omega_max = window_half_width(source.t_int, DEFAULT_TAIL_EPS, tilt);
        let n_points = match rule {
            QuadRule::Trapezoid => 1 << 16,
            QuadRule::AdaptiveGK => 256,
        };
        Self { omega_max, n_points, rule }
    }

    pub fn with_omega_max(mut self, omega_max: f64) -> Self {
        self.omega_max = omega_max;
        self
    }
}

pub fn window_half_width(t_int: f64, tail_eps: f64, tilt: f64) -> f64 {
    let log_eps = (1.0 / tail_eps).ln();
    let t2 = t_int * t_int;
    let tilt = tilt.max(0.0);
    (tilt + (tilt * tilt + 8.0 * t2 * log_eps).sqrt()) / (4.0 * t2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    fn push(&mut self, severity: Severity, field: &'static str, message: impl Into<String>) {
        self.issues.push(Issue { severity, field: field.into(), message: message.into() });
    }
}

/// Lists range violations (errors) and non-adiabatic or engine-excluded settings (warnings).
pub fn validate(spec: &SystemSpec) -> ValidationReport {
    use Severity::{Error as E, Warning as W};
    let mut report = ValidationReport::default();

    let positive = |x: f64| x.is_finite() && x > 0.0;
    if !positive(spec.beta) {
        report.push(E, "beta", "beta must be > 0");
    }
    let alpha = spec.spectrum.alpha;
    if !positive(alpha) {
        report.push(E, "alpha", "alpha must be > 0");
    } else if alpha > ALPHA_MAX {
        report.push(E, "alpha", format!("alpha must be <= {ALPHA_MAX}"));
    }
    if !positive(spec.spectrum.l_c) {
        report.push(E, "l_c", "l_c must be > 0");
    }
    if !positive(spec.source.lambda0) {
        report.push(E, "lambda0", "lambda0 must be > 0");
    }
    if !positive(spec.source.t_int) {
        report.push(E, "t_int", "t_int must be > 0");
    }
    if positive(spec.source.t_int)
        && positive(spec.spectrum.l_c)
        && spec.source.t_int / spec.spectrum.l_c < ADIABATIC_RATIO_MIN
    {
        report.push(W, "t_int", format!("non-adiabatic: t_int/l_c < {ADIABATIC_RATIO_MIN}"));
    }
    if let Some(q) = &spec.qubit {
        if !(q.omega_gap.is_finite() && q.omega_gap >= 0.0) {
            report.push(E, "omega_gap", "omega_gap must be >= 0");
        }
        if !(0.0..=1.0).contains(&q.p_ground) {
            report.push(E, "p_ground", "p_ground must lie in [0, 1]");
        } else if q.p_ground == 0.0 || q.p_ground == 1.0 {
            report.push(
                W,
                "p_ground",
                "p = 0 or 1 puts the qubit at zero temperature (|beta_Q| infinite); excluded from engine analysis",
            );
        }
    }
    report
}

/// Inverse temperature `ln(p/(1-p))/Ω` of the qubit populations; `±∞` at `p ∈ {1, 0}`.
pub fn beta_q(qubit: &QubitSpec) -> Result<f64> {
    let p = qubit.p_ground;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter("p_ground must lie in [0, 1]".into()));
    }
    if qubit.omega_gap == 0.0 {
        return Err(Error::GaplessQubit);
    }
    if !(qubit.omega_gap.is_finite() && qubit.omega_gap > 0.0) {
        return Err(Error::InvalidParameter("omega_gap must be >= 0".into()));
    }
    Ok((p.ln() - (-p).ln_1p()) / qubit.omega_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn qubit(p: f64, omega: f64) -> QubitSpec {
        QubitSpec { coupling: Coupling::Spin, omega_gap: omega, p_ground: p }
    }

    #[test]
    fn reference_settings_are_valid() {
        let report = validate(&SystemSpec::pure_bath(5.0, 1.0));
        assert!(report.is_valid());
        assert!(report.issues.is_empty());
    }

    #[test]
    fn zero_alpha_is_an_error() {
        let report = validate(&SystemSpec::pure_bath(0.0, 1.0));
        assert!(!report.is_valid());
        assert_eq!(report.errors().next().unwrap().message, "alpha must be > 0");
    }

    #[test]
    fn short_drive_is_a_warning() {
        let mut spec = SystemSpec::pure_bath(1.0, 1.0);
        spec.source.t_int = 1.0;
        let report = validate(&spec);
        assert!(report.is_valid());
        assert!(report.warnings().any(|w| w.message.starts_with("non-adiabatic")));
    }

    #[test]
    fn out_of_range_population_is_an_error() {
        let spec = SystemSpec::pure_bath(1.0, 1.0).with_qubit(Coupling::Fermion, 0.1, 1.2);
        assert!(!validate(&spec).is_valid());
        assert!(spec.ensure_valid().is_err());
    }

    #[test]
    fn beta_q_values() {
        assert_eq!(beta_q(&qubit(0.5, 3.0)).unwrap(), 0.0);
        assert_relative_eq!(beta_q(&qubit(0.95, 1.0)).unwrap(), 19f64.ln(), max_relative = 1e-14);
        assert!(beta_q(&qubit(0.3, 1.0)).unwrap() < 0.0);
        assert_eq!(beta_q(&qubit(1.0, 1.0)).unwrap(), f64::INFINITY);
        assert_eq!(beta_q(&qubit(0.0, 1.0)).unwrap(), f64::NEG_INFINITY);
        assert_eq!(beta_q(&qubit(0.7, 0.0)), Err(Error::GaplessQubit));
    }

    #[test]
    fn tilted_window_reduces_to_plain_window() {
        let plain = window_half_width(100.0, 1e-16, 0.0);
        assert_relative_eq!(plain, ((1e16f64).ln() / 2e4).sqrt(), max_relative = 1e-14);
        assert!(window_half_width(100.0, 1e-16, 100.0) > plain);
    }

    proptest! {
        #[test]
        fn beta_q_is_increasing(p in 0.001f64..0.998, dp in 1e-4f64..1e-3, omega in 0.01f64..5.0) {
            let lo = beta_q(&qubit(p, omega)).unwrap();
            let hi = beta_q(&qubit(p + dp, omega)).unwrap();
            prop_assert!(hi > lo);
        }

        #[test]
        fn beta_q_is_antisymmetric(p in 0.001f64..0.999, omega in 0.01f64..5.0) {
            let a = beta_q(&qubit(p, omega)).unwrap();
            let b = beta_q(&qubit(1.0 - p, omega)).unwrap();
            prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn validation_is_pure(alpha in -1.0f64..60.0, beta in -1.0f64..10.0) {
            let spec = SystemSpec::pure_bath(alpha, beta);
            prop_assert_eq!(validate(&spec), validate(&spec));
        }
    }
}
