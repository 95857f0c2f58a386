//! Work characteristic function, work distribution, mean work and the
//! Jarzynski deficit at second order in the drive, plus the all-order
//! characteristic function of the pure bath.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::green::{green_pair, GreenPair};
use crate::model::{DrivenSource, FrequencyGrid, QuadRule, SystemSpec};
use crate::par::Execution;
use crate::quad::{
    complex_expm1, integrate_lambda_detailed, invert_continuous, lambda_weight, Integral, InversionPlan,
    NodeSet,
};
use crate::{Error, Result};

/// Atom of weight `atom_weight` at `W = 0` plus a sampled continuous density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkDistribution {
    pub atom_weight: f64,
    pub w_grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Roundoff-negative samples set to zero.
    pub clipped: usize,
    /// Largest imaginary part of the recovered density relative to its largest real part.
    pub imag_residue: f64,
}

impl WorkDistribution {
    /// Trapezoid integral of the continuous density over the grid.
    pub fn continuous_mass(&self) -> f64 {
        self.w_grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(w, d)| 0.5 * (w[1] - w[0]) * (d[0] + d[1]))
            .sum()
    }

    pub fn normalization(&self) -> f64 {
        self.atom_weight + self.continuous_mass()
    }

    pub fn peak(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Number of samples strictly larger than both neighbours (one at the ends).
    pub fn local_maxima(&self) -> usize {
        let d = &self.density;
        (0..d.len())
            .filter(|&i| {
                let left = i == 0 || d[i] > d[i - 1];
                let right = i + 1 == d.len() || d[i] > d[i + 1];
                left && right && d[i] > 0.0
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WcfSample {
    pub v: f64,
    pub value: Complex64,
}

/// Drive-weighted integrals out of which every work statistic is assembled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `∫_λ (g_mp + g_pm)`.
    Mass,
    /// `∫_λ ω (g_mp − g_pm)`.
    FirstMoment,
    /// `∫_λ (1 − e^{-βω})(g_mp − e^{βω} g_pm)`.
    JarzynskiDeficit,
    /// `∫_λ (1 − cos ωv)(g_mp + g_pm)`.
    WcfReal(f64),
    /// `∫_λ sin(ωv)(g_mp − g_pm)`.
    WcfImag(f64),
}

impl Family {
    pub fn integrate(&self, pair: &GreenPair, source: &DrivenSource, rule: QuadRule) -> Result<Integral> {
        self.integrate_on(pair, source, &self.grid(pair, source, rule))
    }

    /// Default window; the Jarzynski integrand grows like `e^{β|ω|}` for
    /// `ω < 0`, so its window is widened accordingly.
    pub fn grid(&self, pair: &GreenPair, source: &DrivenSource, rule: QuadRule) -> FrequencyGrid {
        match self {
            Family::JarzynskiDeficit => FrequencyGrid::tilted(source, rule, pair.beta()),
            _ => FrequencyGrid::for_source(source, rule),
        }
    }

    pub fn integrate_on(
        &self,
        pair: &GreenPair,
        source: &DrivenSource,
        grid: &FrequencyGrid,
    ) -> Result<Integral> {
        let sing = pair.singularities();
        let beta = pair.beta();
        match *self {
            Family::Mass => integrate_lambda_detailed(|w| pair.g_mp(w) + pair.g_pm(w), source, grid, &sing),
            Family::FirstMoment => {
                integrate_lambda_detailed(|w| w * (pair.g_mp(w) - pair.g_pm(w)), source, grid, &sing)
            }
            Family::JarzynskiDeficit => integrate_lambda_detailed(
                |w| {
                    let diff = pair.g_mp(w) - pair.g_pm_boltzmann(w);
                    if diff == 0.0 {
                        0.0
                    } else {
                        -(-beta * w).exp_m1() * diff
                    }
                },
                source,
                grid,
                &sing,
            ),
            Family::WcfReal(v) => integrate_lambda_detailed(
                |w| {
                    let s = (0.5 * w * v).sin();
                    2.0 * s * s * (pair.g_mp(w) + pair.g_pm(w))
                },
                source,
                grid,
                &sing,
            ),
            Family::WcfImag(v) => integrate_lambda_detailed(
                |w| (w * v).sin() * (pair.g_mp(w) - pair.g_pm(w)),
                source,
                grid,
                &sing,
            ),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Mass => "mass".into(),
            Family::FirstMoment => "first-moment".into(),
            Family::JarzynskiDeficit => "jarzynski-deficit".into(),
            Family::WcfReal(v) => format!("wcf-real(v={v})"),
            Family::WcfImag(v) => format!("wcf-imag(v={v})"),
        }
    }
}

fn pair_for(spec: &SystemSpec) -> Result<GreenPair> {
    spec.ensure_valid()?;
    green_pair(spec)
}

fn integral(spec: &SystemSpec, family: Family) -> Result<f64> {
    let pair = pair_for(spec)?;
    Ok(family.integrate(&pair, &spec.source, QuadRule::AdaptiveGK)?.value)
}

/// `χ⁽²⁾(v) − 1`, kept separate from the unit part for precision.
pub fn chi2_minus_one(v: f64, spec: &SystemSpec) -> Result<Complex64> {
    let pair = pair_for(spec)?;
    chi2_minus_one_for(&pair, &spec.source, v)
}

pub fn chi2_minus_one_for(pair: &GreenPair, source: &DrivenSource, v: f64) -> Result<Complex64> {
    if v == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let re = Family::WcfReal(v).integrate(pair, source, QuadRule::AdaptiveGK)?.value;
    let im = Family::WcfImag(v).integrate(pair, source, QuadRule::AdaptiveGK)?.value;
    Ok(Complex64::new(-0.5 * re, 0.5 * im))
}

/// Second-order work characteristic function.
pub fn chi2(v: f64, spec: &SystemSpec) -> Result<Complex64> {
    Ok(1.0 + chi2_minus_one(v, spec)?)
}

/// `χ⁽²⁾` on `v = 0, dv, …, (n−1)·dv`, one adaptive quadrature per point.
pub fn chi2_samples(spec: &SystemSpec, v_max: f64, n: usize, exec: Execution) -> Result<Vec<WcfSample>> {
    let pair = pair_for(spec)?;
    let dv = if n > 1 { v_max / (n - 1) as f64 } else { 0.0 };
    exec.map(n, |k| {
        let v = k as f64 * dv;
        chi2_minus_one_for(&pair, &spec.source, v).map(|c| WcfSample { v, value: 1.0 + c })
    })
    .into_iter()
    .collect()
}

/// `χ⁽²⁾(iβ) − 1`; identically zero for a thermal bath.
pub fn jarzynski_deficit(spec: &SystemSpec) -> Result<f64> {
    integral(spec, Family::JarzynskiDeficit).map(|x| -0.5 * x)
}

pub fn jarzynski_deficit_for(pair: &GreenPair, source: &DrivenSource, rule: QuadRule) -> Result<f64> {
    Ok(-0.5 * Family::JarzynskiDeficit.integrate(pair, source, rule)?.value)
}

/// `χ⁽²⁾(iβ)`; fails when it is not positive.
pub fn chi2_at_i_beta(spec: &SystemSpec) -> Result<f64> {
    let value = 1.0 + jarzynski_deficit(spec)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::PerturbativeBreakdown(value))
    }
}

/// Mean work done on the system, `½∫_λ ω S^V(ω)`.
pub fn mean_work(spec: &SystemSpec) -> Result<f64> {
    integral(spec, Family::FirstMoment).map(|x| 0.5 * x)
}

/// Extracted work `−W̄`.
pub fn w_ext2(spec: &SystemSpec) -> Result<f64> {
    mean_work(spec).map(|w| -w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// `∫_λ (g_mp + g_pm)`; twice the transition probability.
    pub value: f64,
    pub passed: bool,
}

/// The no-transition weight `1 − value/2` is a probability only for `value ∈ (0, 2)`.
pub fn positivity_check(spec: &SystemSpec) -> Result<PositivityReport> {
    let pair = green_pair(spec)?;
    let value = if spec.source.lambda0 == 0.0 {
        0.0
    } else {
        Family::Mass.integrate(&pair, &spec.source, QuadRule::AdaptiveGK)?.value
    };
    Ok(PositivityReport { value, passed: value > 0.0 && value < 2.0 })
}

fn checked_mass(pair: &GreenPair, source: &DrivenSource) -> Result<f64> {
    let mass = Family::Mass.integrate(pair, source, QuadRule::AdaptiveGK)?.value;
    if mass > 0.0 && mass < 2.0 {
        Ok(mass)
    } else {
        Err(Error::PositivityViolated(mass))
    }
}

/// No-transition probability `p0 = 1 − ½∫_λ (g_mp + g_pm)`.
pub fn atom_weight(spec: &SystemSpec) -> Result<f64> {
    let pair = pair_for(spec)?;
    Ok(1.0 - 0.5 * checked_mass(&pair, &spec.source)?)
}

/// Continuous density `|λ̃(W)|² [g_mp(W) + g_pm(−W)] / 4π`.
pub fn wdf2_density(pair: &GreenPair, source: &DrivenSource, w: f64) -> f64 {
    lambda_weight(w, source) * (pair.g_mp(w) + pair.g_pm(-w)) / (4.0 * std::f64::consts::PI)
}

/// Second-order work distribution sampled on `w_grid` (sorted ascending).
pub fn wdf2(spec: &SystemSpec, w_grid: &[f64]) -> Result<WorkDistribution> {
    let pair = pair_for(spec)?;
    if w_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("W grid must be strictly increasing".into()));
    }
    let mass = checked_mass(&pair, &spec.source)?;
    let density = w_grid.iter().map(|&w| wdf2_density(&pair, &spec.source, w)).collect();
    Ok(WorkDistribution {
        atom_weight: 1.0 - 0.5 * mass,
        w_grid: w_grid.to_vec(),
        density,
        clipped: 0,
        imag_residue: 0.0,
    })
}

/// Symmetric grid of `2·n_half` points on `[−ω_max, ω_max]` without `W = 0`,
/// graded toward zero as `(k/n)^g`, `g = max(1, 2/α)`, to resolve the
/// sub-Ohmic peak.
pub fn default_w_grid(spec: &SystemSpec, n_half: usize) -> Vec<f64> {
    let w_max = FrequencyGrid::for_source(&spec.source, QuadRule::AdaptiveGK).omega_max;
    let g = (2.0 / spec.spectrum.alpha).max(1.0);
    let positive: Vec<f64> = (1..=n_half).map(|k| w_max * (k as f64 / n_half as f64).powf(g)).collect();
    positive.iter().rev().map(|w| -w).chain(positive.iter().copied()).collect()
}

pub const DEFAULT_W_HALF_POINTS: usize = 1024;

/// Ratios `P(−W)/P(W)` on the non-negative half of a symmetric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrooksRatio {
    pub w: Vec<f64>,
    pub ratio: Vec<f64>,
    pub forward: Vec<f64>,
    /// Points where `P(W)` is too small to divide by.
    pub skipped: Vec<f64>,
    pub beta: f64,
}

impl CrooksRatio {
    /// Largest `|ratio/e^{−βW} − 1|` over points with `P(W) > rel_floor · max P`.
    pub fn max_thermal_deviation(&self, rel_floor: f64) -> f64 {
        let peak = self.forward.iter().copied().fold(0.0, f64::max);
        self.w
            .iter()
            .zip(&self.ratio)
            .zip(&self.forward)
            .filter(|(_, &f)| f > rel_floor * peak)
            .map(|((&w, &r), _)| (r / (-self.beta * w).exp() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub const CROOKS_MIN_DENSITY: f64 = 1e-300;

pub fn crooks_ratio(dist: &WorkDistribution, beta: f64) -> Result<CrooksRatio> {
    let w = &dist.w_grid;
    let n = w.len();
    for i in 0..n {
        let scale = w[i].abs().max(w[n - 1 - i].abs());
        if (w[i] + w[n - 1 - i]).abs() > 1e-12 * scale {
            return Err(Error::InvalidParameter("Crooks ratio needs a W grid symmetric about 0".into()));
        }
    }
    let mut out =
        CrooksRatio { w: Vec::new(), ratio: Vec::new(), forward: Vec::new(), skipped: Vec::new(), beta };
    for i in (0..n).filter(|&i| w[i] >= 0.0) {
        let (fwd, back) = (dist.density[i], dist.density[n - 1 - i]);
        if w[i] == 0.0 {
            out.w.push(0.0);
            out.ratio.push(1.0);
            out.forward.push(fwd);
        } else if fwd < CROOKS_MIN_DENSITY {
            out.skipped.push(w[i]);
        } else {
            out.w.push(w[i]);
            out.ratio.push(back / fwd);
            out.forward.push(fwd);
        }
    }
    Ok(out)
}

fn require_bath(spec: &SystemSpec) -> Result<()> {
    if spec.qubit.is_some() {
        Err(Error::NonperturbativeQubit)
    } else {
        Ok(())
    }
}

/// All-order characteristic function `exp(χ⁽²⁾(v) − 1)` of the pure bath.
pub fn chi_nonperturbative(v: f64, spec: &SystemSpec) -> Result<Complex64> {
    require_bath(spec)?;
    Ok(chi2_minus_one(v, spec)?.exp())
}

/// `χ(iβ)` to all orders for the pure bath.
pub fn chi_nonperturbative_at_i_beta(spec: &SystemSpec) -> Result<f64> {
    require_bath(spec)?;
    Ok(jarzynski_deficit(spec)?.exp())
}

/// Perturbative and all-order distributions recovered from one set of
/// characteristic-function samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInversion {
    pub perturbative: WorkDistribution,
    pub nonperturbative: Option<WorkDistribution>,
}

/// Samples of the continuous part `χ⁽²⁾(v) − p0 = ½∫_λ [e^{iωv} g_mp + e^{−iωv} g_pm]`
/// on `v = k·dv`, `k = 0..=n/2`.
fn continuous_samples(
    pair: &GreenPair,
    source: &DrivenSource,
    plan: &InversionPlan,
    exec: Execution,
) -> Vec<Complex64> {
    let omega_max = FrequencyGrid::for_source(source, QuadRule::AdaptiveGK).omega_max;
    let nodes = NodeSet::oscillatory(source, omega_max, &pair.singularities(), plan.v_max);
    let a: Vec<f64> = nodes.omega.iter().map(|&w| 0.5 * pair.g_mp(w)).collect();
    let b: Vec<f64> = nodes.omega.iter().map(|&w| 0.5 * pair.g_pm(w)).collect();
    nodes.fourier_samples(&a, &b, plan.dv(), plan.n_fft / 2 + 1, exec)
}

/// Inverts `χ⁽²⁾` (and, for the pure bath, `exp(χ⁽²⁾ − 1)`) by FFT on the
/// window of `plan`; `plan.atom_weight` is replaced by the analytic atoms.
pub fn invert_spectral(
    spec: &SystemSpec,
    plan: &InversionPlan,
    exec: Execution,
) -> Result<SpectralInversion> {
    let pair = pair_for(spec)?;
    let mass = checked_mass(&pair, &spec.source)?;
    let c = continuous_samples(&pair, &spec.source, plan, exec);
    let p0 = 1.0 - 0.5 * mass;
    let perturbative = invert_continuous(&c, &InversionPlan { atom_weight: p0, ..*plan })?;
    let nonperturbative = if pair.is_thermal() {
        // χ = e^{p0−1} e^{c}: atom e^{p0−1}, continuous part e^{p0−1}(e^{c} − 1).
        let atom = (-0.5 * mass).exp();
        let np: Vec<Complex64> = c.iter().map(|&z| atom * complex_expm1(z)).collect();
        Some(invert_continuous(&np, &InversionPlan { atom_weight: atom, ..*plan })?)
    } else {
        None
    };
    Ok(SpectralInversion { perturbative, nonperturbative })
}

/// All-order work distribution of the pure bath by FFT inversion.
pub fn wdf_nonperturbative(
    spec: &SystemSpec,
    plan: &InversionPlan,
    exec: Execution,
) -> Result<WorkDistribution> {
    require_bath(spec)?;
    Ok(invert_spectral(spec, plan, exec)?.nonperturbative.expect("pure bath inverts to all orders"))
}
