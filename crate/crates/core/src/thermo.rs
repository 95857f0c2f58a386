//! Entropy production, heat split between bath and qubit, and the
//! heat-engine / refrigerator figures of merit.

use serde::{Deserialize, Serialize};

use crate::model::{beta_q, DrivenSource, SystemSpec};
use crate::workstats::{jarzynski_deficit, mean_work};
use crate::{Error, Result};

/// Relative temperature separation below which the heat split is undefined.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Smallest `p` offset from `½` and `1` admitted in engine analysis.
pub const POPULATION_INSET: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Work is extracted while heat flows from hot to cold.
    HeatEngine,
    /// Work is consumed to pump heat out of the cold reservoir.
    Refrigerator,
    /// Work is consumed while heat still flows from hot to cold.
    Accelerator,
    /// Work is consumed and dumped as heat into both reservoirs.
    Heater,
    /// `|W̄|` within the numerical band `mode_tol`.
    Degenerate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::HeatEngine => "heat-engine",
            Mode::Refrigerator => "refrigerator",
            Mode::Accelerator => "accelerator",
            Mode::Heater => "heater",
            Mode::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineReport {
    pub w_bar: f64,
    pub delta_s: f64,
    pub q_b: f64,
    pub q_q: f64,
    pub mode: Mode,
    /// Efficiency for a heat engine, COP for a refrigerator.
    pub figure_of_merit: Option<f64>,
    pub t_b: f64,
    pub t_q: f64,
    pub t_h: f64,
    pub t_l: f64,
    pub r: f64,
}

/// `ΔS = βW̄ + ln χ⁽²⁾(iβ)`.
pub fn entropy_production(spec: &SystemSpec) -> Result<f64> {
    let w_bar = mean_work(spec)?;
    entropy_production_with(spec, w_bar)
}

fn entropy_production_with(spec: &SystemSpec, w_bar: f64) -> Result<f64> {
    let deficit = jarzynski_deficit(spec)?;
    if 1.0 + deficit <= 0.0 {
        return Err(Error::PerturbativeBreakdown(1.0 + deficit));
    }
    Ok(spec.beta * w_bar + deficit.ln_1p())
}

/// Heat into the bath and into the qubit from the first law `Q_B + Q_Q = W̄`
/// and the entropy balance `ΔS = Q_B/T_B + Q_Q/T_Q`.
pub fn heat_flows(w_bar: f64, delta_s: f64, t_b: f64, t_q: f64) -> Result<(f64, f64)> {
    let gap = t_b - t_q;
    if gap.is_nan() || gap.abs() <= DEGENERACY_TOL * t_b.abs().max(t_q.abs()) {
        return Err(Error::DegenerateTemperatures);
    }
    let q_b = -t_b * (t_q * delta_s - w_bar) / gap;
    let q_q = t_q * (t_b * delta_s - w_bar) / gap;
    Ok((q_b, q_q))
}

/// Band around `W̄ = 0` treated as degenerate, scaled to `λ0² T_int`.
pub fn mode_tol(source: &DrivenSource) -> f64 {
    1e-16 * source.lambda0 * source.lambda0 * source.t_int
}

/// Classifies the cycle given `W̄`, `ΔS` and both temperatures.
pub fn classify(w_bar: f64, delta_s: f64, t_b: f64, t_q: f64, tol: f64) -> Result<EngineReport> {
    let (q_b, q_q) = heat_flows(w_bar, delta_s, t_b, t_q)?;
    let (t_h, t_l) = if t_b > t_q { (t_b, t_q) } else { (t_q, t_b) };
    let r = t_l / t_h;
    let q_l = if t_b > t_q { q_q } else { q_b };
    let (mode, figure_of_merit) = if w_bar.abs() <= tol {
        (Mode::Degenerate, None)
    } else if w_bar < 0.0 {
        let w_ext = -w_bar;
        (Mode::HeatEngine, Some((1.0 - r) / (1.0 + t_l * delta_s / w_ext)))
    } else {
        let cop = r / (1.0 - r) * (1.0 - t_h * delta_s / w_bar);
        if cop > 0.0 {
            (Mode::Refrigerator, Some(cop))
        } else if q_l >= 0.0 && w_bar - q_l < 0.0 {
            (Mode::Accelerator, None)
        } else {
            (Mode::Heater, None)
        }
    };
    Ok(EngineReport { w_bar, delta_s, q_b, q_q, mode, figure_of_merit, t_b, t_q, t_h, t_l, r })
}

/// Engine analysis for a qubit with positive temperature, `p ∈ (½, 1)`.
pub fn engine_report(spec: &SystemSpec) -> Result<EngineReport> {
    spec.ensure_valid()?;
    let q = spec.qubit.as_ref().ok_or(Error::WrongMode("qubit"))?;
    let p = q.p_ground;
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::EngineExcluded(p));
    }
    let t_q = 1.0 / beta_q(q)?;
    let t_b = 1.0 / spec.beta;
    let w_bar = mean_work(spec)?;
    let delta_s = entropy_production_with(spec, w_bar)?;
    classify(w_bar, delta_s, t_b, t_q, mode_tol(&spec.source))
}
