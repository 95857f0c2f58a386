//! Two-dimensional parameter sweeps, 1-D line scans, zero-level contours of
//! the swept field and the analytic `β = β_Q` marker line.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::contour::{bisect_edge, marching_squares, Lattice, Vertex};
use crate::model::{beta_q, SystemSpec};
use crate::par::Execution;
use crate::thermo::{engine_report, Mode};
use crate::workstats::{jarzynski_deficit, mean_work};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    P,
    Beta,
    OmegaGap,
    Alpha,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::P => "p",
            Param::Beta => "beta",
            Param::OmegaGap => "omega_gap",
            Param::Alpha => "alpha",
        }
    }

    fn needs_qubit(self) -> bool {
        matches!(self, Param::P | Param::OmegaGap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub scale: Scale,
}

pub const MIN_RESOLUTION: usize = 16;
pub const DEFAULT_RESOLUTION: usize = 64;

impl Axis {
    /// Parameter value at fractional lattice index `idx ∈ [0, n−1]`.
    pub fn value(&self, idx: f64) -> f64 {
        let u = idx / (self.n - 1) as f64;
        if u == 0.0 {
            return self.min;
        }
        if u == 1.0 {
            return self.max;
        }
        match self.scale {
            Scale::Linear => self.min + (self.max - self.min) * u,
            Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * u).exp(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.value(k as f64)).collect()
    }

    /// Fractional lattice index of a parameter value.
    pub fn index_of(&self, value: f64) -> f64 {
        let u = match self.scale {
            Scale::Linear => (value - self.min) / (self.max - self.min),
            Scale::Log => (value.ln() - self.min.ln()) / (self.max.ln() - self.min.ln()),
        };
        u * (self.n - 1) as f64
    }

    fn check(&self) -> Result<()> {
        let name = self.param.name();
        if self.n < MIN_RESOLUTION {
            return Err(Error::InvalidPlan(format!("{name} axis needs at least {MIN_RESOLUTION} points")));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(Error::InvalidPlan(format!("{name} axis range must satisfy min < max")));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(Error::InvalidPlan(format!("log-scale {name} axis must be strictly positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub x: Axis,
    pub y: Axis,
    pub fixed: SystemSpec,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.x.check()?;
        self.y.check()?;
        if self.x.param == self.y.param {
            return Err(Error::InvalidPlan("axis parameters must differ".into()));
        }
        if (self.x.param.needs_qubit() || self.y.param.needs_qubit()) && self.fixed.qubit.is_none() {
            return Err(Error::InvalidPlan("p and omega_gap axes need a qubit in the fixed spec".into()));
        }
        Ok(())
    }

    pub fn spec_at(&self, x: f64, y: f64) -> SystemSpec {
        apply(apply(self.fixed, self.x.param, x), self.y.param, y)
    }
}

fn apply(mut spec: SystemSpec, param: Param, value: f64) -> SystemSpec {
    match param {
        Param::P => {
            if let Some(q) = spec.qubit.as_mut() {
                q.p_ground = value;
            }
        }
        Param::OmegaGap => {
            if let Some(q) = spec.qubit.as_mut() {
                q.omega_gap = value;
            }
        }
        Param::Beta => spec.beta = value,
        Param::Alpha => spec.spectrum.alpha = value,
    }
    spec
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Mean extracted work `−W̄`.
    WExt,
    /// `χ⁽²⁾(iβ)`.
    ChiIBeta,
    /// Entropy production `βW̄ + ln χ⁽²⁾(iβ)`.
    DeltaS,
    /// Efficiency or COP; cells in other modes are missing.
    FigureOfMerit,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::WExt => "w_ext",
            Quantity::ChiIBeta => "chi_i_beta",
            Quantity::DeltaS => "delta_s",
            Quantity::FigureOfMerit => "figure_of_merit",
        }
    }
}

/// One evaluated cell: the requested value (if defined), the field whose
/// zero set is contoured, and the engine mode when applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub value: Option<f64>,
    pub level: f64,
    pub mode: Option<Mode>,
}

/// Evaluates `quantity` at one spec. The contoured level is `W_ext` for
/// work and engine quantities, `χ⁽²⁾(iβ) − 1` and `ΔS` otherwise.
pub fn evaluate(spec: &SystemSpec, quantity: Quantity) -> Result<Cell> {
    match quantity {
        Quantity::WExt => {
            let w = -mean_work(spec)?;
            Ok(Cell { value: Some(w), level: w, mode: None })
        }
        Quantity::ChiIBeta => {
            let d = jarzynski_deficit(spec)?;
            if 1.0 + d <= 0.0 {
                return Err(Error::PerturbativeBreakdown(1.0 + d));
            }
            Ok(Cell { value: Some(1.0 + d), level: d, mode: None })
        }
        Quantity::DeltaS => {
            let d = jarzynski_deficit(spec)?;
            if 1.0 + d <= 0.0 {
                return Err(Error::PerturbativeBreakdown(1.0 + d));
            }
            let ds = spec.beta * mean_work(spec)? + d.ln_1p();
            Ok(Cell { value: Some(ds), level: ds, mode: None })
        }
        Quantity::FigureOfMerit => {
            let e = engine_report(spec)?;
            Ok(Cell { value: e.figure_of_merit, level: -e.w_bar, mode: Some(e.mode) })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub ix: usize,
    pub iy: usize,
    pub error: String,
}

pub type Curve = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub quantity: Quantity,
    /// Row-major `values[iy * nx + ix]`; `None` for failed or undefined cells.
    pub values: Vec<Option<f64>>,
    /// Field whose zero set forms `zero_contour`.
    pub level: Vec<Option<f64>>,
    pub modes: Vec<Option<Mode>>,
    pub failures: Vec<CellFailure>,
    /// Lattice-coordinate polylines of `level = 0`.
    pub contour_lattice: Vec<Vec<Vertex>>,
    /// The same polylines in parameter coordinates.
    pub zero_contour: Vec<Curve>,
    /// `β = β_Q` polylines in parameter coordinates (empty if not applicable).
    pub marker_contour: Vec<Curve>,
    pub elapsed: Duration,
}

impl SweepResult {
    pub fn nx(&self) -> usize {
        self.plan.x.n
    }

    pub fn ny(&self) -> usize {
        self.plan.y.n
    }

    pub fn value(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.nx() + ix]
    }

    pub fn level_at(&self, ix: usize, iy: usize) -> Option<f64> {
        self.level[iy * self.nx() + ix]
    }

    /// Maps lattice coordinates to parameter coordinates.
    pub fn to_params(&self, point: (f64, f64)) -> (f64, f64) {
        (self.plan.x.value(point.0), self.plan.y.value(point.1))
    }

    /// Maps parameter coordinates to lattice coordinates.
    pub fn to_lattice(&self, point: (f64, f64)) -> (f64, f64) {
        (self.plan.x.index_of(point.0), self.plan.y.index_of(point.1))
    }

    /// Refines every contour vertex by bisection of the underlying field
    /// along its lattice edge, to `tol` in lattice units.
    pub fn refine_contour(&mut self, tol: f64, exec: Execution) {
        let plan = self.plan;
        let quantity = self.quantity;
        let refined: Vec<Vec<Vertex>> = self
            .contour_lattice
            .iter()
            .map(|line| {
                exec.map(line.len(), |k| {
                    let mut v = line[k];
                    let ((i0, j0), (i1, j1)) = v.edge.nodes();
                    let field = |t: f64| {
                        let x = plan.x.value(i0 as f64 + t * (i1 - i0) as f64);
                        let y = plan.y.value(j0 as f64 + t * (j1 - j0) as f64);
                        evaluate(&plan.spec_at(x, y), quantity).ok().map(|c| c.level)
                    };
                    bisect_edge(&mut v, field, tol);
                    v
                })
            })
            .collect();
        self.zero_contour =
            refined.iter().map(|line| line.iter().map(|v| self.to_params(v.point())).collect()).collect();
        self.contour_lattice = refined;
    }
}

/// Largest tolerated fraction of failed cells.
pub const MAX_FAILED_FRACTION: f64 = 0.01;

pub fn run_sweep(plan: &SweepPlan, quantity: Quantity, exec: Execution) -> Result<SweepResult> {
    plan.validate()?;
    let start = Instant::now();
    let (nx, ny) = (plan.x.n, plan.y.n);
    let (xs, ys) = (plan.x.values(), plan.y.values());
    let cells = exec.map(nx * ny, |k| evaluate(&plan.spec_at(xs[k % nx], ys[k / nx]), quantity));

    let mut values = Vec::with_capacity(nx * ny);
    let mut level = Vec::with_capacity(nx * ny);
    let mut modes = Vec::with_capacity(nx * ny);
    let mut failures = Vec::new();
    for (k, cell) in cells.into_iter().enumerate() {
        match cell {
            Ok(c) => {
                values.push(c.value);
                level.push(Some(c.level));
                modes.push(c.mode);
            }
            Err(e) => {
                failures.push(CellFailure { ix: k % nx, iy: k / nx, error: e.to_string() });
                values.push(None);
                level.push(None);
                modes.push(None);
            }
        }
    }
    if failures.len() as f64 > MAX_FAILED_FRACTION * (nx * ny) as f64 {
        let first = &failures[0];
        return Err(Error::SweepFailed {
            failed: failures.len(),
            total: nx * ny,
            first: format!("({}, {}): {}", first.ix, first.iy, first.error),
        });
    }

    let centre = |i: usize, j: usize| -> Option<f64> {
        let spec = plan.spec_at(plan.x.value(i as f64 + 0.5), plan.y.value(j as f64 + 0.5));
        evaluate(&spec, quantity).ok().map(|c| c.level)
    };
    let lines = marching_squares(&Lattice { nx, ny, values: &level }, Some(&centre));
    let contour_lattice: Vec<Vec<Vertex>> = lines.into_iter().map(|l| l.vertices).collect();
    let zero_contour = contour_lattice
        .iter()
        .map(|line| {
            line.iter()
                .map(|v| {
                    let (x, y) = v.point();
                    (plan.x.value(x), plan.y.value(y))
                })
                .collect()
        })
        .collect();

    Ok(SweepResult {
        plan: *plan,
        quantity,
        values,
        level,
        modes,
        failures,
        contour_lattice,
        zero_contour,
        marker_contour: marker_contour(plan),
        elapsed: start.elapsed(),
    })
}

/// Solves `β = β_Q(p, Ω)` for `unknown` given the other two.
fn solve_marker(unknown: Param, p: f64, beta: f64, omega: f64) -> Option<f64> {
    let v = match unknown {
        Param::Beta => (p.ln() - (-p).ln_1p()) / omega,
        Param::P => 1.0 / (1.0 + (-beta * omega).exp()),
        Param::OmegaGap => (p.ln() - (-p).ln_1p()) / beta,
        Param::Alpha => return None,
    };
    v.is_finite().then_some(v)
}

/// The curve `β = β_Q` across the plan window, traced along one axis and
/// solved analytically for the other; split where it leaves the window.
pub fn marker_contour(plan: &SweepPlan) -> Vec<Curve> {
    let Some(q) = plan.fixed.qubit else { return Vec::new() };
    let (free, solved, swap) =
        if plan.y.param != Param::Alpha { (plan.x, plan.y, false) } else { (plan.y, plan.x, true) };
    if solved.param == Param::Alpha {
        return Vec::new();
    }
    let samples = 8 * free.n;
    let mut curves = Vec::new();
    let mut current: Curve = Vec::new();
    for k in 0..samples {
        let t = k as f64 * (free.n - 1) as f64 / (samples - 1) as f64;
        let fv = free.value(t);
        let mut spec = apply(plan.fixed, free.param, fv);
        if free.param == Param::Alpha {
            spec = plan.fixed;
        }
        let (p, beta, omega) = {
            let qq = spec.qubit.unwrap_or(q);
            (qq.p_ground, spec.beta, qq.omega_gap)
        };
        let inside =
            solve_marker(solved.param, p, beta, omega).filter(|v| *v >= solved.min && *v <= solved.max);
        match inside {
            Some(sv) => current.push(if swap { (sv, fv) } else { (fv, sv) }),
            None => {
                if current.len() > 1 {
                    curves.push(std::mem::take(&mut current));
                } else {
                    current.clear();
                }
            }
        }
    }
    if current.len() > 1 {
        curves.push(current);
    }
    curves
}

/// `β_Q` for a spec with a qubit, or `None` when undefined.
pub fn spec_beta_q(spec: &SystemSpec) -> Option<f64> {
    spec.qubit.as_ref().and_then(|q| beta_q(q).ok())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineScan {
    pub param: Param,
    pub values: Vec<f64>,
    pub results: Vec<Option<f64>>,
    /// For `p` scans: largest `|v(p) − p·v(1) − (1−p)·v(0)|` relative to `max(|v(0)|, |v(1)|)`.
    pub affinity_residual: Option<f64>,
}

pub fn line_scan(
    param: Param,
    values: &[f64],
    fixed: &SystemSpec,
    quantity: Quantity,
    exec: Execution,
) -> Result<LineScan> {
    if param.needs_qubit() && fixed.qubit.is_none() {
        return Err(Error::InvalidPlan(format!("{} scan needs a qubit", param.name())));
    }
    let results: Vec<Option<f64>> = exec
        .map(values.len(), |k| evaluate(&apply(*fixed, param, values[k]), quantity))
        .into_iter()
        .map(|r| r.ok().and_then(|c| c.value))
        .collect();
    let affinity_residual = if param == Param::P && matches!(quantity, Quantity::WExt | Quantity::ChiIBeta) {
        let end = |p: f64| evaluate(&apply(*fixed, param, p), quantity).map(|c| c.value.unwrap_or(f64::NAN));
        let (v0, v1) = (end(0.0)?, end(1.0)?);
        let scale = v0.abs().max(v1.abs());
        let worst = values
            .iter()
            .zip(&results)
            .filter_map(|(&p, r)| r.map(|r| (r - (p * v1 + (1.0 - p) * v0)).abs()))
            .fold(0.0, f64::max);
        let residual = if scale > 0.0 { worst / scale } else { worst };
        if residual > 1e-12 {
            log::warn!("p scan deviates from affinity by {residual:e}");
        }
        Some(residual)
    } else {
        None
    };
    Ok(LineScan { param, values: values.to_vec(), results, affinity_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coupling;

    fn spin_plan(n: usize) -> SweepPlan {
        SweepPlan {
            x: Axis { param: Param::P, min: 0.0, max: 1.0, n, scale: Scale::Linear },
            y: Axis { param: Param::Beta, min: 0.1, max: 100.0, n, scale: Scale::Log },
            fixed: SystemSpec::pure_bath(5.0, 1.0).with_qubit(Coupling::Spin, 0.05, 1.0),
        }
    }

    #[test]
    fn axis_mapping_round_trips() {
        let a = Axis { param: Param::Beta, min: 0.1, max: 100.0, n: 64, scale: Scale::Log };
        for k in [0.0, 3.5, 63.0] {
            assert!((a.index_of(a.value(k)) - k).abs() < 1e-12);
        }
        let v = a.values();
        assert_eq!((v[0], v[63]), (0.1, 100.0));
        assert!((v[21] / v[20] - v[1] / v[0]).abs() < 1e-12);
    }

    #[test]
    fn invalid_plans() {
        let mut plan = spin_plan(16);
        plan.y.param = Param::P;
        assert!(plan.validate().is_err());
        let mut plan = spin_plan(8);
        assert!(plan.validate().is_err());
        plan = spin_plan(16);
        plan.y.min = 0.0;
        assert!(plan.validate().is_err());
        plan = spin_plan(16);
        plan.fixed.qubit = None;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn sweep_is_deterministic_and_schedule_independent() {
        let plan = spin_plan(16);
        let a = run_sweep(&plan, Quantity::WExt, Execution::Parallel).unwrap();
        let b = run_sweep(&plan, Quantity::WExt, Execution::Parallel).unwrap();
        let c = run_sweep(&plan, Quantity::WExt, Execution::Sequential).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values, c.values);
        assert_eq!(a.zero_contour, c.zero_contour);
        assert!(a.failures.is_empty());
    }

    #[test]
    fn spin_sign_pattern() {
        let r = run_sweep(&spin_plan(16), Quantity::WExt, Execution::Parallel).unwrap();
        let beta_one = r.plan.y.index_of(1.0).round() as usize;
        assert!(r.value(15, beta_one).unwrap() > 0.0);
        assert!(r.value(0, beta_one).unwrap() < 0.0);
        assert!(!r.zero_contour.is_empty());
        assert!(!r.marker_contour.is_empty());
        // Every contour vertex sits on an edge whose end values change sign.
        for line in &r.contour_lattice {
            for v in line {
                let ((i0, j0), (i1, j1)) = v.edge.nodes();
                let (a, b) = (r.level_at(i0, j0).unwrap(), r.level_at(i1, j1).unwrap());
                assert!((a > 0.0) != (b > 0.0));
            }
        }
    }

    #[test]
    fn affinity_along_population_axis() {
        let plan = spin_plan(16);
        let r = run_sweep(&plan, Quantity::WExt, Execution::Parallel).unwrap();
        let ps = plan.x.values();
        for iy in 0..16 {
            let (v0, v1) = (r.value(0, iy).unwrap(), r.value(15, iy).unwrap());
            let scale = v0.abs().max(v1.abs());
            for (ix, &p) in ps.iter().enumerate() {
                let v = r.value(ix, iy).unwrap();
                assert!((v - (p * v1 + (1.0 - p) * v0)).abs() <= 1e-12 * scale, "iy {iy} ix {ix}");
            }
        }
    }

    #[test]
    fn marker_follows_beta_q() {
        let plan = spin_plan(16);
        let curves = marker_contour(&plan);
        for c in &curves {
            for &(p, b) in c {
                let bq = (p / (1.0 - p)).ln() / 0.05;
                assert!((b - bq).abs() <= 1e-9 * bq.abs());
            }
        }
        let mut other = plan;
        other.x = Axis { param: Param::Beta, min: 0.1, max: 100.0, n: 16, scale: Scale::Log };
        other.y = Axis { param: Param::OmegaGap, min: 0.01, max: 5.0, n: 16, scale: Scale::Log };
        other.fixed.qubit.as_mut().unwrap().p_ground = 0.95;
        for c in marker_contour(&other) {
            for &(b, om) in &c {
                assert!((b * om - 19f64.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn refinement_lands_on_zero() {
        let mut r = run_sweep(&spin_plan(16), Quantity::WExt, Execution::Parallel).unwrap();
        r.refine_contour(1e-8, Execution::Parallel);
        let line = &r.zero_contour[0];
        let &(p, beta) = &line[line.len() / 2];
        let spec = r.plan.spec_at(p, beta);
        let w = evaluate(&spec, Quantity::WExt).unwrap().level;
        let scale = r.level.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(w.abs() < 1e-6 * scale);
    }

    #[test]
    fn population_scan_is_affine() {
        let fixed = SystemSpec::pure_bath(5.0, 20.0).with_qubit(Coupling::Spin, 0.05, 1.0);
        let ps: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let scan = line_scan(Param::P, &ps, &fixed, Quantity::WExt, Execution::Parallel).unwrap();
        assert!(scan.affinity_residual.unwrap() <= 1e-12);
    }

    #[test]
    fn failed_cells_are_missing() {
        let mut plan = spin_plan(16);
        plan.x = Axis { param: Param::P, min: 0.5 + 1e-6, max: 1.0 - 1e-6, n: 16, scale: Scale::Linear };
        let r = run_sweep(&plan, Quantity::FigureOfMerit, Execution::Parallel).unwrap();
        assert_eq!(r.values.len(), 256);
        assert!(r.modes.iter().all(Option::is_some));
        assert!(r.values.iter().any(Option::is_none) || r.values.iter().all(Option::is_some));
    }
}
