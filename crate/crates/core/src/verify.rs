//! Built-in verification suite: the twelve release checks, shared by the
//! acceptance test harness and the `verify` CLI subcommand.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contour::polylines_intersect;
use crate::green::{green_pair, GreenPair};
use crate::model::{Coupling, DrivenSource, QuadRule, SystemSpec};
use crate::par::Execution;
use crate::quad::InversionPlan;
use crate::sweep::{
    evaluate, run_sweep, spec_beta_q, Axis, Param, Quantity, Scale, SweepPlan, DEFAULT_RESOLUTION,
};
use crate::thermo::{engine_report, mode_tol, Mode, POPULATION_INSET};
use crate::workstats::{
    chi2_minus_one, crooks_ratio, default_w_grid, invert_spectral, jarzynski_deficit_for, mean_work, w_ext2,
    wdf2, wdf2_density, Family, WorkDistribution, DEFAULT_W_HALF_POINTS,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value over its threshold (pass when `≤ 1`), if the check is quantitative.
    pub margin: Option<f64>,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} [{:>2}] {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, result: Result<(bool, Option<f64>, String)>) -> CheckOutcome {
    match result {
        Ok((passed, margin, detail)) => CheckOutcome { id, name, passed, margin, detail },
        Err(e) => CheckOutcome { id, name, passed: false, margin: None, detail: format!("error: {e}") },
    }
}

pub const ALPHAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];
pub const BETAS: [f64; 4] = [0.1, 1.0, 10.0, 100.0];

fn bath_grid() -> impl Iterator<Item = SystemSpec> {
    ALPHAS.into_iter().flat_map(|a| BETAS.into_iter().map(move |b| SystemSpec::pure_bath(a, b)))
}

/// `|χ⁽²⁾(iβ) − 1|` for an arbitrary Green pair.
pub fn jarzynski_residual(pair: &GreenPair, source: &DrivenSource) -> Result<f64> {
    jarzynski_deficit_for(pair, source, QuadRule::AdaptiveGK).map(f64::abs)
}

pub const JARZYNSKI_TOL: f64 = 1e-8;

/// Pure-bath Jarzynski equality at second and all orders.
pub fn check_jarzynski() -> CheckOutcome {
    let run = || {
        let (mut worst2, mut worst_all) = (0.0f64, 0.0f64);
        for spec in bath_grid() {
            let d = jarzynski_deficit_for(&green_pair(&spec)?, &spec.source, QuadRule::AdaptiveGK)?;
            worst2 = worst2.max(d.abs());
            worst_all = worst_all.max(d.exp_m1().abs());
        }
        let worst = worst2.max(worst_all);
        Ok((
            worst <= JARZYNSKI_TOL,
            Some(worst / JARZYNSKI_TOL),
            format!("max |chi2(i beta) - 1| = {worst2:.2e}, max |chi(i beta) - 1| = {worst_all:.2e}"),
        ))
    };
    outcome(1, "pure-bath Jarzynski equality", run())
}

/// Pure-bath Crooks ratio on the default symmetric work grid.
pub fn check_crooks() -> CheckOutcome {
    const TOL: f64 = 1e-6;
    let run = || {
        let mut worst = 0.0f64;
        for spec in bath_grid() {
            let dist = continuous_density(&spec, &default_w_grid(&spec, DEFAULT_W_HALF_POINTS))?;
            worst = worst.max(crooks_ratio(&dist, spec.beta)?.max_thermal_deviation(1e-12));
        }
        Ok((
            worst <= TOL,
            Some(worst / TOL),
            format!("max relative deviation from exp(-beta W) = {worst:.2e}"),
        ))
    };
    outcome(2, "pure-bath Crooks ratio", run())
}

/// Second-order density without the atom, which is undefined where the
/// drive-weighted mass exceeds 2; the continuous part stays meaningful there.
fn continuous_density(spec: &SystemSpec, w_grid: &[f64]) -> Result<WorkDistribution> {
    let pair = green_pair(spec)?;
    Ok(WorkDistribution {
        atom_weight: f64::NAN,
        w_grid: w_grid.to_vec(),
        density: w_grid.iter().map(|&w| wdf2_density(&pair, &spec.source, w)).collect(),
        clipped: 0,
        imag_residue: 0.0,
    })
}

fn mass(spec: &SystemSpec) -> Result<f64> {
    Ok(Family::Mass.integrate(&green_pair(spec)?, &spec.source, QuadRule::AdaptiveGK)?.value)
}

/// No positive mean work extraction from the pure bath.
pub fn check_passivity() -> CheckOutcome {
    const TOL: f64 = 1e-14;
    let run = || {
        let mut worst = f64::NEG_INFINITY;
        for spec in bath_grid() {
            worst = worst.max(w_ext2(&spec)?);
        }
        Ok((worst <= TOL, None, format!("max W_ext = {worst:.3e}")))
    };
    outcome(3, "passivity of the pure bath", run())
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Spin coupling with a gapless qubit reproduces the pure bath.
pub fn check_gapless() -> CheckOutcome {
    const TOL: f64 = 1e-12;
    let run = || {
        let mut worst = 0.0f64;
        for bath in bath_grid() {
            let gapless = bath.with_qubit(Coupling::Spin, 0.0, 0.3);
            let (a, b) = (green_pair(&bath)?, green_pair(&gapless)?);
            for k in -200..=200 {
                let w = k as f64 * 2e-4;
                if w == 0.0 {
                    continue;
                }
                worst = worst.max(rel(a.g_mp(w), b.g_mp(w))).max(rel(a.g_pm(w), b.g_pm(w)));
            }
            let grid = default_w_grid(&bath, 256);
            let (pa, pb) = (continuous_density(&bath, &grid)?, continuous_density(&gapless, &grid)?);
            let peak = pa.peak();
            for (x, y) in pa.density.iter().zip(&pb.density) {
                worst = worst.max((x - y).abs() / peak);
            }
            // The atom is 1 − mass/2; compare the mass so strong-drive points still count.
            worst = worst.max(rel(mass(&bath)?, mass(&gapless)?));
            worst = worst.max(rel(w_ext2(&bath)?, w_ext2(&gapless)?));
        }
        Ok((worst <= TOL, Some(worst / TOL), format!("max relative mismatch = {worst:.2e}")))
    };
    outcome(4, "gapless-qubit reduction", run())
}

pub const AFFINITY_TOL: f64 = 1e-12;
pub const HIGH_TEMPERATURE_BETA: f64 = 1e-6;
pub const HIGH_TEMPERATURE_RATIO: f64 = 1e-10;

/// `p = ½` averaging of the density and the high-temperature cancellation of `W̄`.
pub fn check_population_average() -> CheckOutcome {
    let run = || {
        let base = SystemSpec::pure_bath(5.0, 1.0);
        let at = |p: f64| base.with_qubit(Coupling::Spin, 0.05, p);
        let grid = default_w_grid(&base, DEFAULT_W_HALF_POINTS);
        let (half, p0, p1) = (wdf2(&at(0.5), &grid)?, wdf2(&at(0.0), &grid)?, wdf2(&at(1.0), &grid)?);
        let peak = half.peak();
        let avg_dev = half
            .density
            .iter()
            .zip(p0.density.iter().zip(&p1.density))
            .map(|(h, (a, b))| (h - 0.5 * (a + b)).abs() / peak)
            .fold(0.0, f64::max);

        let hot = SystemSpec { beta: HIGH_TEMPERATURE_BETA, ..base };
        let w_half = mean_work(&hot.with_qubit(Coupling::Spin, 0.05, 0.5))?;
        let w_one = mean_work(&hot.with_qubit(Coupling::Spin, 0.05, 1.0))?;
        let ratio = (w_half / w_one).abs();
        let margin = (avg_dev / AFFINITY_TOL).max(ratio / HIGH_TEMPERATURE_RATIO);
        Ok((
            avg_dev <= AFFINITY_TOL && ratio <= HIGH_TEMPERATURE_RATIO,
            Some(margin),
            format!(
                "max |P(1/2) - avg| / peak = {avg_dev:.2e}; |W(p=1/2)| / |W(p=1)| at beta = {HIGH_TEMPERATURE_BETA:e} is {ratio:.2e} (threshold {HIGH_TEMPERATURE_RATIO:e})"
            ),
        ))
    };
    outcome(5, "population affinity and p = 1/2 averaging", run())
}

pub const QUARTIC_RANGE: (f64, f64) = (14.0, 18.0);

/// All-order minus second-order density shrinks like `λ0⁴`.
pub fn check_quartic_scaling(exec: Execution) -> CheckOutcome {
    let run = || {
        let gap = |lambda0: f64| -> Result<f64> {
            let spec = SystemSpec::pure_bath(5.0, 1.0).with_lambda0(lambda0);
            let inv = invert_spectral(&spec, &InversionPlan::for_source(&spec.source, 0.0), exec)?;
            let full = inv.nonperturbative.ok_or(Error::WrongMode("pure bath"))?;
            Ok(full
                .density
                .iter()
                .zip(&inv.perturbative.density)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
        };
        let lambda0 = DrivenSource::default().lambda0;
        let factor = gap(lambda0)? / gap(0.5 * lambda0)?;
        Ok((
            (QUARTIC_RANGE.0..=QUARTIC_RANGE.1).contains(&factor),
            None,
            format!("max|P - P2| shrinks by {factor:.3} when halving lambda0"),
        ))
    };
    outcome(6, "quartic scaling of the nonperturbative correction", run())
}

pub const MOMENT_STEP: f64 = 1e-4;
pub const MOMENT_TOL: f64 = 1e-6;
pub const MOMENT_SEED: u64 = 0x5eed;

/// Deterministic random specs covering every coupling.
pub fn random_specs(n: usize, seed: u64) -> Vec<SystemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let alpha = rng.random_range(0.5..6.0);
            let beta = 10f64.powf(rng.random_range(-1.0..1.5));
            let bath = SystemSpec::pure_bath(alpha, beta);
            match rng.random_range(0..4) {
                0 => bath,
                k => {
                    let omega = 10f64.powf(rng.random_range(-2.0..0.0));
                    bath.with_qubit(Coupling::ALL[k - 1], omega, rng.random_range(0.0..=1.0))
                }
            }
        })
        .collect()
}

/// Richardson-extrapolated `−i ∂_v χ⁽²⁾(0)`, which equals the mean work `W̄ = −W_ext`.
pub fn mean_work_from_wcf(spec: &SystemSpec, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> {
        let up = chi2_minus_one(h, spec)?;
        let down = chi2_minus_one(-h, spec)?;
        Ok((up - down).im / (2.0 * h))
    };
    Ok((4.0 * d(0.5 * h)? - d(h)?) / 3.0)
}

pub fn check_moments() -> CheckOutcome {
    let run = || {
        let mut worst = 0.0f64;
        for spec in random_specs(10, MOMENT_SEED) {
            let fd = mean_work_from_wcf(&spec, MOMENT_STEP)?;
            worst = worst.max(rel(-fd, w_ext2(&spec)?));
        }
        Ok((worst <= MOMENT_TOL, Some(worst / MOMENT_TOL), format!("max relative mismatch = {worst:.2e}")))
    };
    outcome(7, "first moment from the characteristic function", run())
}

pub fn check_modal_structure() -> CheckOutcome {
    let run = || {
        let mut found = Vec::new();
        let mut passed = true;
        for (alpha, expected) in [(0.5, 1), (1.0, 1), (2.0, 2), (5.0, 2)] {
            let spec = SystemSpec::pure_bath(alpha, 1.0);
            let n = wdf2(&spec, &default_w_grid(&spec, DEFAULT_W_HALF_POINTS))?.local_maxima();
            passed &= n == expected;
            found.push(format!("alpha={alpha}: {n}"));
        }
        Ok((passed, None, format!("local maxima {}", found.join(", "))))
    };
    outcome(8, "modal structure of the pure-bath density", run())
}

/// Spin sign map over `(p, β)` at `α = 5`, `Ω = 0.05`.
pub fn sign_map_plan(n: usize) -> SweepPlan {
    SweepPlan {
        x: Axis { param: Param::P, min: 0.0, max: 1.0, n, scale: Scale::Linear },
        y: Axis { param: Param::Beta, min: 0.1, max: 100.0, n, scale: Scale::Log },
        fixed: SystemSpec::pure_bath(5.0, 1.0).with_qubit(Coupling::Spin, 0.05, 1.0),
    }
}

pub fn check_sign_map(exec: Execution) -> CheckOutcome {
    let run = || {
        let plan = sign_map_plan(DEFAULT_RESOLUTION);
        let at = |p: f64| evaluate(&plan.spec_at(p, 1.0), Quantity::WExt).map(|c| c.level);
        let (w_one, w_zero) = (at(1.0)?, at(0.0)?);
        let r = run_sweep(&plan, Quantity::WExt, exec)?;
        let lattice = |c: &Vec<(f64, f64)>| c.iter().map(|&q| r.to_lattice(q)).collect::<Vec<_>>();
        let zero: Vec<_> = r.zero_contour.iter().map(lattice).collect();
        let marker: Vec<_> = r.marker_contour.iter().map(lattice).collect();
        let mut crossing = false;
        for a in &zero {
            for b in &marker {
                crossing |= polylines_intersect(a, b);
            }
        }
        // The marker is the graph β = β_Q(p); measure the offset along β in
        // lattice cells. Euclidean lattice distance is not meaningful here
        // because both lines steepen towards p = ½.
        let distance = r
            .zero_contour
            .iter()
            .flatten()
            .map(|&(p, b)| match spec_beta_q(&plan.spec_at(p, b)) {
                Some(bq) if bq > 0.0 => (plan.y.index_of(b) - plan.y.index_of(bq)).abs(),
                _ => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min);
        let separated = !crossing && distance > 1.0;
        let w_on_marker = r
            .marker_contour
            .iter()
            .flatten()
            .map(|&(p, b)| mean_work(&plan.spec_at(p, b)).map(f64::abs))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let distinct = w_on_marker > 10.0 * mode_tol(&plan.fixed.source);
        let passed =
            w_one > 0.0 && w_zero < 0.0 && !zero.is_empty() && !marker.is_empty() && separated && distinct;
        Ok((
            passed,
            None,
            format!(
                "W_ext(p=1, beta=1) = {w_one:.3e}, W_ext(p=0, beta=1) = {w_zero:.3e}, {} zero contour(s), min offset from beta = beta_Q along beta is {distance:.2} cells, crossing = {crossing}",
                zero.len()
            ),
        ))
    };
    outcome(9, "spin sign-map topology", run())
}

pub fn check_statistics_ordering() -> CheckOutcome {
    let run = || {
        let base = SystemSpec::pure_bath(5.0, 1.0);
        let grid = default_w_grid(&base, DEFAULT_W_HALF_POINTS);
        let peak = |c: Coupling| wdf2(&base.with_qubit(c, 0.05, 1.0), &grid).map(|d| d.peak());
        let (spin, fermion, topo) =
            (peak(Coupling::Spin)?, peak(Coupling::Fermion)?, peak(Coupling::Topological)?);
        let (rf, rt) = (spin / fermion, spin / topo);
        Ok((
            rf > 10.0 && rt > 10.0,
            None,
            format!("spin peak / fermion peak = {rf:.1}, spin peak / topological peak = {rt:.1}"),
        ))
    };
    outcome(10, "statistics ordering of density peaks", run())
}

/// Engine grid over `(p, β)` restricted to a positive qubit temperature.
pub fn engine_plan(coupling: Coupling, n: usize) -> SweepPlan {
    SweepPlan {
        x: Axis {
            param: Param::P,
            min: 0.5 + POPULATION_INSET,
            max: 1.0 - POPULATION_INSET,
            n,
            scale: Scale::Linear,
        },
        y: Axis { param: Param::Beta, min: 0.1, max: 100.0, n, scale: Scale::Log },
        fixed: SystemSpec::pure_bath(5.0, 1.0).with_qubit(coupling, 0.05, 0.75),
    }
}

pub const ENGINE_TOL: f64 = 1e-10;

pub fn check_engine_bounds(exec: Execution) -> CheckOutcome {
    let run = || {
        let mut violations = Vec::new();
        let (mut engines, mut fridges, mut other, mut degenerate_t) = (0, 0, 0, 0);
        let mut min_ds = f64::INFINITY;
        for coupling in Coupling::ALL {
            let plan = engine_plan(coupling, DEFAULT_RESOLUTION);
            let (xs, ys) = (plan.x.values(), plan.y.values());
            let nx = xs.len();
            let reports = exec.map(nx * ys.len(), |k| engine_report(&plan.spec_at(xs[k % nx], ys[k / nx])));
            for (k, report) in reports.into_iter().enumerate() {
                let e = match report {
                    Ok(e) => e,
                    Err(Error::DegenerateTemperatures) => {
                        degenerate_t += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let at = || format!("{} p={:.6} beta={:.4}", coupling.name(), xs[k % nx], ys[k / nx]);
                min_ds = min_ds.min(e.delta_s);
                if e.delta_s < -ENGINE_TOL {
                    violations.push(format!("{}: delta_s = {:e}", at(), e.delta_s));
                }
                let scale = e.q_b.abs().max(e.q_q.abs()).max(e.w_bar.abs()).max(f64::MIN_POSITIVE);
                if (e.q_b + e.q_q - e.w_bar).abs() > ENGINE_TOL * scale {
                    violations.push(format!("{}: first law off", at()));
                }
                match (e.mode, e.figure_of_merit) {
                    (Mode::HeatEngine, Some(eta)) => {
                        engines += 1;
                        if !(eta >= 0.0 && eta <= 1.0 - e.r + ENGINE_TOL) {
                            violations.push(format!("{}: eta = {eta}", at()));
                        }
                    }
                    (Mode::Refrigerator, Some(cop)) => {
                        fridges += 1;
                        if !(cop >= 0.0 && cop <= e.r / (1.0 - e.r) + ENGINE_TOL) {
                            violations.push(format!("{}: COP = {cop}", at()));
                        }
                    }
                    _ => other += 1,
                }
            }
        }
        let detail = format!(
            "{engines} heat-engine, {fridges} refrigerator, {other} other, {degenerate_t} T_B = T_Q cells; min delta_s = {min_ds:.2e}; {} violation(s){}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        );
        Ok((violations.is_empty(), None, detail))
    };
    outcome(11, "engine and refrigerator bounds", run())
}

pub const RULE_AGREEMENT_TOL: f64 = 1e-8;
pub const WINDOW_TOL: f64 = 1e-12;

fn oracle_specs() -> Vec<SystemSpec> {
    let mut specs = Vec::new();
    for alpha in [0.5, 1.0, 5.0] {
        for beta in [0.1, 1.0, 10.0] {
            let bath = SystemSpec::pure_bath(alpha, beta);
            specs.push(bath);
            for c in Coupling::ALL {
                specs.push(bath.with_qubit(c, 0.05, 0.8));
            }
        }
    }
    specs
}

fn families() -> Vec<Family> {
    let mut f = vec![Family::Mass, Family::FirstMoment, Family::JarzynskiDeficit];
    for v in [1.0, 50.0, 400.0] {
        f.push(Family::WcfReal(v));
        f.push(Family::WcfImag(v));
    }
    f
}

/// Worst `(rule disagreement, window sensitivity)`, each relative to `∫_λ |f|`.
pub fn quadrature_discrepancy(pair: &GreenPair, source: &DrivenSource, family: Family) -> Result<(f64, f64)> {
    let gk = family.integrate(pair, source, QuadRule::AdaptiveGK)?;
    let trap = family.integrate(pair, source, QuadRule::Trapezoid)?;
    let wide_grid = family.grid(pair, source, QuadRule::AdaptiveGK);
    let wide = family.integrate_on(pair, source, &wide_grid.with_omega_max(2.0 * wide_grid.omega_max))?;
    let l1 = gk.l1.max(f64::MIN_POSITIVE);
    Ok(((gk.value - trap.value).abs() / l1, (gk.value - wide.value).abs() / l1))
}

pub fn check_quadrature(exec: Execution) -> CheckOutcome {
    let run = || {
        let specs = oracle_specs();
        let fams = families();
        let results = exec.map(specs.len() * fams.len(), |k| {
            let spec = &specs[k / fams.len()];
            let pair = green_pair(spec)?;
            quadrature_discrepancy(&pair, &spec.source, fams[k % fams.len()])
        });
        let (mut rules, mut window) = (0.0f64, 0.0f64);
        for r in results {
            let (a, b) = r?;
            rules = rules.max(a);
            window = window.max(b);
        }
        Ok((
            rules <= RULE_AGREEMENT_TOL && window <= WINDOW_TOL,
            Some((rules / RULE_AGREEMENT_TOL).max(window / WINDOW_TOL)),
            format!(
                "{} integrals: max |GK - trapezoid| / L1 = {rules:.2e}, max window-doubling change / L1 = {window:.2e}",
                specs.len() * fams.len()
            ),
        ))
    };
    outcome(12, "quadrature oracle", run())
}

/// Runs every check in order.
pub fn run_all(exec: Execution) -> Vec<CheckOutcome> {
    vec![
        check_jarzynski(),
        check_crooks(),
        check_passivity(),
        check_gapless(),
        check_population_average(),
        check_quartic_scaling(exec),
        check_moments(),
        check_modal_structure(),
        check_sign_map(exec),
        check_statistics_ordering(),
        check_engine_bounds(exec),
        check_quadrature(exec),
    ]
}
