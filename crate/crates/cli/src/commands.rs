//! Subcommand implementations. Each returns `Ok` on success; errors are
//! classified into exit codes by `main`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use workstat::quad::InversionPlan;
use workstat::sweep::{run_sweep, Axis, Param, Quantity, Scale, SweepPlan, SweepResult};
use workstat::thermo::{classify, engine_report, mode_tol, EngineReport};
use workstat::verify::run_all;
use workstat::workstats::{
    atom_weight, chi2_samples, chi_nonperturbative, default_w_grid, jarzynski_deficit, mean_work, wdf2,
    wdf_nonperturbative, DEFAULT_W_HALF_POINTS,
};
use workstat::{beta_q, Error, Execution, FrequencyGrid, QuadRule, WorkDistribution};

use crate::config::{parse_axis, parse_quantity, ConfigError, RunConfig, SystemArgs};
use crate::output::{num, opt, sink, CsvWriter};

const EXEC: Execution = Execution::Parallel;

/// Default number of characteristic-function samples.
pub const DEFAULT_WCF_SAMPLES: usize = 257;

pub struct WcfArgs<'a> {
    pub system: &'a SystemArgs,
    pub out: Option<&'a Path>,
    pub v_max: Option<f64>,
    pub samples: Option<usize>,
    pub nonperturbative: bool,
}

pub fn wcf(cfg: &RunConfig, args: WcfArgs<'_>) -> anyhow::Result<()> {
    let spec = cfg.system_spec(args.system)?;
    let v_max = args.v_max.or(cfg.wcf.v_max).unwrap_or(4.0 * spec.source.t_int);
    let n = args.samples.or(cfg.wcf.samples).unwrap_or(DEFAULT_WCF_SAMPLES);
    if n < 2 || v_max.is_nan() || v_max <= 0.0 {
        return Err(ConfigError("wcf needs at least 2 samples and v_max > 0".into()).into());
    }
    if args.nonperturbative && spec.qubit.is_some() {
        return Err(Error::NonperturbativeQubit.into());
    }
    let rows: Vec<(f64, f64, f64)> = if args.nonperturbative {
        let dv = v_max / (n - 1) as f64;
        EXEC.map(n, |k| {
            let v = k as f64 * dv;
            chi_nonperturbative(v, &spec).map(|c| (v, c.re, c.im))
        })
        .into_iter()
        .collect::<Result<_, _>>()?
    } else {
        chi2_samples(&spec, v_max, n, EXEC)?.into_iter().map(|s| (s.v, s.value.re, s.value.im)).collect()
    };
    let mut w = CsvWriter::new(sink(cfg.out(args.out).as_deref())?);
    w.header(&["v", "re", "im"])?;
    for (v, re, im) in rows {
        w.row(&[num(v), num(re), num(im)])?;
    }
    w.finish()?;
    Ok(())
}

fn write_distribution(path: Option<&Path>, dist: &WorkDistribution, w_limit: f64) -> anyhow::Result<()> {
    let mut w = CsvWriter::new(sink(path)?);
    w.comment(&format!(
        "atom_weight = {}, normalization = {}",
        num(dist.atom_weight),
        num(dist.normalization())
    ))?;
    w.header(&["w", "density"])?;
    for (&x, &d) in dist.w_grid.iter().zip(&dist.density) {
        if x.abs() <= w_limit {
            w.row(&[num(x), num(d)])?;
        }
    }
    w.finish()?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}{ext}"))
}

pub fn wdf(
    cfg: &RunConfig,
    system: &SystemArgs,
    out: Option<&Path>,
    half_points: Option<usize>,
    nonperturbative: bool,
) -> anyhow::Result<()> {
    let spec = cfg.system_spec(system)?;
    let n_half = half_points.or(cfg.wdf.half_points).unwrap_or(DEFAULT_W_HALF_POINTS);
    if n_half < 2 {
        return Err(ConfigError("wdf needs at least 2 points per half".into()).into());
    }
    let out = cfg.out(out);
    if nonperturbative {
        if spec.qubit.is_some() {
            return Err(Error::NonperturbativeQubit.into());
        }
        if out.is_none() {
            return Err(ConfigError("--nonperturbative writes a second file and needs --out".into()).into());
        }
    }
    let dist = wdf2(&spec, &default_w_grid(&spec, n_half))?;
    write_distribution(out.as_deref(), &dist, f64::INFINITY)?;
    if let (true, Some(path)) = (nonperturbative, out) {
        let plan = InversionPlan::for_source(&spec.source, 0.0);
        let full = wdf_nonperturbative(&spec, &plan, EXEC)?;
        // Multi-quantum processes reach a few window widths; the FFT grid extends much further.
        let limit = 4.0 * FrequencyGrid::for_source(&spec.source, QuadRule::AdaptiveGK).omega_max;
        write_distribution(Some(&sibling(&path, "_nonperturbative")), &full, limit)?;
    }
    Ok(())
}

pub fn wext(cfg: &RunConfig, system: &SystemArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let spec = cfg.system_spec(system)?;
    let w_bar = mean_work(&spec)?;
    let deficit = jarzynski_deficit(&spec)?;
    let chi = 1.0 + deficit;
    let delta_s = (chi > 0.0).then(|| spec.beta * w_bar + deficit.ln_1p());
    let mut w = CsvWriter::new(sink(cfg.out(out).as_deref())?);
    w.header(&["quantity", "value"])?;
    w.row(&["w_ext".into(), num(-w_bar)])?;
    w.row(&["w_bar".into(), num(w_bar)])?;
    w.row(&["chi_i_beta".into(), num(chi)])?;
    w.row(&["delta_s".into(), opt(delta_s)])?;
    w.row(&["atom_weight".into(), opt(atom_weight(&spec).ok())])?;
    w.finish()?;
    Ok(())
}

pub fn engine(
    cfg: &RunConfig,
    system: &SystemArgs,
    out: Option<&Path>,
    synthetic: Option<(f64, f64)>,
) -> anyhow::Result<()> {
    let spec = cfg.system_spec(system)?;
    let report: EngineReport = match synthetic {
        Some((w_bar, delta_s)) => {
            let q = spec.qubit.as_ref().ok_or(Error::WrongMode("qubit"))?;
            if !(q.p_ground > 0.5 && q.p_ground < 1.0) {
                return Err(Error::EngineExcluded(q.p_ground).into());
            }
            classify(w_bar, delta_s, 1.0 / spec.beta, 1.0 / beta_q(q)?, mode_tol(&spec.source))?
        }
        None => engine_report(&spec)?,
    };
    let mut w = CsvWriter::new(sink(cfg.out(out).as_deref())?);
    w.header(&["quantity", "value"])?;
    w.row(&["mode".into(), report.mode.name().to_string()])?;
    w.row(&["figure_of_merit".into(), opt(report.figure_of_merit)])?;
    for (k, v) in [
        ("w_bar", report.w_bar),
        ("delta_s", report.delta_s),
        ("q_b", report.q_b),
        ("q_q", report.q_q),
        ("t_b", report.t_b),
        ("t_q", report.t_q),
        ("r", report.r),
    ] {
        w.row(&[k.to_string(), num(v)])?;
    }
    w.finish()?;
    Ok(())
}

pub struct SweepArgs<'a> {
    pub system: &'a SystemArgs,
    pub out: Option<&'a Path>,
    pub x: Option<&'a str>,
    pub y: Option<&'a str>,
    pub quantity: Option<&'a str>,
    pub refine: bool,
}

pub fn sweep_plan(cfg: &RunConfig, args: &SweepArgs<'_>) -> anyhow::Result<(SweepPlan, Quantity)> {
    let fixed = cfg.system_spec(args.system)?;
    let axis =
        |flag: Option<&str>, file: &Option<crate::config::AxisSection>, default: Axis| match (flag, file) {
            (Some(text), _) => parse_axis(text),
            (None, Some(a)) => Ok(Axis::from(a.clone())),
            (None, None) => Ok(default),
        };
    let n = workstat::sweep::DEFAULT_RESOLUTION;
    let x =
        axis(args.x, &cfg.sweep.x, Axis { param: Param::P, min: 0.0, max: 1.0, n, scale: Scale::Linear })?;
    let y =
        axis(args.y, &cfg.sweep.y, Axis { param: Param::Beta, min: 0.1, max: 100.0, n, scale: Scale::Log })?;
    let quantity = match args.quantity {
        Some(q) => parse_quantity(q)?,
        None => cfg.sweep.quantity.unwrap_or(Quantity::WExt),
    };
    let plan = SweepPlan { x, y, fixed };
    plan.validate()?;
    Ok((plan, quantity))
}

fn write_curves(path: &Path, columns: [&str; 2], curves: &[Vec<(f64, f64)>]) -> anyhow::Result<()> {
    let mut w = CsvWriter::new(sink(Some(path))?);
    w.header(&columns)?;
    for (k, c) in curves.iter().enumerate() {
        if k > 0 {
            w.blank()?;
        }
        for &(a, b) in c {
            w.row(&[num(a), num(b)])?;
        }
    }
    w.finish()?;
    Ok(())
}

pub fn write_sweep(dir: &Path, result: &SweepResult) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (xn, yn) = (result.plan.x.param.name(), result.plan.y.param.name());
    let (xs, ys) = (result.plan.x.values(), result.plan.y.values());
    let mut w = CsvWriter::new(sink(Some(&dir.join("grid.csv")))?);
    w.header(&[xn, yn, result.quantity.name(), "level", "mode"])?;
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            let k = iy * xs.len() + ix;
            let mode = result.modes[k].map(|m| m.name().to_string()).unwrap_or_default();
            w.row(&[num(x), num(y), opt(result.values[k]), opt(result.level[k]), mode])?;
        }
    }
    w.finish()?;
    write_curves(&dir.join("contour.csv"), [xn, yn], &result.zero_contour)?;
    write_curves(&dir.join("betaq.csv"), [xn, yn], &result.marker_contour)?;
    Ok(())
}

pub fn sweep(cfg: &RunConfig, args: SweepArgs<'_>) -> anyhow::Result<()> {
    let (plan, quantity) = sweep_plan(cfg, &args)?;
    let Some(dir) = cfg.out(args.out) else {
        return Err(ConfigError("sweep writes a directory of files and needs --out".into()).into());
    };
    let mut result = run_sweep(&plan, quantity, EXEC)?;
    if args.refine || cfg.sweep.refine.unwrap_or(false) {
        result.refine_contour(1e-8, EXEC);
    }
    for f in &result.failures {
        log::warn!("cell ({}, {}) failed: {}", f.ix, f.iy, f.error);
    }
    log::info!(
        "{}x{} sweep of {} in {:.2}s, {} zero contour(s)",
        plan.x.n,
        plan.y.n,
        quantity.name(),
        result.elapsed.as_secs_f64(),
        result.zero_contour.len()
    );
    write_sweep(&dir, &result)
}

pub fn verify(verbose: bool) -> anyhow::Result<()> {
    let outcomes = run_all(EXEC);
    for o in &outcomes {
        println!("{o}");
        if verbose {
            match o.margin {
                Some(m) => println!("       margin (observed / threshold) = {m:.3e}"),
                None => println!("       margin: qualitative check"),
            }
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        bail!("{failed} verification check(s) failed");
    }
    Ok(())
}

/// Workstat errors that stem from the request rather than the numerics.
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_)
            | Error::GaplessQubit
            | Error::NonperturbativeQubit
            | Error::WrongMode(_)
            | Error::EngineExcluded(_)
            | Error::InvalidPlan(_)
    )
}
