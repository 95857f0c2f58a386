//! Drive-weighted frequency integrals `∫_λ f = ∫ dω/2π |λ̃(ω)|² f(ω)` and FFT
//! inversion of characteristic functions.
//!
//! The window `[-ω_max, ω_max]` is split at the breakpoints where the Green
//! functions switch on, and each piece at its midpoint. A half that touches a
//! breakpoint is integrated in the variable `t` with `ω = e ± len·t^m`, which
//! removes the `ω^{α-1}` endpoint behaviour of sub-Ohmic spectra when
//! `m = 1/α`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::model::{DrivenSource, FrequencyGrid, QuadRule};
use crate::par::Execution;
use crate::workstats::WorkDistribution;
use crate::{Error, Result};

/// Interior points where an integrand is non-smooth, and the substitution
/// exponent applied next to them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Singularities {
    pub points: Vec<f64>,
    pub exponent: Option<f64>,
}

impl Singularities {
    pub fn none() -> Self {
        Self::default()
    }
}

/// `|λ̃(ω)|² = λ0² √(8π) T² exp(-2ω²T²)`.
#[inline]
pub fn lambda_weight(omega: f64, source: &DrivenSource) -> f64 {
    let t = source.t_int;
    source.lambda0 * source.lambda0 * (8.0 * PI).sqrt() * t * t * (-2.0 * omega * omega * t * t).exp()
}

/// `ω(t) = origin + span·t^power` for `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Half {
    origin: f64,
    span: f64,
    power: f64,
    at_breakpoint: bool,
}

impl Half {
    #[inline]
    fn map(&self, t: f64) -> (f64, f64) {
        if self.power == 1.0 {
            (self.origin + self.span * t, self.span.abs())
        } else {
            let tp = t.powf(self.power);
            (self.origin + self.span * tp, self.span.abs() * self.power * tp / t)
        }
    }
}

fn layout(omega_max: f64, sing: &Singularities) -> Vec<Half> {
    let mut points: Vec<f64> = sing.points.iter().copied().filter(|p| p.abs() < omega_max).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let power = sing.exponent.unwrap_or(1.0);
    let mut edges = vec![(-omega_max, false)];
    edges.extend(points.iter().map(|&p| (p, true)));
    edges.push((omega_max, false));

    let mut halves = Vec::with_capacity(2 * (edges.len() - 1));
    for w in edges.windows(2) {
        let ((a, a_bp), (b, b_bp)) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        halves.push(if a_bp {
            Half { origin: a, span: mid - a, power, at_breakpoint: true }
        } else {
            Half { origin: a, span: mid - a, power: 1.0, at_breakpoint: false }
        });
        halves.push(if b_bp {
            Half { origin: b, span: mid - b, power, at_breakpoint: true }
        } else {
            Half { origin: b, span: mid - b, power: 1.0, at_breakpoint: false }
        });
    }
    halves
}

/// Integral value with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Estimated absolute error (zero for the trapezoid rule).
    pub abs_err: f64,
    /// `∫_λ |f|`, the scale for relative comparisons.
    pub l1: f64,
    pub evaluations: usize,
}

/// `∫ dω/2π |λ̃(ω)|² f(ω)` over the grid window.
pub fn integrate_lambda<F>(
    f: F,
    source: &DrivenSource,
    grid: &FrequencyGrid,
    sing: &Singularities,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate_lambda_detailed(f, source, grid, sing).map(|r| r.value)
}

pub fn integrate_lambda_detailed<F>(
    f: F,
    source: &DrivenSource,
    grid: &FrequencyGrid,
    sing: &Singularities,
) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    let halves = layout(grid.omega_max, sing);
    let integrand = |h: &Half, t: f64| -> Result<f64> {
        let (omega, jac) = h.map(t);
        let v = f(omega) * lambda_weight(omega, source) * jac / (2.0 * PI);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::IntegrandNonFinite { omega })
        }
    };
    match grid.rule {
        QuadRule::Trapezoid => trapezoid(&halves, grid.n_points.max(4), integrand),
        QuadRule::AdaptiveGK => adaptive_gk(&halves, (grid.n_points / 64).max(2), integrand),
    }
}

fn trapezoid<G>(halves: &[Half], n: usize, g: G) -> Result<Integral>
where
    G: Fn(&Half, f64) -> Result<f64>,
{
    let h = 1.0 / (n - 1) as f64;
    let (mut value, mut l1) = (0.0, 0.0);
    let mut ys = vec![0.0; n];
    for half in halves {
        for (k, y) in ys.iter_mut().enumerate().skip(usize::from(half.at_breakpoint)) {
            *y = g(half, k as f64 * h)?;
        }
        if half.at_breakpoint {
            // One-sided limit at the breakpoint from a quadratic through the next three nodes.
            ys[0] = 3.0 * ys[1] - 3.0 * ys[2] + ys[3];
        }
        let (first, last) = (ys[0], ys[n - 1]);
        let mut s = 0.5 * (first + last) + ys[1..n - 1].iter().sum::<f64>();
        let a = 0.5 * (first.abs() + last.abs()) + ys[1..n - 1].iter().map(|y| y.abs()).sum::<f64>();
        // Euler-Maclaurin end correction; the power substitution leaves a
        // nonzero slope at the breakpoint that would otherwise cost O(h²).
        let d0 = if half.at_breakpoint {
            (-5.0 * ys[1] + 8.0 * ys[2] - 3.0 * ys[3]) / (2.0 * h)
        } else {
            (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * h)
        };
        let d1 = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * h);
        s -= h * (d1 - d0) / 12.0;
        value += s * h;
        l1 += a * h;
    }
    Ok(Integral { value, abs_err: 0.0, l1, evaluations: halves.len() * n })
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_728,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod abscissae.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Relative target on the summed error estimate, measured against `∫|f|`.
const GK_REL_TOL: f64 = 1e-13;
const GK_MAX_PANELS: usize = 4000;

struct Panel {
    half: usize,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.half.cmp(&self.half)).then(other.a.total_cmp(&self.a))
    }
}

fn gk21<G>(g: &G, a: f64, b: f64) -> Result<(f64, f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c)?;
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut abs = WGK[10] * fc.abs();
    for j in 0..10 {
        let dx = h * XGK[j];
        let (f1, f2) = (g(c - dx)?, g(c + dx)?);
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs(), abs * h.abs()))
}

fn adaptive_gk<G>(halves: &[Half], initial: usize, g: G) -> Result<Integral>
where
    G: Fn(&Half, f64) -> Result<f64>,
{
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for (i, half) in halves.iter().enumerate() {
        let f = |t: f64| g(half, t);
        for k in 0..initial {
            let a = k as f64 / initial as f64;
            let b = (k + 1) as f64 / initial as f64;
            let (value, error, abs) = gk21(&f, a, b)?;
            evaluations += 21;
            heap.push(Panel { half: i, a, b, value, error, abs });
        }
    }
    let totals =
        |heap: &BinaryHeap<Panel>| heap.iter().fold((0.0, 0.0), |(e, a), p| (e + p.error, a + p.abs));
    let (mut err, mut l1) = totals(&heap);
    while err > GK_REL_TOL * l1 && heap.len() < GK_MAX_PANELS {
        let worst = heap.pop().expect("panel heap is never empty");
        let f = |t: f64| g(&halves[worst.half], t);
        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error, abs) = gk21(&f, a, b)?;
            evaluations += 21;
            err += error;
            l1 += abs;
            heap.push(Panel { half: worst.half, a, b, value, error, abs });
        }
        err -= worst.error;
        l1 -= worst.abs;
        if heap.len() % 64 == 0 {
            (err, l1) = totals(&heap);
        }
    }
    let mut panels = heap.into_vec();
    panels.sort_by(|p, q| p.half.cmp(&q.half).then(p.a.total_cmp(&q.a)));
    let (value, abs_err, l1) =
        panels.iter().fold((0.0, 0.0, 0.0), |(v, e, a), p| (v + p.value, e + p.error, a + p.abs));
    if abs_err > GK_REL_TOL * l1 * 1e3 {
        log::warn!("adaptive quadrature stopped at {abs_err:e} estimated error (scale {l1:e})");
    }
    Ok(Integral { value, abs_err, l1, evaluations })
}

/// Fixed quadrature nodes with the drive weight and `1/2π` folded into the
/// weights, fine enough to integrate `e^{iωv} f(ω)` for `|v| ≤ v_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub omega: Vec<f64>,
    pub weight: Vec<f64>,
}

impl NodeSet {
    pub fn oscillatory(source: &DrivenSource, omega_max: f64, sing: &Singularities, v_max: f64) -> Self {
        let mut omega = Vec::new();
        let mut weight = Vec::new();
        for half in layout(omega_max, sing) {
            // Widest ω-step of a panel is about |span|·power/n near t = 1.
            let phase = v_max * half.span.abs() * half.power;
            let panels = ((phase / PI).ceil() as usize).max(16);
            for k in 0..panels {
                let a = k as f64 / panels as f64;
                let h = 0.5 / panels as f64;
                let c = a + h;
                let mut push = |x: f64, w: f64| {
                    let (om, jac) = half.map(x);
                    omega.push(om);
                    weight.push(w * h * jac * lambda_weight(om, source) / (2.0 * PI));
                };
                push(c, WGK[10]);
                for j in 0..10 {
                    push(c - h * XGK[j], WGK[j]);
                    push(c + h * XGK[j], WGK[j]);
                }
            }
        }
        Self { omega, weight }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.omega.iter().zip(&self.weight).map(|(&o, &w)| w * f(o)).sum()
    }

    /// `Σ_k w_k [a_k e^{iω_k v_j} + b_k e^{-iω_k v_j}]` for `v_j = j·dv`,
    /// `j = 0..n`, using a phase-rotation recurrence reseeded every chunk.
    pub fn fourier_samples(
        &self,
        a: &[f64],
        b: &[f64],
        dv: f64,
        n: usize,
        exec: Execution,
    ) -> Vec<Complex64> {
        const CHUNK: usize = 256;
        let wa: Vec<f64> = self.weight.iter().zip(a).map(|(w, x)| w * x).collect();
        let wb: Vec<f64> = self.weight.iter().zip(b).map(|(w, x)| w * x).collect();
        let steps: Vec<Complex64> = self.omega.iter().map(|&o| Complex64::from_polar(1.0, o * dv)).collect();
        let chunks = n.div_ceil(CHUNK);
        let parts = exec.map(chunks, |c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n);
            let mut phase: Vec<Complex64> =
                self.omega.iter().map(|&o| Complex64::from_polar(1.0, o * dv * start as f64)).collect();
            let mut out = Vec::with_capacity(end - start);
            for _ in start..end {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..phase.len() {
                    let z = phase[k];
                    acc += Complex64::new((wa[k] + wb[k]) * z.re, (wa[k] - wb[k]) * z.im);
                    phase[k] = z * steps[k];
                }
                out.push(acc);
            }
            out
        });
        parts.into_iter().flatten().collect()
    }
}

/// Sampling window for inverting a characteristic function by FFT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionPlan {
    pub v_max: f64,
    pub n_fft: usize,
    pub atom_weight: f64,
}

impl InversionPlan {
    /// `v_max = 64·T_int`, `2^16` samples.
    pub fn for_source(source: &DrivenSource, atom_weight: f64) -> Self {
        Self { v_max: 64.0 * source.t_int, n_fft: 1 << 16, atom_weight }
    }

    pub fn dv(&self) -> f64 {
        2.0 * self.v_max / self.n_fft as f64
    }

    pub fn dw(&self) -> f64 {
        PI / self.v_max
    }

    fn check(&self) -> Result<()> {
        if self.n_fft < (1 << 12) || !self.n_fft.is_power_of_two() {
            return Err(Error::InvalidParameter("n_fft must be a power of two >= 4096".into()));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::InvalidParameter("v_max must be > 0".into()));
        }
        Ok(())
    }
}

/// Continuous density below this is treated as roundoff and clipped to zero.
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-12;

/// Inverts `chi(v)` sampled on `v = k·dv`, `k ∈ [-n/2, n/2)`, after removing
/// the atom `plan.atom_weight`.
pub fn invert_characteristic<F>(chi: F, plan: &InversionPlan, exec: Execution) -> Result<WorkDistribution>
where
    F: Fn(f64) -> Complex64 + Sync + Send,
{
    plan.check()?;
    let n = plan.n_fft;
    let dv = plan.dv();
    let atom = plan.atom_weight;
    let buf = exec.map(n, |m| {
        let k = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
        chi(k * dv) - atom
    });
    transform(buf, plan)
}

/// Inverts a Hermitian continuous part given its samples at `v = k·dv`,
/// `k = 0..=n/2` (the atom already removed).
pub fn invert_continuous(samples: &[Complex64], plan: &InversionPlan) -> Result<WorkDistribution> {
    plan.check()?;
    let n = plan.n_fft;
    if samples.len() != n / 2 + 1 {
        return Err(Error::InvalidParameter(format!(
            "expected {} non-negative-v samples, got {}",
            n / 2 + 1,
            samples.len()
        )));
    }
    let buf = (0..n).map(|m| if m <= n / 2 { samples[m] } else { samples[n - m].conj() }).collect();
    transform(buf, plan)
}

fn transform(mut buf: Vec<Complex64>, plan: &InversionPlan) -> Result<WorkDistribution> {
    let n = plan.n_fft;
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = plan.dv() / (2.0 * PI);
    let dw = plan.dw();
    let mut w_grid = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for j in 0..n {
        let m = (j + n / 2) % n;
        let jj = j as f64 - (n / 2) as f64;
        let z = buf[m] * scale;
        w_grid.push(jj * dw);
        density.push(z.re);
        max_re = max_re.max(z.re.abs());
        max_im = max_im.max(z.im.abs());
    }
    let mut clipped = 0;
    for (w, d) in w_grid.iter().zip(density.iter_mut()) {
        if *d < 0.0 {
            if *d < -NEGATIVE_DENSITY_TOL {
                return Err(Error::NegativeDensity { w: *w, value: *d });
            }
            *d = 0.0;
            clipped += 1;
        }
    }
    if clipped > 0 {
        log::debug!("clipped {clipped} roundoff-negative density samples");
    }
    let dist = WorkDistribution {
        atom_weight: plan.atom_weight,
        w_grid,
        density,
        clipped,
        imag_residue: if max_re > 0.0 { max_im / max_re } else { max_im },
    };
    let total = dist.normalization();
    if (total - 1.0).abs() > 1e-4 {
        return Err(Error::InversionWindow { total });
    }
    Ok(dist)
}

/// Stable `e^z − 1` for complex `z`.
pub fn complex_expm1(z: Complex64) -> Complex64 {
    let s = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * s * s, z.re.exp() * z.im.sin())
}
