//! Frequency-domain real-time Green functions `(iG̃⁺⁻, iG̃⁻⁺)` of the bath
//! operator seen by the drive, for the pure bath and for qubit couplings.

use std::fmt;
use std::sync::Arc;

use crate::model::SystemSpec;
use crate::quad::Singularities;
use crate::spectral::{OhmicDensity, WightmanPair};
use crate::{Error, Result};

type Channel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Evaluable pair `g_pm(ω) = iG̃⁺⁻(ω)` (absorption-reversed channel) and
/// `g_mp(ω) = iG̃⁻⁺(ω)`.
#[derive(Clone)]
pub struct GreenPair {
    beta: f64,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Thermal(OhmicDensity),
    Qubit { channels: WightmanPair, p: f64, omega_gap: f64 },
    Custom { g_mp: Channel, g_pm: Channel, singularities: Singularities },
}

impl fmt::Debug for GreenPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Thermal(_) => "thermal".to_string(),
            Kind::Qubit { channels, p, omega_gap } => {
                format!("{} qubit (Ω = {omega_gap}, p = {p})", channels.coupling().name())
            }
            Kind::Custom { .. } => "custom".to_string(),
        };
        f.debug_struct("GreenPair").field("beta", &self.beta).field("kind", &kind).finish()
    }
}

impl GreenPair {
    /// Pair built from arbitrary channel functions. `g_pm_boltzmann` then
    /// forms `e^{βω} g_pm(ω)` directly.
    pub fn from_fns(
        beta: f64,
        g_mp: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_pm: impl Fn(f64) -> f64 + Send + Sync + 'static,
        singularities: Singularities,
    ) -> Self {
        Self { beta, kind: Kind::Custom { g_mp: Arc::new(g_mp), g_pm: Arc::new(g_pm), singularities } }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_thermal(&self) -> bool {
        matches!(self.kind, Kind::Thermal(_))
    }

    #[inline]
    pub fn g_mp(&self, omega: f64) -> f64 {
        match &self.kind {
            Kind::Thermal(d) => bose_forward(d.eval(omega), self.beta * omega),
            Kind::Qubit { channels, p, omega_gap } => {
                p * channels.s1(omega - omega_gap) + (1.0 - p) * channels.s2(omega + omega_gap)
            }
            Kind::Custom { g_mp, .. } => g_mp(omega),
        }
    }

    #[inline]
    pub fn g_pm(&self, omega: f64) -> f64 {
        match &self.kind {
            Kind::Thermal(d) => {
                let s = d.eval(omega);
                if s == 0.0 {
                    0.0
                } else {
                    s / (self.beta * omega).exp_m1()
                }
            }
            Kind::Qubit { channels, p, omega_gap } => {
                p * channels.r1(omega + omega_gap) + (1.0 - p) * channels.r2(omega - omega_gap)
            }
            Kind::Custom { g_pm, .. } => g_pm(omega),
        }
    }

    /// `e^{βω} g_pm(ω)` with the Boltzmann factor folded into the channel
    /// occupations, so no `e^{βω}` is formed for the built-in pairs.
    #[inline]
    pub fn g_pm_boltzmann(&self, omega: f64) -> f64 {
        match &self.kind {
            Kind::Thermal(_) => self.g_mp(omega),
            Kind::Qubit { channels, p, omega_gap } => {
                let shift = self.beta * omega_gap;
                let up = channels.s1(omega + omega_gap);
                let up = if up == 0.0 { 0.0 } else { (-shift).exp() * up };
                let down = channels.s2(omega - omega_gap);
                let down = if down == 0.0 {
                    0.0
                } else if shift < 700.0 {
                    shift.exp() * down
                } else {
                    (shift + down.ln()).exp()
                };
                p * up + (1.0 - p) * down
            }
            Kind::Custom { g_pm, .. } => (self.beta * omega).exp() * g_pm(omega),
        }
    }

    /// Points where the channels switch on, and the endpoint substitution
    /// exponent needed there for sub-Ohmic spectra.
    pub fn singularities(&self) -> Singularities {
        let exponent = |d: &OhmicDensity| (d.alpha() < 1.0).then(|| 1.0 / d.alpha());
        match &self.kind {
            Kind::Thermal(d) => Singularities { points: vec![0.0], exponent: exponent(d) },
            Kind::Qubit { channels, omega_gap, .. } => {
                let points = if *omega_gap == 0.0 { vec![0.0] } else { vec![-omega_gap, *omega_gap] };
                Singularities { points, exponent: exponent(channels.ohmic()) }
            }
            Kind::Custom { singularities, .. } => singularities.clone(),
        }
    }
}

#[inline]
fn bose_forward(density: f64, x: f64) -> f64 {
    if density == 0.0 {
        0.0
    } else {
        density / -(-x).exp_m1()
    }
}

/// Pair of the bath alone: `g_mp = S_β`, `g_pm = e^{-βω} S_β`.
pub fn green_pure_bath(spec: &SystemSpec) -> Result<GreenPair> {
    if spec.qubit.is_some() {
        return Err(Error::WrongMode("pure-bath spec"));
    }
    Ok(GreenPair { beta: spec.beta, kind: Kind::Thermal(OhmicDensity::new(&spec.spectrum)) })
}

/// Pair of the bath seen through a qubit with gap `Ω` and ground population `p`.
pub fn green_qubit(spec: &SystemSpec) -> Result<GreenPair> {
    let q = spec.qubit.as_ref().ok_or(Error::WrongMode("qubit"))?;
    Ok(GreenPair {
        beta: spec.beta,
        kind: Kind::Qubit {
            channels: WightmanPair::new(q.coupling, spec.beta, &spec.spectrum),
            p: q.p_ground,
            omega_gap: q.omega_gap,
        },
    })
}

/// Pure-bath or qubit pair, depending on whether the system has a qubit.
pub fn green_pair(spec: &SystemSpec) -> Result<GreenPair> {
    match spec.qubit {
        Some(_) => green_qubit(spec),
        None => green_pure_bath(spec),
    }
}

/// Causal (Pauli-Jordan) spectral function `S^V = g_mp − g_pm`.
#[derive(Debug, Clone, Copy)]
pub struct CausalSpectral<'a> {
    pair: &'a GreenPair,
}

impl CausalSpectral<'_> {
    #[inline]
    pub fn s_v(&self, omega: f64) -> f64 {
        self.pair.g_mp(omega) - self.pair.g_pm(omega)
    }
}

pub fn causal_spectral(pair: &GreenPair) -> CausalSpectral<'_> {
    CausalSpectral { pair }
}

/// Imaginary part of the retarded Green function, `−S^O/2` for the pure bath.
#[derive(Debug, Clone, Copy)]
pub struct RetardedIm {
    ohmic: OhmicDensity,
}

impl RetardedIm {
    pub fn eval(&self, omega: f64) -> f64 {
        -0.5 * self.ohmic.eval(omega)
    }
}

pub fn retarded_im(pair: &GreenPair) -> Result<RetardedIm> {
    match &pair.kind {
        Kind::Thermal(d) => Ok(RetardedIm { ohmic: *d }),
        _ => Err(Error::WrongMode("pure-bath pair")),
    }
}
