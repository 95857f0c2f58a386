//! Run configuration: built-in defaults, overridden by a TOML file,
//! overridden in turn by command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use thiserror::Error;
use workstat::sweep::{Axis, Param, Quantity, Scale};
use workstat::{validate, Coupling, DrivenSource, OhmicSpectrum, SystemSpec};

/// Usage or configuration problem; maps to exit code 2.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitKind {
    None,
    Spin,
    Fermion,
    Topological,
}

impl std::str::FromStr for QubitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(QubitKind::None),
            other => other.parse::<Coupling>().map(QubitKind::from).map_err(|e| e.to_string()),
        }
    }
}

impl From<Coupling> for QubitKind {
    fn from(c: Coupling) -> Self {
        match c {
            Coupling::Spin => QubitKind::Spin,
            Coupling::Fermion => QubitKind::Fermion,
            Coupling::Topological => QubitKind::Topological,
        }
    }
}

impl QubitKind {
    fn coupling(self) -> Option<Coupling> {
        match self {
            QubitKind::None => None,
            QubitKind::Spin => Some(Coupling::Spin),
            QubitKind::Fermion => Some(Coupling::Fermion),
            QubitKind::Topological => Some(Coupling::Topological),
        }
    }
}

/// Physical parameters shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SystemArgs {
    /// Ohmic exponent
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Inverse bath temperature
    #[arg(long)]
    pub beta: Option<f64>,
    /// Ohmic cutoff length
    #[arg(long)]
    pub lc: Option<f64>,
    /// Drive amplitude
    #[arg(long)]
    pub lambda0: Option<f64>,
    /// Drive duration
    #[arg(long)]
    pub tint: Option<f64>,
    /// Qubit coupling: none, spin, fermion or topological
    #[arg(long)]
    pub qubit: Option<QubitKind>,
    /// Qubit gap
    #[arg(long)]
    pub omega: Option<f64>,
    /// Qubit ground-state population
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lc: Option<f64>,
    pub lambda0: Option<f64>,
    pub tint: Option<f64>,
    pub qubit: Option<QubitKind>,
    pub omega: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WcfSection {
    pub v_max: Option<f64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdfSection {
    pub half_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_resolution")]
    pub n: usize,
    #[serde(default = "default_scale")]
    pub scale: Scale,
}

fn default_resolution() -> usize {
    workstat::sweep::DEFAULT_RESOLUTION
}

fn default_scale() -> Scale {
    Scale::Linear
}

impl From<AxisSection> for Axis {
    fn from(a: AxisSection) -> Self {
        Axis { param: a.param, min: a.min, max: a.max, n: a.n, scale: a.scale }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub x: Option<AxisSection>,
    pub y: Option<AxisSection>,
    pub quantity: Option<Quantity>,
    pub refine: Option<bool>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub wcf: WcfSection,
    #[serde(default)]
    pub wdf: WdfSection,
    #[serde(default)]
    pub sweep: SweepSection,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load_optional(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Merges flags over the file over built-in defaults and validates the result.
    pub fn system_spec(&self, flags: &SystemArgs) -> anyhow::Result<SystemSpec> {
        let file = &self.system;
        let source = DrivenSource::default();
        let spectrum = OhmicSpectrum::default();
        let pick = |flag: Option<f64>, file: Option<f64>, default: f64| flag.or(file).unwrap_or(default);
        let mut spec = SystemSpec {
            beta: pick(flags.beta, file.beta, 1.0),
            spectrum: OhmicSpectrum {
                alpha: pick(flags.alpha, file.alpha, spectrum.alpha),
                l_c: pick(flags.lc, file.lc, spectrum.l_c),
            },
            source: DrivenSource {
                lambda0: pick(flags.lambda0, file.lambda0, source.lambda0),
                t_int: pick(flags.tint, file.tint, source.t_int),
            },
            qubit: None,
        };
        let kind = flags.qubit.or(file.qubit).unwrap_or(QubitKind::None);
        let omega = flags.omega.or(file.omega);
        let p = flags.p.or(file.p);
        match kind.coupling() {
            Some(c) => {
                let omega = omega.ok_or_else(|| config_err("qubit coupling needs --omega"))?;
                let p = p.ok_or_else(|| config_err("qubit coupling needs --p"))?;
                spec = spec.with_qubit(c, omega, p);
            }
            None if omega.is_some() || p.is_some() => {
                return Err(config_err("--omega and --p need a qubit coupling (--qubit)"));
            }
            None => {}
        }
        let report = validate(&spec);
        for w in report.warnings() {
            log::warn!("{}: {}", w.field, w.message);
        }
        if let Some(e) = report.errors().next() {
            return Err(config_err(format!("{}: {}", e.field, e.message)));
        }
        Ok(spec)
    }

    pub fn out(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| self.out.clone())
    }
}

/// Parses an axis flag of the form `param:min:max[:n[:scale]]`.
pub fn parse_axis(text: &str) -> anyhow::Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    if !(3..=5).contains(&parts.len()) {
        return Err(config_err(format!("axis '{text}' is not param:min:max[:n[:scale]]")));
    }
    let param = match parts[0] {
        "p" => Param::P,
        "beta" => Param::Beta,
        "omega" | "omega_gap" => Param::OmegaGap,
        "alpha" => Param::Alpha,
        other => return Err(config_err(format!("unknown sweep parameter '{other}'"))),
    };
    let num =
        |s: &str| s.parse::<f64>().map_err(|_| config_err(format!("bad number '{s}' in axis '{text}'")));
    let n = match parts.get(3) {
        Some(s) => s.parse().map_err(|_| config_err(format!("bad resolution '{s}' in axis '{text}'")))?,
        None => default_resolution(),
    };
    let scale = match parts.get(4).copied() {
        None | Some("linear") => Scale::Linear,
        Some("log") => Scale::Log,
        Some(other) => return Err(config_err(format!("unknown scale '{other}'"))),
    };
    Ok(Axis { param, min: num(parts[1])?, max: num(parts[2])?, n, scale })
}

pub fn parse_quantity(text: &str) -> anyhow::Result<Quantity> {
    match text {
        "w_ext" | "wext" => Ok(Quantity::WExt),
        "chi_i_beta" | "chi" => Ok(Quantity::ChiIBeta),
        "delta_s" => Ok(Quantity::DeltaS),
        "figure_of_merit" | "fom" => Ok(Quantity::FigureOfMerit),
        other => Err(config_err(format!("unknown sweep quantity '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let cfg = RunConfig::parse("[system]\nalpha = 2.0\nbeta = 3.0\n").unwrap();
        let flags = SystemArgs { beta: Some(5.0), ..Default::default() };
        let spec = cfg.system_spec(&flags).unwrap();
        assert_eq!(spec.spectrum.alpha, 2.0);
        assert_eq!(spec.beta, 5.0);
        assert_eq!(spec.source, DrivenSource::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("[system]\ntemperature = 2.0\n").unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
        assert!(RunConfig::parse("colour = 1\n").is_err());
    }

    #[test]
    fn qubit_needs_gap_and_population() {
        let cfg = RunConfig::default();
        let flags = SystemArgs { qubit: Some(QubitKind::Spin), omega: Some(0.05), ..Default::default() };
        assert!(cfg.system_spec(&flags).is_err());
        let flags = SystemArgs { p: Some(0.5), ..Default::default() };
        assert!(cfg.system_spec(&flags).is_err());
    }

    #[test]
    fn invalid_physics_is_a_config_error() {
        let flags = SystemArgs { alpha: Some(0.0), ..Default::default() };
        let err = RunConfig::default().system_spec(&flags).unwrap_err();
        assert!(err.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn axis_flags() {
        let a = parse_axis("beta:0.1:100:32:log").unwrap();
        assert_eq!((a.param, a.n, a.scale), (Param::Beta, 32, Scale::Log));
        assert_eq!(parse_axis("p:0:1").unwrap().n, 64);
        assert!(parse_axis("p:0").is_err());
        assert!(parse_axis("gamma:0:1").is_err());
        assert!(parse_axis("p:0:1:16:cubic").is_err());
    }

    #[test]
    fn sweep_section_parses() {
        let cfg = RunConfig::parse(
            "[sweep]\nquantity = \"w_ext\"\nx = { param = \"p\", min = 0.0, max = 1.0, n = 16 }\n\
             y = { param = \"beta\", min = 0.1, max = 100.0, n = 16, scale = \"log\" }\n",
        )
        .unwrap();
        assert_eq!(cfg.sweep.quantity, Some(Quantity::WExt));
        assert_eq!(Axis::from(cfg.sweep.y.unwrap()).scale, Scale::Log);
    }
}
