//! Ohmic spectral densities, thermal occupations and the coupling-specific
//! Wightman densities, all in overflow-free forms.

use statrs::function::gamma::gamma;

use crate::model::{Coupling, OhmicSpectrum, SystemSpec};
use crate::{Error, Result};

/// Ohmic density with its normalization precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicDensity {
    alpha: f64,
    l_c: f64,
    prefactor: f64,
}

impl OhmicDensity {
    pub fn new(spec: &OhmicSpectrum) -> Self {
        let prefactor = 2.0 * spec.l_c / gamma(0.5 * (1.0 + spec.alpha));
        Self { alpha: spec.alpha, l_c: spec.l_c, prefactor }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `2 l_c (l_c ω)^α exp(-l_c²ω²) / Γ((1+α)/2)` for `ω > 0`, zero otherwise.
    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let x = self.l_c * omega;
        self.prefactor * (self.alpha * x.ln() - x * x).exp()
    }
}

pub fn ohmic_density(omega: f64, spec: &OhmicSpectrum) -> f64 {
    OhmicDensity::new(spec).eval(omega)
}

/// `1/(e^x - 1)`.
pub fn bose_occupation(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::BosePole);
    }
    Ok(1.0 / x.exp_m1())
}

/// `1/(e^x + 1)`, saturating without overflow for large `|x|`.
#[inline]
pub fn fermi_occupation(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `S^O(ω)/(1 - e^{-βω})`, zero for `ω ≤ 0`.
pub fn bosonic_wightman(omega: f64, beta: f64, spec: &OhmicSpectrum) -> f64 {
    bose_forward(OhmicDensity::new(spec).eval(omega), beta * omega)
}

#[inline]
fn bose_forward(density: f64, x: f64) -> f64 {
    if density == 0.0 {
        0.0
    } else {
        density / -(-x).exp_m1()
    }
}

#[inline]
fn bose_reversed(density: f64, x: f64) -> f64 {
    if density == 0.0 {
        0.0
    } else {
        density / x.exp_m1()
    }
}

/// Occupation-weighted quasiparticle (`s1`) and quasihole (`s2`) densities of
/// one coupling type at inverse temperature `beta`.
///
/// `r1`/`r2` are the detailed-balance partners `e^{-βx} s1(x)` and
/// `e^{-βx} s2(x)`, evaluated without forming `e^{βx}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WightmanPair {
    coupling: Coupling,
    beta: f64,
    ohmic: OhmicDensity,
}

impl WightmanPair {
    pub fn new(coupling: Coupling, beta: f64, spectrum: &OhmicSpectrum) -> Self {
        Self { coupling, beta, ohmic: OhmicDensity::new(spectrum) }
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ohmic(&self) -> &OhmicDensity {
        &self.ohmic
    }

    #[inline]
    pub fn s1(&self, x: f64) -> f64 {
        let d = self.ohmic.eval(x);
        match self.coupling {
            Coupling::Spin => bose_forward(d, self.beta * x),
            Coupling::Fermion => fermi_occupation(self.beta * x) * d,
            Coupling::Topological => 0.5 * d,
        }
    }

    #[inline]
    pub fn s2(&self, x: f64) -> f64 {
        let d = self.ohmic.eval(x);
        match self.coupling {
            Coupling::Spin => bose_forward(d, self.beta * x),
            Coupling::Fermion => fermi_occupation(-self.beta * x) * d,
            Coupling::Topological => 0.5 * d,
        }
    }

    #[inline]
    pub fn r1(&self, x: f64) -> f64 {
        let d = self.ohmic.eval(x);
        if d == 0.0 {
            return 0.0;
        }
        let bx = self.beta * x;
        match self.coupling {
            Coupling::Spin => bose_reversed(d, bx),
            Coupling::Fermion => {
                let e = (-bx).exp();
                e * e / (1.0 + e) * d
            }
            Coupling::Topological => 0.5 * (-bx).exp() * d,
        }
    }

    #[inline]
    pub fn r2(&self, x: f64) -> f64 {
        let d = self.ohmic.eval(x);
        if d == 0.0 {
            return 0.0;
        }
        let bx = self.beta * x;
        match self.coupling {
            Coupling::Spin => bose_reversed(d, bx),
            Coupling::Fermion => fermi_occupation(bx) * d,
            Coupling::Topological => 0.5 * (-bx).exp() * d,
        }
    }
}

pub fn wightman_pair(spec: &SystemSpec) -> Result<WightmanPair> {
    let qubit = spec.qubit.as_ref().ok_or(Error::WrongMode("qubit"))?;
    Ok(WightmanPair::new(qubit.coupling, spec.beta, &spec.spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn ohmic(alpha: f64) -> OhmicSpectrum {
        OhmicSpectrum { alpha, l_c: 1.0 }
    }

    #[test]
    fn ohmic_values() {
        assert_eq!(ohmic_density(-1.0, &ohmic(1.0)), 0.0);
        assert_eq!(ohmic_density(0.0, &ohmic(1.0)), 0.0);
        assert_relative_eq!(ohmic_density(1.0, &ohmic(1.0)), 2.0 / E, max_relative = 1e-14);
        // Γ(3) = 2 for α = 5.
        assert_relative_eq!(
            ohmic_density(0.7, &ohmic(5.0)),
            0.7f64.powi(5) * (-0.49f64).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn ohmic_peak_location() {
        for alpha in [0.5, 1.0, 2.0, 5.0] {
            let peak = (alpha / 2.0f64).sqrt();
            let s = |w| ohmic_density(w, &ohmic(alpha));
            assert!(s(peak) > s(peak * (1.0 + 1e-4)));
            assert!(s(peak) > s(peak * (1.0 - 1e-4)));
        }
    }

    #[test]
    fn ohmic_is_normalized() {
        // ∫0^∞ S^O dω = 1 with the chosen normalization.
        for alpha in [1.0, 2.0, 5.0] {
            let n = 200_000;
            let h = 12.0 / n as f64;
            let sum: f64 = (1..n).map(|k| ohmic_density(k as f64 * h, &ohmic(alpha))).sum();
            assert_relative_eq!(sum * h, 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn bose_values() {
        assert_relative_eq!(bose_occupation(2f64.ln()).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(bose_occupation(-(2f64.ln())).unwrap(), -2.0, max_relative = 1e-14);
        assert_eq!(bose_occupation(800.0).unwrap(), 0.0);
        assert_eq!(bose_occupation(0.0), Err(Error::BosePole));
    }

    #[test]
    fn fermi_values() {
        assert_eq!(fermi_occupation(0.0), 0.5);
        assert_eq!(fermi_occupation(1e4), 0.0);
        assert_eq!(fermi_occupation(-1e4), 1.0);
    }

    #[test]
    fn bosonic_wightman_values() {
        assert_eq!(bosonic_wightman(-0.3, 1.0, &ohmic(1.0)), 0.0);
        let expected = 2.0 / E / (1.0 - 1.0 / E);
        assert_relative_eq!(bosonic_wightman(1.0, 1.0, &ohmic(1.0)), expected, max_relative = 1e-14);
        // Series form of 1/(1 - e^{-x}) = Σ e^{-kx}.
        let series: f64 = (0..60).map(|k| (-(k as f64)).exp()).sum();
        assert_relative_eq!(expected, 2.0 / E * series, max_relative = 1e-14);
        assert_relative_eq!(
            bosonic_wightman(0.8, 1e4, &ohmic(2.0)),
            ohmic_density(0.8, &ohmic(2.0)),
            max_relative = 1e-15
        );
        assert!(bosonic_wightman(1.0, 1000.0, &ohmic(1.0)).is_finite());
    }

    #[test]
    fn topological_pair_is_temperature_independent() {
        let a = WightmanPair::new(Coupling::Topological, 1.0, &ohmic(5.0));
        let b = WightmanPair::new(Coupling::Topological, 7.0, &ohmic(5.0));
        for w in [0.01, 0.3, 1.7] {
            assert_eq!(a.s1(w), b.s1(w));
            assert_eq!(a.s2(w), b.s2(w));
        }
    }

    #[test]
    fn spin_pair_matches_bosonic_wightman() {
        let spec = SystemSpec::pure_bath(1.0, 1.0).with_qubit(Coupling::Spin, 0.1, 0.5);
        let pair = wightman_pair(&spec).unwrap();
        assert_relative_eq!(pair.s1(1.0), 1.16395, max_relative = 1e-5);
        assert_eq!(pair.s1(1.0), pair.s2(1.0));
        assert_eq!(pair.s1(1.0), bosonic_wightman(1.0, 1.0, &ohmic(1.0)));
    }

    #[test]
    fn pure_bath_has_no_wightman_pair() {
        assert!(wightman_pair(&SystemSpec::pure_bath(1.0, 1.0)).is_err());
    }

    #[test]
    fn no_overflow_at_extreme_temperature() {
        for c in Coupling::ALL {
            let pair = WightmanPair::new(c, 1000.0, &ohmic(0.5));
            for w in [1e-6, 0.01, 1.0, 5.0] {
                for v in [pair.s1(w), pair.s2(w), pair.r1(w), pair.r2(w)] {
                    assert!(v.is_finite() && v >= 0.0);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fermi_complement(x in -800.0f64..800.0) {
            prop_assert!((fermi_occupation(x) + fermi_occupation(-x) - 1.0).abs() < 1e-15);
        }

        #[test]
        fn fermion_channels_sum_to_density(w in 1e-3f64..4.0, beta in 0.01f64..100.0) {
            let pair = WightmanPair::new(Coupling::Fermion, beta, &ohmic(2.0));
            let d = ohmic_density(w, &ohmic(2.0));
            prop_assert!((pair.s1(w) + pair.s2(w) - d).abs() <= 1e-14 * d);
        }

        #[test]
        fn fermion_detailed_balance(w in 1e-3f64..3.0, beta in 0.01f64..20.0) {
            let pair = WightmanPair::new(Coupling::Fermion, beta, &ohmic(5.0));
            let s1 = pair.s1(w);
            prop_assume!(s1 > 1e-250);
            let ratio = pair.s2(w) / s1;
            prop_assert!((ratio / (beta * w).exp() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn reversed_channels_are_boltzmann_suppressed(
            w in 1e-3f64..3.0, beta in 0.01f64..20.0, c in 0usize..3,
        ) {
            let pair = WightmanPair::new(Coupling::ALL[c], beta, &ohmic(1.5));
            let f = (-beta * w).exp();
            for (fwd, rev) in [(pair.s1(w), pair.r1(w)), (pair.s2(w), pair.r2(w))] {
                prop_assert!((rev - f * fwd).abs() <= 1e-13 * fwd);
            }
        }

        #[test]
        fn densities_vanish_off_support(w in -10.0f64..=0.0, c in 0usize..3) {
            let pair = WightmanPair::new(Coupling::ALL[c], 2.0, &ohmic(0.5));
            prop_assert_eq!(pair.s1(w), 0.0);
            prop_assert_eq!(pair.s2(w), 0.0);
            prop_assert_eq!(pair.r1(w), 0.0);
            prop_assert_eq!(pair.r2(w), 0.0);
        }
    }
}
