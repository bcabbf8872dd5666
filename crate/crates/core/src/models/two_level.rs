//! Driven two-level atom coupled to a thermal bath.
//!
//! Basis ordering is (excited, ground): `σz = diag(1, −1)` and `σ₋ = |g⟩⟨e|`.
//! The Hamiltonian is `H = (Δ/2)σz + Ωσx` with `Δ = ω − ω_d`, and the jump
//! operators are `L₋ = √(γ(N̄+1)) σ₋` and `L₊ = √(γN̄) σ₊`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lindblad::{JumpChannel, LindbladModel, ModelDerivative, ParametrizedModel};
use crate::linalg::{ComplexMatrix, C64};

/// Occupations above this value are treated as divergent.
pub const MAX_OCCUPATION: f64 = 1e6;

pub const EMISSION: &str = "emission";
pub const ABSORPTION: &str = "absorption";

/// Physical parameters of the atom. `beta = ∞` means a zero-temperature bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelParams {
    pub gamma: f64,
    pub rabi: f64,
    pub omega: f64,
    pub omega_d: f64,
    pub beta: f64,
}

/// Effective coefficients entering the matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelPoint {
    pub delta: f64,
    pub rabi: f64,
    pub gamma: f64,
    pub nbar: f64,
}

/// Derivatives of the effective coefficients. The occupation derivative is
/// stored as `∂θ ln N̄`, which stays finite as `N̄ → 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct PointDerivative {
    delta: f64,
    rabi: f64,
    gamma: f64,
    log_nbar: f64,
}

/// The parameter a family varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parameter {
    Gamma,
    Rabi,
    Omega,
    DriveFrequency,
    Beta,
}

impl Parameter {
    pub const ALL: [Parameter; 5] =
        [Parameter::Gamma, Parameter::Rabi, Parameter::Omega, Parameter::DriveFrequency, Parameter::Beta];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Gamma => "gamma",
            Parameter::Rabi => "rabi",
            Parameter::Omega => "omega",
            Parameter::DriveFrequency => "omega_d",
            Parameter::Beta => "beta",
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Parameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown two-level parameter `{s}`")))
    }
}

/// Standard observable weight choices, in channel order (emission, absorption).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// Counts every jump, `ν± = 1`.
    Counting,
    /// Net excitation current into the atom, `ν± = ±1`.
    Current,
}

impl Observable {
    pub fn weights(self) -> [f64; 2] {
        match self {
            Observable::Counting => [1.0, 1.0],
            Observable::Current => [-1.0, 1.0],
        }
    }
}

/// Bose occupation `1/(e^{βω} − 1)`.
pub fn bose_occupation(beta: f64, omega: f64) -> Result<f64> {
    if beta.is_nan() || omega.is_nan() || beta < 0.0 {
        return Err(Error::Domain(format!("invalid inverse temperature {beta}")));
    }
    if beta == f64::INFINITY {
        return Ok(0.0);
    }
    if omega <= 0.0 {
        return Err(Error::Domain(format!(
            "transition frequency {omega} must be positive at finite temperature"
        )));
    }
    let nbar = 1.0 / (beta * omega).exp_m1();
    if !(nbar <= MAX_OCCUPATION) {
        return Err(Error::Domain(format!(
            "thermal occupation {nbar:.3e} exceeds {MAX_OCCUPATION:.0e} (beta {beta}, omega {omega})"
        )));
    }
    Ok(nbar)
}

impl TwoLevelParams {
    /// Zero detuning and zero temperature.
    pub fn limiting(gamma: f64, rabi: f64) -> Self {
        Self { gamma, rabi, omega: 1.0, omega_d: 1.0, beta: f64::INFINITY }
    }

    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Gamma => self.gamma,
            Parameter::Rabi => self.rabi,
            Parameter::Omega => self.omega,
            Parameter::DriveFrequency => self.omega_d,
            Parameter::Beta => self.beta,
        }
    }

    pub fn with(mut self, p: Parameter, value: f64) -> Self {
        match p {
            Parameter::Gamma => self.gamma = value,
            Parameter::Rabi => self.rabi = value,
            Parameter::Omega => self.omega = value,
            Parameter::DriveFrequency => self.omega_d = value,
            Parameter::Beta => self.beta = value,
        }
        self
    }

    pub fn detuning(&self) -> f64 {
        self.omega - self.omega_d
    }

    pub fn occupation(&self) -> Result<f64> {
        bose_occupation(self.beta, self.omega)
    }

    pub fn point(&self) -> Result<TwoLevelPoint> {
        for (name, v) in [("gamma", self.gamma), ("rabi", self.rabi), ("omega", self.omega), ("omega_d", self.omega_d)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!("{name} = {v} is not finite")));
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::Domain(format!("dissipation rate {} is negative", self.gamma)));
        }
        Ok(TwoLevelPoint {
            delta: self.detuning(),
            rabi: self.rabi,
            gamma: self.gamma,
            nbar: self.occupation()?,
        })
    }

    fn point_derivative(&self, p: Parameter) -> Result<PointDerivative> {
        let nbar = self.occupation()?;
        // ∂ ln N̄ / ∂x = −(∂(βω)/∂x)(1 + N̄); zero when the bath is at zero temperature.
        let log_nbar = |dx: f64| if nbar == 0.0 { 0.0 } else { -dx * (1.0 + nbar) };
        Ok(match p {
            Parameter::Gamma => PointDerivative { gamma: 1.0, ..Default::default() },
            Parameter::Rabi => PointDerivative { rabi: 1.0, ..Default::default() },
            Parameter::DriveFrequency => PointDerivative { delta: -1.0, ..Default::default() },
            Parameter::Omega => PointDerivative { delta: 1.0, log_nbar: log_nbar(self.beta), ..Default::default() },
            Parameter::Beta => PointDerivative { log_nbar: log_nbar(self.omega), ..Default::default() },
        })
    }
}

impl TwoLevelPoint {
    pub fn alpha(&self) -> f64 {
        let k = 1.0 + 2.0 * self.nbar;
        4.0 * self.delta * self.delta + self.gamma * self.gamma * k * k + 8.0 * self.rabi * self.rabi
    }

    /// Model with counting weights.
    pub fn model(&self) -> Result<LindbladModel> {
        if self.nbar < 0.0 || self.gamma < 0.0 {
            return Err(Error::Domain("occupation and dissipation must be nonnegative".into()));
        }
        let h = ComplexMatrix::from_real_rows(&[
            vec![self.delta / 2.0, self.rabi],
            vec![self.rabi, -self.delta / 2.0],
        ])?;
        let sm = sigma_minus();
        LindbladModel::new(
            h,
            vec![
                JumpChannel::new(EMISSION, sm.scale_real((self.gamma * (self.nbar + 1.0)).sqrt()), 1.0),
                JumpChannel::new(ABSORPTION, sm.transpose().scale_real((self.gamma * self.nbar).sqrt()), 1.0),
            ],
        )
    }

    fn derivative(&self, d: &PointDerivative) -> Result<ModelDerivative> {
        let dh = ComplexMatrix::from_real_rows(&[
            vec![d.delta / 2.0, d.rabi],
            vec![d.rabi, -d.delta / 2.0],
        ])?;
        let (g, n) = (self.gamma, self.nbar);
        let dn = d.log_nbar * n;
        // ∂√(γ(N̄+1)) and ∂√(γN̄); the second is written as √N̄ (γ' + γ ∂lnN̄)/(2√γ).
        let d_emission = sqrt_derivative(g * (n + 1.0), d.gamma * (n + 1.0) + g * dn)?;
        let d_absorption = if n == 0.0 {
            0.0
        } else {
            let num = d.gamma + g * d.log_nbar;
            if g == 0.0 {
                if num != 0.0 {
                    return Err(Error::Domain("dissipation derivative at zero dissipation".into()));
                }
                0.0
            } else {
                n.sqrt() * num / (2.0 * g.sqrt())
            }
        };
        let sm = sigma_minus();
        Ok(ModelDerivative {
            dh,
            djumps: vec![sm.scale_real(d_emission), sm.transpose().scale_real(d_absorption)],
        })
    }
}

/// `∂√x` given `x` and `∂x`.
fn sqrt_derivative(x: f64, dx: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(dx / (2.0 * x.sqrt()))
    } else if dx == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Domain("jump amplitude is not differentiable at zero rate".into()))
    }
}

/// `σ₋ = |g⟩⟨e|`.
pub fn sigma_minus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(1, 0)] = C64::new(1.0, 0.0);
    m
}

/// The family obtained by varying `perturbed` around `base`, with analytic
/// derivatives and the given observable weights.
pub fn two_level_model(base: TwoLevelParams, perturbed: Parameter, weights: [f64; 2]) -> Result<ParametrizedModel> {
    base.point()?;
    let family = ParametrizedModel::new(move |theta| {
        base.with(perturbed, theta).point()?.model()?.with_weights(&weights)
    })
    .with_analytic_derivative(move |theta| {
        let params = base.with(perturbed, theta);
        params.point()?.derivative(&params.point_derivative(perturbed)?)
    });
    Ok(family)
}

/// Closed-form steady state for arbitrary detuning and occupation.
pub fn steady_state_closed_form(p: &TwoLevelPoint) -> ComplexMatrix {
    let (d, o, g, n) = (p.delta, p.rabi, p.gamma, p.nbar);
    let alpha = p.alpha();
    let k = 1.0 + 2.0 * n;
    let norm = 1.0 / (k * alpha);
    let off = -2.0 * o;
    ComplexMatrix::from_rows(&[
        vec![C64::new((n * alpha + 4.0 * o * o) * norm, 0.0), C64::new(off * 2.0 * d, off * g * k) * norm],
        vec![C64::new(off * 2.0 * d, -off * g * k) * norm, C64::new(((1.0 + n) * alpha - 4.0 * o * o) * norm, 0.0)],
    ])
    .expect("2x2 rows")
}

/// Closed-form values at zero detuning and zero temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitingOracles {
    pub mean: f64,
    pub variance: f64,
    pub d_gamma_mean: f64,
    pub d_rabi_mean: f64,
    pub eta_gamma: f64,
    pub eta_rabi: f64,
    pub z_rabi: f64,
    pub a2max_gamma: f64,
}

pub fn limiting_oracles(gamma: f64, rabi: f64) -> Result<LimitingOracles> {
    if !(gamma > 0.0) || !(rabi >= 0.0) || !gamma.is_finite() || !rabi.is_finite() {
        return Err(Error::Domain(format!("limiting case needs gamma > 0, rabi >= 0 (got {gamma}, {rabi})")));
    }
    let (g2, o2) = (gamma * gamma, rabi * rabi);
    let s = g2 + 8.0 * o2;
    let q = g2 * g2 - 8.0 * g2 * o2 + 64.0 * o2 * o2;
    Ok(LimitingOracles {
        mean: 4.0 * gamma * o2 / s,
        variance: 4.0 * gamma * o2 * q / s.powi(3),
        d_gamma_mean: 4.0 * o2 * (8.0 * o2 - g2) / (s * s),
        d_rabi_mean: 8.0 * gamma.powi(3) * rabi / (s * s),
        eta_gamma: (g2 - 8.0 * o2).powi(2) / q,
        eta_rabi: 1.0 / (1.0 + 512.0 * o2.powi(3) / g2.powi(3)),
        z_rabi: 16.0 / gamma,
        a2max_gamma: 1.0 / g2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_limits() {
        assert_eq!(bose_occupation(f64::INFINITY, 1.0).unwrap(), 0.0);
        assert!(matches!(bose_occupation(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(bose_occupation(1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(bose_occupation(1e-7, 1.0), Err(Error::Domain(_))));
        assert!((bose_occupation(2.0_f64.ln(), 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn limiting_oracle_values() {
        let o = limiting_oracles(1.0, 1.0).unwrap();
        assert!((o.mean - 4.0 / 9.0).abs() < 1e-15);
        assert!((o.variance - 228.0 / 729.0).abs() < 1e-15);
        assert!((o.eta_gamma - (1.0 - 1.0 / (8.0 + 1.0 / 8.0 - 1.0))).abs() < 1e-15);
        let v = limiting_oracles(8f64.sqrt(), 1.0).unwrap();
        assert!(v.d_gamma_mean.abs() < 1e-15 && v.eta_gamma.abs() < 1e-15);
        assert_eq!(limiting_oracles(1.0, 0.0).unwrap().mean, 0.0);
        assert!(limiting_oracles(0.0, 1.0).is_err());
    }

    #[test]
    fn eta_gamma_matches_ratio_form() {
        for &(g, o) in &[(0.3, 1.0), (2.0, 0.7), (5.0, 1.3)] {
            let r = 8.0 * o * o / (g * g);
            let alt = 1.0 - 1.0 / (r + 1.0 / r - 1.0);
            assert!((limiting_oracles(g, o).unwrap().eta_gamma - alt).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_derivative_of_emission() {
        let base = TwoLevelParams { gamma: 0.8, rabi: 1.0, omega: 2.0, omega_d: 1.5, beta: 0.9 };
        let fam = two_level_model(base, Parameter::Gamma, [1.0, 1.0]).unwrap();
        let n = base.occupation().unwrap();
        let d = fam.derivative(0.8).unwrap();
        assert!(d.dh.is_zero());
        let want = ((n + 1.0) / (4.0 * 0.8)).sqrt();
        assert!((d.djumps[0][(1, 0)].re - want).abs() < 1e-14);
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let base = TwoLevelParams { gamma: 1.3, rabi: 0.6, omega: 1.7, omega_d: 0.4, beta: 0.8 };
        for p in Parameter::ALL {
            let fam = two_level_model(base, p, [1.0, 1.0]).unwrap();
            let mismatch = fam.derivative_mismatch(base.get(p), 1e-5).unwrap().unwrap();
            assert!(mismatch < 1e-6, "{p}: {mismatch:.3e}");
        }
    }

    #[test]
    fn zero_temperature_derivatives_are_finite() {
        let base = TwoLevelParams { gamma: 1.0, rabi: 0.6, omega: 1.7, omega_d: 0.4, beta: f64::INFINITY };
        let fam = two_level_model(base, Parameter::Omega, [1.0, 1.0]).unwrap();
        let d = fam.derivative(1.7).unwrap();
        assert!(d.djumps.iter().all(|m| m.is_zero()));
        let hot = TwoLevelParams { beta: 500.0, ..base };
        let fam = two_level_model(hot, Parameter::Beta, [1.0, 1.0]).unwrap();
        assert!(fam.derivative(500.0).unwrap().djumps.iter().all(|m| m.is_finite()));
    }

    #[test]
    fn hamiltonian_only_families() {
        let base = TwoLevelParams { gamma: 1.0, rabi: 0.6, omega: 1.7, omega_d: 0.4, beta: 1.0 };
        for p in [Parameter::Rabi, Parameter::DriveFrequency] {
            let d = two_level_model(base, p, [1.0, 1.0]).unwrap().derivative(base.get(p)).unwrap();
            assert!(d.djumps.iter().all(|m| m.is_zero()));
            assert!(!d.dh.is_zero());
        }
    }

    #[test]
    fn parameter_names_round_trip() {
        for p in Parameter::ALL {
            assert_eq!(p.name().parse::<Parameter>().unwrap(), p);
        }
        assert!("delta".parse::<Parameter>().is_err());
    }
}
