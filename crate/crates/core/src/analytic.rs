//! Closed-form detector-side model of one- and two-click heralding, used to
//! cross-check the Monte Carlo engine.
//!
//! Matrices are in the basis `|00>, |01>, |10>, |11>` with `|0> = |g>`.
//! Noise enters through `p_d`, the probability that a detector sees at least
//! one noise photon in an attempt; [`dark_click_prob`] maps `(n_add, eta)`
//! onto it.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qstate::{fidelity_to_bell, CMatrix, DensityMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticParams {
    pub p_e: f64,
    pub eta: f64,
    pub p_d: f64,
}

impl AnalyticParams {
    pub fn new(p_e: f64, eta: f64, p_d: f64) -> Result<Self> {
        let p = Self { p_e, eta, p_d };
        p.validate()?;
        Ok(p)
    }

    pub fn from_noise(p_e: f64, eta: f64, n_add: f64) -> Result<Self> {
        Self::new(p_e, eta, dark_click_prob(n_add, eta)?)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("p_e", self.p_e, 0.0, 1.0, "[0, 1]")?;
        check_range("eta", self.eta, 0.0, 1.0, "[0, 1]")?;
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(Error::Domain {
                what: "p_d",
                value: self.p_d,
                range: "[0, 1)",
            });
        }
        Ok(())
    }
}

/// `p_d = 1 - exp(-eta * n_add)`: each transducer's thinned noise has mean
/// `eta * n_add`, split evenly over the two detectors.
pub fn dark_click_prob(n_add: f64, eta: f64) -> Result<f64> {
    check_range("n_add", n_add, 0.0, f64::MAX, "[0, inf)")?;
    check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    Ok(-(-eta * n_add).exp_m1())
}

/// Weights `(w_gg, w_bell, w_dephased_each, w_ee)` to `mixture`.
fn mixture(w_gg: f64, w_bell: f64, w_deph: f64, w_ee: f64) -> Result<DensityMatrix> {
    let total = w_gg + w_bell + 2.0 * w_deph + w_ee;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate("all mixture weights vanish"));
    }
    let mut m = CMatrix::zeros(4, 4);
    let r = |x: f64| C64::new(x / total, 0.0);
    m[(0, 0)] = r(w_gg);
    m[(1, 1)] = r(0.5 * w_bell + w_deph);
    m[(2, 2)] = r(0.5 * w_bell + w_deph);
    m[(1, 2)] = r(0.5 * w_bell);
    m[(2, 1)] = r(0.5 * w_bell);
    m[(3, 3)] = r(w_ee);
    DensityMatrix::from_matrix(m)
}

/// One-click heralded state.
pub fn rho_one_click_analytic(p: &AnalyticParams) -> Result<DensityMatrix> {
    p.validate()?;
    let AnalyticParams { p_e, eta, p_d } = *p;
    let q = 1.0 - p_e;
    let miss = 1.0 - eta;
    mixture(
        q * q * 2.0 * p_d * (1.0 - p_d),
        2.0 * p_e * q * eta * (1.0 - p_d),
        p_e * q * miss * (1.0 - p_d) * 2.0 * p_d,
        p_e * p_e * ((1.0 - miss * miss) + miss * miss * 2.0 * p_d) * (1.0 - p_d),
    )
}

/// Approximate one-click fidelity, accurate for `p_d / eta << p_e << 1`.
pub fn fidelity_one_click_analytic(p: &AnalyticParams) -> Result<f64> {
    p.validate()?;
    let AnalyticParams { p_e, eta, p_d } = *p;
    let num = 2.0 * p_e * (1.0 - p_e) * eta + p_e * (1.0 - p_e) * (1.0 - eta) * 2.0 * p_d;
    let den = p_e * eta * (1.0 - 2.0 * p_d) * (2.0 - p_e * eta) + 2.0 * p_d;
    if den == 0.0 {
        return Err(Error::Degenerate("zero denominator"));
    }
    Ok(num / den)
}

/// Two-click heralded state. Each dephased diagonal entry carries the
/// single-excitation weight `p_e (1 - p_e)`, as in the one-click state.
pub fn rho_two_click_analytic(p: &AnalyticParams) -> Result<DensityMatrix> {
    p.validate()?;
    let AnalyticParams { p_e, eta, p_d } = *p;
    let q = 1.0 - p_e;
    let miss = 1.0 - eta;
    let keep = 1.0 - p_d;
    let one_round = eta * keep + miss * keep * 2.0 * p_d;
    mixture(
        q * q * 2.0 * p_d * keep * ((1.0 - miss * miss) * keep + miss * miss * 2.0 * p_d * keep),
        2.0 * p_e * q * eta * eta * keep * keep,
        p_e * q * (one_round * one_round - eta * eta * keep * keep),
        p_e * p_e * ((1.0 - miss * miss) + miss * miss * 2.0 * p_d) * keep * keep * 2.0 * p_d,
    )
}

pub fn fidelity_two_click_analytic(p: &AnalyticParams) -> Result<f64> {
    Ok(fidelity_to_bell(&rho_two_click_analytic(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dark_click_examples() {
        assert_eq!(dark_click_prob(0.0, 0.3).unwrap(), 0.0);
        assert!((dark_click_prob(std::f64::consts::LN_2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let p = dark_click_prob(1e-2, 0.1).unwrap();
        assert!(((p - 1e-3) / 1e-3).abs() < 1e-3);
        assert!(dark_click_prob(-1.0, 0.1).is_err());
    }

    #[test]
    fn one_click_noiseless_mixture() {
        let rho = rho_one_click_analytic(&AnalyticParams::new(0.5, 1.0, 0.0).unwrap()).unwrap();
        let m = rho.matrix();
        assert!((m[(3, 3)].re - 1.0 / 3.0).abs() < 1e-15);
        assert!((fidelity_to_bell(&rho) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m[(0, 0)].re, 0.0);
        assert!((m[(1, 1)].re - m[(1, 2)].re).abs() < 1e-15);
    }

    #[test]
    fn one_click_no_excitation_is_ground() {
        let rho = rho_one_click_analytic(&AnalyticParams::new(0.0, 0.3, 0.01).unwrap()).unwrap();
        assert!(rho.matrix().max_abs_diff(DensityMatrix::ground_ground().matrix()) < 1e-15);
        assert!(rho_one_click_analytic(&AnalyticParams::new(0.0, 0.3, 0.0).unwrap()).is_err());
    }

    #[test]
    fn one_click_fidelity_examples() {
        let f = fidelity_one_click_analytic(&AnalyticParams::new(0.5, 0.01, 0.0).unwrap()).unwrap();
        assert!((f - 0.005 / 0.009975).abs() < 1e-12);
        let f = fidelity_one_click_analytic(&AnalyticParams::new(1e-9, 0.01, 0.0).unwrap()).unwrap();
        assert!((f - 1.0).abs() < 1e-6);
        let p = AnalyticParams::new(0.05, 0.1, 1e-5).unwrap();
        let direct = fidelity_to_bell(&rho_one_click_analytic(&p).unwrap());
        assert!((fidelity_one_click_analytic(&p).unwrap() - direct).abs() < 1e-3);
    }

    #[test]
    fn two_click_noiseless_is_bell() {
        let rho = rho_two_click_analytic(&AnalyticParams::new(0.3, 0.2, 0.0).unwrap()).unwrap();
        assert!(rho.matrix().max_abs_diff(DensityMatrix::psi_plus().matrix()) < 1e-15);
    }

    #[test]
    fn two_click_less_noise_sensitive() {
        let p = AnalyticParams::new(0.5, 0.1, 1e-3).unwrap();
        let f1 = fidelity_to_bell(&rho_one_click_analytic(&p).unwrap());
        let f2 = fidelity_two_click_analytic(&p).unwrap();
        assert!(f2 >= f1);
    }

    #[test]
    fn p_d_domain() {
        assert!(AnalyticParams::new(0.5, 0.5, 1.0).is_err());
        assert!(AnalyticParams::new(0.5, 1.5, 0.0).is_err());
    }
}
