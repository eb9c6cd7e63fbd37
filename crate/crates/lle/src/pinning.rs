//! Effective potential V_eff, its simple zeros, the critical-eigenvalue
//! slope, and the stability prediction of the eps-continuation.

use crate::field::PotentialSpec;
use crate::operators::KernelPair;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PinningError {
    #[error("kernel pair is not normalized")]
    Unnormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    StableForPositiveEps,
    StableForNegativeEps,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub sigma0: f64,
    /// V_eff'(sigma0)
    pub slope: f64,
    pub prediction: Prediction,
}

#[derive(Debug, Clone)]
pub struct EffectivePotential {
    pub sigma_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub zeros: Vec<ZeroRecord>,
    /// sign changes whose refined slope fell below the simplicity threshold
    pub non_simple: Vec<f64>,
}

pub const SIGMA_SAMPLES: usize = 720;
pub const SIMPLE_SLOPE_THRESHOLD: f64 = 1e-8;

/// V_eff(sigma) = Re int i V(x + sigma) u0' conj(phi0*) dx by trapezoid
/// quadrature, with V evaluated exactly from the trigonometric series.
pub fn v_eff(sigma: f64, kp: &KernelPair, v: &PotentialSpec) -> Result<f64, PinningError> {
    if !kp.normalized {
        return Err(PinningError::Unnormalized);
    }
    let up = &kp.translation_mode;
    let phi = &kp.adjoint_kernel;
    let grid = up.grid();
    let h = grid.spacing();
    let i = Complex64::new(0.0, 1.0);
    let sum: f64 = grid
        .points()
        .iter()
        .enumerate()
        .map(|(j, &x)| v.eval(x + sigma) * (i * up.values()[j] * phi.values()[j].conj()).re)
        .sum();
    Ok(sum * h)
}

/// d/d sigma of V_eff via the exact derivative of V:
/// Re int i V'(x + sigma) u0' conj(phi0*) dx.
pub fn v_eff_slope(sigma: f64, kp: &KernelPair, v: &PotentialSpec) -> Result<f64, PinningError> {
    if !kp.normalized {
        return Err(PinningError::Unnormalized);
    }
    let up = &kp.translation_mode;
    let phi = &kp.adjoint_kernel;
    let grid = up.grid();
    let h = grid.spacing();
    let i = Complex64::new(0.0, 1.0);
    let sum: f64 = grid
        .points()
        .iter()
        .enumerate()
        .map(|(j, &x)| v.eval_deriv(x + sigma) * (i * up.values()[j] * phi.values()[j].conj()).re)
        .sum();
    Ok(sum * h)
}

/// Sample V_eff on a uniform sigma grid, bracket sign changes, refine each by
/// bisection to |V_eff| < 1e-10, and attach the sign-rule prediction. Zeros
/// whose slope magnitude falls below the simplicity threshold are excluded
/// and reported separately.
pub fn find_zeros(kp: &KernelPair, v: &PotentialSpec) -> Result<EffectivePotential, PinningError> {
    if !kp.normalized {
        return Err(PinningError::Unnormalized);
    }
    let m = SIGMA_SAMPLES;
    let sigma_grid: Vec<f64> =
        (0..m).map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / m as f64).collect();
    let values: Vec<f64> = sigma_grid
        .par_iter()
        .map(|&s| v_eff(s, kp, v).unwrap())
        .collect();
    let mut zeros = Vec::new();
    let mut non_simple = Vec::new();
    for i in 0..m {
        let s0 = sigma_grid[i];
        let s1 = if i + 1 < m {
            sigma_grid[i + 1]
        } else {
            std::f64::consts::PI
        };
        let f0 = values[i];
        let f1 = if i + 1 < m {
            values[i + 1]
        } else {
            v_eff(s1, kp, v)?
        };
        if f0 == 0.0 || f0 * f1 < 0.0 {
            let (mut a, mut b) = (s0, s1);
            let mut fa = f0;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = v_eff(mid, kp, v)?;
                if fm.abs() < 1e-10 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            let sigma0 = 0.5 * (a + b);
            let step = 1e-5;
            let slope =
                (v_eff(sigma0 + step, kp, v)? - v_eff(sigma0 - step, kp, v)?) / (2.0 * step);
            if slope.abs() <= SIMPLE_SLOPE_THRESHOLD {
                non_simple.push(sigma0);
            } else {
                zeros.push(ZeroRecord {
                    sigma0,
                    slope,
                    prediction: if slope > 0.0 {
                        Prediction::StableForPositiveEps
                    } else {
                        Prediction::StableForNegativeEps
                    },
                });
            }
        }
    }
    zeros.sort_by(|a, b| a.sigma0.partial_cmp(&b.sigma0).unwrap());
    Ok(EffectivePotential {
        sigma_grid,
        values,
        zeros,
        non_simple,
    })
}

/// lambda_0'(0) = -Re int i V'(x + sigma0) u0' conj(phi0*) dx = -V_eff'(sigma0).
pub fn critical_slope(
    sigma0: f64,
    kp: &KernelPair,
    v: &PotentialSpec,
) -> Result<f64, PinningError> {
    Ok(-v_eff_slope(sigma0, kp, v)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityOutcome {
    Stable,
    Unstable,
    Marginal,
}

/// Sign rule: spectrally stable for V_eff'(sigma0) * eps > 0, unstable for
/// the opposite sign, marginal at eps = 0.
pub fn predict_stability(zero: &ZeroRecord, eps: f64) -> StabilityOutcome {
    if eps == 0.0 {
        StabilityOutcome::Marginal
    } else if zero.slope * eps > 0.0 {
        StabilityOutcome::Stable
    } else {
        StabilityOutcome::Unstable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Field, PotentialSpec, TorusGrid};
    use crate::operators::{assemble, kernel_pair, KernelPair};
    use crate::stationary::{initial_guess, newton_solve, GuessKind, Params, PhaseFix};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn params() -> Params {
        Params {
            d: 0.1,
            zeta: 3.7,
            mu: 1.0,
            f0: 2.0,
            eps: 0.0,
            potential: PotentialSpec::mean_plus_cosine(0.1, 0.5),
        }
    }

    fn bright_pair() -> (Field, KernelPair, Params) {
        let g = Arc::new(TorusGrid::new(256).unwrap());
        let p = params();
        let guess = initial_guess(&GuessKind::Bright, &p, &g).unwrap();
        let u = newton_solve(&guess, &p, PhaseFix::EvenSubspace).unwrap().solution;
        let kp = kernel_pair(&assemble(&u, &p)).unwrap();
        (u, kp, p)
    }

    #[test]
    fn constant_potential_gives_constant_v_eff() {
        let (_, kp, _) = bright_pair();
        let v = PotentialSpec::constant(0.7);
        for s in [-2.0, 0.0, 1.3] {
            assert_relative_eq!(v_eff(s, &kp, &v).unwrap(), 0.7, epsilon = 1e-9);
        }
        assert_relative_eq!(critical_slope(0.4, &kp, &v).unwrap(), 0.0, epsilon = 1e-10);
        let ep = find_zeros(&kp, &PotentialSpec::constant(1.0)).unwrap();
        assert!(ep.zeros.is_empty());
    }

    #[test]
    fn v_eff_is_even_for_even_soliton_and_potential() {
        let (_, kp, p) = bright_pair();
        for s in [0.3, 1.0, 2.0, 2.9] {
            let a = v_eff(s, &kp, &p.potential).unwrap();
            let b = v_eff(-s, &kp, &p.potential).unwrap();
            assert!((a - b).abs() < 1e-9, "asymmetry {} at {s}", a - b);
        }
    }

    #[test]
    fn v_eff_approximates_v_for_localized_soliton() {
        let (_, kp, p) = bright_pair();
        let m = 360;
        let mut max_dev: f64 = 0.0;
        for i in 0..m {
            let s = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let dev = (v_eff(s, &kp, &p.potential).unwrap() - p.potential.eval(s)).abs();
            max_dev = max_dev.max(dev);
        }
        let envelope = 0.15 * p.potential.max_abs();
        assert!(max_dev <= envelope, "max deviation {max_dev} > {envelope}");
    }

    #[test]
    fn two_simple_zeros_near_arccos() {
        let (_, kp, p) = bright_pair();
        let ep = find_zeros(&kp, &p.potential).unwrap();
        assert_eq!(ep.zeros.len(), 2, "zeros: {:?}", ep.zeros);
        assert!(ep.non_simple.is_empty());
        let anchor = (-0.2f64).acos();
        assert!((ep.zeros[0].sigma0 + anchor).abs() < 0.15);
        assert!((ep.zeros[1].sigma0 - anchor).abs() < 0.15);
        // evenness of the zero set
        assert!((ep.zeros[0].sigma0 + ep.zeros[1].sigma0).abs() < 1e-8);
        // refined zeros actually sit on V_eff = 0
        for z in &ep.zeros {
            assert!(v_eff(z.sigma0, &kp, &p.potential).unwrap().abs() < 1e-10);
            assert!(z.slope.abs() > SIMPLE_SLOPE_THRESHOLD);
        }
        // the negative zero has positive slope: stable for eps > 0
        assert_eq!(ep.zeros[0].prediction, Prediction::StableForPositiveEps);
        assert_eq!(ep.zeros[1].prediction, Prediction::StableForNegativeEps);
    }

    #[test]
    fn critical_slope_tracks_potential_derivative() {
        let (_, kp, p) = bright_pair();
        let ep = find_zeros(&kp, &p.potential).unwrap();
        let z = ep.zeros[0];
        let cs = critical_slope(z.sigma0, &kp, &p.potential).unwrap();
        let approx = -p.potential.eval_deriv(z.sigma0); // = 0.5 sin(sigma0) * -1... exact -V'
        assert!(
            (cs - approx).abs() <= 0.2 * approx.abs(),
            "slope {cs} vs -V'(sigma0) {approx}"
        );
        // critical_slope = -(centered difference of v_eff)
        let d = 1e-5;
        let fd = (v_eff(z.sigma0 + d, &kp, &p.potential).unwrap()
            - v_eff(z.sigma0 - d, &kp, &p.potential).unwrap())
            / (2.0 * d);
        assert!((cs + fd).abs() < 1e-6);
    }

    #[test]
    fn v_eff_is_periodic() {
        let (_, kp, p) = bright_pair();
        let a = v_eff(-std::f64::consts::PI, &kp, &p.potential).unwrap();
        let b = v_eff(std::f64::consts::PI, &kp, &p.potential).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn shift_covariance_of_v_eff() {
        // kernel pair from the shifted solution vs shifted argument
        let g = Arc::new(TorusGrid::new(256).unwrap());
        let p = params();
        let guess = initial_guess(&GuessKind::Bright, &p, &g).unwrap();
        let u = newton_solve(&guess, &p, PhaseFix::EvenSubspace).unwrap().solution;
        let kp = kernel_pair(&assemble(&u, &p)).unwrap();
        let a = 24.0 * g.spacing();
        let ua = u.shift(a);
        let kpa = kernel_pair(&assemble(&ua, &p)).unwrap();
        for s in [-1.0, 0.2, 2.2] {
            let lhs = v_eff(s, &kpa, &p.potential).unwrap();
            let rhs = v_eff(s - a, &kp, &p.potential).unwrap();
            assert!((lhs - rhs).abs() < 1e-8, "covariance gap {}", lhs - rhs);
        }
    }

    #[test]
    fn sign_rule() {
        let z = ZeroRecord {
            sigma0: -1.0,
            slope: 0.5,
            prediction: Prediction::StableForPositiveEps,
        };
        assert_eq!(predict_stability(&z, 0.1), StabilityOutcome::Stable);
        assert_eq!(predict_stability(&z, -0.1), StabilityOutcome::Unstable);
        assert_eq!(predict_stability(&z, 0.0), StabilityOutcome::Marginal);
    }
}
