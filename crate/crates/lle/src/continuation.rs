//! Pseudo-arclength continuation of stationary solutions in zeta or in the
//! perturbation strength eps, with per-point stability flags and
//! critical-eigenvalue tracking.

use crate::field::Field;
use crate::linalg;
use crate::operators::{self, SpectrumReport};
use crate::stationary::{self, Params};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("start state does not satisfy the residual at its parameter: {0:.3e}")]
    BadStart(f64),
    #[error("start parameter {0} outside the requested range [{1}, {2}]")]
    StartOutsideRange(f64, f64, f64),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Operator(#[from] operators::OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationParameter {
    Zeta,
    Eps,
}

impl ContinuationParameter {
    pub fn get(&self, p: &Params) -> f64 {
        match self {
            Self::Zeta => p.zeta,
            Self::Eps => p.eps,
        }
    }

    pub fn set(&self, p: &Params, q: f64) -> Params {
        match self {
            Self::Zeta => p.with_zeta(q),
            Self::Eps => p.with_eps(q),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepControls {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub max_points: usize,
}

impl Default for StepControls {
    fn default() -> Self {
        Self {
            initial: 1e-2,
            min: 1e-6,
            max: 5e-2,
            max_points: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub param: f64,
    pub state: Field,
    pub l2norm: f64,
    pub critical_eig: Complex64,
    pub stable: bool,
    /// location of the intensity extremum (max for d > 0, min for d < 0),
    /// sub-grid accurate by parabolic interpolation
    pub sigma_est: f64,
    /// full spectrum retained for eigenvalue tracking
    pub eigenvalues: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BranchEvent {
    TurningPoint { param: f64 },
    StabilityChange { param: f64 },
    StepUnderflow { param: f64 },
    AmbiguousEigenvalueMatch { param: f64 },
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub parameter: ContinuationParameter,
    pub base: Params,
    pub points: Vec<BranchPoint>,
    pub events: Vec<BranchEvent>,
}

impl Branch {
    /// Point with parameter closest to q.
    pub fn nearest(&self, q: f64) -> &BranchPoint {
        self.points
            .iter()
            .min_by(|a, b| {
                (a.param - q)
                    .abs()
                    .partial_cmp(&(b.param - q).abs())
                    .unwrap()
            })
            .unwrap()
    }
}

/// Sub-grid location of the intensity extremum by parabolic interpolation
/// through the discrete extremum of |u|^2.
pub fn intensity_extremum(u: &Field, d_sign: f64) -> f64 {
    let n = u.n();
    let ii: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
    let j = if d_sign > 0.0 {
        (0..n)
            .max_by(|&a, &b| ii[a].partial_cmp(&ii[b]).unwrap())
            .unwrap()
    } else {
        (0..n)
            .min_by(|&a, &b| ii[a].partial_cmp(&ii[b]).unwrap())
            .unwrap()
    };
    let h = u.grid().spacing();
    let (ym, y0, yp) = (ii[(j + n - 1) % n], ii[j], ii[(j + 1) % n]);
    let denom = ym - 2.0 * y0 + yp;
    let dx = if denom.abs() > 1e-300 {
        0.5 * (ym - yp) / denom
    } else {
        0.0
    };
    let x = u.grid().points()[j] + dx * h;
    // wrap into [-pi, pi)
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = (x + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
    if w >= std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

fn param_derivative(u: &Field, p: &Params, which: ContinuationParameter) -> DVector<f64> {
    match which {
        // dF/dzeta = u
        ContinuationParameter::Zeta => stationary::to_real_vec(u),
        // dF/deps = i V u'
        ContinuationParameter::Eps => {
            let up = u.derivative(1);
            let vx = p.potential.sample(u.grid());
            let vals: Vec<Complex64> = (0..u.n())
                .map(|j| Complex64::new(0.0, 1.0) * vx[j] * up.values()[j])
                .collect();
            stationary::to_real_vec(&Field::from_values(u.grid().clone(), vals))
        }
    }
}

fn make_point(
    state: Field,
    q: f64,
    base: &Params,
    which: ContinuationParameter,
) -> Result<BranchPoint, ContinuationError> {
    let p = which.set(base, q);
    let spec: SpectrumReport = operators::full_spectrum(&operators::assemble(&state, &p))?;
    let stable = spec.critical.re < 0.0 && spec.gap >= 1e-6;
    let sigma_est = intensity_extremum(&state, p.d);
    Ok(BranchPoint {
        param: q,
        l2norm: state.l2_norm(),
        critical_eig: spec.critical,
        stable,
        sigma_est,
        eigenvalues: spec.eigenvalues,
        state,
    })
}

/// Secant predictor, pseudo-arclength corrector (bordered system with the
/// arclength constraint), adaptive step halving on corrector failure. The
/// full spectrum is recomputed at every accepted point.
pub fn continue_branch(
    start: &Field,
    p: &Params,
    parameter: ContinuationParameter,
    range: (f64, f64),
    controls: &StepControls,
) -> Result<Branch, ContinuationError> {
    let q0 = parameter.get(p);
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    if q0 < lo - 1e-12 || q0 > hi + 1e-12 {
        return Err(ContinuationError::StartOutsideRange(q0, lo, hi));
    }
    let r0 = stationary::residual_norm(start, p);
    if r0 > 1e-9 {
        return Err(ContinuationError::BadStart(r0));
    }
    let mut events = Vec::new();
    // walk up towards hi, then down towards lo; stitch in parameter order
    let up = run_direction(start, p, parameter, hi, 1.0, controls, &mut events)?;
    let down = run_direction(start, p, parameter, lo, -1.0, controls, &mut events)?;
    let mut points: Vec<BranchPoint> = down.into_iter().skip(1).rev().collect();
    points.extend(up);
    // stability-change events from the assembled branch
    for w in points.windows(2) {
        if w[0].stable != w[1].stable {
            events.push(BranchEvent::StabilityChange { param: w[1].param });
        }
    }
    Ok(Branch {
        parameter,
        base: p.clone(),
        points,
        events,
    })
}

fn run_direction(
    start: &Field,
    p: &Params,
    which: ContinuationParameter,
    target: f64,
    sign: f64,
    controls: &StepControls,
    events: &mut Vec<BranchEvent>,
) -> Result<Vec<BranchPoint>, ContinuationError> {
    let n = start.n();
    let dim = 2 * n;
    let grid = start.grid().clone();
    let q0 = which.get(p);
    let mut points = vec![make_point(start.clone(), q0, p, which)?];
    if (target - q0) * sign <= 1e-14 {
        return Ok(points);
    }
    let mut w = stationary::to_real_vec(start);
    let mut q = q0;
    // bootstrap tangent: pure parameter direction
    let mut tangent = DVector::zeros(dim + 1);
    tangent[dim] = sign;
    let mut ds = controls.initial;
    let mut easy_streak = 0usize;
    let mut prev_tangent_q = tangent[dim];
    while points.len() < controls.max_points {
        let mut corrected: Option<(DVector<f64>, f64)> = None;
        let mut wq = DVector::zeros(dim + 1);
        wq.rows_mut(0, dim).copy_from(&w);
        wq[dim] = q;
        let mut y = &wq + ds * &tangent;
        for _ in 0..10 {
            let u = stationary::from_real_vec(&grid, &y.rows(0, dim).into_owned());
            let pq = which.set(p, y[dim]);
            let f = stationary::residual(&u, &pq);
            let g = (&y - &wq).dot(&tangent) - ds;
            let rn = f.l2_norm();
            if rn < 1e-10 && g.abs() < 1e-10 {
                corrected = Some((y.rows(0, dim).into_owned(), y[dim]));
                break;
            }
            let jac = operators::newton_jacobian(&operators::assemble(&u, &pq).matrix);
            let fq = param_derivative(&u, &pq, which);
            let mut big = DMatrix::zeros(dim + 1, dim + 1);
            big.view_mut((0, 0), (dim, dim)).copy_from(&jac);
            for i in 0..dim {
                big[(i, dim)] = fq[i];
                big[(dim, i)] = tangent[i];
            }
            big[(dim, dim)] = tangent[dim];
            let fv = stationary::to_real_vec(&f);
            let mut rhs = DVector::zeros(dim + 1);
            for i in 0..dim {
                rhs[i] = -fv[i];
            }
            rhs[dim] = -g;
            match big.lu().solve(&rhs) {
                Some(delta) => y += delta,
                None => break,
            }
        }
        match corrected {
            None => {
                ds *= 0.5;
                easy_streak = 0;
                if ds < controls.min {
                    events.push(BranchEvent::StepUnderflow { param: q });
                    break;
                }
            }
            Some((wn, qn)) => {
                let mut new_tangent = DVector::zeros(dim + 1);
                for i in 0..dim {
                    new_tangent[i] = wn[i] - w[i];
                }
                new_tangent[dim] = qn - q;
                let norm = new_tangent.norm();
                if norm > 0.0 {
                    new_tangent /= norm;
                }
                if prev_tangent_q != 0.0 && new_tangent[dim] * prev_tangent_q < 0.0 {
                    events.push(BranchEvent::TurningPoint { param: qn });
                }
                prev_tangent_q = new_tangent[dim];
                tangent = new_tangent;
                w = wn;
                q = qn;
                let state = stationary::from_real_vec(&grid, &w);
                points.push(make_point(state, q, p, which)?);
                easy_streak += 1;
                if easy_streak >= 3 {
                    ds = (ds * 2.0).min(controls.max);
                    easy_streak = 0;
                }
                if (target - q) * sign <= 0.0 {
                    break;
                }
            }
        }
    }
    Ok(points)
}

/// lambda_0 matched across neighboring branch points by nearest-neighbor
/// continuation in the complex plane, re-sorted by parameter.
pub fn track_critical_eigenvalue(
    branch: &Branch,
) -> (Vec<(f64, Complex64)>, Vec<BranchEvent>) {
    let mut events = Vec::new();
    if branch.points.is_empty() {
        return (Vec::new(), events);
    }
    // anchor at the point whose critical eigenvalue has smallest modulus
    let i0 = branch
        .points
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            a.critical_eig
                .norm()
                .partial_cmp(&b.critical_eig.norm())
                .unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let m = branch.points.len();
    let mut tracked: Vec<Option<Complex64>> = vec![None; m];
    tracked[i0] = Some(branch.points[i0].critical_eig);
    for dir in [1i64, -1] {
        let mut lam = branch.points[i0].critical_eig;
        let mut i = i0 as i64 + dir;
        while i >= 0 && (i as usize) < m {
            let pt = &branch.points[i as usize];
            let mut best = (f64::INFINITY, Complex64::ZERO);
            let mut second = f64::INFINITY;
            for z in &pt.eigenvalues {
                let dist = (z - lam).norm();
                if dist < best.0 {
                    second = best.0;
                    best = (dist, *z);
                } else if dist < second {
                    second = dist;
                }
            }
            if (second - best.0).abs() < 1e-10 {
                events.push(BranchEvent::AmbiguousEigenvalueMatch { param: pt.param });
            }
            lam = best.1;
            tracked[i as usize] = Some(lam);
            i += dir;
        }
    }
    let mut out: Vec<(f64, Complex64)> = branch
        .points
        .iter()
        .zip(tracked)
        .map(|(pt, lam)| (pt.param, lam.unwrap()))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (out, events)
}

/// Per-point location of the intensity extremum along the branch,
/// sorted by parameter.
pub fn pinning_drift(branch: &Branch) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = branch
        .points
        .iter()
        .map(|pt| (pt.param, pt.sigma_est))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}
