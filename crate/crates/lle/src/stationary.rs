//! Residual and Jacobian of the stationary equation, constant-state solving,
//! bifurcation-point detection on the trivial branch, initial guesses, and a
//! damped Newton solver with optional phase conditions.

use crate::field::{dealiased_product, Field, PotentialSpec, TorusGrid};
use crate::linalg;
use crate::operators;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StationaryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("initial guess not available: {0}")]
    InvalidGuess(String),
    #[error("singular augmented system in Newton corrector")]
    SingularSystem,
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Model constants of the stationary equation
/// -d u'' + i eps V(x) u' + (zeta - i mu) u - |u|^2 u + i f0 = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub d: f64,
    pub zeta: f64,
    pub mu: f64,
    pub f0: f64,
    pub eps: f64,
    pub potential: PotentialSpec,
}

impl Params {
    pub fn validate(&self) -> Result<(), StationaryError> {
        if self.d == 0.0 {
            return Err(StationaryError::InvalidParams("d must be nonzero".into()));
        }
        if self.mu <= 0.0 {
            return Err(StationaryError::InvalidParams("mu must be positive".into()));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Params {
        Params { eps, ..self.clone() }
    }

    pub fn with_zeta(&self, zeta: f64) -> Params {
        Params { zeta, ..self.clone() }
    }
}

/// F(u) = -d u'' + i eps V u' + (zeta - i mu) u - |u|^2 u + i f0,
/// with V sampled exactly on the grid and the cubic dealiased.
pub fn residual(u: &Field, p: &Params) -> Field {
    let upp = u.derivative(2);
    let up = u.derivative(1);
    let vx = p.potential.sample(u.grid());
    let cubic = dealiased_product(u, &u.conj(), u).expect("same grid");
    let lin = Complex64::new(p.zeta, -p.mu);
    let i_eps = Complex64::new(0.0, p.eps);
    let values: Vec<Complex64> = (0..u.n())
        .map(|j| {
            -p.d * upp.values()[j] + i_eps * vx[j] * up.values()[j] + lin * u.values()[j]
                - cubic.values()[j]
                + Complex64::new(0.0, p.f0)
        })
        .collect();
    Field::from_values(u.grid().clone(), values)
}

/// Discrete L2 norm of the residual.
pub fn residual_norm(u: &Field, p: &Params) -> f64 {
    residual(u, p).l2_norm()
}

#[derive(Debug, Clone)]
pub struct ConstantState {
    pub intensity: f64,
    pub value: Complex64,
}

/// The spatially constant solutions u* with rho = |u*|^2 solving
/// rho ((zeta - rho)^2 + mu^2) = f0^2 and u* = -i f0 / (zeta - i mu - rho).
#[derive(Debug, Clone)]
pub struct ConstantStateSet {
    pub states: Vec<ConstantState>,
}

impl ConstantStateSet {
    pub fn count(&self) -> usize {
        self.states.len()
    }

    pub fn lowest(&self) -> &ConstantState {
        &self.states[0]
    }

    pub fn highest(&self) -> &ConstantState {
        self.states.last().unwrap()
    }
}

fn cubic_value(p: &Params, rho: f64) -> f64 {
    rho * ((p.zeta - rho).powi(2) + p.mu * p.mu) - p.f0 * p.f0
}

pub fn solve_constant_states(p: &Params) -> ConstantStateSet {
    // monic cubic rho^3 - 2 zeta rho^2 + (zeta^2 + mu^2) rho - f0^2 = 0
    let a = -2.0 * p.zeta;
    let b = p.zeta * p.zeta + p.mu * p.mu;
    let c = -p.f0 * p.f0;
    let companion = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -c, 1.0, 0.0, -b, 0.0, 1.0, -a]);
    let roots = linalg::eigenvalues(&companion).expect("3x3 eigenvalues");
    let scale = 1.0 + p.zeta.abs() + p.mu.abs() + p.f0.abs();
    let mut rhos: Vec<f64> = roots
        .iter()
        .filter(|z| z.im.abs() < 1e-8 * scale)
        .map(|z| z.re.max(0.0))
        .collect();
    rhos.sort_by(|x, y| x.partial_cmp(y).unwrap());
    rhos.dedup_by(|x, y| (*x - *y).abs() < 1e-9 * scale);
    // polish each root on the scalar cubic
    let states = rhos
        .into_iter()
        .map(|mut rho| {
            for _ in 0..4 {
                let f = cubic_value(p, rho);
                let df = (p.zeta - rho).powi(2) + p.mu * p.mu - 2.0 * rho * (p.zeta - rho);
                if df.abs() > 1e-14 {
                    rho -= f / df;
                }
            }
            let denom = Complex64::new(p.zeta - rho, -p.mu);
            let value = Complex64::new(0.0, -p.f0) / denom;
            ConstantState {
                intensity: rho,
                value,
            }
        })
        .collect();
    ConstantStateSet { states }
}

/// Where the per-mode determinant of the linearization around the trivial
/// branch vanishes: (d k^2 + zeta - 2 rho)^2 = rho^2 - mu^2, with the branch
/// parametrized by rho on its two halves zeta = rho -+ sqrt(f0^2/rho - mu^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationPoint {
    pub k: u32,
    pub zeta: f64,
    pub rho: f64,
    /// true on the half-branch zeta = rho + sqrt(f0^2/rho - mu^2)
    pub upper_half: bool,
}

/// Bifurcation points listed in branch-traversal order (following the trivial
/// curve from zeta = -infinity: lower half by increasing rho, then upper half
/// by decreasing rho).
pub fn trivial_branch_bifurcations(p: &Params, kmax: u32) -> Vec<BifurcationPoint> {
    let rho_max = p.f0 * p.f0 / (p.mu * p.mu);
    if rho_max <= p.mu {
        return Vec::new();
    }
    let zeta_of = |rho: f64, upper: bool| -> f64 {
        let disc = (p.f0 * p.f0 / rho - p.mu * p.mu).max(0.0);
        if upper {
            rho + disc.sqrt()
        } else {
            rho - disc.sqrt()
        }
    };
    let g = |rho: f64, upper: bool, k: u32| -> f64 {
        let a = p.d * (k * k) as f64 + zeta_of(rho, upper) - 2.0 * rho;
        a * a - (rho * rho - p.mu * p.mu)
    };
    let m = 20_000;
    let lo = p.mu;
    let hi = rho_max * (1.0 - 1e-12);
    let mut found: Vec<BifurcationPoint> = Vec::new();
    for upper in [false, true] {
        for k in 1..=kmax {
            let mut prev_rho = lo;
            let mut prev_g = g(lo, upper, k);
            for i in 1..=m {
                let rho = lo + (hi - lo) * i as f64 / m as f64;
                let gv = g(rho, upper, k);
                if prev_g == 0.0 || prev_g * gv < 0.0 {
                    let (mut a, mut b) = (prev_rho, rho);
                    for _ in 0..80 {
                        let mid = 0.5 * (a + b);
                        if g(a, upper, k) * g(mid, upper, k) <= 0.0 {
                            b = mid;
                        } else {
                            a = mid;
                        }
                    }
                    let rho_b = 0.5 * (a + b);
                    found.push(BifurcationPoint {
                        k,
                        zeta: zeta_of(rho_b, upper),
                        rho: rho_b,
                        upper_half: upper,
                    });
                }
                prev_rho = rho;
                prev_g = gv;
            }
        }
    }
    // traversal order: lower half ascending in rho, upper half descending
    found.sort_by(|x, y| {
        match (x.upper_half, y.upper_half) {
            (false, true) => std::cmp::Ordering::Less,
            (true, false) => std::cmp::Ordering::Greater,
            (false, false) => x.rho.partial_cmp(&y.rho).unwrap(),
            (true, true) => y.rho.partial_cmp(&x.rho).unwrap(),
        }
    });
    found
}

/// Seed profiles for the Newton solver.
#[derive(Debug, Clone)]
pub enum GuessKind {
    /// Lowest-intensity constant plus a sech hump; needs d > 0.
    Bright,
    /// Highest-intensity constant with a localized dip; needs d < 0.
    Dark,
    /// Constant state plus delta * (kernel direction) * cos(kx) for branch
    /// switching at a trivial-branch bifurcation.
    ConstantPlusMode { k: u32, delta: f64 },
}

pub fn initial_guess(
    kind: &GuessKind,
    p: &Params,
    grid: &Arc<TorusGrid>,
) -> Result<Field, StationaryError> {
    p.validate()?;
    let states = solve_constant_states(p);
    match kind {
        GuessKind::Bright => {
            if p.d <= 0.0 {
                return Err(StationaryError::InvalidGuess(
                    "bright ansatz needs d > 0".into(),
                ));
            }
            let low = states.lowest();
            let zt = p.zeta - low.intensity;
            if zt <= 0.0 {
                return Err(StationaryError::InvalidGuess(
                    "bright ansatz needs zeta above the background intensity".into(),
                ));
            }
            let amp = (2.0 * zt).sqrt();
            let width = (zt / p.d).sqrt();
            let bg = low.value;
            Ok(Field::from_fn(grid.clone(), |x| {
                bg + Complex64::new(amp / (width * x).cosh(), 0.0)
            }))
        }
        GuessKind::Dark => {
            if p.d >= 0.0 {
                return Err(StationaryError::InvalidGuess(
                    "dark ansatz needs d < 0".into(),
                ));
            }
            let high = states.highest();
            let width = (high.intensity / p.d.abs()).sqrt();
            let bg = high.value;
            Ok(Field::from_fn(grid.clone(), |x| {
                bg * (1.0 - 0.9 / (width * x).cosh())
            }))
        }
        GuessKind::ConstantPlusMode { k, delta } => {
            // pick the constant closest to satisfying the per-mode bifurcation
            // condition for this k
            let best = states
                .states
                .iter()
                .min_by(|s1, s2| {
                    let score = |s: &ConstantState| {
                        let a = p.d * (*k * *k) as f64 + p.zeta - 2.0 * s.intensity;
                        (a * a - (s.intensity * s.intensity - p.mu * p.mu)).abs()
                    };
                    score(s1).partial_cmp(&score(s2)).unwrap()
                })
                .unwrap()
                .clone();
            let dir = mode_kernel_direction(p, &best, *k);
            let kk = *k as f64;
            Ok(Field::from_fn(grid.clone(), |x| {
                best.value + *delta * dir * (kk * x).cos()
            }))
        }
    }
}

/// Null direction of the per-mode matrix A_k + mu J at a constant state,
/// as a complex amplitude v1 + i v2.
fn mode_kernel_direction(p: &Params, s: &ConstantState, k: u32) -> Complex64 {
    let (u1, u2) = (s.value.re, s.value.im);
    let dk2 = p.d * (k * k) as f64;
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            dk2 + p.zeta - 3.0 * u1 * u1 - u2 * u2,
            -2.0 * u1 * u2 + p.mu,
            -2.0 * u1 * u2 - p.mu,
            dk2 + p.zeta - u1 * u1 - 3.0 * u2 * u2,
        ],
    );
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    // last right singular vector = direction of smallest singular value
    Complex64::new(vt[(1, 0)], vt[(1, 1)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFix {
    None,
    EvenSubspace,
    OrthogonalToTranslation,
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub solution: Field,
    pub residual_norm: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub converged: bool,
}

pub const NEWTON_TOL: f64 = 1e-11;
pub const NEWTON_MAX_ITER: usize = 50;

/// Real 2n-vector (Re u stacked over Im u) of a field.
pub fn to_real_vec(u: &Field) -> DVector<f64> {
    let n = u.n();
    DVector::from_fn(2 * n, |i, _| {
        if i < n {
            u.values()[i].re
        } else {
            u.values()[i - n].im
        }
    })
}

pub fn from_real_vec(grid: &Arc<TorusGrid>, w: &DVector<f64>) -> Field {
    let n = grid.n();
    let values = (0..n).map(|j| Complex64::new(w[j], w[n + j])).collect();
    Field::from_values(grid.clone(), values)
}

fn reflect_real_index(n: usize, i: usize) -> usize {
    if i < n {
        (n - i) % n
    } else {
        n + (n - (i - n)) % n
    }
}

fn symmetrize(n: usize, w: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(2 * n, |i, _| {
        0.5 * (w[i] + w[reflect_real_index(n, i)])
    })
}

/// Damped Newton iteration on the real 2n-vector form of the residual.
///
/// With `OrthogonalToTranslation` the linear solve is augmented by the
/// constraint <du, u'> = 0 and a Lagrange multiplier, which regularizes the
/// Jacobian at eps = 0. With `EvenSubspace` the iteration is restricted to
/// fields with even real and imaginary parts; iterates are re-symmetrized
/// after every update so solver roundoff cannot accumulate odd components.
pub fn newton_solve(
    guess: &Field,
    p: &Params,
    phase_fix: PhaseFix,
) -> Result<NewtonReport, StationaryError> {
    newton_solve_with(guess, p, phase_fix, NEWTON_TOL, NEWTON_MAX_ITER)
}

pub fn newton_solve_with(
    guess: &Field,
    p: &Params,
    phase_fix: PhaseFix,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport, StationaryError> {
    p.validate()?;
    p.potential.check_grid(guess.grid()).map_err(|e| {
        StationaryError::InvalidParams(e.to_string())
    })?;
    let n = guess.n();
    let grid = guess.grid().clone();
    let mut u = match phase_fix {
        PhaseFix::EvenSubspace => from_real_vec(&grid, &symmetrize(n, &to_real_vec(guess))),
        _ => guess.clone(),
    };
    let mut history = Vec::new();
    for it in 0..max_iter {
        let f = residual(&u, p);
        let rn = f.l2_norm();
        history.push(rn);
        if rn < tol {
            return Ok(NewtonReport {
                solution: u,
                residual_norm: rn,
                iterations: it,
                history,
                converged: true,
            });
        }
        let jac = operators::newton_jacobian(&operators::assemble(&u, p).matrix);
        let g = to_real_vec(&f);
        let dw = match phase_fix {
            PhaseFix::None => linalg::solve(&jac, &(-&g))?,
            PhaseFix::EvenSubspace => {
                let m = even_restricted(n, &jac);
                let rhs = -symmetrize(n, &g);
                linalg::solve(&m, &rhs)?
            }
            PhaseFix::OrthogonalToTranslation => {
                let t = to_real_vec(&u.derivative(1));
                let (dw, _) = linalg::solve_bordered(&jac, &t, &t, &(-&g), 0.0)
                    .map_err(|_| StationaryError::SingularSystem)?;
                dw
            }
        };
        // Armijo backtracking with factor 1/2
        let w = to_real_vec(&u);
        let mut alpha = 1.0;
        let mut next = u.clone();
        while alpha > 1e-6 {
            let cand_w = &w + alpha * &dw;
            let cand = match phase_fix {
                PhaseFix::EvenSubspace => from_real_vec(&grid, &symmetrize(n, &cand_w)),
                _ => from_real_vec(&grid, &cand_w),
            };
            if residual(&cand, p).l2_norm() < (1.0 - 1e-4 * alpha) * rn {
                next = cand;
                break;
            }
            alpha *= 0.5;
            if alpha <= 1e-6 {
                // accept the last damped candidate and let the outer loop judge
                next = cand;
            }
        }
        u = next;
    }
    let rn = residual(&u, p).l2_norm();
    history.push(rn);
    Ok(NewtonReport {
        solution: u,
        residual_norm: rn,
        iterations: max_iter,
        history,
        converged: rn < tol,
    })
}

/// P J P + (I - P) with P the projector onto even fields, built from the
/// reflection permutation S: P J P = (J + SJ + JS + SJS)/4.
fn even_restricted(n: usize, jac: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = 2 * n;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let ri = reflect_real_index(n, i);
        for j in 0..dim {
            let rj = reflect_real_index(n, j);
            m[(i, j)] =
                0.25 * (jac[(i, j)] + jac[(ri, j)] + jac[(i, rj)] + jac[(ri, rj)]);
        }
    }
    for i in 0..dim {
        let ri = reflect_real_index(n, i);
        m[(i, i)] += 0.5;
        m[(i, ri)] -= 0.5;
    }
    m
}
