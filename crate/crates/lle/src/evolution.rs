//! Time integration of the dynamic equation
//! i u_t = -d u_xx + i eps V(x) u_x + (zeta - i mu) u - |u|^2 u + i f0
//! by exact propagation of the stiff constant-coefficient part in spectral
//! space combined with a second-order exponential (ETD2RK) treatment of the
//! advection and the dealiased cubic term.

use crate::field::{self, Field, TorusGrid};
use crate::stationary::Params;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("non-finite values at t = {0}")]
    BlowUp(f64),
    #[error("time step {dt} exceeds the advection bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("perturbation scale {scale} exceeds 1e-2 of the state norm {norm}")]
    PerturbationTooLarge { scale: f64, norm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EtdImex,
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub perturbation: Field,
    pub perturbation_scale: f64,
}

/// dt <= 0.5 (2 pi / n) / max(|eps| max|V|, 1e-12), capped at 1e-3.
pub fn dt_bound(grid: &TorusGrid, p: &Params) -> f64 {
    let adv = (p.eps.abs() * p.potential.max_abs()).max(1e-12);
    (0.5 * grid.spacing() / adv).min(1e-3)
}

/// One-step integrator with precomputed mode factors.
pub struct Stepper {
    grid: Arc<TorusGrid>,
    dt: f64,
    eps: f64,
    f0: f64,
    vx: Vec<f64>,
    ez: Vec<Complex64>,
    phi1_dt: Vec<Complex64>,
    phi2_dt: Vec<Complex64>,
    ik: Vec<Complex64>,
}

fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // Taylor: 1 + z/2 + z^2/6 + z^3/24 + z^4/120
        Complex64::ONE
            + z / 2.0
            + z * z / 6.0
            + z * z * z / 24.0
            + z * z * z * z / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        Complex64::new(0.5, 0.0)
            + z / 6.0
            + z * z / 24.0
            + z * z * z / 120.0
            + z * z * z * z / 720.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

impl Stepper {
    pub fn new(grid: Arc<TorusGrid>, p: &Params, dt: f64) -> Result<Self, EvolutionError> {
        let bound = dt_bound(&grid, p);
        if dt > bound * (1.0 + 1e-12) {
            return Err(EvolutionError::StepTooLarge { dt, bound });
        }
        let n = grid.n();
        let mut ez = Vec::with_capacity(n);
        let mut phi1_dt = Vec::with_capacity(n);
        let mut phi2_dt = Vec::with_capacity(n);
        let mut ik = Vec::with_capacity(n);
        for b in 0..n {
            let k = grid.wavenumber(b) as f64;
            // stiff part: u_t = (i d dxx - i zeta - mu) u
            let lam = Complex64::new(-p.mu, -(p.d * k * k + p.zeta));
            let z = lam * dt;
            ez.push(z.exp());
            phi1_dt.push(phi1(z) * dt);
            phi2_dt.push(phi2(z) * dt);
            let kk = if b == n / 2 { 0.0 } else { k };
            ik.push(Complex64::new(0.0, kk));
        }
        Ok(Self {
            grid: grid.clone(),
            dt,
            eps: p.eps,
            f0: p.f0,
            vx: p.potential.sample(&grid),
            ez,
            phi1_dt,
            phi2_dt,
            ik,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// N(u) = eps V u_x + i |u|^2 u + f0, returned as coefficients, with the
    /// cubic dealiased on the 3/2-padded grid.
    fn nonlinear(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n();
        let mut m = 3 * n / 2;
        if m % 2 != 0 {
            m += 1;
        }
        // derivative values
        let dcoeffs: Vec<Complex64> = coeffs.iter().zip(&self.ik).map(|(c, ik)| c * ik).collect();
        let dvals = field::inverse_raw(n, &dcoeffs);
        // cubic on the padded grid
        let vals_m = field::inverse_raw(m, &field::pad_spectrum(coeffs, m));
        let cubic_m: Vec<Complex64> = vals_m.iter().map(|v| v * v.norm_sqr()).collect();
        let cubic_coeffs = field::truncate_spectrum(&field::forward_raw(m, &cubic_m), n);
        // advection in physical space
        let adv: Vec<Complex64> = dvals
            .iter()
            .zip(&self.vx)
            .map(|(d, v)| self.eps * v * d)
            .collect();
        let mut out = field::forward_raw(n, &adv);
        for b in 0..n {
            out[b] += Complex64::new(0.0, 1.0) * cubic_coeffs[b];
        }
        out[0] += Complex64::new(self.f0, 0.0);
        out
    }

    /// One ETD2RK step on spectral coefficients.
    pub fn step_coeffs(&self, coeffs: &mut Vec<Complex64>) {
        let n = coeffs.len();
        let nc = self.nonlinear(coeffs);
        let mut a = vec![Complex64::ZERO; n];
        for b in 0..n {
            a[b] = self.ez[b] * coeffs[b] + self.phi1_dt[b] * nc[b];
        }
        let na = self.nonlinear(&a);
        for b in 0..n {
            coeffs[b] = a[b] + self.phi2_dt[b] * (na[b] - nc[b]);
        }
    }
}

/// One step of the scheme on a field.
pub fn step(u: &Field, p: &Params, dt: f64) -> Result<Field, EvolutionError> {
    let stepper = Stepper::new(u.grid().clone(), p, dt)?;
    let mut coeffs = u.coeffs().to_vec();
    stepper.step_coeffs(&mut coeffs);
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(EvolutionError::BlowUp(dt));
    }
    Ok(Field::from_coeffs(u.grid().clone(), coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Decays,
    Grows,
    Inconclusive,
}

/// Deviation history and the fitted exponential rate.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub times: Vec<f64>,
    /// H1 deviations from the reference state at the recorded times
    pub deviations: Vec<f64>,
    pub deviations_l2: Vec<f64>,
    /// |slope| of the log-linear fit; only reported when the fit correlation
    /// is at least 0.98 in magnitude
    pub eta: Option<f64>,
    /// signed slope of ln(deviation) vs t over the fit window
    pub slope: f64,
    pub correlation: f64,
    pub fit_window: (f64, f64),
    pub verdict: Verdict,
    pub blowup_time: Option<f64>,
}

/// Integrate from u* + scale * perturbation and fit the exponential rate of
/// the H1 deviation on the window where it lies in [1e-8, 1e-3].
pub fn evolve_and_fit(
    u_star: &Field,
    p: &Params,
    cfg: &EvolutionConfig,
) -> Result<DecayFit, EvolutionError> {
    let norm = u_star.l2_norm();
    if cfg.perturbation_scale > 1e-2 * norm {
        return Err(EvolutionError::PerturbationTooLarge {
            scale: cfg.perturbation_scale,
            norm,
        });
    }
    let stepper = Stepper::new(u_star.grid().clone(), p, cfg.dt)?;
    let scale = Complex64::new(cfg.perturbation_scale, 0.0);
    let u0 = u_star.add(&cfg.perturbation.scale(scale));
    let mut coeffs = u0.coeffs().to_vec();
    let star = u_star.coeffs().to_vec();
    let grid = u_star.grid().clone();
    let n = grid.n();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut times = Vec::new();
    let mut devs = Vec::new();
    let mut devs_l2 = Vec::new();
    let mut blowup_time = None;
    let record = cfg.record_every.max(1);
    let h1_dev = |c: &[Complex64]| -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s0 = 0.0;
        for b in 0..n {
            let k2 = (grid.wavenumber(b) as f64).powi(2);
            let d2 = (c[b] - star[b]).norm_sqr();
            s0 += d2;
            s1 += (1.0 + k2) * d2;
        }
        let tp = 2.0 * std::f64::consts::PI;
        ((s1 * tp).sqrt(), (s0 * tp).sqrt())
    };
    let (d0, d0l2) = h1_dev(&coeffs);
    times.push(0.0);
    devs.push(d0);
    devs_l2.push(d0l2);
    'outer: for i in 1..=steps {
        stepper.step_coeffs(&mut coeffs);
        if i % record == 0 || i == steps {
            let t = i as f64 * cfg.dt;
            if coeffs
                .iter()
                .any(|c| !c.re.is_finite() || !c.im.is_finite())
            {
                blowup_time = Some(t);
                break 'outer;
            }
            let (d1, dl2) = h1_dev(&coeffs);
            times.push(t);
            devs.push(d1);
            devs_l2.push(dl2);
        }
    }
    // log-linear fit on the magnitude window
    let window: Vec<(f64, f64)> = times
        .iter()
        .zip(&devs)
        .filter(|(_, &d)| d > 1e-8 && d < 1e-3)
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    let (slope, correlation, fit_window) = if window.len() >= 3 {
        let m = window.len() as f64;
        let mx = window.iter().map(|(t, _)| t).sum::<f64>() / m;
        let my = window.iter().map(|(_, y)| y).sum::<f64>() / m;
        let sxy: f64 = window.iter().map(|(t, y)| (t - mx) * (y - my)).sum();
        let sxx: f64 = window.iter().map(|(t, _)| (t - mx).powi(2)).sum();
        let syy: f64 = window.iter().map(|(_, y)| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let corr = if sxx > 0.0 && syy > 0.0 {
            sxy / (sxx * syy).sqrt()
        } else {
            0.0
        };
        (
            slope,
            corr,
            (window[0].0, window[window.len() - 1].0),
        )
    } else {
        (0.0, 0.0, (0.0, 0.0))
    };
    let verdict = if blowup_time.is_some() && slope <= 0.0 {
        Verdict::Inconclusive
    } else if correlation.abs() >= 0.98 && slope < 0.0 {
        Verdict::Decays
    } else if (correlation.abs() >= 0.98 && slope > 0.0) || blowup_time.is_some() {
        Verdict::Grows
    } else {
        Verdict::Inconclusive
    };
    let eta = if correlation.abs() >= 0.98 {
        Some(slope.abs())
    } else {
        None
    };
    Ok(DecayFit {
        times,
        deviations: devs,
        deviations_l2: devs_l2,
        eta,
        slope,
        correlation,
        fit_window,
        verdict,
        blowup_time,
    })
}
