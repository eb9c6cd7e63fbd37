use lle::field::{Field, PotentialSpec, TorusGrid};
use lle::stationary::*;
use std::sync::Arc;

fn main() {
    let p = Params {
        d: 0.1, zeta: 3.7, mu: 1.0, f0: 2.0, eps: 0.0,
        potential: PotentialSpec::mean_plus_cosine(0.1, 0.5),
    };
    for n in [64usize, 128] {
        let g = Arc::new(TorusGrid::new(n).unwrap());
        let guess = initial_guess(&GuessKind::Bright, &p, &g).unwrap();
        let rep = newton_solve(&guess, &p, PhaseFix::EvenSubspace).unwrap();
        println!("n={n}: converged={} res={:.3e} iters={} history tail={:?}",
            rep.converged, rep.residual_norm, rep.iterations,
            &rep.history[rep.history.len().saturating_sub(4)..]);
    }
    // reduced dual-pump ramp debug
    use lle::reductions::*;
    let dp = DualPumpParams { d: 0.1, zeta: 3.7, mu: 1.0, f0: 2.0, f1: 0.1, k1: 1, nu1: 0.002 };
    let g = Arc::new(TorusGrid::new(256).unwrap());
    let (pr, _) = dual_pump_reduce(&dp).unwrap();
    let amp = 2.0 * dp.d_eff().abs() * dp.beta().abs();
    let xi0 = (dp.nu1 / amp).acos();
    println!("xi0 = {xi0}");
    let base = initial_guess(&GuessKind::Bright, &pr.with_eps(0.0), &g).unwrap().shift(xi0);
    println!("guess residual at eps=0: {:.3e}", residual_norm(&base, &pr.with_eps(0.0)));
    let mut cur = base;
    for eps in [0.25, 0.5, 0.75, 1.0] {
        let pe = pr.with_eps(eps);
        let rep = newton_solve(&cur, &pe, PhaseFix::None).unwrap();
        println!("eps={eps}: converged={} res={:.3e} iters={} tail={:?}",
            rep.converged, rep.residual_norm, rep.iterations,
            &rep.history[rep.history.len().saturating_sub(3)..]);
        cur = rep.solution;
    }
}
