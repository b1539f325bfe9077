//! Ladder asymptotics over random stable parameter sets: interleaving,
//! geometric bounds, kernel membership and the four ratio limits, checked by
//! rebuilding the ladder from the public single-step operations.

use jsoq::compensation::{
    coefficient_c, coefficient_h, coefficient_ratio_limit, phase_vector, starting_pair, xi_initial,
    xi_step, CompensationSeries,
};
use jsoq::kernel::{asymptotic_roots, delta_given_gamma, gamma_given_delta, kernel_residual_rel};
use jsoq::linalg::Vec2;
use jsoq::model::{LevelMatrices, ModelParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_stable(rng: &mut StdRng, rho_cap: f64) -> ModelParams {
    loop {
        let lam = rng.random_range(0.2..10.0);
        let mu = rng.random_range(0.2..10.0);
        let alpha = rng.random_range(0.2..10.0);
        if let Ok(p) = ModelParams::new(lam, mu, alpha) {
            if p.rho() < rho_cap {
                return p;
            }
        }
    }
}

struct Ladder {
    gammas: Vec<f64>,
    deltas: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    xi: Vec<Vec2>,
}

/// Rebuilds the compensation ladder from the individual public steps,
/// independent of `CompensationSeries::build` and with a fixed pair count.
fn build_ladder(p: &ModelParams, pairs: usize) -> Ladder {
    let theta = phase_vector(p, p.mu());
    let (g0, d0) = starting_pair(p).unwrap();
    let mut l = Ladder {
        gammas: vec![g0],
        deltas: vec![d0],
        h: vec![1.0],
        c: vec![0.0],
        xi: vec![xi_initial(p, 1.0, g0, d0, theta).unwrap()],
    };
    for i in 0..pairs {
        let g_next = gamma_given_delta(p, l.deltas[i]).unwrap();
        let c_next = coefficient_c(p, l.gammas[i], g_next, l.deltas[i], l.h[i]).unwrap();
        let d_next = delta_given_gamma(p, g_next).unwrap();
        let h_next = coefficient_h(p, g_next, l.deltas[i], d_next, c_next).unwrap();
        l.xi.push(xi_step(p, g_next, l.deltas[i], d_next, c_next, h_next, theta).unwrap());
        l.gammas.push(g_next);
        l.deltas.push(d_next);
        l.c.push(c_next);
        l.h.push(h_next);
    }
    l
}

#[test]
fn ratio_limits_hold_at_index_25_over_100_random_triples() {
    let mut rng = StdRng::seed_from_u64(20260810);
    for trial in 0..100 {
        let p = random_stable(&mut rng, 0.9);
        let l = build_ladder(&p, 27);
        let roots = asymptotic_roots(&p).unwrap();
        let c_over_h = coefficient_ratio_limit(&p).unwrap();
        // root ratios are already tight by step 20
        assert!((l.deltas[20] / l.gammas[20] - roots.w_minus).abs() < 1e-8);
        assert!((l.gammas[21] / l.deltas[20] - 1.0 / roots.w_plus).abs() < 1e-8);
        let i = 25;
        let e1 = (l.deltas[i] / l.gammas[i] - roots.w_minus).abs();
        let e2 = (l.gammas[i + 1] / l.deltas[i] - 1.0 / roots.w_plus).abs();
        let e3 = (l.h[i] / l.c[i] + roots.w_plus / roots.w_minus).abs();
        let e4 = (l.c[i + 1] / l.h[i] - c_over_h).abs();
        for (name, e) in [("d/g", e1), ("g'/d", e2), ("h/c", e3), ("c'/h", e4)] {
            assert!(
                e < 1e-6,
                "trial {trial} {:?}: ratio {name} off by {e:e}",
                (p.lambda(), p.mu(), p.alpha())
            );
        }
    }
}

#[test]
fn interleaving_bounds_and_kernel_membership_over_random_triples() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..100 {
        let p = random_stable(&mut rng, 0.9);
        let l = build_ladder(&p, 20);
        let rho = p.rho();
        let d0 = rho * rho / (2.0 + rho);
        for i in 0..20 {
            assert!(l.gammas[i] > l.deltas[i] && l.deltas[i] > l.gammas[i + 1]);
            assert!(l.gammas[i + 1] > 0.0);
            // geometric envelopes: gamma_i <= (1/3)^i rho^2, delta_i <= (1/3)^i delta_0
            assert!(l.gammas[i] <= (1.0f64 / 3.0).powi(i as i32) * rho * rho * (1.0 + 1e-12));
            assert!(l.deltas[i] <= (1.0f64 / 3.0).powi(i as i32) * d0 * (1.0 + 1e-12));
            assert!(kernel_residual_rel(&p, l.gammas[i], l.deltas[i]) < 1e-12);
            assert!(kernel_residual_rel(&p, l.gammas[i + 1], l.deltas[i]) < 1e-12);
        }
    }
}

#[test]
fn busy_probability_equals_utilization_over_random_triples() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..20 {
        let p = random_stable(&mut rng, 0.9);
        let s = CompensationSeries::build(&p, 1e-12, 2000).unwrap();
        let m = s.measures();
        assert!(
            (m.p_busy - p.lambda() / p.mu()).abs() < 1e-9,
            "{:?}: P_busy = {}, lambda/mu = {}",
            (p.lambda(), p.mu(), p.alpha()),
            m.p_busy,
            p.lambda() / p.mu()
        );
    }
}

#[test]
fn xi_vectors_decay_with_the_ladder() {
    let p = ModelParams::new(2.0, 10.0, 3.0).unwrap();
    let l = build_ladder(&p, 27);
    let roots = asymptotic_roots(&p).unwrap();
    let b = LevelMatrices::new(&p);
    let c00_inv = b.c00.inverse().unwrap();
    let theta = phase_vector(&p, p.mu());
    let i = 25;
    // all boundary-vector terms vanish together in the tail
    let drive = c00_inv * (b.a1m1 * (theta * (l.h[i] * roots.w_minus + roots.w_plus * l.c[i])));
    let combo = l.xi[i] + l.xi[i - 1] * (roots.w_plus / roots.w_minus) + drive;
    assert!(combo.abs_max() < 1e-8);
    assert!(l.xi[i].abs_max() < l.xi[10].abs_max());
    // the xi sequence tracks -C00^{-1} A1m1 (c_i w+ + h_i w-) theta asymptotically
    assert!((l.xi[i] + drive).abs_max() < 1e-8);
}
