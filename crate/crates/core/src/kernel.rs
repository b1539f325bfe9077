//! The interior kernel equation and its asymptotic root quantities.
//!
//! A product form `gamma^m delta^n theta` solves the interior balance
//! equations exactly when `(gamma, delta)` lies on the kernel curve
//!
//! ```text
//! 2 (1 + rho) gamma delta - 2 rho delta^2 - gamma^2 - gamma delta^2 = 0
//! ```
//!
//! For a fixed member of a pair the curve is a quadratic in the other; the
//! compensation ladder always takes the smaller-magnitude root. Roots are
//! computed through the product-of-roots form so the tiny root never suffers
//! cancellation.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Real roots governing the asymptotics of the compensation ladder.
///
/// `w_minus < w_plus` solve `2 rho w^2 - 2 (1 + rho) w + 1 = 0`, so
/// `w_minus w_plus = 1 / (2 rho)`, and `s_pm = 1 + rho ± sqrt(1 + rho^2)
/// = 2 rho w_pm`. Along the ladder `delta_i / gamma_i -> w_minus` and
/// `gamma_{i+1} / delta_i -> 1 / w_plus`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRoots {
    pub w_minus: f64,
    pub w_plus: f64,
    pub s_minus: f64,
    pub s_plus: f64,
}

/// Left-hand side of the kernel equation at `(gamma, delta)`.
pub fn kernel_value(params: &ModelParams, gamma: f64, delta: f64) -> f64 {
    let rho = params.rho();
    2.0 * (rho + 1.0) * gamma * delta
        - 2.0 * rho * delta * delta
        - gamma * gamma
        - gamma * delta * delta
}

/// Kernel residual relative to the largest term, for root-quality checks.
pub fn kernel_residual_rel(params: &ModelParams, gamma: f64, delta: f64) -> f64 {
    let rho = params.rho();
    let scale = [
        2.0 * (rho + 1.0) * gamma * delta,
        2.0 * rho * delta * delta,
        gamma * gamma,
        gamma * delta * delta,
    ]
    .into_iter()
    .fold(0.0f64, |a, t| a.max(t.abs()));
    if scale == 0.0 {
        0.0
    } else {
        kernel_value(params, gamma, delta).abs() / scale
    }
}

/// The unique kernel root `delta` with `0 < |delta| < |gamma|`, for fixed
/// `gamma` with `0 < |gamma| < 1`.
///
/// In `delta` the kernel reads `(2 rho + gamma) delta^2
/// - 2 (1 + rho) gamma delta + gamma^2 = 0`; the smaller root is
/// `gamma / (1 + rho + sqrt(1 + rho^2 - gamma))`, valid for either sign of
/// `gamma`.
pub fn delta_given_gamma(params: &ModelParams, gamma: f64) -> Result<f64> {
    params.require_stable()?;
    if gamma.is_nan() || gamma == 0.0 || gamma.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "delta_given_gamma needs 0 < |gamma| < 1, got {gamma}"
        )));
    }
    let rho = params.rho();
    let disc = 1.0 + rho * rho - gamma;
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "negative discriminant {disc} in the delta solve; real ladder left"
        )));
    }
    Ok(gamma / (1.0 + rho + disc.sqrt()))
}

/// The unique kernel root `gamma` with `0 < |gamma| < |delta|`, for fixed
/// `delta` with `0 < |delta| < 1`.
///
/// In `gamma` the kernel reads `gamma^2 - (2 (1 + rho) delta
/// - delta^2) gamma + 2 rho delta^2 = 0`; through the product of roots
/// `2 rho delta^2` the smaller root is
/// `4 rho delta / (2 (1 + rho) - delta + sqrt((2 (1 + rho) - delta)^2 - 8 rho))`.
pub fn gamma_given_delta(params: &ModelParams, delta: f64) -> Result<f64> {
    params.require_stable()?;
    if delta.is_nan() || delta == 0.0 || delta.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "gamma_given_delta needs 0 < |delta| < 1, got {delta}"
        )));
    }
    let rho = params.rho();
    let u = 2.0 * (1.0 + rho) - delta;
    let disc = u * u - 8.0 * rho;
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "negative discriminant {disc} in the gamma solve; real ladder left"
        )));
    }
    Ok(4.0 * rho * delta / (u + disc.sqrt()))
}

/// The asymptotic roots `w_pm`, `s_pm`; requires stability.
pub fn asymptotic_roots(params: &ModelParams) -> Result<KernelRoots> {
    params.require_stable()?;
    let rho = params.rho();
    let sq = (1.0 + rho * rho).sqrt();
    let w_plus = (1.0 + rho + sq) / (2.0 * rho);
    // product of roots: w- w+ = 1 / (2 rho); avoids the subtractive form
    let w_minus = 1.0 / (2.0 * rho * w_plus);
    Ok(KernelRoots {
        w_minus,
        w_plus,
        s_minus: 2.0 * rho * w_minus,
        s_plus: 2.0 * rho * w_plus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(l: f64, m: f64, a: f64) -> ModelParams {
        ModelParams::new(l, m, a).unwrap()
    }

    #[test]
    fn kernel_value_examples() {
        let params = p(2.0, 10.0, 3.0);
        let rho = params.rho();
        let g0 = rho * rho;
        let d0 = rho * rho / (2.0 + rho);
        assert!(kernel_residual_rel(&params, g0, d0) < 1e-15);
        assert_eq!(kernel_value(&params, 0.0, 0.0), 0.0);
        // hand arithmetic: 19/30 - 4/30 - 1/4 - 1/8 = 1/8
        let v = kernel_value(&params, 0.5, 0.5);
        assert!((v - 0.125).abs() < 1e-12, "{v}");
    }

    #[test]
    fn delta_solve_examples() {
        let params = p(2.0, 10.0, 3.0);
        let rho = params.rho();
        let d0 = delta_given_gamma(&params, rho * rho).unwrap();
        assert!((d0 - rho * rho / (2.0 + rho)).abs() < 1e-15);
        assert!((d0 - 0.03137254901960784).abs() < 1e-15);

        // chained: the companion gamma step keeps the ladder ordered
        let g1 = gamma_given_delta(&params, d0).unwrap();
        let d1 = delta_given_gamma(&params, g1).unwrap();
        assert!(d1.abs() < g1.abs() && g1.abs() < d0.abs());
        assert!(kernel_residual_rel(&params, g1, d1) < 1e-13);

        assert!(delta_given_gamma(&params, 0.0).is_err());
        assert!(delta_given_gamma(&params, 1.0).is_err());
        assert!(delta_given_gamma(&p(1.0, 1.0, 1.0), 0.5).is_err()); // unstable
    }

    #[test]
    fn gamma_solve_examples() {
        let params = p(2.0, 10.0, 3.0);
        let rho = params.rho();
        let d0 = rho * rho / (2.0 + rho);
        let g1 = gamma_given_delta(&params, d0).unwrap();
        assert!((g1 - 0.007381776239907727).abs() < 1e-15);
        assert!(g1.abs() < d0.abs());
        assert!(kernel_residual_rel(&params, g1, d0) < 1e-13);

        // as delta -> 0, gamma/delta -> 1/w+
        let roots = asymptotic_roots(&params).unwrap();
        let tiny = 1e-9;
        let g = gamma_given_delta(&params, tiny).unwrap();
        assert!((g / tiny - 1.0 / roots.w_plus).abs() < 1e-8);
    }

    #[test]
    fn asymptotic_root_examples() {
        let params = p(2.0, 10.0, 3.0);
        let r = asymptotic_roots(&params).unwrap();
        assert!((r.w_minus - 0.434478162967497).abs() < 1e-12);
        assert!((r.w_plus - 4.315521837032503).abs() < 1e-12);
        assert!((r.s_plus - 2.301611646417335).abs() < 1e-12);
        assert!((r.w_minus * r.w_plus - 1.0 / (2.0 * params.rho())).abs() < 1e-14);
        assert!(asymptotic_roots(&p(1.0, 1.0, 1.0)).is_err());
    }

    proptest! {
        /// Bracketing from the contraction argument: for |gamma| < gamma_0 the
        /// delta root satisfies |delta| < |gamma| / 2; for |delta| <= gamma_0/3
        /// the gamma root satisfies |gamma| < (2/3) |delta|. Both solvers land
        /// on the kernel curve.
        #[test]
        fn root_bracketing(lam in 0.2f64..10.0, mu in 0.2f64..10.0, alpha in 0.2f64..10.0) {
            let params = ModelParams::new(lam, mu, alpha).unwrap();
            prop_assume!(params.rho() < 0.95);
            let g0 = params.rho() * params.rho();
            let mut gamma = g0 * 0.999;
            for _ in 0..6 {
                let delta = delta_given_gamma(&params, gamma).unwrap();
                prop_assert!(delta.abs() < gamma.abs() / 2.0);
                prop_assert!(kernel_residual_rel(&params, gamma, delta) < 1e-12);
                if delta.abs() <= g0 / 3.0 {
                    let g_next = gamma_given_delta(&params, delta).unwrap();
                    prop_assert!(g_next.abs() < 2.0 / 3.0 * delta.abs());
                    prop_assert!(kernel_residual_rel(&params, g_next, delta) < 1e-12);
                    gamma = g_next;
                } else {
                    gamma = delta * 0.9;
                }
                if gamma.abs() < 1e-200 { break; }
            }
        }

        /// Vieta product for the asymptotic roots.
        #[test]
        fn w_product(lam in 0.2f64..10.0, mu in 0.2f64..10.0, alpha in 0.2f64..10.0) {
            let params = ModelParams::new(lam, mu, alpha).unwrap();
            prop_assume!(params.rho() < 1.0);
            let r = asymptotic_roots(&params).unwrap();
            prop_assert!((r.w_minus * r.w_plus - 1.0 / (2.0 * params.rho())).abs() < 1e-14);
            prop_assert!((r.s_minus - (1.0 + params.rho() - (1.0 + params.rho()*params.rho()).sqrt())).abs() < 1e-12);
            prop_assert!(r.w_minus > 0.0 && r.w_minus < 1.0 && r.w_plus > 1.0);
        }
    }
}
