//! The compensation series: an evaluable exact stationary distribution built
//! as an alternating sum of kernel product forms.
//!
//! Construction, with `theta = theta_0 (1, (lambda + 2 alpha) / mu)` the
//! interior phase vector:
//!
//! * start from the pair `gamma_0 = rho^2`, `delta_0 = rho^2 / (2 + rho)`,
//!   the unique kernel pair compatible with the horizontal boundary;
//! * alternately compensate the vertical boundary (new `gamma_{i+1}` with the
//!   old `delta_i`, coefficient `c_{i+1}`) and the horizontal boundary (new
//!   `delta_{i+1}` with coefficient `h_{i+1}` and boundary vector `xi_{i+1}`).
//!
//! Two boundary subtleties make the result exact (both confirmed against the
//! brute-force oracle to machine precision):
//!
//! * On the column `m = 0` only the busy component continues the product
//!   form; the idle component is recovered from the vertical-boundary phase
//!   balance `mu q_{0,n}(1) = (lambda + alpha) q_{0,n}(0)`, i.e. the column
//!   uses its own phase vector
//!   `theta_b = (mu theta_1 / (lambda + alpha), theta_1)`.
//! * The vertical compensation coefficient is fixed by the scalar boundary
//!   condition `h_i w(gamma_i, delta_i) + c_{i+1} w(gamma_{i+1}, delta_i) = 0`
//!   with `w(gamma, delta) = delta (lambda theta_b0 - (lambda + mu) theta_1
//!   + alpha delta theta_b0) + alpha theta_0 gamma`.
//!
//! The row `n = 0` is carried by vectors `xi_i` obtained by matching the
//! `gamma_i^m` coefficients of the horizontal boundary equation, and the
//! corner is `q(0,0) = -A00^{-1} A0m1 q(0,1)`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::kernel::{asymptotic_roots, delta_given_gamma, gamma_given_delta};
use crate::linalg::Vec2;
use crate::model::{LevelMatrices, ModelParams, Provenance, Server, StationaryField};

/// Evaluations more negative than this are a truncation failure; anything in
/// `(-NEGATIVE_EVAL_FLOOR, 0)` is reported through the tiny-negative counter.
pub const NEGATIVE_EVAL_FLOOR: f64 = 1e-12;

/// The unique starting pair `(gamma_0, delta_0) = (rho^2, rho^2 / (2 + rho))`.
pub fn starting_pair(params: &ModelParams) -> Result<(f64, f64)> {
    params.require_stable()?;
    let rho = params.rho();
    Ok((rho * rho, rho * rho / (2.0 + rho)))
}

/// Interior phase vector for a given scale `theta_0 > 0`.
pub fn phase_vector(params: &ModelParams, theta0: f64) -> Vec2 {
    Vec2(
        theta0,
        theta0 * (params.lambda() + 2.0 * params.alpha()) / params.mu(),
    )
}

/// Phase vector of the `m = 0` column: busy component as in the interior,
/// idle component from `mu q(1) = (lambda + alpha) q(0)`.
pub fn boundary_phase_vector(params: &ModelParams, theta: Vec2) -> Vec2 {
    Vec2(
        params.mu() * theta.1 / (params.lambda() + params.alpha()),
        theta.1,
    )
}

/// Scalar carrying the vertical-boundary balance of one product form.
fn vertical_boundary_weight(params: &ModelParams, theta: Vec2, gamma: f64, delta: f64) -> f64 {
    let (lam, mu, alpha) = (params.lambda(), params.mu(), params.alpha());
    let tb = boundary_phase_vector(params, theta);
    delta * (lam * tb.0 - (lam + mu) * tb.1 + alpha * delta * tb.0) + alpha * theta.0 * gamma
}

/// Vertical-compensation coefficient `c_{i+1}` for the pair
/// `(gamma_{i+1}, delta_i)` cancelling the boundary error of
/// `h_i gamma_i^m delta_i^n`.
pub fn coefficient_c(
    params: &ModelParams,
    gamma_i: f64,
    gamma_ip1: f64,
    delta_i: f64,
    h_i: f64,
) -> Result<f64> {
    let theta = phase_vector(params, params.mu());
    let num = vertical_boundary_weight(params, theta, gamma_i, delta_i);
    let den = vertical_boundary_weight(params, theta, gamma_ip1, delta_i);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate(format!(
            "vanishing vertical-boundary weight at gamma = {gamma_ip1}, delta = {delta_i}"
        )));
    }
    Ok(-h_i * num / den)
}

/// Horizontal-compensation coefficient `h_{i+1}` for the pair
/// `(gamma_{i+1}, delta_{i+1})`.
pub fn coefficient_h(
    params: &ModelParams,
    gamma_ip1: f64,
    delta_i: f64,
    delta_ip1: f64,
    c_ip1: f64,
) -> Result<f64> {
    if delta_i == 0.0 || delta_ip1 == 0.0 {
        return Err(Error::Degenerate(
            "vanishing delta in horizontal compensation".into(),
        ));
    }
    let rho = params.rho();
    let num = (rho + gamma_ip1) / delta_ip1 - (1.0 + rho);
    let den = (rho + gamma_ip1) / delta_i - (1.0 + rho);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate(format!(
            "vanishing denominator in the h step at gamma = {gamma_ip1}, delta = {delta_i}"
        )));
    }
    Ok(-c_ip1 * num / den)
}

/// Boundary vector of the initial solution:
/// `xi_0 = -(h_0 / gamma_0) C00^{-1} (A1m1 + gamma_0 A0m1) delta_0 theta`.
pub fn xi_initial(
    params: &ModelParams,
    h0: f64,
    gamma0: f64,
    delta0: f64,
    theta: Vec2,
) -> Result<Vec2> {
    xi_for_group(params, gamma0, 0.0, delta0, 0.0, h0, theta)
}

/// Boundary vector of the `gamma_i` group, from matching the `gamma_i^m`
/// coefficient of the horizontal boundary equation:
/// `xi_i = -(1 / gamma_i) C00^{-1} (A1m1 + gamma_i A0m1)
/// (c_i delta_{i-1} + h_i delta_i) theta`.
pub fn xi_step(
    params: &ModelParams,
    gamma_i: f64,
    delta_im1: f64,
    delta_i: f64,
    c_i: f64,
    h_i: f64,
    theta: Vec2,
) -> Result<Vec2> {
    xi_for_group(params, gamma_i, delta_im1, delta_i, c_i, h_i, theta)
}

fn xi_for_group(
    params: &ModelParams,
    gamma: f64,
    delta_prev: f64,
    delta_cur: f64,
    c: f64,
    h: f64,
    theta: Vec2,
) -> Result<Vec2> {
    if gamma == 0.0 {
        return Err(Error::Degenerate("vanishing gamma in the xi step".into()));
    }
    let b = LevelMatrices::new(params);
    let c00_inv = b.c00.inverse()?;
    let weight = c * delta_prev + h * delta_cur;
    let coupling = b.a1m1 + gamma * b.a0m1;
    Ok(-((c00_inv * (coupling * (theta * weight))) * (1.0 / gamma)))
}

/// Limit of `c_{i+1} / h_i` along the ladder, from the vertical-boundary
/// weight and the root asymptotics; also the asymptotic step ratio of the
/// normalization sum, which drives the stopping rule.
pub fn coefficient_ratio_limit(params: &ModelParams) -> Result<f64> {
    let roots = asymptotic_roots(params)?;
    let (lam, mu, alpha) = (params.lambda(), params.mu(), params.alpha());
    let theta = phase_vector(params, mu);
    let tb = boundary_phase_vector(params, theta);
    let e = lam * tb.0 - (lam + mu) * theta.1;
    let am = alpha * theta.0;
    Ok(-(e + am / roots.w_minus) / (e + am / roots.w_plus))
}

/// Performance measures derived from the series in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures {
    pub p_busy: f64,
    pub mean_min: f64,
    pub mean_diff: f64,
    pub mean_total_orbit: f64,
    /// Aggregates `q(0,n,0) + q(0,n,1)` for `n = 0..4`.
    pub q0_row: [f64; 4],
}

/// A built, normalized compensation series. Immutable after construction and
/// safe to evaluate concurrently.
#[derive(Debug)]
pub struct CompensationSeries {
    params: ModelParams,
    /// `gamma_0 ..= gamma_{T+1}`
    gammas: Vec<f64>,
    /// `delta_0 ..= delta_T`
    deltas: Vec<f64>,
    /// `h_0 ..= h_T`
    h: Vec<f64>,
    /// `c_0 = 0` placeholder, then `c_1 ..= c_{T+1}`
    c: Vec<f64>,
    /// `xi_0 ..= xi_{T+1}`; the final entry closes the `gamma_{T+1}` group
    /// whose `h`-part was truncated away.
    xi: Vec<Vec2>,
    theta: Vec2,
    theta_boundary: Vec2,
    corner: Vec2,
    norm_const: f64,
    term_count: usize,
    tolerance_achieved: f64,
    tiny_negative_evals: AtomicU64,
}

impl CompensationSeries {
    /// Builds with the canonical scale `h_0 = 1`, `theta_0 = mu`.
    pub fn build(params: &ModelParams, tol: f64, max_terms: usize) -> Result<CompensationSeries> {
        CompensationSeries::build_scaled(params, tol, max_terms, 1.0, params.mu())
    }

    /// Builds with an explicit scale; normalization removes it, so the
    /// resulting field is identical for any positive `h0`, `theta0`.
    pub fn build_scaled(
        params: &ModelParams,
        tol: f64,
        max_terms: usize,
        h0: f64,
        theta0: f64,
    ) -> Result<CompensationSeries> {
        params.require_stable()?;
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        if h0.is_nan() || h0 <= 0.0 || theta0.is_nan() || theta0 <= 0.0 {
            return Err(Error::Domain("scale h0, theta0 must be positive".into()));
        }
        if max_terms < 3 {
            return Err(Error::Domain("max_terms must be at least 3".into()));
        }

        let theta = phase_vector(params, theta0);
        let theta_b = boundary_phase_vector(params, theta);
        let theta_sum = theta.sum();
        let theta_b_sum = theta_b.sum();
        let ratio_limit = coefficient_ratio_limit(params)?.abs();

        let (gamma0, delta0) = starting_pair(params)?;
        let mut gammas = vec![gamma0];
        let mut deltas = vec![delta0];
        let mut h = vec![h0];
        let mut c = vec![0.0];
        let mut xi = vec![xi_initial(params, h0, gamma0, delta0, theta)?];

        let geo = |x: f64| x / (1.0 - x);
        let mut partial = 0.0f64;
        let mut s_hist: Vec<f64> = Vec::new();
        let mut last_bound = f64::INFINITY;
        let mut tolerance_achieved = f64::INFINITY;
        let mut stopped = false;

        for i in 0.. {
            let gamma_next = gamma_given_delta(params, deltas[i])?;
            let c_next = coefficient_c(params, gammas[i], gamma_next, deltas[i], h[i])?;
            gammas.push(gamma_next);
            c.push(c_next);

            // index-i slice of the normalization sum and its absolute version
            let dgeo = geo(deltas[i]);
            let signed = (h[i] * geo(gammas[i]) + c_next * geo(gamma_next)) * dgeo * theta_sum
                + (h[i] + c_next) * dgeo * theta_b_sum
                + xi[i].sum() * geo(gammas[i]);
            let abs =
                (h[i].abs() * geo(gammas[i]) + c_next.abs() * geo(gamma_next)) * dgeo * theta_sum
                    + (h[i].abs() + c_next.abs()) * dgeo * theta_b_sum
                    + xi[i].abs_sum() * geo(gammas[i]);
            partial += signed;
            s_hist.push(abs);

            if i >= 2 {
                let r = (s_hist[i] / s_hist[i - 1])
                    .max(s_hist[i - 1] / s_hist[i - 2])
                    .max(ratio_limit);
                if r < 1.0 {
                    last_bound = s_hist[i] * r / (1.0 - r);
                    let scale = partial.abs().max(f64::MIN_POSITIVE);
                    if last_bound <= tol * scale {
                        tolerance_achieved = last_bound / scale;
                        stopped = true;
                        break;
                    }
                }
            }
            if i + 1 >= max_terms {
                return Err(Error::Truncation {
                    terms: max_terms,
                    achieved: last_bound,
                    tol,
                });
            }

            let delta_next = delta_given_gamma(params, gamma_next)?;
            let h_next = coefficient_h(params, gamma_next, deltas[i], delta_next, c_next)?;
            xi.push(xi_step(
                params, gamma_next, deltas[i], delta_next, c_next, h_next, theta,
            )?);
            deltas.push(delta_next);
            h.push(h_next);
        }
        debug_assert!(stopped);
        let term_count = deltas.len();

        // close the gamma_{T+1} group: its c-part was retained, its h-part not
        let t = term_count - 1;
        let xi_tail = xi_for_group(params, gammas[t + 1], deltas[t], 0.0, c[t + 1], 0.0, theta)?;
        partial += xi_tail.sum() * geo(gammas[t + 1]);
        xi.push(xi_tail);

        // corner q(0,0) = -A00^{-1} A0m1 q(0,1)
        let q01 = {
            let mut s = 0.0;
            for i in 0..term_count {
                s += (h[i] + c[i + 1]) * deltas[i];
            }
            theta_b * s
        };
        let b = LevelMatrices::new(params);
        let corner = -(b.a00.inverse()? * (b.a0m1 * q01));
        partial += corner.sum();

        if !partial.is_finite() || partial <= 0.0 {
            return Err(Error::Normalization(partial));
        }

        Ok(CompensationSeries {
            params: *params,
            gammas,
            deltas,
            h,
            c,
            xi,
            theta,
            theta_boundary: theta_b,
            corner,
            norm_const: partial,
            term_count,
            tolerance_achieved,
            tiny_negative_evals: AtomicU64::new(0),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// `h_0 ..= h_T`.
    pub fn coeffs_h(&self) -> &[f64] {
        &self.h
    }

    /// `c_0 = 0` placeholder, then `c_1 ..= c_{T+1}`.
    pub fn coeffs_c(&self) -> &[f64] {
        &self.c
    }

    pub fn xi(&self) -> &[Vec2] {
        &self.xi
    }

    pub fn theta(&self) -> Vec2 {
        self.theta
    }

    pub fn theta_boundary(&self) -> Vec2 {
        self.theta_boundary
    }

    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    /// Number of retained delta-pairs.
    pub fn term_count(&self) -> usize {
        self.term_count
    }

    /// Relative tail bound certified at the stopping index.
    pub fn tolerance_achieved(&self) -> f64 {
        self.tolerance_achieved
    }

    /// How many evaluations landed in `(-1e-12, 0)` so far; such values are
    /// returned as-is rather than clamped.
    pub fn tiny_negative_count(&self) -> u64 {
        self.tiny_negative_evals.load(Ordering::Relaxed)
    }

    /// Unnormalized state vector at `(m, n)`.
    fn unnormalized(&self, m: usize, n: usize) -> Vec2 {
        let t = self.term_count;
        if n >= 1 {
            let np = n.min(i32::MAX as usize) as i32;
            if m == 0 {
                let mut s = 0.0;
                for i in 0..t {
                    s += (self.h[i] + self.c[i + 1]) * self.deltas[i].powi(np);
                }
                return self.theta_boundary * s;
            }
            let mp = m.min(i32::MAX as usize) as i32;
            let mut s = 0.0;
            for i in 0..t {
                s += (self.h[i] * self.gammas[i].powi(mp)
                    + self.c[i + 1] * self.gammas[i + 1].powi(mp))
                    * self.deltas[i].powi(np);
            }
            return self.theta * s;
        }
        if m >= 1 {
            let mp = m.min(i32::MAX as usize) as i32;
            let mut s = Vec2::ZERO;
            for (i, xi) in self.xi.iter().enumerate() {
                s = s + *xi * self.gammas[i].powi(mp);
            }
            return s;
        }
        self.corner
    }

    fn raw_prob(&self, m: usize, n: usize, k: Server) -> f64 {
        let v = self.unnormalized(m, n).get(k.index()) / self.norm_const;
        if (-NEGATIVE_EVAL_FLOOR..0.0).contains(&v) {
            self.tiny_negative_evals.fetch_add(1, Ordering::Relaxed);
        }
        v
    }

    /// Normalized probability of `(m, n, k)`.
    ///
    /// Truncation can leave values a hair below zero; anything within
    /// `-1e-12` is reported via [`tiny_negative_count`](Self::tiny_negative_count)
    /// and returned unclamped, anything below that is an error.
    pub fn probability(&self, m: usize, n: usize, k: Server) -> Result<f64> {
        let v = self.raw_prob(m, n, k);
        if v < -NEGATIVE_EVAL_FLOOR {
            return Err(Error::TruncationTooCoarse { value: v });
        }
        Ok(v)
    }

    /// Closed-form performance measures; no truncation beyond the series
    /// itself.
    pub fn measures(&self) -> Measures {
        let geo = |x: f64| x / (1.0 - x);
        let arith = |x: f64| x / ((1.0 - x) * (1.0 - x));
        let t = self.term_count;
        let ts = self.theta.sum();
        let tbs = self.theta_boundary.sum();
        let mut busy = self.corner.1;
        let mut mean_min = 0.0;
        let mut mean_diff = 0.0;
        for i in 0..t {
            let (g, gn) = (self.gammas[i], self.gammas[i + 1]);
            let d = self.deltas[i];
            let (hi, cn) = (self.h[i], self.c[i + 1]);
            busy += (hi * geo(g) + cn * geo(gn)) * geo(d) * self.theta.1
                + (hi + cn) * geo(d) * self.theta_boundary.1;
            mean_min += (hi * arith(g) + cn * arith(gn)) * geo(d) * ts;
            mean_diff += (hi * geo(g) + cn * geo(gn)) * arith(d) * ts + (hi + cn) * arith(d) * tbs;
        }
        for (i, xi) in self.xi.iter().enumerate() {
            busy += xi.1 * geo(self.gammas[i]);
            mean_min += xi.sum() * arith(self.gammas[i]);
        }
        let c = self.norm_const;
        let q0_row = std::array::from_fn(|n| self.unnormalized(0, n).sum() / c);
        Measures {
            p_busy: busy / c,
            mean_min: mean_min / c,
            mean_diff: mean_diff / c,
            mean_total_orbit: (2.0 * mean_min + mean_diff) / c,
            q0_row,
        }
    }
}

impl StationaryField for CompensationSeries {
    fn provenance(&self) -> Provenance {
        Provenance::Compensation
    }

    fn evaluable(&self, _m: usize, _n: usize) -> bool {
        true
    }

    fn prob(&self, m: usize, n: usize, k: Server) -> f64 {
        self.raw_prob(m, n, k)
    }
}
