//! Model parameters, stability logic, the transformed-chain phase blocks and
//! the balance-equation residual check.
//!
//! The physical system is a single server fed by Poisson arrivals at rate
//! `lambda`, exponential service at rate `mu`, and two infinite orbits of
//! blocked jobs, each retrying at constant rate `alpha` while the server is
//! idle. A blocked arrival joins the shorter orbit, fair coin on ties. The
//! transformed chain tracks `m = min(Q1, Q2)`, `n = |Q2 - Q1|` and the server
//! state `k`, and is a QBD in the level `m` with 2x2 phase blocks.

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};

/// Server state, the phase of the transformed chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Server {
    Idle,
    Busy,
}

impl Server {
    pub const BOTH: [Server; 2] = [Server::Idle, Server::Busy];

    pub fn index(self) -> usize {
        match self {
            Server::Idle => 0,
            Server::Busy => 1,
        }
    }

    pub fn from_index(k: usize) -> Option<Server> {
        match k {
            0 => Some(Server::Idle),
            1 => Some(Server::Busy),
            _ => None,
        }
    }
}

/// Validated model parameters with the derived load.
///
/// The load is `rho = lambda (lambda + 2 alpha) / (2 alpha mu)`: the server is
/// busy a fraction `lambda / mu` of the time, in which case jobs stream into
/// the orbits at rate `lambda + 2 alpha` against a maximal retrial drain of
/// `2 alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    alpha: f64,
    rho: f64,
}

impl ModelParams {
    /// Constructs parameters. Stability is not required, only positivity.
    pub fn new(lambda: f64, mu: f64, alpha: f64) -> Result<ModelParams> {
        for (name, value) in [("lambda", lambda), ("mu", mu), ("alpha", alpha)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        let rho = lambda * (lambda + 2.0 * alpha) / (2.0 * alpha * mu);
        Ok(ModelParams {
            lambda,
            mu,
            alpha,
            rho,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn is_stable(&self) -> bool {
        self.rho < 1.0
    }

    /// Returns `Unstable` unless `rho < 1`.
    pub fn require_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable { rho: self.rho })
        }
    }

    pub fn stability(&self) -> StabilityReport {
        StabilityReport {
            rho: self.rho,
            stable: self.rho < 1.0,
            util: self.lambda / self.mu,
            empty_orbit1_idle_mass: 1.0 - self.rho,
        }
    }
}

/// Stability summary: `util` is the long-run busy fraction `lambda / mu`, and
/// `empty_orbit1_idle_mass` is the stationary mass of (orbit 1 empty, server
/// idle), equal to `1 - rho`; both are meaningful only when stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub rho: f64,
    pub stable: bool,
    pub util: f64,
    pub empty_orbit1_idle_mass: f64,
}

/// The eight 2x2 phase blocks of the transformed chain.
///
/// Subscripts are level/phase increments `(dm, dn)`: the block `A_{a,b}`
/// multiplies `q(m - a, n - b)` in the balance equation at `(m, n)`. The
/// diagonal corrections are `B00 = A00 - H` on the vertical boundary (one
/// orbit nonempty) and `C00 = A00 - 2H` in the interior (both nonempty).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMatrices {
    pub a00: Mat2,
    pub a01: Mat2,
    pub a0m1: Mat2,
    pub a1m1: Mat2,
    pub am11: Mat2,
    pub h: Mat2,
    pub b00: Mat2,
    pub c00: Mat2,
}

impl LevelMatrices {
    pub fn new(p: &ModelParams) -> LevelMatrices {
        let (lam, mu, alpha) = (p.lambda(), p.mu(), p.alpha());
        let a1m1 = Mat2::new(0.0, 0.0, 0.0, lam);
        let a0m1 = Mat2::new(0.0, 0.0, alpha, 0.0);
        let a00 = Mat2::new(-lam, mu, lam, -(lam + mu));
        let h = Mat2::new(alpha, 0.0, 0.0, 0.0);
        LevelMatrices {
            a00,
            a01: a1m1,
            a0m1,
            a1m1,
            am11: a0m1,
            h,
            b00: a00 - h,
            c00: a00 - (2.0 * h),
        }
    }
}

/// Where a stationary field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Compensation,
    Oracle,
    Simulation,
}

/// An evaluable stationary distribution over transformed states `(m, n, k)`.
pub trait StationaryField {
    fn provenance(&self) -> Provenance;

    /// Whether `(m, n)` lies inside the field's supported region.
    fn evaluable(&self, m: usize, n: usize) -> bool;

    /// Probability of state `(m, n, k)`. Only meaningful where `evaluable`.
    fn prob(&self, m: usize, n: usize, k: Server) -> f64;

    fn prob_vec(&self, m: usize, n: usize) -> Vec2 {
        Vec2(self.prob(m, n, Server::Idle), self.prob(m, n, Server::Busy))
    }
}

/// Maximum absolute balance-equation residual of `field` over the box
/// `[0, m_max] x [0, n_max]`.
///
/// The equation family is selected by region: the corner `(0,0)`, the vertical
/// boundary at `(0,1)` and `(0, n>=2)`, the horizontal boundary `(m>=1, 0)`,
/// the first interior row `(m>=1, 1)` and the interior `(m>=1, n>=2)`. The
/// field must be evaluable on `[0, m_max+1] x [0, n_max+1]`.
pub fn balance_residual<F: StationaryField + ?Sized>(
    field: &F,
    params: &ModelParams,
    m_max: usize,
    n_max: usize,
) -> Result<f64> {
    if !field.evaluable(m_max + 1, n_max + 1) {
        return Err(Error::Evaluation(format!(
            "balance residual needs the box [0,{}] x [0,{}]",
            m_max + 1,
            n_max + 1
        )));
    }
    let b = LevelMatrices::new(params);
    let q = |m: usize, n: usize| field.prob_vec(m, n);
    let mut worst = 0.0f64;
    for m in 0..=m_max {
        for n in 0..=n_max {
            let r = match (m, n) {
                (0, 0) => b.a00 * q(0, 0) + b.a0m1 * q(0, 1),
                (0, 1) => {
                    b.b00 * q(0, 1) + b.a0m1 * q(0, 2) + (2.0 * b.am11) * q(1, 0) + b.a01 * q(0, 0)
                }
                (0, n) => b.b00 * q(0, n) + b.a0m1 * q(0, n + 1) + b.am11 * q(1, n - 1),
                (m, 0) => b.c00 * q(m, 0) + b.a0m1 * q(m, 1) + b.a1m1 * q(m - 1, 1),
                (m, 1) => {
                    b.c00 * q(m, 1)
                        + b.a0m1 * q(m, 2)
                        + (2.0 * b.am11) * q(m + 1, 0)
                        + b.a1m1 * q(m - 1, 2)
                        + b.a01 * q(m, 0)
                }
                (m, n) => {
                    b.c00 * q(m, n)
                        + b.a0m1 * q(m, n + 1)
                        + b.a1m1 * q(m - 1, n + 1)
                        + b.am11 * q(m + 1, n - 1)
                }
            };
            worst = worst.max(r.abs_max());
        }
    }
    Ok(worst)
}

/// The four QBD blocks of the transformed chain, truncated to phases
/// `n <= phase_max`. Each is a dense `2(phase_max+1)` square matrix in
/// row-major order. Together they tile the transition-rate matrix
/// block-tridiagonally in the level `m`: `[T_bar0 T1; Tm1 T0 T1; ...]`.
#[derive(Debug, Clone)]
pub struct QbdBlocks {
    pub dim: usize,
    pub t_bar0: Vec<f64>,
    pub t0: Vec<f64>,
    pub t1: Vec<f64>,
    pub tm1: Vec<f64>,
}

pub fn qbd_blocks(params: &ModelParams, phase_max: usize) -> QbdBlocks {
    let b = LevelMatrices::new(params);
    let phases = phase_max + 1;
    let dim = 2 * phases;
    let mut t_bar0 = vec![0.0; dim * dim];
    let mut t0 = vec![0.0; dim * dim];
    let mut t1 = vec![0.0; dim * dim];
    let mut tm1 = vec![0.0; dim * dim];
    let put = |dst: &mut Vec<f64>, bi: usize, bj: usize, m: Mat2| {
        for r in 0..2 {
            for c in 0..2 {
                dst[(2 * bi + r) * dim + 2 * bj + c] = m.transpose().m[r][c];
            }
        }
    };
    for nb in 0..phases {
        // level 0: corner block then vertical-boundary blocks
        put(&mut t_bar0, nb, nb, if nb == 0 { b.a00 } else { b.b00 });
        if nb + 1 < phases {
            put(
                &mut t_bar0,
                nb,
                nb + 1,
                if nb == 0 { b.a01 } else { Mat2::ZERO },
            );
            put(&mut t_bar0, nb + 1, nb, b.a0m1);
        }
        // repeating level blocks
        put(&mut t0, nb, nb, b.c00);
        if nb + 1 < phases {
            put(
                &mut t0,
                nb,
                nb + 1,
                if nb == 0 { b.a01 } else { Mat2::ZERO },
            );
            put(&mut t0, nb + 1, nb, b.a0m1);
            put(&mut t1, nb + 1, nb, b.a1m1);
            put(
                &mut tm1,
                nb,
                nb + 1,
                if nb == 0 { 2.0 * b.am11 } else { b.am11 },
            );
        }
    }
    QbdBlocks {
        dim,
        t_bar0,
        t0,
        t1,
        tm1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_examples() {
        let p = ModelParams::new(2.0, 10.0, 3.0).unwrap();
        assert!((p.rho() - 4.0 / 15.0).abs() < 1e-15);
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((p.rho() - 1.5).abs() < 1e-15); // unstable but constructible
        assert!(!p.is_stable());
        assert!(matches!(
            ModelParams::new(0.0, 10.0, 3.0),
            Err(Error::InvalidParameter { name: "lambda", .. })
        ));
        assert!(ModelParams::new(2.0, f64::NAN, 3.0).is_err());
        assert!(ModelParams::new(2.0, f64::INFINITY, 3.0).is_err());
        assert!(ModelParams::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn stability_examples() {
        let r = ModelParams::new(2.0, 10.0, 3.0).unwrap().stability();
        assert!(r.stable);
        assert!((r.util - 0.2).abs() < 1e-15);
        assert!((r.empty_orbit1_idle_mass - 11.0 / 15.0).abs() < 1e-15);

        let r = ModelParams::new(4.0, 10.0, 3.0).unwrap().stability();
        assert!(r.stable);
        assert!((r.rho - 2.0 / 3.0).abs() < 1e-15);

        // rho = 1 exactly: lambda(lambda + 2 alpha) = 2 alpha mu with
        // lambda = 2, alpha = 1, mu = 4
        let r = ModelParams::new(2.0, 4.0, 1.0).unwrap().stability();
        assert!((r.rho - 1.0).abs() < 1e-15);
        assert!(!r.stable);
    }

    #[test]
    fn level_matrix_examples() {
        let p = ModelParams::new(2.0, 10.0, 3.0).unwrap();
        let b = LevelMatrices::new(&p);
        assert_eq!(b.a00, Mat2::new(-2.0, 10.0, 2.0, -12.0));
        assert_eq!(b.c00, Mat2::new(-8.0, 10.0, 2.0, -12.0));
        assert_eq!(b.a1m1 - b.a01, Mat2::ZERO);
        assert_eq!(b.a0m1 - b.am11, Mat2::ZERO);
        assert_eq!(b.b00, b.a00 - b.h);
        assert_eq!(b.c00, b.a00 - (2.0 * b.h));
        // det A00 = lambda^2
        assert!((b.a00.det() - 4.0).abs() < 1e-12);
        assert!(b.c00.inverse().is_ok());
    }

    #[test]
    fn zero_field_has_zero_residual() {
        struct Zero;
        impl StationaryField for Zero {
            fn provenance(&self) -> Provenance {
                Provenance::Oracle
            }
            fn evaluable(&self, _m: usize, _n: usize) -> bool {
                true
            }
            fn prob(&self, _m: usize, _n: usize, _k: Server) -> f64 {
                0.0
            }
        }
        let p = ModelParams::new(2.0, 10.0, 3.0).unwrap();
        assert_eq!(balance_residual(&Zero, &p, 20, 20).unwrap(), 0.0);
    }

    #[test]
    fn qbd_block_rows_are_conservative() {
        let p = ModelParams::new(2.0, 10.0, 3.0).unwrap();
        let phase_max = 6;
        let qbd = qbd_blocks(&p, phase_max);
        let dim = qbd.dim;
        // interior rows (away from the phase cutoff): T_bar0 + T1 and
        // Tm1 + T0 + T1 must have zero row sums
        for row in 0..dim - 2 {
            let s0: f64 = (0..dim)
                .map(|c| qbd.t_bar0[row * dim + c] + qbd.t1[row * dim + c])
                .sum();
            let s1: f64 = (0..dim)
                .map(|c| qbd.tm1[row * dim + c] + qbd.t0[row * dim + c] + qbd.t1[row * dim + c])
                .sum();
            assert!(s0.abs() < 1e-12, "level-0 row {row} sums to {s0}");
            assert!(s1.abs() < 1e-12, "repeating row {row} sums to {s1}");
        }
    }
}
