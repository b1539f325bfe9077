//! Small dense 2x2 kernel types and a banded continuous-time generator with a
//! subtraction-free stationary solve.
//!
//! The 2x2 types carry the phase blocks of the transformed chain. The banded
//! solver implements GTH-style elimination (Grassmann–Taksar–Heyman): all
//! updates are sums and products of nonnegative numbers, so every component of
//! the stationary vector comes out with full relative accuracy, including
//! entries many orders of magnitude below the largest one. That property is
//! what makes tail decay-rate estimation from the truncated chain possible.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Column 2-vector indexed by server state (idle, busy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2(pub f64, pub f64);

impl Vec2 {
    pub const ZERO: Vec2 = Vec2(0.0, 0.0);

    pub fn sum(self) -> f64 {
        self.0 + self.1
    }

    pub fn abs_sum(self) -> f64 {
        self.0.abs() + self.1.abs()
    }

    pub fn abs_max(self) -> f64 {
        self.0.abs().max(self.1.abs())
    }

    pub fn get(self, k: usize) -> f64 {
        match k {
            0 => self.0,
            _ => self.1,
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, r: Vec2) -> Vec2 {
        Vec2(self.0 + r.0, self.1 + r.1)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, r: Vec2) -> Vec2 {
        Vec2(self.0 - r.0, self.1 - r.1)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2(self.0 * s, self.1 * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2(-self.0, -self.1)
    }
}

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { m: [[0.0; 2]; 2] };

    pub fn new(a00: f64, a01: f64, a10: f64, a11: f64) -> Mat2 {
        Mat2 {
            m: [[a00, a01], [a10, a11]],
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::LinearAlgebra(format!(
                "singular 2x2 matrix, det = {d}"
            )));
        }
        Ok(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn abs_max(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Row sums as a vector, used by generator conservation checks.
    pub fn row_sums(&self) -> Vec2 {
        Vec2(self.m[0][0] + self.m[0][1], self.m[1][0] + self.m[1][1])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + r.m[0][0],
            self.m[0][1] + r.m[0][1],
            self.m[1][0] + r.m[1][0],
            self.m[1][1] + r.m[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] - r.m[0][0],
            self.m[0][1] - r.m[0][1],
            self.m[1][0] - r.m[1][0],
            self.m[1][1] - r.m[1][1],
        )
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        let a = &self.m;
        let b = &r.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2(
            self.m[0][0] * v.0 + self.m[0][1] * v.1,
            self.m[1][0] * v.0 + self.m[1][1] * v.1,
        )
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self * r.m[0][0],
            self * r.m[0][1],
            self * r.m[1][0],
            self * r.m[1][1],
        )
    }
}

/// Banded CTMC generator: off-diagonal rates within `|target - source| <= half_band`,
/// diagonal stored separately so that row-sum conservation is a real check
/// (the diagonal is assembled from total out-rates, the off-diagonals from
/// transition enumeration).
pub struct BandedGenerator {
    n: usize,
    half_band: usize,
    /// band[s * (2b+1) + (t - s + b)] holds the rate s -> t for t != s; the
    /// slot at offset b (t == s) is unused by elimination and free to receive
    /// fill, see `into_stationary`.
    band: Vec<f64>,
    diag: Vec<f64>,
}

impl BandedGenerator {
    pub fn new(n: usize, half_band: usize) -> BandedGenerator {
        BandedGenerator {
            n,
            half_band,
            band: vec![0.0; n * (2 * half_band + 1)],
            diag: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, s: usize, t: usize) -> usize {
        s * (2 * self.half_band + 1) + (t + self.half_band - s)
    }

    /// Accumulate an off-diagonal transition rate. Panics if out of band.
    pub fn add_rate(&mut self, s: usize, t: usize, rate: f64) {
        debug_assert!(s != t);
        assert!(
            t + self.half_band >= s && t <= s + self.half_band,
            "transition {s}->{t} outside half band {}",
            self.half_band
        );
        let idx = self.slot(s, t);
        self.band[idx] += rate;
    }

    pub fn set_diagonal(&mut self, s: usize, value: f64) {
        self.diag[s] = value;
    }

    pub fn rate(&self, s: usize, t: usize) -> f64 {
        if s == t {
            self.diag[s]
        } else if t + self.half_band >= s && t <= s + self.half_band {
            self.band[self.slot(s, t)]
        } else {
            0.0
        }
    }

    /// Largest |row sum| over all states; zero for a conservative generator.
    pub fn max_abs_row_sum(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.n {
            let lo = s.saturating_sub(self.half_band);
            let hi = (s + self.half_band).min(self.n - 1);
            let mut acc = self.diag[s];
            for t in lo..=hi {
                if t != s {
                    acc += self.band[self.slot(s, t)];
                }
            }
            worst = worst.max(acc.abs());
        }
        worst
    }

    /// Residual ||pi Q||_inf of a candidate stationary vector.
    #[allow(clippy::needless_range_loop)]
    pub fn residual(&self, pi: &[f64]) -> f64 {
        assert_eq!(pi.len(), self.n);
        let mut acc = vec![0.0f64; self.n];
        for s in 0..self.n {
            acc[s] += pi[s] * self.diag[s];
            let lo = s.saturating_sub(self.half_band);
            let hi = (s + self.half_band).min(self.n - 1);
            for t in lo..=hi {
                if t != s {
                    acc[t] += pi[s] * self.band[self.slot(s, t)];
                }
            }
        }
        acc.iter().fold(0.0f64, |w, v| w.max(v.abs()))
    }

    /// Stationary distribution by GTH elimination, consuming the generator.
    ///
    /// States are eliminated from the last index down. Every pivot is the sum
    /// of the remaining out-rates of the eliminated state, so no subtraction
    /// ever occurs and the result is componentwise accurate and nonnegative by
    /// construction. Fill stays inside the band because the neighbors of any
    /// state all lie within `half_band` of it.
    #[allow(clippy::needless_range_loop)]
    pub fn into_stationary(mut self) -> Result<Vec<f64>> {
        let n = self.n;
        let b = self.half_band;
        let w = 2 * b + 1;
        let mut pivots = vec![0.0f64; n];
        let mut zrow = vec![0.0f64; b];

        for z in (1..n).rev() {
            let lo = z.saturating_sub(b);
            let len = z - lo;
            // rates z -> j for j in [lo, z)
            let zoff = z * w + (lo + b - z);
            zrow[..len].copy_from_slice(&self.band[zoff..zoff + len]);
            let total: f64 = zrow[..len].iter().sum();
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::LinearAlgebra(format!(
                    "GTH pivot at state {z} is {total}; generator not irreducible on the box"
                )));
            }
            pivots[z] = total;
            for i in lo..z {
                let qiz = self.band[i * w + (z + b - i)];
                if qiz == 0.0 {
                    continue;
                }
                let f = qiz / total;
                // q[i][j] += f * q[z][j] for j in [lo, z). The j == i term lands
                // in the diagonal slot, which elimination and back-substitution
                // never read.
                let ioff = i * w + (lo + b - i);
                let dst = &mut self.band[ioff..ioff + len];
                for (d, &zq) in dst.iter_mut().zip(&zrow[..len]) {
                    *d += f * zq;
                }
            }
        }

        let mut pi = vec![0.0f64; n];
        pi[0] = 1.0;
        for z in 1..n {
            let lo = z.saturating_sub(b);
            let mut acc = 0.0;
            for i in lo..z {
                acc += pi[i] * self.band[i * w + (z + b - i)];
            }
            pi[z] = acc / pivots[z];
        }
        let total: f64 = pi.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::LinearAlgebra(format!(
                "GTH back substitution produced total mass {total}"
            )));
        }
        for v in &mut pi {
            *v /= total;
        }
        Ok(pi)
    }
}
