//! Small dense complex linear algebra.
//!
//! Everything here is sized for the 4×4 transfer-matrix problem: fixed-size
//! matrices on the stack, a closed-form quartic solver, a Hessenberg QR
//! eigenvalue routine used as the independent root path, one-sided Jacobi
//! SVD for null directions, and the optimal matching distance between
//! eigenvalue multisets.

mod dd;
mod eigen;
mod matching;
mod quartic;
mod svd;

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub use dd::product_with_char_poly;
pub use eigen::{companion_roots, eigen4, hessenberg_eigenvalues, EigenSet};
pub use matching::matching_distance;
pub use quartic::{quartic_roots, QuarticCoeffs};
pub use svd::{jacobi_svd, nullspace, nullspace2xm, DMat, Svd};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("multiset sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("matrix has {0} columns, expected 3 or 4")]
    BadColumnCount(usize),
}

pub type Vec4 = [C64; 4];

pub fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product ⟨a, b⟩ = Σ conj(a_i) b_i.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// 4×4 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat4(pub [[C64; 4]; 4]);

impl Default for CMat4 {
    fn default() -> Self {
        CMat4::zeros()
    }
}

impl CMat4 {
    pub fn zeros() -> Self {
        CMat4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_diag(d: [C64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = d[i];
        }
        m
    }

    /// Assemble from 2×2 blocks `[[a, b], [c, d]]`.
    pub fn from_blocks(a: CMat2, b: CMat2, c: CMat2, d: CMat2) -> Self {
        let mut m = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                m.0[i][j] = a.0[i][j];
                m.0[i][j + 2] = b.0[i][j];
                m.0[i + 2][j] = c.0[i][j];
                m.0[i + 2][j + 2] = d.0[i][j];
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|z| *z *= s);
        m
    }

    pub fn shift(&self, s: C64) -> Self {
        let mut m = *self;
        for i in 0..4 {
            m.0[i][i] += s;
        }
        m
    }

    pub fn conj_transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec4) -> Vec4 {
        let mut out = [ZERO; 4];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det_lu(&self) -> C64 {
        let mut a = self.0;
        let mut det = ONE;
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
                .unwrap();
            if a[piv][col] == ZERO {
                return ZERO;
            }
            if piv != col {
                a.swap(piv, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..4 {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    let t = a[col][c];
                    a[r][c] -= f * t;
                }
            }
        }
        det
    }

    /// `self^n` for n ≥ 0; repeated squaring above 8.
    pub fn pow(&self, n: u64) -> Self {
        if n <= 8 {
            let mut acc = Self::identity();
            for _ in 0..n {
                acc = *self * acc;
            }
            return acc;
        }
        let mut base = *self;
        let mut acc = Self::identity();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// e^A by scaling and squaring: A is halved until its ∞-norm is at most
    /// 1/2, where a degree-18 Taylor polynomial is exact to rounding.
    pub fn exp(&self) -> Self {
        let norm = self.0.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let a = self.scale(C64::new(0.5f64.powi(squarings), 0.0));
        let id = Self::identity();
        let mut r = id;
        for k in (1..=18).rev() {
            r = id + (a * r).scale(C64::new(1.0 / k as f64, 0.0));
        }
        for _ in 0..squarings {
            r = r * r;
        }
        r
    }

    /// The 2×2 block at rows `r`, columns `c` (each a pair of indices).
    pub fn submatrix2(&self, rows: [usize; 2], cols: [usize; 2]) -> CMat2 {
        CMat2([
            [self.0[rows[0]][cols[0]], self.0[rows[0]][cols[1]]],
            [self.0[rows[1]][cols[0]], self.0[rows[1]][cols[1]]],
        ])
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.0.iter().map(|r| r.to_vec()).collect()
    }
}

impl Index<(usize, usize)> for CMat4 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for CMat4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Mul for CMat4 {
    type Output = CMat4;
    fn mul(self, rhs: CMat4) -> CMat4 {
        let mut out = CMat4::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl Add for CMat4 {
    type Output = CMat4;
    fn add(self, rhs: CMat4) -> CMat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

impl Sub for CMat4 {
    type Output = CMat4;
    fn sub(self, rhs: CMat4) -> CMat4 {
        let mut out = self;
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] -= rhs.0[i][j];
            }
        }
        out
    }
}

/// 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2(pub [[C64; 2]; 2]);

impl CMat2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        CMat2([[a, b], [c, d]])
    }

    pub fn zeros() -> Self {
        CMat2([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        CMat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.0;
        CMat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn conj_transpose(&self) -> Self {
        let m = self.0;
        CMat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }
}

impl Mul for CMat2 {
    type Output = CMat2;
    fn mul(self, r: CMat2) -> CMat2 {
        let a = self.0;
        let b = r.0;
        CMat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Coefficients of det(M − λI) = λ⁴ + a3 λ³ + a2 λ² + a1 λ + a0, by the
/// Faddeev–LeVerrier trace recursion.
pub fn char_poly4(m: &CMat4) -> QuarticCoeffs {
    let mut coeffs = [ZERO; 4];
    let mut mk = CMat4::zeros();
    let mut c_prev = ONE;
    for k in 1..=4usize {
        mk = (*m * mk).shift(c_prev);
        let amk = *m * mk;
        let c = -amk.trace() / k as f64;
        coeffs[4 - k] = c;
        c_prev = c;
    }
    QuarticCoeffs {
        a3: coeffs[3],
        a2: coeffs[2],
        a1: coeffs[1],
        a0: coeffs[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_diagonal_and_nilpotent() {
        let d = CMat4::from_diag([C64::new(1.0, 2.0), C64::new(-3.0, 0.5), C64::new(0.0, -40.0), C64::new(0.25, 0.0)]);
        let e = d.exp();
        for i in 0..4 {
            let want = d.0[i][i].exp();
            assert!((e.0[i][i] - want).norm() <= 1e-13 * want.norm().max(1.0), "{i}");
        }
        let mut n = CMat4::zeros();
        n.0[0][1] = ONE;
        n.0[1][2] = ONE;
        let e = n.exp();
        assert_eq!(e.0[0][2], C64::new(0.5, 0.0));
        assert_eq!(e.0[0][1], ONE);
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn char_poly_of_identity() {
        let q = char_poly4(&CMat4::identity());
        assert_eq!(q.a3, c(-4.0, 0.0));
        assert_eq!(q.a2, c(6.0, 0.0));
        assert_eq!(q.a1, c(-4.0, 0.0));
        assert_eq!(q.a0, c(1.0, 0.0));
    }

    #[test]
    fn char_poly_of_diagonal() {
        let d = [c(2.0, 0.0), c(0.5, 0.0), c(3.0, 0.0), c(1.0 / 3.0, 0.0)];
        let q = char_poly4(&CMat4::from_diag(d));
        assert!((q.a0 - ONE).norm() < 1e-14);
        assert!((q.a3 + c(2.0 + 0.5 + 3.0 + 1.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn char_poly_matches_sampled_determinant() {
        // det(M − λI) sampled at five points determines the quartic.
        let m = CMat4([
            [c(0.3, 1.0), c(-1.2, 0.4), c(2.0, 0.0), c(0.1, -0.7)],
            [c(1.5, -0.2), c(0.0, 0.9), c(-0.8, 0.3), c(1.1, 1.1)],
            [c(-0.4, 0.6), c(0.7, -1.3), c(0.2, 0.2), c(-1.9, 0.5)],
            [c(0.9, 0.0), c(-0.3, -0.3), c(1.4, -0.6), c(0.5, 0.8)],
        ]);
        let q = char_poly4(&m);
        let pts = [c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.5), c(0.3, -2.0), c(2.0, 1.0)];
        for &l in &pts {
            let direct = m.shift(-l).det_lu();
            assert!((q.eval(l) - direct).norm() < 1e-12 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn pow_matches_repeated_product() {
        let m = CMat4([
            [c(0.9, 0.1), c(0.1, 0.0), c(0.0, 0.2), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, -0.1), c(0.1, 0.0), c(0.0, 0.1)],
            [c(0.05, 0.0), c(0.0, 0.0), c(0.95, 0.0), c(0.1, 0.0)],
            [c(0.0, 0.1), c(0.0, 0.0), c(0.0, 0.0), c(1.02, 0.0)],
        ]);
        let mut direct = CMat4::identity();
        for _ in 0..13 {
            direct = m * direct;
        }
        assert!((m.pow(13) - direct).frobenius() < 1e-12);
        assert_eq!(m.pow(0), CMat4::identity());
    }
}
