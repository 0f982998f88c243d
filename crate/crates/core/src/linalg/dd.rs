//! Double-double complex arithmetic for the one place that needs it: forming
//! a product of layer matrices and its characteristic polynomial.
//!
//! The determinant of a rounded monodromy is only accurate to eps·κ(M), and
//! κ(M) grows exponentially with loss and frequency. Determinants are
//! multiplicative, so carrying the product and the trace recursion in
//! ~106-bit precision leaves only the per-layer rounding, about
//! Σ eps·κ(T_layer).

use std::ops::{Add, Mul, Neg, Sub};

use super::{CMat4, QuarticCoeffs, C64};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = (self.hi - p - e + self.lo) / d;
        Dd::renorm(q1, r)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        Dd::renorm(s, e + self.lo + o.lo)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn from(z: C64) -> Self {
        Cdd { re: Dd::from(z.re), im: Dd::from(z.im) }
    }

    fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    fn div_f64(self, d: f64) -> Self {
        Cdd { re: self.re.div_f64(d), im: self.im.div_f64(d) }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

type M4 = [[Cdd; 4]; 4];

fn lift(m: &CMat4) -> M4 {
    let mut out = [[Cdd::default(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = Cdd::from(m.0[i][j]);
        }
    }
    out
}

fn mul(a: &M4, b: &M4) -> M4 {
    let mut out = [[Cdd::default(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = Cdd::default();
            for k in 0..4 {
                s = s + a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn lower(m: &M4) -> CMat4 {
    let mut out = CMat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out.0[i][j] = m[i][j].to_c64();
        }
    }
    out
}

/// Product `factors[n−1] ⋯ factors[0]` and its characteristic polynomial,
/// both accumulated in double-double precision and rounded once.
pub fn product_with_char_poly(factors: &[CMat4]) -> (CMat4, QuarticCoeffs) {
    let mut m = lift(&CMat4::identity());
    for f in factors {
        m = mul(&lift(f), &m);
    }
    // Faddeev–LeVerrier: M_k = A M_{k−1} + c_{k−1} I, c_k = −tr(A M_k)/k.
    let mut coeffs = [Cdd::default(); 4];
    let mut mk = [[Cdd::default(); 4]; 4];
    let mut c_prev = Cdd::from(C64::new(1.0, 0.0));
    for k in 1..=4usize {
        let mut next = mul(&m, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = row[i] + c_prev;
        }
        mk = next;
        let amk = mul(&m, &mk);
        let tr = amk[0][0] + amk[1][1] + amk[2][2] + amk[3][3];
        let c = (-tr).div_f64(k as f64);
        coeffs[4 - k] = c;
        c_prev = c;
    }
    let q = QuarticCoeffs::new(coeffs[3].to_c64(), coeffs[2].to_c64(), coeffs[1].to_c64(), coeffs[0].to_c64());
    (lower(&m), q)
}
