//! Ferrari's method for monic complex quartics, with a companion-matrix
//! fallback whenever the closed form is unreliable.

use super::eigen::companion_roots;
use super::{C64, ONE, ZERO};

/// Monic quartic λ⁴ + a3 λ³ + a2 λ² + a1 λ + a0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub a3: C64,
    pub a2: C64,
    pub a1: C64,
    pub a0: C64,
}

impl QuarticCoeffs {
    pub fn new(a3: C64, a2: C64, a1: C64, a0: C64) -> Self {
        QuarticCoeffs { a3, a2, a1, a0 }
    }

    /// Monic coefficients of ∏(λ − r_i).
    pub fn from_roots(r: &[C64; 4]) -> Self {
        let mut p = [ONE, ZERO, ZERO, ZERO, ZERO];
        for (deg, &root) in r.iter().enumerate() {
            for j in (1..=deg + 1).rev() {
                p[j] -= root * p[j - 1];
            }
        }
        QuarticCoeffs::new(p[1], p[2], p[3], p[4])
    }

    pub fn eval(&self, l: C64) -> C64 {
        (((l + self.a3) * l + self.a2) * l + self.a1) * l + self.a0
    }

    pub fn eval_derivative(&self, l: C64) -> C64 {
        ((l * 4.0 + self.a3 * 3.0) * l + self.a2 * 2.0) * l + self.a1
    }

    pub fn max_abs(&self) -> f64 {
        [self.a3, self.a2, self.a1, self.a0]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        [self.a3, self.a2, self.a1, self.a0]
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Scale used by the residual acceptance test.
    pub fn residual_scale(&self) -> f64 {
        (1.0 + self.max_abs()).powi(4)
    }
}

const TOL_W: f64 = 1e-10;
const TOL_POLY: f64 = 1e-12;

/// All four roots of the quartic, with multiplicity.
///
/// The depressed quartic z⁴ + b2 z² + b1 z + b0 (λ = z − a3/4) is factored as
/// (z² + s z + p)(z² − s z + q) where w = s² solves the resolvent cubic
/// w³ + 2b2 w² + (b2² − 4b0) w − b1² = 0. Principal square and cube roots are
/// used throughout; if the cube-root argument vanishes the other square-root
/// sign is taken. Roots whose residual is not small enough after one Newton
/// polish cause the whole set to be recomputed from the companion matrix.
pub fn quartic_roots(c: &QuarticCoeffs) -> [C64; 4] {
    if let Some(r) = ferrari(c) {
        let scale = c.residual_scale();
        if r.iter().all(|&x| c.eval(x).norm() <= TOL_POLY * scale) {
            return refine_pairs(c, r);
        }
    }
    refine_pairs(c, companion_fallback(c))
}

/// Relative separation below which two roots are refined as a quadratic factor.
const PAIR_SEP: f64 = 1e-3;

const DOUBLE_ROOT: f64 = 1e-14;

fn factor_residual(c: &QuarticCoeffs, f: &[C64; 4]) -> [C64; 4] {
    let (s1, p1, s2, p2) = (f[0], f[1], f[2], f[3]);
    [-(s1 + s2) - c.a3, p1 + p2 + s1 * s2 - c.a2, -(s1 * p2 + s2 * p1) - c.a1, p1 * p2 - c.a0]
}

fn solve4(mut a: [[C64; 4]; 4], mut b: [C64; 4]) -> Option<[C64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..4 {
            let f = a[r][col] / a[col][col];
            for k in col..4 {
                let t = a[col][k];
                a[r][k] -= f * t;
            }
            let t = b[col];
            b[r] -= f * t;
        }
    }
    let mut x = [ZERO; 4];
    for r in (0..4).rev() {
        let mut acc = b[r];
        for k in r + 1..4 {
            acc -= a[r][k] * x[k];
        }
        x[r] = acc / a[r][r];
    }
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(x)
}

/// Roots of x² − s x + p, the larger one first by the stable formula. A
/// discriminant at rounding level is a double root, returned exactly.
fn quadratic(s: C64, p: C64) -> [C64; 2] {
    let half = s / 2.0;
    let disc = half * half - p;
    if disc.norm() <= DOUBLE_ROOT * (half.norm_sqr() + p.norm()) {
        return [half, half];
    }
    let d = disc.sqrt();
    let big = if (half + d).norm() >= (half - d).norm() { half + d } else { half - d };
    if big.norm() == 0.0 {
        return [ZERO, ZERO];
    }
    [big, p / big]
}

/// A close pair of roots is only resolved to about √eps, and the two errors
/// do not cancel in symmetric functions such as the product. Newton on the
/// factorisation P = (x² − s1x + p1)(x² − s2x + p2) is well conditioned even
/// for a double root, as long as the two factors are coprime.
fn refine_pairs(c: &QuarticCoeffs, r: [C64; 4]) -> [C64; 4] {
    let big = 1.0 + r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..4 {
        for j in i + 1..4 {
            let d = (r[i] - r[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    if !(best.0 < PAIR_SEP * big) {
        return r;
    }
    let (i, j) = (best.1, best.2);
    let rest: Vec<usize> = (0..4).filter(|&k| k != i && k != j).collect();
    let (k, l) = (rest[0], rest[1]);
    let mut f = [r[i] + r[j], r[i] * r[j], r[k] + r[l], r[k] * r[l]];
    let norm = |v: &[C64; 4]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let start = norm(&factor_residual(c, &f));
    let mut res = start;
    for _ in 0..8 {
        let (s1, p1, s2, p2) = (f[0], f[1], f[2], f[3]);
        let jac = [
            [-ONE, ZERO, -ONE, ZERO],
            [s2, ONE, s1, ONE],
            [-p2, -s2, -p1, -s1],
            [ZERO, p2, ZERO, p1],
        ];
        let Some(step) = solve4(jac, factor_residual(c, &f).map(|z| -z)) else { break };
        let cand = [f[0] + step[0], f[1] + step[1], f[2] + step[2], f[3] + step[3]];
        let cres = norm(&factor_residual(c, &cand));
        if !(cres < res) {
            break;
        }
        f = cand;
        res = cres;
    }
    if !(res < start) {
        return r;
    }
    let [a, b] = quadratic(f[0], f[1]);
    let [x, y] = quadratic(f[2], f[3]);
    let mut out = [a, b, x, y];
    // Simple roots of the far factor get a polish; results keep the input order.
    let far_close = (x - y).norm() < PAIR_SEP * big;
    if !far_close {
        out[2] = polish(c, x);
        out[3] = polish(c, y);
    }
    let mut result = r;
    let mut used = [false; 4];
    for (slot, &orig) in [i, j, k, l].iter().zip([r[i], r[j], r[k], r[l]].iter()) {
        let pick = (0..4)
            .filter(|&q| !used[q])
            .min_by(|&p, &q| (out[p] - orig).norm().total_cmp(&(out[q] - orig).norm()))
            .unwrap_or(0);
        used[pick] = true;
        result[*slot] = out[pick];
    }
    result
}

fn companion_fallback(c: &QuarticCoeffs) -> [C64; 4] {
    let r = companion_roots(&[c.a3, c.a2, c.a1, c.a0]);
    let mut out = [ZERO; 4];
    out.copy_from_slice(&r);
    out.map(|x| polish(c, x))
}

fn biquadratic(c: &QuarticCoeffs, a3: C64, b2: C64, b0: C64) -> Option<[C64; 4]> {
    let d = (b2 * b2 - b0 * 4.0).sqrt();
    let zp = ((-b2 + d) / 2.0).sqrt();
    let zm = ((-b2 - d) / 2.0).sqrt();
    let shift = -a3 / 4.0;
    let roots = [shift + zp, shift - zp, shift + zm, shift - zm];
    if roots.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return None;
    }
    Some(roots.map(|x| polish(c, x)))
}

fn ferrari(c: &QuarticCoeffs) -> Option<[C64; 4]> {
    let (a3, a2, a1, a0) = (c.a3, c.a2, c.a1, c.a0);
    let a3_2 = a3 * a3;
    let b2 = a2 - a3_2 * (3.0 / 8.0);
    let b1 = a1 - a2 * a3 / 2.0 + a3_2 * a3 / 8.0;
    let b0 = a0 - a1 * a3 / 4.0 + a2 * a3_2 / 16.0 - a3_2 * a3_2 * (3.0 / 256.0);

    // Resolvent cubic x³ + A x² + B x + C with A = 2b2, B = b2² − 4b0, C = −b1².
    let d0 = b2 * b2 + b0 * 12.0;
    let d1 = b2 * b2 * b2 * (-2.0) + b2 * b0 * 72.0 - b1 * b1 * 27.0;
    let disc = (d1 * d1 - d0 * d0 * d0 * 4.0).sqrt();
    let mut cube_arg = (d1 + disc) / 2.0;
    if cube_arg.norm() < 1e-300 {
        cube_arg = (d1 - disc) / 2.0;
    }
    let w = if cube_arg.norm() < 1e-300 {
        // Triple root of the resolvent.
        -b2 * 2.0 / 3.0
    } else {
        let q = cube_arg.powf(1.0 / 3.0);
        -(b2 * 2.0 + q + d0 / q) / 3.0
    };

    let scale = 1.0 + b2.norm() + b1.norm() + b0.norm();
    if !(w.re.is_finite() && w.im.is_finite()) {
        return None;
    }
    if w.norm() < TOL_W * scale {
        // w = 0 solves the resolvent only when b1 = 0: the depressed quartic
        // is then biquadratic, z⁴ + b2 z² + b0, and multiple roots stay exact.
        return biquadratic(c, a3, b2, b0);
    }
    let s = w.sqrt();
    let u_plus = -b2 * 2.0 - w + b1 * 2.0 / s;
    let u_minus = -b2 * 2.0 - w - b1 * 2.0 / s;
    let sp = u_plus.sqrt();
    let sm = u_minus.sqrt();
    let shift = -a3 / 4.0;
    let roots = [
        shift - s / 2.0 + sp / 2.0,
        shift - s / 2.0 - sp / 2.0,
        shift + s / 2.0 + sm / 2.0,
        shift + s / 2.0 - sm / 2.0,
    ];
    if roots.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return None;
    }
    Some(roots.map(|x| polish(c, x)))
}

/// One or two Newton steps, each kept only if the residual drops.
fn polish(c: &QuarticCoeffs, mut x: C64) -> C64 {
    let mut res = c.eval(x).norm();
    for _ in 0..2 {
        let d = c.eval_derivative(x);
        if d.norm() == 0.0 {
            break;
        }
        let nx = x - c.eval(x) / d;
        let nres = c.eval(nx).norm();
        if nres < res && nx.re.is_finite() && nx.im.is_finite() {
            x = nx;
            res = nres;
        } else {
            break;
        }
    }
    x
}
