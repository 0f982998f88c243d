//! Eigenvalues and eigenvectors.
//!
//! `hessenberg_eigenvalues` is a textbook shifted QR iteration and serves two
//! roles: the companion-matrix fallback of the quartic solver, and an
//! independent oracle in tests. `eigen4` is the production path for transfer
//! matrices: closed-form quartic roots, clustered, then refined together with
//! their eigenvectors on the near-null singular subspace of M − λI.

use super::svd::{jacobi_svd, DMat};
use super::{char_poly4, quartic_roots, vnorm, CMat4, Vec4, C64, ONE, ZERO};

/// Eigen-decomposition of a 4×4 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSet {
    pub lambdas: [C64; 4],
    /// Unit eigenvector for each entry of `lambdas`. For a defective cluster
    /// some slots repeat the same vector.
    pub vectors: [Vec4; 4],
    /// True where the eigenvalue coincides with another within the clustering radius.
    pub degenerate: [bool; 4],
    /// Geometric multiplicity fell short of algebraic multiplicity somewhere.
    pub defective: bool,
}

impl EigenSet {
    pub fn product(&self) -> C64 {
        self.lambdas.iter().product()
    }

    /// max_j ‖M v_j − λ_j v_j‖.
    pub fn max_residual(&self, m: &CMat4) -> f64 {
        (0..4)
            .map(|j| {
                let mv = m.mul_vec(&self.vectors[j]);
                let r: Vec<C64> = (0..4).map(|i| mv[i] - self.lambdas[j] * self.vectors[j][i]).collect();
                vnorm(&r)
            })
            .fold(0.0, f64::max)
    }
}

/// Roots of the monic polynomial xⁿ + c[0] xⁿ⁻¹ + … + c[n−1], via the
/// eigenvalues of its companion matrix. Exact zero trailing coefficients are
/// split off as zero roots first.
pub fn companion_roots(coeffs: &[C64]) -> Vec<C64> {
    let mut c = coeffs.to_vec();
    let mut zeros = 0;
    while let Some(&last) = c.last() {
        if last == ZERO {
            c.pop();
            zeros += 1;
        } else {
            break;
        }
    }
    let n = c.len();
    let mut roots = vec![ZERO; zeros];
    if n == 0 {
        return roots;
    }
    let mut h = vec![vec![ZERO; n]; n];
    for j in 0..n {
        h[0][j] = -c[j];
    }
    for i in 1..n {
        h[i][i - 1] = ONE;
    }
    roots.extend(hessenberg_qr(h));
    roots
}

/// Eigenvalues of a general square matrix (Householder reduction to
/// Hessenberg form followed by shifted QR).
pub fn hessenberg_eigenvalues(a: &[Vec<C64>]) -> Vec<C64> {
    let n = a.len();
    let mut h: DMat = a.to_vec();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[i][k]).collect();
        let xn = vnorm(&x);
        if xn == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut v = x.clone();
        v[0] += phase * xn;
        let vn = vnorm(&v);
        v.iter_mut().for_each(|z| *z /= vn);
        // H ← (I − 2vvᴴ) H (I − 2vvᴴ) restricted to rows/cols k+1..n
        for j in 0..n {
            let d: C64 = (0..v.len()).map(|i| v[i].conj() * h[k + 1 + i][j]).sum();
            for i in 0..v.len() {
                h[k + 1 + i][j] -= v[i] * d * 2.0;
            }
        }
        for row in h.iter_mut() {
            let d: C64 = (0..v.len()).map(|i| row[k + 1 + i] * v[i]).sum();
            for i in 0..v.len() {
                row[k + 1 + i] -= d * v[i].conj() * 2.0;
            }
        }
        for i in k + 2..n {
            h[i][k] = ZERO;
        }
    }
    hessenberg_qr(h)
}

/// Shifted QR on an upper Hessenberg matrix; returns the diagonal after
/// deflation.
fn hessenberg_qr(mut h: DMat) -> Vec<C64> {
    let n = h.len();
    if n == 0 {
        return vec![];
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 && total < 200 * n {
        let mut l = hi;
        while l > 0 {
            let sub = h[l][l - 1].norm();
            let scale = h[l - 1][l - 1].norm() + h[l][l].norm();
            let scale = if scale == 0.0 { 1.0 } else { scale };
            if sub <= eps * scale {
                h[l][l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;

        let a = h[hi - 1][hi - 1];
        let b = h[hi - 1][hi];
        let c = h[hi][hi - 1];
        let d = h[hi][hi];
        let mu = if iter % 11 == 10 {
            d + C64::new(h[hi][hi - 1].norm() * 0.75, h[hi][hi - 1].norm() * 0.5)
        } else {
            let half = (a - d) / 2.0;
            let disc = (half * half + b * c).sqrt();
            let m1 = (a + d) / 2.0 + disc;
            let m2 = (a + d) / 2.0 - disc;
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };

        for i in l..=hi {
            h[i][i] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let x = h[k][k];
            let y = h[k + 1][k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (cr, sr) = if r == 0.0 { (ONE, ZERO) } else { (x / r, y / r) };
            for j in k..n {
                let p = h[k][j];
                let q = h[k + 1][j];
                h[k][j] = cr.conj() * p + sr.conj() * q;
                h[k + 1][j] = -sr * p + cr * q;
            }
            rots.push((cr, sr));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (cr, sr) = rots[idx];
            let top = (k + 2).min(hi);
            for row in h.iter_mut().take(top + 1) {
                let p = row[k];
                let q = row[k + 1];
                row[k] = p * cr + q * sr;
                row[k + 1] = -p * sr.conj() + q * cr.conj();
            }
        }
        for i in l..=hi {
            h[i][i] += mu;
        }
    }
    (0..n).map(|i| h[i][i]).collect()
}

/// Eigenvalues, unit eigenvectors and degeneracy flags of `m`.
pub fn eigen4(m: &CMat4) -> EigenSet {
    let raw = quartic_roots(&char_poly4(m));
    let maxabs = raw.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // A root of multiplicity m is only resolved to about eps^(1/m) by the
    // characteristic polynomial (1e-4 for m = 4), so the detection radius is
    // far wider than the final degeneracy tolerance. Clusters that turn out
    // to hold distinct eigenvalues are split again during refinement.
    let radius = 3e-4 * (1.0 + maxabs);
    let clusters = cluster(&raw, radius);

    let mut lambdas = [ZERO; 4];
    let mut vectors = [[ZERO; 4]; 4];
    let mut defective = false;
    for idx in &clusters {
        let center: C64 = idx.iter().map(|&i| raw[i]).sum::<C64>() / idx.len() as f64;
        let (mus, vecs, def) = if idx.len() == 1 {
            let (mu, v) = refine_simple(m, raw[idx[0]]);
            (vec![mu], vec![v], false)
        } else {
            let roots: Vec<C64> = idx.iter().map(|&i| raw[i]).collect();
            refine_cluster(m, center, &roots)
        };
        defective |= def;
        for (slot, &i) in idx.iter().enumerate() {
            lambdas[i] = mus[slot];
            vectors[i] = vecs[slot];
        }
    }

    let maxabs = lambdas.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-8 * (1.0 + maxabs);
    let mut degenerate = [false; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j && (lambdas[i] - lambdas[j]).norm() <= tol {
                degenerate[i] = true;
            }
        }
    }
    EigenSet { lambdas, vectors, degenerate, defective }
}

fn cluster(raw: &[C64; 4], radius: f64) -> Vec<Vec<usize>> {
    let mut parent = [0usize, 1, 2, 3];
    fn find(p: &mut [usize; 4], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if (raw[i] - raw[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = [usize::MAX; 4];
    for i in 0..4 {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(vec![]);
        }
        groups[root_of[r]].push(i);
    }
    groups
}

fn to_dmat(m: &CMat4) -> DMat {
    m.to_rows()
}

fn col(v: &DMat, j: usize) -> Vec<C64> {
    v.iter().map(|r| r[j]).collect()
}

fn normalize4(v: &[C64]) -> Vec4 {
    let n = vnorm(v);
    let mut out = [ZERO; 4];
    for i in 0..4 {
        out[i] = v[i] / n;
    }
    out
}

fn residual(m: &CMat4, l: C64, v: &Vec4) -> f64 {
    let mv = m.mul_vec(v);
    let r: Vec<C64> = (0..4).map(|i| mv[i] - l * v[i]).collect();
    vnorm(&r)
}

/// Smallest right and left singular vectors of M − λI.
fn near_null(m: &CMat4, l: C64, count: usize) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let a = m.shift(-l);
    let right = jacobi_svd(&to_dmat(&a));
    let left = jacobi_svd(&to_dmat(&a.conj_transpose()));
    let vs = (4 - count..4).map(|j| col(&right.v, j)).collect();
    let us = (4 - count..4).map(|j| col(&left.v, j)).collect();
    (vs, us)
}

fn refine_simple(m: &CMat4, root: C64) -> (C64, Vec4) {
    let (vs, us) = near_null(m, root, 1);
    let v = normalize4(&vs[0]);
    let u = &us[0];
    let uv: C64 = (0..4).map(|i| u[i].conj() * v[i]).sum();
    let mut best = (root, v);
    let mut best_res = residual(m, root, &v);
    if uv.norm() > 1e-8 {
        let mv = m.mul_vec(&v);
        let mu = (0..4).map(|i| u[i].conj() * mv[i]).sum::<C64>() / uv;
        let r = residual(m, mu, &v);
        if r < best_res {
            best = (mu, v);
            best_res = r;
        }
    }
    // One more pass at the improved eigenvalue.
    if best.0 != root {
        let (vs, _) = near_null(m, best.0, 1);
        let v2 = normalize4(&vs[0]);
        if residual(m, best.0, &v2) < best_res {
            best.1 = v2;
        }
    }
    best
}

/// Refine a cluster of `count` nearly equal roots on the span of the
/// `count` smallest singular directions of M − λI.
fn refine_cluster(m: &CMat4, center: C64, roots: &[C64]) -> (Vec<C64>, Vec<Vec4>, bool) {
    let count = roots.len();
    // Geometric multiplicity at the cluster center. A semisimple cluster has
    // `count` singular values of the size of the root error (≲ √eps); a
    // Jordan block has only one, the rest being O(‖M‖).
    let probe = jacobi_svd(&to_dmat(&m.shift(-center)));
    let spread = roots.iter().map(|r| (r - center).norm()).fold(0.0, f64::max);
    let small = (10.0 * spread).max(1e-5) * (1.0 + m.frobenius());
    let geometric = probe.sigma.iter().filter(|&&s| s <= small).count().clamp(1, count);
    if geometric < count {
        let vecs = (0..count)
            .map(|slot| normalize4(&col(&probe.v, 3 - slot.min(geometric - 1))))
            .collect();
        return (roots.to_vec(), vecs, true);
    }
    let mut lam = center;
    let mut result: Option<(Vec<C64>, Vec<Vec4>, bool)> = None;
    for _ in 0..3 {
        let (vs, us) = near_null(m, lam, count);
        let mvs: Vec<Vec4> = vs
            .iter()
            .map(|v| {
                let mut a = [ZERO; 4];
                a.copy_from_slice(v);
                m.mul_vec(&a)
            })
            .collect();
        // G = Uᴴ V and the projected operator (Uᴴ V)⁻¹ Uᴴ M V, falling back to
        // the one-sided Rayleigh–Ritz VᴴMV when the left and right subspaces
        // are nearly orthogonal (a Jordan block).
        let g: DMat = us.iter().map(|u| vs.iter().map(|v| dot(u, v)).collect()).collect();
        let umv: DMat = us.iter().map(|u| mvs.iter().map(|mv| dot(u, mv)).collect()).collect();
        let p = match solve(&g, &umv) {
            Some(p) => p,
            None => vs.iter().map(|v| mvs.iter().map(|mv| dot(v, mv)).collect()).collect(),
        };
        let (mus, ys, def) = small_eig(&p);
        let vecs: Vec<Vec4> = ys
            .iter()
            .map(|y| {
                let mut x = vec![ZERO; 4];
                for (k, v) in vs.iter().enumerate() {
                    for i in 0..4 {
                        x[i] += v[i] * y[k];
                    }
                }
                normalize4(&x)
            })
            .collect();
        let next = mus.iter().sum::<C64>() / count as f64;
        let settled = (next - lam).norm() <= 1e-15 * (1.0 + lam.norm());
        lam = next;
        result = Some((mus, vecs, def));
        if settled {
            break;
        }
    }
    let (mut mus, mut vecs, def) = result.unwrap();
    // Ritz values that are genuinely separate get an exact simple refinement;
    // coincident ones keep their subspace vectors.
    let tol = 1e-8 * (1.0 + center.norm());
    let snapshot = mus.clone();
    for i in 0..count {
        let alone = (0..count).all(|j| j == i || (snapshot[i] - snapshot[j]).norm() > tol);
        if alone {
            let (mu, v) = refine_simple(m, snapshot[i]);
            mus[i] = mu;
            vecs[i] = v;
        }
    }
    (mus, vecs, def)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solve G X = R for square G by partial-pivot elimination; None if G is
/// numerically singular.
fn solve(g: &DMat, r: &DMat) -> Option<DMat> {
    let n = g.len();
    let scale = g.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let mut a = g.clone();
    let mut b = r.clone();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm()))?;
        if a[piv][c].norm() <= 1e-6 * scale.max(1e-300) {
            return None;
        }
        a.swap(piv, c);
        b.swap(piv, c);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                let t = a[c][j];
                a[i][j] -= f * t;
            }
            for j in 0..b[i].len() {
                let t = b[c][j];
                b[i][j] -= f * t;
            }
        }
    }
    for c in (0..n).rev() {
        for j in 0..b[c].len() {
            let mut s = b[c][j];
            for k in c + 1..n {
                s -= a[c][k] * b[k][j];
            }
            b[c][j] = s / a[c][c];
        }
    }
    Some(b)
}

/// Eigenpairs of a small projected matrix. Returns one vector per
/// eigenvalue (repeating vectors when the eigenspace is too small) and a
/// defectiveness flag.
fn small_eig(p: &DMat) -> (Vec<C64>, Vec<Vec<C64>>, bool) {
    let n = p.len();
    if n == 1 {
        return (vec![p[0][0]], vec![vec![ONE]], false);
    }
    let mus = hessenberg_eigenvalues(p);
    let pnorm = p.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-9 * (1.0 + pnorm);
    let mut done = vec![false; n];
    let mut out_mu = vec![ZERO; n];
    let mut out_v = vec![vec![ZERO; n]; n];
    let mut defective = false;
    for i in 0..n {
        if done[i] {
            continue;
        }
        let group: Vec<usize> = (i..n).filter(|&j| !done[j] && (mus[j] - mus[i]).norm() <= tol).collect();
        let mean = group.iter().map(|&j| mus[j]).sum::<C64>() / group.len() as f64;
        let shifted: DMat = (0..n)
            .map(|r| (0..n).map(|c| if r == c { p[r][c] - mean } else { p[r][c] }).collect())
            .collect();
        let svd = jacobi_svd(&shifted);
        let nullity = svd.sigma.iter().filter(|&&s| s <= tol).count().max(1);
        if nullity < group.len() {
            defective = true;
        }
        for (slot, &j) in group.iter().enumerate() {
            let k = n - 1 - slot.min(nullity - 1);
            out_mu[j] = if group.len() > nullity { mean } else { mus[j] };
            out_v[j] = col(&svd.v, k);
            done[j] = true;
        }
    }
    (out_mu, out_v, defective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matching_distance;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn companion_handles_zero_roots() {
        let r = companion_roots(&[c(-1.0, 0.0), ZERO, ZERO, ZERO]);
        let expect = [ZERO, ZERO, ZERO, c(1.0, 0.0)];
        assert!(matching_distance(&r, &expect).unwrap() < 1e-14);
    }

    #[test]
    fn companion_reconstructs_product() {
        let coeffs = [c(1.0, 2.0), c(-3.0, 0.5), c(0.2, -0.1), c(4.0, 1.0)];
        let r = companion_roots(&coeffs);
        for &x in &r {
            let p = (((x + coeffs[0]) * x + coeffs[1]) * x + coeffs[2]) * x + coeffs[3];
            assert!(p.norm() < 1e-11);
        }
    }

    #[test]
    fn hessenberg_matches_triangular_diagonal() {
        let a = vec![
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, 3.0)],
            vec![ZERO, c(-2.0, 0.0), c(1.0, 1.0)],
            vec![ZERO, ZERO, c(0.5, -0.5)],
        ];
        let e = hessenberg_eigenvalues(&a);
        let expect = [c(1.0, 1.0), c(-2.0, 0.0), c(0.5, -0.5)];
        assert!(matching_distance(&e, &expect).unwrap() < 1e-13);
    }

    #[test]
    fn diagonal_eigenpairs() {
        let d = [C64::from_polar(1.0, 0.3), C64::from_polar(1.0, -0.3), c(2.0, 0.0), c(0.5, 0.0)];
        let m = CMat4::from_diag(d);
        let e = eigen4(&m);
        for j in 0..4 {
            let k = (0..4).min_by(|&a, &b| (e.lambdas[a] - d[j]).norm().total_cmp(&(e.lambdas[b] - d[j]).norm())).unwrap();
            assert!((e.lambdas[k] - d[j]).norm() < 1e-14);
            assert!((e.vectors[k][j].norm() - 1.0).abs() < 1e-12);
        }
        assert!(!e.defective);
        assert!(e.degenerate.iter().all(|&f| !f));
    }

    #[test]
    fn semisimple_double_pairs() {
        let a = C64::from_polar(1.0, 1.0);
        let m = CMat4::from_diag([a, a, a.conj(), a.conj()]);
        let e = eigen4(&m);
        assert!(matching_distance(&e.lambdas, &[a, a, a.conj(), a.conj()]).unwrap() < 1e-13);
        assert!(e.max_residual(&m) < 1e-13);
        assert!(e.degenerate.iter().all(|&f| f));
        assert!(!e.defective);
    }

    #[test]
    fn jordan_block_flagged_defective() {
        let mut m = CMat4::from_diag([c(2.0, 0.0), c(2.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        m[(0, 1)] = ONE;
        let e = eigen4(&m);
        assert!(e.defective);
    }

    #[test]
    fn identity_is_fourfold() {
        let e = eigen4(&CMat4::identity());
        assert!(e.lambdas.iter().all(|l| (l - ONE).norm() < 1e-14));
        assert!(!e.defective);
    }
}
