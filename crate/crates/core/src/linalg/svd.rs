//! One-sided Jacobi SVD for small dense complex matrices.

use super::{LinalgError, C64, ZERO};

/// Row-major dense matrix, used only for the small auxiliary problems.
pub type DMat = Vec<Vec<C64>>;

#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values in descending order. There are `cols` of them; when
    /// `rows < cols` the trailing ones are (numerically) zero.
    pub sigma: Vec<f64>,
    /// Left singular vectors as columns of A·v_i / σ_i (zero columns where σ_i = 0).
    pub u: DMat,
    /// Right singular vectors, stored column-wise: `v[i][j]` is entry i of vector j.
    pub v: DMat,
}

impl Svd {
    pub fn right_vector(&self, j: usize) -> Vec<C64> {
        self.v.iter().map(|row| row[j]).collect()
    }
}

/// Singular value decomposition of the `rows × cols` matrix `a`.
///
/// Columns of a working copy of A are rotated pairwise until mutually
/// orthogonal; accumulating the rotations gives V with A·V = U·Σ.
pub fn jacobi_svd(a: &[Vec<C64>]) -> Svd {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    // Column-major working storage.
    let mut w: Vec<Vec<C64>> = (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect();
    let mut v: Vec<Vec<C64>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { C64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();

    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = w[p].iter().zip(&w[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = (gamma / g).conj();
                rotate(&mut w, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = w.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let w_sorted: Vec<Vec<C64>> = order.iter().map(|&j| w[j].clone()).collect();
    let v_sorted: Vec<Vec<C64>> = order.iter().map(|&j| v[j].clone()).collect();
    sigma = order.iter().map(|&j| sigma[j]).collect();

    let mut u = vec![vec![ZERO; cols]; rows];
    for (j, col) in w_sorted.iter().enumerate() {
        if sigma[j] > 0.0 {
            for i in 0..rows {
                u[i][j] = col[i] / sigma[j];
            }
        }
    }
    let mut vm = vec![vec![ZERO; cols]; cols];
    for (j, col) in v_sorted.iter().enumerate() {
        for i in 0..cols {
            vm[i][j] = col[i];
        }
    }
    Svd { sigma, u, v: vm }
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    for i in 0..cols[p].len() {
        let x = cols[p][i];
        let y = cols[q][i] * phase;
        cols[p][i] = x * c - y * s;
        cols[q][i] = x * s + y * c;
    }
}

/// Orthonormal basis of the numerical nullspace: right singular vectors with
/// σ ≤ tol·σ_max. A zero matrix has the whole space as nullspace.
pub fn nullspace(a: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    let svd = jacobi_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    (0..svd.sigma.len())
        .filter(|&j| smax == 0.0 || svd.sigma[j] <= tol * smax)
        .map(|j| svd.right_vector(j))
        .collect()
}

/// Nullspace of a 2×m boundary matrix, m ∈ {3, 4}. The result always has
/// dimension at least m − 2, since a 2×m matrix has rank ≤ 2.
pub fn nullspace2xm(b: &[Vec<C64>], tol: f64) -> Result<Vec<Vec<C64>>, LinalgError> {
    let m = b.first().map(|r| r.len()).unwrap_or(0);
    if !(m == 3 || m == 4) || b.len() != 2 || b[1].len() != m {
        return Err(LinalgError::BadColumnCount(m));
    }
    let svd = jacobi_svd(b);
    let smax = svd.sigma[0];
    let basis = (0..m)
        .filter(|&j| j >= 2 || smax == 0.0 || svd.sigma[j] <= tol * smax)
        .map(|j| svd.right_vector(j))
        .collect();
    Ok(basis)
}
