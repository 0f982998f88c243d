//! Edge modes of the semi-infinite crystal on z > 0 or z < 0.
//!
//! At a frequency inside a loop the monodromy has three multipliers on one
//! side of the unit circle. Their eigenvectors span the fields that decay
//! into the crystal; a mode is a combination Φ(0) = Σ α_j Φ_j meeting the
//! boundary condition at z = 0, i.e. a null vector of a 2×m matrix B.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{jacobi_svd, nullspace2xm, vnorm, CMat4, Vec4, C64, ZERO};
use crate::media::UnitCell;
use crate::spectra::DispersionCurve;
use crate::topology::{index_from_multipliers, sample_interior_tagged, winding_of_points, TopologyError};
use crate::transfer::{default_method, generator, monodromy, partial_transfer, StateVector, TransferError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Matched to a plane wave leaving into vacuum: H = ±Q E at z = 0.
    OutgoingVacuum,
    /// E(0) = 0.
    Pec,
    /// H(0) = 0.
    Pmc,
}

impl BoundaryCondition {
    pub fn tag(&self) -> &'static str {
        match self {
            BoundaryCondition::OutgoingVacuum => "outgoing_vacuum",
            BoundaryCondition::Pec => "pec",
            BoundaryCondition::Pmc => "pmc",
        }
    }
}

/// Half-line occupied by the crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// z ≥ 0, decaying as z → ∞.
    Right,
    /// z ≤ 0, decaying as z → −∞.
    Left,
}

impl Side {
    pub fn tag(&self) -> &'static str {
        match self {
            Side::Right => "right",
            Side::Left => "left",
        }
    }

    /// Side predicted by the winding of the enclosing loop.
    pub fn from_winding(w: i64) -> Option<Side> {
        match w.signum() {
            1 => Some(Side::Right),
            -1 => Some(Side::Left),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("ω = {omega} lies on the spectrum: a multiplier is within {min_gap:.3e} of the unit circle")]
    OnSpectrum { omega: C64, min_gap: f64 },
    #[error("ω = {omega} is a branch point: multipliers {separation:.3e} apart")]
    BranchPoint { omega: C64, separation: f64 },
    #[error("Ind(ω) = 0 at ω = {omega}: no decaying combination is forced")]
    IndexZero { omega: C64 },
    #[error("boundary system at ω = {omega} has no null vector (residual {residual:.3e})")]
    NumericalContradiction { omega: C64, residual: f64 },
    #[error("boundary matrix needs 3 or 4 eigenpairs, got {0}")]
    WrongSelectionSize(usize),
    #[error(transparent)]
    Transfer(#[from] TransferError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeOptions {
    /// Multipliers within this distance of the unit circle put ω on the spectrum.
    pub tol_circle: f64,
    /// Multipliers closer than this are treated as a branch point.
    pub tol_cluster: f64,
    /// Singular values below tol_rank·σ_max count as zero.
    pub tol_rank: f64,
    pub tol_bc: f64,
    pub tol_decay: f64,
    pub tol_ode: f64,
    /// Residual ‖M Φ_j − λ_j Φ_j‖ allowed for the selected eigenpairs.
    pub tol_eigen: f64,
    pub fd_step: f64,
    /// The decay fit uses `fit_len` consecutive lattice points, starting no
    /// earlier than `fit_start` and late enough that every subdominant term
    /// is below `fit_purity` relative to the dominant one.
    pub fit_start: u64,
    pub fit_len: u64,
    pub fit_purity: f64,
    /// Cells over which the ODE residual is checked.
    pub ode_cells: u32,
    /// Minimum distance of verification samples from every curve.
    pub margin: f64,
    pub seed: u64,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        EdgeOptions {
            tol_circle: 1e-8,
            tol_cluster: 1e-6,
            tol_rank: 1e-9,
            tol_bc: 1e-9,
            tol_decay: 1e-6,
            tol_ode: 1e-6,
            tol_eigen: 1e-8,
            fd_step: 1e-4,
            fit_start: 3,
            fit_len: 40,
            fit_purity: 1e-9,
            ode_cells: 3,
            margin: 1e-3,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMode {
    pub omega: C64,
    pub side: Side,
    pub bc: BoundaryCondition,
    /// Selected multipliers and their unit eigenvectors (E; H).
    pub lambdas: Vec<C64>,
    pub vectors: Vec<Vec4>,
    /// Unit-norm coefficients, first nonzero entry real positive.
    pub alphas: Vec<C64>,
    /// Per-cell decay factor: max |λ| on the right, 1 / min |λ| on the left.
    pub decay_rate: f64,
    /// ‖B α‖ / ‖α‖.
    pub boundary_residual: f64,
}

impl EdgeMode {
    fn growth(&self) -> Vec<C64> {
        self.lambdas
            .iter()
            .map(|l| match self.side {
                Side::Right => *l,
                Side::Left => l.inv(),
            })
            .collect()
    }

    /// Φ at the lattice point n (right) or −n (left), from the eigen-expansion.
    pub fn lattice_state(&self, n: u32) -> StateVector {
        let mut v = [ZERO; 4];
        for ((mu, a), phi) in self.growth().iter().zip(&self.alphas).zip(&self.vectors) {
            let c = a * mu.powi(n as i32);
            for i in 0..4 {
                v[i] += c * phi[i];
            }
        }
        StateVector::from_array(v)
    }

    /// log‖Φ(±n)‖, with the decay factored out so that large n do not underflow.
    pub fn lattice_log_norm(&self, n: u64) -> f64 {
        let rho = self.decay_rate;
        let mut v = [ZERO; 4];
        for ((mu, a), phi) in self.growth().iter().zip(&self.alphas).zip(&self.vectors) {
            let c = a * C64::from_polar((mu.norm() / rho).powf(n as f64), mu.arg() * n as f64);
            for i in 0..4 {
                v[i] += c * phi[i];
            }
        }
        n as f64 * rho.ln() + vnorm(&v).ln()
    }

    /// First lattice index beyond which every subdominant term is below
    /// `purity` times the dominant one.
    pub fn asymptotic_start(&self, purity: f64) -> u64 {
        let mu = self.growth();
        let amp: Vec<f64> = self.alphas.iter().zip(&self.vectors).map(|(a, v)| a.norm() * vnorm(v)).collect();
        let d = (0..mu.len()).max_by(|&i, &j| mu[i].norm().total_cmp(&mu[j].norm())).unwrap_or(0);
        let mut n: f64 = 0.0;
        for j in (0..mu.len()).filter(|&j| j != d) {
            let r = mu[j].norm() / mu[d].norm();
            if amp[j] == 0.0 {
                continue;
            }
            let need = (purity * amp[d] / amp[j]).ln() / r.ln();
            n = n.max(if need.is_finite() { need } else { 1e7 });
        }
        n.clamp(0.0, 1e7).ceil() as u64
    }

    /// Φ(0) = Σ α_j Φ_j.
    pub fn boundary_state(&self) -> StateVector {
        self.lattice_state(0)
    }

    /// Expected slope of log‖Φ(±n)‖ in n.
    pub fn log_decay(&self) -> f64 {
        self.decay_rate.ln()
    }
}

/// All modes at one frequency: a basis of the null space of B.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeModes {
    pub modes: Vec<EdgeMode>,
    pub rank: usize,
    /// 2·Ind(ω).
    pub twice_index: i32,
    /// Null space larger than m − 2: B lost rank.
    pub degenerate: bool,
    /// max ‖M Φ_j − λ_j Φ_j‖ over the selected eigenpairs.
    pub eigen_residual: f64,
}

/// B for the selected eigenvectors. Outgoing on the right is H + QE, on the
/// left H − QE, with Q E = (−E_y, E_x).
pub fn boundary_matrix(vectors: &[Vec4], side: Side, bc: BoundaryCondition) -> Result<Vec<Vec<C64>>, EdgeError> {
    if !(vectors.len() == 3 || vectors.len() == 4) {
        return Err(EdgeError::WrongSelectionSize(vectors.len()));
    }
    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let col = |v: &Vec4| -> [C64; 2] {
        match bc {
            BoundaryCondition::OutgoingVacuum => [v[2] - sign * v[1], v[3] + sign * v[0]],
            BoundaryCondition::Pec => [v[0], v[1]],
            BoundaryCondition::Pmc => [v[2], v[3]],
        }
    };
    let cols: Vec<[C64; 2]> = vectors.iter().map(col).collect();
    Ok((0..2).map(|r| cols.iter().map(|c| c[r]).collect()).collect())
}

fn matvec(b: &[Vec<C64>], x: &[C64]) -> Vec<C64> {
    b.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn normalise(mut a: Vec<C64>) -> Vec<C64> {
    let n = vnorm(&a);
    let big = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(i) = a.iter().position(|z| z.norm() > 1e-8 * big) {
        let rot = a[i].conj() / (a[i].norm() * n);
        for z in &mut a {
            *z *= rot;
        }
        a[i] = C64::new(a[i].norm(), 0.0);
    }
    a
}

struct Selection {
    side: Side,
    lambdas: Vec<C64>,
    vectors: Vec<Vec4>,
    twice_index: i32,
    eigen_residual: f64,
}

fn select(cell: &UnitCell, omega: C64, opts: &EdgeOptions) -> Result<Selection, EdgeError> {
    let m = monodromy(cell, omega, default_method(cell))?;
    let eig = m.eigen();
    let lam = eig.lambdas;
    let index = index_from_multipliers(omega, &lam, opts.tol_circle).map_err(|e| match e {
        TopologyError::OnSpectrum { omega, min_gap } => EdgeError::OnSpectrum { omega, min_gap },
        _ => EdgeError::OnSpectrum { omega, min_gap: f64::NAN },
    })?;
    let mut separation = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            separation = separation.min((lam[i] - lam[j]).norm());
        }
    }
    if !(separation > opts.tol_cluster) || eig.defective {
        return Err(EdgeError::BranchPoint { omega, separation });
    }
    let side = match index.twice_value {
        0 => return Err(EdgeError::IndexZero { omega }),
        t if t > 0 => Side::Right,
        _ => Side::Left,
    };
    let keep: Vec<usize> = (0..4)
        .filter(|&j| match side {
            Side::Right => lam[j].norm() < 1.0,
            Side::Left => lam[j].norm() > 1.0,
        })
        .collect();
    let mat: &CMat4 = &m.matrix;
    let eigen_residual = keep
        .iter()
        .map(|&j| {
            let mv = mat.mul_vec(&eig.vectors[j]);
            let r: Vec<C64> = (0..4).map(|i| mv[i] - lam[j] * eig.vectors[j][i]).collect();
            vnorm(&r)
        })
        .fold(0.0, f64::max);
    Ok(Selection {
        side,
        lambdas: keep.iter().map(|&j| lam[j]).collect(),
        vectors: keep.iter().map(|&j| eig.vectors[j]).collect(),
        twice_index: index.twice_value,
        eigen_residual,
    })
}

/// Every edge mode at ω: one per basis vector of null(B).
pub fn find_edge_modes(cell: &UnitCell, omega: C64, bc: BoundaryCondition, opts: &EdgeOptions) -> Result<EdgeModes, EdgeError> {
    let sel = select(cell, omega, opts)?;
    let b = boundary_matrix(&sel.vectors, sel.side, bc)?;
    let svd = jacobi_svd(&b);
    let smax = svd.sigma[0];
    let rank = svd.sigma.iter().filter(|&&s| smax > 0.0 && s > opts.tol_rank * smax).count();
    let basis = nullspace2xm(&b, opts.tol_rank).map_err(|_| EdgeError::WrongSelectionSize(sel.vectors.len()))?;
    if basis.is_empty() {
        return Err(EdgeError::NumericalContradiction { omega, residual: svd.sigma.last().copied().unwrap_or(f64::NAN) });
    }
    let decay_rate = match sel.side {
        Side::Right => sel.lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max),
        Side::Left => 1.0 / sel.lambdas.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min),
    };
    let mut modes = Vec::with_capacity(basis.len());
    for a in basis {
        let alphas = normalise(a);
        let boundary_residual = vnorm(&matvec(&b, &alphas)) / vnorm(&alphas);
        if !(boundary_residual <= opts.tol_bc) {
            return Err(EdgeError::NumericalContradiction { omega, residual: boundary_residual });
        }
        modes.push(EdgeMode {
            omega,
            side: sel.side,
            bc,
            lambdas: sel.lambdas.clone(),
            vectors: sel.vectors.clone(),
            alphas,
            decay_rate,
            boundary_residual,
        });
    }
    let degenerate = modes.len() > sel.vectors.len() - 2;
    Ok(EdgeModes { modes, rank, twice_index: sel.twice_index, degenerate, eigen_residual: sel.eigen_residual })
}

/// The edge mode at ω; the first basis mode if B is rank deficient.
pub fn find_edge_mode(cell: &UnitCell, omega: C64, bc: BoundaryCondition, opts: &EdgeOptions) -> Result<EdgeMode, EdgeError> {
    let mut set = find_edge_modes(cell, omega, bc, opts)?;
    Ok(set.modes.swap_remove(0))
}

/// Dimension of the space of edge modes at ω; zero when Ind(ω) = 0.
pub fn count_edge_modes(cell: &UnitCell, omega: C64, bc: BoundaryCondition, opts: &EdgeOptions) -> Result<usize, EdgeError> {
    match find_edge_modes(cell, omega, bc, opts) {
        Ok(set) => Ok(set.modes.len()),
        Err(EdgeError::IndexZero { .. }) => Ok(0),
        Err(e) => Err(e),
    }
}

/// Φ(z) for z on the mode's half-line: the lattice value below z carried
/// across the partial cell.
pub fn mode_state(cell: &UnitCell, mode: &EdgeMode, z: f64) -> StateVector {
    let (n, s) = match mode.side {
        Side::Right => {
            let n = z.max(0.0).floor();
            (n, z.max(0.0) - n)
        }
        Side::Left => {
            let n = (-z).max(0.0).ceil();
            (n, z.min(0.0) + n)
        }
    };
    let base = mode.lattice_state(n as u32);
    if s == 0.0 {
        return base;
    }
    StateVector::from_array(partial_transfer(cell, mode.omega, s).mul_vec(&base.to_array()))
}

/// Samples of the mode on [0, z_max] (right) or [−z_max, 0] (left).
pub fn mode_profile(cell: &UnitCell, mode: &EdgeMode, z_max: f64, samples_per_cell: usize) -> Vec<(f64, StateVector)> {
    let spc = samples_per_cell.max(1);
    let partial: Vec<CMat4> = (0..spc).map(|i| partial_transfer(cell, mode.omega, i as f64 / spc as f64)).collect();
    let total = (z_max.max(0.0) * spc as f64).round() as usize;
    (0..=total)
        .map(|j| {
            let (q, i) = (j / spc, j % spc);
            match mode.side {
                Side::Right => {
                    let v = partial[i].mul_vec(&mode.lattice_state(q as u32).to_array());
                    (j as f64 / spc as f64, StateVector::from_array(v))
                }
                Side::Left if i == 0 => (-(j as f64) / spc as f64, mode.lattice_state(q as u32)),
                Side::Left => {
                    let v = partial[spc - i].mul_vec(&mode.lattice_state(q as u32 + 1).to_array());
                    (-(j as f64) / spc as f64, StateVector::from_array(v))
                }
            }
        })
        .collect()
}

/// Least-squares slope of log‖Φ(±n)‖ over `len` lattice points from `n0`.
pub fn fitted_log_decay(mode: &EdgeMode, n0: u64, len: u64) -> f64 {
    let pts: Vec<(f64, f64)> = (n0..=n0 + len.max(1)).map(|n| (n as f64, mode.lattice_log_norm(n))).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx)));
    num / den
}

/// max ‖Φ′ − ω Q⁻¹𝒜 Φ‖ / ‖Φ‖ by central differences at points inside
/// layers over the first `cells` cells of the half-line.
pub fn ode_residual(cell: &UnitCell, mode: &EdgeMode, cells: u32, h: f64) -> f64 {
    let bounds = cell.interfaces();
    let mut worst: f64 = 0.0;
    for c in 0..cells.max(1) {
        let origin = match mode.side {
            Side::Right => c as f64,
            Side::Left => -(c as f64) - 1.0,
        };
        for (li, layer) in cell.layers().iter().enumerate() {
            let g = generator(layer, mode.omega);
            for frac in [0.25, 0.5, 0.75] {
                let t = bounds[li] + frac * (bounds[li + 1] - bounds[li]);
                if t - h <= bounds[li] || t + h >= bounds[li + 1] {
                    continue;
                }
                let z = origin + t;
                let p = mode_state(cell, mode, z).to_array();
                let a = mode_state(cell, mode, z + h).to_array();
                let b = mode_state(cell, mode, z - h).to_array();
                let gp = g.mul_vec(&p);
                let r: Vec<C64> = (0..4).map(|i| (a[i] - b[i]) / (2.0 * h) - gp[i]).collect();
                worst = worst.max(vnorm(&r) / vnorm(&p));
            }
        }
    }
    worst
}

/// Outcome of the edge-mode checks at one interior frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSample {
    pub omega: C64,
    pub winding: i64,
    pub expected_side: Option<Side>,
    pub side: Option<Side>,
    pub twice_index: Option<i32>,
    pub rank: Option<usize>,
    pub count: Option<usize>,
    pub boundary_residual: f64,
    pub decay_rate: f64,
    /// First lattice point of the decay fit.
    pub fit_start: u64,
    pub fitted_log_decay: f64,
    pub decay_error: f64,
    pub ode_residual: f64,
    pub eigen_residual: f64,
    pub failure: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeReport {
    pub band_index: usize,
    pub bc: BoundaryCondition,
    pub requested: usize,
    pub samples: Vec<EdgeSample>,
    /// Candidates inside this loop dropped because another curve also encloses them.
    pub excluded_by_other: usize,
}

impl EdgeReport {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.pass).count()
    }

    pub fn pass(&self) -> bool {
        self.samples.len() >= self.requested && self.failures() == 0
    }

    /// Samples with rank(B) = 2 whose mode count is not one.
    pub fn count_failures(&self) -> usize {
        self.samples.iter().filter(|s| s.rank == Some(2) && s.count != Some(1)).count()
    }
}

/// Checks one frequency: a mode on the side predicted by `winding`, meeting
/// the boundary condition, decaying at the selected rate and solving the ODE.
pub fn check_sample(cell: &UnitCell, omega: C64, winding: i64, bc: BoundaryCondition, opts: &EdgeOptions) -> EdgeSample {
    let expected_side = Side::from_winding(winding);
    let mut s = EdgeSample {
        omega,
        winding,
        expected_side,
        side: None,
        twice_index: None,
        rank: None,
        count: None,
        boundary_residual: f64::NAN,
        decay_rate: f64::NAN,
        fit_start: 0,
        fitted_log_decay: f64::NAN,
        decay_error: f64::NAN,
        ode_residual: f64::NAN,
        eigen_residual: f64::NAN,
        failure: None,
        pass: false,
    };
    let set = match find_edge_modes(cell, omega, bc, opts) {
        Ok(set) => set,
        Err(e) => {
            s.failure = Some(e.to_string());
            return s;
        }
    };
    let mode = &set.modes[0];
    s.side = Some(mode.side);
    s.twice_index = Some(set.twice_index);
    s.rank = Some(set.rank);
    s.count = Some(set.modes.len());
    s.eigen_residual = set.eigen_residual;
    s.boundary_residual = set.modes.iter().map(|m| m.boundary_residual).fold(0.0, f64::max);
    s.decay_rate = mode.decay_rate;
    s.fit_start = mode.asymptotic_start(opts.fit_purity).max(opts.fit_start);
    s.fitted_log_decay = fitted_log_decay(mode, s.fit_start, opts.fit_len);
    s.decay_error = (s.fitted_log_decay - mode.log_decay()).abs();
    s.ode_residual = set.modes.iter().map(|m| ode_residual(cell, m, opts.ode_cells, opts.fd_step)).fold(0.0, f64::max);
    let mut why = Vec::new();
    if s.side != expected_side {
        why.push(format!("mode on {:?} side, winding {}", mode.side, winding));
    }
    if !(s.boundary_residual <= opts.tol_bc) {
        why.push(format!("boundary residual {:.3e}", s.boundary_residual));
    }
    if !(s.decay_error <= opts.tol_decay) {
        why.push(format!("decay slope off by {:.3e}", s.decay_error));
    }
    if !(s.ode_residual <= opts.tol_ode) {
        why.push(format!("ODE residual {:.3e}", s.ode_residual));
    }
    if !(s.eigen_residual <= opts.tol_eigen) {
        why.push(format!("eigenpair residual {:.3e}", s.eigen_residual));
    }
    s.pass = why.is_empty();
    if !s.pass {
        s.failure = Some(why.join("; "));
    }
    s
}

/// Samples `n_samples` points inside `curve` but outside every other curve
/// of `all`, and checks the edge mode at each.
pub fn verify_edge_theorem(
    cell: &UnitCell,
    curve: &DispersionCurve,
    all: &[DispersionCurve],
    n_samples: usize,
    bc: BoundaryCondition,
    opts: &EdgeOptions,
) -> EdgeReport {
    let drawn = sample_interior_tagged(curve, all, n_samples, opts.margin, opts.seed, curve.band_index as u64);
    let pts = curve.loop_points();
    let samples = drawn
        .points
        .par_iter()
        .map(|&p| {
            let w = winding_of_points(&pts, p, opts.margin).map(|w| w.winding).unwrap_or(0);
            check_sample(cell, p, w, bc, opts)
        })
        .collect();
    EdgeReport { band_index: curve.band_index, bc, requested: n_samples, samples, excluded_by_other: drawn.excluded_by_other }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::media::{example3_hermitian, example3_nonhermitian, DEFAULT_L};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // Near the centroid of the first non-Hermitian loop.
    const INSIDE_BAND_ONE: (f64, f64) = (0.5303, -0.0805);

    #[test]
    fn zero_electric_field_gives_magnetic_rows() {
        let v: Vec<Vec4> = (0..3).map(|j| [ZERO, ZERO, c(j as f64, 1.0), c(1.0, -(j as f64))]).collect();
        let b = boundary_matrix(&v, Side::Right, BoundaryCondition::OutgoingVacuum).unwrap();
        for j in 0..3 {
            assert_eq!(b[0][j], v[j][2]);
            assert_eq!(b[1][j], v[j][3]);
        }
    }

    #[test]
    fn constructed_kernel_is_everything() {
        // H = −Q E makes H + Q E vanish.
        let v: Vec<Vec4> = [(1.0, 0.0), (0.0, 1.0), (0.6, -0.8)]
            .iter()
            .map(|&(ex, ey)| [c(ex, 0.0), c(ey, 0.0), c(ey, 0.0), c(-ex, 0.0)])
            .collect();
        let b = boundary_matrix(&v, Side::Right, BoundaryCondition::OutgoingVacuum).unwrap();
        assert!(b.iter().flatten().all(|z| z.norm() == 0.0));
        assert_eq!(nullspace2xm(&b, 1e-9).unwrap().len(), 3);
        assert!(matches!(boundary_matrix(&v[..2], Side::Right, BoundaryCondition::Pec), Err(EdgeError::WrongSelectionSize(2))));
    }

    #[test]
    fn mode_inside_first_loop() {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let w = c(INSIDE_BAND_ONE.0, INSIDE_BAND_ONE.1);
        let opts = EdgeOptions::default();
        for bc in [BoundaryCondition::OutgoingVacuum, BoundaryCondition::Pec, BoundaryCondition::Pmc] {
            let set = find_edge_modes(&cell, w, bc, &opts).unwrap();
            assert_eq!(set.rank, 2);
            assert_eq!(set.modes.len(), 1);
            let m = &set.modes[0];
            assert!(m.boundary_residual <= 1e-12);
            assert!((vnorm(&m.alphas) - 1.0).abs() < 1e-14);
            assert!(m.decay_rate < 1.0);
            let first = m.alphas.iter().find(|z| z.norm() > 1e-8).unwrap();
            assert!(first.im == 0.0 && first.re > 0.0);
        }
    }

    #[test]
    fn outgoing_condition_holds_at_the_boundary() {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let m = find_edge_mode(&cell, c(INSIDE_BAND_ONE.0, INSIDE_BAND_ONE.1), BoundaryCondition::OutgoingVacuum, &EdgeOptions::default()).unwrap();
        let p = m.boundary_state();
        let sign = if m.side == Side::Right { 1.0 } else { -1.0 };
        let r = [p.h[0] - sign * p.e[1], p.h[1] + sign * p.e[0]];
        assert!(vnorm(&r) <= 1e-9 * p.norm());
    }

    #[test]
    fn single_eigenpair_profile_is_geometric() {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let mut m = find_edge_mode(&cell, c(INSIDE_BAND_ONE.0, INSIDE_BAND_ONE.1), BoundaryCondition::Pec, &EdgeOptions::default()).unwrap();
        m.alphas = vec![ONE, ZERO, ZERO];
        let mu = match m.side {
            Side::Right => m.lambdas[0].norm(),
            Side::Left => 1.0 / m.lambdas[0].norm(),
        };
        for n in 0..10 {
            let expect = mu.powi(n as i32) * vnorm(&m.vectors[0]);
            assert!((m.lattice_state(n).norm() - expect).abs() <= 1e-13 * expect);
        }
    }

    #[test]
    fn profile_matches_propagation() {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let m = find_edge_mode(&cell, c(INSIDE_BAND_ONE.0, INSIDE_BAND_ONE.1), BoundaryCondition::OutgoingVacuum, &EdgeOptions::default()).unwrap();
        let prof = mode_profile(&cell, &m, 2.0, 8);
        assert_eq!(prof.len(), 17);
        assert_eq!(prof[0].1, m.boundary_state());
        let expect_z0 = if m.side == Side::Right { 1.0 } else { -1.0 };
        assert_eq!(prof[8].0, expect_z0);
        // Carrying the boundary state one full cell reaches the next lattice point.
        let mono = monodromy(&cell, m.omega, default_method(&cell)).unwrap().matrix;
        let (start, end) = match m.side {
            Side::Right => (m.lattice_state(0), m.lattice_state(1)),
            Side::Left => (m.lattice_state(1), m.lattice_state(0)),
        };
        let carried = mono.mul_vec(&start.to_array());
        let diff: Vec<C64> = (0..4).map(|i| carried[i] - end.to_array()[i]).collect();
        assert!(vnorm(&diff) <= 1e-9 * end.norm());
    }

    #[test]
    fn full_check_inside_first_loop() {
        let cell = example3_nonhermitian(DEFAULT_L).unwrap();
        let set = find_edge_modes(&cell, c(INSIDE_BAND_ONE.0, INSIDE_BAND_ONE.1), BoundaryCondition::OutgoingVacuum, &EdgeOptions::default()).unwrap();
        let w = if set.twice_index > 0 { 1 } else { -1 };
        let s = check_sample(&cell, c(INSIDE_BAND_ONE.0, INSIDE_BAND_ONE.1), w, BoundaryCondition::OutgoingVacuum, &EdgeOptions::default());
        assert!(s.pass, "{s:?}");
    }

    #[test]
    fn gap_frequency_has_no_mode() {
        let cell = example3_hermitian(DEFAULT_L).unwrap();
        let opts = EdgeOptions::default();
        let w = c(1.4, 0.0);
        assert!(matches!(find_edge_mode(&cell, w, BoundaryCondition::Pec, &opts), Err(EdgeError::IndexZero { .. })));
        assert_eq!(count_edge_modes(&cell, w, BoundaryCondition::Pec, &opts).unwrap(), 0);
    }

    #[test]
    fn real_band_frequency_is_on_spectrum() {
        let cell = example3_hermitian(DEFAULT_L).unwrap();
        assert!(matches!(
            find_edge_mode(&cell, c(0.5, 0.0), BoundaryCondition::Pmc, &EdgeOptions::default()),
            Err(EdgeError::OnSpectrum { .. })
        ));
    }
}
