//! Complex band structure: the dispersion relation det(M(ω) − e^{ik}) = 0,
//! its roots in ω at fixed k, and the band curves ω_n(k) traced over the
//! Brillouin zone.

mod roots;
mod trace;

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{quartic_roots, C64};
use crate::media::UnitCell;
use crate::transfer::{default_method, monodromy_matrix, monodromy_with, Composition, Method, Monodromy, TransferError};

pub use roots::{count_zeros, count_zeros_near, zeros_in_rect, Rect, Root};
pub use trace::{refine_between, trace_band};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error("search region is empty or not finite")]
    InvalidRegion,
    #[error("k grid must be increasing with at least two points")]
    InvalidGrid,
    #[error("contour passes too close to a root")]
    BoundaryTooClose,
    #[error("rectangle subdivision exceeded its depth limit")]
    MaxDepthExceeded,
    #[error("dispersion function is not finite")]
    NonFinite,
    #[error("continuation stalled at k = {k}, ω = {omega}")]
    ContinuationStall { k: f64, omega: C64 },
    #[error("band collision near k = {k}, ω = {omega}")]
    BandCollision { k: f64, omega: C64, partial: Box<DispersionCurve> },
    #[error("no roots in the search region at the seed wavenumber")]
    NoSeeds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectraOptions {
    /// Transfer-matrix method; `None` picks closed forms when available.
    pub method: Option<Method>,
    pub composition: Composition,
    /// Number of k intervals on [−π, π].
    pub k_samples: usize,
    /// Continuation gives up below this k step.
    pub min_step: f64,
    /// Two roots closer than this (relative to 1 + |ω|) count as colliding.
    pub collision_tol: f64,
    pub close_tol: f64,
    /// 1% region inflations allowed when a boundary hits a root.
    pub boundary_retries: usize,
    /// Use tr(M₂) − 2cos k instead of the squared quartic on isotropic cells.
    pub reduce_isotropic: bool,
}

impl Default for SpectraOptions {
    fn default() -> Self {
        SpectraOptions {
            method: None,
            composition: Composition::Propagation,
            k_samples: 512,
            min_step: 1e-5,
            collision_tol: 1e-6,
            close_tol: 1e-7,
            boundary_retries: 3,
            reduce_isotropic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispersionForm {
    /// P(e^{ik}) with P the characteristic polynomial of M(ω).
    Full,
    /// tr of the (E_x, H_y) block minus 2cos k. On isotropic cells the two
    /// polarisations decouple into similar blocks, P is a perfect square and
    /// every band would otherwise be a double root.
    Reduced,
}

/// The dispersion function of one cell, analytic in ω for each real k.
#[derive(Debug, Clone)]
pub struct Dispersion<'a> {
    cell: &'a UnitCell,
    method: Method,
    composition: Composition,
    form: DispersionForm,
}

impl<'a> Dispersion<'a> {
    pub fn new(cell: &'a UnitCell, opts: &SpectraOptions) -> Result<Self, SpectraError> {
        let method = opts.method.unwrap_or_else(|| default_method(cell));
        let form = if opts.reduce_isotropic && cell.is_isotropic(1e-14) {
            DispersionForm::Reduced
        } else {
            DispersionForm::Full
        };
        // Surface unsupported layers once instead of as NaNs mid-contour.
        monodromy_matrix(cell, C64::new(0.5, 0.0), method, opts.composition)?;
        Ok(Dispersion { cell, method, composition: opts.composition, form })
    }

    pub fn form(&self) -> DispersionForm {
        self.form
    }

    pub fn cell(&self) -> &UnitCell {
        self.cell
    }

    pub fn monodromy(&self, omega: C64) -> Result<Monodromy, SpectraError> {
        Ok(monodromy_with(self.cell, omega, self.method, self.composition)?)
    }

    pub fn eval(&self, omega: C64, k: f64) -> C64 {
        self.eval_dk(omega, k).0
    }

    /// Value and ∂/∂k; NaN if the transfer matrix cannot be formed.
    pub(crate) fn eval_dk(&self, omega: C64, k: f64) -> (C64, C64) {
        let nan = C64::new(f64::NAN, f64::NAN);
        match self.form {
            DispersionForm::Full => match self.monodromy(omega) {
                Ok(m) => {
                    let lam = C64::from_polar(1.0, k);
                    (m.coeffs.eval(lam), m.coeffs.eval_derivative(lam) * C64::i() * lam)
                }
                Err(_) => (nan, nan),
            },
            DispersionForm::Reduced => match monodromy_matrix(self.cell, omega, self.method, self.composition) {
                Ok(m) => (m[(0, 0)] + m[(3, 3)] - 2.0 * k.cos(), C64::new(2.0 * k.sin(), 0.0)),
                Err(_) => (nan, nan),
            },
        }
    }
}

/// One band ω_n(k) sampled on an increasing k grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub band_index: usize,
    pub samples: Vec<(f64, C64)>,
    pub closed: bool,
    /// Grid wavenumbers where the band passed through a multiple root.
    pub kinks: Vec<f64>,
}

impl DispersionCurve {
    pub fn omegas(&self) -> Vec<C64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// |ω(π) − ω(−π)|.
    pub fn closure_gap(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => (a.1 - b.1).norm(),
            _ => f64::INFINITY,
        }
    }

    /// Largest jump between consecutive samples.
    pub fn max_step(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].1 - w[0].1).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.samples.iter().map(|s| s.1.im.abs()).fold(0.0, f64::max)
    }

    pub fn real_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.1.re), hi.max(s.1.re)))
    }

    /// max_k |ω(k) − ω(−k)|; `None` unless the grid is symmetric about 0.
    pub fn reciprocity_defect(&self) -> Option<f64> {
        let n = self.samples.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let (k, w) = self.samples[j];
            let (km, wm) = self.samples[n - 1 - j];
            if (k + km).abs() > 1e-12 {
                return None;
            }
            worst = worst.max((w - wm).norm());
        }
        Some(worst)
    }

    /// The one-period loop: samples without the repeated endpoint.
    pub fn loop_points(&self) -> Vec<C64> {
        let mut pts = self.omegas();
        if self.closed && pts.len() > 1 {
            pts.pop();
        }
        pts
    }

    /// Signed-area centroid of the sampled loop; the vertex mean when the
    /// enclosed area vanishes.
    pub fn centroid(&self) -> Option<C64> {
        let p = self.loop_points();
        let area = signed_area(&p);
        if p.is_empty() {
            return None;
        }
        if area.abs() < 1e-14 {
            return Some(p.iter().sum::<C64>() / p.len() as f64);
        }
        let n = p.len();
        let mut c = C64::new(0.0, 0.0);
        for i in 0..n {
            let (a, b) = (p[i], p[(i + 1) % n]);
            let cross = a.re * b.im - b.re * a.im;
            c += (a + b) * cross;
        }
        Some(c / (6.0 * area))
    }

    pub fn enclosed_area(&self) -> f64 {
        signed_area(&self.loop_points())
    }
}

/// Shoelace area of a closed polygon (positive when counterclockwise).
pub fn signed_area(p: &[C64]) -> f64 {
    let n = p.len();
    (0..n)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % n]);
            a.re * b.im - b.re * a.im
        })
        .sum::<f64>()
        * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandDiagram {
    pub curves: Vec<DispersionCurve>,
    pub search_region: Rect,
    pub warnings: Vec<String>,
}

/// k_j = −π + 2πj/n for j = 0..=n.
pub fn k_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..=n).map(|j| if j == n { PI } else { -PI + 2.0 * PI * j as f64 / n as f64 }).collect()
}

/// The four Floquet multipliers λ_j(ω), roots of the characteristic polynomial.
pub fn lambdas_at(cell: &UnitCell, omega: C64) -> Result<[C64; 4], SpectraError> {
    lambdas_with(cell, omega, &SpectraOptions::default())
}

pub fn lambdas_with(cell: &UnitCell, omega: C64, opts: &SpectraOptions) -> Result<[C64; 4], SpectraError> {
    let method = opts.method.unwrap_or_else(|| default_method(cell));
    let m = monodromy_with(cell, omega, method, opts.composition)?;
    let lam = quartic_roots(&m.coeffs);
    let (lo, hi) = lam.iter().fold((f64::INFINITY, 0.0f64), |(a, b), l| (a.min(l.norm()), b.max(l.norm())));
    if !(hi / lo > SPREAD_LIMIT) {
        return Ok(lam);
    }
    // Roots far below the largest are resolved only to eps·max|λ|. They are
    // recovered as reciprocals of the large roots of M⁻¹, which is the
    // product of the layer matrices at −ω taken in the opposite order.
    let reverse = match opts.composition {
        Composition::Propagation => Composition::Reversed,
        Composition::Reversed => Composition::Propagation,
    };
    let inv = quartic_roots(&monodromy_with(cell, -omega, method, reverse)?.coeffs);
    let mut out: Vec<C64> = lam.iter().filter(|l| l.norm() >= 1.0).copied().collect();
    let small: Vec<C64> = inv.iter().filter(|l| l.norm() > 1.0).map(|l| l.inv()).collect();
    if out.len() + small.len() != 4 {
        return Ok(lam);
    }
    out.extend(small);
    Ok([out[0], out[1], out[2], out[3]])
}

/// Modulus ratio of the multipliers beyond which the small ones are taken
/// from the inverse monodromy.
const SPREAD_LIMIT: f64 = 1e3;

/// det(M(ω) − e^{ik} I), always in the full quartic form.
pub fn dispersion_det(cell: &UnitCell, omega: C64, k: f64) -> Result<C64, SpectraError> {
    let m = monodromy_with(cell, omega, default_method(cell), Composition::Propagation)?;
    Ok(m.coeffs.eval(C64::from_polar(1.0, k)))
}

/// Roots in ω of the dispersion function at wavenumber k inside `region`,
/// sorted by real part and truncated to `max_roots`.
pub fn roots_in_region(cell: &UnitCell, k: f64, region: &Rect, max_roots: usize, opts: &SpectraOptions) -> Result<Vec<Root>, SpectraError> {
    let disp = Dispersion::new(cell, opts)?;
    let f = |w: C64| disp.eval(w, k);
    let mut roots = zeros_in_rect(&f, region, opts.boundary_retries)?;
    roots.truncate(max_roots);
    Ok(roots)
}

/// Seeds for tracing are taken at this grid position (k = −π/2): at k = 0
/// every cell has the fourfold root ω = 0, which no band can be seeded from.
fn seed_index(n: usize) -> usize {
    n / 4
}

/// Traces every band with a root in `region` at the seed wavenumber, orders
/// the curves by (min Re ω, max Re ω) and keeps the first `n_bands`.
pub fn band_diagram(cell: &UnitCell, region: &Rect, n_bands: usize, opts: &SpectraOptions) -> Result<BandDiagram, SpectraError> {
    let disp = Dispersion::new(cell, opts)?;
    let grid = k_grid(opts.k_samples);
    let ks = grid[seed_index(grid.len() - 1)];
    let f = |w: C64| disp.eval(w, ks);
    let seeds = zeros_in_rect(&f, region, opts.boundary_retries)?;
    let mut warnings = Vec::new();
    let simple: Vec<C64> = seeds
        .iter()
        .filter_map(|r| {
            if r.multiplicity == 1 {
                Some(r.omega)
            } else {
                warnings.push(format!("multiple root at seed k = {ks:.6}, ω = {:.6}; not traced", r.omega));
                None
            }
        })
        .take(2 * n_bands + 2)
        .collect();
    if simple.is_empty() {
        return Err(SpectraError::NoSeeds);
    }
    let traced: Vec<Result<DispersionCurve, SpectraError>> =
        simple.par_iter().map(|&w| trace_band(&disp, (ks, w), &grid, opts)).collect();
    let mut curves = Vec::new();
    let mut first_err = None;
    for (w, t) in simple.iter().zip(traced) {
        match t {
            Ok(c) => curves.push(c),
            Err(e) => {
                warnings.push(format!("band seeded at ω = {w:.6} failed: {e}"));
                first_err.get_or_insert(e);
            }
        }
    }
    curves.sort_by(|a, b| {
        let (ra, rb) = (a.real_range(), b.real_range());
        ra.0.total_cmp(&rb.0).then(ra.1.total_cmp(&rb.1))
    });
    if curves.len() < n_bands {
        if let Some(e) = first_err {
            return Err(e);
        }
        warnings.push(format!("only {} bands found in the search region", curves.len()));
    }
    curves.truncate(n_bands);
    for (i, c) in curves.iter_mut().enumerate() {
        c.band_index = i + 1;
        if !c.closed {
            warnings.push(format!("band {} does not close: gap {:.3e}", i + 1, c.closure_gap()));
        }
    }
    for w in curves.windows(2) {
        let (a, b) = (w[0].real_range(), w[1].real_range());
        if b.0 < a.1 {
            warnings.push(format!(
                "bands {} and {} overlap in real part; ordered by minimum, then maximum",
                w[0].band_index, w[1].band_index
            ));
        }
        if a.0 == b.0 && a.1 == b.1 {
            warnings.push(format!("bands {} and {} tie in real-part range", w[0].band_index, w[1].band_index));
        }
    }
    Ok(BandDiagram { curves, search_region: *region, warnings })
}

/// Per band: max_k |ω_n(k) − ω_n(−k)| ≤ tol. Bands on an asymmetric grid
/// report false.
pub fn is_reciprocal(diagram: &BandDiagram, tol: f64) -> Vec<bool> {
    diagram
        .curves
        .iter()
        .map(|c| c.reciprocity_defect().is_some_and(|d| d <= tol))
        .collect()
}

/// Eigenvalue round trip: min_j |λ_j(ω) − e^{ik}| for a traced sample.
pub fn multiplier_mismatch(cell: &UnitCell, k: f64, omega: C64, opts: &SpectraOptions) -> Result<f64, SpectraError> {
    let lam = lambdas_with(cell, omega, opts)?;
    let target = C64::from_polar(1.0, k);
    Ok(lam.iter().map(|l| (l - target).norm()).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests;
