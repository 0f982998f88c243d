//! Layered media: material tensors, layers, unit cells and the
//! Hermitian-to-non-Hermitian deformation.
//!
//! A unit cell always has period 1. Layers are listed in the order a wave
//! travelling in +z meets them, so the first layer occupies [0, t1).

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{CMat2, I, ONE, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MediaError {
    #[error("layer thickness must be positive and at most 1, got {0}")]
    InvalidThickness(f64),
    #[error("A-layer thickness L must lie in (0, 1/2), got {0}")]
    InvalidSandwich(f64),
    #[error("layer thicknesses sum to {0}, expected 1")]
    PeriodMismatch(f64),
    #[error("a unit cell needs at least one layer")]
    EmptyCell,
    #[error("homotopy endpoints have different layer structure")]
    StructureMismatch,
    #[error("homotopy parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
}

/// Relative permittivity or permeability: the in-plane 2×2 block that drives
/// z-propagation plus the zz entry, which is carried along but never used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialTensor {
    pub xx: C64,
    pub xy: C64,
    pub yx: C64,
    pub yy: C64,
    pub zz: C64,
}

impl MaterialTensor {
    pub fn new(xx: C64, xy: C64, yx: C64, yy: C64, zz: C64) -> Self {
        MaterialTensor { xx, xy, yx, yy, zz }
    }

    pub fn identity() -> Self {
        Self::scalar(ONE)
    }

    pub fn scalar(v: C64) -> Self {
        MaterialTensor::new(v, ZERO, ZERO, v, v)
    }

    pub fn in_plane(&self) -> CMat2 {
        CMat2::new(self.xx, self.xy, self.yx, self.yy)
    }

    pub fn conj_transpose(&self) -> Self {
        MaterialTensor::new(self.xx.conj(), self.yx.conj(), self.xy.conj(), self.yy.conj(), self.zz.conj())
    }

    fn entries(&self) -> [C64; 5] {
        [self.xx, self.xy, self.yx, self.yy, self.zz]
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &MaterialTensor) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_diff(&self.conj_transpose()) <= tol
    }

    /// Isotropic in the transverse plane: a multiple of the identity.
    pub fn is_isotropic(&self, tol: f64) -> bool {
        self.xy.norm() <= tol && self.yx.norm() <= tol && (self.xx - self.yy).norm() <= tol
    }

    pub fn lerp(&self, other: &MaterialTensor, t: f64) -> Self {
        let f = |a: C64, b: C64| a * (1.0 - t) + b * t;
        MaterialTensor::new(
            f(self.xx, other.xx),
            f(self.xy, other.xy),
            f(self.yx, other.yx),
            f(self.yy, other.yy),
            f(self.zz, other.zz),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// How a layer was built. The A and F variants keep their scalar parameters
/// so the closed-form transfer matrices can be used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerKind {
    /// Anisotropic dielectric: background ε0, anisotropy δ, axis angle φ.
    A { eps0: C64, delta: f64, phi: f64 },
    /// Faraday (gyrotropic) layer: ε̃0 with gyration α in ε and β in μ.
    F { eps0t: C64, alpha: f64, beta: f64 },
    Generic,
}

impl LayerKind {
    pub fn tag(&self) -> &'static str {
        match self {
            LayerKind::A { .. } => "A",
            LayerKind::F { .. } => "F",
            LayerKind::Generic => "generic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub thickness: f64,
    pub eps: MaterialTensor,
    pub mu: MaterialTensor,
    pub kind: LayerKind,
}

fn check_thickness(t: f64) -> Result<(), MediaError> {
    if t > 0.0 && t <= 1.0 + 1e-12 && t.is_finite() {
        Ok(())
    } else {
        Err(MediaError::InvalidThickness(t))
    }
}

impl Layer {
    pub fn generic(thickness: f64, eps: MaterialTensor, mu: MaterialTensor) -> Result<Self, MediaError> {
        check_thickness(thickness)?;
        Ok(Layer { thickness, eps, mu, kind: LayerKind::Generic })
    }

    /// Isotropic dielectric with μ = 1, built as an A layer with δ = 0 so the
    /// closed form applies.
    pub fn isotropic(eps: C64, thickness: f64) -> Result<Self, MediaError> {
        a_layer(eps, 0.0, 0.0, thickness)
    }

    pub fn vacuum(thickness: f64) -> Result<Self, MediaError> {
        Self::isotropic(ONE, thickness)
    }

    pub fn is_isotropic(&self, tol: f64) -> bool {
        self.eps.is_isotropic(tol) && self.mu.is_isotropic(tol)
    }

    /// Same thickness and tensors within `tol`.
    pub fn same_medium(&self, other: &Layer, tol: f64) -> bool {
        (self.thickness - other.thickness).abs() <= tol
            && self.eps.max_diff(&other.eps) <= tol
            && self.mu.max_diff(&other.mu) <= tol
    }
}

/// A layer with ε = [[ε0+δcos2φ, δsin2φ], [δsin2φ, ε0−δcos2φ]] and μ = I.
pub fn a_layer(eps0: C64, delta: f64, phi: f64, thickness: f64) -> Result<Layer, MediaError> {
    check_thickness(thickness)?;
    let (s2, c2) = (2.0 * phi).sin_cos();
    let eps = MaterialTensor::new(eps0 + delta * c2, C64::from(delta * s2), C64::from(delta * s2), eps0 - delta * c2, eps0);
    Ok(Layer {
        thickness,
        eps,
        mu: MaterialTensor::identity(),
        kind: LayerKind::A { eps0, delta, phi },
    })
}

/// F layer with ε = [[ε̃0, iα], [−iα, ε̃0]] and μ = [[1, iβ], [−iβ, 1]].
pub fn f_layer(eps0t: C64, alpha: f64, beta: f64, thickness: f64) -> Result<Layer, MediaError> {
    check_thickness(thickness)?;
    let eps = MaterialTensor::new(eps0t, I * alpha, -I * alpha, eps0t, eps0t);
    let mu = MaterialTensor::new(ONE, I * beta, -I * beta, ONE, ONE);
    Ok(Layer { thickness, eps, mu, kind: LayerKind::F { eps0t, alpha, beta } })
}

/// One period of a layered medium.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCell {
    layers: Vec<Layer>,
}

pub const PERIOD_TOL: f64 = 1e-12;

impl UnitCell {
    pub fn new(layers: Vec<Layer>) -> Result<Self, MediaError> {
        if layers.is_empty() {
            return Err(MediaError::EmptyCell);
        }
        for l in &layers {
            check_thickness(l.thickness)?;
        }
        let total: f64 = layers.iter().map(|l| l.thickness).sum();
        if (total - 1.0).abs() > PERIOD_TOL {
            return Err(MediaError::PeriodMismatch(total));
        }
        Ok(UnitCell { layers })
    }

    /// Piecewise-constant approximation of a continuous profile z ↦ (ε, μ),
    /// sampled at the midpoints of `n` equal slabs.
    pub fn from_profile<F>(n: usize, profile: F) -> Result<Self, MediaError>
    where
        F: Fn(f64) -> (MaterialTensor, MaterialTensor),
    {
        if n == 0 {
            return Err(MediaError::EmptyCell);
        }
        let h = 1.0 / n as f64;
        let layers = (0..n)
            .map(|j| {
                let (eps, mu) = profile((j as f64 + 0.5) * h);
                Layer::generic(h, eps, mu)
            })
            .collect::<Result<Vec<_>, _>>()?;
        UnitCell::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn period(&self) -> f64 {
        1.0
    }

    /// Layer boundaries 0 = z0 < z1 < … < zN = 1.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut z = vec![0.0];
        let mut acc = 0.0;
        for l in &self.layers {
            acc += l.thickness;
            z.push(acc);
        }
        let last = z.len() - 1;
        z[last] = 1.0;
        z
    }

    /// The layer containing z (taken modulo 1) and the offset into it.
    pub fn layer_at(&self, z: f64) -> (usize, f64) {
        let zr = z.rem_euclid(1.0);
        let mut start = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            if zr < start + l.thickness || i + 1 == self.layers.len() {
                return (i, zr - start);
            }
            start += l.thickness;
        }
        unreachable!("cell has at least one layer")
    }

    /// The same medium traversed in the opposite direction.
    pub fn reversed(&self) -> UnitCell {
        let mut layers = self.layers.clone();
        layers.reverse();
        UnitCell { layers }
    }

    pub fn all_closed_form(&self) -> bool {
        self.layers.iter().all(|l| !matches!(l.kind, LayerKind::Generic))
    }

    pub fn is_isotropic(&self, tol: f64) -> bool {
        self.layers.iter().all(|l| l.is_isotropic(tol))
    }

    /// Every tensor entry is real.
    pub fn is_real_tensor(&self, tol: f64) -> bool {
        self.layers
            .iter()
            .all(|l| l.eps.entries().iter().chain(l.mu.entries().iter()).all(|z| z.im.abs() <= tol))
    }

    /// Largest entrywise tensor difference between two cells with the same
    /// layer structure.
    pub fn max_diff(&self, other: &UnitCell) -> Option<f64> {
        if self.layers.len() != other.layers.len() {
            return None;
        }
        let mut d: f64 = 0.0;
        for (a, b) in self.layers.iter().zip(&other.layers) {
            if (a.thickness - b.thickness).abs() > PERIOD_TOL {
                return None;
            }
            d = d.max(a.eps.max_diff(&b.eps)).max(a.mu.max_diff(&b.mu));
        }
        Some(d)
    }
}

/// The anisotropic–Faraday–anisotropic stack: A(φ1) of thickness L, an F
/// layer of thickness 1 − 2L, then A(φ2) of thickness L.
pub fn afa_cell(eps0: C64, delta: f64, phi1: f64, phi2: f64, alpha: f64, beta: f64, l: f64) -> Result<UnitCell, MediaError> {
    if !(l > 0.0 && l < 0.5) {
        return Err(MediaError::InvalidSandwich(l));
    }
    let mid = 1.0 - 2.0 * l;
    UnitCell::new(vec![
        a_layer(eps0, delta, phi1, l)?,
        f_layer(ONE, alpha, beta, mid)?,
        a_layer(eps0, delta, phi2, l)?,
    ])
}

pub const DEFAULT_L: f64 = 0.25;

/// The three-layer crystal studied throughout: δ = 6, φ1 = 0, φ2 = 0.8,
/// α = β = 0.5, with the given background permittivity.
pub fn example3(eps0: C64, l: f64) -> Result<UnitCell, MediaError> {
    afa_cell(eps0, 6.0, 0.0, 0.8, 0.5, 0.5, l)
}

pub fn example3_hermitian(l: f64) -> Result<UnitCell, MediaError> {
    example3(C64::new(13.0, 0.0), l)
}

pub fn example3_nonhermitian(l: f64) -> Result<UnitCell, MediaError> {
    example3(C64::new(13.0, 5.0), l)
}

pub fn vacuum_cell() -> UnitCell {
    UnitCell::new(vec![Layer::vacuum(1.0).expect("unit thickness")]).expect("period 1")
}

/// ε = ε*, μ = μ* for every layer.
pub fn is_hermitian(cell: &UnitCell, tol: f64) -> bool {
    cell.layers.iter().all(|l| l.eps.is_hermitian(tol) && l.mu.is_hermitian(tol))
}

/// ε(z) = ε(−z) and μ(z) = μ(−z): the stack reads the same backwards.
/// Adjacent identical layers are merged first so that splitting a layer does
/// not change the answer.
pub fn has_inversion_symmetry(cell: &UnitCell, tol: f64) -> bool {
    let merged = merge_adjacent(&cell.layers, tol);
    let n = merged.len();
    (0..n / 2).all(|i| merged[i].same_medium(&merged[n - 1 - i], tol))
}

fn merge_adjacent(layers: &[Layer], tol: f64) -> Vec<Layer> {
    let mut out: Vec<Layer> = Vec::new();
    for l in layers {
        if let Some(last) = out.last_mut() {
            if last.eps.max_diff(&l.eps) <= tol && last.mu.max_diff(&l.mu) <= tol {
                last.thickness += l.thickness;
                continue;
            }
        }
        out.push(*l);
    }
    out
}

/// Straight-line deformation between two cells with the same layer
/// thicknesses; t = 0 gives `start` (usually Hermitian), t = 1 gives `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyFamily {
    pub start: UnitCell,
    pub end: UnitCell,
}

impl HomotopyFamily {
    pub fn new(start: UnitCell, end: UnitCell) -> Result<Self, MediaError> {
        start.max_diff(&end).ok_or(MediaError::StructureMismatch)?;
        Ok(HomotopyFamily { start, end })
    }

    /// The family traversed from `end` back to `start`.
    pub fn reversed(&self) -> HomotopyFamily {
        HomotopyFamily { start: self.end.clone(), end: self.start.clone() }
    }

    /// Entrywise max difference of the endpoints, the Lipschitz constant of t ↦ cell(t).
    pub fn lipschitz(&self) -> f64 {
        self.start.max_diff(&self.end).unwrap_or(f64::INFINITY)
    }
}

/// ε(z; t) = (1 − t) ε_start(z) + t ε_end(z), and likewise μ. Layers whose
/// endpoints share a kind and differ only in the linearly entering
/// parameters (ε0 for A; ε̃0, α, β for F) keep their kind.
pub fn homotopy_at(family: &HomotopyFamily, t: f64) -> Result<UnitCell, MediaError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(MediaError::ParameterOutOfRange(t));
    }
    if t == 0.0 {
        return Ok(family.start.clone());
    }
    if t == 1.0 {
        return Ok(family.end.clone());
    }
    let a = &family.start.layers;
    let b = &family.end.layers;
    if a.len() != b.len() {
        return Err(MediaError::StructureMismatch);
    }
    let mut layers = Vec::with_capacity(a.len());
    for (la, lb) in a.iter().zip(b) {
        if (la.thickness - lb.thickness).abs() > PERIOD_TOL {
            return Err(MediaError::StructureMismatch);
        }
        let lin = |x: C64, y: C64| x * (1.0 - t) + y * t;
        let linr = |x: f64, y: f64| x * (1.0 - t) + y * t;
        let layer = match (la.kind, lb.kind) {
            (LayerKind::A { eps0: e1, delta: d1, phi: p1 }, LayerKind::A { eps0: e2, delta: d2, phi: p2 })
                if d1 == d2 && p1 == p2 =>
            {
                a_layer(lin(e1, e2), d1, p1, la.thickness)?
            }
            (
                LayerKind::F { eps0t: e1, alpha: a1, beta: b1 },
                LayerKind::F { eps0t: e2, alpha: a2, beta: b2 },
            ) => f_layer(lin(e1, e2), linr(a1, a2), linr(b1, b2), la.thickness)?,
            _ => Layer::generic(la.thickness, la.eps.lerp(&lb.eps, t), la.mu.lerp(&lb.mu, t))?,
        };
        layers.push(layer);
    }
    Ok(UnitCell { layers })
}
