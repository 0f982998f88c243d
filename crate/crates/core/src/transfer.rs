//! Transfer matrices of the first-order system Φ′ = ω Q⁻¹𝒜(z) Φ with
//! Φ = (Ex, Ey, Hx, Hy), Q = [[0, −1], [1, 0]] acting on each of E and H, and
//! 𝒜 = i [[0, μ], [−ε, 0]].
//!
//! 𝒯(ω; z) maps Φ(0) to Φ(z). Over one period it is the monodromy M(ω).
//! Layers are applied in propagation order, so for layers 1..N
//! M = T_N ⋯ T_2 T_1.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{char_poly4, eigen4, product_with_char_poly, CMat2, CMat4, EigenSet, QuarticCoeffs, Vec4, I, ONE, ZERO};
use crate::media::{Layer, LayerKind, UnitCell};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("layer {0} has no closed-form transfer matrix (generic tensor)")]
    UnsupportedLayer(usize),
    #[error("degenerate medium: 1 ± β vanishes")]
    DegenerateMedium,
    #[error("propagation distance must be non-negative, got {0}")]
    NegativeDistance(f64),
    #[error("integration interval must satisfy z1 < z2 and steps ≥ 1")]
    BadInterval,
}

/// Default RK4 resolution used when integrating a layer.
pub const DEFAULT_STEPS_PER_LAYER: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed forms of the A and F layers; generic layers are rejected.
    ClosedForm,
    /// Closed forms where they exist, the matrix exponential of the constant
    /// generator for generic layers.
    Exponential,
    Integrate { steps_per_layer: usize },
}

impl Method {
    pub fn integrate() -> Self {
        Method::Integrate { steps_per_layer: DEFAULT_STEPS_PER_LAYER }
    }
}

/// Order in which layer matrices are multiplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Composition {
    /// First layer applied first: M = T_N ⋯ T_1.
    #[default]
    Propagation,
    /// Layer matrices multiplied left to right as the stack is listed,
    /// M = T_1 ⋯ T_N. This is the propagation order of the reversed stack.
    Reversed,
}

/// Transverse field state (E, H) at some z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub e: [C64; 2],
    pub h: [C64; 2],
}

impl StateVector {
    pub fn new(e: [C64; 2], h: [C64; 2]) -> Self {
        StateVector { e, h }
    }

    pub fn from_array(v: Vec4) -> Self {
        StateVector { e: [v[0], v[1]], h: [v[2], v[3]] }
    }

    pub fn to_array(&self) -> Vec4 {
        [self.e[0], self.e[1], self.h[0], self.h[1]]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Monodromy M(ω) with its characteristic polynomial; eigenpairs are
/// computed on first use.
#[derive(Debug, Clone)]
pub struct Monodromy {
    pub omega: C64,
    pub matrix: CMat4,
    pub coeffs: QuarticCoeffs,
    eigen: OnceLock<EigenSet>,
}

impl Monodromy {
    pub fn from_matrix(omega: C64, matrix: CMat4) -> Self {
        let coeffs = char_poly4(&matrix);
        Monodromy { omega, matrix, coeffs, eigen: OnceLock::new() }
    }

    /// Product of layer matrices `factors` (propagation order), with the
    /// product and its characteristic polynomial formed in extended precision.
    pub fn from_factors(omega: C64, factors: &[CMat4]) -> Self {
        let (matrix, coeffs) = product_with_char_poly(factors);
        Monodromy { omega, matrix, coeffs, eigen: OnceLock::new() }
    }

    pub fn det(&self) -> C64 {
        self.coeffs.a0
    }

    /// |det M − 1|; zero in exact arithmetic for every cell and frequency.
    pub fn det_error(&self) -> f64 {
        (self.coeffs.a0 - ONE).norm()
    }

    pub fn eigen(&self) -> &EigenSet {
        self.eigen.get_or_init(|| eigen4(&self.matrix))
    }
}

fn q_inv() -> CMat2 {
    CMat2::new(ZERO, ONE, -ONE, ZERO)
}

/// The constant-coefficient generator ω Q⁻¹𝒜 of a layer.
pub fn generator(layer: &Layer, omega: C64) -> CMat4 {
    let qi = q_inv();
    let top = (qi * layer.mu.in_plane()).scale(I * omega);
    let bottom = (qi * layer.eps.in_plane()).scale(-I * omega);
    CMat4::from_blocks(CMat2::zeros(), top, bottom, CMat2::zeros())
}

/// sin(z)/z, continuous at 0.
fn sinc(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        ONE - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

fn rotation(phi: f64) -> CMat4 {
    let (s, c) = phi.sin_cos();
    let r = CMat2::new(C64::from(c), C64::from(-s), C64::from(s), C64::from(c));
    CMat4::from_blocks(r, CMat2::zeros(), CMat2::zeros(), r)
}

/// Closed-form transfer matrix across an A layer of thickness `l`.
///
/// With n1 = √(ε0+δ), n2 = √(ε0−δ), ρj = cos(nj ω L), ρ̃j = sin(nj ω L), the
/// layer with its axis along x (φ = 0) propagates (Ex, Hy) and (Ey, Hx)
/// independently:
///
/// ```text
///   Ex ← ρ1 Ex + i ρ̃1/n1 Hy        Ey ← ρ2 Ey − i ρ̃2/n2 Hx
///   Hy ← i n1 ρ̃1 Ex + ρ1 Hy        Hx ← −i n2 ρ̃2 Ey + ρ2 Hx
/// ```
///
/// A rotated axis is handled by conjugating with the in-plane rotation by φ,
/// which commutes with Q. Every entry is even in nj, so the square-root
/// branch does not matter.
pub fn transfer_a(omega: C64, l: f64, delta: f64, phi: f64, eps0: C64) -> CMat4 {
    let n1 = (eps0 + delta).sqrt();
    let n2 = (eps0 - delta).sqrt();
    let t = omega * l;
    let (rho1, rho2) = ((n1 * t).cos(), (n2 * t).cos());
    // ρ̃/n and n ρ̃ written through sinc so that n = 0 is harmless.
    let s1 = t * sinc(n1 * t);
    let s2 = t * sinc(n2 * t);
    let n1s1 = n1 * n1 * s1;
    let n2s2 = n2 * n2 * s2;
    let mut m = CMat4::zeros();
    m[(0, 0)] = rho1;
    m[(0, 3)] = I * s1;
    m[(1, 1)] = rho2;
    m[(1, 2)] = -I * s2;
    m[(2, 1)] = -I * n2s2;
    m[(2, 2)] = rho2;
    m[(3, 0)] = I * n1s1;
    m[(3, 3)] = rho1;
    if phi == 0.0 {
        return m;
    }
    let r = rotation(phi);
    let rt = rotation(-phi);
    // Conjugate only T − I: R Rᵀ is not exactly I in floating point, and the
    // fourfold multiplier at ω = 0 would spread that error to its fourth root.
    CMat4::identity() + r * (m - CMat4::identity()) * rt
}

/// Closed-form transfer matrix across an F layer of thickness `l`.
///
/// The circular polarisations (1, −i) and (1, i) diagonalise ε, μ and Q
/// simultaneously, with effective indices m1 = √((ε̃0+α)(1+β)) and
/// m2 = √((ε̃0−α)(1−β)) and impedance factors m̃j = mj/(1 ± β). With σj =
/// cos(mj ω L), σ̃j = sin(mj ω L) the matrix is ½ times
///
/// ```text
///   σ1+σ2           i(σ1−σ2)          σ̃1/m̃1 − σ̃2/m̃2      i(σ̃1/m̃1 + σ̃2/m̃2)
///   −i(σ1−σ2)       σ1+σ2             −i(σ̃1/m̃1 + σ̃2/m̃2)  σ̃1/m̃1 − σ̃2/m̃2
///   m̃2σ̃2 − m̃1σ̃1    −i(m̃1σ̃1 + m̃2σ̃2)  σ1+σ2               i(σ1−σ2)
///   i(m̃1σ̃1 + m̃2σ̃2) m̃2σ̃2 − m̃1σ̃1      −i(σ1−σ2)           σ1+σ2
/// ```
pub fn transfer_f(omega: C64, l: f64, eps0t: C64, alpha: f64, beta: f64) -> Result<CMat4, TransferError> {
    if (1.0 + beta) == 0.0 || (1.0 - beta) == 0.0 {
        return Err(TransferError::DegenerateMedium);
    }
    let p1 = 1.0 + beta;
    let p2 = 1.0 - beta;
    let m1 = ((eps0t + alpha) * p1).sqrt();
    let m2 = ((eps0t - alpha) * p2).sqrt();
    let t = omega * l;
    let (c1, c2) = ((m1 * t).cos(), (m2 * t).cos());
    // σ̃/m̃ = (1±β) sin(m t)/m and m̃σ̃ = m sin(m t)/(1±β).
    let g1 = t * sinc(m1 * t);
    let g2 = t * sinc(m2 * t);
    let a1 = g1 * p1; // σ̃1/m̃1
    let a2 = g2 * p2; // σ̃2/m̃2
    let b1 = m1 * m1 * g1 / p1; // m̃1 σ̃1
    let b2 = m2 * m2 * g2 / p2; // m̃2 σ̃2
    let sum = c1 + c2;
    let dif = c1 - c2;
    let rows = [
        [sum, I * dif, a1 - a2, I * (a1 + a2)],
        [-I * dif, sum, -I * (a1 + a2), a1 - a2],
        [b2 - b1, -I * (b1 + b2), sum, I * dif],
        [I * (b1 + b2), b2 - b1, -I * dif, sum],
    ];
    Ok(CMat4(rows).scale(C64::from(0.5)))
}

/// One classical RK4 step for the constant generator K with step h:
/// I + hK + (hK)²/2 + (hK)³/6 + (hK)⁴/24.
fn rk4_step(k: &CMat4, h: f64) -> CMat4 {
    let x = k.scale(C64::from(h));
    let x2 = x * x;
    let x3 = x2 * x;
    let x4 = x3 * x;
    CMat4::identity() + x + x2.scale(C64::from(0.5)) + x3.scale(C64::from(1.0 / 6.0)) + x4.scale(C64::from(1.0 / 24.0))
}

/// RK4 transfer across `thickness` of a single layer in `steps` equal steps.
pub fn integrate_layer(layer: &Layer, omega: C64, thickness: f64, steps: usize) -> CMat4 {
    let steps = steps.max(1);
    // Constant generator: N identical steps are the N-th power of one step.
    rk4_step(&generator(layer, omega), thickness / steps as f64).pow(steps as u64)
}

/// Fixed-step RK4 integration of 𝒯′ = ωQ⁻¹𝒜(z)𝒯 from z1 to z2 (periodically
/// extended), 𝒯(z1) = I. Each layer, or piece of a layer, gets its share of
/// `steps_per_layer` steps in proportion to its length, so no step straddles
/// an interface.
pub fn integrate_transfer(cell: &UnitCell, omega: C64, z1: f64, z2: f64, steps_per_layer: usize) -> Result<CMat4, TransferError> {
    if !(z2 > z1) || steps_per_layer == 0 {
        return Err(TransferError::BadInterval);
    }
    let mut t = CMat4::identity();
    for_each_piece(cell, z1, z2, |layer, len| {
        let frac = len / layer.thickness;
        let steps = ((steps_per_layer as f64) * frac).ceil().max(1.0) as usize;
        t = integrate_layer(layer, omega, len, steps) * t;
    });
    Ok(t)
}

/// Visit the layer pieces covering [z1, z2] in propagation order.
fn for_each_piece<F: FnMut(&Layer, f64)>(cell: &UnitCell, z1: f64, z2: f64, mut f: F) {
    let bounds = cell.interfaces();
    let layers = cell.layers();
    // Pieces shorter than this are roundoff, not geometry.
    let eps = 1e-14;
    let mut z = z1;
    while z < z2 - eps {
        let p = z.floor();
        let local = z - p;
        if local >= 1.0 - eps {
            z = p + 1.0;
            continue;
        }
        let idx = (0..layers.len()).find(|&i| local < bounds[i + 1] - eps).unwrap_or(layers.len() - 1);
        let end = (p + bounds[idx + 1]).min(z2);
        f(&layers[idx], end - z);
        z = end;
    }
}

/// Transfer matrix across a whole layer.
pub fn layer_transfer(layer: &Layer, omega: C64, method: Method) -> Result<CMat4, TransferError> {
    layer_transfer_partial(layer, omega, layer.thickness, method)
}

fn layer_transfer_partial(layer: &Layer, omega: C64, len: f64, method: Method) -> Result<CMat4, TransferError> {
    match (method, layer.kind) {
        (Method::ClosedForm, LayerKind::A { eps0, delta, phi }) => Ok(transfer_a(omega, len, delta, phi, eps0)),
        (Method::ClosedForm, LayerKind::F { eps0t, alpha, beta }) => transfer_f(omega, len, eps0t, alpha, beta),
        (Method::ClosedForm, LayerKind::Generic) => Err(TransferError::UnsupportedLayer(0)),
        (Method::Exponential, _) => Ok(layer_transfer_partial(layer, omega, len, Method::ClosedForm)
            .unwrap_or_else(|_| generator(layer, omega).scale(C64::from(len)).exp())),
        (Method::Integrate { steps_per_layer }, _) => {
            let steps = ((steps_per_layer as f64) * len / layer.thickness).ceil().max(1.0) as usize;
            Ok(integrate_layer(layer, omega, len, steps))
        }
    }
}

fn best_partial(layer: &Layer, omega: C64, len: f64) -> CMat4 {
    layer_transfer_partial(layer, omega, len, Method::Exponential).expect("every layer has an exponential")
}

/// M(ω) by the chosen method, in propagation order.
pub fn monodromy(cell: &UnitCell, omega: C64, method: Method) -> Result<Monodromy, TransferError> {
    monodromy_with(cell, omega, method, Composition::Propagation)
}

pub fn monodromy_with(cell: &UnitCell, omega: C64, method: Method, composition: Composition) -> Result<Monodromy, TransferError> {
    if method != Method::Exponential {
        return Ok(Monodromy::from_factors(omega, &layer_factors(cell, omega, method, composition)?));
    }
    let layers = cell.layers();
    let mut order: Vec<&Layer> = layers.iter().collect();
    if composition == Composition::Reversed {
        order.reverse();
    }
    let mut factors = Vec::new();
    for layer in order {
        if let Ok(t) = layer_transfer(layer, omega, Method::ClosedForm) {
            factors.push(t);
            continue;
        }
        // One dense exponential of a strongly growing layer carries a
        // determinant error of ε·cond; unit-size sub-steps keep each
        // factor well conditioned and the product is formed in extended precision.
        let g = generator(layer, omega).scale(C64::from(layer.thickness));
        let n = g.frobenius().ceil().clamp(1.0, 512.0) as usize;
        let step = g.scale(C64::from(1.0 / n as f64)).exp();
        factors.extend(std::iter::repeat_n(step, n));
    }
    Ok(Monodromy::from_factors(omega, &factors))
}

/// Layer matrices in the order they are applied.
pub fn layer_factors(cell: &UnitCell, omega: C64, method: Method, composition: Composition) -> Result<Vec<CMat4>, TransferError> {
    let layers = cell.layers();
    let order: Vec<usize> = match composition {
        Composition::Propagation => (0..layers.len()).collect(),
        Composition::Reversed => (0..layers.len()).rev().collect(),
    };
    order
        .into_iter()
        .map(|i| {
            layer_transfer(&layers[i], omega, method).map_err(|e| match e {
                TransferError::UnsupportedLayer(_) => TransferError::UnsupportedLayer(i),
                other => other,
            })
        })
        .collect()
}

/// The bare 4×4 monodromy in working precision.
pub fn monodromy_matrix(cell: &UnitCell, omega: C64, method: Method, composition: Composition) -> Result<CMat4, TransferError> {
    Ok(layer_factors(cell, omega, method, composition)?
        .into_iter()
        .fold(CMat4::identity(), |m, t| t * m))
}

/// Closed form when every layer has one, otherwise the exponential path.
pub fn default_method(cell: &UnitCell) -> Method {
    if cell.all_closed_form() {
        Method::ClosedForm
    } else {
        Method::Exponential
    }
}

/// 𝒯(ω; z) for 0 ≤ z ≤ 1: full layers before z, then the partial layer.
pub fn partial_transfer(cell: &UnitCell, omega: C64, z: f64) -> CMat4 {
    let mut t = CMat4::identity();
    if z <= 0.0 {
        return t;
    }
    for_each_piece(cell, 0.0, z.min(1.0), |layer, len| {
        let piece = if (len - layer.thickness).abs() <= 1e-14 {
            best_partial(layer, omega, layer.thickness)
        } else {
            best_partial(layer, omega, len)
        };
        t = piece * t;
    });
    t
}

/// Φ(z) = 𝒯(ω; z mod 1) M(ω)^⌊z⌋ Φ(0).
pub fn propagate(cell: &UnitCell, omega: C64, state0: StateVector, z: f64) -> Result<StateVector, TransferError> {
    if z < 0.0 {
        return Err(TransferError::NegativeDistance(z));
    }
    let n = z.floor();
    let frac = z - n;
    let m = monodromy_matrix(cell, omega, default_method(cell), Composition::Propagation)?;
    let v = m.pow(n as u64).mul_vec(&state0.to_array());
    Ok(StateVector::from_array(partial_transfer(cell, omega, frac).mul_vec(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matching_distance, quartic_roots};
    use crate::media::{a_layer, example3_hermitian, example3_nonhermitian, f_layer, vacuum_cell};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn generator_is_traceless() {
        let l = f_layer(c(2.0, 1.0), 0.3, 0.4, 0.5).unwrap();
        assert!(generator(&l, c(1.3, -0.2)).trace().norm() < 1e-15);
    }

    #[test]
    fn vacuum_a_layer_at_zero_frequency_is_identity() {
        assert_eq!(transfer_a(ZERO, 0.7, 0.0, 0.0, ONE), CMat4::identity());
        assert!((transfer_f(ZERO, 0.4, c(1.0, 0.0), 0.5, 0.5).unwrap() - CMat4::identity()).frobenius() < 1e-15);
    }

    #[test]
    fn isotropic_a_layer_plane_waves() {
        let n = 3.0f64;
        let (w, l) = (c(1.1, 0.0), 0.4);
        let m = transfer_a(w, l, 0.0, 0.0, c(n * n, 0.0));
        let roots = quartic_roots(&char_poly4(&m));
        let p = (I * w * n * l).exp();
        let expect = [p, p, p.inv(), p.inv()];
        assert!(matching_distance(&roots, &expect).unwrap() < 1e-7);
    }

    #[test]
    fn a_layer_matches_rk4() {
        let layer = a_layer(c(13.0, 0.0), 6.0, 0.0, 0.25).unwrap();
        let closed = transfer_a(c(1.0, 0.0), 0.25, 6.0, 0.0, c(13.0, 0.0));
        let rk = integrate_layer(&layer, c(1.0, 0.0), 0.25, 512);
        assert!((closed - rk).frobenius() < 1e-8);

        let layer = a_layer(c(13.0, 5.0), 6.0, 0.8, 0.25).unwrap();
        let closed = transfer_a(c(1.7, -0.4), 0.25, 6.0, 0.8, c(13.0, 5.0));
        let rk = integrate_layer(&layer, c(1.7, -0.4), 0.25, 512);
        assert!((closed - rk).frobenius() < 1e-8);
    }

    #[test]
    fn f_layer_matches_rk4() {
        let layer = f_layer(ONE, 0.5, 0.5, 0.5).unwrap();
        let w = c(1.0, 0.2);
        let closed = transfer_f(w, 0.5, ONE, 0.5, 0.5).unwrap();
        let rk = integrate_layer(&layer, w, 0.5, 512);
        assert!((closed - rk).frobenius() < 1e-8);
    }

    #[test]
    fn f_layer_vacuum_and_degenerate() {
        let v = transfer_f(c(0.9, 0.0), 0.3, ONE, 0.0, 0.0).unwrap();
        let a = transfer_a(c(0.9, 0.0), 0.3, 0.0, 0.0, ONE);
        assert!((v - a).frobenius() < 1e-15);
        assert_eq!(transfer_f(ONE, 0.3, ONE, 0.2, 1.0), Err(TransferError::DegenerateMedium));
    }

    #[test]
    fn vacuum_monodromy_at_pi() {
        let m = monodromy(&vacuum_cell(), c(std::f64::consts::PI, 0.0), Method::ClosedForm).unwrap();
        // A fourfold root: the polynomial alone pins it down to ~eps^(1/4).
        let l = quartic_roots(&m.coeffs);
        assert!(l.iter().all(|z| (z + ONE).norm() < 1e-3));
        let e = m.eigen();
        assert!(e.lambdas.iter().all(|z| (z + ONE).norm() < 1e-12));
    }

    #[test]
    fn monodromy_methods_agree() {
        let cell = example3_hermitian(0.25).unwrap();
        let a = monodromy(&cell, c(2.0, 0.0), Method::ClosedForm).unwrap();
        let b = monodromy(&cell, c(2.0, 0.0), Method::integrate()).unwrap();
        assert!((a.matrix - b.matrix).frobenius() < 1e-8);
        assert!(a.det_error() < 1e-12);
        let z = monodromy(&cell, ZERO, Method::ClosedForm).unwrap();
        assert_eq!(z.matrix, CMat4::identity());
    }

    #[test]
    fn reversed_composition_is_reversed_stack() {
        let cell = example3_nonhermitian(0.25).unwrap();
        let w = c(1.2, -0.3);
        let p = monodromy_with(&cell, w, Method::ClosedForm, Composition::Reversed).unwrap();
        let r = monodromy(&cell.reversed(), w, Method::ClosedForm).unwrap();
        assert!((p.matrix - r.matrix).frobenius() < 1e-13);
    }

    #[test]
    fn generic_layer_rejected_by_closed_form() {
        let l = crate::media::Layer::generic(1.0, crate::media::MaterialTensor::identity(), crate::media::MaterialTensor::identity()).unwrap();
        let cell = UnitCell::new(vec![l]).unwrap();
        assert_eq!(monodromy(&cell, ONE, Method::ClosedForm).unwrap_err(), TransferError::UnsupportedLayer(0));
        assert!(monodromy(&cell, ONE, Method::integrate()).is_ok());
        assert_eq!(default_method(&cell), Method::Exponential);
    }

    #[test]
    fn exponential_matches_closed_form_and_rk4() {
        let a = a_layer(c(13.0, 5.0), 6.0, 0.8, 0.25).unwrap();
        let w = c(2.3, -0.4);
        let closed = layer_transfer(&a, w, Method::ClosedForm).unwrap();
        let exp = generator(&a, w).scale(C64::from(0.25)).exp();
        assert!((closed - exp).frobenius() <= 1e-12 * closed.frobenius(), "{}", (closed - exp).frobenius());
        let eps = crate::media::MaterialTensor::new(c(4.0, 0.3), c(0.5, -0.2), c(-0.1, 0.4), c(6.0, -0.5), c(5.0, 0.0));
        let mu = crate::media::MaterialTensor::new(c(1.2, 0.0), c(0.1, 0.1), c(0.0, -0.1), c(1.5, 0.1), ONE);
        let g = Layer::generic(0.6, eps, mu).unwrap();
        let e = layer_transfer(&g, w, Method::Exponential).unwrap();
        let rk = layer_transfer(&g, w, Method::Integrate { steps_per_layer: 4096 }).unwrap();
        assert!((e - rk).frobenius() <= 1e-10 * e.frobenius(), "{}", (e - rk).frobenius());
    }

    #[test]
    fn exponential_is_unimodular_at_high_frequency() {
        let eps = crate::media::MaterialTensor::new(c(9.0, 3.5), c(0.7, 0.3), c(-0.6, 0.2), c(8.0, -3.0), c(5.0, 0.0));
        let cell = UnitCell::new(vec![Layer::generic(0.7, eps, crate::media::MaterialTensor::identity()).unwrap(), Layer::vacuum(0.3).unwrap()]).unwrap();
        for w in [c(18.4, 0.7), c(-17.2, 0.8), c(14.1, -1.75)] {
            let m = monodromy(&cell, w, default_method(&cell)).unwrap();
            assert!(m.matrix.max_abs() > 1e3);
            assert!(m.det_error() <= 1e-9, "ω = {w}: {:.3e}", m.det_error());
        }
    }

    #[test]
    fn partial_transfer_composes() {
        let cell = example3_nonhermitian(0.25).unwrap();
        let w = c(0.8, -0.1);
        let full = partial_transfer(&cell, w, 1.0);
        let m = monodromy(&cell, w, Method::ClosedForm).unwrap();
        assert!((full - m.matrix).frobenius() < 1e-12);
        let t1 = partial_transfer(&cell, w, 0.6);
        let rk = integrate_transfer(&cell, w, 0.0, 0.6, 512).unwrap();
        assert!((t1 - rk).frobenius() < 1e-8);
    }

    #[test]
    fn integrate_group_property() {
        let cell = example3_nonhermitian(0.25).unwrap();
        let w = c(1.4, 0.3);
        let a = integrate_transfer(&cell, w, 0.0, 0.37, 256).unwrap();
        let b = integrate_transfer(&cell, w, 0.37, 1.2, 256).unwrap();
        let ab = integrate_transfer(&cell, w, 0.0, 1.2, 256).unwrap();
        // Same pieces and step counts, so the split product is exact up to roundoff.
        let split = b * a;
        let direct_closed = partial_transfer(&cell, w, 0.2) * monodromy(&cell, w, Method::ClosedForm).unwrap().matrix;
        assert!((split - direct_closed).frobenius() < 1e-8);
        assert!((ab - direct_closed).frobenius() < 1e-8);
    }

    #[test]
    fn propagate_basics() {
        let cell = example3_hermitian(0.25).unwrap();
        let w = c(1.0, 0.0);
        let s0 = StateVector::new([ONE, c(0.2, 0.0)], [c(0.0, 1.0), ZERO]);
        assert_eq!(propagate(&cell, w, s0, 0.0).unwrap(), s0);
        let m = monodromy(&cell, w, Method::ClosedForm).unwrap().matrix;
        let s3 = propagate(&cell, w, s0, 3.0).unwrap();
        let direct = StateVector::from_array((m * m * m).mul_vec(&s0.to_array()));
        assert!((0..4).all(|i| (s3.to_array()[i] - direct.to_array()[i]).norm() < 1e-10));
        assert!(propagate(&cell, w, s0, -1.0).is_err());
    }

    #[test]
    fn propagate_eigenvector() {
        let cell = example3_nonhermitian(0.25).unwrap();
        let w = c(0.53, -0.08);
        let m = monodromy(&cell, w, Method::ClosedForm).unwrap();
        let e = m.eigen().clone();
        for j in 0..4 {
            let s = propagate(&cell, w, StateVector::from_array(e.vectors[j]), 5.0).unwrap();
            let lp = e.lambdas[j].powi(5);
            let scale = lp.norm().max(1.0);
            assert!((0..4).all(|i| (s.to_array()[i] - lp * e.vectors[j][i]).norm() < 1e-9 * scale));
        }
    }
}
