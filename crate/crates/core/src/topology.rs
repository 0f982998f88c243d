//! Spectral invariants: the multiplier index Ind(ω), winding numbers of
//! dispersion curves, and the checks that relate them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::C64;
use crate::media::{homotopy_at, is_hermitian, HomotopyFamily, MediaError, UnitCell};
use crate::spectra::{lambdas_with, refine_between, BandDiagram, Dispersion, DispersionCurve, Rect, SpectraError, SpectraOptions};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("ω = {omega} lies on the spectrum: a multiplier is within {min_gap:.3e} of the unit circle")]
    OnSpectrum { omega: C64, min_gap: f64 },
    #[error("base point is {distance:.3e} from the curve")]
    BasePointOnCurve { distance: f64 },
    #[error("winding resampling needed more than {0} extra samples")]
    RefinementBudgetExceeded(usize),
    #[error("index changes under perturbation of radius {radius:.3e}")]
    UnstableIndex { radius: f64 },
    #[error("curve encloses no region containing the point")]
    NoInterior,
    #[error("curve is not closed")]
    OpenCurve,
    #[error("cell is not Hermitian")]
    NotHermitian,
    #[error("at least two homotopy steps are required")]
    TooFewSteps,
    #[error("no band gap found on the real axis")]
    NoGap,
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Media(#[from] MediaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyOptions {
    /// Multipliers within this distance of |λ| = 1 put ω on the spectrum.
    pub tol_circle: f64,
    /// Minimum distance between a base point and a sampled curve.
    pub tol_curve: f64,
    /// Extra samples allowed when resampling a curve for a winding number.
    pub refine_budget: usize,
    /// Perturbed re-evaluations behind `component_index`.
    pub perturbations: usize,
    pub seed: u64,
    pub spectra: SpectraOptions,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        TopologyOptions {
            tol_circle: 1e-8,
            tol_curve: 1e-7,
            refine_budget: 4096,
            perturbations: 8,
            seed: 7,
            spectra: SpectraOptions::default(),
        }
    }
}

/// Ind(ω) = ½(#{|λ| < 1} − #{|λ| > 1}), stored doubled so it stays integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralIndex {
    pub twice_value: i32,
    pub n_inside: usize,
    pub n_outside: usize,
    pub min_gap_bits: u64,
}

impl SpectralIndex {
    pub fn value(&self) -> f64 {
        self.twice_value as f64 / 2.0
    }

    /// min_j ||λ_j| − 1|.
    pub fn min_gap(&self) -> f64 {
        f64::from_bits(self.min_gap_bits)
    }
}

/// The index of a multiplier set; `OnSpectrum` if one is within `tol` of the
/// unit circle.
pub fn index_from_multipliers(omega: C64, lambdas: &[C64; 4], tol: f64) -> Result<SpectralIndex, TopologyError> {
    let min_gap = lambdas.iter().map(|l| (l.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    if !(min_gap > tol) {
        return Err(TopologyError::OnSpectrum { omega, min_gap });
    }
    let n_inside = lambdas.iter().filter(|l| l.norm() < 1.0).count();
    let n_outside = 4 - n_inside;
    Ok(SpectralIndex {
        twice_value: n_inside as i32 - n_outside as i32,
        n_inside,
        n_outside,
        min_gap_bits: min_gap.to_bits(),
    })
}

pub fn spectral_index(cell: &UnitCell, omega: C64, opts: &TopologyOptions) -> Result<SpectralIndex, TopologyError> {
    let lam = lambdas_with(cell, omega, &opts.spectra)?;
    index_from_multipliers(omega, &lam, opts.tol_circle)
}

/// Distance from ω to the nearest multiplier on the unit circle; the
/// clearance of ω from the spectrum in multiplier space.
pub fn circle_clearance(cell: &UnitCell, omega: C64, opts: &SpectraOptions) -> Result<f64, TopologyError> {
    let lam = lambdas_with(cell, omega, opts)?;
    Ok(lam.iter().map(|l| (l.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingResult {
    pub winding: i64,
    pub base_point: C64,
    pub min_distance: f64,
    pub samples_used: usize,
}

fn segment_distance(a: C64, b: C64, p: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// Distance from `p` to the closed polygon through `points`.
pub fn polygon_distance(points: &[C64], p: C64) -> f64 {
    let n = points.len();
    (0..n).map(|i| segment_distance(points[i], points[(i + 1) % n], p)).fold(f64::INFINITY, f64::min)
}

/// Winding of the closed polygon `points` about `base`, or the indices of
/// segments whose argument increment is too large to trust.
fn polygon_winding(points: &[C64], base: C64) -> Result<i64, Vec<usize>> {
    let n = points.len();
    let mut total = 0.0;
    let mut bad = Vec::new();
    for i in 0..n {
        let d = ((points[(i + 1) % n] - base) / (points[i] - base)).arg();
        if d.abs() >= PI / 2.0 {
            bad.push(i);
        }
        total += d;
    }
    if bad.is_empty() {
        Ok((total / (2.0 * PI)).round() as i64)
    } else {
        Err(bad)
    }
}

/// Winding number of a closed polygon without resampling.
pub fn winding_of_points(points: &[C64], base: C64, tol_curve: f64) -> Result<WindingResult, TopologyError> {
    let min_distance = polygon_distance(points, base);
    if !(min_distance > tol_curve) {
        return Err(TopologyError::BasePointOnCurve { distance: min_distance });
    }
    match polygon_winding(points, base) {
        Ok(w) => Ok(WindingResult { winding: w, base_point: base, min_distance, samples_used: points.len() }),
        Err(_) => Err(TopologyError::RefinementBudgetExceeded(0)),
    }
}

/// W(γ; base) from the traced samples. Segments that turn by π/2 or more
/// about the base are bisected in k by continuing the band (when `disp` is
/// given), up to the refinement budget.
pub fn winding_number(
    curve: &DispersionCurve,
    base: C64,
    disp: Option<&Dispersion<'_>>,
    opts: &TopologyOptions,
) -> Result<WindingResult, TopologyError> {
    if !curve.closed {
        return Err(TopologyError::OpenCurve);
    }
    let mut samples = curve.samples.clone();
    samples.pop();
    let mut added = 0usize;
    loop {
        let points: Vec<C64> = samples.iter().map(|s| s.1).collect();
        let min_distance = polygon_distance(&points, base);
        if !(min_distance > opts.tol_curve) {
            return Err(TopologyError::BasePointOnCurve { distance: min_distance });
        }
        let bad = match polygon_winding(&points, base) {
            Ok(w) => {
                return Ok(WindingResult { winding: w, base_point: base, min_distance, samples_used: samples.len() });
            }
            Err(bad) => bad,
        };
        let Some(disp) = disp else {
            return Err(TopologyError::RefinementBudgetExceeded(opts.refine_budget));
        };
        for &i in bad.iter().rev() {
            if added >= opts.refine_budget {
                return Err(TopologyError::RefinementBudgetExceeded(opts.refine_budget));
            }
            let n = samples.len();
            let a = samples[i];
            let mut b = samples[(i + 1) % n];
            if i + 1 == n {
                b.0 += 2.0 * PI;
            }
            let km = 0.5 * (a.0 + b.0);
            let wm = refine_between(disp, a, km, &opts.spectra)
                .or_else(|_| refine_between(disp, b, km, &opts.spectra))
                .map_err(TopologyError::from)?;
            samples.insert(i + 1, (km, wm));
            added += 1;
        }
    }
}

/// A point with nonzero winding: the loop centroid when it qualifies,
/// otherwise the grid point of the bounding box deepest inside the loop.
pub fn interior_point(curve: &DispersionCurve, tol_curve: f64) -> Option<C64> {
    let pts = curve.loop_points();
    if pts.len() < 3 {
        return None;
    }
    if let Some(c) = curve.centroid() {
        if matches!(winding_of_points(&pts, c, tol_curve), Ok(w) if w.winding != 0) && polygon_distance(&pts, c) > 1e-4 {
            return Some(c);
        }
    }
    let (re0, re1) = curve.real_range();
    let (im0, im1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.im), b.max(p.im)));
    const N: usize = 64;
    let mut best: Option<(f64, C64)> = None;
    for i in 1..N {
        for j in 1..N {
            let p = C64::new(re0 + (re1 - re0) * i as f64 / N as f64, im0 + (im1 - im0) * j as f64 / N as f64);
            let d = polygon_distance(&pts, p);
            if best.is_some_and(|b| b.0 >= d) {
                continue;
            }
            if matches!(winding_of_points(&pts, p, tol_curve), Ok(w) if w.winding != 0) {
                best = Some((d, p));
            }
        }
    }
    best.map(|b| b.1)
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Index at a sample point of a complement component, checked against
/// `opts.perturbations` random re-evaluations within tol_curve/2.
pub fn component_index(cell: &UnitCell, sample: C64, diagram: &BandDiagram, opts: &TopologyOptions) -> Result<SpectralIndex, TopologyError> {
    for c in &diagram.curves {
        let d = polygon_distance(&c.loop_points(), sample);
        if !(d > opts.tol_curve) {
            return Err(TopologyError::OnSpectrum { omega: sample, min_gap: d });
        }
    }
    let base = spectral_index(cell, sample, opts)?;
    let radius = opts.tol_curve / 2.0;
    let mut r = rng(opts.seed, 1);
    for _ in 0..opts.perturbations {
        let p = sample + C64::from_polar(radius * r.gen::<f64>().sqrt(), 2.0 * PI * r.gen::<f64>());
        match spectral_index(cell, p, opts) {
            Ok(ix) if ix.twice_value == base.twice_value => {}
            _ => return Err(TopologyError::UnstableIndex { radius }),
        }
    }
    Ok(base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexJumpReport {
    pub inner: C64,
    pub outer: C64,
    pub index_inner: SpectralIndex,
    pub index_outer: SpectralIndex,
    pub winding: i64,
    /// Ind(inner) − Ind(outer) = W(γ; inner).
    pub pass: bool,
}

/// Checks that crossing into the loop changes the index by its winding.
pub fn verify_index_jump(
    cell: &UnitCell,
    curve: &DispersionCurve,
    inner: C64,
    outer: C64,
    opts: &TopologyOptions,
) -> Result<IndexJumpReport, TopologyError> {
    if curve.enclosed_area().abs() < 1e-12 && curve.max_abs_imag() < 1e-9 {
        return Err(TopologyError::NoInterior);
    }
    let w = winding_number(curve, inner, None, opts)?;
    if w.winding == 0 {
        return Err(TopologyError::NoInterior);
    }
    let index_inner = spectral_index(cell, inner, opts)?;
    let index_outer = spectral_index(cell, outer, opts)?;
    let pass = (index_inner.twice_value - index_outer.twice_value) as i64 == 2 * w.winding;
    Ok(IndexJumpReport { inner, outer, index_inner, index_outer, winding: w.winding, pass })
}

/// Random interior samples of one loop, with the count of candidates that
/// were inside the loop but rejected for lying inside another curve too.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InteriorSamples {
    pub points: Vec<C64>,
    pub excluded_by_other: usize,
}

/// Random points strictly inside `curve` (nonzero winding) and outside every
/// other curve of `all` (zero winding), at least `margin` from all curves.
pub fn sample_interior(curve: &DispersionCurve, all: &[DispersionCurve], n: usize, margin: f64, seed: u64, stream: u64) -> Vec<C64> {
    sample_interior_tagged(curve, all, n, margin, seed, stream).points
}

pub fn sample_interior_tagged(
    curve: &DispersionCurve,
    all: &[DispersionCurve],
    n: usize,
    margin: f64,
    seed: u64,
    stream: u64,
) -> InteriorSamples {
    let pts = curve.loop_points();
    let others: Vec<Vec<C64>> = all.iter().filter(|c| c.samples != curve.samples).map(|c| c.loop_points()).collect();
    let (re0, re1) = curve.real_range();
    let (im0, im1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.im), b.max(p.im)));
    let mut r = rng(seed, stream);
    let mut out = InteriorSamples { points: Vec::with_capacity(n), excluded_by_other: 0 };
    let mut tries = 0;
    while out.points.len() < n && tries < 5000 * n.max(1) {
        tries += 1;
        let p = C64::new(re0 + (re1 - re0) * r.gen::<f64>(), im0 + (im1 - im0) * r.gen::<f64>());
        if polygon_distance(&pts, p) <= margin {
            continue;
        }
        if !matches!(winding_of_points(&pts, p, margin), Ok(w) if w.winding != 0) {
            continue;
        }
        let clear = others
            .iter()
            .all(|o| polygon_distance(o, p) > margin && matches!(winding_of_points(o, p, margin), Ok(w) if w.winding == 0));
        if clear {
            out.points.push(p);
        } else {
            out.excluded_by_other += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyStep {
    pub t: f64,
    pub witness: C64,
    pub index: Option<SpectralIndex>,
    pub clearance: f64,
    pub relocated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyReport {
    pub steps: Vec<HomotopyStep>,
    /// First t at which no relocation kept the witness off the spectrum.
    pub blocked_at: Option<f64>,
    /// Ind = 0 at every step.
    pub index_constant_zero: bool,
}

/// Clearance below which the witness is moved.
const SAFETY_MARGIN: f64 = 1e-3;

fn relocate(cell: &UnitCell, g: C64, opts: &TopologyOptions) -> Result<(C64, f64), TopologyError> {
    let clear = |z: C64| circle_clearance(cell, z, &opts.spectra);
    let mut g = g;
    let mut c = clear(g)?;
    let mut step = 0.02;
    let h = 1e-5;
    for _ in 0..80 {
        if c >= 2.0 * SAFETY_MARGIN {
            break;
        }
        let gx = (clear(g + h)? - clear(g - h)?) / (2.0 * h);
        let gy = (clear(g + C64::new(0.0, h))? - clear(g - C64::new(0.0, h))?) / (2.0 * h);
        let grad = C64::new(gx, gy);
        if grad.norm() == 0.0 || !grad.norm().is_finite() {
            break;
        }
        let cand = g + grad / grad.norm() * step;
        let cc = clear(cand)?;
        if cc > c {
            g = cand;
            c = cc;
        } else {
            step *= 0.5;
            if step < 1e-6 {
                break;
            }
        }
    }
    Ok((g, c))
}

/// Follows a witness point through the family, re-centring it by gradient
/// ascent on its clearance whenever that drops below a safety margin, and
/// records Ind along the way.
pub fn homotopy_track(
    family: &HomotopyFamily,
    witness: Option<C64>,
    t_steps: usize,
    opts: &TopologyOptions,
) -> Result<HomotopyReport, TopologyError> {
    if t_steps < 2 {
        return Err(TopologyError::TooFewSteps);
    }
    let mut g = match witness {
        Some(w) => w,
        None => {
            let gap = find_gap(&family.start, 1e-3, 6.0, 3000, &opts.spectra)?.ok_or(TopologyError::NoGap)?;
            C64::new(gap.witness, 0.0)
        }
    };
    let mut steps = Vec::with_capacity(t_steps);
    let mut blocked_at = None;
    for i in 0..t_steps {
        let t = i as f64 / (t_steps - 1) as f64;
        let cell = homotopy_at(family, t)?;
        let mut clearance = circle_clearance(&cell, g, &opts.spectra)?;
        let mut relocated = false;
        if clearance < SAFETY_MARGIN {
            let (ng, nc) = relocate(&cell, g, opts)?;
            relocated = ng != g;
            g = ng;
            clearance = nc;
        }
        let index = spectral_index(&cell, g, opts).ok();
        if index.is_none() && blocked_at.is_none() {
            blocked_at = Some(t);
        }
        steps.push(HomotopyStep { t, witness: g, index, clearance, relocated });
    }
    let index_constant_zero = steps.iter().all(|s| s.index.is_some_and(|ix| ix.twice_value == 0));
    Ok(HomotopyReport { steps, blocked_at, index_constant_zero })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
    /// Point of the gap farthest from the spectrum in multiplier space.
    pub witness: f64,
}

/// Multipliers, with clustered quartic roots (resolved only to eps^(1/m))
/// replaced by the cluster-refined eigenvalues of the monodromy.
fn refined_multipliers(cell: &UnitCell, omega: C64, opts: &SpectraOptions) -> Result<[C64; 4], TopologyError> {
    let lam = lambdas_with(cell, omega, opts)?;
    let mut sep = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            sep = sep.min((lam[i] - lam[j]).norm());
        }
    }
    if sep > 1e-3 {
        return Ok(lam);
    }
    let disp = Dispersion::new(cell, opts)?;
    Ok(disp.monodromy(omega)?.eigen().lambdas)
}

fn on_circle(cell: &UnitCell, w: f64, opts: &SpectraOptions) -> Result<(Vec<C64>, f64), TopologyError> {
    let lam = refined_multipliers(cell, C64::new(w, 0.0), opts)?;
    let clearance = lam.iter().map(|l| (l.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    Ok((lam.into_iter().filter(|l| (l.norm() - 1.0).abs() <= ON_CIRCLE).collect(), clearance))
}

const ON_CIRCLE: f64 = 1e-6;

/// Lowest real-frequency interval in [lo, hi] where no multiplier has unit
/// modulus, from a uniform scan of `n` points.
pub fn find_gap(cell: &UnitCell, lo: f64, hi: f64, n: usize, opts: &SpectraOptions) -> Result<Option<Gap>, TopologyError> {
    let mut run: Option<(f64, f64, f64, f64)> = None;
    for i in 0..=n {
        let w = lo + (hi - lo) * i as f64 / n as f64;
        let (on, clearance) = on_circle(cell, w, opts)?;
        if on.is_empty() {
            run = Some(match run {
                None => (w, w, w, clearance),
                Some((a, _, bw, bc)) => {
                    if clearance > bc {
                        (a, w, w, clearance)
                    } else {
                        (a, w, bw, bc)
                    }
                }
            });
        } else if let Some((a, b, bw, _)) = run {
            return Ok(Some(Gap { lower: a, upper: b, witness: bw }));
        }
    }
    Ok(run.map(|(a, b, bw, _)| Gap { lower: a, upper: b, witness: bw }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// A real interval free of unit-modulus multipliers.
    pub gap: Option<Gap>,
    /// A real frequency with exactly two distinct multipliers on the circle.
    pub spectrum_witness: Option<f64>,
    pub gap_pass: bool,
    pub two_on_circle_pass: bool,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.gap_pass && self.two_on_circle_pass
    }
}

/// Checks the two standing hypotheses on a Hermitian cell over the real
/// part of `region`.
pub fn check_hypotheses(cell: &UnitCell, region: &Rect, opts: &SpectraOptions) -> Result<HypothesisReport, TopologyError> {
    if !is_hermitian(cell, 1e-12) {
        return Err(TopologyError::NotHermitian);
    }
    let lo = region.re0.max(1e-3);
    let hi = region.re1;
    const N: usize = 2000;
    let gap = find_gap(cell, lo, hi, N, opts)?;
    // The lowest run of at least three scan points with exactly two.
    let mut best_run: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=N + 1 {
        let ok = if i <= N {
            let w = lo + (hi - lo) * i as f64 / N as f64;
            let (on, _) = on_circle(cell, w, opts)?;
            on.len() == 2 && (on[0] - on[1]).norm() > ON_CIRCLE
        } else {
            false
        };
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best_run.is_none() && i - s >= 3 {
                    best_run = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    let spectrum_witness = best_run.map(|(a, b)| lo + (hi - lo) * ((a + b - 1) as f64 / 2.0) / N as f64);
    Ok(HypothesisReport {
        gap_pass: gap.is_some(),
        two_on_circle_pass: spectrum_witness.is_some(),
        gap,
        spectrum_witness,
    })
}
