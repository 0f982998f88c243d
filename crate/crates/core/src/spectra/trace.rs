//! Predictor–corrector continuation of one band in k.
//!
//! Each step predicts along the tangent dω/dk = −∂_kD/∂_ωD, corrects with
//! Newton at the new k, and accepts only if Newton from the reverse tangent
//! lands back on the previous root; a corrector that converged onto a
//! neighbouring band fails that test and the step is halved.
//!
//! A band can pass through a multiple root at a grid point (ω = 0 at k = 0
//! for every cell; band touchings at the zone edge). There the tangent is
//! undefined, and the band is continued by rank: the roots emerging from the
//! cluster on either side are sorted by real part and the band keeps its
//! position.

use crate::linalg::C64;

use super::roots::{count_zeros_near, derivative, newton, polish_multiple, zeros_in_rect, Rect};
use super::{Dispersion, DispersionCurve, SpectraError, SpectraOptions};

#[derive(Debug, Clone, Copy)]
struct Kink {
    k: f64,
    omega: C64,
    multiplicity: usize,
    incoming: (f64, C64),
}

enum Step {
    Accepted(C64),
    Multiple(C64, usize),
    Rejected,
}

#[derive(Clone)]
struct Walker<'d, 'a> {
    disp: &'d Dispersion<'a>,
    opts: &'d SpectraOptions,
    k: f64,
    w: C64,
    kink: Option<Kink>,
    kinks: Vec<f64>,
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl<'d, 'a> Walker<'d, 'a> {
    fn new(disp: &'d Dispersion<'a>, opts: &'d SpectraOptions, k: f64, w: C64) -> Self {
        Walker { disp, opts, k, w, kink: None, kinks: Vec::new() }
    }

    fn slope(&self, k: f64, w: C64) -> Option<C64> {
        let (_, dk) = self.disp.eval_dk(w, k);
        let f = |z: C64| self.disp.eval(z, k);
        let dw = derivative(&f, w);
        let s = -dk / dw;
        finite(s).then_some(s)
    }

    fn try_step(&self, k_next: f64) -> Step {
        let h = k_next - self.k;
        let scale = 1.0 + self.w.norm();
        let f = |z: C64| self.disp.eval(z, k_next);
        let pred = self.slope(self.k, self.w).map_or(self.w, |s| self.w + s * h);
        let n = newton(&f, pred, 1.0, 12);
        if n.converged && n.iterations <= 10 && (n.omega - self.w).norm() <= 0.25 * scale {
            let back = self.slope(k_next, n.omega).map_or(n.omega, |s| n.omega - s * h);
            let g = |z: C64| self.disp.eval(z, self.k);
            let b = newton(&g, back, 1.0, 12);
            if b.converged && (b.omega - self.w).norm() <= 1e-7 * scale {
                return Step::Accepted(n.omega);
            }
        }
        let r = (0.5 * (pred - self.w).norm()).max(self.opts.collision_tol * scale);
        match count_zeros_near(&f, pred, r) {
            Ok(m) if m >= 2 => Step::Multiple(polish_multiple(&f, pred, m, r.max(1e-2 * scale)), m),
            _ => Step::Rejected,
        }
    }

    /// Continues the band through the multiple root `kink` to `k_out`.
    fn leave_kink(&self, kink: &Kink, k_out: f64) -> Result<C64, SpectraError> {
        let (k_in, w_in) = kink.incoming;
        let f_in = |z: C64| self.disp.eval(z, k_in);
        let f_out = |z: C64| self.disp.eval(z, k_out);
        let ratio = ((k_out - kink.k).abs() / (k_in - kink.k).abs().max(1e-300)).max(1.0);
        let mut r = (2.0 * (w_in - kink.omega).norm() * ratio).max(1e-9);
        let m = kink.multiplicity;
        for _ in 0..24 {
            let rect = Rect::around(kink.omega, r);
            match (zeros_in_rect(&f_in, &rect, 0), zeros_in_rect(&f_out, &rect, 0)) {
                (Ok(a), Ok(b)) => {
                    let na: usize = a.iter().map(|x| x.multiplicity).sum();
                    let nb: usize = b.iter().map(|x| x.multiplicity).sum();
                    let simple = a.len() == na && b.len() == nb;
                    if na == m && nb == m && simple {
                        let rank = a
                            .iter()
                            .enumerate()
                            .min_by(|x, y| (x.1.omega - w_in).norm().total_cmp(&(y.1.omega - w_in).norm()))
                            .map(|x| x.0)
                            .unwrap_or(0);
                        return Ok(b[rank].omega);
                    }
                    r *= if na < m || nb < m { 1.5 } else { 0.7 };
                }
                _ => r *= 1.13,
            }
        }
        Err(SpectraError::ContinuationStall { k: kink.k, omega: kink.omega })
    }

    fn advance_to(&mut self, k_target: f64) -> Result<(), SpectraError> {
        let full = k_target - self.k;
        let mut h = full;
        while (k_target - self.k).abs() > 1e-14 {
            let remaining = k_target - self.k;
            if h.abs() > remaining.abs() {
                h = remaining;
            }
            let k_next = if (remaining - h).abs() <= 1e-14 { k_target } else { self.k + h };
            if let Some(kink) = self.kink.take() {
                self.w = self.leave_kink(&kink, k_next)?;
                self.k = k_next;
                continue;
            }
            match self.try_step(k_next) {
                Step::Accepted(w) => {
                    self.k = k_next;
                    self.w = w;
                    h = (2.0 * h).clamp(-full.abs(), full.abs());
                }
                Step::Multiple(w, m) if k_next == k_target => {
                    self.kink = Some(Kink { k: k_next, omega: w, multiplicity: m, incoming: (self.k, self.w) });
                    self.kinks.push(k_next);
                    self.k = k_next;
                    self.w = w;
                }
                Step::Multiple(..) | Step::Rejected => {
                    h *= 0.5;
                    if h.abs() < self.opts.min_step {
                        return Err(self.stall());
                    }
                }
            }
        }
        Ok(())
    }

    fn stall(&self) -> SpectraError {
        let scale = 1.0 + self.w.norm();
        let f = |z: C64| self.disp.eval(z, self.k);
        match count_zeros_near(&f, self.w, 2.0 * self.opts.collision_tol * scale) {
            Ok(m) if m >= 2 => SpectraError::BandCollision {
                k: self.k,
                omega: self.w,
                partial: Box::new(DispersionCurve { band_index: 0, samples: Vec::new(), closed: false, kinks: Vec::new() }),
            },
            _ => SpectraError::ContinuationStall { k: self.k, omega: self.w },
        }
    }
}

fn with_partial(e: SpectraError, samples: &[(f64, C64)], kinks: &[f64]) -> SpectraError {
    match e {
        SpectraError::BandCollision { k, omega, .. } => SpectraError::BandCollision {
            k,
            omega,
            partial: Box::new(DispersionCurve { band_index: 0, samples: samples.to_vec(), closed: false, kinks: kinks.to_vec() }),
        },
        other => other,
    }
}

/// Traces the band through the polished root `seed` = (k0, ω0) over the
/// increasing grid `k_grid`, marching forward and backward from the grid
/// point nearest k0.
pub fn trace_band(
    disp: &Dispersion<'_>,
    seed: (f64, C64),
    k_grid: &[f64],
    opts: &SpectraOptions,
) -> Result<DispersionCurve, SpectraError> {
    if k_grid.len() < 2 || k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectraError::InvalidGrid);
    }
    let j0 = (0..k_grid.len())
        .min_by(|&a, &b| (k_grid[a] - seed.0).abs().total_cmp(&(k_grid[b] - seed.0).abs()))
        .unwrap_or(0);
    let mut walker = Walker::new(disp, opts, seed.0, seed.1);
    walker.advance_to(k_grid[j0])?;
    let start = walker.clone();

    let mut forward = vec![(k_grid[j0], walker.w)];
    for &k in &k_grid[j0 + 1..] {
        walker.advance_to(k).map_err(|e| with_partial(e, &forward, &walker.kinks))?;
        forward.push((k, walker.w));
    }
    let mut back = start;
    let mut backward = Vec::new();
    for &k in k_grid[..j0].iter().rev() {
        back.advance_to(k).map_err(|e| {
            let mut s: Vec<_> = backward.iter().rev().cloned().collect();
            s.extend_from_slice(&forward);
            with_partial(e, &s, &back.kinks)
        })?;
        backward.push((k, back.w));
    }
    backward.reverse();
    backward.extend(forward);
    let mut kinks = back.kinks;
    kinks.extend(walker.kinks);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let mut curve = DispersionCurve { band_index: 0, samples: backward, closed: false, kinks };
    curve.closed = curve.closure_gap() <= opts.close_tol;
    Ok(curve)
}

/// Continues a band from the sample `start` to wavenumber `k`; used to
/// insert samples between two points of a traced curve.
pub fn refine_between(disp: &Dispersion<'_>, start: (f64, C64), k: f64, opts: &SpectraOptions) -> Result<C64, SpectraError> {
    let mut w = Walker::new(disp, opts, start.0, start.1);
    w.advance_to(k)?;
    Ok(w.w)
}
