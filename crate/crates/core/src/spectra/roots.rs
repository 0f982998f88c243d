//! Zeros of an analytic scalar function in a rectangle: argument-principle
//! counts on adaptively sampled boundaries, quadrisection, Newton polish.

use std::f64::consts::PI;

use crate::linalg::{C64, ZERO};

use super::SpectraError;

/// Axis-aligned rectangle [re0, re1] × [im0, im1] in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Result<Self, SpectraError> {
        let ok = [re0, re1, im0, im1].iter().all(|v| v.is_finite()) && re1 > re0 && im1 > im0;
        if ok {
            Ok(Rect { re0, re1, im0, im1 })
        } else {
            Err(SpectraError::InvalidRegion)
        }
    }

    /// Square of half-width `r` centred on `c`.
    pub fn around(c: C64, r: f64) -> Self {
        Rect { re0: c.re - r, re1: c.re + r, im0: c.im - r, im1: c.im + r }
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    pub fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, z: C64) -> bool {
        self.contains_with(z, 0.0)
    }

    pub fn contains_with(&self, z: C64, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }

    /// Grown by `frac` of its size on every side.
    pub fn inflate(&self, frac: f64) -> Self {
        let (dw, dh) = (frac * self.width(), frac * self.height());
        Rect { re0: self.re0 - dw, re1: self.re1 + dw, im0: self.im0 - dh, im1: self.im1 + dh }
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re0, self.im0),
            C64::new(self.re1, self.im0),
            C64::new(self.re1, self.im1),
            C64::new(self.re0, self.im1),
        ]
    }
}

/// A zero and its multiplicity (clusters below resolution count as one).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub omega: C64,
    pub multiplicity: usize,
}

const SEGMENTS_PER_EDGE: usize = 8;
const MAX_SEGMENT_DEPTH: u32 = 36;
const MAX_BOX_DEPTH: usize = 60;

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Phase change of f along the segment a → b. Segments are halved until each
/// half turns by less than π/4, so no ±2π wrap can hide between samples.
fn segment_phase(f: &dyn Fn(C64) -> C64, a: C64, b: C64, fa: C64, fb: C64, depth: u32) -> Result<f64, SpectraError> {
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !finite(fm) {
        return Err(SpectraError::NonFinite);
    }
    if fm == ZERO {
        return Err(SpectraError::BoundaryTooClose);
    }
    let d1 = (fm / fa).arg();
    let d2 = (fb / fm).arg();
    if d1.abs() < PI / 4.0 && d2.abs() < PI / 4.0 {
        return Ok(d1 + d2);
    }
    if depth >= MAX_SEGMENT_DEPTH {
        return Err(SpectraError::BoundaryTooClose);
    }
    Ok(segment_phase(f, a, m, fa, fm, depth + 1)? + segment_phase(f, m, b, fm, fb, depth + 1)?)
}

/// Winding number of f around 0 along a closed polygon.
pub(crate) fn polygon_count(f: &dyn Fn(C64) -> C64, vertices: &[C64], per_edge: usize) -> Result<usize, SpectraError> {
    let n = vertices.len();
    let mut points = Vec::with_capacity(n * per_edge);
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for s in 0..per_edge {
            points.push(a + (b - a) * (s as f64 / per_edge as f64));
        }
    }
    let values: Vec<C64> = points.iter().map(|&z| f(z)).collect();
    if values.iter().any(|v| !finite(*v)) {
        return Err(SpectraError::NonFinite);
    }
    if values.contains(&ZERO) {
        return Err(SpectraError::BoundaryTooClose);
    }
    let mut total = 0.0;
    for i in 0..points.len() {
        let j = (i + 1) % points.len();
        total += segment_phase(f, points[i], points[j], values[i], values[j], 0)?;
    }
    let turns = total / (2.0 * PI);
    let count = turns.round();
    if (turns - count).abs() > 0.1 || count < 0.0 {
        return Err(SpectraError::BoundaryTooClose);
    }
    Ok(count as usize)
}

/// Number of zeros inside `rect`, with multiplicity.
pub fn count_zeros(f: &dyn Fn(C64) -> C64, rect: &Rect) -> Result<usize, SpectraError> {
    polygon_count(f, &rect.corners(), SEGMENTS_PER_EDGE)
}

/// Number of zeros inside the 16-gon inscribed in the circle |z − c| = r.
pub fn count_zeros_near(f: &dyn Fn(C64) -> C64, c: C64, r: f64) -> Result<usize, SpectraError> {
    let v: Vec<C64> = (0..16).map(|j| c + C64::from_polar(r, 2.0 * PI * j as f64 / 16.0)).collect();
    polygon_count(f, &v, 2)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome {
    pub omega: C64,
    pub iterations: usize,
    pub converged: bool,
}

/// Central-difference derivative with step 1e−6·(1 + |ω|).
pub(crate) fn derivative(f: &dyn Fn(C64) -> C64, w: C64) -> C64 {
    let h = 1e-6 * (1.0 + w.norm());
    (f(w + h) - f(w - h)) / (2.0 * h)
}

/// Newton iteration; `mult` > 1 gives the multiplicity-corrected variant.
/// Converged when the step falls below 1e−13·(1 + |ω|), or when a small step
/// stops contracting: that is the rounding floor of f near clustered roots.
pub(crate) fn newton(f: &dyn Fn(C64) -> C64, w0: C64, mult: f64, max_iter: usize) -> NewtonOutcome {
    let mut w = w0;
    let mut prev = f64::INFINITY;
    for it in 1..=max_iter {
        let fw = f(w);
        if fw == ZERO {
            return NewtonOutcome { omega: w, iterations: it, converged: true };
        }
        let d = derivative(f, w);
        if !finite(fw) || !finite(d) || d == ZERO {
            return NewtonOutcome { omega: w, iterations: it, converged: false };
        }
        let step = fw / d * mult;
        let size = step.norm();
        let scale = 1.0 + w.norm();
        if size > 0.5 * prev && size <= 1e-8 * scale {
            return NewtonOutcome { omega: w, iterations: it, converged: true };
        }
        w -= step;
        if size <= 1e-13 * scale {
            return NewtonOutcome { omega: w, iterations: it, converged: true };
        }
        prev = size;
    }
    NewtonOutcome { omega: w, iterations: max_iter, converged: false }
}

/// Derivatives f^(p)(w) for p ≤ `max_order` from one trapezoidal Cauchy
/// integral on |z − w| = r. Accuracy is set by |f| on the circle, not by the
/// cancellation near a multiple zero.
pub(crate) fn cauchy_derivatives(f: &dyn Fn(C64) -> C64, w: C64, r: f64, max_order: usize) -> Vec<C64> {
    const N: usize = 32;
    let samples: Vec<(C64, C64)> = (0..N)
        .map(|j| {
            let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / N as f64);
            (e, f(w + e * r))
        })
        .collect();
    let mut out = Vec::with_capacity(max_order + 1);
    let mut fact = 1.0;
    for p in 0..=max_order {
        if p > 0 {
            fact *= p as f64;
        }
        let s: C64 = samples.iter().map(|(e, v)| v * e.powi(-(p as i32))).sum();
        out.push(s / N as f64 * fact / r.powi(p as i32));
    }
    out
}

/// Locates a zero of multiplicity `m` near `w0` as the simple zero of
/// f^(m−1). The exact zero at the origin (identity monodromy) is kept exact.
pub(crate) fn polish_multiple(f: &dyn Fn(C64) -> C64, w0: C64, m: usize, r: f64) -> C64 {
    if m <= 1 {
        let n = newton(f, w0, 1.0, 40);
        return if n.converged { n.omega } else { w0 };
    }
    if w0.norm() <= r && f(ZERO) == ZERO {
        return ZERO;
    }
    let mut w = w0;
    for _ in 0..8 {
        let d = cauchy_derivatives(f, w, r, m);
        if d[m] == ZERO || !finite(d[m]) {
            break;
        }
        let step = d[m - 1] / d[m];
        if !finite(step) || step.norm() > r {
            break;
        }
        w -= step;
        if step.norm() <= 1e-14 * (1.0 + w.norm()) {
            break;
        }
    }
    w
}

fn split_rect(rect: &Rect, fx: f64, fy: f64) -> Vec<Rect> {
    let xs = rect.re0 + fx * rect.width();
    let ys = rect.im0 + fy * rect.height();
    let (w, h) = (rect.width(), rect.height());
    if w > 2.0 * h {
        vec![Rect { re1: xs, ..*rect }, Rect { re0: xs, ..*rect }]
    } else if h > 2.0 * w {
        vec![Rect { im1: ys, ..*rect }, Rect { im0: ys, ..*rect }]
    } else {
        vec![
            Rect { re0: rect.re0, re1: xs, im0: rect.im0, im1: ys },
            Rect { re0: xs, re1: rect.re1, im0: rect.im0, im1: ys },
            Rect { re0: xs, re1: rect.re1, im0: ys, im1: rect.im1 },
            Rect { re0: rect.re0, re1: xs, im0: ys, im1: rect.im1 },
        ]
    }
}

const SPLITS: [f64; 7] = [0.5, 0.47, 0.53, 0.43, 0.57, 0.39, 0.61];

fn solve_box(f: &dyn Fn(C64) -> C64, rect: &Rect, count: usize, depth: usize, out: &mut Vec<Root>) -> Result<(), SpectraError> {
    if count == 0 {
        return Ok(());
    }
    let c = rect.center();
    let scale = 1.0 + c.norm();
    if count == 1 {
        let n = newton(f, c, 1.0, 40);
        if n.converged && rect.contains_with(n.omega, 1e-9 * scale) {
            out.push(Root { omega: n.omega, multiplicity: 1 });
            return Ok(());
        }
    }
    if rect.diameter() <= 1e-6 * scale {
        out.push(Root { omega: polish_multiple(f, c, count, 1e-3 * scale), multiplicity: count });
        return Ok(());
    }
    if depth >= MAX_BOX_DEPTH {
        return Err(SpectraError::MaxDepthExceeded);
    }
    for &s in &SPLITS {
        let children = split_rect(rect, s, 1.0 - s);
        let counts: Result<Vec<usize>, _> = children.iter().map(|r| count_zeros(f, r)).collect();
        match counts {
            Ok(cs) if cs.iter().sum::<usize>() == count => {
                let start = out.len();
                for (r, &n) in children.iter().zip(&cs) {
                    solve_box(f, r, n, depth + 1, out)?;
                }
                debug_assert_eq!(out[start..].iter().map(|r| r.multiplicity).sum::<usize>(), count);
                return Ok(());
            }
            Ok(_) | Err(SpectraError::BoundaryTooClose) => continue,
            Err(e) => return Err(e),
        }
    }
    if count >= 2 {
        // No split line stays clear of the zeros: they sit closer together
        // than the function's rounding noise can resolve.
        out.push(Root { omega: polish_multiple(f, c, count, rect.diameter().max(1e-3 * scale)), multiplicity: count });
        return Ok(());
    }
    Err(SpectraError::BoundaryTooClose)
}

/// All zeros of `f` in `region`, sorted by real part. A boundary passing too
/// close to a zero is pushed outward by 1% up to `retries` times.
pub fn zeros_in_rect(f: &dyn Fn(C64) -> C64, region: &Rect, retries: usize) -> Result<Vec<Root>, SpectraError> {
    let mut rect = *region;
    let mut attempt = 0;
    let count = loop {
        match count_zeros(f, &rect) {
            Ok(n) => break n,
            Err(SpectraError::BoundaryTooClose) if attempt < retries => {
                attempt += 1;
                rect = region.inflate(0.01 * attempt as f64);
            }
            Err(e) => return Err(e),
        }
    };
    let mut out = Vec::new();
    solve_box(f, &rect, count, 0, &mut out)?;
    out.sort_by(|a, b| a.omega.re.total_cmp(&b.omega.re).then(a.omega.im.total_cmp(&b.omega.im)));
    // A cluster split across sibling boxes comes back as coincident pieces.
    let mut merged: Vec<Root> = Vec::with_capacity(out.len());
    for r in out {
        match merged.iter_mut().find(|m| (m.omega - r.omega).norm() <= 1e-9 * (1.0 + r.omega.norm())) {
            Some(m) => m.multiplicity += r.multiplicity,
            None => merged.push(r),
        }
    }
    Ok(merged)
}
