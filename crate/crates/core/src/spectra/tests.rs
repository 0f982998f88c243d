use std::f64::consts::PI;

use super::*;
use crate::media::{example3_hermitian, example3_nonhermitian, vacuum_cell, DEFAULT_L};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn vacuum_multipliers() {
    let lam = lambdas_at(&vacuum_cell(), c(1.0, 0.0)).unwrap();
    let e = C64::from_polar(1.0, 1.0);
    let near = |z: C64| lam.iter().filter(|l| (*l - z).norm() < 1e-6).count();
    assert_eq!(near(e), 2);
    assert_eq!(near(e.conj()), 2);
    let at_zero = lambdas_at(&example3_nonhermitian(DEFAULT_L).unwrap(), c(0.0, 0.0)).unwrap();
    assert!(at_zero.iter().all(|l| (l - 1.0).norm() < 1e-12));
}

#[test]
fn determinant_matches_eigenvalue_product() {
    let cell = example3_nonhermitian(DEFAULT_L).unwrap();
    for (w, k) in [(c(0.7, -0.2), 0.4), (c(2.1, 0.3), -2.0), (c(1.3, -1.1), 3.0)] {
        let d = dispersion_det(&cell, w, k).unwrap();
        let lam = lambdas_at(&cell, w).unwrap();
        let e = C64::from_polar(1.0, k);
        let prod: C64 = lam.iter().map(|l| l - e).product();
        assert!((d - prod).norm() <= 1e-9 * (1.0 + d.norm()), "{d} vs {prod}");
    }
}

#[test]
fn vacuum_roots_at_fixed_k() {
    let cell = vacuum_cell();
    let opts = SpectraOptions::default();
    let r = roots_in_region(&cell, 1.0, &Rect::new(0.5, 1.5, -0.5, 0.5).unwrap(), 10, &opts).unwrap();
    assert_eq!(r.len(), 1);
    assert!((r[0].omega - 1.0).norm() < 1e-12);
    let r = roots_in_region(&cell, 1.0, &Rect::new(0.0, 7.0, -0.5, 0.5).unwrap(), 10, &opts).unwrap();
    let w: Vec<f64> = r.iter().map(|x| x.omega.re).collect();
    assert_eq!(w.len(), 2);
    assert!((w[0] - 1.0).abs() < 1e-12 && (w[1] - (2.0 * PI - 1.0)).abs() < 1e-12);
}

#[test]
fn full_form_sees_isotropic_bands_as_double() {
    let opts = SpectraOptions { reduce_isotropic: false, ..Default::default() };
    let r = roots_in_region(&vacuum_cell(), 1.0, &Rect::new(0.5, 1.5, -0.5, 0.5).unwrap(), 10, &opts).unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].multiplicity, 2);
    assert!((r[0].omega - 1.0).norm() < 1e-9);
}

#[test]
fn hermitian_roots_at_zone_centre_are_real() {
    let cell = example3_hermitian(DEFAULT_L).unwrap();
    let r = roots_in_region(&cell, 0.0, &Rect::new(0.0, 1.2, -0.2, 0.2).unwrap(), 10, &SpectraOptions::default()).unwrap();
    assert!(!r.is_empty());
    for x in &r {
        assert!(x.omega.im.abs() <= 1e-8, "{:?}", x);
    }
    // ω = 0 is the fourfold root of the identity monodromy.
    assert!(r.iter().any(|x| x.omega == C64::new(0.0, 0.0) && x.multiplicity == 4));
}

#[test]
fn hermitian_zone_edge_values() {
    let cell = example3_hermitian(DEFAULT_L).unwrap();
    let r = roots_in_region(&cell, PI, &Rect::new(0.1, 3.5, -0.3, 0.3).unwrap(), 10, &SpectraOptions::default()).unwrap();
    let w: Vec<f64> = r.iter().map(|x| x.omega.re).collect();
    let expect = [0.7715, 1.2067, 1.5803, 1.9550, 3.2929];
    assert_eq!(w.len(), expect.len(), "{w:?}");
    for (a, b) in w.iter().zip(expect) {
        assert!((a - b).abs() < 1e-3, "{w:?}");
    }
}

#[test]
fn vacuum_band_through_seed() {
    let cell = vacuum_cell();
    let opts = SpectraOptions::default();
    let disp = Dispersion::new(&cell, &opts).unwrap();
    assert_eq!(disp.form(), DispersionForm::Reduced);
    let grid = k_grid(64);
    let curve = trace_band(&disp, (1.0, c(1.0, 0.0)), &grid, &opts).unwrap();
    for &(k, w) in &curve.samples {
        assert!((w - k.abs()).norm() < 1e-8, "k {k} ω {w}");
    }
    assert!(curve.closed);
    assert!(curve.kinks.contains(&0.0));
}

#[test]
fn vacuum_band_diagram() {
    let opts = SpectraOptions { k_samples: 64, ..Default::default() };
    let d = band_diagram(&vacuum_cell(), &Rect::new(0.0, 7.0, -0.1, 0.1).unwrap(), 2, &opts).unwrap();
    assert_eq!(d.curves.len(), 2);
    for &(k, w) in &d.curves[0].samples {
        assert!((w - k.abs()).norm() < 1e-8);
    }
    for &(k, w) in &d.curves[1].samples {
        assert!((w - (2.0 * PI - k.abs())).norm() < 1e-8, "k {k} ω {w}");
    }
    assert_eq!(is_reciprocal(&d, 1e-8), vec![true, true]);
}

#[test]
fn hermitian_band_one_is_real_and_nonreciprocal() {
    let cell = example3_hermitian(DEFAULT_L).unwrap();
    let opts = SpectraOptions { k_samples: 128, ..Default::default() };
    let d = band_diagram(&cell, &Rect::new(0.0, 2.5, -0.4, 0.4).unwrap(), 2, &opts).unwrap();
    let b1 = &d.curves[0];
    assert!(b1.max_abs_imag() <= 1e-8);
    assert!(b1.closed);
    assert!(b1.reciprocity_defect().unwrap() > 1e-4);
    assert!((b1.samples[0].1.re - 0.7715).abs() < 1e-3);
    for &(k, w) in b1.samples.iter().step_by(7) {
        assert!(multiplier_mismatch(&cell, k, w, &opts).unwrap() <= 1e-7);
    }
}

#[test]
fn nonhermitian_band_one_is_a_loop() {
    let cell = example3_nonhermitian(DEFAULT_L).unwrap();
    let opts = SpectraOptions { k_samples: 128, ..Default::default() };
    let d = band_diagram(&cell, &Rect::new(0.0, 2.0, -1.5, 0.5).unwrap(), 1, &opts).unwrap();
    let b1 = &d.curves[0];
    assert!(b1.closed, "gap {}", b1.closure_gap());
    assert!(b1.enclosed_area().abs() > 1e-3);
}

#[test]
fn centroid_of_a_square() {
    let samples = [c(0.0, 0.0), c(2.0, 0.0), c(2.0, 2.0), c(0.0, 2.0), c(0.0, 0.0)];
    let curve = DispersionCurve {
        band_index: 1,
        samples: samples.iter().enumerate().map(|(i, w)| (i as f64, *w)).collect(),
        closed: true,
        kinks: vec![],
    };
    assert!((curve.centroid().unwrap() - c(1.0, 1.0)).norm() < 1e-14);
    assert!((curve.enclosed_area() - 4.0).abs() < 1e-14);
}

#[test]
fn grid_is_symmetric() {
    let g = k_grid(512);
    assert_eq!(g.len(), 513);
    assert_eq!(g[0], -PI);
    assert_eq!(g[512], PI);
    assert_eq!(g[256], 0.0);
    for j in 0..=512 {
        assert!((g[j] + g[512 - j]).abs() < 1e-15);
    }
}
