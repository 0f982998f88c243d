//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use nhbloch::commands::{cmd_homotopy, cmd_verify, Report};
use nhbloch::config::{Overrides, RunConfig};
use nhbloch_core::linalg::{companion_roots, matching_distance, quartic_roots, QuarticCoeffs, C64};
use nhbloch_core::media::{a_layer, afa_cell, example3_hermitian, example3_nonhermitian, Layer, MaterialTensor, UnitCell, DEFAULT_L};
use nhbloch_core::spectra::{band_diagram, lambdas_with, BandDiagram, Rect, SpectraOptions};
use nhbloch_core::topology::{interior_point, winding_number, TopologyOptions};
use nhbloch_core::transfer::{default_method, monodromy, monodromy_matrix, Composition, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rect(re0: f64, re1: f64, im0: f64, im1: f64) -> Rect {
    Rect::new(re0, re1, im0, im1).unwrap()
}

fn diagram(cell: &UnitCell, region: Rect, bands: usize) -> BandDiagram {
    band_diagram(cell, &region, bands, &SpectraOptions::default()).unwrap()
}

fn hermitian_diagram() -> &'static BandDiagram {
    static D: OnceLock<BandDiagram> = OnceLock::new();
    D.get_or_init(|| diagram(&example3_hermitian(DEFAULT_L).unwrap(), rect(0.0, 4.5, -0.5, 0.5), 5))
}

fn nonhermitian_diagram() -> &'static BandDiagram {
    static D: OnceLock<BandDiagram> = OnceLock::new();
    D.get_or_init(|| diagram(&example3_nonhermitian(DEFAULT_L).unwrap(), rect(0.0, 4.5, -1.5, 0.5), 5))
}

fn config(preset: &str, out: &Path) -> RunConfig {
    RunConfig::resolve(&Overrides { preset: Some(preset.into()), out: Some(out.to_path_buf()), ..Default::default() }).unwrap()
}

/// The verification report of the non-Hermitian preset at seed 7, 20 samples.
fn verify_report() -> &'static Report {
    static R: OnceLock<Report> = OnceLock::new();
    R.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        cmd_verify(&config("example3-nonhermitian", dir.path())).unwrap()
    })
}

fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.gen::<f64>()
}

fn random_tensor(r: &mut ChaCha8Rng, diag: (f64, f64), loss: f64, off: f64) -> MaterialTensor {
    let d = |r: &mut ChaCha8Rng| c(uniform(r, diag.0, diag.1), uniform(r, -loss, loss));
    let o = |r: &mut ChaCha8Rng| c(uniform(r, -off, off), uniform(r, -off, off));
    let (xx, yy, zz) = (d(r), d(r), d(r));
    let (xy, yx) = (o(r), o(r));
    MaterialTensor::new(xx, xy, yx, yy, zz)
}

/// Cells of the unimodularity sweep, cycling through vacuum, Hermitian and
/// lossy or amplifying sandwiches, and stacks of generic layers.
fn sweep_cell(i: usize, r: &mut ChaCha8Rng) -> UnitCell {
    match i % 4 {
        0 => UnitCell::new(vec![Layer::vacuum(1.0).unwrap()]).unwrap(),
        1 | 2 => {
            let im = if i % 4 == 1 { 0.0 } else { uniform(r, -5.0, 5.0) };
            let re = uniform(r, 2.0, 15.0);
            afa_cell(
                c(re, im),
                uniform(r, 0.0, 0.8 * re),
                uniform(r, 0.0, PI),
                uniform(r, 0.0, PI),
                uniform(r, -0.9, 0.9),
                uniform(r, -0.9, 0.9),
                uniform(r, 0.05, 0.45),
            )
            .unwrap()
        }
        _ => {
            let n = 1 + r.gen_range(0..3);
            let mut cuts: Vec<f64> = (0..n - 1).map(|_| uniform(r, 0.1, 0.9)).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.insert(0, 0.0);
            cuts.push(1.0);
            let layers = cuts
                .windows(2)
                .filter(|w| w[1] - w[0] > 1e-3)
                .map(|w| Layer::generic(w[1] - w[0], random_tensor(r, (1.0, 10.0), 1.0, 1.0), random_tensor(r, (1.0, 2.0), 0.2, 0.2)).unwrap())
                .collect();
            UnitCell::new(layers).unwrap()
        }
    }
}

fn sweep() -> &'static Vec<(f64, f64)> {
    static S: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    S.get_or_init(|| {
        let mut r = ChaCha8Rng::seed_from_u64(2024);
        (0..200)
            .map(|i| {
                let cell = sweep_cell(i, &mut r);
                let w = loop {
                    let w = c(uniform(&mut r, -20.0, 20.0), uniform(&mut r, -2.0, 2.0));
                    if w.norm() <= 20.0 {
                        break w;
                    }
                };
                let det = monodromy(&cell, w, default_method(&cell)).unwrap().det_error();
                let lam = lambdas_with(&cell, w, &SpectraOptions::default()).unwrap();
                let prod = (lam.iter().product::<C64>() - 1.0).norm();
                (det, prod)
            })
            .collect()
    })
}

fn unimodularity() -> Outcome {
    let worst = sweep().iter().map(|s| s.0).fold(0.0, f64::max);
    outcome(worst <= 1e-9, format!("200 pairs, max |det M - 1| = {worst:.2e}"))
}

fn multiplier_product() -> Outcome {
    let worst = sweep().iter().map(|s| s.1).fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("200 pairs, max |prod lambda - 1| = {worst:.2e}"))
}

fn min_separation(r: &[C64]) -> f64 {
    let mut s = f64::INFINITY;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            s = s.min((r[i] - r[j]).norm());
        }
    }
    s
}

fn quartic_solver() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut excluded) = (0.0f64, 0usize);
    for _ in 0..10_000 {
        let v: Vec<C64> = (0..4).map(|_| c(uniform(&mut r, -10.0, 10.0), uniform(&mut r, -10.0, 10.0))).collect();
        let oracle = companion_roots(&v);
        if min_separation(&oracle) < 1e-4 {
            excluded += 1;
            continue;
        }
        let found = quartic_roots(&QuarticCoeffs::new(v[0], v[1], v[2], v[3]));
        worst = worst.max(matching_distance(&found, &oracle).unwrap());
    }
    // Near-double roots, against the roots the coefficients were built from.
    let mut worst_pair = 0.0f64;
    for _ in 0..1000 {
        let b: Vec<C64> = (0..3).map(|_| c(uniform(&mut r, -3.0, 3.0), uniform(&mut r, -3.0, 3.0))).collect();
        let sep = 10f64.powf(uniform(&mut r, -8.0, -4.0));
        let roots = [b[0], b[0] + C64::from_polar(sep, uniform(&mut r, 0.0, 2.0 * PI)), b[1], b[2]];
        let found = quartic_roots(&QuarticCoeffs::from_roots(&roots));
        worst_pair = worst_pair.max(matching_distance(&found, &roots).unwrap());
    }
    // A near-triple root moves by (rounding · scale)^(1/3) when the
    // coefficients are rounded, whatever the solver; measured against that floor.
    let mut worst_triple_ratio = 0.0f64;
    for _ in 0..1000 {
        let b: Vec<C64> = (0..2).map(|_| c(uniform(&mut r, -3.0, 3.0), uniform(&mut r, -3.0, 3.0))).collect();
        let d = C64::from_polar(10f64.powf(uniform(&mut r, -8.0, -4.0)), uniform(&mut r, 0.0, 2.0 * PI));
        let roots = [b[0], b[0] + d, b[0] - d, b[1]];
        let q = QuarticCoeffs::from_roots(&roots);
        let floor = (f64::EPSILON * (1.0 + q.max_abs()) / (b[0] - b[1]).norm().max(1.0)).cbrt();
        let err = matching_distance(&quartic_roots(&q), &roots).unwrap();
        worst_triple_ratio = worst_triple_ratio.max(err / floor);
    }
    outcome(
        worst <= 1e-9 && worst_pair <= 1e-5 && worst_triple_ratio <= 4.0,
        format!(
            "10000 sets ({excluded} clustered excluded), max distance {worst:.2e}; 1000 near-double sets, max {worst_pair:.2e}; \
             1000 near-triple sets, max {worst_triple_ratio:.2} x conditioning floor"
        ),
    )
}

fn closed_form_vs_ode() -> Outcome {
    let cell = example3_nonhermitian(DEFAULT_L).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let (mut worst, mut lo, mut hi, mut rated) = (0.0f64, f64::INFINITY, 0.0f64, 0usize);
    for _ in 0..100 {
        let w = c(uniform(&mut r, 0.0, 3.0), uniform(&mut r, -1.0, 1.0));
        let exact = monodromy_matrix(&cell, w, Method::ClosedForm, Composition::Propagation).unwrap();
        let rk = |n: usize| (monodromy_matrix(&cell, w, Method::Integrate { steps_per_layer: n }, Composition::Propagation).unwrap() - exact).frobenius();
        worst = worst.max(rk(512));
        let (coarse, fine) = (rk(32), rk(64));
        // The ratio is meaningful only well above the rounding floor.
        if fine > 1e-10 {
            let ratio = coarse / fine;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            rated += 1;
        }
    }
    let ratio_ok = rated > 0 && (16.0 - lo).abs() <= 3.0 && (hi - 16.0).abs() <= 3.0;
    outcome(
        worst <= 1e-7 && ratio_ok,
        format!("100 points, max Frobenius difference {worst:.2e} at 512 steps; step-doubling ratio in [{lo:.2}, {hi:.2}] over {rated} points"),
    )
}

fn hermitian_bands() -> Outcome {
    let d = hermitian_diagram();
    let imag = d.curves.iter().map(|c| c.max_abs_imag()).fold(0.0, f64::max);
    let asym = d.curves[0].reciprocity_defect().unwrap_or(0.0);
    let tol = 1e-7;
    outcome(
        d.curves.len() == 5 && imag <= 1e-7 && asym > 10.0 * tol,
        format!("{} bands, max |Im omega| = {imag:.2e}, band 1 max |w(k) - w(-k)| = {asym:.3e}", d.curves.len()),
    )
}

fn point_gap_loops() -> Outcome {
    let d = nonhermitian_diagram();
    let opts = TopologyOptions::default();
    let mut worst_gap = 0.0f64;
    let mut windings = Vec::new();
    for curve in &d.curves {
        worst_gap = worst_gap.max(curve.closure_gap());
        let w = interior_point(curve, opts.tol_curve).and_then(|p| winding_number(curve, p, None, &opts).ok()).map(|w| w.winding);
        windings.push(w);
    }
    let ok = d.curves.len() == 5 && worst_gap <= 1e-7 && windings.iter().all(|w| matches!(w, Some(1) | Some(-1)));
    outcome(ok, format!("{} loops, max closure gap {worst_gap:.2e}, windings {windings:?}", d.curves.len()))
}

fn hermitian_index_zero() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let r = cmd_verify(&config("example3-hermitian", dir.path())).unwrap();
    let p = &r.hermitian_partner;
    let ok = p.off_axis.len() == 50 && !p.gap_points.is_empty() && p.failures == 0;
    let gap = p.gap.as_ref().map(|g| format!("[{:.4}, {:.4}]", g.lower, g.upper)).unwrap_or_else(|| "none".into());
    outcome(ok, format!("{} off-axis + {} gap points in gap {gap}, {} failures", p.off_axis.len(), p.gap_points.len(), p.failures))
}

fn index_jump() -> Outcome {
    let r = verify_report();
    let bands = &r.index_jump.results;
    let ok = bands.len() == 3 && bands.iter().all(|b| b.checked >= 20 && b.failures == 0);
    let detail: Vec<String> = bands
        .iter()
        .map(|b| format!("band {}: {} checked, {} failed, {} on spectrum", b.band, b.checked, b.failures, b.on_spectrum))
        .collect();
    outcome(ok, detail.join("; "))
}

fn homotopy() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let h = cmd_homotopy(&config("example3-nonhermitian", dir.path())).unwrap();
    let ok = h.steps.len() == 64 && h.blocked_at.is_none() && h.index_constant_zero;
    let w = h.steps[0].witness;
    outcome(ok, format!("{} steps from witness {:.6}, blocked {:?}, Ind = 0 throughout: {}", h.steps.len(), w.re, h.blocked_at, h.index_constant_zero))
}

fn edge_modes() -> Outcome {
    let r = verify_report();
    let bands = &r.edge_modes.results;
    let t = &r.tolerances;
    let tolerances_ok = t.bc == 1e-9 && t.decay == 1e-6 && t.ode == 1e-6;
    let ok = tolerances_ok
        && bands.len() == 3
        && bands.iter().all(|b| {
            b.band == 1
                && b.checked >= 20
                && b.failures == 0
                && b.samples.iter().all(|s| s.side.is_some() && s.side == s.expected_side)
                && b.max_boundary_residual.is_some_and(|x| x <= 1e-9)
                && b.max_decay_error.is_some_and(|x| x <= 1e-6)
                && b.max_ode_residual.is_some_and(|x| x <= 1e-6)
        });
    let detail: Vec<String> = bands
        .iter()
        .map(|b| {
            format!(
                "{}: {}/{} pass, bc {:.1e}, decay {:.1e}, ode {:.1e}",
                b.bc,
                b.checked - b.failures,
                b.checked,
                b.max_boundary_residual.unwrap_or(f64::NAN),
                b.max_decay_error.unwrap_or(f64::NAN),
                b.max_ode_residual.unwrap_or(f64::NAN)
            )
        })
        .collect();
    outcome(ok, detail.join("; "))
}

fn edge_count() -> Outcome {
    let r = verify_report();
    let samples: Vec<_> = r.edge_modes.results.iter().flat_map(|b| &b.samples).collect();
    let rank_two = samples.iter().filter(|s| s.rank == Some(2)).count();
    let wrong = samples.iter().filter(|s| s.rank == Some(2) && s.count != Some(1)).count();
    outcome(rank_two > 0 && wrong == 0, format!("{rank_two} of {} samples have rank(B) = 2, {wrong} with a count other than 1", samples.len()))
}

fn isotropic_reciprocity() -> Outcome {
    let cells = [
        ("single layer", UnitCell::new(vec![Layer::isotropic(c(4.0, 0.4), 1.0).unwrap()]).unwrap(), 2),
        ("bilayer", UnitCell::new(vec![Layer::isotropic(c(13.0, 0.0), 0.4).unwrap(), Layer::vacuum(0.6).unwrap()]).unwrap(), 3),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, cell, bands) in cells {
        let d = diagram(&cell, rect(0.0, 4.5, -0.5, 0.5), bands);
        let defect = d.curves.iter().filter_map(|c| c.reciprocity_defect()).fold(0.0, f64::max);
        let mut edge_err = 0.0f64;
        let mut extrema_at_edges = true;
        for curve in &d.curves {
            for &(k, w) in &curve.samples {
                if k == -PI || k == 0.0 || k == PI {
                    let m = monodromy_matrix(&cell, w, Method::ClosedForm, Composition::Propagation).unwrap();
                    edge_err = edge_err.max(((m[(0, 0)] + m[(3, 3)]).norm() - 2.0).abs());
                }
            }
            let argext = |f: &dyn Fn(f64, f64) -> bool| {
                curve.samples.iter().fold(curve.samples[0], |a, &b| if f(b.1.re, a.1.re) { b } else { a }).0
            };
            for k in [argext(&|x, y| x > y), argext(&|x, y| x < y)] {
                let at_edge = [-PI, 0.0, PI].iter().any(|e| (k - e).abs() < 1e-12);
                extrema_at_edges &= at_edge;
            }
        }
        ok &= d.curves.len() == bands && defect <= 1e-8 && edge_err <= 1e-6 && extrema_at_edges;
        detail.push(format!("{name}: {} bands, defect {defect:.1e}, ||tr| - 2| {edge_err:.1e}, extrema at k in {{-pi, 0, pi}}: {extrema_at_edges}", d.curves.len()));
    }
    outcome(ok, detail.join("; "))
}

fn symmetric_reciprocity() -> Outcome {
    let real_tensor = UnitCell::new(vec![
        a_layer(c(13.0, 0.0), 6.0, 0.0, 0.25).unwrap(),
        Layer::vacuum(0.5).unwrap(),
        a_layer(c(13.0, 0.0), 6.0, 0.8, 0.25).unwrap(),
    ])
    .unwrap();
    let cells = [
        ("inversion-symmetric Hermitian", afa_cell(c(13.0, 0.0), 6.0, 0.8, 0.8, 0.5, 0.5, DEFAULT_L).unwrap(), rect(0.0, 4.5, -0.5, 0.5)),
        ("inversion-symmetric lossy", afa_cell(c(13.0, 5.0), 6.0, 0.8, 0.8, 0.5, 0.5, DEFAULT_L).unwrap(), rect(0.0, 4.5, -1.5, 0.5)),
        ("real tensor", real_tensor, rect(0.0, 4.5, -0.5, 0.5)),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, cell, region) in cells {
        let d = diagram(&cell, region, 5);
        let defect = d.curves.iter().map(|c| c.reciprocity_defect().unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        ok &= d.curves.len() == 5 && defect <= 1e-7;
        detail.push(format!("{name}: {} bands, max defect {defect:.1e}", d.curves.len()));
    }
    outcome(ok, detail.join("; "))
}

fn report_hash(dir: &Path) -> String {
    let status = Command::new(env!("CARGO_BIN_EXE_nhbloch"))
        .args(["verify", "--seed", "7", "--out"])
        .arg(dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let bytes = std::fs::read(dir.join("report.json")).unwrap();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ha, hb) = (report_hash(a.path()), report_hash(b.path()));
    outcome(ha == hb, format!("report.json sha256 {} / {}", &ha[..16], &hb[..16]))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 14] = [
        ("unimodular monodromy", unimodularity),
        ("multiplier product", multiplier_product),
        ("quartic solver vs companion", quartic_solver),
        ("closed form vs ODE", closed_form_vs_ode),
        ("Hermitian bands real, nonreciprocal", hermitian_bands),
        ("point-gap loops", point_gap_loops),
        ("Hermitian index zero", hermitian_index_zero),
        ("index jump equals winding", index_jump),
        ("homotopy keeps index zero", homotopy),
        ("edge modes", edge_modes),
        ("bulk-edge count", edge_count),
        ("isotropic reciprocity", isotropic_reciprocity),
        ("symmetry gives reciprocity", symmetric_reciprocity),
        ("deterministic report", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {:<36} {} ({:.1}s) {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
