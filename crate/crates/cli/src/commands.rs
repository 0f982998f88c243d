//! Subcommand drivers. Each returns the documents it wrote so tests can
//! inspect them without re-reading files.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use nhbloch_core::edge::{
    find_edge_modes, fitted_log_decay, mode_profile, ode_residual, verify_edge_theorem, BoundaryCondition, EdgeReport,
    EdgeSample,
};
use nhbloch_core::linalg::C64;
use nhbloch_core::media::HomotopyFamily;
use nhbloch_core::spectra::{band_diagram, lambdas_with, BandDiagram, Dispersion, DispersionCurve, SpectraError};
use nhbloch_core::topology::{
    find_gap, homotopy_track, index_from_multipliers, interior_point, sample_interior_tagged, spectral_index, verify_index_jump,
    winding_number, TopologyError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CellSource, RunConfig};
use crate::output::{bands_csv, cplx_vec, finite, mode_csv, write_atomic, write_json, Cplx, SCHEMA_VERSION};
use crate::CliError;

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveTolerances {
    pub circle: f64,
    pub curve: f64,
    pub bc: f64,
    pub cluster: f64,
    pub rank: f64,
    pub decay: f64,
    pub ode: f64,
    pub close: f64,
    pub collision: f64,
    pub min_step: f64,
}

/// Run metadata; the only place wall-clock timings appear.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub schema_version: u32,
    pub command: String,
    pub cell: CellSource,
    /// A-layer thickness of the sandwich presets.
    pub l: Option<f64>,
    pub seed: u64,
    pub k_samples: usize,
    pub region: Region,
    pub tolerances: EffectiveTolerances,
    pub threads: usize,
    pub timings: BTreeMap<String, f64>,
}

struct Clock {
    start: Instant,
    phases: BTreeMap<String, f64>,
}

impl Clock {
    fn new() -> Self {
        Clock { start: Instant::now(), phases: BTreeMap::new() }
    }

    fn lap<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let r = f();
        self.phases.insert(name.to_string(), t.elapsed().as_secs_f64());
        r
    }

    fn finish(mut self) -> BTreeMap<String, f64> {
        self.phases.insert("total".into(), self.start.elapsed().as_secs_f64());
        self.phases
    }
}

fn region(cfg: &RunConfig) -> Region {
    let r = cfg.region;
    Region { re0: r.re0, re1: r.re1, im0: r.im0, im1: r.im1 }
}

pub fn effective_tolerances(cfg: &RunConfig) -> EffectiveTolerances {
    let (s, t, e) = (cfg.spectra(), cfg.topology(), cfg.edge());
    EffectiveTolerances {
        circle: t.tol_circle,
        curve: t.tol_curve,
        bc: e.tol_bc,
        cluster: e.tol_cluster,
        rank: e.tol_rank,
        decay: e.tol_decay,
        ode: e.tol_ode,
        close: s.close_tol,
        collision: s.collision_tol,
        min_step: s.min_step,
    }
}

fn write_meta(cfg: &RunConfig, command: &str, file: &str, clock: Clock) -> Result<PathBuf, CliError> {
    let meta = Meta {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        cell: cfg.source.clone(),
        l: cfg.l,
        seed: cfg.seed,
        k_samples: cfg.k_samples,
        region: region(cfg),
        tolerances: effective_tolerances(cfg),
        threads: rayon::current_num_threads(),
        timings: clock.finish(),
    };
    let p = cfg.out.join(file);
    write_json(&p, &meta)?;
    Ok(p)
}

fn diagram(cfg: &RunConfig, bands: usize) -> Result<BandDiagram, CliError> {
    Ok(band_diagram(&cfg.cell, &cfg.region, bands, &cfg.spectra())?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BandSample {
    pub k: f64,
    pub omega: Cplx,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandOut {
    pub band: usize,
    pub closed: bool,
    pub closure_gap: f64,
    pub max_abs_imag: f64,
    /// max_k |ω(k) − ω(−k)|.
    pub reciprocity_defect: Option<f64>,
    pub kinks: Vec<f64>,
    pub samples: Vec<BandSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandsDoc {
    pub schema_version: u32,
    pub cell: CellSource,
    pub hermitian: bool,
    pub region: Region,
    pub k_samples: usize,
    pub bands: Vec<BandOut>,
    pub warnings: Vec<String>,
}

fn band_out(c: &DispersionCurve) -> BandOut {
    BandOut {
        band: c.band_index,
        closed: c.closed,
        closure_gap: c.closure_gap(),
        max_abs_imag: c.max_abs_imag(),
        reciprocity_defect: c.reciprocity_defect(),
        kinks: c.kinks.clone(),
        samples: c.samples.iter().map(|&(k, w)| BandSample { k, omega: w.into() }).collect(),
    }
}

pub fn cmd_band(cfg: &RunConfig) -> Result<BandsDoc, CliError> {
    let mut clock = Clock::new();
    let d = clock.lap("trace", || diagram(cfg, cfg.bands))?;
    let doc = BandsDoc {
        schema_version: SCHEMA_VERSION,
        cell: cfg.source.clone(),
        hermitian: cfg.is_hermitian(),
        region: region(cfg),
        k_samples: cfg.k_samples,
        bands: d.curves.iter().map(band_out).collect(),
        warnings: d.warnings.clone(),
    };
    let rows: Vec<(usize, Vec<(f64, C64)>)> = d.curves.iter().map(|c| (c.band_index, c.samples.clone())).collect();
    write_atomic(&cfg.out.join("bands.csv"), bands_csv(&rows).as_bytes())?;
    write_json(&cfg.out.join("bands.json"), &doc)?;
    write_meta(cfg, "band", "bands.meta.json", clock)?;
    Ok(doc)
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexDoc {
    pub schema_version: u32,
    pub omega: Cplx,
    pub value: f64,
    /// 2·Ind(ω), an integer.
    pub twice_index: i32,
    pub n_inside: usize,
    pub n_outside: usize,
    /// min_j ||λ_j| − 1|.
    pub min_gap: f64,
    pub multipliers: Vec<Cplx>,
}

pub fn cmd_index(cfg: &RunConfig, omega: C64) -> Result<IndexDoc, CliError> {
    let clock = Clock::new();
    let t = cfg.topology();
    let lam = lambdas_with(&cfg.cell, omega, &t.spectra)?;
    let ix = index_from_multipliers(omega, &lam, t.tol_circle)?;
    let doc = IndexDoc {
        schema_version: SCHEMA_VERSION,
        omega: omega.into(),
        value: ix.value(),
        twice_index: ix.twice_value,
        n_inside: ix.n_inside,
        n_outside: ix.n_outside,
        min_gap: ix.min_gap(),
        multipliers: cplx_vec(&lam),
    };
    write_json(&cfg.out.join("index.json"), &doc)?;
    write_meta(cfg, "index", "index.meta.json", clock)?;
    Ok(doc)
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingDoc {
    pub schema_version: u32,
    pub band: usize,
    pub base: Cplx,
    /// The base point was chosen inside the loop automatically.
    pub base_auto: bool,
    pub winding: i64,
    pub min_distance: f64,
    pub samples_used: usize,
}

pub fn cmd_winding(cfg: &RunConfig, band: usize, base: Option<C64>) -> Result<WindingDoc, CliError> {
    if band == 0 {
        return Err(CliError::Config("bands are numbered from 1".into()));
    }
    let mut clock = Clock::new();
    let d = clock.lap("trace", || diagram(cfg, band.max(cfg.bands)))?;
    let curve = d
        .curves
        .get(band - 1)
        .ok_or_else(|| CliError::Numerical(format!("only {} bands found in the search region", d.curves.len())))?;
    let t = cfg.topology();
    let b = match base {
        Some(b) => b,
        None => interior_point(curve, t.tol_curve).ok_or_else(|| CliError::Numerical(format!("band {band} encloses no region")))?,
    };
    let disp = Dispersion::new(&cfg.cell, &t.spectra)?;
    let w = clock.lap("winding", || winding_number(curve, b, Some(&disp), &t))?;
    let doc = WindingDoc {
        schema_version: SCHEMA_VERSION,
        band,
        base: b.into(),
        base_auto: base.is_none(),
        winding: w.winding,
        min_distance: w.min_distance,
        samples_used: w.samples_used,
    };
    write_json(&cfg.out.join("winding.json"), &doc)?;
    write_meta(cfg, "winding", "winding.meta.json", clock)?;
    Ok(doc)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeOut {
    pub side: String,
    pub multipliers: Vec<Cplx>,
    pub alphas: Vec<Cplx>,
    pub decay_rate: f64,
    pub log_decay: f64,
    pub fit_start: u64,
    pub fitted_log_decay: Option<f64>,
    pub boundary_residual: f64,
    pub ode_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeDoc {
    pub schema_version: u32,
    pub omega: Cplx,
    pub bc: String,
    pub twice_index: i32,
    pub rank: usize,
    pub degenerate: bool,
    pub eigen_residual: f64,
    pub modes: Vec<ModeOut>,
    /// `mode.csv` holds the first mode on |z| ≤ z_max.
    pub z_max: f64,
    pub samples_per_cell: usize,
}

pub fn parse_bc(s: &str) -> Result<BoundaryCondition, CliError> {
    match s {
        "outgoing" | "outgoing-vacuum" | "outgoing_vacuum" => Ok(BoundaryCondition::OutgoingVacuum),
        "pec" => Ok(BoundaryCondition::Pec),
        "pmc" => Ok(BoundaryCondition::Pmc),
        other => Err(CliError::Config(format!("unknown boundary condition '{other}' (expected outgoing, pec or pmc)"))),
    }
}

pub fn cmd_edge(cfg: &RunConfig, omega: C64, bc: BoundaryCondition, z_max: f64, samples_per_cell: usize) -> Result<EdgeDoc, CliError> {
    if !(z_max >= 0.0 && z_max.is_finite()) || samples_per_cell == 0 {
        return Err(CliError::Config("z-max must be nonnegative and samples-per-cell positive".into()));
    }
    let mut clock = Clock::new();
    let opts = cfg.edge();
    let set = clock.lap("modes", || find_edge_modes(&cfg.cell, omega, bc, &opts)).map_err(|e| CliError::Numerical(e.to_string()))?;
    let modes = set
        .modes
        .iter()
        .map(|m| {
            let n0 = m.asymptotic_start(opts.fit_purity).max(opts.fit_start);
            ModeOut {
                side: m.side.tag().into(),
                multipliers: cplx_vec(&m.lambdas),
                alphas: cplx_vec(&m.alphas),
                decay_rate: m.decay_rate,
                log_decay: m.log_decay(),
                fit_start: n0,
                fitted_log_decay: finite(fitted_log_decay(m, n0, opts.fit_len)),
                boundary_residual: m.boundary_residual,
                ode_residual: finite(ode_residual(&cfg.cell, m, opts.ode_cells, opts.fd_step)),
            }
        })
        .collect();
    let profile = clock.lap("profile", || mode_profile(&cfg.cell, &set.modes[0], z_max, samples_per_cell));
    let doc = EdgeDoc {
        schema_version: SCHEMA_VERSION,
        omega: omega.into(),
        bc: bc.tag().into(),
        twice_index: set.twice_index,
        rank: set.rank,
        degenerate: set.degenerate,
        eigen_residual: set.eigen_residual,
        modes,
        z_max,
        samples_per_cell,
    };
    write_atomic(&cfg.out.join("mode.csv"), mode_csv(&profile).as_bytes())?;
    write_json(&cfg.out.join("edge.json"), &doc)?;
    write_meta(cfg, "edge", "edge.meta.json", clock)?;
    Ok(doc)
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyStepOut {
    pub t: f64,
    pub witness: Cplx,
    pub twice_index: Option<i32>,
    pub clearance: f64,
    pub relocated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyDoc {
    pub schema_version: u32,
    pub pass: bool,
    pub t_steps: usize,
    pub blocked_at: Option<f64>,
    pub index_constant_zero: bool,
    pub steps: Vec<HomotopyStepOut>,
}

/// Tracks a real-gap witness of the Hermitian part along the straight line
/// to the configured cell.
pub fn cmd_homotopy(cfg: &RunConfig) -> Result<HomotopyDoc, CliError> {
    let mut clock = Clock::new();
    let family = HomotopyFamily::new(cfg.hermitian_cell.clone(), cfg.cell.clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let r = clock.lap("track", || homotopy_track(&family, None, cfg.t_steps, &cfg.topology()))?;
    let doc = HomotopyDoc {
        schema_version: SCHEMA_VERSION,
        pass: r.blocked_at.is_none() && r.index_constant_zero,
        t_steps: cfg.t_steps,
        blocked_at: r.blocked_at,
        index_constant_zero: r.index_constant_zero,
        steps: r
            .steps
            .iter()
            .map(|s| HomotopyStepOut {
                t: s.t,
                witness: s.witness.into(),
                twice_index: s.index.map(|i| i.twice_value),
                clearance: s.clearance,
                relocated: s.relocated,
            })
            .collect(),
    };
    write_json(&cfg.out.join("homotopy.json"), &doc)?;
    write_meta(cfg, "homotopy", "homotopy.meta.json", clock)?;
    Ok(doc)
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpSample {
    pub inner: Cplx,
    pub outer: Cplx,
    pub twice_index_inner: Option<i32>,
    pub twice_index_outer: Option<i32>,
    pub winding: Option<i64>,
    /// Set when the sample was rejected (e.g. a point on the spectrum).
    pub rejected: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpBand {
    pub band: usize,
    pub requested: usize,
    pub checked: usize,
    pub failures: usize,
    /// Samples dropped because a multiplier sat on the unit circle.
    pub on_spectrum: usize,
    pub excluded_by_other: usize,
    pub samples: Vec<JumpSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeSampleOut {
    pub omega: Cplx,
    pub winding: i64,
    pub expected_side: Option<String>,
    pub side: Option<String>,
    pub twice_index: Option<i32>,
    pub rank: Option<usize>,
    pub count: Option<usize>,
    pub boundary_residual: Option<f64>,
    pub decay_rate: Option<f64>,
    pub fit_start: u64,
    pub fitted_log_decay: Option<f64>,
    pub decay_error: Option<f64>,
    pub ode_residual: Option<f64>,
    pub eigen_residual: Option<f64>,
    pub failure: Option<String>,
    pub pass: bool,
}

impl From<&EdgeSample> for EdgeSampleOut {
    fn from(s: &EdgeSample) -> Self {
        EdgeSampleOut {
            omega: s.omega.into(),
            winding: s.winding,
            expected_side: s.expected_side.map(|x| x.tag().into()),
            side: s.side.map(|x| x.tag().into()),
            twice_index: s.twice_index,
            rank: s.rank,
            count: s.count,
            boundary_residual: finite(s.boundary_residual),
            decay_rate: finite(s.decay_rate),
            fit_start: s.fit_start,
            fitted_log_decay: finite(s.fitted_log_decay),
            decay_error: finite(s.decay_error),
            ode_residual: finite(s.ode_residual),
            eigen_residual: finite(s.eigen_residual),
            failure: s.failure.clone(),
            pass: s.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeBand {
    pub band: usize,
    pub bc: String,
    pub requested: usize,
    pub checked: usize,
    pub failures: usize,
    /// Samples with rank(B) = 2 but a mode count other than one.
    pub count_failures: usize,
    pub excluded_by_other: usize,
    pub max_boundary_residual: Option<f64>,
    pub max_decay_error: Option<f64>,
    pub max_ode_residual: Option<f64>,
    pub pass: bool,
    pub samples: Vec<EdgeSampleOut>,
}

fn worst(samples: &[EdgeSample], f: impl Fn(&EdgeSample) -> f64) -> Option<f64> {
    samples.iter().map(f).filter(|x| x.is_finite()).reduce(f64::max)
}

impl From<&EdgeReport> for EdgeBand {
    fn from(r: &EdgeReport) -> Self {
        EdgeBand {
            band: r.band_index,
            bc: r.bc.tag().into(),
            requested: r.requested,
            checked: r.samples.len(),
            failures: r.failures(),
            count_failures: r.count_failures(),
            excluded_by_other: r.excluded_by_other,
            max_boundary_residual: worst(&r.samples, |s| s.boundary_residual),
            max_decay_error: worst(&r.samples, |s| s.decay_error),
            max_ode_residual: worst(&r.samples, |s| s.ode_residual),
            pass: r.pass() && r.count_failures() == 0,
            samples: r.samples.iter().map(EdgeSampleOut::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointIndex {
    pub omega: Cplx,
    pub twice_index: Option<i32>,
    pub failure: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapOut {
    pub lower: f64,
    pub upper: f64,
    pub witness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PartnerCheck {
    pub pass: bool,
    pub gap: Option<GapOut>,
    pub off_axis: Vec<PointIndex>,
    pub gap_points: Vec<PointIndex>,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Section<T> {
    pub pass: bool,
    /// Reason the section does not apply to this cell; `pass` is then true.
    pub skipped: Option<String>,
    pub results: Vec<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub pass: bool,
    pub cell: CellSource,
    pub seed: u64,
    pub samples: usize,
    pub k_samples: usize,
    pub region: Region,
    pub tolerances: EffectiveTolerances,
    /// Ind(inner) − Ind(outer) = W(γ; inner) on bands 1–3.
    pub index_jump: Section<JumpBand>,
    /// Decaying edge modes inside band 1 under each boundary condition.
    pub edge_modes: Section<EdgeBand>,
    /// Ind = 0 off the real spectrum of the Hermitian part.
    pub hermitian_partner: PartnerCheck,
    pub warnings: Vec<String>,
}

/// Bands whose loops carry the index-jump check.
const JUMP_BANDS: usize = 3;
/// Random off-axis points for the Hermitian-partner check.
const OFF_AXIS_POINTS: usize = 50;
/// Evenly spaced points inside the first real gap.
const GAP_POINTS: usize = 10;
/// Off-axis samples stay at least this far from the real axis.
const OFF_AXIS_MIN_IM: f64 = 0.05;
const OFF_AXIS_MAX_IM: f64 = 0.5;

fn jump_band(cfg: &RunConfig, curve: &DispersionCurve, all: &[DispersionCurve]) -> JumpBand {
    let t = cfg.topology();
    let margin = cfg.edge().margin;
    let top = all.iter().flat_map(|c| c.samples.iter().map(|s| s.1.im)).fold(f64::NEG_INFINITY, f64::max);
    let drawn = sample_interior_tagged(curve, all, cfg.samples, margin, cfg.seed, curve.band_index as u64);
    let samples: Vec<JumpSample> = drawn
        .points
        .par_iter()
        .map(|&p| {
            let outer = C64::new(p.re, top + 0.5);
            match verify_index_jump(&cfg.cell, curve, p, outer, &t) {
                Ok(r) => JumpSample {
                    inner: p.into(),
                    outer: outer.into(),
                    twice_index_inner: Some(r.index_inner.twice_value),
                    twice_index_outer: Some(r.index_outer.twice_value),
                    winding: Some(r.winding),
                    rejected: None,
                    pass: r.pass,
                },
                Err(e) => JumpSample {
                    inner: p.into(),
                    outer: outer.into(),
                    twice_index_inner: None,
                    twice_index_outer: None,
                    winding: None,
                    pass: false,
                    rejected: Some(e.to_string()),
                },
            }
        })
        .collect();
    let on_spectrum = samples.iter().filter(|s| s.rejected.as_deref().is_some_and(|r| r.contains("spectrum"))).count();
    let checked = samples.len() - on_spectrum;
    let failures = samples.iter().filter(|s| !s.pass).count() - on_spectrum;
    JumpBand {
        band: curve.band_index,
        requested: cfg.samples,
        checked,
        failures,
        on_spectrum,
        excluded_by_other: drawn.excluded_by_other,
        samples,
    }
}

fn point_index(cfg: &RunConfig, omega: C64) -> PointIndex {
    match spectral_index(&cfg.hermitian_cell, omega, &cfg.topology()) {
        Ok(ix) => PointIndex { omega: omega.into(), twice_index: Some(ix.twice_value), failure: None, pass: ix.twice_value == 0 },
        Err(e) => PointIndex { omega: omega.into(), twice_index: None, failure: Some(e.to_string()), pass: false },
    }
}

fn partner_check(cfg: &RunConfig) -> Result<PartnerCheck, CliError> {
    let r = cfg.region;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0xC0);
    let off: Vec<C64> = (0..OFF_AXIS_POINTS)
        .map(|_| {
            let re = r.re0 + (r.re1 - r.re0) * rng.gen::<f64>();
            let mag = OFF_AXIS_MIN_IM + (OFF_AXIS_MAX_IM - OFF_AXIS_MIN_IM) * rng.gen::<f64>();
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            C64::new(re, sign * mag)
        })
        .collect();
    let off_axis: Vec<PointIndex> = off.par_iter().map(|&w| point_index(cfg, w)).collect();
    let gap = find_gap(&cfg.hermitian_cell, r.re0.max(1e-3), r.re1, 3000, &cfg.spectra())?;
    let gap_points: Vec<PointIndex> = match gap {
        Some(g) if g.upper > g.lower => (0..GAP_POINTS)
            .into_par_iter()
            .map(|i| point_index(cfg, C64::new(g.lower + (g.upper - g.lower) * (i as f64 + 0.5) / GAP_POINTS as f64, 0.0)))
            .collect(),
        _ => Vec::new(),
    };
    let failures = off_axis.iter().chain(&gap_points).filter(|p| !p.pass).count();
    Ok(PartnerCheck {
        pass: failures == 0,
        gap: gap.map(|g| GapOut { lower: g.lower, upper: g.upper, witness: g.witness }),
        off_axis,
        gap_points,
        failures,
    })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut clock = Clock::new();
    let mut warnings = Vec::new();
    let (index_jump, edge_modes) = if cfg.is_hermitian() {
        let why = Some("cell is Hermitian: the spectrum is real and encloses no loop".to_string());
        (Section { pass: true, skipped: why.clone(), results: Vec::new() }, Section { pass: true, skipped: why, results: Vec::new() })
    } else {
        let d = clock.lap("trace", || diagram(cfg, cfg.bands.max(JUMP_BANDS)))?;
        warnings.extend(d.warnings.iter().cloned());
        if d.curves.len() < JUMP_BANDS {
            return Err(CliError::Numerical(format!("only {} bands found; the index check needs {JUMP_BANDS}", d.curves.len())));
        }
        let jumps: Vec<JumpBand> = clock.lap("index_jump", || d.curves[..JUMP_BANDS].iter().map(|c| jump_band(cfg, c, &d.curves)).collect());
        let jump_pass = jumps.iter().all(|b| b.failures == 0 && b.checked > 0 && b.checked + b.on_spectrum >= b.requested);
        let opts = cfg.edge();
        let edges: Vec<EdgeBand> = clock.lap("edge_modes", || {
            [BoundaryCondition::OutgoingVacuum, BoundaryCondition::Pec, BoundaryCondition::Pmc]
                .iter()
                .map(|&bc| EdgeBand::from(&verify_edge_theorem(&cfg.cell, &d.curves[0], &d.curves, cfg.samples, bc, &opts)))
                .collect()
        });
        let edge_pass = edges.iter().all(|b| b.pass);
        (Section { pass: jump_pass, skipped: None, results: jumps }, Section { pass: edge_pass, skipped: None, results: edges })
    };
    let hermitian_partner = clock.lap("hermitian_partner", || partner_check(cfg))?;
    if hermitian_partner.gap.is_none() {
        warnings.push("Hermitian part has no real gap in the region; only off-axis points were checked".into());
    }
    let report = Report {
        schema_version: SCHEMA_VERSION,
        pass: index_jump.pass && edge_modes.pass && hermitian_partner.pass,
        cell: cfg.source.clone(),
        seed: cfg.seed,
        samples: cfg.samples,
        k_samples: cfg.k_samples,
        region: region(cfg),
        tolerances: effective_tolerances(cfg),
        index_jump,
        edge_modes,
        hermitian_partner,
        warnings,
    };
    write_json(&cfg.out.join("report.json"), &report)?;
    write_meta(cfg, "verify", "report.meta.json", clock)?;
    Ok(report)
}
