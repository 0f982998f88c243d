//! Run configuration: a JSON file and/or command-line overrides, resolved
//! into a unit cell, a search region and the option structs of each module.

use std::path::{Path, PathBuf};

use nhbloch_core::edge::EdgeOptions;
use nhbloch_core::linalg::C64;
use nhbloch_core::media::{a_layer, afa_cell, f_layer, vacuum_cell, Layer, MaterialTensor, UnitCell, DEFAULT_L};
use nhbloch_core::spectra::{Rect, SpectraOptions};
use nhbloch_core::topology::TopologyOptions;
use nhbloch_core::transfer::Composition;
use serde::{Deserialize, Serialize};

use crate::output::Cplx;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Vacuum,
    Example3Hermitian,
    Example3Nonhermitian,
    AfaCustom,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Preset, CliError> {
        match s {
            "vacuum" => Ok(Preset::Vacuum),
            "example3-hermitian" => Ok(Preset::Example3Hermitian),
            "example3-nonhermitian" => Ok(Preset::Example3Nonhermitian),
            "afa-custom" => Ok(Preset::AfaCustom),
            other => Err(CliError::Config(format!(
                "unknown preset '{other}' (expected vacuum, example3-hermitian, example3-nonhermitian or afa-custom)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Vacuum => "vacuum",
            Preset::Example3Hermitian => "example3-hermitian",
            Preset::Example3Nonhermitian => "example3-nonhermitian",
            Preset::AfaCustom => "afa-custom",
        }
    }
}

/// Parameters of the three-layer A–F–A sandwich.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AfaParams {
    pub eps0: Cplx,
    pub delta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Thickness of each A layer; the F layer fills the remaining 1 − 2L.
    pub l: f64,
}

impl Default for AfaParams {
    fn default() -> Self {
        AfaParams { eps0: Cplx { re: 13.0, im: 5.0 }, delta: 6.0, phi1: 0.0, phi2: 0.8, alpha: 0.5, beta: 0.5, l: DEFAULT_L }
    }
}

impl AfaParams {
    fn hermitian() -> Self {
        AfaParams { eps0: Cplx { re: 13.0, im: 0.0 }, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub xx: Cplx,
    #[serde(default)]
    pub xy: Cplx,
    #[serde(default)]
    pub yx: Cplx,
    pub yy: Cplx,
    pub zz: Cplx,
}

impl TensorSpec {
    fn tensor(&self) -> MaterialTensor {
        MaterialTensor::new(self.xx.into(), self.xy.into(), self.yx.into(), self.yy.into(), self.zz.into())
    }
}

/// One layer of an explicit stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    A { thickness: f64, eps0: Cplx, delta: f64, phi: f64 },
    F { thickness: f64, eps0t: Cplx, alpha: f64, beta: f64 },
    Isotropic { thickness: f64, eps: Cplx },
    Generic { thickness: f64, eps: TensorSpec, mu: TensorSpec },
}

impl LayerSpec {
    fn layer(&self, hermitian_part: bool) -> Result<Layer, CliError> {
        let h = |z: Cplx| -> C64 {
            if hermitian_part {
                C64::new(z.re, 0.0)
            } else {
                z.into()
            }
        };
        let herm = |t: MaterialTensor| -> MaterialTensor {
            if hermitian_part {
                let c = t.conj_transpose();
                MaterialTensor::new((t.xx + c.xx) / 2.0, (t.xy + c.xy) / 2.0, (t.yx + c.yx) / 2.0, (t.yy + c.yy) / 2.0, (t.zz + c.zz) / 2.0)
            } else {
                t
            }
        };
        let r = match self {
            LayerSpec::A { thickness, eps0, delta, phi } => a_layer(h(*eps0), *delta, *phi, *thickness),
            LayerSpec::F { thickness, eps0t, alpha, beta } => f_layer(h(*eps0t), *alpha, *beta, *thickness),
            LayerSpec::Isotropic { thickness, eps } => Layer::isotropic(h(*eps), *thickness),
            LayerSpec::Generic { thickness, eps, mu } => Layer::generic(*thickness, herm(eps.tensor()), herm(mu.tensor())),
        };
        r.map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Tolerance overrides; unset entries keep the module defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub circle: Option<f64>,
    pub curve: Option<f64>,
    pub bc: Option<f64>,
    pub cluster: Option<f64>,
    pub rank: Option<f64>,
    pub decay: Option<f64>,
    pub ode: Option<f64>,
    pub close: Option<f64>,
    pub collision: Option<f64>,
    pub min_step: Option<f64>,
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, Option<f64>); 10] {
        [
            ("circle", self.circle),
            ("curve", self.curve),
            ("bc", self.bc),
            ("cluster", self.cluster),
            ("rank", self.rank),
            ("decay", self.decay),
            ("ode", self.ode),
            ("close", self.close),
            ("collision", self.collision),
            ("min_step", self.min_step),
        ]
    }

    fn merge(&mut self, other: &Tolerances) {
        let pick = |a: &mut Option<f64>, b: Option<f64>| {
            if b.is_some() {
                *a = b;
            }
        };
        pick(&mut self.circle, other.circle);
        pick(&mut self.curve, other.curve);
        pick(&mut self.bc, other.bc);
        pick(&mut self.cluster, other.cluster);
        pick(&mut self.rank, other.rank);
        pick(&mut self.decay, other.decay);
        pick(&mut self.ode, other.ode);
        pick(&mut self.close, other.close);
        pick(&mut self.collision, other.collision);
        pick(&mut self.min_step, other.min_step);
    }
}

/// Contents of a `--config` file. Every field is optional; command-line
/// flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub afa: Option<AfaParams>,
    pub layers: Option<Vec<LayerSpec>>,
    pub region: Option<[f64; 4]>,
    pub k_samples: Option<usize>,
    pub bands: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub t_steps: Option<usize>,
    /// Multiply layer matrices in listed order instead of propagation order.
    pub reversed_composition: Option<bool>,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Command-line overrides collected by the binary.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k_samples: Option<usize>,
    pub region: Option<String>,
    pub bands: Option<usize>,
    pub samples: Option<usize>,
    pub t_steps: Option<usize>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellSource {
    Preset { name: String, afa: Option<AfaParams> },
    Layers { layers: Vec<LayerSpec> },
}

/// Fully resolved run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: CellSource,
    pub cell: UnitCell,
    /// The cell with every material replaced by its Hermitian part.
    pub hermitian_cell: UnitCell,
    pub region: Rect,
    pub k_samples: usize,
    pub bands: usize,
    pub seed: u64,
    pub samples: usize,
    pub t_steps: usize,
    pub l: Option<f64>,
    pub tolerances: Tolerances,
    pub reversed_composition: bool,
    pub out: PathBuf,
}

pub fn parse_region(s: &str) -> Result<[f64; 4], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("region '{s}' must be four numbers re0,re1,im0,im1")))?;
    if v.len() != 4 {
        return Err(CliError::Config(format!("region '{s}' must be four numbers re0,re1,im0,im1")));
    }
    Ok([v[0], v[1], v[2], v[3]])
}

/// Parses `a`, `a+bi`, `a-bi`, `bi` with optional exponents and spaces.
pub fn parse_complex(s: &str) -> Result<C64, CliError> {
    let bad = || CliError::Config(format!("cannot parse complex number '{s}'"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not the leading one and not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        x => x,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

fn default_region(hermitian: bool) -> [f64; 4] {
    if hermitian {
        [0.0, 4.5, -0.5, 0.5]
    } else {
        [0.0, 4.5, -1.5, 0.5]
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<RunConfig, CliError> {
        let file = match &o.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let preset = match &o.preset {
            Some(p) => Some(Preset::parse(p)?),
            None => file.preset,
        };
        if preset.is_some() && file.layers.is_some() {
            return Err(CliError::Config("give either a preset or an explicit layer list, not both".into()));
        }
        let (source, cell, hermitian_cell, l) = match &file.layers {
            Some(layers) => {
                let build = |h: bool| -> Result<UnitCell, CliError> {
                    let ls = layers.iter().map(|s| s.layer(h)).collect::<Result<Vec<_>, _>>()?;
                    UnitCell::new(ls).map_err(|e| CliError::Config(e.to_string()))
                };
                (CellSource::Layers { layers: layers.clone() }, build(false)?, build(true)?, None)
            }
            None => {
                let p = preset.unwrap_or(Preset::Example3Nonhermitian);
                let l = file.afa.as_ref().map_or(DEFAULT_L, |a| a.l);
                let afa = match p {
                    Preset::Vacuum => None,
                    Preset::Example3Hermitian => Some(AfaParams { l, ..AfaParams::hermitian() }),
                    Preset::Example3Nonhermitian => Some(AfaParams { l, ..AfaParams::default() }),
                    Preset::AfaCustom => Some(file.afa.clone().unwrap_or_default()),
                };
                match &afa {
                    None => (CellSource::Preset { name: p.name().into(), afa: None }, vacuum_cell(), vacuum_cell(), None),
                    Some(a) => {
                        let build = |eps0: C64| {
                            afa_cell(eps0, a.delta, a.phi1, a.phi2, a.alpha, a.beta, a.l).map_err(|e| CliError::Config(e.to_string()))
                        };
                        let cell = build(a.eps0.into())?;
                        let herm = build(C64::new(a.eps0.re, 0.0))?;
                        (CellSource::Preset { name: p.name().into(), afa: afa.clone() }, cell, herm, Some(a.l))
                    }
                }
            }
        };
        let hermitian = nhbloch_core::media::is_hermitian(&cell, 1e-14);
        let region = match (&o.region, file.region) {
            (Some(s), _) => parse_region(s)?,
            (None, Some(r)) => r,
            (None, None) => default_region(hermitian),
        };
        let region = Rect::new(region[0], region[1], region[2], region[3]).map_err(|e| CliError::Config(e.to_string()))?;
        let mut tolerances = file.tolerances.clone();
        tolerances.merge(&o.tolerances);
        for (name, v) in tolerances.entries() {
            if let Some(v) = v {
                positive(&format!("tolerance '{name}'"), v)?;
            }
        }
        let k_samples = o.k_samples.or(file.k_samples).unwrap_or(512);
        if k_samples < 8 {
            return Err(CliError::Config(format!("k-samples must be at least 8, got {k_samples}")));
        }
        let bands = o.bands.or(file.bands).unwrap_or(5);
        if bands == 0 {
            return Err(CliError::Config("bands must be at least 1".into()));
        }
        let samples = o.samples.or(file.samples).unwrap_or(20);
        let t_steps = o.t_steps.or(file.t_steps).unwrap_or(64);
        if t_steps < 2 {
            return Err(CliError::Config("t-steps must be at least 2".into()));
        }
        Ok(RunConfig {
            source,
            cell,
            hermitian_cell,
            region,
            k_samples,
            bands,
            seed: o.seed.or(file.seed).unwrap_or(7),
            samples,
            t_steps,
            l,
            tolerances,
            reversed_composition: file.reversed_composition.unwrap_or(false),
            out: o.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    pub fn is_hermitian(&self) -> bool {
        nhbloch_core::media::is_hermitian(&self.cell, 1e-14)
    }

    pub fn spectra(&self) -> SpectraOptions {
        let d = SpectraOptions::default();
        let t = &self.tolerances;
        SpectraOptions {
            k_samples: self.k_samples,
            composition: if self.reversed_composition { Composition::Reversed } else { Composition::Propagation },
            close_tol: t.close.unwrap_or(d.close_tol),
            collision_tol: t.collision.unwrap_or(d.collision_tol),
            min_step: t.min_step.unwrap_or(d.min_step),
            ..d
        }
    }

    pub fn topology(&self) -> TopologyOptions {
        let d = TopologyOptions::default();
        let t = &self.tolerances;
        TopologyOptions {
            tol_circle: t.circle.unwrap_or(d.tol_circle),
            tol_curve: t.curve.unwrap_or(d.tol_curve),
            seed: self.seed,
            spectra: self.spectra(),
            ..d
        }
    }

    pub fn edge(&self) -> EdgeOptions {
        let d = EdgeOptions::default();
        let t = &self.tolerances;
        EdgeOptions {
            tol_circle: t.circle.unwrap_or(d.tol_circle),
            tol_cluster: t.cluster.unwrap_or(d.tol_cluster),
            tol_rank: t.rank.unwrap_or(d.tol_rank),
            tol_bc: t.bc.unwrap_or(d.tol_bc),
            tol_decay: t.decay.unwrap_or(d.tol_decay),
            tol_ode: t.ode.unwrap_or(d.tol_ode),
            seed: self.seed,
            ..d
        }
    }
}
