//! Serialized forms of results and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nhbloch_core::linalg::C64;
use nhbloch_core::transfer::StateVector;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Version of every JSON document written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// A complex number as an `{re, im}` object.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Cplx {
    fn from(z: C64) -> Self {
        Cplx { re: z.re, im: z.im }
    }
}

impl From<Cplx> for C64 {
    fn from(z: Cplx) -> Self {
        C64::new(z.re, z.im)
    }
}

pub fn cplx_vec(v: &[C64]) -> Vec<Cplx> {
    v.iter().map(|&z| z.into()).collect()
}

/// Non-finite diagnostics become `null` instead of an invalid number.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `band,k,omega_re,omega_im`, one row per sample.
pub fn bands_csv(curves: &[(usize, Vec<(f64, C64)>)]) -> String {
    let mut s = String::from("band,k,omega_re,omega_im\n");
    for (band, samples) in curves {
        for (k, w) in samples {
            s.push_str(&format!("{band},{k:?},{:?},{:?}\n", w.re, w.im));
        }
    }
    s
}

/// `z,ex_re,ex_im,ey_re,ey_im,hx_re,hx_im,hy_re,hy_im`.
pub fn mode_csv(profile: &[(f64, StateVector)]) -> String {
    let mut s = String::from("z,ex_re,ex_im,ey_re,ey_im,hx_re,hx_im,hy_re,hy_im\n");
    for (z, p) in profile {
        let v = p.to_array();
        // Adding 0.0 turns the left-side origin −0.0 into 0.0.
        s.push_str(&format!("{:?}", z + 0.0));
        for c in v {
            s.push_str(&format!(",{:?},{:?}", c.re, c.im));
        }
        s.push('\n');
    }
    s
}
