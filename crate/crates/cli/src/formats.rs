//! On-disk formats. All binary payloads are little-endian `f64`.
//!
//! * State file: 4-byte magic `ELST`, then `u32` site count `N` and `u32`
//!   local dimension `d`, then `d^N` complex amplitudes as `(re, im)` pairs
//!   in amplitude-index order (site 1 is the least significant digit).
//!   A JSON sidecar `<file>.json` carries `{N, d, norm, description}`.
//! * MPS file: one line of JSON `{format, version, d, D, canonical_form}`
//!   terminated by `\n`, then `d * D * D` complex entries as `(re, im)`
//!   pairs ordered by physical index, then left bond, then right bond.
//! * Link matrix: JSON `{format, n_sites, nonneg, units, values}` with the
//!   dense symmetric `N x N` matrix in nats.

use std::fs;
use std::path::{Path, PathBuf};

use entanglelink_core::mps::{CanonicalForm, UniformMPS};
use entanglelink_core::{LinkMatrix, PureState};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const STATE_MAGIC: &[u8; 4] = b"ELST";
const MPS_FORMAT: &str = "entanglelink-mps";
const LINKS_FORMAT: &str = "entanglelink-links";

/// Environment variable overriding the fixture directory.
pub const FIXTURE_DIR_VAR: &str = "ENTANGLELINK_FIXTURES";

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn bad(path: &Path, reason: impl Into<String>) -> CliError {
    CliError::Format { path: path.to_path_buf(), reason: reason.into() }
}

fn push_complex(out: &mut Vec<u8>, z: Complex64) {
    out.extend_from_slice(&z.re.to_le_bytes());
    out.extend_from_slice(&z.im.to_le_bytes());
}

fn complex_at(bytes: &[u8], k: usize) -> Complex64 {
    let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    Complex64::new(f(16 * k), f(16 * k + 8))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StateSidecar {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub d: usize,
    pub norm: f64,
    #[serde(default)]
    pub description: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_state(path: &Path, psi: &PureState, description: &str) -> Result<()> {
    let mut out = Vec::with_capacity(12 + 16 * psi.dim());
    out.extend_from_slice(STATE_MAGIC);
    out.extend_from_slice(&(psi.n_sites() as u32).to_le_bytes());
    out.extend_from_slice(&(psi.local_dim() as u32).to_le_bytes());
    for &z in psi.amplitudes() {
        push_complex(&mut out, z);
    }
    write(path, &out)?;
    let norm = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let meta = StateSidecar { n_sites: psi.n_sites(), d: psi.local_dim(), norm, description: description.into() };
    write(&sidecar_path(path), serde_json::to_string_pretty(&meta).unwrap().as_bytes())
}

/// Read a state file; the sidecar is checked when present.
pub fn read_state(path: &Path) -> Result<PureState> {
    let bytes = read(path)?;
    if bytes.len() < 12 || &bytes[..4] != STATE_MAGIC {
        return Err(bad(path, "missing state header"));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (n, d) = (word(4), word(8));
    let dim = (d as u128).checked_pow(n as u32).filter(|&x| x <= entanglelink_core::statecore::MAX_DENSE_DIM as u128);
    let dim = dim.ok_or_else(|| bad(path, format!("unsupported size N={n}, d={d}")))? as usize;
    let body = &bytes[12..];
    if body.len() != 16 * dim {
        return Err(bad(path, format!("expected {} amplitude bytes, found {}", 16 * dim, body.len())));
    }
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let meta: StateSidecar =
            serde_json::from_slice(&read(&sidecar)?).map_err(|e| CliError::Json { path: sidecar.clone(), source: e })?;
        if meta.n_sites != n || meta.d != d {
            return Err(bad(&sidecar, format!("sidecar says N={}, d={}; header says N={n}, d={d}", meta.n_sites, meta.d)));
        }
    }
    let amps = (0..dim).map(|k| complex_at(body, k)).collect();
    Ok(PureState::new(amps, d, n)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MpsHeader {
    format: String,
    version: u32,
    d: usize,
    #[serde(rename = "D")]
    bond_dim: usize,
    canonical_form: String,
}

fn form_name(f: CanonicalForm) -> &'static str {
    match f {
        CanonicalForm::Left => "left",
        CanonicalForm::Right => "right",
        CanonicalForm::None => "none",
    }
}

pub fn encode_mps(m: &UniformMPS) -> Vec<u8> {
    let header = MpsHeader {
        format: MPS_FORMAT.into(),
        version: 1,
        d: m.physical_dim(),
        bond_dim: m.bond_dim(),
        canonical_form: form_name(m.canonical_form()).into(),
    };
    let mut out = serde_json::to_vec(&header).unwrap();
    out.push(b'\n');
    for a in m.tensors() {
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                push_complex(&mut out, a[(r, c)]);
            }
        }
    }
    out
}

pub fn write_mps(path: &Path, m: &UniformMPS) -> Result<()> {
    write(path, &encode_mps(m))
}

pub fn read_mps(path: &Path) -> Result<UniformMPS> {
    let bytes = read(path)?;
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad(path, "missing header line"))?;
    let header: MpsHeader =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| CliError::Json { path: path.to_path_buf(), source: e })?;
    if header.format != MPS_FORMAT || header.version != 1 {
        return Err(bad(path, format!("unsupported format {} v{}", header.format, header.version)));
    }
    let form = match header.canonical_form.as_str() {
        "left" => CanonicalForm::Left,
        "right" => CanonicalForm::Right,
        "none" => CanonicalForm::None,
        other => return Err(bad(path, format!("unknown canonical form {other}"))),
    };
    let (d, b) = (header.d, header.bond_dim);
    let body = &bytes[nl + 1..];
    if d == 0 || b == 0 || body.len() != 16 * d * b * b {
        return Err(bad(path, format!("expected {} tensor bytes for d={d}, D={b}, found {}", 16 * d * b * b, body.len())));
    }
    let tensors = (0..d).map(|s| DMatrix::from_fn(b, b, |r, c| complex_at(body, (s * b + r) * b + c))).collect();
    Ok(UniformMPS::new(tensors, form)?)
}

pub fn fixture_dir() -> PathBuf {
    std::env::var_os(FIXTURE_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

/// Load an MPS from a file path, or from the fixture directory by name
/// (with or without the `.mps` extension).
pub fn load_mps(source: &str) -> Result<UniformMPS> {
    let direct = Path::new(source);
    if direct.is_file() {
        return read_mps(direct);
    }
    let file = if source.ends_with(".mps") { source.to_string() } else { format!("{source}.mps") };
    let path = fixture_dir().join(&file);
    if !path.is_file() {
        return Err(CliError::MissingFixture { name: source.into(), path });
    }
    read_mps(&path)
}

#[derive(Debug, Serialize, Deserialize)]
struct LinksFile {
    format: String,
    n_sites: usize,
    nonneg: bool,
    units: String,
    values: Vec<Vec<f64>>,
}

pub fn encode_links(j: &LinkMatrix) -> String {
    let n = j.n_sites();
    let values = (1..=n).map(|a| (1..=n).map(|b| if a == b { 0.0 } else { j.get(a, b) }).collect()).collect();
    let file = LinksFile { format: LINKS_FORMAT.into(), n_sites: n, nonneg: j.is_nonneg(), units: "nats".into(), values };
    serde_json::to_string_pretty(&file).unwrap()
}

pub fn write_links(path: &Path, j: &LinkMatrix) -> Result<()> {
    write(path, encode_links(j).as_bytes())
}

pub fn read_links(path: &Path) -> Result<LinkMatrix> {
    let f: LinksFile =
        serde_json::from_slice(&read(path)?).map_err(|e| CliError::Json { path: path.to_path_buf(), source: e })?;
    let n = f.n_sites;
    if f.format != LINKS_FORMAT || f.units != "nats" || f.values.len() != n || f.values.iter().any(|r| r.len() != n) {
        return Err(bad(path, "not an n_sites x n_sites link matrix in nats"));
    }
    let mut upper = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if (f.values[a][b] - f.values[b][a]).abs() > 1e-12 {
                return Err(bad(path, format!("asymmetric entry ({}, {})", a + 1, b + 1)));
            }
            upper.push(f.values[a][b]);
        }
    }
    Ok(LinkMatrix::new(n, upper, f.nonneg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use entanglelink_core::mps;
    use entanglelink_core::statecore;

    #[test]
    fn state_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("psi.bin");
        let psi = statecore::haar_random_state(5, 3).unwrap();
        write_state(&p, &psi, "haar").unwrap();
        assert_eq!(read_state(&p).unwrap(), psi);
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read_state(&p), Err(CliError::Format { .. })));
    }

    #[test]
    fn sidecar_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("psi.bin");
        write_state(&p, &statecore::dimer_state(4).unwrap(), "").unwrap();
        let meta = StateSidecar { n_sites: 5, d: 2, norm: 1.0, description: String::new() };
        fs::write(sidecar_path(&p), serde_json::to_string(&meta).unwrap()).unwrap();
        assert!(read_state(&p).is_err());
    }

    #[test]
    fn mps_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mps");
        let m = mps::random_mps(3, 4, 9).unwrap();
        write_mps(&p, &m).unwrap();
        let back = read_mps(&p).unwrap();
        assert_eq!(back.tensors(), m.tensors());
        assert_eq!(back.canonical_form(), m.canonical_form());
    }

    #[test]
    fn missing_fixture_names_the_file() {
        let err = load_mps("no_such_fixture").unwrap_err();
        assert!(err.to_string().contains("no_such_fixture.mps"), "{err}");
    }

    #[test]
    fn links_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("j.json");
        let j = LinkMatrix::from_fn(5, |a, b| (a * b) as f64 * 0.01).unwrap();
        write_links(&p, &j).unwrap();
        let back = read_links(&p).unwrap();
        assert_eq!(back.values(), j.values());
    }
}
