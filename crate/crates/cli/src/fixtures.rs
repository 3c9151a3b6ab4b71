//! Shipped uniform MPS fixtures and the recipe that produced them.

use std::path::Path;

use entanglelink_core::mps::{self, ItebdOptions, UniformMPS};
use entanglelink_core::spinmodels::{SpinChainSpec, SpinModel};
use entanglelink_core::Boundary;

use crate::error::{CliError, Result};
use crate::formats;

pub const AKLT: &str = "aklt";
/// Bond dimension of the reference ITF fixtures.
pub const ITF_BOND_DIM: usize = 4;
/// Bond dimensions shipped for each field; `D = 2` reproduces the published
/// MPS columns.
pub const ITF_BOND_DIMS: [usize; 2] = [4, 2];
/// Transverse fields of the shipped ITF fixtures.
pub const ITF_FIELDS: [f64; 2] = [1.4, 2.0];

pub fn itf_name(h: f64, bond_dim: usize) -> String {
    format!("itf_h{h:.1}_D{bond_dim}")
}

pub fn names() -> Vec<String> {
    let mut v = vec![AKLT.to_string()];
    for d in ITF_BOND_DIMS {
        v.extend(ITF_FIELDS.iter().map(|&h| itf_name(h, d)));
    }
    v
}

/// Recompute a fixture from scratch: the exact AKLT tensors, or iTEBD for
/// the ITF chain.
pub fn build(name: &str) -> Result<UniformMPS> {
    if name == AKLT {
        return Ok(mps::aklt_mps());
    }
    let (h, d) = ITF_BOND_DIMS
        .iter()
        .flat_map(|&d| ITF_FIELDS.iter().map(move |&h| (h, d)))
        .find(|&(h, d)| itf_name(h, d) == name)
        .ok_or_else(|| CliError::Validation(format!("unknown fixture {name}; known: {}", names().join(", "))))?;
    let spec = SpinChainSpec::new(SpinModel::Itf { h }, 2, Boundary::Periodic);
    Ok(mps::fit_uniform_mps(&spec, &ItebdOptions::new(d))?)
}

/// Write every fixture into `dir` and return the file paths.
pub fn write_all(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    names()
        .iter()
        .map(|name| {
            let path = dir.join(format!("{name}.mps"));
            formats::write_mps(&path, &build(name)?)?;
            Ok(path)
        })
        .collect()
}
