//! Configuration-driven jobs: build a state, compute its full entropy data,
//! fit links, and emit a report.

use std::path::{Path, PathBuf};

use entanglelink_core::freefermion::{self, FermionState, HoppingModel, HoppingPattern};
use entanglelink_core::linkfit::{self, FitWarning};
use entanglelink_core::mps::{self, UniformMPS};
use entanglelink_core::partitions;
use entanglelink_core::spinmodels::{self, DistanceRule, SolverOptions, SpinChainSpec, SpinModel};
use entanglelink_core::statecore::{self, PureState};
use entanglelink_core::{nats_to_bits, Boundary, EntropyData, LinkMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::formats;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest Hilbert-space dimension for which a job computes the exact data
/// of an MPS ring or a state file.
pub const MAX_JOB_DIM: usize = 1 << 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    Open,
    #[default]
    Periodic,
}

impl From<BoundarySpec> for Boundary {
    fn from(b: BoundarySpec) -> Self {
        match b {
            BoundarySpec::Open => Boundary::Open,
            BoundarySpec::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PatternSpec {
    #[default]
    Uniform,
    Dimerized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceSpec {
    #[default]
    Ring,
    Label,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    #[serde(rename = "freefermion")]
    FreeFermion {
        #[serde(alias = "N")]
        n_sites: usize,
        #[serde(default)]
        boundary: BoundarySpec,
        #[serde(default)]
        pattern: PatternSpec,
        #[serde(default = "one")]
        t: f64,
        #[serde(default)]
        delta: f64,
        #[serde(default)]
        filling: Option<usize>,
    },
    Haar {
        #[serde(alias = "N")]
        n_sites: usize,
        seed: u64,
    },
    Dimer {
        #[serde(alias = "N")]
        n_sites: usize,
    },
    Rainbow {
        #[serde(alias = "N")]
        n_sites: usize,
    },
    Itf {
        #[serde(alias = "N")]
        n_sites: usize,
        h: f64,
        #[serde(default)]
        boundary: BoundarySpec,
    },
    Xyz {
        #[serde(alias = "N")]
        n_sites: usize,
        tx: f64,
        ty: f64,
        tz: f64,
        alpha: f64,
        #[serde(default)]
        boundary: BoundarySpec,
        #[serde(default)]
        distance: DistanceSpec,
    },
    Bbh {
        #[serde(alias = "N")]
        n_sites: usize,
        theta: f64,
        #[serde(default)]
        boundary: BoundarySpec,
    },
}

/// Exactly one state source; enforced by the externally tagged encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSource {
    Model(ModelSpec),
    /// Path to a state file.
    File(PathBuf),
    /// Fixture name or MPS file, closed into a ring of `n_sites` sites.
    Mps { source: String, n_sites: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FitMethod {
    Optimal {
        #[serde(default = "yes")]
        nonneg: bool,
    },
    Sampled {
        n_samples: usize,
        seed: u64,
    },
    Structured {
        n_blocks: usize,
    },
    FfApprox,
    MpsMut,
    MpsCont,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub links: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn show(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats_to_bits(nats),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub state: StateSource,
    pub method: FitMethod,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub units: Units,
}

impl JobSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Json { path: path.to_path_buf(), source: e })
    }

    /// sha256 of the canonical JSON of everything that determines the
    /// numbers: state, method and units. Output paths are excluded.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::json!({ "state": self.state, "method": self.method, "units": self.units });
        format!("{:x}", Sha256::digest(canonical.to_string().as_bytes()))
    }

    fn n_sites(&self) -> Option<usize> {
        match &self.state {
            StateSource::Model(m) => Some(match *m {
                ModelSpec::FreeFermion { n_sites, .. }
                | ModelSpec::Haar { n_sites, .. }
                | ModelSpec::Dimer { n_sites }
                | ModelSpec::Rainbow { n_sites }
                | ModelSpec::Itf { n_sites, .. }
                | ModelSpec::Xyz { n_sites, .. }
                | ModelSpec::Bbh { n_sites, .. } => n_sites,
            }),
            StateSource::File(_) => None,
            StateSource::Mps { n_sites, .. } => Some(*n_sites),
        }
    }

    /// Checks that need no state construction.
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(CliError::Validation(m));
        let is_ff = matches!(self.state, StateSource::Model(ModelSpec::FreeFermion { .. }));
        let is_mps = matches!(self.state, StateSource::Mps { .. });
        match self.method {
            FitMethod::FfApprox if !is_ff => return invalid("ff_approx needs a freefermion model".into()),
            FitMethod::MpsMut | FitMethod::MpsCont if !is_mps => {
                return invalid("mps_mut and mps_cont need an mps state source".into())
            }
            FitMethod::Sampled { n_samples: 0, .. } => return invalid("n_samples must be positive".into()),
            _ => {}
        }
        if let Some(n) = self.n_sites() {
            if !(2..=partitions::MAX_SITES).contains(&n) {
                return invalid(format!("n_sites = {n} outside 2..={}", partitions::MAX_SITES));
            }
            if let FitMethod::Structured { n_blocks } = self.method {
                if n_blocks == 0 || n_blocks > n / 2 {
                    return invalid(format!("n_blocks = {n_blocks} outside 1..={}", n / 2));
                }
            }
        }
        Ok(())
    }

    fn seed(&self) -> Option<u64> {
        match (&self.state, &self.method) {
            (_, FitMethod::Sampled { seed, .. }) => Some(*seed),
            (StateSource::Model(ModelSpec::Haar { seed, .. }), _) => Some(*seed),
            _ => None,
        }
    }
}

/// A constructed state together with the data a report needs.
pub enum BuiltState {
    Dense { psi: PureState, boundary: Boundary },
    Fermion { state: FermionState, boundary: Boundary },
    Mps { mps: UniformMPS, ring: PureState },
}

impl BuiltState {
    pub fn n_sites(&self) -> usize {
        match self {
            BuiltState::Dense { psi, .. } => psi.n_sites(),
            BuiltState::Fermion { state, .. } => state.n_sites(),
            BuiltState::Mps { ring, .. } => ring.n_sites(),
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            BuiltState::Dense { boundary, .. } | BuiltState::Fermion { boundary, .. } => *boundary,
            BuiltState::Mps { .. } => Boundary::Periodic,
        }
    }

    pub fn entropy_data(&self) -> Result<EntropyData> {
        match self {
            BuiltState::Dense { psi, .. } | BuiltState::Mps { ring: psi, .. } => crate::par_entropy_data(psi),
            BuiltState::Fermion { state, .. } => crate::par_entropy_data(state),
        }
    }
}

fn check_dim(d: usize, n: usize) -> Result<()> {
    match (d as u128).checked_pow(n as u32) {
        Some(dim) if dim <= MAX_JOB_DIM as u128 => Ok(()),
        _ => Err(CliError::Validation(format!("d^N = {d}^{n} exceeds the job limit {MAX_JOB_DIM}"))),
    }
}

pub fn build_model(m: &ModelSpec) -> Result<BuiltState> {
    let spin = |model: SpinModel, n: usize, b: BoundarySpec| -> Result<BuiltState> {
        let spec = SpinChainSpec::new(model, n, b.into());
        let gs = spinmodels::solve(&spec, &SolverOptions::default())?;
        Ok(BuiltState::Dense { psi: gs.state, boundary: b.into() })
    };
    match *m {
        ModelSpec::FreeFermion { n_sites, boundary, pattern, t, delta, filling } => {
            let pattern = match pattern {
                PatternSpec::Uniform => HoppingPattern::Uniform { t },
                PatternSpec::Dimerized => HoppingPattern::Dimerized { delta },
            };
            let mut model = HoppingModel::new(n_sites, boundary.into(), pattern);
            model.filling = filling;
            Ok(BuiltState::Fermion { state: freefermion::ground_state_correlation(&model)?, boundary: boundary.into() })
        }
        ModelSpec::Haar { n_sites, seed } => {
            Ok(BuiltState::Dense { psi: statecore::haar_random_state(n_sites, seed)?, boundary: Boundary::Open })
        }
        ModelSpec::Dimer { n_sites } => Ok(BuiltState::Dense { psi: statecore::dimer_state(n_sites)?, boundary: Boundary::Open }),
        ModelSpec::Rainbow { n_sites } => {
            Ok(BuiltState::Dense { psi: statecore::rainbow_state(n_sites)?, boundary: Boundary::Open })
        }
        ModelSpec::Itf { n_sites, h, boundary } => spin(SpinModel::Itf { h }, n_sites, boundary),
        ModelSpec::Xyz { n_sites, tx, ty, tz, alpha, boundary, distance } => {
            let distance = match distance {
                DistanceSpec::Ring => DistanceRule::Ring,
                DistanceSpec::Label => DistanceRule::Label,
            };
            spin(SpinModel::Xyz { tx, ty, tz, alpha, distance }, n_sites, boundary)
        }
        ModelSpec::Bbh { n_sites, theta, boundary } => spin(SpinModel::Bbh { theta }, n_sites, boundary),
    }
}

pub fn build_state(source: &StateSource) -> Result<BuiltState> {
    match source {
        StateSource::Model(m) => build_model(m),
        StateSource::File(path) => {
            let psi = formats::read_state(path)?;
            check_dim(psi.local_dim(), psi.n_sites())?;
            Ok(BuiltState::Dense { psi, boundary: Boundary::Open })
        }
        StateSource::Mps { source, n_sites } => {
            let mps = formats::load_mps(source)?;
            check_dim(mps.physical_dim(), *n_sites)?;
            let ring = mps::ring_state(&mps, *n_sites)?;
            Ok(BuiltState::Mps { mps, ring })
        }
    }
}

/// Links produced by `method` for `state`, given its exact data.
pub fn fit_links(state: &BuiltState, data: &EntropyData, method: &FitMethod) -> Result<LinkMatrix> {
    let n = state.n_sites();
    let j = match (method, state) {
        (FitMethod::Optimal { nonneg }, _) => linkfit::fit_optimal(data, *nonneg)?,
        (FitMethod::Sampled { n_samples, seed }, _) => linkfit::fit_sampled(data, *n_samples, *seed)?,
        (FitMethod::Structured { n_blocks }, _) => linkfit::fit_structured(data, *n_blocks)?,
        (FitMethod::FfApprox, BuiltState::Fermion { state, .. }) => freefermion::ff_link_approx(state)?,
        (FitMethod::MpsMut, BuiltState::Mps { mps, .. }) => {
            let jr = (1..=n / 2).map(|r| mps::j_mut_analytic(mps, r - 1)).collect::<std::result::Result<Vec<_>, _>>()?;
            LinkMatrix::from_fn(n, |a, b| jr[linkfit::ring_distance(a, b, n) - 1])?
        }
        (FitMethod::MpsCont, BuiltState::Mps { mps, .. }) => {
            let jr = (1..=n / 2)
                .map(|r| mps::j_cont_analytic(mps, r, n).map(|j| j.direct))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            LinkMatrix::from_fn(n, |a, b| jr[linkfit::ring_distance(a, b, n) - 1])?
        }
        _ => return Err(CliError::Validation("fit method does not match the state source".into())),
    };
    Ok(j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub cli_version: String,
    pub core_version: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRow {
    pub key: usize,
    pub count: usize,
    pub mean_abs_error: f64,
    pub mean_entropy: f64,
}

/// Error metrics; `delta_s` and the group columns are in display units,
/// the relative metrics are dimensionless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSummary {
    pub delta_s: f64,
    pub delta_r_s: f64,
    pub mean_entropy: f64,
    pub epsilon: f64,
    pub count: usize,
    pub relative_excluded: usize,
    pub per_size: Vec<GroupRow>,
    pub per_block_count: Vec<GroupRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRow {
    pub r: usize,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CftSummary {
    pub central_charge: f64,
    pub residual: f64,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionRow {
    pub mask: u32,
    pub sites: Vec<usize>,
    pub exact: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub units: Units,
    pub n_sites: usize,
    pub boundary: BoundarySpec,
    pub method: FitMethod,
    pub errors: ErrorSummary,
    pub links: LinkStats,
    pub radial_profile: Vec<ProfileRow>,
    pub cft: Option<CftSummary>,
    pub warnings: Vec<String>,
    pub partitions: Vec<PartitionRow>,
}

impl ReportBundle {
    /// Parse and check a report: the provenance block and a matching
    /// schema version are mandatory.
    pub fn validate_json(text: &str) -> std::result::Result<Self, String> {
        let r: ReportBundle = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if r.schema_version != SCHEMA_VERSION || r.provenance.schema_version != SCHEMA_VERSION {
            return Err(format!("schema version {} is not {SCHEMA_VERSION}", r.schema_version));
        }
        if r.provenance.config_hash.len() != 64 {
            return Err("config hash is not a sha256 hex digest".into());
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    /// Radial profile as CSV in the report's units.
    pub fn profile_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let unit = match self.units {
            Units::Nats => "nats",
            Units::Bits => "bits",
        };
        w.write_record(["r", &format!("mean_{unit}"), &format!("std_{unit}"), "count"])?;
        for p in &self.radial_profile {
            w.write_record([p.r.to_string(), p.mean.to_string(), p.std.to_string(), p.count.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).unwrap())
    }
}

fn warning_text(w: &FitWarning) -> String {
    match w {
        FitWarning::ClampedNegative { count, most_negative } => {
            format!("clamped {count} slightly negative links (most negative {most_negative:e})")
        }
        FitWarning::RankDeficient { rank, unknowns } => {
            format!("normal matrix has rank {rank} of {unknowns}; minimum-norm solution")
        }
    }
}

pub struct JobResult {
    pub report: ReportBundle,
    pub links: LinkMatrix,
    pub data: EntropyData,
}

/// Build the state, fit and assemble the report; nothing is written.
pub fn compute_job(spec: &JobSpec) -> Result<JobResult> {
    spec.validate()?;
    let state = build_state(&spec.state)?;
    let data = state.entropy_data()?;
    let links = fit_links(&state, &data, &spec.method)?;
    let n = state.n_sites();
    let u = spec.units;
    let rep = linkfit::error_report(&data, &links, None)?;
    let group = |g: &linkfit::GroupError| GroupRow {
        key: g.key,
        count: g.count,
        mean_abs_error: u.show(g.mean_abs_error),
        mean_entropy: u.show(g.mean_entropy),
    };
    let errors = ErrorSummary {
        delta_s: u.show(rep.delta_s),
        delta_r_s: rep.delta_r_s,
        mean_entropy: u.show(rep.mean_entropy),
        epsilon: rep.epsilon,
        count: rep.count,
        relative_excluded: rep.relative_excluded,
        per_size: rep.per_size.iter().map(group).collect(),
        per_block_count: rep.per_block_count.iter().map(group).collect(),
    };
    let vals = links.values();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    let stats = LinkStats {
        mean: u.show(mean),
        std: u.show(std),
        min: u.show(vals.iter().copied().fold(f64::INFINITY, f64::min)),
        max: u.show(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
    };
    let boundary = state.boundary();
    let radial_profile = linkfit::radial_profile(&links, boundary)
        .into_iter()
        .map(|p| ProfileRow { r: p.r, mean: u.show(p.mean), std: u.show(p.std), count: p.count })
        .collect();
    let cft = linkfit::cft_profile_fit(&links, boundary)
        .ok()
        .map(|c| CftSummary { central_charge: c.central_charge, residual: c.residual, reliable: c.reliable });
    let partitions = partitions::canonical_subsystems(n)?
        .iter()
        .map(|p| PartitionRow {
            mask: p.mask(),
            sites: p.sites(),
            exact: u.show(data.get(p)),
            predicted: u.show(linkfit::predict_entropy(&links, p)),
        })
        .collect();
    let report = ReportBundle {
        schema_version: SCHEMA_VERSION,
        provenance: Provenance {
            schema_version: SCHEMA_VERSION,
            seed: spec.seed(),
            cli_version: env!("CARGO_PKG_VERSION").into(),
            core_version: entanglelink_core::VERSION.into(),
            config_hash: spec.config_hash(),
        },
        units: u,
        n_sites: n,
        boundary: match boundary {
            Boundary::Open => BoundarySpec::Open,
            Boundary::Periodic => BoundarySpec::Periodic,
        },
        method: spec.method.clone(),
        errors,
        links: stats,
        radial_profile,
        cft,
        warnings: links.warnings().iter().map(warning_text).collect(),
        partitions,
    };
    Ok(JobResult { report, links, data })
}

/// [`compute_job`] followed by writing every requested output.
pub fn run_job(spec: &JobSpec) -> Result<JobResult> {
    let res = compute_job(spec)?;
    if let Some(p) = &spec.outputs.links {
        formats::write_links(p, &res.links)?;
    }
    if let Some(p) = &spec.outputs.report {
        formats::write(p, res.report.to_json().as_bytes())?;
    }
    if let Some(p) = &spec.outputs.profile {
        formats::write(p, res.report.profile_csv()?.as_bytes())?;
    }
    Ok(res)
}
