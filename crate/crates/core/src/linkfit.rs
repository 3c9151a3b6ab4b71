//! Least-squares link fitting and the diagnostics built on link matrices.
//!
//! Each bipartition contributes one equation `sum_{k broken} J_k = S`. The
//! equations are never stored; they are streamed into the normal system
//! `M J = b` with `M = sum a a^T`, `b = sum S a`, where `a` is the 0/1
//! vector of links broken by the bipartition.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::partitions::{self, Bipartition};
use crate::statecore::{EntropyData, EntropyOracle};
use crate::Boundary;

/// Relative eigenvalue cutoff below which the normal matrix counts as singular.
pub const RANK_TOL: f64 = 1e-10;
/// Negative fitted links above this value are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-8;

/// Something the solver wants the caller to know about.
#[derive(Debug, Clone, PartialEq)]
pub enum FitWarning {
    /// Small negative links were set to zero.
    ClampedNegative { count: usize, most_negative: f64 },
    /// The normal matrix was singular; the minimum-norm solution was returned.
    RankDeficient { rank: usize, unknowns: usize },
}

/// Symmetric matrix of link strengths with zero diagonal, stored as the
/// flattened upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    n_sites: usize,
    values: Vec<f64>,
    nonneg: bool,
    warnings: Vec<FitWarning>,
}

impl LinkMatrix {
    /// Build from flattened upper-triangular values. With `nonneg` every
    /// value must be nonnegative.
    pub fn new(n_sites: usize, values: Vec<f64>, nonneg: bool) -> Result<Self> {
        if !(2..=partitions::MAX_SITES).contains(&n_sites) {
            return Err(Error::InvalidSize(format!("{n_sites} sites")));
        }
        if values.len() != partitions::n_links(n_sites) {
            return Err(Error::Shape(format!("{} values for {} links", values.len(), partitions::n_links(n_sites))));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || (nonneg && **v < 0.0)) {
            return Err(Error::NumericInput(format!("link value {v}")));
        }
        Ok(Self { n_sites, values, nonneg, warnings: Vec::new() })
    }

    pub fn from_fn(n_sites: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..partitions::n_links(n_sites.max(2)))
            .map(|k| {
                let (i, j) = partitions::link_pair(k, n_sites.max(2)).expect("index in range");
                f(i, j)
            })
            .collect();
        Self::new(n_sites, values, false)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Flattened upper triangle, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn warnings(&self) -> &[FitWarning] {
        &self.warnings
    }

    /// `J_ij` for 1-based sites; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.values[partitions::link_index(i, j, self.n_sites).expect("sites in range")]
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_sites, self.n_sites, |r, c| self.get(r + 1, c + 1))
    }
}

/// `S_A ~ sum_{i in A, j not in A} J_ij`.
pub fn predict_entropy(j: &LinkMatrix, p: &Bipartition) -> f64 {
    partitions::broken_links(p).iter().map(|&k| j.values[k]).sum()
}

/// Normal equations of the link fit, accumulated one bipartition at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalSystem {
    n_sites: usize,
    m: DMatrix<f64>,
    b: DVector<f64>,
    equations: usize,
}

impl NormalSystem {
    pub fn new(n_sites: usize) -> Result<Self> {
        if !(2..=partitions::MAX_SITES).contains(&n_sites) {
            return Err(Error::InvalidSize(format!("{n_sites} sites")));
        }
        let n0 = partitions::n_links(n_sites);
        Ok(Self { n_sites, m: DMatrix::zeros(n0, n0), b: DVector::zeros(n0), equations: 0 })
    }

    /// Add the equation of one bipartition with entropy `s`.
    pub fn add(&mut self, p: &Bipartition, s: f64) {
        let links = partitions::broken_links(p);
        for (x, &k) in links.iter().enumerate() {
            self.b[k] += s;
            self.m[(k, k)] += 1.0;
            for &l in &links[x + 1..] {
                self.m[(k, l)] += 1.0;
                self.m[(l, k)] += 1.0;
            }
        }
        self.equations += 1;
    }

    /// Sum of two systems built from disjoint sets of equations.
    pub fn merge(&mut self, other: &NormalSystem) -> Result<()> {
        if other.n_sites != self.n_sites {
            return Err(Error::Shape(format!("merging {} and {} sites", self.n_sites, other.n_sites)));
        }
        self.m += &other.m;
        self.b += &other.b;
        self.equations += other.equations;
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn equation_count(&self) -> usize {
        self.equations
    }

    /// Solve for the links. Unconstrained mode clamps negatives above
    /// `-CLAMP_TOL`; `nonneg` solves the constrained problem instead.
    pub fn solve(&self, nonneg: bool) -> Result<LinkMatrix> {
        if self.equations == 0 {
            return Err(Error::InvalidParameter("no equations accumulated".into()));
        }
        let mut warnings = Vec::new();
        let mut x = if nonneg {
            nnls_normal(&self.m, &self.b, &mut warnings)
        } else {
            solve_spd_or_pinv(&self.m, &self.b, &mut warnings)
        };
        if !nonneg {
            let mut count = 0;
            let mut most = 0.0f64;
            for v in x.iter_mut() {
                if *v < 0.0 && *v > -CLAMP_TOL {
                    most = most.min(*v);
                    *v = 0.0;
                    count += 1;
                }
            }
            if count > 0 {
                warnings.push(FitWarning::ClampedNegative { count, most_negative: most });
            }
        }
        let mut j = LinkMatrix::new(self.n_sites, x.iter().copied().collect(), nonneg)?;
        j.warnings = warnings;
        Ok(j)
    }
}

/// Stream the equations of `parts` into a normal system.
pub fn accumulate_normal_system<O: EntropyOracle + ?Sized>(oracle: &O, parts: &[Bipartition]) -> Result<NormalSystem> {
    if parts.is_empty() {
        return Err(Error::InvalidParameter("empty partition list".into()));
    }
    let mut sys = NormalSystem::new(oracle.n_sites())?;
    for p in parts {
        if p.n_sites() != sys.n_sites {
            return Err(Error::InvalidPartition { mask: p.mask() as u64, n_sites: sys.n_sites });
        }
        sys.add(p, oracle.entropy(p)?);
    }
    Ok(sys)
}

fn solve_spd_or_pinv(m: &DMatrix<f64>, b: &DVector<f64>, warnings: &mut Vec<FitWarning>) -> DVector<f64> {
    let n = m.nrows();
    let (vals, vecs) = linalg::symmetric_eigen(m.clone());
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = RANK_TOL * top;
    let rank = vals.iter().filter(|&&v| v > cut).count();
    if rank == n && top > 0.0 {
        if let Some(ch) = m.clone().cholesky() {
            return ch.solve(b);
        }
    }
    warnings.push(FitWarning::RankDeficient { rank, unknowns: n });
    let mut x = DVector::zeros(n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam > cut {
            let v = vecs.column(k);
            x += v * (v.dot(b) / lam);
        }
    }
    x
}

/// Lawson-Hanson active-set solver for `min |A x - S|^2, x >= 0`, written
/// in terms of `M = A^T A` and `b = A^T S`. Ties when choosing the next
/// variable go to the lowest index.
fn nnls_normal(m: &DMatrix<f64>, b: &DVector<f64>, warnings: &mut Vec<FitWarning>) -> DVector<f64> {
    let n = m.nrows();
    let scale = b.amax().max(m.amax()).max(1e-300);
    let tol = 1e-12 * scale;
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut deficient = false;
    let max_outer = 3 * n + 10;
    for _ in 0..max_outer {
        let w = b - m * &x;
        let mut best: Option<usize> = None;
        for k in 0..n {
            if !passive[k] && w[k] > tol && best.is_none_or(|bk| w[k] > w[bk]) {
                best = Some(k);
            }
        }
        let Some(k) = best else { break };
        passive[k] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub_m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
            let sub_b = DVector::from_fn(idx.len(), |r, _| b[idx[r]]);
            let mut w_local = Vec::new();
            let zs = solve_spd_or_pinv(&sub_m, &sub_b, &mut w_local);
            deficient |= !w_local.is_empty();
            let mut z = DVector::<f64>::zeros(n);
            for (r, &i) in idx.iter().enumerate() {
                z[i] = zs[r];
            }
            if idx.iter().all(|&i| z[i] > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &i in &idx {
                if z[i] <= 0.0 {
                    let denom = x[i] - z[i];
                    let a = if denom > 0.0 { x[i] / denom } else { 0.0 };
                    alpha = alpha.min(a);
                }
            }
            x += (z - &x) * alpha;
            for &i in &idx {
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    if deficient {
        warnings.push(FitWarning::RankDeficient { rank: passive.iter().filter(|&&p| p).count(), unknowns: n });
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

/// Least-squares links over all canonical bipartitions.
pub fn fit_optimal(data: &EntropyData, nonneg: bool) -> Result<LinkMatrix> {
    let parts = partitions::canonical_subsystems(data.n_sites())?;
    accumulate_normal_system(data, &parts)?.solve(nonneg)
}

/// Least squares over `n_samples` bipartitions drawn uniformly at random:
/// without replacement when possible, with replacement beyond the number of
/// canonical bipartitions.
pub fn fit_sampled<O: EntropyOracle + ?Sized>(oracle: &O, n_samples: usize, seed: u64) -> Result<LinkMatrix> {
    let n = oracle.n_sites();
    let parts = sample_partitions(n, n_samples, seed)?;
    accumulate_normal_system(oracle, &parts)?.solve(false)
}

/// The bipartitions used by [`fit_sampled`].
pub fn sample_partitions(n_sites: usize, n_samples: usize, seed: u64) -> Result<Vec<Bipartition>> {
    use rand::Rng;
    let unknowns = partitions::n_links(n_sites);
    if n_samples < unknowns {
        return Err(Error::Underdetermined { equations: n_samples, unknowns });
    }
    let population = partitions::n_canonical(n_sites);
    let mut rng = crate::rng::seeded(seed);
    let indices: Vec<usize> = if n_samples <= population {
        rand::seq::index::sample(&mut rng, population, n_samples).into_vec()
    } else {
        (0..n_samples).map(|_| rng.random_range(0..population)).collect()
    };
    indices.into_iter().map(|k| Bipartition::from_index(k, n_sites)).collect()
}

/// Least squares over the bipartitions made of at most `n_blocks` arcs.
pub fn fit_structured<O: EntropyOracle + ?Sized>(oracle: &O, n_blocks: usize) -> Result<LinkMatrix> {
    let parts = partitions::contiguous_partitions(oracle.n_sites(), n_blocks)?;
    accumulate_normal_system(oracle, &parts)?.solve(false)
}

/// Error of the prediction over a group of bipartitions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupError {
    pub key: usize,
    pub count: usize,
    pub mean_abs_error: f64,
    pub mean_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Mean absolute error.
    pub delta_s: f64,
    /// Mean relative error over bipartitions with nonzero exact entropy.
    pub delta_r_s: f64,
    /// Mean exact entropy over all evaluated bipartitions.
    pub mean_entropy: f64,
    /// `delta_s / mean_entropy`.
    pub epsilon: f64,
    pub count: usize,
    /// Bipartitions left out of `delta_r_s` because their entropy is zero.
    pub relative_excluded: usize,
    /// Grouped by `min(|A|, N - |A|)`.
    pub per_size: Vec<GroupError>,
    /// Grouped by number of arcs of `A` on the ring.
    pub per_block_count: Vec<GroupError>,
}

/// Exact entropies at or below this are treated as zero in `delta_r_s`.
pub const ZERO_ENTROPY: f64 = 1e-12;

/// Compare predicted and exact entropies, over all canonical bipartitions
/// unless `subset` is given.
pub fn error_report(exact: &EntropyData, j: &LinkMatrix, subset: Option<&[Bipartition]>) -> Result<ErrorReport> {
    let n = exact.n_sites();
    if j.n_sites != n {
        return Err(Error::Shape(format!("{} sites in data, {} in links", n, j.n_sites)));
    }
    let all;
    let parts = match subset {
        Some(s) => s,
        None => {
            all = partitions::canonical_subsystems(n)?;
            &all
        }
    };
    if parts.is_empty() {
        return Err(Error::InvalidParameter("empty partition list".into()));
    }
    let half = n / 2;
    let mut by_size = vec![(0usize, 0.0f64, 0.0f64); half + 1];
    let mut by_blocks = vec![(0usize, 0.0f64, 0.0f64); half + 1];
    let (mut abs_sum, mut rel_sum, mut s_sum) = (0.0, 0.0, 0.0);
    let mut rel_count = 0;
    for p in parts {
        if p.n_sites() != n {
            return Err(Error::InvalidPartition { mask: p.mask() as u64, n_sites: n });
        }
        let s = exact.get(p);
        let err = (predict_entropy(j, p) - s).abs();
        abs_sum += err;
        s_sum += s;
        if s > ZERO_ENTROPY {
            rel_sum += err / s;
            rel_count += 1;
        }
        let size = p.size().min(n - p.size());
        for (slot, key) in [(&mut by_size, size), (&mut by_blocks, p.block_count())] {
            let e = &mut slot[key];
            e.0 += 1;
            e.1 += err;
            e.2 += s;
        }
    }
    let count = parts.len();
    let mean_entropy = s_sum / count as f64;
    if !(mean_entropy > 0.0) {
        return Err(Error::EpsilonUndefined);
    }
    let delta_s = abs_sum / count as f64;
    let groups = |v: Vec<(usize, f64, f64)>| -> Vec<GroupError> {
        v.into_iter()
            .enumerate()
            .filter(|(_, g)| g.0 > 0)
            .map(|(key, (c, e, s))| GroupError {
                key,
                count: c,
                mean_abs_error: e / c as f64,
                mean_entropy: s / c as f64,
            })
            .collect()
    };
    Ok(ErrorReport {
        delta_s,
        delta_r_s: if rel_count > 0 { rel_sum / rel_count as f64 } else { 0.0 },
        mean_entropy,
        epsilon: delta_s / mean_entropy,
        count,
        relative_excluded: count - rel_count,
        per_size: groups(by_size),
        per_block_count: groups(by_blocks),
    })
}

/// Links from entropies of ring arcs by second differences:
/// `2 J_ij = S(i+1, j+1) - S(i+1, j) - S(i, j+1) + S(i, j)`, where
/// `S(i, j)` is the entropy of the arc `{i, ..., j-1}` (indices mod `N`,
/// 1-based) and `S(i, i) = 0`. `arc` is only called with `i != j`.
pub fn links_from_block_entropies(n_sites: usize, arc: impl Fn(usize, usize) -> Option<f64>) -> Result<LinkMatrix> {
    let wrap = |x: usize| (x - 1) % n_sites + 1;
    let s = |i: usize, j: usize| -> Result<f64> {
        let (i, j) = (wrap(i), wrap(j));
        if i == j {
            return Ok(0.0);
        }
        arc(i, j).ok_or_else(|| Error::IncompleteData(format!("missing entropy of arc ({i}, {j})")))
    };
    let mut values = Vec::with_capacity(partitions::n_links(n_sites));
    for i in 1..n_sites {
        for j in i + 1..=n_sites {
            values.push(0.5 * (s(i + 1, j + 1)? - s(i + 1, j)? - s(i, j + 1)? + s(i, j)?));
        }
    }
    LinkMatrix::new(n_sites, values, false)
}

/// [`links_from_block_entropies`] with arc entropies taken from an oracle.
pub fn links_from_arcs<O: EntropyOracle + ?Sized>(oracle: &O) -> Result<LinkMatrix> {
    let n = oracle.n_sites();
    let mut cache = vec![f64::NAN; n * n];
    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                let p = Bipartition::new(partitions::arc_mask(i, j, n), n)?;
                cache[(i - 1) * n + j - 1] = oracle.entropy(&p)?;
            }
        }
    }
    links_from_block_entropies(n, |i, j| Some(cache[(i - 1) * n + j - 1]))
}

/// Translation-invariant second difference `J_r = S(r) - S(r-1)/2 - S(r+1)/2`
/// for `r = 1..=N/2`, given `profile[r] = S(r)` for `r = 0..=N/2`. Values
/// beyond `N/2` follow from `S(r) = S(N - r)`; `S(0)` is taken as zero.
pub fn radial_links(n_sites: usize, profile: &[f64]) -> Result<Vec<f64>> {
    let half = n_sites / 2;
    if n_sites < 2 || profile.len() < half + 1 {
        return Err(Error::IncompleteData(format!("profile has {} entries, need {}", profile.len(), half + 1)));
    }
    let s = |r: usize| if r == 0 || r == n_sites { 0.0 } else { profile[r.min(n_sites - r)] };
    Ok((1..=half).map(|r| s(r) - 0.5 * s(r - 1) - 0.5 * s(r + 1)).collect())
}

/// Link matrix with `J_ij = J_r`, `r` the ring distance, from a block
/// entropy profile (see [`radial_links`]).
pub fn links_from_radial_profile(n_sites: usize, profile: &[f64]) -> Result<LinkMatrix> {
    let jr = radial_links(n_sites, profile)?;
    LinkMatrix::from_fn(n_sites, |i, j| jr[ring_distance(i, j, n_sites) - 1])
}

pub fn ring_distance(i: usize, j: usize, n: usize) -> usize {
    let d = i.abs_diff(j);
    d.min(n - d)
}

/// `I(A:B) = 2 sum_{i in A, j in B} J_ij` for disjoint site masks.
pub fn mutual_information_links(j: &LinkMatrix, a: u32, b: u32) -> Result<f64> {
    let full = partitions::full_mask(j.n_sites);
    if a & b != 0 || (a | b) & !full != 0 {
        return Err(Error::InvalidArgument(format!("masks {a:#x} and {b:#x} overlap or exceed the system")));
    }
    let mut sum = 0.0;
    for i in 1..=j.n_sites {
        if a >> (i - 1) & 1 == 1 {
            for k in 1..=j.n_sites {
                if b >> (k - 1) & 1 == 1 {
                    sum += j.get(i, k);
                }
            }
        }
    }
    Ok(2.0 * sum)
}

/// `s_A(i) = sum_{j not in A} J_ij` for the sites of `A` in ascending order.
pub fn contour_from_links(j: &LinkMatrix, p: &Bipartition) -> Vec<f64> {
    let n = j.n_sites;
    p.sites()
        .into_iter()
        .map(|i| (1..=n).filter(|&k| !p.contains(k)).map(|k| j.get(i, k)).sum())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPoint {
    pub r: usize,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Mean and population standard deviation of `J_ij` grouped by distance:
/// ring distance `1..=N/2` for periodic chains, `|i - j|` in `1..N` for
/// open ones.
pub fn radial_profile(j: &LinkMatrix, boundary: Boundary) -> Vec<RadialPoint> {
    let n = j.n_sites;
    let rmax = match boundary {
        Boundary::Periodic => n / 2,
        Boundary::Open => n - 1,
    };
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); rmax + 1];
    for a in 1..n {
        for b in a + 1..=n {
            let r = match boundary {
                Boundary::Periodic => ring_distance(a, b, n),
                Boundary::Open => b - a,
            };
            groups[r].push(j.get(a, b));
        }
    }
    (1..=rmax)
        .map(|r| {
            let g = &groups[r];
            let c = g.len() as f64;
            let mean = g.iter().sum::<f64>() / c;
            let var = g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c;
            RadialPoint { r, mean, std: var.sqrt(), count: g.len() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CftFit {
    pub central_charge: f64,
    /// `|J - (c/6) f| / |J|` over the radial profile.
    pub residual: f64,
    pub reliable: bool,
}

/// Residuals above this mark a central-charge estimate as unreliable.
pub const CFT_RESIDUAL_LIMIT: f64 = 0.25;

/// Fit the radial profile to `(c/6) / dist^2`, with the chord distance
/// `N sin(pi r / N) / pi` on rings and `r` on open chains.
pub fn cft_profile_fit(j: &LinkMatrix, boundary: Boundary) -> Result<CftFit> {
    let n = j.n_sites as f64;
    let prof = radial_profile(j, boundary);
    let f: Vec<f64> = prof
        .iter()
        .map(|p| {
            let r = p.r as f64;
            let d = match boundary {
                Boundary::Periodic => n * (core::f64::consts::PI * r / n).sin() / core::f64::consts::PI,
                Boundary::Open => r,
            };
            1.0 / (d * d)
        })
        .collect();
    let jf: f64 = prof.iter().zip(&f).map(|(p, f)| p.mean * f).sum();
    let ff: f64 = f.iter().map(|x| x * x).sum();
    if !(jf > 0.0) {
        return Err(Error::FitFailure(format!("profile does not project positively on 1/dist^2 ({jf})")));
    }
    let c = 6.0 * jf / ff;
    let res2: f64 = prof.iter().zip(&f).map(|(p, f)| (p.mean - c / 6.0 * f).powi(2)).sum();
    let norm2: f64 = prof.iter().map(|p| p.mean * p.mean).sum();
    let residual = (res2 / norm2).sqrt();
    Ok(CftFit { central_charge: c, residual, reliable: residual <= CFT_RESIDUAL_LIMIT })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statecore::{full_entropy_data, PureState};
    use core::f64::consts::LN_2;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn singlets(n: usize, pairs: &[(usize, usize)]) -> PureState {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (idx, a) in amps.iter_mut().enumerate() {
            let mut v = 1.0;
            for &(i, j) in pairs {
                v *= match (idx >> (i - 1) & 1, idx >> (j - 1) & 1) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                };
            }
            *a = Complex64::new(v, 0.0);
        }
        PureState::normalized(amps, 2, n).unwrap()
    }

    fn random_links(n: usize, seed: u64) -> LinkMatrix {
        use rand::Rng;
        let mut rng = crate::rng::seeded(seed);
        let v = (0..partitions::n_links(n)).map(|_| rng.random::<f64>()).collect();
        LinkMatrix::new(n, v, true).unwrap()
    }

    fn synth_data(j: &LinkMatrix) -> EntropyData {
        let n = j.n_sites();
        let v = partitions::canonical_subsystems(n).unwrap().iter().map(|p| predict_entropy(j, p)).collect();
        EntropyData::new(n, v).unwrap()
    }

    #[test]
    fn normal_system_examples() {
        let n = 4;
        let parts = partitions::canonical_subsystems(n).unwrap();
        let zero = EntropyData::new(n, vec![0.0; 7]).unwrap();
        let sys = accumulate_normal_system(&zero, &parts).unwrap();
        for k in 0..6 {
            assert_eq!(sys.matrix()[(k, k)], 4.0);
        }
        let one = [Bipartition::from_sites(&[1], 3).unwrap()];
        let d3 = EntropyData::new(3, vec![1.0, 1.0, 1.0]).unwrap();
        let sys = accumulate_normal_system(&d3, &one).unwrap();
        let a = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        assert_eq!(sys.matrix(), &(&a * a.transpose()));
        assert!(accumulate_normal_system(&d3, &[]).is_err());

        let dimer = full_entropy_data(&singlets(4, &[(1, 2), (3, 4)])).unwrap();
        let sys = accumulate_normal_system(&dimer, &parts).unwrap();
        let mut jd = DVector::zeros(6);
        jd[partitions::link_index(1, 2, 4).unwrap()] = LN_2;
        jd[partitions::link_index(3, 4, 4).unwrap()] = LN_2;
        assert!((sys.matrix() * jd - sys.rhs()).amax() < 1e-12);
    }

    #[test]
    fn vbs_fits_exactly() {
        for (n, pairs) in [
            (4, vec![(1, 2), (3, 4)]),
            (4, vec![(1, 4), (2, 3)]),
            (8, vec![(1, 2), (3, 4), (5, 6), (7, 8)]),
            (8, vec![(1, 8), (2, 7), (3, 6), (4, 5)]),
        ] {
            let data = full_entropy_data(&singlets(n, &pairs)).unwrap();
            for nonneg in [false, true] {
                let j = fit_optimal(&data, nonneg).unwrap();
                for a in 1..n {
                    for b in a + 1..=n {
                        let want = if pairs.contains(&(a, b)) { LN_2 } else { 0.0 };
                        assert!((j.get(a, b) - want).abs() < 1e-10, "{n} {nonneg} ({a},{b}) {}", j.get(a, b));
                    }
                }
                let rep = error_report(&data, &j, None).unwrap();
                assert!(rep.delta_s < 1e-10 && rep.delta_r_s < 1e-10);
            }
        }
    }

    #[test]
    fn prediction_examples() {
        let dimer = LinkMatrix::from_fn(4, |i, j| if (i, j) == (1, 2) || (i, j) == (3, 4) { LN_2 } else { 0.0 }).unwrap();
        assert_eq!(predict_entropy(&dimer, &Bipartition::from_sites(&[1], 4).unwrap()), LN_2);
        assert_eq!(predict_entropy(&dimer, &Bipartition::from_sites(&[1, 2], 4).unwrap()), 0.0);
        let chi = 0.157;
        let flat = LinkMatrix::from_fn(10, |_, _| chi).unwrap();
        for ell in 1..10usize {
            let p = Bipartition::new((1 << ell) - 1, 10).unwrap();
            assert!((predict_entropy(&flat, &p) - chi * (ell * (10 - ell)) as f64).abs() < 1e-12);
        }
        assert!((mutual_information_links(&dimer, 0b01, 0b10).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert_eq!(mutual_information_links(&dimer, 0b0001, 0b0100).unwrap(), 0.0);
        assert!(mutual_information_links(&dimer, 0b011, 0b010).is_err());
        assert_eq!(contour_from_links(&dimer, &Bipartition::from_sites(&[1, 2], 4).unwrap()), vec![0.0, 0.0]);
        assert_eq!(contour_from_links(&dimer, &Bipartition::from_sites(&[1], 4).unwrap()), vec![LN_2]);
    }

    #[test]
    fn error_report_requires_entropy() {
        let zero = EntropyData::new(4, vec![0.0; 7]).unwrap();
        let j = fit_optimal(&zero, false).unwrap();
        assert_eq!(error_report(&zero, &j, None), Err(Error::EpsilonUndefined));
    }

    #[test]
    fn relative_error_skips_zero_entropies() {
        let data = full_entropy_data(&singlets(4, &[(1, 2), (3, 4)])).unwrap();
        let j = LinkMatrix::from_fn(4, |_, _| 0.1).unwrap();
        let rep = error_report(&data, &j, None).unwrap();
        // only {1,2} (and its complement) has zero entropy
        assert_eq!(rep.relative_excluded, 1);
        assert!((rep.epsilon - rep.delta_s / rep.mean_entropy).abs() < 1e-12);
        assert_eq!(rep.per_size.iter().map(|g| g.count).sum::<usize>(), 7);
        assert_eq!(rep.per_block_count.iter().map(|g| g.count).sum::<usize>(), 7);
    }

    #[test]
    fn sampled_and_structured() {
        let j0 = random_links(7, 9);
        let data = synth_data(&j0);
        let full = fit_optimal(&data, false).unwrap();
        let sampled = fit_sampled(&data, partitions::n_canonical(7), 3).unwrap();
        for (a, b) in full.values().iter().zip(sampled.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(fit_sampled(&data, 20, 3), Err(Error::Underdetermined { equations: 20, unknowns: 21 })));
        // with replacement beyond the population
        assert_eq!(sample_partitions(7, 200, 1).unwrap().len(), 200);
        assert_eq!(sample_partitions(7, 30, 1).unwrap(), sample_partitions(7, 30, 1).unwrap());
        let s = fit_structured(&data, 3).unwrap();
        for (a, b) in full.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn nnls_keeps_links_nonnegative() {
        // data of a state where the unconstrained fit has negative links
        let psi = crate::statecore::haar_random_state(6, 4).unwrap();
        let data = full_entropy_data(&psi).unwrap();
        let free = fit_optimal(&data, false).unwrap();
        let cons = fit_optimal(&data, true).unwrap();
        assert!(cons.values().iter().all(|&v| v >= 0.0));
        let res = |j: &LinkMatrix| -> f64 {
            partitions::canonical_subsystems(6).unwrap().iter().map(|p| (predict_entropy(j, p) - data.get(p)).powi(2)).sum()
        };
        assert!(res(&cons) >= res(&free) - 1e-12);
        // KKT conditions: gradient zero on the support, nonnegative off it
        let sys = accumulate_normal_system(&data, &partitions::canonical_subsystems(6).unwrap()).unwrap();
        let x = DVector::from_column_slice(cons.values());
        let g = sys.matrix() * &x - sys.rhs();
        for k in 0..x.len() {
            if x[k] > 0.0 {
                assert!(g[k].abs() < 1e-9);
            } else {
                assert!(g[k] > -1e-9);
            }
        }
    }

    #[test]
    fn rank_deficient_systems_report_minimum_norm() {
        let data = EntropyData::new(4, vec![1.0; 7]).unwrap();
        let parts = [Bipartition::from_sites(&[1], 4).unwrap(); 6];
        let j = accumulate_normal_system(&data, &parts).unwrap().solve(false).unwrap();
        assert!(j.warnings().iter().any(|w| matches!(w, FitWarning::RankDeficient { rank: 1, unknowns: 6 })));
        // the three links of site 1 share the entropy equally
        assert!((j.get(1, 2) - 1.0 / 3.0).abs() < 1e-12);
        assert!(j.get(2, 3).abs() < 1e-12);
    }

    #[test]
    fn block_difference_examples() {
        // nearest neighbour: 2 J_{i,i+1} = S[i] + S[i+1] - S[i,i+1]
        let j0 = random_links(6, 2);
        let data = synth_data(&j0);
        let j = links_from_arcs(&data).unwrap();
        for i in 1..=6 {
            let k = i % 6 + 1;
            let si = data.get(&Bipartition::from_sites(&[i], 6).unwrap());
            let sk = data.get(&Bipartition::from_sites(&[k], 6).unwrap());
            let sik = data.get(&Bipartition::from_sites(&[i, k], 6).unwrap());
            assert!((2.0 * j.get(i, k) - (si + sk - sik)).abs() < 1e-12);
        }
        assert!(matches!(links_from_block_entropies(5, |i, _| if i == 3 { None } else { Some(0.0) }), Err(Error::IncompleteData(_))));

        // S(r) = S0 (1 - g^r) gives J_r = -S0 g^r (1 - g/2 - 1/(2g))
        let (s0, g, n) = (1.3, 0.4, 40);
        let prof: Vec<f64> = (0..=n / 2).map(|r| s0 * (1.0 - g.powi(r as i32))).collect();
        let jr = radial_links(n, &prof).unwrap();
        for r in 1..n / 2 - 1 {
            let want = -s0 * g.powi(r as i32) * (1.0 - g / 2.0 - 1.0 / (2.0 * g));
            assert!((jr[r - 1] - want).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn radial_links_match_arc_differences_on_rings() {
        let n = 8;
        let j0 = LinkMatrix::from_fn(n, |i, j| 1.0 / (ring_distance(i, j, n) as f64).powi(2)).unwrap();
        let data = synth_data(&j0);
        let prof: Vec<f64> = (0..=n / 2).map(|r| if r == 0 { 0.0 } else { data.get(&Bipartition::new((1 << r) - 1, n).unwrap()) }).collect();
        let a = links_from_radial_profile(n, &prof).unwrap();
        for (x, y) in a.values().iter().zip(j0.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_profile_and_cft() {
        let n = 12;
        let ti = LinkMatrix::from_fn(n, |i, j| 0.1 / ring_distance(i, j, n) as f64).unwrap();
        assert!(radial_profile(&ti, Boundary::Periodic).iter().all(|p| p.std < 1e-15));
        let open = radial_profile(&ti, Boundary::Open);
        assert_eq!(open.len(), 11);
        assert!((open[6].mean - 0.1 / 5.0).abs() < 1e-15);

        let model = LinkMatrix::from_fn(n, |i, j| (1.0 / 6.0) / ((i as f64 - j as f64).powi(2))).unwrap();
        let fit = cft_profile_fit(&model, Boundary::Open).unwrap();
        assert!((fit.central_charge - 1.0).abs() < 1e-12 && fit.residual < 1e-12 && fit.reliable);
        let chord = |r: usize| n as f64 * (core::f64::consts::PI * r as f64 / n as f64).sin() / core::f64::consts::PI;
        let ring = LinkMatrix::from_fn(n, |i, j| (0.5 / 6.0) / chord(ring_distance(i, j, n)).powi(2)).unwrap();
        let fit = cft_profile_fit(&ring, Boundary::Periodic).unwrap();
        assert!((fit.central_charge - 0.5).abs() < 1e-12);

        let flat = LinkMatrix::from_fn(n, |_, _| 0.2).unwrap();
        assert!(!cft_profile_fit(&flat, Boundary::Open).unwrap().reliable);
        let neg = LinkMatrix::from_fn(n, |_, _| -0.2).unwrap();
        assert!(matches!(cft_profile_fit(&neg, Boundary::Open), Err(Error::FitFailure(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn arc_synthesis_roundtrip(n in 3usize..=12, seed in any::<u64>()) {
            let j0 = random_links(n, seed);
            let arc = |i: usize, j: usize| {
                let m = partitions::arc_mask(i, j, n);
                Some(predict_entropy(&j0, &Bipartition::new(m, n).unwrap()))
            };
            let j = links_from_block_entropies(n, arc).unwrap();
            for (a, b) in j.values().iter().zip(j0.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn representation_identities(n in 3usize..=8, seed in any::<u64>()) {
            let j = random_links(n, seed);
            let full = (1u32 << n) - 1;
            let s = |m: u32| if m == 0 || m == full { 0.0 } else { predict_entropy(&j, &Bipartition::new(m, n).unwrap()) };
            for a in 1..full {
                prop_assert!((s(a) - s(full & !a)).abs() < 1e-12);
                let p = Bipartition::new(a, n).unwrap();
                let c: f64 = contour_from_links(&j, &p).iter().sum();
                prop_assert!((c - s(a)).abs() < 1e-12);
                prop_assert!(contour_from_links(&j, &p).iter().all(|&x| x >= 0.0));
            }
            for a in 1..full {
                let rest = full & !a;
                let mut b = rest;
                while b != 0 {
                    let i = mutual_information_links(&j, a, b).unwrap();
                    prop_assert!((i - (s(a) + s(b) - s(a | b))).abs() < 1e-12);
                    prop_assert!(i >= 0.0);
                    // strong subadditivity with C the remaining sites in some subset
                    let rest2 = full & !(a | b);
                    let mut c = rest2;
                    while c != 0 {
                        prop_assert!(s(a | b) + s(b | c) >= s(a | b | c) + s(b) - 1e-12);
                        c = (c - 1) & rest2;
                    }
                    b = (b - 1) & rest;
                }
            }
        }

        #[test]
        fn accumulation_is_order_independent(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let n = 6;
            let data = synth_data(&random_links(n, seed));
            let mut parts = partitions::canonical_subsystems(n).unwrap();
            let a = accumulate_normal_system(&data, &parts).unwrap();
            parts.shuffle(&mut crate::rng::seeded(seed));
            let b = accumulate_normal_system(&data, &parts).unwrap();
            prop_assert_eq!(a.matrix(), b.matrix());
            prop_assert!((a.rhs() - b.rhs()).amax() < 1e-12);
            // sharded accumulation merges to the same system
            let (left, right) = parts.split_at(13);
            let mut c = accumulate_normal_system(&data, left).unwrap();
            c.merge(&accumulate_normal_system(&data, right).unwrap()).unwrap();
            prop_assert_eq!(c.matrix(), a.matrix());
        }

        #[test]
        fn exact_links_are_recovered(n in 3usize..=8, seed in any::<u64>()) {
            let j0 = random_links(n, seed);
            let data = synth_data(&j0);
            let j = fit_optimal(&data, false).unwrap();
            for (a, b) in j.values().iter().zip(j0.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let k = fit_optimal(&data, true).unwrap();
            for (a, b) in k.values().iter().zip(j0.values()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
