//! Spin-chain Hamiltonians and exact ground states.
//!
//! Local bases are ordered by decreasing `S^z`: for spin-1/2 index 0 is up
//! (`sigma^z = +1`), for spin-1 the indices 0, 1, 2 are `m = +1, 0, -1`.
//! All three models are real symmetric in this basis, so Hamiltonians are
//! stored as real CSR matrices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, LanczosOptions};
use crate::partitions::Bipartition;
use crate::statecore::{self, PureState};
use crate::Boundary;

pub use crate::linkfit::{radial_profile, RadialPoint};

/// How `|i - j|` is measured in long-range couplings on a ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceRule {
    /// `min(|i - j|, N - |i - j|)`.
    Ring,
    /// The plain label difference `|i - j|`.
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinModel {
    /// `-sum sigma^x_i sigma^x_{i+1} - h sum sigma^z_i`.
    Itf { h: f64 },
    /// `sum_{i<j} (t_x s^x s^x + t_y s^y s^y + t_z s^z s^z) / dist^alpha`
    /// with Pauli matrices.
    Xyz { tx: f64, ty: f64, tz: f64, alpha: f64, distance: DistanceRule },
    /// Spin-1 `sum cos(theta) S.S + sin(theta) (S.S)^2` over bonds.
    Bbh { theta: f64 },
}

impl SpinModel {
    pub fn local_dim(&self) -> usize {
        match self {
            SpinModel::Bbh { .. } => 3,
            _ => 2,
        }
    }

    fn conserves_sz(&self) -> bool {
        match *self {
            SpinModel::Itf { .. } => false,
            SpinModel::Xyz { tx, ty, .. } => tx == ty,
            SpinModel::Bbh { .. } => true,
        }
    }
}

/// Restriction of the Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Full,
    /// Fixed `2 S^z_total`.
    TwiceSz(i32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinChainSpec {
    pub model: SpinModel,
    pub n_sites: usize,
    pub boundary: Boundary,
    pub sector: Sector,
}

/// Largest chains accepted for spin-1/2 and spin-1 models.
pub const MAX_SITES_HALF: usize = 14;
pub const MAX_SITES_ONE: usize = 10;

impl SpinChainSpec {
    /// Periodic or open chain; BBH chains default to the `S^z = 0` sector.
    pub fn new(model: SpinModel, n_sites: usize, boundary: Boundary) -> Self {
        let sector = match model {
            SpinModel::Bbh { .. } => Sector::TwiceSz(0),
            _ => Sector::Full,
        };
        Self { model, n_sites, boundary, sector }
    }

    pub fn validate(&self) -> Result<()> {
        let max = if self.model.local_dim() == 2 { MAX_SITES_HALF } else { MAX_SITES_ONE };
        if self.n_sites < 2 || self.n_sites > max {
            return Err(Error::Capacity(format!("{} sites, supported 2..={max} for this model", self.n_sites)));
        }
        if let SpinModel::Xyz { alpha, .. } = self.model {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!("interaction exponent {alpha} must be positive")));
            }
        }
        if self.sector != Sector::Full && !self.model.conserves_sz() {
            return Err(Error::InvalidParameter("model does not conserve S^z; use the full space".into()));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds; a two-site ring has a single bond.
    fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        let mut b: Vec<(usize, usize)> = (1..n).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && n > 2 {
            b.push((n, 1));
        }
        b
    }
}

/// Real symmetric matrix in compressed-row form, possibly on a subspace of
/// the `d^N` product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    local_dim: usize,
    n_sites: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Full-space index of each basis state when restricted to a sector.
    basis: Option<Vec<usize>>,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Product-basis indices of the sector states, if restricted.
    pub fn basis(&self) -> Option<&[usize]> {
        self.basis.as_deref()
    }

    /// `(row, col, value)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// Embed a sector vector into the full product space.
    fn embed(&self, v: &[f64]) -> Vec<Complex64> {
        let full = self.local_dim.pow(self.n_sites as u32);
        match &self.basis {
            None => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Some(b) => {
                let mut out = vec![Complex64::new(0.0, 0.0); full];
                for (&idx, &x) in b.iter().zip(v) {
                    out[idx] = Complex64::new(x, 0.0);
                }
                out
            }
        }
    }
}

/// Two-site operator as `(in, out, value)` over composite index
/// `s_i + d s_j`.
type TwoSite = Vec<(usize, usize, f64)>;

fn pauli_terms(tx: f64, ty: f64, tz: f64) -> TwoSite {
    // basis (uu, du, ud, dd) with index s_i + 2 s_j, up = 0
    let mut t = Vec::new();
    let z = [1.0, -1.0];
    for a in 0..4usize {
        let (si, sj) = (a % 2, a / 2);
        t.push((a, a, tz * z[si] * z[sj]));
        let b = (1 - si) + 2 * (1 - sj);
        // sigma^y sigma^y flips both spins with (i)(i) = -1 on parallel pairs
        let yy = if si == sj { -1.0 } else { 1.0 };
        t.push((a, b, tx + ty * yy));
    }
    t
}

fn spin_one_dot() -> DMatrix<f64> {
    // S.S = Sz Sz + (S+ S- + S- S+) / 2 on index s_i + 3 s_j
    let m = [1.0, 0.0, -1.0];
    let mut op = DMatrix::zeros(9, 9);
    for a in 0..9usize {
        let (si, sj) = (a % 3, a / 3);
        op[(a, a)] += m[si] * m[sj];
        // S+ raises m: index decreases by 1, matrix element sqrt 2 for spin 1
        if si > 0 && sj < 2 {
            let b = (si - 1) + 3 * (sj + 1);
            op[(b, a)] += 0.5 * 2.0;
        }
        if si < 2 && sj > 0 {
            let b = (si + 1) + 3 * (sj - 1);
            op[(b, a)] += 0.5 * 2.0;
        }
    }
    op
}

fn bbh_terms(theta: f64) -> TwoSite {
    let s = spin_one_dot();
    let op = &s * theta.cos() + (&s * &s) * theta.sin();
    let mut t = Vec::new();
    for a in 0..9 {
        for b in 0..9 {
            if op[(b, a)] != 0.0 {
                t.push((a, b, op[(b, a)]));
            }
        }
    }
    t
}

fn twice_sz(mut idx: usize, d: usize, n: usize) -> i32 {
    let mut m = 0i32;
    for _ in 0..n {
        m += (d - 1) as i32 - 2 * (idx % d) as i32;
        idx /= d;
    }
    m
}

/// Assemble the Hamiltonian of `spec` (restricted to its sector).
pub fn build_hamiltonian(spec: &SpinChainSpec) -> Result<SparseHamiltonian> {
    spec.validate()?;
    let n = spec.n_sites;
    let d = spec.model.local_dim();
    let full = d.pow(n as u32);

    let mut pairs: Vec<(usize, usize, f64, &TwoSite)> = Vec::new();
    let mut field: Vec<f64> = vec![0.0; d];
    let itf_bond;
    let xyz_op;
    let bbh_op;
    match spec.model {
        SpinModel::Itf { h } => {
            itf_bond = pauli_terms(-1.0, 0.0, 0.0);
            for (i, j) in spec.bonds() {
                pairs.push((i, j, 1.0, &itf_bond));
            }
            field = vec![-h, h];
        }
        SpinModel::Xyz { tx, ty, tz, alpha, distance } => {
            xyz_op = pauli_terms(tx, ty, tz);
            for i in 1..n {
                for j in i + 1..=n {
                    let label = j - i;
                    let dist = match (spec.boundary, distance) {
                        (Boundary::Periodic, DistanceRule::Ring) => label.min(n - label),
                        _ => label,
                    };
                    pairs.push((i, j, (dist as f64).powf(-alpha), &xyz_op));
                }
            }
        }
        SpinModel::Bbh { theta } => {
            bbh_op = bbh_terms(theta);
            for (i, j) in spec.bonds() {
                pairs.push((i, j, 1.0, &bbh_op));
            }
        }
    }

    let basis: Option<Vec<usize>> = match spec.sector {
        Sector::Full => None,
        Sector::TwiceSz(m) => Some((0..full).filter(|&idx| twice_sz(idx, d, n) == m).collect()),
    };
    let dim = basis.as_ref().map_or(full, |b| b.len());
    if dim == 0 {
        return Err(Error::InvalidParameter("empty symmetry sector".into()));
    }
    let lookup: Option<Vec<u32>> = basis.as_ref().map(|b| {
        let mut l = vec![u32::MAX; full];
        for (k, &idx) in b.iter().enumerate() {
            l[idx] = k as u32;
        }
        l
    });
    let pw: Vec<usize> = (0..n).map(|s| d.pow(s as u32)).collect();

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::new();
    for r in 0..dim {
        let idx = basis.as_ref().map_or(r, |b| b[r]);
        row.clear();
        let mut diag = 0.0;
        for s in 0..n {
            diag += field[idx / pw[s] % d];
        }
        for &(i, j, coef, op) in &pairs {
            let (si, sj) = (idx / pw[i - 1] % d, idx / pw[j - 1] % d);
            let a = si + d * sj;
            for &(inp, out, v) in op.iter() {
                if inp != a || v == 0.0 {
                    continue;
                }
                let (ti, tj) = (out % d, out / d);
                let target = idx - si * pw[i - 1] - sj * pw[j - 1] + ti * pw[i - 1] + tj * pw[j - 1];
                if target == idx {
                    diag += coef * v;
                } else {
                    // H is symmetric, so <target|H|idx> is the (target, idx) entry
                    let c = match &lookup {
                        None => target,
                        Some(l) => {
                            let k = l[target];
                            if k == u32::MAX {
                                return Err(Error::InvalidParameter("operator leaves the symmetry sector".into()));
                            }
                            k as usize
                        }
                    };
                    row.push((c, coef * v));
                }
            }
        }
        row.push((r, diag));
        row.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in row.iter() {
            if last == Some(c) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                last = Some(c);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian { local_dim: d, n_sites: n, row_ptr, cols, vals, basis })
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Matrices up to this dimension are diagonalized densely.
    pub dense_threshold: usize,
    /// Minimum gap to the first excited level.
    pub degeneracy_tol: f64,
    pub lanczos: LanczosOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { dense_threshold: 512, degeneracy_tol: 1e-8, lanczos: LanczosOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    /// Distance to the next level within the solved space.
    pub gap: f64,
    pub state: PureState,
}

/// Lowest eigenvector, with the largest-magnitude amplitude made positive.
pub fn ground_state(h: &SparseHamiltonian, opts: &SolverOptions) -> Result<GroundState> {
    let dim = h.dim();
    let (e0, e1, mut v) = if dim <= opts.dense_threshold {
        let (vals, vecs) = linalg::symmetric_eigen(h.to_dense());
        let e1 = vals.get(1).copied().unwrap_or(f64::INFINITY);
        (vals[0], e1, vecs.column(0).iter().copied().collect::<Vec<f64>>())
    } else {
        let mv = |x: &[f64], y: &mut [f64]| h.matvec(x, y);
        let (e0, v0) = linalg::lanczos_lowest(dim, mv, &[], &opts.lanczos)?;
        let (e1, _) = linalg::lanczos_lowest(dim, mv, core::slice::from_ref(&v0), &opts.lanczos)?;
        (e0, e1, v0)
    };
    let gap = e1 - e0;
    if gap < opts.degeneracy_tol {
        return Err(Error::DegenerateGroundState { gap, tol: opts.degeneracy_tol });
    }
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let state = PureState::normalized(h.embed(&v), h.local_dim, h.n_sites)?;
    Ok(GroundState { energy: e0, gap, state })
}

/// Build and solve in one step.
pub fn solve(spec: &SpinChainSpec, opts: &SolverOptions) -> Result<GroundState> {
    ground_state(&build_hamiltonian(spec)?, opts)
}

/// `I(i:j) = S_i + S_j - S_ij`.
pub fn pair_mutual_information(psi: &PureState, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidLink { i, j });
    }
    let n = psi.n_sites();
    if i == 0 || j == 0 || i > n || j > n {
        return Err(Error::InvalidLink { i, j });
    }
    statecore::mutual_information(psi, 1 << (i - 1), 1 << (j - 1))
}

/// Negativity of the two-site reduced state of sites `i < j`.
pub fn pair_negativity(psi: &PureState, i: usize, j: usize) -> Result<f64> {
    let p = Bipartition::from_sites(&[i, j], psi.n_sites())?;
    let rho = statecore::reduced_density_matrix(psi, &p)?;
    statecore::negativity(&rho, 1)
}
