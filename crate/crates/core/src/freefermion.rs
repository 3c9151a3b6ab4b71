//! Slater-determinant ground states of hopping chains.
//!
//! Entropies of Gaussian states follow from the correlation matrix
//! `C_ij = <c_i^dagger c_j>`: for a block `A`, `S_A = sum_p H2(nu_p)` over the
//! eigenvalues of the submatrix `C_A`. All hopping models here are real, so
//! `C` is a real symmetric projector.
//!
//! The [`fock`] submodule rebuilds the same states in the full Fock space and
//! serves as a brute-force oracle for small chains.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, binary_entropy};
use crate::linkfit::LinkMatrix;
use crate::partitions::{self, Bipartition};
use crate::statecore::{EntropyData, EntropyOracle};
use crate::Boundary;

/// Largest chain accepted by [`full_entropy_data_ff`].
pub const MAX_FULL_DATA_SITES: usize = 24;
/// Gap below which the Fermi level counts as degenerate.
pub const FERMI_GAP_TOL: f64 = 1e-10;
/// Matching window for the nontrivial mode of `C` restricted to the
/// complement of one site.
pub const MODE_TOL: f64 = 1e-6;
pub const MODE_EDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HoppingPattern {
    /// Every bond has amplitude `t`.
    Uniform { t: f64 },
    /// Bond `(i, i+1)` has amplitude `1 + (-1)^i delta`, `i` starting at 1.
    Dimerized { delta: f64 },
}

/// `H = -sum_i t_{i,i+1} (c_i^dagger c_{i+1} + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoppingModel {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub pattern: HoppingPattern,
    /// Number of occupied modes; `None` means `N / 2`.
    pub filling: Option<usize>,
}

impl HoppingModel {
    pub fn new(n_sites: usize, boundary: Boundary, pattern: HoppingPattern) -> Self {
        Self { n_sites, boundary, pattern, filling: None }
    }

    pub fn filling(&self) -> usize {
        self.filling.unwrap_or(self.n_sites / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if !(2..=partitions::MAX_SITES * 4).contains(&n) {
            return Err(Error::InvalidSize(format!("{n} sites")));
        }
        if self.filling() > n {
            return Err(Error::InvalidParameter(format!("filling {} exceeds {n} sites", self.filling())));
        }
        match self.pattern {
            HoppingPattern::Uniform { .. } if self.boundary == Boundary::Periodic && n % 4 != 2 => Err(
                Error::InvalidParameter(format!("uniform periodic chain needs N = 2 mod 4, got {n}")),
            ),
            HoppingPattern::Dimerized { delta } if !(0.0..=1.0).contains(&delta) => {
                Err(Error::InvalidParameter(format!("dimerization {delta} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Amplitude of bond `(i, i+1)`, 1-based; bond `N` closes the ring.
    pub fn bond(&self, i: usize) -> f64 {
        match self.pattern {
            HoppingPattern::Uniform { t } => t,
            HoppingPattern::Dimerized { delta } => 1.0 + if i % 2 == 0 { delta } else { -delta },
        }
    }

    /// Single-particle Hamiltonian `h = -T`.
    pub fn single_particle_hamiltonian(&self) -> DMatrix<f64> {
        let n = self.n_sites;
        let mut h = DMatrix::zeros(n, n);
        let bonds = match self.boundary {
            Boundary::Open => n - 1,
            Boundary::Periodic => n,
        };
        for i in 1..=bonds {
            let j = i % n + 1;
            h[(i - 1, j - 1)] -= self.bond(i);
            h[(j - 1, i - 1)] -= self.bond(i);
        }
        h
    }
}

/// A Slater determinant: occupied modes (rows of `u`, length `N`) and the
/// correlation matrix `C = U^T U`.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionState {
    u: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl FermionState {
    /// From orthonormal occupied modes, one per row.
    pub fn from_modes(u: DMatrix<f64>) -> Result<Self> {
        let f = u.nrows();
        let gram = &u * u.transpose();
        let defect = (gram - DMatrix::identity(f, f)).amax();
        if defect > 1e-10 {
            return Err(Error::NumericInput(format!("occupied modes are not orthonormal (defect {defect:e})")));
        }
        let c = u.transpose() * &u;
        Ok(Self { u, c })
    }

    pub fn n_sites(&self) -> usize {
        self.c.nrows()
    }

    pub fn filling(&self) -> usize {
        self.u.nrows()
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.c
    }

    fn sub(&self, sites: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(sites.len(), sites.len(), |r, k| self.c[(sites[r] - 1, sites[k] - 1)])
    }
}

impl EntropyOracle for FermionState {
    fn n_sites(&self) -> usize {
        self.c.nrows()
    }

    fn entropy(&self, p: &Bipartition) -> Result<f64> {
        block_entropy_ff(self, p)
    }
}

/// Fill the lowest single-particle levels.
pub fn ground_state_correlation(m: &HoppingModel) -> Result<FermionState> {
    m.validate()?;
    let f = m.filling();
    let (e, v) = linalg::symmetric_eigen(m.single_particle_hamiltonian());
    if f > 0 && f < m.n_sites {
        let gap = e[f] - e[f - 1];
        if gap < FERMI_GAP_TOL {
            return Err(Error::FermiDegeneracy { gap });
        }
    }
    let u = DMatrix::from_fn(f, m.n_sites, |k, i| v[(i, k)]);
    FermionState::from_modes(u)
}

/// `sum_p H2(nu_p)` over the spectrum of `C_A`.
pub fn block_entropy_ff(fs: &FermionState, p: &Bipartition) -> Result<f64> {
    if p.n_sites() != fs.n_sites() {
        return Err(Error::InvalidPartition { mask: p.mask() as u64, n_sites: fs.n_sites() });
    }
    // the smaller side has the same nontrivial spectrum
    let sites = if p.size() <= fs.n_sites() / 2 { p.sites() } else { p.complement().sites() };
    Ok(linalg::symmetric_eigenvalues(fs.sub(&sites)).iter().map(|&nu| binary_entropy(nu)).sum())
}

/// Entropies of every canonical bipartition.
pub fn full_entropy_data_ff(fs: &FermionState) -> Result<EntropyData> {
    if fs.n_sites() > MAX_FULL_DATA_SITES {
        return Err(Error::Capacity(format!("{} sites exceed {}", fs.n_sites(), MAX_FULL_DATA_SITES)));
    }
    EntropyData::from_oracle(fs)
}

/// Per-site contour `s_A(i) = sum_p H2(nu_p) |W_ip|^2` over the sites of
/// `A` in ascending order, `W` the eigenvectors of `C_A`.
pub fn contour_ff(fs: &FermionState, p: &Bipartition) -> Result<Vec<f64>> {
    if p.n_sites() != fs.n_sites() {
        return Err(Error::InvalidPartition { mask: p.mask() as u64, n_sites: fs.n_sites() });
    }
    let sites = p.sites();
    let (nu, w) = linalg::symmetric_eigen(fs.sub(&sites));
    Ok((0..sites.len())
        .map(|i| nu.iter().enumerate().map(|(k, &v)| binary_entropy(v) * w[(i, k)].powi(2)).sum())
        .collect())
}

/// Links from single-site partitions:
/// `J_ij = (H2(C_ii) |B_ij|^2 + H2(C_jj) |B_ji|^2) / 2`, with `B_i` the
/// eigenvector of `C` restricted to all sites but `i` whose eigenvalue is
/// `1 - C_ii`. Sites with `C_ii` in `{0, 1}` contribute nothing.
pub fn ff_link_approx(fs: &FermionState) -> Result<LinkMatrix> {
    let n = fs.n_sites();
    // weighted rows H2(C_ii) |B_ij|^2
    let mut rows = DMatrix::<f64>::zeros(n, n);
    for i in 1..=n {
        let cii = fs.c[(i - 1, i - 1)];
        let h = binary_entropy(cii);
        if h == 0.0 {
            continue;
        }
        let others: Vec<usize> = (1..=n).filter(|&s| s != i).collect();
        let (vals, vecs) = linalg::symmetric_eigen(fs.sub(&others));
        let target = 1.0 - cii;
        let hits: Vec<usize> = (0..vals.len())
            .filter(|&k| (vals[k] - target).abs() < MODE_TOL && vals[k].min(1.0 - vals[k]) > MODE_EDGE)
            .collect();
        if hits.len() != 1 {
            return Err(Error::AmbiguousMode { site: i, candidates: hits.iter().map(|&k| vals[k]).collect() });
        }
        for (r, &j) in others.iter().enumerate() {
            rows[(i - 1, j - 1)] = h * vecs[(r, hits[0])].powi(2);
        }
    }
    LinkMatrix::from_fn(n, |i, j| 0.5 * (rows[(i - 1, j - 1)] + rows[(j - 1, i - 1)]))
}

/// Slater determinants in the full `2^N` Fock space, for cross-checks.
pub mod fock {
    use super::*;
    use crate::statecore::PureState;
    use num_complex::Complex64;

    /// Largest chain for the Fock-space constructions.
    pub const MAX_SITES: usize = 16;

    fn det_columns(u: &DMatrix<f64>, cols: &[usize]) -> f64 {
        let f = u.nrows();
        if f == 0 {
            return 1.0;
        }
        DMatrix::from_fn(f, f, |r, k| u[(r, cols[k])]).determinant()
    }

    fn check(fs: &FermionState) -> Result<()> {
        if fs.n_sites() > MAX_SITES {
            return Err(Error::Capacity(format!("{} sites exceed {}", fs.n_sites(), MAX_SITES)));
        }
        Ok(())
    }

    /// The state `prod_k (sum_i U_ki c_i^dagger) |0>` in the occupation basis
    /// with creation operators ordered by ascending site (Jordan-Wigner
    /// order); site `i` occupied sets bit `i - 1`.
    pub fn slater_state(fs: &FermionState) -> Result<PureState> {
        check(fs)?;
        let n = fs.n_sites();
        let f = fs.filling();
        let mut amps = alloc::vec![Complex64::new(0.0, 0.0); 1 << n];
        for (idx, a) in amps.iter_mut().enumerate() {
            if idx.count_ones() as usize == f {
                let occ: Vec<usize> = (0..n).filter(|s| idx >> s & 1 == 1).collect();
                *a = Complex64::new(det_columns(&fs.u, &occ), 0.0);
            }
        }
        PureState::normalized(amps, 2, n)
    }

    /// Entropy of the fermionic reduced state of the modes in `A`.
    ///
    /// Modes are reordered so that those of `A` come first; the amplitude of
    /// the reordered configuration is the determinant over the occupied
    /// columns in that order, which carries the fermionic sign. The partial
    /// trace over the trailing modes is then an ordinary tensor trace.
    pub fn fermionic_entropy(fs: &FermionState, p: &Bipartition) -> Result<f64> {
        check(fs)?;
        let a: Vec<usize> = p.sites().iter().map(|s| s - 1).collect();
        let b: Vec<usize> = p.complement().sites().iter().map(|s| s - 1).collect();
        let f = fs.filling();
        let mut psi = DMatrix::<f64>::zeros(1 << a.len(), 1 << b.len());
        for ra in 0..1usize << a.len() {
            let na = ra.count_ones() as usize;
            if na > f {
                continue;
            }
            for cb in 0..1usize << b.len() {
                if na + cb.count_ones() as usize != f {
                    continue;
                }
                let mut cols: Vec<usize> = (0..a.len()).filter(|t| ra >> t & 1 == 1).map(|t| a[t]).collect();
                cols.extend((0..b.len()).filter(|t| cb >> t & 1 == 1).map(|t| b[t]));
                psi[(ra, cb)] = det_columns(&fs.u, &cols);
            }
        }
        let g = if psi.nrows() <= psi.ncols() { &psi * psi.transpose() } else { psi.transpose() * &psi };
        linalg::spectrum_entropy(&linalg::symmetric_eigenvalues(g))
    }

    /// `<c_i^dagger c_j>` evaluated on the Fock-space state.
    pub fn correlation(fs: &FermionState, i: usize, j: usize) -> Result<f64> {
        let psi = slater_state(fs)?;
        let amps = psi.amplitudes();
        let (i0, j0) = (i - 1, j - 1);
        let mut acc = 0.0;
        for (idx, z) in amps.iter().enumerate() {
            // c_i^dagger c_j |idx>
            if idx >> j0 & 1 == 0 {
                continue;
            }
            let mid = idx & !(1 << j0);
            if mid >> i0 & 1 == 1 {
                continue;
            }
            let out = mid | 1 << i0;
            let sign_j = (idx & ((1 << j0) - 1)).count_ones();
            let sign_i = (mid & ((1 << i0) - 1)).count_ones();
            let sign = if (sign_i + sign_j) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (amps[out].conj() * z).re;
        }
        Ok(acc)
    }
}
