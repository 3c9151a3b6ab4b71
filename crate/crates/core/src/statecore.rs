//! Dense pure states and their exact entanglement data.
//!
//! Amplitudes are stored with site 1 as the least significant digit:
//! basis index `sum_i s_i d^(i-1)`. Reduced density matrices keep the same
//! convention over the retained sites in ascending order.
//!
//! Partial traces never form `|psi><psi|`. The amplitudes are reshaped into
//! a `d^|A| x d^|B|` matrix `Psi` and entropies come from the smaller of the
//! two Gram matrices `Psi Psi^dagger` and `Psi^dagger Psi`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;
use crate::partitions::{self, Bipartition};

/// Largest state dimension accepted by [`full_entropy_data`].
pub const MAX_DENSE_DIM: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
    local_dim: usize,
    n_sites: usize,
}

impl PureState {
    /// Wrap normalized amplitudes.
    pub fn new(amps: Vec<Complex64>, local_dim: usize, n_sites: usize) -> Result<Self> {
        check_dims(amps.len(), local_dim, n_sites)?;
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::NumericInput(format!("squared norm {norm2} differs from 1")));
        }
        Ok(Self { amps, local_dim, n_sites })
    }

    /// Normalize and wrap.
    pub fn normalized(mut amps: Vec<Complex64>, local_dim: usize, n_sites: usize) -> Result<Self> {
        check_dims(amps.len(), local_dim, n_sites)?;
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NumericInput("state has zero or non-finite norm".into()));
        }
        amps.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { amps, local_dim, n_sites })
    }

    /// Normalize real amplitudes.
    pub fn from_real(amps: &[f64], local_dim: usize, n_sites: usize) -> Result<Self> {
        Self::normalized(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect(), local_dim, n_sites)
    }

    /// Tensor product of single-site states, site 1 first.
    pub fn product(sites: &[Vec<Complex64>]) -> Result<Self> {
        let d = sites.first().map_or(0, |s| s.len());
        if sites.iter().any(|s| s.len() != d) {
            return Err(Error::Shape("single-site states of different dimension".into()));
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for s in sites {
            let mut next = Vec::with_capacity(amps.len() * d);
            for &c in s {
                next.extend(amps.iter().map(|&a| a * c));
            }
            amps = next;
        }
        Self::normalized(amps, d, sites.len())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn is_real(&self) -> bool {
        self.amps.iter().all(|z| z.im == 0.0)
    }

    /// Entanglement entropy of `A` in nats, via the smaller Gram matrix.
    pub fn entropy_of(&self, p: &Bipartition) -> Result<f64> {
        self.check_partition(p)?;
        let split = Split::new(self.local_dim, self.n_sites, p.mask());
        let eigs = if self.is_real() {
            let psi = split.reshape(&self.amps, |z| z.re);
            let g = if psi.nrows() <= psi.ncols() { &psi * psi.transpose() } else { psi.transpose() * &psi };
            linalg::symmetric_eigenvalues(g)
        } else {
            let psi = split.reshape(&self.amps, |z| z);
            let g = if psi.nrows() <= psi.ncols() { &psi * psi.adjoint() } else { psi.adjoint() * &psi };
            linalg::hermitian_eigenvalues(g)
        };
        linalg::spectrum_entropy(&eigs)
    }

    fn check_partition(&self, p: &Bipartition) -> Result<()> {
        if p.n_sites() != self.n_sites {
            return Err(Error::InvalidPartition { mask: p.mask() as u64, n_sites: self.n_sites });
        }
        Ok(())
    }
}

fn check_dims(len: usize, d: usize, n: usize) -> Result<()> {
    if d < 2 || n < 1 {
        return Err(Error::InvalidSize(format!("local dimension {d}, {n} sites")));
    }
    let expected = d.checked_pow(n as u32).ok_or_else(|| Error::Capacity(format!("{d}^{n} overflows")))?;
    if len != expected {
        return Err(Error::Shape(format!("{len} amplitudes, expected {d}^{n} = {expected}")));
    }
    Ok(())
}

/// Index maps from a full basis index to (row in A, column in B).
///
/// The full index is cut into a low and a high half of the digits; each half
/// contributes independently to the row and column, so two small tables
/// replace per-element digit decomposition.
struct Split {
    lo_size: usize,
    lo: Vec<(usize, usize)>,
    hi: Vec<(usize, usize)>,
    rows: usize,
    cols: usize,
}

impl Split {
    fn new(d: usize, n: usize, mask: u32) -> Self {
        let lo_digits = n / 2;
        let lo_size = d.pow(lo_digits as u32);
        let hi_size = d.pow((n - lo_digits) as u32);
        // strides of each site inside A (row) or B (column)
        let mut stride = vec![(0usize, 0usize); n];
        let (mut ra, mut rb) = (1usize, 1usize);
        for (s, st) in stride.iter_mut().enumerate() {
            if mask >> s & 1 == 1 {
                *st = (ra, 0);
                ra *= d;
            } else {
                *st = (0, rb);
                rb *= d;
            }
        }
        let table = |first: usize, count: usize, size: usize| -> Vec<(usize, usize)> {
            (0..size)
                .map(|mut idx| {
                    let (mut r, mut c) = (0, 0);
                    for s in first..first + count {
                        let digit = idx % d;
                        idx /= d;
                        r += digit * stride[s].0;
                        c += digit * stride[s].1;
                    }
                    (r, c)
                })
                .collect()
        };
        let lo = table(0, lo_digits, lo_size);
        let hi = table(lo_digits, n - lo_digits, hi_size);
        Self { lo_size, lo, hi, rows: ra, cols: rb }
    }

    fn reshape<T, F>(&self, amps: &[Complex64], f: F) -> DMatrix<T>
    where
        T: nalgebra::Scalar + num_traits::Zero,
        F: Fn(Complex64) -> T,
    {
        let mut m = DMatrix::<T>::zeros(self.rows, self.cols);
        for (h, &(rh, ch)) in self.hi.iter().enumerate() {
            let base = h * self.lo_size;
            for (l, &(rl, cl)) in self.lo.iter().enumerate() {
                m[(rh + rl, ch + cl)] = f(amps[base + l]);
            }
        }
        m
    }
}

/// Hermitian, unit-trace density matrix over a list of tensor factors.
/// The first factor is the least significant digit of the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<Complex64>,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(elements: DMatrix<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let n = elements.nrows();
        if n != elements.ncols() || dims.iter().product::<usize>() != n {
            return Err(Error::Shape(format!(
                "{}x{} matrix with factor dimensions {:?}",
                n,
                elements.ncols(),
                dims
            )));
        }
        let herm = hermiticity_defect(&elements);
        if herm > 1e-12 {
            return Err(Error::NumericInput(format!("matrix is not Hermitian (defect {herm:e})")));
        }
        let tr: f64 = (0..n).map(|k| elements[(k, k)].re).sum();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::NumericInput(format!("trace {tr} differs from 1")));
        }
        Ok(Self { elements, dims })
    }

    pub fn elements(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(self.elements.clone())
    }
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// `rho_A = Tr_B |psi><psi|`, dimension `d^|A|`.
pub fn reduced_density_matrix(psi: &PureState, p: &Bipartition) -> Result<DensityMatrix> {
    psi.check_partition(p)?;
    let split = Split::new(psi.local_dim, psi.n_sites, p.mask());
    let m = split.reshape(&psi.amps, |z| z);
    let mut rho = &m * m.adjoint();
    // remove round-off asymmetry before validation
    let h = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    rho = h;
    DensityMatrix::new(rho, vec![psi.local_dim; p.size()])
}

/// `-Tr rho ln rho` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let herm = hermiticity_defect(&rho.elements);
    if herm > 1e-12 {
        return Err(Error::NumericInput(format!("matrix is not Hermitian (defect {herm:e})")));
    }
    linalg::spectrum_entropy(&rho.eigenvalues())
}

/// Entropies of all canonical bipartitions, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyData {
    n_sites: usize,
    values: Vec<f64>,
}

impl EntropyData {
    /// `values[k]` is the entropy of canonical mask `k + 1`.
    pub fn new(n_sites: usize, values: Vec<f64>) -> Result<Self> {
        if !(2..=partitions::MAX_SITES).contains(&n_sites) {
            return Err(Error::InvalidSize(format!("{n_sites} sites")));
        }
        if values.len() != partitions::n_canonical(n_sites) {
            return Err(Error::IncompleteData(format!(
                "{} entropies for {} canonical subsystems",
                values.len(),
                partitions::n_canonical(n_sites)
            )));
        }
        if let Some(v) = values.iter().find(|&&v| !(v >= -linalg::NEG_CLIP)) {
            return Err(Error::NumericInput(format!("entropy {v} is negative or not a number")));
        }
        Ok(Self { n_sites, values })
    }

    /// Evaluate an oracle on every canonical bipartition.
    pub fn from_oracle<O: EntropyOracle + ?Sized>(oracle: &O) -> Result<Self> {
        let n = oracle.n_sites();
        let values = partitions::canonical_subsystems(n)?
            .iter()
            .map(|p| oracle.entropy(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, values)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entropy of `p` or of its complement, whichever is canonical.
    pub fn get(&self, p: &Bipartition) -> f64 {
        self.values[p.index()]
    }

    /// Check the upper bound `min(|A|, N-|A|) ln d`.
    pub fn check_bounds(&self, local_dim: usize) -> Result<()> {
        let ln_d = (local_dim as f64).ln();
        for (k, &v) in self.values.iter().enumerate() {
            let size = (k + 1).count_ones() as usize;
            let bound = size.min(self.n_sites - size) as f64 * ln_d + 1e-9;
            if v > bound {
                return Err(Error::NumericInput(format!("entropy {v} of mask {:#x} exceeds {bound}", k + 1)));
            }
        }
        Ok(())
    }
}

/// Anything that can report the entanglement entropy of a bipartition.
pub trait EntropyOracle {
    fn n_sites(&self) -> usize;
    fn entropy(&self, p: &Bipartition) -> Result<f64>;
}

impl EntropyOracle for EntropyData {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn entropy(&self, p: &Bipartition) -> Result<f64> {
        if p.n_sites() != self.n_sites {
            return Err(Error::InvalidPartition { mask: p.mask() as u64, n_sites: self.n_sites });
        }
        Ok(self.get(p))
    }
}

impl EntropyOracle for PureState {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn entropy(&self, p: &Bipartition) -> Result<f64> {
        self.entropy_of(p)
    }
}

impl<T: EntropyOracle + ?Sized> EntropyOracle for &T {
    fn n_sites(&self) -> usize {
        (**self).n_sites()
    }

    fn entropy(&self, p: &Bipartition) -> Result<f64> {
        (**self).entropy(p)
    }
}

/// Oracle backed by a closure.
pub struct FnOracle<F> {
    n_sites: usize,
    f: F,
}

impl<F: Fn(&Bipartition) -> Result<f64>> FnOracle<F> {
    pub fn new(n_sites: usize, f: F) -> Self {
        Self { n_sites, f }
    }
}

impl<F: Fn(&Bipartition) -> Result<f64>> EntropyOracle for FnOracle<F> {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn entropy(&self, p: &Bipartition) -> Result<f64> {
        (self.f)(p)
    }
}

/// Entropies of every canonical bipartition of `psi`.
pub fn full_entropy_data(psi: &PureState) -> Result<EntropyData> {
    if psi.dim() > MAX_DENSE_DIM {
        return Err(Error::Capacity(format!("state dimension {} exceeds {}", psi.dim(), MAX_DENSE_DIM)));
    }
    EntropyData::from_oracle(psi)
}

/// `S_A + S_B - S_AB` for disjoint nonempty site masks.
pub fn mutual_information(psi: &PureState, a: u32, b: u32) -> Result<f64> {
    if a & b != 0 {
        return Err(Error::InvalidArgument(format!("masks {a:#x} and {b:#x} overlap")));
    }
    let n = psi.n_sites;
    let sa = psi.entropy_of(&Bipartition::new(a, n)?)?;
    let sb = psi.entropy_of(&Bipartition::new(b, n)?)?;
    let ab = a | b;
    let sab = if ab == partitions::full_mask(n) { 0.0 } else { psi.entropy_of(&Bipartition::new(ab, n)?)? };
    Ok(sa + sb - sab)
}

/// Haar-random state of `n_sites` qubits: i.i.d. standard complex Gaussian
/// amplitudes, normalized.
pub fn haar_random_state(n_sites: usize, seed: u64) -> Result<PureState> {
    if !(2..=partitions::MAX_SITES).contains(&n_sites) {
        return Err(Error::InvalidSize(format!("{n_sites} sites")));
    }
    let mut rng = crate::rng::seeded(seed);
    let amps = (0..1usize << n_sites).map(|_| crate::rng::complex_normal(&mut rng)).collect();
    PureState::normalized(amps, 2, n_sites)
}

/// Mean entropy of an `ell`-site block of a Haar-random qubit state,
/// `l ln 2 - 2^-(N - 2l + 1)` with `l = min(ell, N - ell)`.
pub fn page_law(ell: usize, n_sites: usize) -> Result<f64> {
    if n_sites < 2 || ell == 0 || ell >= n_sites {
        return Err(Error::InvalidParameter(format!("block size {ell} outside 1..{n_sites}")));
    }
    let l = ell.min(n_sites - ell);
    let e = (n_sites - 2 * l + 1) as i32;
    Ok(l as f64 * core::f64::consts::LN_2 - 2f64.powi(-e))
}

/// Product of singlets `(|01> - |10>)/sqrt 2` on disjoint site pairs;
/// unpaired sites are left in `|0>`.
pub fn singlet_product(n_sites: usize, pairs: &[(usize, usize)]) -> Result<PureState> {
    if !(2..=partitions::MAX_SITES).contains(&n_sites) {
        return Err(Error::InvalidSize(format!("{n_sites} sites")));
    }
    let mut used = 0u32;
    for &(i, j) in pairs {
        if i == j || !(1..=n_sites).contains(&i) || !(1..=n_sites).contains(&j) {
            return Err(Error::InvalidLink { i, j });
        }
        let bits = 1 << (i - 1) | 1 << (j - 1);
        if used & bits != 0 {
            return Err(Error::InvalidArgument(format!("site pair ({i}, {j}) overlaps another pair")));
        }
        used |= bits;
    }
    let amps = (0..1usize << n_sites)
        .map(|idx| {
            if idx & !(used as usize) != 0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut amp = 1.0;
            for &(i, j) in pairs {
                amp *= match (idx >> (i - 1) & 1, idx >> (j - 1) & 1) {
                    (0, 1) => 1.0,
                    (1, 0) => -1.0,
                    _ => 0.0,
                };
            }
            Complex64::new(amp, 0.0)
        })
        .collect();
    PureState::normalized(amps, 2, n_sites)
}

/// Singlets on `(1,2), (3,4), ...`; `n_sites` must be even.
pub fn dimer_state(n_sites: usize) -> Result<PureState> {
    if n_sites % 2 != 0 {
        return Err(Error::InvalidSize(format!("dimer state needs an even site count, got {n_sites}")));
    }
    let pairs: Vec<_> = (0..n_sites / 2).map(|k| (2 * k + 1, 2 * k + 2)).collect();
    singlet_product(n_sites, &pairs)
}

/// Singlets on mirror pairs `(i, N + 1 - i)`; `n_sites` must be even.
pub fn rainbow_state(n_sites: usize) -> Result<PureState> {
    if n_sites % 2 != 0 {
        return Err(Error::InvalidSize(format!("rainbow state needs an even site count, got {n_sites}")));
    }
    let pairs: Vec<_> = (1..=n_sites / 2).map(|i| (i, n_sites + 1 - i)).collect();
    singlet_product(n_sites, &pairs)
}

/// `(||rho^T_k||_1 - 1) / 2`, transposing tensor factor `factor`.
pub fn negativity(rho: &DensityMatrix, factor: usize) -> Result<f64> {
    let dims = &rho.dims;
    if factor >= dims.len() || dims.len() < 2 {
        return Err(Error::Shape(format!("factor {factor} of {} factors", dims.len())));
    }
    let n = rho.elements.nrows();
    let stride: usize = dims[..factor].iter().product();
    let d = dims[factor];
    let digit = |idx: usize| idx / stride % d;
    let pt = DMatrix::from_fn(n, n, |r, c| {
        let (dr, dc) = (digit(r), digit(c));
        let r2 = r - dr * stride + dc * stride;
        let c2 = c - dc * stride + dr * stride;
        rho.elements[(r2, c2)]
    });
    let trace_norm: f64 = linalg::hermitian_eigenvalues(pt).iter().map(|x| x.abs()).sum();
    Ok(((trace_norm - 1.0) / 2.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn singlet_state(n: usize, pairs: &[(usize, usize)]) -> PureState {
        singlet_product(n, pairs).unwrap()
    }

    /// Dense reference: rho_A from the full projector.
    fn brute_rdm(psi: &PureState, mask: u32) -> DMatrix<Complex64> {
        let n = psi.n_sites();
        let sites_a: Vec<usize> = (0..n).filter(|s| mask >> s & 1 == 1).collect();
        let dim_a = 1 << sites_a.len();
        let mut rho = DMatrix::<Complex64>::zeros(dim_a, dim_a);
        let amps = psi.amplitudes();
        let sub = |idx: usize| sites_a.iter().enumerate().map(|(t, &s)| (idx >> s & 1) << t).sum::<usize>();
        for x in 0..amps.len() {
            for y in 0..amps.len() {
                if (x ^ y) & !(mask as usize) == 0 {
                    rho[(sub(x), sub(y))] += amps[x] * amps[y].conj();
                }
            }
        }
        rho
    }

    #[test]
    fn rdm_examples() {
        let prod = PureState::new(vec![c(1.0), c(0.0), c(0.0), c(0.0)], 2, 2).unwrap();
        let a1 = Bipartition::from_sites(&[1], 2).unwrap();
        let rho = reduced_density_matrix(&prod, &a1).unwrap();
        assert_eq!(rho.elements(), &DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]));

        let bell = singlet_state(2, &[(1, 2)]);
        let rho = reduced_density_matrix(&bell, &a1).unwrap();
        assert!((rho.elements() - DMatrix::from_diagonal_element(2, 2, c(0.5))).norm() < 1e-15);
        assert!((von_neumann_entropy(&rho).unwrap() - LN_2).abs() < 1e-14);

        let mut ghz = vec![c(0.0); 16];
        ghz[0] = c(1.0);
        ghz[15] = c(1.0);
        let ghz = PureState::normalized(ghz, 2, 4).unwrap();
        let rho = reduced_density_matrix(&ghz, &Bipartition::from_sites(&[1, 2], 4).unwrap()).unwrap();
        let ev = rho.eigenvalues();
        let expect = [0.0, 0.0, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(reduced_density_matrix(&ghz, &Bipartition::from_sites(&[1], 3).unwrap()).is_err());
        assert!(Bipartition::new(0b1111, 4).is_err());
    }

    #[test]
    fn entropy_examples() {
        let diag = |v: &[f64]| {
            DensityMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| c(x)))), vec![v.len()])
                .unwrap()
        };
        assert_eq!(von_neumann_entropy(&diag(&[1.0, 0.0])).unwrap(), 0.0);
        assert!((von_neumann_entropy(&diag(&[0.5, 0.5])).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
        let t = 1.0 / 3.0;
        assert!((von_neumann_entropy(&diag(&[t, t, t])).unwrap() - 3f64.ln()).abs() < 1e-14);
        let skew = DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), c(0.0), c(0.5)]);
        assert!(matches!(DensityMatrix::new(skew, vec![2]), Err(Error::NumericInput(_))));
    }

    #[test]
    fn vbs_entropies_count_broken_singlets() {
        for (pairs, n) in [(vec![(1, 2), (3, 4)], 4), (vec![(1, 4), (2, 3)], 4), (vec![(1, 6), (2, 5), (3, 4)], 6)] {
            let psi = singlet_state(n, &pairs);
            let data = full_entropy_data(&psi).unwrap();
            for p in partitions::canonical_subsystems(n).unwrap() {
                let broken = pairs.iter().filter(|&&(i, j)| p.contains(i) != p.contains(j)).count();
                assert!((data.get(&p) - broken as f64 * LN_2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let mut rng = crate::rng::seeded(11);
        let sites: Vec<Vec<Complex64>> =
            (0..6).map(|_| vec![crate::rng::complex_normal(&mut rng), crate::rng::complex_normal(&mut rng)]).collect();
        let psi = PureState::product(&sites).unwrap();
        let data = full_entropy_data(&psi).unwrap();
        assert_eq!(data.values().len(), 31);
        assert!(data.values().iter().all(|s| s.abs() < 1e-10));
    }

    #[test]
    fn haar_examples() {
        let a = haar_random_state(6, 42).unwrap();
        let b = haar_random_state(6, 42).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        // mean single-site entropy over 20 states at N = 10
        let n = 10;
        let p = Bipartition::from_sites(&[1], n).unwrap();
        let mean: f64 = (0..20).map(|s| haar_random_state(n, s).unwrap().entropy_of(&p).unwrap()).sum::<f64>() / 20.0;
        assert!((mean - (LN_2 - 1.0 / 512.0)).abs() < 0.01, "{mean}");
    }

    #[test]
    fn page_law_examples() {
        assert!((page_law(5, 10).unwrap() - (5.0 * LN_2 - 0.5)).abs() < 1e-15);
        assert!((page_law(5, 10).unwrap() - 2.96574).abs() < 1e-5);
        assert!((page_law(1, 10).unwrap() - 0.69119).abs() < 1e-5);
        assert_eq!(page_law(9, 10).unwrap(), page_law(1, 10).unwrap());
        assert!(page_law(0, 10).is_err());
        assert!(page_law(10, 10).is_err());
    }

    #[test]
    fn negativity_examples() {
        let bell = singlet_state(2, &[(1, 2)]);
        let amps = bell.amplitudes().to_vec();
        let rho = DMatrix::from_fn(4, 4, |r, k| amps[r] * amps[k].conj());
        let rho = DensityMatrix::new(rho, vec![2, 2]).unwrap();
        assert!((negativity(&rho, 1).unwrap() - 0.5).abs() < 1e-14);
        assert!((negativity(&rho, 0).unwrap() - 0.5).abs() < 1e-14);

        let prod = reduced_density_matrix(&haar_product(3), &Bipartition::from_sites(&[1, 3], 3).unwrap()).unwrap();
        assert!(negativity(&prod, 1).unwrap() < 1e-12);
        assert!(matches!(negativity(&prod, 2), Err(Error::Shape(_))));
    }

    fn haar_product(n: usize) -> PureState {
        let mut rng = crate::rng::seeded(5);
        let sites: Vec<Vec<Complex64>> =
            (0..n).map(|_| vec![crate::rng::complex_normal(&mut rng), crate::rng::complex_normal(&mut rng)]).collect();
        PureState::product(&sites).unwrap()
    }

    #[test]
    fn page_law_matches_haar_ensemble() {
        let n = 10;
        let states: Vec<PureState> = (0..20).map(|s| haar_random_state(n, 100 + s).unwrap()).collect();
        for ell in 1..=5 {
            let p = Bipartition::new((1 << ell) - 1, n).unwrap();
            let mean = states.iter().map(|s| s.entropy_of(&p).unwrap()).sum::<f64>() / 20.0;
            assert!((mean - page_law(ell, n).unwrap()).abs() < 0.05, "ell {ell}: {mean}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rdm_matches_projector_trace(seed in any::<u64>(), raw in any::<u32>()) {
            let n = 5;
            let psi = haar_random_state(n, seed).unwrap();
            let mask = 1 + raw % 30;
            let p = Bipartition::new(mask, n).unwrap();
            let rho = reduced_density_matrix(&psi, &p).unwrap();
            prop_assert!((rho.elements() - brute_rdm(&psi, mask)).norm() < 1e-13);
            let s = von_neumann_entropy(&rho).unwrap();
            prop_assert!((s - psi.entropy_of(&p).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn entropy_inequalities(seed in any::<u64>()) {
            let n = 6;
            // real and complex random states exercise both paths
            let psi = if seed % 2 == 0 {
                haar_random_state(n, seed).unwrap()
            } else {
                let mut rng = crate::rng::seeded(seed);
                let v: Vec<f64> = (0..1 << n).map(|_| crate::rng::normal_pair(&mut rng).0).collect();
                PureState::from_real(&v, 2, n).unwrap()
            };
            let full = (1u32 << n) - 1;
            let s = |m: u32| if m == 0 || m == full { 0.0 } else { psi.entropy_of(&Bipartition::new(m, n).unwrap()).unwrap() };
            for a in 1..full {
                prop_assert!((s(a) - s(full & !a)).abs() < 1e-9);
            }
            for a in 1..full {
                for b in 1..full {
                    if a & b != 0 { continue; }
                    prop_assert!(s(a) + s(b) >= s(a | b) - 1e-9);
                }
            }
            // strong subadditivity over disjoint triples (A, B, C)
            for a in 1..full {
                for b in 1..full {
                    if a & b != 0 { continue; }
                    let rest = full & !(a | b);
                    let mut c = rest;
                    while c != 0 {
                        prop_assert!(s(a | b) + s(b | c) >= s(a | b | c) + s(b) - 1e-9);
                        c = (c - 1) & rest;
                    }
                }
            }
        }

        #[test]
        fn entropy_bounds(seed in any::<u64>()) {
            let psi = haar_random_state(7, seed).unwrap();
            let data = full_entropy_data(&psi).unwrap();
            prop_assert!(data.check_bounds(2).is_ok());
        }
    }
}
