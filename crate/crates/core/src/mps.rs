//! Translation-invariant matrix product states on rings and infinite chains.
//!
//! A uniform MPS is a set of `d` square `D x D` matrices `A_sigma`; the ring
//! state is `sum Tr(A_s1 ... A_sN) |s1 ... sN>`. The transfer matrix is
//! `E = sum_sigma A_sigma (x) conj(A_sigma)` with row index `a D + a'`.
//! Left eigenvectors are stored as plain rows, so `<L_s|R_t>` is the bilinear
//! product `sum_x L_s[x] R_t[x]` and equals `delta_st`.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use once_cell::race::OnceBox;

use crate::error::{Error, Result};
use crate::linalg;
use crate::spinmodels::{SpinChainSpec, SpinModel};
use crate::statecore::PureState;

type C = Complex64;

const fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Largest bond dimension accepted (`D^2 <= 4096`).
pub const MAX_BOND_DIM: usize = 64;
/// Bond dimension limit for the block-entropy Gram matrices (`D^4` sized).
pub const MAX_BLOCK_BOND_DIM: usize = 8;
/// Members of a transfer multiplet differ in modulus by less than this.
pub const MULTIPLET_TOL: f64 = 1e-8;
/// Eigenvalues of `rho_i (x) rho_j` below this are dropped.
pub const WEIGHT_CLIP: f64 = 1e-12;
const CANONICAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalForm {
    /// `sum A^dag A = 1`.
    Left,
    /// `sum A A^dag = 1`.
    Right,
    None,
}

/// Site tensor plus a lazily computed transfer spectrum.
pub struct UniformMPS {
    tensors: Vec<DMatrix<C>>,
    form: CanonicalForm,
    spectrum: OnceBox<Result<TransferSpectrum>>,
}

impl Clone for UniformMPS {
    fn clone(&self) -> Self {
        Self { tensors: self.tensors.clone(), form: self.form, spectrum: OnceBox::new() }
    }
}

impl fmt::Debug for UniformMPS {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UniformMPS")
            .field("d", &self.physical_dim())
            .field("D", &self.bond_dim())
            .field("form", &self.form)
            .finish()
    }
}

impl UniformMPS {
    /// `tensors[sigma]` is `A_sigma`. A declared canonical form is checked.
    pub fn new(tensors: Vec<DMatrix<C>>, form: CanonicalForm) -> Result<Self> {
        let d = tensors.len();
        if d == 0 {
            return Err(Error::Shape("no physical states".into()));
        }
        let bond = tensors[0].nrows();
        if bond == 0 || bond > MAX_BOND_DIM {
            return Err(Error::Capacity(format!("bond dimension {bond}, supported 1..={MAX_BOND_DIM}")));
        }
        for a in &tensors {
            if a.nrows() != bond || a.ncols() != bond {
                return Err(Error::Shape(format!("{}x{} matrix in a D = {bond} tensor", a.nrows(), a.ncols())));
            }
            if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NumericInput("non-finite tensor entry".into()));
            }
        }
        let m = Self { tensors, form, spectrum: OnceBox::new() };
        let defect = match form {
            CanonicalForm::Left => (m.tensors.iter().map(|a| a.adjoint() * a).sum::<DMatrix<C>>() - DMatrix::identity(bond, bond)).camax(),
            CanonicalForm::Right => (m.tensors.iter().map(|a| a * a.adjoint()).sum::<DMatrix<C>>() - DMatrix::identity(bond, bond)).camax(),
            CanonicalForm::None => 0.0,
        };
        if defect > CANONICAL_TOL {
            return Err(Error::CanonicalForm(format!("{form:?} isometry defect {defect:e}")));
        }
        Ok(m)
    }

    pub fn physical_dim(&self) -> usize {
        self.tensors.len()
    }

    pub fn bond_dim(&self) -> usize {
        self.tensors[0].nrows()
    }

    pub fn tensors(&self) -> &[DMatrix<C>] {
        &self.tensors
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        self.form
    }

    pub fn transfer_matrix(&self) -> DMatrix<C> {
        let d2 = self.bond_dim() * self.bond_dim();
        let mut e = DMatrix::zeros(d2, d2);
        for a in &self.tensors {
            e += a.kronecker(&a.map(|z| z.conj()));
        }
        e
    }

    fn require_canonical(&self) -> Result<&TransferSpectrum> {
        if self.form == CanonicalForm::None {
            return Err(Error::CanonicalForm("tensor is not in canonical form".into()));
        }
        let sp = transfer_spectrum(self)?;
        if (sp.gammas[0] - c(1.0)).norm() > CANONICAL_TOL {
            return Err(Error::CanonicalForm(format!("dominant transfer eigenvalue {}", sp.gammas[0])));
        }
        Ok(sp)
    }
}

/// `E = sum_s gamma_s |R_s><L_s|`.
#[derive(Debug, Clone)]
pub struct TransferSpectrum {
    /// Sorted by decreasing modulus; conjugate pairs adjacent.
    pub gammas: Vec<C>,
    /// Columns are `R_s`; `R_0` reshaped to `D x D` has positive trace.
    pub right: DMatrix<C>,
    /// Rows are `L_s`.
    pub left: DMatrix<C>,
    /// `||V|| ||V^-1||` for the eigenvector matrix.
    pub condition: f64,
    pub near_defective: bool,
}

impl TransferSpectrum {
    pub fn right_vec(&self, s: usize) -> DVector<C> {
        self.right.column(s).into_owned()
    }

    pub fn left_vec(&self, s: usize) -> DVector<C> {
        self.left.row(s).transpose()
    }

    /// Indices `s >= 1` with `|gamma_s| = |gamma_1|` within [`MULTIPLET_TOL`].
    pub fn leading_multiplet(&self) -> Vec<usize> {
        if self.gammas.len() < 2 {
            return Vec::new();
        }
        let g1 = self.gammas[1].norm();
        (1..self.gammas.len()).filter(|&s| (self.gammas[s].norm() - g1).abs() < MULTIPLET_TOL).collect()
    }
}

/// Transfer spectrum, computed once per tensor and cached.
pub fn transfer_spectrum(m: &UniformMPS) -> Result<&TransferSpectrum> {
    m.spectrum.get_or_init(|| Box::new(compute_spectrum(m))).as_ref().map_err(Clone::clone)
}

fn compute_spectrum(m: &UniformMPS) -> Result<TransferSpectrum> {
    let eig = linalg::general_eigen(&m.transfer_matrix())?;
    let (mut right, mut left) = (eig.right, eig.left);
    let bond = m.bond_dim();
    let tr: C = (0..bond).map(|a| right[(a * bond + a, 0)]).sum();
    if tr.norm() > 0.0 {
        let ph = tr / tr.norm();
        for x in right.column_mut(0).iter_mut() {
            *x /= ph;
        }
        for x in left.row_mut(0).iter_mut() {
            *x *= ph;
        }
    }
    let condition = right.norm() * left.norm();
    Ok(TransferSpectrum { gammas: eig.values, right, left, condition, near_defective: condition > 1e6 })
}

fn as_matrix(v: &DVector<C>, bond: usize) -> DMatrix<C> {
    DMatrix::from_fn(bond, bond, |a, b| v[a * bond + b])
}

fn as_vector(m: &DMatrix<C>) -> DVector<C> {
    let nc = m.ncols();
    DVector::from_fn(m.nrows() * nc, |k, _| m[(k / nc, k % nc)])
}

/// `<L| A_m (x) conj(A_n) |R> = Tr(L^T A_m R A_n^dag)`.
fn sandwich(l: &DMatrix<C>, am: &DMatrix<C>, r: &DMatrix<C>, an: &DMatrix<C>) -> C {
    (l.transpose() * am * r * an.adjoint()).trace()
}

fn mat_pow(e: &DMatrix<C>, mut p: usize) -> DMatrix<C> {
    let n = e.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut base = e.clone();
    while p > 0 {
        if p & 1 == 1 {
            out = &out * &base;
        }
        p >>= 1;
        if p > 0 {
            base = &base * &base;
        }
    }
    out
}

/// Dominant eigenvalue of `X -> sum A^dag X A` and its fixed point,
/// Hermitian positive definite with unit trace.
fn left_fixed_point(tensors: &[DMatrix<C>]) -> Result<(f64, DMatrix<C>)> {
    let bond = tensors[0].nrows();
    let mut e = DMatrix::<C>::zeros(bond * bond, bond * bond);
    for a in tensors {
        e += a.kronecker(&a.map(|z| z.conj()));
    }
    let eig = linalg::general_eigen(&e)?;
    let g0 = eig.values[0];
    if g0.norm() == 0.0 || g0.re <= 0.0 || g0.im.abs() > 1e-10 * g0.norm() {
        return Err(Error::CanonicalForm(format!("dominant transfer eigenvalue {g0}")));
    }
    if eig.values.len() > 1 && (eig.values[1].norm() - g0.norm()).abs() < 1e-10 * g0.norm() {
        return Err(Error::CanonicalForm("degenerate dominant transfer eigenvalue (non-injective tensor)".into()));
    }
    let row = eig.left.row(0).transpose();
    let mut l = as_matrix(&row, bond).transpose();
    let tr = l.trace();
    l.iter_mut().for_each(|z| *z /= tr);
    let l = (&l + l.adjoint()) * c(0.5);
    let vals = linalg::hermitian_eigenvalues(l.clone());
    if vals[0] <= 1e-12 * vals[bond - 1] {
        return Err(Error::CanonicalForm("left fixed point is not positive definite".into()));
    }
    Ok((g0.re, l))
}

fn sqrt_and_inverse(l: &DMatrix<C>) -> Result<(DMatrix<C>, DMatrix<C>)> {
    let x = linalg::hermitian_sqrt(l);
    let xi = x.clone().try_inverse().ok_or_else(|| Error::CanonicalForm("singular gauge".into()))?;
    Ok((x, xi))
}

/// Left canonical form `A' = X A X^-1 / sqrt(gamma_0)` with `X^dag X` the
/// left fixed point.
pub fn canonicalize_left(tensors: &[DMatrix<C>]) -> Result<UniformMPS> {
    UniformMPS::new(tensors.to_vec(), CanonicalForm::None)?;
    let (g0, l) = left_fixed_point(tensors)?;
    let (x, xi) = sqrt_and_inverse(&l)?;
    let scale = c(1.0 / g0.sqrt());
    let out = tensors.iter().map(|a| &x * a * &xi * scale).collect();
    UniformMPS::new(out, CanonicalForm::Left)
}

/// Left-canonical MPS with i.i.d. complex Gaussian entries before gauging.
pub fn random_mps(d: usize, bond: usize, seed: u64) -> Result<UniformMPS> {
    let mut rng = crate::rng::seeded(seed);
    let tensors: Vec<DMatrix<C>> =
        (0..d).map(|_| DMatrix::from_fn(bond, bond, |_, _| crate::rng::complex_normal(&mut rng))).collect();
    canonicalize_left(&tensors)
}

/// Spin-1 AKLT tensor in the `m = +1, 0, -1` basis, left canonical.
pub fn aklt_mps() -> UniformMPS {
    let p = (2.0f64 / 3.0).sqrt();
    let z = (1.0f64 / 3.0).sqrt();
    let plus = DMatrix::from_row_slice(2, 2, &[c(0.0), c(p), c(0.0), c(0.0)]);
    let zero = DMatrix::from_row_slice(2, 2, &[c(-z), c(0.0), c(0.0), c(z)]);
    let minus = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(-p), c(0.0)]);
    UniformMPS::new(vec![plus, zero, minus], CanonicalForm::Left).expect("AKLT tensor is left canonical")
}

/// Normalized ring state `sum Tr(A ... A) |s>` with site 1 least significant.
pub fn ring_state(m: &UniformMPS, n_sites: usize) -> Result<PureState> {
    let d = m.physical_dim();
    let dim = d
        .checked_pow(n_sites as u32)
        .filter(|&x| x <= crate::statecore::MAX_DENSE_DIM)
        .ok_or_else(|| Error::Capacity(format!("{d}^{n_sites} amplitudes")))?;
    if n_sites < 2 {
        return Err(Error::InvalidSize(format!("{n_sites} sites")));
    }
    let mut prods: Vec<DMatrix<C>> = m.tensors.clone();
    let mut pw = d;
    for _ in 1..n_sites {
        let mut next = Vec::with_capacity(prods.len() * d);
        for a in &m.tensors {
            for p in &prods {
                next.push(p * a);
            }
        }
        prods = next;
        pw *= d;
    }
    debug_assert_eq!(pw, dim);
    let amps = prods.iter().map(|p| p.trace()).collect();
    PureState::normalized(amps, d, n_sites)
}

/// Where the rest of the chain lives when reducing to a few sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    /// Infinite chain: dominant fixed points on both sides.
    Infinite,
    /// Periodic ring of the given total length.
    Ring(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdmMode {
    /// Full `E^l` between the two sites.
    Exact,
    /// `rho_i (x) rho_j` plus the leading transfer multiplet.
    FirstOrder,
}

/// `rho_ij = rho_i (x) rho_j + gamma_1^l rho_bar`, with index `m_i + d m_j`.
#[derive(Debug, Clone)]
pub struct TwoSiteDecomposition {
    pub separation: usize,
    pub gamma1: C,
    /// Number of transfer eigenvalues in the leading multiplet.
    pub multiplet: usize,
    pub rho0: DMatrix<C>,
    /// `sum_s (gamma_s / gamma_1)^l rho_bar_s` over the multiplet.
    pub rho_bar: DMatrix<C>,
    /// `gamma_1^l rho_bar`, Hermitian.
    pub correction: DMatrix<C>,
    /// Eigenvalues of `rho0`, ascending.
    pub e_m: Vec<f64>,
    /// `correction` in the eigenbasis of `rho0`.
    pub correction_eigenbasis: DMatrix<C>,
}

#[derive(Debug, Clone)]
pub struct TwoSiteRdm {
    pub decomposition: TwoSiteDecomposition,
    /// The assembled two-site density matrix for the requested mode.
    pub rho: DMatrix<C>,
}

/// Single-site density matrix.
pub fn single_site_rdm(m: &UniformMPS, env: Environment) -> Result<DMatrix<C>> {
    let sp = m.require_canonical()?;
    let d = m.physical_dim();
    let bond = m.bond_dim();
    let a = &m.tensors;
    let rho = match env {
        Environment::Infinite => {
            let l0 = as_matrix(&sp.left_vec(0), bond);
            let r0 = as_matrix(&sp.right_vec(0), bond);
            DMatrix::from_fn(d, d, |i, j| sandwich(&l0, &a[i], &r0, &a[j]))
        }
        Environment::Ring(n) => {
            if n < 2 {
                return Err(Error::InvalidSize(format!("ring of {n} sites")));
            }
            let e = m.transfer_matrix();
            let p = mat_pow(&e, n - 1);
            let norm = (&p * &e).trace();
            DMatrix::from_fn(d, d, |i, j| (a[i].kronecker(&a[j].map(|z| z.conj())) * &p).trace() / norm)
        }
    };
    Ok(hermitize(rho))
}

fn hermitize(m: DMatrix<C>) -> DMatrix<C> {
    let tr = m.trace();
    let h = (&m + m.adjoint()) * c(0.5);
    h / c(tr.re)
}

/// Two-site reduced state of sites `i` and `i + l + 1`.
pub fn two_site_rdm(m: &UniformMPS, l: usize, mode: RdmMode, env: Environment) -> Result<TwoSiteRdm> {
    let sp = m.require_canonical()?;
    let d = m.physical_dim();
    let bond = m.bond_dim();
    let a = &m.tensors;
    let l0 = as_matrix(&sp.left_vec(0), bond);
    let r0 = as_matrix(&sp.right_vec(0), bond);
    let rho1 = single_site_rdm(m, Environment::Infinite)?;
    let d2 = d * d;
    let idx = |mi: usize, mj: usize| mi + d * mj;

    let rho0 = DMatrix::from_fn(d2, d2, |r, col| rho1[(r % d, col % d)] * rho1[(r / d, col / d)]);
    let mult = sp.leading_multiplet();
    let gamma1 = if mult.is_empty() { c(0.0) } else { sp.gammas[1] };
    let mut correction = DMatrix::<C>::zeros(d2, d2);
    let mut rho_bar = DMatrix::<C>::zeros(d2, d2);
    for &s in &mult {
        let rs = as_matrix(&sp.right_vec(s), bond);
        let ls = as_matrix(&sp.left_vec(s), bond);
        let gl = sp.gammas[s].powu(l as u32);
        let ratio = if gamma1.norm() > 0.0 { (sp.gammas[s] / gamma1).powu(l as u32) } else { c(1.0) };
        for mi in 0..d {
            for ni in 0..d {
                let left = sandwich(&l0, &a[mi], &rs, &a[ni]);
                for mj in 0..d {
                    for nj in 0..d {
                        let v = left * sandwich(&ls, &a[mj], &r0, &a[nj]);
                        correction[(idx(mi, mj), idx(ni, nj))] += gl * v;
                        rho_bar[(idx(mi, mj), idx(ni, nj))] += ratio * v;
                    }
                }
            }
        }
    }
    let defect = (&correction - correction.adjoint()).camax();
    if defect > 1e-9 {
        return Err(Error::ImaginaryResidue(defect));
    }
    let correction = (&correction + correction.adjoint()) * c(0.5);
    let (e_m, q) = linalg::hermitian_eigen(rho0.clone());
    let correction_eigenbasis = q.adjoint() * &correction * &q;
    let decomposition =
        TwoSiteDecomposition { separation: l, gamma1, multiplet: mult.len(), rho0: rho0.clone(), rho_bar, correction: correction.clone(), e_m, correction_eigenbasis };

    let rho = match (mode, env) {
        (RdmMode::FirstOrder, Environment::Infinite) => &rho0 + &correction,
        (RdmMode::FirstOrder, Environment::Ring(_)) => {
            return Err(Error::InvalidArgument("first-order reduction is defined for the infinite chain".into()))
        }
        (RdmMode::Exact, Environment::Infinite) => {
            let e = m.transfer_matrix();
            let el = mat_pow(&e, l);
            let mut rho = DMatrix::<C>::zeros(d2, d2);
            for mi in 0..d {
                for ni in 0..d {
                    // row vector <L0| Ebar_i E^l
                    let li = as_vector(&(a[mi].transpose() * &l0 * a[ni].map(|z| z.conj())));
                    let lv = el.transpose() * li;
                    let lm = as_matrix(&lv, bond);
                    for mj in 0..d {
                        for nj in 0..d {
                            rho[(idx(mi, mj), idx(ni, nj))] = sandwich(&lm, &a[mj], &r0, &a[nj]);
                        }
                    }
                }
            }
            rho
        }
        (RdmMode::Exact, Environment::Ring(n)) => {
            if n < l + 2 {
                return Err(Error::InvalidParameter(format!("separation {l} does not fit a ring of {n}")));
            }
            let e = m.transfer_matrix();
            let el = mat_pow(&e, l);
            let rest = mat_pow(&e, n - l - 2);
            let norm = (mat_pow(&e, n)).trace();
            let ebar = |x: usize, y: usize| a[x].kronecker(&a[y].map(|z| z.conj()));
            let left: Vec<DMatrix<C>> = (0..d2).map(|k| ebar(k % d, k / d) * &el).collect();
            let right: Vec<DMatrix<C>> = (0..d2).map(|k| ebar(k % d, k / d) * &rest).collect();
            let mut rho = DMatrix::<C>::zeros(d2, d2);
            for mi in 0..d {
                for ni in 0..d {
                    let lm = &left[mi + d * ni];
                    for mj in 0..d {
                        for nj in 0..d {
                            let rm = &right[mj + d * nj];
                            let t: C = lm.iter().zip(rm.transpose().iter()).map(|(x, y)| x * y).sum();
                            rho[(idx(mi, mj), idx(ni, nj))] = t / norm;
                        }
                    }
                }
            }
            rho
        }
    };
    Ok(TwoSiteRdm { decomposition, rho: hermitize(rho) })
}

fn entropy_of(m: &DMatrix<C>) -> Result<f64> {
    linalg::spectrum_entropy(&linalg::hermitian_eigenvalues(m.clone()))
}

/// `I(i : i+l+1) / 2` from exact reduced states.
pub fn half_mutual_information(m: &UniformMPS, l: usize, env: Environment) -> Result<f64> {
    let s1 = entropy_of(&single_site_rdm(m, env)?)?;
    let s2 = entropy_of(&two_site_rdm(m, l, RdmMode::Exact, env)?.rho)?;
    Ok(s1 - s2 / 2.0)
}

/// Second-order estimate of `(S(rho_i (x) rho_j) - S(rho_ij)) / 2` from the
/// leading transfer multiplet.
///
/// `J = 1/2 sum_mn K_mn |C_mn|^2` with `C = gamma_1^l rho_bar` in the
/// eigenbasis of `rho_i (x) rho_j`, `K_mm = 1/(2 E_m)` and, for `m != n`,
/// the pair-symmetrized `K_mn = ln(E_n/E_m) / (2 (E_n - E_m))`.
pub fn j_mut_analytic(m: &UniformMPS, l: usize) -> Result<f64> {
    let dec = two_site_rdm(m, l, RdmMode::FirstOrder, Environment::Infinite)?.decomposition;
    j_mut_from_decomposition(&dec)
}

pub fn j_mut_from_decomposition(dec: &TwoSiteDecomposition) -> Result<f64> {
    let e = &dec.e_m;
    let cm = &dec.correction_eigenbasis;
    let emax = e.iter().copied().fold(0.0, f64::max);
    let n = e.len();
    for k in 0..n {
        if e[k] < WEIGHT_CLIP {
            let weight: f64 = (0..n).map(|j| cm[(k, j)].norm_sqr() + cm[(j, k)].norm_sqr()).sum();
            if weight > 1e-8 {
                return Err(Error::SingularWeight { level: e[k], weight });
            }
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        if e[i] < WEIGHT_CLIP {
            continue;
        }
        for j in 0..n {
            if e[j] < WEIGHT_CLIP {
                continue;
            }
            let kern = if (e[i] - e[j]).abs() < 1e-8 * emax {
                1.0 / (2.0 * e[i])
            } else {
                (e[j].ln() - e[i].ln()) / (2.0 * (e[j] - e[i]))
            };
            total += kern * cm[(i, j)].norm_sqr();
        }
    }
    Ok(total / 2.0)
}

/// Expansion `S(r) = S0 - sum_s gamma_s^r omega_s - sum_ss' gamma_s^r gamma_s'^r Gamma_ss'`
/// of contiguous block entropies on a long ring (`s, s' >= 1`).
///
/// The Schmidt weights are eigenvalues of `Y0 + sum_s gamma_s^r W_s`, where
/// `Y0` has eigenvalues `Lambda_k` and `W_s` comes from the `s`-th transfer
/// channel of the block Gram matrix. `omega_s = sum_k W_s(kk) (1 + ln Lambda_k)`
/// and `Gamma_ss' = 1/2 sum_kj W_s(kj) W_s'(jk) L(Lambda_k, Lambda_j)` with
/// `L(x, y) = (ln x - ln y) / (x - y)`, `L(x, x) = 1/x`, so that both
/// eigenvalue splittings and second-order level shifts are included.
#[derive(Debug, Clone)]
pub struct BlockSeries {
    pub s0: f64,
    /// Transfer eigenvalues of the channels, `gamma_1, gamma_2, ...`.
    pub gammas: Vec<C>,
    pub omega: Vec<C>,
    pub gamma_matrix: DMatrix<C>,
    /// Zeroth-order Schmidt weights `Lambda_k`, ascending.
    pub lambda0: Vec<f64>,
    /// First-order weight shifts `Lambda_k^s` as `lambda1[(k, s - 1)]`.
    pub lambda1: DMatrix<C>,
}

impl BlockSeries {
    pub fn entropy(&self, r: usize) -> C {
        let p: Vec<C> = self.gammas.iter().map(|g| g.powu(r as u32)).collect();
        let mut s = c(self.s0);
        for (k, pk) in p.iter().enumerate() {
            s -= pk * self.omega[k];
            for (q, pq) in p.iter().enumerate() {
                s -= pk * pq * self.gamma_matrix[(k, q)];
            }
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct MpsBlockSpectrum {
    pub r: usize,
    pub n_sites: usize,
    /// `Lambda_k(r, N)`, ascending, summing to one.
    pub weights: Vec<f64>,
    pub entropy: f64,
    pub series: BlockSeries,
}

fn gram_a(er: &DMatrix<C>, bond: usize) -> DMatrix<C> {
    // <phi_a'b'|phi_ab> = E^r[(a a'), (b b')] with k = a D + b
    let n = bond * bond;
    DMatrix::from_fn(n, n, |kp, k| {
        let (ap, bp, a, b) = (kp / bond, kp % bond, k / bond, k % bond);
        er[(a * bond + ap, b * bond + bp)]
    })
}

fn gram_b(es: &DMatrix<C>, bond: usize) -> DMatrix<C> {
    // <phi_b'a'|phi_ba> = E^s[(b b'), (a a')] with k = a D + b
    let n = bond * bond;
    DMatrix::from_fn(n, n, |kp, k| {
        let (ap, bp, a, b) = (kp / bond, kp % bond, k / bond, k % bond);
        es[(b * bond + bp, a * bond + ap)]
    })
}

/// Schmidt weights of `Psi = sum_k |a_k>|b_k>` from the two Gram matrices:
/// the spectrum of `G_A^1/2 conj(G_B) G_A^1/2`, normalized.
fn gram_weights(ga: &DMatrix<C>, gb: &DMatrix<C>) -> Result<Vec<f64>> {
    let ga = (ga + ga.adjoint()) * c(0.5);
    let gb = (gb + gb.adjoint()) * c(0.5);
    let s = linalg::hermitian_sqrt(&ga);
    let y = &s * gb.map(|z| z.conj()) * &s;
    let y = (&y + y.adjoint()) * c(0.5);
    let mut w = linalg::hermitian_eigenvalues(y);
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Conditioning("zero-norm Gram product".into()));
    }
    for x in w.iter_mut() {
        *x /= total;
        if *x < -1e-8 {
            return Err(Error::Conditioning(format!("Schmidt weight {x:e}")));
        }
        *x = x.max(0.0);
    }
    Ok(w)
}

fn log_mean_inverse(x: f64, y: f64) -> f64 {
    if (x - y).abs() <= 1e-8 * x.max(y) {
        2.0 / (x + y)
    } else {
        (x.ln() - y.ln()) / (x - y)
    }
}

fn block_series(m: &UniformMPS) -> Result<BlockSeries> {
    let sp = m.require_canonical()?;
    let bond = m.bond_dim();
    let nk = bond * bond;
    let outer = |s: usize| -> DMatrix<C> { sp.right_vec(s) * sp.left_vec(s).transpose() };
    let g0 = gram_a(&outer(0), bond);
    let g0 = (&g0 + g0.adjoint()) * c(0.5);
    let mt = gram_b(&outer(0), bond).map(|z| z.conj());

    let (gv, gq) = linalg::hermitian_eigen(g0.clone());
    let gmax = gv.iter().copied().fold(0.0, f64::max);
    if !(gmax > 0.0) {
        return Err(Error::Conditioning("leading Gram matrix vanishes".into()));
    }
    // directions below the cut carry negligible Schmidt weight; project them out
    let cut = 1e-12 * gmax;
    let diag = |f: &dyn Fn(f64) -> f64| -> DMatrix<C> {
        let dvals = DMatrix::from_diagonal(&DVector::from_iterator(nk, gv.iter().map(|&x| c(if x > cut { f(x) } else { 0.0 }))));
        &gq * dvals * gq.adjoint()
    };
    let sq = diag(&f64::sqrt);
    let isq = diag(&|x| 1.0 / x.sqrt());
    let y0 = &sq * &mt * &sq;
    let y0 = (&y0 + y0.adjoint()) * c(0.5);
    let (lam, q) = linalg::hermitian_eigen(y0);
    let norm: f64 = lam.iter().sum();
    let lam: Vec<f64> = lam.iter().map(|x| (x / norm).max(0.0)).collect();
    // weights that vanish at zeroth order make the expansion non-analytic
    let live: Vec<usize> = (0..nk).filter(|&k| lam[k] > 1e-14).collect();

    let channels: Vec<usize> = (1..sp.gammas.len()).collect();
    let nch = channels.len();
    let w: Vec<DMatrix<C>> = channels
        .iter()
        .map(|&s| q.adjoint() * (&sq * &mt * gram_a(&outer(s), bond) * &isq) * &q / c(norm))
        .collect();

    let mut lambda1 = DMatrix::<C>::zeros(nk, nch);
    let mut omega = vec![c(0.0); nch];
    for (s, ws) in w.iter().enumerate() {
        for k in 0..nk {
            lambda1[(k, s)] = ws[(k, k)];
        }
        for &k in &live {
            omega[s] += ws[(k, k)] * (1.0 + lam[k].ln());
        }
    }
    let mut gamma_matrix = DMatrix::<C>::zeros(nch, nch);
    for s in 0..nch {
        for t in s..nch {
            let mut acc = c(0.0);
            for &k in &live {
                for &j in &live {
                    acc += w[s][(k, j)] * w[t][(j, k)] * log_mean_inverse(lam[k], lam[j]);
                }
            }
            gamma_matrix[(s, t)] = acc * 0.5;
            gamma_matrix[(t, s)] = acc * 0.5;
        }
    }
    let s0 = -live.iter().map(|&k| lam[k] * lam[k].ln()).sum::<f64>();
    Ok(BlockSeries { s0, gammas: channels.iter().map(|&s| sp.gammas[s]).collect(), omega, gamma_matrix, lambda0: lam, lambda1 })
}

/// Schmidt spectrum of an `r`-site block of the `N`-site ring.
pub fn block_entropy_mps(m: &UniformMPS, r: usize, n_sites: usize) -> Result<MpsBlockSpectrum> {
    if r == 0 || r >= n_sites {
        return Err(Error::InvalidParameter(format!("block length {r} outside 1..{n_sites}")));
    }
    let bond = m.bond_dim();
    if bond > MAX_BLOCK_BOND_DIM {
        return Err(Error::Capacity(format!("bond dimension {bond} exceeds {MAX_BLOCK_BOND_DIM} for block entropies")));
    }
    let series = block_series(m)?;
    let e = m.transfer_matrix();
    let weights = gram_weights(&gram_a(&mat_pow(&e, r), bond), &gram_b(&mat_pow(&e, n_sites - r), bond))?;
    let entropy = linalg::spectrum_entropy(&weights)?;
    Ok(MpsBlockSpectrum { r, n_sites, weights, entropy, series })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JCont {
    /// `S(r) - S(r-1)/2 - S(r+1)/2` from exact Gram spectra.
    pub direct: f64,
    /// The same combination of the series expansion.
    pub series: f64,
}

/// Contiguous-block link estimate at distance `r` on an `N`-site ring.
pub fn j_cont_analytic(m: &UniformMPS, r: usize, n_sites: usize) -> Result<JCont> {
    if r == 0 {
        return Err(Error::InvalidParameter("link distance must be positive".into()));
    }
    if r + 1 >= n_sites {
        return Err(Error::InvalidParameter(format!("distance {r} needs blocks up to {} on a ring of {n_sites}", r + 1)));
    }
    let s = |k: usize| -> Result<f64> {
        if k == 0 {
            Ok(0.0)
        } else {
            Ok(block_entropy_mps(m, k, n_sites)?.entropy)
        }
    };
    let direct = s(r)? - s(r - 1)? / 2.0 - s(r + 1)? / 2.0;
    let series = block_series(m)?;
    let js = series.entropy(r) - series.entropy(r - 1) * 0.5 - series.entropy(r + 1) * 0.5;
    if js.im.abs() > 1e-9 {
        return Err(Error::ImaginaryResidue(js.im));
    }
    Ok(JCont { direct, series: js.re })
}

/// `-<X X> - h <Z>` per site of an infinite chain.
pub fn itf_energy_density(m: &UniformMPS, h: f64) -> Result<f64> {
    if m.physical_dim() != 2 {
        return Err(Error::Shape("transverse-field Ising needs qubits".into()));
    }
    let rho = two_site_rdm(m, 0, RdmMode::Exact, Environment::Infinite)?.rho;
    // index s_i + 2 s_j with 0 = up
    let xx = (rho[(0, 3)] + rho[(3, 0)] + rho[(1, 2)] + rho[(2, 1)]).re;
    let z = (rho[(0, 0)] - rho[(3, 3)]).re;
    Ok(-xx - h * z)
}

/// Imaginary-time evolution settings for [`fit_uniform_mps`].
#[derive(Debug, Clone, Copy)]
pub struct ItebdOptions {
    pub bond_dim: usize,
    /// Maximum Trotter steps per stage.
    pub steps: usize,
    /// First-stage time step; each later stage uses a tenth of the previous.
    pub dtau: f64,
    pub stages: usize,
    /// Stop a stage once the energy changes less than this in one step.
    pub tol: f64,
}

impl ItebdOptions {
    pub fn new(bond_dim: usize) -> Self {
        Self { bond_dim, steps: 200_000, dtau: 0.05, stages: 3, tol: 1e-10 }
    }
}

struct Vidal {
    ga: Vec<DMatrix<f64>>,
    la: DVector<f64>,
    gb: Vec<DMatrix<f64>>,
    lb: DVector<f64>,
}

/// Two-site gate update across the bond `g1 -- mid -- g2`, with `out` the
/// Schmidt values on the outer bonds.
fn bond_update(
    g1: &[DMatrix<f64>],
    mid: &DVector<f64>,
    g2: &[DMatrix<f64>],
    out: &DVector<f64>,
    gate: &DMatrix<f64>,
    max_bond: usize,
) -> Result<(Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>)> {
    let d = g1.len();
    let chi = out.len();
    let mut theta = vec![DMatrix::<f64>::zeros(chi, chi); d * d];
    for s1 in 0..d {
        let left = DMatrix::from_diagonal(out) * &g1[s1] * DMatrix::from_diagonal(mid);
        for s2 in 0..d {
            theta[s1 * d + s2] = &left * &g2[s2] * DMatrix::from_diagonal(out);
        }
    }
    let mut big = DMatrix::<f64>::zeros(chi * d, d * chi);
    for t in 0..d * d {
        let mut acc = DMatrix::<f64>::zeros(chi, chi);
        for s in 0..d * d {
            if gate[(t, s)] != 0.0 {
                acc += &theta[s] * gate[(t, s)];
            }
        }
        let (t1, t2) = (t / d, t % d);
        for a in 0..chi {
            for b in 0..chi {
                big[(a * d + t1, t2 * chi + b)] = acc[(a, b)];
            }
        }
    }
    let svd = big.svd(true, true);
    let u = svd.u.ok_or(Error::Convergence { delta: f64::NAN })?;
    let vt = svd.v_t.ok_or(Error::Convergence { delta: f64::NAN })?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let s0 = svd.singular_values[order[0]];
    let keep: Vec<usize> = order.iter().copied().filter(|&k| svd.singular_values[k] > 1e-8 * s0).take(max_bond).collect();
    let norm = keep.iter().map(|&k| svd.singular_values[k].powi(2)).sum::<f64>().sqrt();
    let lam = DVector::from_iterator(keep.len(), keep.iter().map(|&k| svd.singular_values[k] / norm));
    let n1 = (0..d).map(|s1| DMatrix::from_fn(chi, keep.len(), |a, k| u[(a * d + s1, keep[k])] / out[a])).collect();
    let n2 = (0..d).map(|s2| DMatrix::from_fn(keep.len(), chi, |k, b| vt[(keep[k], s2 * chi + b)] / out[b])).collect();
    Ok((n1, lam, n2))
}

fn bond_energy(g1: &[DMatrix<f64>], mid: &DVector<f64>, g2: &[DMatrix<f64>], out: &DVector<f64>, h: &DMatrix<f64>) -> f64 {
    let d = g1.len();
    let mut theta = Vec::with_capacity(d * d);
    for s1 in 0..d {
        let left = DMatrix::from_diagonal(out) * &g1[s1] * DMatrix::from_diagonal(mid);
        for s2 in 0..d {
            theta.push(&left * &g2[s2] * DMatrix::from_diagonal(out));
        }
    }
    let norm: f64 = theta.iter().map(|t| t.norm_squared()).sum();
    let mut e = 0.0;
    for t in 0..d * d {
        for s in 0..d * d {
            if h[(t, s)] != 0.0 {
                e += h[(t, s)] * theta[t].dot(&theta[s]);
            }
        }
    }
    e / norm
}

/// Ground state of the infinite transverse-field Ising chain as a left
/// canonical uniform MPS of bond dimension at most `bond_dim`.
///
/// Runs two-site iTEBD with second-order Trotter steps, then merges the two
/// converged tensors into one through the gauge that relates the chain to
/// its one-site translate.
pub fn fit_uniform_mps(spec: &SpinChainSpec, opts: &ItebdOptions) -> Result<UniformMPS> {
    let h = match spec.model {
        SpinModel::Itf { h } => h,
        _ => return Err(Error::InvalidParameter("imaginary-time fitting supports the transverse-field Ising chain".into())),
    };
    if opts.bond_dim == 0 || opts.bond_dim > MAX_BLOCK_BOND_DIM {
        return Err(Error::Capacity(format!("bond dimension {}, supported 1..={MAX_BLOCK_BOND_DIM}", opts.bond_dim)));
    }
    if !(opts.dtau > 0.0) || opts.stages == 0 {
        return Err(Error::InvalidParameter("time step and stage count must be positive".into()));
    }
    // bond Hamiltonian on s1 * 2 + s2, 0 = up
    let mut hb = DMatrix::<f64>::zeros(4, 4);
    for s in 0..4 {
        let (s1, s2) = (s / 2, s % 2);
        let z = |x: usize| if x == 0 { 1.0 } else { -1.0 };
        hb[(s, s)] = -0.5 * h * (z(s1) + z(s2));
        hb[(3 - s, s)] = -1.0;
    }
    let (hv, hq) = linalg::symmetric_eigen(hb.clone());
    let gate = |tau: f64| -> DMatrix<f64> {
        // shifted by the lowest bond energy so large fields do not overflow
        let dvals = DMatrix::from_diagonal(&DVector::from_iterator(4, hv.iter().map(|&e| (-tau * (e - hv[0])).exp())));
        &hq * dvals * hq.transpose()
    };

    let up = |_: usize| vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 0.0)];
    let one = DVector::from_element(1, 1.0);
    let mut st = Vidal { ga: up(0), la: one.clone(), gb: up(1), lb: one };
    let mut tau = opts.dtau;
    let mut energy = f64::INFINITY;
    for _ in 0..opts.stages {
        let (half, full) = (gate(tau / 2.0), gate(tau));
        let mut converged = false;
        let mut delta = f64::INFINITY;
        for _ in 0..opts.steps {
            for (g, on_a) in [(&half, true), (&full, false), (&half, true)] {
                if on_a {
                    let (ga, la, gb) = bond_update(&st.ga, &st.la, &st.gb, &st.lb, g, opts.bond_dim)?;
                    st.ga = ga;
                    st.la = la;
                    st.gb = gb;
                } else {
                    let (gb, lb, ga) = bond_update(&st.gb, &st.lb, &st.ga, &st.la, g, opts.bond_dim)?;
                    st.gb = gb;
                    st.lb = lb;
                    st.ga = ga;
                }
            }
            let e = 0.5 * (bond_energy(&st.ga, &st.la, &st.gb, &st.lb, &hb) + bond_energy(&st.gb, &st.lb, &st.ga, &st.la, &hb));
            delta = (e - energy).abs();
            energy = e;
            if delta < opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence { delta });
        }
        tau /= 10.0;
    }
    merge_two_site(&st)
}

fn merge_two_site(st: &Vidal) -> Result<UniformMPS> {
    let (ca, cb) = (st.la.len(), st.lb.len());
    if ca != cb {
        return Err(Error::Shape(format!("unequal bond dimensions {ca} and {cb} after evolution")));
    }
    let to_c = |m: &DMatrix<f64>| m.map(c);
    let al: Vec<DMatrix<C>> = st.ga.iter().map(|g| to_c(&(DMatrix::from_diagonal(&st.lb) * g))).collect();
    let bl: Vec<DMatrix<C>> = st.gb.iter().map(|g| to_c(&(DMatrix::from_diagonal(&st.la) * g))).collect();
    let d = al.len();
    let chi = ca;
    // restore the left canonical form of the cell, which non-unitary gates erode
    let pairs: Vec<DMatrix<C>> = al.iter().flat_map(|a| bl.iter().map(move |b| a * b)).collect();
    let (g0, l0) = left_fixed_point(&pairs)?;
    let l1: DMatrix<C> = al.iter().map(|a| a.adjoint() * &l0 * a).sum();
    let (x0, x0i) = sqrt_and_inverse(&l0)?;
    let (x1, x1i) = sqrt_and_inverse(&l1)?;
    let al: Vec<DMatrix<C>> = al.iter().map(|a| &x0 * a * &x1i).collect();
    let scale = c(1.0 / g0.sqrt());
    let bl: Vec<DMatrix<C>> = bl.iter().map(|b| &x1 * b * &x0i * scale).collect();
    // fixed point X = U^dag of  X -> sum (A B)^dag X (B A)
    let mut t = DMatrix::<C>::zeros(chi * chi, chi * chi);
    for k in 0..chi * chi {
        let mut x = DMatrix::<C>::zeros(chi, chi);
        x[(k / chi, k % chi)] = c(1.0);
        let mut y = DMatrix::<C>::zeros(chi, chi);
        for s in 0..d {
            for s2 in 0..d {
                let ab = &al[s] * &bl[s2];
                let ba = &bl[s] * &al[s2];
                y += ab.adjoint() * &x * ba;
            }
        }
        for j in 0..chi * chi {
            t[(j, k)] = y[(j / chi, j % chi)];
        }
    }
    let eig = linalg::general_eigen(&t)?;
    if (eig.values[0].norm() - 1.0).abs() > 1e-6 {
        return Err(Error::CanonicalForm(format!("evolved state is not translation invariant (overlap {})", eig.values[0].norm())));
    }
    let x = DMatrix::from_fn(chi, chi, |a, b| eig.right[(a * chi + b, 0)]);
    let svd = x.adjoint().svd(true, true);
    let u = svd.u.expect("requested") * svd.v_t.expect("requested");
    let merged: Vec<DMatrix<C>> = al.iter().map(|a| a * &u).collect();
    // B = e^{-i phi} U A U; the phase only changes the global phase of the ring state
    let uau: Vec<DMatrix<C>> = al.iter().map(|a| &u * a * &u).collect();
    let overlap: C = bl.iter().zip(&uau).map(|(b, x)| x.dotc(b)).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0) };
    // state-level defect sum_s Tr(delta_s R delta_s^dag), R the right fixed point of the cell,
    // so directions with negligible Schmidt weight do not count
    let mut e = DMatrix::<C>::zeros(chi * chi, chi * chi);
    for a in &al {
        for b in &bl {
            let p = a * b;
            e += p.kronecker(&p.map(|z| z.conj()));
        }
    }
    let er = linalg::general_eigen(&e)?;
    let r = DMatrix::from_fn(chi, chi, |a, b| er.right[(a * chi + b, 0)]);
    let r = &r / r.trace();
    let r = (&r + r.adjoint()) * c(0.5);
    let defect = bl
        .iter()
        .zip(&uau)
        .map(|(b, x)| {
            let delta = b - x * phase;
            (&delta * &r * delta.adjoint()).trace().re
        })
        .sum::<f64>()
        .max(0.0)
        .sqrt();
    // the Trotter fixed point breaks the one-site translation at O(dtau)
    if defect > 1e-2 {
        return Err(Error::CanonicalForm(format!("two-site gauge mismatch {defect:e}")));
    }
    canonicalize_left(&merged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::Bipartition;
    use crate::spinmodels::{self, SolverOptions};
    use crate::statecore;
    use crate::Boundary;
    use core::f64::consts::LN_2;

    fn itf(h: f64) -> UniformMPS {
        let spec = SpinChainSpec::new(SpinModel::Itf { h }, 12, Boundary::Periodic);
        fit_uniform_mps(&spec, &ItebdOptions::new(4)).unwrap()
    }

    #[test]
    fn aklt_transfer_spectrum() {
        let m = aklt_mps();
        let sp = transfer_spectrum(&m).unwrap();
        let want = [1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        for (g, w) in sp.gammas.iter().zip(want) {
            assert!((g - c(w)).norm() < 1e-10, "{g}");
        }
        assert_eq!(sp.leading_multiplet(), vec![1, 2, 3]);
        let id = &sp.right * &sp.left;
        assert!((id - DMatrix::<C>::identity(4, 4)).camax() < 1e-6);
    }

    #[test]
    fn product_state_spectrum() {
        let a = vec![DMatrix::from_element(1, 1, c(0.6)), DMatrix::from_element(1, 1, c(0.8))];
        let m = UniformMPS::new(a, CanonicalForm::Left).unwrap();
        let sp = transfer_spectrum(&m).unwrap();
        assert_eq!(sp.gammas.len(), 1);
        assert!((sp.gammas[0] - c(1.0)).norm() < 1e-14);
        assert_eq!(j_mut_analytic(&m, 0).unwrap(), 0.0);
    }

    #[test]
    fn random_canonical_mps() {
        for seed in 0..4 {
            let m = random_mps(3, 4, seed).unwrap();
            let sp = transfer_spectrum(&m).unwrap();
            assert!((sp.gammas[0] - c(1.0)).norm() < 1e-8);
            let id = &sp.right * &sp.left;
            assert!((id - DMatrix::<C>::identity(16, 16)).camax() < 1e-6);
        }
        let a = vec![DMatrix::<C>::identity(2, 2); 2];
        assert!(matches!(UniformMPS::new(a, CanonicalForm::Left), Err(Error::CanonicalForm(_))));
        let raw = UniformMPS::new(vec![DMatrix::<C>::identity(2, 2) * c(0.5); 2], CanonicalForm::None).unwrap();
        assert!(matches!(two_site_rdm(&raw, 0, RdmMode::Exact, Environment::Infinite), Err(Error::CanonicalForm(_))));
    }

    #[test]
    fn aklt_ring_is_the_bbh_ground_state() {
        let psi = ring_state(&aklt_mps(), 8).unwrap();
        let spec = SpinChainSpec::new(SpinModel::Bbh { theta: (1.0f64 / 3.0).atan() }, 8, Boundary::Periodic);
        let g = spinmodels::solve(&spec, &SolverOptions::default()).unwrap();
        let ov: C = psi.amplitudes().iter().zip(g.state.amplitudes()).map(|(a, b)| a.conj() * b).sum();
        assert!((ov.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn aklt_two_site_ring_contraction() {
        let m = aklt_mps();
        let psi = ring_state(&m, 12).unwrap();
        for l in 0..4 {
            let p = Bipartition::from_sites(&[1, l + 2], 12).unwrap();
            let brute = statecore::reduced_density_matrix(&psi, &p).unwrap();
            let rho = two_site_rdm(&m, l, RdmMode::Exact, Environment::Ring(12)).unwrap().rho;
            assert!((brute.elements() - &rho).camax() < 1e-8, "l = {l}");
        }
    }

    #[test]
    fn decomposition_invariants() {
        let m = aklt_mps();
        for l in 0..5 {
            let r = two_site_rdm(&m, l, RdmMode::FirstOrder, Environment::Infinite).unwrap();
            let dec = &r.decomposition;
            assert!(dec.rho_bar.trace().norm() < 1e-10);
            assert!((r.rho.trace().re - 1.0).abs() < 1e-9);
            // first order is exact when a single multiplet carries the correlations
            let exact = two_site_rdm(&m, l, RdmMode::Exact, Environment::Infinite).unwrap().rho;
            assert!((exact - &r.rho).camax() < 1e-12);
        }
        let far = two_site_rdm(&m, 30, RdmMode::Exact, Environment::Infinite).unwrap();
        assert!((far.rho - &far.decomposition.rho0).camax() < 1e-12);
        assert!(half_mutual_information(&m, 30, Environment::Infinite).unwrap().abs() < 1e-12);
    }

    #[test]
    fn aklt_mutual_link_decays_by_one_ninth() {
        let m = aklt_mps();
        let j: Vec<f64> = (0..6).map(|l| j_mut_analytic(&m, l).unwrap()).collect();
        for l in 0..5 {
            assert!((j[l + 1] / j[l] - 1.0 / 9.0).abs() < 1e-6);
        }
    }

    #[test]
    fn aklt_block_entropy_saturates() {
        let m = aklt_mps();
        let b = block_entropy_mps(&m, 20, 60).unwrap();
        assert!((b.entropy - 2.0 * LN_2).abs() < 1e-8);
        assert!((b.series.s0 - 2.0 * LN_2).abs() < 1e-12);
        let sum: f64 = b.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
    }

    #[test]
    fn block_entropy_matches_ring_state() {
        let m = random_mps(2, 3, 11).unwrap();
        let psi = ring_state(&m, 10).unwrap();
        for r in 1..10 {
            let b = block_entropy_mps(&m, r, 10).unwrap();
            let mask = (1u32 << r) - 1;
            let p = Bipartition::new(mask, 10).unwrap().canonical();
            assert!((b.entropy - psi.entropy_of(&p).unwrap()).abs() < 1e-9, "r = {r}");
            let swapped = block_entropy_mps(&m, 10 - r, 10).unwrap();
            assert!((b.entropy - swapped.entropy).abs() < 1e-10);
        }
    }

    #[test]
    fn itf_fixture_quality() {
        for h in [1.4, 2.0] {
            let m = itf(h);
            assert_eq!(m.bond_dim(), 4);
            let spec = SpinChainSpec::new(SpinModel::Itf { h }, 12, Boundary::Periodic);
            let g = spinmodels::solve(&spec, &SolverOptions::default()).unwrap();
            let e = itf_energy_density(&m, h).unwrap();
            assert!((e - g.energy / 12.0).abs() < 1e-3, "h = {h}: {e} vs {}", g.energy / 12.0);
            let ed = g.state.entropy_of(&Bipartition::new(1, 12).unwrap()).unwrap();
            let ring = entropy_of(&single_site_rdm(&m, Environment::Ring(12)).unwrap()).unwrap();
            assert!((ring - ed).abs() < 1e-3, "h = {h}: {ring} vs {ed}");
            if h == 2.0 {
                let s1 = entropy_of(&single_site_rdm(&m, Environment::Infinite).unwrap()).unwrap();
                assert!((s1 - ed).abs() < 1e-3, "{s1} vs {ed}");
            }
        }
    }

    #[test]
    fn paramagnet_has_no_correlations() {
        let spec = SpinChainSpec::new(SpinModel::Itf { h: 1e4 }, 12, Boundary::Periodic);
        let m = fit_uniform_mps(&spec, &ItebdOptions::new(4)).unwrap();
        let sp = transfer_spectrum(&m).unwrap();
        assert!(sp.gammas[1..].iter().all(|g| g.norm() < 1e-3));
        assert!(j_mut_analytic(&m, 0).unwrap() < 1e-6);
    }

    #[test]
    fn itf_block_entropies_against_exact_diagonalization() {
        let m = itf(1.4);
        let spec = SpinChainSpec::new(SpinModel::Itf { h: 1.4 }, 12, Boundary::Periodic);
        let g = spinmodels::solve(&spec, &SolverOptions::default()).unwrap();
        for r in 1..=6 {
            let b = block_entropy_mps(&m, r, 12).unwrap();
            let ed = g.state.entropy_of(&Bipartition::new((1 << r) - 1, 12).unwrap()).unwrap();
            assert!((b.entropy - ed).abs() < 2e-3, "r = {r}: {} vs {ed}", b.entropy);
        }
    }

    #[test]
    fn series_agrees_with_direct_block_links() {
        let m = itf(1.4);
        // at r = 2 third-order terms are still a fraction gamma^r of the total
        for r in 3..=6 {
            let j = j_cont_analytic(&m, r, 40).unwrap();
            assert!((j.series - j.direct).abs() <= 0.05 * j.direct.abs(), "r = {r}: {j:?}");
        }
        assert!(j_cont_analytic(&m, 0, 12).is_err());
    }

    fn tail_slope(m: &UniformMPS, rs: core::ops::RangeInclusive<usize>) -> f64 {
        let pts: Vec<(f64, f64)> = rs.map(|r| (r as f64, j_cont_analytic(m, r, 80).unwrap().direct.ln())).collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn block_links_decay_with_squared_transfer_eigenvalue() {
        // first-order channel weights vanish, so S(r) approaches S0 as gamma_1^(2r)
        let m = itf(2.0);
        let b = block_entropy_mps(&m, 3, 40).unwrap();
        assert!(b.series.omega.iter().all(|w| w.norm() < 1e-10));
        let g1 = transfer_spectrum(&m).unwrap().gammas[1].norm();
        let slope = tail_slope(&m, 2..=5);
        assert!((slope / (2.0 * g1.ln()) - 1.0).abs() < 0.1, "{slope}");
        for m in [itf(1.4), aklt_mps()] {
            let g1 = transfer_spectrum(&m).unwrap().gammas[1].norm();
            let slope = tail_slope(&m, 6..=10);
            assert!((slope / (2.0 * g1.ln()) - 1.0).abs() < 0.1, "{slope}");
        }
    }

    #[test]
    fn large_bond_dimensions_fit_and_converge() {
        // tiny Schmidt values at D = 6, 8 must not break the merge or the block series
        let spec = SpinChainSpec::new(SpinModel::Itf { h: 2.0 }, 2, Boundary::Periodic);
        let e: Vec<f64> = [4, 6, 8]
            .iter()
            .map(|&d| {
                let m = fit_uniform_mps(&spec, &ItebdOptions::new(d)).unwrap();
                assert!(j_cont_analytic(&m, 2, 12).unwrap().direct > 0.0);
                itf_energy_density(&m, 2.0).unwrap()
            })
            .collect();
        assert!(e[1] <= e[0] + 1e-9 && (e[2] - e[1]).abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn mutual_link_tracks_exact_half_information() {
        let m = itf(1.4);
        for l in 2..5 {
            let jm = j_mut_analytic(&m, l).unwrap();
            let ex = half_mutual_information(&m, l, Environment::Infinite).unwrap();
            assert!((jm - ex).abs() <= 0.5 * jm.abs(), "l = {l}: {jm} vs {ex}");
        }
    }
}
