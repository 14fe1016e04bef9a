//! Dense complex linear algebra: tensor products, operator parts, brackets,
//! the hermitian eigensolver, partial traces and purities.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{argument, contract, dimension, Result};
use crate::numeric::{DENSE_EIGEN_DIM, TOLERANCES};

pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const IMAG: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `w^k` with `w = e^{2πi/d}`, exact at the quarter, third and sixth turns.
pub fn omega_pow(d: usize, k: i64) -> C64 {
    let d_i = d as i64;
    let k = k.rem_euclid(d_i);
    if k == 0 {
        return ONE;
    }
    if 2 * k > d_i {
        return omega_pow(d, d_i - k).conj();
    }
    let (k, d) = (k as usize, d);
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    if 2 * k == d {
        c(-1.0, 0.0)
    } else if 4 * k == d {
        IMAG
    } else if 3 * k == d {
        c(-0.5, half_sqrt3)
    } else if 6 * k == d {
        c(0.5, half_sqrt3)
    } else {
        let t = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
        c(t.cos(), t.sin())
    }
}

/// Primitive root `w = e^{2πi/d}`.
pub fn omega(d: usize) -> C64 {
    omega_pow(d, 1)
}

/// Replaces `z` by the exact value `m·w^k` (integer `m`, `d`-th root `w^k`) when it lies within `tol`.
pub fn snap_cyclotomic(z: C64, d: usize, tol: f64) -> C64 {
    if z.norm() <= tol {
        return ZERO;
    }
    for k in 0..d as i64 {
        let root = omega_pow(d, k);
        let r = z * root.conj();
        let m = r.re.round();
        if m != 0.0 && (r.re - m).abs() <= tol && r.im.abs() <= tol {
            return root * m;
        }
    }
    z
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Kronecker product of the factors in list order; factor 0 is the leftmost.
pub fn kron(factors: &[&CMatrix]) -> Result<CMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| argument("kron of an empty factor list"))?;
    Ok(rest.iter().fold((*first).clone(), |acc, f| acc.kronecker(f)))
}

fn require_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(argument(format!(
            "{what} needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Hermitian and anti-hermitian parts: `H = (M + M†)/2`, `A = (M − M†)/(2i)`, so `M = H + iA`.
pub fn split_parts(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    require_square(m, "split_parts")?;
    Ok((hermitian_part(m), antihermitian_part(m)))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn antihermitian_part(m: &CMatrix) -> CMatrix {
    (m - m.adjoint()) * c(0.0, -0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketKind {
    Commutator,
    Anticommutator,
    /// `{{P, Q}} = P Q† + Q P†`.
    ComplexAnticommutator,
}

pub fn bracket(kind: BracketKind, p: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    require_square(p, "bracket")?;
    require_square(q, "bracket")?;
    if p.nrows() != q.nrows() {
        return Err(argument(format!(
            "bracket of {}x{} and {}x{} operators",
            p.nrows(),
            p.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    Ok(match kind {
        BracketKind::Commutator => p * q - q * p,
        BracketKind::Anticommutator => p * q + q * p,
        BracketKind::ComplexAnticommutator => p * q.adjoint() + q * p.adjoint(),
    })
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `|U U† − I|`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m * m.adjoint() - identity(m.nrows())))
}

/// Largest entry of `|[M, M†]|`.
pub fn normality_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let md = m.adjoint();
    max_abs(&(m * &md - &md * m))
}

pub fn mat_pow(m: &CMatrix, k: u32) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: CVector,
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    require_square(h, "eigensolver")?;
    let defect = hermiticity_defect(h);
    if defect > TOLERANCES.hermiticity * max_abs(h).max(1.0) {
        return Err(contract(format!(
            "eigensolver input is not hermitian (defect {defect:e})"
        )));
    }
    Ok(())
}

/// Full spectrum of a hermitian matrix, eigenvalues ascending with matching eigenvector columns.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(h)?;
    Ok(eigh_unchecked(h))
}

fn eigh_unchecked(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Largest eigenvalue and a unit eigenvector of a hermitian matrix.
///
/// Small matrices use a full decomposition; larger ones use Lanczos with full
/// reorthogonalization and fall back to the full decomposition whenever the
/// residual bound is missed.
pub fn max_eigenpair(h: &CMatrix) -> Result<Eigenpair> {
    check_hermitian(h)?;
    let n = h.nrows();
    if n == 0 {
        return Err(argument("eigensolver on an empty matrix"));
    }
    let scale = h.norm().max(f64::MIN_POSITIVE);
    let bound = TOLERANCES.eigen_residual * scale;
    if n > DENSE_EIGEN_DIM {
        if let Some(pair) = lanczos_top(h, bound) {
            return Ok(pair);
        }
    }
    let (values, vectors) = eigh_unchecked(h);
    let pair = Eigenpair {
        value: values[n - 1],
        vector: vectors.column(n - 1).into_owned(),
    };
    let res = residual(h, &pair);
    if res > bound && h.norm() > 0.0 {
        return Err(contract(format!("eigen residual {res:e} exceeds {bound:e}")));
    }
    Ok(pair)
}

/// Smallest eigenvalue and eigenvector, through the largest of `−H`.
pub fn min_eigenpair(h: &CMatrix) -> Result<Eigenpair> {
    let pair = max_eigenpair(&(-h))?;
    Ok(Eigenpair {
        value: -pair.value,
        vector: pair.vector,
    })
}

pub fn residual(h: &CMatrix, pair: &Eigenpair) -> f64 {
    (h * &pair.vector - &pair.vector * c(pair.value, 0.0)).norm()
}

fn start_vector(n: usize) -> CVector {
    // Fixed pseudo-random start keeps the solver deterministic.
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let v = CVector::from_fn(n, |_, _| c(next(), next()));
    let norm = v.norm();
    v / c(norm, 0.0)
}

fn lanczos_top(h: &CMatrix, bound: f64) -> Option<Eigenpair> {
    let n = h.nrows();
    let max_krylov = n.min(160);
    let mut v0 = start_vector(n);
    for _restart in 0..8 {
        let mut basis: Vec<CVector> = Vec::with_capacity(max_krylov);
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        basis.push(v0.clone());
        let mut best: Option<Eigenpair> = None;
        for j in 0..max_krylov {
            let mut w = h * &basis[j];
            let a = basis[j].dotc(&w).re;
            alpha.push(a);
            for _pass in 0..2 {
                for q in &basis {
                    let proj = q.dotc(&w);
                    w.axpy(-proj, q, ONE);
                }
            }
            let b = w.norm();
            let k = alpha.len();
            let exhausted = b <= 1e-13 * h.norm().max(1.0) || k == max_krylov;
            if k % 8 == 0 || exhausted {
                let mut t = DMatrix::<f64>::zeros(k, k);
                for i in 0..k {
                    t[(i, i)] = alpha[i];
                    if i + 1 < k {
                        t[(i, i + 1)] = beta[i];
                        t[(i + 1, i)] = beta[i];
                    }
                }
                let eig = t.symmetric_eigen();
                let top = (0..k)
                    .max_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]))
                    .unwrap_or(0);
                let theta = eig.eigenvalues[top];
                let y = eig.eigenvectors.column(top);
                if b * y[k - 1].abs() <= 0.1 * bound || exhausted {
                    let mut v = CVector::zeros(n);
                    for (i, q) in basis.iter().enumerate() {
                        v.axpy(c(y[i], 0.0), q, ONE);
                    }
                    let norm = v.norm();
                    v /= c(norm, 0.0);
                    let pair = Eigenpair {
                        value: theta,
                        vector: v,
                    };
                    if residual(h, &pair) <= bound {
                        return Some(pair);
                    }
                    best = Some(pair);
                    break;
                }
            }
            if exhausted {
                break;
            }
            beta.push(b);
            basis.push(w / c(b, 0.0));
        }
        v0 = best?.vector;
    }
    None
}

/// A hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        require_square(&matrix, "density matrix")?;
        let tol = TOLERANCES;
        let defect = hermiticity_defect(&matrix);
        if defect > tol.hermiticity {
            return Err(contract(format!(
                "density matrix not hermitian (defect {defect:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
            return Err(contract(format!("density matrix trace {trace} is not 1")));
        }
        let (values, _) = eigh_unchecked(&matrix);
        if values.first().copied().unwrap_or(0.0) < -tol.psd {
            return Err(contract("density matrix has a negative eigenvalue"));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > TOLERANCES.state_norm * 10.0 {
            return Err(contract(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            matrix: psi * psi.adjoint(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_parties(dim: usize, keep: &[usize], n: usize, d: usize) -> Result<Vec<usize>> {
    if d < 2 || d.checked_pow(n as u32) != Some(dim) {
        return Err(argument(format!(
            "dimension {dim} is not {d}^{n}"
        )));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() || sorted.iter().any(|&k| k >= n) {
        return Err(argument(format!("invalid party subset {keep:?} for {n} parties")));
    }
    Ok(sorted)
}

/// Splits every basis index into (kept index, traced index), big-endian in party order.
fn split_indices(n: usize, d: usize, keep: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let dim = d.pow(n as u32);
    let mut kept = vec![0usize; dim];
    let mut traced = vec![0usize; dim];
    for idx in 0..dim {
        let (mut a, mut t) = (0usize, 0usize);
        for party in 0..n {
            let digit = (idx / d.pow((n - 1 - party) as u32)) % d;
            if keep.contains(&party) {
                a = a * d + digit;
            } else {
                t = t * d + digit;
            }
        }
        kept[idx] = a;
        traced[idx] = t;
    }
    (kept, traced)
}

/// Reduced density matrix on the parties in `keep` (taken in ascending order).
pub fn partial_trace(
    rho: &DensityMatrix,
    keep: &[usize],
    n: usize,
    d: usize,
) -> Result<DensityMatrix> {
    let keep = check_parties(rho.dim(), keep, n, d)?;
    let (kept, traced) = split_indices(n, d, &keep);
    let kd = d.pow(keep.len() as u32);
    let td = d.pow((n - keep.len()) as u32);
    let mut full = vec![vec![0usize; td]; kd];
    for idx in 0..rho.dim() {
        full[kept[idx]][traced[idx]] = idx;
    }
    let m = rho.matrix();
    let out = CMatrix::from_fn(kd, kd, |a, b| {
        (0..td).map(|t| m[(full[a][t], full[b][t])]).sum()
    });
    Ok(DensityMatrix { matrix: out })
}

/// Reduced density matrix of a pure state without forming `|ψ⟩⟨ψ|`.
pub fn reduce_pure(psi: &CVector, keep: &[usize], n: usize, d: usize) -> Result<DensityMatrix> {
    let keep = check_parties(psi.len(), keep, n, d)?;
    let (kept, traced) = split_indices(n, d, &keep);
    let kd = d.pow(keep.len() as u32);
    let td = d.pow((n - keep.len()) as u32);
    let mut reshaped = CMatrix::zeros(kd, td);
    for idx in 0..psi.len() {
        reshaped[(kept[idx], traced[idx])] = psi[idx];
    }
    Ok(DensityMatrix {
        matrix: &reshaped * reshaped.adjoint(),
    })
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let phases = CMatrix::from_diagonal(&CVector::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            ONE
        }
    }));
    q * phases
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    hermitian_part(&g)
}

pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Complex matrix as nested `[re, im]` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }
}

impl TryFrom<&MatrixJson> for CMatrix {
    type Error = crate::Error;

    fn try_from(m: &MatrixJson) -> Result<Self> {
        let rows = m.0.len();
        let cols = m.0.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || m.0.iter().any(|r| r.len() != cols) {
            return Err(dimension("matrix rows must be non-empty and of equal length"));
        }
        Ok(CMatrix::from_fn(rows, cols, |i, j| {
            c(m.0[i][j][0], m.0[i][j][1])
        }))
    }
}

/// Complex vector as a list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorJson(pub Vec<[f64; 2]>);

impl From<&CVector> for VectorJson {
    fn from(v: &CVector) -> Self {
        VectorJson(v.iter().map(|z| [z.re, z.im]).collect())
    }
}

impl From<&VectorJson> for CVector {
    fn from(v: &VectorJson) -> Self {
        CVector::from_iterator(v.0.len(), v.0.iter().map(|p| c(p[0], p[1])))
    }
}
