//! Setting operators: Weyl–Heisenberg generators, Gell-Mann matrices, Fourier
//! and MOS matrices, parametrized root-of-identity unitaries, and the MUB and
//! nilpotency predicates.

use serde::{Deserialize, Serialize};

use crate::error::{argument, contract, Error, Result};
use crate::linalg::{
    c, eigh, hermiticity_defect, identity, mat_pow, max_abs, normality_defect, omega_pow,
    unitarity_defect, CMatrix, CVector, C64, IMAG, ONE, ZERO,
};
use crate::numeric::TOLERANCES;
use crate::search::{self, PatternSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    /// Unitary with spectrum inside the d-th roots of unity.
    UnitaryRoot,
    Hermitian,
    /// Unitary whose d-th power is not the identity.
    Unitary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingOperator {
    matrix: CMatrix,
    flavor: Flavor,
    label: String,
}

fn root_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    max_abs(&(mat_pow(m, d as u32) - identity(d)))
}

impl SettingOperator {
    /// Validates `U U† = I` and `U^d = I`.
    pub fn unitary_root(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if !matrix.is_square() {
            return Err(argument(format!("setting `{label}` is not square")));
        }
        let tol = TOLERANCES;
        let ud = unitarity_defect(&matrix);
        if ud > tol.unitarity {
            return Err(contract(format!("setting `{label}` is not unitary (defect {ud:e})")));
        }
        let rd = root_defect(&matrix);
        if rd > tol.root_of_identity {
            return Err(contract(format!(
                "setting `{label}` is not a root of the identity (defect {rd:e})"
            )));
        }
        Ok(Self {
            matrix,
            flavor: Flavor::UnitaryRoot,
            label,
        })
    }

    /// Skips validation; for matrices that hold the flavor's property by construction.
    pub(crate) fn trusted(matrix: CMatrix, flavor: Flavor, label: impl Into<String>) -> Self {
        Self {
            matrix,
            flavor,
            label: label.into(),
        }
    }

    pub fn hermitian(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if !matrix.is_square() {
            return Err(argument(format!("setting `{label}` is not square")));
        }
        let hd = hermiticity_defect(&matrix);
        if hd > TOLERANCES.hermitian_setting {
            return Err(contract(format!("setting `{label}` is not hermitian (defect {hd:e})")));
        }
        Ok(Self {
            matrix,
            flavor: Flavor::Hermitian,
            label,
        })
    }

    /// Picks the strongest flavor the matrix satisfies: root of identity, then hermitian, then unitary.
    pub fn classify(matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if !matrix.is_square() {
            return Err(argument(format!("setting `{label}` is not square")));
        }
        let unitary = unitarity_defect(&matrix) <= TOLERANCES.unitarity;
        let flavor = if unitary && root_defect(&matrix) <= TOLERANCES.root_of_identity {
            Flavor::UnitaryRoot
        } else if hermiticity_defect(&matrix) <= TOLERANCES.hermitian_setting {
            Flavor::Hermitian
        } else if unitary {
            Flavor::Unitary
        } else {
            return Err(contract(format!(
                "setting `{label}` is neither unitary nor hermitian"
            )));
        };
        Ok(Self {
            matrix,
            flavor,
            label,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `V O V†` for a unitary `V`; keeps the flavor.
    pub fn conjugated(&self, v: &CMatrix) -> Result<Self> {
        if v.nrows() != self.dim() || unitarity_defect(v) > TOLERANCES.unitarity {
            return Err(contract("conjugation needs a unitary of matching dimension"));
        }
        Ok(Self {
            matrix: v * &self.matrix * v.adjoint(),
            flavor: self.flavor,
            label: self.label.clone(),
        })
    }
}

fn wh_label(k: usize, j: usize) -> String {
    let part = |sym: &str, e: usize| match e {
        0 => String::new(),
        1 => sym.to_string(),
        e => format!("{sym}{e}"),
    };
    let s = format!("{}{}", part("X", k), part("Z", j));
    if s.is_empty() {
        "I".into()
    } else {
        s
    }
}

/// `X^k Z^j = Σ_m |m+k⟩ w^{jm} ⟨m|`.
pub fn weyl_heisenberg(d: usize, k: i64, j: i64) -> Result<SettingOperator> {
    if d < 2 {
        return Err(argument(format!("Weyl–Heisenberg operators need d ≥ 2, got {d}")));
    }
    let k = k.rem_euclid(d as i64) as usize;
    let j = j.rem_euclid(d as i64);
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        m[((col + k) % d, col)] = omega_pow(d, j * col as i64);
    }
    SettingOperator::classify(m, wh_label(k, j as usize))
}

/// Generalized Gell-Mann basis in dimension `d`: for each level `l`, the
/// symmetric and antisymmetric pairs `(j, l)` with `j < l`, then the diagonal
/// generator of level `l`. For `d = 3` this is the standard λ₁..λ₈ order.
pub fn generalized_gell_mann(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    for l in 1..d {
        for j in 0..l {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, l)] = ONE;
            sym[(l, j)] = ONE;
            out.push(sym);
            let mut anti = CMatrix::zeros(d, d);
            anti[(j, l)] = -IMAG;
            anti[(l, j)] = IMAG;
            out.push(anti);
        }
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for i in 0..l {
            diag[(i, i)] = c(norm, 0.0);
        }
        diag[(l, l)] = c(-(l as f64) * norm, 0.0);
        out.push(diag);
    }
    out
}

/// Gell-Mann matrix λᵢ, `i` in 1..=8.
pub fn gell_mann(i: usize) -> Result<SettingOperator> {
    if !(1..=8).contains(&i) {
        return Err(argument(format!("Gell-Mann index {i} outside 1..8")));
    }
    let m = generalized_gell_mann(3).swap_remove(i - 1);
    SettingOperator::hermitian(m, format!("gm:{i}"))
}

/// `F_{jk} = w^{jk}`, divided by `√d` when normalized.
pub fn fourier(d: usize, normalized: bool) -> CMatrix {
    let scale = if normalized { 1.0 / (d as f64).sqrt() } else { 1.0 };
    CMatrix::from_fn(d, d, |j, k| omega_pow(d, (j * k) as i64) * scale)
}

/// `e^{iφ}` times the cyclic shift with every shift entry negated except the top-right one.
pub fn mos(d: usize, phi: f64) -> Result<SettingOperator> {
    if d < 2 {
        return Err(argument(format!("MOS needs d ≥ 2, got {d}")));
    }
    let phase = if phi == 0.0 { ONE } else { c(phi.cos(), phi.sin()) };
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d - 1 {
        m[(col + 1, col)] = -phase;
    }
    m[(0, d - 1)] = phase;
    SettingOperator::classify(m, format!("mos:{phi}"))
}

/// Spectral data of a normal matrix.
#[derive(Debug, Clone)]
pub struct Eigenbasis {
    pub values: Vec<C64>,
    /// Columns are orthonormal eigenvectors.
    pub vectors: CMatrix,
    /// Index groups of (numerically) equal eigenvalues.
    pub groups: Vec<Vec<usize>>,
}

/// Eigenbasis of a normal matrix through a generic hermitian combination of its parts.
pub fn eigenbasis(m: &CMatrix) -> Result<Eigenbasis> {
    let nd = normality_defect(m);
    if nd > TOLERANCES.normality * max_abs(m).max(1.0).powi(2) {
        return Err(contract(format!("operator is not normal (defect {nd:e})")));
    }
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let a = (m - m.adjoint()) * c(0.0, -0.5);
    let k = &h + &a * c(0.577_215_664_901_532_9, 0.0);
    let (_, vectors) = eigh(&crate::linalg::hermitian_part(&k))?;
    let d = m.nrows();
    let values: Vec<C64> = (0..d)
        .map(|i| {
            let v = vectors.column(i);
            v.dotc(&(m * v))
        })
        .collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        let tol = TOLERANCES.degeneracy * values[i].norm().max(1.0);
        match groups
            .iter_mut()
            .find(|g| (values[g[0]] - values[i]).norm() <= tol)
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    Ok(Eigenbasis {
        values,
        vectors,
        groups,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MubCheck {
    pub unbiased: bool,
    pub defect: f64,
}

fn overlap_defect(p: &CMatrix, q: &CMatrix) -> f64 {
    let d = p.nrows();
    let target = 1.0 / d as f64;
    let g = p.adjoint() * q;
    g.iter().fold(0.0, |acc, z| acc.max((z.norm_sqr() - target).abs()))
}

/// Unitary acting inside each degenerate group, built from generalized Gell-Mann generators.
fn block_rotation(d: usize, groups: &[Vec<usize>], params: &[f64]) -> CMatrix {
    let mut u = identity(d);
    let mut offset = 0;
    for g in groups.iter().filter(|g| g.len() > 1) {
        let m = g.len();
        let gens = generalized_gell_mann(m);
        let block = unitary_exp(&gens, &params[offset..offset + gens.len()]);
        offset += gens.len();
        for (a, &ia) in g.iter().enumerate() {
            for (b, &ib) in g.iter().enumerate() {
                u[(ia, ib)] = block[(a, b)];
            }
        }
    }
    u
}

fn rotation_params(groups: &[Vec<usize>]) -> usize {
    groups
        .iter()
        .filter(|g| g.len() > 1)
        .map(|g| g.len() * g.len() - 1)
        .sum()
}

/// Mutual unbiasedness of the eigenbases of two normal operators.
///
/// Degenerate eigenspaces make the basis ambiguous; the defect is then
/// minimized over rotations inside each degenerate eigenspace.
pub fn is_mub(p: &SettingOperator, q: &SettingOperator, tol: f64) -> Result<MubCheck> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!(
            "MUB check of {}- and {}-dimensional operators",
            p.dim(),
            q.dim()
        )));
    }
    let bp = eigenbasis(p.matrix())?;
    let bq = eigenbasis(q.matrix())?;
    let np = rotation_params(&bp.groups);
    let nq = rotation_params(&bq.groups);
    let defect = if np + nq == 0 {
        overlap_defect(&bp.vectors, &bq.vectors)
    } else {
        let d = p.dim();
        let objective = |x: &[f64]| {
            let vp = &bp.vectors * block_rotation(d, &bp.groups, &x[..np]);
            let vq = &bq.vectors * block_rotation(d, &bq.groups, &x[np..]);
            overlap_defect(&vp, &vq)
        };
        let cfg = PatternSearch {
            initial_step: 0.4,
            min_step: 1e-10,
            shrink: 0.5,
            max_evals: 40_000,
        };
        let mut best = objective(&vec![0.0; np + nq]);
        for start in 0..6 {
            let x0: Vec<f64> = (0..np + nq)
                .map(|i| 0.7 * (((i + 1) * (start + 1)) as f64 * 1.618_033_988_7).sin())
                .collect();
            let r = search::minimize(objective, x0, &cfg);
            best = best.min(r.value);
        }
        best
    };
    Ok(MubCheck {
        unbiased: defect <= tol,
        defect,
    })
}

/// `exp(i Σ θ_a G_a)` for hermitian generators.
pub fn unitary_exp(generators: &[CMatrix], params: &[f64]) -> CMatrix {
    let d = generators.first().map_or(1, |g| g.nrows());
    let mut k = CMatrix::zeros(d, d);
    for (g, &t) in generators.iter().zip(params) {
        if t != 0.0 {
            k += g * c(t, 0.0);
        }
    }
    if params.iter().all(|&t| t == 0.0) {
        return identity(d);
    }
    let (values, vectors) = eigh(&crate::linalg::hermitian_part(&k))
        .expect("generator combination is hermitian");
    let phases = CVector::from_iterator(d, values.iter().map(|&l| c(l.cos(), l.sin())));
    &vectors * CMatrix::from_diagonal(&phases) * vectors.adjoint()
}

/// `V diag(w^{π(0)}, …, w^{π(d−1)}) V†` with `V = exp(i Σ θ λ)` over the generalized Gell-Mann basis.
pub fn root_of_identity_unitary(
    d: usize,
    params: &[f64],
    outcome_phases: &[usize],
) -> Result<SettingOperator> {
    if d < 2 {
        return Err(argument(format!("root-of-identity unitary needs d ≥ 2, got {d}")));
    }
    if params.len() != d * d - 1 || params.iter().any(|p| !p.is_finite()) {
        return Err(argument(format!(
            "expected {} finite parameters, got {}",
            d * d - 1,
            params.len()
        )));
    }
    let mut seen = vec![false; d];
    if outcome_phases.len() != d
        || outcome_phases
            .iter()
            .any(|&p| p >= d || std::mem::replace(&mut seen[p], true))
    {
        return Err(argument(format!("{outcome_phases:?} is not a permutation of 0..{d}")));
    }
    let v = unitary_exp(&generalized_gell_mann(d), params);
    let diag = CVector::from_iterator(d, outcome_phases.iter().map(|&p| omega_pow(d, p as i64)));
    let u = &v * CMatrix::from_diagonal(&diag) * v.adjoint();
    Ok(SettingOperator {
        matrix: u,
        flavor: Flavor::UnitaryRoot,
        label: "num".into(),
    })
}

/// `min_k ‖M^k‖ / ‖M‖^k` over `k ≤ dim` (Frobenius norm) with the first `k` attaining it.
pub fn nilpotency_defect(m: &CMatrix) -> Result<(f64, usize)> {
    if !m.is_square() {
        return Err(argument("nilpotency defect of a non-square matrix"));
    }
    let norm = m.norm();
    if norm == 0.0 {
        return Ok((0.0, 1));
    }
    let mut power = m.clone();
    let mut best = (1.0, 1);
    for k in 1..=m.nrows() {
        if k > 1 {
            power = &power * m;
        }
        let ratio = power.norm() / norm.powi(k as i32);
        if ratio < best.0 {
            best = (ratio, k);
        }
        if ratio == 0.0 {
            break;
        }
    }
    Ok(best)
}

fn parse_args<const N: usize>(s: &str, name: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(argument(format!("`{name}` expects {N} argument(s)")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_real(p).ok_or_else(|| argument(format!("cannot parse `{p}` in `{name}`")))?;
    }
    Ok(out)
}

/// Parses a real number, also accepting `pi`, `pi/k` and `k*pi/m` forms.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let pi = std::f64::consts::PI;
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let (neg, num) = match num.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, num),
    };
    let factor = if num == "pi" {
        1.0
    } else {
        num.strip_suffix("*pi")?.parse::<f64>().ok()?
    };
    Some(if neg { -1.0 } else { 1.0 } * factor * pi / den)
}

/// `X^k Z^j` written as `X2Z2`, `XZ2`, `Z2`, ….
fn parse_monomial(name: &str) -> Option<(i64, i64)> {
    let power = |digits: &str| -> Option<i64> {
        if digits.is_empty() {
            Some(1)
        } else {
            digits.parse().ok()
        }
    };
    let (x, z) = match (name.find('X'), name.find('Z')) {
        (Some(0), Some(zi)) => (&name[1..zi], Some(&name[zi + 1..])),
        (Some(0), None) => (&name[1..], None),
        (None, Some(0)) => return Some((0, power(&name[1..])?)),
        _ => return None,
    };
    Some((power(x)?, z.map_or(Some(0), power)?))
}

/// Named settings: `X`, `Z`, `I`, monomials such as `X2Z2`, `XkZj:k,j`, `mos:phi`, `gm:i`, `fourier`, `pauli:theta`.
pub fn parse_setting(name: &str, d: usize) -> Result<SettingOperator> {
    let lookup = || Error::Lookup {
        kind: "setting",
        name: name.to_string(),
    };
    let (head, args) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    match (head, args) {
        ("I", None) => weyl_heisenberg(d, 0, 0),
        ("XkZj", Some(a)) => {
            let [k, j] = parse_args::<2>(a, name)?;
            weyl_heisenberg(d, k as i64, j as i64)
        }
        ("mos", Some(a)) => {
            let [phi] = parse_args::<1>(a, name)?;
            mos(d, phi)
        }
        ("gm", Some(a)) => {
            if d != 3 {
                return Err(argument("Gell-Mann settings are qutrit operators"));
            }
            let [i] = parse_args::<1>(a, name)?;
            gell_mann(i as usize)
        }
        ("fourier", None) => SettingOperator::classify(fourier(d, true), "fourier"),
        ("pauli", Some(a)) => {
            if d != 2 {
                return Err(argument("`pauli:theta` is a qubit setting"));
            }
            let [t] = parse_args::<1>(a, name)?;
            Ok(pauli_setting(t))
        }
        (m, None) => match parse_monomial(m) {
            Some((k, j)) => weyl_heisenberg(d, k, j),
            None => Err(lookup()),
        },
        _ => Err(lookup()),
    }
}

/// `cos θ σz + sin θ σx`.
pub fn pauli_setting(theta: f64) -> SettingOperator {
    let (s, co) = theta.sin_cos();
    let m = CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0)]);
    SettingOperator {
        matrix: m,
        flavor: Flavor::UnitaryRoot,
        label: format!("pauli:{theta}"),
    }
}

/// Real linear combination `Σ wᵢ λᵢ` of Gell-Mann matrices.
pub fn gell_mann_combination(weights: &[(usize, f64)], label: &str) -> Result<SettingOperator> {
    let mut m = CMatrix::zeros(3, 3);
    for &(i, w) in weights {
        m += gell_mann(i)?.matrix() * c(w, 0.0);
    }
    SettingOperator::hermitian(m, label)
}

pub fn zero_matrix(d: usize) -> CMatrix {
    CMatrix::from_element(d, d, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{bracket, max_eigenpair, BracketKind};

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    #[test]
    fn weyl_heisenberg_generators() {
        let w = omega_pow(3, 1);
        let x = weyl_heisenberg(3, 1, 0).unwrap();
        let expected = CMatrix::from_row_slice(
            3,
            3,
            &[ZERO, ZERO, ONE, ONE, ZERO, ZERO, ZERO, ONE, ZERO],
        );
        assert_eq!(x.matrix(), &expected);
        assert_eq!(x.flavor(), Flavor::UnitaryRoot);
        let z = weyl_heisenberg(3, 0, 1).unwrap();
        let zd = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, w, w * w]));
        assert!(close(z.matrix(), &zd, 1e-15));
        assert_eq!(weyl_heisenberg(3, 0, 0).unwrap().matrix(), &identity(3));
        assert_eq!(weyl_heisenberg(3, 4, -2).unwrap().label(), "XZ");
        assert!(weyl_heisenberg(1, 0, 0).is_err());
    }

    #[test]
    fn weyl_heisenberg_matches_matrix_powers() {
        let x = weyl_heisenberg(3, 1, 0).unwrap();
        let z = weyl_heisenberg(3, 0, 1).unwrap();
        for k in 0..3u32 {
            for j in 0..3u32 {
                let p = mat_pow(x.matrix(), k) * mat_pow(z.matrix(), j);
                let wh = weyl_heisenberg(3, k as i64, j as i64).unwrap();
                assert!(close(wh.matrix(), &p, 1e-14));
            }
        }
    }

    #[test]
    fn weyl_heisenberg_basis_is_orthogonal() {
        let ops: Vec<CMatrix> = (0..3)
            .flat_map(|k| (0..3).map(move |j| weyl_heisenberg(3, k, j).unwrap().matrix().clone()))
            .collect();
        for (a, p) in ops.iter().enumerate() {
            for (b, q) in ops.iter().enumerate() {
                let ip = (p.adjoint() * q).trace().norm();
                let expected = if a == b { 3.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qubit_xz_is_not_a_root() {
        let xz = weyl_heisenberg(2, 1, 1).unwrap();
        assert_eq!(xz.flavor(), Flavor::Unitary);
    }

    #[test]
    fn gell_mann_conventions() {
        let l3 = gell_mann(3).unwrap();
        let diag = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, -ONE, ZERO]));
        assert_eq!(l3.matrix(), &diag);
        let l4 = gell_mann(4).unwrap();
        assert!(((l4.matrix() * l4.matrix()).trace() - c(2.0, 0.0)).norm() < 1e-15);
        for i in 1..=8 {
            for j in 1..=8 {
                let t = (gell_mann(i).unwrap().matrix() * gell_mann(j).unwrap().matrix()).trace();
                let expected = if i == j { 2.0 } else { 0.0 };
                assert!((t - c(expected, 0.0)).norm() < 1e-14);
            }
            assert!(gell_mann(i).unwrap().matrix().trace().norm() < 1e-15);
        }
        assert!(gell_mann(0).is_err());
        assert!(gell_mann(9).is_err());
    }

    #[test]
    fn gell_mann_setting_has_spectrum_minus_one_zero_one() {
        let s3 = 3f64.sqrt();
        let a = gell_mann_combination(
            &[(1, 2.0 / 3.0), (6, 2.0 / 3.0), (3, 1.0 / 6.0), (8, s3 / 6.0)],
            "A'",
        )
        .unwrap();
        let (values, _) = eigh(a.matrix()).unwrap();
        for (v, e) in values.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_entries_and_unitarity() {
        let f = fourier(3, false);
        assert_eq!(f[(1, 2)], omega_pow(3, 2));
        let fh = fourier(2, true);
        let h = 1.0 / 2f64.sqrt();
        assert!(close(&fh, &CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]), 1e-15));
        let f3 = fourier(3, true);
        assert!(close(&(&f3 * f3.adjoint()), &identity(3), 1e-15));
    }

    #[test]
    fn mos_matrix_form() {
        let m = mos(3, 0.0).unwrap();
        let expected = CMatrix::from_row_slice(
            3,
            3,
            &[ZERO, ZERO, ONE, -ONE, ZERO, ZERO, ZERO, -ONE, ZERO],
        );
        assert_eq!(m.matrix(), &expected);
        assert_eq!(m.flavor(), Flavor::UnitaryRoot);
        assert_eq!(mat_pow(m.matrix(), 3), identity(3));
        let x = weyl_heisenberg(3, 1, 0).unwrap();
        for phi in [0.0, 0.3, 2.0] {
            let mp = mos(3, phi).unwrap();
            let same_moduli = mp
                .matrix()
                .iter()
                .zip(x.matrix().iter())
                .all(|(a, b)| (a.norm() - b.norm()).abs() < 1e-15);
            assert!(same_moduli);
        }
        assert_eq!(mos(3, 0.3).unwrap().flavor(), Flavor::Unitary);
        assert_eq!(mos(4, 0.0).unwrap().flavor(), Flavor::Unitary);
        assert_eq!(mos(4, std::f64::consts::PI / 4.0).unwrap().flavor(), Flavor::UnitaryRoot);
    }

    #[test]
    fn complex_anticommutator_maximum() {
        let x = weyl_heisenberg(3, 1, 0).unwrap();
        let z = weyl_heisenberg(3, 0, 1).unwrap();
        let xx = bracket(BracketKind::ComplexAnticommutator, x.matrix(), x.matrix()).unwrap();
        assert_eq!(xx, identity(3) * c(2.0, 0.0));
        let xz = bracket(BracketKind::ComplexAnticommutator, x.matrix(), z.matrix()).unwrap();
        assert!((max_eigenpair(&xz).unwrap().value - 2.0).abs() < 1e-12);
        let m = mos(3, 0.0).unwrap();
        let xm = bracket(BracketKind::ComplexAnticommutator, x.matrix(), m.matrix()).unwrap();
        assert!((max_eigenpair(&xm).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mub_predicate_examples() {
        let x = weyl_heisenberg(3, 1, 0).unwrap();
        let z = weyl_heisenberg(3, 0, 1).unwrap();
        let tol = TOLERANCES.mub;
        assert!(is_mub(&x, &z, tol).unwrap().unbiased);
        assert!(!is_mub(&x, &x, tol).unwrap().unbiased);
        assert!(!is_mub(&x, &mos(3, 0.0).unwrap(), tol).unwrap().unbiased);
    }

    #[test]
    fn mub_predicate_rotates_degenerate_eigenspaces() {
        // Rotation inside the degenerate block leaves the operator unchanged.
        let v = unitary_exp(&generalized_gell_mann(3), &[0.4, 0.9, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let block = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, ONE, -ONE]));
        let f = fourier(3, true);
        let p = SettingOperator::hermitian(
            crate::linalg::hermitian_part(&(&f * &v * &block * v.adjoint() * f.adjoint())),
            "P",
        )
        .unwrap();
        let x = weyl_heisenberg(3, 0, 1).unwrap();
        let check = is_mub(&p, &x, 1e-6).unwrap();
        assert!(check.defect < 1e-6, "{check:?}");
    }

    #[test]
    fn non_normal_operator_is_rejected() {
        let mut m = zero_matrix(3);
        m[(0, 1)] = ONE;
        let op = SettingOperator {
            matrix: m,
            flavor: Flavor::Unitary,
            label: "N".into(),
        };
        assert!(is_mub(&op, &weyl_heisenberg(3, 1, 0).unwrap(), 1e-8).is_err());
    }

    #[test]
    fn root_of_identity_parametrization() {
        let z = root_of_identity_unitary(3, &[0.0; 8], &[0, 1, 2]).unwrap();
        assert!(close(z.matrix(), weyl_heisenberg(3, 0, 1).unwrap().matrix(), 1e-15));
        let params = [0.3, -1.2, 0.5, 2.0, 0.1, -0.7, 0.9, 1.4];
        let u = root_of_identity_unitary(3, &params, &[2, 0, 1]).unwrap();
        assert!(unitarity_defect(u.matrix()) < 1e-12);
        assert!(SettingOperator::unitary_root(u.matrix().clone(), "u").is_ok());
        assert!(root_of_identity_unitary(3, &[0.0; 7], &[0, 1, 2]).is_err());
        assert!(root_of_identity_unitary(3, &[0.0; 8], &[0, 0, 2]).is_err());
    }

    #[test]
    fn nilpotency_examples() {
        let mut upper = zero_matrix(3);
        upper[(0, 1)] = ONE;
        upper[(1, 2)] = c(2.0, 0.0);
        upper[(0, 2)] = c(-1.0, 0.0);
        let (defect, k) = nilpotency_defect(&upper).unwrap();
        assert_eq!(defect, 0.0);
        assert!(k <= 3);
        let (di, ki) = nilpotency_defect(&identity(3)).unwrap();
        assert!((di - 1.0 / 3.0).abs() < 1e-15 && ki == 3);
        assert_eq!(nilpotency_defect(&zero_matrix(3)).unwrap(), (0.0, 1));
    }

    #[test]
    fn registry_parses_names() {
        assert_eq!(parse_setting("X", 3).unwrap().label(), "X");
        assert_eq!(parse_setting("XkZj:2,2", 3).unwrap().label(), "X2Z2");
        assert_eq!(parse_setting("X2Z2", 3).unwrap().matrix(), weyl_heisenberg(3, 2, 2).unwrap().matrix());
        assert_eq!(parse_setting("XZ2", 3).unwrap().matrix(), weyl_heisenberg(3, 1, 2).unwrap().matrix());
        assert_eq!(parse_setting("Z", 3).unwrap().matrix(), weyl_heisenberg(3, 0, 1).unwrap().matrix());
        assert!(parse_setting("ZX", 3).is_err());
        assert!(parse_setting("Xa", 3).is_err());
        assert_eq!(parse_setting("mos:0", 3).unwrap().flavor(), Flavor::UnitaryRoot);
        assert_eq!(parse_setting("gm:3", 3).unwrap().flavor(), Flavor::Hermitian);
        assert_eq!(parse_setting("fourier", 3).unwrap().flavor(), Flavor::Unitary);
        assert!(parse_setting("pauli:pi/4", 2).is_ok());
        assert!(matches!(parse_setting("Y", 3), Err(Error::Lookup { .. })));
        assert_eq!(parse_real("-3*pi/4"), Some(-0.75 * std::f64::consts::PI));
    }
}
