//! Bell polynomials: coefficient tensors over per-party setting choices,
//! builders, the state-to-polynomial mapping, symmetric extension and
//! operator assembly.

mod catalog;
mod json;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use catalog::{
    c22d, c22d_from_parts, catalog, catalog_entries, qutrit_family_counts, table_one,
    CatalogEntry,
};
pub use json::{PolynomialJson, TermJson};

use crate::error::{argument, contract, Error, Result};
use crate::linalg::{
    antihermitian_part, c, hermitian_part, hermiticity_defect, identity, mat_pow, max_abs, omega_pow,
    snap_cyclotomic, unitarity_defect, CMatrix, C64, ONE, ZERO,
};
use crate::numeric::{MAX_DIM, TOLERANCES};
use crate::operators::Flavor;
use crate::quantum::SettingsAssignment;
use crate::states::PureState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Hermitian,
    #[serde(rename = "antihermitian")]
    AntiHermitian,
    Full,
}

/// Values `v(m)` attached to outcome index `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Alphabet {
    /// `v(m) = w^m`, `w = e^{2πi/d}`; `{+1, −1}` for two outcomes.
    RootsOfUnity,
    /// `v(m) = first + m`.
    Integers { first: i64 },
}

impl Alphabet {
    pub fn value(&self, d: usize, m: usize) -> C64 {
        match *self {
            Alphabet::RootsOfUnity => omega_pow(d, m as i64),
            Alphabet::Integers { first } => c((first + m as i64) as f64, 0.0),
        }
    }
}

/// Extremum selector for classical bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Hmax,
    Hmin,
    Amax,
    Amin,
}

impl Objective {
    pub const ALL: [Objective; 4] = [Objective::Hmax, Objective::Hmin, Objective::Amax, Objective::Amin];

    pub fn maximizes(self) -> bool {
        matches!(self, Objective::Hmax | Objective::Amax)
    }

    /// Reads the imaginary part of the polynomial value.
    pub fn imaginary(self) -> bool {
        matches!(self, Objective::Amax | Objective::Amin)
    }

    /// Real score of a complex polynomial value.
    pub fn score(self, value: C64) -> f64 {
        if self.imaginary() {
            value.im
        } else {
            value.re
        }
    }
}

/// Operator power of one setting; power 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Factor {
    pub setting: usize,
    pub power: u32,
}

impl Factor {
    pub const IDENTITY: Factor = Factor { setting: 0, power: 0 };

    pub fn new(setting: usize, power: u32) -> Self {
        if power == 0 {
            Self::IDENTITY
        } else {
            Self { setting, power }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: C64,
    /// One factor per party.
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellPolynomial {
    pub id: String,
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub part: Part,
    pub alphabet: Alphabet,
    pub terms: Vec<Term>,
    /// Multiplies the selected part; records the factor to the displayed normalization.
    pub scale: f64,
    /// Added after scaling, as a multiple of the identity.
    pub offset: f64,
    /// Classical extremum used as the denominator of the violation ratio.
    pub objective: Objective,
    /// Coefficients `g_k` of a grouped prime-count form, when the polynomial was written as one.
    pub prime_groups: Option<Vec<C64>>,
}

fn index_digits(mut index: usize, n: usize, s: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = index % s;
        index /= s;
    }
    out
}

fn tensor_len(n: usize, s: usize) -> Result<usize> {
    s.checked_pow(n as u32)
        .filter(|&l| l <= 1 << 24)
        .ok_or(Error::Capacity {
            what: "coefficient tensor",
            requested: (s as u128).saturating_pow(n as u32),
            limit: 1 << 24,
        })
}

impl BellPolynomial {
    /// General constructor from a term list.
    pub fn from_terms(
        n: usize,
        s: usize,
        d: usize,
        terms: Vec<Term>,
        part: Part,
        alphabet: Alphabet,
    ) -> Result<Self> {
        let objective = default_objective(part);
        let p = Self {
            id: "custom".into(),
            n,
            s,
            d,
            part,
            alphabet,
            terms,
            scale: 1.0,
            offset: 0.0,
            objective,
            prime_groups: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Dense tensor in row-major order, party 0 slowest; no normalization applied.
    pub fn from_coefficients(n: usize, s: usize, d: usize, coeffs: &[C64], part: Part) -> Result<Self> {
        let len = tensor_len(n, s)?;
        if coeffs.len() != len {
            return Err(argument(format!(
                "{} coefficients for a tensor of {s}^{n} = {len} entries",
                coeffs.len()
            )));
        }
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, &z)| z != ZERO)
            .map(|(i, &coeff)| Term {
                coeff,
                factors: index_digits(i, n, s)
                    .into_iter()
                    .map(|j| Factor { setting: j, power: 1 })
                    .collect(),
            })
            .collect();
        Self::from_terms(n, s, d, terms, part, Alphabet::RootsOfUnity)
    }

    /// Two-setting symmetric polynomial from the coefficient of each prime count `0..=n`.
    pub fn from_prime_counts(n: usize, d: usize, counts: &[C64], part: Part) -> Result<Self> {
        if counts.len() != n + 1 {
            return Err(argument(format!(
                "{} prime-count coefficients for {n} parties",
                counts.len()
            )));
        }
        let len = tensor_len(n, 2)?;
        let coeffs: Vec<C64> = (0..len).map(|i| counts[i.count_ones() as usize]).collect();
        Self::from_coefficients(n, 2, d, &coeffs, part)
    }

    /// Two-setting polynomial `Σ_k g_k G_k`, where `G_k` collects every term
    /// left by the `k`-primed terms of an `(n+1)`-party polynomial once the
    /// last party is dropped: the `k`-primed and the `(k−1)`-primed terms.
    pub fn from_prime_groups(n: usize, d: usize, groups: &[C64], part: Part) -> Result<Self> {
        if groups.len() != n + 2 {
            return Err(argument(format!(
                "{} prime groups for {n} parties, expected {}",
                groups.len(),
                n + 2
            )));
        }
        let counts: Vec<C64> = (0..=n).map(|k| groups[k] + groups[k + 1]).collect();
        let mut p = Self::from_prime_counts(n, d, &counts, part)?;
        p.prime_groups = Some(groups.to_vec());
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.s == 0 || self.d < 2 {
            return Err(argument(format!(
                "polynomial needs n ≥ 1, s ≥ 1, d ≥ 2 (got n={}, s={}, d={})",
                self.n, self.s, self.d
            )));
        }
        if self.scale == 0.0 || !self.scale.is_finite() || !self.offset.is_finite() {
            return Err(argument("scale must be finite and non-zero, offset finite"));
        }
        for t in &self.terms {
            if t.factors.len() != self.n {
                return Err(argument("term with a factor count different from n"));
            }
            if t.factors.iter().any(|f| f.power > 0 && f.setting >= self.s) {
                return Err(argument("term references a setting index ≥ s"));
            }
            if !t.coeff.re.is_finite() || !t.coeff.im.is_finite() {
                return Err(argument("non-finite coefficient"));
            }
        }
        if self.part == Part::Full {
            let real = self.terms.iter().all(|t| t.coeff.im == 0.0);
            let real_outcomes = self.d == 2 || matches!(self.alphabet, Alphabet::Integers { .. });
            if !real || !real_outcomes {
                return Err(contract(
                    "part `full` needs real coefficients and real outcome values",
                ));
            }
        }
        Ok(())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_alphabet(mut self, alphabet: Alphabet) -> Self {
        self.alphabet = alphabet;
        self
    }

    /// Every coefficient multiplied by `factor`.
    pub fn scaled_coefficients(mut self, factor: C64) -> Self {
        for t in &mut self.terms {
            t.coeff *= factor;
        }
        if let Some(g) = &mut self.prime_groups {
            g.iter_mut().for_each(|z| *z *= factor);
        }
        self
    }

    /// Substitutes `phase·O` for setting `setting` of `party`.
    pub fn rephase_setting(mut self, party: usize, setting: usize, phase: C64) -> Self {
        for t in &mut self.terms {
            let f = t.factors[party];
            if f.power > 0 && f.setting == setting {
                t.coeff *= phase.powu(f.power);
            }
        }
        self.prime_groups = None;
        self
    }

    /// Exchanges settings `a` and `b` of `party`.
    pub fn swap_settings(mut self, party: usize, a: usize, b: usize) -> Self {
        for t in &mut self.terms {
            let f = &mut t.factors[party];
            if f.power > 0 {
                if f.setting == a {
                    f.setting = b;
                } else if f.setting == b {
                    f.setting = a;
                }
            }
        }
        self.prime_groups = None;
        self
    }

    /// Every term has power 1 on every party.
    pub fn is_dense(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.factors.iter().all(|f| f.power == 1))
    }

    /// Sum of coefficients of power-1 terms with the given setting choices.
    pub fn coefficient(&self, settings: &[usize]) -> C64 {
        self.terms
            .iter()
            .filter(|t| {
                t.factors
                    .iter()
                    .zip(settings)
                    .all(|(f, &j)| f.power == 1 && f.setting == j)
            })
            .map(|t| t.coeff)
            .sum()
    }

    /// Full tensor of `sⁿ` entries, when every term has power 1.
    pub fn dense_coefficients(&self) -> Option<Vec<C64>> {
        if !self.is_dense() {
            return None;
        }
        let len = tensor_len(self.n, self.s).ok()?;
        let mut out = vec![ZERO; len];
        for t in &self.terms {
            let idx = t.factors.iter().fold(0, |acc, f| acc * self.s + f.setting);
            out[idx] += t.coeff;
        }
        Some(out)
    }

    /// Coefficient of each prime count, when the tensor is constant on prime-count classes.
    pub fn prime_count_coefficients(&self) -> Option<Vec<C64>> {
        if self.s != 2 {
            return None;
        }
        let dense = self.dense_coefficients()?;
        let mut counts: Vec<Option<C64>> = vec![None; self.n + 1];
        for (i, &z) in dense.iter().enumerate() {
            let k = i.count_ones() as usize;
            match counts[k] {
                None => counts[k] = Some(z),
                Some(prev) if prev == z => {}
                Some(_) => return None,
            }
        }
        counts.into_iter().collect()
    }

    /// Per party, the distinct factors used by any term, in sorted order.
    pub fn party_factors(&self) -> Vec<Vec<Factor>> {
        (0..self.n)
            .map(|k| {
                let mut fs: Vec<Factor> = self.terms.iter().map(|t| t.factors[k]).collect();
                fs.sort_unstable();
                fs.dedup();
                fs
            })
            .collect()
    }

    /// Builds the Bell operator: `scale·part(Σ c·O₁^{p₁}⊗…⊗Oₙ^{pₙ}) + offset·I`.
    pub fn assemble(&self, settings: &SettingsAssignment) -> Result<CMatrix> {
        self.check_settings(settings)?;
        let dim = settings.dim();
        let total = dim.pow(self.n as u32);
        let factors = self.party_factors();
        let mats: Vec<BTreeMap<Factor, CMatrix>> = factors
            .iter()
            .enumerate()
            .map(|(k, fs)| {
                fs.iter()
                    .map(|&f| {
                        let m = if f.power == 0 {
                            identity(dim)
                        } else {
                            mat_pow(settings.parties()[k][f.setting].matrix(), f.power)
                        };
                        (f, m)
                    })
                    .collect()
            })
            .collect();
        let refs: Vec<(C64, &[Factor])> = self
            .terms
            .iter()
            .map(|t| (t.coeff, t.factors.as_slice()))
            .collect();
        let raw = if refs.is_empty() {
            CMatrix::zeros(total, total)
        } else {
            assemble_level(&refs, 0, &mats, dim)
        };
        let mut out = match self.part {
            Part::Hermitian => hermitian_part(&raw),
            Part::AntiHermitian => antihermitian_part(&raw),
            Part::Full => raw,
        };
        if self.scale != 1.0 {
            out *= c(self.scale, 0.0);
        }
        if self.offset != 0.0 {
            for i in 0..total {
                out[(i, i)] += c(self.offset, 0.0);
            }
        }
        Ok(out)
    }

    /// Flavor and dimension compatibility of a settings assignment.
    pub fn check_settings(&self, settings: &SettingsAssignment) -> Result<()> {
        if settings.n() != self.n {
            return Err(Error::Dimension(format!(
                "{} parties of settings for a {}-party polynomial",
                settings.n(),
                self.n
            )));
        }
        for (k, ops) in settings.parties().iter().enumerate() {
            if ops.len() < self.s {
                return Err(Error::Dimension(format!(
                    "party {k} has {} settings, polynomial needs {}",
                    ops.len(),
                    self.s
                )));
            }
        }
        let dim = settings.dim();
        let total = (dim as u128).pow(self.n as u32);
        if total > MAX_DIM as u128 {
            return Err(Error::Capacity {
                what: "Bell operator dimension",
                requested: total,
                limit: MAX_DIM as u128,
            });
        }
        for ops in settings.parties() {
            for op in &ops[..self.s] {
                let ok = match self.alphabet {
                    Alphabet::RootsOfUnity => {
                        let m = op.matrix();
                        unitarity_defect(m) <= TOLERANCES.unitarity
                            && max_abs(&(mat_pow(m, self.d as u32) - identity(dim)))
                                <= TOLERANCES.root_of_identity
                    }
                    Alphabet::Integers { .. } => {
                        op.flavor() == Flavor::Hermitian
                            || hermiticity_defect(op.matrix()) <= TOLERANCES.hermitian_setting
                    }
                };
                if !ok {
                    return Err(Error::Flavor(format!(
                        "setting `{}` ({:?}) does not match the {:?} outcome alphabet with d={}",
                        op.label(),
                        op.flavor(),
                        self.alphabet,
                        self.d
                    )));
                }
            }
        }
        Ok(())
    }
}

fn default_objective(part: Part) -> Objective {
    match part {
        Part::AntiHermitian => Objective::Amax,
        _ => Objective::Hmax,
    }
}

/// Groups terms by their factor on `level` and recurses: `Σ_f M_f ⊗ (rest)`.
fn assemble_level(
    terms: &[(C64, &[Factor])],
    level: usize,
    mats: &[BTreeMap<Factor, CMatrix>],
    dim: usize,
) -> CMatrix {
    let n = mats.len();
    let mut groups: BTreeMap<Factor, Vec<(C64, &[Factor])>> = BTreeMap::new();
    for &(coeff, fs) in terms {
        groups.entry(fs[level]).or_default().push((coeff, fs));
    }
    if level + 1 == n {
        let mut out = CMatrix::zeros(dim, dim);
        for (f, group) in groups {
            let total: C64 = group.iter().map(|(z, _)| *z).sum();
            out += &mats[level][&f] * total;
        }
        return out;
    }
    let rest_dim = dim.pow((n - level - 1) as u32);
    let mut out = CMatrix::zeros(dim * rest_dim, dim * rest_dim);
    for (f, group) in groups {
        let inner = assemble_level(&group, level + 1, mats, dim);
        let m = &mats[level][&f];
        for i in 0..dim {
            for j in 0..dim {
                let z = m[(i, j)];
                if z != ZERO {
                    let mut block = out.view_mut((i * rest_dim, j * rest_dim), (rest_dim, rest_dim));
                    block.zip_apply(&inner, |o, v| *o += z * v);
                }
            }
        }
    }
    out
}

/// Symmetric two-setting Mermin polynomial, `M₁ = a` and
/// `Mₙ = ½Mₙ₋₁(aₙ + a′ₙ) + ½M′ₙ₋₁(aₙ − a′ₙ)`, with `M′` the primed-swap dual.
pub fn mermin(n: usize) -> Result<BellPolynomial> {
    if n == 0 {
        return Err(argument("Mermin polynomials need n ≥ 1"));
    }
    tensor_len(n, 2)?;
    let mut m = vec![ONE, ZERO];
    let mut mp = vec![ZERO, ONE];
    for _ in 1..n {
        let len = m.len();
        let mut next = vec![ZERO; 2 * len];
        let mut next_p = vec![ZERO; 2 * len];
        for i in 0..len {
            next[2 * i] = (m[i] + mp[i]) * 0.5;
            next[2 * i + 1] = (m[i] - mp[i]) * 0.5;
            next_p[2 * i] = (mp[i] - m[i]) * 0.5;
            next_p[2 * i + 1] = (mp[i] + m[i]) * 0.5;
        }
        m = next;
        mp = next_p;
    }
    Ok(BellPolynomial::from_coefficients(n, 2, 2, &m, Part::Full)?.with_id(format!("mermin({n})")))
}

/// Polynomial whose coefficient tensor is the state's amplitude tensor with
/// the normalization removed; party `k`'s basis label `i` becomes setting `i`.
pub fn map_state_to_polynomial(psi: &PureState, d: usize, part: Part) -> Result<BellPolynomial> {
    let amps = psi.amplitudes();
    let unit = amps
        .iter()
        .map(|z| z.norm())
        .filter(|&r| r > TOLERANCES.snap)
        .fold(f64::INFINITY, f64::min);
    if !unit.is_finite() {
        return Err(argument("cannot map a zero state"));
    }
    let coeffs: Vec<C64> = amps
        .iter()
        .map(|&z| snap_cyclotomic(z / unit, d, TOLERANCES.snap * 10.0))
        .collect();
    Ok(BellPolynomial::from_coefficients(psi.n(), psi.d(), d, &coeffs, part)?
        .with_id(format!("mapped({})", psi.label())))
}

/// Least-norm grouping `g` with `g_k + g_{k+1} = counts_k`.
fn least_norm_groups(counts: &[C64]) -> Vec<C64> {
    let m = counts.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(m, m + 1);
    for k in 0..m {
        a[(k, k)] = 1.0;
        a[(k, k + 1)] = 1.0;
    }
    let gram = &a * a.transpose();
    let inv = gram.try_inverse().expect("tridiagonal Gram matrix is invertible");
    let solve = |v: nalgebra::DVector<f64>| a.transpose() * (&inv * v);
    let re = solve(nalgebra::DVector::from_iterator(m, counts.iter().map(|z| z.re)));
    let im = solve(nalgebra::DVector::from_iterator(m, counts.iter().map(|z| z.im)));
    (0..=m).map(|k| c(re[k], im[k])).collect()
}

/// Adds one party to a two-setting symmetric polynomial so that every term
/// with the same number of primes carries the same coefficient.
///
/// The grouped prime-count form of the input fixes the result; without it the
/// least-norm grouping consistent with the tensor is used.
pub fn symmetric_extension(p: &BellPolynomial) -> Result<BellPolynomial> {
    if p.s != 2 {
        return Err(contract("symmetric extension needs two settings per party"));
    }
    let counts = p.prime_count_coefficients().ok_or_else(|| {
        contract("coefficients are not constant on prime-count classes")
    })?;
    let groups = match &p.prime_groups {
        Some(g) => {
            let consistent = g.len() == p.n + 2
                && (0..=p.n).all(|k| (g[k] + g[k + 1] - counts[k]).norm() <= 1e-12);
            if !consistent {
                return Err(contract("prime grouping does not reproduce the coefficient tensor"));
            }
            g.clone()
        }
        None => least_norm_groups(&counts),
    };
    let mut out = BellPolynomial::from_prime_counts(p.n + 1, p.d, &groups, p.part)?
        .with_id(format!("ext({})", p.id));
    out.objective = p.objective;
    Ok(out)
}
