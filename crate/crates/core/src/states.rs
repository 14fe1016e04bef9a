//! Pure states: GHZ, the quasi-GHZ γ-family, AME(4,3), local unitaries and
//! reduction purities.
//!
//! Basis index of `|i₁…iₙ⟩` is `Σ iₖ d^(n−k)`, party 0 most significant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{argument, contract, Error, Result};
use crate::linalg::{c, omega_pow, purity, reduce_pure, unitarity_defect, CMatrix, CVector, VectorJson, ZERO};
use crate::numeric::{MAX_DIM, TOLERANCES};
use crate::operators::parse_real;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n: usize,
    d: usize,
    amplitudes: CVector,
    label: String,
}

fn hilbert_dim(n: usize, d: usize) -> Result<usize> {
    if n == 0 || d < 2 {
        return Err(argument(format!("states need n ≥ 1 and d ≥ 2, got n={n}, d={d}")));
    }
    d.checked_pow(n as u32)
        .filter(|&dim| dim <= MAX_DIM)
        .ok_or(Error::Capacity {
            what: "Hilbert-space dimension",
            requested: (d as u128).saturating_pow(n as u32),
            limit: MAX_DIM as u128,
        })
}

impl PureState {
    /// Validates `dim = d^n` and unit norm.
    pub fn new(n: usize, d: usize, amplitudes: CVector, label: impl Into<String>) -> Result<Self> {
        let dim = hilbert_dim(n, d)?;
        if amplitudes.len() != dim {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {n} parties of dimension {d}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > TOLERANCES.state_norm {
            return Err(contract(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            n,
            d,
            amplitudes,
            label: label.into(),
        })
    }

    /// Rescales to unit norm before validating.
    pub fn normalized(n: usize, d: usize, amplitudes: CVector, label: impl Into<String>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(argument("cannot normalize a zero vector"));
        }
        Self::new(n, d, amplitudes / c(norm, 0.0), label)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &k| acc * self.d + k)
    }

    pub fn digits_of(&self, index: usize) -> Vec<usize> {
        digits(index, self.n, self.d)
    }
}

pub(crate) fn digits(index: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut rest = index;
    for k in (0..n).rev() {
        out[k] = rest % d;
        rest /= d;
    }
    out
}

/// Weighted GHZ-type vector `Σ_k weights[k] |k…k⟩`, normalized.
fn branches(n: usize, d: usize, weights: &[f64], label: String) -> Result<PureState> {
    let dim = hilbert_dim(n, d)?;
    let mut amps = CVector::from_element(dim, ZERO);
    let step: usize = (0..n).map(|k| d.pow(k as u32)).sum();
    for (k, &w) in weights.iter().enumerate() {
        amps[k * step] = c(w, 0.0);
    }
    PureState::normalized(n, d, amps, label)
}

/// `(Σ_{k<d} |k⟩^⊗n)/√d`.
pub fn ghz(n: usize, d: usize) -> Result<PureState> {
    branches(n, d, &vec![1.0; d], format!("ghz:{n},{d}"))
}

/// `(|0…0⟩ + γ|1…1⟩ + |2…2⟩)/√(2+γ²)` on qutrits.
pub fn quasi_ghz(n: usize, gamma: f64) -> Result<PureState> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(argument(format!("quasi-GHZ weight must be positive, got {gamma}")));
    }
    branches(n, 3, &[1.0, gamma, 1.0], format!("quasi:{n},{gamma}"))
}

/// `(1/9) Σ w^{j(i−k)+l(i+k)} |ijkl⟩`.
pub fn ame43() -> PureState {
    let amps = CVector::from_fn(81, |idx, _| {
        let [i, j, k, l] = [idx / 27, (idx / 9) % 3, (idx / 3) % 3, idx % 3].map(|v| v as i64);
        omega_pow(3, j * (i - k) + l * (i + k)) / 9.0
    });
    PureState {
        n: 4,
        d: 3,
        amplitudes: amps,
        label: "ame43".into(),
    }
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn bell_plus() -> PureState {
    ghz(2, 2).expect("valid dimensions").with_label("bell+")
}

pub fn product_state(d: usize, digits: &[usize]) -> Result<PureState> {
    let n = digits.len();
    let dim = hilbert_dim(n, d)?;
    if digits.iter().any(|&k| k >= d) {
        return Err(argument(format!("basis digits {digits:?} out of range for d={d}")));
    }
    let mut amps = CVector::from_element(dim, ZERO);
    amps[digits.iter().fold(0, |acc, &k| acc * d + k)] = c(1.0, 0.0);
    PureState::new(n, d, amps, format!("product:{digits:?}"))
}

/// `(O₁ ⊗ … ⊗ Oₙ)|ψ⟩` without forming the Kronecker product.
pub(crate) fn apply_factors(ops: &[&CMatrix], amps: &CVector, n: usize, d: usize) -> CVector {
    let mut cur = amps.clone();
    for (party, op) in ops.iter().enumerate() {
        let stride = d.pow((n - 1 - party) as u32);
        let mut next = CVector::from_element(cur.len(), ZERO);
        for idx in 0..cur.len() {
            let digit = (idx / stride) % d;
            let base = idx - digit * stride;
            let mut acc = ZERO;
            for j in 0..d {
                acc += op[(digit, j)] * cur[base + j * stride];
            }
            next[idx] = acc;
        }
        cur = next;
    }
    cur
}

/// Applies one local unitary per party.
pub fn apply_local(unitaries: &[CMatrix], psi: &PureState) -> Result<PureState> {
    if unitaries.len() != psi.n {
        return Err(argument(format!(
            "{} local factors for {} parties",
            unitaries.len(),
            psi.n
        )));
    }
    for (k, u) in unitaries.iter().enumerate() {
        if u.nrows() != psi.d || u.ncols() != psi.d {
            return Err(Error::Dimension(format!("factor {k} is not {0}x{0}", psi.d)));
        }
        let defect = unitarity_defect(u);
        if defect > TOLERANCES.unitarity {
            return Err(contract(format!("factor {k} is not unitary (defect {defect:e})")));
        }
    }
    let refs: Vec<&CMatrix> = unitaries.iter().collect();
    let amps = apply_factors(&refs, &psi.amplitudes, psi.n, psi.d);
    let norm = amps.norm();
    Ok(PureState {
        n: psi.n,
        d: psi.d,
        amplitudes: amps / c(norm, 0.0),
        label: format!("local({})", psi.label),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPurity {
    pub subset: Vec<usize>,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub n: usize,
    pub d: usize,
    /// Purities keyed by subset size `1..=⌊n/2⌋`, subsets in lexicographic order.
    pub by_size: BTreeMap<usize, Vec<SubsetPurity>>,
    /// `[min, max]` per subset size.
    pub summary: BTreeMap<usize, [f64; 2]>,
}

impl PurityReport {
    pub fn purities(&self, size: usize) -> Vec<f64> {
        self.by_size
            .get(&size)
            .map(|v| v.iter().map(|s| s.purity).collect())
            .unwrap_or_default()
    }

    pub fn min(&self, size: usize) -> Option<f64> {
        self.summary.get(&size).map(|r| r[0])
    }

    pub fn max(&self, size: usize) -> Option<f64> {
        self.summary.get(&size).map(|r| r[1])
    }
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Purity of every reduction to at most `⌊n/2⌋` parties.
pub fn reduction_purities(psi: &PureState) -> PurityReport {
    let mut by_size = BTreeMap::new();
    let mut summary = BTreeMap::new();
    for size in 1..=psi.n / 2 {
        let list: Vec<SubsetPurity> = combinations(psi.n, size)
            .into_iter()
            .map(|subset| {
                let rho = reduce_pure(&psi.amplitudes, &subset, psi.n, psi.d)
                    .expect("subset within range");
                SubsetPurity {
                    purity: purity(&rho),
                    subset,
                }
            })
            .collect();
        let lo = list.iter().map(|s| s.purity).fold(f64::INFINITY, f64::min);
        let hi = list.iter().map(|s| s.purity).fold(f64::NEG_INFINITY, f64::max);
        summary.insert(size, [lo, hi]);
        by_size.insert(size, list);
    }
    PurityReport {
        n: psi.n,
        d: psi.d,
        by_size,
        summary,
    }
}

/// One-party purities in party order.
pub fn single_party_purities(psi: &PureState) -> Vec<f64> {
    (0..psi.n)
        .map(|k| purity(&reduce_pure(&psi.amplitudes, &[k], psi.n, psi.d).expect("party in range")))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateJson {
    pub n: usize,
    pub d: usize,
    pub amplitudes: VectorJson,
    #[serde(default)]
    pub label: Option<String>,
}

impl From<&PureState> for StateJson {
    fn from(s: &PureState) -> Self {
        StateJson {
            n: s.n,
            d: s.d,
            amplitudes: VectorJson::from(&s.amplitudes),
            label: Some(s.label.clone()),
        }
    }
}

impl TryFrom<&StateJson> for PureState {
    type Error = Error;

    fn try_from(js: &StateJson) -> Result<Self> {
        PureState::normalized(
            js.n,
            js.d,
            CVector::from(&js.amplitudes),
            js.label.clone().unwrap_or_else(|| "json".into()),
        )
    }
}

/// Named states: `ghz:n,d`, `quasi:n,gamma`, `ame43`, `bell+`.
pub fn parse_state(name: &str) -> Result<PureState> {
    let lookup = || Error::Lookup {
        kind: "state",
        name: name.to_string(),
    };
    let (head, args) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let nums = |a: &str| -> Result<Vec<f64>> {
        a.split(',')
            .map(|p| parse_real(p).ok_or_else(|| argument(format!("cannot parse `{p}` in `{name}`"))))
            .collect()
    };
    match (head, args) {
        ("ame43", None) => Ok(ame43()),
        ("bell+", None) => Ok(bell_plus()),
        ("ghz", Some(a)) => match nums(a)?.as_slice() {
            [n, d] => ghz(*n as usize, *d as usize),
            _ => Err(argument("`ghz:n,d` expects two arguments")),
        },
        ("quasi", Some(a)) => match nums(a)?.as_slice() {
            [n, g] => quasi_ghz(*n as usize, *g),
            _ => Err(argument("`quasi:n,gamma` expects two arguments")),
        },
        _ => Err(lookup()),
    }
}
