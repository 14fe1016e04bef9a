//! Probability-language inequalities evaluated from states and measurement bases.

use serde::{Deserialize, Serialize};

use crate::error::{argument, contract, Error, Result};
use crate::linalg::{c, unitarity_defect, CMatrix, CVector};
use crate::numeric::TOLERANCES;
use crate::operators::{eigenbasis, Flavor};
use crate::quantum::SettingsAssignment;
use crate::states::{apply_factors, digits, PureState};

/// Outcome `m` of a unitary setting corresponds to eigenvalue `w^m` (forward) or `w^{−m}` (conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    Forward,
    Conjugate,
}

/// Per party and setting, a unitary whose column `m` is the outcome-`m` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBases {
    d: usize,
    parties: Vec<Vec<CMatrix>>,
}

impl MeasurementBases {
    pub fn new(parties: Vec<Vec<CMatrix>>) -> Result<Self> {
        let d = parties
            .first()
            .and_then(|p| p.first())
            .map(CMatrix::nrows)
            .ok_or_else(|| argument("measurement bases need at least one party and setting"))?;
        for (k, p) in parties.iter().enumerate() {
            if p.is_empty() {
                return Err(argument(format!("party {k} has no bases")));
            }
            for (j, u) in p.iter().enumerate() {
                if u.nrows() != d || u.ncols() != d {
                    return Err(Error::Dimension(format!("basis {j} of party {k} is not {d}×{d}")));
                }
                let defect = unitarity_defect(u);
                if defect > TOLERANCES.unitarity {
                    return Err(contract(format!(
                        "basis {j} of party {k} is not orthonormal (defect {defect:e})"
                    )));
                }
            }
        }
        Ok(Self { d, parties })
    }

    /// Eigenbases of the settings: unitary settings by eigenvalue phase, hermitian ones by ascending eigenvalue.
    pub fn from_settings(settings: &SettingsAssignment, labeling: Labeling) -> Result<Self> {
        let d = settings.dim();
        let parties = settings
            .parties()
            .iter()
            .map(|ops| {
                ops.iter()
                    .map(|op| {
                        let eb = eigenbasis(op.matrix())?;
                        let mut cols = vec![None; d];
                        for i in 0..d {
                            let m = match op.flavor() {
                                Flavor::Hermitian => {
                                    let rank = (0..d)
                                        .filter(|&j| {
                                            eb.values[j].re < eb.values[i].re
                                                || (eb.values[j].re == eb.values[i].re && j < i)
                                        })
                                        .count();
                                    rank
                                }
                                _ => {
                                    let turns = eb.values[i].arg() * d as f64 / std::f64::consts::TAU;
                                    let m = turns.round() as i64;
                                    if (turns - m as f64).abs() > 1e-6 {
                                        return Err(contract(format!(
                                            "setting `{}` has an eigenvalue off the d-th roots of unity",
                                            op.label()
                                        )));
                                    }
                                    let m = match labeling {
                                        Labeling::Forward => m,
                                        Labeling::Conjugate => -m,
                                    };
                                    m.rem_euclid(d as i64) as usize
                                }
                            };
                            if cols[m].is_some() {
                                return Err(contract(format!(
                                    "setting `{}` repeats outcome {m}; it is not a {d}-outcome measurement",
                                    op.label()
                                )));
                            }
                            cols[m] = Some(eb.vectors.column(i).into_owned());
                        }
                        let cols: Vec<CVector> = cols.into_iter().map(|c| c.expect("all outcomes set")).collect();
                        Ok(CMatrix::from_columns(&cols))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parties)
    }

    /// Bases seen from local frames: `B → F† B`.
    pub fn in_frame(&self, frames: &[CMatrix]) -> Result<Self> {
        if frames.len() != self.parties.len() {
            return Err(argument("one frame per party"));
        }
        Self::new(
            self.parties
                .iter()
                .zip(frames)
                .map(|(bs, f)| bs.iter().map(|b| f.adjoint() * b).collect())
                .collect(),
        )
    }

    /// Fourier-type bases with column `k` equal to `d^{-1/2} Σⱼ e^{2πi j(σk + φ)/d}|j⟩`.
    pub fn phased_fourier(d: usize, sign: i32, phases: &[f64]) -> Vec<CMatrix> {
        let norm = 1.0 / (d as f64).sqrt();
        phases
            .iter()
            .map(|&phi| {
                CMatrix::from_fn(d, d, |j, k| {
                    let t = std::f64::consts::TAU * j as f64 * (sign as f64 * k as f64 + phi) / d as f64;
                    c(t.cos() * norm, t.sin() * norm)
                })
            })
            .collect()
    }

    /// Two-party CGLMP bases: phases `0, ½` for Alice and `¼, −¼` with reversed outcomes for Bob.
    pub fn cglmp(d: usize) -> Result<Self> {
        Self::new(vec![
            Self::phased_fourier(d, 1, &[0.0, 0.5]),
            Self::phased_fourier(d, -1, &[0.25, -0.25]),
        ])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn basis(&self, party: usize, setting: usize) -> Option<&CMatrix> {
        self.parties.get(party).and_then(|p| p.get(setting))
    }
}

/// Joint outcome distribution for one choice of settings, indexed like the state.
pub fn distribution(psi: &PureState, bases: &MeasurementBases, choices: &[usize]) -> Result<Vec<f64>> {
    if psi.n() != bases.n() || psi.d() != bases.d || choices.len() != psi.n() {
        return Err(Error::Dimension(format!(
            "state ({} parties, d={}), bases ({} parties, d={}), {} choices",
            psi.n(),
            psi.d(),
            bases.n(),
            bases.d,
            choices.len()
        )));
    }
    let adj: Vec<CMatrix> = choices
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            bases
                .basis(k, j)
                .map(CMatrix::adjoint)
                .ok_or_else(|| argument(format!("party {k} has no setting {j}")))
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&CMatrix> = adj.iter().collect();
    let amps = apply_factors(&refs, psi.amplitudes(), psi.n(), psi.d());
    Ok(amps.iter().map(|z| z.norm_sqr()).collect())
}

/// Born-rule probability of one outcome tuple.
pub fn joint_probability(
    psi: &PureState,
    bases: &MeasurementBases,
    choices: &[usize],
    outcomes: &[usize],
) -> Result<f64> {
    if outcomes.len() != psi.n() || outcomes.iter().any(|&o| o >= psi.d()) {
        return Err(argument("outcome tuple does not match the state"));
    }
    let dist = distribution(psi, bases, choices)?;
    Ok(dist[outcomes.iter().fold(0, |acc, &o| acc * psi.d() + o)])
}

/// `weight · p(Σₖ signₖ·outcomeₖ ≡ residue mod d)` at the given setting choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTerm {
    pub weight: f64,
    pub choices: Vec<usize>,
    pub signs: Vec<i64>,
    pub residue: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityExpression {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub terms: Vec<ProbabilityTerm>,
    /// Classical bound.
    pub bound: f64,
}

impl ProbabilityExpression {
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.terms.iter().enumerate() {
            if !t.weight.is_finite() {
                return Err(argument(format!("term {i} has a non-finite weight")));
            }
            if t.choices.len() != self.n || t.signs.len() != self.n {
                return Err(argument(format!("term {i} does not cover {} parties", self.n)));
            }
        }
        Ok(())
    }
}

/// `Σ weight · p(condition)` with each condition summed over satisfying outcome tuples.
pub fn evaluate_expression(expr: &ProbabilityExpression, psi: &PureState, bases: &MeasurementBases) -> Result<f64> {
    expr.validate()?;
    if psi.d() != expr.d || psi.n() != expr.n {
        return Err(Error::Dimension("expression and state disagree on n or d".into()));
    }
    let mut cache: std::collections::HashMap<Vec<usize>, Vec<f64>> = std::collections::HashMap::new();
    let mut total = 0.0;
    for t in &expr.terms {
        if !cache.contains_key(&t.choices) {
            let dist = distribution(psi, bases, &t.choices)?;
            cache.insert(t.choices.clone(), dist);
        }
        let dist = &cache[&t.choices];
        let p: f64 = dist
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let o = digits(*idx, expr.n, expr.d);
                let s: i64 = o.iter().zip(&t.signs).map(|(&o, &s)| o as i64 * s).sum();
                (s - t.residue).rem_euclid(expr.d as i64) == 0
            })
            .map(|(_, &p)| p)
            .sum();
        total += t.weight * p;
    }
    Ok(total)
}

fn pair_term(weight: f64, x: usize, y: usize, residue: i64) -> ProbabilityTerm {
    ProbabilityTerm {
        weight,
        choices: vec![x, y],
        signs: vec![1, -1],
        residue,
    }
}

/// d-outcome CGLMP: for `k < ⌊d/2⌋` with weight `1 − 2k/(d−1)`,
/// `p(a=b+k) + p(b=a′+k+1) + p(a′=b′+k) + p(b′=a+k)`
/// `− p(a=b−k−1) − p(b=a′−k) − p(a′=b′−k−1) − p(b′=a−k−1)`.
pub fn cglmp(d: usize) -> Result<ProbabilityExpression> {
    if d < 3 {
        return Err(argument("cglmp:d needs d ≥ 3"));
    }
    let mut terms = Vec::new();
    for k in 0..(d / 2) as i64 {
        let w = 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
        terms.push(pair_term(w, 0, 0, k));
        terms.push(pair_term(w, 1, 0, -(k + 1)));
        terms.push(pair_term(w, 1, 1, k));
        terms.push(pair_term(w, 0, 1, -k));
        terms.push(pair_term(-w, 0, 0, -(k + 1)));
        terms.push(pair_term(-w, 1, 0, k));
        terms.push(pair_term(-w, 1, 1, -(k + 1)));
        terms.push(pair_term(-w, 0, 1, k + 1));
    }
    Ok(ProbabilityExpression {
        name: format!("cglmp:{d}"),
        n: 2,
        d,
        terms,
        bound: 2.0,
    })
}

fn triple(weight: f64, choices: [usize; 3], residue: i64) -> ProbabilityTerm {
    ProbabilityTerm {
        weight,
        choices: choices.to_vec(),
        signs: vec![1, 1, 1],
        residue,
    }
}

/// Three-qutrit inequality with weight `w` on `p(a′+b′+c′=0)`.
fn acin(name: &str, primed_weight: f64) -> ProbabilityExpression {
    ProbabilityExpression {
        name: name.into(),
        n: 3,
        d: 3,
        terms: vec![
            triple(1.0, [0, 0, 0], 0),
            triple(1.0, [0, 1, 1], 1),
            triple(1.0, [1, 0, 1], 1),
            triple(1.0, [1, 1, 0], 1),
            triple(primed_weight, [1, 1, 1], 0),
            triple(-1.0, [1, 0, 0], 2),
            triple(-1.0, [0, 1, 0], 2),
            triple(-1.0, [0, 0, 1], 2),
        ],
        bound: 3.0,
    }
}

/// `cglmp:d`, `acin333` (weight +2 on `p(a′+b′+c′=0)`) and `acin333_printed` (weight −2).
pub fn probability_catalog(name: &str) -> Result<ProbabilityExpression> {
    if let Some(d) = name.strip_prefix("cglmp:") {
        let d = d
            .trim()
            .parse()
            .map_err(|_| argument(format!("`{name}`: expected an integer d")))?;
        return cglmp(d);
    }
    match name {
        "acin333" => Ok(acin("acin333", 2.0)),
        "acin333_printed" => Ok(acin("acin333_printed", -2.0)),
        _ => Err(Error::Lookup {
            kind: "probability expression",
            name: name.into(),
        }),
    }
}

/// Probability expression evaluated at the optimum of a Bell operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvaluation {
    pub expression: String,
    /// Top eigenvalue of the operator at the given settings.
    pub operator_value: f64,
    pub gamma: f64,
    pub value: f64,
}

/// Evaluates `expr` on `quasi_ghz(n, γ)`, with `γ` and the measurement bases taken from the
/// GHZ frame of the top eigenvector of `p` at `settings`.
pub fn evaluate_in_ghz_frame(
    expr: &ProbabilityExpression,
    p: &crate::poly::BellPolynomial,
    settings: &SettingsAssignment,
    labeling: Labeling,
) -> Result<FrameEvaluation> {
    let (operator_value, psi) = crate::quantum::quantum_value(p, settings)?;
    let frame = crate::quantum::ghz_frame(&psi)?;
    let gamma = frame.gamma();
    let bases = MeasurementBases::from_settings(settings, labeling)?.in_frame(&frame.bases)?;
    let state = crate::states::quasi_ghz(p.n, gamma)?;
    let value = evaluate_expression(expr, &state, &bases)?;
    Ok(FrameEvaluation {
        expression: expr.name.clone(),
        operator_value,
        gamma,
        value,
    })
}

/// `acin333` at the X/Z optimum of `c333`, with conjugate outcome labels.
pub fn acin_at_optimum() -> Result<FrameEvaluation> {
    let p = crate::poly::catalog("c333")?;
    let xz = vec![crate::operators::weyl_heisenberg(3, 1, 0)?, crate::operators::weyl_heisenberg(3, 0, 1)?];
    let settings = SettingsAssignment::uniform(3, xz, crate::quantum::SettingsLabel::Mub)?;
    evaluate_in_ghz_frame(&probability_catalog("acin333")?, &p, &settings, Labeling::Conjugate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::states::{ghz, product_state, quasi_ghz};

    fn computational(n: usize, d: usize) -> MeasurementBases {
        MeasurementBases::new(vec![vec![identity(d), identity(d)]; n]).unwrap()
    }

    #[test]
    fn computational_probabilities() {
        let zero = product_state(3, &[0, 0]).unwrap();
        assert_eq!(joint_probability(&zero, &computational(2, 3), &[0, 0], &[0, 0]).unwrap(), 1.0);
        let g = ghz(2, 3).unwrap();
        for k in 0..3 {
            let p = joint_probability(&g, &computational(2, 3), &[0, 1], &[k, k]).unwrap();
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        let single = ProbabilityExpression {
            name: "p(a=b)".into(),
            n: 2,
            d: 3,
            terms: vec![pair_term(1.0, 0, 0, 0)],
            bound: 1.0,
        };
        assert!((evaluate_expression(&single, &zero, &computational(2, 3)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cglmp_weights_and_sizes() {
        assert_eq!(cglmp(3).unwrap().terms.len(), 8);
        let e4 = cglmp(4).unwrap();
        let mut ws: Vec<f64> = e4.terms.iter().map(|t| t.weight.abs()).collect();
        ws.dedup();
        assert_eq!(ws.len(), 2);
        assert!((ws[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(probability_catalog("acin333").unwrap().terms[4].weight, 2.0);
        assert_eq!(probability_catalog("acin333_printed").unwrap().terms[4].weight, -2.0);
    }

    #[test]
    fn cglmp_quasi_ghz_value() {
        let gamma = (11f64.sqrt() - 3f64.sqrt()) / 2.0;
        let psi = quasi_ghz(2, gamma).unwrap();
        let v = evaluate_expression(&cglmp(3).unwrap(), &psi, &MeasurementBases::cglmp(3).unwrap()).unwrap();
        assert!((v - 2.0 * (5.0 - gamma * gamma) / 3.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn acin_value_at_c333_optimum() {
        let e = acin_at_optimum().unwrap();
        assert!((e.gamma - 1.186).abs() < 1e-3, "{e:?}");
        assert!((e.value - 4.37).abs() < 0.01, "{e:?}");
        assert!((e.operator_value - 0.75 * (1.0 + 33f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn distributions_are_normalized() {
        let psi = quasi_ghz(3, 0.9).unwrap();
        let bases = MeasurementBases::new(vec![MeasurementBases::phased_fourier(3, 1, &[0.1, 0.7]); 3]).unwrap();
        for choices in [[0, 0, 0], [1, 0, 1]] {
            let s: f64 = distribution(&psi, &bases, &choices).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
        }
    }
}
