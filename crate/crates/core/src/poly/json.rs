//! JSON form of a polynomial.

use serde::{Deserialize, Serialize};

use super::{Alphabet, BellPolynomial, Factor, Objective, Part, Term};
use crate::error::{argument, Result};
use crate::linalg::{c, C64};

/// One coefficient: `[[index tuple], [re, im]]`, optionally followed by per-party powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermJson {
    Plain(Vec<usize>, [f64; 2]),
    Powered(Vec<usize>, [f64; 2], Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub s: usize,
    pub d: usize,
    pub part: Part,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<TermJson>,
    /// Prime-count shorthand for symmetric two-setting tensors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Alphabet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
}

fn one() -> f64 {
    1.0
}

fn cz(v: [f64; 2]) -> C64 {
    c(v[0], v[1])
}

impl From<&BellPolynomial> for PolynomialJson {
    fn from(p: &BellPolynomial) -> Self {
        let coeffs = p
            .terms
            .iter()
            .map(|t| {
                let index = t.factors.iter().map(|f| f.setting).collect();
                let value = [t.coeff.re, t.coeff.im];
                if t.factors.iter().all(|f| f.power == 1) {
                    TermJson::Plain(index, value)
                } else {
                    TermJson::Powered(index, value, t.factors.iter().map(|f| f.power).collect())
                }
            })
            .collect();
        Self {
            id: Some(p.id.clone()),
            n: p.n,
            s: p.s,
            d: p.d,
            part: p.part,
            scale: p.scale,
            offset: p.offset,
            coeffs,
            primes: None,
            alphabet: Some(p.alphabet),
            objective: Some(p.objective),
        }
    }
}

impl TryFrom<PolynomialJson> for BellPolynomial {
    type Error = crate::Error;

    fn try_from(j: PolynomialJson) -> Result<Self> {
        let alphabet = j.alphabet.unwrap_or(Alphabet::RootsOfUnity);
        let mut p = match (&j.primes, j.coeffs.is_empty()) {
            (Some(_), false) => return Err(argument("give either `coeffs` or `primes`, not both")),
            (Some(primes), true) => {
                if j.s != 2 {
                    return Err(argument("prime-count shorthand needs s = 2"));
                }
                let counts: Vec<C64> = primes.iter().copied().map(cz).collect();
                BellPolynomial::from_prime_counts(j.n, j.d, &counts, j.part)?.with_alphabet(alphabet)
            }
            (None, _) => {
                let mut terms = Vec::with_capacity(j.coeffs.len());
                for t in &j.coeffs {
                    let (index, value, powers) = match t {
                        TermJson::Plain(i, v) => (i, v, None),
                        TermJson::Powered(i, v, p) => (i, v, Some(p)),
                    };
                    if index.len() != j.n || powers.is_some_and(|p| p.len() != j.n) {
                        return Err(argument("coefficient index or powers of the wrong length"));
                    }
                    let factors = index
                        .iter()
                        .enumerate()
                        .map(|(k, &s)| Factor::new(s, powers.map_or(1, |p| p[k])))
                        .collect();
                    terms.push(Term { coeff: cz(*value), factors });
                }
                BellPolynomial::from_terms(j.n, j.s, j.d, terms, j.part, alphabet)?
            }
        };
        p.scale = j.scale;
        p.offset = j.offset;
        if let Some(o) = j.objective {
            p.objective = o;
        }
        if let Some(id) = j.id {
            p.id = id;
        }
        p.validate()?;
        Ok(p)
    }
}

impl BellPolynomial {
    pub fn to_json(&self) -> PolynomialJson {
        self.into()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let j: PolynomialJson = serde_json::from_str(text)?;
        j.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::catalog;

    #[test]
    fn round_trip_with_powers() {
        for name in ["c223h", "c333", "c22d:4", "chsh"] {
            let p = catalog(name).unwrap();
            let text = serde_json::to_string(&p.to_json()).unwrap();
            let q = BellPolynomial::from_json_str(&text).unwrap();
            assert_eq!(p.terms, q.terms, "{name}");
            assert_eq!((p.scale, p.offset, p.part, p.alphabet), (q.scale, q.offset, q.part, q.alphabet));
        }
    }

    #[test]
    fn prime_shorthand() {
        let text = r#"{"n":2,"s":2,"d":2,"part":"full","primes":[[1,0],[1,0],[-1,0]]}"#;
        let p = BellPolynomial::from_json_str(text).unwrap();
        assert_eq!(p.coefficient(&[1, 1]), c(-1.0, 0.0));
        assert_eq!(p.coefficient(&[0, 1]), c(1.0, 0.0));
    }

    #[test]
    fn bad_index_length_is_rejected() {
        let text = r#"{"n":2,"s":2,"d":2,"part":"full","coeffs":[[[0],[1,0]]]}"#;
        assert!(BellPolynomial::from_json_str(text).is_err());
    }
}
