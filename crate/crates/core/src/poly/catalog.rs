//! Named inequalities.

use super::{Alphabet, BellPolynomial, Factor, Objective, Part, Term};
use crate::error::{argument, Error, Result};
use crate::linalg::{c, omega_pow, C64, ONE, ZERO};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
}

const ENTRIES: [CatalogEntry; 13] = [
    CatalogEntry { name: "chsh", description: "CHSH, 2 qubits" },
    CatalogEntry { name: "mermin:n", description: "Mermin polynomial for n qubits (n = 3 in the ±1 normalization with LR bound 2)" },
    CatalogEntry { name: "svetlichny3", description: "Svetlichny, 3 qubits" },
    CatalogEntry { name: "c223h", description: "CGLMP with hermitian settings, outcomes {-1, 0, 1}" },
    CatalogEntry { name: "c223", description: "CGLMP, anti-hermitian part with unitary settings" },
    CatalogEntry { name: "c333", description: "symmetric 3-qutrit, hermitian part" },
    CatalogEntry { name: "c423", description: "symmetric 4-qutrit, anti-hermitian part" },
    CatalogEntry { name: "c523", description: "symmetric 5-qutrit, hermitian part" },
    CatalogEntry { name: "c623", description: "symmetric 6-qutrit, anti-hermitian part" },
    CatalogEntry { name: "c233", description: "2 qutrits, 3 settings, from (I⊗F)|ψ⁺⟩" },
    CatalogEntry { name: "c433ghz", description: "4 qutrits, 3 settings, from the Fourier-rotated GHZ state" },
    CatalogEntry { name: "c433ame", description: "4 qutrits, 3 settings, from AME(4,3) after d′→wd′, d′↔d″ (c433ame_raw: untransformed)" },
    CatalogEntry { name: "c22d:d", description: "CGLMP operator form for d outcomes" },
];

pub fn catalog_entries() -> &'static [CatalogEntry] {
    &ENTRIES
}

fn w(k: i64) -> C64 {
    omega_pow(3, k)
}

fn r(x: f64) -> C64 {
    c(x, 0.0)
}

/// Printed prime-count coefficients for two to six parties.
pub fn table_one() -> Vec<(usize, Vec<C64>)> {
    vec![
        (2, vec![w(1), ONE, w(1)]),
        (3, vec![ONE, -w(2), w(1), r(2.0)]),
        (4, vec![r(2.0), ONE, w(1), ONE, r(2.0)]),
        (5, vec![w(2), -w(2), -w(2), -w(2), w(2), w(2)]),
        (6, vec![-w(1), ONE, -ONE, w(1), -ONE, ONE, -w(1)]),
    ]
}

/// Prime-count coefficients of the qutrit family as written in the explicit operator forms.
pub fn qutrit_family_counts(n: usize) -> Option<Vec<C64>> {
    Some(match n {
        2 => vec![w(1), -ONE, w(1)],
        3 => vec![ONE, -w(2), w(1), r(2.0)],
        4 => vec![r(2.0), ONE, w(1), ONE, r(2.0)],
        5 => vec![w(2), -w(2), -w(2), -w(2), w(2), w(2)],
        6 => vec![-w(1), ONE, -ONE, w(1), -ONE, ONE, -w(1)],
        _ => return None,
    })
}

fn qutrit_family(n: usize) -> Result<BellPolynomial> {
    let counts = qutrit_family_counts(n).ok_or_else(|| argument("qutrit family covers 2..=6 parties"))?;
    let (part, objective) = if n % 2 == 0 {
        (Part::AntiHermitian, Objective::Amax)
    } else {
        (Part::Hermitian, Objective::Hmax)
    };
    let id = if n == 3 { "c333".to_string() } else { format!("c{n}23") };
    Ok(BellPolynomial::from_prime_counts(n, 3, &counts, part)?
        .with_id(id)
        .with_objective(objective))
}

/// `C₂₃₃ = [a⃗·F₃ b⃗]_H`.
fn c233() -> Result<BellPolynomial> {
    let coeffs: Vec<C64> = (0..9).map(|i| w((i / 3) * (i % 3))).collect();
    Ok(BellPolynomial::from_coefficients(2, 3, 3, &coeffs, Part::Hermitian)?.with_id("c233"))
}

/// Sign-flipped tensor `−w^{i(j+k+l)}` of the Fourier-rotated 4-party GHZ state.
fn c433ghz() -> Result<BellPolynomial> {
    let coeffs: Vec<C64> = (0..81i64)
        .map(|idx| {
            let (i, j, k, l) = (idx / 27, (idx / 9) % 3, (idx / 3) % 3, idx % 3);
            -w(i * (j + k + l))
        })
        .collect();
    Ok(BellPolynomial::from_coefficients(4, 3, 3, &coeffs, Part::Hermitian)?.with_id("c433ghz"))
}

/// `Σ w^{j(i−k)+l(i+k)} aᵢ bⱼ cₖ dₗ`.
fn c433ame_raw() -> Result<BellPolynomial> {
    let coeffs: Vec<C64> = (0..81i64)
        .map(|idx| {
            let (i, j, k, l) = (idx / 27, (idx / 9) % 3, (idx / 3) % 3, idx % 3);
            w(j * (i - k) + l * (i + k))
        })
        .collect();
    Ok(BellPolynomial::from_coefficients(4, 3, 3, &coeffs, Part::Hermitian)?.with_id("c433ame_raw"))
}

fn c433ame() -> Result<BellPolynomial> {
    Ok(c433ame_raw()?
        .rephase_setting(3, 1, w(1))
        .swap_settings(3, 1, 2)
        .with_id("c433ame"))
}

fn chsh() -> Result<BellPolynomial> {
    Ok(BellPolynomial::from_coefficients(2, 2, 2, &[ONE, ONE, ONE, -ONE], Part::Full)?.with_id("chsh"))
}

fn svetlichny3() -> Result<BellPolynomial> {
    Ok(BellPolynomial::from_prime_counts(3, 2, &[ONE, ONE, -ONE, -ONE], Part::Full)?.with_id("svetlichny3"))
}

/// CGLMP with hermitian settings and outcomes `{−1, 0, 1}`, offset 2.
fn c223h() -> Result<BellPolynomial> {
    let t = |coeff: f64, a: (usize, u32), b: (usize, u32)| Term {
        coeff: r(coeff),
        factors: vec![Factor::new(a.0, a.1), Factor::new(b.0, b.1)],
    };
    let (a, a2, ap, ap2) = ((0, 1), (0, 2), (1, 1), (1, 2));
    let (b, b2, bp, bp2) = ((0, 1), (0, 2), (1, 1), (1, 2));
    let id = (0, 0);
    let q = 0.75;
    let h = 2.25;
    let terms = vec![
        t(-3.0, a2, id),
        t(-3.0, id, bp2),
        t(q, a, b),
        t(q, a2, b),
        t(-q, ap, b),
        t(-q, ap2, b),
        t(-q, a, b2),
        t(q, ap, b2),
        t(q, a, bp),
        t(-q, a2, bp),
        t(q, ap, bp),
        t(q, ap2, bp),
        t(q, a, bp2),
        t(-q, ap, bp2),
        t(h, a2, b2),
        t(-h, ap2, b2),
        t(h, a2, bp2),
        t(h, ap2, bp2),
    ];
    Ok(BellPolynomial::from_terms(2, 2, 3, terms, Part::Full, Alphabet::Integers { first: -1 })?
        .with_offset(2.0)
        .with_id("c223h"))
}

/// Weight of `p(a_x − b_y ≡ r)` in the d-outcome CGLMP expression, indexed `[x][y][r]`.
fn cglmp_weights(d: usize) -> Vec<Vec<Vec<f64>>> {
    let mut f = vec![vec![vec![0.0; d]; 2]; 2];
    let m = |v: i64| v.rem_euclid(d as i64) as usize;
    for k in 0..(d / 2) as i64 {
        let wk = 1.0 - 2.0 * k as f64 / (d as f64 - 1.0);
        f[0][0][m(k)] += wk;
        f[1][0][m(-(k + 1))] += wk;
        f[1][1][m(k)] += wk;
        f[0][1][m(-k)] += wk;
        f[0][0][m(-(k + 1))] -= wk;
        f[1][0][m(k)] -= wk;
        f[1][1][m(-(k + 1))] -= wk;
        f[0][1][m(k + 1)] -= wk;
    }
    f
}

/// Operator form of the d-outcome CGLMP expression, hermitian part, unitary settings.
///
/// Each weight profile `f(r)` becomes `Σₘ f̂(m) (a bᵐ)`, `f̂(m) = (1/d) Σᵣ f(r) w^{−mr}`;
/// Bob's outcomes are relabeled `b → −b` and his settings exchanged.
pub fn c22d(d: usize) -> Result<BellPolynomial> {
    if d < 3 {
        return Err(argument("c22d needs d ≥ 3"));
    }
    let f = cglmp_weights(d);
    let mut terms = Vec::new();
    let mut offset = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let hat = |m: usize| -> C64 {
                (0..d)
                    .map(|rr| omega_pow(d, -((m * rr) as i64)) * f[x][y][rr])
                    .sum::<C64>()
                    / d as f64
            };
            offset += hat(0).re;
            for m in 1..=d / 2 {
                let z = if 2 * m == d { hat(m) } else { hat(m) * 2.0 };
                if z.norm() > 1e-15 {
                    terms.push(Term {
                        coeff: z,
                        factors: vec![Factor::new(x, m as u32), Factor::new(1 - y, m as u32)],
                    });
                }
            }
        }
    }
    let p = BellPolynomial::from_terms(2, 2, d, terms, Part::Hermitian, Alphabet::RootsOfUnity)?
        .with_id(format!("c22{d}"));
    Ok(if offset.abs() > 1e-12 { p.with_offset(offset) } else { p })
}

/// `N (Σₖ rₖ H_{(ab)^k} + Σₖ iₖ A_{(ab)^k})` as a hermitian-part polynomial with
/// `H_{(ab)^k} = [(ab)^k + (ab′)^k + (a′b)^k − (a′b′)^k]_H` and
/// `A_{(ab)^k} = [−(ab)^k + (ab′)^k + (a′b)^k − (a′b′)^k]_A`.
pub fn c22d_from_parts(d: usize, real: &[f64], imag: &[f64], norm: f64) -> Result<BellPolynomial> {
    if real.len() > d / 2 || imag.len() > (d - 1) / 2 {
        return Err(argument("too many power coefficients for d"));
    }
    let hs = [1.0, 1.0, 1.0, -1.0];
    let as_ = [-1.0, 1.0, 1.0, -1.0];
    let mut terms = Vec::new();
    for k in 1..=real.len().max(imag.len()) {
        let rk = real.get(k - 1).copied().unwrap_or(0.0);
        let ik = imag.get(k - 1).copied().unwrap_or(0.0);
        for (t, (x, y)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            // [X]_A = [−iX]_H
            let coeff = c(rk * hs[t], -ik * as_[t]) * norm;
            if coeff != ZERO {
                terms.push(Term {
                    coeff,
                    factors: vec![Factor::new(x, k as u32), Factor::new(y, k as u32)],
                });
            }
        }
    }
    Ok(BellPolynomial::from_terms(2, 2, d, terms, Part::Hermitian, Alphabet::RootsOfUnity)?
        .with_id(format!("c22{d}")))
}

fn parse_arg(name: &str, prefix: &str) -> Option<Result<usize>> {
    name.strip_prefix(prefix).map(|rest| {
        rest.trim()
            .parse::<usize>()
            .map_err(|_| argument(format!("`{name}`: expected an integer after `{prefix}`")))
    })
}

/// Looks up a named inequality.
pub fn catalog(name: &str) -> Result<BellPolynomial> {
    if let Some(n) = parse_arg(name, "mermin:") {
        let n = n?;
        let p = super::mermin(n)?.with_id(format!("mermin:{n}"));
        return Ok(if n == 2 || n == 3 { p.with_scale(2.0) } else { p });
    }
    if let Some(d) = parse_arg(name, "c22d:") {
        return c22d(d?);
    }
    match name {
        "chsh" => chsh(),
        "svetlichny3" => svetlichny3(),
        "c223h" => c223h(),
        "c223" => qutrit_family(2),
        "c333" => qutrit_family(3),
        "c423" => qutrit_family(4),
        "c523" => qutrit_family(5),
        "c623" => qutrit_family(6),
        "c233" => c233(),
        "c433ghz" => c433ghz(),
        "c433ame" => c433ame(),
        "c433ame_raw" => c433ame_raw(),
        _ => Err(Error::Lookup {
            kind: "inequality",
            name: name.to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, IMAG};
    use crate::operators::{mos, weyl_heisenberg};
    use crate::quantum::{SettingsAssignment, SettingsLabel};

    #[test]
    fn registry_lists_thirteen_names() {
        assert_eq!(catalog_entries().len(), 13);
        assert!(matches!(catalog("nope"), Err(Error::Lookup { .. })));
        assert!(catalog("mermin:x").is_err());
    }

    #[test]
    fn c333_coefficients() {
        let p = catalog("c333").unwrap();
        assert_eq!(p.coefficient(&[1, 1, 1]), r(2.0));
        assert_eq!(p.coefficient(&[1, 0, 0]), -w(2));
        assert_eq!(p.coefficient(&[0, 1, 1]), w(1));
        assert_eq!(p.part, Part::Hermitian);
    }

    #[test]
    fn c623_and_c423_prime_counts() {
        let p = catalog("c623").unwrap();
        assert_eq!(p.prime_count_coefficients().unwrap(), qutrit_family_counts(6).unwrap());
        let q = catalog("c423").unwrap();
        assert_eq!(q.prime_count_coefficients().unwrap(), vec![r(2.0), ONE, w(1), ONE, r(2.0)]);
        assert_eq!(q.part, Part::AntiHermitian);
    }

    #[test]
    fn c223_matches_compact_form() {
        // a(wb − b′) + a′(wb′ − b)
        let p = catalog("c223").unwrap();
        assert_eq!(p.dense_coefficients().unwrap(), vec![w(1), -ONE, -ONE, w(1)]);
    }

    #[test]
    fn table_one_agrees_with_explicit_forms_except_n2() {
        for (n, printed) in table_one() {
            let explicit = qutrit_family_counts(n).unwrap();
            let same = printed == explicit;
            assert_eq!(same, n != 2, "n = {n}");
        }
    }

    #[test]
    fn c433ame_transformation() {
        let raw = catalog("c433ame_raw").unwrap();
        let t = catalog("c433ame").unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    assert_eq!(t.coefficient(&[i, j, k, 0]), raw.coefficient(&[i, j, k, 0]));
                    assert_eq!(t.coefficient(&[i, j, k, 2]), raw.coefficient(&[i, j, k, 1]) * w(1));
                    assert_eq!(t.coefficient(&[i, j, k, 1]), raw.coefficient(&[i, j, k, 2]));
                }
            }
        }
    }

    fn reim_form() -> BellPolynomial {
        let s = 1.0 / 3f64.sqrt();
        let coeffs = [c(1.0, s), c(1.0, -s), c(1.0, -s), c(-1.0, s)];
        BellPolynomial::from_coefficients(2, 2, 3, &coeffs, Part::Hermitian).unwrap()
    }

    #[test]
    fn c223_fourier_form_is_reim_form() {
        let p = c22d(3).unwrap();
        assert_eq!(p.offset, 0.0);
        let target = reim_form();
        for x in 0..2 {
            for y in 0..2 {
                let z = p.coefficient(&[x, y]);
                assert!((z - target.coefficient(&[x, y])).norm() < 1e-14, "{x}{y}: {z}");
            }
        }
        let q = c22d_from_parts(3, &[1.0], &[1.0 / 3f64.sqrt()], 1.0).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert!((q.coefficient(&[x, y]) - target.coefficient(&[x, y])).norm() < 1e-15);
            }
        }
        let _ = IMAG;
    }

    #[test]
    fn c224_fourier_form_matches_printed_form() {
        let derived = c22d(4).unwrap();
        let printed = c22d_from_parts(4, &[2.0, 1.0], &[2.0], 1.0 / 3.0).unwrap();
        let x = weyl_heisenberg(4, 1, 0).unwrap();
        let m = mos(4, std::f64::consts::PI / 4.0).unwrap();
        let z = weyl_heisenberg(4, 0, 1).unwrap();
        for pair in [vec![x.clone(), m.clone()], vec![x.clone(), z.clone()], vec![z, m]] {
            let s = SettingsAssignment::uniform(2, pair, SettingsLabel::Num).unwrap();
            let diff = derived.assemble(&s).unwrap() - printed.assemble(&s).unwrap();
            assert!(max_abs(&diff) < 1e-12);
        }
    }

    #[test]
    fn c223h_has_eighteen_terms_and_offset() {
        let p = catalog("c223h").unwrap();
        assert_eq!(p.terms.len(), 18);
        assert_eq!(p.offset, 2.0);
        assert_eq!(p.alphabet, Alphabet::Integers { first: -1 });
    }

    #[test]
    fn mermin_catalog_scale() {
        assert_eq!(catalog("mermin:3").unwrap().scale, 2.0);
        assert_eq!(catalog("mermin:4").unwrap().scale, 1.0);
    }
}
