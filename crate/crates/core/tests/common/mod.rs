//! Seeded oracles shared by the acceptance target and the property suites.
#![allow(dead_code)]

use bellforge::classical::{classical_report_with, strategy_value, DeterministicStrategy, EnumerationConfig};
use bellforge::linalg::{
    antihermitian_part, bracket, c, hermitian_part, identity, kron, max_abs, omega_pow, random_state,
    random_unitary, split_parts, BracketKind,
};
use bellforge::operators::{gell_mann, gell_mann_combination, root_of_identity_unitary, SettingOperator};
use bellforge::poly::{catalog, mermin, Alphabet, BellPolynomial, Factor, Objective, Part, Term};
use bellforge::probability::{evaluate_expression, probability_catalog, Labeling, MeasurementBases};
use bellforge::quantum::{expectation, quantum_value, SettingsAssignment, SettingsLabel};
use bellforge::states::PureState;
use bellforge::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

/// Hermitian operator with spectrum `±1`, random eigenbasis.
pub fn random_involution(d: usize, rng: &mut ChaCha8Rng) -> SettingOperator {
    let u = random_unitary(d, rng);
    let signs = nalgebra::DVector::from_fn(d, |i, _| c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
    let m = &u * CMatrix::from_diagonal(&signs) * u.adjoint();
    SettingOperator::hermitian(hermitian_part(&m), "inv").expect("involution is hermitian")
}

/// Unitary with spectrum the d-th roots of unity, random eigenbasis.
pub fn random_root(d: usize, rng: &mut ChaCha8Rng) -> SettingOperator {
    let params: Vec<f64> = (0..d * d - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let phases: Vec<usize> = (0..d).collect();
    root_of_identity_unitary(d, &params, &phases).expect("valid parameters")
}

/// `O` at each listed party, identity elsewhere.
pub fn embed(n: usize, d: usize, placed: &[(usize, &CMatrix)]) -> CMatrix {
    let id = identity(d);
    let factors: Vec<&CMatrix> = (0..n)
        .map(|k| placed.iter().find(|(p, _)| *p == k).map_or(&id, |(_, m)| *m))
        .collect();
    kron(&factors).expect("square factors")
}

fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> Check {
    let dev = max_abs(&(a - b));
    ensure(dev <= tol, || format!("entrywise deviation {dev:e} > {tol:e}"))
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    bracket(BracketKind::Commutator, a, b).expect("same dimension")
}

fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    bracket(BracketKind::Anticommutator, a, b).expect("same dimension")
}

/// `M = H + iA` with both parts hermitian.
pub fn split_reconstruct(seed: u64) -> Check {
    let mut r = rng(seed);
    let d = r.gen_range(1..=9);
    let m = CMatrix::from_fn(d, d, |_, _| c(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)));
    let (h, a) = split_parts(&m).map_err(err)?;
    close(&(&h + &a * c(0.0, 1.0)), &m, 1e-12)?;
    close(&h, &h.adjoint(), 1e-14)?;
    close(&a, &a.adjoint(), 1e-14)
}

fn two_party_settings(pairs: [[SettingOperator; 2]; 2], label: &str) -> SettingsAssignment {
    SettingsAssignment::new(
        pairs.into_iter().map(|p| p.to_vec()).collect(),
        SettingsLabel::Custom(label.into()),
    )
    .expect("consistent settings")
}

/// `B² = 4I − [a,a′]⊗[b,b′]` for involutive settings.
pub fn chsh_square(seed: u64) -> Check {
    let mut r = rng(seed);
    let ops: Vec<SettingOperator> = (0..4).map(|_| random_involution(2, &mut r)).collect();
    let (a, ap, b, bp) = (ops[0].matrix(), ops[1].matrix(), ops[2].matrix(), ops[3].matrix());
    let s = two_party_settings([[ops[0].clone(), ops[1].clone()], [ops[2].clone(), ops[3].clone()]], "inv");
    let bell = catalog("chsh").map_err(err)?.assemble(&s).map_err(err)?;
    let expected = identity(4) * c(4.0, 0.0) - kron(&[&commutator(a, ap), &commutator(b, bp)]).map_err(err)?;
    close(&(&bell * &bell), &expected, 1e-12)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// `M_n² = 1 + Σₛ (−1)ˢ/2^{2s} Σ_{|D|=2s} Π_{i∈D} [aᵢ,a′ᵢ]`.
pub fn mermin_square(n: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let ops: Vec<Vec<SettingOperator>> = (0..n)
        .map(|_| vec![random_involution(2, &mut r), random_involution(2, &mut r)])
        .collect();
    let comms: Vec<CMatrix> = ops.iter().map(|p| commutator(p[0].matrix(), p[1].matrix())).collect();
    let s = SettingsAssignment::new(ops, SettingsLabel::Custom("inv".into())).map_err(err)?;
    let m = mermin(n).map_err(err)?.assemble(&s).map_err(err)?;
    let dim = 1 << n;
    let mut expected = identity(dim);
    for half in 1..=n / 2 {
        let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
        let weight = sign / 4f64.powi(half as i32);
        for set in subsets(n, 2 * half) {
            let placed: Vec<(usize, &CMatrix)> = set.iter().map(|&i| (i, &comms[i])).collect();
            expected += embed(n, 2, &placed) * c(weight, 0.0);
        }
    }
    close(&(&m * &m), &expected, 1e-10)
}

/// `S₃² = 8 − 2Σ[·,·][·,·] − {a,a′}{b,b′}{c,c′}`.
pub fn svetlichny_square(seed: u64) -> Check {
    let mut r = rng(seed);
    let ops: Vec<Vec<SettingOperator>> = (0..3)
        .map(|_| vec![random_involution(2, &mut r), random_involution(2, &mut r)])
        .collect();
    let comms: Vec<CMatrix> = ops.iter().map(|p| commutator(p[0].matrix(), p[1].matrix())).collect();
    let anti: Vec<CMatrix> = ops.iter().map(|p| anticommutator(p[0].matrix(), p[1].matrix())).collect();
    let s = SettingsAssignment::new(ops, SettingsLabel::Custom("inv".into())).map_err(err)?;
    let sv = catalog("svetlichny3").map_err(err)?.assemble(&s).map_err(err)?;
    let mut expected = identity(8) * c(8.0, 0.0);
    for set in subsets(3, 2) {
        let placed: Vec<(usize, &CMatrix)> = set.iter().map(|&i| (i, &comms[i])).collect();
        expected -= embed(3, 2, &placed) * c(2.0, 0.0);
    }
    expected -= kron(&[&anti[0], &anti[1], &anti[2]]).map_err(err)?;
    close(&(&sv * &sv), &expected, 1e-10)
}

/// Unsplit two-qutrit operator `w ab − (a′b + ab′) + w a′b′`.
fn c223_raw(a: &CMatrix, ap: &CMatrix, b: &CMatrix, bp: &CMatrix) -> CMatrix {
    let w = omega_pow(3, 1);
    let k = |x: &CMatrix, y: &CMatrix| kron(&[x, y]).expect("square factors");
    k(a, b) * w - k(ap, b) - k(a, bp) + k(ap, bp) * w
}

fn random_c223_settings(seed: u64) -> (Vec<SettingOperator>, SettingsAssignment) {
    let mut r = rng(seed);
    let ops: Vec<SettingOperator> = (0..4).map(|_| random_root(3, &mut r)).collect();
    let s = two_party_settings([[ops[0].clone(), ops[1].clone()], [ops[2].clone(), ops[3].clone()]], "num");
    (ops, s)
}

/// `(C_A)² = ¼(CC† + C†C) − ½(C²)_H`, with `C_A` the catalog operator.
pub fn cglmp_antihermitian_square(seed: u64) -> Check {
    let (ops, s) = random_c223_settings(seed);
    let raw = c223_raw(ops[0].matrix(), ops[1].matrix(), ops[2].matrix(), ops[3].matrix());
    let ca = catalog("c223").map_err(err)?.assemble(&s).map_err(err)?;
    close(&ca, &antihermitian_part(&raw), 1e-12)?;
    let rhs = (&raw * raw.adjoint() + raw.adjoint() * &raw) * c(0.25, 0.0) - hermitian_part(&(&raw * &raw)) * c(0.5, 0.0);
    close(&(&ca * &ca), &rhs, 1e-11)
}

/// `CC† = 3 + (1 + {{a,a′}})(1 + {{b,b′}})`.
pub fn ccdagger_structure(seed: u64) -> Check {
    let (ops, _) = random_c223_settings(seed);
    let (a, ap, b, bp) = (ops[0].matrix(), ops[1].matrix(), ops[2].matrix(), ops[3].matrix());
    let raw = c223_raw(a, ap, b, bp);
    let id = identity(3);
    let ca = |x: &CMatrix, y: &CMatrix| bracket(BracketKind::ComplexAnticommutator, x, y).expect("same dimension");
    let expected = identity(9) * c(3.0, 0.0) + kron(&[&(&id + ca(a, ap)), &(&id + ca(b, bp))]).map_err(err)?;
    close(&(&raw * raw.adjoint()), &expected, 1e-11)
}

/// Top eigenvalue unchanged when every setting of a party is conjugated by one unitary.
pub fn local_unitary_invariance(seed: u64) -> Check {
    let mut r = rng(seed);
    let (name, n) = [("c223", 2), ("c333", 3), ("c22d:4", 2)][(seed % 3) as usize];
    let p = catalog(name).map_err(err)?;
    let d = p.d;
    let parties: Vec<Vec<SettingOperator>> = (0..n).map(|_| (0..2).map(|_| random_root(d, &mut r)).collect()).collect();
    let s = SettingsAssignment::new(parties, SettingsLabel::Num).map_err(err)?;
    let (v, _) = quantum_value(&p, &s).map_err(err)?;
    let mut t = s.clone();
    for k in 0..n {
        t = t.conjugate_party(k, &random_unitary(d, &mut r)).map_err(err)?;
    }
    let (w, _) = quantum_value(&p, &t).map_err(err)?;
    ensure((v - w).abs() <= 1e-9 * v.abs().max(1.0), || format!("{name}: {v} vs {w}"))
}

fn random_dense(r: &mut ChaCha8Rng, n: usize, s: usize, d: usize) -> BellPolynomial {
    let coeffs: Vec<C64> = (0..s.pow(n as u32))
        .map(|_| c(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)))
        .collect();
    let part = if r.gen_bool(0.5) { Part::Hermitian } else { Part::AntiHermitian };
    BellPolynomial::from_coefficients(n, s, d, &coeffs, part).expect("dense coefficients")
}

/// Bitwise-identical extrema and witnesses for any chunk count.
pub fn chunk_determinism(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.gen_range(2..=3);
    let d = r.gen_range(2..=3);
    let p = random_dense(&mut r, n, 2, d);
    let base = classical_report_with(&p, &EnumerationConfig { chunks: Some(1), ..Default::default() }).map_err(err)?;
    for chunks in [2, 3, 7, 64] {
        let other = classical_report_with(&p, &EnumerationConfig { chunks: Some(chunks), ..Default::default() })
            .map_err(err)?;
        for o in Objective::ALL {
            let (x, y) = (base.extremum(o), other.extremum(o));
            ensure(x.value.to_bits() == y.value.to_bits() && x.witness == y.witness, || {
                format!("{o:?} with {chunks} chunks: {} vs {}", x.value, y.value)
            })?;
        }
    }
    Ok(())
}

/// Integer-coefficient ±1 polynomials: enumeration against exact integer arithmetic.
pub fn classical_exactness(seed: u64) -> Check {
    let mut r = rng(seed);
    let n: usize = r.gen_range(2..=4);
    let s: usize = r.gen_range(2..=3);
    let ints: Vec<i64> = (0..s.pow(n as u32)).map(|_| r.gen_range(-5..=5)).collect();
    let coeffs: Vec<C64> = ints.iter().map(|&k| c(k as f64, 0.0)).collect();
    let p = BellPolynomial::from_coefficients(n, s, 2, &coeffs, Part::Full).map_err(err)?;
    let (mut best_max, mut best_min) = (i64::MIN, i64::MAX);
    for strat in 0u64..1 << (n * s) {
        let sign = |party: usize, setting: usize| if strat >> (party * s + setting) & 1 == 1 { -1 } else { 1 };
        let mut total = 0i64;
        for (idx, &k) in ints.iter().enumerate() {
            let mut rest = idx;
            let mut prod = k;
            for party in (0..n).rev() {
                prod *= sign(party, rest % s);
                rest /= s;
            }
            total += prod;
        }
        best_max = best_max.max(total);
        best_min = best_min.min(total);
    }
    let report = classical_report_with(&p, &EnumerationConfig::default()).map_err(err)?;
    let (hmax, hmin) = (report.value(Objective::Hmax), report.value(Objective::Hmin));
    ensure(hmax == best_max as f64 && hmin == best_min as f64, || {
        format!("enumeration ({hmax}, {hmin}) vs integer oracle ({best_max}, {best_min})")
    })?;
    let witness: &DeterministicStrategy = &report.extremum(Objective::Hmax).witness;
    let at = strategy_value(&p, witness).map_err(err)?;
    ensure(at.re == best_max as f64, || format!("witness evaluates to {at}"))
}

/// Settings `A = B = λ₃`, `A′ = B′ = (2/3)(λ₁+λ₆) + (1/6)(λ₃+√3λ₈)`.
pub fn gell_mann_settings() -> SettingsAssignment {
    let s3 = 3f64.sqrt();
    let a = gell_mann(3).expect("index in 1..=8");
    let ap = gell_mann_combination(&[(1, 2.0 / 3.0), (6, 2.0 / 3.0), (3, 1.0 / 6.0), (8, s3 / 6.0)], "A'")
        .expect("valid weights");
    SettingsAssignment::uniform(2, vec![a, ap], SettingsLabel::Custom("Gell-Mann".into())).expect("qutrit settings")
}

/// `⟨c223h⟩` and the probability form of CGLMP agree on random states.
pub fn cglmp_operator_probability_agreement(seed: u64) -> Check {
    let mut r = rng(seed);
    let p = catalog("c223h").map_err(err)?;
    let s = gell_mann_settings();
    let bases = MeasurementBases::from_settings(&s, Labeling::Forward).map_err(err)?;
    let expr = probability_catalog("cglmp:3").map_err(err)?;
    let psi = PureState::normalized(2, 3, random_state(9, &mut r), "random").map_err(err)?;
    let op = expectation(&p, &s, &psi).map_err(err)?;
    let prob = evaluate_expression(&expr, &psi, &bases).map_err(err)?;
    ensure((op - prob).abs() <= 1e-10, || format!("operator {op} vs probability {prob}"))
}

/// A hand-built `Σ c Π Oᵏ` assembly with powers, checked against the library.
pub fn assembly_with_powers(seed: u64) -> Check {
    let mut r = rng(seed);
    let d = 3;
    let ops: Vec<Vec<SettingOperator>> = (0..2).map(|_| (0..2).map(|_| random_root(d, &mut r)).collect()).collect();
    let mut terms = Vec::new();
    let mut expected = CMatrix::zeros(9, 9);
    for _ in 0..4 {
        let coeff = c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let f: Vec<Factor> = (0..2).map(|_| Factor::new(r.gen_range(0..2), r.gen_range(1..3))).collect();
        let mats: Vec<CMatrix> = f
            .iter()
            .zip(&ops)
            .map(|(f, party)| {
                let m = party[f.setting].matrix();
                (1..f.power).fold(m.clone(), |acc, _| &acc * m)
            })
            .collect();
        expected += kron(&[&mats[0], &mats[1]]).map_err(err)? * coeff;
        terms.push(Term { coeff, factors: f });
    }
    let p = BellPolynomial::from_terms(2, 2, d, terms, Part::Hermitian, Alphabet::RootsOfUnity).map_err(err)?;
    let s = SettingsAssignment::new(ops, SettingsLabel::Num).map_err(err)?;
    close(&p.assemble(&s).map_err(err)?, &hermitian_part(&expected), 1e-12)
}
