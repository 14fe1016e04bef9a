//! Quantum values: top eigenpairs at fixed settings, expectations, quasi-GHZ
//! sweeps and derivative-free optimization over settings.

use std::fmt;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{classical_report, ClassicalReport};
use crate::error::{argument, contract, Error, Result};
use crate::linalg::{
    c, eigh, hermitian_part, identity, kron, mat_pow, max_eigenpair, CMatrix, CVector, MatrixJson, C64,
    ONE, ZERO,
};
use crate::operators::{generalized_gell_mann, parse_setting, unitary_exp, Flavor, SettingOperator};
use crate::poly::{Alphabet, BellPolynomial, Factor, Part};
use crate::search::{maximize, PatternSearch};
use crate::states::{apply_factors, digits, reduction_purities, PureState, PurityReport, StateJson};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingsLabel {
    Mub,
    Mos,
    Num,
    Custom(String),
}

impl fmt::Display for SettingsLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingsLabel::Mub => f.write_str("MUB"),
            SettingsLabel::Mos => f.write_str("MOS"),
            SettingsLabel::Num => f.write_str("Num."),
            SettingsLabel::Custom(s) => f.write_str(s),
        }
    }
}

/// Ordered settings per party, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsAssignment {
    parties: Vec<Vec<SettingOperator>>,
    label: SettingsLabel,
}

impl SettingsAssignment {
    pub fn new(parties: Vec<Vec<SettingOperator>>, label: SettingsLabel) -> Result<Self> {
        let dim = parties
            .first()
            .and_then(|p| p.first())
            .map(SettingOperator::dim)
            .ok_or_else(|| argument("settings need at least one party with one setting"))?;
        for (k, ops) in parties.iter().enumerate() {
            if ops.is_empty() {
                return Err(argument(format!("party {k} has no settings")));
            }
            if let Some(op) = ops.iter().find(|o| o.dim() != dim) {
                return Err(Error::Dimension(format!(
                    "setting `{}` of party {k} is {}-dimensional, expected {dim}",
                    op.label(),
                    op.dim()
                )));
            }
        }
        Ok(Self { parties, label })
    }

    /// The same settings for each of `n` parties.
    pub fn uniform(n: usize, ops: Vec<SettingOperator>, label: SettingsLabel) -> Result<Self> {
        Self::new(vec![ops; n], label)
    }

    pub fn n(&self) -> usize {
        self.parties.len()
    }

    pub fn dim(&self) -> usize {
        self.parties[0][0].dim()
    }

    pub fn parties(&self) -> &[Vec<SettingOperator>] {
        &self.parties
    }

    pub fn label(&self) -> &SettingsLabel {
        &self.label
    }

    pub fn with_label(mut self, label: SettingsLabel) -> Self {
        self.label = label;
        self
    }

    /// Replaces one setting.
    pub fn with_setting(mut self, party: usize, setting: usize, op: SettingOperator) -> Result<Self> {
        if op.dim() != self.dim() {
            return Err(Error::Dimension("replacement setting has the wrong dimension".into()));
        }
        let slot = self
            .parties
            .get_mut(party)
            .and_then(|p| p.get_mut(setting))
            .ok_or_else(|| argument(format!("no setting {setting} for party {party}")))?;
        *slot = op;
        Ok(self)
    }

    /// Conjugates every setting of party `k` by `v`: `O → v O v†`.
    pub fn conjugate_party(&self, party: usize, v: &CMatrix) -> Result<Self> {
        let mut out = self.clone();
        let ops = out
            .parties
            .get_mut(party)
            .ok_or_else(|| argument(format!("no party {party}")))?;
        for op in ops.iter_mut() {
            *op = op.conjugated(v)?;
        }
        Ok(out)
    }

    /// Party settings rewritten in a local frame: `O → F† O F` per party.
    pub fn in_frame(&self, frames: &[CMatrix]) -> Result<Self> {
        if frames.len() != self.n() {
            return Err(argument("one frame per party"));
        }
        let mut out = self.clone();
        for (k, f) in frames.iter().enumerate() {
            out = out.conjugate_party(k, &f.adjoint())?;
        }
        Ok(out)
    }
}

/// Settings from a CLI string: `X,Z` for every party or `X,Z;X,mos:0;…` per party.
pub fn parse_settings(spec: &str, n: usize, d: usize) -> Result<SettingsAssignment> {
    let parse_list = |list: &str| -> Result<Vec<SettingOperator>> {
        list.split(',').map(|s| parse_setting(s.trim(), d)).collect()
    };
    let groups: Vec<&str> = spec.split(';').filter(|g| !g.trim().is_empty()).collect();
    let label = SettingsLabel::Custom(spec.to_string());
    match groups.len() {
        1 => SettingsAssignment::uniform(n, parse_list(groups[0])?, label),
        m if m == n => SettingsAssignment::new(groups.iter().map(|g| parse_list(g)).collect::<Result<_>>()?, label),
        m => Err(argument(format!("{m} settings groups for {n} parties"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingJson {
    pub label: String,
    pub flavor: Flavor,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingsJson {
    pub label: SettingsLabel,
    pub parties: Vec<Vec<SettingJson>>,
}

impl From<&SettingsAssignment> for SettingsJson {
    fn from(s: &SettingsAssignment) -> Self {
        Self {
            label: s.label.clone(),
            parties: s
                .parties
                .iter()
                .map(|ops| {
                    ops.iter()
                        .map(|o| SettingJson {
                            label: o.label().to_string(),
                            flavor: o.flavor(),
                            matrix: MatrixJson::from(o.matrix()),
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<&SettingsJson> for SettingsAssignment {
    type Error = Error;

    fn try_from(j: &SettingsJson) -> Result<Self> {
        let parties = j
            .parties
            .iter()
            .map(|ops| {
                ops.iter()
                    .map(|o| {
                        let m = CMatrix::try_from(&o.matrix)?;
                        match o.flavor {
                            Flavor::UnitaryRoot => SettingOperator::unitary_root(m, o.label.clone()),
                            Flavor::Hermitian => SettingOperator::hermitian(m, o.label.clone()),
                            Flavor::Unitary => SettingOperator::classify(m, o.label.clone()),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SettingsAssignment::new(parties, j.label.clone())
    }
}

/// Largest eigenvalue of the Bell operator and its eigenvector as a state.
pub fn quantum_value(p: &BellPolynomial, settings: &SettingsAssignment) -> Result<(f64, PureState)> {
    let b = p.assemble(settings)?;
    let pair = max_eigenpair(&b)?;
    let state = PureState::normalized(p.n, settings.dim(), pair.vector, format!("top({})", p.id))?;
    Ok((pair.value, state))
}

/// `Re⟨ψ|B|ψ⟩`.
pub fn expectation(p: &BellPolynomial, settings: &SettingsAssignment, psi: &PureState) -> Result<f64> {
    if psi.n() != p.n || psi.d() != settings.dim() {
        return Err(Error::Dimension(format!(
            "state of {} parties with d={} for {} parties with d={}",
            psi.n(),
            psi.d(),
            p.n,
            settings.dim()
        )));
    }
    let b = p.assemble(settings)?;
    let v = psi.amplitudes();
    let z = v.dotc(&(&b * v));
    if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
        return Err(contract(format!("expectation has imaginary part {:e}", z.im)));
    }
    Ok(z.re)
}

fn score_raw(p: &BellPolynomial, raw: C64) -> f64 {
    let part = match p.part {
        Part::AntiHermitian => raw.im,
        Part::Hermitian | Part::Full => raw.re,
    };
    p.scale * part + p.offset
}

/// `⟨ψ|B|ψ⟩` through per-term local actions, without forming the operator.
pub fn expectation_by_terms(p: &BellPolynomial, settings: &SettingsAssignment, psi: &CVector) -> Result<f64> {
    p.check_settings(settings)?;
    let dim = settings.dim();
    let id = identity(dim);
    let powers = power_cache(p, settings);
    let mut raw = ZERO;
    for t in &p.terms {
        let ops: Vec<&CMatrix> = t
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| powers[k].get(f).unwrap_or(&id))
            .collect();
        raw += psi.dotc(&apply_factors(&ops, psi, p.n, dim)) * t.coeff;
    }
    Ok(score_raw(p, raw))
}

fn power_cache(p: &BellPolynomial, settings: &SettingsAssignment) -> Vec<std::collections::BTreeMap<Factor, CMatrix>> {
    p.party_factors()
        .iter()
        .enumerate()
        .map(|(k, fs)| {
            fs.iter()
                .filter(|f| f.power > 0)
                .map(|&f| (f, mat_pow(settings.parties()[k][f.setting].matrix(), f.power)))
                .collect()
        })
        .collect()
}

/// Local frame in which a state is `Σⱼ cⱼ |j⟩^{⊗n}` with real `cⱼ ≥ 0`.
#[derive(Debug, Clone)]
pub struct GhzFrame {
    /// Per party, unitary whose column `j` is the branch-`j` vector.
    pub bases: Vec<CMatrix>,
    /// Branch weights `cⱼ`; for three branches the distinct one sits in the middle.
    pub weights: Vec<f64>,
    /// Weight of the state inside the frame's GHZ span.
    pub fidelity: f64,
}

impl GhzFrame {
    /// `γ` of the quasi-GHZ state closest to the branch weights.
    pub fn gamma(&self) -> f64 {
        let w = &self.weights;
        if w.len() != 3 {
            return f64::NAN;
        }
        w[1] / ((w[0] * w[0] + w[2] * w[2]) / 2.0).sqrt()
    }

    /// `Σⱼ aⱼ e^{iθⱼ} ⊗ₖ eₖⱼ`.
    pub fn state(&self, amplitudes: &[C64]) -> Result<PureState> {
        let n = self.bases.len();
        let d = self.bases[0].nrows();
        let mut v = CVector::from_element(d.pow(n as u32), ZERO);
        for (j, &a) in amplitudes.iter().enumerate() {
            let cols: Vec<CMatrix> = self
                .bases
                .iter()
                .map(|b| CMatrix::from_iterator(d, 1, b.column(j).iter().copied()))
                .collect();
            let refs: Vec<&CMatrix> = cols.iter().collect();
            let k = kron(&refs)?;
            v += k.column(0) * a;
        }
        PureState::normalized(n, d, v, "frame")
    }
}

fn pair_contraction(psi: &CVector, n: usize, d: usize, k: usize, m: usize, xs: &[CVector]) -> CMatrix {
    let mut out = CMatrix::zeros(d, d);
    for (idx, &a) in psi.iter().enumerate() {
        if a == ZERO {
            continue;
        }
        let dg = digits(idx, n, d);
        let mut w = a;
        for l in 0..n {
            if l != k && l != m {
                w *= xs[l][dg[l]];
            }
        }
        out[(dg[k], dg[m])] += w;
    }
    out
}

fn frame_vectors(psi: &CVector, n: usize, d: usize) -> Result<Vec<CMatrix>> {
    if n == 2 {
        let m = CMatrix::from_fn(d, d, |i, j| psi[i * d + j]);
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let a = CMatrix::from_fn(d, d, |r, j| u[(r, order[j])]);
        let b = CMatrix::from_fn(d, d, |r, j| vt[(order[j], r)]);
        return Ok(vec![a, b]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut draw = || CVector::from_fn(d, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let xs: Vec<CVector> = (0..n).map(|_| draw()).collect();
    let ys: Vec<CVector> = (0..n).map(|_| draw()).collect();
    let mut bases = Vec::with_capacity(n);
    for k in 0..n {
        let m = (k + 1) % n;
        let mx = pair_contraction(psi, n, d, k, m, &xs);
        let my = pair_contraction(psi, n, d, k, m, &ys);
        let prod = &mx * my.adjoint();
        // Eigenvectors of the (ideally normal) product through a generic hermitian mix of its parts.
        let h = hermitian_part(&prod);
        let a = (&prod - prod.adjoint()) * c(0.0, -0.5);
        let (_, vecs) = eigh(&hermitian_part(&(h + a * c(0.618_033_988_749_895, 0.0))))?;
        bases.push(vecs);
    }
    Ok(bases)
}

/// Extracts the GHZ frame of a state with GHZ-type entanglement.
pub fn ghz_frame(psi: &PureState) -> Result<GhzFrame> {
    let (n, d) = (psi.n(), psi.d());
    if n < 2 {
        return Err(argument("GHZ frame needs at least two parties"));
    }
    let amps = psi.amplitudes();
    let mut bases = frame_vectors(amps, n, d)?;
    if n > 2 {
        let adj: Vec<CMatrix> = bases.iter().map(|b| b.adjoint()).collect();
        let refs: Vec<&CMatrix> = adj.iter().collect();
        let coeffs = apply_factors(&refs, amps, n, d);
        let stride0 = d.pow((n - 1) as u32);
        let mut perms = vec![vec![0usize; d]; n];
        for j in 0..d {
            let (best, _) = (j * stride0..(j + 1) * stride0)
                .map(|i| (i, coeffs[i].norm()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let dg = digits(best, n, d);
            for k in 0..n {
                perms[k][j] = dg[k];
            }
        }
        for (k, perm) in perms.iter().enumerate() {
            let mut seen = vec![false; d];
            if perm.iter().any(|&p| std::mem::replace(&mut seen[p], true)) {
                return Err(contract(format!("state has no GHZ frame (party {k} branches collide)")));
            }
            bases[k] = CMatrix::from_fn(d, d, |r, j| bases[k][(r, perm[j])]);
        }
    }
    let branch = |bases: &[CMatrix], j: usize| -> C64 {
        let rows: Vec<CMatrix> = bases
            .iter()
            .map(|b| CMatrix::from_iterator(1, d, b.column(j).iter().map(|z| z.conj())))
            .collect();
        let refs: Vec<&CMatrix> = rows.iter().collect();
        let bra = kron(&refs).expect("non-empty");
        (bra * amps)[(0, 0)]
    };
    let coeffs: Vec<C64> = (0..d).map(|j| branch(&bases, j)).collect();
    for (j, z) in coeffs.iter().enumerate() {
        if z.norm() > 0.0 {
            let phase = z / z.norm();
            for r in 0..d {
                bases[0][(r, j)] *= phase;
            }
        }
    }
    let mut weights: Vec<f64> = coeffs.iter().map(|z| z.norm()).collect();
    if d == 3 {
        let odd = (0..3)
            .max_by(|&a, &b| {
                let dev = |j: usize| {
                    let others: Vec<f64> = (0..3).filter(|&i| i != j).map(|i| weights[i]).collect();
                    (weights[j] - (others[0] + others[1]) / 2.0).abs()
                };
                dev(a).total_cmp(&dev(b)).then(b.cmp(&a))
            })
            .expect("three branches");
        if odd != 1 {
            weights.swap(odd, 1);
            for b in &mut bases {
                b.swap_columns(odd, 1);
            }
        }
    }
    let fidelity = weights.iter().map(|w| w * w).sum();
    Ok(GhzFrame { bases, weights, fidelity })
}

#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub gamma: f64,
    pub value: f64,
    /// Branch phases at the optimum, branch 0 fixed to zero.
    pub phases: Vec<f64>,
    pub frame: GhzFrame,
}

fn branch_value(g: &Matrix3<C64>, gamma: f64, phases: &mut [f64; 3]) -> f64 {
    let norm = (2.0 + gamma * gamma).sqrt();
    let a = [1.0 / norm, gamma / norm, 1.0 / norm];
    let amp = |ph: &[f64; 3], j: usize| c(ph[j].cos(), ph[j].sin()) * a[j];
    let value = |ph: &[f64; 3]| {
        let mut v = ZERO;
        for j in 0..3 {
            for l in 0..3 {
                v += amp(ph, j).conj() * g[(j, l)] * amp(ph, l);
            }
        }
        v.re
    };
    let mut best = value(phases);
    for _ in 0..200 {
        for l in 1..3 {
            let z: C64 = (0..3)
                .filter(|&j| j != l)
                .map(|j| amp(phases, j).conj() * g[(j, l)] * a[l])
                .sum();
            if z.norm() > 0.0 {
                phases[l] = -z.arg();
            }
        }
        let v = value(phases);
        if v - best < 1e-15 {
            best = best.max(v);
            break;
        }
        best = v;
    }
    best
}

/// Best expectation over quasi-GHZ states `(|0…0⟩ + γ|1…1⟩ + |2…2⟩)/√(2+γ²)` written
/// in the GHZ frame of the top eigenvector, with branch phases optimized per `γ`.
pub fn gamma_sweep(p: &BellPolynomial, settings: &SettingsAssignment, resolution: usize) -> Result<GammaSweep> {
    if settings.dim() != 3 {
        return Err(argument("quasi-GHZ sweeps need qutrit settings"));
    }
    if resolution < 3 {
        return Err(argument("sweep resolution must be at least 3"));
    }
    let b = p.assemble(settings)?;
    let pair = max_eigenpair(&b)?;
    let top = PureState::normalized(p.n, 3, pair.vector, "top")?;
    let frame = ghz_frame(&top)?;
    let branches: Vec<CVector> = (0..3)
        .map(|j| {
            let mut amps = [ZERO; 3];
            amps[j] = ONE;
            frame.state(&amps).map(|s| s.amplitudes().clone())
        })
        .collect::<Result<_>>()?;
    let g = Matrix3::from_fn(|j, l| branches[j].dotc(&(&b * &branches[l])));
    let eval = |t: f64| {
        let mut ph = [0.0; 3];
        let v = branch_value(&g, t.tan(), &mut ph);
        (v, ph)
    };
    let half = std::f64::consts::FRAC_PI_2;
    let grid: Vec<f64> = (1..=resolution).map(|i| half * i as f64 / (resolution + 1) as f64).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| (i, eval(t).0))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let step = half / (resolution + 1) as f64;
    let (mut lo, mut hi) = ((grid[best] - step).max(1e-9), (grid[best] + step).min(half - 1e-9));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (eval(x1).0, eval(x2).0);
    while hi.tan() - lo.tan() > 1e-7 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1).0;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2).0;
        }
    }
    let t = (lo + hi) / 2.0;
    let (value, phases) = eval(t);
    Ok(GammaSweep {
        gamma: t.tan(),
        value,
        phases: phases.to_vec(),
        frame,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Objective evaluations per restart in the joint pattern-search stage.
    pub budget: usize,
    pub seed: u64,
    /// One shared list of settings for all parties.
    pub symmetric: bool,
    /// Alternating state/settings rounds after the joint stage.
    pub see_saw_rounds: usize,
    /// Fixed settings; with `free`, only the listed `(party, setting)` slots move.
    pub start: Option<SettingsAssignment>,
    pub free: Option<Vec<(usize, usize)>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            budget: 2000,
            seed: 7,
            symmetric: false,
            see_saw_rounds: 30,
            start: None,
            free: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub settings: SettingsAssignment,
    /// Top eigenvalue at `settings`.
    pub value: f64,
    pub state: PureState,
    pub converged: bool,
    pub restart: usize,
    pub seed: u64,
}

/// How free settings map to parameters.
struct Layout {
    n: usize,
    s: usize,
    d: usize,
    gens: Vec<CMatrix>,
    base: CMatrix,
    flavor_root: bool,
    /// Parameter block per free slot; symmetric layouts share blocks across parties.
    slots: Vec<((usize, usize), usize)>,
    blocks: usize,
    fixed: Option<SettingsAssignment>,
}

impl Layout {
    fn new(p: &BellPolynomial, d: usize, cfg: &OptimizerConfig) -> Result<Self> {
        let (base, flavor_root) = match p.alphabet {
            Alphabet::RootsOfUnity => (
                CMatrix::from_diagonal(&CVector::from_fn(d, |m, _| crate::linalg::omega_pow(d, m as i64))),
                true,
            ),
            Alphabet::Integers { first } => (
                CMatrix::from_diagonal(&CVector::from_fn(d, |m, _| c((first + m as i64) as f64, 0.0))),
                false,
            ),
        };
        if let Some(start) = &cfg.start {
            if start.n() != p.n || start.dim() != d || start.parties().iter().any(|o| o.len() < p.s) {
                return Err(Error::Dimension("start settings do not fit the polynomial".into()));
            }
        }
        let (slots, blocks) = match &cfg.free {
            Some(free) => {
                if cfg.start.is_none() {
                    return Err(argument("a free-slot list needs start settings"));
                }
                if free.iter().any(|&(k, j)| k >= p.n || j >= p.s) {
                    return Err(argument("free slot outside the polynomial's settings"));
                }
                (free.iter().enumerate().map(|(i, &s)| (s, i)).collect(), free.len())
            }
            None if cfg.symmetric => {
                let slots = (0..p.n).flat_map(|k| (0..p.s).map(move |j| ((k, j), j))).collect();
                (slots, p.s)
            }
            None => {
                let slots = (0..p.n).flat_map(|k| (0..p.s).map(move |j| ((k, j), k * p.s + j))).collect();
                (slots, p.n * p.s)
            }
        };
        Ok(Self {
            n: p.n,
            s: p.s,
            d,
            gens: generalized_gell_mann(d),
            base,
            flavor_root,
            slots,
            blocks,
            fixed: cfg.start.clone(),
        })
    }

    fn block_len(&self) -> usize {
        self.d * self.d - 1
    }

    /// `V base V†` with `V = exp(i Σ θ λ)`.
    fn matrix(&self, params: &[f64]) -> CMatrix {
        let v = unitary_exp(&self.gens, params);
        let m = &v * &self.base * v.adjoint();
        if self.flavor_root {
            m
        } else {
            hermitian_part(&m)
        }
    }

    fn settings(&self, x: &[f64]) -> Result<SettingsAssignment> {
        self.settings_cached(x, &mut BlockCache::default())
    }

    /// Reuses block matrices whose parameters did not change since the last call.
    fn settings_cached(&self, x: &[f64], cache: &mut BlockCache) -> Result<SettingsAssignment> {
        let bl = self.block_len();
        let flavor = if self.flavor_root { Flavor::UnitaryRoot } else { Flavor::Hermitian };
        cache.0.resize(self.blocks, None);
        let ops: Vec<SettingOperator> = (0..self.blocks)
            .map(|b| {
                let params = &x[b * bl..(b + 1) * bl];
                let m = cache.get_or_insert(b, params, || self.matrix(params));
                SettingOperator::trusted(m, flavor, "num")
            })
            .collect();
        let mut parties: Vec<Vec<SettingOperator>> = match &self.fixed {
            Some(f) => f.parties().iter().map(|o| o[..self.s].to_vec()).collect(),
            None => vec![vec![ops[0].clone(); self.s]; self.n],
        };
        for &((k, j), b) in &self.slots {
            parties[k][j] = ops[b].clone();
        }
        SettingsAssignment::new(parties, SettingsLabel::Num)
    }
}

/// Last parameters and matrix per block.
#[derive(Default)]
struct BlockCache(Vec<Option<(Vec<f64>, CMatrix)>>);

impl BlockCache {
    fn get_or_insert(&mut self, block: usize, params: &[f64], make: impl FnOnce() -> CMatrix) -> CMatrix {
        if block >= self.0.len() {
            self.0.resize(block + 1, None);
        }
        match &self.0[block] {
            Some((p, m)) if p.as_slice() == params => m.clone(),
            _ => {
                let m = make();
                self.0[block] = Some((params.to_vec(), m.clone()));
                m
            }
        }
    }
}

fn top_value(p: &BellPolynomial, layout: &Layout, x: &[f64], cache: &mut BlockCache) -> f64 {
    layout
        .settings_cached(x, cache)
        .and_then(|s| p.assemble(&s))
        .and_then(|b| max_eigenpair(&b))
        .map_or(f64::NEG_INFINITY, |e| e.value)
}

/// Environment matrices of one party: `⟨ψ|B_raw|ψ⟩ = Σ_f tr(O_f E_f)`.
fn environments(
    p: &BellPolynomial,
    settings: &SettingsAssignment,
    psi: &CVector,
    party: usize,
) -> Vec<(Factor, CMatrix)> {
    let (n, d) = (p.n, settings.dim());
    let id = identity(d);
    let powers = power_cache(p, settings);
    let mut groups: std::collections::BTreeMap<Factor, CVector> = std::collections::BTreeMap::new();
    for t in &p.terms {
        let ops: Vec<&CMatrix> = t
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| if k == party { &id } else { powers[k].get(f).unwrap_or(&id) })
            .collect();
        let phi = apply_factors(&ops, psi, n, d) * t.coeff;
        *groups
            .entry(t.factors[party])
            .or_insert_with(|| CVector::from_element(psi.len(), ZERO)) += phi;
    }
    let stride = d.pow((n - 1 - party) as u32);
    groups
        .into_iter()
        .map(|(f, phi)| {
            let mut e = CMatrix::zeros(d, d);
            for idx in 0..psi.len() {
                let digit = (idx / stride) % d;
                let base = idx - digit * stride;
                let bra = psi[idx].conj();
                if bra == ZERO {
                    continue;
                }
                for j in 0..d {
                    e[(j, digit)] += bra * phi[base + j * stride];
                }
            }
            (f, e)
        })
        .collect()
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut t = ZERO;
    for i in 0..d {
        for j in 0..d {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

struct RunResult {
    x: Vec<f64>,
    value: f64,
    converged: bool,
}

fn see_saw(p: &BellPolynomial, layout: &Layout, mut x: Vec<f64>, rounds: usize) -> Result<(Vec<f64>, f64, bool)> {
    let bl = layout.block_len();
    let local = PatternSearch {
        initial_step: 0.2,
        min_step: 1e-7,
        max_evals: 1500,
        ..Default::default()
    };
    let mut cache = BlockCache::default();
    let mut value = top_value(p, layout, &x, &mut cache);
    for _ in 0..rounds {
        let settings = layout.settings(&x)?;
        let b = p.assemble(&settings)?;
        let psi = max_eigenpair(&b)?.vector;
        let party_blocks = layout.fixed.is_some() || layout.blocks == layout.n * layout.s;
        if party_blocks {
            for k in 0..layout.n {
                let mine: Vec<(usize, usize)> = layout
                    .slots
                    .iter()
                    .filter(|((pk, _), _)| *pk == k)
                    .map(|&((_, j), b)| (j, b))
                    .collect();
                if mine.is_empty() {
                    continue;
                }
                let current = layout.settings(&x)?;
                let envs = environments(p, &current, &psi, k);
                let fixed_ops: Vec<CMatrix> = current.parties()[k].iter().map(|o| o.matrix().clone()).collect();
                let x0: Vec<f64> = mine.iter().flat_map(|&(_, b)| x[b * bl..(b + 1) * bl].to_vec()).collect();
                let mut local_cache = BlockCache::default();
                let eval = |y: &[f64]| -> f64 {
                    let mut ops = fixed_ops.clone();
                    for (i, &(j, _)) in mine.iter().enumerate() {
                        let params = &y[i * bl..(i + 1) * bl];
                        ops[j] = local_cache.get_or_insert(i, params, || layout.matrix(params));
                    }
                    let raw: C64 = envs
                        .iter()
                        .map(|(f, e)| {
                            if f.power == 0 {
                                e.trace()
                            } else {
                                trace_product(&mat_pow(&ops[f.setting], f.power), e)
                            }
                        })
                        .sum();
                    score_raw(p, raw)
                };
                let r = maximize(eval, x0, &local);
                for (i, &(_, b)) in mine.iter().enumerate() {
                    x[b * bl..(b + 1) * bl].copy_from_slice(&r.x[i * bl..(i + 1) * bl]);
                }
            }
        } else {
            let eval = |y: &[f64]| -> f64 {
                layout
                    .settings_cached(y, &mut cache)
                    .and_then(|s| expectation_by_terms(p, &s, &psi))
                    .unwrap_or(f64::NEG_INFINITY)
            };
            let r = maximize(eval, x.clone(), &local);
            x = r.x;
        }
        let next = top_value(p, layout, &x, &mut cache);
        if next - value <= 1e-9 * value.abs().max(1.0) {
            value = value.max(next);
            return Ok((x, value, true));
        }
        value = next;
    }
    Ok((x, value, rounds == 0))
}

fn run_restart(p: &BellPolynomial, layout: &Layout, cfg: &OptimizerConfig, restart: usize) -> Result<RunResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let dim = layout.blocks * layout.block_len();
    let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
    let mut converged = true;
    let mut x = x0;
    if cfg.budget > 0 {
        let mut cache = BlockCache::default();
        let r = maximize(|y| top_value(p, layout, y, &mut cache), x, &PatternSearch {
            max_evals: cfg.budget,
            ..Default::default()
        });
        converged = r.converged;
        x = r.x;
    }
    let (x, value, ss_converged) = see_saw(p, layout, x, cfg.see_saw_rounds)?;
    Ok(RunResult {
        x,
        value,
        converged: converged || ss_converged,
    })
}

/// Best settings found by restarted pattern search plus see-saw refinement.
///
/// Restarts are independent and merged by value with the lower restart index
/// winning ties, so the result does not depend on the thread count.
pub fn optimize_settings(p: &BellPolynomial, d: usize, cfg: &OptimizerConfig) -> Result<Optimized> {
    if d < 2 {
        return Err(argument("optimization needs d ≥ 2"));
    }
    if cfg.restarts == 0 {
        return Err(argument("at least one restart is needed"));
    }
    let total = (d as u128).pow(p.n as u32);
    if total > crate::numeric::MAX_DIM as u128 {
        return Err(Error::Capacity {
            what: "Bell operator dimension",
            requested: total,
            limit: crate::numeric::MAX_DIM as u128,
        });
    }
    let layout = Layout::new(p, d, cfg)?;
    let runs: Vec<Result<RunResult>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(p, &layout, cfg, r))
        .collect();
    let mut best: Option<(usize, RunResult)> = None;
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().map_or(true, |(_, b)| run.value > b.value) {
            best = Some((i, run));
        }
    }
    let (restart, run) = best.expect("at least one restart");
    let settings = layout.settings(&run.x)?;
    let (value, state) = quantum_value(p, &settings)?;
    Ok(Optimized {
        settings,
        value,
        state,
        converged: run.converged,
        restart,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact top eigenvalue at the given settings.
    Eigen,
    /// Best value found by the optimizer: a lower bound.
    Optimized,
}

#[derive(Debug, Clone)]
pub enum SettingsChoice {
    Given(SettingsAssignment),
    Optimize(OptimizerConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub classical: ClassicalReport,
    pub classical_bound: f64,
    pub quantum_value: f64,
    pub ratio: f64,
    pub optimal_state: StateJson,
    pub purity: PurityReport,
    pub settings: SettingsJson,
    pub method: Method,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Classical extrema, quantum value, ratio and purities of the optimal state.
pub fn bound_report(p: &BellPolynomial, choice: SettingsChoice) -> Result<BoundReport> {
    let classical = classical_report(p)?;
    let (settings, value, state, method, converged, seed) = match choice {
        SettingsChoice::Given(s) => {
            let (v, st) = quantum_value(p, &s)?;
            (s, v, st, Method::Eigen, true, None)
        }
        SettingsChoice::Optimize(cfg) => {
            let d = cfg.start.as_ref().map_or(p.d, SettingsAssignment::dim);
            let o = optimize_settings(p, d, &cfg)?;
            (o.settings, o.value, o.state, Method::Optimized, o.converged, Some(o.seed))
        }
    };
    let classical_bound = classical.value(p.objective);
    Ok(BoundReport {
        id: p.id.clone(),
        classical_bound,
        quantum_value: value,
        ratio: value / classical_bound,
        optimal_state: StateJson::from(&state),
        purity: reduction_purities(&state),
        settings: SettingsJson::from(&settings),
        classical,
        method,
        converged,
        seed,
    })
}
