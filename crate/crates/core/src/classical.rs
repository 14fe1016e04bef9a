//! Classical bounds by exhaustive enumeration of deterministic strategies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::linalg::{c, C64, ONE, ZERO};
use crate::numeric::ENUMERATION_GUARD;
use crate::poly::{BellPolynomial, Factor, Objective};

/// Outcome index per party (rows) and setting (columns).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub outcomes: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn new(outcomes: Vec<Vec<usize>>, d: usize) -> Result<Self> {
        let s = outcomes.first().map_or(0, Vec::len);
        if outcomes.is_empty() || s == 0 || outcomes.iter().any(|r| r.len() != s) {
            return Err(argument("strategy needs a non-empty n×s outcome matrix"));
        }
        if outcomes.iter().flatten().any(|&o| o >= d) {
            return Err(argument(format!("strategy outcome outside 0..{d}")));
        }
        Ok(Self { outcomes })
    }

    /// Strategy at position `index` of the party-major, setting-major counter.
    pub fn from_index(mut index: u128, n: usize, s: usize, d: usize) -> Self {
        let mut outcomes = vec![vec![0; s]; n];
        for k in (0..n).rev() {
            for j in (0..s).rev() {
                outcomes[k][j] = (index % d as u128) as usize;
                index /= d as u128;
            }
        }
        Self { outcomes }
    }

    pub fn index(&self, d: usize) -> u128 {
        self.outcomes
            .iter()
            .flatten()
            .fold(0u128, |acc, &o| acc * d as u128 + o as u128)
    }
}

fn factor_value(p: &BellPolynomial, f: Factor, outcomes: &[usize]) -> C64 {
    if f.power == 0 {
        ONE
    } else {
        p.alphabet.value(p.d, outcomes[f.setting]).powu(f.power)
    }
}

/// `scale · Σ c Π v(outcome)^power + offset`.
pub fn strategy_value(p: &BellPolynomial, strat: &DeterministicStrategy) -> Result<C64> {
    let o = &strat.outcomes;
    if o.len() != p.n || o.iter().any(|r| r.len() != p.s) {
        return Err(Error::Dimension(format!(
            "strategy is {}×{}, polynomial needs {}×{}",
            o.len(),
            o.first().map_or(0, Vec::len),
            p.n,
            p.s
        )));
    }
    if o.iter().flatten().any(|&m| m >= p.d) {
        return Err(argument(format!("strategy outcome outside 0..{}", p.d)));
    }
    let raw: C64 = p
        .terms
        .iter()
        .map(|t| {
            t.factors
                .iter()
                .zip(o)
                .fold(t.coeff, |acc, (&f, row)| acc * factor_value(p, f, row))
        })
        .sum();
    Ok(raw * p.scale + p.offset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationConfig {
    /// Largest strategy count enumerated.
    pub guard: u128,
    /// Contiguous ranges reduced independently; `None` picks one from the thread pool.
    pub chunks: Option<usize>,
}

impl Default for EnumerationConfig {
    fn default() -> Self {
        Self {
            guard: ENUMERATION_GUARD,
            chunks: None,
        }
    }
}

/// Dense contraction plan: per-party factor lists, outcome tables and the coefficient tensor.
struct Plan {
    n: usize,
    /// `d^s` local strategies per party.
    local: usize,
    /// Leading parties fixed per unit of work.
    split: usize,
    dims: Vec<usize>,
    /// `tables[k][σ][f]`: value of factor `f` of party `k` under local strategy `σ`.
    tables: Vec<Vec<Vec<C64>>>,
    coeff: Vec<C64>,
    scale: f64,
    offset: f64,
}

impl Plan {
    fn new(p: &BellPolynomial) -> Self {
        let mut factors = p.party_factors();
        for fs in factors.iter_mut().filter(|fs| fs.is_empty()) {
            fs.push(Factor::IDENTITY);
        }
        let dims: Vec<usize> = factors.iter().map(Vec::len).collect();
        let local = p.d.pow(p.s as u32);
        let tables = factors
            .iter()
            .map(|fs| {
                (0..local)
                    .map(|sigma| {
                        let outs = DeterministicStrategy::from_index(sigma as u128, 1, p.s, p.d);
                        fs.iter().map(|&f| factor_value(p, f, &outs.outcomes[0])).collect()
                    })
                    .collect()
            })
            .collect();
        let mut coeff = vec![ZERO; dims.iter().product()];
        for t in &p.terms {
            let idx = t.factors.iter().zip(&factors).zip(&dims).fold(0, |acc, ((f, fs), &dim)| {
                acc * dim + fs.binary_search(f).expect("factor listed")
            });
            coeff[idx] += t.coeff;
        }
        let mut split = 1;
        while split < p.n && local.pow(split as u32) < 256 {
            split += 1;
        }
        Self {
            n: p.n,
            local,
            split,
            dims,
            tables,
            coeff,
            scale: p.scale,
            offset: p.offset,
        }
    }

    fn contract(&self, level: usize, sigma: usize, t: &[C64], out: &mut Vec<C64>) {
        let rest = t.len() / self.dims[level];
        out.clear();
        out.resize(rest, ZERO);
        for (fi, &v) in self.tables[level][sigma].iter().enumerate() {
            if v == ZERO {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(&t[fi * rest..(fi + 1) * rest]) {
                *o += v * x;
            }
        }
    }

    fn units(&self) -> usize {
        self.local.pow(self.split as u32)
    }

    fn run_units(&self, range: std::ops::Range<usize>) -> Acc {
        let mut acc = Acc::new();
        let mut bufs: Vec<Vec<C64>> = vec![Vec::new(); self.n + 1];
        bufs[0] = self.coeff.clone();
        let tail = (self.local as u128).pow((self.n - self.split) as u32);
        for unit in range {
            let mut rem = unit;
            let mut sigmas = vec![0; self.split];
            for k in (0..self.split).rev() {
                sigmas[k] = rem % self.local;
                rem /= self.local;
            }
            for (k, &sigma) in sigmas.iter().enumerate() {
                let (head, rest) = bufs.split_at_mut(k + 1);
                self.contract(k, sigma, &head[k], &mut rest[0]);
            }
            self.descend(self.split, unit as u128 * tail, &mut bufs, &mut acc);
        }
        acc
    }

    fn descend(&self, level: usize, base: u128, bufs: &mut [Vec<C64>], acc: &mut Acc) {
        if level == self.n {
            let z = bufs[level][0];
            acc.offer(c(z.re * self.scale + self.offset, z.im * self.scale), base);
            return;
        }
        let stride = (self.local as u128).pow((self.n - level - 1) as u32);
        for sigma in 0..self.local {
            let (head, rest) = bufs.split_at_mut(level + 1);
            self.contract(level, sigma, &head[level], &mut rest[0]);
            self.descend(level + 1, base + sigma as u128 * stride, bufs, acc);
        }
    }
}

/// Running extrema `[Hmax, Hmin, Amax, Amin]` with the first index attaining each.
#[derive(Debug, Clone, Copy)]
struct Acc {
    best: [(f64, u128); 4],
}

impl Acc {
    fn new() -> Self {
        Self {
            best: [
                (f64::NEG_INFINITY, u128::MAX),
                (f64::INFINITY, u128::MAX),
                (f64::NEG_INFINITY, u128::MAX),
                (f64::INFINITY, u128::MAX),
            ],
        }
    }

    fn offer(&mut self, z: C64, index: u128) {
        if z.re > self.best[0].0 {
            self.best[0] = (z.re, index);
        }
        if z.re < self.best[1].0 {
            self.best[1] = (z.re, index);
        }
        if z.im > self.best[2].0 {
            self.best[2] = (z.im, index);
        }
        if z.im < self.best[3].0 {
            self.best[3] = (z.im, index);
        }
    }

    /// Merges a later range; earlier ranges win ties.
    fn merge(mut self, later: Acc) -> Acc {
        for (i, maximize) in [(0, true), (1, false), (2, true), (3, false)] {
            let (v, idx) = later.best[i];
            let better = if maximize { v > self.best[i].0 } else { v < self.best[i].0 };
            if better {
                self.best[i] = (v, idx);
            }
        }
        self
    }
}

fn slot(objective: Objective) -> usize {
    match objective {
        Objective::Hmax => 0,
        Objective::Hmin => 1,
        Objective::Amax => 2,
        Objective::Amin => 3,
    }
}

/// Number of deterministic strategies, `d^(n·s)`.
pub fn strategy_count(p: &BellPolynomial) -> Option<u128> {
    (p.d as u128).checked_pow((p.n * p.s) as u32)
}

fn enumerate_all(p: &BellPolynomial, cfg: &EnumerationConfig) -> Result<(Acc, u128)> {
    p.validate()?;
    let count = strategy_count(p).unwrap_or(u128::MAX);
    if count > cfg.guard {
        return Err(Error::Capacity {
            what: "deterministic strategies",
            requested: count,
            limit: cfg.guard,
        });
    }
    let plan = Plan::new(p);
    let units = plan.units();
    let chunks = cfg
        .chunks
        .unwrap_or_else(|| 4 * rayon::current_num_threads())
        .clamp(1, units);
    let ranges: Vec<std::ops::Range<usize>> = (0..chunks)
        .map(|i| (i * units / chunks)..((i + 1) * units / chunks))
        .collect();
    let accs: Vec<Acc> = ranges.into_par_iter().map(|r| plan.run_units(r)).collect();
    let acc = accs.into_iter().fold(Acc::new(), Acc::merge);
    Ok((acc, count))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub witness: DeterministicStrategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternFlags {
    /// Extremum used as the violation-ratio denominator.
    pub bold: Objective,
    /// The opposite extremum of the bold part equals −2 times the bold one.
    pub min_is_minus_twice_max: bool,
    /// Larger over smaller of `|Hmax|` and `|Amax|`.
    pub max_ratio: Option<f64>,
    pub sqrt3_factor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub id: String,
    pub hmax: Extremum,
    pub hmin: Extremum,
    pub amax: Extremum,
    pub amin: Extremum,
    pub strategies: u64,
    pub pattern: PatternFlags,
}

impl ClassicalReport {
    pub fn extremum(&self, objective: Objective) -> &Extremum {
        match objective {
            Objective::Hmax => &self.hmax,
            Objective::Hmin => &self.hmin,
            Objective::Amax => &self.amax,
            Objective::Amin => &self.amin,
        }
    }

    pub fn value(&self, objective: Objective) -> f64 {
        self.extremum(objective).value
    }
}

/// Exact extremum over all deterministic strategies with its first witness.
pub fn enumerate_bound(p: &BellPolynomial, objective: Objective) -> Result<(f64, DeterministicStrategy)> {
    enumerate_bound_with(p, objective, &EnumerationConfig::default())
}

pub fn enumerate_bound_with(
    p: &BellPolynomial,
    objective: Objective,
    cfg: &EnumerationConfig,
) -> Result<(f64, DeterministicStrategy)> {
    let (acc, _) = enumerate_all(p, cfg)?;
    let (v, idx) = acc.best[slot(objective)];
    Ok((v, DeterministicStrategy::from_index(idx, p.n, p.s, p.d)))
}

pub fn classical_report(p: &BellPolynomial) -> Result<ClassicalReport> {
    classical_report_with(p, &EnumerationConfig::default())
}

pub fn classical_report_with(p: &BellPolynomial, cfg: &EnumerationConfig) -> Result<ClassicalReport> {
    let (acc, count) = enumerate_all(p, cfg)?;
    let ext = |o: Objective| {
        let (value, idx) = acc.best[slot(o)];
        Extremum {
            value,
            witness: DeterministicStrategy::from_index(idx, p.n, p.s, p.d),
        }
    };
    let (hmax, hmin, amax, amin) = (
        ext(Objective::Hmax),
        ext(Objective::Hmin),
        ext(Objective::Amax),
        ext(Objective::Amin),
    );
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let bold = p.objective;
    let (top, bottom) = if bold.imaginary() {
        (amax.value, amin.value)
    } else {
        (hmax.value, hmin.value)
    };
    let min_is_minus_twice_max = if bold.maximizes() {
        close(bottom, -2.0 * top)
    } else {
        close(top, -2.0 * bottom)
    };
    let (h, a) = (hmax.value.abs(), amax.value.abs());
    let max_ratio = (h.min(a) > 1e-12).then(|| h.max(a) / h.min(a));
    let sqrt3_factor = max_ratio.is_some_and(|r| close(r, 3f64.sqrt()));
    Ok(ClassicalReport {
        id: p.id.clone(),
        hmax,
        hmin,
        amax,
        amin,
        strategies: count as u64,
        pattern: PatternFlags {
            bold,
            min_is_minus_twice_max,
            max_ratio,
            sqrt3_factor,
        },
    })
}
