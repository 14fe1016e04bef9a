//! Derivative-free Hooke–Jeeves pattern search.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSearch {
    pub initial_step: f64,
    pub min_step: f64,
    pub shrink: f64,
    /// Objective evaluations allowed, including the starting point.
    pub max_evals: usize,
}

impl Default for PatternSearch {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            min_step: 1e-7,
            shrink: 0.5,
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// The step shrank below `min_step` before the budget ran out.
    pub converged: bool,
}

struct Counter<F> {
    f: F,
    evals: usize,
    limit: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.limit {
            return None;
        }
        self.evals += 1;
        let v = (self.f)(x);
        Some(if v.is_nan() { f64::NEG_INFINITY } else { v })
    }
}

/// Exploratory coordinate moves around `base`; returns the improved point, if any.
fn explore<F: FnMut(&[f64]) -> f64>(
    counter: &mut Counter<F>,
    base: &[f64],
    base_value: f64,
    step: f64,
) -> (Vec<f64>, f64, bool) {
    let mut x = base.to_vec();
    let mut value = base_value;
    for i in 0..x.len() {
        let orig = x[i];
        let mut moved = false;
        for delta in [step, -step] {
            x[i] = orig + delta;
            match counter.eval(&x) {
                Some(v) if v > value => {
                    value = v;
                    moved = true;
                    break;
                }
                Some(_) => {}
                None => {
                    x[i] = orig;
                    return (x, value, true);
                }
            }
        }
        if !moved {
            x[i] = orig;
        }
    }
    (x, value, false)
}

/// Maximizes `f` starting from `x0`.
pub fn maximize<F: FnMut(&[f64]) -> f64>(f: F, x0: Vec<f64>, cfg: &PatternSearch) -> SearchResult {
    let mut counter = Counter {
        f,
        evals: 0,
        limit: cfg.max_evals.max(1),
    };
    let mut base = x0;
    let mut base_value = counter.eval(&base).unwrap_or(f64::NEG_INFINITY);
    let mut step = cfg.initial_step;
    while step >= cfg.min_step {
        let (x, v, out) = explore(&mut counter, &base, base_value, step);
        if out {
            if v > base_value {
                base = x;
                base_value = v;
            }
            return SearchResult {
                x: base,
                value: base_value,
                evals: counter.evals,
                converged: false,
            };
        }
        if v > base_value {
            // Pattern moves along the successful direction while they keep improving.
            let mut prev = base;
            let mut cur = x;
            let mut cur_value = v;
            loop {
                let probe: Vec<f64> = cur
                    .iter()
                    .zip(&prev)
                    .map(|(c, p)| 2.0 * c - p)
                    .collect();
                let Some(pv) = counter.eval(&probe) else { break };
                let (x2, v2, out2) = explore(&mut counter, &probe, pv, step);
                if v2 > cur_value {
                    prev = cur;
                    cur = x2;
                    cur_value = v2;
                } else {
                    break;
                }
                if out2 {
                    break;
                }
            }
            base = cur;
            base_value = cur_value;
        } else {
            step *= cfg.shrink;
        }
    }
    SearchResult {
        x: base,
        value: base_value,
        evals: counter.evals,
        converged: true,
    }
}

/// Minimizes `f` starting from `x0`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: Vec<f64>,
    cfg: &PatternSearch,
) -> SearchResult {
    let mut r = maximize(|x| -f(x), x0, cfg);
    r.value = -r.value;
    r
}
