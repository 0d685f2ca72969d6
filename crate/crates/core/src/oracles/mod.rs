//! Ground truth independent of the closed forms: exhaustive enumeration of
//! integer allocations, random-restart local search over patrol strategies,
//! and sweeping suites built on both.

mod suites;

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{
    allocate_bipartite_side, allocate_complete, co_optimize_bipartite, complete_value, side_value,
};
use crate::error::{Error, Result};
use crate::graph::{AttackDurations, GraphFamily, GraphTopology};
use crate::markov::{capture_value, TransitionMatrix};
use crate::strategy::{synthesize_bipartite, synthesize_complete, synthesize_star};

pub use suites::{
    allocation_suite, bound_suite, closed_form_suite, montecarlo_suite, random_strategy,
    star_optimality_suite, BoundSuiteRanges, SuiteEntry, SuiteReport,
};

pub const SEARCH_SPACE_LIMIT: u128 = 10_000_000;
pub const ALLOCATION_TOL: f64 = 1e-10;
pub const LOCAL_SEARCH_TOL: f64 = 0.02;
pub const MAX_LOCAL_SEARCH_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candidate {
    /// Durations in node order (bipartite: `τ^p` then `τ^q`), each side non-increasing.
    Allocation {
        tau: Vec<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b_p: Option<u64>,
    },
    Strategy(TransitionMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Best capture probability found.
    pub best_value: f64,
    pub best_candidate: Candidate,
    pub candidates_examined: u64,
    /// Capture probability of the closed-form answer, when one exists.
    pub closed_form_value: Option<f64>,
    pub gap: f64,
    pub tolerance: f64,
    pub agreement: bool,
}

impl OracleReport {
    fn new(
        best_value: f64,
        best_candidate: Candidate,
        candidates_examined: u64,
        closed_form_value: Option<f64>,
        tolerance: f64,
    ) -> Self {
        let gap = closed_form_value.map_or(f64::NAN, |c| (c - best_value).abs());
        Self {
            best_value,
            best_candidate,
            candidates_examined,
            closed_form_value,
            gap,
            tolerance,
            agreement: gap <= tolerance,
        }
    }
}

/// Allocation problems the exhaustive oracle can enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum AllocationProblem {
    /// Durations >= 1 on a complete graph.
    Complete { n: usize },
    /// Even durations >= 2 on one bipartite side.
    BipartiteSide { n: usize },
    /// Even durations >= 2 on both sides, over every even split of the budget.
    Bipartite { n_p: usize, n_q: usize },
}

/// Enumerates every feasible integer allocation of `budget` and compares the
/// best capture probability with the closed-form rule.
pub fn exhaustive_allocation(problem: AllocationProblem, budget: u64) -> Result<OracleReport> {
    match problem {
        AllocationProblem::Complete { n } => {
            let closed = allocate_complete(n, budget)?;
            guard(compositions_count(budget, n, 1))?;
            let best = best_composition(n, budget, 1, complete_value)?;
            Ok(OracleReport::new(
                1.0 - best.w,
                Candidate::Allocation {
                    tau: best.tau,
                    b_p: None,
                },
                best.examined,
                Some(closed.mu),
                ALLOCATION_TOL,
            ))
        }
        AllocationProblem::BipartiteSide { n } => {
            let closed = allocate_bipartite_side(n, budget)?;
            guard(compositions_count(budget, n, 2))?;
            let best = best_composition(n, budget, 2, side_value)?;
            Ok(OracleReport::new(
                1.0 - best.w,
                Candidate::Allocation {
                    tau: best.tau,
                    b_p: None,
                },
                best.examined,
                Some(1.0 - closed.w),
                ALLOCATION_TOL,
            ))
        }
        AllocationProblem::Bipartite { n_p, n_q } => {
            let closed = co_optimize_bipartite(n_p, n_q, budget)?;
            let splits: Vec<u64> = (2 * n_p as u64..=budget - 2 * n_q as u64)
                .step_by(2)
                .collect();
            guard(bipartite_space(n_p, n_q, budget))?;

            let mut examined = 0;
            let mut best: Option<(f64, u64, Vec<u32>)> = None;
            for b_p in splits {
                let side_p = best_composition(n_p, b_p, 2, side_value)?;
                let side_q = best_composition(n_q, budget - b_p, 2, side_value)?;
                examined += side_p.examined + side_q.examined;
                let w = side_p.w.max(side_q.w);
                if best.as_ref().is_none_or(|(bw, _, _)| w < *bw) {
                    let tau = side_p.tau.into_iter().chain(side_q.tau).collect();
                    best = Some((w, b_p, tau));
                }
            }
            let (w, b_p, tau) =
                best.ok_or_else(|| Error::InvalidSpec("budget admits no feasible split".into()))?;
            Ok(OracleReport::new(
                1.0 - w,
                Candidate::Allocation {
                    tau,
                    b_p: Some(b_p),
                },
                examined,
                Some(closed.mu),
                ALLOCATION_TOL,
            ))
        }
    }
}

/// Candidates the exhaustive oracle visits for `problem` at `budget`.
pub fn search_space(problem: AllocationProblem, budget: u64) -> u128 {
    match problem {
        AllocationProblem::Complete { n } => compositions_count(budget, n, 1),
        AllocationProblem::BipartiteSide { n } => compositions_count(budget, n, 2),
        AllocationProblem::Bipartite { n_p, n_q } => bipartite_space(n_p, n_q, budget),
    }
}

fn bipartite_space(n_p: usize, n_q: usize, budget: u64) -> u128 {
    let (lo, hi) = (2 * n_p as u64, budget.saturating_sub(2 * n_q as u64));
    (lo..=hi)
        .step_by(2)
        .map(|b_p| {
            compositions_count(b_p, n_p, 2).saturating_add(compositions_count(budget - b_p, n_q, 2))
        })
        .fold(0u128, u128::saturating_add)
}

pub(crate) fn guard(size: u128) -> Result<()> {
    if size > SEARCH_SPACE_LIMIT {
        Err(Error::SearchSpaceExceeded {
            size,
            limit: SEARCH_SPACE_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Number of compositions of `budget` into `parts` multiples of `unit`, each >= `unit`.
fn compositions_count(budget: u64, parts: usize, unit: u64) -> u128 {
    if parts == 0 || !budget.is_multiple_of(unit) || budget / unit < parts as u64 {
        return 0;
    }
    binomial(budget / unit - 1, parts as u64 - 1)
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(u128::from(n - i)) / u128::from(i + 1);
    }
    acc
}

struct BestComposition {
    tau: Vec<u32>,
    w: f64,
    examined: u64,
}

/// Minimum game value over all compositions of `budget` into `n` positive
/// multiples of `unit`, memoized on the sorted multiset. Ties keep the
/// lexicographically first composition visited.
fn best_composition(
    n: usize,
    budget: u64,
    unit: u32,
    value: fn(&[u32]) -> Result<f64>,
) -> Result<BestComposition> {
    let mut memo: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut examined = 0u64;
    let mut current = Vec::with_capacity(n);
    let mut failure = None;
    visit_compositions(n, budget, unit, &mut current, &mut |tau| {
        examined += 1;
        let mut key = tau.to_vec();
        key.sort_unstable_by(|a, b| b.cmp(a));
        let w = match memo.get(&key) {
            Some(&w) => w,
            None => match value(&key) {
                Ok(w) => {
                    memo.insert(key.clone(), w);
                    w
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            },
        };
        if best.as_ref().is_none_or(|(bw, _)| w < *bw) {
            best = Some((w, key));
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let (w, tau) = best
        .ok_or_else(|| Error::InvalidSpec(format!("no composition of {budget} into {n} parts")))?;
    Ok(BestComposition { tau, w, examined })
}

fn visit_compositions(
    remaining_parts: usize,
    remaining: u64,
    unit: u32,
    current: &mut Vec<u32>,
    f: &mut dyn FnMut(&[u32]),
) {
    if remaining_parts == 0 {
        if remaining == 0 {
            f(current);
        }
        return;
    }
    let unit64 = u64::from(unit);
    let reserve = (remaining_parts as u64 - 1) * unit64;
    if remaining < reserve + unit64 {
        return;
    }
    let mut v = unit64;
    while v + reserve <= remaining {
        current.push(v as u32);
        visit_compositions(remaining_parts - 1, remaining - v, unit, current, f);
        current.pop();
        v += unit64;
    }
}

const DELTA_START: f64 = 0.2;
const DELTA_END: f64 = 1e-3;
const SWEEP_IMPROVEMENT: f64 = 1e-7;
const MAX_SWEEPS: usize = 5_000;

/// Random-restart hill climbing over row-stochastic matrices supported on `g`.
///
/// Each restart draws every row uniformly from the simplex on its support,
/// then sweeps single-coordinate moves `±δ` (clipped at zero and
/// renormalized), keeping any move that raises the capture probability.
/// `δ` halves from 0.2 down to 1e-3 whenever a sweep gains less than 1e-7.
/// Restart `r` uses ChaCha8 stream `r` under `seed`.
pub fn local_search_strategy(
    g: &GraphTopology,
    tau: &AttackDurations,
    restarts: usize,
    seed: u64,
) -> Result<OracleReport> {
    let n = g.n();
    if n > MAX_LOCAL_SEARCH_NODES {
        return Err(Error::SearchSpaceExceeded {
            size: n as u128,
            limit: MAX_LOCAL_SEARCH_NODES as u128,
        });
    }
    if tau.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tau.len(),
        });
    }
    if restarts == 0 {
        return Err(Error::InvalidSpec("restarts must be >= 1".into()));
    }
    let support: Vec<Vec<usize>> = (0..n).map(|i| g.successors(i).collect()).collect();
    let climb = |r: usize| climb_from_random_start(&support, tau.as_slice(), seed, r as u64);

    #[cfg(feature = "parallel")]
    let runs: Vec<(f64, DMatrix<f64>)> = {
        use rayon::prelude::*;
        (0..restarts).into_par_iter().map(climb).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<(f64, DMatrix<f64>)> = (0..restarts).map(climb).collect();

    // first restart wins ties so the answer does not depend on scheduling
    let (mu, p) = runs
        .into_iter()
        .reduce(|best, run| if run.0 > best.0 { run } else { best })
        .expect("restarts >= 1");
    Ok(OracleReport::new(
        mu,
        Candidate::Strategy(TransitionMatrix::from_matrix(p)?),
        restarts as u64,
        closed_form_capture(g, tau),
        LOCAL_SEARCH_TOL,
    ))
}

fn closed_form_capture(g: &GraphTopology, tau: &AttackDurations) -> Option<f64> {
    let result = match g.family() {
        GraphFamily::Complete => synthesize_complete(tau),
        GraphFamily::CompleteBipartite { n_p, .. } => {
            let (tau_p, tau_q) = tau.as_slice().split_at(n_p);
            synthesize_bipartite(g, tau_p, tau_q)
        }
        GraphFamily::Star => synthesize_star(tau),
        GraphFamily::General => return None,
    };
    result.ok().map(|s| s.mu)
}

fn climb_from_random_start(
    support: &[Vec<usize>],
    tau: &[u32],
    seed: u64,
    restart: u64,
) -> (f64, DMatrix<f64>) {
    let n = support.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (i, cols) in support.iter().enumerate() {
        let draws: Vec<f64> = cols
            .iter()
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = draws.iter().sum();
        for (&j, d) in cols.iter().zip(draws) {
            p[(i, j)] = d / total;
        }
    }

    let mut mu = capture_value(&p, tau);
    let mut delta = DELTA_START;
    let mut row = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        let start = mu;
        for (i, cols) in support.iter().enumerate() {
            if cols.len() < 2 {
                continue;
            }
            for &c in cols {
                for sign in [1.0, -1.0] {
                    for (j, x) in row.iter_mut().enumerate() {
                        *x = p[(i, j)];
                    }
                    row[c] = (row[c] + sign * delta).max(0.0);
                    let total: f64 = cols.iter().map(|&j| row[j]).sum();
                    if total <= 0.0 {
                        continue;
                    }
                    let saved: Vec<f64> = cols.iter().map(|&j| p[(i, j)]).collect();
                    for &j in cols {
                        p[(i, j)] = row[j] / total;
                    }
                    let candidate = capture_value(&p, tau);
                    if candidate > mu {
                        mu = candidate;
                    } else {
                        for (&j, &x) in cols.iter().zip(&saved) {
                            p[(i, j)] = x;
                        }
                    }
                }
            }
        }
        if mu - start <= SWEEP_IMPROVEMENT {
            if delta <= DELTA_END {
                break;
            }
            delta = (delta * 0.5).max(DELTA_END);
        }
    }
    (mu, p)
}
