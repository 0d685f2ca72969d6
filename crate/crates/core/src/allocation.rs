//! Integer defense-budget allocation.
//!
//! Attack durations double as defense strength: spending budget `B` on the
//! durations `τ` (with `Σ τ_i = B`) and then patrolling with the matching
//! equalizing strategy yields capture probability `1 − w(τ)`. The rules
//! here pick `τ` minimizing `w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rootfind::solve_power_sum;

/// Winning candidates within this gap of each other are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// Complete graphs: non-increasing. Bipartite: `τ^p` then `τ^q`, each non-increasing.
    pub tau: Vec<u32>,
    #[serde(rename = "B")]
    pub budget: u64,
    pub w: f64,
    pub mu: f64,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub split: Option<BipartiteSplit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteSplit {
    #[serde(rename = "B_p")]
    pub b_p: u64,
    #[serde(rename = "B_q")]
    pub b_q: u64,
    pub tau_p: Vec<u32>,
    pub tau_q: Vec<u32>,
    pub w_p: f64,
    pub w_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideAllocation {
    pub tau: Vec<u32>,
    pub w: f64,
}

/// Game value of complete-graph durations: `Σ_i w^{1/τ_i} = n − 1`.
pub fn complete_value(tau: &[u32]) -> Result<f64> {
    solve_power_sum(tau, tau.len() as f64 - 1.0)
}

/// Game value of one bipartite side: `Σ_i w^{1/⌊τ_i/2⌋} = n_side − 1`, all `τ_i >= 2`.
pub fn side_value(tau: &[u32]) -> Result<f64> {
    if let Some(node) = tau.iter().position(|&t| t < 2) {
        return Err(Error::InfeasibleTau {
            node,
            tau: tau[node],
            min: 2,
        });
    }
    let halves: Vec<u32> = tau.iter().map(|&t| t / 2).collect();
    solve_power_sum(&halves, tau.len() as f64 - 1.0)
}

/// `B mod n` nodes get `⌈B/n⌉`, the rest `⌊B/n⌋`.
pub fn allocate_complete(n: usize, budget: u64) -> Result<AllocationResult> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "allocation needs n >= 2, got {n}"
        )));
    }
    let nn = n as u64;
    if budget <= nn || budget >= nn * nn {
        return Err(Error::BudgetOutOfRange {
            budget,
            lo: nn,
            hi: nn * nn,
        });
    }
    let tau = balanced_split(n, budget);
    let w = complete_value(&tau)?;
    Ok(AllocationResult {
        tau,
        budget,
        w,
        mu: 1.0 - w,
        split: None,
    })
}

fn balanced_split(n: usize, budget: u64) -> Vec<u32> {
    let nn = n as u64;
    let (low, r) = (budget / nn, (budget % nn) as usize);
    let mut tau = vec![(low + 1) as u32; r];
    tau.resize(n, low as u32);
    tau
}

/// Even durations for one bipartite side: `s` nodes at the high level and
/// the rest at the low level, both even and at most two apart.
///
/// Accepts `2·n_side <= B_side < 2·n_side²`; the lower end is the all-twos
/// allocation.
pub fn allocate_bipartite_side(n_side: usize, budget: u64) -> Result<SideAllocation> {
    if n_side == 0 {
        return Err(Error::InvalidSpec(
            "side must have at least one node".into(),
        ));
    }
    if budget % 2 == 1 {
        return Err(Error::Parity(budget));
    }
    let nn = n_side as u64;
    if budget < 2 * nn || (budget >= 2 * nn * nn && budget != 2 * nn) {
        return Err(Error::BudgetOutOfRange {
            budget,
            lo: 2 * nn,
            hi: 2 * nn * nn,
        });
    }
    side_allocation(n_side, budget)
}

// Even-level rule without the upper range check. Algorithm brackets may
// hand one side more than 2·n_side², where the rule still applies.
fn side_allocation(n_side: usize, budget: u64) -> Result<SideAllocation> {
    let tau = even_split(n_side, budget);
    let w = side_value(&tau)?;
    Ok(SideAllocation { tau, w })
}

fn even_split(n_side: usize, budget: u64) -> Vec<u32> {
    let nn = n_side as u64;
    let ceil = budget.div_ceil(nn);
    let floor = budget / nn;
    let high = if ceil % 2 == 1 { ceil + 1 } else { ceil };
    let low = if floor % 2 == 1 { floor - 1 } else { floor };
    let s = if high == low {
        n_side
    } else {
        // s·high + (n − s)·low = B
        ((budget - nn * low) / (high - low)) as usize
    };
    let mut tau = vec![high as u32; s];
    tau.resize(n_side, low as u32);
    tau
}

/// One evaluation of the modified bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionProbe {
    pub b_p: u64,
    pub w_p: f64,
    pub w_q: f64,
}

/// Splits an even budget between the sides of a complete bipartite graph.
pub fn co_optimize_bipartite(n_p: usize, n_q: usize, budget: u64) -> Result<AllocationResult> {
    modified_bisection(n_p, n_q, budget).map(|(result, _)| result)
}

/// Bisection over the even sub-budget `B_p`, shrinking toward the crossing of
/// the decreasing `w_p(B_p)` and increasing `w_q(B_p)`. Returns the result
/// and every probe, including the two final candidates.
pub fn modified_bisection(
    n_p: usize,
    n_q: usize,
    budget: u64,
) -> Result<(AllocationResult, Vec<BisectionProbe>)> {
    if n_p == 0 || n_q == 0 {
        return Err(Error::InvalidSpec(
            "both sides need at least one node".into(),
        ));
    }
    if budget % 2 == 1 {
        return Err(Error::Parity(budget));
    }
    let (np, nq) = (n_p as u64, n_q as u64);
    let (lo, hi) = (2 * (np + nq), 2 * (np * np + nq * nq));
    if budget <= lo || budget >= hi {
        return Err(Error::BudgetOutOfRange { budget, lo, hi });
    }

    let evaluate = |b_p: u64| -> Result<(SideAllocation, SideAllocation)> {
        Ok((
            side_allocation(n_p, b_p)?,
            side_allocation(n_q, budget - b_p)?,
        ))
    };
    let mut probes = Vec::new();
    let (mut lb, mut ub) = (2 * np, budget - 2 * nq);
    while ub - lb > 2 {
        let mut b_p = (lb + ub) / 2;
        if b_p % 2 == 1 {
            b_p += 1;
        }
        let (side_p, side_q) = evaluate(b_p)?;
        probes.push(BisectionProbe {
            b_p,
            w_p: side_p.w,
            w_q: side_q.w,
        });
        if side_p.w < side_q.w {
            ub = b_p;
        } else {
            lb = b_p;
        }
    }

    let mut best: Option<(u64, SideAllocation, SideAllocation)> = None;
    for b_p in [lb, ub] {
        if best.as_ref().is_some_and(|(b, _, _)| *b == b_p) {
            continue;
        }
        let (side_p, side_q) = evaluate(b_p)?;
        probes.push(BisectionProbe {
            b_p,
            w_p: side_p.w,
            w_q: side_q.w,
        });
        let value = side_p.w.max(side_q.w);
        // strict improvement needed: ties keep the smaller B_p
        let better = match &best {
            None => true,
            Some((_, p, q)) => value < p.w.max(q.w) - TIE_TOL,
        };
        if better {
            best = Some((b_p, side_p, side_q));
        }
    }
    let (b_p, side_p, side_q) = best.expect("at least one candidate");
    let w = side_p.w.max(side_q.w);
    let result = AllocationResult {
        tau: side_p.tau.iter().chain(&side_q.tau).copied().collect(),
        budget,
        w,
        mu: 1.0 - w,
        split: Some(BipartiteSplit {
            b_p,
            b_q: budget - b_p,
            tau_p: side_p.tau,
            tau_q: side_q.tau,
            w_p: side_p.w,
            w_q: side_q.w,
        }),
    };
    Ok((result, probes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceState {
    pub tau: Vec<u32>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancingTrace {
    pub states: Vec<BalanceState>,
}

impl BalancingTrace {
    pub fn last(&self) -> &BalanceState {
        self.states.last().expect("trace is never empty")
    }
}

/// Repeatedly moves `step` units from the first maximal to the first
/// minimal entry until `max − min <= step`.
///
/// `step = 1` balances complete-graph durations (entries >= 1), `step = 2`
/// balances one bipartite side (even entries >= 2).
pub fn pairwise_balance(tau: &[u32], step: u32) -> Result<BalancingTrace> {
    let value: fn(&[u32]) -> Result<f64> = match step {
        1 => complete_value,
        2 => side_value,
        _ => {
            return Err(Error::InvalidStart(format!(
                "step must be 1 or 2, got {step}"
            )))
        }
    };
    if tau.is_empty() {
        return Err(Error::InvalidStart("empty allocation".into()));
    }
    if tau.iter().any(|&t| t < step || t % step != 0) {
        return Err(Error::InvalidStart(format!(
            "entries must be multiples of {step} and at least {step}"
        )));
    }
    let mut current = tau.to_vec();
    let mut states = vec![BalanceState {
        tau: current.clone(),
        w: value(&current)?,
    }];
    loop {
        let (hi, &max) = first_extreme(&current, |a, b| a > b);
        let (lo, &min) = first_extreme(&current, |a, b| a < b);
        if max - min <= step {
            break;
        }
        current[hi] -= step;
        current[lo] += step;
        states.push(BalanceState {
            w: value(&current)?,
            tau: current.clone(),
        });
    }
    Ok(BalancingTrace { states })
}

fn first_extreme(v: &[u32], better: impl Fn(u32, u32) -> bool) -> (usize, &u32) {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if better(x, v[best]) {
            best = i;
        }
    }
    (best, &v[best])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_rule() {
        assert_eq!(allocate_complete(3, 7).unwrap().tau, vec![3, 2, 2]);
        assert_eq!(allocate_complete(4, 10).unwrap().tau, vec![3, 3, 2, 2]);
        let uniform = allocate_complete(3, 6).unwrap();
        assert_eq!(uniform.tau, vec![2, 2, 2]);
        assert!((uniform.w - 4.0 / 9.0).abs() < 1e-11);
    }

    #[test]
    fn complete_range() {
        assert!(matches!(
            allocate_complete(3, 3),
            Err(Error::BudgetOutOfRange { .. })
        ));
        assert!(matches!(
            allocate_complete(3, 9),
            Err(Error::BudgetOutOfRange { .. })
        ));
        assert!(allocate_complete(1, 5).is_err());
    }

    #[test]
    fn side_rule() {
        assert_eq!(allocate_bipartite_side(3, 14).unwrap().tau, vec![6, 4, 4]);
        assert_eq!(allocate_bipartite_side(2, 6).unwrap().tau, vec![4, 2]);
        assert_eq!(allocate_bipartite_side(3, 10).unwrap().tau, vec![4, 4, 2]);
        assert_eq!(allocate_bipartite_side(3, 6).unwrap().tau, vec![2, 2, 2]);
        // B/n odd with n even: one level above and one below
        assert_eq!(
            allocate_bipartite_side(4, 12).unwrap().tau,
            vec![4, 4, 2, 2]
        );
    }

    #[test]
    fn side_errors() {
        assert_eq!(allocate_bipartite_side(3, 11), Err(Error::Parity(11)));
        assert!(matches!(
            allocate_bipartite_side(3, 4),
            Err(Error::BudgetOutOfRange { .. })
        ));
        assert!(matches!(
            allocate_bipartite_side(3, 18),
            Err(Error::BudgetOutOfRange { .. })
        ));
    }

    #[test]
    fn even_split_beyond_admissible_range() {
        assert_eq!(even_split(2, 30), vec![16, 14]);
        assert_eq!(even_split(2, 12), vec![6, 6]);
    }

    #[test]
    fn numerical_example_split() {
        let r = co_optimize_bipartite(3, 2, 20).unwrap();
        let split = r.split.as_ref().unwrap();
        assert_eq!((split.b_p, split.b_q), (14, 6));
        assert_eq!(split.tau_p, vec![6, 4, 4]);
        assert_eq!(split.tau_q, vec![4, 2]);
        assert_eq!(r.tau, vec![6, 4, 4, 4, 2]);
        assert!((r.mu - 0.600_781_928_545_366_6).abs() < 1e-10);
    }

    #[test]
    fn symmetric_split() {
        let r = co_optimize_bipartite(2, 2, 12).unwrap();
        let split = r.split.unwrap();
        assert_eq!((split.b_p, split.b_q), (6, 6));
        assert_eq!(split.tau_p, vec![4, 2]);
        assert_eq!(split.tau_q, vec![4, 2]);
        assert!((r.mu - 0.618_033_988_749_895).abs() < 1e-10);
    }

    #[test]
    fn co_optimize_errors() {
        assert_eq!(co_optimize_bipartite(2, 2, 11), Err(Error::Parity(11)));
        assert!(matches!(
            co_optimize_bipartite(2, 2, 8),
            Err(Error::BudgetOutOfRange { .. })
        ));
        assert!(matches!(
            co_optimize_bipartite(2, 2, 16),
            Err(Error::BudgetOutOfRange { .. })
        ));
    }

    #[test]
    fn probes_track_the_bracket() {
        let (_, probes) = modified_bisection(3, 2, 20).unwrap();
        let scanned: Vec<u64> = probes.iter().map(|p| p.b_p).collect();
        assert_eq!(scanned, vec![12, 14, 14, 16]);
    }

    #[test]
    fn balance_complete() {
        let trace = pairwise_balance(&[5, 1, 1], 1).unwrap();
        let taus: Vec<_> = trace.states.iter().map(|s| s.tau.clone()).collect();
        assert_eq!(taus, vec![vec![5, 1, 1], vec![4, 2, 1], vec![3, 2, 2]]);
        assert!(trace.states.windows(2).all(|w| w[1].w < w[0].w));

        let trace = pairwise_balance(&[3, 2, 2], 1).unwrap();
        assert_eq!(trace.states.len(), 1);
    }

    #[test]
    fn balance_side() {
        let trace = pairwise_balance(&[8, 2, 2], 2).unwrap();
        let taus: Vec<_> = trace.states.iter().map(|s| s.tau.clone()).collect();
        assert_eq!(taus, vec![vec![8, 2, 2], vec![6, 4, 2], vec![4, 4, 4]]);
        assert!(trace.states.windows(2).all(|w| w[1].w < w[0].w));
    }

    #[test]
    fn balance_invalid_start() {
        assert!(matches!(
            pairwise_balance(&[3, 2, 2], 2),
            Err(Error::InvalidStart(_))
        ));
        assert!(matches!(
            pairwise_balance(&[3, 0, 2], 1),
            Err(Error::InvalidStart(_))
        ));
        assert!(matches!(
            pairwise_balance(&[3, 3], 3),
            Err(Error::InvalidStart(_))
        ));
    }

    #[test]
    fn allocation_json_shape() {
        let r = co_optimize_bipartite(3, 2, 20).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["B"], 20);
        assert_eq!(v["B_p"], 14);
        assert_eq!(v["B_q"], 6);
        let c = serde_json::to_value(allocate_complete(3, 7).unwrap()).unwrap();
        assert!(c.get("B_p").is_none());
    }
}
