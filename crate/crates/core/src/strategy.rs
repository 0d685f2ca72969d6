//! Equalizing patrol strategies for complete, complete bipartite and star
//! graphs, the uniform bipartite baseline, and capture-probability bounds.
//!
//! Each synthesizer reduces the max-min strategy problem to one equation
//! `Σ_i w^{1/m_i} = n − 1` in the game value `w ∈ (0, 1)`; the capture
//! probability is `1 − w` and every node's capture term `1 − (1 − x_i)^{m_i}`
//! equals it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttackDurations, GraphFamily, GraphTopology};
use crate::markov::{StationaryDistribution, TransitionMatrix};
use crate::rootfind::solve_power_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimality {
    /// Proven optimal over all strategies supported on the graph.
    Optimal,
    /// Best within a structured strategy class, with a suboptimality bound.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    #[serde(rename = "P")]
    pub p: TransitionMatrix,
    pub pi: StationaryDistribution,
    pub mu: f64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_q: Option<f64>,
    #[serde(rename = "subopt_lb")]
    pub suboptimality_lower_bound: f64,
    pub optimality: Optimality,
}

/// Upper bounds on the optimal capture probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// `min_i π_i τ_i`
    pub stationary_bound: f64,
    /// `min{1, τ_max / n}`
    pub generic_bound: f64,
    /// `μ / generic_bound`, once a capture probability is attached.
    pub ratio: Option<f64>,
}

impl BoundReport {
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.ratio = Some(mu / self.generic_bound);
        self
    }
}

pub fn capture_upper_bound(
    pi: &StationaryDistribution,
    tau: &AttackDurations,
) -> Result<BoundReport> {
    if pi.len() != tau.len() {
        return Err(Error::DimensionMismatch {
            expected: tau.len(),
            found: pi.len(),
        });
    }
    let stationary_bound = pi
        .as_slice()
        .iter()
        .zip(tau.as_slice())
        .map(|(&p, &t)| p * f64::from(t))
        .fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        stationary_bound,
        generic_bound: generic_bound(tau),
        ratio: None,
    })
}

/// `min{1, τ_max / n}`: no strategy can beat it, since `π_min ≤ 1/n`.
pub fn generic_bound(tau: &AttackDurations) -> f64 {
    (f64::from(tau.max()) / tau.len() as f64).min(1.0)
}

/// Game value `w` and equalizing distribution for per-node exponents `m_i`:
/// `Σ_i w^{1/m_i} = len − 1`, `x_i = 1 − w^{1/m_i}`.
fn equalize(exponents: &[u32]) -> Result<(f64, Vec<f64>)> {
    let w = solve_power_sum(exponents, exponents.len() as f64 - 1.0)?;
    let raw: Vec<f64> = exponents
        .iter()
        .map(|&m| 1.0 - w.powf(1.0 / f64::from(m)))
        .collect();
    let total: f64 = raw.iter().sum();
    Ok((w, raw.into_iter().map(|x| x / total).collect()))
}

fn halved(tau: &[u32]) -> Vec<u32> {
    tau.iter().map(|&t| t / 2).collect()
}

/// Optimal rank-one strategy `P = 𝟙 πᵀ` on the complete graph.
pub fn synthesize_complete(tau: &AttackDurations) -> Result<StrategyResult> {
    let n = tau.len();
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "complete-graph synthesis needs n >= 2, got {n}"
        )));
    }
    let (w, pi) = equalize(tau.as_slice())?;
    let mu = 1.0 - w;
    Ok(StrategyResult {
        p: TransitionMatrix::rank_one(&pi)?,
        pi: StationaryDistribution::new(pi)?,
        mu,
        w,
        w_p: None,
        w_q: None,
        suboptimality_lower_bound: clamp_ratio(mu / generic_bound(tau)),
        optimality: Optimality::Heuristic,
    })
}

/// Block strategy on the complete bipartite graph: from 𝒬 the agent jumps to
/// 𝒫 with probabilities `p`, from 𝒫 to 𝒬 with probabilities `q`, each side
/// equalized independently.
pub fn synthesize_bipartite(
    g: &GraphTopology,
    tau_p: &[u32],
    tau_q: &[u32],
) -> Result<StrategyResult> {
    let (n_p, n_q) = match g.family() {
        GraphFamily::CompleteBipartite { n_p, n_q } => (n_p, n_q),
        GraphFamily::Star => (1, g.n() - 1),
        other => {
            return Err(Error::InvalidSpec(format!(
                "bipartite synthesis needs a complete bipartite graph, got {other:?}"
            )))
        }
    };
    check_side_lengths(n_p, n_q, tau_p, tau_q)?;
    let full = full_tau(tau_p, tau_q)?;
    full.require_at_least(2)?;

    let (w_p, p) = equalize(&halved(tau_p))?;
    let (w_q, q) = equalize(&halved(tau_q))?;
    let w = w_p.max(w_q);
    let mu = 1.0 - w;
    let pi: Vec<f64> = p.iter().chain(&q).map(|x| 0.5 * x).collect();
    Ok(StrategyResult {
        p: bipartite_block_matrix(&p, &q)?,
        pi: StationaryDistribution::new(pi)?,
        mu,
        w,
        w_p: Some(w_p),
        w_q: Some(w_q),
        suboptimality_lower_bound: clamp_ratio(mu / generic_bound(&full)),
        optimality: Optimality::Heuristic,
    })
}

/// Optimal strategy on the star with center node `0`: the center jumps to
/// leaf `j` with probability `q_j`, every leaf returns to the center.
pub fn synthesize_star(tau: &AttackDurations) -> Result<StrategyResult> {
    let n = tau.len();
    if n < 2 {
        return Err(Error::InvalidSpec(format!("star needs n >= 2, got {n}")));
    }
    tau.require_at_least(2)?;
    // the center duration never binds: the agent is back within two steps
    let (w, q) = equalize(&halved(&tau.as_slice()[1..]))?;
    let mu = 1.0 - w;
    let pi: Vec<f64> = std::iter::once(0.5)
        .chain(q.iter().map(|x| 0.5 * x))
        .collect();
    Ok(StrategyResult {
        p: bipartite_block_matrix(&[1.0], &q)?,
        pi: StationaryDistribution::new(pi)?,
        mu,
        w,
        w_p: None,
        w_q: None,
        suboptimality_lower_bound: 1.0,
        optimality: Optimality::Optimal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub strategy: StrategyResult,
    /// `μ / (τ / n)`
    pub ratio: f64,
    /// Guaranteed floor on `ratio`: `1/3` for odd `τ`, `(1 − 1/e)/2` for even `τ`.
    pub constant: f64,
}

/// Uniform block strategy for a common attack duration `tau`.
pub fn uniform_bipartite_baseline(n_p: usize, n_q: usize, tau: u32) -> Result<BaselineResult> {
    if n_p < 2 || n_q < 2 {
        return Err(Error::InvalidSpec(format!(
            "baseline needs both sides of size >= 2, got ({n_p}, {n_q})"
        )));
    }
    let n = n_p + n_q;
    if tau < 2 || tau as usize > 2 * n - 4 {
        return Err(Error::TrivialGame(format!(
            "tau = {tau} outside [2, {}]",
            2 * n - 4
        )));
    }
    let m = (tau / 2) as i32;
    let miss = |side: usize| (1.0 - 1.0 / side as f64).powi(m);
    let (w_p, w_q) = (miss(n_p), miss(n_q));
    let w = w_p.max(w_q);
    let mu = 1.0 - w;
    let p = vec![1.0 / n_p as f64; n_p];
    let q = vec![1.0 / n_q as f64; n_q];
    let pi: Vec<f64> = p.iter().chain(&q).map(|x| 0.5 * x).collect();
    let ratio = mu / (f64::from(tau) / n as f64);
    Ok(BaselineResult {
        strategy: StrategyResult {
            p: bipartite_block_matrix(&p, &q)?,
            pi: StationaryDistribution::new(pi)?,
            mu,
            w,
            w_p: Some(w_p),
            w_q: Some(w_q),
            suboptimality_lower_bound: clamp_ratio(mu / (f64::from(tau) / n as f64).min(1.0)),
            optimality: Optimality::Heuristic,
        },
        ratio,
        constant: baseline_constant(tau),
    })
}

pub fn baseline_constant(tau: u32) -> f64 {
    if tau % 2 == 1 {
        1.0 / 3.0
    } else {
        0.5 * (1.0 - (-1.0f64).exp())
    }
}

/// `[[0, 𝟙 qᵀ], [𝟙 pᵀ, 0]]` with side 𝒫 first.
pub fn bipartite_block_matrix(p: &[f64], q: &[f64]) -> Result<TransitionMatrix> {
    let n_p = p.len();
    let n = n_p + q.len();
    TransitionMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| match (i < n_p, j < n_p) {
        (true, false) => q[j - n_p],
        (false, true) => p[j],
        _ => 0.0,
    }))
}

/// Closed-form capture probability of `𝟙 πᵀ`: `min_i 1 − (1 − π_i)^{τ_i}`.
pub fn rank_one_capture(pi: &[f64], tau: &[u32]) -> f64 {
    pi.iter()
        .zip(tau)
        .map(|(&x, &t)| 1.0 - (1.0 - x).powi(t as i32))
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form capture probability of a bipartite block strategy, durations >= 2:
/// `min` over both sides of `1 − (1 − x_i)^{⌊τ_i/2⌋}`.
pub fn bipartite_block_capture(p: &[f64], q: &[f64], tau_p: &[u32], tau_q: &[u32]) -> f64 {
    p.iter()
        .zip(tau_p)
        .chain(q.iter().zip(tau_q))
        .map(|(&x, &t)| 1.0 - (1.0 - x).powi((t / 2) as i32))
        .fold(f64::INFINITY, f64::min)
}

fn clamp_ratio(r: f64) -> f64 {
    r.clamp(0.0, 1.0)
}

fn check_side_lengths(n_p: usize, n_q: usize, tau_p: &[u32], tau_q: &[u32]) -> Result<()> {
    if tau_p.len() != n_p {
        return Err(Error::DimensionMismatch {
            expected: n_p,
            found: tau_p.len(),
        });
    }
    if tau_q.len() != n_q {
        return Err(Error::DimensionMismatch {
            expected: n_q,
            found: tau_q.len(),
        });
    }
    Ok(())
}

fn full_tau(tau_p: &[u32], tau_q: &[u32]) -> Result<AttackDurations> {
    AttackDurations::new(tau_p.iter().chain(tau_q).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::{capture_probability, stationary_distribution};

    const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 − √5)/2

    fn tau(v: &[u32]) -> AttackDurations {
        AttackDurations::new(v.to_vec()).unwrap()
    }

    #[test]
    fn complete_symmetric() {
        let s = synthesize_complete(&tau(&[2, 2, 2])).unwrap();
        assert!((s.w - 4.0 / 9.0).abs() < 1e-11);
        assert!((s.mu - 5.0 / 9.0).abs() < 1e-11);
        for &x in s.pi.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn complete_two_nodes() {
        let s = synthesize_complete(&tau(&[1, 2])).unwrap();
        assert!((s.w - GOLDEN).abs() < 1e-11);
        assert!((s.pi.as_slice()[0] - (1.0 - GOLDEN)).abs() < 1e-11);
        assert!((s.pi.as_slice()[1] - GOLDEN).abs() < 1e-11);
        // optimal on this instance: mu meets the stationary bound
        let b = capture_upper_bound(&s.pi, &tau(&[1, 2])).unwrap();
        assert!((b.stationary_bound - s.mu).abs() < 1e-10);
    }

    #[test]
    fn complete_needs_two_nodes() {
        assert!(matches!(
            synthesize_complete(&tau(&[3])),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn bipartite_numerical_instance() {
        let g = GraphTopology::complete_bipartite(3, 2).unwrap();
        let s = synthesize_bipartite(&g, &[6, 4, 4], &[4, 2]).unwrap();
        assert!((s.w_q.unwrap() - GOLDEN).abs() < 1e-11);
        assert!((s.w_p.unwrap() - 0.399_218_071_454_633_4).abs() < 1e-10);
        let exact = capture_probability(&s.p, &tau(&[6, 4, 4, 4, 2])).unwrap();
        assert!((exact.mu - s.mu).abs() < 1e-9);
        assert!(s.p.check_support(&g).is_ok());
    }

    #[test]
    fn bipartite_uniform_closed_forms() {
        let g = GraphTopology::complete_bipartite(3, 2).unwrap();
        let s = synthesize_bipartite(&g, &[4, 4, 4], &[4, 4]).unwrap();
        assert!((s.w_p.unwrap() - 4.0 / 9.0).abs() < 1e-11);
        assert!((s.w_q.unwrap() - 0.25).abs() < 1e-11);
        assert!((s.mu - 5.0 / 9.0).abs() < 1e-11);
    }

    #[test]
    fn bipartite_duration_two_allowed() {
        let g = GraphTopology::complete_bipartite(2, 2).unwrap();
        let s = synthesize_bipartite(&g, &[4, 2], &[4, 4]).unwrap();
        assert!((s.w_p.unwrap() - GOLDEN).abs() < 1e-11);
    }

    #[test]
    fn bipartite_rejects_short_durations() {
        let g = GraphTopology::complete_bipartite(2, 2).unwrap();
        assert!(matches!(
            synthesize_bipartite(&g, &[4, 1], &[4, 4]),
            Err(Error::InfeasibleTau { node: 1, .. })
        ));
        assert!(synthesize_bipartite(&g, &[4, 4, 4], &[4]).is_err());
        let k = GraphTopology::complete(4).unwrap();
        assert!(synthesize_bipartite(&k, &[4, 4], &[4, 4]).is_err());
    }

    #[test]
    fn bipartite_stationary_is_half_the_side_weights() {
        let g = GraphTopology::complete_bipartite(3, 2).unwrap();
        let s = synthesize_bipartite(&g, &[6, 4, 4], &[4, 2]).unwrap();
        let solved = stationary_distribution(&s.p).unwrap();
        for (a, b) in solved.as_slice().iter().zip(s.pi.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn star_examples() {
        let s = synthesize_star(&tau(&[2, 2, 2])).unwrap();
        assert!((s.mu - 0.5).abs() < 1e-11);
        assert!((s.p.get(0, 1) - 0.5).abs() < 1e-11);
        assert_eq!(s.optimality, Optimality::Optimal);

        let s = synthesize_star(&tau(&[2, 4, 2])).unwrap();
        assert!((s.p.get(0, 1) - GOLDEN).abs() < 1e-11);
        assert!((s.p.get(0, 2) - (1.0 - GOLDEN)).abs() < 1e-11);
        assert!((s.mu - (1.0 - GOLDEN)).abs() < 1e-11);
    }

    #[test]
    fn star_center_duration_is_irrelevant() {
        let a = synthesize_star(&tau(&[2, 3, 6, 4])).unwrap();
        let b = synthesize_star(&tau(&[9, 3, 6, 4])).unwrap();
        assert_eq!(a.p, b.p);
        assert_eq!(a.mu, b.mu);
    }

    #[test]
    fn star_rejects_short_durations() {
        assert!(matches!(
            synthesize_star(&tau(&[2, 1, 2])),
            Err(Error::InfeasibleTau { .. })
        ));
    }

    #[test]
    fn baseline_examples() {
        let b = uniform_bipartite_baseline(2, 2, 4).unwrap();
        assert!((b.strategy.mu - 0.75).abs() < 1e-12);
        let b = uniform_bipartite_baseline(2, 3, 2).unwrap();
        assert!((b.strategy.mu - 1.0 / 3.0).abs() < 1e-12);
        assert!(b.ratio >= b.constant);
        assert!(matches!(
            uniform_bipartite_baseline(2, 2, 5),
            Err(Error::TrivialGame(_))
        ));
        assert!(uniform_bipartite_baseline(1, 3, 2).is_err());
    }

    #[test]
    fn baseline_matches_recursion() {
        let b = uniform_bipartite_baseline(3, 4, 5).unwrap();
        let exact = capture_probability(&b.strategy.p, &tau(&[5; 7])).unwrap();
        assert!((exact.mu - b.strategy.mu).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        let pi = StationaryDistribution::new(vec![0.25; 4]).unwrap();
        let b = capture_upper_bound(&pi, &tau(&[3, 3, 3, 3])).unwrap();
        assert!((b.stationary_bound - 0.75).abs() < 1e-15);
        assert!((b.generic_bound - 0.75).abs() < 1e-15);
        let b = capture_upper_bound(&pi, &tau(&[1, 1, 1, 5])).unwrap();
        assert_eq!(b.generic_bound, 1.0);

        let pi = StationaryDistribution::new(vec![0.618, 0.382]).unwrap();
        let b = capture_upper_bound(&pi, &tau(&[1, 2])).unwrap();
        assert!((b.stationary_bound - 0.618).abs() < 1e-12);
        assert!((b.with_mu(0.5).ratio.unwrap() - 0.5).abs() < 1e-15);
    }
}
