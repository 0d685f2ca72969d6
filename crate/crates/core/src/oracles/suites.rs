use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{exhaustive_allocation, guard, local_search_strategy, search_space, AllocationProblem};
use crate::allocation::{allocate_complete, modified_bisection};
use crate::error::Result;
use crate::graph::{AttackDurations, GraphTopology};
use crate::markov::{
    capture_probability, simulate_capture, stationary_distribution, TransitionMatrix,
};
use crate::strategy::{
    bipartite_block_capture, bipartite_block_matrix, capture_upper_bound, rank_one_capture,
    synthesize_bipartite, synthesize_complete, synthesize_star, uniform_bipartite_baseline,
};

/// Absolute tolerance for comparing closed forms with the recursion.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub check: String,
    pub instance: String,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    fn push(&mut self, check: &str, instance: String, expected: f64, actual: f64, pass: bool) {
        self.entries.push(SuiteEntry {
            check: check.to_string(),
            instance,
            expected,
            actual,
            pass,
        });
    }

    pub fn extend(&mut self, other: SuiteReport) {
        self.entries.extend(other.entries);
    }

    pub fn total(&self) -> usize {
        self.entries.len()
    }

    pub fn passed(&self) -> usize {
        self.entries.iter().filter(|e| e.pass).count()
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.all_passed() {
            write!(f, "PASS {}/{}", self.passed(), self.total())
        } else {
            write!(f, "FAIL {}/{}", self.passed(), self.total())
        }
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Random strategy supported on `g`, each row uniform on its support simplex.
pub fn random_strategy<R: Rng>(g: &GraphTopology, rng: &mut R) -> TransitionMatrix {
    let n = g.n();
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        let cols: Vec<usize> = g.successors(i).collect();
        let draws: Vec<f64> = cols
            .iter()
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = draws.iter().sum();
        for (&j, d) in cols.iter().zip(draws) {
            row[j] = d / total;
        }
    }
    TransitionMatrix::from_rows(&rows).expect("rows are normalized")
}

fn random_simplex<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

fn random_taus<R: Rng>(len: usize, lo: u32, hi: u32, rng: &mut R) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Strongly connected digraph: a random Hamiltonian cycle plus random extra edges.
fn random_general_graph<R: Rng>(n: usize, rng: &mut R) -> GraphTopology {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut edges: Vec<(usize, usize)> = (0..n).map(|k| (order[k], order[(k + 1) % n])).collect();
    for i in 0..n {
        for j in 0..n {
            if rng.gen_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    GraphTopology::general(n, &edges).expect("contains a Hamiltonian cycle")
}

fn fmt_tau(tau: &[u32]) -> String {
    tau.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// Closed-form capture probabilities against the hitting-time recursion.
///
/// Instance `k` cycles through complete (`n <= 6`, `τ_i <= 8`), complete
/// bipartite (`n_p, n_q <= 4`, `2 <= τ_i <= 9`) and star (`n <= 6`) graphs.
/// Each instance checks the synthesized strategy and a random strategy of
/// the same structured form.
pub fn closed_form_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for k in 0..instances {
        let mut rng = stream(seed, k as u64);
        match k % 3 {
            0 => {
                let n = rng.gen_range(2..=6);
                let tau = AttackDurations::new(random_taus(n, 1, 8, &mut rng))?;
                let label = format!("complete n={n} tau=[{}]", fmt_tau(tau.as_slice()));
                let s = synthesize_complete(&tau)?;
                let exact = capture_probability(&s.p, &tau)?.mu;
                report.push(
                    "complete/synthesized",
                    label.clone(),
                    s.mu,
                    exact,
                    (s.mu - exact).abs() <= EXACT_TOL,
                );

                let pi = random_simplex(n, &mut rng);
                let analytic = rank_one_capture(&pi, tau.as_slice());
                let exact = capture_probability(&TransitionMatrix::rank_one(&pi)?, &tau)?.mu;
                report.push(
                    "complete/rank-one",
                    label,
                    analytic,
                    exact,
                    (analytic - exact).abs() <= EXACT_TOL,
                );
            }
            1 => {
                let (n_p, n_q) = (rng.gen_range(2..=4), rng.gen_range(2..=4));
                let g = GraphTopology::complete_bipartite(n_p, n_q)?;
                let tau_p = random_taus(n_p, 2, 9, &mut rng);
                let tau_q = random_taus(n_q, 2, 9, &mut rng);
                let label = format!(
                    "bipartite n_p={n_p} n_q={n_q} tau=[{}|{}]",
                    fmt_tau(&tau_p),
                    fmt_tau(&tau_q)
                );
                let tau = AttackDurations::new([tau_p.clone(), tau_q.clone()].concat())?;
                let s = synthesize_bipartite(&g, &tau_p, &tau_q)?;
                let exact = capture_probability(&s.p, &tau)?.mu;
                report.push(
                    "bipartite/synthesized",
                    label.clone(),
                    s.mu,
                    exact,
                    (s.mu - exact).abs() <= EXACT_TOL,
                );

                let p = random_simplex(n_p, &mut rng);
                let q = random_simplex(n_q, &mut rng);
                let analytic = bipartite_block_capture(&p, &q, &tau_p, &tau_q);
                let exact = capture_probability(&bipartite_block_matrix(&p, &q)?, &tau)?.mu;
                report.push(
                    "bipartite/block",
                    label,
                    analytic,
                    exact,
                    (analytic - exact).abs() <= EXACT_TOL,
                );
            }
            _ => {
                let n = rng.gen_range(2..=6);
                let tau = AttackDurations::new(random_taus(n, 2, 9, &mut rng))?;
                let label = format!("star n={n} tau=[{}]", fmt_tau(tau.as_slice()));
                let s = synthesize_star(&tau)?;
                let exact = capture_probability(&s.p, &tau)?.mu;
                report.push(
                    "star/synthesized",
                    label.clone(),
                    s.mu,
                    exact,
                    (s.mu - exact).abs() <= EXACT_TOL,
                );

                let q = random_simplex(n - 1, &mut rng);
                let analytic =
                    bipartite_block_capture(&[1.0], &q, &tau.as_slice()[..1], &tau.as_slice()[1..]);
                let exact = capture_probability(&bipartite_block_matrix(&[1.0], &q)?, &tau)?.mu;
                report.push(
                    "star/block",
                    label,
                    analytic,
                    exact,
                    (analytic - exact).abs() <= EXACT_TOL,
                );
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSuiteRanges {
    /// Random irreducible strategies checked against `min_i π_i τ_i`.
    pub random_strategies: usize,
    pub max_random_n: usize,
    pub max_random_tau: u32,
    /// Complete graphs `2..=max_complete_n` for the budget lower bound.
    pub max_complete_n: usize,
    /// Baseline sides range over `2..=max_baseline_side`.
    pub max_baseline_side: usize,
    pub seed: u64,
}

impl Default for BoundSuiteRanges {
    fn default() -> Self {
        Self {
            random_strategies: 500,
            max_random_n: 6,
            max_random_tau: 8,
            max_complete_n: 8,
            max_baseline_side: 8,
            seed: 0,
        }
    }
}

/// Upper-bound and constant-factor checks over swept instances.
pub fn bound_suite(ranges: &BoundSuiteRanges) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();

    // any irreducible strategy: mu <= min_i pi_i tau_i
    for k in 0..ranges.random_strategies {
        let mut rng = stream(ranges.seed, k as u64);
        let n = rng.gen_range(2..=ranges.max_random_n.max(2));
        let (g, family) = match k % 4 {
            0 => (GraphTopology::complete(n)?, "complete".to_string()),
            1 if n >= 2 => {
                let n_p = rng.gen_range(1..n);
                (
                    GraphTopology::complete_bipartite(n_p, n - n_p)?,
                    format!("bipartite({n_p},{})", n - n_p),
                )
            }
            2 => (GraphTopology::star(n)?, "star".to_string()),
            _ => (random_general_graph(n, &mut rng), "general".to_string()),
        };
        let p = random_strategy(&g, &mut rng);
        let tau = AttackDurations::new(random_taus(n, 1, ranges.max_random_tau, &mut rng))?;
        let pi = stationary_distribution(&p)?;
        let bound = capture_upper_bound(&pi, &tau)?;
        let mu = capture_probability(&p, &tau)?.mu;
        report.push(
            "stationary-bound/random",
            format!("#{k} {family} n={n} tau=[{}]", fmt_tau(tau.as_slice())),
            bound.stationary_bound,
            mu,
            mu <= bound.stationary_bound + EXACT_TOL,
        );
    }

    // synthesized strategies stay below both bounds
    for k in 0..ranges.random_strategies / 5 {
        let mut rng = stream(ranges.seed ^ 0x5eed, k as u64);
        let n = rng.gen_range(2..=ranges.max_random_n.max(2));
        let tau = AttackDurations::new(random_taus(n, 1, ranges.max_random_tau, &mut rng))?;
        let s = synthesize_complete(&tau)?;
        let bound = capture_upper_bound(&s.pi, &tau)?;
        let cap = bound.stationary_bound.min(bound.generic_bound);
        report.push(
            "stationary-bound/complete",
            format!("n={n} tau=[{}]", fmt_tau(tau.as_slice())),
            cap,
            s.mu,
            s.mu <= cap + EXACT_TOL && s.suboptimality_lower_bound <= 1.0,
        );
    }

    // optimal complete-graph allocations never push w below e^-2
    let floor = (-2.0f64).exp();
    for n in 2..=ranges.max_complete_n {
        for budget in (n as u64 + 1)..(n * n) as u64 {
            let a = allocate_complete(n, budget)?;
            report.push(
                "w-floor/complete",
                format!("n={n} B={budget}"),
                floor,
                a.w,
                a.w > floor && a.mu < 1.0 - floor,
            );
        }
    }

    // uniform bipartite baseline against tau/n
    for n_p in 2..=ranges.max_baseline_side {
        for n_q in 2..=ranges.max_baseline_side {
            let n = n_p + n_q;
            for tau in 2..=(2 * n - 4) as u32 {
                let b = uniform_bipartite_baseline(n_p, n_q, tau)?;
                report.push(
                    if tau % 2 == 1 {
                        "baseline-ratio/odd"
                    } else {
                        "baseline-ratio/even"
                    },
                    format!("n_p={n_p} n_q={n_q} tau={tau}"),
                    b.constant,
                    b.ratio,
                    b.ratio >= b.constant,
                );
            }
        }
    }
    Ok(report)
}

/// Closed-form allocations against exhaustive enumeration, plus the
/// monotone-bracket property of the modified bisection.
pub fn allocation_suite(max_complete_n: usize, max_side: usize) -> Result<SuiteReport> {
    // Fail on the largest instance before spending time on the small ones.
    if max_complete_n >= 2 {
        let n = max_complete_n;
        guard(search_space(
            AllocationProblem::Complete { n },
            (n * n - 1) as u64,
        ))?;
    }
    if max_side >= 2 {
        let n = max_side as u64;
        guard(search_space(
            AllocationProblem::BipartiteSide { n: max_side },
            2 * n * n - 2,
        ))?;
        guard(search_space(
            AllocationProblem::Bipartite {
                n_p: max_side,
                n_q: max_side,
            },
            4 * n * n - 2,
        ))?;
    }
    let mut report = SuiteReport::default();
    for n in 2..=max_complete_n {
        for budget in (n as u64 + 1)..(n * n) as u64 {
            let r = exhaustive_allocation(AllocationProblem::Complete { n }, budget)?;
            report.push(
                "allocation/complete",
                format!("n={n} B={budget}"),
                r.best_value,
                r.closed_form_value.unwrap_or(f64::NAN),
                r.agreement,
            );
        }
    }
    for n in 2..=max_side {
        let n64 = n as u64;
        for budget in (2 * n64..2 * n64 * n64).step_by(2) {
            let r = exhaustive_allocation(AllocationProblem::BipartiteSide { n }, budget)?;
            report.push(
                "allocation/side",
                format!("n={n} B={budget}"),
                r.best_value,
                r.closed_form_value.unwrap_or(f64::NAN),
                r.agreement,
            );
        }
    }
    for n_p in 2..=max_side {
        for n_q in 2..=max_side {
            let (np, nq) = (n_p as u64, n_q as u64);
            let lo = 2 * (np + nq) + 2;
            let hi = 2 * (np * np + nq * nq);
            for budget in (lo..hi).step_by(2) {
                let r = exhaustive_allocation(AllocationProblem::Bipartite { n_p, n_q }, budget)?;
                let label = format!("n_p={n_p} n_q={n_q} B={budget}");
                report.push(
                    "allocation/bipartite",
                    label.clone(),
                    r.best_value,
                    r.closed_form_value.unwrap_or(f64::NAN),
                    r.agreement,
                );

                let (_, mut probes) = modified_bisection(n_p, n_q, budget)?;
                probes.sort_by_key(|p| p.b_p);
                let monotone = probes
                    .windows(2)
                    .all(|w| w[1].w_p <= w[0].w_p + EXACT_TOL && w[1].w_q + EXACT_TOL >= w[0].w_q);
                report.push(
                    "allocation/bracket",
                    label,
                    1.0,
                    if monotone { 1.0 } else { 0.0 },
                    monotone,
                );
            }
        }
    }
    Ok(report)
}

/// Random-restart local search never beats the star strategy, for every
/// `τ ∈ {2,3,4}^n` on stars with 3 and 4 nodes.
pub fn star_optimality_suite(restarts: usize, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for n in [3usize, 4] {
        let g = GraphTopology::star(n)?;
        for code in 0..3usize.pow(n as u32) {
            let tau: Vec<u32> = (0..n)
                .map(|k| 2 + (code / 3usize.pow(k as u32) % 3) as u32)
                .collect();
            let tau = AttackDurations::new(tau)?;
            let optimal = synthesize_star(&tau)?.mu;
            let found = local_search_strategy(&g, &tau, restarts, seed)?.best_value;
            report.push(
                "star-optimality",
                format!("star n={n} tau=[{}]", fmt_tau(tau.as_slice())),
                optimal,
                found,
                found <= optimal + 1e-6,
            );
        }
    }
    Ok(report)
}

/// Monte Carlo estimates within three binomial standard errors of the exact
/// recursion, per ordered pair, on random strategies over random families.
pub fn montecarlo_suite(instances: usize, trials: u64, seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    for k in 0..instances {
        let mut rng = stream(seed, k as u64);
        let n = rng.gen_range(2..=4);
        let (g, family) = match k % 4 {
            0 => (GraphTopology::complete(n)?, "complete".to_string()),
            1 => {
                let n_p = rng.gen_range(1..n);
                (
                    GraphTopology::complete_bipartite(n_p, n - n_p)?,
                    format!("bipartite({n_p},{})", n - n_p),
                )
            }
            2 => (GraphTopology::star(n)?, "star".to_string()),
            _ => (random_general_graph(n, &mut rng), "general".to_string()),
        };
        let p = random_strategy(&g, &mut rng);
        let tau = AttackDurations::new(random_taus(n, 1, 6, &mut rng))?;
        let exact = capture_probability(&p, &tau)?;
        let sim = simulate_capture(&p, &tau, trials, seed.wrapping_add(k as u64))?;
        for i in 0..n {
            for j in 0..n {
                let prob = exact.cdf[i][j].clamp(0.0, 1.0);
                let est = sim.estimates[i][j];
                let band = 3.0 * (prob * (1.0 - prob) / trials as f64).sqrt();
                report.push(
                    "montecarlo",
                    format!(
                        "#{k} {family} tau=[{}] pair=({},{})",
                        fmt_tau(tau.as_slice()),
                        i + 1,
                        j + 1
                    ),
                    prob,
                    est,
                    (est - prob).abs() <= band + EXACT_TOL,
                );
            }
        }
    }
    Ok(report)
}
