//! Markov-chain machinery: stationary distributions, first-hitting-time
//! probabilities, exact capture probabilities and a seeded Monte Carlo
//! estimator of the same quantities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttackDurations, GraphTopology};

pub const STOCHASTIC_TOL: f64 = 1e-9;

const DIRECT_SOLVE_MAX_N: usize = 200;
const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_CAP: usize = 100_000;

/// Row-stochastic patrol strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::NotStochastic(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..m.nrows() {
            let row = m.row(i);
            if let Some(x) = row.iter().find(|&&x| !(0.0..=1.0 + 1e-12).contains(&x)) {
                return Err(Error::NotStochastic(format!(
                    "row {} has entry {x} outside [0, 1]",
                    i + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic(format!("row {} sums to {sum}", i + 1)));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Rank-one strategy `𝟙 πᵀ`: every row equals `pi`.
    pub fn rank_one(pi: &[f64]) -> Result<Self> {
        let n = pi.len();
        Self::from_matrix(DMatrix::from_fn(n, n, |_, j| pi[j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    /// Errors if any positive entry lies on a non-edge of `g`.
    pub fn check_support(&self, g: &GraphTopology) -> Result<()> {
        if g.n() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: g.n(),
                found: self.n(),
            });
        }
        for i in 0..self.n() {
            for j in 0..self.n() {
                if self.0[(i, j)] > 0.0 && !g.has_edge(i, j) {
                    return Err(Error::OffSupport(i, j));
                }
            }
        }
        Ok(())
    }

    /// Irreducibility of the chain, i.e. strong connectivity of its support.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.0[(i, j)] > 0.0)
            .collect();
        GraphTopology::general(n, &edges).is_ok()
    }
}

impl Serialize for TransitionMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Self::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationaryDistribution(Vec<f64>);

impl StationaryDistribution {
    /// Wraps a probability vector, checking non-negativity and normalization.
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        let sum: f64 = pi.iter().sum();
        if pi.is_empty() || pi.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidSpec(format!(
                "not a probability vector (sum {sum})"
            )));
        }
        Ok(Self(pi))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The unique `π` with `πᵀ P = πᵀ`, `Σ π = 1`.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<StationaryDistribution> {
    if !p.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let n = p.n();
    let pi = if n <= DIRECT_SOLVE_MAX_N {
        direct_stationary(p.as_matrix()).unwrap_or_else(|| power_stationary(p.as_matrix()))
    } else {
        power_stationary(p.as_matrix())
    };
    let clipped: Vec<f64> = pi.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    Ok(StationaryDistribution(
        clipped.into_iter().map(|x| x / total).collect(),
    ))
}

fn direct_stationary(p: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b)
}

// Iterates the lazy chain (P + I) / 2, which shares P's stationary
// distribution and is aperiodic.
fn power_stationary(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let lazy_t = (p + DMatrix::<f64>::identity(n, n)).transpose() * 0.5;
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..POWER_ITERATION_CAP {
        let next = &lazy_t * &pi;
        let delta = (&next - &pi).amax();
        pi = next;
        if delta < POWER_ITERATION_TOL {
            break;
        }
    }
    pi
}

/// First-hitting-time probabilities `F_k(i, j) = ℙ(T_ij = k)` for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingTimeTensor {
    matrices: Vec<DMatrix<f64>>,
}

impl HittingTimeTensor {
    pub fn k_max(&self) -> usize {
        self.matrices.len()
    }

    /// `F_k`, with `k` starting at 1.
    pub fn get(&self, k: usize) -> &DMatrix<f64> {
        &self.matrices[k - 1]
    }

    /// `Σ_{k ≤ steps} F_k(i, j)`.
    pub fn cumulative(&self, i: usize, j: usize, steps: usize) -> f64 {
        self.matrices[..steps.min(self.k_max())]
            .iter()
            .map(|f| f[(i, j)])
            .sum()
    }
}

/// `F_1 = P`, `F_{k+1} = P (F_k − diag(F_k))`.
pub fn hitting_time_probabilities(p: &TransitionMatrix, k_max: usize) -> Result<HittingTimeTensor> {
    if k_max == 0 {
        return Err(Error::InvalidSpec("k_max must be >= 1".into()));
    }
    let mut matrices = Vec::with_capacity(k_max);
    matrices.push(p.as_matrix().clone());
    for _ in 1..k_max {
        let last = matrices.last().expect("non-empty");
        matrices.push(p.as_matrix() * without_diagonal(last));
    }
    Ok(HittingTimeTensor { matrices })
}

fn without_diagonal(f: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = f.clone();
    g.fill_diagonal(0.0);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureReport {
    pub mu: f64,
    /// Zero-based `(agent position, attacked node)` attaining `mu`.
    pub worst_pair: (usize, usize),
    /// `cdf[i][j] = ℙ(T_ij ≤ τ_j)`.
    pub cdf: Vec<Vec<f64>>,
}

/// Capture probability against an attacker who observes the agent at `i`
/// and strikes the node `j` minimizing `ℙ(T_ij ≤ τ_j)`; `i = j` included.
pub fn capture_probability(p: &TransitionMatrix, tau: &AttackDurations) -> Result<CaptureReport> {
    let cdf = capture_cdf(p.as_matrix(), tau.as_slice())?;
    let n = p.n();
    let mut worst = (0, 0);
    for i in 0..n {
        for j in 0..n {
            if cdf[(i, j)] < cdf[worst] {
                worst = (i, j);
            }
        }
    }
    Ok(CaptureReport {
        mu: cdf[worst],
        worst_pair: worst,
        cdf: (0..n)
            .map(|i| cdf.row(i).iter().copied().collect())
            .collect(),
    })
}

/// `min_{i,j} ℙ(T_ij ≤ τ_j)` without building the report.
pub(crate) fn capture_value(p: &DMatrix<f64>, tau: &[u32]) -> f64 {
    capture_cdf(p, tau).map(|cdf| cdf.min()).unwrap_or(0.0)
}

fn capture_cdf(p: &DMatrix<f64>, tau: &[u32]) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    if tau.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tau.len(),
        });
    }
    let k_max = tau.iter().copied().max().unwrap_or(0) as usize;
    let mut cdf = DMatrix::<f64>::zeros(n, n);
    let mut f = p.clone();
    for k in 1..=k_max {
        for (j, &t) in tau.iter().enumerate() {
            if k <= t as usize {
                let mut col = cdf.column_mut(j);
                col += f.column(j);
            }
        }
        if k < k_max {
            f.fill_diagonal(0.0);
            f = p * f;
        }
    }
    Ok(cdf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// `estimates[i][j]`: fraction of walks leaving `i` that reach `j` within `τ_j` steps.
    pub estimates: Vec<Vec<f64>>,
    pub overall: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Monte Carlo estimate of `ℙ(T_ij ≤ τ_j)` for every ordered pair.
///
/// Trial `t` of pair `(i, j)` draws from the ChaCha8 stream `i·n + j` seeded
/// by `seed`, starting at a word offset fixed by `t`, so every estimate is a
/// pure function of `(seed, i, j, trials)` regardless of scheduling.
pub fn simulate_capture(
    p: &TransitionMatrix,
    tau: &AttackDurations,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    let n = p.n();
    if tau.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: tau.len(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be >= 1".into()));
    }
    let sampler = RowSampler::new(p);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let estimate = |&(i, j): &(usize, usize)| {
        let hits = (0..trials)
            .filter(|&t| sampler.hits_within(i, j, tau[j], seed, (i * n + j) as u64, t))
            .count();
        hits as f64 / trials as f64
    };

    #[cfg(feature = "parallel")]
    let flat: Vec<f64> = {
        use rayon::prelude::*;
        pairs.par_iter().map(estimate).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let flat: Vec<f64> = pairs.iter().map(estimate).collect();

    let estimates: Vec<Vec<f64>> = flat.chunks(n).map(<[f64]>::to_vec).collect();
    let overall = flat.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SimulationReport {
        estimates,
        overall,
        trials,
        seed,
    })
}

struct RowSampler {
    cumulative: Vec<Vec<f64>>,
    last_support: Vec<usize>,
}

impl RowSampler {
    fn new(p: &TransitionMatrix) -> Self {
        let n = p.n();
        let mut cumulative = Vec::with_capacity(n);
        let mut last_support = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = 0.0;
            cumulative.push(
                (0..n)
                    .map(|j| {
                        acc += p.get(i, j);
                        acc
                    })
                    .collect(),
            );
            last_support.push((0..n).rev().find(|&j| p.get(i, j) > 0.0).unwrap_or(n - 1));
        }
        Self {
            cumulative,
            last_support,
        }
    }

    fn step(&self, from: usize, u: f64) -> usize {
        let row = &self.cumulative[from];
        row.iter()
            .position(|&c| u < c)
            .map_or(self.last_support[from], |j| j.min(self.last_support[from]))
    }

    fn hits_within(
        &self,
        from: usize,
        target: usize,
        tau: u32,
        seed: u64,
        stream: u64,
        trial: u64,
    ) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        // each step consumes one u64, i.e. two 32-bit words
        rng.set_word_pos(u128::from(trial) * 2 * u128::from(tau));
        let mut at = from;
        for _ in 0..tau {
            at = self.step(at, rng.gen::<f64>());
            if at == target {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle() -> TransitionMatrix {
        TransitionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn tau(v: &[u32]) -> AttackDurations {
        AttackDurations::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_stochastic() {
        assert!(TransitionMatrix::from_rows(&[vec![0.5, 0.4], vec![1.0, 0.0]]).is_err());
        assert!(TransitionMatrix::from_rows(&[vec![1.5, -0.5], vec![1.0, 0.0]]).is_err());
        assert!(TransitionMatrix::from_rows(&[vec![1.0], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn support_check() {
        let g = GraphTopology::star(3).unwrap();
        let ok = TransitionMatrix::from_rows(&[
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert!(ok.check_support(&g).is_ok());
        let bad = TransitionMatrix::from_rows(&[
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(bad.check_support(&g), Err(Error::OffSupport(1, 2)));
    }

    #[test]
    fn two_cycle_stationary() {
        let pi = stationary_distribution(&two_cycle()).unwrap();
        assert!((pi.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!((pi.as_slice()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_one_stationary_is_its_row() {
        let row = [0.2, 0.5, 0.3];
        let p = TransitionMatrix::rank_one(&row).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        for (a, b) in pi.as_slice().iter().zip(row) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_rejected() {
        let p = TransitionMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(stationary_distribution(&p), Err(Error::NotIrreducible));
    }

    #[test]
    fn power_iteration_agrees_with_direct_solve() {
        let p = TransitionMatrix::from_rows(&[
            vec![0.0, 0.3, 0.7],
            vec![0.6, 0.0, 0.4],
            vec![0.5, 0.5, 0.0],
        ])
        .unwrap();
        let direct = direct_stationary(p.as_matrix()).unwrap();
        let power = power_stationary(p.as_matrix());
        assert!((direct - power).amax() < 1e-10);
    }

    #[test]
    fn two_cycle_hitting_times() {
        let f = hitting_time_probabilities(&two_cycle(), 2).unwrap();
        assert_eq!(f.get(1), two_cycle().as_matrix());
        assert_eq!(*f.get(2), DMatrix::<f64>::identity(2, 2));
        assert!(hitting_time_probabilities(&two_cycle(), 0).is_err());
    }

    #[test]
    fn rank_one_hitting_times_are_geometric() {
        let pi = [0.5, 0.3, 0.2];
        let p = TransitionMatrix::rank_one(&pi).unwrap();
        let f = hitting_time_probabilities(&p, 6).unwrap();
        for k in 1..=6 {
            for i in 0..3 {
                for (j, &pj) in pi.iter().enumerate() {
                    let expected = pj * (1.0 - pj).powi(k as i32 - 1);
                    assert!((f.get(k)[(i, j)] - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn capture_examples() {
        let r = capture_probability(&two_cycle(), &tau(&[2, 2])).unwrap();
        assert_eq!(r.mu, 1.0);

        let uniform = TransitionMatrix::rank_one(&[1.0 / 3.0; 3]).unwrap();
        let r = capture_probability(&uniform, &tau(&[2, 2, 2])).unwrap();
        assert!((r.mu - 5.0 / 9.0).abs() < 1e-12);

        let star = TransitionMatrix::from_rows(&[
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let r = capture_probability(&star, &tau(&[2, 1, 2])).unwrap();
        assert_eq!(r.mu, 0.0);
        assert_eq!(r.cdf[r.worst_pair.0][r.worst_pair.1], 0.0);
    }

    #[test]
    fn capture_dimension_mismatch() {
        assert!(capture_probability(&two_cycle(), &tau(&[2, 2, 2])).is_err());
    }

    #[test]
    fn deterministic_walk_simulates_exactly() {
        let r = simulate_capture(&two_cycle(), &tau(&[2, 2]), 1000, 99).unwrap();
        assert_eq!(r.overall, 1.0);
        let short = simulate_capture(&two_cycle(), &tau(&[1, 1]), 100, 3).unwrap();
        assert_eq!(short.estimates, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn simulation_is_reproducible() {
        let p = TransitionMatrix::rank_one(&[0.2, 0.3, 0.5]).unwrap();
        let t = tau(&[2, 3, 1]);
        let a = simulate_capture(&p, &t, 5000, 7).unwrap();
        let b = simulate_capture(&p, &t, 5000, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_capture(&p, &t, 5000, 8).unwrap();
        assert_ne!(a.estimates, c.estimates);
    }
}
