//! Patrol graph topologies and attack-duration feasibility checks.
//!
//! Nodes are indexed from zero in the library API. The JSON graph descriptor
//! ([`GraphSpec`]) uses one-based node labels for its edge list.
//!
//! Complete bipartite graphs place side 𝒫 first: nodes `0..n_p` form 𝒫 and
//! nodes `n_p..n_p + n_q` form 𝒬. A star on `n` nodes is the complete bipartite
//! graph with `n_p = 1`, so its center is node `0`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GraphFamily {
    Complete,
    CompleteBipartite { n_p: usize, n_q: usize },
    Star,
    General,
}

/// A strongly connected directed graph with a family tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    n: usize,
    adjacency: Vec<bool>,
    family: GraphFamily,
}

impl GraphTopology {
    /// Complete digraph on `n` nodes, self-loops included.
    pub fn complete(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("complete graph needs n >= 1".into()));
        }
        Ok(Self {
            n,
            adjacency: vec![true; n * n],
            family: GraphFamily::Complete,
        })
    }

    pub fn complete_bipartite(n_p: usize, n_q: usize) -> Result<Self> {
        if n_p == 0 || n_q == 0 {
            return Err(Error::InvalidSpec(format!(
                "complete bipartite graph needs n_p >= 1 and n_q >= 1, got ({n_p}, {n_q})"
            )));
        }
        let mut g = Self::bipartite_edges(n_p, n_q);
        g.family = GraphFamily::CompleteBipartite { n_p, n_q };
        Ok(g)
    }

    /// Star with center node `0` and `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!(
                "star graph needs n >= 2, got {n}"
            )));
        }
        let mut g = Self::bipartite_edges(1, n - 1);
        g.family = GraphFamily::Star;
        Ok(g)
    }

    /// Arbitrary digraph from zero-based edges. Must be strongly connected.
    pub fn general(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("general graph needs n >= 1".into()));
        }
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidSpec(format!(
                    "edge ({}, {}) references a node outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            adjacency[i * n + j] = true;
        }
        let g = Self {
            n,
            adjacency,
            family: GraphFamily::General,
        };
        if !g.is_strongly_connected() {
            return Err(Error::InvalidSpec("graph is not strongly connected".into()));
        }
        Ok(g)
    }

    fn bipartite_edges(n_p: usize, n_q: usize) -> Self {
        let n = n_p + n_q;
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                adjacency[i * n + j] = (i < n_p) != (j < n_p);
            }
        }
        Self {
            n,
            adjacency,
            family: GraphFamily::General,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> GraphFamily {
        self.family
    }

    /// Sizes of the two sides, `(n_p, n_q)`, for bipartite and star graphs.
    pub fn sides(&self) -> Option<(usize, usize)> {
        match self.family {
            GraphFamily::CompleteBipartite { n_p, n_q } => Some((n_p, n_q)),
            GraphFamily::Star => Some((1, self.n - 1)),
            _ => None,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adjacency[i * self.n + j]
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.adjacency[i * self.n + j])
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.successors(i).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e).count()
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for v in self.successors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Longest shortest-path distance from `i`, or `None` if some node is unreachable.
    pub fn eccentricity(&self, i: usize) -> Option<usize> {
        self.distances_from(i)
            .into_iter()
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    pub fn is_strongly_connected(&self) -> bool {
        (0..self.n).all(|i| self.distances_from(i).iter().all(Option::is_some))
    }

    /// Length of the shortest closed walk visiting every node, known exactly
    /// for the complete, complete bipartite and star families.
    pub fn min_covering_cycle_len(&self) -> Option<usize> {
        match self.family {
            GraphFamily::Complete => Some(self.n),
            GraphFamily::CompleteBipartite { n_p, n_q } => Some(2 * n_p.max(n_q)),
            GraphFamily::Star => Some(2 * (self.n - 1)),
            GraphFamily::General => None,
        }
    }
}

/// JSON graph descriptor.
///
/// ```json
/// {"family": "bipartite", "n_p": 3, "n_q": 2}
/// {"family": "general", "n": 3, "edges": [[1,2],[2,3],[3,1]]}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
}

impl GraphSpec {
    pub fn complete(n: usize) -> Self {
        Self {
            family: "complete".into(),
            n: Some(n),
            ..Self::default()
        }
    }

    pub fn bipartite(n_p: usize, n_q: usize) -> Self {
        Self {
            family: "bipartite".into(),
            n: Some(n_p + n_q),
            n_p: Some(n_p),
            n_q: Some(n_q),
            ..Self::default()
        }
    }

    pub fn star(n: usize) -> Self {
        Self {
            family: "star".into(),
            n: Some(n),
            ..Self::default()
        }
    }
}

pub fn build_graph(spec: &GraphSpec) -> Result<GraphTopology> {
    let need_n = || {
        spec.n
            .ok_or_else(|| Error::InvalidSpec(format!("family '{}' needs n", spec.family)))
    };
    match spec.family.to_ascii_lowercase().as_str() {
        "complete" => GraphTopology::complete(need_n()?),
        "bipartite" | "complete_bipartite" => {
            let (n_p, n_q) = match (spec.n_p, spec.n_q, spec.n) {
                (Some(p), Some(q), _) => (p, q),
                (Some(p), None, Some(n)) if n > p => (p, n - p),
                (None, Some(q), Some(n)) if n > q => (n - q, q),
                _ => {
                    return Err(Error::InvalidSpec(
                        "bipartite family needs n_p and n_q".into(),
                    ))
                }
            };
            if let Some(n) = spec.n {
                if n != n_p + n_q {
                    return Err(Error::InvalidSpec(format!(
                        "n = {n} does not equal n_p + n_q = {}",
                        n_p + n_q
                    )));
                }
            }
            GraphTopology::complete_bipartite(n_p, n_q)
        }
        "star" => GraphTopology::star(need_n()?),
        "general" => {
            let n = need_n()?;
            let edges = spec
                .edges
                .as_ref()
                .ok_or_else(|| Error::InvalidSpec("general family needs edges".into()))?;
            let zero_based = edges
                .iter()
                .map(|&[i, j]| {
                    if i == 0 || j == 0 {
                        Err(Error::InvalidSpec("edge labels are one-based".into()))
                    } else {
                        Ok((i - 1, j - 1))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            GraphTopology::general(n, &zero_based)
        }
        other => Err(Error::InvalidSpec(format!(
            "unknown graph family '{other}'"
        ))),
    }
}

/// Per-node attack durations, each at least one time period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct AttackDurations(Vec<u32>);

impl AttackDurations {
    pub fn new(tau: Vec<u32>) -> Result<Self> {
        if tau.is_empty() {
            return Err(Error::InvalidSpec("attack duration vector is empty".into()));
        }
        if let Some(i) = tau.iter().position(|&t| t == 0) {
            return Err(Error::InfeasibleTau {
                node: i,
                tau: 0,
                min: 1,
            });
        }
        Ok(Self(tau))
    }

    /// Rejects any entry below `min`.
    pub fn require_at_least(&self, min: u32) -> Result<()> {
        match self.0.iter().position(|&t| t < min) {
            Some(node) => Err(Error::InfeasibleTau {
                node,
                tau: self.0[node],
                min,
            }),
            None => Ok(()),
        }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&t| u64::from(t)).sum()
    }
}

impl TryFrom<Vec<u32>> for AttackDurations {
    type Error = Error;

    fn try_from(tau: Vec<u32>) -> Result<Self> {
        Self::new(tau)
    }
}

impl From<AttackDurations> for Vec<u32> {
    fn from(tau: AttackDurations) -> Self {
        tau.0
    }
}

impl std::ops::Index<usize> for AttackDurations {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub nontrivial: bool,
    /// Zero-based nodes whose duration is below their eccentricity.
    pub condition1_violations: Vec<usize>,
    pub condition2_holds: bool,
    /// `false` for the general family, where the covering-cycle test is skipped.
    pub condition2_checked: bool,
    pub notes: String,
}

/// Checks the two nontriviality conditions on attack durations: every
/// duration reaches the node's eccentricity, and at least one duration is
/// shorter than every closed walk covering all nodes.
pub fn validate_attack_durations(
    g: &GraphTopology,
    tau: &AttackDurations,
) -> Result<FeasibilityReport> {
    if tau.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: tau.len(),
        });
    }
    let condition1_violations: Vec<usize> = (0..g.n())
        .filter(|&i| g.eccentricity(i).is_none_or(|ecc| (tau[i] as usize) < ecc))
        .collect();

    let mut notes = Vec::new();
    if !condition1_violations.is_empty() {
        notes.push(
            "some durations are shorter than the hop distance to the furthest node; capture probability is zero"
                .to_string(),
        );
    }
    let (condition2_holds, condition2_checked) = match g.min_covering_cycle_len() {
        Some(len) => {
            let holds = tau.as_slice().iter().any(|&t| (t as usize) < len);
            if !holds {
                notes.push(format!(
                    "every duration is at least the covering cycle length {len}; a deterministic tour captures with probability one"
                ));
            }
            (holds, true)
        }
        None => {
            notes.push("covering-cycle condition not checked for general graphs".to_string());
            (true, false)
        }
    };
    Ok(FeasibilityReport {
        nontrivial: condition1_violations.is_empty() && condition2_holds,
        condition1_violations,
        condition2_holds,
        condition2_checked,
        notes: notes.join("; "),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(v: &[u32]) -> AttackDurations {
        AttackDurations::new(v.to_vec()).unwrap()
    }

    #[test]
    fn complete_graph_has_self_loops() {
        let g = build_graph(&GraphSpec::complete(3)).unwrap();
        assert_eq!(g.edge_count(), 9);
        assert!((0..3).all(|i| g.has_edge(i, i)));
    }

    #[test]
    fn bipartite_has_only_cross_edges() {
        let g = build_graph(&GraphSpec::bipartite(3, 2)).unwrap();
        assert_eq!(g.edge_count(), 12);
        for (i, j) in g.edges() {
            assert_ne!(i < 3, j < 3);
        }
    }

    #[test]
    fn star_edges() {
        let g = build_graph(&GraphSpec::star(3)).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 0), (2, 0)]);
    }

    #[test]
    fn zero_sizes_rejected() {
        assert!(matches!(
            build_graph(&GraphSpec::complete(0)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_graph(&GraphSpec::bipartite(0, 2)),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_graph(&GraphSpec::star(1)),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn general_graph_from_json() {
        let spec: GraphSpec =
            serde_json::from_str(r#"{"family":"general","n":3,"edges":[[1,2],[2,3],[3,1]]}"#)
                .unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.family(), GraphFamily::General);
        assert_eq!(g.eccentricity(0), Some(2));

        let broken: GraphSpec =
            serde_json::from_str(r#"{"family":"general","n":3,"edges":[[1,2],[2,3]]}"#).unwrap();
        assert!(build_graph(&broken).is_err());
    }

    #[test]
    fn bipartite_size_mismatch() {
        let mut spec = GraphSpec::bipartite(3, 2);
        spec.n = Some(6);
        assert!(build_graph(&spec).is_err());
    }

    #[test]
    fn star_leaf_too_short() {
        let g = GraphTopology::star(3).unwrap();
        let report = validate_attack_durations(&g, &tau(&[2, 1, 2])).unwrap();
        assert_eq!(report.condition1_violations, vec![1]);
        assert!(!report.nontrivial);
    }

    #[test]
    fn bipartite_same_side_is_two_hops() {
        let g = GraphTopology::complete_bipartite(3, 2).unwrap();
        let report = validate_attack_durations(&g, &tau(&[4, 4, 4, 4, 1])).unwrap();
        assert_eq!(report.condition1_violations, vec![4]);
    }

    #[test]
    fn complete_unit_durations_nontrivial() {
        let g = GraphTopology::complete(3).unwrap();
        let report = validate_attack_durations(&g, &tau(&[1, 1, 1])).unwrap();
        assert!(report.nontrivial);
        assert!(report.condition1_violations.is_empty());
        assert!(report.condition2_holds);
    }

    #[test]
    fn long_durations_are_trivial() {
        let g = GraphTopology::complete_bipartite(2, 2).unwrap();
        let report = validate_attack_durations(&g, &tau(&[4, 4, 4, 4])).unwrap();
        assert!(!report.condition2_holds);
        assert!(!report.nontrivial);
    }

    #[test]
    fn general_skips_condition_two() {
        let g = GraphTopology::general(2, &[(0, 1), (1, 0)]).unwrap();
        let report = validate_attack_durations(&g, &tau(&[9, 9])).unwrap();
        assert!(!report.condition2_checked);
        assert!(report.nontrivial);
    }

    #[test]
    fn length_mismatch() {
        let g = GraphTopology::complete(3).unwrap();
        assert_eq!(
            validate_attack_durations(&g, &tau(&[1, 1])),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    #[test]
    fn zero_duration_rejected() {
        assert!(AttackDurations::new(vec![1, 0]).is_err());
        assert!(serde_json::from_str::<AttackDurations>("[2,0]").is_err());
    }
}
