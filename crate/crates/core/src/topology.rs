//! Vertex adjacency and the embedding/prediction split.
//!
//! The split depends only on face data and the vertex count, so the data
//! hider and every receiver rebuild exactly the same partition without
//! seeing plaintext coordinates.

use std::fmt;
use std::str::FromStr;

/// Per-vertex sorted neighbour lists, indexed by 1-based vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    /// Sorted neighbours of 1-based vertex `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[v as usize - 1]
    }
}

/// Neighbours of each vertex: every other vertex that shares a face with it.
///
/// `n` fixes the vertex count so vertices that appear in no face still get an
/// (empty) entry.
pub fn build_adjacency(faces: &[[u32; 3]], n: usize) -> Adjacency {
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for face in faces {
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let (u, v) = (face[a], face[b]);
            neighbors[u as usize - 1].push(v);
            neighbors[v as usize - 1].push(u);
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    Adjacency { neighbors }
}

/// How vertices are split between embedding and prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Parity split refined by the neighbourhood screening rule.
    Topology,
    /// Odd indices embed, even indices predict.
    ParityOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Topology, Strategy::ParityOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Topology => "topology",
            Strategy::ParityOnly => "parity_only",
        }
    }

    pub(crate) fn code(&self) -> u8 {
        match self {
            Strategy::Topology => 0,
            Strategy::ParityOnly => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Strategy::Topology),
            1 => Some(Strategy::ParityOnly),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "topology" => Ok(Strategy::Topology),
            "parity_only" | "parity" => Ok(Strategy::ParityOnly),
            other => Err(format!(
                "unknown strategy {other:?} (expected topology or parity_only)"
            )),
        }
    }
}

/// Embedding set, prediction set and per-embedding-vertex predictors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    embed_set: Vec<u32>,
    predict_set: Vec<u32>,
    predictors: Vec<Vec<u32>>,
    in_embed: Vec<bool>,
}

impl Partition {
    fn from_membership(adj: &Adjacency, in_embed: Vec<bool>) -> Self {
        let mut embed_set = Vec::new();
        let mut predict_set = Vec::new();
        let mut predictors = Vec::new();
        for (i, &embed) in in_embed.iter().enumerate() {
            let v = i as u32 + 1;
            if embed {
                embed_set.push(v);
                predictors.push(
                    adj.neighbors(v)
                        .iter()
                        .copied()
                        .filter(|&w| !in_embed[w as usize - 1])
                        .collect(),
                );
            } else {
                predict_set.push(v);
            }
        }
        Self {
            embed_set,
            predict_set,
            predictors,
            in_embed,
        }
    }

    /// Embedding vertices, ascending.
    pub fn embed_set(&self) -> &[u32] {
        &self.embed_set
    }

    /// Prediction vertices, ascending.
    pub fn predict_set(&self) -> &[u32] {
        &self.predict_set
    }

    /// Predictors of the `idx`-th embedding vertex (position in `embed_set`).
    pub fn predictors(&self, idx: usize) -> &[u32] {
        &self.predictors[idx]
    }

    /// `(vertex, predictors)` pairs in embed-set order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> {
        self.embed_set
            .iter()
            .copied()
            .zip(self.predictors.iter().map(Vec::as_slice))
    }

    pub fn is_embedding(&self, v: u32) -> bool {
        self.in_embed[v as usize - 1]
    }

    pub fn vertex_count(&self) -> usize {
        self.in_embed.len()
    }

    /// `|S_e| / n`.
    pub fn utilization(&self) -> f64 {
        self.embed_set.len() as f64 / self.in_embed.len() as f64
    }

    /// Embedding vertices left with fewer than two predictors.
    pub fn weakly_predicted(&self) -> usize {
        self.predictors.iter().filter(|p| p.len() < 2).count()
    }
}

/// Split vertices `1..=n` into embedding and prediction sets.
///
/// Topology strategy: odd vertices start in the embedding set, even ones in
/// the prediction set. Even vertices are then visited in ascending order and
/// moved to the embedding set when, against current membership,
///
/// * their embedding-set neighbours number at most twice their
///   prediction-set neighbours,
/// * at least two prediction-set neighbours remain to predict them, and
/// * no previously moved neighbour would drop below two predictors.
pub fn divide_vertices(adj: &Adjacency, strategy: Strategy) -> Partition {
    let n = adj.vertex_count();
    let mut in_embed: Vec<bool> = (1..=n).map(|v| v % 2 == 1).collect();
    if strategy == Strategy::ParityOnly {
        return Partition::from_membership(adj, in_embed);
    }

    // prediction-set neighbour counts, kept current as vertices move
    let mut sp_degree: Vec<usize> = (1..=n as u32)
        .map(|v| {
            adj.neighbors(v)
                .iter()
                .filter(|&&w| !in_embed[w as usize - 1])
                .count()
        })
        .collect();
    let mut moved = vec![false; n];

    for v in (2..=n as u32).step_by(2) {
        let vi = v as usize - 1;
        let nbrs = adj.neighbors(v);
        let in_sp = sp_degree[vi];
        let in_se = nbrs.len() - in_sp;
        if in_se > 2 * in_sp || in_sp < 2 {
            continue;
        }
        let strands_neighbor = nbrs
            .iter()
            .any(|&w| moved[w as usize - 1] && sp_degree[w as usize - 1] <= 2);
        if strands_neighbor {
            continue;
        }
        in_embed[vi] = true;
        moved[vi] = true;
        for &w in nbrs {
            sp_degree[w as usize - 1] -= 1;
        }
    }
    Partition::from_membership(adj, in_embed)
}
