//! Graph specifications, the Laplacian, and its pinned partition.
//!
//! An edge `(j, i, w)` means agent `i` listens to `j` with weight `w`, so
//! information flows `j -> i`. Files and labels use 1-based node indices; the
//! in-memory [`GraphSpec`] is 0-based with the source moved to the last slot,
//! which makes the pinned partition
//!
//! ```text
//!     L = [ K  | -B ]
//!         [ *  |  * ]
//! ```
//!
//! a plain trailing-row/column deletion.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix, Vector};

/// A directed, weighted edge in internal (0-based, source-last) indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Validated graph with one designated source node.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    node_count: usize,
    edges: Vec<Edge>,
    labels: Vec<String>,
    /// 1-based file index of each internal node.
    file_index: Vec<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    nodes: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<i64>,
    edges: Vec<(i64, i64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl GraphSpec {
    /// Builds a spec from 1-based indices, validating every edge.
    pub fn new(
        node_count: usize,
        source: usize,
        edges: &[(usize, usize, f64)],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let raw: Vec<(i64, i64, f64)> = edges
            .iter()
            .map(|&(f, t, w)| (f as i64, t as i64, w))
            .collect();
        Self::from_raw(node_count as i64, Some(source as i64), &raw, labels)
    }

    fn from_raw(
        nodes: i64,
        source: Option<i64>,
        edges: &[(i64, i64, f64)],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Malformed(format!(
                "`nodes` must be at least 2 (one source and one agent), got {nodes}"
            )));
        }
        let node_count = nodes as usize;
        let source = source.ok_or(Error::MissingSource)?;
        check_index("source", source, node_count)?;
        let source = (source - 1) as usize;

        // file (0-based) -> internal: followers keep their order, source goes last
        let to_internal = |v: usize| -> usize {
            match v.cmp(&source) {
                std::cmp::Ordering::Less => v,
                std::cmp::Ordering::Equal => node_count - 1,
                std::cmp::Ordering::Greater => v - 1,
            }
        };
        let mut file_index = vec![0; node_count];
        for v in 0..node_count {
            file_index[to_internal(v)] = v + 1;
        }

        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (k, &(from, to, weight)) in edges.iter().enumerate() {
            check_index(&format!("edges[{k}] from"), from, node_count)?;
            check_index(&format!("edges[{k}] to"), to, node_count)?;
            if from == to {
                return Err(Error::SelfEdge {
                    edge: k,
                    node: from,
                });
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::NonpositiveWeight {
                    edge: k,
                    from,
                    to,
                    weight,
                });
            }
            if !seen.insert((from, to)) {
                return Err(Error::DuplicateEdge { edge: k, from, to });
            }
            out.push(Edge {
                from: to_internal((from - 1) as usize),
                to: to_internal((to - 1) as usize),
                weight,
            });
        }

        let labels = match labels {
            Some(l) if l.len() != node_count => {
                return Err(Error::LabelCount {
                    labels: l.len(),
                    nodes: node_count,
                })
            }
            Some(l) => file_index.iter().map(|&f| l[f - 1].clone()).collect(),
            None => file_index.iter().map(|f| f.to_string()).collect(),
        };

        Ok(GraphSpec {
            node_count,
            edges: out,
            labels,
            file_index,
        })
    }

    /// Total number of nodes, source included (`n + 1`).
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of non-source agents `n`.
    pub fn agent_count(&self) -> usize {
        self.node_count - 1
    }

    /// Internal index of the source; always the last node.
    pub fn source(&self) -> usize {
        self.node_count - 1
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Labels in internal order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// 1-based file index of internal node `v`.
    pub fn file_index(&self, v: usize) -> usize {
        self.file_index[v]
    }

    /// Serializes back to the graph document format (1-based, original order).
    pub fn to_json(&self) -> String {
        let mut labels = vec![String::new(); self.node_count];
        for (v, l) in self.labels.iter().enumerate() {
            labels[self.file_index[v] - 1] = l.clone();
        }
        let doc = GraphDocument {
            nodes: self.node_count as i64,
            source: Some(self.file_index[self.source()] as i64),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    (
                        self.file_index[e.from] as i64,
                        self.file_index[e.to] as i64,
                        e.weight,
                    )
                })
                .collect(),
            labels: Some(labels),
        };
        serde_json::to_string_pretty(&doc).expect("graph document serializes")
    }
}

fn check_index(what: &str, index: i64, node_count: usize) -> Result<()> {
    if index < 1 || index > node_count as i64 {
        return Err(Error::IndexOutOfRange {
            what: what.to_string(),
            index,
            max: node_count,
        });
    }
    Ok(())
}

/// Parses and validates a JSON graph document.
pub fn parse_graph(text: &str) -> Result<GraphSpec> {
    let doc: GraphDocument =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    GraphSpec::from_raw(doc.nodes, doc.source, &doc.edges, doc.labels)
}

/// True iff every agent is reachable from the source along edge direction.
pub fn check_source_connected(spec: &GraphSpec) -> bool {
    let n = spec.node_count();
    let mut listeners = vec![Vec::new(); n];
    for e in spec.edges() {
        listeners[e.from].push(e.to);
    }
    let mut reached = vec![false; n];
    let mut queue = VecDeque::from([spec.source()]);
    reached[spec.source()] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &listeners[v] {
            if !reached[w] {
                reached[w] = true;
                queue.push_back(w);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// Full `(n+1) × (n+1)` graph Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub entries: Matrix,
}

impl Laplacian {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }
}

pub fn build_laplacian(spec: &GraphSpec) -> Laplacian {
    let n = spec.node_count();
    let mut l = Matrix::zeros(n, n);
    for e in spec.edges() {
        l[(e.to, e.from)] -= e.weight;
        l[(e.to, e.to)] += e.weight;
    }
    Laplacian { entries: l }
}

/// Pinned Laplacian `K` and source input vector `B` of the follower dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnedSystem {
    pub k: Matrix,
    pub b: Vector,
    /// Index of the removed source row/column in the originating Laplacian.
    pub source: usize,
    /// Agent labels, one per row of `K`.
    pub labels: Vec<String>,
}

impl PinnedSystem {
    /// Validates connectivity, builds the Laplacian and pins it, keeping labels.
    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let mut sys = pin(&build_laplacian(spec), spec.source())?;
        sys.labels = spec.labels()[..spec.agent_count()].to_vec();
        Ok(sys)
    }

    /// Number of agents `n`.
    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    /// `K⁻¹B`; equal to the all-ones vector for any valid pinning.
    pub fn steady_state_gain(&self) -> Result<Vector> {
        Ok(Lu::new(&self.k)?.solve(&self.b))
    }

    /// Agents that hear the source directly.
    pub fn leaders(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.b[i] > 0.0).collect()
    }
}

/// Deletes the source row and column of `lap`; `B` is the negated source column.
pub fn pin(lap: &Laplacian, source: usize) -> Result<PinnedSystem> {
    let dim = lap.dim();
    if source >= dim {
        return Err(Error::InvalidArgument(format!(
            "source {source} outside Laplacian of dimension {dim}"
        )));
    }
    let keep: Vec<usize> = (0..dim).filter(|&v| v != source).collect();
    let n = keep.len();
    let k = Matrix::from_fn(n, n, |i, j| lap.entries[(keep[i], keep[j])]);
    let b = Vector::from_fn(n, |i, _| -lap.entries[(keep[i], source)]);
    Lu::new(&k)?;
    Ok(PinnedSystem {
        k,
        b,
        source,
        labels: keep.iter().map(|v| (v + 1).to_string()).collect(),
    })
}

/// `n` agents in a ring, each listening to both ring neighbors with unit
/// weight; `leader` (1-based) additionally listens to the source `n + 1`.
pub fn ring_with_leader(n: usize, leader: usize) -> Result<GraphSpec> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "a ring needs at least 3 agents, got {n}"
        )));
    }
    if leader < 1 || leader > n {
        return Err(Error::IndexOutOfRange {
            what: "leader".into(),
            index: leader as i64,
            max: n,
        });
    }
    let mut edges = Vec::with_capacity(2 * n + 1);
    for i in 1..=n {
        let prev = if i == 1 { n } else { i - 1 };
        let next = if i == n { 1 } else { i + 1 };
        edges.push((prev, i, 1.0));
        edges.push((next, i, 1.0));
    }
    edges.push((n + 1, leader, 1.0));
    GraphSpec::new(n + 1, n + 1, &edges, None)
}

/// Six agents in three topologically ordered blocks `{1} < {2, 3} < {4 < 5 < 6}`
/// plus the source 7, which feeds agent 1 only.
pub fn fig2_fixture() -> GraphSpec {
    let edges = [
        (7, 1, 1.0),
        (1, 2, 1.0),
        (3, 2, 1.0),
        (1, 3, 1.0),
        (2, 3, 1.0),
        (2, 4, 1.0),
        (3, 5, 1.0),
        (2, 6, 1.0),
        (3, 6, 1.0),
        (4, 6, 1.0),
        (5, 6, 1.0),
    ];
    GraphSpec::new(7, 7, &edges, None).expect("fixture is valid")
}
