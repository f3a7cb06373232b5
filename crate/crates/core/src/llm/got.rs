//! Graph-of-Thought execution: a DAG of LLM calls where each node generates,
//! aggregates or refines the thoughts of its parents.
//!
//! File format: `{"nodes": [{"id", "transformation", "k"?, "prompt", "step"?}],
//! "edges": [[from, to], ..]}`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BackendError, ChatBackend, Message, CREATIVE_TEMPERATURE, JUDGE_TEMPERATURE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transformation {
    Generate,
    Aggregate,
    Refine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub transformation: Transformation,
    /// Number of outputs; only meaningful for generate nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub prompt: String,
    /// Free-form label for the transformation step this node belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
}

impl NodeSpec {
    /// Backend calls this node issues.
    pub fn calls(&self) -> usize {
        match self.transformation {
            Transformation::Generate => self.k.unwrap_or(1),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThoughtGraph {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<(String, String)>,
    /// Outputs per node id, filled by [`execute_got`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, Vec<String>>,
    /// Node ids in the order they were executed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNode(String),
    #[error("edge {0} -> {1} appears more than once")]
    DuplicateEdge(String, String),
    #[error("edge references unknown node {0}")]
    UnknownNode(String),
    #[error("graph has a cycle through {0}")]
    Cycle(String),
    #[error("aggregate node {id} has {parents} parent(s); it needs at least 2")]
    AggregateArity { id: String, parents: usize },
    #[error("refine node {id} has {parents} parent(s); it needs exactly 1")]
    RefineArity { id: String, parents: usize },
    #[error("generate node {0} must produce at least one output")]
    ZeroOutputs(String),
    #[error("invalid graph document: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GotError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("node {node}: {source}")]
    Backend { node: String, source: BackendError },
}

/// The bundled instrument-and-emotion graph (eleven nodes).
pub fn music_feedback_graph() -> ThoughtGraph {
    ThoughtGraph::from_json(include_str!("../../assets/music_feedback_got.json")).expect("bundled graph is valid")
}

impl ThoughtGraph {
    /// Parses and validates a graph document.
    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let g: ThoughtGraph = serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Parent ids of `id` in node-declaration order.
    pub fn parents(&self, id: &str) -> Vec<&str> {
        let set: HashSet<&str> = self.edges.iter().filter(|e| e.1 == id).map(|e| e.0.as_str()).collect();
        self.nodes.iter().map(|n| n.id.as_str()).filter(|n| set.contains(n)).collect()
    }

    /// Total backend calls a full execution issues.
    pub fn expected_calls(&self) -> usize {
        self.nodes.iter().map(NodeSpec::calls).sum()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        self.ranks().map(|_| ())
    }

    /// Groups node ids by longest distance from a root. Also validates.
    pub fn ranks(&self) -> Result<Vec<Vec<String>>, GraphError> {
        let mut index = HashMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(GraphError::DuplicateNode(n.id.clone()));
            }
        }
        let mut edge_set = HashSet::new();
        for (a, b) in &self.edges {
            if !edge_set.insert((a, b)) {
                return Err(GraphError::DuplicateEdge(a.clone(), b.clone()));
            }
            for id in [a, b] {
                if !index.contains_key(id.as_str()) {
                    return Err(GraphError::UnknownNode(id.clone()));
                }
            }
        }
        // Kahn's algorithm, tracking the longest path to each node.
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for (a, b) in &self.edges {
            let (a, b) = (index[a.as_str()], index[b.as_str()]);
            indegree[b] += 1;
            children[a].push(b);
        }
        let mut rank = vec![0usize; n];
        let mut remaining = indegree.clone();
        let mut queue: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = queue.pop() {
            seen += 1;
            for &c in &children[i] {
                rank[c] = rank[c].max(rank[i] + 1);
                remaining[c] -= 1;
                if remaining[c] == 0 {
                    queue.push(c);
                }
            }
        }
        if seen < n {
            let stuck = (0..n).find(|&i| remaining[i] > 0).unwrap();
            return Err(GraphError::Cycle(self.nodes[stuck].id.clone()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let parents = indegree[i];
            match node.transformation {
                Transformation::Aggregate if parents < 2 => {
                    return Err(GraphError::AggregateArity { id: node.id.clone(), parents })
                }
                Transformation::Refine if parents != 1 => {
                    return Err(GraphError::RefineArity { id: node.id.clone(), parents })
                }
                Transformation::Generate if node.k == Some(0) => return Err(GraphError::ZeroOutputs(node.id.clone())),
                _ => {}
            }
        }
        let depth = rank.iter().copied().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); depth];
        for (i, node) in self.nodes.iter().enumerate() {
            out[rank[i]].push(node.id.clone());
        }
        Ok(out)
    }

    /// The last rank's outputs joined, i.e. the graph's conclusion.
    pub fn conclusion(&self) -> Option<String> {
        let ranks = self.ranks().ok()?;
        let texts: Vec<&str> =
            ranks.last()?.iter().filter_map(|id| self.results.get(id)).flatten().map(String::as_str).collect();
        (!texts.is_empty()).then(|| texts.join("\n\n"))
    }

    fn node_prompt(&self, node: &NodeSpec, candidate: Option<(usize, usize)>) -> String {
        let verb = match node.transformation {
            Transformation::Generate => "generate",
            Transformation::Aggregate => "aggregate",
            Transformation::Refine => "refine",
        };
        let mut p = format!("[node {} | {verb}]\n{}", node.id, node.prompt.trim_end());
        if let Some((i, k)) = candidate {
            p.push_str(&format!("\nGive candidate {i} of {k}; make it distinct from the others."));
        }
        let parents = self.parents(&node.id);
        if !parents.is_empty() {
            p.push_str("\n\nInputs:");
            for pid in parents {
                let outs = &self.results[pid];
                for (j, text) in outs.iter().enumerate() {
                    if outs.len() == 1 {
                        p.push_str(&format!("\n--- {pid} ---\n"));
                    } else {
                        p.push_str(&format!("\n--- {pid} ({}/{}) ---\n", j + 1, outs.len()));
                    }
                    p.push_str(text.trim_end());
                }
            }
        }
        p
    }

    fn run_node(&self, node: &NodeSpec, context: &str, backend: &dyn ChatBackend) -> Result<Vec<String>, BackendError> {
        let system = Message::system(format!(
            "I am a music producer reasoning step by step about one track. Answer only the step you are given, \
in a short paragraph.\n\n{context}"
        ));
        match node.transformation {
            Transformation::Generate => {
                let k = node.k.unwrap_or(1);
                (1..=k)
                    .map(|i| {
                        let candidate = (k > 1).then_some((i, k));
                        let user = Message::user(self.node_prompt(node, candidate));
                        backend.send(&[system.clone(), user], CREATIVE_TEMPERATURE)
                    })
                    .collect()
            }
            _ => {
                let user = Message::user(self.node_prompt(node, None));
                Ok(vec![backend.send(&[system, user], JUDGE_TEMPERATURE)?])
            }
        }
    }
}

/// Executes every node once, rank by rank. Nodes within a rank run
/// concurrently; results do not depend on scheduling.
///
/// The graph is validated before any call. On a backend error the results of
/// every node that finished are kept in `graph`.
pub fn execute_got(graph: &mut ThoughtGraph, context: &str, backend: &dyn ChatBackend) -> Result<(), GotError> {
    let ranks = graph.ranks()?;
    graph.results.clear();
    graph.order.clear();
    for rank in ranks {
        let g = &*graph;
        let outcomes: Vec<(String, Result<Vec<String>, BackendError>)> = std::thread::scope(|s| {
            let handles: Vec<_> = rank
                .iter()
                .map(|id| {
                    let node = g.node(id).unwrap();
                    (id.clone(), s.spawn(move || g.run_node(node, context, backend)))
                })
                .collect();
            handles.into_iter().map(|(id, h)| (id, h.join().expect("node thread"))).collect()
        });
        let mut first_err = None;
        for (id, out) in outcomes {
            match out {
                Ok(texts) => {
                    graph.results.insert(id.clone(), texts);
                    graph.order.push(id);
                }
                Err(e) => {
                    first_err.get_or_insert(GotError::Backend { node: id, source: e });
                }
            }
        }
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    Ok(())
}
