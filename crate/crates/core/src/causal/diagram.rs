use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::{vars, Error, Result};

/// A directed acyclic graph over named nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(try_from = "DiagramRepr", into = "DiagramRepr")
)]
pub struct CausalDiagram {
    nodes: Vec<String>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramRepr {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

#[cfg(feature = "serde")]
impl TryFrom<DiagramRepr> for CausalDiagram {
    type Error = Error;
    fn try_from(r: DiagramRepr) -> Result<Self> {
        let edges: Vec<(&str, &str)> = r.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let nodes: Vec<&str> = r.nodes.iter().map(String::as_str).collect();
        CausalDiagram::new(&nodes, &edges)
    }
}

#[cfg(feature = "serde")]
impl From<CausalDiagram> for DiagramRepr {
    fn from(d: CausalDiagram) -> Self {
        let edges = d
            .edges
            .iter()
            .map(|&(p, c)| (d.nodes[p].clone(), d.nodes[c].clone()))
            .collect();
        DiagramRepr { nodes: d.nodes, edges }
    }
}

impl CausalDiagram {
    /// Build a diagram; rejects unknown endpoints, duplicate nodes and cycles.
    pub fn new(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].contains(n) {
                return Err(Error::Model(format!("node `{n}` listed twice")));
            }
        }
        let find = |name: &str| {
            nodes
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::UnknownName(name.to_string()))
        };
        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        let mut edge_ids = Vec::with_capacity(edges.len());
        for &(p, c) in edges {
            let (p, c) = (find(p)?, find(c)?);
            if !children[p].contains(&c) {
                children[p].push(c);
                parents[c].push(p);
                edge_ids.push((p, c));
            }
        }
        let d = CausalDiagram {
            nodes: nodes.iter().map(|n| n.to_string()).collect(),
            edges: edge_ids,
            parents,
            children,
        };
        if d.topological_order().is_none() {
            return Err(Error::Model("diagram contains a cycle".into()));
        }
        Ok(d)
    }

    /// The E-SSL generative diagram: `C, S, Abar -> Xbar`, `Xbar, A -> X`, `X -> Z`.
    pub fn essl() -> Self {
        use vars::*;
        CausalDiagram::new(
            &[CLASS, STYLE, POSE, RAW, ACTION, OBSERVED, REPR],
            &[
                (CLASS, RAW),
                (STYLE, RAW),
                (POSE, RAW),
                (RAW, OBSERVED),
                (ACTION, OBSERVED),
                (OBSERVED, REPR),
            ],
        )
        .expect("static diagram is acyclic")
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    /// Edges as (parent, child) names.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(p, c)| (self.nodes[p].as_str(), self.nodes[c].as_str()))
    }

    pub fn node_index(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }

    pub fn parents_of(&self, name: &str) -> Result<Vec<&str>> {
        let i = self.node_index(name)?;
        Ok(self.parents[i].iter().map(|&p| self.nodes[p].as_str()).collect())
    }

    fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in &self.children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.node_index(n)).collect()
    }

    /// Is `x` d-separated from `y` given `z`?
    ///
    /// Reachability ("Bayes-ball") search over (node, direction) pairs. A
    /// collider passes the ball only when it or one of its descendants is
    /// in `z`.
    pub fn d_separated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool> {
        let (xs, ys, zs) = (self.resolve(x)?, self.resolve(y)?, self.resolve(z)?);
        for (i, a) in xs.iter().chain(&ys).chain(&zs).enumerate() {
            if xs.iter().chain(&ys).chain(&zs).take(i).any(|b| b == a) {
                return Err(Error::Usage(format!(
                    "node `{}` appears in more than one set",
                    self.nodes[*a]
                )));
            }
        }
        let n = self.nodes.len();
        let mut observed = vec![false; n];
        for &v in &zs {
            observed[v] = true;
        }
        // z together with all its ancestors
        let mut anc = observed.clone();
        let mut stack = zs.clone();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }

        // direction: false = arrived from a child (moving up), true = from a parent
        let mut visited = vec![[false; 2]; n];
        let mut reachable = vec![false; n];
        let mut queue: VecDeque<(usize, bool)> = xs.iter().map(|&v| (v, false)).collect();
        while let Some((v, down)) = queue.pop_front() {
            if visited[v][down as usize] {
                continue;
            }
            visited[v][down as usize] = true;
            if !observed[v] {
                reachable[v] = true;
            }
            if !down {
                if !observed[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, false)));
                    queue.extend(self.children[v].iter().map(|&c| (c, true)));
                }
            } else {
                if !observed[v] {
                    queue.extend(self.children[v].iter().map(|&c| (c, true)));
                }
                if anc[v] {
                    queue.extend(self.parents[v].iter().map(|&p| (p, false)));
                }
            }
        }
        Ok(!ys.iter().any(|&v| reachable[v]))
    }
}
