use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("missing `nodes N` header")]
    MissingHeader,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: node {node} out of range (graph has {nodes} nodes)")]
    OutOfRange { line: usize, node: u32, nodes: u32 },
}

/// Directed graph with nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: u32,
    edges: Vec<(u32, u32)>,
    /// Adjacency in CSR form, built from `edges`.
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    pub fn new(node_count: u32, edges: Vec<(u32, u32)>) -> Result<Self, GraphError> {
        for (i, &(u, v)) in edges.iter().enumerate() {
            for node in [u, v] {
                if node >= node_count {
                    return Err(GraphError::OutOfRange {
                        line: i + 2,
                        node,
                        nodes: node_count,
                    });
                }
            }
        }
        let mut offsets = vec![0usize; node_count as usize + 1];
        for &(u, _) in &edges {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..node_count as usize {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; edges.len()];
        for &(u, v) in &edges {
            targets[fill[u as usize]] = v;
            fill[u as usize] += 1;
        }
        Ok(Graph {
            node_count,
            edges,
            offsets,
            targets,
        })
    }

    /// `side x side` grid, each node linked both ways to its 4 neighbours.
    pub fn grid(side: u32) -> Self {
        let id = |r: u32, c: u32| r * side + c;
        let mut edges = Vec::new();
        for r in 0..side {
            for c in 0..side {
                if c + 1 < side {
                    edges.push((id(r, c), id(r, c + 1)));
                    edges.push((id(r, c + 1), id(r, c)));
                }
                if r + 1 < side {
                    edges.push((id(r, c), id(r + 1, c)));
                    edges.push((id(r + 1, c), id(r, c)));
                }
            }
        }
        Graph::new(side * side, edges).expect("grid edges in range")
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn successors(&self, node: u32) -> &[u32] {
        let n = node as usize;
        &self.targets[self.offsets[n]..self.offsets[n + 1]]
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("nodes {}\n", self.node_count);
        for (u, v) in &self.edges {
            writeln!(s, "{u} {v}").unwrap();
        }
        s
    }
}

impl FromStr for Graph {
    type Err = GraphError;

    /// First line `nodes N`, then one `u v` edge per line. Blank lines and
    /// lines starting with `#` are skipped.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(GraphError::MissingHeader)?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("nodes") {
            return Err(GraphError::MissingHeader);
        }
        let nodes: u32 = parts
            .next()
            .and_then(|n| n.parse().ok())
            .filter(|_| parts.next().is_none())
            .ok_or_else(|| GraphError::Syntax {
                line: hline,
                msg: format!("bad header `{header}`"),
            })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let nums: Vec<&str> = l.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<u32>().map_err(|_| GraphError::Syntax {
                    line,
                    msg: format!("bad node id `{s}`"),
                })
            };
            if nums.len() != 2 {
                return Err(GraphError::Syntax {
                    line,
                    msg: format!("expected `u v`, got `{l}`"),
                });
            }
            let (u, v) = (parse(nums[0])?, parse(nums[1])?);
            for node in [u, v] {
                if node >= nodes {
                    return Err(GraphError::OutOfRange { line, node, nodes });
                }
            }
            edges.push((u, v));
        }
        Graph::new(nodes, edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_text() {
        let g: Graph = "nodes 3\n0 1\n# comment\n1 2\n\n".parse().unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.successors(1), &[2]);
        assert_eq!(g.successors(2), &[] as &[u32]);
        assert_eq!(g.to_text().parse::<Graph>().unwrap(), g);
    }

    #[test]
    fn parse_errors() {
        assert_eq!("".parse::<Graph>(), Err(GraphError::MissingHeader));
        assert_eq!("0 1".parse::<Graph>(), Err(GraphError::MissingHeader));
        assert!(matches!(
            "nodes 2\n0 x".parse::<Graph>(),
            Err(GraphError::Syntax { line: 2, .. })
        ));
        assert_eq!(
            "nodes 2\n0 2".parse::<Graph>(),
            Err(GraphError::OutOfRange {
                line: 2,
                node: 2,
                nodes: 2
            })
        );
    }

    #[test]
    fn grid_edges() {
        let g = Graph::grid(4);
        assert_eq!(g.node_count(), 16);
        // 2 * (3 horizontal + 3 vertical) * 4 rows/cols
        assert_eq!(g.edges().len(), 48);
        assert_eq!(g.successors(0).len(), 2);
        assert_eq!(g.successors(5).len(), 4);
    }
}
