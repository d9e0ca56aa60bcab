//! Deterministic generators for the evaluation topologies.
//!
//! All generators consume the supplied RNG in a fixed order, so a seeded RNG
//! reproduces the same graph.

use std::collections::{BTreeSet, HashSet};
use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph on nodes `0..n`. Edges are stored as `(u, v)` with
/// `u < v`, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) outside 0..{n}"
                )));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u}, {v})")));
            }
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Component sizes, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(u, v) in &self.edges {
            let (a, b) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
            if a != b {
                parent[a] = b;
            }
        }
        let mut sizes = vec![0; self.n];
        for x in 0..self.n {
            let r = find(&mut parent, x);
            sizes[r] += 1;
        }
        let mut sizes: Vec<_> = sizes.into_iter().filter(|&s| s > 0).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn is_connected(&self) -> bool {
        self.component_sizes().len() <= 1
    }

    /// Writes one `u v` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

/// G(n, p): each pair `u < v`, in lexicographic order, is an edge with
/// probability `p`.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidInput("graph needs at least one node".into()));
    }
    check_probability(p)?;
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph { n, edges })
}

/// Small-world graph: ring lattice where every node links to its `k/2`
/// successors, then each lattice edge `(u, u + j)` is rewired with probability
/// `p` to `(u, w)`, `w` uniform over nodes not adjacent to `u`.
///
/// Edges are visited node by node, offsets `1..=k/2` within a node. Rewiring
/// keeps the edge count at `n * k / 2`.
pub fn watts_strogatz<R: Rng + ?Sized>(n: usize, k: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "lattice degree k={k} must be even and >= 2"
        )));
    }
    if n <= k {
        return Err(Error::InvalidInput(format!("need n > k, got n={n} k={k}")));
    }
    check_probability(p)?;
    let mut adj: Vec<HashSet<u32>> = vec![HashSet::new(); n];
    let link = |adj: &mut Vec<HashSet<u32>>, a: usize, b: usize| {
        adj[a].insert(b as u32);
        adj[b].insert(a as u32);
    };
    for u in 0..n {
        for j in 1..=k / 2 {
            link(&mut adj, u, (u + j) % n);
        }
    }
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            if !rng.gen_bool(p) {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&(w as u32)) {
                    break w;
                }
            };
            adj[u].remove(&(v as u32));
            adj[v].remove(&(u as u32));
            link(&mut adj, u, w);
        }
    }
    let edges = adj.iter().enumerate().flat_map(|(u, ns)| {
        ns.iter()
            .filter(move |&&v| v as usize > u)
            .map(move |&v| (u as u32, v))
    });
    Graph::from_edges(n, edges)
}

/// Preferential attachment starting from `m` isolated nodes. Each arriving
/// node links to `m` distinct existing nodes drawn with probability
/// proportional to degree (uniformly while all degrees are zero), giving
/// exactly `m * (n - m)` edges.
pub fn barabasi_albert<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    if m < 1 || n <= m {
        return Err(Error::InvalidInput(format!(
            "need n > m >= 1, got n={n} m={m}"
        )));
    }
    let mut edges = Vec::with_capacity(m * (n - m));
    // each node appears once per incident edge endpoint
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * m * (n - m));
    let mut targets = Vec::with_capacity(m);
    for new in m..n {
        targets.clear();
        while targets.len() < m {
            let t = if endpoints.is_empty() {
                rng.gen_range(0..new) as u32
            } else {
                endpoints[rng.gen_range(0..endpoints.len())]
            };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new as u32));
            endpoints.push(t);
            endpoints.push(new as u32);
        }
    }
    Graph::from_edges(n, edges)
}

pub fn complete(n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidInput("graph needs at least one node".into()));
    }
    let edges = (0..n as u32).flat_map(|u| (u + 1..n as u32).map(move |v| (u, v)));
    Ok(Graph {
        n,
        edges: edges.collect(),
    })
}
