//! Configuration-model multigraphs built by uniform stub pairing.
//!
//! Nodes and stubs are 0-based. Stubs of node `v` occupy the contiguous range
//! `first_stub(v) .. first_stub(v) + degree(v)`.

mod attach;
mod offspring;
mod truncate;

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::Rng;

use crate::degree::DegreeLaw;
use crate::error::{Error, Result};

pub use attach::{non_attachment_prob, non_attachment_prob_exact};
pub use offspring::{empirical_offspring, EmpiricalOffspring};
pub use truncate::{
    check_well_behaved, check_well_behaved_with_cap, degree_cap, truncate_graph, WellBehavedReport,
    DEFAULT_TRUNCATION_EPS,
};

/// Degrees of all nodes together with stub offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u64>,
    offsets: Vec<u64>,
    evenness_fixed: bool,
}

impl DegreeSequence {
    /// Wraps degrees as given. The stub count may be odd; [`pair_stubs`] rejects that.
    pub fn new(degrees: Vec<u64>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidArgument("degree sequence needs N >= 1".into()));
        }
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        let mut acc: u64 = 0;
        offsets.push(0);
        for &d in &degrees {
            acc = acc
                .checked_add(d)
                .ok_or_else(|| Error::InvalidArgument("stub count overflows u64".into()))?;
            offsets.push(acc);
        }
        Ok(DegreeSequence {
            degrees,
            offsets,
            evenness_fixed: false,
        })
    }

    /// Wraps degrees, adding one stub to the last node if the total is odd.
    pub fn with_evenness_fix(mut degrees: Vec<u64>) -> Result<Self> {
        let odd = degrees.iter().fold(0u64, |acc, d| acc ^ (d & 1)) == 1;
        if odd {
            if let Some(last) = degrees.last_mut() {
                *last += 1;
            }
        }
        let mut seq = Self::new(degrees)?;
        seq.evenness_fixed = odd;
        Ok(seq)
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    /// Total number of stubs `L_N`.
    pub fn total_stubs(&self) -> u64 {
        *self.offsets.last().expect("offsets are nonempty")
    }

    pub fn degree(&self, v: usize) -> u64 {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    pub fn max_degree(&self) -> u64 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Whether the last degree was incremented to make the stub count even.
    pub fn evenness_fixed(&self) -> bool {
        self.evenness_fixed
    }

    pub fn first_stub(&self, v: usize) -> u64 {
        self.offsets[v]
    }

    /// Node owning `stub`.
    pub fn owner(&self, stub: u64) -> usize {
        debug_assert!(stub < self.total_stubs());
        self.offsets.partition_point(|&o| o <= stub) - 1
    }

    /// One degree per line.
    pub fn write_degree_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for d in &self.degrees {
            writeln!(w, "{d}")?;
        }
        Ok(())
    }
}

/// `N` i.i.d. draws from `law`; if the sum is odd the last degree is incremented.
pub fn sample_degree_sequence<R: Rng + ?Sized>(law: &DegreeLaw, n: usize, rng: &mut R) -> Result<DegreeSequence> {
    if n == 0 {
        return Err(Error::InvalidArgument("degree sequence needs N >= 1".into()));
    }
    let degrees: Vec<u64> = (0..n).map(|_| law.sample(rng)).collect();
    DegreeSequence::with_evenness_fix(degrees)
}

/// A multigraph given by a perfect matching of stubs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubGraph {
    seq: DegreeSequence,
    partner: Vec<usize>,
    owner: Vec<usize>,
}

/// Uniform perfect matching of the stubs of `seq`.
///
/// Equivalent in law to pairing the first unmatched stub with a uniform
/// remaining stub until none are left.
pub fn pair_stubs<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<StubGraph> {
    let l = seq.total_stubs();
    if l % 2 == 1 {
        return Err(Error::OddStubCount(l));
    }
    let l = l as usize;
    let mut stubs: Vec<usize> = (0..l).collect();
    let mut partner = vec![0usize; l];
    let mut i = 0;
    while i < l {
        let j = rng.random_range(i + 1..l);
        stubs.swap(i + 1, j);
        let (a, b) = (stubs[i], stubs[i + 1]);
        partner[a] = b;
        partner[b] = a;
        i += 2;
    }
    Ok(StubGraph::assemble(seq.clone(), partner))
}

impl StubGraph {
    /// Graph from an explicit list of stub pairs covering every stub once.
    pub fn from_pairs(seq: DegreeSequence, pairs: &[(u64, u64)]) -> Result<Self> {
        let l = seq.total_stubs();
        if l % 2 == 1 {
            return Err(Error::OddStubCount(l));
        }
        let mut partner = vec![usize::MAX; l as usize];
        for &(a, b) in pairs {
            if a >= l || b >= l || a == b {
                return Err(Error::InvalidArgument(format!("invalid stub pair ({a}, {b})")));
            }
            let (a, b) = (a as usize, b as usize);
            if partner[a] != usize::MAX || partner[b] != usize::MAX {
                return Err(Error::InvalidArgument(format!("stub paired twice in ({a}, {b})")));
            }
            partner[a] = b;
            partner[b] = a;
        }
        if partner.iter().any(|&p| p == usize::MAX) {
            return Err(Error::InvalidArgument("pairing leaves stubs unmatched".into()));
        }
        Ok(Self::assemble(seq, partner))
    }

    fn assemble(seq: DegreeSequence, partner: Vec<usize>) -> Self {
        let mut owner = Vec::with_capacity(partner.len());
        for (v, &d) in seq.degrees.iter().enumerate() {
            owner.extend(std::iter::repeat(v).take(d as usize));
        }
        StubGraph { seq, partner, owner }
    }

    pub fn n(&self) -> usize {
        self.seq.n()
    }

    pub fn degree_sequence(&self) -> &DegreeSequence {
        &self.seq
    }

    pub fn total_stubs(&self) -> usize {
        self.partner.len()
    }

    pub fn edge_count(&self) -> usize {
        self.partner.len() / 2
    }

    pub fn partner(&self, stub: usize) -> usize {
        self.partner[stub]
    }

    pub fn owner(&self, stub: usize) -> usize {
        self.owner[stub]
    }

    pub fn stubs_of(&self, v: usize) -> std::ops::Range<usize> {
        let start = self.seq.first_stub(v) as usize;
        start..start + self.seq.degree(v) as usize
    }

    /// Each edge once, as a pair of node indices.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.partner
            .iter()
            .enumerate()
            .filter(|(s, &t)| *s < t)
            .map(|(s, &t)| (self.owner[s], self.owner[t]))
    }

    /// Neighbors of `v` with multiplicity, self-loops included.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.stubs_of(v).map(|s| self.owner[self.partner[s]])
    }

    /// Edge list with 1-indexed nodes, one `u v` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{} {}", u + 1, v + 1)?;
        }
        Ok(())
    }
}

/// Graph distance between `u` and `v`, or `None` when they are disconnected.
pub fn hopcount(g: &StubGraph, u: usize, v: usize) -> Option<u64> {
    if u == v {
        return Some(0);
    }
    let mut dist = vec![u64::MAX; g.n()];
    dist[u] = 0;
    let mut queue = VecDeque::from([u]);
    while let Some(x) = queue.pop_front() {
        for y in g.neighbors(x) {
            if dist[y] == u64::MAX {
                dist[y] = dist[x] + 1;
                if y == v {
                    return Some(dist[y]);
                }
                queue.push_back(y);
            }
        }
    }
    None
}

/// Distances from `root` to all nodes, `None` for unreachable ones.
pub fn distances_from(g: &StubGraph, root: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; g.n()];
    dist[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        let dx = dist[x].expect("queued nodes have a distance");
        for y in g.neighbors(x) {
            if dist[y].is_none() {
                dist[y] = Some(dx + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Component sizes of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    /// Sizes in descending order.
    pub sizes: Vec<usize>,
    pub largest_fraction: f64,
    /// Zero when the graph is connected.
    pub second_largest: usize,
}

impl ComponentSummary {
    fn from_sizes(mut sizes: Vec<usize>, n: usize) -> Self {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        ComponentSummary {
            largest_fraction: sizes.first().copied().unwrap_or(0) as f64 / n as f64,
            second_largest: sizes.get(1).copied().unwrap_or(0),
            sizes,
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

/// Exact component sizes via union-find.
pub fn components(g: &StubGraph) -> ComponentSummary {
    let n = g.n();
    let mut uf = UnionFind::new(n);
    for (u, v) in g.edges() {
        uf.union(u, v);
    }
    let roots: Vec<usize> = (0..n).filter(|&v| uf.find(v) == v).collect();
    let sizes = roots.iter().map(|&v| uf.size[v]).collect();
    ComponentSummary::from_sizes(sizes, n)
}

/// Component sizes by repeated BFS; slower, used to cross-check [`components`].
pub fn components_bfs(g: &StubGraph) -> ComponentSummary {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut size = 0;
        while let Some(x) = queue.pop_front() {
            size += 1;
            for y in g.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        sizes.push(size);
    }
    ComponentSummary::from_sizes(sizes, n)
}
