use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatroidError {
    #[error("edge {edge} references vertex {vertex}, but the graph has {vertices} vertices")]
    VertexOutOfRange { edge: usize, vertex: usize, vertices: usize },
    #[error("edge {edge} references {side} node {node} (size {size})")]
    BipartiteOutOfRange { edge: usize, side: &'static str, node: usize, size: usize },
    #[error("uniform matroid rank {rank} exceeds ground set size {n}")]
    RankTooLarge { rank: usize, n: usize },
    #[error("matroid axiom violated: {0}")]
    Axiom(String),
}

/// Independence oracle over the ground set `0..ground_size()`.
pub trait Matroid: Send + Sync {
    fn ground_size(&self) -> usize;

    /// `set` holds distinct ground-set elements in any order.
    fn is_independent(&self, set: &[usize]) -> bool;
}

/// Edges of a multigraph; a set is independent iff it is a forest.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicMatroid {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphicMatroid {
    pub fn new(edges: Vec<(usize, usize)>) -> Self {
        let vertices = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self { vertices, edges }
    }

    pub fn with_vertices(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, MatroidError> {
        for (edge, &(u, v)) in edges.iter().enumerate() {
            for vertex in [u, v] {
                if vertex >= vertices {
                    return Err(MatroidError::VertexOutOfRange { edge, vertex, vertices });
                }
            }
        }
        Ok(Self { vertices, edges })
    }

    /// The graphic matroid of a triangle: any two edges are independent, all three are not.
    pub fn triangle() -> Self {
        Self::new(vec![(0, 1), (1, 2), (0, 2)])
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Matroid for GraphicMatroid {
    fn ground_size(&self) -> usize {
        self.edges.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        let mut parent: Vec<usize> = (0..self.vertices).collect();
        for &e in set {
            let (u, v) = self.edges[e];
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
        }
        true
    }
}

/// Left nodes of a bipartite graph; a set is independent iff it can be matched into the
/// right side.
#[derive(Debug, Clone, PartialEq)]
pub struct TransversalMatroid {
    right: usize,
    adj: Vec<Vec<usize>>,
}

impl TransversalMatroid {
    pub fn new(left: usize, right: usize, edges: &[(usize, usize)]) -> Result<Self, MatroidError> {
        let mut adj = vec![Vec::new(); left];
        for (edge, &(l, r)) in edges.iter().enumerate() {
            if l >= left {
                return Err(MatroidError::BipartiteOutOfRange { edge, side: "left", node: l, size: left });
            }
            if r >= right {
                return Err(MatroidError::BipartiteOutOfRange { edge, side: "right", node: r, size: right });
            }
            if !adj[l].contains(&r) {
                adj[l].push(r);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Self { right, adj })
    }

    /// Right-side nodes adjacent to a left node.
    pub fn neighbours(&self, left: usize) -> &[usize] {
        &self.adj[left]
    }

    pub fn right_size(&self) -> usize {
        self.right
    }
}

fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for &r in &adj[u] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if owner[r].map_or(true, |w| augment(w, adj, seen, owner)) {
            owner[r] = Some(u);
            return true;
        }
    }
    false
}

impl Matroid for TransversalMatroid {
    fn ground_size(&self) -> usize {
        self.adj.len()
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        if set.len() > self.right {
            return false;
        }
        let mut owner = vec![None; self.right];
        let mut seen = vec![false; self.right];
        set.iter().all(|&u| {
            seen.iter_mut().for_each(|s| *s = false);
            augment(u, &self.adj, &mut seen, &mut owner)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMatroid {
    n: usize,
    rank: usize,
}

impl UniformMatroid {
    pub fn new(n: usize, rank: usize) -> Result<Self, MatroidError> {
        if rank > n {
            return Err(MatroidError::RankTooLarge { rank, n });
        }
        Ok(Self { n, rank })
    }
}

impl Matroid for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        set.len() <= self.rank
    }
}

/// A set system given by its maximal sets: a set is independent iff it lies inside one of
/// `bases`. Nothing forces the exchange axiom, so descriptions should pass
/// [`check_axioms`] before use.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMatroid {
    n: usize,
    bases: Vec<u32>,
}

impl ExplicitMatroid {
    /// At most 32 elements.
    pub fn from_bases(n: usize, bases: &[Vec<usize>]) -> Result<Self, MatroidError> {
        if n > 32 {
            return Err(MatroidError::Axiom(format!("explicit matroids hold at most 32 elements, got {n}")));
        }
        let mut masks = Vec::with_capacity(bases.len());
        for (k, b) in bases.iter().enumerate() {
            let mut mask = 0u32;
            for &e in b {
                if e >= n {
                    return Err(MatroidError::Axiom(format!("basis {k} names element {e} outside the ground set of {n}")));
                }
                mask |= 1 << e;
            }
            masks.push(mask);
        }
        Ok(Self { n, bases: masks })
    }
}

impl Matroid for ExplicitMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        let mask = set.iter().fold(0u32, |m, &e| m | 1 << e);
        set.is_empty() || self.bases.iter().any(|&b| mask & !b == 0)
    }
}

/// The concrete matroids a scenario can describe.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatroid {
    Graphic(GraphicMatroid),
    Transversal(TransversalMatroid),
    Uniform(UniformMatroid),
    Explicit(ExplicitMatroid),
}

impl Matroid for AnyMatroid {
    fn ground_size(&self) -> usize {
        match self {
            AnyMatroid::Graphic(m) => m.ground_size(),
            AnyMatroid::Transversal(m) => m.ground_size(),
            AnyMatroid::Uniform(m) => m.ground_size(),
            AnyMatroid::Explicit(m) => m.ground_size(),
        }
    }

    fn is_independent(&self, set: &[usize]) -> bool {
        match self {
            AnyMatroid::Graphic(m) => m.is_independent(set),
            AnyMatroid::Transversal(m) => m.is_independent(set),
            AnyMatroid::Uniform(m) => m.is_independent(set),
            AnyMatroid::Explicit(m) => m.is_independent(set),
        }
    }
}

/// Size of a largest independent subset of `set`, by greedy insertion.
pub fn rank<M: Matroid + ?Sized>(m: &M, set: &[usize]) -> usize {
    let mut kept: Vec<usize> = Vec::with_capacity(set.len());
    for &e in set {
        kept.push(e);
        if !m.is_independent(&kept) {
            kept.pop();
        }
    }
    kept.len()
}

pub fn full_rank<M: Matroid + ?Sized>(m: &M) -> usize {
    let all: Vec<usize> = (0..m.ground_size()).collect();
    rank(m, &all)
}

/// Maximum-weight basis by the matroid greedy algorithm. Elements are scanned by
/// decreasing weight, ties by lowest index. Returned sorted ascending.
pub fn greedy_max_basis<M: Matroid + ?Sized>(m: &M, weights: &[f64]) -> Vec<usize> {
    assert_eq!(weights.len(), m.ground_size(), "one weight per element");
    let mut order: Vec<usize> = (0..m.ground_size()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut basis = Vec::new();
    for e in order {
        basis.push(e);
        if !m.is_independent(&basis) {
            basis.pop();
        }
    }
    basis.sort_unstable();
    basis
}

fn subset(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

/// Checks the independence axioms. Exhaustive over all subsets when the ground set is at
/// most `exhaustive_limit` elements; exchange is checked on every pair of independent
/// sets up to `exchange_pairs` pairs (scanned in a fixed order).
pub fn check_axioms<M: Matroid + ?Sized>(m: &M, exhaustive_limit: usize, exchange_pairs: usize) -> Result<(), MatroidError> {
    let n = m.ground_size();
    if n > exhaustive_limit || n > 20 {
        return Ok(());
    }
    if !m.is_independent(&[]) {
        return Err(MatroidError::Axiom("empty set is dependent".into()));
    }
    let total = 1u32 << n;
    let indep: Vec<bool> = (0..total).map(|mask| m.is_independent(&subset(mask))).collect();
    for mask in 0..total {
        if !indep[mask as usize] {
            continue;
        }
        for b in 0..n {
            let smaller = mask & !(1 << b);
            if smaller != mask && !indep[smaller as usize] {
                return Err(MatroidError::Axiom(format!("subset {:?} of independent {:?} is dependent", subset(smaller), subset(mask))));
            }
        }
    }
    let independents: Vec<u32> = (0..total).filter(|&k| indep[k as usize]).collect();
    let mut checked = 0usize;
    'outer: for &a in &independents {
        for &b in &independents {
            if a.count_ones() >= b.count_ones() {
                continue;
            }
            checked += 1;
            if checked > exchange_pairs {
                break 'outer;
            }
            let ok = (0..n).any(|e| b & (1 << e) != 0 && a & (1 << e) == 0 && indep[(a | (1 << e)) as usize]);
            if !ok {
                return Err(MatroidError::Axiom(format!("no exchange from {:?} into {:?}", subset(b), subset(a))));
            }
        }
    }
    Ok(())
}
