//! Partially directed acyclic graphs over `0..n`.
//!
//! Stored as a mark matrix: `i -> j` is `mark(i, j) && !mark(j, i)`, and
//! `i - j` is both marks set.

use std::collections::{BTreeSet, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pdag {
    n: usize,
    marks: Vec<bool>,
}

impl Pdag {
    pub fn new(n: usize) -> Self {
        Self { n, marks: vec![false; n * n] }
    }

    /// Reads an adjacency matrix where a nonzero `[i][j]` means a mark from
    /// `i` to `j`.
    pub fn from_adjacency(adj: &[Vec<i64>]) -> Option<Self> {
        let n = adj.len();
        let mut g = Self::new(n);
        for (i, row) in adj.iter().enumerate() {
            if row.len() != n || row[i] != 0 {
                return None;
            }
            for (j, &v) in row.iter().enumerate() {
                g.marks[i * n + j] = v != 0;
            }
        }
        Some(g)
    }

    pub fn to_adjacency(&self) -> Vec<Vec<i64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| i64::from(self.mark(i, j))).collect())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn mark(&self, i: usize, j: usize) -> bool {
        self.marks[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: bool) {
        self.marks[i * self.n + j] = v;
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) || self.mark(j, i)
    }

    pub fn directed(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) && !self.mark(j, i)
    }

    pub fn undirected(&self, i: usize, j: usize) -> bool {
        self.mark(i, j) && self.mark(j, i)
    }

    pub fn add_directed(&mut self, i: usize, j: usize) {
        self.set(i, j, true);
        self.set(j, i, false);
    }

    pub fn add_undirected(&mut self, i: usize, j: usize) {
        self.set(i, j, true);
        self.set(j, i, true);
    }

    pub fn remove(&mut self, i: usize, j: usize) {
        self.set(i, j, false);
        self.set(j, i, false);
    }

    pub fn parents(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&u| self.directed(u, v)).collect()
    }

    pub fn children(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&u| self.directed(v, u)).collect()
    }

    /// Undirected neighbours.
    pub fn neighbors(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&u| self.undirected(v, u)).collect()
    }

    pub fn adjacents(&self, v: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&u| u != v && self.adjacent(v, u)).collect()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacent(i, j))
            .count()
    }

    pub fn is_clique(&self, nodes: &BTreeSet<usize>) -> bool {
        let v: Vec<usize> = nodes.iter().copied().collect();
        v.iter()
            .enumerate()
            .all(|(k, &a)| v[k + 1..].iter().all(|&b| self.adjacent(a, b)))
    }

    /// True if a directed path `from ~> to` exists.
    pub fn has_directed_path(&self, from: usize, to: usize) -> bool {
        self.reaches(from, to, &BTreeSet::new(), false)
    }

    /// True if a path from `from` to `to` exists whose edges are undirected or
    /// point forward, avoiding `blocked`.
    pub fn has_semi_directed_path(&self, from: usize, to: usize, blocked: &BTreeSet<usize>) -> bool {
        self.reaches(from, to, blocked, true)
    }

    fn reaches(&self, from: usize, to: usize, blocked: &BTreeSet<usize>, allow_undirected: bool) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            for w in 0..self.n {
                let step = if allow_undirected { self.mark(u, w) } else { self.directed(u, w) };
                if !step || seen[w] {
                    continue;
                }
                if w == to {
                    return true;
                }
                if !blocked.contains(&w) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Orients `i - j` as `i -> j` unless that closes a directed cycle.
    pub fn orient(&mut self, i: usize, j: usize) -> bool {
        if !self.undirected(i, j) || self.has_directed_path(j, i) {
            return false;
        }
        self.add_directed(i, j);
        true
    }

    /// Applies Meek's rules 1-4 until no undirected edge can be oriented.
    /// Directed edges are never changed.
    pub fn meek_closure(&mut self) {
        loop {
            let mut changed = false;
            for a in 0..self.n {
                for b in 0..self.n {
                    if a != b && self.undirected(a, b) && self.meek_orients(a, b) && self.orient(a, b) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Whether some Meek rule forces `a - b` into `a -> b`.
    fn meek_orients(&self, a: usize, b: usize) -> bool {
        let n = self.n;
        // R1: c -> a - b, c and b non-adjacent
        if (0..n).any(|c| c != b && self.directed(c, a) && !self.adjacent(c, b)) {
            return true;
        }
        // R2: a -> c -> b
        if (0..n).any(|c| self.directed(a, c) && self.directed(c, b)) {
            return true;
        }
        // R3: a - c -> b, a - d -> b, c and d non-adjacent
        let kites: Vec<usize> = (0..n)
            .filter(|&c| c != b && self.undirected(a, c) && self.directed(c, b))
            .collect();
        for (k, &c) in kites.iter().enumerate() {
            if kites[k + 1..].iter().any(|&d| !self.adjacent(c, d)) {
                return true;
            }
        }
        // R4: a - d -> c -> b, a adjacent to c, d and b non-adjacent
        for c in 0..n {
            if c == a || !self.directed(c, b) || !self.adjacent(a, c) {
                continue;
            }
            if (0..n).any(|d| d != b && self.undirected(a, d) && self.directed(d, c) && !self.adjacent(d, b)) {
                return true;
            }
        }
        false
    }

    /// A DAG in the class represented by this PDAG (Dor and Tarsi), or `None`
    /// when no consistent extension exists.
    pub fn dag_extension(&self) -> Option<Pdag> {
        let mut work = self.clone();
        let mut out = self.clone();
        let mut alive: BTreeSet<usize> = (0..self.n).collect();
        while !alive.is_empty() {
            let sink = alive.iter().copied().find(|&x| {
                if !work.children(x).is_empty() {
                    return false;
                }
                let adj = work.adjacents(x);
                work.neighbors(x)
                    .iter()
                    .all(|&y| adj.iter().all(|&z| z == y || work.adjacent(y, z)))
            })?;
            for y in work.neighbors(sink) {
                out.add_directed(y, sink);
            }
            for y in work.adjacents(sink) {
                work.remove(y, sink);
            }
            alive.remove(&sink);
        }
        Some(out)
    }

    /// The completed PDAG of a DAG: its skeleton with v-structures directed,
    /// closed under Meek's rules.
    pub fn cpdag_of_dag(dag: &Pdag) -> Pdag {
        let n = dag.n;
        let mut g = Pdag::new(n);
        for i in 0..n {
            for j in 0..n {
                if dag.directed(i, j) {
                    g.add_undirected(i, j);
                }
            }
        }
        for c in 0..n {
            let pa: Vec<usize> = dag.parents(c).into_iter().collect();
            for (k, &a) in pa.iter().enumerate() {
                for &b in &pa[k + 1..] {
                    if !dag.adjacent(a, b) {
                        g.add_directed(a, c);
                        g.add_directed(b, c);
                    }
                }
            }
        }
        g.meek_closure();
        g
    }

    /// Extension followed by completion; `None` if no extension exists.
    pub fn to_cpdag(&self) -> Option<Pdag> {
        self.dag_extension().map(|d| Pdag::cpdag_of_dag(&d))
    }

    pub fn is_dag(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| !self.undirected(i, j)))
            && (0..self.n).all(|i| !self.children(i).iter().any(|&c| self.has_directed_path(c, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(n: usize, edges: &[(usize, usize)]) -> Pdag {
        let mut g = Pdag::new(n);
        for &(a, b) in edges {
            g.add_directed(a, b);
        }
        g
    }

    #[test]
    fn chain_is_fully_undirected() {
        let c = Pdag::cpdag_of_dag(&dag(3, &[(0, 1), (1, 2)]));
        assert!(c.undirected(0, 1) && c.undirected(1, 2));
        assert!(!c.adjacent(0, 2));
    }

    #[test]
    fn collider_and_r1() {
        // 0 -> 2 <- 1, 2 -> 3: collider plus R1 propagation
        let c = Pdag::cpdag_of_dag(&dag(4, &[(0, 2), (1, 2), (2, 3)]));
        assert!(c.directed(0, 2) && c.directed(1, 2) && c.directed(2, 3));
    }

    #[test]
    fn r2_orients_shortcut() {
        let mut g = Pdag::new(3);
        g.add_directed(0, 1);
        g.add_directed(1, 2);
        g.add_undirected(0, 2);
        g.meek_closure();
        assert!(g.directed(0, 2));
    }

    #[test]
    fn r3_kite() {
        // a=0 undirected to 1,2,3; 1 -> 3 <- 2; 1,2 non-adjacent
        let mut g = Pdag::new(4);
        g.add_undirected(0, 1);
        g.add_undirected(0, 2);
        g.add_undirected(0, 3);
        g.add_directed(1, 3);
        g.add_directed(2, 3);
        g.meek_closure();
        assert!(g.directed(0, 3));
        assert!(g.undirected(0, 1) && g.undirected(0, 2));
    }

    #[test]
    fn extension_round_trip() {
        let d = dag(5, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]);
        let c = Pdag::cpdag_of_dag(&d);
        let ext = c.dag_extension().unwrap();
        assert!(ext.is_dag());
        assert_eq!(Pdag::cpdag_of_dag(&ext), c);
        assert_eq!(c.to_cpdag().unwrap(), c);
    }

    #[test]
    fn no_extension_for_undirected_four_cycle() {
        let mut g = Pdag::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            g.add_undirected(a, b);
        }
        assert!(g.dag_extension().is_none());
    }

    #[test]
    fn orient_refuses_cycles() {
        let mut g = Pdag::new(3);
        g.add_directed(0, 1);
        g.add_directed(1, 2);
        g.add_undirected(2, 0);
        assert!(!g.orient(2, 0));
        assert!(g.orient(0, 2));
    }
}
