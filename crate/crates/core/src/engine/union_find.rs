//! Union-find by size together with a proof forest recording why each pair
//! of classes was merged.

/// Disjoint sets over `0..n`. Roots are chosen by size, ties broken towards
/// the smaller index, so the structure is deterministic.
#[derive(Clone, Debug, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        id
    }

    pub fn find(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    pub fn same(&self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }

    /// Merges the sets of `a` and `b`; returns `(root, absorbed)` when they
    /// were distinct.
    pub fn union(&mut self, a: u32, b: u32) -> Option<(u32, u32)> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (sa, sb) = (self.size[ra as usize], self.size[rb as usize]);
        let (root, child) = if sa > sb || (sa == sb && ra < rb) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[child as usize] = root;
        self.size[root as usize] = sa + sb;
        Some((root, child))
    }
}

/// A spanning forest of the merge graph. Each edge points at the log entry
/// that justified it.
#[derive(Clone, Debug, Default)]
pub struct ProofForest {
    parent: Vec<Option<(u32, usize)>>,
}

impl ProofForest {
    pub fn push(&mut self) {
        self.parent.push(None);
    }

    /// Adds the edge `a -- b` labelled by log entry `label`. The two nodes
    /// must lie in different trees.
    pub fn connect(&mut self, a: u32, b: u32, label: usize) {
        self.reroot(a);
        self.parent[a as usize] = Some((b, label));
    }

    fn reroot(&mut self, x: u32) {
        let mut cur = x;
        let mut prev: Option<(u32, usize)> = None;
        loop {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = prev;
            match next {
                None => break,
                Some((p, label)) => {
                    prev = Some((cur, label));
                    cur = p;
                }
            }
        }
    }

    fn path_to_root(&self, x: u32) -> Vec<(u32, Option<(u32, usize)>)> {
        let mut out = Vec::new();
        let mut cur = x;
        loop {
            let up = self.parent[cur as usize];
            out.push((cur, up));
            match up {
                None => return out,
                Some((p, _)) => cur = p,
            }
        }
    }

    /// The edges on the forest path from `x` to `y` as `(from, to, label)`,
    /// or `None` if they lie in different trees.
    pub fn explain(&self, x: u32, y: u32) -> Option<Vec<(u32, u32, usize)>> {
        let xs = self.path_to_root(x);
        let ys = self.path_to_root(y);
        let ypos: std::collections::HashMap<u32, usize> =
            ys.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();
        let (xi, yi) = xs
            .iter()
            .enumerate()
            .find_map(|(i, (n, _))| ypos.get(n).map(|&j| (i, j)))?;
        let mut steps = Vec::with_capacity(xi + yi);
        for (n, up) in &xs[..xi] {
            let (p, label) = up.expect("below the meeting point");
            steps.push((*n, p, label));
        }
        for (n, up) in ys[..yi].iter().rev() {
            let (p, label) = up.expect("below the meeting point");
            steps.push((p, *n, label));
        }
        Some(steps)
    }
}
