//! Nested dissection on the adjacency graph of a structurally symmetric matrix.
//!
//! Separators are BFS level sets rooted at a pseudo-peripheral vertex. The
//! result is an assembly tree of supernodes listed in postorder, so every
//! child precedes its parent.

use crate::sparse::SparsityPattern;

const LEAF_SIZE: usize = 48;

#[derive(Clone, Debug)]
pub(crate) struct Supernode {
    pub pivots: Vec<usize>,
    pub children: Vec<usize>,
}

struct Dissector<'a> {
    pattern: &'a SparsityPattern,
    // vertices at or beyond this index are never visited
    limit: usize,
    label: Vec<u32>,
    next_label: u32,
    level: Vec<usize>,
    nodes: Vec<Supernode>,
}

impl Dissector<'_> {
    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let limit = self.limit;
        self.pattern.row(v).iter().copied().filter(move |&w| w != v && w < limit)
    }

    fn fresh_label(&mut self, set: &[usize]) -> u32 {
        self.next_label += 1;
        let tag = self.next_label;
        for &v in set {
            self.label[v] = tag;
        }
        tag
    }

    /// Level structure of the component containing `start`, restricted to
    /// vertices carrying `tag`. Visited vertices are relabelled with `visited`.
    fn bfs(&mut self, start: usize, tag: u32, visited: u32) -> Vec<Vec<usize>> {
        let mut levels = vec![vec![start]];
        self.label[start] = visited;
        self.level[start] = 0;
        loop {
            let mut next = Vec::new();
            for &v in levels.last().expect("non-empty") {
                for k in self.pattern.row_ptr()[v]..self.pattern.row_ptr()[v + 1] {
                    let w = self.pattern.col_idx()[k];
                    if w < self.limit && self.label[w] == tag {
                        self.label[w] = visited;
                        self.level[w] = levels.len();
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.neighbors(v).count()
    }

    fn dissect(&mut self, set: Vec<usize>) -> Vec<usize> {
        let tag = self.fresh_label(&set);
        let mut roots = Vec::new();
        let mut components = Vec::new();
        for &v in &set {
            if self.label[v] == tag {
                self.next_label += 1;
                let visited = self.next_label;
                let levels = self.bfs(v, tag, visited);
                components.push(levels.concat());
            }
        }
        for component in components {
            roots.push(self.dissect_component(component));
        }
        roots
    }

    fn dissect_component(&mut self, component: Vec<usize>) -> usize {
        if component.len() <= LEAF_SIZE {
            return self.push(component, Vec::new());
        }
        let levels = self.peripheral_levels(&component);
        if levels.len() < 3 {
            return self.push(component, Vec::new());
        }
        // every vertex of the component carries the label of the last sweep
        let inside = self.label[component[0]];
        let half = component.len() / 2;
        let mut k = 0;
        let mut count = 0;
        while k < levels.len() - 2 {
            count += levels[k].len();
            if count >= half {
                break;
            }
            k += 1;
        }
        let k = k.max(1);
        let mut upper: Vec<usize> = levels[..k].concat();
        let lower: Vec<usize> = levels[k + 1..].concat();
        let mut separator = Vec::with_capacity(levels[k].len());
        for &v in &levels[k] {
            let touches_lower = self.neighbors(v).any(|w| self.label[w] == inside && self.level[w] == k + 1);
            if touches_lower {
                separator.push(v);
            } else {
                upper.push(v);
            }
        }
        let mut children = self.dissect(upper);
        children.extend(self.dissect(lower));
        self.push(separator, children)
    }

    /// BFS levels from a pseudo-peripheral vertex of the component, found by
    /// repeatedly restarting from a minimum-degree vertex of the last level.
    fn peripheral_levels(&mut self, component: &[usize]) -> Vec<Vec<usize>> {
        let mut start = component[0];
        let mut best: Option<Vec<Vec<usize>>> = None;
        for _ in 0..8 {
            let tag = self.fresh_label(component);
            self.next_label += 1;
            let visited = self.next_label;
            let levels = self.bfs(start, tag, visited);
            let improved = best.as_ref().is_none_or(|b| levels.len() > b.len());
            let candidate = *levels
                .last()
                .expect("non-empty")
                .iter()
                .min_by_key(|&&v| (self.degree(v), v))
                .expect("non-empty level");
            if !improved {
                break;
            }
            best = Some(levels);
            start = candidate;
        }
        let levels = best.expect("at least one sweep");
        // restore level numbers of the returned structure
        for (i, level) in levels.iter().enumerate() {
            for &v in level {
                self.level[v] = i;
            }
        }
        levels
    }

    fn push(&mut self, pivots: Vec<usize>, children: Vec<usize>) -> usize {
        self.nodes.push(Supernode { pivots, children });
        self.nodes.len() - 1
    }
}

/// Assembly tree for the matrix pattern. The last `trailing` indices form a
/// single root supernode eliminated after everything else; the remaining
/// indices are ordered by nested dissection.
pub(crate) fn assembly_tree(pattern: &SparsityPattern, trailing: usize) -> Vec<Supernode> {
    let n = pattern.nrows();
    let limit = n - trailing;
    let mut d = Dissector { pattern, limit, label: vec![0; n], next_label: 0, level: vec![0; n], nodes: Vec::new() };
    let roots = d.dissect((0..limit).collect());
    let mut nodes = d.nodes;
    if trailing > 0 {
        nodes.push(Supernode { pivots: (limit..n).collect(), children: roots });
    }
    nodes
}
