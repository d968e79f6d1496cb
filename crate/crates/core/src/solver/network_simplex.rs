//! Primal network simplex for uncapacitated min-cost flow with node supplies.
//!
//! Every node gets an artificial arc to an extra root node, carrying its
//! initial supply at a large cost; the star of artificial arcs is the
//! starting basis. Entering arcs are priced by block search; after a run of
//! degenerate pivots the pricing falls back to Bland's rule (smallest index
//! entering and leaving) until a non-degenerate pivot occurs, which rules
//! out cycling.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub(crate) struct FlowProblem {
    pub num_nodes: usize,
    /// Positive for sources, negative for sinks; sums to (about) zero.
    pub supply: Vec<f64>,
    pub tails: Vec<usize>,
    pub heads: Vec<usize>,
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowSolution {
    /// Flow on each real arc.
    pub flow: Vec<f64>,
    /// Node potentials with `cost + pot[tail] - pot[head] >= 0` on every arc.
    pub potential: Vec<f64>,
    /// Largest flow left on an artificial arc.
    pub artificial_flow: f64,
    pub pivots: usize,
    pub converged: bool,
}

impl FlowProblem {
    pub fn new(num_nodes: usize, supply: Vec<f64>) -> Self {
        FlowProblem { num_nodes, supply, tails: vec![], heads: vec![], costs: vec![] }
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, cost: f64) -> usize {
        debug_assert!(tail < self.num_nodes && head < self.num_nodes && cost.is_finite());
        self.tails.push(tail);
        self.heads.push(head);
        self.costs.push(cost);
        self.tails.len() - 1
    }

    pub fn num_arcs(&self) -> usize {
        self.tails.len()
    }
}

const DEGENERATE_STREAK_FACTOR: usize = 2;

struct Tree {
    root: usize,
    tails: Vec<usize>,
    heads: Vec<usize>,
    costs: Vec<f64>,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
}

impl Tree {
    fn other(&self, arc: usize, node: usize) -> usize {
        if self.tails[arc] == node {
            self.heads[arc]
        } else {
            self.tails[arc]
        }
    }

    fn reduced_cost(&self, arc: usize) -> f64 {
        self.costs[arc] + self.pot[self.tails[arc]] - self.pot[self.heads[arc]]
    }

    /// Recomputes parent pointers, depths and potentials from the tree arcs.
    fn rebuild(&mut self) {
        let nodes = self.adj.len();
        let mut seen = vec![false; nodes];
        let mut queue = VecDeque::with_capacity(nodes);
        seen[self.root] = true;
        self.parent[self.root] = usize::MAX;
        self.pred[self.root] = usize::MAX;
        self.depth[self.root] = 0;
        self.pot[self.root] = 0.0;
        queue.push_back(self.root);
        while let Some(v) = queue.pop_front() {
            for k in 0..self.adj[v].len() {
                let arc = self.adj[v][k];
                let w = self.other(arc, v);
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                self.parent[w] = v;
                self.pred[w] = arc;
                self.depth[w] = self.depth[v] + 1;
                // tree arcs have zero reduced cost
                self.pot[w] = if self.tails[arc] == v {
                    self.pot[v] + self.costs[arc]
                } else {
                    self.pot[v] - self.costs[arc]
                };
                queue.push_back(w);
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis is not a spanning tree");
    }

    fn remove_from_adj(&mut self, arc: usize) {
        for end in [self.tails[arc], self.heads[arc]] {
            let list = &mut self.adj[end];
            let pos = list.iter().position(|&a| a == arc).expect("tree arc in adjacency");
            list.swap_remove(pos);
        }
    }
}

pub(crate) fn network_simplex(problem: &FlowProblem, art_cost: f64) -> FlowSolution {
    let n = problem.num_nodes;
    let m = problem.num_arcs();
    let root = n;
    let max_cost = problem.costs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let flow_scale = problem.supply.iter().fold(0.0f64, |a, s| a + s.abs()).max(1e-300);
    let flow_tol = 1e-15 * flow_scale.max(1.0);
    let rc_tol = 1e-11 * max_cost.max(1.0);

    let mut tails = problem.tails.clone();
    let mut heads = problem.heads.clone();
    let mut costs = problem.costs.clone();
    let mut flow = vec![0.0; m + n];
    for v in 0..n {
        let b = problem.supply[v];
        if b >= 0.0 {
            tails.push(v);
            heads.push(root);
            flow[m + v] = b;
        } else {
            tails.push(root);
            heads.push(v);
            flow[m + v] = -b;
        }
        costs.push(art_cost);
    }
    let total_arcs = m + n;
    let mut adj = vec![Vec::new(); n + 1];
    let mut in_tree = vec![false; total_arcs];
    for v in 0..n {
        adj[v].push(m + v);
        adj[root].push(m + v);
        in_tree[m + v] = true;
    }
    let mut tree = Tree {
        root,
        tails,
        heads,
        costs,
        flow,
        in_tree,
        adj,
        parent: vec![usize::MAX; n + 1],
        pred: vec![usize::MAX; n + 1],
        depth: vec![0; n + 1],
        pot: vec![0.0; n + 1],
    };
    tree.rebuild();

    let block = ((total_arcs as f64).sqrt().ceil() as usize).max(16).min(total_arcs.max(1));
    let mut next_block_start = 0usize;
    let mut degenerate_streak = 0usize;
    let mut bland = false;
    let max_pivots = 200 * (total_arcs + n + 10);
    let mut pivots = 0usize;
    let mut converged = false;

    let mut up_path: Vec<(usize, bool)> = Vec::new();
    while pivots < max_pivots {
        let entering = if bland {
            (0..total_arcs).find(|&a| !tree.in_tree[a] && tree.reduced_cost(a) < -rc_tol)
        } else {
            block_search(&tree, total_arcs, block, &mut next_block_start, rc_tol)
        };
        let Some(entering) = entering else {
            converged = true;
            break;
        };

        // cycle: entering arc u -> w, then the tree path w -> lca -> u
        let (u, w) = (tree.tails[entering], tree.heads[entering]);
        up_path.clear();
        let (mut a, mut b) = (u, w);
        while a != b {
            if tree.depth[a] >= tree.depth[b] {
                let arc = tree.pred[a];
                // traversed parent -> a: forward iff the arc points away from the root
                up_path.push((arc, tree.tails[arc] != a));
                a = tree.parent[a];
            } else {
                let arc = tree.pred[b];
                // traversed b -> parent
                up_path.push((arc, tree.tails[arc] == b));
                b = tree.parent[b];
            }
        }

        let theta = up_path
            .iter()
            .filter(|(_, forward)| !forward)
            .map(|&(arc, _)| tree.flow[arc])
            .fold(f64::INFINITY, f64::min);
        assert!(theta.is_finite(), "negative-cost cycle of forward arcs; costs must be non-negative");
        // Bland: smallest index among the blocking arcs
        let leaving = up_path
            .iter()
            .filter(|&&(arc, forward)| !forward && tree.flow[arc] <= theta + flow_tol)
            .map(|&(arc, _)| arc)
            .min()
            .unwrap();
        let theta = theta.max(0.0);

        for &(arc, forward) in &up_path {
            if forward {
                tree.flow[arc] += theta;
            } else {
                tree.flow[arc] = (tree.flow[arc] - theta).max(0.0);
                if tree.flow[arc] <= flow_tol {
                    tree.flow[arc] = 0.0;
                }
            }
        }
        tree.flow[entering] += theta;
        tree.flow[leaving] = 0.0;

        tree.remove_from_adj(leaving);
        tree.in_tree[leaving] = false;
        tree.in_tree[entering] = true;
        tree.adj[u].push(entering);
        tree.adj[w].push(entering);
        tree.rebuild();
        pivots += 1;

        if theta <= flow_tol {
            degenerate_streak += 1;
            if degenerate_streak > DEGENERATE_STREAK_FACTOR * (n + 1) {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
            bland = false;
        }
    }

    let artificial_flow = tree.flow[m..].iter().fold(0.0f64, |a, &f| a.max(f));
    FlowSolution {
        flow: tree.flow[..m].to_vec(),
        potential: tree.pot[..n].to_vec(),
        artificial_flow,
        pivots,
        converged,
    }
}

/// Most negative reduced cost within the first block (cyclically from
/// `start`) that contains any candidate.
fn block_search(tree: &Tree, total: usize, block: usize, start: &mut usize, rc_tol: f64) -> Option<usize> {
    if total == 0 {
        return None;
    }
    let mut best = None;
    let mut best_rc = -rc_tol;
    let mut scanned = 0usize;
    let mut k = *start % total;
    while scanned < total {
        let chunk_end = (scanned + block).min(total);
        while scanned < chunk_end {
            if !tree.in_tree[k] {
                let rc = tree.reduced_cost(k);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(k);
                }
            }
            k += 1;
            if k == total {
                k = 0;
            }
            scanned += 1;
        }
        if best.is_some() {
            *start = k;
            return best;
        }
    }
    None
}
