//! Dinic max-flow on real capacities, used to decide whether a coupling
//! avoiding every forbidden pair exists.

use std::collections::VecDeque;

struct Edge {
    to: usize,
    cap: f64,
}

pub(crate) struct MaxFlow {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i64>,
    iter: Vec<usize>,
    tol: f64,
}

impl MaxFlow {
    pub fn new(nodes: usize, tol: f64) -> Self {
        MaxFlow { edges: vec![], adj: vec![vec![]; nodes], level: vec![0; nodes], iter: vec![0; nodes], tol }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0.0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &e in &self.adj[v] {
                let Edge { to, cap } = self.edges[e];
                if cap > self.tol && self.level[to] < 0 {
                    self.level[to] = self.level[v] + 1;
                    q.push_back(to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: f64) -> f64 {
        if v == t {
            return pushed;
        }
        while self.iter[v] < self.adj[v].len() {
            let e = self.adj[v][self.iter[v]];
            let Edge { to, cap } = self.edges[e];
            if cap > self.tol && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, pushed.min(cap));
                if d > self.tol {
                    self.edges[e].cap -= d;
                    self.edges[e ^ 1].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    pub fn run(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= self.tol {
                    break;
                }
                total += f;
            }
        }
    }
}
