//! Exact balanced transportation problem via successive shortest paths.
//!
//! Supplies and demands are integers, so every augmentation moves an
//! integral amount and the solver terminates with an exactly balanced
//! optimal flow. Costs are real; only path selection compares them.

const EPS: f64 = 1e-12;

struct Edge {
    to: usize,
    cap: u64,
    cost: f64,
}

struct Network {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network {
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: u64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.adj[from].push(id);
        self.edges.push(Edge {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[to].push(id + 1);
        id
    }

    /// Bellman-Ford (queue based) from `s`; returns predecessor edges.
    fn shortest_path(&self, s: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut in_queue = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        dist[s] = 0.0;
        queue.push_back(s);
        in_queue[s] = true;
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &e in &self.adj[u] {
                let edge = &self.edges[e];
                if edge.cap == 0 {
                    continue;
                }
                let nd = dist[u] + edge.cost;
                if nd < dist[edge.to] - EPS {
                    dist[edge.to] = nd;
                    pred[edge.to] = Some(e);
                    if !in_queue[edge.to] {
                        in_queue[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        (dist, pred)
    }
}

/// Minimum of Σ f_ij·cost(i,j) over non-negative integer flows with row
/// sums `supply` and column sums `demand`. Returns the optimal cost and the
/// flow matrix (row-major, `supply.len() × demand.len()`).
///
/// Panics if the totals differ.
pub fn solve<F>(supply: &[u64], demand: &[u64], cost: F) -> (f64, Vec<u64>)
where
    F: Fn(usize, usize) -> f64,
{
    let total: u64 = supply.iter().sum();
    assert_eq!(total, demand.iter().sum::<u64>(), "unbalanced transport problem");
    let (n, m) = (supply.len(), demand.len());
    let source = n + m;
    let sink = source + 1;
    let mut net = Network::new(n + m + 2);
    for (i, &s) in supply.iter().enumerate() {
        net.add(source, i, s, 0.0);
    }
    for (j, &d) in demand.iter().enumerate() {
        net.add(n + j, sink, d, 0.0);
    }
    let mut cell = vec![0usize; n * m];
    for i in 0..n {
        for j in 0..m {
            cell[i * m + j] = net.add(i, n + j, total, cost(i, j));
        }
    }

    let mut sent = 0u64;
    while sent < total {
        let (dist, pred) = net.shortest_path(source);
        assert!(dist[sink].is_finite(), "residual network disconnected before balance");
        let mut push = u64::MAX;
        let mut v = sink;
        while let Some(e) = pred[v] {
            push = push.min(net.edges[e].cap);
            v = net.edges[e ^ 1].to;
        }
        let mut v = sink;
        while let Some(e) = pred[v] {
            net.edges[e].cap -= push;
            net.edges[e ^ 1].cap += push;
            v = net.edges[e ^ 1].to;
        }
        sent += push;
    }

    let mut flow = vec![0u64; n * m];
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..m {
            // flow on a forward edge equals the capacity of its reverse twin
            let f = net.edges[cell[i * m + j] ^ 1].cap;
            flow[i * m + j] = f;
            if f > 0 {
                value += f as f64 * cost(i, j);
            }
        }
    }
    (value, flow)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_one() {
        let (v, f) = solve(&[1], &[1], |_, _| 2.5);
        assert_eq!(v, 2.5);
        assert_eq!(f, vec![1]);
    }

    #[test]
    fn picks_cheaper_diagonal() {
        // moving straight costs 0, crossing costs 1
        let (v, f) = solve(&[2, 3], &[2, 3], |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(v, 0.0);
        assert_eq!(f, vec![2, 0, 0, 3]);
    }

    #[test]
    fn requires_rerouting() {
        // greedy on the cheapest cell first is suboptimal here
        let c = [[1.0, 2.0], [1.0, 10.0]];
        let (v, f) = solve(&[1, 1], &[1, 1], |i, j| c[i][j]);
        assert_eq!(v, 3.0);
        assert_eq!(f, vec![0, 1, 1, 0]);
    }

    #[test]
    fn conservation() {
        let (_, f) = solve(&[3, 1, 2], &[2, 2, 2], |i, j| ((i * 7 + j * 3) % 5) as f64);
        for i in 0..3 {
            assert_eq!(f[i * 3..i * 3 + 3].iter().sum::<u64>(), [3, 1, 2][i]);
        }
        for j in 0..3 {
            assert_eq!((0..3).map(|i| f[i * 3 + j]).sum::<u64>(), 2);
        }
    }
}
