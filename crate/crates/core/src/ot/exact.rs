//! Exact Wasserstein-1 on small discrete instances.
//!
//! Successive shortest augmenting paths on the bipartite transport network
//! (Dijkstra with reduced costs). Capacities are real-valued; residuals below
//! `MASS_EPS` are treated as empty.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView1};

use super::{check_marginals, TransportPlan};
use crate::error::{Error, Result};
use crate::measures::CostMatrix;

/// Largest `n_S · n_T` accepted by the exact solver.
pub const EXACT_MAX_CELLS: usize = 10_000;

const MASS_EPS: f64 = 1e-14;

/// Exact optimal transport cost `min ⟨C, γ⟩` over couplings of `mu` and `nu`.
pub fn exact_w1(cost: &CostMatrix, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> Result<f64> {
    exact_plan(cost, mu, nu).map(|p| p.objective)
}

/// Exact optimal coupling; any optimal vertex may be returned.
pub fn exact_plan(cost: &CostMatrix, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> Result<TransportPlan> {
    check_marginals(cost, mu, nu)?;
    let (n, m) = cost.shape();
    if n * m > EXACT_MAX_CELLS {
        return Err(Error::OracleScale {
            size: n * m,
            limit: EXACT_MAX_CELLS,
        });
    }
    let c = cost.values();
    let flow = Network::new(n, m, |i, j| c[[i, j]]).solve(mu, nu)?;

    let transport_cost = flow.iter().zip(c.iter()).map(|(f, c)| f * c).sum::<f64>();
    let cols = flow.sum_axis(ndarray::Axis(0));
    let violation = cols.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum();
    Ok(TransportPlan {
        coupling: flow,
        row_marginal: mu.to_owned(),
        col_marginal: nu.to_owned(),
        beta: 0.0,
        transport_cost,
        entropy_term: 0.0,
        objective: transport_cost,
        iterations: 0,
        marginal_violation: violation,
    })
}

// Node layout: 0 = super source, 1..=n sources, n+1..=n+m sinks, n+m+1 = super sink.
struct Network {
    n: usize,
    m: usize,
    cost: Vec<f64>,
    flow: Vec<f64>,
    sent: Vec<f64>,
    received: Vec<f64>,
    potential: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties broken by node index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl Network {
    fn new(n: usize, m: usize, c: impl Fn(usize, usize) -> f64) -> Self {
        let mut cost = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                cost.push(c(i, j));
            }
        }
        Self {
            n,
            m,
            cost,
            flow: vec![0.0; n * m],
            sent: vec![0.0; n],
            received: vec![0.0; m],
            potential: vec![0.0; n + m + 2],
        }
    }

    fn solve(mut self, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> Result<Array2<f64>> {
        let (n, m) = (self.n, self.m);
        let total = mu.sum().min(nu.sum());
        let mut shipped = 0.0;
        // Each augmentation saturates an arc; this cap only guards against
        // floating-point stalls.
        let max_rounds = 4 * (n + m) * (n + m) + 16;
        let mut rounds = 0;
        while total - shipped > 1e-12 {
            rounds += 1;
            if rounds > max_rounds {
                return Err(Error::InvalidInput(format!(
                    "exact solver stalled with {:.3e} mass unshipped",
                    total - shipped
                )));
            }
            let Some(pred) = self.shortest_path(mu, nu) else {
                break;
            };
            // walk back from the super sink to find the bottleneck
            let sink = n + m + 1;
            let mut amount = f64::INFINITY;
            let mut v = sink;
            while v != 0 {
                let u = pred[v];
                amount = amount.min(self.residual(u, v, mu, nu));
                v = u;
            }
            if !(amount.is_finite() && amount > 0.0) {
                break;
            }
            let mut v = sink;
            while v != 0 {
                let u = pred[v];
                self.push(u, v, amount);
                v = u;
            }
            shipped += amount;
        }
        Ok(Array2::from_shape_vec((n, m), self.flow).expect("n x m flow"))
    }

    fn arc_cost(&self, u: usize, v: usize) -> f64 {
        let (n, m) = (self.n, self.m);
        if (1..=n).contains(&u) && (n + 1..=n + m).contains(&v) {
            self.cost[(u - 1) * m + (v - n - 1)]
        } else if (n + 1..=n + m).contains(&u) && (1..=n).contains(&v) {
            -self.cost[(v - 1) * m + (u - n - 1)]
        } else {
            0.0
        }
    }

    fn residual(&self, u: usize, v: usize, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> f64 {
        let (n, m) = (self.n, self.m);
        let sink = n + m + 1;
        match (u, v) {
            (0, i) => mu[i - 1] - self.sent[i - 1],
            (i, 0) => self.sent[i - 1],
            (j, t) if t == sink => nu[j - n - 1] - self.received[j - n - 1],
            (t, j) if t == sink => self.received[j - n - 1],
            (i, _) if i <= n => f64::INFINITY,
            (j, i) => self.flow[(i - 1) * m + (j - n - 1)],
        }
    }

    fn push(&mut self, u: usize, v: usize, amount: f64) {
        let (n, m) = (self.n, self.m);
        let sink = n + m + 1;
        match (u, v) {
            (0, i) => self.sent[i - 1] += amount,
            (i, 0) => self.sent[i - 1] -= amount,
            (j, t) if t == sink => self.received[j - n - 1] += amount,
            (t, j) if t == sink => self.received[j - n - 1] -= amount,
            (i, j) if i <= n => self.flow[(i - 1) * m + (j - n - 1)] += amount,
            (j, i) => {
                let f = &mut self.flow[(i - 1) * m + (j - n - 1)];
                *f = (*f - amount).max(0.0);
            }
        }
    }

    fn neighbours(&self, u: usize) -> impl Iterator<Item = usize> {
        let (n, m) = (self.n, self.m);
        let sink = n + m + 1;
        let (range, extra) = if u == 0 {
            (1..n + 1, None)
        } else if u <= n {
            (n + 1..n + m + 1, Some(0))
        } else if u < sink {
            (1..n + 1, Some(sink))
        } else {
            (n + 1..n + m + 1, None)
        };
        range.chain(extra)
    }

    /// Dijkstra on reduced costs from the super source; updates potentials.
    fn shortest_path(&mut self, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> Option<Vec<usize>> {
        let nodes = self.n + self.m + 2;
        let sink = nodes - 1;
        let mut dist = vec![f64::INFINITY; nodes];
        let mut pred = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        let mut heap = BinaryHeap::new();
        dist[0] = 0.0;
        heap.push(Entry(0.0, 0));
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == sink {
                break;
            }
            for v in self.neighbours(u) {
                if done[v] || self.residual(u, v, mu, nu) <= MASS_EPS {
                    continue;
                }
                let reduced = (self.arc_cost(u, v) + self.potential[u] - self.potential[v]).max(0.0);
                let nd = d + reduced;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = u;
                    heap.push(Entry(nd, v));
                }
            }
        }
        if !done[sink] {
            return None;
        }
        let dt = dist[sink];
        for (p, d) in self.potential.iter_mut().zip(&dist) {
            *p += d.min(dt);
        }
        Some(pred)
    }
}
