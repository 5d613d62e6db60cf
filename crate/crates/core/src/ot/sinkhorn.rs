//! Log-domain Sinkhorn with annealing, kernel truncation and a Newton polish.
//!
//! The solver works on dual potentials `f`, `g` (in cost units), with
//!
//! ```text
//! γ_ij = μ_i ν_j exp((f_i + g_j - c_ij) / ε)
//! ```
//!
//! Each half-sweep is a stabilised log-sum-exp over one axis, so nothing is
//! exponentiated outside `(-∞, 0]`. `ε` starts at the largest cost and is
//! halved until it reaches the requested `β`; potentials carry over between
//! stages.
//!
//! Sweeps only visit cells with `f_i + g_j - c_ij ≥ -TRUNCATE·ε`. The support
//! is rebuilt whenever the potentials have drifted far enough that a skipped
//! cell could exceed `exp(-KEEP)` relative mass, so the truncation error stays
//! below `e^-KEEP` per row.
//!
//! At small `β` plain sweeps reach tight marginals only sublinearly, so each
//! stage sweeps until the column violation is below `SWEEP_HANDOVER` and then
//! switches to damped Newton steps on the dual, solved by preconditioned
//! conjugate gradients over the truncated support. Every accepted step is
//! followed by an exact row update and must reduce the column violation.
//! The returned plan is evaluated densely.

use ndarray::{Array2, ArrayView1};

use super::{check_marginals, SolverConfig, TransportPlan};
use crate::error::{Error, Result};
use crate::measures::CostMatrix;

const ANNEAL_FACTOR: f64 = 0.5;
/// Column violation at which plain sweeps hand over to Newton.
const SWEEP_HANDOVER: f64 = 3e-2;
/// Column violation at which an intermediate stage moves on to the next `ε`.
const STAGE_TOLERANCE: f64 = 1e-2;
/// Cells below `exp(-TRUNCATE)` relative mass are dropped when the support is built.
const TRUNCATE: f64 = 40.0;
/// Skipped cells are guaranteed to stay below `exp(-KEEP)`.
const KEEP: f64 = 30.0;
const CG_MAX_ITERATIONS: usize = 5_000;
/// CG iterations per Newton step, in units of the dense-to-support size ratio.
const CG_WORK: f64 = 5.0;
const CG_RELATIVE_RESIDUAL: f64 = 1e-6;
const LINE_SEARCH_HALVINGS: usize = 12;
/// Longest first trial step, in safe-drift radii of the current support.
const REBUILD_REACH: f64 = 16.0;

pub fn sinkhorn(
    cost: &CostMatrix,
    mu: ArrayView1<'_, f64>,
    nu: ArrayView1<'_, f64>,
    config: &SolverConfig,
) -> Result<TransportPlan> {
    config.validate()?;
    check_marginals(cost, mu, nu)?;
    if mu.iter().chain(nu.iter()).any(|w| *w <= 0.0) {
        return Err(Error::InvalidInput(
            "sinkhorn requires strictly positive marginals".into(),
        ));
    }

    let dense = cost.values().as_standard_layout().into_owned();
    let (n, m) = dense.dim();
    let mut solver = Solver::new(dense.as_slice().expect("standard layout"), n, m, mu, nu);

    let mut eps = cost.max().max(config.beta);
    let mut budget = Budget {
        used: 0,
        max: config.max_iterations,
    };
    loop {
        let last = eps <= config.beta;
        solver.rebuild_support(eps);
        solver.update_f(eps);
        let target = if last {
            config.marginal_tolerance
        } else {
            STAGE_TOLERANCE
        };
        solver.sweep_until(eps, SWEEP_HANDOVER.max(target), &mut budget)?;
        if solver.violation > target {
            solver.newton_until(eps, target, &mut budget)?;
        }
        if last {
            break;
        }
        eps = (eps * ANNEAL_FACTOR).max(config.beta);
    }

    let plan = solver.into_plan(mu, nu, config.beta, budget.used);
    if plan.marginal_violation.is_nan() || plan.marginal_violation > config.marginal_tolerance {
        return Err(Error::NotConverged {
            iterations: plan.iterations,
            violation: plan.marginal_violation,
        });
    }
    Ok(plan)
}

struct Budget {
    used: usize,
    max: usize,
}

impl Budget {
    fn spend(&mut self, violation: f64) -> Result<()> {
        if self.used >= self.max {
            return Err(Error::NotConverged {
                iterations: self.used,
                violation,
            });
        }
        self.used += 1;
        Ok(())
    }
}

/// Truncated kernel in compressed-row form.
#[derive(Default)]
struct Support {
    row_start: Vec<usize>,
    col: Vec<usize>,
    cost: Vec<f64>,
}

impl Support {
    fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_start[i]..self.row_start[i + 1]
    }

    fn nnz(&self) -> usize {
        self.col.len()
    }
}

struct Solver<'a> {
    dense: &'a [f64],
    n: usize,
    m: usize,
    mu: Vec<f64>,
    nu: Vec<f64>,
    log_mu: Vec<f64>,
    log_nu: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    support: Support,
    f_ref: Vec<f64>,
    g_ref: Vec<f64>,
    built_eps: f64,
    /// L1 column violation of the current (row-exact) state.
    violation: f64,
    /// Raised to `n + m` once Newton steps stop paying off; badly connected
    /// supports (low dimension, small ε) need CG to run about that long.
    cg_floor: usize,
}

impl<'a> Solver<'a> {
    fn new(dense: &'a [f64], n: usize, m: usize, mu: ArrayView1<'_, f64>, nu: ArrayView1<'_, f64>) -> Self {
        Self {
            dense,
            n,
            m,
            mu: mu.to_vec(),
            nu: nu.to_vec(),
            log_mu: mu.iter().map(|w| w.ln()).collect(),
            log_nu: nu.iter().map(|w| w.ln()).collect(),
            f: vec![0.0; n],
            g: vec![0.0; m],
            support: Support::default(),
            f_ref: vec![0.0; n],
            g_ref: vec![0.0; m],
            built_eps: f64::INFINITY,
            violation: f64::INFINITY,
            cg_floor: 0,
        }
    }

    /// Keeps cells within `TRUNCATE·ε` of tight, plus each column's best row.
    fn rebuild_support(&mut self, eps: f64) {
        let (n, m) = (self.n, self.m);
        let floor = -TRUNCATE * eps;
        let mut best = vec![(f64::NEG_INFINITY, 0usize); m];
        for (i, row) in self.dense.chunks_exact(m).enumerate() {
            let fi = self.f[i];
            for ((b, gj), cij) in best.iter_mut().zip(&self.g).zip(row) {
                let s = fi + gj - cij;
                if s > b.0 {
                    *b = (s, i);
                }
            }
        }
        let mut support = Support {
            row_start: Vec::with_capacity(n + 1),
            col: Vec::new(),
            cost: Vec::new(),
        };
        support.row_start.push(0);
        for (i, row) in self.dense.chunks_exact(m).enumerate() {
            let fi = self.f[i];
            let mut top = f64::NEG_INFINITY;
            for (gj, cij) in self.g.iter().zip(row) {
                top = top.max(fi + gj - cij);
            }
            // rows are kept relative to their own best cell so that a stale
            // f cannot empty a row
            let row_floor = floor.min(top + floor);
            for (j, (gj, cij)) in self.g.iter().zip(row).enumerate() {
                if fi + gj - cij >= row_floor || best[j].1 == i {
                    support.col.push(j);
                    support.cost.push(*cij);
                }
            }
            support.row_start.push(support.col.len());
        }
        self.support = support;
        self.f_ref.copy_from_slice(&self.f);
        self.g_ref.copy_from_slice(&self.g);
        self.built_eps = eps;
    }

    fn drift(&self) -> f64 {
        let df = self
            .f
            .iter()
            .zip(&self.f_ref)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dg = self
            .g
            .iter()
            .zip(&self.g_ref)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        df + dg
    }

    fn maybe_rebuild(&mut self, eps: f64) -> bool {
        if self.drift() > (TRUNCATE - KEEP) * self.built_eps.min(eps) {
            self.rebuild_support(eps);
            true
        } else {
            false
        }
    }

    /// `f_i = -ε log Σ_j ν_j exp((g_j - c_ij) / ε)`; makes row sums exact.
    fn update_f(&mut self, eps: f64) {
        let inv = 1.0 / eps;
        let s = &self.support;
        for i in 0..self.n {
            let range = s.row(i);
            let mut top = f64::NEG_INFINITY;
            for k in range.clone() {
                let j = s.col[k];
                top = top.max(self.g[j] + eps * self.log_nu[j] - s.cost[k]);
            }
            let mut acc = 0.0;
            for k in range {
                let j = s.col[k];
                acc += ((self.g[j] + eps * self.log_nu[j] - s.cost[k] - top) * inv).exp();
            }
            self.f[i] = -(top + eps * acc.ln());
        }
    }

    /// Column log-sums `log Σ_i μ_i exp((f_i - c_ij)/ε)` scaled by ε, i.e. `-g_new`.
    fn column_lse(&self, f: &[f64], eps: f64) -> Vec<f64> {
        let inv = 1.0 / eps;
        let s = &self.support;
        let mut top = vec![f64::NEG_INFINITY; self.m];
        for i in 0..self.n {
            let ki = f[i] + eps * self.log_mu[i];
            for k in s.row(i) {
                let t = &mut top[s.col[k]];
                *t = t.max(ki - s.cost[k]);
            }
        }
        let mut sums = vec![0.0; self.m];
        for i in 0..self.n {
            let ki = f[i] + eps * self.log_mu[i];
            for k in s.row(i) {
                let j = s.col[k];
                sums[j] += ((ki - s.cost[k] - top[j]) * inv).exp();
            }
        }
        top.iter().zip(&sums).map(|(t, s)| t + eps * s.ln()).collect()
    }

    /// L1 column violation of the plan `(f, g)`, given `column_lse(f)`.
    fn violation_of(&self, g: &[f64], lse: &[f64], eps: f64) -> f64 {
        let inv = 1.0 / eps;
        lse.iter()
            .zip(g)
            .zip(&self.nu)
            .map(|((l, gj), nj)| nj * (1.0 - ((gj + l) * inv).exp()).abs())
            .sum()
    }

    /// Alternating sweeps until the column violation drops to `tol`.
    fn sweep_until(&mut self, eps: f64, tol: f64, budget: &mut Budget) -> Result<()> {
        loop {
            let lse = self.column_lse(&self.f, eps);
            self.violation = self.violation_of(&self.g, &lse, eps);
            if self.violation <= tol {
                return Ok(());
            }
            budget.spend(self.violation)?;
            for (gj, l) in self.g.iter_mut().zip(&lse) {
                *gj = -l;
            }
            self.update_f(eps);
            self.maybe_rebuild(eps);
        }
    }

    fn newton_until(&mut self, eps: f64, tol: f64, budget: &mut Budget) -> Result<()> {
        loop {
            let lse = self.column_lse(&self.f, eps);
            self.violation = self.violation_of(&self.g, &lse, eps);
            if self.violation <= tol {
                return Ok(());
            }
            budget.spend(self.violation)?;
            let before = self.violation;
            let accepted = self.newton_step(eps);
            if !accepted || self.violation > 0.5 * before {
                self.cg_floor = (self.n + self.m).min(CG_MAX_ITERATIONS);
            }
            if !accepted {
                // fall back to a plain sweep
                for (gj, l) in self.g.iter_mut().zip(&lse) {
                    *gj = -l;
                }
                self.update_f(eps);
            }
            if self.maybe_rebuild(eps) {
                self.update_f(eps);
            }
        }
    }

    /// One damped Newton step on the dual followed by an exact row update.
    /// Returns false if no step length reduced the column violation.
    fn newton_step(&mut self, eps: f64) -> bool {
        let (n, m) = (self.n, self.m);
        let inv = 1.0 / eps;
        let s = &self.support;
        let mut gamma = vec![0.0; s.nnz()];
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; m];
        for i in 0..n {
            for k in s.row(i) {
                let j = s.col[k];
                let v = ((self.f[i] + self.g[j] - s.cost[k]) * inv + self.log_mu[i] + self.log_nu[j]).exp();
                gamma[k] = v;
                rows[i] += v;
                cols[j] += v;
            }
        }
        let mut rhs = Vec::with_capacity(n + m);
        rhs.extend(self.mu.iter().zip(&rows).map(|(a, r)| eps * (a - r)));
        rhs.extend(self.nu.iter().zip(&cols).map(|(b, c)| eps * (b - c)));
        let diag: Vec<f64> = rows.iter().chain(&cols).map(|d| d.max(f64::MIN_POSITIVE)).collect();

        let apply = |x: &[f64], y: &mut [f64]| {
            for (yi, (d, xi)) in y.iter_mut().zip(diag.iter().zip(x)) {
                *yi = d * xi;
            }
            for i in 0..n {
                let mut acc = 0.0;
                let xi = x[i];
                for k in s.row(i) {
                    let j = s.col[k];
                    acc += gamma[k] * x[n + j];
                    y[n + j] += gamma[k] * xi;
                }
                y[i] += acc;
            }
        };
        // CG work is kept comparable to a handful of dense sweeps
        let cap = (CG_WORK * (n * m) as f64 / (s.nnz() + n + m) as f64).clamp(20.0, CG_MAX_ITERATIONS as f64) as usize;
        let cap = cap.max(self.cg_floor);
        let mut step = conjugate_gradient(apply, &rhs, &diag, cap);
        // drop the (1, -1) null direction so f and g stay on a common scale
        let drift = (step[..n].iter().sum::<f64>() - step[n..].iter().sum::<f64>()) / (n + m) as f64;
        step[..n].iter_mut().for_each(|d| *d -= drift);
        step[n..].iter_mut().for_each(|d| *d += drift);

        let current = self.violation;
        let (f0, g0) = (self.f.clone(), self.g.clone());
        let base = std::mem::take(&mut self.support);
        let (f_ref, g_ref, built) = (self.f_ref.clone(), self.g_ref.clone(), self.built_eps);
        let limit = (TRUNCATE - KEEP) * built.min(eps);
        let step_drift = step[..n].iter().fold(0.0, |a: f64, d| a.max(d.abs()))
            + step[n..].iter().fold(0.0, |a: f64, d| a.max(d.abs()));
        let base_drift = self.drift();
        let mut on_base = true;
        self.support = base;
        let mut base_store: Option<Support> = None;
        // steps reaching far past the support start shorter, since every
        // trial out there costs a dense rebuild
        let mut t = (REBUILD_REACH * limit / step_drift).min(1.0);
        for _ in 0..LINE_SEARCH_HALVINGS {
            let drift = base_drift + t * step_drift;
            for ((f, a), d) in self.f.iter_mut().zip(&f0).zip(&step[..n]) {
                *f = a + t * d;
            }
            for ((g, a), d) in self.g.iter_mut().zip(&g0).zip(&step[n..]) {
                *g = a + t * d;
            }
            // the violation is only trustworthy on a support built near the trial point
            if drift > limit {
                if on_base {
                    base_store = Some(std::mem::take(&mut self.support));
                    on_base = false;
                }
                self.rebuild_support(eps);
            } else if !on_base {
                self.support = base_store.take().expect("base support saved");
                self.f_ref.clone_from(&f_ref);
                self.g_ref.clone_from(&g_ref);
                self.built_eps = built;
                on_base = true;
            }
            self.update_f(eps);
            let lse = self.column_lse(&self.f, eps);
            let v = self.violation_of(&self.g, &lse, eps);
            if v.is_finite() && v < current {
                self.violation = v;
                return true;
            }
            t *= 0.5;
        }
        if !on_base {
            self.support = base_store.take().expect("base support saved");
            self.f_ref = f_ref;
            self.g_ref = g_ref;
            self.built_eps = built;
        }
        self.f = f0;
        self.g = g0;
        false
    }

    fn into_plan(
        self,
        mu: ArrayView1<'_, f64>,
        nu: ArrayView1<'_, f64>,
        beta: f64,
        iterations: usize,
    ) -> TransportPlan {
        let inv = 1.0 / beta;
        let mut coupling = Array2::zeros((self.n, self.m));
        let mut transport_cost = 0.0;
        let mut kl = 0.0;
        for (i, row) in self.dense.chunks_exact(self.m).enumerate() {
            let mut row_cost = 0.0;
            let mut row_kl = 0.0;
            for (j, cij) in row.iter().enumerate() {
                let log_ratio = (self.f[i] + self.g[j] - cij) * inv;
                let mass = (log_ratio + self.log_mu[i] + self.log_nu[j]).exp();
                coupling[[i, j]] = mass;
                row_cost += mass * cij;
                if mass > 0.0 {
                    row_kl += mass * log_ratio;
                }
            }
            transport_cost += row_cost;
            kl += row_kl;
        }
        let cols = coupling.sum_axis(ndarray::Axis(0));
        let violation = cols.iter().zip(&self.nu).map(|(a, b)| (a - b).abs()).sum();
        let entropy_term = (beta * kl).max(0.0);
        TransportPlan {
            coupling,
            row_marginal: mu.to_owned(),
            col_marginal: nu.to_owned(),
            beta,
            transport_cost,
            entropy_term,
            objective: transport_cost + entropy_term,
            iterations,
            marginal_violation: violation,
        }
    }
}

/// Jacobi-preconditioned CG for a symmetric positive semidefinite system
/// with a consistent right-hand side.
fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    diag: &[f64],
    max_iterations: usize,
) -> Vec<f64> {
    let len = rhs.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = vec![0.0; len];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; len];
    let mut rz = dot(&r, &z);
    let target = CG_RELATIVE_RESIDUAL * dot(rhs, rhs).sqrt();
    for _ in 0..max_iterations {
        if dot(&r, &r).sqrt() <= target {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..len {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..len {
            z[k] = r[k] / diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..len {
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}
