//! Bound-constrained augmented Lagrangian solver for sparse nonlinear programs.
//!
//! Problems are stated in the usual form
//!
//! ```text
//! min f(w)  s.t.  g_lo <= g(w) <= g_hi,  w_lo <= w <= w_hi
//! ```
//!
//! Rows with distinct bounds receive a slack variable so that every
//! constraint becomes an equality `h(z) = 0` over boxed variables `z`. The
//! outer loop updates multipliers and the penalty; the inner loop minimizes
//! the augmented Lagrangian over the box. Each inner step starts from a
//! Cauchy point on the projected gradient path and improves it with
//! Levenberg-Marquardt regularized Newton steps on the free variables,
//! solved by a sparse Cholesky factorization.

mod sparse;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
pub use sparse::{reverse_cuthill_mckee, NotPositiveDefinite, Skyline};

/// A nonlinear program with sparse first derivatives.
///
/// Jacobian and Hessian structures are fixed triplet lists in row/column
/// form and must not contain duplicates. Hessian entries are the lower
/// triangle of `σ ∇²f + Σ y_i ∇²g_i`.
pub trait Nlp {
    fn n_variables(&self) -> usize;
    fn n_constraints(&self) -> usize;
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn cost(&self, w: &[f64]) -> f64;
    fn cost_gradient(&self, w: &[f64], grad: &mut [f64]);
    fn constraints(&self, w: &[f64], g: &mut [f64]);
    fn jacobian_structure(&self) -> (Vec<usize>, Vec<usize>);
    fn jacobian_values(&self, w: &[f64], values: &mut [f64]);

    /// Lower-triangular Hessian pattern, if second derivatives are available.
    fn hessian_structure(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        None
    }

    fn hessian_values(&self, _w: &[f64], _cost_factor: f64, _multipliers: &[f64], _values: &mut [f64]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Limit on inner (factorization) iterations.
    pub max_iterations: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub penalty_max: f64,
    /// Grow the penalty unless feasibility improves by at least this factor.
    pub feasibility_decrease: f64,
    pub multiplier_max: f64,
    /// Use second derivatives of the constraints when the problem provides them.
    pub exact_hessian: bool,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-6,
            optimality_tol: 1e-6,
            max_iterations: 3000,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            penalty_max: 1e8,
            feasibility_decrease: 0.5,
            multiplier_max: 1e12,
            exact_hessian: true,
            verbose: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.feasibility_tol,
            self.optimality_tol,
            self.penalty_init,
            self.penalty_max,
            self.multiplier_max,
        ];
        if positive.iter().any(|&x| !(x > 0.0)) || !(self.penalty_growth > 1.0) {
            return Err(Error::InvalidInput(
                "solver tolerances and penalty parameters must be positive".into(),
            ));
        }
        if !(self.feasibility_decrease > 0.0 && self.feasibility_decrease < 1.0) {
            return Err(Error::InvalidInput(
                "feasibility decrease factor must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    FeasibleMaxIter,
    Infeasible,
    Diverged,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::FeasibleMaxIter => "feasible_max_iter",
            Status::Infeasible => "infeasible",
            Status::Diverged => "diverged",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub w: Vec<f64>,
    pub status: Status,
    pub cost: f64,
    /// Largest bound violation of any constraint row.
    pub constraint_violation: f64,
    /// Infinity norm of the projected Lagrangian gradient.
    pub optimality: f64,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub wall_time: f64,
}

/// Problem in equality form over `z = (w, slacks)`.
struct Reformulated<'a, P: Nlp + ?Sized> {
    nlp: &'a P,
    n: usize,
    m: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Equality target per row, or the slack variable of an inequality row.
    row_target: Vec<f64>,
    row_slack: Vec<Option<usize>>,
    jac_rows: Vec<usize>,
    jac_cols: Vec<usize>,
    hess: Option<(Vec<usize>, Vec<usize>)>,
}

impl<'a, P: Nlp + ?Sized> Reformulated<'a, P> {
    fn new(nlp: &'a P, exact_hessian: bool) -> Result<Self> {
        let n = nlp.n_variables();
        let m = nlp.n_constraints();
        let (wl, wh) = nlp.variable_bounds();
        let (gl, gh) = nlp.constraint_bounds();
        if wl.len() != n || wh.len() != n || gl.len() != m || gh.len() != m {
            return Err(Error::InvalidInput(
                "bound vectors do not match problem dimensions".into(),
            ));
        }
        if wl.iter().zip(&wh).chain(gl.iter().zip(&gh)).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidInput("lower bound exceeds upper bound".into()));
        }
        let mut lo = wl;
        let mut hi = wh;
        let mut row_target = vec![0.0; m];
        let mut row_slack = vec![None; m];
        for i in 0..m {
            if gl[i] == gh[i] {
                row_target[i] = gl[i];
            } else {
                row_slack[i] = Some(lo.len());
                lo.push(gl[i]);
                hi.push(gh[i]);
            }
        }
        let (jac_rows, jac_cols) = nlp.jacobian_structure();
        if jac_rows.len() != jac_cols.len() || jac_rows.iter().any(|&r| r >= m) || jac_cols.iter().any(|&c| c >= n) {
            return Err(Error::InvalidInput("jacobian structure out of range".into()));
        }
        let hess = if exact_hessian { nlp.hessian_structure() } else { None };
        if let Some((r, c)) = &hess {
            if r.len() != c.len() || r.iter().zip(c).any(|(&i, &j)| i >= n || j > i) {
                return Err(Error::InvalidInput(
                    "hessian structure must be lower triangular and in range".into(),
                ));
            }
        }
        Ok(Self {
            nlp,
            n,
            m,
            lo,
            hi,
            row_target,
            row_slack,
            jac_rows,
            jac_cols,
            hess,
        })
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn residual(&self, z: &[f64], h: &mut [f64]) {
        self.nlp.constraints(&z[..self.n], h);
        for ((hi, slack), target) in h.iter_mut().zip(&self.row_slack).zip(&self.row_target) {
            *hi -= match slack {
                Some(s) => z[*s],
                None => *target,
            };
        }
    }

    /// Augmented Lagrangian value and the residual it was built from.
    fn merit(&self, z: &[f64], y: &[f64], rho: f64, h: &mut [f64]) -> f64 {
        self.residual(z, h);
        let f = self.nlp.cost(&z[..self.n]);
        f + h
            .iter()
            .zip(y)
            .map(|(hi, yi)| yi * hi + 0.5 * rho * hi * hi)
            .sum::<f64>()
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

fn projected_gradient(z: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    z.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&x, &gi), (&l, &h))| (x - (x - gi).clamp(l, h)).abs())
        .fold(0.0, f64::max)
}

/// Fixed sparse structure of the inner Newton system in permuted order.
struct NewtonSystem {
    perm_inv: Vec<usize>,
    skyline: Skyline,
    hess_pos: Vec<usize>,
    /// Unique jacobian entries per row: (entry index, column in z).
    rows: Vec<Vec<(usize, usize)>>,
    /// Skyline offsets of `JᵀJ` products per row, pairs `(a, b)` with `a >= b`.
    pair_pos: Vec<Vec<usize>>,
    diag_pos: Vec<usize>,
}

impl NewtonSystem {
    fn new<P: Nlp + ?Sized>(p: &Reformulated<P>) -> Self {
        let nz = p.dim();
        let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); p.m];
        for (e, (&r, &c)) in p.jac_rows.iter().zip(&p.jac_cols).enumerate() {
            rows[r].push((e, c));
        }
        for (i, s) in p.row_slack.iter().enumerate() {
            if let Some(s) = s {
                rows[i].push((usize::MAX, *s));
            }
        }
        let mut edges = Vec::new();
        for row in &rows {
            for (a, &(_, ca)) in row.iter().enumerate() {
                for &(_, cb) in &row[..a] {
                    edges.push((ca, cb));
                }
            }
        }
        if let Some((hr, hc)) = &p.hess {
            edges.extend(hr.iter().copied().zip(hc.iter().copied()));
        }
        let order = reverse_cuthill_mckee(nz, &edges);
        let mut perm_inv = vec![0; nz];
        for (new, &old) in order.iter().enumerate() {
            perm_inv[old] = new;
        }
        let skyline = Skyline::new(nz, edges.iter().map(|&(a, b)| (perm_inv[a], perm_inv[b])));
        let pair_pos = rows
            .iter()
            .map(|row| {
                let mut pos = Vec::new();
                for (a, &(_, ca)) in row.iter().enumerate() {
                    for &(_, cb) in &row[..=a] {
                        pos.push(skyline.position(perm_inv[ca], perm_inv[cb]));
                    }
                }
                pos
            })
            .collect();
        let hess_pos = p
            .hess
            .as_ref()
            .map(|(hr, hc)| {
                hr.iter()
                    .zip(hc)
                    .map(|(&i, &j)| skyline.position(perm_inv[i], perm_inv[j]))
                    .collect()
            })
            .unwrap_or_default();
        let diag_pos = (0..nz).map(|i| skyline.diagonal_position(perm_inv[i])).collect();
        Self {
            perm_inv,
            skyline,
            hess_pos,
            rows,
            pair_pos,
            diag_pos,
        }
    }
}

/// Derivative information at the current iterate.
struct Linearization {
    jac: Vec<f64>,
    hess: Vec<f64>,
}

struct Inner<'p, 'a, P: Nlp + ?Sized> {
    p: &'p Reformulated<'a, P>,
    sys: NewtonSystem,
    opts: SolverOptions,
    mu: f64,
    iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InnerExit {
    Converged,
    Stalled,
    IterationLimit,
    NonFinite,
}

impl<'p, 'a, P: Nlp + ?Sized> Inner<'p, 'a, P> {
    fn linearize(&self, z: &[f64], weights: &[f64]) -> Linearization {
        let mut jac = vec![0.0; self.p.jac_rows.len()];
        self.p.nlp.jacobian_values(&z[..self.p.n], &mut jac);
        let mut hess = vec![0.0; self.sys.hess_pos.len()];
        if self.p.hess.is_some() {
            self.p.nlp.hessian_values(&z[..self.p.n], 1.0, weights, &mut hess);
        }
        Linearization { jac, hess }
    }

    fn jac_entry(lin: &Linearization, e: usize) -> f64 {
        if e == usize::MAX {
            -1.0
        } else {
            lin.jac[e]
        }
    }

    /// Gradient `∇f + Jᵀ weights` over `z`.
    fn gradient(&self, z: &[f64], lin: &Linearization, weights: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.p.dim()];
        self.p.nlp.cost_gradient(&z[..self.p.n], &mut g[..self.p.n]);
        for (row, &wt) in self.sys.rows.iter().zip(weights) {
            for &(e, c) in row {
                g[c] += Self::jac_entry(lin, e) * wt;
            }
        }
        g
    }

    /// Model Hessian `H = ∇²L(weights) + ρ JᵀJ` with active variables decoupled.
    fn assemble(&self, lin: &Linearization, rho: f64, active: &[bool]) -> Skyline {
        let mut k = self.sys.skyline.clone();
        k.values.fill(0.0);
        if let Some((hr, hc)) = &self.p.hess {
            for ((&i, &j), (&pos, &v)) in hr.iter().zip(hc).zip(self.sys.hess_pos.iter().zip(&lin.hess)) {
                if !active[i] && !active[j] {
                    k.values[pos] += v;
                }
            }
        }
        for (row, pos) in self.sys.rows.iter().zip(&self.sys.pair_pos) {
            let mut idx = 0;
            for (a, &(ea, ca)) in row.iter().enumerate() {
                let va = Self::jac_entry(lin, ea);
                for &(eb, cb) in &row[..=a] {
                    if !active[ca] && !active[cb] {
                        k.values[pos[idx]] += rho * va * Self::jac_entry(lin, eb);
                    }
                    idx += 1;
                }
            }
        }
        for (i, &a) in active.iter().enumerate() {
            if a {
                k.values[self.sys.diag_pos[i]] = 1.0;
            }
        }
        k
    }

    /// Minimizes the augmented Lagrangian over the box to tolerance `omega`.
    fn minimize(&mut self, z: &mut [f64], y: &[f64], rho: f64, omega: f64) -> (InnerExit, f64) {
        let p = self.p;
        let nz = p.dim();
        let mut h = vec![0.0; p.m];
        let mut phi = p.merit(z, y, rho, &mut h);
        if !phi.is_finite() {
            return (InnerExit::NonFinite, f64::INFINITY);
        }
        loop {
            let weights: Vec<f64> = y.iter().zip(&h).map(|(yi, hi)| yi + rho * hi).collect();
            let lin = self.linearize(z, &weights);
            if lin.jac.iter().chain(&lin.hess).any(|v| !v.is_finite()) {
                return (InnerExit::NonFinite, f64::INFINITY);
            }
            let grad = self.gradient(z, &lin, &weights);
            let pg = projected_gradient(z, &grad, &p.lo, &p.hi);
            if !pg.is_finite() {
                return (InnerExit::NonFinite, pg);
            }
            if pg <= omega {
                return (InnerExit::Converged, pg);
            }
            if self.iterations >= self.opts.max_iterations {
                return (InnerExit::IterationLimit, pg);
            }
            self.iterations += 1;

            let full = self.assemble(&lin, rho, &vec![false; nz]);
            let fixed: Vec<bool> = (0..nz).map(|i| p.lo[i] == p.hi[i]).collect();

            loop {
                if self.mu > 1e20 {
                    return (InnerExit::Stalled, pg);
                }
                let mu = self.mu;
                let model = |s: &[f64]| {
                    let hs = self.hess_mul(&full, s);
                    let gs: f64 = grad.iter().zip(s).map(|(a, b)| a * b).sum();
                    let shs: f64 = s.iter().zip(&hs).map(|(a, b)| a * b).sum();
                    let ss: f64 = s.iter().map(|v| v * v).sum();
                    (gs, shs, ss, hs)
                };

                // Generalized Cauchy point along the projected gradient path.
                let path = |t: f64| -> Vec<f64> {
                    (0..nz)
                        .map(|i| (z[i] - t * grad[i]).clamp(p.lo[i], p.hi[i]) - z[i])
                        .collect()
                };
                let dir = path(1.0);
                let (gd, dhd, dd, _) = model(&dir);
                let curv = dhd + mu * dd;
                let mut t = if curv > 0.0 {
                    (-gd / curv).max(1e-12)
                } else {
                    1.0 / mu.max(1e-8)
                };
                let mut sc = path(t);
                for _ in 0..60 {
                    let (gs, shs, ss, _) = model(&sc);
                    if gs + 0.5 * (shs + mu * ss) <= 0.01 * gs {
                        break;
                    }
                    t *= 0.5;
                    sc = path(t);
                }
                let (gs_c, shs_c, ss_c, _) = model(&sc);
                let q_cauchy = gs_c + 0.5 * (shs_c + mu * ss_c);

                // Newton steps on the variables still free, fixing variables
                // that would cross a bound at that bound and solving again.
                let mut active: Vec<bool> = (0..nz)
                    .map(|i| fixed[i] || z[i] + sc[i] <= p.lo[i] || z[i] + sc[i] >= p.hi[i])
                    .collect();
                let mut base = sc.clone();
                let mut first_dir: Option<Vec<f64>> = None;
                let mut candidate = None;
                let mut singular = false;
                for _ in 0..8 {
                    let (_, _, _, hs) = model(&base);
                    let rhs: Vec<f64> = (0..nz).map(|i| -(grad[i] + hs[i] + mu * base[i])).collect();
                    let Some(d) = self.subspace_step(&lin, rho, mu, &active, &rhs) else {
                        singular = true;
                        break;
                    };
                    let crossing: Vec<usize> = (0..nz)
                        .filter(|&i| !active[i] && !(p.lo[i]..=p.hi[i]).contains(&(z[i] + base[i] + d[i])))
                        .collect();
                    let projected: Vec<f64> = (0..nz)
                        .map(|i| (z[i] + base[i] + d[i]).clamp(p.lo[i], p.hi[i]) - z[i])
                        .collect();
                    first_dir.get_or_insert(d);
                    if crossing.is_empty() {
                        candidate = Some(projected);
                        break;
                    }
                    for &i in &crossing {
                        base[i] = projected[i];
                        active[i] = true;
                    }
                    candidate = Some(projected);
                }
                if singular {
                    self.mu = (mu * 10.0).max(1e-8);
                    continue;
                }
                let q_of = |s: &[f64]| {
                    let (gs, shs, ss, _) = model(s);
                    gs + 0.5 * (shs + mu * ss)
                };
                let mut step = sc.clone();
                let mut q_best = q_cauchy;
                let mut newton = false;
                if let Some(c) = candidate {
                    let q = q_of(&c);
                    if q < q_best {
                        q_best = q;
                        step = c;
                        newton = true;
                    }
                }
                if let Some(d) = first_dir {
                    let mut beta = 1.0;
                    for _ in 0..12 {
                        let trial: Vec<f64> = (0..nz)
                            .map(|i| (z[i] + sc[i] + beta * d[i]).clamp(p.lo[i], p.hi[i]) - z[i])
                            .collect();
                        let q = q_of(&trial);
                        if q < q_best {
                            step = trial;
                            newton = beta > 0.1;
                            break;
                        }
                        beta *= 0.5;
                    }
                }

                let (gs, shs, _, _) = model(&step);
                let predicted = -(gs + 0.5 * shs);
                let trial: Vec<f64> = z.iter().zip(&step).map(|(a, b)| a + b).collect();
                let mut h_trial = vec![0.0; p.m];
                let phi_trial = p.merit(&trial, y, rho, &mut h_trial);
                let actual = phi - phi_trial;
                let step_norm = norm_inf(&step);
                let ratio = if predicted > 0.0 {
                    actual / predicted
                } else {
                    f64::NEG_INFINITY
                };
                if phi_trial.is_finite() && (ratio > 1e-4 || (step_norm == 0.0 && actual >= 0.0)) {
                    if !newton {
                        // Cauchy fallback
                        self.mu = (mu * 10.0).max(1e-8);
                    } else if ratio > 0.75 {
                        self.mu = (mu / 10.0).max(1e-12);
                    } else if ratio < 0.25 {
                        self.mu = (mu * 4.0).max(1e-8);
                    }
                    z.copy_from_slice(&trial);
                    h = h_trial;
                    phi = phi_trial;
                    if step_norm == 0.0 {
                        return (InnerExit::Stalled, pg);
                    }
                    break;
                }
                self.mu = (mu * 10.0).max(1e-8);
            }
        }
    }

    /// Solves `(H_FF + μ I) d_F = rhs_F` over the free variables; zero on active ones.
    fn subspace_step(&self, lin: &Linearization, rho: f64, mu: f64, active: &[bool], rhs: &[f64]) -> Option<Vec<f64>> {
        let mut k = self.assemble(lin, rho, active);
        for i in (0..active.len()).filter(|&i| !active[i]) {
            k.values[self.sys.diag_pos[i]] += mu;
        }
        k.factor().ok()?;
        let mut d = vec![0.0; active.len()];
        for i in (0..active.len()).filter(|&i| !active[i]) {
            d[self.sys.perm_inv[i]] = rhs[i];
        }
        k.solve(&mut d);
        Some(
            (0..active.len())
                .map(|i| if active[i] { 0.0 } else { d[self.sys.perm_inv[i]] })
                .collect(),
        )
    }

    /// `H s` in the original variable order.
    fn hess_mul(&self, h: &Skyline, s: &[f64]) -> Vec<f64> {
        let n = s.len();
        let mut sp = vec![0.0; n];
        for (i, &v) in s.iter().enumerate() {
            sp[self.sys.perm_inv[i]] = v;
        }
        let mut out = vec![0.0; n];
        h.mul(&sp, &mut out);
        (0..n).map(|i| out[self.sys.perm_inv[i]]).collect()
    }
}

/// Solves `nlp` from `w0` with an augmented Lagrangian method.
pub fn solve<P: Nlp + ?Sized>(nlp: &P, w0: &[f64], opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    let start = Instant::now();
    let p = Reformulated::new(nlp, opts.exact_hessian)?;
    if w0.len() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: w0.len(),
        });
    }
    let mut z = vec![0.0; p.dim()];
    for i in 0..p.n {
        z[i] = w0[i].clamp(p.lo[i], p.hi[i]);
    }
    let mut g = vec![0.0; p.m];
    nlp.constraints(&z[..p.n], &mut g);
    for (i, s) in p.row_slack.iter().enumerate() {
        if let Some(s) = *s {
            z[s] = g[i].clamp(p.lo[s], p.hi[s]);
        }
    }

    let mut inner = Inner {
        p: &p,
        sys: NewtonSystem::new(&p),
        opts: *opts,
        mu: 1e-8,
        iterations: 0,
    };
    let mut y = vec![0.0; p.m];
    let mut rho = opts.penalty_init;
    let mut h = vec![0.0; p.m];
    let mut prev_violation = f64::INFINITY;
    let mut omega = 1e-2_f64.max(opts.optimality_tol);
    let mut outer = 0;
    let mut stalls = 0;
    let status = loop {
        outer += 1;
        let (exit, optimality) = inner.minimize(&mut z, &y, rho, omega);
        if exit == InnerExit::NonFinite {
            break Status::Diverged;
        }
        p.residual(&z, &mut h);
        let violation = norm_inf(&h);
        if !violation.is_finite() {
            break Status::Diverged;
        }
        if opts.verbose {
            eprintln!(
                "outer {outer:3}  rho {rho:9.2e}  feas {violation:9.3e}  opt {optimality:9.3e}  inner {:5}  mu {:8.1e}",
                inner.iterations, inner.mu
            );
        }
        for (yi, hi) in y.iter_mut().zip(&h) {
            *yi = (*yi + rho * hi).clamp(-opts.multiplier_max, opts.multiplier_max);
        }
        if violation <= opts.feasibility_tol && optimality <= opts.optimality_tol {
            break Status::Optimal;
        }
        if exit == InnerExit::IterationLimit {
            break if violation <= opts.feasibility_tol {
                Status::FeasibleMaxIter
            } else {
                Status::Infeasible
            };
        }
        if violation > opts.feasibility_decrease * prev_violation && violation > opts.feasibility_tol {
            if rho >= opts.penalty_max {
                stalls += 1;
                if stalls > 20 {
                    break Status::Infeasible;
                }
            }
            rho = (rho * opts.penalty_growth).min(opts.penalty_max);
        }
        prev_violation = violation;
        omega = (0.1 * violation.min(omega)).max(opts.optimality_tol);
        inner.mu = inner.mu.min(1e-4);
    };

    let w = z[..p.n].to_vec();
    let optimality = {
        let lin = inner.linearize(&z, &y);
        let grad = inner.gradient(&z, &lin, &y);
        projected_gradient(&z, &grad, &p.lo, &p.hi)
    };
    let (gl, gh) = nlp.constraint_bounds();
    nlp.constraints(&w, &mut g);
    let constraint_violation = g
        .iter()
        .zip(gl.iter().zip(&gh))
        .map(|(&v, (&l, &u))| (l - v).max(v - u).max(0.0))
        .fold(0.0, f64::max);
    Ok(Solution {
        cost: nlp.cost(&w),
        w,
        status,
        constraint_violation,
        optimality,
        multipliers: y,
        iterations: inner.iterations,
        outer_iterations: outer,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
