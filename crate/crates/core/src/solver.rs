//! Constrained minimization of the discrete `A^c` energy.
//!
//! Three problems share one driver: the unconstrained single sheet, the
//! symmetric stack with the obstacle `u ≤ 0`, and the general two-membrane
//! problem `u₁ ≤ u₂`. The driver runs projected gradient with Armijo
//! backtracking, then (by default) a projected Newton phase that freezes the
//! binding constraints each iteration and solves the reduced tridiagonal or
//! banded system, which sharpens the free boundary to grid accuracy.
//!
//! `shooting_oracle` is an independent check on the free-boundary radius: it
//! integrates the radial Euler-Lagrange flux `r u′/√(1+u′²) = −(c/2)(r²−r*²)`
//! by adaptive quadrature and bisects on `r*`. It never touches the grid
//! solver.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{
    ah_energy, touching_eps, CapParams, EnergyBreakdown, GeometryError, Mode, RadialProfile,
    StackProblem,
};

/// Gap below which a node pair counts as being in contact.
pub const CONTACT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolverError {
    /// For `c > 2` the single-sheet energy is unbounded below over graphs.
    #[error("energy is non-coercive for c = {c} > 2; no bounded single-sheet minimizer")]
    NonCoercive { c: f64 },
    /// The sheets stay disjoint: `eps` is at or above the touching separation.
    #[error("no contact forms: eps = {eps} >= touching separation {touching}")]
    NoContact { eps: f64, touching: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Line-search rule for the projected-gradient phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    FixedStep(f64),
    BacktrackingArmijo { shrink: f64, slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Convergence threshold on the sup-norm of the projected gradient
    /// (measured as the unit-step natural residual `‖x − P(x − ∇E)‖_∞`).
    pub grad_tol: f64,
    pub step_rule: StepRule,
    /// After projected-gradient convergence stalls, run Newton on the
    /// inactive set with the binding set frozen, re-checking complementarity.
    pub active_set_refine: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            grad_tol: 1e-9,
            step_rule: StepRule::BacktrackingArmijo {
                shrink: 0.5,
                slope: 1e-4,
            },
            active_set_refine: true,
        }
    }
}

/// Closed index interval `[first, last]` of nodes in contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactInterval {
    pub first: usize,
    pub last: usize,
}

/// Result of a solve: minimizer sheet(s), energy, contact set and KKT data.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub lower: RadialProfile,
    /// Upper sheet; `None` in single-sheet mode, the reflection `−lower` in
    /// symmetric mode.
    pub upper: Option<RadialProfile>,
    pub energy: EnergyBreakdown,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Disjoint, sorted closed intervals where `upper − lower ≤ CONTACT_TOL`.
    pub contact: Vec<ContactInterval>,
    pub converged: bool,
}

impl SolveReport {
    /// Per-node contact flags derived from the stored intervals.
    pub fn contact_flags(&self) -> Vec<u8> {
        let mut flags = vec![0u8; self.lower.n() + 1];
        for iv in &self.contact {
            for f in &mut flags[iv.first..=iv.last] {
                *f = 1;
            }
        }
        flags
    }

    /// CSV `r,u_lower,u_upper,contact` with contact in {0,1}; the upper
    /// column is empty in single-sheet mode.
    pub fn to_csv(&self) -> String {
        let flags = self.contact_flags();
        let mut out = String::from("r,u_lower,u_upper,contact\n");
        for (i, &lo) in self.lower.values().iter().enumerate() {
            let r = self.lower.radius(i);
            match &self.upper {
                Some(up) => {
                    let _ = writeln!(out, "{},{},{},{}", r, lo, up.values()[i], flags[i]);
                }
                None => {
                    let _ = writeln!(out, "{},{},,{}", r, lo, flags[i]);
                }
            }
        }
        out
    }

    /// JSON-like sidecar of the scalar outputs.
    pub fn sidecar(&self, problem: &StackProblem, r_star: Option<f64>) -> String {
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"mode\": \"{}\",", problem.mode.as_str());
        let _ = writeln!(out, "  \"c\": {},", problem.c);
        let _ = writeln!(out, "  \"eps\": {},", problem.eps);
        let _ = writeln!(out, "  \"n\": {},", problem.n);
        let _ = writeln!(out, "  \"area\": {},", self.energy.area);
        let _ = writeln!(out, "  \"volume\": {},", self.energy.volume);
        let _ = writeln!(out, "  \"total\": {},", self.energy.total);
        let _ = writeln!(out, "  \"iterations\": {},", self.iterations);
        let _ = writeln!(out, "  \"kkt_residual\": {},", self.kkt_residual);
        let _ = writeln!(out, "  \"converged\": {},", self.converged);
        let intervals: Vec<String> = self
            .contact
            .iter()
            .map(|iv| format!("[{}, {}]", iv.first, iv.last))
            .collect();
        let _ = writeln!(out, "  \"contact_intervals\": [{}],", intervals.join(", "));
        match r_star {
            Some(r) => {
                let _ = writeln!(out, "  \"r_star\": {r}");
            }
            None => {
                let _ = writeln!(out, "  \"r_star\": null");
            }
        }
        out.push_str("}\n");
        out
    }
}

// ---------------------------------------------------------------------------
// Discretization shared by all modes
// ---------------------------------------------------------------------------

/// Fixed data of one sheet's discrete energy on the radial grid.
#[derive(Debug, Clone, Copy)]
struct SheetDisc {
    n: usize,
    h: f64,
    c: f64,
    /// +1: region below the graph is charged (lower sheet);
    /// −1: region above the graph is charged (upper sheet).
    orientation: f64,
    /// Uniform scale on energy/gradient (2 for the symmetric stack).
    scale: f64,
}

impl SheetDisc {
    fn r_mid(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.h
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut e = 0.0;
        for j in 0..self.n {
            let rm = self.r_mid(j);
            let p = (u[j + 1] - u[j]) / self.h;
            let area = two_pi * rm * (1.0 + p * p).sqrt() * self.h;
            let um = 0.5 * (u[j] + u[j + 1]);
            // volume below: (um + 1); volume above: (1 − um)
            let vol = two_pi * rm * (1.0 + self.orientation * um) * self.h;
            e += area - self.c * vol;
        }
        self.scale * e
    }

    /// Adds this sheet's gradient into `g` (same index space as `u`).
    fn add_grad(&self, u: &[f64], g: &mut [f64]) {
        let two_pi = 2.0 * std::f64::consts::PI;
        for j in 0..self.n {
            let rm = self.r_mid(j);
            let p = (u[j + 1] - u[j]) / self.h;
            let w = (1.0 + p * p).sqrt();
            let flux = two_pi * rm * p / w;
            let dvol = self.c * self.orientation * std::f64::consts::PI * rm * self.h;
            g[j] += self.scale * (-flux - dvol);
            g[j + 1] += self.scale * (flux - dvol);
        }
    }

    /// Cell stiffnesses of the area Hessian: `k_j = s·2π r_{j+1/2} / (h W_j³)`.
    fn stiffness(&self, u: &[f64], k: &mut [f64]) {
        let two_pi = 2.0 * std::f64::consts::PI;
        for j in 0..self.n {
            let p = (u[j + 1] - u[j]) / self.h;
            let w2 = 1.0 + p * p;
            k[j] = self.scale * two_pi * self.r_mid(j) / (self.h * w2 * w2.sqrt());
        }
    }
}

// ---------------------------------------------------------------------------
// Constrained problems
// ---------------------------------------------------------------------------

trait ConstrainedEnergy {
    fn dim(&self) -> usize;
    fn energy(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64], g: &mut [f64]);
    /// Euclidean projection onto the feasible set (pins Dirichlet nodes).
    fn project(&self, x: &mut [f64]);
    /// Newton direction with the binding set frozen; `false` if no free
    /// variables remain.
    fn newton_direction(&self, x: &[f64], g: &[f64], d: &mut [f64]) -> bool;
}

/// Single sheet; the obstacle `u ≤ 0` turns it into the symmetric stack.
struct SheetProblem {
    disc: SheetDisc,
    bc: f64,
    upper_bound: f64,
}

impl SheetProblem {
    fn free_mask(&self, x: &[f64], g: &[f64]) -> Vec<bool> {
        let n = self.disc.n;
        let mut free = vec![false; n + 1];
        for i in 0..n {
            let at_hi = x[i] == self.upper_bound && g[i] <= 0.0;
            let at_lo = x[i] == -1.0 && g[i] >= 0.0;
            free[i] = !(at_hi || at_lo);
        }
        free
    }
}

impl ConstrainedEnergy for SheetProblem {
    fn dim(&self) -> usize {
        self.disc.n + 1
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.disc.energy(x)
    }

    fn grad(&self, x: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        self.disc.add_grad(x, g);
    }

    fn project(&self, x: &mut [f64]) {
        let n = self.disc.n;
        for v in &mut x[..n] {
            *v = v.clamp(-1.0, self.upper_bound);
        }
        x[n] = self.bc;
    }

    fn newton_direction(&self, x: &[f64], g: &[f64], d: &mut [f64]) -> bool {
        let n = self.disc.n;
        let mut k = vec![0.0; n];
        self.disc.stiffness(x, &mut k);
        let free = self.free_mask(x, g);
        d.fill(0.0);
        let mut any = false;
        // solve each maximal free run independently (frozen neighbors drop out)
        let mut i = 0;
        while i < n {
            if !free[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && free[i] {
                i += 1;
            }
            let end = i; // run is [start, end)
            let len = end - start;
            let mut diag = vec![0.0; len];
            let mut off = vec![0.0; len.saturating_sub(1)];
            let mut rhs = vec![0.0; len];
            for (t, node) in (start..end).enumerate() {
                let left = if node > 0 { k[node - 1] } else { 0.0 };
                diag[t] = left + k[node];
                rhs[t] = -g[node];
                if t + 1 < len {
                    off[t] = -k[node];
                }
            }
            solve_tridiag(&mut diag, &mut off, &mut rhs);
            for (t, node) in (start..end).enumerate() {
                d[node] = rhs[t];
            }
            any = true;
        }
        any
    }
}

/// Two ordered sheets `u₁ ≤ u₂`; state is interleaved `[u₁ᵢ, u₂ᵢ]` per node.
struct PairProblem {
    lower: SheetDisc,
    upper: SheetDisc,
    bc: f64,
}

impl PairProblem {
    fn n(&self) -> usize {
        self.lower.n
    }

    fn split(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let m = x.len() / 2;
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for i in 0..m {
            a.push(x[2 * i]);
            b.push(x[2 * i + 1]);
        }
        (a, b)
    }
}

impl ConstrainedEnergy for PairProblem {
    fn dim(&self) -> usize {
        2 * (self.n() + 1)
    }

    fn energy(&self, x: &[f64]) -> f64 {
        let (a, b) = Self::split(x);
        self.lower.energy(&a) + self.upper.energy(&b)
    }

    fn grad(&self, x: &[f64], g: &mut [f64]) {
        let n = self.n();
        let (a, b) = Self::split(x);
        let mut ga = vec![0.0; n + 1];
        let mut gb = vec![0.0; n + 1];
        self.lower.add_grad(&a, &mut ga);
        self.upper.add_grad(&b, &mut gb);
        for i in 0..=n {
            g[2 * i] = ga[i];
            g[2 * i + 1] = gb[i];
        }
    }

    fn project(&self, x: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let lo = x[2 * i];
            let up = x[2 * i + 1];
            if lo > up {
                let mid = (0.5 * (lo + up)).clamp(-1.0, 1.0);
                x[2 * i] = mid;
                x[2 * i + 1] = mid;
            } else {
                x[2 * i] = lo.clamp(-1.0, 1.0);
                x[2 * i + 1] = up.clamp(-1.0, 1.0);
            }
        }
        x[2 * n] = -self.bc;
        x[2 * n + 1] = self.bc;
    }

    fn newton_direction(&self, x: &[f64], g: &[f64], d: &mut [f64]) -> bool {
        let n = self.n();
        let (a, b) = Self::split(x);
        let mut ka = vec![0.0; n];
        let mut kb = vec![0.0; n];
        self.lower.stiffness(&a, &mut ka);
        self.upper.stiffness(&b, &mut kb);

        // variable map: per node, either one merged variable or two
        const FROZEN: usize = usize::MAX;
        let mut var_lo = vec![FROZEN; n + 1];
        let mut var_up = vec![FROZEN; n + 1];
        let mut nvar = 0;
        for i in 0..n {
            let (lo, up) = (x[2 * i], x[2 * i + 1]);
            let (glo, gup) = (g[2 * i], g[2 * i + 1]);
            let merged = lo == up && gup - glo >= 0.0;
            if merged {
                var_lo[i] = nvar;
                var_up[i] = nvar;
                nvar += 1;
            } else {
                if !(lo == -1.0 && glo >= 0.0) {
                    var_lo[i] = nvar;
                    nvar += 1;
                }
                if !(up == 1.0 && gup <= 0.0) {
                    var_up[i] = nvar;
                    nvar += 1;
                }
            }
        }
        if nvar == 0 {
            return false;
        }

        // banded SPD assembly, half-bandwidth 2: band[v][t] = A[v][v−t]
        let mut band = vec![[0.0f64; 3]; nvar];
        let mut rhs = vec![0.0f64; nvar];
        let mut add = |p: usize, q: usize, val: f64| {
            if p == FROZEN || q == FROZEN {
                return;
            }
            let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
            let off = hi - lo;
            debug_assert!(off <= 2, "bandwidth exceeded");
            band[hi][off] += val;
        };
        for j in 0..n {
            for (vars, k) in [(&var_lo, &ka), (&var_up, &kb)] {
                let (p, q) = (vars[j], vars[j + 1]);
                add(p, p, k[j]);
                add(q, q, k[j]);
                if p != FROZEN && q != FROZEN {
                    add(p, q, -k[j]);
                }
            }
        }
        // a merged variable accumulates both sheets' gradients
        for i in 0..n {
            if var_lo[i] != FROZEN {
                rhs[var_lo[i]] -= g[2 * i];
            }
            if var_up[i] != FROZEN {
                rhs[var_up[i]] -= g[2 * i + 1];
            }
        }
        if !solve_banded_spd(&mut band, &mut rhs) {
            return false;
        }
        d.fill(0.0);
        for i in 0..n {
            if var_lo[i] != FROZEN {
                d[2 * i] = rhs[var_lo[i]];
            }
            if var_up[i] != FROZEN {
                d[2 * i + 1] = rhs[var_up[i]];
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Linear solves
// ---------------------------------------------------------------------------

/// Thomas algorithm for a symmetric positive definite tridiagonal system;
/// `diag`/`rhs` are overwritten, the solution lands in `rhs`.
fn solve_tridiag(diag: &mut [f64], off: &mut [f64], rhs: &mut [f64]) {
    let m = diag.len();
    for t in 1..m {
        let w = off[t - 1] / diag[t - 1];
        diag[t] -= w * off[t - 1];
        rhs[t] -= w * rhs[t - 1];
    }
    if m > 0 {
        rhs[m - 1] /= diag[m - 1];
        for t in (0..m - 1).rev() {
            rhs[t] = (rhs[t] - off[t] * rhs[t + 1]) / diag[t];
        }
    }
}

/// Cholesky solve for an SPD band matrix with half-bandwidth 2 stored as
/// `band[v][t] = A[v][v−t]`. Returns `false` on a non-positive pivot.
#[allow(clippy::needless_range_loop)]
fn solve_banded_spd(band: &mut [[f64; 3]], rhs: &mut [f64]) -> bool {
    let m = band.len();
    // factorization A = L Lᵀ in place
    for j in 0..m {
        let mut s = band[j][0];
        for t in 1..=2.min(j) {
            s -= band[j][t] * band[j][t];
        }
        if s <= 0.0 {
            return false;
        }
        let ljj = s.sqrt();
        band[j][0] = ljj;
        for i in j + 1..m.min(j + 3) {
            let off = i - j;
            let mut v = band[i][off];
            // overlap of rows i and j within the band
            for t in 1..=2 - off {
                if j >= t {
                    v -= band[i][off + t] * band[j][t];
                }
            }
            band[i][off] = v / ljj;
        }
    }
    // forward substitution L y = rhs
    for i in 0..m {
        let mut v = rhs[i];
        for t in 1..=2.min(i) {
            v -= band[i][t] * rhs[i - t];
        }
        rhs[i] = v / band[i][0];
    }
    // back substitution Lᵀ x = y
    for i in (0..m).rev() {
        let mut v = rhs[i];
        for t in 1..=2.min(m - 1 - i) {
            v -= band[i + t][t] * rhs[i + t];
        }
        rhs[i] = v / band[i][0];
    }
    true
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

struct MinimizeOutcome {
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn natural_residual(problem: &impl ConstrainedEnergy, x: &[f64], g: &[f64]) -> f64 {
    let mut y: Vec<f64> = x.iter().zip(g).map(|(&xi, &gi)| xi - gi).collect();
    problem.project(&mut y);
    x.iter()
        .zip(&y)
        .map(|(&xi, &yi)| (xi - yi).abs())
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Debug check that an iterate is a fixed point of the projection, i.e.
/// satisfies the obstacle/ordering constraints exactly.
fn assert_feasible(problem: &impl ConstrainedEnergy, x: &[f64]) {
    if cfg!(debug_assertions) {
        let mut y = x.to_vec();
        problem.project(&mut y);
        debug_assert!(
            x.iter().zip(&y).all(|(a, b)| a == b),
            "iterate left the feasible set"
        );
    }
}

/// One projected step `x⁺ = P(x + α·dir)` with generalized Armijo acceptance
/// `E(x⁺) ≤ E(x) + slope·⟨g, x⁺−x⟩`. Returns the accepted point and α, or
/// `None` after `max_halvings` rejections.
#[allow(clippy::too_many_arguments)]
fn projected_armijo(
    problem: &impl ConstrainedEnergy,
    x: &[f64],
    e0: f64,
    g: &[f64],
    dir: &[f64],
    alpha0: f64,
    shrink: f64,
    slope: f64,
    max_halvings: usize,
) -> Option<(Vec<f64>, f64, f64)> {
    let mut alpha = alpha0;
    for _ in 0..max_halvings {
        let mut trial: Vec<f64> = x
            .iter()
            .zip(dir)
            .map(|(&xi, &di)| xi + alpha * di)
            .collect();
        problem.project(&mut trial);
        let step: Vec<f64> = trial.iter().zip(x).map(|(&t, &xi)| t - xi).collect();
        let decrease = dot(g, &step);
        let e_trial = problem.energy(&trial);
        if e_trial <= e0 + slope * decrease && decrease <= 0.0 {
            return Some((trial, e_trial, alpha));
        }
        alpha *= shrink;
    }
    None
}

fn minimize(problem: &impl ConstrainedEnergy, cfg: &SolverConfig, x0: Vec<f64>) -> MinimizeOutcome {
    let mut x = x0;
    problem.project(&mut x);
    let dim = problem.dim();
    let mut g = vec![0.0; dim];
    let mut iterations = 0usize;
    let mut residual;

    // Phase A: projected gradient
    let pg_budget = if cfg.active_set_refine {
        cfg.max_iters.min(400)
    } else {
        cfg.max_iters
    };
    let mut alpha: f64 = 1.0;
    while iterations < pg_budget {
        problem.grad(&x, &mut g);
        residual = natural_residual(problem, &x, &g);
        if residual <= cfg.grad_tol {
            return MinimizeOutcome {
                x,
                iterations,
                residual,
                converged: true,
            };
        }
        let e0 = problem.energy(&x);
        let descent: Vec<f64> = g.iter().map(|&v| -v).collect();
        match cfg.step_rule {
            StepRule::FixedStep(step) => {
                let mut trial: Vec<f64> = x
                    .iter()
                    .zip(&descent)
                    .map(|(&xi, &di)| xi + step * di)
                    .collect();
                problem.project(&mut trial);
                x = trial;
            }
            StepRule::BacktrackingArmijo { shrink, slope } => {
                let start = (alpha * 2.0).min(1.0e3);
                match projected_armijo(problem, &x, e0, &g, &descent, start, shrink, slope, 60) {
                    Some((next, e_next, accepted)) => {
                        debug_assert!(
                            e_next <= e0 + 1e-12 * (1.0 + e0.abs()),
                            "Armijo accepted an energy increase"
                        );
                        alpha = accepted;
                        x = next;
                    }
                    None => break, // stalled at numerical floor; hand over
                }
            }
        }
        iterations += 1;
    }

    if !cfg.active_set_refine {
        problem.grad(&x, &mut g);
        residual = natural_residual(problem, &x, &g);
        return MinimizeOutcome {
            converged: residual <= cfg.grad_tol,
            x,
            iterations,
            residual,
        };
    }

    // Phase B: projected Newton on the non-binding set. The free boundary
    // retreats at most one node per iteration, so progress shows in the
    // energy long before the residual moves; stall detection watches the
    // energy. 50 iterations without measurable decrease is the numerical
    // floor.
    let mut d = vec![0.0; dim];
    let mut stall = 0usize;
    let mut e_prev = f64::INFINITY;
    while iterations < cfg.max_iters && stall < 50 {
        problem.grad(&x, &mut g);
        residual = natural_residual(problem, &x, &g);
        if residual <= cfg.grad_tol {
            return MinimizeOutcome {
                x,
                iterations,
                residual,
                converged: true,
            };
        }
        let e0 = problem.energy(&x);
        if e_prev - e0 <= 1e-16 * (1.0 + e0.abs()) {
            stall += 1;
        } else {
            stall = 0;
        }
        e_prev = e0;
        let have_newton = problem.newton_direction(&x, &g, &mut d);
        let (shrink, slope) = match cfg.step_rule {
            StepRule::BacktrackingArmijo { shrink, slope } => (shrink, slope),
            StepRule::FixedStep(_) => (0.5, 1e-4),
        };
        let mut stepped = false;
        if have_newton && dot(&g, &d) < 0.0 {
            let d_inf = d.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            if d_inf <= 1e-7 {
                // below the energy-difference noise floor the Armijo test is
                // meaningless; a full Newton step is safe and converges
                // quadratically
                let mut next: Vec<f64> = x.iter().zip(&d).map(|(&xi, &di)| xi + di).collect();
                problem.project(&mut next);
                x = next;
                stepped = true;
            } else if let Some((next, _, _)) =
                projected_armijo(problem, &x, e0, &g, &d, 1.0, shrink, slope, 40)
            {
                x = next;
                stepped = true;
            }
        }
        if !stepped {
            // fall back to a projected gradient step
            let descent: Vec<f64> = g.iter().map(|&v| -v).collect();
            match projected_armijo(problem, &x, e0, &g, &descent, 1.0, shrink, slope, 60) {
                Some((next, _, _)) => x = next,
                None => break,
            }
        }
        iterations += 1;
    }

    problem.grad(&x, &mut g);
    residual = natural_residual(problem, &x, &g);
    MinimizeOutcome {
        converged: residual <= cfg.grad_tol,
        x,
        iterations,
        residual,
    }
}

// ---------------------------------------------------------------------------
// Public solves
// ---------------------------------------------------------------------------

fn default_center_height(c: f64, eps: f64) -> f64 {
    match CapParams::new(c, eps) {
        Ok(cap) => cap.apex_height.min(0.0),
        // flat limit at c = 0; for c > 2 no cap exists, start on the mid-plane
        Err(_) => {
            if c == 0.0 {
                -eps
            } else {
                0.0
            }
        }
    }
}

/// Linear interpolation from `min(0, cap apex)` at the center to the
/// boundary height, per the deterministic default initialization.
fn default_init(problem: &StackProblem) -> Vec<f64> {
    let n = problem.n;
    let a = default_center_height(problem.c, problem.eps);
    let b = -problem.eps;
    (0..=n)
        .map(|i| {
            let r = i as f64 / n as f64;
            a * (1.0 - r) + b * r
        })
        .collect()
}

fn contact_intervals_from_gap(gap: &[f64]) -> Vec<ContactInterval> {
    let mut intervals = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &gp) in gap.iter().enumerate() {
        if gp <= CONTACT_TOL {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            intervals.push(ContactInterval {
                first: s,
                last: i - 1,
            });
        }
    }
    if let Some(s) = start {
        intervals.push(ContactInterval {
            first: s,
            last: gap.len() - 1,
        });
    }
    intervals
}

fn sheet_disc(problem: &StackProblem, orientation: f64, scale: f64) -> SheetDisc {
    SheetDisc {
        n: problem.n,
        h: 1.0 / problem.n as f64,
        c: problem.c,
        orientation,
        scale,
    }
}

/// Minimizes the single-sheet energy with Dirichlet condition `u(1) = −ε`
/// and no obstacle. The minimizer is the spherical cap of radius `2/c`.
///
/// Non-convergence within `max_iters` is reported through
/// `converged == false` so the best iterate stays available.
pub fn solve_single_sheet(
    problem: &StackProblem,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    let init = default_init(problem);
    solve_single_sheet_from(problem, cfg, &init)
}

pub fn solve_single_sheet_from(
    problem: &StackProblem,
    cfg: &SolverConfig,
    init: &[f64],
) -> Result<SolveReport, SolverError> {
    if problem.mode != Mode::SingleSheet {
        return Err(GeometryError::InvalidProblem(format!(
            "solve_single_sheet needs SingleSheet mode, got {:?}",
            problem.mode
        ))
        .into());
    }
    if problem.c > 2.0 {
        return Err(SolverError::NonCoercive { c: problem.c });
    }
    let sheet = SheetProblem {
        disc: sheet_disc(problem, 1.0, 1.0),
        bc: -problem.eps,
        upper_bound: 1.0,
    };
    let out = minimize(&sheet, cfg, init.to_vec());
    let lower = RadialProfile::new(out.x)?;
    let energy = ah_energy(problem, &lower, None)?;
    Ok(SolveReport {
        lower,
        upper: None,
        energy,
        iterations: out.iterations,
        kkt_residual: out.residual,
        contact: Vec::new(),
        converged: out.converged,
    })
}

/// Minimizes `2·E_half[u]` subject to the obstacle `u ≤ 0` and
/// `u(1) = −ε`; the upper sheet is the reflection `−u`.
pub fn solve_symmetric_stack(
    problem: &StackProblem,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    let init = default_init(problem);
    solve_symmetric_stack_from(problem, cfg, &init)
}

pub fn solve_symmetric_stack_from(
    problem: &StackProblem,
    cfg: &SolverConfig,
    init: &[f64],
) -> Result<SolveReport, SolverError> {
    if problem.mode != Mode::SymmetricStack {
        return Err(GeometryError::InvalidProblem(format!(
            "solve_symmetric_stack needs SymmetricStack mode, got {:?}",
            problem.mode
        ))
        .into());
    }
    let sheet = SheetProblem {
        disc: sheet_disc(problem, 1.0, 2.0),
        bc: -problem.eps,
        upper_bound: 0.0,
    };
    let out = minimize(&sheet, cfg, init.to_vec());
    let lower = RadialProfile::new(out.x)?;
    let upper = lower.mirrored();
    let gap: Vec<f64> = lower
        .values()
        .iter()
        .zip(upper.values())
        .map(|(&lo, &up)| up - lo)
        .collect();
    let energy = ah_energy(problem, &lower, None)?;
    Ok(SolveReport {
        lower,
        upper: Some(upper),
        energy,
        iterations: out.iterations,
        kkt_residual: out.residual,
        contact: contact_intervals_from_gap(&gap),
        converged: out.converged,
    })
}

/// Joint minimization over `(u₁, u₂)` with `u₁ ≤ u₂`, `u₁(1) = −ε`,
/// `u₂(1) = +ε`, and no imposed symmetry.
pub fn solve_two_membrane(
    problem: &StackProblem,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    let lower0 = default_init(problem);
    let upper0: Vec<f64> = lower0.iter().map(|&v| -v).collect();
    solve_two_membrane_from(problem, cfg, &lower0, &upper0)
}

pub fn solve_two_membrane_from(
    problem: &StackProblem,
    cfg: &SolverConfig,
    lower0: &[f64],
    upper0: &[f64],
) -> Result<SolveReport, SolverError> {
    if problem.mode != Mode::TwoMembrane {
        return Err(GeometryError::InvalidProblem(format!(
            "solve_two_membrane needs TwoMembrane mode, got {:?}",
            problem.mode
        ))
        .into());
    }
    let n = problem.n;
    assert_eq!(lower0.len(), n + 1);
    assert_eq!(upper0.len(), n + 1);
    let pair = PairProblem {
        lower: sheet_disc(problem, 1.0, 1.0),
        upper: sheet_disc(problem, -1.0, 1.0),
        bc: problem.eps,
    };
    let mut x0 = Vec::with_capacity(2 * (n + 1));
    for i in 0..=n {
        x0.push(lower0[i]);
        x0.push(upper0[i]);
    }
    let out = minimize(&pair, cfg, x0);
    let (a, b) = PairProblem::split(&out.x);
    let lower = RadialProfile::new(a)?;
    let upper = RadialProfile::new(b)?;
    let gap: Vec<f64> = lower
        .values()
        .iter()
        .zip(upper.values())
        .map(|(&lo, &up)| up - lo)
        .collect();
    let energy = ah_energy(problem, &lower, Some(&upper))?;
    Ok(SolveReport {
        lower,
        upper: Some(upper),
        energy,
        iterations: out.iterations,
        kkt_residual: out.residual,
        contact: contact_intervals_from_gap(&gap),
        converged: out.converged,
    })
}

// ---------------------------------------------------------------------------
// Shooting oracle
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature with Richardson correction.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Height drop `−∫_{r*}^1 u′(r; r*) dr` of the separated branch, where the
/// flux form of the Euler-Lagrange equation with `u′(r*) = 0` gives
/// `u′/√(1+u′²) = −(c/2)(r² − r*²)/r`.
fn branch_drop(c: f64, r_star: f64, quad_tol: f64) -> f64 {
    let slope = move |r: f64| {
        let phi = -(0.5 * c) * (r * r - r_star * r_star) / r;
        phi / (1.0 - phi * phi).sqrt()
    };
    -adaptive_simpson(&slope, r_star.max(1e-300), 1.0, quad_tol)
}

/// Independent free-boundary radius: bisection on `r*` so that the separated
/// branch drops exactly `ε` between `r*` and the wall, with adaptive
/// quadrature of the slope. Returns `r*` within `10⁻⁸`.
pub fn shooting_oracle(c: f64, eps: f64) -> Result<f64, SolverError> {
    shooting_oracle_with_quad_tol(c, eps, 1e-10)
}

/// Same as [`shooting_oracle`] with an explicit quadrature tolerance, for
/// cross-checking the oracle against itself at two tolerances.
pub fn shooting_oracle_with_quad_tol(c: f64, eps: f64, quad_tol: f64) -> Result<f64, SolverError> {
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(GeometryError::InvalidProblem(format!(
            "separation eps must lie strictly in (0, 1), got {eps}"
        ))
        .into());
    }
    let touching = touching_eps(c)?;
    if eps >= touching {
        return Err(SolverError::NoContact { eps, touching });
    }
    let mut lo = 0.0f64; // drop(lo) = eps* > eps
    let mut hi = 1.0f64; // drop(hi) = 0 < eps
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if branch_drop(c, mid, quad_tol) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Convenience wrapper dispatching on the problem's mode.
pub fn solve(problem: &StackProblem, cfg: &SolverConfig) -> Result<SolveReport, SolverError> {
    match problem.mode {
        Mode::SingleSheet => solve_single_sheet(problem, cfg),
        Mode::SymmetricStack => solve_symmetric_stack(problem, cfg),
        Mode::TwoMembrane => solve_two_membrane(problem, cfg),
    }
}
