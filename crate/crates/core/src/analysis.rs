//! Regularity and stability diagnostics for solved configurations.
//!
//! The contact boundary of a stack minimizer is where C² regularity fails
//! while C^{1,1} persists: the radial equation forces the one-sided second
//! derivative to jump from 0 (contact side) to −c (free side) at the free
//! boundary where `u′ = 0`. The scan below measures that jump and the
//! bounded-second-difference proxy directly from the grid solution.

use thiserror::Error;

use crate::geometry::RadialProfile;
use crate::solver::SolveReport;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("no free boundary: the contact set is empty")]
    NoFreeBoundary,
    /// Contact that does not reach the center flags a solver anomaly.
    #[error("contact set does not contain the center node (starts at {first})")]
    DisconnectedContact { first: usize },
}

/// Discrete C^{1,1}-versus-C² diagnostics of a solved profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// Sup of centered second differences `|u_{i−1} − 2u_i + u_{i+1}|/h²`
    /// over interior nodes, excluding two nodes on each side of the free
    /// boundary when one exists.
    pub max_second_diff: f64,
    /// One-sided second difference on the contact side minus the one on the
    /// free side, both taken 3 cells away from the free boundary; absent
    /// when the contact set is empty or spans the whole grid.
    pub second_diff_jump_at_fb: Option<f64>,
    /// Sup of third differences near the free boundary (global when there
    /// is none); grows like `c·n` when the second derivative jumps.
    pub max_third_diff: f64,
    pub grid_n: usize,
}

/// Evaluation of the second-variation quadratic form on a radial graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityResult {
    /// `∫_Σ |∇^Σψ|² − (|A^Σ|² + Ric(ν,ν))ψ²`.
    pub lhs: f64,
    /// `∫ (H^Σ h + ∂_ν h − |H^Σ|²) ψ²`.
    pub rhs: f64,
    /// `lhs − rhs`; nonnegative for weakly stable configurations.
    pub margin: f64,
}

/// Outermost contiguous contact node from the center, or `None` when the
/// report has no usable free boundary.
fn free_boundary_node(report: &SolveReport) -> Option<usize> {
    let iv = report.contact.first()?;
    if iv.first != 0 {
        return None;
    }
    if iv.last >= report.lower.n() {
        return None; // contact spans the whole grid
    }
    Some(iv.last)
}

fn second_diff(u: &[f64], i: usize, h: f64) -> f64 {
    (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h)
}

fn third_diff(u: &[f64], i: usize, h: f64) -> f64 {
    (u[i + 2] - 3.0 * u[i + 1] + 3.0 * u[i] - u[i - 1]) / (h * h * h)
}

/// Second- and third-difference scan of the lower sheet of a solve.
///
/// The sup bound skips the two nodes nearest the free boundary; the jump is
/// estimated from one-sided stencils 3 cells to each side, which keeps the
/// kink cell out of both stencils. Jump fields are absent when the contact
/// set is empty or covers the grid.
pub fn regularity_scan(report: &SolveReport) -> RegularityReport {
    let u = report.lower.values();
    let n = report.lower.n();
    let h = report.lower.spacing();
    let fb = free_boundary_node(report);

    let mut max_second: f64 = 0.0;
    for i in 1..n {
        if let Some(k) = fb {
            if i + 2 >= k && i <= k + 2 {
                continue;
            }
        }
        max_second = max_second.max(second_diff(u, i, h).abs());
    }

    let jump = fb.and_then(|k| {
        if k >= 4 && k + 4 <= n {
            let inner = second_diff(u, k - 3, h);
            let outer = second_diff(u, k + 3, h);
            Some(inner - outer)
        } else {
            None
        }
    });

    let mut max_third: f64 = 0.0;
    let (lo, hi) = match fb {
        Some(k) => (k.saturating_sub(6).max(1), (k + 6).min(n - 2)),
        None => (1, n - 2),
    };
    for i in lo..=hi {
        max_third = max_third.max(third_diff(u, i, h).abs());
    }

    RegularityReport {
        max_second_diff: max_second,
        second_diff_jump_at_fb: jump,
        max_third_diff: max_third,
        grid_n: n,
    }
}

/// Outer radius of the contact interval containing the center node, placed
/// half a cell beyond the outermost active node.
pub fn contact_radius(report: &SolveReport) -> Result<f64, AnalysisError> {
    let iv = report
        .contact
        .first()
        .ok_or(AnalysisError::NoFreeBoundary)?;
    if iv.first != 0 {
        return Err(AnalysisError::DisconnectedContact { first: iv.first });
    }
    let n = report.lower.n() as f64;
    Ok((iv.last as f64 + 0.5) / n)
}

/// Evaluates both sides of the stability inequality on the graph of
/// `profile` for the test function `psi` (sampled at the same nodes, zero at
/// the boundary node).
///
/// On a radial graph in the flat cylinder the principal curvatures are
/// `κ₁ = −u″/(1+u′²)^{3/2}` and `κ₂ = −u′/(r√(1+u′²))`, signed so the
/// upward-curved cap of radius `2/c` has `H = κ₁ + κ₂ = c`. The ambient
/// terms `Ric(ν,ν)` and `∂_ν h` vanish here but stay in the formula.
pub fn stability_form(profile: &RadialProfile, c: f64, psi: &[f64]) -> StabilityResult {
    let u = profile.values();
    let n = profile.n();
    let h = profile.spacing();
    assert_eq!(psi.len(), n + 1, "test function must live on the same grid");
    assert!(
        psi[n] == 0.0,
        "test function must vanish at the boundary node"
    );

    let ric_nu_nu = 0.0; // flat metric
    let dnu_h = 0.0; // constant prescribing function

    // gradient term over cells: |∇^Σψ|² dA = (ψ′² / W²) · 2πr W dr
    let mut grad_term = 0.0;
    for j in 0..n {
        let rm = (j as f64 + 0.5) * h;
        let p = (u[j + 1] - u[j]) / h;
        let w = (1.0 + p * p).sqrt();
        let dpsi = (psi[j + 1] - psi[j]) / h;
        grad_term += 2.0 * std::f64::consts::PI * rm * (dpsi * dpsi / w) * h;
    }

    // curvature terms over interior nodes with weight 2πr W h
    let mut lhs_curv = 0.0;
    let mut rhs = 0.0;
    for i in 1..n {
        let r = i as f64 * h;
        let du = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let ddu = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        let w2 = 1.0 + du * du;
        let w = w2.sqrt();
        let kappa1 = -ddu / (w2 * w);
        let kappa2 = -du / (r * w);
        let sq_norm_a = kappa1 * kappa1 + kappa2 * kappa2;
        let mean_h = kappa1 + kappa2;
        let weight = 2.0 * std::f64::consts::PI * r * w * h;
        let psi2 = psi[i] * psi[i];
        lhs_curv += weight * (sq_norm_a + ric_nu_nu) * psi2;
        rhs += weight * (mean_h * c + dnu_h - mean_h * mean_h) * psi2;
    }

    let lhs = grad_term - lhs_curv;
    StabilityResult {
        lhs,
        rhs,
        margin: lhs - rhs,
    }
}

/// Fixed suite of ten polynomial bump test functions vanishing at `r = 1`,
/// sampled on the grid.
pub fn standard_test_suite(n: usize) -> Vec<Vec<f64>> {
    let sample = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..=n)
            .map(|i| {
                let r = i as f64 / n as f64;
                if i == n {
                    0.0
                } else {
                    f(r)
                }
            })
            .collect()
    };
    let mut suite: Vec<Vec<f64>> = Vec::with_capacity(10);
    for k in 1..=5 {
        suite.push(sample(&|r: f64| (1.0 - r).powi(k)));
    }
    for k in 1..=3 {
        suite.push(sample(&|r: f64| (1.0 - r * r).powi(k)));
    }
    suite.push(sample(&|r: f64| r * (1.0 - r)));
    suite.push(sample(&|r: f64| r * r * (1.0 - r) * (1.0 - r)));
    suite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cap_profile, Mode, RadialProfile, StackProblem};
    use crate::solver::{solve_single_sheet, solve_symmetric_stack, SolverConfig};

    #[test]
    fn null_variation_vanishes() {
        let p = cap_profile(1.0, 0.4, 200).unwrap();
        let psi = vec![0.0; 201];
        let s = stability_form(&p, 1.0, &psi);
        assert_eq!(s.lhs, 0.0);
        assert_eq!(s.rhs, 0.0);
        assert_eq!(s.margin, 0.0);
    }

    #[test]
    fn flat_minimal_disk_is_stable() {
        let p = RadialProfile::constant(300, -0.3).unwrap();
        for psi in standard_test_suite(300) {
            let s = stability_form(&p, 0.0, &psi);
            assert_eq!(s.rhs, 0.0);
            assert!(s.lhs >= 0.0);
            assert!(s.margin >= 0.0);
        }
    }

    #[test]
    fn exact_cap_stability_and_curvature() {
        let n = 1000;
        let p = cap_profile(1.0, 0.4, n).unwrap();
        // |A|² = c²/2 and H = c on the cap away from the boundary
        let u = p.values();
        let h = p.spacing();
        let i = n / 2;
        let du = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let ddu = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        let w2 = 1.0 + du * du;
        let mean_h = -ddu / (w2 * w2.sqrt()) - du / (p.radius(i) * w2.sqrt());
        assert!((mean_h - 1.0).abs() < 1e-5, "H = {mean_h}");
        for (k, psi) in standard_test_suite(n).into_iter().enumerate() {
            let s = stability_form(&p, 1.0, &psi);
            assert!(s.rhs.abs() < 1e-5, "cap rhs {r} for psi {k}", r = s.rhs);
            assert!(s.margin >= 0.0, "margin {m} for psi {k}", m = s.margin);
        }
    }

    #[test]
    fn cap_regularity_without_free_boundary() {
        let problem = StackProblem::new(1.0, 0.4, 1000, Mode::SingleSheet).unwrap();
        let report = solve_single_sheet(&problem, &SolverConfig::default()).unwrap();
        let scan = regularity_scan(&report);
        assert!(scan.second_diff_jump_at_fb.is_none());
        // analytic max |u''| of the cap: R²/(R²−1)^{3/2} at the wall
        let expected = 4.0 / 3.0f64.powf(1.5);
        let rel = (scan.max_second_diff - expected).abs() / expected;
        assert!(rel < 0.02, "max second diff {}", scan.max_second_diff);
        assert!(matches!(
            contact_radius(&report),
            Err(AnalysisError::NoFreeBoundary)
        ));
    }

    #[test]
    fn stack_regularity_jump_near_prescribing_constant() {
        let problem = StackProblem::new(1.0, 0.1, 1000, Mode::SymmetricStack).unwrap();
        let report = solve_symmetric_stack(&problem, &SolverConfig::default()).unwrap();
        let scan = regularity_scan(&report);
        let jump = scan.second_diff_jump_at_fb.expect("free boundary exists");
        assert!((jump - 1.0).abs() < 0.1, "jump {jump}");
        assert!(scan.max_second_diff < 1.1);
        let r = contact_radius(&report).unwrap();
        assert!(r > 0.05);
    }

    #[test]
    fn third_difference_grows_with_resolution() {
        let cfg = SolverConfig::default();
        let mut prev = 0.0;
        for n in [250usize, 500, 1000] {
            let problem = StackProblem::new(1.0, 0.1, n, Mode::SymmetricStack).unwrap();
            let report = solve_symmetric_stack(&problem, &cfg).unwrap();
            let scan = regularity_scan(&report);
            assert!(
                scan.max_third_diff > prev,
                "third diff stalled at n = {n}: {} <= {prev}",
                scan.max_third_diff
            );
            prev = scan.max_third_diff;
        }
    }
}
