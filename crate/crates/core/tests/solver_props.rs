//! Cross-module solver invariants: descent, exact feasibility, basin
//! independence, and free-boundary monotonicity.

mod common;

use common::{random_admissible_profile, seeded_rng, sup_dist};
use pmc_lab::analysis::contact_radius;
use pmc_lab::constants::{check_iso_pmc, eta, LocalControlConstants};
use pmc_lab::geometry::{ah_energy, graph_area, Mode, RadialProfile, StackProblem};
use pmc_lab::solver::{
    solve_symmetric_stack, solve_symmetric_stack_from, solve_two_membrane_from, SolverConfig,
};
use rand::Rng;

#[test]
fn descent_from_random_feasible_starts() {
    let cfg = SolverConfig::default();
    let n = 300;
    let problem = StackProblem::new(1.0, 0.2, n, Mode::SymmetricStack).unwrap();
    let mut rng = seeded_rng(7);
    for _ in 0..5 {
        let init: Vec<f64> = random_admissible_profile(&mut rng, n, 0.2)
            .into_iter()
            .map(|v| v.min(0.0))
            .collect();
        let start = RadialProfile::new(init.clone()).unwrap();
        let e_start = ah_energy(&problem, &start, None).unwrap().total;
        let report = solve_symmetric_stack_from(&problem, &cfg, &init).unwrap();
        assert!(report.converged);
        assert!(report.energy.total <= e_start + 1e-12);
    }
}

#[test]
fn iterates_end_exactly_feasible() {
    let cfg = SolverConfig::default();
    let stack = StackProblem::new(1.0, 0.1, 500, Mode::SymmetricStack).unwrap();
    let report = solve_symmetric_stack(&stack, &cfg).unwrap();
    for &v in report.lower.values() {
        assert!(v <= 0.0);
        assert!(v >= -1.0);
    }
    let problem = StackProblem::new(1.0, 0.1, 300, Mode::TwoMembrane).unwrap();
    let mut rng = seeded_rng(13);
    let lower0 = random_admissible_profile(&mut rng, 300, 0.1);
    let upper0 = random_admissible_profile(&mut rng, 300, -0.1);
    let report = solve_two_membrane_from(&problem, &cfg, &lower0, &upper0).unwrap();
    let upper = report.upper.as_ref().unwrap();
    for (&lo, &up) in report.lower.values().iter().zip(upper.values()) {
        assert!(lo <= up);
    }
}

#[test]
fn two_membrane_symmetry_is_basin_independent() {
    let cfg = SolverConfig::default();
    let n = 300;
    let problem = StackProblem::new(1.0, 0.1, n, Mode::TwoMembrane).unwrap();
    let mut rng = seeded_rng(42);
    let mut reference: Option<Vec<f64>> = None;
    for seed in 0..5 {
        let mut lower0 = random_admissible_profile(&mut rng, n, 0.1);
        let mut upper0 = random_admissible_profile(&mut rng, n, -0.1);
        // random vertical shifts keep the start asymmetric
        let shift: f64 = rng.gen_range(-0.2..0.2);
        for v in &mut lower0 {
            *v = (*v - shift.abs()).clamp(-1.0, 1.0);
        }
        for v in &mut upper0 {
            *v = (*v + 0.1 * shift).clamp(-1.0, 1.0);
        }
        lower0[n] = -0.1;
        upper0[n] = 0.1;
        let report = solve_two_membrane_from(&problem, &cfg, &lower0, &upper0).unwrap();
        assert!(report.converged, "seed {seed}");
        let upper = report.upper.as_ref().unwrap();
        let asym = report
            .lower
            .values()
            .iter()
            .zip(upper.values())
            .map(|(&lo, &up)| (lo + up).abs())
            .fold(0.0, f64::max);
        assert!(asym <= 10.0 * cfg.grad_tol, "seed {seed}: asymmetry {asym}");
        match &reference {
            None => reference = Some(report.lower.values().to_vec()),
            Some(r) => {
                let d = sup_dist(r, report.lower.values());
                assert!(d <= 1e-6, "seed {seed}: basin distance {d}");
            }
        }
    }
}

#[test]
fn contact_radius_monotone_in_separation() {
    let cfg = SolverConfig::default();
    let mut prev = f64::INFINITY;
    for eps in [0.05, 0.08, 0.11, 0.14, 0.17, 0.2, 0.23] {
        let problem = StackProblem::new(1.0, eps, 500, Mode::SymmetricStack).unwrap();
        let report = solve_symmetric_stack(&problem, &cfg).unwrap();
        assert!(report.converged);
        let r = contact_radius(&report).unwrap();
        assert!(r <= prev + 1e-12, "r*({eps}) = {r} exceeds previous {prev}");
        prev = r;
    }
}

#[test]
fn small_volume_minimizers_pass_the_iso_pmc_check() {
    // a weakly prescribed stack keeps A^c above half its area once its
    // volume fits under the eta gate
    let cfg = SolverConfig::default();
    let problem = StackProblem::new(0.01, 0.3, 400, Mode::SymmetricStack).unwrap();
    let report = solve_symmetric_stack(&problem, &cfg).unwrap();
    assert!(report.converged);
    let local = LocalControlConstants {
        c1: 20.0,
        delta_tube: 0.9,
        vol_m: 100.0,
        c: problem.c,
        ..LocalControlConstants::default()
    };
    let gate = eta(&local);
    assert!(report.energy.volume <= gate, "volume above the eta gate");
    let ok = check_iso_pmc(
        report.energy.area,
        report.energy.volume,
        problem.c,
        local.c1,
        gate,
    )
    .unwrap();
    assert!(ok);
    // the same shape with a large volume is rejected as inapplicable
    assert!(check_iso_pmc(
        report.energy.area,
        report.energy.volume,
        problem.c,
        local.c1,
        0.1
    )
    .is_err());
}

#[test]
fn area_floor_over_random_profiles() {
    let mut rng = seeded_rng(99);
    for _ in 0..50 {
        let p = RadialProfile::new(random_admissible_profile(&mut rng, 200, 0.3)).unwrap();
        assert!(graph_area(&p) >= std::f64::consts::PI - 1e-12);
    }
}
