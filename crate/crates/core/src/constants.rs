//! Explicit feasibility constants and mass-bound logic for the min-max
//! setup on the 3-sphere.
//!
//! Everything here is an exact composition of minima, powers and arithmetic
//! on user-supplied inputs. The two displayed mass bounds are
//! `upper = 4π + v·c` and `lower = 8π/((1+κ)² + c²/4)`; a point of density
//! two is impossible (density one is forced) exactly when `lower > upper`,
//! and the largest `c` for which that holds at `v = 2π²`, `κ = 0` is
//! 0.5477736…, quoted as 0.547 after truncation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConstantsError {
    #[error("invalid constants input: {0}")]
    InvalidInput(String),
    /// `lower ≤ upper` already at `c = 0`; no positive threshold exists.
    #[error("no threshold: mass lower bound does not exceed the upper bound at c = 0")]
    NoThreshold,
    /// The isoperimetric check only applies below the volume gate `η`.
    #[error("inapplicable: volume {volume} exceeds eta = {eta}")]
    Inapplicable { volume: f64, eta: f64 },
}

/// Inputs for the local-control constants δ₁, δ₂ and η.
///
/// The dimensionless thin-tube constants δ and c₁(μ) have no canonical
/// numeric values; they are user inputs with documented defaults
/// (δ = 0.1, c₁ = 1) used only in examples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalControlConstants {
    /// Geodesic chart radius ρ₀ > 0.
    pub rho0: f64,
    /// Metric-derivative bound μ > 0.
    pub mu: f64,
    /// Slice isoperimetric constant β₀ ≥ 1.
    pub beta0: f64,
    /// Thin-tube constant δ ∈ (0, 1).
    pub delta_tube: f64,
    /// Thin-tube volume constant c₁ = c₁(μ) > 0.
    pub c1: f64,
    /// Ambient volume H³(M) > 0.
    pub vol_m: f64,
    /// Prescribing bound c = sup|h| ≥ 0.
    pub c: f64,
    /// Collar width θ ∈ (0, 1/2).
    pub theta: f64,
    /// Collar isoperimetric constant β ≥ 1.
    pub beta: f64,
}

impl LocalControlConstants {
    pub fn validated(self) -> Result<Self, ConstantsError> {
        let checks: [(bool, &str); 9] = [
            (self.rho0 > 0.0, "rho0 must be > 0"),
            (self.mu > 0.0, "mu must be > 0"),
            (self.beta0 >= 1.0, "beta0 must be >= 1"),
            (
                self.delta_tube > 0.0 && self.delta_tube < 1.0,
                "delta must lie in (0, 1)",
            ),
            (self.c1 > 0.0, "c1 must be > 0"),
            (self.vol_m > 0.0, "vol_m must be > 0"),
            (self.c >= 0.0, "c must be >= 0"),
            (
                self.theta > 0.0 && self.theta < 0.5,
                "theta must lie in (0, 1/2)",
            ),
            (self.beta >= 1.0, "beta must be >= 1"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ConstantsError::InvalidInput(msg.into()));
            }
        }
        Ok(self)
    }
}

impl Default for LocalControlConstants {
    fn default() -> Self {
        Self {
            rho0: 1.0,
            mu: 1.0,
            beta0: 1.0,
            delta_tube: 0.1,
            c1: 1.0,
            vol_m: 2.0 * PI * PI,
            c: 0.0,
            theta: 0.25,
            beta: 1.0,
        }
    }
}

/// Inputs for the mass bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBoundInputs {
    /// Volume bound v > 0.
    pub v: f64,
    /// Second-fundamental-form slack κ ≥ 0.
    pub kappa: f64,
    /// Prescribing bound c ≥ 0.
    pub c: f64,
}

impl MassBoundInputs {
    pub fn new(v: f64, kappa: f64, c: f64) -> Result<Self, ConstantsError> {
        // NaN fails every comparison, so each guard also rejects NaN
        if v.is_nan() || v <= 0.0 {
            return Err(ConstantsError::InvalidInput(format!(
                "volume bound v must be > 0, got {v}"
            )));
        }
        if kappa.is_nan() || kappa < 0.0 {
            return Err(ConstantsError::InvalidInput(format!(
                "kappa must be >= 0, got {kappa}"
            )));
        }
        if c.is_nan() || c < 0.0 {
            return Err(ConstantsError::InvalidInput(format!(
                "c must be >= 0, got {c}"
            )));
        }
        Ok(Self { v, kappa, c })
    }
}

/// Both mass bounds and whether their strict ordering forces density one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBounds {
    pub upper: f64,
    pub lower: f64,
    pub density_one_forced: bool,
}

/// Five-term minimum behind the area-comparison collar constant:
/// `min{δ, θ/((1+128c₁)√β), θ/(9√β (1/32 + c·c₁)^{1/2}), (vol/(4c₁))^{1/3}, 1}`.
fn collar_min(theta: f64, beta: f64, inputs: &LocalControlConstants) -> f64 {
    let t1 = inputs.delta_tube;
    let t2 = theta / ((1.0 + 128.0 * inputs.c1) * beta.sqrt());
    let t3 = theta / (9.0 * beta.sqrt() * (1.0 / 32.0 + inputs.c * inputs.c1).sqrt());
    let t4 = (inputs.vol_m / (4.0 * inputs.c1)).cbrt();
    t1.min(t2).min(t3).min(t4).min(1.0)
}

/// Area-comparison constant δ₁ with the collar data (θ, β).
pub fn delta1(inputs: &LocalControlConstants) -> f64 {
    collar_min(inputs.theta, inputs.beta, inputs)
}

/// Setup constant δ₂: the same minimum with θ ↦ ρ₀/2 and β ↦ β₀.
pub fn delta2(inputs: &LocalControlConstants) -> f64 {
    collar_min(inputs.rho0 / 2.0, inputs.beta0, inputs)
}

/// Replacement volume gate `η = min{vol/2, 1/(8c³c₁²), c₁δ³}`; the middle
/// term is treated as +∞ when `c = 0`.
pub fn eta(inputs: &LocalControlConstants) -> f64 {
    let t1 = inputs.vol_m / 2.0;
    let t3 = inputs.c1 * inputs.delta_tube.powi(3);
    if inputs.c > 0.0 {
        let t2 = 1.0 / (8.0 * inputs.c.powi(3) * inputs.c1 * inputs.c1);
        t1.min(t2).min(t3)
    } else {
        t1.min(t3)
    }
}

/// Mass upper bound `4π + vc`, lower bound `8π/((1+κ)² + c²/4)`, and the
/// density-one flag `lower > upper`.
pub fn mass_bounds(inputs: &MassBoundInputs) -> MassBounds {
    let upper = 4.0 * PI + inputs.v * inputs.c;
    let denom = (1.0 + inputs.kappa) * (1.0 + inputs.kappa) + inputs.c * inputs.c / 4.0;
    let lower = 8.0 * PI / denom;
    MassBounds {
        upper,
        lower,
        density_one_forced: lower > upper,
    }
}

/// Largest prescribing bound compatible with density one: the root of
/// `8π/((1+κ)² + c²/4) = 4π + vc` in `(0, 2)`, by bisection to 10⁻¹⁰.
pub fn solve_c_max(v: f64, kappa: f64) -> Result<f64, ConstantsError> {
    let gap = |c: f64| {
        let b = mass_bounds(&MassBoundInputs { v, kappa, c });
        b.lower - b.upper
    };
    if gap(0.0) <= 0.0 {
        return Err(ConstantsError::NoThreshold);
    }
    let mut lo = 0.0f64;
    let mut hi = 2.0f64;
    debug_assert!(gap(hi) < 0.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Checks the two small-volume inequalities on
/// a supplied (area, volume) pair: `volume ≤ c₁·area^{3/2}` and
/// `area − c·volume ≥ area/2`. Applies only when `volume ≤ η`.
pub fn check_iso_pmc(
    area: f64,
    volume: f64,
    c: f64,
    c1: f64,
    eta_val: f64,
) -> Result<bool, ConstantsError> {
    if volume > eta_val {
        return Err(ConstantsError::Inapplicable {
            volume,
            eta: eta_val,
        });
    }
    let iso = volume <= c1 * area.powf(1.5);
    let pmc = area - c * volume >= 0.5 * area;
    Ok(iso && pmc)
}

/// Evaluated constants with their mass-bound context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsReport {
    pub delta1: f64,
    pub delta2: f64,
    pub eta: f64,
    pub mass_upper: f64,
    pub mass_lower: f64,
    pub density_one_forced: bool,
    pub c_max: Option<f64>,
}

impl ConstantsReport {
    pub fn evaluate(
        local: &LocalControlConstants,
        mass: &MassBoundInputs,
        solve_max: bool,
    ) -> Self {
        let bounds = mass_bounds(mass);
        let c_max = if solve_max {
            solve_c_max(mass.v, mass.kappa).ok()
        } else {
            None
        };
        Self {
            delta1: delta1(local),
            delta2: delta2(local),
            eta: eta(local),
            mass_upper: bounds.upper,
            mass_lower: bounds.lower,
            density_one_forced: bounds.density_one_forced,
            c_max,
        }
    }

    /// Flat `key=value` text block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "delta1={}", self.delta1);
        let _ = writeln!(out, "delta2={}", self.delta2);
        let _ = writeln!(out, "eta={}", self.eta);
        let _ = writeln!(out, "mass_upper={}", self.mass_upper);
        let _ = writeln!(out, "mass_lower={}", self.mass_lower);
        let _ = writeln!(out, "density_one_forced={}", self.density_one_forced);
        if let Some(c) = self.c_max {
            let _ = writeln!(out, "c_max={c:.6}");
        }
        out
    }

    pub fn csv_header() -> &'static str {
        "delta1,delta2,eta,mass_upper,mass_lower,density_one_forced,c_max"
    }

    /// One CSV row for sweeps; `c_max` is empty when it was not solved.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.delta1,
            self.delta2,
            self.eta,
            self.mass_upper,
            self.mass_lower,
            if self.density_one_forced { 1 } else { 0 },
            self.c_max.map(|c| c.to_string()).unwrap_or_default()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> LocalControlConstants {
        LocalControlConstants {
            rho0: 1.0,
            mu: 1.0,
            beta0: 1.0,
            delta_tube: 0.5,
            c1: 1.0,
            vol_m: 8.0,
            c: 1.0,
            theta: 0.5 - 1e-12,
            beta: 1.0,
        }
    }

    #[test]
    fn delta1_picks_small_delta() {
        let mut inputs = base();
        inputs.delta_tube = 1e-3;
        inputs.theta = 0.4;
        // all other candidate terms exceed 1e-2 here
        assert_eq!(delta1(&inputs), 1e-3);
    }

    #[test]
    fn delta1_worked_example() {
        let mut inputs = base();
        inputs.theta = 0.5;
        let got = delta1(&inputs);
        let expected = 0.5 / 129.0;
        assert!((got - expected).abs() <= f64::EPSILON * expected);
    }

    #[test]
    fn delta1_ignores_inactive_prescribing_term() {
        let mut inputs = base();
        inputs.delta_tube = 0.9;
        inputs.theta = 0.49;
        inputs.c = 0.0;
        let with_zero = delta1(&inputs);
        inputs.c = 1.0;
        let with_one = delta1(&inputs);
        // the second candidate term dominates the third in both cases
        assert_eq!(with_zero, with_one);
        assert_eq!(with_zero, 0.49 / 129.0);
    }

    #[test]
    fn delta2_worked_example_and_scaling() {
        let inputs = base();
        let got = delta2(&inputs);
        let expected = 0.5 / 129.0;
        assert!((got - expected).abs() <= f64::EPSILON * expected);
        // scaling beta0 by 4 halves the sqrt(beta)-scaled candidates
        let mut scaled = inputs;
        scaled.beta0 = 4.0;
        assert!((delta2(&scaled) - expected / 2.0).abs() <= f64::EPSILON);
        // vanishing volume drives delta2 to zero through the cube root
        let mut small = inputs;
        small.vol_m = 1e-30;
        assert!(delta2(&small) < 1e-9);
    }

    #[test]
    fn eta_examples() {
        let mut inputs = base();
        inputs.vol_m = 2.0;
        assert_eq!(eta(&inputs), 0.125);
        // doubling c shrinks the middle term by 8
        inputs.vol_m = 1e9;
        inputs.delta_tube = 0.999;
        let e1 = eta(&inputs);
        inputs.c = 2.0;
        let e2 = eta(&inputs);
        assert!((e1 / e2 - 8.0).abs() < 1e-12);
        // c = 0 drops the middle term
        inputs.c = 0.0;
        inputs.vol_m = 2.0;
        inputs.delta_tube = 0.5;
        assert_eq!(eta(&inputs), 0.125);
    }

    #[test]
    fn mass_bound_examples() {
        let v = 2.0 * PI * PI;
        let half = mass_bounds(&MassBoundInputs::new(v, 0.0, 0.5).unwrap());
        assert!((half.upper - (4.0 * PI + PI * PI)).abs() < 1e-12);
        assert!((half.lower - 8.0 * PI / 1.0625).abs() < 1e-12);
        assert!(half.density_one_forced);
        let past = mass_bounds(&MassBoundInputs::new(v, 0.0, 0.6).unwrap());
        assert!(!past.density_one_forced);
        let minimal = mass_bounds(&MassBoundInputs::new(1.0, 0.0, 0.0).unwrap());
        assert!((minimal.upper - 4.0 * PI).abs() < 1e-12);
        assert!((minimal.lower - 8.0 * PI).abs() < 1e-12);
        assert!(minimal.density_one_forced);
    }

    #[test]
    fn c_max_reproduces_threshold() {
        // root of 2 = (1 + (π/2)c)(1 + c²/4); 0.547 is its 3-digit truncation
        let c = solve_c_max(2.0 * PI * PI, 0.0).unwrap();
        assert!((c - 0.5477736804).abs() < 1e-8, "c_max = {c}");
        assert!((c * 1000.0).floor() / 1000.0 == 0.547);
        // 0.547 itself still satisfies the strict inequality
        let at_quoted = mass_bounds(&MassBoundInputs::new(2.0 * PI * PI, 0.0, 0.547).unwrap());
        assert!(at_quoted.density_one_forced);
    }

    #[test]
    fn c_max_degenerate_cases() {
        // 8π/(1+κ)² = 4π exactly at κ = √2 − 1: no strict threshold
        assert_eq!(
            solve_c_max(2.0 * PI * PI, 2.0f64.sqrt() - 1.0),
            Err(ConstantsError::NoThreshold)
        );
        // vanishing volume bound: root of 8π/(1+c²/4) = 4π is c = 2
        let c = solve_c_max(1e-14, 0.0).unwrap();
        assert!((c - 2.0).abs() < 1e-6, "c_max = {c}");
    }

    #[test]
    fn c_max_monotone_in_v_and_kappa() {
        let vs = [5.0, 10.0, 15.0, 20.0, 25.0];
        let kappas = [0.0, 0.05, 0.1, 0.2, 0.3];
        let mut table = vec![vec![0.0; kappas.len()]; vs.len()];
        for (i, &v) in vs.iter().enumerate() {
            for (j, &k) in kappas.iter().enumerate() {
                table[i][j] = solve_c_max(v, k).unwrap();
            }
        }
        for i in 0..vs.len() {
            for j in 0..kappas.len() {
                if i + 1 < vs.len() {
                    assert!(table[i + 1][j] <= table[i][j] + 1e-10);
                }
                if j + 1 < kappas.len() {
                    assert!(table[i][j + 1] <= table[i][j] + 1e-10);
                }
            }
        }
    }

    #[test]
    fn iso_pmc_on_euclidean_balls() {
        // small ball: area = 4πr², volume = (4/3)πr³
        let r: f64 = 0.05;
        let area = 4.0 * PI * r * r;
        let volume = 4.0 / 3.0 * PI * r.powi(3);
        assert!(check_iso_pmc(area, volume, 1.0, 1.0, 0.1).unwrap());
        // volume above the gate is rejected
        assert!(matches!(
            check_iso_pmc(area, 0.2, 1.0, 1.0, 0.1),
            Err(ConstantsError::Inapplicable { .. })
        ));
        // c1 below the Euclidean isoperimetric constant 1/(6√π) fails iso
        assert!(!check_iso_pmc(area, volume, 0.0, 0.05, 0.1).unwrap());
    }

    #[test]
    fn delta1_dominated_by_delta2() {
        // theta ≤ rho0/2 and beta ≥ beta0 dominate term-wise
        let mut inputs = base();
        inputs.theta = 0.3;
        inputs.beta = 2.0;
        inputs.rho0 = 1.0;
        inputs.beta0 = 1.0;
        assert!(delta1(&inputs) <= delta2(&inputs));
    }

    #[test]
    fn report_text_round() {
        let local = LocalControlConstants::default();
        let mass = MassBoundInputs::new(2.0 * PI * PI, 0.0, 0.5).unwrap();
        let report = ConstantsReport::evaluate(&local, &mass, true);
        let text = report.to_text();
        assert!(text.contains("density_one_forced=true"));
        assert!(text.contains("c_max=0.547774"));
        assert!(ConstantsReport::csv_header().split(',').count() == 7);
        assert!(report.to_csv_row().split(',').count() == 7);
    }
}
