//! Domain types and discrete energies for radial graphs in the unit cylinder.
//!
//! The cylinder is `U = B₁ × (−1, 1)`. A sheet is the graph of a height
//! function `u(r)` on a uniform radial grid `r_i = i/n`. The energy of the
//! region below a sheet is `A^c = area − c·volume` with
//! `area = ∫ 2πr √(1+u′²) dr` and `volume = ∫ 2πr (u+1) dr`.
//!
//! Quadrature convention (fixed so energies are reproducible bit-for-bit):
//! both integrals are evaluated cell-wise with the radius at cell midpoints
//! `r_{j+1/2}` and the slope `u′` as the forward difference on the cell. The
//! weight `2πr` vanishes at `r = 0`, so the center node carries no area
//! weight and needs no special-casing beyond the volume quadrature.

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid radial profile: {0}")]
    InvalidProfile(String),
    #[error("invalid problem data: {0}")]
    InvalidProblem(String),
    /// Two ordered sheets cross: `lower > upper` at a node.
    #[error("ordering violated at node {index}: lower = {lower}, upper = {upper}")]
    OrderingViolation {
        index: usize,
        lower: f64,
        upper: f64,
    },
    /// A spherical cap of radius `2/c` cannot span the unit disk (`c > 2`).
    #[error("cap radius 2/c = {radius} is below 1 (c = {c}); no spanning cap exists")]
    RadiusTooSmall { c: f64, radius: f64 },
}

/// Scalar height function on the uniform radial grid `r_i = i/n`, `i = 0..n`.
///
/// Heights are confined to `[−1, 1]` so the graph stays inside the cylinder.
/// The last value is the Dirichlet boundary height at `r = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() < 2 {
            return Err(GeometryError::InvalidProfile(format!(
                "need at least 2 nodes, got {}",
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeometryError::InvalidProfile(format!(
                    "non-finite height {v} at node {i}"
                )));
            }
            if !(-1.0..=1.0).contains(&v) {
                return Err(GeometryError::InvalidProfile(format!(
                    "height {v} at node {i} leaves the cylinder [-1, 1]"
                )));
            }
        }
        Ok(Self { values })
    }

    /// Samples `f(r)` at the `n + 1` grid nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, GeometryError> {
        let h = 1.0 / n as f64;
        Self::new((0..=n).map(|i| f(i as f64 * h)).collect())
    }

    /// Constant profile `u ≡ value`.
    pub fn constant(n: usize, value: f64) -> Result<Self, GeometryError> {
        Self::new(vec![value; n + 1])
    }

    /// Number of cells (nodes are `0..=n`).
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn boundary_value(&self) -> f64 {
        *self.values.last().expect("profile has nodes")
    }

    /// Grid spacing `h = 1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// Radius of node `i`.
    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Vertical reflection `r ↦ −u(r)`; normalizes `−0` to `0`.
    pub fn mirrored(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v + 0.0).collect(),
        }
    }

    /// CSV with header `r,u`, radii ascending, round-trip exact doubles,
    /// '.' decimal separator and '\n' line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,u\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.radius(i), v);
        }
        out
    }
}

/// Minimization mode for a stack problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// One sheet, Dirichlet boundary `u(1) = −ε`, no obstacle.
    SingleSheet,
    /// Lower sheet with obstacle `u ≤ 0`; upper sheet is the reflection `−u`.
    SymmetricStack,
    /// Two independent sheets `u₁ ≤ u₂` with boundary heights `∓ε`.
    TwoMembrane,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SingleSheet => "single",
            Mode::SymmetricStack => "stack",
            Mode::TwoMembrane => "membrane",
        }
    }
}

/// One instance of the stacked-sheet minimization in the unit cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackProblem {
    pub c: f64,
    pub eps: f64,
    pub n: usize,
    pub mode: Mode,
}

impl StackProblem {
    pub fn new(c: f64, eps: f64, n: usize, mode: Mode) -> Result<Self, GeometryError> {
        if !c.is_finite() || c < 0.0 {
            return Err(GeometryError::InvalidProblem(format!(
                "prescribing constant c must be finite and >= 0, got {c}"
            )));
        }
        if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
            return Err(GeometryError::InvalidProblem(format!(
                "separation eps must lie strictly in (0, 1), got {eps}"
            )));
        }
        if n < 2 {
            return Err(GeometryError::InvalidProblem(format!(
                "grid resolution n must be >= 2, got {n}"
            )));
        }
        Ok(Self { c, eps, n, mode })
    }
}

/// Area term, volume term and total `A^c` value of a configuration.
///
/// `total` is always formed from the two stored terms (single rounding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub area: f64,
    pub volume: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(area: f64, volume: f64, c: f64) -> Self {
        Self {
            area,
            volume,
            total: area - c * volume,
        }
    }
}

/// Closed-form data of the spherical cap of radius `R = 2/c` spanning the
/// unit disk with boundary height `−ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapParams {
    /// `R = 2/c`.
    pub radius: f64,
    /// Height of the cap apex above the mid-plane: `R − √(R²−1) − ε`.
    pub apex_height: f64,
    /// Separation at which the apex sits exactly on the mid-plane.
    pub touching_eps: f64,
}

impl CapParams {
    pub fn new(c: f64, eps: f64) -> Result<Self, GeometryError> {
        let te = touching_eps(c)?;
        Ok(Self {
            radius: 2.0 / c,
            apex_height: te - eps,
            touching_eps: te,
        })
    }
}

fn cell_weights(n: usize) -> impl Iterator<Item = (usize, f64)> {
    // (cell index j, midpoint radius r_{j+1/2})
    let h = 1.0 / n as f64;
    (0..n).map(move |j| (j, (j as f64 + 0.5) * h))
}

/// Discrete area `∫₀¹ 2πr √(1 + u′²) dr` of a radial graph.
///
/// Midpoint weights, forward-difference slopes; second-order accurate for
/// smooth profiles and exact for affine ones.
pub fn graph_area(profile: &RadialProfile) -> f64 {
    let u = profile.values();
    let n = profile.n();
    let h = profile.spacing();
    let mut area = 0.0;
    for (j, rm) in cell_weights(n) {
        let slope = (u[j + 1] - u[j]) / h;
        area += 2.0 * PI * rm * (1.0 + slope * slope).sqrt() * h;
    }
    area
}

/// Discrete volume `∫₀¹ 2πr (u + 1) dr` of the region between the floor
/// `z = −1` and the graph. Midpoint rule; linear in `u`.
pub fn region_volume(profile: &RadialProfile) -> f64 {
    let u = profile.values();
    let n = profile.n();
    let h = profile.spacing();
    let mut vol = 0.0;
    for (j, rm) in cell_weights(n) {
        let um = 0.5 * (u[j] + u[j + 1]);
        vol += 2.0 * PI * rm * (um + 1.0) * h;
    }
    vol
}

/// Discrete volume `∫₀¹ 2πr (1 − v) dr` of the mirror region between the
/// graph of `v` and the lid `z = 1`.
pub fn region_volume_above(profile: &RadialProfile) -> f64 {
    let v = profile.values();
    let n = profile.n();
    let h = profile.spacing();
    let mut vol = 0.0;
    for (j, rm) in cell_weights(n) {
        let vm = 0.5 * (v[j] + v[j + 1]);
        vol += 2.0 * PI * rm * (1.0 - vm) * h;
    }
    vol
}

/// Discrete `A^c` energy of a configuration.
///
/// `SingleSheet` takes the lower sheet only (`upper` must be `None`).
/// `SymmetricStack` derives the upper sheet as the reflection `−lower` and
/// returns exactly twice the half-energy. `TwoMembrane` takes both sheets
/// and charges the volume below `lower` plus the volume above `upper`.
pub fn ah_energy(
    problem: &StackProblem,
    lower: &RadialProfile,
    upper: Option<&RadialProfile>,
) -> Result<EnergyBreakdown, GeometryError> {
    let c = problem.c;
    match problem.mode {
        Mode::SingleSheet => {
            if upper.is_some() {
                return Err(GeometryError::InvalidProblem(
                    "SingleSheet mode takes no upper sheet".into(),
                ));
            }
            Ok(EnergyBreakdown::new(
                graph_area(lower),
                region_volume(lower),
                c,
            ))
        }
        Mode::SymmetricStack => {
            if upper.is_some() {
                return Err(GeometryError::InvalidProblem(
                    "SymmetricStack derives the upper sheet as -lower; pass None".into(),
                ));
            }
            for (i, &v) in lower.values().iter().enumerate() {
                if v > -v {
                    return Err(GeometryError::OrderingViolation {
                        index: i,
                        lower: v,
                        upper: -v,
                    });
                }
            }
            let half = EnergyBreakdown::new(graph_area(lower), region_volume(lower), c);
            Ok(EnergyBreakdown {
                area: 2.0 * half.area,
                volume: 2.0 * half.volume,
                total: 2.0 * half.total,
            })
        }
        Mode::TwoMembrane => {
            let upper = upper.ok_or_else(|| {
                GeometryError::InvalidProblem("TwoMembrane mode needs an upper sheet".into())
            })?;
            if lower.n() != upper.n() {
                return Err(GeometryError::InvalidProblem(format!(
                    "sheet grids differ: {} vs {}",
                    lower.n(),
                    upper.n()
                )));
            }
            for (i, (&lo, &up)) in lower.values().iter().zip(upper.values()).enumerate() {
                if lo > up {
                    return Err(GeometryError::OrderingViolation {
                        index: i,
                        lower: lo,
                        upper: up,
                    });
                }
            }
            let area = graph_area(lower) + graph_area(upper);
            let volume = region_volume(lower) + region_volume_above(upper);
            Ok(EnergyBreakdown::new(area, volume, c))
        }
    }
}

/// Separation at which the cap apex sits exactly on the mid-plane:
/// `ε*(c) = R − √(R²−1)` with `R = 2/c`, evaluated as `1/(R + √(R²−1))`.
pub fn touching_eps(c: f64) -> Result<f64, GeometryError> {
    if !c.is_finite() || c <= 0.0 {
        return Err(GeometryError::InvalidProblem(format!(
            "cap construction needs c in (0, 2], got {c}"
        )));
    }
    let radius = 2.0 / c;
    if radius < 1.0 {
        return Err(GeometryError::RadiusTooSmall { c, radius });
    }
    Ok(1.0 / (radius + (radius * radius - 1.0).sqrt()))
}

/// Samples the spherical-cap solution `u(r) = √(R²−r²) − √(R²−1) − ε`,
/// `R = 2/c`, at the grid nodes. The boundary node is set to `−ε` exactly
/// and `u` is strictly decreasing in `r`.
pub fn cap_profile(c: f64, eps: f64, n: usize) -> Result<RadialProfile, GeometryError> {
    if !eps.is_finite() || eps <= 0.0 || eps >= 1.0 {
        return Err(GeometryError::InvalidProblem(format!(
            "separation eps must lie strictly in (0, 1), got {eps}"
        )));
    }
    let radius = 2.0 / c;
    let te = touching_eps(c)?;
    let root_rm1 = (radius * radius - 1.0).sqrt();
    let h = 1.0 / n as f64;
    let mut values = Vec::with_capacity(n + 1);
    for i in 0..n {
        let r = i as f64 * h;
        // √(R²−r²) − √(R²−1) without cancellation for large R
        let lift = (1.0 - r * r) / ((radius * radius - r * r).sqrt() + root_rm1);
        values.push(lift - eps);
    }
    values.push(-eps);
    debug_assert!((values[0] - (te - eps)).abs() <= 4.0 * f64::EPSILON * (1.0 + te));
    RadialProfile::new(values)
}

/// Sup-norm over interior nodes of the discrete prescribed-mean-curvature
/// residual `(1/r)(r u′/√(1+u′²))′ + c`, in flux form with cell slopes.
///
/// The two nodes nearest each end are excluded so only centered stencils
/// enter. Requires `n ≥ 8`.
pub fn calibration_residual(profile: &RadialProfile, c: f64) -> f64 {
    let n = profile.n();
    assert!(n >= 8, "calibration residual needs n >= 8, got {n}");
    let u = profile.values();
    let h = profile.spacing();
    // phi_j = u'/sqrt(1+u'^2) on cell j
    let phi: Vec<f64> = (0..n)
        .map(|j| {
            let slope = (u[j + 1] - u[j]) / h;
            slope / (1.0 + slope * slope).sqrt()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 2..=n - 2 {
        let r = i as f64 * h;
        let r_right = (i as f64 + 0.5) * h;
        let r_left = (i as f64 - 0.5) * h;
        let res = (r_right * phi[i] - r_left * phi[i - 1]) / (r * h) + c;
        worst = worst.max(res.abs());
    }
    worst
}

/// Ordered pair of height fields on an `m × m` grid over the square
/// `[−1, 1]²`, the setting of the column-wise symmetrization test.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2DPair {
    m: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Grid2DPair {
    pub fn new(m: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        if m < 2 {
            return Err(GeometryError::InvalidProblem(format!(
                "grid side m must be >= 2, got {m}"
            )));
        }
        if lower.len() != m * m || upper.len() != m * m {
            return Err(GeometryError::InvalidProblem(format!(
                "height fields must have m*m = {} entries",
                m * m
            )));
        }
        for (k, (&lo, &up)) in lower.iter().zip(&upper).enumerate() {
            if !(-1.0..=1.0).contains(&lo) || !(-1.0..=1.0).contains(&up) {
                return Err(GeometryError::InvalidProblem(format!(
                    "heights at cell {k} leave [-1, 1]"
                )));
            }
            if lo > up {
                return Err(GeometryError::OrderingViolation {
                    index: k,
                    lower: lo,
                    upper: up,
                });
            }
        }
        Ok(Self { m, lower, upper })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Occupied length `(u₁+1) + (1−u₂)` of the column through grid point k.
    pub fn column_lengths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &up)| (lo + 1.0) + (1.0 - up))
            .collect()
    }

    /// Sum of the two discrete graph areas.
    pub fn total_area(&self) -> f64 {
        graph_area_2d(self.m, &self.lower) + graph_area_2d(self.m, &self.upper)
    }
}

/// Discrete area `Σ √(1 + |∇u|²) ΔxΔy` of a height field on `[−1, 1]²`,
/// forward differences per cell.
pub fn graph_area_2d(m: usize, heights: &[f64]) -> f64 {
    assert_eq!(heights.len(), m * m);
    let d = 2.0 / (m - 1) as f64;
    let at = |i: usize, j: usize| heights[i * m + j];
    let mut area = 0.0;
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            let ux = (at(i + 1, j) - at(i, j)) / d;
            let uy = (at(i, j + 1) - at(i, j)) / d;
            area += (1.0 + ux * ux + uy * uy).sqrt() * d * d;
        }
    }
    area
}

/// Column-wise Steiner symmetrization of an ordered pair of graphs:
/// `u₁′ = (u₁ − u₂)/2`, `u₂′ = −u₁′`.
///
/// The output is vertically symmetric, preserves each column's occupied
/// length exactly, and never increases the discrete area term.
pub fn steiner_symmetrize(pair: &Grid2DPair) -> Grid2DPair {
    let lower: Vec<f64> = pair
        .lower
        .iter()
        .zip(&pair.upper)
        .map(|(&lo, &up)| (lo - up) / 2.0)
        .collect();
    let upper: Vec<f64> = lower.iter().map(|&v| -v).collect();
    Grid2DPair {
        m: pair.m,
        lower,
        upper,
    }
}
