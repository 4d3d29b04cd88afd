//! Shared test support: a double-double oracle for the constant evaluators
//! and seeded random-profile generators.
//!
//! The double-double arithmetic below carries roughly twice the working
//! precision (~32 significant digits) and re-evaluates the constant
//! formulas along an independent path, so agreement with the f64
//! evaluators certifies them to ulp scale.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(a: f64) -> Self {
        Self { hi: a, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        self.mul(Dd::new(b))
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r1 = self.sub(o.mul_f64(q1));
        let q2 = r1.hi / o.hi;
        let r2 = r1.sub(o.mul_f64(q2));
        let q3 = r2.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::new(q3))
    }

    pub fn sqrt(self) -> Dd {
        // one Newton correction of the f64 seed: y + (a − y²)/(2y)
        let y = Dd::new(self.hi.sqrt());
        let correction = self.sub(y.mul(y)).div(y.mul_f64(2.0));
        y.add(correction)
    }

    pub fn cbrt(self) -> Dd {
        // y − (y³ − a)/(3y²)
        let y = Dd::new(self.hi.cbrt());
        let y2 = y.mul(y);
        let correction = y2.mul(y).sub(self).div(y2.mul_f64(3.0));
        y.sub(correction)
    }

    pub fn min(self, o: Dd) -> Dd {
        if self.hi < o.hi || (self.hi == o.hi && self.lo <= o.lo) {
            self
        } else {
            o
        }
    }
}

/// Inputs mirrored from `pmc_lab::constants::LocalControlConstants`.
pub struct DdInputs {
    pub rho0: f64,
    pub beta0: f64,
    pub delta_tube: f64,
    pub c1: f64,
    pub vol_m: f64,
    pub c: f64,
    pub theta: f64,
    pub beta: f64,
}

fn collar_min_dd(theta: f64, beta: f64, inp: &DdInputs) -> Dd {
    let theta = Dd::new(theta);
    let t1 = Dd::new(inp.delta_tube);
    let denom2 = Dd::new(1.0)
        .add(Dd::new(128.0).mul_f64(inp.c1))
        .mul(Dd::new(beta).sqrt());
    let t2 = theta.div(denom2);
    let inner = Dd::new(1.0)
        .div(Dd::new(32.0))
        .add(Dd::new(inp.c).mul_f64(inp.c1));
    let denom3 = Dd::new(9.0).mul(Dd::new(beta).sqrt()).mul(inner.sqrt());
    let t3 = theta.div(denom3);
    let t4 = Dd::new(inp.vol_m).div(Dd::new(4.0).mul_f64(inp.c1)).cbrt();
    t1.min(t2).min(t3).min(t4).min(Dd::new(1.0))
}

pub fn delta1_dd(inp: &DdInputs) -> Dd {
    collar_min_dd(inp.theta, inp.beta, inp)
}

pub fn delta2_dd(inp: &DdInputs) -> Dd {
    collar_min_dd(inp.rho0 / 2.0, inp.beta0, inp)
}

pub fn eta_dd(inp: &DdInputs) -> Dd {
    let t1 = Dd::new(inp.vol_m).div(Dd::new(2.0));
    let d = Dd::new(inp.delta_tube);
    let t3 = Dd::new(inp.c1).mul(d).mul(d).mul(d);
    if inp.c > 0.0 {
        let c = Dd::new(inp.c);
        let denom = Dd::new(8.0)
            .mul(c)
            .mul(c)
            .mul(c)
            .mul_f64(inp.c1)
            .mul_f64(inp.c1);
        let t2 = Dd::new(1.0).div(denom);
        t1.min(t2).min(t3)
    } else {
        t1.min(t3)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random admissible profile with `u(1) = -eps` exactly and heights
/// inside the cylinder.
pub fn random_admissible_profile(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> Vec<f64> {
    let modes: Vec<(f64, f64)> = (1..=5)
        .map(|k| (rng.gen_range(-0.2..0.2), k as f64))
        .collect();
    (0..=n)
        .map(|i| {
            let r = i as f64 / n as f64;
            if i == n {
                return -eps;
            }
            let mut u = -eps;
            for &(a, k) in &modes {
                u += a * (k * std::f64::consts::PI * (1.0 - r)).sin();
            }
            u.clamp(-1.0, 1.0)
        })
        .collect()
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(0.0, f64::max)
}
