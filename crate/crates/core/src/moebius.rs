//! `SL(2,R)` elements, the minimal-energy phase functions they generate, and
//! the induced conformal maps of the cavity.
//!
//! An element `(A, B; C, D)` with `AD - BC = 1` acts on the real line as
//! `σ(τ) = (Aτ + B)/(Cτ + D)`. Conjugated by `τ ↦ tan(Ωτ/2)` it becomes a
//! strictly increasing map `R(τ) = (2/Ω) arctan σ(tan(Ωτ/2))` with
//! `R(τ + 2π/Ω) = R(τ) + 2π/Ω`. With `Ω = ω = π/L` these are exactly the
//! phase functions of zero photon content and static Casimir energy.

use std::f64::consts::PI;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{CavityError, Result};
use crate::phase::PhaseFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MoebiusElement {
    /// Builds an element, dividing by `√(AD - BC)` when the determinant is
    /// positive but not one. Orientation-reversing matrices are rejected.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det.is_finite() && det > 0.0) {
            return Err(CavityError::Parameter(format!(
                "Moebius element needs AD - BC > 0, got {det}"
            )));
        }
        let s = det.sqrt().recip();
        Ok(Self {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        })
    }

    pub const fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    /// `diag(√ζ, 1/√ζ)`, acting as `σ(τ) = ζτ`.
    pub fn dilation(zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(CavityError::Parameter(format!(
                "dilation factor {zeta} must be positive"
            )));
        }
        let s = zeta.sqrt();
        Ok(Self {
            a: s,
            b: 0.0,
            c: 0.0,
            d: 1.0 / s,
        })
    }

    /// `σ(τ) = τ + b`.
    pub const fn translation(b: f64) -> Self {
        Self {
            a: 1.0,
            b,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product `self · other`, i.e. `σ_self ∘ σ_other`.
    pub fn compose(&self, other: &Self) -> Self {
        let m = Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        };
        let det = m.det();
        if (det - 1.0).abs() > 4.0 * f64::EPSILON {
            let s = det.sqrt().recip();
            return Self {
                a: m.a * s,
                b: m.b * s,
                c: m.c * s,
                d: m.d * s,
            };
        }
        m
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.a * x + self.b) / (self.c * x + self.d)
    }

    /// `[σ, σ', σ'', σ''']` at `x`.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        let den = self.c * x + self.d;
        let inv = den.recip();
        let i2 = inv * inv;
        [
            (self.a * x + self.b) * inv,
            i2,
            -2.0 * self.c * i2 * inv,
            6.0 * self.c * self.c * i2 * i2,
        ]
    }

    /// Largest absolute deviation of the entries from `other`, allowing the
    /// overall sign flip that leaves `σ` unchanged.
    pub fn distance(&self, other: &Self) -> f64 {
        let d = |s: f64| {
            (self.a - s * other.a)
                .abs()
                .max((self.b - s * other.b).abs())
                .max((self.c - s * other.c).abs())
                .max((self.d - s * other.d).abs())
        };
        d(1.0).min(d(-1.0))
    }
}

impl Default for MoebiusElement {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for MoebiusElement {
    type Output = MoebiusElement;

    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

pub fn compose(m1: &MoebiusElement, m2: &MoebiusElement) -> MoebiusElement {
    m1.compose(m2)
}

pub fn inverse(m: &MoebiusElement) -> MoebiusElement {
    m.inverse()
}

/// `R(τ) = (2/Ω)[arctan σ(tan(Ωτ/2)) + nπ] + offset` with the branch index
/// chosen so that `R` is continuous and increasing.
///
/// The lift of `arctan σ(υ)` is computed in closed form: the vector
/// `(Cυ + D, Aυ + B)` turns monotonically (its cross product with
/// `(C, A)` is the determinant), so the angle relative to `υ = 0` is a single
/// `atan2`. Evaluation is O(1) without tracking windings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanMoebius {
    element: MoebiusElement,
    freq: f64,
    base: f64,
    // Ṙ = 1/(p0 + p1 cos Ωτ + p2 sin Ωτ)
    p: [f64; 3],
    offset: f64,
}

impl TanMoebius {
    pub fn new(element: MoebiusElement, freq: f64) -> Self {
        let MoebiusElement { a, b, c, d } = element;
        let alpha = a * a + c * c;
        let gamma = b * b + d * d;
        let beta = a * b + c * d;
        Self {
            element,
            freq,
            base: (b / d).atan(),
            p: [0.5 * (alpha + gamma), 0.5 * (gamma - alpha), beta],
            offset: 0.0,
        }
    }

    pub fn element(&self) -> &MoebiusElement {
        &self.element
    }

    pub fn freq(&self) -> f64 {
        self.freq
    }

    /// Period `2π/Ω` over which `R` advances by exactly one period.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.freq
    }

    fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Continuous angle `Θ(υ)` with `tan Θ = σ(υ)`, normalized so that
    /// `Θ(0) = arctan(B/D)`.
    pub fn lift(&self, v: f64) -> f64 {
        let MoebiusElement { a, b, c, d } = self.element;
        self.base + v.atan2(b * b + d * d + v * (a * b + c * d))
    }

    /// `Θ(-∞)` and `Θ(+∞)`; they differ by exactly `π`.
    pub fn lift_limits(&self) -> (f64, f64) {
        let beta = self.p[2];
        (
            self.base + (-1.0f64).atan2(-beta),
            self.base + 1.0f64.atan2(beta),
        )
    }

    pub fn value(&self, tau: f64) -> f64 {
        let half = 0.5 * self.freq * tau;
        let n = (half / PI).round();
        let x = half - n * PI;
        let mut v = x.tan();
        // at |x| = π/2 rounding can flip the sign of tan and skip a branch
        if v * x < 0.0 {
            v = x.signum() * 1e300;
        }
        2.0 / self.freq * (self.lift(v) + n * PI) + self.offset
    }

    /// `[R, Ṙ, R̈, R⃛]`.
    pub fn jet(&self, tau: f64) -> [f64; 4] {
        let w = self.freq;
        let (s, c) = (w * tau).sin_cos();
        let [p0, p1, p2] = self.p;
        let pv = p0 + p1 * c + p2 * s;
        let dp = w * (p2 * c - p1 * s);
        let ddp = -w * w * (p1 * c + p2 * s);
        let inv = pv.recip();
        let r1 = inv;
        let r2 = -dp * inv * inv;
        let r3 = -ddp * inv * inv + 2.0 * dp * dp * inv * inv * inv;
        [self.value(tau), r1, r2, r3]
    }

    /// The inverse map, with the branch offset fixed so that
    /// `inverse(R(0)) = 0` up to rounding.
    pub fn inverse(&self) -> Self {
        let raw = TanMoebius::new(self.element.inverse(), self.freq);
        // raw(R(0)) is zero up to a whole number of periods
        let miss = raw.value(self.value(0.0));
        let shift = (miss / raw.period()).round() * raw.period();
        raw.with_offset(-shift)
    }
}

/// Minimal-energy solution `R_min` generated by an element at the
/// fundamental frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimalSolution {
    pub element: MoebiusElement,
    pub omega: f64,
    map: TanMoebius,
}

impl MinimalSolution {
    pub fn new(element: MoebiusElement, omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(CavityError::Parameter(format!(
                "omega = {omega} must be positive"
            )));
        }
        Ok(Self {
            element,
            omega,
            map: TanMoebius::new(element, omega),
        })
    }

    pub fn map(&self) -> &TanMoebius {
        &self.map
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.map.value(tau)
    }

    pub fn t_squared(&self, tau: f64) -> f64 {
        minimal_t_squared(&self.element, self.omega, tau)
    }
}

/// Phase function `R_min(τ) = (2/ω) arctan σ(tan(ωτ/2))`.
pub fn minimal_phase(m: &MoebiusElement, omega: f64) -> Result<PhaseFunction> {
    let sol = MinimalSolution::new(*m, omega)?;
    Ok(PhaseFunction::moebius_minimal(sol))
}

/// Stationary points of the constrained energy functional:
/// `T²(τ) = ½(A²+B²+C²+D²) + ½(A²+B²-C²-D²) cos ωτ - (AC+BD) sin ωτ`.
pub fn minimal_t_squared(m: &MoebiusElement, omega: f64, tau: f64) -> f64 {
    let MoebiusElement { a, b, c, d } = *m;
    let (s, co) = (omega * tau).sin_cos();
    0.5 * (a * a + b * b + c * c + d * d) + 0.5 * (a * a + b * b - c * c - d * d) * co
        - (a * c + b * d) * s
}

/// `R_min ∘ R`: the phase function `R` followed by the minimal solution of
/// `m`. The energy profile and the photon numbers are unchanged.
pub fn conformal_compose(r: &PhaseFunction, m: &MoebiusElement) -> Result<PhaseFunction> {
    let sol = MinimalSolution::new(*m, r.omega())?;
    Ok(PhaseFunction::composed(r.clone(), sol))
}

/// First-order action of `(1+a, b; c, 1-a)` on cavity coordinates.
pub fn infinitesimal_flow(a: f64, b: f64, c: f64, t: f64, x: f64, omega: f64) -> (f64, f64) {
    let (st, ct) = (omega * t).sin_cos();
    let (sx, cx) = (omega * x).sin_cos();
    let dt = (b - c) + (b + c) * ct * cx + 2.0 * a * st * cx;
    let dx = -(b + c) * st * sx + 2.0 * a * ct * sx;
    (t + dt / omega, x + dx / omega)
}

/// Exact conformal map `t ± x → R_min(t ± x)`.
pub fn exact_flow(m: &MoebiusElement, omega: f64, t: f64, x: f64) -> (f64, f64) {
    let map = TanMoebius::new(*m, omega);
    let plus = map.value(t + x);
    let minus = map.value(t - x);
    (0.5 * (plus + minus), 0.5 * (plus - minus))
}
