//! Resonant ansatz `R(τ) = (2/ω_k) arctan σ_j(tan(ω_kτ/2))` with one inner
//! function per half-period branch, and the closed-form Law/Wu solution.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CavityError, Result};
use crate::moebius::{MoebiusElement, TanMoebius};
use crate::trajectory::{Side, TrajectoryKind, WallTrajectory};

/// Increasing map of the real line onto itself, given as `[σ, σ', σ'', σ''']`.
pub trait InnerFunction: Send + Sync + fmt::Debug {
    fn jet(&self, v: f64) -> [f64; 4];
}

#[derive(Debug, Clone)]
pub enum Sigma {
    Moebius(MoebiusElement),
    Callable(Arc<dyn InnerFunction>),
}

impl Sigma {
    pub fn jet(&self, v: f64) -> [f64; 4] {
        match self {
            Sigma::Moebius(m) => m.jet(v),
            Sigma::Callable(f) => f.jet(v),
        }
    }

    /// Schwarzian `S[σ](υ)`; identically zero for Möbius maps.
    pub fn schwarzian(&self, v: f64) -> f64 {
        match self {
            Sigma::Moebius(_) => 0.0,
            Sigma::Callable(f) => {
                let j = f.jet(v);
                let q = j[2] / j[1];
                j[3] / j[1] - 1.5 * q * q
            }
        }
    }

    /// Continuous branch of `arctan σ(υ)`.
    pub fn lift(&self, v: f64) -> f64 {
        match self {
            Sigma::Moebius(m) => TanMoebius::new(*m, 1.0).lift(v),
            Sigma::Callable(f) => f.jet(v)[0].atan(),
        }
    }

    /// `(Θ(-∞), Θ(+∞))`.
    pub fn lift_limits(&self) -> (f64, f64) {
        match self {
            Sigma::Moebius(m) => TanMoebius::new(*m, 1.0).lift_limits(),
            Sigma::Callable(_) => (-0.5 * PI, 0.5 * PI),
        }
    }
}

impl From<MoebiusElement> for Sigma {
    fn from(m: MoebiusElement) -> Self {
        Sigma::Moebius(m)
    }
}

#[derive(Debug, Clone)]
pub struct ResonantAnsatz {
    pub k: u32,
    pub length: f64,
    pub sigmas: Vec<Sigma>,
}

impl ResonantAnsatz {
    pub fn new(k: u32, length: f64, sigmas: Vec<Sigma>) -> Result<Self> {
        if k == 0 {
            return Err(CavityError::Parameter(
                "resonance index k must be positive".into(),
            ));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(CavityError::Parameter(format!(
                "cavity length {length} must be positive"
            )));
        }
        if sigmas.len() != k as usize {
            return Err(CavityError::Parameter(format!(
                "resonant ansatz with k = {k} needs {k} inner functions, got {}",
                sigmas.len()
            )));
        }
        Ok(Self { k, length, sigmas })
    }

    /// Same inner function on every branch.
    pub fn uniform(k: u32, length: f64, sigma: Sigma) -> Result<Self> {
        Self::new(k, length, vec![sigma; k as usize])
    }

    pub fn omega(&self) -> f64 {
        PI / self.length
    }

    pub fn omega_k(&self) -> f64 {
        self.k as f64 * self.omega()
    }

    /// Constant added to branch `j` so consecutive branches join
    /// continuously; `offsets()[0] = 0`.
    pub fn offsets(&self) -> Vec<f64> {
        let k = self.sigmas.len();
        let limits: Vec<(f64, f64)> = self.sigmas.iter().map(Sigma::lift_limits).collect();
        let mut off = vec![0.0; k];
        for j in 1..k {
            off[j] = off[j - 1] + limits[j - 1].1 - limits[j].0 - PI;
        }
        off
    }

    /// Checks that every inner function is increasing and finite on a
    /// θ-grid, `υ = tan θ`.
    pub fn check_monotone(&self) -> Result<()> {
        for (j, s) in self.sigmas.iter().enumerate() {
            if let Sigma::Callable(f) = s {
                let n = 2000;
                for i in 1..n {
                    let theta = -0.5 * PI + PI * i as f64 / n as f64;
                    let v = theta.tan();
                    let jet = f.jet(v);
                    if !(jet[1] > 0.0) || jet.iter().any(|x| !x.is_finite()) {
                        return Err(CavityError::Precondition(format!(
                            "inner function {j} is not increasing at upsilon = {v} (slope {})",
                            jet[1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Which time enters the `(T/L - 1)` factor of the Law/Wu inner functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeReading {
    #[default]
    ElapsedTime,
    MotionDuration,
}

/// Inner functions of the Law/Wu family with the time parameter read per
/// `reading`. `k` even: `σ(υ) = υ/(1 - cυ)`, `k` odd: `σ(υ) = υ + c`, with
/// `c = (T/L - 1) tan(ω_kΔL/2)`.
pub fn build_lawwu(
    traj: &WallTrajectory,
    t_elapsed: f64,
    reading: TimeReading,
) -> Result<ResonantAnsatz> {
    if traj.kind() != TrajectoryKind::LawWu {
        return Err(CavityError::Precondition(format!(
            "expected a law_wu trajectory, got {}",
            traj.kind()
        )));
    }
    let l = traj.length();
    let time = match reading {
        TimeReading::ElapsedTime => t_elapsed,
        TimeReading::MotionDuration => traj.t_motion(),
    };
    let c = (time / l - 1.0) * (0.5 * traj.drive_omega() * traj.delta_l()).tan();
    let m = law_wu_element(traj.k_drive(), c);
    ResonantAnsatz::uniform(traj.k_drive(), l, Sigma::Moebius(m))
}

fn law_wu_element(k: u32, c: f64) -> MoebiusElement {
    if k % 2 == 0 {
        MoebiusElement {
            a: 1.0,
            b: 0.0,
            c: -c,
            d: 1.0,
        }
    } else {
        MoebiusElement::translation(c)
    }
}

/// `ζ = exp[(-1)^{k+1} ω_k t ΔL/L]`.
pub fn sinusoidal_zeta(traj: &WallTrajectory, t_elapsed: f64) -> f64 {
    let sign = if traj.k_drive() % 2 == 1 { 1.0 } else { -1.0 };
    (sign * traj.drive_omega() * t_elapsed * traj.delta_l() / traj.length()).exp()
}

/// Large-time ansatz `σ(υ) = ζυ` on every branch.
pub fn sinusoidal_ansatz(traj: &WallTrajectory, t_elapsed: f64) -> Result<ResonantAnsatz> {
    if traj.kind() != TrajectoryKind::Sinusoidal {
        return Err(CavityError::Precondition(format!(
            "expected a sinusoidal trajectory, got {}",
            traj.kind()
        )));
    }
    let m = MoebiusElement::dilation(sinusoidal_zeta(traj, t_elapsed))?;
    ResonantAnsatz::uniform(traj.k_drive(), traj.length(), Sigma::Moebius(m))
}

#[derive(Debug, Clone)]
enum Piece {
    Tan(TanMoebius),
    Callable(Arc<dyn InnerFunction>),
}

/// Assembled resonant phase function.
#[derive(Debug, Clone)]
pub(crate) struct ResonantPhase {
    freq: f64,
    pieces: Vec<Piece>,
    offsets: Vec<f64>,
}

impl ResonantPhase {
    pub(crate) fn new(ansatz: &ResonantAnsatz) -> Result<Self> {
        ansatz.check_monotone()?;
        let freq = ansatz.omega_k();
        let offsets = ansatz.offsets();
        let k = ansatz.sigmas.len();
        let limits: Vec<(f64, f64)> = ansatz.sigmas.iter().map(Sigma::lift_limits).collect();
        let closure = offsets[k - 1] + limits[k - 1].1 - limits[0].0 - PI;
        if closure.abs() > 1e-12 {
            return Err(CavityError::Precondition(format!(
                "inner functions do not close over a period (mismatch {closure:e})"
            )));
        }
        let pieces = ansatz
            .sigmas
            .iter()
            .map(|s| match s {
                Sigma::Moebius(m) => Piece::Tan(TanMoebius::new(*m, freq)),
                Sigma::Callable(f) => Piece::Callable(f.clone()),
            })
            .collect();
        Ok(Self {
            freq,
            pieces,
            offsets,
        })
    }

    /// Branch boundaries `(2n+1)π/ω_k` inside `[a, b]`.
    pub(crate) fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        branch_edges(self.freq, a, b)
    }

    pub(crate) fn eval(&self, tau: f64, side: Option<Side>) -> [f64; 4] {
        let w = self.freq;
        let (n, v) = branch(w, tau, side);
        let k = self.pieces.len() as i64;
        let j = n.rem_euclid(k) as usize;
        let base = n as f64 * PI + self.offsets[j];
        match &self.pieces[j] {
            Piece::Tan(map) => {
                let theta = if v.is_infinite() {
                    let (lo, hi) = map.lift_limits();
                    if v > 0.0 {
                        hi
                    } else {
                        lo
                    }
                } else {
                    map.lift(v)
                };
                let jet = map.jet(tau);
                [2.0 / w * (theta + base), jet[1], jet[2], jet[3]]
            }
            Piece::Callable(f) => {
                let v = if v.is_infinite() {
                    v.signum() * (0.5 * PI).tan()
                } else {
                    v
                };
                let s = f.jet(v);
                let u1 = 0.5 * w * (1.0 + v * v);
                let u2 = w * v * u1;
                let u3 = w * (u1 * u1 + v * u2);
                // h(s) = (2/ω) arctan s
                let q = (1.0 + s[0] * s[0]).recip();
                let h1 = 2.0 / w * q;
                let h2 = 2.0 / w * (-2.0 * s[0]) * q * q;
                let h3 = 2.0 / w * (6.0 * s[0] * s[0] - 2.0) * q * q * q;
                // σ ∘ u, then h ∘ (σ ∘ u)
                let c1 = s[1] * u1;
                let c2 = s[2] * u1 * u1 + s[1] * u2;
                let c3 = s[3] * u1 * u1 * u1 + 3.0 * s[2] * u1 * u2 + s[1] * u3;
                [
                    2.0 / w * (s[0].atan() + base),
                    h1 * c1,
                    h2 * c1 * c1 + h1 * c2,
                    h3 * c1 * c1 * c1 + 3.0 * h2 * c1 * c2 + h1 * c3,
                ]
            }
        }
    }
}

/// Branch index `n` and `υ = tan(ωτ/2 - nπ)`. Exactly on a boundary the side
/// picks the branch and `υ` is returned as `±∞`.
fn branch(w: f64, tau: f64, side: Option<Side>) -> (i64, f64) {
    let q = 0.5 * w * tau / PI;
    let below = (q - 0.5).floor();
    let edge = below + 0.5;
    if let Some(s) = side {
        if (q - edge).abs() <= 1e-12 * q.abs().max(1.0) {
            return match s {
                Side::Left => (below as i64, f64::INFINITY),
                Side::Right => (below as i64 + 1, f64::NEG_INFINITY),
            };
        }
    }
    let n = q.round();
    let x = 0.5 * w * tau - n * PI;
    let v = x.tan();
    if v * x < 0.0 {
        return (n as i64, x.signum() * f64::INFINITY);
    }
    (n as i64, v)
}

fn branch_edges(w: f64, a: f64, b: f64) -> Vec<f64> {
    let h = PI / w;
    let first = ((a / h - 1.0) / 2.0).ceil() as i64;
    let mut out = Vec::new();
    let mut n = first;
    loop {
        let x = (2 * n + 1) as f64 * h;
        if x > b {
            break;
        }
        if x >= a {
            out.push(x);
        }
        n += 1;
    }
    out
}

/// Exact phase function of a Law/Wu motion: on `[(2m-1)L, (2m+1)L)` it is
/// the Möbius-tan map at `ω_k` with `c = 2m tan(ω_kΔL/2)`, identity before
/// the motion and `2L`-periodic after it.
#[derive(Debug, Clone)]
pub(crate) struct LawWuExact {
    length: f64,
    k: u32,
    freq: f64,
    tan_a: f64,
    t_motion: f64,
}

impl LawWuExact {
    pub(crate) fn new(traj: &WallTrajectory) -> Result<Self> {
        if traj.kind() != TrajectoryKind::LawWu {
            return Err(CavityError::Precondition(format!(
                "expected a law_wu trajectory, got {}",
                traj.kind()
            )));
        }
        Ok(Self {
            length: traj.length(),
            k: traj.k_drive(),
            freq: traj.drive_omega(),
            tan_a: (0.5 * traj.drive_omega() * traj.delta_l()).tan(),
            t_motion: traj.t_motion(),
        })
    }

    pub(crate) fn periodic_from(&self) -> f64 {
        self.t_motion - self.length
    }

    pub(crate) fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let l = self.length;
        let mut out = Vec::new();
        let mut m = ((a / l - 1.0) / 2.0).ceil().max(0.0);
        loop {
            let x = (2.0 * m + 1.0) * l;
            if x > b {
                break;
            }
            if x >= a {
                out.push(x);
            }
            m += 1.0;
        }
        // the wall stops at T_motion, which is not a branch edge in general
        let mut x = self.t_motion + l;
        while x <= b {
            if x >= a {
                out.push(x);
            }
            x += 2.0 * l;
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|p, q| (*p - *q).abs() <= 1e-12 * l);
        out
    }

    pub(crate) fn eval(&self, tau0: f64, side: Option<Side>) -> [f64; 4] {
        let l = self.length;
        let after = self.t_motion + l;
        let mut tau = tau0;
        let mut shift = 0.0;
        let snap = 1e-12 * l.max(tau.abs());
        if tau > after + snap {
            let j = ((tau - after - snap) / (2.0 * l)).ceil();
            tau -= 2.0 * l * j;
            shift = 2.0 * l * j;
        }
        let q = (tau + l) / (2.0 * l);
        let mut m = q.floor();
        let nearest = q.round();
        if (q - nearest).abs() <= 1e-12 * q.abs().max(1.0) {
            m = match side {
                Some(Side::Left) => nearest - 1.0,
                _ => nearest,
            };
        }
        if m < 1.0 {
            return [tau + shift, 1.0, 0.0, 0.0];
        }
        let map = TanMoebius::new(law_wu_element(self.k, 2.0 * m * self.tan_a), self.freq);
        let mut jet = map.jet(tau);
        jet[0] += shift;
        jet
    }
}
