//! Wall-motion models `L(t)`.
//!
//! The wall is at rest with length `L` for `t < 0` and `t > T_motion`. Inside
//! the motion interval the closed-form position and its first three
//! derivatives are returned; no trajectory is ever differentiated
//! numerically.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CavityError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Static,
    Sinusoidal,
    LawWu,
    Custom,
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TrajectoryKind::Static => "static",
            TrajectoryKind::Sinusoidal => "sinusoidal",
            TrajectoryKind::LawWu => "law_wu",
            TrajectoryKind::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// User supplied wall motion, active on `[0, T_motion]`.
///
/// `jet(t)` returns `[L, L̇, L̈, L⃛]`. Interior points where the motion is not
/// smooth should be listed by `breakpoints` so the phase solver can place
/// grid breaks on their characteristic images.
pub trait WallMotion: Send + Sync + fmt::Debug {
    fn jet(&self, t: f64) -> [f64; 4];

    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Which side of a breakpoint a one-sided evaluation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct WallTrajectory {
    kind: TrajectoryKind,
    length: f64,
    t_motion: f64,
    delta_l: f64,
    k_drive: u32,
    custom: Option<Arc<dyn WallMotion>>,
}

impl WallTrajectory {
    pub fn static_cavity(length: f64) -> Result<Self> {
        check_length(length)?;
        Ok(Self {
            kind: TrajectoryKind::Static,
            length,
            t_motion: 0.0,
            delta_l: 0.0,
            k_drive: 1,
            custom: None,
        })
    }

    /// `L(t) = L + ΔL sin(ω_k t)` for `periods` full drive periods `2π/ω_k`.
    pub fn sinusoidal(length: f64, delta_l: f64, k_drive: u32, periods: u32) -> Result<Self> {
        Self::driven(
            TrajectoryKind::Sinusoidal,
            length,
            delta_l,
            k_drive,
            periods,
        )
    }

    /// The Law/Wu family
    /// `L(t) = L + (arcsin[sin(ω_kΔL/2) cos(ω_k t)] - ω_kΔL/2)/ω_k`.
    pub fn law_wu(length: f64, delta_l: f64, k_drive: u32, periods: u32) -> Result<Self> {
        Self::driven(TrajectoryKind::LawWu, length, delta_l, k_drive, periods)
    }

    fn driven(
        kind: TrajectoryKind,
        length: f64,
        delta_l: f64,
        k_drive: u32,
        periods: u32,
    ) -> Result<Self> {
        check_length(length)?;
        if k_drive == 0 {
            return Err(CavityError::Parameter(
                "k_drive must be a positive integer".into(),
            ));
        }
        if !(delta_l.is_finite() && delta_l >= 0.0) {
            return Err(CavityError::Parameter(format!(
                "delta_l = {delta_l} must be non-negative"
            )));
        }
        let omega_k = k_drive as f64 * PI / length;
        Ok(Self {
            kind,
            length,
            t_motion: periods as f64 * 2.0 * PI / omega_k,
            delta_l,
            k_drive,
            custom: None,
        })
    }

    pub fn custom(length: f64, t_motion: f64, motion: Arc<dyn WallMotion>) -> Result<Self> {
        check_length(length)?;
        if !(t_motion.is_finite() && t_motion >= 0.0) {
            return Err(CavityError::Parameter(format!(
                "t_motion = {t_motion} must be non-negative"
            )));
        }
        Ok(Self {
            kind: TrajectoryKind::Custom,
            length,
            t_motion,
            delta_l: 0.0,
            k_drive: 1,
            custom: Some(motion),
        })
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    /// Static cavity length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn t_motion(&self) -> f64 {
        self.t_motion
    }

    pub fn delta_l(&self) -> f64 {
        self.delta_l
    }

    pub fn k_drive(&self) -> u32 {
        self.k_drive
    }

    /// Fundamental frequency `ω = π/L`.
    pub fn omega(&self) -> f64 {
        PI / self.length
    }

    /// Drive frequency `ω_k = kπ/L`.
    pub fn drive_omega(&self) -> f64 {
        self.k_drive as f64 * self.omega()
    }

    fn in_motion(&self, t: f64) -> bool {
        self.kind != TrajectoryKind::Static && t >= 0.0 && t <= self.t_motion
    }

    /// `[L(t), L̇(t), L̈(t), L⃛(t)]`. The motion formula is used on the closed
    /// interval `[0, T_motion]`.
    pub fn jet(&self, t: f64) -> [f64; 4] {
        if !self.in_motion(t) {
            return [self.length, 0.0, 0.0, 0.0];
        }
        self.motion_jet(t)
    }

    /// One-sided jet: at `t = 0` and `t = T_motion` the side selects between
    /// the static and the moving formula.
    pub fn jet_sided(&self, t: f64, side: Side) -> [f64; 4] {
        if self.kind == TrajectoryKind::Static {
            return [self.length, 0.0, 0.0, 0.0];
        }
        let moving = match side {
            Side::Left => t > 0.0 && t <= self.t_motion,
            Side::Right => t >= 0.0 && t < self.t_motion,
        };
        if moving {
            self.motion_jet(t)
        } else {
            [self.length, 0.0, 0.0, 0.0]
        }
    }

    fn motion_jet(&self, t: f64) -> [f64; 4] {
        let l0 = self.length;
        let w = self.drive_omega();
        match self.kind {
            TrajectoryKind::Static => [l0, 0.0, 0.0, 0.0],
            TrajectoryKind::Sinusoidal => {
                let (s, c) = (w * t).sin_cos();
                let a = self.delta_l;
                [l0 + a * s, a * w * c, -a * w * w * s, -a * w * w * w * c]
            }
            TrajectoryKind::LawWu => law_wu_jet(l0, self.delta_l, w, t),
            TrajectoryKind::Custom => self
                .custom
                .as_ref()
                .expect("custom trajectory carries its motion")
                .jet(t),
        }
    }

    /// `d^order L / dt^order` for `order` in `0..=3`.
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(CavityError::Parameter(format!(
                "derivative order {order} not available (0..=3)"
            )));
        }
        Ok(self.jet(t)[order])
    }

    /// Times where the motion is not smooth: start, stop, and any interior
    /// breakpoints of a custom motion.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.kind == TrajectoryKind::Static {
            return Vec::new();
        }
        let mut pts = vec![0.0, self.t_motion];
        if let Some(m) = &self.custom {
            pts.extend(
                m.breakpoints()
                    .into_iter()
                    .filter(|&t| t > 0.0 && t < self.t_motion),
            );
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Bounds of `L(t)` and of `|L̇|` over a uniform scan of the motion.
    pub fn scan_bounds(&self, samples: usize) -> (f64, f64, f64) {
        let mut lo = self.length;
        let mut hi = self.length;
        let mut vmax: f64 = 0.0;
        for t in self.scan_points(samples) {
            for side in [Side::Left, Side::Right] {
                let j = self.jet_sided(t, side);
                lo = lo.min(j[0]);
                hi = hi.max(j[0]);
                vmax = vmax.max(j[1].abs());
            }
        }
        (lo, hi, vmax)
    }

    fn scan_points(&self, samples: usize) -> Vec<f64> {
        if self.kind == TrajectoryKind::Static || self.t_motion == 0.0 {
            return vec![0.0];
        }
        let n = samples.max(2);
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| self.t_motion * i as f64 / n as f64)
            .collect();
        // extrema of the periodic models sit on a quarter-period lattice
        if matches!(
            self.kind,
            TrajectoryKind::Sinusoidal | TrajectoryKind::LawWu
        ) {
            let quarter = 0.5 * PI / self.drive_omega();
            let mut t = 0.0;
            while t <= self.t_motion {
                pts.push(t);
                t += quarter;
            }
        }
        pts.extend(self.breakpoints());
        pts
    }
}

fn check_length(length: f64) -> Result<()> {
    if !(length.is_finite() && length > 0.0) {
        return Err(CavityError::Parameter(format!(
            "cavity length {length} must be positive"
        )));
    }
    Ok(())
}

/// Closed-form chain rule for `L + (asin(s cos(ωt)) - a)/ω`, `a = ωΔL/2`,
/// `s = sin a`.
fn law_wu_jet(l0: f64, delta_l: f64, w: f64, t: f64) -> [f64; 4] {
    let a = 0.5 * w * delta_l;
    let s = a.sin();
    let (sx, cx) = (w * t).sin_cos();
    // u(x) = s cos x and its x-derivatives
    let u = s * cx;
    let u1 = -s * sx;
    let u2 = -u;
    let u3 = -u1;
    // h = asin
    let q = 1.0 - u * u;
    let h1 = q.powf(-0.5);
    let h2 = u * q.powf(-1.5);
    let h3 = (1.0 + 2.0 * u * u) * q.powf(-2.5);
    let g1 = h1 * u1;
    let g2 = h2 * u1 * u1 + h1 * u2;
    let g3 = h3 * u1 * u1 * u1 + 3.0 * h2 * u1 * u2 + h1 * u3;
    [l0 + (u.asin() - a) / w, g1, w * g2, w * w * g3]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonPositiveLength,
    AmplitudeTooLarge,
    Superluminal,
    NotPeriodic,
    NonFinite,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::NonPositiveLength => "non-positive length",
            ViolationKind::AmplitudeTooLarge => "amplitude too large",
            ViolationKind::Superluminal => "superluminal",
            ViolationKind::NotPeriodic => "motion does not return to rest",
            ViolationKind::NonFinite => "non-finite",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub t: Option<f64>,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.t {
            Some(t) => write!(
                f,
                "{} at t = {t}: {} vs bound {}",
                self.kind, self.value, self.bound
            ),
            None => write!(f, "{}: {} vs bound {}", self.kind, self.value, self.bound),
        }
    }
}

/// Checks the standing assumptions on a trajectory. Only the first offending
/// time is reported per violation kind.
pub fn validate_trajectory(traj: &WallTrajectory) -> Vec<Violation> {
    let mut out = Vec::new();
    if traj.kind == TrajectoryKind::Static {
        return out;
    }
    if traj.delta_l >= traj.length {
        out.push(Violation {
            kind: ViolationKind::AmplitudeTooLarge,
            t: None,
            value: traj.delta_l,
            bound: traj.length,
        });
    }

    let mut seen = [false; 3];
    for t in traj.scan_points(20_000) {
        for side in [Side::Left, Side::Right] {
            let j = traj.jet_sided(t, side);
            if j.iter().any(|v| !v.is_finite()) {
                if !seen[0] {
                    seen[0] = true;
                    out.push(Violation {
                        kind: ViolationKind::NonFinite,
                        t: Some(t),
                        value: f64::NAN,
                        bound: 0.0,
                    });
                }
                continue;
            }
            if j[0] <= 0.0 && !seen[1] {
                seen[1] = true;
                out.push(Violation {
                    kind: ViolationKind::NonPositiveLength,
                    t: Some(t),
                    value: j[0],
                    bound: 0.0,
                });
            }
            if j[1].abs() >= 1.0 && !seen[2] {
                seen[2] = true;
                out.push(Violation {
                    kind: ViolationKind::Superluminal,
                    t: Some(t),
                    value: j[1].abs(),
                    bound: 1.0,
                });
            }
        }
    }

    if traj.t_motion > 0.0 {
        let end = traj.jet_sided(traj.t_motion, Side::Left)[0];
        if (end - traj.length).abs() > 1e-12 * traj.length {
            out.push(Violation {
                kind: ViolationKind::NotPeriodic,
                t: Some(traj.t_motion),
                value: end,
                bound: traj.length,
            });
        }
    }
    out
}
