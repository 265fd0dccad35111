//! Characteristic propagation of the Moore equation.
//!
//! For `τ > L` the point `t` with `t + L(t) = τ` is found by safeguarded
//! Newton, and `R(τ) = R(t - L(t)) + 2L`. The jet of the one-step map
//! `φ(τ) = t - L(t)` is built from the trajectory jet, and the recursion
//! composes these jets down to the seed `R(τ) = τ`. Nothing is interpolated.
//!
//! After the motion `φ(τ) = τ - 2L`, so whole periods are skipped at once.

use crate::error::{CavityError, Result};
use crate::roots::newton_bisect;
use crate::trajectory::{Side, WallTrajectory};

#[derive(Debug, Clone)]
pub(crate) struct GridPhase {
    traj: WallTrajectory,
    length: f64,
    t_motion: f64,
    tau_max: f64,
    l_lo: f64,
    l_hi: f64,
    newton_tol: f64,
    snap: f64,
    traj_breaks: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl GridPhase {
    pub(crate) fn new(traj: &WallTrajectory, t_final: f64) -> Result<Self> {
        let length = traj.length();
        let (lo, hi, _) = traj.scan_bounds(8192);
        let margin = 0.01 * (hi - lo) + 1e-12 * length;
        let mut grid = Self {
            traj: traj.clone(),
            length,
            t_motion: traj.t_motion(),
            tau_max: t_final + traj.jet(t_final)[0],
            l_lo: lo - margin,
            l_hi: hi + margin,
            newton_tol: 1e-13 * length,
            snap: 1e-10 * length,
            traj_breaks: traj.breakpoints(),
            breakpoints: Vec::new(),
        };
        grid.breakpoints = grid.forward_images()?;
        Ok(grid)
    }

    pub(crate) fn domain(&self) -> (f64, f64) {
        (-self.length, self.tau_max)
    }

    pub(crate) fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// First `τ` from which `R(τ + 2L) = R(τ) + 2L` holds.
    pub(crate) fn periodic_from(&self) -> f64 {
        if self.traj_breaks.is_empty() {
            -self.length
        } else {
            self.t_motion - self.length
        }
    }

    fn in_motion(&self, t: f64) -> bool {
        !self.traj_breaks.is_empty() && t > 0.0 && t < self.t_motion
    }

    /// `t` with `t + L(t) = τ`.
    fn solve_plus(&self, tau: f64) -> Result<f64> {
        let guess = tau - self.length;
        if !self.in_motion(guess) {
            return Ok(guess);
        }
        let f = |t: f64| {
            let j = self.traj.jet(t);
            (t + j[0] - tau, 1.0 + j[1])
        };
        newton_bisect(f, tau - self.l_hi, tau - self.l_lo, guess, self.newton_tol).map_err(|e| {
            CavityError::Solver {
                tau,
                reason: e.to_string(),
            }
        })
    }

    /// `t` with `t - L(t) = τ`.
    fn solve_minus(&self, tau: f64) -> Result<f64> {
        let guess = tau + self.length;
        if !self.in_motion(guess) {
            return Ok(guess);
        }
        let f = |t: f64| {
            let j = self.traj.jet(t);
            (t - j[0] - tau, 1.0 - j[1])
        };
        newton_bisect(f, tau + self.l_lo, tau + self.l_hi, guess, self.newton_tol).map_err(|e| {
            CavityError::Solver {
                tau,
                reason: e.to_string(),
            }
        })
    }

    /// Forward images of the trajectory breakpoints under `τ ↦ f(g⁻¹(τ))`.
    fn forward_images(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for &tb in &self.traj_breaks {
            // L(tb) = L at start and stop of the motion
            let mut tau = tb + self.traj.jet(tb)[0];
            if tb == 0.0 || tb == self.t_motion {
                tau = tb + self.length;
            }
            while tau <= self.tau_max {
                out.push(tau);
                if tau - self.length >= self.t_motion {
                    tau += 2.0 * self.length;
                } else {
                    let t = self.solve_minus(tau)?;
                    tau = t + self.traj.jet(t)[0];
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= self.snap);
        Ok(out)
    }

    /// `[R, Ṙ, R̈, R⃛]`; with a side, trajectory breakpoints hit during the
    /// recursion use the one-sided wall jet.
    pub(crate) fn eval(&self, tau0: f64, side: Option<Side>) -> Result<[f64; 4]> {
        let l = self.length;
        let two_l = 2.0 * l;
        let after = self.t_motion + l;
        let mut tau = tau0;
        let mut depth = 0.0;
        // (φ', φ'', φ''') of every step, outermost first
        let mut steps: Vec<[f64; 3]> = Vec::new();

        loop {
            if tau > after + self.snap {
                let j = ((tau - after - self.snap) / two_l).ceil();
                tau -= two_l * j;
                depth += j;
                continue;
            }
            let (t, lj) = if tau <= l {
                if side == Some(Side::Right) && l - tau <= self.snap && !self.traj_breaks.is_empty()
                {
                    (0.0, self.traj.jet_sided(0.0, Side::Right))
                } else {
                    break;
                }
            } else {
                let t = self.solve_plus(tau)?;
                match (side, self.snapped(t)) {
                    (Some(s), Some(tb)) => (tb, self.traj.jet_sided(tb, s)),
                    _ => (t, self.traj.jet(t)),
                }
            };
            let (f1, f2, f3) = (1.0 + lj[1], lj[2], lj[3]);
            let (g1, g2, g3) = (1.0 - lj[1], -lj[2], -lj[3]);
            let t1 = f1.recip();
            let t2 = -f2 * t1 * t1 * t1;
            let t3 = -f3 * t1.powi(4) + 3.0 * f2 * f2 * t1.powi(5);
            steps.push([
                g1 * t1,
                g2 * t1 * t1 + g1 * t2,
                g3 * t1 * t1 * t1 + 3.0 * g2 * t1 * t2 + g1 * t3,
            ]);
            tau = t - lj[0];
            depth += 1.0;
        }

        // R = seed ∘ φ_n ∘ ... ∘ φ_1, composed from the seed outward
        let (mut r1, mut r2, mut r3) = (1.0, 0.0, 0.0);
        for p in steps.iter().rev() {
            let (p1, p2, p3) = (p[0], p[1], p[2]);
            let n1 = r1 * p1;
            let n2 = r2 * p1 * p1 + r1 * p2;
            let n3 = r3 * p1 * p1 * p1 + 3.0 * r2 * p1 * p2 + r1 * p3;
            r1 = n1;
            r2 = n2;
            r3 = n3;
        }
        Ok([tau + two_l * depth, r1, r2, r3])
    }

    fn snapped(&self, t: f64) -> Option<f64> {
        self.traj_breaks
            .iter()
            .copied()
            .find(|&tb| (t - tb).abs() <= self.snap)
    }
}
