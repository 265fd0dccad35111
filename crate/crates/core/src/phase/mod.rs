//! The Moore phase function `R(τ)`.
//!
//! A [`PhaseFunction`] is a cheap, clonable handle. All backends return the
//! jet `[R, Ṙ, R̈, R⃛]` at a point, optionally one-sided at a breakpoint.

mod grid;
mod resonant;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use resonant::{
    build_lawwu, sinusoidal_ansatz, sinusoidal_zeta, InnerFunction, ResonantAnsatz, Sigma,
    TimeReading,
};

use crate::error::{CavityError, Result};
use crate::moebius::{MinimalSolution, MoebiusElement, TanMoebius};
use crate::roots::newton_bisect;
use crate::trajectory::{validate_trajectory, Side, TrajectoryKind, WallTrajectory};
use grid::GridPhase;
use resonant::{LawWuExact, ResonantPhase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Identity,
    Grid,
    SinusoidalAsymptotic,
    LawWuExact,
    MoebiusMinimal,
    Resonant,
    Composed,
    Inverse,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Backend::Identity => "identity",
            Backend::Grid => "grid",
            Backend::SinusoidalAsymptotic => "sinusoidal_asymptotic",
            Backend::LawWuExact => "law_wu_exact",
            Backend::MoebiusMinimal => "moebius_minimal",
            Backend::Resonant => "resonant",
            Backend::Composed => "composed",
            Backend::Inverse => "inverse",
        };
        f.write_str(s)
    }
}

#[derive(Debug)]
enum Repr {
    Identity,
    Grid(GridPhase),
    Tan {
        backend: Backend,
        map: TanMoebius,
    },
    LawWu(LawWuExact),
    Resonant(ResonantPhase),
    // outer ∘ inner
    Composed {
        inner: PhaseFunction,
        outer: TanMoebius,
    },
    Inverse {
        of: PhaseFunction,
    },
}

#[derive(Debug)]
struct Inner {
    length: f64,
    domain: (f64, f64),
    repr: Repr,
}

#[derive(Debug, Clone)]
pub struct PhaseFunction {
    inner: Arc<Inner>,
}

const ALL: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

impl PhaseFunction {
    fn from_parts(length: f64, domain: (f64, f64), repr: Repr) -> Self {
        Self {
            inner: Arc::new(Inner {
                length,
                domain,
                repr,
            }),
        }
    }

    /// `R(τ) = τ` on the whole real line.
    pub fn identity(length: f64) -> Self {
        Self::from_parts(length, ALL, Repr::Identity)
    }

    pub fn moebius_minimal(sol: MinimalSolution) -> Self {
        let map = *sol.map();
        Self::from_parts(
            PI / sol.omega,
            ALL,
            Repr::Tan {
                backend: Backend::MoebiusMinimal,
                map,
            },
        )
    }

    /// `R_min ∘ r`.
    pub fn composed(r: PhaseFunction, outer: MinimalSolution) -> Self {
        let domain = r.domain();
        Self::from_parts(
            r.length(),
            domain,
            Repr::Composed {
                inner: r,
                outer: *outer.map(),
            },
        )
    }

    pub fn backend(&self) -> Backend {
        match &self.inner.repr {
            Repr::Identity => Backend::Identity,
            Repr::Grid(_) => Backend::Grid,
            Repr::Tan { backend, .. } => *backend,
            Repr::LawWu(_) => Backend::LawWuExact,
            Repr::Resonant(_) => Backend::Resonant,
            Repr::Composed { .. } => Backend::Composed,
            Repr::Inverse { .. } => Backend::Inverse,
        }
    }

    /// Static cavity length `L` setting the period `2L`.
    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn omega(&self) -> f64 {
        PI / self.inner.length
    }

    pub fn domain(&self) -> (f64, f64) {
        self.inner.domain
    }

    pub fn contains(&self, tau: f64) -> bool {
        let (lo, hi) = self.inner.domain;
        let slack = 1e-12 * self.inner.length.max(tau.abs());
        tau >= lo - slack && tau <= hi + slack
    }

    fn check(&self, tau: f64) -> Result<()> {
        if self.contains(tau) && tau.is_finite() {
            Ok(())
        } else {
            let (lo, hi) = self.inner.domain;
            Err(CavityError::Domain {
                what: "tau",
                value: tau,
                lo,
                hi,
            })
        }
    }

    /// `[R, Ṙ, R̈, R⃛]` at `τ`.
    pub fn jet(&self, tau: f64) -> Result<[f64; 4]> {
        self.check(tau)?;
        self.eval(tau, None)
    }

    /// One-sided jet; only differs from [`jet`](Self::jet) at breakpoints.
    pub fn jet_sided(&self, tau: f64, side: Side) -> Result<[f64; 4]> {
        self.check(tau)?;
        self.eval(tau, Some(side))
    }

    pub fn value(&self, tau: f64) -> Result<f64> {
        self.jet(tau).map(|j| j[0])
    }

    /// `d^order R/dτ^order` for `order` in `0..=3`.
    pub fn derivative(&self, tau: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(CavityError::Parameter(format!(
                "derivative order {order} not available (0..=3)"
            )));
        }
        self.jet(tau).map(|j| j[order])
    }

    fn eval(&self, tau: f64, side: Option<Side>) -> Result<[f64; 4]> {
        match &self.inner.repr {
            Repr::Identity => Ok([tau, 1.0, 0.0, 0.0]),
            Repr::Grid(g) => g.eval(tau, side),
            Repr::Tan { map, .. } => Ok(map.jet(tau)),
            Repr::LawWu(p) => Ok(p.eval(tau, side)),
            Repr::Resonant(p) => Ok(p.eval(tau, side)),
            Repr::Composed { inner, outer } => {
                let i = inner.eval(tau, side)?;
                let o = outer.jet(i[0]);
                Ok(chain(o, i))
            }
            Repr::Inverse { of } => {
                let y = of.solve_preimage(tau)?;
                let r = of.eval(y, side)?;
                let i1 = r[1].recip();
                Ok([
                    y,
                    i1,
                    -r[2] * i1 * i1 * i1,
                    -r[3] * i1.powi(4) + 3.0 * r[2] * r[2] * i1.powi(5),
                ])
            }
        }
    }

    /// Points in `[a, b]` where `R` is only piecewise smooth.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.inner.repr {
            Repr::Identity | Repr::Tan { .. } => Vec::new(),
            Repr::Grid(g) => g
                .breakpoints()
                .iter()
                .copied()
                .filter(|&x| x >= a && x <= b)
                .collect(),
            Repr::LawWu(p) => p.breakpoints(a, b),
            Repr::Resonant(p) => p.breakpoints(a, b),
            Repr::Composed { inner, .. } => inner.breakpoints(a, b),
            Repr::Inverse { of } => {
                let (lo, hi) = of.domain();
                let (pa, pb) = (
                    of.solve_preimage(a).unwrap_or(lo),
                    of.solve_preimage(b).unwrap_or(hi),
                );
                of.breakpoints(pa, pb)
                    .into_iter()
                    .filter_map(|x| of.eval(x, None).ok().map(|j| j[0]))
                    .filter(|&s| s >= a && s <= b)
                    .collect()
            }
        }
    }

    /// Smallest `τ` from which `R(τ + 2L) = R(τ) + 2L`.
    pub fn periodic_from(&self) -> f64 {
        match &self.inner.repr {
            Repr::Identity | Repr::Tan { .. } | Repr::Resonant(_) => f64::NEG_INFINITY,
            Repr::Grid(g) => g.periodic_from(),
            Repr::LawWu(p) => p.periodic_from(),
            Repr::Composed { inner, .. } => inner.periodic_from(),
            Repr::Inverse { of } => {
                let p = of.periodic_from();
                if p.is_finite() {
                    of.eval(p, None).map(|j| j[0]).unwrap_or(f64::INFINITY)
                } else {
                    p
                }
            }
        }
    }

    /// `y` with `R(y) = s`.
    fn solve_preimage(&self, s: f64) -> Result<f64> {
        let (lo, hi) = self.inner.domain;
        let two_l = 2.0 * self.inner.length;
        let f = |y: f64| match self.eval(y, None) {
            Ok(j) => (j[0] - s, j[1]),
            Err(_) => (f64::NAN, f64::NAN),
        };
        // bracket by stepping outward in whole periods
        let mut a = s.clamp(lo, hi);
        let mut b = a;
        let mut step = two_l;
        for _ in 0..200 {
            if f(a).0 <= 0.0 {
                break;
            }
            a = (a - step).max(lo);
            step *= 2.0;
        }
        step = two_l;
        for _ in 0..200 {
            if f(b).0 >= 0.0 {
                break;
            }
            b = (b + step).min(hi);
            step *= 2.0;
        }
        let tol = 1e-15 * self.inner.length.max(s.abs());
        newton_bisect(f, a, b, 0.5 * (a + b), tol).map_err(|_| {
            let (rlo, rhi) = (
                self.eval(lo, None)
                    .map(|j| j[0])
                    .unwrap_or(f64::NEG_INFINITY),
                self.eval(hi, None).map(|j| j[0]).unwrap_or(f64::INFINITY),
            );
            CavityError::Domain {
                what: "R value",
                value: s,
                lo: rlo,
                hi: rhi,
            }
        })
    }

    /// `R⁻¹`; closed form for Möbius backends, monotone root finding
    /// otherwise.
    pub fn invert(&self) -> Result<PhaseFunction> {
        let length = self.inner.length;
        Ok(match &self.inner.repr {
            Repr::Identity => Self::from_parts(length, self.inner.domain, Repr::Identity),
            Repr::Tan { backend, map } => Self::from_parts(
                length,
                ALL,
                Repr::Tan {
                    backend: *backend,
                    map: map.inverse(),
                },
            ),
            Repr::Inverse { of } => of.clone(),
            _ => {
                let (lo, hi) = self.inner.domain;
                let range = (
                    if lo.is_finite() {
                        self.eval(lo, None)?[0]
                    } else {
                        lo
                    },
                    if hi.is_finite() {
                        self.eval(hi, None)?[0]
                    } else {
                        hi
                    },
                );
                Self::from_parts(length, range, Repr::Inverse { of: self.clone() })
            }
        })
    }

    /// `R(t + L(t)) - R(t - L(t)) - 2L`.
    pub fn moore_residual(&self, traj: &WallTrajectory, t: f64) -> Result<f64> {
        let lt = traj.jet(t)[0];
        Ok(self.value(t + lt)? - self.value(t - lt)? - 2.0 * traj.length())
    }

    /// Largest `|residual|` over `probes` quasi-random times in `[t_lo, t_hi]`.
    pub fn max_moore_residual(
        &self,
        traj: &WallTrajectory,
        t_lo: f64,
        t_hi: f64,
        probes: usize,
    ) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in probe_times(t_lo, t_hi, probes) {
            worst = worst.max(self.moore_residual(traj, t)?.abs());
        }
        Ok(worst)
    }

    /// Times `t` whose whole characteristic window lies inside the domain,
    /// capped to `[-L, cap]` for unbounded domains.
    pub fn residual_window(&self, traj: &WallTrajectory, cap: f64) -> (f64, f64) {
        let (lo, hi) = self.inner.domain;
        let (_, l_hi, _) = traj.scan_bounds(1024);
        let a = if lo.is_finite() {
            lo + l_hi
        } else {
            -traj.length()
        };
        let b = if hi.is_finite() { hi - l_hi } else { cap };
        (a, b.min(cap).max(a))
    }
}

/// Jet of `o ∘ i` from the jets of `o` (at `i(τ)`) and `i`.
fn chain(o: [f64; 4], i: [f64; 4]) -> [f64; 4] {
    [
        o[0],
        o[1] * i[1],
        o[2] * i[1] * i[1] + o[1] * i[2],
        o[3] * i[1] * i[1] * i[1] + 3.0 * o[2] * i[1] * i[2] + o[1] * i[3],
    ]
}

/// Deterministic low-discrepancy points (golden-ratio sequence).
pub fn probe_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    const G: f64 = 0.618_033_988_749_894_9;
    (0..n)
        .map(|i| a + (b - a) * ((0.5 + i as f64 * G) % 1.0))
        .collect()
}

/// Solves the Moore equation for `traj` on `[-L, t_final + L(t_final)]`
/// and checks the residual against `tol`.
pub fn solve_phase(traj: &WallTrajectory, t_final: f64, tol: f64) -> Result<PhaseFunction> {
    let violations = validate_trajectory(traj);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CavityError::Precondition(format!(
            "invalid trajectory: {}",
            list.join("; ")
        )));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(CavityError::Parameter(format!(
            "t_final = {t_final} must be positive"
        )));
    }
    let length = traj.length();
    let phase = if traj.kind() == TrajectoryKind::Static {
        PhaseFunction::from_parts(length, (-length, t_final + length), Repr::Identity)
    } else {
        let g = GridPhase::new(traj, t_final)?;
        let domain = g.domain();
        PhaseFunction::from_parts(length, domain, Repr::Grid(g))
    };
    let (a, b) = phase.residual_window(traj, t_final);
    let worst = phase.max_moore_residual(traj, a, b, 1000)?;
    if worst > tol {
        return Err(CavityError::Solver {
            tau: b,
            reason: format!("Moore residual {worst:e} exceeds tolerance {tol:e}"),
        });
    }
    Ok(phase)
}

/// `R(τ) = (2/ω_k) arctan(ζ tan(ω_kτ/2))` with `ζ` frozen at `t_elapsed`.
pub fn build_sinusoidal_asymptotic(traj: &WallTrajectory, t_elapsed: f64) -> Result<PhaseFunction> {
    if traj.kind() != TrajectoryKind::Sinusoidal {
        return Err(CavityError::Precondition(format!(
            "expected a sinusoidal trajectory, got {}",
            traj.kind()
        )));
    }
    let m = MoebiusElement::dilation(sinusoidal_zeta(traj, t_elapsed))?;
    let map = TanMoebius::new(m, traj.drive_omega());
    Ok(PhaseFunction::from_parts(
        traj.length(),
        ALL,
        Repr::Tan {
            backend: Backend::SinusoidalAsymptotic,
            map,
        },
    ))
}

/// Exact piecewise-Möbius phase function of a Law/Wu trajectory.
pub fn law_wu_exact_phase(traj: &WallTrajectory) -> Result<PhaseFunction> {
    let p = LawWuExact::new(traj)?;
    Ok(PhaseFunction::from_parts(
        traj.length(),
        ALL,
        Repr::LawWu(p),
    ))
}

/// Continuous, increasing phase function of a resonant ansatz.
pub fn assemble_resonant(ansatz: &ResonantAnsatz) -> Result<PhaseFunction> {
    let p = ResonantPhase::new(ansatz)?;
    Ok(PhaseFunction::from_parts(
        ansatz.length,
        ALL,
        Repr::Resonant(p),
    ))
}

pub fn invert_phase(r: &PhaseFunction) -> Result<PhaseFunction> {
    r.invert()
}

/// Mode function `N_k[e^{-iω_k R(t+x)} - e^{-iω_k R(t-x)}]`,
/// `N_k = (4πk)^{-1/2}`.
pub fn eval_mode(
    r: &PhaseFunction,
    traj: &WallTrajectory,
    k: u32,
    x: f64,
    t: f64,
) -> Result<Complex64> {
    if k == 0 {
        return Err(CavityError::Parameter("mode index must be positive".into()));
    }
    let lt = traj.jet(t)[0];
    if !(0.0..=lt * (1.0 + 1e-14)).contains(&x) {
        return Err(CavityError::Domain {
            what: "x",
            value: x,
            lo: 0.0,
            hi: lt,
        });
    }
    let wk = k as f64 * r.omega();
    let period = 2.0 * r.length();
    let plus = r.value(t + x)?.rem_euclid(period);
    let minus = r.value(t - x)?.rem_euclid(period);
    let norm = (4.0 * PI * k as f64).sqrt().recip();
    Ok(norm * (Complex64::from_polar(1.0, -wk * plus) - Complex64::from_polar(1.0, -wk * minus)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin2() -> WallTrajectory {
        WallTrajectory::sinusoidal(PI, 0.01 * PI, 2, 4).unwrap()
    }

    #[test]
    fn static_solution_is_identity() {
        let traj = WallTrajectory::static_cavity(2.0).unwrap();
        let r = solve_phase(&traj, 30.0, 1e-10).unwrap();
        assert_eq!(r.backend(), Backend::Identity);
        assert_eq!(r.jet(17.3).unwrap(), [17.3, 1.0, 0.0, 0.0]);
        assert_eq!(r.moore_residual(&traj, 5.0).unwrap(), 0.0);
        assert!(r.jet(40.0).is_err());
    }

    #[test]
    fn seed_interval_is_identity() {
        let r = solve_phase(&sin2(), 10.0, 1e-10).unwrap();
        for tau in [-PI, -1.0, 0.0, 2.0, PI] {
            assert_eq!(r.value(tau).unwrap(), tau);
        }
    }

    #[test]
    fn grid_satisfies_moore() {
        let traj = sin2();
        let r = solve_phase(&traj, 20.0, 1e-10).unwrap();
        for t in [0.3, 1.0, 4.4, 9.0, 15.0] {
            assert!(r.moore_residual(&traj, t).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn grid_derivatives_match_differences() {
        let traj = sin2();
        let r = solve_phase(&traj, 20.0, 1e-10).unwrap();
        let h = 1e-4;
        for tau in [4.0, 7.5, 11.1, 18.0] {
            let j = r.jet(tau).unwrap();
            let jp = r.jet(tau + h).unwrap();
            let jm = r.jet(tau - h).unwrap();
            for o in 0..3 {
                let fd = (jp[o] - jm[o]) / (2.0 * h);
                assert!(
                    (fd - j[o + 1]).abs() <= 1e-6 * j[o + 1].abs().max(1.0),
                    "{tau} {o}"
                );
            }
        }
    }

    #[test]
    fn post_motion_periodicity() {
        let traj = sin2();
        let r = solve_phase(&traj, 30.0, 1e-10).unwrap();
        let start = r.periodic_from();
        for tau in [start + 0.1, start + 2.0, start + 5.0] {
            let d = r.value(tau + 2.0 * PI).unwrap() - r.value(tau).unwrap();
            assert!((d - 2.0 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn sided_jets_differ_at_hard_start() {
        let traj = sin2();
        let r = solve_phase(&traj, 10.0, 1e-10).unwrap();
        let left = r.jet_sided(PI, Side::Left).unwrap();
        let right = r.jet_sided(PI, Side::Right).unwrap();
        assert_eq!(left[1], 1.0);
        assert!((right[1] - 1.0).abs() > 1e-3);
        assert!((left[0] - right[0]).abs() < 1e-14);
    }

    #[test]
    fn grid_inverse_roundtrip() {
        let traj = sin2();
        let r = solve_phase(&traj, 20.0, 1e-10).unwrap();
        let inv = r.invert().unwrap();
        for tau in probe_times(-PI, 20.0, 200) {
            let back = inv.value(r.value(tau).unwrap()).unwrap();
            assert!((back - tau).abs() < 1e-10, "{tau}");
        }
    }

    #[test]
    fn invalid_trajectory_is_a_precondition_error() {
        let traj = WallTrajectory::sinusoidal(PI, 0.5 * PI, 2, 2).unwrap();
        assert!(matches!(
            solve_phase(&traj, 5.0, 1e-10),
            Err(CavityError::Precondition(_))
        ));
    }

    #[test]
    fn mode_examples() {
        let traj = WallTrajectory::static_cavity(PI).unwrap();
        let r = solve_phase(&traj, 10.0, 1e-10).unwrap();
        assert_eq!(
            eval_mode(&r, &traj, 3, 0.0, 1.2).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert!(eval_mode(&r, &traj, 2, PI, 1.2).unwrap().norm() < 1e-14);
        let a = eval_mode(&r, &traj, 1, 0.5 * PI, 0.0).unwrap();
        let n1 = (4.0 * PI).sqrt().recip();
        assert!((a - Complex64::new(0.0, -2.0 * n1)).norm() < 1e-15);
        assert!(eval_mode(&r, &traj, 1, 4.0, 0.0).is_err());
    }

    #[test]
    fn asymptotic_identity_when_zeta_is_one() {
        let traj = WallTrajectory::sinusoidal(PI, 0.0, 2, 1).unwrap();
        let r = build_sinusoidal_asymptotic(&traj, 10.0).unwrap();
        for tau in [-3.0, 0.5, 9.0] {
            assert!((r.value(tau).unwrap() - tau).abs() < 1e-13);
        }
    }

    #[test]
    fn law_wu_grid_matches_exact() {
        for k in [1u32, 2, 3] {
            let traj = WallTrajectory::law_wu(PI, 0.01 * PI, k, 6).unwrap();
            let t_final = traj.t_motion() + 3.0 * PI;
            let grid = solve_phase(&traj, t_final, 1e-10).unwrap();
            let exact = law_wu_exact_phase(&traj).unwrap();
            for tau in probe_times(-PI, t_final + PI, 500) {
                let g = grid.jet(tau).unwrap();
                let e = exact.jet(tau).unwrap();
                assert!(
                    (g[0] - e[0]).abs() < 1e-8,
                    "k {k} tau {tau}: {} vs {}",
                    g[0],
                    e[0]
                );
                assert!((g[1] - e[1]).abs() < 1e-8 * e[1], "k {k} tau {tau}");
            }
            let (a, b) = exact.residual_window(&traj, t_final);
            assert!(exact.max_moore_residual(&traj, a, b, 1000).unwrap() < 1e-10);
        }
    }

    #[test]
    fn composed_with_identity_is_unchanged() {
        let traj = sin2();
        let r = solve_phase(&traj, 15.0, 1e-10).unwrap();
        let c = crate::moebius::conformal_compose(&r, &MoebiusElement::identity()).unwrap();
        for tau in [1.0, 6.0, 13.0] {
            let (x, y) = (r.jet(tau).unwrap(), c.jet(tau).unwrap());
            for o in 0..4 {
                assert!((x[o] - y[o]).abs() < 1e-13 * x[o].abs().max(1.0));
            }
        }
    }
}
