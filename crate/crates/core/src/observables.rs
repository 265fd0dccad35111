//! Energy density, total energy and the Schwarzian.
//!
//! The profile function is
//! `ϱ(τ) = -(ω²/48π) Ṙ² - S[R]/(24π)`, and the energy density is
//! `⟨T₀₀(x, t)⟩ = ϱ(t + x) + ϱ(t - x)`. Where `R̈` jumps, `S[R]` carries a
//! delta function of weight `[R̈]/Ṙ`; it is added explicitly. A jump in `Ṙ`
//! makes the energy infinite; such points are counted, not integrated.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{CavityError, Result};
use crate::phase::{PhaseFunction, ResonantAnsatz, Sigma};
use crate::quadrature::{integrate, QuadOptions};
use crate::trajectory::{Side, WallTrajectory};

/// `S[R] = R⃛/Ṙ - (3/2)(R̈/Ṙ)²`.
pub fn schwarzian(r: &PhaseFunction, tau: f64) -> Result<f64> {
    let j = r.jet(tau)?;
    schwarzian_of_jet(tau, j)
}

fn schwarzian_of_jet(tau: f64, j: [f64; 4]) -> Result<f64> {
    if !(j[1] > 0.0) {
        return Err(CavityError::Monotonicity { tau, slope: j[1] });
    }
    let q = j[2] / j[1];
    Ok(j[3] / j[1] - 1.5 * q * q)
}

/// `(sub-Casimir part, Schwarzian part)` of `ϱ` from a jet.
fn profile_parts(omega: f64, tau: f64, j: [f64; 4]) -> Result<[f64; 2]> {
    let s = schwarzian_of_jet(tau, j)?;
    Ok([-omega * omega / (48.0 * PI) * j[1] * j[1], -s / (24.0 * PI)])
}

/// `ϱ(τ)`.
pub fn profile(r: &PhaseFunction, tau: f64) -> Result<f64> {
    let [a, b] = profile_parts(r.omega(), tau, r.jet(tau)?)?;
    Ok(a + b)
}

#[derive(Debug, Clone)]
pub struct EnergyProfile {
    pub samples: Vec<(f64, f64)>,
    /// Smallest `τ` from which the profile is `2L`-periodic.
    pub period_start: f64,
    phase: PhaseFunction,
}

impl EnergyProfile {
    /// `⟨T₀₀(x, t)⟩ = ϱ(t + x) + ϱ(t - x)`.
    pub fn density(&self, x: f64, t: f64) -> Result<f64> {
        Ok(profile(&self.phase, t + x)? + profile(&self.phase, t - x)?)
    }

    pub fn phase(&self) -> &PhaseFunction {
        &self.phase
    }
}

/// `n` equally spaced samples of `ϱ` on `[a, b]`.
pub fn energy_profile(r: &PhaseFunction, range: (f64, f64), n: usize) -> Result<EnergyProfile> {
    let (a, b) = range;
    if !(a < b) || n < 2 {
        return Err(CavityError::Parameter(format!(
            "profile needs a non-empty range and at least two samples, got [{a}, {b}] with {n}"
        )));
    }
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let tau = a + (b - a) * i as f64 / (n - 1) as f64;
        samples.push((tau, profile(r, tau)?));
    }
    Ok(EnergyProfile {
        samples,
        period_start: r.periodic_from(),
        phase: r.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub e_total: f64,
    pub e_subcasimir: f64,
    pub e_schwarzian: f64,
    pub t_eval: f64,
    pub length_at_t: f64,
    /// Breakpoints in the window where `Ṙ` itself jumps; their (infinite)
    /// contribution is left out of the totals.
    pub singular_kinks: usize,
    pub quad_error: f64,
}

fn energy_options(omega: f64) -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-10 * omega,
        rel_tol: 1e-12,
        max_segments: 20_000,
    }
}

/// `E(t) = ∫ ϱ` over `[t - L(t), t + L(t)]`.
pub fn total_energy(r: &PhaseFunction, traj: &WallTrajectory, t: f64) -> Result<EnergyReport> {
    total_energy_with(r, traj, t, &energy_options(r.omega()))
}

pub fn total_energy_with(
    r: &PhaseFunction,
    traj: &WallTrajectory,
    t: f64,
    opts: &QuadOptions,
) -> Result<EnergyReport> {
    let lt = traj.jet(t)[0];
    energy_over(r, t - lt, t + lt, opts).map(|(sub, schw, kinks, err)| EnergyReport {
        e_total: sub + schw,
        e_subcasimir: sub,
        e_schwarzian: schw,
        t_eval: t,
        length_at_t: lt,
        singular_kinks: kinks,
        quad_error: err,
    })
}

/// Integral of `ϱ` over `[a, b]`, split into its two parts, plus the
/// delta contributions of `R̈` jumps.
fn energy_over(
    r: &PhaseFunction,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<(f64, f64, usize, f64)> {
    let omega = r.omega();
    r.jet(a)?;
    r.jet(b)?;
    let bps = r.breakpoints(a, b);
    let q = integrate::<2, _>(
        |tau| profile_parts(omega, tau, r.jet(tau)?),
        a,
        b,
        &bps,
        opts,
    )?;
    let mut schw = q.value[1];
    let mut kinks = 0;
    let edge = 1e-12 * r.length().max(b.abs());
    for &p in &bps {
        let left = r.jet_sided(p, Side::Left)?;
        let right = r.jet_sided(p, Side::Right)?;
        if (right[1] - left[1]).abs() > 1e-9 * left[1] {
            kinks += 1;
            continue;
        }
        // a delta sitting on the window edge is shared with the neighbour
        let weight = if (p - a).abs() <= edge || (p - b).abs() <= edge {
            0.5
        } else {
            1.0
        };
        schw -= weight * (right[2] - left[2]) / left[1] / (24.0 * PI);
    }
    Ok((q.value[0], schw, kinks, q.error))
}

/// Sub-Casimir inequality `-(π/48L²)∫Ṙ² ≤ -π/(24 L(t))`.
pub fn subcasimir_bound_check(
    r: &PhaseFunction,
    traj: &WallTrajectory,
    t: f64,
) -> Result<(f64, f64, bool)> {
    let rep = total_energy(r, traj, t)?;
    let rhs = -PI / (24.0 * rep.length_at_t);
    let tol = 1e-10 * r.omega();
    Ok((rep.e_subcasimir, rhs, rep.e_subcasimir <= rhs + tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TFormEnergy {
    pub energy: f64,
    /// `(1/2L)∫ ds/T²`, equal to one for every admissible phase function.
    pub constraint: f64,
}

/// Energy from the quadratic form `(1/12π)∫(Ṫ² - (ω²/4)T²) ds` with
/// `T(s) = (dR⁻¹/ds)^{-1/2}` over `[t' - L, t' + L]`, `t' = R(t - L) + L`.
/// Only valid once the wall is at rest, `t ≥ T_motion`.
pub fn energy_via_t(r: &PhaseFunction, traj: &WallTrajectory, t: f64) -> Result<TFormEnergy> {
    if t < traj.t_motion() {
        return Err(CavityError::Precondition(format!(
            "T-form energy needs the wall at rest: t = {t} < T_motion = {}",
            traj.t_motion()
        )));
    }
    let l = traj.length();
    let omega = r.omega();
    let inv = r.invert()?;
    let s0 = r.value(t - l)?;
    let (a, b) = (s0, s0 + 2.0 * l);
    let bps = inv.breakpoints(a, b);
    let f = |s: f64| -> Result<[f64; 2]> {
        let j = inv.jet(s)?;
        if !(j[1] > 0.0) {
            return Err(CavityError::Monotonicity {
                tau: s,
                slope: j[1],
            });
        }
        let u1 = j[1];
        // Ṫ² - (ω²/4)T² with T = u1^{-1/2}
        let q = j[2] * j[2] / (4.0 * u1 * u1 * u1) - 0.25 * omega * omega / u1;
        Ok([q, u1])
    };
    let res = integrate::<2, _>(f, a, b, &bps, &energy_options(omega))?;
    Ok(TFormEnergy {
        energy: res.value[0] / (12.0 * PI),
        constraint: res.value[1] / (2.0 * l),
    })
}

/// Energy of a resonant ansatz from its inner functions,
/// `E = -(k²ω/24)(1 + (1/2kπ)Σ∫(1+υ²)S[σ_j]dυ)
///      + ((k²-1)ω/24kπ) Σ∫(1+υ²)σ_j'²/(1+σ_j²)² dυ`,
/// integrated in `θ` with `υ = tan θ`.
pub fn resonant_energy(ansatz: &ResonantAnsatz) -> Result<f64> {
    let k = ansatz.k as f64;
    let omega = ansatz.omega();
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_segments: 4000,
    };
    let half = 0.5 * PI;
    let (mut s_sum, mut q_sum) = (0.0, 0.0);
    for sigma in &ansatz.sigmas {
        match sigma {
            Sigma::Moebius(m) => {
                let (alpha, gamma, beta) = (
                    m.a * m.a + m.c * m.c,
                    m.b * m.b + m.d * m.d,
                    m.a * m.b + m.c * m.d,
                );
                let (p0, p1) = (0.5 * (alpha + gamma), 0.5 * (gamma - alpha));
                let f = |th: f64| {
                    let (s, c) = (2.0 * th).sin_cos();
                    let p = p0 + p1 * c + beta * s;
                    Ok([1.0 / (p * p)])
                };
                q_sum += integrate::<1, _>(f, -half, half, &[], &opts)?.value[0];
            }
            Sigma::Callable(_) => {
                let f = |th: f64| {
                    let v = th.tan();
                    let w = 1.0 + v * v;
                    let j = sigma.jet(v);
                    let ratio = w * j[1] / (1.0 + j[0] * j[0]);
                    Ok([w * w * sigma.schwarzian(v), ratio * ratio])
                };
                let r = integrate::<2, _>(f, -half, half, &[], &opts)?;
                s_sum += r.value[0];
                q_sum += r.value[1];
            }
        }
    }
    Ok(-k * k * omega / 24.0 * (1.0 + s_sum / (2.0 * k * PI))
        + (k * k - 1.0) * omega / (24.0 * k * PI) * q_sum)
}

/// `ϱ` of a resonant ansatz evaluated from the inner functions:
/// `-(k²ω²/48π)(1 + ½(1+υ²)²S[σ]) + ((k²-1)ω²/48π)(1+υ²)²σ'²/(1+σ²)²`.
pub fn resonant_profile(ansatz: &ResonantAnsatz, tau: f64) -> f64 {
    let k = ansatz.k as f64;
    let omega = ansatz.omega();
    let half = 0.5 * ansatz.omega_k() * tau;
    let n = (half / PI).round();
    let v = (half - n * PI).tan();
    let j = (n as i64).rem_euclid(ansatz.sigmas.len() as i64) as usize;
    let sigma = &ansatz.sigmas[j];
    let w = 1.0 + v * v;
    let s = sigma.jet(v);
    let ratio = w * s[1] / (1.0 + s[0] * s[0]);
    let c = omega * omega / (48.0 * PI);
    -k * k * c * (1.0 + 0.5 * w * w * sigma.schwarzian(v)) + (k * k - 1.0) * c * ratio * ratio
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::{minimal_phase, MoebiusElement};
    use crate::phase::{assemble_resonant, solve_phase};

    #[test]
    fn static_energy() {
        let traj = WallTrajectory::static_cavity(PI).unwrap();
        let r = solve_phase(&traj, 10.0, 1e-10).unwrap();
        let rep = total_energy(&r, &traj, 3.0).unwrap();
        assert!((rep.e_total + 1.0 / 24.0).abs() < 1e-12);
        assert_eq!(rep.e_schwarzian, 0.0);
        let (lhs, rhs, holds) = subcasimir_bound_check(&r, &traj, 3.0).unwrap();
        assert!(holds && (lhs - rhs).abs() < 1e-12);
        let p = energy_profile(&r, (0.0, 1.0), 5).unwrap();
        for (_, rho) in &p.samples {
            assert!((rho + PI / (48.0 * PI * PI)).abs() < 1e-15);
        }
        assert!((p.density(0.3, 2.0).unwrap() + 1.0 / (24.0 * PI)).abs() < 1e-15);
        assert!(energy_profile(&r, (1.0, 1.0), 5).is_err());
    }

    #[test]
    fn minimal_solution_energy() {
        let traj = WallTrajectory::static_cavity(2.0).unwrap();
        let m = MoebiusElement::new(1.2, 0.5, -0.7, 0.6).unwrap();
        let r = minimal_phase(&m, traj.omega()).unwrap();
        let rep = total_energy(&r, &traj, 0.7).unwrap();
        assert!((rep.e_total + traj.omega() / 24.0).abs() < 1e-11);
        let tf = energy_via_t(&r, &traj, 0.7).unwrap();
        assert!((tf.energy + traj.omega() / 24.0).abs() < 1e-11);
        assert!((tf.constraint - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_schwarzian_and_monotonicity_error() {
        let r = PhaseFunction::identity(1.0);
        assert_eq!(schwarzian(&r, 0.4).unwrap(), 0.0);
        assert!(matches!(
            schwarzian_of_jet(0.0, [0.0, -1.0, 0.0, 0.0]),
            Err(CavityError::Monotonicity { .. })
        ));
    }

    #[test]
    fn dilation_ansatz_energy_is_cosh() {
        let zeta: f64 = 0.3;
        for k in 1..=3u32 {
            let a = ResonantAnsatz::uniform(k, PI, MoebiusElement::dilation(zeta).unwrap().into())
                .unwrap();
            let kf = k as f64;
            let expected = -kf * kf / 24.0 + (kf * kf - 1.0) / 24.0 * zeta.ln().cosh();
            assert!(
                (resonant_energy(&a).unwrap() - expected).abs() < 1e-12,
                "k {k}"
            );
            let r = assemble_resonant(&a).unwrap();
            let traj = WallTrajectory::static_cavity(PI).unwrap();
            let e = total_energy(&r, &traj, 1.0).unwrap().e_total;
            assert!((e - expected).abs() < 1e-10, "k {k}: {e} vs {expected}");
            for tau in [0.3, 1.1, 2.9] {
                assert!((resonant_profile(&a, tau) - profile(&r, tau).unwrap()).abs() < 1e-10);
            }
        }
    }
}
