//! Bogolubov coefficients, photon spectra and the energy sum rule.
//!
//! `β_kl = -(1/2L)√(l/k) ∫ e^{-iω_k R(τ) - iω_l τ} dτ` over one period
//! `[t - L, t + L]` after the motion. The first index belongs to `R` (the
//! in-modes), the second to `τ`; photon numbers are `n_l = Σ_k |β_kl|²`.
//!
//! The integrand oscillates with local rate `ω(kṘ + l)`. The window is cut
//! into panels of bounded phase advance of `K_R R(τ) + K_τ τ` and each panel
//! gets a fixed Gauss–Legendre rule, so one set of nodes serves the whole
//! matrix. `R` and `τ` are reduced modulo `2L` before exponentiating.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CavityError, Result};
use crate::observables::EnergyReport;
use crate::phase::{PhaseFunction, ResonantAnsatz};
use crate::quadrature::{gauss_legendre, integrate, QuadOptions};
use crate::roots::newton_bisect;

const NODES_PER_PANEL: usize = 20;
const PANEL_PHASE: f64 = 3.0;
// lower bound on the phase weights so broad panels still resolve the shape of R
const MIN_WEIGHT: f64 = 8.0;
const GROUPS: usize = 8;

/// Quadrature nodes over one period, with `R` and `τ` reduced mod `2L`.
#[derive(Debug, Clone)]
struct Nodes {
    r: Vec<f64>,
    s: Vec<f64>,
    w: Vec<f64>,
}

fn check_window(r: &PhaseFunction, t: f64) -> Result<(f64, f64)> {
    let l = r.length();
    let (a, b) = (t - l, t + l);
    let start = r.periodic_from();
    if a < start - 1e-12 * l.max(a.abs()) {
        return Err(CavityError::Precondition(format!(
            "Bogolubov window [{a}, {b}] starts before the periodic regime at {start}"
        )));
    }
    r.jet(a)?;
    r.jet(b)?;
    Ok((a, b))
}

fn build_nodes(r: &PhaseFunction, a: f64, b: f64, k_r: usize, k_s: usize) -> Result<Nodes> {
    let l = r.length();
    let omega = r.omega();
    let (cr, cs) = ((k_r as f64).max(MIN_WEIGHT), (k_s as f64).max(MIN_WEIGHT));
    let phi = |tau: f64| -> Result<(f64, f64)> {
        let j = r.jet(tau)?;
        Ok((omega * (cr * j[0] + cs * tau), omega * (cr * j[1] + cs)))
    };

    let mut cuts = r.breakpoints(a, b);
    cuts.retain(|&x| x > a && x < b);
    cuts.push(b);
    let mut edges = vec![a];
    let mut lo = a;
    for &hi in &cuts {
        let (p_lo, _) = phi(lo)?;
        let (p_hi, _) = phi(hi)?;
        let panels = ((p_hi - p_lo) / PANEL_PHASE).ceil().max(1.0) as usize;
        let step = (p_hi - p_lo) / panels as f64;
        let mut prev = lo;
        for i in 1..panels {
            let target = p_lo + step * i as f64;
            let f = |x: f64| match phi(x) {
                Ok((p, d)) => (p - target, d),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let guess = prev + (hi - lo) / panels as f64;
            let x =
                newton_bisect(f, prev, hi, guess, 1e-13 * l).map_err(|e| CavityError::Solver {
                    tau: target,
                    reason: e.to_string(),
                })?;
            edges.push(x);
            prev = x;
        }
        edges.push(hi);
        lo = hi;
    }

    let (gx, gw) = gauss_legendre(NODES_PER_PANEL);
    let two_l = 2.0 * l;
    let n = (edges.len() - 1) * NODES_PER_PANEL;
    let mut nodes = Nodes {
        r: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        w: Vec::with_capacity(n),
    };
    for e in edges.windows(2) {
        let (c, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (x, wt) in gx.iter().zip(&gw) {
            let tau = c + h * x;
            nodes.r.push(r.value(tau)?.rem_euclid(two_l));
            nodes.s.push(tau.rem_euclid(two_l));
            nodes.w.push(h * wt);
        }
    }
    Ok(nodes)
}

/// `Σ_i w_i e^{-iωk r_i} e^{∓iωl s_i}` for `k ≤ k_r`, `l ≤ k_s`, row-major in
/// `k`. Node groups are fixed, so the sum order does not depend on the
/// thread count.
fn overlap_sums(nodes: &Nodes, omega: f64, k_r: usize, k_s: usize, conj_s: bool) -> Vec<Complex64> {
    let n = nodes.w.len();
    let group = n.div_ceil(GROUPS).max(1);
    let partials: Vec<Vec<Complex64>> = (0..GROUPS)
        .into_par_iter()
        .map(|g| {
            let mut acc = vec![Complex64::new(0.0, 0.0); k_r * k_s];
            let mut vpow = vec![Complex64::new(0.0, 0.0); k_s];
            for i in (g * group)..((g + 1) * group).min(n) {
                let u = Complex64::from_polar(1.0, -omega * nodes.r[i]);
                let sgn = if conj_s { 1.0 } else { -1.0 };
                let v = Complex64::from_polar(1.0, sgn * omega * nodes.s[i]);
                let mut p = v;
                for slot in vpow.iter_mut() {
                    *slot = p;
                    p *= v;
                }
                let mut a = u * nodes.w[i];
                for row in acc.chunks_exact_mut(k_s) {
                    for (dst, vp) in row.iter_mut().zip(&vpow) {
                        *dst += a * vp;
                    }
                    a *= u;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); k_r * k_s];
    for p in &partials {
        for (t, x) in total.iter_mut().zip(p) {
            *t += x;
        }
    }
    total
}

fn scale(l_len: f64, k: usize, l: usize) -> f64 {
    (l as f64 / k as f64).sqrt() / (2.0 * l_len)
}

/// Single coefficient `β_kl` over `[t - L, t + L]`.
pub fn bogolubov_direct(r: &PhaseFunction, t: f64, k: usize, l: usize) -> Result<Complex64> {
    coefficient(r, t, k, l, false)
}

/// `α_kl = (1/2L)√(l/k) ∫ e^{-iω_k R(τ) + iω_l τ} dτ`.
pub fn alpha_direct(r: &PhaseFunction, t: f64, k: usize, l: usize) -> Result<Complex64> {
    coefficient(r, t, k, l, true)
}

fn coefficient(r: &PhaseFunction, t: f64, k: usize, l: usize, alpha: bool) -> Result<Complex64> {
    if k == 0 || l == 0 {
        return Err(CavityError::Parameter(format!(
            "mode indices must be positive, got ({k}, {l})"
        )));
    }
    let (a, b) = check_window(r, t)?;
    let nodes = build_nodes(r, a, b, k, l)?;
    let omega = r.omega();
    let sgn = if alpha { 1.0 } else { -1.0 };
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..nodes.w.len() {
        let phase = -omega * k as f64 * nodes.r[i] + sgn * omega * l as f64 * nodes.s[i];
        sum += nodes.w[i] * Complex64::from_polar(1.0, phase);
    }
    Ok(sgn * scale(r.length(), k, l) * sum)
}

/// Full matrices `β_kl` (and `α_kl` if asked) for `k ≤ k_r`, `l ≤ k_s`.
pub fn bogolubov_matrix(
    r: &PhaseFunction,
    t: f64,
    k_r: usize,
    k_s: usize,
) -> Result<Vec<Vec<Complex64>>> {
    matrix(r, t, k_r, k_s, false)
}

pub fn alpha_matrix(
    r: &PhaseFunction,
    t: f64,
    k_r: usize,
    k_s: usize,
) -> Result<Vec<Vec<Complex64>>> {
    matrix(r, t, k_r, k_s, true)
}

fn matrix(
    r: &PhaseFunction,
    t: f64,
    k_r: usize,
    k_s: usize,
    alpha: bool,
) -> Result<Vec<Vec<Complex64>>> {
    if k_r == 0 || k_s == 0 {
        return Err(CavityError::Parameter(
            "matrix needs at least one mode on each side".into(),
        ));
    }
    let (a, b) = check_window(r, t)?;
    let nodes = build_nodes(r, a, b, k_r, k_s)?;
    let sums = overlap_sums(&nodes, r.omega(), k_r, k_s, alpha);
    let sgn = if alpha { 1.0 } else { -1.0 };
    let len = r.length();
    Ok((0..k_r)
        .map(|k| {
            (0..k_s)
                .map(|l| sgn * scale(len, k + 1, l + 1) * sums[k * k_s + l])
                .collect()
        })
        .collect())
}

/// Per-row unitarity sums `Σ_l (|α_kl|² - |β_kl|²)`.
pub fn unitarity_sums(r: &PhaseFunction, t: f64, k_r: usize, l_max: usize) -> Result<Vec<f64>> {
    let b = bogolubov_matrix(r, t, k_r, l_max)?;
    let a = alpha_matrix(r, t, k_r, l_max)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(ar, br)| {
            ar.iter()
                .zip(br)
                .map(|(x, y)| x.norm_sqr() - y.norm_sqr())
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumOptions {
    pub l_max_start: usize,
    pub l_max_ceiling: usize,
    pub rel_tol: f64,
    pub floor: f64,
    /// Number of out-modes `n_l` to report; `None` means all up to `l_max`.
    pub out_modes: Option<usize>,
    /// Apply the truncation test to every reported `n_k` instead of the
    /// total.
    pub per_mode: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            l_max_start: 32,
            l_max_ceiling: 1024,
            rel_tol: 1e-6,
            floor: 1e-12,
            out_modes: None,
            per_mode: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// `beta[k-1][l-1] = β_kl`; rows run over in-modes up to `l_max`.
    pub beta: Vec<Vec<Complex64>>,
    pub n_k: Vec<f64>,
    pub n_total: f64,
    pub l_max: usize,
    pub tail_estimate: f64,
    pub truncation_warning: bool,
    pub omega: f64,
    pub t_eval: f64,
}

impl SpectrumResult {
    /// `Σ n_k ω_k`.
    pub fn photon_energy(&self) -> f64 {
        self.n_k
            .iter()
            .enumerate()
            .map(|(i, n)| n * (i + 1) as f64 * self.omega)
            .sum()
    }
}

/// Photon spectrum at time `t`, doubling `l_max` until the contribution of
/// the last octave falls below `rel_tol · max(N, floor)`.
pub fn spectrum(r: &PhaseFunction, t: f64, opts: &SpectrumOptions) -> Result<SpectrumResult> {
    if opts.l_max_start == 0 || opts.l_max_ceiling < opts.l_max_start {
        return Err(CavityError::Parameter(format!(
            "spectrum needs 0 < l_max_start <= l_max_ceiling, got {} and {}",
            opts.l_max_start, opts.l_max_ceiling
        )));
    }
    let mut l_max = opts.l_max_start;
    loop {
        let n_out = opts.out_modes.unwrap_or(l_max);
        let beta = bogolubov_matrix(r, t, l_max, n_out)?;
        let mut n_k = vec![0.0; n_out];
        let mut tail = 0.0;
        let mut col_tail = vec![0.0; n_out];
        let half = l_max / 2;
        for (k, row) in beta.iter().enumerate() {
            for (l, b) in row.iter().enumerate() {
                let p = b.norm_sqr();
                n_k[l] += p;
                let last_octave = k >= half || (opts.out_modes.is_none() && l >= half);
                if last_octave {
                    tail += p;
                    col_tail[l] += p;
                }
            }
        }
        let n_total: f64 = n_k.iter().sum();
        let converged = if opts.per_mode {
            col_tail
                .iter()
                .zip(&n_k)
                .all(|(t, n)| *t < opts.rel_tol * n.max(opts.floor))
        } else {
            tail < opts.rel_tol * n_total.max(opts.floor)
        };
        let at_ceiling = 2 * l_max > opts.l_max_ceiling;
        if converged || at_ceiling {
            return Ok(SpectrumResult {
                beta,
                n_k,
                n_total,
                l_max,
                tail_estimate: tail,
                truncation_warning: !converged,
                omega: r.omega(),
                t_eval: t,
            });
        }
        l_max *= 2;
    }
}

/// `E = -ω/24 + Σ n_k ω_k`: returns `(E, right-hand side, relative error)`
/// with the error measured against `max(|E|, ω/24)`.
pub fn sum_rule_check(spec: &SpectrumResult, report: &EnergyReport) -> (f64, f64, f64) {
    let lhs = report.e_total;
    let rhs = -spec.omega / 24.0 + spec.photon_energy();
    let rel = (lhs - rhs).abs() / lhs.abs().max(spec.omega / 24.0);
    (lhs, rhs, rel)
}

/// `β_ml` from the inner functions of a resonant ansatz,
/// `-(1/Kπ)√(l/m) Σ_n ∫ dθ exp(-i(2m/K)(Θ_n(tan θ) + nπ + c_n)) exp(-i(2l/K)(θ + nπ))`
/// with `Θ_n` the continuous branch of `arctan σ_n` and `c_n` the branch
/// offsets. For `K = 1` this is the familiar υ-integral
/// `((-1)^{m+l+1}/π)√(l/m)∫dυ/(1+υ²) ((υ+i)/(υ-i))^l ((σ+i)/(σ-i))^m`.
pub fn bogolubov_resonant(ansatz: &ResonantAnsatz, m: usize, l: usize) -> Result<Complex64> {
    if m == 0 || l == 0 {
        return Err(CavityError::Parameter(format!(
            "mode indices must be positive, got ({m}, {l})"
        )));
    }
    let kk = ansatz.k as f64;
    let offsets = ansatz.offsets();
    let (mf, lf) = (m as f64, l as f64);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_segments: 4000,
    };
    let half = 0.5 * PI;
    let mut sum = Complex64::new(0.0, 0.0);
    for (n, sigma) in ansatz.sigmas.iter().enumerate() {
        let shift = n as f64 * PI;
        let f = |th: f64| {
            let big = sigma.lift(th.tan()) + shift + offsets[n];
            let phase = -2.0 * mf / kk * big - 2.0 * lf / kk * (th + shift);
            let (s, c) = phase.sin_cos();
            Ok([c, s])
        };
        let res = integrate::<2, _>(f, -half, half, &[], &opts)?;
        sum += Complex64::new(res.value[0], res.value[1]);
    }
    Ok(-(lf / mf).sqrt() / (kk * PI) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::{minimal_phase, MoebiusElement};
    use crate::phase::{assemble_resonant, Sigma};

    #[test]
    fn static_cavity_has_no_photons() {
        let r = PhaseFunction::identity(PI);
        for (k, l) in [(1, 1), (2, 5), (7, 3)] {
            assert!(bogolubov_direct(&r, 0.3, k, l).unwrap().norm() < 1e-14);
            let a = alpha_direct(&r, 0.3, k, l).unwrap();
            let expected = if k == l { 1.0 } else { 0.0 };
            assert!((a - expected).norm() < 1e-13, "({k}, {l}) {a}");
        }
        let s = spectrum(&r, 0.0, &SpectrumOptions::default()).unwrap();
        assert_eq!(s.l_max, 32);
        assert!(s.n_total < 1e-24);
        assert!(!s.truncation_warning);
    }

    #[test]
    fn minimal_solution_has_no_photons() {
        let m = MoebiusElement::new(1.4, -0.3, 0.8, 0.9).unwrap();
        let r = minimal_phase(&m, 1.0).unwrap();
        let b = bogolubov_matrix(&r, 0.0, 16, 16).unwrap();
        let worst = b.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        for u in unitarity_sums(&r, 0.0, 4, 64).unwrap() {
            assert!((u - 1.0).abs() < 1e-10, "{u}");
        }
    }

    #[test]
    fn matrix_agrees_with_single_coefficients() {
        let a =
            ResonantAnsatz::uniform(2, PI, MoebiusElement::dilation(0.4).unwrap().into()).unwrap();
        let r = assemble_resonant(&a).unwrap();
        let m = bogolubov_matrix(&r, 0.0, 6, 5).unwrap();
        for (k, l) in [(1, 1), (2, 3), (6, 5), (4, 2)] {
            let single = bogolubov_direct(&r, 0.0, k, l).unwrap();
            assert!((single - m[k - 1][l - 1]).norm() < 1e-13);
        }
    }

    #[test]
    fn resonant_form_agrees_with_direct() {
        for (k, s) in [(1u32, 0.4), (2, 0.4), (3, 2.5)] {
            let a = ResonantAnsatz::uniform(
                k,
                PI,
                Sigma::Moebius(MoebiusElement::new(1.0, s, -0.2, 1.3).unwrap()),
            )
            .unwrap();
            let r = assemble_resonant(&a).unwrap();
            for (m, l) in [(1, 1), (1, 2), (3, 1), (4, 5)] {
                let d = bogolubov_direct(&r, 0.0, m, l).unwrap();
                let v = bogolubov_resonant(&a, m, l).unwrap();
                assert!((d - v).norm() < 1e-11, "k {k} ({m}, {l}) {d} vs {v}");
            }
        }
    }

    #[test]
    fn rejects_zero_indices_and_early_windows() {
        let r = PhaseFunction::identity(1.0);
        assert!(bogolubov_direct(&r, 0.0, 0, 1).is_err());
        let bad = SpectrumOptions {
            l_max_start: 0,
            ..Default::default()
        };
        assert!(spectrum(&r, 0.0, &bad).is_err());
    }
}
