//! Adaptive Gauss–Kronrod integration and fixed Gauss–Legendre rules.
//!
//! The adaptive integrator handles vector-valued integrands so that several
//! related integrals (for example the two parts of the energy profile) share
//! one mesh. Breakpoints split the interval before any adaptation, which is
//! how kinks of piecewise-smooth integrands are kept off interior nodes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{CavityError, Result};

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525454140,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

// 10-point Gauss weights, paired with XGK[1], XGK[3], ..., XGK[9]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_segments: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod21<const N: usize, F>(f: &F, a: f64, b: f64) -> Result<Segment<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = [0.0; N];
    let mut gauss = [0.0; N];

    let fc = f(center)?;
    for c in 0..N {
        kronrod[c] = fc[c] * WGK[10];
    }
    for (j, (&x, &wk)) in XGK[..10].iter().zip(WGK[..10].iter()).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        for c in 0..N {
            let s = f1[c] + f2[c];
            kronrod[c] += wk * s;
            if j % 2 == 1 {
                gauss[c] += WG[j / 2] * s;
            }
        }
    }

    let mut value = [0.0; N];
    let mut error: f64 = 0.0;
    for c in 0..N {
        value[c] = kronrod[c] * half;
        let e = ((kronrod[c] - gauss[c]) * half).abs();
        error = error.max(e.max(50.0 * f64::EPSILON * value[c].abs()));
    }
    if !error.is_finite() || value.iter().any(|v| !v.is_finite()) {
        return Err(CavityError::Quadrature {
            a,
            b,
            error: f64::INFINITY,
        });
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint strictly
/// inside the interval.
pub fn integrate<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    if a == b {
        return Ok(QuadResult {
            value: [0.0; N],
            error: 0.0,
            segments: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod21(&f, w[0], w[1])?);
        }
    }

    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        for s in heap.iter() {
            for c in 0..N {
                total[c] += s.value[c];
            }
            err += s.error;
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= opts.abs_tol.max(opts.rel_tol * scale) {
            return Ok(finish(heap, sign));
        }
        if heap.len() >= opts.max_segments {
            let worst = heap.peek().expect("heap is non-empty");
            return Err(CavityError::Quadrature {
                a: worst.a,
                b: worst.b,
                error: err,
            });
        }

        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // segment below floating-point resolution
            return Err(CavityError::Quadrature {
                a: worst.a,
                b: worst.b,
                error: err,
            });
        }
        heap.push(kronrod21(&f, worst.a, mid)?);
        heap.push(kronrod21(&f, mid, worst.b)?);
    }
}

fn finish<const N: usize>(heap: BinaryHeap<Segment<N>>, sign: f64) -> QuadResult<N> {
    // fixed summation order (by left endpoint) so results do not depend on the
    // order in which segments were refined
    let mut segs = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = [0.0; N];
    let mut error = 0.0;
    for s in &segs {
        for c in 0..N {
            value[c] += s.value[c];
        }
        error += s.error;
    }
    for v in value.iter_mut() {
        *v *= sign;
    }
    QuadResult {
        value,
        error,
        segments: segs.len(),
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate::<1, _>(|x| f(x).map(|v| [v]), a, b, breakpoints, opts).map(|r| r.value[0])
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_and_exponential() {
        let opts = QuadOptions::default();
        let v = integrate_scalar(|x| Ok(x.powi(5) - 3.0 * x), 0.0, 2.0, &[], &opts).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
        let v = integrate_scalar(|x| Ok(x.exp()), -1.0, 1.0, &[], &opts).unwrap();
        assert!((v - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_adapts() {
        // ∫ dx/(x²+ε²) over [-1,1] = 2 atan(1/ε)/ε
        let eps = 1e-3;
        let opts = QuadOptions {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_segments: 4000,
        };
        let v = integrate_scalar(|x| Ok(1.0 / (x * x + eps * eps)), -1.0, 1.0, &[], &opts).unwrap();
        let exact = 2.0 * (1.0 / eps).atan() / eps;
        assert!((v - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn kink_at_breakpoint() {
        let opts = QuadOptions::default();
        let f = |x: f64| Ok(x.abs());
        let with = integrate::<1, _>(|x| f(x).map(|v| [v]), -1.0, 2.0, &[0.0], &opts).unwrap();
        assert!((with.value[0] - 2.5).abs() < 1e-14);
        assert_eq!(with.segments, 2);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let opts = QuadOptions::default();
        let v = integrate_scalar(|x| Ok(x.sin()), PI, 0.0, &[], &opts).unwrap();
        assert!((v + 2.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_exact_for_degree() {
        for n in [1usize, 2, 5, 16, 20, 33] {
            let (x, w) = gauss_legendre(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
            let deg = 2 * n - 1;
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * x.powi(deg as i32 - 1))
                .sum();
            let exact = if (deg - 1) % 2 == 0 {
                2.0 / deg as f64
            } else {
                0.0
            };
            assert!((s - exact).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn segment_budget_exhaustion_is_an_error() {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_segments: 3,
        };
        let r = integrate_scalar(|x| Ok((1.0 / (x + 1e-9)).sin()), 0.0, 1.0, &[], &opts);
        assert!(matches!(r, Err(CavityError::Quadrature { .. })));
    }
}
