use std::f64::consts::PI;

use cavity::cli::output::fmt17;
use cavity::moebius::{
    compose, conformal_compose, inverse, minimal_phase, minimal_t_squared, MoebiusElement,
    TanMoebius,
};
use cavity::observables::profile;
use cavity::particles::{spectrum, SpectrumOptions};
use cavity::phase::solve_phase;
use cavity::WallTrajectory;
use proptest::prelude::*;

// rotation · dilation · rotation, so every element of the group is reachable
fn element() -> impl Strategy<Value = MoebiusElement> {
    (-PI..PI, -1.5f64..1.5, -PI..PI).prop_map(|(t1, s, t2)| {
        let rot = |t: f64| MoebiusElement::new(t.cos(), t.sin(), -t.sin(), t.cos()).unwrap();
        let dil = MoebiusElement::dilation(s.exp()).unwrap();
        compose(&rot(t1), &compose(&dil, &rot(t2)))
    })
}

fn close(m: &MoebiusElement, n: &MoebiusElement, tol: f64) -> bool {
    // ±1 act the same way
    let plus = [m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d];
    let minus = [m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d];
    let norm = |v: [f64; 4]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    norm(plus).min(norm(minus)) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_laws(m in element(), n in element(), p in element()) {
        let scale = [m, n, p].iter().map(|e| e.a.abs() + e.b.abs() + e.c.abs() + e.d.abs()).product::<f64>();
        let tol = 1e-12 * scale * scale;
        prop_assert!((m.det() - 1.0).abs() < 1e-12 * scale * scale);
        prop_assert!((compose(&m, &n).det() - 1.0).abs() < tol);
        prop_assert!(close(&compose(&m, &inverse(&m)), &MoebiusElement::identity(), tol));
        let left = compose(&compose(&m, &n), &p);
        let right = compose(&m, &compose(&n, &p));
        prop_assert!(close(&left, &right, tol));
    }

    #[test]
    fn normalization_fixes_the_determinant(a in 0.2f64..5.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in 0.2f64..5.0) {
        prop_assume!(a * d - b * c > 0.05);
        let m = MoebiusElement::new(a, b, c, d).unwrap();
        prop_assert!((m.det() - 1.0).abs() < 1e-12);
        prop_assert!(MoebiusElement::new(b, a, d, c).is_err());
    }

    #[test]
    fn minimal_phase_is_increasing_and_periodic(m in element(), tau in -10.0f64..10.0, h in 1e-3f64..1.0) {
        let omega = 1.0;
        let r = minimal_phase(&m, omega).unwrap();
        let period = 2.0 * PI / omega;
        let v = r.value(tau).unwrap();
        prop_assert!(r.value(tau + h).unwrap() > v);
        prop_assert!((r.value(tau + period).unwrap() - v - period).abs() < 1e-9 * (1.0 + v.abs()));
        prop_assert!(minimal_t_squared(&m, omega, tau) > 0.0);
        prop_assert!(r.derivative(tau, 1).unwrap() > 0.0);
    }

    #[test]
    fn tan_map_inverse_round_trips(m in element(), tau in -20.0f64..20.0) {
        let map = TanMoebius::new(m, 1.0);
        let back = map.inverse().value(map.value(tau));
        prop_assert!((back - tau).abs() < 1e-9 * (1.0 + tau.abs()), "{} vs {}", back, tau);
    }

    #[test]
    fn composition_keeps_the_profile(m in element(), tau in 2.0f64..12.0) {
        let traj = WallTrajectory::sinusoidal(PI, 0.02 * PI, 2, 3).unwrap();
        let r = solve_phase(&traj, 16.0, 1e-11).unwrap();
        let rc = conformal_compose(&r, &m).unwrap();
        let (p, pc) = (profile(&r, tau).unwrap(), profile(&rc, tau).unwrap());
        prop_assert!((p - pc).abs() < 1e-8 * (1.0 + p.abs()), "{} vs {}", p, pc);
    }

    #[test]
    fn fmt17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let back: f64 = fmt17(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_solution_satisfies_moore(
        law_wu in any::<bool>(),
        k in 1u32..4,
        periods in 1u32..5,
        amp in 0.001f64..0.05,
        length in 0.5f64..4.0,
    ) {
        let traj = if law_wu {
            WallTrajectory::law_wu(length, amp * length, k, periods)
        } else {
            WallTrajectory::sinusoidal(length, amp * length, k, periods)
        }
        .unwrap();
        let t_final = traj.t_motion() + 3.0 * length;
        let r = solve_phase(&traj, t_final, 1e-10 * length).unwrap();
        let (a, b) = r.residual_window(&traj, t_final);
        let res = r.max_moore_residual(&traj, a, b, 400).unwrap();
        prop_assert!(res <= 1e-10 * length, "{}", res);
    }

    #[test]
    fn photon_numbers_are_non_negative(k in 1u32..4, periods in 1u32..4, amp in 0.001f64..0.03) {
        let traj = WallTrajectory::sinusoidal(PI, amp * PI, k, periods).unwrap();
        let t = traj.t_motion() + PI;
        let r = solve_phase(&traj, t + 2.0 * PI, 1e-11).unwrap();
        let opts = SpectrumOptions { out_modes: Some(8), ..SpectrumOptions::default() };
        let spec = spectrum(&r, t, &opts).unwrap();
        prop_assert!(spec.n_k.iter().all(|&n| n >= 0.0 && n.is_finite()));
        prop_assert!(spec.n_total >= 0.0);
    }
}
