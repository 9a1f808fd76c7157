mod common;

use pradial_core::flow::{equilibrium, integrate_flow, stability, vector_field, FlowPoint};
use pradial_core::params::{
    classify, classify_by_products, classify_by_sigma, derive, validate, RawParams, RegimeTag, SystemParams,
};
use pradial_core::picard::{apply_t, GridFunctionPair};
use pradial_core::radial::{integrate, scale_solution, solution_defect, IntegrationConfig, RadialState, StopReason};
use proptest::prelude::*;

use common::away_from_boundaries;

fn raw_tuple() -> impl Strategy<Value = RawParams> {
    (2u32..=40, 1.1f64..8.0, 0.05f64..6.0, 0.05f64..10.0, 0.0f64..1.5, 0.0f64..=1.0).prop_map(
        |(n, p, m, q, a, b)| RawParams {
            n,
            p,
            m,
            q,
            alpha: a * (p - 1.0),
            beta: b * m,
        },
    )
}

/// Valid, `α < p-1`, and not within 1e-3 of a regime boundary.
fn solvable() -> impl Strategy<Value = SystemParams> {
    (2u32..=12, 1.3f64..6.0, 0.1f64..4.0, 0.1f64..8.0, 0.0f64..0.95, 0.0f64..=1.0).prop_filter_map(
        "invalid or near a boundary",
        |(n, p, m, q, a, b)| {
            validate(RawParams { n, p, m, q, alpha: a * (p - 1.0), beta: b * m })
                .ok()
                .filter(|p| away_from_boundaries(p, 1e-3))
        },
    )
}

/// `δ > 0` with growth exponents small enough for `u`, `v` to stay finite on `[0, 1e3]`.
fn positive_delta() -> impl Strategy<Value = SystemParams> {
    solvable().prop_filter("needs δ > 0 and moderate growth", |p| {
        let d = derive(p);
        p.delta() > 0.0 && d.nu_u.max(d.nu_v) < 20.0
    })
}

fn short_run() -> IntegrationConfig {
    IntegrationConfig {
        r_max: 1e3,
        ..IntegrationConfig::default()
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        max_local_rejects: 1 << 20,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn classification_forms_agree(raw in raw_tuple()) {
        if let Ok(p) = validate(raw) {
            prop_assert_eq!(classify_by_sigma(&p), classify_by_products(&p));
        }
    }

    #[test]
    fn regime_is_a_function_of_delta_sign(p in solvable()) {
        let regime = classify(&p);
        prop_assert_eq!(regime.tag == RegimeTag::AllBoundedGlobal, p.delta() > 0.0);
        prop_assert_eq!(regime.global_exists, p.delta() > 0.0);
        prop_assert_eq!(derive(&p).blowup_rate_uprime.is_some(), p.delta() < 0.0);
    }

    #[test]
    fn regime_ignores_dimension(p in solvable(), n in 2u32..200) {
        prop_assert_eq!(classify(&p.with_n(n).unwrap()), classify(&p));
    }

    #[test]
    fn equilibrium_is_stationary(p in positive_delta()) {
        let eq = equilibrium(&p).unwrap();
        let d = derive(&p);
        prop_assert!((eq.x_inf - d.nu_u).abs() <= 1e-12 * d.nu_u);
        prop_assert!((eq.y_inf - d.nu_v).abs() <= 1e-12 * d.nu_v);
        let f = vector_field(&eq.point(), &p);
        let scale = eq.y_inf * eq.z_inf * eq.w_inf;
        prop_assert!(f.iter().all(|x| x.abs() <= 1e-12 * scale), "{:?}", f);
        prop_assert!(eq.w_inf > p.nf());
        prop_assert!(eq.growth_u > 0.0 && eq.growth_v > 0.0);
    }

    #[test]
    fn equilibrium_is_hurwitz(p in positive_delta()) {
        let st = stability(&p).unwrap();
        prop_assert!(st.stable && st.char_poly.is_hurwitz());
        prop_assert!(st.eigen_real_parts.iter().all(|&re| re < 0.0));
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn solutions_increase_radially(p in solvable(), a in 0.2f64..5.0, b in 0.2f64..5.0) {
        let traj = integrate(&p, a, b, &short_run()).unwrap();
        for w in traj.samples.windows(2) {
            prop_assert!(w[1].u >= w[0].u && w[1].v >= w[0].v);
        }
        prop_assert!(traj.samples.iter().all(|s| s.uprime(&p) >= 0.0 && s.vprime(&p) >= 0.0));
    }

    #[test]
    fn larger_center_values_give_larger_solutions(p in positive_delta(), a in 0.2f64..3.0, b in 0.2f64..3.0, bump in 1.01f64..2.0) {
        let lo = integrate(&p, a, b, &short_run()).unwrap();
        let hi = integrate(&p, a * bump, b * bump, &short_run()).unwrap();
        for (x, y) in lo.samples.iter().zip(&hi.samples) {
            prop_assert_eq!(x.r, y.r);
            prop_assert!(x.u < y.u && x.v < y.v);
        }
    }

    #[test]
    fn rescaled_solutions_solve_the_system(p in positive_delta(), lambda in 0.1f64..10.0) {
        let traj = integrate(&p, 1.0, 1.0, &short_run()).unwrap();
        let tail: Vec<RadialState> = traj.samples.iter().filter(|s| s.r >= 1e-3).copied().collect();
        prop_assert!(solution_defect(&p, &tail, 1e-10).unwrap() < 1e-6);
        let scaled = scale_solution(&traj, lambda);
        let tail: Vec<RadialState> = scaled.samples.iter().filter(|s| s.r >= 1e-3 * lambda).copied().collect();
        prop_assert!(solution_defect(&p, &tail, 1e-10).unwrap() < 1e-6);
    }

    #[test]
    fn picard_iterates_increase(p in solvable(), a in 0.2f64..3.0, b in 0.2f64..3.0) {
        let mut pair = GridFunctionPair::constant(0.05, 128, a, b);
        for _ in 0..6 {
            let next = apply_t(&pair, &p, a, b).unwrap();
            for i in 0..pair.len() {
                prop_assert!(next.u_vals[i] >= pair.u_vals[i] * (1.0 - 1e-14));
                prop_assert!(next.v_vals[i] >= pair.v_vals[i] * (1.0 - 1e-14));
                prop_assert!(next.u_prime_vals[i] >= pair.u_prime_vals[i] - 1e-14);
            }
            pair = next;
        }
    }

    #[test]
    fn flow_stays_in_the_octant(p in positive_delta(), y in 0.01f64..20.0, z in 0.01f64..20.0, w in 0.01f64..20.0) {
        let tr = integrate_flow(&FlowPoint::new(y, z, w), &p, 20.0, 1e-6).unwrap();
        prop_assert!(tr.points.iter().all(|q| q.y > 0.0 && q.z > 0.0 && q.w > 0.0));
    }
}

#[test]
fn blowup_regimes_stop_with_blowup() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for tag in [RegimeTag::UFiniteVBlowup, RegimeTag::BothBlowup] {
        for _ in 0..20 {
            let p = common::random_in_regime(&mut rng, tag, 1e-3);
            let traj = integrate(&p, 1.0, 1.0, &IntegrationConfig::default()).unwrap_or_else(|e| panic!("{:?}: {e}", p.raw()));
            assert_eq!(traj.stop, StopReason::BlowUp, "{:?}", p.raw());
        }
    }
}
