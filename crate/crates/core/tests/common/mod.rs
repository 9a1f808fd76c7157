#![allow(dead_code)]

use pradial_core::params::{derive, RawParams, RegimeTag, SystemParams};
use rand::Rng;

/// Valid tuple with `α < p-1`, away from the degeneracy band and from
/// the regime boundaries (relative gap `gap`).
pub fn random_params<R: Rng>(rng: &mut R, gap: f64) -> SystemParams {
    loop {
        let p = rng.random_range(1.3..6.0);
        let m = rng.random_range(0.1..4.0);
        let raw = RawParams {
            n: rng.random_range(2..=12),
            p,
            m,
            q: rng.random_range(0.1..8.0),
            alpha: rng.random_range(0.0..0.95 * (p - 1.0)),
            beta: rng.random_range(0.0..=m),
        };
        let Ok(params) = pradial_core::params::validate(raw) else {
            continue;
        };
        if away_from_boundaries(&params, gap) {
            return params;
        }
    }
}

pub fn away_from_boundaries(params: &SystemParams, gap: f64) -> bool {
    let (p, m, q, alpha, beta) = (params.p(), params.m(), params.q(), params.alpha(), params.beta());
    let k = params.k();
    let mq = m * q;
    let lower = k * (p - 1.0 - beta);
    let upper = m * p + (p - alpha) * (p - 1.0 - beta);
    (mq - lower).abs() > gap * mq.max(lower) && (mq - upper).abs() > gap * mq.max(upper) && !derive(params).near_critical_sigma
}

/// Random tuple in the requested regime.
pub fn random_in_regime<R: Rng>(rng: &mut R, tag: RegimeTag, gap: f64) -> SystemParams {
    loop {
        let params = random_params(rng, gap);
        if derive(&params).regime == tag {
            return params;
        }
    }
}

pub fn random_positive_delta<R: Rng>(rng: &mut R) -> SystemParams {
    random_in_regime(rng, RegimeTag::AllBoundedGlobal, 1e-3)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
