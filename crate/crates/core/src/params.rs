//! System parameters, closed-form constants and the exact regime classifier.
//!
//! The system is `Δp u = v^m |∇u|^α`, `Δp v = v^β |∇u|^q` in `R^N`. Every
//! quantity here is a closed-form function of the exponent tuple.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around the strict dichotomies inside which
/// inputs are rejected as near-degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Unvalidated exponent tuple, as read from a config file or the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub n: u32,
    pub p: f64,
    pub m: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// A validated exponent tuple `(N, p, m, q, α, β)`.
///
/// Construct through [`SystemParams::new`] or [`validate`]; the fields are
/// read-only so the standing hypotheses hold for every value of this type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    n: u32,
    p: f64,
    m: f64,
    q: f64,
    alpha: f64,
    beta: f64,
}

impl SystemParams {
    pub fn new(n: u32, p: f64, m: f64, q: f64, alpha: f64, beta: f64) -> Result<Self> {
        validate(RawParams {
            n,
            p,
            m,
            q,
            alpha,
            beta,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    /// Dimension as a float, for use in formulas.
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            n: self.n,
            p: self.p,
            m: self.m,
            q: self.q,
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    /// `p - 1 - α`, the exponent of `z = (u')^{p-1-α}`.
    pub fn k(&self) -> f64 {
        self.p - 1.0 - self.alpha
    }

    pub fn delta(&self) -> f64 {
        delta_of(self.p, self.m, self.q, self.alpha, self.beta)
    }

    /// `α < p-1`; all constructive machinery requires it.
    pub fn alpha_below_threshold(&self) -> bool {
        self.alpha < self.p - 1.0
    }

    pub fn with_n(&self, n: u32) -> Result<Self> {
        Self::new(n, self.p, self.m, self.q, self.alpha, self.beta)
    }
}

fn delta_of(p: f64, m: f64, q: f64, alpha: f64, beta: f64) -> f64 {
    (p - 1.0 - alpha) * (p - 1.0 - beta) - q * m
}

pub(crate) fn delta_in_band(p: f64, m: f64, q: f64, alpha: f64, beta: f64) -> bool {
    let prod = (p - 1.0 - alpha) * (p - 1.0 - beta);
    (prod - q * m).abs() <= DEGENERACY_TOL * prod.abs().max(q * m)
}

/// Checks the standing hypotheses and returns a [`SystemParams`].
///
/// `β > m` and the other inequality failures are reported as
/// [`Error::DomainViolation`] naming the inequality; `δ = 0` as
/// [`Error::DeltaZero`]; `0 < |δ|` inside the tolerance band, and `α` within
/// the band just below `p - 1`, as [`Error::NearDegenerate`].
pub fn validate(raw: RawParams) -> Result<SystemParams> {
    let RawParams {
        n,
        p,
        m,
        q,
        alpha,
        beta,
    } = raw;
    for (name, x) in [("p", p), ("m", m), ("q", q), ("alpha", alpha), ("beta", beta)] {
        if !x.is_finite() {
            return Err(Error::DomainViolation(format!("{name} must be finite")));
        }
    }
    if n < 2 {
        return Err(Error::DomainViolation("N >= 2".into()));
    }
    if p <= 1.0 {
        return Err(Error::DomainViolation("p > 1".into()));
    }
    if m <= 0.0 {
        return Err(Error::DomainViolation("m > 0".into()));
    }
    if q <= 0.0 {
        return Err(Error::DomainViolation("q > 0".into()));
    }
    if alpha < 0.0 {
        return Err(Error::DomainViolation("alpha >= 0".into()));
    }
    if beta < 0.0 || beta > m {
        return Err(Error::DomainViolation("0 <= beta <= m".into()));
    }

    let delta = delta_of(p, m, q, alpha, beta);
    if delta == 0.0 {
        return Err(Error::DeltaZero);
    }
    if delta_in_band(p, m, q, alpha, beta) {
        return Err(Error::NearDegenerate(format!(
            "|delta| = {:e} is within the tolerance band",
            delta.abs()
        )));
    }
    let k = p - 1.0 - alpha;
    if k > 0.0 && k <= DEGENERACY_TOL * (p - 1.0) {
        return Err(Error::NearDegenerate(format!(
            "alpha = {alpha} is within the tolerance band below p-1"
        )));
    }

    Ok(SystemParams {
        n,
        p,
        m,
        q,
        alpha,
        beta,
    })
}

/// Regime tags of the classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    InvalidDelta,
    NoNonconstantSolutions,
    AllBoundedGlobal,
    UFiniteVBlowup,
    BothBlowup,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::InvalidDelta => "InvalidDelta",
            RegimeTag::NoNonconstantSolutions => "NoNonconstantSolutions",
            RegimeTag::AllBoundedGlobal => "AllBoundedGlobal",
            RegimeTag::UFiniteVBlowup => "UFiniteVBlowup",
            RegimeTag::BothBlowup => "BothBlowup",
        }
    }

    pub fn is_blowup(&self) -> bool {
        matches!(self, RegimeTag::UFiniteVBlowup | RegimeTag::BothBlowup)
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub global_exists: bool,
}

impl Regime {
    pub fn from_tag(tag: RegimeTag) -> Self {
        Regime {
            tag,
            global_exists: tag == RegimeTag::AllBoundedGlobal,
        }
    }
}

/// Closed-form constants attached to a parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub delta: f64,
    pub gamma: f64,
    /// Undefined (and `degenerate` set) when `α >= p - 1`.
    pub sigma: Option<f64>,
    pub nu_u: f64,
    pub nu_v: f64,
    /// Exponent of `u'` near a blow-up radius; present iff `σ > 1`.
    pub blowup_rate_uprime: Option<f64>,
    pub degenerate: bool,
    /// `|σ - 1| < 1e-9`.
    pub near_critical_sigma: bool,
    pub regime: RegimeTag,
}

pub fn derive(params: &SystemParams) -> DerivedConstants {
    let SystemParams {
        n,
        p,
        m,
        q,
        alpha,
        beta,
    } = *params;
    let nf = f64::from(n);
    let k = p - 1.0 - alpha;
    let delta = params.delta();
    let gamma = (nf - 1.0) * k / (p - 1.0);
    let degenerate = !params.alpha_below_threshold();
    let sigma = (!degenerate).then(|| sigma_of(params));
    let blowup_rate_uprime = sigma
        .filter(|&s| s > 1.0)
        .map(|s| -1.0 / ((s - 1.0) * k));
    DerivedConstants {
        delta,
        gamma,
        sigma,
        nu_u: 1.0 + (p * (m + 1.0) - (1.0 + beta)) / delta,
        nu_v: (p * k + q) / delta,
        blowup_rate_uprime,
        degenerate,
        near_critical_sigma: sigma.is_some_and(|s| (s - 1.0).abs() < 1e-9),
        regime: classify(params).tag,
    }
}

fn sigma_of(params: &SystemParams) -> f64 {
    let (p, m, q, beta) = (params.p, params.m, params.q, params.beta);
    let k = params.k();
    (m / k) * (q + p * k) / (m * p + p - 1.0 - beta)
}

/// Classification through the product inequalities `mq` vs
/// `(p-1-α)(p-1-β)` and `mq` vs `mp + (p-α)(p-1-β)`.
///
/// The upper boundary `mq = mp + (p-α)(p-1-β)` (to within the tolerance
/// band) belongs to [`RegimeTag::BothBlowup`].
pub fn classify_by_products(params: &SystemParams) -> RegimeTag {
    if !params.alpha_below_threshold() {
        return RegimeTag::NoNonconstantSolutions;
    }
    let (p, m, q, alpha, beta) = (params.p, params.m, params.q, params.alpha, params.beta);
    let mq = m * q;
    let lower = (p - 1.0 - alpha) * (p - 1.0 - beta);
    if mq < lower {
        return RegimeTag::AllBoundedGlobal;
    }
    let upper = m * p + (p - alpha) * (p - 1.0 - beta);
    if mq - upper > DEGENERACY_TOL * mq.max(upper.abs()) {
        RegimeTag::UFiniteVBlowup
    } else {
        RegimeTag::BothBlowup
    }
}

/// Classification through `σ` against `1` and `(p-α)/(p-1-α)`.
pub fn classify_by_sigma(params: &SystemParams) -> RegimeTag {
    if !params.alpha_below_threshold() {
        return RegimeTag::NoNonconstantSolutions;
    }
    let sigma = sigma_of(params);
    if sigma < 1.0 {
        return RegimeTag::AllBoundedGlobal;
    }
    let threshold = (params.p - params.alpha) / params.k();
    if sigma - threshold > DEGENERACY_TOL * threshold {
        RegimeTag::UFiniteVBlowup
    } else {
        RegimeTag::BothBlowup
    }
}

pub fn classify(params: &SystemParams) -> Regime {
    let tag = classify_by_products(params);
    debug_assert_eq!(tag, classify_by_sigma(params), "classification forms disagree");
    Regime::from_tag(tag)
}

/// Classification of an unvalidated tuple: a vanishing `δ` maps to
/// [`RegimeTag::InvalidDelta`] instead of an error.
pub fn classify_raw(raw: RawParams) -> Result<Regime> {
    match validate(raw) {
        Ok(params) => Ok(classify(&params)),
        Err(Error::DeltaZero) => Ok(Regime::from_tag(RegimeTag::InvalidDelta)),
        Err(Error::NearDegenerate(_)) if delta_in_band(raw.p, raw.m, raw.q, raw.alpha, raw.beta) => {
            Ok(Regime::from_tag(RegimeTag::InvalidDelta))
        }
        Err(e) => Err(e),
    }
}
