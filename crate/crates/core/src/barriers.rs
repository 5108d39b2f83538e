//! Explicit self-similar comparison barriers.
//!
//! The supersolution has the separated form
//!
//! ```text
//!     W(t, x) = (T − t)^α f(|x| (T − t)^β),   f(y) = (a + b y^θ)^{−γ},
//! ```
//!
//! and vanishes identically at the horizon `t = T`. Its residual under
//! `L u = ∂t u − Δp u + |∇u|^q` factorizes off the origin as
//!
//! ```text
//!     L W = (T − t)^{α−1} (a + b y^θ)^{−γ−1} (H₁ + H₂)(y),
//! ```
//!
//! so a sign certificate for `H₁ + H₂` certifies the supersolution property
//! pointwise. `feasible_super_params` solves the sufficient parameter
//! conditions under which `(H₁ + H₂)(y) ≥ 0` for all `y > 0`.
//!
//! The subsolution `w(t, x) = (T − t)^{1/(1−q)} (a + b |x|^θ)^{−γ}` is
//! positive up to its horizon and is used for comparison from below. No
//! closed-form parameter conditions are available for it, so
//! `feasible_sub_params` discovers admissible `(a, b)` by search and
//! attaches a scan certificate.

use crate::error::{Error, Result};
use crate::exponents::Exponents;

/// Side of the comparison a barrier is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    Super,
    Sub,
}

/// Parameters of a self-similar barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub kind: BarrierKind,
    pub a: f64,
    pub b: f64,
    /// Matching radius of the feasibility construction (supersolutions only);
    /// tied to the amplitude by `a = λ b y₀^θ`.
    pub y0: Option<f64>,
    /// Lifetime T of the barrier.
    pub horizon: f64,
    pub exps: Exponents,
}

impl BarrierParams {
    /// Same barrier with a different lifetime. The profile parameters stay
    /// valid for any `T > 0`.
    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        self.horizon = horizon;
        Ok(self)
    }
}

/// The two parts of the factorized supersolution residual at a point of the
/// similarity variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualDecomposition {
    pub h1: f64,
    pub h2: f64,
    pub y: f64,
}

impl ResidualDecomposition {
    pub fn total(&self) -> f64 {
        self.h1 + self.h2
    }
}

/// Profile `f(y) = (a + b y^θ)^{−γ}` of the supersolution.
pub fn super_profile(params: &BarrierParams, y: f64) -> f64 {
    debug_assert_eq!(params.kind, BarrierKind::Super);
    let e = &params.exps;
    (params.a + params.b * y.powf(e.theta)).powf(-e.gamma)
}

/// Supersolution value `W(t, x) = (T − t)^α f(|x| (T − t)^β)`.
pub fn super_value(params: &BarrierParams, t: f64, r: f64) -> Result<f64> {
    debug_assert_eq!(params.kind, BarrierKind::Super);
    let horizon = params.horizon;
    if !(0.0..horizon).contains(&t) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    let e = &params.exps;
    let tau = horizon - t;
    let y = r * tau.powf(e.beta);
    Ok(tau.powf(e.alpha) * super_profile(params, y))
}

/// Time derivative `∂t W` in closed form; used by consistency oracles.
pub fn super_time_derivative(params: &BarrierParams, t: f64, r: f64) -> Result<f64> {
    debug_assert_eq!(params.kind, BarrierKind::Super);
    let horizon = params.horizon;
    if !(0.0..horizon).contains(&t) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    let e = &params.exps;
    let tau = horizon - t;
    let y = r * tau.powf(e.beta);
    let u = params.a + params.b * y.powf(e.theta);
    // ∂t W = (T−t)^{α−1} u^{−γ−1} [ −αa + (βγθ − α) b y^θ ].
    let bracket =
        -e.alpha * params.a + (e.beta * e.gamma * e.theta - e.alpha) * params.b * y.powf(e.theta);
    Ok(tau.powf(e.alpha - 1.0) * u.powf(-e.gamma - 1.0) * bracket)
}

/// Factorized residual parts `H₁(y)` and `H₂(y)` of the supersolution.
///
/// ```text
///   H₁(y) = −αa + (γbθ)^{p−1} [N − p(γ+1) bθy^θ/(a+by^θ)] (a+by^θ)^{(γ+1)(2−p)}
///   H₂(y) = (γbθ)^q y^{q(θ−1)} (a+by^θ)^{(1−q)(γ+1)} + (βγθ − α) b y^θ
/// ```
pub fn residual_h1h2(params: &BarrierParams, y: f64) -> ResidualDecomposition {
    debug_assert_eq!(params.kind, BarrierKind::Super);
    debug_assert!(y > 0.0);
    let e = &params.exps;
    let (p, q) = (e.triple.p, e.triple.q);
    let n = e.triple.dim as f64;
    let (a, b) = (params.a, params.b);
    let by_theta = b * y.powf(e.theta);
    let u = a + by_theta;
    let gbt = e.gamma * b * e.theta;
    let h1 = -e.alpha * a
        + gbt.powf(p - 1.0)
            * (n - p * (e.gamma + 1.0) * by_theta / u)
            * u.powf((e.gamma + 1.0) * (2.0 - p));
    let h2 = gbt.powf(q) * y.powf(q * (e.theta - 1.0)) * u.powf((1.0 - q) * (e.gamma + 1.0))
        + (e.beta * e.gamma * e.theta - e.alpha) * by_theta;
    ResidualDecomposition { h1, h2, y }
}

/// Closed-form residual `L W(t, r)` of the supersolution, off the origin.
pub fn residual_operator(params: &BarrierParams, t: f64, r: f64) -> Result<f64> {
    debug_assert_eq!(params.kind, BarrierKind::Super);
    let horizon = params.horizon;
    if r <= 0.0 {
        return Err(Error::OriginExcluded);
    }
    if !(t > 0.0 && t < horizon) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    let e = &params.exps;
    let tau = horizon - t;
    let y = r * tau.powf(e.beta);
    let u = params.a + params.b * y.powf(e.theta);
    let d = residual_h1h2(params, y);
    Ok(tau.powf(e.alpha - 1.0) * u.powf(-e.gamma - 1.0) * d.total())
}

/// Subsolution value `w(t, x) = (T − t)^{1/(1−q)} (a + b |x|^θ)^{−γ}`.
pub fn sub_value(params: &BarrierParams, t: f64, r: f64) -> Result<f64> {
    debug_assert_eq!(params.kind, BarrierKind::Sub);
    let horizon = params.horizon;
    if !(0.0..horizon).contains(&t) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    let e = &params.exps;
    let q = e.triple.q;
    let g = (params.a + params.b * r.powf(e.theta)).powf(-e.gamma);
    Ok((horizon - t).powf(1.0 / (1.0 - q)) * g)
}

/// Closed-form residual `L w(t, r)` of the subsolution, off the origin.
///
/// Assembled from the radial derivatives of `g(r) = (a + b r^θ)^{−γ}`:
/// `∂t w = −(T−t)^{q/(1−q)} g/(1−q)`,
/// `Δp w = (T−t)^{(p−1)/(1−q)} [(p−1)|g'|^{p−2} g'' + (N−1)|g'|^{p−2} g'/r]`,
/// `|∇w|^q = (T−t)^{q/(1−q)} |g'|^q`.
pub fn sub_residual(params: &BarrierParams, t: f64, r: f64) -> Result<f64> {
    debug_assert_eq!(params.kind, BarrierKind::Sub);
    let horizon = params.horizon;
    if r <= 0.0 {
        return Err(Error::OriginExcluded);
    }
    if !(t > 0.0 && t < horizon) {
        return Err(Error::TimeOutOfRange { t, horizon });
    }
    let e = &params.exps;
    let (p, q) = (e.triple.p, e.triple.q);
    let n = e.triple.dim as f64;
    let (a, b) = (params.a, params.b);
    let tau = horizon - t;
    let u = a + b * r.powf(e.theta);
    let g = u.powf(-e.gamma);
    let gbt = e.gamma * b * e.theta;
    // g'(r) = −γbθ r^{θ−1} u^{−γ−1}
    let gp = -gbt * r.powf(e.theta - 1.0) * u.powf(-e.gamma - 1.0);
    // g''(r) = −γbθ u^{−γ−1} r^{θ−2} [θ−1 − θ(γ+1) b r^θ / u]
    let gpp = -gbt
        * u.powf(-e.gamma - 1.0)
        * r.powf(e.theta - 2.0)
        * (e.theta - 1.0 - e.theta * (e.gamma + 1.0) * b * r.powf(e.theta) / u);
    let dt_part = -tau.powf(q / (1.0 - q)) * g / (1.0 - q);
    let diff_part = tau.powf((p - 1.0) / (1.0 - q))
        * ((p - 1.0) * gp.abs().powf(p - 2.0) * gpp + (n - 1.0) * gp.abs().powf(p - 2.0) * gp / r);
    let abs_part = tau.powf(q / (1.0 - q)) * gp.abs().powf(q);
    Ok(dt_part - diff_part + abs_part)
}

/// Log-spaced scan certificate for the supersolution residual parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperScanCertificate {
    /// Minimum of `(H₁ + H₂)(y)` over the scan; nonnegative certifies the
    /// supersolution sign off the origin.
    pub min_total: f64,
    pub argmin_y: f64,
    pub points: usize,
}

fn log_spaced(lo: f64, hi: f64, k: usize, n: usize) -> f64 {
    let f = k as f64 / (n - 1) as f64;
    lo * (hi / lo).powf(f)
}

/// Scans `(H₁ + H₂)(y)` over a log-spaced grid of the similarity variable.
pub fn scan_super_residual(
    params: &BarrierParams,
    y_min: f64,
    y_max: f64,
    points: usize,
) -> SuperScanCertificate {
    assert!(points >= 2 && y_min > 0.0 && y_max > y_min);
    let mut min_total = f64::INFINITY;
    let mut argmin_y = y_min;
    for k in 0..points {
        let y = log_spaced(y_min, y_max, k, points);
        let tot = residual_h1h2(params, y).total();
        if tot < min_total {
            min_total = tot;
            argmin_y = y;
        }
    }
    SuperScanCertificate {
        min_total,
        argmin_y,
        points,
    }
}

/// Scan certificate for the subsolution residual over a `(t, r)` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubScanCertificate {
    /// Maximum residual over the scan; nonpositive certifies the
    /// subsolution sign off the origin.
    pub max_residual: f64,
    pub argmax: (f64, f64),
    pub points: usize,
}

/// Scans the subsolution residual over log-spaced
/// `t ∈ [T/100, 99T/100] × r ∈ [r_min, r_max]`.
pub fn scan_sub_residual(
    params: &BarrierParams,
    r_min: f64,
    r_max: f64,
    nt: usize,
    nr: usize,
) -> SubScanCertificate {
    assert!(nt >= 2 && nr >= 2 && r_min > 0.0 && r_max > r_min);
    let horizon = params.horizon;
    let (t_lo, t_hi) = (horizon / 100.0, horizon * 0.99);
    let mut max_residual = f64::NEG_INFINITY;
    let mut argmax = (t_lo, r_min);
    for i in 0..nt {
        let t = log_spaced(t_lo, t_hi, i, nt);
        for j in 0..nr {
            let r = log_spaced(r_min, r_max, j, nr);
            let res = sub_residual(params, t, r).expect("scan point inside domain");
            if res > max_residual {
                max_residual = res;
                argmax = (t, r);
            }
        }
    }
    SubScanCertificate {
        max_residual,
        argmax,
        points: nt * nr,
    }
}

/// Solves the sufficient feasibility conditions for the supersolution.
///
/// With `λ = 2p(γ+1)/N` fixed, the construction needs
/// `b^{(1−q)γ} ≥ max{2/((1−q)(γθ)^q), 4λα/(γθ)^q}` together with a
/// nonempty interval for `y₀^{(p−2q)/(1−q)}`,
///
/// ```text
///     4L(1+λ)^{(2−p)(γ+1)}/(γθ)^q · b^{(q−p+1)γ}
///         ≤ y₀^{(p−2q)/(1−q)} ≤
///     N(γθ)^{p−1} λ^{γ(2−p)−p+1}/(2α) · b^{γ(2−p)},
/// ```
///
/// whose endpoint ratio grows like `b^{(1−q)γ}`, so doubling `b` always
/// opens it. `y₀` is placed at the geometric mean of the endpoints (maximal
/// symmetric slack on a log scale) and the amplitude is tied by
/// `a = λ b y₀^θ`. The returned parameters carry the default horizon 1;
/// the profile is a valid supersolution for any horizon.
pub fn feasible_super_params(exps: &Exponents, margin: f64) -> BarrierParams {
    assert!(margin > 1.0, "interval slack must exceed 1, got {margin}");
    let e = exps;
    let (p, q) = (e.triple.p, e.triple.q);
    let n = e.triple.dim as f64;
    let gt = e.gamma * e.theta;
    let gtq = gt.powf(q);
    let exp_b = (1.0 - q) * e.gamma;

    let floor = (2.0 / ((1.0 - q) * gtq)).max(4.0 * e.lambda * e.alpha / gtq);
    let mut b = floor.powf(1.0 / exp_b);

    let lo_coeff = 4.0 * e.big_l * (1.0 + e.lambda).powf((2.0 - p) * (e.gamma + 1.0)) / gtq;
    let hi_coeff =
        n * gt.powf(p - 1.0) * e.lambda.powf(e.gamma * (2.0 - p) - p + 1.0) / (2.0 * e.alpha);

    let mut lo = lo_coeff * b.powf((q - p + 1.0) * e.gamma);
    let mut hi = hi_coeff * b.powf(e.gamma * (2.0 - p));
    let mut iter = 0usize;
    while hi < margin * lo {
        b *= 2.0;
        lo = lo_coeff * b.powf((q - p + 1.0) * e.gamma);
        hi = hi_coeff * b.powf(e.gamma * (2.0 - p));
        iter += 1;
        assert!(iter < 4096, "feasibility interval failed to open");
    }

    let s = (lo * hi).sqrt(); // y0^{(p-2q)/(1-q)}
    let y0 = s.powf((1.0 - q) / (p - 2.0 * q));
    let a = e.lambda * b * y0.powf(e.theta);
    let params = BarrierParams {
        kind: BarrierKind::Super,
        a,
        b,
        y0: Some(y0),
        horizon: 1.0,
        exps: *exps,
    };
    debug_assert!(
        scan_super_residual(&params, 1e-6, 1e6, 2048).min_total >= 0.0,
        "feasible parameters fail the residual scan"
    );
    params
}

/// Worst signed margin of `W(0, ·) ≥ c₀ (1 + r)^{−q/(1−q)}` over a
/// log-spaced radial grid (plus the origin). Nonnegative means the
/// supersolution dominates the critical tail with constant `c₀`.
pub fn dominates_optimal_tail(params: &BarrierParams, c0: f64, r_max: f64, points: usize) -> f64 {
    let e = &params.exps;
    let sigma = e.sigma_opt;
    let mut worst = super_value(params, 0.0, 0.0).unwrap() - c0;
    for k in 0..points {
        let r = log_spaced(1e-6, r_max, k, points);
        let w = super_value(params, 0.0, r).unwrap();
        let target = c0 * (1.0 + r).powf(-sigma);
        worst = worst.min(w - target);
    }
    worst
}

/// Enlarges the horizon of a feasible supersolution until it dominates
/// every initial datum bounded by `c₀ (1 + |x|)^{−q/(1−q)}`.
///
/// The horizon is the smallest power of two satisfying both
/// `a/(b T^{βθ}) < 1` and `T^{1/(1−q)} b^{−γ} ≥ c₀`; the first condition
/// controls the profile knee, the second the amplitude. For `q ≤ p − 1`
/// the first condition does not improve with `T`, and the search reports
/// failure instead of looping.
pub fn dominating_supersolution(c0: f64, base: &BarrierParams) -> Result<BarrierParams> {
    if base.kind != BarrierKind::Super {
        return Err(Error::InvalidParameter(
            "domination requires supersolution parameters".into(),
        ));
    }
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tail constant must be positive and finite, got {c0}"
        )));
    }
    let e = &base.exps;
    let q = e.triple.q;
    let bt = e.beta * e.theta;
    let mut horizon = 1.0f64;
    for _ in 0..=180 {
        let knee_ok = base.a / (base.b * horizon.powf(bt)) < 1.0;
        let amp_ok = horizon.powf(1.0 / (1.0 - q)) * base.b.powf(-e.gamma) >= c0;
        if knee_ok && amp_ok {
            let out = base.with_horizon(horizon)?;
            debug_assert!(dominates_optimal_tail(&out, c0, 1e4, 512) >= 0.0);
            return Ok(out);
        }
        if bt <= 0.0 && !knee_ok {
            return Err(Error::DominationUnattainable(format!(
                "a/(b T^(beta*theta)) = {} does not decrease with T when q <= p-1",
                base.a / (base.b * horizon.powf(bt))
            )));
        }
        horizon *= 2.0;
    }
    Err(Error::DominationUnattainable(
        "horizon search exceeded 2^180".into(),
    ))
}

/// Discovers subsolution parameters `(a, b)` at a given horizon by search:
/// `b` decreases geometrically from 1 (the profile tail must be shallow
/// enough that absorption loses to the time derivative) and `a` increases
/// geometrically from 1 (a deep amplitude suppresses the diffusion hump).
/// Success is certified by a nonpositive residual scan over
/// `t ∈ [T/100, 99T/100], r ∈ [1e−4, 1e6]`.
pub fn feasible_sub_params(
    exps: &Exponents,
    horizon: f64,
    max_scans: usize,
) -> Result<(BarrierParams, SubScanCertificate)> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive and finite, got {horizon}"
        )));
    }
    let e = exps;
    let q = e.triple.q;
    let gtq = (e.gamma * e.theta).powf(q);
    let exp_b = (1.0 - q) * e.gamma;

    let mut best: Option<(f64, f64, f64)> = None;
    let mut scans = 0usize;
    let mut b = 1.0f64;
    for _ in 0..48 {
        // Absorption stays below half the time-derivative term for this b.
        if (1.0 - q) * gtq * b.powf(exp_b) <= 0.5 {
            let mut a = 1.0f64;
            for _ in 0..96 {
                if scans >= max_scans {
                    break;
                }
                let params = BarrierParams {
                    kind: BarrierKind::Sub,
                    a,
                    b,
                    y0: None,
                    horizon,
                    exps: *exps,
                };
                let cert = scan_sub_residual(&params, 1e-4, 1e6, 48, 160);
                scans += 1;
                if cert.max_residual <= 0.0 {
                    return Ok((params, cert));
                }
                match best {
                    Some((_, _, v)) if v <= cert.max_residual => {}
                    _ => best = Some((a, b, cert.max_residual)),
                }
                a *= 2.0;
            }
        }
        if scans >= max_scans {
            break;
        }
        b *= 0.5;
    }
    let (a, b, max_residual) = best.unwrap_or((1.0, 1.0, f64::INFINITY));
    Err(Error::SubSearchExhausted { a, b, max_residual })
}
