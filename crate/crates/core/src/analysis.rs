//! Post-processing: norms, extinction-rate fitting, the functional
//! inequality machinery behind the rate bounds, and empirical smoothing
//! diagnostics on simulated data.
//!
//! The rate fit never trusts the threshold-crossing time alone: crossing
//! `‖u‖∞ < tol` underestimates the extinction time by `O(tol^{1/α})` and
//! contaminates the slope, so `(t_e, slope)` are estimated jointly by
//! least squares of `log norm` against `log(t_e − t)`.

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::solver::{self, RadialField, RunRecord};

/// One sample of the norm time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEntry {
    pub t: f64,
    pub linf: f64,
    pub l1: f64,
    /// Lipschitz seminorm: max face difference quotient.
    pub lip: f64,
}

/// Time series of L∞, L¹ and Lipschitz norms of a simulated solution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormSeries {
    pub entries: Vec<NormEntry>,
}

impl NormSeries {
    /// Checks the structural invariants: strictly increasing times,
    /// nonnegative norms.
    pub fn validate(&self) -> Result<()> {
        for w in self.entries.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::InvalidParameter(format!(
                    "series times not strictly increasing at t = {}",
                    w[1].t
                )));
            }
        }
        for e in &self.entries {
            if e.linf < 0.0 || e.l1 < 0.0 || e.lip < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative norm at t = {}",
                    e.t
                )));
            }
        }
        Ok(())
    }

    /// `(t, ‖u‖∞)` samples thinned to at most `cap` points (last kept).
    pub fn linf_samples(&self, cap: usize) -> Vec<(f64, f64)> {
        thin(&self.entries, cap)
            .into_iter()
            .map(|e| (e.t, e.linf))
            .collect()
    }
}

fn thin(entries: &[NormEntry], cap: usize) -> Vec<NormEntry> {
    if entries.len() <= cap || cap == 0 {
        return entries.to_vec();
    }
    let stride = entries.len().div_ceil(cap);
    let mut out: Vec<NormEntry> = entries.iter().copied().step_by(stride).collect();
    if out.last().map(|e| e.t) != entries.last().map(|e| e.t) {
        out.push(*entries.last().unwrap());
    }
    out
}

/// Sup, weighted L¹ (trapezoid against `ω_{N−1} r^{N−1} dr`) and Lipschitz
/// seminorm of a radial field.
pub fn norms(u: &RadialField) -> (f64, f64, f64) {
    let weights = u.grid.quadrature_weights();
    solver::basic_norms(u, &weights)
}

/// Estimated extinction time, fitted power-law exponent, fit quality,
/// window, and the theoretical exponent compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub t_e: f64,
    pub exponent: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub target: f64,
}

/// Power-law fit without a theoretical target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub t_e: f64,
    pub exponent: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Samples with norm below this are dropped (discretization floor).
    pub floor: f64,
    /// Width of the fit window in decades of `t_e − t`, counted back from
    /// the last resolved sample.
    pub decades: f64,
    /// Raw extinction-time estimate (threshold crossing); defaults to one
    /// sample spacing past the last kept point.
    pub t_e_hint: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            floor: 0.0,
            decades: 2.0,
            t_e_hint: None,
        }
    }
}

fn linear_fit_sse(pts: &[(f64, f64)], t_e: f64) -> (f64, f64, f64) {
    // Least squares of y = ln h against x = ln(t_e − t).
    let n = pts.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (t, h) in pts {
        sx += (t_e - t).ln();
        sy += h.ln();
    }
    let (mx, my) = (sx / n, sy / n);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (t, h) in pts {
        let dx = (t_e - t).ln() - mx;
        let dy = h.ln() - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let sse = (syy - slope * sxy).max(0.0);
    (sse, slope, syy)
}

/// Joint `(t_e, slope)` fit of a vanishing power law `h(t) ≈ C (t_e − t)^s`.
///
/// The window and the search bracket are anchored at the current extinction
/// estimate, which starts from the hint and is re-anchored a few times: a
/// raw threshold-crossing hint can sit well below the true `t_e` when the
/// series is cut by an unrelated stopping rule, and a single pass would
/// then window the wrong decades.
pub fn fit_power_law(samples: &[(f64, f64)], opts: &FitOptions) -> Result<PowerFit> {
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, h)| t.is_finite() && h.is_finite() && *h > opts.floor && *h > 0.0)
        .copied()
        .collect();
    if kept.len() < 8 {
        return Err(Error::InsufficientDecades {
            resolved: 0.0,
            required: opts.decades,
        });
    }
    let t_last = kept[kept.len() - 1].0;
    let t_prev = kept[kept.len() - 2].0;
    let t_first = kept[0].0;
    let mut t_e0 = opts.t_e_hint.unwrap_or(t_last + (t_last - t_prev));
    if !(t_e0 > t_last) {
        t_e0 = t_last + (t_last - t_prev).max(f64::MIN_POSITIVE);
    }

    // Resolution gate against the raw anchor, before any re-anchoring.
    let resolved = ((t_e0 - t_first) / (t_e0 - t_last)).log10();
    if resolved + 1e-6 < opts.decades {
        return Err(Error::InsufficientDecades {
            resolved,
            required: opts.decades,
        });
    }

    let mut result: Option<PowerFit> = None;
    for _ in 0..4 {
        let d_last = t_e0 - t_last;
        // Window: the last `decades` decades of t_e − t. The first sample
        // past the cut is included so the realized span never falls short
        // of the request through sampling granularity alone.
        let d_max = d_last * 10f64.powf(opts.decades) * (1.0 + 1e-12);
        let cut = kept.partition_point(|(t, _)| t_e0 - t > d_max);
        let window: Vec<(f64, f64)> = kept[cut.saturating_sub(1)..].to_vec();
        if window.len() < 8 {
            return Err(Error::InsufficientDecades {
                resolved,
                required: opts.decades,
            });
        }

        // 1-D search for t_e: coarse log grid over the offset past the
        // last sample, then golden-section refinement.
        let off_lo = d_last * 1e-6;
        let off_hi = d_last * 1e3;
        let coarse = 300usize;
        let mut best_k = 0usize;
        let mut best_sse = f64::INFINITY;
        let off_at = |k: usize, n: usize| -> f64 {
            off_lo * (off_hi / off_lo).powf(k as f64 / (n - 1) as f64)
        };
        for k in 0..coarse {
            let (sse, _, _) = linear_fit_sse(&window, t_last + off_at(k, coarse));
            if sse < best_sse {
                best_sse = sse;
                best_k = k;
            }
        }
        let mut lo = off_at(best_k.saturating_sub(1), coarse).ln();
        let mut hi = off_at((best_k + 1).min(coarse - 1), coarse).ln();
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let sse_at = |lnoff: f64| linear_fit_sse(&window, t_last + lnoff.exp()).0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = sse_at(x1);
        let mut f2 = sse_at(x2);
        for _ in 0..200 {
            if (hi - lo).abs() < 1e-14 {
                break;
            }
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = sse_at(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = sse_at(x2);
            }
        }
        let t_e = t_last + (0.5 * (lo + hi)).exp();
        let (sse, slope, syy) = linear_fit_sse(&window, t_e);
        let r2 = if syy > 0.0 {
            (1.0 - sse / syy).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let fit = PowerFit {
            t_e,
            exponent: slope,
            r2,
            window: (window[0].0, t_last),
            points: window.len(),
        };
        let converged = (t_e - t_e0).abs() <= 1e-12 * (t_e - t_last);
        result = Some(fit);
        t_e0 = t_e;
        if converged {
            break;
        }
    }
    Ok(result.expect("at least one fit iteration ran"))
}

/// Fits the L∞ rate, then the L¹ rate anchored at the L∞ extinction-time
/// estimate. The run's own threshold crossing reflects the L∞ stopping
/// rule, so the L¹ series by itself carries no usable anchor.
pub fn fit_both_rates(
    series: &NormSeries,
    exps: &Exponents,
    opts: &FitOptions,
) -> Result<(RateFit, RateFit)> {
    let linf = fit_rate(series, NormKind::Linf, exps, opts)?;
    let l1_opts = FitOptions {
        t_e_hint: Some(linf.t_e),
        ..*opts
    };
    let l1 = fit_rate(series, NormKind::L1, exps, &l1_opts)?;
    Ok((linf, l1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Linf,
    L1,
}

/// Fits the extinction rate of a norm series against its theoretical
/// exponent: `α` for L∞, `α − Nβ` for L¹. The L¹ target is only meaningful
/// for `q > p − 1` (`β > 0`), and the fit refuses to run otherwise.
pub fn fit_rate(
    series: &NormSeries,
    kind: NormKind,
    exps: &Exponents,
    opts: &FitOptions,
) -> Result<RateFit> {
    let target = match kind {
        NormKind::Linf => exps.alpha,
        NormKind::L1 => {
            if !(exps.beta > 0.0) {
                return Err(Error::InvalidParameter(
                    "the L1 rate target requires q > p - 1".into(),
                ));
            }
            exps.rate_l1()
        }
    };
    let samples: Vec<(f64, f64)> = series
        .entries
        .iter()
        .map(|e| {
            (
                e.t,
                match kind {
                    NormKind::Linf => e.linf,
                    NormKind::L1 => e.l1,
                },
            )
        })
        .collect();
    let fit = fit_power_law(&samples, opts)?;
    Ok(RateFit {
        t_e: fit.t_e,
        exponent: fit.exponent,
        r2: fit.r2,
        window: fit.window,
        target,
    })
}

/// Coefficient `(δ^{1−m}/2)^{1/(1−m)²}` of the power-law lower bound that
/// the functional inequality `δ(t−s) h(t)^m ≤ h(s)` forces on a vanishing
/// `h`. Written as `δ^{1/(1−m)} / 2^{1/(1−m)²}` so that exactly
/// representable cases stay exact.
pub fn iteration_bound_coefficient(delta: f64, m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "m must lie in (0,1), got {m}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let inv = 1.0 / (1.0 - m);
    Ok(delta.powf(inv) / 2.0f64.powf(inv * inv))
}

/// Outcome of checking the functional inequality and its power-law
/// conclusion on sampled data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLemmaCheck {
    /// `δ(t−s) h(t)^m ≤ h(s)` over all sampled pairs `0 < s < t < T`.
    pub hypothesis_ok: bool,
    /// `h(t) ≥ coeff (T−t)^{1/(1−m)}` at all samples.
    pub conclusion_ok: bool,
    pub coefficient: f64,
    /// Most negative slack of the hypothesis (positive means margin).
    pub worst_hypothesis_margin: f64,
    /// Most negative slack of the conclusion (positive means margin).
    pub worst_conclusion_margin: f64,
}

/// Verifies the dichotomy "hypothesis over all sampled pairs implies the
/// power-law lower bound" on a sampled nonnegative function vanishing at
/// `t_end`. Comparisons carry a relative slack of 1e−9 for roundoff.
pub fn verify_iteration_lemma(
    samples: &[(f64, f64)],
    t_end: f64,
    delta: f64,
    m: f64,
) -> Result<IterationLemmaCheck> {
    let coefficient = iteration_bound_coefficient(delta, m)?;
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    for w in samples.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidParameter(
                "sample times must be strictly increasing".into(),
            ));
        }
    }
    if samples.iter().any(|(_, h)| *h < 0.0 || !h.is_finite()) {
        return Err(Error::InvalidParameter(
            "samples must be finite, >= 0".into(),
        ));
    }
    let slack = 1e-9;
    let mut hypothesis_ok = true;
    let mut worst_h = f64::INFINITY;
    let inside: Vec<&(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t > 0.0 && *t < t_end)
        .collect();
    for (i, (s, hs)) in inside.iter().enumerate() {
        for (t, ht) in inside.iter().skip(i + 1) {
            let lhs = delta * (t - s) * ht.powf(m);
            let margin = hs - lhs;
            worst_h = worst_h.min(margin);
            if lhs > hs * (1.0 + slack) + f64::MIN_POSITIVE {
                hypothesis_ok = false;
            }
        }
    }
    let mut conclusion_ok = true;
    let mut worst_c = f64::INFINITY;
    for (t, h) in samples.iter().filter(|(t, _)| *t <= t_end) {
        let bound = coefficient * (t_end - t).powf(1.0 / (1.0 - m));
        let margin = h - bound;
        worst_c = worst_c.min(margin);
        if *h < bound * (1.0 - slack) - f64::MIN_POSITIVE {
            conclusion_ok = false;
        }
    }
    Ok(IterationLemmaCheck {
        hypothesis_ok,
        conclusion_ok,
        coefficient,
        worst_hypothesis_margin: worst_h,
        worst_conclusion_margin: worst_c,
    })
}

/// Empirical constant of the L∞ functional inequality on `(t, h)` samples:
/// `sup_{s<t} (t−s) h(t)^{q/(p−q)} / h(s)`. `None` when no pair exists.
pub fn functional_inequality_constant_on(samples: &[(f64, f64)], exps: &Exponents) -> Option<f64> {
    let m = exps.absorption_ratio();
    let mut sup: Option<f64> = None;
    for (i, (s, hs)) in samples.iter().enumerate() {
        if !(*hs > 0.0) {
            continue;
        }
        for (t, ht) in samples.iter().skip(i + 1) {
            let v = (t - s) * ht.powf(m) / hs;
            sup = Some(sup.map_or(v, |cur: f64| cur.max(v)));
        }
    }
    sup
}

/// Same estimator on the L∞ column of a norm series, thinned to at most
/// 1600 samples to keep the pairwise sup tractable.
pub fn functional_inequality_constant(series: &NormSeries, exps: &Exponents) -> Option<f64> {
    functional_inequality_constant_on(&series.linf_samples(1600), exps)
}

/// Empirical constants of the smoothing and gradient estimates measured on
/// a run. Suprema over empty sets are reported as absent, never as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingReport {
    /// `sup_t ‖u‖₁ / ‖u‖∞^ν`.
    pub l1_vs_linf: Option<f64>,
    /// `sup_{s<t} ‖∇u(t)‖∞ (t−s)^{1/q} / ‖u(s)‖∞^{1/q}`.
    pub grad_smoothing: Option<f64>,
    /// `sup` over late snapshots and faces of `|∇u| / u^{1/(p−q)}`.
    pub grad_vs_value: Option<f64>,
    /// `sup_t ‖u‖∞ / ‖u‖₁^{(p−q)/((N+1)(p−q)−N)}`, late times.
    pub linf_vs_l1: Option<f64>,
}

/// Measures the four empirical constants on an extinguishing run. Entries
/// with norms below `floor` are excluded (they sit under the discretization
/// floor where the continuous estimates are meaningless).
pub fn smoothing_diagnostics(rec: &RunRecord, exps: &Exponents, floor: f64) -> SmoothingReport {
    let (p, q) = (exps.triple.p, exps.triple.q);
    let te = rec
        .t_extinct
        .unwrap_or_else(|| rec.series.entries.last().map_or(0.0, |e| e.t));
    let half = te / 2.0;

    let mut l1_vs_linf: Option<f64> = None;
    for e in &rec.series.entries {
        if e.linf >= floor && e.linf > 0.0 {
            let v = e.l1 / e.linf.powf(exps.nu);
            l1_vs_linf = Some(l1_vs_linf.map_or(v, |c: f64| c.max(v)));
        }
    }

    let thin = rec.series.linf_samples(1200);
    let lips: Vec<(f64, f64, f64)> = {
        // matching (t, linf, lip) on the same thinned index set
        let entries = &rec.series.entries;
        let cap = 1200;
        let stride = if entries.len() <= cap {
            1
        } else {
            entries.len().div_ceil(cap)
        };
        entries
            .iter()
            .step_by(stride)
            .map(|e| (e.t, e.linf, e.lip))
            .collect()
    };
    let _ = thin;
    let mut grad_smoothing: Option<f64> = None;
    for (i, (s, hs, _)) in lips.iter().enumerate() {
        if !(*hs >= floor && *hs > 0.0) {
            continue;
        }
        for (t, _, lip_t) in lips.iter().skip(i + 1) {
            if *lip_t <= 0.0 {
                continue;
            }
            let v = lip_t * (t - s).powf(1.0 / q) / hs.powf(1.0 / q);
            grad_smoothing = Some(grad_smoothing.map_or(v, |c: f64| c.max(v)));
        }
    }

    let mut grad_vs_value: Option<f64> = None;
    for (t, field) in &rec.snapshots {
        if *t <= half {
            continue;
        }
        let dr = field.grid.dr();
        for w in field.values.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if w[0] >= floor && w[1] >= floor && mid > 0.0 {
                let v = ((w[1] - w[0]) / dr).abs() / mid.powf(1.0 / (p - q));
                grad_vs_value = Some(grad_vs_value.map_or(v, |c: f64| c.max(v)));
            }
        }
    }

    let ex = exps.l1_to_linf_exponent();
    let mut linf_vs_l1: Option<f64> = None;
    for e in &rec.series.entries {
        if e.t > half && e.linf >= floor && e.l1 > 0.0 {
            let v = e.linf / e.l1.powf(ex);
            linf_vs_l1 = Some(linf_vs_l1.map_or(v, |c: f64| c.max(v)));
        }
    }

    SmoothingReport {
        l1_vs_linf,
        grad_smoothing,
        grad_vs_value,
        linf_vs_l1,
    }
}

/// Outcome of the pointwise tail-envelope scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDecayCheck {
    pub passed: bool,
    /// Envelope constant: twice the initial max of `u₀(r) r^{σ_fast}`.
    pub envelope: f64,
    /// Largest observed `u(t,r) r^{σ_fast} / envelope` over `r ≥ 1`.
    pub worst_ratio: f64,
    pub worst_t: f64,
    pub worst_r: f64,
}

/// Checks that every snapshot stays below `C₄ r^{−σ_fast}` for `r ≥ 1`,
/// with `C₄` calibrated as twice the initial max of `u₀(r) r^{σ_fast}`.
/// Requires fast-tail initial data: `u₀ ≤ k0 r^{−σ_fast}` on `r ≥ 1`.
pub fn tail_decay_check(rec: &RunRecord, exps: &Exponents, k0: f64) -> Result<TailDecayCheck> {
    let sigma = exps.sigma_fast.ok_or_else(|| {
        Error::InvalidParameter("fast tail exponent undefined for q <= p - 1".into())
    })?;
    let (t0, initial) = rec
        .snapshots
        .first()
        .ok_or_else(|| Error::InvalidParameter("run has no snapshots".into()))?;
    let _ = t0;
    let mut c_init = 0.0f64;
    for i in 0..=initial.grid.n {
        let r = initial.grid.radius(i);
        if r > 0.0 {
            let v = initial.values[i] * r.powf(sigma);
            c_init = c_init.max(v);
            if r >= 1.0 && initial.values[i] > k0 * r.powf(-sigma) * (1.0 + 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "initial data exceeds k0 r^-sigma_fast at r = {r}"
                )));
            }
        }
    }
    let envelope = 2.0 * c_init;
    let mut worst_ratio = 0.0f64;
    let mut worst_t = 0.0f64;
    let mut worst_r = 0.0f64;
    for (t, field) in &rec.snapshots {
        for i in 0..=field.grid.n {
            let r = field.grid.radius(i);
            if r >= 1.0 {
                let ratio = field.values[i] * r.powf(sigma) / envelope;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_t = *t;
                    worst_r = r;
                }
            }
        }
    }
    Ok(TailDecayCheck {
        passed: worst_ratio <= 1.0 + 1e-12,
        envelope,
        worst_ratio,
        worst_t,
        worst_r,
    })
}
