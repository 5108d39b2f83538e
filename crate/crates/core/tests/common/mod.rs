//! Shared oracles for the integration suites.
//!
//! The finite-difference operator evaluation is kept independent of the
//! closed-form residual path it cross-checks: it only touches the barrier
//! through pointwise value evaluation.

use extinction_core::barriers::{self, BarrierKind, BarrierParams};

/// Centered finite-difference evaluation of
/// `∂t v − Δp v + |∇v|^q` on a barrier at `(t, r)`, with relative step `h`.
pub fn fd_operator(params: &BarrierParams, t: f64, r: f64, h_rel: f64) -> f64 {
    let e = &params.exps;
    let (p, q) = (e.triple.p, e.triple.q);
    let n = e.triple.dim as f64;
    let value = |tt: f64, rr: f64| -> f64 {
        match params.kind {
            BarrierKind::Super => barriers::super_value(params, tt, rr).unwrap(),
            BarrierKind::Sub => barriers::sub_value(params, tt, rr).unwrap(),
        }
    };
    let ht = h_rel * (params.horizon - t).min(t);
    let hr = h_rel * r;
    let vt = (value(t + ht, r) - value(t - ht, r)) / (2.0 * ht);
    let v_p = value(t, r + hr);
    let v_0 = value(t, r);
    let v_m = value(t, r - hr);
    let vr = (v_p - v_m) / (2.0 * hr);
    let vrr = (v_p - 2.0 * v_0 + v_m) / (hr * hr);
    let diff =
        (p - 1.0) * vr.abs().powf(p - 2.0) * vrr + (n - 1.0) / r * vr.abs().powf(p - 2.0) * vr;
    vt - diff + vr.abs().powf(q)
}

/// Richardson convergence ratio `err(h) / err(h/2)` of the
/// finite-difference operator against a closed-form residual.
pub fn richardson_ratio(params: &BarrierParams, t: f64, r: f64, h_rel: f64) -> f64 {
    let closed = match params.kind {
        BarrierKind::Super => barriers::residual_operator(params, t, r).unwrap(),
        BarrierKind::Sub => barriers::sub_residual(params, t, r).unwrap(),
    };
    let e1 = (fd_operator(params, t, r, h_rel) - closed).abs();
    let e2 = (fd_operator(params, t, r, h_rel / 2.0) - closed).abs();
    e1 / e2
}
