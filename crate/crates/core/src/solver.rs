//! Radial finite-volume solver for `∂t u − Δp u + |∇u|^q = 0`.
//!
//! Radially symmetric fields are sampled at the nodes `r_i = i·dr` of a
//! truncated domain `[0, r_max]`. Diffusion uses a conservative face-flux
//! discretization with the singular diffusivity `|∇u|^{p−2}` regularized as
//! `(g² + ε²)^{(p−2)/2}` (`p < 2` makes the raw diffusivity unbounded where
//! the gradient vanishes). Absorption `|∇u|^q` is evaluated explicitly from
//! centered gradients in both schemes: `q < 1` makes it non-Lipschitz at
//! zero slope, so an implicit treatment would need nonlinear solves with
//! degenerate Jacobians.
//!
//! The semi-implicit scheme lags the face diffusivity and solves one
//! tridiagonal system per step, lifting the `dt ≲ dr² ε^{2−p}` explicit
//! restriction that makes small regularizations unusable.

use crate::analysis::{NormEntry, NormSeries};
use crate::barriers::{self, BarrierKind, BarrierParams};
use crate::error::{Error, Result};
use crate::exponents::Exponents;

/// Surface area of the unit sphere in `ℝ^N` (`2` for N = 1, `2π`, `4π`, ...).
pub fn unit_sphere_area(dim: u32) -> f64 {
    let gamma_half = |n2: u32| -> f64 {
        // Γ(n2 / 2) for integer n2 ≥ 1.
        if n2.is_multiple_of(2) {
            (1..n2 / 2).map(|k| k as f64).product::<f64>()
        } else {
            let k = (n2 - 1) / 2;
            let mut v = std::f64::consts::PI.sqrt();
            for j in 0..k {
                v *= 0.5 + j as f64;
            }
            v
        }
    };
    let nf = dim as f64;
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / gamma_half(dim)
}

/// Uniform radial grid on `[0, r_max]` with `n` cells (`n + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    pub r_max: f64,
    pub n: usize,
    pub dim: u32,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize, dim: u32) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 cells, got {n}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(Self { r_max, n, dim })
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.dr()
    }

    /// Trapezoidal quadrature weights for `∫ v ω_{N−1} r^{N−1} dr`.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let omega = unit_sphere_area(self.dim);
        let dr = self.dr();
        let e = (self.dim - 1) as i32;
        (0..=self.n)
            .map(|i| {
                let c = if i == 0 || i == self.n { 0.5 } else { 1.0 };
                omega * c * self.radius(i).powi(e) * dr
            })
            .collect()
    }
}

/// Non-negative radial profile sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn from_values(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} nodal values, got {}",
                grid.n + 1,
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("node {i} of the field")));
            }
            if *v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative value {v} at node {i}"
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(*v))
    }
}

/// Samples a radial profile on a grid. The profile must be non-negative,
/// finite and not identically zero.
pub fn init_from(profile: impl Fn(f64) -> f64, grid: RadialGrid) -> Result<RadialField> {
    let values: Vec<f64> = (0..=grid.n).map(|i| profile(grid.radius(i))).collect();
    let field = RadialField::from_values(grid, values)?;
    if field.max_value() == 0.0 {
        return Err(Error::InvalidParameter(
            "initial profile is identically zero".into(),
        ));
    }
    Ok(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

/// Outer boundary condition at `r = r_max`.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    DirichletZero,
    NeumannZero,
    /// Time-dependent Dirichlet trace of a barrier, for comparison runs.
    BarrierTrace(BarrierParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Gradient regularization; `0` resolves to `1e−6 ‖u₀‖∞ / r_max`.
    pub eps: f64,
    /// Time-step safety factor in `(0, 1)`.
    pub cfl: f64,
    pub scheme: Scheme,
    /// L∞ threshold declaring extinction; `0` resolves to `1e−10 ‖u₀‖∞`.
    pub extinct_tol: f64,
    pub t_max: f64,
    pub boundary: Boundary,
    /// Target relative decrease of `‖u‖∞` per step; drives the adaptive
    /// step so that sampling is geometric in the remaining lifetime.
    pub rel_change: f64,
    pub max_steps: usize,
    /// Applies the explicit absorption decrement in the positivity-
    /// preserving form `u exp(−dt |∇u|^q / u)` instead of `u − dt |∇u|^q`.
    /// Same one-step consistency, but positive fields stay positive: in
    /// boundary layers the plain decrement undershoots and clips to zero
    /// no matter how small the step.
    pub positivity_guard: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 0.0,
            cfl: 0.4,
            scheme: Scheme::SemiImplicit,
            extinct_tol: 0.0,
            t_max: 10.0,
            boundary: Boundary::DirichletZero,
            rel_change: 0.01,
            max_steps: 2_000_000,
            positivity_guard: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub dt: f64,
    pub clipped_mass: f64,
}

/// Outcome of one evolution.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub series: NormSeries,
    pub snapshots: Vec<(f64, RadialField)>,
    pub t_extinct: Option<f64>,
    /// Max over recorded times of `|‖u(t)‖₁ − ‖u₀‖₁ + ∫₀ᵗ ∫ |∇u|^q dμ ds| / ‖u₀‖₁`.
    pub mass_balance_residual: f64,
    pub clipped_mass: f64,
    pub steps: usize,
    pub t_end: f64,
}

fn boundary_value(boundary: &Boundary, t: f64, r_max: f64) -> f64 {
    match boundary {
        Boundary::DirichletZero => 0.0,
        Boundary::NeumannZero => f64::NAN, // handled structurally
        Boundary::BarrierTrace(bp) => {
            if t >= bp.horizon {
                0.0
            } else {
                match bp.kind {
                    BarrierKind::Super => barriers::super_value(bp, t, r_max).unwrap(),
                    BarrierKind::Sub => barriers::sub_value(bp, t, r_max).unwrap(),
                }
            }
        }
    }
}

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    if diag[0] == 0.0 {
        return Err(Error::SolveFailure {
            step: 0,
            t: 0.0,
            detail: "zero pivot in tridiagonal solve".into(),
        });
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::SolveFailure {
                step: 0,
                t: 0.0,
                detail: format!("degenerate pivot {denom} at row {i}"),
            });
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// One time step. Returns the advanced field and the step actually taken:
/// explicit steps are capped by the diffusive stability bound, semi-implicit
/// steps take `dt_hint` as given.
pub fn step(
    u: &RadialField,
    exps: &Exponents,
    cfg: &SolverConfig,
    dt_hint: f64,
    t_now: f64,
) -> Result<(RadialField, StepInfo)> {
    let grid = u.grid;
    let n = grid.n;
    let dr = grid.dr();
    let dim = grid.dim as f64;
    let (p, q) = (exps.triple.p, exps.triple.q);
    if !(cfg.eps > 0.0) {
        return Err(Error::InvalidParameter(
            "gradient regularization must be resolved to a positive value".into(),
        ));
    }
    if !(dt_hint > 0.0) || !dt_hint.is_finite() {
        return Err(Error::InvalidParameter(format!("bad dt hint {dt_hint}")));
    }
    let v = &u.values;

    // Regularized diffusivities at the faces.
    let mut d_face = vec![0.0; n];
    let mut d_max = 0.0f64;
    for i in 0..n {
        let g = (v[i + 1] - v[i]) / dr;
        let d = (g * g + cfg.eps * cfg.eps).powf((p - 2.0) / 2.0);
        d_face[i] = d;
        d_max = d_max.max(d);
    }

    let dt = match cfg.scheme {
        Scheme::Explicit => dt_hint.min(cfg.cfl * dr * dr / (2.0 * dim * d_max)),
        Scheme::SemiImplicit => dt_hint,
    };

    // Centered-gradient absorption, explicit in both schemes. The value
    // stored is the post-absorption nodal state before diffusion.
    let mut after_absorb = vec![0.0; n + 1];
    for i in 0..=n {
        let g = if i == 0 || i == n {
            0.0
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * dr)
        };
        let dec = dt * g.abs().powf(q);
        after_absorb[i] = if cfg.positivity_guard {
            if v[i] > 0.0 {
                v[i] * (-dec / v[i]).exp()
            } else {
                0.0
            }
        } else {
            v[i] - dec
        };
    }

    let e_pow = (grid.dim - 1) as i32;
    let r_node = |i: usize| grid.radius(i);
    let r_face = |i: usize| (i as f64 + 0.5) * dr;
    // Origin cell: single face flux over the half-cell volume.
    let k0 = 2.0 * dim * d_face[0] / (dr * dr);

    let mut new = vec![0.0; n + 1];
    match cfg.scheme {
        Scheme::Explicit => {
            new[0] = after_absorb[0] + dt * k0 * (v[1] - v[0]);
            for i in 1..n {
                let rn = r_node(i).powi(e_pow);
                let a = r_face(i - 1).powi(e_pow) * d_face[i - 1] / (rn * dr * dr);
                let c = r_face(i).powi(e_pow) * d_face[i] / (rn * dr * dr);
                let lap = a * (v[i - 1] - v[i]) + c * (v[i + 1] - v[i]);
                new[i] = after_absorb[i] + dt * lap;
            }
            match cfg.boundary {
                Boundary::NeumannZero => new[n] = new[n - 1],
                _ => new[n] = boundary_value(&cfg.boundary, t_now + dt, grid.r_max),
            }
        }
        Scheme::SemiImplicit => {
            let mut lower = vec![0.0; n + 1];
            let mut diag = vec![0.0; n + 1];
            let mut upper = vec![0.0; n + 1];
            let mut rhs = vec![0.0; n + 1];
            diag[0] = 1.0 + dt * k0;
            upper[0] = -dt * k0;
            rhs[0] = after_absorb[0];
            for i in 1..n {
                let rn = r_node(i).powi(e_pow);
                let a = r_face(i - 1).powi(e_pow) * d_face[i - 1] / (rn * dr * dr);
                let c = r_face(i).powi(e_pow) * d_face[i] / (rn * dr * dr);
                lower[i] = -dt * a;
                diag[i] = 1.0 + dt * (a + c);
                upper[i] = -dt * c;
                rhs[i] = after_absorb[i];
            }
            match cfg.boundary {
                Boundary::NeumannZero => {
                    lower[n] = -1.0;
                    diag[n] = 1.0;
                    rhs[n] = 0.0;
                }
                _ => {
                    diag[n] = 1.0;
                    rhs[n] = boundary_value(&cfg.boundary, t_now + dt, grid.r_max);
                }
            }
            new = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        }
    }

    // Clip undershoots at zero; the clipped mass is a scheme diagnostic.
    let weights = grid.quadrature_weights();
    let mut clipped_mass = 0.0;
    for (i, val) in new.iter_mut().enumerate() {
        if !val.is_finite() {
            return Err(Error::SolveFailure {
                step: 0,
                t: t_now,
                detail: format!("non-finite value {val} at node {i} (r = {})", r_node(i)),
            });
        }
        if *val < 0.0 {
            clipped_mass += weights[i] * (-*val);
            *val = 0.0;
        }
    }

    Ok((
        RadialField { grid, values: new },
        StepInfo { dt, clipped_mass },
    ))
}

/// Nodal norms: sup, weighted L¹, and the Lipschitz seminorm from face
/// difference quotients.
pub(crate) fn basic_norms(u: &RadialField, weights: &[f64]) -> (f64, f64, f64) {
    let n = u.grid.n;
    let dr = u.grid.dr();
    let v = &u.values;
    let mut linf = 0.0f64;
    let mut l1 = 0.0f64;
    let mut lip = 0.0f64;
    for i in 0..=n {
        linf = linf.max(v[i]);
        l1 += weights[i] * v[i];
        if i < n {
            lip = lip.max(((v[i + 1] - v[i]) / dr).abs());
        }
    }
    (linf, l1, lip)
}

fn norms_and_absorption(u: &RadialField, weights: &[f64], q: f64) -> (f64, f64, f64, f64) {
    let n = u.grid.n;
    let dr = u.grid.dr();
    let v = &u.values;
    let mut linf = 0.0f64;
    let mut l1 = 0.0f64;
    let mut lip = 0.0f64;
    let mut absorb = 0.0f64;
    for i in 0..=n {
        linf = linf.max(v[i]);
        l1 += weights[i] * v[i];
        if i < n {
            lip = lip.max(((v[i + 1] - v[i]) / dr).abs());
        }
        let g = if i == 0 || i == n {
            if i == n {
                (v[n] - v[n - 1]) / dr
            } else {
                0.0
            }
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * dr)
        };
        absorb += weights[i] * g.abs().powf(q);
    }
    (linf, l1, lip, absorb)
}

/// Evolves an initial field until extinction, `t_max`, or the step budget.
///
/// Records the norm series at every step (the adaptive step is
/// proportional to the remaining lifetime near extinction, so the record
/// is geometric in `T_e − t` there), keeps a bounded set of snapshots at
/// geometric milestones of `‖u‖∞` and `t`, and accumulates the absorbed
/// mass with a trapezoidal rule for the balance diagnostic.
pub fn run(u0: &RadialField, exps: &Exponents, cfg: &SolverConfig) -> Result<RunRecord> {
    let grid = u0.grid;
    let weights = grid.quadrature_weights();
    let q = exps.triple.q;
    let linf0 = u0.max_value();
    if linf0 <= 0.0 {
        return Err(Error::InvalidParameter("initial field is zero".into()));
    }

    let mut c = cfg.clone();
    if c.eps == 0.0 {
        c.eps = 1e-6 * linf0 / grid.r_max;
    }
    if c.extinct_tol == 0.0 {
        c.extinct_tol = 1e-10 * linf0;
    }
    if !(c.extinct_tol > 0.0 && c.eps > 0.0) {
        return Err(Error::InvalidParameter(
            "eps and extinct_tol must resolve to positive values".into(),
        ));
    }

    let dt_max = c.cfl * grid.dr();
    let mut dt = dt_max * 1e-3;
    let mut t = 0.0f64;
    let mut steps = 0usize;
    let mut u = u0.clone();
    let (mut linf, l1_init, lip, absrate) = norms_and_absorption(&u, &weights, q);
    let mut absrate_prev = absrate;
    let mut absorbed = 0.0f64;
    let mut drift_max = 0.0f64;
    let mut clip_total = 0.0f64;
    let mut t_extinct = None;

    let mut series = NormSeries::default();
    series.entries.push(NormEntry {
        t,
        linf,
        l1: l1_init,
        lip,
    });
    let mut snapshots: Vec<(f64, RadialField)> = vec![(0.0, u.clone())];
    let snap_factor = 10.0f64.powf(0.25);
    let mut next_snap_linf = linf / snap_factor;
    let mut next_snap_t = c.t_max / 64.0;

    loop {
        if linf < c.extinct_tol {
            t_extinct = Some(t);
            break;
        }
        if t >= c.t_max * (1.0 - 1e-12) || steps >= c.max_steps {
            break;
        }
        let hint = dt.min(c.t_max - t).max(f64::MIN_POSITIVE);
        let (new, info) = step(&u, exps, &c, hint, t).map_err(|e| match e {
            Error::SolveFailure { t: te, detail, .. } => Error::SolveFailure {
                step: steps,
                t: te,
                detail,
            },
            other => other,
        })?;
        let (nlinf, nl1, nlip, nabs) = norms_and_absorption(&new, &weights, q);
        absorbed += 0.5 * info.dt * (absrate_prev + nabs);
        clip_total += info.clipped_mass;
        t += info.dt;
        steps += 1;
        let drift = (nl1 - l1_init + absorbed).abs() / l1_init;
        drift_max = drift_max.max(drift);
        series.entries.push(NormEntry {
            t,
            linf: nlinf,
            l1: nl1,
            lip: nlip,
        });

        if nlinf <= next_snap_linf || t >= next_snap_t {
            snapshots.push((t, new.clone()));
            while next_snap_linf >= nlinf {
                next_snap_linf /= snap_factor;
            }
            if t >= next_snap_t {
                next_snap_t = t * 1.6 + c.t_max / 64.0;
            }
        }

        // Target a fixed relative decrease of the sup per step.
        let rate = (linf - nlinf) / info.dt;
        let desired = if rate > 0.0 {
            c.rel_change * nlinf / rate
        } else {
            dt_max
        };
        dt = desired.min(info.dt * 2.0).min(dt_max);
        if !(dt > 0.0) {
            dt = dt_max * 1e-6;
        }

        u = new;
        linf = nlinf;
        absrate_prev = nabs;
    }

    if snapshots.last().map(|(ts, _)| *ts) != Some(t) {
        snapshots.push((t, u.clone()));
    }

    Ok(RunRecord {
        series,
        snapshots,
        t_extinct,
        mass_balance_residual: drift_max,
        clipped_mass: clip_total,
        steps,
        t_end: t,
    })
}

/// Side of a discrete comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Barrier above the solution: violations are `(u − W)₊`.
    Above,
    /// Barrier below the solution: violations are `(w − u)₊`.
    Below,
}

/// Maximum pointwise ordering violation between a run and a barrier over
/// all recorded snapshots. The ordering must hold at the first snapshot
/// (up to roundoff), otherwise the comparison hypothesis fails.
pub fn compare_with_barrier(rec: &RunRecord, params: &BarrierParams, side: Side) -> Result<f64> {
    match (side, params.kind) {
        (Side::Above, BarrierKind::Super) | (Side::Below, BarrierKind::Sub) => {}
        _ => {
            return Err(Error::InvalidParameter(
                "comparison side inconsistent with barrier kind".into(),
            ))
        }
    }
    let eval = |t: f64, r: f64| -> f64 {
        if t >= params.horizon {
            return 0.0;
        }
        match params.kind {
            BarrierKind::Super => barriers::super_value(params, t, r).unwrap(),
            BarrierKind::Sub => barriers::sub_value(params, t, r).unwrap(),
        }
    };
    let violation = |t: f64, field: &RadialField| -> (f64, f64) {
        let mut worst = 0.0f64;
        let mut at_r = 0.0f64;
        for i in 0..=field.grid.n {
            let r = field.grid.radius(i);
            let w = eval(t, r);
            let gap = match side {
                Side::Above => field.values[i] - w,
                Side::Below => w - field.values[i],
            };
            if gap > worst {
                worst = gap;
                at_r = r;
            }
        }
        (worst, at_r)
    };

    let (t0, first) = &rec.snapshots[0];
    let scale = first.max_value().max(eval(*t0, 0.0));
    let (gap0, r0) = violation(*t0, first);
    if gap0 > 1e-12 * scale {
        return Err(Error::OrderingViolated {
            t: *t0,
            r: r0,
            gap: gap0,
        });
    }
    let mut max_violation = 0.0f64;
    for (t, field) in &rec.snapshots {
        let (gap, _) = violation(*t, field);
        max_violation = max_violation.max(gap);
    }
    Ok(max_violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barriers::{feasible_super_params, super_value};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn exps_1d() -> Exponents {
        Exponents::derive(1, 1.6, 0.7).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(unit_sphere_area(1), 2.0);
        assert_relative_eq!(unit_sphere_area(2), std::f64::consts::TAU);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * std::f64::consts::PI);
        assert_relative_eq!(
            unit_sphere_area(4),
            2.0 * std::f64::consts::PI * std::f64::consts::PI
        );
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(1.0, 8, 1).is_err());
        assert!(RadialGrid::new(-1.0, 100, 1).is_err());
        assert!(RadialGrid::new(1.0, 100, 0).is_err());
        let g = RadialGrid::new(50.0, 1000, 1).unwrap();
        assert_relative_eq!(g.dr(), 0.05);
    }

    #[test]
    fn init_examples() {
        let grid = RadialGrid::new(50.0, 1000, 1).unwrap();
        let f = init_from(|r| (1.0 + r).powf(-3.0), grid).unwrap();
        assert_relative_eq!(f.values[0], 1.0);
        assert!(init_from(|_| 0.0, grid).is_err());
        assert!(init_from(|r| r - 1.0, grid).is_err());

        let e = exps_1d();
        let w = feasible_super_params(&e, 2.0).with_horizon(2.0).unwrap();
        let field = init_from(|r| super_value(&w, 0.0, r).unwrap(), grid).unwrap();
        let bound = 2.0f64.powf(e.alpha) * w.a.powf(-e.gamma);
        assert!(field.values.iter().all(|v| *v <= bound * (1.0 + 1e-12)));
        // The sup sits at the origin node and equals T^alpha a^{-gamma}.
        assert_relative_eq!(crate::analysis::norms(&field).0, bound, max_relative = 1e-12);
    }

    #[test]
    fn constant_field_is_stationary_under_neumann() {
        let e = exps_1d();
        let grid = RadialGrid::new(1.0, 32, 1).unwrap();
        let u = init_from(|_| 0.7, grid).unwrap();
        for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
            let cfg = SolverConfig {
                eps: 1e-6,
                scheme,
                boundary: Boundary::NeumannZero,
                ..SolverConfig::default()
            };
            let (next, _) = step(&u, &e, &cfg, 1e-3, 0.0).unwrap();
            for (a, b) in u.values.iter().zip(next.values.iter()) {
                assert_relative_eq!(a, b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn mass_decays_under_dirichlet_zero() {
        let e = exps_1d();
        let grid = RadialGrid::new(10.0, 200, 1).unwrap();
        let u = init_from(|r| (-r * r).exp(), grid).unwrap();
        let cfg = SolverConfig {
            eps: 1e-6,
            ..SolverConfig::default()
        };
        let w = grid.quadrature_weights();
        let mut field = u;
        let mut mass: f64 = field
            .values
            .iter()
            .zip(w.iter())
            .map(|(v, wi)| v * wi)
            .sum();
        for k in 0..20 {
            let (next, _) = step(&field, &e, &cfg, 5e-4, k as f64 * 5e-4).unwrap();
            let next_mass: f64 = next.values.iter().zip(w.iter()).map(|(v, wi)| v * wi).sum();
            assert!(next_mass <= mass * (1.0 + 1e-12));
            assert!(next.values.iter().all(|v| *v >= 0.0));
            mass = next_mass;
            field = next;
        }
    }

    #[test]
    fn run_detects_extinction_and_balances_mass() {
        let e = exps_1d();
        let grid = RadialGrid::new(20.0, 400, 1).unwrap();
        let u0 = init_from(|r: f64| 1.0 / (1.0 + r.powi(9)), grid).unwrap();
        let cfg = SolverConfig {
            t_max: 50.0,
            extinct_tol: 1e-8,
            ..SolverConfig::default()
        };
        let rec = run(&u0, &e, &cfg).unwrap();
        assert!(
            rec.t_extinct.is_some(),
            "no extinction by t = {}",
            rec.t_end
        );
        assert!(
            rec.mass_balance_residual < 0.02,
            "{}",
            rec.mass_balance_residual
        );
        // linf monotone along the series.
        for w in rec.series.entries.windows(2) {
            assert!(w[1].linf <= w[0].linf * (1.0 + 1e-12));
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn comparison_rejects_crossing_data() {
        let e = exps_1d();
        let sup = feasible_super_params(&e, 2.0);
        // Pick a horizon making the barrier O(1) at the origin.
        let mut horizon = 1.0f64;
        while horizon.powf(e.alpha) * sup.a.powf(-e.gamma) < 0.5 {
            horizon *= 2.0;
        }
        let sup = sup.with_horizon(horizon).unwrap();
        let grid = RadialGrid::new(20.0, 64, 1).unwrap();
        let w0 = init_from(|r| super_value(&sup, 0.0, r).unwrap(), grid).unwrap();
        let above =
            RadialField::from_values(grid, w0.values.iter().map(|v| v * 2.0).collect()).unwrap();
        let rec = RunRecord {
            series: NormSeries::default(),
            snapshots: vec![(0.0, above)],
            t_extinct: None,
            mass_balance_residual: 0.0,
            clipped_mass: 0.0,
            steps: 0,
            t_end: 0.0,
        };
        assert!(matches!(
            compare_with_barrier(&rec, &sup, Side::Above),
            Err(Error::OrderingViolated { .. })
        ));
        // Halved data keeps the ordering.
        let below =
            RadialField::from_values(grid, w0.values.iter().map(|v| v * 0.5).collect()).unwrap();
        let rec = RunRecord {
            snapshots: vec![(0.0, below)],
            ..rec
        };
        assert_eq!(compare_with_barrier(&rec, &sup, Side::Above).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_profiles_stay_monotone_one_step(
            seedvals in proptest::collection::vec(0.0f64..1.0, 24)
        ) {
            // Random nonincreasing profile from cumulative positive drops.
            let mut v = Vec::with_capacity(25);
            let mut acc = 1.0 + seedvals.iter().sum::<f64>();
            v.push(acc);
            for s in &seedvals {
                acc -= s;
                v.push(acc);
            }
            let grid = RadialGrid::new(2.0, 24, 1).unwrap();
            let u = RadialField::from_values(grid, v).unwrap();
            let e = Exponents::derive(1, 1.6, 0.7).unwrap();
            let cfg = SolverConfig {
                eps: 1e-4,
                boundary: Boundary::NeumannZero,
                ..SolverConfig::default()
            };
            let (next, _) = step(&u, &e, &cfg, 1e-5, 0.0).unwrap();
            for w in next.values.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }
}
