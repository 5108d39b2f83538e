//! Exponent algebra for the singular diffusion equation with gradient
//! absorption
//!
//! ```text
//!     ∂t u − Δp u + |∇u|^q = 0   on (0,∞) × ℝ^N,
//! ```
//!
//! in the range `p_c := 2N/(N+1) < p < 2`, `0 < q < p/2`. Everything the
//! rest of the crate needs — the self-similar exponents, the critical tail
//! exponent separating extinction from eternal positivity, and the rate
//! exponents near the extinction time — is a closed form of `(N, p, q)`
//! and is computed here once.

use crate::error::{Error, Result};

/// Critical diffusion exponent `2N/(N+1)` below which even the pure
/// p-Laplacian flow fails to conserve mass.
pub fn critical_p(dim: u32) -> f64 {
    2.0 * dim as f64 / (dim as f64 + 1.0)
}

/// Admissible parameter triple `(N, p, q)`.
///
/// Regime boundaries are validated with strict inequalities and no
/// tolerance: the exponent algebra degenerates at the boundaries
/// (`p − 2q → 0` blows up the rate exponents), so near-boundary studies
/// must pass parameters strictly inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamTriple {
    /// Spatial dimension N ≥ 1.
    pub dim: u32,
    /// Diffusion exponent of the p-Laplacian, `p_c < p < 2`.
    pub p: f64,
    /// Gradient absorption exponent, `0 < q < p/2`.
    pub q: f64,
}

impl ParamTriple {
    pub fn new(dim: u32, p: f64, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::OutOfRegime("N >= 1 required".into()));
        }
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::OutOfRegime("p and q must be finite".into()));
        }
        let p_c = critical_p(dim);
        if !(p > p_c) {
            return Err(Error::OutOfRegime(format!(
                "p > p_c = 2N/(N+1) = {p_c} violated (p = {p})"
            )));
        }
        if !(p < 2.0) {
            return Err(Error::OutOfRegime(format!("p < 2 violated (p = {p})")));
        }
        if !(q > 0.0) {
            return Err(Error::OutOfRegime(format!("q > 0 violated (q = {q})")));
        }
        if !(q < p / 2.0) {
            return Err(Error::OutOfRegime(format!(
                "q < p/2 = {} violated (q = {q})",
                p / 2.0
            )));
        }
        Ok(Self { dim, p, q })
    }
}

/// Position of `q` relative to the critical absorption exponent `p − 1`.
///
/// Detection compares `q` against `p − 1.0` exactly, with no tolerance:
/// users select the regime by exact input, and nearby parameters are never
/// silently reclassified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `q < p − 1`: supports of solutions shrink instantaneously.
    BelowCritical,
    /// `q = p − 1`.
    Critical,
    /// `q > p − 1`: simultaneous extinction, the range of the rate results.
    AboveCritical,
}

/// Whether an initial datum with the tested spatial decay extinguishes in
/// finite time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailClass {
    Extinguishing,
    NonExtinguishing,
}

/// The full derived-exponent record for a parameter triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub triple: ParamTriple,
    /// `2N/(N+1)`.
    pub p_c: f64,
    /// L∞ extinction rate exponent `(p−q)/(p−2q)`.
    pub alpha: f64,
    /// Self-similar spreading exponent `(q−p+1)/(p−2q)`.
    pub beta: f64,
    /// Profile shape exponent `p/(p−1)`.
    pub theta: f64,
    /// Profile decay exponent `(p−1)q/(p(1−q))`.
    pub gamma: f64,
    /// `p − N/(N+1)`.
    pub q_star: f64,
    /// L¹-vs-L∞ interpolation exponent `(N+1)(q_* − q)/(p−q)`.
    pub nu: f64,
    /// Exponent of the L¹ integral inequality closing the upper rate bound.
    pub omega: f64,
    /// Supersolution amplitude ratio `2p(γ+1)/N`.
    pub lambda: f64,
    /// Coefficient `p(γ+1)(γθ)^{p−1}` bounding the diffusion part of the
    /// supersolution residual far from the origin.
    pub big_l: f64,
    /// Critical initial-tail exponent `q/(1−q)`: decay at least this fast
    /// forces finite-time extinction, strictly slower everywhere-positive
    /// data never extinguish.
    pub sigma_opt: f64,
    /// Fast tail exponent `(p−q)/(q−p+1)`, defined only for `q > p − 1`.
    pub sigma_fast: Option<f64>,
    pub regime: Regime,
}

impl Exponents {
    /// Derives every exponent from a validated triple.
    pub fn from_triple(triple: ParamTriple) -> Self {
        let n = triple.dim as f64;
        let (p, q) = (triple.p, triple.q);
        let p_c = critical_p(triple.dim);
        let alpha = (p - q) / (p - 2.0 * q);
        let beta = (q - p + 1.0) / (p - 2.0 * q);
        let theta = p / (p - 1.0);
        let gamma = (p - 1.0) * q / (p * (1.0 - q));
        let q_star = p - n / (n + 1.0);
        let nu = (n + 1.0) * (q_star - q) / (p - q);
        let denom = (n + 1.0) * (p - q) - n;
        let omega = q / (p - q) - n * (p - 2.0 * q) * (q - p + 1.0) / ((p - q) * denom);
        let lambda = 2.0 * p * (gamma + 1.0) / n;
        let big_l = p * (gamma + 1.0) * (gamma * theta).powf(p - 1.0);
        let sigma_opt = q / (1.0 - q);
        let regime = if q == p - 1.0 {
            Regime::Critical
        } else if q > p - 1.0 {
            Regime::AboveCritical
        } else {
            Regime::BelowCritical
        };
        let sigma_fast = match regime {
            Regime::AboveCritical => Some((p - q) / (q - p + 1.0)),
            _ => None,
        };
        Self {
            triple,
            p_c,
            alpha,
            beta,
            theta,
            gamma,
            q_star,
            nu,
            omega,
            lambda,
            big_l,
            sigma_opt,
            sigma_fast,
            regime,
        }
    }

    /// Validates `(dim, p, q)` and derives the exponent record.
    pub fn derive(dim: u32, p: f64, q: f64) -> Result<Self> {
        Ok(Self::from_triple(ParamTriple::new(dim, p, q)?))
    }

    /// Maximum absolute residual over the internal exponent identities.
    ///
    /// The identities tie the independently computed fields together:
    /// `α − βθγ = 1/(1−q)`, `(θ−1)(p−1) = 1`, `(p−1)θ = p`,
    /// `1 − ω = (p−2q)/((N+1)(p−q)−N)` and
    /// `α − Nβ = ((N+1)(p−q)−N)/(p−2q)`.
    pub fn identity_residuals(&self) -> f64 {
        let n = self.triple.dim as f64;
        let (p, q) = (self.triple.p, self.triple.q);
        let denom = (n + 1.0) * (p - q) - n;
        let r = [
            self.alpha - self.beta * self.theta * self.gamma - 1.0 / (1.0 - q),
            (self.theta - 1.0) * (p - 1.0) - 1.0,
            (p - 1.0) * self.theta - p,
            1.0 - self.omega - (p - 2.0 * q) / denom,
            self.alpha - n * self.beta - denom / (p - 2.0 * q),
        ];
        r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Classifies an initial-datum decay exponent `σ > 0` against the
    /// critical tail. Decay exactly at the critical exponent still
    /// extinguishes (the threshold case is admissible with constant 1),
    /// so the comparison is `σ ≥ σ_opt`.
    pub fn classify_tail(&self, sigma: f64) -> Result<TailClass> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "decay exponent must be positive (sigma = {sigma})"
            )));
        }
        Ok(if sigma >= self.sigma_opt {
            TailClass::Extinguishing
        } else {
            TailClass::NonExtinguishing
        })
    }

    /// For an auxiliary absorption exponent `Q ∈ (p−1, p/2)`, decides
    /// whether the associated decay exponent `(p−Q)/(Q−p+1)` is strictly
    /// faster than the critical tail. Since `p > q + Q` throughout the
    /// admissible range, this always holds.
    pub fn fast_tail_dominates(&self, q_exp: f64) -> Result<bool> {
        let p = self.triple.p;
        if !(q_exp > p - 1.0 && q_exp < p / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "Q must lie in (p-1, p/2) = ({}, {}), got {q_exp}",
                p - 1.0,
                p / 2.0
            )));
        }
        Ok((p - q_exp) / (q_exp - p + 1.0) > self.sigma_opt)
    }

    /// Exponent `m = q/(p−q) ∈ (0,1)` of the L∞ functional inequality.
    pub fn absorption_ratio(&self) -> f64 {
        self.triple.q / (self.triple.p - self.triple.q)
    }

    /// L¹ extinction rate exponent `α − Nβ`.
    pub fn rate_l1(&self) -> f64 {
        self.alpha - self.triple.dim as f64 * self.beta
    }

    /// Exponent of the reverse smoothing bound `‖u‖∞ ≤ C‖u‖₁^e`,
    /// `e = (p−q)/((N+1)(p−q)−N)`.
    pub fn l1_to_linf_exponent(&self) -> f64 {
        let n = self.triple.dim as f64;
        let (p, q) = (self.triple.p, self.triple.q);
        (p - q) / ((n + 1.0) * (p - q) - n)
    }
}
