//! Scalar layer: q-numbers, the transcendental series `F_m`, and model parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorlab::{C64, ONE};

/// Largest admissible geometric ratio of the `F_m` series terms.
pub const SERIES_RATIO_LIMIT: f64 = 0.9;

/// Default truncation order of the `F_m` series.
pub const DEFAULT_ORDER: usize = 80;

/// `[n]_q = (qⁿ − q⁻ⁿ)/(q − q⁻¹)`.
pub fn q_number(n: i32, q: C64) -> Result<C64> {
    let k = kappa(q);
    if k.norm() < 1e-300 {
        return Err(Error::InvalidParams(format!("q-number undefined at q = {q}")));
    }
    Ok((q.powi(n) - q.powi(-n)) / k)
}

/// `[n]_q! = [1]_q [2]_q ⋯ [n]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: u32, q: C64) -> Result<C64> {
    let mut acc = ONE;
    for k in 1..=n as i32 {
        acc *= q_number(k, q)?;
    }
    Ok(acc)
}

/// `κ_q = q − q⁻¹`.
pub fn kappa(q: C64) -> C64 {
    q - q.inv()
}

/// Geometric ratio governing convergence of `F_m(ζ)`.
///
/// For large `n` the term `ζⁿ/(n[m]_{qⁿ})` behaves like `(ζ r^{m−1})ⁿ/n` with
/// `r = min(|q|, |q|⁻¹)`.
pub fn f_series_ratio(m: u32, zeta: C64, q: C64) -> f64 {
    let r = q.norm().min(1.0 / q.norm());
    zeta.norm() * r.powi(m as i32 - 1)
}

/// Partial sum `Σ_{n=1}^{order} ζⁿ / (n [m]_{qⁿ})`.
pub fn f_series(m: u32, zeta: C64, q: C64, order: usize) -> Result<C64> {
    if m == 0 {
        return Err(Error::InvalidParams("F_m needs m ≥ 1".into()));
    }
    if order == 0 {
        return Err(Error::InvalidParams("series order must be at least 1".into()));
    }
    let ratio = f_series_ratio(m, zeta, q);
    if ratio > SERIES_RATIO_LIMIT {
        return Err(Error::Divergent(format!(
            "F_{m}({zeta}) at q = {q}: geometric ratio {ratio:.3} exceeds {SERIES_RATIO_LIMIT}"
        )));
    }
    // With |y| ≤ 1 and y ∈ {q, q⁻¹}: 1/[m]_{yⁿ} = y^{n(m−1)} / Σ_{k<m} y^{2nk}, so
    // each term is (ζ y^{m−1})ⁿ / (n Σ_k y^{2nk}) and nothing overflows.
    let y = if q.norm() <= 1.0 { q } else { q.inv() };
    let step = zeta * y.powi(m as i32 - 1);
    let mut sum = C64::new(0.0, 0.0);
    let mut tn = ONE;
    let mut yn = ONE;
    for n in 1..=order {
        tn *= step;
        yn *= y;
        let y2 = yn * yn;
        let mut bracket = ONE;
        let mut pow = ONE;
        for _ in 1..m {
            pow *= y2;
            bracket += pow;
        }
        sum += tn / (bracket * n as f64);
    }
    Ok(sum)
}

/// Rank, deformation parameter, grading and twist of a `U_q(L(sl_{l+1}))` model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    pub l: usize,
    pub q: C64,
    /// Grading `(s_0, …, s_l)`.
    pub s: Vec<u32>,
    /// Twist fields `(Φ_1, …, Φ_{l+1})`.
    pub phi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    l: usize,
    q: [f64; 2],
    #[serde(default)]
    s: Option<Vec<u32>>,
    #[serde(default)]
    phi: Option<Vec<f64>>,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        let s = raw.s.unwrap_or_else(|| vec![1; raw.l + 1]);
        let phi = raw.phi.unwrap_or_else(|| vec![0.0; raw.l + 1]);
        ModelParams::new(raw.l, C64::new(raw.q[0], raw.q[1]), s, phi)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { l: p.l, q: [p.q.re, p.q.im], s: Some(p.s), phi: Some(p.phi) }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::homogeneous(1, C64::new(0.7, 0.0))
    }
}

impl ModelParams {
    pub fn new(l: usize, q: C64, s: Vec<u32>, phi: Vec<f64>) -> Result<Self> {
        let p = Self { l, q, s, phi };
        p.validate()?;
        Ok(p)
    }

    /// Homogeneous grading `s = (1, …, 1)` and zero twist.
    pub fn homogeneous(l: usize, q: C64) -> Self {
        Self { l, q, s: vec![1; l + 1], phi: vec![0.0; l + 1] }
    }

    pub fn with_grading(mut self, s: Vec<u32>) -> Result<Self> {
        self.s = s;
        self.validate()?;
        Ok(self)
    }

    pub fn with_twist(mut self, phi: Vec<f64>) -> Result<Self> {
        self.phi = phi;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::InvalidParams("rank l must be at least 1".into()));
        }
        if self.s.len() != self.l + 1 {
            return Err(Error::InvalidParams(format!("grading needs {} entries, got {}", self.l + 1, self.s.len())));
        }
        if self.s_total() == 0 {
            return Err(Error::InvalidParams("total grading s must be positive".into()));
        }
        if self.phi.len() != self.l + 1 {
            return Err(Error::InvalidParams(format!("twist needs {} entries, got {}", self.l + 1, self.phi.len())));
        }
        if !self.q.re.is_finite() || !self.q.im.is_finite() || self.q.norm() < 1e-12 {
            return Err(Error::InvalidParams(format!("q = {} is not admissible", self.q)));
        }
        if (self.q.norm() - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidParams(format!("q = {} lies on the unit circle", self.q)));
        }
        Ok(())
    }

    /// Dimension `l + 1` of the fundamental representation.
    pub fn dim(&self) -> usize {
        self.l + 1
    }

    /// `s = Σ s_i`.
    pub fn s_total(&self) -> u32 {
        self.s.iter().sum()
    }

    /// `s_{ij} = Σ_{k=i}^{j−1} s_k` for `1 ≤ i ≤ j ≤ l+1`.
    pub fn s_between(&self, i: usize, j: usize) -> u32 {
        self.s[i..j].iter().sum()
    }

    /// `q^ν = exp(ν log q)` on the principal branch.
    pub fn q_pow(&self, nu: f64) -> C64 {
        (self.q.ln() * nu).exp()
    }

    /// Integer power of `q` by repeated multiplication.
    pub fn q_int(&self, n: i32) -> C64 {
        self.q.powi(n)
    }

    pub fn kappa(&self) -> C64 {
        kappa(self.q)
    }

    /// `ζ^{s}` for the total grading.
    pub fn zeta_s(&self, zeta: C64) -> C64 {
        zeta.powi(self.s_total() as i32)
    }
}
