//! Open chains: boundary K-operators, reflection equations, dressing and the
//! open transfer operator with its Hamiltonian.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{local_density, monodromy_inverse, times_monodromy, ChainSpec};
use crate::error::{Error, Result};
use crate::qcore::ModelParams;
use crate::rmat::{r_matrix, skew_inverse_tilde_inv};
use crate::tensorlab::{
    embed, kron, local_left_mul, local_right_mul, partial_trace, partial_transpose, MatrixDump, TensorOperator, C64,
    ONE, ZERO,
};

/// Which end of the chain a K-operator sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundarySide {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl fmt::Display for BoundarySide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundarySide::Left => "L",
            BoundarySide::Right => "R",
        })
    }
}

impl std::str::FromStr for BoundarySide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" | "left" => Ok(BoundarySide::Left),
            "R" | "r" | "right" => Ok(BoundarySide::Right),
            other => Err(Error::InvalidParams(format!("unknown boundary side {other:?}"))),
        }
    }
}

/// Step of the central difference used for K-operators without a closed form.
pub const FD_STEP: f64 = 1e-6;

type KFn = Arc<dyn Fn(C64) -> TensorOperator + Send + Sync>;

/// A boundary K-operator as a function of the spectral parameter.
#[derive(Clone)]
pub enum BoundaryK {
    /// `K(ζ) = 1`.
    Identity { dim: usize },
    /// `K(ζ) = diag(ζ^{m_1} p_1(x), …, ζ^{m_{l+1}} p_{l+1}(x)) / d(x)` with
    /// `x = ζ^s`; polynomial coefficients in ascending order.
    DiagonalRational { s: u32, numerators: Vec<Vec<C64>>, denominator: Vec<C64>, shifts: Vec<i32> },
    /// Matrices known at isolated points; a single sample is read as a
    /// constant operator.
    Sampled { samples: Vec<(C64, TensorOperator)> },
    /// Any closure; derivatives are taken by finite differences.
    Function { dim: usize, f: KFn },
}

impl fmt::Debug for BoundaryK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryK::Identity { dim } => write!(f, "Identity({dim})"),
            BoundaryK::DiagonalRational { s, numerators, denominator, shifts } => f
                .debug_struct("DiagonalRational")
                .field("s", s)
                .field("numerators", numerators)
                .field("denominator", denominator)
                .field("shifts", shifts)
                .finish(),
            BoundaryK::Sampled { samples } => write!(f, "Sampled({} points)", samples.len()),
            BoundaryK::Function { dim, .. } => write!(f, "Function({dim})"),
        }
    }
}

fn poly(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().enumerate().skip(1).rev().fold(ZERO, |acc, (k, &c)| acc * x + c * k as f64)
}

impl BoundaryK {
    pub fn identity(params: &ModelParams) -> Self {
        BoundaryK::Identity { dim: params.dim() }
    }

    pub fn diagonal(params: &ModelParams, numerators: Vec<Vec<C64>>) -> Result<Self> {
        Self::diagonal_rational(params, numerators, vec![ONE])
    }

    pub fn diagonal_rational(params: &ModelParams, numerators: Vec<Vec<C64>>, denominator: Vec<C64>) -> Result<Self> {
        Self::diagonal_shifted(params, numerators, denominator, vec![0; params.dim()])
    }

    pub fn diagonal_shifted(
        params: &ModelParams,
        numerators: Vec<Vec<C64>>,
        denominator: Vec<C64>,
        shifts: Vec<i32>,
    ) -> Result<Self> {
        if numerators.len() != params.dim() || shifts.len() != params.dim() {
            return Err(Error::Dimension(format!(
                "{} diagonal entries and {} shifts for dimension {}",
                numerators.len(),
                shifts.len(),
                params.dim()
            )));
        }
        if numerators.iter().any(Vec::is_empty) {
            return Err(Error::InvalidParams("empty numerator polynomial".into()));
        }
        if denominator.iter().all(|c| *c == ZERO) {
            return Err(Error::InvalidParams("denominator polynomial is zero".into()));
        }
        Ok(BoundaryK::DiagonalRational { s: params.s_total(), numerators, denominator, shifts })
    }

    /// The unit solution in the gauge of the grading: `diag(ζ^{2s_{1j}})` on the
    /// left and `diag(q^{−2(j−1)} ζ^{−2s_{1j}})` on the right.
    pub fn gauged_unit(params: &ModelParams, side: BoundarySide) -> Self {
        let n = params.dim();
        let (numerators, shifts) = (1..=n)
            .map(|j| {
                let shift = 2 * params.s_between(1, j) as i32;
                match side {
                    BoundarySide::Left => (vec![ONE], shift),
                    BoundarySide::Right => (vec![params.q_int(-2 * (j as i32 - 1))], -shift),
                }
            })
            .unzip();
        BoundaryK::DiagonalRational { s: params.s_total(), numerators, denominator: vec![ONE], shifts }
    }

    /// `diag(ξζ^s − 1, ζ^{s₁−s₀}(ξ − ζ^s))`: a one-parameter diagonal solution
    /// of the left reflection equation for `l = 1`.
    pub fn sl2_left(params: &ModelParams, xi: C64) -> Result<Self> {
        Self::sl2_family(params, xi, ONE, params.s[1] as i32 - params.s[0] as i32)
    }

    /// `diag(ξq²ζ^s − 1, ζ^{s₀−s₁}(ξ − q²ζ^s))`: the left family at a shifted
    /// point, solving the right reflection equation for `l = 1`.
    pub fn sl2_right(params: &ModelParams, xi: C64) -> Result<Self> {
        Self::sl2_family(params, xi, params.q * params.q, params.s[0] as i32 - params.s[1] as i32)
    }

    fn sl2_family(params: &ModelParams, xi: C64, shift: C64, gauge: i32) -> Result<Self> {
        if params.l != 1 {
            return Err(Error::Unsupported("the closed-form diagonal family needs l = 1".into()));
        }
        Self::diagonal_shifted(params, vec![vec![-ONE, xi * shift], vec![xi, -shift]], vec![ONE], vec![0, gauge])
    }

    pub fn from_fn(dim: usize, f: impl Fn(C64) -> TensorOperator + Send + Sync + 'static) -> Self {
        BoundaryK::Function { dim, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        match self {
            BoundaryK::Identity { dim } | BoundaryK::Function { dim, .. } => *dim,
            BoundaryK::DiagonalRational { numerators, .. } => numerators.len(),
            BoundaryK::Sampled { samples } => samples.first().map_or(0, |(_, m)| m.side()),
        }
    }

    pub fn eval(&self, zeta: C64) -> Result<TensorOperator> {
        match self {
            BoundaryK::Identity { dim } => Ok(TensorOperator::identity(&[*dim])),
            BoundaryK::DiagonalRational { s, numerators, denominator, shifts } => {
                let x = zeta.powi(*s as i32);
                let d = poly(denominator, x);
                if d.norm() < 1e-14 {
                    return Err(Error::Pole(format!("K denominator vanishes at ζ = {zeta}")));
                }
                let diag: Vec<C64> =
                    numerators.iter().zip(shifts).map(|(p, &m)| zeta.powi(m) * poly(p, x) / d).collect();
                Ok(TensorOperator::diagonal(&diag))
            }
            BoundaryK::Sampled { samples } => match samples.as_slice() {
                [] => Err(Error::InvalidParams("sampled K-operator without samples".into())),
                [(_, m)] => Ok(m.clone()),
                _ => samples
                    .iter()
                    .find(|(z, _)| (z - zeta).norm() < 1e-12)
                    .map(|(_, m)| m.clone())
                    .ok_or_else(|| Error::Unsupported(format!("sampled K-operator has no sample at ζ = {zeta}"))),
            },
            BoundaryK::Function { f, .. } => Ok(f(zeta)),
        }
    }

    /// `dK/dζ`, analytic for the rational form and Richardson-refined central
    /// differences for closures.
    pub fn derivative(&self, zeta: C64) -> Result<TensorOperator> {
        match self {
            BoundaryK::Identity { dim } => Ok(TensorOperator::zeros(&[*dim])),
            BoundaryK::DiagonalRational { s, numerators, denominator, shifts } => {
                let sp = *s as i32;
                let x = zeta.powi(sp);
                let dx = zeta.powi(sp - 1) * sp as f64;
                let d = poly(denominator, x);
                if d.norm() < 1e-14 {
                    return Err(Error::Pole(format!("K denominator vanishes at ζ = {zeta}")));
                }
                let dd = poly_derivative(denominator, x);
                let diag: Vec<C64> = numerators
                    .iter()
                    .zip(shifts)
                    .map(|(p, &m)| {
                        let value = poly(p, x) / d;
                        let slope = (poly_derivative(p, x) * d - poly(p, x) * dd) / (d * d) * dx;
                        zeta.powi(m) * slope + zeta.powi(m - 1) * m as f64 * value
                    })
                    .collect();
                Ok(TensorOperator::diagonal(&diag))
            }
            BoundaryK::Sampled { samples } if samples.len() == 1 => Ok(TensorOperator::zeros(&[self.dim()])),
            BoundaryK::Sampled { .. } => {
                Err(Error::Unsupported("derivative of a K-operator known only at isolated points".into()))
            }
            BoundaryK::Function { .. } => {
                let central = |h: f64| -> Result<TensorOperator> {
                    let step = C64::new(h, 0.0);
                    Ok((&self.eval(zeta + step)? - &self.eval(zeta - step)?).scale(C64::new(0.5 / h, 0.0)))
                };
                let coarse = central(FD_STEP)?;
                let fine = central(FD_STEP / 2.0)?;
                Ok((&fine.scale(C64::new(4.0, 0.0)) - &coarse).scale(C64::new(1.0 / 3.0, 0.0)))
            }
        }
    }

    /// Whether the operator is a multiple of the identity at every probe point.
    pub fn is_scalar_at(&self, zetas: &[C64]) -> Result<bool> {
        for &z in zetas {
            let k = self.eval(z)?;
            let c = k.trace() / k.side() as f64;
            if k.distance(&TensorOperator::identity(k.dims()).scale(c)) > 1e-6 * k.norm().max(1e-300) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Coeff> for C64 {
    fn from(c: Coeff) -> C64 {
        match c {
            Coeff::Real(x) => C64::new(x, 0.0),
            Coeff::Complex([re, im]) => C64::new(re, im),
        }
    }
}

fn coeff(c: C64) -> Coeff {
    Coeff::Complex([c.re, c.im])
}

#[derive(Serialize, Deserialize)]
struct SampleFile {
    zeta: Option<[f64; 2]>,
    matrix: MatrixDump,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "form")]
enum KFileBody {
    #[serde(rename = "diagonal-rational")]
    DiagonalRational {
        coeffs: Vec<Vec<Coeff>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        denominator: Option<Vec<Coeff>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zeta_shifts: Option<Vec<i32>>,
    },
    #[serde(rename = "dense")]
    Dense { zeta_samples: Vec<SampleFile> },
}

#[derive(Serialize, Deserialize)]
struct KFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side: Option<BoundarySide>,
    #[serde(flatten)]
    body: KFileBody,
}

/// A K-operator read from or written to JSON, with its declared side.
#[derive(Clone, Debug)]
pub struct KDocument {
    pub side: Option<BoundarySide>,
    pub k: BoundaryK,
}

impl KDocument {
    pub fn from_json(text: &str, params: &ModelParams) -> Result<Self> {
        let file: KFile = serde_json::from_str(text)?;
        let k = match file.body {
            KFileBody::DiagonalRational { coeffs, denominator, zeta_shifts } => {
                let numerators = coeffs.into_iter().map(|row| row.into_iter().map(C64::from).collect()).collect();
                let denominator = denominator.map_or_else(|| vec![ONE], |d| d.into_iter().map(C64::from).collect());
                let shifts = zeta_shifts.unwrap_or_else(|| vec![0; params.dim()]);
                BoundaryK::diagonal_shifted(params, numerators, denominator, shifts)?
            }
            KFileBody::Dense { zeta_samples } => {
                if zeta_samples.is_empty() {
                    return Err(Error::InvalidParams("dense K-operator needs at least one sample".into()));
                }
                let mut samples = Vec::with_capacity(zeta_samples.len());
                for sample in zeta_samples {
                    let m = TensorOperator::from_dump(&sample.matrix)?;
                    if m.dims() != [params.dim()] {
                        return Err(Error::Dimension(format!(
                            "K sample has legs {:?}, expected [{}]",
                            m.dims(),
                            params.dim()
                        )));
                    }
                    let z = sample.zeta.map_or(ONE, |[re, im]| C64::new(re, im));
                    samples.push((z, m));
                }
                BoundaryK::Sampled { samples }
            }
        };
        Ok(Self { side: file.side, k })
    }

    pub fn load(path: &Path, params: &ModelParams) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, params)
    }

    pub fn to_json(&self) -> Result<String> {
        let body = match &self.k {
            BoundaryK::Identity { dim } => KFileBody::DiagonalRational {
                coeffs: (0..*dim).map(|_| vec![coeff(ONE)]).collect(),
                denominator: None,
                zeta_shifts: None,
            },
            BoundaryK::DiagonalRational { numerators, denominator, shifts, .. } => KFileBody::DiagonalRational {
                zeta_shifts: if shifts.iter().all(|&m| m == 0) { None } else { Some(shifts.clone()) },
                coeffs: numerators.iter().map(|row| row.iter().copied().map(coeff).collect()).collect(),
                denominator: if denominator.as_slice() == [ONE] {
                    None
                } else {
                    Some(denominator.iter().copied().map(coeff).collect())
                },
            },
            BoundaryK::Sampled { samples } => KFileBody::Dense {
                zeta_samples: samples
                    .iter()
                    .map(|(z, m)| SampleFile { zeta: Some([z.re, z.im]), matrix: m.to_dump() })
                    .collect(),
            },
            BoundaryK::Function { .. } => {
                return Err(Error::Unsupported("a closure-defined K-operator cannot be serialised".into()))
            }
        };
        Ok(serde_json::to_string_pretty(&KFile { side: self.side, body })?)
    }
}

/// Legs of `K^{(V_1 …)}` and `K^{(V_2 …)}` inside `[V_1, V_2, W…]`, where the
/// operator's first leg is auxiliary and any further legs are shared quantum spaces.
fn pair_layout(k1: &TensorOperator, k2: &TensorOperator) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if k1.dims() != k2.dims() {
        return Err(Error::Dimension("the two K-operators act on different spaces".into()));
    }
    let n = k1.dims()[0];
    let mut dims = vec![n, n];
    dims.extend_from_slice(&k1.dims()[1..]);
    let w = 3..=dims.len();
    let slots1 = std::iter::once(1).chain(w.clone()).collect();
    let slots2 = std::iter::once(2).chain(w).collect();
    Ok((slots1, slots2, dims))
}

/// The ordered product of local factors, each given with its legs.
fn local_product(factors: &[(&TensorOperator, &[usize])], dims: &[usize]) -> Result<TensorOperator> {
    factors.iter().rev().try_fold(TensorOperator::identity(dims), |acc, (m, slots)| local_left_mul(m, slots, &acc))
}

/// Left reflection equation residual for `K(ζ₁)`, `K(ζ₂)` given as operators:
/// `R₂₁(ζ₂⁻¹|ζ₁⁻¹) K₁(ζ₁) R₁₂(ζ₁|ζ₂⁻¹) K₂(ζ₂) − K₂(ζ₂) R₂₁(ζ₂|ζ₁⁻¹) K₁(ζ₁) R₁₂(ζ₁|ζ₂)`.
pub fn left_reflection_residual_ops(
    params: &ModelParams,
    k1: &TensorOperator,
    k2: &TensorOperator,
    zeta1: C64,
    zeta2: C64,
) -> Result<f64> {
    let (s1, s2, dims) = pair_layout(k1, k2)?;
    let ratio = r_matrix(params, zeta1 / zeta2)?;
    let product = r_matrix(params, zeta1 * zeta2)?;
    let lhs = local_product(&[(&ratio, &[2, 1]), (k1, &s1), (&product, &[1, 2]), (k2, &s2)], &dims)?;
    let rhs = local_product(&[(k2, &s2), (&product, &[2, 1]), (k1, &s1), (&ratio, &[1, 2])], &dims)?;
    Ok(lhs.distance(&rhs))
}

/// Right reflection equation residual:
/// `K₂ R̃₁₂(ζ₁|ζ₂⁻¹)⁻¹ K₁ R₂₁(ζ₂⁻¹|ζ₁⁻¹)⁻¹ − R₁₂(ζ₁|ζ₂)⁻¹ K₁ R̃₂₁(ζ₂|ζ₁⁻¹)⁻¹ K₂`.
pub fn right_reflection_residual_ops(
    params: &ModelParams,
    k1: &TensorOperator,
    k2: &TensorOperator,
    zeta1: C64,
    zeta2: C64,
) -> Result<f64> {
    let (s1, s2, dims) = pair_layout(k1, k2)?;
    let tilde = skew_inverse_tilde_inv(&r_matrix(params, zeta1 * zeta2)?)?;
    let inv = r_matrix(params, zeta1 / zeta2)?.inverse()?;
    let lhs = local_product(&[(k2, &s2), (&tilde, &[1, 2]), (k1, &s1), (&inv, &[2, 1])], &dims)?;
    let rhs = local_product(&[(&inv, &[1, 2]), (k1, &s1), (&tilde, &[2, 1]), (k2, &s2)], &dims)?;
    Ok(lhs.distance(&rhs))
}

/// Reflection residual of a K-operator on the given side, relative to
/// `‖K(ζ₁)‖·‖K(ζ₂)‖` so that the overall scale of `K` does not matter.
pub fn reflection_residual(
    params: &ModelParams,
    side: BoundarySide,
    k: &BoundaryK,
    zeta1: C64,
    zeta2: C64,
) -> Result<f64> {
    let k1 = k.eval(zeta1)?;
    let k2 = k.eval(zeta2)?;
    let scale = (k1.norm() * k2.norm()).max(1e-300);
    let raw = match side {
        BoundarySide::Left => left_reflection_residual_ops(params, &k1, &k2, zeta1, zeta2)?,
        BoundarySide::Right => right_reflection_residual_ops(params, &k1, &k2, zeta1, zeta2)?,
    };
    Ok(raw / scale)
}

pub fn reflection_residual_left(params: &ModelParams, k: &BoundaryK, zeta1: C64, zeta2: C64) -> Result<f64> {
    reflection_residual(params, BoundarySide::Left, k, zeta1, zeta2)
}

pub fn reflection_residual_right(params: &ModelParams, k: &BoundaryK, zeta1: C64, zeta2: C64) -> Result<f64> {
    reflection_residual(params, BoundarySide::Right, k, zeta1, zeta2)
}

/// Largest relative reflection residual over a list of spectral pairs.
pub fn max_reflection_residual(
    params: &ModelParams,
    side: BoundarySide,
    k: &BoundaryK,
    pairs: &[(C64, C64)],
) -> Result<f64> {
    pairs.iter().try_fold(0.0_f64, |acc, &(a, b)| Ok(acc.max(reflection_residual(params, side, k, a, b)?)))
}

/// Options for [`solve_diagonal_k`].
#[derive(Clone, Debug)]
pub struct DiagonalSolveOptions {
    /// Polynomial degree of each diagonal entry in `x = ζ^s`.
    pub degree: usize,
    /// Reject solutions proportional to the identity.
    pub nontrivial: bool,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Acceptance threshold on the relative residual.
    pub tolerance: f64,
    /// Exponents of the `ζ^{g_j}` factor on each entry; `None` uses [`grading_gauge`].
    pub shifts: Option<Vec<i32>>,
}

impl Default for DiagonalSolveOptions {
    fn default() -> Self {
        Self { degree: 1, nontrivial: true, seed: 7, restarts: 24, max_iterations: 200, tolerance: 1e-6, shifts: None }
    }
}

/// Result of a diagonal K-operator fit.
#[derive(Clone, Debug)]
pub struct DiagonalSolution {
    pub k: BoundaryK,
    /// Largest relative reflection residual over the fitting pairs and a
    /// held-out set of rotated pairs.
    pub residual: f64,
    /// Coefficients normalised to unit norm, entry-major.
    pub coefficients: Vec<C64>,
    pub restarts_used: usize,
}

/// Gauge exponents `g_j` with `ζ^{g_j}` matching the grading: `2s_{1j}` reduced
/// by the nearest multiple of `s`, negated on the right.
pub fn grading_gauge(params: &ModelParams, side: BoundarySide) -> Vec<i32> {
    let total = params.s_total() as i32;
    (1..=params.dim())
        .map(|j| {
            let raw = 2 * params.s_between(1, j) as i32;
            let g = raw - total * ((2 * raw + total).div_euclid(2 * total));
            match side {
                BoundarySide::Left => g,
                BoundarySide::Right => -g,
            }
        })
        .collect()
}

fn coeffs_to_k(params: &ModelParams, c: &DVector<C64>, degree: usize, shifts: &[i32]) -> BoundaryK {
    let n = params.dim();
    let numerators = (0..n).map(|i| (0..=degree).map(|d| c[i * (degree + 1) + d]).collect()).collect();
    BoundaryK::DiagonalRational { s: params.s_total(), numerators, denominator: vec![ONE], shifts: shifts.to_vec() }
}

/// Residual operator of the reflection equation with `K(ζ₁)` from `a` and `K(ζ₂)` from `b`.
fn bilinear_residual(
    params: &ModelParams,
    side: BoundarySide,
    a: &TensorOperator,
    b: &TensorOperator,
    zeta1: C64,
    zeta2: C64,
) -> Result<Vec<C64>> {
    let (s1, s2, dims) = pair_layout(a, b)?;
    let (k1, k2) = (embed(a, &s1, &dims)?, embed(b, &s2, &dims)?);
    let op = match side {
        BoundarySide::Left => {
            let r =
                |z: C64, slots: [usize; 2]| -> Result<TensorOperator> { embed(&r_matrix(params, z)?, &slots, &dims) };
            let lhs = &(&(&r(zeta1 / zeta2, [2, 1])? * &k1) * &r(zeta1 * zeta2, [1, 2])?) * &k2;
            let rhs = &(&(&k2 * &r(zeta2 * zeta1, [2, 1])?) * &k1) * &r(zeta1 / zeta2, [1, 2])?;
            &lhs - &rhs
        }
        BoundarySide::Right => {
            let place = |m: TensorOperator, slots: [usize; 2]| embed(&m, &slots, &dims);
            let tilde12 = place(skew_inverse_tilde_inv(&r_matrix(params, zeta1 * zeta2)?)?, [1, 2])?;
            let inv21 = place(r_matrix(params, zeta1 / zeta2)?.inverse()?, [2, 1])?;
            let inv12 = place(r_matrix(params, zeta1 / zeta2)?.inverse()?, [1, 2])?;
            let tilde21 = place(skew_inverse_tilde_inv(&r_matrix(params, zeta2 * zeta1)?)?, [2, 1])?;
            &(&(&(&k2 * &tilde12) * &k1) * &inv21) - &(&(&(&inv12 * &k1) * &tilde21) * &k2)
        }
    };
    Ok(op.matrix().iter().copied().collect())
}

/// Fits a diagonal K-operator with polynomial entries in `ζ^s` to the
/// reflection equation on the given spectral pairs.
///
/// The residual is bilinear in the coefficients, so a damped Gauss–Newton
/// iteration on the unit sphere is run from seeded random starts. The best
/// candidate is returned only if its relative residual is below the
/// tolerance (and, when requested, it is not a multiple of the identity).
pub fn solve_diagonal_k(
    params: &ModelParams,
    side: BoundarySide,
    pairs: &[(C64, C64)],
    options: &DiagonalSolveOptions,
) -> Result<DiagonalSolution> {
    if pairs.is_empty() {
        return Err(Error::InvalidParams("the fit needs at least one spectral pair".into()));
    }
    let n = params.dim();
    let shifts = options.shifts.clone().unwrap_or_else(|| grading_gauge(params, side));
    if shifts.len() != n {
        return Err(Error::Dimension(format!("{} gauge exponents for dimension {n}", shifts.len())));
    }
    let m = n * (options.degree + 1);
    let diag_at = |c: &DVector<C64>, zeta: C64| coeffs_to_k(params, c, options.degree, &shifts).eval(zeta);
    let held_out: Vec<(C64, C64)> =
        pairs.iter().map(|&(a, b)| (a * C64::from_polar(1.0, 0.5), b * C64::from_polar(1.0, -0.3))).collect();
    let unit = |a: usize| {
        let mut e = DVector::from_element(m, ZERO);
        e[a] = ONE;
        e
    };
    // The residual is B(c, c) with B bilinear; tabulate B on basis vectors once.
    let mut table: Vec<Vec<Vec<C64>>> = vec![vec![Vec::new(); m]; m];
    for &(z1, z2) in pairs {
        let first = (0..m).map(|a| diag_at(&unit(a), z1)).collect::<Result<Vec<_>>>()?;
        let second = (0..m).map(|b| diag_at(&unit(b), z2)).collect::<Result<Vec<_>>>()?;
        for a in 0..m {
            for b in 0..m {
                table[a][b].extend(bilinear_residual(params, side, &first[a], &second[b], z1, z2)?);
            }
        }
    }
    let rows = table[0][0].len();
    let evaluate = |c: &DVector<C64>| -> (DVector<C64>, DMatrix<C64>) {
        let mut r = DVector::from_element(rows, ZERO);
        let mut jac = DMatrix::from_element(rows, m, ZERO);
        for a in 0..m {
            for b in 0..m {
                let (ca, cb) = (c[a], c[b]);
                for (k, v) in table[a][b].iter().enumerate() {
                    r[k] += ca * cb * v;
                    jac[(k, a)] += cb * v;
                    jac[(k, b)] += ca * v;
                }
            }
        }
        (r, jac)
    };

    let probe: Vec<C64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(f64, DVector<C64>)> = None;
    let mut restarts_used = 0;
    for _ in 0..options.restarts.max(1) {
        restarts_used += 1;
        let mut c = DVector::from_fn(m, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        c /= C64::new(c.norm(), 0.0);
        let mut lambda = 1e-3;
        let (mut r, mut jac) = evaluate(&c);
        for _ in 0..options.max_iterations {
            let cost = r.norm();
            if cost < 1e-15 {
                break;
            }
            let jh = jac.adjoint();
            let normal = &jh * &jac;
            let rhs = -(&jh * &r);
            let scale = (0..m).map(|i| normal[(i, i)].re).fold(0.0, f64::max).max(1e-300);
            let mut improved = false;
            for _ in 0..12 {
                let damped = &normal + DMatrix::from_diagonal_element(m, m, C64::new(lambda * scale, 0.0));
                let Some(step) = damped.lu().solve(&rhs) else { break };
                let mut trial = &c + &step;
                trial /= C64::new(trial.norm(), 0.0);
                let (tr, tj) = evaluate(&trial);
                if tr.norm() < cost {
                    c = trial;
                    r = tr;
                    jac = tj;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        let candidate = coeffs_to_k(params, &c, options.degree, &shifts);
        if options.nontrivial && candidate.is_scalar_at(&probe)? {
            continue;
        }
        let residual = max_reflection_residual(params, side, &candidate, pairs)?
            .max(max_reflection_residual(params, side, &candidate, &held_out)?);
        if best.as_ref().is_none_or(|(b, _)| residual < *b) {
            best = Some((residual, c));
        }
        if residual < options.tolerance * 1e-3 {
            break;
        }
    }
    match best {
        Some((residual, c)) if residual <= options.tolerance => Ok(DiagonalSolution {
            k: coeffs_to_k(params, &c, options.degree, &shifts),
            residual,
            coefficients: c.iter().copied().collect(),
            restarts_used,
        }),
        Some((residual, _)) => Err(Error::NoSolution(format!(
            "best diagonal candidate of degree {} has residual {residual:.3e} above {:.1e}",
            options.degree, options.tolerance
        ))),
        None => Err(Error::NoSolution(format!("no non-scalar diagonal candidate of degree {} found", options.degree))),
    }
}

/// Dressed left operator `M(ζ⁻¹)⁻¹ K^L(ζ) M(ζ)` on `[V, W…]`.
pub fn dress_left(spec: &ChainSpec, k: &BoundaryK, zeta: C64) -> Result<TensorOperator> {
    let m_inv = monodromy_inverse(spec, zeta.inv())?;
    let dressed = local_right_mul(&m_inv, &k.eval(zeta)?, &[1])?;
    times_monodromy(spec, zeta, 1, &dressed)
}

/// Dressed right operator `((M(ζ⁻¹)⁻¹)^{t_V} K^R(ζ)^{t_V} M(ζ)^{t_V})^{t_V}` on `[V, W…]`.
pub fn dress_right(spec: &ChainSpec, k: &BoundaryK, zeta: C64) -> Result<TensorOperator> {
    let m_inv = partial_transpose(&monodromy_inverse(spec, zeta.inv())?, 1)?;
    let mut dressed = local_right_mul(&m_inv, &k.eval(zeta)?.transpose(), &[1])?;
    // The transposed monodromy is the product of transposed factors in reverse order.
    for (site, &eta) in spec.etas.iter().enumerate() {
        dressed =
            local_right_mul(&dressed, &partial_transpose(&r_matrix(&spec.params, zeta / eta)?, 1)?, &[1, site + 2])?;
    }
    partial_transpose(&dressed, 1)
}

/// Both dressed operators for a chain split into a right block `W^R` and a
/// left block `W^L`.
pub fn dress_k(
    right_block: Option<&ChainSpec>,
    left_block: Option<&ChainSpec>,
    pair: &BoundaryPair,
    zeta: C64,
) -> Result<(TensorOperator, TensorOperator)> {
    let left = match left_block {
        Some(spec) => dress_left(spec, &pair.left, zeta)?,
        None => pair.left.eval(zeta)?,
    };
    let right = match right_block {
        Some(spec) => dress_right(spec, &pair.right, zeta)?,
        None => pair.right.eval(zeta)?,
    };
    Ok((left, right))
}

/// Reflection residual of dressed operators, relative to the product of norms.
///
/// The quantum lines of a dressed right operator run against the auxiliary
/// line, so the right equation is checked on its transpose in the quantum legs.
pub fn dressed_reflection_residual(
    spec: &ChainSpec,
    side: BoundarySide,
    k: &BoundaryK,
    zeta1: C64,
    zeta2: C64,
) -> Result<f64> {
    let quantum_transpose = |m: TensorOperator| -> Result<TensorOperator> {
        (2..=m.legs()).try_fold(m, |acc, leg| partial_transpose(&acc, leg))
    };
    let dress = |z| match side {
        BoundarySide::Left => dress_left(spec, k, z),
        BoundarySide::Right => quantum_transpose(dress_right(spec, k, z)?),
    };
    let (k1, k2) = (dress(zeta1)?, dress(zeta2)?);
    let scale = (k1.norm() * k2.norm()).max(1e-300);
    let raw = match side {
        BoundarySide::Left => left_reflection_residual_ops(&spec.params, &k1, &k2, zeta1, zeta2)?,
        BoundarySide::Right => right_reflection_residual_ops(&spec.params, &k1, &k2, zeta1, zeta2)?,
    };
    Ok(raw / scale)
}

/// Left and right boundary operators of an open chain.
#[derive(Clone, Debug)]
pub struct BoundaryPair {
    pub left: BoundaryK,
    pub right: BoundaryK,
}

impl BoundaryPair {
    pub fn identity(params: &ModelParams) -> Self {
        Self { left: BoundaryK::identity(params), right: BoundaryK::identity(params) }
    }

    pub fn gauged_unit(params: &ModelParams) -> Self {
        Self {
            left: BoundaryK::gauged_unit(params, BoundarySide::Left),
            right: BoundaryK::gauged_unit(params, BoundarySide::Right),
        }
    }

    /// Largest relative residual of both reflection equations over the pairs.
    pub fn verify(&self, params: &ModelParams, pairs: &[(C64, C64)]) -> Result<f64> {
        Ok(max_reflection_residual(params, BoundarySide::Left, &self.left, pairs)?.max(max_reflection_residual(
            params,
            BoundarySide::Right,
            &self.right,
            pairs,
        )?))
    }
}

/// An open chain: the bulk chain plus its two boundaries.
#[derive(Clone, Debug)]
pub struct OpenChainSpec {
    pub chain: ChainSpec,
    pub boundary: BoundaryPair,
}

/// `T(ζ) = tr_V(K^R(ζ) M(ζ⁻¹)⁻¹ K^L(ζ) M(ζ))`.
pub fn open_transfer(spec: &OpenChainSpec, zeta: C64) -> Result<TensorOperator> {
    let m_inv = monodromy_inverse(&spec.chain, zeta.inv())?;
    let inner = local_right_mul(&m_inv, &spec.boundary.left.eval(zeta)?, &[1])?;
    let full = times_monodromy(&spec.chain, zeta, 1, &inner)?;
    partial_trace(&local_left_mul(&spec.boundary.right.eval(zeta)?, &[1], &full)?, 1)
}

/// `T(ζ) = tr_V(K^R_{V|W^R} K^L_{V|W^L})` with the first `split` sites dressing
/// the right boundary and the rest dressing the left one.
pub fn open_transfer_split(spec: &OpenChainSpec, zeta: C64, split: usize) -> Result<TensorOperator> {
    let n = spec.chain.sites;
    if split > n {
        return Err(Error::InvalidParams(format!("split point {split} beyond {n} sites")));
    }
    let block = |etas: &[C64]| -> Result<Option<ChainSpec>> {
        if etas.is_empty() {
            Ok(None)
        } else {
            ChainSpec::new(spec.chain.params.clone(), etas.to_vec()).map(Some)
        }
    };
    let right_block = block(&spec.chain.etas[..split])?;
    let left_block = block(&spec.chain.etas[split..])?;
    let (kl, kr) = dress_k(right_block.as_ref(), left_block.as_ref(), &spec.boundary, zeta)?;
    let dims = vec![spec.chain.params.dim(); n + 1];
    let right_slots: Vec<usize> = std::iter::once(1).chain(2..split + 2).collect();
    let left_slots: Vec<usize> = std::iter::once(1).chain(split + 2..n + 2).collect();
    let kr = embed(&kr, &right_slots, &dims)?;
    let kl = embed(&kl, &left_slots, &dims)?;
    partial_trace(&(&kr * &kl), 1)
}

/// `‖[T(ζ₁), T(ζ₂)]‖` for the open transfer operator, relative to `‖T(ζ₁)‖‖T(ζ₂)‖`.
pub fn open_transfer_commutator(spec: &OpenChainSpec, zeta1: C64, zeta2: C64) -> Result<f64> {
    let a = open_transfer(spec, zeta1)?;
    let b = open_transfer(spec, zeta2)?;
    Ok(a.commutator(&b).norm() / (a.norm() * b.norm()).max(1e-300))
}

/// Open-chain Hamiltonian `ζ d/dζ log T(ζ)|_{ζ=1}` assembled from the local
/// density and the boundary operators at `ζ = 1`.
pub fn open_hamiltonian(spec: &OpenChainSpec) -> Result<TensorOperator> {
    let chain = &spec.chain;
    if !chain.is_homogeneous() {
        return Err(Error::Unsupported("the open Hamiltonian needs a homogeneous chain".into()));
    }
    let n = chain.sites;
    if n < 2 {
        return Err(Error::InvalidParams("the open Hamiltonian needs at least two sites".into()));
    }
    let d = chain.params.dim();
    let dims = chain.quantum_dims();
    let h = local_density(&chain.params)?;
    let kr = spec.boundary.right.eval(ONE)?;
    let kr_prime = spec.boundary.right.derivative(ONE)?;
    let kl = spec.boundary.left.eval(ONE)?;
    let kl_inv = kl.inverse().map_err(|_| Error::Singular("K^L(1) is not invertible".into()))?;
    let kl_prime = spec.boundary.left.derivative(ONE)?;
    let tr = kr.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::Singular("tr K^R(1) vanishes".into()));
    }
    let id = TensorOperator::identity(&dims);
    let mut total = id.scale(kr_prime.trace() / tr);
    let edge = partial_trace(&(&h * &kron(&kr, &TensorOperator::identity(&[d]))), 1)?;
    total = &total + &embed(&edge, &[1], &dims)?.scale(C64::new(2.0, 0.0) / tr);
    for i in 1..n - 1 {
        total = &total + &embed(&h, &[i, i + 1], &dims)?.scale(C64::new(2.0, 0.0));
    }
    let last = embed(&h, &[n - 1, n], &dims)?;
    let kl_n = embed(&kl, &[n], &dims)?;
    let kl_inv_n = embed(&kl_inv, &[n], &dims)?;
    total = &total + &last;
    total = &total + &(&(&kl_n * &last) * &kl_inv_n);
    total = &total + &(&embed(&kl_prime, &[n], &dims)? * &kl_inv_n);
    Ok(total)
}

/// `T′(1) T(1)⁻¹` from a five-point central difference of the open transfer
/// operator along the real axis.
pub fn open_hamiltonian_numeric(spec: &OpenChainSpec, step: f64) -> Result<TensorOperator> {
    let t = |dz: f64| open_transfer(spec, C64::new(1.0 + dz, 0.0));
    let d = (&(&t(-2.0 * step)? - &t(2.0 * step)?) + &(&t(step)? - &t(-step)?).scale(C64::new(8.0, 0.0)))
        .scale(C64::new(1.0 / (12.0 * step), 0.0));
    Ok(&d * &t(0.0)?.inverse()?)
}
