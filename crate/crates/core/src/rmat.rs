//! The fundamental R-operator of `U_q(L(sl_{l+1}))`, its relatives, and the
//! residual checks built on them (Yang–Baxter, unitarity, crossing).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{f_series, ModelParams};
use crate::repkit::{double_dual_shift, x_operator};
use crate::tensorlab::{embed, kron, partial_transpose, swap_operator, TensorOperator, C64, ONE, ZERO};

/// Relative distance to a pole below which rational entries are refused.
const POLE_EPS: f64 = 1e-12;

fn guard(value: C64, what: &str) -> Result<C64> {
    if value.norm() < POLE_EPS {
        Err(Error::Pole(format!("{what} vanishes")))
    } else {
        Ok(value)
    }
}

fn e_pair(n: usize, a: (usize, usize), b: (usize, usize)) -> TensorOperator {
    kron(&TensorOperator::unit(n, a.0, a.1), &TensorOperator::unit(n, b.0, b.1))
}

/// `R(ζ)` with `ζ = ζ₁/ζ₂`, in the rational normalisation where
/// `E_ii ⊗ E_ii` has coefficient one.
pub fn r_matrix(params: &ModelParams, zeta: C64) -> Result<TensorOperator> {
    let n = params.dim();
    let q = params.q;
    let s = params.s_total() as i32;
    let x = zeta.powi(s);
    let den = guard(ONE - q * q * x, "1 − q²ζ^s")?;
    let b = q * (ONE - x) / den;
    let c = (ONE - q * q) / den;
    let mut r = TensorOperator::zeros(&[n, n]);
    let side = n;
    for i in 1..=n {
        for j in 1..=n {
            let diag_idx = (i - 1) * side + (j - 1);
            let cross_row = (i - 1) * side + (j - 1);
            let cross_col = (j - 1) * side + (i - 1);
            if i == j {
                r.set(diag_idx, diag_idx, ONE);
            } else {
                r.set(diag_idx, diag_idx, b);
                let power = if i < j { params.s_between(i, j) as i32 } else { s - params.s_between(j, i) as i32 };
                r.set(cross_row, cross_col, c * zeta.powi(power));
            }
        }
    }
    Ok(r)
}

/// `ζ d/dζ R(ζ)` from the closed form.
pub fn r_log_derivative(params: &ModelParams, zeta: C64) -> Result<TensorOperator> {
    let n = params.dim();
    let q = params.q;
    let s = params.s_total() as i32;
    let sf = s as f64;
    let x = zeta.powi(s);
    let den = guard(ONE - q * q * x, "1 − q²ζ^s")?;
    let db = x * q * (q * q - ONE) * sf / (den * den);
    let mut r = TensorOperator::zeros(&[n, n]);
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let diag_idx = (i - 1) * n + (j - 1);
            r.set(diag_idx, diag_idx, db);
            let power = if i < j { params.s_between(i, j) as i32 } else { s - params.s_between(j, i) as i32 };
            let zp = zeta.powi(power);
            let dc = (ONE - q * q) * zp * (C64::new(power as f64, 0.0) / den + q * q * x * sf / (den * den));
            r.set((i - 1) * n + (j - 1), (j - 1) * n + (i - 1), dc);
        }
    }
    Ok(r)
}

/// `R(ζ)` and the operators derived from it at one spectral point.
#[derive(Clone, Debug)]
pub struct ROperatorBundle {
    pub params: ModelParams,
    pub zeta12: C64,
    pub r: TensorOperator,
    pub r_inv: TensorOperator,
    /// `Ř = P R`.
    pub r_check: TensorOperator,
    /// Skew inverse `R̃⁻¹ = ((R^{t₂})⁻¹)^{t₂}`; `None` where `R^{t₂}` is
    /// singular, as at `ζ₁ = ζ₂`.
    pub tilde_r_inv: Option<TensorOperator>,
    /// `R̃̃ = (((R⁻¹)^{t₁})⁻¹)^{t₁}`, `None` where it does not exist.
    pub dtilde_r: Option<TensorOperator>,
}

pub fn r_fund(params: &ModelParams, zeta1: C64, zeta2: C64) -> Result<ROperatorBundle> {
    let zeta12 = zeta1 / zeta2;
    let r = r_matrix(params, zeta12)?;
    let r_inv = r.inverse()?;
    let r_check = &swap_operator(params.dim()) * &r;
    let tilde_r_inv = skew_inverse_tilde_inv(&r).ok();
    let dtilde_r = skew_inverse_dtilde(&r_inv).ok();
    Ok(ROperatorBundle { params: params.clone(), zeta12, r, r_inv, r_check, tilde_r_inv, dtilde_r })
}

/// `R̃⁻¹` through the `t₂` route.
pub fn skew_inverse_tilde_inv(r: &TensorOperator) -> Result<TensorOperator> {
    let t = partial_transpose(r, 2)?;
    let inv = t.inverse().map_err(|_| Error::Singular("R^{t₂} is not invertible".into()))?;
    partial_transpose(&inv, 2)
}

/// `R̃⁻¹` through the `t₁` route.
pub fn skew_inverse_tilde_inv_t1(r: &TensorOperator) -> Result<TensorOperator> {
    let t = partial_transpose(r, 1)?;
    let inv = t.inverse().map_err(|_| Error::Singular("R^{t₁} is not invertible".into()))?;
    partial_transpose(&inv, 1)
}

/// `R̃̃` from `R⁻¹`.
pub fn skew_inverse_dtilde(r_inv: &TensorOperator) -> Result<TensorOperator> {
    let t = partial_transpose(r_inv, 1)?;
    let inv = t.inverse().map_err(|_| Error::Singular("(R⁻¹)^{t₁} is not invertible".into()))?;
    partial_transpose(&inv, 1)
}

/// Residuals of the four defining identities of the skew inverses and the
/// agreement of the two `R̃⁻¹` routes.
#[derive(Clone, Debug, Serialize)]
pub struct SkewInverseReport {
    pub tilde_left: f64,
    pub tilde_right: f64,
    pub dtilde_left: f64,
    pub dtilde_right: f64,
    pub route_agreement: f64,
}

impl SkewInverseReport {
    pub fn max(&self) -> f64 {
        self.tilde_left.max(self.tilde_right).max(self.dtilde_left).max(self.dtilde_right).max(self.route_agreement)
    }
}

pub fn skew_inverse_residuals(bundle: &ROperatorBundle) -> Result<SkewInverseReport> {
    let missing = || Error::Singular(format!("no skew inverse at ζ₁/ζ₂ = {}", bundle.zeta12));
    let tilde_r_inv = bundle.tilde_r_inv.as_ref().ok_or_else(missing)?;
    let dtilde_r = bundle.dtilde_r.as_ref().ok_or_else(missing)?;
    let id = TensorOperator::identity(bundle.r.dims());
    let rt1 = partial_transpose(&bundle.r, 1)?;
    let tt1 = partial_transpose(tilde_r_inv, 1)?;
    let rit1 = partial_transpose(&bundle.r_inv, 1)?;
    let dt1 = partial_transpose(dtilde_r, 1)?;
    let t1_route = skew_inverse_tilde_inv_t1(&bundle.r)?;
    Ok(SkewInverseReport {
        tilde_left: (&tt1 * &rt1).distance(&id),
        tilde_right: (&rt1 * &tt1).distance(&id),
        dtilde_left: (&dt1 * &rit1).distance(&id),
        dtilde_right: (&rit1 * &dt1).distance(&id),
        route_agreement: t1_route.distance(tilde_r_inv),
    })
}

/// Normalisation `ρ(ζ) = q^{−l/(l+1)} exp(F_{l+1}(q^{−l}ζ^s) − F_{l+1}(q^l ζ^s))`.
pub fn rho_norm(params: &ModelParams, zeta12: C64, order: usize) -> Result<C64> {
    let l = params.l as i32;
    let m = params.l as u32 + 1;
    let x = params.zeta_s(zeta12);
    let a = f_series(m, params.q_int(-l) * x, params.q, order)?;
    let b = f_series(m, params.q_int(l) * x, params.q, order)?;
    Ok(params.q_pow(-(l as f64) / (l as f64 + 1.0)) * (a - b).exp())
}

/// The Cartan factor `K_{V|V}`.
pub fn cartan_factor(params: &ModelParams) -> TensorOperator {
    let n = params.dim();
    let mut k = TensorOperator::zeros(&[n, n]);
    let scale = params.q_pow(-(params.l as f64) / (params.l as f64 + 1.0));
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { ONE } else { params.q };
            k.set(i * n + j, i * n + j, v * scale);
        }
    }
    k
}

fn root_factor(params: &ModelParams, zeta12: C64, positive: bool) -> Result<TensorOperator> {
    let n = params.dim();
    let s = params.s_total() as i32;
    let x = zeta12.powi(s);
    let pre = params.kappa() / guard(ONE - x, "1 − ζ^s")?;
    let mut f = TensorOperator::identity(&[n, n]);
    for i in 1..=n {
        for j in 1..=n {
            let take = if positive { i < j } else { i > j };
            if !take {
                continue;
            }
            let power = if positive { params.s_between(i, j) as i32 } else { s - params.s_between(j, i) as i32 };
            let term = e_pair(n, (i, j), (j, i)).scale(pre * zeta12.powi(power));
            f = &f - &term;
        }
    }
    Ok(f)
}

/// Factor from the positive real roots.
pub fn positive_root_factor(params: &ModelParams, zeta12: C64) -> Result<TensorOperator> {
    root_factor(params, zeta12, true)
}

/// Factor from the negative real roots shifted by the imaginary root.
pub fn negative_root_factor(params: &ModelParams, zeta12: C64) -> Result<TensorOperator> {
    root_factor(params, zeta12, false)
}

/// Factor from the imaginary roots; needs the `F_{l+1}` series.
pub fn imaginary_root_factor(params: &ModelParams, zeta12: C64, order: usize) -> Result<TensorOperator> {
    let n = params.dim();
    let l = params.l as i32;
    let q = params.q;
    let m = params.l as u32 + 1;
    let x = params.zeta_s(zeta12);
    let pref = (f_series(m, params.q_int(-l) * x, q, order)? - f_series(m, params.q_int(l) * x, q, order)?).exp();
    let lower = (ONE - x / (q * q)) / guard(ONE - x, "1 − ζ^s")?;
    let upper = (ONE - x) / guard(ONE - q * q * x, "1 − q²ζ^s")?;
    let mut f = TensorOperator::zeros(&[n, n]);
    for i in 0..n {
        for j in 0..n {
            let v = match i.cmp(&j) {
                std::cmp::Ordering::Equal => ONE,
                std::cmp::Ordering::Less => lower,
                std::cmp::Ordering::Greater => upper,
            };
            f.set(i * n + j, i * n + j, v * pref);
        }
    }
    Ok(f)
}

/// Ordered product of the factorised universal R-matrix image; equals `ρ(ζ)·R(ζ)`.
pub fn factorized_r(params: &ModelParams, zeta12: C64, order: usize) -> Result<TensorOperator> {
    let a = positive_root_factor(params, zeta12)?;
    let b = imaginary_root_factor(params, zeta12, order)?;
    let c = negative_root_factor(params, zeta12)?;
    let k = cartan_factor(params);
    Ok(&(&(&a * &b) * &c) * &k)
}

/// Frobenius residual of `R₁₂R₁₃R₂₃ − R₂₃R₁₃R₁₂`.
pub fn ybe_residual(params: &ModelParams, zeta1: C64, zeta2: C64, zeta3: C64) -> Result<f64> {
    let d = [params.dim(); 3];
    let r12 = embed(&r_matrix(params, zeta1 / zeta2)?, &[1, 2], &d)?;
    let r13 = embed(&r_matrix(params, zeta1 / zeta3)?, &[1, 3], &d)?;
    let r23 = embed(&r_matrix(params, zeta2 / zeta3)?, &[2, 3], &d)?;
    let lhs = &(&r12 * &r13) * &r23;
    let rhs = &(&r23 * &r13) * &r12;
    Ok(lhs.distance(&rhs))
}

/// Residuals of the rearranged Yang–Baxter equations.
#[derive(Clone, Debug, Serialize)]
pub struct YbeVariantReport {
    /// Inverse-conjugated form.
    pub inverse: f64,
    /// Partial transpose in the first space with `R̃⁻¹`.
    pub transpose_first: f64,
    /// Partial transpose in the last space with `R̃⁻¹`.
    pub transpose_last: f64,
}

impl YbeVariantReport {
    pub fn max(&self) -> f64 {
        self.inverse.max(self.transpose_first).max(self.transpose_last)
    }
}

pub fn ybe_variant_residuals(params: &ModelParams, zetas: [C64; 3]) -> Result<YbeVariantReport> {
    let [z1, z2, z3] = zetas;
    let d = [params.dim(); 3];
    let r12 = r_matrix(params, z1 / z2)?;
    let r13 = r_matrix(params, z1 / z3)?;
    let r23 = r_matrix(params, z2 / z3)?;
    let e12 = embed(&r12, &[1, 2], &d)?;
    let e13 = embed(&r13, &[1, 3], &d)?;
    let e23 = embed(&r23, &[2, 3], &d)?;
    let e12_inv = embed(&r12.inverse()?, &[1, 2], &d)?;
    let inverse = (&(&e13 * &e23) * &e12_inv).distance(&(&(&e12_inv * &e23) * &e13));

    let tilde13 = skew_inverse_tilde_inv(&r13)?;
    let r12_t1 = embed(&partial_transpose(&r12, 1)?, &[1, 2], &d)?;
    let tilde13_t1 = embed(&partial_transpose(&tilde13, 1)?, &[1, 3], &d)?;
    let transpose_first = (&(&r12_t1 * &e23) * &tilde13_t1).distance(&(&(&tilde13_t1 * &e23) * &r12_t1));

    let r23_t2 = embed(&partial_transpose(&r23, 2)?, &[2, 3], &d)?;
    let tilde13_t2 = embed(&partial_transpose(&tilde13, 2)?, &[1, 3], &d)?;
    let transpose_last = (&(&tilde13_t2 * &e12) * &r23_t2).distance(&(&(&r23_t2 * &e12) * &tilde13_t2));

    Ok(YbeVariantReport { inverse, transpose_first, transpose_last })
}

/// Outcome of the unitarity product `Ř(ζ₂|ζ₁) Ř(ζ₁|ζ₂) = C·1`.
#[derive(Clone, Debug, Serialize)]
pub struct UnitarityResult {
    /// `C(ζ₁|ζ₂)` read off as the mean diagonal entry.
    pub c: C64,
    /// Frobenius norm of the product minus `C·1`.
    pub off_norm: f64,
    /// `|C(ζ₁|ζ₂) − C(ζ₂|ζ₁)|`.
    pub symmetry: f64,
}

fn scalar_part(m: &TensorOperator) -> (C64, f64) {
    let c = m.trace() / m.side() as f64;
    let id = TensorOperator::identity(m.dims()).scale(c);
    (c, m.distance(&id))
}

pub fn unitarity(params: &ModelParams, zeta1: C64, zeta2: C64) -> Result<UnitarityResult> {
    let p = swap_operator(params.dim());
    let forward = &p * &r_matrix(params, zeta1 / zeta2)?;
    let backward = &p * &r_matrix(params, zeta2 / zeta1)?;
    let (c, off1) = scalar_part(&(&backward * &forward));
    let (c_rev, off2) = scalar_part(&(&forward * &backward));
    Ok(UnitarityResult { c, off_norm: off1.max(off2), symmetry: (c - c_rev).norm() })
}

/// Unitarity with the forward operator obtained from the factorised universal
/// R-matrix image divided by the truncated normalisation `ρ`.
///
/// The series only converges for small `|ζ^s|`, so the backward operator
/// `Ř(ζ₂|ζ₁)` is taken in closed form.
pub fn normalized_unitarity(params: &ModelParams, zeta1: C64, zeta2: C64, order: usize) -> Result<UnitarityResult> {
    let p = swap_operator(params.dim());
    let zeta12 = zeta1 / zeta2;
    let rho = rho_norm(params, zeta12, order)?;
    let forward = &p * &factorized_r(params, zeta12, order)?.scale(rho.inv());
    let backward = &p * &r_matrix(params, zeta2 / zeta1)?;
    let (c, off1) = scalar_part(&(&backward * &forward));
    let (c_rev, off2) = scalar_part(&(&forward * &backward));
    Ok(UnitarityResult { c, off_norm: off1.max(off2), symmetry: (c - c_rev).norm() })
}

/// Crossing coefficient: `D₋` for the relations through `R` at the shifted
/// point (`upper = false`), `D₊` for those through `R⁻¹` (`upper = true`).
pub fn crossing_coefficient(params: &ModelParams, zeta12: C64, upper: bool) -> Result<C64> {
    let l = params.l as i32;
    let x = params.zeta_s(zeta12);
    let sign = if upper { 1 } else { -1 };
    let num = (ONE - params.q_int(2 * sign) * x) * (ONE - params.q_int(2 * l * sign) * x);
    let den = guard(ONE - x, "1 − ζ^s")? * guard(ONE - params.q_int((2 * l + 2) * sign) * x, "1 − q^{±(2l+2)}ζ^s")?;
    Ok(num / den)
}

/// Residuals of the crossing relations at one point.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingReport {
    /// Mixed Yang–Baxter residuals for the dual R-operators defined through
    /// partial transposes and inverses, keyed by relation name.
    pub dual_ybe: Vec<(String, f64)>,
    /// Residuals of the four explicit crossing relations with rational `D`.
    pub explicit: Vec<(String, f64)>,
    /// Double-dual proportionality: spread of the entrywise ratio.
    pub double_dual_spread: f64,
    /// Measured proportionality constant.
    pub double_dual_constant: C64,
}

impl CrossingReport {
    pub fn max(&self) -> f64 {
        self.dual_ybe.iter().chain(self.explicit.iter()).map(|(_, v)| *v).fold(self.double_dual_spread, f64::max)
    }
}

/// Entrywise ratio `a / b` over the entries where `b` is not negligible; returns
/// the mean ratio and the largest relative deviation from it. Entries where
/// `b` vanishes must vanish in `a` too.
pub fn proportionality(a: &TensorOperator, b: &TensorOperator) -> (C64, f64) {
    let scale = b.max_abs();
    let mut ratios = Vec::new();
    let mut stray: f64 = 0.0;
    for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
        if y.norm() > 1e-9 * scale {
            ratios.push(x / y);
        } else {
            stray = stray.max(x.norm());
        }
    }
    if ratios.is_empty() {
        return (ZERO, f64::INFINITY);
    }
    let mean = ratios.iter().sum::<C64>() / ratios.len() as f64;
    let spread = ratios.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max) / mean.norm();
    (mean, spread.max(stray / (mean.norm() * scale)))
}

fn mixed_ybe(a: &TensorOperator, b: &TensorOperator, c: &TensorOperator) -> Result<f64> {
    let d: Vec<usize> = vec![a.dims()[0], a.dims()[1], c.dims()[1]];
    let e12 = embed(a, &[1, 2], &d)?;
    let e13 = embed(b, &[1, 3], &d)?;
    let e23 = embed(c, &[2, 3], &d)?;
    Ok((&(&e12 * &e13) * &e23).distance(&(&(&e23 * &e13) * &e12)))
}

pub fn crossing_suite(params: &ModelParams, zeta1: C64, zeta2: C64) -> Result<CrossingReport> {
    let n = params.dim();
    let z12 = zeta1 / zeta2;
    let r = |z: C64| r_matrix(params, z);
    let star_left_first = |z: C64| -> Result<TensorOperator> { partial_transpose(&r(z)?.inverse()?, 1) };
    let star_right_second = |z: C64| -> Result<TensorOperator> { partial_transpose(&r(z)?.inverse()?, 2) };
    let lstar_first = |z: C64| -> Result<TensorOperator> { partial_transpose(&r(z)?, 1)?.inverse() };
    let rstar_second = |z: C64| -> Result<TensorOperator> { partial_transpose(&r(z)?, 2)?.inverse() };
    let full_t = |z: C64| -> Result<TensorOperator> { Ok(r(z)?.transpose()) };

    let z3 = zeta2 * C64::new(0.83, 0.41);
    let (a, b, c) = (zeta1 / zeta2, zeta1 / z3, zeta2 / z3);
    let dual_ybe = vec![
        ("dual-first-space".to_string(), mixed_ybe(&star_left_first(a)?, &star_left_first(b)?, &r(c)?)?),
        ("leftdual-second-space".to_string(), mixed_ybe(&star_right_second(a)?, &r(b)?, &lstar_first(c)?)?),
        ("leftdual-first-space".to_string(), mixed_ybe(&lstar_first(a)?, &lstar_first(b)?, &r(c)?)?),
        ("dual-second-space".to_string(), mixed_ybe(&rstar_second(a)?, &r(b)?, &star_left_first(c)?)?),
        ("dual-both-spaces".to_string(), mixed_ybe(&full_t(a)?, &full_t(b)?, &full_t(c)?)?),
    ];

    let x = x_operator(params).matrix;
    let xi = x.inverse()?;
    let id = TensorOperator::identity(&[n]);
    let sh = double_dual_shift(params);
    let dm = crossing_coefficient(params, z12, false)?;
    let dp = crossing_coefficient(params, z12, true)?;
    let x1 = kron(&x, &id);
    let xi1 = kron(&xi, &id);
    let x2 = kron(&id, &x);
    let xi2 = kron(&id, &xi);

    let lhs_ix = star_left_first(z12)?.inverse()?;
    let rhs_ix = (&(&xi1 * &partial_transpose(&r(sh * z12)?, 1)?) * &x1).scale(dm);
    let lhs_x = star_right_second(z12)?.inverse()?;
    let rhs_x = (&(&x2 * &partial_transpose(&r(z12 * sh)?, 2)?) * &xi2).scale(dm);
    let lhs_xi = partial_transpose(&lstar_first(z12)?, 1)?;
    let rhs_xi = (&(&xi1 * &r(z12 / sh)?.inverse()?) * &x1).scale(dp);
    let lhs_xii = partial_transpose(&rstar_second(z12)?, 2)?;
    let rhs_xii = (&(&x2 * &r(z12 / sh)?.inverse()?) * &xi2).scale(dp);
    let explicit = vec![
        ("crossing-dual-first".to_string(), lhs_ix.distance(&rhs_ix)),
        ("crossing-leftdual-second".to_string(), lhs_x.distance(&rhs_x)),
        ("crossing-leftdual-first".to_string(), lhs_xi.distance(&rhs_xi)),
        ("crossing-dual-second".to_string(), lhs_xii.distance(&rhs_xii)),
    ];

    let dtilde = skew_inverse_dtilde(&r(z12)?.inverse()?)?;
    let target = &(&x1 * &r(sh * z12)?) * &xi1;
    let (constant, spread) = proportionality(&dtilde, &target);
    Ok(CrossingReport { dual_ybe, explicit, double_dual_spread: spread, double_dual_constant: constant })
}

/// `𝕆 = −q^{1−2s₁/s} E₁₂ + E₂₁` for `l = 1`.
pub fn sl2_intertwiner(params: &ModelParams) -> TensorOperator {
    let expo = 1.0 - 2.0 * params.s[1] as f64 / params.s_total() as f64;
    &TensorOperator::unit(2, 1, 2).scale(-params.q_pow(expo)) + &TensorOperator::unit(2, 2, 1)
}

/// Residuals of the four extra crossing relations available for `l = 1`.
pub fn sl2_extra_crossing(params: &ModelParams, zeta1: C64, zeta2: C64) -> Result<Vec<(String, f64)>> {
    if params.l != 1 {
        return Err(Error::Unsupported(format!("extra crossing relations need l = 1, got l = {}", params.l)));
    }
    let s = params.s_total() as f64;
    let q = params.q;
    let z12 = zeta1 / zeta2;
    let x = params.zeta_s(z12);
    let sh2 = params.q_pow(2.0 / s);
    let o = sl2_intertwiner(params);
    let ot = o.transpose();
    let id = TensorOperator::identity(&[2]);
    let small = q.inv() * (ONE - x) / guard(ONE - x / (q * q), "1 − q⁻²ζ^s")?;
    let large = q.inv() * (ONE - q * q * x) / guard(ONE - x, "1 − ζ^s")?;
    let r = r_matrix(params, z12)?;
    let r_inv = r.inverse()?;
    let conj = |m: &TensorOperator, c: &TensorOperator| -> Result<TensorOperator> { Ok(&(c * m) * &c.inverse()?) };

    let rel1 =
        partial_transpose(&r_inv, 1)?.distance(&conj(&r_matrix(params, z12 / sh2)?, &kron(&o, &id))?.scale(small));
    let rel2 = partial_transpose(&r_inv, 2)?
        .distance(&conj(&r_matrix(params, z12 / sh2)?, &kron(&id, &ot).inverse()?)?.scale(small));
    let rel3 = partial_transpose(&r, 1)?
        .inverse()?
        .distance(&conj(&r_matrix(params, z12 * sh2)?, &kron(&ot, &id).inverse()?)?.scale(large));
    let rel4 = partial_transpose(&r, 2)?
        .inverse()?
        .distance(&conj(&r_matrix(params, z12 * sh2)?, &kron(&id, &o))?.scale(large));
    Ok(vec![
        ("inverse-t1".to_string(), rel1),
        ("inverse-t2".to_string(), rel2),
        ("t1-inverse".to_string(), rel3),
        ("t2-inverse".to_string(), rel4),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_at_coinciding_points_is_the_flip() {
        for l in 1..=3 {
            let p = ModelParams::homogeneous(l, C64::new(0.7, 0.0));
            let b = r_fund(&p, C64::new(1.3, 0.2), C64::new(1.3, 0.2)).unwrap();
            assert_eq!(b.r, swap_operator(l + 1));
            assert_eq!(b.r_check, TensorOperator::identity(&[l + 1, l + 1]));
            assert!(b.tilde_r_inv.is_none());
        }
    }

    #[test]
    fn pole_is_reported() {
        let p = ModelParams::homogeneous(1, C64::new(0.5, 0.0));
        assert!(matches!(r_matrix(&p, C64::new(2.0, 0.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn sl2_entries() {
        let q = C64::new(0.6, 0.0);
        let z = C64::new(0.9, 0.3);
        let p = ModelParams::homogeneous(1, q);
        let r = r_matrix(&p, z).unwrap();
        let x = z * z;
        let b = q * (ONE - x) / (ONE - q * q * x);
        let c = (ONE - q * q) * z / (ONE - q * q * x);
        assert_eq!(r.get(0, 0), ONE);
        assert_eq!(r.get(3, 3), ONE);
        assert!((r.get(1, 1) - b).norm() < 1e-15);
        assert!((r.get(2, 2) - b).norm() < 1e-15);
        assert!((r.get(1, 2) - c).norm() < 1e-15);
        assert!((r.get(2, 1) - c).norm() < 1e-15);
    }

    #[test]
    fn extra_crossing_needs_sl2() {
        let p = ModelParams::homogeneous(2, C64::new(0.6, 0.0));
        assert!(sl2_extra_crossing(&p, ONE, C64::new(0.7, 0.1)).is_err());
    }
}
