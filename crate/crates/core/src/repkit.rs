//! The `(l+1)`-dimensional representations of `U_q(L(sl_{l+1}))` used by the
//! integrability objects, their duals, and the operators relating them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::qcore::{q_factorial, ModelParams};
use crate::tensorlab::{TensorOperator, C64, ONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepLabel {
    Phi,
    PhiBar,
    PhiStar,
    StarPhi,
    /// Anything obtained by further dualisation or conjugation.
    Derived,
}

impl FromStr for RepLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(Self::Phi),
            "phibar" => Ok(Self::PhiBar),
            "phi*" => Ok(Self::PhiStar),
            "*phi" => Ok(Self::StarPhi),
            other => Err(Error::Unsupported(format!("unknown representation label '{other}'"))),
        }
    }
}

impl fmt::Display for RepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Phi => "phi",
            Self::PhiBar => "phibar",
            Self::PhiStar => "phi*",
            Self::StarPhi => "*phi",
            Self::Derived => "derived",
        };
        f.write_str(s)
    }
}

/// Which dual: `φ*(a) = φ(S(a))ᵗ` or `*φ(a) = φ(S⁻¹(a))ᵗ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DualSide {
    Right,
    Left,
}

/// Generator images of a finite-dimensional representation at a fixed
/// spectral parameter.
///
/// Cartan generators act diagonally: `q^{νh_i} v_k = q^{ν w_i(k)} v_k` with
/// integer weights `w_i(k)`.
#[derive(Clone, Debug)]
pub struct Representation {
    pub params: ModelParams,
    pub label: RepLabel,
    pub zeta: C64,
    e: Vec<TensorOperator>,
    f: Vec<TensorOperator>,
    weights: Vec<Vec<i32>>,
}

impl Representation {
    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn e(&self, i: usize) -> &TensorOperator {
        &self.e[i]
    }

    pub fn f(&self, i: usize) -> &TensorOperator {
        &self.f[i]
    }

    pub fn weights(&self, i: usize) -> &[i32] {
        &self.weights[i]
    }

    /// Image of `q^{νh_i}`.
    pub fn cartan(&self, i: usize, nu: f64) -> TensorOperator {
        let diag: Vec<C64> = self.weights[i].iter().map(|&w| self.params.q_pow(nu * w as f64)).collect();
        TensorOperator::diagonal(&diag)
    }

    /// Image of `q^{k h_i}` for integer `k`, computed with integer powers of `q`.
    pub fn cartan_int(&self, i: usize, k: i32) -> TensorOperator {
        let diag: Vec<C64> = self.weights[i].iter().map(|&w| self.params.q_int(k * w)).collect();
        TensorOperator::diagonal(&diag)
    }

    /// Replace the image of `e_i`; used to build deliberately broken inputs.
    pub fn set_e(&mut self, i: usize, op: TensorOperator) {
        self.e[i] = op;
        self.label = RepLabel::Derived;
    }

    /// Conjugate every generator image: `a ↦ c a c⁻¹`.
    ///
    /// `c` must be monomial (one nonzero entry per row and column) so that the
    /// Cartan images stay diagonal; the weights are permuted accordingly.
    pub fn conjugated(&self, c: &TensorOperator) -> Result<Self> {
        let n = self.dim();
        let mut source = vec![usize::MAX; n];
        for i in 0..n {
            let cols: Vec<usize> = (0..n).filter(|&j| c.get(i, j) != C64::new(0.0, 0.0)).collect();
            match cols.as_slice() {
                [j] if source.iter().all(|k| k != j) => source[i] = *j,
                _ => return Err(Error::Unsupported("conjugation by a non-monomial operator".into())),
            }
        }
        let ci = c.inverse()?;
        let conj = |m: &TensorOperator| &(c * m) * &ci;
        let weights = self.weights.iter().map(|w| source.iter().map(|&j| w[j]).collect()).collect();
        Ok(Self {
            params: self.params.clone(),
            label: RepLabel::Derived,
            zeta: self.zeta,
            e: self.e.iter().map(conj).collect(),
            f: self.f.iter().map(conj).collect(),
            weights,
        })
    }

    /// Largest entrywise deviation between the generator images of two
    /// representations of the same dimension.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..=self.params.l {
            dev = dev.max(self.e[i].max_abs_diff(&other.e[i]));
            dev = dev.max(self.f[i].max_abs_diff(&other.f[i]));
            for nu in [1.0, 0.37] {
                dev = dev.max(self.cartan(i, nu).max_abs_diff(&other.cartan(i, nu)));
            }
        }
        dev
    }

    /// True if all generator images agree bit for bit.
    pub fn same_images(&self, other: &Self) -> bool {
        self.e == other.e && self.f == other.f && self.weights == other.weights
    }
}

fn unit(n: usize, i: usize, j: usize, c: C64) -> TensorOperator {
    TensorOperator::unit(n, i, j).scale(c)
}

fn zeta_pow(zeta: C64, s: u32) -> C64 {
    zeta.powi(s as i32)
}

/// `z · (q^k · sign)`, the single evaluation order shared by the closed-form
/// tables and the Jimbo images.
fn scaled(z: C64, params: &ModelParams, k: i32, sign: f64) -> C64 {
    z * (params.q_int(k) * sign)
}

/// `φ_ζ`: the first fundamental representation pulled back through Jimbo's map.
pub fn phi_rep(params: &ModelParams, zeta: C64) -> Representation {
    let l = params.l;
    let n = l + 1;
    let mut e = vec![unit(n, l + 1, 1, scaled(zeta_pow(zeta, params.s[0]), params, 1, 1.0))];
    let mut f = vec![unit(n, 1, l + 1, scaled(zeta_pow(zeta, params.s[0]).inv(), params, -1, 1.0))];
    let mut weights = Vec::with_capacity(n);
    let mut w0 = vec![0; n];
    w0[0] = -1;
    w0[l] += 1;
    weights.push(w0);
    for i in 1..=l {
        e.push(unit(n, i, i + 1, zeta_pow(zeta, params.s[i])));
        f.push(unit(n, i + 1, i, zeta_pow(zeta, params.s[i]).inv()));
        let mut w = vec![0; n];
        w[i - 1] = 1;
        w[i] = -1;
        weights.push(w);
    }
    Representation { params: params.clone(), label: RepLabel::Phi, zeta, e, f, weights }
}

/// `φ̄_ζ`: the last fundamental representation pulled back through Jimbo's map.
pub fn phibar_rep(params: &ModelParams, zeta: C64) -> Representation {
    let l = params.l;
    let n = l + 1;
    let sign = if (l - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    let z0 = zeta_pow(zeta, params.s[0]);
    let mut e = vec![unit(n, l + 1, 1, scaled(z0, params, 2 - l as i32, sign))];
    let mut f = vec![unit(n, 1, l + 1, scaled(z0.inv(), params, l as i32 - 2, sign))];
    let mut weights = Vec::with_capacity(n);
    let mut w0 = vec![0; n];
    w0[0] = -1;
    w0[l] += 1;
    weights.push(w0);
    for i in 1..=l {
        e.push(unit(n, l - i + 1, l - i + 2, zeta_pow(zeta, params.s[i])));
        f.push(unit(n, l - i + 2, l - i + 1, zeta_pow(zeta, params.s[i]).inv()));
        let mut w = vec![0; n];
        w[l - i] = 1;
        w[l - i + 1] = -1;
        weights.push(w);
    }
    Representation { params: params.clone(), label: RepLabel::PhiBar, zeta, e, f, weights }
}

/// Dual representation built from the antipode followed by transposition.
pub fn dual_rep(base: &Representation, side: DualSide) -> Representation {
    let l = base.params.l;
    let mut e = Vec::with_capacity(l + 1);
    let mut f = Vec::with_capacity(l + 1);
    for i in 0..=l {
        let k_plus = base.cartan_int(i, 1);
        let k_minus = base.cartan_int(i, -1);
        let (ei, fi) = match side {
            DualSide::Right => (&k_minus * base.e(i), base.f(i) * &k_plus),
            DualSide::Left => (base.e(i) * &k_minus, &k_plus * base.f(i)),
        };
        e.push((-&ei).transpose());
        f.push((-&fi).transpose());
    }
    let weights = base.weights.iter().map(|w| w.iter().map(|x| -x).collect()).collect();
    let label = match (base.label, side) {
        (RepLabel::Phi, DualSide::Right) => RepLabel::PhiStar,
        (RepLabel::Phi, DualSide::Left) => RepLabel::StarPhi,
        (RepLabel::PhiStar, DualSide::Left) | (RepLabel::StarPhi, DualSide::Right) => RepLabel::Phi,
        _ => RepLabel::Derived,
    };
    Representation { params: base.params.clone(), label, zeta: base.zeta, e, f, weights }
}

/// Representation by label string or enum.
pub fn rep_by_label(params: &ModelParams, label: RepLabel, zeta: C64) -> Result<Representation> {
    match label {
        RepLabel::Phi => Ok(phi_rep(params, zeta)),
        RepLabel::PhiBar => Ok(phibar_rep(params, zeta)),
        RepLabel::PhiStar => Ok(dual_rep(&phi_rep(params, zeta), DualSide::Right)),
        RepLabel::StarPhi => Ok(dual_rep(&phi_rep(params, zeta), DualSide::Left)),
        RepLabel::Derived => Err(Error::Unsupported("derived representations have no factory".into())),
    }
}

/// Explicit generator tables for `φ*_ζ` and `*φ_ζ`.
pub fn dual_table(params: &ModelParams, zeta: C64, side: DualSide) -> Representation {
    let l = params.l;
    let n = l + 1;
    let q = params.q;
    let z0 = zeta_pow(zeta, params.s[0]);
    let (e0, f0) = match side {
        DualSide::Right => (unit(n, 1, l + 1, -z0), unit(n, l + 1, 1, -z0.inv())),
        DualSide::Left => (unit(n, 1, l + 1, -z0 * (q * q)), unit(n, l + 1, 1, -z0.inv() * (q * q).inv())),
    };
    let mut e = vec![e0];
    let mut f = vec![f0];
    let mut weights = Vec::with_capacity(n);
    let mut w0 = vec![0; n];
    w0[0] = 1;
    w0[l] -= 1;
    weights.push(w0);
    for i in 1..=l {
        let zi = zeta_pow(zeta, params.s[i]);
        let (ei, fi) = match side {
            DualSide::Right => (unit(n, i + 1, i, -zi * q.inv()), unit(n, i, i + 1, -zi.inv() * q)),
            DualSide::Left => (unit(n, i + 1, i, -zi * q), unit(n, i, i + 1, -zi.inv() * q.inv())),
        };
        e.push(ei);
        f.push(fi);
        let mut w = vec![0; n];
        w[i - 1] = -1;
        w[i] = 1;
        weights.push(w);
    }
    let label = match side {
        DualSide::Right => RepLabel::PhiStar,
        DualSide::Left => RepLabel::StarPhi,
    };
    Representation { params: params.clone(), label, zeta, e, f, weights }
}

/// Which fundamental representation of `U_q(gl_{l+1})` feeds Jimbo's map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlFundamental {
    First,
    Last,
}

/// Integer Laurent polynomial in `q`, keyed by exponent.
#[derive(Clone, Debug, Default, PartialEq)]
struct Laurent(BTreeMap<i32, i64>);

impl Laurent {
    fn monomial(coeff: i64, power: i32) -> Self {
        let mut m = BTreeMap::new();
        if coeff != 0 {
            m.insert(power, coeff);
        }
        Laurent(m)
    }

    fn add_scaled(&mut self, other: &Laurent, coeff: i64, shift: i32) {
        for (&k, &c) in &other.0 {
            let slot = self.0.entry(k + shift).or_insert(0);
            *slot += coeff * c;
            if *slot == 0 {
                self.0.remove(&(k + shift));
            }
        }
    }

    fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::default();
        for (&k, &c) in &self.0 {
            out.add_scaled(other, c, k);
        }
        out
    }

    /// `z · Σ c_k q^k`, evaluated term by term as `z · (q^k c_k)`.
    fn eval(&self, params: &ModelParams, z: C64) -> C64 {
        self.0.iter().map(|(&k, &c)| scaled(z, params, k, c as f64)).sum()
    }
}

/// Sparse operator with Laurent-polynomial entries, for exact bookkeeping of
/// powers of `q`.
#[derive(Clone, Debug, Default)]
struct ExactOp(BTreeMap<(usize, usize), Laurent>);

impl ExactOp {
    fn unit(i: usize, j: usize) -> Self {
        ExactOp(BTreeMap::from([((i, j), Laurent::monomial(1, 0))]))
    }

    fn mul(&self, other: &ExactOp) -> ExactOp {
        let mut out: BTreeMap<(usize, usize), Laurent> = BTreeMap::new();
        for (&(i, k), a) in &self.0 {
            for (&(k2, j), b) in &other.0 {
                if k == k2 {
                    let entry = out.entry((i, j)).or_default();
                    entry.add_scaled(&a.mul(b), 1, 0);
                }
            }
        }
        out.retain(|_, v| !v.0.is_empty());
        ExactOp(out)
    }

    /// `self − q^shift · other`.
    fn sub_shifted(&self, other: &ExactOp, shift: i32) -> ExactOp {
        let mut out = self.0.clone();
        for (key, v) in &other.0 {
            out.entry(*key).or_default().add_scaled(v, -1, shift);
        }
        out.retain(|_, v| !v.0.is_empty());
        ExactOp(out)
    }

    /// Right multiplication by the diagonal `q^{d_k}`.
    fn times_diagonal(&self, exponents: &[i32]) -> ExactOp {
        ExactOp(
            self.0
                .iter()
                .map(|(&(i, j), v)| {
                    let mut shifted = Laurent::default();
                    shifted.add_scaled(v, 1, exponents[j - 1]);
                    ((i, j), shifted)
                })
                .collect(),
        )
    }

    fn eval(&self, params: &ModelParams, n: usize, z: C64) -> TensorOperator {
        let mut m = TensorOperator::zeros(&[n]);
        for (&(i, j), v) in &self.0 {
            m.set(i - 1, j - 1, v.eval(params, z));
        }
        m
    }
}

struct GlImages {
    e: Vec<ExactOp>,
    f: Vec<ExactOp>,
    /// `k_weights[i][k]`: `q^{νK_{i+1}} v_{k+1} = q^{ν k_weights[i][k]} v_{k+1}`.
    k_weights: Vec<Vec<i32>>,
}

fn gl_images(params: &ModelParams, which: GlFundamental) -> GlImages {
    let l = params.l;
    let n = l + 1;
    let mut e = Vec::with_capacity(l);
    let mut f = Vec::with_capacity(l);
    for i in 1..=l {
        match which {
            GlFundamental::First => {
                e.push(ExactOp::unit(i, i + 1));
                f.push(ExactOp::unit(i + 1, i));
            }
            GlFundamental::Last => {
                e.push(ExactOp::unit(l - i + 1, l - i + 2));
                f.push(ExactOp::unit(l - i + 2, l - i + 1));
            }
        }
    }
    let k_weights = (1..=n)
        .map(|i| {
            (1..=n)
                .map(|k| match which {
                    GlFundamental::First => i32::from(k == i),
                    GlFundamental::Last => i32::from(k + i != l + 2),
                })
                .collect()
        })
        .collect();
    GlImages { e, f, k_weights }
}

/// Images of the composite root vectors `E_{1,l+1}` and `F_{1,l+1}`:
/// `E_{1j} = E_{1,j−1}E_{j−1,j} − q E_{j−1,j}E_{1,j−1}` and
/// `F_{1j} = F_{j−1,j}F_{1,j−1} − q⁻¹ F_{1,j−1}F_{j−1,j}`.
fn composite_root_vectors(params: &ModelParams, gl: &GlImages) -> (ExactOp, ExactOp) {
    let mut e_acc = gl.e[0].clone();
    let mut f_acc = gl.f[0].clone();
    for j in 3..=params.l + 1 {
        let ej = &gl.e[j - 2];
        let fj = &gl.f[j - 2];
        e_acc = e_acc.mul(ej).sub_shifted(&ej.mul(&e_acc), 1);
        f_acc = fj.mul(&f_acc).sub_shifted(&f_acc.mul(fj), -1);
    }
    (e_acc, f_acc)
}

/// Pull a fundamental `U_q(gl_{l+1})` representation back to the loop algebra
/// through Jimbo's homomorphism and the grading automorphism.
///
/// Powers of `q` are tracked exactly and evaluated once per entry, so the
/// result can be compared bit for bit with the closed-form tables.
pub fn jimbo_image(params: &ModelParams, which: GlFundamental, zeta: C64) -> Representation {
    let l = params.l;
    let n = l + 1;
    let gl = gl_images(params, which);
    let (e_top, f_top) = composite_root_vectors(params, &gl);
    let kw = &gl.k_weights;
    let k_sum: Vec<i32> = (0..n).map(|k| kw[0][k] + kw[l][k]).collect();
    let k_sum_neg: Vec<i32> = k_sum.iter().map(|k| -k).collect();
    let z0 = zeta_pow(zeta, params.s[0]);
    let mut e = vec![f_top.times_diagonal(&k_sum).eval(params, n, z0)];
    let mut f = vec![e_top.times_diagonal(&k_sum_neg).eval(params, n, z0.inv())];
    let mut weights = vec![(0..n).map(|k| kw[l][k] - kw[0][k]).collect::<Vec<_>>()];
    for i in 1..=l {
        let zi = zeta_pow(zeta, params.s[i]);
        e.push(gl.e[i - 1].eval(params, n, zi));
        f.push(gl.f[i - 1].eval(params, n, zi.inv()));
        weights.push((0..n).map(|k| kw[i - 1][k] - kw[i][k]).collect());
    }
    let label = match which {
        GlFundamental::First => RepLabel::Phi,
        GlFundamental::Last => RepLabel::PhiBar,
    };
    Representation { params: params.clone(), label, zeta, e, f, weights }
}

/// Entry `a_ij` of the extended Cartan matrix of `sl_{l+1}` (indices `0..=l`).
pub fn extended_cartan(l: usize, i: usize, j: usize) -> i32 {
    if i == j {
        return 2;
    }
    if l == 1 {
        return -2;
    }
    let n = l + 1;
    if (i + 1) % n == j || (j + 1) % n == i {
        -1
    } else {
        0
    }
}

/// Largest residual of each group of defining relations.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct RelationReport {
    /// Cartan group law and centrality of `Σ h_i`.
    pub cartan: f64,
    /// Weight relations for `e_i`, `f_i`.
    pub weight: f64,
    /// `[e_i, f_j]` relations.
    pub commutator: f64,
    /// Quantum Serre relations.
    pub serre: f64,
}

impl RelationReport {
    pub fn max(&self) -> f64 {
        self.cartan.max(self.weight).max(self.commutator).max(self.serre)
    }
}

fn power(m: &TensorOperator, k: u32) -> TensorOperator {
    let mut acc = TensorOperator::identity(m.dims());
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

fn serre_sum(a: &TensorOperator, b: &TensorOperator, aij: i32, q: C64) -> Result<TensorOperator> {
    let top = (1 - aij) as u32;
    let mut acc = TensorOperator::zeros(a.dims());
    for k in 0..=top {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let denom = q_factorial(top - k, q)? * q_factorial(k, q)?;
        let term = &(&power(a, top - k) * b) * &power(a, k);
        acc = &acc + &term.scale(C64::new(sign, 0.0) / denom);
    }
    Ok(acc)
}

/// Residuals of the defining relations of `U_q(L(sl_{l+1}))` on a representation.
pub fn verify_defining_relations(rep: &Representation) -> Result<RelationReport> {
    let l = rep.params.l;
    let q = rep.params.q;
    let kappa = rep.params.kappa();
    let id = TensorOperator::identity(&[rep.dim()]);
    let mut report = RelationReport::default();
    let (nu1, nu2) = (0.37, -1.21);

    let mut central = id.clone();
    for i in 0..=l {
        central = &central * &rep.cartan(i, nu1);
        let split = &rep.cartan(i, nu1) * &rep.cartan(i, nu2);
        report.cartan = report.cartan.max(split.max_abs_diff(&rep.cartan(i, nu1 + nu2)));
        for j in 0..=l {
            let c = rep.cartan(i, nu1).commutator(&rep.cartan(j, nu2));
            report.cartan = report.cartan.max(c.max_abs());
        }
    }
    report.cartan = report.cartan.max(central.max_abs_diff(&id));

    for j in 0..=l {
        for nu in [1.0, nu1] {
            let qx = rep.cartan(j, nu);
            let qx_inv = rep.cartan(j, -nu);
            for i in 0..=l {
                let factor = rep.params.q_pow(nu * extended_cartan(l, j, i) as f64);
                let lhs_e = &(&qx * rep.e(i)) * &qx_inv;
                let lhs_f = &(&qx * rep.f(i)) * &qx_inv;
                report.weight = report.weight.max(lhs_e.max_abs_diff(&rep.e(i).scale(factor)));
                report.weight = report.weight.max(lhs_f.max_abs_diff(&rep.f(i).scale(factor.inv())));
            }
        }
    }

    for i in 0..=l {
        for j in 0..=l {
            let lhs = rep.e(i).commutator(rep.f(j));
            let rhs = if i == j {
                (&rep.cartan_int(i, 1) - &rep.cartan_int(i, -1)).scale(kappa.inv())
            } else {
                TensorOperator::zeros(&[rep.dim()])
            };
            report.commutator = report.commutator.max(lhs.max_abs_diff(&rhs));
        }
    }

    for i in 0..=l {
        for j in 0..=l {
            if i == j {
                continue;
            }
            let aij = extended_cartan(l, i, j);
            report.serre = report.serre.max(serre_sum(rep.e(i), rep.e(j), aij, q)?.max_abs());
            report.serre = report.serre.max(serre_sum(rep.f(i), rep.f(j), aij, q)?.max_abs());
        }
    }
    Ok(report)
}

/// `𝔸 = Σ q^{Φ_i} E_ii`.
#[derive(Clone, Debug)]
pub struct TwistOperator {
    pub phi: Vec<f64>,
    pub matrix: TensorOperator,
}

pub fn twist_operator(params: &ModelParams) -> TwistOperator {
    let diag: Vec<C64> = params.phi.iter().map(|&p| params.q_pow(p)).collect();
    TwistOperator { phi: params.phi.clone(), matrix: TensorOperator::diagonal(&diag) }
}

/// `𝕏 = Σ q^{χ_i} E_ii`, relating double duals to shifted representations.
#[derive(Clone, Debug)]
pub struct XOperator {
    pub chi: Vec<f64>,
    pub matrix: TensorOperator,
}

/// `χ_i = −(l+2−2i) − 2Σ_{j<i} j s_j/s + 2Σ_{j≥i} (l+1−j) s_j/s`.
pub fn chi_exponents(params: &ModelParams) -> Vec<f64> {
    let l = params.l as f64;
    let s = params.s_total() as f64;
    (1..=params.l + 1)
        .map(|i| {
            let below: f64 = (1..i).map(|j| j as f64 * params.s[j] as f64).sum();
            let above: f64 = (i..=params.l).map(|j| (l + 1.0 - j as f64) * params.s[j] as f64).sum();
            -(l + 2.0 - 2.0 * i as f64) - 2.0 * below / s + 2.0 * above / s
        })
        .collect()
}

pub fn x_operator(params: &ModelParams) -> XOperator {
    let chi = chi_exponents(params);
    let diag: Vec<C64> = chi.iter().map(|&c| params.q_pow(c)).collect();
    XOperator { chi, matrix: TensorOperator::diagonal(&diag) }
}

/// Spectral shift `q^{−2(l+1)/s}` relating double duals to the base representation.
pub fn double_dual_shift(params: &ModelParams) -> C64 {
    params.q_pow(-2.0 * (params.l as f64 + 1.0) / params.s_total() as f64)
}

/// Intertwiner residuals between `φ̄_ζ` and the two rescaled duals.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EquivalenceReport {
    pub star_right: f64,
    pub star_left: f64,
}

/// `ℙ` for the right dual: `Σ (−1)^{i−1} q^{−2Σ_{k<i}s_k/s + i−1} E_{l−i+2,i}`.
pub fn equivalence_operator(params: &ModelParams, side: DualSide) -> TensorOperator {
    let l = params.l;
    let n = l + 1;
    let s = params.s_total() as f64;
    let mut p = TensorOperator::zeros(&[n]);
    for i in 1..=n {
        let partial: f64 = params.s[1..i].iter().map(|&x| x as f64).sum();
        let expo = match side {
            DualSide::Right => -2.0 * partial / s + (i as f64 - 1.0),
            DualSide::Left => 2.0 * l as f64 * partial / s - (i as f64 - 1.0),
        };
        let sign = if (i - 1) % 2 == 0 { 1.0 } else { -1.0 };
        p.set(l + 1 - i, i - 1, params.q_pow(expo) * sign);
    }
    p
}

/// Checks `ℙ φ*_{q^{2/s}ζ} ℙ⁻¹ = φ̄_ζ` and `ℙ *φ_{q^{−2l/s}ζ} ℙ⁻¹ = φ̄_ζ`.
pub fn equivalence_check_sl2(params: &ModelParams, zeta: C64) -> Result<EquivalenceReport> {
    let s = params.s_total() as f64;
    let target = phibar_rep(params, zeta);
    let right_zeta = zeta * params.q_pow(2.0 / s);
    let left_zeta = zeta * params.q_pow(-2.0 * params.l as f64 / s);
    let right = dual_rep(&phi_rep(params, right_zeta), DualSide::Right)
        .conjugated(&equivalence_operator(params, DualSide::Right))?;
    let left = dual_rep(&phi_rep(params, left_zeta), DualSide::Left)
        .conjugated(&equivalence_operator(params, DualSide::Left))?;
    Ok(EquivalenceReport { star_right: right.max_deviation(&target), star_left: left.max_deviation(&target) })
}

/// Double dual of `φ_ζ` against `𝕏`-conjugation of the shifted base, for both sides.
pub fn double_dual_residual(params: &ModelParams, zeta: C64) -> Result<f64> {
    let x = x_operator(params).matrix;
    let shift = double_dual_shift(params);
    let base = phi_rep(params, zeta);
    let right2 = dual_rep(&dual_rep(&base, DualSide::Right), DualSide::Right);
    let left2 = dual_rep(&dual_rep(&base, DualSide::Left), DualSide::Left);
    let right_expect = phi_rep(params, zeta * shift).conjugated(&x)?;
    let left_expect = phi_rep(params, zeta / shift).conjugated(&x.inverse()?)?;
    Ok(right2.max_deviation(&right_expect).max(left2.max_deviation(&left_expect)))
}

impl TwistOperator {
    pub fn determinant(&self) -> C64 {
        (0..self.matrix.side()).map(|k| self.matrix.get(k, k)).fold(ONE, |a, b| a * b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: usize) -> ModelParams {
        ModelParams::homogeneous(l, C64::new(0.7, 0.0))
    }

    #[test]
    fn phi_generators_for_sl2() {
        let z = C64::new(0.8, 0.3);
        let rep = phi_rep(&params(1), z);
        assert_eq!(*rep.e(1), TensorOperator::unit(2, 1, 2).scale(z));
        assert_eq!(*rep.f(1), TensorOperator::unit(2, 2, 1).scale(z.inv()));
        let c = rep.cartan(1, 0.5);
        let q = C64::new(0.7, 0.0);
        assert!((c.get(0, 0) - q.powf(0.5)).norm() < 1e-15);
        assert!((c.get(1, 1) - q.powf(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn labels_parse() {
        assert_eq!("phi*".parse::<RepLabel>().unwrap(), RepLabel::PhiStar);
        assert_eq!("*phi".parse::<RepLabel>().unwrap(), RepLabel::StarPhi);
        assert!("psi".parse::<RepLabel>().is_err());
    }

    #[test]
    fn corrupted_generator_is_detected() {
        let mut rep = phi_rep(&params(2), C64::new(1.1, 0.2));
        let doubled = rep.e(1).scale(C64::new(2.0, 0.0));
        rep.set_e(1, doubled);
        assert!(verify_defining_relations(&rep).unwrap().max() > 0.1);
    }

    #[test]
    fn zero_twist_is_identity() {
        let t = twist_operator(&params(2));
        assert_eq!(t.matrix, TensorOperator::identity(&[3]));
        let p = params(2).with_twist(vec![0.3, -0.1, 0.5]).unwrap();
        let det = twist_operator(&p).determinant();
        assert!((det - p.q_pow(0.7)).norm() < 1e-14);
    }

    #[test]
    fn cartan_matrix_for_sl2_is_affine() {
        assert_eq!(extended_cartan(1, 0, 1), -2);
        assert_eq!(extended_cartan(2, 0, 2), -1);
        assert_eq!(extended_cartan(3, 0, 2), 0);
    }
}
