//! Multi-leg operator algebra on tensor products of finite-dimensional spaces.
//!
//! A [`TensorOperator`] is a dense complex matrix together with the ordered list
//! of dimensions of the tensor factors ("legs") it acts on. The product basis is
//! row-major: the last leg varies fastest, matching ordinary Kronecker products.
//! Leg indices in this API are 1-based.

use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense operator on `V_1 ⊗ … ⊗ V_n` with `dims[k] = dim V_{k+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorOperator {
    data: CMatrix,
    dims: Vec<usize>,
}

impl TensorOperator {
    pub fn new(data: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("leg dimensions must be positive, got {dims:?}")));
        }
        let side: usize = dims.iter().product();
        if data.nrows() != side || data.ncols() != side {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, legs {:?} need {side}x{side}",
                data.nrows(),
                data.ncols(),
                dims
            )));
        }
        Ok(Self { data, dims })
    }

    pub fn identity(dims: &[usize]) -> Self {
        let side = dims.iter().product();
        Self { data: CMatrix::identity(side, side), dims: dims.to_vec() }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let side = dims.iter().product();
        Self { data: CMatrix::zeros(side, side), dims: dims.to_vec() }
    }

    /// Single-leg operator `E_ij` with `E_ij v_k = δ_jk v_i` (1-based).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(&[n]);
        m.data[(i - 1, j - 1)] = ONE;
        m
    }

    /// Single-leg diagonal operator.
    pub fn diagonal(values: &[C64]) -> Self {
        let n = values.len();
        Self { data: CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)), dims: vec![n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn legs(&self) -> usize {
        self.dims.len()
    }

    pub fn side(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[(row, col)] = value;
    }

    /// Same matrix, different leg structure with equal total size.
    pub fn with_dims(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(self.data, dims)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { data: &self.data * c, dims: self.dims.clone() }
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.transpose(), dims: self.dims.clone() }
    }

    pub fn adjoint(&self) -> Self {
        Self { data: self.data.adjoint(), dims: self.dims.clone() }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .data
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular(format!("{}x{} operator has no inverse", self.side(), self.side())))?;
        if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Singular("inverse has non-finite entries".into()));
        }
        Ok(Self { data: inv, dims: self.dims.clone() })
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.side(), other.side(), "distance between operators of different size");
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation `max |self − other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.side(), other.side(), "comparison between operators of different size");
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// True if every row and every column holds exactly one nonzero entry.
    pub fn is_monomial(&self) -> bool {
        let n = self.side();
        let mut col_seen = vec![false; n];
        for r in 0..n {
            let mut found = None;
            for c in 0..n {
                if self.data[(r, c)] != ZERO {
                    if found.is_some() {
                        return false;
                    }
                    found = Some(c);
                }
            }
            match found {
                Some(c) if !col_seen[c] => col_seen[c] = true,
                _ => return false,
            }
        }
        true
    }

    /// Exact inverse of a monomial (generalised permutation) matrix.
    pub fn monomial_inverse(&self) -> Result<Self> {
        if !self.is_monomial() {
            return Err(Error::Singular("operator is not a monomial matrix".into()));
        }
        let n = self.side();
        let mut inv = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let v = self.data[(r, c)];
                if v != ZERO {
                    inv[(c, r)] = ONE / v;
                }
            }
        }
        Ok(Self { data: inv, dims: self.dims.clone() })
    }

    pub fn to_dump(&self) -> MatrixDump {
        MatrixDump { dims: self.dims.clone(), data: self.data.transpose().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn from_dump(dump: &MatrixDump) -> Result<Self> {
        let side: usize = dump.dims.iter().product();
        if dump.data.len() != side * side {
            return Err(Error::Dimension(format!(
                "dump holds {} entries, legs {:?} need {}",
                dump.data.len(),
                dump.dims,
                side * side
            )));
        }
        let data = CMatrix::from_row_iterator(side, side, dump.data.iter().map(|[re, im]| C64::new(*re, *im)));
        Self::new(data, dump.dims.clone())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_dump())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dump: MatrixDump = serde_json::from_str(&text)?;
        Self::from_dump(&dump)
    }
}

/// JSON matrix dump: leg dimensions plus a row-major list of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub dims: Vec<usize>,
    pub data: Vec<[f64; 2]>,
}

impl<'a> Mul<&'a TensorOperator> for &'a TensorOperator {
    type Output = TensorOperator;
    fn mul(self, rhs: &'a TensorOperator) -> TensorOperator {
        assert_eq!(self.side(), rhs.side(), "product of operators of different size");
        TensorOperator { data: &self.data * &rhs.data, dims: self.dims.clone() }
    }
}

impl Mul for TensorOperator {
    type Output = TensorOperator;
    fn mul(self, rhs: TensorOperator) -> TensorOperator {
        &self * &rhs
    }
}

impl<'a> Add<&'a TensorOperator> for &'a TensorOperator {
    type Output = TensorOperator;
    fn add(self, rhs: &'a TensorOperator) -> TensorOperator {
        assert_eq!(self.side(), rhs.side(), "sum of operators of different size");
        TensorOperator { data: &self.data + &rhs.data, dims: self.dims.clone() }
    }
}

impl<'a> Sub<&'a TensorOperator> for &'a TensorOperator {
    type Output = TensorOperator;
    fn sub(self, rhs: &'a TensorOperator) -> TensorOperator {
        assert_eq!(self.side(), rhs.side(), "difference of operators of different size");
        TensorOperator { data: &self.data - &rhs.data, dims: self.dims.clone() }
    }
}

impl Neg for &TensorOperator {
    type Output = TensorOperator;
    fn neg(self) -> TensorOperator {
        TensorOperator { data: -&self.data, dims: self.dims.clone() }
    }
}

/// A bijection σ of {1,…,n}, stored as `sigma[i-1] = σ(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegPermutation {
    sigma: Vec<usize>,
}

impl LegPermutation {
    pub fn new(sigma: Vec<usize>) -> Result<Self> {
        let n = sigma.len();
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s == 0 || s > n || seen[s - 1] {
                return Err(Error::NotAPermutation(sigma));
            }
            seen[s - 1] = true;
        }
        Ok(Self { sigma })
    }

    pub fn identity(n: usize) -> Self {
        Self { sigma: (1..=n).collect() }
    }

    /// The transposition exchanging legs `i` and `j` of `n`.
    pub fn swap(n: usize, i: usize, j: usize) -> Result<Self> {
        let mut sigma: Vec<usize> = (1..=n).collect();
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::SlotOutOfRange { slot: i.max(j), legs: n });
        }
        sigma.swap(i - 1, j - 1);
        Ok(Self { sigma })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.sigma[i - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.sigma
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Self { sigma: other.sigma.iter().map(|&i| self.sigma[i - 1]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &s) in self.sigma.iter().enumerate() {
            inv[s - 1] = i + 1;
        }
        Self { sigma: inv }
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut st = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        st[k] = st[k + 1] * dims[k + 1];
    }
    st
}

fn check_slot(slot: usize, legs: usize) -> Result<()> {
    if slot == 0 || slot > legs {
        Err(Error::SlotOutOfRange { slot, legs })
    } else {
        Ok(())
    }
}

/// Linear offsets of all multi-indices over the legs `legs` (0-based) of a
/// space with the given strides, enumerated row-major in the listed leg order.
fn offsets(legs: &[usize], dims: &[usize], st: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &leg in legs {
        let mut next = Vec::with_capacity(out.len() * dims[leg]);
        for &base in &out {
            for d in 0..dims[leg] {
                next.push(base + d * st[leg]);
            }
        }
        out = next;
    }
    out
}

/// Kronecker product; legs are concatenated.
pub fn kron(a: &TensorOperator, b: &TensorOperator) -> TensorOperator {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    TensorOperator { data: a.data.kronecker(&b.data), dims }
}

/// Kronecker product of a nonempty list of operators.
pub fn kron_all(ops: &[TensorOperator]) -> TensorOperator {
    let (first, rest) = ops.split_first().expect("kron_all needs at least one operator");
    rest.iter().fold(first.clone(), |acc, op| kron(&acc, op))
}

/// `P_σ(w_1 ⊗ … ⊗ w_n) = w_{σ⁻¹(1)} ⊗ … ⊗ w_{σ⁻¹(n)}`.
///
/// `dims` are the leg dimensions of the source space; the returned operator
/// carries the dimensions of the target space.
pub fn permutation_operator(p: &LegPermutation, dims: &[usize]) -> Result<TensorOperator> {
    let n = dims.len();
    if p.len() != n {
        return Err(Error::Dimension(format!("permutation of {} legs applied to {n} legs", p.len())));
    }
    let mut target = vec![0; n];
    for i in 1..=n {
        target[p.apply(i) - 1] = dims[i - 1];
    }
    let src_st = strides(dims);
    let dst_st = strides(&target);
    let side: usize = dims.iter().product();
    let mut data = CMatrix::zeros(side, side);
    for col in 0..side {
        let mut row = 0;
        for i in 0..n {
            let digit = (col / src_st[i]) % dims[i];
            row += digit * dst_st[p.apply(i + 1) - 1];
        }
        data[(row, col)] = ONE;
    }
    TensorOperator::new(data, target)
}

/// The flip `P` on `V ⊗ V` with `P(v ⊗ w) = w ⊗ v`.
pub fn swap_operator(n: usize) -> TensorOperator {
    permutation_operator(&LegPermutation { sigma: vec![2, 1] }, &[n, n]).expect("two legs")
}

/// Offsets of the local block and of the spectator legs for an operator on
/// `slots` inside `target_dims`.
fn local_layout(m: &TensorOperator, slots: &[usize], target_dims: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = target_dims.len();
    if slots.len() != m.legs() {
        return Err(Error::Dimension(format!("{} slots for an operator on {} legs", slots.len(), m.legs())));
    }
    let mut used = vec![false; n];
    for (k, &s) in slots.iter().enumerate() {
        check_slot(s, n)?;
        if used[s - 1] {
            return Err(Error::DuplicateSlot(s));
        }
        used[s - 1] = true;
        if target_dims[s - 1] != m.dims[k] {
            return Err(Error::Dimension(format!(
                "leg {s} has dimension {}, operator leg {} has {}",
                target_dims[s - 1],
                k + 1,
                m.dims[k]
            )));
        }
    }
    let st = strides(target_dims);
    let sub_legs: Vec<usize> = slots.iter().map(|s| s - 1).collect();
    let rest_legs: Vec<usize> = (0..n).filter(|k| !used[*k]).collect();
    Ok((offsets(&sub_legs, target_dims, &st), offsets(&rest_legs, target_dims, &st)))
}

/// `M^{(i_1,…,i_k)}`: `m` acting on the listed legs (in order), identity elsewhere.
pub fn embed(m: &TensorOperator, slots: &[usize], target_dims: &[usize]) -> Result<TensorOperator> {
    let (sub, rest) = local_layout(m, slots, target_dims)?;
    let side: usize = target_dims.iter().product();
    let mut data = CMatrix::zeros(side, side);
    for &base in &rest {
        for (sc, &oc) in sub.iter().enumerate() {
            for (sr, &or) in sub.iter().enumerate() {
                let v = m.data[(sr, sc)];
                if v != ZERO {
                    data[(base + or, base + oc)] = v;
                }
            }
        }
    }
    TensorOperator::new(data, target_dims.to_vec())
}

/// `embed(local, slots, a.dims()) · a` without forming the embedded operator.
pub fn local_left_mul(local: &TensorOperator, slots: &[usize], a: &TensorOperator) -> Result<TensorOperator> {
    let (sub, rest) = local_layout(local, slots, &a.dims)?;
    let k = sub.len();
    let mut data = CMatrix::zeros(a.side(), a.side());
    let mut x = vec![ZERO; k];
    for c in 0..a.side() {
        let col = a.data.column(c);
        for &base in &rest {
            for (j, &o) in sub.iter().enumerate() {
                x[j] = col[base + o];
            }
            if x.iter().all(|v| *v == ZERO) {
                continue;
            }
            for (i, &o) in sub.iter().enumerate() {
                let mut acc = ZERO;
                for (j, xj) in x.iter().enumerate() {
                    acc += local.data[(i, j)] * xj;
                }
                data[(base + o, c)] = acc;
            }
        }
    }
    TensorOperator::new(data, a.dims.clone())
}

/// `a · embed(local, slots, a.dims())` without forming the embedded operator.
pub fn local_right_mul(a: &TensorOperator, local: &TensorOperator, slots: &[usize]) -> Result<TensorOperator> {
    let (sub, rest) = local_layout(local, slots, &a.dims)?;
    let mut data = CMatrix::zeros(a.side(), a.side());
    for &base in &rest {
        for (j, &oc) in sub.iter().enumerate() {
            let mut out = data.column_mut(base + oc);
            for (i, &oi) in sub.iter().enumerate() {
                let w = local.data[(i, j)];
                if w != ZERO {
                    out.axpy(w, &a.data.column(base + oi), ONE);
                }
            }
        }
    }
    TensorOperator::new(data, a.dims.clone())
}

/// Partial transpose `M^{t_slot}`: transposes the chosen tensor factor only.
pub fn partial_transpose(m: &TensorOperator, slot: usize) -> Result<TensorOperator> {
    check_slot(slot, m.legs())?;
    let st = strides(&m.dims)[slot - 1];
    let d = m.dims[slot - 1];
    let side = m.side();
    let mut data = CMatrix::zeros(side, side);
    for c in 0..side {
        let dc = (c / st) % d;
        for r in 0..side {
            let dr = (r / st) % d;
            let r2 = r - dr * st + dc * st;
            let c2 = c - dc * st + dr * st;
            data[(r2, c2)] = m.data[(r, c)];
        }
    }
    TensorOperator::new(data, m.dims.clone())
}

/// Partial trace `tr_slot M`; the chosen leg is removed.
pub fn partial_trace(m: &TensorOperator, slot: usize) -> Result<TensorOperator> {
    let n = m.legs();
    check_slot(slot, n)?;
    if n == 1 {
        return Err(Error::Dimension("cannot trace out the only leg of an operator".into()));
    }
    let st = strides(&m.dims);
    let rest_legs: Vec<usize> = (0..n).filter(|&k| k != slot - 1).collect();
    let rest = offsets(&rest_legs, &m.dims, &st);
    let d = m.dims[slot - 1];
    let step = st[slot - 1];
    let side = rest.len();
    let mut data = CMatrix::zeros(side, side);
    for (c, &oc) in rest.iter().enumerate() {
        for (r, &or) in rest.iter().enumerate() {
            let mut acc = ZERO;
            for k in 0..d {
                acc += m.data[(or + k * step, oc + k * step)];
            }
            data[(r, c)] = acc;
        }
    }
    let dims = rest_legs.iter().map(|&k| m.dims[k]).collect();
    TensorOperator::new(data, dims)
}
