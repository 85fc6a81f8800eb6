//! Closed chains with twisted periodic boundary conditions.
//!
//! Leg 1 of a monodromy operator is the auxiliary space; legs `2..=N+1` are
//! the quantum sites. Transfer operators and Hamiltonians live on the `N`
//! quantum legs only.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::qcore::ModelParams;
use crate::repkit::twist_operator;
use crate::rmat::{r_log_derivative, r_matrix};
use crate::tensorlab::{
    embed, kron, local_left_mul, local_right_mul, partial_trace, swap_operator, TensorOperator, C64, ONE,
};

/// Sites, model parameters and inhomogeneities of a closed chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSpec {
    pub params: ModelParams,
    pub sites: usize,
    /// One inhomogeneity per quantum site.
    pub etas: Vec<C64>,
}

impl ChainSpec {
    pub fn homogeneous(params: ModelParams, sites: usize) -> Result<Self> {
        Self::new(params, vec![ONE; sites])
    }

    pub fn new(params: ModelParams, etas: Vec<C64>) -> Result<Self> {
        params.validate()?;
        if etas.is_empty() {
            return Err(Error::InvalidParams("a chain needs at least one site".into()));
        }
        Ok(Self { sites: etas.len(), params, etas })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.etas.iter().all(|&e| e == ONE)
    }

    fn full_dims(&self, aux: usize) -> Vec<usize> {
        vec![self.params.dim(); self.sites + aux]
    }

    pub fn quantum_dims(&self) -> Vec<usize> {
        vec![self.params.dim(); self.sites]
    }
}

/// `M(ζ) = R^{(1,N+1)}(ζ|η_N) ⋯ R^{(12)}(ζ|η_1)`.
pub fn monodromy(spec: &ChainSpec, zeta: C64) -> Result<TensorOperator> {
    monodromy_times(spec, zeta, 1, &TensorOperator::identity(&spec.full_dims(1)))
}

/// `M(ζ)⁻¹` assembled from the inverse factors in reverse order.
pub fn monodromy_inverse(spec: &ChainSpec, zeta: C64) -> Result<TensorOperator> {
    let dims = spec.full_dims(1);
    let mut m = TensorOperator::identity(&dims);
    for (k, &eta) in spec.etas.iter().enumerate().rev() {
        m = local_left_mul(&r_matrix(&spec.params, zeta / eta)?.inverse()?, &[1, k + 2], &m)?;
    }
    Ok(m)
}

/// `M(ζ) · x` with the monodromy acting on auxiliary leg `aux` and quantum
/// legs starting right after the auxiliary block of `x`.
pub fn monodromy_times(spec: &ChainSpec, zeta: C64, aux: usize, x: &TensorOperator) -> Result<TensorOperator> {
    let first = x.legs() - spec.sites + 1;
    let mut m = x.clone();
    for (k, &eta) in spec.etas.iter().enumerate() {
        m = local_left_mul(&r_matrix(&spec.params, zeta / eta)?, &[aux, first + k], &m)?;
    }
    Ok(m)
}

/// `x · M(ζ)`, the right-hand counterpart of [`monodromy_times`].
pub fn times_monodromy(spec: &ChainSpec, zeta: C64, aux: usize, x: &TensorOperator) -> Result<TensorOperator> {
    let first = x.legs() - spec.sites + 1;
    let mut m = x.clone();
    for (k, &eta) in spec.etas.iter().enumerate().rev() {
        m = local_right_mul(&m, &r_matrix(&spec.params, zeta / eta)?, &[aux, first + k])?;
    }
    Ok(m)
}

/// Residual of `R^{(1′2′)} M₁ M₂ = M₂ M₁ R^{(1′2′)}`.
pub fn rmm_residual(spec: &ChainSpec, zeta1: C64, zeta2: C64) -> Result<f64> {
    let r = r_matrix(&spec.params, zeta1 / zeta2)?;
    let id = TensorOperator::identity(&spec.full_dims(2));
    let m1 = monodromy_times(spec, zeta1, 1, &id)?;
    let lhs = times_monodromy(spec, zeta2, 2, &local_left_mul(&r, &[1, 2], &m1)?)?;
    let rhs = monodromy_times(spec, zeta2, 2, &local_right_mul(&m1, &r, &[1, 2])?)?;
    Ok(lhs.distance(&rhs))
}

/// `T(ζ) = tr_aux(M(ζ)(𝔸 ⊗ 1))`.
pub fn transfer(spec: &ChainSpec, zeta: C64) -> Result<TensorOperator> {
    let m = monodromy(spec, zeta)?;
    partial_trace(&local_right_mul(&m, &twist_operator(&spec.params).matrix, &[1])?, 1)
}

/// `‖[T(ζ₁), T(ζ₂)]‖`.
pub fn transfer_commutator(spec: &ChainSpec, zeta1: C64, zeta2: C64) -> Result<f64> {
    Ok(transfer(spec, zeta1)?.commutator(&transfer(spec, zeta2)?).norm())
}

/// Largest commutator norm over a batch of spectral pairs.
pub fn transfer_commutator_sweep(spec: &ChainSpec, pairs: &[(C64, C64)], exec: Execution) -> Result<f64> {
    exec.map(pairs, |&(a, b)| transfer_commutator(spec, a, b))
        .into_iter()
        .try_fold(0.0_f64, |acc, r| r.map(|v| acc.max(v)))
}

/// Local Hamiltonian density `ℍ = ζ d/dζ Ř(ζ)` at `ζ = 1`.
pub fn local_density(params: &ModelParams) -> Result<TensorOperator> {
    Ok(&swap_operator(params.dim()) * &r_log_derivative(params, ONE)?)
}

/// `ζ d/dζ T(ζ)` at `ζ = 1` for a homogeneous chain, by the product rule.
pub fn transfer_log_derivative_numerator(spec: &ChainSpec, exec: Execution) -> Result<TensorOperator> {
    if !spec.is_homogeneous() {
        return Err(Error::Unsupported("Hamiltonian extraction needs a homogeneous chain".into()));
    }
    let dims = spec.full_dims(1);
    let r = r_matrix(&spec.params, ONE)?;
    let dr = r_log_derivative(&spec.params, ONE)?;
    let n = spec.sites;
    let terms = exec.map_range(n, |k| -> Result<TensorOperator> {
        let mut m = TensorOperator::identity(&dims);
        for site in 0..n {
            let local = if site == k { &dr } else { &r };
            m = local_left_mul(local, &[1, site + 2], &m)?;
        }
        Ok(m)
    });
    let mut dm = TensorOperator::zeros(&dims);
    for t in terms {
        dm = &dm + &t?;
    }
    partial_trace(&local_right_mul(&dm, &twist_operator(&spec.params).matrix, &[1])?, 1)
}

/// `H = ζ d/dζ log T(ζ)|_{ζ=1} = T′(1) T(1)⁻¹`, with `T(1)` inverted as a
/// twisted cyclic shift.
pub fn hamiltonian_logderiv(spec: &ChainSpec, exec: Execution) -> Result<TensorOperator> {
    if spec.sites < 2 {
        return Err(Error::InvalidParams("the Hamiltonian needs at least two sites".into()));
    }
    let t1 = transfer(spec, ONE)?;
    let t1_inv = t1.monomial_inverse()?;
    Ok(&transfer_log_derivative_numerator(spec, exec)? * &t1_inv)
}

/// `Σ_{i<N} ℍ^{(i,i+1)} + 𝔸^{(1)} ℍ^{(N,1)} (𝔸⁻¹)^{(1)}`.
pub fn hamiltonian_hv(params: &ModelParams, sites: usize) -> Result<TensorOperator> {
    if sites < 2 {
        return Err(Error::InvalidParams("the Hamiltonian needs at least two sites".into()));
    }
    let dims = vec![params.dim(); sites];
    let h = local_density(params)?;
    let mut total = TensorOperator::zeros(&dims);
    for i in 1..sites {
        total = &total + &embed(&h, &[i, i + 1], &dims)?;
    }
    let a = twist_operator(params).matrix;
    let a1 = embed(&a, &[1], &dims)?;
    let a1_inv = embed(&a.inverse()?, &[1], &dims)?;
    let boundary = &(&a1 * &embed(&h, &[sites, 1], &dims)?) * &a1_inv;
    Ok(&total + &boundary)
}

/// The explicit nearest-neighbour form in matrix units, with the closure
/// `E_ij^{(N+1)} = q^{Φ_i − Φ_j} E_ij^{(1)}`.
pub fn hamiltonian_explicit(params: &ModelParams, sites: usize) -> Result<TensorOperator> {
    if sites < 2 {
        return Err(Error::InvalidParams("the Hamiltonian needs at least two sites".into()));
    }
    let n = params.dim();
    let dims = vec![n; sites];
    let q = params.q;
    let unit = |i, j| TensorOperator::unit(n, i, j);
    let mut bracket = TensorOperator::zeros(&dims);
    for k in 1..=sites {
        let (next, wraps) = if k == sites { (1, true) } else { (k + 1, false) };
        let closure = |i: usize, j: usize| -> C64 {
            if wraps {
                params.q_pow(params.phi[i - 1] - params.phi[j - 1])
            } else {
                ONE
            }
        };
        for i in 1..=n {
            for j in 1..=n {
                let (left, right, coeff) = match i.cmp(&j) {
                    std::cmp::Ordering::Equal => continue,
                    std::cmp::Ordering::Less => (unit(j, j), unit(i, i), q),
                    std::cmp::Ordering::Greater => (unit(j, j), unit(i, i), q.inv()),
                };
                let hop = embed(&kron(&unit(j, i), &unit(i, j).scale(closure(i, j))), &[k, next], &dims)?;
                let density = embed(&kron(&left, &right.scale(closure(i, i))), &[k, next], &dims)?;
                bracket = &bracket - &hop;
                bracket = &bracket + &density.scale(coeff);
            }
        }
    }
    Ok(bracket.scale(-(params.s_total() as f64) / params.kappa()))
}

/// The spin-½ XXZ Hamiltonian
/// `−Σ_k [σ⁺σ⁻ + σ⁻σ⁺ + (q+q⁻¹)/4 (σᶻσᶻ − 1)]` with `σ^±_{N+1} = q^{±Φ} σ^±_1`.
pub fn xxz_hamiltonian(params: &ModelParams, sites: usize) -> Result<TensorOperator> {
    if params.l != 1 {
        return Err(Error::Unsupported(format!("the XXZ form needs l = 1, got l = {}", params.l)));
    }
    if sites < 2 {
        return Err(Error::InvalidParams("the Hamiltonian needs at least two sites".into()));
    }
    let dims = vec![2; sites];
    let up = TensorOperator::unit(2, 1, 2);
    let down = TensorOperator::unit(2, 2, 1);
    let sz = TensorOperator::diagonal(&[ONE, -ONE]);
    let twist = params.q_pow(params.phi[0] - params.phi[1]);
    let delta = (params.q + params.q.inv()) / 4.0;
    let id = TensorOperator::identity(&dims);
    let mut h = TensorOperator::zeros(&dims);
    for k in 1..=sites {
        let (next, up_next, down_next) =
            if k == sites { (1, up.scale(twist), down.scale(twist.inv())) } else { (k + 1, up.clone(), down.clone()) };
        let flip =
            &embed(&kron(&up, &down_next), &[k, next], &dims)? + &embed(&kron(&down, &up_next), &[k, next], &dims)?;
        let zz = &embed(&kron(&sz, &sz), &[k, next], &dims)? - &id;
        h = &h - &(&flip + &zz.scale(delta));
    }
    Ok(h)
}

/// Eigenvalues of a Hermitian operator in ascending order; `None` when the
/// operator is not Hermitian to within `tol`.
pub fn hermitian_spectrum(op: &TensorOperator, tol: f64) -> Option<Vec<f64>> {
    if op.distance(&op.adjoint()) > tol {
        return None;
    }
    let eig = SymmetricEigen::new(op.matrix().clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    Some(values)
}
