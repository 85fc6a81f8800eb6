//! Seeded verification suite: draws spectral parameters, runs the selected
//! identity checks and collects the residuals into a reproducible report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::{
    dress_left, dressed_reflection_residual, max_reflection_residual, open_hamiltonian, open_hamiltonian_numeric,
    open_transfer, open_transfer_commutator, open_transfer_split, BoundaryK, BoundaryPair, BoundarySide, OpenChainSpec,
};
use crate::chain::{
    hamiltonian_explicit, hamiltonian_hv, hamiltonian_logderiv, local_density, monodromy, rmm_residual, transfer,
    transfer_commutator_sweep, xxz_hamiltonian, ChainSpec,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::qcore::{ModelParams, DEFAULT_ORDER};
use crate::repkit::{
    double_dual_residual, dual_rep, equivalence_check_sl2, jimbo_image, phi_rep, phibar_rep, verify_defining_relations,
    DualSide, GlFundamental,
};
use crate::rmat::{
    crossing_suite, normalized_unitarity, r_fund, r_matrix, skew_inverse_residuals, sl2_extra_crossing, unitarity,
    ybe_residual, ybe_variant_residuals,
};
use crate::tensorlab::{embed, swap_operator, TensorOperator, C64, ONE};

/// Smallest admissible `|1 − q^k ζ^s|` over the shifts a check can touch.
pub const POLE_MARGIN: f64 = 0.05;

/// Step of the five-point difference used for the open Hamiltonian check.
pub const OPEN_FD_STEP: f64 = 2.5e-4;

/// Step of the five-point difference used for the local density check.
pub const DENSITY_FD_STEP: f64 = 2.5e-4;

/// Smallest residual a deliberately broken input must produce.
pub const CONTROL_FLOOR: f64 = 1e-3;

/// A named identity check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Initial,
    Ybe,
    YbeVariants,
    Unitarity,
    UnitaritySymmetry,
    NormalizedUnitarity,
    SkewInverse,
    Crossing,
    Sl2Crossing,
    DoubleDual,
    Equivalence,
    Relations,
    Jimbo,
    Rmm,
    TransferCommute,
    Hamiltonian,
    Xxz,
    Density,
    Reflection,
    Dressing,
    OpenCommute,
    OpenHamiltonian,
    OpenT1,
}

impl Check {
    pub const ALL: [Check; 23] = [
        Check::Initial,
        Check::Ybe,
        Check::YbeVariants,
        Check::Unitarity,
        Check::UnitaritySymmetry,
        Check::NormalizedUnitarity,
        Check::SkewInverse,
        Check::Crossing,
        Check::Sl2Crossing,
        Check::DoubleDual,
        Check::Equivalence,
        Check::Relations,
        Check::Jimbo,
        Check::Rmm,
        Check::TransferCommute,
        Check::Hamiltonian,
        Check::Xxz,
        Check::Density,
        Check::Reflection,
        Check::Dressing,
        Check::OpenCommute,
        Check::OpenHamiltonian,
        Check::OpenT1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Initial => "initial",
            Check::Ybe => "ybe",
            Check::YbeVariants => "ybe-variants",
            Check::Unitarity => "unitarity",
            Check::UnitaritySymmetry => "unitarity-symmetry",
            Check::NormalizedUnitarity => "normalized-unitarity",
            Check::SkewInverse => "skew-inverse",
            Check::Crossing => "crossing",
            Check::Sl2Crossing => "sl2-crossing",
            Check::DoubleDual => "double-dual",
            Check::Equivalence => "equivalence",
            Check::Relations => "relations",
            Check::Jimbo => "jimbo",
            Check::Rmm => "rmm",
            Check::TransferCommute => "transfer-commute",
            Check::Hamiltonian => "hamiltonian",
            Check::Xxz => "xxz",
            Check::Density => "density",
            Check::Reflection => "reflection",
            Check::Dressing => "dressing",
            Check::OpenCommute => "open-commute",
            Check::OpenHamiltonian => "open-hamiltonian",
            Check::OpenT1 => "open-t1",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Check::Initial => 1e-14,
            Check::Ybe | Check::YbeVariants | Check::Crossing | Check::DoubleDual => 1e-10,
            Check::Rmm | Check::TransferCommute => 1e-10,
            Check::Unitarity | Check::Sl2Crossing => 1e-11,
            Check::UnitaritySymmetry | Check::SkewInverse | Check::Relations | Check::Xxz | Check::OpenT1 => 1e-12,
            Check::NormalizedUnitarity => 1e-8,
            Check::Equivalence => 1e-13,
            Check::Jimbo => 0.0,
            Check::Hamiltonian | Check::Dressing | Check::OpenCommute => 1e-9,
            Check::Density => 1e-7,
            Check::Reflection => 1e-11,
            Check::OpenHamiltonian => 1e-6,
        }
    }

    fn stream(self) -> u64 {
        Check::ALL.iter().position(|&c| c == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown check {s:?}")))
    }
}

/// Everything a suite run depends on.
#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub params: ModelParams,
    /// Chain length used by the chain and open-chain checks.
    pub sites: usize,
    /// Number of random spectral samples per check.
    pub samples: usize,
    pub seed: u64,
    /// Truncation order of the `ρ` series.
    pub order: usize,
    /// Per-check tolerance overrides.
    pub tolerances: BTreeMap<Check, f64>,
    /// Checks to run; empty means all.
    pub checks: Vec<Check>,
    pub exec: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            sites: 3,
            samples: 20,
            seed: 1,
            order: DEFAULT_ORDER,
            tolerances: BTreeMap::new(),
            checks: Vec::new(),
            exec: Execution::default(),
        }
    }
}

impl SuiteConfig {
    pub fn tolerance(&self, check: Check) -> f64 {
        self.tolerances.get(&check).copied().unwrap_or_else(|| check.default_tolerance())
    }

    pub fn selected(&self) -> Vec<Check> {
        if self.checks.is_empty() {
            Check::ALL.to_vec()
        } else {
            let mut v = self.checks.clone();
            v.sort();
            v.dedup();
            v
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.sites < 2 {
            return Err(Error::InvalidParams("the suite needs chains of at least two sites".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParams("at least one sample per check is required".into()));
        }
        if self.order == 0 {
            return Err(Error::InvalidParams("series order must be at least 1".into()));
        }
        for (check, &tol) in &self.tolerances {
            if !(tol >= 0.0 && tol.is_finite()) || (tol == 0.0 && *check != Check::Jimbo) {
                return Err(Error::InvalidParams(format!("tolerance for {check} must be positive, got {tol}")));
            }
        }
        Ok(())
    }
}

/// Spectral parameter sampler: one ChaCha8 stream per check, points on the
/// annulus `0.5 ≤ |ζ| ≤ 1.5`, rejecting tuples near a pole of any operator the
/// check evaluates.
pub struct Sampler {
    rng: ChaCha8Rng,
    params: ModelParams,
}

impl Sampler {
    pub fn new(params: &ModelParams, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, params: params.clone() }
    }

    pub fn for_check(config: &SuiteConfig, check: Check) -> Self {
        Self::new(&config.params, config.seed, check.stream())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// A point with modulus in `[r_min, r_max]` and uniform phase.
    pub fn point(&mut self, r_min: f64, r_max: f64) -> C64 {
        let r = self.uniform(r_min, r_max);
        let theta = self.uniform(0.0, std::f64::consts::TAU);
        C64::from_polar(r, theta)
    }

    fn admissible(&self, x: C64) -> bool {
        let span = 2 * (self.params.l as i32 + 1) + 2;
        (-span..=span).all(|k| (ONE - self.params.q_int(k) * x).norm() >= POLE_MARGIN)
    }

    /// `count` points on the annulus such that every ratio and product of two
    /// of them, and every point itself, stays away from the poles.
    pub fn zetas(&mut self, count: usize) -> Vec<C64> {
        loop {
            let zs: Vec<C64> = (0..count).map(|_| self.point(0.5, 1.5)).collect();
            let mut ok = zs.iter().all(|&z| self.admissible(self.params.zeta_s(z)));
            for i in 0..count {
                for j in 0..count {
                    if i != j {
                        ok &= self.admissible(self.params.zeta_s(zs[i] / zs[j]));
                        ok &= self.admissible(self.params.zeta_s(zs[i] * zs[j]));
                    }
                }
            }
            if ok {
                return zs;
            }
        }
    }

    pub fn pair(&mut self) -> (C64, C64) {
        let z = self.zetas(2);
        (z[0], z[1])
    }

    pub fn triple(&mut self) -> [C64; 3] {
        let z = self.zetas(3);
        [z[0], z[1], z[2]]
    }

    /// A pair whose ratio satisfies `|(ζ₁/ζ₂)^s| ≤ bound`.
    pub fn small_ratio_pair(&mut self, bound: f64) -> (C64, C64) {
        let s = self.params.s_total() as f64;
        let top = bound.powf(1.0 / s);
        loop {
            let z2 = self.point(0.5, 1.5);
            let w = self.point(0.1 * top, top);
            if self.admissible(self.params.zeta_s(w)) {
                return (z2 * w, z2);
            }
        }
    }
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    /// Largest residual over all samples; `None` when skipped or failed to run.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Smallest residual of the deliberately broken inputs, when the check has any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<f64>,
    /// Named partial residuals and measured constants.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

/// Parameter echo in the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub l: usize,
    pub q: [f64; 2],
    pub s: Vec<u32>,
    pub phi: Vec<f64>,
    pub sites: usize,
    pub samples: usize,
    pub seed: u64,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
    pub wall_time_s: f64,
}

impl Report {
    /// JSON without the wall-time field; identical for identical configurations.
    pub fn canonical_json(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("wall_time_s");
        }
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// What a check body returns before tolerances are applied.
#[derive(Default)]
struct Measured {
    samples: usize,
    residual: f64,
    control: Option<f64>,
    details: BTreeMap<String, f64>,
    skipped: Option<String>,
}

impl Measured {
    fn skip(reason: impl Into<String>) -> Self {
        Self { skipped: Some(reason.into()), ..Default::default() }
    }

    fn push(&mut self, value: f64) {
        self.samples += 1;
        self.residual = if value.is_nan() { f64::NAN } else { self.residual.max(value) };
    }

    fn detail(&mut self, key: &str, value: f64) {
        let entry = self.details.entry(key.to_string()).or_insert(0.0);
        *entry = entry.max(value);
    }

    fn note(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }

    fn control(&mut self, value: f64) {
        self.control = Some(self.control.map_or(value, |c| c.min(value)));
    }
}

/// Whether the identity operator solves both reflection equations.
pub fn identity_is_solution(params: &ModelParams) -> bool {
    params.l == 1 && params.s[0] == params.s[1]
}

/// Default boundary pair: the identity where it is a solution, the gauged unit
/// pair otherwise.
pub fn default_boundary(params: &ModelParams) -> BoundaryPair {
    if identity_is_solution(params) {
        BoundaryPair::identity(params)
    } else {
        BoundaryPair::gauged_unit(params)
    }
}

/// Boundary pairs exercised by the open-chain checks.
fn boundary_pairs(params: &ModelParams, sampler: &mut Sampler) -> Result<Vec<(&'static str, BoundaryPair)>> {
    let mut pairs = vec![("gauged-unit", BoundaryPair::gauged_unit(params))];
    if identity_is_solution(params) {
        pairs.push(("identity", BoundaryPair::identity(params)));
    }
    if params.l == 1 {
        let xi_left = sampler.point(0.5, 1.5);
        let xi_right = sampler.point(0.5, 1.5);
        pairs.push((
            "diagonal-family",
            BoundaryPair {
                left: BoundaryK::sl2_left(params, xi_left)?,
                right: BoundaryK::sl2_right(params, xi_right)?,
            },
        ));
    }
    Ok(pairs)
}

fn relative(a: &TensorOperator, b: &TensorOperator) -> f64 {
    a.distance(b) / a.norm().max(b.norm()).max(1e-300)
}

fn inhomogeneous_chain(params: &ModelParams, sites: usize, sampler: &mut Sampler) -> Result<ChainSpec> {
    let etas = sampler.zetas(sites);
    ChainSpec::new(params.clone(), etas)
}

fn run_check(check: Check, config: &SuiteConfig) -> Result<Measured> {
    let p = &config.params;
    let l = p.l;
    let n = config.samples;
    let mut rng = Sampler::for_check(config, check);
    let mut m = Measured::default();
    match check {
        Check::Initial => {
            let flip = swap_operator(p.dim());
            let unit = TensorOperator::identity(&[p.dim(), p.dim()]);
            for _ in 0..n {
                let z = rng.point(0.5, 1.5);
                let b = r_fund(p, z, z)?;
                m.detail("r-flip", b.r.max_abs_diff(&flip));
                m.detail("rcheck-unit", b.r_check.max_abs_diff(&unit));
                m.push(b.r.max_abs_diff(&flip).max(b.r_check.max_abs_diff(&unit)));
            }
        }
        Check::Ybe => {
            for _ in 0..n {
                let [a, b, c] = rng.triple();
                m.push(ybe_residual(p, a, b, c)?);
            }
        }
        Check::YbeVariants => {
            for _ in 0..n {
                let r = ybe_variant_residuals(p, rng.triple())?;
                m.detail("inverse", r.inverse);
                m.detail("transpose-first", r.transpose_first);
                m.detail("transpose-last", r.transpose_last);
                m.push(r.max());
            }
        }
        Check::Unitarity => {
            for _ in 0..n {
                let (a, b) = rng.pair();
                m.push(unitarity(p, a, b)?.off_norm);
            }
        }
        Check::UnitaritySymmetry => {
            for _ in 0..n {
                let (a, b) = rng.pair();
                let forward = unitarity(p, a, b)?;
                let backward = unitarity(p, b, a)?;
                m.push(forward.symmetry.max((forward.c - backward.c).norm()));
            }
        }
        Check::NormalizedUnitarity => {
            for _ in 0..n {
                let (a, b) = rng.small_ratio_pair(0.5);
                let u = normalized_unitarity(p, a, b, config.order)?;
                m.detail("off-scalar", u.off_norm);
                m.detail("c-minus-one", (u.c - ONE).norm());
                m.push(u.off_norm.max((u.c - ONE).norm()));
            }
        }
        Check::SkewInverse => {
            for _ in 0..n {
                let (a, b) = rng.pair();
                let r = skew_inverse_residuals(&r_fund(p, a, b)?)?;
                m.detail("tilde_left", r.tilde_left);
                m.detail("tilde_right", r.tilde_right);
                m.detail("dtilde_left", r.dtilde_left);
                m.detail("dtilde_right", r.dtilde_right);
                m.detail("route-agreement", r.route_agreement);
                m.push(r.max());
            }
        }
        Check::Crossing => {
            for _ in 0..n {
                let (a, b) = rng.pair();
                let r = crossing_suite(p, a, b)?;
                for (name, value) in r.dual_ybe.iter().chain(r.explicit.iter()) {
                    m.detail(name, *value);
                }
                m.push(r.dual_ybe.iter().chain(r.explicit.iter()).map(|(_, v)| *v).fold(0.0, f64::max));
            }
        }
        Check::Sl2Crossing => {
            if l != 1 {
                return Ok(Measured::skip("the extra crossing relations exist only for l = 1"));
            }
            for _ in 0..n {
                let (a, b) = rng.pair();
                let rels = sl2_extra_crossing(p, a, b)?;
                for (name, value) in &rels {
                    m.detail(name, *value);
                }
                m.push(rels.iter().map(|(_, v)| *v).fold(0.0, f64::max));
            }
        }
        Check::DoubleDual => {
            for _ in 0..n {
                let (a, b) = rng.pair();
                let r = crossing_suite(p, a, b)?;
                let rep = double_dual_residual(p, a)?;
                m.detail("proportionality-spread", r.double_dual_spread);
                m.detail("representation", rep);
                m.note("constant-re", r.double_dual_constant.re);
                m.note("constant-im", r.double_dual_constant.im);
                m.push(r.double_dual_spread.max(rep));
            }
        }
        Check::Equivalence => {
            for _ in 0..n {
                let r = equivalence_check_sl2(p, rng.point(0.5, 1.5))?;
                m.detail("right-dual", r.star_right);
                m.detail("left-dual", r.star_left);
                m.push(r.star_right.max(r.star_left));
            }
        }
        Check::Relations => {
            for _ in 0..n {
                let z = rng.point(0.5, 1.5);
                let base = phi_rep(p, z);
                let reps = [
                    ("phi", base.clone()),
                    ("phibar", phibar_rep(p, z)),
                    ("right-dual", dual_rep(&base, DualSide::Right)),
                    ("left-dual", dual_rep(&base, DualSide::Left)),
                ];
                let mut worst: f64 = 0.0;
                for (name, rep) in &reps {
                    let r = verify_defining_relations(rep)?.max();
                    m.detail(name, r);
                    worst = worst.max(r);
                }
                m.push(worst);
                let mut broken = base.clone();
                broken.set_e(1, base.e(1).scale(C64::new(2.0, 0.0)));
                m.control(verify_defining_relations(&broken)?.max());
            }
        }
        Check::Jimbo => {
            for _ in 0..n {
                let z = rng.point(0.5, 1.5);
                let first = jimbo_image(p, GlFundamental::First, z);
                let last = jimbo_image(p, GlFundamental::Last, z);
                let (phi, phibar) = (phi_rep(p, z), phibar_rep(p, z));
                let dev = |a: &crate::repkit::Representation, b: &crate::repkit::Representation| {
                    if a.same_images(b) {
                        0.0
                    } else {
                        a.max_deviation(b).max(f64::MIN_POSITIVE)
                    }
                };
                m.detail("first", dev(&first, &phi));
                m.detail("last", dev(&last, &phibar));
                m.push(dev(&first, &phi).max(dev(&last, &phibar)));
            }
        }
        Check::Rmm => {
            for _ in 0..n {
                let spec = inhomogeneous_chain(p, config.sites, &mut rng)?;
                let (a, b) = rng.pair();
                m.push(rmm_residual(&spec, a, b)?);
            }
        }
        Check::TransferCommute => {
            let spec = inhomogeneous_chain(p, config.sites, &mut rng)?;
            let pairs: Vec<(C64, C64)> = (0..n).map(|_| rng.pair()).collect();
            let value = transfer_commutator_sweep(&spec, &pairs, config.exec)?;
            m.samples = n;
            m.residual = value;
        }
        Check::Hamiltonian => {
            let spec = ChainSpec::homogeneous(p.clone(), config.sites)?;
            let logderiv = hamiltonian_logderiv(&spec, config.exec)?;
            let explicit = hamiltonian_explicit(p, config.sites)?;
            let density_sum = hamiltonian_hv(p, config.sites)?;
            m.detail("logderiv-vs-explicit", logderiv.max_abs_diff(&explicit));
            m.detail("logderiv-vs-density-sum", logderiv.max_abs_diff(&density_sum));
            m.push(logderiv.max_abs_diff(&explicit).max(logderiv.max_abs_diff(&density_sum)));
        }
        Check::Xxz => {
            if l != 1 {
                return Ok(Measured::skip("the XXZ form exists only for l = 1"));
            }
            let explicit = hamiltonian_explicit(p, config.sites)?;
            let xxz = xxz_hamiltonian(p, config.sites)?.scale(-(p.s_total() as f64) / p.kappa());
            m.push(explicit.max_abs_diff(&xxz));
        }
        Check::Density => {
            let analytic = local_density(p)?;
            let flip = swap_operator(p.dim());
            let rcheck = |z: f64| -> Result<TensorOperator> { Ok(&flip * &r_matrix(p, C64::new(z, 0.0))?) };
            let h = DENSITY_FD_STEP;
            let numeric = (&(&rcheck(1.0 - 2.0 * h)? - &rcheck(1.0 + 2.0 * h)?)
                + &(&rcheck(1.0 + h)? - &rcheck(1.0 - h)?).scale(C64::new(8.0, 0.0)))
                .scale(C64::new(1.0 / (12.0 * h), 0.0));
            m.push(analytic.max_abs_diff(&numeric));
        }
        Check::Reflection => {
            let mut ks: Vec<(String, BoundarySide, BoundaryK)> = Vec::new();
            for side in [BoundarySide::Left, BoundarySide::Right] {
                ks.push((format!("gauged-unit-{side}"), side, BoundaryK::gauged_unit(p, side)));
                if identity_is_solution(p) {
                    ks.push((format!("identity-{side}"), side, BoundaryK::identity(p)));
                }
            }
            if l == 1 {
                ks.push(("family-L".into(), BoundarySide::Left, BoundaryK::sl2_left(p, rng.point(0.5, 1.5))?));
                ks.push(("family-R".into(), BoundarySide::Right, BoundaryK::sl2_right(p, rng.point(0.5, 1.5))?));
            }
            let pairs: Vec<(C64, C64)> = (0..n).map(|_| rng.pair()).collect();
            for (name, side, k) in &ks {
                let r = max_reflection_residual(p, *side, k, &pairs)?;
                m.detail(name, r);
                m.residual = m.residual.max(r);
            }
            m.samples = pairs.len();
            let ramp: Vec<C64> = (1..=p.dim()).map(|k| C64::new(k as f64, 0.0)).collect();
            let broken = BoundaryK::Sampled { samples: vec![(ONE, TensorOperator::diagonal(&ramp))] };
            for side in [BoundarySide::Left, BoundarySide::Right] {
                m.control(max_reflection_residual(p, side, &broken, &pairs)?);
            }
        }
        Check::Dressing => {
            let pairs = boundary_pairs(p, &mut rng)?;
            for _ in 0..n {
                let (a, b) = rng.pair();
                let mut worst: f64 = 0.0;
                for sites in 1..=config.sites.min(2) {
                    let spec = inhomogeneous_chain(p, sites, &mut rng)?;
                    for (name, pair) in &pairs {
                        let left = dressed_reflection_residual(&spec, BoundarySide::Left, &pair.left, a, b)?;
                        let right = dressed_reflection_residual(&spec, BoundarySide::Right, &pair.right, a, b)?;
                        m.detail(&format!("{name}-m{sites}"), left.max(right));
                        worst = worst.max(left).max(right);
                    }
                }
                m.push(worst);
            }
        }
        Check::OpenCommute => {
            let pairs = boundary_pairs(p, &mut rng)?;
            let sites = config.sites.min(3);
            for _ in 0..n {
                let chain = inhomogeneous_chain(p, sites, &mut rng)?;
                let (a, b) = rng.pair();
                let mut worst: f64 = 0.0;
                for (name, pair) in &pairs {
                    let spec = OpenChainSpec { chain: chain.clone(), boundary: pair.clone() };
                    let comm = open_transfer_commutator(&spec, a, b)?;
                    let t = open_transfer(&spec, a)?;
                    let split = (0..=sites)
                        .map(|k| Ok(relative(&t, &open_transfer_split(&spec, a, k)?)))
                        .collect::<Result<Vec<f64>>>()?
                        .into_iter()
                        .fold(0.0, f64::max);
                    m.detail(&format!("{name}-commutator"), comm);
                    m.detail(&format!("{name}-split-form"), split);
                    worst = worst.max(comm).max(split);
                }
                m.push(worst);
            }
        }
        Check::OpenHamiltonian => {
            let pairs = boundary_pairs(p, &mut rng)?;
            let chain = ChainSpec::homogeneous(p.clone(), config.sites)?;
            for (name, pair) in &pairs {
                let spec = OpenChainSpec { chain: chain.clone(), boundary: pair.clone() };
                let r = open_hamiltonian(&spec)?.max_abs_diff(&open_hamiltonian_numeric(&spec, OPEN_FD_STEP)?);
                m.detail(name, r);
                m.push(r);
            }
        }
        Check::OpenT1 => {
            let pairs = boundary_pairs(p, &mut rng)?;
            let chain = ChainSpec::homogeneous(p.clone(), config.sites)?;
            let dims = chain.quantum_dims();
            for (name, pair) in &pairs {
                let spec = OpenChainSpec { chain: chain.clone(), boundary: pair.clone() };
                let t1 = open_transfer(&spec, ONE)?;
                let expected =
                    embed(&pair.left.eval(ONE)?, &[config.sites], &dims)?.scale(pair.right.eval(ONE)?.trace());
                let r = relative(&t1, &expected);
                m.detail(name, r);
                m.push(r);
            }
        }
    }
    Ok(m)
}

fn finish(check: Check, config: &SuiteConfig, outcome: Result<Measured>) -> CheckResult {
    let tolerance = config.tolerance(check);
    let mut result = CheckResult {
        name: check.name().to_string(),
        samples: 0,
        max_residual: None,
        tolerance,
        passed: false,
        skipped: None,
        error: None,
        control: None,
        details: BTreeMap::new(),
    };
    match outcome {
        Err(e) => result.error = Some(e.to_string()),
        Ok(m) if m.skipped.is_some() => {
            result.skipped = m.skipped;
            result.passed = true;
        }
        Ok(m) => {
            let control_ok = m.control.is_none_or(|c| c > CONTROL_FLOOR);
            result.passed = m.residual.is_finite() && m.residual <= tolerance && control_ok;
            result.samples = m.samples;
            result.max_residual = Some(m.residual);
            result.control = m.control;
            result.details = m.details;
        }
    }
    result
}

/// Runs the selected checks. Checks are fanned out over the execution strategy;
/// the report keeps the canonical check order.
pub fn run_suite(config: &SuiteConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    let checks = config.selected();
    let results = config.exec.map(&checks, |&check| finish(check, config, run_check(check, config)));
    let p = &config.params;
    Ok(Report {
        config: ConfigEcho {
            l: p.l,
            q: [p.q.re, p.q.im],
            s: p.s.clone(),
            phi: p.phi.clone(),
            sites: config.sites,
            samples: config.samples,
            seed: config.seed,
            order: config.order,
        },
        all_passed: results.iter().all(|r| r.passed),
        checks: results,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Operators that can be written out with [`dump_operator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpKind {
    R,
    RCheck,
    Transfer,
    Hamiltonian,
    Monodromy,
    KDressed,
    OpenTransfer,
}

impl DumpKind {
    pub const ALL: [DumpKind; 7] = [
        DumpKind::R,
        DumpKind::RCheck,
        DumpKind::Transfer,
        DumpKind::Hamiltonian,
        DumpKind::Monodromy,
        DumpKind::KDressed,
        DumpKind::OpenTransfer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DumpKind::R => "r",
            DumpKind::RCheck => "rcheck",
            DumpKind::Transfer => "transfer",
            DumpKind::Hamiltonian => "hamiltonian",
            DumpKind::Monodromy => "monodromy",
            DumpKind::KDressed => "k-dressed",
            DumpKind::OpenTransfer => "open-transfer",
        }
    }
}

impl FromStr for DumpKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DumpKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown operator kind {s:?}")))
    }
}

/// Builds the requested operator at spectral parameter `zeta` on a homogeneous
/// chain of `config.sites` sites; open-chain kinds use `boundary`, or
/// [`default_boundary`] when it is `None`.
pub fn build_operator(
    kind: DumpKind,
    config: &SuiteConfig,
    zeta: C64,
    boundary: Option<&BoundaryPair>,
) -> Result<TensorOperator> {
    let p = &config.params;
    let fallback;
    let boundary = match boundary {
        Some(b) => b,
        None => {
            fallback = default_boundary(p);
            &fallback
        }
    };
    let chain = || ChainSpec::homogeneous(p.clone(), config.sites);
    match kind {
        DumpKind::R => r_matrix(p, zeta),
        DumpKind::RCheck => Ok(&swap_operator(p.dim()) * &r_matrix(p, zeta)?),
        DumpKind::Transfer => transfer(&chain()?, zeta),
        DumpKind::Hamiltonian => hamiltonian_explicit(p, config.sites),
        DumpKind::Monodromy => monodromy(&chain()?, zeta),
        DumpKind::KDressed => dress_left(&chain()?, &boundary.left, zeta),
        DumpKind::OpenTransfer => open_transfer(&OpenChainSpec { chain: chain()?, boundary: boundary.clone() }, zeta),
    }
}

/// Writes the requested operator as a JSON matrix dump.
pub fn dump_operator(
    kind: DumpKind,
    config: &SuiteConfig,
    zeta: C64,
    boundary: Option<&BoundaryPair>,
    path: &Path,
) -> Result<TensorOperator> {
    let op = build_operator(kind, config, zeta, boundary)?;
    op.save_json(path)?;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("nope".parse::<Check>().is_err());
        for k in DumpKind::ALL {
            assert_eq!(k.name().parse::<DumpKind>().unwrap(), k);
        }
    }

    #[test]
    fn sampler_is_seeded_and_stays_on_the_annulus() {
        let p = ModelParams::default();
        let a = Sampler::new(&p, 5, 2).zetas(4);
        let b = Sampler::new(&p, 5, 2).zetas(4);
        let c = Sampler::new(&p, 5, 3).zetas(4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|z| (0.5..=1.5).contains(&z.norm())));
    }

    #[test]
    fn small_ratio_pairs_respect_the_bound() {
        let p = ModelParams::homogeneous(2, C64::new(0.6, 0.0));
        let mut s = Sampler::new(&p, 1, 0);
        for _ in 0..50 {
            let (a, b) = s.small_ratio_pair(0.5);
            assert!(p.zeta_s(a / b).norm() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn filter_and_tolerance_override() {
        let config = SuiteConfig {
            checks: vec![Check::Ybe, Check::Initial, Check::Ybe],
            tolerances: BTreeMap::from([(Check::Ybe, 1e-30)]),
            samples: 3,
            ..Default::default()
        };
        let report = run_suite(&config).unwrap();
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["initial", "ybe"]);
        assert!(report.checks[0].passed);
        assert!(!report.checks[1].passed);
        assert!(!report.all_passed);
    }

    #[test]
    fn invalid_tolerance_is_rejected() {
        let config = SuiteConfig { tolerances: BTreeMap::from([(Check::Ybe, -1.0)]), ..Default::default() };
        assert!(run_suite(&config).is_err());
    }
}
