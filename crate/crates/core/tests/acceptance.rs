//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use integrax::boundary::{
    dressed_reflection_residual, max_reflection_residual, open_hamiltonian, open_hamiltonian_numeric, open_transfer,
    open_transfer_commutator, BoundaryK, BoundaryPair, BoundarySide, OpenChainSpec,
};
use integrax::chain::{
    hamiltonian_explicit, hamiltonian_logderiv, local_density, rmm_residual, transfer_commutator, xxz_hamiltonian,
    ChainSpec,
};
use integrax::error::Result;
use integrax::exec::Execution;
use integrax::qcore::{ModelParams, DEFAULT_ORDER};
use integrax::repkit::{
    jimbo_image, phi_rep, phibar_rep, rep_by_label, verify_defining_relations, GlFundamental, RepLabel,
};
use integrax::rmat::{
    crossing_suite, normalized_unitarity, r_fund, r_matrix, skew_inverse_residuals, sl2_extra_crossing, unitarity,
    ybe_residual, ybe_variant_residuals,
};
use integrax::suite::{run_suite, Sampler, SuiteConfig, DENSITY_FD_STEP, OPEN_FD_STEP};
use integrax::tensorlab::{embed, swap_operator, TensorOperator, C64, ONE};

const SEED: u64 = 20_240_917;

/// One measured quantity compared against its bound.
struct Gate {
    label: String,
    value: f64,
    bound: f64,
    kind: Bound,
}

#[derive(Clone, Copy)]
enum Bound {
    Below,
    AtMost,
    Above,
}

impl Gate {
    fn below(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { label: label.into(), value, bound, kind: Bound::Below }
    }

    fn at_most(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { label: label.into(), value, bound, kind: Bound::AtMost }
    }

    fn above(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { label: label.into(), value, bound, kind: Bound::Above }
    }

    fn passed(&self) -> bool {
        match self.kind {
            Bound::Below => self.value < self.bound,
            Bound::AtMost => self.value <= self.bound,
            Bound::Above => self.value > self.bound,
        }
    }

    fn describe(&self) -> String {
        let op = match self.kind {
            Bound::Below => "<",
            Bound::AtMost => "<=",
            Bound::Above => ">",
        };
        format!("{} {:.2e} {op} {:.0e}", self.label, self.value, self.bound)
    }
}

/// Running maximum of a family of residuals.
#[derive(Default)]
struct Worst(f64);

impl Worst {
    fn push(&mut self, v: f64) {
        self.0 = if v.is_nan() || self.0.is_nan() { f64::NAN } else { self.0.max(v) };
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A homogeneous model with real q and a graded, twisted one with complex q.
fn models(l: usize) -> Vec<ModelParams> {
    let plain = ModelParams::homogeneous(l, c(0.7, 0.0));
    let graded = ModelParams::homogeneous(l, c(0.6, 0.15))
        .with_grading((0..=l as u32).map(|k| if k == 0 { 2 } else { 1 + k % 2 }).collect())
        .and_then(|p| p.with_twist((0..=l).map(|k| 0.35 * k as f64 - 0.2).collect()))
        .expect("valid model");
    vec![plain, graded]
}

fn stream(criterion: u64, l: usize, variant: usize) -> u64 {
    criterion * 100 + l as u64 * 10 + variant as u64
}

fn random_twist(sampler: &mut Sampler, l: usize) -> Vec<f64> {
    (0..=l).map(|_| sampler.uniform(-1.0, 1.0)).collect()
}

fn initial_condition() -> Result<Vec<Gate>> {
    let mut flip = Worst::default();
    let mut check = Worst::default();
    for l in 1..=3 {
        for p in models(l) {
            let r = r_matrix(&p, ONE)?;
            let p_op = swap_operator(p.dim());
            flip.push(r.max_abs_diff(&p_op));
            check.push((&p_op * &r).max_abs_diff(&TensorOperator::identity(&[p.dim(), p.dim()])));
        }
    }
    Ok(vec![Gate::at_most("R(1|1) vs P", flip.0, 1e-14), Gate::at_most("P*R(1|1) vs 1", check.0, 1e-14)])
}

fn yang_baxter() -> Result<Vec<Gate>> {
    let mut plain = Worst::default();
    let mut variants = Worst::default();
    let mut count = 0;
    for l in 1..=3 {
        for (v, p) in models(l).into_iter().enumerate() {
            let mut sampler = Sampler::new(&p, SEED, stream(2, l, v));
            for _ in 0..100 {
                let [a, b, z] = sampler.triple();
                plain.push(ybe_residual(&p, a, b, z)?);
                if l <= 2 {
                    variants.push(ybe_variant_residuals(&p, [a, b, z])?.max());
                }
                count += 1;
            }
        }
    }
    Ok(vec![
        Gate::below(format!("YBE over {count} samples"), plain.0, 1e-10),
        Gate::below("inverse and transposed variants (l <= 2)", variants.0, 1e-10),
    ])
}

fn unitarity_gates() -> Result<Vec<Gate>> {
    let mut off = Worst::default();
    let mut sym = Worst::default();
    let mut norm = Worst::default();
    for l in 1..=3 {
        for (v, p) in models(l).into_iter().enumerate() {
            let mut sampler = Sampler::new(&p, SEED, stream(3, l, v));
            for _ in 0..30 {
                let (a, b) = sampler.pair();
                let u = unitarity(&p, a, b)?;
                off.push(u.off_norm);
                sym.push(u.symmetry);
                let (a, b) = sampler.small_ratio_pair(0.5);
                let n = normalized_unitarity(&p, a, b, DEFAULT_ORDER)?;
                norm.push((n.c - ONE).norm());
            }
        }
    }
    Ok(vec![
        Gate::below("off-scalar norm", off.0, 1e-11),
        Gate::below("C(z1|z2) - C(z2|z1)", sym.0, 1e-12),
        Gate::below("|C - 1| with rho at order 80, |z^s| <= 0.5", norm.0, 1e-8),
    ])
}

fn skew_inverses() -> Result<Vec<Gate>> {
    let mut defining = Worst::default();
    let mut routes = Worst::default();
    for l in 1..=2 {
        for (v, p) in models(l).into_iter().enumerate() {
            let mut sampler = Sampler::new(&p, SEED, stream(4, l, v));
            for _ in 0..30 {
                let (a, b) = sampler.pair();
                let report = skew_inverse_residuals(&r_fund(&p, a, b)?)?;
                defining
                    .push(report.tilde_left.max(report.tilde_right).max(report.dtilde_left).max(report.dtilde_right));
                routes.push(report.route_agreement);
            }
        }
    }
    Ok(vec![
        Gate::below("skew-inverse defining identities", defining.0, 1e-12),
        Gate::below("t1 route vs t2 route", routes.0, 1e-12),
    ])
}

fn crossing() -> Result<Vec<Gate>> {
    let mut explicit = Worst::default();
    let mut dual = Worst::default();
    let mut spread = Worst::default();
    let mut extra = Worst::default();
    for l in 1..=2 {
        for (v, p) in models(l).into_iter().enumerate() {
            let mut sampler = Sampler::new(&p, SEED, stream(5, l, v));
            for _ in 0..20 {
                let (a, b) = sampler.pair();
                let report = crossing_suite(&p, a, b)?;
                report.explicit.iter().for_each(|(_, r)| explicit.push(*r));
                report.dual_ybe.iter().for_each(|(_, r)| dual.push(*r));
                spread.push(report.double_dual_spread);
                if l == 1 {
                    sl2_extra_crossing(&p, a, b)?.iter().for_each(|(_, r)| extra.push(*r));
                }
            }
        }
    }
    Ok(vec![
        Gate::below("explicit crossing with rational D", explicit.0, 1e-10),
        Gate::below("dual-space Yang-Baxter", dual.0, 1e-10),
        Gate::below("sl2 relations with O", extra.0, 1e-11),
        Gate::below("double-dual ratio spread", spread.0, 1e-10),
    ])
}

fn chains() -> Result<Vec<Gate>> {
    let mut rmm = Worst::default();
    let mut commute = Worst::default();
    for l in 1..=2 {
        for (v, base) in models(l).into_iter().enumerate() {
            for sites in 1..=4 {
                let mut sampler = Sampler::new(&base, SEED, stream(6, l, v) * 10 + sites as u64);
                for _ in 0..6 {
                    let p = base.clone().with_twist(random_twist(&mut sampler, l))?;
                    let zs = sampler.zetas(sites + 2);
                    let spec = ChainSpec::new(p, zs[2..].to_vec())?;
                    if sites <= 3 {
                        rmm.push(rmm_residual(&spec, zs[0], zs[1])?);
                    }
                    commute.push(transfer_commutator(&spec, zs[0], zs[1])?);
                }
            }
        }
    }
    Ok(vec![
        Gate::below("RMM (N <= 3, l <= 2)", rmm.0, 1e-10),
        Gate::below("[T(z1), T(z2)] (N <= 4, l <= 2, twisted, inhomogeneous)", commute.0, 1e-10),
    ])
}

fn hamiltonians() -> Result<Vec<Gate>> {
    let mut routes = Worst::default();
    let mut xxz = Worst::default();
    let mut density = Worst::default();
    for l in 1..=2 {
        for p in models(l) {
            for sites in 2..=3 {
                let spec = ChainSpec::homogeneous(p.clone(), sites)?;
                let explicit = hamiltonian_explicit(&p, sites)?;
                routes.push(hamiltonian_logderiv(&spec, Execution::default())?.max_abs_diff(&explicit));
                if l == 1 {
                    let scaled = xxz_hamiltonian(&p, sites)?.scale(-(p.s_total() as f64) / p.kappa());
                    xxz.push(explicit.max_abs_diff(&scaled));
                }
            }
            let h = DENSITY_FD_STEP;
            let flip = swap_operator(p.dim());
            let rc = |x: f64| -> Result<TensorOperator> { Ok(&flip * &r_matrix(&p, c(x, 0.0))?) };
            let fd = (&(&rc(1.0 - 2.0 * h)? - &rc(1.0 + 2.0 * h)?)
                + &(&rc(1.0 + h)? - &rc(1.0 - h)?).scale(c(8.0, 0.0)))
                .scale(c(1.0 / (12.0 * h), 0.0));
            density.push(local_density(&p)?.max_abs_diff(&fd));
        }
    }
    Ok(vec![
        Gate::below("log-derivative vs explicit (N in {2,3}, l <= 2)", routes.0, 1e-9),
        Gate::below("explicit vs -(s/kappa) H_XXZ", xxz.0, 1e-12),
        Gate::below("density vs finite difference", density.0, 1e-7),
    ])
}

fn open_chains() -> Result<Vec<Gate>> {
    let sl2 = ModelParams::homogeneous(1, c(0.7, 0.0));
    let mut sampler = Sampler::new(&sl2, SEED, stream(8, 1, 0));
    let pairs: Vec<(C64, C64)> = (0..20).map(|_| sampler.pair()).collect();
    let identity = BoundaryK::identity(&sl2);
    let id_residual = max_reflection_residual(&sl2, BoundarySide::Left, &identity, &pairs)?
        .max(max_reflection_residual(&sl2, BoundarySide::Right, &identity, &pairs)?);

    // Negative controls: identity K where it is not a solution, and a dense constant K.
    let rank2 = ModelParams::homogeneous(2, c(0.7, 0.0));
    let mut rank2_sampler = Sampler::new(&rank2, SEED, stream(8, 2, 0));
    let rank2_pairs: Vec<(C64, C64)> = (0..5).map(|_| rank2_sampler.pair()).collect();
    let rank2_id = BoundaryK::identity(&rank2);
    let mut dense = TensorOperator::identity(&[2]);
    dense.set(0, 1, c(0.8, -0.3));
    let dense = BoundaryK::from_fn(2, move |_| dense.clone());
    let mut control = f64::INFINITY;
    for side in [BoundarySide::Left, BoundarySide::Right] {
        control = control.min(max_reflection_residual(&rank2, side, &rank2_id, &rank2_pairs)?);
        control = control.min(max_reflection_residual(&sl2, side, &dense, &pairs)?);
    }

    let xi = c(0.45, 0.2);
    let families = BoundaryPair { left: BoundaryK::sl2_left(&sl2, xi)?, right: BoundaryK::sl2_right(&sl2, xi.inv())? };
    let mut dressing = Worst::default();
    let mut commute = Worst::default();
    for (v, pair) in [BoundaryPair::identity(&sl2), families.clone()].into_iter().enumerate() {
        let mut sampler = Sampler::new(&sl2, SEED, stream(8, 1, v + 1));
        for sites in 1..=3 {
            for _ in 0..5 {
                let zs = sampler.zetas(sites + 2);
                let chain = ChainSpec::new(sl2.clone(), zs[2..].to_vec())?;
                if sites <= 2 {
                    dressing.push(dressed_reflection_residual(&chain, BoundarySide::Left, &pair.left, zs[0], zs[1])?);
                    dressing.push(dressed_reflection_residual(&chain, BoundarySide::Right, &pair.right, zs[0], zs[1])?);
                }
                let open = OpenChainSpec { chain, boundary: pair.clone() };
                commute.push(open_transfer_commutator(&open, zs[0], zs[1])?);
            }
        }
    }

    let mut hamiltonian = Worst::default();
    let mut t1 = Worst::default();
    for pair in [BoundaryPair::identity(&sl2), families] {
        for sites in 2..=3 {
            let open = OpenChainSpec { chain: ChainSpec::homogeneous(sl2.clone(), sites)?, boundary: pair.clone() };
            hamiltonian.push(open_hamiltonian(&open)?.max_abs_diff(&open_hamiltonian_numeric(&open, OPEN_FD_STEP)?));
            let kl = embed(&pair.left.eval(ONE)?, &[sites], &vec![2; sites])?;
            let expected = kl.scale(pair.right.eval(ONE)?.trace());
            t1.push(open_transfer(&open, ONE)?.max_abs_diff(&expected));
        }
    }

    Ok(vec![
        Gate::below("identity K reflection (l = 1, s = (1,1))", id_residual, 1e-11),
        Gate::above("negative controls", control, 1e-3),
        Gate::below("dressed reflection (m <= 2)", dressing.0, 1e-11),
        Gate::below("open transfer commutator (N <= 3, l = 1)", commute.0, 1e-9),
        Gate::below("open Hamiltonian vs finite difference", hamiltonian.0, 1e-6),
        Gate::below("T(1) vs tr K^R(1) K^L(1) on site N", t1.0, 1e-12),
    ])
}

fn algebra() -> Result<Vec<Gate>> {
    let mut relations = Worst::default();
    let mut exact = true;
    for l in 1..=3 {
        for (v, p) in models(l).into_iter().enumerate() {
            let mut sampler = Sampler::new(&p, SEED, stream(9, l, v));
            for z in sampler.zetas(4) {
                for label in [RepLabel::Phi, RepLabel::PhiBar, RepLabel::PhiStar, RepLabel::StarPhi] {
                    relations.push(verify_defining_relations(&rep_by_label(&p, label, z)?)?.max());
                }
                exact &= jimbo_image(&p, GlFundamental::First, z).same_images(&phi_rep(&p, z));
                exact &= jimbo_image(&p, GlFundamental::Last, z).same_images(&phibar_rep(&p, z));
            }
        }
    }
    Ok(vec![
        Gate::below("defining relations, four representations, l <= 3", relations.0, 1e-12),
        Gate::at_most("Jimbo images vs tables (mismatches)", if exact { 0.0 } else { 1.0 }, 0.0),
    ])
}

fn determinism() -> Result<Vec<Gate>> {
    let mut mismatches = 0.0;
    for l in 1..=2 {
        for p in models(l) {
            let config = SuiteConfig { params: p, ..Default::default() };
            let first = run_suite(&config)?.canonical_json()?;
            let second = run_suite(&config)?.canonical_json()?;
            let sequential = run_suite(&SuiteConfig { exec: Execution::Sequential, ..config })?.canonical_json()?;
            mismatches += f64::from(u8::from(first != second)) + f64::from(u8::from(first != sequential));
        }
    }
    Ok(vec![Gate::at_most("differing reports (repeat and sequential)", mismatches, 0.0)])
}

type Criterion = fn() -> Result<Vec<Gate>>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("initial condition", initial_condition),
        ("Yang-Baxter", yang_baxter),
        ("unitarity", unitarity_gates),
        ("skew inverses", skew_inverses),
        ("crossing", crossing),
        ("RMM and transfer commutativity", chains),
        ("Hamiltonian consistency", hamiltonians),
        ("open chains", open_chains),
        ("algebra relations", algebra),
        ("suite determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(gates) => {
                let ok = gates.iter().all(Gate::passed);
                let detail = gates
                    .iter()
                    .map(|g| format!("{}{}", if g.passed() { "" } else { "FAILED " }, g.describe()))
                    .collect::<Vec<_>>()
                    .join("; ");
                (ok, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} ({:.2}s): {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
