//! Seeded property suites for the correlation theorems.
//!
//! Each theorem gets its own hypothesis class of randomly generated schemes; an instance either
//! passes, fails, or is skipped (premise not met, or a verdict inside the inconclusive band).
//! Instances are evaluated in parallel but seeded by `(seed, theorem, index)` alone, so the
//! report is identical across runs and thread counts.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{QmError, Result};
use crate::linop::{kron, kron_vec, vdot, vnorm, CMatrix, C64, ZERO};
use crate::models::{build_controlled_rotation, plus_state};
use crate::quantum::{is_sharp, Effect, Povm, State};
use crate::report::fmt_exp;
use crate::random::{embed, random_partition, random_state, random_unitary, random_vector, QmRng};
use crate::scheme::{hermitian_basis_states, Coupling, MeasurementScheme, ReadingScale, SchemeRun, ZERO_WEIGHT};
use crate::transformer::StateTransformer;
use crate::verdict::Verdict;

use super::{
    bipartite_stats, observable_correlation_with, reduced_state_correlation, state_correlation_run, CorrStats,
};

/// Residual below which a premise qualifies an instance.
pub const PREMISE_TOL: f64 = 1e-8;
/// Residual below which a conclusion holds.
pub const CONCLUSION_TOL: f64 = 1e-6;
/// Spectra of the two reduced states must agree to this.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Outcome probabilities within this of 0 or 1 are excluded by the side conditions `0 ≠ p ≠ 1`.
pub const EDGE_PROBABILITY: f64 = 1e-6;
/// Random states added to the Hermitian basis when a premise quantifies over all states.
const EXTRA_STATES: usize = 6;

pub const THEOREMS: [&str; 7] = [
    "orthogonality-forward",
    "orthogonality-mixture",
    "observable-eigenstate",
    "value-eigenstate",
    "value-sharp",
    "state-orthogonality",
    "reduced-states",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Instances per theorem.
    pub count: usize,
    /// Harness self-test: negate the covariance in value correlations.
    pub inject_sign_flip: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { count: 100, inject_sign_flip: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

impl Outcome {
    fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub theorem: &'static str,
    pub index: usize,
    /// Hypothesis class the instance was drawn from.
    pub class: String,
    pub outcome: Outcome,
    pub premise: f64,
    pub conclusion: f64,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoremSummary {
    pub theorem: &'static str,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl TheoremSummary {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub seed: u64,
    pub count: usize,
    pub instances: Vec<InstanceResult>,
    /// Report-only readouts (not counted as instances).
    pub remarks: Vec<String>,
}

impl TheoremReport {
    pub fn summaries(&self) -> Vec<TheoremSummary> {
        THEOREMS
            .iter()
            .map(|&theorem| {
                let of = |o: Outcome| self.instances.iter().filter(|r| r.theorem == theorem && r.outcome == o).count();
                TheoremSummary {
                    theorem,
                    total: self.instances.iter().filter(|r| r.theorem == theorem).count(),
                    passed: of(Outcome::Pass),
                    failed: of(Outcome::Fail),
                    skipped: of(Outcome::Skip),
                }
            })
            .collect()
    }

    pub fn all_passed(&self) -> bool {
        self.instances.iter().all(|r| r.outcome != Outcome::Fail)
    }

    pub fn failing_theorems(&self) -> Vec<&'static str> {
        self.summaries().into_iter().filter(|s| !s.ok()).map(|s| s.theorem).collect()
    }

    /// One line per instance, then remarks, then one summary line per theorem.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verify seed={} count={}", self.seed, self.count);
        for r in &self.instances {
            let _ = write!(
                out,
                "instance {} {} {} {} premise={} conclusion={}",
                r.theorem,
                r.index,
                r.class,
                r.outcome.as_str(),
                fmt_exp(r.premise, 6),
                fmt_exp(r.conclusion, 6)
            );
            if !r.note.is_empty() {
                let _ = write!(out, " note=\"{}\"", r.note);
            }
            out.push('\n');
        }
        for m in &self.remarks {
            let _ = writeln!(out, "remark {m}");
        }
        for s in self.summaries() {
            let _ = writeln!(
                out,
                "summary {} total={} pass={} fail={} skip={} verdict={}",
                s.theorem,
                s.total,
                s.passed,
                s.failed,
                s.skipped,
                if s.ok() { "pass" } else { "fail" }
            );
        }
        out
    }
}

/// Runs every suite with `opts.count` instances each.
pub fn verify_theorems(seed: u64, opts: &VerifyOptions) -> TheoremReport {
    let mut instances = Vec::new();
    for (section, &theorem) in THEOREMS.iter().enumerate() {
        let results: Vec<InstanceResult> = (0..opts.count)
            .into_par_iter()
            .map(|index| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((section as u64) << 32) | index as u64);
                run_instance(theorem, index, &mut rng, opts)
            })
            .collect();
        instances.extend(results);
        if theorem == "orthogonality-mixture" {
            instances.extend(crot_witness(opts));
        }
    }
    TheoremReport { seed, count: opts.count, instances, remarks: crot_remarks() }
}

fn run_instance(theorem: &'static str, index: usize, rng: &mut QmRng, opts: &VerifyOptions) -> InstanceResult {
    let attempt = match theorem {
        "orthogonality-forward" => orthogonality_forward(index, rng),
        "orthogonality-mixture" => orthogonality_mixture(index, rng),
        "observable-eigenstate" => observable_eigenstate(index, rng),
        "value-eigenstate" => value_eigenstate(index, rng, opts),
        "value-sharp" => value_sharp(index, rng, opts),
        "state-orthogonality" => state_orthogonality(index, rng),
        _ => reduced_states(rng),
    };
    match attempt {
        Ok(t) => InstanceResult {
            theorem,
            index,
            class: t.class,
            outcome: t.outcome,
            premise: t.premise,
            conclusion: t.conclusion,
            note: t.note,
        },
        Err(e) => InstanceResult {
            theorem,
            index,
            class: "error".into(),
            outcome: Outcome::Fail,
            premise: f64::NAN,
            conclusion: f64::NAN,
            note: e.to_string(),
        },
    }
}

struct Tally {
    class: String,
    outcome: Outcome,
    premise: f64,
    conclusion: f64,
    note: String,
}

/// Premise ⇒ conclusion.
fn implication(class: String, premise: f64, conclusion: f64) -> Tally {
    let outcome = match Verdict::from_residual(premise, PREMISE_TOL) {
        Verdict::Holds => match Verdict::from_residual(conclusion, CONCLUSION_TOL) {
            Verdict::Holds => Outcome::Pass,
            Verdict::Fails => Outcome::Fail,
            Verdict::Inconclusive => Outcome::Skip,
        },
        _ => Outcome::Skip,
    };
    let note = if outcome == Outcome::Skip { "premise not decided true".into() } else { String::new() };
    Tally { class, outcome, premise, conclusion, note }
}

/// Premise ⇔ conclusion; undecided verdicts skip.
fn equivalence(class: String, premise: f64, conclusion: f64) -> Tally {
    let a = Verdict::from_residual(premise, PREMISE_TOL);
    let b = Verdict::from_residual(conclusion, CONCLUSION_TOL);
    let (outcome, note) = if a.decided().is_none() || b.decided().is_none() {
        (Outcome::Skip, format!("undecided: premise {a}, conclusion {b}"))
    } else if a == b {
        (Outcome::Pass, format!("both {a}"))
    } else {
        (Outcome::Fail, format!("premise {a}, conclusion {b}"))
    };
    Tally { class, outcome, premise, conclusion, note }
}

// ---------------------------------------------------------------------------------------------
// instance generators

/// How the object is rotated after the ideal (Lüders) coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Twist {
    None,
    /// Block-diagonal with respect to the measured projections.
    Preserving,
    Random,
}

impl Twist {
    fn name(self) -> &'static str {
        match self {
            Twist::None => "lueders",
            Twist::Preserving => "lueders-preserving",
            Twist::Random => "lueders-twisted",
        }
    }
}

/// `U = (W⊗I)·Σ_i P_i⊗X_i` with `X_i` moving pointer block 0 to block `i`; the apparatus
/// starts in block 0 (mixed when blocks are wider than one level).
fn lueders_scheme(rng: &mut QmRng, twist: Twist, pure_apparatus: bool) -> Result<(MeasurementScheme, ReadingScale)> {
    let d = rng.random_range(2..=4usize);
    let nc = rng.random_range(2..=d);
    let block = if pure_apparatus { 1 } else { rng.random_range(1..=2usize) };
    let da = nc * block;
    let groups = random_partition(rng, d, nc);
    let q = random_unitary(rng, d);
    let proj: Vec<CMatrix> = groups
        .iter()
        .map(|g| g.iter().map(|&k| CMatrix::outer(&q.column(k))).sum::<CMatrix>())
        .collect();
    let w = match twist {
        Twist::None => CMatrix::identity(d),
        Twist::Random => random_unitary(rng, d),
        Twist::Preserving => {
            let mut inner = CMatrix::zeros(d, d);
            for g in &groups {
                let u = random_unitary(rng, g.len());
                for (a, &r) in g.iter().enumerate() {
                    for (b, &c) in g.iter().enumerate() {
                        inner[(r, c)] = u[(a, b)];
                    }
                }
            }
            q.matmul(&inner).matmul(&q.adjoint())
        }
    };
    let mut sum = CMatrix::zeros(d * da, d * da);
    for (i, p) in proj.iter().enumerate() {
        let mut x = CMatrix::zeros(da, da);
        for j in 0..nc {
            let u = random_unitary(rng, block);
            let to = (j + i) % nc;
            for r in 0..block {
                for c in 0..block {
                    x[(to * block + r, j * block + c)] = u[(r, c)];
                }
            }
        }
        sum = &sum + &kron(p, &x);
    }
    let u = kron(&w, &CMatrix::identity(da)).matmul(&sum);
    let rank = rng.random_range(1..=block);
    let inner = random_state(rng, block, rank);
    let mut ta = CMatrix::zeros(da, da);
    for r in 0..block {
        for c in 0..block {
            ta[(r, c)] = inner.matrix()[(r, c)];
        }
    }
    let pointer = block_pointer(nc, block)?;
    let s = MeasurementScheme::new(d, pointer, None, State::new(ta)?, Coupling::unitary(u)?)?;
    let r = ReadingScale::finest(&s);
    Ok((s, r))
}

/// Pointer effects projecting onto consecutive blocks, labelled by block index.
fn block_pointer(nc: usize, block: usize) -> Result<Povm> {
    let groups: Vec<Vec<usize>> = (0..nc).map(|i| (i * block..(i + 1) * block).collect()).collect();
    partition_pointer(&groups, nc * block)
}

fn partition_pointer(groups: &[Vec<usize>], da: usize) -> Result<Povm> {
    let effects = groups
        .iter()
        .enumerate()
        .map(|(i, g)| Effect::new(g.iter().map(|&j| CMatrix::basis_projector(da, j)).sum(), i as f64))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(effects)
}

/// Haar-random unitary coupling with a random partition of the computational pointer basis.
fn haar_scheme(rng: &mut QmRng, pure_apparatus: bool) -> Result<(MeasurementScheme, ReadingScale)> {
    let d = rng.random_range(2..=3usize);
    let da = rng.random_range(2..=4usize);
    let nc = rng.random_range(2..=da);
    let groups = random_partition(rng, da, nc);
    let rank = if pure_apparatus { 1 } else { rng.random_range(1..=da) };
    let ta = random_state(rng, da, rank);
    let u = random_unitary(rng, d * da);
    let s = MeasurementScheme::new(d, partition_pointer(&groups, da)?, None, ta, Coupling::unitary(u)?)?;
    let r = ReadingScale::finest(&s);
    Ok((s, r))
}

fn random_input(rng: &mut QmRng, d: usize) -> State {
    let rank = rng.random_range(1..=d);
    random_state(rng, d, rank)
}

/// Hermitian-basis states plus a few random ones, for premises quantified over all states.
fn probe_states(rng: &mut QmRng, d: usize) -> Vec<State> {
    let mut out: Vec<State> = hermitian_basis_states(d).iter().map(|v| State::pure(v).expect("unit")).collect();
    for k in 0..EXTRA_STATES {
        out.push(random_state(rng, d, 1 + k % d));
    }
    out
}

// ---------------------------------------------------------------------------------------------
// shared residuals

/// `max_i ‖E_i·T_S(i,T) − T_S(i,T)‖_F` over nonzero cells.
fn eigenstate_residual(st: &StateTransformer<'_>, run: &SchemeRun) -> f64 {
    run.components
        .iter()
        .filter(|c| !c.is_null())
        .map(|c| {
            let ts = c.object_matrix(run.dim_s);
            st.measured_povm().effect(c.cell).matrix.matmul(&ts).distance(&ts)
        })
        .fold(0.0, f64::max)
}

fn interior(p: f64) -> bool {
    p > EDGE_PROBABILITY && p < 1.0 - EDGE_PROBABILITY
}

/// `|1 − ρ|`, counting an undefined correlation as a full miss.
fn unit_defect(stats: &CorrStats) -> f64 {
    match stats.rho {
        Some(rho) => (1.0 - rho).abs(),
        None => 1.0,
    }
}

/// Residual of the value-correlation conclusion (strong value correlation plus pointer
/// value-definiteness): for each cell with `0 ≠ p ≠ 1`,
/// `σ(E_i⊗I) ≠ 0` and `ρ(E_i, Z_i) = 1`; for each cell with `p ≠ 0`, `Z_i·T_A(i,T) = T_A(i,T)`.
fn value_conclusion(st: &StateTransformer<'_>, run: &SchemeRun, flip: bool) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for c in &run.components {
        if c.is_null() {
            continue;
        }
        if interior(c.weight) {
            let e = &st.measured_povm().effect(c.cell).matrix;
            let mut stats = bipartite_stats(&run.joint, e, &run.pointer_cells[c.cell], run.dim_s, run.dim_a)?;
            if flip {
                stats = CorrStats::from_moments(
                    stats.eps1,
                    stats.eps2,
                    2.0 * stats.eps1 * stats.eps2 - stats.eps12,
                    stats.sigma1 * stats.sigma1 + stats.eps1 * stats.eps1,
                    stats.sigma2 * stats.sigma2 + stats.eps2 * stats.eps2,
                );
            }
            let defect = if stats.sigma1 > 0.0 { unit_defect(&stats) } else { 1.0 };
            worst = worst.max(defect);
        }
        let ta = c.apparatus_matrix(run.dim_a);
        worst = worst.max(run.pointer_cells[c.cell].matmul(&ta).distance(&ta));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------------------------
// suites

/// Orthogonal object components ⇒ pointer mixture and pointer value-definiteness.
fn orthogonality_forward(index: usize, rng: &mut QmRng) -> Result<Tally> {
    let twist = [Twist::None, Twist::Preserving, Twist::Random][index % 3];
    let (s, r) = lueders_scheme(rng, twist, false)?;
    let t = random_input(rng, s.dim_s());
    let run = SchemeRun::new(&s, &t, &r)?;
    let premise = run.component_orthogonality(PREMISE_TOL).residual;
    let conclusion = run.pointer_mixture(CONCLUSION_TOL).residual.max(run.pointer_value_definiteness(CONCLUSION_TOL).residual);
    Ok(implication(twist.name().into(), premise, conclusion))
}

/// For unitary schemes and vector states, orthogonality ⇔ pointer mixture.
fn orthogonality_mixture(index: usize, rng: &mut QmRng) -> Result<Tally> {
    let (class, (s, r)) = match index % 3 {
        0 => ("haar", haar_scheme(rng, true)?),
        1 => (Twist::Random.name(), lueders_scheme(rng, Twist::Random, true)?),
        _ => (Twist::None.name(), lueders_scheme(rng, Twist::None, true)?),
    };
    let t = State::pure(&random_vector(rng, s.dim_s()))?;
    let run = SchemeRun::new(&s, &t, &r)?;
    let a = run.component_orthogonality(PREMISE_TOL).residual;
    let b = run.pointer_mixture(CONCLUSION_TOL).residual;
    Ok(equivalence(class.into(), a, b))
}

/// The controlled rotation as a witness: neither orthogonality nor pointer mixture holds.
fn crot_witness(opts: &VerifyOptions) -> Option<InstanceResult> {
    if opts.count == 0 {
        return None;
    }
    let attempt = || -> Result<Tally> {
        let p = build_controlled_rotation(std::f64::consts::FRAC_PI_2)?;
        let r = ReadingScale::finest(&p.scheme);
        let run = SchemeRun::new(&p.scheme, &plus_state(), &r)?;
        let a = run.component_orthogonality(PREMISE_TOL).residual;
        let b = run.pointer_mixture(CONCLUSION_TOL).residual;
        let mut t = equivalence("crot-witness".into(), a, b);
        if t.outcome == Outcome::Pass && a <= PREMISE_TOL {
            t.outcome = Outcome::Fail;
            t.note = "controlled rotation expected to violate both conditions".into();
        }
        Ok(t)
    };
    let index = opts.count;
    Some(match attempt() {
        Ok(t) => InstanceResult {
            theorem: "orthogonality-mixture",
            index,
            class: t.class,
            outcome: t.outcome,
            premise: t.premise,
            conclusion: t.conclusion,
            note: t.note,
        },
        Err(e) => InstanceResult {
            theorem: "orthogonality-mixture",
            index,
            class: "crot-witness".into(),
            outcome: Outcome::Fail,
            premise: f64::NAN,
            conclusion: f64::NAN,
            note: e.to_string(),
        },
    })
}

/// Finite scale: eigenstate condition for all states ⇔ strong observable correlation for all
/// states with nondegenerate outcome distribution.
fn observable_eigenstate(index: usize, rng: &mut QmRng) -> Result<Tally> {
    let (class, (s, r)) = match index % 4 {
        0 => (Twist::None.name(), lueders_scheme(rng, Twist::None, false)?),
        1 => (Twist::Preserving.name(), lueders_scheme(rng, Twist::Preserving, false)?),
        2 => (Twist::Random.name(), lueders_scheme(rng, Twist::Random, false)?),
        _ => ("haar", haar_scheme(rng, false)?),
    };
    let st = StateTransformer::new(&s, &r)?;
    let labels = st.measured_povm().labels();
    let mut a: f64 = 0.0;
    let mut b: f64 = 0.0;
    for t in probe_states(rng, s.dim_s()) {
        let run = SchemeRun::new(&s, &t, &r)?;
        a = a.max(eigenstate_residual(&st, &run));
        let probs: Vec<f64> =
            st.measured_povm().effects().iter().map(|e| t.matrix().trace_product(&e.matrix).re).collect();
        let mean: f64 = probs.iter().zip(&labels).map(|(p, x)| p * x).sum();
        let var: f64 = probs.iter().zip(&labels).map(|(p, x)| p * (x - mean).powi(2)).sum();
        if var <= EDGE_PROBABILITY {
            continue;
        }
        let oc = observable_correlation_with(&st, &run, CONCLUSION_TOL)?;
        let defect = if oc.stats.sigma1 > 0.0 { unit_defect(&oc.stats) } else { 1.0 };
        b = b.max(defect);
    }
    Ok(equivalence(class.into(), a, b))
}

/// Eigenstate condition ⇒ strong value correlation and pointer value-definiteness.
fn value_eigenstate(index: usize, rng: &mut QmRng, opts: &VerifyOptions) -> Result<Tally> {
    let twist = [Twist::None, Twist::Preserving][index % 2];
    let (s, r) = lueders_scheme(rng, twist, false)?;
    let st = StateTransformer::new(&s, &r)?;
    let t = random_input(rng, s.dim_s());
    let run = SchemeRun::new(&s, &t, &r)?;
    let premise = eigenstate_residual(&st, &run);
    let conclusion = value_conclusion(&st, &run, opts.inject_sign_flip)?;
    Ok(implication(twist.name().into(), premise, conclusion))
}

/// Sharp observables: eigenstate condition ⇔ strong value correlation and pointer
/// value-definiteness.
fn value_sharp(index: usize, rng: &mut QmRng, opts: &VerifyOptions) -> Result<Tally> {
    let twist = [Twist::None, Twist::Preserving, Twist::Random][index % 3];
    let (s, r) = lueders_scheme(rng, twist, false)?;
    let st = StateTransformer::new(&s, &r)?;
    let sharp = is_sharp(st.measured_povm(), PREMISE_TOL);
    if !sharp.sharp {
        return Err(QmError::InvalidPovm("generated observable is not sharp".into()));
    }
    let t = random_input(rng, s.dim_s());
    let run = SchemeRun::new(&s, &t, &r)?;
    let a = eigenstate_residual(&st, &run);
    let bc = value_conclusion(&st, &run, opts.inject_sign_flip)?;
    Ok(equivalence(twist.name().into(), a, bc))
}

/// `I − 2ww†/‖w‖²` taking unit `x` to a phase multiple of unit `y`.
fn householder(x: &[C64], y: &[C64]) -> CMatrix {
    let n = x.len();
    let overlap = vdot(y, x);
    let phase = if overlap.norm() > 1e-14 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let w: Vec<C64> = x.iter().zip(y).map(|(a, b)| a - b * phase).collect();
    let nw = vnorm(&w);
    if nw < 1e-14 {
        return CMatrix::identity(n);
    }
    let mut h = CMatrix::identity(n);
    let ww = CMatrix::outer2(&w, &w);
    h = &h - &ww.scale_real(2.0 / (nw * nw));
    h
}

/// Vector component states: orthogonal object components ⇔ strong state correlation and
/// pointer value-definiteness.
fn state_orthogonality(index: usize, rng: &mut QmRng) -> Result<Tally> {
    let orthogonal = index.is_multiple_of(2);
    let d = rng.random_range(2..=4usize);
    let nc = rng.random_range(2..=d);
    let block = rng.random_range(1..=2usize);
    let da = nc * block;
    let basis = random_unitary(rng, d);
    let alphas: Vec<Vec<C64>> =
        (0..nc).map(|i| if orthogonal { basis.column(i) } else { random_vector(rng, d) }).collect();
    let betas: Vec<Vec<C64>> = (0..nc)
        .map(|i| {
            let local = random_vector(rng, block);
            let mut v = vec![ZERO; da];
            v[i * block..(i + 1) * block].copy_from_slice(&local);
            v
        })
        .collect();
    let raw: Vec<f64> = (0..nc).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut target = vec![ZERO; d * da];
    for i in 0..nc {
        let amp = (raw[i] / total).sqrt();
        for (z, v) in target.iter_mut().zip(kron_vec(&alphas[i], &betas[i])) {
            *z += v * amp;
        }
    }
    let target = crate::linop::normalize(&target)?;
    let psi = random_vector(rng, d);
    let phi0 = embed(&[C64::new(1.0, 0.0)], da);
    let u = householder(&kron_vec(&psi, &phi0), &target);
    let s = MeasurementScheme::new(
        d,
        block_pointer(nc, block)?,
        None,
        State::pure(&phi0)?,
        Coupling::unitary(u)?,
    )?;
    let r = ReadingScale::finest(&s);
    let run = SchemeRun::new(&s, &State::pure(&psi)?, &r)?;
    let class = if orthogonal { "vector-orthogonal" } else { "vector-overlapping" };
    let impure = run
        .components
        .iter()
        .filter(|c| !c.is_null())
        .map(|c| {
            let o = 1.0 - c.object.as_ref().map_or(0.0, State::purity);
            let a = 1.0 - c.apparatus.as_ref().map_or(0.0, State::purity);
            o.max(a)
        })
        .fold(0.0, f64::max);
    if impure > PREMISE_TOL {
        return Ok(Tally {
            class: class.into(),
            outcome: Outcome::Skip,
            premise: f64::NAN,
            conclusion: f64::NAN,
            note: format!("component states not vector states ({impure:.3e})"),
        });
    }
    let a = run.component_orthogonality(PREMISE_TOL).residual;
    let mut bc = run.pointer_value_definiteness(CONCLUSION_TOL).residual;
    for c in &run.components {
        if !c.is_null() && interior(c.weight) {
            bc = bc.max(unit_defect(&state_correlation_run(&run, c.cell)?));
        }
    }
    Ok(equivalence(class.into(), a, bc))
}

/// The two reduced states of a pure final state are strongly correlated with equal spectra.
fn reduced_states(rng: &mut QmRng) -> Result<Tally> {
    let (s, _) = haar_scheme(rng, true)?;
    let t = State::pure(&random_vector(rng, s.dim_s()))?;
    let rc = reduced_state_correlation(&s, &t)?;
    let class = "haar-vector".to_string();
    if rc.stats.rho.is_none() {
        return Ok(Tally { class, outcome: Outcome::Skip, premise: 0.0, conclusion: f64::NAN, note: "product final state".into() });
    }
    let conclusion = unit_defect(&rc.stats);
    let mut t = implication(class, 0.0, conclusion);
    if rc.spectral_mismatch > SPECTRUM_TOL {
        t.outcome = Outcome::Fail;
        t.note = format!("reduced spectra differ by {:.3e}", rc.spectral_mismatch);
    }
    Ok(t)
}

/// Controlled rotation at θ = π/2 on `|+⟩`: value-correlation readouts of an unsharp
/// measurement, reported only.
fn crot_remarks() -> Vec<String> {
    let build = || -> Result<Vec<String>> {
        let p = build_controlled_rotation(std::f64::consts::FRAC_PI_2)?;
        let r = ReadingScale::finest(&p.scheme);
        let st = StateTransformer::new(&p.scheme, &r)?;
        let run = SchemeRun::new(&p.scheme, &plus_state(), &r)?;
        let mut out = Vec::new();
        for c in &run.components {
            if c.is_null() || c.weight <= ZERO_WEIGHT {
                continue;
            }
            let e = &st.measured_povm().effect(c.cell).matrix;
            let stats = bipartite_stats(&run.joint, e, &run.pointer_cells[c.cell], run.dim_s, run.dim_a)?;
            let ts = c.object_matrix(run.dim_s);
            let ta = c.apparatus_matrix(run.dim_a);
            out.push(format!(
                "value-remark crot cell={} p={} rho_value={} eigenstate_defect={} pvd_defect={}",
                c.cell,
                fmt_exp(c.weight, 6),
                stats.rho.map_or("undefined".to_string(), |x| fmt_exp(x, 6)),
                fmt_exp(e.matmul(&ts).distance(&ts), 6),
                fmt_exp(run.pointer_cells[c.cell].matmul(&ta).distance(&ta), 6)
            ));
        }
        Ok(out)
    };
    build().unwrap_or_else(|e| vec![format!("value-remark error {e}")])
}
