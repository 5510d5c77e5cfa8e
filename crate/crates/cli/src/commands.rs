//! The four commands. Each returns its report text and exit code; `main` does the printing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use qmlab::correlate::{
    observable_correlation_with, state_correlation_run, value_correlation_with, verify_theorems, CorrStats,
    Dependence, VerifyOptions,
};
use qmlab::linop::{basis_vector, CMatrix, C64};
use qmlab::models::quadrature::{
    coherent_state, quadrature_correlation_sweep, summarize_sweep, write_sweep_csv, Probe, QuadratureConfig,
    QuadratureModel,
};
use qmlab::quantum::State;
use qmlab::report::{fmt12, fmt_exp};
use qmlab::scheme::SchemeRun;
use qmlab::transformer::{check_first_kind, check_repeatable, default_test_states, StateTransformer};
use qmlab::{QmError, Verdict};

use crate::builtins;
use crate::error::{exit, CliError, CliResult};
use crate::oracle::{oracle_quadrature, oracle_scheme};
use crate::scenario::{Analysis, Loaded, QuadScenario, Scenario};

/// Largest relative deviation of a sweep's `ρ_obs` from the variance ratio that still passes.
pub const SWEEP_RATIO_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

impl Output {
    fn new(text: String, code: i32) -> Self {
        Output { text, code }
    }
}

/// Matrix entries below this print as 0, so reports show structure rather than round-off.
pub const DISPLAY_ZERO: f64 = 1e-14;

fn snap(x: f64) -> f64 {
    if x.abs() < DISPLAY_ZERO {
        0.0
    } else {
        x
    }
}

fn fmt_c(z: C64) -> String {
    let (re, im) = (snap(z.re), snap(z.im));
    let sign = if im < 0.0 { '-' } else { '+' };
    format!("{}{sign}{}i", fmt12(re), fmt12(im.abs()))
}

fn fmt_dependence(d: &Dependence) -> String {
    match d {
        Dependence::Independent => "independent".into(),
        Dependence::Dependent => "dependent".into(),
        Dependence::CompletelyDependent { link: Some(l), .. } => {
            format!("complete slope={} intercept={}", fmt12(snap(l.slope)), fmt12(snap(l.intercept)))
        }
        Dependence::CompletelyDependent { link: None, .. } => "complete".into(),
    }
}

fn write_matrix(out: &mut String, m: &CMatrix) {
    for r in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|c| fmt_c(m[(r, c)])).collect();
        out.push_str(&format!("  {}\n", row.join(" ")));
    }
}

fn fmt_rho(s: &CorrStats) -> String {
    s.rho.map_or_else(|| "undefined".to_string(), fmt12)
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "true",
        Verdict::Fails => "false",
        Verdict::Inconclusive => "inconclusive",
    }
}

struct Lines {
    text: String,
    warnings: Vec<String>,
}

impl Lines {
    fn verdict(&mut self, what: &str, v: Verdict, residual: f64) {
        self.text.push_str(&format!("verdict {what} {} residual={}\n", verdict_word(v), fmt_exp(residual, 3)));
        if v == Verdict::Inconclusive {
            self.warnings.push(format!("WARN {what} inconclusive: residual {} inside the tolerance band", fmt_exp(residual, 3)));
        }
    }
}

pub fn simulate(spec: &str, tol: Option<f64>, seed: u64) -> CliResult<Output> {
    match builtins::load(spec)? {
        Loaded::Scheme(sc) => simulate_scheme(&sc, tol.unwrap_or(sc.tolerance), seed),
        Loaded::Quadrature(q) => simulate_quadrature(&q, tol.unwrap_or(qmlab::models::quadrature::PROBE_LEAKAGE_LIMIT)),
    }
}

fn simulate_scheme(sc: &Scenario, tol: f64, seed: u64) -> CliResult<Output> {
    let s = &sc.scheme;
    let (ds, da) = (s.dim_s(), s.dim_a());
    let st = StateTransformer::new(s, &sc.scale)?;
    let mut l = Lines { text: String::new(), warnings: Vec::new() };
    l.text.push_str(&format!("scenario {}\n", sc.name));
    l.text.push_str(&format!(
        "dims object={ds} apparatus={da} cells={} tolerance={}\n",
        sc.scale.len(),
        fmt_exp(tol, 3)
    ));
    if sc.wants(Analysis::Povm) {
        for (i, e) in st.measured_povm().effects().iter().enumerate() {
            l.text.push_str(&format!("effect {i} value={}\n", fmt12(e.label)));
            write_matrix(&mut l.text, &e.matrix);
        }
    }
    if sc.wants(Analysis::Verdicts) {
        let mut states = sc.states.clone();
        states.extend(default_test_states(ds, seed));
        let fk = check_first_kind(&st, &states, tol)?;
        l.verdict("first_kind", fk.verdict, fk.max_deviation);
        let rep = check_repeatable(&st, &states, tol)?;
        l.verdict("repeatable", rep.verdict, rep.residual);
        for c in &rep.cells {
            l.text.push_str(&format!("repeat_probability cell={} min={}\n", c.cell, fmt12(c.min_repeat_probability)));
        }
    }
    for (t_idx, t) in sc.states.iter().enumerate() {
        let run = SchemeRun::new(s, t, &sc.scale)?;
        l.text.push_str(&format!("state {t_idx}\n"));
        write_matrix(&mut l.text, t.matrix());
        for (i, w) in run.weights().iter().enumerate() {
            l.text.push_str(&format!("weight cell={i} {}\n", fmt12(*w)));
        }
        if sc.wants(Analysis::Components) {
            for c in &run.components {
                if c.is_null() {
                    l.text.push_str(&format!("component cell={} null\n", c.cell));
                    continue;
                }
                l.text.push_str(&format!("component cell={} object\n", c.cell));
                write_matrix(&mut l.text, &c.object_matrix(ds));
                l.text.push_str(&format!("component cell={} apparatus\n", c.cell));
                write_matrix(&mut l.text, &c.apparatus_matrix(da));
            }
        }
        if sc.wants(Analysis::Verdicts) {
            let pvd = run.pointer_value_definiteness(tol);
            l.verdict("pointer_value_definiteness", pvd.verdict, pvd.residual);
            let mix = run.pointer_mixture(tol);
            l.verdict("pointer_mixture", mix.verdict, mix.residual);
            let orth = run.component_orthogonality(tol);
            l.verdict("component_orthogonality", orth.verdict, orth.residual);
        }
        if sc.wants(Analysis::Correlations) {
            let obs = observable_correlation_with(&st, &run, tol)?;
            l.text.push_str(&format!("corr observable rho={} dependence={}\n", fmt_rho(&obs.stats), fmt_dependence(&obs.dependence)));
            for i in 0..sc.scale.len() {
                let value = value_correlation_with(&st, &run, i)?;
                let state = state_correlation_run(&run, i)?;
                l.text.push_str(&format!("corr value cell={i} rho={}\n", fmt_rho(&value)));
                l.text.push_str(&format!("corr state cell={i} rho={}\n", fmt_rho(&state)));
            }
        }
    }
    let mut text = l.text;
    for w in &l.warnings {
        text.push_str(w);
        text.push('\n');
    }
    Ok(Output::new(text, exit::PASS))
}

fn simulate_quadrature(q: &QuadScenario, tol: f64) -> CliResult<Output> {
    let signal = coherent_state(q.config.n, q.alpha);
    let model = QuadratureModel::for_signal(&q.config, &signal)?;
    let mut out = format!("scenario {}\n", q.name);
    out.push_str(&format!(
        "quadrature N={} M={} lambda={} alpha={} bins={}\n",
        model.n(),
        model.probe_dim(),
        fmt12(model.lambda()),
        fmt12(q.alpha),
        q.config.bins
    ));
    let split = model.variance_decomposition(&signal)?;
    out.push_str(&format!("truncation_defect {}\n", fmt_exp(split.truncation_defect, 3)));
    out.push_str(&format!(
        "variance var_E={} var_aq={} noise={} relative_residual={}\n",
        fmt12(split.var_e),
        fmt12(split.var_aq),
        fmt12(split.noise),
        fmt_exp(split.relative_residual, 3)
    ));
    let fine = model.observable_correlation(&signal, model.fine_scale())?;
    out.push_str(&format!("corr observable scale=fine rho={}\n", fmt_rho(&fine)));
    let coarse = model.coarse_scale();
    let obs = model.observable_correlation(&signal, coarse)?;
    out.push_str(&format!("corr observable scale=coarse rho={}\n", fmt_rho(&obs)));
    let mut repeat_defect: f64 = 0.0;
    let mut repeat_lines = String::new();
    for i in 0..coarse.len() {
        let v = model.value_correlation(&signal, coarse, i)?;
        let st = model.state_correlation(&signal, coarse, i)?;
        out.push_str(&format!("cell {i} value={} weight={}\n", fmt12(coarse.values[i]), fmt12(v.mean_e)));
        out.push_str(&format!("corr value cell={i} rho={}\n", fmt_rho(&v.stats)));
        out.push_str(&format!("corr state cell={i} rho={}\n", fmt_rho(&st)));
        // tr[E_i·T_S(i,T)] = ⟨E_i²⟩/⟨E_i⟩ since the instrument is diagonal in the a^q basis
        if v.mean_e > tol {
            let rp = v.second_e / v.mean_e;
            repeat_defect = repeat_defect.max(1.0 - rp);
            repeat_lines.push_str(&format!("repeat_probability cell={i} min={}\n", fmt12(rp)));
        }
    }
    let mut l = Lines { text: out, warnings: Vec::new() };
    l.verdict("repeatable", Verdict::from_residual(repeat_defect, tol), repeat_defect);
    l.text.push_str(&repeat_lines);
    let (mean, var) = model.probe_moments();
    if mean.abs() <= 1e-8 && (var - 0.5).abs() <= 1e-6 {
        l.text.push_str(&format!("convolution_check {}\n", fmt_exp(model.convolution_check(coarse)?, 3)));
    }
    let mut text = l.text;
    for w in &l.warnings {
        text.push_str(w);
        text.push('\n');
    }
    Ok(Output::new(text, exit::PASS))
}

pub fn verify(seed: u64, count: usize, inject_bug: bool) -> CliResult<Output> {
    if count == 0 {
        return Err(CliError::Input("--count must be positive".into()));
    }
    let report = verify_theorems(seed, &VerifyOptions { count, inject_sign_flip: inject_bug });
    let mut text = report.to_text();
    let failing = report.failing_theorems();
    if failing.is_empty() {
        text.push_str("result pass\n");
        Ok(Output::new(text, exit::PASS))
    } else {
        text.push_str(&format!("result fail theorems={}\n", failing.join(",")));
        Ok(Output::new(text, exit::ASSERTION))
    }
}

/// Comma-separated list of floats; an empty list is an input error.
pub fn parse_lambdas(s: &str) -> CliResult<Vec<f64>> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| CliError::Input(format!("λ value \"{x}\" is not a number"))))
        .collect::<CliResult<Vec<_>>>()?;
    if out.is_empty() {
        return Err(CliError::Input("empty λ list".into()));
    }
    Ok(out)
}

fn parse_kv(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    }
}

fn number(v: Option<&str>, what: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Input(format!("{what} needs a parameter")))?
        .parse()
        .map_err(|_| CliError::Input(format!("{what} parameter is not a number")))
}

/// `vacuum`, `squeezed:r` or `coherent:a`.
pub fn parse_probe(s: &str) -> CliResult<Probe> {
    match parse_kv(s) {
        ("vacuum", None) => Ok(Probe::Vacuum),
        ("squeezed", v) => Ok(Probe::Squeezed(number(v, "squeezed")?)),
        ("coherent", v) => Ok(Probe::Coherent(number(v, "coherent")?)),
        _ => Err(CliError::Input(format!("unknown probe \"{s}\""))),
    }
}

/// `coherent:a` or `fock:k` on `n` levels.
pub fn parse_signal(s: &str, n: usize) -> CliResult<State> {
    match parse_kv(s) {
        ("coherent", v) => Ok(coherent_state(n, number(v, "coherent")?)),
        ("fock", v) => {
            let k: usize = v
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| CliError::Input(format!("fock level in \"{s}\" is not a non-negative integer")))?;
            if k >= n {
                return Err(QmError::Truncation(format!("Fock level {k} outside the {n}-level truncation")).into());
            }
            Ok(State::pure(&basis_vector(n, k))?)
        }
        _ => Err(CliError::Input(format!("unknown signal \"{s}\""))),
    }
}

pub struct SweepArgs<'a> {
    pub model: &'a str,
    pub n: usize,
    pub lambdas: &'a str,
    pub probe: &'a str,
    pub signal: &'a str,
    pub bins: usize,
    pub out: Option<&'a Path>,
}

pub fn sweep(a: &SweepArgs<'_>) -> CliResult<Output> {
    if a.model != "quadrature" {
        return Err(CliError::Input(format!("unknown sweep model \"{}\"", a.model)));
    }
    let lambdas = parse_lambdas(a.lambdas)?;
    let template = QuadratureConfig::new(a.n, lambdas[0]).with_probe(parse_probe(a.probe)?).with_bins(a.bins);
    let signal = parse_signal(a.signal, a.n)?;
    let rows = quadrature_correlation_sweep(&template, &signal, &lambdas)?;
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv)?;
    let mut text = String::new();
    match a.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(&csv)?;
            f.flush()?;
        }
        None => text.push_str(&String::from_utf8(csv).expect("CSV is ASCII")),
    }
    let s = summarize_sweep(&rows);
    let pass = s.strictly_increasing && s.all_below_one && s.max_ratio_deviation <= SWEEP_RATIO_TOL;
    text.push_str(&format!(
        "summary rows={} strictly_increasing={} all_below_one={} max_ratio_deviation={} verdict={}\n",
        rows.len(),
        s.strictly_increasing,
        s.all_below_one,
        fmt_exp(s.max_ratio_deviation, 3),
        if pass { "pass" } else { "fail" }
    ));
    Ok(Output::new(text, if pass { exit::PASS } else { exit::ASSERTION }))
}

pub fn oracle(spec: &str, tol: Option<f64>) -> CliResult<Output> {
    let tol = tol.unwrap_or(crate::oracle::DEFAULT_ORACLE_TOL);
    let report = match builtins::load(spec)? {
        Loaded::Scheme(sc) => oracle_scheme(&sc)?,
        Loaded::Quadrature(q) => oracle_quadrature(&q)?,
    };
    let max = report.max_discrepancy();
    let mut text = report.to_text();
    let pass = max <= tol;
    text.push_str(&format!("verdict {} tol={}\n", if pass { "pass" } else { "fail" }, fmt_exp(tol, 3)));
    Ok(Output::new(text, if pass { exit::PASS } else { exit::ASSERTION }))
}
