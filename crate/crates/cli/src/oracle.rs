//! Brute-force recomputation of every reported quantity.
//!
//! Everything here is built from explicit index loops over the full product basis: the dense
//! joint state, the partial traces, the Heisenberg sums for the measured effects and the
//! correlation moments. Only the matrix kernel (products, square roots, exponentials,
//! eigendecompositions) is shared with the main path.

use qmlab::correlate::{observable_correlation, state_correlation_run, value_correlation_with};
use qmlab::linop::{expm_i_herm, herm_eig, psd_sqrt, CMatrix, C64, ZERO};
use qmlab::models::quadrature::{QuadratureModel, DENSE_JOINT_LIMIT};
use qmlab::report::fmt_exp;
use qmlab::scheme::{measured_povm, SchemeRun};
use qmlab::transformer::{check_first_kind, check_repeatable, StateTransformer};
use qmlab::QmError;

use crate::error::CliResult;
use crate::scenario::{QuadScenario, Scenario};

/// Largest joint dimension the dense oracle accepts.
pub const ORACLE_DIM_LIMIT: usize = 16;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-8;

/// Per-quantity discrepancies between the main path and the oracle.
#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub name: String,
    pub entries: Vec<(String, f64)>,
}

impl OracleReport {
    fn push(&mut self, what: impl Into<String>, d: f64) {
        self.entries.push((what.into(), d));
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.entries.iter().map(|(_, d)| if d.is_nan() { f64::INFINITY } else { *d }).fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("oracle {}\n", self.name);
        for (what, d) in &self.entries {
            out.push_str(&format!("discrepancy {what} {}\n", fmt_exp(*d, 3)));
        }
        out.push_str(&format!("max_discrepancy {}\n", fmt_exp(self.max_discrepancy(), 3)));
        out
    }
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            worst = worst.max((a[(r, c)] - b[(r, c)]).norm());
        }
    }
    worst
}

fn rho_diff(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

/// `Σ_{a,b} X[a,b]·Y[b,a]`.
fn tr_prod(x: &CMatrix, y: &CMatrix) -> f64 {
    let mut acc = ZERO;
    for a in 0..x.rows() {
        for b in 0..x.cols() {
            acc += x[(a, b)] * y[(b, a)];
        }
    }
    acc.re
}

/// Dense bipartite system with explicit loops.
struct Dense {
    ds: usize,
    da: usize,
}

impl Dense {
    fn idx(&self, s: usize, a: usize) -> usize {
        s * self.da + a
    }

    fn product(&self, x: &CMatrix, y: &CMatrix) -> CMatrix {
        let n = self.ds * self.da;
        let mut out = CMatrix::zeros(n, n);
        for s1 in 0..self.ds {
            for a1 in 0..self.da {
                for s2 in 0..self.ds {
                    for a2 in 0..self.da {
                        out[(self.idx(s1, a1), self.idx(s2, a2))] = x[(s1, s2)] * y[(a1, a2)];
                    }
                }
            }
        }
        out
    }

    fn trace_apparatus(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.ds, self.ds, |s1, s2| (0..self.da).map(|a| m[(self.idx(s1, a), self.idx(s2, a))]).sum())
    }

    fn trace_object(&self, m: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.da, self.da, |a1, a2| (0..self.ds).map(|s| m[(self.idx(s, a1), self.idx(s, a2))]).sum())
    }

    /// `tr[ρ·X⊗Y]` summed over the product basis.
    fn expect(&self, rho: &CMatrix, x: &CMatrix, y: &CMatrix) -> f64 {
        let mut acc = ZERO;
        for s1 in 0..self.ds {
            for a1 in 0..self.da {
                for s2 in 0..self.ds {
                    for a2 in 0..self.da {
                        acc += rho[(self.idx(s1, a1), self.idx(s2, a2))] * x[(s2, s1)] * y[(a2, a1)];
                    }
                }
            }
        }
        acc.re
    }

    /// Correlation coefficient of `X⊗I` and `I⊗Y` in `ρ`.
    fn rho(&self, rho: &CMatrix, x: &CMatrix, y: &CMatrix) -> Option<f64> {
        let is = CMatrix::identity(self.ds);
        let ia = CMatrix::identity(self.da);
        let e1 = self.expect(rho, x, &ia);
        let e2 = self.expect(rho, &is, y);
        let e12 = self.expect(rho, x, y);
        let v1 = self.expect(rho, &x.matmul(x), &ia) - e1 * e1;
        let v2 = self.expect(rho, &is, &y.matmul(y)) - e2 * e2;
        if v1 <= 1e-14 || v2 <= 1e-14 {
            return None;
        }
        Some((e12 - e1 * e2) / (v1 * v2).sqrt())
    }
}

fn rho_from_table(values: &[f64], table: &[Vec<f64>]) -> Option<f64> {
    let n = values.len();
    let (mut e1, mut e2, mut s1, mut s2, mut e12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = table[i][j];
            e1 += p * values[i];
            e2 += p * values[j];
            s1 += p * values[i] * values[i];
            s2 += p * values[j] * values[j];
            e12 += p * values[i] * values[j];
        }
    }
    let (v1, v2) = (s1 - e1 * e1, s2 - e2 * e2);
    if v1 <= 1e-14 || v2 <= 1e-14 {
        return None;
    }
    Some((e12 - e1 * e2) / (v1 * v2).sqrt())
}

/// Recomputes the dense scenario and compares with the main path.
pub fn oracle_scheme(sc: &Scenario) -> CliResult<OracleReport> {
    let s = &sc.scheme;
    let (ds, da) = (s.dim_s(), s.dim_a());
    if ds * da > ORACLE_DIM_LIMIT {
        return Err(QmError::DimensionMismatch(format!(
            "joint dimension {ds}·{da} exceeds the oracle limit {ORACLE_DIM_LIMIT}"
        ))
        .into());
    }
    let d = Dense { ds, da };
    let n = ds * da;
    let kraus: Vec<CMatrix> = match &sc.product {
        Some(p) => vec![expm_i_herm(&d.product(p.a(), p.b()), p.lambda())?],
        None => s.coupling().kraus().to_vec(),
    };
    let ta = s.apparatus_state().matrix();
    let cells: Vec<CMatrix> = sc
        .scale
        .cells()
        .iter()
        .map(|c| {
            let mut z = CMatrix::zeros(da, da);
            for &p in &c.pointers {
                z = &z + &s.pointer().effect(p).matrix;
            }
            z
        })
        .collect();
    let values = sc.scale.values();
    let mut rep = OracleReport { name: sc.name.clone(), entries: Vec::new() };

    // E_i[a,b] = Σ_K Σ_{c,x,y,u,v} conj(K[(c,x),(a,u)])·Z_i[x,y]·K[(c,y),(b,v)]·T_A[v,u]
    let effects: Vec<CMatrix> = cells
        .iter()
        .map(|z| {
            let mut e = CMatrix::zeros(ds, ds);
            for k in &kraus {
                for a in 0..ds {
                    for b in 0..ds {
                        let mut acc = ZERO;
                        for c in 0..ds {
                            for x in 0..da {
                                for y in 0..da {
                                    if z[(x, y)] == ZERO {
                                        continue;
                                    }
                                    for u in 0..da {
                                        for v in 0..da {
                                            acc += k[(d.idx(c, x), d.idx(a, u))].conj()
                                                * z[(x, y)]
                                                * k[(d.idx(c, y), d.idx(b, v))]
                                                * ta[(v, u)];
                                        }
                                    }
                                }
                            }
                        }
                        e[(a, b)] += acc;
                    }
                }
            }
            e
        })
        .collect();
    let povm = measured_povm(s, &sc.scale)?;
    let worst = effects.iter().enumerate().map(|(i, e)| max_diff(e, &povm.effect(i).matrix)).fold(0.0, f64::max);
    rep.push("povm", worst);

    let st = StateTransformer::new(s, &sc.scale)?;
    let roots = cells.iter().map(psd_sqrt).collect::<Result<Vec<_>, _>>()?;
    let mut instruments_per_state = Vec::new();
    for (t_idx, t) in sc.states.iter().enumerate() {
        let tag = |what: &str| format!("state{t_idx}.{what}");
        let joint_in = d.product(t.matrix(), ta);
        let mut rho = CMatrix::zeros(n, n);
        for k in &kraus {
            for r in 0..n {
                for c in 0..n {
                    let mut acc = ZERO;
                    for p in 0..n {
                        for q in 0..n {
                            acc += k[(r, p)] * joint_in[(p, q)] * k[(c, q)].conj();
                        }
                    }
                    rho[(r, c)] += acc;
                }
            }
        }
        let run = SchemeRun::new(s, t, &sc.scale)?;
        let ident_s = CMatrix::identity(ds);
        let weights: Vec<f64> = cells.iter().map(|z| d.expect(&rho, &ident_s, z)).collect();
        let w_main = run.weights();
        rep.push(tag("weights"), weights.iter().zip(&w_main).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));

        let mut comp_worst: f64 = 0.0;
        let mut instruments = Vec::new();
        let mut components = Vec::new();
        for (i, root) in roots.iter().enumerate() {
            let lift = d.product(&ident_s, root);
            let vi = lift.matmul(&rho).matmul(&lift);
            let obj = d.trace_apparatus(&vi);
            let app = d.trace_object(&vi);
            instruments.push(obj.clone());
            let comp = &run.components[i];
            if weights[i] > 1e-12 {
                let (o, a) = (obj.scale_real(1.0 / weights[i]), app.scale_real(1.0 / weights[i]));
                comp_worst = comp_worst
                    .max(max_diff(&o, &comp.object_matrix(ds)))
                    .max(max_diff(&a, &comp.apparatus_matrix(da)));
                components.push(Some((o, a)));
            } else {
                components.push(None);
            }
        }
        rep.push(tag("components"), comp_worst);

        let table: Vec<Vec<f64>> =
            effects.iter().map(|e| cells.iter().map(|z| d.expect(&rho, e, z)).collect()).collect();
        let obs = observable_correlation(s, t, &sc.scale, sc.tolerance)?;
        let mut table_worst: f64 = 0.0;
        for (i, row) in table.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                table_worst = table_worst.max((p - obs.dist.get(i, j)).abs());
            }
        }
        rep.push(tag("observable_table"), table_worst);
        rep.push(tag("rho_obs"), rho_diff(rho_from_table(&values, &table), obs.stats.rho));

        let mut value_worst: f64 = 0.0;
        let mut state_worst: f64 = 0.0;
        for i in 0..cells.len() {
            let main_value = value_correlation_with(&st, &run, i)?;
            value_worst = value_worst.max(rho_diff(d.rho(&rho, &effects[i], &cells[i]), main_value.rho));
            let main_state = state_correlation_run(&run, i)?;
            let ours = components[i].as_ref().and_then(|(o, a)| d.rho(&rho, o, a));
            state_worst = state_worst.max(rho_diff(ours, main_state.rho));
        }
        rep.push(tag("rho_value"), value_worst);
        rep.push(tag("rho_state"), state_worst);
        instruments_per_state.push(instruments);
    }

    // first kind and repeatability over the scenario states
    let mut first_kind: f64 = 0.0;
    let mut repeat = vec![(0.0f64, 1.0f64); cells.len()];
    for (t, instruments) in sc.states.iter().zip(&instruments_per_state) {
        let mut after = CMatrix::zeros(ds, ds);
        for m in instruments {
            after = &after + m;
        }
        for e in &effects {
            first_kind = first_kind.max((tr_prod(t.matrix(), e) - tr_prod(&after, e)).abs());
        }
        for (i, m) in instruments.iter().enumerate() {
            let w = tr_prod(m, &CMatrix::identity(ds));
            if w <= sc.tolerance {
                continue;
            }
            let rp = tr_prod(&m.scale_real(1.0 / w), &effects[i]);
            repeat[i].0 = repeat[i].0.max((1.0 - rp).abs());
            repeat[i].1 = repeat[i].1.min(rp);
        }
    }
    let fk = check_first_kind(&st, &sc.states, sc.tolerance)?;
    rep.push("first_kind_deviation", (fk.max_deviation - first_kind).abs());
    let rr = check_repeatable(&st, &sc.states, sc.tolerance)?;
    let rep_worst = rr
        .cells
        .iter()
        .zip(&repeat)
        .map(|(c, (defect, min_p))| (c.prob_defect - defect).abs().max((c.min_repeat_probability - min_p).abs()))
        .fold(0.0, f64::max);
    rep.push("repeat_probability", rep_worst);
    Ok(rep)
}

/// `(a†+a)/√2` and `i(a†−a)/√2` written out entrywise.
fn quadratures(n: usize) -> (CMatrix, CMatrix) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut q = CMatrix::zeros(n, n);
    let mut p = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let s = ((k + 1) as f64).sqrt() * h;
        q[(k, k + 1)] = C64::new(s, 0.0);
        q[(k + 1, k)] = C64::new(s, 0.0);
        // i(a†−a)/√2: entry (k+1,k) from a†, (k,k+1) from −a
        p[(k + 1, k)] = C64::new(0.0, s);
        p[(k, k + 1)] = C64::new(0.0, -s);
    }
    (q, p)
}

/// Dense check of the quadrature model: joint vector `e^{iλ a^q⊗b^q}(|α⟩⊗|0⟩)` read out by
/// `b^p` projections, against the structured route at the same truncations.
pub fn oracle_quadrature(q: &QuadScenario) -> CliResult<OracleReport> {
    let cfg = &q.config;
    let model = QuadratureModel::new(cfg)?;
    let (n, m) = (model.n(), model.probe_dim());
    if n * m > DENSE_JOINT_LIMIT {
        return Err(QmError::DimensionMismatch(format!(
            "joint dimension {n}·{m} exceeds the oracle limit {DENSE_JOINT_LIMIT}"
        ))
        .into());
    }
    let signal = qmlab::models::quadrature::coherent_state(n, q.alpha);
    model.truncation_defect(&signal)?;
    let mut rep = OracleReport { name: q.name.clone(), entries: Vec::new() };

    let (aq, _) = quadratures(n);
    let (bq, bp) = quadratures(m);
    let d = Dense { ds: n, da: m };
    let u = expm_i_herm(&d.product(&aq, &bq), cfg.lambda)?;
    // coherent amplitudes by explicit recursion
    let mut alpha_vec = vec![ZERO; n];
    let mut c = 1.0;
    for (k, z) in alpha_vec.iter_mut().enumerate() {
        *z = C64::new(c, 0.0);
        c *= q.alpha / ((k + 1) as f64).sqrt();
    }
    let norm = alpha_vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let t = CMatrix::from_fn(n, n, |a, b| alpha_vec[a] * alpha_vec[b].conj() / (norm * norm));
    let phi = model.probe();
    let mut psi = vec![ZERO; n * m];
    for r in 0..n * m {
        for s in 0..n {
            for a in 0..m {
                psi[r] += u[(r, d.idx(s, a))] * alpha_vec[s] / norm * phi[a];
            }
        }
    }
    let rho = CMatrix::from_fn(n * m, n * m, |r, c| psi[r] * psi[c].conj());

    let bp_eig = herm_eig(&bp)?;
    let scale = model.coarse_scale();
    let cells: Vec<CMatrix> = scale.cells.iter().map(|c| bp_eig.projection(|k| c.contains(&k))).collect();

    let effects: Vec<CMatrix> = cells
        .iter()
        .map(|z| {
            // W = (I⊗Z)U(I⊗|φ⟩), then E = W†W since Z is a projection
            let mut w = CMatrix::zeros(n * m, n);
            let mut uphi = CMatrix::zeros(n * m, n);
            for r in 0..n * m {
                for b in 0..n {
                    uphi[(r, b)] = (0..m).map(|v| u[(r, d.idx(b, v))] * phi[v]).sum();
                }
            }
            for s in 0..n {
                for x in 0..m {
                    for b in 0..n {
                        w[(d.idx(s, x), b)] = (0..m).map(|y| z[(x, y)] * uphi[(d.idx(s, y), b)]).sum();
                    }
                }
            }
            w.adjoint().matmul(&w)
        })
        .collect();
    let povm = model.measured_povm(scale)?;
    let worst = effects.iter().enumerate().map(|(i, e)| max_diff(e, &povm.effect(i).matrix)).fold(0.0, f64::max);
    rep.push("povm", worst);

    let ident = CMatrix::identity(n);
    let weights: Vec<f64> = cells.iter().map(|z| d.expect(&rho, &ident, z)).collect();
    let main_weights: Vec<f64> = povm.effects().iter().map(|e| tr_prod(signal.matrix(), &e.matrix)).collect();
    rep.push("weights", weights.iter().zip(&main_weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    rep.push("signal_state", max_diff(&t, signal.matrix()));

    let table: Vec<Vec<f64>> = effects.iter().map(|e| cells.iter().map(|z| d.expect(&rho, e, z)).collect()).collect();
    let main_table = model.observable_bivariate(&signal, scale)?;
    let mut table_worst: f64 = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            table_worst = table_worst.max((p - main_table.get(i, j)).abs());
        }
    }
    rep.push("observable_table", table_worst);
    rep.push(
        "rho_obs",
        rho_diff(rho_from_table(&scale.values, &table), model.observable_correlation(&signal, scale)?.rho),
    );
    let mut value_worst: f64 = 0.0;
    let mut state_worst: f64 = 0.0;
    for i in 0..cells.len() {
        value_worst = value_worst.max(rho_diff(
            d.rho(&rho, &effects[i], &cells[i]),
            model.value_correlation(&signal, scale, i)?.stats.rho,
        ));
        // the joint state is pure: V_i = |ψ_i⟩⟨ψ_i| with ψ_i = (I⊗Z_i)ψ
        let z = &cells[i];
        let mut psi_i = vec![ZERO; n * m];
        for s in 0..n {
            for x in 0..m {
                psi_i[d.idx(s, x)] = (0..m).map(|y| z[(x, y)] * psi[d.idx(s, y)]).sum();
            }
        }
        let vi = CMatrix::from_fn(n * m, n * m, |r, c| psi_i[r] * psi_i[c].conj());
        let ours = if weights[i] > 1e-12 {
            let o = d.trace_apparatus(&vi).scale_real(1.0 / weights[i]);
            let a = d.trace_object(&vi).scale_real(1.0 / weights[i]);
            d.rho(&rho, &o, &a)
        } else {
            None
        };
        state_worst = state_worst.max(rho_diff(ours, model.state_correlation(&signal, scale, i)?.rho));
    }
    rep.push("rho_value", value_worst);
    rep.push("rho_state", state_worst);
    Ok(rep)
}
