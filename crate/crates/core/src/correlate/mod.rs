//! Correlation algebra of finite bivariate distributions and the three correlation
//! functionals of a measurement: between observables, between values, between states.

pub mod theorems;

use crate::error::{QmError, Result};
use crate::linop::{herm_eig, partial_trace, reduce_with_apparatus, CMatrix, Subsystem};
use crate::quantum::{Povm, State};
use crate::scheme::{measured_povm, MeasurementScheme, ReadingScale, SchemeRun};
use crate::transformer::StateTransformer;

pub use theorems::{verify_theorems, TheoremReport, VerifyOptions};

/// Table sums must be 1 within this.
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// `ρ` is undefined when `σ₁·σ₂` is at or below this.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Variances below this are round-off and treated as zero.
const VARIANCE_FLOOR: f64 = 1e-14;
/// Two routes to one moment must agree within this.
pub const ROUTE_TOL: f64 = 1e-8;

/// A probability measure on a finite grid `row_values × col_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateDist {
    row_values: Vec<f64>,
    col_values: Vec<f64>,
    table: Vec<Vec<f64>>,
}

impl BivariateDist {
    pub fn new(row_values: Vec<f64>, col_values: Vec<f64>, table: Vec<Vec<f64>>) -> Result<Self> {
        if table.len() != row_values.len() || table.iter().any(|r| r.len() != col_values.len()) {
            return Err(QmError::DimensionMismatch(format!(
                "table shape does not match {} row and {} column values",
                row_values.len(),
                col_values.len()
            )));
        }
        if row_values.iter().chain(&col_values).any(|v| !v.is_finite()) {
            return Err(QmError::InvalidArgument("non-finite value".into()));
        }
        let mut total = 0.0;
        for &x in table.iter().flatten() {
            if !x.is_finite() || x < -NORMALIZATION_TOL {
                return Err(QmError::InvalidArgument(format!("invalid probability {x}")));
            }
            total += x;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(QmError::InvalidArgument(format!("table sums to {total}")));
        }
        let table = table.into_iter().map(|r| r.into_iter().map(|x| x.max(0.0)).collect()).collect();
        Ok(BivariateDist { row_values, col_values, table })
    }

    /// `μ₁ × μ₂`.
    pub fn product(row_values: Vec<f64>, mu1: &[f64], col_values: Vec<f64>, mu2: &[f64]) -> Result<Self> {
        let table = mu1.iter().map(|a| mu2.iter().map(|b| a * b).collect()).collect();
        Self::new(row_values, col_values, table)
    }

    pub fn row_values(&self) -> &[f64] {
        &self.row_values
    }

    pub fn col_values(&self) -> &[f64] {
        &self.col_values
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i][j]
    }

    /// Row marginal `μ₁`.
    pub fn mu1(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    /// Column marginal `μ₂`.
    pub fn mu2(&self) -> Vec<f64> {
        (0..self.col_values.len()).map(|j| self.table.iter().map(|r| r[j]).sum()).collect()
    }
}

/// Moments and normalised correlation of two random variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrStats {
    pub eps1: f64,
    pub eps2: f64,
    pub eps12: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// `None` when `σ₁σ₂` is degenerate.
    pub rho: Option<f64>,
}

impl CorrStats {
    /// From first moments, the mixed moment and the second moments.
    pub fn from_moments(eps1: f64, eps2: f64, eps12: f64, second1: f64, second2: f64) -> Self {
        let var = |m2: f64, m1: f64| {
            let v = m2 - m1 * m1;
            if v < VARIANCE_FLOOR {
                0.0
            } else {
                v
            }
        };
        let sigma1 = var(second1, eps1).sqrt();
        let sigma2 = var(second2, eps2).sqrt();
        let rho = if sigma1 * sigma2 <= DEGENERACY_TOL {
            None
        } else {
            Some((eps12 - eps1 * eps2) / (sigma1 * sigma2))
        };
        CorrStats { eps1, eps2, eps12, sigma1, sigma2, rho }
    }

    /// All-zero statistics with the undefined flag (null cells).
    pub fn undefined() -> Self {
        CorrStats { eps1: 0.0, eps2: 0.0, eps12: 0.0, sigma1: 0.0, sigma2: 0.0, rho: None }
    }

    pub fn covariance(&self) -> f64 {
        self.eps12 - self.eps1 * self.eps2
    }

    pub fn is_defined(&self) -> bool {
        self.rho.is_some()
    }
}

pub fn corr_stats(d: &BivariateDist) -> CorrStats {
    let mu1 = d.mu1();
    let mu2 = d.mu2();
    let dot = |w: &[f64], v: &[f64], p: i32| w.iter().zip(v).map(|(a, x)| a * x.powi(p)).sum::<f64>();
    let eps1 = dot(&mu1, &d.row_values, 1);
    let eps2 = dot(&mu2, &d.col_values, 1);
    let mut eps12 = 0.0;
    for (i, row) in d.table.iter().enumerate() {
        for (j, &m) in row.iter().enumerate() {
            eps12 += d.row_values[i] * d.col_values[j] * m;
        }
    }
    CorrStats::from_moments(eps1, eps2, eps12, dot(&mu1, &d.row_values, 2), dot(&mu2, &d.col_values, 2))
}

/// `π₁ = a·π₂ + b` on the support of `μ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineLink {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineLink {
    pub fn eval(&self, y: f64) -> f64 {
        self.slope * y + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dependence {
    Independent,
    Dependent,
    /// `map[j]` is the row `h(j)` carrying column `j`, for columns in the support of `μ₂`.
    CompletelyDependent { map: Vec<Option<usize>>, link: Option<AffineLink> },
}

impl Dependence {
    pub fn is_complete(&self) -> bool {
        matches!(self, Dependence::CompletelyDependent { .. })
    }

    pub fn link(&self) -> Option<AffineLink> {
        match self {
            Dependence::CompletelyDependent { link, .. } => *link,
            _ => None,
        }
    }
}

pub fn classify_dependence(d: &BivariateDist, tol: f64) -> Dependence {
    let mu1 = d.mu1();
    let mu2 = d.mu2();
    let independent = d
        .table
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, &m)| (m - mu1[i] * mu2[j]).abs() <= tol));
    if independent {
        return Dependence::Independent;
    }
    let mut map = vec![None; mu2.len()];
    for j in 0..mu2.len() {
        if mu2[j] <= tol {
            continue;
        }
        let h = (0..mu1.len()).max_by(|&a, &b| d.table[a][j].total_cmp(&d.table[b][j])).expect("nonempty table");
        if (d.table[h][j] - mu2[j]).abs() > tol {
            return Dependence::Dependent;
        }
        map[j] = Some(h);
    }
    let link = fit_affine(d, &map, tol);
    Dependence::CompletelyDependent { map, link }
}

/// Least-squares line through the support points `(y_j, x_{h(j)})`, kept only if every point
/// lies on it within `tol` and the slope is nonzero.
fn fit_affine(d: &BivariateDist, map: &[Option<usize>], tol: f64) -> Option<AffineLink> {
    let pts: Vec<(f64, f64)> =
        map.iter().enumerate().filter_map(|(j, h)| h.map(|h| (d.col_values[j], d.row_values[h]))).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let my = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let syy: f64 = pts.iter().map(|p| (p.0 - my).powi(2)).sum();
    if syy <= tol * tol {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - my) * (p.1 - mx)).sum();
    let slope = sxy / syy;
    let link = AffineLink { slope, intercept: mx - slope * my };
    let worst = pts.iter().map(|&(y, x)| (link.eval(y) - x).abs()).fold(0.0, f64::max);
    let scale = pts.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
    (slope.abs() > tol && worst <= tol * scale).then_some(link)
}

/// `ε`, `σ` and `ρ` of `X⊗I` and `I⊗Y` in a joint state.
pub fn bipartite_stats(joint: &CMatrix, x: &CMatrix, y: &CMatrix, dim_s: usize, dim_a: usize) -> Result<CorrStats> {
    let rs = partial_trace(joint, dim_s, dim_a, Subsystem::Object)?;
    let ra = partial_trace(joint, dim_s, dim_a, Subsystem::Apparatus)?;
    let eps12 = reduce_with_apparatus(joint, y, dim_s, dim_a).trace_product(x).re;
    Ok(CorrStats::from_moments(
        rs.trace_product(x).re,
        ra.trace_product(y).re,
        eps12,
        rs.trace_product(&x.matmul(x)).re,
        ra.trace_product(&y.matmul(y)).re,
    ))
}

/// `μ(i,j) = tr[V(T⊗T_A)·E_i⊗Z_j]` from a prepared run and the measured observable.
pub fn observable_bivariate_run(run: &SchemeRun, e: &Povm) -> Result<BivariateDist> {
    let (ds, da) = (run.dim_s, run.dim_a);
    let values = e.labels();
    let n = e.len();
    let mut table = vec![vec![0.0; n]; n];
    for (j, z) in run.pointer_cells.iter().enumerate() {
        let m = reduce_with_apparatus(&run.joint, z, ds, da);
        for (i, row) in table.iter_mut().enumerate() {
            row[j] = m.trace_product(&e.effect(i).matrix).re;
        }
    }
    // marginals against the measured observable before and after
    let mut residual: f64 = 0.0;
    let d = BivariateDist::new(values.clone(), values, table)?;
    for (j, m2) in d.mu2().iter().enumerate() {
        residual = residual.max((m2 - run.input.matrix().trace_product(&e.effect(j).matrix).re).abs());
    }
    for (i, m1) in d.mu1().iter().enumerate() {
        residual = residual.max((m1 - run.reduced_object.trace_product(&e.effect(i).matrix).re).abs());
    }
    if residual > ROUTE_TOL {
        return Err(QmError::RouteMismatch { what: "observable marginals".into(), residual });
    }
    Ok(d)
}

pub fn observable_bivariate(s: &MeasurementScheme, t: &State, r: &ReadingScale) -> Result<BivariateDist> {
    let e = measured_povm(s, r)?;
    observable_bivariate_run(&SchemeRun::new(s, t, r)?, &e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableCorrelation {
    pub dist: BivariateDist,
    pub stats: CorrStats,
    pub dependence: Dependence,
    /// `max |tr[I_i(I_j(T))] − μ(i,j)|`: the table through the state transformer.
    pub transformer_residual: f64,
    /// When `|ρ| = 1`: deviation of the table from `μ₂(j)·[x_i = ℓ±(y_j)]`.
    pub complete_form_residual: Option<f64>,
}

/// Observable correlation with the transformer form of the table and, at `|ρ| = 1`,
/// the complete-dependence form checked.
pub fn observable_correlation_with(
    st: &StateTransformer<'_>,
    run: &SchemeRun,
    tol: f64,
) -> Result<ObservableCorrelation> {
    let e = st.measured_povm();
    let dist = observable_bivariate_run(run, e)?;
    let stats = corr_stats(&dist);
    let n = e.len();
    let mut transformer_residual: f64 = 0.0;
    for j in 0..n {
        let ij = st.apply(j, &run.input)?;
        for i in 0..n {
            let twice = st.apply_operator(i, &ij)?.trace().re;
            transformer_residual = transformer_residual.max((twice - dist.get(i, j)).abs());
        }
    }
    if transformer_residual > ROUTE_TOL {
        return Err(QmError::RouteMismatch { what: "observable table via state transformer".into(), residual: transformer_residual });
    }
    let complete_form_residual = match stats.rho {
        Some(rho) if (rho.abs() - 1.0).abs() <= tol => {
            let a = rho.signum() * stats.sigma1 / stats.sigma2;
            let b = stats.eps1 - a * stats.eps2;
            let mu2 = dist.mu2();
            let mut worst: f64 = 0.0;
            for (j, (&y, &m)) in dist.col_values().iter().zip(&mu2).enumerate() {
                let target = a * y + b;
                for (i, &x) in dist.row_values().iter().enumerate() {
                    let hit = (x - target).abs() <= 1e-6 * target.abs().max(1.0);
                    let want = if hit { m } else { 0.0 };
                    worst = worst.max((dist.get(i, j) - want).abs());
                }
            }
            Some(worst)
        }
        _ => None,
    };
    let dependence = classify_dependence(&dist, tol);
    Ok(ObservableCorrelation { dist, stats, dependence, transformer_residual, complete_form_residual })
}

pub fn observable_correlation(
    s: &MeasurementScheme,
    t: &State,
    r: &ReadingScale,
    tol: f64,
) -> Result<ObservableCorrelation> {
    let st = StateTransformer::new(s, r)?;
    let run = SchemeRun::new(s, t, r)?;
    observable_correlation_with(&st, &run, tol)
}

/// Correlation of `E_i⊗I` and `I⊗Z_i` in the final joint state.
///
/// The mixed moment is checked against `tr[I_i(I_i(T))]` and `ε₂` against `tr[T·E_i]`.
pub fn value_correlation_with(st: &StateTransformer<'_>, run: &SchemeRun, i: usize) -> Result<CorrStats> {
    let e = &st.measured_povm().effect(i).matrix;
    let z = run.pointer_cells.get(i).ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))?;
    let stats = bipartite_stats(&run.joint, e, z, run.dim_s, run.dim_a)?;
    let once = st.apply(i, &run.input)?;
    let twice = st.apply_operator(i, &once)?.trace().re;
    let residual = (twice - stats.eps12).abs().max((stats.eps2 - run.input.matrix().trace_product(e).re).abs());
    if residual > ROUTE_TOL {
        return Err(QmError::RouteMismatch { what: "value correlation moments".into(), residual });
    }
    Ok(stats)
}

pub fn value_correlation(s: &MeasurementScheme, t: &State, r: &ReadingScale, i: usize) -> Result<CorrStats> {
    let st = StateTransformer::new(s, r)?;
    value_correlation_with(&st, &SchemeRun::new(s, t, r)?, i)
}

/// Correlation of `T_S(i,T)⊗I` and `I⊗T_A(i,T)` in the final joint state.
pub fn state_correlation_run(run: &SchemeRun, i: usize) -> Result<CorrStats> {
    let c = run.components.get(i).ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))?;
    if c.is_null() {
        return Ok(CorrStats::undefined());
    }
    bipartite_stats(&run.joint, &c.object_matrix(run.dim_s), &c.apparatus_matrix(run.dim_a), run.dim_s, run.dim_a)
}

pub fn state_correlation(s: &MeasurementScheme, t: &State, r: &ReadingScale, i: usize) -> Result<CorrStats> {
    state_correlation_run(&SchemeRun::new(s, t, r)?, i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCorrelation {
    pub stats: CorrStats,
    /// Descending, padded with zeros to the larger dimension.
    pub spectrum_object: Vec<f64>,
    pub spectrum_apparatus: Vec<f64>,
    pub spectral_mismatch: f64,
}

/// Correlation of the two reduced states of the pure final state `U(φ⊗φ_A)`.
pub fn reduced_state_correlation(s: &MeasurementScheme, t: &State) -> Result<ReducedCorrelation> {
    let u = s
        .coupling()
        .as_unitary()
        .ok_or_else(|| QmError::InvalidArgument("reduced-state correlation needs a unitary coupling".into()))?;
    let phi = t.as_vector(1e-10).ok_or_else(|| QmError::InvalidArgument("object state is not a vector state".into()))?;
    let phi_a = s
        .apparatus_state()
        .as_vector(1e-10)
        .ok_or_else(|| QmError::InvalidArgument("apparatus state is not a vector state".into()))?;
    let (ds, da) = (s.dim_s(), s.dim_a());
    let psi = u.apply(&crate::linop::kron_vec(&phi, &phi_a));
    let joint = CMatrix::outer(&psi);
    let rs = partial_trace(&joint, ds, da, Subsystem::Object)?;
    let ra = partial_trace(&joint, ds, da, Subsystem::Apparatus)?;
    let stats = bipartite_stats(&joint, &rs, &ra, ds, da)?;
    let n = ds.max(da);
    let spectrum = |m: &CMatrix| -> Result<Vec<f64>> {
        let mut v = herm_eig(m)?.eigenvalues;
        v.reverse();
        v.resize(n, 0.0);
        Ok(v)
    };
    let so = spectrum(&rs)?;
    let sa = spectrum(&ra)?;
    let spectral_mismatch = so.iter().zip(&sa).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(ReducedCorrelation { stats, spectrum_object: so, spectrum_apparatus: sa, spectral_mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(table: Vec<Vec<f64>>, rows: Vec<f64>, cols: Vec<f64>) -> BivariateDist {
        BivariateDist::new(rows, cols, table).unwrap()
    }

    #[test]
    fn product_is_uncorrelated_and_independent() {
        let d = BivariateDist::product(vec![0.0, 1.0, 3.0], &[0.2, 0.5, 0.3], vec![-1.0, 2.0], &[0.4, 0.6]).unwrap();
        assert!(corr_stats(&d).rho.unwrap().abs() < 1e-12);
        assert_eq!(classify_dependence(&d, 1e-10), Dependence::Independent);
    }

    #[test]
    fn diagonal_and_antidiagonal() {
        let d = dist(vec![vec![0.3, 0.0], vec![0.0, 0.7]], vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!((corr_stats(&d).rho.unwrap() - 1.0).abs() < 1e-12);
        let link = classify_dependence(&d, 1e-10).link().unwrap();
        assert!((link.slope - 1.0).abs() < 1e-12 && link.intercept.abs() < 1e-12);

        let d = dist(vec![vec![0.0, 0.4], vec![0.6, 0.0]], vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!((corr_stats(&d).rho.unwrap() + 1.0).abs() < 1e-12);
        let link = classify_dependence(&d, 1e-10).link().unwrap();
        assert!((link.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn crot_observable_table() {
        let d = dist(vec![vec![5.0 / 8.0, 1.0 / 8.0], vec![1.0 / 8.0, 1.0 / 8.0]], vec![0.0, 1.0], vec![0.0, 1.0]);
        assert!((corr_stats(&d).rho.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(classify_dependence(&d, 1e-10), Dependence::Dependent);
    }

    #[test]
    fn uncorrelated_but_dependent() {
        // x ∈ {−1,0,1}, y ∈ {0,1}: x = 0 exactly when y = 0, x = ±1 otherwise
        let d = dist(vec![vec![0.0, 0.25], vec![0.5, 0.0], vec![0.0, 0.25]], vec![-1.0, 0.0, 1.0], vec![0.0, 1.0]);
        assert!(corr_stats(&d).rho.unwrap().abs() < 1e-12);
        assert_eq!(classify_dependence(&d, 1e-10), Dependence::Dependent);
    }

    #[test]
    fn degenerate_marginal_flags() {
        let d = dist(vec![vec![0.5], vec![0.5]], vec![0.0, 1.0], vec![3.0]);
        assert!(corr_stats(&d).rho.is_none());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(BivariateDist::new(vec![0.0], vec![0.0], vec![vec![0.9]]).is_err());
        assert!(BivariateDist::new(vec![0.0, 1.0], vec![0.0], vec![vec![1.2], vec![-0.2]]).is_err());
        assert!(BivariateDist::new(vec![0.0], vec![0.0, 1.0], vec![vec![1.0]]).is_err());
    }
}
