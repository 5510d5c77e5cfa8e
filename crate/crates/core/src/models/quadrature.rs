//! Truncated single-mode quadrature measurement: signal quadrature `a^q` coupled to the probe
//! quadrature `b^q` by `e^{iλ a^q⊗b^q}`, read out through the phase quadrature `b^p`.
//!
//! The joint space is too large to handle densely at useful truncations, so all quantities are
//! computed in the eigenbasis of `a^q`, where the final state is `Σ_k c_k |α_k⟩⊗φ_k` with
//! `φ_k = e^{iλa_k b^q}φ`. [`QuadratureModel::to_scheme`] densifies small instances so that the
//! structured formulas can be checked against the generic scheme machinery.
//!
//! The probe mode gets its own truncation, sized so that the shifted probe states stay clear of
//! the top Fock levels.

use std::io::{self, Write};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::correlate::{corr_stats, BivariateDist, CorrStats};
use crate::error::{QmError, Result};
use crate::linop::{herm_eig, CMatrix, HermEig, C64, I, ZERO};
use crate::quantum::{Effect, Povm, State};
use crate::report::fmt12;
use crate::scheme::{Cell, ReadingScale};

use super::product::{build_product_scheme, spectral_sum, ProductCouplingSpec, ProductScheme};

/// Smallest signal truncation accepted.
pub const MIN_TRUNCATION: usize = 16;
/// Signal population allowed in the top Fock level.
pub const SIGNAL_TOP_LEVEL_LIMIT: f64 = 1e-6;
/// Probe truncation defect allowed, weighted over the signal.
pub const PROBE_LEAKAGE_LIMIT: f64 = 1e-6;
/// Automatic probe sizing stops doubling once the defect is below this.
pub const PROBE_LEAKAGE_TARGET: f64 = 1e-10;
pub const MAX_PROBE_DIM: usize = 2048;
/// Largest joint dimension [`QuadratureModel::to_scheme`] will build.
pub const DENSE_JOINT_LIMIT: usize = 1024;

/// Ladder operator `a` on the lowest `n` Fock levels.
pub fn annihilation(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| if c == r + 1 { C64::new((c as f64).sqrt(), 0.0) } else { ZERO })
}

/// `(a†+a)/√2`.
pub fn position_quadrature(n: usize) -> CMatrix {
    let a = annihilation(n);
    (&a.adjoint() + &a).scale_real(std::f64::consts::FRAC_1_SQRT_2)
}

/// `i(a†−a)/√2`.
pub fn momentum_quadrature(n: usize) -> CMatrix {
    let a = annihilation(n);
    (&a.adjoint() - &a).scale(I * std::f64::consts::FRAC_1_SQRT_2)
}

/// `[q,p] − iI` splits into the top-level entry `−iN` and (ideally zero) the rest; returns
/// `(|top-level entry|, max |entry| elsewhere)`.
pub fn commutator_defect(n: usize) -> (f64, f64) {
    let q = position_quadrature(n);
    let p = momentum_quadrature(n);
    let d = &q.commutator(&p) - &CMatrix::identity(n).scale(I);
    let mut elsewhere: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            if (r, c) != (n - 1, n - 1) {
                elsewhere = elsewhere.max(d[(r, c)].norm());
            }
        }
    }
    (d[(n - 1, n - 1)].norm(), elsewhere)
}

fn normalise(mut v: Vec<C64>) -> Vec<C64> {
    let norm = crate::linop::vnorm(&v);
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Coherent state `|α⟩` (real `α`) cut to `n` levels and renormalised.
pub fn coherent_vector(n: usize, alpha: f64) -> Vec<C64> {
    let mut v = Vec::with_capacity(n);
    let mut c = (-0.5 * alpha * alpha).exp();
    for k in 0..n {
        v.push(C64::new(c, 0.0));
        c *= alpha / ((k + 1) as f64).sqrt();
    }
    normalise(v)
}

pub fn coherent_state(n: usize, alpha: f64) -> State {
    State::pure(&coherent_vector(n, alpha)).expect("normalised")
}

/// Squeezed vacuum with `Var(b^p) = e^{−2r}/2`, cut to `n` levels and renormalised.
pub fn squeezed_vacuum_vector(n: usize, r: f64) -> Vec<C64> {
    let t = r.tanh();
    let mut v = vec![ZERO; n];
    let mut c = 1.0 / r.cosh().sqrt();
    let mut m = 0;
    while 2 * m < n {
        v[2 * m] = C64::new(c, 0.0);
        c *= t * ((2 * m + 1) as f64 / (2 * m + 2) as f64).sqrt();
        m += 1;
    }
    normalise(v)
}

/// Initial probe state.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Vacuum,
    /// Real displacement `α`; shifts `b^q`, leaves `⟨b^p⟩ = 0`.
    Coherent(f64),
    /// Squeezing parameter `r` reducing `Var(b^p)` to `e^{−2r}/2`.
    Squeezed(f64),
    /// Explicit Fock amplitudes; fixes the probe truncation to its length.
    Vector(Vec<C64>),
}

impl Probe {
    fn vector(&self, m: usize) -> Result<Vec<C64>> {
        Ok(match self {
            Probe::Vacuum => crate::linop::basis_vector(m, 0),
            Probe::Coherent(alpha) => coherent_vector(m, *alpha),
            Probe::Squeezed(r) => squeezed_vacuum_vector(m, *r),
            Probe::Vector(v) => {
                let n = crate::linop::vnorm(v);
                if (n - 1.0).abs() > 1e-10 {
                    return Err(QmError::NotNormalized(n));
                }
                v.clone()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Signal truncation `N`.
    pub n: usize,
    pub lambda: f64,
    pub probe: Probe,
    /// Equal-probability cells of the coarse reading scale.
    pub bins: usize,
    /// Probe truncation; `None` sizes it from the signal.
    pub probe_dim: Option<usize>,
}

impl QuadratureConfig {
    pub fn new(n: usize, lambda: f64) -> Self {
        QuadratureConfig { n, lambda, probe: Probe::Vacuum, bins: 2, probe_dim: None }
    }

    pub fn with_probe(mut self, probe: Probe) -> Self {
        self.probe = probe;
        self
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = bins;
        self
    }

    pub fn with_probe_dim(mut self, m: usize) -> Self {
        self.probe_dim = Some(m);
        self
    }
}

/// Cells of `b^p` eigen-indices (ascending eigenvalues) with their values `y/λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerScale {
    pub cells: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

impl PointerScale {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureModel {
    n: usize,
    m: usize,
    lambda: f64,
    probe: Vec<C64>,
    aq_eig: HermEig,
    /// Eigenvalues of `b^q` and `b^p` (identical spectra).
    probe_spectrum: Vec<f64>,
    /// `amps[k][j] = ⟨y_j|φ_k⟩`.
    amps: Vec<Vec<C64>>,
    /// Truncation defect of each `φ_k`: top-two-level Fock population plus the deviation of its
    /// `b^p` mean and variance from a rigid shift of the probe's.
    leak: Vec<f64>,
    /// `|⟨y_j|φ⟩|²`.
    probe_distribution: Vec<f64>,
    fine: PointerScale,
    coarse: PointerScale,
}

impl QuadratureModel {
    /// Builds with the configured probe truncation, or `max(4N, 64)` if none is set.
    pub fn new(cfg: &QuadratureConfig) -> Result<Self> {
        let m = match (&cfg.probe, cfg.probe_dim) {
            (Probe::Vector(v), _) => v.len(),
            (_, Some(m)) => m,
            (_, None) => (4 * cfg.n).max(64),
        };
        Self::with_probe_dim(cfg, m)
    }

    /// Doubles the probe truncation until the shifted probe states, weighted by `signal`,
    /// stay resolved to within [`PROBE_LEAKAGE_TARGET`].
    pub fn for_signal(cfg: &QuadratureConfig, signal: &State) -> Result<Self> {
        if cfg.probe_dim.is_some() || matches!(cfg.probe, Probe::Vector(_)) {
            let model = Self::new(cfg)?;
            model.truncation_defect(signal)?;
            return Ok(model);
        }
        let mut m = cfg.n.max(MIN_TRUNCATION);
        loop {
            let model = Self::with_probe_dim(cfg, m)?;
            let weights = model.signal_weights(signal)?;
            if model.probe_leakage(&weights) <= PROBE_LEAKAGE_TARGET {
                return Ok(model);
            }
            if 2 * m > MAX_PROBE_DIM {
                let leak = model.probe_leakage(&weights);
                if leak <= PROBE_LEAKAGE_LIMIT {
                    return Ok(model);
                }
                return Err(QmError::Truncation(format!(
                    "probe leakage {leak:.3e} at the largest probe truncation {m}"
                )));
            }
            m *= 2;
        }
    }

    fn with_probe_dim(cfg: &QuadratureConfig, m: usize) -> Result<Self> {
        let n = cfg.n;
        if n < MIN_TRUNCATION {
            return Err(QmError::Truncation(format!("signal truncation {n} below {MIN_TRUNCATION}")));
        }
        if m < MIN_TRUNCATION {
            return Err(QmError::Truncation(format!("probe truncation {m} below {MIN_TRUNCATION}")));
        }
        if !(cfg.lambda.is_finite() && cfg.lambda > 0.0) {
            return Err(QmError::InvalidArgument(format!("coupling constant {} must be positive", cfg.lambda)));
        }
        if cfg.bins < 2 {
            return Err(QmError::InvalidScale(format!("{} bins; need at least 2", cfg.bins)));
        }
        let probe = cfg.probe.vector(m)?;
        let aq_eig = herm_eig(&position_quadrature(n))?;
        let bq_eig = herm_eig(&position_quadrature(m))?;
        let vq = &bq_eig.eigenvectors;
        let vq_t = vq.transpose();
        let spectrum = bq_eig.eigenvalues.clone();
        // b^p = R b^q R† with R = diag(iⁿ): b^p has eigenvectors R·v_j and the same spectrum, so
        // b^p-eigen amplitudes of a Fock vector ψ are V_qᵀ·R†ψ.
        let to_bp = |fock: &[C64]| -> Vec<C64> {
            let rotated: Vec<C64> = fock.iter().enumerate().map(|(n, z)| z * I.powu(n as u32).conj()).collect();
            vq_t.apply(&rotated)
        };
        let u = vq_t.apply(&probe);
        let probe_amps = to_bp(&probe);
        let probe_distribution: Vec<f64> = probe_amps.iter().map(|z| z.norm_sqr()).collect();
        let (mean0, var0) = moments(&probe_distribution, &spectrum);
        let results: Vec<(Vec<C64>, f64)> = aq_eig
            .eigenvalues
            .par_iter()
            .map(|&a| {
                let z: Vec<C64> = u
                    .iter()
                    .zip(&spectrum)
                    .map(|(x, &beta)| x * C64::from_polar(1.0, cfg.lambda * a * beta))
                    .collect();
                let fock = vq.apply(&z);
                let amp = to_bp(&fock);
                // a faithful shift keeps the top levels empty and moves the b^p distribution
                // rigidly by λa; wrap-around on the truncated grid shows up in the moments
                let dist: Vec<f64> = amp.iter().map(|z| z.norm_sqr()).collect();
                let (mean, var) = moments(&dist, &spectrum);
                let defect = fock[m - 1].norm_sqr()
                    + fock[m - 2].norm_sqr()
                    + (mean - mean0 - cfg.lambda * a).abs()
                    + (var - var0).abs();
                (amp, defect)
            })
            .collect();
        let (amps, leak): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        let fine = PointerScale {
            cells: (0..m).map(|j| vec![j]).collect(),
            values: spectrum.iter().map(|y| y / cfg.lambda).collect(),
        };
        let coarse = equal_probability_scale(&probe_distribution, &spectrum, cfg.bins, cfg.lambda)?;
        Ok(QuadratureModel {
            n,
            m,
            lambda: cfg.lambda,
            probe,
            aq_eig,
            probe_spectrum: spectrum,
            amps,
            leak,
            probe_distribution,
            fine,
            coarse,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probe_dim(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn probe(&self) -> &[C64] {
        &self.probe
    }

    /// One cell per `b^p` eigenvalue.
    pub fn fine_scale(&self) -> &PointerScale {
        &self.fine
    }

    /// Equal-probability cells under the probe's `b^p` distribution, valued by their
    /// probability-median eigenvalue over `λ`.
    pub fn coarse_scale(&self) -> &PointerScale {
        &self.coarse
    }

    pub fn signal_quadrature_eigen(&self) -> &HermEig {
        &self.aq_eig
    }

    /// `⟨b^p⟩` and `Var(b^p)` in the probe state.
    pub fn probe_moments(&self) -> (f64, f64) {
        moments(&self.probe_distribution, &self.probe_spectrum)
    }

    /// Diagonal `⟨α_k|T|α_k⟩` of the signal in the `a^q` eigenbasis, after the truncation guard.
    pub fn signal_weights(&self, signal: &State) -> Result<Vec<f64>> {
        if signal.dim() != self.n {
            return Err(QmError::DimensionMismatch(format!(
                "signal of dimension {} for truncation {}",
                signal.dim(),
                self.n
            )));
        }
        let top = signal.matrix()[(self.n - 1, self.n - 1)].re;
        if top > SIGNAL_TOP_LEVEL_LIMIT {
            return Err(QmError::Truncation(format!(
                "signal population {top:.3e} in the top Fock level {}",
                self.n - 1
            )));
        }
        Ok((0..self.n).map(|k| signal.matrix().expectation(&self.aq_eig.vector(k)).re.max(0.0)).collect())
    }

    fn probe_leakage(&self, weights: &[f64]) -> f64 {
        weights.iter().zip(&self.leak).map(|(w, l)| w * l).sum()
    }

    /// Signal top-level population plus weighted probe leakage; errors past the guards.
    pub fn truncation_defect(&self, signal: &State) -> Result<f64> {
        let weights = self.signal_weights(signal)?;
        let leak = self.probe_leakage(&weights);
        if leak > PROBE_LEAKAGE_LIMIT {
            return Err(QmError::Truncation(format!(
                "shifted probe leaks {leak:.3e} into the top levels of a {}-level probe",
                self.m
            )));
        }
        Ok(signal.matrix()[(self.n - 1, self.n - 1)].re.max(0.0) + leak)
    }

    /// `p_k(i) = Σ_{j∈cell i} |⟨y_j|φ_k⟩|²`.
    pub fn cell_probabilities(&self, scale: &PointerScale) -> Vec<Vec<f64>> {
        self.amps
            .iter()
            .map(|amp| scale.cells.iter().map(|c| c.iter().map(|&j| amp[j].norm_sqr()).sum()).collect())
            .collect()
    }

    /// `E_i = Σ_k p_k(i)·|α_k⟩⟨α_k|`.
    pub fn measured_povm(&self, scale: &PointerScale) -> Result<Povm> {
        let probs = self.cell_probabilities(scale);
        let effects = (0..scale.len())
            .map(|i| {
                let w: Vec<C64> = probs.iter().map(|p| C64::new(p[i], 0.0)).collect();
                Effect::new(spectral_sum(&self.aq_eig, &w), scale.values[i])
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(effects)
    }

    /// `μ(i,j) = tr[V(T⊗T_A)·E_i⊗Z_j] = Σ_k w_k p_k(i) p_k(j)`.
    pub fn observable_bivariate(&self, signal: &State, scale: &PointerScale) -> Result<BivariateDist> {
        let weights = self.signal_weights(signal)?;
        let probs = self.cell_probabilities(scale);
        let c = scale.len();
        let table: Vec<Vec<f64>> = (0..c)
            .into_par_iter()
            .map(|i| {
                (0..c).map(|j| weights.iter().zip(&probs).map(|(w, p)| w * p[i] * p[j]).sum()).collect()
            })
            .collect();
        BivariateDist::new(scale.values.clone(), scale.values.clone(), table)
    }

    pub fn observable_correlation(&self, signal: &State, scale: &PointerScale) -> Result<CorrStats> {
        Ok(corr_stats(&self.observable_bivariate(signal, scale)?))
    }

    /// `Var(E)` on the fine scale against `Var(a^q) + λ⁻²Var(b^p)`.
    pub fn variance_decomposition(&self, signal: &State) -> Result<VarianceDecomposition> {
        let truncation_defect = self.truncation_defect(signal)?;
        let weights = self.signal_weights(signal)?;
        let (_, var_aq) = moments(&weights, &self.aq_eig.eigenvalues);
        let (_, var_bp) = self.probe_moments();
        let noise = var_bp / (self.lambda * self.lambda);
        let probs = self.cell_probabilities(&self.fine);
        let dist: Vec<f64> =
            (0..self.m).map(|j| weights.iter().zip(&probs).map(|(w, p)| w * p[j]).sum()).collect();
        let (_, var_e) = moments(&dist, &self.fine.values);
        let relative_residual = (var_e - var_aq - noise).abs() / var_e;
        if relative_residual > VARIANCE_SPLIT_TOL {
            return Err(QmError::RouteMismatch { what: "variance decomposition".into(), residual: relative_residual });
        }
        Ok(VarianceDecomposition { var_e, var_aq, noise, relative_residual, truncation_defect })
    }

    /// Value correlation of cell `i` with the moments of the structured route exposed.
    pub fn value_correlation(&self, signal: &State, scale: &PointerScale, i: usize) -> Result<QuadValueCorrelation> {
        if i >= scale.len() {
            return Err(QmError::InvalidArgument(format!("no cell {i}")));
        }
        let weights = self.signal_weights(signal)?;
        let probs = self.cell_probabilities(scale);
        let mean_e: f64 = weights.iter().zip(&probs).map(|(w, p)| w * p[i]).sum();
        let second_e: f64 = weights.iter().zip(&probs).map(|(w, p)| w * p[i] * p[i]).sum();
        // E_i⊗I: ε₁ = tr[R_S E_i] = ⟨E_i⟩ (R_S keeps the a^q diagonal), second moment ⟨E_i²⟩;
        // I⊗Z_i: ε₂ = tr[R_A Z_i] = ⟨E_i⟩, and Z_i² = Z_i; mixed moment Σ w_k p_k(i)² = ⟨E_i²⟩.
        let stats = CorrStats::from_moments(mean_e, mean_e, second_e, second_e, mean_e);
        Ok(QuadValueCorrelation { stats, mean_e, second_e, var_e: second_e - mean_e * mean_e, pointer_var: mean_e - mean_e * mean_e })
    }

    /// Correlation of `T_S(i,T)⊗I` and `I⊗T_A(i,T)`.
    pub fn state_correlation(&self, signal: &State, scale: &PointerScale, i: usize) -> Result<CorrStats> {
        if i >= scale.len() {
            return Err(QmError::InvalidArgument(format!("no cell {i}")));
        }
        self.truncation_defect(signal)?;
        let (n, m) = (self.n, self.m);
        let va = &self.aq_eig.eigenvectors;
        let t = va.adjoint().matmul(signal.matrix()).matmul(va);
        let cell = &scale.cells[i];
        let overlap = |k: usize, l: usize, js: &mut dyn Iterator<Item = usize>| -> C64 {
            js.map(|j| self.amps[l][j].conj() * self.amps[k][j]).sum()
        };
        // in the a^q eigenbasis
        let rs = CMatrix::from_fn(n, n, |k, l| t[(k, l)] * overlap(k, l, &mut (0..m)));
        let instrument = CMatrix::from_fn(n, n, |k, l| t[(k, l)] * overlap(k, l, &mut cell.iter().copied()));
        let p = instrument.trace().re;
        if p <= crate::scheme::ZERO_WEIGHT {
            return Ok(CorrStats::undefined());
        }
        let x = instrument.scale_real(1.0 / p);
        // in the b^p eigenbasis
        let ra = CMatrix::from_fn(m, m, |a, b| (0..n).map(|k| t[(k, k)] * self.amps[k][a] * self.amps[k][b].conj()).sum());
        let in_cell: Vec<bool> = (0..m).map(|j| cell.contains(&j)).collect();
        let y = CMatrix::from_fn(m, m, |a, b| if in_cell[a] && in_cell[b] { ra[(a, b)] / p } else { ZERO });
        let y_amps: Vec<Vec<C64>> = self.amps.iter().map(|amp| y.apply(amp)).collect();
        let mut eps12 = ZERO;
        for k in 0..n {
            for l in 0..n {
                if t[(k, l)] == ZERO {
                    continue;
                }
                let ylk = crate::linop::vdot(&self.amps[l], &y_amps[k]);
                eps12 += t[(k, l)] * x[(l, k)] * ylk;
            }
        }
        Ok(CorrStats::from_moments(
            rs.trace_product(&x).re,
            ra.trace_product(&y).re,
            eps12.re,
            rs.trace_product(&x.matmul(&x)).re,
            ra.matmul(&y).trace_product(&y).re,
        ))
    }

    /// Operators `L_j = Σ_k ⟨y_j|φ_k⟩·|α_k⟩⟨α_k|` for the `b^p` eigenvectors `y_j` of cell `i`;
    /// `Σ_j L_j†L_j = E_i` and each commutes with `a^q`.
    pub fn l_operators(&self, scale: &PointerScale, i: usize) -> Result<Vec<CMatrix>> {
        let cell = scale.cells.get(i).ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))?;
        Ok(cell
            .iter()
            .map(|&j| {
                let coeffs: Vec<C64> = self.amps.iter().map(|amp| amp[j]).collect();
                spectral_sum(&self.aq_eig, &coeffs)
            })
            .collect())
    }

    /// Largest deviation of `p_k(i)` from the Gaussian convolution `∫_{X_i} e_λ(x − a_k) dx`
    /// of a vacuum probe, over the `a^q` eigenvalues whose shifted probe is well resolved.
    pub fn convolution_check(&self, scale: &PointerScale) -> Result<f64> {
        let (mean, var) = self.probe_moments();
        if mean.abs() > 1e-8 || (var - 0.5).abs() > 1e-6 {
            return Err(QmError::InvalidArgument("convolution check needs a vacuum-like probe".into()));
        }
        let noise = Normal::new(0.0, (0.5f64).sqrt() / self.lambda).expect("positive width");
        let spec = &self.probe_spectrum;
        let probs = self.cell_probabilities(scale);
        let mut worst: f64 = 0.0;
        for (k, &a) in self.aq_eig.eigenvalues.iter().enumerate() {
            if self.leak[k] > 1e-8 {
                continue;
            }
            for (i, cell) in scale.cells.iter().enumerate() {
                let (lo, hi) = (*cell.first().expect("nonempty"), *cell.last().expect("nonempty"));
                let lower = if lo == 0 { f64::NEG_INFINITY } else { 0.5 * (spec[lo - 1] + spec[lo]) / self.lambda };
                let upper =
                    if hi + 1 == spec.len() { f64::INFINITY } else { 0.5 * (spec[hi] + spec[hi + 1]) / self.lambda };
                let predicted = noise.cdf(upper - a) - noise.cdf(lower - a);
                worst = worst.max((predicted - probs[k][i]).abs());
            }
        }
        Ok(worst)
    }

    /// The dense product-coupling scheme `e^{iλ a^q⊗b^q}` with the `b^p` spectral pointer.
    pub fn to_scheme(&self) -> Result<ProductScheme> {
        if self.n * self.m > DENSE_JOINT_LIMIT {
            return Err(QmError::DimensionMismatch(format!(
                "joint dimension {}·{} exceeds the dense limit {DENSE_JOINT_LIMIT}",
                self.n, self.m
            )));
        }
        let spec = ProductCouplingSpec::new(position_quadrature(self.n), position_quadrature(self.m), self.lambda)?;
        let bp_eig = herm_eig(&momentum_quadrature(self.m))?;
        // match pointer effects to the indices used here (ascending eigenvalues)
        let pointer = Povm::new(
            (0..self.m)
                .map(|j| Effect::new(bp_eig.projection(|k| k == j), self.probe_spectrum[j]))
                .collect::<Result<Vec<_>>>()?,
        )?;
        build_product_scheme(spec, pointer, State::pure(&self.probe)?)
    }

    /// The reading scale of [`QuadratureModel::to_scheme`] matching a pointer scale.
    pub fn reading_scale(&self, scale: &PointerScale) -> Result<ReadingScale> {
        ReadingScale::new(
            scale.cells.iter().zip(&scale.values).map(|(c, &v)| Cell { pointers: c.clone(), value: v }).collect(),
        )
    }
}

/// Relative tolerance on `Var(E) = Var(a^q) + λ⁻²Var(b^p)`.
pub const VARIANCE_SPLIT_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceDecomposition {
    pub var_e: f64,
    pub var_aq: f64,
    /// `λ⁻²Var(b^p, φ)`.
    pub noise: f64,
    pub relative_residual: f64,
    pub truncation_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValueCorrelation {
    pub stats: CorrStats,
    /// `⟨E_i⟩`.
    pub mean_e: f64,
    /// `⟨E_i²⟩`.
    pub second_e: f64,
    /// `Var(E_i) = σ₁²`.
    pub var_e: f64,
    /// `⟨E_i⟩ − ⟨E_i⟩² = σ₂²`, the variance of the sharp pointer effect.
    pub pointer_var: f64,
}

fn moments(weights: &[f64], values: &[f64]) -> (f64, f64) {
    let mean: f64 = weights.iter().zip(values).map(|(w, x)| w * x).sum();
    let second: f64 = weights.iter().zip(values).map(|(w, x)| w * x * x).sum();
    (mean, second - mean * mean)
}

fn equal_probability_scale(q: &[f64], spectrum: &[f64], bins: usize, lambda: f64) -> Result<PointerScale> {
    let mut cells = vec![Vec::new(); bins];
    let mut before = 0.0;
    for (j, &qj) in q.iter().enumerate() {
        let mid = before + 0.5 * qj;
        cells[((mid * bins as f64).floor() as usize).min(bins - 1)].push(j);
        before += qj;
    }
    if let Some(i) = cells.iter().position(|c| c.is_empty()) {
        return Err(QmError::InvalidScale(format!("equal-probability cell {i} of {bins} is empty")));
    }
    let values = cells
        .iter()
        .map(|c| {
            let mass: f64 = c.iter().map(|&j| q[j]).sum();
            let mut acc = 0.0;
            let median = c
                .iter()
                .copied()
                .find(|&j| {
                    acc += q[j];
                    acc >= 0.5 * mass
                })
                .unwrap_or(c[c.len() - 1]);
            spectrum[median] / lambda
        })
        .collect();
    Ok(PointerScale { cells, values })
}

/// One λ of a correlation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub var_aq: f64,
    pub var_bp_scaled: f64,
    pub var_e: f64,
    pub rho_obs: f64,
    pub rho_value_cell0: f64,
    pub truncation_defect: f64,
    pub probe_dim: usize,
}

/// Per λ: the variance split, `ρ_obs` on the fine scale and `ρ_value` of the first coarse cell.
pub fn quadrature_correlation_sweep(template: &QuadratureConfig, signal: &State, lambdas: &[f64]) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() {
        return Err(QmError::InvalidArgument("empty λ list".into()));
    }
    lambdas
        .par_iter()
        .map(|&lambda| {
            let cfg = QuadratureConfig { lambda, ..template.clone() };
            let model = QuadratureModel::for_signal(&cfg, signal)?;
            let split = model.variance_decomposition(signal)?;
            let rho_obs = model
                .observable_correlation(signal, model.fine_scale())?
                .rho
                .ok_or_else(|| QmError::InvalidArgument(format!("degenerate observable correlation at λ={lambda}")))?;
            let rho_value_cell0 = model.value_correlation(signal, model.coarse_scale(), 0)?.stats.rho.unwrap_or(f64::NAN);
            Ok(SweepRow {
                lambda,
                var_aq: split.var_aq,
                var_bp_scaled: split.noise,
                var_e: split.var_e,
                rho_obs,
                rho_value_cell0,
                truncation_defect: split.truncation_defect,
                probe_dim: model.probe_dim(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    /// In the order given.
    pub strictly_increasing: bool,
    pub all_below_one: bool,
    /// `max |ρ_obs − Var(a^q)/(Var(a^q)+λ⁻²Var(b^p))| / that ratio`.
    pub max_ratio_deviation: f64,
}

pub fn summarize_sweep(rows: &[SweepRow]) -> SweepSummary {
    let strictly_increasing = rows.windows(2).all(|w| w[1].rho_obs > w[0].rho_obs);
    let all_below_one = rows.iter().all(|r| r.rho_obs < 1.0);
    let max_ratio_deviation = rows
        .iter()
        .map(|r| {
            let ratio = r.var_aq / (r.var_aq + r.var_bp_scaled);
            (r.rho_obs - ratio).abs() / ratio
        })
        .fold(0.0, f64::max);
    SweepSummary { strictly_increasing, all_below_one, max_ratio_deviation }
}

pub const SWEEP_CSV_HEADER: &str = "lambda,var_aq,var_bp_scaled,var_E,rho_obs,rho_value_cell0,truncation_defect";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt12(r.lambda),
            fmt12(r.var_aq),
            fmt12(r.var_bp_scaled),
            fmt12(r.var_e),
            fmt12(r.rho_obs),
            fmt12(r.rho_value_cell0),
            fmt12(r.truncation_defect)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_defect_confined_to_top_level() {
        let (top, rest) = commutator_defect(16);
        assert!((top - 16.0).abs() < 1e-12);
        assert!(rest < 1e-12);
    }

    #[test]
    fn squeezed_probe_variance() {
        let m = 96;
        let v = squeezed_vacuum_vector(m, 0.5);
        let p = momentum_quadrature(m);
        let mean = p.expectation(&v).re;
        let var = p.matmul(&p).expectation(&v).re - mean * mean;
        assert!((var - 0.5 * (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn guards() {
        assert!(matches!(QuadratureModel::new(&QuadratureConfig::new(8, 1.0)), Err(QmError::Truncation(_))));
        let model = QuadratureModel::new(&QuadratureConfig::new(16, 1.0)).unwrap();
        assert!(matches!(model.truncation_defect(&coherent_state(16, 3.0)), Err(QmError::Truncation(_))));
    }

    #[test]
    fn vacuum_probe_is_calibrated() {
        let model = QuadratureModel::new(&QuadratureConfig::new(16, 2.0)).unwrap();
        let (mean, var) = model.probe_moments();
        assert!(mean.abs() < 1e-12);
        assert!((var - 0.5).abs() < 1e-12);
        let c = model.coarse_scale();
        assert_eq!(c.len(), 2);
        assert!(c.values[0] < 0.0 && c.values[1] > 0.0);
    }
}
