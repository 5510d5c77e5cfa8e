//! State transformers (instruments) `I_i(T) = R_S(V_i(T))` and the first-kind and
//! repeatability classifications.

use crate::error::{QmError, Result};
use crate::linop::{CMatrix, C64, ZERO};
use crate::quantum::{Povm, State};
use crate::random::{random_state, rng_from_seed};
use crate::scheme::{hermitian_basis_states, measured_povm, spectral_pieces, MeasurementScheme, ReadingScale};
use crate::verdict::Verdict;

/// Number of seeded random states added to the Hermitian basis in [`default_test_states`].
pub const RANDOM_TEST_STATES: usize = 20;

/// The instrument of a scheme on a reading scale, held in operator-sum form:
/// `I_i(X) = Σ_k L_{ik} X L_{ik}†` with `L = √t_n (I⊗⟨m|Z_i^{1/2}) K (I⊗|φ_n⟩)`.
#[derive(Debug, Clone)]
pub struct StateTransformer<'a> {
    scheme: &'a MeasurementScheme,
    scale: &'a ReadingScale,
    kraus: Vec<Vec<CMatrix>>,
    povm: Povm,
}

impl<'a> StateTransformer<'a> {
    pub fn new(scheme: &'a MeasurementScheme, scale: &'a ReadingScale) -> Result<Self> {
        let povm = measured_povm(scheme, scale)?;
        let cells = scheme.cell_effects(scale)?;
        let (ds, da) = (scheme.dim_s(), scheme.dim_a());
        let pieces = spectral_pieces(scheme.apparatus_state().matrix());
        let mut kraus = Vec::with_capacity(cells.len());
        for z in &cells {
            let root = crate::linop::psd_sqrt(z)?;
            let mut ops = Vec::new();
            for k in scheme.coupling().kraus() {
                for (w, phi) in &pieces {
                    let sw = w.sqrt();
                    // M[(a,x), b] = Σ_y K[(a,x),(b,y)] φ[y]
                    let mut m = CMatrix::zeros(ds * da, ds);
                    for row in 0..ds * da {
                        for b in 0..ds {
                            let mut acc = ZERO;
                            for y in 0..da {
                                acc += k[(row, b * da + y)] * phi[y];
                            }
                            m[(row, b)] = acc * sw;
                        }
                    }
                    for mi in 0..da {
                        let l = CMatrix::from_fn(ds, ds, |a, b| {
                            (0..da).map(|x| root[(mi, x)] * m[(a * da + x, b)]).sum::<C64>()
                        });
                        if l.frobenius_norm() > 1e-14 {
                            ops.push(l);
                        }
                    }
                }
            }
            kraus.push(ops);
        }
        Ok(StateTransformer { scheme, scale, kraus, povm })
    }

    pub fn scheme(&self) -> &MeasurementScheme {
        self.scheme
    }

    pub fn scale(&self) -> &ReadingScale {
        self.scale
    }

    pub fn measured_povm(&self) -> &Povm {
        &self.povm
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    /// Operator-sum elements of cell `i`.
    pub fn kraus(&self, i: usize) -> &[CMatrix] {
        &self.kraus[i]
    }

    /// `I_i(X)` for any operator `X` on `H_S` (the map is linear).
    pub fn apply_operator(&self, i: usize, x: &CMatrix) -> Result<CMatrix> {
        let ops = self.kraus.get(i).ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))?;
        let d = self.scheme.dim_s();
        if x.rows() != d || x.cols() != d {
            return Err(QmError::DimensionMismatch(format!("operator {}x{} on dimension {d}", x.rows(), x.cols())));
        }
        let mut out = CMatrix::zeros(d, d);
        for l in ops {
            out = &out + &l.conjugate(x);
        }
        Ok(out)
    }

    /// `I_i(T)`, unnormalised; its trace is `p^E_T(X_i)`.
    pub fn apply(&self, i: usize, t: &State) -> Result<CMatrix> {
        self.apply_operator(i, t.matrix())
    }

    /// `I_Ω(T)`, the non-selective final object state.
    pub fn apply_total(&self, t: &State) -> Result<CMatrix> {
        let mut out = CMatrix::zeros(t.dim(), t.dim());
        for i in 0..self.len() {
            out = &out + &self.apply(i, t)?;
        }
        Ok(out)
    }

    /// `Σ_k L†L` per cell: the measured effects through the dual instrument.
    pub fn dual_effect(&self, i: usize) -> CMatrix {
        let d = self.scheme.dim_s();
        self.kraus[i].iter().fold(CMatrix::zeros(d, d), |acc, l| &acc + &l.adjoint().matmul(l))
    }
}

/// `d²` Hermitian-basis states followed by [`RANDOM_TEST_STATES`] seeded random states.
pub fn default_test_states(dim: usize, seed: u64) -> Vec<State> {
    let mut out: Vec<State> =
        hermitian_basis_states(dim).iter().map(|v| State::pure(v).expect("unit vectors")).collect();
    let mut rng = rng_from_seed(seed);
    for k in 0..RANDOM_TEST_STATES {
        out.push(random_state(&mut rng, dim, 1 + k % dim));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstKindReport {
    /// `max |p^E_T(X_i) − p^E_{I_Ω(T)}(X_i)|`.
    pub max_deviation: f64,
    pub verdict: Verdict,
}

pub fn check_first_kind(st: &StateTransformer<'_>, states: &[State], tol: f64) -> Result<FirstKindReport> {
    let mut max_deviation: f64 = 0.0;
    for t in states {
        let after = st.apply_total(t)?;
        for e in st.povm.effects() {
            let before = t.matrix().trace_product(&e.matrix).re;
            let now = after.trace_product(&e.matrix).re;
            max_deviation = max_deviation.max((before - now).abs());
        }
    }
    Ok(FirstKindReport { max_deviation, verdict: Verdict::from_residual(max_deviation, tol) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatCell {
    pub cell: usize,
    /// Worst `|1 − tr[E_i·T_S(i,T)]|` over the test states.
    pub prob_defect: f64,
    /// Worst `‖E_i·T_S(i,T) − T_S(i,T)‖_F`.
    pub eigen_defect: f64,
    /// Smallest repeat probability `tr[E_i·T_S(i,T)]` seen.
    pub min_repeat_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatabilityReport {
    pub cells: Vec<RepeatCell>,
    pub residual: f64,
    pub verdict: Verdict,
}

pub fn check_repeatable(st: &StateTransformer<'_>, states: &[State], tol: f64) -> Result<RepeatabilityReport> {
    let mut cells: Vec<RepeatCell> = (0..st.len())
        .map(|cell| RepeatCell { cell, prob_defect: 0.0, eigen_defect: 0.0, min_repeat_probability: 1.0 })
        .collect();
    for t in states {
        for (i, rc) in cells.iter_mut().enumerate() {
            let unnorm = st.apply(i, t)?;
            let w = unnorm.trace().re;
            if w <= tol {
                continue;
            }
            let ts = unnorm.scale_real(1.0 / w);
            let e = &st.povm.effect(i).matrix;
            let rp = ts.trace_product(e).re;
            rc.prob_defect = rc.prob_defect.max((1.0 - rp).abs());
            rc.eigen_defect = rc.eigen_defect.max(e.matmul(&ts).distance(&ts));
            rc.min_repeat_probability = rc.min_repeat_probability.min(rp);
        }
    }
    let residual = cells.iter().map(|c| c.prob_defect.max(c.eigen_defect)).fold(0.0, f64::max);
    Ok(RepeatabilityReport { verdict: Verdict::from_residual(residual, tol), residual, cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionReport {
    /// `max |tr[I_i(I_j(T))] − δ_ij·tr[I_i(T)]|`.
    pub max_deviation: f64,
    pub verdict: Verdict,
}

pub fn check_repeat_composition(st: &StateTransformer<'_>, states: &[State], tol: f64) -> Result<CompositionReport> {
    let mut max_deviation: f64 = 0.0;
    for t in states {
        let first: Vec<CMatrix> = (0..st.len()).map(|j| st.apply(j, t)).collect::<Result<_>>()?;
        for (j, fj) in first.iter().enumerate() {
            for i in 0..st.len() {
                let twice = st.apply_operator(i, fj)?.trace().re;
                let expect = if i == j { fj.trace().re } else { 0.0 };
                max_deviation = max_deviation.max((twice - expect).abs());
            }
        }
    }
    Ok(CompositionReport { max_deviation, verdict: Verdict::from_residual(max_deviation, tol) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{basis_vector, c};
    use crate::scheme::{Coupling, SchemeRun};

    fn crot() -> MeasurementScheme {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, h, -h],
            &[0.0, 0.0, h, h],
        ])
        .unwrap();
        MeasurementScheme::new(
            2,
            Povm::computational(2),
            None,
            State::pure(&basis_vector(2, 0)).unwrap(),
            Coupling::unitary(u).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn crot_first_kind_but_not_repeatable() {
        let s = crot();
        let r = ReadingScale::finest(&s);
        let st = StateTransformer::new(&s, &r).unwrap();
        assert!(st.measured_povm().effect(1).matrix.distance(&CMatrix::diag_real(&[0.0, 0.5])) < 1e-12);
        assert!(st.dual_effect(1).distance(&st.measured_povm().effect(1).matrix) < 1e-12);
        let states = default_test_states(2, 1);
        assert!(check_first_kind(&st, &states, 1e-10).unwrap().verdict.holds());
        let rep = check_repeatable(&st, &states, 1e-10).unwrap();
        assert!(rep.verdict.fails());
        assert!((rep.cells[1].min_repeat_probability - 0.5).abs() < 1e-10);
        assert!(check_repeat_composition(&st, &states, 1e-10).unwrap().verdict.fails());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = State::pure(&[c(h, 0.0), c(h, 0.0)]).unwrap();
        let once = st.apply(1, &plus).unwrap();
        assert!((once.trace().re - 0.25).abs() < 1e-12);
        assert!((st.apply_operator(1, &once).unwrap().trace().re - 0.125).abs() < 1e-12);
    }

    #[test]
    fn apply_matches_partial_trace_route() {
        let s = crot();
        let r = ReadingScale::finest(&s);
        let st = StateTransformer::new(&s, &r).unwrap();
        for t in default_test_states(2, 9) {
            let run = SchemeRun::new(&s, &t, &r).unwrap();
            for i in 0..2 {
                let via_run = run.components[i].object_matrix(2).scale_real(run.components[i].weight);
                assert!(st.apply(i, &t).unwrap().distance(&via_run) < 1e-10);
            }
        }
    }
}
