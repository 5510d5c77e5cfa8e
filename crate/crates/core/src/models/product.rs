//! Couplings of product form `U = e^{iλA⊗B}` and their closed-form consequences.

use crate::error::{QmError, Result};
use crate::linop::{herm_eig, partial_trace, psd_sqrt, CMatrix, HermEig, Subsystem, C64, ZERO};
use crate::quantum::{Effect, Povm, State};
use crate::scheme::{component_states, measured_povm, spectral_pieces, Coupling, MeasurementScheme, ReadingScale};

/// Agreement required between closed-form and generic routes.
pub const CLOSED_FORM_TOL: f64 = 1e-8;

/// `A` on the object, `B` on the apparatus, coupling constant `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCouplingSpec {
    a: CMatrix,
    b: CMatrix,
    lambda: f64,
    a_eig: HermEig,
    b_eig: HermEig,
}

impl ProductCouplingSpec {
    pub fn new(a: CMatrix, b: CMatrix, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(QmError::InvalidArgument(format!("coupling constant {lambda}")));
        }
        let a_eig = herm_eig(&a)?;
        let b_eig = herm_eig(&b)?;
        Ok(ProductCouplingSpec { a, b, lambda, a_eig, b_eig })
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim_s(&self) -> usize {
        self.a.rows()
    }

    pub fn dim_a(&self) -> usize {
        self.b.rows()
    }

    /// Spectral resolution of `A`: eigenvalues ascending with eigenvectors.
    pub fn object_eigen(&self) -> &HermEig {
        &self.a_eig
    }

    /// `e^{iλaB}`.
    pub fn apparatus_unitary(&self, a: f64) -> CMatrix {
        self.b_eig.apply_fn(|beta| C64::from_polar(1.0, self.lambda * a * beta))
    }

    /// `e^{iλA⊗B} = Σ_k |α_k⟩⟨α_k| ⊗ e^{iλa_k B}`, assembled from the eigenbases of `A` and `B`.
    pub fn unitary(&self) -> CMatrix {
        let (ds, da) = (self.dim_s(), self.dim_a());
        let mut u = CMatrix::zeros(ds * da, ds * da);
        for k in 0..ds {
            let v = self.a_eig.vector(k);
            let w = self.apparatus_unitary(self.a_eig.eigenvalues[k]);
            for s in 0..ds {
                for t in 0..ds {
                    let p = v[s] * v[t].conj();
                    if p == ZERO {
                        continue;
                    }
                    for x in 0..da {
                        for y in 0..da {
                            u[(s * da + x, t * da + y)] += p * w[(x, y)];
                        }
                    }
                }
            }
        }
        u
    }

    /// `T_A^{λa} = e^{iλaB}·T_A·e^{−iλaB}`.
    pub fn shifted_apparatus_state(&self, a: f64, t_a: &State) -> Result<State> {
        if t_a.dim() != self.dim_a() {
            return Err(QmError::DimensionMismatch(format!("apparatus state of dimension {}", t_a.dim())));
        }
        State::from_numeric(&self.apparatus_unitary(a).conjugate(t_a.matrix()), 1e-8)
    }
}

/// A scheme whose coupling was built from a [`ProductCouplingSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProductScheme {
    pub spec: ProductCouplingSpec,
    pub scheme: MeasurementScheme,
}

pub fn build_product_scheme(spec: ProductCouplingSpec, pointer: Povm, t_a: State) -> Result<ProductScheme> {
    if pointer.dim() != spec.dim_a() {
        return Err(QmError::DimensionMismatch(format!(
            "pointer acts on {}, apparatus generator on {}",
            pointer.dim(),
            spec.dim_a()
        )));
    }
    let coupling = Coupling::unitary(spec.unitary())?;
    let scheme = MeasurementScheme::new(spec.dim_s(), pointer, None, t_a, coupling)?;
    Ok(ProductScheme { spec, scheme })
}

impl ProductScheme {
    pub fn shifted_apparatus_state(&self, a: f64) -> Result<State> {
        self.spec.shifted_apparatus_state(a, self.scheme.apparatus_state())
    }

    /// `‖R_A(U(T⊗T_A)U†) − Σ_k tr[T·P_k]·T_A^{λa_k}‖_F`.
    pub fn apparatus_decomposition_residual(&self, t: &State) -> Result<f64> {
        let joint = crate::scheme::joint_final_state(&self.scheme, t)?;
        let ra = partial_trace(joint.matrix(), self.spec.dim_s(), self.spec.dim_a(), Subsystem::Apparatus)?;
        let eig = self.spec.object_eigen();
        let mut mix = CMatrix::zeros(self.spec.dim_a(), self.spec.dim_a());
        for k in 0..eig.dim() {
            let v = eig.vector(k);
            let w = t.matrix().expectation(&v).re;
            let shifted = self.shifted_apparatus_state(eig.eigenvalues[k])?;
            mix = &mix + &shifted.matrix().scale_real(w);
        }
        Ok(mix.distance(&ra))
    }

    /// `E_i = Σ_k tr[T_A^{λa_k}·Z_i]·P_k`, checked against the generic reconstruction.
    pub fn measured_povm_closed_form(&self, r: &ReadingScale) -> Result<Povm> {
        let cells = self.scheme.cell_effects(r)?;
        let eig = self.spec.object_eigen();
        let shifted: Vec<State> =
            eig.eigenvalues.iter().map(|&a| self.shifted_apparatus_state(a)).collect::<Result<_>>()?;
        let mats: Vec<CMatrix> = cells
            .iter()
            .map(|z| {
                let weights: Vec<C64> = shifted.iter().map(|ta| C64::new(ta.matrix().trace_product(z).re, 0.0)).collect();
                spectral_sum(eig, &weights)
            })
            .collect();
        let generic = measured_povm(&self.scheme, r)?;
        let residual =
            mats.iter().zip(generic.effects()).map(|(m, e)| m.distance(&e.matrix)).fold(0.0, f64::max);
        if residual > CLOSED_FORM_TOL {
            return Err(QmError::RouteMismatch { what: "closed-form measured observable".into(), residual });
        }
        let effects = mats.into_iter().zip(r.values()).map(|(m, v)| Effect::new(m, v)).collect::<Result<_>>()?;
        Povm::new(effects)
    }

    /// Operators `L^i_{kn} = Σ_a ⟨k|Z_i^{1/2}·φ_n^{λa}⟩·P_a` with weights `t_n`, where
    /// `φ_n` are the eigenvectors of `T_A` and `|k⟩` runs over a basis of the apparatus.
    pub fn component_kraus(&self, r: &ReadingScale, i: usize) -> Result<Vec<(f64, CMatrix)>> {
        let cells = self.scheme.cell_effects(r)?;
        let z = cells.get(i).ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))?;
        let root = psd_sqrt(z)?;
        let eig = self.spec.object_eigen();
        let da = self.spec.dim_a();
        let mut out = Vec::new();
        for (t_n, phi) in spectral_pieces(self.scheme.apparatus_state().matrix()) {
            let moved: Vec<Vec<C64>> = eig
                .eigenvalues
                .iter()
                .map(|&a| root.apply(&self.spec.apparatus_unitary(a).apply(&phi)))
                .collect();
            for k in 0..da {
                let coeffs: Vec<C64> = moved.iter().map(|m| m[k]).collect();
                if coeffs.iter().all(|c| c.norm() < 1e-15) {
                    continue;
                }
                out.push((t_n, spectral_sum(eig, &coeffs)));
            }
        }
        Ok(out)
    }

    /// `T_S(i,T)` through the operator-sum form, checked against the partial-trace route.
    pub fn kraus_component_state(&self, t: &State, r: &ReadingScale, i: usize) -> Result<State> {
        let d = self.spec.dim_s();
        let mut acc = CMatrix::zeros(d, d);
        for (w, l) in self.component_kraus(r, i)? {
            acc = &acc + &l.conjugate(t.matrix()).scale_real(w);
        }
        let p = acc.trace().re;
        if p <= crate::scheme::ZERO_WEIGHT {
            return Err(QmError::InvalidArgument(format!("cell {i} has zero probability")));
        }
        let state = State::from_numeric(&acc, 1e-6)?;
        let reference = component_states(&self.scheme, t, r, i)?;
        let residual = reference.object_matrix(d).distance(state.matrix());
        if residual > CLOSED_FORM_TOL {
            return Err(QmError::RouteMismatch { what: "operator-sum component state".into(), residual });
        }
        Ok(state)
    }
}

/// `Σ_k c_k·|v_k⟩⟨v_k|` over the eigenvectors of `eig`.
pub(crate) fn spectral_sum(eig: &HermEig, coeffs: &[C64]) -> CMatrix {
    let n = eig.dim();
    let mut out = CMatrix::zeros(n, n);
    for (k, &ck) in coeffs.iter().enumerate() {
        if ck == ZERO {
            continue;
        }
        let v = eig.vector(k);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += ck * v[r] * v[c].conj();
            }
        }
    }
    out
}
