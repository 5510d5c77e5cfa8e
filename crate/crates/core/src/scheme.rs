//! Measurement schemes `⟨H_A, Z, T_A, V, f⟩`, the observable they measure,
//! reading scales, conditioned/component states and the pointer conditions.
//!
//! Everything here is dense and generic; structured models with large apparatus
//! spaces live in [`crate::models`].

use crate::error::{QmError, Result};
use crate::linop::{
    apparatus_expectation, basis_vector, herm_eig, kron, kron_vec, partial_trace, psd_sqrt,
    sandwich_apparatus, CMatrix, Subsystem, C64, I, ONE, ZERO,
};
use crate::quantum::{Effect, Povm, State};
use crate::verdict::Verdict;

/// Tolerance on `U†U = I` and `Σ K†K = I`.
pub const COUPLING_TOL: f64 = 1e-9;
/// Cells with weight at or below this get the zero sentinel.
pub const ZERO_WEIGHT: f64 = 1e-12;
/// Largest tolerated disagreement between the two measured-observable routes.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;
/// Relative negative-eigenvalue floor accepted when normalising derived states.
pub(crate) const DERIVED_STATE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Unitary,
    Channel,
}

/// The coupling `V` on `T(H_S ⊗ H_A)` in Kraus form; a unitary has a single Kraus operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    kind: CouplingKind,
    kraus: Vec<CMatrix>,
}

impl Coupling {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(QmError::InvalidCoupling(format!("unitary must be square, got {}x{}", u.rows(), u.cols())));
        }
        let defect = u.adjoint().matmul(&u).distance(&CMatrix::identity(u.rows()));
        if defect > COUPLING_TOL {
            return Err(QmError::InvalidCoupling(format!("U†U − I has norm {defect:.3e}")));
        }
        Ok(Coupling { kind: CouplingKind::Unitary, kraus: vec![u] })
    }

    pub fn channel(kraus: Vec<CMatrix>) -> Result<Self> {
        let n = kraus.first().map(|k| k.rows()).ok_or_else(|| QmError::InvalidCoupling("empty Kraus list".into()))?;
        let mut sum = CMatrix::zeros(n, n);
        for k in &kraus {
            if k.rows() != n || k.cols() != n {
                return Err(QmError::InvalidCoupling("Kraus operators must share one square shape".into()));
            }
            sum = &sum + &k.adjoint().matmul(k);
        }
        let defect = sum.distance(&CMatrix::identity(n));
        if defect > COUPLING_TOL {
            return Err(QmError::InvalidCoupling(format!("Σ K†K − I has norm {defect:.3e}")));
        }
        Ok(Coupling { kind: CouplingKind::Channel, kraus })
    }

    pub fn identity(n: usize) -> Self {
        Coupling { kind: CouplingKind::Unitary, kraus: vec![CMatrix::identity(n)] }
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn as_unitary(&self) -> Option<&CMatrix> {
        match self.kind {
            CouplingKind::Unitary => Some(&self.kraus[0]),
            CouplingKind::Channel => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    /// `V(ρ) = Σ K ρ K†`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.kraus.iter().map(|k| k.conjugate(rho)).sum()
    }
}

/// A measurement scheme: apparatus pointer `Z`, pointer function `f`, apparatus state `T_A`, coupling `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementScheme {
    dim_s: usize,
    dim_a: usize,
    pointer: Povm,
    pointer_map: Vec<usize>,
    apparatus_state: State,
    coupling: Coupling,
}

impl MeasurementScheme {
    /// `pointer_map = None` means the identity relabelling.
    pub fn new(
        dim_s: usize,
        pointer: Povm,
        pointer_map: Option<Vec<usize>>,
        apparatus_state: State,
        coupling: Coupling,
    ) -> Result<Self> {
        let dim_a = pointer.dim();
        if dim_s == 0 || dim_a == 0 {
            return Err(QmError::DimensionMismatch("object and apparatus dimensions must be positive".into()));
        }
        if apparatus_state.dim() != dim_a {
            return Err(QmError::DimensionMismatch(format!(
                "apparatus state has dimension {}, pointer acts on {dim_a}",
                apparatus_state.dim()
            )));
        }
        if coupling.dim() != dim_s * dim_a {
            return Err(QmError::DimensionMismatch(format!(
                "coupling acts on dimension {}, expected {dim_s}·{dim_a}",
                coupling.dim()
            )));
        }
        let pointer_map = pointer_map.unwrap_or_else(|| (0..pointer.len()).collect());
        if pointer_map.len() != pointer.len() {
            return Err(QmError::InvalidArgument(format!(
                "pointer map has {} entries for {} pointer effects",
                pointer_map.len(),
                pointer.len()
            )));
        }
        Ok(MeasurementScheme { dim_s, dim_a, pointer, pointer_map, apparatus_state, coupling })
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn joint_dim(&self) -> usize {
        self.dim_s * self.dim_a
    }

    pub fn pointer(&self) -> &Povm {
        &self.pointer
    }

    pub fn pointer_map(&self) -> &[usize] {
        &self.pointer_map
    }

    pub fn apparatus_state(&self) -> &State {
        &self.apparatus_state
    }

    pub fn coupling(&self) -> &Coupling {
        &self.coupling
    }

    fn check_object(&self, t: &State) -> Result<()> {
        if t.dim() != self.dim_s {
            return Err(QmError::DimensionMismatch(format!(
                "object state has dimension {}, scheme expects {}",
                t.dim(),
                self.dim_s
            )));
        }
        Ok(())
    }

    /// Spectral pieces `(weight, vector)` of `T_A` with non-negligible weight.
    fn apparatus_pieces(&self) -> Vec<(f64, Vec<C64>)> {
        spectral_pieces(self.apparatus_state.matrix())
    }

    /// The vectors `√w·K(ψ⊗φ_n)` whose outer products sum to `V(P[ψ]⊗T_A)`.
    fn joint_vectors(&self, psi: &[C64], pieces: &[(f64, Vec<C64>)]) -> Vec<Vec<C64>> {
        let mut out = Vec::with_capacity(pieces.len() * self.coupling.kraus.len());
        for (w, phi) in pieces {
            let v = kron_vec(psi, phi);
            let sw = w.sqrt();
            for k in &self.coupling.kraus {
                out.push(k.apply(&v).into_iter().map(|z| z * sw).collect());
            }
        }
        out
    }

    /// Pointer effect of a reading-scale cell, `Z(f⁻¹(X_i))`.
    pub fn cell_effects(&self, r: &ReadingScale) -> Result<Vec<CMatrix>> {
        r.validate_for(self)?;
        Ok(r.cells().iter().map(|c| self.pointer.merged(&c.pointers)).collect())
    }

    /// Outcome probabilities of every cell for the vector state `P[ψ]`, read off the pointer.
    fn pointer_statistics(&self, psi: &[C64], cells: &[CMatrix], pieces: &[(f64, Vec<C64>)]) -> Vec<f64> {
        let vecs = self.joint_vectors(psi, pieces);
        cells
            .iter()
            .map(|z| vecs.iter().map(|w| apparatus_expectation(w, z, self.dim_s, self.dim_a).re).sum())
            .collect()
    }
}

/// Spectral decomposition of a density matrix restricted to weights above round-off.
pub(crate) fn spectral_pieces(m: &CMatrix) -> Vec<(f64, Vec<C64>)> {
    let eig = herm_eig(m).expect("validated states are Hermitian");
    (0..eig.dim())
        .rev()
        .filter(|&k| eig.eigenvalues[k] > 1e-15)
        .map(|k| (eig.eigenvalues[k], eig.vector(k)))
        .collect()
}

/// One cell `X_i` of a reading scale, given by its pointer-effect indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub pointers: Vec<usize>,
    pub value: f64,
}

/// A finite partition of the pointer outcomes with a real value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadingScale {
    cells: Vec<Cell>,
}

impl ReadingScale {
    /// Cells must be nonempty, disjoint, with pairwise distinct finite values.
    /// Exhaustiveness is checked against a scheme in [`ReadingScale::validate_for`].
    pub fn new(cells: Vec<Cell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(QmError::InvalidScale("no cells".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, c) in cells.iter().enumerate() {
            if c.pointers.is_empty() {
                return Err(QmError::InvalidScale(format!("cell {i} is empty")));
            }
            if !c.value.is_finite() {
                return Err(QmError::InvalidScale(format!("cell {i} has non-finite value")));
            }
            for &p in &c.pointers {
                if !seen.insert(p) {
                    return Err(QmError::InvalidScale(format!("pointer index {p} appears in two cells")));
                }
            }
            if cells[..i].iter().any(|d| d.value == c.value) {
                return Err(QmError::InvalidScale(format!("value {} used twice", c.value)));
            }
        }
        Ok(ReadingScale { cells })
    }

    /// Finest scale compatible with the pointer function: one cell per image point of `f`,
    /// valued by the label of its lowest pointer index.
    pub fn finest(s: &MeasurementScheme) -> Self {
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for (p, &img) in s.pointer_map.iter().enumerate() {
            match groups.iter_mut().find(|(g, _)| *g == img) {
                Some((_, v)) => v.push(p),
                None => groups.push((img, vec![p])),
            }
        }
        groups.sort_by_key(|(img, _)| *img);
        let labels = s.pointer.labels();
        let cells = groups.into_iter().map(|(_, pointers)| Cell { value: labels[pointers[0]], pointers }).collect();
        ReadingScale { cells }
    }

    /// Scale over measured outcomes: `values[k]` is the value of `f⁻¹(k)`.
    pub fn from_pointer_map(s: &MeasurementScheme, values: &[f64]) -> Result<Self> {
        let mut cells: Vec<Cell> = values.iter().map(|&value| Cell { pointers: Vec::new(), value }).collect();
        for (p, &img) in s.pointer_map.iter().enumerate() {
            let cell = cells
                .get_mut(img)
                .ok_or_else(|| QmError::InvalidScale(format!("pointer map target {img} has no value")))?;
            cell.pointers.push(p);
        }
        Self::new(cells)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.value).collect()
    }

    /// Merges the listed cells into one, valued by the first of them.
    pub fn merge(&self, which: &[usize]) -> Result<Self> {
        let first = *which.first().ok_or_else(|| QmError::InvalidScale("nothing to merge".into()))?;
        let mut merged = Cell { pointers: Vec::new(), value: self.cells[first].value };
        let mut cells = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if which.contains(&i) {
                merged.pointers.extend_from_slice(&c.pointers);
            } else if i < first {
                cells.push(c.clone());
            }
        }
        merged.pointers.sort_unstable();
        cells.push(merged);
        cells.extend(self.cells.iter().enumerate().filter(|(i, _)| *i > first && !which.contains(i)).map(|(_, c)| c.clone()));
        Self::new(cells)
    }

    /// Exhaustiveness over the scheme's pointer indices.
    pub fn validate_for(&self, s: &MeasurementScheme) -> Result<()> {
        let n = s.pointer.len();
        let mut hit = vec![false; n];
        for c in &self.cells {
            for &p in &c.pointers {
                if p >= n {
                    return Err(QmError::InvalidScale(format!("pointer index {p} out of range (pointer has {n} effects)")));
                }
                hit[p] = true;
            }
        }
        if let Some(p) = hit.iter().position(|h| !h) {
            return Err(QmError::InvalidScale(format!("pointer index {p} not covered")));
        }
        Ok(())
    }
}

/// Normalised reduced states of cell `i`; `None` encodes the zero sentinel of a null cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentStates {
    pub cell: usize,
    pub weight: f64,
    pub object: Option<State>,
    pub apparatus: Option<State>,
}

impl ComponentStates {
    pub fn is_null(&self) -> bool {
        self.object.is_none()
    }

    /// `T_S(i,T)`, or the zero operator for a null cell.
    pub fn object_matrix(&self, dim_s: usize) -> CMatrix {
        self.object.as_ref().map(|s| s.matrix().clone()).unwrap_or_else(|| CMatrix::zeros(dim_s, dim_s))
    }

    /// `T_A(i,T)`, or the zero operator for a null cell.
    pub fn apparatus_matrix(&self, dim_a: usize) -> CMatrix {
        self.apparatus.as_ref().map(|s| s.matrix().clone()).unwrap_or_else(|| CMatrix::zeros(dim_a, dim_a))
    }
}

/// The final joint state of a scheme on one input, with everything derived from it.
///
/// Building a run does the expensive work once; the check methods only read.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub dim_s: usize,
    pub dim_a: usize,
    pub input: State,
    /// `V(T⊗T_A)`.
    pub joint: CMatrix,
    /// `R_S(V(T⊗T_A))`.
    pub reduced_object: CMatrix,
    /// `R_A(V(T⊗T_A))`.
    pub reduced_apparatus: CMatrix,
    /// `Z_i = Z(f⁻¹(X_i))` per cell.
    pub pointer_cells: Vec<CMatrix>,
    pub pointer_roots: Vec<CMatrix>,
    /// `V_i(T)` per cell.
    pub conditioned: Vec<CMatrix>,
    pub components: Vec<ComponentStates>,
}

impl SchemeRun {
    pub fn new(s: &MeasurementScheme, t: &State, r: &ReadingScale) -> Result<Self> {
        let joint = joint_final_state(s, t)?.into_matrix();
        let pointer_cells = s.cell_effects(r)?;
        let pointer_roots = pointer_cells.iter().map(psd_sqrt).collect::<Result<Vec<_>>>()?;
        let (ds, da) = (s.dim_s, s.dim_a);
        let reduced_object = partial_trace(&joint, ds, da, Subsystem::Object)?;
        let reduced_apparatus = partial_trace(&joint, ds, da, Subsystem::Apparatus)?;
        let conditioned: Vec<CMatrix> =
            pointer_roots.iter().map(|root| sandwich_apparatus(&joint, root, root, ds, da)).collect();
        let components = conditioned
            .iter()
            .enumerate()
            .map(|(i, vi)| component_from_conditioned(i, vi, ds, da))
            .collect::<Result<Vec<_>>>()?;
        Ok(SchemeRun {
            dim_s: ds,
            dim_a: da,
            input: t.clone(),
            joint,
            reduced_object,
            reduced_apparatus,
            pointer_cells,
            pointer_roots,
            conditioned,
            components,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// `Z_i^{1/2}·R_A(V(T⊗T_A))·Z_i^{1/2}/p_i`, the apparatus component state read off the
    /// reduced apparatus state (agrees with the conditioned route for sharp pointers).
    pub fn apparatus_component_from_reduced(&self, i: usize) -> CMatrix {
        let c = &self.components[i];
        if c.is_null() {
            return CMatrix::zeros(self.dim_a, self.dim_a);
        }
        let root = &self.pointer_roots[i];
        root.matmul(&self.reduced_apparatus).matmul(root).scale_real(1.0 / c.weight)
    }

    /// Residual of `R_S(V(T⊗T_A)) = Σ p_i T_S(i,T)`.
    pub fn object_additivity(&self, tol: f64) -> ResidualReport {
        let sum: CMatrix = self
            .conditioned
            .iter()
            .map(|v| partial_trace(v, self.dim_s, self.dim_a, Subsystem::Object).expect("shape checked"))
            .sum();
        ResidualReport::new(sum.distance(&self.reduced_object), tol)
    }

    /// Pointer value-definiteness, checked on every cell with weight above `tol`.
    pub fn pointer_value_definiteness(&self, tol: f64) -> PvdReport {
        let cells: Vec<PvdCell> = self
            .components
            .iter()
            .filter(|c| c.weight > tol && !c.is_null())
            .map(|c| {
                let ta = c.apparatus_matrix(self.dim_a);
                let z = &self.pointer_cells[c.cell];
                let prob_defect = (1.0 - ta.trace_product(z).re).abs();
                let eigen_defect = z.matmul(&ta).distance(&ta);
                PvdCell {
                    cell: c.cell,
                    weight: c.weight,
                    prob_defect,
                    eigen_defect,
                    verdict: Verdict::from_residual(prob_defect.max(eigen_defect), tol),
                }
            })
            .collect();
        let residual = cells.iter().map(|c| c.prob_defect.max(c.eigen_defect)).fold(0.0, f64::max);
        PvdReport { verdict: Verdict::from_residual(residual, tol), residual, cells }
    }

    /// Residual of `R_A(V(T⊗T_A)) = Σ p_i T_A(i,T)`.
    pub fn pointer_mixture(&self, tol: f64) -> ResidualReport {
        let sum: CMatrix = self
            .conditioned
            .iter()
            .map(|v| partial_trace(v, self.dim_s, self.dim_a, Subsystem::Apparatus).expect("shape checked"))
            .sum();
        ResidualReport::new(sum.distance(&self.reduced_apparatus), tol)
    }

    /// Table `tr[T_S(i,T)·T_S(j,T)]`; the residual is its largest off-diagonal entry.
    pub fn component_orthogonality(&self, tol: f64) -> OrthogonalityReport {
        let objects: Vec<CMatrix> = self.components.iter().map(|c| c.object_matrix(self.dim_s)).collect();
        let n = objects.len();
        let mut table = vec![vec![0.0; n]; n];
        let mut residual: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                table[i][j] = objects[i].trace_product(&objects[j]).re;
                if i != j {
                    residual = residual.max(table[i][j].abs());
                }
            }
        }
        OrthogonalityReport { verdict: Verdict::from_residual(residual, tol), residual, table }
    }
}

fn component_from_conditioned(cell: usize, vi: &CMatrix, ds: usize, da: usize) -> Result<ComponentStates> {
    let weight = vi.trace().re.clamp(0.0, 1.0);
    if weight <= ZERO_WEIGHT {
        return Ok(ComponentStates { cell, weight, object: None, apparatus: None });
    }
    let obj = partial_trace(vi, ds, da, Subsystem::Object)?;
    let app = partial_trace(vi, ds, da, Subsystem::Apparatus)?;
    Ok(ComponentStates {
        cell,
        weight,
        object: Some(State::from_numeric(&obj, DERIVED_STATE_FLOOR)?),
        apparatus: Some(State::from_numeric(&app, DERIVED_STATE_FLOOR)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub residual: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    pub fn new(residual: f64, tol: f64) -> Self {
        ResidualReport { residual, verdict: Verdict::from_residual(residual, tol) }
    }

    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvdCell {
    pub cell: usize,
    pub weight: f64,
    /// `|1 − tr[T_A(i,T)·Z_i]|`.
    pub prob_defect: f64,
    /// `‖Z_i·T_A(i,T) − T_A(i,T)‖_F`.
    pub eigen_defect: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PvdReport {
    pub cells: Vec<PvdCell>,
    pub residual: f64,
    pub verdict: Verdict,
}

impl PvdReport {
    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityReport {
    pub table: Vec<Vec<f64>>,
    pub residual: f64,
    pub verdict: Verdict,
}

impl OrthogonalityReport {
    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }
}

/// `V(T⊗T_A)`.
pub fn joint_final_state(s: &MeasurementScheme, t: &State) -> Result<State> {
    s.check_object(t)?;
    let pieces = s.apparatus_pieces();
    let n = s.joint_dim();
    let mut joint = CMatrix::zeros(n, n);
    for (wt, psi) in spectral_pieces(t.matrix()) {
        for w in s.joint_vectors(&psi, &pieces) {
            let outer = CMatrix::outer(&w).scale_real(wt);
            joint = &joint + &outer;
        }
    }
    State::from_numeric(&joint, DERIVED_STATE_FLOOR)
}

/// The `d²` pure states `|k⟩`, `(|k⟩+|l⟩)/√2`, `(|k⟩+i|l⟩)/√2` (`k < l`) whose projectors span
/// all operators on `C^d`.
pub fn hermitian_basis_states(d: usize) -> Vec<Vec<C64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<Vec<C64>> = (0..d).map(|k| basis_vector(d, k)).collect();
    for k in 0..d {
        for l in k + 1..d {
            let mut plus = vec![ZERO; d];
            plus[k] = ONE * h;
            plus[l] = ONE * h;
            let mut plus_i = vec![ZERO; d];
            plus_i[k] = ONE * h;
            plus_i[l] = I * h;
            out.push(plus);
            out.push(plus_i);
        }
    }
    out
}

/// Fixed generic vectors used to validate a reconstruction against direct pointer statistics.
fn probe_vectors(d: usize) -> Vec<Vec<C64>> {
    let a: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0 + k as f64, 0.7 * k as f64)).collect();
    let b: Vec<C64> = (0..d).map(|k| C64::new((d - k) as f64, (k * k) as f64 * 0.3 - 1.0)).collect();
    [a, b]
        .into_iter()
        .map(|v| {
            let n = crate::linop::vnorm(&v);
            v.into_iter().map(|z| z / n).collect()
        })
        .collect()
}

/// The measured observable `E_i`, defined by `tr[T·E_i] = tr[V(T⊗T_A)·I⊗Z_i]`.
///
/// Reconstructed from the pointer statistics of the `d²` Hermitian-basis states, then validated
/// on further states; labels are the cell values.
pub fn measured_povm(s: &MeasurementScheme, r: &ReadingScale) -> Result<Povm> {
    let cells = s.cell_effects(r)?;
    let pieces = s.apparatus_pieces();
    let d = s.dim_s;
    let stats: Vec<Vec<f64>> =
        hermitian_basis_states(d).iter().map(|psi| s.pointer_statistics(psi, &cells, &pieces)).collect();
    let mut mats = vec![CMatrix::zeros(d, d); cells.len()];
    for (i, m) in mats.iter_mut().enumerate() {
        for k in 0..d {
            m[(k, k)] = C64::new(stats[k][i], 0.0);
        }
        let mut idx = d;
        for k in 0..d {
            for l in k + 1..d {
                let mean = 0.5 * (stats[k][i] + stats[l][i]);
                let re = stats[idx][i] - mean;
                let im = mean - stats[idx + 1][i];
                m[(k, l)] = C64::new(re, im);
                m[(l, k)] = C64::new(re, -im);
                idx += 2;
            }
        }
    }
    let mut residual: f64 = 0.0;
    for chi in probe_vectors(d) {
        let direct = s.pointer_statistics(&chi, &cells, &pieces);
        for (m, p) in mats.iter().zip(direct) {
            residual = residual.max((m.expectation(&chi).re - p).abs());
        }
    }
    if residual > RECONSTRUCTION_TOL {
        return Err(QmError::Reconstruction(residual));
    }
    let effects = mats
        .into_iter()
        .zip(r.values())
        .map(|(m, v)| Effect::new(m, v))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(effects)
}

/// The measured observable through the Heisenberg picture,
/// `E_i = Σ_{K,n} t_n (I⊗⟨φ_n|) K†(I⊗Z_i)K (I⊗|φ_n⟩)`; a dense second route.
pub fn measured_povm_heisenberg(s: &MeasurementScheme, r: &ReadingScale) -> Result<Vec<CMatrix>> {
    let cells = s.cell_effects(r)?;
    let (ds, da) = (s.dim_s, s.dim_a);
    let pieces = s.apparatus_pieces();
    let mut out = Vec::with_capacity(cells.len());
    for z in &cells {
        let lifted = kron(&CMatrix::identity(ds), z);
        let mut e = CMatrix::zeros(ds, ds);
        for k in s.coupling.kraus() {
            let h = k.adjoint().matmul(&lifted).matmul(k);
            for (w, phi) in &pieces {
                // (I⊗⟨φ|) h (I⊗|φ⟩)
                for a in 0..ds {
                    for b in 0..ds {
                        let mut acc = ZERO;
                        for x in 0..da {
                            for y in 0..da {
                                acc += phi[x].conj() * h[(a * da + x, b * da + y)] * phi[y];
                            }
                        }
                        e[(a, b)] += acc * *w;
                    }
                }
            }
        }
        out.push(e);
    }
    Ok(out)
}

/// `(I⊗Z_i^{1/2})·V(T⊗T_A)·(I⊗Z_i^{1/2})`.
pub fn conditioned_joint(s: &MeasurementScheme, t: &State, r: &ReadingScale, i: usize) -> Result<CMatrix> {
    let run = SchemeRun::new(s, t, r)?;
    run.conditioned.get(i).cloned().ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))
}

pub fn component_states(s: &MeasurementScheme, t: &State, r: &ReadingScale, i: usize) -> Result<ComponentStates> {
    let run = SchemeRun::new(s, t, r)?;
    run.components.get(i).cloned().ok_or_else(|| QmError::InvalidArgument(format!("no cell {i}")))
}

pub fn check_object_additivity(s: &MeasurementScheme, t: &State, r: &ReadingScale, tol: f64) -> Result<ResidualReport> {
    Ok(SchemeRun::new(s, t, r)?.object_additivity(tol))
}

pub fn check_pointer_value_definiteness(s: &MeasurementScheme, t: &State, r: &ReadingScale, tol: f64) -> Result<PvdReport> {
    Ok(SchemeRun::new(s, t, r)?.pointer_value_definiteness(tol))
}

pub fn check_pointer_mixture(s: &MeasurementScheme, t: &State, r: &ReadingScale, tol: f64) -> Result<ResidualReport> {
    Ok(SchemeRun::new(s, t, r)?.pointer_mixture(tol))
}

pub fn check_component_orthogonality(
    s: &MeasurementScheme,
    t: &State,
    r: &ReadingScale,
    tol: f64,
) -> Result<OrthogonalityReport> {
    Ok(SchemeRun::new(s, t, r)?.component_orthogonality(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::c;

    fn cnot() -> MeasurementScheme {
        let u = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
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

    fn plus() -> State {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        State::pure(&[c(h, 0.0), c(h, 0.0)]).unwrap()
    }

    #[test]
    fn basis_states_span() {
        assert_eq!(hermitian_basis_states(3).len(), 9);
    }

    #[test]
    fn cnot_measures_sigma_z() {
        let s = cnot();
        let r = ReadingScale::finest(&s);
        let e = measured_povm(&s, &r).unwrap();
        assert!(e.effect(0).matrix.distance(&CMatrix::diag_real(&[1.0, 0.0])) < 1e-12);
        assert!(e.effect(1).matrix.distance(&CMatrix::diag_real(&[0.0, 1.0])) < 1e-12);
        let heis = measured_povm_heisenberg(&s, &r).unwrap();
        assert!(heis[1].distance(&e.effect(1).matrix) < 1e-12);
    }

    #[test]
    fn cnot_on_plus() {
        let s = cnot();
        let r = ReadingScale::finest(&s);
        let run = SchemeRun::new(&s, &plus(), &r).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CMatrix::outer(&[c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        assert!(run.joint.distance(&bell) < 1e-12);
        assert!(run.conditioned[1].distance(&CMatrix::diag_real(&[0.0, 0.0, 0.0, 0.5])) < 1e-12);
        assert!((run.components[0].weight - 0.5).abs() < 1e-12);
        assert!(run.pointer_mixture(1e-10).holds());
        assert!(run.pointer_value_definiteness(1e-10).holds());
        assert!(run.component_orthogonality(1e-10).holds());
        assert!(run.object_additivity(1e-12).holds());
    }

    #[test]
    fn identity_coupling_gives_trivial_observable() {
        let ta = State::new(CMatrix::diag_real(&[0.3, 0.7])).unwrap();
        let s = MeasurementScheme::new(3, Povm::computational(2), None, ta, Coupling::identity(6)).unwrap();
        let e = measured_povm(&s, &ReadingScale::finest(&s)).unwrap();
        assert!(e.effect(0).matrix.distance(&CMatrix::identity(3).scale_real(0.3)) < 1e-12);
    }

    #[test]
    fn zero_weight_cell_is_sentinel() {
        let s = cnot();
        let r = ReadingScale::finest(&s);
        let run = SchemeRun::new(&s, &State::pure(&basis_vector(2, 0)).unwrap(), &r).unwrap();
        assert!(run.components[1].is_null());
        assert!(run.conditioned[1].is_zero(1e-14));
    }

    #[test]
    fn scale_validation() {
        assert!(ReadingScale::new(vec![
            Cell { pointers: vec![0], value: 1.0 },
            Cell { pointers: vec![0], value: 2.0 }
        ])
        .is_err());
        assert!(ReadingScale::new(vec![
            Cell { pointers: vec![0], value: 1.0 },
            Cell { pointers: vec![1], value: 1.0 }
        ])
        .is_err());
        let s = cnot();
        let partial = ReadingScale::new(vec![Cell { pointers: vec![0], value: 0.0 }]).unwrap();
        assert!(measured_povm(&s, &partial).is_err());
    }

    #[test]
    fn merge_cells() {
        let r = ReadingScale::new(vec![
            Cell { pointers: vec![0], value: 0.0 },
            Cell { pointers: vec![1], value: 1.0 },
            Cell { pointers: vec![2], value: 2.0 },
        ])
        .unwrap();
        let m = r.merge(&[0, 2]).unwrap();
        assert_eq!(m.cells()[0].pointers, vec![0, 2]);
        assert_eq!(m.cells()[1].pointers, vec![1]);
    }

    #[test]
    fn rejects_bad_couplings() {
        assert!(Coupling::unitary(CMatrix::diag_real(&[1.0, 0.5])).is_err());
        assert!(Coupling::channel(vec![CMatrix::identity(2).scale_real(0.5)]).is_err());
        let k = CMatrix::identity(2).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        assert!(Coupling::channel(vec![k.clone(), k]).is_ok());
    }
}
