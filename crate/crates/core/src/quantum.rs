//! States, POVMs and the Born probability rule.

use crate::error::{QmError, Result};
use crate::linop::{herm_eig, vnorm, CMatrix, HermEig, C64, DEFAULT_TOL};

/// Density operator: Hermitian, positive, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    matrix: CMatrix,
}

impl State {
    /// Validates and wraps a density matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QmError::DimensionMismatch(format!(
                "state must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.check_hermitian(DEFAULT_TOL)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > DEFAULT_TOL || tr.im.abs() > DEFAULT_TOL {
            return Err(QmError::InvalidTrace(tr.re));
        }
        let eig = herm_eig(&matrix)?;
        if let Some(&min) = eig.eigenvalues.first() {
            if min < -DEFAULT_TOL {
                return Err(QmError::NotPositive(min));
            }
        }
        Ok(State { matrix })
    }

    /// Vector state `P[φ]`; `φ` must already be normalised.
    pub fn pure(v: &[C64]) -> Result<Self> {
        let n = vnorm(v);
        if (n - 1.0).abs() > DEFAULT_TOL {
            return Err(QmError::NotNormalized(n));
        }
        Ok(State { matrix: CMatrix::outer(v) })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        State { matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// `m / tr(m)` for a nonzero positive operator.
    pub fn normalized(m: &CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 || !tr.is_finite() {
            return Err(QmError::InvalidTrace(tr));
        }
        Self::new(m.scale_real(1.0 / tr).hermitian_part())
    }

    /// `m / tr(m)` for an operator that is positive only up to round-off.
    ///
    /// Used for derived states (partial traces of conditioned states), where the
    /// division by a small weight amplifies round-off: eigenvalues down to
    /// `-floor·λ_max` are clamped to zero before normalising.
    pub fn from_numeric(m: &CMatrix, floor: f64) -> Result<Self> {
        let h = m.hermitian_part();
        let eig = herm_eig(&h)?;
        let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return Err(QmError::InvalidTrace(h.trace().re));
        }
        let min = eig.eigenvalues[0];
        if min < -floor * top {
            return Err(QmError::NotPositive(min / top));
        }
        let clamped = if min < 0.0 { eig.apply_fn(|x| C64::new(x.max(0.0), 0.0)).hermitian_part() } else { h };
        let tr = clamped.trace().re;
        Ok(State { matrix: clamped.scale_real(1.0 / tr) })
    }

    /// Convex combination `w·a + (1−w)·b`.
    pub fn mix(a: &State, b: &State, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(QmError::InvalidArgument(format!("mixing weight {w} outside [0,1]")));
        }
        check_dims(a.dim(), b.dim())?;
        Self::new(&a.matrix.scale_real(w) + &b.matrix.scale_real(1.0 - w))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// The unit vector `φ` with `self = P[φ]`, if the state is pure within `tol`.
    pub fn as_vector(&self, tol: f64) -> Option<Vec<C64>> {
        if (self.purity() - 1.0).abs() > tol {
            return None;
        }
        let eig = herm_eig(&self.matrix).ok()?;
        Some(eig.vector(eig.dim() - 1))
    }
}

/// A positive operator bounded by the identity, tagged with the real value of its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    pub matrix: CMatrix,
    pub label: f64,
}

impl Effect {
    pub fn new(matrix: CMatrix, label: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QmError::InvalidPovm("effect must be square".into()));
        }
        if !label.is_finite() {
            return Err(QmError::InvalidPovm(format!("non-finite label {label}")));
        }
        let eig = herm_eig(&matrix)?;
        let lo = eig.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if lo < -DEFAULT_TOL || hi > 1.0 + DEFAULT_TOL {
            return Err(QmError::InvalidPovm(format!("effect spectrum [{lo:.3e}, {hi:.3e}] outside [0,1]")));
        }
        Ok(Effect { matrix, label })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Finite discrete observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let dim = match effects.first() {
            Some(e) => e.dim(),
            None => return Err(QmError::InvalidPovm("no effects".into())),
        };
        if effects.iter().any(|e| e.dim() != dim) {
            return Err(QmError::InvalidPovm("effects of different dimensions".into()));
        }
        for (i, a) in effects.iter().enumerate() {
            for b in &effects[i + 1..] {
                if a.label == b.label {
                    return Err(QmError::InvalidPovm(format!("duplicate label {}", a.label)));
                }
            }
        }
        let total: CMatrix = effects.iter().map(|e| e.matrix.clone()).sum();
        let defect = total.distance(&CMatrix::identity(dim));
        if defect > DEFAULT_TOL * (dim as f64).sqrt().max(1.0) {
            return Err(QmError::InvalidPovm(format!("effects sum to identity only within {defect:.3e}")));
        }
        Ok(Povm { dim, effects })
    }

    /// Builds a POVM from matrices, labelling outcome `i` with the value `i`.
    pub fn from_matrices(ms: Vec<CMatrix>) -> Result<Self> {
        let effects = ms.into_iter().enumerate().map(|(i, m)| Effect::new(m, i as f64)).collect::<Result<_>>()?;
        Self::new(effects)
    }

    pub fn with_labels(ms: Vec<CMatrix>, labels: &[f64]) -> Result<Self> {
        if ms.len() != labels.len() {
            return Err(QmError::InvalidPovm(format!("{} effects but {} labels", ms.len(), labels.len())));
        }
        let effects = ms.into_iter().zip(labels).map(|(m, &l)| Effect::new(m, l)).collect::<Result<_>>()?;
        Self::new(effects)
    }

    /// Projections onto the computational basis, labelled `0..n`.
    pub fn computational(n: usize) -> Self {
        let effects = (0..n)
            .map(|k| Effect { matrix: CMatrix::basis_projector(n, k), label: k as f64 })
            .collect();
        Povm { dim: n, effects }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &Effect {
        &self.effects[i]
    }

    pub fn labels(&self) -> Vec<f64> {
        self.effects.iter().map(|e| e.label).collect()
    }

    /// Sum of the effects with the given indices (coarse-graining).
    pub fn merged(&self, indices: &[usize]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &i in indices {
            m = &m + &self.effects[i].matrix;
        }
        m
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(QmError::DimensionMismatch(format!("{a} vs {b}")));
    }
    Ok(())
}

/// `tr(T·E)`, clamped to `[0,1]`.
pub fn prob(t: &State, e: &Effect) -> Result<f64> {
    check_dims(t.dim(), e.dim())?;
    Ok(t.matrix().trace_product(&e.matrix).re.clamp(0.0, 1.0))
}

/// Outcome probabilities of every effect of `e` in state `t`.
pub fn outcome_distribution(t: &State, e: &Povm) -> Result<Vec<f64>> {
    e.effects().iter().map(|eff| prob(t, eff)).collect()
}

/// Per-effect departure from a projection valued measure.
#[derive(Debug, Clone)]
pub struct SharpnessReport {
    pub sharp: bool,
    /// `‖E_i² − E_i‖_F` per effect.
    pub idempotency_defects: Vec<f64>,
    /// `max_{i≠j} ‖E_i E_j‖_F`.
    pub orthogonality_defect: f64,
}

pub fn is_sharp(e: &Povm, tol: f64) -> SharpnessReport {
    let idempotency_defects: Vec<f64> =
        e.effects().iter().map(|eff| eff.matrix.matmul(&eff.matrix).distance(&eff.matrix)).collect();
    let mut orthogonality_defect: f64 = 0.0;
    for (i, a) in e.effects().iter().enumerate() {
        for (j, b) in e.effects().iter().enumerate() {
            if i != j {
                orthogonality_defect = orthogonality_defect.max(a.matrix.matmul(&b.matrix).frobenius_norm());
            }
        }
    }
    let sharp = idempotency_defects.iter().all(|&d| d <= tol) && orthogonality_defect <= tol;
    SharpnessReport { sharp, idempotency_defects, orthogonality_defect }
}

/// A real interval with independently open or closed endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    /// `[lo, hi)`
    pub fn closed_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: false }
    }

    /// `[lo, hi]`
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    fn overlaps(&self, other: &Interval) -> bool {
        let (a, b) = if self.lo <= other.lo { (self, other) } else { (other, self) };
        if a.hi > b.lo {
            return true;
        }
        a.hi == b.lo && a.hi_closed && b.lo_closed
    }
}

/// Coarse-grained spectral measure of a Hermitian operator on a family of disjoint cells.
pub fn spectral_povm(h: &CMatrix, cells: &[Interval], labels: &[f64]) -> Result<Povm> {
    if cells.len() != labels.len() {
        return Err(QmError::InvalidPovm(format!("{} cells but {} labels", cells.len(), labels.len())));
    }
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            if a.overlaps(b) {
                return Err(QmError::InvalidPovm(format!("overlapping cells {a:?} and {b:?}")));
            }
        }
    }
    let eig = herm_eig(h)?;
    let mut groups = vec![Vec::new(); cells.len()];
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        match cells.iter().position(|cell| cell.contains(lambda)) {
            Some(c) => groups[c].push(k),
            None => return Err(QmError::InvalidPovm(format!("eigenvalue {lambda} not covered by any cell"))),
        }
    }
    povm_from_eigen_groups(&eig, &groups, labels)
}

/// POVM whose `i`-th effect is the sum of the eigenprojections listed in `groups[i]`.
pub fn povm_from_eigen_groups(eig: &HermEig, groups: &[Vec<usize>], labels: &[f64]) -> Result<Povm> {
    if groups.len() != labels.len() {
        return Err(QmError::InvalidPovm(format!("{} groups but {} labels", groups.len(), labels.len())));
    }
    let mut owner = vec![None; eig.dim()];
    for (g, members) in groups.iter().enumerate() {
        for &k in members {
            if k >= eig.dim() || owner[k].replace(g).is_some() {
                return Err(QmError::InvalidPovm(format!("eigen-index {k} missing or assigned twice")));
            }
        }
    }
    if owner.iter().any(Option::is_none) {
        return Err(QmError::InvalidPovm("eigen-indices not covered".into()));
    }
    let ms = groups.iter().map(|members| eig.projection(|k| members.contains(&k))).collect();
    Povm::with_labels(ms, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{basis_vector, re, ZERO};

    fn plus() -> Vec<C64> {
        let h = 1.0 / 2f64.sqrt();
        vec![re(h), re(h)]
    }

    fn unsharp() -> Povm {
        let p1 = CMatrix::basis_projector(2, 1);
        Povm::from_matrices(vec![&CMatrix::identity(2) - &p1.scale_real(0.5), p1.scale_real(0.5)]).unwrap()
    }

    #[test]
    fn state_validation() {
        assert!(State::new(CMatrix::diag_real(&[0.5, 0.6])).is_err());
        assert!(State::new(CMatrix::diag_real(&[1.2, -0.2])).is_err());
        assert!(State::pure(&[re(1.0), re(1.0)]).is_err());
        let t = State::pure(&plus()).unwrap();
        assert!((t.purity() - 1.0).abs() < 1e-14);
        assert!(t.as_vector(1e-10).is_some());
        assert!(State::maximally_mixed(2).as_vector(1e-10).is_none());
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::from_matrices(vec![CMatrix::diag_real(&[1.0, 0.0])]).is_err());
        let p0 = CMatrix::basis_projector(2, 0);
        let p1 = CMatrix::basis_projector(2, 1);
        assert!(Povm::with_labels(vec![p0.clone(), p1.clone()], &[1.0, 1.0]).is_err());
        assert!(Povm::from_matrices(vec![p0.scale_real(2.0), &p1 - &p0]).is_err());
        assert!(Povm::from_matrices(vec![]).is_err());
    }

    #[test]
    fn prob_examples() {
        let t0 = State::pure(&basis_vector(2, 0)).unwrap();
        let p0 = Effect::new(CMatrix::basis_projector(2, 0), 0.0).unwrap();
        assert!((prob(&t0, &p0).unwrap() - 1.0).abs() < 1e-15);
        let mixed = State::maximally_mixed(2);
        let h = 1.0 / 2f64.sqrt();
        let rank1 = Effect::new(CMatrix::outer(&[re(h), C64::new(0.0, h)]), 0.0).unwrap();
        assert!((prob(&mixed, &rank1).unwrap() - 0.5).abs() < 1e-15);
        let half_p1 = Effect::new(CMatrix::basis_projector(2, 1).scale_real(0.5), 0.0).unwrap();
        // dense oracle: ⟨+|0.5 P₁|+⟩ = 0.5 · 0.5
        assert!((prob(&State::pure(&plus()).unwrap(), &half_p1).unwrap() - 0.25).abs() < 1e-15);
        assert!(prob(&State::maximally_mixed(3), &half_p1).is_err());
    }

    #[test]
    fn outcome_distribution_examples() {
        let d = outcome_distribution(&State::pure(&plus()).unwrap(), &Povm::computational(2)).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
        let d = outcome_distribution(&State::pure(&basis_vector(2, 1)).unwrap(), &unsharp()).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sharpness() {
        assert!(is_sharp(&Povm::computational(2), 1e-12).sharp);
        let r = is_sharp(&unsharp(), 1e-12);
        assert!(!r.sharp);
        // ‖(0.5P₁)² − 0.5P₁‖ = ‖−0.25 P₁‖ = 0.25
        assert!((r.idempotency_defects[1] - 0.25).abs() < 1e-15);
        let single = Povm::from_matrices(vec![CMatrix::identity(3)]).unwrap();
        assert!(is_sharp(&single, 1e-12).sharp);
    }

    #[test]
    fn spectral_povm_examples() {
        let sz = CMatrix::diag_real(&[1.0, -1.0]);
        let cells = [Interval::closed_open(-2.0, 0.0), Interval::closed(0.0, 2.0)];
        let e = spectral_povm(&sz, &cells, &[-1.0, 1.0]).unwrap();
        assert!(e.effect(0).matrix.distance(&CMatrix::basis_projector(2, 1)) < 1e-14);
        assert!(e.effect(1).matrix.distance(&CMatrix::basis_projector(2, 0)) < 1e-14);

        let e = spectral_povm(&CMatrix::diag_real(&[1.0, 2.0, 3.0]), &[Interval::closed(0.0, 5.0)], &[0.0]).unwrap();
        assert!(e.effect(0).matrix.distance(&CMatrix::identity(3)) < 1e-14);

        assert!(spectral_povm(&sz, &[Interval::closed(0.0, 2.0)], &[0.0]).is_err());
        let overlapping = [Interval::closed(-2.0, 0.0), Interval::closed(0.0, 2.0)];
        assert!(spectral_povm(&sz, &overlapping, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn mix_is_affine_for_prob() {
        let a = State::pure(&plus()).unwrap();
        let b = State::pure(&[ZERO, re(1.0)]).unwrap();
        let e = unsharp();
        let m = State::mix(&a, &b, 0.3).unwrap();
        let lhs = prob(&m, e.effect(1)).unwrap();
        let rhs = 0.3 * prob(&a, e.effect(1)).unwrap() + 0.7 * prob(&b, e.effect(1)).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
