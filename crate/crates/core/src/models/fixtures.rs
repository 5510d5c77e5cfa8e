//! Desk-scale fixtures: CNOT, controlled rotation, cyclic shift.

use std::f64::consts::PI;

use crate::error::{QmError, Result};
use crate::linop::{basis_vector, c, CMatrix, C64, I, ZERO};
use crate::quantum::{Effect, Povm, State};
use crate::scheme::{Cell, ReadingScale};

use super::product::{build_product_scheme, ProductCouplingSpec, ProductScheme};

fn p1() -> CMatrix {
    CMatrix::diag_real(&[0.0, 1.0])
}

/// CNOT as `e^{iπ P₁⊗P[−]}`: control on the object, target pointer in `|0⟩`.
pub fn build_cnot() -> Result<ProductScheme> {
    let minus = CMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]])?;
    let spec = ProductCouplingSpec::new(p1(), minus, PI)?;
    build_product_scheme(spec, Povm::computational(2), State::pure(&basis_vector(2, 0))?)
}

/// `U = P₀⊗I + P₁⊗R_y(θ)` with `R_y(θ)|0⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`, written as
/// `e^{iθ P₁⊗(−σ_y/2)}`.
pub fn build_controlled_rotation(theta: f64) -> Result<ProductScheme> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(QmError::InvalidArgument(format!("rotation angle {theta} outside (0, π]")));
    }
    let half_sy = CMatrix::from_rows(&[vec![ZERO, I * 0.5], vec![-I * 0.5, ZERO]])?;
    let spec = ProductCouplingSpec::new(p1(), half_sy, theta)?;
    build_product_scheme(spec, Povm::computational(2), State::pure(&basis_vector(2, 0))?)
}

/// The cyclic shift/discrete-momentum model on an `n`-dimensional pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftModel {
    pub product: ProductScheme,
    /// One cell per eigenvalue `a_k` (pointer position `a_k mod n`), plus a cell collecting
    /// any unreached positions.
    pub scale: ReadingScale,
    pub eigenvalues: Vec<i64>,
}

/// Discrete momentum `B` with `e^{iaB} = S^a` for integer `a`, `S|j⟩ = |j+1 mod n⟩`.
pub fn discrete_momentum(n: usize) -> CMatrix {
    let mut b = CMatrix::zeros(n, n);
    let norm = 1.0 / n as f64;
    for m in 0..n {
        let beta = -2.0 * PI * m as f64 / n as f64;
        let f: Vec<C64> =
            (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * (m * j) as f64 / n as f64)).collect();
        for r in 0..n {
            for col in 0..n {
                b[(r, col)] += f[r] * f[col].conj() * (beta * norm);
            }
        }
    }
    b.hermitian_part()
}

/// `A = diag(eigenvalues)` on the object, pointer in `|0⟩`, coupling `Σ_k P_k⊗S^{a_k}`.
pub fn build_shift_model(n: usize, eigenvalues: &[i64]) -> Result<ShiftModel> {
    if eigenvalues.is_empty() || n < eigenvalues.len() {
        return Err(QmError::InvalidArgument(format!(
            "shift model needs 1 ≤ {} eigenvalues ≤ n = {n}",
            eigenvalues.len()
        )));
    }
    let positions: Vec<usize> = eigenvalues.iter().map(|&a| a.rem_euclid(n as i64) as usize).collect();
    for (i, p) in positions.iter().enumerate() {
        if let Some(j) = positions[..i].iter().position(|q| q == p) {
            return Err(QmError::InvalidArgument(format!(
                "eigenvalues {} and {} alias modulo {n}",
                eigenvalues[j], eigenvalues[i]
            )));
        }
    }
    let a = CMatrix::diag_real(&eigenvalues.iter().map(|&x| x as f64).collect::<Vec<_>>());
    let spec = ProductCouplingSpec::new(a, discrete_momentum(n), 1.0)?;
    let pointer = Povm::new(
        (0..n).map(|j| Effect::new(CMatrix::basis_projector(n, j), j as f64)).collect::<Result<_>>()?,
    )?;
    let product = build_product_scheme(spec, pointer, State::pure(&basis_vector(n, 0))?)?;
    // the object eigenbasis is sorted ascending; cells follow the order of `eigenvalues`
    let mut cells: Vec<Cell> =
        eigenvalues.iter().zip(&positions).map(|(&a, &p)| Cell { pointers: vec![p], value: a as f64 }).collect();
    let unreached: Vec<usize> = (0..n).filter(|j| !positions.contains(j)).collect();
    if !unreached.is_empty() {
        let top = *eigenvalues.iter().max().expect("nonempty") as f64;
        cells.push(Cell { pointers: unreached, value: top + 1.0 });
    }
    let scale = ReadingScale::new(cells)?;
    Ok(ShiftModel { product, scale, eigenvalues: eigenvalues.to_vec() })
}

/// `(|0⟩+|1⟩)/√2`.
pub fn plus_state() -> State {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    State::pure(&[c(h, 0.0), c(h, 0.0)]).expect("unit vector")
}

/// Uniform superposition over the computational basis of `C^n`.
pub fn uniform_state(n: usize) -> State {
    let a = 1.0 / (n as f64).sqrt();
    State::pure(&vec![c(a, 0.0); n]).expect("unit vector")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::kron;
    use crate::scheme::measured_povm;

    #[test]
    fn cnot_unitary_is_cnot() {
        let s = build_cnot().unwrap();
        let u = s.scheme.coupling().as_unitary().unwrap().clone();
        let cnot = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(u.distance(&cnot) < 1e-14);
    }

    #[test]
    fn controlled_rotation_povm() {
        let s = build_controlled_rotation(PI / 2.0).unwrap();
        let r = ReadingScale::finest(&s.scheme);
        let e = s.measured_povm_closed_form(&r).unwrap();
        assert!(e.effect(1).matrix.distance(&CMatrix::diag_real(&[0.0, 0.5])) < 1e-12);
        assert!(build_controlled_rotation(0.0).is_err());
        assert!(build_controlled_rotation(4.0).is_err());
    }

    #[test]
    fn shift_coupling_is_controlled_shift() {
        let m = build_shift_model(3, &[0, 1, 2]).unwrap();
        let u = m.product.scheme.coupling().as_unitary().unwrap();
        let shift = CMatrix::from_fn(3, 3, |r, col| if r == (col + 1) % 3 { c(1.0, 0.0) } else { ZERO });
        let mut expect = CMatrix::zeros(9, 9);
        let mut power = CMatrix::identity(3);
        for k in 0..3 {
            expect = &expect + &kron(&CMatrix::basis_projector(3, k), &power);
            power = shift.matmul(&power);
        }
        assert!(u.distance(&expect) < 1e-12);
        let e = measured_povm(&m.product.scheme, &m.scale).unwrap();
        for k in 0..3 {
            assert!(e.effect(k).matrix.distance(&CMatrix::basis_projector(3, k)) < 1e-10);
        }
    }

    #[test]
    fn shift_aliasing_and_unreached() {
        assert!(build_shift_model(3, &[0, 3]).is_err());
        let m = build_shift_model(4, &[0, 2]).unwrap();
        assert_eq!(m.scale.len(), 3);
        assert_eq!(m.scale.cells()[2].pointers, vec![1, 3]);
        let e = measured_povm(&m.product.scheme, &m.scale).unwrap();
        assert!(e.effect(2).matrix.is_zero(1e-10));
    }

    #[test]
    fn shifted_pointer_moves_by_one() {
        let m = build_shift_model(3, &[0, 1, 2]).unwrap();
        let moved = m.product.shifted_apparatus_state(1.0).unwrap();
        assert!(moved.matrix().distance(&CMatrix::basis_projector(3, 1)) < 1e-12);
        let r = m.product.apparatus_decomposition_residual(&uniform_state(3)).unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn kraus_route_matches() {
        let s = build_controlled_rotation(PI / 2.0).unwrap();
        let r = ReadingScale::finest(&s.scheme);
        for i in 0..2 {
            s.kraus_component_state(&plus_state(), &r, i).unwrap();
        }
        let m = build_shift_model(3, &[0, 1, 2]).unwrap();
        let t = uniform_state(3);
        let ts = m.product.kraus_component_state(&t, &m.scale, 1).unwrap();
        assert!(ts.matrix().distance(&CMatrix::basis_projector(3, 1)) < 1e-10);
    }
}
