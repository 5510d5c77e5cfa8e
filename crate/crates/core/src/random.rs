//! Seeded random matrices for property tests and the theorem suite.
//!
//! Unitaries come from Gram–Schmidt orthonormalisation of complex Gaussian
//! matrices; mixed states from normalised Wishart matrices `GG†`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linop::{vdot, vnorm, CMatrix, C64, ZERO};
use crate::quantum::State;

pub type QmRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> QmRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n).map(|_| gaussian_c64(rng)).collect();
        let norm = vnorm(&v);
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Orthonormalises the columns of `m` in place order; returns `None` on rank deficiency.
pub fn gram_schmidt(m: &CMatrix) -> Option<CMatrix> {
    let mut out = CMatrix::zeros(m.rows(), m.cols());
    let mut done: Vec<Vec<C64>> = Vec::with_capacity(m.cols());
    for col in 0..m.cols() {
        let mut v = m.column(col);
        // two passes keep the result orthonormal to round-off
        for _ in 0..2 {
            for q in &done {
                let proj = vdot(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let n = vnorm(&v);
        if n < 1e-10 {
            return None;
        }
        let v: Vec<C64> = v.into_iter().map(|z| z / n).collect();
        out.set_column(col, &v);
        done.push(v);
    }
    Some(out)
}

pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    loop {
        if let Some(u) = gram_schmidt(&gaussian_matrix(rng, n, n)) {
            return u;
        }
    }
}

/// Mixed state `GG†/tr(GG†)` with `G` an `n × rank` Gaussian matrix.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> State {
    let g = gaussian_matrix(rng, n, rank.max(1));
    let w = g.matmul(&g.adjoint());
    State::normalized(&w).expect("Wishart matrix is a valid unnormalised state")
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> State {
    State::pure(&random_vector(rng, n)).expect("normalised vector")
}

/// Splits `0..n` into `parts` nonempty contiguous groups with random sizes.
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize, parts: usize) -> Vec<Vec<usize>> {
    assert!(parts >= 1 && parts <= n, "random_partition: need 1 ≤ parts ≤ n");
    let mut cuts: Vec<usize> = (1..n).collect();
    // choose parts−1 distinct cut points
    for i in 0..cuts.len() {
        let j = rng.random_range(i..cuts.len());
        cuts.swap(i, j);
    }
    let mut chosen: Vec<usize> = cuts[..parts - 1].to_vec();
    chosen.sort_unstable();
    let mut groups = Vec::with_capacity(parts);
    let mut start = 0;
    for &cut in chosen.iter().chain(std::iter::once(&n)) {
        groups.push((start..cut).collect());
        start = cut;
    }
    groups
}

/// A zero-padded copy of `v` in a larger space.
pub fn embed(v: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n];
    out[..v.len()].copy_from_slice(v);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = rng_from_seed(7);
        for n in [1, 2, 5, 9] {
            let u = random_unitary(&mut rng, n);
            assert!(u.adjoint().matmul(&u).distance(&CMatrix::identity(n)) < 1e-12);
        }
    }

    #[test]
    fn states_are_valid_and_seeded() {
        let a = random_state(&mut rng_from_seed(3), 4, 2);
        let b = random_state(&mut rng_from_seed(3), 4, 2);
        assert_eq!(a, b);
        assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_covers() {
        let mut rng = rng_from_seed(11);
        for _ in 0..50 {
            let g = random_partition(&mut rng, 7, 3);
            assert_eq!(g.len(), 3);
            assert!(g.iter().all(|c| !c.is_empty()));
            let flat: Vec<usize> = g.concat();
            assert_eq!(flat, (0..7).collect::<Vec<_>>());
        }
    }
}
