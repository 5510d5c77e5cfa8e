use proptest::prelude::*;

use qmlab::correlate::{classify_dependence, corr_stats, reduced_state_correlation, BivariateDist, Dependence};
use qmlab::linop::CMatrix;
use qmlab::quantum::Povm;
use qmlab::random::{random_partition, random_pure_state, random_state, random_unitary, rng_from_seed};
use qmlab::scheme::{measured_povm, measured_povm_heisenberg, Coupling, MeasurementScheme, ReadingScale, SchemeRun};

fn random_scheme(seed: u64, d: usize, da: usize, pure: bool) -> MeasurementScheme {
    let mut rng = rng_from_seed(seed);
    let ta = random_state(&mut rng, da, if pure { 1 } else { da });
    let u = random_unitary(&mut rng, d * da);
    MeasurementScheme::new(d, Povm::computational(da), None, ta, Coupling::unitary(u).unwrap()).unwrap()
}

fn table_from(weights: &[f64], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    (0..rows).map(|i| (0..cols).map(|j| weights[i * cols + j] / total).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn correlation_is_bounded(w in prop::collection::vec(0.0f64..1.0, 9), shift in -3.0f64..3.0) {
        prop_assume!(w.iter().sum::<f64>() > 1e-3);
        let d = BivariateDist::new(vec![0.0, 1.0, 2.5], vec![shift, shift + 1.0, shift + 4.0], table_from(&w, 3, 3)).unwrap();
        if let Some(rho) = corr_stats(&d).rho {
            prop_assert!(rho.abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn product_tables_are_independent(a in prop::collection::vec(0.01f64..1.0, 3), b in prop::collection::vec(0.01f64..1.0, 2)) {
        let na: f64 = a.iter().sum();
        let nb: f64 = b.iter().sum();
        let mu1: Vec<f64> = a.iter().map(|x| x / na).collect();
        let mu2: Vec<f64> = b.iter().map(|x| x / nb).collect();
        let d = BivariateDist::product(vec![-1.0, 0.0, 2.0], &mu1, vec![3.0, 5.0], &mu2).unwrap();
        prop_assert_eq!(classify_dependence(&d, 1e-10), Dependence::Independent);
        prop_assert!(corr_stats(&d).rho.unwrap().abs() < 1e-10);
    }

    #[test]
    fn affine_links_give_unit_correlation(p in prop::collection::vec(0.05f64..1.0, 3), slope in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], b in -2.0f64..2.0) {
        let n: f64 = p.iter().sum();
        let cols = vec![0.0, 1.0, 3.0];
        let rows: Vec<f64> = cols.iter().map(|y| slope * y + b).collect();
        let table = (0..3).map(|i| (0..3).map(|j| if i == j { p[j] / n } else { 0.0 }).collect()).collect();
        let d = BivariateDist::new(rows, cols, table).unwrap();
        let rho = corr_stats(&d).rho.unwrap();
        prop_assert!((rho.abs() - 1.0).abs() < 1e-10 && rho.signum() == slope.signum());
        let link = classify_dependence(&d, 1e-10).link().unwrap();
        prop_assert!((link.slope - slope).abs() < 1e-8 && (link.intercept - b).abs() < 1e-8);
    }

    #[test]
    fn measured_povm_routes_agree(seed in any::<u64>(), d in 2usize..4, da in 2usize..4) {
        let s = random_scheme(seed, d, da, false);
        let mut rng = rng_from_seed(seed ^ 0x5eed);
        let groups = random_partition(&mut rng, da, 2);
        let r = ReadingScale::finest(&s).merge(&groups[0]).unwrap();
        let e = measured_povm(&s, &r).unwrap();
        let h = measured_povm_heisenberg(&s, &r).unwrap();
        let total: CMatrix = e.effects().iter().map(|x| x.matrix.clone()).sum();
        prop_assert!(total.distance(&CMatrix::identity(d)) < 1e-10);
        for (a, b) in e.effects().iter().zip(&h) {
            prop_assert!(a.matrix.distance(b) < 1e-8);
        }
    }

    #[test]
    fn object_additivity_always_holds(seed in any::<u64>()) {
        let s = random_scheme(seed, 2, 3, false);
        let mut rng = rng_from_seed(seed.wrapping_add(1));
        let t = random_state(&mut rng, 2, 2);
        let run = SchemeRun::new(&s, &t, &ReadingScale::finest(&s)).unwrap();
        prop_assert!(run.object_additivity(1e-10).holds());
        let w: f64 = run.weights().iter().sum();
        prop_assert!((w - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pure_final_states_are_strongly_state_correlated(seed in any::<u64>()) {
        let s = random_scheme(seed, 2, 3, true);
        let mut rng = rng_from_seed(seed.wrapping_add(7));
        let t = random_pure_state(&mut rng, 2);
        let rc = reduced_state_correlation(&s, &t).unwrap();
        prop_assert!((rc.stats.rho.unwrap() - 1.0).abs() < 1e-8);
        prop_assert!(rc.spectral_mismatch < 1e-10);
    }
}

#[test]
fn uncorrelated_but_dependent_table() {
    // π₁ ∈ {−1, 0, 1}, π₂ ∈ {0, 1}; π₂ = 1 exactly when π₁ = 0
    let d = BivariateDist::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0], vec![vec![0.25, 0.0], vec![0.0, 0.5], vec![0.25, 0.0]])
        .unwrap();
    assert!(corr_stats(&d).rho.unwrap().abs() < 1e-12);
    assert_ne!(classify_dependence(&d, 1e-10), Dependence::Independent);
}
