use std::f64::consts::{FRAC_PI_2, PI};

use qmlab::correlate::{observable_correlation, state_correlation, value_correlation};
use qmlab::linop::CMatrix;
use qmlab::models::{build_cnot, build_controlled_rotation, build_shift_model, plus_state, uniform_state};
use qmlab::scheme::{measured_povm, ReadingScale, SchemeRun};
use qmlab::transformer::{check_first_kind, check_repeatable, default_test_states, StateTransformer};

#[test]
fn cnot_is_an_ideal_measurement() {
    let s = build_cnot().unwrap().scheme;
    let r = ReadingScale::finest(&s);
    let e = measured_povm(&s, &r).unwrap();
    assert!(e.effect(0).matrix.distance(&CMatrix::diag_real(&[1.0, 0.0])) < 1e-12);
    assert!(e.effect(1).matrix.distance(&CMatrix::diag_real(&[0.0, 1.0])) < 1e-12);
    let t = plus_state();
    let run = SchemeRun::new(&s, &t, &r).unwrap();
    assert!(run.pointer_value_definiteness(1e-10).holds());
    assert!(run.pointer_mixture(1e-10).holds());
    let st = StateTransformer::new(&s, &r).unwrap();
    let states = default_test_states(2, 1);
    assert!(check_first_kind(&st, &states, 1e-10).unwrap().verdict.holds());
    assert!(check_repeatable(&st, &states, 1e-10).unwrap().verdict.holds());
    let rho = observable_correlation(&s, &t, &r, 1e-10).unwrap().stats.rho.unwrap();
    assert!((rho - 1.0).abs() < 1e-10);
    for i in 0..2 {
        assert!((value_correlation(&s, &t, &r, i).unwrap().rho.unwrap() - 1.0).abs() < 1e-10);
        assert!((state_correlation(&s, &t, &r, i).unwrap().rho.unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn controlled_rotation_is_unsharp_and_not_repeatable() {
    let s = build_controlled_rotation(FRAC_PI_2).unwrap().scheme;
    let r = ReadingScale::finest(&s);
    let e = measured_povm(&s, &r).unwrap();
    assert!(e.effect(0).matrix.distance(&CMatrix::diag_real(&[1.0, 0.5])) < 1e-12);
    assert!(e.effect(1).matrix.distance(&CMatrix::diag_real(&[0.0, 0.5])) < 1e-12);
    let st = StateTransformer::new(&s, &r).unwrap();
    let states = default_test_states(2, 1);
    assert!(check_first_kind(&st, &states, 1e-10).unwrap().verdict.holds());
    let rep = check_repeatable(&st, &states, 1e-10).unwrap();
    assert!(rep.verdict.fails());
    assert!((rep.cells[1].min_repeat_probability - 0.5).abs() < 1e-10);
    let t = plus_state();
    let rho = observable_correlation(&s, &t, &r, 1e-10).unwrap().stats.rho.unwrap();
    assert!((rho - 1.0 / 3.0).abs() < 1e-9);
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    assert!((value_correlation(&s, &t, &r, 1).unwrap().rho.unwrap() - inv_sqrt3).abs() < 1e-9);
    assert!((state_correlation(&s, &t, &r, 1).unwrap().rho.unwrap() - inv_sqrt3).abs() < 1e-9);
}

#[test]
fn full_rotation_matches_cnot_up_to_phase() {
    let s = build_controlled_rotation(PI).unwrap().scheme;
    let r = ReadingScale::finest(&s);
    let e = measured_povm(&s, &r).unwrap();
    assert!(e.effect(1).matrix.distance(&CMatrix::diag_real(&[0.0, 1.0])) < 1e-12);
}

#[test]
fn shift_model_measures_a_sharply() {
    let m = build_shift_model(3, &[0, 1, 2]).unwrap();
    let s = &m.product.scheme;
    let e = measured_povm(s, &m.scale).unwrap();
    for k in 0..3 {
        assert!(e.effect(k).matrix.distance(&CMatrix::basis_projector(3, k)) < 1e-10);
    }
    // Lüders: I_k(T) = P_k T P_k
    let st = StateTransformer::new(s, &m.scale).unwrap();
    for t in default_test_states(3, 2) {
        for k in 0..3 {
            let p = CMatrix::basis_projector(3, k);
            let lueders = p.matmul(t.matrix()).matmul(&p);
            assert!(st.apply(k, &t).unwrap().distance(&lueders) < 1e-10);
        }
    }
    let t = uniform_state(3);
    let rho = observable_correlation(s, &t, &m.scale, 1e-10).unwrap().stats.rho.unwrap();
    assert!((rho - 1.0).abs() < 1e-10);
    for k in 0..3 {
        assert!((value_correlation(s, &t, &m.scale, k).unwrap().rho.unwrap() - 1.0).abs() < 1e-10);
        assert!((state_correlation(s, &t, &m.scale, k).unwrap().rho.unwrap() - 1.0).abs() < 1e-10);
    }
}
