use torsion_core::complex::{CochainComplex, TorsionMode};
use torsion_core::cone::{
    cmm_additivity, cmm_deformation_probe, composition_rule, cone, cone_laplacian_check, cone_torsion, isometry_absorption,
    milnor_identity, morphism_log_vol_sum, Morphism, ShortExactSequence,
};
use torsion_core::linalg::c;
use torsion_core::random;
use torsion_core::vna::{AlgebraBackend, EquivariantMap, HilbertModule};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
}

fn point() -> CochainComplex {
    let w = HilbertModule::new(&AlgebraBackend::scalar(), 1);
    CochainComplex::new(vec![w], vec![], None).unwrap()
}

fn scalar_map(cx: &CochainComplex, x: f64) -> Morphism {
    Morphism::new(cx.clone(), cx.clone(), vec![EquivariantMap::scalar(cx.module(0), c(x))]).unwrap()
}

fn two_term(x: f64) -> CochainComplex {
    let w = HilbertModule::new(&AlgebraBackend::scalar(), 1);
    CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::scalar(&w, c(x))], None).unwrap()
}

#[test]
fn cone_of_a_degree_zero_scaling() {
    let f = scalar_map(&point(), 3.0);
    let cx = cone(&f).unwrap();
    let nonzero: Vec<usize> = cx.ranks().into_iter().filter(|r| *r > 0).collect();
    assert_eq!(nonzero, vec![1, 1]);
    let d = cx.differentials().iter().find(|d| d.max_abs() > 0.0).unwrap();
    close(d.expand()[(0, 0)].norm(), 3.0, 1e-15);
    close(cone_torsion(&f).unwrap(), 3f64.ln(), 1e-14);
}

#[test]
fn identity_cones_vanish() {
    close(cone_torsion(&Morphism::identity(&two_term(5.0)).unwrap()).unwrap(), 0.0, 1e-14);
    let mut rng = random::rng(5);
    let cx = random::acyclic_complex(&mut rng, &AlgebraBackend::cyclic(3).unwrap(), 4, 3).unwrap().complex;
    assert!(cone_torsion(&Morphism::identity(&cx).unwrap()).unwrap().abs() < 1e-10);
}

#[test]
fn scalar_multiples_of_the_identity() {
    for x in [0.5, 2.0, 7.0] {
        close(cone_torsion(&scalar_map(&point(), x)).unwrap(), x.ln(), 1e-14);
    }
}

#[test]
fn log_volume_sum_of_a_diagonal_morphism() {
    let w = HilbertModule::new(&AlgebraBackend::scalar(), 1);
    let cx = CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::zero(&w, &w)], None).unwrap();
    let f = Morphism::new(cx.clone(), cx, vec![EquivariantMap::scalar(&w, c(2.0)), EquivariantMap::scalar(&w, c(3.0))]).unwrap();
    close(morphism_log_vol_sum(&f).unwrap(), 2f64.ln() - 3f64.ln(), 1e-14);
    let mut rng = random::rng(8);
    let cx = random::acyclic_complex(&mut rng, &AlgebraBackend::cyclic(2).unwrap(), 3, 3).unwrap().complex;
    let u = random::isometry(&mut rng, &cx).unwrap();
    assert!(morphism_log_vol_sum(&u).unwrap().abs() < 1e-12);
}

#[test]
fn zero_morphism_cone_is_the_sum_of_its_ends() {
    let (a, b) = (two_term(2.0), two_term(5.0));
    let maps = a.modules().iter().map(|m| EquivariantMap::zero(m, m)).collect();
    let f = Morphism::new(a, b, maps).unwrap();
    close(cone_torsion(&f).unwrap(), 2f64.ln() - 5f64.ln(), 1e-13);
    for i in 0..=f.len() {
        assert!(cone_laplacian_check(&f, i).unwrap() < 1e-12);
    }
}

#[test]
fn cone_laplacian_on_random_morphisms() {
    let mut rng = random::rng(21);
    let cx = random::acyclic_complex(&mut rng, &AlgebraBackend::cyclic(4).unwrap(), 4, 3).unwrap().complex;
    let f = random::isomorphism(&mut rng, &cx).unwrap();
    for i in 0..=f.len() {
        assert!(cone_laplacian_check(&f, i).unwrap() < 1e-10);
    }
    let id = Morphism::identity(&cx).unwrap();
    for i in 0..=id.len() {
        assert!(cone_laplacian_check(&id, i).unwrap() < 1e-10);
    }
}

#[test]
fn composition_of_scalars_and_of_the_identity() {
    let (l, r) = composition_rule(&scalar_map(&point(), 2.0), &scalar_map(&point(), 5.0)).unwrap();
    close(l, 10f64.ln(), 1e-14);
    close(r, 10f64.ln(), 1e-14);
    let mut rng = random::rng(13);
    let cx = random::acyclic_complex(&mut rng, &AlgebraBackend::scalar(), 4, 3).unwrap().complex;
    let f = random::isomorphism(&mut rng, &cx).unwrap();
    let (l, _) = composition_rule(&Morphism::identity(&cx).unwrap(), &f).unwrap();
    close(l, cone_torsion(&f).unwrap(), 1e-10);
}

#[test]
fn isometry_absorption_with_the_identity() {
    let mut rng = random::rng(14);
    let cx = random::acyclic_complex(&mut rng, &AlgebraBackend::cyclic(2).unwrap(), 3, 3).unwrap().complex;
    let f = random::isomorphism(&mut rng, &cx).unwrap();
    let (a, b) = isometry_absorption(&f, &Morphism::identity(&f.target).unwrap()).unwrap();
    close(a, b, 1e-12);
    let not_iso = scalar_map(&point(), 2.0);
    assert!(isometry_absorption(&scalar_map(&point(), 3.0), &not_iso).is_err());
}

#[test]
fn split_sequence_identities() {
    let (a, b) = (two_term(2.0), two_term(3.0));
    let ses = ShortExactSequence::new(a, b, vec![], None).unwrap();
    let r = milnor_identity(&ses).unwrap();
    close(r.middle, 6f64.ln(), 1e-13);
    close(r.rhs(), 6f64.ln(), 1e-13);
    let (direct, sum) = cmm_additivity(&ses).unwrap();
    close(direct, sum, 1e-13);
    for p in cmm_deformation_probe(&ses, &[0.25, 0.5, 0.75]).unwrap() {
        assert!(p.derivative.abs() < 1e-12 && p.epsilon < 1e-14 && p.a41 < 1e-14);
    }
}

#[test]
fn random_upper_triangular_sequences() {
    let mut rng = random::rng(99);
    for b in [AlgebraBackend::scalar(), AlgebraBackend::cyclic(3).unwrap()] {
        let ses = random::acyclic_ses(&mut rng, &b, 4, 3).unwrap();
        assert!(milnor_identity(&ses).unwrap().residual() < 1e-8);
        let (d, s) = cmm_additivity(&ses).unwrap();
        assert!((d - s).abs() < 1e-8);
        for p in cmm_deformation_probe(&ses, &[0.25, 0.5, 0.75]).unwrap() {
            assert!(p.derivative.abs() < 1e-6, "{p:?}");
            assert!(p.epsilon < 1e-10 && p.a41 < 1e-10, "{p:?}");
        }
        let mid = ses.middle().unwrap();
        assert!(mid.torsion(TorsionMode::Strict).is_ok());
    }
}

#[test]
fn rejects_maps_that_do_not_commute_with_differentials() {
    let (a, b) = (two_term(2.0), two_term(2.0));
    let w = a.module(0).clone();
    let maps = vec![EquivariantMap::scalar(&w, c(1.0)), EquivariantMap::scalar(&w, c(2.0))];
    assert!(Morphism::new(a, b, maps).is_err());
}
