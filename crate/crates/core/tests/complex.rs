use std::f64::consts::PI;

use torsion_core::complex::{CochainComplex, TorsionMode};
use torsion_core::linalg::c;
use torsion_core::random;
use torsion_core::vna::{AlgebraBackend, AlgebraElement, Backend, EquivariantMap, HilbertModule};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
}

fn scalar() -> Backend {
    AlgebraBackend::scalar()
}

fn two_term(x: f64) -> CochainComplex {
    let w = HilbertModule::new(&scalar(), 1);
    CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::scalar(&w, c(x))], None).unwrap()
}

fn circle(m: usize) -> CochainComplex {
    let b = AlgebraBackend::cyclic(m).unwrap();
    let w = HilbertModule::new(&b, 1);
    let a = AlgebraElement::from_terms(&b, &[("e", c(1.0)), ("g", c(-1.0))]).unwrap();
    let d = EquivariantMap::from_entries(&w, &w, &[vec![a]]).unwrap();
    CochainComplex::new(vec![w.clone(), w], vec![d], None).unwrap()
}

/// `(1/m) sum log |1 - w^k|^2` over roots with `|1 - w^k|^2 <= 1`, `k != 0`.
fn small_root_sum(m: usize) -> f64 {
    (1..m)
        .map(|k| (2.0 * (PI * k as f64 / m as f64).sin()).powi(2))
        .filter(|v| *v <= 1.0)
        .map(|v| v.ln() / m as f64)
        .sum()
}

#[test]
fn laplacians_of_the_two_term_complex() {
    let cx = two_term(2.0);
    for i in 0..2 {
        let l = cx.laplacian(i).unwrap();
        close(l.expand()[(0, 0)].re, 4.0, 1e-14);
    }
    let w = HilbertModule::new(&scalar(), 3);
    let z = CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::zero(&w, &w)], None).unwrap();
    assert!(z.laplacian(0).unwrap().max_abs() == 0.0);
}

#[test]
fn circle_laplacians_have_the_root_spectrum() {
    let m = 6;
    let cx = circle(m);
    for i in 0..2 {
        let spec = cx.laplacian_spectrum(i);
        let mut got = Vec::new();
        for &(v, mult) in spec.pairs() {
            got.extend(std::iter::repeat(v).take((mult * m as f64).round() as usize));
        }
        let mut want: Vec<f64> = (0..m).map(|k| (2.0 * (PI * k as f64 / m as f64).sin()).powi(2)).collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            close(*g, *w, 1e-12);
        }
    }
}

#[test]
fn hodge_of_a_projection() {
    let w2 = HilbertModule::new(&scalar(), 2);
    let w1 = HilbertModule::new(&scalar(), 1);
    let p = EquivariantMap::from_expanded(&w2, &w1, torsion_core::linalg::CMat::from_row_slice(1, 2, &[c(1.0), c(0.0)])).unwrap();
    let cx = CochainComplex::new(vec![w2, w1], vec![p], None).unwrap();
    let h = cx.hodge().unwrap();
    let e = |m: &EquivariantMap, i: usize, j: usize| m.expand()[(i, j)].re;
    close(e(&h.harmonic[0], 1, 1), 1.0, 1e-12);
    close(e(&h.harmonic[0], 0, 0), 0.0, 1e-12);
    close(e(&h.minus[0], 0, 0), 1.0, 1e-12);
    close(e(&h.plus[1], 0, 0), 1.0, 1e-12);
    assert!(h.block_residual < 1e-12);
}

#[test]
fn hodge_projectors_partition_the_identity() {
    let mut rng = random::rng(17);
    for b in [scalar(), AlgebraBackend::cyclic(3).unwrap(), AlgebraBackend::symmetric3()] {
        let cx = random::complex_with_cohomology(&mut rng, &b, &[1, 0, 2, 1], 2).unwrap().complex;
        let h = cx.hodge().unwrap();
        for i in 0..cx.len() {
            let id = EquivariantMap::identity(cx.module(i));
            let sum = h.harmonic[i].add(&h.plus[i]).unwrap().add(&h.minus[i]).unwrap();
            assert!(sum.distance(&id) < 1e-10);
            for (a, bb) in [(&h.harmonic[i], &h.plus[i]), (&h.plus[i], &h.minus[i]), (&h.harmonic[i], &h.minus[i])] {
                assert!(a.compose(bb).unwrap().max_abs() < 1e-10);
            }
        }
        assert!(h.block_residual < 1e-10);
        let betti = cx.betti();
        for (got, want) in betti.iter().zip([1.0, 0.0, 2.0, 1.0]) {
            close(*got, want, 1e-10);
        }
    }
}

#[test]
fn cohomology_dimensions() {
    let w = HilbertModule::new(&AlgebraBackend::cyclic(4).unwrap(), 2);
    let id = CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::identity(&w)], None).unwrap();
    assert_eq!(id.betti(), vec![0.0, 0.0]);
    let z = CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::zero(&w, &w)], None).unwrap();
    assert_eq!(z.betti(), vec![2.0, 2.0]);
    for m in [2, 3, 5, 7] {
        for b in circle(m).betti() {
            close(b, 1.0 / m as f64, 1e-12);
        }
    }
}

#[test]
fn torsion_examples() {
    close(two_term(2.0).torsion(TorsionMode::Strict).unwrap(), 2f64.ln(), 1e-14);
    close(two_term(1.0).torsion(TorsionMode::Strict).unwrap(), 0.0, 1e-14);
    for m in 2..=10 {
        let cx = circle(m);
        assert!(cx.torsion(TorsionMode::Strict).is_err());
        close(cx.torsion(TorsionMode::Lenient).unwrap(), (m as f64).ln() / m as f64, 1e-12);
    }
}

#[test]
fn determinant_class_values() {
    close(two_term(2.0).det_class_value(), 0.0, 1e-15);
    close(two_term((-1.5f64).exp()).det_class_value(), -6.0, 1e-12);
    let w = HilbertModule::new(&scalar(), 1);
    let z = HilbertModule::new(&scalar(), 0);
    let single = CochainComplex::new(
        vec![w.clone(), z.clone()],
        vec![EquivariantMap::zero(&w, &z)],
        None,
    )
    .unwrap();
    close(single.det_class_value(), 0.0, 1e-15);
    for m in [3, 6, 7, 12] {
        // both Laplacians carry the same spectrum
        close(circle(m).det_class_value(), 2.0 * small_root_sum(m), 1e-12);
    }
}

#[test]
fn suspension_and_dual() {
    let cx = two_term(3.0);
    close(cx.suspension().unwrap().torsion(TorsionMode::Strict).unwrap(), -3f64.ln(), 1e-13);
    close(cx.dual().unwrap().torsion(TorsionMode::Strict).unwrap(), 3f64.ln(), 1e-13);
    let w = HilbertModule::new(&scalar(), 0);
    let z = CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::zero(&w, &w)], None).unwrap();
    let s = z.suspension().unwrap();
    assert!(s.ranks().iter().all(|r| *r == 0));
}

#[test]
fn acyclic_deformation_of_a_small_block() {
    let cx = two_term(0.1);
    let d = cx.acyclic_deformation(1.0).unwrap();
    close(d.differential(0).expand()[(0, 0)].re, 1.1, 1e-14);
    assert!(cx.acyclic_deformation(-1.0).is_err());
    let mut rng = random::rng(3);
    let cx = random::complex_with_cohomology(&mut rng, &AlgebraBackend::cyclic(2).unwrap(), &[0, 1, 1, 0], 2).unwrap().complex;
    let d = cx.acyclic_deformation(0.3).unwrap();
    for i in 0..d.len() - 2 {
        assert!(d.differential(i + 1).compose(d.differential(i)).unwrap().max_abs() < 1e-10);
    }
}

#[test]
fn unit_shift_sums() {
    let w = HilbertModule::new(&scalar(), 2);
    let z = CochainComplex::new(vec![w.clone(), w.clone()], vec![EquivariantMap::zero(&w, &w)], None).unwrap();
    let (a, b) = z.unit_shift_identity(-0.5).unwrap();
    close(a, 0.0, 1e-14);
    close(b, 0.0, 1e-14);
    for m in [3, 5] {
        let (a, b) = circle(m).unit_shift_identity(-0.7).unwrap();
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
    }
    assert!(two_term(2.0).unit_shift_identity(0.5).is_err());
}

#[test]
fn rejects_non_complexes() {
    let w = HilbertModule::new(&scalar(), 1);
    let one = EquivariantMap::identity(&w);
    assert!(CochainComplex::new(vec![w.clone(), w.clone(), w.clone()], vec![one.clone(), one], None).is_err());
}

#[test]
fn rounding_noise_in_one_differential_counts_as_zero() {
    use torsion_core::linalg::{CMat, MatrixComplex};
    // 2, 0, noise, 3 between five lines: only degree 2 carries cohomology
    let one = |x: f64| CMat::from_element(1, 1, c(x));
    let mc = MatrixComplex::new(vec![1, 1, 1, 1, 1], vec![one(2.0), one(0.0), one(1e-17), one(3.0)], 1.0).unwrap();
    assert_eq!(mc.betti(), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
    let r = mc.torsion_report();
    assert!(r.spread() < 1e-12, "{r:?}");
    close(mc.torsion(false).unwrap(), 2f64.ln() - 3f64.ln(), 1e-12);
}
