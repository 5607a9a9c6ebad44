use std::collections::BTreeMap;
use std::f64::consts::PI;

use torsion_core::complex::TorsionMode;
use torsion_core::cone::{cone_torsion, Morphism};
use torsion_core::linalg::c;
use torsion_core::morse::fixtures::Surface;
use torsion_core::morse::{
    build_complex, common_subdivisions, fox_derivative, hermitian_anomaly, subdivision_map, subdivision_weight,
    subdivision_weights, theta_cochain, triangulation_torsion, unimodular_normalize, v_function, HermitianStructure,
    MorseData, Representation, TransportGraph, Word,
};
use torsion_core::random;
use torsion_core::vna::{AlgebraBackend, AlgebraElement, EquivariantMap, HilbertModule};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
}

fn circle_rep(m: usize) -> Representation {
    Representation::from_labels(&AlgebraBackend::cyclic(m).unwrap(), 1, &[("g", "g")]).unwrap()
}

fn torus_rep(m: usize) -> Representation {
    Representation::from_labels(&AlgebraBackend::cyclic_square(m).unwrap(), 1, &[("a", "(1,0)"), ("b", "(0,1)")]).unwrap()
}

/// `(1/m) log prod_{k=1}^{m-1} |1 - e^{2 pi i k/m}|`, multiplied out in floating point.
fn cyclotomic(m: usize) -> f64 {
    let p: f64 = (1..m).map(|k| (2.0 * (PI * k as f64 / m as f64).sin()).abs()).product();
    p.ln() / m as f64
}

#[test]
fn words_and_fox_derivatives() {
    let w = Word::parse("a b^-1 a^2").unwrap();
    assert_eq!(w.to_string(), "a b^-1 a^2");
    assert!(Word::parse("").unwrap().is_empty());
    assert!(Word::parse("e").unwrap().is_empty());
    let r = Word::parse("a b a^-1 b^-1").unwrap();
    let da = fox_derivative(&r, "a");
    assert_eq!(da, vec![(1, Word::empty()), (-1, Word::parse("a b a^-1").unwrap())]);
    let db = fox_derivative(&r, "b");
    assert_eq!(db, vec![(1, Word::parse("a").unwrap()), (-1, Word::parse("a b a^-1 b^-1").unwrap())]);
}

#[test]
fn circle_differential_is_one_minus_the_generator() {
    let m = 5;
    let rho = circle_rep(m);
    let cx = build_complex(&Surface::circle().morse_data(), &rho, &HermitianStructure::standard()).unwrap();
    let b = rho.backend();
    let w = HilbertModule::new(b, 1);
    let a = AlgebraElement::from_terms(b, &[("e", c(1.0)), ("g", c(-1.0))]).unwrap();
    let want = EquivariantMap::from_entries(&w, &w, &[vec![a]]).unwrap();
    assert!(cx.differential(0).distance(&want) < 1e-14);
}

#[test]
fn circle_torsion_matches_the_cyclotomic_value() {
    for m in 2..=12 {
        let cx = build_complex(&Surface::circle().morse_data(), &circle_rep(m), &HermitianStructure::standard()).unwrap();
        close(cx.torsion(TorsionMode::Lenient).unwrap(), cyclotomic(m), 1e-10);
        close(cx.torsion(TorsionMode::Lenient).unwrap(), (m as f64).ln() / m as f64, 1e-10);
    }
}

#[test]
fn trivial_representation_on_sphere_like_data() {
    let m = MorseData::new(vec![vec!["p".into()], vec![], vec!["q".into()]], vec![], vec![]).unwrap();
    let rho = Representation::trivial(&AlgebraBackend::scalar(), 2, &[]).unwrap();
    let cx = build_complex(&m, &rho, &HermitianStructure::standard()).unwrap();
    assert!(cx.differentials().iter().all(|d| d.max_abs() == 0.0));
    assert_eq!(cx.betti(), vec![2.0, 0.0, 2.0]);
}

#[test]
fn torus_cohomology_matches_the_covering_torus() {
    // the regular representation of Z/m x Z/m computes the cohomology of the
    // connected m^2-fold cover, again a torus
    for m in [2, 3] {
        let cx = build_complex(&Surface::torus().morse_data(), &torus_rep(m), &HermitianStructure::standard()).unwrap();
        let n = (m * m) as f64;
        for (got, want) in cx.betti().iter().zip([1.0 / n, 2.0 / n, 1.0 / n]) {
            close(*got, want, 1e-12);
        }
        for i in 0..cx.len() - 2 {
            assert!(cx.differential(i + 1).compose(cx.differential(i)).unwrap().max_abs() < 1e-12);
        }
        close(cx.torsion(TorsionMode::Lenient).unwrap(), 0.0, 1e-10);
    }
}

#[test]
fn genus_two_over_s3_has_zero_torsion() {
    let b = AlgebraBackend::symmetric3();
    let rho = Representation::from_labels(&b, 1, &[("a1", "(12)"), ("b1", "(23)"), ("a2", "(23)"), ("b2", "(12)")]).unwrap();
    let cx = build_complex(&Surface::genus2().morse_data(), &rho, &HermitianStructure::standard()).unwrap();
    close(cx.torsion(TorsionMode::Lenient).unwrap(), 0.0, 1e-10);
}

#[test]
fn relator_violations_are_rejected() {
    let b = AlgebraBackend::symmetric3();
    // (12) and (23) do not commute
    let rho = Representation::from_labels(&b, 1, &[("a", "(12)"), ("b", "(23)")]).unwrap();
    assert!(build_complex(&Surface::torus().morse_data(), &rho, &HermitianStructure::standard()).is_err());
}

#[test]
fn orientation_flips_leave_torsion_unchanged() {
    let m = Surface::torus().morse_data();
    let rho = torus_rep(2);
    let mu = HermitianStructure::standard().scaled("a", 3.0, &rho.module()).unwrap();
    let t = build_complex(&m, &rho, &mu).unwrap().torsion(TorsionMode::Lenient).unwrap();
    for (_, x) in m.all_cells() {
        let f = m.flip_orientation(x).unwrap();
        close(build_complex(&f, &rho, &mu).unwrap().torsion(TorsionMode::Lenient).unwrap(), t, 1e-10);
    }
}

#[test]
fn identity_relative_torsion_is_zero() {
    let cx = build_complex(&Surface::circle().morse_data(), &circle_rep(4), &HermitianStructure::standard()).unwrap();
    close(cone_torsion(&Morphism::identity(&cx).unwrap()).unwrap(), 0.0, 1e-12);
    let s = Surface::circle().subdivision(2).unwrap();
    let a = subdivision_map(&s, "fine", &circle_rep(4), &HermitianStructure::standard()).unwrap();
    for (i, f) in a.maps.iter().enumerate() {
        assert!(f.distance(&EquivariantMap::identity(a.source.module(i))).abs() < 1e-14);
    }
}

#[test]
fn elementary_circle_subdivision() {
    let s = Surface::circle().subdivision(1).unwrap();
    let rho = circle_rep(3);
    let std = HermitianStructure::standard();
    close(triangulation_torsion(&s, "coarse", &rho, &std).unwrap(), 0.0, 1e-9);
    // scaling the fiber metric at the new vertex by c: the vertex is carried by
    // the coarse edge, so w(p.1) = log vol(B_g B_{p.1}^{-1}) = -log(c)/2
    let cc = 4.0;
    let mu = std.scaled("p.1", cc, &rho.module()).unwrap();
    let w = subdivision_weights(&s, "fine", "coarse", "fine", &rho, &mu).unwrap();
    let at = |x: &str| w.iter().find(|e| e.0 == x).unwrap().2;
    close(at("p.1"), -0.5 * cc.ln(), 1e-12);
    close(at("p"), 0.0, 1e-12);
    let omega = subdivision_weight(&s, "fine", "coarse", "fine", &rho, &mu).unwrap();
    close(omega, -0.5 * cc.ln(), 1e-12);
    let r = triangulation_torsion(&s, "coarse", &rho, &mu).unwrap();
    assert!(r.abs() > 0.1);
    close(r, omega, 1e-9);
}

#[test]
fn weights_are_a_cocycle_and_independent_of_the_base() {
    let s = Surface::circle().subdivision(3).unwrap();
    let rho = circle_rep(4);
    let module = rho.module();
    let mu = HermitianStructure::standard()
        .scaled("p.1", 2.0, &module)
        .unwrap()
        .scaled("g.2", 0.3, &module)
        .unwrap()
        .scaled("p.3", 5.0, &module)
        .unwrap();
    let (t1, t2, t3) = ("coarse", "keep:1", "keep:1,3");
    let bases = common_subdivisions(&s, &[t1, t2, t3]).unwrap();
    assert!(bases.contains(&"fine".to_string()) && bases.contains(&"keep:1,3".to_string()));
    let w = |a, b, base: &str| subdivision_weight(&s, a, b, base, &rho, &mu).unwrap();
    for base in &bases {
        close(w(t1, t2, base) + w(t2, t3, base), w(t1, t3, base), 1e-10);
        close(w(t1, t2, base), w(t1, t2, "fine"), 1e-10);
    }
    // relative torsions change by the weight
    let r = |t| triangulation_torsion(&s, t, &rho, &mu).unwrap();
    close(r(t2) - r(t1), w(t1, t2, "fine"), 1e-9);
}

#[test]
fn v_function_identities() {
    let s = Surface::torus().subdivision(2).unwrap();
    let rho = torus_rep(2);
    let fiber = rho.module();
    let mut rng = random::rng(4);
    let mu1 = HermitianStructure::standard()
        .with_factor("p.1", random::metric(&mut rng, &fiber, 0.5))
        .unwrap()
        .with_factor("a", random::metric(&mut rng, &fiber, 0.5))
        .unwrap();
    let mu2 = HermitianStructure::standard()
        .with_factor("p", random::metric(&mut rng, &fiber, 0.5))
        .unwrap()
        .with_factor("p.1", random::metric(&mut rng, &fiber, 0.5))
        .unwrap();
    let g = TransportGraph::from_subdivision(&s);
    let v = |a, b| v_function(&g.points, &fiber, a, b).unwrap();
    let same = v(&mu1, &mu1);
    assert!(same.values().all(|x| x.abs() < 1e-14));
    let (v12, v21) = (v(&mu1, &mu2), v(&mu2, &mu1));
    let std = HermitianStructure::standard();
    let (v1s, v2s) = (v(&mu1, &std), v(&mu2, &std));
    for x in &g.points {
        close(v12[x], -v21[x], 1e-12);
        close(v1s[x], v12[x] + v2s[x], 1e-12);
    }
    let th1 = theta_cochain(&g, &rho, &mu1).unwrap();
    let th2 = theta_cochain(&g, &rho, &mu2).unwrap();
    let dv = g.coboundary(&v21).unwrap();
    for ((a, b), d) in th1.iter().zip(&th2).zip(&dv) {
        close(a - b, *d, 1e-10);
    }
}

#[test]
fn unimodular_normalization() {
    let s = Surface::circle().subdivision(2).unwrap();
    let g = TransportGraph::from_subdivision(&s);
    let rho = circle_rep(3);
    let std = HermitianStructure::standard();
    assert!(theta_cochain(&g, &rho, &std).unwrap().iter().all(|t| t.abs() < 1e-14));
    let module = rho.module();
    let mut mu = std.clone();
    for (i, x) in g.points.iter().enumerate() {
        mu = mu.scaled(x, 1.0 + 0.7 * i as f64, &module).unwrap();
    }
    assert!(theta_cochain(&g, &rho, &mu).unwrap().iter().any(|t| t.abs() > 1e-3));
    let par = unimodular_normalize(&g, &rho, &mu).unwrap();
    assert!(theta_cochain(&g, &rho, &par).unwrap().iter().all(|t| t.abs() < 1e-10));
    for t in s.triangulations.keys() {
        assert!(triangulation_torsion(&s, t, &rho, &par).unwrap().abs() < 1e-9);
    }
    let sc = AlgebraBackend::scalar();
    let w = HilbertModule::new(&sc, 1);
    let images = BTreeMap::from([("g".to_string(), EquivariantMap::scalar(&w, c(2.0)))]);
    let doubling = Representation::new(&sc, 1, images).unwrap();
    assert!(unimodular_normalize(&g, &doubling, &std).is_err());
}

#[test]
fn hermitian_anomaly_bookkeeping() {
    let s = Surface::circle().subdivision(1).unwrap();
    let rho = circle_rep(2);
    let std = HermitianStructure::standard();
    let same = hermitian_anomaly(&s, "coarse", &rho, &std, &std, TorsionMode::Strict).unwrap();
    close(same.direct, 0.0, 1e-12);
    close(same.via_volumes, 0.0, 1e-12);
    // the new vertex is not a cell of the coarse triangulation
    let cc = 9.0;
    let mu2 = std.clone().scaled("p.1", cc, &rho.module()).unwrap();
    let r = hermitian_anomaly(&s, "coarse", &rho, &std, &mu2, TorsionMode::Strict).unwrap();
    close(r.fine_term, 0.5 * cc.ln(), 1e-12);
    close(r.direct, -0.5 * cc.ln(), 1e-9);
    assert!(r.residual() < 1e-9);
    let mu3 = std.clone().scaled("p", cc, &rho.module()).unwrap();
    assert!(hermitian_anomaly(&s, "coarse", &rho, &std, &mu3, TorsionMode::Strict).is_err());
}

#[test]
fn random_structures_agreeing_on_critical_cells() {
    let s = Surface::torus().subdivision(2).unwrap();
    let rho = torus_rep(2);
    let fiber = rho.module();
    let mut rng = random::rng(77);
    let std = HermitianStructure::standard();
    let mut cells = vec!["p.2", "a.2"];
    for t in ["keep:1", "coarse"] {
        let mut mu2 = std.clone();
        for x in &cells {
            mu2 = mu2.with_factor(x, random::metric(&mut rng, &fiber, 0.8)).unwrap();
        }
        let r = hermitian_anomaly(&s, t, &rho, &std, &mu2, TorsionMode::Strict).unwrap();
        assert!(r.residual() < 1e-9, "{t}: {r:?}");
        assert!(r.direct.abs() > 1e-6);
        cells.extend(["p.1", "a.1"]);
    }
}
