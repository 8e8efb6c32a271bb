use std::f64::consts::PI;

use genusflow_core::fieldspec::{check_matching, synthesize};
use genusflow_core::geometry::standard_domain;
use genusflow_core::topology::{
    attractor_count_check, dissipativity_check, equilibria, euler_check, index_of, iterate_region, Area, BoundaryCurve,
    Region,
};
use genusflow_core::{AttractorEstimate, CurveSpec, HPoint, IntegratorConfig, PoincareMap, VectorField};

fn planar_box() -> [f64; 4] {
    [-1.0, 1.0, -1.0, 1.0]
}

#[test]
fn contraction_collapses_to_the_centre() {
    let sink = |x: f64, y: f64, _t: f64| [-x, -y];
    let pm = PoincareMap::new(&sink, 1.0, None).unwrap();
    let b0 = Region::full(33, 33, planar_box()).unwrap();
    let est = iterate_region(&pm, &b0, 10).unwrap();
    assert_eq!(est.component_count(), 1);
    assert!(est.region.get(16, 16));
    assert!(est.region.count() <= 9, "{}", est.region.count());
}

#[test]
fn zero_field_keeps_the_initial_set() {
    let zero = |_x: f64, _y: f64, _t: f64| [0.0, 0.0];
    let pm = PoincareMap::new(&zero, 1.0, None).unwrap();
    let b0 = Region::from_fn(20, 20, planar_box(), |p| p.x * p.x + p.y * p.y < 0.5).unwrap();
    let est = iterate_region(&pm, &b0, 5).unwrap();
    assert_eq!(est.region, b0);
}

#[test]
fn torus_phase_line_attractor() {
    let torus = standard_domain(1).unwrap();
    let f = |_x: f64, y: f64, _t: f64| [0.0, -(2.0 * PI * y).sin()];
    let pm = PoincareMap::new(&f, 1.0, Some(&torus)).unwrap().with_config(IntegratorConfig::rk4(1.0 / 32.0));

    // From the whole torus nothing is removed: P is onto, so the
    // repelling circle and its unstable manifold stay in.
    let all = Region::full(32, 32, torus.bounds()).unwrap();
    let est = iterate_region(&pm, &all, 20).unwrap();
    assert_eq!(est.region, all);

    // Without the repeller the set shrinks to a band around y = 0.
    let b0 = Region::from_fn(32, 32, torus.bounds(), |p| (p.y - 0.5).abs() > 0.1).unwrap();
    let est = iterate_region(&pm, &b0, 20).unwrap();
    assert_eq!(est.component_count(), 1);
    assert!(est.components[0].has_winding());
    for (_, iy) in est.region.occupied() {
        assert!(!(4..28).contains(&iy), "cell row {iy} is far from y = 0");
    }
}

#[test]
fn component_examples() {
    let b = planar_box();
    let one = Region::from_fn(16, 16, b, |p| p.x.abs() < 0.5 && p.y.abs() < 0.5).unwrap();
    assert_eq!(AttractorEstimate::from_region(one, None).component_count(), 1);
    let two = Region::from_fn(16, 16, b, |p| p.y.abs() < 0.5 && (p.x.abs() - 0.6).abs() < 0.2).unwrap();
    assert_eq!(AttractorEstimate::from_region(two, None).component_count(), 2);
    // Diagonal neighbours are not adjacent.
    let mut diag = Region::empty(8, 8, b).unwrap();
    diag.set(1, 1, true);
    diag.set(2, 2, true);
    assert_eq!(AttractorEstimate::from_region(diag, None).component_count(), 2);

    let torus = standard_domain(1).unwrap();
    let strip = Region::from_fn(16, 16, torus.bounds(), |p| p.y < 0.2).unwrap();
    assert_eq!(AttractorEstimate::from_region(strip, Some(&torus)).component_count(), 1);
    let column = Region::from_fn(16, 16, torus.bounds(), |p| p.x < 0.1 || p.x > 0.9).unwrap();
    assert_eq!(AttractorEstimate::from_region(column, Some(&torus)).component_count(), 1);
}

#[test]
fn count_bound_examples() {
    assert!(attractor_count_check(1, 1));
    assert!(attractor_count_check(3, 2));
    assert!(!attractor_count_check(4, 2));
}

fn single_index<F: VectorField>(f: &F) -> (HPoint, i32) {
    let scan = equilibria(f, Area::Plane(planar_box()), (64, 64), 0.0).unwrap();
    assert_eq!(scan.equilibria.len(), 1, "{:?}", scan.equilibria);
    let e = &scan.equilibria[0];
    (e.location, e.index)
}

#[test]
fn equilibria_examples() {
    let (p, k) = single_index(&|x: f64, y: f64, _t: f64| [x, y]);
    assert!(p.x.abs() < 1e-9 && p.y.abs() < 1e-9);
    assert_eq!(k, 1);
    assert_eq!(single_index(&|x: f64, y: f64, _t: f64| [x, -y]).1, -1);
    let circle = synthesize(&[CurveSpec::parse("x^2 + y^2 - 1", "0", "0", "c").unwrap()]).unwrap();
    assert_eq!(single_index(&circle).1, 1);
}

#[test]
fn index_examples_at_several_radii() {
    let double = |x: f64, y: f64, _t: f64| [x * x - y * y, 2.0 * x * y];
    let saddle = |x: f64, y: f64, _t: f64| [x, -y];
    for r in [0.05, 0.1, 0.2] {
        assert_eq!(index_of(&double, HPoint::new(0.0, 0.0), r, 360).unwrap(), 2);
        assert_eq!(index_of(&saddle, HPoint::new(0.0, 0.0), r, 360).unwrap(), -1);
    }
}

#[test]
fn euler_examples() {
    let torus = standard_domain(1).unwrap();
    // Source, sink and two saddles.
    let f = |x: f64, y: f64, _t: f64| [(2.0 * PI * x).sin(), (2.0 * PI * y).sin()];
    let scan = equilibria(&f, Area::Surface(&torus), (64, 64), 0.0).unwrap();
    assert_eq!(scan.equilibria.len(), 4);
    assert!(euler_check(&scan.equilibria, 1).pass);
    assert!(!euler_check(&scan.equilibria[..1], 2).pass);
}

#[test]
fn poincare_apply_examples() {
    let sink = |x: f64, y: f64, _t: f64| [-x, -y];
    let pm = PoincareMap::new(&sink, 1.0, None).unwrap();
    let (q, word) = pm.apply(HPoint::new(0.4, -0.8)).unwrap();
    assert!((q.x - 0.4 / std::f64::consts::E).abs() < 1e-9);
    assert!((q.y + 0.8 / std::f64::consts::E).abs() < 1e-9);
    assert!(word.is_empty());

    let torus = standard_domain(1).unwrap();
    let drift = |_x: f64, _y: f64, _t: f64| [1.0, 0.0];
    let pm = PoincareMap::new(&drift, 1.0, Some(&torus)).unwrap();
    let (q, word) = pm.apply(HPoint::new(0.3, 0.6)).unwrap();
    assert!(q.dist(HPoint::new(0.3, 0.6)) < 1e-9);
    assert_eq!(word, vec![3]);
}

#[test]
fn equivariance_examples() {
    let torus = standard_domain(1).unwrap();
    let periodic = |x: f64, y: f64, t: f64| [(2.0 * PI * x).sin() + 0.5, (2.0 * PI * y).cos() * t.cos()];
    assert!(check_matching(&periodic, &torus, 50) < 1e-12);
    let pm = PoincareMap::new(&periodic, 1.0, Some(&torus)).unwrap();
    assert!(pm.check_equivariance(10).unwrap() < 1e-6);

    let broken = |_x: f64, y: f64, _t: f64| [y, 0.0];
    let pm = PoincareMap::new(&broken, 1.0, Some(&torus)).unwrap();
    assert!(pm.check_equivariance(10).unwrap() > 0.1);

    let zero = |_x: f64, _y: f64, _t: f64| [0.0, 0.0];
    let pm = PoincareMap::new(&zero, 1.0, Some(&torus)).unwrap();
    assert_eq!(pm.check_equivariance(10).unwrap(), 0.0);
}

fn unit_circle(ccw: bool) -> BoundaryCurve {
    let pts = (0..90)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 90.0;
            HPoint::new(a.cos(), if ccw { a.sin() } else { -a.sin() })
        })
        .collect();
    BoundaryCurve::new(pts, true)
}

#[test]
fn dissipativity_examples() {
    // Counter-clockwise travel puts the left normal inside.
    let sink = |x: f64, y: f64, _t: f64| [-x, -y];
    let rep = dissipativity_check(&sink, &[unit_circle(true)], 720, &[0.0]);
    assert!(rep.pass);
    assert!((rep.margin - 1.0).abs() < 1e-2, "{}", rep.margin);
    let source = |x: f64, y: f64, _t: f64| [x, y];
    assert!(!dissipativity_check(&source, &[unit_circle(true)], 720, &[0.0]).pass);
    // Clockwise travel makes the outside the trapped side.
    assert!(dissipativity_check(&source, &[unit_circle(false)], 720, &[0.0]).pass);
}
