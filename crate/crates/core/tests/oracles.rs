//! Toolkit results checked against independent ground truth: sampling,
//! exact arithmetic and the linear oracle.

use shadowkit::covering::{
    certify_chained, check_covering, compose_chain, ChainConfig, ChainOutcome, CoveringConfig, Rectangle,
};
use shadowkit::dynamics::{builtin_map, Direction, MapSpec};
use shadowkit::geometry::{make_subdivision, point_distance, AxisBox, Space};
use shadowkit::oracle::{brute_force_fixed_points, linear_shadow};
use shadowkit::shadowing::{
    generate_pseudo_orbit, periodic_shadow, shadow, verify_shadow, PerturbMode, PseudoOrbit, ShadowConfig,
};
use shadowkit::transition::{build_graph, EdgeStatus, GraphConfig};

fn cat() -> MapSpec {
    builtin_map("toral [[2,1],[1,1]]").unwrap()
}

#[test]
fn cat_graph_agrees_with_sampling() {
    let f = cat();
    let sub = make_subdivision(2, 3, Space::Torus).unwrap();
    let g = build_graph(&f, &sub, &GraphConfig::default()).unwrap();
    let mut seen = vec![vec![false; sub.count()]; sub.count()];
    for i in 0..sub.count() {
        let b = sub.cube_box(i);
        for a in 0..100 {
            for c in 0..100 {
                let p = [
                    b.lo()[0] + (a as f64 + 0.5) / 100.0 * sub.side(),
                    b.lo()[1] + (c as f64 + 0.5) / 100.0 * sub.side(),
                ];
                let j = sub.cube_of_point(&f.eval_point(Direction::Forward, &p).unwrap());
                seen[i][j] = true;
            }
        }
    }
    for i in 0..sub.count() {
        for j in 0..sub.count() {
            match g.edge(i, j) {
                EdgeStatus::CertifiedEmpty { .. } => {
                    assert!(!seen[i][j], "sampled transition {i} -> {j} claimed empty")
                }
                EdgeStatus::Uncertain => panic!("uncertain edge {i} -> {j}"),
                EdgeStatus::CertifiedNonempty { .. } => {}
            }
            if seen[i][j] {
                assert!(g.edge(i, j).is_nonempty());
            }
        }
    }
}

#[test]
fn shadow_matches_linear_oracle() {
    let f = cat();
    let sub = make_subdivision(2, 5, Space::Torus).unwrap();
    let g = build_graph(&f, &sub, &GraphConfig::default()).unwrap();
    for seed in 0..3 {
        let p = generate_pseudo_orbit(&f, &[0.27, 0.61], 1e-4, 40, &PerturbMode::UniformNoise { seed }, true).unwrap();
        let r = shadow(&f, &p, &g, sub.chi(), &ShadowConfig::default()).unwrap();
        let rep = verify_shadow(&f, &r.point_hp().unwrap(), &p, sub.chi()).unwrap();
        assert!(rep.ok && r.eps_achieved <= 3e-4);
        let o = linear_shadow(&f, &p).unwrap();
        for (k, (a, y)) in rep.errors.iter().zip(&p.points).enumerate() {
            let b = point_distance(Space::Torus, &o.points[k], y);
            assert!(a / b <= 2.0 && b / a <= 2.0, "seed {seed} k {k}: {a:e} vs {b:e}");
        }
    }
}

#[test]
fn period_three_from_rational_point() {
    // A^3 = [[13,8],[8,5]] fixes every quarter-lattice point mod 1.
    let f = cat();
    let exact = [[0.25, 0.0], [0.5, 0.25], [0.25, 0.75]];
    let noise = [[3e-5, -2e-5], [-4e-5, 1e-5], [2e-5, 5e-5]];
    let pts: Vec<Vec<f64>> = exact.iter().zip(&noise).map(|(e, n)| vec![e[0] + n[0], e[1] + n[1]]).collect();
    let p = PseudoOrbit::new(&f, 0, pts, 3e-4, Some(3)).unwrap();
    let sub = make_subdivision(2, 4, Space::Torus).unwrap();
    let g = build_graph(&f, &sub, &GraphConfig::default()).unwrap();
    let r = periodic_shadow(&f, &p, &g, sub.chi(), &ShadowConfig::default()).unwrap();
    assert!(point_distance(Space::Torus, &r.point, &exact[0]) < 1e-6, "{:?}", r.point);
    assert_eq!(r.min_period, Some(3));
}

#[test]
fn fixed_point_counts() {
    let f = cat();
    let unit = AxisBox::unit(2, Space::Torus);
    // |det(A^P - I)| = 1, 5, 16
    for (period, count) in [(1, 1), (2, 5), (3, 16)] {
        let s = brute_force_fixed_points(&f, &unit, period, 64).unwrap();
        assert_eq!(s.points.len(), count, "period {period}: {:?}", s.points);
        assert!(!s.degenerate);
    }
}

/// Lattice search for `x ∈ r1` with `f(x) ∈ r2` and `f²(x) ∈ r3`.
fn through_orbit(f: &MapSpec, r: [&Rectangle; 3], grid: usize) -> bool {
    for a in 0..=grid {
        for b in 0..=grid {
            let z = [2.0 * a as f64 / grid as f64 - 1.0, 2.0 * b as f64 / grid as f64 - 1.0];
            let x = r[0].point(&z);
            let y = f.lift(Direction::Forward, &x).unwrap();
            let w = f.lift(Direction::Forward, &y).unwrap();
            if r[1].contains(&y) && r[2].contains(&w) {
                return true;
            }
        }
    }
    false
}

#[test]
fn two_chain_matches_brute_force() {
    let f = builtin_map("affine [[2,0],[0,0.5]] [-0.5,0.2]").unwrap();
    let rect = |lo: [f64; 2], hi: [f64; 2]| {
        Rectangle::from_box(&AxisBox::new(lo.to_vec(), hi.to_vec(), Space::Cube).unwrap(), 0, 1).unwrap()
    };
    let r1 = rect([0.4, 0.4], [0.6, 0.6]);
    let r2 = rect([0.35, 0.3], [0.65, 0.6]);
    let r3 = rect([0.3, 0.3], [0.7, 0.55]);
    let cfg = CoveringConfig::default();
    let c1 = check_covering(&f, &r1, &r2, &cfg).unwrap().certificate().unwrap().clone();
    let c2 = check_covering(&f, &r2, &r3, &cfg).unwrap().certificate().unwrap().clone();
    assert_eq!(compose_chain(&[c1, c2]).unwrap().length, 2);
    assert!(through_orbit(&f, [&r1, &r2, &r3], 200));
    // a target the strip image misses has no through-orbit and no covering
    let far = rect([0.3, 0.05], [0.7, 0.15]);
    assert!(check_covering(&f, &r2, &far, &cfg).unwrap().certificate().is_none());
    assert!(!through_orbit(&f, [&r1, &r2, &far], 200));
}

#[test]
fn isometries_have_failure_reports() {
    for desc in ["identity", "translation [0.5,0]", "translation [0.3,0.1]"] {
        let f = builtin_map(desc).unwrap();
        let sub = make_subdivision(2, 3, Space::Torus).unwrap();
        let g = build_graph(&f, &sub, &GraphConfig::default()).unwrap();
        match certify_chained(&f, &g, &ChainConfig::default()).unwrap() {
            ChainOutcome::Failed(r) => {
                assert_eq!(r.failing.len(), r.nonempty_edges, "{desc}");
                assert_eq!(r.nonempty_edges, g.nonempty_edges().len());
            }
            ChainOutcome::Certified(_) => panic!("{desc} certified"),
        }
    }
}
