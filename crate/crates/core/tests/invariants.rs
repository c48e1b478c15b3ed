use proptest::prelude::*;
use shadowkit::dynamics::{builtin_map, Direction};
use shadowkit::geometry::{make_subdivision, point_distance, set_distance_lb, AxisBox, Space};
use shadowkit::hp::Hp;
use shadowkit::interval::Interval;
use shadowkit::shadowing::{generate_pseudo_orbit, PerturbMode};
use shadowkit::transition::{build_graph, GraphConfig, TransitionGraph};
use std::sync::OnceLock;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0), Just(0.1), Just(1.0 / 3.0)]
}

/// Exact `a + b` as `s + e` (TwoSum), and exact `a * b` as `p + e` via FMA.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Checks that `iv` contains the exact value `v + e` with `|e|` tiny.
fn encloses(iv: Interval, v: f64, e: f64) -> bool {
    iv.contains(v) && (e <= 0.0 || iv.hi > v) && (e >= 0.0 || iv.lo < v)
}

fn cat_graph() -> &'static TransitionGraph {
    static G: OnceLock<TransitionGraph> = OnceLock::new();
    G.get_or_init(|| {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        build_graph(&f, &make_subdivision(2, 3, Space::Torus).unwrap(), &GraphConfig::default()).unwrap()
    })
}

fn standard_graph() -> &'static TransitionGraph {
    static G: OnceLock<TransitionGraph> = OnceLock::new();
    G.get_or_init(|| {
        let f = builtin_map("standard K=0.9").unwrap();
        build_graph(&f, &make_subdivision(2, 3, Space::Torus).unwrap(), &GraphConfig::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_add_encloses_exact_sum(a in finite(), b in finite()) {
        let (s, e) = two_sum(a, b);
        prop_assert!(encloses(Interval::point(a) + Interval::point(b), s, e));
        let (d, e) = two_sum(a, -b);
        prop_assert!(encloses(Interval::point(a) - Interval::point(b), d, e));
    }

    #[test]
    fn interval_mul_encloses_exact_product(a in finite(), b in finite()) {
        let (p, e) = two_prod(a, b);
        prop_assert!(encloses(Interval::point(a) * Interval::point(b), p, e));
    }

    #[test]
    fn interval_ops_enclose_member_points(
        lo1 in -10.0..10.0f64, w1 in 0.0..3.0f64, t1 in 0.0..=1.0f64,
        lo2 in -10.0..10.0f64, w2 in 0.0..3.0f64, t2 in 0.0..=1.0f64,
    ) {
        let a = Interval::new(lo1, lo1 + w1);
        let b = Interval::new(lo2, lo2 + w2);
        let x = (a.lo + t1 * w1).min(a.hi);
        let y = (b.lo + t2 * w2).min(b.hi);
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a * b).contains(x * y));
        prop_assert!(a.sin().contains(x.sin()));
        prop_assert!(a.sqr().contains(x * x));
    }

    #[test]
    fn box_gap_is_a_lower_bound(
        p in prop::collection::vec(0.0..1.0f64, 2), q in prop::collection::vec(0.0..1.0f64, 2),
        w in 0.0..0.3f64, torus in any::<bool>(),
    ) {
        let space = if torus { Space::Torus } else { Space::Cube };
        let mk = |c: &[f64]| {
            let lo: Vec<f64> = c.iter().map(|v| (v - w).max(0.0)).collect();
            let hi: Vec<f64> = c.iter().map(|v| (v + w).min(1.0)).collect();
            AxisBox::new(lo, hi, space).unwrap()
        };
        let (a, b) = (mk(&p), mk(&q));
        prop_assert!(set_distance_lb(&a, &b) <= point_distance(space, &p, &q) + 1e-15);
    }

    #[test]
    fn point_lies_in_its_cube(p in prop::collection::vec(0.0..1.0f64, 2), m in 1u32..8) {
        for space in [Space::Cube, Space::Torus] {
            let sub = make_subdivision(2, m, space).unwrap();
            let i = sub.cube_of_point(&p);
            prop_assert!(sub.cube_box(i).contains_point(&p));
            prop_assert_eq!(sub.flat_index(&sub.multi_index(i)), i);
        }
    }

    #[test]
    fn box_image_encloses_point_images(
        c in prop::collection::vec(0.05..0.95f64, 2), w in 1e-6..0.05f64,
        t in prop::collection::vec(0.0..=1.0f64, 2), which in 0usize..3,
    ) {
        let desc = ["toral [[2,1],[1,1]]", "standard K=1.3", "perturbed [[2,1],[1,1]] eta=0.01"][which];
        let f = builtin_map(desc).unwrap();
        let b = AxisBox::new(c.iter().map(|v| v - w).collect(), c.iter().map(|v| v + w).collect(), Space::Torus).unwrap();
        let x: Vec<f64> = (0..2).map(|d| b.lo()[d] + t[d] * (b.hi()[d] - b.lo()[d])).collect();
        let img = f.eval_intervals(Direction::Forward, &b.intervals()).unwrap();
        let y = f.lift(Direction::Forward, &x).unwrap();
        for d in 0..2 {
            prop_assert!(img[d].contains(y[d]), "axis {} {:?} !∋ {}", d, img[d], y[d]);
        }
    }

    #[test]
    fn observed_transitions_are_graph_edges(p in prop::collection::vec(0.0..1.0f64, 2), standard in any::<bool>()) {
        let g = if standard { standard_graph() } else { cat_graph() };
        let f = builtin_map(g.map_id()).unwrap();
        let sub = g.subdivision();
        let i = sub.cube_of_point(&p);
        let j = sub.cube_of_point(&f.eval_point(Direction::Forward, &p).unwrap());
        prop_assert!(g.edge(i, j).is_nonempty(), "{} -> {} is {:?}", i, j, g.edge(i, j));
    }

    #[test]
    fn pseudo_orbit_defects_stay_below_delta(seed in any::<u64>(), delta in 1e-8..1e-2f64, steps in 1usize..40) {
        let f = builtin_map("toral [[2,1],[1,1]]").unwrap();
        let p = generate_pseudo_orbit(&f, &[0.3, 0.7], delta, steps, &PerturbMode::UniformNoise { seed }, true).unwrap();
        prop_assert_eq!(p.len(), 2 * steps + 1);
        prop_assert!(p.max_defect(&f).unwrap() < delta);
    }

    #[test]
    fn hp_round_trips(x in -1e9..1e9f64) {
        let h = Hp::from_f64(x);
        prop_assert_eq!(h.to_f64(), x);
        prop_assert_eq!(Hp::from_hex(&h.to_hex()).unwrap(), h);
    }
}
