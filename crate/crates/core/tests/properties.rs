use std::f64::consts::PI;

use proptest::prelude::*;

use popdyn::analysis::{density_report, relabel_for_theorem};
use popdyn::circle::{det_jg, from_polar, to_polar};
use popdyn::linkage::{lbar, lbar_raw, motion_terms, AngleConfig, Bars, Linkage, Point};
use popdyn::pops::{h12, h23, pop12, pop23, pop_geometric, wrap, Vertex};
use popdyn::{classify, forward_kinematics, CircleMap};

fn bars() -> impl Strategy<Value = Bars> {
    (0.2..3.0f64, 0.2..3.0f64, 0.2..3.0f64).prop_map(|(a, b, c)| Bars::new(a, b, c).unwrap())
}

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

/// Angles at least `margin` away from `0` and `+-pi`.
fn interior_angle(margin: f64) -> impl Strategy<Value = f64> {
    (margin..PI - margin, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m })
}

/// A 0-pi double rocker with the floating bar longest or shortest and `L`
/// strictly inside the admissible interval.
fn theorem_linkage() -> impl Strategy<Value = Linkage> {
    (0.5..2.0f64, 0.5..2.0f64, 0.0..1.0f64, any::<bool>(), 0.05..0.95f64).prop_map(
        |(l1, l3, s, long, frac)| {
            let l2 = if long {
                l1.max(l3) + 0.05 + 2.0 * s
            } else {
                0.2 + (l1.min(l3) - 0.25) * s
            };
            let b = Bars::new(l1, l2, l3).unwrap();
            let (lo, hi) = b.lambda();
            Linkage::from_bars(b, lo + (hi - lo) * frac).unwrap()
        },
    )
}

fn on_gamma(l: &Linkage, phi: f64) -> AngleConfig {
    from_polar(&l.bars(), l.ground(), phi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chain_endpoint_distance_is_lbar(b in bars(), t1 in angle(), t2 in angle()) {
        let p1 = Point::from_polar(b.l1(), 0.0);
        let p2 = p1 + Point::from_polar(b.l2(), t1);
        let p3 = p2 + Point::from_polar(b.l3(), t1 + t2);
        prop_assert!((p3.norm() - lbar_raw(&b, t1, t2)).abs() < 1e-10);
    }

    #[test]
    fn lbar_mirror_symmetry(b in bars(), t1 in angle(), t2 in angle()) {
        let a = AngleConfig::new(t1, t2);
        prop_assert!((lbar(&b, &a) - lbar(&b, &a.mirrored())).abs() < 1e-12);
    }

    #[test]
    fn lbar_on_pi_line_is_bounded(b in bars(), t in angle()) {
        let (l1, l2, l3) = (b.l1(), b.l2(), b.l3());
        let bound = (l1 - l2 + l3).abs().max((l1 + l2 - l3).abs());
        prop_assert!(lbar_raw(&b, t, PI) <= bound + 1e-12);
        let bound = (l1 - l2 + l3).abs().max((-l1 + l2 + l3).abs());
        prop_assert!(lbar_raw(&b, PI, t) <= bound + 1e-12);
    }

    #[test]
    fn motion_terms_under_relabeling(b in bars(), frac in 0.01..0.99f64) {
        let (l1, l2, l3) = (b.l1(), b.l2(), b.l3());
        let b_sum = b.sum();
        let l = frac * b_sum;
        let (t1, t2, t3) = motion_terms(l1, l2, l3, l);
        // exchanging the outer bars: (T1, T2, T3) -> (T1, -T3, -T2)
        let (s1, s2, s3) = motion_terms(l3, l2, l1, l);
        let close = |a: (f64, f64, f64), b: (f64, f64, f64)| {
            (a.0 - b.0).abs().max((a.1 - b.1).abs()).max((a.2 - b.2).abs()) < 1e-12 * (b_sum + l)
        };
        prop_assert!(close((s1, s2, s3), (t1, -t3, -t2)));
        // exchanging bars 2 and 3: T1 <-> T2
        let (u1, u2, u3) = motion_terms(l1, l3, l2, l);
        prop_assert!(close((u1, u2, u3), (t2, t1, t3)));
        if let Ok(lk) = Linkage::from_bars(b, l) {
            let c = classify(&lk);
            prop_assert_eq!(c.grashof, c.t1 * c.t2 * c.t3 > 0.0);
            let swapped = Linkage::new(l3, l2, l1, l).unwrap();
            prop_assert_eq!(classify(&swapped).kind, c.kind);
        }
    }

    #[test]
    fn forward_kinematics_keeps_lengths(l in theorem_linkage(), phi in angle()) {
        let cfg = forward_kinematics(&l, &on_gamma(&l, phi)).unwrap();
        let [d1, d2, d3] = cfg.bar_lengths();
        prop_assert!((d1 - l.l1()).abs() < 1e-10);
        prop_assert!((d2 - l.l2()).abs() < 1e-10);
        prop_assert!((d3 - l.l3()).abs() < 1e-10);
        prop_assert!(cfg.d.dist(Point::new(l.ground(), 0.0)) < 1e-9);
    }

    #[test]
    fn pops_preserve_lbar(b in bars(), t1 in angle(), t2 in angle()) {
        let a = AngleConfig::new(t1, t2);
        let before = lbar(&b, &a);
        let scale = b.sum();
        prop_assert!((lbar(&b, &pop12(&b, &a).unwrap()) - before).abs() < 1e-10 * scale);
        prop_assert!((lbar(&b, &pop23(&b, &a).unwrap()) - before).abs() < 1e-10 * scale);
    }

    #[test]
    fn pops_are_involutions(b in bars(), t1 in interior_angle(1e-6), t2 in interior_angle(1e-6)) {
        let a = AngleConfig::new(t1, t2);
        // an image on the wrap seam would be discontinuous; skip those
        let once = pop12(&b, &a).unwrap();
        prop_assume!(PI - once.theta2().abs() > 1e-6);
        prop_assert!(pop12(&b, &once).unwrap().distance(&a) < 1e-12);
        let once = pop23(&b, &a).unwrap();
        prop_assume!(PI - once.theta1().abs() > 1e-6);
        prop_assert!(pop23(&b, &once).unwrap().distance(&a) < 1e-12);
    }

    #[test]
    fn pops_need_no_wrap_on_gamma(l in theorem_linkage(), phi in angle()) {
        let a = on_gamma(&l, phi);
        let b = l.bars();
        for (x, y) in [h12(&b, a.theta1(), a.theta2()).unwrap(), h23(&b, a.theta1(), a.theta2()).unwrap()] {
            prop_assert!(x > -PI && x <= PI && y > -PI && y <= PI, "({x}, {y})");
        }
    }

    #[test]
    fn pops_match_reflections(l in theorem_linkage(), phi in angle()) {
        let a = on_gamma(&l, phi);
        let cfg = forward_kinematics(&l, &a).unwrap();
        let b = l.bars();
        prop_assert!(pop_geometric(&cfg, Vertex::B).unwrap().angles().distance(&pop12(&b, &a).unwrap()) < 1e-9);
        prop_assert!(pop_geometric(&cfg, Vertex::C).unwrap().angles().distance(&pop23(&b, &a).unwrap()) < 1e-9);
    }

    #[test]
    fn equal_lengths_compose_with_period_three(l in 0.3..3.0f64, t1 in angle(), t2 in angle()) {
        let b = Bars::new(l, l, l).unwrap();
        let a = AngleConfig::new(t1, t2);
        let mut x = a;
        for _ in 0..3 {
            x = pop23(&b, &pop12(&b, &x).unwrap()).unwrap();
        }
        prop_assert!(x.distance(&a) < 1e-12);
    }

    #[test]
    fn polar_round_trip(l in theorem_linkage(), phi in angle()) {
        let a = on_gamma(&l, phi);
        let p = to_polar(&l.bars(), &a).unwrap();
        prop_assert!((p.ground - l.ground()).abs() < 1e-10);
        prop_assert!(wrap(p.phi - phi).abs() < 1e-10);
        prop_assert!(from_polar(&l.bars(), p.ground, p.phi).unwrap().distance(&a) < 1e-10);
    }

    #[test]
    fn det_jg_is_negative_on_gamma(l in theorem_linkage(), phi in angle()) {
        prop_assert!(det_jg(&l.bars(), &on_gamma(&l, phi)).unwrap() < 0.0);
    }

    #[test]
    fn circle_map_preserves_orientation(l in theorem_linkage(), phi in angle()) {
        let map = CircleMap::from_linkage(&l).unwrap();
        let h = 1e-6;
        let fd = wrap(map.f(phi + h).unwrap() - map.f(phi - h).unwrap()) / (2.0 * h);
        let ratio = map.derivative(phi).unwrap();
        prop_assert!(fd > 0.0);
        prop_assert!((fd - ratio).abs() < 1e-5);
    }

    #[test]
    fn circle_map_has_no_fixed_point(l in theorem_linkage(), phi in angle()) {
        let map = CircleMap::from_linkage(&l).unwrap();
        prop_assert!(wrap(map.f(phi).unwrap() - phi).abs() > 0.0);
    }

    #[test]
    fn lift_has_degree_one_and_increases(l in theorem_linkage(), x in -10.0..10.0f64, dx in 1e-3..1.0f64) {
        let lift = CircleMap::from_linkage(&l).unwrap().lift().unwrap();
        let fx = lift.apply(x).unwrap();
        prop_assert!((lift.apply(x + 2.0 * PI).unwrap() - fx - 2.0 * PI).abs() < 1e-12 * (1.0 + x.abs()));
        prop_assert!(lift.apply(x + dx).unwrap() > fx);
    }

    #[test]
    fn lift_iterates_reduce_to_map_iterates(l in theorem_linkage(), phi in angle()) {
        let map = CircleMap::from_linkage(&l).unwrap();
        let lift = map.lift().unwrap();
        let (mut x, mut p) = (phi, phi);
        for _ in 0..20 {
            x = lift.apply(x).unwrap();
            p = map.f(p).unwrap();
        }
        prop_assert!(wrap(x - p).abs() < 1e-9);
    }

    #[test]
    fn relabeling_yields_a_double_rocker(x in prop::array::uniform4(0.1..3.0f64)) {
        let (t1, t2, t3) = motion_terms(x[0], x[1], x[2], x[3]);
        prop_assume!(t1 * t2 * t3 < 0.0 && [t1, t2, t3].iter().all(|t| t.abs() > 1e-9));
        let r = relabel_for_theorem(x).unwrap();
        let y = r.lengths;
        let (u1, u2, u3) = motion_terms(y[0], y[1], y[2], y[3]);
        prop_assert!(u1 > 0.0 && u2 > 0.0 && u3 < 0.0);
        if r.corollary_condition {
            prop_assert!(r.theorem_condition);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measure_is_invariant(l in theorem_linkage(), a in angle(), b in angle()) {
        let map = CircleMap::from_linkage(&l).unwrap();
        let tol = 1e-10;
        let before = map.invariant_measure(a, b, tol).unwrap();
        let after = map.invariant_measure(map.f(a).unwrap(), map.f(b).unwrap(), tol).unwrap();
        prop_assert!((after - before).abs() <= 10.0 * tol, "{before} vs {after}");
    }

    #[test]
    fn gap_history_never_grows(l in theorem_linkage(), phi in angle()) {
        let r = density_report(&l, phi, 2000).unwrap();
        prop_assert!(r.gap_history.windows(2).all(|w| w[1].1 <= w[0].1));
        prop_assert!(r.max_gap_phi > 0.0 && r.max_gap_phi <= 2.0 * PI);
    }
}
