use proptest::prelude::*;

use schmidt::geometry::{
    ball_avoids_neighborhood, ball_contains_ball, fmt_scalar, hyperplane_through_points, linalg, parse_scalar, q, sq_dist_point_subspace,
    sqrt_lower, sqrt_upper, to_f64, AffineSubspace, Ball, Neighborhood, Point, Scalar,
};
use schmidt::measures::{diffuse_beta_from_decay, simplex_sq_width};

fn rat() -> impl Strategy<Value = Scalar> {
    (-60i64..=60, 1i64..=12).prop_map(|(n, d)| q(n, d))
}

fn point(d: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(rat(), d).prop_map(Point)
}

fn dir(d: usize) -> impl Strategy<Value = Vec<Scalar>> {
    prop::collection::vec(rat(), d).prop_filter("nonzero", |v| v.iter().any(|x| *x != q(0, 1)))
}

fn fdist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scalar_text_round_trip(x in rat()) {
        prop_assert_eq!(parse_scalar(&fmt_scalar(&x)).unwrap(), x);
    }

    #[test]
    fn square_roots_bracket(n in 0i64..10_000, d in 1i64..500) {
        let x = q(n, d);
        let (lo, hi) = (sqrt_lower(&x), sqrt_upper(&x));
        prop_assert!(&lo * &lo <= x && x <= &hi * &hi);
        prop_assert!(to_f64(&hi) - to_f64(&lo) <= 1e-9 * (1.0 + to_f64(&x).sqrt()));
    }

    #[test]
    fn projection_is_orthogonal(p in point(3), a in point(3), u in dir(3), v in dir(3)) {
        let Ok(l) = AffineSubspace::new(a, vec![u.clone(), v.clone()]) else { return Ok(()) };
        let pr = l.project(&p).unwrap();
        prop_assert!(l.contains(&pr).unwrap());
        let res = linalg::sub(p.coords(), pr.coords());
        prop_assert!(linalg::dot(&res, &u) == q(0, 1) && linalg::dot(&res, &v) == q(0, 1));
        prop_assert_eq!(sq_dist_point_subspace(&p, &l).unwrap(), p.sq_dist(&pr));
        prop_assert_eq!(l.project(&pr).unwrap(), pr);
    }

    #[test]
    fn hyperplane_through_points_contains_them(pts in prop::collection::vec(point(3), 1..=3)) {
        let h = hyperplane_through_points(&pts).unwrap();
        prop_assert_eq!(h.dim(), 2);
        for p in &pts {
            prop_assert!(h.contains(p).unwrap());
        }
    }

    #[test]
    fn ball_predicates_match_float_oracle(c1 in point(2), c2 in point(2), r1 in 1i64..40, r2 in 1i64..40) {
        let (b1, b2) = (Ball::new(c1, q(r1, 3)).unwrap(), Ball::new(c2, q(r2, 3)).unwrap());
        let d2 = fdist2(&b1.center.to_f64(), &b2.center.to_f64());
        let (f1, f2) = (r1 as f64 / 3.0, r2 as f64 / 3.0);
        // skip near-tangent cases the float oracle cannot decide
        let meet_gap = d2 - (f1 + f2).powi(2);
        if meet_gap.abs() > 1e-9 {
            prop_assert_eq!(b1.meets(&b2), meet_gap < 0.0);
        }
        let inside_gap = d2.sqrt() + f2 - f1;
        if inside_gap.abs() > 1e-9 {
            prop_assert_eq!(ball_contains_ball(&b1, &b2).unwrap(), inside_gap < 0.0);
        }
    }

    #[test]
    fn avoidance_is_the_complement_of_reach(c in point(2), a in point(2), n in dir(2), w in 0i64..20, r in 1i64..20) {
        let off = linalg::dot(&n, a.coords());
        let l = AffineSubspace::hyperplane(n, off).unwrap();
        let nb = Neighborhood::new(l.clone(), q(w, 4)).unwrap();
        let b = Ball::new(c, q(r, 4)).unwrap();
        let avoids = ball_avoids_neighborhood(&b, &nb).unwrap();
        let reach = q(w + r, 4);
        prop_assert_eq!(avoids, sq_dist_point_subspace(&b.center, &l).unwrap() >= &reach * &reach);
        if avoids {
            prop_assert!(!nb.contains_point(&b.center).unwrap() || w + r == 0);
        }
    }

    #[test]
    fn simplex_width_is_at_most_every_edge(pts in prop::collection::vec(point(2), 3)) {
        let w2 = simplex_sq_width(&pts);
        for i in 0..3 {
            for j in i + 1..3 {
                prop_assert!(w2 <= pts[i].sq_dist(&pts[j]));
            }
            // and at most every altitude
            let others: Vec<Point> = (0..3).filter(|&k| k != i).map(|k| pts[k].clone()).collect();
            if others[0] != others[1] {
                let h = AffineSubspace::spanned_by(others[0].clone(), &[linalg::sub(others[1].coords(), others[0].coords())]).unwrap();
                prop_assert!(w2 <= sq_dist_point_subspace(&pts[i], &h).unwrap());
            }
        }
    }

    #[test]
    fn decay_beta_is_strict(c in 1.0f64..50.0, g in 0.05f64..3.0) {
        let b = diffuse_beta_from_decay(c, g).unwrap();
        let bf = to_f64(&b);
        prop_assert!(bf > 0.0 && bf < 1.0);
        prop_assert!(c * bf.powf(g) < 1.0);
        let target = (1.0 / c).powf(1.0 / g).min(1.0);
        prop_assert!(target - bf < 1e-9 + 2f64.powi(-20));
    }
}
