use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use zpc::setalg::{IntervalVector, MatrixZonotope, Zonotope};

fn zonotope(n: usize) -> impl Strategy<Value = Zonotope> {
    (0usize..5).prop_flat_map(move |g| {
        (
            prop::collection::vec(-4.0..4.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n * g),
        )
            .prop_map(move |(c, gs)| {
                Zonotope::new(DVector::from_vec(c), DMatrix::from_vec(n, g, gs)).unwrap()
            })
    })
}

fn beta(g: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-1.0..=1.0f64, g).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn minus_contains_differences(
        (a, b, ba, bb) in (1usize..4)
            .prop_flat_map(|n| (zonotope(n), zonotope(n)))
            .prop_flat_map(|(a, b)| { let (ga, gb) = (a.num_generators(), b.num_generators()); (Just(a), Just(b), beta(ga), beta(gb)) })
    ) {
        prop_assert!(a.minus(&b).unwrap().contains(&(a.point(&ba) - b.point(&bb))));
    }

    #[test]
    fn scaled_points_stay_inside(
        (z, b, s) in (1usize..4).prop_flat_map(zonotope)
            .prop_flat_map(|z| { let g = z.num_generators(); (Just(z), beta(g), -3.0..3.0f64) })
    ) {
        prop_assert!(z.scale(s).contains(&(z.point(&b) * s)));
    }

    #[test]
    fn compact_keeps_the_set(
        (z, b) in (1usize..4).prop_flat_map(zonotope).prop_flat_map(|z| { let g = z.num_generators(); (Just(z), beta(g)) })
    ) {
        let c = z.compact();
        prop_assert!(c.contains(&z.point(&b)));
        prop_assert!(c.interval_hull().is_subset_of(&z.interval_hull(), 1e-9));
        prop_assert!(z.interval_hull().is_subset_of(&c.interval_hull(), 1e-9));
    }

    #[test]
    fn matrix_zonotope_products_contain_samples(
        (mc, mg, z, bm, bz) in (1usize..4, 1usize..4, 0usize..3).prop_flat_map(|(r, c, k)| {
            (
                prop::collection::vec(-2.0..2.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v)),
                prop::collection::vec(prop::collection::vec(-1.0..1.0f64, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v)), k),
                zonotope(c),
            )
        }).prop_flat_map(|(mc, mg, z)| {
            let (k, g) = (mg.len(), z.num_generators());
            (Just(mc), Just(mg), Just(z), beta(k), beta(g))
        })
    ) {
        let m = MatrixZonotope::new(mc, mg).unwrap();
        let prod = m.times_zonotope(&z).unwrap();
        prop_assert!(prod.contains(&(m.point(&bm) * z.point(&bz))));
        prop_assert!(m.contains(&m.point(&bm)));
    }

    #[test]
    fn interval_round_trip(lo in prop::collection::vec(-3.0..0.0f64, 1..5), w in prop::collection::vec(0.0..2.0f64, 5)) {
        let lo = DVector::from_vec(lo);
        let hi = DVector::from_fn(lo.len(), |i, _| lo[i] + w[i]);
        let iv = IntervalVector::new(lo, hi).unwrap();
        let back = Zonotope::from_interval(&iv).unwrap().interval_hull();
        prop_assert!(back.is_subset_of(&iv, 1e-12) && iv.is_subset_of(&back, 1e-12));
    }
}

#[test]
fn degenerate_segment_membership() {
    let z = Zonotope::new(
        DVector::from_vec(vec![1.0, 1.0]),
        DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
    )
    .unwrap();
    assert!(z.contains(&DVector::from_vec(vec![1.5, 1.5])));
    assert!(!z.contains(&DVector::from_vec(vec![1.5, 1.4])));
    assert!(!z.contains(&DVector::from_vec(vec![2.1, 2.1])));
}
