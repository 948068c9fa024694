//! Closed-form 1-D EMD against a min-cost-flow solution of the transport LP.

use proptest::prelude::*;
use tsunami_core::oracle::transport_lp;
use tsunami_core::skew::{emd_1d, skew_of};

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..10.0, n), prop::collection::vec(0.0f64..10.0, n)).prop_filter_map(
            "zero mass",
            |(a, mut b)| {
                let (ta, tb): (f64, f64) = (a.iter().sum(), b.iter().sum());
                if ta <= 1e-9 || tb <= 1e-9 {
                    return None;
                }
                b.iter_mut().for_each(|x| *x *= ta / tb);
                Some((a, b))
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn closed_form_equals_transport_lp((a, b) in pair()) {
        let closed = emd_1d(&a, &b).unwrap();
        let lp = transport_lp(&a, &b);
        prop_assert!((closed - lp).abs() <= 1e-6 * lp.abs().max(1.0), "closed {closed} lp {lp}");
    }

    #[test]
    fn skew_is_distance_to_uniform(a in prop::collection::vec(0.0f64..10.0, 1..=8)) {
        let avg = a.iter().sum::<f64>() / a.len() as f64;
        let uniform = vec![avg; a.len()];
        let lp = transport_lp(&a, &uniform);
        prop_assert!((skew_of(&a) - lp).abs() <= 1e-6 * lp.max(1.0));
    }

    #[test]
    fn emd_is_a_metric((a, b) in pair()) {
        let ab = emd_1d(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - emd_1d(&b, &a).unwrap()).abs() < 1e-9);
        prop_assert!(emd_1d(&a, &a).unwrap().abs() < 1e-12);
    }
}

#[test]
fn unequal_mass_is_rejected() {
    assert!(emd_1d(&[1.0, 0.0], &[0.0, 2.0]).is_err());
    assert!(emd_1d(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn lp_solver_on_known_case() {
    assert!((transport_lp(&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]) - 2.0).abs() < 1e-12);
}
