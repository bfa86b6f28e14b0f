use proptest::prelude::*;
use spacearm_cli::metrics::{block_means, smoothed_nondecreasing};

#[test]
fn block_means_use_the_tail() {
    let xs: Vec<f64> = (0..20).map(f64::from).collect();
    assert_eq!(block_means(&xs, 0.5, 5), vec![10.5, 12.5, 14.5, 16.5, 18.5]);
    // 11 tail values in 5 blocks drop the leading one.
    let xs: Vec<f64> = (0..22).map(f64::from).collect();
    assert_eq!(block_means(&xs, 0.5, 5), vec![12.5, 14.5, 16.5, 18.5, 20.5]);
    assert!(block_means(&xs[..4], 0.5, 5).is_empty());
}

#[test]
fn smoothing_tolerates_noise_but_not_decline() {
    let noisy: Vec<f64> = (0..100).map(|i| i as f64 * 0.1 + if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    assert!(smoothed_nondecreasing(&noisy, 5));
    let falling: Vec<f64> = (0..100).map(|i| -(i as f64)).collect();
    assert!(!smoothed_nondecreasing(&falling, 5));
    assert!(!smoothed_nondecreasing(&[1.0, 2.0], 5));
}

proptest! {
    #[test]
    fn monotone_series_pass(mut xs in prop::collection::vec(-1e3f64..1e3, 10..200)) {
        xs.sort_by(f64::total_cmp);
        prop_assert!(smoothed_nondecreasing(&xs, 5));
    }

    #[test]
    fn block_means_stay_within_range(xs in prop::collection::vec(-1e3f64..1e3, 10..200), blocks in 1usize..6) {
        let lo = xs.iter().copied().fold(f64::MAX, f64::min);
        let hi = xs.iter().copied().fold(f64::MIN, f64::max);
        for m in block_means(&xs, 0.5, blocks) {
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
        }
    }
}
