use ndarray::Array2;
use proptest::prelude::*;
use rgcn::noise::{gaussian_noise, masking_noise, NoiseKind, NoiseSpec, MASK_VALUE};
use rgcn::Error;

fn ramp(n: usize, m: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, m), |(i, j)| (i * m + j) as f64 * 0.01)
}

#[test]
fn level_extremes() {
    let x = ramp(3, 7);
    assert_eq!(masking_noise(x.view(), &NoiseSpec::masking(0.0, 1)).unwrap(), x);
    let all = masking_noise(x.view(), &NoiseSpec::masking(1.0, 1)).unwrap();
    assert!(all.iter().all(|&v| v == MASK_VALUE));
    assert_eq!(gaussian_noise(x.view(), &NoiseSpec::gaussian(0.0, 1)).unwrap(), x);
}

#[test]
fn fifth_of_a_hundred_features_per_row() {
    let x = -ramp(40, 100) - 1.0;
    let y = masking_noise(x.view(), &NoiseSpec::masking(0.2, 9)).unwrap();
    for (a, b) in x.rows().into_iter().zip(y.rows()) {
        let changed = a.iter().zip(&b).filter(|(u, v)| u != v).count();
        assert_eq!(changed, 20);
        assert_eq!(b.iter().filter(|&&v| v == 10.0).count(), 20);
    }
}

#[test]
fn invalid_levels() {
    let x = Array2::zeros((2, 2));
    for bad in [1.5, -0.1, f64::NAN] {
        assert!(matches!(masking_noise(x.view(), &NoiseSpec::masking(bad, 0)), Err(Error::InvalidParameter(_))));
    }
    assert!(gaussian_noise(x.view(), &NoiseSpec::gaussian(-1.0, 0)).is_err());
    assert!(gaussian_noise(x.view(), &NoiseSpec::masking(0.1, 0)).is_err());
    assert!(masking_noise(x.view(), &NoiseSpec::gaussian(0.1, 0)).is_err());
}

#[test]
fn gaussian_std_is_within_confidence_band() {
    let (n, m) = (200, 100);
    let z = Array2::zeros((n, m));
    for seed in 0..5 {
        let y = gaussian_noise(z.view(), &NoiseSpec::gaussian(0.01, seed)).unwrap();
        let k = (n * m) as f64;
        let mean = y.sum() / k;
        let std = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        // normal-theory standard error of a sample std is sigma / sqrt(2(k - 1))
        let half_width = 1.96 * 0.01 / (2.0 * (k - 1.0)).sqrt();
        assert!((std - 0.01).abs() <= 3.0 * half_width, "seed {seed}: {std}");
        assert!(mean.abs() <= 3.0 * 1.96 * 0.01 / k.sqrt());
    }
}

#[test]
fn gaussian_noise_field_ignores_the_input() {
    let spec = NoiseSpec::gaussian(0.02, 77);
    let a = ramp(6, 9);
    let b = Array2::from_elem((6, 9), -3.25);
    let da = gaussian_noise(a.view(), &spec).unwrap() - &a;
    let db = gaussian_noise(b.view(), &spec).unwrap() - &b;
    // sums near different offsets round differently; compare at the noise scale
    for (u, v) in da.iter().zip(&db) {
        assert!((u - v).abs() < 1e-14);
    }
    let z = Array2::zeros((6, 9));
    let dz = gaussian_noise(z.view(), &spec).unwrap();
    let dz2 = gaussian_noise(z.view(), &spec).unwrap();
    assert!(dz.iter().zip(&dz2).all(|(u, v)| u.to_bits() == v.to_bits()));
}

#[test]
fn shared_columns_hit_the_same_features() {
    let x = Array2::zeros((5, 20));
    let spec = NoiseSpec {
        shared_columns: true,
        ..NoiseSpec::masking(0.25, 3)
    };
    let y = masking_noise(x.view(), &spec).unwrap();
    let first: Vec<bool> = y.row(0).iter().map(|&v| v == MASK_VALUE).collect();
    assert_eq!(first.iter().filter(|&&b| b).count(), 5);
    for r in 1..5 {
        let row: Vec<bool> = y.row(r).iter().map(|&v| v == MASK_VALUE).collect();
        assert_eq!(row, first);
    }
    let per_row = masking_noise(x.view(), &NoiseSpec::masking(0.25, 3)).unwrap();
    assert!((1..5).any(|r| per_row.row(r) != per_row.row(0)));
}

#[test]
fn kind_names_round_trip() {
    for k in [NoiseKind::Masking, NoiseKind::Gaussian] {
        assert_eq!(NoiseKind::parse(k.name()), Some(k));
    }
    assert_eq!(NoiseKind::parse("salt"), None);
}

proptest! {
    #[test]
    fn masking_support_is_exact_and_deterministic(
        n in 1usize..20, m in 1usize..60, level in 0.0f64..=1.0, seed in any::<u64>(), shared in any::<bool>()
    ) {
        // entries are negative so every masked position is visible
        let x = Array2::from_shape_fn((n, m), |(i, j)| -1.0 - (i * m + j) as f64);
        let spec = NoiseSpec { shared_columns: shared, ..NoiseSpec::masking(level, seed) };
        let y = masking_noise(x.view(), &spec).unwrap();
        prop_assert_eq!(y.dim(), x.dim());
        let want = (level * m as f64).floor() as usize;
        for (a, b) in x.rows().into_iter().zip(y.rows()) {
            let changed: Vec<usize> = (0..m).filter(|&j| a[j] != b[j]).collect();
            prop_assert_eq!(changed.len(), want);
            prop_assert!(changed.iter().all(|&j| b[j] == MASK_VALUE));
        }
        prop_assert_eq!(masking_noise(x.view(), &spec).unwrap(), y);
    }

    #[test]
    fn gaussian_keeps_shape_and_is_deterministic(n in 1usize..20, m in 1usize..20, std in 0.0f64..2.0, seed in any::<u64>()) {
        let x = ramp(n, m);
        let spec = NoiseSpec::gaussian(std, seed);
        let y = gaussian_noise(x.view(), &spec).unwrap();
        prop_assert_eq!(y.dim(), x.dim());
        prop_assert_eq!(gaussian_noise(x.view(), &spec).unwrap(), y);
    }
}
