//! Optional melanoma-data checks. The dataset is not bundled; point
//! `MELANOMA_CSV` at a CSV with header `y,delta,x1` (time in years, event
//! indicator, nodule category 1-4) and the published-estimate comparisons
//! run; without it the test passes as skipped.
//!
//! Reference values for this dataset: point estimates near
//! (-1.228, 0.386, 0.561, 0.376, 0.051), nodule-category cure rates near
//! (0.653, 0.536, 0.402, 0.266), and a residual KS p-value around 0.93.

use bct_cure::inference::{
    default_alpha_grid, fit_dataset, group_cure_rates, ks_normality, quantile_residuals,
};
use bct_cure::io::read_dataset_csv;
use bct_cure::sqh::SqhConfig;
use std::path::PathBuf;

#[test]
fn melanoma_published_estimates_when_data_supplied() {
    let Some(path) = std::env::var_os("MELANOMA_CSV") else {
        println!("[SKIP] melanoma checks: set MELANOMA_CSV to run them");
        return;
    };
    let data = read_dataset_csv(&PathBuf::from(path)).expect("readable melanoma CSV");
    assert_eq!(data.covariate_dim(), 1, "expected a single nodule column");

    let fit = fit_dataset(
        &data,
        (1.0, 4.0),
        &default_alpha_grid(),
        &SqhConfig::default(),
    )
    .expect("melanoma fit");
    let flat = fit.theta.to_flat();
    println!(
        "melanoma estimates: beta0 {:.3} beta1 {:.3} gamma1 {:.3} gamma2 {:.3} alpha {:.3}",
        flat[0], flat[1], flat[2], flat[3], flat[4]
    );
    let published = [-1.228, 0.386, 0.561, 0.376, 0.051];
    for ((est, pub_), name) in flat
        .iter()
        .zip(published)
        .zip(["beta0", "beta1", "gamma1", "gamma2", "alpha"])
    {
        assert!(
            (est - pub_).abs() < 0.15,
            "{name}: {est:.3} vs published {pub_:.3}"
        );
    }

    let groups: Vec<Vec<f64>> = (1..=4).map(|x| vec![x as f64]).collect();
    let rates = group_cure_rates(&fit.theta, &groups);
    let published_rates = [0.653, 0.536, 0.402, 0.266];
    for (rate, pub_) in rates.iter().zip(published_rates) {
        assert!((rate - pub_).abs() < 0.05, "cure {rate:.3} vs {pub_:.3}");
    }

    let residuals = quantile_residuals(&data, &fit.theta, 5, 1).unwrap();
    let (_, p) = ks_normality(&residuals).unwrap();
    println!("melanoma residual KS p-value: {p:.3}");
    assert!(p > 0.5, "KS p-value {p:.3}");
}
