use approx::assert_abs_diff_eq;
use epig::epig::sample_pseudo_label_sets;
use epig::info::{
    bald_scores, batchbald_score, entropy, joint_entropy, joint_predictive, softmax_select,
    JointMode,
};
use epig::PredictiveSamples;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const LN2: f64 = std::f64::consts::LN_2;

// -0.8 ln 0.8 - 0.2 ln 0.2 to 20 significant digits
const H_08: f64 = 0.500_402_423_538_187_9;

fn ps(nested: &[Vec<Vec<f64>>]) -> PredictiveSamples {
    PredictiveSamples::from_nested(nested).unwrap()
}

#[test]
fn entropy_matches_closed_form() {
    let direct = -(0.8f64 * 0.8f64.ln() + 0.2 * 0.2f64.ln());
    assert_abs_diff_eq!(H_08, direct, epsilon = 1e-15);
    assert_abs_diff_eq!(entropy(&[0.8, 0.2]).unwrap(), H_08, epsilon = 1e-12);
    assert_abs_diff_eq!(entropy(&[0.25; 4]).unwrap(), 4f64.ln(), epsilon = 1e-12);
    assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn bald_of_two_opposed_rows() {
    let p = ps(&[vec![vec![0.8, 0.2]], vec![vec![0.2, 0.8]]]);
    assert_abs_diff_eq!(bald_scores(&p)[0], LN2 - H_08, epsilon = 1e-12);
    assert_abs_diff_eq!(bald_scores(&p)[0], 0.192745, epsilon = 1e-6);
    assert_abs_diff_eq!(
        batchbald_score(&p, &[0], JointMode::exact()).unwrap(),
        0.192745,
        epsilon = 1e-6
    );
}

#[test]
fn single_candidate_joint_entropy() {
    let p = ps(&[vec![vec![0.8, 0.2]]]);
    let jp = joint_predictive(&p, &[0], JointMode::exact()).unwrap();
    assert_abs_diff_eq!(joint_entropy(&jp), 0.500402, epsilon = 1e-6);
}

#[test]
fn duplicated_extreme_mc_is_close_to_ln2() {
    let p = ps(&[
        vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        vec![vec![0.0, 1.0], vec![0.0, 1.0]],
    ]);
    let jp = joint_predictive(
        &p,
        &[0, 1],
        JointMode::MonteCarlo {
            samples: 10_000,
            seed: 3,
        },
    )
    .unwrap();
    assert!((joint_entropy(&jp) - LN2).abs() < 0.02);
}

#[test]
fn softmax_probability_matches_closed_form() {
    let scores = [1f64.ln(), 2f64.ln()];
    let draws = 100_000;
    let ones = (0..draws)
        .filter(|&s| softmax_select(&scores, 1, 1.0, s).unwrap().selected[0] == 1)
        .count();
    let freq = ones as f64 / draws as f64;
    assert!((freq - 2.0 / 3.0).abs() < 0.01, "frequency {freq}");
}

#[test]
fn softmax_near_zero_temperature_is_uniform() {
    let scores = [0.3, 0.3, 0.3, 0.3];
    let draws = 100_000u64;
    let mut counts = [0f64; 4];
    for s in 0..draws {
        counts[softmax_select(&scores, 1, 1e-8, s).unwrap().selected[0]] += 1.0;
    }
    let expected = draws as f64 / 4.0;
    let chi2: f64 = counts
        .iter()
        .map(|c| (c - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new(3.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi-square {chi2}, p {p}");
}

#[test]
fn pseudo_labels_on_a_fair_point_are_fair() {
    let eval = ps(&[
        vec![vec![0.5, 0.5]],
        vec![vec![0.5, 0.5]],
        vec![vec![0.5, 0.5]],
    ]);
    let sets = sample_pseudo_label_sets(&eval, 10_000, 17);
    let ones = sets.iter().filter(|s| s.labels[0] == 1).count() as f64;
    assert!((ones / 10_000.0 - 0.5).abs() < 0.015);
}

#[test]
fn pseudo_labels_are_jointly_consistent() {
    // each sample labels both eval points identically, so sets never mix
    let eval = ps(&[
        vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        vec![vec![0.0, 1.0], vec![0.0, 1.0]],
    ]);
    for set in sample_pseudo_label_sets(&eval, 500, 5) {
        assert_eq!(set.labels[0], set.labels[1]);
        assert_eq!(set.labels[0], set.source_sample);
    }
}
