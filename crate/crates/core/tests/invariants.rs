use std::path::Path;

use epig::epig::{epig_bald_scores_weighted, exact_conditioned_predictions, exact_epig_all_forms};
use epig::idx::{encode_images, encode_labels, parse_images, parse_labels};
use epig::info::{
    bald_scores, batchbald_score, entropy, joint_entropy, joint_predictive, predictive_entropies,
    softmax_select, topk_select, JointMode,
};
use epig::models::discrete::{Likelihood, DEFAULT_ENUMERATION_CAP};
use epig::report::fmt_g17;
use epig::sim::median;
use epig::{DiscreteBayesModel, PredictiveSamples};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

/// S x N x C tensors with strictly positive rows.
fn tensor(max_s: usize, max_n: usize, max_c: usize) -> impl Strategy<Value = PredictiveSamples> {
    (1..=max_s, 1..=max_n, 2..=max_c).prop_flat_map(|(s, n, c)| {
        prop::collection::vec(0.01f64..1.0, s * n * c).prop_map(move |raw| {
            let mut probs = raw;
            for row in probs.chunks_mut(c) {
                let z: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= z);
            }
            PredictiveSamples::new(s, n, c, probs).unwrap()
        })
    })
}

fn discrete_model() -> impl Strategy<Value = DiscreteBayesModel> {
    prop::collection::vec(
        (-3.0f64..3.0, -3.0f64..3.0, -1.0f64..1.0, 0.1f64..1.0),
        1..=6,
    )
    .prop_map(|hs| {
        let prior = hs.iter().map(|h| h.3).collect();
        let hyps = hs
            .into_iter()
            .map(|(a, b, c, _)| Likelihood::Logistic {
                weights: vec![a, b],
                bias: c,
            })
            .collect();
        DiscreteBayesModel::new(hyps, Some(prior)).unwrap()
    })
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 0..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bald_is_bounded(ps in tensor(6, 5, 4)) {
        let ln_c = (ps.classes() as f64).ln();
        for (b, h) in bald_scores(&ps).into_iter().zip(predictive_entropies(&ps)) {
            prop_assert!(b >= -TOL);
            prop_assert!(b <= h + TOL);
            prop_assert!(h <= ln_c + TOL);
        }
    }

    #[test]
    fn joint_entropy_is_sandwiched(ps in tensor(5, 4, 3)) {
        let batch: Vec<usize> = (0..ps.inputs()).collect();
        let joint = joint_entropy(&joint_predictive(&ps, &batch, JointMode::exact()).unwrap());
        let marginals: Vec<f64> = predictive_entropies(&ps);
        let max = marginals.iter().cloned().fold(0.0, f64::max);
        prop_assert!(joint >= max - TOL);
        prop_assert!(joint <= marginals.iter().sum::<f64>() + TOL);
    }

    #[test]
    fn batchbald_is_monotone_and_subadditive(ps in tensor(5, 4, 3)) {
        let bald = bald_scores(&ps);
        let mut prev = 0.0;
        for k in 1..=ps.inputs() {
            let batch: Vec<usize> = (0..k).collect();
            let v = batchbald_score(&ps, &batch, JointMode::exact()).unwrap();
            prop_assert!(v >= prev - TOL);
            prop_assert!(v <= bald[..k].iter().sum::<f64>() + TOL);
            prev = v;
        }
    }

    #[test]
    fn topk_is_sorted_and_distinct(scores in prop::collection::vec(-5.0f64..5.0, 1..40), frac in 0.0f64..1.0) {
        let b = ((scores.len() as f64 * frac) as usize).max(1);
        let r = topk_select(&scores, b).unwrap();
        prop_assert_eq!(r.selected.len(), b);
        for w in r.selected.windows(2) {
            prop_assert!(scores[w[0]] > scores[w[1]] || (scores[w[0]] == scores[w[1]] && w[0] < w[1]));
        }
        let chosen_min = r.selected.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
        for (i, &s) in scores.iter().enumerate() {
            if !r.selected.contains(&i) {
                prop_assert!(s <= chosen_min);
            }
        }
    }

    #[test]
    fn softmax_draws_are_distinct(scores in prop::collection::vec(-5.0f64..5.0, 1..30), seed: u64, t in 0.01f64..50.0) {
        let b = scores.len().div_ceil(2);
        let mut picked = softmax_select(&scores, b, t, seed).unwrap().selected;
        prop_assert_eq!(picked.len(), b);
        picked.sort_unstable();
        picked.dedup();
        prop_assert_eq!(picked.len(), b);
    }

    #[test]
    fn exact_epig_forms_agree(model in discrete_model(), eval in points(3), cand in prop::collection::vec(-2.0f64..2.0, 2)) {
        let forms = exact_epig_all_forms(&model, &eval, &cand).unwrap();
        prop_assert!(forms.max_deviation() < TOL);
        prop_assert!(forms.eval_side >= -TOL);
        let cands = vec![cand];
        let teacher = model.predict(&cands).unwrap();
        let (cond, w) = exact_conditioned_predictions(&model, &eval, &cands, DEFAULT_ENUMERATION_CAP).unwrap();
        let s = epig_bald_scores_weighted(&teacher, &cond, Some(&w)).unwrap();
        prop_assert!(s.conditional_bald[0] <= s.bald[0] + TOL);
        prop_assert!((s.scores[0] - forms.eval_side).abs() < TOL);
    }

    #[test]
    fn g17_round_trips(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_g17(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn median_lies_within_range(v in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let m = median(&v);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= m && m <= hi);
    }

    #[test]
    fn idx_round_trips(rows in 1usize..6, cols in 1usize..6, n in 0usize..5, seed: u8) {
        let images: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..rows * cols).map(|j| seed.wrapping_add((i * 31 + j * 7) as u8)).collect())
            .collect();
        let labels: Vec<u8> = (0..n as u8).collect();
        let path = Path::new("mem");
        let (count, r, c, pixels) = parse_images(&encode_images(rows, cols, &images), path).unwrap();
        prop_assert_eq!((count, r, c), (n, rows, cols));
        prop_assert_eq!(pixels, images.concat());
        prop_assert_eq!(parse_labels(&encode_labels(&labels), path).unwrap(), labels);
    }

    #[test]
    fn entropy_is_bounded(raw in prop::collection::vec(0.0f64..1.0, 2..10)) {
        let z: f64 = raw.iter().sum();
        prop_assume!(z > 1e-6);
        let p: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let h = entropy(&p).unwrap();
        prop_assert!(h >= -TOL && h <= (p.len() as f64).ln() + TOL);
    }
}
