use approx::assert_abs_diff_eq;
use epig::data::LabeledExample;
use epig::epig::{
    epig_bald_scores_weighted, epig_entropy_scores_weighted, exact_conditioned_predictions,
    exact_epig_all_forms, exact_epig_batch_forms,
};
use epig::info::{bald_scores, batchbald_score, JointMode};
use epig::models::discrete::{Likelihood, DEFAULT_ENUMERATION_CAP};
use epig::DiscreteBayesModel;

const LN2: f64 = std::f64::consts::LN_2;

fn logistic(w: [f64; 2], b: f64, scale: f64) -> Likelihood {
    Likelihood::Logistic {
        weights: vec![w[0] * scale, w[1] * scale],
        bias: b * scale,
    }
}

/// Four near-deterministic hypotheses indexed by labels (a, b) at
/// x1 = (1, 0) and x2 = (0, 1), each labeling xe = (1, 1) with a XOR b.
fn xor_model() -> DiscreteBayesModel {
    let s = 200.0;
    DiscreteBayesModel::new(
        vec![
            logistic([-0.6, -0.6], 1.0, s), // a = 1, b = 1, xe -> 0
            logistic([0.0, 0.0], -1.0, s),  // a = 0, b = 0, xe -> 0
            logistic([1.0, -0.5], 0.0, s),  // a = 1, b = 0, xe -> 1
            logistic([-0.5, 1.0], 0.0, s),  // a = 0, b = 1, xe -> 1
        ],
        None,
    )
    .unwrap()
}

#[test]
fn xor_hypotheses_label_as_intended() {
    let m = xor_model();
    let expect = [[1, 1, 0], [0, 0, 0], [1, 0, 1], [0, 1, 1]];
    for (h, labels) in m.hypotheses().iter().zip(expect) {
        for (x, y) in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]].iter().zip(labels) {
            assert!(h.probs(x)[y] > 1.0 - 1e-9);
        }
    }
}

#[test]
fn joint_epig_is_not_submodular() {
    // Each of Y1, Y2 alone says nothing about Ye; together they fix it.
    let m = xor_model();
    let (x1, x2, xe) = (vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]);
    let eval = [xe];
    let f = |batch: &[Vec<f64>]| {
        exact_epig_batch_forms(&m, &eval, batch, DEFAULT_ENUMERATION_CAP)
            .unwrap()
            .eval_side
    };
    let single1 = f(&[x1.clone()]);
    let single2 = f(&[x2.clone()]);
    let pair = f(&[x1, x2]);
    assert_abs_diff_eq!(single1, 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(single2, 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(pair, LN2, epsilon = 1e-6);
    // gain of x2 after x1 exceeds its gain from the empty set
    assert!(pair - single1 > single2 - 0.0 + 0.6);
}

#[test]
fn batchbald_stays_submodular_on_the_same_model() {
    let m = xor_model();
    let xs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let p = m.predict(&xs).unwrap();
    let f = |b: &[usize]| batchbald_score(&p, b, JointMode::exact()).unwrap();
    // each label is one fair bit about the hypothesis; two of them pin it down
    assert_abs_diff_eq!(f(&[0]), LN2, epsilon = 1e-6);
    assert_abs_diff_eq!(f(&[0, 1]), 2.0 * LN2, epsilon = 1e-6);
    assert_abs_diff_eq!(f(&[0, 1, 2]), 2.0 * LN2, epsilon = 1e-6);
    assert!(f(&[0, 1, 2]) - f(&[0, 1]) <= f(&[0, 2]) - f(&[0]) + 1e-9);
}

fn opposite() -> DiscreteBayesModel {
    // two deterministic hypotheses that disagree everywhere on x > 0
    let s = 80.0;
    DiscreteBayesModel::new(
        vec![logistic([1.0, 0.0], 0.0, s), logistic([-1.0, 0.0], 0.0, s)],
        None,
    )
    .unwrap()
}

#[test]
fn candidate_equal_to_eval_point_has_ln2_in_every_form() {
    let m = opposite();
    let x = vec![vec![1.0, 0.0]];
    let forms = exact_epig_batch_forms(&m, &x, &x, DEFAULT_ENUMERATION_CAP).unwrap();
    assert_abs_diff_eq!(forms.eval_side, LN2, epsilon = 1e-9);
    assert_abs_diff_eq!(forms.candidate_side, LN2, epsilon = 1e-9);
    assert_abs_diff_eq!(forms.bald_difference, LN2, epsilon = 1e-9);
}

#[test]
fn separating_eval_point_turns_bald_into_epig() {
    let m = opposite();
    let eval = vec![vec![2.0, 0.0]];
    let cand = vec![vec![1.0, 0.5]];
    let teacher = m.predict(&cand).unwrap();
    assert_abs_diff_eq!(bald_scores(&teacher)[0], LN2, epsilon = 1e-9);
    let (cond, w) =
        exact_conditioned_predictions(&m, &eval, &cand, DEFAULT_ENUMERATION_CAP).unwrap();
    let s = epig_bald_scores_weighted(&teacher, &cond, Some(&w)).unwrap();
    assert_abs_diff_eq!(s.conditional_bald[0], 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(s.scores[0], LN2, epsilon = 1e-9);
}

#[test]
fn entropy_and_bald_forms_agree_exactly() {
    let m = DiscreteBayesModel::logistic_grid(2, &[-2.0, 0.5, 1.5], &[-0.5, 0.5]).unwrap();
    let eval = vec![vec![0.3, -0.4], vec![1.0, 1.0], vec![-0.7, 0.2]];
    let cands: Vec<Vec<f64>> = (0..7)
        .map(|i| vec![i as f64 * 0.3 - 1.0, 0.5 - i as f64 * 0.2])
        .collect();
    let teacher = m.predict(&cands).unwrap();
    let (cond, w) =
        exact_conditioned_predictions(&m, &eval, &cands, DEFAULT_ENUMERATION_CAP).unwrap();
    let bald_form = epig_bald_scores_weighted(&teacher, &cond, Some(&w)).unwrap();
    let entropy_form = epig_entropy_scores_weighted(&teacher, &cond, Some(&w)).unwrap();
    for i in 0..cands.len() {
        assert_abs_diff_eq!(bald_form.scores[i], entropy_form[i], epsilon = 1e-9);
        let forms = exact_epig_all_forms(&m, &eval, &cands[i]).unwrap();
        assert_abs_diff_eq!(bald_form.scores[i], forms.eval_side, epsilon = 1e-9);
        assert!(forms.max_deviation() < 1e-9);
        assert!(bald_form.conditional_bald[i] <= bald_form.bald[i] + 1e-9);
    }
}

#[test]
fn conditioning_on_observed_labels_matches_bayes_rule() {
    // posterior after one observation, by hand: w_k ∝ p_k(y | x)
    let m = opposite();
    let x = vec![0.01, 0.0];
    let p0 = m.hypotheses()[0].probs(&x);
    let p1 = m.hypotheses()[1].probs(&x);
    let post = m
        .condition(&[LabeledExample::hard(x, 1)])
        .unwrap()
        .posterior();
    let z = p0[1] + p1[1];
    assert_abs_diff_eq!(post[0], p0[1] / z, epsilon = 1e-12);
    assert_abs_diff_eq!(post[1], p1[1] / z, epsilon = 1e-12);
}
