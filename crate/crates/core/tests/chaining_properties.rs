use proptest::prelude::*;
use sfem::chaining::{
    likelihood, prior_from_sizes, ChainingModel, Distance, FrameCategory, ModelKind,
};
use sfem::corpus::Frame;
use sfem::scalar::log_sum_exp;

const DIM: usize = 3;

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, DIM)
}

/// Between one and five frames with one to four supports each.
fn supports() -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
    prop::collection::vec(prop::collection::vec(point(), 1..=4), 1..=5)
}

fn categories(supports: &[Vec<Vec<f64>>]) -> Vec<FrameCategory<f64>> {
    supports
        .iter()
        .enumerate()
        .map(|(i, s)| FrameCategory::new(Frame::new(format!("v{i}"), "dobj"), s.clone()).unwrap())
        .collect()
}

fn model(kind: ModelKind, supports: &[Vec<Vec<f64>>]) -> ChainingModel<f64> {
    let cats = categories(supports);
    let frames = cats.iter().map(|c| c.frame.clone()).collect();
    let sizes: Vec<usize> = supports.iter().map(Vec::len).collect();
    ChainingModel::new(
        kind,
        Distance::Euclidean,
        cats,
        prior_from_sizes(frames, &sizes).unwrap(),
    )
    .unwrap()
}

fn kinds() -> impl Strategy<Value = ModelKind> {
    prop_oneof![Just(ModelKind::Exemplar), Just(ModelKind::Prototype)]
}

proptest! {
    #[test]
    fn distributions_are_normalized(kind in kinds(), s in supports(), q in point()) {
        let m = model(kind, &s);
        for d in [m.likelihood(&q).unwrap(), m.posterior(&q).unwrap(), m.prior().clone()] {
            prop_assert!(log_sum_exp(d.log_probs.iter().copied()).abs() < 1e-9);
        }
    }

    #[test]
    fn support_order_does_not_matter(kind in kinds(), s in supports(), q in point()) {
        let reversed: Vec<Vec<Vec<f64>>> = s.iter().map(|f| f.iter().rev().cloned().collect()).collect();
        let a = likelihood(kind, &q, &categories(&s), Distance::Euclidean).unwrap();
        let b = likelihood(kind, &q, &categories(&reversed), Distance::Euclidean).unwrap();
        for (x, y) in a.log_probs.iter().zip(&b.log_probs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_invariant(kind in kinds(), s in supports(), q in point(), shift in point()) {
        let moved = |v: &Vec<f64>| v.iter().zip(&shift).map(|(a, b)| a + b).collect::<Vec<f64>>();
        let shifted: Vec<Vec<Vec<f64>>> = s.iter().map(|f| f.iter().map(moved).collect()).collect();
        let a = model(kind, &s).posterior(&q).unwrap();
        let b = model(kind, &shifted).posterior(&moved(&q)).unwrap();
        for (x, y) in a.log_probs.iter().zip(&b.log_probs) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn joint_is_likelihood_plus_prior(kind in kinds(), s in supports(), q in point()) {
        let m = model(kind, &s);
        let j = m.joint(&q).unwrap();
        let l = m.likelihood(&q).unwrap();
        for ((a, b), c) in j.log_joint.iter().zip(&l.log_probs).zip(&m.prior().log_probs) {
            prop_assert!((a - (b + c)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision_tracks_double(kind in kinds(), s in supports(), q in point()) {
        let s32: Vec<Vec<Vec<f32>>> = s.iter().map(|f| f.iter().map(|v| v.iter().map(|&x| x as f32).collect()).collect()).collect();
        let cats32: Vec<FrameCategory<f32>> = s32
            .iter()
            .enumerate()
            .map(|(i, f)| FrameCategory::new(Frame::new(format!("v{i}"), "dobj"), f.clone()).unwrap())
            .collect();
        let q32: Vec<f32> = q.iter().map(|&x| x as f32).collect();
        let a = likelihood(kind, &q, &categories(&s), Distance::Euclidean).unwrap().probs();
        let b = likelihood(kind, &q32, &cats32, Distance::Euclidean).unwrap().probs();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - *y as f64).abs() < 1e-4);
        }
    }
}

#[test]
fn exemplar_prefers_a_near_outlier_over_a_near_centroid() {
    // frame 0: one support next to the query, the rest far away;
    // frame 1: supports spread around a centroid close to the query
    let s = vec![
        vec![
            vec![0.4, 0.0, 0.0],
            vec![9.0, 0.0, 0.0],
            vec![9.0, 1.0, 0.0],
        ],
        vec![
            vec![1.0, 2.0, 0.0],
            vec![1.0, -2.0, 0.0],
            vec![1.0, 0.0, 2.0],
        ],
    ];
    let q = [0.0, 0.0, 0.0];
    let dem = model(ModelKind::Exemplar, &s)
        .posterior(&q)
        .unwrap()
        .probs();
    let dpm = model(ModelKind::Prototype, &s)
        .posterior(&q)
        .unwrap()
        .probs();
    assert!(dem[0] > dem[1]);
    assert!(dpm[1] > dpm[0]);
}
