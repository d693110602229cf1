use mugenforge_core::xmetrics::{
    contrastive_loss, ensemble_scores, pairwise_scores, recall_at_k, relative_similarity, true_match_rank, EmbeddingBatch,
    MetricConfig, MetricError, SimilarityMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Mean of the two softmax cross-entropies, written out term by term.
fn naive_loss(p: &[Vec<f64>], q: &[Vec<f64>], scale: f64) -> f64 {
    let n = p.len();
    let s = |i: usize, j: usize| scale * cosine(&p[i], &q[j]);
    let mut sum = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| s(i, j).exp()).sum();
        let col: f64 = (0..n).map(|j| s(j, i).exp()).sum();
        sum += (s(i, i).exp() / row).ln() + (s(i, i).exp() / col).ln();
    }
    -sum / (2.0 * n as f64)
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
                break v;
            }
        })
        .collect()
}

#[test]
fn loss_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfgs = [MetricConfig::temperature_default(), MetricConfig::from_scale(1.0, 100.0).unwrap()];
    for trial in 0..1000 {
        let n = rng.gen_range(1..=8);
        let d = rng.gen_range(1..=16);
        let (p, q) = (random_rows(&mut rng, n, d), random_rows(&mut rng, n, d));
        let cfg = &cfgs[trial % 2];
        let got = contrastive_loss(&EmbeddingBatch::from_rows(&p).unwrap(), &EmbeddingBatch::from_rows(&q).unwrap(), cfg).unwrap();
        let want = naive_loss(&p, &q, cfg.scale());
        assert!((got - want).abs() < 1e-6, "n={n} d={d}: {got} vs {want}");
    }
}

#[test]
fn loss_closed_forms() {
    let cfg = MetricConfig::from_scale(1.0, 100.0).unwrap();
    let one = EmbeddingBatch::from_rows(&[vec![0.3, -2.0]]).unwrap();
    let other = EmbeddingBatch::from_rows(&[vec![5.0, 1.0]]).unwrap();
    assert_eq!(contrastive_loss(&one, &other, &cfg).unwrap(), 0.0);
    assert_eq!(contrastive_loss(&one, &other, &MetricConfig::temperature_default()).unwrap(), 0.0);

    let e = EmbeddingBatch::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let want = (1.0 + (-1.0f64).exp()).ln();
    assert!((contrastive_loss(&e, &e, &cfg).unwrap() - want).abs() < 1e-6);
}

#[test]
fn default_temperature_scale() {
    let cfg = MetricConfig::temperature_default();
    assert!((cfg.scale() - 1.0 / 0.07).abs() < 1e-9);
    assert_eq!(MetricConfig::new(10.0, 100.0).unwrap().scale(), 100.0);
}

#[test]
fn large_scales_stay_finite() {
    let cfg = MetricConfig::from_scale(100.0, 100.0).unwrap();
    let p = EmbeddingBatch::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
    let q = EmbeddingBatch::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let loss = contrastive_loss(&p, &q, &cfg).unwrap();
    assert!(loss.is_finite());
    assert!((loss - 200.0).abs() < 1e-9);
}

#[test]
fn errors_are_reported() {
    let cfg = MetricConfig::temperature_default();
    let a = EmbeddingBatch::from_rows(&[vec![1.0, 0.0]]).unwrap();
    let b = EmbeddingBatch::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
    assert_eq!(pairwise_scores(&a, &b, &cfg), Err(MetricError::DimensionMismatch));
    let z = EmbeddingBatch::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
    assert_eq!(pairwise_scores(&z, &z, &cfg), Err(MetricError::ZeroNormVector(1)));
    let s = SimilarityMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert_eq!(recall_at_k(&s, &[0]), Err(MetricError::BadK(0)));
    assert_eq!(recall_at_k(&s, &[3]), Err(MetricError::BadK(3)));
    assert_eq!(relative_similarity(&[], &[]), Err(MetricError::EmptyInput));
    assert_eq!(relative_similarity(&[1.0], &[0.0]), Err(MetricError::ZeroDenominator));
}

#[test]
fn relative_similarity_trivial_cases() {
    assert_eq!(relative_similarity(&[0.8, 0.6], &[0.8, 0.6]).unwrap(), 1.0);
    assert_eq!(relative_similarity(&[0.5, 0.25], &[1.0, 0.5]).unwrap(), 0.5);
}

#[test]
fn ensemble_can_rank_truth_first_when_each_view_fails() {
    // Each view ranks a wrong candidate first on one query; the sum fixes both.
    let s1 = SimilarityMatrix::from_rows(&[vec![0.5, 0.6], vec![0.0, 1.0]]).unwrap();
    let s2 = SimilarityMatrix::from_rows(&[vec![1.0, 0.0], vec![0.6, 0.5]]).unwrap();
    assert_eq!(recall_at_k(&s1, &[1]).unwrap(), [0.5]);
    assert_eq!(recall_at_k(&s2, &[1]).unwrap(), [0.5]);
    let sum = ensemble_scores(&s1, &s2).unwrap();
    assert_eq!(recall_at_k(&sum, &[1]).unwrap(), [1.0]);
    let doubled = ensemble_scores(&s1, &s1).unwrap();
    assert!(doubled.as_slice().iter().zip(s1.as_slice()).all(|(d, s)| *d == 2.0 * s));
}

fn matrix(n: usize) -> impl Strategy<Value = SimilarityMatrix> {
    proptest::collection::vec(-3i32..3, n * n)
        .prop_map(move |v| SimilarityMatrix::new(n, n, v.into_iter().map(f64::from).collect()).unwrap())
}

/// Rank by sorting candidates: higher score first, lower index first on ties.
fn sorted_rank(s: &SimilarityMatrix, i: usize) -> usize {
    let mut order: Vec<usize> = (0..s.cols()).collect();
    order.sort_by(|&a, &b| s.get(i, b).partial_cmp(&s.get(i, a)).unwrap().then(a.cmp(&b)));
    order.iter().position(|&j| j == i).unwrap()
}

proptest! {
    #[test]
    fn recall_is_monotone_and_complete(s in (10usize..40).prop_flat_map(matrix)) {
        let r = recall_at_k(&s, &[1, 5, 10, s.rows()]).unwrap();
        prop_assert!(r[0] <= r[1] && r[1] <= r[2]);
        prop_assert_eq!(r[3], 1.0);
        for i in 0..s.rows() {
            prop_assert_eq!(true_match_rank(&s, i), sorted_rank(&s, i));
        }
        let direct = (0..s.rows()).filter(|&i| sorted_rank(&s, i) < 5).count() as f64 / s.rows() as f64;
        prop_assert_eq!(r[1], direct);
    }

    #[test]
    fn ensembling_with_zero_is_identity(s in (1usize..12).prop_flat_map(matrix)) {
        let zero = SimilarityMatrix::new(s.rows(), s.cols(), vec![0.0; s.rows() * s.cols()]).unwrap();
        prop_assert_eq!(&ensemble_scores(&s, &zero).unwrap(), &s);
        prop_assert_eq!(&ensemble_scores(&zero, &s).unwrap(), &s);
    }

    #[test]
    fn scores_are_scaled_cosines(
        p in proptest::collection::vec(proptest::collection::vec(0.1f64..1.0, 4), 1..6),
        q in proptest::collection::vec(proptest::collection::vec(0.1f64..1.0, 4), 1..6),
    ) {
        let cfg = MetricConfig::temperature_default();
        let s = pairwise_scores(&EmbeddingBatch::from_rows(&p).unwrap(), &EmbeddingBatch::from_rows(&q).unwrap(), &cfg).unwrap();
        for i in 0..p.len() {
            for j in 0..q.len() {
                prop_assert!((s.get(i, j) - cfg.scale() * cosine(&p[i], &q[j])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn relative_similarity_is_a_ratio_of_means(
        pairs in proptest::collection::vec((-1.0f64..1.0, 0.1f64..1.0), 1..50),
    ) {
        let (out, gt): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = out.len() as f64;
        let want = (out.iter().sum::<f64>() / n) / (gt.iter().sum::<f64>() / n);
        prop_assert!((relative_similarity(&out, &gt).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn loss_is_invariant_under_joint_permutation_and_swap(
        n in 1usize..7,
        seed in any::<u64>(),
        rescale in 0.1f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (random_rows(&mut rng, n, 5), random_rows(&mut rng, n, 5));
        let cfg = MetricConfig::temperature_default();
        let loss = |p: &[Vec<f64>], q: &[Vec<f64>]| {
            contrastive_loss(&EmbeddingBatch::from_rows(p).unwrap(), &EmbeddingBatch::from_rows(q).unwrap(), &cfg).unwrap()
        };
        let base = loss(&p, &q);
        let mut order: Vec<usize> = (0..n).collect();
        order.rotate_left(seed as usize % n);
        let pp: Vec<Vec<f64>> = order.iter().map(|&i| p[i].clone()).collect();
        let qp: Vec<Vec<f64>> = order.iter().map(|&i| q[i].clone()).collect();
        prop_assert!((loss(&pp, &qp) - base).abs() < 1e-9);
        prop_assert!((loss(&q, &p) - base).abs() < 1e-9);

        let scaled: Vec<Vec<f64>> = p.iter().map(|r| r.iter().map(|x| x * rescale).collect()).collect();
        let a = pairwise_scores(&EmbeddingBatch::from_rows(&p).unwrap(), &EmbeddingBatch::from_rows(&q).unwrap(), &cfg).unwrap();
        let b = pairwise_scores(&EmbeddingBatch::from_rows(&scaled).unwrap(), &EmbeddingBatch::from_rows(&q).unwrap(), &cfg).unwrap();
        prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() < 1e-9));
    }
}
