use driftwatch::clustering::{assign, cluster_means, kmeans_traced, KMeansParams};
use driftwatch::data::{
    load_csv, normalize, partition_batches, sample_other_family, write_csv, Dataset, FeatureVector,
};
use driftwatch::linalg::euclidean;
use driftwatch::silhouette::{avg_silhouette, detect_drift, silhouette_samples, SilhouetteSeries};
use proptest::prelude::*;

fn dataset(rows: Vec<Vec<f64>>, timestamps: Vec<i64>) -> Dataset {
    let dim = rows[0].len();
    let samples = rows
        .into_iter()
        .zip(timestamps)
        .enumerate()
        .map(|(i, (values, timestamp))| FeatureVector {
            sample_id: format!("id{i:05}"),
            timestamp,
            values,
            family: "fam".into(),
        })
        .collect();
    Dataset::new("fam", (0..dim).map(|j| format!("c{j}")).collect(), samples).unwrap()
}

fn matrix(max_rows: usize, max_dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_dim).prop_flat_map(move |dim| {
        prop::collection::vec(prop::collection::vec(-1e3f64..1e3, dim), 1..=max_rows)
    })
}

/// Straight double loop over all pairs; `labels` may use any cluster ids.
fn silhouette_oracle(points: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let n = points.len();
    let mut clusters: Vec<usize> = labels.to_vec();
    clusters.sort();
    clusters.dedup();
    (0..n)
        .map(|i| {
            let mean_to = |c: usize, skip_self: bool| {
                let (mut s, mut cnt) = (0.0, 0usize);
                for j in 0..n {
                    if labels[j] == c && !(skip_self && j == i) {
                        let d: f64 = points[i]
                            .iter()
                            .zip(&points[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        s += d;
                        cnt += 1;
                    }
                }
                if cnt == 0 { 0.0 } else { s / cnt as f64 }
            };
            let a = mean_to(labels[i], true);
            let b = clusters
                .iter()
                .filter(|&&c| c != labels[i])
                .map(|&c| mean_to(c, false))
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 { 0.0 } else { (b - a) / m }
        })
        .collect()
}

/// Random points with a labeling that uses every cluster in `0..k`.
fn labeled_points() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, usize)> {
    (2usize..=5, 1usize..=4).prop_flat_map(|(k, dim)| {
        (k..=40).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), n),
                prop::collection::vec(0..k, n),
            )
                .prop_map(move |(pts, mut labels)| {
                    for (c, l) in labels.iter_mut().take(k).enumerate() {
                        *l = c;
                    }
                    (pts, labels, k)
                })
        })
    })
}

proptest! {
    #[test]
    fn normalization_is_idempotent_and_spans_unit_range(rows in matrix(30, 5)) {
        let n = rows.len();
        let ds = dataset(rows, (0..n as i64).collect());
        let (once, _) = normalize(&ds).unwrap();
        let (twice, _) = normalize(&once).unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
        for j in 0..ds.dim {
            let raw: Vec<f64> = ds.samples.iter().map(|s| s.values[j]).collect();
            let col: Vec<f64> = once.samples.iter().map(|s| s.values[j]).collect();
            let constant = raw.iter().all(|&v| v == raw[0]);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if constant {
                prop_assert!(col.iter().all(|&v| v == 0.0));
            } else {
                prop_assert!(lo.abs() <= 1e-12 && (hi - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn batching_is_a_prefix_partition(n in 100usize..400, half in 1usize..30, shuffle in any::<u64>()) {
        let bs = 2 * half;
        prop_assume!(n >= 2 * bs);
        // Scrambled timestamps; the dataset sorts them.
        let ts: Vec<i64> = (0..n as i64).map(|i| (i * 7919 + shuffle as i64 % 1000).rem_euclid(n as i64 * 3)).collect();
        let ds = dataset((0..n).map(|i| vec![i as f64]).collect(), ts);
        let (batches, report) = partition_batches(&ds, bs).unwrap();
        prop_assert_eq!(batches.len(), n / bs);
        prop_assert_eq!(report.dropped_remainder, n % bs);
        let flat: Vec<&str> = batches.iter().flat_map(|b| b.samples.iter().map(|s| s.sample_id.as_str())).collect();
        let prefix: Vec<&str> = ds.samples[..batches.len() * bs].iter().map(|s| s.sample_id.as_str()).collect();
        prop_assert_eq!(flat, prefix);
        for (i, b) in batches.iter().enumerate() {
            prop_assert_eq!(b.index, i + 1);
            prop_assert_eq!(b.train_half().len() + b.test_half().len(), bs);
            prop_assert_eq!(&b.samples[..half], b.train_half());
        }
    }

    #[test]
    fn silhouette_is_bounded_and_matches_oracle((pts, labels, k) in labeled_points()) {
        let got = silhouette_samples(&pts, &labels, k).unwrap();
        let want = silhouette_oracle(&pts, &labels);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((-1.0..=1.0).contains(g));
            prop_assert!((g - w).abs() <= 1e-12);
        }
        let avg = avg_silhouette(&pts, &labels, k).unwrap();
        prop_assert!((avg - want.iter().sum::<f64>() / want.len() as f64).abs() <= 1e-12);
    }

    #[test]
    fn silhouette_is_scale_invariant((pts, labels, k) in labeled_points(), c in 0.01f64..100.0) {
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * c).collect()).collect();
        let a = silhouette_samples(&pts, &labels, k).unwrap();
        let b = silhouette_samples(&scaled, &labels, k).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn raising_the_threshold_never_adds_drift(s in prop::collection::vec(-1.0f64..1.0, 2..40), t1 in 0.0f64..0.5, dt in 0.0f64..0.5) {
        let series = SilhouetteSeries { s, k_used: 2, seeds: vec![] };
        let low = detect_drift(&series, t1).unwrap();
        let high = detect_drift(&series, t1 + dt).unwrap();
        prop_assert!(high.drift_indices.iter().all(|i| low.drift_indices.contains(i)));
        prop_assert_eq!(low.d.len(), series.s.len() - 1);
        prop_assert!(low.drift_indices.iter().all(|&i| i >= 2 && i <= series.s.len()));
    }

    #[test]
    fn csv_round_trip_preserves_samples(rows in matrix(20, 4), ts in prop::collection::vec(0i64..50, 20)) {
        let n = rows.len();
        let ds = dataset(rows, ts[..n].to_vec());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fam.csv");
        write_csv(&ds, &path).unwrap();
        let (back, report) = load_csv(&path, "timestamp", "family").unwrap();
        prop_assert_eq!(report.retained_features, ds.dim);
        prop_assert_eq!(&back.feature_names, &ds.feature_names);
        prop_assert_eq!(back.samples, ds.samples);
    }

    #[test]
    fn other_family_halves_are_disjoint(n in 50usize..300, seed in any::<u64>()) {
        let ds = dataset((0..n).map(|i| vec![i as f64]).collect(), (0..n as i64).collect());
        let split = sample_other_family(&ds, 25, seed).unwrap();
        prop_assert_eq!(split.y_train.len(), 25);
        prop_assert_eq!(split.y_test.len(), 25);
        prop_assert!(split.y_train.iter().all(|a| split.y_test.iter().all(|b| a.sample_id != b.sample_id)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// At convergence every point sits with its nearest centroid and every
    /// centroid is its cluster's mean; the squared-error objective never rises.
    #[test]
    fn lloyd_converges_to_a_fixed_point(rows in matrix(60, 4), k in 1usize..5, seed in any::<u64>()) {
        prop_assume!(k <= rows.len());
        let (r, trace) = kmeans_traced(&rows, KMeansParams::new(k), seed).unwrap();
        for w in trace.inertia.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9);
        }
        prop_assert!(r.assignments.iter().all(|&a| a < k));
        let recomputed: f64 = rows.iter().zip(&r.assignments).map(|(p, &a)| euclidean(p, &r.centroids[a])).sum();
        prop_assert!((recomputed - r.distortion).abs() <= 1e-9 * recomputed.max(1.0));
        if r.converged {
            prop_assert_eq!(assign(&rows, &r.centroids), r.assignments.clone());
            let means = cluster_means(&rows, &r.assignments, k, rows[0].len());
            for (c, m) in r.centroids.iter().zip(&means) {
                prop_assert!(euclidean(c, m) < 1e-6);
            }
        }
    }
}
