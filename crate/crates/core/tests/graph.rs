mod common;

use common::{rows, uniform};
use proptest::prelude::*;
use specmap::graph::{build_knn, fuzzy_weights, normalized_laplacian, symmetrize, EDGE_DROP_THRESHOLD};
use specmap::{DataMatrix, Metric};

#[test]
fn knn_matches_brute_force_on_random_5d() {
    let x = uniform(100, 5, 7);
    let nb = build_knn(&DataMatrix::new(x.clone()).unwrap(), 15, Metric::Euclidean).unwrap();
    let oracle = specmap_oracles::knn(&rows(&x), 15);
    for (i, want) in oracle.iter().enumerate() {
        assert_eq!(nb.indices.row(i).to_vec(), *want, "row {i}");
    }
}

#[test]
fn knn_matches_brute_force_with_ties() {
    // integer lattice: many equal distances
    let x = ndarray::Array2::from_shape_fn((60, 2), |(i, c)| if c == 0 { (i % 8) as f64 } else { (i / 8) as f64 });
    for k in [1, 4, 9] {
        let nb = build_knn(&DataMatrix::new(x.clone()).unwrap(), k, Metric::Euclidean).unwrap();
        let oracle = specmap_oracles::knn(&rows(&x), k);
        for (i, want) in oracle.iter().enumerate() {
            assert_eq!(nb.indices.row(i).to_vec(), *want, "k={k} row {i}");
        }
    }
}

fn points() -> impl Strategy<Value = (ndarray::Array2<f64>, usize)> {
    (8usize..60, 1usize..5, 2usize..7, any::<u64>()).prop_map(|(n, m, k, seed)| (uniform(n, m, seed), k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knn_equals_oracle((x, k) in points()) {
        let nb = build_knn(&DataMatrix::new(x.clone()).unwrap(), k, Metric::Euclidean).unwrap();
        let oracle = specmap_oracles::knn(&rows(&x), k);
        for (i, want) in oracle.iter().enumerate() {
            prop_assert_eq!(nb.indices.row(i).to_vec(), want.clone());
            prop_assert!(nb.distances.row(i).windows(2).into_iter().all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn fuzzy_weight_invariants((x, k) in points()) {
        let nb = build_knn(&DataMatrix::new(x).unwrap(), k, Metric::Euclidean).unwrap();
        let dw = fuzzy_weights(&nb).unwrap();
        let target = (k as f64).log2();
        for i in 0..nb.n() {
            let row = dw.weights.row(i);
            prop_assert_eq!(row.iter().cloned().fold(0.0, f64::max), 1.0);
            prop_assert_eq!(row[0], 1.0);
            let sum: f64 = row.sum();
            prop_assert!(sum >= target - 0.1 && sum <= target + 1.1, "sum {} target {}", sum, target);
        }
        let g = symmetrize(&dw);
        let dense = g.to_dense();
        for i in 0..nb.n() {
            prop_assert!(g.degree()[i] > 0.0);
            for (c, &j) in dw.indices.row(i).iter().enumerate() {
                // weights under the drop threshold are pruned
                let w = dw.weights[[i, c]];
                prop_assert!(w < EDGE_DROP_THRESHOLD || dense[[i, j]] >= w - 1e-15, "i {} j {}", i, j);
            }
        }
        for e in g.edges() {
            prop_assert!(e.i < e.j && e.w > 0.0 && e.w <= 1.0);
        }
    }

    #[test]
    fn laplacian_properties((x, k) in points(), probe_seed in any::<u64>()) {
        let nb = build_knn(&DataMatrix::new(x).unwrap(), k, Metric::Euclidean).unwrap();
        let g = symmetrize(&fuzzy_weights(&nb).unwrap());
        let l = normalized_laplacian(&g).unwrap();
        l.check_symmetric(1e-12).unwrap();
        let n = l.n();
        for i in 0..n {
            prop_assert_eq!(l.get(i, i), 1.0);
        }
        for v in rows(&uniform(10, n, probe_seed)) {
            let centered: Vec<f64> = v.iter().map(|x| x - 0.5).collect();
            prop_assert!(l.quadratic_form(&centered) >= -1e-12);
        }
        // L D^{1/2} 1 = 0 on each component; the null vector is exact whenever connected
        let mut out = vec![0.0; n];
        l.matvec(l.sqrt_degree(), &mut out);
        prop_assert!(out.iter().all(|v| v.abs() < 1e-10));
    }
}
