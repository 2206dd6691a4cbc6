//! Library results checked against independent computations.

use objprop::info_gain::{emulate_continuous_posterior, expected_categorical_entropy};
use objprop::mixture::{discretize, estimate_mixture_weights, mixture_from_pmf};
use objprop::reference::{parse_edge_translations, ReferenceData};
use objprop::{CategoricalBelief, ConfusionMatrix, ContinuousBelief, Grid, Node, NetworkState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("l{i}")).collect()
}

fn h(p: &[f64]) -> f64 {
    p.iter().filter(|x| **x > 0.0).map(|x| -x * x.log2()).sum()
}

#[test]
fn expected_entropy_matches_sampling_with_unequal_rows() {
    let c = ConfusionMatrix::new(vec![vec![0.9, 0.1, 0.0], vec![0.1, 0.5, 0.4], vec![0.0, 0.4, 0.6]]).unwrap();
    let prior = CategoricalBelief::new(labels(3), vec![0.2, 0.5, 0.3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let mut total = 0.0;
    for _ in 0..n {
        let pick = |rng: &mut ChaCha8Rng, p: &[f64]| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, x) in p.iter().enumerate() {
                acc += x;
                if u < acc {
                    return i;
                }
            }
            p.len() - 1
        };
        let truth = pick(&mut rng, prior.probs());
        let report = pick(&mut rng, c.row(truth));
        total += h(c.row(report));
    }
    let mc = total / n as f64;
    let analytic = expected_categorical_entropy(&prior, &c).unwrap();
    assert!((mc - analytic).abs() < 0.05, "{mc} vs {analytic}");
    // the rows differ, so this is not a constant
    assert!((h(c.row(0)) - h(c.row(1))).abs() > 0.5);
}

#[test]
fn convolution_matches_closed_form_two_gaussians() {
    // N(60, 8) mixed with N(140, 12), blurred by sigma 6: each component
    // widens to sqrt(s^2 + 36).
    let grid = Grid::new(0.0, 200.0, 2048).unwrap();
    let dens = |x: f64, m: f64, s: f64| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    let v: Vec<f64> = grid.centers().map(|x| 0.3 * dens(x, 60.0, 8.0) + 0.7 * dens(x, 140.0, 12.0)).collect();
    let pdf = ContinuousBelief::from_values(grid, &v).unwrap();
    let out = emulate_continuous_posterior(&pdf, 6.0).unwrap();
    let (s1, s2) = ((64.0f64 + 36.0).sqrt(), (144.0f64 + 36.0).sqrt());
    for (i, x) in grid.centers().enumerate().step_by(37) {
        let expected = 0.3 * dens(x, 60.0, s1) + 0.7 * dens(x, 140.0, s2);
        assert!((out.density()[i] - expected).abs() < 1e-4, "x={x}");
    }
}

#[test]
fn em_inverts_discretized_mixture() {
    let data = ReferenceData::defaults();
    let comps = data.tables.components(Node::Elasticity).unwrap();
    let w = vec![0.05, 0.1, 0.2, 0.15, 0.1, 0.25, 0.1, 0.05];
    let pmf = CategoricalBelief::new(comps.labels.clone(), w.clone()).unwrap();
    let pdf = discretize(&mixture_from_pmf(&pmf, &comps).unwrap(), &data.grids.elasticity).unwrap();
    let est = estimate_mixture_weights(&pdf, &comps).unwrap();
    // overlapping components make EM slow; 500 iterations recover the
    // weights to within a few percent
    for (a, b) in est.iter().zip(&w) {
        assert!((a - b).abs() < 0.05, "{est:?}");
    }
}

#[test]
fn uniform_translation_leaves_neighbors_unchanged() {
    let data = ReferenceData::defaults();
    let mut text = String::from(
        "[[edge]]\nfrom = \"category\"\nto = \"volume\"\nidentity = true\n\
         [[edge]]\nfrom = \"material\"\nto = \"density\"\nidentity = true\n\
         [[edge]]\nfrom = \"material\"\nto = \"elasticity\"\nidentity = true\n\
         [[edge]]\nfrom = \"category\"\nto = \"material\"\nmatrix = [\n",
    );
    for _ in 0..10 {
        text.push_str("[0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125],\n");
    }
    text.push_str("]\n");
    let edges = parse_edge_translations(&text, std::path::Path::new("<test>"), &data.tables).unwrap();
    let mut s = objprop::init_network(&data.tables, &edges, &data.grids).unwrap();
    let mut w = vec![0.0; 10];
    w[3] = 0.7;
    w[4] = 0.3;
    s.set_categorical(Node::Category, CategoricalBelief::new(data.tables.category_labels().to_vec(), w).unwrap())
        .unwrap();
    let before = s.material().clone();
    s.propagate_from(Node::Category).unwrap();
    for (a, b) in s.material().probs().iter().zip(before.probs()) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn load_dir_overrides_only_given_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("grids.toml"),
        "[elasticity]\nlower_kpa = 0.0\nupper_kpa = 300.0\nbins = 512\n\
         [density]\nlower_kg_m3 = 0.0\nupper_kg_m3 = 12000.0\nbins = 1024\n\
         [volume]\nlower_cm3 = 0.0\nupper_cm3 = 500.0\nbins = 256\n",
    )
    .unwrap();
    let loaded = ReferenceData::load_dir(dir.path()).unwrap();
    assert_eq!(loaded.grids.elasticity.bins(), 512);
    assert_eq!(loaded.grids.volume.upper(), 500.0);
    assert_eq!(loaded.tables, ReferenceData::defaults().tables);
    let s = NetworkState::from_reference(&loaded).unwrap();
    assert!((s.elasticity().integral() - 1.0).abs() < 1e-9);
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("grids.toml"),
        "[elasticity]\nlower_kpa = 0.0\nupper_kpa = 200.0\nbins = 1024\nunits = \"psi\"\n",
    )
    .unwrap();
    assert!(ReferenceData::load_dir(dir.path()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn expected_entropy_is_weighted_row_entropy(
        raw in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 4), 4),
        prior in prop::collection::vec(0.01f64..1.0, 4),
    ) {
        let rows: Vec<Vec<f64>> = raw.iter().map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        }).collect();
        let c = ConfusionMatrix::new(rows.clone()).unwrap();
        let pmf = CategoricalBelief::from_weights(labels(4), &prior).unwrap();
        // q_i = sum_j p_j C(j, i), then sum_i q_i H(row i)
        let q: Vec<f64> = (0..4).map(|i| (0..4).map(|j| pmf.probs()[j] * rows[j][i]).sum()).collect();
        let oracle: f64 = (0..4).map(|i| q[i] * h(&rows[i])).sum();
        let got = expected_categorical_entropy(&pmf, &c).unwrap();
        prop_assert!((got - oracle).abs() < 1e-12);
    }

    #[test]
    fn em_weights_form_a_simplex(w in prop::collection::vec(0.0f64..1.0, 8)) {
        prop_assume!(w.iter().sum::<f64>() > 0.01);
        let data = ReferenceData::defaults();
        let comps = data.tables.components(Node::Density).unwrap();
        let pmf = CategoricalBelief::from_weights(comps.labels.clone(), &w).unwrap();
        let pdf = discretize(&mixture_from_pmf(&pmf, &comps).unwrap(), &data.grids.density).unwrap();
        let est = estimate_mixture_weights(&pdf, &comps).unwrap();
        prop_assert!(est.iter().all(|x| *x >= 0.0));
        prop_assert!((est.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
