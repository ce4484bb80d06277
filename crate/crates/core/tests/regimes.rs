//! Monte-Carlo checks of how each metric reacts to the baseline generators.

mod common;

use synthpriv::attacks::{aia_run, mia_run, AiaConfig, MiaConfig, QidMode};
use synthpriv::baselines::{
    gen_independent, gen_perturb, sample_population, CategoricalSpec, MixtureComponent, PopulationSpec,
};
use synthpriv::dataset::Table;
use synthpriv::metrics::{dcr_suite, nndr_suite, Thresholds};

use common::{draw, encode_with_first};

#[test]
fn independent_draws_split_evenly_between_train_and_holdout() {
    let (train, holdout, synth) = (draw(2000, 1), draw(2000, 2), draw(2000, 3));
    let enc = encode_with_first(&[&train, &holdout, &synth]);
    let r = dcr_suite(&enc[0], &enc[1], &enc[2], &Thresholds::default(), 0).unwrap();
    assert!(
        (r.share_closer_to_train - 0.5).abs() <= 0.1,
        "{}",
        r.share_closer_to_train
    );
}

#[test]
fn independent_draws_keep_nndr_consistent() {
    let (train, holdout, synth) = (draw(1500, 11), draw(1500, 12), draw(1500, 13));
    let enc = encode_with_first(&[&train, &holdout, &synth]);
    let r = nndr_suite(&enc[0], &enc[1], &enc[2], &Thresholds::default()).unwrap();
    assert!(r.verdicts.train_holdout_consistent, "{r:?}");
    assert!(!r.verdicts.leak_suspected);
}

/// Copies with tiny noise sit almost on top of their training row, so the
/// nearest training neighbor is much closer than the second: the train-side
/// ratio collapses towards 0 while the holdout side stays typical.
#[test]
fn tiny_noise_copy_raises_leak_flag() {
    let train = draw(1500, 21);
    let holdout = draw(1500, 22);
    let synth = gen_perturb(&train, 0.001, 23).unwrap();
    let enc = encode_with_first(&[&train, &holdout, &synth]);
    let r = nndr_suite(&enc[0], &enc[1], &enc[2], &Thresholds::default()).unwrap();
    assert!(r.train_synth.median + 0.5 < r.holdout_synth.median, "{r:?}");
    assert!(r.verdicts.leak_suspected);
    assert!(!r.verdicts.train_holdout_consistent);
}

#[test]
fn single_gaussian_triplets_have_matching_nndr() {
    let spec = |seed| PopulationSpec {
        numeric_columns: vec!["x".into(), "y".into()],
        components: vec![MixtureComponent {
            weight: 1.0,
            mean: vec![0.0, 0.0],
            variance: vec![1.0, 1.0],
        }],
        categorical_columns: vec![],
        n_rows: 2000,
        seed,
    };
    let tables: Vec<Table> = (31..34).map(|s| sample_population(&spec(s)).unwrap()).collect();
    let enc = encode_with_first(&[&tables[0], &tables[1], &tables[2]]);
    let r = nndr_suite(&enc[0], &enc[1], &enc[2], &Thresholds::default()).unwrap();
    let medians = [
        r.train_synth.median,
        r.holdout_synth.median,
        r.train_train.median,
        r.synth_synth.median,
    ];
    let spread = medians.iter().cloned().fold(f64::MIN, f64::max) - medians.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.05, "{medians:?}");
}

#[test]
fn tiny_noise_fails_the_train_train_comparison() {
    let train = draw(1000, 41);
    let holdout = draw(1000, 42);
    let synth = gen_perturb(&train, 0.001, 43).unwrap();
    let enc = encode_with_first(&[&train, &holdout, &synth]);
    let r = dcr_suite(&enc[0], &enc[1], &enc[2], &Thresholds::default(), 0).unwrap();
    assert!(r.train_synth.median * 10.0 < r.train_train.median, "{r:?}");
    assert!(!r.verdicts.train_train_below_train_synth);
    assert!(!r.verdicts.share_closer_to_train);
}

#[test]
fn copy_is_graded_poor() {
    let train = draw(1000, 51);
    let holdout = draw(300, 52);
    let r = mia_run(&train, &holdout, &train, &MiaConfig::default()).unwrap();
    assert_eq!(r.grade, synthpriv::attacks::Grade::Poor);
}

#[test]
fn column_bootstrap_behaves_like_a_non_member() {
    let train = draw(1000, 61);
    let holdout = draw(400, 62);
    let synth = gen_independent(&train, 63).unwrap();
    let cfg = MiaConfig {
        n_trials: 20,
        ..MiaConfig::default()
    };
    let r = mia_run(&train, &holdout, &synth, &cfg).unwrap();
    assert!((r.avg_accuracy - 0.5).abs() <= 0.05, "{}", r.avg_accuracy);
}

/// A binary column fully determined by the mixture component: recoverable
/// from the numeric quasi-identifiers until the bootstrap breaks the link.
#[test]
fn column_bootstrap_reduces_aia_to_the_marginal_guess() {
    let spec = PopulationSpec {
        numeric_columns: vec!["x".into(), "y".into()],
        components: vec![
            MixtureComponent {
                weight: 0.5,
                mean: vec![0.0, 0.0],
                variance: vec![1.0, 1.0],
            },
            MixtureComponent {
                weight: 0.5,
                mean: vec![6.0, 6.0],
                variance: vec![1.0, 1.0],
            },
        ],
        categorical_columns: vec![CategoricalSpec {
            name: "label".into(),
            vocabulary: vec!["p".into(), "q".into()],
            probabilities: vec![0.5, 0.5],
            component_probabilities: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
        }],
        n_rows: 3000,
        seed: 71,
    };
    let real = sample_population(&spec).unwrap();
    let fresh = sample_population(&PopulationSpec {
        seed: 72,
        ..spec.clone()
    })
    .unwrap();
    let mut cfg = AiaConfig::new(QidMode::FixedQids(vec!["x".into(), "y".into()]));
    cfg.n_attack_records = Some(2000);
    let accuracy = |synth: &Table| aia_run(&real, synth, &cfg).unwrap().per_column[0].accuracy;
    let faithful = accuracy(&fresh);
    let broken = accuracy(&gen_independent(&real, 73).unwrap());
    assert!(faithful > 0.99, "{faithful}");
    assert!((broken - 0.5).abs() <= 0.05, "{broken}");
}
