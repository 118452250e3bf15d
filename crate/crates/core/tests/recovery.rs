use trenchbt::evaluate::{run_validation, LambdaChoice, Lambdas};
use trenchbt::external::{rank_auc, run_external_eval, AccoladeSlice};
use trenchbt::pipeline::synth_accolades;
use trenchbt::stats::spearman;
use trenchbt::synth::{synth_generate, SynthConfig, SynthOutput};
use trenchbt::{BinaryFit, OutcomeClass, Role, SeverityWeights, SolverOptions, ValidationConfig};

fn mid(seed: u64) -> SynthOutput {
    let cfg = SynthConfig { n_rushers: 120, n_blockers: 80, ..SynthConfig::with_interactions(20_000, seed) };
    synth_generate(&cfg).unwrap()
}

#[test]
fn improvements_positive_across_seeds() {
    for seed in 0..5 {
        let out = mid(seed);
        let rep = run_validation(&out.table, &ValidationConfig::default()).unwrap();
        assert_eq!(rep.rows.len(), 4);
        for r in &rep.rows {
            assert!(r.improvement > 0.0, "seed {seed}: {r:?}");
        }
    }
}

#[test]
fn fitted_effects_track_the_generator() {
    let out = mid(11);
    let fit = BinaryFit::fit(&out.table, 2.0, &SolverOptions::default()).unwrap();
    for role in Role::BOTH {
        let truth = out.truth.effects(role);
        let (a, b): (Vec<f64>, Vec<f64>) = fit.ratings(role).iter().map(|(id, v)| (*v, truth[id])).unzip();
        let rho = spearman(&a, &b).unwrap();
        assert!(rho > 0.8, "{role}: {rho}");
    }
    assert!((fit.delta - out.truth.delta).abs() < 0.15, "delta {}", fit.delta);
}

#[test]
fn held_out_rows_never_touch_the_fits() {
    let out = mid(12);
    let cfg = ValidationConfig { lambda: LambdaChoice::Fixed(Lambdas { win: 2.0, severity: 2.0 }), ..Default::default() };
    let a = run_validation(&out.table, &cfg).unwrap();
    let n_train = a.n_train;
    let scrambled = out
        .table
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut r = r.clone();
            if i >= n_train {
                r.win_target = !r.win_target;
                r.severity = OutcomeClass::Sack;
            }
            r
        })
        .collect();
    let b = run_validation(&scrambled, &cfg).unwrap();
    assert_eq!(a.win_fit.rusher_effects, b.win_fit.rusher_effects);
    assert_eq!(a.severity_fit.classes, b.severity_fit.classes);
    assert_ne!(a.rows, b.rows);
}

#[test]
fn generator_accolades_are_recovered() {
    let cfg = SynthConfig { n_rushers: 60, n_blockers: 40, ..SynthConfig::with_interactions(30_000, 13) };
    let out = synth_generate(&cfg).unwrap();
    let labels = synth_accolades(&out.truth, 6, 6);
    let opts = SolverOptions::default();
    let win = BinaryFit::fit(&out.table, 2.0, &opts).unwrap();
    let sev = trenchbt::MultinomialFit::fit(&out.table, 2.0, &opts).unwrap();
    let w = SeverityWeights::default();
    let rep = run_external_eval(&win, &sev, &out.table, &labels, &w, 0).unwrap();
    assert_eq!(rep.rows.len(), 8);
    for r in rep.rows.iter().filter(|r| r.slice == AccoladeSlice::FirstOrSecond) {
        assert!(r.auc > 0.9, "{r:?}");
    }
    // direct check on the binary rusher slice
    let ratings = win.ratings(Role::Rusher);
    let ids: Vec<_> = ratings.keys().cloned().collect();
    let s: Vec<f64> = ids.iter().map(|id| ratings[id]).collect();
    let y: Vec<bool> = ids.iter().map(|id| labels.is_positive(id, AccoladeSlice::FirstOrSecond)).collect();
    assert!(rank_auc(&s, &y).unwrap() > 0.9);
}
