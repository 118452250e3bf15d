use trenchbt::bootstrap::{
    end_to_end_bootstrap, point_estimates, weekly_path_bootstrap, BootstrapConfig, QuantityKey, ResampleMode,
};
use trenchbt::bt::cv_invocations;
use trenchbt::evaluate::{Lambdas, Task};
use trenchbt::synth::{synth_generate, SynthConfig};
use trenchbt::{InteractionTable, Role};

fn small(seed: u64, weeks: u32) -> InteractionTable {
    let cfg = SynthConfig {
        n_rushers: 12,
        n_blockers: 10,
        n_games: 36,
        plays_per_game: 20,
        interactions_per_play: 4,
        weeks,
        seed,
        ..Default::default()
    };
    synth_generate(&cfg).unwrap().table
}

const L: Lambdas<f64> = Lambdas { win: 1.0, severity: 1.0 };

// Kept in one test function: the CV counter is process-wide.
#[test]
fn bootstrap_never_cross_validates_and_is_reproducible() {
    let t = small(1, 18);
    let before = cv_invocations();
    let a = end_to_end_bootstrap(&t, &BootstrapConfig::new(8, 42, L)).unwrap();
    let _ = weekly_path_bootstrap(&t, &BootstrapConfig::new(2, 42, L)).unwrap();
    assert_eq!(cv_invocations(), before);

    let b = end_to_end_bootstrap(&t, &BootstrapConfig::new(8, 42, L)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = end_to_end_bootstrap(&t, &BootstrapConfig::new(8, 43, L)).unwrap();
    assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
}

#[test]
fn identity_replicate_reproduces_point_estimates() {
    let t = small(2, 18);
    let mut cfg = BootstrapConfig::new(1, 0, L);
    cfg.resample = ResampleMode::Identity;
    let s = end_to_end_bootstrap(&t, &cfg).unwrap();
    let point = point_estimates(&t, &cfg).unwrap();
    assert_eq!(s.quantities.len(), point.len());
    for q in &s.quantities {
        assert!((q.mean - point[&q.id]).abs() < 1e-10, "{}", q.id);
        assert_eq!(q.n, 1);
    }
    let imp = QuantityKey::Improvement { task: Task::Win, baseline: trenchbt::evaluate::BaselineKind::Global };
    assert!(s.get(&imp).is_some());
}

#[test]
fn path_has_one_checkpoint_per_week() {
    let t = small(3, 18);
    let mut cfg = BootstrapConfig::new(3, 9, L);
    cfg.models = vec![Task::Win];
    let s = weekly_path_bootstrap(&t, &cfg).unwrap();
    let player = t.iter().next().unwrap().rusher_id.clone();
    for week in 1..=18 {
        let key = QuantityKey::PathRating { model: Task::Win, role: Role::Rusher, player: player.clone(), week };
        let q = s.get(&key).unwrap_or_else(|| panic!("week {week} missing"));
        assert_eq!(q.n, 3);
    }
    assert_eq!(s.attempted, 18 * 3);
}

#[test]
fn empty_weeks_are_skipped() {
    // cumulative checkpoints are empty only before the first played week
    let t = small(4, 18).filter(|r| r.week > 2);
    let s = weekly_path_bootstrap(&t, &BootstrapConfig::new(2, 1, L)).unwrap();
    assert!(s.quantities.iter().all(|q| !matches!(q.id, QuantityKey::PathRating { week: 1 | 2, .. })));
    assert_eq!(s.attempted, 16 * 2);
}

#[test]
fn zero_replicates_are_rejected() {
    let t = small(5, 18);
    assert!(end_to_end_bootstrap(&t, &BootstrapConfig::new(0, 1, L)).is_err());
}
