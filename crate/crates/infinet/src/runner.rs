//! Epoch-level training runner and the interaction-comparison experiment.
//!
//! Runs are reference mode throughout: single-threaded, deterministic per
//! seed, with bit-identical metrics files across reruns. Wall-clock timing
//! is reported through the per-epoch callback for console display and
//! deliberately kept out of the metrics rows.

use std::time::Instant;

use infinet_core::data::{synth_blobs, Sample};
use infinet_core::layers::ParamStore;
use infinet_core::model::{build_demo_net, Network};
use infinet_core::scalar::Scalar;
use infinet_core::train::{evaluate, train_epoch, OptimState, TrainConfig};
use infinet_core::verify::interact_kinds;

use crate::error::Result;
use crate::metrics::MetricsRow;

/// Classes in every synthetic dataset.
pub const SYNTH_CLASSES: usize = 10;
/// Image side used by the hierarchical variants (CIFAR-sized).
pub const SYNTH_SIDE: usize = 32;
/// Image side used by the isotropic demo network; the comparison trades
/// resolution for wall time.
pub const DEMO_SIDE: usize = 16;
/// Demo-comparison dataset size, per class. Sized so ten epochs give the
/// optimizer enough steps to leave the uniform-prediction plateau with room
/// to climb, while a full five-seed comparison stays well inside half an
/// hour on one desktop core.
pub const DEMO_TRAIN_PER_CLASS: usize = 80;
pub const DEMO_VAL_PER_CLASS: usize = 20;
/// Batch size of the demo comparison runs.
pub const DEMO_BATCH: usize = 32;
/// Seeds for the synthetic train/validation splits; distinct seeds keep the
/// splits disjoint draws of the same distribution.
pub const SYNTH_TRAIN_SEED: u64 = 71;
pub const SYNTH_VAL_SEED: u64 = 72;

/// Deterministic synthetic train/validation split.
pub fn synth_split<T: Scalar>(
    train_per_class: usize,
    val_per_class: usize,
    side: usize,
) -> (Vec<Sample<T>>, Vec<Sample<T>>) {
    (
        synth_blobs(SYNTH_CLASSES, train_per_class, side, side, SYNTH_TRAIN_SEED),
        synth_blobs(SYNTH_CLASSES, val_per_class, side, side, SYNTH_VAL_SEED),
    )
}

/// Trains for `config.total_epochs` epochs, evaluating on `val` after each,
/// and returns one metrics row per epoch. `on_epoch` receives each finished
/// row plus the measured wall seconds of that epoch, for console reporting;
/// the rows themselves carry `wall_ms = 0` so reruns produce identical
/// files. A non-finite training loss aborts with an error naming the step.
pub fn run_training<T: Scalar, F: FnMut(&MetricsRow, f64)>(
    net: &Network,
    store: &mut ParamStore<T>,
    train: &[Sample<T>],
    val: &[Sample<T>],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<Vec<MetricsRow>> {
    config.validate()?;
    let steps_per_epoch = train.len().div_ceil(config.batch_size.max(1)) as u64;
    let mut state = OptimState::new(store);
    let mut rows = Vec::with_capacity(config.total_epochs);
    for epoch in 0..config.total_epochs {
        let started = Instant::now();
        let stats = train_epoch(net, store, &mut state, train, config, epoch)?;
        let val_acc = evaluate(net, store, val, config.batch_size)?;
        let row = MetricsRow {
            epoch: epoch + 1,
            step: (epoch as u64 + 1) * steps_per_epoch,
            lr: stats.lr,
            train_loss: stats.train_loss,
            train_acc: stats.train_acc,
            val_acc,
            wall_ms: 0,
        };
        on_epoch(&row, started.elapsed().as_secs_f64());
        rows.push(row);
    }
    Ok(rows)
}

/// One finished demo-comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub kind: &'static str,
    pub seed: u64,
    pub final_val_acc: f64,
}

pub const DEMO_CSV_HEADER: &str = "kind,seed,final_val_acc";

/// Renders demo-comparison results as CSV, LF-terminated.
pub fn demo_csv(rows: &[DemoRow]) -> String {
    let mut out = String::from(DEMO_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.kind, row.seed, row.final_val_acc));
    }
    out
}

/// Training configuration of one demo run. Augmentation is off: the task is
/// translation-tolerant by construction and ten epochs leave no time to
/// amortize the extra noise a shifted crop injects.
pub fn demo_train_config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        augment: false,
        ..TrainConfig::desk(epochs, DEMO_BATCH, seed)
    }
}

/// Trains the five interaction variants for `num_seeds` seeds each on the
/// given split and reports the final validation accuracy of every run.
/// Per seed, all five networks start from identical weights (the kinds are
/// parameter-free) and see identical batch schedules, so the interaction
/// operator is the only difference. `on_run` receives each finished row
/// and its wall seconds.
pub fn demo_compare<T: Scalar, F: FnMut(&DemoRow, f64)>(
    train: &[Sample<T>],
    val: &[Sample<T>],
    epochs: usize,
    num_seeds: u64,
    mut on_run: F,
) -> Result<Vec<DemoRow>> {
    let mut rows = Vec::new();
    for kind in interact_kinds() {
        for seed in 0..num_seeds {
            let started = Instant::now();
            let mut store = ParamStore::<T>::new();
            let net = build_demo_net(kind, SYNTH_CLASSES, &mut store, seed)?;
            let config = demo_train_config(epochs, seed);
            let metrics = run_training(&net, &mut store, train, val, &config, |_, _| {})?;
            let final_val_acc = match metrics.last() {
                Some(last) => last.val_acc,
                None => evaluate(&net, &store, val, DEMO_BATCH)?,
            };
            let row = DemoRow {
                kind: kind.name(),
                seed,
                final_val_acc,
            };
            on_run(&row, started.elapsed().as_secs_f64());
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Median final validation accuracy per kind, in the fixed kind order.
pub fn median_by_kind(rows: &[DemoRow]) -> Vec<(&'static str, f64)> {
    interact_kinds()
        .iter()
        .map(|kind| {
            let mut accs: Vec<f64> = rows
                .iter()
                .filter(|r| r.kind == kind.name())
                .map(|r| r.final_val_acc)
                .collect();
            accs.sort_by(f64::total_cmp);
            let median = if accs.is_empty() {
                f64::NAN
            } else if accs.len() % 2 == 1 {
                accs[accs.len() / 2]
            } else {
                0.5 * (accs[accs.len() / 2 - 1] + accs[accs.len() / 2])
            };
            (kind.name(), median)
        })
        .collect()
}
