//! Parallel episode collection.

use std::thread;

use spacearm::marl::{Episode, MultiAgentEnv, Trainer};
use spacearm::Result;

/// Collects the next iteration's episodes on up to `workers` threads.
///
/// Each episode depends only on its seed and the (read-only) actors, so the
/// result is the same for every worker count.
pub fn collect<E: MultiAgentEnv>(trainer: &Trainer<E>, workers: usize) -> Result<Vec<Episode>> {
    let seeds = trainer.rollout_seeds();
    let workers = workers.clamp(1, seeds.len().max(1));
    if workers == 1 {
        return seeds.iter().map(|&s| trainer.collect_episode(s)).collect();
    }
    let mut slots: Vec<Option<Result<Episode>>> = (0..seeds.len()).map(|_| None).collect();
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let seeds = &seeds;
                scope.spawn(move || {
                    (w..seeds.len()).step_by(workers).map(|i| (i, trainer.collect_episode(seeds[i]))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, ep) in h.join().expect("rollout worker panicked") {
                slots[i] = Some(ep);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every seed collected")).collect()
}
