//! Replica-parallel ensemble runs with deterministic seed splitting.

use crate::math::replica_seed;
use rayon::prelude::*;

/// Run `replicas` independent jobs in parallel. Replica `r` receives the
/// seed `replica_seed(master_seed, r)`; results come back ordered by
/// replica index, so reductions are deterministic.
pub fn run_replicas<T: Send>(
    replicas: usize,
    master_seed: u64,
    job: impl Fn(usize, u64) -> T + Sync,
) -> Vec<T> {
    (0..replicas)
        .into_par_iter()
        .map(|r| job(r, replica_seed(master_seed, r as u64)))
        .collect()
}
