//! Episode generation fanned out over scoped worker threads.

use std::num::NonZeroUsize;
use std::thread;

use oqb_core::ddpg::{generate_episode, Episode, EpisodeSource, GenerationSpec};
use oqb_core::neural::ActorNet;
use oqb_core::Result;

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "OQB_THREADS";

/// Resolves the worker count: the request (or the machine's parallelism),
/// capped by `OQB_THREADS` when it parses as a positive integer.
pub fn worker_count(requested: Option<usize>) -> usize {
    let available = thread::available_parallelism()
        .map(NonZeroUsize::get)
        .unwrap_or(1);
    let cap = std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let n = requested.unwrap_or(available).max(1);
    match cap {
        Some(c) => n.min(c),
        None => n,
    }
}

/// Maps `f` over `items` on up to `workers` threads; output keeps input order.
pub fn map_ordered<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<U>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

/// Each worker shares the immutable actor snapshot and derives its episode
/// from the seed alone, so the output does not depend on scheduling.
#[derive(Debug, Clone, Copy)]
pub struct ThreadedSource {
    pub workers: usize,
}

impl ThreadedSource {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: workers.max(1),
        }
    }
}

impl EpisodeSource for ThreadedSource {
    fn generate(
        &mut self,
        actor: &ActorNet,
        spec: &GenerationSpec,
        seeds: &[u64],
    ) -> Vec<Result<Episode>> {
        map_ordered(seeds, self.workers, |&seed| {
            generate_episode(actor, spec, seed)
        })
    }
}
