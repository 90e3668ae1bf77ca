use oqb::parallel::{map_ordered, worker_count, ThreadedSource, THREADS_VAR};
use oqb_core::ddpg::{EpisodeSource, GenerationSpec, Sequential};
use oqb_core::env::EnvConfig;
use oqb_core::neural::ActorNet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sixteen_workers_match_sequential_generation() {
    let actor = ActorNet::new(&mut ChaCha8Rng::seed_from_u64(9));
    let spec = GenerationSpec {
        env: EnvConfig {
            t_end: 1.0,
            ..EnvConfig::default()
        },
        sigma: 0.1,
        step_bound: 0.02,
    };
    let seeds: Vec<u64> = (0..40).map(|k| 1000 + 7 * k).collect();
    let reference: Vec<_> = Sequential.generate(&actor, &spec, &seeds);
    let threaded = ThreadedSource::new(16).generate(&actor, &spec, &seeds);
    assert_eq!(threaded.len(), reference.len());

    let key = |e: &oqb_core::ddpg::Episode| {
        let mut bits: Vec<u64> = vec![e.seed];
        for t in &e.transitions {
            bits.extend(t.s.0.iter().chain(&t.a).chain([&t.r]).map(|x| x.to_bits()));
        }
        bits
    };
    let ok = |v: Vec<oqb_core::Result<oqb_core::ddpg::Episode>>| {
        let mut keys: Vec<_> = v
            .into_iter()
            .filter_map(|r| r.ok())
            .map(|e| key(&e))
            .collect();
        keys.sort();
        keys
    };
    let (a, b) = (ok(reference), ok(threaded));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn ordered_map_preserves_input_order() {
    let items: Vec<u32> = (0..103).collect();
    for w in [1, 2, 7, 16, 200] {
        assert_eq!(
            map_ordered(&items, w, |x| x * 3),
            items.iter().map(|x| x * 3).collect::<Vec<_>>()
        );
    }
    assert!(map_ordered(&Vec::<u32>::new(), 4, |x| *x).is_empty());
}

#[test]
fn thread_cap_from_environment() {
    // The only test in this binary that touches the variable.
    std::env::remove_var(THREADS_VAR);
    assert_eq!(worker_count(Some(5)), 5);
    std::env::set_var(THREADS_VAR, "2");
    assert_eq!(worker_count(Some(5)), 2);
    assert_eq!(worker_count(Some(1)), 1);
    assert!(worker_count(None) <= 2);
    std::env::set_var(THREADS_VAR, "zero");
    assert_eq!(worker_count(Some(3)), 3);
    std::env::remove_var(THREADS_VAR);
    assert!(worker_count(None) >= 1);
}
