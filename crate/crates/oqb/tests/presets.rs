use oqb::config::{FigureKind, Mode, RunConfig};
use oqb::presets::{preset, PRESETS};

#[test]
fn every_figure_has_a_valid_preset() {
    assert_eq!(PRESETS.len(), 16);
    for (k, (id, json)) in PRESETS.iter().enumerate() {
        assert_eq!(*id, format!("fig{:02}", k + 1));
        let c = RunConfig::from_json(json).unwrap_or_else(|e| panic!("{id}: {e}"));
        let fig = c.figure.as_ref().unwrap();
        assert_eq!(&fig.id, id);
        let mode = match fig.kind {
            FigureKind::Trajectory => Mode::Eval,
            FigureKind::Sweep => Mode::Sweep,
            FigureKind::Metrics => Mode::Train,
        };
        c.validate(mode).unwrap_or_else(|e| panic!("{id}: {e}"));
    }
}

#[test]
fn captions_are_encoded() {
    let load = |id| RunConfig::from_json(preset(id).unwrap()).unwrap();
    let p = load("fig01").point;
    assert_eq!((p.lambda, p.gamma0, p.delta), (0.1, 0.1, 2.0));
    let c = load("fig04");
    assert_eq!(
        (c.point.lambda, c.point.gamma0, c.point.delta),
        (1.0, 0.1, 2.0)
    );
    assert_eq!(c.temperatures, [0.0, 1.0]);
    assert_eq!(c.figure.unwrap().column, "kappa");
    let p = load("fig07").point;
    assert_eq!((p.lambda, p.gamma0, p.delta), (0.1, 0.1, 4.0));
    let c = load("fig13");
    let b: Vec<_> = c.baselines.iter().map(|b| (b.kappa, b.eta)).collect();
    assert_eq!(b, [(5.0, 100.0), (10.0, 100.0)]);
    assert_eq!(load("fig15").train.n_updates, 10_000);
    assert_eq!(load("fig16").figure.unwrap().column, "actor_loss");
    assert!(preset("fig17").is_none());
}
