use neuroglue::cnf::{random_ksat, write_dimacs_file};
use neuroglue::datagen::{build_dataset, load_dataset, DatagenConfig};
use neuroglue::net::{load_weights, save_weights, HyperParams, NeuroOracle};
use neuroglue::solver::{solve, Budget, WarmUp};
use neuroglue::train::{mean_kl, train_supervised, SupervisedConfig};
use neuroglue::SolverConfig;

#[test]
fn dataset_to_weights_to_solver() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, data) = (dir.path().join("inst"), dir.path().join("data"));
    std::fs::create_dir_all(&inst).unwrap();
    let formulas: Vec<_> = (0..6).map(|s| random_ksat(80, 341, 3, s).unwrap()).collect();
    for (i, f) in formulas.iter().enumerate() {
        write_dimacs_file(f, inst.join(format!("r{i}.cnf"))).unwrap();
    }
    let cfg = DatagenConfig {
        conflicts: 5_000,
        dump_interval: None,
        ..DatagenConfig::default()
    };
    let report = build_dataset(&inst, &data, &cfg).unwrap();
    let examples = load_dataset(&data).unwrap();
    assert_eq!(examples.len(), report.manifest.len());
    assert!(!examples.is_empty());

    let h = HyperParams::supervised();
    let tcfg = SupervisedConfig {
        epochs: 2,
        ..SupervisedConfig::default()
    };
    let trained = train_supervised(&examples, &h, &tcfg).unwrap();
    assert!(mean_kl(&trained.params, &h, &examples).unwrap().is_finite());
    let path = dir.path().join("w.ngw");
    save_weights(&trained.params, &h, &path).unwrap();
    let (params, hyper) = load_weights(&path).unwrap();
    let oracle = NeuroOracle { params, hyper };

    let mut scfg = SolverConfig::default();
    scfg.refocus.warmup = WarmUp::Conflicts(10);
    scfg.refocus.schedule.base = 50;
    scfg.refocus.glue_margin = 0.0;
    let mut refocuses = 0;
    for f in &formulas {
        let plain = solve(f, SolverConfig::default(), Budget::unlimited(), None);
        let guided = solve(f, scfg.clone(), Budget::unlimited(), Some(&oracle));
        assert_eq!(plain.status, guided.status);
        if let Some(m) = &guided.model {
            assert!(f.is_satisfied_by(m));
        }
        refocuses += guided.stats.refocuses;
    }
    assert!(refocuses > 0);
}
