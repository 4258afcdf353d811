use neuroglue::cnf::{brute_force, random_ksat, random_split_report, read_dimacs, write_dimacs_file};
use neuroglue::solver::{solve, Budget};
use neuroglue::{SolverConfig, Status};

#[test]
fn dimacs_file_round_trip_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..20 {
        let f = random_ksat(40, 170, 3, seed).unwrap();
        let path = dir.path().join(format!("f{seed}.cnf"));
        write_dimacs_file(&f, &path).unwrap();
        let g = read_dimacs(&path).unwrap();
        assert_eq!(f, g);
        let r = solve(&g, SolverConfig::default(), Budget::unlimited(), None);
        match r.status {
            Status::Sat => assert!(f.is_satisfied_by(r.model.as_ref().unwrap())),
            Status::Unsat => assert!(r.model.is_none()),
            Status::Unknown => panic!("unlimited budget returned unknown"),
        }
    }
}

#[test]
fn split_pieces_preserve_satisfiability() {
    for seed in 0..30 {
        let f = random_ksat(16, 68, 3, seed).unwrap();
        let truth = brute_force(&f).unwrap().is_sat();
        let report = random_split_report(&f, 20, usize::MAX, seed);
        let mut any_sat = false;
        for piece in &report.pieces {
            assert!(piece.formula.clauses.len() <= 20);
            let r = solve(&piece.formula, SolverConfig::default(), Budget::unlimited(), None);
            if let Some(m) = r.model {
                any_sat = true;
                assert!(f.is_satisfied_by(&piece.extend_model(&m, f.num_vars)));
            }
        }
        // Discarded satisfied branches also witness satisfiability.
        assert_eq!(truth, any_sat || report.trivially_sat > 0, "seed {seed}");
    }
}
