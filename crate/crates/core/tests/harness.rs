use std::fs;

use nldd_core::harness::{
    plan, read_manifest, rerun, run_case, run_experiment, write_run, Initial, Method, Overrides,
    Problem, Split, ThetaRule, MANIFEST_FILE,
};
use nldd_core::history::{read_history_csv, HEADER};
use nldd_core::Error;

fn coarse() -> Overrides {
    Overrides {
        h: Some(vec![0.01]),
        ..Default::default()
    }
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn two_runs_write_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let run = run_experiment("dnpen-theta", &coarse()).unwrap();
        write_run(&run, d.path()).unwrap();
    }
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
}

#[test]
fn saved_manifest_replays_byte_identically() {
    for name in ["quadratic-theta", "dnpen-compare", "nilpotent-toy"] {
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        write_run(&run_experiment(name, &coarse()).unwrap(), first.path()).unwrap();
        let manifest = read_manifest(&first.path().join(MANIFEST_FILE)).unwrap();
        write_run(&rerun(&manifest).unwrap(), second.path()).unwrap();
        assert_eq!(dir_bytes(first.path()), dir_bytes(second.path()), "{name}");
    }
}

#[test]
fn written_csvs_parse_back_to_the_histories() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment("quadratic-theta", &coarse()).unwrap();
    let paths = write_run(&run, dir.path()).unwrap();
    assert_eq!(paths.len(), run.histories.len() + 1);
    for (summary, rows) in run.manifest.streams.iter().zip(&run.histories) {
        let path = dir.path().join(&summary.stream);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(HEADER));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), rows.len() + 1);
        assert_eq!(&read_history_csv(&path).unwrap(), rows);
    }
}

#[test]
fn manifest_records_the_unstated_parameters() {
    let run = run_experiment("dnpen-compare", &coarse()).unwrap();
    let m = &run.manifest;
    assert!(m.cases.iter().all(|c| match c.problem {
        Problem::Line(s) => s.alpha == 1.0,
        Problem::Plane(_) => false,
    }));
    assert!(m.cases.iter().any(|c| c.split == Split::At(vec![0.3])));
    let raspen: Vec<_> = m.cases.iter().filter(|c| c.method == Method::Raspen).collect();
    assert!(!raspen.is_empty() && raspen.iter().all(|c| c.overlap_cells == Some(4)));
    assert!(m.cases.iter().all(|c| c.initial == Initial::StraightLine));
    // the optimal theta and delta behind each "optimal" stream are echoed
    let mut echoed = 0;
    for (c, s) in m.cases.iter().zip(&m.streams) {
        if c.theta == Some(ThetaRule::Optimal) && s.failure.is_none() {
            echoed += 1;
            let q = s.optimal_theta.expect("optimal theta recorded");
            assert_eq!(Some(q.theta), s.theta);
            assert!((q.theta - 1.0 / (1.0 + q.delta)).abs() < 1e-15);
        }
    }
    assert!(echoed >= 3);
    let json = serde_json::to_value(m).unwrap();
    let plane = plan("mesh-independence-2d", &Overrides::default()).unwrap();
    let Problem::Plane(p) = plane[0].problem else { panic!("2D problem expected") };
    assert_eq!((p.u_left, p.u_right), (0.0, 20.0));
    assert!(json["cases"][0]["inner"]["tol_residual"].is_number());
}

#[test]
fn overrides_are_applied_and_echoed() {
    let ov = Overrides {
        h: Some(vec![0.02, 0.01]),
        theta: Some(vec![0.4]),
        alpha: Some(0.5),
    };
    let cases = plan("quadratic-theta", &ov).unwrap();
    // two mesh sizes x two splits x (0.4 and the optimal theta)
    assert_eq!(cases.len(), 8);
    assert!(cases.iter().any(|c| c.theta == Some(ThetaRule::Fixed(0.4))));
    let run = run_experiment("nilpotent-toy", &ov).unwrap();
    assert_eq!(run.manifest.overrides, ov);
}

#[test]
fn rejected_and_unknown_requests() {
    let theta = Overrides {
        theta: Some(vec![0.5]),
        ..Default::default()
    };
    assert!(matches!(run_experiment("dnpen-compare", &theta), Err(Error::RejectedOverride(_))));
    assert!(matches!(run_experiment("fig-1", &Overrides::default()), Err(Error::UnknownExperiment(_))));
    let off_grid = Overrides {
        h: Some(vec![0.3]),
        ..Default::default()
    };
    let run = run_experiment("nilpotent-toy", &off_grid).unwrap();
    assert!(run.manifest.streams.iter().all(|s| s.failure.is_some()));
    assert!(run.histories.iter().all(Vec::is_empty));
}

#[test]
fn diverging_method_is_recorded_not_fatal() {
    // theta = 0.9 on the asymmetric split overshoots: G'(lambda) is about -2
    let ov = Overrides {
        theta: Some(vec![0.9]),
        h: Some(vec![0.01]),
        ..Default::default()
    };
    let run = run_experiment("quadratic-theta", &ov).unwrap();
    let bad = run
        .manifest
        .cases
        .iter()
        .zip(&run.manifest.streams)
        .find(|(c, _)| c.split == Split::At(vec![0.3]) && c.theta == Some(ThetaRule::Fixed(0.9)))
        .map(|(_, s)| s)
        .unwrap();
    assert!(!bad.converged);
    // the optimal streams of the same run are unaffected
    let optimal_ok = run
        .manifest
        .cases
        .iter()
        .zip(&run.manifest.streams)
        .filter(|(c, _)| c.theta == Some(ThetaRule::Optimal))
        .all(|(_, s)| s.converged);
    assert!(optimal_ok);
}

#[test]
fn cases_are_self_contained() {
    let cases = plan("dnpen-theta", &coarse()).unwrap();
    let (rows, summary) = run_case(&cases[0]);
    let run = run_experiment("dnpen-theta", &coarse()).unwrap();
    assert_eq!(rows, run.histories[0]);
    assert_eq!(summary, run.manifest.streams[0]);
}
