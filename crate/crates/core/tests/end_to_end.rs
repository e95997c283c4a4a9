use hammer_core::exp::{
    read_metrics, run_experiment_in, run_sweep, ExperimentConfig, SweepAxis,
};
use hammer_core::hammer::RunMode;

fn small(mode: RunMode, episodes: usize, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        mode,
        total_episodes: episodes,
        output_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    };
    c.hp_central.batch_size = 150;
    c.hp_local.batch_size = 150;
    c
}

#[test]
fn sweep_over_modes_gives_one_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(RunMode::Hammer, 3, dir.path());
    let values = SweepAxis::Mode.default_values();
    let r = run_sweep(&base, SweepAxis::Mode, &values, &[1, 2]).unwrap();
    assert_eq!(r.points.len(), 4);
    for p in &r.points {
        assert!(p.failures.is_empty());
        let agg = p.result.as_ref().unwrap();
        assert_eq!(agg.seeds, vec![1, 2]);
        assert!(agg.std_error.is_some());
    }
    let csv = std::fs::read_to_string(r.dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(std::fs::read_to_string(r.dir.join("summary.md")).unwrap().contains("centralized"));
}

#[test]
fn a_failed_run_only_poisons_its_own_cell() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(RunMode::Hammer, 2, dir.path());
    // a file where the m=4, seed=2 run directory should go makes that run fail
    let sweep_dir = dir.path().join("sweep-message-length");
    std::fs::create_dir_all(&sweep_dir).unwrap();
    std::fs::write(sweep_dir.join("hammer-nav-n3-m4-seed2"), "in the way").unwrap();

    let values: Vec<String> = ["2", "4"].iter().map(|s| s.to_string()).collect();
    let r = run_sweep(&base, SweepAxis::MessageLength, &values, &[1, 2]).unwrap();
    assert!(r.points[0].failures.is_empty());
    assert_eq!(r.points[0].result.as_ref().unwrap().scores.len(), 2);
    assert_eq!(r.points[1].failures.len(), 1);
    assert_eq!(r.points[1].failures[0].0, 2);
    let agg = r.points[1].result.as_ref().unwrap();
    assert_eq!(agg.seeds, vec![1]);
    assert_eq!(agg.std_error, None);
}

#[test]
fn repeated_sweeps_give_identical_tables() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let values: Vec<String> = vec!["2".into(), "6".into()];
    let ra = run_sweep(&small(RunMode::Hammer, 3, a.path()), SweepAxis::MessageLength, &values, &[5, 6]).unwrap();
    let rb = run_sweep(&small(RunMode::Hammer, 3, b.path()), SweepAxis::MessageLength, &values, &[5, 6]).unwrap();
    assert_eq!(ra.summary_csv(), rb.summary_csv());
}

#[test]
fn agent_count_axis_follows_the_default_message_length() {
    let base = ExperimentConfig::default();
    assert_eq!(SweepAxis::NAgents.apply(&base, "5").unwrap().message_length, 8);
    assert_eq!(SweepAxis::NAgents.apply(&base, "3").unwrap().message_length, 4);
    assert!(SweepAxis::MessageLength.apply(&base, "0").is_err());
    assert!(SweepAxis::Mode.apply(&base, "psychic").is_err());
}

#[test]
fn periodic_checkpoints_and_resumable_state() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(RunMode::Hammer, 4, dir.path());
    c.checkpoint_every = 2;
    let out = run_experiment_in(&c, &dir.path().join("run")).unwrap();
    assert!(out.dir.join("checkpoint-2.txt").is_file());
    assert!(out.dir.join("checkpoint-4.txt").is_file());
    let ck = hammer_core::nn::Checkpoint::load(&out.dir.join("checkpoint.txt")).unwrap();
    assert_eq!(ck.scalar("episodes_done").unwrap(), 4.0);
    let bundle = hammer_core::hammer::PolicyBundle::load(&ck, true).unwrap();
    assert_eq!(bundle.local.input_dim(), 18);
    assert_eq!(read_metrics(&out.dir.join("metrics.csv")).unwrap().len(), 4);
}

#[test]
fn wall_time_column_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(RunMode::Independent, 2, dir.path());
    let plain = run_experiment_in(&c, &dir.path().join("a")).unwrap();
    assert!(plain.rows.iter().all(|r| r.wall_ms.is_none()));
    c.record_wall_time = true;
    let timed = run_experiment_in(&c, &dir.path().join("b")).unwrap();
    assert!(timed.rows.iter().all(|r| r.wall_ms.is_some()));
}
