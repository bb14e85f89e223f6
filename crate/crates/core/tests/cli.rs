use std::path::Path;
use std::process::{Command, Output};

use hvac_rl::ddpg::Checkpoint;
use hvac_rl::weather::{read_chain_csv, WeatherTrace};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvac-rl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn weather_and_chain_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "synth-weather", "--days", "5"]);
    let trace = WeatherTrace::read_csv(&dir.path().join("weather.csv")).unwrap();
    assert_eq!(trace.records.len(), 5 * 144);
    assert!(read(&dir.path().join("weather.csv")).starts_with("day,k,t_out,q_solar\n"));

    let trace_path = dir.path().join("weather.csv");
    ok(&["--out", d, "estimate-chain", "--trace", trace_path.to_str().unwrap()]);
    for stem in ["chain_t_out", "chain_q_solar"] {
        assert!(read(&dir.path().join(format!("{stem}.csv"))).starts_with("k,i,j,p\n"));
        let chain = read_chain_csv(
            &dir.path().join(format!("{stem}.csv")),
            &dir.path().join(format!("{stem}_initial.csv")),
        )
        .unwrap();
        chain.validate().unwrap();
    }
}

#[test]
fn train_with_no_episodes_writes_initial_networks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "hidden_widths = [8, 8]\n").unwrap();
    ok(&["--config", cfg.to_str().unwrap(), "--out", d, "--seed", "3", "train", "--episodes", "0"]);
    let cp = Checkpoint::load(&dir.path().join("checkpoint.json")).unwrap();
    let (actor, critic) = cp.networks().unwrap();
    assert_eq!(actor.sizes(), vec![4, 8, 8, 1]);
    assert_eq!(critic.sizes(), vec![5, 8, 8, 1]);
    assert_eq!(
        read(&dir.path().join("training_log.csv")),
        "episode,return,mean_critic_loss,mean_q,noise_sigma\n"
    );
}

#[test]
fn evaluate_reports_a_missing_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere/checkpoint.json");
    let out = cli(&[
        "--out",
        dir.path().to_str().unwrap(),
        "evaluate",
        "--policy",
        "ddpg",
        "--checkpoint",
        missing.to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(missing.to_str().unwrap()));
}

#[test]
fn usage_errors_exit_nonzero() {
    for args in [vec!["launch"], vec!["compare", "--frobnicate"], vec![]] {
        let out = cli(&args);
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "r9 = 1.0\n").unwrap();
    let out = cli(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "compare"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("r9"));
}

#[test]
fn evaluate_writes_a_week_of_traces() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["--out", dir.path().to_str().unwrap(), "--seed", "2", "evaluate", "--policy", "greedy"]);
    for day in 0..7 {
        let text = read(&dir.path().join(format!("trace_greedy_{day}.csv")));
        assert!(text.starts_with("k,t_air,t_wall,t_out,q_solar,occupied,comfort,u,reward\n"));
        assert_eq!(text.lines().count(), 145);
    }
    let metrics = read(&dir.path().join("metrics_greedy.csv"));
    assert!(metrics.starts_with("day,energy_kj,comfort_score,occupied_steps,violations\n"));
    assert_eq!(metrics.lines().count(), 8);
}

#[test]
fn compare_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["--out", d, "compare", "--policies", "greedy,zero", "--days", "500", "--seed", "1"]);
    for policy in ["greedy", "zero"] {
        let metrics = read(&dir.path().join(format!("metrics_{policy}.csv")));
        assert_eq!(metrics.lines().count(), 501);
        for metric in ["energy_kj", "comfort_score", "return"] {
            let hist = read(&dir.path().join(format!("hist_{metric}_{policy}.csv")));
            assert!(hist.starts_with("bin_lo,bin_hi,count\n"));
            let total: usize = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
            assert_eq!(hist.lines().count(), 21);
            assert_eq!(total, 500);
        }
    }
    let summary = read(&dir.path().join("summary.csv"));
    assert!(summary.starts_with("policy,metric,n,mean,std,ci_lo,ci_hi\n"));
    assert_eq!(summary.lines().count(), 1 + 2 * 5);

    let rerun = tempfile::tempdir().unwrap();
    ok(&["--out", rerun.path().to_str().unwrap(), "compare", "--policies", "greedy,zero", "--days", "500", "--seed", "1"]);
    for name in ["metrics_greedy.csv", "metrics_zero.csv", "summary.csv", "hist_energy_kj_zero.csv"] {
        assert_eq!(std::fs::read(dir.path().join(name)).unwrap(), std::fs::read(rerun.path().join(name)).unwrap());
    }
}

#[test]
fn duplicate_policies_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["--out", dir.path().to_str().unwrap(), "compare", "--policies", "zero,zero", "--days", "2"]);
    assert!(!out.status.success());
}
