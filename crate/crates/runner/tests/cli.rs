mod common;

use std::fs;
use std::path::Path;

use common::{bin, record_files, write, StubServer};
use llmab_runner::experiment::{run_experiment, Backend};
use llmab_runner::ExperimentConfig;

const SMOKE: &str = "task = \"mab\"\nhorizon = 5\nrepetitions = 1\n[[agents]]\nkind = \"ts_llm\"\n";

fn gateway_fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../gateway/tests/fixtures"))
}

#[test]
fn run_on_five_iteration_oracle_config_writes_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "smoke.toml", SMOKE);
    let out = dir.path().join("out");
    let status = bin().arg("run").arg(&cfg).arg("--output").arg(&out).status().unwrap();
    assert!(status.success());
    let records = record_files(&out.join("ts_llm"));
    assert_eq!(records.len(), 1);
    assert_eq!(fs::read_to_string(&records[0]).unwrap().lines().count(), 1 + 5);
    assert!(out.join("plots/ts_llm.csv").exists());
    assert!(out.join("plots/summary.csv").exists());
    assert!(out.join("plots/curves.svg").exists());
}

#[test]
fn in_process_cli_matches_binary_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "smoke.toml", SMOKE);
    let out = dir.path().join("out");
    let code = llmab_runner::cli::cli(["llmab", "run", cfg.to_str().unwrap(), "--output", out.to_str().unwrap(), "--no-plot"]);
    assert_eq!(code, 0);
    assert!(!out.join("plots/curves.svg").exists());
    assert_ne!(llmab_runner::cli::cli(["llmab", "run", "/nonexistent.toml"]), 0);
}

#[test]
fn unknown_subcommand_or_flag_prints_usage_and_fails() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = bin().args(["run", "x.toml", "--bogus"]).output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn aggregate_and_plot_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.toml",
        "task = \"mab\"\nhorizon = 8\nrepetitions = 3\n[[agents]]\nkind = \"ts_llm\"\n[[agents]]\nkind = \"random\"\n",
    );
    let out = dir.path().join("out");
    assert!(bin().arg("run").arg(&cfg).arg("--output").arg(&out).arg("--no-plot").status().unwrap().success());
    assert!(bin().arg("aggregate").arg(&out).status().unwrap().success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "method,iteration,mean,stderr,n");
    assert_eq!(summary.lines().count(), 1 + 2 * 8);
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",3")));
    let plots = dir.path().join("plots");
    assert!(bin().arg("plot").arg(&out).arg("--out").arg(&plots).arg("--svg").status().unwrap().success());
    for f in ["random.csv", "ts_llm.csv", "summary.csv", "curves.svg"] {
        assert!(plots.join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_gamma_produces_three_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ro.toml",
        "task = \"mab\"\nhorizon = 4\nrepetitions = 1\noutput_dir = \"sweep\"\n[[agents]]\nkind = \"ro_llm\"\ngamma = 5\n",
    );
    let o = bin().arg("sweep").arg(&cfg).args(["--param", "gamma=1,5,10", "--no-plot"]).current_dir(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for g in ["1", "5", "10"] {
        let variant = dir.path().join(format!("sweep/gamma-{g}"));
        let text = fs::read_to_string(variant.join("config.toml")).unwrap();
        let c = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.agents[0].label(), format!("ro_llm_gamma{g}"));
        assert_eq!(record_files(&variant.join(format!("ro_llm_gamma{g}"))).len(), 1);
    }
}

#[test]
fn prompts_render_prints_the_golden_prompt() {
    let fixtures = gateway_fixtures();
    for id in ["ts_reward", "dueling", "baseline_nofeature", "text_ts"] {
        let o = bin()
            .args(["prompts", "render", id, "--fixture"])
            .arg(fixtures.join(format!("{id}.json")))
            .output()
            .unwrap();
        assert!(o.status.success(), "{id}");
        let golden = fs::read(fixtures.join(format!("golden/{id}.txt"))).unwrap();
        assert_eq!(o.stdout, golden, "{id}");
    }
    let o = bin().args(["prompts", "render", "nope", "--fixture"]).arg(fixtures.join("ts_reward.json")).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn replay_subcommand_reproduces_a_recorded_run_offline() {
    let stub = StubServer::hashing();
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
task = "mab"
arms = 4
dim = 2
horizon = 5
repetitions = 1
output_dir = "rec"

[predictor]
backend = "llm"

[gateway]
model = "stub-model"
mode = "record"
log = "log.jsonl"

[[agents]]
kind = "ts_llm"
"#;
    let cfg = write(dir.path(), "llm.toml", text);
    let c = ExperimentConfig::load(&cfg).unwrap();
    let log = c.gateway.log.clone().unwrap();
    run_experiment(&c, &Backend::llm(&c, stub.recording(&log)).unwrap(), &dir.path().join("rec")).unwrap();
    let hits = stub.hits();
    let o = bin()
        .arg("replay")
        .arg(&cfg)
        .arg("--log")
        .arg(&log)
        .arg("--no-plot")
        .current_dir(dir.path())
        .env_remove("LLM_API_KEY")
        .env_remove("LLM_API_BASE")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stub.hits(), hits);
    let a = record_files(&dir.path().join("rec/ts_llm"));
    let b = record_files(&dir.path().join("rec-replay/ts_llm"));
    assert_eq!(fs::read(&a[0]).unwrap(), fs::read(&b[0]).unwrap());
}
