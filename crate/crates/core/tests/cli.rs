use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use interest3d::commands::load_summary;
use interest3d::config::RunConfig;
use interest3d::detector::{parse_detections, write_detections, Detection};
use interest3d::fixtures::{synthetic_models, write_dataset};
use interest3d::groundtruth::read_ground_truth;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interest3d"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path) -> String {
    let cfg = r#"
[paths]
mesh_dir = "data/meshes"
clicks_dir = "data/clicks"
output_dir = "out"

[forest]
trees = 30
seed = 4

[ground_truth]
sigmas = [0.03, 0.05]
ns = [2, 3, 4, 5]

[detection]
c = 1.0

[detection.labels]
sigmas = [0.03, 0.05]
n_min = 3
n_max = 5

[detection.folds]
kind = "random"
count = 2
seed = 1
"#;
    let path = dir.join("run.toml");
    fs::write(&path, cfg).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&[])), 1);
    assert_eq!(code(&cli(&["frobnicate"])), 1);
    assert_eq!(code(&cli(&["attributes", "--seed", "x"])), 1);
    assert_eq!(
        code(&cli(&["attributes", "--config", "/nonexistent/run.toml"])),
        1
    );
}

#[test]
fn bad_config_and_jobs_are_input_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "[forest]\ntrees = 0\n").unwrap();
    assert_eq!(
        code(&cli(&["train", "--config", path.to_str().unwrap()])),
        1
    );
    fs::write(&path, "[forest]\nunknown_key = 1\n").unwrap();
    assert_eq!(
        code(&cli(&["train", "--config", path.to_str().unwrap()])),
        1
    );
    let good = write_config(tmp.path());
    assert_eq!(
        code(&cli(&["attributes", "--config", &good, "--jobs", "0"])),
        1
    );
}

#[test]
fn empty_mesh_directory_is_not_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    fs::create_dir_all(tmp.path().join("data/meshes")).unwrap();
    let out = cli(&["attributes", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_mesh_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let meshes = tmp.path().join("data/meshes");
    fs::create_dir_all(&meshes).unwrap();
    fs::write(meshes.join("broken.off"), "OFF\n3 1 0\n0 0 0\n1 0 0\n").unwrap();
    assert_eq!(code(&cli(&["attributes", "--config", &cfg])), 1);
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path());
    write_dataset(&tmp.path().join("data"), &synthetic_models(4, 3, 7), 8, 7).unwrap();

    for stage in [
        "attributes",
        "cluster-gt",
        "train",
        "detect",
        "eval",
        "curves",
    ] {
        let out = cli(&[stage, "--config", &cfg_path, "--jobs", "2"]);
        assert_eq!(
            code(&out),
            0,
            "{stage}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out_dir = tmp.path().join("out");
    for f in [
        "config.resolved.toml",
        "attributes/synth00.csv",
        "groundtruth/synth00/s0.03_n2.gt",
        "models/manifest.json",
        "models/fold0.json",
        "detections/synth03.csv",
        "eval/summary.json",
        "eval/s0.05_n4.csv",
        "eval/curves_s0.03.svg",
    ] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }

    // Unchanged inputs leave attributes alone unless forced.
    let again = cli(&["attributes", "--config", &cfg_path]);
    assert!(String::from_utf8_lossy(&again.stdout).contains("0 written"));
    let forced = cli(&["attributes", "--config", &cfg_path, "--force"]);
    assert!(String::from_utf8_lossy(&forced.stdout).contains("4 written"));

    // A different seed trains different forests, which detect must notice.
    assert_eq!(
        code(&cli(&["train", "--config", &cfg_path, "--seed", "99"])),
        0
    );
    let stale = cli(&["eval", "--config", &cfg_path, "--seed", "99"]);
    assert_eq!(code(&stale), 1);
    assert_eq!(
        code(&cli(&["detect", "--config", &cfg_path, "--seed", "99"])),
        0
    );
    assert_eq!(
        code(&cli(&["eval", "--config", &cfg_path, "--seed", "99"])),
        0
    );
}

#[test]
fn detecting_exactly_the_ground_truth_scores_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path());
    write_dataset(&tmp.path().join("data"), &synthetic_models(4, 3, 2), 8, 2).unwrap();
    for stage in ["attributes", "cluster-gt", "train", "detect"] {
        assert_eq!(code(&cli(&[stage, "--config", &cfg_path])), 0, "{stage}");
    }
    let out_dir = tmp.path().join("out");
    for entry in fs::read_dir(out_dir.join("detections")).unwrap() {
        let path = entry.unwrap().path();
        let (mut result, header) = parse_detections(&fs::read_to_string(&path).unwrap()).unwrap();
        let gt_file = out_dir
            .join("groundtruth")
            .join(&result.model)
            .join("s0.05_n3.gt");
        let gt = read_ground_truth(gt_file).unwrap();
        result.detections = gt.cells[0]
            .vertices()
            .into_iter()
            .map(|vertex| Detection {
                vertex,
                probability: 1.0,
                tied: false,
            })
            .collect();
        fs::write(&path, write_detections(&result, &header)).unwrap();
    }
    assert_eq!(code(&cli(&["eval", "--config", &cfg_path])), 0);
    let cfg = RunConfig::load(Path::new(&cfg_path)).unwrap();
    let report = load_summary(&cfg).unwrap();
    let curve = report.curve(0.05, 3).unwrap();
    assert!(curve.counts.iter().all(|c| c.ground_truth > 0));
    assert!(curve.iou.iter().all(|&x| x == 1.0), "{:?}", curve.iou);
    assert!(curve.fne.iter().chain(&curve.fpe).all(|&x| x == 0.0));
}

#[test]
fn readme_config_example_parses() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```toml\n").unwrap() + "```toml\n".len();
    let block = &readme[start..start + readme[start..].find("```").unwrap()];
    let cfg = RunConfig::from_toml(block).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg, RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap());
}
