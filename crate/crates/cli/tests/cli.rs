use std::path::Path;
use std::process::{Command, Output};

fn sfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfem"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("SFEM_SEED")
        .output()
        .expect("spawn sfem")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_corpus(dir: &Path) -> String {
    let d = dir.to_str().unwrap();
    let o = sfem(&[
        "gen-synthetic",
        "--out",
        d,
        "--frames",
        "10",
        "--dim",
        "20",
        "--image-dim",
        "30",
        "--seed",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("sfem.conf").to_str().unwrap().to_string()
}

#[test]
fn help_exits_zero_and_bad_arguments_exit_two() {
    assert_eq!(sfem(&["--help"]).status.code(), Some(0));
    assert_eq!(sfem(&["train", "--no-such-flag"]).status.code(), Some(2));
}

#[test]
fn missing_inputs_are_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.conf");
    let o = sfem(&["build-dataset", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let conf = dir.path().join("sfem.conf");
    std::fs::write(&conf, "triples = nowhere.tsv\n").unwrap();
    let o = sfem(&["build-dataset", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.tsv"));

    std::fs::write(&conf, "no_such_key = 1\n").unwrap();
    let o = sfem(&["build-dataset", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn training_before_building_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = small_corpus(dir.path());
    let o = sfem(&["train", "--config", &conf]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pipeline_writes_reports_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let conf = small_corpus(dir.path());
    let common = [
        "--config",
        conf.as_str(),
        "--epochs",
        "5",
        "--set",
        "hidden=20,10",
    ];

    let o = sfem(&["build-dataset", "--config", &conf, "--stats"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("table-1900.tsv"), "{text}");
    assert!(text.lines().count() > 1);

    assert!(sfem(&["build-concepts", "--config", &conf])
        .status
        .success());
    for cmd in ["train", "evaluate"] {
        let o = sfem(&[&[cmd][..], &common[..]].concat());
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let out = dir.path().join("out");
    let report = std::fs::read_to_string(
        out.join("reports/report-dem-perceptual+conceptual+linguistic.tsv"),
    )
    .unwrap();
    assert!(report.contains("# metric=mean-precision-AUC"));
    for scorer in ["dem", "baseline-frequency", "baseline-random"] {
        assert!(
            report.lines().any(|l| l.split('\t').nth(3) == Some(scorer)),
            "{scorer} missing"
        );
    }
    let manifest = std::fs::read_to_string(
        out.join("models/dem-perceptual+conceptual+linguistic/manifest-1900.txt"),
    )
    .unwrap();
    assert!(manifest.contains("config.seed"));

    // ablation compares against the model trained without the removed modality
    let o = sfem(&[&["ablate", "--remove", "linguistic"][..], &common[..]].concat());
    assert_eq!(o.status.code(), Some(2));
    let o = sfem(
        &[
            &["train", "--mask", "perceptual+conceptual"][..],
            &common[..],
        ]
        .concat(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sfem(&[&["ablate", "--remove", "linguistic"][..], &common[..]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = sfem(&[&["export-pca"][..], &common[..]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pca = std::fs::read_to_string(stdout(&o).trim()).unwrap();
    assert!(pca.lines().skip(1).all(|l| l.split('\t').count() == 5));
}
