use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn icgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icgan"))
        .args(args)
        .env_remove("ICGAN_MNIST_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn dataset(dir: &Path) {
    let out = icgan(&["make-dataset", "--seed", "3", "--scale", "200", "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

const TINY: [&str; 9] = ["--tiny", "--epochs", "1", "--subset", "30", "--batch-size", "10", "--eval-every", "0"];

#[test]
fn unknown_flag_is_a_usage_error_with_help() {
    let out = icgan(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--no-such-flag") && err.contains("Usage"), "{err}");
    assert_eq!(icgan(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn missing_inputs_and_bad_files_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = icgan(&["train", "--dataset", s(&tmp.path().join("absent")), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1), "missing dataset is a usage error");
    let junk = tmp.path().join("junk.ckpt");
    fs::write(&junk, b"not a checkpoint").unwrap();
    let out = icgan(&["eval-continuous", "--generator", s(&junk), "--out", s(&tmp.path().join("e"))]);
    assert_eq!(out.status.code(), Some(2), "corrupt checkpoint is a runtime error");
}

#[test]
fn help_lists_every_training_setting_with_its_default() {
    let help = String::from_utf8(icgan(&["train", "--help"]).stdout).unwrap();
    for (flag, default) in [
        ("--batch-size", "100"),
        ("--g-lr0", "0.05"),
        ("--d-lr0", "0.08"),
        ("--lr-decay", "0.9"),
        ("--decay-every", "5"),
        ("--epochs", "40"),
        ("--n-critic", "1"),
        ("--adam-beta1", "0"),
        ("--adam-beta2", "0.99"),
        ("--seed", "0"),
        ("--eval-every", "500"),
        ("--fid-samples", "10000"),
        ("--lambda-gp", "10"),
        ("--lambda1", "1"),
        ("--lambda2", "1"),
        ("--variant", "icgan"),
    ] {
        let line = help.lines().find(|l| l.trim_start().starts_with(flag)).unwrap_or_else(|| panic!("{flag} missing"));
        assert!(line.contains(&format!("[default: {default}]")), "{line}");
    }
    for flag in ["--subset", "--max-steps", "--supervised-cat", "--tiny", "--resume", "--classifier", "--config"] {
        assert!(help.contains(flag), "{flag} missing");
    }
}

#[test]
fn commands_write_a_config_echo_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data);
    for f in ["config.json", "manifest.json", "train.cmnist", "test.cmnist"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "make-dataset");
    assert_eq!(manifest["summary"]["synthetic_glyphs"], true);
}

#[test]
fn rerunning_from_the_echo_reproduces_outputs_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data);
    let a = tmp.path().join("a");
    let mut args = vec!["train", "--dataset", s(&data), "--out", s(&a), "--seed", "5"];
    args.extend(TINY);
    assert!(icgan(&args).status.success());
    let b = tmp.path().join("b");
    let echo = a.join("config.json");
    let out = icgan(&["train", "--dataset", s(&data), "--out", s(&b), "--config", s(&echo)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["final.ckpt", "runlog.jsonl", "config.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    // same directory again: overwritten with identical bytes
    let before = fs::read(a.join("final.ckpt")).unwrap();
    assert!(icgan(&args).status.success());
    assert_eq!(before, fs::read(a.join("final.ckpt")).unwrap());
}

#[test]
fn evaluation_and_plot_commands_run_on_a_tiny_model() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    dataset(&data);
    let cls = tmp.path().join("cls");
    let out = icgan(&[
        "train-classifier", "--dataset", s(&data), "--out", s(&cls), "--tiny", "--max-epochs", "1", "--subset", "60", "--batch-size", "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c = cls.join("classifier.ckpt");
    let gan = tmp.path().join("gan");
    let mut args = vec!["train", "--dataset", s(&data), "--out", s(&gan), "--classifier", s(&c)];
    args.extend(&TINY[..7]);
    args.extend(["--eval-every", "1", "--fid-samples", "20"]);
    let out = icgan(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = gan.join("final.ckpt");
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("fid", vec!["eval-fid".into(), "--generator".into(), s(&g).into(), "--classifier".into(), s(&c).into(), "--dataset".into(), s(&data).into(), "--samples".into(), "50".into()]),
        ("discrete", vec!["eval-discrete".into(), "--generator".into(), s(&g).into(), "--classifier".into(), s(&c).into(), "--n".into(), "20".into(), "--rounds".into(), "2".into()]),
        ("continuous", vec!["eval-continuous".into(), "--generator".into(), s(&g).into(), "--steps".into(), "30".into()]),
        ("ablate", vec!["ablate".into(), "--generator".into(), s(&g).into(), "--digits".into(), "1,7".into(), "--samples".into(), "2".into()]),
    ];
    for (name, mut argv) in runs {
        let dir = tmp.path().join(name);
        argv.extend(["--out".into(), s(&dir).into()]);
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let out = icgan(&argv);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.join("manifest.json").exists());
    }
    let line = fs::read_to_string(tmp.path().join("continuous/report.jsonl")).unwrap();
    let report: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert!(report["value"].is_f64() && report["degrees"].is_f64());
    for f in ["grid.png", "cells.jsonl", "summary.json"] {
        assert!(tmp.path().join("ablate").join(f).exists(), "{f}");
    }
    let figs = tmp.path().join("figs");
    for argv in [
        vec!["plot", "fid-curve", "--runlog", s(&gan.join("runlog.jsonl")), "--out", s(&figs.join("fid"))],
        vec!["plot", "interpolation", "--generator", s(&g), "--columns", "5", "--out", s(&figs.join("interp"))],
        vec!["plot", "linearity", "--generator", s(&g), "--steps", "20", "--out", s(&figs.join("lin"))],
    ] {
        let out = icgan(&argv);
        assert!(out.status.success(), "{argv:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["fid/fid_curve.png", "interp/interpolation.png", "lin/linearity.png"] {
        assert!(fs::read(figs.join(f)).unwrap().starts_with(b"\x89PNG"), "{f}");
    }
}
