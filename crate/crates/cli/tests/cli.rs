mod common;

use common::*;
use pptk::evalmap::MetricsReport;

#[test]
fn postprocess_reproduces_golden_detections() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dets.jsonl");
    let mut args = vec!["postprocess".to_string(), "--heads".into()];
    args.extend(toy_heads().iter().map(|p| p.display().to_string()));
    args.extend(["--num-classes", "3", "--image-id", "1", "--out"].map(String::from));
    args.push(out.display().to_string());
    let o = pptk(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got = read_jsonl(&out);
    let want = read_jsonl(&fixture("toy_head/golden.jsonl"));
    assert!(!want.is_empty());
    assert!(same_detections(&got, &want, 1e-9));
}

#[test]
fn eval_reproduces_reference_metrics() {
    let o = pptk([
        "eval",
        "--annotations",
        fixture("mini_coco/annotations.json").to_str().unwrap(),
        "--results",
        fixture("mini_coco/results.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let got: MetricsReport = serde_json::from_str(&stdout(&o)).unwrap();
    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("mini_coco/expected_metrics.json")).unwrap()).unwrap();
    let want: MetricsReport = serde_json::from_value(expected["imperfect"].clone()).unwrap();
    let pairs = [
        (got.ap, want.ap),
        (got.ap50, want.ap50),
        (got.ap75, want.ap75),
        (got.aps, want.aps),
        (got.apm, want.apm),
        (got.apl, want.apl),
    ];
    for (g, w) in pairs {
        assert!((g.unwrap() - w.unwrap()).abs() <= 1e-6, "{g:?} vs {w:?}");
    }
}

#[test]
fn schedule_at_second_milestone() {
    let o = pptk(["schedule", "--variant", "step", "--at", "450000"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.00005");
}

#[test]
fn schedule_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"base_lr": 0.01, "warmup_iters": 0, "seed": 3}"#).unwrap();
    let o = pptk(["--config", cfg.to_str().unwrap(), "schedule", "--at", "10"]);
    assert_eq!(stdout(&o).trim(), "0.01");
    let o = pptk([
        "--config",
        cfg.to_str().unwrap(),
        "schedule",
        "--at",
        "10",
        "--base-lr",
        "0.02",
    ]);
    assert_eq!(stdout(&o).trim(), "0.02");
    let log = String::from_utf8_lossy(&o.stderr);
    assert!(log.contains("\"subcommand\":\"schedule\"") && log.contains("\"base_lr\":0.02"));
}

#[test]
fn losscheck_passes_and_catches_wrong_sign() {
    let o = pptk(["losscheck"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for c in report["checks"].as_array().unwrap() {
        assert!(c["max_rel_error"].as_f64().unwrap() < 1e-5, "{c}");
    }
    let bad = pptk(["losscheck", "--inject-wrong-sign"]);
    assert_eq!(bad.status.code(), Some(5));
}

#[test]
fn analyze_expectations() {
    let o = pptk(["analyze", "--variant", "E", "--expect"]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["head_channels"], 258);
    assert_eq!(r["head_channel_delta_iou_aware"], 3);
    assert_eq!(r["iou_branch_params"], 3 * (257 + 513 + 1025));

    let o = pptk(["analyze", "--variant", "E", "--neck-width", "256", "--expect"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert_eq!(pptk(["analyze", "--variant", "Q"]).status.code(), Some(4));
}

#[test]
fn exit_codes_separate_io_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = pptk([
        "eval",
        "--annotations",
        missing.to_str().unwrap(),
        "--results",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let bad = dir.path().join("bad.pptk");
    std::fs::write(&bad, b"PPTK\x04\x00\x00\x00\x01\x00").unwrap();
    let out = dir.path().join("d.jsonl");
    let o = pptk([
        "postprocess",
        "--heads",
        bad.to_str().unwrap(),
        bad.to_str().unwrap(),
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.pptk") && err.contains("byte"), "{err}");

    assert_eq!(pptk(["schedule"]).status.code(), Some(4));
}

#[test]
fn augment_writes_sample_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (image, anns) = write_augment_inputs(dir.path());
    let out = dir.path().join("s.pptk");
    let o = pptk([
        "augment",
        "--image",
        image.to_str().unwrap(),
        "--annotations",
        anns.to_str().unwrap(),
        "--image-id",
        "1",
        "--p",
        "0",
        "--sizes",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = pptk::TensorF32::load(&out).unwrap();
    assert_eq!(t.dims(), &[3, 64, 64]);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["applied_ops"], serde_json::json!([]));
    assert_eq!(side["labels"], serde_json::json!([1, 2]));
    // 48×40 stretched to 64×64
    let b0: Vec<f64> = serde_json::from_value(side["boxes"][0].clone()).unwrap();
    let want = [
        4.0 * 64.0 / 48.0,
        6.0 * 64.0 / 40.0,
        24.0 * 64.0 / 48.0,
        20.0 * 64.0 / 40.0,
    ];
    assert!(b0.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9), "{b0:?}");
}

#[test]
fn seed_only_matters_where_randomness_is_used() {
    let a = pptk(["schedule", "--at", "1000", "--seed", "1"]);
    let b = pptk(["schedule", "--at", "1000", "--seed", "2"]);
    assert_eq!(a.stdout, b.stdout);
    let a = pptk(["losscheck", "--seed", "1"]);
    let b = pptk(["losscheck", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn every_command_is_deterministic() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for ((args1, files1), (args2, files2)) in all_commands(d1.path()).into_iter().zip(all_commands(d2.path())) {
        let (o1, o2) = (pptk(&args1), pptk(&args2));
        assert!(
            o1.status.success(),
            "{}: {}",
            args1[0],
            String::from_utf8_lossy(&o1.stderr)
        );
        assert_eq!(o1.stdout, o2.stdout, "{}", args1[0]);
        for (f1, f2) in files1.iter().zip(&files2) {
            assert_eq!(
                std::fs::read(f1).unwrap(),
                std::fs::read(f2).unwrap(),
                "{}",
                f1.display()
            );
        }
    }
}
