#![allow(dead_code)]

use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pptk::augment::write_ppm;
use pptk::postprocess::CocoResult;
use pptk::TensorF32;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

pub fn pptk<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_pptk"))
        .args(args)
        .output()
        .expect("spawn pptk")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn toy_heads() -> Vec<PathBuf> {
    [8, 16, 32]
        .iter()
        .map(|s| fixture(&format!("toy_head/head_s{s}.pptk")))
        .collect()
}

pub fn read_jsonl(path: &Path) -> Vec<CocoResult> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Same multiset of detections, fields compared within `tol`.
pub fn same_detections(got: &[CocoResult], want: &[CocoResult], tol: f64) -> bool {
    if got.len() != want.len() {
        return false;
    }
    let mut used = vec![false; got.len()];
    want.iter().all(|w| {
        let hit = got.iter().enumerate().position(|(i, g)| {
            !used[i]
                && g.image_id == w.image_id
                && g.category_id == w.category_id
                && (g.score - w.score).abs() <= tol
                && g.bbox.iter().zip(&w.bbox).all(|(a, b)| (a - b).abs() <= tol)
        });
        hit.map(|i| used[i] = true).is_some()
    })
}

/// A 48×40 gradient image and a COCO file with two boxes on image 1 and one
/// on image 2.
pub fn write_augment_inputs(dir: &Path) -> (PathBuf, PathBuf) {
    let (h, w) = (40, 48);
    let img = TensorF32::from_fn(&[3, h, w], |i| {
        let (c, y, x) = (i / (h * w), i / w % h, i % w);
        ((x * 5 + y * 3 + c * 60) % 256) as f32 / 255.0
    });
    let image = dir.join("image.ppm");
    std::fs::write(&image, write_ppm(&img).unwrap()).unwrap();
    let ann = serde_json::json!({
        "images": [{"id": 1, "width": w, "height": h}, {"id": 2, "width": w, "height": h}],
        "annotations": [
            {"id": 1, "image_id": 1, "category_id": 1, "bbox": [4, 6, 20, 14]},
            {"id": 2, "image_id": 1, "category_id": 2, "bbox": [26, 18, 16, 18]},
            {"id": 3, "image_id": 2, "category_id": 3, "bbox": [10, 10, 24, 20]}
        ],
        "categories": [{"id": 1}, {"id": 2}, {"id": 3}]
    });
    let anns = dir.join("annotations.json");
    std::fs::write(&anns, ann.to_string()).unwrap();
    (image, anns)
}

/// Every subcommand with fixed inputs and outputs under `dir`. Each entry is
/// the argument list and the files it writes.
pub fn all_commands(dir: &Path) -> Vec<(Vec<String>, Vec<PathBuf>)> {
    let (image, anns) = write_augment_inputs(dir);
    let s = |p: &Path| p.display().to_string();
    let mut heads: Vec<String> = vec!["postprocess".into(), "--heads".into()];
    heads.extend(toy_heads().iter().map(|p| s(p)));
    heads.extend(["--num-classes", "3", "--image-id", "1", "--out"].map(String::from));
    heads.push(s(&dir.join("dets.jsonl")));
    let v = |a: &[&str]| a.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        (
            v(&["analyze", "--variant", "E", "--out", &s(&dir.join("arch.json"))]),
            vec![dir.join("arch.json")],
        ),
        (
            v(&["forward", "--seed", "9", "--out", &s(&dir.join("fw"))]),
            [8, 16, 32]
                .iter()
                .map(|st| dir.join(format!("fw/head_s{st}.pptk")))
                .collect(),
        ),
        (
            v(&[
                "augment",
                "--seed",
                "4",
                "--image",
                &s(&image),
                "--annotations",
                &s(&anns),
                "--image-id",
                "1",
                "--mix-image",
                &s(&image),
                "--mix-image-id",
                "2",
                "--sizes",
                "32,64",
                "--out",
                &s(&dir.join("aug.pptk")),
            ]),
            vec![dir.join("aug.pptk"), dir.join("aug.json")],
        ),
        (heads, vec![dir.join("dets.jsonl")]),
        (
            v(&[
                "schedule",
                "--variant",
                "cosine",
                "--stride",
                "5000",
                "--out",
                &s(&dir.join("lr.csv")),
            ]),
            vec![dir.join("lr.csv")],
        ),
        (
            v(&[
                "eval",
                "--annotations",
                &s(&fixture("mini_coco/annotations.json")),
                "--results",
                &s(&fixture("mini_coco/results.json")),
                "--out",
                &s(&dir.join("metrics.json")),
            ]),
            vec![dir.join("metrics.json")],
        ),
        (
            v(&["losscheck", "--seed", "11", "--out", &s(&dir.join("grad.json"))]),
            vec![dir.join("grad.json")],
        ),
    ]
}
