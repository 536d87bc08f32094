use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pptk::anchors::{AnchorSet, HeadLayout};
use pptk::archgraph::{build_model, count_params, ArchReport, ModelConfig, ShapeNCHW, Variant};
use pptk::augment::{self, PipelineConfig, Sample, SizeList};
use pptk::evalmap::{self, CocoDataset};
use pptk::gradcheck::check_scalar;
use pptk::losses::{bce_with_logits, iou_aware_loss_grad};
use pptk::postprocess::{self, CocoResult, NmsConfig};
use pptk::refexec::{self, Mode, ParamStore};
use pptk::schedule::{self, DecayKind, LRScheduleConfig};
use pptk::{BBox, TensorF32};

use crate::config::resolve;
use crate::{NumericFailure, ValidationError};

pub struct Ctx {
    pub seed: u64,
    pub file: Option<Value>,
    pub threads: Option<usize>,
}

impl Ctx {
    fn resolve<T, F>(&self, defaults: &T, flags: &F) -> Result<T>
    where
        T: Serialize + serde::de::DeserializeOwned,
        F: Serialize,
    {
        resolve(defaults, self.file.as_ref(), flags).map_err(|e| ValidationError(format!("{e:#}")).into())
    }

    /// One JSON line on stderr with everything that determines the outputs.
    fn log(&self, subcommand: &str, seeded: bool, options: &impl Serialize) -> Result<()> {
        let line = json!({
            "subcommand": subcommand,
            "seed": seeded.then_some(self.seed),
            "threads": self.threads,
            "options": options,
        });
        eprintln!("run_config {line}");
        Ok(())
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| invalid(format!("missing required option --{flag}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn pretty(v: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn load_tensor(path: &Path) -> Result<TensorF32> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    TensorF32::from_bytes(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// A `[3, H, W]` image from a PPTK tensor (CHW or 1×CHW) or a binary PPM.
fn load_image(path: &Path) -> Result<TensorF32> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let t = if bytes.starts_with(b"P6") {
        augment::read_ppm(&bytes)
    } else {
        TensorF32::from_bytes(&bytes)
    }
    .with_context(|| format!("parsing {}", path.display()))?;
    match *t.dims() {
        [3, _, _] => Ok(t),
        [1, 3, h, w] => Ok(t.reshape(vec![3, h, w])?),
        ref d => Err(invalid(format!(
            "{}: expected a 3-channel image, got dims {d:?}",
            path.display()
        ))),
    }
}

fn parse_variant(s: &str) -> Result<Variant> {
    s.parse().map_err(|e: pptk::Error| invalid(e.to_string()))
}

// ---------------------------------------------------------------- analyze

#[derive(Args, Serialize)]
pub struct AnalyzeArgs {
    /// Ablation row, A to E.
    #[arg(long)]
    variant: Option<String>,
    /// Square input size; defaults to the variant's evaluation size.
    #[arg(long)]
    size: Option<usize>,
    /// Override the coarsest neck width (finer levels halve it).
    #[arg(long)]
    neck_width: Option<usize>,
    /// Compare against the published budget and fail outside tolerance.
    #[arg(long)]
    expect: bool,
    /// Write the per-node report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct AnalyzeConfig {
    variant: String,
    size: Option<usize>,
    neck_width: Option<usize>,
    expect: bool,
    out: Option<PathBuf>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            variant: "E".into(),
            size: None,
            neck_width: None,
            expect: false,
            out: None,
        }
    }
}

pub const EXPECT_TOLERANCE: f64 = 0.05;
pub const EXPECT_TOLERANCE_OVERRIDDEN: f64 = 0.10;

pub fn analyze(ctx: &Ctx, args: &AnalyzeArgs) -> Result<()> {
    let cfg: AnalyzeConfig = ctx.resolve(&AnalyzeConfig::default(), args)?;
    ctx.log("analyze", false, &cfg)?;
    let variant = parse_variant(&cfg.variant)?;
    let mut model = variant.model_config();
    if let Some(w) = cfg.neck_width {
        if w == 0 || w % 4 != 0 {
            return Err(invalid(format!(
                "--neck-width must be a positive multiple of 4, got {w}"
            )));
        }
        model.neck_base_width = w;
    }
    let size = cfg.size.unwrap_or(variant.eval_size());
    if size == 0 || size % 32 != 0 {
        return Err(invalid(format!("--size must be a positive multiple of 32, got {size}")));
    }
    let graph = build_model(&model);
    let report = ArchReport::new(&graph, ShapeNCHW::image(1, 3, size)?)?;

    let toggled = ModelConfig {
        iou_aware: !model.iou_aware,
        ..model
    };
    let (with_iou, without_iou) = if model.iou_aware {
        (model, toggled)
    } else {
        (toggled, model)
    };
    let iou_branch_params =
        count_params(&build_model(&with_iou), false) - count_params(&build_model(&without_iou), false);

    let (ref_params, ref_gflops) = variant.reference_budget();
    let mut summary = json!({
        "variant": format!("{variant:?}"),
        "input_size": size,
        "neck_base_width": model.neck_base_width,
        "params": report.total_params,
        "params_m": report.params_millions(),
        "trainable_params": report.trainable_params,
        "paddle_gflops": report.paddle_gflops,
        "gflops_2x_elementwise": report.gflops,
        "head_channels": model.head().out_channels(),
        "head_channel_delta_iou_aware": with_iou.head().out_channels() - without_iou.head().out_channels(),
        "iou_branch_params": iou_branch_params,
        "reference": {"params_m": ref_params, "gflops": ref_gflops},
    });

    let mut failure = None;
    if cfg.expect {
        let tol = if cfg.neck_width.is_some() {
            eprintln!(
                "warning: neck width overridden, tolerance widened to ±{:.0}%",
                EXPECT_TOLERANCE_OVERRIDDEN * 100.0
            );
            EXPECT_TOLERANCE_OVERRIDDEN
        } else {
            EXPECT_TOLERANCE
        };
        let params_dev = report.params_millions() / ref_params - 1.0;
        let gflops_dev = report.paddle_gflops / ref_gflops - 1.0;
        let pass = params_dev.abs() <= tol && gflops_dev.abs() <= tol;
        summary["expect"] = json!({
            "tolerance": tol,
            "params_rel_dev": params_dev,
            "gflops_rel_dev": gflops_dev,
            "pass": pass,
        });
        if !pass {
            failure = Some(format!(
                "variant {variant:?}: params {:.2}M ({:+.1}%), GFLOPs {:.2} ({:+.1}%) outside ±{:.0}%",
                report.params_millions(),
                params_dev * 100.0,
                report.paddle_gflops,
                gflops_dev * 100.0,
                tol * 100.0
            ));
        }
    }
    if let Some(out) = &cfg.out {
        write_file(out, pretty(&report)?.as_bytes())?;
    }
    print!("{}", pretty(&summary)?);
    match failure {
        Some(msg) => Err(NumericFailure(msg).into()),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------- forward

#[derive(Args, Serialize)]
pub struct ForwardArgs {
    #[arg(long)]
    variant: Option<String>,
    /// Square input size of the random image when --input is not given.
    #[arg(long)]
    size: Option<usize>,
    /// `eval` or `train` (train applies DropBlock).
    #[arg(long)]
    mode: Option<String>,
    /// Image as PPTK or PPM; a seeded random image otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory receiving head_s8.pptk, head_s16.pptk and head_s32.pptk.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ForwardConfig {
    variant: String,
    size: usize,
    mode: String,
    input: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            variant: "E".into(),
            size: 64,
            mode: "eval".into(),
            input: None,
            out: None,
        }
    }
}

pub fn forward(ctx: &Ctx, args: &ForwardArgs) -> Result<()> {
    let cfg: ForwardConfig = ctx.resolve(&ForwardConfig::default(), args)?;
    ctx.log("forward", true, &cfg)?;
    let out = required(&cfg.out, "out")?;
    let variant = parse_variant(&cfg.variant)?;
    let mode = match cfg.mode.as_str() {
        "eval" => Mode::Eval,
        "train" => Mode::Train,
        m => return Err(invalid(format!("--mode must be eval or train, got `{m}`"))),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg_seed(ctx));
    let image = match &cfg.input {
        Some(p) => load_image(p)?,
        None => {
            if cfg.size == 0 || cfg.size % 32 != 0 {
                return Err(invalid(format!(
                    "--size must be a positive multiple of 32, got {}",
                    cfg.size
                )));
            }
            TensorF32::from_fn(&[3, cfg.size, cfg.size], |_| rng.random::<f32>())
        }
    };
    let [_, h, w] = *image.dims() else { unreachable!() };
    let image = image.reshape(vec![1, 3, h, w])?;

    let graph = build_model(&variant.model_config());
    let params = ParamStore::init(&graph, ctx.seed);
    let entries = HashMap::from([("image".to_string(), image)]);
    let outputs = refexec::forward(&graph, &params, &entries, mode, Some(&mut rng))?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut shapes = serde_json::Map::new();
    for (name, stride) in graph.outputs.iter().zip([8, 16, 32]) {
        let t = &outputs[name];
        let path = out.join(format!("head_s{stride}.pptk"));
        write_file(&path, &t.to_bytes())?;
        shapes.insert(format!("s{stride}"), json!(t.dims()));
    }
    print!(
        "{}",
        pretty(&json!({"variant": format!("{variant:?}"), "heads": shapes}))?
    );
    Ok(())
}

fn cfg_seed(ctx: &Ctx) -> u64 {
    // keep the image stream apart from the parameter streams
    ctx.seed ^ 0x9e37_79b9_7f4a_7c15
}

// ---------------------------------------------------------------- augment

#[derive(Args, Serialize)]
pub struct AugmentArgs {
    /// Image as PPTK (values in [0, 1]) or binary PPM.
    #[arg(long)]
    image: Option<PathBuf>,
    /// COCO annotation file holding the image's boxes.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    image_id: Option<u64>,
    /// Mixup partner image; its boxes come from --annotations.
    #[arg(long)]
    mix_image: Option<PathBuf>,
    #[arg(long)]
    mix_image_id: Option<u64>,
    /// Trigger probability of each random stage.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated candidate output sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    max_expand_ratio: Option<f64>,
    /// Output tensor; the sidecar JSON goes next to it with a .json extension.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct AugmentConfig {
    image: Option<PathBuf>,
    annotations: Option<PathBuf>,
    image_id: Option<u64>,
    mix_image: Option<PathBuf>,
    mix_image_id: Option<u64>,
    p: f64,
    sizes: Vec<usize>,
    max_expand_ratio: f64,
    out: Option<PathBuf>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let d = PipelineConfig::default();
        Self {
            image: None,
            annotations: None,
            image_id: None,
            mix_image: None,
            mix_image_id: None,
            p: d.p,
            sizes: d.sizes.sizes().to_vec(),
            max_expand_ratio: d.max_expand_ratio,
            out: None,
        }
    }
}

fn load_sample(image: &Path, dataset: Option<&CocoDataset>, image_id: Option<u64>) -> Result<Sample> {
    let img = load_image(image)?;
    let [_, h, w] = *img.dims() else { unreachable!() };
    let (mut boxes, mut labels) = (Vec::new(), Vec::new());
    if let Some(ds) = dataset {
        let id = image_id.ok_or_else(|| invalid("--image-id is required with --annotations"))?;
        if !ds.images.is_empty() && !ds.images.iter().any(|i| i.id == id) {
            return Err(invalid(format!("image {id} not in annotation file")));
        }
        for a in ds.annotations_for(id) {
            let b = BBox::from_xywh(a.bbox).clip(w as f64, h as f64);
            if b.area() > 0.0 {
                boxes.push(b);
                labels.push(a.category_id as usize);
            }
        }
    }
    Ok(Sample::new(img, boxes, labels)?)
}

pub fn augment(ctx: &Ctx, args: &AugmentArgs) -> Result<()> {
    let cfg: AugmentConfig = ctx.resolve(&AugmentConfig::default(), args)?;
    ctx.log("augment", true, &cfg)?;
    let out = required(&cfg.out, "out")?;
    let image = required(&cfg.image, "image")?;
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(invalid(format!("--p must lie in [0, 1], got {}", cfg.p)));
    }
    let pipeline = PipelineConfig {
        p: cfg.p,
        sizes: SizeList::new(cfg.sizes.clone()).map_err(|e| invalid(e.to_string()))?,
        max_expand_ratio: cfg.max_expand_ratio,
    };
    let dataset = match &cfg.annotations {
        Some(p) => Some(CocoDataset::from_json(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => None,
    };
    let a = load_sample(image, dataset.as_ref(), cfg.image_id)?;
    let partner = match &cfg.mix_image {
        Some(p) => {
            let b = load_sample(p, dataset.as_ref(), cfg.mix_image_id.or(cfg.image_id))?;
            let (_, h, w) = a.chw()?;
            // mixup needs equal canvases
            Some(augment::resize(&b, h, w)?)
        }
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let res = augment::run_pipeline(&pipeline, &a, partner.as_ref(), &mut rng)?;

    write_file(out, &res.sample.image.to_bytes())?;
    let sidecar = json!({
        "boxes": res.sample.boxes.iter().map(|b| [b.x1, b.y1, b.x2, b.y2]).collect::<Vec<_>>(),
        "labels": res.sample.labels,
        "weights": res.sample.weights,
        "applied_ops": res.applied_ops,
        "seed": ctx.seed,
        "input_size": res.input_size,
    });
    write_file(&out.with_extension("json"), pretty(&sidecar)?.as_bytes())?;
    Ok(())
}

// ------------------------------------------------------------ postprocess

#[derive(Args, Serialize)]
pub struct PostprocessArgs {
    /// Head tensors ordered stride 8, 16, 32.
    #[arg(long, num_args = 1..)]
    heads: Option<Vec<PathBuf>>,
    /// Network input size; defaults to 8 × the finest grid.
    #[arg(long)]
    input_size: Option<usize>,
    #[arg(long)]
    num_classes: Option<usize>,
    /// Score-fusion exponent on the IoU prediction.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    score_thresh: Option<f64>,
    #[arg(long)]
    iou_thresh: Option<f64>,
    #[arg(long)]
    max_dets: Option<usize>,
    #[arg(long)]
    image_id: Option<u64>,
    /// Detections as COCO results, one JSON object per line.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct PostprocessConfig {
    heads: Vec<PathBuf>,
    input_size: Option<usize>,
    num_classes: usize,
    alpha: f64,
    score_thresh: f64,
    iou_thresh: f64,
    max_dets: usize,
    image_id: u64,
    out: Option<PathBuf>,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        let nms = NmsConfig::default();
        Self {
            heads: Vec::new(),
            input_size: None,
            num_classes: 80,
            alpha: postprocess::DEFAULT_ALPHA,
            score_thresh: nms.score_thresh,
            iou_thresh: nms.iou_thresh,
            max_dets: nms.max_dets,
            image_id: 0,
            out: None,
        }
    }
}

pub fn postprocess(ctx: &Ctx, args: &PostprocessArgs) -> Result<()> {
    let cfg: PostprocessConfig = ctx.resolve(&PostprocessConfig::default(), args)?;
    ctx.log("postprocess", false, &cfg)?;
    let out = required(&cfg.out, "out")?;
    let anchors = AnchorSet::yolov3();
    if cfg.heads.len() != anchors.num_levels() {
        return Err(invalid(format!(
            "--heads needs {} tensors (strides 8, 16, 32), got {}",
            anchors.num_levels(),
            cfg.heads.len()
        )));
    }
    let heads = cfg.heads.iter().map(|p| load_tensor(p)).collect::<Result<Vec<_>>>()?;
    let [_, ch, gh, _] = heads[0].nchw()?;
    let per_anchor = 5 + cfg.num_classes;
    let iou_aware = match ch {
        c if c == 3 * per_anchor => false,
        c if c == 3 * (per_anchor + 1) => true,
        c => {
            return Err(invalid(format!(
                "{} channels do not fit {} classes with 3 anchors",
                c, cfg.num_classes
            )))
        }
    };
    let layout = HeadLayout {
        num_classes: cfg.num_classes,
        anchors_per_level: 3,
        iou_aware,
    };
    let input_size = cfg.input_size.unwrap_or(gh * anchors.strides[0]);
    let nms = NmsConfig {
        iou_thresh: cfg.iou_thresh,
        score_thresh: cfg.score_thresh,
        max_dets: cfg.max_dets,
    };
    let dets = postprocess::postprocess(&heads, &layout, &anchors, input_size, cfg.alpha, &nms)?;
    let rows: Vec<CocoResult> = dets
        .iter()
        .map(|d| CocoResult::from_detection(d, cfg.image_id, None))
        .collect();
    let mut buf = Vec::new();
    postprocess::write_json_lines(&rows, &mut buf)?;
    write_file(out, &buf)?;
    Ok(())
}

// --------------------------------------------------------------- schedule

#[derive(Args, Serialize)]
pub struct ScheduleArgs {
    /// `step` or `cosine`.
    #[arg(long)]
    variant: Option<String>,
    /// Print the learning rate at this iteration.
    #[arg(long)]
    at: Option<u64>,
    /// Row spacing of the CSV written to --out.
    #[arg(long)]
    stride: Option<u64>,
    #[arg(long)]
    base_lr: Option<f64>,
    #[arg(long)]
    warmup_iters: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    milestones: Option<Vec<u64>>,
    #[arg(long)]
    decay_factor: Option<f64>,
    #[arg(long)]
    total_iters: Option<u64>,
    /// CSV of `iter,lr`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleConfig {
    variant: DecayKind,
    at: Option<u64>,
    stride: u64,
    base_lr: f64,
    warmup_iters: u64,
    milestones: Vec<u64>,
    decay_factor: f64,
    total_iters: u64,
    out: Option<PathBuf>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let d = LRScheduleConfig::default();
        Self {
            variant: d.variant,
            at: None,
            stride: 1000,
            base_lr: d.base_lr,
            warmup_iters: d.warmup_iters,
            milestones: d.milestones,
            decay_factor: d.decay_factor,
            total_iters: d.total_iters,
            out: None,
        }
    }
}

pub fn schedule(ctx: &Ctx, args: &ScheduleArgs) -> Result<()> {
    let cfg: ScheduleConfig = ctx.resolve(&ScheduleConfig::default(), args)?;
    ctx.log("schedule", false, &cfg)?;
    let lr_cfg = LRScheduleConfig {
        base_lr: cfg.base_lr,
        warmup_iters: cfg.warmup_iters,
        milestones: cfg.milestones.clone(),
        decay_factor: cfg.decay_factor,
        total_iters: cfg.total_iters,
        variant: cfg.variant,
        ..LRScheduleConfig::default()
    };
    lr_cfg.validate().map_err(|e| invalid(e.to_string()))?;
    if cfg.at.is_none() && cfg.out.is_none() {
        return Err(invalid("give --at to print one value or --out for the CSV"));
    }
    if let Some(it) = cfg.at {
        println!("{}", schedule::lr_at(&lr_cfg, it)?);
    }
    if let Some(out) = &cfg.out {
        let mut buf = Vec::new();
        schedule::write_csv(&lr_cfg, cfg.stride, &mut buf).map_err(|e| invalid(e.to_string()))?;
        write_file(out, &buf)?;
    }
    Ok(())
}

// ------------------------------------------------------------------- eval

#[derive(Args, Serialize)]
pub struct EvalArgs {
    /// COCO annotation file.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// COCO results, as a JSON array or one object per line.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Metrics JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
struct EvalConfig {
    annotations: Option<PathBuf>,
    results: Option<PathBuf>,
    out: Option<PathBuf>,
}

pub fn eval(ctx: &Ctx, args: &EvalArgs) -> Result<()> {
    let cfg: EvalConfig = ctx.resolve(&EvalConfig::default(), args)?;
    ctx.log("eval", false, &cfg)?;
    let ann = required(&cfg.annotations, "annotations")?;
    let res = required(&cfg.results, "results")?;
    let dataset = CocoDataset::from_json(&read_text(ann)?).with_context(|| format!("parsing {}", ann.display()))?;
    let results = evalmap::parse_results(&read_text(res)?).with_context(|| format!("parsing {}", res.display()))?;
    let metrics = evalmap::evaluate_dataset(&dataset, &results)?;
    let text = pretty(&metrics)?;
    if let Some(out) = &cfg.out {
        write_file(out, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

// -------------------------------------------------------------- losscheck

#[derive(Args, Serialize)]
pub struct LosscheckArgs {
    /// Random points per check.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flip the sign of the analytic loss gradient (harness self-test).
    #[arg(long, hide = true)]
    inject_wrong_sign: bool,
}

#[derive(Serialize, Deserialize)]
struct LosscheckConfig {
    points: usize,
    out: Option<PathBuf>,
    inject_wrong_sign: bool,
}

impl Default for LosscheckConfig {
    fn default() -> Self {
        Self {
            points: 100,
            out: None,
            inject_wrong_sign: false,
        }
    }
}

pub const LOSSCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Serialize)]
struct CheckSummary {
    name: &'static str,
    points: usize,
    max_rel_error: f64,
    worst_x: f64,
    pass: bool,
}

fn summarize(name: &'static str, errs: &[(f64, f64)]) -> CheckSummary {
    let (worst_x, max_rel_error) =
        errs.iter().copied().fold(
            (f64::NAN, 0.0),
            |acc, (x, e)| if e > acc.1 || acc.0.is_nan() { (x, e) } else { acc },
        );
    CheckSummary {
        name,
        points: errs.len(),
        max_rel_error,
        worst_x,
        pass: max_rel_error <= LOSSCHECK_TOLERANCE,
    }
}

pub fn losscheck(ctx: &Ctx, args: &LosscheckArgs) -> Result<()> {
    let cfg: LosscheckConfig = ctx.resolve(&LosscheckConfig::default(), args)?;
    ctx.log("losscheck", true, &cfg)?;
    if cfg.points == 0 {
        return Err(invalid("--points must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let sign = if cfg.inject_wrong_sign { -1.0 } else { 1.0 };

    let mut loss_errs = Vec::with_capacity(cfg.points);
    for _ in 0..cfg.points {
        let t: f64 = rng.random();
        let p: f64 = rng.random_range(-10.0..10.0);
        let c = check_scalar(|p| bce_with_logits(p, t), |p| sign * iou_aware_loss_grad(t, p), p);
        loss_errs.push((p, c.rel_error));
    }
    let standard = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let xs: Vec<f64> = standard
        .iter()
        .copied()
        .chain((0..cfg.points).map(|_| rng.random_range(-6.0..6.0)))
        .collect();
    let act_errs = |f: fn(f64) -> f64, df: fn(f64) -> f64| -> Vec<(f64, f64)> {
        xs.iter().map(|&x| (x, check_scalar(f, df, x).rel_error)).collect()
    };
    let checks = [
        summarize("iou_aware_loss", &loss_errs),
        summarize("mish", &act_errs(refexec::mish, refexec::mish_grad)),
        summarize("silu", &act_errs(refexec::silu, refexec::silu_grad)),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = json!({"tolerance": LOSSCHECK_TOLERANCE, "checks": checks, "pass": pass});
    let text = pretty(&report)?;
    if let Some(out) = &cfg.out {
        write_file(out, text.as_bytes())?;
    }
    print!("{text}");
    std::io::stdout().flush()?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(NumericFailure(format!("gradient check failed: {}", failed.join(", "))).into())
    }
}
