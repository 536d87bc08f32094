//! Graph builders for the ResNet50-vd backbone, the two neck designs and the
//! YOLO head.
//!
//! Node names are dotted paths (`backbone.res3.1.branch2b.conv`). Neck level
//! `i` counts from the coarsest map: level 0 is stride 32 with
//! `base_width` channels, level 2 is stride 8 with `base_width / 4`.

use serde::{Deserialize, Serialize};

use super::spec::{Activation, ConvSpec, GraphSpec, LayerKind, LayerSpec};

/// Channel widths of C3, C4, C5.
pub const BACKBONE_CHANNELS: [usize; 3] = [512, 1024, 2048];
pub const HEAD_STRIDES: [usize; 3] = [8, 16, 32];
pub const DEFAULT_DROPBLOCK_BLOCK_SIZE: usize = 3;
pub const DEFAULT_DROPBLOCK_KEEP_PROB: f32 = 0.9;
const SPP_POOLS: [usize; 3] = [5, 9, 13];

struct Builder {
    graph: GraphSpec,
    stage: Option<usize>,
}

impl Builder {
    fn new(inputs: &[&str]) -> Self {
        Self {
            graph: GraphSpec {
                inputs: inputs.iter().map(|s| s.to_string()).collect(),
                ..GraphSpec::default()
            },
            stage: None,
        }
    }

    fn add(&mut self, name: impl Into<String>, kind: LayerKind, inputs: &[&str]) -> String {
        let mut node = LayerSpec::new(name, kind, inputs);
        node.stage = self.stage;
        let name = node.name.clone();
        self.graph.nodes.push(node);
        name
    }

    fn norm_act(&mut self, name: &str, conv: String, ch: usize, act: Option<Activation>) -> String {
        let bn = self.add(format!("{name}.bn"), LayerKind::BatchNorm { channels: ch }, &[&conv]);
        match act {
            Some(a) => self.add(format!("{name}.act"), LayerKind::Activation(a), &[&bn]),
            None => bn,
        }
    }

    /// conv → batch norm → activation.
    fn cba(&mut self, name: &str, input: &str, spec: ConvSpec, act: Option<Activation>) -> String {
        let conv = self.add(format!("{name}.conv"), LayerKind::Conv2d(spec), &[input]);
        self.norm_act(name, conv, spec.out_ch, act)
    }

    fn coord_cba(&mut self, name: &str, input: &str, spec: ConvSpec, act: Activation) -> String {
        let conv = self.add(format!("{name}.coordconv"), LayerKind::CoordConv(spec), &[input]);
        self.norm_act(name, conv, spec.out_ch, Some(act))
    }

    fn deform_cba(&mut self, name: &str, input: &str, spec: ConvSpec, act: Activation) -> String {
        let conv = self.add(format!("{name}.dcn"), LayerKind::DeformConv2d(spec), &[input]);
        self.norm_act(name, conv, spec.out_ch, Some(act))
    }

    fn dropblock(&mut self, name: &str, input: &str, cfg: Option<(usize, f32)>) -> String {
        match cfg {
            Some((block_size, keep_prob)) => self.add(name, LayerKind::DropBlock { block_size, keep_prob }, &[input]),
            None => input.to_string(),
        }
    }

    fn finish(self, outputs: Vec<String>) -> GraphSpec {
        let graph = GraphSpec { outputs, ..self.graph };
        debug_assert!(graph.validate().is_ok(), "{:?}", graph.validate());
        graph
    }
}

fn backbone(b: &mut Builder, input: &str, dcn_in_stage5: bool) -> [(String, usize); 3] {
    let relu = Some(Activation::Relu);
    b.stage = Some(0);
    let mut x = b.cba("backbone.stem.conv1", input, ConvSpec::new(3, 32, 3, 2), relu);
    x = b.cba("backbone.stem.conv2", &x, ConvSpec::new(32, 32, 3, 1), relu);
    x = b.cba("backbone.stem.conv3", &x, ConvSpec::new(32, 64, 3, 1), relu);
    x = b.add(
        "backbone.stem.pool",
        LayerKind::MaxPool {
            kernel: 3,
            stride: 2,
            pad: 1,
        },
        &[&x],
    );

    let mut in_ch = 64;
    let mut feats = Vec::new();
    for (stage, (blocks, mid)) in [(3usize, 64usize), (4, 128), (6, 256), (3, 512)]
        .into_iter()
        .enumerate()
    {
        let stage = stage + 1;
        b.stage = Some(stage);
        let out_ch = mid * 4;
        for block in 0..blocks {
            let p = format!("backbone.res{}.{block}", stage + 1);
            let stride = if block == 0 && stage > 1 { 2 } else { 1 };
            let a = b.cba(&format!("{p}.branch2a"), &x, ConvSpec::new(in_ch, mid, 1, 1), relu);
            let mid_spec = ConvSpec::new(mid, mid, 3, stride);
            let bb = if dcn_in_stage5 && stage == 4 {
                b.deform_cba(&format!("{p}.branch2b"), &a, mid_spec, Activation::Relu)
            } else {
                b.cba(&format!("{p}.branch2b"), &a, mid_spec, relu)
            };
            let c = b.cba(&format!("{p}.branch2c"), &bb, ConvSpec::new(mid, out_ch, 1, 1), None);
            let short = if block > 0 {
                x.clone()
            } else if stride == 2 {
                // vd downsampling: average-pool, then a stride-1 projection
                let pooled = b.add(
                    format!("{p}.branch1.pool"),
                    LayerKind::AvgPool {
                        kernel: 2,
                        stride: 2,
                        pad: 0,
                        ceil_mode: true,
                    },
                    &[&x],
                );
                b.cba(
                    &format!("{p}.branch1"),
                    &pooled,
                    ConvSpec::new(in_ch, out_ch, 1, 1),
                    None,
                )
            } else {
                b.cba(&format!("{p}.branch1"), &x, ConvSpec::new(in_ch, out_ch, 1, 1), None)
            };
            let sum = b.add(format!("{p}.add"), LayerKind::Add, &[&c, &short]);
            x = b.add(format!("{p}.relu"), LayerKind::Activation(Activation::Relu), &[&sum]);
            in_ch = out_ch;
        }
        if stage >= 2 {
            feats.push((x.clone(), out_ch));
        }
    }
    b.stage = None;
    [feats[0].clone(), feats[1].clone(), feats[2].clone()]
}

/// ResNet50-vd with a three-conv stem. Outputs C3, C4, C5 (strides 8, 16, 32).
/// With `dcn_in_stage5`, every 3×3 conv of the last stage is deformable.
pub fn build_backbone_resnet50vd(dcn_in_stage5: bool) -> GraphSpec {
    let mut b = Builder::new(&["image"]);
    let feats = backbone(&mut b, "image", dcn_in_stage5);
    b.finish(feats.into_iter().map(|(n, _)| n).collect())
}

#[derive(Debug, Clone, Copy)]
struct NeckOpts {
    base_width: usize,
    act: Activation,
    spp: bool,
    dropblock: Option<(usize, f32)>,
}

impl NeckOpts {
    fn width(&self, level: usize) -> usize {
        self.base_width >> level
    }
}

/// Cross-stage block: two 1×1 projections, a stack of 1×1/3×3 pairs on one of
/// them, concatenation, and a 1×1 merge to `2·ch` channels. With `spp`, the
/// second 3×3 is replaced by SPP followed by a 1×1 reduction.
fn csp_block(b: &mut Builder, name: &str, input: &str, ch_in: usize, ch: usize, spp: bool, o: &NeckOpts) -> String {
    let act = Some(o.act);
    let left = b.cba(&format!("{name}.conv1"), input, ConvSpec::new(ch_in, ch, 1, 1), act);
    let right = b.cba(&format!("{name}.conv2"), input, ConvSpec::new(ch_in, ch, 1, 1), act);
    let mut x = left;
    for j in 0..3 {
        x = b.cba(&format!("{name}.{j}.0"), &x, ConvSpec::new(ch, ch, 1, 1), act);
        if j == 1 && spp {
            let pooled = b.add(
                format!("{name}.spp"),
                LayerKind::Spp {
                    pool_sizes: SPP_POOLS.to_vec(),
                },
                &[&x],
            );
            x = b.cba(
                &format!("{name}.spp.conv"),
                &pooled,
                ConvSpec::new(4 * ch, ch, 1, 1),
                act,
            );
        } else {
            x = b.cba(&format!("{name}.{j}.1"), &x, ConvSpec::new(ch, ch, 3, 1), act);
        }
        if j == 1 {
            x = b.dropblock(&format!("{name}.dropblock"), &x, o.dropblock);
        }
    }
    let cat = b.add(format!("{name}.concat"), LayerKind::Concat, &[&x, &right]);
    b.cba(&format!("{name}.conv3"), &cat, ConvSpec::new(2 * ch, 2 * ch, 1, 1), act)
}

/// Top-down half. `feats` are C3, C4, C5 with their widths; returns the three
/// FPN outputs ordered stride 8, 16, 32.
fn fpn_half(b: &mut Builder, feats: &[(String, usize); 3], o: &NeckOpts) -> [(String, usize); 3] {
    let mut outs: Vec<(String, usize)> = Vec::new();
    let mut route: Option<(String, usize)> = None;
    for level in 0..3 {
        let (feat, feat_ch) = &feats[2 - level];
        let ch = o.width(level);
        let (input, ch_in) = match &route {
            None => (feat.clone(), *feat_ch),
            Some((r, r_ch)) => {
                let up = b.add(format!("neck.fpn_up.{level}"), LayerKind::UpsampleNearest2x, &[r]);
                let cat = b.add(format!("neck.fpn_concat.{level}"), LayerKind::Concat, &[&up, feat]);
                (cat, feat_ch + r_ch)
            }
        };
        let out = csp_block(
            b,
            &format!("neck.fpn.{level}"),
            &input,
            ch_in,
            ch,
            o.spp && level == 0,
            o,
        );
        if level < 2 {
            let r = b.cba(
                &format!("neck.fpn_transition.{level}"),
                &out,
                ConvSpec::new(2 * ch, ch, 1, 1),
                Some(o.act),
            );
            route = Some((r, ch));
        }
        outs.push((out, 2 * ch));
    }
    outs.reverse();
    [outs[0].clone(), outs[1].clone(), outs[2].clone()]
}

/// Bottom-up half over FPN outputs ordered stride 8, 16, 32. Each PAN block
/// output gets an identity skip from the FPN output of the same level.
fn pan_half(b: &mut Builder, fpn: &[(String, usize); 3], o: &NeckOpts) -> [(String, usize); 3] {
    let mut outs = vec![fpn[0].clone()];
    let (mut prev, mut prev_ch) = fpn[0].clone();
    for level in [1usize, 0] {
        let (lateral, lateral_ch) = &fpn[2 - level];
        let ch = o.width(level);
        let down = b.cba(
            &format!("neck.pan_transition.{level}"),
            &prev,
            ConvSpec::new(prev_ch, prev_ch, 3, 2),
            Some(o.act),
        );
        let cat = b.add(format!("neck.pan_concat.{level}"), LayerKind::Concat, &[&down, lateral]);
        let block = csp_block(
            b,
            &format!("neck.pan.{level}"),
            &cat,
            prev_ch + lateral_ch,
            ch,
            false,
            o,
        );
        let skip = b.add(format!("neck.pan_skip.{level}"), LayerKind::Add, &[&block, lateral]);
        prev = skip;
        prev_ch = 2 * ch;
        outs.push((prev.clone(), prev_ch));
    }
    [outs[0].clone(), outs[1].clone(), outs[2].clone()]
}

/// PP-YOLO detection block for one FPN level (YOLOv3 lineage) with CoordConv,
/// SPP on the coarsest level and DropBlock. Returns the route (`ch` wide); the
/// 3×3 tip that doubles it belongs to the head stem.
fn ppyolo_det_block(b: &mut Builder, level: usize, input: &str, ch_in: usize, ch: usize, o: &NeckOpts) -> String {
    let name = format!("neck.fpn.{level}");
    let act = o.act;
    let mut x = b.coord_cba(&format!("{name}.conv0"), input, ConvSpec::new(ch_in, ch, 1, 1), act);
    x = b.cba(&format!("{name}.conv1"), &x, ConvSpec::new(ch, 2 * ch, 3, 1), Some(act));
    if level == 0 {
        x = b.coord_cba(&format!("{name}.conv2"), &x, ConvSpec::new(2 * ch, ch, 1, 1), act);
        if o.spp {
            let pooled = b.add(
                format!("{name}.spp"),
                LayerKind::Spp {
                    pool_sizes: SPP_POOLS.to_vec(),
                },
                &[&x],
            );
            x = b.cba(
                &format!("{name}.spp.conv"),
                &pooled,
                ConvSpec::new(4 * ch, ch, 1, 1),
                Some(act),
            );
        }
        x = b.cba(&format!("{name}.conv3"), &x, ConvSpec::new(ch, 2 * ch, 3, 1), Some(act));
        x = b.dropblock(&format!("{name}.dropblock"), &x, o.dropblock);
    } else {
        x = b.dropblock(&format!("{name}.dropblock"), &x, o.dropblock);
        x = b.coord_cba(&format!("{name}.conv2"), &x, ConvSpec::new(2 * ch, ch, 1, 1), act);
        x = b.cba(&format!("{name}.conv3"), &x, ConvSpec::new(ch, 2 * ch, 3, 1), Some(act));
    }
    b.coord_cba(&format!("{name}.route"), &x, ConvSpec::new(2 * ch, ch, 1, 1), act)
}

fn ppyolo_fpn(b: &mut Builder, feats: &[(String, usize); 3], o: &NeckOpts) -> [(String, usize); 3] {
    let mut outs = Vec::new();
    let mut transition: Option<(String, usize)> = None;
    for level in 0..3 {
        let (feat, feat_ch) = &feats[2 - level];
        let ch = o.width(level);
        let (input, ch_in) = match &transition {
            None => (feat.clone(), *feat_ch),
            Some((t, t_ch)) => {
                let up = b.add(format!("neck.fpn_up.{level}"), LayerKind::UpsampleNearest2x, &[t]);
                let cat = b.add(format!("neck.fpn_concat.{level}"), LayerKind::Concat, &[&up, feat]);
                (cat, feat_ch + t_ch)
            }
        };
        let route = ppyolo_det_block(b, level, &input, ch_in, ch, o);
        if level < 2 {
            let t = b.coord_cba(
                &format!("neck.fpn_transition.{level}"),
                &route,
                ConvSpec::new(ch, ch / 2, 1, 1),
                o.act,
            );
            transition = Some((t, ch / 2));
        }
        outs.push((route, ch));
    }
    outs.reverse();
    [outs[0].clone(), outs[1].clone(), outs[2].clone()]
}

fn entry_feats(names: [&str; 3], widths: [usize; 3]) -> [(String, usize); 3] {
    [0, 1, 2].map(|i| (names[i].to_string(), widths[i]))
}

fn pan_opts() -> NeckOpts {
    NeckOpts {
        base_width: 512,
        act: Activation::Mish,
        spp: true,
        dropblock: Some((DEFAULT_DROPBLOCK_BLOCK_SIZE, DEFAULT_DROPBLOCK_KEEP_PROB)),
    }
}

/// FPN followed by PAN, Mish activations, SPP in the first FPN block and
/// DropBlock in every block. Entries `C3`, `C4`, `C5`; outputs ordered stride
/// 8, 16, 32 with widths 256, 512, 1024.
pub fn build_pan_neck(c3_ch: usize, c4_ch: usize, c5_ch: usize) -> GraphSpec {
    let mut b = Builder::new(&["C3", "C4", "C5"]);
    let o = pan_opts();
    let fpn = fpn_half(&mut b, &entry_feats(["C3", "C4", "C5"], [c3_ch, c4_ch, c5_ch]), &o);
    let pan = pan_half(&mut b, &fpn, &o);
    b.finish(pan.into_iter().map(|(n, _)| n).collect())
}

/// Just the top-down half of [`build_pan_neck`].
pub fn build_fpn_half(c3_ch: usize, c4_ch: usize, c5_ch: usize) -> GraphSpec {
    let mut b = Builder::new(&["C3", "C4", "C5"]);
    let fpn = fpn_half(
        &mut b,
        &entry_feats(["C3", "C4", "C5"], [c3_ch, c4_ch, c5_ch]),
        &pan_opts(),
    );
    b.finish(fpn.into_iter().map(|(n, _)| n).collect())
}

/// Just the bottom-up half of [`build_pan_neck`], over entries `F3`, `F4`, `F5`
/// (the FPN outputs, widths 256, 512, 1024).
pub fn build_pan_half() -> GraphSpec {
    let o = pan_opts();
    let mut b = Builder::new(&["F3", "F4", "F5"]);
    let widths = [2 * o.width(2), 2 * o.width(1), 2 * o.width(0)];
    let pan = pan_half(&mut b, &entry_feats(["F3", "F4", "F5"], widths), &o);
    b.finish(pan.into_iter().map(|(n, _)| n).collect())
}

/// The PP-YOLO FPN neck: leaky ReLU, CoordConv, SPP and DropBlock. Outputs
/// the routes at widths 128, 256, 512 (stride 8, 16, 32).
pub fn build_ppyolo_fpn_neck(c3_ch: usize, c4_ch: usize, c5_ch: usize) -> GraphSpec {
    let mut b = Builder::new(&["C3", "C4", "C5"]);
    let o = NeckOpts {
        act: Activation::LeakyRelu,
        ..pan_opts()
    };
    let outs = ppyolo_fpn(&mut b, &entry_feats(["C3", "C4", "C5"], [c3_ch, c4_ch, c5_ch]), &o);
    b.finish(outs.into_iter().map(|(n, _)| n).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub num_classes: usize,
    pub anchors_per_level: usize,
    pub iou_aware: bool,
    /// Input widths ordered stride 8, 16, 32.
    pub in_channels: [usize; 3],
    /// When set, each level starts with a 3×3 conv doubling its width.
    pub stem: Option<Activation>,
}

impl HeadConfig {
    pub fn new(num_classes: usize, anchors_per_level: usize, iou_aware: bool) -> Self {
        Self {
            num_classes,
            anchors_per_level,
            iou_aware,
            in_channels: [128, 256, 512],
            stem: Some(Activation::Mish),
        }
    }

    /// Values predicted per anchor: box (4), objectness, classes, optional IoU.
    pub fn values_per_anchor(&self) -> usize {
        5 + self.num_classes + usize::from(self.iou_aware)
    }

    pub fn out_channels(&self) -> usize {
        self.anchors_per_level * self.values_per_anchor()
    }
}

fn head(b: &mut Builder, feats: &[(String, usize); 3], cfg: &HeadConfig) -> Vec<String> {
    feats
        .iter()
        .zip(HEAD_STRIDES)
        .map(|((feat, ch), stride)| {
            let (x, ch) = match cfg.stem {
                Some(act) => {
                    let x = b.cba(
                        &format!("head.s{stride}.stem"),
                        feat,
                        ConvSpec::new(*ch, 2 * ch, 3, 1),
                        Some(act),
                    );
                    (x, 2 * ch)
                }
                None => (feat.clone(), *ch),
            };
            b.add(
                format!("head.s{stride}.out"),
                LayerKind::Conv2d(ConvSpec::new(ch, cfg.out_channels(), 1, 1).with_bias()),
                &[&x],
            )
        })
        .collect()
}

/// YOLO head with a 3×3 stem per level. Entries `P3`, `P4`, `P5` at widths
/// 128, 256, 512; each output has `anchors × (5 + classes + iou)` channels.
pub fn build_head(num_classes: usize, anchors_per_level: usize, iou_aware: bool) -> GraphSpec {
    build_head_with(&HeadConfig::new(num_classes, anchors_per_level, iou_aware))
}

pub(crate) fn build_head_with(cfg: &HeadConfig) -> GraphSpec {
    let mut b = Builder::new(&["P3", "P4", "P5"]);
    let outs = head(&mut b, &entry_feats(["P3", "P4", "P5"], cfg.in_channels), cfg);
    b.finish(outs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeckKind {
    /// PP-YOLO FPN: leaky ReLU, CoordConv, head stems.
    PpyoloFpn,
    /// CSP-style FPN + PAN with Mish and a plain 1×1 head.
    Pan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dcn_in_stage5: bool,
    pub neck: NeckKind,
    pub neck_act: Activation,
    /// Width of the coarsest neck level; finer levels halve it.
    pub neck_base_width: usize,
    pub spp: bool,
    pub dropblock: bool,
    pub num_classes: usize,
    pub anchors_per_level: usize,
    pub iou_aware: bool,
    pub frozen_stages: usize,
}

impl ModelConfig {
    pub fn ppyolov2() -> Self {
        Self {
            dcn_in_stage5: true,
            neck: NeckKind::Pan,
            neck_act: Activation::Mish,
            neck_base_width: 512,
            spp: true,
            dropblock: true,
            num_classes: 80,
            anchors_per_level: 3,
            iou_aware: true,
            frozen_stages: 0,
        }
    }

    pub fn ppyolo() -> Self {
        Self {
            neck: NeckKind::PpyoloFpn,
            neck_act: Activation::LeakyRelu,
            ..Self::ppyolov2()
        }
    }

    pub fn head(&self) -> HeadConfig {
        let w = self.neck_base_width;
        match self.neck {
            NeckKind::PpyoloFpn => HeadConfig {
                num_classes: self.num_classes,
                anchors_per_level: self.anchors_per_level,
                iou_aware: self.iou_aware,
                in_channels: [w / 4, w / 2, w],
                stem: Some(self.neck_act),
            },
            NeckKind::Pan => HeadConfig {
                num_classes: self.num_classes,
                anchors_per_level: self.anchors_per_level,
                iou_aware: self.iou_aware,
                in_channels: [w / 2, w, 2 * w],
                stem: None,
            },
        }
    }
}

/// Backbone, neck and head in one graph with entry `image`; outputs ordered
/// stride 8, 16, 32.
pub fn build_model(cfg: &ModelConfig) -> GraphSpec {
    let mut b = Builder::new(&["image"]);
    let feats = backbone(&mut b, "image", cfg.dcn_in_stage5);
    let o = NeckOpts {
        base_width: cfg.neck_base_width,
        act: cfg.neck_act,
        spp: cfg.spp,
        dropblock: cfg
            .dropblock
            .then_some((DEFAULT_DROPBLOCK_BLOCK_SIZE, DEFAULT_DROPBLOCK_KEEP_PROB)),
    };
    let neck_out = match cfg.neck {
        NeckKind::Pan => {
            let fpn = fpn_half(&mut b, &feats, &o);
            pan_half(&mut b, &fpn, &o)
        }
        NeckKind::PpyoloFpn => ppyolo_fpn(&mut b, &feats, &o),
    };
    let outs = head(&mut b, &neck_out, &cfg.head());
    let mut graph = b.finish(outs);
    graph.frozen_stages = cfg.frozen_stages;
    graph
}

/// Rows of the refinement ablation, each one building on the previous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// PP-YOLO baseline: FPN neck, leaky ReLU, 608 input.
    A,
    /// A with the PAN neck and Mish.
    B,
    /// B evaluated at 640.
    C,
    /// C trained with sizes up to 768.
    D,
    /// D with the IoU-aware branch.
    E,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::A, Variant::B, Variant::C, Variant::D, Variant::E];

    pub fn model_config(self) -> ModelConfig {
        let cfg = match self {
            Variant::A => ModelConfig::ppyolo(),
            _ => ModelConfig::ppyolov2(),
        };
        ModelConfig {
            iou_aware: self == Variant::E,
            ..cfg
        }
    }

    pub fn eval_size(self) -> usize {
        match self {
            Variant::A | Variant::B => 608,
            _ => 640,
        }
    }

    /// Largest size of the multi-scale training list.
    pub fn max_train_size(self) -> usize {
        match self {
            Variant::D | Variant::E => 768,
            _ => 608,
        }
    }

    /// Published parameter count (millions) and GFLOPs for this row.
    pub fn reference_budget(self) -> (f64, f64) {
        match self {
            Variant::A => (45.0, 45.1),
            Variant::B => (54.0, 52.0),
            _ => (54.0, 57.6),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A" => Ok(Variant::A),
            "B" => Ok(Variant::B),
            "C" => Ok(Variant::C),
            "D" => Ok(Variant::D),
            "E" => Ok(Variant::E),
            _ => Err(crate::Error::invalid(format!(
                "unknown variant `{s}`, expected one of A..E"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}
