use pptk::anchors::{AnchorSet, HeadLayout};
use pptk::geometry::centered_iou;
use pptk::gradcheck::check_scalar;
use pptk::losses::{
    detection_losses, iou, iou_aware_loss, iou_aware_loss_grad, match_anchors, CellLabel, IoUAwareSample, Targets,
};
use pptk::{BBox, TensorF32};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Textbook soft-label cross-entropy; fine for the moderate logits used here.
fn xent(p: f64, t: f64) -> f64 {
    -t * sig(p).ln() - (1.0 - t) * (1.0 - sig(p)).ln()
}

fn box_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    inter / ((a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter)
}

#[test]
fn iou_reference_cases() {
    let a = BBox::new(0.0, 0.0, 2.0, 2.0);
    assert_eq!(iou(&a, &a), 1.0);
    assert_eq!(iou(&a, &BBox::new(5.0, 5.0, 6.0, 6.0)), 0.0);
    assert!((iou(&a, &BBox::new(1.0, 1.0, 3.0, 3.0)) - 1.0 / 7.0).abs() < 1e-12);
}

#[test]
fn iou_aware_gradient_over_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0f64;
    for _ in 0..100 {
        let t: f64 = rng.random_range(0.0..=1.0);
        let p: f64 = rng.random_range(-8.0..8.0);
        let f = |p| iou_aware_loss(&[IoUAwareSample { t, p, positive: true }]).unwrap();
        worst = worst.max(check_scalar(f, |p| iou_aware_loss_grad(t, p), p).rel_error);
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn iou_aware_loss_is_convex_in_logit() {
    for t in [0.0, 0.25, 0.9, 1.0] {
        let f = |p: f64| iou_aware_loss(&[IoUAwareSample { t, p, positive: true }]).unwrap();
        for i in -20..20 {
            let p = i as f64 * 0.5;
            assert!(f(p - 0.1) + f(p + 0.1) - 2.0 * f(p) >= -1e-12);
        }
    }
}

/// Exhaustive argmax of the centered IoU over every (level, anchor) pair.
fn brute_force_best(anchors: &AnchorSet, w: f64, h: f64) -> (usize, usize) {
    let mut pairs = Vec::new();
    for (l, level) in anchors.levels.iter().enumerate() {
        for (k, &(aw, ah)) in level.iter().enumerate() {
            let inter = w.min(aw) * h.min(ah);
            pairs.push((inter / (w * h + aw * ah - inter), l, k));
        }
    }
    let top = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (_, l, k) = *pairs.iter().filter(|p| p.0 == top).min_by_key(|p| (p.1, p.2)).unwrap();
    (l, k)
}

#[test]
fn matcher_agrees_with_exhaustive_argmax() {
    let anchors = AnchorSet::yolov3();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let size = 32 * rng.random_range(10..=20);
        let gts: Vec<BBox> = (0..5)
            .map(|_| {
                let w = rng.random_range(4.0..size as f64 * 0.8);
                let h = rng.random_range(4.0..size as f64 * 0.8);
                let x = rng.random_range(0.0..size as f64 - w);
                let y = rng.random_range(0.0..size as f64 - h);
                BBox::new(x, y, x + w, y + h)
            })
            .collect();
        let m = match_anchors(&gts, &anchors, size, 0.7).unwrap();
        for (gt, a) in gts.iter().zip(&m.assignments) {
            assert_eq!((a.level, a.anchor), brute_force_best(&anchors, gt.width(), gt.height()));
            let stride = anchors.strides[a.level] as f64;
            let (cx, cy) = gt.center();
            assert_eq!((a.grid_x, a.grid_y), ((cx / stride) as usize, (cy / stride) as usize));
            assert_eq!(
                a.anchor_iou,
                centered_iou((gt.width(), gt.height()), anchors.levels[a.level][a.anchor])
            );
        }
    }
}

#[test]
fn matcher_is_order_invariant() {
    let anchors = AnchorSet::yolov3();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        // few distinct sizes and positions so collisions actually happen
        let gts: Vec<BBox> = (0..6)
            .map(|_| {
                let c = 16.0 + 32.0 * rng.random_range(0..4) as f64;
                let s = [12.0, 40.0, 100.0][rng.random_range(0..3)];
                BBox::from_center(
                    c + rng.random_range(0..3) as f64,
                    c,
                    s,
                    s + rng.random_range(0..2) as f64,
                )
            })
            .collect();
        let mut shuffled: Vec<usize> = (0..gts.len()).collect();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<BBox> = shuffled.iter().map(|&i| gts[i]).collect();
        let key = |boxes: &[BBox]| {
            let m = match_anchors(boxes, &anchors, 128, 0.7).unwrap();
            let mut pos: Vec<_> = m
                .positives()
                .into_iter()
                .map(|(l, a, y, x, g)| (l, a, y, x, boxes[g].key()))
                .collect();
            pos.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let ignored: Vec<Vec<bool>> = m
                .labels
                .iter()
                .map(|v| v.iter().map(|l| *l == CellLabel::Ignored).collect())
                .collect();
            (pos, ignored)
        };
        assert_eq!(key(&gts), key(&permuted));
    }
}

/// Scalar re-implementation of the four loss terms given the match labels.
fn scalar_losses(
    heads: &[TensorF32],
    layout: &HeadLayout,
    anchors: &AnchorSet,
    labels: &[Vec<CellLabel>],
    t: &Targets,
) -> [f64; 4] {
    let v = layout.values_per_anchor();
    let mut out = [0.0; 4];
    for (l, head) in heads.iter().enumerate() {
        let g = head.dims()[2];
        let stride = anchors.strides[l] as f64;
        let at = |a: usize, j: usize, y: usize, x: usize| head.data()[((a * v + j) * g + y) * g + x] as f64;
        for a in 0..layout.anchors_per_level {
            for y in 0..g {
                for x in 0..g {
                    match labels[l][(a * g + y) * g + x] {
                        CellLabel::Ignored => {}
                        CellLabel::Negative => out[1] += xent(at(a, 4, y, x), 0.0),
                        CellLabel::Positive { gt } => {
                            let w = t.weights[gt];
                            let (aw, ah) = anchors.levels[l][a];
                            let cx = (sig(at(a, 0, y, x)) + x as f64) * stride;
                            let cy = (sig(at(a, 1, y, x)) + y as f64) * stride;
                            let pw = aw * at(a, 2, y, x).exp();
                            let ph = ah * at(a, 3, y, x).exp();
                            let pred = [cx - pw / 2.0, cy - ph / 2.0, cx + pw / 2.0, cy + ph / 2.0];
                            let b = t.boxes[gt];
                            let overlap = box_iou(pred, [b.x1, b.y1, b.x2, b.y2]);
                            out[0] += w * (1.0 - overlap);
                            out[1] += w * xent(at(a, 4, y, x), 1.0);
                            for c in 0..layout.num_classes {
                                out[2] += w * xent(at(a, 5 + c, y, x), if c == t.labels[gt] { 1.0 } else { 0.0 });
                            }
                            out[3] += w * xent(at(a, 5 + layout.num_classes, y, x), overlap);
                        }
                    }
                }
            }
        }
    }
    out
}

#[test]
fn detection_losses_match_scalar_oracle() {
    let anchors = AnchorSet::yolov3();
    let layout = HeadLayout {
        num_classes: 3,
        anchors_per_level: 3,
        iou_aware: true,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let size = 128;
    let heads: Vec<TensorF32> = anchors
        .strides
        .iter()
        .map(|s| {
            TensorF32::from_fn(&[1, layout.channels(), size / s, size / s], |_| {
                rng.random_range(-2.0..2.0)
            })
        })
        .collect();
    let targets = Targets {
        boxes: vec![BBox::new(10.0, 12.0, 30.0, 40.0), BBox::new(20.0, 30.0, 120.0, 110.0)],
        labels: vec![2, 0],
        weights: vec![0.7, 0.3],
    };
    let m = match_anchors(&targets.boxes, &anchors, size, 0.7).unwrap();
    assert_eq!(m.num_positives(), 2);
    let r = detection_losses(&heads, &layout, &anchors, &m, &targets).unwrap();
    let want = scalar_losses(&heads, &layout, &anchors, &m.labels, &targets);
    let got = [r.box_loss, r.obj_loss, r.cls_loss, r.iou_aware_loss];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= 1e-6 * w.abs().max(1.0), "{got:?} vs {want:?}");
    }
    let json = serde_json::to_value(r).unwrap();
    for k in ["box_loss", "obj_loss", "cls_loss", "iou_aware_loss", "num_positives"] {
        assert!(json.get(k).is_some(), "{k}");
    }
}

#[test]
fn iou_aware_and_box_loss_same_order_of_magnitude() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let n = 2000;
    let (mut aware, mut boxl) = (0.0, 0.0);
    for _ in 0..n {
        let t: f64 = rng.random_range(0.3..0.9);
        // a concentric box scaled by 1/√t has IoU exactly t with the target
        let gt = BBox::from_center(100.0, 100.0, 40.0, 30.0);
        let pred = BBox::from_center(100.0, 100.0, 40.0 / t.sqrt(), 30.0 / t.sqrt());
        let overlap = iou(&pred, &gt);
        assert!((overlap - t).abs() < 1e-9);
        let p = (t / (1.0 - t)).ln() + noise.sample(&mut rng);
        aware += iou_aware_loss(&[IoUAwareSample {
            t: overlap,
            p,
            positive: true,
        }])
        .unwrap();
        boxl += 1.0 - overlap;
    }
    let ratio = (aware / n as f64) / (boxl / n as f64);
    assert!((0.1..=10.0).contains(&ratio), "ratio {ratio}");
}
