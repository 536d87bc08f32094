use pptk::augment::{
    color_distort_with, crop_with, denormalize, expand_with, flip, mixup_with_lambda, normalize, random_color_distort,
    random_crop, random_expand, run_pipeline, sample_input_size, sample_mixup_lambda, ColorParams, PipelineConfig,
    Sample, SizeList,
};
use pptk::geometry::iou;
use pptk::{BBox, TensorF32};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sample(rng: &mut ChaCha8Rng, h: usize, w: usize, nboxes: usize) -> Sample {
    let image = TensorF32::from_fn(&[3, h, w], |_| rng.random_range(0.0..1.0));
    let boxes = (0..nboxes)
        .map(|_| {
            let bw = rng.random_range(2.0..w as f64 / 2.0);
            let bh = rng.random_range(2.0..h as f64 / 2.0);
            let x = rng.random_range(0.0..w as f64 - bw);
            let y = rng.random_range(0.0..h as f64 - bh);
            BBox::new(x, y, x + bw, y + bh)
        })
        .collect();
    let labels = (0..nboxes).map(|i| i % 3).collect();
    Sample::new(image, boxes, labels).unwrap()
}

#[test]
fn beta_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws: Vec<f64> = (0..100_000).map(|_| sample_mixup_lambda(&mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
    assert!((mean - 0.5).abs() <= 0.01, "mean {mean}");
    // αβ / ((α+β)²(α+β+1)) = 2.25 / 36
    assert!((var - 2.25 / 36.0).abs() <= 0.005, "variance {var}");
}

#[test]
fn mixup_with_full_weight_keeps_first_image() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_sample(&mut rng, 8, 8, 2);
    let b = random_sample(&mut rng, 8, 8, 3);
    let m = mixup_with_lambda(&a, &b, 1.0).unwrap();
    assert_eq!(m.image, a.image);
    assert_eq!(m.boxes.len(), 5);
    assert_eq!(m.weights, vec![1.0, 1.0, 0.0, 0.0, 0.0]);
    let half = mixup_with_lambda(&a, &b, 0.25).unwrap();
    assert_eq!(half.weights, vec![0.25, 0.25, 0.75, 0.75, 0.75]);
    let other = random_sample(&mut rng, 8, 9, 1);
    assert!(mixup_with_lambda(&a, &other, 0.5).is_err());
}

#[test]
fn color_identity_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_sample(&mut rng, 6, 7, 1);
    assert_eq!(color_distort_with(&s, &ColorParams::IDENTITY).unwrap(), s);
    let (out, fired) = random_color_distort(&s, &mut rng, 0.0).unwrap();
    assert!(!fired);
    assert_eq!(out, s);
}

#[test]
fn gray_stays_gray() {
    let gray = TensorF32::from_fn(&[3, 4, 4], |i| ((i % 16) as f32) / 16.0);
    let s = Sample::new(gray, vec![], vec![]).unwrap();
    for sat in [0.5, 1.3] {
        for hue in [0.0, 12.0] {
            let p = ColorParams {
                saturation: sat,
                hue_deg: hue,
                ..ColorParams::IDENTITY
            };
            let out = color_distort_with(&s, &p).unwrap();
            let d = out.image.data();
            for i in 0..16 {
                assert!((d[i] - d[16 + i]).abs() < 1e-6 && (d[i] - d[32 + i]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn expand_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_sample(&mut rng, 10, 12, 3);
    assert_eq!(expand_with(&s, 1.0, 0, 0).unwrap(), s);
    let e = expand_with(&s, 2.0, 0, 0).unwrap();
    assert_eq!(e.image.dims(), &[3, 20, 24]);
    assert_eq!(e.boxes, s.boxes);
    for _ in 0..200 {
        let (e, fired) = random_expand(&s, &mut rng, 1.0, 4.0).unwrap();
        assert!(fired);
        e.validate().unwrap();
        for (a, b) in s.boxes.iter().zip(&e.boxes) {
            assert!((a.area() - b.area()).abs() < 1e-9);
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((iou(&s.boxes[i], &s.boxes[j]) - iou(&e.boxes[i], &e.boxes[j])).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn crop_cases() {
    let image = TensorF32::from_fn(&[3, 20, 20], |i| i as f32 / 1200.0);
    let s = Sample::new(
        image,
        vec![BBox::new(1.0, 1.0, 5.0, 5.0), BBox::new(12.0, 12.0, 19.0, 19.0)],
        vec![4, 7],
    )
    .unwrap();
    assert_eq!(crop_with(&s, (0, 0, 20, 20)).unwrap(), s);
    let c = crop_with(&s, (8, 8, 12, 12)).unwrap();
    assert_eq!(c.labels, vec![7]);
    assert_eq!(c.weights.len(), 1);
    assert_eq!(c.boxes, vec![BBox::new(4.0, 4.0, 11.0, 11.0)]);
}

#[test]
fn random_crops_keep_boxes_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let s = random_sample(&mut rng, 24, 32, 3);
        let (c, _) = random_crop(&s, &mut rng, 1.0).unwrap();
        c.validate().unwrap();
        let (_, h, w) = c.chw().unwrap();
        assert!(c
            .boxes
            .iter()
            .all(|b| b.x1 >= 0.0 && b.y1 >= 0.0 && b.x2 <= w as f64 && b.y2 <= h as f64));
    }
}

#[test]
fn flip_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = random_sample(&mut rng, 5, 9, 4);
    let twice = flip(&flip(&s).unwrap()).unwrap();
    assert_eq!(twice.image, s.image);
    for (a, b) in twice.boxes.iter().zip(&s.boxes) {
        assert!(a.key().iter().zip(b.key()).all(|(u, v)| (u - v).abs() < 1e-12));
    }
    // coordinates on a dyadic grid mirror without rounding
    let mut grid = s.clone();
    for b in &mut grid.boxes {
        *b = BBox::new(
            (b.x1 * 256.0).floor() / 256.0,
            b.y1,
            (b.x2 * 256.0).ceil() / 256.0,
            b.y2,
        );
    }
    assert_eq!(flip(&flip(&grid).unwrap()).unwrap(), grid);
    let img = TensorF32::zeros(&[3, 20, 100]);
    let t = Sample::new(
        img,
        vec![BBox::new(0.0, 0.0, 10.0, 10.0), BBox::new(40.0, 2.0, 60.0, 8.0)],
        vec![0, 1],
    )
    .unwrap();
    let f = flip(&t).unwrap();
    assert_eq!(
        f.boxes,
        vec![BBox::new(90.0, 0.0, 100.0, 10.0), BBox::new(40.0, 2.0, 60.0, 8.0)]
    );
}

#[test]
fn normalization_constants() {
    let px = |r: f32, g: f32, b: f32| {
        Sample::new(TensorF32::new(vec![3, 1, 1], vec![r, g, b]).unwrap(), vec![], vec![]).unwrap()
    };
    assert_eq!(
        normalize(&px(0.485, 0.456, 0.406)).unwrap().image.data(),
        &[0.0, 0.0, 0.0]
    );
    let ones = normalize(&px(1.0, 1.0, 1.0)).unwrap();
    for (v, want) in ones.image.data().iter().zip([2.2489, 2.4286, 2.6400]) {
        assert!((v - want).abs() < 1e-3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = random_sample(&mut rng, 8, 8, 0);
    let back = denormalize(&normalize(&s).unwrap()).unwrap();
    assert!(back.image.max_abs_diff(&s.image).unwrap() <= 1e-6);
}

#[test]
fn size_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let list = SizeList::standard();
    assert_eq!(list.sizes().len(), 10);
    let mut counts = std::collections::HashMap::new();
    for _ in 0..100_000 {
        *counts.entry(sample_input_size(&mut rng, &list)).or_insert(0usize) += 1;
    }
    for s in list.sizes() {
        assert!((counts[s] as f64 / 1e5 - 0.1).abs() <= 0.01);
    }
    let large = SizeList::large();
    assert_eq!(large.sizes().len(), 15);
    let max = (0..1000).map(|_| sample_input_size(&mut rng, &large)).max().unwrap();
    assert_eq!(max, 768);
    let one = SizeList::new(vec![416]).unwrap();
    assert!((0..100).all(|_| sample_input_size(&mut rng, &one) == 416));
    assert!(SizeList::new(vec![320, 300]).is_err());
    assert!(SizeList::new(vec![352, 320]).is_err());
}

#[test]
fn pipeline_trigger_rates_and_invariants() {
    let cfg = PipelineConfig {
        sizes: SizeList::new(vec![32, 64]).unwrap(),
        ..Default::default()
    };
    let mut counts = std::collections::HashMap::new();
    let runs = 10_000;
    for seed in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sample(&mut rng, 32, 32, 2);
        let out = run_pipeline(&cfg, &a, None, &mut rng).unwrap();
        out.sample.validate().unwrap();
        assert_eq!(out.sample.image.dims(), &[3, out.input_size, out.input_size]);
        for op in out.applied_ops {
            *counts.entry(op).or_insert(0usize) += 1;
        }
    }
    for op in ["color_distort", "expand", "crop", "flip"] {
        let rate = counts[op] as f64 / runs as f64;
        assert!((rate - 0.5).abs() <= 0.01, "{op}: {rate}");
    }
}

#[test]
fn pipeline_is_deterministic_and_carries_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = random_sample(&mut rng, 32, 32, 2);
    let b = random_sample(&mut rng, 32, 32, 2);
    let cfg = PipelineConfig::default();
    let run = |seed| run_pipeline(&cfg, &a, Some(&b), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let (x, y) = (run(3), run(3));
    assert_eq!(x, y);
    assert_eq!(x.applied_ops[0], "mixup");
    assert!(x.sample.weights.iter().all(|w| (0.0..=1.0).contains(w)));
}
