mod common;

use std::collections::VecDeque;

use mammocad::evaluation::{confusion, metrics};
use mammocad::features::{stats7, NormalizationBounds};
use mammocad::gafs::{crossover, mutate, roulette_probabilities};
use mammocad::imaging::{crop_roi, equalize_histogram, GrayImage, Pixel};
use mammocad::neural::{Model, NetworkShape};
use mammocad::segmentation::{grow_region, inclusion_levels, threshold_sweep};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 8-bit images with intensities in `0..=top`.
fn image(max_side: usize, top: u16) -> impl Strategy<Value = GrayImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(w, h)| {
        prop::collection::vec(0..=top, w * h)
            .prop_map(move |px| GrayImage::new(w, h, 8, 0.1, px).unwrap())
    })
}

fn square(min: usize, max: usize) -> impl Strategy<Value = GrayImage> {
    (min..=max).prop_flat_map(|s| {
        prop::collection::vec(0u16..=255, s * s).prop_map(move |px| GrayImage::new(s, s, 8, 1.0, px).unwrap())
    })
}

/// Plain BFS over 8-neighbours, the reference for region growing.
fn flood_reference(img: &GrayImage, seed: Pixel, t: f64) -> Vec<bool> {
    let (w, h) = (img.width(), img.height());
    let base = img.get(seed.row, seed.col) as f64;
    let mut seen = vec![false; w * h];
    let mut q = VecDeque::from([seed]);
    seen[seed.row * w + seed.col] = true;
    while let Some(p) = q.pop_front() {
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (r, c) = (p.row as i64 + dr, p.col as i64 + dc);
                if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
                    continue;
                }
                let (r, c) = (r as usize, c as usize);
                if !seen[r * w + c] && (img.get(r, c) as f64 - base).abs() <= t {
                    seen[r * w + c] = true;
                    q.push_back(Pixel::new(r, c));
                }
            }
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn equalization_keeps_shape_and_order(img in image(12, 255)) {
        let out = equalize_histogram(&img);
        prop_assert_eq!((out.width(), out.height(), out.bit_depth()), (img.width(), img.height(), img.bit_depth()));
        let (px, qx) = (img.pixels(), out.pixels());
        for i in 0..px.len() {
            for j in 0..px.len() {
                if px[i] <= px[j] {
                    prop_assert!(qx[i] <= qx[j]);
                }
            }
        }
        let (lo, hi) = img.min_max();
        if lo != hi {
            let (olo, ohi) = out.min_max();
            prop_assert_eq!((olo, ohi), (0, 255));
        } else {
            prop_assert_eq!(&out, &img);
        }
    }

    #[test]
    fn equalization_is_idempotent(img in image(10, 255)) {
        let once = equalize_histogram(&img);
        prop_assert_eq!(equalize_histogram(&once), once);
    }

    #[test]
    fn equalization_approximates_uniform_cdf(img in image(12, 15)) {
        // Each output level lands within half a step plus the largest bin
        // mass of the ideal uniform CDF position.
        let out = equalize_histogram(&img);
        let n = img.pixels().len() as f64;
        let top = f64::from(img.max_level());
        let mut hist = vec![0usize; 256];
        for &v in img.pixels() {
            hist[v as usize] += 1;
        }
        let p_max = *hist.iter().max().unwrap() as f64 / n;
        for (k, &v) in img.pixels().iter().enumerate() {
            let below = img.pixels().iter().filter(|&&u| u <= v).count() as f64 / n;
            let got = f64::from(out.pixels()[k]) / top;
            prop_assert!((got - below).abs() <= p_max + 0.5 / top + 1e-12);
        }
    }

    #[test]
    fn crop_is_square_window_of_source(img in image(24, 255), r in 1usize..6, pr in 0usize..24, pc in 0usize..24) {
        let center = Pixel::new(pr % img.height(), pc % img.width());
        let side = 2 * r + 1;
        match crop_roi(&img, center, r) {
            Ok(roi) => {
                prop_assert_eq!((roi.width(), roi.height()), (side, side));
                prop_assert_eq!(roi.spacing_mm(), img.spacing_mm());
                let top = center.row.saturating_sub(r).min(img.height() - side);
                let left = center.col.saturating_sub(r).min(img.width() - side);
                prop_assert!(center.row >= top && center.row < top + side);
                prop_assert!(center.col >= left && center.col < left + side);
                for y in 0..side {
                    for x in 0..side {
                        prop_assert_eq!(roi.get(y, x), img.get(top + y, left + x));
                    }
                }
            }
            Err(e) => {
                prop_assert!(side > img.width() || side > img.height());
                prop_assert_eq!(e.code(), "roi-exceeds-image");
            }
        }
    }

    #[test]
    fn region_growing_matches_reference(img in image(16, 255), pr in 0usize..16, pc in 0usize..16, t in 0.0f64..260.0) {
        let seed = Pixel::new(pr % img.height(), pc % img.width());
        let m = grow_region(&img, seed, t).unwrap();
        let expected = flood_reference(&img, seed, t);
        prop_assert_eq!(m.bits(), expected.as_slice());
        prop_assert!(m.get(seed.row, seed.col));
        prop_assert!(m.is_single_component());
    }

    #[test]
    fn inclusion_levels_reproduce_growth(img in image(12, 255), t in 0u32..256) {
        let seed = img.center();
        let levels = inclusion_levels(&img, seed).unwrap();
        let m = grow_region(&img, seed, t as f64).unwrap();
        let from_levels: Vec<bool> = levels.iter().map(|&l| l <= t).collect();
        prop_assert_eq!(m.bits(), from_levels.as_slice());
    }

    #[test]
    fn sweep_candidates_nest(img in square(3, 20), steps in 2usize..40) {
        let set = threshold_sweep(&img, steps).unwrap();
        prop_assert!(!set.is_empty() && set.len() <= steps);
        for w in set.candidates.windows(2) {
            prop_assert!(w[0].threshold() < w[1].threshold());
            prop_assert!(w[0].is_subset_of(&w[1]));
            prop_assert!(w[0].bits() != w[1].bits());
        }
        for m in &set.candidates {
            prop_assert!(m.is_single_component());
            prop_assert_eq!(m.seed(), img.center());
        }
        // The last threshold spans the whole range, so the region is the image.
        prop_assert_eq!(set.candidates.last().unwrap().pixel_count(), img.width() * img.height());
    }

    #[test]
    fn stats_ignore_order(xs in prop::collection::vec(-1e3f64..1e3, 1..40), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut ys = xs.clone();
        ys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (stats7(&xs).unwrap(), stats7(&ys).unwrap());
        for k in 0..7 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-9 * a[k].abs().max(1.0), "stat {} {} vs {}", k, a[k], b[k]);
        }
        prop_assert!(a[2] <= a[0] + 1e-9 && a[0] <= a[1] + 1e-9);
        prop_assert!(a[4] >= 0.0);
    }

    #[test]
    fn metrics_are_bounded_and_order_free(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let (p, y): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let m = metrics(&confusion(&p, &y).unwrap()).unwrap();
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (p2, y2): (Vec<usize>, Vec<usize>) = shuffled.into_iter().unzip();
        let m2 = metrics(&confusion(&p2, &y2).unwrap()).unwrap();
        prop_assert_eq!(m.matrix, m2.matrix);
        prop_assert_eq!(m.total, pairs.len() as u64);
        prop_assert_eq!(m.micro_tp + m.micro_fn, pairs.len() as u64);
        for v in [m.accuracy, m.micro_ppv, m.micro_npv, m.macro_ppv, m.macro_npv, m.mean_sensitivity, m.mean_specificity] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((-1.0..=1.0).contains(&m.micro_mcc));
        for r in &m.per_class {
            prop_assert!((0.0..=1.0).contains(&r.sensitivity) && (0.0..=1.0).contains(&r.specificity));
            prop_assert_eq!(r.tp + r.tn + r.fp + r.fn_, pairs.len() as u64);
        }
    }

    #[test]
    fn normalization_maps_into_unit_range(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 5), 1..30), probe in prop::collection::vec(-100.0f64..100.0, 5)) {
        let b = NormalizationBounds::fit(rows.iter().map(|r| r.as_slice())).unwrap();
        for k in 0..5 {
            prop_assert!(b.min[k] <= b.max[k]);
        }
        for r in rows.iter().chain([&probe]) {
            let v = b.apply(r).unwrap();
            prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        for k in b.zero_range() {
            prop_assert_eq!(b.apply(&rows[0]).unwrap()[k], 0.0);
        }
    }

    #[test]
    fn offspring_have_distinct_ids(len in 2usize..30, extra in 0usize..40, seed in any::<u64>(), rate in 0.0f64..0.5) {
        let universe = len + 1 + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p1 = common::random_ids(len, universe as u16, &[], &mut rng);
        let p2 = common::random_ids(len, universe as u16, &[], &mut rng);
        let (a, b) = crossover(&p1, &p2).unwrap();
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            let (own, other) = if i % 2 == 0 { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
            prop_assert_eq!((*x, *y), (own, other));
        }
        for child in [a, b] {
            let firsts: Vec<u16> = {
                let mut seen = Vec::new();
                for &g in &child { if !seen.contains(&g) { seen.push(g); } }
                seen
            };
            let has_dups = firsts.len() < child.len();
            let c = mutate(child.clone(), universe, rate, &mut rng).unwrap();
            let mut g = c.canonical();
            g.dedup();
            prop_assert_eq!(g.len(), len);
            prop_assert!(g.iter().all(|&x| x >= 1 && x as usize <= universe));
            if has_dups {
                // Guided repair keeps the first copy of every id in place.
                let mut kept = Vec::new();
                for (i, &x) in child.iter().enumerate() {
                    if !kept.contains(&x) {
                        prop_assert_eq!(c.genes()[i], x);
                        kept.push(x);
                    }
                }
            }
        }
    }

    #[test]
    fn roulette_probabilities_are_proportional(fits in prop::collection::vec(0.0f64..10.0, 1..20)) {
        let p = roulette_probabilities(&fits).unwrap();
        let total: f64 = fits.iter().sum();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (pi, fi) in p.iter().zip(&fits) {
            let want = if total > 0.0 { fi / total } else { 1.0 / fits.len() as f64 };
            prop_assert!((pi - want).abs() < 1e-12);
        }
    }

    #[test]
    fn predictions_are_distributions(inputs in 1usize..12, seed in any::<u64>(), x in prop::collection::vec(-5.0f64..5.0, 12)) {
        let model = Model::init(NetworkShape::for_inputs(inputs), seed).unwrap();
        let p = model.predict(&x[..inputs]).unwrap();
        prop_assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.scores.iter().all(|&s| s > 0.0 && s < 1.0));
        let best = p.scores.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(p.scores[p.class.index()], best);
    }
}
