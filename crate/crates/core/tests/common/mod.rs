#![allow(dead_code)]

use mammocad::imaging::GrayImage;
use mammocad::neural::Samples;
use mammocad::pipeline::Design;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(side: usize, max: u16, rng: &mut impl Rng) -> GrayImage {
    let pixels = (0..side * side).map(|_| rng.random_range(0..=max)).collect();
    GrayImage::new(side, side, 8, 1.0, pixels).unwrap()
}

/// Smooth-ish random image: a few random blobs plus noise, so region growing
/// produces a non-trivial sequence of masks.
pub fn blobby_image(side: usize, rng: &mut impl Rng) -> GrayImage {
    let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..side as f64),
                rng.random_range(0.0..side as f64),
                rng.random_range(1.0..(side as f64 / 3.0).max(1.5)),
                rng.random_range(-120.0..120.0),
            )
        })
        .collect();
    let mut pixels = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let mut v = 128.0 + rng.random_range(-20.0..20.0);
            for &(br, bc, s, a) in &blobs {
                let d2 = (r as f64 - br).powi(2) + (c as f64 - bc).powi(2);
                v += a * (-d2 / (2.0 * s * s)).exp();
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u16);
        }
    }
    GrayImage::new(side, side, 8, 1.0, pixels).unwrap()
}

/// Four 6-bit class codewords, pairwise Hamming distance >= 3.
pub const CODEWORDS: [[u8; 6]; 4] =
    [[0, 0, 0, 0, 0, 0], [1, 1, 1, 0, 0, 0], [0, 0, 1, 1, 1, 1], [1, 1, 0, 1, 1, 0]];

/// Rows with `width` features of which `informative` ids carry the class
/// codeword (means 0.3 / 0.7, sd `spread`); the rest are uniform noise.
pub fn informative_rows(
    n: usize,
    width: usize,
    informative: &[u16; 6],
    spread: f64,
    rng: &mut impl Rng,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 4;
        let mut row: Vec<f64> = (0..width).map(|_| rng.random::<f64>()).collect();
        for (bit, &id) in informative.iter().enumerate() {
            let mean = if CODEWORDS[class][bit] == 1 { 0.7 } else { 0.3 };
            let z: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
            row[id as usize - 1] = mean + spread * z;
        }
        rows.push(row);
        labels.push(class);
    }
    (rows, labels)
}

/// 400-sample, 130-feature design split 60/40 into train and test.
pub fn informative_design(seed: u64, informative: &[u16; 6]) -> Design {
    let mut r = rng(seed);
    let (rows, labels) = informative_rows(400, 130, informative, 0.25, &mut r);
    let (mut tx, mut ty, mut sx, mut sy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, (row, y)) in rows.into_iter().zip(labels).enumerate() {
        if i % 5 < 3 {
            tx.extend(row);
            ty.push(y);
        } else {
            sx.push(row);
            sy.push(y);
        }
    }
    Design::new(Samples::new(130, tx, ty).unwrap(), sx, sy).unwrap()
}

/// Distinct random ids in `1..=universe`, avoiding `exclude`.
pub fn random_ids(count: usize, universe: u16, exclude: &[u16], rng: &mut impl Rng) -> Vec<u16> {
    let mut out = Vec::new();
    while out.len() < count {
        let id = rng.random_range(1..=universe);
        if !exclude.contains(&id) && !out.contains(&id) {
            out.push(id);
        }
    }
    out
}

// ---- texture oracle: literal, unoptimized transcription ----

pub fn oracle_quantize(img: &GrayImage, ng: usize) -> Vec<Vec<usize>> {
    let (lo, hi) = img.min_max();
    let width = (hi - lo) as f64 + 1.0;
    (0..img.height())
        .map(|r| {
            (0..img.width())
                .map(|c| ((img.get(r, c) - lo) as f64 / width * ng as f64).floor() as usize)
                .collect()
        })
        .collect()
}

/// Offset for distance `d` at angle `k * 45 / 2` degrees, rows growing down.
pub fn oracle_offset(d: usize, k: usize) -> (i64, i64) {
    let a = k as f64 * std::f64::consts::PI / 8.0;
    let dcol = (d as f64 * a.cos()).round() as i64;
    let drow = -(d as f64 * a.sin()).round() as i64;
    (drow, dcol)
}

/// Counts every ordered pair at `+offset` and `-offset`, then normalizes.
pub fn oracle_glcm(q: &[Vec<usize>], ng: usize, drow: i64, dcol: i64) -> Vec<Vec<f64>> {
    let h = q.len() as i64;
    let w = q[0].len() as i64;
    let mut m = vec![vec![0.0; ng]; ng];
    let mut total = 0.0;
    for r in 0..h {
        for c in 0..w {
            for (sr, sc) in [(drow, dcol), (-drow, -dcol)] {
                let (r2, c2) = (r + sr, c + sc);
                if r2 >= 0 && r2 < h && c2 >= 0 && c2 < w {
                    m[q[r as usize][c as usize]][q[r2 as usize][c2 as usize]] += 1.0;
                    total += 1.0;
                }
            }
        }
    }
    for row in &mut m {
        for v in row {
            *v /= total;
        }
    }
    m
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 { p * p.ln() } else { 0.0 }
}

/// The fourteen descriptors with levels numbered from 1.
pub fn oracle_haralick(p: &[Vec<f64>]) -> [f64; 14] {
    let ng = p.len();
    let lv = |i: usize| (i + 1) as f64;
    let px: Vec<f64> = (0..ng).map(|i| (0..ng).map(|j| p[i][j]).sum()).collect();
    let py: Vec<f64> = (0..ng).map(|j| (0..ng).map(|i| p[i][j]).sum()).collect();
    // p_{x+y}(k), k = 2..=2ng, indexed by k directly.
    let mut psum = vec![0.0; 2 * ng + 1];
    let mut pdiff = vec![0.0; ng];
    for i in 0..ng {
        for j in 0..ng {
            psum[(i + 1) + (j + 1)] += p[i][j];
            pdiff[(i as i64 - j as i64).unsigned_abs() as usize] += p[i][j];
        }
    }

    let mut f1 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f1 += p[i][j] * p[i][j];
        }
    }
    let mut f2 = 0.0;
    for n in 0..ng {
        let mut inner = 0.0;
        for i in 0..ng {
            for j in 0..ng {
                if (i as i64 - j as i64).unsigned_abs() as usize == n {
                    inner += p[i][j];
                }
            }
        }
        f2 += (n * n) as f64 * inner;
    }
    let mux: f64 = (0..ng).map(|i| lv(i) * px[i]).sum();
    let muy: f64 = (0..ng).map(|j| lv(j) * py[j]).sum();
    let sx = (0..ng).map(|i| (lv(i) - mux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..ng).map(|j| (lv(j) - muy).powi(2) * py[j]).sum::<f64>().sqrt();
    let mut ij = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            ij += lv(i) * lv(j) * p[i][j];
        }
    }
    let f3 = if sx * sy > 0.0 { (ij - mux * muy) / (sx * sy) } else { 0.0 };
    let mut mu = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            mu += lv(i) * p[i][j];
        }
    }
    let mut f4 = 0.0;
    let mut f5 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f4 += (lv(i) - mu).powi(2) * p[i][j];
            f5 += p[i][j] / (1.0 + (lv(i) - lv(j)).powi(2));
        }
    }
    let f6: f64 = (2..=2 * ng).map(|k| k as f64 * psum[k]).sum();
    let f8: f64 = -(2..=2 * ng).map(|k| xlogx(psum[k])).sum::<f64>();
    let f7: f64 = (2..=2 * ng).map(|k| (k as f64 - f6).powi(2) * psum[k]).sum();
    let mut f9 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            f9 -= xlogx(p[i][j]);
        }
    }
    let dmean: f64 = (0..ng).map(|k| k as f64 * pdiff[k]).sum();
    let f10: f64 = (0..ng).map(|k| (k as f64 - dmean).powi(2) * pdiff[k]).sum();
    let f11: f64 = -(0..ng).map(|k| xlogx(pdiff[k])).sum::<f64>();
    let hx: f64 = -px.iter().map(|&v| xlogx(v)).sum::<f64>();
    let hy: f64 = -py.iter().map(|&v| xlogx(v)).sum::<f64>();
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            let q = px[i] * py[j];
            if q > 0.0 {
                hxy1 -= p[i][j] * q.ln();
                hxy2 -= q * q.ln();
            }
        }
    }
    let f12 = if hx.max(hy) > 0.0 { (f9 - hxy1) / hx.max(hy) } else { 0.0 };
    let f13 = (1.0 - (-2.0 * (hxy2 - f9)).exp()).max(0.0).sqrt();

    // Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)) over occupied levels;
    // general (non-symmetric) eigenvalues from the real Schur form.
    let live: Vec<usize> = (0..ng).filter(|&i| px[i] > 0.0).collect();
    let f14 = if live.len() < 2 {
        0.0
    } else {
        let n = live.len();
        let q = DMatrix::from_fn(n, n, |a, b| {
            let (i, j) = (live[a], live[b]);
            (0..ng)
                .filter(|&k| py[k] > 0.0)
                .map(|k| p[i][k] * p[j][k] / (px[i] * py[k]))
                .sum::<f64>()
        });
        let mut eig: Vec<f64> = q.complex_eigenvalues().iter().map(|z| z.re).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        eig[1].max(0.0).sqrt()
    };
    [f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14]
}

pub fn oracle_stats7(xs: &[f64]) -> [f64; 7] {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let max = xs.iter().cloned().fold(f64::MIN, f64::max);
    let min = xs.iter().cloned().fold(f64::MAX, f64::min);
    let (skew, kurt) = if var > 0.0 { (m3 / var.powf(1.5), m4 / (var * var)) } else { (0.0, 0.0) };
    [mean, max, min, var.sqrt(), var, skew, kurt]
}

/// Full 98-value texture descriptor computed with the oracle pieces.
pub fn oracle_texture(img: &GrayImage, ng: usize) -> Vec<f64> {
    let q = oracle_quantize(img, ng);
    let side = img.width();
    let mut per_distance = Vec::new();
    for d in 1..=side / 2 {
        let mut avg = vec![vec![0.0; ng]; ng];
        for k in 0..8 {
            let (dr, dc) = oracle_offset(d, k);
            let m = oracle_glcm(&q, ng, dr, dc);
            for i in 0..ng {
                for j in 0..ng {
                    avg[i][j] += m[i][j] / 8.0;
                }
            }
        }
        per_distance.push(oracle_haralick(&avg));
    }
    let mut out = Vec::with_capacity(98);
    for f in 0..14 {
        let series: Vec<f64> = per_distance.iter().map(|h| h[f]).collect();
        out.extend(oracle_stats7(&series));
    }
    out
}

/// Largest per-feature discrepancy between the library and the oracle on one
/// image: `(max error over features 1-13, max error on feature 14)`. Errors
/// are absolute, relative above magnitude 1.
pub fn texture_discrepancy(img: &GrayImage, ng: usize) -> (f64, f64) {
    use mammocad::features::{texture_features, GlcmParams};
    let lib = texture_features(img, &GlcmParams { gray_bins: ng }).unwrap();
    let ora = oracle_texture(img, ng);
    let (mut general, mut mcc) = (0.0f64, 0.0f64);
    for (i, (a, b)) in lib.iter().zip(&ora).enumerate() {
        let err = (a - b).abs() / b.abs().max(1.0);
        if i / 7 == 13 {
            mcc = mcc.max(err);
        } else {
            general = general.max(err);
        }
    }
    (general, mcc)
}

/// Single-GLCM comparison: library `glcm` + `haralick_features` against the
/// oracle at one distance and angle index.
pub fn glcm_discrepancy(img: &GrayImage, ng: usize, d: usize, k: usize) -> (f64, [f64; 14], [f64; 14]) {
    use mammocad::features::{glcm, haralick_features, GLCM_ANGLES};
    let g = glcm(img, d, GLCM_ANGLES[k], ng).unwrap();
    let q = oracle_quantize(img, ng);
    let (dr, dc) = oracle_offset(d, k);
    let o = oracle_glcm(&q, ng, dr, dc);
    let mut worst = 0.0f64;
    for i in 0..ng {
        for j in 0..ng {
            worst = worst.max((g.get(i, j) - o[i][j]).abs());
        }
    }
    (worst, haralick_features(&g).unwrap(), oracle_haralick(&o))
}
