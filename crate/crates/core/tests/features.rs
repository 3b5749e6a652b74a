mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use arcf::features::*;
use arcf::grid::{Grid, MultiChannel, RealGrid};
use common::*;
use rand::Rng;

fn random_patch(r: &mut impl Rng, w: usize, h: usize) -> ImagePatch {
    ImagePatch::from_fn(w, h, |_, _| [r.gen(), r.gen(), r.gen()])
}

/// Per-pixel reference for the 31-channel descriptor. Every cell visits every
/// pixel and weights it with tent functions in space and orientation, so no
/// floor/bin bookkeeping is shared with the library.
fn reference_hog(p: &ImagePatch, cs: usize) -> Vec<RealGrid<f64>> {
    let (w, h) = (p.width(), p.height());
    let (cw, ch) = (w / cs, h / cs);
    let px = |x: isize, y: isize| p.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize);

    let mut grads = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut best = (0.0, 0.0, -1.0);
            for k in 0..3 {
                let dx = px(x + 1, y)[k] as f64 - px(x - 1, y)[k] as f64;
                let dy = px(x, y + 1)[k] as f64 - px(x, y - 1)[k] as f64;
                if dx * dx + dy * dy > best.2 {
                    best = (dx, dy, dx * dx + dy * dy);
                }
            }
            grads.push(best);
        }
    }

    let tent = |d: f64| (1.0 - d.abs()).max(0.0);
    let mut hist = vec![[0.0f64; 18]; cw * ch];
    for (i, cell) in hist.iter_mut().enumerate() {
        let (cr, cc) = ((i / cw) as f64, (i % cw) as f64);
        for y in 0..h {
            for x in 0..w {
                let (dx, dy, v) = grads[y * w + x];
                if v == 0.0 {
                    continue;
                }
                let sw = tent((x as f64 + 0.5) / cs as f64 - 0.5 - cc) * tent((y as f64 + 0.5) / cs as f64 - 0.5 - cr);
                if sw == 0.0 {
                    continue;
                }
                let pos = dy.atan2(dx).rem_euclid(2.0 * PI) / (PI / 9.0);
                for (o, b) in cell.iter_mut().enumerate() {
                    let d = (pos - o as f64).rem_euclid(18.0);
                    *b += v.sqrt() * sw * tent(d.min(18.0 - d));
                }
            }
        }
    }

    let energy = |r: isize, c: isize| {
        let cell = &hist[r.clamp(0, ch as isize - 1) as usize * cw + c.clamp(0, cw as isize - 1) as usize];
        (0..9).map(|o| (cell[o] + cell[o + 9]).powi(2)).sum::<f64>()
    };
    let mut out = vec![RealGrid::<f64>::zeros(cw, ch); 31];
    for r in 0..ch as isize {
        for c in 0..cw as isize {
            let mut norms = Vec::new();
            for (br, bc) in [(r, c), (r - 1, c), (r, c - 1), (r - 1, c - 1)] {
                let s = energy(br, bc) + energy(br, bc + 1) + energy(br + 1, bc) + energy(br + 1, bc + 1);
                norms.push(1.0 / (s + 1e-4).sqrt());
            }
            let cell = hist[r as usize * cw + c as usize];
            let at = (r as usize, c as usize);
            for o in 0..18 {
                let vals: Vec<f64> = norms.iter().map(|n| (cell[o] * n).min(0.2)).collect();
                out[o][at] = 0.5 * vals.iter().sum::<f64>();
                for k in 0..4 {
                    out[27 + k][at] += vals[k] / 18f64.sqrt();
                }
            }
            for o in 0..9 {
                out[18 + o][at] = 0.5 * norms.iter().map(|n| ((cell[o] + cell[o + 9]) * n).min(0.2)).sum::<f64>();
            }
        }
    }
    out
}

#[test]
fn hog_matches_per_pixel_reference() {
    let mut r = rng(1);
    for seed in 0..3 {
        let patch = random_patch(&mut r, 32, 32);
        let fast = fhog::<f64>(&patch, 4);
        let slow = reference_hog(&patch, 4);
        for (k, (a, b)) in fast.iter().zip(&slow).enumerate() {
            assert!(max_abs_diff(a.values(), b.values()) < 1e-6, "seed {seed} channel {k}");
        }
    }
}

#[test]
fn hog_reference_agrees_on_smooth_gradients() {
    let patch = ImagePatch::from_fn(24, 20, |x, y| {
        let v = (128.0 + 60.0 * ((x as f64) * 0.4).sin() + 40.0 * ((y as f64) * 0.3).cos()) as u8;
        [v, v / 2, 255 - v]
    });
    let fast = fhog::<f64>(&patch, 4);
    let slow = reference_hog(&patch, 4);
    for (a, b) in fast.iter().zip(&slow) {
        assert!(max_abs_diff(a.values(), b.values()) < 1e-6);
    }
}

#[test]
fn hog_is_translation_covariant_per_cell() {
    let mut r = rng(2);
    let big = random_patch(&mut r, 64, 40);
    let crop = |dx: usize| ImagePatch::from_fn(48, 40, |x, y| big.get(x + dx, y));
    let a = fhog::<f64>(&crop(0), 4);
    let b = fhog::<f64>(&crop(4), 4);
    let (cw, ch) = (12, 10);
    // Block normalization reaches two cells, so two border cells are skipped.
    for (ca, cb) in a.iter().zip(&b) {
        for row in 2..ch - 2 {
            for col in 2..cw - 3 {
                assert!((cb[(row, col)] - ca[(row, col + 1)]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn hog_is_intensity_scale_invariant() {
    let mut r = rng(3);
    let base = ImagePatch::from_fn(32, 32, |_, _| {
        let v = 2 * r.gen_range(10u8..63);
        [v, v, v]
    });
    let reference = fhog::<f64>(&base, 4);
    for factor in [0.5, 2.0] {
        let scaled = ImagePatch::from_fn(32, 32, |x, y| base.get(x, y).map(|v| (v as f64 * factor) as u8));
        let f = fhog::<f64>(&scaled, 4);
        for (a, b) in f.iter().zip(&reference) {
            assert!(max_abs_diff(a.values(), b.values()) < 1e-4, "factor {factor}");
        }
    }
}

#[test]
fn color_names_follow_the_table() {
    let mut r = rng(4);
    let rows: Vec<[f64; CN_CHANNELS]> = (0..CnTable::ROWS).map(|_| std::array::from_fn(|_| r.gen_range(0.0..1.0))).collect();
    let table = Arc::new(CnTable::new(rows).unwrap());
    let cfg = FeatureConfig {
        cell_size: 1,
        use_hog: false,
        use_cn: true,
        use_gray: false,
        cn_table: Some(table.clone()),
    };
    let patch = random_patch(&mut r, 16, 16);
    let f = extract_features::<f64>(&patch, &cfg).unwrap();
    for y in 0..16 {
        for x in 0..16 {
            let sum: f64 = f.channels().iter().map(|c| c[(y, x)]).sum();
            let expected: f64 = table.lookup(patch.get(x, y)).iter().sum();
            assert!((sum - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn synthetic_table_rows_are_distributions() {
    let t = CnTable::synthetic();
    for row in t.rows() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(row.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn cn_table_round_trips_through_text() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cn.txt");
    let t = CnTable::synthetic();
    t.save(&path).unwrap();
    let back = CnTable::load(&path).unwrap();
    assert!(t.rows().iter().zip(back.rows()).all(|(a, b)| max_abs_diff(a, b) < 1e-9));
}

#[test]
fn feature_channel_order_and_count() {
    let patch = ImagePatch::from_fn(32, 24, |x, y| [(x * 7) as u8, (y * 9) as u8, 50]);
    let cfg = FeatureConfig::hog_cn_gray(Arc::new(CnTable::synthetic()));
    let f = extract_features::<f64>(&patch, &cfg).unwrap();
    assert_eq!(f.depth(), 42);
    assert_eq!(f.dims(), (8, 6));
    let hog = fhog::<f64>(&patch, 4);
    assert_eq!(f.channel(0), &hog[0]);
    let gray = f.channel(41);
    assert!(gray.values().iter().all(|&v| (-0.5..=0.5).contains(&v)));

    let bad = ImagePatch::filled(30, 24, [0, 0, 0]);
    assert!(matches!(extract_features::<f64>(&bad, &cfg), Err(arcf::Error::Contract(_))));
    let missing = FeatureConfig {
        cn_table: None,
        ..cfg
    };
    assert!(matches!(extract_features::<f64>(&patch, &missing), Err(arcf::Error::Config(_))));
}

#[test]
fn window_is_an_elementwise_product() {
    let mut r = rng(5);
    let sample = random_channels(&mut r, 8, 8, 3);
    let out = apply_cosine_window(&sample);
    let hann = |i: usize| 0.5 * (1.0 - (2.0 * PI * i as f64 / 7.0).cos());
    for (a, b) in sample.channels().iter().zip(out.channels()) {
        for i in 0..8 {
            for j in 0..8 {
                assert!((a[(i, j)] * hann(i) * hann(j) - b[(i, j)]).abs() < 1e-15);
            }
        }
    }
    let one = MultiChannel::new(vec![Grid::filled(1, 1, 3.0)]).unwrap();
    assert_eq!(apply_cosine_window(&one).channel(0)[(0, 0)], 3.0);
}

/// Independent bilinear resampler with half-pixel centres and clamped edges.
fn reference_resize(p: &ImagePatch, ow: usize, oh: usize) -> Vec<[f64; 3]> {
    let (sx, sy) = (p.width() as f64 / ow as f64, p.height() as f64 / oh as f64);
    let mut out = Vec::new();
    for oy in 0..oh {
        for ox in 0..ow {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (p.width() - 1) as f64);
            let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (p.height() - 1) as f64);
            let mut acc = [0.0; 3];
            for yy in 0..p.height() {
                for xx in 0..p.width() {
                    let wgt = (1.0 - (fx - xx as f64).abs()).max(0.0) * (1.0 - (fy - yy as f64).abs()).max(0.0);
                    if wgt > 0.0 {
                        for k in 0..3 {
                            acc[k] += wgt * p.get(xx, yy)[k] as f64;
                        }
                    }
                }
            }
            out.push(acc);
        }
    }
    out
}

#[test]
fn downscale_matches_reference_bilinear() {
    let mut r = rng(6);
    let patch = random_patch(&mut r, 64, 64);
    for (ow, oh) in [(32, 32), (23, 41)] {
        let fast = resize_patch(&patch, ow, oh);
        let slow = reference_resize(&patch, ow, oh);
        for (a, b) in fast.pixels().iter().zip(&slow) {
            for k in 0..3 {
                assert!((a[k] as f64 - b[k]).abs() <= 1.0);
            }
        }
    }
}

#[test]
fn resize_edge_cases() {
    let mut r = rng(7);
    let patch = random_patch(&mut r, 13, 9);
    assert_eq!(resize_patch(&patch, 13, 9), patch);
    let checker = ImagePatch::from_gray(2, 2, &[0, 255, 255, 0]).unwrap();
    assert_eq!(resize_patch(&checker, 3, 3).get(1, 1), [128, 128, 128]);
}
