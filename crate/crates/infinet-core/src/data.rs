//! Desk-scale datasets: the CIFAR-10 binary record codec, a deterministic
//! synthetic classification generator, minimal augmentation, and batching.
//!
//! Everything here is pure and allocation-only; reading files belongs to the
//! `infinet` companion crate, which hands the raw bytes to [`decode_cifar10_bin`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;
use crate::tensor::Tensor;

/// One labelled image. Pixel values live in `[0, 1]`, channels last.
#[derive(Debug, Clone)]
pub struct Sample<T: Scalar> {
    /// `(H, W, 3)` tensor with values in `[0, 1]`.
    pub image: Tensor<T>,
    /// Class index, validated against the dataset's class count at load time.
    pub label: usize,
}

/// A stack of samples ready for a forward pass.
#[derive(Debug, Clone)]
pub struct Batch<T: Scalar> {
    /// `(N, H, W, 3)` tensor.
    pub images: Tensor<T>,
    /// `N` class indices, aligned with the leading axis of `images`.
    pub labels: Vec<usize>,
}

/// Bytes per CIFAR-10 binary record: 1 label byte + 3×1024 pixel bytes.
pub const CIFAR10_RECORD_BYTES: usize = 3073;
/// CIFAR-10 images are 32×32 RGB.
pub const CIFAR10_SIDE: usize = 32;
const CIFAR10_PLANE: usize = CIFAR10_SIDE * CIFAR10_SIDE;
const CIFAR10_CLASSES: usize = 10;

/// Decodes CIFAR-10 binary records: each record is one label byte followed by
/// the R, G and B planes in row-major order. Pixels are scaled by 1/255.
pub fn decode_cifar10_bin<T: Scalar>(bytes: &[u8]) -> Result<Vec<Sample<T>>> {
    if bytes.len() % CIFAR10_RECORD_BYTES != 0 {
        return Err(Error::InvalidArgument(format!(
            "CIFAR-10 binary data must be a multiple of {CIFAR10_RECORD_BYTES} bytes, got {}",
            bytes.len()
        )));
    }
    let scale = 1.0 / 255.0;
    let mut samples = Vec::with_capacity(bytes.len() / CIFAR10_RECORD_BYTES);
    for (rec_idx, record) in bytes.chunks_exact(CIFAR10_RECORD_BYTES).enumerate() {
        let label = record[0] as usize;
        if label >= CIFAR10_CLASSES {
            return Err(Error::InvalidArgument(format!(
                "record {rec_idx}: label byte {label} outside 0..{CIFAR10_CLASSES}"
            )));
        }
        let planes = &record[1..];
        let mut data = vec![T::zero(); CIFAR10_PLANE * 3];
        for c in 0..3 {
            let plane = &planes[c * CIFAR10_PLANE..(c + 1) * CIFAR10_PLANE];
            for (pos, &byte) in plane.iter().enumerate() {
                data[pos * 3 + c] = T::cast(byte as f64 * scale);
            }
        }
        samples.push(Sample {
            image: Tensor::from_vec(vec![CIFAR10_SIDE, CIFAR10_SIDE, 3], data)?,
            label,
        });
    }
    Ok(samples)
}

/// Encodes 32×32 samples into the CIFAR-10 binary layout, quantizing pixels
/// to bytes by rounding. Inverse of [`decode_cifar10_bin`] up to 1/255.
pub fn encode_cifar10_bin<T: Scalar>(samples: &[Sample<T>]) -> Result<Vec<u8>> {
    let mut bytes = Vec::with_capacity(samples.len() * CIFAR10_RECORD_BYTES);
    for (idx, sample) in samples.iter().enumerate() {
        if sample.image.shape() != [CIFAR10_SIDE, CIFAR10_SIDE, 3] {
            return Err(Error::ShapeMismatch(format!(
                "sample {idx}: CIFAR-10 layout needs (32, 32, 3), got {:?}",
                sample.image.shape()
            )));
        }
        if sample.label >= CIFAR10_CLASSES {
            return Err(Error::InvalidArgument(format!(
                "sample {idx}: label {} outside 0..{CIFAR10_CLASSES}",
                sample.label
            )));
        }
        bytes.push(sample.label as u8);
        let data = sample.image.data();
        for c in 0..3 {
            for pos in 0..CIFAR10_PLANE {
                let v = data[pos * 3 + c].as_f64();
                bytes.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(bytes)
}

// Synthetic generator constants. Classes pair up into position groups: the
// group selects where a stable brightness blob sits in the third channel (a
// linearly readable cue). The class parity within the group is carried by
// pairs of small Gaussian bumps at fixed image sites, each pair a fixed
// horizontal offset apart: a pair's left-bump contrast is a random sign, and
// its right-bump contrast either copies or opposes it — most pairs
// (AGREE_PROB) correlate the way the parity dictates, the rest oppose it, so
// parity is the majority correlation sign across the sites. The random
// per-pair sign hides all of this from a linear probe; reading it requires
// comparing the two offset positions of a site, which additive feature
// mixing only reaches through slow two-stage composition. The heavy-tailed
// per-pair contrast means a reader whose per-pair evidence grows unboundedly
// with contrast is dominated by single loud pairs while a reader with
// bounded per-pair influence aggregates the majority cleanly — that spread
// is the comparison headroom. A small brightness asymmetry leaks a little
// parity linearly so a probe lands above the position-only baseline without
// saturating.
const BUMP_AMPLITUDE: f64 = 0.42;
const POSITION_AMPLITUDE: f64 = 0.22;
const PARITY_LEAK: f64 = 0.08;
const PIXEL_NOISE: f64 = 0.03;
/// Rows of pair sites; sites alternate between the first two channels.
const SITE_ROWS: usize = 4;
/// Pair sites per row.
const SITE_COLS: usize = 2;
/// Fraction of pairs whose correlation sign agrees with the class parity.
const AGREE_PROB: f64 = 0.8;
/// Contrast of an ordinary pair, as a fraction of [`BUMP_AMPLITUDE`].
const QUIET_LEVEL: f64 = 1.0 / 3.0;
/// Fraction of pairs drawn at full amplitude instead of the quiet level.
const LOUD_PROB: f64 = 0.15;

/// Deterministic synthetic dataset: class-specific spatial Gaussian bumps
/// plus noise, `num_classes × per_class` samples of shape `(h, w, 3)`.
pub fn synth_blobs<T: Scalar>(
    num_classes: usize,
    per_class: usize,
    h: usize,
    w: usize,
    seed: u64,
) -> Vec<Sample<T>> {
    let mut gen = rng::seeded(seed);
    let noise = Normal::new(0.0, PIXEL_NOISE).expect("constant stddev is valid");
    let groups = num_classes.div_ceil(2).max(1);
    let blob_sigma = (h.min(w) as f64 / 6.0).max(1.0);
    let bump_sigma = (h.min(w) as f64 / 16.0).max(1.0);
    let pair_offset = (w as f64 / 4.0).max(1.0);
    let radius = h.min(w) as f64 / 4.0;
    let (cy, cx) = (h as f64 / 2.0 - 0.5, w as f64 / 2.0 - 0.5);
    let mut samples = Vec::with_capacity(num_classes * per_class);
    for label in 0..num_classes {
        let group = label / 2;
        let parity_sign = 1.0 - 2.0 * (label % 2) as f64;
        let angle = core::f64::consts::TAU * group as f64 / groups as f64;
        // Stable brightness blob at the group's position.
        let (by, bx) = (cy + radius * angle.sin(), cx + radius * angle.cos());
        let brightness = POSITION_AMPLITUDE * (1.0 - PARITY_LEAK * parity_sign);
        for _ in 0..per_class {
            let mut data = vec![0.0f64; h * w * 3];
            for i in 0..h {
                for j in 0..w {
                    data[(i * w + j) * 3 + 2] =
                        brightness * gauss(i as f64, j as f64, by, bx, blob_sigma);
                }
            }
            for site in 0..SITE_ROWS * SITE_COLS {
                let (row, col) = (site / SITE_COLS, site % SITE_COLS);
                let py = h as f64 * (2 * row + 1) as f64 / (2 * SITE_ROWS) as f64 - 0.5;
                let px = w as f64 * (4 * col + 1) as f64 / (4 * SITE_COLS) as f64 - 0.5;
                let channel = (row + col) % 2;
                let sign = if gen.gen::<bool>() { 1.0 } else { -1.0 };
                let corr = if gen.gen::<f64>() < AGREE_PROB {
                    parity_sign
                } else {
                    -parity_sign
                };
                // Heavy-tailed contrast: mostly quiet, occasionally loud.
                let amp = if gen.gen::<f64>() < LOUD_PROB {
                    BUMP_AMPLITUDE
                } else {
                    BUMP_AMPLITUDE * QUIET_LEVEL
                };
                for i in 0..h {
                    for j in 0..w {
                        let left = gauss(i as f64, j as f64, py, px, bump_sigma);
                        let right =
                            gauss(i as f64, j as f64, py, px + pair_offset, bump_sigma);
                        data[(i * w + j) * 3 + channel] += amp * sign * (left + corr * right);
                    }
                }
            }
            let pixels = data
                .iter()
                .map(|&v| T::cast((0.5 + v + noise.sample(&mut gen)).clamp(0.0, 1.0)))
                .collect();
            samples.push(Sample {
                image: Tensor::from_vec(vec![h, w, 3], pixels)
                    .expect("generator shape is consistent"),
                label,
            });
        }
    }
    samples
}

fn gauss(i: f64, j: f64, cy: f64, cx: f64, sigma: f64) -> f64 {
    let d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Padding used by the random crop in [`augment`].
pub const AUGMENT_PAD: usize = 4;

/// Deterministic core of [`augment`]: optional horizontal flip, then a crop
/// of the original size from the image zero-padded by [`AUGMENT_PAD`] on
/// every side, with the crop corner at `(dy, dx)` in `0..=2·AUGMENT_PAD`.
pub fn augment_with<T: Scalar>(
    sample: &Sample<T>,
    flip: bool,
    dy: usize,
    dx: usize,
) -> Result<Sample<T>> {
    let shape = sample.image.shape();
    if shape.len() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "augment expects an (H, W, C) image, got {shape:?}"
        )));
    }
    let (h, w, c) = (shape[0], shape[1], shape[2]);
    if dy > 2 * AUGMENT_PAD || dx > 2 * AUGMENT_PAD {
        return Err(Error::InvalidArgument(format!(
            "crop offsets ({dy}, {dx}) exceed 2×pad = {}",
            2 * AUGMENT_PAD
        )));
    }
    let src = sample.image.data();
    let mut data = vec![T::zero(); h * w * c];
    for oi in 0..h {
        // Crop coordinates index the padded image; subtracting the pad maps
        // them back to the source, with out-of-range rows/cols staying zero.
        let si = (oi + dy) as isize - AUGMENT_PAD as isize;
        if si < 0 || si >= h as isize {
            continue;
        }
        for oj in 0..w {
            let sj = (oj + dx) as isize - AUGMENT_PAD as isize;
            if sj < 0 || sj >= w as isize {
                continue;
            }
            let sj = if flip { w - 1 - sj as usize } else { sj as usize };
            let dst = (oi * w + oj) * c;
            let from = (si as usize * w + sj) * c;
            data[dst..dst + c].copy_from_slice(&src[from..from + c]);
        }
    }
    Ok(Sample {
        image: Tensor::from_vec(shape.to_vec(), data)?,
        label: sample.label,
    })
}

/// Random horizontal flip (p = 0.5) plus a random crop with 4-pixel zero
/// padding. The label is never touched.
pub fn augment<T: Scalar, R: Rng>(sample: &Sample<T>, gen: &mut R) -> Result<Sample<T>> {
    let flip = gen.gen::<bool>();
    let dy = gen.gen_range(0..=2 * AUGMENT_PAD);
    let dx = gen.gen_range(0..=2 * AUGMENT_PAD);
    augment_with(sample, flip, dy, dx)
}

/// Splits `samples` into batches of `batch_size` after a deterministic
/// shuffle; the final batch may be smaller. Every sample appears exactly once.
pub fn batches<T: Scalar>(
    samples: &[Sample<T>],
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<Vec<Batch<T>>> {
    if batch_size == 0 {
        return Err(Error::InvalidArgument(
            "batch_size must be at least 1".into(),
        ));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let shape = samples[0].image.shape().to_vec();
    for (idx, s) in samples.iter().enumerate() {
        if s.image.shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "sample {idx} shape {:?} differs from first sample {shape:?}",
                s.image.shape()
            )));
        }
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng::seeded(shuffle_seed));
    let per_image = samples[0].image.len();
    let mut out = Vec::with_capacity(samples.len().div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        let mut data = Vec::with_capacity(chunk.len() * per_image);
        let mut labels = Vec::with_capacity(chunk.len());
        for &idx in chunk {
            data.extend_from_slice(samples[idx].image.data());
            labels.push(samples[idx].label);
        }
        let mut batch_shape = vec![chunk.len()];
        batch_shape.extend_from_slice(&shape);
        out.push(Batch {
            images: Tensor::from_vec(batch_shape, data)?,
            labels,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use proptest::prelude::*;

    #[test]
    fn decode_single_record_full_brightness() {
        let mut bytes = vec![255u8; CIFAR10_RECORD_BYTES];
        bytes[0] = 3;
        let samples = decode_cifar10_bin::<f64>(&bytes).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].label, 3);
        assert_eq!(samples[0].image.shape(), &[32, 32, 3]);
        assert!(samples[0].image.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn decode_empty_is_empty() {
        assert!(decode_cifar10_bin::<f32>(&[]).unwrap().is_empty());
    }

    #[test]
    fn decode_truncated_record_errors() {
        let bytes = vec![0u8; CIFAR10_RECORD_BYTES - 1];
        assert!(decode_cifar10_bin::<f32>(&bytes).is_err());
    }

    #[test]
    fn decode_label_out_of_range_errors() {
        let mut bytes = vec![0u8; CIFAR10_RECORD_BYTES];
        bytes[0] = 10;
        assert!(decode_cifar10_bin::<f32>(&bytes).is_err());
    }

    #[test]
    fn decode_planar_layout_maps_to_channels_last() {
        // One lit pixel per plane at distinct positions pins the layout:
        // plane order R, G, B; within a plane row-major (row*32 + col).
        let mut bytes = vec![0u8; CIFAR10_RECORD_BYTES];
        bytes[1] = 51; // R at (0, 0)
        bytes[1 + 1024 + 2 * 32 + 5] = 102; // G at (2, 5)
        bytes[1 + 2048 + 31 * 32 + 31] = 204; // B at (31, 31)
        let s = &decode_cifar10_bin::<f64>(&bytes).unwrap()[0];
        assert_eq!(s.image.at(&[0, 0, 0]).unwrap(), 51.0 / 255.0);
        assert_eq!(s.image.at(&[2, 5, 1]).unwrap(), 102.0 / 255.0);
        assert_eq!(s.image.at(&[31, 31, 2]).unwrap(), 204.0 / 255.0);
    }

    #[test]
    fn cifar_layout_round_trip_within_quantization() {
        let samples = synth_blobs::<f64>(4, 3, 32, 32, 9);
        let bytes = encode_cifar10_bin(&samples).unwrap();
        assert_eq!(bytes.len(), 12 * CIFAR10_RECORD_BYTES);
        let back = decode_cifar10_bin::<f64>(&bytes).unwrap();
        assert_eq!(back.len(), samples.len());
        for (orig, re) in samples.iter().zip(&back) {
            assert_eq!(orig.label, re.label);
            for (&a, &b) in orig.image.data().iter().zip(re.image.data()) {
                assert!((a - b).abs() <= 1.0 / 255.0, "|{a} - {b}| > 1/255");
            }
        }
    }

    #[test]
    fn synth_is_deterministic_per_seed() {
        let a = synth_blobs::<f32>(3, 4, 8, 8, 77);
        let b = synth_blobs::<f32>(3, 4, 8, 8, 77);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert_eq!(x.image.data(), y.image.data());
        }
        let c = synth_blobs::<f32>(3, 4, 8, 8, 78);
        assert!(a.iter().zip(&c).any(|(x, y)| x.image.data() != y.image.data()));
    }

    #[test]
    fn synth_zero_per_class_is_empty() {
        assert!(synth_blobs::<f32>(10, 0, 8, 8, 1).is_empty());
    }

    #[test]
    fn synth_shapes_labels_and_range() {
        let samples = synth_blobs::<f64>(10, 5, 16, 16, 3);
        assert_eq!(samples.len(), 50);
        for (i, s) in samples.iter().enumerate() {
            assert_eq!(s.label, i / 5);
            assert_eq!(s.image.shape(), &[16, 16, 3]);
            assert!(s.image.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn augment_identity_under_no_flip_center_crop() {
        let s = &synth_blobs::<f64>(2, 1, 12, 12, 5)[0];
        let out = augment_with(s, false, AUGMENT_PAD, AUGMENT_PAD).unwrap();
        assert_eq!(out.label, s.label);
        assert_eq!(out.image.data(), s.image.data());
    }

    #[test]
    fn augment_double_flip_restores_image() {
        let s = &synth_blobs::<f64>(2, 1, 10, 14, 6)[0];
        let once = augment_with(s, true, AUGMENT_PAD, AUGMENT_PAD).unwrap();
        let twice = augment_with(&once, true, AUGMENT_PAD, AUGMENT_PAD).unwrap();
        assert_eq!(twice.image.data(), s.image.data());
        assert!(once.image.data() != s.image.data());
    }

    #[test]
    fn augment_offset_bounds_checked() {
        let s = &synth_blobs::<f64>(2, 1, 8, 8, 6)[0];
        assert!(augment_with(s, false, 2 * AUGMENT_PAD + 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn augment_preserves_shape_label_and_range(
            flip in any::<bool>(),
            dy in 0usize..=8,
            dx in 0usize..=8,
            seed in 0u64..64,
        ) {
            let s = &synth_blobs::<f64>(3, 1, 9, 11, seed)[2];
            let out = augment_with(s, flip, dy, dx).unwrap();
            prop_assert_eq!(out.label, s.label);
            prop_assert_eq!(out.image.shape(), s.image.shape());
            prop_assert!(out.image.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn batches_sizes_and_partial_tail() {
        let samples = synth_blobs::<f32>(2, 5, 6, 6, 8);
        let got = batches(&samples, 4, 0).unwrap();
        let sizes: Vec<usize> = got.iter().map(|b| b.labels.len()).collect();
        assert_eq!(sizes, [4, 4, 2]);
        assert_eq!(got[0].images.shape(), &[4, 6, 6, 3]);
        assert_eq!(got[2].images.shape(), &[2, 6, 6, 3]);
    }

    #[test]
    fn batches_same_seed_same_order() {
        let samples = synth_blobs::<f32>(3, 4, 6, 6, 8);
        let a = batches(&samples, 5, 42).unwrap();
        let b = batches(&samples, 5, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.labels, y.labels);
            assert_eq!(x.images.data(), y.images.data());
        }
        let c = batches(&samples, 5, 43).unwrap();
        let flat = |bs: &[Batch<f32>]| -> Vec<usize> {
            bs.iter().flat_map(|b| b.labels.clone()).collect()
        };
        assert!(flat(&a) != flat(&c), "different seeds should reorder");
    }

    #[test]
    fn batches_union_is_input_multiset() {
        // Oracle: count samples by a content key on both sides.
        let samples = synth_blobs::<f64>(4, 7, 5, 5, 13);
        let got = batches(&samples, 6, 99).unwrap();
        let mut want: BTreeMap<(usize, Vec<u64>), usize> = BTreeMap::new();
        for s in &samples {
            let key = (s.label, s.image.data().iter().map(|v| v.to_bits()).collect());
            *want.entry(key).or_default() += 1;
        }
        let mut have: BTreeMap<(usize, Vec<u64>), usize> = BTreeMap::new();
        for b in &got {
            let per = b.images.len() / b.labels.len();
            for (i, &label) in b.labels.iter().enumerate() {
                let slice = &b.images.data()[i * per..(i + 1) * per];
                let key = (label, slice.iter().map(|v| v.to_bits()).collect());
                *have.entry(key).or_default() += 1;
            }
        }
        assert_eq!(want, have);
    }

    #[test]
    fn batches_rejects_zero_size_and_mixed_shapes() {
        let samples = synth_blobs::<f32>(2, 2, 6, 6, 8);
        assert!(batches(&samples, 0, 1).is_err());
        let mut mixed = samples.clone();
        mixed.push(synth_blobs::<f32>(1, 1, 4, 4, 8).pop().unwrap());
        assert!(batches(&mixed, 2, 1).is_err());
    }

    /// Multinomial logistic regression on raw pixels: full-batch gradient
    /// descent on the softmax cross-entropy, the independent reference for
    /// what a linear readout of the synthetic task achieves.
    fn linear_probe_accuracy(
        train: &[Sample<f64>],
        test: &[Sample<f64>],
        classes: usize,
        iters: usize,
        lr: f64,
    ) -> f64 {
        let dim = train[0].image.len() + 1;
        let mut weights = vec![0.0f64; classes * dim];
        let feats = |s: &Sample<f64>| -> Vec<f64> {
            // Centring the raw pixels keeps plain gradient descent well
            // conditioned; it does not change what is linearly readable.
            let mut f: Vec<f64> = s.image.data().iter().map(|v| v - 0.5).collect();
            f.push(1.0);
            f
        };
        let logits = |w: &[f64], f: &[f64]| -> Vec<f64> {
            (0..classes)
                .map(|k| {
                    f.iter()
                        .zip(&w[k * dim..(k + 1) * dim])
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect()
        };
        let train_feats: Vec<(Vec<f64>, usize)> =
            train.iter().map(|s| (feats(s), s.label)).collect();
        for _ in 0..iters {
            let mut grad = vec![0.0f64; classes * dim];
            for (f, label) in &train_feats {
                let z = logits(&weights, f);
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let sum: f64 = exps.iter().sum();
                for k in 0..classes {
                    let p = exps[k] / sum - if k == *label { 1.0 } else { 0.0 };
                    for (g, x) in grad[k * dim..(k + 1) * dim].iter_mut().zip(f) {
                        *g += p * x;
                    }
                }
            }
            let scale = lr / train_feats.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= scale * g;
            }
        }
        let correct = test
            .iter()
            .filter(|s| {
                let z = logits(&weights, &feats(s));
                let best = (0..classes).max_by(|&a, &b| z[a].total_cmp(&z[b])).unwrap();
                best == s.label
            })
            .count();
        correct as f64 / test.len() as f64
    }

    #[test]
    fn linear_probe_reads_position_but_not_parity() {
        let train = synth_blobs::<f64>(10, 80, 16, 16, 71);
        let test = synth_blobs::<f64>(10, 20, 16, 16, 72);
        let acc = linear_probe_accuracy(&train, &test, 10, 600, 8.0);
        std::println!("linear probe accuracy: {acc}");
        assert!(acc > 0.60, "linear probe too weak: {acc}");
        assert!(acc < 0.95, "task is linearly saturated: {acc}");
    }
}
