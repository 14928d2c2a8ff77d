//! Synthetic embedding datasets with known ground truth: class-clustered
//! image/caption embeddings, planted near-duplicate images, noisy and
//! mislabeled captions, and a record of every planted positive pair.
//!
//! Class prototypes are random unit vectors made mutually orthogonal, so
//! cross-class cosines stay near zero by construction and the generator can
//! certify a separation margin alongside the planted pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{BatchLayout, EmbeddingDataset, PlantedPair};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Per-component noise applied when cloning an image into a near-duplicate;
/// scaled by 1/sqrt(d) so the duplicate cosine stays above 0.95.
const DUPLICATE_NOISE_SCALE: f64 = 0.1;

/// Minimum cosine a planted duplicate must reach against its source.
pub const DUPLICATE_MIN_COSINE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub images_per_class: usize,
    /// Captions per image (original plus pseudo-captions).
    pub k: usize,
    pub d_raw: usize,
    /// Std of the Gaussian placing each image around its class prototype.
    pub image_noise_std: f64,
    /// Std of the independent Gaussian placing each caption around a prototype.
    pub caption_noise_std: f64,
    /// Std of the extra Gaussian producing the augmented view from the clean one.
    pub image_aug_noise_std: f64,
    /// Fraction of images replaced by a near-copy of another same-class image.
    pub duplicate_fraction: f64,
    /// Fraction of captions drawn from a wrong class prototype.
    pub mislabel_fraction: f64,
    /// Clean-view image-text cosine above which an off-block pair is recorded
    /// as a planted positive.
    pub cross_margin: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 4,
            images_per_class: 8,
            k: 5,
            d_raw: 32,
            image_noise_std: 0.09,
            caption_noise_std: 0.12,
            image_aug_noise_std: 0.05,
            duplicate_fraction: 0.0,
            mislabel_fraction: 0.0,
            cross_margin: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn n_images(&self) -> usize {
        self.n_classes * self.images_per_class
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidArgument("n_classes must be >= 2".into()));
        }
        if self.images_per_class < 1 {
            return Err(Error::InvalidArgument("images_per_class must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.d_raw < 4 {
            return Err(Error::InvalidArgument("d_raw must be >= 4".into()));
        }
        if self.d_raw < self.n_classes {
            return Err(Error::InvalidArgument(format!(
                "d_raw {} too small for {} orthogonal class prototypes",
                self.d_raw, self.n_classes
            )));
        }
        for (name, v) in [
            ("image_noise_std", self.image_noise_std),
            ("caption_noise_std", self.caption_noise_std),
            ("image_aug_noise_std", self.image_aug_noise_std),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0")));
            }
        }
        for (name, v) in [
            ("duplicate_fraction", self.duplicate_fraction),
            ("mislabel_fraction", self.mislabel_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must be in [0, 1]")));
            }
        }
        if self.duplicate_fraction > 0.0 && self.images_per_class < 2 {
            return Err(Error::InvalidArgument(
                "duplicate_fraction > 0 needs images_per_class >= 2".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.cross_margin) {
            return Err(Error::InvalidArgument("cross_margin must be in [-1, 1]".into()));
        }
        Ok(())
    }
}

/// One planted near-duplicate: `dup_image`'s clean embedding is a near-copy
/// of `source_image`'s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateEvent {
    pub dup_image: usize,
    pub source_image: usize,
}

/// Everything the generator knows about the data it planted; stored in the
/// dataset manifest so audits can replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub config: SynthConfig,
    pub seed: u64,
    pub duplicate_events: Vec<DuplicateEvent>,
    /// Caption columns whose embedding was drawn from a wrong class prototype.
    pub mislabeled_captions: Vec<usize>,
    /// The prototype class each caption was actually drawn from.
    pub caption_class: Vec<u32>,
    /// Smallest clean-view cosine across planted duplicates (None without dups).
    pub min_duplicate_cosine: Option<f64>,
    /// Largest clean-view image-text cosine across class boundaries.
    pub max_cross_class_image_text_cosine: f64,
    /// Largest clean-view image-image cosine across class boundaries.
    pub max_cross_class_image_image_cosine: f64,
    /// Largest text-text cosine across (drawn) class boundaries.
    pub max_cross_class_text_text_cosine: f64,
}

pub type SynthProvenance = SynthReport;

impl SynthReport {
    pub fn provenance(&self) -> SynthProvenance {
        self.clone()
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize, std: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..dim).map(|_| normal.sample(rng) * std).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine_f32(a: &[f32], b: &[f32]) -> f64 {
    let mut ab = 0.0f64;
    let mut aa = 0.0f64;
    let mut bb = 0.0f64;
    for k in 0..a.len() {
        let x = a[k] as f64;
        let y = b[k] as f64;
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// Mutually orthogonal random unit prototypes via Gram-Schmidt.
fn orthogonal_prototypes(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut protos: Vec<Vec<f64>> = Vec::with_capacity(n);
    while protos.len() < n {
        let mut v = gaussian_vec(rng, dim, 1.0);
        for p in &protos {
            let proj = dot(&v, p);
            for (x, y) in v.iter_mut().zip(p) {
                *x -= proj * y;
            }
        }
        if norm(&v) < 1e-6 {
            continue; // degenerate draw, retry
        }
        normalize(&mut v);
        protos.push(v);
    }
    protos
}

fn quantize(rows: &[Vec<f64>], dim: usize) -> Result<EmbeddingMatrix> {
    let data: Vec<f32> = rows.iter().flatten().map(|&v| v as f32).collect();
    EmbeddingMatrix::new(rows.len(), dim, data)
}

/// Generates a dataset with the configured plants and the report describing
/// them. Deterministic for a fixed `(config, seed)`.
pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<(EmbeddingDataset, SynthReport)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_img = config.n_images();
    let layout = BatchLayout::new(n_img, config.k)?;
    let d = config.d_raw;

    let protos = orthogonal_prototypes(&mut rng, config.n_classes, d);
    let labels: Vec<u32> = (0..n_img).map(|i| (i / config.images_per_class) as u32).collect();

    // Clean image embeddings: prototype plus placement noise, normalized.
    let mut clean: Vec<Vec<f64>> = Vec::with_capacity(n_img);
    for i in 0..n_img {
        let mut v = protos[labels[i] as usize].clone();
        for (x, g) in v.iter_mut().zip(gaussian_vec(&mut rng, d, config.image_noise_std)) {
            *x += g;
        }
        normalize(&mut v);
        clean.push(v);
    }

    // Near-duplicates: overwrite selected images with a noisy copy of another
    // same-class image.
    let n_dup = (config.duplicate_fraction * n_img as f64).round() as usize;
    let dup_targets: Vec<usize> = rand::seq::index::sample(&mut rng, n_img, n_dup).into_vec();
    let dup_noise = DUPLICATE_NOISE_SCALE / (d as f64).sqrt();
    let mut duplicate_events = Vec::with_capacity(n_dup);
    for &i in &dup_targets {
        let class = labels[i] as usize;
        let class_start = class * config.images_per_class;
        let source = loop {
            let j = class_start + rng.gen_range(0..config.images_per_class);
            if j != i {
                break j;
            }
        };
        loop {
            let mut v = clean[source].clone();
            for (x, g) in v.iter_mut().zip(gaussian_vec(&mut rng, d, dup_noise)) {
                *x += g;
            }
            normalize(&mut v);
            if dot(&v, &clean[source]) > DUPLICATE_MIN_COSINE {
                clean[i] = v;
                break;
            }
        }
        duplicate_events.push(DuplicateEvent {
            dup_image: i,
            source_image: source,
        });
    }

    // Augmented view: clean plus augmentation noise, renormalized.
    let mut augmented: Vec<Vec<f64>> = Vec::with_capacity(n_img);
    for base in &clean {
        let mut v = base.clone();
        for (x, g) in v.iter_mut().zip(gaussian_vec(&mut rng, d, config.image_aug_noise_std)) {
            *x += g;
        }
        normalize(&mut v);
        augmented.push(v);
    }

    // Captions: drawn around the owner's class prototype, except for the
    // mislabeled subset which is drawn from a wrong class.
    let n_txt = layout.n_txt;
    let n_mis = (config.mislabel_fraction * n_txt as f64).round() as usize;
    let mut mislabeled_captions: Vec<usize> =
        rand::seq::index::sample(&mut rng, n_txt, n_mis).into_vec();
    mislabeled_captions.sort_unstable();
    let mislabel_set: std::collections::HashSet<usize> =
        mislabeled_captions.iter().copied().collect();

    let mut caption_class = Vec::with_capacity(n_txt);
    let mut texts: Vec<Vec<f64>> = Vec::with_capacity(n_txt);
    for c in 0..n_txt {
        let owner_class = labels[layout.image_of_caption(c)] as usize;
        let drawn = if mislabel_set.contains(&c) {
            let wrong = rng.gen_range(0..config.n_classes - 1);
            if wrong >= owner_class {
                wrong + 1
            } else {
                wrong
            }
        } else {
            owner_class
        };
        let mut v = protos[drawn].clone();
        for (x, g) in v.iter_mut().zip(gaussian_vec(&mut rng, d, config.caption_noise_std)) {
            *x += g;
        }
        normalize(&mut v);
        caption_class.push(drawn as u32);
        texts.push(v);
    }

    let clean_m = quantize(&clean, d)?;
    let augmented_m = quantize(&augmented, d)?;
    let texts_m = quantize(&texts, d)?;

    // Planted record, computed from the stored f32 data so audits replay
    // exactly: every dup-derived pair, plus every off-block pair whose
    // clean-view image-text cosine clears the margin.
    let mut planted: Vec<PlantedPair> = Vec::new();
    for ev in &duplicate_events {
        for (a, b) in [
            (ev.dup_image, ev.source_image),
            (ev.source_image, ev.dup_image),
        ] {
            for c in layout.caption_range(b) {
                if caption_class[c] == labels[a] {
                    planted.push(PlantedPair { image: a, caption: c });
                }
            }
        }
    }
    let mut max_it_cross = f64::NEG_INFINITY;
    for i in 0..n_img {
        for c in 0..n_txt {
            if layout.is_ground_truth(i, c) {
                continue;
            }
            let cos = cosine_f32(clean_m.row(i), texts_m.row(c));
            if caption_class[c] != labels[i] {
                max_it_cross = max_it_cross.max(cos);
            }
            if cos > config.cross_margin {
                planted.push(PlantedPair { image: i, caption: c });
            }
        }
    }
    planted.sort_unstable();
    planted.dedup();

    let mut max_ii_cross = f64::NEG_INFINITY;
    for i in 0..n_img {
        for j in 0..n_img {
            if labels[i] != labels[j] {
                max_ii_cross = max_ii_cross.max(cosine_f32(clean_m.row(i), clean_m.row(j)));
            }
        }
    }
    let mut max_tt_cross = f64::NEG_INFINITY;
    for a in 0..n_txt {
        for b in 0..n_txt {
            if caption_class[a] != caption_class[b] {
                max_tt_cross = max_tt_cross.max(cosine_f32(texts_m.row(a), texts_m.row(b)));
            }
        }
    }
    let min_duplicate_cosine = duplicate_events
        .iter()
        .map(|ev| cosine_f32(clean_m.row(ev.dup_image), clean_m.row(ev.source_image)))
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.min(c))));

    let dataset = EmbeddingDataset {
        image_embeddings: augmented_m,
        clean_image_embeddings: Some(clean_m),
        text_embeddings: texts_m,
        layout,
        class_labels: Some(labels),
        planted_positive_pairs: Some(planted),
    };
    dataset.validate()?;

    let report = SynthReport {
        config: config.clone(),
        seed,
        duplicate_events,
        mislabeled_captions,
        caption_class,
        min_duplicate_cosine,
        max_cross_class_image_text_cosine: max_it_cross,
        max_cross_class_image_image_cosine: max_ii_cross,
        max_cross_class_text_text_cosine: max_tt_cross,
    };
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_plants_means_empty_record() {
        let cfg = SynthConfig {
            duplicate_fraction: 0.0,
            mislabel_fraction: 0.0,
            ..SynthConfig::default()
        };
        let (ds, report) = generate_synthetic(&cfg, 1).unwrap();
        // Same-class pairs above the margin are still recorded; with the
        // default margin only genuinely close pairs appear, and with no dups
        // there must be no cross-class entries at all.
        for p in ds.planted_positive_pairs.as_ref().unwrap() {
            let img_class = ds.class_labels.as_ref().unwrap()[p.image];
            assert_eq!(report.caption_class[p.caption], img_class);
        }
        assert!(report.duplicate_events.is_empty());
        assert!(report.mislabeled_captions.is_empty());
    }

    #[test]
    fn duplicate_count_is_exact() {
        let cfg = SynthConfig {
            n_classes: 4,
            images_per_class: 8,
            duplicate_fraction: 0.25,
            ..SynthConfig::default()
        };
        let (ds, report) = generate_synthetic(&cfg, 7).unwrap();
        assert_eq!(report.duplicate_events.len(), 8);
        assert!(report.min_duplicate_cosine.unwrap() > DUPLICATE_MIN_COSINE);
        let planted = ds.planted_positive_pairs.as_ref().unwrap();
        for ev in &report.duplicate_events {
            let has_pairs = planted.iter().any(|p| p.image == ev.dup_image);
            assert!(has_pairs, "dup image {} has no recorded pairs", ev.dup_image);
        }
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let cfg = SynthConfig {
            duplicate_fraction: 0.25,
            mislabel_fraction: 0.1,
            ..SynthConfig::default()
        };
        let (a, ra) = generate_synthetic(&cfg, 42).unwrap();
        let (b, rb) = generate_synthetic(&cfg, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn infeasible_config_is_rejected() {
        let cfg = SynthConfig {
            images_per_class: 1,
            duplicate_fraction: 0.5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&cfg, 1).is_err());
        let cfg = SynthConfig {
            n_classes: 40,
            d_raw: 8,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&cfg, 1).is_err());
    }

    #[test]
    fn cross_class_cosines_stay_below_default_thresholds() {
        let (_, report) = generate_synthetic(&SynthConfig::default(), 5).unwrap();
        assert!(report.max_cross_class_image_text_cosine < 0.24);
        assert!(report.max_cross_class_image_image_cosine < 0.92);
        assert!(report.max_cross_class_text_text_cosine < 0.99);
    }

    #[test]
    fn mislabeled_captions_are_drawn_from_wrong_class() {
        let cfg = SynthConfig {
            mislabel_fraction: 0.2,
            ..SynthConfig::default()
        };
        let (ds, report) = generate_synthetic(&cfg, 11).unwrap();
        assert_eq!(report.mislabeled_captions.len(), 32);
        let labels = ds.class_labels.as_ref().unwrap();
        for &c in &report.mislabeled_captions {
            let owner = ds.layout.image_of_caption(c);
            assert_ne!(report.caption_class[c], labels[owner]);
        }
    }
}
