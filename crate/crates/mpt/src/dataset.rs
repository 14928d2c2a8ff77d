//! Embedding dataset container, its binary file format, and batch sampling
//! with the k-captions-per-image layout.
//!
//! A dataset is stored as a file pair:
//! - `<name>.ffe` — binary embeddings, authoritative. Magic `FFE1`, then
//!   little-endian header (`u32` version, `u64` n_img, `u32` k, `u32` d_raw,
//!   three presence bytes, one padding byte) followed by the f32 payload
//!   blocks and optional labels/planted-pair blocks.
//! - `<name>.json` — human-readable manifest mirroring the header plus, for
//!   generated data, the generator config and seed. Informative only.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::SeedableRng;
use rand::{seq::index::sample as index_sample, Rng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::synth::SynthProvenance;

pub const FFE_MAGIC: &[u8; 4] = b"FFE1";
pub const FFE_VERSION: u32 = 1;

/// Batch shape: `n_img` images, `k` captions per image, `n_txt = k * n_img`
/// captions laid out contiguously, so caption `c` belongs to image `c / k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchLayout {
    pub n_img: usize,
    pub k: usize,
    pub n_txt: usize,
}

impl BatchLayout {
    pub fn new(n_img: usize, k: usize) -> Result<Self> {
        if n_img == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!(
                "layout needs n_img >= 1 and k >= 1, got n_img={n_img}, k={k}"
            )));
        }
        Ok(Self {
            n_img,
            k,
            n_txt: n_img * k,
        })
    }

    pub fn with_counts(n_img: usize, k: usize, n_txt: usize) -> Result<Self> {
        let layout = Self::new(n_img, k)?;
        if layout.n_txt != n_txt {
            return Err(Error::InvalidArgument(format!(
                "layout inconsistency: n_txt={} but k*n_img={}",
                n_txt, layout.n_txt
            )));
        }
        Ok(layout)
    }

    /// Image that owns caption column `c`.
    #[inline]
    pub fn image_of_caption(&self, c: usize) -> usize {
        c / self.k
    }

    /// Caption columns belonging to image `i`.
    #[inline]
    pub fn caption_range(&self, i: usize) -> std::ops::Range<usize> {
        i * self.k..(i + 1) * self.k
    }

    /// True for ground-truth (block-diagonal) image/caption pairs.
    #[inline]
    pub fn is_ground_truth(&self, image: usize, caption: usize) -> bool {
        self.image_of_caption(caption) == image
    }
}

/// An off-block image/caption pair the generator knows to be a true match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedPair {
    pub image: usize,
    pub caption: usize,
}

/// In-memory dataset: augmented image view, optional clean (no-augmentation)
/// view used for mining, caption embeddings, and optional labels / planted
/// ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    pub image_embeddings: EmbeddingMatrix,
    pub clean_image_embeddings: Option<EmbeddingMatrix>,
    pub text_embeddings: EmbeddingMatrix,
    pub layout: BatchLayout,
    pub class_labels: Option<Vec<u32>>,
    pub planted_positive_pairs: Option<Vec<PlantedPair>>,
}

impl EmbeddingDataset {
    pub fn validate(&self) -> Result<()> {
        let l = &self.layout;
        if self.image_embeddings.rows() != l.n_img {
            return Err(Error::DimensionMismatch(format!(
                "image rows {} != layout n_img {}",
                self.image_embeddings.rows(),
                l.n_img
            )));
        }
        if self.text_embeddings.rows() != l.n_txt {
            return Err(Error::DimensionMismatch(format!(
                "text rows {} != layout n_txt {}",
                self.text_embeddings.rows(),
                l.n_txt
            )));
        }
        if self.text_embeddings.dim() != self.image_embeddings.dim() {
            return Err(Error::DimensionMismatch(
                "image and text feature dims differ".into(),
            ));
        }
        if let Some(clean) = &self.clean_image_embeddings {
            if clean.rows() != l.n_img || clean.dim() != self.image_embeddings.dim() {
                return Err(Error::DimensionMismatch(
                    "clean view shape differs from image view".into(),
                ));
            }
        }
        if let Some(labels) = &self.class_labels {
            if labels.len() != l.n_img {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} images",
                    labels.len(),
                    l.n_img
                )));
            }
        }
        if let Some(pairs) = &self.planted_positive_pairs {
            for p in pairs {
                if p.image >= l.n_img || p.caption >= l.n_txt {
                    return Err(Error::InvalidArgument(format!(
                        "planted pair ({}, {}) out of range",
                        p.image, p.caption
                    )));
                }
                if l.is_ground_truth(p.image, p.caption) {
                    return Err(Error::InvalidArgument(format!(
                        "planted pair ({}, {}) duplicates a ground-truth pair",
                        p.image, p.caption
                    )));
                }
            }
        }
        Ok(())
    }

    /// The reference view for mining: the clean view when stored, otherwise
    /// the (augmented) image view.
    pub fn clean_view(&self) -> &EmbeddingMatrix {
        self.clean_image_embeddings
            .as_ref()
            .unwrap_or(&self.image_embeddings)
    }

    pub fn n_images(&self) -> usize {
        self.layout.n_img
    }

    pub fn n_captions(&self) -> usize {
        self.layout.n_txt
    }

    pub fn dim(&self) -> usize {
        self.image_embeddings.dim()
    }

    /// Number of distinct class labels (0 when unlabeled).
    pub fn n_classes(&self) -> usize {
        self.class_labels
            .as_ref()
            .map_or(0, |l| l.iter().map(|&c| c as usize + 1).max().unwrap_or(0))
    }

    /// Derives a dataset keeping only the first `k_new` captions per image.
    /// Planted pairs are remapped; pairs pointing at dropped captions vanish.
    pub fn restrict_captions(&self, k_new: usize) -> Result<EmbeddingDataset> {
        if k_new == 0 || k_new > self.layout.k {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict k={} to {}",
                self.layout.k, k_new
            )));
        }
        let layout = BatchLayout::new(self.layout.n_img, k_new)?;
        let mut keep = Vec::with_capacity(layout.n_txt);
        for i in 0..self.layout.n_img {
            keep.extend(self.layout.caption_range(i).take(k_new));
        }
        let text_embeddings = self.text_embeddings.select_rows(&keep)?;
        let planted = self.planted_positive_pairs.as_ref().map(|pairs| {
            pairs
                .iter()
                .filter_map(|p| {
                    let offset = p.caption - self.layout.image_of_caption(p.caption) * self.layout.k;
                    (offset < k_new).then(|| PlantedPair {
                        image: p.image,
                        caption: self.layout.image_of_caption(p.caption) * k_new + offset,
                    })
                })
                .collect()
        });
        let ds = EmbeddingDataset {
            image_embeddings: self.image_embeddings.clone(),
            clean_image_embeddings: self.clean_image_embeddings.clone(),
            text_embeddings,
            layout,
            class_labels: self.class_labels.clone(),
            planted_positive_pairs: planted,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Manifest mirror of the binary header; the binary is authoritative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub magic: String,
    pub format_version: u32,
    pub n_img: u64,
    pub k: u32,
    pub d_raw: u32,
    pub has_clean_view: bool,
    pub has_labels: bool,
    pub has_planted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<SynthProvenance>,
}

fn ffe_path(stem: &Path) -> PathBuf {
    let mut p = stem.as_os_str().to_owned();
    p.push(".ffe");
    PathBuf::from(p)
}

fn manifest_path(stem: &Path) -> PathBuf {
    let mut p = stem.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn write_f32_block<W: Write>(w: &mut W, m: &EmbeddingMatrix) -> Result<()> {
    for &v in m.data() {
        w.write_f32::<LittleEndian>(v)?;
    }
    Ok(())
}

/// Writes `<stem>.ffe` and `<stem>.json`. Refuses to overwrite existing
/// files unless `overwrite` is set.
pub fn write_dataset(
    ds: &EmbeddingDataset,
    stem: &Path,
    provenance: Option<&SynthProvenance>,
    overwrite: bool,
) -> Result<()> {
    ds.validate()?;
    let bin = ffe_path(stem);
    let man = manifest_path(stem);
    if !overwrite {
        for p in [&bin, &man] {
            if p.exists() {
                return Err(Error::PathCollision(p.clone()));
            }
        }
    }

    let mut w = BufWriter::new(File::create(&bin)?);
    w.write_all(FFE_MAGIC)?;
    w.write_u32::<LittleEndian>(FFE_VERSION)?;
    w.write_u64::<LittleEndian>(ds.layout.n_img as u64)?;
    w.write_u32::<LittleEndian>(ds.layout.k as u32)?;
    w.write_u32::<LittleEndian>(ds.dim() as u32)?;
    w.write_u8(ds.clean_image_embeddings.is_some() as u8)?;
    w.write_u8(ds.class_labels.is_some() as u8)?;
    w.write_u8(ds.planted_positive_pairs.is_some() as u8)?;
    w.write_u8(0)?; // padding

    write_f32_block(&mut w, &ds.image_embeddings)?;
    if let Some(clean) = &ds.clean_image_embeddings {
        write_f32_block(&mut w, clean)?;
    }
    write_f32_block(&mut w, &ds.text_embeddings)?;
    if let Some(labels) = &ds.class_labels {
        for &l in labels {
            w.write_u32::<LittleEndian>(l)?;
        }
    }
    if let Some(pairs) = &ds.planted_positive_pairs {
        w.write_u64::<LittleEndian>(pairs.len() as u64)?;
        for p in pairs {
            w.write_u64::<LittleEndian>(p.image as u64)?;
            w.write_u64::<LittleEndian>(p.caption as u64)?;
        }
    }
    w.flush()?;

    let manifest = DatasetManifest {
        magic: "FFE1".into(),
        format_version: FFE_VERSION,
        n_img: ds.layout.n_img as u64,
        k: ds.layout.k as u32,
        d_raw: ds.dim() as u32,
        has_clean_view: ds.clean_image_embeddings.is_some(),
        has_labels: ds.class_labels.is_some(),
        has_planted: ds.planted_positive_pairs.is_some(),
        generator: provenance.cloned(),
    };
    let mut mw = BufWriter::new(File::create(&man)?);
    serde_json::to_writer_pretty(&mut mw, &manifest)?;
    mw.write_all(b"\n")?;
    mw.flush()?;
    Ok(())
}

fn read_f32_block<R: Read>(r: &mut R, rows: usize, dim: usize, field: &str) -> Result<EmbeddingMatrix> {
    let mut data = vec![0.0f32; rows * dim];
    for v in &mut data {
        *v = r.read_f32::<LittleEndian>().map_err(|_| {
            Error::format(field, format!("truncated: expected {} f32 values", rows * dim))
        })?;
    }
    EmbeddingMatrix::new(rows, dim, data)
}

/// Reads and fully validates `<stem>.ffe` (the `.json` manifest is ignored).
pub fn read_dataset(stem: &Path) -> Result<EmbeddingDataset> {
    let bin = ffe_path(stem);
    let mut r = BufReader::new(File::open(&bin)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format("magic", "file shorter than magic bytes"))?;
    if &magic != FFE_MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected {FFE_MAGIC:?}, found {magic:?}"),
        ));
    }
    let version = r
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::format("format_version", "truncated header"))?;
    if version != FFE_VERSION {
        return Err(Error::format(
            "format_version",
            format!("unsupported version {version}, expected {FFE_VERSION}"),
        ));
    }
    let n_img = r
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::format("n_img", "truncated header"))? as usize;
    let k = r
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::format("k", "truncated header"))? as usize;
    let d_raw = r
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::format("d_raw", "truncated header"))? as usize;
    let has_clean = read_flag(&mut r, "has_clean_view")?;
    let has_labels = read_flag(&mut r, "has_labels")?;
    let has_planted = read_flag(&mut r, "has_planted")?;
    let _pad = r
        .read_u8()
        .map_err(|_| Error::format("padding", "truncated header"))?;

    let layout = BatchLayout::new(n_img, k)
        .map_err(|e| Error::format("layout", e.to_string()))?;

    let image_embeddings = read_f32_block(&mut r, n_img, d_raw, "image_embeddings")?;
    let clean_image_embeddings = if has_clean {
        Some(read_f32_block(&mut r, n_img, d_raw, "clean_view")?)
    } else {
        None
    };
    let text_embeddings = read_f32_block(&mut r, layout.n_txt, d_raw, "text_embeddings")?;
    let class_labels = if has_labels {
        let mut labels = vec![0u32; n_img];
        for v in &mut labels {
            *v = r
                .read_u32::<LittleEndian>()
                .map_err(|_| Error::format("labels", "truncated label block"))?;
        }
        Some(labels)
    } else {
        None
    };
    let planted_positive_pairs = if has_planted {
        let count = r
            .read_u64::<LittleEndian>()
            .map_err(|_| Error::format("planted_pairs", "truncated pair count"))?;
        let mut pairs = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let image = r
                .read_u64::<LittleEndian>()
                .map_err(|_| Error::format("planted_pairs", "truncated pair payload"))?;
            let caption = r
                .read_u64::<LittleEndian>()
                .map_err(|_| Error::format("planted_pairs", "truncated pair payload"))?;
            pairs.push(PlantedPair {
                image: image as usize,
                caption: caption as usize,
            });
        }
        Some(pairs)
    } else {
        None
    };

    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format("payload", "trailing bytes after final block"));
    }

    let ds = EmbeddingDataset {
        image_embeddings,
        clean_image_embeddings,
        text_embeddings,
        layout,
        class_labels,
        planted_positive_pairs,
    };
    ds.validate()?;
    Ok(ds)
}

fn read_flag<R: Read>(r: &mut R, field: &str) -> Result<bool> {
    let v = r
        .read_u8()
        .map_err(|_| Error::format(field, "truncated header"))?;
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::format(field, format!("flag byte must be 0 or 1, got {v}"))),
    }
}

/// How captions are drawn for each sampled image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CaptionMode {
    /// All k captions of each selected image enter the batch.
    #[default]
    JointK,
    /// Exactly one uniformly chosen caption per image (single-positive baseline).
    RandomOneOfK,
}

/// A sampled training batch; caption rows are grouped contiguously per image.
#[derive(Debug, Clone)]
pub struct SampledBatch {
    pub images: EmbeddingMatrix,
    pub clean_images: EmbeddingMatrix,
    pub texts: EmbeddingMatrix,
    pub layout: BatchLayout,
    pub image_indices: Vec<usize>,
    pub caption_indices: Vec<usize>,
}

/// Selects `batch_images` images uniformly without replacement (seeded) and
/// returns their rows plus captions per `mode`.
pub fn sample_batch(
    ds: &EmbeddingDataset,
    batch_images: usize,
    rng_seed: u64,
    mode: CaptionMode,
) -> Result<SampledBatch> {
    if batch_images == 0 {
        return Err(Error::InvalidArgument("batch_images must be >= 1".into()));
    }
    if batch_images > ds.layout.n_img {
        return Err(Error::InvalidArgument(format!(
            "batch_images {} exceeds dataset images {}",
            batch_images, ds.layout.n_img
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let image_indices: Vec<usize> = index_sample(&mut rng, ds.layout.n_img, batch_images).into_vec();

    let k_out = match mode {
        CaptionMode::JointK => ds.layout.k,
        CaptionMode::RandomOneOfK => 1,
    };
    let mut caption_indices = Vec::with_capacity(batch_images * k_out);
    for &img in &image_indices {
        match mode {
            CaptionMode::JointK => caption_indices.extend(ds.layout.caption_range(img)),
            CaptionMode::RandomOneOfK => {
                let offset = rng.gen_range(0..ds.layout.k);
                caption_indices.push(img * ds.layout.k + offset);
            }
        }
    }

    Ok(SampledBatch {
        images: ds.image_embeddings.select_rows(&image_indices)?,
        clean_images: ds.clean_view().select_rows(&image_indices)?,
        texts: ds.text_embeddings.select_rows(&caption_indices)?,
        layout: BatchLayout::new(batch_images, k_out)?,
        image_indices,
        caption_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_synthetic, SynthConfig};
    use tempfile::tempdir;

    fn tiny_dataset() -> EmbeddingDataset {
        let layout = BatchLayout::new(2, 1).unwrap();
        EmbeddingDataset {
            image_embeddings: EmbeddingMatrix::new(2, 4, (0..8).map(|v| v as f32).collect()).unwrap(),
            clean_image_embeddings: None,
            text_embeddings: EmbeddingMatrix::new(2, 4, (8..16).map(|v| v as f32).collect()).unwrap(),
            layout,
            class_labels: None,
            planted_positive_pairs: None,
        }
    }

    #[test]
    fn layout_grouping_arithmetic() {
        let l = BatchLayout::new(3, 5).unwrap();
        assert_eq!(l.n_txt, 15);
        assert_eq!(l.image_of_caption(0), 0);
        assert_eq!(l.image_of_caption(4), 0);
        assert_eq!(l.image_of_caption(5), 1);
        assert_eq!(l.caption_range(2), 10..15);
        assert!(BatchLayout::with_counts(3, 5, 14).is_err());
    }

    #[test]
    fn round_trip_tiny_dataset() {
        let dir = tempdir().unwrap();
        let stem = dir.path().join("ds");
        let ds = tiny_dataset();
        write_dataset(&ds, &stem, None, false).unwrap();
        let back = read_dataset(&stem).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn round_trip_with_labels_and_planted_is_byte_exact() {
        let dir = tempdir().unwrap();
        let cfg = SynthConfig {
            n_classes: 2,
            images_per_class: 4,
            k: 5,
            d_raw: 16,
            duplicate_fraction: 0.25,
            ..SynthConfig::default()
        };
        let (ds, report) = generate_synthetic(&cfg, 99).unwrap();
        let stem = dir.path().join("full");
        write_dataset(&ds, &stem, Some(&report.provenance()), false).unwrap();
        let back = read_dataset(&stem).unwrap();
        assert_eq!(ds, back);

        // Re-serialize and compare bytes.
        let stem2 = dir.path().join("again");
        write_dataset(&back, &stem2, None, false).unwrap();
        let a = std::fs::read(stem.with_extension("ffe")).unwrap();
        let b = std::fs::read(stem2.with_extension("ffe")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collision_is_a_hard_error() {
        let dir = tempdir().unwrap();
        let stem = dir.path().join("ds");
        let ds = tiny_dataset();
        write_dataset(&ds, &stem, None, false).unwrap();
        let err = write_dataset(&ds, &stem, None, false).unwrap_err();
        assert!(matches!(err, Error::PathCollision(_)));
        write_dataset(&ds, &stem, None, true).unwrap();
    }

    #[test]
    fn corrupted_magic_names_the_field() {
        let dir = tempdir().unwrap();
        let stem = dir.path().join("ds");
        write_dataset(&tiny_dataset(), &stem, None, false).unwrap();
        let path = stem.with_extension("ffe");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        let err = read_dataset(&stem).unwrap_err();
        match err {
            Error::Format { field, .. } => assert_eq!(field, "magic"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_names_the_block() {
        let dir = tempdir().unwrap();
        let stem = dir.path().join("ds");
        write_dataset(&tiny_dataset(), &stem, None, false).unwrap();
        let path = stem.with_extension("ffe");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 6]).unwrap();
        let err = read_dataset(&stem).unwrap_err();
        match err {
            Error::Format { field, .. } => assert_eq!(field, "text_embeddings"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let dir = tempdir().unwrap();
        let stem = dir.path().join("ds");
        write_dataset(&tiny_dataset(), &stem, None, false).unwrap();
        let path = stem.with_extension("ffe");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        let err = read_dataset(&stem).unwrap_err();
        match err {
            Error::Format { field, .. } => assert_eq!(field, "payload"),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn sample_batch_keeps_caption_groups_contiguous() {
        let cfg = SynthConfig {
            n_classes: 2,
            images_per_class: 6,
            k: 5,
            ..SynthConfig::default()
        };
        let (ds, _) = generate_synthetic(&cfg, 3).unwrap();
        let batch = sample_batch(&ds, 4, 17, CaptionMode::JointK).unwrap();
        assert_eq!(batch.texts.rows(), 4 * 5);
        assert_eq!(batch.layout, BatchLayout::new(4, 5).unwrap());
        for (b, &img) in batch.image_indices.iter().enumerate() {
            let expect: Vec<usize> = ds.layout.caption_range(img).collect();
            assert_eq!(&batch.caption_indices[b * 5..(b + 1) * 5], &expect[..]);
        }
    }

    #[test]
    fn random_one_of_k_returns_one_caption_per_image() {
        let cfg = SynthConfig {
            n_classes: 2,
            images_per_class: 4,
            k: 3,
            ..SynthConfig::default()
        };
        let (ds, _) = generate_synthetic(&cfg, 3).unwrap();
        let batch = sample_batch(&ds, 5, 4, CaptionMode::RandomOneOfK).unwrap();
        assert_eq!(batch.texts.rows(), 5);
        assert_eq!(batch.layout.k, 1);
        for (b, &img) in batch.image_indices.iter().enumerate() {
            assert_eq!(ds.layout.image_of_caption(batch.caption_indices[b]), img);
        }
    }

    #[test]
    fn same_seed_samples_identically() {
        let cfg = SynthConfig::default();
        let (ds, _) = generate_synthetic(&cfg, 3).unwrap();
        let a = sample_batch(&ds, 8, 42, CaptionMode::JointK).unwrap();
        let b = sample_batch(&ds, 8, 42, CaptionMode::JointK).unwrap();
        assert_eq!(a.image_indices, b.image_indices);
        assert_eq!(a.caption_indices, b.caption_indices);
    }

    #[test]
    fn zero_batch_is_rejected() {
        let ds = tiny_dataset();
        assert!(sample_batch(&ds, 0, 1, CaptionMode::JointK).is_err());
    }

    #[test]
    fn restrict_captions_remaps_planted_pairs() {
        let cfg = SynthConfig {
            n_classes: 2,
            images_per_class: 4,
            k: 5,
            duplicate_fraction: 0.25,
            ..SynthConfig::default()
        };
        let (ds, _) = generate_synthetic(&cfg, 5).unwrap();
        let small = ds.restrict_captions(2).unwrap();
        assert_eq!(small.layout.k, 2);
        assert_eq!(small.text_embeddings.rows(), 16);
        small.validate().unwrap();
        for p in small.planted_positive_pairs.as_ref().unwrap() {
            let offset = p.caption % 2;
            let img = p.caption / 2;
            let orig = ds
                .planted_positive_pairs
                .as_ref()
                .unwrap()
                .iter()
                .find(|q| q.image == p.image && q.caption == img * 5 + offset);
            assert!(orig.is_some());
        }
    }
}
