//! On-the-fly correction of false negatives: builds the signed assignment
//! matrix from image-text, image-image and text-text similarities.
//!
//! An off-block pair is promoted to positive when
//! `(s_it > p1) ∨ (s_ii > p2) ∨ [(s_tt > p3) ∧ (s_it > p1')]`; the text-text
//! term is filtered by the image-text similarity because repeated captions
//! correlate with poor image description fidelity. Comparisons are strict,
//! so ties at a threshold stay negative. Ground-truth block pairs are always
//! positive regardless of similarity: mining only adds positives, it never
//! demotes an original pair.
//!
//! With k captions per image the square similarity matrices are first
//! brought to the N_img×N_txt shape: image-image scores are replicated
//! across each caption group, text-text scores are averaged over the source
//! image's caption block.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::dataset::BatchLayout;
use crate::embedding::{l2_normalize, similarity_triple, EmbeddingMatrix, SimilarityTriple};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MASK_MAGIC: &[u8; 4] = b"FFM1";

/// Thresholds above which a pair is marked positive; `p1_prime < p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningThresholds {
    pub p1: f64,
    pub p1_prime: f64,
    pub p2: f64,
    pub p3: f64,
}

impl Default for MiningThresholds {
    fn default() -> Self {
        Self {
            p1: 0.27,
            p1_prime: 0.24,
            p2: 0.92,
            p3: 0.99,
        }
    }
}

impl MiningThresholds {
    pub fn new(p1: f64, p1_prime: f64, p2: f64, p3: f64) -> Result<Self> {
        let t = Self { p1, p1_prime, p2, p3 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p1", self.p1),
            ("p1_prime", self.p1_prime),
            ("p2", self.p2),
            ("p3", self.p3),
        ] {
            if !v.is_finite() || v <= -1.0 || v > 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "threshold {name}={v} outside (-1, 1]"
                )));
            }
        }
        if self.p1_prime >= self.p1 {
            return Err(Error::InvalidArgument(format!(
                "p1_prime ({}) must be < p1 ({})",
                self.p1_prime, self.p1
            )));
        }
        Ok(())
    }
}

/// Which similarity terms participate in mining; disabling all of them
/// leaves only the ground-truth block positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskTerms {
    pub image_text: bool,
    pub image_image: bool,
    pub text_text: bool,
}

impl Default for MaskTerms {
    fn default() -> Self {
        Self::ALL
    }
}

impl MaskTerms {
    pub const ALL: MaskTerms = MaskTerms {
        image_text: true,
        image_image: true,
        text_text: true,
    };
    pub const NONE: MaskTerms = MaskTerms {
        image_text: false,
        image_image: false,
        text_text: false,
    };
    pub const IMAGE_TEXT: MaskTerms = MaskTerms {
        image_text: true,
        image_image: false,
        text_text: false,
    };
    pub const IMAGE_IMAGE: MaskTerms = MaskTerms {
        image_text: false,
        image_image: true,
        text_text: false,
    };
    pub const TEXT_TEXT: MaskTerms = MaskTerms {
        image_text: false,
        image_image: false,
        text_text: true,
    };

    pub fn is_none(&self) -> bool {
        !(self.image_text || self.image_image || self.text_text)
    }

    /// Parses `"it,ii,tt"` / `"none"` / `"all"`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") || s.is_empty() {
            return Ok(Self::NONE);
        }
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        let mut terms = Self::NONE;
        for part in s.split(',') {
            match part.trim() {
                "it" => terms.image_text = true,
                "ii" => terms.image_image = true,
                "tt" => terms.text_text = true,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown mask term `{other}` (expected it, ii, tt, all, none)"
                    )))
                }
            }
        }
        Ok(terms)
    }
}

impl std::fmt::Display for MaskTerms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_none() {
            return write!(f, "none");
        }
        let mut parts = Vec::new();
        if self.image_text {
            parts.push("it");
        }
        if self.image_image {
            parts.push("ii");
        }
        if self.text_text {
            parts.push("tt");
        }
        write!(f, "{}", parts.join(","))
    }
}

/// Signed positive/negative mask over image×caption pairs, entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentMatrix {
    entries: Vec<i8>,
    pub layout: BatchLayout,
}

impl AssignmentMatrix {
    /// Block-diagonal ground truth only: every caption positive for its own
    /// image, everything else negative.
    pub fn ground_truth(layout: BatchLayout) -> Self {
        let mut entries = vec![-1i8; layout.n_img * layout.n_txt];
        for i in 0..layout.n_img {
            for c in layout.caption_range(i) {
                entries[i * layout.n_txt + c] = 1;
            }
        }
        Self { entries, layout }
    }

    pub fn from_entries(entries: Vec<i8>, layout: BatchLayout) -> Result<Self> {
        if entries.len() != layout.n_img * layout.n_txt {
            return Err(Error::DimensionMismatch(format!(
                "mask needs {} entries, got {}",
                layout.n_img * layout.n_txt,
                entries.len()
            )));
        }
        if entries.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidArgument("mask entries must be -1 or +1".into()));
        }
        let m = Self { entries, layout };
        for i in 0..m.layout.n_img {
            for c in m.layout.caption_range(i) {
                if m.get(i, c) != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "ground-truth pair ({i}, {c}) must be positive"
                    )));
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn get(&self, image: usize, caption: usize) -> i8 {
        self.entries[image * self.layout.n_txt + caption]
    }

    #[inline]
    pub fn is_positive(&self, image: usize, caption: usize) -> bool {
        self.get(image, caption) == 1
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn positive_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 1).count()
    }

    pub fn positives(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_txt = self.layout.n_txt;
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &e)| e == 1)
            .map(move |(idx, _)| (idx / n_txt, idx % n_txt))
    }
}

/// Replicates each image-image score across the k captions of the column
/// image: `out[i][c] = s_ii[i][c / k]`.
pub fn expand_image_similarity(s_ii: &Matrix, layout: &BatchLayout) -> Result<Matrix> {
    if s_ii.rows() != layout.n_img || s_ii.cols() != layout.n_img {
        return Err(Error::DimensionMismatch(format!(
            "s_ii is {}x{}, layout expects {0}x{0} with n_img={}",
            s_ii.rows(),
            s_ii.cols(),
            layout.n_img
        )));
    }
    let mut out = Matrix::zeros(layout.n_img, layout.n_txt);
    for i in 0..layout.n_img {
        for c in 0..layout.n_txt {
            out.set(i, c, s_ii.get(i, layout.image_of_caption(c)));
        }
    }
    Ok(out)
}

/// Averages text-text scores over the source image's caption block:
/// `out[i][c] = mean over c' of image i of s_tt[c'][c]`.
pub fn expand_text_similarity(s_tt: &Matrix, layout: &BatchLayout) -> Result<Matrix> {
    if s_tt.rows() != layout.n_txt || s_tt.cols() != layout.n_txt {
        return Err(Error::DimensionMismatch(format!(
            "s_tt is {}x{}, layout expects {2}x{2} with n_txt={2}",
            s_tt.rows(),
            s_tt.cols(),
            layout.n_txt
        )));
    }
    let mut out = Matrix::zeros(layout.n_img, layout.n_txt);
    let k = layout.k as f64;
    for i in 0..layout.n_img {
        for c in 0..layout.n_txt {
            let mut acc = 0.0;
            for cp in layout.caption_range(i) {
                acc += s_tt.get(cp, c);
            }
            out.set(i, c, acc / k);
        }
    }
    Ok(out)
}

/// Expands a square-similarity triple to the shared N_img×N_txt shape.
pub fn expand_triple(triple: &SimilarityTriple, layout: &BatchLayout) -> Result<SimilarityTriple> {
    if triple.expanded {
        return Err(Error::InvalidArgument("triple is already expanded".into()));
    }
    if triple.s_it.rows() != layout.n_img || triple.s_it.cols() != layout.n_txt {
        return Err(Error::DimensionMismatch(format!(
            "s_it is {}x{}, layout expects {}x{}",
            triple.s_it.rows(),
            triple.s_it.cols(),
            layout.n_img,
            layout.n_txt
        )));
    }
    Ok(SimilarityTriple {
        s_it: triple.s_it.clone(),
        s_ii: expand_image_similarity(&triple.s_ii, layout)?,
        s_tt: expand_text_similarity(&triple.s_tt, layout)?,
        expanded: true,
    })
}

/// Thresholds an expanded triple into the signed assignment matrix. Entry
/// (i, c) is positive iff it is a ground-truth block pair or the enabled
/// part of the mining disjunction holds.
pub fn build_assignment(
    triple: &SimilarityTriple,
    thresholds: &MiningThresholds,
    layout: &BatchLayout,
    terms: MaskTerms,
) -> Result<AssignmentMatrix> {
    if !triple.expanded {
        return Err(Error::InvalidArgument(
            "build_assignment requires an expanded triple".into(),
        ));
    }
    thresholds.validate()?;
    for (name, m) in [("s_it", &triple.s_it), ("s_ii", &triple.s_ii), ("s_tt", &triple.s_tt)] {
        if m.rows() != layout.n_img || m.cols() != layout.n_txt {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, layout expects {}x{}",
                m.rows(),
                m.cols(),
                layout.n_img,
                layout.n_txt
            )));
        }
    }

    let mut entries = vec![-1i8; layout.n_img * layout.n_txt];
    for i in 0..layout.n_img {
        for c in 0..layout.n_txt {
            let mut positive = layout.is_ground_truth(i, c);
            if !positive && terms.image_text {
                positive = triple.s_it.get(i, c) > thresholds.p1;
            }
            if !positive && terms.image_image {
                positive = triple.s_ii.get(i, c) > thresholds.p2;
            }
            if !positive && terms.text_text {
                positive = triple.s_tt.get(i, c) > thresholds.p3
                    && triple.s_it.get(i, c) > thresholds.p1_prime;
            }
            if positive {
                entries[i * layout.n_txt + c] = 1;
            }
        }
    }
    Ok(AssignmentMatrix { entries, layout: *layout })
}

/// Full mining pipeline over reference-view embeddings: normalize, build the
/// similarity triple, expand to the k-caption shape and threshold.
pub fn mine_batch(
    reference_images: &EmbeddingMatrix,
    texts: &EmbeddingMatrix,
    layout: &BatchLayout,
    thresholds: &MiningThresholds,
    terms: MaskTerms,
) -> Result<AssignmentMatrix> {
    if reference_images.rows() != layout.n_img {
        return Err(Error::DimensionMismatch(format!(
            "{} image rows for layout n_img {}",
            reference_images.rows(),
            layout.n_img
        )));
    }
    if texts.rows() != layout.n_txt {
        return Err(Error::DimensionMismatch(format!(
            "{} text rows for layout n_txt {}",
            texts.rows(),
            layout.n_txt
        )));
    }
    let images = l2_normalize(reference_images).matrix;
    let texts = l2_normalize(texts).matrix;
    let triple = similarity_triple(&images, &texts)?;
    let expanded = expand_triple(&triple, layout)?;
    build_assignment(&expanded, thresholds, layout, terms)
}

/// Writes the compact bitmask export: magic `FFM1`, u64 n_img, u64 n_txt,
/// then row-major bits (1 = positive), LSB-first within each byte, padded
/// with zero bits.
pub fn write_mask(mask: &AssignmentMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MASK_MAGIC)?;
    w.write_u64::<LittleEndian>(mask.layout.n_img as u64)?;
    w.write_u64::<LittleEndian>(mask.layout.n_txt as u64)?;
    let n_bits = mask.entries.len();
    let mut bytes = vec![0u8; n_bits.div_ceil(8)];
    for (idx, &e) in mask.entries.iter().enumerate() {
        if e == 1 {
            bytes[idx / 8] |= 1 << (idx % 8);
        }
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Reads a mask export; the caption grouping k is recovered from
/// n_txt / n_img, which must divide exactly.
pub fn read_mask(path: &Path) -> Result<AssignmentMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format("magic", "file shorter than magic bytes"))?;
    if &magic != MASK_MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected {MASK_MAGIC:?}, found {magic:?}"),
        ));
    }
    let n_img = r
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::format("n_img", "truncated header"))? as usize;
    let n_txt = r
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::format("n_txt", "truncated header"))? as usize;
    if n_img == 0 || n_txt == 0 || n_txt % n_img != 0 {
        return Err(Error::format(
            "n_txt",
            format!("n_txt={n_txt} is not a positive multiple of n_img={n_img}"),
        ));
    }
    let layout = BatchLayout::new(n_img, n_txt / n_img).map_err(|e| Error::format("layout", e.to_string()))?;
    let n_bits = n_img * n_txt;
    let mut bytes = vec![0u8; n_bits.div_ceil(8)];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::format("bitmask", "truncated bitmask payload"))?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format("payload", "trailing bytes after bitmask"));
    }
    for idx in n_bits..bytes.len() * 8 {
        if bytes[idx / 8] & (1 << (idx % 8)) != 0 {
            return Err(Error::format("bitmask", "nonzero padding bits"));
        }
    }
    let entries: Vec<i8> = (0..n_bits)
        .map(|idx| if bytes[idx / 8] & (1 << (idx % 8)) != 0 { 1 } else { -1 })
        .collect();
    AssignmentMatrix::from_entries(entries, layout)
}
