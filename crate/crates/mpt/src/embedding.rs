//! Embedding-batch primitives: L2 normalization and the three cosine
//! similarity matrices (image-text, image-image, text-text) of a batch.
//!
//! Feature storage is f32 (matching the on-disk format); similarity values
//! are computed into f64 matrices. Dot products accumulate in f32 or f64
//! per [`Accumulation`]; f64 is the default and what the test suite pins.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Row-major dense batch of feature vectors, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "embedding matrix must be at least 1x1, got {rows}x{dim}"
            )));
        }
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch(format!(
                "embedding matrix {}x{} needs {} values, got {}",
                rows,
                dim,
                rows * dim,
                data.len()
            )));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let r = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch("ragged embedding rows".into()));
        }
        Self::new(r, d, rows.iter().flatten().copied().collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range ({} rows)",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.dim, data)
    }

    /// Widens to an f64 [`Matrix`] (lossless).
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_vec(
            self.rows,
            self.dim,
            self.data.iter().map(|&v| v as f64).collect(),
        )
        .expect("shape is valid by construction")
    }
}

/// Accumulator precision for dot products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// Sum in f32 (matches the storage precision).
    Single,
    /// Sum in f64: tightens tolerances, used throughout the tests.
    #[default]
    Double,
}

#[inline]
fn dot(a: &[f32], b: &[f32], acc: Accumulation) -> f64 {
    match acc {
        Accumulation::Single => {
            let mut s = 0.0f32;
            for k in 0..a.len() {
                s += a[k] * b[k];
            }
            s as f64
        }
        Accumulation::Double => {
            let mut s = 0.0f64;
            for k in 0..a.len() {
                s += a[k] as f64 * b[k] as f64;
            }
            s
        }
    }
}

/// Result of [`l2_normalize`]: the normalized matrix plus the indices of any
/// zero rows, which are passed through unchanged rather than rejected
/// (ingestion pipelines may emit padding rows; callers decide how loud to be).
#[derive(Debug, Clone)]
pub struct Normalized {
    pub matrix: EmbeddingMatrix,
    pub zero_rows: Vec<usize>,
}

/// Divides each row by its Euclidean norm. Zero rows are left unchanged and
/// reported in [`Normalized::zero_rows`]; no error is raised for them.
pub fn l2_normalize(m: &EmbeddingMatrix) -> Normalized {
    let mut data = Vec::with_capacity(m.data.len());
    let mut zero_rows = Vec::new();
    for i in 0..m.rows {
        let row = m.row(i);
        let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_rows.push(i);
            data.extend_from_slice(row);
        } else {
            data.extend(row.iter().map(|&v| ((v as f64) / norm) as f32));
        }
    }
    Normalized {
        matrix: EmbeddingMatrix::new(m.rows, m.dim, data).expect("shape preserved"),
        zero_rows,
    }
}

/// The three cosine-similarity matrices of a batch. Before expansion
/// `s_it` is N_img×N_txt while `s_ii`/`s_tt` are square; after the
/// k-caption expansion all three share the N_img×N_txt shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTriple {
    pub s_it: Matrix,
    pub s_ii: Matrix,
    pub s_tt: Matrix,
    pub expanded: bool,
}

/// Pairwise cosine similarities between the rows of two batches
/// (rows must already be L2-normalized for the dot to be a cosine).
pub fn cross_similarity(a: &EmbeddingMatrix, b: &EmbeddingMatrix, acc: Accumulation) -> Result<Matrix> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "feature dims differ: {} vs {}",
            a.dim, b.dim
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        for j in 0..b.rows {
            out.set(i, j, dot(a.row(i), b.row(j), acc));
        }
    }
    Ok(out)
}

/// Builds `s_it = images·textsᵀ`, `s_ii = images·imagesᵀ`,
/// `s_tt = texts·textsᵀ` with f64 accumulation. Inputs must share the
/// feature dimension and be L2-normalized.
pub fn similarity_triple(images: &EmbeddingMatrix, texts: &EmbeddingMatrix) -> Result<SimilarityTriple> {
    similarity_triple_with(images, texts, Accumulation::Double)
}

/// [`similarity_triple`] with an explicit accumulator precision.
pub fn similarity_triple_with(
    images: &EmbeddingMatrix,
    texts: &EmbeddingMatrix,
    acc: Accumulation,
) -> Result<SimilarityTriple> {
    Ok(SimilarityTriple {
        s_it: cross_similarity(images, texts, acc)?,
        s_ii: cross_similarity(images, images, acc)?,
        s_tt: cross_similarity(texts, texts, acc)?,
        expanded: false,
    })
}
