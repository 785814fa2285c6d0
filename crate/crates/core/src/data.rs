//! Shared domain types and their shape/normalization contracts.
//!
//! Layout conventions: images and per-pixel fields are `[H, W, C]` arrays,
//! label maps are `[H, W]`. Classes are 0-indexed with class 0 reserved for
//! background/normal tissue. Filtered or padded label pixels carry the
//! [`IGNORE`] sentinel, which lives outside the valid class range.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

/// Sentinel marking pixels without a usable label (filtered pseudo-labels,
/// zero-padding introduced by augmentation). Never a valid class index.
pub const IGNORE: u8 = u8::MAX;

/// Tolerance for per-pixel probability normalization checks.
pub const PROB_SUM_TOL: f32 = 1e-5;

/// Minimum spatial extent of an [`Image`].
pub const MIN_IMAGE_SIDE: usize = 8;

/// An input image: `[H, W, D]`, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pixels: Array3<f32>,
}

impl Image {
    pub fn new(pixels: Array3<f32>) -> Result<Self> {
        let (h, w, _d) = pixels.dim();
        if h < MIN_IMAGE_SIDE || w < MIN_IMAGE_SIDE {
            return Err(Error::domain(
                "Image",
                format!("spatial size {h}x{w} below minimum {MIN_IMAGE_SIDE}"),
            ));
        }
        for &v in pixels.iter() {
            if !v.is_finite() {
                return Err(Error::numeric("Image::new"));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain("Image", format!("pixel value {v} outside [0, 1]")));
            }
        }
        Ok(Image { pixels })
    }

    /// Construct without validation. Caller guarantees the invariants.
    pub(crate) fn from_array_unchecked(pixels: Array3<f32>) -> Self {
        Image { pixels }
    }

    pub fn pixels(&self) -> &Array3<f32> {
        &self.pixels
    }

    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }

    pub fn channels(&self) -> usize {
        self.pixels.dim().2
    }

    pub fn into_inner(self) -> Array3<f32> {
        self.pixels
    }
}

/// A ground-truth label map: `[H, W]` over `{0..K-1} ∪ {IGNORE}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    labels: Array2<u8>,
}

impl Mask {
    pub fn new(labels: Array2<u8>) -> Self {
        Mask { labels }
    }

    pub fn labels(&self) -> &Array2<u8> {
        &self.labels
    }

    pub fn height(&self) -> usize {
        self.labels.dim().0
    }

    pub fn width(&self) -> usize {
        self.labels.dim().1
    }

    /// Every non-IGNORE value must be a valid class index.
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        for &v in self.labels.iter() {
            if v != IGNORE && (v as usize) >= num_classes {
                return Err(Error::LabelOutOfRange { value: v, num_classes });
            }
        }
        Ok(())
    }

    pub fn into_inner(self) -> Array2<u8> {
        self.labels
    }
}

/// Per-pixel class probabilities: `[H, W, K]`, each pixel summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMap {
    probs: Array3<f32>,
}

impl ProbMap {
    pub fn new(probs: Array3<f32>) -> Result<Self> {
        let map = ProbMap { probs };
        map.validate()?;
        Ok(map)
    }

    pub(crate) fn from_array_unchecked(probs: Array3<f32>) -> Self {
        ProbMap { probs }
    }

    pub fn validate(&self) -> Result<()> {
        for px in self.probs.rows() {
            let mut sum = 0.0f32;
            for &p in px.iter() {
                if !p.is_finite() {
                    return Err(Error::numeric("ProbMap"));
                }
                if p < 0.0 {
                    return Err(Error::domain("ProbMap", format!("negative probability {p}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(Error::domain("ProbMap", format!("pixel probabilities sum to {sum}")));
            }
        }
        Ok(())
    }

    pub fn probs(&self) -> &Array3<f32> {
        &self.probs
    }

    pub fn height(&self) -> usize {
        self.probs.dim().0
    }

    pub fn width(&self) -> usize {
        self.probs.dim().1
    }

    pub fn num_classes(&self) -> usize {
        self.probs.dim().2
    }

    /// Per-pixel `(argmax class, max probability)`. Ties break toward the
    /// lowest class index.
    pub fn argmax_conf(&self) -> (Array2<u8>, Array2<f32>) {
        let (h, w, k) = self.probs.dim();
        let mut cls = Array2::<u8>::zeros((h, w));
        let mut conf = Array2::<f32>::zeros((h, w));
        for i in 0..h {
            for j in 0..w {
                let mut best = 0usize;
                let mut best_p = self.probs[[i, j, 0]];
                for c in 1..k {
                    let p = self.probs[[i, j, c]];
                    if p > best_p {
                        best_p = p;
                        best = c;
                    }
                }
                cls[[i, j]] = best as u8;
                conf[[i, j]] = best_p;
            }
        }
        (cls, conf)
    }
}

/// Hard pseudo-labels with IGNORE marking filtered pixels: `[H, W]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoLabelMap {
    labels: Array2<u8>,
}

impl PseudoLabelMap {
    pub fn new(labels: Array2<u8>) -> Self {
        PseudoLabelMap { labels }
    }

    pub fn labels(&self) -> &Array2<u8> {
        &self.labels
    }

    pub fn height(&self) -> usize {
        self.labels.dim().0
    }

    pub fn width(&self) -> usize {
        self.labels.dim().1
    }

    /// Number of pixels that survived filtering.
    pub fn kept(&self) -> usize {
        self.labels.iter().filter(|&&v| v != IGNORE).count()
    }

    pub fn into_inner(self) -> Array2<u8> {
        self.labels
    }
}

/// Penultimate-layer network features: `[h_f, w_f, D_f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    features: Array3<f32>,
}

impl FeatureMap {
    pub fn new(features: Array3<f32>) -> Self {
        FeatureMap { features }
    }

    pub fn features(&self) -> &Array3<f32> {
        &self.features
    }

    pub fn height(&self) -> usize {
        self.features.dim().0
    }

    pub fn width(&self) -> usize {
        self.features.dim().1
    }

    pub fn channels(&self) -> usize {
        self.features.dim().2
    }
}

/// Per-pixel unit-norm feature embeddings in projection space: `[H, W, D_e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMap {
    embeddings: Array3<f32>,
}

impl EmbeddingMap {
    pub fn new(embeddings: Array3<f32>) -> Self {
        EmbeddingMap { embeddings }
    }

    pub fn embeddings(&self) -> &Array3<f32> {
        &self.embeddings
    }

    pub fn height(&self) -> usize {
        self.embeddings.dim().0
    }

    pub fn width(&self) -> usize {
        self.embeddings.dim().1
    }

    pub fn dim(&self) -> usize {
        self.embeddings.dim().2
    }

    /// Embedding vector at a row-major pixel index.
    pub fn at_index(&self, pixel_index: usize) -> ndarray::ArrayView1<'_, f32> {
        let w = self.width();
        let (i, j) = (pixel_index / w, pixel_index % w);
        self.embeddings.slice(ndarray::s![i, j, ..])
    }
}

/// Per-class mean embeddings with presence flags. A class is absent when no
/// pixel contributed to it in the batch (or its mean degenerated to zero).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassEmbeddings {
    pub vectors: Array2<f32>,
    pub present: Vec<bool>,
}

impl ClassEmbeddings {
    pub fn num_classes(&self) -> usize {
        self.present.len()
    }

    pub fn embedding_dim(&self) -> usize {
        self.vectors.dim().1
    }

    pub fn is_present(&self, class_id: usize) -> bool {
        self.present.get(class_id).copied().unwrap_or(false)
    }

    pub fn vector(&self, class_id: usize) -> Option<ndarray::ArrayView1<'_, f32>> {
        if self.is_present(class_id) {
            Some(self.vectors.row(class_id))
        } else {
            None
        }
    }
}

/// One training batch: labeled image/mask pairs plus unlabeled images.
#[derive(Clone, Debug)]
pub struct Batch {
    pub labeled: Vec<(Image, Mask)>,
    pub unlabeled: Vec<Image>,
}

impl Batch {
    pub fn num_labeled(&self) -> usize {
        self.labeled.len()
    }

    pub fn num_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }
}

/// Check every batch invariant: at least one labeled pair, consistent
/// image shapes, mask/image pairing, and labels within `{0..K-1} ∪ {IGNORE}`.
pub fn validate(batch: &Batch, num_classes: usize) -> Result<()> {
    if batch.labeled.is_empty() {
        return Err(Error::domain("Batch", "at least one labeled sample required"));
    }
    let (h, w, d) = batch.labeled[0].0.pixels().dim();
    for (idx, (img, mask)) in batch.labeled.iter().enumerate() {
        let dim = img.pixels().dim();
        if dim != (h, w, d) {
            return Err(Error::shape(
                format!("labeled image {idx}"),
                format!("{h}x{w}x{d}"),
                format!("{}x{}x{}", dim.0, dim.1, dim.2),
            ));
        }
        if mask.labels().dim() != (h, w) {
            return Err(Error::shape(
                format!("mask {idx}"),
                format!("{h}x{w}"),
                format!("{}x{}", mask.labels().dim().0, mask.labels().dim().1),
            ));
        }
        mask.validate(num_classes)?;
    }
    for (idx, img) in batch.unlabeled.iter().enumerate() {
        let dim = img.pixels().dim();
        if dim != (h, w, d) {
            return Err(Error::shape(
                format!("unlabeled image {idx}"),
                format!("{h}x{w}x{d}"),
                format!("{}x{}x{}", dim.0, dim.1, dim.2),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn zero_image(h: usize, w: usize) -> Image {
        Image::new(Array3::zeros((h, w, 3))).unwrap()
    }

    #[test]
    fn zero_image_and_zero_mask_accepted() {
        let batch = Batch {
            labeled: vec![(zero_image(16, 16), Mask::new(Array2::zeros((16, 16))))],
            unlabeled: vec![],
        };
        validate(&batch, 3).unwrap();
    }

    #[test]
    fn mask_value_k_is_domain_error() {
        let mut labels = Array2::<u8>::zeros((16, 16));
        labels[[0, 0]] = 3;
        let batch = Batch {
            labeled: vec![(zero_image(16, 16), Mask::new(labels))],
            unlabeled: vec![],
        };
        let err = validate(&batch, 3).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { value: 3, num_classes: 3 }));
    }

    #[test]
    fn ignore_sentinel_is_always_valid() {
        let mut labels = Array2::<u8>::zeros((16, 16));
        labels[[3, 4]] = IGNORE;
        Mask::new(labels).validate(2).unwrap();
    }

    #[test]
    fn mismatched_mask_shape_is_shape_error() {
        let batch = Batch {
            labeled: vec![(zero_image(32, 32), Mask::new(Array2::zeros((16, 16))))],
            unlabeled: vec![],
        };
        let err = validate(&batch, 3).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn image_rejects_out_of_range_values() {
        let mut px = Array3::zeros((8, 8, 3));
        px[[0, 0, 0]] = 1.5;
        assert!(Image::new(px).is_err());
    }

    #[test]
    fn image_rejects_tiny_sizes() {
        assert!(Image::new(Array3::zeros((4, 8, 3))).is_err());
    }

    #[test]
    fn probmap_validates_normalization() {
        let mut probs = Array3::<f32>::zeros((2, 2, 3));
        probs.fill(1.0 / 3.0);
        ProbMap::new(probs.clone()).unwrap();
        probs[[0, 0, 0]] = 0.9;
        assert!(ProbMap::new(probs).is_err());
    }

    #[test]
    fn argmax_ties_break_low() {
        let mut probs = Array3::<f32>::zeros((1, 1, 3));
        probs.fill(1.0 / 3.0);
        let map = ProbMap::new(probs).unwrap();
        let (cls, conf) = map.argmax_conf();
        assert_eq!(cls[[0, 0]], 0);
        assert!((conf[[0, 0]] - 1.0 / 3.0).abs() < 1e-6);
    }
}
