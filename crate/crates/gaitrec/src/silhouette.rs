//! Silhouette frame loading, binarization and size normalization.
//!
//! A silhouette frame is a binary raster: 1 marks a foreground (body)
//! pixel, 0 marks background. Sequences are directories of grayscale
//! PGM or PNG frames whose filenames sort lexicographically in temporal
//! order (zero-padded numbering).

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};
use ndarray::Array2;

use crate::error::{Error, Result};

/// Default binarization threshold as a fraction of full scale.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Minimum number of frames for a usable sequence: the energy
/// representation is built from consecutive-frame differences.
pub const MIN_FRAMES: usize = 2;

/// One binary silhouette frame. Pixels are stored row-major as
/// `[row, column]` with values restricted to {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SilhouetteFrame {
    pixels: Array2<u8>,
}

impl SilhouetteFrame {
    /// Wraps a raster, validating that it is non-empty and strictly binary.
    pub fn from_pixels(pixels: Array2<u8>) -> Result<Self> {
        let (h, w) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::EmptyImage);
        }
        if let Some(&bad) = pixels.iter().find(|&&v| v > 1) {
            return Err(Error::NonBinaryPixel(bad));
        }
        Ok(SilhouetteFrame { pixels })
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }

    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn pixels(&self) -> &Array2<u8> {
        &self.pixels
    }

    /// Number of foreground pixels.
    pub fn mass(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == 1).count()
    }
}

/// A temporally ordered silhouette sequence with uniform frame size.
#[derive(Debug, Clone)]
pub struct GaitSequence {
    subject_id: String,
    sequence_id: String,
    frames: Vec<SilhouetteFrame>,
}

impl GaitSequence {
    /// Builds a sequence, validating frame count and size consistency.
    pub fn new(
        subject_id: impl Into<String>,
        sequence_id: impl Into<String>,
        frames: Vec<SilhouetteFrame>,
    ) -> Result<Self> {
        if frames.len() < MIN_FRAMES {
            return Err(Error::SequenceTooShort {
                path: Default::default(),
                found: frames.len(),
                needed: MIN_FRAMES,
            });
        }
        let (w, h) = (frames[0].width(), frames[0].height());
        for f in &frames[1..] {
            if f.width() != w || f.height() != h {
                return Err(Error::FrameSizeMismatch {
                    width: w,
                    height: h,
                    found_width: f.width(),
                    found_height: f.height(),
                });
            }
        }
        Ok(GaitSequence {
            subject_id: subject_id.into(),
            sequence_id: sequence_id.into(),
            frames,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn sequence_id(&self) -> &str {
        &self.sequence_id
    }

    pub fn frames(&self) -> &[SilhouetteFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }
}

///// Binarizes a grayscale image: a pixel becomes foreground iff its gray
/// value strictly exceeds `threshold_fraction` of full scale (255).
///
/// With the default threshold 0.5 the cutoff is 127.5, so gray 128 maps
/// to 1 and gray 127 maps to 0.
pub fn binarize(gray: &GrayImage, threshold_fraction: f64) -> Result<SilhouetteFrame> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::InvalidThreshold(threshold_fraction));
    }
    let (w, h) = gray.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    let cutoff = threshold_fraction * 255.0;
    let mut pixels = Array2::<u8>::zeros((h as usize, w as usize));
    for y in 0..h {
        for x in 0..w {
            if f64::from(gray.get_pixel(x, y).0[0]) > cutoff {
                pixels[[y as usize, x as usize]] = 1;
            }
        }
    }
    SilhouetteFrame::from_pixels(pixels)
}

/// Nearest-neighbor resize of a binary frame. Output stays strictly
/// binary: destination pixel (i, j) copies source pixel
/// (floor(i*src_h/dst_h), floor(j*src_w/dst_w)).
pub fn resize_binary(
    frame: &SilhouetteFrame,
    target_width: usize,
    target_height: usize,
) -> Result<SilhouetteFrame> {
    if target_width == 0 || target_height == 0 {
        return Err(Error::InvalidResizeTarget {
            width: target_width,
            height: target_height,
        });
    }
    let (src_h, src_w) = (frame.height(), frame.width());
    if src_h == target_height && src_w == target_width {
        return Ok(frame.clone());
    }
    let mut out = Array2::<u8>::zeros((target_height, target_width));
    for i in 0..target_height {
        let sy = i * src_h / target_height;
        for j in 0..target_width {
            let sx = j * src_w / target_width;
            out[[i, j]] = frame.pixels()[[sy, sx]];
        }
    }
    SilhouetteFrame::from_pixels(out)
}

/// Loads a silhouette sequence from a directory of PGM/PNG frames with
/// the default binarization threshold. Frames are binarized at native
/// size, then normalized to `target_width` x `target_height`.
///
/// The sequence id is the directory name; the subject id is the parent
/// directory name (empty when the directory has no named parent).
pub fn load_sequence(
    dir: &Path,
    target_width: usize,
    target_height: usize,
) -> Result<GaitSequence> {
    load_sequence_with_threshold(dir, target_width, target_height, DEFAULT_THRESHOLD)
}

/// [`load_sequence`] with an explicit binarization threshold.
pub fn load_sequence_with_threshold(
    dir: &Path,
    target_width: usize,
    target_height: usize,
    threshold_fraction: f64,
) -> Result<GaitSequence> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();

    if paths.len() < MIN_FRAMES {
        return Err(Error::SequenceTooShort {
            path: dir.to_path_buf(),
            found: paths.len(),
            needed: MIN_FRAMES,
        });
    }

    let mut frames = Vec::with_capacity(paths.len());
    for path in &paths {
        let img = image::open(path).map_err(|e| Error::ImageDecode {
            path: path.clone(),
            source: e,
        })?;
        let frame = binarize(&img.to_luma8(), threshold_fraction)?;
        frames.push(resize_binary(&frame, target_width, target_height)?);
    }

    let sequence_id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let subject_id = dir
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    GaitSequence::new(subject_id, sequence_id, frames)
}

/// Writes an 8-bit grayscale raster (`[row, column]`) as binary PGM (P5).
pub fn write_pgm(path: &Path, pixels: &Array2<u8>) -> Result<()> {
    let (h, w) = pixels.dim();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
    let bytes: Vec<u8> = pixels.iter().copied().collect();
    encoder
        .write_image(&bytes, w as u32, h as u32, ExtendedColorType::L8)
        .map_err(|e| Error::ImageEncode {
            path: path.to_path_buf(),
            source: e,
        })
}
