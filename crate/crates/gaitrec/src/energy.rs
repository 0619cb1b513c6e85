//! Temporal energy representations of a gait cycle.
//!
//! The active energy image condenses a silhouette sequence into one
//! real-valued raster that emphasizes moving body parts: it averages
//! per-pixel absolute differences of consecutive frames, seeding the
//! accumulation with the first frame itself so static shape still
//! contributes. The gait energy image is the plain per-pixel mean of
//! the silhouettes and is kept as a comparison baseline.

use ndarray::Array2;

use crate::silhouette::GaitSequence;

/// One element of the difference sequence: the first frame itself at
/// index 0, a per-pixel absolute difference of a consecutive frame
/// pair everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceImage {
    values: Array2<f64>,
}

impl DifferenceImage {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Sum of all pixels; a cheap motion-magnitude summary.
    pub fn mass(&self) -> f64 {
        self.values.sum()
    }
}

/// Active energy image: mean of the first frame and all consecutive
/// absolute frame differences. Values lie in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveEnergyImage {
    values: Array2<f64>,
    source_frame_count: usize,
}

impl ActiveEnergyImage {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.values.dim().1
    }

    pub fn height(&self) -> usize {
        self.values.dim().0
    }

    /// Number of frames in the source sequence.
    pub fn source_frame_count(&self) -> usize {
        self.source_frame_count
    }

    /// Renders the energy image to 8-bit gray (value * 255, rounded).
    pub fn to_gray(&self) -> Array2<u8> {
        self.values.mapv(|v| (v * 255.0).round() as u8)
    }
}

/// Gait energy image: per-pixel mean silhouette. Values lie in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaitEnergyImage {
    values: Array2<f64>,
}

impl GaitEnergyImage {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

fn frame_to_f64(frame: &crate::silhouette::SilhouetteFrame) -> Array2<f64> {
    frame.pixels().mapv(f64::from)
}

/// Difference sequence of an N-frame gait sequence: element 0 is
/// frame 0 itself, element j (1 <= j < N) is |frame_j - frame_{j-1}|.
/// Output length equals the frame count.
pub fn difference_images(seq: &GaitSequence) -> Vec<DifferenceImage> {
    let frames = seq.frames();
    let mut out = Vec::with_capacity(frames.len());
    out.push(DifferenceImage {
        values: frame_to_f64(&frames[0]),
    });
    out.extend(frames.windows(2).map(|pair| {
        let prev = frame_to_f64(&pair[0]);
        let next = frame_to_f64(&pair[1]);
        DifferenceImage {
            values: (&next - &prev).mapv(f64::abs),
        }
    }));
    out
}

/// Active energy image: the mean of the difference sequence,
///
/// A = (1/N) * (frame_0 + sum_{j=1}^{N-1} |frame_j - frame_{j-1}|)
pub fn active_energy_image(seq: &GaitSequence) -> ActiveEnergyImage {
    let n = seq.len();
    let mut diffs = difference_images(seq).into_iter();
    let mut acc = diffs
        .next()
        .expect("sequences hold at least two frames")
        .values;
    for diff in diffs {
        acc += &diff.values;
    }
    acc /= n as f64;
    ActiveEnergyImage {
        values: acc,
        source_frame_count: n,
    }
}

/// Gait energy image: per-pixel mean of all N silhouettes.
pub fn gait_energy_image(seq: &GaitSequence) -> GaitEnergyImage {
    let n = seq.len();
    let mut acc = frame_to_f64(&seq.frames()[0]);
    for frame in &seq.frames()[1..] {
        acc += &frame_to_f64(frame);
    }
    acc /= n as f64;
    GaitEnergyImage { values: acc }
}
