//! Horizontal segmentation of an energy image into body-part strips.
//!
//! The energy image is cut into K horizontal strips of near-equal
//! height so different body regions (head, torso, legs) are described
//! independently. When the height is not divisible by K, the remainder
//! is absorbed one row at a time by the topmost strips: the first
//! `height % K` strips are one row taller than the rest.

use ndarray::{s, Array2};

use crate::energy::ActiveEnergyImage;
use crate::error::{Error, Result};

/// An energy image split into K horizontal strips.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedAei {
    segments: Vec<Array2<f64>>,
    row_ranges: Vec<(usize, usize)>,
    width: usize,
}

impl SegmentedAei {
    /// Number of strips K.
    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Strip rasters, top to bottom.
    pub fn segments(&self) -> &[Array2<f64>] {
        &self.segments
    }

    /// Half-open row range `[start, end)` of each strip in the source image.
    pub fn row_ranges(&self) -> &[(usize, usize)] {
        &self.row_ranges
    }

    pub fn width(&self) -> usize {
        self.width
    }
}

/// Computes the balanced strip heights for an image of `height` rows
/// split into `k` strips: the first `height % k` strips get
/// `ceil(height / k)` rows, the rest `floor(height / k)`.
pub fn strip_heights(height: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > height {
        return Err(Error::InvalidSegmentCount { k, height });
    }
    let base = height / k;
    let extra = height % k;
    Ok((0..k).map(|i| base + usize::from(i < extra)).collect())
}

/// Splits an active energy image into K horizontal strips, top to bottom.
pub fn segment_aei(aei: &ActiveEnergyImage, k: usize) -> Result<SegmentedAei> {
    let heights = strip_heights(aei.height(), k)?;
    let mut segments = Vec::with_capacity(k);
    let mut row_ranges = Vec::with_capacity(k);
    let mut start = 0;
    for h in heights {
        let end = start + h;
        segments.push(aei.values().slice(s![start..end, ..]).to_owned());
        row_ranges.push((start, end));
        start = end;
    }
    Ok(SegmentedAei {
        segments,
        row_ranges,
        width: aei.width(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::active_energy_image;
    use crate::silhouette::{GaitSequence, SilhouetteFrame};
    use ndarray::Array2;

    fn aei_with_height(height: usize) -> ActiveEnergyImage {
        let mut a = Array2::<u8>::zeros((height, 4));
        let mut b = Array2::<u8>::zeros((height, 4));
        a[[0, 0]] = 1;
        b[[height - 1, 3]] = 1;
        let frames = vec![
            SilhouetteFrame::from_pixels(a).unwrap(),
            SilhouetteFrame::from_pixels(b).unwrap(),
        ];
        active_energy_image(&GaitSequence::new("s", "q", frames).unwrap())
    }

    #[test]
    fn exact_division_gives_equal_strips() {
        assert_eq!(strip_heights(128, 4).unwrap(), vec![32; 4]);
    }

    #[test]
    fn remainder_goes_to_topmost_strips() {
        // 128 = 6*21 + 2: first two strips get 22 rows.
        assert_eq!(strip_heights(128, 6).unwrap(), vec![22, 22, 21, 21, 21, 21]);
    }

    #[test]
    fn default_strip_count_on_standard_height() {
        // 128 = 23*5 + 13: thirteen 6-row strips, then ten 5-row strips.
        let h = strip_heights(128, 23).unwrap();
        assert_eq!(&h[..13], &[6; 13]);
        assert_eq!(&h[13..], &[5; 10]);
        assert_eq!(h.iter().sum::<usize>(), 128);
    }

    #[test]
    fn single_strip_is_whole_image() {
        let aei = aei_with_height(16);
        let seg = segment_aei(&aei, 1).unwrap();
        assert_eq!(seg.segment_count(), 1);
        assert_eq!(seg.segments()[0], *aei.values());
        assert_eq!(seg.row_ranges(), &[(0, 16)]);
    }

    #[test]
    fn per_pixel_strips_when_k_equals_height() {
        let aei = aei_with_height(8);
        let seg = segment_aei(&aei, 8).unwrap();
        assert_eq!(seg.segment_count(), 8);
        assert!(seg.segments().iter().all(|s| s.dim() == (1, 4)));
    }

    #[test]
    fn rejects_zero_and_oversized_k() {
        let aei = aei_with_height(8);
        assert!(matches!(
            segment_aei(&aei, 0),
            Err(Error::InvalidSegmentCount { .. })
        ));
        assert!(matches!(
            segment_aei(&aei, 9),
            Err(Error::InvalidSegmentCount { .. })
        ));
    }

    #[test]
    fn strips_tile_the_image_without_overlap() {
        let aei = aei_with_height(37);
        let seg = segment_aei(&aei, 5).unwrap();
        let mut expect_start = 0;
        for (i, &(start, end)) in seg.row_ranges().iter().enumerate() {
            assert_eq!(start, expect_start, "strip {i} start");
            assert!(end > start);
            expect_start = end;
        }
        assert_eq!(expect_start, 37);
        // Earlier strips are never shorter than later ones.
        let hs: Vec<_> = seg.row_ranges().iter().map(|(s, e)| e - s).collect();
        assert!(hs.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn segment_contents_match_source_rows() {
        let aei = aei_with_height(10);
        let seg = segment_aei(&aei, 3).unwrap();
        for (strip, &(start, end)) in seg.segments().iter().zip(seg.row_ranges()) {
            assert_eq!(strip, &aei.values().slice(s![start..end, ..]).to_owned());
        }
    }
}
