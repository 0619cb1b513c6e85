//! Distance computation, similarity-based matching weights and 1-NN
//! identification.
//!
//! A probe is compared to every enrolled sequence segment by segment.
//! Before summing per-segment distances into totals, a selection step
//! reweights the tensor: within each segment, sequences are selected
//! when their distance falls below the smallest per-person mean
//! distance for that segment, the selection is extended to every
//! sequence of any person with at least one selected sequence, and all
//! non-selected entries are replaced by the global maximum distance.
//! Segments that match somebody well therefore dominate the decision,
//! while segments that discriminate nobody degrade gracefully into a
//! constant offset.
//!
//! Degenerate strips: a strip missing on both sides contributes zero
//! distance; a strip missing on exactly one side is "pending" and
//! resolves to the global maximum during weighting.

use crate::error::{Error, Result};
use crate::gallery::{Gallery, WhitenedGallery};
use crate::moments::SegmentFeature;
use crate::silhouette::GaitSequence;
use crate::whitening::WhitenedFeature;

/// Distances between one probe and every gallery sequence, per strip.
/// Indexed `[person][sequence][segment]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTensor {
    values: Vec<Vec<Vec<f64>>>,
    pending: Vec<Vec<Vec<bool>>>,
    segment_count: usize,
}

impl DistanceTensor {
    /// Wraps raw distance values with no pending entries. Validates
    /// shape consistency, finiteness and nonnegativity.
    pub fn from_values(values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGallery);
        }
        let k = values
            .first()
            .and_then(|p| p.first())
            .map(|s| s.len())
            .unwrap_or(0);
        if k == 0 {
            return Err(Error::InvalidSegmentCount { k: 0, height: 0 });
        }
        for person in &values {
            if person.is_empty() {
                return Err(Error::EmptyGallery);
            }
            for seq in person {
                if seq.len() != k {
                    return Err(Error::DimensionMismatch {
                        probe: seq.len(),
                        gallery: k,
                    });
                }
                if seq.iter().any(|&d| !d.is_finite() || d < 0.0) {
                    return Err(Error::NonFiniteFeature);
                }
            }
        }
        let pending = values
            .iter()
            .map(|p| p.iter().map(|s| vec![false; s.len()]).collect())
            .collect();
        Ok(DistanceTensor {
            values,
            pending,
            segment_count: k,
        })
    }

    pub fn person_count(&self) -> usize {
        self.values.len()
    }

    pub fn sequence_count(&self, person: usize) -> usize {
        self.values[person].len()
    }

    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    pub fn value(&self, person: usize, sequence: usize, segment: usize) -> f64 {
        self.values[person][sequence][segment]
    }

    pub fn is_pending(&self, person: usize, sequence: usize, segment: usize) -> bool {
        self.pending[person][sequence][segment]
    }

    pub fn has_pending(&self) -> bool {
        self.pending
            .iter()
            .any(|p| p.iter().any(|s| s.iter().any(|&b| b)))
    }
}

/// Per-segment selection masks, indexed `[segment][person][sequence]`.
/// A true entry means the sequence kept its own distance in that
/// segment (its person was selected there).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMasks {
    masks: Vec<Vec<Vec<bool>>>,
}

impl SelectionMasks {
    pub fn segment(&self, k: usize) -> &[Vec<bool>] {
        &self.masks[k]
    }

    pub fn segment_count(&self) -> usize {
        self.masks.len()
    }

    pub fn is_selected(&self, k: usize, person: usize, sequence: usize) -> bool {
        self.masks[k][person][sequence]
    }
}

/// Euclidean distance between whitened features.
fn l2(a: &WhitenedFeature, b: &WhitenedFeature) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::DimensionMismatch {
            probe: a.values.len(),
            gallery: b.values.len(),
        });
    }
    let mut sum = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = x - y;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Builds the probe-to-gallery distance tensor. Strips degenerate on
/// both sides contribute distance zero; strips degenerate on exactly
/// one side are marked pending for the weighting step to resolve.
pub fn distance_tensor(
    probe: &[Option<WhitenedFeature>],
    gallery: &WhitenedGallery,
) -> Result<DistanceTensor> {
    if probe.len() != gallery.segment_count {
        return Err(Error::DimensionMismatch {
            probe: probe.len(),
            gallery: gallery.segment_count,
        });
    }
    if gallery.persons.is_empty() {
        return Err(Error::EmptyGallery);
    }
    let mut values = Vec::with_capacity(gallery.persons.len());
    let mut pending = Vec::with_capacity(gallery.persons.len());
    for person in &gallery.persons {
        let mut pvals = Vec::with_capacity(person.sequences.len());
        let mut ppend = Vec::with_capacity(person.sequences.len());
        for seq in &person.sequences {
            let mut svals = Vec::with_capacity(probe.len());
            let mut spend = Vec::with_capacity(probe.len());
            for (p, g) in probe.iter().zip(&seq.segments) {
                match (p, g) {
                    (Some(p), Some(g)) => {
                        svals.push(l2(p, g)?);
                        spend.push(false);
                    }
                    (None, None) => {
                        svals.push(0.0);
                        spend.push(false);
                    }
                    _ => {
                        svals.push(0.0);
                        spend.push(true);
                    }
                }
            }
            pvals.push(svals);
            ppend.push(spend);
        }
        values.push(pvals);
        pending.push(ppend);
    }
    Ok(DistanceTensor {
        values,
        pending,
        segment_count: probe.len(),
    })
}

/// Applies the similarity-based matching weights.
///
/// 1. The global maximum d_max is taken over all non-pending entries,
///    and pending entries resolve to d_max.
/// 2. Per segment k: each person's mean distance over its own
///    sequences is computed; the smallest of those means is the
///    selection threshold. Sequences strictly below the threshold are
///    selected, selection extends to all sequences of any person with
///    at least one selected sequence, and every non-selected entry is
///    replaced by d_max. Selected entries keep their original values.
///
/// Returns the weighted tensor (no pending entries) and the
/// per-segment selection masks. The operation is idempotent.
pub fn apply_matching_weights(tensor: &DistanceTensor) -> (DistanceTensor, SelectionMasks) {
    let n_persons = tensor.person_count();
    let k_total = tensor.segment_count();

    // Step 1: global maximum over non-pending entries.
    let mut d_max = 0.0f64;
    for (pvals, ppend) in tensor.values.iter().zip(&tensor.pending) {
        for (svals, spend) in pvals.iter().zip(ppend) {
            for (&v, &is_pending) in svals.iter().zip(spend) {
                if !is_pending && v > d_max {
                    d_max = v;
                }
            }
        }
    }

    // Resolve pending entries.
    let mut base = tensor.values.clone();
    for (pvals, ppend) in base.iter_mut().zip(&tensor.pending) {
        for (svals, spend) in pvals.iter_mut().zip(ppend) {
            for (v, &is_pending) in svals.iter_mut().zip(spend) {
                if is_pending {
                    *v = d_max;
                }
            }
        }
    }

    // Step 2: per-segment selection.
    let mut masks = vec![Vec::with_capacity(n_persons); k_total];
    let mut out = base.clone();
    for k in 0..k_total {
        // Per-person mean over its own sequences, then the smallest mean.
        let mut min_mean = f64::INFINITY;
        for person in &base {
            let mut sum = 0.0;
            for seq in person {
                sum += seq[k];
            }
            let mean = sum / person.len() as f64;
            if mean < min_mean {
                min_mean = mean;
            }
        }

        for (n, person) in base.iter().enumerate() {
            let person_selected = person.iter().any(|seq| seq[k] < min_mean);
            masks[k].push(vec![person_selected; person.len()]);
            if !person_selected {
                for (s, _) in person.iter().enumerate() {
                    out[n][s][k] = d_max;
                }
            }
        }
    }

    let pending = base
        .iter()
        .map(|p| p.iter().map(|s| vec![false; s.len()]).collect())
        .collect();
    (
        DistanceTensor {
            values: out,
            pending,
            segment_count: k_total,
        },
        SelectionMasks { masks },
    )
}

/// Sums the weighted tensor over segments into per-sequence totals,
/// indexed `[person][sequence]`.
pub fn total_distances(tensor: &DistanceTensor) -> Vec<Vec<f64>> {
    debug_assert!(
        !tensor.has_pending(),
        "totals require a weighted tensor with no pending entries"
    );
    tensor
        .values
        .iter()
        .map(|person| {
            person
                .iter()
                .map(|seq| {
                    let mut sum = 0.0;
                    for &d in seq {
                        sum += d;
                    }
                    sum
                })
                .collect()
        })
        .collect()
}

/// Nearest-neighbor decision: the (person, sequence) indices of the
/// smallest total. Ties break to the lowest person index, then the
/// lowest sequence index.
pub fn classify(totals: &[Vec<f64>]) -> Result<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (n, person) in totals.iter().enumerate() {
        for (s, &d) in person.iter().enumerate() {
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((n, s, d));
            }
        }
    }
    best.map(|(n, s, _)| (n, s)).ok_or(Error::EmptyGallery)
}

/// One gallery sequence with its total distance to the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMatch {
    pub person_id: String,
    pub sequence_id: String,
    pub distance: f64,
}

/// Outcome of identifying one probe against a gallery.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// Person id of the nearest gallery sequence.
    pub predicted_person: String,
    /// Sequence id of the nearest gallery sequence.
    pub predicted_sequence: String,
    /// Indices of the winning (person, sequence) in gallery order.
    pub predicted_indices: (usize, usize),
    /// Weighted per-sequence totals in gallery order.
    pub total_distances: Vec<Vec<f64>>,
    /// Per-segment selection masks from the weighting step.
    pub selection: SelectionMasks,
    /// All gallery sequences sorted by ascending total distance
    /// (ties in gallery order).
    pub ranked: Vec<RankedMatch>,
}

/// Identifies a probe sequence against a finalized gallery: extracts
/// its features, whitens them with the gallery's models and runs the
/// weighted nearest-neighbor decision.
pub fn identify(gallery: &Gallery, probe: &GaitSequence) -> Result<MatchResult> {
    if probe.width() != gallery.config().width || probe.height() != gallery.config().height {
        return Err(Error::FrameSizeMismatch {
            width: gallery.config().width,
            height: gallery.config().height,
            found_width: probe.width(),
            found_height: probe.height(),
        });
    }
    let aei = crate::energy::active_energy_image(probe);
    let seg = crate::segmentation::segment_aei(&aei, gallery.config().segment_count)?;
    let features = crate::moments::features_from_segmented(&seg);
    identify_features(gallery, &features)
}

/// [`identify`] on precomputed per-strip probe features.
pub fn identify_features(gallery: &Gallery, features: &[SegmentFeature]) -> Result<MatchResult> {
    let probe = gallery.whiten_probe(features)?;
    let whitened = gallery.whitened()?;
    let tensor = distance_tensor(&probe, &whitened)?;
    let (weighted, selection) = apply_matching_weights(&tensor);
    let totals = total_distances(&weighted);
    let (n, s) = classify(&totals)?;

    let mut ranked = Vec::new();
    for (pi, person) in whitened.persons.iter().enumerate() {
        for (si, seq) in person.sequences.iter().enumerate() {
            ranked.push(RankedMatch {
                person_id: person.person_id.clone(),
                sequence_id: seq.sequence_id.clone(),
                distance: totals[pi][si],
            });
        }
    }
    ranked.sort_by(|a, b| a.distance.partial_cmp(&b.distance).expect("finite totals"));

    Ok(MatchResult {
        predicted_person: whitened.persons[n].person_id.clone(),
        predicted_sequence: whitened.persons[n].sequences[s].sequence_id.clone(),
        predicted_indices: (n, s),
        total_distances: totals,
        selection,
        ranked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn tensor(values: Vec<Vec<Vec<f64>>>) -> DistanceTensor {
        DistanceTensor::from_values(values).unwrap()
    }

    #[test]
    fn worked_two_person_example() {
        // One segment, two persons with two sequences each.
        // Person means: 2 and 5; threshold 2; only distance 1 selects,
        // so person 0 keeps (1, 3) and person 1 collapses to d_max = 6.
        let t = tensor(vec![vec![vec![1.0], vec![3.0]], vec![vec![4.0], vec![6.0]]]);
        let (weighted, masks) = apply_matching_weights(&t);
        assert_eq!(weighted.value(0, 0, 0), 1.0);
        assert_eq!(weighted.value(0, 1, 0), 3.0);
        assert_eq!(weighted.value(1, 0, 0), 6.0);
        assert_eq!(weighted.value(1, 1, 0), 6.0);
        assert!(masks.is_selected(0, 0, 0));
        assert!(masks.is_selected(0, 0, 1));
        assert!(!masks.is_selected(0, 1, 0));
        assert!(!masks.is_selected(0, 1, 1));

        let totals = total_distances(&weighted);
        assert_eq!(totals, vec![vec![1.0, 3.0], vec![6.0, 6.0]]);
        assert_eq!(classify(&totals).unwrap(), (0, 0));
    }

    #[test]
    fn uniform_tensor_is_unchanged() {
        // Every distance equal: no strict improvement below the mean,
        // nothing is selected, every entry is replaced by d_max which
        // equals the original value.
        let t = tensor(vec![
            vec![vec![2.5, 2.5], vec![2.5, 2.5]],
            vec![vec![2.5, 2.5]],
        ]);
        let (weighted, masks) = apply_matching_weights(&t);
        for n in 0..2 {
            for s in 0..weighted.sequence_count(n) {
                for k in 0..2 {
                    assert_eq!(weighted.value(n, s, k), 2.5);
                    assert!(!masks.is_selected(k, n, s));
                }
            }
        }
    }

    #[test]
    fn selection_extends_to_all_sequences_of_a_person() {
        // Person 0 has one excellent and one poor sequence; the poor
        // one must keep its value because its sibling was selected.
        let t = tensor(vec![vec![vec![0.1], vec![9.0]], vec![vec![5.0], vec![5.0]]]);
        let (weighted, masks) = apply_matching_weights(&t);
        // person means: 4.55 and 5.0 -> threshold 4.55; only 0.1 selects.
        assert!(masks.is_selected(0, 0, 0));
        assert!(masks.is_selected(0, 0, 1));
        assert_eq!(weighted.value(0, 0, 0), 0.1);
        assert_eq!(weighted.value(0, 1, 0), 9.0);
        assert_eq!(weighted.value(1, 0, 0), 9.0);
        assert_eq!(weighted.value(1, 1, 0), 9.0);
    }

    #[test]
    fn pending_entries_resolve_to_global_max() {
        let mut t = tensor(vec![vec![vec![1.0, 2.0]], vec![vec![3.0, 4.0]]]);
        t.pending[0][0][1] = true; // pretend strip 1 was half-degenerate
        let (weighted, _) = apply_matching_weights(&t);
        assert!(!weighted.has_pending());
        // d_max over non-pending entries is 4.
        // segment 1: person means are (4, 4) -> nothing below, all 4.
        assert_eq!(weighted.value(0, 0, 1), 4.0);
    }

    #[test]
    fn weighting_is_idempotent() {
        let t = tensor(vec![
            vec![vec![1.0, 7.0], vec![3.0, 2.0]],
            vec![vec![4.0, 1.5], vec![6.0, 8.0]],
            vec![vec![2.0, 2.0]],
        ]);
        let (w1, m1) = apply_matching_weights(&t);
        let (w2, m2) = apply_matching_weights(&w1);
        assert_eq!(w1, w2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn classify_breaks_ties_to_lowest_indices() {
        let totals = vec![vec![5.0, 2.0], vec![2.0, 7.0]];
        assert_eq!(classify(&totals).unwrap(), (0, 1));
        let totals = vec![vec![2.0, 2.0]];
        assert_eq!(classify(&totals).unwrap(), (0, 0));
    }

    #[test]
    fn classify_rejects_empty_totals() {
        assert!(matches!(classify(&[]), Err(Error::EmptyGallery)));
    }

    #[test]
    fn from_values_validates_shape_and_content() {
        assert!(matches!(
            DistanceTensor::from_values(vec![]),
            Err(Error::EmptyGallery)
        ));
        assert!(matches!(
            DistanceTensor::from_values(vec![vec![vec![1.0]], vec![vec![1.0, 2.0]]]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            DistanceTensor::from_values(vec![vec![vec![-1.0]]]),
            Err(Error::NonFiniteFeature)
        ));
        assert!(matches!(
            DistanceTensor::from_values(vec![vec![vec![f64::NAN]]]),
            Err(Error::NonFiniteFeature)
        ));
    }

    #[test]
    fn degenerate_pairs_contribute_zero_distance() {
        use crate::gallery::{WhitenedGallerySequence, WhitenedPerson};

        let gallery = WhitenedGallery {
            segment_count: 2,
            persons: vec![WhitenedPerson {
                person_id: "a".into(),
                sequences: vec![WhitenedGallerySequence {
                    sequence_id: "1".into(),
                    segments: vec![
                        None,
                        Some(WhitenedFeature {
                            segment_index: 1,
                            values: vec![3.0, 0.0],
                        }),
                    ],
                }],
            }],
        };
        // Probe degenerate in strip 0 as well: both-none -> 0.
        let probe = vec![
            None,
            Some(WhitenedFeature {
                segment_index: 1,
                values: vec![0.0, 4.0],
            }),
        ];
        let t = distance_tensor(&probe, &gallery).unwrap();
        assert_eq!(t.value(0, 0, 0), 0.0);
        assert!(!t.is_pending(0, 0, 0));
        assert_relative_eq!(t.value(0, 0, 1), 5.0, max_relative = 1e-15);

        // Probe present in strip 0 while gallery is degenerate: pending.
        let probe = vec![
            Some(WhitenedFeature {
                segment_index: 0,
                values: vec![1.0, 1.0],
            }),
            Some(WhitenedFeature {
                segment_index: 1,
                values: vec![0.0, 4.0],
            }),
        ];
        let t = distance_tensor(&probe, &gallery).unwrap();
        assert!(t.is_pending(0, 0, 0));
    }

    #[test]
    fn mismatched_whitened_lengths_are_rejected() {
        use crate::gallery::{WhitenedGallerySequence, WhitenedPerson};

        let gallery = WhitenedGallery {
            segment_count: 1,
            persons: vec![WhitenedPerson {
                person_id: "a".into(),
                sequences: vec![WhitenedGallerySequence {
                    sequence_id: "1".into(),
                    segments: vec![Some(WhitenedFeature {
                        segment_index: 0,
                        values: vec![1.0, 2.0, 3.0],
                    })],
                }],
            }],
        };
        let probe = vec![Some(WhitenedFeature {
            segment_index: 0,
            values: vec![1.0, 2.0],
        })];
        assert!(matches!(
            distance_tensor(&probe, &gallery),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        /// Weighting never invents distances: every output entry is
        /// either the original value or d_max, and totals stay finite.
        #[test]
        fn weights_preserve_or_cap_entries(
            persons in proptest::collection::vec(
                proptest::collection::vec(
                    proptest::collection::vec(0.0f64..100.0, 3),
                    1..4,
                ),
                1..5,
            ),
        ) {
            let t = tensor(persons.clone());
            let (weighted, masks) = apply_matching_weights(&t);
            let mut d_max = 0.0f64;
            for p in &persons {
                for s in p {
                    for &v in s {
                        d_max = d_max.max(v);
                    }
                }
            }
            for (n, p) in persons.iter().enumerate() {
                for (s, seq) in p.iter().enumerate() {
                    for (k, &orig) in seq.iter().enumerate() {
                        let got = weighted.value(n, s, k);
                        if masks.is_selected(k, n, s) {
                            prop_assert_eq!(got, orig);
                        } else {
                            prop_assert_eq!(got, d_max);
                        }
                    }
                }
            }
        }

        /// Idempotence on random tensors.
        #[test]
        fn weighting_idempotent_on_random_tensors(
            persons in proptest::collection::vec(
                proptest::collection::vec(
                    proptest::collection::vec(0.0f64..50.0, 2),
                    1..4,
                ),
                1..4,
            ),
        ) {
            let t = tensor(persons);
            let (w1, m1) = apply_matching_weights(&t);
            let (w2, m2) = apply_matching_weights(&w1);
            prop_assert_eq!(w1, w2);
            prop_assert_eq!(m1, m2);
        }
    }
}
