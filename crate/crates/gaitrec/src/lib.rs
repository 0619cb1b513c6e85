//! # gaitrec
//!
//! Gait-based person identification from binary silhouette sequences.
//!
//! The pipeline condenses a walking sequence into an Active Energy
//! Image (the mean of the first frame and all consecutive absolute
//! frame differences), slices it into K horizontal strips, describes
//! every strip by ten affine moment invariants, whitens each strip's
//! descriptor with a per-strip PCA model fitted on the enrolled
//! gallery, and identifies probes by nearest neighbor over weighted
//! per-strip distances. The weighting step keeps distances of
//! sequences that look similar to the probe in a given strip and
//! raises everything else to the global maximum, so strips that
//! discriminate well dominate the decision.
//!
//! ## Pipeline walkthrough
//!
//! ```
//! use gaitrec::{
//!     generate_synthetic, identify, GaitSequence, Gallery, GalleryConfig,
//!     SyntheticWalkerSpec,
//! };
//!
//! // Two synthetic subjects, two sequences each.
//! let mut specs = Vec::new();
//! for (seed, swing) in [(1u64, 10.0), (2, 10.0), (3, 16.0), (4, 16.0)] {
//!     specs.push(SyntheticWalkerSpec {
//!         seed,
//!         swing_amplitude: swing,
//!         stride_period: 18,
//!         torso_half_width: 8.0 + swing / 4.0,
//!         torso_height: 40.0,
//!         noise_rate: 0.0,
//!     });
//! }
//!
//! let config = GalleryConfig::new(64, 128, 16, 1, 0.5).unwrap();
//! let mut gallery = Gallery::new(config);
//! for (i, spec) in specs.iter().enumerate() {
//!     let person = if i < 2 { "alice" } else { "bob" };
//!     let frames = generate_synthetic(spec, 24).unwrap().frames().to_vec();
//!     let seq = GaitSequence::new(person, format!("seq-{i}"), frames).unwrap();
//!     gallery.enroll(&seq).unwrap();
//! }
//! gallery.finalize().unwrap();
//!
//! // A replay of the last enrolled walker matches bob at distance zero.
//! let probe = generate_synthetic(&specs[3], 24).unwrap();
//! let result = identify(&gallery, &probe).unwrap();
//! assert_eq!(result.predicted_person, "bob");
//! assert_eq!(result.predicted_sequence, "seq-3");
//! ```
//!
//! Galleries persist to a line-oriented text format that round-trips
//! byte for byte; see [`Gallery::save`] and [`Gallery::load`].

pub mod energy;
pub mod error;
pub mod eval;
pub mod gallery;
pub mod matching;
pub mod moments;
pub mod segmentation;
pub mod silhouette;
pub mod synth;
pub mod whitening;

pub use energy::{
    active_energy_image, difference_images, gait_energy_image, ActiveEnergyImage, DifferenceImage,
    GaitEnergyImage,
};
pub use error::{Error, Result};
pub use eval::{
    evaluate, render_csv, render_text, sweep, EvaluationReport, ProbeOutcome, ReportRow,
};
pub use gallery::{Gallery, GalleryConfig};
pub use matching::{
    apply_matching_weights, classify, distance_tensor, identify, identify_features,
    total_distances, DistanceTensor, MatchResult, RankedMatch, SelectionMasks,
};
pub use moments::{
    ami_vector, apply_affine, central_moments, features_from_segmented, AffineTransform, AmiVector,
    CentralMoments, SegmentFeature,
};
pub use segmentation::{segment_aei, strip_heights, SegmentedAei};
pub use silhouette::{
    binarize, load_sequence, load_sequence_with_threshold, resize_binary, write_pgm, GaitSequence,
    SilhouetteFrame, DEFAULT_THRESHOLD,
};
pub use synth::{generate_synthetic, write_dataset, SyntheticWalkerSpec};
pub use whitening::{fit_whitening, whiten, WhitenedFeature, WhiteningModel};
