//! End-to-end identification experiments: train/test splits, CCR
//! reports and parameter sweeps.
//!
//! A dataset is a directory tree `<root>/<subject>/<sequence>/<frames>`.
//! For each subject the sequences are shuffled with a seeded generator
//! and divided into a training part (enrolled into a gallery) and a
//! probe part (identified against it); the correct classification rate
//! is the fraction of probes whose predicted identity matches their
//! true subject. Everything is deterministic in (dataset, seed), and a
//! sweep reuses the same per-subject splits for every (K, M) pair so
//! its rows are comparable.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::energy::{active_energy_image, ActiveEnergyImage};
use crate::error::{Error, Result};
use crate::gallery::{Gallery, GalleryConfig};
use crate::matching::identify_features;
use crate::moments::{features_from_segmented, SegmentFeature};
use crate::segmentation::segment_aei;
use crate::silhouette::{load_sequence, DEFAULT_THRESHOLD};

/// Frame geometry every sequence is normalized to before feature
/// extraction.
pub const EVAL_WIDTH: usize = 64;
pub const EVAL_HEIGHT: usize = 128;

/// Outcome of identifying a single probe sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub subject_id: String,
    pub sequence_id: String,
    pub predicted_person: String,
    pub predicted_sequence: String,
    pub correct: bool,
}

/// One experiment configuration with its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub train_fraction: f64,
    pub k_segments: usize,
    pub m_dims: usize,
    pub correct: usize,
    pub total: usize,
    /// Exactly `correct as f64 / total as f64`.
    pub ccr: f64,
    pub probes: Vec<ProbeOutcome>,
}

/// Results of [`evaluate`] or [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rng_seed: u64,
    /// Subjects left out for having fewer than two sequences.
    pub skipped_subjects: Vec<String>,
    pub rows: Vec<ReportRow>,
}

/// One subject's sequences with their precomputed energy images.
struct SubjectData {
    id: String,
    sequences: Vec<(String, ActiveEnergyImage)>,
}

/// Loads every subject under `root`, normalizing frames to the
/// evaluation geometry and reducing each sequence to its energy image.
/// Subjects with fewer than two sequences are set aside by name.
fn load_dataset(root: &Path) -> Result<(Vec<SubjectData>, Vec<String>)> {
    let mut subject_dirs = list_subdirs(root)?;
    subject_dirs.sort();
    if subject_dirs.is_empty() {
        return Err(Error::EmptyDataset {
            path: root.to_path_buf(),
        });
    }

    let mut subjects = Vec::new();
    let mut skipped = Vec::new();
    for subject_dir in subject_dirs {
        let name = dir_name(&subject_dir);
        let mut seq_dirs = list_subdirs(&subject_dir)?;
        seq_dirs.sort();
        if seq_dirs.len() < 2 {
            skipped.push(name);
            continue;
        }
        let mut sequences = Vec::with_capacity(seq_dirs.len());
        for seq_dir in seq_dirs {
            let seq = load_sequence(&seq_dir, EVAL_WIDTH, EVAL_HEIGHT)?;
            sequences.push((dir_name(&seq_dir), active_energy_image(&seq)));
        }
        subjects.push(SubjectData {
            id: name,
            sequences,
        });
    }
    if subjects.is_empty() {
        return Err(Error::EmptyDataset {
            path: root.to_path_buf(),
        });
    }
    Ok((subjects, skipped))
}

fn list_subdirs(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    Ok(out)
}

fn dir_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Shuffled per-subject train/test split. The generator depends only
/// on the run seed and the subject's position in sorted order, so the
/// assignment is identical across (K, M) combinations.
fn split_indices(
    n_sequences: usize,
    train_fraction: f64,
    seed: u64,
    subject_pos: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n_sequences).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(subject_pos as u64 + 1),
    );
    order.shuffle(&mut rng);
    let n_train =
        ((train_fraction * n_sequences as f64).round() as usize).clamp(1, n_sequences - 1);
    let mut train: Vec<usize> = order[..n_train].to_vec();
    let mut test: Vec<usize> = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidEvalParam(format!(
            "train fraction {f} must lie strictly between 0 and 1"
        )));
    }
    Ok(())
}

/// Per-strip features for every sequence, grouped `[subject][sequence]`.
fn features_for_k(subjects: &[SubjectData], k: usize) -> Result<Vec<Vec<Vec<SegmentFeature>>>> {
    subjects
        .iter()
        .map(|s| {
            s.sequences
                .iter()
                .map(|(_, aei)| Ok(features_from_segmented(&segment_aei(aei, k)?)))
                .collect()
        })
        .collect()
}

/// Runs one (split, K, M) experiment over preloaded subjects.
fn run_row(
    subjects: &[SubjectData],
    features: &[Vec<Vec<SegmentFeature>>],
    train_fraction: f64,
    k_segments: usize,
    m_dims: usize,
    seed: u64,
) -> Result<ReportRow> {
    let config = GalleryConfig::new(
        EVAL_WIDTH,
        EVAL_HEIGHT,
        k_segments,
        m_dims,
        DEFAULT_THRESHOLD,
    )?;
    let mut gallery = Gallery::new(config);
    let mut splits = Vec::with_capacity(subjects.len());
    for (pos, subject) in subjects.iter().enumerate() {
        let (train, test) = split_indices(subject.sequences.len(), train_fraction, seed, pos);
        for &i in &train {
            gallery.enroll_features(
                &subject.id,
                &subject.sequences[i].0,
                features[pos][i].clone(),
            )?;
        }
        splits.push(test);
    }
    gallery.finalize()?;

    let mut probes = Vec::new();
    let mut correct = 0usize;
    for (pos, subject) in subjects.iter().enumerate() {
        for &i in &splits[pos] {
            let result = identify_features(&gallery, &features[pos][i])?;
            let ok = result.predicted_person == subject.id;
            correct += usize::from(ok);
            probes.push(ProbeOutcome {
                subject_id: subject.id.clone(),
                sequence_id: subject.sequences[i].0.clone(),
                predicted_person: result.predicted_person,
                predicted_sequence: result.predicted_sequence,
                correct: ok,
            });
        }
    }
    let total = probes.len();
    Ok(ReportRow {
        train_fraction,
        k_segments,
        m_dims,
        correct,
        total,
        ccr: correct as f64 / total as f64,
        probes,
    })
}

fn run_rows(
    subjects: &[SubjectData],
    skipped: Vec<String>,
    splits: &[f64],
    k_values: &[usize],
    m_values: &[usize],
    seed: u64,
) -> Result<EvaluationReport> {
    if splits.is_empty() || k_values.is_empty() || m_values.is_empty() {
        return Err(Error::InvalidEvalParam(
            "splits, segment counts and dimension counts must be non-empty".into(),
        ));
    }
    for &f in splits {
        check_fraction(f)?;
    }
    // Features depend only on K; compute once per distinct value.
    let mut cache: Vec<(usize, Vec<Vec<Vec<SegmentFeature>>>)> = Vec::new();
    for &k in k_values {
        if !cache.iter().any(|(ck, _)| *ck == k) {
            cache.push((k, features_for_k(subjects, k)?));
        }
    }
    let mut rows = Vec::new();
    for &split in splits {
        for &k in k_values {
            let features = &cache.iter().find(|(ck, _)| *ck == k).expect("cached").1;
            for &m in m_values {
                rows.push(run_row(subjects, features, split, k, m, seed)?);
            }
        }
    }
    Ok(EvaluationReport {
        rng_seed: seed,
        skipped_subjects: skipped,
        rows,
    })
}

/// Runs a single train/test experiment on the dataset under `root`.
pub fn evaluate(
    root: &Path,
    train_fraction: f64,
    k_segments: usize,
    m_dims: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    let (subjects, skipped) = load_dataset(root)?;
    run_rows(
        &subjects,
        skipped,
        &[train_fraction],
        &[k_segments],
        &[m_dims],
        seed,
    )
}

/// Evaluates the cross-product of splits, segment counts and whitening
/// dimensions, one report row per combination, ordered (split, K, M).
/// The dataset is loaded and split once, so rows differ only in the
/// parameter under study.
pub fn sweep(
    root: &Path,
    splits: &[f64],
    k_values: &[usize],
    m_values: &[usize],
    seed: u64,
) -> Result<EvaluationReport> {
    let (subjects, skipped) = load_dataset(root)?;
    run_rows(&subjects, skipped, splits, k_values, m_values, seed)
}

/// Renders the report as an aligned plain-text table.
pub fn render_text(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed {}", report.rng_seed);
    if !report.skipped_subjects.is_empty() {
        let _ = writeln!(
            out,
            "skipped {} subject(s) with fewer than two sequences: {}",
            report.skipped_subjects.len(),
            report.skipped_subjects.join(", ")
        );
    }
    let _ = writeln!(
        out,
        "{:>7} {:>4} {:>4} {:>13} {:>8}",
        "split", "K", "M", "correct/total", "CCR"
    );
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{:>7.3} {:>4} {:>4} {:>13} {:>8.4}",
            row.train_fraction,
            row.k_segments,
            row.m_dims,
            format!("{}/{}", row.correct, row.total),
            row.ccr,
        );
    }
    out
}

/// Renders the report as CSV, one row per experiment.
pub fn render_csv(report: &EvaluationReport) -> String {
    let mut out = String::from("train_fraction,k_segments,m_dims,correct,total,ccr\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.train_fraction, row.k_segments, row.m_dims, row.correct, row.total, row.ccr
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::silhouette::GaitSequence;
    use crate::synth::{generate_synthetic, write_dataset, SyntheticWalkerSpec};
    use rand::Rng;

    /// In-memory variant of [`sweep`]: groups sequences by subject id
    /// in sorted order and runs the same experiment without disk I/O.
    fn sweep_sequences(
        sequences: &[GaitSequence],
        splits: &[f64],
        k_values: &[usize],
        m_values: &[usize],
        seed: u64,
    ) -> Result<EvaluationReport> {
        let mut subjects: Vec<SubjectData> = Vec::new();
        for seq in sequences {
            let aei = active_energy_image(seq);
            match subjects.iter_mut().find(|s| s.id == seq.subject_id()) {
                Some(s) => s.sequences.push((seq.sequence_id().to_string(), aei)),
                None => subjects.push(SubjectData {
                    id: seq.subject_id().to_string(),
                    sequences: vec![(seq.sequence_id().to_string(), aei)],
                }),
            }
        }
        subjects.sort_by(|a, b| a.id.cmp(&b.id));
        for s in &mut subjects {
            s.sequences.sort_by(|a, b| a.0.cmp(&b.0));
        }
        run_rows(&subjects, Vec::new(), splits, k_values, m_values, seed)
    }

    /// Generates `subjects x sequences` walkers entirely in memory,
    /// mirroring the geometry sampling of `write_dataset`.
    fn synth_subjects(
        subjects: usize,
        sequences: usize,
        frames: usize,
        noise_rate: f64,
        master_seed: u64,
    ) -> Vec<GaitSequence> {
        let mut out = Vec::new();
        for i in 0..subjects {
            let mut rng = ChaCha8Rng::seed_from_u64(
                master_seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add(i as u64 + 1),
            );
            let swing_amplitude = rng.random_range(8.0..20.0);
            let stride_period = rng.random_range(12u32..=28);
            let torso_half_width = rng.random_range(5.0..13.0);
            let torso_height = rng.random_range(30.0..52.0);
            for j in 0..sequences {
                let spec = SyntheticWalkerSpec {
                    seed: rng.random::<u64>(),
                    swing_amplitude,
                    stride_period,
                    torso_half_width,
                    torso_height,
                    noise_rate,
                };
                let seq = generate_synthetic(&spec, frames).unwrap();
                let frames_vec = seq.frames().to_vec();
                out.push(
                    GaitSequence::new(format!("subject-{i:02}"), format!("seq-{j:02}"), frames_vec)
                        .unwrap(),
                );
            }
        }
        out
    }

    #[test]
    fn split_is_deterministic_and_leaves_both_sides() {
        let (train_a, test_a) = split_indices(6, 0.5, 9, 3);
        let (train_b, test_b) = split_indices(6, 0.5, 9, 3);
        assert_eq!(train_a, train_b);
        assert_eq!(test_a, test_b);
        assert_eq!(train_a.len(), 3);
        assert_eq!(test_a.len(), 3);

        // Rounding clamps so both sides stay populated.
        let (train, test) = split_indices(2, 0.9, 1, 0);
        assert_eq!((train.len(), test.len()), (1, 1));
        let (train, test) = split_indices(2, 0.1, 1, 0);
        assert_eq!((train.len(), test.len()), (1, 1));

        // 4 sequences at 2/3 round to 3 train / 1 test.
        let (train, test) = split_indices(4, 2.0 / 3.0, 1, 0);
        assert_eq!((train.len(), test.len()), (3, 1));
    }

    #[test]
    fn different_subjects_get_different_shuffles() {
        // Not a universal truth, but with this seed the shuffles differ,
        // guarding against accidentally reusing one generator.
        let orders: Vec<_> = (0..4).map(|pos| split_indices(6, 0.5, 42, pos).0).collect();
        assert!(orders.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn rejects_out_of_range_fractions_and_empty_lists() {
        let seqs = synth_subjects(2, 2, 4, 0.0, 5);
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(matches!(
                sweep_sequences(&seqs, &[bad], &[4], &[2], 1),
                Err(Error::InvalidEvalParam(_))
            ));
        }
        assert!(matches!(
            sweep_sequences(&seqs, &[], &[4], &[2], 1),
            Err(Error::InvalidEvalParam(_))
        ));
    }

    #[test]
    fn probes_matching_their_own_subject_geometry_are_identified() {
        // Four sequences per subject at split 0.5 give two train and
        // two probe sequences each; with enough frames to cover a full
        // stride cycle, distinct geometries should be recovered
        // essentially perfectly even with mild noise.
        let seqs = synth_subjects(4, 4, 40, 0.005, 11);
        let report = sweep_sequences(&seqs, &[0.5], &[8], &[2], 77).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.total, 8);
        assert!(
            row.correct >= 7,
            "expected near-perfect recovery, got {}/{}",
            row.correct,
            row.total
        );
    }

    #[test]
    fn report_ccr_matches_probe_logs_exactly() {
        let seqs = synth_subjects(4, 3, 10, 0.01, 23);
        let report = sweep_sequences(&seqs, &[0.5], &[6, 10], &[2], 5).unwrap();
        for row in &report.rows {
            let correct = row.probes.iter().filter(|p| p.correct).count();
            assert_eq!(correct, row.correct);
            assert_eq!(row.probes.len(), row.total);
            assert_eq!(row.ccr, row.correct as f64 / row.total as f64);
            assert!(row.total > 0);
        }
    }

    #[test]
    fn sweep_rows_follow_split_k_m_order() {
        let seqs = synth_subjects(3, 5, 6, 0.01, 3);
        let report = sweep_sequences(&seqs, &[0.4, 0.6], &[4, 8], &[1, 2], 9).unwrap();
        let layout: Vec<_> = report
            .rows
            .iter()
            .map(|r| (r.train_fraction, r.k_segments, r.m_dims))
            .collect();
        let expect = vec![
            (0.4, 4, 1),
            (0.4, 4, 2),
            (0.4, 8, 1),
            (0.4, 8, 2),
            (0.6, 4, 1),
            (0.6, 4, 2),
            (0.6, 8, 1),
            (0.6, 8, 2),
        ];
        assert_eq!(layout, expect);
    }

    #[test]
    fn noise_does_not_improve_accuracy() {
        // Statistical regression check on fixed seeds (>= 30 probes):
        // a noiseless dataset must classify at least as well as the
        // same walkers at the maximum supported noise rate.
        let clean = synth_subjects(10, 5, 24, 0.0, 71);
        let noisy = synth_subjects(10, 5, 24, 0.05, 71);
        let report_clean = sweep_sequences(&clean, &[0.4], &[12], &[4], 13).unwrap();
        let report_noisy = sweep_sequences(&noisy, &[0.4], &[12], &[4], 13).unwrap();
        assert_eq!(report_clean.rows[0].total, 30);
        assert!(report_clean.rows[0].ccr >= report_noisy.rows[0].ccr);
    }

    #[test]
    fn disk_evaluation_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), 3, 3, 6, 0.01, 17).unwrap();
        let a = evaluate(dir.path(), 0.5, 6, 2, 4).unwrap();
        let b = evaluate(dir.path(), 0.5, 6, 2, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(render_text(&a), render_text(&b));
        assert_eq!(a.rng_seed, 4);

        // A single-element sweep is the same experiment.
        let c = sweep(dir.path(), &[0.5], &[6], &[2], 4).unwrap();
        assert_eq!(a.rows, c.rows);
    }

    #[test]
    fn subjects_with_one_sequence_are_skipped_and_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), 3, 3, 6, 0.0, 29).unwrap();
        // Strip subject-01 down to a single sequence.
        for seq in ["seq-01", "seq-02"] {
            std::fs::remove_dir_all(dir.path().join("subject-01").join(seq)).unwrap();
        }
        let report = evaluate(dir.path(), 0.5, 6, 2, 8).unwrap();
        assert_eq!(report.skipped_subjects, vec!["subject-01".to_string()]);
        assert!(report.rows[0]
            .probes
            .iter()
            .all(|p| p.subject_id != "subject-01"));

        let text = render_text(&report);
        assert!(text.contains("skipped 1 subject(s)"));
        assert!(text.contains("subject-01"));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            evaluate(dir.path(), 0.5, 6, 2, 1),
            Err(Error::EmptyDataset { .. })
        ));
    }

    #[test]
    fn csv_lists_every_row() {
        let seqs = synth_subjects(2, 2, 4, 0.0, 31);
        let report = sweep_sequences(&seqs, &[0.5], &[4, 6], &[1], 2).unwrap();
        let csv = render_csv(&report);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "train_fraction,k_segments,m_dims,correct,total,ccr"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.5,4,1,"));
        assert!(lines[2].starts_with("0.5,6,1,"));
    }
}
