//! Enrollment gallery with deterministic text persistence.
//!
//! A gallery accumulates per-sequence segment features, then is
//! finalized: one whitening model is fitted per segment over all
//! enrolled feature vectors. Persons and sequences are kept sorted by
//! identifier at all times, so fitting order, serialization order and
//! classification tie-break order are one canonical order.
//!
//! File format (plain text, one record per line, single spaces, one
//! trailing newline; floats in shortest round-trip decimal):
//!
//! ```text
//! GAITGALLERY v1
//! config <width> <height> <segments> <dims> <threshold>
//! model <k> <mean:10> <eigenvalues:M> <basis rows:M*10>   (K lines, or none)
//! seq <person_id> <sequence_id>
//! ami <k> <degenerate:0|1> <values:10>                    (K lines per seq)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::energy::active_energy_image;
use crate::error::{Error, Result};
use crate::moments::{features_from_segmented, AmiVector, SegmentFeature};
use crate::segmentation::segment_aei;
use crate::silhouette::GaitSequence;
use crate::whitening::{fit_whitening, whiten, WhitenedFeature, WhiteningModel, FEATURE_DIM};

const MAGIC: &str = "GAITGALLERY v1";

/// Pipeline configuration shared by every sequence in a gallery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GalleryConfig {
    /// Frame width silhouettes are normalized to.
    pub width: usize,
    /// Frame height silhouettes are normalized to.
    pub height: usize,
    /// Number of horizontal strips K.
    pub segment_count: usize,
    /// Whitened dimensionality M per strip.
    pub whiten_dims: usize,
    /// Binarization threshold fraction.
    pub threshold: f64,
}

impl GalleryConfig {
    pub fn new(
        width: usize,
        height: usize,
        segment_count: usize,
        whiten_dims: usize,
        threshold: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidResizeTarget { width, height });
        }
        if segment_count == 0 || segment_count > height {
            return Err(Error::InvalidSegmentCount {
                k: segment_count,
                height,
            });
        }
        if !(1..=FEATURE_DIM).contains(&whiten_dims) {
            return Err(Error::InvalidOutputDim(whiten_dims));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidThreshold(threshold));
        }
        Ok(GalleryConfig {
            width,
            height,
            segment_count,
            whiten_dims,
            threshold,
        })
    }
}

impl Default for GalleryConfig {
    /// The standard operating point: 64x128 frames, 23 strips, 5
    /// whitened dimensions, mid-gray threshold.
    fn default() -> Self {
        GalleryConfig {
            width: 64,
            height: 128,
            segment_count: 23,
            whiten_dims: 5,
            threshold: 0.5,
        }
    }
}

/// Features of one enrolled sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrolledSequence {
    sequence_id: String,
    features: Vec<SegmentFeature>,
}

impl EnrolledSequence {
    pub fn sequence_id(&self) -> &str {
        &self.sequence_id
    }

    pub fn features(&self) -> &[SegmentFeature] {
        &self.features
    }
}

/// All enrolled sequences of one person, sorted by sequence id.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonEntry {
    person_id: String,
    sequences: Vec<EnrolledSequence>,
}

impl PersonEntry {
    pub fn person_id(&self) -> &str {
        &self.person_id
    }

    pub fn sequences(&self) -> &[EnrolledSequence] {
        &self.sequences
    }
}

/// Whitened view of a gallery, ready for distance computation.
#[derive(Debug, Clone)]
pub struct WhitenedGallery {
    pub persons: Vec<WhitenedPerson>,
    pub segment_count: usize,
}

#[derive(Debug, Clone)]
pub struct WhitenedPerson {
    pub person_id: String,
    pub sequences: Vec<WhitenedGallerySequence>,
}

#[derive(Debug, Clone)]
pub struct WhitenedGallerySequence {
    pub sequence_id: String,
    /// One entry per strip; `None` marks a degenerate strip.
    pub segments: Vec<Option<WhitenedFeature>>,
}

/// Enrollment gallery.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    config: GalleryConfig,
    persons: Vec<PersonEntry>,
    /// One whitening model per strip once finalized; empty before.
    models: Vec<WhiteningModel>,
}

fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(Error::InvalidId(id.to_string()));
    }
    Ok(())
}

impl Gallery {
    pub fn new(config: GalleryConfig) -> Self {
        Gallery {
            config,
            persons: Vec::new(),
            models: Vec::new(),
        }
    }

    pub fn config(&self) -> &GalleryConfig {
        &self.config
    }

    pub fn persons(&self) -> &[PersonEntry] {
        &self.persons
    }

    pub fn models(&self) -> &[WhiteningModel] {
        &self.models
    }

    pub fn is_finalized(&self) -> bool {
        !self.models.is_empty()
    }

    /// Total number of enrolled sequences.
    pub fn sequence_count(&self) -> usize {
        self.persons.iter().map(|p| p.sequences.len()).sum()
    }

    /// Extracts features from a silhouette sequence and enrolls them
    /// under the sequence's subject and sequence ids.
    pub fn enroll(&mut self, sequence: &GaitSequence) -> Result<()> {
        if sequence.width() != self.config.width || sequence.height() != self.config.height {
            return Err(Error::FrameSizeMismatch {
                width: self.config.width,
                height: self.config.height,
                found_width: sequence.width(),
                found_height: sequence.height(),
            });
        }
        let aei = active_energy_image(sequence);
        let seg = segment_aei(&aei, self.config.segment_count)?;
        let features = features_from_segmented(&seg);
        self.enroll_features(sequence.subject_id(), sequence.sequence_id(), features)
    }

    /// Enrolls precomputed per-strip features for (person, sequence).
    pub fn enroll_features(
        &mut self,
        person_id: &str,
        sequence_id: &str,
        features: Vec<SegmentFeature>,
    ) -> Result<()> {
        if self.is_finalized() {
            return Err(Error::AlreadyFinalized);
        }
        validate_id(person_id)?;
        validate_id(sequence_id)?;
        if features.len() != self.config.segment_count {
            return Err(Error::InvalidSegmentCount {
                k: features.len(),
                height: self.config.height,
            });
        }
        if features
            .iter()
            .any(|f| f.ami.values().iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFiniteFeature);
        }

        let entry = EnrolledSequence {
            sequence_id: sequence_id.to_string(),
            features,
        };
        let pidx = match self
            .persons
            .binary_search_by(|p| p.person_id.as_str().cmp(person_id))
        {
            Ok(i) => i,
            Err(i) => {
                self.persons.insert(
                    i,
                    PersonEntry {
                        person_id: person_id.to_string(),
                        sequences: Vec::new(),
                    },
                );
                i
            }
        };
        let person = &mut self.persons[pidx];
        match person
            .sequences
            .binary_search_by(|s| s.sequence_id.as_str().cmp(sequence_id))
        {
            Ok(_) => Err(Error::DuplicateSequence {
                person: person_id.to_string(),
                sequence: sequence_id.to_string(),
            }),
            Err(i) => {
                person.sequences.insert(i, entry);
                Ok(())
            }
        }
    }

    /// Fits one whitening model per strip over all enrolled features.
    /// After this no further enrollment is accepted.
    pub fn finalize(&mut self) -> Result<()> {
        if self.is_finalized() {
            return Err(Error::AlreadyFinalized);
        }
        if self.persons.is_empty() {
            return Err(Error::EmptyGallery);
        }
        let mut models = Vec::with_capacity(self.config.segment_count);
        for k in 0..self.config.segment_count {
            let samples: Vec<AmiVector> = self
                .persons
                .iter()
                .flat_map(|p| p.sequences.iter())
                .map(|s| s.features()[k].ami)
                .collect();
            models.push(fit_whitening(&samples, self.config.whiten_dims, k)?);
        }
        self.models = models;
        Ok(())
    }

    /// Whitens every enrolled feature with the fitted models.
    pub fn whitened(&self) -> Result<WhitenedGallery> {
        if !self.is_finalized() {
            return Err(Error::NotFinalized);
        }
        let persons = self
            .persons
            .iter()
            .map(|p| WhitenedPerson {
                person_id: p.person_id.clone(),
                sequences: p
                    .sequences
                    .iter()
                    .map(|s| WhitenedGallerySequence {
                        sequence_id: s.sequence_id.clone(),
                        segments: s
                            .features()
                            .iter()
                            .enumerate()
                            .map(|(k, f)| {
                                if f.degenerate {
                                    None
                                } else {
                                    Some(whiten(&self.models[k], &f.ami))
                                }
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        Ok(WhitenedGallery {
            persons,
            segment_count: self.config.segment_count,
        })
    }

    /// Whitens probe features with this gallery's models.
    pub fn whiten_probe(
        &self,
        features: &[SegmentFeature],
    ) -> Result<Vec<Option<WhitenedFeature>>> {
        if !self.is_finalized() {
            return Err(Error::NotFinalized);
        }
        if features.len() != self.config.segment_count {
            return Err(Error::DimensionMismatch {
                probe: features.len(),
                gallery: self.config.segment_count,
            });
        }
        Ok(features
            .iter()
            .enumerate()
            .map(|(k, f)| {
                if f.degenerate {
                    None
                } else {
                    Some(whiten(&self.models[k], &f.ami))
                }
            })
            .collect())
    }

    // ---- persistence ------------------------------------------------

    /// Serializes to the canonical text form.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let c = &self.config;
        let _ = writeln!(
            out,
            "config {} {} {} {} {}",
            c.width, c.height, c.segment_count, c.whiten_dims, c.threshold
        );
        for model in &self.models {
            let _ = write!(out, "model {}", model.segment_index());
            for v in model.mean() {
                let _ = write!(out, " {v}");
            }
            for v in model.eigenvalues() {
                let _ = write!(out, " {v}");
            }
            for row in model.basis() {
                for v in row {
                    let _ = write!(out, " {v}");
                }
            }
            out.push('\n');
        }
        for person in &self.persons {
            for seq in &person.sequences {
                let _ = writeln!(out, "seq {} {}", person.person_id, seq.sequence_id);
                for (k, f) in seq.features().iter().enumerate() {
                    let _ = write!(out, "ami {} {}", k, u8::from(f.degenerate));
                    for v in f.ami.values() {
                        let _ = write!(out, " {v}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parses the canonical text form.
    pub fn parse_str(text: &str) -> Result<Gallery> {
        let mut lines = text.lines().enumerate().peekable();

        let (_, first) = lines.next().ok_or(Error::GalleryParse {
            line: 1,
            message: "empty file".into(),
        })?;
        if first != MAGIC {
            if first.starts_with("GAITGALLERY") {
                return Err(Error::GalleryVersion(first.to_string()));
            }
            return Err(Error::GalleryParse {
                line: 1,
                message: format!("expected {MAGIC:?}"),
            });
        }

        let (_, cfg_line) = lines.next().ok_or(Error::GalleryParse {
            line: 2,
            message: "missing config line".into(),
        })?;
        let toks: Vec<&str> = cfg_line.split(' ').collect();
        if toks.len() != 6 || toks[0] != "config" {
            return Err(Error::GalleryParse {
                line: 2,
                message: "malformed config line".into(),
            });
        }
        let config = GalleryConfig::new(
            parse_usize(toks[1], 2)?,
            parse_usize(toks[2], 2)?,
            parse_usize(toks[3], 2)?,
            parse_usize(toks[4], 2)?,
            parse_f64(toks[5], 2)?,
        )?;
        let k_total = config.segment_count;
        let m = config.whiten_dims;

        let mut gallery = Gallery::new(config);
        let mut models: Vec<WhiteningModel> = Vec::new();
        let mut seen_seq = false;

        while let Some((idx, line)) = lines.next() {
            let lineno = idx + 1;
            let toks: Vec<&str> = line.split(' ').collect();
            match toks.first().copied() {
                Some("model") => {
                    if seen_seq {
                        return Err(Error::GalleryParse {
                            line: lineno,
                            message: "model line after sequence data".into(),
                        });
                    }
                    // model <k> <mean:10> <eig:m> <basis:m*10>
                    let expect = 2 + FEATURE_DIM + m + m * FEATURE_DIM;
                    if toks.len() != expect {
                        return Err(Error::GalleryParse {
                            line: lineno,
                            message: format!(
                                "model line needs {expect} tokens, found {}",
                                toks.len()
                            ),
                        });
                    }
                    let k = parse_usize(toks[1], lineno)?;
                    if k != models.len() || k >= k_total {
                        return Err(Error::GalleryParse {
                            line: lineno,
                            message: format!("model index {k} out of order"),
                        });
                    }
                    let mut pos = 2;
                    let mut mean = [0.0f64; FEATURE_DIM];
                    for v in &mut mean {
                        *v = parse_f64(toks[pos], lineno)?;
                        pos += 1;
                    }
                    let mut eigenvalues = Vec::with_capacity(m);
                    for _ in 0..m {
                        eigenvalues.push(parse_f64(toks[pos], lineno)?);
                        pos += 1;
                    }
                    let mut basis = Vec::with_capacity(m);
                    for _ in 0..m {
                        let mut row = [0.0f64; FEATURE_DIM];
                        for v in &mut row {
                            *v = parse_f64(toks[pos], lineno)?;
                            pos += 1;
                        }
                        basis.push(row);
                    }
                    models.push(WhiteningModel::from_parts(k, mean, eigenvalues, basis));
                }
                Some("seq") => {
                    seen_seq = true;
                    if toks.len() != 3 {
                        return Err(Error::GalleryParse {
                            line: lineno,
                            message: "seq line needs person and sequence ids".into(),
                        });
                    }
                    let person_id = toks[1].to_string();
                    let sequence_id = toks[2].to_string();
                    let mut features = Vec::with_capacity(k_total);
                    for expect_k in 0..k_total {
                        let (aidx, aline) = lines.next().ok_or(Error::GalleryParse {
                            line: lineno,
                            message: format!("sequence {person_id}/{sequence_id} truncated"),
                        })?;
                        let alineno = aidx + 1;
                        let atoks: Vec<&str> = aline.split(' ').collect();
                        if atoks.len() != 3 + FEATURE_DIM || atoks[0] != "ami" {
                            return Err(Error::GalleryParse {
                                line: alineno,
                                message: "malformed ami line".into(),
                            });
                        }
                        let k = parse_usize(atoks[1], alineno)?;
                        if k != expect_k {
                            return Err(Error::GalleryParse {
                                line: alineno,
                                message: format!("ami index {k}, expected {expect_k}"),
                            });
                        }
                        let degenerate = match atoks[2] {
                            "0" => false,
                            "1" => true,
                            other => {
                                return Err(Error::GalleryParse {
                                    line: alineno,
                                    message: format!("bad degenerate flag {other:?}"),
                                })
                            }
                        };
                        let mut values = [0.0f64; FEATURE_DIM];
                        for (i, v) in values.iter_mut().enumerate() {
                            *v = parse_f64(atoks[3 + i], alineno)?;
                        }
                        features.push(SegmentFeature {
                            ami: AmiVector::new(values),
                            degenerate,
                        });
                    }
                    gallery.enroll_features(&person_id, &sequence_id, features)?;
                }
                _ => {
                    return Err(Error::GalleryParse {
                        line: lineno,
                        message: format!(
                            "unknown record {:?}",
                            toks.first().copied().unwrap_or("")
                        ),
                    });
                }
            }
        }

        if !models.is_empty() && models.len() != k_total {
            return Err(Error::GalleryParse {
                line: text.lines().count(),
                message: format!("found {} models, expected 0 or {k_total}", models.len()),
            });
        }
        gallery.models = models;
        Ok(gallery)
    }

    /// Writes the gallery to a file.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    /// Reads a gallery from a file.
    pub fn load(path: &Path) -> Result<Gallery> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Gallery::parse_str(&text)
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse().map_err(|_| Error::GalleryParse {
        line,
        message: format!("bad integer {tok:?}"),
    })
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::GalleryParse {
        line,
        message: format!("bad number {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::GalleryParse {
            line,
            message: format!("non-finite number {tok:?}"),
        });
    }
    Ok(v)
}
