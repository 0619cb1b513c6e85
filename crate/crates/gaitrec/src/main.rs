//! Command-line front end: dataset synthesis, gallery management,
//! identification and evaluation reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gaitrec::energy::active_energy_image;
use gaitrec::eval::{evaluate, render_csv, render_text, sweep, EvaluationReport};
use gaitrec::gallery::{Gallery, GalleryConfig};
use gaitrec::matching::identify;
use gaitrec::moments::features_from_segmented;
use gaitrec::segmentation::segment_aei;
use gaitrec::silhouette::{load_sequence_with_threshold, write_pgm};
use gaitrec::synth::write_dataset;
use gaitrec::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gaitrec",
    about = "Gait-based person identification from silhouette sequences",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic walker dataset.
    Synth {
        /// Number of subjects to generate.
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        /// Sequences per subject.
        #[arg(long, default_value_t = 6)]
        sequences: usize,
        /// Frames per sequence.
        #[arg(long, default_value_t = 40)]
        frames: usize,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Master seed for walker geometry and noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-pixel bit-flip probability in [0, 0.05].
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
    },
    /// Run one train/test identification experiment.
    Evaluate {
        /// Dataset root: <root>/<subject>/<sequence>/<frames>.
        #[arg(long)]
        data: PathBuf,
        /// Training fraction per subject, strictly between 0 and 1.
        #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
        split: f64,
        /// Number of horizontal strips K.
        #[arg(long, default_value_t = 23)]
        segments: usize,
        /// Whitened dimensions per strip M.
        #[arg(long, default_value_t = 5)]
        dims: usize,
        /// Seed for the train/test shuffle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit CSV instead of the aligned text table.
        #[arg(long)]
        csv: bool,
    },
    /// Evaluate the cross-product of splits, segment counts and dims.
    Sweep {
        /// Dataset root: <root>/<subject>/<sequence>/<frames>.
        #[arg(long)]
        data: PathBuf,
        /// Training fractions, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.66, 0.83], value_parser = parse_fraction)]
        splits: Vec<f64>,
        /// Strip counts K, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![10, 20, 23, 30])]
        segments: Vec<usize>,
        /// Whitened dimension counts M, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5])]
        dims: Vec<usize>,
        /// Seed for the train/test shuffle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit CSV instead of the aligned text table.
        #[arg(long)]
        csv: bool,
    },
    /// Enroll every sequence under a dataset root into a gallery file.
    Enroll {
        /// Dataset root: <root>/<subject>/<sequence>/<frames>.
        #[arg(long)]
        data: PathBuf,
        /// Gallery file to write.
        #[arg(long)]
        out: PathBuf,
        /// Frame width sequences are normalized to.
        #[arg(long, default_value_t = 64)]
        width: usize,
        /// Frame height sequences are normalized to.
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// Number of horizontal strips K.
        #[arg(long, default_value_t = 23)]
        segments: usize,
        /// Whitened dimensions per strip M.
        #[arg(long, default_value_t = 5)]
        dims: usize,
        /// Binarization threshold, strictly between 0 and 1.
        #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
        threshold: f64,
    },
    /// Identify one probe sequence directory against a saved gallery.
    Identify {
        /// Gallery file written by `enroll`.
        #[arg(long)]
        gallery: PathBuf,
        /// Directory holding the probe's frames.
        #[arg(long)]
        probe: PathBuf,
    },
    /// Print per-strip affine moment invariants of one sequence.
    Features {
        /// Directory holding the sequence's frames.
        #[arg(long)]
        probe: PathBuf,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// Number of horizontal strips K.
        #[arg(long, default_value_t = 23)]
        segments: usize,
        /// Binarization threshold, strictly between 0 and 1.
        #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
        threshold: f64,
    },
    /// Render a sequence's active energy image as an 8-bit PGM.
    RenderAei {
        /// Directory holding the sequence's frames.
        #[arg(long)]
        probe: PathBuf,
        /// PGM file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 128)]
        height: usize,
        /// Binarization threshold, strictly between 0 and 1.
        #[arg(long, default_value_t = 0.5, value_parser = parse_fraction)]
        threshold: f64,
    },
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not strictly between 0 and 1"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; only real usage
            // mistakes exit nonzero.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn print_report(report: &EvaluationReport, csv: bool) {
    for name in &report.skipped_subjects {
        eprintln!("warning: skipped {name}: fewer than two sequences");
    }
    let rendered = if csv {
        render_csv(report)
    } else {
        render_text(report)
    };
    print!("{rendered}");
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth {
            subjects,
            sequences,
            frames,
            out,
            seed,
            noise,
        } => {
            write_dataset(&out, subjects, sequences, frames, noise, seed)?;
            println!(
                "wrote {subjects} subjects x {sequences} sequences x {frames} frames to {}",
                out.display()
            );
            Ok(())
        }
        Command::Evaluate {
            data,
            split,
            segments,
            dims,
            seed,
            csv,
        } => {
            let report = evaluate(&data, split, segments, dims, seed)?;
            print_report(&report, csv);
            Ok(())
        }
        Command::Sweep {
            data,
            splits,
            segments,
            dims,
            seed,
            csv,
        } => {
            let report = sweep(&data, &splits, &segments, &dims, seed)?;
            print_report(&report, csv);
            Ok(())
        }
        Command::Enroll {
            data,
            out,
            width,
            height,
            segments,
            dims,
            threshold,
        } => {
            let config = GalleryConfig::new(width, height, segments, dims, threshold)?;
            let mut gallery = Gallery::new(config);
            let subject_dirs = sorted_subdirs(&data)?;
            if subject_dirs.is_empty() {
                return Err(Error::EmptyDataset { path: data });
            }
            for subject_dir in subject_dirs {
                for seq_dir in sorted_subdirs(&subject_dir)? {
                    let seq = load_sequence_with_threshold(&seq_dir, width, height, threshold)?;
                    gallery.enroll(&seq)?;
                }
            }
            let (persons, sequences) = (gallery.persons().len(), gallery.sequence_count());
            gallery.finalize()?;
            gallery.save(&out)?;
            println!(
                "enrolled {sequences} sequences of {persons} persons; gallery saved to {}",
                out.display()
            );
            Ok(())
        }
        Command::Identify { gallery, probe } => {
            let gallery = Gallery::load(&gallery)?;
            let c = gallery.config();
            let seq = load_sequence_with_threshold(&probe, c.width, c.height, c.threshold)?;
            let result = identify(&gallery, &seq)?;
            println!(
                "predicted {} {}",
                result.predicted_person, result.predicted_sequence
            );
            for (i, m) in result.ranked.iter().take(5).enumerate() {
                println!(
                    "rank {} {} {} {}",
                    i + 1,
                    m.person_id,
                    m.sequence_id,
                    m.distance
                );
            }
            Ok(())
        }
        Command::Features {
            probe,
            width,
            height,
            segments,
            threshold,
        } => {
            let seq = load_sequence_with_threshold(&probe, width, height, threshold)?;
            let aei = active_energy_image(&seq);
            let features = features_from_segmented(&segment_aei(&aei, segments)?);
            let mut out = String::new();
            for (k, f) in features.iter().enumerate() {
                out.push_str(&format!("ami {} {}", k, u8::from(f.degenerate)));
                for v in f.ami.values() {
                    out.push_str(&format!(" {v}"));
                }
                out.push('\n');
            }
            print!("{out}");
            Ok(())
        }
        Command::RenderAei {
            probe,
            out,
            width,
            height,
            threshold,
        } => {
            let seq = load_sequence_with_threshold(&probe, width, height, threshold)?;
            let aei = active_energy_image(&seq);
            write_pgm(&out, &aei.to_gray())?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}
