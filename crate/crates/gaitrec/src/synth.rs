//! Deterministic synthetic walking silhouettes.
//!
//! Real gait footage is bulky and license-encumbered, so tests and
//! demos run on a procedurally generated stand-in: a stick-figure
//! walker rasterized as a binary silhouette — circular head, elliptical
//! torso and two legs drawn as quadrilaterals swinging in antiphase,
//! with a small vertical bob at twice the stride frequency. Geometry
//! comes from the spec fields, the stride phase and the per-pixel noise
//! stream come from the seeded generator, so a spec reproduces its
//! sequence bit for bit.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::silhouette::{write_pgm, GaitSequence, SilhouetteFrame};

/// Canvas width of generated frames, in pixels.
pub const CANVAS_WIDTH: usize = 64;
/// Canvas height of generated frames, in pixels.
pub const CANVAS_HEIGHT: usize = 128;

/// Parameter ranges accepted by [`SyntheticWalkerSpec::validate`].
pub const SWING_AMPLITUDE_RANGE: (f64, f64) = (0.0, 20.0);
pub const STRIDE_PERIOD_RANGE: (u32, u32) = (4, 120);
pub const TORSO_HALF_WIDTH_RANGE: (f64, f64) = (4.0, 16.0);
pub const TORSO_HEIGHT_RANGE: (f64, f64) = (24.0, 56.0);
pub const NOISE_RATE_RANGE: (f64, f64) = (0.0, 0.05);

/// Full description of one synthetic walking sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWalkerSpec {
    /// Seeds the stride phase and the noise stream.
    pub seed: u64,
    /// Horizontal ankle swing amplitude, in pixels.
    pub swing_amplitude: f64,
    /// Frames per full stride cycle.
    pub stride_period: u32,
    /// Torso ellipse horizontal semi-axis, in pixels.
    pub torso_half_width: f64,
    /// Torso ellipse full height, in pixels.
    pub torso_height: f64,
    /// Per-pixel bit-flip probability applied to every frame.
    pub noise_rate: f64,
}

impl SyntheticWalkerSpec {
    /// Checks every parameter against its documented range.
    pub fn validate(&self) -> Result<()> {
        fn check(name: &str, value: f64, (lo, hi): (f64, f64)) -> Result<()> {
            if !value.is_finite() || value < lo || value > hi {
                return Err(Error::InvalidWalkerSpec(format!(
                    "{name} = {value} outside [{lo}, {hi}]"
                )));
            }
            Ok(())
        }
        check(
            "swing_amplitude",
            self.swing_amplitude,
            SWING_AMPLITUDE_RANGE,
        )?;
        check(
            "torso_half_width",
            self.torso_half_width,
            TORSO_HALF_WIDTH_RANGE,
        )?;
        check("torso_height", self.torso_height, TORSO_HEIGHT_RANGE)?;
        check("noise_rate", self.noise_rate, NOISE_RATE_RANGE)?;
        let (lo, hi) = STRIDE_PERIOD_RANGE;
        if self.stride_period < lo || self.stride_period > hi {
            return Err(Error::InvalidWalkerSpec(format!(
                "stride_period = {} outside [{lo}, {hi}]",
                self.stride_period
            )));
        }
        Ok(())
    }

    /// Head radius, derived from the torso so proportions stay plausible.
    fn head_radius(&self) -> f64 {
        (self.torso_half_width - 1.0).clamp(4.0, 9.0)
    }

    /// Leg half-thickness.
    fn leg_half_width(&self) -> f64 {
        (self.torso_half_width * 0.35).clamp(1.5, 4.0)
    }

    /// Vertical bob amplitude; proportional to the swing so a zero
    /// amplitude freezes the figure completely.
    fn bob_amplitude(&self) -> f64 {
        self.swing_amplitude / 8.0
    }
}

/// Pose-independent layout of one walker on the canvas.
struct Layout {
    center_x: f64,
    head_cy: f64,
    head_r: f64,
    torso_cy: f64,
    torso_a: f64,
    torso_b: f64,
    hip_y: f64,
    hip_dx: f64,
    ankle_y: f64,
    leg_hw: f64,
}

impl Layout {
    fn of(spec: &SyntheticWalkerSpec) -> Layout {
        let head_r = spec.head_radius();
        let head_top = 4.0;
        let torso_top = head_top + 2.0 * head_r - 2.0;
        Layout {
            center_x: CANVAS_WIDTH as f64 / 2.0,
            head_cy: head_top + head_r,
            head_r,
            torso_cy: torso_top + spec.torso_height / 2.0,
            torso_a: spec.torso_half_width,
            torso_b: spec.torso_height / 2.0,
            hip_y: torso_top + spec.torso_height - 2.0,
            hip_dx: spec.torso_half_width * 0.5,
            ankle_y: 124.0,
            leg_hw: spec.leg_half_width(),
        }
    }
}

fn fill_disk(canvas: &mut Array2<u8>, cx: f64, cy: f64, r: f64) {
    let y0 = ((cy - r).floor().max(0.0)) as usize;
    let y1 = ((cy + r).ceil().min(CANVAS_HEIGHT as f64 - 1.0)) as usize;
    let x0 = ((cx - r).floor().max(0.0)) as usize;
    let x1 = ((cx + r).ceil().min(CANVAS_WIDTH as f64 - 1.0)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            if dx * dx + dy * dy <= r * r {
                canvas[[y, x]] = 1;
            }
        }
    }
}

fn fill_ellipse(canvas: &mut Array2<u8>, cx: f64, cy: f64, a: f64, b: f64) {
    let y0 = ((cy - b).floor().max(0.0)) as usize;
    let y1 = ((cy + b).ceil().min(CANVAS_HEIGHT as f64 - 1.0)) as usize;
    let x0 = ((cx - a).floor().max(0.0)) as usize;
    let x1 = ((cx + a).ceil().min(CANVAS_WIDTH as f64 - 1.0)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = (x as f64 - cx) / a;
            let dy = (y as f64 - cy) / b;
            if dx * dx + dy * dy <= 1.0 {
                canvas[[y, x]] = 1;
            }
        }
    }
}

/// Fills the quadrilateral with horizontal edges at `top_y` and
/// `bottom_y`, centered on `top_x` and `bottom_x`, `hw` wide on each
/// side: row-by-row linear interpolation of the centerline.
fn fill_leg_quad(
    canvas: &mut Array2<u8>,
    top_x: f64,
    top_y: f64,
    bottom_x: f64,
    bottom_y: f64,
    hw: f64,
) {
    let y0 = (top_y.ceil().max(0.0)) as usize;
    let y1 = (bottom_y.floor().min(CANVAS_HEIGHT as f64 - 1.0)) as usize;
    for y in y0..=y1 {
        let t = (y as f64 - top_y) / (bottom_y - top_y);
        let cx = top_x + t * (bottom_x - top_x);
        let x0 = ((cx - hw).round().max(0.0)) as usize;
        let x1 = ((cx + hw).round().min(CANVAS_WIDTH as f64 - 1.0)) as usize;
        for x in x0..=x1 {
            canvas[[y, x]] = 1;
        }
    }
}

fn render_pose(layout: &Layout, spec: &SyntheticWalkerSpec, phase: f64) -> Array2<u8> {
    let mut canvas = Array2::<u8>::zeros((CANVAS_HEIGHT, CANVAS_WIDTH));
    let dy = (spec.bob_amplitude() * (2.0 * phase).cos()).round();

    fill_disk(
        &mut canvas,
        layout.center_x,
        layout.head_cy + dy,
        layout.head_r,
    );
    fill_ellipse(
        &mut canvas,
        layout.center_x,
        layout.torso_cy + dy,
        layout.torso_a,
        layout.torso_b,
    );
    for (hip_side, leg_phase) in [(-1.0, phase), (1.0, phase + PI)] {
        let hip_x = layout.center_x + hip_side * layout.hip_dx;
        let ankle_x = layout.center_x + spec.swing_amplitude * leg_phase.sin();
        fill_leg_quad(
            &mut canvas,
            hip_x,
            layout.hip_y + dy,
            ankle_x,
            layout.ankle_y + dy,
            layout.leg_hw,
        );
    }
    canvas
}

/// Generates a binary walking sequence of `n_frames` frames on a
/// 64x128 canvas. The stride phase offset and the per-pixel noise are
/// drawn from a generator seeded with `spec.seed`, so equal specs give
/// bit-identical sequences.
pub fn generate_synthetic(spec: &SyntheticWalkerSpec, n_frames: usize) -> Result<GaitSequence> {
    spec.validate()?;
    if n_frames < 2 {
        return Err(Error::SequenceTooShort {
            path: Default::default(),
            found: n_frames,
            needed: 2,
        });
    }
    let layout = Layout::of(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase0 = rng.random::<f64>() * TAU;

    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let phase = phase0 + TAU * t as f64 / spec.stride_period as f64;
        let mut canvas = render_pose(&layout, spec, phase);
        if spec.noise_rate > 0.0 {
            for v in canvas.iter_mut() {
                if rng.random::<f64>() < spec.noise_rate {
                    *v = 1 - *v;
                }
            }
        }
        frames.push(SilhouetteFrame::from_pixels(canvas)?);
    }
    GaitSequence::new(format!("walker-{}", spec.seed), "seq-0", frames)
}

/// Draws per-subject walker geometry and per-sequence seeds from a
/// master seed, then writes a full dataset in the directory layout the
/// loader expects:
///
/// ```text
/// <root>/subject-<i>/seq-<j>/frame-<t>.pgm
/// ```
///
/// Sequences of one subject share geometry and differ in stride phase
/// and noise; distinct subjects get independently drawn proportions.
pub fn write_dataset(
    root: &Path,
    subjects: usize,
    sequences: usize,
    n_frames: usize,
    noise_rate: f64,
    master_seed: u64,
) -> Result<()> {
    if subjects == 0 || sequences == 0 {
        return Err(Error::InvalidWalkerSpec(
            "dataset needs at least one subject and one sequence".into(),
        ));
    }
    for i in 0..subjects {
        let mut subject_rng = ChaCha8Rng::seed_from_u64(
            master_seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(i as u64 + 1),
        );
        let swing_amplitude = subject_rng.random_range(8.0..20.0);
        let stride_period = subject_rng.random_range(12u32..=28);
        let torso_half_width = subject_rng.random_range(5.0..13.0);
        let torso_height = subject_rng.random_range(30.0..52.0);

        for j in 0..sequences {
            let spec = SyntheticWalkerSpec {
                seed: subject_rng.random::<u64>(),
                swing_amplitude,
                stride_period,
                torso_half_width,
                torso_height,
                noise_rate,
            };
            let seq = generate_synthetic(&spec, n_frames)?;
            let dir = root
                .join(format!("subject-{i:02}"))
                .join(format!("seq-{j:02}"));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for (t, frame) in seq.frames().iter().enumerate() {
                let gray = frame.pixels().mapv(|v| v * 255);
                write_pgm(&dir.join(format!("frame-{t:04}.pgm")), &gray)?;
            }
        }
    }
    Ok(())
}
