//! End-to-end checks that enrollment, finalization, identification
//! and the gallery file format cooperate on synthetic walkers.

use gaitrec::{
    active_energy_image, distance_tensor, features_from_segmented, generate_synthetic, identify,
    identify_features, segment_aei, GaitSequence, Gallery, GalleryConfig, SyntheticWalkerSpec,
};

const WIDTH: usize = 64;
const HEIGHT: usize = 128;
const SEGMENTS: usize = 16;
const DIMS: usize = 2;
const FRAMES: usize = 36;

/// Three people with clearly different builds; two noise-free
/// sequences each, started at different phases via the seed.
fn roster_specs() -> Vec<(&'static str, SyntheticWalkerSpec)> {
    let geometries: [(&str, f64, u32, f64, f64); 3] = [
        ("ada", 10.0, 16, 6.0, 36.0),
        ("bob", 16.0, 22, 9.0, 44.0),
        ("cyd", 13.0, 26, 12.0, 50.0),
    ];
    let mut specs = Vec::new();
    for (p, (person, swing, period, half_width, height)) in geometries.into_iter().enumerate() {
        for s in 0..2u64 {
            specs.push((
                person,
                SyntheticWalkerSpec {
                    seed: p as u64 * 10 + s + 1,
                    swing_amplitude: swing,
                    stride_period: period,
                    torso_half_width: half_width,
                    torso_height: height,
                    noise_rate: 0.0,
                },
            ));
        }
    }
    specs
}

fn sequence_for(person: &str, name: &str, spec: &SyntheticWalkerSpec) -> GaitSequence {
    let raw = generate_synthetic(spec, FRAMES).expect("valid walker spec");
    GaitSequence::new(person, name, raw.frames().to_vec()).expect("well-formed frames")
}

fn enrolled_gallery() -> Gallery {
    let config = GalleryConfig::new(WIDTH, HEIGHT, SEGMENTS, DIMS, 0.5).unwrap();
    let mut gallery = Gallery::new(config);
    for (i, (person, spec)) in roster_specs().iter().enumerate() {
        let seq = sequence_for(person, &format!("seq-{}", i % 2), spec);
        gallery.enroll(&seq).unwrap();
    }
    gallery.finalize().unwrap();
    gallery
}

#[test]
fn probe_identical_to_an_enrolled_sequence_wins_outright() {
    let gallery = enrolled_gallery();
    let specs = roster_specs();

    // Regenerate bob's first sequence bit for bit and use it as probe.
    let (person, spec) = &specs[2];
    assert_eq!(*person, "bob");
    let probe = sequence_for(person, "probe", spec);

    // The raw distance column for the twin must be exactly zero.
    let aei = active_energy_image(&probe);
    let seg = segment_aei(&aei, SEGMENTS).unwrap();
    let features = features_from_segmented(&seg);
    let whitened_probe = gallery.whiten_probe(&features).unwrap();
    let whitened = gallery.whitened().unwrap();
    let tensor = distance_tensor(&whitened_probe, &whitened).unwrap();
    let bob = whitened
        .persons
        .iter()
        .position(|p| p.person_id == "bob")
        .unwrap();
    for k in 0..SEGMENTS {
        assert_eq!(tensor.value(bob, 0, k), 0.0, "segment {k}");
    }

    // And identification must return that very sequence. Strips in
    // which both of bob's sequences tie at zero flatten to the global
    // maximum for everyone, so the winning total need not be zero --
    // but it must still be strictly smallest.
    let result = identify(&gallery, &probe).unwrap();
    assert_eq!(result.predicted_person, "bob");
    assert_eq!(result.predicted_sequence, "seq-0");
    let (n, s) = result.predicted_indices;
    let winner = result.total_distances[n][s];
    for (pi, person) in result.total_distances.iter().enumerate() {
        for (si, &total) in person.iter().enumerate() {
            if (pi, si) != (n, s) {
                assert!(winner < total, "({pi},{si}) ties or beats the twin");
            }
        }
    }
    assert_eq!(result.ranked[0].person_id, "bob");
    assert_eq!(result.ranked[0].sequence_id, "seq-0");
    assert_eq!(result.ranked[0].distance, winner);
}

#[test]
fn identify_agrees_with_identify_features() {
    let gallery = enrolled_gallery();
    let probe = sequence_for(
        "probe",
        "probe",
        &SyntheticWalkerSpec {
            seed: 901,
            swing_amplitude: 15.0,
            stride_period: 22,
            torso_half_width: 9.0,
            torso_height: 44.0,
            noise_rate: 0.0,
        },
    );

    let via_sequence = identify(&gallery, &probe).unwrap();

    let aei = active_energy_image(&probe);
    let seg = segment_aei(&aei, SEGMENTS).unwrap();
    let features = features_from_segmented(&seg);
    let via_features = identify_features(&gallery, &features).unwrap();

    assert_eq!(via_sequence.predicted_person, via_features.predicted_person);
    assert_eq!(
        via_sequence.predicted_sequence,
        via_features.predicted_sequence
    );
    assert_eq!(via_sequence.total_distances, via_features.total_distances);
}

#[test]
fn enrollment_order_does_not_change_the_gallery() {
    let config = GalleryConfig::new(WIDTH, HEIGHT, SEGMENTS, DIMS, 0.5).unwrap();
    let specs = roster_specs();
    let sequences: Vec<GaitSequence> = specs
        .iter()
        .enumerate()
        .map(|(i, (person, spec))| sequence_for(person, &format!("seq-{}", i % 2), spec))
        .collect();

    let mut forward = Gallery::new(config);
    for seq in &sequences {
        forward.enroll(seq).unwrap();
    }
    forward.finalize().unwrap();

    let mut reversed = Gallery::new(config);
    for seq in sequences.iter().rev() {
        reversed.enroll(seq).unwrap();
    }
    reversed.finalize().unwrap();

    assert_eq!(forward.to_file_string(), reversed.to_file_string());

    let probe = sequence_for("probe", "probe", &specs[4].1);
    let a = identify(&forward, &probe).unwrap();
    let b = identify(&reversed, &probe).unwrap();
    assert_eq!(a.predicted_person, b.predicted_person);
    assert_eq!(a.predicted_sequence, b.predicted_sequence);
}

#[test]
fn saved_gallery_identifies_like_the_original() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walkers.gallery");

    let gallery = enrolled_gallery();
    gallery.save(&path).unwrap();
    let reloaded = Gallery::load(&path).unwrap();

    let probe = sequence_for("probe", "probe", &roster_specs()[5].1);
    let a = identify(&gallery, &probe).unwrap();
    let b = identify(&reloaded, &probe).unwrap();
    assert_eq!(a.predicted_person, b.predicted_person);
    assert_eq!(a.predicted_sequence, b.predicted_sequence);
    assert_eq!(a.ranked.len(), b.ranked.len());
    for (x, y) in a.ranked.iter().zip(&b.ranked) {
        assert_eq!(x.person_id, y.person_id);
        assert_eq!(x.sequence_id, y.sequence_id);
        assert!((x.distance - y.distance).abs() <= 1e-9 * x.distance.abs().max(1.0));
    }
}
