mod common;

use binaural_core::estimation::{
    build_correlation_set, estimate_correlation, estimate_rtf_gevd, CorrelationSet,
    EstimationWindows, RtfEstimate,
};
use binaural_core::linalg::{hermitian_eigen, HermitianMatrix, C64};
use binaural_core::scene::{mix_scene, ArrayGeometry, SceneSpec};
use binaural_core::wola::WolaConfig;
use binaural_core::Error;
use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn snapshots(seed: u64, t: usize, n: usize) -> Vec<Vec<C64>> {
    let mut g = rng(seed);
    (0..t).map(|_| cvec(&mut g, n)).collect()
}

#[test]
fn correlation_matches_two_loop_accumulation() {
    let ys = snapshots(3, 100, 4);
    let r = estimate_correlation(&frames_of(&ys), 0, 0..100).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = c(0.0, 0.0);
            for y in &ys {
                acc += y[i] * y[j].conj();
            }
            assert!((r.get(i, j) - acc / 100.0).norm() < 1e-12);
        }
    }
}

#[test]
fn correlation_of_sub_interval() {
    let ys = snapshots(4, 30, 2);
    let frames = frames_of(&ys);
    let r = estimate_correlation(&frames, 0, 10..20).unwrap();
    let direct = estimate_correlation(&frames_of(&ys[10..20]), 0, 0..10).unwrap();
    assert_eq!(r, direct);
    assert!(matches!(
        estimate_correlation(&frames, 0, 5..5),
        Err(Error::EmptyInterval)
    ));
    assert!(matches!(
        estimate_correlation(&frames, 0, 20..31),
        Err(Error::IntervalOutOfRange { .. })
    ));
}

/// Principal eigenvector of `L^-1 R_sn L^-H`, mapped back with `L`.
fn whitening_oracle(r_sn: &HermitianMatrix, r_n: &HermitianMatrix) -> Vec<C64> {
    let l = to_na(r_n).cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let w = &linv * to_na(r_sn) * linv.adjoint();
    let w = (&w + w.adjoint()) * c(0.5, 0.0);
    let eig = w.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    (&l * eig.eigenvectors.column(top))
        .iter()
        .copied()
        .collect()
}

#[test]
fn rtf_matches_whitening_oracle() {
    for seed in 0..20 {
        let mut g = rng(seed);
        let r_n = random_pd(&mut g, 4, 0.1);
        let a = cvec(&mut g, 4);
        let r_sn = r_n.add(&HermitianMatrix::outer(&a, 5.0)).unwrap();
        let est = estimate_rtf_gevd(&r_sn, &r_n, 2).unwrap();
        let v = whitening_oracle(&r_sn, &r_n);
        let oracle_l: Vec<C64> = v.iter().map(|z| z / v[0]).collect();
        let oracle_r: Vec<C64> = v.iter().map(|z| z / v[2]).collect();
        assert!(rel_err(&est.left, &oracle_l) < 1e-7);
        assert!(rel_err(&est.right, &oracle_r) < 1e-7);
        let truth: Vec<C64> = a.iter().map(|z| z / a[0]).collect();
        assert!(rel_err(&est.left, &truth) < 1e-8);
        assert_eq!(est.left[0], c(1.0, 0.0));
        assert_eq!(est.right[2], c(1.0, 0.0));
    }
}

#[test]
fn sampled_error_shrinks_with_frames() {
    let mean = |t: usize| (0..10).map(|s| sampled_rtf_error(s, s, t)).sum::<f64>() / 10.0;
    let (short, long) = (mean(12), mean(800));
    assert!(long < 0.25 * short, "{short} -> {long}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn correlation_is_psd(seed in any::<u64>(), t in 1usize..40, n in 1usize..6) {
        let r = estimate_correlation(&frames_of(&snapshots(seed, t, n)), 0, 0..t).unwrap();
        let e = hermitian_eigen(&r);
        prop_assert!(e.values[0] >= -1e-10 * r.trace());
    }

    #[test]
    fn rtf_is_scale_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let mut g = rng(seed);
        let r_n = random_pd(&mut g, 4, 0.1);
        let a = cvec(&mut g, 4);
        let r_sn = r_n.add(&HermitianMatrix::outer(&a, 2.0)).unwrap();
        let x = estimate_rtf_gevd(&r_sn, &r_n, 2).unwrap();
        let y = estimate_rtf_gevd(&r_sn.scaled(scale), &r_n.scaled(scale), 2).unwrap();
        prop_assert!(rel_err(&y.left, &x.left) < 1e-10);
        prop_assert!(rel_err(&y.right, &x.right) < 1e-10);
    }

    #[test]
    fn population_rtf_recovery(seed in any::<u64>(), phi in 0.1f64..100.0) {
        let mut g = rng(seed);
        let r_n = random_pd(&mut g, 4, 0.1);
        let a = cvec(&mut g, 4);
        let r_sn = r_n.add(&HermitianMatrix::outer(&a, phi)).unwrap();
        let x = estimate_rtf_gevd(&r_sn, &r_n, 2).unwrap();
        let truth: Vec<C64> = a.iter().map(|z| z / a[2]).collect();
        prop_assert!(rel_err(&x.right, &truth) < 1e-8);
    }
}

#[test]
fn reference_entry_near_zero() {
    let r_n = HermitianMatrix::identity(4);
    let a = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 1.0)];
    let r_sn = r_n.add(&HermitianMatrix::outer(&a, 10.0)).unwrap();
    assert!(matches!(
        estimate_rtf_gevd(&r_sn, &r_n, 2),
        Err(Error::ReferenceEntryNearZero { .. })
    ));
}

#[test]
fn observation_window_frame_count() {
    let cfg = WolaConfig::default();
    let w = EstimationWindows::for_timeline(32000, &cfg, 0.1).unwrap();
    assert_eq!(w.observation.len(), 12);
    assert_eq!(w.observation.start, 250);
    assert_eq!(w.noise, 0..249);
    assert_eq!(
        EstimationWindows::for_timeline(32000, &cfg, 3.0)
            .unwrap()
            .observation
            .len(),
        375
    );
}

fn scene() -> binaural_core::scene::Scene {
    let spec = SceneSpec {
        active_duration: 3.5,
        ..SceneSpec::new(-35.0, &[150.0], 11)
    };
    mix_scene(&spec, &ArrayGeometry::default(), &WolaConfig::default()).unwrap()
}

fn frob_rel(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let d = DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j) - b.get(i, j));
    d.norm() / b.frobenius_norm()
}

/// 249 half-overlapping frames put a single realization's error right at
/// the 10% mark, so the bound is checked on the mean over seeds.
#[test]
fn noise_estimate_tracks_true_coherence() {
    let cfg = WolaConfig::default();
    let seeds = 8;
    let mut total = 0.0;
    for seed in 0..seeds {
        let spec = SceneSpec {
            active_duration: 0.5,
            ..SceneSpec::new(-35.0, &[150.0], seed)
        };
        let s = mix_scene(&spec, &ArrayGeometry::default(), &cfg).unwrap();
        let (corr, _) = build_correlation_set(&s.timeline, 2, &cfg, 0.1).unwrap();
        let errs: Vec<f64> = (1..cfg.bins() - 1)
            .map(|k| frob_rel(&corr.bins[k].r_n, &s.truth.matrices(k).r_n))
            .collect();
        total += errs.iter().sum::<f64>() / errs.len() as f64;
    }
    let mean = total / seeds as f64;
    assert!(mean < 0.1, "mean {mean}");
}

fn mean_rtf_error(s: &binaural_core::scene::Scene, est: &RtfEstimate) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    // DC and Nyquist carry no directional energy; their estimates are unused.
    for (k, b) in est.bins.iter().enumerate().take(est.bins.len() - 1).skip(1) {
        if let Some(b) = b {
            let atf = &s.truth.bins[k].desired_atf;
            let truth: Vec<C64> = atf.iter().map(|z| z / atf[0]).collect();
            total += rel_err(&b.desired.left, &truth);
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn longer_observation_gives_better_rtfs() {
    let s = scene();
    let cfg = WolaConfig::default();
    let errs: Vec<f64> = [0.1, 0.5, 3.0]
        .iter()
        .map(|&l| {
            mean_rtf_error(
                &s,
                &build_correlation_set(&s.timeline, 2, &cfg, l).unwrap().1,
            )
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
}

#[test]
fn estimates_are_reference_normalized() {
    let s = scene();
    let (_, est) = build_correlation_set(&s.timeline, 2, &WolaConfig::default(), 0.5).unwrap();
    assert!(est.failures.is_empty());
    for b in est.bins.iter().flatten() {
        for p in std::iter::once(&b.desired).chain(&b.interferers) {
            assert_eq!(p.left[0], c(1.0, 0.0));
            assert_eq!(p.right[2], c(1.0, 0.0));
        }
    }
}

#[test]
fn interval_past_the_signal_is_rejected() {
    let s = scene();
    assert!(matches!(
        build_correlation_set(&s.timeline, 2, &WolaConfig::default(), 3.6),
        Err(Error::IntervalOutOfRange { .. })
    ));
}

#[test]
fn json_round_trip() {
    let s = scene();
    let (corr, est) = build_correlation_set(&s.timeline, 2, &WolaConfig::default(), 0.1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corr.save(dir.path().join("corr.json")).unwrap();
    est.save(dir.path().join("rtf.json")).unwrap();
    assert_eq!(
        CorrelationSet::load(dir.path().join("corr.json")).unwrap(),
        corr
    );
    assert_eq!(RtfEstimate::load(dir.path().join("rtf.json")).unwrap(), est);
}
