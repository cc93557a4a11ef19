use entrocorr::continuum::{
    bin_joint, bin_marginal, bin_sweep, maxwell_assumption_report, sample_maxwell, standard_normals,
    uniform_samples, BinSpec, MaxwellParams,
};
use proptest::prelude::*;

#[test]
fn sampling_is_deterministic() {
    let p = MaxwellParams::new(0.7, 5000, 123).unwrap();
    let a = sample_maxwell(&p);
    let b = sample_maxwell(&p);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(a.vx()), bits(b.vx()));
    assert_eq!(bits(a.vy()), bits(b.vy()));
    assert_eq!(bits(a.vz()), bits(b.vz()));
    let other = sample_maxwell(&MaxwellParams::new(0.7, 5000, 124).unwrap());
    assert_ne!(bits(a.vx()), bits(other.vx()));
}

#[test]
fn independent_streams_stay_under_bias_bound() {
    for (n, bins, seed) in [(200_000usize, 20usize, 1u64), (200_000, 30, 2), (100_000, 10, 3)] {
        let s = sample_maxwell(&MaxwellParams::new(0.5, n, seed).unwrap());
        let r = maxwell_assumption_report(&s, bins).unwrap();
        let bound = 50.0 * ((bins - 1) as f64).powi(2) / (2.0 * n as f64);
        for mi in [r.mi_xy, r.mi_xz, r.mi_yz] {
            assert!(mi < bound, "mi {mi} bound {bound} (n {n}, bins {bins})");
        }
    }
}

#[test]
fn normal_sweep_grows_strictly() {
    let x = standard_normals(5, 0, 200_000);
    let rows = bin_sweep(&x, &[4, 8, 16, 32, 64, 128], (-6.0, 6.0)).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].s_binned > w[0].s_binned);
    }
}

#[test]
fn perfectly_uniform_occupancy_corrects_to_log_width() {
    for bins in [2usize, 5, 16, 100] {
        let (lo, hi) = (-1.5, 2.5);
        let spec = BinSpec::new(lo, hi, bins).unwrap();
        let x: Vec<f64> = (0..bins).flat_map(|b| [spec.midpoint(b); 3]).collect();
        let rows = bin_sweep(&x, &[bins], (lo, hi)).unwrap();
        assert!((rows[0].s_corrected - (hi - lo).ln()).abs() <= 1e-12);
    }
}

#[test]
fn uniform_stream_corrects_to_zero() {
    let x = uniform_samples(8, 0, 200_000);
    for r in bin_sweep(&x, &[8, 16, 32, 64], (0.0, 1.0)).unwrap() {
        assert!(r.s_corrected.abs() < 0.01, "{r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn binning_conserves_mass(
        xy in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..400),
        bx in 2usize..20,
        by in 2usize..20,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let sx = BinSpec::new(-5.0, 5.0, bx).unwrap();
        let sy = BinSpec::new(-5.0, 5.0, by).unwrap();
        let b = bin_joint(&x, &y, &sx, &sy).unwrap();
        let total: f64 = b.joint.entries().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert_eq!(b.counts.iter().sum::<u64>(), x.len() as u64);
        prop_assert_eq!(b.total, x.len() as u64);
        let outside = x.iter().zip(&y).filter(|(a, c)| a.abs() > 5.0 || c.abs() > 5.0).count();
        prop_assert_eq!(b.clamped, outside as u64);
    }

    #[test]
    fn refinement_by_doubling_never_loses_entropy(
        x in proptest::collection::vec(0.0f64..1.0, 2..300),
        base in 2usize..12,
    ) {
        let counts: Vec<usize> = (0..4).map(|k| base << k).collect();
        let rows = bin_sweep(&x, &counts, (0.0, 1.0)).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].s_binned >= w[0].s_binned - 1e-12);
        }
        let m = bin_marginal(&x, &BinSpec::new(0.0, 1.0, base).unwrap()).unwrap();
        prop_assert_eq!(m.counts.iter().sum::<u64>(), x.len() as u64);
    }
}
