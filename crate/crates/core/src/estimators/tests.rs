use super::*;
use crate::marks::{attach_marks, sample_unit_path, scale_mark, MarkKernel};
use crate::specfun::gamma;
use crate::stablepath::{occupation_local_time, simulate_path, SmallJumpMode, StableParams};
use proptest::prelude::*;

fn params() -> StableParams {
    StableParams::new(0.5, 1.0).unwrap()
}

fn one_jump(dx: f64) -> PathSkeleton {
    PathSkeleton::from_parts(
        params(),
        1.0,
        0.01,
        SmallJumpMode::DriftOnly,
        vec![0.0, 0.0],
        &[(0.5, dx)],
    )
    .unwrap()
}

fn hat_marks(path: &PathSkeleton) -> Vec<MarkPath> {
    attach_marks(
        &MarkKernel::hat(3).unwrap(),
        &path.jumps,
        &mut RngStream::new(0, 0),
    )
}

#[test]
fn single_crossing_record() {
    let path = one_jump(2.0);
    let r = collect_crossings(&path, 0.5, None).unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!((r[0].a, r[0].b, r[0].h, r[0].u), (0.5, 1.5, 2.0, 0.25));
    assert_eq!(r[0].markval, None);
    assert!(collect_crossings(&path, 2.5, None).unwrap().is_empty());
    assert!(collect_crossings(&path, 0.0, None).unwrap().is_empty());
    assert!(collect_crossings(&path, f64::NAN, None).is_err());
}

#[test]
fn count_examples() {
    let path = one_jump(2.0);
    let marks = hat_marks(&path);
    let r = collect_crossings(&path, 0.5, Some(&marks)).unwrap();
    assert_eq!(r[0].markval, Some(0.5));
    assert_eq!(
        count_estimator(&r, 0.5, EstimatorKind::Corridor, 1.0).unwrap(),
        1
    );
    assert_eq!(
        count_estimator(&r, 0.6, EstimatorKind::Corridor, 1.0).unwrap(),
        0
    );
    assert_eq!(
        count_estimator(&r, 2.0, EstimatorKind::JumpSize, 1.0).unwrap(),
        0
    );
    assert_eq!(
        count_estimator(&r, 1.9, EstimatorKind::JumpSize, 1.0).unwrap(),
        1
    );
    assert_eq!(
        count_estimator(&r, 0.5, EstimatorKind::Mark, 1.0).unwrap(),
        1
    );
    assert_eq!(
        count_estimator(&r, 0.5, EstimatorKind::Mark, 0.4).unwrap(),
        0
    );
    let bare = collect_crossings(&path, 0.5, None).unwrap();
    assert!(matches!(
        count_estimator(&bare, 0.5, EstimatorKind::Mark, 1.0),
        Err(Error::Contract(_))
    ));
    assert!(count_estimator(&r, 0.0, EstimatorKind::Corridor, 1.0).is_err());
    assert_eq!(
        "jumpsize".parse::<EstimatorKind>().unwrap(),
        EstimatorKind::JumpSize
    );
}

#[test]
fn rescaled_examples() {
    assert_eq!(rescaled_estimate(0, 0.01, 0.5, 1.0, 0.4).unwrap(), 0.0);
    let v = rescaled_estimate(100, 0.01, 0.5, 1.0, 0.398942).unwrap();
    assert!((v - 25.066).abs() < 1e-3);
    let w = rescaled_estimate(100, 0.01, 0.5, 1.0, 2.0 * 0.398942).unwrap();
    assert!((w - v / 2.0).abs() < 1e-12);
    assert!(rescaled_estimate(1, 0.1, 0.5, 1.0, 0.0).is_err());
}

fn sim(seed: u64, horizon: f64, eps: f64) -> PathSkeleton {
    simulate_path(
        params(),
        horizon,
        eps,
        0.01,
        SmallJumpMode::DriftOnly,
        &mut RngStream::new(seed, 0),
    )
    .unwrap()
}

#[test]
fn count_field_matches_direct_counts() {
    let path = sim(4, 1.0, 2e-3);
    let marks = hat_marks(&path);
    let levels: Vec<f64> = (0..=20).map(|k| -0.5 + 0.05 * k as f64).collect();
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let hs = [0.1, 0.02, 0.005];
    let field = mark_count_field(&path, &marks, &hs, &levels, &times).unwrap();
    for (i, &y) in levels.iter().enumerate() {
        let r = collect_crossings(&path, y, Some(&marks)).unwrap();
        for (k, &h) in hs.iter().enumerate() {
            for (j, &t) in times.iter().enumerate() {
                let want = count_estimator(&r, h, EstimatorKind::Mark, t).unwrap();
                assert_eq!(field[k][i * times.len() + j], want);
            }
        }
    }
}

#[test]
fn zero_marks_give_sup_local_time() {
    #[derive(Debug)]
    struct Zero;
    impl crate::marks::UnitPathSampler for Zero {
        fn sample(&self, n: usize, _s: &mut RngStream) -> Vec<f64> {
            vec![0.0; n]
        }
    }
    let path = sim(5, 1.0, 5e-3);
    let k = MarkKernel::custom(std::sync::Arc::new(Zero), 1.0, 3).unwrap();
    let marks = attach_marks(&k, &path.jumps, &mut RngStream::new(1, 0));
    let levels: Vec<f64> = (0..=40).map(|k| -1.0 + 0.05 * k as f64).collect();
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let base = occupation_local_time(&path, &levels, 0.02, &times).unwrap();
    let res = theorem1_sweep(&path, &marks, 1.0, 0.4, &[0.1, 0.05], &base).unwrap();
    let sup = base.ell.iter().cloned().fold(0.0, f64::max);
    assert_eq!(res.sup_error, vec![sup, sup]);
    assert!(theorem1_sweep(&path, &marks, 1.0, 0.4, &[0.05, 0.1], &base).is_err());
}

#[test]
fn sweep_error_shrinks_with_h() {
    let path = sim(6, 1.0, 1e-3);
    let marks = hat_marks(&path);
    let levels: Vec<f64> = (0..=40).map(|k| -1.0 + 0.05 * k as f64).collect();
    let times: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let base = occupation_local_time(&path, &levels, 0.02, &times).unwrap();
    let c = 2f64.powf(-0.5) / gamma(0.5);
    let res = theorem1_sweep(&path, &marks, 1.0, c, &[0.2, 0.0125], &base).unwrap();
    assert!(res.sup_error[1] < res.sup_error[0], "{:?}", res.sup_error);
}

#[test]
fn rates_and_local_time_errors() {
    let path = sim(7, 4.0, 1e-3);
    let levels = [-0.2];
    let times = [4.0];
    let field = occupation_local_time(&path, &levels, 0.01, &times).unwrap();
    let rec = collect_crossings(&path, -0.2, None).unwrap();
    let rates =
        rate_per_local_time(&rec, &field, -0.2, &[0.1, 0.05], EstimatorKind::JumpSize).unwrap();
    assert!(rates[1] >= rates[0]);
    assert!(rate_per_local_time(&rec, &field, 0.3, &[0.1], EstimatorKind::JumpSize).is_err());
    let empty = occupation_local_time(&path, &[100.0], 0.01, &times).unwrap();
    assert!(rate_per_local_time(&rec, &empty, 100.0, &[0.1], EstimatorKind::JumpSize).is_err());
}

#[test]
fn slope_fit_examples() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x).collect();
    let f = slope_fit(&xs, &ys).unwrap();
    assert!((f.slope + 2.0).abs() < 1e-14 && (f.intercept - 1.5).abs() < 1e-14 && f.stderr < 1e-12);
    assert!(slope_fit(&[1.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).is_err());
    assert!(slope_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());

    let mut s = RngStream::new(3, 0);
    let xs: Vec<f64> = (0..50).map(|k| k as f64 / 10.0).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x + 0.1 * s.normal()).collect();
    let f = slope_fit(&xs, &ys).unwrap();
    assert!((f.slope - 0.7).abs() < 3.0 * f.stderr);
}

#[test]
fn ks_examples() {
    assert_eq!(ks_uniform(&[0.5]).unwrap().d, 0.5);
    let n = 40;
    let q: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
    assert!((ks_uniform(&q).unwrap().d - 0.5 / n as f64).abs() < 1e-15);
    assert!(ks_uniform(&[0.0]).is_err());
    assert!(ks_uniform(&[]).is_err());
    assert!((kolmogorov_sf(1.3580986393225505) - 0.05).abs() < 1e-6);
}

#[test]
fn ks_uniform_calibration() {
    let mut pass = 0;
    for rep in 0..100 {
        let mut s = RngStream::new(1000 + rep, 0);
        let v: Vec<f64> = (0..10_000).map(|_| s.uniform()).collect();
        if ks_uniform(&v).unwrap().p_value > 0.01 {
            pass += 1;
        }
    }
    assert!(pass >= 98, "{pass}");
}

#[test]
fn ks_two_sample_detects_shift() {
    let mut s = RngStream::new(2, 0);
    let a: Vec<f64> = (0..2000).map(|_| s.normal()).collect();
    let b: Vec<f64> = (0..2000).map(|_| s.normal()).collect();
    let c: Vec<f64> = (0..2000).map(|_| s.normal() + 0.3).collect();
    assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.01);
    assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
    assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap().d, 0.0);
}

#[test]
fn increment_of_identical_levels_is_zero() {
    let spec = IncrementScalingSpec {
        path: PathSpec::new(params(), 5e-3, 0.01, SmallJumpMode::DriftOnly).unwrap(),
        pairs: vec![(0.1, 0.1), (0.0, 0.0), (-0.1, -0.1)],
        p: 2.0,
        horizon: 1.0,
        bandwidth: 0.01,
        replicas: 4,
        seed: 1,
        threads: 1,
    };
    let err = increment_scaling(&spec);
    // all moments vanish, so the log-log fit is rejected
    assert!(err.is_err());
}

#[test]
fn uniform_undershoot_on_a_path() {
    let rec: Vec<CrossingRecord> = (0..30)
        .flat_map(|seed| collect_crossings(&sim(100 + seed, 2.0, 1e-3), 0.3, None).unwrap())
        .collect();
    assert!(rec.len() > 300, "{}", rec.len());
    assert!(rec
        .iter()
        .all(|r| r.u > 0.0 && r.u < 1.0 && r.h == r.a + r.b));
    let u: Vec<f64> = rec.iter().map(|r| r.u).collect();
    assert!(ks_uniform(&u).unwrap().p_value > 0.001);
}

proptest! {
    #[test]
    fn prop_counts_nest(seed in 0u64..500, h1 in 0.005f64..0.5, dh in 0.0f64..0.5, t in 0.0f64..1.0) {
        let path = sim(seed, 1.0, 5e-3);
        let marks = hat_marks(&path);
        let rec = collect_crossings(&path, 0.05, Some(&marks)).unwrap();
        let h2 = h1 + dh;
        for kind in [EstimatorKind::Mark, EstimatorKind::Corridor, EstimatorKind::JumpSize] {
            prop_assert!(count_estimator(&rec, h2, kind, t).unwrap() <= count_estimator(&rec, h1, kind, t).unwrap());
            prop_assert!(count_estimator(&rec, h1, kind, t).unwrap() <= count_estimator(&rec, h1, kind, 1.0).unwrap());
        }
        let corridor = count_estimator(&rec, h1, EstimatorKind::Corridor, 1.0).unwrap();
        let below = 2.0 * h1 * (1.0 - 1e-12);
        prop_assert!(corridor <= count_estimator(&rec, below, EstimatorKind::JumpSize, 1.0).unwrap());
    }

    #[test]
    fn prop_hat_markval_is_min_of_under_and_overshoot(dx in 0.02f64..5.0, u in 0.01f64..0.99) {
        let path = one_jump(dx);
        let unit = sample_unit_path(&MarkKernel::hat(3).unwrap(), &mut RngStream::new(0, 0));
        let marks = vec![scale_mark(&unit, dx)];
        let y = u * dx;
        let r = collect_crossings(&path, y, Some(&marks)).unwrap();
        prop_assert_eq!(r.len(), 1);
        prop_assert!((r[0].markval.unwrap() - r[0].a.min(r[0].b)).abs() < 1e-12);
    }
}
