//! Metric definitions, their algebraic relations and the timing harness.

use proptest::prelude::*;
use rvmrls::metrics::{
    improvement, improvement_pct, max_error, mse, time_step, variance_ratio, Metric, MetricsReport,
};
use rvmrls::terrain::{synthesize, ScenarioConfig};
use rvmrls::{Error, FilterOutput, FilterSpec, Result, RvmRlsConfig, StreamingFilter};

#[test]
fn zero_error_metrics() {
    let p = vec![1.0, 2.0, 3.0];
    assert_eq!(mse(&p, &p).unwrap(), 0.0);
    assert_eq!(variance_ratio(&p, &p, 0.09).unwrap(), 0.0);
    assert_eq!(max_error(&p, &p).unwrap(), 0.0);
}

#[test]
fn offset_and_spike() {
    let r = vec![0.0; 50];
    let shifted: Vec<f64> = r.iter().map(|x| x + 0.1).collect();
    assert!((mse(&shifted, &r).unwrap() - 0.01).abs() < 1e-15);
    assert!(variance_ratio(&shifted, &r, 0.09).unwrap() < 1e-28);
    let mut spike = r.clone();
    spike[17] = 2.0;
    assert_eq!(max_error(&spike, &r).unwrap(), 2.0);
}

#[test]
fn metric_errors() {
    assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::InvalidInput(_))));
    assert!(matches!(mse(&[], &[]), Err(Error::InvalidInput(_))));
    assert!(matches!(max_error(&[], &[]), Err(Error::InvalidInput(_))));
    assert!(matches!(variance_ratio(&[1.0], &[1.0], 0.0), Err(Error::InvalidInput(_))));
}

#[test]
fn identity_filter_variance_ratio_near_one() {
    // raw measurements as the estimate: VR is chi2_2000 / 2000, sd ~ 0.032
    for seed in 0..10 {
        let cfg = ScenarioConfig { seed, outlier_fraction: 0.0, ..Default::default() };
        let tr = synthesize(&cfg).unwrap();
        let vr = variance_ratio(&tr.measurement, &tr.reference, 0.09).unwrap();
        assert!((vr - 1.0).abs() <= 0.07, "seed {seed}: {vr}");
    }
}

#[test]
fn improvement_examples() {
    assert_eq!(improvement_pct(0.3, 0.3).unwrap(), 0.0);
    assert_eq!(improvement_pct(0.3, 0.0).unwrap(), 100.0);
    let pct = improvement_pct(0.132, 0.016).unwrap();
    assert!((pct - 87.9).abs() < 0.05, "{pct}");
    assert_eq!(improvement_pct(0.0, 0.1), Err(Error::UndefinedRatio));
}

fn report(alg: &str, scenario: &str, seed: u64, mse: f64) -> MetricsReport {
    MetricsReport {
        algorithm: alg.into(),
        scenario_id: scenario.into(),
        seed,
        sr_ms: None,
        mse,
        vr: 0.0,
        me: mse.sqrt(),
    }
}

#[test]
fn improvement_between_reports() {
    let a = report("rls", "s", 1, 0.2);
    let b = report("rvm-rls", "s", 1, 0.05);
    assert!((improvement(&a, &b, Metric::Mse).unwrap() - 75.0).abs() < 1e-12);
    assert!(improvement(&a, &report("x", "other", 1, 0.1), Metric::Mse).is_err());
    assert!(improvement(&a, &report("x", "s", 2, 0.1), Metric::Mse).is_err());
    assert!(improvement(&a, &b, Metric::Sr).is_err());
}

struct NoOp;

impl StreamingFilter for NoOp {
    fn step(&mut self, _t: f64, y: f64) -> Result<FilterOutput> {
        Ok(FilterOutput {
            prediction: y,
            estimate: y,
            residual: 0.0,
            rejected: false,
            reinitialized: false,
            lambda: None,
            sigma2_hat: None,
            cost: None,
            degenerate: false,
        })
    }
}

#[test]
fn noop_filter_is_fast() {
    let tr = synthesize(&ScenarioConfig::default()).unwrap();
    let s = tr.samples();
    let sr = time_step(|| Ok(Box::new(NoOp)), &s, 3).unwrap();
    assert!(sr < 0.01, "{sr} ms");
}

#[test]
fn particle_filter_slower_than_rls() {
    let tr = synthesize(&ScenarioConfig::default()).unwrap();
    let s = tr.samples();
    let rls = FilterSpec::Rls(Default::default());
    let pf = FilterSpec::Pf(Default::default());
    let sr_rls = time_step(|| rls.build(&s[..100]), &s[100..], 3).unwrap();
    let sr_pf = time_step(|| pf.build(&s[..100]), &s[100..], 3).unwrap();
    assert!(sr_pf > sr_rls, "pf {sr_pf} vs rls {sr_rls}");
}

#[test]
fn repeated_timing_is_stable() {
    let tr = synthesize(&ScenarioConfig::default()).unwrap();
    let s = tr.samples();
    let spec = FilterSpec::RvmRls(RvmRlsConfig::default());
    let a = time_step(|| spec.build(&s[..100]), &s[100..], 3).unwrap();
    let b = time_step(|| spec.build(&s[..100]), &s[100..], 3).unwrap();
    assert!((a - b).abs() / a.min(b) < 0.5, "{a} vs {b}");
}

#[test]
fn score_builds_report() {
    let r = MetricsReport::score("lms", "s", 3, &[1.0, 2.0], &[1.5, 2.0], 0.09).unwrap();
    assert_eq!(r.algorithm, "lms");
    assert_eq!(r.seed, 3);
    assert!((r.mse - 0.125).abs() < 1e-15);
    assert_eq!(r.me, 0.5);
    assert!(r.sr_ms.is_none());
}

proptest! {
    #[test]
    fn max_error_dominates_rms(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..200),
    ) {
        let (p, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!(max_error(&p, &r).unwrap() + 1e-12 >= mse(&p, &r).unwrap().sqrt());
    }

    #[test]
    fn vr_and_mse_differ_by_bias(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..200),
        sigma2 in 0.01f64..5.0,
    ) {
        let (p, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = p.len() as f64;
        let mean = p.iter().zip(&r).map(|(a, b)| a - b).sum::<f64>() / n;
        let vr = variance_ratio(&p, &r, sigma2).unwrap();
        let lhs = vr + mean * mean / sigma2;
        let rhs = mse(&p, &r).unwrap() / sigma2;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn metrics_ignore_time_shift(
        pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..100),
        shift in 1usize..50,
    ) {
        // the same (pred, ref) pairs presented at later time indices
        let (p, r): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let k = shift % p.len();
        let rot = |v: &[f64]| [&v[k..], &v[..k]].concat();
        let (p2, r2) = (rot(&p), rot(&r));
        prop_assert_eq!(max_error(&p, &r).unwrap(), max_error(&p2, &r2).unwrap());
        prop_assert!((mse(&p, &r).unwrap() - mse(&p2, &r2).unwrap()).abs() < 1e-12);
        let d = (variance_ratio(&p, &r, 1.0).unwrap() - variance_ratio(&p2, &r2, 1.0).unwrap()).abs();
        prop_assert!(d < 1e-12);
    }
}
