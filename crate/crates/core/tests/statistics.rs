use invariant_dpp::numerics::RngStream;
use invariant_dpp::sampler::{sample_many, SampleConfig, Sampler};
use invariant_dpp::statistics::gof::ks_two_sample;
use invariant_dpp::statistics::integrals::{alpha, h1_norm_sq};
use invariant_dpp::statistics::moments::{empirical_report, DEFAULT_RESAMPLES};
use invariant_dpp::statistics::test_functions::{builtin_test_functions, TestFunction};
use invariant_dpp::statistics::traces::variance_trace;
use invariant_dpp::{Isometry, KernelSpec, SpaceKind};

#[test]
fn variance_is_bounded_by_alpha_times_dirichlet_energy() {
    for space in SpaceKind::ALL {
        for rho in [4.0, 16.0, 64.0] {
            let spec = KernelSpec::full(space, rho).unwrap();
            let a = alpha(&spec).unwrap().value;
            let functions = match space {
                SpaceKind::Hyperbolic => vec![TestFunction::bump(0.6), TestFunction::angular(0.6, 2)],
                _ => builtin_test_functions(),
            };
            for f in functions {
                let v = variance_trace(&spec, &f).unwrap().value;
                let h1 = h1_norm_sq(&f).unwrap().value;
                assert!(v <= a * h1, "{space:?} ρ={rho} {f}: {v} > {a} × {h1}");
            }
        }
    }
}

#[test]
fn empirical_moments_match_trace_prediction() {
    let f = TestFunction::bump(1.0);
    let cfg = SampleConfig::for_model(SpaceKind::Sphere, 16.0, 0.0, 0.0, RngStream::new(31, 0)).unwrap();
    let samples = sample_many(&cfg, 2000, Sampler::Projection).unwrap();
    let r = empirical_report(&samples, &f, DEFAULT_RESAMPLES, RngStream::new(31, 1 << 40)).unwrap();
    assert!(r.mean.within(0.0, 4.0), "{r:?}");
    assert!(r.variance.within(r.predicted_variance.unwrap(), 4.0), "{r:?}");
    assert!(r.cumulant3.within(r.predicted_cumulant3.unwrap(), 4.0), "{r:?}");
}

#[test]
fn law_of_statistic_is_isometry_invariant() {
    // Σ f(T z) and Σ f(z) have the same law; compare on independent samples
    let f = TestFunction::angular(1.0, 1);
    let cfg = SampleConfig::for_model(SpaceKind::Sphere, 12.0, 0.0, 0.0, RngStream::new(32, 0)).unwrap();
    let a = sample_many(&cfg, 3000, Sampler::Projection).unwrap();
    let b = sample_many(&cfg.with_stream_id(1 << 32), 3000, Sampler::Projection).unwrap();
    let t = Isometry::random(SpaceKind::Sphere, 1.0, &mut RngStream::new(32, 99).rng());
    let plain: Vec<f64> = a.iter().map(|s| s.points.iter().map(|&z| f.value(z)).sum()).collect();
    let moved: Vec<f64> = b
        .iter()
        .map(|s| s.points.iter().filter_map(|&z| t.apply(z).ok()).map(|w| f.value(w)).sum())
        .collect();
    let ks = ks_two_sample(&plain, &moved);
    assert!(ks.passes(0.01), "{ks:?}");
}
