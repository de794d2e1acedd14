//! The subcommands. Each writes one CSV table and returns its checks.

use std::f64::consts::PI;
use std::fmt::Display;
use std::path::Path;

use num_traits::Zero;
use serde::Serialize;

use invariant_dpp::combinatorics::{series_identity_check, upsilon, verify_gff, weights};
use invariant_dpp::numerics::{QuadratureConfig, RngStream};
use invariant_dpp::sampler::{sample_many, truncation_choice, SampleConfig};
use invariant_dpp::statistics::gof::normality_test;
use invariant_dpp::statistics::integrals::{alpha, asymptotic_variance, centered_statistics, h1_norm_sq, variance_quadrature};
use invariant_dpp::statistics::moments::{empirical_report, DEFAULT_RESAMPLES};
use invariant_dpp::statistics::residuals::{co_residual, llap_residual, LlapParams};
use invariant_dpp::statistics::traces::{cumulant_trace, trace_rank, variance_trace};
use invariant_dpp::{Complex64, EnvelopeSpec, Isometry, KernelSpec, SpaceKind};
use num_rational::BigRational;

use crate::config::Settings;
use crate::output::{write_csv, Check, StatRow, TruncationRank};

pub struct Outcome {
    pub rows: usize,
    pub checks: Vec<Check>,
    pub ranks: Vec<TruncationRank>,
}

fn fail(e: impl Display) -> String {
    e.to_string()
}

/// `n` points filling `|z| ≤ radius` along a sunflower spiral.
fn spiral(n: usize, radius: f64) -> Vec<Complex64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| Complex64::from_polar(radius * ((i as f64 + 0.5) / n as f64).sqrt(), i as f64 * golden))
        .collect()
}

#[derive(Serialize)]
struct PointRow {
    sample_id: usize,
    point_id: usize,
    re: f64,
    im: f64,
}

pub fn sample(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    let space = s.space();
    let cfg = SampleConfig::for_model(space, s.rho, s.window, s.tail_tol, RngStream::new(s.seed, 0)).map_err(fail)?;
    let n = cfg.rank();
    if s.dry_run {
        write_csv::<PointRow>(csv, &[])?;
        return Ok(Outcome { rows: 0, checks: vec![], ranks: vec![TruncationRank { rho: s.rho, rank: n }] });
    }
    let samples = sample_many(&cfg, s.samples, s.sampler()?).map_err(fail)?;
    let rows: Vec<PointRow> = samples
        .iter()
        .enumerate()
        .flat_map(|(i, smp)| {
            smp.points.iter().enumerate().map(move |(j, z)| PointRow { sample_id: i, point_id: j, re: z.re, im: z.im })
        })
        .collect();
    write_csv(csv, &rows)?;
    let short = samples.iter().filter(|p| p.points.len() != n).count();
    let outside = samples.iter().flat_map(|p| &p.points).filter(|&&z| !space.contains(z)).count();
    let rejections: usize = samples.iter().map(|p| p.rejection_count).sum();
    Ok(Outcome {
        rows: rows.len(),
        checks: vec![
            Check::new("point_count", short == 0, format!("{short} of {} samples without exactly {n} points", samples.len())),
            Check::new("in_domain", outside == 0, format!("{outside} points outside the chart")),
            Check::new("rejections", true, format!("{rejections} rejected proposals in total")),
        ],
        ranks: vec![TruncationRank { rho: s.rho, rank: n }],
    })
}

#[derive(Serialize)]
struct KernelRow {
    re_z: f64,
    im_z: f64,
    re_w: f64,
    im_w: f64,
    #[serde(rename = "re_K")]
    re_k: f64,
    #[serde(rename = "im_K")]
    im_k: f64,
    #[serde(rename = "abs_K")]
    abs_k: f64,
    envelope: Option<f64>,
}

pub fn verify_kernels(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    let space = s.space();
    let rho = s.rho;
    let spec = KernelSpec::full(space, rho).map_err(fail)?;
    let w_radius = if space == SpaceKind::Hyperbolic { 0.99 } else { s.window };
    let (zs, ws) = (spiral(20, s.window), spiral(20, w_radius));
    // envelopes are stated for ρ ≥ 2 off the plane
    let env = EnvelopeSpec::new(space, rho, s.window).ok();

    let n = match space {
        SpaceKind::Sphere => rho as usize,
        _ => truncation_choice(space, rho, w_radius, 1e-14 * rho / PI).map_err(fail)?,
    };
    let mut diag_err = 0.0f64;
    for &z in zs.iter().chain(&ws) {
        let want = rho / PI * space.invariant_density(z).map_err(fail)?;
        let got = spec.kernel_series(n, z, z).map_err(fail)?.re;
        diag_err = diag_err.max(((got - want) / want).abs());
    }

    let mut rows = Vec::with_capacity(zs.len() * ws.len());
    let mut violations = 0;
    for &z in &zs {
        for &w in &ws {
            let k = spec.kernel_weighted(z, w).map_err(fail)?;
            let phi = env.map(|e| e.envelope(z - w));
            if let Some(phi) = phi {
                if k.norm() > phi + 1e-12 * phi.max(1.0) {
                    violations += 1;
                }
            }
            rows.push(KernelRow { re_z: z.re, im_z: z.im, re_w: w.re, im_w: w.im, re_k: k.re, im_k: k.im, abs_k: k.norm(), envelope: phi });
        }
    }
    write_csv(csv, &rows)?;

    let mut rng = RngStream::new(s.seed, 1).rng();
    let spread = s.window.min(space.chart_radius() * 0.9);
    let mut invariance = 0.0f64;
    for _ in 0..1000 {
        let t = Isometry::random(space, spread, &mut rng);
        let z = Complex64::from_polar(spread * rng.uniform().sqrt(), 2.0 * PI * rng.uniform());
        let w = Complex64::from_polar(spread * rng.uniform().sqrt(), 2.0 * PI * rng.uniform());
        if let (Ok(tz), Ok(tw)) = (t.apply(z), t.apply(w)) {
            if space.contains(tz) && space.contains(tw) {
                let a = spec.kernel_invariant(z, w).map_err(fail)?.norm();
                let b = spec.kernel_invariant(tz, tw).map_err(fail)?.norm();
                invariance = invariance.max((a - b).abs());
            }
        }
    }

    let mut checks = vec![
        Check::new("intensity_identity", diag_err <= 1e-10, format!("max relative error {diag_err:e} with {n} terms")),
        Check::new("isometry_invariance", invariance <= 1e-9, format!("max deviation {invariance:e} over 1000 triples")),
    ];
    match env {
        Some(_) => checks.push(Check::new("envelope", violations == 0, format!("{violations} violations in {} pairs", rows.len()))),
        None => checks.push(Check::new("envelope", true, "not evaluated: the envelope needs ρ ≥ 2")),
    }
    Ok(Outcome { rows: rows.len(), checks, ranks: vec![TruncationRank { rho, rank: n }] })
}

#[derive(Serialize)]
struct IdentityRow {
    identity: &'static str,
    k: usize,
    value_numerator: String,
    value_denominator: String,
    pass: bool,
}

pub fn cumulant_identities(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    if s.kmax < 2 {
        return Err("--kmax must be at least 2".into());
    }
    let half = BigRational::new(1.into(), 2.into());
    let mut rows = Vec::new();
    let mut push = |identity, k, v: BigRational, want: BigRational| {
        rows.push(IdentityRow {
            identity,
            k,
            value_numerator: v.numer().to_string(),
            value_denominator: v.denom().to_string(),
            pass: v == want,
        })
    };
    for k in 1..=s.kmax {
        let want = if k == 1 { BigRational::from_integer(1.into()) } else { BigRational::zero() };
        push("upsilon_one", k, upsilon(k, weights::one), want);
    }
    for k in 2..=s.kmax {
        let want = if k == 2 { half.clone() } else { BigRational::zero() };
        push("gff", k, verify_gff(k), want);
    }
    for (k, c) in series_identity_check(s.kmax).into_iter().enumerate() {
        push("series", k, c, BigRational::zero());
    }
    write_csv(csv, &rows)?;
    let failing: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| format!("{} k={}", r.identity, r.k)).collect();
    Ok(Outcome {
        rows: rows.len(),
        checks: vec![Check::new(
            "identities",
            failing.is_empty(),
            if failing.is_empty() { format!("{} rows exact", rows.len()) } else { format!("failing rows: {}", failing.join(", ")) },
        )],
        ranks: vec![],
    })
}

pub fn variance(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    let space = s.space();
    let fs = s.test_functions();
    let (mut rows, mut checks, mut ranks) = (Vec::new(), Vec::new(), Vec::new());
    let support = fs.iter().map(|f| f.support_radius()).fold(0.0, f64::max);
    for &rho in &s.rho_grid {
        let spec = KernelSpec::full(space, rho).map_err(fail)?;
        ranks.push(TruncationRank { rho, rank: trace_rank(&spec, support).map_err(fail)? });
        let a = alpha(&spec).map_err(fail)?.value;
        for f in &fs {
            let label = f.to_string();
            let row = |quantity: &str, estimate: f64, error: Option<f64>, prediction: Option<f64>| StatRow {
                model: s.model.clone(),
                rho,
                f: label.clone(),
                quantity: quantity.into(),
                estimate,
                error,
                prediction,
            };
            let t = variance_trace(&spec, f).map_err(fail)?;
            let asym = asymptotic_variance(f).map_err(fail)?.value;
            let h1 = h1_norm_sq(f).map_err(fail)?.value;
            rows.push(row("variance_trace", t.value, Some(t.error), Some(asym)));
            rows.push(row("relative_gap", (t.value - asym).abs() / asym, None, None));
            rows.push(row("alpha_bound", a * h1, None, None));
            let tag = format!("{} rho={rho} f={label}", s.model);
            checks.push(Check::new(
                format!("trace_error {tag}"),
                t.error <= s.abs_tol + s.rel_tol * t.value.abs(),
                format!("error {:e} on {}", t.error, t.value),
            ));
            checks.push(Check::new(format!("alpha_bound {tag}"), t.value <= a * h1, format!("{} ≤ {}", t.value, a * h1)));
            if s.cross_check {
                let cfg = QuadratureConfig::pair().with_tolerances(s.rel_tol, s.abs_tol);
                let q = variance_quadrature(&spec, f, &cfg).map_err(fail)?;
                rows.push(row("variance_quadrature", q.value, Some(q.error), Some(t.value)));
                let slack = (10.0 * (q.error + t.error)).max(10.0 * s.rel_tol * t.value.abs());
                checks.push(Check::new(
                    format!("cross_check {tag}"),
                    (q.value - t.value).abs() <= slack,
                    format!("quadrature {} vs trace {}", q.value, t.value),
                ));
            }
        }
    }
    write_csv(csv, &rows)?;
    Ok(Outcome { rows: rows.len(), checks, ranks })
}

pub fn clt(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    let space = s.space();
    let fs = s.test_functions();
    if space != SpaceKind::Sphere {
        if let Some(f) = fs.iter().find(|f| f.support_radius() > s.window) {
            return Err(format!("{f} reaches beyond the window {}", s.window));
        }
    }
    let cfg = SampleConfig::for_model(space, s.rho, s.window, s.tail_tol, RngStream::new(s.seed, 0)).map_err(fail)?;
    let samples = sample_many(&cfg, s.samples, s.sampler()?).map_err(fail)?;
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    for (i, f) in fs.iter().enumerate() {
        let label = f.to_string();
        let boot = RngStream::new(s.seed, (1 << 40) + i as u64);
        let r = empirical_report(&samples, f, DEFAULT_RESAMPLES, boot).map_err(fail)?;
        let values = centered_statistics(&samples, f).map_err(fail)?;
        let predicted = r.predicted_variance.unwrap_or(f64::NAN);
        let asym = r.asymptotic_variance.unwrap_or(f64::NAN);
        let normal = normality_test(&values, predicted);
        let cum4 = cumulant_trace(&cfg.spec, f, 4).map_err(fail)?.value;
        let row = |quantity: &str, estimate: f64, error: Option<f64>, prediction: Option<f64>| StatRow {
            model: s.model.clone(),
            rho: s.rho,
            f: label.clone(),
            quantity: quantity.into(),
            estimate,
            error,
            prediction,
        };
        rows.push(row("mean", r.mean.estimate, r.mean.std_error, Some(0.0)));
        rows.push(row("variance", r.variance.estimate, r.variance.std_error, Some(predicted)));
        rows.push(row("cumulant3", r.cumulant3.estimate, r.cumulant3.std_error, r.predicted_cumulant3));
        rows.push(row("cumulant4", r.cumulant4.estimate, r.cumulant4.std_error, Some(cum4)));
        rows.push(row("asymptotic_variance", asym, None, None));
        rows.push(row("variance_ratio", r.variance.estimate / asym, r.variance.std_error.map(|e| e / asym), Some(predicted / asym)));
        rows.push(row("ks_p_value", normal.ks.p_value, None, None));
        rows.push(row("anderson_darling_p_value", normal.anderson_darling.p_value, None, None));
        let tag = format!("f={label}");
        let se = |m: Option<f64>| m.map_or("none".to_string(), |e| e.to_string());
        checks.push(Check::new(format!("mean {tag}"), r.mean.within(0.0, 4.0), format!("{} ± {}", r.mean.estimate, se(r.mean.std_error))));
        checks.push(Check::new(
            format!("variance_vs_trace {tag}"),
            r.variance.within(predicted, 4.0),
            format!("{} ± {} vs {predicted}", r.variance.estimate, se(r.variance.std_error)),
        ));
        checks.push(Check::new(
            format!("variance_vs_asymptotic {tag}"),
            (r.variance.estimate - asym).abs() <= 0.15 * asym,
            format!("{} vs {asym}", r.variance.estimate),
        ));
        checks.push(Check::new(
            format!("anderson_darling {tag}"),
            normal.anderson_darling.passes(0.01),
            format!("p = {}", normal.anderson_darling.p_value),
        ));
        checks.push(Check::new(
            format!("cumulant3 {tag}"),
            r.cumulant3.within(0.0, 3.0),
            format!("{} ± {}", r.cumulant3.estimate, se(r.cumulant3.std_error)),
        ));
    }
    write_csv(csv, &rows)?;
    Ok(Outcome { rows: rows.len(), checks, ranks: vec![TruncationRank { rho: s.rho, rank: cfg.rank() }] })
}

pub fn alpha_cmd(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    let space = s.space();
    let mut rows = Vec::new();
    for &rho in &s.rho_grid {
        let a = alpha(&KernelSpec::full(space, rho).map_err(fail)?).map_err(fail)?;
        rows.push(StatRow {
            model: s.model.clone(),
            rho,
            f: String::new(),
            quantity: "alpha".into(),
            estimate: a.value,
            error: Some(a.error),
            prediction: (space == SpaceKind::Plane).then_some(0.5 / PI),
        });
    }
    write_csv(csv, &rows)?;
    let mut checks = vec![Check::new("finite", rows.iter().all(|r| r.estimate.is_finite()), "α finite on the grid")];
    if space == SpaceKind::Plane {
        let worst = rows.iter().map(|r| (r.estimate - 0.5 / PI).abs()).fold(0.0, f64::max);
        checks.push(Check::new("plane_constant", worst <= 1e-8, format!("max |α − 1/(2π)| = {worst:e}")));
    } else if let [.., a, b] = rows.as_slice() {
        let change = (b.estimate - a.estimate).abs() / a.estimate;
        checks.push(Check::new("settled", change <= 0.05, format!("relative change {change:e} from ρ={} to ρ={}", a.rho, b.rho)));
    }
    Ok(Outcome { rows: rows.len(), checks, ranks: vec![] })
}

pub fn llap(s: &Settings, csv: &Path) -> Result<Outcome, String> {
    let space = s.space();
    let fs = s.test_functions();
    let (mut rows, mut ranks) = (Vec::new(), Vec::new());
    for &rho in &s.rho_grid {
        let spec = KernelSpec::full(space, rho).map_err(fail)?;
        let row = |quantity: String, f: String, estimate: f64, error: Option<f64>| StatRow {
            model: s.model.clone(),
            rho,
            f,
            quantity,
            estimate,
            error,
            prediction: Some(0.0),
        };
        let mut terms = 0;
        for p in 0..=2 {
            let r = llap_residual(&spec, LlapParams { p, b: s.b, b2: s.b2 }).map_err(fail)?;
            terms = terms.max(r.terms);
            rows.push(row(format!("llap_p{p}"), String::new(), r.residual, None));
            rows.push(row(format!("llap_conjugate_p{p}"), String::new(), r.conjugate_residual, None));
        }
        ranks.push(TruncationRank { rho, rank: terms });
        for f in &fs {
            let c = co_residual(&spec, f, s.b).map_err(fail)?;
            rows.push(row("co".into(), f.to_string(), c.value, Some(c.error)));
        }
    }
    write_csv(csv, &rows)?;
    // one decreasing-trend check per (quantity, f) series
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &rows {
        let k = (r.quantity.clone(), r.f.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let checks = keys
        .into_iter()
        .map(|(q, f)| {
            let series: Vec<f64> = rows.iter().filter(|r| r.quantity == q && r.f == f).map(|r| r.estimate).collect();
            let ok = series.windows(2).all(|w| w[1] < w[0]);
            let values: Vec<String> = series.iter().map(|v| format!("{v:e}")).collect();
            let name = if f.is_empty() { format!("decreasing {q}") } else { format!("decreasing {q} f={f}") };
            Check::new(name, ok, values.join(" > "))
        })
        .collect();
    Ok(Outcome { rows: rows.len(), checks, ranks })
}
