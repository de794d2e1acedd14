//! Browser bindings for the demo page in `www/`.

use wasm_bindgen::prelude::*;

use invariant_dpp::numerics::RngStream;
use invariant_dpp::sampler::{sample_projection, SampleConfig};
use invariant_dpp::statistics::test_functions::TestFunction;
use invariant_dpp::statistics::traces::variance_trace;
use invariant_dpp::{KernelSpec, SpaceKind};

const TAIL_TOL: f64 = 1e-10;

fn space(model: &str) -> Result<SpaceKind, String> {
    SpaceKind::ALL
        .into_iter()
        .find(|k| k.name() == model)
        .ok_or_else(|| format!("unknown model {model:?}"))
}

/// One sample as interleaved `re, im` pairs.
pub fn sample(model: &str, rho: f64, window: f64, seed: u32) -> Result<Vec<f64>, String> {
    let cfg = SampleConfig::for_model(space(model)?, rho, window, TAIL_TOL, RngStream::new(seed as u64, 0))
        .map_err(|e| e.to_string())?;
    let s = sample_projection(&cfg).map_err(|e| e.to_string())?;
    Ok(s.points.iter().flat_map(|z| [z.re, z.im]).collect())
}

/// `|K^ι(0, r)|²` at `n` radii spread over `[0, r_max]`.
pub fn profile(model: &str, rho: f64, r_max: f64, n: usize) -> Result<Vec<f64>, String> {
    let spec = KernelSpec::full(space(model)?, rho).map_err(|e| e.to_string())?;
    let step = r_max / (n.max(2) - 1) as f64;
    Ok((0..n).map(|i| spec.invariant_profile_sq(i as f64 * step)).collect())
}

/// Trace-formula variance of the statistic of `f` at each `ρ`.
pub fn variances(model: &str, f: &str, rhos: &[f64]) -> Result<Vec<f64>, String> {
    let space = space(model)?;
    let f: TestFunction = f.parse().map_err(|e: invariant_dpp::Error| e.to_string())?;
    rhos.iter()
        .map(|&rho| {
            let spec = KernelSpec::full(space, rho).map_err(|e| e.to_string())?;
            variance_trace(&spec, &f).map(|v| v.value).map_err(|e| e.to_string())
        })
        .collect()
}

#[wasm_bindgen]
pub fn sample_points(model: &str, rho: f64, window: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    sample(model, rho, window, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn kernel_profile(model: &str, rho: f64, r_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    profile(model, rho, r_max, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn variance_curve(model: &str, f: &str, rhos: Vec<f64>) -> Result<Vec<f64>, JsError> {
    variances(model, f, &rhos).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_has_rank_many_points() {
        assert_eq!(sample("sphere", 12.0, 0.0, 3).unwrap().len(), 24);
        assert!(sample("cube", 12.0, 0.0, 3).is_err());
    }

    #[test]
    fn profile_starts_at_squared_intensity() {
        let p = profile("plane", 4.0, 2.0, 21).unwrap();
        assert!((p[0] - (4.0 / std::f64::consts::PI).powi(2)).abs() < 1e-12);
        assert!(p.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn variance_curve_rises_towards_limit() {
        let v = variances("plane", "bump:1", &[4.0, 16.0, 64.0]).unwrap();
        assert!(v.windows(2).all(|w| w[1] > w[0] && w[1] < 2.0 / 7.0));
    }
}
