//! Browser bindings: the arctan semilinear solve, nonlocal (p-)Laplacians of
//! a few sample shapes, and the forced-norm growth under refinement.

use nonloc_core::grid::{Domain, GridFunction, RegionSelector};
use nonloc_core::kernel::{sample_kernel, KernelSpec};
use nonloc_core::operators::{nonlocal_laplacian, nonlocal_p_laplacian};
use nonloc_core::presets::{interior_residual, preset_on, solve_preset, PresetSolveOptions};
use nonloc_core::semilinear::forced_l1_bounds;
use wasm_bindgen::prelude::*;

/// Sampled curve with a couple of scalar diagnostics.
#[wasm_bindgen]
pub struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    interior: Vec<u8>,
    residual: f64,
    iterations: usize,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    /// 1 where the node lies in the interval, 0 in the collar.
    #[wasm_bindgen(getter)]
    pub fn interior(&self) -> Vec<u8> {
        self.interior.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn residual(&self) -> f64 {
        self.residual
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn js(e: nonloc_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn curve(domain: &Domain, y: &GridFunction, residual: f64, iterations: usize) -> Curve {
    let inside = domain.indices(RegionSelector::Interior);
    let mut interior = vec![0u8; domain.node_count()];
    for i in inside {
        interior[i] = 1;
    }
    Curve { x: domain.nodes().to_vec(), y: y.component(0), interior, residual, iterations }
}

/// Solves `L_μ[u] = arctan(u) − h` on `(−1, 1)` with a Gaussian of width `sigma`.
#[wasm_bindgen]
pub fn solve_arctan(sigma: f64, node_count: usize) -> Result<Curve, JsError> {
    let kernel = KernelSpec::Gaussian { sigma };
    let domain = Domain::new(-1.0, 1.0, 3.0 * sigma, node_count, &[]).map_err(js)?;
    let p = preset_on("arctan_semilinear", domain, &kernel).map_err(js)?;
    let solve = solve_preset(&p, &PresetSolveOptions::default()).map_err(js)?;
    let res = interior_residual(&p, solve.solution()).map_err(js)?;
    Ok(curve(&p.domain, solve.solution(), res, solve.iterations()))
}

fn shape(name: &str, x: f64) -> Option<f64> {
    Some(match name {
        "square" => x * x,
        "sine" => (std::f64::consts::PI * x).sin(),
        "abs" => x.abs(),
        "step" => if x < 0.0 { 0.0 } else { 1.0 },
        _ => return None,
    })
}

/// Applies the nonlocal p-Laplacian (`p = 2` gives the plain Laplacian) to
/// one of `square`, `sine`, `abs` or `step` on `(−1, 1)`.
#[wasm_bindgen]
pub fn apply_laplacian(name: &str, sigma: f64, p: f64, node_count: usize) -> Result<Curve, JsError> {
    if shape(name, 0.0).is_none() {
        return Err(JsError::new(&format!("unknown shape '{name}'")));
    }
    let domain = Domain::new(-1.0, 1.0, 3.0 * sigma, node_count, &[]).map_err(js)?;
    let mu = sample_kernel(&KernelSpec::Gaussian { sigma }, &domain).map_err(js)?;
    let u = GridFunction::from_fn(&domain, |x| shape(name, x).unwrap_or(0.0)).map_err(js)?;
    let out = if p == 2.0 {
        nonlocal_laplacian(&u, &mu, &domain)
    } else {
        nonlocal_p_laplacian(&u, &mu, p, &domain)
    }
    .map_err(js)?;
    Ok(curve(&domain, &out, 0.0, 0))
}

/// Lower bounds on `‖u‖₁` forced by a spiky source over `levels` refinements.
#[wasm_bindgen]
pub fn forced_bounds(sigma: f64, levels: usize) -> Result<Vec<f64>, JsError> {
    let domain = Domain::new(-1.0, 1.0, 3.0 * sigma, 41, &[]).map_err(js)?;
    forced_l1_bounds(&domain, &KernelSpec::Gaussian { sigma }, levels).map_err(js)
}
