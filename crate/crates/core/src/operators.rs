//! Discrete nonlocal gradient, divergence, Laplacian, p-Laplacian and
//! convolution.
//!
//! Every operator reduces over `y_j` in ascending `j` for each output node, so
//! results do not depend on how the outer loop over `x_i` is scheduled.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};
use crate::kernel::KernelTable;
use crate::par::map_nodes;

/// A field on `(Ω ∪ Γ)²`, entry `(i, j, c)` at `(x_i, y_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointField {
    node_count: usize,
    components: usize,
    values: Vec<f64>,
}

impl TwoPointField {
    pub fn new(node_count: usize, components: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != node_count * node_count * components {
            return Err(Error::Shape(format!(
                "{} values for a {node_count}×{node_count}×{components} field",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite two-point field entry".into()));
        }
        Ok(TwoPointField { node_count, components, values })
    }

    fn from_fn(m: usize, n: usize, f: impl Fn(usize, usize, usize) -> f64 + Sync) -> Self {
        let rows = map_nodes(m, |i| {
            let mut row = Vec::with_capacity(m * n);
            for j in 0..m {
                for c in 0..n {
                    row.push(f(i, j, c));
                }
            }
            row
        });
        TwoPointField {
            node_count: m,
            components: n,
            values: rows.concat(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn components(&self) -> usize {
        self.components
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.values[(i * self.node_count + j) * self.components + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `û(x_i, y_j) = u(y_j) − u(x_i)`.
pub fn hat(u: &GridFunction) -> TwoPointField {
    TwoPointField::from_fn(u.rows(), u.components(), |i, j, c| u.get(j, c) - u.get(i, c))
}

/// `G_α[u](x_i, y_j) = (u(y_j) − u(x_i))·α(x_i, y_j)`.
pub fn nonlocal_gradient(u: &GridFunction, alpha: &KernelTable) -> Result<TwoPointField> {
    if alpha.node_count() != u.rows() {
        return Err(Error::Shape(format!(
            "kernel on {} nodes, function on {}",
            alpha.node_count(),
            u.rows()
        )));
    }
    Ok(TwoPointField::from_fn(u.rows(), u.components(), |i, j, c| {
        (u.get(j, c) - u.get(i, c)) * alpha.at(i, j)
    }))
}

/// `D_α[F](x_i) = Σ_j w_j [F(i,j)α(i,j) − F(j,i)α(j,i)]`.
pub fn nonlocal_divergence(field: &TwoPointField, alpha: &KernelTable, domain: &Domain) -> Result<GridFunction> {
    let m = field.node_count();
    domain.check_len(m, "two-point field")?;
    alpha.check_domain(domain)?;
    let n = field.components();
    let w = domain.weights();
    let rows = map_nodes(m, |i| {
        (0..n)
            .map(|c| {
                let mut s = 0.0;
                for j in 0..m {
                    s += w[j] * (field.get(i, j, c) * alpha.at(i, j) - field.get(j, i, c) * alpha.at(j, i));
                }
                s
            })
            .collect::<Vec<_>>()
    });
    Ok(GridFunction::from_raw(m, n, rows.concat()))
}

/// `L_κ[u](x_i) = 2 Σ_j w_j (u_j − u_i) κ(x_i, y_j)`; `κ` plays the role of `|α|²`.
pub fn nonlocal_laplacian(u: &GridFunction, kappa: &KernelTable, domain: &Domain) -> Result<GridFunction> {
    let m = u.rows();
    domain.check_len(m, "grid function")?;
    kappa.check_domain(domain)?;
    let n = u.components();
    let w = domain.weights();
    let rows = map_nodes(m, |i| {
        (0..n)
            .map(|c| {
                let ui = u.get(i, c);
                let mut s = 0.0;
                for j in 0..m {
                    s += w[j] * (u.get(j, c) - ui) * kappa.at(i, j);
                }
                2.0 * s
            })
            .collect::<Vec<_>>()
    });
    Ok(GridFunction::from_raw(m, n, rows.concat()))
}

/// `L^p_μ[u](x_i) = 2 Σ_j w_j |û|^{p−2} û μ(x_i, y_j)^p`, with the integrand
/// taken as zero where `û = 0`.
pub fn nonlocal_p_laplacian(u: &GridFunction, mu: &KernelTable, p: f64, domain: &Domain) -> Result<GridFunction> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p-Laplacian needs p > 1, got {p}")));
    }
    let m = u.rows();
    domain.check_len(m, "grid function")?;
    mu.check_domain(domain)?;
    let n = u.components();
    let w = domain.weights();
    let rows = map_nodes(m, |i| {
        let mut acc = vec![0.0; n];
        for j in 0..m {
            let norm = if n == 1 {
                (u.at(j) - u.at(i)).abs()
            } else {
                (0..n).map(|c| (u.get(j, c) - u.get(i, c)).powi(2)).sum::<f64>().sqrt()
            };
            if norm == 0.0 {
                continue;
            }
            let scale = w[j] * norm.powf(p - 2.0) * mu.at(i, j).abs().powf(p);
            for (c, a) in acc.iter_mut().enumerate() {
                *a += scale * (u.get(j, c) - u.get(i, c));
            }
        }
        acc.into_iter().map(|a| 2.0 * a).collect::<Vec<_>>()
    });
    Ok(GridFunction::from_raw(m, n, rows.concat()))
}

/// `(u∗μ)(x_i) = Σ_j w_j u_j μ(x_i − y_j)`, with `u` and `μ` extended by zero
/// outside the grid.
pub fn convolve(u: &GridFunction, mu: &KernelTable, domain: &Domain) -> Result<GridFunction> {
    if !mu.is_translation_invariant() {
        return Err(Error::Parameter("convolution needs a translation-invariant kernel".into()));
    }
    let m = u.rows();
    domain.check_len(m, "grid function")?;
    mu.check_domain(domain)?;
    let n = u.components();
    let w = domain.weights();
    let rows = map_nodes(m, |i| {
        (0..n)
            .map(|c| {
                let mut s = 0.0;
                for j in 0..m {
                    s += w[j] * u.get(j, c) * mu.offset(i as isize - j as isize);
                }
                s
            })
            .collect::<Vec<_>>()
    });
    Ok(GridFunction::from_raw(m, n, rows.concat()))
}

/// Frequency-domain evaluation of [`convolve`] (zero-padded circular
/// convolution). Agrees with the direct sum to roughly `1e−12·‖w u‖₁‖μ‖∞`.
pub fn convolve_fft(u: &GridFunction, mu: &KernelTable, domain: &Domain) -> Result<GridFunction> {
    if !mu.is_translation_invariant() {
        return Err(Error::Parameter("convolution needs a translation-invariant kernel".into()));
    }
    let m = u.rows();
    domain.check_len(m, "grid function")?;
    mu.check_domain(domain)?;
    let len = (3 * m - 2).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut kernel: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
    for (k, &v) in mu.values().iter().enumerate() {
        kernel[k] = Complex::new(v, 0.0);
    }
    fwd.process(&mut kernel);

    let n = u.components();
    let mut out = vec![0.0; m * n];
    for c in 0..n {
        let mut signal: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
        for j in 0..m {
            signal[j] = Complex::new(domain.weights()[j] * u.get(j, c), 0.0);
        }
        fwd.process(&mut signal);
        for (s, k) in signal.iter_mut().zip(&kernel) {
            *s *= k;
        }
        inv.process(&mut signal);
        // (w u ⋆ μ)[i + M − 1] = Σ_j w_j u_j μ[(i − j) + M − 1]
        for i in 0..m {
            out[i * n + c] = signal[i + m - 1].re / len as f64;
        }
    }
    GridFunction::new(m, n, out)
}

/// Discrete kernel mass seen from each node, `m_i = Σ_j w_j κ(x_i, y_j)`.
///
/// With this mass, `L_μ[u] = 2((u∗μ) − m·u)` holds exactly on the grid.
pub fn row_mass(kappa: &KernelTable, domain: &Domain) -> Result<Vec<f64>> {
    kappa.check_domain(domain)?;
    let m = domain.node_count();
    let w = domain.weights();
    Ok(map_nodes(m, |i| {
        let mut s = 0.0;
        for j in 0..m {
            s += w[j] * kappa.at(i, j);
        }
        s
    }))
}
