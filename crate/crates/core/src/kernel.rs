//! Sampled interaction kernels.
//!
//! A translation-invariant kernel `μ(y − x)` is stored on the difference grid
//! `z_k = (k − (M − 1))·h`, `k = 0..2M−1`; a two-point kernel `α(x, y)` is a
//! full `M × M` table. Lookups outside the table return zero, which is the
//! zero extension used by the convolution.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Domain;

/// How a kernel is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `μ(z) = exp(−(z/σ)²) / (σ√π)`, unit mass on the real line.
    Gaussian { sigma: f64 },
    /// `μ(z) = value` for `|z| ≤ horizon`, zero beyond.
    Constant { value: f64, horizon: f64 },
    /// CSV file with header `z,mu` on the difference grid.
    Table { file: PathBuf },
    /// CSV file with header `i,j,alpha`.
    TwoPoint { file: PathBuf },
}

impl KernelSpec {
    /// Closed-form value at offset `z`, when the kernel has one.
    pub fn analytic(&self, z: f64) -> Option<f64> {
        match *self {
            KernelSpec::Gaussian { sigma } => Some(gaussian(z, sigma)),
            KernelSpec::Constant { value, horizon } => Some(if z.abs() <= horizon { value } else { 0.0 }),
            _ => None,
        }
    }
}

fn gaussian(z: f64, sigma: f64) -> f64 {
    let s = z / sigma;
    (-s * s).exp() / (sigma * PI.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
enum Samples {
    TranslationInvariant { offsets: Vec<f64>, values: Vec<f64> },
    TwoPoint { values: Vec<f64> },
}

/// A kernel sampled on a particular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTable {
    node_count: usize,
    spacing: f64,
    origin: f64,
    samples: Samples,
    nonneg: bool,
    symmetric: bool,
}

impl KernelTable {
    /// Translation-invariant table from `2M − 1` samples on the difference grid.
    pub fn translation_invariant(domain: &Domain, offsets: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let m = domain.node_count();
        if offsets.len() != 2 * m - 1 || values.len() != 2 * m - 1 {
            return Err(Error::Shape(format!(
                "translation-invariant kernel needs {} samples, got {}",
                2 * m - 1,
                values.len()
            )));
        }
        let h = domain.spacing();
        for (k, &z) in offsets.iter().enumerate() {
            let expected = (k as f64 - (m - 1) as f64) * h;
            if (z - expected).abs() > 1e-9 * h {
                return Err(Error::Data(format!(
                    "kernel offset {z} at row {k} is not on the difference grid (expected {expected})"
                )));
            }
        }
        check_finite(&values)?;
        let nonneg = values.iter().all(|&v| v >= 0.0);
        let symmetric = (0..values.len()).all(|k| values[k] == values[values.len() - 1 - k]);
        Ok(KernelTable {
            node_count: m,
            spacing: h,
            origin: domain.origin(),
            samples: Samples::TranslationInvariant { offsets, values },
            nonneg,
            symmetric,
        })
    }

    /// Two-point table, row-major `α(x_i, y_j)`.
    pub fn two_point(domain: &Domain, values: Vec<f64>) -> Result<Self> {
        let m = domain.node_count();
        if values.len() != m * m {
            return Err(Error::Shape(format!(
                "two-point kernel needs {} samples, got {}",
                m * m,
                values.len()
            )));
        }
        check_finite(&values)?;
        let nonneg = values.iter().all(|&v| v >= 0.0);
        let symmetric = (0..m).all(|i| (0..i).all(|j| values[i * m + j] == values[j * m + i]));
        Ok(KernelTable {
            node_count: m,
            spacing: domain.spacing(),
            origin: domain.origin(),
            samples: Samples::TwoPoint { values },
            nonneg,
            symmetric,
        })
    }

    /// Two-point table from a function of `(x, z = y − x)`.
    pub fn from_fn(domain: &Domain, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = domain.nodes();
        let values = xs
            .iter()
            .flat_map(|&x| xs.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y - x))
            .collect();
        KernelTable::two_point(domain, values)
    }

    /// Translation-invariant table from a function of the offset `z`.
    pub fn from_offset_fn(domain: &Domain, f: impl Fn(f64) -> f64) -> Result<Self> {
        let offsets = difference_grid(domain);
        let values = offsets.iter().map(|&z| f(z)).collect();
        KernelTable::translation_invariant(domain, offsets, values)
    }

    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.samples, Samples::TranslationInvariant { .. })
    }

    pub fn nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `α(x_i, y_j)`; for a translation-invariant kernel this is `μ(x_j − x_i)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match &self.samples {
            Samples::TranslationInvariant { values, .. } => values[j + self.node_count - 1 - i],
            Samples::TwoPoint { values } => values[i * self.node_count + j],
        }
    }

    /// Sample at offset index `k − (M − 1)`, i.e. `μ(k·h)` for `k ∈ −(M−1)..=(M−1)`.
    #[inline]
    pub fn offset(&self, k: isize) -> f64 {
        match &self.samples {
            Samples::TranslationInvariant { values, .. } => {
                let idx = k + self.node_count as isize - 1;
                if idx < 0 || idx as usize >= values.len() {
                    0.0
                } else {
                    values[idx as usize]
                }
            }
            Samples::TwoPoint { .. } => panic!("offset lookup on a two-point kernel"),
        }
    }

    /// Nearest-sample evaluation at a point `x` and offset `z`, zero off the grid.
    pub fn eval(&self, x: f64, z: f64) -> f64 {
        let h = self.spacing;
        match &self.samples {
            Samples::TranslationInvariant { .. } => self.offset((z / h).round() as isize),
            Samples::TwoPoint { values } => {
                let i = ((x - self.origin) / h).round();
                let j = ((x + z - self.origin) / h).round();
                let m = self.node_count as f64;
                if i < 0.0 || j < 0.0 || i >= m || j >= m {
                    0.0
                } else {
                    values[i as usize * self.node_count + j as usize]
                }
            }
        }
    }

    /// Raw samples: difference-grid values or the row-major two-point table.
    pub fn values(&self) -> &[f64] {
        match &self.samples {
            Samples::TranslationInvariant { values, .. } => values,
            Samples::TwoPoint { values } => values,
        }
    }

    /// Difference-grid offsets of a translation-invariant table.
    pub fn offsets(&self) -> Option<&[f64]> {
        match &self.samples {
            Samples::TranslationInvariant { offsets, .. } => Some(offsets),
            Samples::TwoPoint { .. } => None,
        }
    }

    pub fn sup(&self) -> f64 {
        self.values().iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Trapezoid quadrature of `μ` over the difference grid.
    pub fn mass(&self) -> Result<f64> {
        match &self.samples {
            Samples::TranslationInvariant { values, .. } => {
                let n = values.len();
                let inner: f64 = values.iter().sum();
                Ok(self.spacing * (inner - 0.5 * (values[0] + values[n - 1])))
            }
            Samples::TwoPoint { .. } => Err(Error::Parameter(
                "mass is defined for translation-invariant kernels only".into(),
            )),
        }
    }

    /// Pointwise transform of every sample (e.g. `μ ↦ μ²`).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<KernelTable> {
        let values: Vec<f64> = self.values().iter().map(|&v| f(v)).collect();
        check_finite(&values)?;
        let mut out = self.clone();
        out.nonneg = values.iter().all(|&v| v >= 0.0);
        out.symmetric = match &self.samples {
            Samples::TranslationInvariant { .. } => {
                (0..values.len()).all(|k| values[k] == values[values.len() - 1 - k])
            }
            Samples::TwoPoint { .. } => {
                let m = self.node_count;
                (0..m).all(|i| (0..i).all(|j| values[i * m + j] == values[j * m + i]))
            }
        };
        match &mut out.samples {
            Samples::TranslationInvariant { values: v, .. } | Samples::TwoPoint { values: v } => *v = values,
        }
        Ok(out)
    }

    pub(crate) fn check_domain(&self, domain: &Domain) -> Result<()> {
        if self.node_count != domain.node_count() {
            return Err(Error::Shape(format!(
                "kernel sampled on {} nodes, domain has {}",
                self.node_count,
                domain.node_count()
            )));
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::Data(format!("non-finite kernel sample at index {k}"))),
        None => Ok(()),
    }
}

/// Offsets `−(M−1)h, …, (M−1)h`.
pub fn difference_grid(domain: &Domain) -> Vec<f64> {
    let m = domain.node_count() as isize;
    let h = domain.spacing();
    (-(m - 1)..m).map(|k| k as f64 * h).collect()
}

/// Samples `spec` on `domain`.
pub fn sample_kernel(spec: &KernelSpec, domain: &Domain) -> Result<KernelTable> {
    match spec {
        KernelSpec::Gaussian { sigma } => {
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::Parameter(format!("gaussian width must be positive, got {sigma}")));
            }
            KernelTable::from_offset_fn(domain, |z| gaussian(z, *sigma))
        }
        KernelSpec::Constant { value, horizon } => {
            if !(*horizon >= 0.0) {
                return Err(Error::Parameter(format!("horizon must be nonnegative, got {horizon}")));
            }
            let h = domain.spacing();
            let m = domain.node_count() as isize;
            let offsets = difference_grid(domain);
            // compare on the integer offset so that |z| = horizon is included exactly
            let values = (-(m - 1)..m)
                .map(|k| {
                    if (k.unsigned_abs() as f64) * h <= horizon * (1.0 + 1e-12) {
                        *value
                    } else {
                        0.0
                    }
                })
                .collect();
            KernelTable::translation_invariant(domain, offsets, values)
        }
        KernelSpec::Table { file } => {
            let (offsets, values) = crate::io::read_kernel_table(file)?;
            KernelTable::translation_invariant(domain, offsets, values)
        }
        KernelSpec::TwoPoint { file } => {
            let values = crate::io::read_two_point_kernel(file, domain.node_count())?;
            KernelTable::two_point(domain, values)
        }
    }
}
