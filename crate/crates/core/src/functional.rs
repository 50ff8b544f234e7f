//! Double-integral energies `E[u] = ∫∫ f(x, y−x, u(x), u(y)−u(x)) dy dx`, their
//! first variation and the Euler–Lagrange residual.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction, Region};
use crate::kernel::KernelTable;
use crate::par::map_nodes;

/// Pointwise callable `(x, z, u, ξ) ↦ value`.
pub type PointFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// A scalar integrand `f(x, z, u, ξ)` with its partial derivatives in `u` and `ξ`.
///
/// The callables must be stateless: assembly evaluates them concurrently.
#[derive(Clone)]
pub struct Integrand {
    eval: PointFn,
    du: PointFn,
    dxi: PointFn,
    /// Exponent of the `|ξ|` growth, if declared.
    pub p: Option<f64>,
    /// Exponent of the `|u|` growth, if declared.
    pub q: Option<f64>,
    pub claims_convex: bool,
    pub claims_coercive: bool,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("claims_convex", &self.claims_convex)
            .field("claims_coercive", &self.claims_coercive)
            .finish_non_exhaustive()
    }
}

impl Integrand {
    pub fn new(
        eval: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        du: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        dxi: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Integrand {
            eval: Arc::new(eval),
            du: Arc::new(du),
            dxi: Arc::new(dxi),
            p: None,
            q: None,
            claims_convex: false,
            claims_coercive: false,
        }
    }

    pub fn with_exponents(mut self, p: Option<f64>, q: Option<f64>) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn with_claims(mut self, convex: bool, coercive: bool) -> Self {
        self.claims_convex = convex;
        self.claims_coercive = coercive;
        self
    }

    /// `f = ξ²·κ(x, z)`, whose residual is `−2·L_κ[u]`.
    pub fn quadratic(kappa: &KernelTable) -> Self {
        let k1 = Arc::new(kappa.clone());
        let k2 = Arc::clone(&k1);
        Integrand::new(
            move |x, z, _, xi| xi * xi * k1.eval(x, z),
            |_, _, _, _| 0.0,
            move |x, z, _, xi| 2.0 * xi * k2.eval(x, z),
        )
        .with_exponents(Some(2.0), None)
        .with_claims(true, false)
    }

    #[inline]
    pub fn eval(&self, x: f64, z: f64, u: f64, xi: f64) -> f64 {
        (self.eval)(x, z, u, xi)
    }

    #[inline]
    pub fn du(&self, x: f64, z: f64, u: f64, xi: f64) -> f64 {
        (self.du)(x, z, u, xi)
    }

    #[inline]
    pub fn dxi(&self, x: f64, z: f64, u: f64, xi: f64) -> f64 {
        (self.dxi)(x, z, u, xi)
    }

    /// Negation of the integrand and its derivatives; claims are dropped.
    pub fn negated(&self) -> Self {
        let (e, a, b) = (self.eval.clone(), self.du.clone(), self.dxi.clone());
        Integrand::new(
            move |x, z, u, xi| -e(x, z, u, xi),
            move |x, z, u, xi| -a(x, z, u, xi),
            move |x, z, u, xi| -b(x, z, u, xi),
        )
    }
}

fn prepare(u: &GridFunction, domain: &Domain) -> Result<()> {
    u.require_scalar("energy evaluation")?;
    domain.check_len(u.rows(), "grid function")
}

fn finite(v: f64, i: usize, j: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { i, j })
    }
}

/// Sums per-node partial results in node order.
fn ordered_sum(parts: Vec<Result<f64>>) -> Result<f64> {
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// `Σ_i Σ_j w_i w_j f(x_i, x_j − x_i, u_i, u_j − u_i)`.
pub fn energy(u: &GridFunction, f: &Integrand, domain: &Domain) -> Result<f64> {
    prepare(u, domain)?;
    let x = domain.nodes();
    let w = domain.weights();
    let v = u.values();
    let m = v.len();
    let rows = map_nodes(m, |i| {
        let mut s = 0.0;
        for j in 0..m {
            s += w[j] * finite(f.eval(x[i], x[j] - x[i], v[i], v[j] - v[i]), i, j)?;
        }
        Ok(w[i] * s)
    });
    ordered_sum(rows)
}

fn require_admissible(phi: &GridFunction, domain: &Domain) -> Result<()> {
    for i in domain.indices(crate::grid::RegionSelector::CollarFixed) {
        if phi.at(i) != 0.0 {
            return Err(Error::Precondition(format!(
                "variation is {} at fixed collar node {i} (x = {})",
                phi.at(i),
                domain.x(i)
            )));
        }
    }
    Ok(())
}

/// First variation `d/dε E[u + εφ]` at `ε = 0`:
/// `Σ_i Σ_j w_i w_j [φ_i ∂_u f + (φ_j − φ_i) ∂_ξ f]`.
///
/// `φ` must vanish on the fixed part of the collar.
pub fn gateaux(u: &GridFunction, phi: &GridFunction, f: &Integrand, domain: &Domain) -> Result<f64> {
    prepare(u, domain)?;
    prepare(phi, domain)?;
    require_admissible(phi, domain)?;
    directional_derivative(u, phi, f, domain)
}

/// Same sum as [`gateaux`] without the admissibility check on `φ`.
pub(crate) fn directional_derivative(u: &GridFunction, phi: &GridFunction, f: &Integrand, domain: &Domain) -> Result<f64> {
    let x = domain.nodes();
    let w = domain.weights();
    let v = u.values();
    let p = phi.values();
    let m = v.len();
    let rows = map_nodes(m, |i| {
        let mut s = 0.0;
        for j in 0..m {
            let (z, xi) = (x[j] - x[i], v[j] - v[i]);
            let fu = finite(f.du(x[i], z, v[i], xi), i, j)?;
            let fxi = finite(f.dxi(x[i], z, v[i], xi), i, j)?;
            s += w[j] * (p[i] * fu + (p[j] - p[i]) * fxi);
        }
        Ok(w[i] * s)
    });
    ordered_sum(rows)
}

/// Per-node residual `r_i = Σ_j w_j [∂_u f(i,j) − ∂_ξ f(i,j) + ∂_ξ f(j,i)]`, where
/// `(i,j)` stands for the arguments `(x_i, x_j − x_i, u_i, u_j − u_i)`.
///
/// For every `φ` vanishing on the fixed collar, `Σ_i w_i φ_i r_i` equals
/// [`gateaux`]. Entries on fixed collar nodes are set to zero.
pub fn weak_residual_vector(u: &GridFunction, f: &Integrand, domain: &Domain) -> Result<GridFunction> {
    prepare(u, domain)?;
    let x = domain.nodes();
    let w = domain.weights();
    let v = u.values();
    let m = v.len();

    // ∂_ξ f(i, j) for every pair, and the row sums of ∂_u f
    let rows = map_nodes(m, |i| -> Result<(Vec<f64>, f64)> {
        let mut fxi = Vec::with_capacity(m);
        let mut su = 0.0;
        for j in 0..m {
            let (z, xi) = (x[j] - x[i], v[j] - v[i]);
            su += w[j] * finite(f.du(x[i], z, v[i], xi), i, j)?;
            fxi.push(finite(f.dxi(x[i], z, v[i], xi), i, j)?);
        }
        Ok((fxi, su))
    });
    let mut table = Vec::with_capacity(m * m);
    let mut su = Vec::with_capacity(m);
    for row in rows {
        let (fxi, s) = row?;
        table.extend(fxi);
        su.push(s);
    }

    let regions = domain.regions();
    let r = map_nodes(m, |i| {
        if regions[i] == Region::CollarFixed {
            return 0.0;
        }
        let mut s = 0.0;
        for j in 0..m {
            s += w[j] * (table[j * m + i] - table[i * m + j]);
        }
        su[i] + s
    });
    Ok(GridFunction::from_raw(m, 1, r))
}

/// Strong Euler–Lagrange residual on `Ω ∪ Γ′`; identical to [`weak_residual_vector`].
pub fn strong_el_residual(u: &GridFunction, f: &Integrand, domain: &Domain) -> Result<GridFunction> {
    weak_residual_vector(u, f, domain)
}
