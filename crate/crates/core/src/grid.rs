//! Uniform one-dimensional grids over `Ω ∪ Γ`, grid functions and quadrature.
//!
//! The grid spans `[a − δ, b + δ]` where `Ω = (a, b)` and `δ` is the collar
//! width. Every node carries a [`Region`] label and a composite-trapezoid
//! weight, so `Σ w_i` equals the length `b − a + 2δ`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Region label of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Node in the closure of `Ω`.
    Interior,
    /// Collar node with prescribed data (`Γ ∖ Γ′`).
    CollarFixed,
    /// Collar node whose value is an unknown (`Γ′`).
    CollarFree,
}

/// Node subsets used by integration, norms and residual reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionSelector {
    All,
    Interior,
    Collar,
    CollarFixed,
    CollarFree,
    /// `Ω ∪ Γ′`: every node that is not prescribed.
    Free,
}

impl RegionSelector {
    pub fn contains(self, region: Region) -> bool {
        match self {
            RegionSelector::All => true,
            RegionSelector::Interior => region == Region::Interior,
            RegionSelector::Collar => region != Region::Interior,
            RegionSelector::CollarFixed => region == Region::CollarFixed,
            RegionSelector::CollarFree => region == Region::CollarFree,
            RegionSelector::Free => region != Region::CollarFixed,
        }
    }
}

/// Discretized `Ω ∪ Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    a: f64,
    b: f64,
    collar_width: f64,
    spacing: f64,
    nodes: Vec<f64>,
    regions: Vec<Region>,
    weights: Vec<f64>,
    gamma_prime: Vec<(f64, f64)>,
}

impl Domain {
    /// Builds the uniform grid with `node_count` nodes on `[a − δ, b + δ]`.
    ///
    /// Nodes inside any of the `gamma_prime` intervals (which must lie in the
    /// collar band and be pairwise disjoint) are labeled [`Region::CollarFree`].
    pub fn new(
        a: f64,
        b: f64,
        collar_width: f64,
        node_count: usize,
        gamma_prime: &[(f64, f64)],
    ) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Config(format!("need finite a < b, got a = {a}, b = {b}")));
        }
        if !(collar_width.is_finite() && collar_width > 0.0) {
            return Err(Error::Config(format!("collar width must be positive, got {collar_width}")));
        }
        if node_count < 3 {
            return Err(Error::Config(format!("node_count must be at least 3, got {node_count}")));
        }

        let lo = a - collar_width;
        let hi = b + collar_width;
        let spacing = (hi - lo) / (node_count - 1) as f64;
        let tol = 1e-9 * spacing;

        let nodes: Vec<f64> = (0..node_count)
            .map(|k| if k + 1 == node_count { hi } else { lo + k as f64 * spacing })
            .collect();

        // closed collar bands [a − δ, a] and [b, b + δ] must each hold two nodes
        let left = nodes.iter().filter(|&&x| x <= a + tol).count();
        let right = nodes.iter().filter(|&&x| x >= b - tol).count();
        if left < 2 || right < 2 {
            return Err(Error::Config(format!(
                "{node_count} nodes do not resolve the collar of width {collar_width} \
                 ({left} nodes on the left band, {right} on the right)"
            )));
        }

        let mut intervals: Vec<(f64, f64)> = gamma_prime.to_vec();
        intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
        for &(s, e) in &intervals {
            if !(s.is_finite() && e.is_finite() && s <= e) {
                return Err(Error::Config(format!("invalid free-collar interval [{s}, {e}]")));
            }
            let in_left = s >= lo - tol && e <= a + tol;
            let in_right = s >= b - tol && e <= hi + tol;
            if !(in_left || in_right) {
                return Err(Error::Config(format!(
                    "free-collar interval [{s}, {e}] is not inside the collar band"
                )));
            }
        }
        for pair in intervals.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return Err(Error::Config(format!(
                    "free-collar intervals [{}, {}] and [{}, {}] overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }

        let regions = nodes
            .iter()
            .map(|&x| {
                if x >= a - tol && x <= b + tol {
                    Region::Interior
                } else if intervals.iter().any(|&(s, e)| x >= s - tol && x <= e + tol) {
                    Region::CollarFree
                } else {
                    Region::CollarFixed
                }
            })
            .collect();

        let mut weights = vec![spacing; node_count];
        weights[0] = 0.5 * spacing;
        weights[node_count - 1] = 0.5 * spacing;

        Ok(Domain {
            a,
            b,
            collar_width,
            spacing,
            nodes,
            regions,
            weights,
            gamma_prime: intervals,
        })
    }

    /// Same geometry with `2M − 1` nodes (every old node is kept).
    pub fn refined(&self) -> Result<Self> {
        Domain::new(
            self.a,
            self.b,
            self.collar_width,
            2 * self.node_count() - 1,
            &self.gamma_prime,
        )
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn collar_width(&self) -> f64 {
        self.collar_width
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, i: usize) -> Region {
        self.regions[i]
    }

    pub fn gamma_prime(&self) -> &[(f64, f64)] {
        &self.gamma_prime
    }

    /// Left end of the grid, `a − δ`.
    pub fn origin(&self) -> f64 {
        self.nodes[0]
    }

    /// Discrete measure of `Ω ∪ Γ`.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.regions[i] == Region::CollarFixed
    }

    /// Indices of nodes in `selector`, ascending.
    pub fn indices(&self, selector: RegionSelector) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| selector.contains(self.regions[i]))
            .collect()
    }

    pub fn count(&self, selector: RegionSelector) -> usize {
        self.regions.iter().filter(|&&r| selector.contains(r)).count()
    }

    /// Index of the node nearest to `x`, if `x` lies on the grid span.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let k = ((x - self.origin()) / self.spacing).round();
        if k < 0.0 || k > (self.node_count() - 1) as f64 {
            None
        } else {
            Some(k as usize)
        }
    }

    pub(crate) fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len == self.node_count() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what} has {len} rows, domain has {} nodes",
                self.node_count()
            )))
        }
    }
}

/// Values of an `N`-component function at the grid nodes, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    rows: usize,
    components: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(rows: usize, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Shape("a grid function needs at least one component".into()));
        }
        if values.len() != rows * components {
            return Err(Error::Shape(format!(
                "{} values for {rows} rows of {components} components",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite value at row {}, component {}",
                k / components,
                k % components
            )));
        }
        Ok(GridFunction { rows, components, values })
    }

    /// Scalar (`N = 1`) grid function.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        let rows = values.len();
        GridFunction::new(rows, 1, values)
    }

    pub fn zeros(domain: &Domain) -> Self {
        GridFunction {
            rows: domain.node_count(),
            components: 1,
            values: vec![0.0; domain.node_count()],
        }
    }

    pub fn constant(domain: &Domain, c: f64) -> Result<Self> {
        GridFunction::scalar(vec![c; domain.node_count()])
    }

    /// Samples `f` at every node.
    pub fn from_fn(domain: &Domain, f: impl Fn(f64) -> f64) -> Result<Self> {
        GridFunction::scalar(domain.nodes().iter().map(|&x| f(x)).collect())
    }

    pub(crate) fn from_raw(rows: usize, components: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * components);
        GridFunction { rows, components, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.components..(i + 1) * self.components]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.components + c]
    }

    /// Value of the first component at node `i`.
    pub fn at(&self, i: usize) -> f64 {
        self.values[i * self.components]
    }

    /// Column `c` as a contiguous vector.
    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, c)).collect()
    }

    /// Pointwise Euclidean magnitude of each row.
    pub fn magnitudes(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                if self.components == 1 {
                    self.at(i).abs()
                } else {
                    self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
                }
            })
            .collect()
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub(crate) fn require_scalar(&self, what: &str) -> Result<()> {
        if self.is_scalar() {
            Ok(())
        } else {
            Err(Error::Data(format!(
                "{what} supports scalar grid functions only, got {} components",
                self.components
            )))
        }
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.rows != other.rows || self.components != other.components {
            return Err(Error::Shape("grid functions of different shapes".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        GridFunction::new(self.rows, self.components, values)
    }

    /// Largest absolute entrywise difference over the nodes in `selector`.
    pub fn max_abs_diff(&self, other: &GridFunction, domain: &Domain, selector: RegionSelector) -> f64 {
        domain
            .indices(selector)
            .into_iter()
            .flat_map(|i| {
                self.row(i)
                    .iter()
                    .zip(other.row(i))
                    .map(|(x, y)| (x - y).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }
}

/// Quadrature `Σ w_i field_i` over the nodes in `selector`.
pub fn integrate(field: &[f64], domain: &Domain, selector: RegionSelector) -> Result<f64> {
    domain.check_len(field.len(), "field")?;
    let mut sum = 0.0;
    for (i, (&v, &w)) in field.iter().zip(domain.weights()).enumerate() {
        if selector.contains(domain.region(i)) {
            sum += w * v;
        }
    }
    Ok(sum)
}

/// Discrete `L^p` norm `(Σ w_i |u_i|^p)^{1/p}` over `selector`.
pub fn lp_norm(u: &GridFunction, p: f64, domain: &Domain, selector: RegionSelector) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    domain.check_len(u.rows(), "grid function")?;
    let powered: Vec<f64> = u.magnitudes().into_iter().map(|m| m.powf(p)).collect();
    Ok(integrate(&powered, domain, selector)?.powf(1.0 / p))
}

/// `max |u_i|` over `selector` (zero for an empty selection).
pub fn linf_norm(u: &GridFunction, domain: &Domain, selector: RegionSelector) -> Result<f64> {
    domain.check_len(u.rows(), "grid function")?;
    Ok(u
        .magnitudes()
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| selector.contains(domain.region(i)))
        .map(|(_, m)| m)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_node_grid() {
        let d = Domain::new(0.0, 1.0, 0.5, 5, &[]).unwrap();
        assert_eq!(d.nodes(), &[-0.5, 0.0, 0.5, 1.0, 1.5]);
        assert_eq!(
            d.regions(),
            &[
                Region::CollarFixed,
                Region::Interior,
                Region::Interior,
                Region::Interior,
                Region::CollarFixed
            ]
        );
        assert_eq!(d.weights().iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn wide_collar_grid() {
        let d = Domain::new(-1.0, 1.0, 3.0, 401, &[]).unwrap();
        assert_eq!(d.origin(), -4.0);
        assert_eq!(d.x(400), 4.0);
        assert_eq!(d.count(RegionSelector::CollarFree), 0);
        assert_eq!(d.count(RegionSelector::Interior), 101);
        assert!((d.measure() - 8.0).abs() <= 1e-12 * 8.0);
    }

    #[test]
    fn partition_counts() {
        let d = Domain::new(0.0, 2.0, 1.0, 41, &[(-1.0, -0.5), (2.5, 3.0)]).unwrap();
        let total = d.count(RegionSelector::Interior)
            + d.count(RegionSelector::CollarFixed)
            + d.count(RegionSelector::CollarFree);
        assert_eq!(total, 41);
        assert_eq!(d.count(RegionSelector::CollarFree), 12);
        assert_eq!(d.region(0), Region::CollarFree);
        assert_eq!(d.region(6), Region::CollarFixed);
    }

    #[test]
    fn rejects_bad_configuration() {
        assert!(matches!(Domain::new(1.0, 0.0, 0.5, 5, &[]), Err(Error::Config(_))));
        assert!(matches!(Domain::new(0.0, 1.0, 0.0, 5, &[]), Err(Error::Config(_))));
        assert!(matches!(Domain::new(0.0, 1.0, 0.5, 2, &[]), Err(Error::Config(_))));
        // collar of width 0.1 on a grid with spacing 0.3 has one node per band
        assert!(matches!(Domain::new(0.0, 1.0, 0.1, 5, &[]), Err(Error::Config(_))));
        // free interval reaching into Ω
        assert!(matches!(
            Domain::new(0.0, 1.0, 0.5, 11, &[(-0.5, 0.2)]),
            Err(Error::Config(_))
        ));
        // overlapping free intervals
        assert!(matches!(
            Domain::new(0.0, 1.0, 0.5, 11, &[(-0.5, -0.2), (-0.3, -0.1)]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn quadrature_basics() {
        let d = Domain::new(-1.0, 1.0, 3.0, 401, &[]).unwrap();
        let ones = vec![1.0; d.node_count()];
        assert!((integrate(&ones, &d, RegionSelector::All).unwrap() - 8.0).abs() < 1e-12);
        let xs = d.nodes().to_vec();
        assert!(integrate(&xs, &d, RegionSelector::All).unwrap().abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_second_order() {
        // ∫ x² over [-0.5, 1.5] is 7/6
        let errors: Vec<f64> = [21usize, 41, 81]
            .iter()
            .map(|&m| {
                let d = Domain::new(0.0, 1.0, 0.5, m, &[]).unwrap();
                let f: Vec<f64> = d.nodes().iter().map(|x| x * x).collect();
                (integrate(&f, &d, RegionSelector::All).unwrap() - 7.0 / 6.0).abs()
            })
            .collect();
        assert!((errors[0] / errors[1] - 4.0).abs() < 1e-6, "{errors:?}");
        assert!((errors[1] / errors[2] - 4.0).abs() < 1e-6, "{errors:?}");
    }

    #[test]
    fn norms() {
        let d = Domain::new(-1.0, 1.0, 3.0, 401, &[]).unwrap();
        let zero = GridFunction::zeros(&d);
        assert_eq!(lp_norm(&zero, 1.5, &d, RegionSelector::All).unwrap(), 0.0);
        let two = GridFunction::constant(&d, 2.0).unwrap();
        let n = lp_norm(&two, 2.0, &d, RegionSelector::All).unwrap();
        assert!((n - 2.0 * 8f64.sqrt()).abs() < 1e-12);

        let d5 = Domain::new(0.0, 1.0, 0.5, 5, &[]).unwrap();
        let u = GridFunction::scalar(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(linf_norm(&u, &d5, RegionSelector::All).unwrap(), 4.0);
        assert!(matches!(lp_norm(&u, 0.5, &d5, RegionSelector::All), Err(Error::Parameter(_))));
    }

    #[test]
    fn grid_function_rejects_non_finite() {
        assert!(matches!(GridFunction::scalar(vec![0.0, f64::NAN]), Err(Error::Data(_))));
        assert!(matches!(GridFunction::new(2, 2, vec![0.0; 3]), Err(Error::Shape(_))));
    }
}
