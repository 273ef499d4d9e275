//! Measure types: compact box domains, weighted point clouds, grid densities
//! and 1-D quantile tables.

use crate::constants::{GRID_MASS_TOL, MASS_TOL, SUPPORT_TOL};
use crate::{Error, Result};

/// Compact axis-aligned box `[lower_1, upper_1] x ... x [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidDomain(format!(
                "lower/upper length mismatch: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for k in 0..lower.len() {
            if !(lower[k] < upper[k]) || !lower[k].is_finite() || !upper[k].is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "axis {k}: need lower < upper, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The interval `[lo, hi]` as a 1-D domain.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// The unit box `[0, 1]^d`.
    pub fn unit(dim: usize) -> Self {
        Self::new(vec![0.0; dim], vec![1.0; dim]).expect("unit box is valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Squared diameter of the box.
    pub fn diameter_sq(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k).powi(2)).sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(k, &v)| {
                v >= self.lower[k] - SUPPORT_TOL && v <= self.upper[k] + SUPPORT_TOL
            })
    }
}

/// Compensated summation, so mass checks stay sharp for large atom counts.
fn kahan_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Weighted point cloud: `sum_i w_i delta_{x_i}` with weights on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("need at least one atom".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch(points.len(), weights.len()));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::InvalidMeasure("inconsistent point dimensions".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let mass = kahan_sum(&weights);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {mass}")));
        }
        Ok(Self { points, weights })
    }

    /// Single Dirac mass at `x`.
    pub fn dirac(x: Vec<f64>) -> Self {
        Self { points: vec![x], weights: vec![1.0] }
    }

    /// Uniform weights over the given support points.
    pub fn uniform_on(points: Vec<Vec<f64>>) -> Result<Self> {
        let m = points.len();
        if m == 0 {
            return Err(Error::InvalidMeasure("need at least one atom".into()));
        }
        let w = vec![1.0 / m as f64; m];
        Self::new(points, w)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted mean of the support points.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (p, &w) in self.points.iter().zip(&self.weights) {
            for k in 0..m.len() {
                m[k] += w * p[k];
            }
        }
        m
    }

    /// Copy of the measure translated by `c`.
    pub fn translated(&self, c: &[f64]) -> Result<Self> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch(c.len(), self.dim()));
        }
        let points = self
            .points
            .iter()
            .map(|p| p.iter().zip(c).map(|(a, b)| a + b).collect())
            .collect();
        Ok(Self { points, weights: self.weights.clone() })
    }

    /// Left-continuous generalized inverse of the CDF (d = 1 only).
    pub fn quantile_table(&self) -> Result<QuantileTable> {
        if self.dim() != 1 {
            return Err(Error::NotOneDimensional(self.dim()));
        }
        let mut atoms: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| (p[0], w))
            .collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // merge duplicate locations
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        let mut breakpoints = Vec::with_capacity(merged.len() + 1);
        let mut left = Vec::with_capacity(merged.len());
        let mut right = Vec::with_capacity(merged.len());
        breakpoints.push(0.0);
        let total: f64 = merged.iter().map(|&(_, w)| w).sum();
        let mut cum = 0.0;
        for (i, (x, w)) in merged.iter().enumerate() {
            cum += w;
            let t = if i + 1 == merged.len() { 1.0 } else { (cum / total).min(1.0) };
            // atoms too light to advance the cumulative mass are dropped
            if t <= *breakpoints.last().unwrap() {
                continue;
            }
            breakpoints.push(t);
            left.push(*x);
            right.push(*x);
        }
        if let Some(last) = breakpoints.last_mut() {
            *last = 1.0;
        }
        QuantileTable::from_segments(breakpoints, left, right)
    }
}

/// Probability density on a regular grid over a box, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    domain: BoxDomain,
    shape: Vec<usize>,
    values: Vec<f64>,
    cell_volume: f64,
}

impl GridDensity {
    pub fn new(domain: BoxDomain, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.len() != domain.dim() || shape.iter().any(|&s| s == 0) {
            return Err(Error::InvalidMeasure(format!(
                "grid shape {shape:?} incompatible with dimension {}",
                domain.dim()
            )));
        }
        let n: usize = shape.iter().product();
        if values.len() != n {
            return Err(Error::LengthMismatch(values.len(), n));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMeasure("density values must be finite and nonnegative".into()));
        }
        let cell_volume: f64 = (0..shape.len())
            .map(|k| domain.side(k) / shape[k] as f64)
            .product();
        let mass: f64 = values.iter().sum::<f64>() * cell_volume;
        if (mass - 1.0).abs() > GRID_MASS_TOL {
            return Err(Error::InvalidMeasure(format!("grid density integrates to {mass}")));
        }
        Ok(Self { domain, shape, values, cell_volume })
    }

    /// Normalize nonnegative raw values into a probability density.
    pub fn from_unnormalized(domain: BoxDomain, shape: Vec<usize>, mut raw: Vec<f64>) -> Result<Self> {
        let cell_volume: f64 = (0..shape.len())
            .map(|k| domain.side(k) / shape[k] as f64)
            .product();
        let mass: f64 = raw.iter().sum::<f64>() * cell_volume;
        if !(mass > 0.0) {
            return Err(Error::InvalidMeasure("raw values have zero total mass".into()));
        }
        for v in &mut raw {
            *v /= mass;
        }
        Self::new(domain, shape, raw)
    }

    pub fn uniform(domain: BoxDomain, shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        let volume: f64 = (0..shape.len()).map(|k| domain.side(k)).product();
        let values = vec![1.0 / volume; n];
        Self::new(domain, shape, values).expect("uniform density is valid")
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        self.domain.side(axis) / self.shape[axis] as f64
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume
    }

    /// Multi-index of the flat cell index (row-major).
    pub fn cell_coords(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for k in (0..self.shape.len()).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    /// Center of the cell with the given flat index.
    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        self.cell_coords(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.domain.lower()[k] + (i as f64 + 0.5) * self.cell_width(k))
            .collect()
    }

    /// Replace the values, keeping domain and shape (values must renormalize).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.domain.clone(), self.shape.clone(), values)
    }

    /// Mean of the density, by midpoint quadrature over cells.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (flat, &v) in self.values.iter().enumerate() {
            let c = self.cell_center(flat);
            for k in 0..m.len() {
                m[k] += v * self.cell_volume * c[k];
            }
        }
        m
    }

    /// Piecewise-linear generalized inverse of the CDF (d = 1 only).
    ///
    /// Within a cell of positive mass the CDF is linear, so its inverse is
    /// linear as well; cells of zero mass produce jumps of the quantile
    /// function, encoded exactly by the segment representation.
    pub fn quantile_table(&self) -> Result<QuantileTable> {
        if self.dim() != 1 {
            return Err(Error::NotOneDimensional(self.dim()));
        }
        // quantile of the atomic discretization (all cell mass at the cell
        // center), so 1-D closed forms agree exactly with the discrete
        // transport solver on the same density
        let h = self.cell_width(0);
        let lo = self.domain.lower()[0];
        let total: f64 = self.values.iter().sum::<f64>() * self.cell_volume;
        let n = self.values.len();
        let mut breakpoints = vec![0.0];
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut cum = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let mass = v * self.cell_volume;
            if mass <= 0.0 {
                continue;
            }
            cum += mass;
            let t = if i + 1 == n { 1.0 } else { (cum / total).min(1.0) };
            // cells too light to advance the cumulative mass become jumps
            if t <= *breakpoints.last().unwrap() {
                continue;
            }
            let center = lo + (i as f64 + 0.5) * h;
            breakpoints.push(t);
            left.push(center);
            right.push(center);
        }
        // make sure the table ends exactly at 1
        if let Some(last) = breakpoints.last_mut() {
            *last = 1.0;
        }
        QuantileTable::from_segments(breakpoints, left, right)
    }
}

/// One-dimensional quantile function, stored as linear segments over a
/// strictly increasing breakpoint grid of `[0, 1]`.
///
/// Segment `i` covers `(breakpoints[i], breakpoints[i+1]]` and interpolates
/// linearly from `seg_left[i]` (the limit from the right at the left
/// endpoint) to `seg_right[i]`. Jumps between segments encode atoms-free
/// regions; equal left/right values give the piecewise-constant quantile of
/// a discrete measure. Evaluation is left-continuous.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    breakpoints: Vec<f64>,
    seg_left: Vec<f64>,
    seg_right: Vec<f64>,
}

impl QuantileTable {
    pub fn from_segments(breakpoints: Vec<f64>, seg_left: Vec<f64>, seg_right: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2
            || seg_left.len() != breakpoints.len() - 1
            || seg_right.len() != breakpoints.len() - 1
        {
            return Err(Error::InvalidMeasure("quantile table: inconsistent segment counts".into()));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidMeasure("quantile breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMeasure("quantile breakpoints must be strictly increasing".into()));
        }
        for i in 0..seg_left.len() {
            if seg_right[i] < seg_left[i] - 1e-12 {
                return Err(Error::InvalidMeasure("quantile values must be nondecreasing".into()));
            }
            if i + 1 < seg_left.len() && seg_left[i + 1] < seg_right[i] - 1e-12 {
                return Err(Error::InvalidMeasure("quantile values must be nondecreasing".into()));
            }
        }
        Ok(Self { breakpoints, seg_left, seg_right })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn num_segments(&self) -> usize {
        self.seg_left.len()
    }

    /// Left-continuous evaluation of the quantile function on `(0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.seg_left[0];
        }
        if t >= 1.0 {
            return *self.seg_right.last().unwrap();
        }
        // first segment with breakpoints[i] < t <= breakpoints[i+1]
        let i = match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&t).unwrap())
        {
            Ok(k) => k.saturating_sub(1),
            Err(k) => k - 1,
        };
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let s = (t - a) / (b - a);
        self.seg_left[i] + s * (self.seg_right[i] - self.seg_left[i])
    }

    /// CDF of the represented measure, right-continuous.
    pub fn cdf(&self, x: f64) -> f64 {
        // F(x) = Lebesgue measure of { t : quantile(t) <= x }
        let mut total = 0.0;
        for i in 0..self.num_segments() {
            let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
            if self.seg_right[i] <= x {
                total = b;
            } else if self.seg_left[i] <= x {
                let denom = self.seg_right[i] - self.seg_left[i];
                if denom > 0.0 {
                    total = a + (b - a) * (x - self.seg_left[i]) / denom;
                }
                break;
            } else {
                break;
            }
        }
        total
    }

    /// Exact integral of the squared difference of two quantile functions,
    /// i.e. the squared 2-Wasserstein distance of the represented measures.
    pub fn w2_sq(&self, other: &QuantileTable) -> f64 {
        let mut total = 0.0;
        let mut i = 0;
        let mut j = 0;
        let mut t0 = 0.0;
        while i < self.num_segments() && j < other.num_segments() {
            let t1 = self.breakpoints[i + 1].min(other.breakpoints[j + 1]);
            if t1 > t0 {
                // the difference is linear on (t0, t1]; integrate its square
                // from the endpoint values (stable for near-vertical segments)
                let u0 = self.segment_value(i, t0) - other.segment_value(j, t0);
                let u1 = self.segment_value(i, t1) - other.segment_value(j, t1);
                total += (t1 - t0) * (u0 * u0 + u0 * u1 + u1 * u1) / 3.0;
            }
            t0 = t1;
            if self.breakpoints[i + 1] <= t1 {
                i += 1;
            }
            if j < other.num_segments() && other.breakpoints[j + 1] <= t1 {
                j += 1;
            }
        }
        total.max(0.0)
    }

    /// Value of segment `i` at `t` by linear interpolation between the
    /// segment endpoints; stable even for near-vertical segments.
    fn segment_value(&self, i: usize, t: f64) -> f64 {
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let s = ((t - a) / (b - a)).clamp(0.0, 1.0);
        self.seg_left[i] + s * (self.seg_right[i] - self.seg_left[i])
    }

    /// Pointwise average of quantile functions on the merged breakpoint grid.
    pub fn average(tables: &[QuantileTable]) -> Result<QuantileTable> {
        if tables.is_empty() {
            return Err(Error::InvalidMeasure("cannot average zero quantile tables".into()));
        }
        let mut breakpoints: Vec<f64> = tables
            .iter()
            .flat_map(|t| t.breakpoints.iter().copied())
            .collect();
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        let k = breakpoints.len() - 1;
        let mut seg_left = vec![0.0; k];
        let mut seg_right = vec![0.0; k];
        let scale = 1.0 / tables.len() as f64;
        for table in tables {
            let mut j = 0;
            for i in 0..k {
                let (a, b) = (breakpoints[i], breakpoints[i + 1]);
                // merged breakpoints contain the table's, so (a, b] lies in one segment
                while table.breakpoints[j + 1] <= a {
                    j += 1;
                }
                seg_left[i] += scale * table.segment_value(j, a);
                seg_right[i] += scale * table.segment_value(j, b);
            }
        }
        QuantileTable::from_segments(breakpoints, seg_left, seg_right)
    }

    /// The represented measure as a weighted point cloud, for
    /// piecewise-constant tables (quantiles of discrete measures).
    pub fn to_discrete(&self) -> Result<DiscreteMeasure> {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for i in 0..self.num_segments() {
            if (self.seg_right[i] - self.seg_left[i]).abs() > 1e-12 {
                return Err(Error::InvalidMeasure(
                    "quantile table is not piecewise constant".into(),
                ));
            }
            let w = self.breakpoints[i + 1] - self.breakpoints[i];
            let x = self.seg_left[i];
            match atoms.last_mut() {
                Some(last) if (last.0 - x).abs() <= 1e-15 => last.1 += w,
                _ => atoms.push((x, w)),
            }
        }
        let (points, weights): (Vec<Vec<f64>>, Vec<f64>) =
            atoms.into_iter().map(|(x, w)| (vec![x], w)).unzip();
        DiscreteMeasure::new(points, weights)
    }

    /// Project the represented measure onto a regular 1-D grid by assigning
    /// each cell its exact probability mass.
    pub fn to_grid_density(&self, domain: &BoxDomain, cells: usize) -> Result<GridDensity> {
        if domain.dim() != 1 {
            return Err(Error::NotOneDimensional(domain.dim()));
        }
        let h = domain.side(0) / cells as f64;
        let lo = domain.lower()[0];
        let mut raw = Vec::with_capacity(cells);
        let mut prev = self.cdf(lo);
        for i in 0..cells {
            let edge = lo + (i + 1) as f64 * h;
            let f = if i + 1 == cells { 1.0 } else { self.cdf(edge) };
            raw.push((f - prev).max(0.0));
            prev = f;
        }
        GridDensity::from_unnormalized(domain.clone(), vec![cells], raw)
    }
}

/// Either measure representation, mainly for I/O and validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Discrete(DiscreteMeasure),
    Grid(GridDensity),
}

impl From<DiscreteMeasure> for Measure {
    fn from(m: DiscreteMeasure) -> Self {
        Measure::Discrete(m)
    }
}

impl From<GridDensity> for Measure {
    fn from(g: GridDensity) -> Self {
        Measure::Grid(g)
    }
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Discrete(m) => m.dim(),
            Measure::Grid(g) => g.dim(),
        }
    }

    pub fn quantile_table(&self) -> Result<QuantileTable> {
        match self {
            Measure::Discrete(m) => m.quantile_table(),
            Measure::Grid(g) => g.quantile_table(),
        }
    }
}

/// Diagnostic validation against the module invariants. Returns the list of
/// violated invariants; an empty list means the measure is valid. Never
/// aborts.
pub fn validate(measure: &Measure, domain: &BoxDomain) -> Vec<String> {
    let mut violations = Vec::new();
    match measure {
        Measure::Discrete(m) => {
            let mass = kahan_sum(m.weights());
            if (mass - 1.0).abs() > MASS_TOL {
                violations.push(format!("weights sum to {mass}"));
            }
            if m.weights().iter().any(|&w| w < 0.0) {
                violations.push("negative weight".into());
            }
            if m.dim() != domain.dim() {
                violations.push(format!(
                    "dimension {} does not match domain dimension {}",
                    m.dim(),
                    domain.dim()
                ));
            } else {
                for (i, p) in m.points().iter().enumerate() {
                    if !domain.contains(p) {
                        violations.push(format!("support outside Ω: point {i} at {p:?}"));
                    }
                }
            }
        }
        Measure::Grid(g) => {
            let mass = g.mass();
            if (mass - 1.0).abs() > GRID_MASS_TOL {
                violations.push(format!("grid density integrates to {mass}"));
            }
            if g.values().iter().any(|&v| v < 0.0) {
                violations.push("negative density value".into());
            }
            if g.domain() != domain {
                violations.push("grid domain differs from the enclosing domain".into());
            }
        }
    }
    violations
}

/// Replace a grid density by the discrete measure with one atom per cell
/// center, weighted by the cell mass. Keeps every transport call on
/// `DiscreteMeasure`.
pub fn grid_to_discrete(density: &GridDensity) -> DiscreteMeasure {
    let mut points = Vec::with_capacity(density.num_cells());
    let mut weights = Vec::with_capacity(density.num_cells());
    for (flat, &v) in density.values().iter().enumerate() {
        points.push(density.cell_center(flat));
        weights.push(v * density.cell_volume());
    }
    // mass is preserved exactly up to the density's own normalization
    DiscreteMeasure { points, weights }
}
