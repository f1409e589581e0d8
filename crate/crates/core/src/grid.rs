//! Uniform node grids on the unit interval and square, the sampled functions
//! living on them, and elementary operations on those samples.

use ndarray::{Array1, Array2, ArrayD, ArrayViewD, Axis, Dimension, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid of `n` cells with spacing `h`, node `i` at `origin + i·h`.
///
/// [`Grid1D::unit`] gives the grid on `[0, 1]`; grids produced by zero
/// extension keep the spacing and move the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    h: f64,
    origin: f64,
}

impl Grid1D {
    pub fn unit(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 cells, got {n}")));
        }
        Ok(Grid1D { n, h: 1.0 / n as f64, origin: 0.0 })
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.node(i))
    }
}

/// Uniform grid on the unit square with `nx × ny` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!("grid needs at least 2x2 cells, got {nx}x{ny}")));
        }
        Ok(Grid2D { nx, ny })
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }
}

/// Anything sampled on a uniform node grid that the operators can act on.
///
/// Values are exposed as an n-dimensional array. Coordinate axis `x_{k+1}`
/// (`k` zero-based) is stored on array axis `ndim - 1 - k`, so in 2-D the
/// array rows run along `x₂` and the columns along `x₁`.
pub trait GridFunction: Sized + Clone {
    fn values_dyn(&self) -> ArrayViewD<'_, f64>;

    /// Node spacing per array axis.
    fn spacings(&self) -> Vec<f64>;

    /// Same grid, new values.
    fn with_values(&self, values: ArrayD<f64>) -> Result<Self>;

    fn ndim(&self) -> usize {
        self.values_dyn().ndim()
    }

    /// Spacing along coordinate axis `k`.
    fn coord_spacing(&self, k: usize) -> f64 {
        let s = self.spacings();
        s[s.len() - 1 - k]
    }

    fn zeros_like(&self) -> Self {
        self.with_values(ArrayD::zeros(self.values_dyn().raw_dim())).expect("zero field on an existing grid is valid")
    }
}

/// Array axis carrying coordinate axis `k` in an `ndim`-dimensional field.
pub fn array_axis(ndim: usize, k: usize) -> Axis {
    Axis(ndim - 1 - k)
}

fn check_finite(values: impl IntoIterator<Item = f64>, what: &str) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what} contains NaN or infinity")))
    }
}

/// A function `w: I → ℝ` sampled at the nodes of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    grid: Grid1D,
    values: Array1<f64>,
}

impl Signal1D {
    /// Samples on the unit grid with `values.len() - 1` cells.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let grid = Grid1D::unit(values.len().saturating_sub(1))?;
        Self::on_grid(grid, Array1::from(values))
    }

    pub fn on_grid(grid: Grid1D, values: Array1<f64>) -> Result<Self> {
        if values.len() != grid.n + 1 {
            return Err(Error::ShapeMismatch(format!("{} values for a grid of {} cells", values.len(), grid.n)));
        }
        check_finite(values.iter().copied(), "signal")?;
        Ok(Signal1D { grid, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = Grid1D::unit(n)?;
        let values = grid.nodes().map(f).collect::<Array1<f64>>();
        Self::on_grid(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("Array1 built from a Vec is contiguous")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid with `values`; panics on a length mismatch.
    pub(crate) fn replace(&self, values: Vec<f64>) -> Result<Self> {
        Self::on_grid(self.grid, Array1::from(values))
    }
}

impl GridFunction for Signal1D {
    fn values_dyn(&self) -> ArrayViewD<'_, f64> {
        self.values.view().into_dyn()
    }

    fn spacings(&self) -> Vec<f64> {
        vec![self.grid.h]
    }

    fn with_values(&self, values: ArrayD<f64>) -> Result<Self> {
        let v = values.into_dimensionality::<ndarray::Ix1>().map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::on_grid(self.grid, v)
    }
}

/// A function `u: Q → ℝ` on the unit square, stored as `(ny+1) × (nx+1)`
/// with row index along `x₂` and column index along `x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Array2<f64>,
}

impl Field2D {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (rows, cols) = values.dim();
        let grid = Grid2D::new(cols.saturating_sub(1), rows.saturating_sub(1))?;
        check_finite(values.iter().copied(), "field")?;
        Ok(Field2D { grid, values })
    }

    /// Samples `f(x₁, x₂)` on an `nx × ny` cell grid.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let grid = Grid2D::new(nx, ny)?;
        let (hx, hy) = (grid.hx(), grid.hy());
        let values = Array2::from_shape_fn((ny + 1, nx + 1), |(j, i)| f(i as f64 * hx, j as f64 * hy));
        Self::new(values)
    }

    pub fn constant(nx: usize, ny: usize, c: f64) -> Result<Self> {
        Self::from_fn(nx, ny, |_, _| c)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Value at node `(i, j)` = `(x₁ index, x₂ index)`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[[j, i]]
    }
}

impl GridFunction for Field2D {
    fn values_dyn(&self) -> ArrayViewD<'_, f64> {
        self.values.view().into_dyn()
    }

    fn spacings(&self) -> Vec<f64> {
        vec![self.grid.hy(), self.grid.hx()]
    }

    fn with_values(&self, values: ArrayD<f64>) -> Result<Self> {
        let v = values.into_dimensionality::<ndarray::Ix2>().map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        if v.dim() != self.values.dim() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", v.dim(), self.values.dim())));
        }
        check_finite(v.iter().copied(), "field")?;
        Ok(Field2D { grid: self.grid, values: v })
    }
}

/// Real order `r ≥ 0` split as `⌊r⌋ + s` with `s ∈ [0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracOrder {
    r: f64,
    floor: u32,
    frac: f64,
}

impl FracOrder {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::invalid(format!("order must be finite and >= 0, got {r}")));
        }
        let floor = r.floor();
        Ok(FracOrder { r, floor: floor as u32, frac: r - floor })
    }

    pub fn value(&self) -> f64 {
        self.r
    }

    pub fn floor_part(&self) -> u32 {
        self.floor
    }

    pub fn frac_part(&self) -> f64 {
        self.frac
    }

    pub fn is_integer(&self) -> bool {
        self.frac == 0.0
    }
}

/// Exponent `p ∈ [1, ∞]`; `f64::INFINITY` stands for `p = ∞`. Serialized as
/// a number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpIndex(f64);

impl Serialize for LpIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for LpIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => LpIndex::new(p),
            Raw::Text(t) => t.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

impl LpIndex {
    pub const ONE: LpIndex = LpIndex(1.0);
    pub const TWO: LpIndex = LpIndex(2.0);
    pub const INF: LpIndex = LpIndex(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(format!("exponent must lie in [1, inf], got {p}")));
        }
        Ok(LpIndex(p))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_inf(&self) -> bool {
        self.0.is_infinite()
    }

    /// `p*` with `1/p + 1/p* = 1`.
    pub fn dual(&self) -> LpIndex {
        if self.0 == 1.0 {
            LpIndex(f64::INFINITY)
        } else if self.0.is_infinite() {
            LpIndex(1.0)
        } else {
            LpIndex(self.0 / (self.0 - 1.0))
        }
    }

    /// `1/p`, zero for `p = ∞`.
    pub fn recip(&self) -> f64 {
        if self.is_inf() {
            0.0
        } else {
            1.0 / self.0
        }
    }
}

impl std::str::FromStr for LpIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(LpIndex::INF),
            t => t
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("cannot parse exponent '{s}'")))
                .and_then(LpIndex::new),
        }
    }
}

impl std::fmt::Display for LpIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Per-node tensor of rank `rank` over `axes` coordinate axes, stored as
/// `axes^rank` component arrays. Multi-indices `(a₁, …, a_rank)` are
/// flattened row-major, first index most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    axes: usize,
    rank: u32,
    components: Vec<ArrayD<f64>>,
}

impl TensorField {
    pub fn new(axes: usize, rank: u32, components: Vec<ArrayD<f64>>) -> Result<Self> {
        let expected = axes.pow(rank);
        if components.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "rank {rank} tensor over {axes} axes needs {expected} components, got {}",
                components.len()
            )));
        }
        if let Some(first) = components.first() {
            if first.ndim() != axes {
                return Err(Error::ShapeMismatch(format!(
                    "components are {}-dimensional, tensor declares {axes} axes",
                    first.ndim()
                )));
            }
            if components.iter().any(|c| c.shape() != first.shape()) {
                return Err(Error::ShapeMismatch("components live on different grids".into()));
            }
        }
        check_finite(components.iter().flat_map(|c| c.iter().copied()), "tensor field")?;
        Ok(TensorField { axes, rank, components })
    }

    /// All components equal to `f(component_index, node_values_shape)`.
    pub fn from_fn(axes: usize, rank: u32, shape: &[usize], mut f: impl FnMut(usize, &[usize]) -> f64) -> Result<Self> {
        let components =
            (0..axes.pow(rank)).map(|c| ArrayD::from_shape_fn(IxDyn(shape), |ix| f(c, ix.slice()))).collect();
        Self::new(axes, rank, components)
    }

    pub fn axes(&self) -> usize {
        self.axes
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn components(&self) -> &[ArrayD<f64>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ArrayD<f64> {
        &self.components[i]
    }

    pub fn into_components(self) -> Vec<ArrayD<f64>> {
        self.components
    }
}

/// Zero extension of `w` by `pad` nodes on each side; spacing is kept.
pub fn extend_by_zero(w: &Signal1D, pad: usize) -> Signal1D {
    let mut values = vec![0.0; w.len() + 2 * pad];
    values[pad..pad + w.len()].copy_from_slice(w.as_slice());
    let grid = Grid1D { n: w.grid.n + 2 * pad, h: w.grid.h, origin: w.grid.origin - pad as f64 * w.grid.h };
    Signal1D { grid, values: Array1::from(values) }
}

/// Shifts values by `k` nodes (`out[j] = w[j - k]`), filling vacated nodes with 0.
pub fn translate(w: &Signal1D, k: i64) -> Result<Signal1D> {
    let n = w.grid.n;
    if k.unsigned_abs() as usize > n {
        return Err(Error::ShiftTooLarge { shift: k, cells: n });
    }
    let len = w.len() as i64;
    let src = w.as_slice();
    let values = (0..len)
        .map(|j| {
            let i = j - k;
            if (0..len).contains(&i) {
                src[i as usize]
            } else {
                0.0
            }
        })
        .collect();
    w.replace(values)
}

/// ℓ^p norm of a vector; `p = ∞` gives the max-abs entry.
pub fn lp_norm(v: &[f64], p: LpIndex) -> f64 {
    let p = p.value();
    if p.is_infinite() {
        v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    } else if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Trapezoid quadrature weights (cell volume, halved per boundary index).
pub fn trapezoid_weights(shape: &[usize], spacings: &[f64]) -> ArrayD<f64> {
    ArrayD::from_shape_fn(IxDyn(shape), |ix| {
        ix.slice()
            .iter()
            .zip(shape)
            .zip(spacings)
            .map(|((&i, &len), &h)| if i == 0 || i + 1 == len { 0.5 * h } else { h })
            .product()
    })
}

/// Discrete `∫|f|` with trapezoid end weights, exact for constants.
pub fn l1_integral<F: GridFunction>(w: &F) -> f64 {
    weighted_abs_sum(&w.values_dyn(), &w.spacings())
}

pub(crate) fn weighted_abs_sum(a: &ArrayViewD<'_, f64>, spacings: &[f64]) -> f64 {
    let wts = trapezoid_weights(a.shape(), spacings);
    a.iter().zip(wts.iter()).map(|(v, w)| v.abs() * w).sum()
}

/// Discrete `L^p` norm with trapezoid weights; `p = ∞` is the max over nodes.
pub fn lp_integral<F: GridFunction>(w: &F, p: LpIndex) -> f64 {
    let a = w.values_dyn();
    if p.is_inf() {
        return a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    }
    let wts = trapezoid_weights(a.shape(), &w.spacings());
    let pv = p.value();
    a.iter().zip(wts.iter()).map(|(v, w)| w * v.abs().powf(pv)).sum::<f64>().powf(1.0 / pv)
}

/// Max of `|u|` over boundary nodes; stands in for the sup-norm of the trace.
pub fn boundary_sup<F: GridFunction>(u: &F) -> f64 {
    let a = u.values_dyn();
    let shape = a.shape().to_vec();
    a.indexed_iter()
        .filter(|(ix, _)| ix.slice().iter().zip(&shape).any(|(&i, &len)| i == 0 || i + 1 == len))
        .fold(0.0_f64, |m, (_, v)| m.max(v.abs()))
}

/// Max of `|u|` over all nodes.
pub fn sup_norm<F: GridFunction>(u: &F) -> f64 {
    u.values_dyn().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `Σ h^N a_i b_i` over all nodes: the pairing whose transposes are exact.
pub fn plain_inner(a: &ArrayViewD<'_, f64>, b: &ArrayViewD<'_, f64>, spacings: &[f64]) -> f64 {
    let cell: f64 = spacings.iter().product();
    cell * a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>()
}
