//! Fractional integrals and derivatives on the unit interval.
//!
//! Every operator is a Grünwald–Letnikov sum on the zero extension of the
//! samples. Left-sided operators look back towards `x = 0`, right-sided
//! ones towards `x = 1`; a right-sided operator is the left-sided one
//! conjugated by the reflection `x ↦ 1 - x`.

use ndarray::{ArrayD, ArrayViewD, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{FracOrder, Signal1D};
use crate::special::gamma_unchecked;
use crate::toeplitz::LineOp;

/// Which end of the interval an operator integrates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::invalid(format!("side must be 'left' or 'right', got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Derivative,
    Integral,
}

/// Grünwald–Letnikov weight table `g_0 … g_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GLWeights {
    pub order: f64,
    pub kind: WeightKind,
    pub weights: Vec<f64>,
}

/// `g_j = (-1)^j binom(r, j)` via `g_j = g_{j-1}(1 - (r+1)/j)`.
pub fn gl_derivative_weights(r: f64, m: usize) -> Result<GLWeights> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::invalid(format!("derivative order must be >= 0, got {r}")));
    }
    Ok(GLWeights { order: r, kind: WeightKind::Derivative, weights: derivative_taps(r, m + 1) })
}

/// `c_j = (-1)^j binom(-r, j)` via `c_j = c_{j-1}(1 + (r-1)/j)`; all `c_j ≥ 0`.
pub fn gl_integral_weights(r: f64, m: usize) -> Result<GLWeights> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::invalid(format!("integral order must be > 0, got {r}")));
    }
    Ok(GLWeights { order: r, kind: WeightKind::Integral, weights: integral_taps(r, m + 1) })
}

fn derivative_taps(r: f64, len: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(len);
    let mut prev = 1.0;
    for j in 0..len {
        if j > 0 {
            prev *= 1.0 - (r + 1.0) / j as f64;
        }
        g.push(prev);
    }
    g
}

fn integral_taps(r: f64, len: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(len);
    let mut prev = 1.0;
    for j in 0..len {
        if j > 0 {
            prev *= 1.0 + (r - 1.0) / j as f64;
        }
        c.push(prev);
    }
    c
}

/// Line operator for `d^r` on `len` nodes with spacing `h`. Order 0 is the identity.
pub(crate) fn derivative_op(r: f64, h: f64, len: usize, side: Side) -> LineOp {
    // integer orders have only r + 1 nonzero taps
    let taps = if r == r.floor() { len.min(r as usize + 1) } else { len };
    LineOp::new(derivative_taps(r, taps), h.powf(-r), r > 0.0, side == Side::Right)
}

pub(crate) fn integral_op(r: f64, h: f64, len: usize, side: Side) -> LineOp {
    LineOp::new(integral_taps(r, len), h.powf(r), false, side == Side::Right)
}

/// Applies `op` (built for the lane length) along `axis`.
pub(crate) fn along(a: &ArrayViewD<'_, f64>, axis: Axis, op: &LineOp) -> ArrayD<f64> {
    exec::map_lanes(a, axis, |x, y| op.apply(x, y))
}

pub(crate) fn along_transpose(a: &ArrayViewD<'_, f64>, axis: Axis, op: &LineOp) -> ArrayD<f64> {
    exec::map_lanes(a, axis, |x, y| op.apply_transpose(x, y))
}

fn check_input(w: &Signal1D) -> Result<()> {
    if w.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("input signal".into()))
    }
}

/// Fractional integral `𝕀^r w`, `r > 0`.
pub fn frac_integral(w: &Signal1D, r: f64, side: Side) -> Result<Signal1D> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::invalid(format!("integral order must be > 0, got {r} (use a derivative for r <= 0)")));
    }
    check_input(w)?;
    let op = integral_op(r, w.grid().spacing(), w.len(), side);
    w.replace(op.apply_vec(w.as_slice()))
}

/// Riemann–Liouville derivative `d^r w` of the zero-extended samples.
///
/// The stencil at the closed end (node 0 for left, node n for right) is
/// replaced by its neighbour's value.
pub fn frac_derivative_rl(w: &Signal1D, r: FracOrder, side: Side) -> Result<Signal1D> {
    check_input(w)?;
    let op = derivative_op(r.value(), w.grid().spacing(), w.len(), side);
    w.replace(op.apply_vec(w.as_slice()))
}

/// Caputo derivative `d^r (w - P)`, `P` the Taylor polynomial of `w` at the
/// starting end of degree `⌈r⌉ - 1` (so `⌊r⌋` for fractional `r`, and integer
/// orders reduce to `d^r`), with derivatives from one-sided differences.
pub fn frac_derivative_caputo(w: &Signal1D, r: FracOrder, side: Side) -> Result<Signal1D> {
    check_input(w)?;
    if side == Side::Right {
        let mirrored = w.replace(w.as_slice().iter().rev().copied().collect())?;
        let left = frac_derivative_caputo(&mirrored, r, Side::Left)?;
        return w.replace(left.as_slice().iter().rev().copied().collect());
    }
    if r.value() == 0.0 {
        return Ok(w.clone());
    }
    let v = w.as_slice();
    let h = w.grid().spacing();
    let deg = (r.value().ceil() as usize - 1).min(v.len() - 1);
    // forward differences Δ^l w_0 / h^l estimate the l-th derivative at 0
    let mut diffs = v[..=deg].to_vec();
    let mut coef = Vec::with_capacity(deg + 1);
    for l in 0..=deg {
        coef.push(diffs[0] / h.powi(l as i32) / factorial(l));
        for i in 0..diffs.len() - 1 {
            diffs[i] = diffs[i + 1] - diffs[i];
        }
        diffs.pop();
    }
    let residual: Vec<f64> =
        w.grid().nodes().zip(v).map(|(x, wi)| wi - coef.iter().rev().fold(0.0, |acc, c| acc * x + c)).collect();
    frac_derivative_rl(&w.replace(residual)?, r, Side::Left)
}

fn factorial(l: usize) -> f64 {
    (1..=l).map(|k| k as f64).product()
}

/// Revised left derivative `d^s w - w(0) x^{-s}/Γ(1-s)`, `0 < s < 1`.
///
/// The singular correction is evaluated in closed form; node 0 takes the
/// node-1 value as for [`frac_derivative_rl`].
pub fn frac_derivative_revised(w: &Signal1D, s: f64) -> Result<Signal1D> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("revised derivative needs 0 < s < 1, got {s}")));
    }
    let d = frac_derivative_rl(w, FracOrder::new(s)?, Side::Left)?;
    let w0 = w.as_slice()[0];
    let k = w0 / gamma_unchecked(1.0 - s);
    let grid = *w.grid();
    let mut out: Vec<f64> = d
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, di)| if i == 0 { 0.0 } else { di - k * grid.node(i).powf(-s) })
        .collect();
    out[0] = out[1];
    w.replace(out)
}

/// Exact transpose of the [`frac_derivative_rl`] matrix applied to `v`.
pub fn adjoint_apply(v: &Signal1D, r: FracOrder, side: Side) -> Result<Signal1D> {
    check_input(v)?;
    let op = derivative_op(r.value(), v.grid().spacing(), v.len(), side);
    v.replace(op.transpose_vec(v.as_slice()))
}
