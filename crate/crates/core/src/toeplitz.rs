//! Lower-triangular Toeplitz line operators and their exact transposes.
//!
//! A [`LineOp`] acts on one grid line of `len` nodes. It is
//! `scale · Σ_{j≤i} w_j x_{i-j}`, optionally followed by the node-0 copy
//! (row 0 replaced by row 1), and optionally conjugated by the reversal
//! `J` for right-sided operators.

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LineOp {
    weights: Vec<f64>,
    scale: f64,
    copy_first: bool,
    reversed: bool,
}

impl LineOp {
    /// `weights` may be shorter than the line; missing taps are zero.
    pub(crate) fn new(weights: Vec<f64>, scale: f64, copy_first: bool, reversed: bool) -> Self {
        LineOp { weights, scale, copy_first, reversed }
    }

    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        if self.reversed {
            let xr: Vec<f64> = x.iter().rev().copied().collect();
            self.apply_left(&xr, out);
            out.reverse();
        } else {
            self.apply_left(x, out);
        }
    }

    pub(crate) fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        if self.reversed {
            let yr: Vec<f64> = y.iter().rev().copied().collect();
            self.transpose_left(&yr, out);
            out.reverse();
        } else {
            self.transpose_left(y, out);
        }
    }

    pub(crate) fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out);
        out
    }

    pub(crate) fn transpose_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.apply_transpose(y, &mut out);
        out
    }

    fn apply_left(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let w = &self.weights[..self.weights.len().min(n)];
        for (i, o) in out.iter_mut().enumerate() {
            let taps = w.len().min(i + 1);
            let mut acc = 0.0;
            for (j, wj) in w[..taps].iter().enumerate() {
                acc += wj * x[i - j];
            }
            *o = self.scale * acc;
        }
        if self.copy_first && n > 1 {
            out[0] = out[1];
        }
    }

    fn transpose_left(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        let folded;
        let y = if self.copy_first && n > 1 {
            let mut v = y.to_vec();
            v[1] += v[0];
            v[0] = 0.0;
            folded = v;
            &folded[..]
        } else {
            y
        };
        let w = &self.weights[..self.weights.len().min(n)];
        for (k, o) in out.iter_mut().enumerate() {
            let taps = w.len().min(n - k);
            let mut acc = 0.0;
            for (j, wj) in w[..taps].iter().enumerate() {
                acc += wj * y[k + j];
            }
            *o = self.scale * acc;
        }
    }
}
