//! The r-order total variation `TV^r_{ℓp}`, its dual lower bound, the
//! TV^r loss and the smoothed ROF energy.
//!
//! For `r = k + s` the integrand is the tensor of mixed partials
//! `∂_{b_k} ⋯ ∂_{b_1} ∂_a^s u`. The pointwise norm is taken block by block:
//! a block fixes every index except the last one, so each block is an
//! `N`-vector and the blocks are summed. With `k = 0` there is one block,
//! the fractional gradient. The sum is scaled by `c_s = (1 - 1/N)s + 1/N`,
//! which makes `⟨u, div^r φ⟩` the exact dual pairing.

use ndarray::{ArrayD, ArrayViewD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::frac1d::Side;
use crate::fracnd::{divergence_scale, mixed_partials, mixed_partials_transpose, partial_array};
use crate::grid::{lp_norm, trapezoid_weights, FracOrder, GridFunction, LpIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TVMethod {
    Primal,
    Dual,
}

impl std::str::FromStr for TVMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primal" => Ok(TVMethod::Primal),
            "dual" => Ok(TVMethod::Dual),
            _ => Err(Error::invalid(format!("method must be 'primal' or 'dual', got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TVResult {
    pub value: f64,
    pub r: f64,
    pub p: LpIndex,
    pub method: TVMethod,
    /// Cells along `x₁`.
    pub n: usize,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

/// Mixed-partial tensor of a sampled function, grouped into norm blocks.
pub(crate) struct BlockTensor {
    pub comps: Vec<ArrayD<f64>>,
    pub block: usize,
    pub scale: f64,
}

impl BlockTensor {
    /// `r = 0` gives the function itself as a single one-entry block.
    pub(crate) fn new(a: &ArrayViewD<'_, f64>, spacings: &[f64], r: FracOrder) -> Self {
        if r.value() == 0.0 {
            return BlockTensor { comps: vec![a.as_standard_layout().into_owned()], block: 1, scale: 1.0 };
        }
        BlockTensor {
            comps: mixed_partials(a, spacings, r),
            block: a.ndim(),
            scale: divergence_scale(a.ndim(), r.frac_part()),
        }
    }

    fn slices(&self) -> Vec<&[f64]> {
        self.comps.iter().map(|c| c.as_slice().expect("operator outputs are contiguous")).collect()
    }
}

/// Transpose of the map `u ↦ scale · comps`.
pub(crate) fn block_transpose(comps: &[ArrayD<f64>], spacings: &[f64], r: FracOrder) -> ArrayD<f64> {
    if r.value() == 0.0 {
        return comps[0].clone();
    }
    let mut out = mixed_partials_transpose(comps, spacings, r);
    out *= divergence_scale(comps[0].ndim(), r.frac_part());
    out
}

fn cells_x1(a: &ArrayViewD<'_, f64>) -> usize {
    a.shape().last().map_or(0, |&l| l.saturating_sub(1))
}

pub(crate) fn tv_array(a: &ArrayViewD<'_, f64>, spacings: &[f64], r: FracOrder, p: LpIndex) -> f64 {
    tv_array_multi(a, spacings, r, &[p])[0]
}

/// `TV^r` under several ℓ^p norms from one mixed-partial tensor.
pub(crate) fn tv_array_multi(a: &ArrayViewD<'_, f64>, spacings: &[f64], r: FracOrder, ps: &[LpIndex]) -> Vec<f64> {
    let t = BlockTensor::new(a, spacings, r);
    block_sums(&t, a.shape(), spacings, ps)
}

/// `TV^{s+k}_{ℓp}` for `k = 0..=levels`, sharing the fractional partials.
/// Requires `s > 0`.
pub(crate) fn tv_ladder(a: &ArrayViewD<'_, f64>, spacings: &[f64], s: f64, levels: u32, p: LpIndex) -> Vec<f64> {
    let n = a.ndim();
    let mut comps: Vec<ArrayD<f64>> = (0..n).map(|k| partial_array(a, spacings, k, s, Side::Left)).collect();
    let mut out = Vec::with_capacity(levels as usize + 1);
    for level in 0..=levels {
        if level > 0 {
            comps = comps
                .iter()
                .flat_map(|c| (0..n).map(move |b| partial_array(&c.view(), spacings, b, 1.0, Side::Left)))
                .collect();
        }
        let t = BlockTensor { comps, block: n, scale: divergence_scale(n, s) };
        out.push(block_sums(&t, a.shape(), spacings, &[p])[0]);
        comps = t.comps;
    }
    out
}

fn block_sums(t: &BlockTensor, shape: &[usize], spacings: &[f64], ps: &[LpIndex]) -> Vec<f64> {
    let w = trapezoid_weights(shape, spacings);
    let w = w.as_slice().expect("fresh array is contiguous");
    let comps = t.slices();
    let mut totals = vec![0.0; ps.len()];
    let mut buf = vec![0.0; t.block];
    for group in comps.chunks(t.block) {
        for (node, wt) in w.iter().enumerate() {
            for (b, c) in buf.iter_mut().zip(group) {
                *b = c[node];
            }
            for (acc, &p) in totals.iter_mut().zip(ps) {
                *acc += wt * lp_norm(&buf, p);
            }
        }
    }
    totals.into_iter().map(|v| t.scale * v).collect()
}

/// `TV^r_{ℓp}(u)` by direct quadrature of the mixed-partial tensor.
/// `r = 0` gives `‖u‖_{L¹}`.
pub fn tv_primal<F: GridFunction>(u: &F, r: FracOrder, p: LpIndex) -> Result<TVResult> {
    let a = u.values_dyn();
    Ok(TVResult {
        value: tv_array(&a, &u.spacings(), r, p),
        r: r.value(),
        p,
        method: TVMethod::Primal,
        n: cells_x1(&a),
        trials: None,
        seed: None,
    })
}

/// One admissible test tensor: per component, a boundary-vanishing bump
/// `Π (4x(1-x))^q` times a random trigonometric polynomial of degree ≤ 8,
/// then every block rescaled so its pointwise `ℓ^{p*}` norm is at most 1.
fn random_test_tensor(
    shape: &[usize],
    spacings: &[f64],
    count: usize,
    block: usize,
    dual: LpIndex,
    rng: &mut ChaCha8Rng,
) -> Vec<ArrayD<f64>> {
    const TERMS: usize = 3;
    let ndim = shape.len();
    let q: f64 = rng.random_range(0.1..=1.0);
    let bump = ArrayD::from_shape_fn(shape, |ix| {
        (0..ndim)
            .map(|d| {
                let x = ix[d] as f64 * spacings[d];
                (4.0 * x * (1.0 - x)).max(0.0).powf(q)
            })
            .product::<f64>()
    });
    let mut comps: Vec<ArrayD<f64>> = (0..count)
        .map(|_| {
            let terms: Vec<(f64, Vec<(f64, f64)>)> = (0..TERMS)
                .map(|_| {
                    let amp = rng.random_range(-1.0..1.0);
                    let modes = (0..ndim)
                        .map(|_| {
                            let m = rng.random_range(0..=8u32) as f64;
                            (std::f64::consts::PI * m, rng.random_range(0.0..std::f64::consts::TAU))
                        })
                        .collect();
                    (amp, modes)
                })
                .collect();
            let mut c = bump.clone();
            for (ix, v) in c.indexed_iter_mut() {
                let trig: f64 = terms
                    .iter()
                    .map(|(amp, modes)| {
                        amp * modes
                            .iter()
                            .enumerate()
                            .map(|(d, (k, ph))| (k * ix[d] as f64 * spacings[d] + ph).cos())
                            .product::<f64>()
                    })
                    .sum();
                *v *= trig;
            }
            c
        })
        .collect();
    let len = comps[0].len();
    let mut buf = vec![0.0; block];
    for group in comps.chunks_mut(block) {
        let mut peak = 0.0f64;
        for node in 0..len {
            for (b, c) in buf.iter_mut().zip(group.iter()) {
                *b = c.as_slice().expect("contiguous")[node];
            }
            peak = peak.max(lp_norm(&buf, dual));
        }
        if peak > 0.0 {
            for c in group.iter_mut() {
                *c /= peak;
            }
        }
    }
    comps
}

/// Lower bound on `TV^r_{ℓp}(u)`: the largest `|⟨u, div^r φ⟩|` over
/// `trials` random admissible test tensors. Trial `t` draws from stream `t`
/// of a ChaCha8 generator seeded with `seed`, so the result does not depend
/// on scheduling.
pub fn tv_dual_estimate<F: GridFunction>(
    u: &F,
    r: FracOrder,
    p: LpIndex,
    trials: usize,
    seed: u64,
) -> Result<TVResult> {
    if trials == 0 {
        return Err(Error::invalid("dual estimate needs at least one trial"));
    }
    let a = u.values_dyn();
    let sp = u.spacings();
    let t = BlockTensor::new(&a, &sp, r);
    let cell: f64 = sp.iter().product();
    let dual = p.dual();
    let pairings = exec::map_range(trials, |trial| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let phi = random_test_tensor(a.shape(), &sp, t.comps.len(), t.block, dual, &mut rng);
        // c·⟨T u, φ⟩ equals ⟨u, div^r φ⟩ exactly
        let dot: f64 =
            t.comps.iter().zip(&phi).map(|(x, y)| x.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>()).sum();
        (t.scale * cell * dot).abs()
    });
    let value = pairings.into_iter().fold(0.0f64, f64::max);
    Ok(TVResult {
        value,
        r: r.value(),
        p,
        method: TVMethod::Dual,
        n: cells_x1(&a),
        trials: Some(trials),
        seed: Some(seed),
    })
}

fn difference<F: GridFunction>(u: &F, v: &F) -> Result<ArrayD<f64>> {
    let (a, b) = (u.values_dyn(), v.values_dyn());
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(&a - &b)
}

/// `β₀‖u - v‖_{L¹} + β₁ TV^r_{ℓp}(u - v)`.
pub fn tvr_loss<F: GridFunction>(u: &F, v: &F, r: FracOrder, p: LpIndex, beta0: f64, beta1: f64) -> Result<f64> {
    if !(beta0 >= 0.0 && beta1 >= 0.0) {
        return Err(Error::invalid(format!("loss weights must be >= 0, got {beta0}, {beta1}")));
    }
    let d = difference(u, v)?;
    let sp = u.spacings();
    let mut loss = 0.0;
    if beta0 > 0.0 {
        loss += beta0 * crate::grid::weighted_abs_sum(&d.view(), &sp);
    }
    if beta1 > 0.0 {
        loss += beta1 * tv_array(&d.view(), &sp, r, p);
    }
    Ok(loss)
}

/// Parameters of the smoothed ROF energy `‖u - u_η‖²_{L²} + α TV^r_ε(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RofParams {
    pub alpha: f64,
    pub r: FracOrder,
    pub p: LpIndex,
    pub eps: f64,
}

impl RofParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be > 0, got {}", self.eps)));
        }
        if self.p != LpIndex::ONE && self.p != LpIndex::TWO {
            return Err(Error::invalid(format!("smoothed TV supports p = 1 or 2, got {}", self.p)));
        }
        Ok(())
    }
}

/// Value and derivative of the smoothed block norm.
fn smoothed(block: &[f64], p: LpIndex, eps: f64, grad: Option<&mut [f64]>) -> f64 {
    if p == LpIndex::TWO {
        let q = (block.iter().map(|v| v * v).sum::<f64>() + eps * eps).sqrt();
        if let Some(g) = grad {
            for (gi, v) in g.iter_mut().zip(block) {
                *gi = v / q;
            }
        }
        q - eps
    } else {
        let mut total = 0.0;
        let mut g = grad;
        for (i, &v) in block.iter().enumerate() {
            let (f, d) =
                if v.abs() <= eps { (v * v / (2.0 * eps), v / eps) } else { (v.abs() - 0.5 * eps, v.signum()) };
            total += f;
            if let Some(g) = g.as_deref_mut() {
                g[i] = d;
            }
        }
        total
    }
}

/// Energy and, if asked, its Euclidean gradient with respect to the node values.
pub(crate) fn rof_eval(
    u: &ArrayViewD<'_, f64>,
    u_eta: &ArrayViewD<'_, f64>,
    spacings: &[f64],
    prm: &RofParams,
    want_grad: bool,
) -> (f64, Option<ArrayD<f64>>) {
    let w = trapezoid_weights(u.shape(), spacings);
    let diff = u - u_eta;
    let fidelity: f64 = diff.iter().zip(w.iter()).map(|(d, wt)| wt * d * d).sum();

    let t = BlockTensor::new(u, spacings, prm.r);
    let ws = w.as_slice().expect("fresh array is contiguous");
    let comps = t.slices();
    let mut dual: Vec<ArrayD<f64>> =
        if want_grad { t.comps.iter().map(|c| ArrayD::zeros(c.raw_dim())).collect() } else { Vec::new() };
    let mut tv = 0.0;
    let mut buf = vec![0.0; t.block];
    let mut gbuf = vec![0.0; t.block];
    for (gi, group) in comps.chunks(t.block).enumerate() {
        for (node, wt) in ws.iter().enumerate() {
            for (b, c) in buf.iter_mut().zip(group) {
                *b = c[node];
            }
            let g = if want_grad { Some(&mut gbuf[..]) } else { None };
            tv += wt * smoothed(&buf, prm.p, prm.eps, g);
            if want_grad {
                for (b, gv) in gbuf.iter().enumerate() {
                    dual[gi * t.block + b].as_slice_mut().expect("contiguous")[node] = wt * gv;
                }
            }
        }
    }
    let energy = fidelity + prm.alpha * t.scale * tv;
    let grad = want_grad.then(|| {
        let mut g = block_transpose(&dual, spacings, prm.r);
        g *= prm.alpha;
        g + &(diff * &w * 2.0)
    });
    (energy, grad)
}

fn check_pair<F: GridFunction>(u: &F, u_eta: &F) -> Result<()> {
    difference(u, u_eta).map(|_| ())
}

/// `‖u - u_η‖²_{L²} + α TV^r_ε(u)` with trapezoid quadrature. The smoothed
/// TV uses `√(|v|² + ε²) - ε` per block for `p = 2` and the Huber function
/// per entry for `p = 1`.
pub fn rof_energy<F: GridFunction>(u: &F, u_eta: &F, prm: &RofParams) -> Result<f64> {
    prm.validate()?;
    check_pair(u, u_eta)?;
    Ok(rof_eval(&u.values_dyn(), &u_eta.values_dyn(), &u.spacings(), prm, false).0)
}

/// Euclidean gradient of [`rof_energy`] with respect to the node values of `u`.
pub fn rof_gradient<F: GridFunction>(u: &F, u_eta: &F, prm: &RofParams) -> Result<ArrayD<f64>> {
    prm.validate()?;
    check_pair(u, u_eta)?;
    Ok(rof_eval(&u.values_dyn(), &u_eta.values_dyn(), &u.spacings(), prm, true).1.expect("gradient requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l1_integral, Field2D, Signal1D};
    use crate::special::gamma;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn order(r: f64) -> FracOrder {
        FracOrder::new(r).unwrap()
    }

    fn random_field(nx: usize, ny: usize, seed: u64) -> Field2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Field2D::new(ndarray::Array2::from_shape_fn((ny + 1, nx + 1), |_| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn bump(x: f64, y: f64) -> f64 {
        (16.0 * x * (1.0 - x) * y * (1.0 - y)).powi(2)
    }

    #[test]
    fn primal_examples() {
        let z = Field2D::constant(16, 16, 0.0).unwrap();
        for r in [0.0, 0.5, 1.0, 1.7] {
            for p in [LpIndex::ONE, LpIndex::TWO, LpIndex::INF] {
                assert_eq!(tv_primal(&z, order(r), p).unwrap().value, 0.0);
            }
        }
        let ramp = Field2D::from_fn(64, 64, |x, _| x).unwrap();
        assert_relative_eq!(tv_primal(&ramp, order(1.0), LpIndex::ONE).unwrap().value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(tv_primal(&ramp, order(1.0), LpIndex::TWO).unwrap().value, 1.0, epsilon = 1e-12);

        let line = Signal1D::from_fn(2048, |x| x).unwrap();
        let want = 1.0 / (1.5 * gamma(1.5).unwrap());
        assert_relative_eq!(want, 0.752_253, epsilon = 1e-6);
        let got = tv_primal(&line, order(0.5), LpIndex::ONE).unwrap().value;
        assert!((got - want).abs() < 2e-3 * want, "{got}");

        let u = random_field(9, 7, 3);
        assert_relative_eq!(tv_primal(&u, order(0.0), LpIndex::TWO).unwrap().value, l1_integral(&u), epsilon = 1e-14);
    }

    #[test]
    fn classical_isotropic_tv_at_order_one() {
        let u = random_field(10, 10, 11);
        let a = u.values();
        let h = 0.1;
        let mut want = 0.0;
        for j in 0..=10 {
            for i in 0..=10 {
                let (ic, jc) = (i.max(1), j.max(1));
                let dx = (a[[j, ic]] - a[[j, ic - 1]]) / h;
                let dy = (a[[jc, i]] - a[[jc - 1, i]]) / h;
                let wt = if i == 0 || i == 10 { 0.5 } else { 1.0 } * if j == 0 || j == 10 { 0.5 } else { 1.0 } * h * h;
                want += wt * (dx * dx + dy * dy).sqrt();
            }
        }
        assert_relative_eq!(tv_primal(&u, order(1.0), LpIndex::TWO).unwrap().value, want, epsilon = 1e-12);
    }

    #[test]
    fn constants_are_null_only_at_integer_orders() {
        let c = Field2D::constant(32, 32, 1.0).unwrap();
        for r in [1.0, 2.0] {
            assert_eq!(tv_primal(&c, order(r), LpIndex::TWO).unwrap().value, 0.0);
        }
        for r in [0.2, 0.5, 0.9, 1.5] {
            assert!(tv_primal(&c, order(r), LpIndex::TWO).unwrap().value > 0.0);
        }
    }

    #[test]
    fn dual_examples() {
        let z = Field2D::constant(16, 16, 0.0).unwrap();
        assert_eq!(tv_dual_estimate(&z, order(0.5), LpIndex::TWO, 4, 1).unwrap().value, 0.0);

        let ramp = Signal1D::from_fn(256, |x| x).unwrap();
        let few = tv_dual_estimate(&ramp, order(1.0), LpIndex::ONE, 8, 5).unwrap().value;
        let many = tv_dual_estimate(&ramp, order(1.0), LpIndex::ONE, 64, 5).unwrap().value;
        assert!(few > 0.0 && many >= few && many <= 1.0 + 1e-12, "{few} {many}");

        let u = Field2D::from_fn(48, 48, |x, y| bump(x, y) + x * y).unwrap();
        for r in [0.4, 1.0, 1.6] {
            for p in [LpIndex::ONE, LpIndex::TWO, LpIndex::INF] {
                let primal = tv_primal(&u, order(r), p).unwrap().value;
                let d = tv_dual_estimate(&u, order(r), p, 16, 9).unwrap();
                assert!(d.value <= primal * (1.0 + 1e-12), "r = {r}, p = {p}");
                assert!(d.value > 0.0);
            }
        }
        let a = tv_dual_estimate(&u, order(0.7), LpIndex::TWO, 12, 42).unwrap();
        let b = crate::exec::with_threads(1, || tv_dual_estimate(&u, order(0.7), LpIndex::TWO, 12, 42).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn dual_pairing_goes_through_div_r() {
        let u = random_field(8, 6, 4);
        let r = order(1.3);
        let sp = u.spacings();
        let t = BlockTensor::new(&u.values_dyn(), &sp, r);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let phi = random_test_tensor(&[7, 9], &sp, t.comps.len(), t.block, LpIndex::TWO, &mut rng);
        let direct: f64 = t.comps.iter().zip(&phi).map(|(x, y)| (x * y).sum()).sum::<f64>() * t.scale * sp[0] * sp[1];
        let tf = crate::grid::TensorField::new(2, 2, phi).unwrap();
        let d = crate::fracnd::div_r(&tf, r, &u).unwrap();
        let via = crate::grid::plain_inner(&u.values_dyn(), &d.values_dyn(), &sp);
        assert_relative_eq!(direct, via, epsilon = 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn result_json_shape() {
        let u = Field2D::constant(8, 8, 1.0).unwrap();
        let res = tv_dual_estimate(&u, order(0.5), LpIndex::INF, 2, 3).unwrap();
        let v: serde_json::Value = serde_json::to_value(&res).unwrap();
        for key in ["value", "r", "p", "method", "n", "trials", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["p"], "inf");
        assert_eq!(v["method"], "dual");
        assert_eq!(v["n"], 8);
    }

    #[test]
    fn loss_examples() {
        let u = random_field(8, 8, 1);
        let r = order(0.5);
        assert_eq!(tvr_loss(&u, &u, r, LpIndex::TWO, 1.0, 1.0).unwrap(), 0.0);
        let v = random_field(8, 8, 2);
        let l1 = l1_integral(&u.with_values((u.values() - v.values()).into_dyn()).unwrap());
        assert_relative_eq!(tvr_loss(&u, &v, r, LpIndex::TWO, 1.0, 0.0).unwrap(), l1, epsilon = 1e-14);
        let ramp = Signal1D::from_fn(2048, |x| x).unwrap();
        let zero = Signal1D::from_fn(2048, |_| 0.0).unwrap();
        let got = tvr_loss(&ramp, &zero, r, LpIndex::ONE, 0.0, 1.0).unwrap();
        assert!((got - 0.752_253).abs() < 2e-3);
        assert!(tvr_loss(&u, &random_field(9, 8, 1), r, LpIndex::ONE, 1.0, 1.0).is_err());
    }

    #[test]
    fn rof_examples() {
        let prm = RofParams { alpha: 0.3, r: order(0.6), p: LpIndex::TWO, eps: 1e-3 };
        let z = Field2D::constant(8, 8, 0.0).unwrap();
        assert_eq!(rof_energy(&z, &z, &prm).unwrap(), 0.0);
        let u = random_field(8, 8, 5);
        let tv_eps = rof_energy(&u, &u, &RofParams { alpha: 1.0, ..prm }).unwrap();
        assert_relative_eq!(rof_energy(&u, &u, &prm).unwrap(), 0.3 * tv_eps, epsilon = 1e-12);
        assert!(rof_energy(&u, &u, &RofParams { p: LpIndex::INF, ..prm }).is_err());
        let tv = tv_primal(&u, prm.r, LpIndex::TWO).unwrap().value;
        assert!((tv_eps - tv).abs() < 1e-3 * (1.0 + tv));
    }

    #[test]
    fn rof_gradient_matches_central_differences() {
        for (k, (r, p)) in
            [(0.0, LpIndex::TWO), (0.4, LpIndex::TWO), (1.0, LpIndex::ONE), (1.5, LpIndex::TWO), (0.7, LpIndex::ONE)]
                .into_iter()
                .enumerate()
        {
            let prm = RofParams { alpha: 0.7, r: order(r), p, eps: 0.05 };
            let u = random_field(5, 4, 100 + k as u64);
            let eta = random_field(5, 4, 200 + k as u64);
            let g = rof_gradient(&u, &eta, &prm).unwrap();
            let base = u.values().clone();
            let step = 1e-6;
            for (ix, gv) in g.indexed_iter() {
                let (j, i) = (ix[0], ix[1]);
                let mut plus = base.clone();
                plus[[j, i]] += step;
                let mut minus = base.clone();
                minus[[j, i]] -= step;
                let ep = rof_energy(&Field2D::new(plus).unwrap(), &eta, &prm).unwrap();
                let em = rof_energy(&Field2D::new(minus).unwrap(), &eta, &prm).unwrap();
                let fd = (ep - em) / (2.0 * step);
                assert!((fd - gv).abs() <= 1e-5 * (1.0 + gv.abs()), "r = {r}, node ({i},{j}): {fd} vs {gv}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn seminorm_properties(seed in any::<u64>(), r in 0.0f64..2.5, lam in -3.0f64..3.0) {
            let u = random_field(7, 6, seed);
            let v = random_field(7, 6, seed.wrapping_add(1));
            let r = order(r);
            for p in [LpIndex::ONE, LpIndex::TWO, LpIndex::new(3.0).unwrap(), LpIndex::INF] {
                let tu = tv_primal(&u, r, p).unwrap().value;
                let scaled = u.with_values((u.values() * lam).into_dyn()).unwrap();
                prop_assert!((tv_primal(&scaled, r, p).unwrap().value - lam.abs() * tu).abs() <= 1e-12 * (1.0 + tu));
                let sum = u.with_values((u.values() + v.values()).into_dyn()).unwrap();
                let tv = tv_primal(&v, r, p).unwrap().value;
                prop_assert!(tv_primal(&sum, r, p).unwrap().value <= tu + tv + 1e-12 * (1.0 + tu + tv));
            }
        }

        #[test]
        fn lp_equivalence_of_tv(seed in any::<u64>(), r in 0.05f64..2.5) {
            let u = random_field(6, 8, seed);
            let r = order(r);
            let pairs = [(LpIndex::ONE, LpIndex::TWO), (LpIndex::ONE, LpIndex::INF), (LpIndex::TWO, LpIndex::INF)];
            for (q, p) in pairs {
                let tq = tv_primal(&u, r, q).unwrap().value;
                let tp = tv_primal(&u, r, p).unwrap().value;
                let factor = 2f64.powf(p.recip() - q.recip());
                prop_assert!(factor * tq <= tp * (1.0 + 1e-12));
                prop_assert!(tp <= tq * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn ladder_and_multi_norms_match_single_evaluations() {
        let u = Field2D::from_fn(24, 20, |x, y| (3.0 * x).sin() * (2.0 * y + 0.3).cos() + x * y).unwrap();
        let (a, sp) = (u.values_dyn(), u.spacings());
        let ladder = tv_ladder(&a, &sp, 0.4, 2, LpIndex::TWO);
        for (k, v) in ladder.iter().enumerate() {
            let r = FracOrder::new(0.4 + k as f64).unwrap();
            assert_relative_eq!(*v, tv_primal(&u, r, LpIndex::TWO).unwrap().value, max_relative = 1e-13);
        }
        let ps = [LpIndex::ONE, LpIndex::TWO, LpIndex::INF];
        let multi = tv_array_multi(&a, &sp, FracOrder::new(1.5).unwrap(), &ps);
        for (v, p) in multi.iter().zip(ps) {
            assert_eq!(*v, tv_primal(&u, FracOrder::new(1.5).unwrap(), p).unwrap().value);
        }
    }
}
