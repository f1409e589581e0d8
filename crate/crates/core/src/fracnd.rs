//! Axis-wise fractional partial derivatives, the fractional gradient and the
//! scaled fractional divergence on N-dimensional grid functions.
//!
//! Coordinate axes are numbered from 0 (`x₁`). Divergences are built from
//! exact transposes of the left-sided grid operators, so
//! `⟨u, div φ⟩ = c · ⟨∇u, φ⟩` holds to rounding in the plain pairing.

use ndarray::{ArrayD, ArrayViewD};

use crate::error::{Error, Result};
use crate::frac1d::{along, along_transpose, derivative_op, Side};
use crate::grid::{array_axis, FracOrder, GridFunction, TensorField};

fn check_axis(ndim: usize, k: usize) -> Result<()> {
    if k < ndim {
        Ok(())
    } else {
        Err(Error::invalid(format!("axis {} out of range for a {ndim}-d field", k + 1)))
    }
}

/// `d^r` along coordinate axis `k` of an array with the given per-array-axis spacings.
pub(crate) fn partial_array(a: &ArrayViewD<'_, f64>, spacings: &[f64], k: usize, r: f64, side: Side) -> ArrayD<f64> {
    let ax = array_axis(a.ndim(), k);
    let op = derivative_op(r, spacings[ax.index()], a.len_of(ax), side);
    along(a, ax, &op)
}

/// Transpose of [`partial_array`].
pub(crate) fn partial_array_transpose(
    a: &ArrayViewD<'_, f64>,
    spacings: &[f64],
    k: usize,
    r: f64,
    side: Side,
) -> ArrayD<f64> {
    let ax = array_axis(a.ndim(), k);
    let op = derivative_op(r, spacings[ax.index()], a.len_of(ax), side);
    along_transpose(a, ax, &op)
}

/// Fractional partial derivative of order `r` along coordinate axis `axis`
/// (0 = `x₁`), applied line by line.
pub fn partial_frac<F: GridFunction>(u: &F, axis: usize, r: FracOrder, side: Side) -> Result<F> {
    check_axis(u.ndim(), axis)?;
    u.with_values(partial_array(&u.values_dyn(), &u.spacings(), axis, r.value(), side))
}

/// `(∂₁^s u, …, ∂_N^s u)` as a rank-1 tensor field.
pub fn frac_gradient<F: GridFunction>(u: &F, s: f64, side: Side) -> Result<TensorField> {
    FracOrder::new(s)?;
    let (a, sp) = (u.values_dyn(), u.spacings());
    let comps = (0..u.ndim()).map(|k| partial_array(&a, &sp, k, s, side)).collect();
    TensorField::new(u.ndim(), 1, comps)
}

/// `(1 - 1/N)s + 1/N`.
pub fn divergence_scale(ndim: usize, s: f64) -> f64 {
    let n = ndim as f64;
    (1.0 - 1.0 / n) * s + 1.0 / n
}

/// Scaled fractional divergence `c_s Σ_k (∂_k^s)ᵀ φ_k` of a rank-1 field on
/// the grid of `like`. The transposes are the right-sided operators away
/// from the closed ends.
pub fn frac_divergence<F: GridFunction>(phi: &TensorField, s: f64, like: &F) -> Result<F> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("divergence order must lie in [0, 1], got {s}")));
    }
    check_tensor(phi, 1, like)?;
    let sp = like.spacings();
    let mut acc = ArrayD::zeros(like.values_dyn().raw_dim());
    for (k, c) in phi.components().iter().enumerate() {
        acc += &partial_array_transpose(&c.view(), &sp, k, s, Side::Left);
    }
    acc *= divergence_scale(phi.axes(), s);
    like.with_values(acc)
}

fn check_tensor<F: GridFunction>(phi: &TensorField, rank: u32, like: &F) -> Result<()> {
    if phi.rank() != rank {
        return Err(Error::ShapeMismatch(format!("expected a rank-{rank} tensor, got rank {}", phi.rank())));
    }
    if phi.axes() != like.ndim() || phi.component(0).shape() != like.values_dyn().shape() {
        return Err(Error::ShapeMismatch("tensor and field live on different grids".into()));
    }
    Ok(())
}

/// Mixed partials `∂_{b_k} ⋯ ∂_{b_1} ∂_a^s u` for every multi-index
/// `(a, b_1, …, b_k)`, `k = ⌊r⌋`, flattened row-major. The fractional
/// factor acts first, as in `d^{1+s} = d ∘ d^s`.
pub(crate) fn mixed_partials(a: &ArrayViewD<'_, f64>, spacings: &[f64], r: FracOrder) -> Vec<ArrayD<f64>> {
    let n = a.ndim();
    let s = r.frac_part();
    let mut level: Vec<ArrayD<f64>> = (0..n).map(|k| partial_array(a, spacings, k, s, Side::Left)).collect();
    for _ in 0..r.floor_part() {
        level = level
            .iter()
            .flat_map(|c| (0..n).map(move |b| partial_array(&c.view(), spacings, b, 1.0, Side::Left)))
            .collect();
    }
    level
}

/// Transpose of [`mixed_partials`] without the scale factor.
pub(crate) fn mixed_partials_transpose(comps: &[ArrayD<f64>], spacings: &[f64], r: FracOrder) -> ArrayD<f64> {
    let n = comps[0].ndim();
    let mut level: Vec<ArrayD<f64>> = comps.to_vec();
    for _ in 0..r.floor_part() {
        level = level
            .chunks(n)
            .map(|group| {
                let mut acc = ArrayD::zeros(group[0].raw_dim());
                for (b, c) in group.iter().enumerate() {
                    acc += &partial_array_transpose(&c.view(), spacings, b, 1.0, Side::Left);
                }
                acc
            })
            .collect();
    }
    let mut acc = ArrayD::zeros(level[0].raw_dim());
    for (k, c) in level.iter().enumerate() {
        acc += &partial_array_transpose(&c.view(), spacings, k, r.frac_part(), Side::Left);
    }
    acc
}

/// `div^r φ = c_s · div^s[div^{⌊r⌋} φ]` for a tensor of rank `⌊r⌋ + 1`.
///
/// The last tensor index is contracted first. The result is the exact
/// transpose of the mixed-partial tensor map, scaled by `c_s`.
pub fn div_r<F: GridFunction>(phi: &TensorField, r: FracOrder, like: &F) -> Result<F> {
    check_tensor(phi, r.floor_part() + 1, like)?;
    let mut out = mixed_partials_transpose(phi.components(), &like.spacings(), r);
    out *= divergence_scale(phi.axes(), r.frac_part());
    like.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{plain_inner, Field2D, Signal1D};
    use crate::special::gamma;
    use approx::assert_relative_eq;
    use ndarray::IxDyn;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn order(r: f64) -> FracOrder {
        FracOrder::new(r).unwrap()
    }

    fn random_field(nx: usize, ny: usize, rng: &mut ChaCha8Rng) -> Field2D {
        Field2D::new(ndarray::Array2::from_shape_fn((ny + 1, nx + 1), |_| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn random_tensor(rank: u32, shape: &[usize], rng: &mut ChaCha8Rng) -> TensorField {
        TensorField::from_fn(2, rank, shape, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn partial_examples() {
        let n = 400;
        let u = Field2D::from_fn(n, n, |x, _| x).unwrap();
        let d = partial_frac(&u, 0, order(1.0), Side::Left).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-9));

        let d = partial_frac(&u, 1, order(0.5), Side::Left).unwrap();
        let inv = 1.0 / gamma(0.5).unwrap();
        for j in (n / 10..=n).step_by(37) {
            for i in (0..=n).step_by(53) {
                let (x1, x2) = (i as f64 / n as f64, j as f64 / n as f64);
                let want = x1 * inv / x2.sqrt();
                assert!((d.at(i, j) - want).abs() <= 1e-2 * want.abs() + 1e-12);
            }
        }
        assert!(partial_frac(&u, 2, order(0.5), Side::Left).is_err());
    }

    #[test]
    fn separable_fields_act_per_line() {
        let f = |x: f64| (3.0 * x).sin() + x;
        let g = |y: f64| 1.0 + y * y;
        let n = 64;
        let u = Field2D::from_fn(n, n, |x, y| f(x) * g(y)).unwrap();
        let line = Signal1D::from_fn(n, f).unwrap();
        for &r in &[0.3, 1.0, 1.7] {
            let d = partial_frac(&u, 0, order(r), Side::Left).unwrap();
            let dl = crate::frac1d::frac_derivative_rl(&line, order(r), Side::Left).unwrap();
            for j in 0..=n {
                let gy = g(j as f64 / n as f64);
                for i in 0..=n {
                    let want = gy * dl.as_slice()[i];
                    assert!((d.at(i, j) - want).abs() <= 1e-12 * (1.0 + want.abs()));
                }
            }
        }
    }

    #[test]
    fn gradient_of_sum_of_ramps() {
        let n = 512;
        let u = Field2D::from_fn(n, n, |x, y| x + y).unwrap();
        let grad = frac_gradient(&u, 0.5, Side::Left).unwrap();
        let (c1, c0) = (1.0 / gamma(1.5).unwrap(), 1.0 / gamma(0.5).unwrap());
        for &(i, j) in &[(100, 200), (300, 77), (512, 512), (60, 400)] {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            let want1 = c1 * x.sqrt() + y * c0 / x.sqrt();
            let want2 = c1 * y.sqrt() + x * c0 / y.sqrt();
            assert!((grad.component(0)[[j, i]] - want1).abs() < 1e-2 * want1);
            assert!((grad.component(1)[[j, i]] - want2).abs() < 1e-2 * want2);
        }
        let zero = frac_gradient(&Field2D::constant(8, 8, 0.0).unwrap(), 0.5, Side::Left).unwrap();
        assert!(zero.components().iter().all(|c| c.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn gradient_near_one_matches_backward_difference() {
        let n = 256;
        let bump = |x: f64, y: f64| (x * (1.0 - x) * y * (1.0 - y) * 16.0).powi(2);
        let u = Field2D::from_fn(n, n, bump).unwrap();
        let g = frac_gradient(&u, 0.999, Side::Left).unwrap();
        let h = 1.0 / n as f64;
        let mut worst = 0.0f64;
        for j in 1..n {
            for i in 1..n {
                let fd = (u.at(i, j) - u.at(i - 1, j)) / h;
                worst = worst.max((g.component(0)[[j, i]] - fd).abs());
            }
        }
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn divergence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 16;
        let like = Field2D::constant(n, n, 0.0).unwrap();
        let phi = random_tensor(1, &[n + 1, n + 1], &mut rng);
        let avg = frac_divergence(&phi, 0.0, &like).unwrap();
        let want = (phi.component(0) + phi.component(1)) * 0.5;
        for (a, b) in avg.values().iter().zip(want.iter()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
        // s = 1: factor 1 and the transposed backward difference, i.e. minus the forward difference
        let div = frac_divergence(&phi, 1.0, &like).unwrap();
        let (p1, p2) = (phi.component(0), phi.component(1));
        let h = 1.0 / n as f64;
        for j in 1..n {
            for i in 2..n {
                let fwd = (p1[[j, i + 1]] - p1[[j, i]]) / h + (p2[[j + 1, i]] - p2[[j, i]]) / h;
                if j >= 2 {
                    assert_relative_eq!(div.at(i, j), -fwd, epsilon = 1e-10);
                }
            }
        }
        assert!(frac_divergence(&phi, 1.5, &like).is_err());
    }

    #[test]
    fn divergence_of_axis_bump_is_scaled_right_derivative() {
        let n = 128;
        let b = |x: f64| if x > 0.2 && x < 0.8 { ((x - 0.2) * (0.8 - x) * 11.0).powi(3) } else { 0.0 };
        let like = Field2D::constant(n, n, 0.0).unwrap();
        let shape = [n + 1, n + 1];
        let phi =
            TensorField::from_fn(2, 1, &shape, |c, ix| if c == 0 { b(ix[1] as f64 / n as f64) } else { 0.0 }).unwrap();
        let s = 0.6;
        let div = frac_divergence(&phi, s, &like).unwrap();
        let line = Signal1D::from_fn(n, b).unwrap();
        let dr = crate::frac1d::frac_derivative_rl(&line, order(s), Side::Right).unwrap();
        for j in 0..=n {
            for i in 0..n {
                assert_relative_eq!(div.at(i, j), 0.8 * dr.as_slice()[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn div_r_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 12;
        let like = Field2D::constant(n, n, 0.0).unwrap();
        let shape = [n + 1, n + 1];
        let phi = random_tensor(1, &shape, &mut rng);
        assert_eq!(div_r(&phi, order(0.4), &like).unwrap(), frac_divergence(&phi, 0.4, &like).unwrap());

        // r = 1: ½ Σ_a Σ_b ∂_bᵀ φ_(a,b)
        let phi = random_tensor(2, &shape, &mut rng);
        let got = div_r(&phi, order(1.0), &like).unwrap();
        let sp = like.spacings();
        let mut want = ArrayD::<f64>::zeros(IxDyn(&shape));
        for a in 0..2 {
            for b in 0..2 {
                want += &partial_array_transpose(&phi.component(2 * a + b).view(), &sp, b, 1.0, Side::Left);
            }
        }
        want *= 0.5;
        for (x, y) in got.values().iter().zip(want.iter()) {
            assert_relative_eq!(*x, *y, epsilon = 1e-12);
        }

        let ones = TensorField::from_fn(2, 2, &shape, |_, _| 1.0).unwrap();
        let d = div_r(&ones, order(1.5), &like).unwrap();
        assert!(d.values().iter().any(|v| v.abs() > 1.0));
        assert!(div_r(&phi, order(0.5), &like).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn divergence_is_adjoint_of_gradient(seed in any::<u64>(), r in 0.0f64..2.9, nx in 3usize..12, ny in 3usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = order(r);
            let u = random_field(nx, ny, &mut rng);
            let phi = random_tensor(r.floor_part() + 1, &[ny + 1, nx + 1], &mut rng);
            let sp = u.spacings();
            let lhs = plain_inner(&u.values_dyn(), &div_r(&phi, r, &u).unwrap().values_dyn(), &sp);
            let grad = mixed_partials(&u.values_dyn(), &sp, r);
            let c = divergence_scale(2, r.frac_part());
            let rhs: f64 = grad.iter().zip(phi.components()).map(|(g, p)| c * plain_inner(&g.view(), &p.view(), &sp)).sum();
            let scale: f64 = grad.iter().map(|g| g.iter().map(|v| v.abs()).sum::<f64>()).sum::<f64>() * sp[0] * sp[1] + 1.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);

            if r.floor_part() == 0 {
                let g = frac_gradient(&u, r.value(), Side::Left).unwrap();
                let d = frac_divergence(&phi, r.value(), &u).unwrap();
                let lhs = plain_inner(&u.values_dyn(), &d.values_dyn(), &sp);
                let rhs: f64 = g.components().iter().zip(phi.components()).map(|(a, b)| c * plain_inner(&a.view(), &b.view(), &sp)).sum();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn divergence_is_linear(seed in any::<u64>(), s in 0.0f64..1.0, a in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let like = Field2D::constant(9, 7, 0.0).unwrap();
            let p = random_tensor(1, &[8, 10], &mut rng);
            let q = random_tensor(1, &[8, 10], &mut rng);
            let comb = TensorField::new(2, 1, p.components().iter().zip(q.components()).map(|(x, y)| x * a + y).collect()).unwrap();
            let lhs = frac_divergence(&comb, s, &like).unwrap();
            let rhs = frac_divergence(&p, s, &like).unwrap().values() * a + frac_divergence(&q, s, &like).unwrap().values();
            for (x, y) in lhs.values().iter().zip(rhs.iter()) {
                prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn partials_commute_with_functions_of_the_other_axis(seed in any::<u64>(), r in 0.0f64..2.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_field(8, 6, &mut rng);
            let m: Vec<f64> = (0..7).map(|_| rng.random_range(-2.0..2.0)).collect();
            let scaled = u.with_values(ArrayD::from_shape_fn(IxDyn(&[7, 9]), |ix| m[ix[0]] * u.values()[[ix[0], ix[1]]])).unwrap();
            let a = partial_frac(&scaled, 0, order(r), Side::Left).unwrap();
            let b = partial_frac(&u, 0, order(r), Side::Left).unwrap();
            for (j, mj) in m.iter().enumerate() {
                for i in 0..9 {
                    prop_assert!((a.at(i, j) - mj * b.at(i, j)).abs() <= 1e-12 * (1.0 + a.at(i, j).abs()));
                }
            }
        }
    }
}
