//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these run on the rayon pool; without
//! it they fall back to plain sequential loops. Results are always returned in
//! input order so callers can reduce deterministically.

use ndarray::{ArrayD, ArrayViewD, Axis, Zip};

/// Maps `f` over `items`, preserving order.
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies a line kernel `f(input, output)` to every 1-D lane of `a` along
/// `axis`. Lanes are independent, so the result does not depend on scheduling.
pub fn map_lanes<F>(a: &ArrayViewD<'_, f64>, axis: Axis, f: F) -> ArrayD<f64>
where
    F: Fn(&[f64], &mut [f64]) + Sync + Send,
{
    let mut out = ArrayD::<f64>::zeros(a.raw_dim());
    let len = a.len_of(axis);
    let zip = Zip::from(a.lanes(axis)).and(out.lanes_mut(axis));
    let kernel = |lin: ndarray::ArrayView1<'_, f64>, mut lout: ndarray::ArrayViewMut1<'_, f64>| {
        let input: Vec<f64> = lin.iter().copied().collect();
        let mut buf = vec![0.0; len];
        f(&input, &mut buf);
        for (dst, src) in lout.iter_mut().zip(buf) {
            *dst = src;
        }
    };
    #[cfg(feature = "parallel")]
    zip.par_for_each(kernel);
    #[cfg(not(feature = "parallel"))]
    zip.for_each(kernel);
    out
}

/// Runs `f` on a dedicated pool of `threads` workers (`0` = rayon default).
/// Without the `parallel` feature this simply calls `f`.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
