//! Seeded parametric test functions.
//!
//! A spec is a closed-form function, so the same member can be sampled on
//! any grid and convergence checks compare like with like. Each corpus draws
//! from its own ChaCha stream, which keeps experiments independent of one
//! another and of execution order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::grid::{Field2D, Signal1D};

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `exp(-1/(1 - t²))` for `|t| < 1`, zero otherwise.
pub fn mollifier(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

fn poly_bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (1.0 - t * t).powi(3)
    } else {
        0.0
    }
}

fn smooth_step(x: f64, x0: f64, width: f64) -> f64 {
    0.5 * (1.0 + ((x - x0) / width).tanh())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape1D {
    /// `amp · (1 - t²)³`, `t = (x - center)/radius`.
    Bump {
        center: f64,
        radius: f64,
        amp: f64,
    },
    /// `amp · exp(-1/(1 - t²))`.
    Mollifier {
        center: f64,
        radius: f64,
        amp: f64,
    },
    /// `Σ_k a_k cos(πkx) + b_k sin(πkx)`.
    Trig {
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Ramp {
        a: f64,
        b: f64,
    },
    /// `amp · ½(1 + tanh((x - x0)/width))`.
    Step {
        x0: f64,
        width: f64,
        amp: f64,
    },
    /// `values[i]` on the `i`-th interval cut by the sorted `breaks`.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Shape1D {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Shape1D::Bump { center, radius, amp } => amp * poly_bump((x - center) / radius),
            Shape1D::Mollifier { center, radius, amp } => amp * mollifier((x - center) / radius),
            Shape1D::Trig { cos, sin } => {
                let c: f64 = cos.iter().enumerate().map(|(k, a)| a * (PI * k as f64 * x).cos()).sum();
                let s: f64 = sin.iter().enumerate().map(|(k, b)| b * (PI * k as f64 * x).sin()).sum();
                c + s
            }
            Shape1D::Ramp { a, b } => a + b * x,
            Shape1D::Step { x0, width, amp } => amp * smooth_step(x, *x0, *width),
            Shape1D::Piecewise { breaks, values } => values[breaks.iter().filter(|&&b| x >= b).count()],
        }
    }
}

/// A sum of shapes on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalSpec {
    pub terms: Vec<Shape1D>,
}

impl SignalSpec {
    pub fn single(shape: Shape1D) -> Self {
        SignalSpec { terms: vec![shape] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn sample(&self, n: usize) -> Result<Signal1D> {
        Signal1D::from_fn(n, |x| self.eval(x))
    }

    pub fn is_smooth(&self) -> bool {
        !self.terms.iter().any(|t| matches!(t, Shape1D::Piecewise { .. }))
    }
}

/// The fixed compactly supported test function used for order limits.
pub fn reference_bump() -> SignalSpec {
    SignalSpec::single(Shape1D::Mollifier { center: 0.5, radius: 0.45, amp: 1.0 })
}

/// Compactly supported bumps whose supports stay clear of both ends.
pub fn compact_bumps() -> Vec<SignalSpec> {
    vec![
        reference_bump(),
        SignalSpec::single(Shape1D::Mollifier { center: 0.35, radius: 0.2, amp: 2.0 }),
        SignalSpec::single(Shape1D::Bump { center: 0.6, radius: 0.3, amp: 1.0 }),
        SignalSpec {
            terms: vec![
                Shape1D::Bump { center: 0.3, radius: 0.15, amp: -0.5 },
                Shape1D::Mollifier { center: 0.7, radius: 0.2, amp: 1.5 },
            ],
        },
    ]
}

fn random_shape_1d(rng: &mut ChaCha8Rng, smooth: bool) -> Shape1D {
    let kinds = if smooth { 4 } else { 5 };
    match rng.random_range(0..kinds) {
        0 => Shape1D::Bump {
            center: rng.random_range(0.2..0.8),
            radius: rng.random_range(0.1..0.4),
            amp: rng.random_range(-1.0..1.0),
        },
        1 => Shape1D::Trig {
            cos: (0..4).map(|k| rng.random_range(-1.0..1.0) / (1 + k) as f64).collect(),
            sin: (0..4).map(|k| rng.random_range(-1.0..1.0) / (1 + k) as f64).collect(),
        },
        2 => Shape1D::Ramp { a: rng.random_range(-0.5..0.5), b: rng.random_range(-1.0..1.0) },
        3 => Shape1D::Step {
            x0: rng.random_range(0.2..0.8),
            width: rng.random_range(0.02..0.1),
            amp: rng.random_range(-1.0..1.0),
        },
        _ => {
            let mut breaks: Vec<f64> = (0..rng.random_range(1..4)).map(|_| rng.random_range(0.1..0.9)).collect();
            breaks.sort_by(f64::total_cmp);
            let values = (0..=breaks.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            Shape1D::Piecewise { breaks, values }
        }
    }
}

/// `count` signals, each a sum of one to three random shapes. With
/// `smooth = false` piecewise-constant terms may appear.
pub fn signal_corpus(seed: u64, id: u64, count: usize, smooth: bool) -> Vec<SignalSpec> {
    let mut rng = stream(seed, id);
    (0..count)
        .map(|_| {
            let terms = (0..rng.random_range(1..4)).map(|_| random_shape_1d(&mut rng, smooth)).collect();
            SignalSpec { terms }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape2D {
    /// `amp · (1 - ρ²)³`, `ρ = |x - c|/radius`.
    Bump {
        cx: f64,
        cy: f64,
        radius: f64,
        amp: f64,
    },
    /// `amp · 256 x²(1-x)² y²(1-y)²`.
    ProductBump {
        amp: f64,
    },
    /// `Σ a_ij cos(πi x₁) cos(πj x₂)`, row-major `3 × 3`.
    Trig {
        coef: Vec<f64>,
    },
    Ramp {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Mollified edge across the direction `angle` at offset `offset` from the centre.
    Step {
        angle: f64,
        offset: f64,
        width: f64,
        amp: f64,
    },
}

impl Shape2D {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Shape2D::Bump { cx, cy, radius, amp } => {
                let rho = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() / radius;
                amp * poly_bump(rho)
            }
            Shape2D::ProductBump { amp } => amp * 256.0 * (x * (1.0 - x) * y * (1.0 - y)).powi(2),
            Shape2D::Trig { coef } => coef
                .iter()
                .enumerate()
                .map(|(k, a)| a * (PI * (k / 3) as f64 * x).cos() * (PI * (k % 3) as f64 * y).cos())
                .sum(),
            Shape2D::Ramp { a, b, c } => a + b * x + c * y,
            Shape2D::Step { angle, offset, width, amp } => {
                let t = (x - 0.5) * angle.cos() + (y - 0.5) * angle.sin();
                amp * smooth_step(t, *offset, *width)
            }
        }
    }
}

/// A scaled sum of shapes on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSpec {
    pub terms: Vec<Shape2D>,
    pub scale: f64,
}

impl FieldSpec {
    pub fn single(shape: Shape2D) -> Self {
        FieldSpec { terms: vec![shape], scale: 1.0 }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.scale * self.terms.iter().map(|t| t.eval(x, y)).sum::<f64>()
    }

    pub fn sample(&self, n: usize) -> Result<Field2D> {
        Field2D::from_fn(n, n, |x, y| self.eval(x, y))
    }

    /// Max of `|f|` on a fixed 65 × 65 reference lattice.
    fn reference_sup(&self) -> f64 {
        let m = 64;
        (0..=m)
            .flat_map(|i| (0..=m).map(move |j| (i as f64 / m as f64, j as f64 / m as f64)))
            .fold(0.0_f64, |acc, (x, y)| acc.max(self.eval(x, y).abs()))
    }
}

fn random_shape_2d(rng: &mut ChaCha8Rng) -> Shape2D {
    match rng.random_range(0..4) {
        0 => Shape2D::Bump {
            cx: rng.random_range(0.25..0.75),
            cy: rng.random_range(0.25..0.75),
            radius: rng.random_range(0.15..0.45),
            amp: rng.random_range(-1.0..1.0),
        },
        1 => Shape2D::Trig { coef: (0..9).map(|_| rng.random_range(-1.0..1.0)).collect() },
        2 => Shape2D::Ramp {
            a: rng.random_range(-0.5..0.5),
            b: rng.random_range(-1.0..1.0),
            c: rng.random_range(-1.0..1.0),
        },
        _ => Shape2D::Step {
            angle: rng.random_range(0.0..2.0 * PI),
            offset: rng.random_range(-0.2..0.2),
            width: rng.random_range(0.03..0.15),
            amp: rng.random_range(-1.0..1.0),
        },
    }
}

/// `count` smooth fields, each a sum of one to three random shapes. With
/// `image_class` every member is rescaled to a sup of 0.9 on the reference
/// lattice, which keeps its boundary values below 1 on any grid in practice.
pub fn field_corpus(seed: u64, id: u64, count: usize, image_class: bool) -> Vec<FieldSpec> {
    let mut rng = stream(seed, id);
    (0..count)
        .map(|_| {
            let terms = (0..rng.random_range(1..4)).map(|_| random_shape_2d(&mut rng)).collect();
            let mut f = FieldSpec { terms, scale: 1.0 };
            if image_class {
                let sup = f.reference_sup();
                if sup > 0.0 {
                    f.scale = 0.9 / sup;
                }
            }
            f
        })
        .collect()
}
