//! TV^r-regularized ROF denoising and the grid search over the order `r`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{trapezoid_weights, Field2D, FracOrder, GridFunction, LpIndex};
use crate::io;
use crate::tvr::{rof_eval, tvr_loss, RofParams};

/// Settings of one denoising run. `eps` and `step` default to
/// `1e-6 × (dynamic range of u_η)` and `1 / (8α h^{-2r} + 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub alpha: f64,
    pub r: FracOrder,
    pub p: LpIndex,
    pub eps: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub step: Option<f64>,
}

impl DenoiseConfig {
    pub fn new(alpha: f64, r: f64, p: LpIndex) -> Result<Self> {
        let cfg = DenoiseConfig { alpha, r: FracOrder::new(r)?, p, eps: None, max_iters: 200, tol: 1e-6, step: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::invalid(format!("epsilon must be > 0, got {e}")));
            }
        }
        if let Some(t) = self.step {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("step must be > 0, got {t}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.p != LpIndex::ONE && self.p != LpIndex::TWO {
            return Err(Error::invalid(format!("denoising supports p = 1 or 2, got {}", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseReport<F = Field2D> {
    pub output: F,
    /// Energy of the initial iterate followed by one entry per accepted step.
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub eps: f64,
}

/// Preconditioned gradient descent on the smoothed ROF energy, starting at
/// `u_η`. The search direction is the gradient divided by the quadrature
/// weights; the step is halved until the energy does not increase and may
/// double again, up to the initial step, after each accepted move.
pub fn denoise<F: GridFunction>(u_eta: &F, cfg: &DenoiseConfig) -> Result<DenoiseReport<F>> {
    cfg.validate()?;
    let eta = u_eta.values_dyn();
    let sp = u_eta.spacings();
    let (lo, hi) = eta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let eps = cfg.eps.unwrap_or(if range > 0.0 { 1e-6 * range } else { 1e-6 });
    let prm = RofParams { alpha: cfg.alpha, r: cfg.r, p: cfg.p, eps };
    let h = sp.iter().copied().fold(f64::INFINITY, f64::min);
    let step0 = cfg.step.unwrap_or(1.0 / (8.0 * cfg.alpha * h.powf(-2.0 * cfg.r.value()) + 2.0));
    let weights = trapezoid_weights(eta.shape(), &sp);

    let mut u = eta.to_owned();
    let (mut energy, grad) = rof_eval(&u.view(), &eta, &sp, &prm, true);
    if !energy.is_finite() {
        return Err(Error::NonFiniteEnergy { iteration: 0 });
    }
    let mut grad = grad.expect("gradient requested");
    let mut energies = vec![energy];
    let mut step = step0;
    let mut converged = false;
    let mut iterations = 0;

    'outer: for it in 1..=cfg.max_iters {
        iterations = it;
        let dir = -&grad / &weights;
        let (cand, cand_energy) = loop {
            let cand = &u + &(&dir * step);
            let e = rof_eval(&cand.view(), &eta, &sp, &prm, false).0;
            if !e.is_finite() {
                return Err(Error::NonFiniteEnergy { iteration: it });
            }
            if e <= energy {
                break (cand, e);
            }
            step *= 0.5;
            if step < step0 * 1e-30 {
                // no descent left at working precision
                converged = true;
                break 'outer;
            }
        };
        let decrease = (energy - cand_energy) / energy.abs().max(f64::MIN_POSITIVE);
        u = cand;
        energy = cand_energy;
        energies.push(energy);
        if decrease < cfg.tol {
            converged = true;
            break;
        }
        grad = rof_eval(&u.view(), &eta, &sp, &prm, true).1.expect("gradient requested");
        step = (2.0 * step).min(step0);
    }

    Ok(DenoiseReport { output: u_eta.with_values(u)?, energies, iterations, converged, eps })
}

/// A clean image and its corrupted observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub name: String,
    pub clean: Field2D,
    pub noisy: Field2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pairs: Vec<Pair>,
}

impl Dataset {
    pub fn new(pairs: Vec<Pair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        for p in &pairs {
            if p.clean.values().dim() != p.noisy.values().dim() {
                return Err(Error::ShapeMismatch(format!("pair '{}': clean and noisy shapes differ", p.name)));
            }
        }
        Ok(Dataset { pairs })
    }

    /// Loads every `<name>.clean.{pgm,csv}` in `dir` with its
    /// `<name>.noisy.{pgm,csv}` partner, sorted by name.
    pub fn load(dir: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for path in io::sorted_entries(dir)? {
            let Some(file) = path.file_name().and_then(|f| f.to_str()) else { continue };
            let Some((name, ext)) = ["pgm", "csv"]
                .iter()
                .find_map(|ext| file.strip_suffix(&format!(".clean.{ext}")).map(|n| (n.to_string(), *ext)))
            else {
                continue;
            };
            let noisy =
                ["pgm", "csv"].iter().map(|e| dir.join(format!("{name}.noisy.{e}"))).find(|p| p.exists()).ok_or_else(
                    || Error::Format {
                        path: dir.join(format!("{name}.noisy.{ext}")),
                        message: "missing noisy partner".into(),
                    },
                )?;
            pairs.push(Pair { name, clean: io::read_field(&path)?, noisy: io::read_field(&noisy)? });
        }
        if pairs.is_empty() {
            return Err(Error::Format { path: dir.to_path_buf(), message: "no '<name>.clean.pgm|csv' files".into() });
        }
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }
}

/// Loss `β₀‖u - u_c‖_{L¹} + β₁ TV^{r_loss}_{ℓp}(u - u_c)`; `r_loss` defaults
/// to the order being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub beta0: f64,
    pub beta1: f64,
    pub p: LpIndex,
    pub r_loss: Option<f64>,
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec { beta0: 1.0, beta1: 1.0, p: LpIndex::TWO, r_loss: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub r: f64,
    pub total_loss: f64,
    pub per_pair: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub orders: Vec<f64>,
    pub pairs: Vec<String>,
    pub denoise: DenoiseConfig,
    pub loss: LossSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSearchReport {
    pub best_r: f64,
    pub table: Vec<OrderRow>,
    pub config: SearchConfig,
}

/// Smallest `r` whose total lies within `1e-9` (absolute plus relative) of the minimum.
pub fn argmin_order(table: &[OrderRow]) -> Option<f64> {
    let best = table.iter().map(|row| row.total_loss).fold(f64::INFINITY, f64::min);
    let band = 1e-9 + 1e-9 * best.abs();
    table
        .iter()
        .filter(|row| row.total_loss - best <= band)
        .map(|row| row.r)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))))
}

/// Denoises every pair at every candidate order and returns the order with
/// the smallest summed loss. Jobs run in parallel; sums are formed in
/// dataset order afterwards.
pub fn order_search(ds: &Dataset, orders: &[f64], base: &DenoiseConfig, loss: &LossSpec) -> Result<OrderSearchReport> {
    if orders.is_empty() {
        return Err(Error::invalid("no candidate orders"));
    }
    if let Some(r) = orders.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::invalid(format!("candidate orders must be > 0, got {r}")));
    }
    base.validate()?;
    let npairs = ds.pairs.len();
    let jobs: Vec<(usize, usize)> = (0..orders.len()).flat_map(|c| (0..npairs).map(move |p| (c, p))).collect();
    let results = exec::map_indexed(&jobs, |_, &(c, p)| -> Result<f64> {
        let r = orders[c];
        let annotate = |e: Error| Error::AtOrder { order: r, source: Box::new(e) };
        let cfg = DenoiseConfig { r: FracOrder::new(r)?, ..*base };
        let pair = &ds.pairs[p];
        let out = denoise(&pair.noisy, &cfg).map_err(annotate)?;
        let r_loss = FracOrder::new(loss.r_loss.unwrap_or(r)).map_err(annotate)?;
        tvr_loss(&out.output, &pair.clean, r_loss, loss.p, loss.beta0, loss.beta1).map_err(annotate)
    });
    let mut losses = results.into_iter();
    let mut table = Vec::with_capacity(orders.len());
    for &r in orders {
        let per_pair = losses.by_ref().take(npairs).collect::<Result<Vec<f64>>>()?;
        let total_loss = per_pair.iter().sum();
        table.push(OrderRow { r, total_loss, per_pair });
    }
    let best_r = argmin_order(&table).ok_or_else(|| Error::NonFinite("no finite total loss".into()))?;
    Ok(OrderSearchReport {
        best_r,
        table,
        config: SearchConfig {
            orders: orders.to_vec(),
            pairs: ds.pairs.iter().map(|p| p.name.clone()).collect(),
            denoise: *base,
            loss: *loss,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{l1_integral, Signal1D};
    use crate::tvr::rof_energy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(clean: &Field2D, amp: f64, seed: u64) -> Field2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        clean.with_values(clean.values().mapv(|v| v + rng.random_range(-amp..amp)).into_dyn()).unwrap()
    }

    fn squares(n: usize) -> Field2D {
        Field2D::from_fn(n, n, |x, y| if (0.3..0.7).contains(&x) && (0.2..0.6).contains(&y) { 0.8 } else { 0.2 })
            .unwrap()
    }

    #[test]
    fn tiny_alpha_returns_the_input() {
        let eta = noisy(&squares(24), 0.1, 1);
        let cfg = DenoiseConfig::new(1e-12, 0.6, LpIndex::TWO).unwrap();
        let rep = denoise(&eta, &cfg).unwrap();
        let d = eta.with_values((rep.output.values() - eta.values()).into_dyn()).unwrap();
        assert!(l1_integral(&d) <= 1e-6);
    }

    #[test]
    fn constants_stay_put_at_integer_order() {
        let c = Field2D::constant(16, 16, 0.4).unwrap();
        let rep = denoise(&c, &DenoiseConfig::new(0.5, 1.0, LpIndex::TWO).unwrap()).unwrap();
        assert_eq!(rep.output, c);
        assert!(rep.converged);
    }

    #[test]
    fn step_signal_energy_decreases() {
        let n = 256;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta = Signal1D::from_fn(n, |x| if x < 0.5 { 0.0 } else { 1.0 }).unwrap();
        let eta = eta.with_values(eta.values().mapv(|v| v + rng.random_range(-0.2..0.2)).into_dyn()).unwrap();
        let cfg = DenoiseConfig { max_iters: 60, ..DenoiseConfig::new(0.1, 1.0, LpIndex::TWO).unwrap() };
        let rep = denoise(&eta, &cfg).unwrap();
        assert!(rep.energies.windows(2).all(|w| w[1] <= w[0]));
        let prm = RofParams { alpha: 0.1, r: cfg.r, p: cfg.p, eps: rep.eps };
        let before = rof_energy(&eta, &eta, &prm).unwrap();
        let after = rof_energy(&rep.output, &eta, &prm).unwrap();
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(DenoiseConfig::new(0.0, 1.0, LpIndex::TWO).is_err());
        assert!(DenoiseConfig::new(1.0, 1.0, LpIndex::INF).is_err());
        let cfg = DenoiseConfig::new(1.0, 1.0, LpIndex::TWO).unwrap();
        assert!(DenoiseConfig { max_iters: 0, ..cfg }.validate().is_err());
        assert!(DenoiseConfig { eps: Some(0.0), ..cfg }.validate().is_err());
    }

    #[test]
    fn order_search_contracts() {
        let clean = squares(16);
        let ds = Dataset::new(vec![Pair { name: "a".into(), clean: clean.clone(), noisy: clean.clone() }]).unwrap();
        let cfg = DenoiseConfig { max_iters: 5, ..DenoiseConfig::new(1e-12, 1.0, LpIndex::TWO).unwrap() };
        let loss = LossSpec { beta1: 0.0, ..LossSpec::default() };
        let rep = order_search(&ds, &[1.5, 0.5, 1.0], &cfg, &loss).unwrap();
        assert_eq!(rep.best_r, 0.5);
        let rep = order_search(&ds, &[0.5], &cfg, &LossSpec::default()).unwrap();
        assert_eq!(rep.best_r, 0.5);
        assert!(order_search(&ds, &[], &cfg, &loss).is_err());
        assert!(order_search(&ds, &[0.0], &cfg, &loss).is_err());

        let ds = Dataset::new(vec![
            Pair { name: "a".into(), clean: clean.clone(), noisy: noisy(&clean, 0.2, 7) },
            Pair { name: "b".into(), clean: clean.clone(), noisy: noisy(&clean, 0.1, 8) },
        ])
        .unwrap();
        let cfg = DenoiseConfig { max_iters: 20, ..DenoiseConfig::new(0.01, 1.0, LpIndex::TWO).unwrap() };
        let rep = order_search(&ds, &[0.5, 1.0, 1.5], &cfg, &LossSpec::default()).unwrap();
        assert_eq!(Some(rep.best_r), argmin_order(&rep.table));
        for row in &rep.table {
            assert_eq!(row.per_pair.len(), 2);
            assert_eq!(row.total_loss, row.per_pair[0] + row.per_pair[1]);
        }
        let again =
            crate::exec::with_threads(1, || order_search(&ds, &[0.5, 1.0, 1.5], &cfg, &LossSpec::default()).unwrap());
        assert_eq!(serde_json::to_string(&rep).unwrap(), serde_json::to_string(&again).unwrap());
        let v = serde_json::to_value(&rep).unwrap();
        assert!(v["table"][0]["per_pair"].is_array() && v["config"].is_object());
    }

    #[test]
    fn ties_go_to_the_smallest_order() {
        let row = |r: f64, l: f64| OrderRow { r, total_loss: l, per_pair: vec![l] };
        assert_eq!(argmin_order(&[row(1.0, 2.0), row(0.7, 2.0 + 1e-12), row(0.9, 3.0)]), Some(0.7));
        assert_eq!(argmin_order(&[row(1.0, 1.0), row(0.7, 1.1)]), Some(1.0));
    }

    #[test]
    fn dataset_directory() {
        let dir = tempfile::tempdir().unwrap();
        let clean = squares(8);
        io::write_pgm(&dir.path().join("b.clean.pgm"), &clean, 255).unwrap();
        io::write_pgm(&dir.path().join("b.noisy.pgm"), &noisy(&clean, 0.1, 2), 255).unwrap();
        io::write_matrix_csv(&dir.path().join("a.clean.csv"), &clean).unwrap();
        io::write_matrix_csv(&dir.path().join("a.noisy.csv"), &clean).unwrap();
        let ds = Dataset::load(dir.path()).unwrap();
        let names: Vec<&str> = ds.pairs().iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        std::fs::remove_file(dir.path().join("a.noisy.csv")).unwrap();
        assert!(Dataset::load(dir.path()).is_err());
    }
}
