//! Minimization of the normalized invariants `λ̄_k(u) = λ_k(u) (∫ u^N)^{4/n}`
//! over zonal densities `u = q²`, `q = Σ c_l Z_l`.
//!
//! Descent is projected gradient with Armijo backtracking and
//! Barzilai–Borwein trial steps. Where `λ_k` collides with a neighbour the
//! objective is replaced by a log-sum-exp smoothing whose temperature is
//! annealed towards zero.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::lemma3_rhs;
use crate::einstein::{EinsteinData, OperatorCoefficients};
use crate::error::{LabError, Result};
use crate::linalg::{dot, norm2, Matrix};
use crate::scalar::Real;
use crate::spectral::{
    assemble_mass, assemble_stiffness, normalized_invariant, solve_generalized_eigen,
    ConformalDensity, GeneralizedSpectrum,
};
use crate::toolkit::fixed_point_residual;
use crate::zonal::{build_basis, build_quadrature, ZonalBasis, ZonalField};

/// Relative spectral gap below which the plain gradient is refused.
pub const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OptimizerConfig<T: Real> {
    /// Which invariant to minimize, 1 or 2.
    pub k: usize,
    /// Degree of `q`.
    pub l_opt: usize,
    /// Degree of the eigenfield basis.
    pub l_eig: usize,
    /// Quadrature nodes.
    pub nodes: usize,
    /// Seeded random starts in addition to the two-bubble start.
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Two-bubble initializer scale and mass split.
    pub init_eps: T,
    pub init_split: T,
    /// Initial smoothing temperature relative to the objective; 0 disables.
    pub temperature: T,
    /// Temperature below which smoothing is switched off.
    pub min_temperature: T,
    /// Stop when `‖∇F‖ ‖c‖ / F` falls below this at the final temperature.
    pub grad_tol: T,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        Self {
            k: 2,
            l_opt: 16,
            l_eig: 48,
            nodes: 200,
            restarts: 8,
            max_iters: 500,
            seed: 0,
            init_eps: T::lit(0.3),
            init_split: T::lit(0.5),
            temperature: T::lit(1e-3),
            min_temperature: T::lit(1e-9),
            grad_tol: T::lit(1e-9),
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidArgument(msg));
        if !(self.k == 1 || self.k == 2) {
            return bad(format!("k must be 1 or 2, got {}", self.k));
        }
        if self.l_opt == 0 || self.l_opt >= self.nodes {
            return bad(format!("l_opt = {} must lie in [1, nodes)", self.l_opt));
        }
        if self.l_eig < self.k + 1 || self.l_eig >= self.nodes {
            return bad(format!("l_eig = {} must lie in [k+1, nodes)", self.l_eig));
        }
        if !(self.init_eps > T::zero()) {
            return bad(format!("init_eps must be positive, got {}", self.init_eps));
        }
        if !(self.init_split >= T::zero() && self.init_split <= T::one()) {
            return bad(format!("init_split must lie in [0, 1], got {}", self.init_split));
        }
        if !(self.temperature >= T::zero()) || !(self.min_temperature >= T::zero()) {
            return bad("temperatures must be nonnegative".into());
        }
        Ok(())
    }
}

/// Discretization shared by every evaluation: `q` lives in `qbasis`, the
/// eigenfields in `basis`, both on the same quadrature rule.
#[derive(Debug, Clone)]
pub struct InvariantProblem<T: Real> {
    pub coeffs: OperatorCoefficients<T>,
    pub qbasis: ZonalBasis<T>,
    pub basis: ZonalBasis<T>,
    stiffness: Matrix<T>,
}

/// Spectrum of one density, normalized.
#[derive(Debug, Clone)]
pub struct Evaluation<T: Real> {
    pub q: ZonalField<T>,
    pub density: ConformalDensity<T>,
    pub spectrum: GeneralizedSpectrum<T>,
    /// `λ̄_1 ≤ … ≤ λ̄_{k+1}`.
    pub bars: Vec<T>,
}

impl<T: Real> InvariantProblem<T> {
    pub fn new(data: &EinsteinData<T>, l_opt: usize, l_eig: usize, nodes: usize) -> Result<Self> {
        let rule = build_quadrature(data, nodes)?;
        let basis = build_basis(&rule, l_eig)?;
        let coeffs = crate::einstein::derive_coefficients(data);
        let stiffness = assemble_stiffness(&coeffs, &basis)?;
        Ok(Self {
            coeffs,
            qbasis: build_basis(&rule, l_opt)?,
            basis,
            stiffness,
        })
    }

    pub fn dimension(&self) -> u32 {
        self.coeffs.n
    }

    pub fn param_len(&self) -> usize {
        self.qbasis.len()
    }

    /// Eigenpairs `1..=count` of the density `u = q²`.
    pub fn evaluate(&self, params: &[T], count: usize) -> Result<Evaluation<T>> {
        if params.len() != self.param_len() {
            return Err(LabError::LengthMismatch {
                expected: self.param_len(),
                got: params.len(),
            });
        }
        if params.iter().all(|&c| c == T::zero()) {
            return Err(LabError::DegenerateDensity);
        }
        let q = self.qbasis.field(params.to_vec())?;
        let density = ConformalDensity::from_q(self.qbasis.rule(), &q)?;
        let mass = assemble_mass(&density, &self.basis)?;
        let spectrum = solve_generalized_eigen(&self.stiffness, &mass, count, &self.basis)?;
        let bars = normalized_invariant(&spectrum, &density);
        Ok(Evaluation {
            q,
            density,
            spectrum,
            bars,
        })
    }

    /// `λ̄_k` of `u = q²`.
    pub fn objective(&self, params: &[T], k: usize) -> Result<T> {
        Ok(self.evaluate(params, k)?.bars[k - 1])
    }

    /// Gradient of `λ̄_i` in the coefficients of `q`, for each computed mode.
    ///
    /// With `w_i` the B-normalized eigenfield and `V = ∫ q^{2N}`:
    /// `∂λ̄_i = V^{4/n} (−λ_i ∫ ∂(u^{N−2}) w_i²) + λ_i (4/n) V^{4/n−1} ∂V`.
    pub fn mode_gradients(&self, eval: &Evaluation<T>) -> Vec<Vec<T>> {
        let rule = self.qbasis.rule();
        let n = T::lit(f64::from(self.dimension()));
        let big_n = self.coeffs.exponent();
        let two = T::lit(2.0);
        let p = two * (big_n - two);
        let vol = eval.density.volume();
        let four_n = T::lit(4.0) / n;
        let vf = vol.powf(four_n);
        let qv = eval.q.values();
        // ∂(|q|^p) = p |q|^{p−1} sign(q), ∂(q^{2N}) = 2N q^{2N−1}
        let dweight: Vec<T> = qv
            .iter()
            .map(|&x| {
                if x == T::zero() {
                    T::zero()
                } else {
                    p * x.abs().powf(p - T::one()) * x.signum()
                }
            })
            .collect();
        let dvol: Vec<T> = qv
            .iter()
            .map(|&x| two * big_n * x.abs().powf(two * big_n - T::one()) * x.signum())
            .collect();
        let table = self.qbasis.node_table();
        let w = rule.weights();
        eval.spectrum
            .eigenvalues
            .iter()
            .zip(&eval.spectrum.eigenfields)
            .map(|(&lambda, field)| {
                let g: Vec<T> = (0..rule.len())
                    .map(|j| {
                        let wk = field.values()[j];
                        w[j] * (-vf * lambda * dweight[j] * wk * wk
                            + lambda * four_n * vf / vol * dvol[j])
                    })
                    .collect();
                table.iter().map(|row| dot(row, &g)).collect()
            })
            .collect()
    }

    /// Gradient of `λ̄_k`, projected orthogonally to `c`. Refused when `λ_k`
    /// is within `GAP_TOL` (relative) of a neighbour.
    pub fn gradient(&self, params: &[T], k: usize) -> Result<Vec<T>> {
        let eval = self.evaluate(params, k + 1)?;
        let b = &eval.bars;
        let lk = b[k - 1];
        let tol = T::lit(GAP_TOL);
        let above = (b[k] - lk) / lk;
        let below = if k > 1 { (lk - b[k - 2]) / lk } else { T::infinity() };
        if above < tol || below < tol {
            return Err(LabError::DegenerateGap {
                gap: above.min(below).to_f64_lossy(),
                tol: GAP_TOL,
            });
        }
        let grads = self.mode_gradients(&eval);
        Ok(project_out(&grads[k - 1], params))
    }

    /// Central finite-difference gradient of `λ̄_k` with step `h`.
    pub fn finite_difference_gradient(&self, params: &[T], k: usize, h: T) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(params.len());
        let mut x = params.to_vec();
        for i in 0..params.len() {
            x[i] = params[i] + h;
            let fp = self.objective(&x, k)?;
            x[i] = params[i] - h;
            let fm = self.objective(&x, k)?;
            x[i] = params[i];
            out.push((fp - fm) / (T::lit(2.0) * h));
        }
        Ok(out)
    }

    /// Rescale `c` so that `∫ q^{2N} = 1`.
    pub fn normalize(&self, params: &[T]) -> Result<Vec<T>> {
        let q = self.qbasis.field(params.to_vec())?;
        let d = ConformalDensity::from_q(self.qbasis.rule(), &q)?;
        let s = d.volume().powf(-T::one() / (T::lit(2.0) * self.coeffs.exponent()));
        Ok(params.iter().map(|&c| c * s).collect())
    }

    /// `q` for a density concentrated at both poles:
    /// `u = split·β_N + (1−split)·β_S`, `β(r) = (r² + ε²)^{−(n−4)/2}` scaled to
    /// unit `L^N` norm, `q = √u` projected to degree `l_opt` and normalized.
    pub fn two_bubble_initializer(&self, eps: T, split: T) -> Result<Vec<T>> {
        if !(eps > T::zero()) {
            return Err(LabError::InvalidArgument(format!("bubble scale must be positive, got {eps}")));
        }
        if !(split >= T::zero() && split <= T::one()) {
            return Err(LabError::InvalidArgument(format!("split must lie in [0, 1], got {split}")));
        }
        let rule = self.qbasis.rule();
        let m = T::lit((f64::from(self.dimension()) - 4.0) / 2.0);
        let big_n = self.coeffs.exponent();
        let profile = |r: T| (r * r + eps * eps).powf(-m);
        let thetas = rule.colatitudes();
        let north: Vec<T> = thetas.iter().map(|&t| profile(t)).collect();
        let south: Vec<T> = thetas.iter().map(|&t| profile(T::PI() - t)).collect();
        let scale = T::one() / crate::toolkit::lebesgue_norm(&north, big_n, rule);
        let q: Vec<T> = north
            .iter()
            .zip(&south)
            .map(|(&a, &b)| ((split * a + (T::one() - split) * b) * scale).sqrt())
            .collect();
        self.normalize(&self.qbasis.project(&q)?)
    }
}

fn project_out<T: Real>(g: &[T], c: &[T]) -> Vec<T> {
    let cc = dot(c, c);
    let s = if cc > T::zero() { dot(g, c) / cc } else { T::zero() };
    g.iter().zip(c).map(|(&gi, &ci)| gi - s * ci).collect()
}

/// Smoothed objective and its gradient.
///
/// A lower neighbour enters through a soft maximum, an upper neighbour
/// through a soft minimum; both reduce to `λ̄_k` as the temperature → 0.
fn smoothed<T: Real>(bars: &[T], grads: &[Vec<T>], k: usize, tau: T) -> (T, Vec<T>) {
    let lk = bars[k - 1];
    let mut value = lk;
    let mut grad = grads[k - 1].clone();
    if tau == T::zero() {
        return (value, grad);
    }
    let cut = T::lit(40.0) * tau;
    let sigmoid = |x: T| T::one() / (T::one() + (-x).exp());
    // soft-min with λ̄_{k+1}
    if let Some(&up) = bars.get(k) {
        if up - value < cut {
            let d = up - value;
            let wk = sigmoid(d / tau);
            value = value - tau * (T::one() + (-d / tau).exp()).ln();
            grad = grad
                .iter()
                .zip(&grads[k])
                .map(|(&a, &b)| wk * a + (T::one() - wk) * b)
                .collect();
        }
    }
    // soft-max with λ̄_{k−1}
    if k >= 2 {
        let low = bars[k - 2];
        let d = value - low;
        if d < cut {
            let wv = sigmoid(d / tau);
            value = value.max(low) + tau * (T::one() + (-(d.abs()) / tau).exp()).ln();
            grad = grad
                .iter()
                .zip(&grads[k - 2])
                .map(|(&a, &b)| wv * a + (T::one() - wv) * b)
                .collect();
        }
    }
    (value, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalStatus {
    /// Gradient below tolerance at the final temperature.
    Converged,
    MaxIterations,
    /// No acceptable step at the final temperature.
    Stalled,
    /// `max_iters = 0`: the start is returned unchanged.
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TraceStep<T: Real> {
    pub iteration: usize,
    /// `λ̄_k`.
    pub objective: T,
    /// Smoothed objective at the current temperature.
    pub smoothed: T,
    pub grad_norm: T,
    /// `λ̄_2 − λ̄_1`.
    pub gap: T,
    /// `‖ |w_k|/‖w_k‖_N − u ‖_N`.
    pub fixed_point_residual: T,
    pub step: T,
    pub temperature: T,
    /// Seconds since the start of this run; excluded from serialized traces.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunTrace<T: Real> {
    pub start: usize,
    pub seed: u64,
    pub steps: Vec<TraceStep<T>>,
    pub status: TerminalStatus,
    /// Line-search rejections and other events.
    pub annotations: Vec<String>,
    pub final_params: Vec<T>,
    pub final_objective: T,
}

impl<T: Real> RunTrace<T> {
    /// Accepted-step objectives never increase.
    pub fn is_monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].objective <= w[0].objective)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OptimizerReport<T: Real> {
    pub config: OptimizerConfig<T>,
    pub n: u32,
    pub best_start: usize,
    pub best_params: Vec<T>,
    /// `λ̄_1 ≤ λ̄_2 ≤ λ̄_3` at the best density.
    pub best_bars: Vec<T>,
    pub best_objective: T,
    /// `λ̄_k` of the two-bubble start.
    pub initial_objective: T,
    pub initial_residual: T,
    pub final_residual: T,
    /// `μ̂_2 K₂² 2^{−4/n}` (for `k = 2`); the hypothesis asks for `< 1`.
    pub pro1_value: T,
    pub pro1_flag: bool,
    /// `[μ₁^{n/4} + (K₂^{−2})^{n/4}]^{4/n}` with `μ₁ = K₂^{−2}` on the round sphere.
    pub lemma3_rhs: T,
    pub below_lemma3_rhs: bool,
    pub traces: Vec<RunTrace<T>>,
}

fn residual_of<T: Real>(problem: &InvariantProblem<T>, eval: &Evaluation<T>, k: usize) -> Result<T> {
    fixed_point_residual(
        eval.spectrum.eigenfields[k - 1].values(),
        &eval.density,
        problem.qbasis.rule(),
    )
}

/// Descend from one start.
pub fn descend<T: Real>(
    problem: &InvariantProblem<T>,
    config: &OptimizerConfig<T>,
    start: usize,
    seed: u64,
    init: Vec<T>,
) -> Result<RunTrace<T>> {
    let clock = Instant::now();
    let k = config.k;
    let modes = k + 1;
    let mut c = problem.normalize(&init)?;
    let mut eval = problem.evaluate(&c, modes)?;
    let mut tau_rel = config.temperature;
    let mut annotations = Vec::new();

    let mut steps = Vec::new();
    let gap_of = |e: &Evaluation<T>| e.bars[1] - e.bars[0];
    let mut record = |it: usize, e: &Evaluation<T>, f_s: T, gn: T, step: T, tau: T| -> Result<()> {
        steps.push(TraceStep {
            iteration: it,
            objective: e.bars[k - 1],
            smoothed: f_s,
            grad_norm: gn,
            gap: gap_of(e),
            fixed_point_residual: residual_of(problem, e, k)?,
            step,
            temperature: tau,
            wall_time: clock.elapsed().as_secs_f64(),
        });
        Ok(())
    };

    let grads0 = problem.mode_gradients(&eval);
    let (f0, g0) = smoothed(&eval.bars, &grads0, k, tau_rel * eval.bars[k - 1]);
    let g0 = project_out(&g0, &c);
    record(0, &eval, f0, norm2(&g0), T::zero(), tau_rel)?;
    if config.max_iters == 0 {
        let final_objective = eval.bars[k - 1];
        return Ok(RunTrace {
            start,
            seed,
            steps,
            status: TerminalStatus::NotRun,
            annotations,
            final_params: c,
            final_objective,
        });
    }

    let mut status = TerminalStatus::MaxIterations;
    let mut prev: Option<(Vec<T>, Vec<T>)> = None;
    let mut last_step = T::zero();
    let cnorm = norm2(&c);
    for it in 1..=config.max_iters {
        let tau = tau_rel * eval.bars[k - 1];
        let grads = problem.mode_gradients(&eval);
        let (f, g) = smoothed(&eval.bars, &grads, k, tau);
        let g = project_out(&g, &c);
        let gn = norm2(&g);
        if !(gn * cnorm / f > config.grad_tol) {
            if tau_rel > config.min_temperature {
                tau_rel = tau_rel * T::lit(0.25);
                prev = None;
                continue;
            }
            status = TerminalStatus::Converged;
            break;
        }
        // Barzilai–Borwein trial step, else a fraction of the parameter scale
        let mut step = match &prev {
            Some((dc, dg)) => {
                let sy = dot(dc, dg);
                if sy > T::zero() {
                    dot(dc, dc) / sy
                } else {
                    last_step * T::lit(2.0)
                }
            }
            None => T::lit(1e-2) * cnorm / gn,
        };
        if !(step > T::zero()) || !step.is_finite() {
            step = T::lit(1e-2) * cnorm / gn;
        }
        let slope = gn * gn;
        let mut accepted = None;
        for _ in 0..50 {
            let trial: Vec<T> = c.iter().zip(&g).map(|(&ci, &gi)| ci - step * gi).collect();
            match problem.evaluate(&trial, modes) {
                Ok(te) => {
                    let tg = problem.mode_gradients(&te);
                    let (ft, _) = smoothed(&te.bars, &tg, k, tau);
                    let fk = te.bars[k - 1];
                    if ft.is_finite()
                        && ft <= f - T::lit(1e-4) * step * slope
                        && fk <= eval.bars[k - 1]
                    {
                        accepted = Some((trial, te));
                        break;
                    }
                    if !ft.is_finite() {
                        annotations.push(format!(
                            "iteration {it}: non-finite objective, step {:e} rejected",
                            step.to_f64_lossy()
                        ));
                    }
                }
                Err(e) => annotations.push(format!(
                    "iteration {it}: step {:e} rejected ({e})",
                    step.to_f64_lossy()
                )),
            }
            step = step * T::lit(0.5);
        }
        match accepted {
            Some((trial, _)) => {
                let next = problem.normalize(&trial)?;
                let next_eval = problem.evaluate(&next, modes)?;
                let next_grads = problem.mode_gradients(&next_eval);
                let (_, ng) = smoothed(&next_eval.bars, &next_grads, k, tau);
                let ng = project_out(&ng, &next);
                let dc: Vec<T> = next.iter().zip(&c).map(|(&a, &b)| a - b).collect();
                let dg: Vec<T> = ng.iter().zip(&g).map(|(&a, &b)| a - b).collect();
                prev = Some((dc, dg));
                last_step = step;
                c = next;
                eval = next_eval;
                let (fs, _) = smoothed(&eval.bars, &next_grads, k, tau);
                record(it, &eval, fs, norm2(&ng), step, tau_rel)?;
            }
            None => {
                if tau_rel > config.min_temperature {
                    tau_rel = tau_rel * T::lit(0.25);
                    prev = None;
                    continue;
                }
                status = TerminalStatus::Stalled;
                break;
            }
        }
    }
    let final_objective = eval.bars[k - 1];
    Ok(RunTrace {
        start,
        seed,
        steps,
        status,
        annotations,
        final_params: c,
        final_objective,
    })
}

/// Start `index`: 0 is the configured two-bubble start; later starts draw a
/// random split and scale plus coefficient noise from a seeded stream.
pub fn start_params<T: Real>(
    problem: &InvariantProblem<T>,
    config: &OptimizerConfig<T>,
    index: usize,
) -> Result<(u64, Vec<T>)> {
    let seed = config.seed.wrapping_add(index as u64);
    if index == 0 {
        return Ok((seed, problem.two_bubble_initializer(config.init_eps, config.init_split)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = T::lit(rng.gen_range(0.2..0.8));
    let eps = T::lit(rng.gen_range(0.15..0.6));
    let mut c = problem.two_bubble_initializer(eps, split)?;
    let c0 = c[0].abs();
    let poles = problem.qbasis.pole_values();
    for l in 1..c.len() {
        let noise = T::lit(rng.gen_range(-1.0..1.0) * 0.05);
        c[l] += noise * c0 * poles[0] / poles[l];
    }
    Ok((seed, c))
}

/// Multi-start minimization of `λ̄_k`.
pub fn minimize<T: Real>(data: &EinsteinData<T>, config: &OptimizerConfig<T>) -> Result<OptimizerReport<T>> {
    config.validate()?;
    let problem = InvariantProblem::new(data, config.l_opt, config.l_eig, config.nodes)?;
    let k = config.k;
    let starts: Vec<(u64, Vec<T>)> = (0..=config.restarts)
        .map(|i| start_params(&problem, config, i))
        .collect::<Result<_>>()?;
    let traces: Vec<RunTrace<T>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (seed, init))| descend(&problem, config, i, seed, init))
        .collect::<Result<_>>()?;

    let best = traces
        .iter()
        .min_by(|a, b| {
            a.final_objective
                .partial_cmp(&b.final_objective)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.start.cmp(&b.start))
        })
        .expect("at least one start");
    let best_eval = problem.evaluate(&best.final_params, 3.min(problem.basis.len()))?;
    let initial = &traces[0].steps[0];
    let final_residual = residual_of(&problem, &best_eval, k)?;
    let coeffs = &problem.coeffs;
    let n = data.dimension();
    let best_objective = best.final_objective;
    let pro1_value = best_eval.bars[1] * coeffs.k2_sq() * T::lit(2.0).powf(-T::lit(4.0 / f64::from(n)));
    let rhs = lemma3_rhs(n, coeffs.k2_inv_sq, coeffs.k2_inv_sq);
    Ok(OptimizerReport {
        config: *config,
        n,
        best_start: best.start,
        best_params: best.final_params.clone(),
        best_bars: best_eval.bars.clone(),
        best_objective,
        initial_objective: initial.objective,
        initial_residual: initial.fixed_point_residual,
        final_residual,
        pro1_value,
        pro1_flag: pro1_value < T::one(),
        lemma3_rhs: rhs,
        below_lemma3_rhs: best_eval.bars[1] < rhs,
        traces,
    })
}
