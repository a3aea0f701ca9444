//! Spectral projected gradient with a nonmonotone (Grippo–Lampariello–Lucidi)
//! line search and safeguarded Barzilai–Borwein step lengths.
//!
//! Each iteration moves along `d_k = P_Ω(x_k − λ_k ∇g(x_k)) − x_k`, picks
//! `α_k ∈ (0, α0]` by backtracking with quadratic interpolation until
//!
//! ```text
//! g(x_k + α d_k) ≤ max_{0 ≤ j ≤ min(k, M−1)} g(x_{k−j}) + γ α ∇g(x_k)ᵀ d_k
//! ```
//!
//! and then updates `λ_{k+1} = clamp(sᵀs / sᵀt, λ_min, λ_max)` (or `λ_max`
//! when `sᵀt ≤ 0`). Because `α ≤ 1` and `Ω` is convex, every iterate stays
//! feasible without re-projection.
//!
//! Besides the projected-gradient stationarity test the engine supports
//! three practical stopping rules, each of which can be disabled by setting
//! its tolerance to zero (or by not supplying a rounding probe):
//!
//! * small decrease: `|g(x_{k+1}) − g(x_k)| < eps_a`;
//! * window stall: the last `M` objective values each differ by less than
//!   `eps_b` from the value `M` iterations earlier;
//! * rounded stall: the discrete point produced by the probe has not changed
//!   for `stall_n` consecutive probes.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{BlockVector, DiscreteAssignment};
use crate::projection::{stationarity_residual, FeasibleSetKind};

/// Smallest trial step before the line search gives up.
pub const ALPHA_UNDERFLOW: f64 = 1e-16;

/// Tolerance used to decide whether a starting point already lies in `Ω`.
const FEASIBILITY_TOL: f64 = 1e-12;

/// A differentiable objective over block vectors.
pub trait SmoothObjective {
    fn value(&self, x: &BlockVector) -> f64;

    fn gradient_into(&self, x: &BlockVector, out: &mut BlockVector);

    fn gradient(&self, x: &BlockVector) -> BlockVector {
        let mut g = BlockVector::zeros(x.layout().clone());
        self.gradient_into(x, &mut g);
        g
    }
}

/// Adapts a pair of closures into a [`SmoothObjective`].
pub struct FnObjective<F, G> {
    value: F,
    gradient: G,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(value: F, gradient: G) -> Self {
        Self { value, gradient }
    }
}

impl<F, G> SmoothObjective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    fn value(&self, x: &BlockVector) -> f64 {
        (self.value)(x.as_slice())
    }

    fn gradient_into(&self, x: &BlockVector, out: &mut BlockVector) {
        (self.gradient)(x.as_slice(), out.as_mut_slice())
    }
}

/// Whether the spectral step scales the gradient inside the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DirectionStep {
    /// `d = P(x − λ g) − x`.
    #[default]
    Spectral,
    /// `d = P(x − g) − x`; λ is still maintained but never used.
    Unit,
}

/// Acceptance interval for the interpolated step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Safeguard {
    /// `[σ1 α, σ2 α]`.
    #[default]
    Scaled,
    /// `[σ1, σ2 α]`.
    Literal,
}

impl FromStr for DirectionStep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spectral" => Ok(DirectionStep::Spectral),
            "unit" => Ok(DirectionStep::Unit),
            other => Err(format!(
                "unknown direction step '{other}' (expected unit|spectral)"
            )),
        }
    }
}

impl FromStr for Safeguard {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scaled" => Ok(Safeguard::Scaled),
            "literal" => Ok(Safeguard::Literal),
            other => Err(format!(
                "unknown safeguard '{other}' (expected literal|scaled)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpgConfig {
    /// Sufficient-decrease parameter γ in (0, 1).
    pub gamma: f64,
    /// Nonmonotone window M ≥ 1.
    pub history: usize,
    pub sigma1: f64,
    pub sigma2: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda0: f64,
    /// First trial step of every line search, in (0, 1].
    pub alpha0: f64,
    /// Stationarity tolerance on `‖P(x − g) − x‖_∞`.
    pub eps: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    /// Number of unchanged rounding probes that ends the run.
    pub stall_n: usize,
    pub max_iter: usize,
    pub direction_step: DirectionStep,
    pub safeguard: Safeguard,
    /// Run the rounding probe every this many iterations.
    pub probe_every: usize,
    pub record_trace: bool,
}

impl Default for SpgConfig {
    fn default() -> Self {
        Self {
            gamma: 1e-4,
            history: 10,
            sigma1: 0.1,
            sigma2: 0.9,
            lambda_min: 1e-10,
            lambda_max: 1e10,
            lambda0: 1.0,
            alpha0: 0.9,
            eps: 1e-8,
            eps_a: 1e-2,
            eps_b: 1e-2,
            stall_n: 50,
            max_iter: 100_000,
            direction_step: DirectionStep::Spectral,
            safeguard: Safeguard::Scaled,
            probe_every: 1,
            record_trace: false,
        }
    }
}

impl SpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if self.history == 0 {
            return bad("history window M must be at least 1".into());
        }
        if !(0.0 < self.sigma1 && self.sigma1 < self.sigma2 && self.sigma2 < 1.0) {
            return bad(format!(
                "need 0 < sigma1 < sigma2 < 1, got {} and {}",
                self.sigma1, self.sigma2
            ));
        }
        if !(0.0 < self.lambda_min && self.lambda_min <= self.lambda_max)
            || !self.lambda_max.is_finite()
        {
            return bad(format!(
                "need 0 < lambda_min <= lambda_max < inf, got {} and {}",
                self.lambda_min, self.lambda_max
            ));
        }
        if !(self.lambda_min <= self.lambda0 && self.lambda0 <= self.lambda_max) {
            return bad(format!(
                "lambda0 = {} outside [{}, {}]",
                self.lambda0, self.lambda_min, self.lambda_max
            ));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return bad(format!("alpha0 must lie in (0, 1], got {}", self.alpha0));
        }
        for (name, v) in [
            ("eps", self.eps),
            ("eps_a", self.eps_a),
            ("eps_b", self.eps_b),
        ] {
            if v.is_nan() || v < 0.0 {
                return bad(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if self.stall_n == 0 {
            return bad("stall window N must be at least 1".into());
        }
        if self.probe_every == 0 {
            return bad("probe interval must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    Stationary,
    SmallDecrease,
    WindowStall,
    RoundedStall,
    MaxIter,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::Stationary => "stationary",
            TerminationReason::SmallDecrease => "small_decrease",
            TerminationReason::WindowStall => "window_stall",
            TerminationReason::RoundedStall => "rounded_stall",
            TerminationReason::MaxIter => "max_iter",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ring buffer of recent objective values.
#[derive(Debug, Clone)]
pub struct ObjectiveHistory {
    values: VecDeque<f64>,
    capacity: usize,
}

impl ObjectiveHistory {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            values: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    /// History sized for window `m`: keeps the last `2m` values.
    pub fn for_window(m: usize) -> Self {
        Self::new(2 * m)
    }

    pub fn from_values(capacity: usize, values: &[f64]) -> Self {
        let mut h = Self::new(capacity);
        values.iter().for_each(|&v| h.push(v));
        h
    }

    pub fn push(&mut self, f: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(f);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.back().copied()
    }

    /// Maximum over the most recent `window` values (fewer if not yet stored).
    pub fn nonmonotone_max(&self, window: usize) -> f64 {
        self.values
            .iter()
            .rev()
            .take(window.max(1))
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// `max_{j<M} |f_{L−j} − f_{L−j−M}| < eps_b` once `2M` values exist.
    pub fn window_stalled(&self, window: usize, eps_b: f64) -> bool {
        let len = self.values.len();
        if window == 0 || len < 2 * window {
            return false;
        }
        let spread = (0..window)
            .map(|j| (self.values[len - 1 - j] - self.values[len - 1 - j - window]).abs())
            .fold(0.0, f64::max);
        spread < eps_b
    }
}

/// `P_Ω(x − λ g) − x`.
pub fn spectral_direction(
    x: &BlockVector,
    g: &BlockVector,
    lambda: f64,
    set: FeasibleSetKind,
) -> BlockVector {
    let mut d = x.add_scaled(-lambda, g);
    set.project_in_place(&mut d);
    for (di, xi) in d.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *di -= xi;
    }
    d
}

/// Safeguarded Barzilai–Borwein step `sᵀs / sᵀt` clamped to `[λ_min, λ_max]`.
pub fn bb_step_update(s: &BlockVector, t: &BlockVector, cfg: &SpgConfig) -> f64 {
    let st = s.dot(t);
    if st <= 0.0 {
        return cfg.lambda_max;
    }
    (s.dot(s) / st).min(cfg.lambda_max).max(cfg.lambda_min)
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x: BlockVector,
    pub f: f64,
    /// Objective evaluations spent, including the accepted one.
    pub trials: usize,
    pub g_max: f64,
}

/// Nonmonotone backtracking along `d` from `x`.
///
/// `history` must end with `g(x)`. The reference value is the maximum of
/// its last `cfg.history` entries.
pub fn nonmonotone_line_search<F>(
    x: &BlockVector,
    d: &BlockVector,
    history: &ObjectiveHistory,
    g_dot_d: f64,
    cfg: &SpgConfig,
    eval_f: F,
) -> Result<LineSearchOutcome>
where
    F: Fn(&BlockVector) -> f64,
{
    let f_x = history
        .last()
        .ok_or_else(|| Error::InvalidInput("line search needs a nonempty history".into()))?;
    let g_max = history.nonmonotone_max(cfg.history);
    let failure = |alpha, trials| Error::LineSearch {
        iteration: 0,
        alpha,
        trials,
        g_dot_d,
    };
    if g_dot_d.is_nan() || g_dot_d >= 0.0 {
        return Err(failure(0.0, 0));
    }
    let mut alpha = cfg.alpha0;
    let mut trials = 0;
    loop {
        let trial = x.add_scaled(alpha, d);
        let f_trial = eval_f(&trial);
        trials += 1;
        if f_trial.is_nan() {
            return Err(Error::Numeric {
                iteration: 0,
                what: "objective",
            });
        }
        if f_trial <= g_max + cfg.gamma * alpha * g_dot_d {
            return Ok(LineSearchOutcome {
                alpha,
                x: trial,
                f: f_trial,
                trials,
                g_max,
            });
        }
        let curvature = f_trial - f_x - alpha * g_dot_d;
        let alpha_tmp = -0.5 * alpha * alpha * g_dot_d / curvature;
        let lower = match cfg.safeguard {
            Safeguard::Scaled => cfg.sigma1 * alpha,
            Safeguard::Literal => cfg.sigma1,
        };
        alpha = if alpha_tmp >= lower && alpha_tmp <= cfg.sigma2 * alpha {
            alpha_tmp
        } else {
            alpha / 2.0
        };
        if alpha < ALPHA_UNDERFLOW {
            return Err(failure(alpha, trials));
        }
    }
}

/// One accepted step, as logged when `record_trace` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Index `k` of the iterate the step started from.
    pub iteration: usize,
    /// `g(x_k)`.
    pub f_prev: f64,
    /// `g(x_{k+1})`.
    pub f: f64,
    /// Stationarity residual at `x_k`.
    pub residual: f64,
    /// `λ_k` used to build the direction.
    pub lambda: f64,
    /// `λ_{k+1}` produced by the spectral update.
    pub lambda_next: f64,
    pub alpha: f64,
    pub ls_trials: usize,
    pub g_max: f64,
    pub g_dot_d: f64,
    /// Smallest entry of `x_{k+1}`.
    pub min_entry: f64,
    /// Largest `|Σ_r x^{(i)}_r − 1|` over the blocks of `x_{k+1}`.
    pub max_block_sum_dev: f64,
}

#[derive(Debug, Clone)]
pub struct SpgOutcome {
    pub x: BlockVector,
    pub f: f64,
    pub gradient: BlockVector,
    pub residual: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub termination: TerminationReason,
    pub value_evals: usize,
    pub gradient_evals: usize,
    /// Starting point after any projection onto `Ω`.
    pub x0: BlockVector,
    pub trace: Vec<IterationRecord>,
}

/// Probe mapping an iterate to a discrete point for the rounded-stall rule.
pub type RoundProbe<'a> = &'a mut dyn FnMut(&BlockVector) -> DiscreteAssignment;

struct RoundedStall {
    last: Option<DiscreteAssignment>,
    repeats: usize,
}

impl RoundedStall {
    fn observe(&mut self, d: DiscreteAssignment) -> usize {
        if self.last.as_ref() == Some(&d) {
            self.repeats += 1;
        } else {
            self.last = Some(d);
            self.repeats = 0;
        }
        self.repeats
    }
}

/// Minimizes `objective` over `set` starting from `x0`.
pub fn spg_minimize<O>(
    objective: &O,
    set: FeasibleSetKind,
    x0: BlockVector,
    cfg: &SpgConfig,
    mut probe: Option<RoundProbe<'_>>,
) -> Result<SpgOutcome>
where
    O: SmoothObjective + ?Sized,
{
    cfg.validate()?;
    if !x0.all_finite() {
        return Err(Error::InvalidInput("starting point is not finite".into()));
    }
    let mut x = if set.contains(&x0, FEASIBILITY_TOL) {
        x0
    } else {
        set.project(&x0)
    };
    let start = x.clone();

    let mut value_evals = 1;
    let mut gradient_evals = 1;
    let mut f = objective.value(&x);
    if !f.is_finite() {
        return Err(Error::Numeric {
            iteration: 0,
            what: "objective",
        });
    }
    let mut g = objective.gradient(&x);
    if !g.all_finite() {
        return Err(Error::Numeric {
            iteration: 0,
            what: "gradient",
        });
    }

    let mut history = ObjectiveHistory::for_window(cfg.history);
    history.push(f);
    let mut lambda = cfg.lambda0;
    let mut stall = RoundedStall {
        last: None,
        repeats: 0,
    };
    let mut trace = Vec::new();
    let mut g_next = BlockVector::zeros(x.layout().clone());
    let mut k = 0;

    let termination = loop {
        let residual = stationarity_residual(&x, &g, set);
        if residual <= cfg.eps {
            break TerminationReason::Stationary;
        }
        if k >= cfg.max_iter {
            break TerminationReason::MaxIter;
        }

        let step = match cfg.direction_step {
            DirectionStep::Spectral => lambda,
            DirectionStep::Unit => 1.0,
        };
        let d = spectral_direction(&x, &g, step, set);
        let g_dot_d = g.dot(&d);
        // In exact arithmetic gᵀd ≤ −‖d‖²/step, with equality to zero only at
        // a stationary point. A non-descent direction therefore means x is a
        // fixed point of the scaled projected step at working precision.
        if g_dot_d.is_nan() || g_dot_d >= 0.0 {
            break TerminationReason::Stationary;
        }

        let ls = nonmonotone_line_search(&x, &d, &history, g_dot_d, cfg, |y| objective.value(y))
            .map_err(|e| at_iteration(e, k))?;
        value_evals += ls.trials;

        objective.gradient_into(&ls.x, &mut g_next);
        gradient_evals += 1;
        if !g_next.all_finite() {
            return Err(Error::Numeric {
                iteration: k + 1,
                what: "gradient",
            });
        }

        let s = ls.x.sub(&x);
        let t = g_next.sub(&g);
        let lambda_next = bb_step_update(&s, &t, cfg);

        if cfg.record_trace {
            let min_entry =
                ls.x.as_slice()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
            let max_block_sum_dev =
                ls.x.block_sums()
                    .into_iter()
                    .fold(0.0_f64, |m, s| m.max((s - 1.0).abs()));
            trace.push(IterationRecord {
                iteration: k,
                f_prev: f,
                f: ls.f,
                residual,
                lambda,
                lambda_next,
                alpha: ls.alpha,
                ls_trials: ls.trials,
                g_max: ls.g_max,
                g_dot_d,
                min_entry,
                max_block_sum_dev,
            });
        }

        let f_prev = f;
        x = ls.x;
        f = ls.f;
        std::mem::swap(&mut g, &mut g_next);
        lambda = lambda_next;
        history.push(f);
        k += 1;

        if (f - f_prev).abs() < cfg.eps_a {
            break TerminationReason::SmallDecrease;
        }
        if history.window_stalled(cfg.history, cfg.eps_b) {
            break TerminationReason::WindowStall;
        }
        if let Some(probe) = probe.as_mut() {
            if k % cfg.probe_every == 0 && stall.observe(probe(&x)) >= cfg.stall_n {
                break TerminationReason::RoundedStall;
            }
        }
    };

    let residual = stationarity_residual(&x, &g, set);
    Ok(SpgOutcome {
        x,
        f,
        gradient: g,
        residual,
        lambda,
        iterations: k,
        termination,
        value_evals,
        gradient_evals,
        x0: start,
        trace,
    })
}

fn at_iteration(err: Error, k: usize) -> Error {
    match err {
        Error::LineSearch {
            alpha,
            trials,
            g_dot_d,
            ..
        } => Error::LineSearch {
            iteration: k,
            alpha,
            trials,
            g_dot_d,
        },
        Error::Numeric { what, .. } => Error::Numeric { iteration: k, what },
        other => other,
    }
}
