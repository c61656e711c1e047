//! Least-squares fit of (J, g) to a susceptibility curve.
//!
//! The model is the zero-field dimer susceptibility, optionally plus a
//! temperature-independent background χ₀. Fitting runs a damped Gauss-Newton
//! (Levenberg-Marquardt) iteration on the two parameters with analytic
//! partials, and falls back to a Nelder-Mead simplex when the damped steps
//! stall. χ₀ enters linearly and is projected out, so the iteration stays
//! two-dimensional.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::SusceptibilityCurve;
use crate::dimer::{chi_from_moment, moment_at_ratio, thermal_state, DimerParams};
use crate::error::{invalid, Error, Result};
use crate::units::{curie_constant, UnitSystem};

/// Minimum number of samples accepted by [`fit`].
pub const MIN_SAMPLES: usize = 5;

/// Condition number of the relative-sensitivity Jacobian above which J is
/// reported as weakly identifiable. Well-sampled curves through the gap sit
/// near 10.
pub const IDENTIFIABILITY_LIMIT: f64 = 100.0;

/// Above this the normal equations are treated as singular.
pub const SINGULAR_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitSpace {
    Chi,
    #[default]
    #[serde(rename = "chiT")]
    ChiT,
}

impl FromStr for FitSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chi" => Ok(FitSpace::Chi),
            "chit" | "chi_t" | "chi-t" => Ok(FitSpace::ChiT),
            other => Err(invalid(format!("unknown fit space `{other}` (chi or chiT)"))),
        }
    }
}

impl fmt::Display for FitSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitSpace::Chi => "chi",
            FitSpace::ChiT => "chiT",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    LevenbergMarquardt,
    NelderMead,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub space: FitSpace,
    pub max_iterations: usize,
    /// Cosine between the residual vector and each Jacobian column.
    pub gradient_tol: f64,
    /// Relative parameter change that ends the iteration.
    pub step_tol: f64,
    /// Fit an additive constant χ₀ alongside (J, g).
    pub background: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            space: FitSpace::ChiT,
            max_iterations: 500,
            gradient_tol: 1e-10,
            step_tol: 1e-14,
            background: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(rename = "J")]
    pub j: f64,
    pub g: f64,
    /// Σ(model − data)² in the fit space, SI units.
    pub residual_norm: f64,
    pub per_point_residuals: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// s²(JᵀJ)⁻¹ over (J, g); `None` when the normal matrix is singular.
    pub covariance_estimate: Option<[[f64; 2]; 2]>,
    /// Fitted background χ₀ in m³/mol, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<f64>,
    pub condition_number: f64,
    pub space: FitSpace,
    pub method: FitMethod,
    pub diagnostic: Option<String>,
}

impl FitResult {
    pub fn params(&self) -> DimerParams {
        DimerParams { j: self.j, g: self.g }
    }
}

/// Model value and partials (∂/∂J, ∂/∂g) in SI fit space.
fn model(j: f64, g: f64, t: f64, space: FitSpace) -> (f64, f64, f64) {
    let r = j / t;
    let x = moment_at_ratio(r);
    // dx/dJ = x·p_singlet/T.
    let p_singlet = 1.0 - 0.75 * x;
    let chi = chi_from_moment(g, x, t);
    let scale = match space {
        FitSpace::Chi => 1.0,
        FitSpace::ChiT => t,
    };
    let value = chi * scale;
    (value, value * p_singlet / t, 2.0 * value / g)
}

struct Problem {
    t: Vec<f64>,
    y: Vec<f64>,
    space: FitSpace,
    /// Residuals are divided by this to keep SI magnitudes near unity.
    scale: f64,
    /// Unit vector along the background column when χ₀ is fitted.
    background: Option<Vec<f64>>,
}

/// How χ₀ shows up in fit space at temperature t.
fn background_column(t: f64, space: FitSpace) -> f64 {
    match space {
        FitSpace::Chi => 1.0,
        FitSpace::ChiT => t,
    }
}

/// Removes the component along unit vector `u`.
fn project_out(u: &[f64], v: &mut [f64]) {
    let dot: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    for (x, a) in v.iter_mut().zip(u) {
        *x -= dot * a;
    }
}

impl Problem {
    fn new(curve: &SusceptibilityCurve, space: FitSpace, background: bool) -> Self {
        let si = curve.converted(UnitSystem::Si);
        let t: Vec<f64> = si.temperatures().collect();
        let y: Vec<f64> = si
            .samples()
            .iter()
            .map(|&(t, chi)| match space {
                FitSpace::Chi => chi,
                FitSpace::ChiT => chi * t,
            })
            .collect();
        let rms = (y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64).sqrt();
        let scale = if rms > 0.0 { rms } else { 1.0 };
        let background = background.then(|| {
            let w: Vec<f64> = t.iter().map(|&t| background_column(t, space)).collect();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            w.into_iter().map(|v| v / norm).collect()
        });
        Problem { t, y, space, scale, background }
    }

    fn parameter_count(&self) -> usize {
        2 + usize::from(self.background.is_some())
    }

    /// Scaled residuals and Jacobian rows, with the best χ₀ already applied.
    fn evaluate(&self, j: f64, g: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let (mut res, mut jac) = self.evaluate_bare(j, g);
        if let Some(u) = &self.background {
            project_out(u, &mut res);
            for k in 0..2 {
                let mut col: Vec<f64> = jac.iter().map(|row| row[k]).collect();
                project_out(u, &mut col);
                for (row, v) in jac.iter_mut().zip(col) {
                    row[k] = v;
                }
            }
        }
        (res, jac)
    }

    /// Least-squares χ₀ in m³/mol for the given (J, g).
    fn background_at(&self, j: f64, g: f64) -> Option<f64> {
        self.background.as_ref()?;
        let (res, _) = self.evaluate_bare(j, g);
        let (mut num, mut den) = (0.0, 0.0);
        for (&t, r) in self.t.iter().zip(&res) {
            let w = background_column(t, self.space);
            num += w * r;
            den += w * w;
        }
        Some(-self.scale * num / den)
    }

    fn evaluate_bare(&self, j: f64, g: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        self.t
            .iter()
            .zip(&self.y)
            .map(|(&t, &y)| {
                let (m, dj, dg) = model(j, g, t, self.space);
                ((m - y) / self.scale, [dj / self.scale, dg / self.scale])
            })
            .unzip()
    }

    fn cost(&self, j: f64, g: f64) -> f64 {
        if g.is_nan() || g <= 0.0 || !j.is_finite() {
            return f64::INFINITY;
        }
        self.evaluate(j, g).0.iter().map(|r| r * r).sum::<f64>()
    }
}

fn normal_equations(jac: &[[f64; 2]], res: &[f64]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut b = [0.0; 2];
    for (row, r) in jac.iter().zip(res) {
        for i in 0..2 {
            b[i] += row[i] * r;
            for k in 0..2 {
                a[i][k] += row[i] * row[k];
            }
        }
    }
    (a, b)
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let norm = a[0][0].abs().max(a[1][1].abs());
    if !(det.abs() > 1e-300 && det.abs() > f64::EPSILON * norm * norm * 1e-4) {
        return None;
    }
    Some([(a[1][1] * b[0] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det])
}

fn inverse2(a: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// 2-norm condition number of the Jacobian with columns scaled by the
/// parameter magnitudes (relative sensitivities).
fn relative_condition(jac: &[[f64; 2]], j: f64, g: f64) -> f64 {
    let sj = j.abs().max(1.0);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for row in jac {
        let (u, v) = (row[0] * sj, row[1] * g);
        a += u * u;
        b += u * v;
        c += v * v;
    }
    // Eigenvalues of [[a, b], [b, c]] are the squared singular values.
    let mean = 0.5 * (a + c);
    let disc = (0.25 * (a - c).powi(2) + b * b).sqrt();
    let (hi, lo) = (mean + disc, (mean - disc).max(0.0));
    if lo <= hi * 1e-32 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

/// Starting point: g = 2 and J from the temperature where χT crosses half the
/// Curie constant, where x = 1/2 gives |J| = T·ln 5.
pub fn initial_guess(curve: &SusceptibilityCurve) -> DimerParams {
    let g = 2.0;
    let curie = curie_constant(g, 2, UnitSystem::Si).expect("valid g");
    let si = curve.converted(UnitSystem::Si);
    let ratio: Vec<(f64, f64)> = si.samples().iter().map(|&(t, chi)| (t, chi * t / curie)).collect();
    let ln5 = 5f64.ln();
    let Some(&(t_min, _)) = ratio.first() else {
        return DimerParams { j: -100.0, g };
    };
    let t_max = ratio.last().map_or(t_min, |r| r.0);

    let above_curie = ratio.iter().filter(|r| r.1 > 1.0).count();
    if 2 * above_curie > ratio.len() {
        return DimerParams { j: t_min, g };
    }
    let t_half = ratio
        .windows(2)
        .find(|w| (w[0].1 - 0.5) * (w[1].1 - 0.5) <= 0.0 && w[0].1 != w[1].1)
        .map(|w| {
            let f = (0.5 - w[0].1) / (w[1].1 - w[0].1);
            w[0].0 + f * (w[1].0 - w[0].0)
        })
        .unwrap_or(if ratio.iter().all(|r| r.1 < 0.5) { t_max } else { t_min });
    DimerParams { j: -t_half * ln5, g }
}

/// Fits with default options in the given space.
pub fn fit(curve: &SusceptibilityCurve, initial: &DimerParams, space: FitSpace) -> Result<FitResult> {
    fit_with(curve, initial, &FitOptions { space, ..FitOptions::default() })
}

pub fn fit_with(curve: &SusceptibilityCurve, initial: &DimerParams, opts: &FitOptions) -> Result<FitResult> {
    if curve.len() < MIN_SAMPLES {
        return Err(invalid(format!("at least {MIN_SAMPLES} samples are needed for fitting, got {}", curve.len())));
    }
    initial.validate()?;
    let problem = Problem::new(curve, opts.space, opts.background);
    if curve.len() < MIN_SAMPLES + usize::from(opts.background) {
        return Err(invalid(format!(
            "fitting with a background needs at least {} samples, got {}",
            MIN_SAMPLES + 1,
            curve.len()
        )));
    }

    let lm = levenberg_marquardt(&problem, initial, opts);
    let (j, g, iterations, mut converged, method) = match lm {
        Outcome::Converged { j, g, iterations } => (j, g, iterations, true, FitMethod::LevenbergMarquardt),
        Outcome::Stalled { j, g, iterations } | Outcome::Exhausted { j, g, iterations } => {
            log::info!("damped least squares stalled after {iterations} iterations; trying simplex");
            let (sj, sg, it, ok) = nelder_mead(&problem, j, g, opts.max_iterations);
            if problem.cost(sj, sg) <= problem.cost(j, g) {
                (sj, sg, iterations + it, ok, FitMethod::NelderMead)
            } else {
                (j, g, iterations + it, false, FitMethod::LevenbergMarquardt)
            }
        }
    };

    let (res, jac) = problem.evaluate(j, g);
    let condition_number = relative_condition(&jac, j, g);
    let mut diagnostic = None;
    if condition_number > SINGULAR_LIMIT {
        converged = false;
        diagnostic = Some(format!(
            "normal equations are singular (condition number {condition_number:.3e}): \
             J cannot be identified from this temperature range"
        ));
    } else if condition_number > IDENTIFIABILITY_LIMIT {
        diagnostic = Some(format!(
            "J is weakly identifiable (condition number {condition_number:.1}); \
             sample temperatures closer to |J| to constrain it"
        ));
    } else if !converged {
        diagnostic = Some(format!("no convergence after {iterations} iterations"));
    }

    let per_point_residuals: Vec<f64> = res.iter().map(|r| r * problem.scale).collect();
    let residual_norm: f64 = per_point_residuals.iter().map(|r| r * r).sum();
    let n = per_point_residuals.len();
    let s2 = residual_norm / (n - problem.parameter_count()) as f64;
    let unscaled: Vec<[f64; 2]> = jac.iter().map(|row| [row[0] * problem.scale, row[1] * problem.scale]).collect();
    let (ata, _) = normal_equations(&unscaled, &per_point_residuals);
    let covariance_estimate =
        if condition_number.is_finite() { inverse2(ata).map(|inv| inv.map(|row| row.map(|v| v * s2))) } else { None };

    Ok(FitResult {
        j,
        g,
        residual_norm,
        per_point_residuals,
        converged,
        iterations,
        covariance_estimate,
        background: problem.background_at(j, g),
        condition_number,
        space: opts.space,
        method,
        diagnostic,
    })
}

enum Outcome {
    Converged { j: f64, g: f64, iterations: usize },
    Stalled { j: f64, g: f64, iterations: usize },
    Exhausted { j: f64, g: f64, iterations: usize },
}

fn gradient_small(jac: &[[f64; 2]], res: &[f64], tol: f64) -> bool {
    let rn = res.iter().map(|r| r * r).sum::<f64>().sqrt();
    if rn == 0.0 {
        return true;
    }
    (0..2).all(|k| {
        let col = jac.iter().map(|row| row[k] * row[k]).sum::<f64>().sqrt();
        let dot: f64 = jac.iter().zip(res).map(|(row, r)| row[k] * r).sum();
        col == 0.0 || dot.abs() <= tol * col * rn
    })
}

fn levenberg_marquardt(problem: &Problem, initial: &DimerParams, opts: &FitOptions) -> Outcome {
    let (mut j, mut g) = (initial.j, initial.g);
    let mut lambda = 1e-3;
    let (mut res, mut jac) = problem.evaluate(j, g);
    let mut cost: f64 = res.iter().map(|r| r * r).sum();

    for iteration in 1..=opts.max_iterations {
        if gradient_small(&jac, &res, opts.gradient_tol) {
            return Outcome::Converged { j, g, iterations: iteration - 1 };
        }
        let (a, b) = normal_equations(&jac, &res);
        let mut accepted = false;
        while lambda < 1e16 {
            let damped = [[a[0][0] * (1.0 + lambda), a[0][1]], [a[1][0], a[1][1] * (1.0 + lambda)]];
            let Some(step) = solve2(damped, b) else {
                lambda *= 10.0;
                continue;
            };
            let (nj, ng) = (j - step[0], g - step[1]);
            let new_cost = problem.cost(nj, ng);
            if new_cost < cost {
                let rel_step = (step[0] / j.abs().max(1.0)).abs().max((step[1] / g).abs());
                j = nj;
                g = ng;
                cost = new_cost;
                (res, jac) = problem.evaluate(j, g);
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                if rel_step < opts.step_tol {
                    return Outcome::Converged { j, g, iterations: iteration };
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No damping level reduces the cost: either at the optimum to
            // rounding, or the normal equations are degenerate.
            return if gradient_small(&jac, &res, opts.gradient_tol.sqrt()) {
                Outcome::Converged { j, g, iterations: iteration }
            } else {
                Outcome::Stalled { j, g, iterations: iteration }
            };
        }
    }
    Outcome::Exhausted { j, g, iterations: opts.max_iterations }
}

/// Nelder-Mead on (J, g). Returns (J, g, iterations, converged).
fn nelder_mead(problem: &Problem, j0: f64, g0: f64, max_iterations: usize) -> (f64, f64, usize, bool) {
    let f = |p: [f64; 2]| problem.cost(p[0], p[1]);
    let mut simplex = [[j0, g0], [j0 + (0.1 * j0.abs()).max(10.0), g0], [j0, g0 * 1.05]];
    let mut values = simplex.map(f);
    for it in 1..=max_iterations * 4 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);

        let spread = (values[2] - values[0]).abs();
        let size = (1..3)
            .map(|i| {
                ((simplex[i][0] - simplex[0][0]) / simplex[0][0].abs().max(1.0))
                    .abs()
                    .max(((simplex[i][1] - simplex[0][1]) / simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if size < 1e-12 || spread <= 1e-30 * values[0].abs().max(1e-300) {
            return (simplex[0][0], simplex[0][1], it, size < 1e-8);
        }

        let centroid = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along =
            |t: f64| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            (simplex[2], values[2]) = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < values[1] {
            (simplex[2], values[2]) = (reflected, fr);
        } else {
            let contracted = if fr < values[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                (simplex[2], values[2]) = (contracted, fc);
            } else {
                for i in 1..3 {
                    simplex[i] = [0.5 * (simplex[0][0] + simplex[i][0]), 0.5 * (simplex[0][1] + simplex[i][1])];
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    (simplex[0][0], simplex[0][1], max_iterations * 4, false)
}

/// Summary statistics of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Goodness {
    pub r_squared: f64,
    /// residual_norm / (n − number of fitted parameters).
    pub reduced_chi_squared: f64,
    pub max_abs_residual: f64,
}

pub fn goodness(result: &FitResult, curve: &SusceptibilityCurve) -> Result<Goodness> {
    let n = curve.len();
    let p = 2 + usize::from(result.background.is_some());
    if n <= p {
        return Err(invalid(format!("goodness of fit needs more than {p} samples, got {n}")));
    }
    let problem = Problem::new(curve, result.space, false);
    let chi0 = result.background.unwrap_or(0.0);
    let residuals: Vec<f64> = problem
        .t
        .iter()
        .zip(&problem.y)
        .map(|(&t, &y)| model(result.j, result.g, t, result.space).0 + chi0 * background_column(t, result.space) - y)
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = problem.y.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = problem.y.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(Goodness {
        r_squared,
        reduced_chi_squared: ss_res / (n - p) as f64,
        max_abs_residual: residuals.iter().fold(0.0, |m, r| m.max(r.abs())),
    })
}

/// The JSON document written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(rename = "J_K")]
    pub j_k: f64,
    pub g: f64,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub r_squared: f64,
    pub condition_number: Option<f64>,
    pub diagnostic: Option<String>,
    /// Background χ₀ in m³/mol, present only when it was fitted.
    #[serde(rename = "chi0_SI", default, skip_serializing_if = "Option::is_none")]
    pub chi0_si: Option<f64>,
}

impl FitReport {
    pub fn new(result: &FitResult, goodness: &Goodness) -> Self {
        FitReport {
            j_k: result.j,
            g: result.g,
            residual_norm: result.residual_norm,
            converged: result.converged,
            iterations: result.iterations,
            r_squared: goodness.r_squared,
            condition_number: result.condition_number.is_finite().then_some(result.condition_number),
            diagnostic: result.diagnostic.clone(),
            chi0_si: result.background,
        }
    }

    pub fn params(&self) -> Result<DimerParams> {
        DimerParams::new(self.j_k, self.g)
    }
}

/// Thermal correlation c at each sample temperature of a fitted model.
pub fn fitted_correlations(result: &FitResult, curve: &SusceptibilityCurve) -> Result<Vec<f64>> {
    curve.temperatures().map(|t| thermal_state(&result.params(), t).map(|s| s.c)).collect()
}
