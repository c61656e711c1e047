//! Characteristic temperatures of the correlation profiles.
//!
//! For J < 0 every measure depends on temperature only through τ = T/|J|, so
//! all solvers work in τ and scale the result by |J|. This keeps thresholds
//! exactly linear in |J| and independent of g. Roots are found by bisection
//! down to floating-point resolution.

use serde::{Deserialize, Serialize};

use crate::dimer::{moment_at_ratio, DimerParams};
use crate::error::{invalid, Result};
use crate::measures::Measure;

/// "Significantly nonzero" level used for persistence temperatures.
pub const DEFAULT_EPSILON: f64 = 0.01;
/// Distance from unity that still counts as a pure singlet.
pub const DEFAULT_DELTA: f64 = 1e-3;
/// Decomposition temperature of the compound, K. Reporting annotation only.
pub const DEFAULT_STABILITY_LIMIT: f64 = 513.0;

/// Default crossing brackets in K at |J| = [`BRACKET_COUPLING`]; they scale
/// with |J| for other couplings.
pub const EOF_DISCORD_BRACKET: (f64, f64) = (150.0, 400.0);
pub const GEOMETRIC_ENTROPIC_BRACKET: (f64, f64) = (400.0, 600.0);
pub const BRACKET_COUPLING: f64 = 748.5;

/// Scan resolution used to detect multiple sign changes in a bracket.
const SCAN_POINTS: usize = 512;

/// Measure differences smaller than this are treated as equal while scanning.
const TIE_LEVEL: f64 = 1e-12;

fn at_reduced(measure: Measure, tau: f64) -> f64 {
    measure.at_moment(moment_at_ratio(-1.0 / tau))
}

fn require_antiferromagnetic(params: &DimerParams) -> Result<f64> {
    params.validate()?;
    if params.j < 0.0 {
        Ok(-params.j)
    } else {
        Err(invalid(format!("thresholds need an antiferromagnetic coupling (J < 0), got J = {}", params.j)))
    }
}

/// Bisection for a sign change of `f` on [lo, hi], run until the interval
/// cannot be split further.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `profile(τ) = target` for a profile that decreases in τ, expanding
/// the bracket [1e-3, 10] by factors of two as needed.
fn solve_decreasing(profile: impl Fn(f64) -> f64, target: f64) -> Result<f64> {
    let f = |tau: f64| profile(tau) - target;
    let (mut lo, mut hi) = (1e-3, 10.0);
    while f(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(invalid(format!("level {target} is not reached at any temperature")));
        }
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(invalid(format!("level {target} is not reached at any temperature")));
        }
    }
    Ok(bisect(f, lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EntanglementTemperature {
    /// Concurrence vanishes identically above `T`.
    SuddenDeath {
        #[serde(rename = "T")]
        t: f64,
    },
    /// J ≥ 0: the thermal state is never entangled.
    NeverEntangled,
}

impl EntanglementTemperature {
    pub fn temperature(&self) -> Option<f64> {
        match self {
            EntanglementTemperature::SuddenDeath { t } => Some(*t),
            EntanglementTemperature::NeverEntangled => None,
        }
    }
}

/// T_e = |J|/ln 3.
pub fn entanglement_temperature(params: &DimerParams) -> EntanglementTemperature {
    if params.j < 0.0 {
        EntanglementTemperature::SuddenDeath { t: -params.j / 3f64.ln() }
    } else {
        EntanglementTemperature::NeverEntangled
    }
}

/// T_e located by bisection on the sign of the concurrence profile.
pub fn entanglement_temperature_by_bisection(params: &DimerParams) -> Result<f64> {
    let scale = require_antiferromagnetic(params)?;
    let entangled = |tau: f64| if at_reduced(Measure::Concurrence, tau) > 0.0 { 1.0 } else { -1.0 };
    Ok(scale * bisect(entangled, 1e-3, 10.0))
}

/// The temperature at which `measure` falls to `epsilon`.
pub fn epsilon_threshold(params: &DimerParams, measure: Measure, epsilon: f64) -> Result<f64> {
    let scale = require_antiferromagnetic(params)?;
    let top = measure.ground_value();
    if !(epsilon > 0.0 && epsilon < top) {
        return Err(invalid(format!("epsilon {epsilon} outside (0, {top}) for {measure}")));
    }
    Ok(scale * solve_decreasing(|tau| at_reduced(measure, tau), epsilon)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityMeasure {
    EntropicDiscord,
    #[default]
    Eof,
    MinOfBoth,
}

impl PurityMeasure {
    fn at_reduced(self, tau: f64) -> f64 {
        match self {
            PurityMeasure::EntropicDiscord => at_reduced(Measure::EntropicDiscord, tau),
            PurityMeasure::Eof => at_reduced(Measure::Eof, tau),
            PurityMeasure::MinOfBoth => at_reduced(Measure::EntropicDiscord, tau).min(at_reduced(Measure::Eof, tau)),
        }
    }

    /// Value at temperature `t` for coupling `j` (< 0).
    pub fn at_temperature(self, j: f64, t: f64) -> f64 {
        self.at_reduced(t / j.abs())
    }
}

impl std::str::FromStr for PurityMeasure {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropic_discord" | "qe" => Ok(PurityMeasure::EntropicDiscord),
            "eof" => Ok(PurityMeasure::Eof),
            "min_of_both" | "min" => Ok(PurityMeasure::MinOfBoth),
            other => Err(invalid(format!("unknown purity measure `{other}`"))),
        }
    }
}

/// Highest temperature at which `measure` stays above 1 − δ.
pub fn purity_temperature(params: &DimerParams, delta: f64, measure: PurityMeasure) -> Result<f64> {
    let scale = require_antiferromagnetic(params)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(scale * solve_decreasing(|tau| measure.at_reduced(tau), 1.0 - delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Crossing {
    Found {
        #[serde(rename = "T")]
        t: f64,
    },
    NoCrossing,
    /// More than one sign change on the bracket; narrow it.
    Ambiguous {
        sign_changes: usize,
    },
}

/// Temperature in `bracket` (K) where measures `a` and `b` cross.
pub fn crossing_temperature(params: &DimerParams, a: Measure, b: Measure, bracket: (f64, f64)) -> Result<Crossing> {
    let scale = require_antiferromagnetic(params)?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("invalid bracket ({lo}, {hi})")));
    }
    if a == b {
        return Ok(Crossing::NoCrossing);
    }
    let diff = |tau: f64| at_reduced(a, tau) - at_reduced(b, tau);
    Ok(match scan_crossing(diff, lo / scale, hi / scale) {
        Crossing::Found { t } => Crossing::Found { t: scale * t },
        other => other,
    })
}

/// Scans `diff` on [lo, hi] for sign changes and bisects the single one.
/// Differences below [`TIE_LEVEL`] count as ties, so saturated curves that
/// agree to rounding do not register spurious crossings.
fn scan_crossing(diff: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Crossing {
    let mut changes = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    for i in 0..=SCAN_POINTS {
        let tau = if i == SCAN_POINTS { hi } else { lo + (hi - lo) * i as f64 / SCAN_POINTS as f64 };
        let d = diff(tau);
        if d.abs() < TIE_LEVEL {
            continue;
        }
        let positive = d > 0.0;
        if let Some((p_tau, p_pos)) = prev {
            if p_pos != positive {
                changes.push((p_tau, tau));
            }
        }
        prev = Some((tau, positive));
    }
    match changes.as_slice() {
        [] => Crossing::NoCrossing,
        [(l, h)] => Crossing::Found { t: bisect(&diff, *l, *h) },
        many => Crossing::Ambiguous { sign_changes: many.len() },
    }
}

/// Solver outcome as written to a threshold report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Solved {
    Found {
        #[serde(rename = "T")]
        t: f64,
        /// min(T, stability limit), present when a limit is configured.
        #[serde(rename = "T_clamped", default, skip_serializing_if = "Option::is_none")]
        t_clamped: Option<f64>,
    },
    NoCrossing,
    Ambiguous {
        sign_changes: usize,
    },
    NotApplicable {
        reason: String,
    },
}

impl Solved {
    fn found(t: f64, limit: Option<f64>) -> Self {
        Solved::Found { t, t_clamped: limit.map(|l| t.min(l)) }
    }

    fn from_result(r: Result<f64>, limit: Option<f64>) -> Self {
        match r {
            Ok(t) => Solved::found(t, limit),
            Err(e) => Solved::NotApplicable { reason: e.to_string() },
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match self {
            Solved::Found { t, .. } => Some(*t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityEntry {
    pub measure: PurityMeasure,
    pub delta: f64,
    #[serde(flatten)]
    pub solved: Solved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEntry {
    pub measure: Measure,
    pub epsilon: f64,
    #[serde(flatten)]
    pub solved: Solved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEntry {
    pub measures: [Measure; 2],
    pub bracket: [f64; 2],
    #[serde(flatten)]
    pub solved: Solved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub purity_measure: PurityMeasure,
    pub stability_limit: Option<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            purity_measure: PurityMeasure::Eof,
            stability_limit: Some(DEFAULT_STABILITY_LIMIT),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    #[serde(rename = "T_entanglement")]
    pub t_entanglement: EntanglementTemperature,
    #[serde(rename = "T_pure")]
    pub t_pure: PurityEntry,
    pub epsilon_thresholds: Vec<EpsilonEntry>,
    pub crossings: Vec<CrossingEntry>,
    pub parameters: DimerParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_limit: Option<f64>,
}

impl ThresholdReport {
    pub fn epsilon_threshold(&self, measure: Measure) -> Option<f64> {
        self.epsilon_thresholds.iter().find(|e| e.measure == measure).and_then(|e| e.solved.temperature())
    }

    pub fn crossing(&self, a: Measure, b: Measure) -> Option<f64> {
        self.crossings.iter().find(|c| c.measures == [a, b]).and_then(|c| c.solved.temperature())
    }
}

/// T_e, T_pure, ε-thresholds of both discords and the two documented crossings.
pub fn threshold_report(params: &DimerParams, config: &ThresholdConfig) -> ThresholdReport {
    let limit = config.stability_limit;
    let epsilon_thresholds = [Measure::EntropicDiscord, Measure::GeometricDiscord]
        .into_iter()
        .map(|measure| EpsilonEntry {
            measure,
            epsilon: config.epsilon,
            solved: Solved::from_result(epsilon_threshold(params, measure, config.epsilon), limit),
        })
        .collect();

    let scale = params.j.abs() / BRACKET_COUPLING;
    let crossings = [
        ([Measure::Eof, Measure::EntropicDiscord], EOF_DISCORD_BRACKET),
        ([Measure::GeometricDiscord, Measure::EntropicDiscord], GEOMETRIC_ENTROPIC_BRACKET),
    ]
    .into_iter()
    .map(|(measures, (lo, hi))| {
        let bracket = [lo * scale, hi * scale];
        let solved = match crossing_temperature(params, measures[0], measures[1], (bracket[0], bracket[1])) {
            Ok(Crossing::Found { t }) => Solved::found(t, limit),
            Ok(Crossing::NoCrossing) => Solved::NoCrossing,
            Ok(Crossing::Ambiguous { sign_changes }) => Solved::Ambiguous { sign_changes },
            Err(e) => Solved::NotApplicable { reason: e.to_string() },
        };
        CrossingEntry { measures, bracket, solved }
    })
    .collect();

    ThresholdReport {
        t_entanglement: entanglement_temperature(params),
        t_pure: PurityEntry {
            measure: config.purity_measure,
            delta: config.delta,
            solved: Solved::from_result(purity_temperature(params, config.delta, config.purity_measure), limit),
        },
        epsilon_thresholds,
        crossings,
        parameters: *params,
        stability_limit: limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimer::model_moment;
    use approx::assert_relative_eq;

    const P: DimerParams = DimerParams::REFERENCE;

    fn measure_at(m: Measure, t: f64) -> f64 {
        m.at_moment(model_moment(&P, t).unwrap())
    }

    #[test]
    fn entanglement_temperature_values() {
        let te = entanglement_temperature(&P).temperature().unwrap();
        assert_relative_eq!(te, 681.314061130188, epsilon = 1e-9);
        let unit = DimerParams { j: -3f64.ln(), g: 2.0 };
        assert_relative_eq!(entanglement_temperature(&unit).temperature().unwrap(), 1.0, epsilon = 1e-15);
        let hundred = DimerParams { j: -100.0, g: 2.0 };
        assert_relative_eq!(
            entanglement_temperature(&hundred).temperature().unwrap(),
            91.0239226626837,
            epsilon = 1e-9
        );
        assert_eq!(
            entanglement_temperature(&DimerParams { j: 100.0, g: 2.0 }),
            EntanglementTemperature::NeverEntangled
        );
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        for j in [-748.5, -100.0, -3.0] {
            let p = DimerParams { j, g: 2.0 };
            let a = entanglement_temperature(&p).temperature().unwrap();
            let b = entanglement_temperature_by_bisection(&p).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn geometric_threshold_matches_inversion() {
        let t = epsilon_threshold(&P, Measure::GeometricDiscord, 0.01).unwrap();
        let eps: f64 = 0.01;
        let closed = 748.5 / ((1.0 + 6.0 * eps) / (1.0 - 2.0 * eps)).ln();
        assert_relative_eq!(t, closed, max_relative = 1e-12);
        assert!((t - 9538.0).abs() < 20.0);
    }

    #[test]
    fn entropic_threshold_value() {
        let t = epsilon_threshold(&P, Measure::EntropicDiscord, 0.01).unwrap();
        // 40-digit bisection of the closed form.
        assert_relative_eq!(t, 2327.886584323279, max_relative = 1e-12);
        assert!((measure_at(Measure::EntropicDiscord, t) - 0.01).abs() < 1e-9);
    }

    #[test]
    fn concurrence_threshold_approaches_te() {
        let t = epsilon_threshold(&P, Measure::Concurrence, 1e-9).unwrap();
        let te = entanglement_temperature(&P).temperature().unwrap();
        assert!((t - te).abs() < 1e-3);
        assert!(t < te);
    }

    #[test]
    fn epsilon_out_of_range() {
        assert!(epsilon_threshold(&P, Measure::GeometricDiscord, 0.5).is_err());
        assert!(epsilon_threshold(&P, Measure::EntropicDiscord, 0.0).is_err());
        assert!(epsilon_threshold(&P, Measure::Eof, 1.2).is_err());
        assert!(epsilon_threshold(&DimerParams { j: 10.0, g: 2.0 }, Measure::Eof, 0.1).is_err());
    }

    #[test]
    fn crossings() {
        let t = match crossing_temperature(&P, Measure::Eof, Measure::EntropicDiscord, (150.0, 400.0)).unwrap() {
            Crossing::Found { t } => t,
            other => panic!("{other:?}"),
        };
        assert_relative_eq!(t, 220.089984600274, max_relative = 1e-12);
        assert!((measure_at(Measure::Eof, t) - measure_at(Measure::EntropicDiscord, t)).abs() <= 1e-9);

        let g = crossing_temperature(&P, Measure::GeometricDiscord, Measure::EntropicDiscord, (400.0, 600.0)).unwrap();
        match g {
            Crossing::Found { t } => {
                assert!(t > 450.0 && t < 500.0);
                assert_relative_eq!(t, 493.477344549997, max_relative = 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(crossing_temperature(&P, Measure::Eof, Measure::Eof, (150.0, 400.0)).unwrap(), Crossing::NoCrossing);
        assert_eq!(
            crossing_temperature(&P, Measure::Eof, Measure::EntropicDiscord, (300.0, 400.0)).unwrap(),
            Crossing::NoCrossing
        );
    }

    #[test]
    fn ambiguous_bracket_detected() {
        let r = scan_crossing(|t: f64| (3.0 * t).cos(), 0.1, 5.0);
        assert!(matches!(r, Crossing::Ambiguous { sign_changes: 5 }), "{r:?}");
        match scan_crossing(|t: f64| t.cos(), 0.1, 3.0) {
            Crossing::Found { t } => assert_relative_eq!(t, std::f64::consts::FRAC_PI_2, epsilon = 1e-14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn saturated_region_is_not_a_crossing() {
        // Below ~80 K both curves sit at 1 up to rounding.
        match crossing_temperature(&P, Measure::Eof, Measure::EntropicDiscord, (5.0, 400.0)).unwrap() {
            Crossing::Found { t } => assert_relative_eq!(t, 220.089984600274, max_relative = 1e-12),
            other => panic!("{other:?}"),
        }
        let r =
            crossing_temperature(&P, Measure::ClassicalCorrelation, Measure::EntropicDiscord, (5.0, 150.0)).unwrap();
        assert_eq!(r, Crossing::NoCrossing);
    }

    #[test]
    fn purity_values() {
        let eof = purity_temperature(&P, 1e-3, PurityMeasure::Eof).unwrap();
        assert_relative_eq!(eof, 82.56517552415465, max_relative = 1e-12);
        let qe = purity_temperature(&P, 2e-3, PurityMeasure::EntropicDiscord).unwrap();
        assert_relative_eq!(qe, 83.03345149852066, max_relative = 1e-12);
        let both = purity_temperature(&P, 1e-3, PurityMeasure::MinOfBoth).unwrap();
        assert!(both <= eof);

        let te = entanglement_temperature(&P).temperature().unwrap();
        let near = purity_temperature(&P, 0.999, PurityMeasure::Eof).unwrap();
        assert!(near < te && near > 0.9 * te);
        assert!(purity_temperature(&P, 1.0, PurityMeasure::Eof).is_err());
    }

    #[test]
    fn thresholds_decrease_with_epsilon() {
        for m in [Measure::EntropicDiscord, Measure::GeometricDiscord, Measure::Concurrence, Measure::Eof] {
            let top = m.ground_value();
            let mut prev = f64::INFINITY;
            for k in 1..=10 {
                let t = epsilon_threshold(&P, m, top * k as f64 / 11.0).unwrap();
                assert!(t < prev, "{m}");
                prev = t;
            }
        }
    }

    #[test]
    fn report_for_ferromagnet() {
        let r = threshold_report(&DimerParams { j: 100.0, g: 2.0 }, &ThresholdConfig::default());
        assert_eq!(r.t_entanglement, EntanglementTemperature::NeverEntangled);
        assert!(matches!(r.t_pure.solved, Solved::NotApplicable { .. }));
    }

    #[test]
    fn report_clamps_only_annotation() {
        let r = threshold_report(&P, &ThresholdConfig::default());
        let e = &r.epsilon_thresholds[1];
        assert_eq!(e.measure, Measure::GeometricDiscord);
        match &e.solved {
            Solved::Found { t, t_clamped } => {
                assert!(*t > 9000.0);
                assert_eq!(*t_clamped, Some(DEFAULT_STABILITY_LIMIT));
            }
            other => panic!("{other:?}"),
        }
        let json = serde_json::to_string(&r).unwrap();
        let back: ThresholdReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
