//! Closed-form correlation measures of the zero-field dimer state.
//!
//! Every measure is a function of the normalized moment x = 2k_B Tχ/(N(gμ_B)²)
//! or of c = x − 1, so the same code serves model curves and measured data.
//! Entropies are in bits and use 0·log 0 = 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dimer::X_MAX;
use crate::error::{invalid, Error, Result};

/// Default tolerance for noisy moments slightly outside [0, 4/3].
pub const DEFAULT_SLACK: f64 = 1e-6;

/// v·log₂v with the continuous extension at 0.
pub(crate) fn xlog2x(v: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        v * v.log2()
    }
}

/// Binary entropy h(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Brings x into [0, 4/3] if it lies within `slack` of the range; errors otherwise.
pub fn clamp_moment(x: f64, slack: f64) -> Result<f64> {
    if !x.is_finite() || x < -slack || x > X_MAX + slack {
        return Err(Error::Unphysical { x });
    }
    Ok(x.clamp(0.0, X_MAX))
}

/// Classical correlation optimized over local measurements on one qubit:
/// ½[(1+|c|)log₂(1+|c|) + (1−|c|)log₂(1−|c|)].
pub fn classical_correlation(c: f64) -> f64 {
    let a = c.abs();
    0.5 * (xlog2x(1.0 + a) + xlog2x(1.0 - a))
}

/// I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ) = 2 − S(ρ); both marginals are maximally mixed.
pub fn mutual_information(c: f64) -> f64 {
    let p_singlet = (1.0 - 3.0 * c) / 4.0;
    let p_triplet = (1.0 + c) / 4.0;
    2.0 + xlog2x(p_singlet) + 3.0 * xlog2x(p_triplet)
}

/// Entropic quantum discord written directly in the normalized moment:
///
/// Q = ¼{(4−3x)log₂(4−3x) + 3x log₂x} − ½{(1+|x−1|)log₂(1+|x−1|) + (1−|x−1|)log₂(1−|x−1|)}.
///
/// At x = 0 the expression extends continuously to 1.
pub fn entropic_discord(x: f64) -> f64 {
    if x <= 1.0 {
        // Same expression with the leading 1 − x split off and the logs taken
        // through ln_1p; the direct sum loses several ulps near x = 0.
        let u = (0.25 * (4.0 - 3.0 * x) * (-0.75 * x).ln_1p() - 0.5 * (2.0 - x) * (-0.5 * x).ln_1p())
            / std::f64::consts::LN_2;
        return (1.0 - x) + (u + 0.25 * xlog2x(x));
    }
    let total = 0.25 * (xlog2x(4.0 - 3.0 * x) + 3.0 * xlog2x(x));
    let d = x - 1.0;
    let classical = 0.5 * (xlog2x(1.0 + d) + xlog2x(1.0 - d));
    total - classical
}

/// Trace-norm geometric discord, |c|/2.
pub fn geometric_discord(c: f64) -> f64 {
    0.5 * c.abs()
}

/// Concurrence of the thermal dimer state, max{0, (2 − 3x)/2}.
///
/// Vanishes for x ≥ 2/3, i.e. above T_e = |J|/ln 3.
pub fn concurrence(x: f64) -> f64 {
    (0.5 * (2.0 - 3.0 * x)).max(0.0)
}

/// The concurrence expression −½[2 + 3x] as it appears in print.
///
/// Kept only so tests can document that it is negative on the whole physical
/// range and therefore cannot be the concurrence; use [`concurrence`].
pub fn printed_concurrence(x: f64) -> f64 {
    -0.5 * (2.0 + 3.0 * x)
}

/// Entanglement of formation, h((1 + √(1−C²))/2).
pub fn entanglement_of_formation(concurrence: f64) -> f64 {
    let c = concurrence.clamp(0.0, 1.0);
    if c == 0.0 {
        return 0.0;
    }
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).max(0.0).sqrt()))
}

/// A correlation measure selectable at run time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    EntropicDiscord,
    GeometricDiscord,
    Concurrence,
    Eof,
    MutualInformation,
    ClassicalCorrelation,
}

impl Measure {
    /// Value of the measure at normalized moment `x`.
    pub fn at_moment(self, x: f64) -> f64 {
        let c = x - 1.0;
        match self {
            Measure::EntropicDiscord => entropic_discord(x),
            Measure::GeometricDiscord => geometric_discord(c),
            Measure::Concurrence => concurrence(x),
            Measure::Eof => entanglement_of_formation(concurrence(x)),
            Measure::MutualInformation => mutual_information(c),
            Measure::ClassicalCorrelation => classical_correlation(c),
        }
    }

    /// Value at T → 0 for an antiferromagnetic dimer (x = 0).
    pub fn ground_value(self) -> f64 {
        self.at_moment(0.0)
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::EntropicDiscord => "entropic_discord",
            Measure::GeometricDiscord => "geometric_discord",
            Measure::Concurrence => "concurrence",
            Measure::Eof => "eof",
            Measure::MutualInformation => "mutual_information",
            Measure::ClassicalCorrelation => "classical_correlation",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "entropic_discord" | "qe" => Measure::EntropicDiscord,
            "geometric_discord" | "qg" => Measure::GeometricDiscord,
            "concurrence" => Measure::Concurrence,
            "eof" => Measure::Eof,
            "mutual_information" => Measure::MutualInformation,
            "classical_correlation" => Measure::ClassicalCorrelation,
            other => return Err(invalid(format!("unknown measure `{other}`"))),
        })
    }
}

/// All measures at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    #[serde(rename = "T")]
    pub t: f64,
    pub x: f64,
    pub c: f64,
    pub concurrence: f64,
    pub eof: f64,
    pub entropic_discord: f64,
    pub geometric_discord: f64,
    pub mutual_information: f64,
    pub classical_correlation: f64,
}

impl CorrelationPoint {
    /// Evaluates every measure at moment `x`, clamping within `slack`.
    pub fn new(t: f64, x: f64, slack: f64) -> Result<Self> {
        let x = clamp_moment(x, slack)?;
        let c = x - 1.0;
        let concurrence = concurrence(x);
        Ok(CorrelationPoint {
            t,
            x,
            c,
            concurrence,
            eof: entanglement_of_formation(concurrence),
            entropic_discord: entropic_discord(x),
            geometric_discord: geometric_discord(c),
            mutual_information: mutual_information(c),
            classical_correlation: classical_correlation(c),
        })
    }

    /// The column values in table order (T first).
    pub fn values(&self) -> [f64; 9] {
        [
            self.t,
            self.x,
            self.c,
            self.concurrence,
            self.eof,
            self.entropic_discord,
            self.geometric_discord,
            self.mutual_information,
            self.classical_correlation,
        ]
    }

    pub const COLUMNS: [&'static str; 9] = [
        "T",
        "x",
        "c",
        "concurrence",
        "eof",
        "entropic_discord",
        "geometric_discord",
        "mutual_information",
        "classical_correlation",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // 40-digit evaluations at T = 300 K, J = −748.5 K (x = 0.2645199371542106).
    const X300: f64 = 0.264_519_937_154_210_6;
    const C300: f64 = X300 - 1.0;

    #[test]
    fn classical_correlation_values() {
        assert_eq!(classical_correlation(0.0), 0.0);
        assert_relative_eq!(classical_correlation(-1.0), 1.0, epsilon = 1e-15);
        assert!((classical_correlation(-0.73550) - 0.43637).abs() < 1e-4);
        assert_relative_eq!(classical_correlation(C300), 0.436396258643142, epsilon = 1e-13);
    }

    #[test]
    fn mutual_information_values() {
        assert!(mutual_information(0.0).abs() < 1e-15);
        assert_relative_eq!(mutual_information(-1.0), 2.0, epsilon = 1e-15);
        assert!((mutual_information(-0.73550) - 0.96691).abs() < 1e-4);
        assert_relative_eq!(mutual_information(C300), 0.966863074158111, epsilon = 1e-13);
    }

    #[test]
    fn entropic_discord_values() {
        assert_relative_eq!(entropic_discord(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(entropic_discord(1e-300), 1.0, epsilon = 1e-12);
        assert!(entropic_discord(1.0).abs() < 1e-15);
        assert!((entropic_discord(0.26450) - 0.53054).abs() < 2e-4);
        assert_relative_eq!(entropic_discord(X300), 0.530466815514970, epsilon = 1e-13);
    }

    #[test]
    fn entropic_discord_matches_literal_sum() {
        let literal = |x: f64| {
            let d = (x - 1.0).abs();
            0.25 * (xlog2x(4.0 - 3.0 * x) + 3.0 * xlog2x(x)) - 0.5 * (xlog2x(1.0 + d) + xlog2x(1.0 - d))
        };
        for i in 0..=400 {
            let x = X_MAX * i as f64 / 400.0;
            assert!((entropic_discord(x) - literal(x)).abs() < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn geometric_discord_values() {
        assert_eq!(geometric_discord(0.0), 0.0);
        assert_eq!(geometric_discord(-1.0), 0.5);
        assert_relative_eq!(geometric_discord(-0.02), 0.01);
    }

    #[test]
    fn concurrence_values() {
        assert_eq!(concurrence(0.0), 1.0);
        assert!(concurrence(2.0 / 3.0).abs() < 1e-15);
        assert_eq!(concurrence(0.9), 0.0);
        assert!((concurrence(0.26450) - 0.60325).abs() < 1e-4);
        assert_relative_eq!(concurrence(X300), 0.603220094268684, epsilon = 1e-13);
    }

    #[test]
    fn printed_concurrence_is_negative_everywhere() {
        for i in 1..=10_000 {
            let x = X_MAX * i as f64 / 10_000.0;
            assert!(printed_concurrence(x) < 0.0);
        }
    }

    #[test]
    fn eof_values() {
        assert_eq!(entanglement_of_formation(0.0), 0.0);
        assert_relative_eq!(entanglement_of_formation(1.0), 1.0, epsilon = 1e-15);
        assert!((entanglement_of_formation(0.60325) - 0.47286).abs() < 1e-4);
        assert_relative_eq!(entanglement_of_formation(concurrence(X300)), 0.472827744705338, epsilon = 1e-13);
    }

    /// −E₊ − E₋ written out term by term, as an independent route.
    fn eof_two_terms(c: f64) -> f64 {
        let s = (1.0 - c * c).sqrt();
        let e = |p: f64| if p > 0.0 { p * p.ln() / 2f64.ln() } else { 0.0 };
        -e((1.0 + s) / 2.0) - e((1.0 - s) / 2.0)
    }

    #[test]
    fn eof_matches_two_term_form_and_is_monotone() {
        let mut prev = -1.0;
        for i in 0..=1000 {
            let c = i as f64 / 1000.0;
            let e = entanglement_of_formation(c);
            assert!((e - eof_two_terms(c)).abs() < 1e-14);
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn discord_is_information_minus_classical() {
        for i in 1..=10_000 {
            let x = X_MAX * i as f64 / 10_000.0;
            let c = x - 1.0;
            let d = entropic_discord(x) - (mutual_information(c) - classical_correlation(c));
            assert!(d.abs() <= 1e-12, "x = {x}: {d}");
        }
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_moment(-5e-7, DEFAULT_SLACK).unwrap(), 0.0);
        assert_eq!(clamp_moment(X_MAX + 5e-7, DEFAULT_SLACK).unwrap(), X_MAX);
        assert!(clamp_moment(-1e-3, DEFAULT_SLACK).is_err());
        assert!(clamp_moment(f64::NAN, DEFAULT_SLACK).is_err());
    }

    #[test]
    fn measure_names_round_trip() {
        for m in [
            Measure::EntropicDiscord,
            Measure::GeometricDiscord,
            Measure::Concurrence,
            Measure::Eof,
            Measure::MutualInformation,
            Measure::ClassicalCorrelation,
        ] {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
    }

    proptest::proptest! {
        #[test]
        fn point_invariants(x in 0.0f64..=X_MAX) {
            let p = CorrelationPoint::new(1.0, x, DEFAULT_SLACK).unwrap();
            proptest::prop_assert!((p.entropic_discord - (p.mutual_information - p.classical_correlation)).abs() <= 1e-12);
            proptest::prop_assert!((0.0..=1.0).contains(&p.concurrence));
            proptest::prop_assert!((0.0..=1.0).contains(&p.eof));
            proptest::prop_assert!((-1e-15..=1.0 + 1e-15).contains(&p.entropic_discord));
            proptest::prop_assert!((0.0..=0.5).contains(&p.geometric_discord));
            proptest::prop_assert!((-1e-15..=2.0 + 1e-15).contains(&p.mutual_information));
            proptest::prop_assert!((0.0..=1.0).contains(&p.classical_correlation));
            proptest::prop_assert_eq!(p.eof == 0.0, p.concurrence == 0.0);
        }
    }
}
