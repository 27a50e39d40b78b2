//! Published twelve-term sum-of-exponentials fits of `exp(-t^beta)`, normalized
//! so that the weights sum to one (to the five printed decimals).

use super::PronySeries;
use crate::error::{Error, Result};

/// `(beta, [(a_i, b_i)])` for each tabulated exponent.
pub const TABULATED: [(f64, [(f64, f64); 12]); 3] = [
    (
        3.0 / 7.0,
        [
            (0.02792, 0.03816),
            (0.09567, 0.10117),
            (0.13049, 0.22822),
            (0.13388, 0.47142),
            (0.12456, 0.94243),
            (0.10976, 1.88828),
            (0.09256, 3.86312),
            (0.07525, 8.15604),
            (0.05938, 17.92388),
            (0.04587, 41.47225),
            (0.03588, 104.13591),
            (0.06877, 402.71691),
        ],
    ),
    (
        0.5,
        [
            (0.01694, 0.06265),
            (0.08574, 0.13381),
            (0.14468, 0.26816),
            (0.15870, 0.52050),
            (0.14514, 1.00410),
            (0.12095, 1.96395),
            (0.09512, 3.94401),
            (0.07188, 8.20241),
            (0.05275, 17.81155),
            (0.03791, 40.85894),
            (0.02749, 102.07104),
            (0.04270, 383.52267),
        ],
    ),
    (
        0.6,
        [
            (0.01043, 0.12022),
            (0.08117, 0.20610),
            (0.17168, 0.35680),
            (0.19624, 0.63293),
            (0.16742, 1.15481),
            (0.12467, 2.17404),
            (0.08711, 4.23811),
            (0.05896, 8.59467),
            (0.03913, 18.25401),
            (0.02559, 41.07522),
            (0.01688, 100.99297),
            (0.02071, 363.84147),
        ],
    ),
];

const BETA_MATCH_TOL: f64 = 1e-9;

pub fn supported_betas() -> [f64; 3] {
    TABULATED.map(|(beta, _)| beta)
}

/// True when `beta` is one of 3/7, 1/2, 3/5.
pub fn is_tabulated(beta: f64) -> bool {
    TABULATED
        .iter()
        .any(|(b, _)| (b - beta).abs() <= BETA_MATCH_TOL)
}

pub fn load_builtin_prony(beta: f64) -> Result<PronySeries> {
    TABULATED
        .iter()
        .find(|(b, _)| (b - beta).abs() <= BETA_MATCH_TOL)
        .map(|(_, pairs)| PronySeries::from_pairs(pairs))
        .unwrap_or_else(|| {
            Err(Error::NotFound(format!(
                "no built-in Prony series for beta = {beta}; supported values are 3/7, 1/2, 3/5"
            )))
        })
}
