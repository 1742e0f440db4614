//! Small decision rules shared by the checks.

use alloc::vec::Vec;

/// Outcome of a Cauchy test on truncated norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceVerdict {
    Convergent,
    /// Octave increments roughly constant.
    DivergentLog,
    /// Octave increments growing.
    DivergentPower,
    Inconclusive,
}

impl DivergenceVerdict {
    pub fn is_divergent(self) -> bool {
        matches!(
            self,
            DivergenceVerdict::DivergentLog | DivergenceVerdict::DivergentPower
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            DivergenceVerdict::Convergent => "convergent",
            DivergenceVerdict::DivergentLog => "divergent-log",
            DivergenceVerdict::DivergentPower => "divergent-power",
            DivergenceVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Decay factor every successive increment must beat to count as convergent.
pub const CONVERGENT_DECAY: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct IncrementAnalysis {
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max/min − 1` over the increments.
    pub spread: f64,
    pub verdict: DivergenceVerdict,
}

/// Classifies per-octave increments of a truncated norm.
pub fn classify_increments(increments: &[f64], constant_tol: f64) -> IncrementAnalysis {
    let ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| {
            if w[0] > 0.0 {
                w[1] / w[0]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let max = increments.iter().copied().fold(0.0, f64::max);
    let min = increments.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 {
        max / min - 1.0
    } else {
        f64::INFINITY
    };
    let verdict = if increments.len() < 2 || max == 0.0 {
        DivergenceVerdict::Inconclusive
    } else if ratios.iter().all(|&r| r <= CONVERGENT_DECAY) {
        DivergenceVerdict::Convergent
    } else if spread <= constant_tol {
        DivergenceVerdict::DivergentLog
    } else if ratios.iter().all(|&r| r >= 1.0 + constant_tol) {
        DivergenceVerdict::DivergentPower
    } else {
        DivergenceVerdict::Inconclusive
    };
    IncrementAnalysis {
        increments: increments.to_vec(),
        ratios,
        spread,
        verdict,
    }
}

/// `max/min` of positive values; infinite if any value is not positive.
pub fn variation_ratio(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::INFINITY;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
}

pub fn window_stats(values: &[f64]) -> WindowStats {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    WindowStats {
        min,
        max,
        ratio: variation_ratio(values),
    }
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

pub fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_classified() {
        assert_eq!(
            classify_increments(&[1.0, 1.01, 0.99, 1.0], 0.05).verdict,
            DivergenceVerdict::DivergentLog
        );
        assert_eq!(
            classify_increments(&[1.0, 0.5, 0.25], 0.05).verdict,
            DivergenceVerdict::Convergent
        );
        assert_eq!(
            classify_increments(&[1.0, 2.0, 4.0], 0.05).verdict,
            DivergenceVerdict::DivergentPower
        );
        assert_eq!(
            classify_increments(&[1.0, 0.5, 2.0], 0.05).verdict,
            DivergenceVerdict::Inconclusive
        );
    }

    #[test]
    fn variation_of_nonpositive_is_infinite() {
        assert_eq!(variation_ratio(&[1.0, 0.0]), f64::INFINITY);
        assert_eq!(variation_ratio(&[2.0, 1.0, 4.0]), 4.0);
    }
}
