use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Honest,
    Aggressive,
    Conservative,
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] =
        [StrategyKind::Honest, StrategyKind::Aggressive, StrategyKind::Conservative, StrategyKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Honest => "honest",
            StrategyKind::Aggressive => "aggressive",
            StrategyKind::Conservative => "conservative",
            StrategyKind::Random => "random",
        }
    }
}

/// How a client turns its true valuation into a reported bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub kind: StrategyKind,
    /// Overbid factor for `aggressive`.
    pub alpha: f64,
    /// Underbid factor for `conservative`.
    pub beta: f64,
    /// Range of the uniform factor drawn by `random`.
    pub random_low: f64,
    pub random_high: f64,
}

impl StrategyProfile {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyProfile { kind, alpha: 1.5, beta: 0.6, random_low: 0.5, random_high: 1.5 }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.alpha.is_nan() || self.alpha <= 1.0 {
            return Err(format!("alpha {} must exceed 1", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(format!("beta {} must lie in (0, 1)", self.beta));
        }
        if !(self.random_low >= 0.0 && self.random_low < self.random_high) {
            return Err("random range must satisfy 0 <= low < high".into());
        }
        Ok(())
    }
}

/// Reported valuation for true value `v` under `strategy`.
pub fn apply_strategy<R: Rng>(v: f64, strategy: &StrategyProfile, rng: &mut R) -> f64 {
    match strategy.kind {
        StrategyKind::Honest => v,
        StrategyKind::Aggressive => strategy.alpha * v,
        StrategyKind::Conservative => strategy.beta * v,
        StrategyKind::Random => rng.gen_range(strategy.random_low..strategy.random_high) * v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::RngStreams;

    #[test]
    fn deterministic_strategies() {
        let mut rng = RngStreams::new(0).stream("s");
        assert_eq!(apply_strategy(6.0, &StrategyProfile::new(StrategyKind::Honest), &mut rng), 6.0);
        assert_eq!(apply_strategy(6.0, &StrategyProfile::new(StrategyKind::Aggressive), &mut rng), 9.0);
        assert_eq!(apply_strategy(10.0, &StrategyProfile::new(StrategyKind::Conservative), &mut rng), 6.0);
    }

    #[test]
    fn random_strategy_is_seeded_and_bounded() {
        let p = StrategyProfile::new(StrategyKind::Random);
        let draw = |seed| apply_strategy(10.0, &p, &mut RngStreams::new(seed).stream("s"));
        assert_eq!(draw(4), draw(4));
        for seed in 0..50 {
            let v = draw(seed);
            assert!((5.0..15.0).contains(&v));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(StrategyProfile::new(StrategyKind::Honest).validate().is_ok());
        assert!(StrategyProfile { alpha: 1.0, ..StrategyProfile::new(StrategyKind::Aggressive) }.validate().is_err());
        assert!(StrategyProfile { beta: 1.2, ..StrategyProfile::new(StrategyKind::Conservative) }.validate().is_err());
    }
}
