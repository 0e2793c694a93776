use serde::{Deserialize, Serialize};

use super::{ExtendedState, QualityError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighSide {
    Above,
    Below,
}

/// Shape mapping a metric value to a utility in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityCurve {
    LinearInc { lo: f64, hi: f64 },
    LinearDec { lo: f64, hi: f64 },
    Target { peak: f64, tolerance: f64 },
    Step { threshold: f64, high_side: HighSide },
}

impl UtilityCurve {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            UtilityCurve::LinearInc { lo, hi } | UtilityCurve::LinearDec { lo, hi } => {
                if lo.is_finite() && hi.is_finite() && lo < hi {
                    Ok(())
                } else {
                    Err(format!("curve bounds need lo < hi (got {lo}, {hi})"))
                }
            }
            UtilityCurve::Target { peak, tolerance } => {
                if peak.is_finite() && tolerance.is_finite() && tolerance > 0.0 {
                    Ok(())
                } else {
                    Err(format!(
                        "target curve needs tolerance > 0 (got {tolerance})"
                    ))
                }
            }
            UtilityCurve::Step { threshold, .. } => {
                if threshold.is_finite() {
                    Ok(())
                } else {
                    Err("step threshold must be finite".into())
                }
            }
        }
    }
}

pub fn curve_eval(curve: &UtilityCurve, x: f64) -> f64 {
    match *curve {
        UtilityCurve::LinearInc { lo, hi } => {
            if x <= lo {
                0.0
            } else if x >= hi {
                1.0
            } else {
                (x - lo) / (hi - lo)
            }
        }
        UtilityCurve::LinearDec { lo, hi } => {
            if x <= lo {
                1.0
            } else if x >= hi {
                0.0
            } else {
                (hi - x) / (hi - lo)
            }
        }
        UtilityCurve::Target { peak, tolerance } => (1.0 - (x - peak).abs() / tolerance).max(0.0),
        UtilityCurve::Step {
            threshold,
            high_side,
        } => {
            let high = match high_side {
                HighSide::Above => x >= threshold,
                HighSide::Below => x <= threshold,
            };
            if high {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityTerm {
    pub metric: String,
    pub curve: UtilityCurve,
    pub weight: f64,
}

/// Weighted utility terms plus the threshold `UT` and approach margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub terms: Vec<UtilityTerm>,
    pub threshold: f64,
    #[serde(default = "default_margin")]
    pub approach_margin: f64,
}

fn default_margin() -> f64 {
    0.05
}

impl UtilitySpec {
    /// Structural problems with the terms and threshold; name resolution is checked by the scenario loader.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.terms.is_empty() {
            out.push("utility needs at least one term".to_owned());
        }
        for t in &self.terms {
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                out.push(format!("utility term {}: weight must be > 0", t.metric));
            }
            if let Err(e) = t.curve.validate() {
                out.push(format!("utility term {}: {e}", t.metric));
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            out.push(format!("threshold {} must lie in (0, 1)", self.threshold));
        }
        if !(self.approach_margin >= 0.0 && self.approach_margin.is_finite()) {
            out.push(format!(
                "approach_margin {} must be >= 0",
                self.approach_margin
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<(), QualityError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(QualityError::InvalidSpec(p.join("; ")))
        }
    }

    /// Normalized weighted sum of the term curves.
    pub fn utility(&self, ext: &ExtendedState) -> Result<f64, QualityError> {
        let mut acc = 0.0;
        let mut total = 0.0;
        for t in &self.terms {
            let x = ext
                .get(&t.metric)
                .ok_or_else(|| QualityError::MissingMetric(t.metric.clone()))?;
            acc += t.weight * curve_eval(&t.curve, x);
            total += t.weight;
        }
        Ok((acc / total).clamp(0.0, 1.0))
    }

    pub fn classify(&self, u: f64) -> Classification {
        threshold_check(u, self.threshold, self.approach_margin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Ok,
    Approaching,
    Breached,
}

impl Classification {
    pub fn triggers(self) -> bool {
        !matches!(self, Classification::Ok)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Ok => "ok",
            Classification::Approaching => "approaching",
            Classification::Breached => "breached",
        }
    }
}

pub fn threshold_check(u: f64, threshold: f64, margin: f64) -> Classification {
    if u < threshold {
        Classification::Breached
    } else if u < threshold + margin {
        Classification::Approaching
    } else {
        Classification::Ok
    }
}
