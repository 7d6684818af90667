//! The action-generalization gap between a reference arm and an agent arm.

use std::fmt;

use super::curve::LearningCurve;
use super::metrics::{curve_auc, iqr, median, steps_to_threshold};
use super::HarnessError;

pub const GAP_CSV_HEADER: &str = "metric,arm_a,arm_b,median_a,iqr_a,median_b,iqr_b,gap,ratio,censored_a,censored_b";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMetric {
    /// Censored steps-to-threshold; larger is slower.
    StepsToThreshold { threshold: f64, window: usize },
    /// Step-weighted mean return; larger is better.
    Auc,
}

impl GapMetric {
    pub fn name(&self) -> &'static str {
        match self {
            GapMetric::StepsToThreshold { .. } => "steps_to_threshold",
            GapMetric::Auc => "auc",
        }
    }
}

/// Per-seed metric values of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub values: Vec<f64>,
    pub censored: usize,
    pub median: f64,
    pub iqr: f64,
}

impl ArmSummary {
    fn from_values(values: Vec<f64>, censored: usize) -> Self {
        let median = median(&values).expect("non-empty arm");
        let iqr = iqr(&values).expect("non-empty arm");
        Self { values, censored, median, iqr }
    }
}

/// Computes the metric for every run of an arm. Uncensored runs never exceed `budget`.
pub fn summarize_arm(runs: &[LearningCurve], metric: GapMetric, budget: u64) -> ArmSummary {
    let mut censored = 0;
    let values = runs
        .iter()
        .map(|c| match metric {
            GapMetric::StepsToThreshold { threshold, window } => match steps_to_threshold(c, threshold, window) {
                Some(s) if s <= budget => s as f64,
                _ => {
                    censored += 1;
                    budget as f64
                }
            },
            GapMetric::Auc => curve_auc(c, budget),
        })
        .collect();
    ArmSummary::from_values(values, censored)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub metric: GapMetric,
    pub arm_a: String,
    pub arm_b: String,
    pub a: ArmSummary,
    pub b: ArmSummary,
    /// Positive when arm b learns worse than arm a. `None` when undefined.
    pub gap: Option<f64>,
    /// `median_b / median_a`. `None` when undefined.
    pub ratio: Option<f64>,
    /// The ratio is only a lower bound because arm b's median is censored at the budget.
    pub ratio_is_lower_bound: bool,
    pub diagnostic: Option<String>,
}

/// Compares reference arm `a` (typically the oracle) against agent arm `b`.
///
/// For steps-to-threshold the gap is `median(b) - median(a)`; for AUC it is
/// `median(a) - median(b)`. Either way, positive means arm b is worse.
pub fn generalization_gap(
    arm_a: &str,
    runs_a: &[LearningCurve],
    arm_b: &str,
    runs_b: &[LearningCurve],
    metric: GapMetric,
    budget: u64,
) -> Result<GapReport, HarnessError> {
    for (name, runs) in [(arm_a, runs_a), (arm_b, runs_b)] {
        if runs.len() < 2 {
            return Err(HarnessError::InsufficientRuns { arm: name.to_string(), runs: runs.len() });
        }
    }
    let a = summarize_arm(runs_a, metric, budget);
    let b = summarize_arm(runs_b, metric, budget);

    let mut report = GapReport {
        metric,
        arm_a: arm_a.to_string(),
        arm_b: arm_b.to_string(),
        gap: None,
        ratio: None,
        ratio_is_lower_bound: false,
        diagnostic: None,
        a,
        b,
    };
    let ratio = |num: f64, den: f64| (den != 0.0).then(|| num / den);
    match metric {
        GapMetric::StepsToThreshold { .. } => {
            if report.a.censored == report.a.values.len() {
                report.diagnostic =
                    Some(format!("every `{arm_a}` run is censored at the budget; the gap is undefined"));
            } else {
                report.gap = Some(report.b.median - report.a.median);
                report.ratio = ratio(report.b.median, report.a.median);
                if report.b.censored > 0 && report.b.median >= budget as f64 {
                    report.ratio_is_lower_bound = true;
                    report.diagnostic =
                        Some(format!("median of `{arm_b}` is censored at the budget; ratio is a lower bound"));
                }
            }
        }
        GapMetric::Auc => {
            report.gap = Some(report.a.median - report.b.median);
            report.ratio = ratio(report.b.median, report.a.median);
        }
    }
    Ok(report)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl GapReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.metric.name(),
            self.arm_a,
            self.arm_b,
            self.a.median,
            self.a.iqr,
            self.b.median,
            self.b.iqr,
            opt(self.gap),
            opt(self.ratio),
            self.a.censored,
            self.b.censored
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{GAP_CSV_HEADER}\n{}\n", self.csv_row())
    }
}

impl fmt::Display for GapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "metric: {}", self.metric.name())?;
        if let GapMetric::StepsToThreshold { threshold, window } = self.metric {
            writeln!(f, "threshold: {threshold} (trailing {window}-episode mean)")?;
        }
        for (name, s) in [(&self.arm_a, &self.a), (&self.arm_b, &self.b)] {
            writeln!(
                f,
                "  {name:<16} median {:>12.3}  iqr {:>12.3}  runs {:>3}  censored {}",
                s.median,
                s.iqr,
                s.values.len(),
                s.censored
            )?;
        }
        match self.gap {
            Some(g) => writeln!(f, "gap: {g:.3}")?,
            None => writeln!(f, "gap: undefined")?,
        }
        match self.ratio {
            Some(r) if self.ratio_is_lower_bound => writeln!(f, "ratio: >= {r:.3}")?,
            Some(r) => writeln!(f, "ratio: {r:.3}")?,
            None => writeln!(f, "ratio: undefined")?,
        }
        if let Some(d) = &self.diagnostic {
            writeln!(f, "note: {d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// A curve that reaches a return of 1 at `at` steps and 0 before.
    fn reaching(at: u64) -> LearningCurve {
        LearningCurve::from_points(&[(at / 2, 0.0), (at, 1.0)]).unwrap()
    }

    fn never() -> LearningCurve {
        LearningCurve::from_points(&[(10, 0.0), (20, 0.0)]).unwrap()
    }

    const STEPS: GapMetric = GapMetric::StepsToThreshold { threshold: 1.0, window: 1 };

    #[test]
    fn identical_sets_have_zero_gap() {
        let runs = vec![reaching(100), reaching(300), reaching(200)];
        for metric in [STEPS, GapMetric::Auc] {
            let r = generalization_gap("a", &runs, "b", &runs, metric, 1000).unwrap();
            assert_eq!(r.gap, Some(0.0));
            assert_eq!(r.ratio, Some(1.0));
        }
    }

    #[test]
    fn twice_as_long() {
        let oracle = vec![reaching(10_000), reaching(10_000)];
        let agent = vec![reaching(20_000), reaching(20_000)];
        let r = generalization_gap("oracle", &oracle, "dqn", &agent, STEPS, 100_000).unwrap();
        assert_eq!(r.gap, Some(10_000.0));
        assert_eq!(r.ratio, Some(2.0));
        assert!(!r.ratio_is_lower_bound);
    }

    #[test]
    fn censored_agent_gives_lower_bound() {
        let oracle = vec![reaching(10_000), reaching(30_000)];
        let agent = vec![never(), never(), never()];
        let r = generalization_gap("oracle", &oracle, "dqn", &agent, STEPS, 50_000).unwrap();
        assert_eq!(r.b.censored, 3);
        assert_eq!(r.ratio, Some(50_000.0 / 20_000.0));
        assert!(r.ratio_is_lower_bound);
        assert!(r.to_string().contains(">= 2.500"));
    }

    #[test]
    fn censored_oracle_is_undefined() {
        let r = generalization_gap("oracle", &[never(), never()], "dqn", &[reaching(5)], STEPS, 50);
        assert!(matches!(r, Err(HarnessError::InsufficientRuns { .. })));
        let r =
            generalization_gap("oracle", &[never(), never()], "dqn", &[reaching(5), reaching(7)], STEPS, 50).unwrap();
        assert_eq!(r.gap, None);
        assert!(r.diagnostic.unwrap().contains("undefined"));
    }

    #[test]
    fn csv_row_layout() {
        let r = generalization_gap("o", &[reaching(10), reaching(20)], "u", &[reaching(20), reaching(40)], STEPS, 100)
            .unwrap();
        assert_eq!(r.to_csv(), format!("{GAP_CSV_HEADER}\nsteps_to_threshold,o,u,15,5,30,10,15,2,0,0\n"));
    }

    proptest! {
        #[test]
        fn swapping_arms_negates_gap(a in prop::collection::vec(1u64..500, 2..8), b in prop::collection::vec(1u64..500, 2..8)) {
            let ra: Vec<_> = a.iter().map(|&s| reaching(s * 2)).collect();
            let rb: Vec<_> = b.iter().map(|&s| reaching(s * 2)).collect();
            let ab = generalization_gap("a", &ra, "b", &rb, STEPS, 10_000).unwrap();
            let ba = generalization_gap("b", &rb, "a", &ra, STEPS, 10_000).unwrap();
            prop_assert_eq!(ab.gap.unwrap(), -ba.gap.unwrap());
            prop_assert!((ab.ratio.unwrap() * ba.ratio.unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
