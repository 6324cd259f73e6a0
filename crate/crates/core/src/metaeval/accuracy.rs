use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::corpus::HumanScores;
use crate::error::{Result, SlideError};

/// Metric score per `(lang_pair, system)`.
pub type MetricScores = BTreeMap<(String, String), f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemPair {
    pub lang_pair: String,
    pub sys_a: String,
    pub sys_b: String,
    /// human(a) - human(b)
    pub human_delta: f64,
    /// metric(a) - metric(b)
    pub metric_delta: f64,
}

impl SystemPair {
    /// `None` for human ties, which do not count.
    pub fn is_correct(&self) -> Option<bool> {
        let human = self.human_delta.partial_cmp(&0.0)?;
        if human == Ordering::Equal {
            return None;
        }
        Some(self.metric_delta.partial_cmp(&0.0) == Some(human))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub n_pairs: usize,
    pub n_correct: usize,
}

impl PairCounts {
    pub fn accuracy(&self) -> Option<f64> {
        (self.n_pairs > 0).then(|| self.n_correct as f64 / self.n_pairs as f64)
    }

    fn add(&mut self, other: PairCounts) {
        self.n_pairs += other.n_pairs;
        self.n_correct += other.n_correct;
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyReport {
    pub per_lang_pair: BTreeMap<String, PairCounts>,
    /// Micro-average: pair counts summed over language pairs.
    pub pooled: PairCounts,
    pub config_label: String,
}

impl AccuracyReport {
    /// Mean of per-language-pair accuracies (pairs without comparisons skipped).
    pub fn macro_accuracy(&self) -> Option<f64> {
        let accs: Vec<f64> = self
            .per_lang_pair
            .values()
            .filter_map(PairCounts::accuracy)
            .collect();
        (!accs.is_empty()).then(|| accs.iter().sum::<f64>() / accs.len() as f64)
    }

    pub fn accuracy(&self) -> Option<f64> {
        self.pooled.accuracy()
    }
}

/// Every unordered pair of human-scored systems within each language pair,
/// in sorted system-name order.
pub fn system_pairs(metric: &MetricScores, human: &[HumanScores]) -> Result<Vec<SystemPair>> {
    let mut pairs = Vec::new();
    for hs in human {
        let mut entries = Vec::with_capacity(hs.scores.len());
        for (system, &h) in &hs.scores {
            let m = metric
                .get(&(hs.lang_pair.clone(), system.clone()))
                .copied()
                .ok_or_else(|| {
                    SlideError::Evaluation(format!(
                        "no metric score for human-scored system `{system}` ({})",
                        hs.lang_pair
                    ))
                })?;
            entries.push((system, h, m));
        }
        for (i, (a, ha, ma)) in entries.iter().enumerate() {
            for (b, hb, mb) in &entries[i + 1..] {
                pairs.push(SystemPair {
                    lang_pair: hs.lang_pair.clone(),
                    sys_a: (*a).clone(),
                    sys_b: (*b).clone(),
                    human_delta: ha - hb,
                    metric_delta: ordered_delta(*ma, *mb),
                });
            }
        }
    }
    Ok(pairs)
}

/// `a - b`, but never rounding a strict ordering to zero or losing its sign.
fn ordered_delta(a: f64, b: f64) -> f64 {
    match a.partial_cmp(&b) {
        Some(Ordering::Equal) => 0.0,
        Some(Ordering::Greater) => (a - b).max(f64::MIN_POSITIVE),
        Some(Ordering::Less) => (a - b).min(-f64::MIN_POSITIVE),
        None => f64::NAN,
    }
}

/// Fraction of system pairs the metric orders the same way as the humans.
/// Human ties are excluded; metric ties count as incorrect.
pub fn pairwise_accuracy(
    metric: &MetricScores,
    human: &[HumanScores],
    config_label: impl Into<String>,
) -> Result<AccuracyReport> {
    let mut report = AccuracyReport {
        config_label: config_label.into(),
        ..Default::default()
    };
    for hs in human {
        report.per_lang_pair.entry(hs.lang_pair.clone()).or_default();
    }
    for pair in system_pairs(metric, human)? {
        let Some(correct) = pair.is_correct() else {
            continue;
        };
        let counts = PairCounts {
            n_pairs: 1,
            n_correct: usize::from(correct),
        };
        report
            .per_lang_pair
            .get_mut(&pair.lang_pair)
            .expect("seeded above")
            .add(counts);
        report.pooled.add(counts);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::JudgmentStyle;

    fn human(lp: &str, scores: &[(&str, f64)]) -> HumanScores {
        HumanScores {
            lang_pair: lp.into(),
            scores: scores.iter().map(|(s, v)| (s.to_string(), *v)).collect(),
            judgment_style: JudgmentStyle::Other,
        }
    }

    fn metric(lp: &str, scores: &[(&str, f64)]) -> MetricScores {
        scores
            .iter()
            .map(|(s, v)| ((lp.to_string(), s.to_string()), *v))
            .collect()
    }

    #[test]
    fn agreeing_pair() {
        let r = pairwise_accuracy(
            &metric("en-de", &[("A", 0.9), ("B", 0.8)]),
            &[human("en-de", &[("A", 2.0), ("B", 1.0)])],
            "x",
        )
        .unwrap();
        assert_eq!(r.pooled, PairCounts { n_pairs: 1, n_correct: 1 });
        assert_eq!(r.accuracy(), Some(1.0));
    }

    #[test]
    fn fully_inverted() {
        let r = pairwise_accuracy(
            &metric("en-de", &[("A", 0.1), ("B", 0.2), ("C", 0.3)]),
            &[human("en-de", &[("A", 2.0), ("B", 1.0), ("C", 0.0)])],
            "x",
        )
        .unwrap();
        assert_eq!(r.pooled, PairCounts { n_pairs: 3, n_correct: 0 });
    }

    #[test]
    fn tie_rules() {
        // A=B for humans: excluded. B,C metric tie: incorrect.
        let r = pairwise_accuracy(
            &metric("en-de", &[("A", 0.9), ("B", 0.5), ("C", 0.5)]),
            &[human("en-de", &[("A", 1.0), ("B", 1.0), ("C", 0.0)])],
            "x",
        )
        .unwrap();
        assert_eq!(r.pooled, PairCounts { n_pairs: 2, n_correct: 1 });
    }

    #[test]
    fn missing_metric_score() {
        let err = pairwise_accuracy(
            &metric("en-de", &[("A", 0.9)]),
            &[human("en-de", &[("A", 1.0), ("B", 0.0)])],
            "x",
        )
        .unwrap_err();
        assert!(err.to_string().contains("`B`"));
    }

    #[test]
    fn macro_vs_micro() {
        let mut m = metric("a", &[("x", 1.0), ("y", 0.0)]);
        m.extend(metric("b", &[("x", 0.0), ("y", 1.0), ("z", 2.0)]));
        let r = pairwise_accuracy(
            &m,
            &[
                human("a", &[("x", 1.0), ("y", 0.0)]),
                human("b", &[("x", 2.0), ("y", 1.0), ("z", 0.0)]),
            ],
            "x",
        )
        .unwrap();
        assert_eq!(r.pooled, PairCounts { n_pairs: 4, n_correct: 1 });
        assert_eq!(r.accuracy(), Some(0.25));
        assert_eq!(r.macro_accuracy(), Some(0.5));
    }

    #[test]
    fn tiny_differences_keep_their_sign() {
        assert!(ordered_delta(1.0, 1.0 - f64::EPSILON) > 0.0);
        assert!(ordered_delta(f64::MAX, -f64::MAX).is_infinite());
        assert_eq!(ordered_delta(0.3, 0.3), 0.0);
    }
}
