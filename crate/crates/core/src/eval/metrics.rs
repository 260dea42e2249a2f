use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// `counts[actual][predicted]` over an ordered class list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let n = classes.len();
        if n == 0 || counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(EvalError::BadConfig(format!(
                "confusion matrix must be {n}×{n}"
            )));
        }
        Ok(Self { classes, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, actual: usize) -> u64 {
        self.counts[actual].iter().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Accuracy of always predicting the most frequent actual class.
    pub fn baseline(&self) -> f64 {
        let max = (0..self.classes.len())
            .map(|i| self.row_sum(i))
            .max()
            .unwrap_or(0);
        max as f64 / self.total() as f64
    }
}

/// Counts `(actual, predicted)` pairs over `classes`.
pub fn confusion<T: PartialEq + ToString>(
    pairs: &[(T, T)],
    classes: &[T],
) -> Result<ConfusionMatrix, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = classes.len();
    let index = |x: &T| {
        classes
            .iter()
            .position(|c| c == x)
            .ok_or_else(|| EvalError::UnknownClass(x.to_string()))
    };
    let mut counts = vec![vec![0u64; n]; n];
    for (a, p) in pairs {
        counts[index(a)?][index(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.iter().map(ToString::to_string).collect(),
        counts,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Points for "predict positive when score ≥ threshold", one per distinct
/// score, by descending threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub positive_class: String,
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// Precision at the first point reaching `recall`; 1.0 at recall 0.
    pub fn precision_at_recall(&self, recall: f64) -> f64 {
        if recall <= 0.0 {
            return 1.0;
        }
        self.points
            .iter()
            .find(|p| p.recall >= recall)
            .map_or(0.0, |p| p.precision)
    }
}

pub fn pr_curve(
    scores: &[(f64, bool)],
    positive_class: impl Into<String>,
) -> Result<PrCurve, EvalError> {
    let positives = scores.iter().filter(|s| s.1).count();
    if positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
        });
    }
    Ok(PrCurve {
        positive_class: positive_class.into(),
        points,
    })
}

pub fn write_pr_csv(curve: &PrCurve, writer: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["threshold", "precision", "recall"])?;
    for p in &curve.points {
        w.write_record([
            p.threshold.to_string(),
            p.precision.to_string(),
            p.recall.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn screen_tables() {
        let m = ConfusionMatrix::from_counts(
            vec!["noscreen".into(), "screen".into()],
            vec![vec![919, 3], vec![1, 919]],
        )
        .unwrap();
        assert_eq!(m.total(), 1842);
        assert!((m.accuracy() - 1838.0 / 1842.0).abs() < 1e-15);
        let m2 = ConfusionMatrix::from_counts(
            vec!["n".into(), "s".into()],
            vec![vec![1842, 117], vec![116, 667]],
        )
        .unwrap();
        assert_eq!(
            format!("{:.3} {:.3}", m2.accuracy(), m2.baseline()),
            "0.915 0.714"
        );
    }

    #[test]
    fn all_correct_is_diagonal() {
        let pairs: Vec<(u8, u8)> = [0, 1, 2, 1, 0].iter().map(|&x| (x, x)).collect();
        let m = confusion(&pairs, &[0, 1, 2]).unwrap();
        assert_eq!(m.counts, vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        assert_eq!(m.accuracy(), 1.0);
    }

    #[test]
    fn confusion_errors() {
        assert!(matches!(
            confusion::<u8>(&[], &[0]),
            Err(EvalError::EmptyInput)
        ));
        assert!(matches!(
            confusion(&[(0u8, 5u8)], &[0, 1]),
            Err(EvalError::UnknownClass(_))
        ));
    }

    #[test]
    fn three_point_example() {
        let c = pr_curve(&[(0.9, true), (0.8, false), (0.7, true)], "screen").unwrap();
        let want = [(0.9, 1.0, 0.5), (0.8, 0.5, 0.5), (0.7, 2.0 / 3.0, 1.0)];
        assert_eq!(c.points.len(), 3);
        for (p, (t, pr, r)) in c.points.iter().zip(want) {
            assert_eq!((p.threshold, p.recall), (t, r));
            assert!((p.precision - pr).abs() < 1e-15);
        }
        assert_eq!(c.precision_at_recall(0.0), 1.0);
    }

    #[test]
    fn ties_share_a_point_and_no_positives_errors() {
        let c = pr_curve(&[(0.5, true), (0.5, false), (0.1, true)], "x").unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.points[0].precision, 0.5);
        assert!(matches!(
            pr_curve(&[(0.3, false)], "x"),
            Err(EvalError::NoPositives)
        ));
    }

    #[test]
    fn separated_scores_have_unit_precision() {
        let c = pr_curve(&[(0.9, true), (0.8, true), (0.2, false), (0.1, false)], "x").unwrap();
        for p in c
            .points
            .iter()
            .filter(|p| p.recall < 1.0 || p.threshold >= 0.8)
        {
            assert_eq!(p.precision, 1.0);
        }
    }

    proptest! {
        #[test]
        fn confusion_total_and_baseline(pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..200)) {
            let m = confusion(&pairs, &[0, 1, 2, 3]).unwrap();
            prop_assert_eq!(m.total() as usize, pairs.len());
            let max_row = (0..4).map(|c| pairs.iter().filter(|p| p.0 == c).count()).max().unwrap();
            prop_assert_eq!(m.baseline(), max_row as f64 / pairs.len() as f64);
        }

        #[test]
        fn recall_is_monotone(scores in proptest::collection::vec((0u8..10, any::<bool>()), 1..60)) {
            prop_assume!(scores.iter().any(|s| s.1));
            let s: Vec<(f64, bool)> = scores.iter().map(|&(v, p)| (v as f64 / 10.0, p)).collect();
            let c = pr_curve(&s, "x").unwrap();
            for w in c.points.windows(2) {
                prop_assert!(w[0].threshold > w[1].threshold);
                prop_assert!(w[0].recall <= w[1].recall);
            }
            for p in &c.points {
                prop_assert!((0.0..=1.0).contains(&p.precision) && (0.0..=1.0).contains(&p.recall));
            }
        }
    }
}
