//! Train / classify / score runs over labeled feature sets.
//!
//! | kind              | model classes              | train    | test     |
//! |-------------------|----------------------------|----------|----------|
//! | `screen-balanced` | noscreen, screen           | balanced | balanced |
//! | `screen-shifted`  | noscreen, screen           | balanced | as given |
//! | `app4`            | other, messenger, fb, gmail| balanced | balanced |
//! | `flat5`           | all five labels            | balanced | as given |
//!
//! `screen-shifted` differs from `screen-balanced` only in that the caller
//! supplies a test set drawn from a different distribution; the runner
//! keeps that set whole. `app4` drops `noscreen` rows from both sides.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{balanced_indices, Manifest};
use super::metrics::{confusion, pr_curve, write_pr_csv, ConfusionMatrix, PrCurve};
use super::{io_err, EvalError};
use crate::classifier::{train, ClassLabel, LinearModel, ModelClass, ScoredRecord, TrainConfig};
use crate::features::{extract, FeatureConfig, FeatureVector};
use crate::imaging::{load_image, preprocess};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ScreenBalanced,
    ScreenShifted,
    App4,
    Flat5,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::ScreenBalanced,
        ExperimentKind::ScreenShifted,
        ExperimentKind::App4,
        ExperimentKind::Flat5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ScreenBalanced => "screen-balanced",
            ExperimentKind::ScreenShifted => "screen-shifted",
            ExperimentKind::App4 => "app4",
            ExperimentKind::Flat5 => "flat5",
        }
    }

    pub fn model_classes(self) -> Vec<ModelClass> {
        match self {
            ExperimentKind::ScreenBalanced | ExperimentKind::ScreenShifted => {
                vec![ModelClass::NoScreen, ModelClass::Screen]
            }
            ExperimentKind::App4 => ClassLabel::SCREEN.map(ModelClass::from).to_vec(),
            ExperimentKind::Flat5 => ClassLabel::ALL.map(ModelClass::from).to_vec(),
        }
    }

    fn keeps(self, label: ClassLabel) -> bool {
        self != ExperimentKind::App4 || label.is_screen()
    }

    fn balanced_test(self) -> bool {
        matches!(self, ExperimentKind::ScreenBalanced | ExperimentKind::App4)
    }

    fn is_screen(self) -> bool {
        matches!(
            self,
            ExperimentKind::ScreenBalanced | ExperimentKind::ScreenShifted
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown experiment '{s}' (expected one of screen-balanced, screen-shifted, app4, flat5)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Screen gate threshold, used by the screen kinds and `flat5`.
    pub threshold: f64,
    /// Seeds balanced sampling (test set uses `seed + 1`) and training.
    pub seed: u64,
    pub train: TrainConfig,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            threshold: 0.5,
            seed: 0,
            train: TrainConfig::default(),
        }
    }
}

/// A feature vector with its ground-truth label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFeatures {
    pub path: String,
    pub label: ClassLabel,
    pub features: FeatureVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Misclassified {
    pub path: String,
    pub actual: String,
    pub predicted: String,
}

/// The JSON report of one run. Identical inputs and spec give identical
/// reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub classes: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub baseline: f64,
    pub threshold: f64,
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    pub pr_positive_class: String,
    /// File name of the PR CSV, relative to the report, once written.
    pub pr_csv: Option<String>,
    pub misclassified: Vec<Misclassified>,
}

/// Loads, preprocesses and featurizes every manifest row, in row order.
pub fn extract_manifest(
    manifest: &Manifest,
    config: &FeatureConfig,
) -> Result<Vec<LabeledFeatures>, EvalError> {
    config.validate()?;
    manifest
        .rows
        .par_iter()
        .map(|row| {
            let image = preprocess(&load_image(&row.path)?);
            let features = extract(&image, config)?;
            Ok(LabeledFeatures {
                path: row.path.display().to_string(),
                label: row.label,
                features,
            })
        })
        .collect()
}

fn select(
    data: &[LabeledFeatures],
    kind: ExperimentKind,
    balanced: bool,
    seed: u64,
) -> Result<Vec<&LabeledFeatures>, EvalError> {
    let kept: Vec<&LabeledFeatures> = data.iter().filter(|d| kind.keeps(d.label)).collect();
    if kept.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if !balanced {
        return Ok(kept);
    }
    let labels: Vec<ClassLabel> = kept.iter().map(|d| d.label).collect();
    Ok(balanced_indices(&labels, &kind.model_classes(), seed)?
        .into_iter()
        .map(|i| kept[i])
        .collect())
}

/// Probability of `class`, or the summed probability of the labels it covers
/// when the model has no such class.
fn class_probability(
    model: &LinearModel,
    probs: &[f64],
    covers: impl Fn(ClassLabel) -> bool,
) -> f64 {
    model
        .classes
        .iter()
        .zip(probs)
        .filter(|(c, _)| ClassLabel::ALL.iter().any(|&l| c.covers(l) && covers(l)))
        .map(|(_, p)| p)
        .sum()
}

/// Predicted class name and PR score for one record.
fn predict(
    kind: ExperimentKind,
    model: &LinearModel,
    fv: &FeatureVector,
    threshold: f64,
) -> Result<(ModelClass, f64), EvalError> {
    let probs = model.predict_proba(fv)?;
    match kind {
        ExperimentKind::ScreenBalanced | ExperimentKind::ScreenShifted => {
            let p =
                class_probability(model, &probs, ClassLabel::is_screen).clamp(1e-12, 1.0 - 1e-12);
            Ok((
                if p < threshold {
                    ModelClass::NoScreen
                } else {
                    ModelClass::Screen
                },
                p,
            ))
        }
        ExperimentKind::App4 => {
            let (mut best, mut best_p) = (0, f64::MIN);
            for (i, &p) in probs.iter().enumerate() {
                if p > best_p {
                    (best, best_p) = (i, p);
                }
            }
            Ok((
                model.classes[best],
                class_probability(model, &probs, ClassLabel::is_sensitive),
            ))
        }
        ExperimentKind::Flat5 => {
            let mut by_label = [0f64; 5];
            for &label in &ClassLabel::ALL {
                by_label[label.index()] = class_probability(model, &probs, |l| l == label);
            }
            let record = ScoredRecord {
                path: String::new(),
                probs: by_label,
            };
            let (label, _) = record.decide(threshold);
            Ok((
                ModelClass::from(label),
                class_probability(model, &probs, ClassLabel::is_sensitive),
            ))
        }
    }
}

/// Runs `spec` on already-extracted features. Returns the report (with
/// `pr_csv` unset) and the PR curve.
pub fn run_experiment_on(
    spec: &ExperimentSpec,
    train_set: &[LabeledFeatures],
    test_set: &[LabeledFeatures],
) -> Result<(ExperimentReport, PrCurve), EvalError> {
    if !(0.0..=1.0).contains(&spec.threshold) {
        return Err(EvalError::BadConfig(format!(
            "threshold {} outside [0, 1]",
            spec.threshold
        )));
    }
    let kind = spec.kind;
    let classes = kind.model_classes();
    let train_rows = select(train_set, kind, true, spec.seed)?;
    let test_rows = select(
        test_set,
        kind,
        kind.balanced_test(),
        spec.seed.wrapping_add(1),
    )?;
    let examples: Vec<(&FeatureVector, ClassLabel)> =
        train_rows.iter().map(|d| (&d.features, d.label)).collect();
    let model = train(&examples, &classes, &spec.train, spec.seed)?;
    log::info!(
        "{kind}: trained on {} examples, testing on {}",
        examples.len(),
        test_rows.len()
    );

    let predictions: Vec<(ModelClass, f64)> = test_rows
        .par_iter()
        .map(|d| predict(kind, &model, &d.features, spec.threshold))
        .collect::<Result<_, _>>()?;
    let actual = |label: ClassLabel| {
        *classes
            .iter()
            .find(|c| c.covers(label))
            .expect("selected rows are covered")
    };
    let pairs: Vec<(ModelClass, ModelClass)> = test_rows
        .iter()
        .zip(&predictions)
        .map(|(d, &(p, _))| (actual(d.label), p))
        .collect();
    let matrix = confusion(&pairs, &classes)?;

    let (positive, is_positive): (&str, fn(ClassLabel) -> bool) = if kind.is_screen() {
        ("screen", ClassLabel::is_screen)
    } else {
        ("sensitive", ClassLabel::is_sensitive)
    };
    let scored: Vec<(f64, bool)> = test_rows
        .iter()
        .zip(&predictions)
        .map(|(d, &(_, s))| (s, is_positive(d.label)))
        .collect();
    let curve = pr_curve(&scored, positive)?;

    let misclassified = test_rows
        .iter()
        .zip(&pairs)
        .filter(|(_, (a, p))| a != p)
        .map(|(d, (a, p))| Misclassified {
            path: d.path.clone(),
            actual: a.to_string(),
            predicted: p.to_string(),
        })
        .collect();
    let report = ExperimentReport {
        kind,
        classes: matrix.classes.clone(),
        accuracy: matrix.accuracy(),
        baseline: matrix.baseline(),
        confusion: matrix,
        threshold: spec.threshold,
        seed: spec.seed,
        train_count: examples.len(),
        test_count: test_rows.len(),
        pr_positive_class: positive.to_string(),
        pr_csv: None,
        misclassified,
    };
    Ok((report, curve))
}

/// Extracts both manifests, runs `spec`, and writes `<kind>.json` and
/// `<kind>_pr.csv` into `out_dir`.
pub fn run_experiment(
    spec: &ExperimentSpec,
    train_manifest: &Manifest,
    test_manifest: &Manifest,
    out_dir: impl AsRef<Path>,
) -> Result<ExperimentReport, EvalError> {
    let out_dir = out_dir.as_ref();
    let fc = spec.train.feature_config;
    let train_set = extract_manifest(train_manifest, &fc)?;
    let test_set = extract_manifest(test_manifest, &fc)?;
    let (mut report, curve) = run_experiment_on(spec, &train_set, &test_set)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let pr_name = format!("{}_pr.csv", spec.kind);
    let mut csv = Vec::new();
    write_pr_csv(&curve, &mut csv).map_err(|e| EvalError::BadConfig(e.to_string()))?;
    write_atomic(&out_dir.join(&pr_name), &csv)?;
    report.pr_csv = Some(pr_name);
    write_report(&report, out_dir.join(format!("{}.json", spec.kind)))?;
    Ok(report)
}

/// Writes the report as pretty JSON via a temporary file and rename.
pub fn write_report(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let mut text = serde_json::to_vec_pretty(report).expect("report serializes");
    text.push(b'\n');
    write_atomic(path.as_ref(), &text)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), EvalError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    let mut f = fs::File::create(tmp).map_err(io_err(tmp))?;
    f.write_all(bytes)
        .and_then(|_| f.sync_all())
        .map_err(io_err(tmp))?;
    fs::rename(tmp, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Segment;

    /// Two-dimensional features where each label has its own direction.
    fn toy(counts: &[(ClassLabel, usize)]) -> Vec<LabeledFeatures> {
        let mut out = Vec::new();
        for &(label, n) in counts {
            for i in 0..n {
                let mut values = vec![0.0; 5];
                values[label.index()] = 1.0 + (i % 3) as f64 * 0.1;
                out.push(LabeledFeatures {
                    path: format!("{label}_{i}"),
                    label,
                    features: FeatureVector {
                        values,
                        layout: Vec::<Segment>::new(),
                    },
                });
            }
        }
        out
    }

    fn spec(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec {
            train: TrainConfig {
                epochs: 40,
                ..TrainConfig::default()
            },
            ..ExperimentSpec::new(kind)
        }
    }

    #[test]
    fn kinds_parse() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("screen1".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn balanced_screen_baseline_is_half() {
        let data = toy(&[
            (ClassLabel::NoScreen, 30),
            (ClassLabel::Gmail, 10),
            (ClassLabel::OtherApp, 10),
        ]);
        let (r, curve) =
            run_experiment_on(&spec(ExperimentKind::ScreenBalanced), &data, &data).unwrap();
        assert_eq!(r.baseline, 0.5);
        assert_eq!(r.test_count, 40);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(curve.positive_class, "screen");
    }

    #[test]
    fn flat5_keeps_imbalanced_test() {
        let train_set = toy(&ClassLabel::ALL.map(|l| (l, 10)));
        // 20 screens of 70 leaves the majority class at 50/70 = 0.714
        let test_set = toy(&[
            (ClassLabel::NoScreen, 50),
            (ClassLabel::OtherApp, 5),
            (ClassLabel::Messenger, 5),
            (ClassLabel::Facebook, 5),
            (ClassLabel::Gmail, 5),
        ]);
        let (r, _) =
            run_experiment_on(&spec(ExperimentKind::Flat5), &train_set, &test_set).unwrap();
        assert_eq!(r.test_count, 70);
        assert_eq!(format!("{:.3}", r.baseline), "0.714");
        assert_eq!(
            r.classes,
            ["noscreen", "other", "messenger", "facebook", "gmail"]
        );
    }

    #[test]
    fn app4_drops_noscreen_and_balances() {
        let data = toy(&[
            (ClassLabel::NoScreen, 40),
            (ClassLabel::OtherApp, 9),
            (ClassLabel::Messenger, 7),
            (ClassLabel::Facebook, 8),
            (ClassLabel::Gmail, 12),
        ]);
        let (r, _) = run_experiment_on(&spec(ExperimentKind::App4), &data, &data).unwrap();
        assert_eq!(r.test_count, 28);
        assert_eq!(r.baseline, 0.25);
    }

    #[test]
    fn threshold_one_rejects_every_screen() {
        let data = toy(&[(ClassLabel::NoScreen, 10), (ClassLabel::Facebook, 10)]);
        let s = ExperimentSpec {
            threshold: 1.0,
            ..spec(ExperimentKind::ScreenShifted)
        };
        let (r, _) = run_experiment_on(&s, &data, &data).unwrap();
        assert_eq!(r.confusion.counts, vec![vec![10, 0], vec![10, 0]]);
    }

    #[test]
    fn missing_class_is_reported() {
        let data = toy(&[(ClassLabel::NoScreen, 10)]);
        assert!(matches!(
            run_experiment_on(&spec(ExperimentKind::ScreenBalanced), &data, &data),
            Err(EvalError::MissingClass(_))
        ));
    }

    #[test]
    fn report_is_deterministic_and_atomic() {
        let data = toy(&[
            (ClassLabel::NoScreen, 12),
            (ClassLabel::Gmail, 6),
            (ClassLabel::Messenger, 6),
        ]);
        let s = spec(ExperimentKind::ScreenShifted);
        let (a, _) = run_experiment_on(&s, &data, &data).unwrap();
        let (b, _) = run_experiment_on(&s, &data, &data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (pa, pb) = (dir.path().join("a.json"), dir.path().join("b.json"));
        write_report(&a, &pa).unwrap();
        write_report(&b, &pb).unwrap();
        assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
        assert!(!dir.path().join("a.json.tmp").exists());
        let back: ExperimentReport = serde_json::from_slice(&fs::read(&pa).unwrap()).unwrap();
        assert_eq!(back, a);
    }
}
