use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassLabel, ClassifierError, ModelClass};
use crate::features::{FeatureConfig, FeatureVector};

pub const MODEL_VERSION: u32 = 1;

/// Mini-batch gradient descent settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub feature_config: FeatureConfig,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            feature_config: FeatureConfig::default(),
            epochs: 30,
            learning_rate: 1.0,
            l2: 1e-5,
            batch_size: 16,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
}

/// One-vs-rest linear model. Class order is canonical (see [`ModelClass`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub version: u32,
    pub classes: Vec<ModelClass>,
    pub feature_config: FeatureConfig,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub train_meta: TrainMeta,
}

impl LinearModel {
    /// All-zero model, which predicts the uniform distribution.
    pub fn zeros(classes: &[ModelClass], feature_config: FeatureConfig, dimension: usize) -> Self {
        Self {
            version: MODEL_VERSION,
            classes: classes.to_vec(),
            feature_config,
            weights: vec![vec![0.0; dimension]; classes.len()],
            biases: vec![0.0; classes.len()],
            train_meta: TrainMeta {
                seed: 0,
                epochs: 0,
                learning_rate: 0.0,
                l2: 0.0,
                batch_size: 0,
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.version != MODEL_VERSION {
            return Err(ClassifierError::SchemaMismatch(format!(
                "unsupported model version {}",
                self.version
            )));
        }
        if self.classes.len() < 2 {
            return Err(ClassifierError::SchemaMismatch(
                "a model needs at least two classes".into(),
            ));
        }
        if self.weights.len() != self.classes.len() || self.biases.len() != self.classes.len() {
            return Err(ClassifierError::SchemaMismatch(
                "one weight row and bias per class required".into(),
            ));
        }
        let dim = self.dimension();
        if self.weights.iter().any(|w| w.len() != dim) {
            return Err(ClassifierError::SchemaMismatch(
                "weight rows differ in length".into(),
            ));
        }
        Ok(())
    }

    pub fn class_index(&self, class: ModelClass) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    /// Position of the model class covering `label`.
    pub fn index_of_label(&self, label: ClassLabel) -> Option<usize> {
        self.classes.iter().position(|c| c.covers(label))
    }

    pub fn scores(&self, values: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        if values.len() != self.dimension() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.dimension(),
                got: values.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, values) + b)
            .collect())
    }

    /// Softmax over the per-class scores.
    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<Vec<f64>, ClassifierError> {
        self.predict_proba_values(&fv.values)
    }

    pub fn predict_proba_values(&self, values: &[f64]) -> Result<Vec<f64>, ClassifierError> {
        Ok(softmax(&self.scores(values)?))
    }

    /// Most probable class; ties go to the earliest class.
    pub fn predict(&self, fv: &FeatureVector) -> Result<(ModelClass, f64), ClassifierError> {
        let p = self.predict_proba(fv)?;
        let i = argmax(&p);
        Ok((self.classes[i], p[i]))
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss `log(1 + e^s) - y s`, stable for large |s|.
#[inline]
fn log_loss(s: f64, y: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p() - y * s
}

/// A labeled training example, owned or borrowed.
pub trait Example {
    fn features(&self) -> &FeatureVector;
    fn label(&self) -> ClassLabel;
}

impl Example for (FeatureVector, ClassLabel) {
    fn features(&self) -> &FeatureVector {
        &self.0
    }

    fn label(&self) -> ClassLabel {
        self.1
    }
}

impl Example for (&FeatureVector, ClassLabel) {
    fn features(&self) -> &FeatureVector {
        self.0
    }

    fn label(&self) -> ClassLabel {
        self.1
    }
}

/// Trains a one-vs-rest logistic model. See [`train_with_history`].
pub fn train<E: Example>(
    examples: &[E],
    classes: &[ModelClass],
    config: &TrainConfig,
    seed: u64,
) -> Result<LinearModel, ClassifierError> {
    train_with_history(examples, classes, config, seed).map(|(m, _)| m)
}

/// Trains and also returns the regularized objective after each epoch
/// (index 0 is the objective of the zero initialization).
///
/// Weights start at zero; each epoch visits the examples in an order drawn
/// from a ChaCha8 stream seeded with `seed`, so equal inputs give
/// bit-identical weights.
pub fn train_with_history<E: Example>(
    examples: &[E],
    classes: &[ModelClass],
    config: &TrainConfig,
    seed: u64,
) -> Result<(LinearModel, Vec<f64>), ClassifierError> {
    if config.batch_size == 0 || !(config.learning_rate > 0.0) || !(config.l2 >= 0.0) {
        return Err(ClassifierError::BadConfig(
            "batch_size ≥ 1, learning_rate > 0 and l2 ≥ 0 required".into(),
        ));
    }
    let mut classes = classes.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ClassifierError::BadConfig(
            "at least two classes required".into(),
        ));
    }
    if ClassLabel::ALL
        .iter()
        .any(|&l| classes.iter().filter(|c| c.covers(l)).count() > 1)
    {
        return Err(ClassifierError::BadConfig("model classes overlap".into()));
    }
    let first = examples
        .first()
        .ok_or(ClassifierError::EmptyClass(classes[0]))?;
    let dim = first.features().len();
    let feature_config = config.feature_config;
    if !first.features().layout.is_empty() && first.features().layout != feature_config.layout() {
        return Err(ClassifierError::DimensionMismatch {
            expected: feature_config.dimension(),
            got: dim,
        });
    }

    // target[i] = index of the class covering example i
    let mut targets = Vec::with_capacity(examples.len());
    let mut per_class = vec![0usize; classes.len()];
    for ex in examples {
        let (fv, label) = (ex.features(), ex.label());
        if fv.len() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                got: fv.len(),
            });
        }
        let t = classes
            .iter()
            .position(|c| c.covers(label))
            .ok_or(ClassifierError::UncoveredLabel(label))?;
        per_class[t] += 1;
        targets.push(t);
    }
    if let Some(i) = per_class.iter().position(|&n| n == 0) {
        return Err(ClassifierError::EmptyClass(classes[i]));
    }

    let k = classes.len();
    let mut weights = vec![vec![0f64; dim]; k];
    let mut biases = vec![0f64; k];
    let mut grads = vec![vec![0f64; dim]; k];
    let mut grad_b = vec![0f64; k];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = vec![objective(examples, &targets, &weights, &biases, config.l2)];

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads
                .iter_mut()
                .for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            grad_b.iter_mut().for_each(|v| *v = 0.0);
            for &i in batch {
                let x = &examples[i].features().values;
                for c in 0..k {
                    let s = dot(&weights[c], x) + biases[c];
                    let y = (targets[i] == c) as u8 as f64;
                    let r = sigmoid(s) - y;
                    if r != 0.0 {
                        grads[c].iter_mut().zip(x).for_each(|(g, xv)| *g += r * xv);
                    }
                    grad_b[c] += r;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for c in 0..k {
                let lr = config.learning_rate;
                weights[c]
                    .iter_mut()
                    .zip(&grads[c])
                    .for_each(|(w, g)| *w -= lr * (g * scale + config.l2 * *w));
                biases[c] -= lr * grad_b[c] * scale;
            }
        }
        history.push(objective(examples, &targets, &weights, &biases, config.l2));
    }

    let model = LinearModel {
        version: MODEL_VERSION,
        classes,
        feature_config,
        weights,
        biases,
        train_meta: TrainMeta {
            seed,
            epochs: config.epochs,
            learning_rate: config.learning_rate,
            l2: config.l2,
            batch_size: config.batch_size,
        },
    };
    Ok((model, history))
}

/// Sum over classes of mean logistic loss plus `l2/2 ‖w‖²`.
fn objective<E: Example>(
    examples: &[E],
    targets: &[usize],
    weights: &[Vec<f64>],
    biases: &[f64],
    l2: f64,
) -> f64 {
    let n = examples.len() as f64;
    let mut total = 0.0;
    for (c, (w, b)) in weights.iter().zip(biases).enumerate() {
        let data: f64 = examples
            .iter()
            .zip(targets)
            .map(|(ex, &t)| log_loss(dot(w, &ex.features().values) + b, (t == c) as u8 as f64))
            .sum();
        total += data / n + 0.5 * l2 * dot(w, w);
    }
    total
}

pub fn save_model(model: &LinearModel, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
    let mut bytes =
        serde_json::to_vec(model).map_err(|e| ClassifierError::SchemaMismatch(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearModel, ClassifierError> {
    let text = fs::read_to_string(path)?;
    model_from_json(&text)
}

pub(crate) fn model_from_value(value: serde_json::Value) -> Result<LinearModel, ClassifierError> {
    match value.get("version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == MODEL_VERSION as u64 => {}
        Some(v) => {
            return Err(ClassifierError::SchemaMismatch(format!(
                "unsupported model version {v}"
            )))
        }
        None => {
            return Err(ClassifierError::SchemaMismatch(
                "missing field `version`".into(),
            ))
        }
    }
    let model: LinearModel = serde_json::from_value(value)
        .map_err(|e| ClassifierError::SchemaMismatch(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

pub(crate) fn model_from_json(text: &str) -> Result<LinearModel, ClassifierError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ClassifierError::SchemaMismatch(e.to_string()))?;
    model_from_value(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn raw(values: Vec<f64>) -> FeatureVector {
        FeatureVector {
            values,
            layout: Vec::new(),
        }
    }

    fn blobs(seed: u64, n: usize) -> Vec<(FeatureVector, ClassLabel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.15).unwrap();
        (0..n)
            .map(|i| {
                let (label, center) = if i % 2 == 0 {
                    (ClassLabel::NoScreen, [0.8, 0.2])
                } else {
                    (ClassLabel::Gmail, [0.2, 0.8])
                };
                let v = vec![
                    center[0] + noise.sample(&mut rng),
                    center[1] + noise.sample(&mut rng),
                ];
                (raw(v), label)
            })
            .collect()
    }

    const BINARY: [ModelClass; 2] = [ModelClass::NoScreen, ModelClass::Screen];

    #[test]
    fn separable_blobs() {
        let data = blobs(1, 200);
        let cfg = TrainConfig {
            epochs: 60,
            ..Default::default()
        };
        let model = train(&data, &BINARY, &cfg, 7).unwrap();
        let correct = data
            .iter()
            .filter(|(fv, l)| model.predict(fv).unwrap().0.covers(*l))
            .count();
        assert!(
            correct as f64 / 200.0 >= 0.99,
            "accuracy {}",
            correct as f64 / 200.0
        );
    }

    #[test]
    fn one_hot_points() {
        let mut data = Vec::new();
        for (i, label) in ClassLabel::ALL.iter().enumerate() {
            let mut v = vec![0.0; 5];
            v[i] = 1.0;
            data.push((raw(v.clone()), *label));
            data.push((raw(v), *label));
        }
        let classes: Vec<ModelClass> = ClassLabel::ALL.iter().map(|&l| l.into()).collect();
        let model = train(&data, &classes, &TrainConfig::default(), 0).unwrap();
        for (fv, l) in &data {
            assert_eq!(model.predict(fv).unwrap().0, ModelClass::from(*l));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let data = blobs(3, 64);
        let a = train(&data, &BINARY, &TrainConfig::default(), 11).unwrap();
        let b = train(&data, &BINARY, &TrainConfig::default(), 11).unwrap();
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
    }

    #[test]
    fn objective_never_increases() {
        let data = blobs(5, 200);
        let (_, history) = train_with_history(&data, &BINARY, &TrainConfig::default(), 2).unwrap();
        for pair in history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-6, "{history:?}");
        }
    }

    #[test]
    fn error_paths() {
        let data = blobs(1, 10);
        let only_gmail: Vec<_> = data
            .iter()
            .filter(|(_, l)| *l == ClassLabel::Gmail)
            .cloned()
            .collect();
        assert!(matches!(
            train(&only_gmail, &BINARY, &TrainConfig::default(), 0),
            Err(ClassifierError::EmptyClass(ModelClass::NoScreen))
        ));
        let mut bad = data.clone();
        bad.push((raw(vec![1.0]), ClassLabel::Gmail));
        assert!(matches!(
            train(&bad, &BINARY, &TrainConfig::default(), 0),
            Err(ClassifierError::DimensionMismatch { .. })
        ));
        let apps = [ModelClass::Gmail, ModelClass::Facebook];
        assert!(matches!(
            train(&data, &apps, &TrainConfig::default(), 0),
            Err(ClassifierError::UncoveredLabel(ClassLabel::NoScreen))
        ));
    }

    #[test]
    fn zero_model_is_uniform_and_tie_breaks_first() {
        let classes: Vec<ModelClass> = ClassLabel::ALL.iter().map(|&l| l.into()).collect();
        let model = LinearModel::zeros(&classes, FeatureConfig::default(), 4);
        let fv = raw(vec![0.3, 0.1, 0.0, 0.9]);
        let p = model.predict_proba(&fv).unwrap();
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
        assert_eq!(model.predict(&fv).unwrap().0, ModelClass::NoScreen);
        assert!(matches!(
            model.predict_proba(&raw(vec![1.0])),
            Err(ClassifierError::DimensionMismatch {
                expected: 4,
                got: 1
            })
        ));
    }

    #[test]
    fn softmax_shift_invariance() {
        let s = [0.5, -1.0, 3.0];
        let shifted: Vec<f64> = s.iter().map(|v| v + 123.0).collect();
        for (a, b) in softmax(&s).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn schema_errors() {
        let model = LinearModel::zeros(&BINARY, FeatureConfig::default(), 3);
        let mut v = serde_json::to_value(&model).unwrap();
        v.as_object_mut().unwrap().remove("classes");
        assert!(matches!(
            model_from_value(v),
            Err(ClassifierError::SchemaMismatch(_))
        ));
        let mut v = serde_json::to_value(&model).unwrap();
        v["version"] = 2.into();
        assert!(matches!(
            model_from_value(v),
            Err(ClassifierError::SchemaMismatch(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn probabilities_sum_to_one(seed in any::<u64>(), k in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let all = [ModelClass::NoScreen, ModelClass::OtherApp, ModelClass::Messenger, ModelClass::Facebook, ModelClass::Gmail];
            let mut model = LinearModel::zeros(&all[..k], FeatureConfig::default(), 6);
            for w in model.weights.iter_mut() {
                w.iter_mut().for_each(|v| *v = rng.random_range(-20.0..20.0));
            }
            model.biases.iter_mut().for_each(|b| *b = rng.random_range(-5.0..5.0));
            let fv = raw((0..6).map(|_| rng.random_range(-1.0..1.0)).collect());
            let p = model.predict_proba(&fv).unwrap();
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn json_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut model = LinearModel::zeros(&BINARY, FeatureConfig::default(), 8);
            for w in model.weights.iter_mut() {
                w.iter_mut().for_each(|v| *v = rng.random::<f64>() * 1e3 - 5e2);
            }
            model.biases = vec![rng.random(), -rng.random::<f64>()];
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            save_model(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            prop_assert_eq!(&loaded, &model);
            let fv = raw((0..8).map(|_| rng.random()).collect());
            prop_assert_eq!(loaded.predict_proba(&fv).unwrap(), model.predict_proba(&fv).unwrap());
        }
    }
}
