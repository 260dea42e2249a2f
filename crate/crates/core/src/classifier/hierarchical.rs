use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::linear::{argmax, model_from_value};
use super::{ClassLabel, ClassifierError, LinearModel, ModelClass, MODEL_VERSION};
use crate::features::{extract, FeatureVector};
use crate::imaging::{preprocess, Image};

pub const DEFAULT_SCREEN_THRESHOLD: f64 = 0.5;

/// Screen gate probabilities are kept strictly inside (0, 1) so that
/// thresholds 0 and 1 always mean "always screen" and "never screen".
const GATE_EPSILON: f64 = 1e-12;

/// Two-stage classifier: a binary screen detector followed by a 4-way
/// application model that only runs its decision when a screen is declared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalClassifier {
    pub screen_model: LinearModel,
    pub app_model: LinearModel,
    pub screen_threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchicalOutcome {
    pub label: ClassLabel,
    pub confidence: f64,
    /// Gate probability P(screen), clamped into (0, 1).
    pub p_screen: f64,
    /// Screen-stage distribution in `screen_model.classes` order.
    pub screen_probs: Vec<f64>,
    /// Application-stage distribution in `app_model.classes` order.
    pub app_probs: Vec<f64>,
}

impl HierarchicalOutcome {
    /// Joint distribution over the five labels in canonical order:
    /// `[1 − P(screen), P(screen)·P(app | screen) …]`.
    pub fn label_probabilities(&self, app_classes: &[ModelClass]) -> [f64; 5] {
        let mut out = [0.0; 5];
        out[0] = 1.0 - self.p_screen;
        for (class, p) in app_classes.iter().zip(&self.app_probs) {
            if let Some(label) = class.label() {
                out[label.index()] = self.p_screen * p;
            }
        }
        out
    }
}

impl HierarchicalClassifier {
    pub fn new(
        screen_model: LinearModel,
        app_model: LinearModel,
        screen_threshold: f64,
    ) -> Result<Self, ClassifierError> {
        let h = Self {
            screen_model,
            app_model,
            screen_threshold,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        self.screen_model.validate()?;
        self.app_model.validate()?;
        if self.screen_model.classes != [ModelClass::NoScreen, ModelClass::Screen] {
            return Err(ClassifierError::SchemaMismatch(
                "screen model must have classes [noscreen, screen]".into(),
            ));
        }
        let apps: Vec<ModelClass> = ClassLabel::SCREEN.iter().map(|&l| l.into()).collect();
        if self.app_model.classes != apps {
            return Err(ClassifierError::SchemaMismatch(
                "app model must have classes [other, messenger, facebook, gmail]".into(),
            ));
        }
        if self.screen_model.feature_config != self.app_model.feature_config
            || self.screen_model.dimension() != self.app_model.dimension()
        {
            return Err(ClassifierError::SchemaMismatch(
                "stage models use different features".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.screen_threshold) {
            return Err(ClassifierError::SchemaMismatch(
                "screen_threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.screen_threshold = threshold;
        self
    }

    /// Gate probability P(screen) for an already extracted feature vector.
    pub fn screen_probability(&self, fv: &FeatureVector) -> Result<f64, ClassifierError> {
        let p = self.screen_model.predict_proba(fv)?;
        Ok(gate_probability(p[0]))
    }

    pub fn classify(&self, image: &Image) -> Result<HierarchicalOutcome, ClassifierError> {
        let fv = extract(&preprocess(image), &self.screen_model.feature_config)?;
        self.classify_features(&fv)
    }

    pub fn classify_features(
        &self,
        fv: &FeatureVector,
    ) -> Result<HierarchicalOutcome, ClassifierError> {
        let screen_probs = self.screen_model.predict_proba(fv)?;
        let app_probs = self.app_model.predict_proba(fv)?;
        let p_screen = gate_probability(screen_probs[0]);
        let (label, confidence) = if p_screen < self.screen_threshold {
            (ClassLabel::NoScreen, 1.0 - p_screen)
        } else {
            let i = argmax(&app_probs);
            let label = self.app_model.classes[i]
                .label()
                .expect("app classes are single labels");
            (label, p_screen * app_probs[i])
        };
        Ok(HierarchicalOutcome {
            label,
            confidence,
            p_screen,
            screen_probs,
            app_probs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let doc = serde_json::json!({
            "version": MODEL_VERSION,
            "kind": "hierarchical",
            "screen_threshold": self.screen_threshold,
            "screen_model": self.screen_model,
            "app_model": self.app_model,
        });
        let mut bytes =
            serde_json::to_vec(&doc).map_err(|e| ClassifierError::SchemaMismatch(e.to_string()))?;
        bytes.push(b'\n');
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ClassifierError::SchemaMismatch(e.to_string()))?;
        Self::from_value(value)
    }

    pub(crate) fn from_value(mut value: serde_json::Value) -> Result<Self, ClassifierError> {
        if value.get("version").and_then(serde_json::Value::as_u64) != Some(MODEL_VERSION as u64) {
            return Err(ClassifierError::SchemaMismatch(
                "unsupported or missing version".into(),
            ));
        }
        let mut take = |key: &str| {
            value
                .get_mut(key)
                .map(serde_json::Value::take)
                .ok_or_else(|| ClassifierError::SchemaMismatch(format!("missing field `{key}`")))
        };
        let threshold = take("screen_threshold")?.as_f64().ok_or_else(|| {
            ClassifierError::SchemaMismatch("screen_threshold must be a number".into())
        })?;
        let screen_model = model_from_value(take("screen_model")?)?;
        let app_model = model_from_value(take("app_model")?)?;
        Self::new(screen_model, app_model, threshold)
    }
}

fn gate_probability(p_noscreen: f64) -> f64 {
    (1.0 - p_noscreen).clamp(GATE_EPSILON, 1.0 - GATE_EPSILON)
}

/// Argmax of a flat 5-way model. Ties go to the earliest label.
pub fn classify_flat(
    model: &LinearModel,
    image: &Image,
) -> Result<(ClassLabel, f64), ClassifierError> {
    check_flat(model)?;
    let fv = extract(&preprocess(image), &model.feature_config)?;
    let (class, p) = model.predict(&fv)?;
    Ok((class.label().expect("flat model classes are labels"), p))
}

pub(crate) fn check_flat(model: &LinearModel) -> Result<(), ClassifierError> {
    let expected: Vec<ModelClass> = ClassLabel::ALL.iter().map(|&l| l.into()).collect();
    if model.classes != expected {
        return Err(ClassifierError::SchemaMismatch(
            "flat model must cover exactly the five labels".into(),
        ));
    }
    Ok(())
}

/// Either kind of model file the CLI accepts for classification.
#[derive(Clone, Debug)]
pub enum Classifier {
    Flat(LinearModel),
    Hierarchical(HierarchicalClassifier),
}

impl Classifier {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ClassifierError::SchemaMismatch(e.to_string()))?;
        if value.get("kind").and_then(serde_json::Value::as_str) == Some("hierarchical") {
            return HierarchicalClassifier::from_value(value).map(Classifier::Hierarchical);
        }
        let model = model_from_value(value)?;
        check_flat(&model)?;
        Ok(Classifier::Flat(model))
    }

    pub fn feature_config(&self) -> &crate::features::FeatureConfig {
        match self {
            Classifier::Flat(m) => &m.feature_config,
            Classifier::Hierarchical(h) => &h.screen_model.feature_config,
        }
    }

    /// Five-label distribution in canonical order.
    pub fn label_probabilities(&self, fv: &FeatureVector) -> Result<[f64; 5], ClassifierError> {
        match self {
            Classifier::Flat(m) => {
                let p = m.predict_proba(fv)?;
                Ok([p[0], p[1], p[2], p[3], p[4]])
            }
            Classifier::Hierarchical(h) => Ok(h
                .classify_features(fv)?
                .label_probabilities(&h.app_model.classes)),
        }
    }
}
