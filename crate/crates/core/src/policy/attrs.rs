use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::classifier::{ClassLabel, ScoredRecord};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeSource {
    #[default]
    Classifier,
    External,
    Tag,
}

/// What is known about one image when a policy is evaluated.
///
/// Each confidence is the probability of the stated value: `screen_confidence`
/// is P(screen) when `has_screen` and 1 − P(screen) otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageAttributes {
    pub path: String,
    pub has_screen: bool,
    pub screen_confidence: f64,
    pub app: ClassLabel,
    pub app_confidence: f64,
    /// Active apps from a decoded ScreenTag; `None` when no tag was read.
    pub tag: Option<Vec<String>>,
    pub source: AttributeSource,
}

impl ImageAttributes {
    /// Attributes for an image whose app label alone is known with certainty.
    pub fn labeled(path: impl Into<String>, app: ClassLabel) -> Self {
        Self {
            path: path.into(),
            has_screen: app.is_screen(),
            screen_confidence: 1.0,
            app,
            app_confidence: 1.0,
            tag: None,
            source: AttributeSource::Classifier,
        }
    }

    pub fn with_tag<S: AsRef<str>>(mut self, active: &[S]) -> Self {
        self.tag = Some(active.iter().map(|s| s.as_ref().to_string()).collect());
        self
    }

    /// Applies the screen gate at `threshold` to a scored five-label row.
    pub fn from_scores(record: &ScoredRecord, threshold: f64, source: AttributeSource) -> Self {
        let (app, app_confidence) = record.decide(threshold);
        let p_screen = record.p_screen().clamp(0.0, 1.0);
        let has_screen = app.is_screen();
        Self {
            path: record.path.clone(),
            has_screen,
            screen_confidence: if has_screen { p_screen } else { 1.0 - p_screen },
            app,
            app_confidence: app_confidence.clamp(0.0, 1.0),
            tag: None,
            source,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        for (name, c) in [
            ("screen", self.screen_confidence),
            ("app", self.app_confidence),
        ] {
            if !(0.0..=1.0).contains(&c) {
                return Err(PolicyError::InvalidAttributes(format!(
                    "{}: {name} confidence {c} outside [0, 1]",
                    self.path
                )));
            }
        }
        if self.app.is_screen() && !self.has_screen {
            return Err(PolicyError::InvalidAttributes(format!(
                "{}: app '{}' without a screen",
                self.path, self.app
            )));
        }
        Ok(())
    }
}
