use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The closed five-class taxonomy, in the fixed order used for tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    NoScreen,
    #[serde(rename = "other")]
    OtherApp,
    Messenger,
    Facebook,
    Gmail,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::NoScreen,
        ClassLabel::OtherApp,
        ClassLabel::Messenger,
        ClassLabel::Facebook,
        ClassLabel::Gmail,
    ];
    pub const SCREEN: [ClassLabel; 4] = [
        ClassLabel::OtherApp,
        ClassLabel::Messenger,
        ClassLabel::Facebook,
        ClassLabel::Gmail,
    ];
    pub const SENSITIVE: [ClassLabel; 3] = [
        ClassLabel::Messenger,
        ClassLabel::Facebook,
        ClassLabel::Gmail,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::NoScreen => "noscreen",
            ClassLabel::OtherApp => "other",
            ClassLabel::Messenger => "messenger",
            ClassLabel::Facebook => "facebook",
            ClassLabel::Gmail => "gmail",
        }
    }

    pub fn is_screen(self) -> bool {
        self != ClassLabel::NoScreen
    }

    pub fn is_sensitive(self) -> bool {
        Self::SENSITIVE.contains(&self)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noscreen" | "no-screen" | "no_screen" | "none" => Ok(ClassLabel::NoScreen),
            "other" | "otherapp" | "other-app" => Ok(ClassLabel::OtherApp),
            "messenger" => Ok(ClassLabel::Messenger),
            "facebook" => Ok(ClassLabel::Facebook),
            "gmail" => Ok(ClassLabel::Gmail),
            other => Err(format!("unknown class label '{other}'")),
        }
    }
}

/// A class a model predicts: a single label or the `screen` group covering
/// every label except `noscreen`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelClass {
    NoScreen,
    Screen,
    #[serde(rename = "other")]
    OtherApp,
    Messenger,
    Facebook,
    Gmail,
}

impl ModelClass {
    pub fn covers(self, label: ClassLabel) -> bool {
        match self {
            ModelClass::Screen => label.is_screen(),
            other => other.label() == Some(label),
        }
    }

    /// The single label this class stands for, if it is not a group.
    pub fn label(self) -> Option<ClassLabel> {
        match self {
            ModelClass::NoScreen => Some(ClassLabel::NoScreen),
            ModelClass::Screen => None,
            ModelClass::OtherApp => Some(ClassLabel::OtherApp),
            ModelClass::Messenger => Some(ClassLabel::Messenger),
            ModelClass::Facebook => Some(ClassLabel::Facebook),
            ModelClass::Gmail => Some(ClassLabel::Gmail),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelClass::Screen => "screen",
            other => other.label().expect("non-group").as_str(),
        }
    }
}

impl From<ClassLabel> for ModelClass {
    fn from(label: ClassLabel) -> Self {
        match label {
            ClassLabel::NoScreen => ModelClass::NoScreen,
            ClassLabel::OtherApp => ModelClass::OtherApp,
            ClassLabel::Messenger => ModelClass::Messenger,
            ClassLabel::Facebook => ModelClass::Facebook,
            ClassLabel::Gmail => ModelClass::Gmail,
        }
    }
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("screen") {
            return Ok(ModelClass::Screen);
        }
        s.parse::<ClassLabel>().map(ModelClass::from)
    }
}
