use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::ClassLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Allow,
    Deny,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Allow => "allow",
            Action::Deny => "deny",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Share,
    Upload,
    Retain,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Share, Target::Upload, Target::Retain];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Share => "share",
            Target::Upload => "upload",
            Target::Retain => "retain",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    AtLeast,
    Below,
}

/// Which confidence a `confidence` term reads; fixed at parse time by the
/// nearest preceding `screen` or `app` term in the same rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfidenceSubject {
    Screen,
    App,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Screen,
    AppIs(ClassLabel),
    AppIn(Vec<ClassLabel>),
    TagPresent,
    TagHas(String),
    Confidence {
        subject: ConfidenceSubject,
        comparison: Comparison,
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Term(Term),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Declaration ordinal among rules, from 0.
    pub id: usize,
    pub action: Action,
    pub target: Target,
    pub condition: Expr,
    /// Explicit priority; absent means 0.
    pub priority: Option<i64>,
}

impl Rule {
    pub fn effective_priority(&self) -> i64 {
        self.priority.unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub rules: Vec<Rule>,
    pub defaults: BTreeMap<Target, Action>,
    /// Maximum acceptable fraction of share-denied images.
    pub discard_budget: Option<f64>,
}

impl Policy {
    /// Verdict when no rule matches; an undeclared default allows.
    pub fn default_for(&self, target: Target) -> Action {
        self.defaults.get(&target).copied().unwrap_or(Action::Allow)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Screen => f.write_str("screen"),
            Term::AppIs(l) => write!(f, "app == {l}"),
            Term::AppIn(ls) => {
                let names: Vec<&str> = ls.iter().map(|l| l.as_str()).collect();
                write!(f, "app in {{{}}}", names.join(", "))
            }
            Term::TagPresent => f.write_str("tag present"),
            Term::TagHas(app) => write!(f, "tag has {app}"),
            Term::Confidence {
                comparison, value, ..
            } => {
                let op = match comparison {
                    Comparison::AtLeast => ">=",
                    Comparison::Below => "<",
                };
                write!(f, "confidence {op} {value}")
            }
        }
    }
}

/// Binding strength used to decide where parentheses are needed.
fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 0,
        Expr::And(..) => 1,
        Expr::Not(_) | Expr::Term(_) => 2,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if strength(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Term(t) => write!(f, "{t}"),
            Expr::Not(e) => {
                f.write_str("not ")?;
                write_operand(f, e, 2)
            }
            // left-associative: a right operand of equal strength needs parentheses
            Expr::And(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" and ")?;
                write_operand(f, b, 2)
            }
            Expr::Or(a, b) => {
                write_operand(f, a, 0)?;
                f.write_str(" or ")?;
                write_operand(f, b, 1)
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} when {}", self.action, self.target, self.condition)?;
        if let Some(p) = self.priority {
            write!(f, " priority {p}")?;
        }
        Ok(())
    }
}

/// Canonical form: rules in declaration order, then defaults by target,
/// then the budget; one statement per line.
impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        for (t, a) in &self.defaults {
            writeln!(f, "default {a} {t}")?;
        }
        if let Some(b) = self.discard_budget {
            writeln!(f, "budget discard <= {b}")?;
        }
        Ok(())
    }
}
