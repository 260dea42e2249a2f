use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ast::{Action, Comparison, ConfidenceSubject, Expr, Policy, Target, Term};
use super::attrs::ImageAttributes;
use super::PolicyError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetDecision {
    pub verdict: Action,
    /// Deciding rule id; `None` when the default applied.
    pub matched_rule: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationDecision {
    pub path: String,
    /// Indexed by `Target::index`.
    pub targets: [TargetDecision; 3],
    /// Some target fell through to its default.
    pub default_applied: bool,
}

impl CurationDecision {
    pub fn get(&self, target: Target) -> TargetDecision {
        self.targets[target.index()]
    }

    pub fn verdict(&self, target: Target) -> Action {
        self.get(target).verdict
    }
}

fn term_matches(term: &Term, a: &ImageAttributes) -> bool {
    match term {
        Term::Screen => a.has_screen,
        Term::AppIs(l) => a.app == *l,
        Term::AppIn(ls) => ls.contains(&a.app),
        Term::TagPresent => a.tag.is_some(),
        Term::TagHas(app) => a.tag.as_ref().is_some_and(|t| t.iter().any(|x| x == app)),
        Term::Confidence {
            subject,
            comparison,
            value,
        } => {
            let c = match subject {
                ConfidenceSubject::Screen => a.screen_confidence,
                ConfidenceSubject::App => a.app_confidence,
            };
            match comparison {
                Comparison::AtLeast => c >= *value,
                Comparison::Below => c < *value,
            }
        }
    }
}

fn matches(e: &Expr, a: &ImageAttributes) -> bool {
    match e {
        Expr::Term(t) => term_matches(t, a),
        Expr::Not(x) => !matches(x, a),
        Expr::And(x, y) => matches(x, a) && matches(y, a),
        Expr::Or(x, y) => matches(x, a) || matches(y, a),
    }
}

/// Decides every target for one image.
pub fn evaluate(policy: &Policy, attrs: &ImageAttributes) -> CurationDecision {
    let decide = |target: Target| {
        policy
            .rules
            .iter()
            .filter(|r| r.target == target && matches(&r.condition, attrs))
            // highest priority, then lowest id
            .max_by(|x, y| {
                x.effective_priority()
                    .cmp(&y.effective_priority())
                    .then(y.id.cmp(&x.id))
            })
            .map_or(
                TargetDecision {
                    verdict: policy.default_for(target),
                    matched_rule: None,
                },
                |r| TargetDecision {
                    verdict: r.action,
                    matched_rule: Some(r.id),
                },
            )
    };
    let targets = Target::ALL.map(decide);
    CurationDecision {
        path: attrs.path.clone(),
        default_applied: targets.iter().any(|t| t.matched_rule.is_none()),
        targets,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurationStats {
    pub total: usize,
    /// Fraction of records denied, indexed by `Target::index`.
    pub deny_fraction: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurationWarning {
    /// Share denials exceed the declared discard budget; advisory only.
    BudgetExceeded { deny_fraction: f64, budget: f64 },
}

impl std::fmt::Display for CurationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurationWarning::BudgetExceeded {
                deny_fraction,
                budget,
            } => write!(
                f,
                "share deny fraction {deny_fraction:.3} exceeds the discard budget {budget:.3}"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub decisions: Vec<CurationDecision>,
    pub stats: CurationStats,
    pub warnings: Vec<CurationWarning>,
}

/// Evaluates every record; decisions keep record order.
pub fn curate(policy: &Policy, records: &[ImageAttributes]) -> Result<CurationReport, PolicyError> {
    for r in records {
        r.validate()?;
    }
    let decisions: Vec<CurationDecision> =
        records.par_iter().map(|r| evaluate(policy, r)).collect();
    let total = decisions.len();
    let deny_fraction = Target::ALL.map(|t| {
        if total == 0 {
            return 0.0;
        }
        decisions
            .iter()
            .filter(|d| d.verdict(t) == Action::Deny)
            .count() as f64
            / total as f64
    });
    let mut warnings = Vec::new();
    if let Some(budget) = policy.discard_budget {
        let share = deny_fraction[Target::Share.index()];
        if share > budget {
            log::info!("share deny fraction {share:.3} exceeds discard budget {budget}");
            warnings.push(CurationWarning::BudgetExceeded {
                deny_fraction: share,
                budget,
            });
        }
    }
    Ok(CurationReport {
        decisions,
        stats: CurationStats {
            total,
            deny_fraction,
        },
        warnings,
    })
}

pub const DECISIONS_HEADER: [&str; 8] = [
    "path",
    "share",
    "upload",
    "retain",
    "matched_rule_share",
    "matched_rule_upload",
    "matched_rule_retain",
    "default_applied",
];

/// Writes the decisions CSV; a default verdict leaves its rule column empty.
pub fn write_decisions(
    decisions: &[CurationDecision],
    writer: impl Write,
) -> Result<(), PolicyError> {
    let io = |e: csv::Error| PolicyError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DECISIONS_HEADER).map_err(io)?;
    for d in decisions {
        let rule = |t: Target| {
            d.get(t)
                .matched_rule
                .map(|r| r.to_string())
                .unwrap_or_default()
        };
        w.write_record([
            d.path.clone(),
            d.verdict(Target::Share).to_string(),
            d.verdict(Target::Upload).to_string(),
            d.verdict(Target::Retain).to_string(),
            rule(Target::Share),
            rule(Target::Upload),
            rule(Target::Retain),
            d.default_applied.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| PolicyError::Io(e.to_string()))
}
