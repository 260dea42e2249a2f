use std::io::{Read, Write};
use std::path::Path;

use super::{ClassLabel, ClassifierError};

pub const SCORES_HEADER: [&str; 6] = [
    "path",
    "p_noscreen",
    "p_other",
    "p_messenger",
    "p_facebook",
    "p_gmail",
];

/// Rows whose probabilities sum this close to 1 are renormalized.
const SUM_TOLERANCE: f64 = 1e-3;

/// One row of a scores CSV: a five-label distribution for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredRecord {
    pub path: String,
    pub probs: [f64; 5],
}

impl ScoredRecord {
    pub fn p_screen(&self) -> f64 {
        1.0 - self.probs[0]
    }

    /// The same gate rule the hierarchical classifier applies: `noscreen`
    /// below `threshold`, otherwise the most probable application.
    pub fn decide(&self, threshold: f64) -> (ClassLabel, f64) {
        let p_screen = self.p_screen().clamp(1e-12, 1.0 - 1e-12);
        if p_screen < threshold {
            return (ClassLabel::NoScreen, 1.0 - p_screen);
        }
        let mut best = ClassLabel::SCREEN[0];
        for &label in &ClassLabel::SCREEN[1..] {
            if self.probs[label.index()] > self.probs[best.index()] {
                best = label;
            }
        }
        (best, self.probs[best.index()])
    }
}

/// Reads an externally produced scores CSV.
pub fn ingest_external_scores(
    path: impl AsRef<Path>,
) -> Result<Vec<ScoredRecord>, ClassifierError> {
    let file = std::fs::File::open(path)?;
    parse_scores(file)
}

pub fn parse_scores(reader: impl Read) -> Result<Vec<ScoredRecord>, ClassifierError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SCORES_HEADER {
        return Err(ClassifierError::BadRow {
            line: 1,
            reason: format!("expected header {}", SCORES_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row?;
        if row.len() != 6 {
            return Err(ClassifierError::BadRow {
                line,
                reason: format!("expected 6 fields, got {}", row.len()),
            });
        }
        let mut probs = [0f64; 5];
        for (slot, field) in probs.iter_mut().zip(row.iter().skip(1)) {
            let v: f64 = field.parse().map_err(|_| ClassifierError::BadRow {
                line,
                reason: format!("not a number: {field}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(ClassifierError::BadRow {
                    line,
                    reason: format!("negative or non-finite probability {v}"),
                });
            }
            *slot = v;
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ClassifierError::BadRow {
                line,
                reason: format!("probabilities sum to {sum}"),
            });
        }
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        out.push(ScoredRecord {
            path: row[0].to_string(),
            probs,
        });
    }
    Ok(out)
}

pub fn write_scores(records: &[ScoredRecord], writer: impl Write) -> Result<(), ClassifierError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCORES_HEADER)?;
    for r in records {
        let mut row = vec![r.path.clone()];
        row.extend(r.probs.iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
