//! Timestamp-ordered log replay.
//!
//! CSV layout (header required, column order free):
//!
//! ```text
//! timestamp,ctx_0,..,ctx_{p-1},cand0_0,..,cand0_{q-1},cand0_label,cand1_0,..,cand1_label,...
//! ```
//!
//! The feature vector of candidate `k` is the context features followed by
//! that candidate's features. Playing candidate `k` returns `cand<k>_label`;
//! the step's optimal expected reward is the row's largest label.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use super::{Environment, StepRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayRow {
    pub timestamp: f64,
    /// Full feature vector per candidate.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReplayEnvironment {
    rows: Vec<ReplayRow>,
    cursor: usize,
    feature_dim: usize,
    num_candidates: usize,
    pub warnings: Vec<String>,
}

struct Layout {
    timestamp: usize,
    ctx: Vec<usize>,
    /// Per candidate: feature columns and label column.
    cands: Vec<(Vec<usize>, usize)>,
}

fn parse_layout(header: &csv::StringRecord) -> Result<Layout> {
    let bad = |m: String| Error::Parse { line: 1, message: m };
    let mut timestamp = None;
    let mut ctx = BTreeMap::new();
    let mut feats: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == "timestamp" {
            timestamp = Some(col);
        } else if let Some(i) = name.strip_prefix("ctx_") {
            let i: usize = i.parse().map_err(|_| bad(format!("bad column name `{name}`")))?;
            ctx.insert(i, col);
        } else if let Some(rest) = name.strip_prefix("cand") {
            let (k, field) = rest.split_once('_').ok_or_else(|| bad(format!("bad column name `{name}`")))?;
            let k: usize = k.parse().map_err(|_| bad(format!("bad column name `{name}`")))?;
            if field == "label" {
                labels.insert(k, col);
            } else {
                let j: usize = field.parse().map_err(|_| bad(format!("bad column name `{name}`")))?;
                feats.entry(k).or_default().insert(j, col);
            }
        } else {
            return Err(bad(format!("unknown column `{name}`")));
        }
    }
    let timestamp = timestamp.ok_or_else(|| bad("missing `timestamp` column".into()))?;
    if labels.is_empty() {
        return Err(bad("no candidate label columns".into()));
    }
    let check_dense = |m: &BTreeMap<usize, usize>, what: &str| -> Result<Vec<usize>> {
        if m.keys().enumerate().any(|(i, &k)| i != k) {
            return Err(bad(format!("{what} indices are not contiguous from 0")));
        }
        Ok(m.values().copied().collect())
    };
    let ctx = check_dense(&ctx, "ctx")?;
    let label_cols = check_dense(&labels, "candidate")?;
    let mut cands = Vec::new();
    let mut width = None;
    for (k, label) in label_cols.into_iter().enumerate() {
        let cols = feats.get(&k).map(|m| check_dense(m, "candidate feature")).transpose()?.unwrap_or_default();
        if *width.get_or_insert(cols.len()) != cols.len() {
            return Err(bad("candidates have different feature counts".into()));
        }
        cands.push((cols, label));
    }
    if feats.keys().any(|k| *k >= cands.len()) {
        return Err(bad("candidate features without a label column".into()));
    }
    if ctx.is_empty() && width == Some(0) {
        return Err(bad("no feature columns".into()));
    }
    Ok(Layout { timestamp, ctx, cands })
}

impl ReplayEnvironment {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let layout = parse_layout(rdr.headers()?)?;
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
            if rec.len() != rdr_width(&layout) {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", rdr_width(&layout), rec.len()),
                });
            }
            let num = |col: usize| -> Result<f64> {
                let s = rec.get(col).unwrap_or("").trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, message: format!("field {} is not a finite number: `{s}`", col + 1) })
            };
            let timestamp = num(layout.timestamp)?;
            let ctx: Vec<f64> = layout.ctx.iter().map(|&c| num(c)).collect::<Result<_>>()?;
            let mut features = Vec::with_capacity(layout.cands.len());
            let mut labels = Vec::with_capacity(layout.cands.len());
            for (cols, label) in &layout.cands {
                let mut f = ctx.clone();
                for &c in cols {
                    f.push(num(c)?);
                }
                features.push(f);
                labels.push(num(*label)?);
            }
            rows.push(ReplayRow { timestamp, features, labels });
        }
        Self::from_rows(rows)
    }

    /// Rows are stably re-sorted by timestamp when out of order.
    pub fn from_rows(mut rows: Vec<ReplayRow>) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::EmptyInput("replay log has no rows".into()))?;
        let feature_dim = first.features.first().map_or(0, |f| f.len());
        let num_candidates = first.labels.len();
        if num_candidates == 0 || feature_dim == 0 {
            return Err(Error::param("replay rows need candidates with features"));
        }
        if rows.iter().any(|r| r.labels.len() != num_candidates || r.features.iter().any(|f| f.len() != feature_dim)) {
            return Err(Error::shape("replay rows disagree on candidate count or feature width"));
        }
        let mut warnings = Vec::new();
        if rows.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            warnings.push("timestamps are not monotone; rows were stably re-sorted".to_string());
            rows.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        }
        Ok(ReplayEnvironment { rows, cursor: 0, feature_dim, num_candidates, warnings })
    }

    pub fn rows(&self) -> &[ReplayRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn reset(&mut self) {
        self.cursor = 0;
    }
}

fn rdr_width(layout: &Layout) -> usize {
    1 + layout.ctx.len() + layout.cands.iter().map(|(c, _)| c.len() + 1).sum::<usize>()
}

impl Environment for ReplayEnvironment {
    fn num_actions(&self) -> usize {
        self.num_candidates
    }

    fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn t(&self) -> usize {
        self.cursor
    }

    fn context(&self) -> usize {
        self.cursor
    }

    fn action_features(&self, action: usize) -> &[f64] {
        let row = &self.rows[self.cursor.min(self.rows.len() - 1)];
        &row.features[action]
    }

    fn step(&mut self, action: usize) -> Result<StepRecord> {
        if self.cursor >= self.rows.len() {
            return Err(Error::EmptyInput("replay log exhausted".into()));
        }
        if action >= self.num_candidates {
            return Err(Error::InvalidAction { action, num_actions: self.num_candidates });
        }
        let row = &self.rows[self.cursor];
        let label = row.labels[action];
        let best = row.labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rec = StepRecord {
            t: self.cursor,
            context: self.cursor,
            action,
            reward: label,
            chosen_expected_reward: label,
            optimal_expected_reward: best,
        };
        self.cursor += 1;
        Ok(rec)
    }

    fn remaining(&self) -> Option<usize> {
        Some(self.rows.len() - self.cursor)
    }
}
