//! Roster loading and top-k sample selection.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Category, SkillDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roster {
    pub skills: Vec<SkillDescriptor>,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RosterFormat {
    Csv,
    Json,
}

impl RosterFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(RosterFormat::Csv),
            "json" => Some(RosterFormat::Json),
            _ => None,
        }
    }
}

pub const CSV_COLUMNS: [&str; 8] = [
    "id",
    "display_name",
    "invocation_name",
    "category",
    "subcategory",
    "review_count",
    "avg_rating",
    "excluded_reason",
];

#[derive(Debug, Deserialize)]
struct RosterRow {
    id: String,
    #[serde(default)]
    display_name: Option<String>,
    invocation_name: String,
    category: String,
    #[serde(default)]
    subcategory: Option<String>,
    review_count: i64,
    #[serde(default)]
    avg_rating: Option<f64>,
    #[serde(default)]
    excluded_reason: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

impl RosterRow {
    fn into_descriptor(self) -> Result<SkillDescriptor> {
        if self.review_count < 0 {
            return Err(Error::validation("review_count", format!("{} is negative", self.review_count)));
        }
        let id = self.id.trim().to_string();
        let skill = SkillDescriptor {
            display_name: non_empty(self.display_name).unwrap_or_else(|| id.clone()),
            id,
            invocation_name: self.invocation_name.trim().to_string(),
            category: self.category.parse()?,
            subcategory: non_empty(self.subcategory),
            review_count: self.review_count as u64,
            avg_rating: self.avg_rating,
            excluded_reason: non_empty(self.excluded_reason),
        };
        skill.validate()?;
        Ok(skill)
    }
}

fn row_error(path: &Path, row: usize, err: impl std::fmt::Display) -> Error {
    Error::Parse { path: path.to_path_buf(), row, message: err.to_string() }
}

/// Loads and validates a roster. Rows are numbered from 1, excluding the
/// CSV header.
pub fn load_roster(path: &Path, format: RosterFormat) -> Result<Roster> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<(usize, RosterRow)> = match format {
        RosterFormat::Csv => parse_csv_rows(path, &bytes)?,
        RosterFormat::Json => {
            if bytes.iter().all(u8::is_ascii_whitespace) {
                Vec::new()
            } else {
                let values: Vec<serde_json::Value> =
                    serde_json::from_slice(&bytes).map_err(|e| row_error(path, 0, e))?;
                values
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| serde_json::from_value(v).map(|r| (i + 1, r)).map_err(|e| row_error(path, i + 1, e)))
                    .collect::<Result<_>>()?
            }
        }
    };

    let mut seen = HashSet::new();
    let mut skills = Vec::with_capacity(rows.len());
    for (row, raw) in rows {
        let skill = raw.into_descriptor().map_err(|e| row_error(path, row, e))?;
        if !seen.insert(skill.id.clone()) {
            return Err(row_error(path, row, Error::validation("id", format!("duplicate id {:?}", skill.id))));
        }
        skills.push(skill);
    }
    Ok(Roster { skills, source: path.display().to_string() })
}

fn parse_csv_rows(path: &Path, bytes: &[u8]) -> Result<Vec<(usize, RosterRow)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<RosterRow>().enumerate() {
        rows.push((i + 1, record.map_err(|e| row_error(path, i + 1, e))?));
    }
    Ok(rows)
}

impl Roster {
    pub fn new(skills: Vec<SkillDescriptor>, source: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &skills {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::validation("id", format!("duplicate id {:?}", s.id)));
            }
        }
        Ok(Roster { skills, source: source.into() })
    }

    pub fn get(&self, id: &str) -> Option<&SkillDescriptor> {
        self.skills.iter().find(|s| s.id == id)
    }

    pub fn included(&self) -> impl Iterator<Item = &SkillDescriptor> {
        self.skills.iter().filter(|s| !s.is_excluded())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::io(PathBuf::from(path), e.into());
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for s in &self.skills {
            w.write_record([
                s.id.clone(),
                s.display_name.clone(),
                s.invocation_name.clone(),
                s.category.slug().to_string(),
                s.subcategory.clone().unwrap_or_default(),
                s.review_count.to_string(),
                s.avg_rating.map(|r| r.to_string()).unwrap_or_default(),
                s.excluded_reason.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

fn by_reviews(a: &SkillDescriptor, b: &SkillDescriptor) -> std::cmp::Ordering {
    b.review_count.cmp(&a.review_count).then_with(|| a.id.cmp(&b.id))
}

/// Picks up to `k` skills per category by review count, spreading slots
/// across subcategories round-robin.
///
/// Subcategories are visited in descending order of their best skill's
/// review count (ties by name), so with `m` subcategories the first `k % m`
/// get `⌈k/m⌉` slots and the rest `⌊k/m⌋`. Slots a small subcategory cannot
/// fill pass to the next one in the rotation. Output is ordered by category,
/// then review count descending, then id.
pub fn select_top(roster: &Roster, k: usize) -> Result<Roster> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let mut by_category: BTreeMap<Category, BTreeMap<String, Vec<&SkillDescriptor>>> = BTreeMap::new();
    for s in &roster.skills {
        by_category
            .entry(s.category)
            .or_default()
            .entry(s.subcategory.clone().unwrap_or_default())
            .or_default()
            .push(s);
    }

    let mut selected = Vec::new();
    for groups in by_category.into_values() {
        let mut groups: Vec<(String, Vec<&SkillDescriptor>)> = groups
            .into_iter()
            .map(|(name, mut skills)| {
                skills.sort_by(|a, b| by_reviews(a, b));
                (name, skills)
            })
            .collect();
        groups.sort_by(|(na, a), (nb, b)| b[0].review_count.cmp(&a[0].review_count).then_with(|| na.cmp(nb)));

        let total: usize = groups.iter().map(|(_, g)| g.len()).sum();
        let mut remaining = k.min(total);
        let mut taken = vec![0usize; groups.len()];
        while remaining > 0 {
            for (i, (_, g)) in groups.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                if taken[i] < g.len() {
                    taken[i] += 1;
                    remaining -= 1;
                }
            }
        }

        let mut picked: Vec<&SkillDescriptor> =
            groups.iter().zip(&taken).flat_map(|((_, g), &n)| g[..n].iter().copied()).collect();
        picked.sort_by(|a, b| by_reviews(a, b));
        selected.extend(picked.into_iter().cloned());
    }

    Ok(Roster { skills: selected, source: roster.source.clone() })
}
