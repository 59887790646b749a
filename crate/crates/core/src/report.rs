//! Aggregate compliance analyses over skill evaluations.
//!
//! Rates are exact fractions over the whole evaluated sample: skills coded
//! not_applicable or inconclusive stay in the denominator. A strict rate over
//! decided skills only is reported alongside.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::evaluator::SkillEvaluation;
use crate::ingestion::Roster;
use crate::model::{Category, FeatureGroup, GuidelineId, Verdict};

/// Non-negative exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u64>);

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::precondition("fraction with zero denominator"));
        }
        Ok(Fraction(Ratio::new(num, den)))
    }

    pub fn zero() -> Self {
        Fraction(Ratio::from_integer(0))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    /// Arithmetic mean; `None` for an empty slice.
    pub fn mean(values: &[Fraction]) -> Option<Fraction> {
        if values.is_empty() {
            return None;
        }
        let sum = values.iter().fold(Ratio::from_integer(0), |acc, v| acc + v.0);
        Some(Fraction(sum / values.len() as u64))
    }

    /// Decimal rendering rounded half-up, computed exactly.
    pub fn to_decimal(&self, places: u32) -> String {
        let scale = 10u128.pow(places);
        let num = u128::from(self.numer()) * scale;
        let den = u128::from(self.denom());
        let mut q = num / den;
        if 2 * (num % den) >= den {
            q += 1;
        }
        if places == 0 {
            return q.to_string();
        }
        format!("{}.{:0width$}", q / scale, q % scale, width = places as usize)
    }

    /// Percentage rendering, e.g. `78.7` for 74/94 at one place.
    pub fn to_percent(&self, places: u32) -> String {
        Fraction(self.0 * 100).to_decimal(places)
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(3))
    }
}

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    num: u64,
    den: u64,
    #[serde(default, skip_deserializing)]
    value: f64,
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let value = f64::from_str(&self.to_decimal(3)).unwrap_or_default();
        FractionRepr { num: self.numer(), den: self.denom(), value }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FractionRepr::deserialize(d)?;
        Fraction::new(repr.num, repr.den).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidelineStats {
    pub compliant: usize,
    pub non_compliant: usize,
    pub not_applicable: usize,
    pub inconclusive: usize,
    pub rate: Fraction,
    /// Compliant over decided skills; absent when none were decided.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_rate: Option<Fraction>,
    /// How many skills had each facet set.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub facets: BTreeMap<String, usize>,
}

impl GuidelineStats {
    pub fn total(&self) -> usize {
        self.compliant + self.non_compliant + self.not_applicable + self.inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub skills: usize,
    pub avg_guidelines_complied: Fraction,
    pub feature_group_rates: BTreeMap<FeatureGroup, Fraction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub total_skills: usize,
    pub one_shot_skills: usize,
    pub per_guideline: BTreeMap<GuidelineId, GuidelineStats>,
    pub guideline_ranking: Vec<GuidelineId>,
    pub per_category: BTreeMap<Category, CategoryStats>,
    pub category_ranking: Vec<Category>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_skills: Vec<String>,
}

impl ComplianceReport {
    pub fn check_invariants(&self) -> Result<()> {
        for (g, s) in &self.per_guideline {
            if s.total() != self.total_skills {
                return Err(Error::invariant(format!("{g}: counts sum to {} not {}", s.total(), self.total_skills)));
            }
            if s.rate.numer() > s.rate.denom() {
                return Err(Error::invariant(format!("{g}: rate above 1")));
            }
        }
        Ok(())
    }
}

fn count(evaluations: &[SkillEvaluation], g: GuidelineId, verdict: Verdict) -> usize {
    evaluations.iter().filter(|e| e.verdict(g) == verdict).count()
}

/// Compliant skills over all evaluated skills.
pub fn compliance_rate(evaluations: &[SkillEvaluation], g: GuidelineId) -> Result<Fraction> {
    if evaluations.is_empty() {
        return Err(Error::precondition("no evaluations to aggregate"));
    }
    Fraction::new(count(evaluations, g, Verdict::Compliant) as u64, evaluations.len() as u64)
}

pub fn guideline_stats(evaluations: &[SkillEvaluation], g: GuidelineId) -> Result<GuidelineStats> {
    let rate = compliance_rate(evaluations, g)?;
    let compliant = count(evaluations, g, Verdict::Compliant);
    let non_compliant = count(evaluations, g, Verdict::NonCompliant);
    let decided = (compliant + non_compliant) as u64;
    let mut facets = BTreeMap::new();
    for e in evaluations {
        if let Some(v) = e.verdicts.get(&g) {
            for (name, &set) in &v.facets {
                *facets.entry(name.clone()).or_insert(0) += usize::from(set);
            }
        }
    }
    Ok(GuidelineStats {
        compliant,
        non_compliant,
        not_applicable: count(evaluations, g, Verdict::NotApplicable),
        inconclusive: count(evaluations, g, Verdict::Inconclusive),
        rate,
        strict_rate: (decided > 0).then(|| Fraction::new(compliant as u64, decided)).transpose()?,
        facets,
    })
}

/// Descending by rate, ties by guideline number.
pub fn rank_guidelines(per_guideline: &BTreeMap<GuidelineId, GuidelineStats>) -> Vec<GuidelineId> {
    let mut ids: Vec<GuidelineId> = per_guideline.keys().copied().collect();
    ids.sort_by(|a, b| per_guideline[b].rate.cmp(&per_guideline[a].rate).then(a.number().cmp(&b.number())));
    ids
}

/// Per-category averages and the category ranking. Categories without
/// evaluated skills are left out.
pub fn category_summary(
    evaluations: &[SkillEvaluation],
    roster: &Roster,
) -> Result<(BTreeMap<Category, CategoryStats>, Vec<Category>)> {
    let mut grouped: BTreeMap<Category, Vec<&SkillEvaluation>> = BTreeMap::new();
    for e in evaluations {
        let skill = roster
            .get(&e.skill_id)
            .ok_or_else(|| Error::validation("skill_id", format!("{:?} is not in the roster", e.skill_id)))?;
        grouped.entry(skill.category).or_default().push(e);
    }
    let mut per_category = BTreeMap::new();
    for (category, evals) in grouped {
        let n = evals.len() as u64;
        let complied: u64 = evals.iter().map(|e| e.compliant_count() as u64).sum();
        let mut feature_group_rates = BTreeMap::new();
        for group in FeatureGroup::ALL {
            let rates = group
                .guidelines()
                .iter()
                .map(|g| Fraction::new(evals.iter().filter(|e| e.verdict(*g) == Verdict::Compliant).count() as u64, n))
                .collect::<Result<Vec<_>>>()?;
            feature_group_rates.insert(group, Fraction::mean(&rates).unwrap_or_else(Fraction::zero));
        }
        per_category.insert(
            category,
            CategoryStats {
                skills: evals.len(),
                avg_guidelines_complied: Fraction::new(complied, n)?,
                feature_group_rates,
            },
        );
    }
    let mut ranking: Vec<Category> = per_category.keys().copied().collect();
    ranking.sort_by(|a, b| {
        per_category[b]
            .avg_guidelines_complied
            .cmp(&per_category[a].avg_guidelines_complied)
            .then(a.display_name().cmp(b.display_name()))
    });
    Ok((per_category, ranking))
}

/// Full report. Skills excluded in the roster or listed in `excluded` are
/// dropped before any denominator is formed.
pub fn build_report(
    evaluations: &[SkillEvaluation],
    roster: &Roster,
    excluded: &BTreeSet<String>,
) -> Result<ComplianceReport> {
    let mut excluded_skills = BTreeSet::new();
    let kept: Vec<SkillEvaluation> = evaluations
        .iter()
        .filter(|e| {
            let out = excluded.contains(&e.skill_id) || roster.get(&e.skill_id).is_some_and(|s| s.is_excluded());
            if out {
                excluded_skills.insert(e.skill_id.clone());
            }
            !out
        })
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::precondition("no evaluations left to report on"));
    }
    let per_guideline =
        GuidelineId::ALL.iter().map(|&g| Ok((g, guideline_stats(&kept, g)?))).collect::<Result<BTreeMap<_, _>>>()?;
    let guideline_ranking = rank_guidelines(&per_guideline);
    let (per_category, category_ranking) = category_summary(&kept, roster)?;
    let report = ComplianceReport {
        total_skills: kept.len(),
        one_shot_skills: kept.iter().filter(|e| e.one_shot).count(),
        per_guideline,
        guideline_ranking,
        per_category,
        category_ranking,
        excluded_skills: excluded_skills.into_iter().collect(),
    };
    report.check_invariants()?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::validation("format", format!("unknown report format {other:?}"))),
        }
    }
}

pub fn emit_report(report: &ComplianceReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => crate::corpus::to_json(report),
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => Ok(emit_markdown(report)),
    }
}

fn csv_table(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).map_err(|e| Error::invariant(format!("csv output: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invariant(format!("csv output: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invariant(format!("csv output: {e}")))
}

fn emit_csv(report: &ComplianceReport) -> Result<String> {
    let mut guidelines = vec![[
        "guideline",
        "title",
        "feature_group",
        "compliant",
        "non_compliant",
        "not_applicable",
        "inconclusive",
        "total",
        "rate",
        "strict_rate",
        "goodbye_present",
    ]
    .map(String::from)
    .to_vec()];
    for (g, s) in &report.per_guideline {
        guidelines.push(vec![
            g.to_string(),
            g.title().to_string(),
            g.feature_group().label().to_string(),
            s.compliant.to_string(),
            s.non_compliant.to_string(),
            s.not_applicable.to_string(),
            s.inconclusive.to_string(),
            s.total().to_string(),
            s.rate.to_decimal(3),
            s.strict_rate.map(|r| r.to_decimal(3)).unwrap_or_default(),
            s.facets.get(crate::model::GOODBYE_FACET).map(ToString::to_string).unwrap_or_default(),
        ]);
    }

    let mut ranking = vec![vec!["rank".to_string(), "guideline".into(), "rate".into()]];
    for (i, g) in report.guideline_ranking.iter().enumerate() {
        ranking.push(vec![(i + 1).to_string(), g.to_string(), report.per_guideline[g].rate.to_decimal(3)]);
    }

    let mut header = vec!["category".to_string(), "skills".into(), "avg_guidelines_complied".into()];
    header.extend(FeatureGroup::ALL.iter().map(|f| format!("{}_rate", f.label())));
    let mut categories = vec![header];
    for c in &report.category_ranking {
        let s = &report.per_category[c];
        let mut row = vec![c.display_name().to_string(), s.skills.to_string(), s.avg_guidelines_complied.to_decimal(3)];
        row.extend(FeatureGroup::ALL.iter().map(|f| s.feature_group_rates[f].to_decimal(3)));
        categories.push(row);
    }

    let tables = [guidelines, ranking, categories].into_iter().map(csv_table).collect::<Result<Vec<_>>>()?;
    Ok(tables.join("\n"))
}

fn emit_markdown(report: &ComplianceReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Guideline compliance ({} skills)\n\n", report.total_skills));
    out.push_str("| Rank | Guideline | Feature | Compliant | Rate | Strict rate |\n");
    out.push_str("|---:|---|---|---:|---:|---:|\n");
    for (i, g) in report.guideline_ranking.iter().enumerate() {
        let s = &report.per_guideline[g];
        let strict = s.strict_rate.map(|r| format!("{}%", r.to_percent(1))).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "| {} | {g} {} | {} | {}/{} | {}% | {strict} |\n",
            i + 1,
            g.title(),
            g.feature_group().label(),
            s.compliant,
            s.total(),
            s.rate.to_percent(1),
        ));
    }
    if let Some(n) = report.per_guideline.get(&GuidelineId::G3).and_then(|s| s.facets.get(crate::model::GOODBYE_FACET))
    {
        out.push_str(&format!("\n{n} of {} skills said goodbye when stopped.\n", report.total_skills));
    }

    out.push_str("\n# Feature support by category\n\n| Category | Skills | Avg guidelines |");
    for f in FeatureGroup::ALL {
        out.push_str(&format!(" {} |", f.label()));
    }
    out.push_str("\n|---|---:|---:|");
    out.push_str(&"---:|".repeat(FeatureGroup::ALL.len()));
    out.push('\n');
    for c in &report.category_ranking {
        let s = &report.per_category[c];
        out.push_str(&format!("| {} | {} | {} |", c.display_name(), s.skills, s.avg_guidelines_complied.to_decimal(2)));
        for f in FeatureGroup::ALL {
            out.push_str(&format!(" {}% |", s.feature_group_rates[&f].to_percent(1)));
        }
        out.push('\n');
    }
    if !report.excluded_skills.is_empty() {
        out.push_str(&format!("\nExcluded: {}\n", report.excluded_skills.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Evidence, GuidelineVerdict, Probe, SessionRef, SkillDescriptor, GOODBYE_FACET};
    use proptest::prelude::*;

    fn eval(id: &str, compliant: &[GuidelineId]) -> SkillEvaluation {
        let ev = vec![Evidence { session: SessionRef { probe: Probe::VarietyRun, run_index: 1 }, turn: 0 }];
        let verdicts = GuidelineId::ALL
            .iter()
            .map(|&g| (g, GuidelineVerdict::new(g, Verdict::from_bool(compliant.contains(&g)), ev.clone())))
            .collect();
        SkillEvaluation { skill_id: id.into(), verdicts, one_shot: false }
    }

    fn roster(ids: &[(&str, Category)]) -> Roster {
        Roster::new(
            ids.iter()
                .map(|(id, c)| SkillDescriptor {
                    id: id.to_string(),
                    display_name: id.to_string(),
                    invocation_name: id.to_string(),
                    category: *c,
                    subcategory: None,
                    review_count: 1,
                    avg_rating: None,
                    excluded_reason: None,
                })
                .collect(),
            "t",
        )
        .unwrap()
    }

    #[test]
    fn fraction_rendering() {
        let r = Fraction::new(74, 94).unwrap();
        assert_eq!(r.to_decimal(3), "0.787");
        assert_eq!(r.to_percent(1), "78.7");
        assert_eq!(Fraction::new(94, 94).unwrap().to_decimal(3), "1.000");
        assert_eq!(Fraction::new(0, 5).unwrap().to_decimal(3), "0.000");
        assert_eq!(Fraction::new(1, 8).unwrap().to_decimal(2), "0.13");
        assert_eq!(Fraction::new(17, 2).unwrap().to_decimal(0), "9");
        assert!(Fraction::new(1, 0).is_err());
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"num":37,"den":47,"value":0.787}"#);
        assert_eq!(serde_json::from_str::<Fraction>(&json).unwrap(), r);
    }

    #[test]
    fn rates_and_errors() {
        let evals = vec![eval("a", &GuidelineId::ALL), eval("b", &[])];
        assert_eq!(compliance_rate(&evals, GuidelineId::G1).unwrap(), Fraction::new(1, 2).unwrap());
        assert!(compliance_rate(&[], GuidelineId::G1).is_err());
    }

    #[test]
    fn equal_rates_rank_by_number() {
        let evals = vec![eval("a", &[])];
        let stats = GuidelineId::ALL.iter().map(|&g| (g, guideline_stats(&evals, g).unwrap())).collect();
        assert_eq!(rank_guidelines(&stats), GuidelineId::ALL);
    }

    #[test]
    fn single_category_all_compliant() {
        let evals = vec![eval("a", &GuidelineId::ALL), eval("b", &GuidelineId::ALL)];
        let r = roster(&[("a", Category::Kids), ("b", Category::Kids)]);
        let (cats, ranking) = category_summary(&evals, &r).unwrap();
        assert_eq!(ranking, [Category::Kids]);
        assert_eq!(cats[&Category::Kids].avg_guidelines_complied.to_decimal(1), "8.0");
        assert!(cats[&Category::Kids].feature_group_rates.values().all(|f| f.to_decimal(3) == "1.000"));
        assert!(category_summary(&[eval("zzz", &[])], &r).is_err());
    }

    #[test]
    fn games_rank_first_when_most_compliant() {
        use GuidelineId::*;
        let evals = vec![
            eval("g1", &[G1, G2, G3, G4, G6, G7]),
            eval("g2", &[G1, G2, G3, G6, G8]),
            eval("n1", &[G1, G3]),
            eval("n2", &[G1, G2, G3]),
        ];
        let r = roster(&[
            ("g1", Category::GamesTriviaAccessories),
            ("g2", Category::GamesTriviaAccessories),
            ("n1", Category::DailyActivities),
            ("n2", Category::DailyActivities),
        ]);
        let report = build_report(&evals, &r, &BTreeSet::new()).unwrap();
        assert_eq!(report.category_ranking[0], Category::GamesTriviaAccessories);
        assert!(!report.per_category.contains_key(&Category::Kids));
        let csv = emit_report(&report, ReportFormat::Csv).unwrap();
        assert!(!csv.contains("Kids"));
    }

    #[test]
    fn exclusions_leave_the_denominator() {
        let evals = vec![eval("a", &GuidelineId::ALL), eval("b", &[]), eval("c", &[])];
        let mut r = roster(&[("a", Category::Kids), ("b", Category::Kids), ("c", Category::Kids)]);
        r.skills[2].excluded_reason = Some("account linking".into());
        let report = build_report(&evals, &r, &BTreeSet::from(["b".to_string()])).unwrap();
        assert_eq!(report.total_skills, 1);
        assert_eq!(report.excluded_skills, ["b", "c"]);
    }

    #[test]
    fn emitted_formats_are_stable() {
        let mut a = eval("a", &[GuidelineId::G1, GuidelineId::G3]);
        a.verdicts.get_mut(&GuidelineId::G3).unwrap().facets.insert(GOODBYE_FACET.into(), true);
        let evals = vec![a, eval("b", &[GuidelineId::G1])];
        let r = roster(&[("a", Category::Kids), ("b", Category::DailyActivities)]);
        let report = build_report(&evals, &r, &BTreeSet::new()).unwrap();
        for f in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown] {
            assert_eq!(emit_report(&report, f).unwrap(), emit_report(&report, f).unwrap());
        }
        let csv = emit_report(&report, ReportFormat::Csv).unwrap();
        assert_eq!(csv.split("\n\n").count(), 3);
        assert!(csv.contains("G3,"));
        let md = emit_report(&report, ReportFormat::Markdown).unwrap();
        assert!(md.contains("| 1 | G1 "));
        assert!(md.contains("100.0%"));
        let back: ComplianceReport = serde_json::from_str(&emit_report(&report, ReportFormat::Json).unwrap()).unwrap();
        assert_eq!(back, report);
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("pdf".parse::<ReportFormat>().is_err());
    }

    fn arb_evals() -> impl Strategy<Value = (Vec<SkillEvaluation>, Roster)> {
        prop::collection::vec((0usize..10, prop::collection::vec(0u8..4, 8)), 1..40).prop_map(|rows| {
            let verdicts = [Verdict::Compliant, Verdict::NonCompliant, Verdict::NotApplicable, Verdict::Inconclusive];
            let ev = vec![Evidence { session: SessionRef { probe: Probe::VarietyRun, run_index: 1 }, turn: 0 }];
            let mut evals = Vec::new();
            let mut skills = Vec::new();
            for (i, (cat, vs)) in rows.into_iter().enumerate() {
                let id = format!("s{i}");
                let map = GuidelineId::ALL
                    .iter()
                    .zip(vs)
                    .map(|(&g, v)| (g, GuidelineVerdict::new(g, verdicts[v as usize], ev.clone())))
                    .collect();
                evals.push(SkillEvaluation { skill_id: id.clone(), verdicts: map, one_shot: false });
                skills.push((id, Category::ALL[cat]));
            }
            let refs: Vec<(&str, Category)> = skills.iter().map(|(i, c)| (i.as_str(), *c)).collect();
            (evals, roster(&refs))
        })
    }

    proptest! {
        #[test]
        fn counts_sum_to_total((evals, r) in arb_evals()) {
            let report = build_report(&evals, &r, &BTreeSet::new()).unwrap();
            for s in report.per_guideline.values() {
                prop_assert_eq!(s.total(), report.total_skills);
                prop_assert_eq!(s.rate, Fraction::new(s.compliant as u64, report.total_skills as u64).unwrap());
            }
            let mut ranked = report.guideline_ranking.clone();
            ranked.sort();
            prop_assert_eq!(ranked, GuidelineId::ALL.to_vec());
        }

        #[test]
        fn category_averages_match_brute_force((evals, r) in arb_evals()) {
            let (cats, _) = category_summary(&evals, &r).unwrap();
            for (cat, stats) in &cats {
                let members: Vec<&SkillEvaluation> =
                    evals.iter().filter(|e| r.get(&e.skill_id).unwrap().category == *cat).collect();
                let n = members.len() as f64;
                let avg = members.iter().map(|e| e.compliant_count() as f64).sum::<f64>() / n;
                prop_assert!((stats.avg_guidelines_complied.to_f64() - avg).abs() < 1e-9);
                for group in FeatureGroup::ALL {
                    let gs = group.guidelines();
                    let mean = gs.iter().map(|g| members.iter().filter(|e| e.verdict(*g) == Verdict::Compliant).count() as f64 / n).sum::<f64>() / gs.len() as f64;
                    prop_assert!((stats.feature_group_rates[&group].to_f64() - mean).abs() < 1e-9);
                }
            }
        }
    }
}
