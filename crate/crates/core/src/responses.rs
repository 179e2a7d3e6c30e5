//! Expert questionnaire responses: parsing, validation, missing-value fill-in
//! and preliminary-filtering statistics.
//!
//! Judgments use a −5..+5 scale. A negative value favors the left element of
//! a pair, a positive value the right one. Pairs are always stored in
//! canonical taxonomy order (left = earlier element); judgments read from a
//! file in the opposite orientation are negated on the way in.

pub mod import;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taxonomy::Taxonomy;

/// Largest judgment magnitude on the questionnaire scale.
pub const MAX_JUDGMENT: i8 = 5;

/// Column order of the response file.
pub const RESPONSE_HEADER: [&str; 6] = [
    "response_id",
    "scenario",
    "record_kind",
    "left_code",
    "right_code",
    "value",
];

/// Demographic key that marks a response submitted before the question
/// queue was exhausted.
pub const SUBMISSION_KEY: &str = "submission";

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("line {line}: {source}")]
    Csv {
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: u64,
        field: &'static str,
        message: String,
    },
    #[error("line {line}: judgment {value} for pair ({left}, {right}) is outside [-5, +5]")]
    Range {
        line: u64,
        left: String,
        right: String,
        value: i64,
    },
    #[error("response {response_id}: {message}")]
    Invalid {
        response_id: String,
        message: String,
    },
    #[error("no responses to summarize")]
    EmptyInput,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Unordered element pair stored in canonical taxonomy order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub left: String,
    pub right: String,
}

impl PairKey {
    pub fn new(left: impl Into<String>, right: impl Into<String>) -> Self {
        PairKey {
            left: left.into(),
            right: right.into(),
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.left, self.right)
    }
}

/// Orders `(a, b)` by `index` and reports whether the input was flipped.
fn canonicalize(
    a: &str,
    b: &str,
    index: impl Fn(&str) -> Option<usize>,
) -> Option<(PairKey, bool)> {
    let ia = index(a)?;
    let ib = index(b)?;
    if ia < ib {
        Some((PairKey::new(a, b), false))
    } else if ia > ib {
        Some((PairKey::new(b, a), true))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExpertResponse {
    pub response_id: String,
    pub attack_scenario: String,
    pub kept_categories: BTreeSet<String>,
    pub kept_subcategories: BTreeSet<String>,
    pub subcategory_judgments: BTreeMap<PairKey, i8>,
    pub feature_judgments: BTreeMap<PairKey, i8>,
    pub demographics: BTreeMap<String, String>,
}

impl ExpertResponse {
    pub fn new(response_id: impl Into<String>, scenario: impl Into<String>) -> Self {
        ExpertResponse {
            response_id: response_id.into(),
            attack_scenario: scenario.into(),
            ..Default::default()
        }
    }

    pub fn is_partial(&self) -> bool {
        self.demographics
            .get(SUBMISSION_KEY)
            .is_some_and(|v| v.eq_ignore_ascii_case("partial"))
    }

    /// A sub-category counts as kept only if its category was kept too.
    pub fn keeps_subcategory(&self, taxonomy: &Taxonomy, sub: &str) -> bool {
        self.kept_subcategories.contains(sub)
            && taxonomy
                .category_of_subcategory(sub)
                .is_some_and(|c| self.kept_categories.contains(&c.code))
    }

    /// Records a judgment given in arbitrary orientation, canonicalizing it.
    pub fn set_subcategory_judgment(
        &mut self,
        taxonomy: &Taxonomy,
        left: &str,
        right: &str,
        value: i8,
    ) -> Result<(), ResponseError> {
        let (key, flipped) = canonicalize(left, right, |c| taxonomy.subcategory_index(c))
            .ok_or_else(|| {
                self.invalid(format!(
                    "({left}, {right}) is not a pair of distinct sub-categories"
                ))
            })?;
        check_magnitude(&self.response_id, &key, value)?;
        self.subcategory_judgments
            .insert(key, if flipped { -value } else { value });
        Ok(())
    }

    pub fn set_feature_judgment(
        &mut self,
        taxonomy: &Taxonomy,
        left: &str,
        right: &str,
        value: i8,
    ) -> Result<(), ResponseError> {
        let (key, flipped) =
            canonicalize(left, right, |c| taxonomy.feature_index(c)).ok_or_else(|| {
                self.invalid(format!(
                    "({left}, {right}) is not a pair of distinct features"
                ))
            })?;
        let same_sub = match (
            taxonomy.subcategory_of_feature(left),
            taxonomy.subcategory_of_feature(right),
        ) {
            (Some(a), Some(b)) => a.code == b.code,
            _ => false,
        };
        if !same_sub {
            return Err(self.invalid(format!(
                "features {left} and {right} belong to different sub-categories"
            )));
        }
        check_magnitude(&self.response_id, &key, value)?;
        self.feature_judgments
            .insert(key, if flipped { -value } else { value });
        Ok(())
    }

    fn invalid(&self, message: String) -> ResponseError {
        ResponseError::Invalid {
            response_id: self.response_id.clone(),
            message,
        }
    }

    /// Checks every invariant against the taxonomy.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), ResponseError> {
        for c in &self.kept_categories {
            if taxonomy.category(c).is_none() {
                return Err(self.invalid(format!("unknown category {c}")));
            }
        }
        for s in &self.kept_subcategories {
            match taxonomy.category_of_subcategory(s) {
                None => return Err(self.invalid(format!("unknown sub-category {s}"))),
                Some(cat) if !self.kept_categories.contains(&cat.code) => {
                    return Err(self.invalid(format!(
                        "sub-category {s} kept but its category {} was dropped",
                        cat.code
                    )))
                }
                Some(_) => {}
            }
        }
        for (key, &v) in &self.subcategory_judgments {
            match (
                taxonomy.subcategory_index(&key.left),
                taxonomy.subcategory_index(&key.right),
            ) {
                (Some(a), Some(b)) if a < b => {}
                _ => return Err(self.invalid(format!("sub-category pair {key} is not canonical"))),
            }
            check_magnitude(&self.response_id, key, v)?;
        }
        for (key, &v) in &self.feature_judgments {
            let ok = match (
                taxonomy.feature_index(&key.left),
                taxonomy.feature_index(&key.right),
            ) {
                (Some(a), Some(b)) if a < b => {
                    taxonomy.subcategory_of_feature(&key.left).map(|s| &s.code)
                        == taxonomy.subcategory_of_feature(&key.right).map(|s| &s.code)
                }
                _ => false,
            };
            if !ok {
                return Err(self.invalid(format!(
                    "feature pair {key} is not a canonical within-sub-category pair"
                )));
            }
            check_magnitude(&self.response_id, key, v)?;
        }
        Ok(())
    }
}

fn check_magnitude(response_id: &str, key: &PairKey, value: i8) -> Result<(), ResponseError> {
    if value.unsigned_abs() > MAX_JUDGMENT as u8 {
        Err(ResponseError::Invalid {
            response_id: response_id.to_string(),
            message: format!("judgment {value} for pair {key} is outside [-5, +5]"),
        })
    } else {
        Ok(())
    }
}

/// A response whose judgment maps cover every sub-category pair and every
/// within-sub-category feature pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletedResponse {
    pub response: ExpertResponse,
    /// Pairs filled because exactly one side was kept (magnitude 5).
    pub filled_kept_vs_dropped: usize,
    /// Pairs filled with 0 because both sides were dropped.
    pub filled_both_dropped: usize,
    /// Pairs between two kept elements that the respondent left unanswered.
    /// They are filled with 0 and surfaced in the quality report.
    pub skipped: Vec<PairKey>,
}

impl CompletedResponse {
    pub fn response_id(&self) -> &str {
        &self.response.response_id
    }

    pub fn scenario(&self) -> &str {
        &self.response.attack_scenario
    }
}

fn fill_value(left_kept: bool, right_kept: bool) -> i8 {
    match (left_kept, right_kept) {
        (true, false) => -MAX_JUDGMENT,
        (false, true) => MAX_JUDGMENT,
        _ => 0,
    }
}

/// Fills every missing pair. Kept-vs-dropped pairs get magnitude 5 toward the
/// kept element; two dropped (or two kept but unanswered) elements get 0.
/// Existing judgments are never touched.
pub fn complete(response: &ExpertResponse, taxonomy: &Taxonomy) -> CompletedResponse {
    let mut out = response.clone();
    let mut filled_kept_vs_dropped = 0;
    let mut filled_both_dropped = 0;
    let mut skipped = Vec::new();

    let subs: Vec<&str> = taxonomy.subcategory_codes();
    let kept: HashMap<&str, bool> = subs
        .iter()
        .map(|s| (*s, response.keeps_subcategory(taxonomy, s)))
        .collect();

    let mut record = |map: &mut BTreeMap<PairKey, i8>, key: PairKey, lk: bool, rk: bool| {
        if map.contains_key(&key) {
            return;
        }
        let v = fill_value(lk, rk);
        match (lk, rk) {
            (true, true) => skipped.push(key.clone()),
            (false, false) => filled_both_dropped += 1,
            _ => filled_kept_vs_dropped += 1,
        }
        map.insert(key, v);
    };

    for (i, a) in subs.iter().enumerate() {
        for b in &subs[i + 1..] {
            record(
                &mut out.subcategory_judgments,
                PairKey::new(*a, *b),
                kept[a],
                kept[b],
            );
        }
    }
    for sub in taxonomy.subcategories() {
        let k = kept[sub.code.as_str()];
        for (i, a) in sub.features.iter().enumerate() {
            for b in &sub.features[i + 1..] {
                record(
                    &mut out.feature_judgments,
                    PairKey::new(&a.code, &b.code),
                    k,
                    k,
                );
            }
        }
    }

    CompletedResponse {
        response: out,
        filled_kept_vs_dropped,
        filled_both_dropped,
        skipped,
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    response_id: String,
    scenario: String,
    record_kind: String,
    left_code: String,
    right_code: String,
    value: String,
}

fn schema_err(line: u64, field: &'static str, message: impl Into<String>) -> ResponseError {
    ResponseError::Schema {
        line,
        field,
        message: message.into(),
    }
}

fn parse_flag(line: u64, value: &str) -> Result<bool, ResponseError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "" | "1" | "true" | "yes" | "y" => Ok(true),
        "0" | "false" | "no" | "n" => Ok(false),
        other => Err(schema_err(
            line,
            "value",
            format!("`{other}` is not a keep flag"),
        )),
    }
}

/// Parses the long-format response file, validating every response against
/// the taxonomy. Responses are returned in order of first appearance.
pub fn parse_responses<R: Read>(
    reader: R,
    taxonomy: &Taxonomy,
) -> Result<Vec<ExpertResponse>, ResponseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|source| ResponseError::Csv { line: 1, source })?
        .clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != RESPONSE_HEADER {
        return Err(schema_err(
            1,
            "header",
            format!(
                "expected `{}`, found `{}`",
                RESPONSE_HEADER.join(","),
                found.join(",")
            ),
        ));
    }

    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, ExpertResponse> = HashMap::new();

    for result in rdr.records() {
        let record = result.map_err(|source| ResponseError::Csv {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record
            .deserialize(Some(&headers))
            .map_err(|source| ResponseError::Csv { line, source })?;

        if row.response_id.is_empty() {
            return Err(schema_err(line, "response_id", "empty"));
        }
        if row.scenario.is_empty() {
            return Err(schema_err(line, "scenario", "empty"));
        }
        let resp = by_id.entry(row.response_id.clone()).or_insert_with(|| {
            order.push(row.response_id.clone());
            ExpertResponse::new(&row.response_id, &row.scenario)
        });
        if resp.attack_scenario != row.scenario {
            return Err(schema_err(
                line,
                "scenario",
                format!(
                    "response {} already addresses scenario {}",
                    row.response_id, resp.attack_scenario
                ),
            ));
        }

        match row.record_kind.as_str() {
            "keep_category" => {
                if taxonomy.category(&row.left_code).is_none() {
                    return Err(schema_err(
                        line,
                        "left_code",
                        format!("unknown category {}", row.left_code),
                    ));
                }
                if parse_flag(line, &row.value)? {
                    resp.kept_categories.insert(row.left_code);
                }
            }
            "keep_subcategory" => {
                if taxonomy.subcategory(&row.left_code).is_none() {
                    return Err(schema_err(
                        line,
                        "left_code",
                        format!("unknown sub-category {}", row.left_code),
                    ));
                }
                if parse_flag(line, &row.value)? {
                    resp.kept_subcategories.insert(row.left_code);
                }
            }
            kind @ ("judgment_subcat" | "judgment_feature") => {
                let value: i64 = row.value.parse().map_err(|_| {
                    schema_err(line, "value", format!("`{}` is not an integer", row.value))
                })?;
                if value.abs() > MAX_JUDGMENT as i64 {
                    return Err(ResponseError::Range {
                        line,
                        left: row.left_code,
                        right: row.right_code,
                        value,
                    });
                }
                let set = if kind == "judgment_subcat" {
                    ExpertResponse::set_subcategory_judgment
                } else {
                    ExpertResponse::set_feature_judgment
                };
                set(resp, taxonomy, &row.left_code, &row.right_code, value as i8).map_err(|e| {
                    match e {
                        ResponseError::Invalid { message, .. } => {
                            schema_err(line, "left_code", message)
                        }
                        other => other,
                    }
                })?;
            }
            "demographic" => {
                if row.left_code.is_empty() {
                    return Err(schema_err(line, "left_code", "demographic key is empty"));
                }
                resp.demographics.insert(row.left_code, row.value);
            }
            other => {
                return Err(schema_err(
                    line,
                    "record_kind",
                    format!("unknown record kind `{other}`"),
                ))
            }
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let resp = by_id.remove(&id).expect("id recorded on insert");
        resp.validate(taxonomy)?;
        out.push(resp);
    }
    Ok(out)
}

/// Writes responses in the long-format schema, in canonical pair orientation.
pub fn write_responses<W: Write>(
    writer: W,
    responses: &[ExpertResponse],
    taxonomy: &Taxonomy,
) -> Result<(), ResponseError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |source| ResponseError::Csv { line: 0, source };
    w.write_record(RESPONSE_HEADER).map_err(csv_err)?;
    for r in responses {
        let id = r.response_id.as_str();
        let sc = r.attack_scenario.as_str();
        for (k, v) in &r.demographics {
            w.write_record([id, sc, "demographic", k.as_str(), "", v.as_str()])
                .map_err(csv_err)?;
        }
        // Every category gets an explicit row so a response that dropped
        // everything still appears in the file.
        for c in &taxonomy.categories {
            let flag = if r.kept_categories.contains(&c.code) {
                "1"
            } else {
                "0"
            };
            w.write_record([id, sc, "keep_category", c.code.as_str(), "", flag])
                .map_err(csv_err)?;
        }
        for s in taxonomy.subcategories() {
            if r.kept_subcategories.contains(&s.code) {
                w.write_record([id, sc, "keep_subcategory", s.code.as_str(), "", "1"])
                    .map_err(csv_err)?;
            }
        }
        for (k, v) in &r.subcategory_judgments {
            let v = v.to_string();
            w.write_record([id, sc, "judgment_subcat", &k.left, &k.right, &v])
                .map_err(csv_err)?;
        }
        for (k, v) in &r.feature_judgments {
            let v = v.to_string();
            w.write_record([id, sc, "judgment_feature", &k.left, &k.right, &v])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Share of respondents who kept each category and sub-category.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFiltering {
    pub scenario: String,
    pub respondents: usize,
    pub categories: IndexMap<String, f64>,
    pub subcategories: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilteringStats {
    /// Scenarios in order of first appearance.
    pub scenarios: Vec<ScenarioFiltering>,
}

impl FilteringStats {
    /// Unweighted mean of the per-scenario fractions.
    pub fn average(&self) -> ScenarioFiltering {
        let n = self.scenarios.len() as f64;
        let mean = |get: &dyn Fn(&ScenarioFiltering) -> &IndexMap<String, f64>| {
            let mut acc: IndexMap<String, f64> = IndexMap::new();
            for s in &self.scenarios {
                for (k, v) in get(s) {
                    *acc.entry(k.clone()).or_default() += v / n;
                }
            }
            acc
        };
        ScenarioFiltering {
            scenario: "Average".into(),
            respondents: self.scenarios.iter().map(|s| s.respondents).sum(),
            categories: mean(&|s| &s.categories),
            subcategories: mean(&|s| &s.subcategories),
        }
    }

    pub fn scenario(&self, code: &str) -> Option<&ScenarioFiltering> {
        self.scenarios.iter().find(|s| s.scenario == code)
    }
}

pub fn filtering_stats(
    responses: &[ExpertResponse],
    taxonomy: &Taxonomy,
) -> Result<FilteringStats, ResponseError> {
    if responses.is_empty() {
        return Err(ResponseError::EmptyInput);
    }
    let mut groups: IndexMap<&str, Vec<&ExpertResponse>> = IndexMap::new();
    for r in responses {
        groups
            .entry(r.attack_scenario.as_str())
            .or_default()
            .push(r);
    }
    let scenarios = groups
        .into_iter()
        .map(|(scenario, rs)| {
            let n = rs.len() as f64;
            let categories = taxonomy
                .categories
                .iter()
                .map(|c| {
                    let k = rs
                        .iter()
                        .filter(|r| r.kept_categories.contains(&c.code))
                        .count();
                    (c.code.clone(), k as f64 / n)
                })
                .collect();
            let subcategories = taxonomy
                .subcategories()
                .map(|s| {
                    let k = rs
                        .iter()
                        .filter(|r| r.keeps_subcategory(taxonomy, &s.code))
                        .count();
                    (s.code.clone(), k as f64 / n)
                })
                .collect();
            ScenarioFiltering {
                scenario: scenario.to_string(),
                respondents: rs.len(),
                categories,
                subcategories,
            }
        })
        .collect();
    Ok(FilteringStats { scenarios })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QualityIssue {
    /// Submitted before the question queue was exhausted.
    Partial,
    /// Pairs between two kept elements left unanswered (filled with 0).
    SkippedJudgments(usize),
    /// Nothing kept at all; every weight comes out uniform.
    NothingKept,
}

impl fmt::Display for QualityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QualityIssue::Partial => f.write_str("partial submission"),
            QualityIssue::SkippedJudgments(n) => {
                write!(
                    f,
                    "{n} unanswered pair(s) between kept elements filled with 0"
                )
            }
            QualityIssue::NothingKept => f.write_str("no sub-category kept"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualityFlag {
    pub response_id: String,
    pub issue: QualityIssue,
}

pub fn quality_report(responses: &[ExpertResponse], taxonomy: &Taxonomy) -> Vec<QualityFlag> {
    let mut out = Vec::new();
    for r in responses {
        let flag = |issue| QualityFlag {
            response_id: r.response_id.clone(),
            issue,
        };
        if r.is_partial() {
            out.push(flag(QualityIssue::Partial));
        }
        if !taxonomy
            .subcategories()
            .any(|s| r.keeps_subcategory(taxonomy, &s.code))
        {
            out.push(flag(QualityIssue::NothingKept));
        }
        let skipped = complete(r, taxonomy).skipped.len();
        if skipped > 0 {
            out.push(flag(QualityIssue::SkippedJudgments(skipped)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{default_taxonomy, pairwise_count};

    fn parse(text: &str) -> Result<Vec<ExpertResponse>, ResponseError> {
        parse_responses(text.as_bytes(), &default_taxonomy())
    }

    const HEADER: &str = "response_id,scenario,record_kind,left_code,right_code,value\n";

    #[test]
    fn single_response_file() {
        let text = format!(
            "{HEADER}r1,ddos_flooding,keep_category,NT,,1\n\
             r1,ddos_flooding,keep_subcategory,OUT,,1\n\
             r1,ddos_flooding,keep_subcategory,SRD,,1\n\
             r1,ddos_flooding,judgment_subcat,OUT,SRD,3\n\
             r1,ddos_flooding,judgment_feature,IATO,PCKO,-2\n\
             r1,ddos_flooding,demographic,education,,phd\n"
        );
        let rs = parse(&text).unwrap();
        assert_eq!(rs.len(), 1);
        let r = &rs[0];
        assert_eq!(r.attack_scenario, "ddos_flooding");
        assert_eq!(r.subcategory_judgments[&PairKey::new("OUT", "SRD")], 3);
        assert_eq!(r.feature_judgments[&PairKey::new("IATO", "PCKO")], -2);
        assert_eq!(r.demographics["education"], "phd");
    }

    #[test]
    fn reversed_pair_is_negated() {
        let text = format!("{HEADER}r1,s,keep_category,NT,,1\nr1,s,judgment_subcat,SRD,INB,4\n");
        let r = &parse(&text).unwrap()[0];
        assert_eq!(r.subcategory_judgments[&PairKey::new("INB", "SRD")], -4);
    }

    #[test]
    fn out_of_range_judgment() {
        let text = format!("{HEADER}r1,s,judgment_subcat,SNA,RSR,7\n");
        match parse(&text) {
            Err(ResponseError::Range {
                line,
                left,
                right,
                value,
            }) => {
                assert_eq!((line, value), (2, 7));
                assert_eq!((left.as_str(), right.as_str()), ("SNA", "RSR"));
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let text = format!("{HEADER}r1,s,keep_category,HW,,1\nr1,s,bogus,HW,,1\n");
        match parse(&text) {
            Err(ResponseError::Schema { line, field, .. }) => {
                assert_eq!((line, field), (3, "record_kind"))
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}r1,s,judgment_feature,NSNS,IATI,1\n");
        assert!(matches!(
            parse(&text),
            Err(ResponseError::Schema { line: 2, .. })
        ));
        let text = format!("{HEADER}r1,s,judgment_subcat,SNA,RSR,x\n");
        assert!(matches!(
            parse(&text),
            Err(ResponseError::Schema {
                line: 2,
                field: "value",
                ..
            })
        ));
        let text = "id,scenario\n";
        assert!(matches!(
            parse(text),
            Err(ResponseError::Schema {
                field: "header",
                ..
            })
        ));
    }

    #[test]
    fn subcategory_without_category_is_rejected() {
        let text = format!("{HEADER}r1,s,keep_subcategory,SNA,,1\n");
        assert!(matches!(parse(&text), Err(ResponseError::Invalid { .. })));
    }

    #[test]
    fn conflicting_scenarios_rejected() {
        let text = format!("{HEADER}r1,a,keep_category,HW,,1\nr1,b,keep_category,NT,,1\n");
        assert!(matches!(
            parse(&text),
            Err(ResponseError::Schema {
                line: 3,
                field: "scenario",
                ..
            })
        ));
    }

    fn response_keeping(subs: &[&str]) -> ExpertResponse {
        let t = default_taxonomy();
        let mut r = ExpertResponse::new("r", "s");
        for s in subs {
            let cat = t.category_of_subcategory(s).unwrap();
            r.kept_categories.insert(cat.code.clone());
            r.kept_subcategories.insert(s.to_string());
        }
        r
    }

    #[test]
    fn fill_kept_vs_dropped() {
        let t = default_taxonomy();
        let c = complete(&response_keeping(&["INB"]), &t);
        // SNA (dropped) precedes INB (kept) in taxonomy order: favor the right side.
        assert_eq!(
            c.response.subcategory_judgments[&PairKey::new("SNA", "INB")],
            5
        );
        assert_eq!(
            c.response.subcategory_judgments[&PairKey::new("INB", "SRD")],
            -5
        );
        assert_eq!(
            c.response.subcategory_judgments[&PairKey::new("SNA", "INT")],
            0
        );
        assert_eq!(c.filled_kept_vs_dropped, 6);
        assert_eq!(c.filled_both_dropped, 15 + 57 - 15);
        // INB features kept but unanswered.
        assert_eq!(c.skipped.len(), 15);
    }

    #[test]
    fn existing_judgment_preserved() {
        let t = default_taxonomy();
        let mut r = response_keeping(&["SNA", "INB"]);
        r.set_subcategory_judgment(&t, "SNA", "INB", 3).unwrap();
        let c = complete(&r, &t);
        assert_eq!(
            c.response.subcategory_judgments[&PairKey::new("SNA", "INB")],
            3
        );
    }

    #[test]
    fn completed_sizes_and_idempotence() {
        let t = default_taxonomy();
        let c = complete(&response_keeping(&["SNA", "OUT"]), &t);
        assert_eq!(c.response.subcategory_judgments.len(), pairwise_count(7));
        assert_eq!(c.response.feature_judgments.len(), 57);
        let again = complete(&c.response, &t);
        assert_eq!(again.response, c.response);
    }

    #[test]
    fn filtering_stats_examples() {
        let t = default_taxonomy();
        assert!(matches!(
            filtering_stats(&[], &t),
            Err(ResponseError::EmptyInput)
        ));

        let mut hw_only = ExpertResponse::new("a", "s");
        hw_only.kept_categories.insert("HW".into());
        let stats = filtering_stats(&[hw_only], &t).unwrap();
        let s = &stats.scenarios[0];
        assert_eq!(s.categories["HW"], 1.0);
        assert_eq!(s.categories["SB"], 0.0);
        assert_eq!(s.categories["NT"], 0.0);

        let rs = vec![
            response_keeping(&["OUT"]),
            response_keeping(&["SRD", "INB"]),
        ];
        let stats = filtering_stats(&rs, &t).unwrap();
        let s = &stats.scenarios[0];
        assert_eq!(s.categories["NT"], 1.0);
        assert_eq!(s.subcategories["INB"], 0.5);
        assert_eq!(s.respondents, 2);
    }

    #[test]
    fn quality_flags() {
        let t = default_taxonomy();
        let mut r = response_keeping(&["SNA"]);
        r.demographics
            .insert(SUBMISSION_KEY.into(), "partial".into());
        let flags = quality_report(&[r, ExpertResponse::new("empty", "s")], &t);
        assert!(flags.contains(&QualityFlag {
            response_id: "r".into(),
            issue: QualityIssue::Partial
        }));
        assert!(flags.contains(&QualityFlag {
            response_id: "r".into(),
            issue: QualityIssue::SkippedJudgments(1)
        }));
        assert!(flags.contains(&QualityFlag {
            response_id: "empty".into(),
            issue: QualityIssue::NothingKept
        }));
    }

    #[test]
    fn write_then_parse_round_trip() {
        let t = default_taxonomy();
        let mut r = response_keeping(&["OUT", "SRD"]);
        r.set_subcategory_judgment(&t, "SRD", "OUT", 2).unwrap();
        r.set_feature_judgment(&t, "DSIP", "DSPR", -5).unwrap();
        r.demographics.insert("years_academic".into(), "4".into());
        let mut buf = Vec::new();
        write_responses(&mut buf, &[r.clone()], &t).unwrap();
        let back = parse_responses(buf.as_slice(), &t).unwrap();
        assert_eq!(back, vec![r]);
    }
}
