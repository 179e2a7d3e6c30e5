//! Adapter for wide survey exports (one row per respondent).
//!
//! Expected columns, in any order:
//!
//! * `response_id`, `scenario`
//! * `keep:<CODE>` for categories and sub-categories (`1`/`0`, `Y`/`N`,
//!   `yes`/`no`; empty means not kept)
//! * `cmp:<LEFT>:<RIGHT>` judgment cells on the −5..+5 scale, empty when the
//!   question was not shown
//! * `demo:<key>` free-form demographic answers
//!
//! Unrecognized columns are ignored so timing and metadata columns added by
//! the survey tool pass through harmlessly.

use std::io::Read;

use super::{ExpertResponse, ResponseError, MAX_JUDGMENT};
use crate::taxonomy::Taxonomy;

enum Column {
    Id,
    Scenario,
    Keep(String),
    Compare(String, String),
    Demographic(String),
    Ignored,
}

fn classify(name: &str) -> Column {
    let name = name.trim();
    if name == "response_id" {
        Column::Id
    } else if name == "scenario" {
        Column::Scenario
    } else if let Some(code) = name.strip_prefix("keep:") {
        Column::Keep(code.to_string())
    } else if let Some(rest) = name.strip_prefix("cmp:") {
        match rest.split_once(':') {
            Some((l, r)) => Column::Compare(l.to_string(), r.to_string()),
            None => Column::Ignored,
        }
    } else if let Some(key) = name.strip_prefix("demo:") {
        Column::Demographic(key.to_string())
    } else {
        Column::Ignored
    }
}

pub fn import_wide<R: Read>(
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
    let columns: Vec<Column> = headers.iter().map(classify).collect();
    if !columns.iter().any(|c| matches!(c, Column::Id))
        || !columns.iter().any(|c| matches!(c, Column::Scenario))
    {
        return Err(ResponseError::Schema {
            line: 1,
            field: "header",
            message: "wide export needs `response_id` and `scenario` columns".into(),
        });
    }

    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|source| ResponseError::Csv {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut resp = ExpertResponse::default();
        for (col, cell) in columns.iter().zip(record.iter()) {
            match col {
                Column::Id => resp.response_id = cell.to_string(),
                Column::Scenario => resp.attack_scenario = cell.to_string(),
                _ => {}
            }
        }
        if resp.response_id.is_empty() {
            return Err(ResponseError::Schema {
                line,
                field: "response_id",
                message: "empty".into(),
            });
        }
        for (col, cell) in columns.iter().zip(record.iter()) {
            match col {
                Column::Keep(code) => {
                    let kept = match cell.to_ascii_lowercase().as_str() {
                        "" | "0" | "n" | "no" | "false" => false,
                        "1" | "y" | "yes" | "true" => true,
                        other => {
                            return Err(ResponseError::Schema {
                                line,
                                field: "value",
                                message: format!("`{other}` is not a keep flag for {code}"),
                            })
                        }
                    };
                    if !kept {
                        continue;
                    }
                    if taxonomy.category(code).is_some() {
                        resp.kept_categories.insert(code.clone());
                    } else if taxonomy.subcategory(code).is_some() {
                        resp.kept_subcategories.insert(code.clone());
                    } else {
                        return Err(ResponseError::Schema {
                            line,
                            field: "header",
                            message: format!("unknown code {code} in keep column"),
                        });
                    }
                }
                Column::Compare(left, right) => {
                    if cell.is_empty() {
                        continue;
                    }
                    let value: i64 = cell.parse().map_err(|_| ResponseError::Schema {
                        line,
                        field: "value",
                        message: format!("`{cell}` is not an integer"),
                    })?;
                    if value.abs() > MAX_JUDGMENT as i64 {
                        return Err(ResponseError::Range {
                            line,
                            left: left.clone(),
                            right: right.clone(),
                            value,
                        });
                    }
                    if taxonomy.subcategory(left).is_some() {
                        resp.set_subcategory_judgment(taxonomy, left, right, value as i8)?;
                    } else {
                        resp.set_feature_judgment(taxonomy, left, right, value as i8)?;
                    }
                }
                Column::Demographic(key) => {
                    if !cell.is_empty() {
                        resp.demographics.insert(key.clone(), cell.to_string());
                    }
                }
                Column::Id | Column::Scenario | Column::Ignored => {}
            }
        }
        resp.validate(taxonomy)?;
        out.push(resp);
    }
    Ok(out)
}
