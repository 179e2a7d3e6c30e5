use std::collections::BTreeMap;

use dscore::model::ModelFile;
use dscore::scoring::{d_score, maximin_rank, MaximinRow};
use dscore::traffic::DeviceProfile;
use dscore::{NormalizationParamsF64, ScoreCardF64};
use serde_json::json;

use super::{emit_json, num};
use crate::context::Context;
use crate::error::{input, CliResult};
use crate::table::{f3, render};
use crate::{Format, ScoreArgs};

/// Device type used to group maximin rankings: the part of the model id
/// before the first `/`, or `all` when there is none.
fn device_type(model_id: &str) -> &str {
    model_id.split_once('/').map_or("all", |(t, _)| t)
}

pub fn run(ctx: &Context, args: &ScoreArgs) -> CliResult<()> {
    let tax = &ctx.taxonomy;
    let mut models: BTreeMap<String, ModelFile> = BTreeMap::new();
    for path in &args.models {
        let m = ModelFile::load(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        m.check_taxonomy(tax)
            .map_err(|e| input(format!("{}: {e}", path.display())))?;
        let code = m.weights.scenario.clone();
        if models.insert(code.clone(), m).is_some() {
            return Err(input(format!("more than one model for scenario `{code}`")));
        }
    }
    let mut profiles: BTreeMap<String, DeviceProfile> = BTreeMap::new();
    for path in &args.profiles {
        let p = DeviceProfile::load(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        if let Some(v) = &p.taxonomy_version {
            if v != &tax.version {
                return Err(input(format!(
                    "{}: profile was built for taxonomy {v}, loaded taxonomy is {}",
                    path.display(),
                    tax.version
                )));
            }
        }
        p.validate(tax)?;
        let id = p.model_id.clone();
        if profiles.insert(id.clone(), p).is_some() {
            return Err(input(format!("more than one profile for model `{id}`")));
        }
    }

    let mut cards: Vec<ScoreCardF64> = Vec::new();
    for (code, model) in &models {
        let spec = ctx
            .scenarios
            .scenario(code)
            .ok_or_else(|| input(format!("scenario `{code}` is not in the scenario config")))?;
        let params = NormalizationParamsF64::new(spec, tax)?;
        for profile in profiles.values() {
            cards.push(d_score(&model.weights, profile, &params)?);
        }
    }
    cards.sort_by(|a, b| (&a.model_id, &a.scenario).cmp(&(&b.model_id, &b.scenario)));

    let scores: BTreeMap<(String, String), f64> = cards
        .iter()
        .map(|c| ((c.model_id.clone(), c.scenario.clone()), c.d_score))
        .collect();
    let matrix = models.len() >= 2 && profiles.len() >= 2;
    let mut groups: BTreeMap<&str, BTreeMap<(String, String), f64>> = BTreeMap::new();
    for (key, &s) in &scores {
        groups
            .entry(device_type(&key.0))
            .or_default()
            .insert(key.clone(), s);
    }
    let ranked: BTreeMap<&str, Vec<MaximinRow<f64>>> = if matrix {
        groups
            .into_iter()
            .map(|(t, g)| Ok((t, maximin_rank(&g)?)))
            .collect::<CliResult<_>>()?
    } else {
        BTreeMap::new()
    };

    let scenarios: Vec<&str> = models.keys().map(String::as_str).collect();
    let text = scores_file(tax.version.as_str(), &cards, &scenarios, &ranked);
    let path = ctx.write_artifact(&args.output, &text)?;

    if ctx.format == Format::Json {
        emit_json(&json!({
            "scores_file": path.display().to_string(),
            "cards": cards.iter().map(|c| json!({
                "model_id": c.model_id,
                "scenario": c.scenario,
                "d_score": num(c.d_score),
                "label": c.label.to_string(),
                "present_mass": num(c.present_mass),
                "normalized": c.normalized_values.iter().map(|(k, v)| json!([k, num(*v)])).collect::<Vec<_>>(),
                "missing": c.missing_features.iter().map(|m| json!({
                    "code": m.code, "weight": num(m.weight), "note": m.note,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "maximin": ranked.iter().map(|(t, rows)| json!({
                "type": t,
                "winner": rows.first().map(|r| r.model_id.clone()),
                "rows": rows.iter().map(|r| json!({
                    "model_id": r.model_id,
                    "min": num(r.min), "mean": num(r.mean), "max": num(r.max),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }));
        return Ok(());
    }

    for c in &cards {
        println!("{}", c.summary_line());
        if ctx.verbose > 0 {
            for m in &c.missing_features {
                println!(
                    "    missing {} (weight {:.4}): {}",
                    m.code, m.weight, m.note
                );
            }
        }
    }
    if matrix {
        println!();
        print!("{}", matrix_table(&scenarios, &ranked));
        println!();
        println!("* marks the maximin choice within each device type");
    }
    println!();
    println!("scores written to {}", path.display());
    Ok(())
}

fn matrix_table(scenarios: &[&str], ranked: &BTreeMap<&str, Vec<MaximinRow<f64>>>) -> String {
    let mut header = vec!["model"];
    header.extend_from_slice(scenarios);
    header.extend_from_slice(&["max", "mean", "min", ""]);
    let mut rows = Vec::new();
    for group in ranked.values() {
        let mut sorted: Vec<&MaximinRow<f64>> = group.iter().collect();
        sorted.sort_by(|a, b| a.model_id.cmp(&b.model_id));
        let winner = group.first().map(|r| r.model_id.as_str());
        for r in sorted {
            let mut row = vec![r.model_id.clone()];
            row.extend(r.scores.iter().map(|(_, s)| f3(*s)));
            row.extend([f3(r.max), f3(r.mean), f3(r.min)]);
            row.push(if Some(r.model_id.as_str()) == winner {
                "*".into()
            } else {
                String::new()
            });
            rows.push(row);
        }
    }
    render(&header, &rows)
}

/// Deterministic score table: same inputs give the same bytes.
fn scores_file(
    taxonomy_version: &str,
    cards: &[ScoreCardF64],
    scenarios: &[&str],
    ranked: &BTreeMap<&str, Vec<MaximinRow<f64>>>,
) -> String {
    let mut out = String::new();
    out.push_str("# dscore score table\n");
    out.push_str(&format!("# tool_version = {}\n", dscore::TOOL_VERSION));
    out.push_str(&format!("# taxonomy_version = {taxonomy_version}\n"));
    out.push_str("model_id\tscenario\td_score\tlabel\tpresent_mass\n");
    for c in cards {
        out.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\t{:.6}\n",
            c.model_id, c.scenario, c.d_score, c.label, c.present_mass
        ));
    }
    if !ranked.is_empty() {
        out.push('\n');
        out.push_str(&matrix_table(scenarios, ranked));
    }
    out
}
