use dscore::ahp::{aggregate, agreement, response_weights, AhpOptions, WeightVector};
use dscore::model::ModelFile;
use dscore::responses::{complete, parse_responses, quality_report};
use dscore::ResponseWeightsF64;
use serde_json::json;

use super::{emit_json, num};
use crate::context::{file_stem, open, Context};
use crate::error::{input, CliResult};
use crate::table::{f3, f4, render};
use crate::{Format, WeightsArgs};

const NO_AGREEMENT: &str = "n/a (fewer than 2 responses)";

pub fn run(ctx: &Context, args: &WeightsArgs) -> CliResult<()> {
    let tax = &ctx.taxonomy;
    let all = parse_responses(open(&args.responses)?, tax)?;
    let responses: Vec<_> = all
        .into_iter()
        .filter(|r| r.attack_scenario == args.scenario)
        .collect();
    if responses.is_empty() {
        return Err(input(format!(
            "no responses for scenario `{}` in {}",
            args.scenario,
            args.responses.display()
        )));
    }
    if ctx.scenarios.scenario(&args.scenario).is_none() {
        ctx.info(format!(
            "note: scenario `{}` is not in the scenario config",
            args.scenario
        ));
    }

    let options = AhpOptions::<f64> {
        method: args.method,
        include_subcategory_cr: args.include_subcategory_cr,
        ..AhpOptions::default()
    };
    let flags = quality_report(&responses, tax);
    let per_response: Vec<ResponseWeightsF64> = responses
        .iter()
        .map(|r| response_weights(&complete(r, tax), tax, &options))
        .collect::<Result<_, _>>()?;
    let weights = aggregate(&per_response, ctx.cr_threshold)?;

    let cohort: Vec<&ResponseWeightsF64> = per_response
        .iter()
        .filter(|r| weights.contributing_responses.contains(&r.response_id))
        .collect();
    let level = |pick: fn(&ResponseWeightsF64) -> &WeightVector<f64>| -> CliResult<Option<f64>> {
        if cohort.len() < 2 {
            return Ok(None);
        }
        let vs: Vec<_> = cohort.iter().map(|r| pick(r)).collect();
        Ok(Some(agreement(&vs)?))
    };
    let sub_agreement = level(|r| &r.subcategory_weights)?;
    let feature_agreement = level(|r| &r.feature_weights)?;

    let model = ModelFile::new(weights, tax, args.method, args.include_subcategory_cr);
    let name = args
        .output
        .clone()
        .unwrap_or_else(|| format!("{}.model.toml", file_stem(&args.scenario)));
    let path = ctx.write_artifact(&name, &model.to_toml_string()?)?;
    let w = &model.weights;
    let dropped = w.dropped_responses();

    if ctx.format == Format::Json {
        emit_json(&json!({
            "scenario": w.scenario,
            "model_file": path.display().to_string(),
            "cr_threshold": w.cr_threshold,
            "responses": w.mean_cr_per_response.iter().map(|(id, cr)| json!({
                "response_id": id,
                "mean_cr": num(*cr),
                "kept": !dropped.contains(&id.as_str()),
            })).collect::<Vec<_>>(),
            "quality_flags": flags.iter().map(|f| json!({
                "response_id": f.response_id,
                "issue": f.issue.to_string(),
            })).collect::<Vec<_>>(),
            "cohort_size": w.contributing_responses.len(),
            "subcategory_weights": w.subcategory_weights.iter().map(|(c, v)| json!([c, v])).collect::<Vec<_>>(),
            "feature_weights": w.feature_weights.iter().map(|(c, v)| json!([c, v])).collect::<Vec<_>>(),
            "agreement": {
                "subcategory": sub_agreement,
                "feature": feature_agreement,
            },
        }));
        return Ok(());
    }

    println!("scenario: {}", w.scenario);
    match w.cr_threshold {
        Some(t) => println!("CR threshold: {t}"),
        None => println!("CR threshold: none"),
    }
    println!();
    let rows: Vec<Vec<String>> = w
        .mean_cr_per_response
        .iter()
        .map(|(id, cr)| {
            let status = if dropped.contains(&id.as_str()) {
                "dropped"
            } else {
                "kept"
            };
            vec![id.clone(), f4(*cr), status.to_string()]
        })
        .collect();
    print!("{}", render(&["response", "mean CR", "status"], &rows));
    if !flags.is_empty() {
        println!();
        println!("quality flags:");
        for f in &flags {
            println!("  {}: {}", f.response_id, f.issue);
        }
    }
    println!();
    println!(
        "cohort size: {} of {} responses",
        w.contributing_responses.len(),
        w.mean_cr_per_response.len()
    );
    println!();
    print!("{}", weight_table("sub-category", &w.subcategory_weights));
    println!();
    print!("{}", weight_table("feature", &w.feature_weights));
    println!();
    let show = |a: Option<f64>| a.map_or_else(|| NO_AGREEMENT.to_string(), f3);
    println!("agreement (sub-category): {}", show(sub_agreement));
    println!("agreement (feature): {}", show(feature_agreement));
    println!();
    println!("model written to {}", path.display());
    Ok(())
}

fn weight_table(what: &str, v: &WeightVector<f64>) -> String {
    let rows: Vec<Vec<String>> = v
        .ranking()
        .into_iter()
        .enumerate()
        .map(|(i, code)| {
            vec![
                code.to_string(),
                f4(v.get(code).unwrap_or(0.0)),
                (i + 1).to_string(),
            ]
        })
        .collect();
    render(&[what, "weight", "rank"], &rows)
}
