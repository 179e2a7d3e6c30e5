use dscore::responses::{filtering_stats, parse_responses, ScenarioFiltering};
use serde_json::json;

use super::emit_json;
use crate::context::{open, Context};
use crate::error::CliResult;
use crate::table::render;
use crate::{FilteringArgs, Format};

fn percent_row(s: &ScenarioFiltering) -> Vec<String> {
    let mut row = vec![s.scenario.clone(), s.respondents.to_string()];
    row.extend(
        s.categories
            .values()
            .chain(s.subcategories.values())
            .map(|v| format!("{:.0}", v * 100.0)),
    );
    row
}

pub fn run(ctx: &Context, args: &FilteringArgs) -> CliResult<()> {
    let tax = &ctx.taxonomy;
    let responses = parse_responses(open(&args.responses)?, tax)?;
    let stats = filtering_stats(&responses, tax)?;
    let average = stats.average();

    if ctx.format == Format::Json {
        let entry = |s: &ScenarioFiltering| {
            json!({
                "scenario": s.scenario,
                "respondents": s.respondents,
                "categories": s.categories.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
                "subcategories": s.subcategories.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            })
        };
        let mut rows: Vec<_> = stats.scenarios.iter().map(entry).collect();
        rows.push(entry(&average));
        emit_json(&json!(rows));
        return Ok(());
    }

    let mut header = vec!["scenario", "n"];
    header.extend(tax.categories.iter().map(|c| c.code.as_str()));
    header.extend(tax.subcategories().map(|s| s.code.as_str()));
    let mut rows: Vec<Vec<String>> = stats.scenarios.iter().map(percent_row).collect();
    rows.push(percent_row(&average));
    println!("share of respondents keeping each element (%)");
    print!("{}", render(&header, &rows));
    Ok(())
}
