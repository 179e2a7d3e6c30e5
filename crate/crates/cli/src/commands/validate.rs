use std::collections::BTreeMap;

use dscore::scoring::range_label;
use serde_json::json;

use super::emit_json;
use crate::context::Context;
use crate::error::CliResult;
use crate::Format;

pub fn run(ctx: &Context) -> CliResult<()> {
    let tax = &ctx.taxonomy;
    ctx.scenarios.validate(tax)?;
    let counts = tax.pair_counts();
    let mut classes: BTreeMap<u64, Vec<&str>> = BTreeMap::new();
    for f in tax.features() {
        classes.entry(f.x_max.to_bits()).or_default().push(&f.code);
    }
    let mut classes: Vec<(f64, Vec<&str>)> = classes
        .into_iter()
        .map(|(b, v)| (f64::from_bits(b), v))
        .collect();
    classes.sort_by(|a, b| a.0.total_cmp(&b.0));

    if ctx.format == Format::Json {
        emit_json(&json!({
            "taxonomy_version": tax.version,
            "categories": tax.categories.len(),
            "subcategories": tax.subcategories().count(),
            "features": tax.count_features(),
            "pairs": {
                "categories": counts.categories,
                "subcategories": counts.subcategories,
                "subcategories_within_category": counts.subcategories_within_category,
                "features": counts.features_total,
                "questionnaire_total": counts.questionnaire_total(),
            },
            "range_classes": classes.iter().map(|(x, codes)| json!({
                "range": range_label(*x), "features": codes,
            })).collect::<Vec<_>>(),
            "scenarios": ctx.scenarios.codes(),
        }));
        return Ok(());
    }

    println!("taxonomy {}: ok", tax.version);
    println!(
        "  {} categories, {} sub-categories, {} features",
        tax.categories.len(),
        tax.subcategories().count(),
        tax.count_features()
    );
    println!("  pairwise comparisons: {counts}");
    println!("  questionnaire total: {}", counts.questionnaire_total());
    println!("  range classes:");
    for (x, codes) in &classes {
        println!("    {:<10} {}", range_label(*x), codes.join(" "));
    }
    println!("scenario config: ok ({})", ctx.scenarios.codes().join(", "));
    Ok(())
}
