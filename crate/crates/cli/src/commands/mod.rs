mod extract;
mod filtering;
mod import;
mod predictability;
mod score;
mod validate;
mod weights;

use crate::context::Context;
use crate::error::CliResult;
use crate::Command;

pub fn run(ctx: &Context, command: &Command) -> CliResult<()> {
    match command {
        Command::Weights(a) => weights::run(ctx, a),
        Command::Extract(a) => extract::run(ctx, a),
        Command::Score(a) => score::run(ctx, a),
        Command::Predictability(a) => predictability::run(ctx, a),
        Command::ValidateTaxonomy => validate::run(ctx),
        Command::FilteringStats(a) => filtering::run(ctx, a),
        Command::ImportResponses(a) => import::run(ctx, a),
    }
}

/// Prints a JSON document on stdout.
pub(crate) fn emit_json(value: &serde_json::Value) {
    // Value serialization cannot fail.
    println!(
        "{}",
        serde_json::to_string_pretty(value).unwrap_or_default()
    );
}

/// JSON has no NaN or infinity; those become strings.
pub(crate) fn num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::json!(x.to_string())
    }
}
