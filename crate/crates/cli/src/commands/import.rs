use dscore::responses::import::import_wide;
use dscore::responses::{write_responses, QualityIssue};
use serde_json::json;

use super::emit_json;
use crate::context::{open, Context};
use crate::error::{input, CliResult};
use crate::{Format, ImportArgs};

pub fn run(ctx: &Context, args: &ImportArgs) -> CliResult<()> {
    let tax = &ctx.taxonomy;
    let responses = import_wide(open(&args.wide)?, tax)?;
    let mut buf = Vec::new();
    write_responses(&mut buf, &responses, tax)?;
    let text = String::from_utf8(buf).map_err(|e| input(e.to_string()))?;
    let path = ctx.write_artifact(&args.output, &text)?;
    let flags = dscore::responses::quality_report(&responses, tax);
    let partial = flags
        .iter()
        .filter(|f| f.issue == QualityIssue::Partial)
        .count();

    if ctx.format == Format::Json {
        emit_json(&json!({
            "responses": responses.len(),
            "partial": partial,
            "output": path.display().to_string(),
        }));
    } else {
        println!(
            "imported {} response(s) ({partial} partial) into {}",
            responses.len(),
            path.display()
        );
    }
    Ok(())
}
