use dscore::traffic::{
    extract_dynamic_features, format_timestamp, load_flows, DeviceProfile, ExtractionConfig,
};
use serde_json::json;

use super::{emit_json, num};
use crate::context::{file_stem, open, Context};
use crate::error::{input, CliResult};
use crate::{ExtractArgs, Format};

pub fn run(ctx: &Context, args: &ExtractArgs) -> CliResult<()> {
    let tax = &ctx.taxonomy;
    if args.night_start > 23 || args.night_end > 24 {
        return Err(input("night hours must lie in 0..=24"));
    }
    let static_profile = DeviceProfile::load(&args.static_profile)?;
    static_profile.validate(tax)?;
    let loaded = load_flows(open(&args.flows)?, args.device_ip)?;
    let cfg = ExtractionConfig {
        night_start_hour: args.night_start,
        night_end_hour: args.night_end,
        utc_offset_minutes: args.utc_offset,
        ..ExtractionConfig::default()
    };
    let extracted = extract_dynamic_features(&loaded.flows, &cfg);
    let mut profile = DeviceProfile::merge(&static_profile, &extracted, &loaded.flows, tax)?;
    profile.tool_version = Some(dscore::TOOL_VERSION.to_string());

    let name = args
        .output
        .clone()
        .unwrap_or_else(|| format!("{}.profile.toml", file_stem(&profile.model_id)));
    let path = ctx.write_artifact(&name, &profile.to_toml_string()?)?;

    if ctx.format == Format::Json {
        emit_json(&json!({
            "model_id": profile.model_id,
            "profile_file": path.display().to_string(),
            "flows": loaded.flows.len(),
            "skipped_rows": loaded.skipped,
            "static": profile.static_values.iter().map(|(k, v)| json!([k, num(*v)])).collect::<Vec<_>>(),
            "dynamic": profile.dynamic_values.iter().map(|(k, v)| json!([k, num(*v)])).collect::<Vec<_>>(),
            "missing": profile.missing.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
        }));
        return Ok(());
    }

    println!("model: {}", profile.model_id);
    println!(
        "flows: {} for the device, {} rows skipped (device not an endpoint)",
        loaded.flows.len(),
        loaded.skipped
    );
    if let Some((start, end)) = &profile.capture_window {
        println!(
            "capture window: {} .. {}",
            format_timestamp(start),
            format_timestamp(end)
        );
    }
    println!();
    println!("values:");
    for (code, v) in profile.values(tax) {
        let kind = if profile.dynamic_values.contains_key(code) {
            "dynamic"
        } else {
            "static"
        };
        println!("  {code:<5} {v:>14.6}  {kind}");
    }
    if !profile.missing.is_empty() {
        println!();
        println!("missing:");
        for (code, reason) in &profile.missing {
            println!("  {code:<5} {reason}");
        }
    }
    println!();
    println!("profile written to {}", path.display());
    Ok(())
}
