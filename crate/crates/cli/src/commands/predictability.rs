use std::collections::BTreeMap;
use std::net::IpAddr;
use std::path::PathBuf;

use dscore::stats::{anova_oneway, hurst, mean, pearson, t_test_two_sided, HurstConfig, TTestKind};
use dscore::traffic::{compute_kpis, load_flows, DeviceProfile, Kpi, KpiSeries};
use dscore::TestResultF64;
use serde_json::{json, Value};

use super::{emit_json, num};
use crate::context::{open, Context};
use crate::error::{input, CliResult};
use crate::table::{f3, f4, p, render};
use crate::{Format, PredictabilityArgs};

struct Device {
    group: String,
    name: String,
    profile: Option<DeviceProfile>,
    kpis: Vec<KpiSeries>,
    /// Hurst exponent per KPI, or the reason there is none.
    hurst: Vec<Result<f64, String>>,
}

fn parse_spec(spec: &str) -> CliResult<(String, IpAddr, PathBuf, Option<PathBuf>)> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if !(3..=4).contains(&parts.len()) || parts.iter().any(|p| p.is_empty()) {
        return Err(input(format!(
            "--device `{spec}`: expected GROUP,DEVICE_IP,FLOWS[,PROFILE]"
        )));
    }
    let ip = parts[1].parse().map_err(|_| {
        input(format!(
            "--device `{spec}`: `{}` is not an IP address",
            parts[1]
        ))
    })?;
    Ok((
        parts[0].to_string(),
        ip,
        PathBuf::from(parts[2]),
        parts.get(3).map(PathBuf::from),
    ))
}

fn summary(values: &[f64]) -> Option<(f64, f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let m = mean(values);
    let sd = if values.len() > 1 {
        dscore::stats::variance(values).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some((m, sd, min, max))
}

pub fn run(ctx: &Context, args: &PredictabilityArgs) -> CliResult<()> {
    let cfg = HurstConfig {
        min_length: args.min_length,
        anis_lloyd: args.anis_lloyd,
        ..HurstConfig::default()
    };
    let mut devices = Vec::new();
    for spec in &args.devices {
        let (group, ip, flows_path, profile_path) = parse_spec(spec)?;
        let loaded = load_flows(open(&flows_path)?, ip)?;
        let profile = match &profile_path {
            Some(p) => Some(DeviceProfile::load(p)?),
            None => None,
        };
        let name = match &profile {
            Some(p) => p.model_id.clone(),
            None => flows_path
                .file_stem()
                .map_or_else(|| ip.to_string(), |s| s.to_string_lossy().into_owned()),
        };
        let kpis = compute_kpis(&loaded.flows, &name);
        let hurst = kpis
            .iter()
            .map(|s| {
                hurst(&s.values, &cfg)
                    .map(|e| e.h)
                    .map_err(|e| e.to_string())
            })
            .collect();
        devices.push(Device {
            group,
            name,
            profile,
            kpis,
            hurst,
        });
    }
    let mut seen = BTreeMap::new();
    for d in &devices {
        if seen.insert(d.name.as_str(), ()).is_some() {
            return Err(input(format!("device `{}` listed twice", d.name)));
        }
    }

    let groups: BTreeMap<&str, Vec<&Device>> = devices.iter().fold(BTreeMap::new(), |mut m, d| {
        m.entry(d.group.as_str()).or_insert_with(Vec::new).push(d);
        m
    });

    let tests = group_tests(&groups);
    let correlations = correlations(ctx, &devices, &args.correlate)?;

    if ctx.format == Format::Json {
        emit_json(&json!({
            "devices": devices.iter().map(|d| json!({
                "group": d.group,
                "device": d.name,
                "kpis": d.kpis.iter().zip(&d.hurst).map(|(s, h)| {
                    let sm = summary(&s.values);
                    json!({
                        "kpi": s.kpi.name(),
                        "n": s.values.len(),
                        "mean": sm.map(|x| num(x.0)),
                        "sd": sm.map(|x| num(x.1)),
                        "hurst": h.as_ref().ok().map(|h| num(*h)),
                        "hurst_class": h.as_ref().ok().map(|h| dscore::stats::hurst::classify(*h, cfg.band).to_string()),
                        "hurst_note": h.as_ref().err(),
                    })
                }).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "group_hurst": groups.iter().map(|(g, ds)| json!({
                "group": g,
                "kpis": Kpi::ALL.iter().enumerate().map(|(i, k)| {
                    let hs = group_hurst(ds, i);
                    json!({
                        "kpi": k.name(),
                        "mean": hs.as_ref().map(|x| num(x.0)),
                        "min": hs.as_ref().map(|x| num(x.1)),
                        "max": hs.as_ref().map(|x| num(x.2)),
                    })
                }).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "group_tests": match &tests {
                None => Value::Null,
                Some(rows) => json!(rows.iter().map(|t| json!({
                    "kpi": t.kpi.name(),
                    "test": t.test,
                    "statistic": t.result.as_ref().ok().map(|r| num(r.statistic)),
                    "df": t.result.as_ref().ok().map(|r| r.df.to_string()),
                    "p_value": t.result.as_ref().ok().map(|r| num(r.p_value)),
                    "ci_95": t.result.as_ref().ok().and_then(|r| r.ci_95).map(|(l, h)| json!([num(l), num(h)])),
                    "note": t.result.as_ref().err(),
                })).collect::<Vec<_>>()),
            },
            "correlations": correlations.iter().map(|c| json!({
                "feature": c.feature,
                "kpi": c.kpi.name(),
                "devices": c.n,
                "r": c.r.as_ref().ok().map(|r| num(*r)),
                "note": c.r.as_ref().err(),
            })).collect::<Vec<_>>(),
        }));
        return Ok(());
    }

    println!("KPI summaries");
    let mut rows = Vec::new();
    for d in &devices {
        for s in &d.kpis {
            let mut row = vec![
                d.name.clone(),
                d.group.clone(),
                s.kpi.name().to_string(),
                s.values.len().to_string(),
            ];
            match summary(&s.values) {
                Some((m, sd, min, max)) => row.extend([f3(m), f3(sd), f3(min), f3(max)]),
                None => row.extend(["n/a", "", "", ""].map(String::from)),
            }
            rows.push(row);
        }
    }
    print!(
        "{}",
        render(
            &["device", "group", "kpi", "n", "mean", "sd", "min", "max"],
            &rows
        )
    );

    println!();
    println!(
        "Hurst exponents{}",
        if cfg.anis_lloyd {
            " (Anis-Lloyd corrected)"
        } else {
            ""
        }
    );
    let mut header = vec!["device", "group"];
    header.extend(Kpi::ALL.iter().map(|k| k.name()));
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for (g, ds) in &groups {
        for d in ds {
            let mut row = vec![d.name.clone(), g.to_string()];
            for (k, h) in Kpi::ALL.iter().zip(&d.hurst) {
                match h {
                    Ok(h) => row.push(format!("{h:.2}")),
                    Err(e) => {
                        row.push("n/a".into());
                        notes.push(format!("{} {}: {e}", d.name, k.name()));
                    }
                }
            }
            rows.push(row);
        }
        let mut avg = vec![format!("{g} average"), String::new()];
        let mut range = vec![format!("{g} range"), String::new()];
        for i in 0..Kpi::ALL.len() {
            match group_hurst(ds, i) {
                Some((m, lo, hi)) => {
                    avg.push(format!("{m:.2}"));
                    range.push(format!("{lo:.2}-{hi:.2}"));
                }
                None => {
                    avg.push("n/a".into());
                    range.push("n/a".into());
                }
            }
        }
        rows.push(avg);
        rows.push(range);
    }
    print!("{}", render(&header, &rows));
    for n in notes {
        println!("  n/a {n}");
    }

    println!();
    println!("Group tests");
    match &tests {
        None => println!("  skipped: fewer than 2 groups"),
        Some(rows) => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|t| {
                    let mut row = vec![t.kpi.name().to_string(), t.test.clone()];
                    match &t.result {
                        Ok(r) => {
                            row.push(f4(r.statistic));
                            row.push(r.df.to_string());
                            row.push(p(r.p_value));
                            row.push(
                                r.ci_95
                                    .map_or(String::new(), |(l, h)| format!("({l:.3}, {h:.3})")),
                            );
                        }
                        Err(e) => row.extend([
                            format!("n/a: {e}"),
                            String::new(),
                            String::new(),
                            String::new(),
                        ]),
                    }
                    row
                })
                .collect();
            print!(
                "{}",
                render(&["kpi", "test", "statistic", "df", "p", "95% CI"], &table)
            );
        }
    }

    if !args.correlate.is_empty() {
        println!();
        println!("Correlations with KPI means");
        let rows: Vec<Vec<String>> = correlations
            .iter()
            .map(|c| {
                vec![
                    c.feature.clone(),
                    c.kpi.name().to_string(),
                    c.n.to_string(),
                    match &c.r {
                        Ok(r) => f3(*r),
                        Err(e) => format!("n/a: {e}"),
                    },
                ]
            })
            .collect();
        print!(
            "{}",
            render(&["feature", "kpi", "devices", "pearson r"], &rows)
        );
    }
    Ok(())
}

fn group_hurst(devices: &[&Device], kpi: usize) -> Option<(f64, f64, f64)> {
    let hs: Vec<f64> = devices
        .iter()
        .filter_map(|d| d.hurst[kpi].as_ref().ok().copied())
        .collect();
    let (m, _, lo, hi) = summary(&hs)?;
    Some((m, lo, hi))
}

struct GroupTest {
    kpi: Kpi,
    test: String,
    result: Result<TestResultF64, String>,
}

/// One-way ANOVA across all groups plus Welch tests for each pair of
/// groups, per KPI. Each group's sample pools its devices' series.
fn group_tests(groups: &BTreeMap<&str, Vec<&Device>>) -> Option<Vec<GroupTest>> {
    if groups.len() < 2 {
        return None;
    }
    let mut out = Vec::new();
    for (i, &kpi) in Kpi::ALL.iter().enumerate() {
        let pooled: Vec<(&str, Vec<f64>)> = groups
            .iter()
            .map(|(g, ds)| {
                (
                    *g,
                    ds.iter()
                        .flat_map(|d| d.kpis[i].values.iter().copied())
                        .collect(),
                )
            })
            .collect();
        let slices: Vec<&[f64]> = pooled.iter().map(|(_, v)| v.as_slice()).collect();
        out.push(GroupTest {
            kpi,
            test: "anova".into(),
            result: anova_oneway(&slices).map_err(|e| e.to_string()),
        });
        for a in 0..pooled.len() {
            for b in a + 1..pooled.len() {
                out.push(GroupTest {
                    kpi,
                    test: format!("welch {} vs {}", pooled[a].0, pooled[b].0),
                    result: t_test_two_sided(&pooled[a].1, &pooled[b].1, TTestKind::Welch)
                        .map_err(|e| e.to_string()),
                });
            }
        }
    }
    Some(out)
}

struct Correlation {
    feature: String,
    kpi: Kpi,
    n: usize,
    r: Result<f64, String>,
}

fn correlations(
    ctx: &Context,
    devices: &[Device],
    codes: &[String],
) -> CliResult<Vec<Correlation>> {
    let mut out = Vec::new();
    for code in codes {
        if ctx.taxonomy.feature(code).is_none() {
            return Err(input(format!("--correlate: unknown feature `{code}`")));
        }
        for (i, &kpi) in Kpi::ALL.iter().enumerate() {
            let (xs, ys): (Vec<f64>, Vec<f64>) = devices
                .iter()
                .filter_map(|d| {
                    let x = d.profile.as_ref()?.value(code)?;
                    let s = &d.kpis[i].values;
                    (!s.is_empty()).then(|| (x, mean(s)))
                })
                .unzip();
            out.push(Correlation {
                feature: code.clone(),
                kpi,
                n: xs.len(),
                r: pearson(&xs, &ys).map_err(|e| e.to_string()),
            });
        }
    }
    Ok(out)
}
