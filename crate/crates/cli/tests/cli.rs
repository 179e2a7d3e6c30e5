use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dscore::ahp::{ScenarioWeights, WeightMethod, WeightVector};
use dscore::model::ModelFile;
use dscore::responses::{write_responses, ExpertResponse};
use dscore::scoring::default_scenarios_source;
use dscore::taxonomy::default_taxonomy;
use tempfile::TempDir;

fn dscore(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dscore"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Fully answered response; `bias` tilts every sub-category pair, `cyclic`
/// makes the feature judgments intransitive.
fn response(id: &str, scenario: &str, bias: i8, cyclic: bool) -> ExpertResponse {
    let t = default_taxonomy();
    let mut r = ExpertResponse::new(id, scenario);
    r.kept_categories
        .extend(t.categories.iter().map(|c| c.code.clone()));
    r.kept_subcategories
        .extend(t.subcategory_codes().iter().map(|s| s.to_string()));
    let subs = t.subcategory_codes();
    for (i, a) in subs.iter().enumerate() {
        for b in &subs[i + 1..] {
            r.set_subcategory_judgment(&t, a, b, bias).unwrap();
        }
    }
    for s in t.subcategories() {
        for (i, a) in s.features.iter().enumerate() {
            for (j, b) in s.features.iter().enumerate().skip(i + 1) {
                let v = match (cyclic, (j - i) % 2) {
                    (false, _) => (i as i8 % 3) - 1,
                    (true, 1) => 5,
                    (true, _) => -5,
                };
                r.set_feature_judgment(&t, &a.code, &b.code, v).unwrap();
            }
        }
    }
    r
}

fn write_response_file(dir: &Path, responses: &[ExpertResponse]) -> PathBuf {
    let path = dir.join("responses.csv");
    let mut buf = Vec::new();
    write_responses(&mut buf, responses, &default_taxonomy()).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

#[test]
fn weights_cohort_after_cr_filter() {
    let dir = TempDir::new().unwrap();
    let mut rs: Vec<ExpertResponse> = (0..11)
        .map(|i| {
            response(
                &format!("r{i:02}"),
                "ddos_flooding",
                (i % 5) as i8 - 2,
                false,
            )
        })
        .collect();
    rs.push(response("x1", "ddos_flooding", 1, true));
    rs.push(response("x2", "ddos_flooding", -1, true));
    rs.push(response("other", "bot_scanning", 0, false));
    let file = write_response_file(dir.path(), &rs);

    let out = dscore(
        dir.path(),
        &[
            "--cr-threshold",
            "0.1",
            "weights",
            "--responses",
            path_str(&file),
            "--scenario",
            "ddos_flooding",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("cohort size: 11 of 13"), "{text}");
    assert!(text.contains("x1") && text.contains("dropped"));
    assert!(text.contains("agreement (sub-category): "));
    assert!(!text.contains("n/a"));

    let model = ModelFile::load(dir.path().join("ddos_flooding.model.toml")).unwrap();
    assert_eq!(model.weights.contributing_responses.len(), 11);
    assert_eq!(model.weights.mean_cr_per_response.len(), 13);
    assert!(model.weights.mean_cr_per_response["x1"] > 0.1);
    assert_eq!(model.taxonomy_version, default_taxonomy().version);
}

#[test]
fn weights_single_response_has_no_agreement() {
    let dir = TempDir::new().unwrap();
    let file = write_response_file(dir.path(), &[response("only", "bot_scanning", 2, false)]);
    let out = dscore(
        dir.path(),
        &[
            "weights",
            "--responses",
            path_str(&file),
            "--scenario",
            "bot_scanning",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("agreement (sub-category): n/a (fewer than 2 responses)"),
        "{text}"
    );
    assert!(text.contains("agreement (feature): n/a (fewer than 2 responses)"));
}

#[test]
fn weights_exit_codes() {
    let dir = TempDir::new().unwrap();
    let file = write_response_file(dir.path(), &[response("x1", "ddos_flooding", 0, true)]);
    let none = dscore(
        dir.path(),
        &[
            "weights",
            "--responses",
            path_str(&file),
            "--scenario",
            "bot_scanning",
        ],
    );
    assert_eq!(none.status.code(), Some(1));
    assert!(stderr(&none).contains("no responses"));

    let empty = dscore(
        dir.path(),
        &[
            "--cr-threshold",
            "0.1",
            "weights",
            "--responses",
            path_str(&file),
            "--scenario",
            "ddos_flooding",
        ],
    );
    assert_eq!(empty.status.code(), Some(3), "{}", stderr(&empty));
    assert!(!dir.path().join("ddos_flooding.model.toml").exists());
}

const FLOW_HEADER: &str =
    "start_time,duration_s,src_ip,dst_ip,src_port,dst_port,protocol,packets,bytes\n";
const DEVICE: &str = "192.168.1.20";

/// Hourly outbound UDP flows plus some inbound TCP, with a deterministic
/// wobble in the flow counts.
fn flows(hours: u32, seed: u32) -> String {
    let mut s = String::from(FLOW_HEADER);
    for h in 0..hours {
        let k = 1 + (h * 7 + seed * 3) % 5;
        for f in 0..k {
            let day = 1 + h / 24;
            let hour = h % 24;
            let peer = 10 + (h + f) % 4;
            let packets = 2 + (h * 13 + f * 5 + seed) % 11;
            writeln!(
                s,
                "2021-03-{day:02}T{hour:02}:{:02}:00Z,1.0,{DEVICE},8.8.8.{peer},5{f:04},53,udp,{packets},{}",
                f * 7,
                packets * 80
            )
            .unwrap();
        }
        let packets = 3 + (h * 5 + seed) % 7;
        writeln!(
            s,
            "2021-03-{:02}T{:02}:30:00Z,0.5,1.1.1.{},{DEVICE},443,40000,tcp,{packets},{}",
            1 + h / 24,
            h % 24,
            1 + h % 3,
            packets * 100
        )
        .unwrap();
    }
    s
}

#[test]
fn extract_merges_and_reports_missing_ccom() {
    let dir = TempDir::new().unwrap();
    let flow_file = dir.path().join("flows.csv");
    let mut text = flows(3, 0);
    text.push_str("2021-03-01T01:00:00Z,1.0,10.0.0.1,10.0.0.2,1,2,tcp,1,60\n");
    fs::write(&flow_file, text).unwrap();
    let static_file = dir.path().join("static.toml");
    fs::write(
        &static_file,
        "model_id = \"camera/Acme/XC-100\"\n[static]\nNSNS = 5\n",
    )
    .unwrap();

    let out = dscore(
        dir.path(),
        &[
            "extract",
            "--flows",
            path_str(&flow_file),
            "--device-ip",
            DEVICE,
            "--static",
            path_str(&static_file),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = stdout(&out);
    assert!(report.contains("1 rows skipped"), "{report}");
    let line = report
        .lines()
        .find(|l| l.trim_start().starts_with("CCOM"))
        .unwrap();
    assert!(line.contains("24"), "{line}");

    let saved = fs::read_to_string(dir.path().join("camera_Acme_XC-100.profile.toml")).unwrap();
    let p = dscore::traffic::DeviceProfile::from_toml_str(&saved).unwrap();
    assert_eq!(p.value("NSNS"), Some(5.0));
    assert_eq!(p.value("UDPO"), Some(1.0));
    assert!(p.missing.contains_key("CCOM"));
    assert_eq!(
        p.taxonomy_version.as_deref(),
        Some(default_taxonomy().version.as_str())
    );
    assert_eq!(p.tool_version.as_deref(), Some(dscore::TOOL_VERSION));
}

#[test]
fn extract_rejects_dynamic_feature_in_static_file() {
    let dir = TempDir::new().unwrap();
    let flow_file = dir.path().join("flows.csv");
    fs::write(&flow_file, flows(2, 0)).unwrap();
    let static_file = dir.path().join("static.toml");
    fs::write(&static_file, "model_id = \"x\"\n[static]\nIATO = 3.0\n").unwrap();
    let out = dscore(
        dir.path(),
        &[
            "extract",
            "--flows",
            path_str(&flow_file),
            "--device-ip",
            DEVICE,
            "--static",
            path_str(&static_file),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("IATO"), "{}", stderr(&out));
}

/// Reference scores of seven devices under four scenarios.
const DEVICES: [(&str, &str, [f64; 4]); 7] = [
    ("camera", "PT-737E", [0.462, 0.426, 0.493, 0.470]),
    ("camera", "PT-838", [0.429, 0.408, 0.478, 0.446]),
    ("camera", "XCS7-1002", [0.477, 0.460, 0.502, 0.489]),
    ("camera", "XCS7-1003", [0.433, 0.418, 0.466, 0.461]),
    ("doorbell", "Danmini WF 720P", [0.445, 0.418, 0.460, 0.449]),
    ("doorbell", "Ennio Bell", [0.470, 0.429, 0.498, 0.480]),
    (
        "baby monitor",
        "Philips B120N/10",
        [0.424, 0.403, 0.437, 0.398],
    ),
];
const SCENARIOS: [&str; 4] = [
    "ddos_flooding",
    "bot_scanning",
    "data_exfiltration",
    "cnc_communication",
];
const CARRIERS: [&str; 4] = ["ENCI", "ENCO", "UDPI", "UDPO"];

/// Each scenario model puts all weight on one unit-range feature with
/// δ = +1, and each device's value for it is chosen so the normalized
/// value (and so the score) equals the reference number.
fn score_fixture(dir: &Path) -> (Vec<PathBuf>, Vec<PathBuf>, PathBuf) {
    let t = default_taxonomy();
    let mut config = default_scenarios_source().to_string();
    for c in CARRIERS {
        config = config.replace(&format!("{c} = -1"), &format!("{c} = 1"));
    }
    let config_path = dir.join("scenarios.toml");
    fs::write(&config_path, config).unwrap();

    let codes: Vec<String> = t.feature_codes().iter().map(|s| s.to_string()).collect();
    let subs: Vec<String> = t
        .subcategory_codes()
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut models = Vec::new();
    for (scenario, carrier) in SCENARIOS.iter().zip(CARRIERS) {
        let raw = codes
            .iter()
            .map(|c| if c == carrier { 1.0 } else { 0.0 })
            .collect();
        let weights = ScenarioWeights {
            scenario: scenario.to_string(),
            feature_weights: WeightVector::normalized(codes.clone(), raw),
            subcategory_weights: WeightVector::normalized(subs.clone(), vec![1.0; subs.len()]),
            contributing_responses: vec!["fixture".into()],
            mean_cr_per_response: [("fixture".to_string(), 0.0)].into(),
            cr_threshold: None,
        };
        let path = dir.join(format!("{scenario}.model.toml"));
        ModelFile::new(weights, &t, WeightMethod::Eigenvector, false)
            .save(&path)
            .unwrap();
        models.push(path);
    }

    let mut profiles = Vec::new();
    for (i, (kind, name, scores)) in DEVICES.iter().enumerate() {
        let mut text = format!(
            "model_id = \"{kind}/{name}\"\ntaxonomy_version = \"{}\"\n\n[dynamic]\n",
            t.version
        );
        for (carrier, d) in CARRIERS.iter().zip(scores) {
            // α = 10 / (β x_max) = 2 for unit-range features at β = 5.
            writeln!(text, "{carrier} = {:?}", d.atanh() / 2.0).unwrap();
        }
        let path = dir.join(format!("device{i}.profile.toml"));
        fs::write(&path, text).unwrap();
        profiles.push(path);
    }
    (models, profiles, config_path)
}

fn score_args<'a>(
    config: &'a Path,
    models: &'a [PathBuf],
    profiles: &'a [PathBuf],
) -> Vec<&'a str> {
    let mut args = vec!["--scenario-config", path_str(config), "score"];
    for m in models {
        args.extend(["--model", path_str(m)]);
    }
    for p in profiles {
        args.extend(["--profile", path_str(p)]);
    }
    args
}

#[test]
fn score_matrix_marks_maximin_winner_per_type() {
    let dir = TempDir::new().unwrap();
    let (models, profiles, config) = score_fixture(dir.path());
    let out = dscore(dir.path(), &score_args(&config, &models, &profiles));
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);

    for (kind, name, scores) in DEVICES {
        for (scenario, d) in SCENARIOS.iter().zip(scores) {
            let line = format!("{kind}/{name} {scenario} {d:.3} ");
            assert!(text.contains(&line), "missing `{line}` in\n{text}");
        }
    }
    let winners: Vec<&str> = text
        .lines()
        .filter(|l| l.trim_end().ends_with('*'))
        .map(|l| l.split("  ").next().unwrap())
        .collect();
    assert_eq!(
        winners,
        [
            "baby monitor/Philips B120N/10",
            "camera/XCS7-1002",
            "doorbell/Ennio Bell"
        ]
    );
    let winner_rows: Vec<&str> = text
        .lines()
        .filter(|l| l.trim_end().ends_with('*'))
        .collect();
    for (row, min) in winner_rows.iter().zip(["0.398", "0.460", "0.429"]) {
        assert!(row.contains(min), "{row}");
    }
}

#[test]
fn score_rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (models, profiles, config) = score_fixture(dir.path());
    let args = score_args(&config, &models, &profiles);
    assert!(dscore(dir.path(), &args).status.success());
    let first = fs::read(dir.path().join("scores.txt")).unwrap();
    assert!(dscore(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("scores.txt")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains(&format!("# tool_version = {}", dscore::TOOL_VERSION)));
    assert!(text.contains("# taxonomy_version = "));
}

#[test]
fn score_single_pair_prints_one_card() {
    let dir = TempDir::new().unwrap();
    let (models, profiles, config) = score_fixture(dir.path());
    let out = dscore(
        dir.path(),
        &score_args(&config, &models[..1], &profiles[2..3]),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("camera/XCS7-1002 ddos_flooding 0.477 D"),
        "{text}"
    );
    assert!(!text.contains("maximin"));
}

#[test]
fn score_rejects_taxonomy_mismatch() {
    let dir = TempDir::new().unwrap();
    let (models, profiles, config) = score_fixture(dir.path());
    let version = default_taxonomy().version;

    let stale = dir.path().join("stale.profile.toml");
    let text = fs::read_to_string(&profiles[0]).unwrap();
    fs::write(&stale, text.replace(&format!("\"{version}\""), "\"0.9\"")).unwrap();
    let out = dscore(dir.path(), &score_args(&config, &models, &[stale]));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("0.9"));

    let model = dir.path().join("stale.model.toml");
    let text = fs::read_to_string(&models[0]).unwrap();
    fs::write(
        &model,
        text.replace(
            &format!("taxonomy_version = \"{version}\""),
            "taxonomy_version = \"0.9\"",
        ),
    )
    .unwrap();
    let out = dscore(dir.path(), &score_args(&config, &[model], &profiles));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn score_refuses_thin_profile() {
    let dir = TempDir::new().unwrap();
    let (models, _, config) = score_fixture(dir.path());
    let thin = dir.path().join("thin.profile.toml");
    fs::write(&thin, "model_id = \"thin\"\n[static]\nNSNS = 1\n").unwrap();
    let out = dscore(dir.path(), &score_args(&config, &models[..1], &[thin]));
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

fn predictability(dir: &Path, devices: &[(&str, &str)]) -> Output {
    let mut args = vec![
        "--format".to_string(),
        "json".to_string(),
        "predictability".to_string(),
    ];
    for (group, file) in devices {
        args.push("--device".into());
        args.push(format!("{group},{DEVICE},{}", dir.join(file).display()));
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    dscore(dir, &refs)
}

#[test]
fn predictability_identical_groups_give_p_one() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.csv"), flows(120, 1)).unwrap();
    fs::write(dir.path().join("b.csv"), flows(120, 1)).unwrap();
    let out = predictability(dir.path(), &[("g1", "a.csv"), ("g2", "b.csv")]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let tests = v["group_tests"].as_array().unwrap();
    let anova: Vec<_> = tests.iter().filter(|t| t["test"] == "anova").collect();
    assert_eq!(anova.len(), 4);
    for t in anova {
        assert_eq!(t["p_value"].as_f64(), Some(1.0), "{t}");
        assert_eq!(t["statistic"].as_f64(), Some(0.0));
    }
    let h = &v["devices"][0]["kpis"][1];
    assert_eq!(h["kpi"], "hourly_flows");
    assert!(h["hurst"].is_number(), "{h}");
}

#[test]
fn predictability_single_device_skips_group_tests() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cam.csv"), flows(30, 2)).unwrap();
    let out = dscore(
        dir.path(),
        &[
            "predictability",
            "--device",
            &format!("cameras,{DEVICE},{}", dir.path().join("cam.csv").display()),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("skipped: fewer than 2 groups"), "{text}");
    let header = text
        .lines()
        .find(|l| l.starts_with("device") && l.contains("hourly_flows"))
        .unwrap();
    let kpis: Vec<&str> = header.split_whitespace().skip(2).collect();
    assert_eq!(
        kpis,
        [
            "flow_incoming_packets",
            "hourly_flows",
            "hourly_unique_dst_ips",
            "hourly_unique_dst_ports"
        ]
    );
    // 30 hours is too short for an estimate; the reason is shown.
    assert!(text.contains("n/a cam hourly_flows"), "{text}");
}

#[test]
fn predictability_correlates_static_features() {
    let dir = TempDir::new().unwrap();
    let mut args = vec![
        "predictability".to_string(),
        "--correlate".into(),
        "NSNS".into(),
    ];
    for i in 0..4u32 {
        fs::write(dir.path().join(format!("d{i}.csv")), flows(24, i)).unwrap();
        fs::write(
            dir.path().join(format!("d{i}.toml")),
            format!("model_id = \"d{i}\"\n[static]\nNSNS = {}\n", i + 1),
        )
        .unwrap();
        args.push("--device".into());
        args.push(format!(
            "g{},{DEVICE},{},{}",
            i % 2,
            dir.path().join(format!("d{i}.csv")).display(),
            dir.path().join(format!("d{i}.toml")).display()
        ));
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = dscore(dir.path(), &refs);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("NSNS")).collect();
    assert_eq!(rows.len(), 4, "{text}");
    assert!(rows
        .iter()
        .all(|r| r.split_whitespace().nth(2) == Some("4")));
}

#[test]
fn validate_taxonomy_reports_counts() {
    let dir = TempDir::new().unwrap();
    let out = dscore(dir.path(), &["validate-taxonomy"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("3 categories, 7 sub-categories, 30 features"),
        "{text}"
    );
    assert!(text.contains("(0,1000)"));
    assert!(text.contains("scenario config: ok"));

    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        default_scenarios_source().replace("BATT = 1", "BATT = 2"),
    )
    .unwrap();
    let out = dscore(
        dir.path(),
        &["--scenario-config", path_str(&bad), "validate-taxonomy"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn filtering_stats_prints_average_row() {
    let dir = TempDir::new().unwrap();
    let mut partial = ExpertResponse::new("p", "bot_scanning");
    partial
        .kept_categories
        .extend(["HW", "NT"].map(String::from));
    partial
        .kept_subcategories
        .extend(["SNA", "RSR", "INB", "OUT", "SRD"].map(String::from));
    let file = write_response_file(
        dir.path(),
        &[
            response("a", "ddos_flooding", 0, false),
            response("b", "bot_scanning", 0, false),
            partial,
        ],
    );
    let out = dscore(
        dir.path(),
        &["filtering-stats", "--responses", path_str(&file)],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let avg: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("Average"))
        .unwrap()
        .split_whitespace()
        .collect();
    // n, HW, SB, NT, ...: SB kept by 1 of 2 bot_scanning respondents.
    assert_eq!(&avg[1..5], ["3", "100", "75", "100"]);
}

#[test]
fn import_converts_wide_export() {
    let dir = TempDir::new().unwrap();
    let wide = dir.path().join("wide.csv");
    fs::write(
        &wide,
        "response_id,scenario,keep:NT,keep:OUT,keep:SRD,cmp:SRD:OUT,demo:submission\n7,bot_scanning,1,1,1,4,partial\n",
    )
    .unwrap();
    let out = dscore(dir.path(), &["import-responses", "--wide", path_str(&wide)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("1 response(s) (1 partial)"));
    let long = fs::read_to_string(dir.path().join("responses.csv")).unwrap();
    let rs = dscore::responses::parse_responses(long.as_bytes(), &default_taxonomy()).unwrap();
    assert_eq!(
        rs[0].subcategory_judgments[&dscore::responses::PairKey::new("OUT", "SRD")],
        -4
    );
}
