//! Final report and manifest chain verification.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::stages::{artifacts as a, manifest_path, Stage, EXTERNAL_PREFIX};
use crisismine_core::corpus::PipelineManifest;
use crisismine_core::digest::{sha256_hex, write_artifact};
use crisismine_core::Error;

/// Loads every manifest present under `out_dir/manifests`, in stage order.
pub fn load_manifests(out_dir: &Path) -> CliResult<Vec<(Stage, PipelineManifest)>> {
    let mut out = Vec::new();
    for stage in Stage::ALL {
        let path = manifest_path(out_dir, stage);
        if !path.is_file() {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let m: PipelineManifest = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Chain(vec![format!("{}: unreadable manifest: {e}", path.display())]))?;
        out.push((stage, m));
    }
    Ok(out)
}

/// Checks that every recorded output still has its recorded digest and that
/// every stage consumed exactly the bytes its producer recorded.
pub fn verify_chain(out_dir: &Path, manifests: &[(Stage, PipelineManifest)]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut producers: BTreeMap<&str, (Stage, &str)> = BTreeMap::new();
    for (stage, m) in manifests {
        let mut listing = String::new();
        for (rel, digest) in &m.outputs {
            listing.push_str(&format!("{rel}\t{digest}\n"));
            if rel.starts_with(EXTERNAL_PREFIX) {
                continue;
            }
            producers.insert(rel, (*stage, digest));
            match std::fs::read(out_dir.join(rel)) {
                Ok(bytes) if sha256_hex(&bytes) == *digest => {}
                Ok(_) => problems.push(format!("{rel} changed since `{stage}` wrote it")),
                Err(_) => problems.push(format!("{rel} recorded by `{stage}` is missing")),
            }
        }
        if sha256_hex(listing.as_bytes()) != m.content_digest {
            problems.push(format!("content digest of the `{stage}` manifest does not match its outputs"));
        }
    }
    for (stage, m) in manifests {
        for (rel, digest) in &m.inputs {
            if rel.starts_with(EXTERNAL_PREFIX) {
                continue;
            }
            match producers.get(rel.as_str()) {
                Some((_, d)) if d == digest => {}
                Some((p, _)) => problems.push(format!("`{stage}` read a different {rel} than `{p}` last wrote; rerun `{stage}`")),
                None => problems.push(format!("`{stage}` read {rel}, which no recorded stage produced")),
            }
        }
    }
    problems
}

fn read_json(out_dir: &Path, rel: &str) -> Option<Value> {
    let bytes = std::fs::read(out_dir.join(rel)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

fn fmt_num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{x:.0}"),
        Some(x) => format!("{x:.3}"),
        None => v.to_string(),
    }
}

fn markdown(report: &Value) -> String {
    let mut md = String::from("# crisismine run report\n\n## Stages\n\n| stage | in | out | content digest |\n|---|---:|---:|---|\n");
    if let Some(stages) = report["stages"].as_array() {
        for s in stages {
            let digest = s["content_digest"].as_str().unwrap_or("");
            let _ = writeln!(
                md,
                "| {} | {} | {} | `{}` |",
                s["stage"].as_str().unwrap_or(""),
                s["input_count"],
                s["output_count"],
                &digest[..digest.len().min(16)]
            );
        }
    }
    md.push_str("\nChain check: ");
    md.push_str(if report["chain_ok"].as_bool() == Some(true) { "ok\n" } else { "FAILED\n" });

    if let Some(c) = report.get("cleaning") {
        md.push_str("\n## Cleaning\n\n| corpus | raw | clean |\n|---|---:|---:|\n");
        for (name, r) in c.as_object().into_iter().flatten() {
            let _ = writeln!(md, "| {name} | {} | {} |", r["raw"], r["clean"]);
        }
    }
    if let Some(t) = report.get("threshold") {
        md.push_str("\n## Threshold\n\n| partition | in | out | proportion in |\n|---:|---:|---:|---:|\n");
        for p in t["per_partition_stats"].as_array().into_iter().flatten() {
            let _ = writeln!(md, "| {} | {} | {} | {} |", p["index"], p["n_in"], p["n_out"], fmt_num(&p["proportion_in"]));
        }
        let cut = match &t["cut_partition"] {
            Value::Null => "none".to_string(),
            v => v.to_string(),
        };
        let _ = writeln!(
            md,
            "\nCut at partition {cut}; {} segments retained (ranks up to {}).",
            t["retained_ids"].as_array().map_or(0, Vec::len),
            t["retained_rank_max"]
        );
    }
    if let Some(d) = report.get("datasets") {
        md.push_str("\n## Datasets\n\n");
        for (k, v) in d.as_object().into_iter().flatten() {
            let _ = writeln!(md, "- {k}: {}", fmt_num(v));
        }
    }
    if let Some(r) = report.get("readability") {
        md.push_str("\n## Readability (mean)\n\n| set | FRE | FKGL | SMOG | CLI | ARI | Dale-Chall |\n|---|---:|---:|---:|---:|---:|---:|\n");
        let row = |md: &mut String, name: &str, v: &Value| {
            let _ = writeln!(
                md,
                "| {name} | {} | {} | {} | {} | {} | {} |",
                fmt_num(&v["fre"]["mean"]),
                fmt_num(&v["fkgl"]["mean"]),
                fmt_num(&v["smog"]["mean"]),
                fmt_num(&v["coleman_liau"]["mean"]),
                fmt_num(&v["ari"]["mean"]),
                fmt_num(&v["dale_chall"]["mean"])
            );
        };
        if let Some(v) = r.get("retained_target") {
            row(&mut md, "retained (en)", v);
        }
        if let Some(d) = r.get("dpo") {
            row(&mut md, "dpo chosen", &d["chosen"]);
            row(&mut md, "dpo rejected", &d["rejected"]);
            let _ = writeln!(md, "\nMean FRE gain of chosen over rejected: {}", fmt_num(&d["fre_delta_mean"]));
        }
    }
    if let Some(e) = report.get("evaluation") {
        md.push_str("\n## Automatic metrics\n\n");
        for (k, v) in e["scores"].as_object().into_iter().flatten() {
            let _ = writeln!(md, "- {k}: {}", fmt_num(v));
        }
    }
    if let Some(m) = report.get("mqm") {
        md.push_str("\n## Human evaluation\n\n| system | segments | mean DA | mean MQM | errors |\n|---|---:|---:|---:|---:|\n");
        for s in m["systems"].as_array().into_iter().flatten() {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} |",
                s["system"].as_str().unwrap_or(""),
                s["segments"],
                fmt_num(&s["mean_da"]),
                fmt_num(&s["mean_mqm"]),
                s["total_errors"]
            );
        }
    }
    md
}

/// Verifies the manifest chain and writes `report.md` and `report.json`.
pub fn run(out_dir: &Path) -> CliResult<PipelineManifest> {
    let manifests: Vec<_> = load_manifests(out_dir)?
        .into_iter()
        .filter(|(s, _)| *s != Stage::Report)
        .collect();
    if manifests.is_empty() {
        return Err(CliError::Dependency {
            stage: Stage::Report,
            artifact: "manifests/*.json".into(),
            producer: Stage::Clean,
        });
    }
    let problems = verify_chain(out_dir, &manifests);
    if !problems.is_empty() {
        return Err(CliError::Chain(problems));
    }

    let mut m = PipelineManifest::new(Stage::Report.as_str());
    let mut report = serde_json::Map::new();
    report.insert(
        "stages".into(),
        manifests
            .iter()
            .map(|(s, man)| {
                json!({
                    "stage": s.as_str(),
                    "input_count": man.input_count,
                    "output_count": man.output_count,
                    "content_digest": man.content_digest,
                    "parameters": man.parameters,
                    "counts": man.counts,
                    "warnings": man.warnings,
                })
            })
            .collect(),
    );
    report.insert("chain_ok".into(), Value::Bool(true));
    for (_, man) in &manifests {
        m.inputs.insert(
            format!("manifest:{}", man.stage_name),
            man.content_digest.clone(),
        );
    }
    let mut include = |key: &str, rel: &str, m: &mut PipelineManifest| {
        if let Some(v) = read_json(out_dir, rel) {
            report.insert(key.into(), v);
            m.inputs.insert(rel.to_string(), manifests_digest(&manifests, rel));
        }
    };
    include("cleaning", a::CLEAN_REPORT, &mut m);
    include("threshold", a::THRESHOLD, &mut m);
    include("readability", a::READABILITY, &mut m);
    include("evaluation", a::SCORES, &mut m);
    include("mqm", a::MQM_SUMMARY, &mut m);
    let mut datasets = serde_json::Map::new();
    for (stage, man) in &manifests {
        if matches!(stage, Stage::BuildSft | Stage::BuildDpo) {
            for (k, v) in &man.counts {
                datasets.insert(format!("{stage}.{k}"), json!(v));
            }
            if let Some(g) = man.parameters.get("mean_fre_gain") {
                datasets.insert(format!("{stage}.mean_fre_gain"), json!(g.parse::<f64>().ok()));
            }
        }
    }
    if !datasets.is_empty() {
        report.insert("datasets".into(), Value::Object(datasets));
    }
    let report = Value::Object(report);

    let mut json_bytes = serde_json::to_vec_pretty(&report).map_err(|e| Error::Data(e.to_string()))?;
    json_bytes.push(b'\n');
    let md = markdown(&report);
    for (rel, bytes) in [(a::REPORT_JSON, json_bytes.as_slice()), (a::REPORT_MD, md.as_bytes())] {
        let d = write_artifact(&out_dir.join(rel), bytes)?;
        m.outputs.insert(rel.to_string(), d);
    }
    m.input_count = manifests.len() as u64;
    m.output_count = 2;
    let mut listing = String::new();
    for (k, d) in &m.outputs {
        listing.push_str(&format!("{k}\t{d}\n"));
    }
    m.content_digest = sha256_hex(listing.as_bytes());
    let mut bytes = serde_json::to_vec_pretty(&m).map_err(|e| Error::Data(e.to_string()))?;
    bytes.push(b'\n');
    write_artifact(&manifest_path(out_dir, Stage::Report), &bytes)?;
    Ok(m)
}

fn manifests_digest(manifests: &[(Stage, PipelineManifest)], rel: &str) -> String {
    manifests
        .iter()
        .find_map(|(_, m)| m.outputs.get(rel).cloned())
        .unwrap_or_default()
}
