//! Reference evaluator for the line protocol: linear objectives over choice
//! labels, rejection predicates, and fault injection for testing.
//!
//! ```text
//! theta-dse-stub-eval --spec '{"objectives":{"score":{"bias":1.0}}}'
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::Parser;
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(about = "Stub evaluator speaking the theta-dse line protocol")]
struct Args {
    /// Stub behaviour as an inline JSON document.
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    /// Stub behaviour read from a JSON file.
    #[arg(long)]
    spec_file: Option<std::path::PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Linear {
    #[serde(default)]
    bias: f64,
    /// dimension -> choice label -> contribution
    #[serde(default)]
    terms: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Rule {
    dim: String,
    choice: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StubSpec {
    #[serde(default)]
    objectives: BTreeMap<String, Linear>,
    /// Designs answered with `{"error":"rejected"}`.
    #[serde(default)]
    reject: Vec<Rule>,
    /// Designs that never get an answer.
    #[serde(default)]
    hang: Vec<Rule>,
    /// Designs answered under a wrong id.
    #[serde(default)]
    wrong_id: Vec<Rule>,
    /// Designs answered with a line that is not JSON.
    #[serde(default)]
    malformed: Vec<Rule>,
    /// Exit with status 3 on receiving request number `crash_after` (0-based).
    #[serde(default)]
    crash_after: Option<u64>,
    /// Delay before every answer.
    #[serde(default)]
    delay_ms: u64,
    /// Designs answered only after an extra `slow_ms`.
    #[serde(default)]
    slow: Vec<Rule>,
    #[serde(default)]
    slow_ms: u64,
    #[serde(default)]
    refuse_handshake: bool,
}

fn matches(rules: &[Rule], design: &BTreeMap<String, String>) -> bool {
    rules.iter().any(|r| design.get(&r.dim) == Some(&r.choice))
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let spec: StubSpec = match (&args.spec, &args.spec_file) {
        (Some(s), _) => serde_json::from_str(s).context("parsing --spec")?,
        (None, Some(p)) => serde_json::from_str(&std::fs::read_to_string(p)?).context("parsing --spec-file")?,
        (None, None) => StubSpec::default(),
    };
    let stdin = std::io::stdin();
    let mut out = std::io::stdout().lock();
    let mut lines = stdin.lock().lines();

    let hello: Value = serde_json::from_str(&lines.next().context("no handshake")??)?;
    if hello["protocol"] != "theta-dse-eval" || hello["version"] != 1 {
        bail!("unexpected handshake {hello}");
    }
    if spec.refuse_handshake {
        writeln!(out, "{}", json!({"ok": false, "error": "refused by configuration"}))?;
        return Ok(());
    }
    writeln!(out, "{}", json!({"ok": true}))?;
    out.flush()?;

    for (n, line) in lines.enumerate() {
        let line = line?;
        if spec.crash_after == Some(n as u64) {
            std::process::exit(3);
        }
        let req: Value = serde_json::from_str(&line)?;
        let id = req["id"].as_u64().context("request without id")?;
        let design: BTreeMap<String, String> = serde_json::from_value(req["design"].clone())?;
        if spec.delay_ms > 0 {
            std::thread::sleep(Duration::from_millis(spec.delay_ms));
        }
        if matches(&spec.slow, &design) {
            std::thread::sleep(Duration::from_millis(spec.slow_ms));
        }
        let reply = if matches(&spec.hang, &design) {
            continue;
        } else if matches(&spec.malformed, &design) {
            "this is not json".to_string()
        } else if matches(&spec.wrong_id, &design) {
            json!({"id": id + 1000, "objectives": {}}).to_string()
        } else if matches(&spec.reject, &design) {
            json!({"id": id, "error": "rejected"}).to_string()
        } else {
            let objectives: BTreeMap<&str, f64> = spec
                .objectives
                .iter()
                .map(|(name, lin)| {
                    let v = lin.bias
                        + design
                            .iter()
                            .filter_map(|(d, c)| lin.terms.get(d).and_then(|t| t.get(c)))
                            .sum::<f64>();
                    (name.as_str(), v)
                })
                .collect();
            json!({"id": id, "objectives": objectives}).to_string()
        };
        writeln!(out, "{reply}")?;
        out.flush()?;
    }
    Ok(())
}
