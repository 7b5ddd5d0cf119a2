use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
}

/// A finished computation: what to write and whether it is a finding.
pub struct Report {
    pub result: Value,
    /// CSV body; falls back to `key,value` rows of the result.
    pub csv: Option<String>,
    /// `false` when the run found a violation or counterexample.
    pub pass: bool,
}

impl Report {
    pub fn new<T: Serialize>(result: &T, pass: bool) -> Result<Report> {
        Ok(Report {
            result: serde_json::to_value(result)?,
            csv: None,
            pass,
        })
    }

    pub fn with_csv(mut self, csv: String) -> Report {
        self.csv = Some(csv);
        self
    }
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn key_value_csv(v: &Value) -> String {
    let mut s = String::from("key,value\n");
    if let Value::Object(map) = v {
        for (k, val) in map {
            let text = val.to_string();
            if text.contains(',') || text.contains('"') {
                s.push_str(&format!("{k},\"{}\"\n", text.replace('"', "\"\"")));
            } else {
                s.push_str(&format!("{k},{text}\n"));
            }
        }
    }
    s
}

pub fn render(command: &str, config: &Value, report: &Report, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let doc = json!({
                "command": command,
                "config": config,
                "status": status(report.pass),
                "result": report.result,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let body = report
                .csv
                .clone()
                .unwrap_or_else(|| key_value_csv(&report.result));
            format!(
                "# command: {command}\n# config: {}\n# status: {}\n{body}",
                serde_json::to_string(config)?,
                status(report.pass)
            )
        }
    })
}

pub fn emit(text: &str, out: &OutputArgs) -> Result<()> {
    match &out.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_fallback_quotes_commas() {
        let s = key_value_csv(&json!({"a": 1, "b": [1, 2]}));
        assert_eq!(s, "key,value\na,1\nb,\"[1,2]\"\n");
    }
}
