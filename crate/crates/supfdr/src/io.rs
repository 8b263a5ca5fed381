//! CSV ingestion and emission, run configuration, and the stream runner.
//!
//! Input streams are CSV files with a header containing `index` and either
//! `e_value` or `p_value`, plus optional `is_null` and `deadline` columns.
//! Indices must be contiguous from 1. Decision logs are CSV with a
//! versioned schema comment; floats are written in shortest round-trip
//! form so emit → ingest reproduces a stream bit for bit.

use crate::error::{Error, Result};
use crate::gamma::{GammaRule, GammaSequence};
use crate::registry::{build_procedure, is_offline};
use crate::stream::{Deadline, Evidence, EvidenceKind, Observation, RejectionRecord};
use crate::{baselines, donation};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Schema tag written as the first comment line of every decision log.
pub const DECISION_LOG_SCHEMA: &str = "supfdr decision log v1";

/// Full configuration of a `run` invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub procedure: String,
    pub delta: f64,
    pub gamma: GammaRule,
    pub input: PathBuf,
    /// Output file; stdout when absent.
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub evidence: EvidenceKind,
    /// Name of the deadline column (defaults to `deadline`).
    pub deadline_column: Option<String>,
    /// Anomaly windows file: CSV of inclusive (start_index, end_index).
    pub windows: Option<PathBuf>,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" => Some(true),
        "0" | "false" | "f" | "no" => Some(false),
        _ => None,
    }
}

/// Reads an observation stream. Indices must start at 1 and increase by 1;
/// missing, NaN, or out-of-range evidence is a parse error carrying the
/// 1-based data row.
pub fn ingest_csv(
    path: &Path,
    kind: EvidenceKind,
    deadline_column: Option<&str>,
) -> Result<Vec<Observation>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Parse {
            row: 0,
            msg: format!("cannot open {}: {e}", path.display()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            msg: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let idx_col = col("index").ok_or_else(|| Error::Parse {
        row: 0,
        msg: "missing required column `index`".into(),
    })?;
    let evidence_name = match kind {
        EvidenceKind::EValue => "e_value",
        EvidenceKind::PValue => "p_value",
    };
    let ev_col = col(evidence_name).ok_or_else(|| Error::Parse {
        row: 0,
        msg: format!("missing required column `{evidence_name}`"),
    })?;
    let null_col = col("is_null");
    let deadline_name = deadline_column.unwrap_or("deadline");
    let dl_col = col(deadline_name);
    if deadline_column.is_some() && dl_col.is_none() {
        return Err(Error::Parse {
            row: 0,
            msg: format!("missing deadline column `{deadline_name}`"),
        });
    }

    let mut out = Vec::new();
    for (row0, record) in reader.records().enumerate() {
        let row = row0 + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        let get = |c: usize| record.get(c).unwrap_or("").trim();
        let index: usize = get(idx_col).parse().map_err(|_| Error::Parse {
            row,
            msg: format!("bad index `{}`", get(idx_col)),
        })?;
        if index != row {
            return Err(Error::Parse {
                row,
                msg: format!("non-contiguous index {index} (expected {row})"),
            });
        }
        let raw = get(ev_col);
        if raw.is_empty() {
            return Err(Error::Parse {
                row,
                msg: format!("missing {evidence_name}"),
            });
        }
        let value: f64 = raw.parse().map_err(|_| Error::Parse {
            row,
            msg: format!("bad {evidence_name} `{raw}`"),
        })?;
        let evidence = match kind {
            EvidenceKind::EValue => Evidence::EValue(value),
            EvidenceKind::PValue => Evidence::PValue(value),
        };
        let is_null = match null_col {
            Some(c) if !get(c).is_empty() => Some(parse_bool(get(c)).ok_or_else(|| {
                Error::Parse {
                    row,
                    msg: format!("bad is_null `{}`", get(c)),
                }
            })?),
            _ => None,
        };
        let deadline = match dl_col {
            Some(c) if !get(c).is_empty() => {
                let s = get(c);
                if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("never") {
                    Some(Deadline::Never)
                } else {
                    let d: usize = s.parse().map_err(|_| Error::Parse {
                        row,
                        msg: format!("bad deadline `{s}`"),
                    })?;
                    Some(Deadline::At(d))
                }
            }
            _ => None,
        };
        let obs = Observation::new(index, evidence, is_null, deadline).map_err(|e| {
            Error::Parse {
                row,
                msg: e.to_string(),
            }
        })?;
        out.push(obs);
    }
    Ok(out)
}

/// Writes a stream in the ingestable format with shortest round-trip floats.
pub fn emit_csv<W: Write>(w: &mut W, observations: &[Observation]) -> Result<()> {
    let kind = observations
        .first()
        .map(|o| o.evidence.kind())
        .unwrap_or(EvidenceKind::EValue);
    let name = match kind {
        EvidenceKind::EValue => "e_value",
        EvidenceKind::PValue => "p_value",
    };
    writeln!(w, "index,{name},is_null,deadline")?;
    for o in observations {
        let v = match o.evidence {
            Evidence::EValue(e) => e,
            Evidence::PValue(p) => p,
        };
        let nul = match o.is_null {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        let dl = match o.deadline {
            Some(Deadline::At(d)) => d.to_string(),
            Some(Deadline::Never) => "inf".to_string(),
            None => String::new(),
        };
        writeln!(w, "{},{},{},{}", o.index, v, nul, dl)?;
    }
    Ok(())
}

/// Parses a custom γ file: CSV with header `t,gamma`, contiguous rows from
/// t = 1, and a required comment line `# tail=<default|zero>` naming the
/// rule that continues the sequence past the listed values.
pub fn read_gamma_file(path: &Path) -> Result<GammaRule> {
    let text = std::fs::read_to_string(path)?;
    let mut tail: Option<GammaRule> = None;
    let mut values = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(name) = rest.strip_prefix("tail=") {
                tail = Some(match name.trim() {
                    "default" => GammaRule::Default,
                    "zero" => GammaRule::Zero,
                    other => {
                        return Err(Error::Parse {
                            row: lineno + 1,
                            msg: format!("unknown tail rule `{other}`"),
                        })
                    }
                });
            }
            continue;
        }
        if !saw_header {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["t", "gamma"] {
                return Err(Error::Parse {
                    row: lineno + 1,
                    msg: "gamma file header must be `t,gamma`".into(),
                });
            }
            saw_header = true;
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let t: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                row: lineno + 1,
                msg: "bad t".into(),
            })?;
        let g: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                row: lineno + 1,
                msg: "bad gamma".into(),
            })?;
        if t != values.len() + 1 {
            return Err(Error::Parse {
                row: lineno + 1,
                msg: format!("non-contiguous t {t} (expected {})", values.len() + 1),
            });
        }
        values.push(g);
    }
    let tail = tail.ok_or_else(|| Error::Parse {
        row: 0,
        msg: "gamma file must declare `# tail=<default|zero>`".into(),
    })?;
    Ok(GammaRule::Table {
        values,
        tail: Box::new(tail),
    })
}

/// Reads inclusive anomaly windows: CSV with header
/// `start_index,end_index`.
pub fn read_windows_csv(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Parse {
            row: 0,
            msg: format!("cannot open {}: {e}", path.display()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            msg: e.to_string(),
        })?
        .clone();
    let start = headers.iter().position(|h| h.trim() == "start_index");
    let end = headers.iter().position(|h| h.trim() == "end_index");
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) => (s, e),
        _ => {
            return Err(Error::Parse {
                row: 0,
                msg: "windows file header must contain start_index,end_index".into(),
            })
        }
    };
    let mut out = Vec::new();
    for (row0, record) in reader.records().enumerate() {
        let row = row0 + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        let s: usize = record
            .get(start)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                row,
                msg: "bad start_index".into(),
            })?;
        let e: usize = record
            .get(end)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                row,
                msg: "bad end_index".into(),
            })?;
        if e < s {
            return Err(Error::Parse {
                row,
                msg: format!("window ({s}, {e}) ends before it starts"),
            });
        }
        out.push((s, e));
    }
    Ok(out)
}

/// Outcome of a `run` invocation.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub observations: usize,
    pub rejections: usize,
    /// Final rejections falling inside any anomaly window, when windows
    /// were supplied.
    pub rejections_in_windows: Option<usize>,
    pub record: RejectionRecord,
}

fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        "inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Runs one procedure over an ingested stream and writes the decision log:
/// columns t,alpha,decision,num_rejections,wealth (wealth blank for
/// non-donation procedures). The decision column reflects membership in R_t
/// at the time of writing; step-up procedures may promote earlier indices
/// later, which shows up in num_rejections.
pub fn run_stream(cfg: &RunConfig) -> Result<RunSummary> {
    let observations = ingest_csv(&cfg.input, cfg.evidence, cfg.deadline_column.as_deref())?;
    let windows = match &cfg.windows {
        Some(p) => Some(read_windows_csv(p)?),
        None => None,
    };

    let mut lines: Vec<String> = Vec::with_capacity(observations.len() + 2);
    lines.push(format!("# {DECISION_LOG_SCHEMA}"));
    lines.push("t,alpha,decision,num_rejections,wealth".to_string());

    let (record, rejections) = if is_offline(&cfg.procedure) {
        run_offline(cfg, &observations, &mut lines)?
    } else {
        let mut proc = build_procedure(&cfg.procedure, cfg.delta, cfg.gamma.clone(), cfg.seed)?;
        if proc.evidence_kind() != cfg.evidence {
            return Err(Error::Config(format!(
                "procedure {} expects {}-values",
                cfg.procedure,
                proc.evidence_kind().as_str()
            )));
        }
        let mut record = RejectionRecord::new();
        for obs in &observations {
            let rec = proc.step(obs)?;
            let wealth = rec.wealth.map(fmt_float).unwrap_or_default();
            lines.push(format!(
                "{},{},{},{},{}",
                rec.t,
                fmt_float(rec.alpha),
                u8::from(rec.newly_rejected.contains(&rec.t)),
                rec.num_rejections,
                wealth
            ));
            record.push(&rec);
        }
        let n = proc.rejected().len();
        (record, n)
    };

    let rejections_in_windows = windows.map(|ws| {
        record
            .rejected_set()
            .iter()
            .filter(|&&i| ws.iter().any(|&(s, e)| s <= i && i <= e))
            .count()
    });
    if let Some(n) = rejections_in_windows {
        lines.push(format!("# rejections_in_windows,{n}"));
    }

    let body = lines.join("\n") + "\n";
    match &cfg.output {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(body.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(RunSummary {
        observations: observations.len(),
        rejections,
        rejections_in_windows,
        record,
    })
}

/// Offline procedures consume the whole stream, then log the batch decision:
/// alpha is the uniform e-BH threshold level δr/m where defined, blank for
/// the donation variant (which rejects by rank).
fn run_offline(
    cfg: &RunConfig,
    observations: &[Observation],
    lines: &mut Vec<String>,
) -> Result<(RejectionRecord, usize)> {
    if cfg.evidence != EvidenceKind::EValue {
        return Err(Error::Config(format!(
            "procedure {} expects e-values",
            cfg.procedure
        )));
    }
    let evs: Vec<f64> = observations
        .iter()
        .map(|o| o.evidence.e_value())
        .collect::<Result<_>>()?;
    if evs.is_empty() {
        return Ok((RejectionRecord::new(), 0));
    }
    let rejected = match cfg.procedure.as_str() {
        "e-bh" => baselines::ebh_offline(&evs, cfg.delta)?,
        "donation-e-bh" => donation::donation_ebh_offline(&evs, cfg.delta)?,
        other => return Err(Error::UnknownProcedure(other.to_string())),
    };
    let m = evs.len();
    let r = rejected.len();
    let alpha = if cfg.procedure == "e-bh" && r > 0 {
        fmt_float(cfg.delta * r as f64 / m as f64)
    } else {
        String::new()
    };
    let mut record = RejectionRecord::new();
    for t in 1..=m {
        let is_rejected = rejected.binary_search(&t).is_ok();
        lines.push(format!(
            "{},{},{},{},",
            t,
            alpha,
            u8::from(is_rejected),
            r
        ));
        record.push(&crate::stream::StepRecord {
            t,
            alpha: f64::NAN,
            newly_rejected: if is_rejected { vec![t] } else { vec![] },
            num_rejections: r,
            wealth: None,
        });
    }
    Ok((record, r))
}

/// Parses a `key=value` configuration file; `#` comments and blank lines
/// are skipped. Later duplicates override earlier ones.
pub fn read_kv_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None => {
                return Err(Error::Parse {
                    row: lineno + 1,
                    msg: format!("expected key=value, got `{line}`"),
                })
            }
        }
    }
    Ok(out)
}

/// Resolves a `--gamma` argument: a bundled rule name, `constant:<v>`, or a
/// path to a custom γ file.
pub fn parse_gamma_spec(spec: &str) -> Result<GammaRule> {
    match spec {
        "default" => Ok(GammaRule::Default),
        "zero" => Ok(GammaRule::Zero),
        other => {
            if let Some(v) = other.strip_prefix("constant:") {
                let c: f64 = v.parse().map_err(|_| {
                    Error::Config(format!("bad constant gamma value `{v}`"))
                })?;
                return Ok(GammaRule::Constant(c));
            }
            let path = Path::new(other);
            if path.exists() {
                read_gamma_file(path)
            } else {
                Err(Error::Config(format!(
                    "unknown gamma rule `{other}` (expected default, zero, constant:<v>, or a file path)"
                )))
            }
        }
    }
}

/// Validates a gamma rule over a horizon, surfacing the first violation as
/// a config error.
pub fn validate_gamma(rule: &GammaRule, horizon: usize) -> Result<()> {
    let mut seq = GammaSequence::new(rule.clone());
    seq.validate(horizon)
        .map_err(|v| Error::Config(format!("invalid gamma sequence: {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "supfdr-io-test-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn write_file(path: &Path, content: &str) {
        let mut f = File::create(path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
    }

    #[test]
    fn ingest_well_formed() {
        let dir = tmpdir();
        let path = dir.join("ok.csv");
        write_file(&path, "index,e_value\n1,2.5\n2,0.0\n");
        let obs = ingest_csv(&path, EvidenceKind::EValue, None).unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[1].index, 2);
    }

    #[test]
    fn ingest_reports_offending_row() {
        let dir = tmpdir();
        let path = dir.join("neg.csv");
        write_file(&path, "index,e_value\n1,2.5\n2,-1\n");
        match ingest_csv(&path, EvidenceKind::EValue, None) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let path = dir.join("gap.csv");
        write_file(&path, "index,e_value\n1,2.5\n3,1.0\n");
        match ingest_csv(&path, EvidenceKind::EValue, None) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn emit_ingest_round_trip_is_bit_exact() {
        let dir = tmpdir();
        let path = dir.join("roundtrip.csv");
        let obs: Vec<Observation> = (1..=40)
            .map(|i| {
                Observation::new(
                    i,
                    Evidence::EValue((i as f64).sqrt() * 0.123456789e-3 + 1.0 / 3.0),
                    Some(i % 3 == 0),
                    if i % 4 == 0 {
                        Some(Deadline::At(i + 5))
                    } else if i % 5 == 0 {
                        Some(Deadline::Never)
                    } else {
                        None
                    },
                )
                .unwrap()
            })
            .collect();
        let mut buf = Vec::new();
        emit_csv(&mut buf, &obs).unwrap();
        write_file(&path, std::str::from_utf8(&buf).unwrap());
        let back = ingest_csv(&path, EvidenceKind::EValue, None).unwrap();
        assert_eq!(obs, back);
    }

    #[test]
    fn run_stream_hand_trace() {
        // e-LOND on E = (25, 0, 0): decisions (1, 0, 0), α_1 = 0.05,
        // α_2 = δγ_2·(|R_1| ∨ 1) = δγ_2.
        let dir = tmpdir();
        let input = dir.join("trace.csv");
        write_file(&input, "index,e_value\n1,25\n2,0\n3,0\n");
        let output = dir.join("trace_out.csv");
        let cfg = RunConfig {
            procedure: "e-lond".into(),
            delta: 0.1,
            gamma: GammaRule::Default,
            input,
            output: Some(output.clone()),
            seed: 0,
            evidence: EvidenceKind::EValue,
            deadline_column: None,
            windows: None,
        };
        let summary = run_stream(&cfg).unwrap();
        assert_eq!(summary.observations, 3);
        assert_eq!(summary.rejections, 1);
        let text = std::fs::read_to_string(&output).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# {DECISION_LOG_SCHEMA}"));
        assert_eq!(lines.next().unwrap(), "t,alpha,decision,num_rejections,wealth");
        let row1 = lines.next().unwrap();
        assert!(row1.starts_with("1,0.05,1,1,"), "row1 = {row1}");
        let row2 = lines.next().unwrap();
        let alpha2: f64 = row2.split(',').nth(1).unwrap().parse().unwrap();
        assert!((alpha2 - 0.1 / 6.0).abs() < 1e-15);
        assert!(row2.split(',').nth(2).unwrap() == "0");
    }

    #[test]
    fn run_stream_empty_input_header_only() {
        let dir = tmpdir();
        let input = dir.join("empty.csv");
        write_file(&input, "index,e_value\n");
        let output = dir.join("empty_out.csv");
        let cfg = RunConfig {
            procedure: "e-lond".into(),
            delta: 0.1,
            gamma: GammaRule::Default,
            input,
            output: Some(output.clone()),
            seed: 0,
            evidence: EvidenceKind::EValue,
            deadline_column: None,
            windows: None,
        };
        let summary = run_stream(&cfg).unwrap();
        assert_eq!(summary.observations, 0);
        let text = std::fs::read_to_string(&output).unwrap();
        assert_eq!(text.lines().count(), 2); // schema comment + header
    }

    #[test]
    fn donation_rejections_superset_in_logs() {
        let dir = tmpdir();
        let input = dir.join("sup.csv");
        let mut body = String::from("index,e_value\n");
        let evs = [20.0, 3.0, 28.0, 0.5, 9.0, 40.0, 0.1, 7.0];
        for (i, e) in evs.iter().enumerate() {
            body.push_str(&format!("{},{}\n", i + 1, e));
        }
        write_file(&input, &body);
        let run = |name: &str| {
            let cfg = RunConfig {
                procedure: name.into(),
                delta: 0.1,
                gamma: GammaRule::Default,
                input: input.clone(),
                output: Some(dir.join(format!("{name}.csv"))),
                seed: 0,
                evidence: EvidenceKind::EValue,
                deadline_column: None,
                windows: None,
            };
            run_stream(&cfg).unwrap()
        };
        let base = run("e-lond");
        let don = run("donation-e-lond");
        assert!(base
            .record
            .rejected_set()
            .iter()
            .all(|i| don.record.rejected_set().contains(i)));
    }

    #[test]
    fn windows_count_final_rejections() {
        let dir = tmpdir();
        let input = dir.join("win.csv");
        write_file(&input, "index,e_value\n1,25\n2,0\n3,200\n4,0\n");
        let windows = dir.join("windows.csv");
        write_file(&windows, "start_index,end_index\n3,4\n");
        let cfg = RunConfig {
            procedure: "e-lond".into(),
            delta: 0.1,
            gamma: GammaRule::Default,
            input,
            output: Some(dir.join("win_out.csv")),
            seed: 0,
            evidence: EvidenceKind::EValue,
            deadline_column: None,
            windows: Some(windows),
        };
        let summary = run_stream(&cfg).unwrap();
        assert_eq!(summary.rejections_in_windows, Some(1));
        let text = std::fs::read_to_string(dir.join("win_out.csv")).unwrap();
        assert!(text
            .lines()
            .last()
            .unwrap()
            .starts_with("# rejections_in_windows,1"));
    }

    #[test]
    fn gamma_file_parsing() {
        let dir = tmpdir();
        let path = dir.join("gamma.csv");
        write_file(&path, "# tail=default\nt,gamma\n1,0.25\n2,0.25\n");
        let rule = read_gamma_file(&path).unwrap();
        let mut seq = GammaSequence::new(rule);
        assert_eq!(seq.gamma(1), 0.25);
        assert_eq!(seq.gamma(3), crate::gamma::gamma_default(3).unwrap());
        // Missing tail is rejected.
        let bad = dir.join("gamma_bad.csv");
        write_file(&bad, "t,gamma\n1,0.25\n");
        assert!(read_gamma_file(&bad).is_err());
    }

    #[test]
    fn kv_file_and_gamma_spec() {
        let dir = tmpdir();
        let path = dir.join("cfg.txt");
        write_file(&path, "# comment\nprocedure=e-lond\ndelta=0.2\n");
        let kv = read_kv_file(&path).unwrap();
        assert_eq!(kv[0], ("procedure".into(), "e-lond".into()));
        assert!(matches!(parse_gamma_spec("default").unwrap(), GammaRule::Default));
        assert!(matches!(
            parse_gamma_spec("constant:0.3").unwrap(),
            GammaRule::Constant(_)
        ));
        assert!(parse_gamma_spec("bogus").is_err());
    }

    #[test]
    fn offline_run_constant_count() {
        let dir = tmpdir();
        let input = dir.join("off.csv");
        write_file(&input, "index,e_value\n1,10\n2,0\n");
        let out = dir.join("off_out.csv");
        let cfg = RunConfig {
            procedure: "e-bh".into(),
            delta: 0.5,
            gamma: GammaRule::Default,
            input,
            output: Some(out.clone()),
            seed: 0,
            evidence: EvidenceKind::EValue,
            deadline_column: None,
            windows: None,
        };
        let summary = run_stream(&cfg).unwrap();
        assert_eq!(summary.rejections, 1);
        let text = std::fs::read_to_string(&out).unwrap();
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert!(rows[0].starts_with("1,") && rows[0].contains(",1,1,"));
        assert!(rows[1].starts_with("2,") && rows[1].contains(",0,1,"));
    }
}
