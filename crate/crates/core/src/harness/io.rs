use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{run_experiment, RoundRecord, RunMeta, Transcript};
use crate::error::{Error, Result};
use crate::hexfloat;
use crate::streams::{Stream, StreamRecord};
use crate::types::FeatureVector;

pub const CSV_HEADER: [&str; 12] = [
    "t",
    "z",
    "x",
    "x_tilde",
    "prediction",
    "truth",
    "mistake",
    "w_after",
    "alpha_published",
    "phase",
    "event",
    "agent_cost",
];

fn joined(v: &FeatureVector) -> String {
    v.coords()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_csv(transcript: &Transcript, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(CSV_HEADER)?;
    for r in &transcript.rounds {
        w.write_record([
            r.t.to_string(),
            joined(&r.z),
            joined(&r.x),
            r.x_tilde.as_ref().map(joined).unwrap_or_default(),
            r.prediction.to_string(),
            r.truth.to_string(),
            r.mistake.to_string(),
            joined(&r.w_after),
            r.alpha_published.to_string(),
            r.phase.to_string(),
            r.event.as_str().to_string(),
            r.agent_cost.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn to_hex(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            Value::String(hexfloat::format(n.as_f64().unwrap_or(f64::NAN)))
        }
        Value::Array(items) => Value::Array(items.into_iter().map(to_hex).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, to_hex(v))).collect()),
        other => other,
    }
}

fn from_hex(v: Value) -> Value {
    match v {
        Value::String(s) if s.starts_with("0x") || s.starts_with("-0x") => {
            match hexfloat::parse(&s) {
                Ok(f) => serde_json::Number::from_f64(f)
                    .map(Value::Number)
                    .unwrap_or(Value::Null),
                Err(_) => Value::String(s),
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(from_hex).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, from_hex(v))).collect())
        }
        other => other,
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: RunMeta,
    total_mistakes: u64,
}

/// Header line with the run metadata, then one line per round. Every float
/// is written as a hex string.
pub fn write_jsonl(transcript: &Transcript, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = Header {
        meta: transcript.meta.clone(),
        total_mistakes: transcript.total_mistakes,
    };
    let mut line = |v: Value| -> Result<()> {
        serde_json::to_writer(&mut out, &to_hex(v))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))
    };
    line(serde_json::to_value(&header)?)?;
    for r in &transcript.rounds {
        line(serde_json::to_value(r)?)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Transcript> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header: Option<Header> = None;
    let mut rounds = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message: e.to_string(),
        };
        let value = from_hex(serde_json::from_str(&line).map_err(parse_err)?);
        if header.is_none() {
            header = Some(serde_json::from_value(value).map_err(parse_err)?);
        } else {
            rounds.push(serde_json::from_value::<RoundRecord>(value).map_err(parse_err)?);
        }
    }
    let header = header.ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "missing header line".into(),
    })?;
    Ok(Transcript {
        meta: header.meta,
        rounds,
        total_mistakes: header.total_mistakes,
    })
}

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub transcript: Transcript,
    /// Rounds whose rerun differs from the recording.
    pub mismatches: Vec<usize>,
}

impl ReplayOutcome {
    pub fn matches(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Reruns the recorded configuration on the recorded true points.
pub fn replay(recorded: &Transcript) -> Result<ReplayOutcome> {
    let meta = &recorded.meta;
    let records = recorded
        .rounds
        .iter()
        .map(|r| StreamRecord {
            z: r.z.clone(),
            label: r.truth,
        })
        .collect();
    let stream = Stream {
        source: meta.stream.clone(),
        records,
        w_star: meta.w_star.clone(),
        radius: meta.radius,
        cost_model: Some(meta.agent.cost.clone()),
        initial_prediction: meta.options.initial_prediction,
    };
    let rerun = run_experiment(
        &meta.learner,
        meta.options,
        &meta.agent,
        &stream,
        meta.max_rounds,
    )?;
    let mut mismatches: Vec<usize> = recorded
        .rounds
        .iter()
        .zip(&rerun.rounds)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.t)
        .collect();
    if recorded.rounds.len() != rerun.rounds.len() {
        mismatches.push(recorded.rounds.len().min(rerun.rounds.len()));
    }
    Ok(ReplayOutcome {
        transcript: rerun,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::AgentConfig;
    use crate::learners::{LearnerConfig, LearnerOptions};
    use crate::streams::{generate_separable_stream, StreamSpec};
    use crate::types::{CostModel, Label};

    #[test]
    fn jsonl_round_trip_is_exact() {
        let stream = generate_separable_stream(&StreamSpec::new(3, 2.0, 0.5, 60, 4)).unwrap();
        let agent = AgentConfig::rational(CostModel::L2 { alpha: 0.3 });
        let tr = run_experiment(
            &LearnerConfig::UnknownL2 { r: 2.0, gamma: 0.5 },
            LearnerOptions::default(),
            &agent,
            &stream,
            60,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        write_jsonl(&tr, &p).unwrap();
        let back = read_jsonl(&p).unwrap();
        assert_eq!(back, tr);
        let out = replay(&back).unwrap();
        assert!(out.matches(), "{:?}", out.mismatches);
    }

    #[test]
    fn tampered_transcript_fails_replay() {
        let stream = generate_separable_stream(&StreamSpec::new(2, 2.0, 0.5, 20, 5)).unwrap();
        let agent = AgentConfig::rational(CostModel::L2 { alpha: 0.3 });
        let mut tr = run_experiment(
            &LearnerConfig::StrategicL2 { alpha: 0.3 },
            Default::default(),
            &agent,
            &stream,
            20,
        )
        .unwrap();
        tr.rounds[7].prediction = match tr.rounds[7].prediction {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        };
        assert_eq!(replay(&tr).unwrap().mismatches, [7]);
    }

    #[test]
    fn csv_has_the_fixed_columns() {
        let stream = crate::streams::Fixture::Example2.stream(3);
        let agent = AgentConfig::rational(CostModel::L2 { alpha: 5.0 });
        let tr = run_experiment(
            &LearnerConfig::StrategicL2 { alpha: 5.0 },
            Default::default(),
            &agent,
            &stream,
            3,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&tr, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,z,x,x_tilde,prediction,truth,mistake,w_after,alpha_published,phase,event,agent_cost"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0,-4;-3,-4;-3,,+1,+1,false,0;0,5,0,none,0"
        );
    }
}
