use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmarks::Direction;
use crate::schedulers::Method;
use crate::{Error, Result};

/// One evaluation as persisted in line-delimited JSON. `objective` and
/// `cum_best` are in the benchmark's native direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub benchmark: String,
    pub method: Method,
    pub seed: u64,
    pub task: usize,
    pub iteration: usize,
    pub context_feature: f64,
    pub config: BTreeMap<String, f64>,
    pub objective: f64,
    pub cum_best: f64,
    #[serde(default)]
    pub direction: Direction,
}

impl Record {
    /// Cumulative best in the minimization convention.
    pub fn cum_best_loss(&self) -> f64 {
        self.direction.to_loss(self.cum_best)
    }
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[Record]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Record>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip_and_parse_errors() {
        let r = Record {
            benchmark: "b".into(),
            method: Method::BO,
            seed: 3,
            task: 2,
            iteration: 1,
            context_feature: 56.0,
            config: [("x1".to_string(), 0.25)].into_iter().collect(),
            objective: 0.1,
            cum_best: 0.1,
            direction: Direction::Minimize,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        write_jsonl(std::fs::File::create(&p).unwrap(), &[r.clone(), r.clone()]).unwrap();
        assert_eq!(read_jsonl(&p).unwrap(), vec![r.clone(), r]);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("{\"benchmark\":\"b\",\"method\":\"BO\""));
        std::fs::write(&p, format!("{}\nnot json\n", text.lines().next().unwrap())).unwrap();
        match read_jsonl(&p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }
}
