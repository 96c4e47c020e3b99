//! File formats shared by the CLI and the service.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use provision_core::simulator::{LabeledDataset, SimResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 4] = ["cpus", "memory_mb", "rate", "label_replicas"];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    cpus: f64,
    memory_mb: f64,
    rate: f64,
    label_replicas: u32,
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> anyhow::Result<D> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Top-level `version` field of a JSON document; absent counts as current.
pub fn check_version(value: &serde_json::Value, expected: u32, what: &str) -> anyhow::Result<()> {
    match value.get("version") {
        None => Ok(()),
        Some(v) if v.as_u64() == Some(u64::from(expected)) => Ok(()),
        Some(v) => bail!("{what}: unsupported version {v}"),
    }
}

pub fn write_dataset_csv<W: Write>(data: &LabeledDataset, out: W) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // Written explicitly so an empty dataset still gets a header.
    w.write_record(CSV_HEADER)?;
    for row in &data.rows {
        let [cpus, memory_mb, rate] = row.features;
        w.serialize(CsvRow {
            cpus,
            memory_mb,
            rate,
            label_replicas: data.label_replicas(row),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the CSV form. Label replica counts must belong to `classes`.
pub fn read_dataset_csv<R: Read>(input: R, classes: &[u32]) -> anyhow::Result<LabeledDataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = r.records();
    let header = records.next().context("dataset CSV is empty")??;
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        bail!("dataset CSV header must be {}", CSV_HEADER.join(","));
    }
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let line = i + 2;
        let row: CsvRow = record?
            .deserialize(None)
            .with_context(|| format!("dataset CSV line {line}"))?;
        let label = classes
            .iter()
            .position(|&c| c == row.label_replicas)
            .with_context(|| {
                format!(
                    "dataset CSV line {line}: label_replicas {} is not one of {classes:?}",
                    row.label_replicas
                )
            })?;
        rows.push(provision_core::simulator::DatasetRow {
            features: [row.cpus, row.memory_mb, row.rate],
            label,
            unsatisfiable: false,
        });
    }
    Ok(LabeledDataset::new(classes.to_vec(), rows)?)
}

/// Reads a dataset in either form: JSON when the file starts with `{`.
pub fn read_dataset(path: &Path, classes: &[u32]) -> anyhow::Result<LabeledDataset> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let data: LabeledDataset =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        data.validate()?;
        Ok(data)
    } else {
        read_dataset_csv(text.as_bytes(), classes).with_context(|| format!("reading {}", path.display()))
    }
}

/// One-row summary of a run, without the per-request vectors.
pub fn write_sim_csv<W: Write>(res: &SimResult, out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["throughput", "makespan", "init_time", "mean_queue_time", "served", "failed"])?;
    w.write_record([
        res.throughput.to_string(),
        res.makespan.to_string(),
        res.init_time.to_string(),
        res.mean_queue_time.to_string(),
        res.served.to_string(),
        res.failed.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use provision_core::simulator::DatasetRow;

    fn sample() -> LabeledDataset {
        let rows = vec![
            DatasetRow {
                features: [0.5, 512.0, 100.0],
                label: 0,
                unsatisfiable: false,
            },
            DatasetRow {
                features: [4.0, 4096.0, 0.1 + 0.2],
                label: 2,
                unsatisfiable: false,
            },
        ];
        LabeledDataset::new(vec![5, 10, 15], rows).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_dataset_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("cpus,memory_mb,rate,label_replicas\n"));
        assert!(text.ends_with('\n'));
        let back = read_dataset_csv(buf.as_slice(), &[5, 10, 15]).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn unknown_label_rejected() {
        let text = "cpus,memory_mb,rate,label_replicas\n1,1024,10,7\n";
        let err = read_dataset_csv(text.as_bytes(), &[5, 10]).unwrap_err();
        assert!(format!("{err:#}").contains("line 2"), "{err:#}");
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_dataset_csv("a,b,c,d\n".as_bytes(), &[5]).is_err());
        assert!(read_dataset_csv("".as_bytes(), &[5]).is_err());
    }
}
