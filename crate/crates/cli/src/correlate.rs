//! `correlate`: Spearman correlation of metric columns with user ratings.

use std::collections::HashMap;
use std::path::Path;

use accnote::metrics::{normalize_user_rating, spearman};
use anyhow::{bail, Context};

pub const DIMENSIONS: [&str; 6] = ["us_1", "us_2", "us_3", "us_4", "us_5", "us_mean"];

/// Metric name → correlation per rating column; `None` where undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub n: usize,
    pub rows: Vec<(String, [Option<f64>; 6])>,
}

type Key = (String, String);

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> anyhow::Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .with_context(|| format!("{} has no {name} column", path.display()))
}

/// Metric names and per-row values.
type Scores = (Vec<String>, Vec<(Key, Vec<f64>)>);

fn read_scores(path: &Path) -> anyhow::Result<Scores> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let (id_col, method_col) = (column(&headers, "item_id", path)?, column(&headers, "method", path)?);
    let metric_cols: Vec<usize> = (0..headers.len()).filter(|&i| i != id_col && i != method_col).collect();
    let names = metric_cols.iter().map(|&i| headers[i].trim().to_string()).collect();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let values = metric_cols
            .iter()
            .map(|&i| {
                record[i].trim().parse::<f64>().with_context(|| {
                    format!("{} row {}: {:?} is not a number", path.display(), line + 2, &record[i])
                })
            })
            .collect::<anyhow::Result<Vec<f64>>>()?;
        rows.push(((record[id_col].to_string(), record[method_col].to_string()), values));
    }
    Ok((names, rows))
}

/// Normalized ratings us_1..us_5 followed by their mean.
fn read_ratings(path: &Path) -> anyhow::Result<HashMap<Key, [f64; 6]>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let (id_col, method_col) = (column(&headers, "item_id", path)?, column(&headers, "method", path)?);
    let ur_cols = (1..=5)
        .map(|k| column(&headers, &format!("ur_{k}"), path))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = HashMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut us = [0.0; 6];
        for (k, &c) in ur_cols.iter().enumerate() {
            let raw: i64 = record[c]
                .trim()
                .parse()
                .with_context(|| format!("{} row {}: rating {:?}", path.display(), line + 2, &record[c]))?;
            us[k] = normalize_user_rating(raw)
                .with_context(|| format!("{} row {}", path.display(), line + 2))?;
        }
        us[5] = us[..5].iter().sum::<f64>() / 5.0;
        out.insert((record[id_col].to_string(), record[method_col].to_string()), us);
    }
    Ok(out)
}

pub fn correlation_table(scores: &Path, ratings: &Path) -> anyhow::Result<CorrelationTable> {
    let (names, rows) = read_scores(scores)?;
    let ratings = read_ratings(ratings)?;
    let joined: Vec<(&Vec<f64>, &[f64; 6])> = rows
        .iter()
        .filter_map(|(key, values)| ratings.get(key).map(|r| (values, r)))
        .collect();
    if joined.is_empty() {
        bail!("no (item_id, method) pair appears in both files");
    }
    let table_rows = names
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let xs: Vec<f64> = joined.iter().map(|(v, _)| v[m]).collect();
            let mut cells = [None; 6];
            for (d, cell) in cells.iter_mut().enumerate() {
                let ys: Vec<f64> = joined.iter().map(|(_, r)| r[d]).collect();
                *cell = spearman(&xs, &ys).ok().map(|s| s.rho);
            }
            (name.clone(), cells)
        })
        .collect();
    Ok(CorrelationTable {
        n: joined.len(),
        rows: table_rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |r| format!("{r:.4}"))
}

pub fn correlate(scores: &Path, ratings: &Path, out: Option<&Path>) -> anyhow::Result<crate::Outcome> {
    let table = correlation_table(scores, ratings)?;
    println!("Spearman rho over {} rated item(s)", table.n);
    print!("{:<10}", "metric");
    for d in DIMENSIONS {
        print!(" {d:>8}");
    }
    println!();
    for (name, cells) in &table.rows {
        print!("{name:<10}");
        for c in cells {
            print!(" {:>8}", cell(*c));
        }
        println!();
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut header = vec!["metric"];
        header.extend(DIMENSIONS);
        w.write_record(&header)?;
        for (name, cells) in &table.rows {
            let mut record = vec![name.clone()];
            record.extend(cells.iter().map(|c| c.map(|r| r.to_string()).unwrap_or_default()));
            w.write_record(&record)?;
        }
        w.flush()?;
    }
    Ok(crate::Outcome::Done)
}
