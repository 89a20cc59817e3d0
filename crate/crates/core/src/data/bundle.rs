use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, Graph, GraphInput, Splits};
use crate::linalg::CsrBuilder;
use crate::scalar::Scalar;

pub const META_FILE: &str = "meta.json";
pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_F32: &str = "features.f32";
pub const LABELS_FILE: &str = "labels.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const SPLITS_FILE: &str = "splits.json";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    #[default]
    Csv,
    F32,
}

/// Contents of `meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    #[serde(default)]
    pub class_names: Vec<String>,
    #[serde(default)]
    pub features_format: FeatureFormat,
    /// Number of records in `edges.csv`, duplicates included. Checked when
    /// present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_edge_count: Option<usize>,
    /// Undirected edge count as published for the benchmark. Informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reported_edge_count: Option<usize>,
}

/// What the loader saw before graph construction cleaned it up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub edge_records: usize,
    pub labelled_nodes: usize,
}

pub fn load_dataset<T: Scalar>(dir: impl AsRef<Path>) -> Result<Graph<T>> {
    load_dataset_with_meta(dir).map(|(g, _, _)| g)
}

pub fn load_dataset_with_meta<T: Scalar>(
    dir: impl AsRef<Path>,
) -> Result<(Graph<T>, Meta, LoadReport)> {
    let dir = dir.as_ref();
    let meta_path = dir.join(META_FILE);
    let meta: Meta = serde_json::from_str(&read_text(&meta_path)?)
        .map_err(|e| json_error(&meta_path, e))?;
    if meta.num_classes == 0 {
        return Err(mismatch(&meta_path, 0, "num_classes must be positive"));
    }
    if !meta.class_names.is_empty() && meta.class_names.len() != meta.num_classes {
        return Err(mismatch(
            &meta_path,
            0,
            format!(
                "{} class names for num_classes = {}",
                meta.class_names.len(),
                meta.num_classes
            ),
        ));
    }

    let features = match meta.features_format {
        FeatureFormat::Csv => read_features_csv(&dir.join(FEATURES_CSV), &meta)?,
        FeatureFormat::F32 => read_features_f32(&dir.join(FEATURES_F32), &meta)?,
    };
    let labels = read_labels(&dir.join(LABELS_FILE), &meta)?;
    let edges = read_edges(&dir.join(EDGES_FILE), &meta)?;
    if let Some(expected) = meta.raw_edge_count {
        if expected != edges.len() {
            return Err(mismatch(
                &dir.join(EDGES_FILE),
                edges.len(),
                format!("{} edge records, meta declares {expected}", edges.len()),
            ));
        }
    }
    let splits_path = dir.join(SPLITS_FILE);
    let splits: Splits = serde_json::from_str(&read_text(&splits_path)?)
        .map_err(|e| json_error(&splits_path, e))?;

    let report = LoadReport {
        edge_records: edges.len(),
        labelled_nodes: labels.iter().filter(|l| l.is_some()).count(),
    };
    let graph = build_graph(GraphInput {
        name: meta.name.clone(),
        num_classes: meta.num_classes,
        class_names: meta.class_names.clone(),
        features,
        labels,
        edges,
        splits,
    })
    .map_err(|e| match e {
        Error::Validation { location, message } if location.contains("mask") => {
            Error::Validation {
                location: format!("{}: {location}", splits_path.display()),
                message,
            }
        }
        other => other,
    })?;
    Ok((graph, meta, report))
}

/// Writes `g` as a bundle. Edges are written once each as `(u, v)` with
/// `u < v`; unlabelled nodes are omitted from `labels.csv`.
pub fn save_dataset<T: Scalar>(
    g: &Graph<T>,
    dir: impl AsRef<Path>,
    format: FeatureFormat,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = Meta {
        name: g.name().to_string(),
        num_nodes: g.num_nodes(),
        num_features: g.num_features(),
        num_classes: g.num_classes(),
        class_names: g.class_names().to_vec(),
        features_format: format,
        raw_edge_count: Some(g.num_edges()),
        reported_edge_count: None,
    };
    write_file(&dir.join(META_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &meta).map_err(std::io::Error::other)?;
        writeln!(w)
    })?;

    let x = g.features();
    match format {
        FeatureFormat::Csv => write_file(&dir.join(FEATURES_CSV), |w| {
            let mut line = String::new();
            for i in 0..x.rows() {
                line.clear();
                for (c, v) in x.dense_row(i).iter().enumerate() {
                    if c > 0 {
                        line.push(',');
                    }
                    if *v == T::zero() {
                        line.push('0');
                    } else {
                        line.push_str(&v.to_string());
                    }
                }
                writeln!(w, "{line}")?;
            }
            Ok(())
        })?,
        FeatureFormat::F32 => write_file(&dir.join(FEATURES_F32), |w| {
            for i in 0..x.rows() {
                for v in x.dense_row(i) {
                    w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
                }
            }
            Ok(())
        })?,
    }
    write_file(&dir.join(LABELS_FILE), |w| {
        for (i, l) in g.labels().iter().enumerate() {
            if let Some(l) = l {
                writeln!(w, "{i},{l}")?;
            }
        }
        Ok(())
    })?;
    write_file(&dir.join(EDGES_FILE), |w| {
        for &(u, v) in g.edges() {
            writeln!(w, "{u},{v}")?;
        }
        Ok(())
    })?;
    write_file(&dir.join(SPLITS_FILE), |w| {
        serde_json::to_writer(&mut *w, g.splits()).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    }
}

fn mismatch(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

/// Iterates non-blank records as `(line, record)`.
fn records(
    path: &Path,
) -> Result<impl Iterator<Item = Result<(usize, csv::StringRecord)>> + '_> {
    let rows = reader(path)?.into_records();
    Ok(rows.filter_map(move |r| match r {
        Ok(rec) => {
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() == 1 && rec[0].is_empty() {
                None
            } else {
                Some(Ok((line, rec)))
            }
        }
        Err(e) => {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Some(Err(mismatch(path, line, e.to_string())))
        }
    }))
}

fn parse_float(path: &Path, line: usize, col: usize, cell: &str) -> Result<f64> {
    if cell == "0" {
        return Ok(0.0);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(mismatch(path, line, format!("column {}: non-finite value `{cell}`", col + 1))),
        Err(_) => Err(mismatch(path, line, format!("column {}: non-numeric cell `{cell}`", col + 1))),
    }
}

fn parse_index(path: &Path, line: usize, what: &str, cell: &str, bound: usize) -> Result<usize> {
    let v: usize = cell
        .parse()
        .map_err(|_| mismatch(path, line, format!("{what}: non-numeric cell `{cell}`")))?;
    if v >= bound {
        return Err(mismatch(
            path,
            line,
            format!("{what} {v} out of range (must be < {bound})"),
        ));
    }
    Ok(v)
}

fn expect_width(path: &Path, line: usize, rec: &csv::StringRecord, width: usize) -> Result<()> {
    if rec.len() != width {
        return Err(mismatch(
            path,
            line,
            format!("expected {width} columns, found {}", rec.len()),
        ));
    }
    Ok(())
}

fn read_features_csv<T: Scalar>(path: &Path, meta: &Meta) -> Result<crate::linalg::Csr<T>> {
    let mut b = CsrBuilder::new(meta.num_features);
    let mut rows = 0usize;
    let mut entries = Vec::new();
    for r in records(path)? {
        let (line, rec) = r?;
        rows += 1;
        if rows > meta.num_nodes {
            return Err(mismatch(
                path,
                line,
                format!("more than num_nodes = {} feature rows", meta.num_nodes),
            ));
        }
        expect_width(path, line, &rec, meta.num_features)?;
        entries.clear();
        for (c, cell) in rec.iter().enumerate() {
            let v = parse_float(path, line, c, cell)?;
            if v != 0.0 {
                entries.push((c, T::of(v)));
            }
        }
        b.push_row(entries.iter().copied());
    }
    if rows != meta.num_nodes {
        return Err(mismatch(
            path,
            rows,
            format!("{rows} feature rows, meta declares num_nodes = {}", meta.num_nodes),
        ));
    }
    Ok(b.finish())
}

fn read_features_f32<T: Scalar>(path: &Path, meta: &Meta) -> Result<crate::linalg::Csr<T>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = meta.num_nodes * meta.num_features * 4;
    if bytes.len() != expected {
        return Err(mismatch(
            path,
            0,
            format!(
                "{} bytes, expected {expected} for {} x {} f32 values",
                bytes.len(),
                meta.num_nodes,
                meta.num_features
            ),
        ));
    }
    let mut b = CsrBuilder::new(meta.num_features);
    let width = meta.num_features.max(1) * 4;
    for (i, row) in bytes.chunks_exact(width).take(meta.num_nodes).enumerate() {
        let mut entries = Vec::new();
        for (c, chunk) in row.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(mismatch(path, i + 1, format!("column {}: non-finite value", c + 1)));
            }
            if v != 0.0 {
                entries.push((c, T::of(v as f64)));
            }
        }
        b.push_row(entries);
    }
    if meta.num_features == 0 {
        for _ in 0..meta.num_nodes {
            b.push_row([]);
        }
    }
    Ok(b.finish())
}

fn read_labels(path: &Path, meta: &Meta) -> Result<Vec<Option<usize>>> {
    let mut labels = vec![None; meta.num_nodes];
    for r in records(path)? {
        let (line, rec) = r?;
        expect_width(path, line, &rec, 2)?;
        let node = parse_index(path, line, "node id", &rec[0], meta.num_nodes)?;
        let label = parse_index(path, line, "label", &rec[1], meta.num_classes)?;
        if labels[node].replace(label).is_some() {
            return Err(mismatch(path, line, format!("node {node} labelled twice")));
        }
    }
    Ok(labels)
}

fn read_edges(path: &Path, meta: &Meta) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for r in records(path)? {
        let (line, rec) = r?;
        expect_width(path, line, &rec, 2)?;
        let u = parse_index(path, line, "source", &rec[0], meta.num_nodes)?;
        let v = parse_index(path, line, "target", &rec[1], meta.num_nodes)?;
        edges.push((u, v));
    }
    Ok(edges)
}
