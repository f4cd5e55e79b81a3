//! CSV readers and writers for every artifact the toolkit exchanges.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ard::{ArdMatrix, ArdMeta, TraitPartition};
use crate::blsm::{BlsmParams, Diagnostics};
use crate::error::{Error, Result};
use crate::eval::{MetricsReport, RiskRow, RiskTable};
use crate::fpr::FprModel;
use crate::graphgen::Graph;
use crate::scalar::Scalar;

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?)
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse {what} from {field:?}")))
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Writes `src,dst[,weight]`, one canonical edge per row.
pub fn write_edges(path: impl AsRef<Path>, g: &Graph) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    if g.is_weighted() {
        w.write_record(["src", "dst", "weight"])?;
        for (i, j, wt) in g.weighted_edges() {
            w.write_record([i.to_string(), j.to_string(), wt.to_string()])?;
        }
    } else {
        w.write_record(["src", "dst"])?;
        for &(i, j) in g.edges() {
            w.write_record([i.to_string(), j.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an edge list; `n` defaults to one past the largest endpoint.
pub fn read_edges(path: impl AsRef<Path>, n: Option<usize>) -> Result<Graph> {
    let mut r = reader(path.as_ref())?;
    let weighted = r.headers()?.len() >= 3;
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let i: usize = parse(rec.get(0).unwrap_or(""), "src", line)?;
        let j: usize = parse(rec.get(1).unwrap_or(""), "dst", line)?;
        edges.push((i, j));
        if weighted {
            weights.push(parse::<u32>(rec.get(2).unwrap_or(""), "weight", line)?);
        }
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0));
    let g = Graph::new(n, edges.iter().copied())?;
    if !weighted {
        return Ok(g);
    }
    // align weights with the canonical edge order
    let mut by_edge: Vec<((usize, usize), u32)> =
        edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).zip(weights).collect();
    by_edge.sort_unstable();
    g.with_weights(by_edge.into_iter().map(|(_, w)| w).collect())
}

/// Writes `node,size`.
pub fn write_sizes(path: impl AsRef<Path>, sizes: &[f64]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["node", "size"])?;
    for (i, s) in sizes.iter().enumerate() {
        w.write_record([i.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sizes(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut r = reader(path.as_ref())?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        rows.push((
            parse(rec.get(0).unwrap_or(""), "node", line)?,
            parse(rec.get(1).unwrap_or(""), "size", line)?,
        ));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(pos, r)| r.0 != pos) {
        return Err(Error::Format("size file must list nodes 0..n exactly once".into()));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

/// Writes `node,trait` membership pairs.
pub fn write_traits(path: impl AsRef<Path>, t: &TraitPartition) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["node", "trait"])?;
    for i in 0..t.n() {
        for &k in t.traits_of(i) {
            w.write_record([i.to_string(), k.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads membership pairs; `n` and `k` default to one past the largest index.
pub fn read_traits(path: impl AsRef<Path>, n: Option<usize>, k: Option<usize>) -> Result<TraitPartition> {
    let mut r = reader(path.as_ref())?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        pairs.push((
            parse(rec.get(0).unwrap_or(""), "node", line)?,
            parse(rec.get(1).unwrap_or(""), "trait", line)?,
        ));
    }
    let n = n.unwrap_or_else(|| pairs.iter().map(|p| p.0 + 1).max().unwrap_or(0));
    let k = k.unwrap_or_else(|| pairs.iter().map(|p| p.1 + 1).max().unwrap_or(0));
    let mut groups = vec![Vec::new(); k];
    for (i, kk) in pairs {
        if kk >= k {
            return Err(Error::Format(format!("trait {kk} out of range for K={k}")));
        }
        groups[kk].push(i);
    }
    TraitPartition::new(n, groups)
}

/// Path of the JSON metadata written next to an ARD file.
pub fn ard_sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    let mut s = path.as_ref().as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct ArdSidecar {
    #[serde(flatten)]
    meta: ArdMeta,
    n: usize,
    k: usize,
    misreporters: Option<Vec<usize>>,
}

/// Writes `node,y_1,…,y_K` plus a `.meta.json` sidecar.
pub fn write_ard(path: impl AsRef<Path>, y: &ArdMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header = vec!["node".to_string()];
    header.extend((1..=y.k()).map(|k| format!("y_{k}")));
    w.write_record(&header)?;
    for i in 0..y.n() {
        let mut row = vec![i.to_string()];
        row.extend(y.row(i).iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let sidecar = ArdSidecar {
        meta: y.meta().clone(),
        n: y.n(),
        k: y.k(),
        misreporters: y.misreporters().map(|f| (0..f.len()).filter(|&i| f[i]).collect()),
    };
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(ard_sidecar_path(path), json)?;
    Ok(())
}

/// Reads an ARD file and, when present, its sidecar.
pub fn read_ard(path: impl AsRef<Path>) -> Result<ArdMatrix> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    let k = r.headers()?.len().saturating_sub(1);
    if k == 0 {
        return Err(Error::Format("ARD file needs at least one count column".into()));
    }
    let mut rows: Vec<(usize, Vec<i64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() != k + 1 {
            return Err(Error::Format(format!(
                "line {line}: expected {} fields, found {}",
                k + 1,
                rec.len()
            )));
        }
        let node = parse(&rec[0], "node", line)?;
        let counts = (1..=k)
            .map(|c| parse::<i64>(&rec[c], "count", line))
            .collect::<Result<_>>()?;
        rows.push((node, counts));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(pos, r)| r.0 != pos) {
        return Err(Error::Format("ARD file must list nodes 0..n exactly once".into()));
    }
    let n = rows.len();
    let flat: Vec<i64> = rows.into_iter().flat_map(|r| r.1).collect();
    let sidecar_path = ard_sidecar_path(path);
    if !sidecar_path.exists() {
        return ArdMatrix::from_signed(n, k, &flat, 1);
    }
    let sidecar: ArdSidecar = serde_json::from_str(&std::fs::read_to_string(&sidecar_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", sidecar_path.display())))?;
    if sidecar.n != n || sidecar.k != k {
        return Err(Error::Format("ARD sidecar dimensions disagree with the counts".into()));
    }
    let mut y = ArdMatrix::from_signed(n, k, &flat, sidecar.meta.sensitivity)?.with_meta(sidecar.meta);
    if let Some(list) = sidecar.misreporters {
        let mut flags = vec![false; n];
        for i in list {
            *flags
                .get_mut(i)
                .ok_or_else(|| Error::Format(format!("misreporter {i} out of range")))? = true;
        }
        y = y.with_misreporters(flags);
    }
    Ok(y)
}

/// One row per draw: `draw,v_0..v_{n-1},z_{i}_{d}…,zeta`.
pub fn write_posterior<T: Scalar>(path: impl AsRef<Path>, draws: &[BlsmParams<T>]) -> Result<()> {
    let Some(first) = draws.first() else {
        return Err(Error::Parameter("no draws to write".into()));
    };
    let (n, dim) = (first.n(), first.dim());
    let mut w = writer(path.as_ref())?;
    let mut header = vec!["draw".to_string()];
    header.extend((0..n).map(|i| format!("v_{i}")));
    for i in 0..n {
        header.extend((0..dim).map(|d| format!("z_{i}_{d}")));
    }
    header.push("zeta".into());
    w.write_record(&header)?;
    for (s, d) in draws.iter().enumerate() {
        let mut row = vec![s.to_string()];
        row.extend(d.v().iter().map(|x| x.as_f64().to_string()));
        row.extend(d.z().iter().map(|x| x.as_f64().to_string()));
        row.push(d.zeta().as_f64().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_posterior(path: impl AsRef<Path>) -> Result<Vec<BlsmParams<f64>>> {
    let mut r = reader(path.as_ref())?;
    let headers = r.headers()?.clone();
    let n = headers.iter().filter(|h| h.starts_with("v_")).count();
    let zcols = headers.iter().filter(|h| h.starts_with("z_")).count();
    if n == 0 || zcols % n != 0 || headers.len() != 2 + n + zcols {
        return Err(Error::Format("unrecognized posterior header".into()));
    }
    let dim = zcols / n;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let vals: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|f| parse(f, "value", line))
            .collect::<Result<_>>()?;
        if vals.len() != n + zcols + 1 {
            return Err(Error::Format(format!("line {line}: wrong number of fields")));
        }
        out.push(BlsmParams::from_unnormalized(
            vals[..n].to_vec(),
            vals[n..n + zcols].to_vec(),
            dim,
            vals[n + zcols],
        )?);
    }
    Ok(out)
}

/// `parameter,ess,gelman_rubin` (the last column empty for a single chain).
pub fn write_diagnostics(path: impl AsRef<Path>, d: &Diagnostics) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["parameter", "ess", "gelman_rubin"])?;
    for (p, name) in d.names.iter().enumerate() {
        let rhat = d.gelman_rubin.as_ref().map_or(String::new(), |r| r[p].to_string());
        w.write_record([name.clone(), d.ess[p].to_string(), rhat])?;
    }
    w.flush()?;
    Ok(())
}

/// `node,z_0,…` rows of an embedding.
pub fn write_embedding<T: Scalar>(path: impl AsRef<Path>, z: &[T], dim: usize) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    let mut header = vec!["node".to_string()];
    header.extend((0..dim).map(|d| format!("z_{d}")));
    w.write_record(&header)?;
    for (i, row) in z.chunks(dim).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|x| x.as_f64().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Returns the row-major embedding and its dimension.
pub fn read_embedding(path: impl AsRef<Path>) -> Result<(Vec<f64>, usize)> {
    let mut r = reader(path.as_ref())?;
    let dim = r.headers()?.len().saturating_sub(1);
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let node = parse(rec.get(0).unwrap_or(""), "node", line)?;
        rows.push((
            node,
            rec.iter()
                .skip(1)
                .map(|f| parse(f, "coordinate", line))
                .collect::<Result<_>>()?,
        ));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(pos, r)| r.0 != pos || r.1.len() != dim) {
        return Err(Error::Format(
            "embedding file must list nodes 0..n with equal-length rows".into(),
        ));
    }
    Ok((rows.into_iter().flat_map(|r| r.1).collect(), dim))
}

/// Pair predictions `i,j,prob`.
pub fn write_predictions<T: Scalar>(path: impl AsRef<Path>, pairs: &[(usize, usize)], probs: &[T]) -> Result<()> {
    if pairs.len() != probs.len() {
        return Err(Error::Parameter("pairs and probabilities differ in length".into()));
    }
    let mut w = writer(path.as_ref())?;
    w.write_record(["i", "j", "prob"])?;
    for (&(i, j), p) in pairs.iter().zip(probs) {
        w.write_record([i.to_string(), j.to_string(), p.as_f64().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `i,j,prob` rows into canonical pair order over `n` nodes.
pub fn read_predictions(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    let mut r = reader(path.as_ref())?;
    let total = n * n.saturating_sub(1) / 2;
    let mut out = vec![f64::NAN; total];
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let i: usize = parse(rec.get(0).unwrap_or(""), "i", line)?;
        let j: usize = parse(rec.get(1).unwrap_or(""), "j", line)?;
        let p: f64 = parse(rec.get(2).unwrap_or(""), "prob", line)?;
        if i == j || i >= n || j >= n {
            return Err(Error::Format(format!("line {line}: invalid pair ({i}, {j})")));
        }
        out[crate::graphgen::pair_index(n, i.min(j), i.max(j))] = p;
    }
    if out.iter().any(|p| p.is_nan()) {
        return Err(Error::Format("predictions do not cover every unordered pair".into()));
    }
    Ok(out)
}

/// `index,name,value` rows of a fitted model.
pub fn write_fpr_model<T: Scalar>(path: impl AsRef<Path>, model: &FprModel<T>) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(["index", "name", "value"])?;
    for (c, (name, b)) in model.features.names().iter().zip(&model.beta).enumerate() {
        w.write_record([c.to_string(), name.clone(), b.as_f64().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Coefficients of a model file, in index order.
pub fn read_fpr_coefficients(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let mut r = reader(path.as_ref())?;
    let mut rows: Vec<(usize, String, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        rows.push((
            parse(rec.get(0).unwrap_or(""), "index", line)?,
            rec.get(1).unwrap_or("").to_string(),
            parse(rec.get(2).unwrap_or(""), "value", line)?,
        ));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(pos, r)| r.0 != pos) {
        return Err(Error::Format("model file must list indices 0..d exactly once".into()));
    }
    Ok(rows.into_iter().map(|r| (r.1, r.2)).collect())
}

/// Risk table with the columns `Node ID,Degree,Betweenness,Risk Rank`.
pub fn write_risk_table(path: impl AsRef<Path>, table: &RiskTable) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    w.write_record(RiskTable::HEADER)?;
    for row in &table.rows {
        w.write_record([
            row.node.to_string(),
            row.degree.to_string(),
            row.betweenness.to_string(),
            row.rank.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_risk_table(path: impl AsRef<Path>) -> Result<Vec<RiskRow>> {
    let mut r = reader(path.as_ref())?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != RiskTable::HEADER {
        return Err(Error::Format(format!("unexpected risk header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = line_of(&rec);
        rows.push(RiskRow {
            node: parse(&rec[0], "node", line)?,
            degree: parse(&rec[1], "degree", line)?,
            betweenness: parse(&rec[2], "betweenness", line)?,
            score: f64::NAN,
            rank: parse(&rec[3], "rank", line)?,
        });
    }
    Ok(rows)
}

/// Metric reports, one per row.
pub fn write_reports(path: impl AsRef<Path>, reports: &[MetricsReport]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    for r in reports {
        w.serialize(r)?;
    }
    if reports.is_empty() {
        w.write_record([
            "method",
            "n",
            "k",
            "rho",
            "epsilon",
            "seed",
            "auc",
            "rmse",
            "rmse_kind",
            "procrustes_error",
            "runtime_seconds",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reports(path: impl AsRef<Path>) -> Result<Vec<MetricsReport>> {
    let mut r = reader(path.as_ref())?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

/// Writes any serializable rows with a header derived from the field names.
pub fn write_rows<R: Serialize>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    let mut w = writer(path.as_ref())?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_rows`].
pub fn read_rows<R: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<R>> {
    let mut r = reader(path.as_ref())?;
    r.deserialize().map(|rec| rec.map_err(Error::from)).collect()
}

/// Writes a JSON document.
pub fn write_json<S: Serialize>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Format(e.to_string()))?;
    f.write_all(b"\n")?;
    Ok(())
}
