//! Line-delimited JSON corpora, CSV tables and JSON parameter files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use srcbias_core::corpus::{Corpus, QueryRecord, RelevanceMap, Source, VideoRecord};
use srcbias_core::pvector::{PVariant, PVectorSet};
use srcbias_core::ranking::RankTable;
use srcbias_core::scorer::ScorerParams;
use srcbias_core::stats::FlowGrid;
use srcbias_core::vector::Matrix;

use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SourceTag {
    Real,
    Ai,
}

impl From<Source> for SourceTag {
    fn from(s: Source) -> Self {
        match s {
            Source::Real => SourceTag::Real,
            Source::Ai => SourceTag::Ai,
        }
    }
}

impl From<SourceTag> for Source {
    fn from(s: SourceTag) -> Self {
        match s {
            SourceTag::Real => Source::Real,
            SourceTag::Ai => Source::Ai,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VideoLine {
    id: String,
    source: SourceTag,
    frames: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryLine {
    id: String,
    embedding: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelevanceLine {
    query_id: String,
    video_id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    w: Vec<Vec<f64>>,
    tau: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PVectorLine {
    Item { id: String, p: Vec<f64> },
    Average { p_avg: Vec<f64> },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse every nonblank line of a JSONL file, reporting 1-based line numbers.
fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e))?);
    }
    if out.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(out)
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Write {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a file in one go, creating parent directories as needed.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(write_err(path))?;
    }
    fs::write(path, bytes).map_err(write_err(path))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = BufWriter::new(Vec::new());
    for item in items {
        serde_json::to_writer(&mut buf, &item).expect("serializing to memory");
        buf.write_all(b"\n").expect("writing to memory");
    }
    write_bytes(path, &buf.into_inner().expect("flushing to memory"))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let lines: Vec<VideoLine> = read_jsonl(path)?;
    let videos = lines
        .into_iter()
        .map(|l| VideoRecord::new(l.id, l.source.into(), l.frames))
        .collect();
    Corpus::new(videos).map_err(|e| Error::invalid(path, e))
}

/// Load a corpus and require every record to carry `source`.
pub fn load_corpus_from(path: &Path, source: Source) -> Result<Corpus> {
    let corpus = load_corpus(path)?;
    if let Some(v) = corpus.videos().iter().find(|v| v.source != source) {
        return Err(Error::Config(format!(
            "{}: video `{}` is tagged `{}` in a `{}` corpus",
            path.display(),
            v.id,
            v.source,
            source
        )));
    }
    Ok(corpus)
}

pub fn save_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_jsonl(
        path,
        corpus.videos().iter().map(|v| VideoLine {
            id: v.id.clone(),
            source: v.source.into(),
            frames: v.frames.clone(),
        }),
    )
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    let lines: Vec<QueryLine> = read_jsonl(path)?;
    let queries: Vec<QueryRecord> = lines.into_iter().map(|l| QueryRecord::new(l.id, l.embedding)).collect();
    let dim = queries[0].embedding.len();
    srcbias_core::corpus::validate_queries(&queries, dim).map_err(|e| Error::invalid(path, e))?;
    Ok(queries)
}

pub fn save_queries(path: &Path, queries: &[QueryRecord]) -> Result<()> {
    write_jsonl(
        path,
        queries.iter().map(|q| QueryLine {
            id: q.id.clone(),
            embedding: q.embedding.clone(),
        }),
    )
}

pub fn load_relevance(path: &Path) -> Result<RelevanceMap> {
    let lines: Vec<RelevanceLine> = read_jsonl(path)?;
    let mut rel = RelevanceMap::new();
    for l in lines {
        rel.insert(l.query_id, l.video_id).map_err(|e| Error::invalid(path, e))?;
    }
    Ok(rel)
}

pub fn save_relevance(path: &Path, rel: &RelevanceMap) -> Result<()> {
    write_jsonl(
        path,
        rel.iter().map(|(q, v)| RelevanceLine {
            query_id: q.into(),
            video_id: v.into(),
        }),
    )
}

pub fn load_params(path: &Path) -> Result<ScorerParams> {
    let text = fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ParamsFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))?;
    let d = file.w.len();
    if d == 0 || file.w.iter().any(|r| r.len() != d) {
        return Err(Error::parse(path, 1, "`w` must be a nonempty square matrix"));
    }
    let w = Matrix::from_row_major(d, d, file.w.concat()).expect("square by construction");
    ScorerParams::new(w, file.tau).map_err(|e| Error::invalid(path, e))
}

pub fn params_json(params: &ScorerParams) -> String {
    let w = params.w.as_slice().chunks(params.w.cols()).map(<[f64]>::to_vec).collect();
    let file = ParamsFile { w, tau: params.tau };
    serde_json::to_string_pretty(&file).expect("serializing params") + "\n"
}

pub fn save_pvectors(path: &Path, set: &PVectorSet) -> Result<()> {
    let items = set.ids.iter().zip(&set.p).map(|(id, p)| PVectorLine::Item {
        id: id.clone(),
        p: p.clone(),
    });
    write_jsonl(
        path,
        items.chain(std::iter::once(PVectorLine::Average {
            p_avg: set.p_avg.clone(),
        })),
    )
}

/// Load per-video shifts; a stored `p_avg` line must agree with their mean.
pub fn load_pvectors(path: &Path) -> Result<PVectorSet> {
    let lines: Vec<PVectorLine> = read_jsonl(path)?;
    let mut ids = Vec::new();
    let mut p = Vec::new();
    let mut stored = None;
    for line in lines {
        match line {
            PVectorLine::Item { id, p: v } => {
                ids.push(id);
                p.push(v);
            }
            PVectorLine::Average { p_avg } => stored = Some(p_avg),
        }
    }
    let set = PVectorSet::from_parts(ids, p, PVariant::Standard).map_err(|e| Error::invalid(path, e))?;
    if let Some(avg) = stored {
        let close = avg.len() == set.p_avg.len()
            && avg.iter().zip(&set.p_avg).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        if !close {
            return Err(Error::parse(path, 0, "`p_avg` disagrees with the mean of the listed vectors"));
        }
    }
    Ok(set)
}

pub fn rank_table_csv(table: &RankTable) -> String {
    let mut out = String::from("query_id,rank\n");
    for (q, r) in table.iter() {
        out.push_str(&format!("{q},{r}\n"));
    }
    out
}

/// Read `query_id,rank` rows. The corpus size is taken as the largest rank.
pub fn load_rank_table(path: &Path) -> Result<RankTable> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut pairs = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (i, row) in reader.deserialize::<(String, u32)>().enumerate() {
        let (q, r) = row.map_err(|e| Error::parse(path, i + 2, e))?;
        if r == 0 {
            return Err(Error::parse(path, i + 2, "ranks are 1-based"));
        }
        if !seen.insert(q.clone()) {
            return Err(Error::parse(path, i + 2, format!("duplicate query `{q}`")));
        }
        pairs.push((q, r));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let n = pairs.iter().map(|(_, r)| *r as usize).max().unwrap_or(1);
    Ok(RankTable::from_pairs(pairs, n))
}

/// Flow grids as headerless CSV rows `grid_id,m_0,...,m_{c-1}`; consecutive
/// rows with the same id form one grid.
pub fn load_flows(path: &Path) -> Result<Vec<(String, FlowGrid)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    let mut grids: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, i + 1, e))?;
        let mut fields = rec.iter();
        let id = fields.next().unwrap_or_default().to_string();
        let row = fields
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(path, i + 1, e))?;
        match grids.last_mut() {
            Some((last, rows)) if *last == id => rows.push(row),
            _ => grids.push((id, vec![row])),
        }
    }
    if grids.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    grids
        .into_iter()
        .map(|(id, rows)| {
            FlowGrid::from_rows(&rows)
                .map(|g| (id, g))
                .map_err(|e| Error::invalid(path, e))
        })
        .collect()
}

pub fn flows_csv(grids: &[FlowGrid], prefix: &str) -> String {
    let mut out = String::new();
    for (i, g) in grids.iter().enumerate() {
        for row in g.magnitudes.chunks(g.cols) {
            out.push_str(&format!("{prefix}{i:05}"));
            for m in row {
                out.push_str(&format!(",{m}"));
            }
            out.push('\n');
        }
    }
    out
}
