//! Chain output: the initial graph plus one record per iteration.
//!
//! Record `t` describes the graph held during iteration `t` (its edge count
//! and expected holding time) and the edge toggles that end the iteration.
//! Graph `t + 1` is graph `t` with those toggles applied, so the full sequence
//! of sampled graphs is recovered exactly by replaying from the initial graph.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeMove, UndirectedGraph};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: u64,
    pub waiting_time: f64,
    /// Cumulative holding time up to and including this iteration.
    pub jump_time: f64,
    pub edge_count: usize,
    pub toggles: Vec<(Edge, EdgeMove)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Binary,
}

impl TraceFormat {
    /// `.bin` selects the binary format, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => TraceFormat::Binary,
            _ => TraceFormat::Csv,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    initial: UndirectedGraph,
    burn_in: usize,
    records: Vec<TraceRecord>,
}

const CSV_HEADER: [&str; 7] = [
    "iteration",
    "jump_time",
    "waiting_time",
    "delta_edge_i",
    "delta_edge_j",
    "delta_sign",
    "edge_count",
];

const MAGIC: &[u8; 8] = b"CGTRACE1";

impl ChainTrace {
    pub fn new(initial: UndirectedGraph, burn_in: usize) -> Self {
        ChainTrace {
            initial,
            burn_in,
            records: Vec::new(),
        }
    }

    /// Build a trace from explicit `(graph, waiting time)` states, e.g. for tests.
    pub fn from_states(states: &[(UndirectedGraph, f64)], burn_in: usize) -> Result<Self> {
        let (first, _) = states
            .first()
            .ok_or_else(|| Error::InvalidParameter("no states".into()))?;
        let mut trace = ChainTrace::new(first.clone(), burn_in);
        for (k, (g, w)) in states.iter().enumerate() {
            if g.p() != first.p() {
                return Err(Error::DimensionMismatch {
                    expected: first.p(),
                    found: g.p(),
                });
            }
            let toggles = match states.get(k + 1) {
                Some((next, _)) => crate::graph::all_edges(g.p())
                    .filter(|&e| g.contains(e) != next.contains(e))
                    .map(|e| {
                        let mv = if next.contains(e) {
                            EdgeMove::Birth
                        } else {
                            EdgeMove::Death
                        };
                        (e, mv)
                    })
                    .collect(),
                None => Vec::new(),
            };
            trace.push(*w, g.edge_count(), toggles)?;
        }
        Ok(trace)
    }

    /// Append one iteration.
    pub fn push(&mut self, waiting_time: f64, edge_count: usize, toggles: Vec<(Edge, EdgeMove)>) -> Result<()> {
        if !(waiting_time > 0.0 && waiting_time.is_finite()) {
            return Err(Error::InvalidData(format!(
                "waiting time must be positive and finite, got {waiting_time}"
            )));
        }
        let prev = self.records.last().map_or(0.0, |r| r.jump_time);
        self.records.push(TraceRecord {
            iteration: self.records.len() as u64,
            waiting_time,
            jump_time: prev + waiting_time,
            edge_count,
            toggles,
        });
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.initial.p()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn set_burn_in(&mut self, burn_in: usize) {
        self.burn_in = burn_in;
    }

    pub fn initial(&self) -> &UndirectedGraph {
        &self.initial
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Visit every held graph together with its record, in order.
    pub fn for_each_state<F: FnMut(&UndirectedGraph, &TraceRecord)>(&self, mut f: F) {
        let mut g = self.initial.clone();
        for rec in &self.records {
            f(&g, rec);
            for &(e, _) in &rec.toggles {
                g.toggle(e);
            }
        }
    }

    /// Graph reached after the last recorded jump.
    pub fn final_graph(&self) -> UndirectedGraph {
        let mut g = self.initial.clone();
        for rec in &self.records {
            for &(e, _) in &rec.toggles {
                g.toggle(e);
            }
        }
        g
    }

    /// Check replay consistency: edge counts, toggle directions and jump times.
    pub fn validate(&self) -> Result<()> {
        let mut g = self.initial.clone();
        let mut prev_t = 0.0;
        for (k, rec) in self.records.iter().enumerate() {
            if rec.edge_count != g.edge_count() {
                return Err(Error::InvalidData(format!(
                    "record {k}: edge count {} does not match replayed graph ({})",
                    rec.edge_count,
                    g.edge_count()
                )));
            }
            if !(rec.jump_time > prev_t) || !(rec.waiting_time > 0.0) {
                return Err(Error::InvalidData(format!(
                    "record {k}: jump times must increase strictly"
                )));
            }
            prev_t = rec.jump_time;
            for &(e, mv) in &rec.toggles {
                if e.j() >= g.p() {
                    return Err(Error::VertexOutOfRange { vertex: e.j(), p: g.p() });
                }
                if g.toggle(e) != mv {
                    return Err(Error::InvalidData(format!(
                        "record {k}: toggle of {e} disagrees with its sign"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "#p={}", self.p())?;
        writeln!(out, "#burn_in={}", self.burn_in)?;
        let init: Vec<String> = self
            .initial
            .edges()
            .map(|e| format!("{}-{}", e.i(), e.j()))
            .collect();
        writeln!(out, "#initial={}", init.join(";"))?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for rec in &self.records {
            let base = [
                rec.iteration.to_string(),
                rec.jump_time.to_string(),
                rec.waiting_time.to_string(),
            ];
            let count = rec.edge_count.to_string();
            if rec.toggles.is_empty() {
                writer.write_record(base.iter().map(String::as_str).chain(["", "", "", count.as_str()]))?;
            }
            for &(e, mv) in &rec.toggles {
                let fields = [e.i().to_string(), e.j().to_string(), mv.sign().to_string()];
                writer.write_record(
                    base.iter()
                        .chain(fields.iter())
                        .map(String::as_str)
                        .chain([count.as_str()]),
                )?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut p = None;
        let mut burn_in = 0usize;
        let mut initial_edges: Vec<(usize, usize)> = Vec::new();
        let mut line = String::new();
        let mut lineno = 0;
        // metadata lines come first; stop at the CSV header
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(Error::parse(lineno, "missing trace header"));
            }
            lineno += 1;
            let trimmed = line.trim();
            let Some(meta) = trimmed.strip_prefix('#') else {
                break;
            };
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, "expected `#key=value`"))?;
            match key.trim() {
                "p" => {
                    p = Some(value.trim().parse::<usize>().map_err(|_| Error::parse(lineno, "bad p"))?)
                }
                "burn_in" => {
                    burn_in = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(lineno, "bad burn_in"))?
                }
                "initial" => {
                    for pair in value.trim().split(';').filter(|s| !s.is_empty()) {
                        let (a, b) = pair
                            .split_once('-')
                            .ok_or_else(|| Error::parse(lineno, format!("bad edge `{pair}`")))?;
                        let a = a.parse().map_err(|_| Error::parse(lineno, "bad vertex"))?;
                        let b = b.parse().map_err(|_| Error::parse(lineno, "bad vertex"))?;
                        initial_edges.push((a, b));
                    }
                }
                _ => {}
            }
        }
        let p = p.ok_or_else(|| Error::parse(lineno, "missing `#p=` metadata"))?;
        let header: Vec<&str> = line.trim().split(',').collect();
        if header != CSV_HEADER {
            return Err(Error::parse(lineno, "unexpected trace column header"));
        }
        let initial = UndirectedGraph::from_edges(p, initial_edges)?;
        let mut trace = ChainTrace::new(initial, burn_in);
        let mut csv_reader = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        for (k, record) in csv_reader.records().enumerate() {
            let record = record?;
            let row = lineno + k + 1;
            if record.len() != CSV_HEADER.len() {
                return Err(Error::parse(row, "wrong number of trace columns"));
            }
            let num = |idx: usize| -> Result<&str> { Ok(record.get(idx).unwrap_or("")) };
            let iteration: u64 = num(0)?.parse().map_err(|_| Error::parse(row, "bad iteration"))?;
            let jump_time: f64 = num(1)?.parse().map_err(|_| Error::parse(row, "bad jump_time"))?;
            let waiting_time: f64 = num(2)?.parse().map_err(|_| Error::parse(row, "bad waiting_time"))?;
            let edge_count: usize = num(6)?.parse().map_err(|_| Error::parse(row, "bad edge_count"))?;
            let toggle = if num(3)?.is_empty() {
                None
            } else {
                let i: usize = num(3)?.parse().map_err(|_| Error::parse(row, "bad delta_edge_i"))?;
                let j: usize = num(4)?.parse().map_err(|_| Error::parse(row, "bad delta_edge_j"))?;
                let sign: i8 = num(5)?.parse().map_err(|_| Error::parse(row, "bad delta_sign"))?;
                let mv = EdgeMove::from_sign(sign).ok_or_else(|| Error::parse(row, "delta_sign must be ±1"))?;
                let e = Edge::new(i, j).map_err(|e| Error::parse(row, e.to_string()))?;
                if e.j() >= p {
                    return Err(Error::parse(row, format!("edge {e} out of range")));
                }
                Some((e, mv))
            };
            match trace.records.last_mut() {
                Some(last) if last.iteration == iteration => {
                    let t = toggle.ok_or_else(|| Error::parse(row, "empty delta in grouped row"))?;
                    last.toggles.push(t);
                }
                _ => {
                    if iteration != trace.records.len() as u64 {
                        return Err(Error::parse(row, "iterations must be consecutive from 0"));
                    }
                    trace.records.push(TraceRecord {
                        iteration,
                        waiting_time,
                        jump_time,
                        edge_count,
                        toggles: toggle.into_iter().collect(),
                    });
                }
            }
        }
        Ok(trace)
    }

    pub fn write_binary<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(MAGIC)?;
        out.write_all(&(self.p() as u32).to_le_bytes())?;
        out.write_all(&(self.burn_in as u64).to_le_bytes())?;
        out.write_all(&(self.initial.edge_count() as u64).to_le_bytes())?;
        for e in self.initial.edges() {
            out.write_all(&(e.i() as u32).to_le_bytes())?;
            out.write_all(&(e.j() as u32).to_le_bytes())?;
        }
        out.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for rec in &self.records {
            out.write_all(&rec.iteration.to_le_bytes())?;
            out.write_all(&rec.waiting_time.to_le_bytes())?;
            out.write_all(&rec.jump_time.to_le_bytes())?;
            out.write_all(&(rec.edge_count as u64).to_le_bytes())?;
            out.write_all(&(rec.toggles.len() as u32).to_le_bytes())?;
            for &(e, mv) in &rec.toggles {
                out.write_all(&(e.i() as u32).to_le_bytes())?;
                out.write_all(&(e.j() as u32).to_le_bytes())?;
                out.write_all(&mv.sign().to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(input: R) -> Result<Self> {
        let mut r = BufReader::new(input);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::parse(0, "not a binary trace file"));
        }
        let p = read_u32(&mut r)? as usize;
        let burn_in = read_u64(&mut r)? as usize;
        let n_init = read_u64(&mut r)?;
        let mut edges = Vec::new();
        for _ in 0..n_init {
            edges.push((read_u32(&mut r)? as usize, read_u32(&mut r)? as usize));
        }
        let mut trace = ChainTrace::new(UndirectedGraph::from_edges(p, edges)?, burn_in);
        let n_records = read_u64(&mut r)?;
        for _ in 0..n_records {
            let iteration = read_u64(&mut r)?;
            let waiting_time = f64::from_le_bytes(read_array(&mut r)?);
            let jump_time = f64::from_le_bytes(read_array(&mut r)?);
            let edge_count = read_u64(&mut r)? as usize;
            let n_toggles = read_u32(&mut r)?;
            let mut toggles = Vec::with_capacity(n_toggles as usize);
            for _ in 0..n_toggles {
                let i = read_u32(&mut r)? as usize;
                let j = read_u32(&mut r)? as usize;
                let [sign] = read_array::<1, _>(&mut r)?;
                let mv = EdgeMove::from_sign(sign as i8)
                    .ok_or_else(|| Error::parse(0, "bad toggle sign"))?;
                let e = Edge::new(i, j)?;
                if e.j() >= p {
                    return Err(Error::VertexOutOfRange { vertex: e.j(), p });
                }
                toggles.push((e, mv));
            }
            trace.records.push(TraceRecord {
                iteration,
                waiting_time,
                jump_time,
                edge_count,
                toggles,
            });
        }
        Ok(trace)
    }

    pub fn save(&self, path: impl AsRef<Path>, format: TraceFormat) -> Result<()> {
        let file = File::create(path)?;
        match format {
            TraceFormat::Csv => self.write_csv(file),
            TraceFormat::Binary => self.write_binary(file),
        }
    }

    /// Load either format, detected from the file's leading bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = File::open(path.as_ref())?;
        let mut head = [0u8; 8];
        let n = file.read(&mut head)?;
        let file = File::open(path.as_ref())?;
        if n == 8 && &head == MAGIC {
            Self::read_binary(file)
        } else {
            Self::read_csv(file)
        }
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> ChainTrace {
        let g0 = UndirectedGraph::empty(4);
        let g1 = g0.toggle_edge(0, 1).unwrap();
        let g2 = g1.toggle_edge(2, 3).unwrap().toggle_edge(0, 2).unwrap();
        let g3 = g2.toggle_edge(0, 1).unwrap();
        ChainTrace::from_states(&[(g0, 0.5), (g1, 0.25), (g2, 1.0 / 3.0), (g3, 2.0)], 1).unwrap()
    }

    #[test]
    fn jump_times_accumulate() {
        let t = sample_trace();
        t.validate().unwrap();
        let times: Vec<f64> = t.records().iter().map(|r| r.jump_time).collect();
        assert_eq!(times[0], 0.5);
        assert_eq!(times[1], 0.75);
        for (k, r) in t.records().iter().enumerate().skip(1) {
            assert_eq!(r.jump_time, t.records()[k - 1].jump_time + r.waiting_time);
        }
    }

    #[test]
    fn csv_and_binary_roundtrip() {
        let t = sample_trace();
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(ChainTrace::read_csv(csv.as_slice()).unwrap(), t);
        let text = String::from_utf8(csv).unwrap();
        assert!(text.contains(
            "iteration,jump_time,waiting_time,delta_edge_i,delta_edge_j,delta_sign,edge_count"
        ));

        let mut bin = Vec::new();
        t.write_binary(&mut bin).unwrap();
        assert_eq!(ChainTrace::read_binary(bin.as_slice()).unwrap(), t);
    }

    #[test]
    fn final_graph_replays_toggles() {
        let t = sample_trace();
        let expected = UndirectedGraph::from_edges(4, [(0, 2), (2, 3)]).unwrap();
        assert_eq!(t.final_graph(), expected);
        let mut counts = Vec::new();
        t.for_each_state(|g, r| {
            assert_eq!(g.edge_count(), r.edge_count);
            counts.push(g.edge_count());
        });
        assert_eq!(counts, vec![0, 1, 3, 2]);
    }

    #[test]
    fn validate_catches_inconsistency() {
        let mut t = sample_trace();
        t.records[2].edge_count = 7;
        assert!(t.validate().is_err());
        let mut t = sample_trace();
        t.records[1].toggles[0].1 = EdgeMove::Death;
        assert!(t.validate().is_err());
    }

    #[test]
    fn rejects_nonpositive_waiting_time() {
        let mut t = ChainTrace::new(UndirectedGraph::empty(3), 0);
        assert!(t.push(0.0, 0, Vec::new()).is_err());
        assert!(t.push(f64::INFINITY, 0, Vec::new()).is_err());
    }
}
