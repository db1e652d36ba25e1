//! Categorical datasets stored as sparse cell counts.
//!
//! A dataset is a multiset of level configurations `(x_1, ..., x_p)`. Only
//! observed configurations are stored, each with a positive count, so a
//! hyper-sparse table with a huge nominal cell space costs memory proportional
//! to the number of distinct observed rows. Levels are stored column-major.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Level of a single categorical variable.
pub type Level = u16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalDataset {
    p: usize,
    cardinalities: Vec<usize>,
    names: Vec<String>,
    n_cells: usize,
    // column-major: levels[v * n_cells + c]
    levels: Vec<Level>,
    counts: Vec<u64>,
    n: u64,
}

impl CategoricalDataset {
    /// Build from distinct cells. Duplicate configurations and zero counts are errors.
    pub fn from_cells<I>(cardinalities: Vec<usize>, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<Level>, u64)>,
    {
        let p = cardinalities.len();
        if p == 0 {
            return Err(Error::InvalidData("dataset needs at least one variable".into()));
        }
        if let Some((v, &r)) = cardinalities.iter().enumerate().find(|(_, &r)| r < 2) {
            return Err(Error::InvalidData(format!(
                "variable {v} has cardinality {r}; at least 2 required"
            )));
        }
        if let Some((v, &r)) = cardinalities
            .iter()
            .enumerate()
            .find(|(_, &r)| r > Level::MAX as usize + 1)
        {
            return Err(Error::InvalidData(format!(
                "variable {v} has cardinality {r}, above the supported maximum"
            )));
        }
        let mut map: BTreeMap<Vec<Level>, u64> = BTreeMap::new();
        for (config, count) in cells {
            if config.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: config.len(),
                });
            }
            if count == 0 {
                return Err(Error::InvalidData("cell counts must be positive".into()));
            }
            for (v, &x) in config.iter().enumerate() {
                if x as usize >= cardinalities[v] {
                    return Err(Error::InvalidData(format!(
                        "level {x} of variable {v} exceeds cardinality {}",
                        cardinalities[v]
                    )));
                }
            }
            if map.insert(config.clone(), count).is_some() {
                return Err(Error::InvalidData(format!("duplicate cell {config:?}")));
            }
        }
        Ok(Self::from_sorted_map(cardinalities, map))
    }

    fn from_sorted_map(cardinalities: Vec<usize>, map: BTreeMap<Vec<Level>, u64>) -> Self {
        let p = cardinalities.len();
        let n_cells = map.len();
        let mut levels = vec![0; p * n_cells];
        let mut counts = Vec::with_capacity(n_cells);
        for (c, (config, count)) in map.into_iter().enumerate() {
            for (v, x) in config.into_iter().enumerate() {
                levels[v * n_cells + c] = x;
            }
            counts.push(count);
        }
        let n = counts.iter().sum();
        CategoricalDataset {
            p,
            names: default_names(p),
            cardinalities,
            n_cells,
            levels,
            counts,
            n,
        }
    }

    /// Build from raw observations, inferring each cardinality as `max level + 1`
    /// (at least 2).
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_weighted_rows(rows.iter().map(|r| (r.as_ref(), 1)), None)
    }

    /// Build from raw observations with explicit cardinalities.
    pub fn from_rows_with_cardinalities<R: AsRef<[i64]>>(
        rows: &[R],
        cardinalities: Vec<usize>,
    ) -> Result<Self> {
        Self::from_weighted_rows(rows.iter().map(|r| (r.as_ref(), 1)), Some(cardinalities))
    }

    fn from_weighted_rows<'a, I>(rows: I, cardinalities: Option<Vec<usize>>) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [i64], u64)>,
    {
        let mut map: BTreeMap<Vec<Level>, u64> = BTreeMap::new();
        let mut width = None;
        for (r, (row, weight)) in rows.into_iter().enumerate() {
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::InvalidData(format!(
                        "ragged rows: row {r} has {} entries, expected {w}",
                        row.len()
                    )))
                }
                _ => {}
            }
            let config = row
                .iter()
                .map(|&x| {
                    if x < 0 {
                        Err(Error::InvalidData(format!("negative level {x} in row {r}")))
                    } else if x > Level::MAX as i64 {
                        Err(Error::InvalidData(format!("level {x} in row {r} is too large")))
                    } else {
                        Ok(x as Level)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if weight > 0 {
                *map.entry(config).or_insert(0) += weight;
            }
        }
        let width = width.ok_or_else(|| Error::InvalidData("no rows".into()))?;
        if width == 0 {
            return Err(Error::InvalidData("rows have no columns".into()));
        }
        if map.is_empty() {
            return Err(Error::InvalidData("all row weights are zero".into()));
        }
        let cardinalities = match cardinalities {
            Some(c) => {
                if c.len() != width {
                    return Err(Error::DimensionMismatch {
                        expected: c.len(),
                        found: width,
                    });
                }
                c
            }
            None => {
                let mut c = vec![2usize; width];
                for config in map.keys() {
                    for (v, &x) in config.iter().enumerate() {
                        c[v] = c[v].max(x as usize + 1);
                    }
                }
                c
            }
        };
        let cells: Vec<_> = map.into_iter().collect();
        Self::from_cells(cardinalities, cells)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                found: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Total sample count.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cardinality(&self, v: usize) -> usize {
        self.cardinalities[v]
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Levels of variable `v` across all cells.
    #[inline]
    pub fn column(&self, v: usize) -> &[Level] {
        &self.levels[v * self.n_cells..(v + 1) * self.n_cells]
    }

    #[inline]
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Configuration of a single cell.
    pub fn cell(&self, c: usize) -> Vec<Level> {
        (0..self.p).map(|v| self.levels[v * self.n_cells + c]).collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = (Vec<Level>, u64)> + '_ {
        (0..self.n_cells).map(move |c| (self.cell(c), self.counts[c]))
    }

    /// Expand cells back into one row per observation.
    pub fn expand_rows(&self) -> Vec<Vec<Level>> {
        let mut rows = Vec::with_capacity(self.n as usize);
        for (config, count) in self.cells() {
            for _ in 0..count {
                rows.push(config.clone());
            }
        }
        rows
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.p {
            Err(Error::VertexOutOfRange { vertex: v, p: self.p })
        } else {
            Ok(())
        }
    }

    /// Validate a neighborhood for vertex `i` and return it sorted.
    pub fn check_neighborhood(&self, i: usize, nbd: &[usize]) -> Result<Vec<usize>> {
        self.check_vertex(i)?;
        let mut sorted = nbd.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &v in &sorted {
            self.check_vertex(v)?;
            if v == i {
                return Err(Error::VertexInNeighborhood(i));
            }
        }
        Ok(sorted)
    }

    /// Counts `n_{i,kl}` of variable `i` at level `k` jointly with neighborhood
    /// configuration `l`, over observed configurations only.
    pub fn count_config(&self, i: usize, nbd: &[usize]) -> Result<ConditionalCounts> {
        let nbd = self.check_neighborhood(i, nbd)?;
        let r = self.cardinalities[i];
        let mut table: BTreeMap<Vec<Level>, Vec<u64>> = BTreeMap::new();
        let col_i = self.column(i);
        let cols: Vec<&[Level]> = nbd.iter().map(|&v| self.column(v)).collect();
        for c in 0..self.n_cells {
            let key: Vec<Level> = cols.iter().map(|col| col[c]).collect();
            table.entry(key).or_insert_with(|| vec![0; r])[col_i[c] as usize] += self.counts[c];
        }
        Ok(ConditionalCounts {
            vertex: i,
            cardinality: r,
            neighborhood: nbd,
            table,
        })
    }

    /// Parse the sparse binary pattern format.
    ///
    /// Header `#p=<count>`, then one cell per line:
    /// `<comma-separated indices of variables at level 1>|<count>`.
    pub fn read_sparse_binary<R: BufRead>(input: R) -> Result<Self> {
        let mut p: Option<usize> = None;
        let mut map: BTreeMap<Vec<Level>, u64> = BTreeMap::new();
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if p.is_none() {
                    let value = rest
                        .trim()
                        .strip_prefix("p=")
                        .and_then(|v| v.trim().parse::<usize>().ok())
                        .ok_or_else(|| Error::parse(lineno, "expected header `#p=<count>`"))?;
                    if value == 0 {
                        return Err(Error::parse(lineno, "p must be positive"));
                    }
                    p = Some(value);
                }
                continue;
            }
            let p = p.ok_or_else(|| Error::parse(lineno, "cell line before `#p=` header"))?;
            let (indices, count) = line
                .split_once('|')
                .ok_or_else(|| Error::parse(lineno, "missing `|` separator"))?;
            let count: i64 = count
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad count `{}`", count.trim())))?;
            if count <= 0 {
                return Err(Error::parse(lineno, format!("count must be positive, got {count}")));
            }
            let mut config = vec![0 as Level; p];
            let indices = indices.trim();
            if !indices.is_empty() {
                for token in indices.split(',') {
                    let v: usize = token
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad index `{}`", token.trim())))?;
                    if v >= p {
                        return Err(Error::parse(lineno, format!("index {v} out of range for p={p}")));
                    }
                    if config[v] == 1 {
                        return Err(Error::parse(lineno, format!("index {v} repeated")));
                    }
                    config[v] = 1;
                }
            }
            if map.insert(config, count as u64).is_some() {
                return Err(Error::parse(lineno, "duplicate pattern"));
            }
        }
        let p = p.ok_or_else(|| Error::parse(0, "missing `#p=<count>` header"))?;
        if map.is_empty() {
            return Err(Error::InvalidData("sparse file contains no cells".into()));
        }
        let names = (0..p).map(|v| format!("X{v}")).collect();
        Ok(Self::from_sorted_map(vec![2; p], map).with_names_unchecked(names))
    }

    pub fn load_sparse_binary(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_sparse_binary(BufReader::new(File::open(path)?))
    }

    /// Write the sparse binary pattern format. Every variable must be binary.
    pub fn write_sparse_binary<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(v) = self.cardinalities.iter().position(|&r| r != 2) {
            return Err(Error::InvalidData(format!(
                "variable {v} is not binary; sparse pattern format requires binary data"
            )));
        }
        writeln!(out, "#p={}", self.p)?;
        for c in 0..self.n_cells {
            let ones: Vec<String> = (0..self.p)
                .filter(|&v| self.levels[v * self.n_cells + c] == 1)
                .map(|v| v.to_string())
                .collect();
            writeln!(out, "{}|{}", ones.join(","), self.counts[c])?;
        }
        Ok(())
    }

    /// Parse dense CSV: a header of variable names, integer levels per row and an
    /// optional final `count` column holding row weights.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        let weighted = headers.last().is_some_and(|h| h.eq_ignore_ascii_case("count"));
        let p = headers.len() - usize::from(weighted);
        if p == 0 {
            return Err(Error::InvalidData("CSV has no variable columns".into()));
        }
        let mut rows: Vec<(Vec<i64>, u64)> = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let line = r + 2;
            if record.len() != headers.len() {
                return Err(Error::parse(line, "ragged row"));
            }
            let values = record
                .iter()
                .take(p)
                .map(|f| {
                    f.parse::<i64>()
                        .map_err(|_| Error::parse(line, format!("bad level `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            let weight = if weighted {
                let f = &record[p];
                let w: i64 = f
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad count `{f}`")))?;
                if w < 0 {
                    return Err(Error::parse(line, format!("negative count {w}")));
                }
                w as u64
            } else {
                1
            };
            rows.push((values, weight));
        }
        let data = Self::from_weighted_rows(rows.iter().map(|(v, w)| (v.as_slice(), *w)), None)?;
        data.with_names(headers.into_iter().take(p).collect())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }

    /// Write dense CSV with one row per distinct cell and a trailing `count` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.push("count");
        writer.write_record(&header)?;
        for (config, count) in self.cells() {
            let mut record: Vec<String> = config.iter().map(|x| x.to_string()).collect();
            record.push(count.to_string());
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Load either format, choosing sparse when the first line is a `#p=` header.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = BufReader::new(File::open(path)?);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let sparse = first.trim_start().starts_with("#p=");
        let reader = BufReader::new(File::open(path)?);
        if sparse {
            Self::read_sparse_binary(reader)
        } else {
            Self::read_csv(reader)
        }
    }

    fn with_names_unchecked(mut self, names: Vec<String>) -> Self {
        self.names = names;
        self
    }

    /// Dataset restricted to a subset of variables, with cells merged.
    pub fn select(&self, vars: &[usize]) -> Result<Self> {
        let mut map: BTreeMap<Vec<Level>, u64> = BTreeMap::new();
        for &v in vars {
            self.check_vertex(v)?;
        }
        for c in 0..self.n_cells {
            let key: Vec<Level> = vars.iter().map(|&v| self.levels[v * self.n_cells + c]).collect();
            *map.entry(key).or_insert(0) += self.counts[c];
        }
        let cards = vars.iter().map(|&v| self.cardinalities[v]).collect();
        let names = vars.iter().map(|&v| self.names[v].clone()).collect();
        Ok(Self::from_sorted_map(cards, map).with_names_unchecked(names))
    }
}

fn default_names(p: usize) -> Vec<String> {
    (0..p).map(|v| format!("X{v}")).collect()
}

/// Joint counts of one variable with the configurations of a conditioning set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalCounts {
    vertex: usize,
    cardinality: usize,
    neighborhood: Vec<usize>,
    table: BTreeMap<Vec<Level>, Vec<u64>>,
}

impl ConditionalCounts {
    pub fn vertex(&self) -> usize {
        self.vertex
    }

    /// Conditioning variables in ascending order.
    pub fn neighborhood(&self) -> &[usize] {
        &self.neighborhood
    }

    /// Observed neighborhood configurations with per-level counts.
    pub fn iter(&self) -> impl Iterator<Item = (&[Level], &[u64])> {
        self.table.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    pub fn n_configurations(&self) -> usize {
        self.table.len()
    }

    /// `n_{i,kl}`; zero when `l` was never observed.
    pub fn get(&self, k: Level, l: &[Level]) -> u64 {
        self.table
            .get(l)
            .and_then(|row| row.get(k as usize).copied())
            .unwrap_or(0)
    }

    /// `n_{i,+l}`.
    pub fn marginal(&self, l: &[Level]) -> u64 {
        self.table.get(l).map_or(0, |row| row.iter().sum())
    }

    /// Number of `(k, l)` entries with a positive count.
    pub fn nonzero_entries(&self) -> usize {
        self.table.values().flatten().filter(|&&c| c > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.table.values().flatten().sum()
    }

    /// Sum out every neighborhood variable not listed in `keep`.
    pub fn marginalize(&self, keep: &[usize]) -> Result<ConditionalCounts> {
        let positions = keep
            .iter()
            .map(|v| {
                self.neighborhood
                    .binary_search(v)
                    .map_err(|_| Error::InvalidParameter(format!("{v} is not in the neighborhood")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut order: Vec<(usize, usize)> = keep.iter().copied().zip(positions).collect();
        order.sort_unstable();
        order.dedup();
        let mut table: BTreeMap<Vec<Level>, Vec<u64>> = BTreeMap::new();
        for (l, row) in &self.table {
            let key: Vec<Level> = order.iter().map(|&(_, pos)| l[pos]).collect();
            let acc = table.entry(key).or_insert_with(|| vec![0; self.cardinality]);
            for (a, &c) in acc.iter_mut().zip(row) {
                *a += c;
            }
        }
        Ok(ConditionalCounts {
            vertex: self.vertex,
            cardinality: self.cardinality,
            neighborhood: order.into_iter().map(|(v, _)| v).collect(),
            table,
        })
    }
}
