//! CSV series loading, chronological splitting, train-statistics
//! standardization and lookback/horizon window batching.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcore::Tensor;

/// Stds below this are treated as a constant channel.
pub const MIN_STD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

impl From<&str> for TargetColumn {
    fn from(s: &str) -> Self {
        TargetColumn::Name(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let r = Self { train, val, test };
        if !(train > 0.0 && val > 0.0 && test > 0.0) || ((train + val + test) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split ratios must be positive and sum to 1, got {train},{val},{test}"
            )));
        }
        Ok(r)
    }
}

/// Per-channel location/scale fitted on the training rows. Channel order is
/// the exogenous channels followed by the target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Aligned exogenous matrix `x` (`len × d_x`, row-major) and target `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesDataset {
    pub timestamps: Option<Vec<String>>,
    x: Vec<f32>,
    y: Vec<f32>,
    d_x: usize,
    pub channel_names: Vec<String>,
    pub target_name: String,
    split_bounds: Option<(usize, usize)>,
    standardizer: Option<Standardizer>,
}

impl SeriesDataset {
    pub fn new(
        x: Vec<f32>,
        y: Vec<f32>,
        channel_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let d_x = channel_names.len();
        if d_x == 0 {
            return Err(Error::InvalidConfig(
                "at least one exogenous channel is required".into(),
            ));
        }
        if x.len() != y.len() * d_x {
            return Err(Error::shape(&[x.len()], &[y.len(), d_x]));
        }
        if let Some(i) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite value at flat position {i}"
            )));
        }
        Ok(Self {
            timestamps: None,
            x,
            y,
            d_x,
            channel_names,
            target_name: target_name.into(),
            split_bounds: None,
            standardizer: None,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn x(&self) -> &[f32] {
        &self.x
    }

    pub fn y(&self) -> &[f32] {
        &self.y
    }

    pub fn x_at(&self, t: usize, c: usize) -> f32 {
        self.x[t * self.d_x + c]
    }

    /// Exogenous channel `c` as a contiguous series.
    pub fn x_channel(&self, c: usize) -> Vec<f32> {
        (0..self.len()).map(|t| self.x_at(t, c)).collect()
    }

    pub fn split_bounds(&self) -> Option<(usize, usize)> {
        self.split_bounds
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    /// Half-open row range of a split.
    pub fn segment(&self, split: Split) -> Result<(usize, usize)> {
        let (train_end, val_end) = self
            .split_bounds
            .ok_or_else(|| Error::InvalidConfig("dataset has not been split".into()))?;
        Ok(match split {
            Split::Train => (0, train_end),
            Split::Val => (train_end, val_end),
            Split::Test => (val_end, self.len()),
        })
    }

    /// Sets explicit `(train_end, val_end)` borders.
    pub fn with_borders(
        mut self,
        train_end: usize,
        val_end: usize,
        min_segment: usize,
    ) -> Result<Self> {
        let n = self.len();
        if !(0 < train_end && train_end < val_end && val_end <= n) {
            return Err(Error::DegenerateSplit(format!(
                "borders ({train_end}, {val_end}) invalid for series of length {n}"
            )));
        }
        for (name, len) in [
            ("train", train_end),
            ("val", val_end - train_end),
            ("test", n - val_end),
        ] {
            if len < min_segment {
                return Err(Error::DegenerateSplit(format!(
                    "{name} segment has {len} rows, windows need {min_segment}"
                )));
            }
        }
        self.split_bounds = Some((train_end, val_end));
        self.standardizer = None;
        Ok(self)
    }

    /// Chronological split at `(⌊T·train⌋, ⌊T·(train+val)⌋)`. Every segment
    /// must hold at least `min_segment` (= L + H) rows.
    pub fn chrono_split(self, ratios: SplitRatios, min_segment: usize) -> Result<Self> {
        let ratios = SplitRatios::new(ratios.train, ratios.val, ratios.test)?;
        let n = self.len() as f64;
        // The small bias keeps products like 10 · 0.8 = 7.999… from flooring down.
        let train_end = (n * ratios.train + 1e-9).floor() as usize;
        let val_end = (n * (ratios.train + ratios.val) + 1e-9).floor() as usize;
        if train_end == 0 || val_end <= train_end {
            return Err(Error::DegenerateSplit(format!(
                "series of length {} too short for ratios {:?}",
                self.len(),
                ratios
            )));
        }
        self.with_borders(train_end, val_end, min_segment)
    }

    /// `(v − mean_train) / std_train` for every channel, population std.
    pub fn standardize(mut self) -> Result<Self> {
        let (_, train_end) = self.segment(Split::Train)?;
        let d = self.d_x;
        let mut mean = Vec::with_capacity(d + 1);
        let mut std = Vec::with_capacity(d + 1);
        let names: Vec<String> = self
            .channel_names
            .iter()
            .chain([&self.target_name])
            .cloned()
            .collect();
        for (c, name) in names.iter().enumerate() {
            let vals =
                (0..train_end).map(|t| if c < d { self.x[t * d + c] } else { self.y[t] } as f64);
            let (m, s) = mean_std(vals);
            if s < MIN_STD {
                return Err(Error::ConstantChannel(name.clone()));
            }
            mean.push(m);
            std.push(s);
        }
        for t in 0..self.len() {
            for c in 0..d {
                let v = &mut self.x[t * d + c];
                *v = ((*v as f64 - mean[c]) / std[c]) as f32;
            }
            self.y[t] = ((self.y[t] as f64 - mean[d]) / std[d]) as f32;
        }
        self.standardizer = Some(Standardizer { mean, std });
        Ok(self)
    }

    /// Inverse of [`standardize`](Self::standardize).
    pub fn destandardize(mut self) -> Result<Self> {
        let Some(st) = self.standardizer.take() else {
            return Err(Error::InvalidConfig("dataset is not standardized".into()));
        };
        let d = self.d_x;
        for t in 0..self.len() {
            for c in 0..d {
                let v = &mut self.x[t * d + c];
                *v = (*v as f64 * st.std[c] + st.mean[c]) as f32;
            }
            self.y[t] = (self.y[t] as f64 * st.std[d] + st.mean[d]) as f32;
        }
        Ok(self)
    }

    /// Number of windows a split yields for lookback `l` and horizon `h`.
    pub fn window_count(&self, split: Split, l: usize, h: usize) -> Result<usize> {
        let (start, end) = self.segment(split)?;
        Ok((end - start + 1).saturating_sub(l + h))
    }

    /// Window anchors `t` (index of the last lookback row) for a split.
    pub fn anchors(&self, split: Split, l: usize, h: usize) -> Result<Vec<usize>> {
        if l == 0 || h == 0 {
            return Err(Error::InvalidConfig(
                "lookback and horizon must be ≥ 1".into(),
            ));
        }
        let (start, end) = self.segment(split)?;
        if end - start < l + h {
            return Err(Error::DegenerateSplit(format!(
                "{split:?} segment has {} rows, windows need {}",
                end - start,
                l + h
            )));
        }
        Ok((start + l - 1..=end - h - 1).collect())
    }

    /// Builds the batch for the given anchors.
    pub fn batch(&self, anchors: &[usize], l: usize, h: usize) -> WindowBatch {
        let d = self.d_x;
        let b = anchors.len();
        let mut x_l = Vec::with_capacity(b * l * d);
        let mut y_l = Vec::with_capacity(b * l);
        let mut x_h = Vec::with_capacity(b * h * d);
        let mut y_h = Vec::with_capacity(b * h);
        for &t in anchors {
            let lo = t + 1 - l;
            x_l.extend_from_slice(&self.x[lo * d..(t + 1) * d]);
            y_l.extend_from_slice(&self.y[lo..t + 1]);
            x_h.extend_from_slice(&self.x[(t + 1) * d..(t + 1 + h) * d]);
            y_h.extend_from_slice(&self.y[t + 1..t + 1 + h]);
        }
        WindowBatch {
            x_l: Tensor::new(&[b, l, d], x_l).expect("window shape"),
            y_l: Tensor::new(&[b, l, 1], y_l).expect("window shape"),
            x_h: Tensor::new(&[b, h, d], x_h).expect("window shape"),
            y_h: Tensor::new(&[b, h, 1], y_h).expect("window shape"),
            anchor_indices: anchors.to_vec(),
        }
    }

    /// Batched windows of a split. Only the train stream is meant to be
    /// shuffled; evaluation streams stay in time order.
    pub fn make_windows(&self, opts: WindowOptions) -> Result<WindowStream<'_>> {
        let mut anchors = self.anchors(opts.split, opts.lookback, opts.horizon)?;
        if opts.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be ≥ 1".into()));
        }
        if opts.shuffle {
            anchors.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
        }
        Ok(WindowStream {
            ds: self,
            anchors,
            pos: 0,
            opts,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WindowOptions {
    pub split: Split,
    pub lookback: usize,
    pub horizon: usize,
    pub batch_size: usize,
    pub shuffle: bool,
    pub seed: u64,
}

impl WindowOptions {
    pub fn ordered(split: Split, lookback: usize, horizon: usize, batch_size: usize) -> Self {
        Self {
            split,
            lookback,
            horizon,
            batch_size,
            shuffle: false,
            seed: 0,
        }
    }
}

/// One batch of lookback/horizon windows, shapes `[B, L, d_x]`, `[B, L, 1]`,
/// `[B, H, d_x]`, `[B, H, 1]`. `anchor_indices[i]` is the last lookback row.
#[derive(Clone, Debug)]
pub struct WindowBatch {
    pub x_l: Tensor,
    pub y_l: Tensor,
    pub x_h: Tensor,
    pub y_h: Tensor,
    pub anchor_indices: Vec<usize>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.anchor_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchor_indices.is_empty()
    }
}

pub struct WindowStream<'a> {
    ds: &'a SeriesDataset,
    anchors: Vec<usize>,
    pos: usize,
    opts: WindowOptions,
}

impl WindowStream<'_> {
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }
}

impl Iterator for WindowStream<'_> {
    type Item = WindowBatch;

    fn next(&mut self) -> Option<WindowBatch> {
        if self.pos >= self.anchors.len() {
            return None;
        }
        let end = (self.pos + self.opts.batch_size).min(self.anchors.len());
        let batch = self.ds.batch(
            &self.anchors[self.pos..end],
            self.opts.lookback,
            self.opts.horizon,
        );
        self.pos = end;
        Some(batch)
    }
}

pub(crate) fn mean_std(vals: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = vals.clone().count().max(1) as f64;
    let mean = vals.clone().sum::<f64>() / n;
    let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn looks_like_date_header(name: &str) -> bool {
    matches!(
        name.trim().to_ascii_lowercase().as_str(),
        "date" | "datetime" | "time" | "timestamp"
    )
}

/// Loads a comma-separated file with a header row. A first column named like
/// a date, or whose first cell is not numeric, becomes the timestamps; the
/// target column becomes `y` and every other column an exogenous channel in
/// file order.
pub fn load_csv(path: &Path, target: &TargetColumn) -> Result<SeriesDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    let has_dates = match headers.first() {
        Some(h) if looks_like_date_header(h) => true,
        Some(_) => records
            .first()
            .and_then(|r| r.get(0))
            .is_some_and(|cell| cell.parse::<f64>().is_err()),
        None => false,
    };
    let first_numeric = usize::from(has_dates);
    let target_idx = match target {
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .filter(|&i| i >= first_numeric)
            .ok_or_else(|| Error::MissingTarget(name.clone()))?,
        TargetColumn::Index(i) => {
            if *i < first_numeric || *i >= headers.len() {
                return Err(Error::MissingTarget(format!("#{i}")));
            }
            *i
        }
    };
    let x_cols: Vec<usize> = (first_numeric..headers.len())
        .filter(|&c| c != target_idx)
        .collect();

    let mut x = Vec::with_capacity(records.len() * x_cols.len());
    let mut y = Vec::with_capacity(records.len());
    let mut stamps = has_dates.then(|| Vec::with_capacity(records.len()));
    for (r, rec) in records.iter().enumerate() {
        let row = r + 2; // 1-based, after the header
        if rec.len() != headers.len() {
            return Err(Error::RaggedRow {
                row,
                expected: headers.len(),
                found: rec.len(),
            });
        }
        let parse = |c: usize| -> Result<f32> {
            let cell = &rec[c];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v as f32),
                _ => Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: c + 1,
                    detail: format!("expected a finite number, found {cell:?}"),
                }),
            }
        };
        for &c in &x_cols {
            x.push(parse(c)?);
        }
        y.push(parse(target_idx)?);
        if let Some(s) = stamps.as_mut() {
            s.push(rec[0].to_string());
        }
    }
    let names = x_cols.iter().map(|&c| headers[c].clone()).collect();
    let mut ds = SeriesDataset::new(x, y, names, headers[target_idx].clone())?;
    ds.timestamps = stamps;
    Ok(ds)
}

/// Writes the dataset (as currently scaled) in the format [`load_csv`] reads.
pub fn write_csv(ds: &SeriesDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = Vec::new();
    if ds.timestamps.is_some() {
        header.push("date");
    }
    header.extend(ds.channel_names.iter().map(String::as_str));
    header.push(&ds.target_name);
    w.write_record(&header)?;
    for t in 0..ds.len() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if let Some(s) = &ds.timestamps {
            row.push(s[t].clone());
        }
        row.extend((0..ds.d_x).map(|c| ds.x_at(t, c).to_string()));
        row.push(ds.y[t].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
