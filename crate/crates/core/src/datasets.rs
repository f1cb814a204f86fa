//! Seeded XOR, moons and circles generators with train/validation/test
//! splitting and min-max scaling onto `[0, pi]`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Xor,
    Moons,
    Circles,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 3] = [DatasetKind::Xor, DatasetKind::Moons, DatasetKind::Circles];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Xor => "xor",
            DatasetKind::Moons => "moons",
            DatasetKind::Circles => "circles",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xor" => Ok(DatasetKind::Xor),
            "moons" => Ok(DatasetKind::Moons),
            "circles" => Ok(DatasetKind::Circles),
            other => Err(Error::Parse(format!("unknown dataset kind {other:?}"))),
        }
    }
}

/// Generator parameters for all three families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetParams {
    pub xor_margin: f64,
    pub moons_noise: f64,
    pub circles_noise: f64,
    pub circles_factor: f64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            xor_margin: 0.0,
            moons_noise: 0.2,
            circles_noise: 0.1,
            circles_factor: 0.5,
        }
    }
}

impl DatasetParams {
    pub fn describe(&self, kind: DatasetKind) -> String {
        match kind {
            DatasetKind::Xor => format!("margin={:?}", self.xor_margin),
            DatasetKind::Moons => format!("noise_std={:?}", self.moons_noise),
            DatasetKind::Circles => format!(
                "factor={:?} noise_std={:?}",
                self.circles_factor, self.circles_noise
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub kind: DatasetKind,
    pub seed: u64,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&0) && self.y.contains(&1)
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            kind: self.kind,
            seed: self.seed,
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 samples, got {n}"
        )));
    }
    Ok(())
}

fn check_noise(noise_std: f64) -> Result<()> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::Parameter(format!(
            "noise_std must be finite and nonnegative, got {noise_std}"
        )));
    }
    Ok(())
}

pub fn xor_label(x1: f64, x2: f64) -> u8 {
    u8::from(x1 * x2 > 0.0)
}

/// Points uniform on `[-1, 1]^2` outside the band `|x1 x2| < margin`,
/// labelled 1 on the same-sign quadrants. Classes alternate sample by sample;
/// a draw landing in the wrong class is reflected across the x2 axis, which
/// keeps each class uniform on its region.
pub fn make_xor(n: usize, margin: f64, seed: u64) -> Result<LabeledDataset> {
    check_n(n)?;
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::Parameter(format!(
            "xor margin must lie in [0, 1), got {margin}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let target = (i % 2 == 0) as u8;
        loop {
            let mut a = rng.uniform_in(-1.0, 1.0);
            let b = rng.uniform_in(-1.0, 1.0);
            if (a * b).abs() < margin || a * b == 0.0 {
                continue;
            }
            if xor_label(a, b) != target {
                a = -a;
            }
            x.push(vec![a, b]);
            y.push(target);
            break;
        }
    }
    Ok(LabeledDataset {
        x,
        y,
        kind: DatasetKind::Xor,
        seed,
    })
}

fn linspace(start: f64, stop: f64, num: usize, endpoint: bool) -> Vec<f64> {
    match num {
        0 => vec![],
        1 => vec![start],
        _ => {
            let div = if endpoint { num - 1 } else { num } as f64;
            let step = (stop - start) / div;
            (0..num).map(|k| start + step * k as f64).collect()
        }
    }
}

fn add_noise(x: &mut [Vec<f64>], noise_std: f64, rng: &mut SeededRng) {
    for p in x.iter_mut() {
        for v in p.iter_mut() {
            *v += noise_std * rng.normal();
        }
    }
}

/// Two interleaved half circles: class 0 at `(cos t, sin t)` and class 1 at
/// `(1 - cos t, 0.5 - sin t)` for `t` on a uniform grid over `[0, pi]`.
pub fn make_moons(n: usize, noise_std: f64, seed: u64) -> Result<LabeledDataset> {
    check_n(n)?;
    check_noise(noise_std)?;
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in linspace(0.0, PI, n_outer, true) {
        x.push(vec![t.cos(), t.sin()]);
        y.push(0);
    }
    for t in linspace(0.0, PI, n_inner, true) {
        x.push(vec![1.0 - t.cos(), 0.5 - t.sin()]);
        y.push(1);
    }
    let mut rng = SeededRng::new(seed);
    add_noise(&mut x, noise_std, &mut rng);
    Ok(LabeledDataset {
        x,
        y,
        kind: DatasetKind::Moons,
        seed,
    })
}

/// Class 0 on the unit circle, class 1 on the circle of radius `factor`.
pub fn make_circles(n: usize, factor: f64, noise_std: f64, seed: u64) -> Result<LabeledDataset> {
    check_n(n)?;
    check_noise(noise_std)?;
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Parameter(format!(
            "circles factor must lie in (0, 1), got {factor}"
        )));
    }
    let n_outer = n / 2;
    let n_inner = n - n_outer;
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in linspace(0.0, 2.0 * PI, n_outer, false) {
        x.push(vec![t.cos(), t.sin()]);
        y.push(0);
    }
    for t in linspace(0.0, 2.0 * PI, n_inner, false) {
        x.push(vec![factor * t.cos(), factor * t.sin()]);
        y.push(1);
    }
    let mut rng = SeededRng::new(seed);
    add_noise(&mut x, noise_std, &mut rng);
    Ok(LabeledDataset {
        x,
        y,
        kind: DatasetKind::Circles,
        seed,
    })
}

pub fn generate(
    kind: DatasetKind,
    n: usize,
    params: &DatasetParams,
    seed: u64,
) -> Result<LabeledDataset> {
    match kind {
        DatasetKind::Xor => make_xor(n, params.xor_margin, seed),
        DatasetKind::Moons => make_moons(n, params.moons_noise, seed),
        DatasetKind::Circles => make_circles(n, params.circles_factor, params.circles_noise, seed),
    }
}

/// Per-feature affine map sending the fitted `[min, max]` onto `[0, pi]`.
/// A constant feature maps to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub const UPPER: f64 = PI;

    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let dim = x
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Parameter("cannot fit a scaler on no samples".into()))?;
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for row in x {
            if row.len() != dim {
                return Err(Error::dim(dim, row.len(), "scaler feature count"));
            }
            for (k, &v) in row.iter().enumerate() {
                mins[k] = mins[k].min(v);
                maxs[k] = maxs[k].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn transform_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(k, &v)| {
                let range = self.maxs[k] - self.mins[k];
                if range > 0.0 {
                    Self::UPPER * (v - self.mins[k]) / range
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|p| self.transform_point(p)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train: 50,
            val: 50,
            test: 50,
        }
    }
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Val,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
        }
    }
}

impl FromStr for SplitTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(SplitTag::Train),
            "val" => Ok(SplitTag::Val),
            "test" => Ok(SplitTag::Test),
            other => Err(Error::Parse(format!("unknown split tag {other:?}"))),
        }
    }
}

/// Scaled train/validation/test views of one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitDataset {
    pub source: LabeledDataset,
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub scaler: MinMaxScaler,
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
}

impl SplitDataset {
    /// Builds the scaled views from explicit index sets; the scaler is fit on
    /// the training rows only.
    pub fn from_indices(
        source: LabeledDataset,
        train_idx: Vec<usize>,
        val_idx: Vec<usize>,
        test_idx: Vec<usize>,
    ) -> Result<Self> {
        let mut seen = vec![false; source.len()];
        for &i in train_idx.iter().chain(&val_idx).chain(&test_idx) {
            if i >= source.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Parameter(format!(
                    "split indices must be distinct and below {}",
                    source.len()
                )));
            }
        }
        let raw_train = source.subset(&train_idx);
        let scaler = MinMaxScaler::fit(&raw_train.x)?;
        let scale = |mut d: LabeledDataset| {
            d.x = scaler.transform(&d.x);
            d
        };
        let train = scale(raw_train);
        let val = scale(source.subset(&val_idx));
        let test = scale(source.subset(&test_idx));
        Ok(Self {
            source,
            train_idx,
            val_idx,
            test_idx,
            scaler,
            train,
            val,
            test,
        })
    }

    pub fn tags(&self) -> Vec<Option<SplitTag>> {
        let mut tags = vec![None; self.source.len()];
        for &i in &self.train_idx {
            tags[i] = Some(SplitTag::Train);
        }
        for &i in &self.val_idx {
            tags[i] = Some(SplitTag::Val);
        }
        for &i in &self.test_idx {
            tags[i] = Some(SplitTag::Test);
        }
        tags
    }
}

/// Attempts made to find a shuffle giving every split both classes.
pub const SPLIT_RETRIES: usize = 100;

/// Each part keeps its indices in ascending order, so a split column written
/// by [`write_dataset_csv`] reproduces the split exactly.
pub fn split_and_scale(
    data: &LabeledDataset,
    sizes: SplitSizes,
    seed: u64,
) -> Result<SplitDataset> {
    if sizes.total() > data.len() {
        return Err(Error::Parameter(format!(
            "split sizes sum to {} but the dataset has {} samples",
            sizes.total(),
            data.len()
        )));
    }
    if sizes.train == 0 || sizes.val == 0 || sizes.test == 0 {
        return Err(Error::Parameter(
            "every split needs at least one sample".into(),
        ));
    }
    let mut rng = SeededRng::new(seed);
    let both =
        |idx: &[usize]| idx.iter().any(|&i| data.y[i] == 0) && idx.iter().any(|&i| data.y[i] == 1);
    for _ in 0..SPLIT_RETRIES {
        let mut order: Vec<usize> = (0..data.len()).collect();
        rng.shuffle(&mut order);
        let train = &order[..sizes.train];
        let val = &order[sizes.train..sizes.train + sizes.val];
        let test = &order[sizes.train + sizes.val..sizes.total()];
        if both(train) && both(val) && both(test) {
            let sorted = |part: &[usize]| {
                let mut v = part.to_vec();
                v.sort_unstable();
                v
            };
            return SplitDataset::from_indices(
                data.clone(),
                sorted(train),
                sorted(val),
                sorted(test),
            );
        }
    }
    Err(Error::Generation(format!(
        "no split with both classes in every part after {SPLIT_RETRIES} attempts"
    )))
}

/// Writes `x1,x2,...,y[,split]` rows after `#` comment lines recording the
/// generator settings.
pub fn write_dataset_csv<W: Write>(
    mut out: W,
    data: &LabeledDataset,
    params: &DatasetParams,
    split: Option<&SplitDataset>,
) -> Result<()> {
    writeln!(
        out,
        "# kind={} n={} seed={} {}",
        data.kind,
        data.len(),
        data.seed,
        params.describe(data.kind)
    )?;
    if let Some(s) = split {
        writeln!(
            out,
            "# split train={} val={} test={} scaling=minmax[0,pi] fit=train",
            s.train_idx.len(),
            s.val_idx.len(),
            s.test_idx.len()
        )?;
    }
    let dim = data.x.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    header.push("y".into());
    if split.is_some() {
        header.push("split".into());
    }
    writeln!(out, "{}", header.join(","))?;
    let tags = split.map(SplitDataset::tags);
    for (i, (p, y)) in data.x.iter().zip(&data.y).enumerate() {
        let mut fields: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        fields.push(y.to_string());
        if let Some(tags) = &tags {
            fields.push(tags[i].map_or("", SplitTag::as_str).to_string());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Dataset read back from CSV, with split membership when present.
#[derive(Clone, Debug)]
pub struct DatasetFile {
    pub data: LabeledDataset,
    pub split: Option<Vec<Option<SplitTag>>>,
}

impl DatasetFile {
    /// Rebuilds the scaled split recorded in the file.
    pub fn to_split(&self) -> Result<SplitDataset> {
        let tags = self
            .split
            .as_ref()
            .ok_or_else(|| Error::Parse("dataset file has no split column".into()))?;
        let pick = |want: SplitTag| -> Vec<usize> {
            (0..tags.len()).filter(|&i| tags[i] == Some(want)).collect()
        };
        SplitDataset::from_indices(
            self.data.clone(),
            pick(SplitTag::Train),
            pick(SplitTag::Val),
            pick(SplitTag::Test),
        )
    }
}

pub fn read_dataset_csv<R: BufRead>(input: R) -> Result<DatasetFile> {
    let mut kind = None;
    let mut seed = 0;
    let mut body = String::new();
    for line in input.lines() {
        let line = line?;
        if let Some(comment) = line.strip_prefix('#') {
            for pair in comment.split_whitespace() {
                match pair.split_once('=') {
                    Some(("kind", v)) if kind.is_none() => kind = Some(v.parse()?),
                    Some(("seed", v)) => {
                        seed = v
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad seed {v:?}")))?
                    }
                    _ => {}
                }
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let kind = kind.ok_or_else(|| Error::Parse("dataset file lacks a kind= header".into()))?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = rdr.headers()?.clone();
    let y_col = headers
        .iter()
        .position(|h| h == "y")
        .ok_or_else(|| Error::Parse("dataset file lacks a y column".into()))?;
    let split_col = headers.iter().position(|h| h == "split");
    let feature_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x'))
        .map(|(i, _)| i)
        .collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut tags = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {:?}", &rec[i])))
        };
        x.push(
            feature_cols
                .iter()
                .map(|&i| num(i))
                .collect::<Result<Vec<_>>>()?,
        );
        let label: u8 = rec[y_col]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad label {:?}", &rec[y_col])))?;
        if label > 1 {
            return Err(Error::Parse(format!("label must be 0 or 1, got {label}")));
        }
        y.push(label);
        if let Some(c) = split_col {
            let v = rec[c].trim();
            tags.push(if v.is_empty() { None } else { Some(v.parse()?) });
        }
    }
    Ok(DatasetFile {
        data: LabeledDataset { x, y, kind, seed },
        split: split_col.map(|_| tags),
    })
}
