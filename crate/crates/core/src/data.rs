//! Dataset construction and preprocessing.
//!
//! Binary samples are stored bit-packed (bit `f` of a `u64` is feature `f`).
//! A dataset carries a `feature_order` permutation mapping features to
//! qubits; [`BinaryDataset::qubit_samples`] applies it, and everything
//! downstream (MPS training, metrics on qubit labels, circuits) works on
//! that view. Dataset files hold one bitstring per line, printed most
//! significant feature first, with optional `# feature_order=` and
//! `# quantizer=` header comments.

use crate::bits::{format_bits, parse_bits};
use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::path::Path;

/// Uniform quantizer metadata for one decimal feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantizer {
    pub x_min: f64,
    pub x_max: f64,
    pub n_bits: usize,
}

/// A sample-by-feature bit matrix plus the feature-to-qubit assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDataset {
    samples: Vec<u64>,
    n_features: usize,
    feature_order: Vec<usize>,
    quantizers: Option<Vec<Quantizer>>,
}

/// Dated values for one or more named series, in percentage points.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub dates: Vec<NaiveDate>,
    pub names: Vec<String>,
    /// One value vector per series, all the same length as `dates`.
    pub values: Vec<Vec<f64>>,
}

/// How [`split`] divides samples between train and test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    /// Uniform draw without replacement (bars-and-stripes style data).
    Random,
    /// Train on the earliest fraction (time-series data).
    Chronological,
}

impl BinaryDataset {
    pub fn new(samples: Vec<u64>, n_features: usize) -> Result<Self> {
        if n_features == 0 || n_features > crate::bits::MAX_BITS {
            return Err(Error::validation(format!(
                "n_features must be in 1..={}, got {n_features}",
                crate::bits::MAX_BITS
            )));
        }
        let mask = !((1u64 << n_features) - 1);
        if samples.iter().any(|&s| s & mask != 0) {
            return Err(Error::validation(
                "sample has bits set beyond the feature count",
            ));
        }
        Ok(BinaryDataset {
            samples,
            n_features,
            feature_order: (0..n_features).collect(),
            quantizers: None,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Raw samples in feature order (bit `f` = feature `f`).
    pub fn samples(&self) -> &[u64] {
        &self.samples
    }

    pub fn feature_order(&self) -> &[usize] {
        &self.feature_order
    }

    pub fn quantizers(&self) -> Option<&[Quantizer]> {
        self.quantizers.as_deref()
    }

    pub fn bit(&self, sample: usize, feature: usize) -> bool {
        self.samples[sample] >> feature & 1 == 1
    }

    /// One feature as a 0/1 column vector.
    pub fn column(&self, feature: usize) -> Vec<u8> {
        self.samples
            .iter()
            .map(|&s| (s >> feature & 1) as u8)
            .collect()
    }

    pub fn with_feature_order(mut self, order: Vec<usize>) -> Result<Self> {
        validate_permutation(&order, self.n_features)?;
        self.feature_order = order;
        Ok(self)
    }

    pub fn with_quantizers(mut self, quantizers: Vec<Quantizer>) -> Self {
        self.quantizers = Some(quantizers);
        self
    }

    /// Samples permuted to qubit order: bit `feature_order[f]` of the output
    /// is feature `f`.
    pub fn qubit_samples(&self) -> Vec<u64> {
        let identity = self.feature_order.iter().enumerate().all(|(f, &q)| f == q);
        if identity {
            return self.samples.clone();
        }
        self.samples
            .iter()
            .map(|&s| {
                let mut out = 0u64;
                for (f, &q) in self.feature_order.iter().enumerate() {
                    out |= (s >> f & 1) << q;
                }
                out
            })
            .collect()
    }

    /// Serialize to the one-bitstring-per-line text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let identity = self.feature_order.iter().enumerate().all(|(f, &q)| f == q);
        if !identity {
            let order = self
                .feature_order
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!("# feature_order={order}\n"));
        }
        if let Some(qs) = &self.quantizers {
            for (f, q) in qs.iter().enumerate() {
                out.push_str(&format!(
                    "# quantizer={f} {} {} {}\n",
                    q.x_min, q.x_max, q.n_bits
                ));
            }
        }
        for &s in &self.samples {
            out.push_str(&format_bits(s, self.n_features));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut order: Option<Vec<usize>> = None;
        let mut quantizers: Vec<(usize, Quantizer)> = Vec::new();
        let mut samples = Vec::new();
        let mut n_features = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# feature_order=") {
                let parsed: std::result::Result<Vec<usize>, _> =
                    rest.split(',').map(|t| t.trim().parse::<usize>()).collect();
                order =
                    Some(parsed.map_err(|_| Error::format(lineno, "bad feature_order header"))?);
                continue;
            }
            if let Some(rest) = line.strip_prefix("# quantizer=") {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                if fields.len() != 4 {
                    return Err(Error::format(lineno, "quantizer header needs 4 fields"));
                }
                let f = fields[0]
                    .parse::<usize>()
                    .map_err(|_| Error::format(lineno, "bad quantizer feature index"))?;
                let x_min = fields[1]
                    .parse::<f64>()
                    .map_err(|_| Error::format(lineno, "bad quantizer x_min"))?;
                let x_max = fields[2]
                    .parse::<f64>()
                    .map_err(|_| Error::format(lineno, "bad quantizer x_max"))?;
                let n_bits = fields[3]
                    .parse::<usize>()
                    .map_err(|_| Error::format(lineno, "bad quantizer n_bits"))?;
                quantizers.push((
                    f,
                    Quantizer {
                        x_min,
                        x_max,
                        n_bits,
                    },
                ));
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (bits, len) = parse_bits(line).map_err(|e| Error::format(lineno, e.to_string()))?;
            match n_features {
                None => n_features = Some(len),
                Some(n) if n != len => {
                    return Err(Error::format(
                        lineno,
                        format!("bitstring length {len} differs from {n}"),
                    ))
                }
                _ => {}
            }
            samples.push(bits);
        }
        let n_features =
            n_features.ok_or_else(|| Error::format(text.lines().count(), "no samples found"))?;
        let mut ds = BinaryDataset::new(samples, n_features)?;
        if let Some(order) = order {
            ds = ds.with_feature_order(order)?;
        }
        if !quantizers.is_empty() {
            quantizers.sort_by_key(|(f, _)| *f);
            ds = ds.with_quantizers(quantizers.into_iter().map(|(_, q)| q).collect());
        }
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

fn validate_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::validation(format!(
            "feature order has {} entries for {n} features",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &q in order {
        if q >= n || seen[q] {
            return Err(Error::validation("feature order is not a permutation"));
        }
        seen[q] = true;
    }
    Ok(())
}

pub fn invert_permutation(order: &[usize]) -> Result<Vec<usize>> {
    validate_permutation(order, order.len())?;
    let mut inv = vec![0usize; order.len()];
    for (i, &v) in order.iter().enumerate() {
        inv[v] = i;
    }
    Ok(inv)
}

/// Boustrophedon qubit layout for a rows-by-cols pixel grid: row 0 runs
/// left to right, row 1 right to left, and so on. Entry `k` is the feature
/// placed on qubit `k`; for 3x3 this is `[0,1,2,5,4,3,6,7,8]`, which keeps
/// every neighboring qubit pair grid-adjacent.
pub fn snake_order(rows: usize, cols: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        if r % 2 == 0 {
            order.extend((0..cols).map(|c| r * cols + c));
        } else {
            order.extend((0..cols).rev().map(|c| r * cols + c));
        }
    }
    order
}

/// All distinct bars-and-stripes images on a rows-by-cols grid: every image
/// whose columns are constant (bars) or whose rows are constant (stripes).
/// Pixels are flattened row-major, feature 0 = top-left. The count is
/// `2^rows + 2^cols - 2`.
pub fn generate_bas(rows: usize, cols: usize) -> Result<BinaryDataset> {
    if rows == 0 || cols == 0 {
        return Err(Error::validation("rows and cols must be at least 1"));
    }
    let n = rows * cols;
    if n > crate::bits::MAX_BITS {
        return Err(Error::size(format!(
            "{rows}x{cols} grid exceeds {} pixels",
            crate::bits::MAX_BITS
        )));
    }
    let mut images = std::collections::BTreeSet::new();
    for pattern in 0u64..(1 << cols) {
        let mut img = 0u64;
        for r in 0..rows {
            for c in 0..cols {
                img |= (pattern >> c & 1) << (r * cols + c);
            }
        }
        images.insert(img);
    }
    for pattern in 0u64..(1 << rows) {
        let mut img = 0u64;
        for r in 0..rows {
            for c in 0..cols {
                img |= (pattern >> r & 1) << (r * cols + c);
            }
        }
        images.insert(img);
    }
    BinaryDataset::new(images.into_iter().collect(), n)
}

impl TimeSeries {
    pub fn validate(&self) -> Result<()> {
        for v in &self.values {
            if v.len() != self.dates.len() {
                return Err(Error::validation("series lengths differ from date count"));
            }
        }
        if self.names.len() != self.values.len() {
            return Err(Error::validation("series name count mismatch"));
        }
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("dates must be strictly increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, d) in self.dates.iter().enumerate() {
            out.push_str(&d.format("%Y-%m-%d").to_string());
            for v in &self.values {
                out.push_str(&format!(",{}", v[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Day-over-day changes `D_t = S_t - S_{t-1}`; output is one element
/// shorter and dated at the later day of each pair.
pub fn difference(series: &TimeSeries) -> Result<TimeSeries> {
    series.validate()?;
    if series.len() < 2 {
        return Err(Error::validation("differencing needs at least 2 points"));
    }
    Ok(TimeSeries {
        dates: series.dates[1..].to_vec(),
        names: series.names.clone(),
        values: series
            .values
            .iter()
            .map(|v| v.windows(2).map(|w| w[1] - w[0]).collect())
            .collect(),
    })
}

/// Uniform quantization of `x` in `[x_min, x_max]` onto `0..2^n_bits`.
/// Values at or beyond the range edges clamp to the boundary buckets, so
/// the maximum datum occupies the top bucket.
pub fn quantize(x: f64, x_min: f64, x_max: f64, n_bits: usize) -> u32 {
    debug_assert!(x_min < x_max && (1..=16).contains(&n_bits));
    let levels = (1u32 << n_bits) - 1;
    if x >= x_max {
        return levels;
    }
    if x <= x_min {
        return 0;
    }
    let v = (levels as f64 * (x - x_min) / (x_max - x_min)).floor() as i64;
    v.clamp(0, levels as i64) as u32
}

/// Inverse of [`quantize`] up to one bucket width.
pub fn dequantize(v: u32, x_min: f64, x_max: f64, n_bits: usize) -> f64 {
    let levels = (1u32 << n_bits) - 1;
    x_min + v as f64 * (x_max - x_min) / levels as f64
}

/// Quantize a full column; the second return value counts samples that fell
/// outside `[x_min, x_max]` and were clamped.
pub fn quantize_column(values: &[f64], q: &Quantizer) -> (Vec<u32>, usize) {
    let mut clamped = 0usize;
    let out = values
        .iter()
        .map(|&x| {
            if x < q.x_min || x > q.x_max {
                clamped += 1;
            }
            quantize(x, q.x_min, q.x_max, q.n_bits)
        })
        .collect();
    (out, clamped)
}

/// Pack quantized feature columns into a binary dataset. Feature `f`
/// occupies bit columns `f*n_bits..(f+1)*n_bits` with the most significant
/// bit on the lowest-numbered column of the block.
pub fn pack_features(columns: &[Vec<u32>], n_bits: usize) -> Result<BinaryDataset> {
    if columns.is_empty() {
        return Err(Error::validation("no feature columns to pack"));
    }
    let s = columns[0].len();
    if columns.iter().any(|c| c.len() != s) {
        return Err(Error::validation("feature columns have unequal lengths"));
    }
    let n_features = columns.len() * n_bits;
    if n_features > crate::bits::MAX_BITS {
        return Err(Error::size(format!(
            "{n_features} binary features exceed the limit"
        )));
    }
    let limit = 1u32 << n_bits;
    let mut samples = vec![0u64; s];
    for (f, col) in columns.iter().enumerate() {
        for (row, &v) in col.iter().enumerate() {
            if v >= limit {
                return Err(Error::validation(format!(
                    "value {v} overflows {n_bits} bits in feature {f}"
                )));
            }
            for j in 0..n_bits {
                let bit = (v >> (n_bits - 1 - j)) & 1;
                samples[row] |= (bit as u64) << (f * n_bits + j);
            }
        }
    }
    BinaryDataset::new(samples, n_features)
}

/// Inverse of [`pack_features`].
pub fn unpack_features(dataset: &BinaryDataset, n_bits: usize) -> Result<Vec<Vec<u32>>> {
    if dataset.n_features() % n_bits != 0 {
        return Err(Error::validation(format!(
            "{} binary features are not a multiple of {n_bits} bits",
            dataset.n_features()
        )));
    }
    let f_count = dataset.n_features() / n_bits;
    let mut columns = vec![Vec::with_capacity(dataset.n_samples()); f_count];
    for &s in dataset.samples() {
        for (f, col) in columns.iter_mut().enumerate() {
            let mut v = 0u32;
            for j in 0..n_bits {
                v = (v << 1) | ((s >> (f * n_bits + j)) & 1) as u32;
            }
            col.push(v);
        }
    }
    Ok(columns)
}

/// Split into train (`floor(ratio * S)` samples) and test sets.
pub fn split(
    dataset: &BinaryDataset,
    ratio: f64,
    seed: u64,
    mode: SplitMode,
) -> Result<(BinaryDataset, BinaryDataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::validation(format!(
            "ratio must be in (0,1), got {ratio}"
        )));
    }
    let s = dataset.n_samples();
    let n_train = (ratio * s as f64).floor() as usize;
    let mut indices: Vec<usize> = (0..s).collect();
    if mode == SplitMode::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
    }
    let mut train_idx = indices[..n_train].to_vec();
    let mut test_idx = indices[n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| -> Result<BinaryDataset> {
        let mut ds = BinaryDataset::new(
            idx.iter().map(|&i| dataset.samples[i]).collect(),
            dataset.n_features,
        )?
        .with_feature_order(dataset.feature_order.clone())?;
        if let Some(q) = &dataset.quantizers {
            ds = ds.with_quantizers(q.clone());
        }
        Ok(ds)
    };
    Ok((pick(&train_idx)?, pick(&test_idx)?))
}

/// A parsed time-series CSV plus how many rows were dropped for missing
/// values.
#[derive(Debug)]
pub struct LoadedSeries {
    pub series: TimeSeries,
    pub dropped_rows: usize,
}

/// Read a CSV with a date column followed by named series columns. Rows
/// where any selected series is empty or "-" are dropped (and counted);
/// dates parse as ISO (`2000-01-04`) or slashed (`2000/1/4`).
pub fn load_timeseries_csv(
    path: &Path,
    series_names: &[String],
    range: Option<(NaiveDate, NaiveDate)>,
) -> Result<LoadedSeries> {
    let text = std::fs::read_to_string(path)?;
    parse_timeseries_csv(&text, series_names, range)
}

pub fn parse_timeseries_csv(
    text: &str,
    series_names: &[String],
    range: Option<(NaiveDate, NaiveDate)>,
) -> Result<LoadedSeries> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::format(1, "empty CSV"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 2 {
        return Err(Error::format(1, "header needs a date column plus series"));
    }
    let mut col_of = Vec::with_capacity(series_names.len());
    for name in series_names {
        let idx = columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::format(1, format!("series {name:?} not found in header")))?;
        col_of.push(idx);
    }

    let mut dates = Vec::new();
    let mut values = vec![Vec::new(); series_names.len()];
    let mut dropped = 0usize;
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(Error::format(
                lineno,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let date = parse_date(fields[0])
            .ok_or_else(|| Error::format(lineno, format!("unparseable date {:?}", fields[0])))?;
        if let Some((lo, hi)) = range {
            if date < lo || date > hi {
                continue;
            }
        }
        let mut row = Vec::with_capacity(col_of.len());
        let mut missing = false;
        for &c in &col_of {
            let cell = fields[c];
            if cell.is_empty() || cell == "-" {
                missing = true;
                break;
            }
            match cell.parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => return Err(Error::format(lineno, format!("unparseable value {cell:?}"))),
            }
        }
        if missing {
            dropped += 1;
            continue;
        }
        dates.push(date);
        for (v, x) in values.iter_mut().zip(row) {
            v.push(x);
        }
    }
    let series = TimeSeries {
        dates,
        names: series_names.to_vec(),
        values,
    };
    series.validate()?;
    Ok(LoadedSeries {
        series,
        dropped_rows: dropped,
    })
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y/%m/%d"))
        .ok()
}

/// Synthetic daily government-bond yields for three maturities (5Y, 10Y,
/// 20Y), starting 2000-01-04 on business days. Day-over-day changes follow
/// a one-factor model with maturity-dependent loadings, idiosyncratic noise
/// and occasional fat-tailed jumps, which reproduces the heavy cross-bit
/// dependence structure of real rate curves. Deterministic given the seed.
pub fn synthetic_rates(days: usize, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = vec!["5Y".to_string(), "10Y".to_string(), "20Y".to_string()];
    let mut levels = [1.2f64, 1.7, 2.4];
    let loadings = [1.0f64, 0.92, 0.78];
    let idio = [0.35f64, 0.30, 0.40];
    let scale = 0.016; // typical daily move in percentage points

    let mut dates = Vec::with_capacity(days);
    let mut values = vec![Vec::with_capacity(days); 3];
    let mut date = NaiveDate::from_ymd_opt(2000, 1, 4).expect("valid date");
    while dates.len() < days {
        if matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date.succ_opt().expect("date range");
            continue;
        }
        let jump = if rng.gen::<f64>() < 0.04 { 4.0 } else { 1.0 };
        let factor: f64 = rng.sample(StandardNormal);
        for i in 0..3 {
            let eps: f64 = rng.sample(StandardNormal);
            let pull = 0.002 * (1.5 - levels[i]); // weak mean reversion
            let diff = scale * jump * (loadings[i] * factor + idio[i] * eps) + pull;
            levels[i] = (levels[i] + diff).max(-0.4);
            values[i].push((levels[i] * 1000.0).round() / 1000.0);
        }
        dates.push(date);
        date = date.succ_opt().expect("date range");
    }
    TimeSeries {
        dates,
        names,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn is_bas_image(img: u64, rows: usize, cols: usize) -> bool {
        let px = |r: usize, c: usize| img >> (r * cols + c) & 1;
        let bars = (0..cols).all(|c| (1..rows).all(|r| px(r, c) == px(0, c)));
        let stripes = (0..rows).all(|r| (1..cols).all(|c| px(r, c) == px(r, 0)));
        bars || stripes
    }

    #[test]
    fn bas_3x3_has_14_images() {
        let ds = generate_bas(3, 3).unwrap();
        assert_eq!(ds.n_samples(), 14);
        assert_eq!(ds.n_features(), 9);
    }

    #[test]
    fn bas_2x2_has_6_images() {
        assert_eq!(generate_bas(2, 2).unwrap().n_samples(), 6);
    }

    #[test]
    fn bas_counts_match_formula_and_images_are_valid() {
        for (r, c) in [(2, 3), (3, 2), (3, 4), (1, 3)] {
            let ds = generate_bas(r, c).unwrap();
            assert_eq!(ds.n_samples(), (1 << r) + (1 << c) - 2);
            for &img in ds.samples() {
                assert!(is_bas_image(img, r, c));
            }
            // All-zero and all-one images appear exactly once.
            let all_one = (1u64 << (r * c)) - 1;
            assert_eq!(ds.samples().iter().filter(|&&s| s == 0).count(), 1);
            assert_eq!(ds.samples().iter().filter(|&&s| s == all_one).count(), 1);
        }
    }

    #[test]
    fn snake_order_3x3_matches_known_layout() {
        assert_eq!(snake_order(3, 3), vec![0, 1, 2, 5, 4, 3, 6, 7, 8]);
    }

    #[test]
    fn qubit_samples_applies_the_swap() {
        let order = invert_permutation(&snake_order(3, 3)).unwrap();
        assert_eq!(order, vec![0, 1, 2, 5, 4, 3, 6, 7, 8]);
        let ds = BinaryDataset::new(vec![1 << 3], 9)
            .unwrap()
            .with_feature_order(order)
            .unwrap();
        assert_eq!(ds.qubit_samples(), vec![1 << 5]);
    }

    #[test]
    fn feature_order_roundtrip_is_identity() {
        let ds = generate_bas(3, 3).unwrap();
        let order = vec![0, 1, 2, 5, 4, 3, 6, 7, 8];
        let permuted = ds.clone().with_feature_order(order.clone()).unwrap();
        let inv = invert_permutation(&order).unwrap();
        let back: Vec<u64> = permuted
            .qubit_samples()
            .iter()
            .map(|&s| {
                let mut out = 0u64;
                for (q, &f) in inv.iter().enumerate() {
                    out |= (s >> q & 1) << f;
                }
                out
            })
            .collect();
        assert_eq!(back, ds.samples());
    }

    #[test]
    fn difference_basics() {
        let ts = TimeSeries {
            dates: (0..3)
                .map(|i| NaiveDate::from_ymd_opt(2024, 1, 1 + i).unwrap())
                .collect(),
            names: vec!["a".into()],
            values: vec![vec![1.0, 1.5, 1.2]],
        };
        let d = difference(&ts).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d.values[0][0] - 0.5).abs() < 1e-12);
        assert!((d.values[0][1] + 0.3).abs() < 1e-12);
        // Cumulative sum reconstructs the original.
        let mut level = ts.values[0][0];
        for (i, diff) in d.values[0].iter().enumerate() {
            level += diff;
            assert!((level - ts.values[0][i + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn difference_rejects_short_series() {
        let ts = TimeSeries {
            dates: vec![NaiveDate::from_ymd_opt(2024, 1, 1).unwrap()],
            names: vec!["a".into()],
            values: vec![vec![1.0]],
        };
        assert!(difference(&ts).is_err());
    }

    #[test]
    fn quantize_boundaries() {
        assert_eq!(quantize(0.0, 0.0, 1.0, 4), 0);
        assert_eq!(quantize(1.0, 0.0, 1.0, 4), 15);
        assert_eq!(quantize(0.5, 0.0, 1.0, 4), 7);
        assert!((dequantize(7, 0.0, 1.0, 4) - 7.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn quantize_clamps_out_of_range() {
        let q = Quantizer {
            x_min: -1.0,
            x_max: 1.0,
            n_bits: 4,
        };
        let (vals, clamped) = quantize_column(&[-2.0, 0.0, 3.0], &q);
        assert_eq!(vals, vec![0, 7, 15]);
        assert_eq!(clamped, 2);
    }

    #[test]
    fn pack_layout_is_msb_first_per_feature() {
        let ds = pack_features(&[vec![9u32]], 4).unwrap();
        // 9 = 1001: bit columns (0,1,2,3) read (1,0,0,1).
        let s = ds.samples()[0];
        let bits: Vec<u64> = (0..4).map(|c| s >> c & 1).collect();
        assert_eq!(bits, vec![1, 0, 0, 1]);
    }

    #[test]
    fn pack_three_features_gives_twelve_columns() {
        let ds = pack_features(&[vec![1u32, 2], vec![3, 4], vec![5, 15]], 4).unwrap();
        assert_eq!(ds.n_features(), 12);
        assert_eq!(ds.n_samples(), 2);
        let back = unpack_features(&ds, 4).unwrap();
        assert_eq!(back, vec![vec![1, 2], vec![3, 4], vec![5, 15]]);
    }

    #[test]
    fn pack_rejects_overflow() {
        assert!(pack_features(&[vec![16u32]], 4).is_err());
    }

    #[test]
    fn split_sizes_match_the_floor_rule() {
        let ds = generate_bas(3, 3).unwrap();
        let (train, test) = split(&ds, 0.8, 5, SplitMode::Random).unwrap();
        assert_eq!(train.n_samples(), 11);
        assert_eq!(test.n_samples(), 3);

        let big = BinaryDataset::new((0..6165).map(|i| i % 2).collect(), 12).unwrap();
        let (train, test) = split(&big, 0.8, 5, SplitMode::Chronological).unwrap();
        assert_eq!(train.n_samples(), 4932);
        assert_eq!(test.n_samples(), 1233);
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let ds = generate_bas(3, 3).unwrap();
        let (tr1, te1) = split(&ds, 0.8, 9, SplitMode::Random).unwrap();
        let (tr2, te2) = split(&ds, 0.8, 9, SplitMode::Random).unwrap();
        assert_eq!(tr1, tr2);
        assert_eq!(te1, te2);
        let mut all: Vec<u64> = tr1.samples().iter().chain(te1.samples()).cloned().collect();
        all.sort_unstable();
        assert_eq!(all, ds.samples());
    }

    #[test]
    fn chronological_split_takes_the_prefix() {
        let ds = BinaryDataset::new((0..10).collect(), 4).unwrap();
        let (train, test) = split(&ds, 0.8, 0, SplitMode::Chronological).unwrap();
        assert_eq!(train.samples(), (0..8).collect::<Vec<u64>>());
        assert_eq!(test.samples(), vec![8, 9]);
    }

    #[test]
    fn dataset_text_roundtrip() {
        let ds = generate_bas(3, 3)
            .unwrap()
            .with_feature_order(vec![0, 1, 2, 5, 4, 3, 6, 7, 8])
            .unwrap()
            .with_quantizers(vec![Quantizer {
                x_min: -0.25,
                x_max: 0.5,
                n_bits: 4,
            }]);
        let text = ds.to_text();
        let back = BinaryDataset::from_text(&text).unwrap();
        assert_eq!(ds, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn csv_parsing_drops_missing_and_filters_range() {
        let csv = "date,5Y,10Y,20Y\n\
                   2000-01-04,1.0,1.5,2.0\n\
                   2000-01-05,1.1,-,2.1\n\
                   2000/1/6,1.2,1.6,2.2\n\
                   2001-01-04,9.9,9.9,9.9\n";
        let names = vec!["5Y".to_string(), "10Y".to_string(), "20Y".to_string()];
        let range = (
            NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2000, 12, 31).unwrap(),
        );
        let loaded = parse_timeseries_csv(csv, &names, Some(range)).unwrap();
        assert_eq!(loaded.series.len(), 2);
        assert_eq!(loaded.dropped_rows, 1);
        assert_eq!(loaded.series.values[2], vec![2.0, 2.2]);
    }

    #[test]
    fn csv_parse_errors_carry_line_numbers() {
        let csv = "date,5Y\n2000-01-04,1.0\nnot-a-date,2.0\n";
        match parse_timeseries_csv(csv, &["5Y".to_string()], None) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_rates_are_deterministic_and_dated() {
        let a = synthetic_rates(100, 7);
        let b = synthetic_rates(100, 7);
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a.dates[0], NaiveDate::from_ymd_opt(2000, 1, 4).unwrap());
        let csv = a.to_csv();
        let loaded = parse_timeseries_csv(&csv, &a.names, None).unwrap();
        assert_eq!(loaded.series.len(), 100);
    }

    proptest! {
        #[test]
        fn quantize_roundtrip_error_is_bounded(x in -3.0f64..3.0, n_bits in 1usize..12) {
            let (lo, hi) = (-3.0f64, 3.0f64);
            let v = quantize(x, lo, hi, n_bits);
            let back = dequantize(v, lo, hi, n_bits);
            let step = (hi - lo) / ((1u32 << n_bits) - 1) as f64;
            prop_assert!((back - x).abs() <= step + 1e-12);
        }
    }
}
