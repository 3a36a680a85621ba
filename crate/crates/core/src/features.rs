//! Feature extraction and data ingestion.
//!
//! Images are normalized to square chips and decomposed with a separable
//! 2-D wavelet transform; the final-level LL, LH and HL sub-bands form
//! complementary feature sets. Pre-extracted tabular features are read
//! from delimited text instead.

use std::io::{BufRead, Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of raw (continuous) feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(
                format!("{rows}x{cols}"),
                format!("{} values", data.len()),
            ));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FeatureMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in &rows {
            if r.len() != cols {
                return Err(Error::ShapeMismatch(
                    format!("{cols} columns"),
                    format!("{} columns", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix { rows: n, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Vertical concatenation; all matrices must agree on column count.
    pub fn vstack(parts: &[&FeatureMatrix]) -> Result<Self> {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for m in parts {
            if m.cols != cols {
                return Err(Error::ShapeMismatch(
                    format!("{cols} columns"),
                    format!("{} columns", m.cols),
                ));
            }
            data.extend_from_slice(&m.data);
            rows += m.rows;
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

/// Partition of the concatenated variable vector into M feature sets.
///
/// Offsets are the prefix sums of the per-set dimensions; set `i` owns the
/// global variable indices `offsets[i]..offsets[i] + set_dims[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    set_dims: Vec<usize>,
}

impl FeatureLayout {
    pub fn new(set_dims: Vec<usize>) -> Result<Self> {
        if set_dims.is_empty() || set_dims.iter().any(|&m| m == 0) {
            return Err(Error::InvalidParameter(
                "layout must list at least one nonempty feature set".into(),
            ));
        }
        Ok(FeatureLayout { set_dims })
    }

    pub fn num_sets(&self) -> usize {
        self.set_dims.len()
    }

    pub fn set_dims(&self) -> &[usize] {
        &self.set_dims
    }

    pub fn n_total(&self) -> usize {
        self.set_dims.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.set_dims.len());
        let mut acc = 0;
        for &m in &self.set_dims {
            out.push(acc);
            acc += m;
        }
        out
    }

    pub fn set_range(&self, i: usize) -> Range<usize> {
        let off = self.offsets()[i];
        off..off + self.set_dims[i]
    }

    /// Splits a flat feature vector into per-set slices.
    pub fn split<'a>(&self, flat: &'a [f64]) -> Result<Vec<&'a [f64]>> {
        if flat.len() != self.n_total() {
            return Err(Error::DimensionMismatch {
                expected: self.n_total(),
                got: flat.len(),
            });
        }
        Ok((0..self.num_sets())
            .map(|i| &flat[self.set_range(i)])
            .collect())
    }

    /// Parses "m1,m2,..." as used by the CLI.
    pub fn parse(s: &str) -> Result<Self> {
        let dims = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad layout entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureLayout::new(dims)
    }
}

// ---------------------------------------------------------------------------
// Image chips
// ---------------------------------------------------------------------------

/// Row-major grayscale image with real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageChip {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageChip {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::ShapeMismatch(
                format!("{width}x{height}"),
                format!("{} pixels", pixels.len()),
            ));
        }
        Ok(ImageChip {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Normalizes an arbitrary image to a square `target`x`target` chip:
/// center-crop to the largest centered square, bilinear-resample, then scale
/// intensities to zero mean and unit variance (variance floor 1e-12, so a
/// constant image maps to all zeros).
pub fn normalize_chip(image: &ImageChip, target: usize) -> Result<ImageChip> {
    if target == 0 {
        return Err(Error::InvalidParameter("target size must be >= 1".into()));
    }
    if image.pixels.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("image pixels".into()));
    }

    let side = image.width.min(image.height);
    let x0 = (image.width - side) / 2;
    let y0 = (image.height - side) / 2;
    let mut square = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            square.push(image.get(y0 + r, x0 + c));
        }
    }

    // Bilinear resample with pixel-center alignment.
    let scale = side as f64 / target as f64;
    let mut out = Vec::with_capacity(target * target);
    for r in 0..target {
        let sy = ((r as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
        let y_lo = sy.floor() as usize;
        let y_hi = (y_lo + 1).min(side - 1);
        let fy = sy - y_lo as f64;
        for c in 0..target {
            let sx = ((c as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
            let x_lo = sx.floor() as usize;
            let x_hi = (x_lo + 1).min(side - 1);
            let fx = sx - x_lo as f64;
            let top = square[y_lo * side + x_lo] * (1.0 - fx) + square[y_lo * side + x_hi] * fx;
            let bot = square[y_hi * side + x_lo] * (1.0 - fx) + square[y_hi * side + x_hi] * fx;
            out.push(top * (1.0 - fy) + bot * fy);
        }
    }

    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    let var = out.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
    if var < 1e-12 {
        out.iter_mut().for_each(|p| *p = 0.0);
    } else {
        let sd = var.sqrt();
        out.iter_mut().for_each(|p| *p = (*p - mean) / sd);
    }
    ImageChip::new(target, target, out)
}

// ---------------------------------------------------------------------------
// 2-D discrete wavelet transform
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    /// Orthonormal Haar pair: low = (a+b)/sqrt(2), high = (a-b)/sqrt(2).
    Haar,
    /// Reverse-biorthogonal 2.2 analysis pair.
    Rbio22,
}

impl Wavelet {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "haar" => Ok(Wavelet::Haar),
            "rbio22" => Ok(Wavelet::Rbio22),
            other => Err(Error::InvalidParameter(format!("unknown wavelet {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Rbio22 => "rbio22",
        }
    }

    // Analysis filters and the signal offset of the first tap.
    fn filters(&self) -> (&'static [f64], &'static [f64], isize) {
        const S: f64 = std::f64::consts::FRAC_1_SQRT_2;
        const HAAR_LO: [f64; 2] = [S, S];
        const HAAR_HI: [f64; 2] = [S, -S];
        // Reverse-biorthogonal 2.2: the 2.2 synthesis pair used for analysis.
        const R22_LO: [f64; 3] = [
            0.353_553_390_593_273_8,
            0.707_106_781_186_547_6,
            0.353_553_390_593_273_8,
        ];
        const R22_HI: [f64; 5] = [
            0.176_776_695_296_636_9,
            0.353_553_390_593_273_8,
            -1.060_660_171_779_821_4,
            0.353_553_390_593_273_8,
            0.176_776_695_296_636_9,
        ];
        match self {
            Wavelet::Haar => (&HAAR_LO, &HAAR_HI, 0),
            Wavelet::Rbio22 => (&R22_LO, &R22_HI, -1),
        }
    }
}

/// Final-level wavelet sub-bands used as feature sets. The HH band is
/// dropped; LL carries the coarse approximation, LH and HL the directional
/// detail. Each vector is the flattened row-major sub-band grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandFeatures {
    pub ll: Vec<f64>,
    pub lh: Vec<f64>,
    pub hl: Vec<f64>,
    pub levels: usize,
    pub wavelet: Wavelet,
}

fn analysis_1d(signal: &[f64], wavelet: Wavelet) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi, offset) = wavelet.filters();
    let n = signal.len();
    let half = n / 2;
    let taps = lo.len().max(hi.len());
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for m in 0..taps {
            // Periodic extension keeps dyadic lengths exact.
            let idx = (2 * k as isize + m as isize + offset).rem_euclid(n as isize) as usize;
            a += lo.get(m).copied().unwrap_or(0.0) * signal[idx];
            d += hi.get(m).copied().unwrap_or(0.0) * signal[idx];
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

/// One separable 2-D analysis step: rows first, then columns. Returns
/// (LL, LH, HL, HH) grids of shape (h/2) x (w/2). LH is low along rows then
/// high along columns (so it responds to variation down the columns).
pub fn dwt2_level(
    grid: &[f64],
    width: usize,
    height: usize,
    wavelet: Wavelet,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    if width % 2 != 0 || height % 2 != 0 {
        return Err(Error::Data(format!(
            "grid {width}x{height} is not even-sized for a wavelet level"
        )));
    }
    let hw = width / 2;
    // Row pass.
    let mut row_lo = vec![0.0; height * hw];
    let mut row_hi = vec![0.0; height * hw];
    for r in 0..height {
        let (a, d) = analysis_1d(&grid[r * width..(r + 1) * width], wavelet);
        row_lo[r * hw..(r + 1) * hw].copy_from_slice(&a);
        row_hi[r * hw..(r + 1) * hw].copy_from_slice(&d);
    }
    // Column pass.
    let hh = height / 2;
    let mut ll = vec![0.0; hh * hw];
    let mut lh = vec![0.0; hh * hw];
    let mut hl = vec![0.0; hh * hw];
    let mut hh_band = vec![0.0; hh * hw];
    let mut col = vec![0.0; height];
    for c in 0..hw {
        for r in 0..height {
            col[r] = row_lo[r * hw + c];
        }
        let (a, d) = analysis_1d(&col, wavelet);
        for r in 0..hh {
            ll[r * hw + c] = a[r];
            lh[r * hw + c] = d[r];
        }
        for r in 0..height {
            col[r] = row_hi[r * hw + c];
        }
        let (a, d) = analysis_1d(&col, wavelet);
        for r in 0..hh {
            hl[r * hw + c] = a[r];
            hh_band[r * hw + c] = d[r];
        }
    }
    Ok((ll, lh, hl, hh_band))
}

/// Inverse of [`dwt2_level`] for the Haar pair.
pub fn idwt2_level_haar(
    ll: &[f64],
    lh: &[f64],
    hl: &[f64],
    hh: &[f64],
    width: usize,
    height: usize,
) -> Result<Vec<f64>> {
    let hw = width / 2;
    let hh_rows = height / 2;
    if [ll, lh, hl, hh].iter().any(|b| b.len() != hw * hh_rows) {
        return Err(Error::ShapeMismatch(
            format!("{hh_rows}x{hw} sub-bands"),
            "given band lengths".into(),
        ));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Undo the column pass, then the row pass.
    let mut row_lo = vec![0.0; height * hw];
    let mut row_hi = vec![0.0; height * hw];
    for c in 0..hw {
        for r in 0..hh_rows {
            let (a, d) = (ll[r * hw + c], lh[r * hw + c]);
            row_lo[(2 * r) * hw + c] = (a + d) * s;
            row_lo[(2 * r + 1) * hw + c] = (a - d) * s;
            let (a, d) = (hl[r * hw + c], hh[r * hw + c]);
            row_hi[(2 * r) * hw + c] = (a + d) * s;
            row_hi[(2 * r + 1) * hw + c] = (a - d) * s;
        }
    }
    let mut grid = vec![0.0; width * height];
    for r in 0..height {
        for c in 0..hw {
            let (a, d) = (row_lo[r * hw + c], row_hi[r * hw + c]);
            grid[r * width + 2 * c] = (a + d) * s;
            grid[r * width + 2 * c + 1] = (a - d) * s;
        }
    }
    Ok(grid)
}

/// Multi-level decomposition: the analysis step is applied `levels` times to
/// the running LL band; the final LL, LH and HL are returned flattened.
pub fn dwt2_subbands(chip: &ImageChip, levels: usize, wavelet: Wavelet) -> Result<SubbandFeatures> {
    if levels == 0 {
        return Err(Error::InvalidParameter("levels must be >= 1".into()));
    }
    let div = 1usize << levels;
    if chip.width % div != 0 || chip.height % div != 0 {
        return Err(Error::Data(format!(
            "chip {}x{} not divisible by 2^{levels}",
            chip.width, chip.height
        )));
    }
    let mut grid = chip.pixels.clone();
    let (mut w, mut h) = (chip.width, chip.height);
    let mut bands = None;
    for _ in 0..levels {
        let (ll, lh, hl, _hh) = dwt2_level(&grid, w, h, wavelet)?;
        w /= 2;
        h /= 2;
        grid = ll.clone();
        bands = Some((ll, lh, hl));
    }
    let (ll, lh, hl) = bands.expect("levels >= 1");
    Ok(SubbandFeatures {
        ll,
        lh,
        hl,
        levels,
        wavelet,
    })
}

/// Chip -> concatenated feature row in LL|LH|HL order.
pub fn subband_feature_row(features: &SubbandFeatures) -> Vec<f64> {
    let mut row = Vec::with_capacity(features.ll.len() * 3);
    row.extend_from_slice(&features.ll);
    row.extend_from_slice(&features.lh);
    row.extend_from_slice(&features.hl);
    row
}

/// Layout of the three sub-band feature sets for a square chip.
pub fn subband_layout(chip_side: usize, levels: usize) -> Result<FeatureLayout> {
    let side = chip_side >> levels;
    FeatureLayout::new(vec![side * side; 3])
}

// ---------------------------------------------------------------------------
// PGM images
// ---------------------------------------------------------------------------

/// Loads a binary (P5) or ASCII (P2) PGM image, 8- or 16-bit, with
/// intensities mapped to [0, 1].
pub fn load_pgm(path: &Path) -> Result<ImageChip> {
    let bytes = std::fs::read(path)?;
    parse_pgm(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<ImageChip, String> {
    let mut pos = 0;
    let next_token = |pos: &mut usize| -> std::result::Result<String, String> {
        // Skip whitespace and '#' comments.
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err("unexpected end of file".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P5" && magic != "P2" {
        return Err(format!("unsupported magic {magic:?}"));
    }
    let width: usize = next_token(&mut pos)?.parse().map_err(|_| "bad width")?;
    let height: usize = next_token(&mut pos)?.parse().map_err(|_| "bad height")?;
    let maxval: u32 = next_token(&mut pos)?.parse().map_err(|_| "bad maxval")?;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err("bad PGM dimensions".into());
    }
    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    if magic == "P2" {
        for _ in 0..n {
            let v: u32 = next_token(&mut pos)?.parse().map_err(|_| "bad pixel")?;
            pixels.push(v as f64 / maxval as f64);
        }
    } else {
        // One whitespace byte separates the header from binary data.
        pos += 1;
        if maxval < 256 {
            if bytes.len() < pos + n {
                return Err("truncated pixel data".into());
            }
            pixels.extend(bytes[pos..pos + n].iter().map(|&b| b as f64 / maxval as f64));
        } else {
            if bytes.len() < pos + 2 * n {
                return Err("truncated pixel data".into());
            }
            for i in 0..n {
                let v = u16::from_be_bytes([bytes[pos + 2 * i], bytes[pos + 2 * i + 1]]);
                pixels.push(v as f64 / maxval as f64);
            }
        }
    }
    ImageChip::new(width, height, pixels).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Tabular features and manifests
// ---------------------------------------------------------------------------

/// A labeled feature dataset split into M per-set matrices with N rows each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sets: Vec<FeatureMatrix>,
    pub labels: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn layout(&self) -> Result<FeatureLayout> {
        FeatureLayout::new(self.sets.iter().map(|m| m.cols()).collect())
    }

    /// The full feature row of sample `i`, sets concatenated.
    pub fn flat_row(&self, i: usize) -> Vec<f64> {
        let mut row = Vec::new();
        for m in &self.sets {
            row.extend_from_slice(m.row(i));
        }
        row
    }
}

/// Reads comma-delimited features: first row is a header, one column holds
/// labels, the remaining columns are numeric and are split per `layout`.
pub fn load_tabular_features(
    path: &Path,
    layout: &FeatureLayout,
    label_column: &str,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_tabular_features(std::io::BufReader::new(file), layout, label_column)
}

pub fn read_tabular_features<R: Read>(
    reader: R,
    layout: &FeatureLayout,
    label_column: &str,
) -> Result<Dataset> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rd
        .headers()
        .map_err(|e| Error::Data(format!("header: {e}")))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Data(format!("label column {label_column:?} not found")))?;
    let width = headers.len();
    let n_features = width - 1;
    if n_features != layout.n_total() {
        return Err(Error::ShapeMismatch(
            format!("{} feature columns per layout", layout.n_total()),
            format!("{n_features} in file"),
        ));
    }

    let mut labels = Vec::new();
    let mut flat: Vec<Vec<f64>> = Vec::new();
    for (rec_no, record) in rd.records().enumerate() {
        let line = rec_no + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        if record.len() != width {
            return Err(Error::Data(format!(
                "line {line}: expected {width} fields, got {}",
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(n_features);
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(field.to_string());
            } else {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Data(format!("line {line}: non-numeric cell {field:?}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::Data(format!("line {line}: non-finite cell {field:?}")));
                }
                row.push(v);
            }
        }
        flat.push(row);
    }
    if labels.is_empty() {
        return Err(Error::Data("no samples".into()));
    }

    let mut sets = Vec::with_capacity(layout.num_sets());
    for s in 0..layout.num_sets() {
        let range = layout.set_range(s);
        let rows: Vec<Vec<f64>> = flat.iter().map(|r| r[range.clone()].to_vec()).collect();
        sets.push(FeatureMatrix::from_rows(rows)?);
    }
    Ok(Dataset { sets, labels })
}

/// Writes a dataset in the same format `load_tabular_features` reads.
/// Values print in shortest round-trip form, so a read-back is lossless.
pub fn save_tabular_features(path: &Path, ds: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_tabular_features(std::io::BufWriter::new(file), ds)
}

pub fn write_tabular_features<W: Write>(mut w: W, ds: &Dataset) -> Result<()> {
    let n_features: usize = ds.sets.iter().map(|m| m.cols()).sum();
    let mut header = String::from("label");
    for j in 0..n_features {
        header.push_str(&format!(",f{j}"));
    }
    writeln!(w, "{header}")?;
    for i in 0..ds.len() {
        let mut line = ds.labels[i].clone();
        for m in &ds.sets {
            for &v in m.row(i) {
                line.push_str(&format!(",{v}"));
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
}

/// Reads an image manifest: CSV with header columns `path,label`.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = std::fs::File::open(path)?;
    read_manifest(std::io::BufReader::new(file))
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<ManifestEntry>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rd
        .headers()
        .map_err(|e| Error::Data(format!("header: {e}")))?
        .clone();
    let path_idx = headers
        .iter()
        .position(|h| h == "path")
        .ok_or_else(|| Error::Data("manifest is missing a 'path' column".into()))?;
    let label_idx = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::Data("manifest is missing a 'label' column".into()))?;
    let mut out = Vec::new();
    for (rec_no, record) in rd.records().enumerate() {
        let line = rec_no + 2;
        let record = record.map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        let path = record
            .get(path_idx)
            .ok_or_else(|| Error::Data(format!("line {line}: missing path")))?;
        let label = record
            .get(label_idx)
            .ok_or_else(|| Error::Data(format!("line {line}: missing label")))?;
        if label.is_empty() {
            return Err(Error::Data(format!("line {line}: empty label")));
        }
        out.push(ManifestEntry {
            path: path.to_string(),
            label: label.to_string(),
        });
    }
    if out.is_empty() {
        return Err(Error::Data("no samples".into()));
    }
    Ok(out)
}
