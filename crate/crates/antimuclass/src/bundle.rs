//! Raster bundles: a text header plus band data files.
//!
//! ```text
//! format = antimuclass-raster 1
//! width = 128
//! height = 128
//! bands = 7
//! sample_type = u8          # u8 | u16 | f32
//! layout = bsq              # bsq | pgm | text
//! data = scene.bsq          # bsq: one file; pgm/text: one file per band, comma separated
//! band_names = b1, b2, ...  # optional
//! labels = scene.labels.pgm # optional
//! ```
//!
//! Data paths are relative to the header. `bsq` stores bands one after the
//! other, rows top to bottom, little-endian samples. `pgm` stores each band as
//! a P2/P5 graymap and is normalized by its maxval; `text` stores each band as
//! whitespace-separated samples, one row per line. Integer samples are divided
//! by the type maximum (255 or 65535); `f32` samples must already lie in
//! `[0, 1]`. Labels are a graymap with 0 for unlabeled pixels and 65535 for
//! rejected ones.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use antimuclass_core::{LabelMap, Raster};

use crate::error::{io_err, Error, Result};
use crate::pnm::Graymap;

const MAGIC: &str = "antimuclass-raster 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleType {
    U8,
    U16,
    F32,
}

impl SampleType {
    fn max(self) -> f64 {
        match self {
            SampleType::U8 => 255.0,
            SampleType::U16 => 65535.0,
            SampleType::F32 => 1.0,
        }
    }

    fn width(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 => 2,
            SampleType::F32 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            SampleType::U8 => "u8",
            SampleType::U16 => "u16",
            SampleType::F32 => "f32",
        }
    }

    fn quantize(self, v: f64) -> f64 {
        match self {
            SampleType::F32 => v as f32 as f64,
            _ => (v * self.max()).round(),
        }
    }
}

impl FromStr for SampleType {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "u8" => Ok(SampleType::U8),
            "u16" => Ok(SampleType::U16),
            "f32" => Ok(SampleType::F32),
            _ => Err(format!("unknown sample type {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Bsq,
    Pgm,
    Text,
}

impl Layout {
    fn name(self) -> &'static str {
        match self {
            Layout::Bsq => "bsq",
            Layout::Pgm => "pgm",
            Layout::Text => "text",
        }
    }
}

impl FromStr for Layout {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bsq" => Ok(Layout::Bsq),
            "pgm" => Ok(Layout::Pgm),
            "text" => Ok(Layout::Text),
            _ => Err(format!("unknown layout {s:?}")),
        }
    }
}

/// A raster with optional ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterBundle {
    pub raster: Raster,
    pub labels: Option<LabelMap>,
    pub band_names: Vec<String>,
}

#[derive(Debug)]
struct Header {
    width: usize,
    height: usize,
    bands: usize,
    sample_type: SampleType,
    layout: Layout,
    data: Vec<String>,
    band_names: Vec<String>,
    labels: Option<String>,
}

fn parse_header(text: &str, path: &Path) -> Result<Header> {
    let fail = |offset: usize, msg: String| Error::Format { path: path.to_path_buf(), offset, msg };
    let mut fields: Vec<(&str, &str, usize)> = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let content = line.split('#').next().unwrap_or("").trim();
        if !content.is_empty() {
            let (k, v) = content.split_once('=').ok_or_else(|| fail(offset, format!("expected key = value, got {content:?}")))?;
            fields.push((k.trim(), v.trim(), offset));
        }
        offset += line.len();
    }
    let get = |key: &str| fields.iter().find(|(k, _, _)| *k == key).map(|&(_, v, o)| (v, o));
    let require = |key: &str| get(key).ok_or_else(|| fail(text.len(), format!("missing {key}")));
    let number = |key: &str| -> Result<usize> {
        let (v, o) = require(key)?;
        v.parse().map_err(|_| fail(o, format!("{key} must be a non-negative integer, got {v:?}")))
    };
    for &(k, _, o) in &fields {
        if !["format", "width", "height", "bands", "sample_type", "layout", "data", "band_names", "labels"].contains(&k) {
            return Err(fail(o, format!("unknown header key {k:?}")));
        }
    }
    let (magic, o) = require("format")?;
    if magic != MAGIC {
        return Err(fail(o, format!("unsupported format {magic:?}")));
    }
    let list = |v: &str| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<Vec<_>>();
    let (st, st_at) = require("sample_type")?;
    let (lay, lay_at) = require("layout")?;
    let (data, data_at) = require("data")?;
    let header = Header {
        width: number("width")?,
        height: number("height")?,
        bands: number("bands")?,
        sample_type: st.parse().map_err(|m| fail(st_at, m))?,
        layout: lay.parse().map_err(|m| fail(lay_at, m))?,
        data: list(data),
        band_names: get("band_names").map(|(v, _)| list(v)).unwrap_or_default(),
        labels: get("labels").map(|(v, _)| v.to_string()),
    };
    if header.width == 0 || header.height == 0 || header.bands == 0 {
        return Err(fail(0, "width, height and bands must be positive".into()));
    }
    let files = if header.layout == Layout::Bsq { 1 } else { header.bands };
    if header.data.len() != files {
        return Err(fail(
            data_at,
            format!("{} layout with {} bands needs {files} data file(s), header lists {}", lay, header.bands, header.data.len()),
        ));
    }
    if !header.band_names.is_empty() && header.band_names.len() != header.bands {
        return Err(fail(0, format!("{} band names for {} bands", header.band_names.len(), header.bands)));
    }
    Ok(header)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

fn decode_bsq(bytes: &[u8], h: &Header, path: &Path) -> Result<Vec<f64>> {
    let n = h.width * h.height * h.bands;
    let sw = h.sample_type.width();
    if bytes.len() != n * sw {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: bytes.len().min(n * sw),
            msg: format!("expected {} bytes of {} samples, found {}", n * sw, h.sample_type.name(), bytes.len()),
        });
    }
    let raw: Vec<f64> = match h.sample_type {
        SampleType::U8 => bytes.iter().map(|&b| b as f64).collect(),
        SampleType::U16 => bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as f64).collect(),
        SampleType::F32 => bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect(),
    };
    normalize(raw, h.sample_type.max(), path, sw)
}

fn normalize(raw: Vec<f64>, max: f64, path: &Path, sample_width: usize) -> Result<Vec<f64>> {
    if let Some(i) = raw.iter().position(|v| !(0.0..=max).contains(v)) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: i * sample_width,
            msg: format!("sample {i} = {} outside [0, {max}]", raw[i]),
        });
    }
    Ok(raw.into_iter().map(|v| v / max).collect())
}

fn decode_text(text: &str, h: &Header, path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(h.width * h.height);
    let mut offset = 0;
    for token in text.split_inclusive(char::is_whitespace) {
        let t = token.trim();
        if !t.is_empty() {
            let v: f64 = t.parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                offset,
                msg: format!("not a number: {t:?}"),
            })?;
            out.push(v);
        }
        offset += token.len();
    }
    if out.len() != h.width * h.height {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset,
            msg: format!("expected {} samples, found {}", h.width * h.height, out.len()),
        });
    }
    normalize(out, h.sample_type.max(), path, 1)
}

fn check_dims(g: &Graymap, h: &Header, path: &Path) -> Result<()> {
    if g.width != h.width || g.height != h.height {
        return Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            msg: format!("image is {}x{}, header says {}x{}", g.width, g.height, h.width, h.height),
        });
    }
    Ok(())
}

/// Reads a label graymap.
pub fn load_labels(path: &Path) -> Result<LabelMap> {
    let g = Graymap::read(path)?;
    Ok(LabelMap::new(g.width, g.height, g.samples)?)
}

/// Writes labels as a binary graymap whose maxval is the largest label.
pub fn save_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    let maxval = labels.labels.iter().copied().max().unwrap_or(0).max(1);
    Graymap { width: labels.width, height: labels.height, maxval, samples: labels.labels.clone() }.write(path)
}

/// Loads the raster (normalized to `[0, 1]`) and labels named by `header`.
pub fn load_bundle(header: &Path) -> Result<RasterBundle> {
    let text = String::from_utf8(read(header)?).map_err(|e| Error::Format {
        path: header.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
        msg: "header is not UTF-8".into(),
    })?;
    let h = parse_header(&text, header)?;
    let dir = header.parent().unwrap_or(Path::new("."));
    let files: Vec<PathBuf> = h.data.iter().map(|f| dir.join(f)).collect();
    let data = match h.layout {
        Layout::Bsq => decode_bsq(&read(&files[0])?, &h, &files[0])?,
        Layout::Pgm => {
            let mut data = Vec::with_capacity(h.width * h.height * h.bands);
            for f in &files {
                let g = Graymap::read(f)?;
                check_dims(&g, &h, f)?;
                let max = g.maxval as f64;
                data.extend(g.samples.iter().map(|&s| s as f64 / max));
            }
            data
        }
        Layout::Text => {
            let mut data = Vec::with_capacity(h.width * h.height * h.bands);
            for f in &files {
                let t = String::from_utf8_lossy(&read(f)?).into_owned();
                data.extend(decode_text(&t, &h, f)?);
            }
            data
        }
    };
    let raster = Raster::new(h.width, h.height, h.bands, data)?;
    let labels = match &h.labels {
        Some(f) => {
            let p = dir.join(f);
            let l = load_labels(&p)?;
            if l.width != h.width || l.height != h.height {
                return Err(Error::Format {
                    path: p,
                    offset: 0,
                    msg: format!("labels are {}x{}, raster is {}x{}", l.width, l.height, h.width, h.height),
                });
            }
            Some(l)
        }
        None => None,
    };
    Ok(RasterBundle { raster, labels, band_names: h.band_names })
}

/// Writes `bundle` next to `header`, naming data files after the header's
/// stem. Returns every file written.
pub fn save_bundle(header: &Path, bundle: &RasterBundle, sample_type: SampleType, layout: Layout) -> Result<Vec<PathBuf>> {
    let r = &bundle.raster;
    let dir = header.parent().unwrap_or(Path::new("."));
    let stem = header.file_stem().and_then(|s| s.to_str()).unwrap_or("raster").to_string();
    let max = sample_type.max();
    let mut written = Vec::new();
    let mut data_names = Vec::new();
    match layout {
        Layout::Bsq => {
            let name = format!("{stem}.bsq");
            let mut bytes = Vec::with_capacity(r.data().len() * sample_type.width());
            for &v in r.data() {
                match sample_type {
                    SampleType::U8 => bytes.push((v * max).round() as u8),
                    SampleType::U16 => bytes.extend(((v * max).round() as u16).to_le_bytes()),
                    SampleType::F32 => bytes.extend((v as f32).to_le_bytes()),
                }
            }
            write_file(&dir.join(&name), &bytes, &mut written)?;
            data_names.push(name);
        }
        Layout::Pgm => {
            if sample_type == SampleType::F32 {
                return Err(Error::Render("graymaps hold integer samples only".into()));
            }
            for b in 0..r.bands() {
                let name = format!("{stem}.b{}.pgm", b + 1);
                let samples = r.band(b).iter().map(|&v| (v * max).round() as u16).collect();
                let g = Graymap { width: r.width(), height: r.height(), maxval: max as u16, samples };
                write_file(&dir.join(&name), &g.to_bytes(), &mut written)?;
                data_names.push(name);
            }
        }
        Layout::Text => {
            for b in 0..r.bands() {
                let name = format!("{stem}.b{}.txt", b + 1);
                let mut text = String::new();
                for row in r.band(b).chunks(r.width()) {
                    let cells: Vec<String> = row.iter().map(|&v| format!("{}", sample_type.quantize(v))).collect();
                    text.push_str(&cells.join(" "));
                    text.push('\n');
                }
                write_file(&dir.join(&name), text.as_bytes(), &mut written)?;
                data_names.push(name);
            }
        }
    }
    let mut head = String::new();
    let _ = writeln!(head, "format = {MAGIC}");
    let _ = writeln!(head, "width = {}\nheight = {}\nbands = {}", r.width(), r.height(), r.bands());
    let _ = writeln!(head, "sample_type = {}\nlayout = {}", sample_type.name(), layout.name());
    let _ = writeln!(head, "data = {}", data_names.join(", "));
    if !bundle.band_names.is_empty() {
        let _ = writeln!(head, "band_names = {}", bundle.band_names.join(", "));
    }
    if let Some(labels) = &bundle.labels {
        let name = format!("{stem}.labels.pgm");
        save_labels(&dir.join(&name), labels)?;
        written.push(dir.join(&name));
        let _ = writeln!(head, "labels = {name}");
    }
    write_file(header, head.as_bytes(), &mut written)?;
    Ok(written)
}

fn write_file(path: &Path, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))?;
    written.push(path.to_path_buf());
    Ok(())
}
