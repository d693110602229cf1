//! Encoders for rendered frames, semantic maps, audio and tabular outputs,
//! plus atomic file writes.

use std::io::{Cursor, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use mugenforge_core::audio::AudioTrack;
use mugenforge_core::dataset::Heatmap2D;
use mugenforge_core::render::{Image, SemanticFrame};
use mugenforge_core::xmetrics::SimilarityMatrix;
use serde_json::{json, Value};

/// Write through a temporary file in the same directory, then rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut b = tempfile::Builder::new();
    // Temp files default to owner-only; outputs should get ordinary permissions.
    #[cfg(unix)]
    b.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = b.tempfile_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn encode_png(width: u32, height: u32, color: png::ColorType, data: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().expect("in-memory PNG header");
        w.write_image_data(data).expect("buffer matches the declared size");
    }
    out
}

/// Lossless 8-bit RGB PNG.
pub fn png_rgb(img: &Image) -> Vec<u8> {
    encode_png(img.width, img.height, png::ColorType::Rgb, &img.pixels)
}

/// 8-bit grayscale PNG whose gray level is the class id.
pub fn png_semantic(sem: &SemanticFrame) -> Vec<u8> {
    encode_png(sem.width, sem.height, png::ColorType::Grayscale, &sem.classes)
}

/// Decoded PNG: width, height, channels and raw bytes.
pub fn decode_png(bytes: &[u8]) -> Result<(u32, u32, usize, Vec<u8>)> {
    let dec = png::Decoder::new(Cursor::new(bytes));
    let mut reader = dec.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf)?;
    buf.truncate(info.buffer_size());
    Ok((info.width, info.height, info.color_type.samples(), buf))
}

/// Sidecar mapping from gray level to class name.
pub fn palette_json(sem: &SemanticFrame) -> Value {
    Value::Array(sem.palette().into_iter().map(|(id, name)| json!({"id": id, "name": name})).collect())
}

/// RIFF PCM 16-bit mono at the track's sample rate.
pub fn wav_bytes(track: &AudioTrack) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: track.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cur = Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cur, spec).expect("in-memory WAV header");
        for &s in &track.samples {
            w.write_sample(s).expect("in-memory write");
        }
        w.finalize().expect("in-memory finalize");
    }
    cur.into_inner()
}

/// Heatmap as a CSV grid, one row of counts per line, top row first.
pub fn heatmap_csv(h: &Heatmap2D) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in 0..h.rows {
        w.write_record((0..h.cols).map(|c| h.get(c, r).to_string())).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}

/// `log(1 + count)` as 8-bit grayscale, scaled so the largest cell is white.
pub fn heatmap_png(h: &Heatmap2D) -> Vec<u8> {
    let display = h.log_display();
    let top = display.iter().cloned().fold(0.0, f64::max);
    let gray: Vec<u8> =
        display.iter().map(|&d| if top > 0.0 { (d / top * 255.0).round() as u8 } else { 0 }).collect();
    encode_png(h.cols as u32, h.rows as u32, png::ColorType::Grayscale, &gray)
}

/// Numeric CSV without a header; every row must have the same width.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.with_context(|| format!("{} row {}", path.display(), i + 1))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().with_context(|| format!("{} row {}: {f:?} is not a number", path.display(), i + 1)))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} is empty", path.display());
    }
    Ok(rows)
}

pub fn matrix_csv(s: &SimilarityMatrix) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for i in 0..s.rows() {
        w.write_record(s.row(i).iter().map(|v| v.to_string())).expect("in-memory CSV");
    }
    w.into_inner().expect("in-memory CSV")
}
