//! Binary portable pixmaps: P5 (gray) and P6 (RGB), maxval 255.

use std::fs;
use std::path::{Path, PathBuf};

use super::Frame;
use crate::error::{Error, Result};

pub fn encode(frame: &Frame) -> Vec<u8> {
    let magic = if frame.is_gray() { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.data());
    out
}

/// Decodes a P5/P6 image. `source` only labels errors.
pub fn decode(bytes: &[u8], source: &Path, index: usize) -> Result<Frame> {
    let err = |reason: &str| Error::Decode {
        path: source.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or_else(|| err("missing magic"))?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(err("not a binary P5/P6 pixmap")),
    };
    let mut field = |name: &str| -> Result<usize> {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| err(&format!("missing {name}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| err(&format!("bad {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval != 255 {
        return Err(err("maxval must be 255"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err("missing raster"));
    }
    pos += 1;
    let expected = width * height * channels;
    let raster = &bytes[pos..];
    if raster.len() != expected {
        return Err(err(&format!("raster has {} bytes, expected {expected}", raster.len())));
    }
    Frame::new(width, height, channels, raster.to_vec(), index).map_err(|e| err(&e.to_string()))
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

pub fn save_frame(path: &Path, frame: &Frame) -> Result<()> {
    fs::write(path, encode(frame)).map_err(|e| Error::io(path, e))
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let index = index_from_name(path).unwrap_or(0);
    decode(&bytes, path, index)
}

/// Frame file name for an index: `frame_000017.pgm` / `.ppm`.
pub fn frame_file_name(frame: &Frame) -> String {
    let ext = if frame.is_gray() { "pgm" } else { "ppm" };
    format!("frame_{:06}.{ext}", frame.index())
}

fn index_from_name(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Loads every `.pgm`/`.ppm` file in `dir`, ordered by the decimal index in
/// its name. All frames must share dimensions.
pub fn load_frame_sequence(dir: &Path) -> Result<Vec<Frame>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_pnm = matches!(path.extension().and_then(|e| e.to_str()), Some("pgm") | Some("ppm"));
        if !is_pnm {
            continue;
        }
        let index = index_from_name(&path).ok_or_else(|| Error::Decode {
            path: path.clone(),
            reason: "file name carries no frame index".into(),
        })?;
        files.push((index, path));
    }
    files.sort();
    if let Some(w) = files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Decode {
            path: w[1].1.clone(),
            reason: format!("duplicate frame index {}", w[1].0),
        });
    }
    let mut frames: Vec<Frame> = Vec::with_capacity(files.len());
    for (index, path) in files {
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let frame = decode(&bytes, &path, index)?;
        if let Some(first) = frames.first() {
            if !first.same_dims(&frame) {
                return Err(Error::DimensionMismatch {
                    expected: first.dims_string(),
                    found: format!("{} in {}", frame.dims_string(), path.display()),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn save_frame_sequence(dir: &Path, frames: &[Frame]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for f in frames {
        save_frame(&dir.join(frame_file_name(f)), f)?;
    }
    Ok(())
}
