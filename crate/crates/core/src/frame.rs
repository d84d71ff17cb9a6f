//! RGB frames, crops and PPM files.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-major 8-bit RGB image.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

pub const CHANNELS: usize = 3;

impl Frame {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * CHANNELS).collect();
        Frame { width, height, data }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * CHANNELS {
            return Err(Error::Shape(format!(
                "{}x{} RGB frame needs {} bytes, got {}",
                width,
                height,
                width * height * CHANNELS,
                data.len()
            )));
        }
        Ok(Frame { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    /// Nearest-neighbour resampling.
    pub fn resized(&self, width: usize, height: usize) -> Frame {
        if (width, height) == self.size() {
            return self.clone();
        }
        let mut out = Frame::new(width, height);
        for y in 0..height {
            let sy = (y * self.height) / height;
            for x in 0..width {
                let sx = (x * self.width) / width;
                out.set_pixel(x, y, self.pixel(sx, sy));
            }
        }
        out
    }

    /// Mean absolute per-channel difference, in 8-bit units.
    pub fn mean_abs_diff(&self, other: &Frame) -> f64 {
        assert_eq!(self.size(), other.size());
        let total: u64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum();
        total as f64 / self.data.len() as f64
    }

    /// Grid of equally sized frames, `columns` per row.
    pub fn tile(frames: &[Frame], columns: usize) -> Result<Frame> {
        let first = frames.first().ok_or_else(|| Error::Render("no frames to tile".into()))?;
        let (w, h) = first.size();
        if frames.iter().any(|f| f.size() != (w, h)) || columns == 0 {
            return Err(Error::Render("tiles must share one size".into()));
        }
        let rows = frames.len().div_ceil(columns);
        let mut out = Frame::new(w * columns.min(frames.len()), h * rows);
        for (i, f) in frames.iter().enumerate() {
            let (ox, oy) = ((i % columns) * w, (i / columns) * h);
            for y in 0..h {
                let src = &f.data[y * w * CHANNELS..(y + 1) * w * CHANNELS];
                let start = ((oy + y) * out.width + ox) * CHANNELS;
                out.data[start..start + w * CHANNELS].copy_from_slice(src);
            }
        }
        Ok(out)
    }
}

/// Top-left corner of a crop window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CropOffset {
    pub x: usize,
    pub y: usize,
}

/// Copies the `crop_size` window at `offset`.
pub fn crop(frame: &Frame, offset: CropOffset, crop_size: (usize, usize)) -> Result<Frame> {
    let (cw, ch) = crop_size;
    if offset.x + cw > frame.width || offset.y + ch > frame.height {
        return Err(Error::Shape(format!(
            "crop {cw}x{ch} at ({}, {}) exceeds {}x{} frame",
            offset.x, offset.y, frame.width, frame.height
        )));
    }
    let mut data = Vec::with_capacity(cw * ch * CHANNELS);
    for y in offset.y..offset.y + ch {
        let start = (y * frame.width + offset.x) * CHANNELS;
        data.extend_from_slice(&frame.data[start..start + cw * CHANNELS]);
    }
    Frame::from_raw(cw, ch, data)
}

/// Uniform over every valid window position.
pub fn random_crop_offset(frame_size: (usize, usize), crop_size: (usize, usize), rng: &mut Rng) -> CropOffset {
    let max_x = frame_size.0 - crop_size.0;
    let max_y = frame_size.1 - crop_size.1;
    CropOffset { x: rng.random_range(0..=max_x), y: rng.random_range(0..=max_y) }
}

pub fn center_crop_offset(frame_size: (usize, usize), crop_size: (usize, usize)) -> CropOffset {
    CropOffset { x: (frame_size.0 - crop_size.0) / 2, y: (frame_size.1 - crop_size.1) / 2 }
}

/// Binary PPM (`P6`, maxval 255).
pub fn write_ppm<W: Write>(frame: &Frame, mut out: W) -> io::Result<()> {
    write!(out, "P6\n{} {}\n255\n", frame.width, frame.height)?;
    out.write_all(&frame.data)
}

pub fn save_ppm(frame: &Frame, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = io::BufWriter::new(file);
    write_ppm(frame, &mut w)?;
    w.flush()?;
    Ok(())
}

fn ppm_token<R: BufRead>(r: &mut R) -> std::result::Result<String, String> {
    let mut token = String::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte).map_err(|e| e.to_string())? == 0 {
            return if token.is_empty() { Err("unexpected end of header".into()) } else { Ok(token) };
        }
        let c = byte[0];
        if c == b'#' && token.is_empty() {
            let mut comment = Vec::new();
            r.read_until(b'\n', &mut comment).map_err(|e| e.to_string())?;
            continue;
        }
        if c.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            return Ok(token);
        }
        token.push(c as char);
    }
}

pub fn read_ppm<R: Read>(input: R) -> std::result::Result<Frame, String> {
    let mut r = BufReader::new(input);
    if ppm_token(&mut r)? != "P6" {
        return Err("not a binary PPM (P6) file".into());
    }
    let mut num = || -> std::result::Result<usize, String> {
        let t = ppm_token(&mut r)?;
        t.parse().map_err(|_| format!("bad header field '{t}'"))
    };
    let (width, height, maxval) = (num()?, num()?, num()?);
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    if width == 0 || height == 0 {
        return Err("zero-sized image".into());
    }
    let mut data = vec![0u8; width * height * CHANNELS];
    r.read_exact(&mut data).map_err(|_| "truncated pixel data".to_string())?;
    Ok(Frame { width, height, data })
}

/// Loads a `.ppm` or `.png` image as RGB.
pub fn load_image(path: &Path) -> Result<Frame> {
    let load_err = |reason: String| Error::Load { path: path.to_path_buf(), reason };
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("ppm") => {
            let file = fs::File::open(path).map_err(|e| load_err(e.to_string()))?;
            read_ppm(file).map_err(load_err)
        }
        Some("png") => {
            let img = image::open(path).map_err(|e| load_err(e.to_string()))?.to_rgb8();
            let (w, h) = img.dimensions();
            Frame::from_raw(w as usize, h as usize, img.into_raw()).map_err(|e| load_err(e.to_string()))
        }
        _ => Err(load_err("unsupported image format".into())),
    }
}

pub fn save_png(frame: &Frame, path: &Path) -> Result<()> {
    image::save_buffer(
        path,
        &frame.data,
        frame.width as u32,
        frame.height as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::Load { path: path.to_path_buf(), reason: e.to_string() })
}
