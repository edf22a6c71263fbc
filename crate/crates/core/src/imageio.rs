//! Image loading, luminance conversion, cropping and the `PRNU1` residual format.
//!
//! `PRNU1` layout: ASCII `PRNU1\n`, ASCII `"<width> <height>\n"`, then
//! `width * height` little-endian `f32` samples in row-major order.

use std::io::Write;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, Luma};

use crate::error::{Error, Result};
use crate::raster::{ImagePlane, NoiseResidual, Raster};

const RESIDUAL_MAGIC: &[u8] = b"PRNU1\n";

/// BT.601 luma with integer weights so that gray and white inputs map exactly.
#[inline]
pub fn luminance(r: u8, g: u8, b: u8) -> f64 {
    let y = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    y as f64 / 1000.0
}

/// Decodes a PNG/JPEG file into a grayscale working plane.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImagePlane> {
    let path = path.as_ref();
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Format(format!("{}: {other}", path.display())),
        })?;
    plane_from_dynamic(&img)
        .map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
}

/// Converts an 8-bit decoded image to luminance. Alpha channels are ignored.
pub fn plane_from_dynamic(img: &DynamicImage) -> Result<ImagePlane> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageRgb8(buf) => buf
            .pixels()
            .map(|p| luminance(p.0[0], p.0[1], p.0[2]))
            .collect(),
        DynamicImage::ImageRgba8(buf) => buf
            .pixels()
            .map(|p| luminance(p.0[0], p.0[1], p.0[2]))
            .collect(),
        other => {
            return Err(Error::Format(format!(
                "unsupported pixel layout {:?}; expected 8-bit gray or RGB",
                other.color()
            )))
        }
    };
    ImagePlane::from_vec(w, h, data)
}

/// Rounds a plane to 8 bits.
pub fn plane_to_gray8(plane: &ImagePlane) -> GrayImage {
    let r = plane.raster();
    GrayImage::from_fn(r.width() as u32, r.height() as u32, |x, y| {
        Luma([r.get(y as usize, x as usize).round().clamp(0.0, 255.0) as u8])
    })
}

/// Writes a plane as an 8-bit grayscale image; the format follows the extension.
pub fn save_plane(plane: &ImagePlane, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    plane_to_gray8(plane).save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

fn crop_origin(
    width: usize,
    height: usize,
    w: usize,
    h: usize,
) -> Result<(usize, usize)> {
    if w > width || h > height {
        return Err(Error::Dimension(format!(
            "crop {w}x{h} larger than {width}x{height}"
        )));
    }
    // Odd margins leave the extra row/column at the bottom/right.
    Ok(((width - w) / 2, (height - h) / 2))
}

/// Centered `w`x`h` window of any raster.
pub fn center_crop_raster(raster: &Raster, w: usize, h: usize) -> Result<Raster> {
    let (left, top) = crop_origin(raster.width(), raster.height(), w, h)?;
    raster.window(left, top, w, h)
}

pub fn center_crop(img: &ImagePlane, w: usize, h: usize) -> Result<ImagePlane> {
    ImagePlane::new(center_crop_raster(img.raster(), w, h)?)
}

/// Splits the centered `(cols*w) x (rows*h)` block into `rows*cols` tiles.
///
/// Returns each tile with the `(left, top)` offset of its corner in the source.
pub fn center_tiles(
    raster: &Raster,
    w: usize,
    h: usize,
    rows: usize,
    cols: usize,
) -> Result<Vec<((usize, usize), Raster)>> {
    let (left, top) = crop_origin(raster.width(), raster.height(), w * cols, h * rows)?;
    let mut tiles = Vec::with_capacity(rows * cols);
    for tr in 0..rows {
        for tc in 0..cols {
            let origin = (left + tc * w, top + tr * h);
            tiles.push((origin, raster.window(origin.0, origin.1, w, h)?));
        }
    }
    Ok(tiles)
}

/// Serializes a residual to `PRNU1` bytes. Samples are narrowed to `f32`.
pub fn encode_residual(res: &NoiseResidual) -> Vec<u8> {
    let r = res.raster();
    let header = format!("{} {}\n", r.width(), r.height());
    let mut out = Vec::with_capacity(RESIDUAL_MAGIC.len() + header.len() + 4 * r.len());
    out.extend_from_slice(RESIDUAL_MAGIC);
    out.extend_from_slice(header.as_bytes());
    for &v in r.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_residual(bytes: &[u8]) -> Result<NoiseResidual> {
    let rest = bytes
        .strip_prefix(RESIDUAL_MAGIC)
        .ok_or_else(|| Error::Format("bad magic, expected PRNU1".into()))?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing dimension line".into()))?;
    let dims = std::str::from_utf8(&rest[..nl])
        .map_err(|_| Error::Format("dimension line is not ASCII".into()))?;
    let mut parts = dims.split(' ');
    let parse = |p: Option<&str>| -> Result<usize> {
        p.and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::Format(format!("malformed dimension line {dims:?}")))
    };
    let width = parse(parts.next())?;
    let height = parse(parts.next())?;
    if parts.next().is_some() {
        return Err(Error::Format(format!("malformed dimension line {dims:?}")));
    }
    let payload = &rest[nl + 1..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if payload.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: {} of {expected} bytes",
            payload.len()
        )));
    }
    if payload.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            payload.len() - expected
        )));
    }
    let mut data = Vec::with_capacity(width * height);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::Format(format!("non-finite sample at index {i}")));
        }
        data.push(f64::from(v));
    }
    NoiseResidual::new(Raster::new(width, height, data)?)
}

pub fn read_residual(path: impl AsRef<Path>) -> Result<NoiseResidual> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_residual(&bytes)
}

pub fn write_residual(res: &NoiseResidual, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_residual(res))
        .map_err(|e| Error::io(path, e))
}
