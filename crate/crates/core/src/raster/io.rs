//! Raster file formats.
//!
//! * ESRI ASCII grid (`.asc`): single band, values written in shortest
//!   round-trip decimal form so float grids survive a write/read bit-exactly.
//! * GeoTIFF (`.tif`, `.tiff`): uncompressed strips, 32-bit float for
//!   elevations and images, 8-bit for masks. Ground sample distance lives in
//!   ModelPixelScaleTag, the top-left corner in ModelTiepointTag and the
//!   nodata sentinel in the GDAL_NODATA ASCII tag.
//! * PNG (`.png`): 8-bit greyscale or RGB export of [0, 1] images.
//!
//! Readers detect TIFF by its magic bytes and treat anything else as ASCII.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::tags::Tag;

use super::{ClassMask, DemGrid, MultiBandImage};
use crate::error::{Error, Result};

/// Pixel type of the file a raster was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleType {
    U8,
    U16,
    U32,
    I8,
    I16,
    I32,
    F32,
    F64,
    /// ASCII grids carry no pixel type.
    Text,
}

#[derive(Debug, Clone)]
pub struct RasterRead {
    pub grid: DemGrid,
    /// Set when the file carried no cell size and 1.0 was assumed.
    pub gsd_defaulted: bool,
    pub sample_type: SampleType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    Tiff,
    Png,
}

fn format_for_write(path: &Path) -> Result<Format> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "asc" | "txt" => Ok(Format::Ascii),
        "tif" | "tiff" => Ok(Format::Tiff),
        "png" => Ok(Format::Png),
        _ => Err(Error::unsupported(
            path,
            "unknown extension (expected .asc, .tif, .tiff or .png)",
        )),
    }
}

fn is_tiff(path: &Path) -> Result<bool> {
    let mut magic = [0u8; 4];
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
    Ok(n == 4 && (magic == *b"II*\0" || magic == *b"MM\0*" || magic == *b"II+\0" || magic == *b"MM\0+"))
}

/// Reads a single-band raster.
pub fn read_raster(path: impl AsRef<Path>) -> Result<RasterRead> {
    let path = path.as_ref();
    let read = if is_tiff(path)? {
        let (mut bands, meta) = read_tiff(path)?;
        if bands.len() != 1 {
            return Err(Error::unsupported(
                path,
                format!("expected a single band, found {}", bands.len()),
            ));
        }
        let grid = DemGrid::new(meta.width, meta.height, bands.remove(0), meta.gsd.unwrap_or(1.0))
            .map_err(|e| Error::format(path, e.to_string()))?
            .with_nodata(meta.nodata)
            .with_origin(meta.origin);
        RasterRead {
            grid,
            gsd_defaulted: meta.gsd.is_none(),
            sample_type: meta.sample_type,
        }
    } else {
        read_ascii(path)?
    };
    if read.gsd_defaulted {
        log::warn!("{}: no cell size in file, assuming 1.0", path.display());
    }
    Ok(read)
}

/// Writes a float grid as ASCII or GeoTIFF, chosen by extension.
pub fn write_raster(grid: &DemGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match format_for_write(path)? {
        Format::Ascii => write_ascii(grid, path),
        Format::Tiff => write_tiff_f32(
            path,
            grid.width(),
            grid.height(),
            &[grid.values()],
            &GeoMeta::of(grid),
        ),
        Format::Png => Err(Error::unsupported(
            path,
            "elevation grids are not PNG-exportable; write a visualisation instead",
        )),
    }
}

/// Writes a [0, 1] image: float GeoTIFF (1 or 3 bands), ASCII (1 band) or PNG.
/// NaN (nodata) cells become the -9999 sentinel in float formats and 0 in PNG.
pub fn write_image(
    img: &MultiBandImage,
    path: impl AsRef<Path>,
    gsd: f64,
    origin: Option<(f64, f64)>,
) -> Result<()> {
    let path = path.as_ref();
    let has_nan = img.bands().iter().any(|b| b.iter().any(|v| v.is_nan()));
    let meta = GeoMeta {
        gsd,
        origin,
        nodata: has_nan.then_some(IMAGE_NODATA),
    };
    let bands: Vec<Vec<f32>> = img
        .bands()
        .iter()
        .map(|b| {
            b.iter()
                .map(|&v| if v.is_nan() { IMAGE_NODATA } else { v })
                .collect()
        })
        .collect();
    match format_for_write(path)? {
        Format::Png => write_png(img, path),
        Format::Tiff => {
            let refs: Vec<&[f32]> = bands.iter().map(Vec::as_slice).collect();
            write_tiff_f32(path, img.width(), img.height(), &refs, &meta)
        }
        Format::Ascii => {
            if img.band_count() != 1 {
                return Err(Error::unsupported(
                    path,
                    "ASCII grids hold one band; use .tif for 3-band images",
                ));
            }
            let grid = DemGrid::new(img.width(), img.height(), bands[0].clone(), gsd)?
                .with_nodata(meta.nodata)
                .with_origin(origin);
            write_ascii(&grid, path)
        }
    }
}

const IMAGE_NODATA: f32 = -9999.0;

/// Reads a 1- or 3-band float GeoTIFF written by [`write_image`].
pub fn read_image(path: impl AsRef<Path>) -> Result<MultiBandImage> {
    let path = path.as_ref();
    let (bands, meta) = if is_tiff(path)? {
        read_tiff(path)?
    } else {
        let r = read_ascii(path)?;
        let g = r.grid;
        let meta = TiffMeta {
            width: g.width(),
            height: g.height(),
            gsd: Some(g.gsd()),
            origin: g.origin(),
            nodata: g.nodata(),
            sample_type: SampleType::Text,
        };
        (vec![g.into_values()], meta)
    };
    let bands = bands
        .into_iter()
        .map(|b| {
            b.into_iter()
                .map(|v| if v.is_nan() || meta.nodata == Some(v) { f32::NAN } else { v })
                .collect()
        })
        .collect();
    MultiBandImage::new(meta.width, meta.height, bands).map_err(|e| Error::format(path, e.to_string()))
}

/// Rounds half-up: `floor(v * 255 + 0.5)`, clamped to the byte range.
pub fn png_byte(v: f32) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v as f64 * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn write_png(img: &MultiBandImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let color = match img.band_count() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        n => return Err(Error::unsupported(path, format!("PNG export needs 1 or 3 bands, got {n}"))),
    };
    let n = img.width() * img.height();
    let mut bytes = Vec::with_capacity(n * img.band_count());
    for i in 0..n {
        for band in img.bands() {
            bytes.push(png_byte(band[i]));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width() as u32, img.height() as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    let to_err = |e: png::EncodingError| Error::format(path, e.to_string());
    let mut writer = enc.write_header().map_err(to_err)?;
    writer.write_image_data(&bytes).map_err(to_err)?;
    writer.finish().map_err(to_err)
}

/// Decoded 8-bit PNG: (width, height, channels, interleaved bytes).
pub fn read_png(path: impl AsRef<Path>) -> Result<(usize, usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let to_err = |e: png::DecodingError| Error::format(path, e.to_string());
    let mut reader = png::Decoder::new(BufReader::new(file)).read_info().map_err(to_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "PNG too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(to_err)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::unsupported(path, "only 8-bit PNGs are read"));
    }
    buf.truncate(info.buffer_size());
    Ok((
        info.width as usize,
        info.height as usize,
        info.color_type.samples(),
        buf,
    ))
}

/// Reads a class-id mask. Every value must be an integer in 0..=255.
pub fn read_mask(path: impl AsRef<Path>) -> Result<ClassMask> {
    let path = path.as_ref();
    let grid = read_raster(path)?.grid;
    let values = grid
        .values()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && (0.0..=255.0).contains(&v) {
                Ok(v as u8)
            } else {
                Err(Error::format(path, format!("mask value {v} is not a class id")))
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    ClassMask::new(grid.width(), grid.height(), values)
}

/// Writes a mask as an 8-bit GeoTIFF.
pub fn write_mask(
    mask: &ClassMask,
    path: impl AsRef<Path>,
    gsd: f64,
    origin: Option<(f64, f64)>,
) -> Result<()> {
    let path = path.as_ref();
    let meta = GeoMeta {
        gsd,
        origin,
        nodata: None,
    };
    write_tiff::<colortype::Gray8>(path, mask.width(), mask.height(), mask.values(), &meta)
}

struct GeoMeta {
    gsd: f64,
    origin: Option<(f64, f64)>,
    nodata: Option<f32>,
}

impl GeoMeta {
    fn of(grid: &DemGrid) -> Self {
        GeoMeta {
            gsd: grid.gsd(),
            origin: grid.origin(),
            nodata: grid.nodata(),
        }
    }
}

struct TiffMeta {
    width: usize,
    height: usize,
    gsd: Option<f64>,
    origin: Option<(f64, f64)>,
    nodata: Option<f32>,
    sample_type: SampleType,
}

fn write_tiff_f32(
    path: &Path,
    width: usize,
    height: usize,
    bands: &[&[f32]],
    meta: &GeoMeta,
) -> Result<()> {
    match bands.len() {
        1 => write_tiff::<colortype::Gray32Float>(path, width, height, bands[0], meta),
        3 => {
            let n = width * height;
            let mut interleaved = Vec::with_capacity(3 * n);
            for i in 0..n {
                interleaved.extend(bands.iter().map(|b| b[i]));
            }
            write_tiff::<colortype::RGB32Float>(path, width, height, &interleaved, meta)
        }
        n => Err(Error::unsupported(path, format!("cannot write {n} bands"))),
    }
}

fn write_tiff<C>(
    path: &Path,
    width: usize,
    height: usize,
    data: &[C::Inner],
    meta: &GeoMeta,
) -> Result<()>
where
    C: colortype::ColorType,
    [C::Inner]: tiff::encoder::TiffValue,
{
    let to_err = |e: tiff::TiffError| Error::format(path, e.to_string());
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = TiffEncoder::new(BufWriter::new(file)).map_err(to_err)?;
    let mut image = enc
        .new_image::<C>(width as u32, height as u32)
        .map_err(to_err)?;
    let dir = image.encoder();
    dir.write_tag(Tag::ModelPixelScaleTag, &[meta.gsd, meta.gsd, 0.0][..])
        .map_err(to_err)?;
    if let Some((x, y)) = meta.origin {
        dir.write_tag(Tag::ModelTiepointTag, &[0.0, 0.0, 0.0, x, y, 0.0][..])
            .map_err(to_err)?;
    }
    if let Some(nd) = meta.nodata {
        dir.write_tag(Tag::GdalNodata, format_float(nd).as_str())
            .map_err(to_err)?;
    }
    image.write_data(data).map_err(to_err)
}

fn read_tiff(path: &Path) -> Result<(Vec<Vec<f32>>, TiffMeta)> {
    let to_err = |e: tiff::TiffError| Error::format(path, e.to_string());
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = Decoder::new(BufReader::new(file)).map_err(to_err)?;
    let (w, h) = dec.dimensions().map_err(to_err)?;
    let samples = dec.colortype().map_err(to_err)?.num_samples() as usize;

    let gsd = dec
        .find_tag(Tag::ModelPixelScaleTag)
        .map_err(to_err)?
        .map(|v| v.into_f64_vec())
        .transpose()
        .map_err(to_err)?
        .and_then(|v| v.first().copied())
        .filter(|g| *g > 0.0);
    let origin = dec
        .find_tag(Tag::ModelTiepointTag)
        .map_err(to_err)?
        .map(|v| v.into_f64_vec())
        .transpose()
        .map_err(to_err)?
        .filter(|v| v.len() >= 6)
        .map(|v| {
            // tiepoint maps raster (i, j) to model (x, y); shift back to the corner
            let g = gsd.unwrap_or(1.0);
            (v[3] - v[0] * g, v[4] + v[1] * g)
        });
    let nodata = match dec.find_tag(Tag::GdalNodata).map_err(to_err)? {
        Some(v) => {
            let s = v.into_string().map_err(to_err)?;
            let s = s.trim_matches(|c: char| c == '\0' || c.is_whitespace());
            Some(
                s.parse::<f32>()
                    .map_err(|_| Error::format(path, format!("bad GDAL_NODATA value {s:?}")))?,
            )
        }
        None => None,
    };

    let (flat, sample_type): (Vec<f32>, SampleType) = match dec.read_image().map_err(to_err)? {
        DecodingResult::U8(v) => (v.into_iter().map(f32::from).collect(), SampleType::U8),
        DecodingResult::U16(v) => (v.into_iter().map(f32::from).collect(), SampleType::U16),
        DecodingResult::U32(v) => (v.into_iter().map(|x| x as f32).collect(), SampleType::U32),
        DecodingResult::I8(v) => (v.into_iter().map(f32::from).collect(), SampleType::I8),
        DecodingResult::I16(v) => (v.into_iter().map(f32::from).collect(), SampleType::I16),
        DecodingResult::I32(v) => (v.into_iter().map(|x| x as f32).collect(), SampleType::I32),
        DecodingResult::F32(v) => (v, SampleType::F32),
        DecodingResult::F64(v) => (v.into_iter().map(|x| x as f32).collect(), SampleType::F64),
        _ => return Err(Error::unsupported(path, "unsupported pixel type")),
    };
    let (w, h) = (w as usize, h as usize);
    if flat.len() < w * h * samples {
        return Err(Error::format(path, "truncated pixel data"));
    }
    let bands = (0..samples)
        .map(|b| flat.iter().skip(b).step_by(samples).take(w * h).copied().collect())
        .collect();
    Ok((
        bands,
        TiffMeta {
            width: w,
            height: h,
            gsd,
            origin,
            nodata,
            sample_type,
        },
    ))
}

fn format_float(v: f32) -> String {
    // Display gives the shortest string that parses back to the same f32.
    format!("{v}")
}

fn read_ascii(path: &Path) -> Result<RasterRead> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut centre = false;
    let mut cellsize = None;
    let mut nodata = None;
    let mut values: Vec<f32> = Vec::new();

    let mut in_header = true;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if in_header {
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap_or_default();
            if key.parse::<f32>().is_err() {
                let val = parts
                    .next()
                    .ok_or_else(|| Error::format(path, format!("header key {key} has no value")))?;
                let num = |what: &str| -> Result<f64> {
                    val.parse::<f64>().map_err(|_| {
                        Error::format(path, format!("line {}: bad {what} {val:?}", lineno + 1))
                    })
                };
                match key.to_ascii_lowercase().as_str() {
                    "ncols" => ncols = Some(num("ncols")? as usize),
                    "nrows" => nrows = Some(num("nrows")? as usize),
                    "xllcorner" => xll = Some(num("xllcorner")?),
                    "yllcorner" => yll = Some(num("yllcorner")?),
                    "xllcenter" => {
                        xll = Some(num("xllcenter")?);
                        centre = true;
                    }
                    "yllcenter" => {
                        yll = Some(num("yllcenter")?);
                        centre = true;
                    }
                    "cellsize" => cellsize = Some(num("cellsize")?),
                    "nodata_value" => {
                        nodata = Some(val.parse::<f32>().map_err(|_| {
                            Error::format(path, format!("bad NODATA_value {val:?}"))
                        })?)
                    }
                    other => {
                        return Err(Error::format(path, format!("unknown header key {other:?}")))
                    }
                }
                continue;
            }
            in_header = false;
        }
        for tok in trimmed.split_whitespace() {
            let v = tok.parse::<f32>().map_err(|_| {
                Error::format(path, format!("line {}: non-numeric value {tok:?}", lineno + 1))
            })?;
            values.push(v);
        }
    }

    let ncols = ncols.ok_or_else(|| Error::format(path, "missing ncols"))?;
    let nrows = nrows.ok_or_else(|| Error::format(path, "missing nrows"))?;
    if values.len() != ncols * nrows {
        return Err(Error::format(
            path,
            format!("expected {} values, found {}", ncols * nrows, values.len()),
        ));
    }
    let gsd_defaulted = cellsize.is_none();
    let gsd = cellsize.unwrap_or(1.0);
    let origin = match (xll, yll) {
        (Some(x), Some(y)) => {
            let half = if centre { gsd / 2.0 } else { 0.0 };
            Some((x - half, y - half + nrows as f64 * gsd))
        }
        _ => None,
    };
    let grid = DemGrid::new(ncols, nrows, values, gsd)
        .map_err(|e| Error::format(path, e.to_string()))?
        .with_nodata(nodata)
        .with_origin(origin);
    Ok(RasterRead {
        grid,
        gsd_defaulted,
        sample_type: SampleType::Text,
    })
}

fn write_ascii(grid: &DemGrid, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let (x, top) = grid.origin().unwrap_or((0.0, grid.height() as f64 * grid.gsd()));
    let yll = top - grid.height() as f64 * grid.gsd();
    let io = |e| Error::io(path, e);
    writeln!(w, "ncols {}", grid.width()).map_err(io)?;
    writeln!(w, "nrows {}", grid.height()).map_err(io)?;
    writeln!(w, "xllcorner {x}").map_err(io)?;
    writeln!(w, "yllcorner {yll}").map_err(io)?;
    writeln!(w, "cellsize {}", grid.gsd()).map_err(io)?;
    if let Some(nd) = grid.nodata() {
        writeln!(w, "NODATA_value {}", format_float(nd)).map_err(io)?;
    }
    let mut line = String::new();
    for row in grid.values().chunks(grid.width()) {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format_float(*v));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}
