//! Image, seed and result (de)serialization.

use std::fs;
use std::path::Path;

use ffp_core::contour::Polyline;
use ffp_core::edge::ImageBuffer;
use ffp_core::fmm::{SeedSet, SeedSets};
use ffp_core::grid::{Field, Grid2D, Pixel, ScalarField};
use image::DynamicImage;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("corrupt input: {0}")]
    Corrupt(String),
    #[error("image has zero width or height")]
    ZeroDimensions,
    #[error("invalid seeds: {0}")]
    Seeds(String),
    #[error("bad magic: expected FFD1")]
    BadMagic,
    #[error("size mismatch: header says {expected} bytes of payload, found {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("label {0} does not fit an 8-bit indexed PNG")]
    LabelOverflow(u32),
    #[error(transparent)]
    Core(#[from] ffp_core::Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    load_image_bytes(&read_file(path)?)
}

/// Decodes PNG or PNM (P2/P3/P5/P6) into channels scaled to `[0, 1]`; alpha is dropped.
pub fn load_image_bytes(bytes: &[u8]) -> Result<ImageBuffer> {
    let format = image::guess_format(bytes).map_err(|_| IoError::UnsupportedFormat)?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Pnm) {
        return Err(IoError::UnsupportedFormat);
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| match e {
        image::ImageError::Unsupported(_) => IoError::UnsupportedFormat,
        other => IoError::Corrupt(other.to_string()),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(IoError::ZeroDimensions);
    }
    let grid = Grid2D::new(w, h)?;
    let channel = |values: Vec<f64>| ScalarField::new(grid, values).map_err(IoError::from);
    let gray = matches!(
        img,
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_)
    );
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_)
    );
    let channels = match (gray, sixteen) {
        (true, false) => vec![channel(img.into_luma8().pixels().map(|p| p.0[0] as f64 / 255.0).collect())?],
        (true, true) => vec![channel(img.into_luma16().pixels().map(|p| p.0[0] as f64 / 65535.0).collect())?],
        (false, false) => {
            let rgb = img.into_rgb8();
            (0..3).map(|c| channel(rgb.pixels().map(|p| p.0[c] as f64 / 255.0).collect())).collect::<Result<_>>()?
        }
        (false, true) => {
            let rgb = img.into_rgb16();
            (0..3).map(|c| channel(rgb.pixels().map(|p| p.0[c] as f64 / 65535.0).collect())).collect::<Result<_>>()?
        }
    };
    Ok(ImageBuffer::new(channels)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSetJson {
    pub label: i64,
    pub points: Vec<[i64; 2]>,
}

/// Seed file schema: `{"sets":[{"label":1,"points":[[x,y],...]},...]}` with `x` the column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedsJson {
    pub sets: Vec<SeedSetJson>,
}

pub fn parse_seeds(bytes: &[u8], grid: Grid2D) -> Result<SeedSets> {
    let doc: SeedsJson = serde_json::from_slice(bytes).map_err(|e| IoError::Seeds(e.to_string()))?;
    seeds_from_json(&doc, grid)
}

pub fn seeds_from_json(doc: &SeedsJson, grid: Grid2D) -> Result<SeedSets> {
    let mut sets = Vec::with_capacity(doc.sets.len());
    for s in &doc.sets {
        let label = u32::try_from(s.label)
            .ok()
            .filter(|l| *l >= 1)
            .ok_or_else(|| IoError::Seeds(format!("label must be an integer >= 1, got {}", s.label)))?;
        let points = s
            .points
            .iter()
            .enumerate()
            .map(|(k, &[x, y])| {
                grid.checked_pixel(x, y).map_err(|_| {
                    IoError::Seeds(format!(
                        "point {k} of set {label} at ({x}, {y}) is outside the {}x{} grid",
                        grid.width(),
                        grid.height()
                    ))
                })
            })
            .collect::<Result<Vec<Pixel>>>()?;
        sets.push(SeedSet { label, points });
    }
    SeedSets::new(grid, sets).map_err(|e| IoError::Seeds(e.to_string()))
}

pub fn seeds_to_json(seeds: &SeedSets) -> SeedsJson {
    SeedsJson {
        sets: seeds
            .sets()
            .iter()
            .map(|s| SeedSetJson {
                label: s.label as i64,
                points: s.points.iter().map(|p| [p.x as i64, p.y as i64]).collect(),
            })
            .collect(),
    }
}

const FFD_MAGIC: &[u8; 4] = b"FFD1";

/// A distance map as stored on disk, independent of grid size constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDistanceMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

/// `FFD1`, width and height as u32 LE, then row-major f32 LE values.
pub fn encode_ffd1(raw: &RawDistanceMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * raw.values.len());
    out.extend_from_slice(FFD_MAGIC);
    out.extend_from_slice(&(raw.width as u32).to_le_bytes());
    out.extend_from_slice(&(raw.height as u32).to_le_bytes());
    for v in &raw.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_ffd1(bytes: &[u8]) -> Result<RawDistanceMap> {
    if bytes.len() < 4 || &bytes[..4] != FFD_MAGIC {
        return Err(IoError::BadMagic);
    }
    if bytes.len() < 12 {
        return Err(IoError::SizeMismatch { expected: 8, got: bytes.len() - 4 });
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().expect("4 bytes")) as usize;
    let (width, height) = (word(4), word(8));
    let expected = 4 * width * height;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(IoError::SizeMismatch { expected, got: payload.len() });
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok(RawDistanceMap { width, height, values })
}

/// Values are narrowed to `f32`; `+∞` stays infinite.
pub fn encode_distance_map(u: &ScalarField) -> Vec<u8> {
    let grid = u.grid();
    encode_ffd1(&RawDistanceMap {
        width: grid.width(),
        height: grid.height(),
        values: u.values().iter().map(|v| *v as f32).collect(),
    })
}

pub fn decode_distance_map(bytes: &[u8]) -> Result<ScalarField> {
    let raw = decode_ffd1(bytes)?;
    let grid = Grid2D::new(raw.width, raw.height)?;
    Ok(Field::new(grid, raw.values.iter().map(|v| *v as f64).collect())?)
}

pub fn write_distance_map(u: &ScalarField, path: &Path) -> Result<()> {
    write_file(path, &encode_distance_map(u))
}

pub fn read_distance_map(path: &Path) -> Result<ScalarField> {
    decode_distance_map(&read_file(path)?)
}

/// Color of palette index `k`: black for 0, then a fixed cycle of distinct hues.
pub fn palette_color(k: u8) -> [u8; 3] {
    const COLORS: [[u8; 3]; 12] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [255, 225, 25],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
        [250, 190, 212],
        [0, 128, 128],
        [170, 110, 40],
    ];
    if k == 0 {
        [0, 0, 0]
    } else {
        COLORS[(k as usize - 1) % COLORS.len()]
    }
}

/// Label map as an 8-bit indexed PNG whose pixel values are the labels.
pub fn encode_label_png(labels: &Field<u32>) -> Result<Vec<u8>> {
    let grid = labels.grid();
    let data = labels
        .values()
        .iter()
        .map(|l| u8::try_from(*l).map_err(|_| IoError::LabelOverflow(*l)))
        .collect::<Result<Vec<u8>>>()?;
    let palette: Vec<u8> = (0..=255u8).flat_map(palette_color).collect();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, grid.width() as u32, grid.height() as u32);
        enc.set_color(png::ColorType::Indexed);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_palette(palette);
        let mut writer = enc.write_header().map_err(|e| IoError::Corrupt(e.to_string()))?;
        writer.write_image_data(&data).map_err(|e| IoError::Corrupt(e.to_string()))?;
    }
    Ok(out)
}

/// Reads back the palette indices of an indexed PNG.
pub fn decode_label_png(bytes: &[u8]) -> Result<Field<u32>> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| IoError::Corrupt(e.to_string()))?;
    let size = reader.output_buffer_size().ok_or_else(|| IoError::Corrupt("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| IoError::Corrupt(e.to_string()))?;
    if info.color_type != png::ColorType::Indexed || info.bit_depth != png::BitDepth::Eight {
        return Err(IoError::UnsupportedFormat);
    }
    let grid = Grid2D::new(info.width as usize, info.height as usize)?;
    Ok(Field::new(grid, buf[..grid.len()].iter().map(|v| *v as u32).collect())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourJson {
    pub label: Option<u32>,
    pub closed: bool,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContoursJson {
    pub width: usize,
    pub height: usize,
    pub contours: Vec<ContourJson>,
}

pub fn contours_json(grid: Grid2D, contours: &[Polyline]) -> ContoursJson {
    ContoursJson {
        width: grid.width(),
        height: grid.height(),
        contours: contours
            .iter()
            .map(|c| ContourJson { label: c.label, closed: c.closed, points: c.points.iter().map(|p| [p.x, p.y]).collect() })
            .collect(),
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}
