//! Image containers and ingestion.
//!
//! A [`BScan`] is one row-major depth image (`height` rows of `width`
//! A-scans). Intensities are stored as `f64` so that 8-bit inputs are kept
//! exactly while downstream stages work on real values. A [`Cube`] is an
//! ordered stack of B-scans together with the physical voxel size.

use std::fs;
use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, ImageReader, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};

/// Default Cirrus-style cube geometry: width, depth and number of B-scans.
pub const CIRRUS_WIDTH: usize = 512;
pub const CIRRUS_HEIGHT: usize = 1024;
pub const CIRRUS_BSCANS: usize = 128;

/// Physical extent of the default cube in millimetres (x, y, z).
pub const CIRRUS_EXTENT_MM: (f64, f64, f64) = (6.0, 6.0, 2.0);

/// Voxel size of the default cube: x along the A-scans of one B-scan, y across
/// B-scans, z along depth.
pub fn cirrus_voxel_dims_mm() -> (f64, f64, f64) {
    (
        CIRRUS_EXTENT_MM.0 / CIRRUS_WIDTH as f64,
        CIRRUS_EXTENT_MM.1 / CIRRUS_BSCANS as f64,
        CIRRUS_EXTENT_MM.2 / CIRRUS_HEIGHT as f64,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl BScan {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(
                format!("{} samples ({width}x{height})", width * height),
                format!("{} samples", data.len()),
            ));
        }
        if let Some(i) = data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 255.0)
        {
            return Err(Error::param(format!(
                "intensity {} at index {i} outside [0, 255]",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a B-scan without range checks. Callers guarantee the values
    /// are produced by convex combinations or order statistics of valid data.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Value at a possibly out-of-range coordinate, clamped to the border.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Rounds every sample to the nearest 8-bit level.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    /// Same image with every sample rounded to an integer level.
    pub fn quantized(&self) -> BScan {
        BScan::from_raw(
            self.width,
            self.height,
            self.to_u8().into_iter().map(f64::from).collect(),
        )
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|v| v.fract() == 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<BScan> {
        BScan::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width as u32, self.height as u32, self.to_u8())
            .expect("buffer length matches dimensions")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_gray_image()
            .save(path)
            .map_err(|e| image_error(path, e))
    }
}

/// Binary segmentation with one flag per pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::dims(
                format!("{} flags ({width}x{height})", width * height),
                format!("{} flags", bits.len()),
            ));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_dims(&self, other: &Mask) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::dims(
                format!("{}x{}", self.width, self.height),
                format!("{}x{}", other.width, other.height),
            ))
        }
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(
            self.width as u32,
            self.height as u32,
            self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
        .expect("buffer length matches dimensions")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_gray_image()
            .save(path)
            .map_err(|e| image_error(path, e))
    }

    /// Loads a mask image; any nonzero sample is foreground.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let scan = load_bscan(path)?;
        let bits = scan.data().iter().map(|&v| v > 0.0).collect();
        Mask::new(scan.width(), scan.height(), bits)
    }
}

/// Ordered stack of equally sized B-scans.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    bscans: Vec<BScan>,
    voxel_dims_mm: (f64, f64, f64),
}

impl Cube {
    pub fn new(bscans: Vec<BScan>, voxel_dims_mm: (f64, f64, f64)) -> Result<Self> {
        if let Some(first) = bscans.first() {
            for (i, b) in bscans.iter().enumerate() {
                if b.width() != first.width() || b.height() != first.height() {
                    return Err(Error::dims(
                        format!("{}x{}", first.width(), first.height()),
                        format!("{}x{} at B-scan {i}", b.width(), b.height()),
                    ));
                }
            }
        }
        Ok(Self {
            bscans,
            voxel_dims_mm,
        })
    }

    pub fn bscans(&self) -> &[BScan] {
        &self.bscans
    }

    pub fn voxel_dims_mm(&self) -> (f64, f64, f64) {
        self.voxel_dims_mm
    }

    pub fn len(&self) -> usize {
        self.bscans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bscans.is_empty()
    }

    pub fn width(&self) -> usize {
        self.bscans.first().map_or(0, BScan::width)
    }

    pub fn height(&self) -> usize {
        self.bscans.first().map_or(0, BScan::height)
    }
}

/// Byte layouts accepted for raw cube files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CubeLayout {
    /// B-scan after B-scan, each row-major with `height` depth rows, one
    /// unsigned byte per voxel.
    #[default]
    BscanMajorU8,
}

/// Declared geometry of a raw cube file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeDims {
    pub width: usize,
    pub height: usize,
    pub bscans: usize,
}

impl Default for CubeDims {
    fn default() -> Self {
        Self {
            width: CIRRUS_WIDTH,
            height: CIRRUS_HEIGHT,
            bscans: CIRRUS_BSCANS,
        }
    }
}

impl CubeDims {
    pub fn byte_len(&self) -> usize {
        self.width * self.height * self.bscans
    }
}

pub fn load_cube(path: impl AsRef<Path>, dims: CubeDims, layout: CubeLayout) -> Result<Cube> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    cube_from_bytes(&bytes, dims, layout)
}

pub fn cube_from_bytes(bytes: &[u8], dims: CubeDims, layout: CubeLayout) -> Result<Cube> {
    let CubeLayout::BscanMajorU8 = layout;
    if bytes.len() != dims.byte_len() {
        return Err(Error::dims(
            format!(
                "{} bytes ({}x{}x{})",
                dims.byte_len(),
                dims.width,
                dims.height,
                dims.bscans
            ),
            format!("{} bytes", bytes.len()),
        ));
    }
    let slice_len = dims.width * dims.height;
    let bscans = if slice_len == 0 {
        Vec::new()
    } else {
        bytes
            .chunks_exact(slice_len)
            .map(|chunk| BScan::from_u8(dims.width, dims.height, chunk))
            .collect::<Result<Vec<_>>>()?
    };
    // The scanned extent is fixed; finer sampling means smaller voxels.
    let voxel_dims = (
        CIRRUS_EXTENT_MM.0 / dims.width.max(1) as f64,
        CIRRUS_EXTENT_MM.1 / dims.bscans.max(1) as f64,
        CIRRUS_EXTENT_MM.2 / dims.height.max(1) as f64,
    );
    Cube::new(bscans, voxel_dims)
}

pub fn cube_to_bytes(cube: &Cube, layout: CubeLayout) -> Vec<u8> {
    let CubeLayout::BscanMajorU8 = layout;
    cube.bscans().iter().flat_map(|b| b.to_u8()).collect()
}

pub fn save_cube(cube: &Cube, path: impl AsRef<Path>, layout: CubeLayout) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, cube_to_bytes(cube, layout)).map_err(|e| Error::io(path, e))
}

/// Decodes an 8-bit single-channel PGM or PNG file.
pub fn load_bscan(path: impl AsRef<Path>) -> Result<BScan> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| image_error(path, e))?;
    match img.color() {
        ColorType::L8 => {}
        other => {
            return Err(Error::Format(format!(
                "{}: expected 8-bit grayscale, found {other:?}",
                path.display()
            )))
        }
    }
    let DynamicImage::ImageLuma8(gray) = img else {
        unreachable!("color type checked above")
    };
    let (w, h) = gray.dimensions();
    BScan::from_u8(w as usize, h as usize, gray.as_raw())
}

/// Grayscale image with the outline of `mask` drawn in red.
pub fn overlay(img: &BScan, mask: &Mask) -> Result<RgbImage> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::dims(
            format!("{}x{}", img.width(), img.height()),
            format!("{}x{}", mask.width(), mask.height()),
        ));
    }
    let (w, h) = (img.width(), img.height());
    let gray = img.to_gray_image();
    let mut out = RgbImage::new(w as u32, h as u32);
    for row in 0..h {
        for col in 0..w {
            let Luma([v]) = *gray.get_pixel(col as u32, row as u32);
            let edge = mask.get(row, col)
                && [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .any(|&(dr, dc)| {
                        let r = row as isize + dr;
                        let c = col as isize + dc;
                        r < 0
                            || c < 0
                            || r >= h as isize
                            || c >= w as isize
                            || !mask.get(r as usize, c as usize)
                    });
            let px = if edge { Rgb([255, 0, 0]) } else { Rgb([v, v, v]) };
            out.put_pixel(col as u32, row as u32, px);
        }
    }
    Ok(out)
}

pub fn save_overlay(img: &BScan, mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    overlay(img, mask)?
        .save(path)
        .map_err(|e| image_error(path, e))
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        image::ImageError::Unsupported(u) => Error::Format(format!("{}: {u}", path.display())),
        other => Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, other.to_string()),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_intensity() {
        assert!(BScan::new(1, 1, vec![256.0]).is_err());
        assert!(BScan::new(1, 1, vec![f64::NAN]).is_err());
        assert!(BScan::new(2, 1, vec![1.0]).is_err());
    }

    #[test]
    fn default_cube_is_67_mebibytes() {
        assert_eq!(CubeDims::default().byte_len(), 67_108_864);
    }

    #[test]
    fn short_cube_file_reports_both_sizes() {
        let err = cube_from_bytes(&[0u8; 100], CubeDims::default(), CubeLayout::BscanMajorU8)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("67108864"), "{msg}");
        assert!(msg.contains("100 bytes"), "{msg}");
    }

    #[test]
    fn zero_cube_has_zero_intensities() {
        let dims = CubeDims {
            width: 4,
            height: 3,
            bscans: 2,
        };
        let cube = cube_from_bytes(&vec![0u8; dims.byte_len()], dims, CubeLayout::BscanMajorU8)
            .unwrap();
        assert_eq!(cube.len(), 2);
        assert!(cube
            .bscans()
            .iter()
            .all(|b| b.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn full_size_cube_splits_into_128_bscans() {
        let dims = CubeDims::default();
        let cube = cube_from_bytes(&vec![7u8; dims.byte_len()], dims, CubeLayout::BscanMajorU8)
            .unwrap();
        assert_eq!(cube.len(), 128);
        assert_eq!((cube.width(), cube.height()), (512, 1024));
        assert_eq!(cube.voxel_dims_mm(), (6.0 / 512.0, 6.0 / 128.0, 2.0 / 1024.0));
    }

    #[test]
    fn bscan_order_preserved() {
        let dims = CubeDims {
            width: 2,
            height: 2,
            bscans: 3,
        };
        let bytes: Vec<u8> = (0..12).collect();
        let cube = cube_from_bytes(&bytes, dims, CubeLayout::BscanMajorU8).unwrap();
        assert_eq!(cube.bscans()[1].data(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(cube_to_bytes(&cube, CubeLayout::BscanMajorU8), bytes);
    }

    #[test]
    fn graymap_and_png_decode() {
        let dir = tempfile::tempdir().unwrap();
        let pgm = dir.path().join("a.pgm");
        fs::write(&pgm, b"P5\n3 3\n255\n\x07\x07\x07\x07\x07\x07\x07\x07\x07").unwrap();
        let b = load_bscan(&pgm).unwrap();
        assert_eq!((b.width(), b.height()), (3, 3));
        assert!(b.data().iter().all(|&v| v == 7.0));

        let big = BScan::filled(512, 1024, 3.0).unwrap();
        let png = dir.path().join("big.png");
        big.save(&png).unwrap();
        let back = load_bscan(&png).unwrap();
        assert_eq!((back.width(), back.height()), (512, 1024));
    }

    #[test]
    fn rgb_image_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        RgbImage::new(4, 4).save(&path).unwrap();
        assert!(matches!(load_bscan(&path), Err(Error::Format(_))));
    }

    #[test]
    fn sixteen_bit_image_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wide.png");
        image::ImageBuffer::<Luma<u16>, Vec<u16>>::new(4, 4)
            .save(&path)
            .unwrap();
        assert!(matches!(load_bscan(&path), Err(Error::Format(_))));
    }

    #[test]
    fn corrupt_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.png");
        fs::write(&path, b"\x89PNG\r\n\x1a\nnot really").unwrap();
        assert!(matches!(load_bscan(&path), Err(Error::Io { .. })));
        assert!(matches!(
            load_bscan(dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn mask_round_trips_through_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mut m = Mask::empty(5, 4);
        m.set(1, 2, true);
        m.set(3, 4, true);
        m.save(&path).unwrap();
        assert_eq!(Mask::load(&path).unwrap(), m);
    }
}
