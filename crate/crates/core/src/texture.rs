//! Gray-level quantization and co-occurrence matrices.
//!
//! A GLCM counts ordered pairs of quantized gray levels `(a, b)` where the
//! pixel holding `b` sits at a fixed offset from the pixel holding `a`. Rows
//! grow downward and columns grow rightward, so `Direction::NorthEast` pairs
//! `(r, c)` with `(r - d, c + d)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Default number of quantization levels.
pub const DEFAULT_LEVELS: usize = 51;

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(invalid(format!(
                "pixel buffer has {} values, expected {}x{} = {}",
                pixels.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    /// Mean-pools the image onto a `grid_w` x `grid_h` grid and scales to [0, 1].
    ///
    /// Cell `(i, j)` averages source rows `[i*H/grid_h, (i+1)*H/grid_h)` (at
    /// least one row), and likewise for columns.
    pub fn mean_pool(&self, grid_w: usize, grid_h: usize) -> Result<Vec<f64>> {
        if grid_w == 0 || grid_h == 0 {
            return Err(invalid("pooling grid must be positive"));
        }
        let bounds = |i: usize, cells: usize, len: usize| {
            let lo = (i * len / cells).min(len - 1);
            let hi = ((i + 1) * len / cells).max(lo + 1).min(len);
            (lo, hi)
        };
        let mut out = Vec::with_capacity(grid_w * grid_h);
        for gi in 0..grid_h {
            let (r0, r1) = bounds(gi, grid_h, self.height);
            for gj in 0..grid_w {
                let (c0, c1) = bounds(gj, grid_w, self.width);
                let mut sum = 0u64;
                for r in r0..r1 {
                    let row = &self.pixels[r * self.width..(r + 1) * self.width];
                    sum += row[c0..c1].iter().map(|&v| v as u64).sum::<u64>();
                }
                let n = ((r1 - r0) * (c1 - c0)) as f64;
                out.push(sum as f64 / n / 255.0);
            }
        }
        Ok(out)
    }
}

/// Image whose values are quantization bins in `1..=levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    levels: usize,
    values: Vec<u16>,
}

impl QuantizedImage {
    pub fn new(width: usize, height: usize, levels: usize, values: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        if !(1..=256).contains(&levels) {
            return Err(invalid(format!("levels must be in [1, 256], got {levels}")));
        }
        if values.len() != width * height {
            return Err(invalid(format!(
                "value buffer has {} entries, expected {}",
                values.len(),
                width * height
            )));
        }
        if let Some(bad) = values.iter().find(|&&v| v == 0 || v as usize > levels) {
            return Err(invalid(format!("bin {bad} outside 1..={levels}")));
        }
        Ok(Self {
            width,
            height,
            levels,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.values[row * self.width + col]
    }
}

/// Uniform quantization of 256 gray values onto `levels` 1-based bins:
/// `bin = floor(g * levels / 256) + 1`.
pub fn quantize(image: &GrayImage, levels: usize) -> Result<QuantizedImage> {
    if !(1..=256).contains(&levels) {
        return Err(invalid(format!("levels must be in [1, 256], got {levels}")));
    }
    let lut: Vec<u16> = (0..256usize)
        .map(|g| (g * levels / 256 + 1) as u16)
        .collect();
    let values = image.pixels.iter().map(|&g| lut[g as usize]).collect();
    Ok(QuantizedImage {
        width: image.width,
        height: image.height,
        levels,
        values,
    })
}

/// One of the eight compass directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    East,
    West,
    South,
    North,
    NorthEast,
    SouthEast,
    NorthWest,
    SouthWest,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::East,
        Direction::West,
        Direction::South,
        Direction::North,
        Direction::NorthEast,
        Direction::SouthEast,
        Direction::NorthWest,
        Direction::SouthWest,
    ];

    /// Unit `(row, col)` step.
    pub fn unit_step(self) -> (isize, isize) {
        match self {
            Direction::East => (0, 1),
            Direction::West => (0, -1),
            Direction::South => (1, 0),
            Direction::North => (-1, 0),
            Direction::NorthEast => (-1, 1),
            Direction::SouthEast => (1, 1),
            Direction::NorthWest => (-1, -1),
            Direction::SouthWest => (1, -1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::East => Direction::West,
            Direction::West => Direction::East,
            Direction::South => Direction::North,
            Direction::North => Direction::South,
            Direction::NorthEast => Direction::SouthWest,
            Direction::SouthWest => Direction::NorthEast,
            Direction::NorthWest => Direction::SouthEast,
            Direction::SouthEast => Direction::NorthWest,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Direction::East => "e",
            Direction::West => "w",
            Direction::South => "s",
            Direction::North => "n",
            Direction::NorthEast => "ne",
            Direction::SouthEast => "se",
            Direction::NorthWest => "nw",
            Direction::SouthWest => "sw",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = match s.to_ascii_lowercase().as_str() {
            "e" | "east" | "→" => Direction::East,
            "w" | "west" | "←" => Direction::West,
            "s" | "south" | "↓" => Direction::South,
            "n" | "north" | "↑" => Direction::North,
            "ne" | "northeast" | "↗" => Direction::NorthEast,
            "se" | "southeast" | "↘" => Direction::SouthEast,
            "nw" | "northwest" | "↖" => Direction::NorthWest,
            "sw" | "southwest" | "↙" => Direction::SouthWest,
            other => return Err(invalid(format!("unknown direction '{other}'"))),
        };
        Ok(d)
    }
}

/// Signed `(dr, dc)` pixel offset for a direction and distance.
pub fn direction_offset(direction: Direction, distance: usize) -> (isize, isize) {
    let (ur, uc) = direction.unit_step();
    let d = distance as isize;
    (ur * d, uc * d)
}

/// Direction plus pixel distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpatialRelationship {
    pub direction: Direction,
    pub distance: usize,
}

impl SpatialRelationship {
    pub fn new(direction: Direction, distance: usize) -> Result<Self> {
        if distance == 0 {
            return Err(invalid("distance must be at least 1"));
        }
        Ok(Self {
            direction,
            distance,
        })
    }

    pub fn offset(&self) -> (isize, isize) {
        direction_offset(self.direction, self.distance)
    }

    pub fn opposite(&self) -> Self {
        Self {
            direction: self.direction.opposite(),
            distance: self.distance,
        }
    }
}

impl Default for SpatialRelationship {
    /// `(NorthEast, 3)`.
    fn default() -> Self {
        Self {
            direction: Direction::NorthEast,
            distance: 3,
        }
    }
}

impl fmt::Display for SpatialRelationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.direction, self.distance)
    }
}

/// Ordered co-occurrence counts, `levels x levels`, row-major. Index `(a, b)`
/// is 0-based, i.e. bin `a + 1` followed by bin `b + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glcm {
    levels: usize,
    relationship: SpatialRelationship,
    counts: Vec<u64>,
    total: u64,
}

impl Glcm {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn relationship(&self) -> SpatialRelationship {
        self.relationship
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Count for 0-based bin indices.
    pub fn count(&self, a: usize, b: usize) -> u64 {
        self.counts[a * self.levels + b]
    }

    pub fn transpose(&self) -> Glcm {
        let n = self.levels;
        let mut counts = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                counts[b * n + a] = self.counts[a * n + b];
            }
        }
        Glcm {
            levels: n,
            relationship: self.relationship.opposite(),
            counts,
            total: self.total,
        }
    }

    /// Frequencies `counts / total`.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        if self.total == 0 {
            return Err(Error::DegenerateInput("GLCM has no pixel pairs".into()));
        }
        let t = self.total as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / t).collect())
    }

    /// Row-major flattening, either raw counts or frequencies.
    pub fn to_feature_vector(&self, raw_counts: bool) -> Result<Vec<f64>> {
        if raw_counts {
            Ok(self.counts.iter().map(|&c| c as f64).collect())
        } else {
            self.normalized()
        }
    }
}

pub fn compute_glcm(image: &QuantizedImage, rel: SpatialRelationship) -> Result<Glcm> {
    let (w, h) = (image.width, image.height);
    if rel.distance == 0 {
        return Err(invalid("distance must be at least 1"));
    }
    if rel.distance >= w.min(h) {
        return Err(invalid(format!(
            "distance {} too large for a {}x{} image",
            rel.distance, w, h
        )));
    }
    let (dr, dc) = rel.offset();
    let n = image.levels;
    let mut counts = vec![0u64; n * n];

    // Rows/cols of the anchor pixel whose partner stays in bounds.
    let r0 = (-dr).max(0) as usize;
    let r1 = h - dr.max(0) as usize;
    let c0 = (-dc).max(0) as usize;
    let c1 = w - dc.max(0) as usize;
    for r in r0..r1 {
        let pr = (r as isize + dr) as usize;
        let anchor = &image.values[r * w + c0..r * w + c1];
        let pc0 = (c0 as isize + dc) as usize;
        let partner = &image.values[pr * w + pc0..pr * w + pc0 + (c1 - c0)];
        for (&a, &b) in anchor.iter().zip(partner) {
            counts[(a as usize - 1) * n + (b as usize - 1)] += 1;
        }
    }
    let total = ((r1 - r0) * (c1 - c0)) as u64;
    Ok(Glcm {
        levels: n,
        relationship: rel,
        counts,
        total,
    })
}

/// Quantize, count and flatten in one step.
pub fn glcm_features(
    image: &GrayImage,
    levels: usize,
    rel: SpatialRelationship,
    raw_counts: bool,
) -> Result<Vec<f64>> {
    let q = quantize(image, levels)?;
    compute_glcm(&q, rel)?.to_feature_vector(raw_counts)
}

/// Normalized GLCM frequencies for an arbitrary count matrix, used by callers
/// that hold counts without an image.
pub fn normalize_counts(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::DegenerateInput("GLCM has no pixel pairs".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}
