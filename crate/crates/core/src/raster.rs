//! Raster types, sRGB to CIELAB conversion and per-pixel feature assembly.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// D65 reference white in XYZ.
const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
];

fn linear_table() -> &'static [f64; 256] {
    static TABLE: OnceLock<[f64; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; 256];
        for (i, v) in t.iter_mut().enumerate() {
            let c = i as f64 / 255.0;
            *v = if c > 0.04045 {
                ((c + 0.055) / 1.055).powf(2.4)
            } else {
                c / 12.92
            };
        }
        t
    })
}

fn lab_f(t: f64) -> f64 {
    if t > 0.008856 {
        t.cbrt()
    } else {
        7.787 * t + 16.0 / 116.0
    }
}

/// Converts an 8-bit sRGB triple to CIELAB under the D65 white point.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let table = linear_table();
    let lin = [
        table[rgb[0] as usize],
        table[rgb[1] as usize],
        table[rgb[2] as usize],
    ];
    let mut xyz = [0.0; 3];
    for (row, out) in SRGB_TO_XYZ.iter().zip(xyz.iter_mut()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    let l = if xyz[1] > 0.008856 {
        116.0 * fy - 16.0
    } else {
        903.3 * xyz[1]
    };
    [l.clamp(0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// An RGB image together with its CIELAB conversion.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
    lab: Vec<[f64; 3]>,
}

impl Image {
    /// Builds an image from interleaved RGB bytes in raster order.
    pub fn from_rgb(width: usize, height: usize, rgb: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        if rgb.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} bytes", width * height * 3),
                found: format!("{} bytes", rgb.len()),
            });
        }
        let lab = rgb
            .chunks_exact(3)
            .map(|c| rgb_to_lab([c[0], c[1], c[2]]))
            .collect();
        Ok(Image {
            width,
            height,
            rgb,
            lab,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut rgb = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                rgb.extend_from_slice(&f(x, y));
            }
        }
        Self::from_rgb(width, height, rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    pub fn lab(&self) -> &[[f64; 3]] {
        &self.lab
    }

    pub fn rgb_at(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }
}

/// Optional per-pixel deep features, stored channel-major (`D` planes of `H*W`).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    width: usize,
    height: usize,
    depth: usize,
    data: Vec<f32>,
}

impl FeatureStack {
    pub fn new(width: usize, height: usize, depth: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * depth {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", width * height * depth),
                found: format!("{} values", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite feature at index {i}")));
        }
        Ok(FeatureStack {
            width,
            height,
            depth,
            data,
        })
    }

    /// A stack with no channels.
    pub fn empty(width: usize, height: usize) -> Self {
        FeatureStack {
            width,
            height,
            depth: 0,
            data: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Parameters of the constrained clustering loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterConfig {
    /// Requested number of superpixels.
    pub k: usize,
    /// Weight of the Lab color channels.
    pub lambda_c: f64,
    /// Weight of the normalized spatial channels.
    pub lambda_s: f64,
    pub iterations: usize,
    /// Candidate search radius in units of the expected superpixel side.
    pub candidate_radius_factor: f64,
    pub rng_seed: u64,
    /// Fragments smaller than this are merged during connectivity repair.
    /// `None` selects a quarter of the expected superpixel area.
    pub min_fragment: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 400,
            lambda_c: 0.26,
            lambda_s: 7.5,
            iterations: 10,
            candidate_radius_factor: 3.0,
            rng_seed: 0,
            min_fragment: None,
        }
    }
}

impl ClusterConfig {
    pub fn with_k(k: usize) -> Self {
        ClusterConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.lambda_c > 0.0 && self.lambda_c.is_finite()) {
            return Err(Error::InvalidConfig("lambda_c must be positive".into()));
        }
        if !(self.lambda_s > 0.0 && self.lambda_s.is_finite()) {
            return Err(Error::InvalidConfig("lambda_s must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.candidate_radius_factor > 0.0) {
            return Err(Error::InvalidConfig("candidate radius factor must be positive".into()));
        }
        Ok(())
    }

    /// Expected superpixel side length `sqrt(|I| / K)`.
    pub fn superpixel_side(&self, pixels: usize) -> f64 {
        (pixels as f64 / self.k as f64).sqrt()
    }

    pub fn min_fragment_for(&self, pixels: usize) -> usize {
        self.min_fragment.unwrap_or_else(|| (pixels / self.k) / 4)
    }
}

/// Assembled per-pixel feature vectors, pixel-major.
///
/// Layout of each vector: `[λc·L, λc·a, λc·b, λs·x/σ, λs·y/σ, deep...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelFeatures {
    width: usize,
    height: usize,
    dim: usize,
    data: Vec<f64>,
}

pub const COLOR_CHANNELS: std::ops::Range<usize> = 0..3;
pub const SPATIAL_CHANNELS: std::ops::Range<usize> = 3..5;

impl PixelFeatures {
    /// Wraps pixel-major feature vectors of length `dim` each.
    pub fn from_raw(width: usize, height: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * dim || dim < 5 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values of dimension >= 5", width * height * dim),
                found: format!("{} values", data.len()),
            });
        }
        Ok(PixelFeatures {
            width,
            height,
            dim,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel(&self, p: usize) -> &[f64] {
        &self.data[p * self.dim..(p + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn color(&self, p: usize) -> &[f64] {
        &self.pixel(p)[COLOR_CHANNELS]
    }

    pub fn spatial(&self, p: usize) -> &[f64] {
        &self.pixel(p)[SPATIAL_CHANNELS]
    }

    pub fn deep(&self, p: usize) -> &[f64] {
        &self.pixel(p)[5..]
    }
}

/// Assembles the weighted clustering features for every pixel.
pub fn assemble_features(img: &Image, deep: &FeatureStack, cfg: &ClusterConfig) -> Result<PixelFeatures> {
    if deep.depth() > 0 && (deep.width() != img.width() || deep.height() != img.height()) {
        return Err(Error::dims(img.dims(), (deep.width(), deep.height())));
    }
    cfg.validate()?;
    let (w, h) = img.dims();
    let n = w * h;
    let sigma = cfg.superpixel_side(n);
    let dim = 5 + deep.depth();
    let mut data = vec![0.0; n * dim];
    for (p, v) in data.chunks_exact_mut(dim).enumerate() {
        let lab = img.lab()[p];
        v[0] = cfg.lambda_c * lab[0];
        v[1] = cfg.lambda_c * lab[1];
        v[2] = cfg.lambda_c * lab[2];
        v[3] = cfg.lambda_s * ((p % w) as f64 / sigma);
        v[4] = cfg.lambda_s * ((p / w) as f64 / sigma);
    }
    for c in 0..deep.depth() {
        for (p, &val) in deep.channel(c).iter().enumerate() {
            data[p * dim + 5 + c] = val as f64;
        }
    }
    Ok(PixelFeatures {
        width: w,
        height: h,
        dim,
        data,
    })
}
