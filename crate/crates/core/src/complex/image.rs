//! NetPBM (PGM/PPM) images and the coded-diffraction image experiment.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gamp::StopReason;
use crate::numerics::{dot, norm2, Complex64, QuadratureRule};
use crate::rng::Rng;
use crate::spectral::{spectral_estimate_op, SpectralOptions};

use super::cdp::CdpOperator;
use super::gamp::{complex_gamp_run, phase_aligned_overlap, ComplexGampConfig, ComplexInstance, ComplexStart, MuSource, Sensing};
use super::spectral::{complex_prediction, complex_t_bar, COMPLEX_DELTA_U};

/// Interleaved image with samples in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub data: Vec<f64>,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err("unexpected end of NetPBM header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| format_err("non-ASCII NetPBM header"))
    }

    fn number(&mut self) -> Result<usize> {
        let t = self.token()?;
        t.parse().map_err(|_| format_err(format!("expected a number in NetPBM header, found {t:?}")))
    }
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if !(channels == 1 || channels == 3) || data.len() != width * height * channels || width * height == 0 {
            return Err(format_err("image dimensions do not match the sample count"));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Parses P2, P3, P5 or P6 data.
    pub fn from_netpbm(bytes: &[u8]) -> Result<Self> {
        let mut h = Header { bytes, pos: 0 };
        let magic = h.token()?.to_owned();
        let (channels, binary) = match magic.as_str() {
            "P2" => (1, false),
            "P3" => (3, false),
            "P5" => (1, true),
            "P6" => (3, true),
            m => return Err(format_err(format!("unsupported NetPBM type {m:?}"))),
        };
        let width = h.number()?;
        let height = h.number()?;
        let maxval = h.number()?;
        if maxval == 0 || maxval > 65535 {
            return Err(format_err(format!("invalid maxval {maxval}")));
        }
        let count = width * height * channels;
        let scale = 1.0 / maxval as f64;
        let mut data = Vec::with_capacity(count);
        if binary {
            // Exactly one whitespace byte separates the header from the raster.
            let start = h.pos + 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raster = bytes
                .get(start..start + need)
                .ok_or_else(|| format_err("NetPBM raster is truncated"))?;
            if wide {
                data.extend(raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale));
            } else {
                data.extend(raster.iter().map(|&v| v as f64 * scale));
            }
        } else {
            for _ in 0..count {
                data.push(h.number()? as f64 * scale);
            }
        }
        if data.iter().any(|&v| v > 1.0) {
            return Err(format_err("sample exceeds maxval"));
        }
        Self::new(width, height, channels, data)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path.as_ref())?.read_to_end(&mut bytes)?;
        Self::from_netpbm(&bytes)
    }

    /// Binary P5/P6 with maxval 255.
    pub fn to_netpbm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path.as_ref())?);
        w.write_all(&self.to_netpbm())?;
        w.flush()?;
        Ok(())
    }

    /// Row-major samples of one channel.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(self.channels).copied().collect()
    }

    pub fn set_channel(&mut self, c: usize, values: &[f64]) {
        for (slot, &v) in self.data.iter_mut().skip(c).step_by(self.channels).zip(values) {
            *slot = v;
        }
    }
}

#[derive(Clone, Debug)]
pub struct ImageExperimentConfig {
    pub delta: f64,
    /// Number of masks; `None` uses `ceil(delta)`.
    pub patterns: Option<usize>,
    /// Squared overlap used to scale `x^0`; `None` uses the Gaussian-sensing prediction.
    pub init_a2: Option<f64>,
    pub gamp: ComplexGampConfig,
    pub spectral: SpectralOptions,
    pub seed: u64,
}

impl ImageExperimentConfig {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self {
            delta,
            patterns: None,
            init_a2: None,
            gamp: ComplexGampConfig {
                mu_source: MuSource::QuadraticEstimate,
                ..Default::default()
            },
            spectral: SpectralOptions::default(),
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChannelResult {
    pub spectral_overlap: f64,
    /// `None` when the spectral start carries no information (`a^2 = 0`).
    pub gamp_overlap: Option<f64>,
    pub iterations: usize,
    pub stop: Option<StopReason>,
    pub a2: f64,
}

#[derive(Clone, Debug)]
pub struct ImageExperiment {
    pub channels: Vec<ChannelResult>,
    pub reconstruction: Image,
}

impl ImageExperiment {
    pub fn mean_spectral_overlap(&self) -> f64 {
        self.channels.iter().map(|c| c.spectral_overlap).sum::<f64>() / self.channels.len() as f64
    }

    /// Channels without a GAMP run contribute their spectral overlap.
    pub fn mean_gamp_overlap(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.gamp_overlap.unwrap_or(c.spectral_overlap))
            .sum::<f64>()
            / self.channels.len() as f64
    }
}

/// Preprocessing design point: the optimal map for `delta`, or for `1.1 delta_u`
/// below the weak-recovery threshold where the optimal map is undefined.
pub fn complex_design_delta(delta: f64) -> f64 {
    delta.max(1.1 * COMPLEX_DELTA_U)
}

/// Recovers each color channel separately from coded diffraction patterns.
/// Channels are normalized to `||x||^2 = d` before sensing.
pub fn image_experiment(image: &Image, config: &ImageExperimentConfig, rule: &QuadratureRule) -> Result<ImageExperiment> {
    let (d1, d2) = (image.height, image.width);
    let d = d1 * d2;
    let patterns = config.patterns.unwrap_or(config.delta.ceil() as usize);
    let preproc = complex_t_bar(complex_design_delta(config.delta))?;
    let root = Rng::new(config.seed);
    let mut reconstruction = image.clone();
    let mut channels = Vec::with_capacity(image.channels);
    for c in 0..image.channels {
        let mut rng = root.stream(c as u64);
        let pixels = image.channel(c);
        let energy: f64 = pixels.iter().map(|v| v * v).sum();
        if !(energy > 0.0) {
            return Err(format_err(format!("channel {c} is identically zero")));
        }
        let norm = (d as f64 / energy).sqrt();
        let x: Vec<Complex64> = pixels.iter().map(|&v| Complex64::new(v * norm, 0.0)).collect();
        let op = CdpOperator::new(d1, d2, patterns, config.delta, &mut rng)?;
        let instance = ComplexInstance::new(x, Sensing::Cdp(op))?;
        let delta = instance.realized_delta();
        let z = preproc.apply_all(&instance.y);
        let est = spectral_estimate_op(&instance.a, &z, Some(&instance.x), config.spectral, &mut rng)?;
        let spectral_overlap = phase_aligned_overlap(&est.direction, &instance.x)?;
        let prediction = complex_prediction(&preproc, delta, rule)?;
        let a2 = config.init_a2.unwrap_or(prediction.a2);
        let (estimate, gamp_overlap, iterations, stop) = if a2 > 0.0 && a2 < 1.0 {
            let start = ComplexStart {
                direction: &est.direction,
                z: &z,
                lambda_star: prediction.lambda_star,
                a2,
            };
            let tr = complex_gamp_run(&instance.a, &instance.y, Some(&instance.x), &start, &config.gamp, rule)?;
            let o = phase_aligned_overlap(&tr.estimate, &instance.x)?;
            let it = tr.iterations();
            (tr.estimate, Some(o), it, Some(tr.stop))
        } else {
            (est.direction.clone(), None, 0, None)
        };
        // Undo the global phase and scale for display.
        let ip = dot(&estimate, &instance.x);
        let phase = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        let scale = (d as f64 / norm2(&estimate)).sqrt() / norm;
        let values: Vec<f64> = estimate.iter().map(|v| ((v * phase).re * scale).clamp(0.0, 1.0)).collect();
        reconstruction.set_channel(c, &values);
        channels.push(ChannelResult {
            spectral_overlap,
            gamp_overlap,
            iterations,
            stop,
            a2,
        });
    }
    Ok(ImageExperiment { channels, reconstruction })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_and_binary_agree() {
        let ascii = b"P3\n# comment\n2 1\n255\n0 128 255 10 20 30\n";
        let img = Image::from_netpbm(ascii).unwrap();
        assert_eq!((img.width, img.height, img.channels), (2, 1, 3));
        let round = Image::from_netpbm(&img.to_netpbm()).unwrap();
        for (a, b) in img.data.iter().zip(&round.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sixteen_bit_gray() {
        let mut bytes = b"P5 1 2 65535\n".to_vec();
        bytes.extend([0xff, 0xff, 0x80, 0x00]);
        let img = Image::from_netpbm(&bytes).unwrap();
        assert_eq!(img.data, vec![1.0, 32768.0 / 65535.0]);
    }

    #[test]
    fn truncated_raster_is_an_error() {
        assert!(Image::from_netpbm(b"P6\n4 4\n255\n\x00\x01").is_err());
        assert!(Image::from_netpbm(b"P7\n1 1\n255\n").is_err());
    }
}
