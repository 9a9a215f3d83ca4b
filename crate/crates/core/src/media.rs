//! In-memory images and frame access.
//!
//! Frames and reference images are plain RGB8 buffers. Files on disk use
//! binary PPM (P6), which keeps fixtures diffable and decodable with no
//! image stack. A video handle's `path` names a directory of numbered
//! frames (`frame_00000.ppm`, `frame_00001.ppm`, ...).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plan::VideoHandle;

/// An owned RGB8 image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    #[serde(with = "base64_bytes")]
    pub data: Vec<u8>,
}

mod base64_bytes {
    //! Pixel payloads serialize as base64 so tuple serializations stay
    //! compact and deterministic.
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid ppm in {path}: {reason}")]
    InvalidPpm { path: PathBuf, reason: String },
    #[error("frame index {index} out of range for {path} ({frames} frames)")]
    FrameOutOfRange {
        path: String,
        index: u32,
        frames: u32,
    },
}

impl Image {
    /// Solid-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Image {
        let mut data = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Image {
            width,
            height,
            data,
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn read_ppm(path: &Path) -> Result<Image, MediaError> {
        let bytes = fs::read(path).map_err(|source| MediaError::Io {
            path: path.to_owned(),
            source,
        })?;
        parse_ppm(&bytes).map_err(|reason| MediaError::InvalidPpm {
            path: path.to_owned(),
            reason,
        })
    }

    pub fn write_ppm(&self, path: &Path) -> Result<(), MediaError> {
        let io_err = |source| MediaError::Io {
            path: path.to_owned(),
            source,
        };
        let mut f = fs::File::create(path).map_err(io_err)?;
        write!(f, "P6\n{} {}\n255\n", self.width, self.height).map_err(io_err)?;
        f.write_all(&self.data).map_err(io_err)?;
        Ok(())
    }
}

fn parse_ppm(bytes: &[u8]) -> Result<Image, String> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String, String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(bytes)? != "P6" {
        return Err("not a P6 ppm".into());
    }
    let width: u32 = token(bytes)?.parse().map_err(|_| "bad width".to_owned())?;
    let height: u32 = token(bytes)?.parse().map_err(|_| "bad height".to_owned())?;
    let maxval: u32 = token(bytes)?.parse().map_err(|_| "bad maxval".to_owned())?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    pos += 1; // single whitespace byte after maxval
    let need = (width * height * 3) as usize;
    if bytes.len() < pos + need {
        return Err(format!(
            "payload too short: need {need} bytes, have {}",
            bytes.len().saturating_sub(pos)
        ));
    }
    Ok(Image {
        width,
        height,
        data: bytes[pos..pos + need].to_vec(),
    })
}

/// Resolves (video handle, frame index) to pixel data.
pub trait FrameSource: Send + Sync {
    fn frame(&self, video: &VideoHandle, index: u32) -> Result<Image, MediaError>;
}

/// Deterministic procedural frames, for mock pipelines and tests.
///
/// Pixel values are a cheap hash of (video path, frame index, x, y), so two
/// runs over the same handle are byte-identical and distinct videos differ.
#[derive(Debug, Default, Clone)]
pub struct SyntheticFrames;

impl FrameSource for SyntheticFrames {
    fn frame(&self, video: &VideoHandle, index: u32) -> Result<Image, MediaError> {
        if index >= video.frames {
            return Err(MediaError::FrameOutOfRange {
                path: video.path.clone(),
                index,
                frames: video.frames,
            });
        }
        let seed = video
            .path
            .bytes()
            .fold(0u64, |acc, b| acc.wrapping_mul(131).wrapping_add(u64::from(b)));
        let mut img = Image::filled(video.width, video.height, [0, 0, 0]);
        for y in 0..video.height {
            for x in 0..video.width {
                let mut h = seed
                    ^ (u64::from(index) << 40)
                    ^ (u64::from(x) << 20)
                    ^ u64::from(y);
                h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15);
                h ^= h >> 29;
                img.set_pixel(x, y, [(h & 0xff) as u8, ((h >> 8) & 0xff) as u8, ((h >> 16) & 0xff) as u8]);
            }
        }
        Ok(img)
    }
}

/// Frames stored as `frame_%05d.ppm` files under the handle's path.
#[derive(Debug, Default, Clone)]
pub struct PpmDirFrames;

impl PpmDirFrames {
    pub fn frame_path(video: &VideoHandle, index: u32) -> PathBuf {
        Path::new(&video.path).join(format!("frame_{index:05}.ppm"))
    }
}

impl FrameSource for PpmDirFrames {
    fn frame(&self, video: &VideoHandle, index: u32) -> Result<Image, MediaError> {
        if index >= video.frames {
            return Err(MediaError::FrameOutOfRange {
                path: video.path.clone(),
                index,
                frames: video.frames,
            });
        }
        Image::read_ppm(&Self::frame_path(video, index))
    }
}
