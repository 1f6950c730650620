//! Binary PGM (P5) / PPM (P6) reader and writer.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::Image;
use crate::error::{Error, Result};

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Clamps to `[0, 1]`, quantizes to 8 bits and writes P5 (gray) or P6 (RGB).
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(img)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub(crate) fn encode(img: &Image) -> Result<Vec<u8>> {
    let magic = match img.num_channels() {
        1 => "P5",
        3 => "P6",
        n => return Err(Error::ChannelCount(n)),
    };
    let (h, w) = img.dim();
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.reserve(h * w * img.num_channels());
    for i in 0..h {
        for j in 0..w {
            for c in img.channels() {
                out.push(quantize(c[[i, j]]));
            }
        }
    }
    Ok(out)
}

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 {
        return Err(malformed("file too short"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                magic: String::from_utf8_lossy(other).into_owned(),
            })
        }
    };

    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(malformed("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("expected a decimal number"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("number out of range"))?;
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("missing whitespace after maxval")),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed("maxval must be in 1..=65535"));
    }
    Ok(Header {
        channels,
        width,
        height,
        maxval,
        data_start: pos,
    })
}

pub(crate) fn decode(bytes: &[u8], path: &Path) -> Result<Image> {
    let hdr = parse_header(bytes, path)?;
    let sample_bytes = if hdr.maxval > 255 { 2 } else { 1 };
    let n = hdr.width * hdr.height * hdr.channels;
    let data = &bytes[hdr.data_start..];
    if data.len() < n * sample_bytes {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("expected {} raster bytes, found {}", n * sample_bytes, data.len()),
        });
    }
    let scale = hdr.maxval as f64;
    let sample = |k: usize| -> f64 {
        let raw = if sample_bytes == 2 {
            u16::from_be_bytes([data[2 * k], data[2 * k + 1]]) as f64
        } else {
            data[k] as f64
        };
        raw / scale
    };
    let channels = (0..hdr.channels)
        .map(|c| {
            Array2::from_shape_fn((hdr.height, hdr.width), |(i, j)| {
                sample((i * hdr.width + j) * hdr.channels + c)
            })
        })
        .collect();
    Image::new(channels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str) -> std::path::PathBuf {
        std::path::PathBuf::from(name)
    }

    #[test]
    fn all_max_bytes_load_as_one() {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend([255u8; 6]);
        let img = decode(&bytes, &p("x.pgm")).unwrap();
        assert_eq!(img.num_channels(), 1);
        assert_eq!(img.dim(), (2, 3));
        assert!(img.channel(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn p6_shape() {
        let mut bytes = b"P6 2 2 255\n".to_vec();
        bytes.extend((0..12u8).map(|b| b * 20));
        let img = decode(&bytes, &p("x.ppm")).unwrap();
        assert_eq!(img.num_channels(), 3);
        assert_eq!(img.dim(), (2, 2));
        // interleaved RGB: pixel (0,1) is bytes 3..6
        assert_eq!(img.channel(1)[[0, 1]], 80.0 / 255.0);
    }

    #[test]
    fn sixteen_bit_big_endian() {
        let mut bytes = b"P5\n# comment\n1 1\n65535\n".to_vec();
        bytes.extend([0x80, 0x00]);
        let img = decode(&bytes, &p("x.pgm")).unwrap();
        assert!((img.channel(0)[[0, 0]] - 32768.0 / 65535.0).abs() < 1e-15);
    }

    #[test]
    fn header_errors_are_distinct() {
        assert!(matches!(
            decode(b"P3\n1 1\n255\n0 0 0", &p("a.ppm")),
            Err(Error::UnsupportedFormat { .. })
        ));
        assert!(matches!(
            decode(b"P5\n1\n", &p("a.pgm")),
            Err(Error::MalformedHeader { .. })
        ));
        assert!(matches!(
            decode(b"P5\n2 2\n255\n\x00", &p("a.pgm")),
            Err(Error::MalformedHeader { .. })
        ));
        let missing = load_image("/definitely/not/here.pgm").unwrap_err();
        assert!(matches!(missing, Error::MissingFile { .. }));
        assert!(missing.to_string().contains("/definitely/not/here.pgm"));
    }

    #[test]
    fn save_quantizes_and_clamps() {
        let g = ndarray::array![[0.5, 1.7, -0.2]];
        let bytes = encode(&Image::gray(g).unwrap()).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[128, 255, 0]);
    }

    #[test]
    fn save_rejects_two_channels() {
        let img = Image::new(vec![Array2::zeros((1, 1)), Array2::zeros((1, 1))]).unwrap();
        assert!(matches!(encode(&img), Err(Error::ChannelCount(2))));
    }
}
