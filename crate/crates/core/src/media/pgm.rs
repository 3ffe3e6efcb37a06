//! Netpbm grayscale I/O and message-bit loading.

use super::GrayImage;
use crate::error::{Error, Result};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
}

fn skip_space_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' && bytes[pos] != b'\r' {
                pos += 1;
            }
            continue;
        }
        return pos;
    }
}

fn read_uint(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    *pos = skip_space_and_comments(bytes, *pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Image(format!("expected {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .expect("ascii digits")
        .parse()
        .map_err(|_| Error::Image(format!("{what} out of range")))
}

fn read_header(bytes: &[u8], needs_maxval: bool) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Image("missing netpbm magic number".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let width = read_uint(bytes, &mut pos, "width")?;
    let height = read_uint(bytes, &mut pos, "height")?;
    let maxval = if needs_maxval {
        read_uint(bytes, &mut pos, "maxval")?
    } else {
        1
    };
    if width == 0 || height == 0 {
        return Err(Error::Image(format!("empty image {width}x{height}")));
    }
    // exactly one whitespace byte separates the header from binary data
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Image("header not terminated by whitespace".into()));
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_start: pos + 1,
    })
}

/// Parses a P2 (plain) or P5 (raw) graymap with maxval at most 255.
///
/// Samples are stored as read; maxval below 255 is not rescaled.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    match bytes.get(..2) {
        Some(b"P2") | Some(b"P5") => {}
        Some(b"P3") | Some(b"P6") => {
            return Err(Error::Image(
                "P3/P6 magic denotes a PPM color pixmap, not a PGM graymap; only P2/P5 are supported"
                    .into(),
            ))
        }
        _ => return Err(Error::Image("not a PGM file (expected P2 or P5)".into())),
    }
    let h = read_header(bytes, true)?;
    if h.maxval == 0 || h.maxval > 255 {
        return Err(Error::Image(format!(
            "maxval {} unsupported (must be 1..=255)",
            h.maxval
        )));
    }
    let count = h.width * h.height;
    let samples = if &h.magic == b"P5" {
        let data = bytes
            .get(h.data_start..h.data_start + count)
            .ok_or_else(|| Error::Image("truncated pixel data".into()))?;
        data.to_vec()
    } else {
        let mut pos = h.data_start - 1;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let v = read_uint(bytes, &mut pos, "sample").map_err(|_| {
                Error::Image("truncated pixel data".into())
            })?;
            if v > h.maxval {
                return Err(Error::Image(format!("sample {v} exceeds maxval {}", h.maxval)));
            }
            out.push(v as u8);
        }
        out
    };
    if samples.iter().any(|&v| v as usize > h.maxval) {
        return Err(Error::Image("sample exceeds maxval".into()));
    }
    GrayImage::new(h.width, h.height, samples)
}

/// Serializes as P5 with maxval 255.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.samples());
    out
}

/// Reads a P1/P4 bitmap; a set bit (black) reads as `true`.
pub fn read_pbm(bytes: &[u8]) -> Result<(usize, usize, Vec<bool>)> {
    let h = read_header(bytes, false)?;
    let count = h.width * h.height;
    match &h.magic {
        b"P4" => {
            let row_bytes = h.width.div_ceil(8);
            let data = bytes
                .get(h.data_start..h.data_start + row_bytes * h.height)
                .ok_or_else(|| Error::Image("truncated bitmap data".into()))?;
            let mut bits = Vec::with_capacity(count);
            for row in data.chunks(row_bytes) {
                for x in 0..h.width {
                    bits.push(row[x / 8] >> (7 - x % 8) & 1 == 1);
                }
            }
            Ok((h.width, h.height, bits))
        }
        b"P1" => {
            let mut bits = Vec::with_capacity(count);
            let mut pos = h.data_start - 1;
            while bits.len() < count {
                pos = skip_space_and_comments(bytes, pos);
                match bytes.get(pos) {
                    Some(b'0') => bits.push(false),
                    Some(b'1') => bits.push(true),
                    _ => return Err(Error::Image("truncated bitmap data".into())),
                }
                pos += 1;
            }
            Ok((h.width, h.height, bits))
        }
        _ => Err(Error::Image("not a PBM file (expected P1 or P4)".into())),
    }
}

/// Message bits from a PBM or PGM image, or from raw bytes (MSB first).
///
/// Graymap pixels at or above half of maxval read as `true`.
pub fn read_message_bits(bytes: &[u8]) -> Result<Vec<bool>> {
    let bits = match bytes.get(..2) {
        Some(b"P1") | Some(b"P4") => read_pbm(bytes)?.2,
        Some(b"P2") | Some(b"P5") => {
            let img = read_pgm(bytes)?;
            img.samples().iter().map(|&v| v >= 128).collect()
        }
        _ => bytes
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |i| b >> i & 1 == 1))
            .collect(),
    };
    if bits.is_empty() {
        return Err(Error::InvalidParameter("message is empty".into()));
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_p5() {
        let img = GrayImage::new(1, 1, vec![128]).unwrap();
        let bytes = write_pgm(&img);
        assert_eq!(bytes, b"P5\n1 1\n255\n\x80");
        assert_eq!(read_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn plain_with_comments() {
        let text = b"P2\n# a comment\n3 2\n# another\n255\n0 1 2\n253 254 255\n";
        let img = read_pgm(text).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.samples(), &[0, 1, 2, 253, 254, 255]);
        let back = read_pgm(&write_pgm(&img)).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn rejects_ppm_magic() {
        let err = read_pgm(b"P3\n1 1\n255\n0 0 0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("PPM") && msg.contains("PGM"), "{msg}");
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(read_pgm(b"P5\n2 2\n65535\n").is_err());
        assert!(read_pgm(b"P5\n2 2\n255\n\x00\x01").is_err());
        assert!(read_pgm(b"P5\nx 2\n255\n").is_err());
        assert!(read_pgm(b"P2\n2 1\n100\n5 200\n").is_err());
        assert!(read_pgm(b"").is_err());
    }

    #[test]
    fn bitmaps() {
        let (w, h, bits) = read_pbm(b"P1\n3 2\n1 0 1\n0 1 0\n").unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(bits, vec![true, false, true, false, true, false]);
        let raw = b"P4\n3 2\n\xa0\x40";
        assert_eq!(read_pbm(raw).unwrap().2, bits);
    }

    #[test]
    fn message_sources() {
        assert_eq!(
            read_message_bits(&[0b1010_0001]).unwrap(),
            vec![true, false, true, false, false, false, false, true]
        );
        let pgm = write_pgm(&GrayImage::new(2, 1, vec![10, 200]).unwrap());
        assert_eq!(read_message_bits(&pgm).unwrap(), vec![false, true]);
        assert!(read_message_bits(&[]).is_err());
    }
}
