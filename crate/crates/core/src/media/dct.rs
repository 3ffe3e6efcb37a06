//! Orthonormal 8x8 block DCT-II and the anti-diagonal coefficient order.

use std::sync::OnceLock;

use super::GrayImage;
use crate::error::{Error, Result};

pub const BLOCK: usize = 8;

/// `basis()[u][x] = c(u) cos((2x + 1) u pi / 16)`.
pub fn basis() -> &'static [[f64; BLOCK]; BLOCK] {
    static BASIS: OnceLock<[[f64; BLOCK]; BLOCK]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; BLOCK]; BLOCK];
        for (u, row) in m.iter_mut().enumerate() {
            let c = if u == 0 {
                (1.0 / BLOCK as f64).sqrt()
            } else {
                (2.0 / BLOCK as f64).sqrt()
            };
            for (x, v) in row.iter_mut().enumerate() {
                *v = c * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        m
    })
}

/// Zero-based `(row, col)` of the `j`-th re-indexed coefficient, `j = 0..64`.
///
/// Anti-diagonals are visited in order of increasing `row + col`; within a
/// diagonal the row decreases.
pub fn diagonal_order() -> &'static [(usize, usize); 64] {
    static ORDER: OnceLock<[(usize, usize); 64]> = OnceLock::new();
    ORDER.get_or_init(|| {
        let mut out = [(0, 0); 64];
        let mut j = 0;
        for s in 0..2 * BLOCK - 1 {
            for r in (0..BLOCK).rev() {
                if s >= r && s - r < BLOCK {
                    out[j] = (r, s - r);
                    j += 1;
                }
            }
        }
        out
    })
}

pub fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || width % BLOCK != 0 || height % BLOCK != 0 {
        return Err(Error::Dimensions {
            width,
            height,
            divisor: BLOCK,
        });
    }
    Ok(())
}

/// Forward transform of one block given row-major samples.
pub fn forward_block(x: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for r in 0..BLOCK {
        for v in 0..BLOCK {
            let mut acc = 0.0;
            for k in 0..BLOCK {
                acc += c[v][k] * x[r * BLOCK + k];
            }
            tmp[r * BLOCK + v] = acc;
        }
    }
    let mut out = [0.0; 64];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            let mut acc = 0.0;
            for k in 0..BLOCK {
                acc += c[u][k] * tmp[k * BLOCK + v];
            }
            out[u * BLOCK + v] = acc;
        }
    }
    out
}

pub fn inverse_block(y: &[f64; 64]) -> [f64; 64] {
    let c = basis();
    let mut tmp = [0.0; 64];
    for u in 0..BLOCK {
        for x in 0..BLOCK {
            let mut acc = 0.0;
            for v in 0..BLOCK {
                acc += c[v][x] * y[u * BLOCK + v];
            }
            tmp[u * BLOCK + x] = acc;
        }
    }
    let mut out = [0.0; 64];
    for r in 0..BLOCK {
        for x in 0..BLOCK {
            let mut acc = 0.0;
            for u in 0..BLOCK {
                acc += c[u][r] * tmp[u * BLOCK + x];
            }
            out[r * BLOCK + x] = acc;
        }
    }
    out
}

/// Single coefficient `(u, v)` of the block whose top-left pixel is
/// `(r0, c0)` in a real field of width `width`.
pub fn coefficient_at(field: &[f64], width: usize, r0: usize, c0: usize, u: usize, v: usize) -> f64 {
    let c = basis();
    let mut acc = 0.0;
    for r in 0..BLOCK {
        let row = &field[(r0 + r) * width + c0..(r0 + r) * width + c0 + BLOCK];
        let mut line = 0.0;
        for (x, &p) in row.iter().enumerate() {
            line += c[v][x] * p;
        }
        acc += c[u][r] * line;
    }
    acc
}

fn load_block(field: &[f64], width: usize, br: usize, bc: usize) -> [f64; 64] {
    let mut b = [0.0; 64];
    for r in 0..BLOCK {
        let src = (br * BLOCK + r) * width + bc * BLOCK;
        b[r * BLOCK..(r + 1) * BLOCK].copy_from_slice(&field[src..src + BLOCK]);
    }
    b
}

/// Blocks in row-major block order, each in natural `(u, v)` order.
pub fn forward_blocks_real(field: &[f64], width: usize, height: usize) -> Result<Vec<[f64; 64]>> {
    check_dims(width, height)?;
    if field.len() != width * height {
        return Err(Error::SizeMismatch {
            expected: width * height,
            actual: field.len(),
        });
    }
    let (bw, bh) = (width / BLOCK, height / BLOCK);
    Ok((0..bw * bh)
        .map(|b| forward_block(&load_block(field, width, b / bw, b % bw)))
        .collect())
}

pub fn forward_blocks(img: &GrayImage) -> Result<Vec<[f64; 64]>> {
    forward_blocks_real(&img.to_f64(), img.width(), img.height())
}

pub fn inverse_blocks_real(blocks: &[[f64; 64]], width: usize, height: usize) -> Result<Vec<f64>> {
    check_dims(width, height)?;
    let (bw, bh) = (width / BLOCK, height / BLOCK);
    if blocks.len() != bw * bh {
        return Err(Error::SizeMismatch {
            expected: bw * bh,
            actual: blocks.len(),
        });
    }
    let mut field = vec![0.0; width * height];
    for (b, coeffs) in blocks.iter().enumerate() {
        let px = inverse_block(coeffs);
        let (br, bc) = (b / bw, b % bw);
        for r in 0..BLOCK {
            let dst = (br * BLOCK + r) * width + bc * BLOCK;
            field[dst..dst + BLOCK].copy_from_slice(&px[r * BLOCK..(r + 1) * BLOCK]);
        }
    }
    Ok(field)
}

pub fn inverse_blocks(blocks: &[[f64; 64]], width: usize, height: usize) -> Result<GrayImage> {
    Ok(GrayImage::from_f64_rounded(
        width,
        height,
        &inverse_blocks_real(blocks, width, height)?,
    ))
}

/// Block coefficients in re-indexed order, block-major.
pub fn serialize(blocks: &[[f64; 64]]) -> Vec<f64> {
    let order = diagonal_order();
    blocks
        .iter()
        .flat_map(|b| order.iter().map(move |&(r, c)| b[r * BLOCK + c]))
        .collect()
}

pub fn deserialize(stream: &[f64]) -> Vec<[f64; 64]> {
    let order = diagonal_order();
    stream
        .chunks_exact(64)
        .map(|chunk| {
            let mut b = [0.0; 64];
            for (j, &(r, c)) in order.iter().enumerate() {
                b[r * BLOCK + c] = chunk[j];
            }
            b
        })
        .collect()
}
