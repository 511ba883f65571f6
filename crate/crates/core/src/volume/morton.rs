//! 63-bit Morton codes over 21-bit grid coordinates.
//!
//! Bit `3b` holds bit `b` of x, `3b+1` of y and `3b+2` of z.

use super::VolumeError;

pub const MORTON_COORD_BITS: u32 = 21;
pub const MORTON_COORD_LIMIT: u32 = 1 << MORTON_COORD_BITS;

#[inline]
fn split_by_3(a: u32) -> u64 {
    let mut x = a as u64 & 0x1f_ffff;
    x = (x | x << 32) & 0x1f_0000_0000_ffff;
    x = (x | x << 16) & 0x1f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

#[inline]
fn compact_by_3(code: u64) -> u32 {
    let mut x = code & 0x1249_2492_4924_9249;
    x = (x ^ (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x ^ (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x ^ (x >> 8)) & 0x1f_0000_ff00_00ff;
    x = (x ^ (x >> 16)) & 0x1f_0000_0000_ffff;
    x = (x ^ (x >> 32)) & 0x1f_ffff;
    x as u32
}

pub fn morton_encode(i: u32, j: u32, k: u32) -> Result<u64, VolumeError> {
    if i >= MORTON_COORD_LIMIT || j >= MORTON_COORD_LIMIT || k >= MORTON_COORD_LIMIT {
        return Err(VolumeError::CoordinateOutOfRange([i, j, k]));
    }
    Ok(morton_encode_unchecked([i, j, k]))
}

/// Encodes without range checks; bits above 21 are dropped.
#[inline]
pub fn morton_encode_unchecked(c: [u32; 3]) -> u64 {
    split_by_3(c[0]) | split_by_3(c[1]) << 1 | split_by_3(c[2]) << 2
}

#[inline]
pub fn morton_decode(code: u64) -> [u32; 3] {
    [
        compact_by_3(code),
        compact_by_3(code >> 1),
        compact_by_3(code >> 2),
    ]
}
