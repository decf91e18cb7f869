//! Pattern functions over 3x3 neighborhoods, plus the gradient-orientation
//! histogram (EOH) which shares the module because the space-time stage
//! reuses it per plane.
//!
//! Neighbor order is fixed for every bit assignment below: clockwise from
//! the east pixel with image y growing downward,
//!
//! ```text
//!   index  0   1   2   3   4   5   6   7
//!   pixel  E   SE  S   SW  W   NW  N   NE
//! ```
//!
//! so centrally symmetric pairs are (p, p+4) and all comparisons use >=.

use std::sync::OnceLock;

/// CS-LBP / CBP comparison threshold in gray levels.
pub const CS_THRESHOLD: i16 = 3;

/// Local binary pattern: 8 neighbor-vs-center bits.
#[inline]
pub fn lbp(c: u8, n: &[u8; 8]) -> usize {
    let mut code = 0usize;
    for (p, &g) in n.iter().enumerate() {
        code |= usize::from(g >= c) << p;
    }
    code
}

/// Rank transform: number of neighbors strictly below the center.
#[inline]
pub fn rank(c: u8, n: &[u8; 8]) -> usize {
    n.iter().filter(|&&g| g < c).count()
}

/// Rank + equality count, enumerating pairs (less, equal) with
/// less + equal <= 8. Pairs are ordered by `less`, then `equal`; there are
/// sum_{l=0..8} (9 - l) = 45 of them.
#[inline]
pub fn rank_with_ties(c: u8, n: &[u8; 8]) -> usize {
    let less = n.iter().filter(|&&g| g < c).count();
    let equal = n.iter().filter(|&&g| g == c).count();
    // offset of the (less, 0) pair: 9 + 8 + ... + (9 - less + 1)
    less * (19 - less) / 2 + equal
}

/// Texture spectrum reduced to 4 bits: the raster-order top-left neighbors
/// NW, N, NE, W against the center.
#[inline]
pub fn mts(c: u8, n: &[u8; 8]) -> usize {
    let quad = [n[5], n[6], n[7], n[4]]; // NW, N, NE, W
    let mut code = 0usize;
    for (p, &g) in quad.iter().enumerate() {
        code |= usize::from(g >= c) << p;
    }
    code
}

/// Center-symmetric LBP: 4 opposite-pair comparisons with a gray-level
/// threshold to suppress flat-area noise.
#[inline]
pub fn cs_lbp(_c: u8, n: &[u8; 8]) -> usize {
    let mut code = 0usize;
    for p in 0..4 {
        let diff = i16::from(n[p]) - i16::from(n[p + 4]);
        code |= usize::from(diff >= CS_THRESHOLD) << p;
    }
    code
}

/// Centralized binary pattern: the CS-LBP bits plus a fifth bit comparing
/// the center against the 9-pixel mean (exact integer comparison).
#[inline]
pub fn cbp(c: u8, n: &[u8; 8]) -> usize {
    let sum9: u16 = u16::from(c) + n.iter().map(|&g| u16::from(g)).sum::<u16>();
    let mut code = cs_lbp(c, n);
    code |= usize::from(u16::from(c) * 9 >= sum9) << 4;
    code
}

/// Binary gradient contour over one closed path: bit p compares path[p]
/// against its successor. The all-zero word would require a strict circular
/// descent, which is impossible, so codes live in [1, 2^len - 1] and the
/// caller subtracts 1.
#[inline]
fn gradient_loop(n: &[u8; 8], path: &[usize]) -> usize {
    let mut code = 0usize;
    for (p, &i) in path.iter().enumerate() {
        let j = path[(p + 1) % path.len()];
        code |= usize::from(n[i] >= n[j]) << p;
    }
    debug_assert!(code >= 1, "strict circular descent cannot happen");
    code
}

/// BGC1: single-loop contour around the 8 neighbors, 255 codes.
#[inline]
pub fn bgc1(_c: u8, n: &[u8; 8]) -> usize {
    gradient_loop(n, &[0, 1, 2, 3, 4, 5, 6, 7]) - 1
}

/// BGC2: two interleaved 4-loops (even then odd neighbors), 15 x 15 codes.
#[inline]
pub fn bgc2(_c: u8, n: &[u8; 8]) -> usize {
    let a = gradient_loop(n, &[0, 2, 4, 6]);
    let b = gradient_loop(n, &[1, 3, 5, 7]);
    15 * (a - 1) + (b - 1)
}

/// BGC3: one 8-loop walking the neighbors with stride 3, 255 codes.
#[inline]
pub fn bgc3(_c: u8, n: &[u8; 8]) -> usize {
    gradient_loop(n, &[0, 3, 6, 1, 4, 7, 2, 5]) - 1
}

/// Gray-level difference: absolute center-vs-east difference, 256 bins.
#[inline]
pub fn gld(c: u8, n: &[u8; 8]) -> usize {
    usize::from(c.abs_diff(n[0]))
}

/// 256-entry lookup collapsing 8-bit patterns to uniform-LBP bins: the 58
/// patterns with at most 2 circular bit transitions get stable ids in
/// ascending pattern order, everything else shares bin 58.
pub fn uniform_lbp_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [58u8; 256];
        let mut next = 0u8;
        for pattern in 0..256usize {
            let transitions = (0..8)
                .filter(|&p| (pattern >> p) & 1 != (pattern >> ((p + 1) % 8)) & 1)
                .count();
            if transitions <= 2 {
                table[pattern] = next;
                next += 1;
            }
        }
        assert_eq!(next, 58, "uniform pattern census");
        table
    })
}

/// Uniform LBP: plain LBP folded through the 59-bin uniform mapping.
#[inline]
pub fn uniform_lbp(c: u8, n: &[u8; 8]) -> usize {
    usize::from(uniform_lbp_table()[lbp(c, n)])
}

/// Sobel gradient of the 3x3 neighborhood (y down):
/// gx detects left-to-right increase, gy top-to-bottom increase.
#[inline]
pub fn sobel(c: u8, n: &[u8; 8]) -> (f64, f64) {
    let _ = c;
    let (e, se, s, sw, w, nw, no, ne) = (
        i32::from(n[0]),
        i32::from(n[1]),
        i32::from(n[2]),
        i32::from(n[3]),
        i32::from(n[4]),
        i32::from(n[5]),
        i32::from(n[6]),
        i32::from(n[7]),
    );
    let gx = (ne + 2 * e + se) - (nw + 2 * w + sw);
    let gy = (sw + 2 * s + se) - (nw + 2 * no + ne);
    (f64::from(gx), f64::from(gy))
}

/// Orientation bin for EOH: atan2 angle mapped to [0, 360) and quantized
/// into 16 equal sectors.
#[inline]
pub fn eoh_bin(gx: f64, gy: f64) -> usize {
    let mut angle = gy.atan2(gx);
    if angle < 0.0 {
        angle += 2.0 * std::f64::consts::PI;
    }
    let bin = (angle / (2.0 * std::f64::consts::PI) * 16.0) as usize;
    bin.min(15)
}
