//! Forward/backward decorrelating transforms for d in {1,2,3}.
//!
//! Two implementations live side by side: the exact rational matrix
//! product (the lossless reference `C_3`), and the lossy integer lifting
//! scheme actually used by the codec, whose right shifts round half
//! values toward negative infinity and therefore lose information.

use crate::Rat;

/// Forward transform matrix numerators; `L = L_NUM / 16`.
pub const L_NUM: [[i128; 4]; 4] =
    [[4, 4, 4, 4], [5, 1, -1, -5], [-4, 4, 4, -4], [-2, 6, -6, 2]];

/// Backward transform matrix numerators; `L^{-1} = L_INV_NUM / 4`.
pub const L_INV_NUM: [[i128; 4]; 4] =
    [[4, 6, -4, -1], [4, 2, 4, 5], [4, -2, 4, -5], [4, -6, -4, 1]];

/// Range-expansion factor of the forward transform per dimension.
pub const GAIN: f64 = 15.0 / 4.0;

/// `s~`: halve, rounding toward negative infinity. The gap to the exact
/// half is `theta in {-1/2, 0}`.
#[inline]
pub fn round_half_down(v: i128) -> i128 {
    v >> 1
}

/// One 4-point forward lifting pass (lossy).
#[inline]
pub fn forward_lossy_1d(a: [i128; 4]) -> [i128; 4] {
    let [mut x, mut y, mut z, mut w] = a;
    x += w;
    x >>= 1;
    w -= x;
    z += y;
    z >>= 1;
    y -= z;
    x += z;
    x >>= 1;
    z -= x;
    w += y;
    w >>= 1;
    y -= w;
    w += y >> 1;
    y -= w >> 1;
    [x, y, z, w]
}

/// One 4-point backward lifting pass. Each step undoes the matching
/// forward step, so the pair is lossless exactly when the forward pass
/// lost nothing (e.g. on coefficients whose low 2d planes are zero).
#[inline]
pub fn backward_lossy_1d(a: [i128; 4]) -> [i128; 4] {
    let [mut x, mut y, mut z, mut w] = a;
    y += w >> 1;
    w -= y >> 1;
    y += w;
    w <<= 1;
    w -= y;
    z += x;
    x <<= 1;
    x -= z;
    y += z;
    z <<= 1;
    z -= y;
    w += x;
    x <<= 1;
    x -= w;
    [x, y, z, w]
}

/// Exact forward transform `L a`.
pub fn forward_exact_1d(a: [Rat; 4]) -> [Rat; 4] {
    matvec(&L_NUM, 16, a)
}

/// Exact backward transform `L^{-1} a`.
pub fn backward_exact_1d(a: [Rat; 4]) -> [Rat; 4] {
    matvec(&L_INV_NUM, 4, a)
}

fn matvec(m: &[[i128; 4]; 4], den: i128, a: [Rat; 4]) -> [Rat; 4] {
    std::array::from_fn(|i| {
        (0..4).map(|j| a[j] * Rat::new(m[i][j], den)).sum()
    })
}

fn for_each_line(d: u8, axis: u8, mut f: impl FnMut(usize, usize)) {
    let n = 4usize.pow(d as u32);
    let stride = 4usize.pow(axis as u32);
    let mut base = 0;
    for _ in 0..n / 4 {
        f(base, stride);
        // advance to the next line start: skip the axis digit
        base += 1;
        if base % stride == 0 {
            base += 3 * stride;
        }
    }
}

/// Lossy forward transform over a `4^d` block, traversing the x axis
/// first, then y, then z.
pub fn forward_lossy(block: &mut [i128], d: u8) {
    debug_assert_eq!(block.len(), 4usize.pow(d as u32));
    for axis in 0..d {
        for_each_line(d, axis, |base, stride| {
            let line = std::array::from_fn(|i| block[base + i * stride]);
            let out = forward_lossy_1d(line);
            for (i, v) in out.into_iter().enumerate() {
                block[base + i * stride] = v;
            }
        });
    }
}

/// Lossy backward transform; axes in reverse (z, y, x) so each pass
/// undoes the matching forward pass.
pub fn backward_lossy(block: &mut [i128], d: u8) {
    debug_assert_eq!(block.len(), 4usize.pow(d as u32));
    for axis in (0..d).rev() {
        for_each_line(d, axis, |base, stride| {
            let line = std::array::from_fn(|i| block[base + i * stride]);
            let out = backward_lossy_1d(line);
            for (i, v) in out.into_iter().enumerate() {
                block[base + i * stride] = v;
            }
        });
    }
}

/// Exact forward transform over a `4^d` block (equals the Kronecker
/// product `L (x) ... (x) L` applied to the flattened block).
pub fn forward_exact(block: &mut [Rat], d: u8) {
    exact_pass(block, d, &L_NUM, 16, false);
}

/// Exact backward transform over a `4^d` block.
pub fn backward_exact(block: &mut [Rat], d: u8) {
    exact_pass(block, d, &L_INV_NUM, 4, true);
}

fn exact_pass(block: &mut [Rat], d: u8, m: &[[i128; 4]; 4], den: i128, rev: bool) {
    debug_assert_eq!(block.len(), 4usize.pow(d as u32));
    let axes: Vec<u8> = if rev { (0..d).rev().collect() } else { (0..d).collect() };
    for axis in axes {
        for_each_line(d, axis, |base, stride| {
            let line = std::array::from_fn(|i| block[base + i * stride]);
            let out = matvec(m, den, line);
            for (i, v) in out.into_iter().enumerate() {
                block[base + i * stride] = v;
            }
        });
    }
}

/// Total-sequency ordering: `perm[rank]` is the flattened block index
/// (x fastest) whose coordinates have the rank-th smallest coordinate
/// sum, ties broken lexicographically on the coordinate tuple. d = 1 is
/// the identity.
pub fn sequency_permutation(d: u8) -> Vec<usize> {
    let n = 4usize.pow(d as u32);
    let coords = |idx: usize| -> [usize; 3] {
        [idx % 4, (idx / 4) % 4, (idx / 16) % 4]
    };
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by_key(|&idx| {
        let c = coords(idx);
        (c[..d as usize].iter().sum::<usize>(), c)
    });
    perm
}

/// Inverse of a permutation: `inv[perm[i]] = i`.
pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}
