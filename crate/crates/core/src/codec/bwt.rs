//! Burrows-Wheeler transform over an expanded alphabet.
//!
//! Symbols are `u16`: byte values map to themselves and [`SENTINEL`] (256)
//! marks end-of-input. The sentinel sorts below every byte, so sorting the
//! rotations of `input + SENTINEL` is the same as sorting its suffixes.

use super::CodecError;

pub const SENTINEL: u16 = 256;

/// Last column of the sorted rotation matrix of `input + SENTINEL`.
/// Output length is `input.len() + 1` and contains exactly one sentinel.
pub fn bwt_forward(input: &[u8]) -> Vec<u16> {
    let sa = suffix_array(input);
    let n = input.len() + 1;
    sa.iter()
        .map(|&p| {
            let prev = (p as usize + n - 1) % n;
            if prev == input.len() {
                SENTINEL
            } else {
                input[prev] as u16
            }
        })
        .collect()
}

/// Inverts [`bwt_forward`].
pub fn bwt_inverse(last: &[u16]) -> Result<Vec<u8>, CodecError> {
    let mut sentinels = 0;
    let mut counts = [0usize; 258];
    for &s in last {
        if s > SENTINEL {
            return Err(CodecError::Decode(format!("symbol {s} outside the BWT alphabet")));
        }
        if s == SENTINEL {
            sentinels += 1;
        }
        // sentinel ranks first: shift bytes up by one
        counts[rank_key(s) + 1] += 1;
    }
    match sentinels {
        0 => return Err(CodecError::Decode("BWT block has no sentinel".into())),
        1 => {}
        k => return Err(CodecError::Decode(format!("BWT block has {k} sentinels"))),
    }
    let mut first = [0usize; 258];
    for c in 1..258 {
        first[c] = first[c - 1] + counts[c];
    }
    let mut seen = [0usize; 257];
    let lf: Vec<usize> = last
        .iter()
        .map(|&s| {
            let k = rank_key(s);
            let r = first[k] + seen[k];
            seen[k] += 1;
            r
        })
        .collect();
    let n = last.len();
    let mut out = vec![0u8; n - 1];
    let mut row = 0;
    for k in (0..n - 1).rev() {
        let s = last[row];
        if s == SENTINEL {
            return Err(CodecError::Decode("BWT cycle reached the sentinel early".into()));
        }
        out[k] = s as u8;
        row = lf[row];
    }
    if last[row] != SENTINEL {
        return Err(CodecError::Decode("BWT block is not a single rotation cycle".into()));
    }
    Ok(out)
}

fn rank_key(s: u16) -> usize {
    if s == SENTINEL {
        0
    } else {
        s as usize + 1
    }
}

/// Suffix array of `input + SENTINEL` by prefix doubling of cyclic shifts
/// with counting sorts, O(n log n).
fn suffix_array(input: &[u8]) -> Vec<u32> {
    let n = input.len() + 1;
    let key = |i: usize| if i == input.len() { 0 } else { input[i] as usize + 1 };
    let mut p = vec![0u32; n];
    let mut c = vec![0u32; n];
    let mut cnt = vec![0usize; 257.max(n)];
    for i in 0..n {
        cnt[key(i)] += 1;
    }
    for i in 1..257 {
        cnt[i] += cnt[i - 1];
    }
    for i in (0..n).rev() {
        let k = key(i);
        cnt[k] -= 1;
        p[cnt[k]] = i as u32;
    }
    let mut classes = 1u32;
    for i in 1..n {
        if key(p[i] as usize) != key(p[i - 1] as usize) {
            classes += 1;
        }
        c[p[i] as usize] = classes - 1;
    }
    let mut pn = vec![0u32; n];
    let mut cn = vec![0u32; n];
    let mut h = 1usize;
    while h < n && (classes as usize) < n {
        for i in 0..n {
            pn[i] = ((p[i] as usize + n - h) % n) as u32;
        }
        cnt[..classes as usize].fill(0);
        for &x in &pn {
            cnt[c[x as usize] as usize] += 1;
        }
        for i in 1..classes as usize {
            cnt[i] += cnt[i - 1];
        }
        for &x in pn.iter().rev() {
            let k = c[x as usize] as usize;
            cnt[k] -= 1;
            p[cnt[k]] = x;
        }
        cn[p[0] as usize] = 0;
        classes = 1;
        for i in 1..n {
            let cur = (c[p[i] as usize], c[(p[i] as usize + h) % n]);
            let prev = (c[p[i - 1] as usize], c[(p[i - 1] as usize + h) % n]);
            if cur != prev {
                classes += 1;
            }
            cn[p[i] as usize] = classes - 1;
        }
        std::mem::swap(&mut c, &mut cn);
        h <<= 1;
    }
    p
}

/// Byte packing for a pipeline stage: little-endian `u32` sentinel row
/// followed by the last column with the sentinel removed.
pub fn pack(last: &[u16]) -> Vec<u8> {
    let idx = last.iter().position(|&s| s == SENTINEL).unwrap_or(0) as u32;
    let mut out = Vec::with_capacity(last.len() + 3);
    out.extend_from_slice(&idx.to_le_bytes());
    out.extend(last.iter().filter(|&&s| s != SENTINEL).map(|&s| s as u8));
    out
}

pub fn unpack(packed: &[u8]) -> Result<Vec<u16>, CodecError> {
    if packed.len() < 4 {
        return Err(CodecError::Decode("BWT block shorter than its header".into()));
    }
    let idx = u32::from_le_bytes(packed[..4].try_into().unwrap()) as usize;
    let body = &packed[4..];
    if idx > body.len() {
        return Err(CodecError::Decode(format!("BWT sentinel row {idx} out of range")));
    }
    let mut last: Vec<u16> = Vec::with_capacity(body.len() + 1);
    last.extend(body[..idx].iter().map(|&b| b as u16));
    last.push(SENTINEL);
    last.extend(body[idx..].iter().map(|&b| b as u16));
    Ok(last)
}
