//! Adaptive order-0 arithmetic coder.
//!
//! A 257-symbol alphabet (the 256 byte values plus an end-of-stream symbol)
//! coded with 32-bit integer arithmetic and bit-level underflow handling.
//! Every symbol starts with count 1; each occurrence adds [`INCREMENT`] and
//! counts are halved once the total reaches [`MAX_TOTAL`].

use super::CodecError;

const SYMBOLS: usize = 257;
const EOF: usize = 256;
const INCREMENT: u32 = 32;
const MAX_TOTAL: u32 = 1 << 24;

const TOP: u64 = 0xFFFF_FFFF;
const HALF: u64 = 0x8000_0000;
const QUARTER: u64 = 0x4000_0000;
const THREE_QUARTERS: u64 = 0xC000_0000;

/// Cumulative frequencies over a Fenwick tree.
struct Model {
    tree: [u32; SYMBOLS + 1],
    freq: [u32; SYMBOLS],
    total: u32,
}

impl Model {
    fn new() -> Self {
        let mut m = Model {
            tree: [0; SYMBOLS + 1],
            freq: [1; SYMBOLS],
            total: SYMBOLS as u32,
        };
        m.rebuild();
        m
    }

    fn rebuild(&mut self) {
        self.tree = [0; SYMBOLS + 1];
        for i in 0..SYMBOLS {
            self.tree[i + 1] = self.freq[i];
        }
        for i in 1..=SYMBOLS {
            let parent = i + (i & i.wrapping_neg());
            if parent <= SYMBOLS {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    /// Sum of frequencies of symbols `< sym`.
    fn cum(&self, sym: usize) -> u32 {
        let mut i = sym;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    /// Largest symbol whose cumulative low bound is `<= target`.
    fn find(&self, target: u32) -> usize {
        let mut pos = 0usize;
        let mut rem = target;
        let mut step = 1usize << (usize::BITS - 1 - SYMBOLS.leading_zeros());
        while step > 0 {
            let next = pos + step;
            if next <= SYMBOLS && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }

    fn update(&mut self, sym: usize) {
        self.freq[sym] += INCREMENT;
        self.total += INCREMENT;
        let mut i = sym + 1;
        while i <= SYMBOLS {
            self.tree[i] += INCREMENT;
            i += i & i.wrapping_neg();
        }
        if self.total >= MAX_TOTAL {
            self.total = 0;
            for f in self.freq.iter_mut() {
                *f = (*f).div_ceil(2);
                self.total += *f;
            }
            self.rebuild();
        }
    }
}

struct BitWriter {
    out: Vec<u8>,
    current: u8,
    filled: u8,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        self.current = (self.current << 1) | bit as u8;
        self.filled += 1;
        if self.filled == 8 {
            self.out.push(self.current);
            self.current = 0;
            self.filled = 0;
        }
    }

    fn push_with_pending(&mut self, bit: bool, pending: &mut u64) {
        self.push(bit);
        while *pending > 0 {
            self.push(!bit);
            *pending -= 1;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.out.push(self.current << (8 - self.filled));
        }
        self.out
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    overrun: usize,
}

impl BitReader<'_> {
    fn bit(&mut self) -> u64 {
        let byte = self.pos / 8;
        if byte >= self.data.len() {
            self.overrun += 1;
            self.pos += 1;
            return 0;
        }
        let b = (self.data[byte] >> (7 - self.pos % 8)) & 1;
        self.pos += 1;
        b as u64
    }
}

/// Encodes `input` followed by the end-of-stream symbol.
pub fn encode(input: &[u8]) -> Vec<u8> {
    let mut model = Model::new();
    let mut w = BitWriter {
        out: Vec::with_capacity(input.len() / 2 + 16),
        current: 0,
        filled: 0,
    };
    let (mut low, mut high, mut pending) = (0u64, TOP, 0u64);
    for sym in input.iter().map(|&b| b as usize).chain(std::iter::once(EOF)) {
        let range = high - low + 1;
        let total = model.total as u64;
        let lo = model.cum(sym) as u64;
        let hi = lo + model.freq[sym] as u64;
        high = low + range * hi / total - 1;
        low += range * lo / total;
        loop {
            if high < HALF {
                w.push_with_pending(false, &mut pending);
            } else if low >= HALF {
                w.push_with_pending(true, &mut pending);
                low -= HALF;
                high -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                pending += 1;
                low -= QUARTER;
                high -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
        }
        model.update(sym);
    }
    pending += 1;
    w.push_with_pending(low >= QUARTER, &mut pending);
    w.finish()
}

/// Decodes a stream produced by [`encode`]. Fails if more than `limit`
/// bytes would be produced.
pub fn decode(payload: &[u8], limit: usize) -> Result<Vec<u8>, CodecError> {
    let mut model = Model::new();
    let mut r = BitReader {
        data: payload,
        pos: 0,
        overrun: 0,
    };
    let (mut low, mut high) = (0u64, TOP);
    let mut value = 0u64;
    for _ in 0..32 {
        value = (value << 1) | r.bit();
    }
    let mut out = Vec::with_capacity(limit.min(payload.len() * 8 + 16));
    loop {
        if value < low || value > high {
            return Err(CodecError::Decode("arithmetic stream out of range".into()));
        }
        if r.overrun > 64 {
            return Err(CodecError::Decode(
                "arithmetic stream ended before the end-of-stream symbol".into(),
            ));
        }
        let range = high - low + 1;
        let total = model.total as u64;
        let target = ((value - low + 1) * total - 1) / range;
        if target >= total {
            return Err(CodecError::Decode("arithmetic stream out of range".into()));
        }
        let sym = model.find(target as u32);
        if sym >= SYMBOLS {
            return Err(CodecError::Decode("arithmetic stream out of range".into()));
        }
        let lo = model.cum(sym) as u64;
        let hi = lo + model.freq[sym] as u64;
        high = low + range * hi / total - 1;
        low += range * lo / total;
        if sym == EOF {
            break;
        }
        if out.len() == limit {
            return Err(CodecError::Decode("arithmetic stream longer than declared".into()));
        }
        out.push(sym as u8);
        loop {
            if high < HALF {
            } else if low >= HALF {
                low -= HALF;
                high -= HALF;
                value -= HALF;
            } else if low >= QUARTER && high < THREE_QUARTERS {
                low -= QUARTER;
                high -= QUARTER;
                value -= QUARTER;
            } else {
                break;
            }
            low <<= 1;
            high = (high << 1) | 1;
            value = (value << 1) | r.bit();
        }
        model.update(sym);
    }
    Ok(out)
}
