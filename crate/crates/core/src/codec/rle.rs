//! Byte-level run-length coding.
//!
//! A byte is emitted literally; after two equal bytes in a row the next
//! output byte is the number (0..=255) of further repetitions.

use super::CodecError;

pub fn rle_encode(input: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(input.len());
    let mut i = 0;
    while i < input.len() {
        let b = input[i];
        if i + 1 < input.len() && input[i + 1] == b {
            let mut run = 2;
            while run < 257 && i + run < input.len() && input[i + run] == b {
                run += 1;
            }
            out.extend_from_slice(&[b, b, (run - 2) as u8]);
            i += run;
        } else {
            out.push(b);
            i += 1;
        }
    }
    out
}

pub fn rle_decode(input: &[u8]) -> Result<Vec<u8>, CodecError> {
    let mut out = Vec::with_capacity(input.len() * 2);
    let mut i = 0;
    while i < input.len() {
        let b = input[i];
        if i + 1 < input.len() && input[i + 1] == b {
            let extra = *input
                .get(i + 2)
                .ok_or_else(|| CodecError::Decode("run-length stream ends inside a run".into()))?;
            out.extend(std::iter::repeat_n(b, 2 + extra as usize));
            i += 3;
        } else {
            out.push(b);
            i += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_runs() {
        assert_eq!(rle_encode(b"aaaab"), vec![b'a', b'a', 2, b'b']);
        assert_eq!(rle_encode(b"aab"), vec![b'a', b'a', 0, b'b']);
        assert_eq!(rle_encode(b"abc"), b"abc".to_vec());
    }

    #[test]
    fn long_runs_split() {
        let data = vec![7u8; 1000];
        let enc = rle_encode(&data);
        assert!(enc.len() < 20);
        assert_eq!(rle_decode(&enc).unwrap(), data);
    }

    #[test]
    fn truncated_run() {
        assert!(rle_decode(b"aa").is_err());
    }
}
