//! Move-to-front recoding, used after the BWT so runs become zeros.

pub fn mtf_encode(input: &[u8]) -> Vec<u8> {
    let mut table: [u8; 256] = std::array::from_fn(|i| i as u8);
    input
        .iter()
        .map(|&b| {
            let pos = table.iter().position(|&t| t == b).unwrap();
            table.copy_within(0..pos, 1);
            table[0] = b;
            pos as u8
        })
        .collect()
}

pub fn mtf_decode(input: &[u8]) -> Vec<u8> {
    let mut table: [u8; 256] = std::array::from_fn(|i| i as u8);
    input
        .iter()
        .map(|&i| {
            let pos = i as usize;
            let b = table[pos];
            table.copy_within(0..pos, 1);
            table[0] = b;
            b
        })
        .collect()
}
