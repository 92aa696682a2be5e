use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::codec::{CodecRegistry, Mode};

/// xorshift64* (Marsaglia shifts 12/25/27, Vigna's multiplier). The state
/// is the seed itself; a zero seed is replaced by a fixed odd constant
/// because zero is the generator's fixed point.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub const ZERO_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        XorShift64Star {
            state: if seed == 0 { Self::ZERO_SEED } else { seed },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Fisher-Yates from the back: position `i` swaps with `next % (i + 1)`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_u64() % (i as u64 + 1)) as usize;
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Combo {
    pub run_ordinal: u64,
    pub codec: String,
    pub file: String,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub combos: Vec<Combo>,
    pub seed: u64,
    pub pause_seconds: f64,
    /// Codec short name to time-scale divisor; only factors other than 1.
    pub time_scale: BTreeMap<String, f64>,
}

impl RunPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes") + "\n"
    }
}

/// Cross product of `modes` x registry codecs x `files`, in that nesting,
/// shuffled with [`XorShift64Star`]. Codecs lacking a requested mode are
/// left out for that mode. Ordinals are assigned after shuffling.
pub fn build_plan(
    files: &[String],
    registry: &CodecRegistry,
    seed: u64,
    modes: &[Mode],
    pause_seconds: f64,
) -> Result<RunPlan, HarnessError> {
    if registry.codecs.is_empty() {
        return Err(HarnessError::Plan("no codecs registered".into()));
    }
    if files.is_empty() {
        return Err(HarnessError::Plan("no available corpus files".into()));
    }
    if modes.is_empty() {
        return Err(HarnessError::Plan("no modes requested".into()));
    }
    if !(pause_seconds >= 0.0 && pause_seconds.is_finite()) {
        return Err(HarnessError::Config(format!("pause must be non-negative, got {pause_seconds}")));
    }
    let mut combos = Vec::new();
    for &mode in modes {
        for name in registry.names() {
            if registry.get(name, mode).is_none() {
                continue;
            }
            for file in files {
                combos.push(Combo {
                    run_ordinal: 0,
                    codec: name.to_string(),
                    file: file.clone(),
                    mode,
                });
            }
        }
    }
    if combos.is_empty() {
        return Err(HarnessError::Plan("no codec supports the requested modes".into()));
    }
    XorShift64Star::new(seed).shuffle(&mut combos);
    for (i, c) in combos.iter_mut().enumerate() {
        c.run_ordinal = i as u64 + 1;
    }
    let time_scale = registry
        .codecs
        .iter()
        .filter(|c| c.time_scale != 1.0)
        .map(|c| (c.short_name.clone(), c.time_scale))
        .collect();
    Ok(RunPlan {
        combos,
        seed,
        pause_seconds,
        time_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Application, Builtin, CodecClass, CodecSpec};
    use std::collections::BTreeSet;

    fn registry(n: usize) -> CodecRegistry {
        CodecRegistry::new(
            (0..n)
                .map(|i| CodecSpec::builtin(&format!("C{i:02}"), CodecClass::ZIP, Application::GLO, Builtin::Ari))
                .collect(),
        )
        .unwrap()
    }

    fn files(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("F{i:02}")).collect()
    }

    #[test]
    fn reference_sequence() {
        // reference values from a direct transcription of the recurrence
        let mut x: u64 = 1;
        let mut expect = Vec::new();
        for _ in 0..3 {
            x ^= x >> 12;
            x ^= x << 25;
            x ^= x >> 27;
            expect.push(x.wrapping_mul(2685821657736338717));
        }
        let mut g = XorShift64Star::new(1);
        let got: Vec<u64> = (0..3).map(|_| g.next_u64()).collect();
        assert_eq!(got, expect);
        assert_eq!(got[0], 5180492295206395165);
    }

    #[test]
    fn full_cross_product_size() {
        let p = build_plan(&files(44), &registry(14), 7, &[Mode::Default], 15.0).unwrap();
        assert_eq!(p.combos.len(), 616);
        let ordinals: Vec<u64> = p.combos.iter().map(|c| c.run_ordinal).collect();
        assert_eq!(ordinals, (1..=616).collect::<Vec<u64>>());
    }

    #[test]
    fn permutation_of_all_pairs() {
        let p = build_plan(&files(3), &registry(2), 99, &[Mode::Default], 0.0).unwrap();
        let got: BTreeSet<(String, String)> = p.combos.iter().map(|c| (c.codec.clone(), c.file.clone())).collect();
        let mut want = BTreeSet::new();
        for c in ["C00", "C01"] {
            for f in ["F00", "F01", "F02"] {
                want.insert((c.to_string(), f.to_string()));
            }
        }
        assert_eq!(p.combos.len(), 6);
        assert_eq!(got, want);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = build_plan(&files(10), &registry(4), 42, &[Mode::Default], 0.0).unwrap();
        let b = build_plan(&files(10), &registry(4), 42, &[Mode::Default], 0.0).unwrap();
        let c = build_plan(&files(10), &registry(4), 43, &[Mode::Default], 0.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.combos, c.combos);
    }

    #[test]
    fn modes_and_errors() {
        let reg = CodecRegistry::builtins();
        let p = build_plan(&files(2), &reg, 1, &[Mode::Default, Mode::Maximum], 0.0).unwrap();
        let max: Vec<&Combo> = p.combos.iter().filter(|c| c.mode == Mode::Maximum).collect();
        assert_eq!(max.len(), 2);
        assert!(max.iter().all(|c| c.codec == "XMI"));
        assert!(build_plan(&[], &reg, 1, &[Mode::Default], 0.0).is_err());
        assert!(build_plan(&files(1), &CodecRegistry::default(), 1, &[Mode::Default], 0.0).is_err());
        assert!(build_plan(&files(1), &reg, 1, &[Mode::Default], -1.0).is_err());
    }
}
