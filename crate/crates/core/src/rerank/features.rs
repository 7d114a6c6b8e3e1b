use std::collections::BTreeMap;

use crate::corpus::tokenize;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SIGN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit string hash (FNV-1a over the bytes, then a splitmix finalizer).
/// Stable across platforms and compiler versions.
pub fn term_hash(term: &str, seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ mix(seed);
    for &b in term.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix(h)
}

/// Hashed bag-of-terms vector of length `dim`, L2-normalized.
///
/// Each distinct term adds `ln(1 + tf) * ±1` at bucket `hash(t) mod dim`, the
/// sign coming from an independent hash. Empty text gives the zero vector.
pub fn featurize(text: &str, dim: usize, hash_seed: u64) -> Vec<f64> {
    let mut tf: BTreeMap<String, u32> = BTreeMap::new();
    for t in tokenize(text) {
        *tf.entry(t).or_default() += 1;
    }
    let mut v = vec![0.0; dim];
    if dim == 0 {
        return v;
    }
    for (term, count) in &tf {
        let bucket = (term_hash(term, hash_seed) % dim as u64) as usize;
        let sign = if term_hash(term, hash_seed ^ SIGN_SALT) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        v[bucket] += sign * f64::from(*count).ln_1p();
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}
