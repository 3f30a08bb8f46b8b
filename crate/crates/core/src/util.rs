use sha2::{Digest, Sha256};

/// Natural log clamped at zero. Accuracy formulas take logs of quantities
/// such as `2W` that can drop below one at desk scale.
pub(crate) fn ln_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

/// SplitMix64 finaliser, used to derive independent child seeds.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn digest_json<T: serde::Serialize>(value: &T) -> String {
    // serialisation of plain data structs cannot fail
    let bytes = serde_json::to_vec(value).expect("transcript serialises");
    hex_digest(&bytes)
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Number of grid cells of width `alpha` covering `[-w, w)`, with `w`
/// snapped up to an exact multiple of `alpha`.
pub(crate) fn grid_half_count(w: f64, alpha: f64) -> i64 {
    let k = (w / alpha - 1e-9).ceil() as i64;
    k.max(1)
}
