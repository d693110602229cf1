//! Float helpers that behave identically with and without `std`.

/// Fixed-point step used for every recorded position and velocity.
pub const QUANTUM: f64 = 1e-4;

/// Snap a value onto the 4-decimal recording grid.
///
/// The simulator quantizes its state with this after every step, so the
/// values that come back from a 4-decimal text encoding are the same floats.
#[inline]
pub fn quantize(v: f64) -> f64 {
    // `+ 0.0` folds -0.0 into 0.0 so equal states encode to equal bytes.
    libm::round(v / QUANTUM) / 10_000.0 + 0.0
}

#[inline]
pub fn floor_i(v: f64) -> i32 {
    libm::floor(v) as i32
}

/// SplitMix64 finalizer, used to derive independent seeds.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a 2D integer coordinate with a salt, for texture grain and noise.
#[inline]
pub fn hash2(x: i64, y: i64, salt: u64) -> u64 {
    mix64((x as u64).wrapping_mul(0x9E37_79B1) ^ (y as u64).wrapping_mul(0x85EB_CA77) ^ salt.rotate_left(17))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantize_is_idempotent_and_kills_negative_zero() {
        for v in [0.0, -0.00001, 1.23456, -7.654321, 12.3456, 63.99995] {
            let q = quantize(v);
            assert_eq!(q, quantize(q));
            assert!(!(q == 0.0 && q.is_sign_negative()));
        }
        assert_eq!(quantize(1.23456), 1.2346);
    }

    #[test]
    fn quantized_values_survive_four_decimal_text() {
        for k in -200_000i64..200_000i64 {
            let v = quantize(k as f64 * 0.00037);
            let s = std::format!("{:.4}", v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }
}
