//! Counter-based pseudo-random generator.
//!
//! Every draw is a pure function of `(seed, domain, item, counter)`, so
//! generation is random-access and order-independent: any consumer in any
//! language reproduces the identical stream from the constants below.
//!
//! The mixer is the 64-bit finalizer
//!
//! ```text
//! z  = x + 0x9E3779B97F4A7C15
//! z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
//! z ^= z >> 27;  z *= 0x94D049BB133111EB
//! z ^= z >> 31
//! ```
//!
//! and a draw chains it over the four key words:
//! `mix(mix(mix(mix(seed) ^ domain) ^ item) ^ counter)`.
//!
//! Uniforms take the top 53 bits (`u = (z >> 11) · 2⁻⁵³ ∈ [0,1)`); Gaussians
//! use one Box-Muller pair per value from counters `2k` and `2k+1`:
//! `g = sqrt(−2·ln(1−u₁)) · cos(2π·u₂)`.

/// 64-bit finalizer (splitmix64 increment + mix).
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw 64-bit draw for key `(seed, domain, item, counter)`.
pub fn draw(seed: u64, domain: u64, item: usize, counter: usize) -> u64 {
    let z = mix64(seed);
    let z = mix64(z ^ domain);
    let z = mix64(z ^ item as u64);
    mix64(z ^ counter as u64)
}

/// Uniform in [0, 1) with 53 bits of precision.
pub fn uniform(seed: u64, domain: u64, item: usize, counter: usize) -> f64 {
    (draw(seed, domain, item, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via the Box-Muller cosine branch; value `k` consumes the
/// uniforms at counters `2k` and `2k+1`.
pub fn gaussian(seed: u64, domain: u64, item: usize, k: usize) -> f64 {
    let u1 = uniform(seed, domain, item, 2 * k);
    let u2 = uniform(seed, domain, item, 2 * k + 1);
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
