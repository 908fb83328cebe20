//! Standard normal distribution function.

use std::f64::consts::SQRT_2;

/// Φ(x), evaluated through `erfc` so both tails keep full relative precision.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Φ values from high-precision tables.
        let table = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_542_9),
            (-1.0, 0.158_655_253_931_457_05),
            (3.0, 0.998_650_101_968_369_9),
            (-3.0, 0.001_349_898_031_630_094_5),
            (0.674_489_750_196_081_7, 0.75),
            (-8.0, 6.220_960_574_271_785e-16),
        ];
        for (x, want) in table {
            assert!((std_normal_cdf(x) - want).abs() <= 1e-15, "x = {x}");
        }
    }

    #[test]
    fn symmetry() {
        for i in -60..=60 {
            let x = i as f64 / 10.0;
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() <= 2e-16);
        }
    }
}
