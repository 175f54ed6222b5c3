use rand::Rng;

/// Draws a sampling rate for the attack query distribution with threshold `a` on `n` keys.
///
/// With `w = n / 2a`, the inverse rate is uniform on `[w*_a, w*_a + 7w/4]` where
/// `w*_a = w/2 + D` and `D ~ U[0, w/4]`. The result lies in `[2/(5w), 2/w]`, clamped to 1.
pub fn sample_rate<R: Rng + ?Sized>(a: f64, n: usize, rng: &mut R) -> f64 {
    let omega = n as f64 / (2.0 * a);
    let d = rng.random::<f64>() * omega / 4.0;
    let lo = omega / 2.0 + d;
    let inv = lo + rng.random::<f64>() * 1.75 * omega;
    (1.0 / inv).min(1.0)
}
