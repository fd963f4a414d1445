//! Seeded random streams and the few variates the samplers need.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Independent stream for `(seed, replicate, attempt)`. The attempt index
/// separates escalation rounds within one replicate.
pub fn substream(seed: u64, replicate: u64, attempt: u64) -> ChaCha8Rng {
    assert!(attempt < 1 << 16, "attempt index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 16) | attempt);
    rng
}

/// Poisson variate; a zero mean gives zero.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite Poisson mean").sample(rng) as u64
}

/// Uniform direction on the unit sphere in `ℝ^dim`, written into `out`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut s = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            s += *x * *x;
        }
        if s > 0.0 {
            let s = s.sqrt();
            out.iter_mut().for_each(|x| *x /= s);
            return;
        }
    }
}

/// Uniform point in the ball of radius `radius` in `ℝ^dim`.
pub fn in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    unit_vector(rng, &mut v);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    v.iter_mut().for_each(|x| *x *= r);
    v
}
