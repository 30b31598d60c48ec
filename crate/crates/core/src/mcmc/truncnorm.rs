//! One-sided truncated standard normal draws.
//!
//! Below the mean the plain rejection sampler accepts at least half the
//! time; above it an exponential proposal (Robert, 1995) keeps the
//! acceptance rate above 0.75 however far out the bound sits.

use rand::Rng;
use rand_distr::StandardNormal;

/// Draws `z ~ N(0, 1)` conditioned on `z >= lower`.
pub fn std_normal_above<R: Rng + ?Sized>(rng: &mut R, lower: f64) -> f64 {
    if lower <= 0.0 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= lower {
                return z;
            }
        }
    }
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    loop {
        let u: f64 = rng.random();
        let z = lower - (1.0 - u).ln() / rate;
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() <= accept {
            return z;
        }
    }
}

/// Draws `z ~ N(0, 1)` conditioned on `z <= upper`.
pub fn std_normal_below<R: Rng + ?Sized>(rng: &mut R, upper: f64) -> f64 {
    -std_normal_above(rng, -upper)
}

/// Latent utility for an observed vote: `N(mean, 1)` truncated to the
/// positive half-line for Yes and the negative half-line for No.
pub fn latent_utility<R: Rng + ?Sized>(rng: &mut R, mean: f64, yes: bool) -> f64 {
    if yes {
        mean + std_normal_above(rng, -mean)
    } else {
        mean + std_normal_below(rng, -mean)
    }
}
