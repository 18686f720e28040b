//! Propagation math: air-to-ground free-space links and fading vehicle-to-vehicle links.
//!
//! Every function is pure. Random draws take the caller's RNG so a run owns
//! all of its randomness.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::domain::{AirPoint, RoadPoint};
use crate::error::DomainError;
use crate::scalar::Scalar;

/// Distance, gain and SNR of one link evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample<F> {
    pub distance: F,
    pub gain: F,
    pub snr: F,
}

/// 3D distance between a hovering UAV and a vehicle. Never below the altitude.
pub fn a2g_distance<F: Scalar>(uav: &AirPoint<F>, veh: &RoadPoint<F>) -> F {
    let dx = veh.x - uav.x;
    let dy = veh.y - uav.y;
    (dx * dx + dy * dy + uav.h * uav.h).sqrt()
}

/// Free-space gain `g0 / d^2` with `g0` the gain at 1 m.
pub fn a2g_gain<F: Scalar>(d: F, g0: F) -> Result<F, DomainError> {
    if !(d > F::zero()) {
        return Err(DomainError::NonPositiveDistance(d.as_f64()));
    }
    Ok(g0 / (d * d))
}

/// SNR of the UAV-to-vehicle link; zero when the vehicle is not assigned to the UAV.
pub fn a2g_snr<F: Scalar>(assigned: bool, p_uav: F, gain: F, noise: F) -> Result<F, DomainError> {
    if !assigned {
        return Ok(F::zero());
    }
    if !(noise > F::zero()) {
        return Err(DomainError::NonPositiveNoise(noise.as_f64()));
    }
    Ok(p_uav * gain / noise)
}

/// Large-scale V2V gain `mu * L * d^-eta`.
pub fn v2v_large_scale<F: Scalar>(d: F, shadow_mu: F, path_loss: F, eta: F) -> Result<F, DomainError> {
    if !(d > F::zero()) {
        return Err(DomainError::NonPositiveDistance(d.as_f64()));
    }
    if !(shadow_mu > F::zero()) {
        return Err(DomainError::NonPositiveShadowing(shadow_mu.as_f64()));
    }
    Ok(shadow_mu * path_loss * d.powf(-eta))
}

pub fn v2v_gain<F: Scalar>(large_scale: F, fast_fading: F) -> Result<F, DomainError> {
    if fast_fading < F::zero() {
        return Err(DomainError::NegativeFading(fast_fading.as_f64()));
    }
    Ok(fast_fading * large_scale)
}

pub fn v2v_snr<F: Scalar>(p_vehicle: F, gain: F, noise: F) -> Result<F, DomainError> {
    if !(noise > F::zero()) {
        return Err(DomainError::NonPositiveNoise(noise.as_f64()));
    }
    Ok(p_vehicle * gain / noise)
}

pub fn dbm_to_watts<F: Scalar>(p_dbm: F) -> F {
    F::lit(10.0).powf(p_dbm / F::lit(10.0)) * F::lit(1e-3)
}

/// Unit-mean exponential draw (Rayleigh power fading).
pub fn sample_fast_fading<F: Scalar, R: Rng + ?Sized>(rng: &mut R) -> F {
    let f: f64 = Exp1.sample(rng);
    F::lit(f)
}

/// Log-normal shadowing factor with median 1 and the given spread in dB.
pub fn sample_shadowing<F: Scalar, R: Rng + ?Sized>(rng: &mut R, sigma_db: F) -> F {
    let z: f64 = StandardNormal.sample(rng);
    let sigma_ln = sigma_db.as_f64() * std::f64::consts::LN_10 / 10.0;
    F::lit((sigma_ln * z).exp())
}

/// Parameters of a V2V link evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V2vParams<F> {
    pub tx_power: F,
    pub noise: F,
    pub path_loss: F,
    pub exponent: F,
    pub shadowing_db: F,
    /// Draw shadowing and fast fading; otherwise use the median large-scale gain.
    pub faded: bool,
}

/// Evaluates a V2V link between two ground points.
///
/// The distance is clamped at the 1 m reference distance; co-located vehicles
/// in the same lane would otherwise have unbounded gain.
pub fn v2v_link<F: Scalar, R: Rng + ?Sized>(
    a: &RoadPoint<F>,
    b: &RoadPoint<F>,
    params: &V2vParams<F>,
    rng: &mut R,
) -> LinkSample<F> {
    let distance = a.planar_distance(b).max(F::one());
    let (mu, f) = if params.faded {
        (sample_shadowing(rng, params.shadowing_db), sample_fast_fading(rng))
    } else {
        (F::one(), F::one())
    };
    let large = v2v_large_scale(distance, mu, params.path_loss, params.exponent)
        .expect("clamped distance and log-normal shadowing are positive");
    let gain = v2v_gain(large, f).expect("exponential draws are non-negative");
    let snr = v2v_snr(params.tx_power, gain, params.noise).unwrap_or_else(|_| F::zero());
    LinkSample { distance, gain, snr }
}
