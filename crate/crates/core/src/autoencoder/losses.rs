//! Closed-form objectives used by the autoencoder variants.

use ndarray::{Array2, Zip};

use super::tape::PROB_EPS;
use crate::error::{Error, Result};

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Binary cross-entropy `-mean[X ln X' + (1-X) ln(1-X')]` over every
/// position and vocabulary column, with `X'` clamped to `[1e-7, 1-1e-7]`.
pub fn reconstruction_loss(target: &Array2<f64>, predicted: &Array2<f64>) -> Result<f64> {
    if target.shape() != predicted.shape() {
        return Err(Error::ShapeMismatch(format!(
            "target {:?} vs predicted {:?}",
            target.shape(),
            predicted.shape()
        )));
    }
    if target.is_empty() {
        return Err(Error::ShapeMismatch("empty reconstruction".into()));
    }
    let mut total = 0.0;
    Zip::from(target).and(predicted).for_each(|&x, &p| {
        let p = clamp(p);
        total -= x * p.ln() + (1.0 - x) * (1.0 - p).ln();
    });
    Ok(total / target.len() as f64)
}

fn check_sigma(mu: &[f64], sigma: &[f64]) -> Result<()> {
    if mu.len() != sigma.len() {
        return Err(Error::ShapeMismatch(format!(
            "mu has {} entries, sigma {}",
            mu.len(),
            sigma.len()
        )));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {s}")));
    }
    Ok(())
}

/// `KL[N(mu, sigma^2) || N(0, 1)] = -1/2 * sum(1 + ln sigma^2 - mu^2 - sigma^2)`.
pub fn kl_divergence(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    check_sigma(mu, sigma)?;
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(m, s)| -0.5 * (1.0 + (s * s).ln() - m * m - s * s))
        .sum())
}

/// The printed variant of the KL term, with `ln sigma` in place of
/// `ln sigma^2`. Agrees with [`kl_divergence`] at `(0, 1)` but can go
/// negative elsewhere.
pub fn kl_divergence_literal(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    check_sigma(mu, sigma)?;
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(m, s)| -0.5 * (1.0 + s.ln() - m * m - s * s))
        .sum())
}

/// Discriminator objective: `mean(-ln d(z)) + mean(-ln(1 - d(q(x))))` where
/// `d_prior` are outputs on prior samples and `d_encoded` on encoded inputs.
pub fn discriminator_loss(d_prior: &[f64], d_encoded: &[f64]) -> f64 {
    let real = mean(d_prior.iter().map(|&d| -clamp(d).ln()));
    let fake = mean(d_encoded.iter().map(|&d| -(1.0 - clamp(d)).ln()));
    real + fake
}

/// Generator objective: `mean(-ln d(q(x)))`.
pub fn generator_loss(d_encoded: &[f64]) -> f64 {
    mean(d_encoded.iter().map(|&d| -clamp(d).ln()))
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    if n == 0 {
        0.0
    } else {
        it.sum::<f64>() / n as f64
    }
}
