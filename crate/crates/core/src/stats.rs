//! Small numeric helpers shared by the policies, metrics and harness.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{numeric, Result};

/// Indices attaining the maximum of `values`, compared exactly.
pub fn argmax_set(values: &[f64]) -> Vec<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut winners = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v > best {
            best = v;
            winners.clear();
            winners.push(i);
        } else if v == best {
            winners.push(i);
        }
    }
    winners
}

/// Argmax with uniform random tie-breaking. Panics on an empty slice.
pub fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let winners = argmax_set(values);
    match winners.len() {
        0 => panic!("argmax of an empty or all-NaN slice"),
        1 => winners[0],
        _ => *winners.choose(rng).expect("non-empty"),
    }
}

/// Expected value of `payoff[argmax(scores)]` when ties are broken uniformly.
pub fn tie_averaged_payoff(scores: &[f64], payoff: &[f64]) -> f64 {
    let winners = argmax_set(scores);
    winners.iter().map(|&i| payoff[i]).sum::<f64>() / winners.len() as f64
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(numeric(format!(
            "pearson: length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(numeric("pearson: need at least two points"));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(numeric("pearson: zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ordinary least squares fit `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.len() != ys.len() || sxx <= 0.0 {
        return Err(numeric("linear_fit: degenerate abscissa"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators so the loop vectorises
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pearson_hand_values() {
        // textbook: x=(1,2,3,4,5), y=(2,4,5,4,5) -> Sxy=6, Sxx=10, Syy=6
        let r = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
        assert!((r - 6.0 / 60.0f64.sqrt()).abs() < 1e-12);
        let xs = [0.1, 0.5, 0.2];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn ties_are_shared() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0usize; 3];
        for _ in 0..3000 {
            counts[argmax_random_tie(&[1.0, 0.0, 1.0], &mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!(counts[0] > 1300 && counts[2] > 1300);
        assert_eq!(tie_averaged_payoff(&[1.0, 0.0, 1.0], &[0.2, 0.9, 0.6]), 0.4);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..11).map(|i| 1.0 - i as f64).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
