use rand::seq::SliceRandom;

use super::SampleSource;
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};
use rand::Rng;

/// Binary word stored as one `0`/`1` byte per position.
pub type Codeword = Vec<u8>;

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Minimum pairwise distance the code enforces: `ceil(d / 8)`.
pub fn gv_distance(d: usize) -> usize {
    d.div_ceil(8)
}

/// Size the greedy construction aims for: `ceil(2^(d/8))`.
pub fn gv_target(d: usize) -> usize {
    2f64.powf(d as f64 / 8.0).ceil() as usize
}

// Full enumeration is used up to this length.
const ENUMERATE_MAX_D: usize = 24;

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn word_from(ones: &[usize], d: usize) -> Codeword {
    let mut w = vec![0u8; d];
    for &i in ones {
        w[i] = 1;
    }
    w
}

/// Greedy constant-weight code: words of weight `d/2`, pairwise distance at
/// least `ceil(d/8)`, stopping at `ceil(2^(d/8))` words.
///
/// For `d <= 24` candidates are visited in lexicographic order of their
/// support sets and `rng` is unused; longer codes draw random candidates.
/// The greedy search can stop short of the target, in which case the
/// smaller code is returned with a warning; fewer than two words is an error.
pub fn gv_code(d: usize, rng: &RngStream) -> Result<Vec<Codeword>> {
    if d < 8 || !d.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "code length must be even and at least 8, got {d}"
        )));
    }
    let half = d / 2;
    let dist = gv_distance(d);
    let target = gv_target(d);
    let mut kept: Vec<Codeword> = Vec::with_capacity(target);
    let offer = |w: Codeword, kept: &mut Vec<Codeword>| {
        if kept.iter().all(|k| hamming(k, &w) >= dist) {
            kept.push(w);
        }
        kept.len() >= target
    };

    if d <= ENUMERATE_MAX_D {
        let mut idx: Vec<usize> = (0..half).collect();
        loop {
            if offer(word_from(&idx, d), &mut kept) || !next_combination(&mut idx, d) {
                break;
            }
        }
    } else {
        let mut g: StreamRng = rng.child("gv_code").rng();
        let mut positions: Vec<usize> = (0..d).collect();
        let attempts = 1000 + 100 * target;
        for _ in 0..attempts {
            positions.shuffle(&mut g);
            if offer(word_from(&positions[..half], d), &mut kept) {
                break;
            }
        }
    }

    if kept.len() < 2 {
        return Err(Error::CodeTooSmall {
            achieved: kept.len(),
            target: 2,
        });
    }
    if kept.len() < target {
        log::warn!(
            "gv_code({d}): greedy search found {} of {target} words",
            kept.len()
        );
    }
    Ok(kept)
}

/// `(1 - p) delta_0 + p delta_{p^(-1/k) nu}` for a binary pattern `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingDistribution {
    pub nu: Codeword,
    pub p: f64,
    pub k: f64,
}

pub fn packing_distribution(nu: Codeword, p: f64, k: f64) -> Result<PackingDistribution> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!(
            "mixing probability must lie in (0, 1], got {p}"
        )));
    }
    if !(k.is_finite() && k >= 2.0) {
        return Err(Error::invalid(format!(
            "moment order k must be >= 2, got {k}"
        )));
    }
    if nu.is_empty() || nu.iter().any(|&b| b > 1) {
        return Err(Error::invalid("pattern must be a nonempty 0/1 vector"));
    }
    Ok(PackingDistribution { nu, p, k })
}

impl PackingDistribution {
    pub fn weight(&self) -> usize {
        self.nu.iter().filter(|&&b| b == 1).count()
    }

    /// Magnitude of the nonzero atom's active coordinates: `p^(-1/k)`.
    pub fn atom_height(&self) -> f64 {
        self.p.powf(-1.0 / self.k)
    }

    pub fn atom(&self) -> Vec<f64> {
        let h = self.atom_height();
        self.nu.iter().map(|&b| h * b as f64).collect()
    }

    /// `p^((k-1)/k) nu`.
    pub fn mean_vec(&self) -> Vec<f64> {
        let m = self.p.powf((self.k - 1.0) / self.k);
        self.nu.iter().map(|&b| m * b as f64).collect()
    }

    /// Exact `E|X_j - mu_j|^k` on an active coordinate (zero elsewhere).
    pub fn central_moment(&self) -> f64 {
        let (p, k) = (self.p, self.k);
        let mu = p.powf((k - 1.0) / k);
        (1.0 - p) * mu.powf(k) + p * (self.atom_height() - mu).abs().powf(k)
    }

    /// Probability vectors of `self` and `other` on their joint support.
    pub fn joint_pmf(&self, other: &PackingDistribution) -> (Vec<f64>, Vec<f64>) {
        let mut support: Vec<Vec<f64>> = vec![vec![0.0; self.nu.len()]];
        let mut p = vec![0.0];
        let mut q = vec![0.0];
        let mut add = |x: Vec<f64>, mass: f64, into_p: bool| {
            let i = match support.iter().position(|s| *s == x) {
                Some(i) => i,
                None => {
                    support.push(x);
                    p.push(0.0);
                    q.push(0.0);
                    support.len() - 1
                }
            };
            if into_p {
                p[i] += mass;
            } else {
                q[i] += mass;
            }
        };
        add(vec![0.0; self.nu.len()], 1.0 - self.p, true);
        add(self.atom(), self.p, true);
        add(vec![0.0; other.nu.len()], 1.0 - other.p, false);
        add(other.atom(), other.p, false);
        (p, q)
    }
}

impl SampleSource for PackingDistribution {
    fn dim(&self) -> usize {
        self.nu.len()
    }

    fn mean(&self) -> Vec<f64> {
        self.mean_vec()
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        if rng.random::<f64>() < self.p {
            let h = self.atom_height();
            for (o, &b) in out.iter_mut().zip(&self.nu) {
                *o = h * b as f64;
            }
        } else {
            out.fill(0.0);
        }
    }
}

/// A divergence that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn value(&self) -> f64 {
        match *self {
            Divergence::Finite(v) => v,
            Divergence::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Divergence::Finite(_))
    }
}

fn check_pmf(p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(
            "probabilities must be finite and nonnegative",
        ));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Total variation and `KL(p || q)` for distributions on a shared finite
/// support, with `0 log 0 = 0`.
pub fn tv_and_kl(p: &[f64], q: &[f64]) -> Result<(f64, Divergence)> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::invalid(
            "distributions must share a nonempty support",
        ));
    }
    check_pmf(p)?;
    check_pmf(q)?;
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok((tv, Divergence::Infinite));
        }
        kl += a * (a / b).ln();
    }
    Ok((tv, Divergence::Finite(kl.max(0.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combination_enumeration_is_complete() {
        let mut idx: Vec<usize> = (0..4).collect();
        let mut count = 1;
        while next_combination(&mut idx, 8) {
            count += 1;
        }
        assert_eq!(count, 70);
    }

    #[test]
    fn point_mass_at_full_probability() {
        let q = packing_distribution(vec![1, 0, 1, 0], 1.0, 3.0).unwrap();
        assert_eq!(q.atom(), vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(q.mean_vec(), q.atom());
        assert_eq!(q.central_moment(), 0.0);
    }

    #[test]
    fn rejects_degenerate_mixing() {
        assert!(packing_distribution(vec![1, 0], 0.0, 2.0).is_err());
        assert!(packing_distribution(vec![1, 2], 0.5, 2.0).is_err());
    }

    #[test]
    fn divergence_examples() {
        let (tv, kl) = tv_and_kl(&[0.2, 0.8], &[0.2, 0.8]).unwrap();
        assert_eq!((tv, kl), (0.0, Divergence::Finite(0.0)));
        let (tv, kl) = tv_and_kl(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((tv, kl), (1.0, Divergence::Infinite));
        let (_, kl) = tv_and_kl(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expect = 0.5 * (2.0f64).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((kl.value() - expect).abs() < 1e-15);
        assert!(tv_and_kl(&[0.5, 0.6], &[0.5, 0.5]).is_err());
    }
}
