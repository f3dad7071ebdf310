//! Path-derived random streams.
//!
//! A stream is identified by a master seed and a path of labels such as
//! `["sweep", "n=1024", "trial=3", "step=17", "noise"]`. The generator for a
//! path is a pure function of `(master_seed, path)`, so work can be handed to
//! any worker in any order and still reproduce the sequential result.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Generator type handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha12Rng;

const DOMAIN_TAG: &[u8] = b"htdp/rng-stream/v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<String>,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        RngStream {
            master_seed,
            path: Vec::new(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[String] {
        &self.path
    }

    /// Child stream with `label` appended to the path.
    pub fn child(&self, label: impl std::fmt::Display) -> RngStream {
        let mut path = self.path.clone();
        path.push(label.to_string());
        RngStream {
            master_seed: self.master_seed,
            path,
        }
    }

    /// Shorthand for `child(format!("{name}={index}"))`.
    pub fn indexed(&self, name: &str, index: u64) -> RngStream {
        self.child(format_args!("{name}={index}"))
    }

    fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN_TAG);
        h.update(self.master_seed.to_le_bytes());
        for label in &self.path {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
        }
        h.finalize().into()
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        StreamRng::from_seed(self.digest())
    }

    /// 64-bit fingerprint of the stream, reported alongside results.
    pub fn seed_u64(&self) -> u64 {
        let d = self.digest();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn draws(s: &RngStream) -> Vec<u64> {
        let mut r = s.rng();
        (0..8).map(|_| r.random()).collect()
    }

    #[test]
    fn identical_paths_identical_streams() {
        let a = RngStream::new(7).child("trial").indexed("step", 3);
        let b = RngStream::new(7).child("trial").indexed("step", 3);
        assert_eq!(draws(&a), draws(&b));
        assert_eq!(a.seed_u64(), b.seed_u64());
    }

    #[test]
    fn distinct_paths_distinct_streams() {
        let root = RngStream::new(7);
        assert_ne!(
            draws(&root.indexed("step", 1)),
            draws(&root.indexed("step", 2))
        );
        assert_ne!(draws(&root), draws(&RngStream::new(8)));
        // Label boundaries matter: ["ab"] differs from ["a", "b"].
        assert_ne!(draws(&root.child("ab")), draws(&root.child("a").child("b")));
    }

    #[test]
    fn sibling_streams_look_independent() {
        // Correlation of uniform draws between sibling streams stays near zero.
        let root = RngStream::new(42);
        let mut a = root.child("left").rng();
        let mut b = root.child("right").rng();
        let n = 20_000;
        let (mut sab, mut sa, mut sb, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x: f64 = a.random();
            let y: f64 = b.random();
            sab += x * y;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - sa * sb / nf / nf;
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 4.0 / nf.sqrt(), "corr = {corr}");
    }
}
