use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, StudentT};

use super::SampleSource;
use crate::data::MomentSpec;
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::rng::StreamRng;
use crate::stats::dot;

// Integration runs over u = ln t on [U_LO, U_HI]; the power-law tail beyond
// e^U_HI is added analytically.
const U_LO: f64 = -40.0;
const U_HI: f64 = 60.0;
const PIECES: usize = 400;
const NODES: usize = 32;

/// `E|T|^k` for a standard Student-t variable with `dof` degrees of freedom
/// (`dof > k`), by numerical integration of the unnormalized density.
pub fn student_t_abs_moment(k: f64, dof: f64) -> Result<f64> {
    if !(k >= 0.0 && dof > k) {
        return Err(Error::invalid(format!(
            "E|T|^{k} is infinite for {dof} degrees of freedom"
        )));
    }
    let gl = GaussLegendre::cached(NODES);
    let log_kernel = |t2: f64| -0.5 * (dof + 1.0) * (t2 / dof).ln_1p();
    let edges: Vec<f64> = (0..=PIECES)
        .map(|i| U_LO + (U_HI - U_LO) * i as f64 / PIECES as f64)
        .collect();
    // int_0^inf t^p kernel(t) dt = int e^{(p+1)u} kernel(e^u) du
    let integral = |p: f64| {
        let body = gl.integrate_pieces(&edges, |u| {
            ((p + 1.0) * u + log_kernel((2.0 * u).exp())).exp()
        });
        // For t > T the kernel is dof^{(dof+1)/2} t^{-(dof+1)} to within
        // (dof+1) dof / (2 T^2), far below rounding.
        let t_hi = U_HI.exp();
        let tail = ((dof + 1.0) / 2.0 * dof.ln() + (p - dof) * t_hi.ln()).exp() / (dof - p);
        // Below e^U_LO the kernel is 1.
        let head = (U_LO * (p + 1.0)).exp() / (p + 1.0);
        body + tail + head
    };
    Ok(integral(k) / integral(0.0))
}

fn scale_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Scale `s` with `E|s T|^k = 1`, cached per `(k, dof)`.
fn unit_moment_scale(k: f64, dof: f64) -> Result<f64> {
    let key = k.to_bits() ^ dof.to_bits().rotate_left(17);
    if let Some(s) = scale_cache().lock().expect("cache lock").get(&key) {
        return Ok(*s);
    }
    let s = student_t_abs_moment(k, dof)?.powf(-1.0 / k);
    scale_cache().lock().expect("cache lock").insert(key, s);
    Ok(s)
}

/// Coordinates i.i.d. `mu_j + s T_j` with `T_j` Student-t, scaled so every
/// coordinate has `k`-th absolute central moment exactly 1.
#[derive(Debug, Clone)]
pub struct StudentTDist {
    mu: Vec<f64>,
    k: f64,
    dof: f64,
    scale: f64,
    t: StudentT<f64>,
}

/// Student-t coordinates with `k + 0.1` degrees of freedom.
pub fn student_t_coordwise(k: f64, d: usize, mu: Vec<f64>) -> Result<StudentTDist> {
    StudentTDist::with_dof(k, k + 0.1, d, mu)
}

impl StudentTDist {
    pub fn with_dof(k: f64, dof: f64, d: usize, mu: Vec<f64>) -> Result<Self> {
        if !(k.is_finite() && k >= 2.0) {
            return Err(Error::invalid(format!(
                "moment order k must be >= 2, got {k}"
            )));
        }
        if d == 0 || mu.len() != d {
            return Err(Error::invalid(format!(
                "mean has {} coordinates, expected {d}",
                mu.len()
            )));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("mean must be finite"));
        }
        let scale = unit_moment_scale(k, dof)?;
        let t = StudentT::new(dof).map_err(|e| Error::invalid(format!("student-t: {e}")))?;
        Ok(StudentTDist {
            mu,
            k,
            dof,
            scale,
            t,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn moment(&self) -> MomentSpec {
        MomentSpec {
            k: self.k,
            gamma: 1.0,
        }
    }

    /// One centered, scaled coordinate.
    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.t.sample(rng)
    }
}

impl SampleSource for StudentTDist {
    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn mean(&self) -> Vec<f64> {
        self.mu.clone()
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.mu) {
            *o = m + self.noise(rng);
        }
    }
}

/// Rows `(a, <w_true, a> + xi)` with Rademacher `a` and heavy-tailed `xi`.
#[derive(Debug, Clone)]
pub struct RegressionSource {
    pub w_true: Vec<f64>,
    pub noise: StudentTDist,
}

impl RegressionSource {
    pub fn new(w_true: Vec<f64>, k: f64) -> Result<Self> {
        if w_true.is_empty() {
            return Err(Error::invalid("regression needs at least one feature"));
        }
        Ok(RegressionSource {
            w_true,
            noise: student_t_coordwise(k, 1, vec![0.0])?,
        })
    }
}

impl SampleSource for RegressionSource {
    fn dim(&self) -> usize {
        self.w_true.len() + 1
    }

    fn mean(&self) -> Vec<f64> {
        // Rademacher features and symmetric noise are centered.
        vec![0.0; self.dim()]
    }

    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]) {
        let d = self.w_true.len();
        for a in &mut out[..d] {
            *a = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        out[d] = dot(&self.w_true, &out[..d]) + self.noise.noise(rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    fn closed_form(k: f64, nu: f64) -> f64 {
        (0.5 * k * nu.ln() + ln_gamma((k + 1.0) / 2.0) + ln_gamma((nu - k) / 2.0)
            - 0.5 * std::f64::consts::PI.ln()
            - ln_gamma(nu / 2.0))
        .exp()
    }

    #[test]
    fn integration_matches_gamma_closed_form() {
        for &(k, nu) in &[
            (2.0, 2.1),
            (2.0, 5.0),
            (3.0, 3.1),
            (4.0, 4.1),
            (8.0, 8.1),
            (2.5, 30.0),
        ] {
            let num = student_t_abs_moment(k, nu).unwrap();
            let exact = closed_form(k, nu);
            assert!(
                ((num - exact) / exact).abs() < 1e-8,
                "k={k} nu={nu}: {num} vs {exact}"
            );
        }
        // Variance of t_nu is nu / (nu - 2).
        let v = student_t_abs_moment(2.0, 6.0).unwrap();
        assert!((v - 1.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_orders() {
        assert!(student_t_coordwise(1.5, 2, vec![0.0; 2]).is_err());
        assert!(student_t_coordwise(2.0, 2, vec![0.0; 3]).is_err());
        assert!(student_t_abs_moment(3.0, 3.0).is_err());
    }
}
