//! Synthetic heavy-tailed data, the benchmark losses, and the lower-bound
//! constructions.

mod fano;
mod heavy_tail;
mod losses;
mod packing;

pub use fano::{fano_bound, FanoParams};
pub use heavy_tail::{student_t_abs_moment, student_t_coordwise, RegressionSource, StudentTDist};
pub use losses::{
    make_loss, LinearLoss, LinearRegressionLoss, LossKind, LossParams, QuadraticLoss,
};
pub use packing::{
    gv_code, gv_distance, gv_target, hamming, packing_distribution, tv_and_kl, Codeword,
    Divergence, PackingDistribution,
};

use crate::data::Dataset;
use crate::error::Result;
use crate::par;
use crate::rng::{RngStream, StreamRng};

/// Rows drawn from one child stream when materializing a dataset.
pub const ROWS_PER_CHUNK: usize = 4096;

/// A distribution over `R^dim` with a known mean.
pub trait SampleSource: Send + Sync {
    fn dim(&self) -> usize;

    fn mean(&self) -> Vec<f64>;

    /// Writes one draw into `out` (length [`SampleSource::dim`]).
    fn sample_into(&self, rng: &mut StreamRng, out: &mut [f64]);

    /// `n` i.i.d. rows. Chunk `i` of [`ROWS_PER_CHUNK`] rows is drawn from
    /// `stream.indexed("chunk", i)`, so the result does not depend on the
    /// number of workers.
    fn sample_dataset(&self, n: usize, stream: &RngStream) -> Result<Dataset> {
        let d = self.dim();
        let mut values = vec![0.0; n * d];
        if n > 0 {
            par::for_each_chunk_mut(&mut values, ROWS_PER_CHUNK * d, |ci, chunk| {
                let mut rng = stream.indexed("chunk", ci as u64).rng();
                for row in chunk.chunks_exact_mut(d) {
                    self.sample_into(&mut rng, row);
                }
            });
        }
        Dataset::from_row_major(values, n, d)
    }
}
