//! Seedable, splittable random streams and Haar-distributed matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::decomp::qr;
use super::matrix::{ComplexMatrix, C64};

/// Named random stream: a seed plus a stream path.
///
/// `split(i)` derives an independent child stream, so every trial or restart
/// can own its generator without coordination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    path: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    pub fn split(&self, index: u64) -> Self {
        Self { seed: self.seed, path: splitmix64(self.path ^ splitmix64(index.wrapping_add(1))) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard complex Gaussian entry, E|z|² = 1.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-random isometry (rows ≥ cols): QR of a Ginibre matrix with the
/// phases of R's diagonal moved into Q.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let z = random_gaussian(rows, cols, rng);
    let (mut q, r) = qr(&z).expect("Gaussian matrix has finite entries");
    for c in 0..cols {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..rows {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    haar_isometry(dim, dim, rng)
}

/// Uniformly random unit vector in C^dim.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    haar_isometry(dim, 1, rng).col(0)
}

/// Hermitian matrix (G + G*)/2 from a Ginibre G.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    random_gaussian(dim, dim, rng).hermitian_part()
}

/// Induced-measure density matrix G G* / tr(G G*) with G of shape dim×rank.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_gaussian(dim, rank.max(1), rng);
    let p = g.matmul(&g.adjoint());
    let t = p.trace().re;
    p.scale_real(1.0 / t).hermitian_part()
}
