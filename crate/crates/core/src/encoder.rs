//! Feature-grid production: a deterministic pseudo-encoder for
//! self-contained runs, plus validated assembly of externally computed
//! features.
//!
//! The pseudo-encoder maps every token to
//! `W_p * [mean_r, mean_g, mean_b, row/n, col/n]`, where the RGB means are
//! patch averages scaled to [0, 1] and `W_p` is a `d x 5` matrix drawn once
//! per seed from [`SplitMix64`] normals in row-major order. Tiles are
//! encoded independently with the same `W_p` and reassembled onto the local
//! grid in tile order. The positional channels make spatially distinct
//! masks poolable into distinct features, which is what lets selection
//! heads learn from synthetic data.

use alloc::format;
use alloc::vec::Vec;

use crate::grid::GridConfig;
use crate::rng::SplitMix64;
use crate::tensor::{Dtype, Tensor};
use crate::{Error, Result};

/// Global and local feature grids with their geometry.
#[derive(Debug, Clone)]
pub struct FeatureMaps {
    /// f32 `[n_g, n_g, d]`.
    pub global: Tensor,
    /// f32 `[n_l, n_l, d]`.
    pub local: Tensor,
    pub cfg: GridConfig,
}

impl FeatureMaps {
    /// Validate shapes against `cfg` and require finite entries.
    pub fn new(global: Tensor, local: Tensor, cfg: GridConfig) -> Result<FeatureMaps> {
        let check = |t: &Tensor, side: usize, name: &str| -> Result<()> {
            if t.dtype() != Dtype::F32 {
                return Err(Error::Input(format!("{name} features must be f32")));
            }
            let want = [side, side, cfg.channels];
            if t.shape() != want {
                return Err(Error::Config(format!(
                    "{name} features shape {:?} does not match configured {:?}",
                    t.shape(),
                    want
                )));
            }
            if !t.all_finite() {
                return Err(Error::Numeric(format!("{name} features contain non-finite values")));
            }
            Ok(())
        };
        check(&global, cfg.token_side, "global")?;
        check(&local, cfg.local_side(), "local")?;
        Ok(FeatureMaps { global, local, cfg })
    }

    pub fn channels(&self) -> usize {
        self.cfg.channels
    }
}

/// Draw the `d x 5` projection used by the pseudo-encoder.
pub fn projection_matrix(channels: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    (0..channels * 5).map(|_| rng.next_normal()).collect()
}

/// Encode one `side x side` view into an `n x n x d` feature grid.
fn encode_view(
    pixels: &[u8],
    side: usize,
    tokens_per_side: usize,
    w_p: &[f64],
    channels: usize,
    out: &mut dyn FnMut(usize, usize, Vec<f32>),
) {
    let patch = side / tokens_per_side;
    let denom = (patch * patch) as f64 * 255.0;
    for a in 0..tokens_per_side {
        for b in 0..tokens_per_side {
            let mut sums = [0u64; 3];
            for r in a * patch..(a + 1) * patch {
                for c in b * patch..(b + 1) * patch {
                    let at = (r * side + c) * 3;
                    sums[0] += pixels[at] as u64;
                    sums[1] += pixels[at + 1] as u64;
                    sums[2] += pixels[at + 2] as u64;
                }
            }
            let x = [
                sums[0] as f64 / denom,
                sums[1] as f64 / denom,
                sums[2] as f64 / denom,
                a as f64 / tokens_per_side as f64,
                b as f64 / tokens_per_side as f64,
            ];
            let feature: Vec<f32> = (0..channels)
                .map(|ch| {
                    let row = &w_p[ch * 5..ch * 5 + 5];
                    let mut acc = 0.0f64;
                    for j in 0..5 {
                        acc += row[j] * x[j];
                    }
                    acc as f32
                })
                .collect();
            out(a, b, feature);
        }
    }
}

/// Deterministic stand-in for a pretrained vision encoder.
///
/// Pure function of `(pixels, cfg, seed)`; two calls with equal inputs
/// produce bit-identical feature grids.
pub fn pseudo_encode(
    global_image: &Tensor,
    tiles: &Tensor,
    cfg: &GridConfig,
    seed: u64,
) -> Result<FeatureMaps> {
    let side = cfg.base_side;
    let n = cfg.magnification;
    if global_image.shape() != [side, side, 3] {
        return Err(Error::Input(format!(
            "global image shape {:?}, expected [{side}, {side}, 3]",
            global_image.shape()
        )));
    }
    if tiles.shape() != [n * n, side, side, 3] {
        return Err(Error::Input(format!(
            "tiles shape {:?}, expected [{}, {side}, {side}, 3]",
            tiles.shape(),
            n * n
        )));
    }
    let d = cfg.channels;
    let w_p = projection_matrix(d, seed);

    let n_g = cfg.token_side;
    let mut global = alloc::vec![0.0f32; n_g * n_g * d];
    encode_view(
        global_image.as_u8()?,
        side,
        n_g,
        &w_p,
        d,
        &mut |a, b, feature| {
            global[(a * n_g + b) * d..(a * n_g + b + 1) * d].copy_from_slice(&feature);
        },
    );

    let n_l = cfg.local_side();
    let mut local = alloc::vec![0.0f32; n_l * n_l * d];
    let tile_data = tiles.as_u8()?;
    let tile_len = side * side * 3;
    for ti in 0..n {
        for tj in 0..n {
            let t = ti * n + tj;
            let pixels = &tile_data[t * tile_len..(t + 1) * tile_len];
            encode_view(pixels, side, n_g, &w_p, d, &mut |a, b, feature| {
                let row = ti * n_g + a;
                let col = tj * n_g + b;
                local[(row * n_l + col) * d..(row * n_l + col + 1) * d]
                    .copy_from_slice(&feature);
            });
        }
    }

    FeatureMaps::new(
        Tensor::from_f32(&[n_g, n_g, d], global)?,
        Tensor::from_f32(&[n_l, n_l, d], local)?,
        *cfg,
    )
}
