//! Image and token-grid geometry.
//!
//! The pipeline works on two views of the input image: a global view resized
//! to the encoder side `H_v`, and a local view resized to `N * H_v` and cut
//! into `N x N` encoder-sized tiles. On the token grids this induces a
//! stride-`N` partition: global token `(a, b)` owns the `N x N` block of
//! local tokens starting at `(a*N, b*N)`.

use alloc::format;
use alloc::vec::Vec;

use crate::tensor::Tensor;
use crate::{Error, Result};

/// Geometry shared by every stage: view sides, token counts, channel width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridConfig {
    /// Encoder input side in pixels (`H_v`).
    pub base_side: usize,
    /// Magnification of the local view (`N`).
    pub magnification: usize,
    /// Tokens per side of the global grid (`n_g`).
    pub token_side: usize,
    /// Feature channels (`d`).
    pub channels: usize,
}

impl GridConfig {
    pub fn new(
        base_side: usize,
        magnification: usize,
        token_side: usize,
        channels: usize,
    ) -> Result<GridConfig> {
        if base_side == 0 || magnification == 0 || token_side == 0 || channels == 0 {
            return Err(Error::Config(
                "grid sides, magnification, and channels must be nonzero".into(),
            ));
        }
        if base_side % token_side != 0 {
            return Err(Error::Config(format!(
                "base side {base_side} not divisible by token side {token_side}"
            )));
        }
        Ok(GridConfig {
            base_side,
            magnification,
            token_side,
            channels,
        })
    }

    /// Tokens per side of the local grid: `n_l = N * n_g`.
    pub fn local_side(&self) -> usize {
        self.magnification * self.token_side
    }

    /// Global token count `N_g = n_g^2`.
    pub fn global_tokens(&self) -> usize {
        self.token_side * self.token_side
    }

    /// Local token count `N_l = n_l^2`.
    pub fn local_tokens(&self) -> usize {
        self.local_side() * self.local_side()
    }

    /// Pixels per token side in an encoder view.
    pub fn patch_size(&self) -> usize {
        self.base_side / self.token_side
    }

    pub fn tile_count(&self) -> usize {
        self.magnification * self.magnification
    }
}

impl Default for GridConfig {
    /// 518-pixel encoder side, 37-token grid (14-pixel patches),
    /// 2x magnification, 64 synthetic channels.
    fn default() -> Self {
        GridConfig {
            base_side: 518,
            magnification: 2,
            token_side: 37,
            channels: 64,
        }
    }
}

/// Round half-to-even, the IEEE default, written out so the u8 resize is
/// reproducible without relying on platform rounding modes.
fn round_half_even(v: f64) -> f64 {
    let floor = libm::floor(v);
    let frac = v - floor;
    if frac > 0.5 {
        floor + 1.0
    } else if frac < 0.5 {
        floor
    } else if libm::fmod(floor, 2.0) == 0.0 {
        floor
    } else {
        floor + 1.0
    }
}

/// Bilinear resize of a `u8 [H, W, 3]` image with half-pixel centers
/// (align-corners = false). Weights are evaluated in f64 and the result is
/// rounded half-to-even, so the output is bit-reproducible.
pub fn bilinear_resize(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let shape = image.shape();
    if shape.len() != 3 || shape[2] != 3 {
        return Err(Error::Input(format!(
            "expected image shape [H, W, 3], got {shape:?}"
        )));
    }
    let (in_h, in_w) = (shape[0], shape[1]);
    if in_h == 0 || in_w == 0 || out_h == 0 || out_w == 0 {
        return Err(Error::Input("zero-sized image".into()));
    }
    let src = image.as_u8()?;
    let mut out = Vec::with_capacity(out_h * out_w * 3);

    // Precompute per-axis source indices and weights.
    let axis = |out_len: usize, in_len: usize| -> Vec<(usize, usize, f64)> {
        let scale = in_len as f64 / out_len as f64;
        (0..out_len)
            .map(|o| {
                let center = (o as f64 + 0.5) * scale - 0.5;
                let base = libm::floor(center);
                let frac = center - base;
                let lo = (base.max(0.0) as usize).min(in_len - 1);
                let hi = ((base + 1.0).max(0.0) as usize).min(in_len - 1);
                (lo, hi, frac)
            })
            .collect()
    };
    let rows = axis(out_h, in_h);
    let cols = axis(out_w, in_w);

    for &(r0, r1, fr) in &rows {
        for &(c0, c1, fc) in &cols {
            for ch in 0..3 {
                let at = |r: usize, c: usize| src[(r * in_w + c) * 3 + ch] as f64;
                let top = at(r0, c0) * (1.0 - fc) + at(r0, c1) * fc;
                let bottom = at(r1, c0) * (1.0 - fc) + at(r1, c1) * fc;
                let value = top * (1.0 - fr) + bottom * fr;
                out.push(round_half_even(value).clamp(0.0, 255.0) as u8);
            }
        }
    }
    Tensor::from_u8(&[out_h, out_w, 3], out)
}

/// Build the global view and the `N^2` local tiles of an image.
///
/// The global view is a bilinear resize to `H_v x H_v`. The local view is a
/// resize to `(N*H_v) x (N*H_v)`, partitioned by a non-overlapping
/// `H_v x H_v` window into tiles in row-major tile order, returned as
/// `u8 [N^2, H_v, H_v, 3]`.
pub fn make_views(image: &Tensor, cfg: &GridConfig) -> Result<(Tensor, Tensor)> {
    let side = cfg.base_side;
    let n = cfg.magnification;
    let global = bilinear_resize(image, side, side)?;
    let local = bilinear_resize(image, n * side, n * side)?;
    let local_data = local.as_u8()?;
    let local_w = n * side;

    let mut tiles = Vec::with_capacity(n * n * side * side * 3);
    for ti in 0..n {
        for tj in 0..n {
            for r in 0..side {
                let row = ti * side + r;
                let col0 = tj * side;
                let start = (row * local_w + col0) * 3;
                tiles.extend_from_slice(&local_data[start..start + side * 3]);
            }
        }
    }
    let tiles = Tensor::from_u8(&[n * n, side, side, 3], tiles)?;
    Ok((global, tiles))
}

/// Local token coordinates belonging to global token `(a, b)`: the stride-N
/// block `{(a*N + u, b*N + v)}`, row-major over `(u, v)`.
pub fn region_index(cfg: &GridConfig, a: usize, b: usize) -> Result<Vec<(usize, usize)>> {
    let n_g = cfg.token_side;
    if a >= n_g || b >= n_g {
        return Err(Error::Index(format!(
            "token ({a}, {b}) outside {n_g}x{n_g} grid"
        )));
    }
    let n = cfg.magnification;
    let mut out = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            out.push((a * n + u, b * n + v));
        }
    }
    Ok(out)
}

/// Downsample a pixel-resolution binary mask to the token grid.
///
/// A token is active when at least half of its pixels are active; an exact
/// 50% tie counts as active. Block boundaries use integer splits so sides
/// that do not divide evenly are still covered exactly once.
pub fn downsample_mask(pixel_mask: &Tensor, token_side: usize) -> Result<Tensor> {
    let shape = pixel_mask.shape();
    if shape.len() != 2 {
        return Err(Error::Input(format!(
            "expected mask shape [H, W], got {shape:?}"
        )));
    }
    let (h, w) = (shape[0], shape[1]);
    if token_side == 0 || token_side > h || token_side > w {
        return Err(Error::Config(format!(
            "token side {token_side} invalid for {h}x{w} mask"
        )));
    }
    let data = pixel_mask.as_u8()?;
    if data.iter().any(|&v| v > 1) {
        return Err(Error::Input("mask values must be 0 or 1".into()));
    }
    let mut out = Vec::with_capacity(token_side * token_side);
    for tr in 0..token_side {
        let r0 = tr * h / token_side;
        let r1 = (tr + 1) * h / token_side;
        for tc in 0..token_side {
            let c0 = tc * w / token_side;
            let c1 = (tc + 1) * w / token_side;
            let total = (r1 - r0) * (c1 - c0);
            let mut active = 0usize;
            for r in r0..r1 {
                for c in c0..c1 {
                    active += data[r * w + c] as usize;
                }
            }
            out.push(u8::from(2 * active >= total));
        }
    }
    Tensor::from_u8(&[token_side, token_side], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn seeded_image(h: usize, w: usize, seed: u64) -> Tensor {
        let mut rng = SplitMix64::new(seed);
        let data: Vec<u8> = (0..h * w * 3).map(|_| rng.next_below(256) as u8).collect();
        Tensor::from_u8(&[h, w, 3], data).unwrap()
    }

    /// Naive per-pixel reimplementation of the resize contract, kept
    /// independent of the production loop structure.
    fn resize_oracle(image: &Tensor, out_h: usize, out_w: usize) -> Vec<u8> {
        let shape = image.shape();
        let (in_h, in_w) = (shape[0], shape[1]);
        let src = image.as_u8().unwrap();
        let mut out = Vec::new();
        for r in 0..out_h {
            for c in 0..out_w {
                for ch in 0..3 {
                    let sy = (r as f64 + 0.5) * in_h as f64 / out_h as f64 - 0.5;
                    let sx = (c as f64 + 0.5) * in_w as f64 / out_w as f64 - 0.5;
                    let y0 = sy.floor();
                    let x0 = sx.floor();
                    let fy = sy - y0;
                    let fx = sx - x0;
                    let clamp_y = |y: f64| (y.max(0.0) as usize).min(in_h - 1);
                    let clamp_x = |x: f64| (x.max(0.0) as usize).min(in_w - 1);
                    let px = |y: usize, x: usize| src[(y * in_w + x) * 3 + ch] as f64;
                    let v = px(clamp_y(y0), clamp_x(x0)) * (1.0 - fy) * (1.0 - fx)
                        + px(clamp_y(y0), clamp_x(x0 + 1.0)) * (1.0 - fy) * fx
                        + px(clamp_y(y0 + 1.0), clamp_x(x0)) * fy * (1.0 - fx)
                        + px(clamp_y(y0 + 1.0), clamp_x(x0 + 1.0)) * fy * fx;
                    let rounded = {
                        let fl = v.floor();
                        let frac = v - fl;
                        if frac > 0.5 {
                            fl + 1.0
                        } else if frac < 0.5 {
                            fl
                        } else if (fl as i64) % 2 == 0 {
                            fl
                        } else {
                            fl + 1.0
                        }
                    };
                    out.push(rounded as u8);
                }
            }
        }
        out
    }

    #[test]
    fn resize_matches_oracle_bit_exactly() {
        let image = seeded_image(7, 5, 21);
        let resized = bilinear_resize(&image, 11, 9).unwrap();
        assert_eq!(resized.as_u8().unwrap(), resize_oracle(&image, 11, 9));
        let shrunk = bilinear_resize(&image, 3, 4).unwrap();
        assert_eq!(shrunk.as_u8().unwrap(), resize_oracle(&image, 3, 4));
    }

    #[test]
    fn identity_resize_is_bit_exact() {
        let cfg = GridConfig::new(8, 1, 2, 4).unwrap();
        let image = seeded_image(8, 8, 3);
        let (global, tiles) = make_views(&image, &cfg).unwrap();
        assert_eq!(global.as_u8().unwrap(), image.as_u8().unwrap());
        assert_eq!(tiles.shape(), &[1, 8, 8, 3]);
        assert_eq!(tiles.as_u8().unwrap(), image.as_u8().unwrap());
    }

    #[test]
    fn default_config_produces_1036_local_view_and_4_tiles() {
        let cfg = GridConfig::default();
        assert_eq!(cfg.base_side, 518);
        assert_eq!(cfg.magnification, 2);
        assert_eq!(cfg.local_side(), 74);
        let image = seeded_image(100, 160, 5);
        let (global, tiles) = make_views(&image, &cfg).unwrap();
        assert_eq!(global.shape(), &[518, 518, 3]);
        assert_eq!(tiles.shape(), &[4, 518, 518, 3]);
        // local view side 518*2 = 1036, carried implicitly by the tiles
        assert_eq!(2 * cfg.base_side, 1036);
    }

    #[test]
    fn constant_color_preserved() {
        let cfg = GridConfig::new(6, 2, 3, 4).unwrap();
        let image = Tensor::from_u8(&[9, 13, 3], vec![200; 9 * 13 * 3]).unwrap();
        let (global, tiles) = make_views(&image, &cfg).unwrap();
        assert!(global.as_u8().unwrap().iter().all(|&v| v == 200));
        assert!(tiles.as_u8().unwrap().iter().all(|&v| v == 200));
    }

    #[test]
    fn tiles_match_local_view_windows() {
        let cfg = GridConfig::new(4, 3, 2, 4).unwrap();
        let image = seeded_image(10, 14, 77);
        let (_, tiles) = make_views(&image, &cfg).unwrap();
        let local = bilinear_resize(&image, 12, 12).unwrap();
        let local_data = local.as_u8().unwrap();
        let tile_data = tiles.as_u8().unwrap();
        let side = cfg.base_side;
        for ti in 0..3 {
            for tj in 0..3 {
                let t = ti * 3 + tj;
                for p in 0..side {
                    for q in 0..side {
                        for ch in 0..3 {
                            let from_tile = tile_data[((t * side + p) * side + q) * 3 + ch];
                            let from_local =
                                local_data[((ti * side + p) * 12 + (tj * side + q)) * 3 + ch];
                            assert_eq!(from_tile, from_local);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_sized_image_rejected() {
        let bad = Tensor::from_u8(&[1, 1, 3], vec![0, 0, 0]).unwrap();
        assert!(bilinear_resize(&bad, 0, 4).is_err());
    }

    #[test]
    fn region_index_first_and_last_blocks() {
        let cfg = GridConfig::new(8, 2, 2, 4).unwrap();
        assert_eq!(
            region_index(&cfg, 0, 0).unwrap(),
            vec![(0, 0), (0, 1), (1, 0), (1, 1)]
        );
        assert_eq!(
            region_index(&cfg, 1, 1).unwrap(),
            vec![(2, 2), (2, 3), (3, 2), (3, 3)]
        );
        assert!(region_index(&cfg, 2, 0).is_err());
    }

    #[test]
    fn regions_partition_local_grid() {
        for (n_g, n) in [(2usize, 2usize), (3, 3), (5, 2), (4, 4)] {
            let cfg = GridConfig::new(n_g * 2, n, n_g, 4).unwrap();
            let n_l = cfg.local_side();
            let mut seen = vec![0u32; n_l * n_l];
            for a in 0..n_g {
                for b in 0..n_g {
                    for (r, c) in region_index(&cfg, a, b).unwrap() {
                        seen[r * n_l + c] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&v| v == 1), "partition broken for {n_g}/{n}");
        }
    }

    #[test]
    fn downsample_majority_and_tie_rule() {
        // 4x4 pixels onto a 2x2 token grid: each token owns a 2x2 block.
        // Top-left block: 2 of 4 active (tie) -> active.
        // Top-right: 1 of 4 -> inactive. Bottom-left: 4 of 4 -> active.
        #[rustfmt::skip]
        let pixels = vec![
            1, 0, 0, 0,
            0, 1, 1, 0,
            1, 1, 0, 0,
            1, 1, 0, 0,
        ];
        let mask = Tensor::from_u8(&[4, 4], pixels).unwrap();
        let tokens = downsample_mask(&mask, 2).unwrap();
        assert_eq!(tokens.as_u8().unwrap(), &[1, 0, 1, 0]);
    }

    #[test]
    fn config_rejects_indivisible_patch() {
        assert!(GridConfig::new(10, 2, 3, 4).is_err());
        assert!(GridConfig::new(0, 2, 3, 4).is_err());
    }
}
