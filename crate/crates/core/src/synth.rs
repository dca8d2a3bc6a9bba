//! Deterministic synthetic data: SAM-style over-segmented proposal sets,
//! ground-truth masks, procedural images, and SEG-embedding synthesis.
//!
//! Proposals are Voronoi cells of seed tokens sampled on the token grid —
//! a cheap, controllable stand-in for grid-prompted mask generation — plus
//! a handful of two-cell unions that model over-segmentation redundancy.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::grid::GridConfig;
use crate::rng::{child_seed, SplitMix64};
use crate::tensor::{Dtype, Tensor};
use crate::{Error, Result};

/// Where a mask set came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Generated by [`gen_proposals`]; `base_cells` counts the leading
    /// Voronoi-cell proposals, before the union extras.
    Synthetic { seed: u64, base_cells: usize },
    Ingested { path: String },
}

/// K binary proposals on the token grid, with an optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSet {
    /// u8 `[K, n, n]`, values 0/1, every proposal nonempty.
    masks: Tensor,
    /// u8 `[n, n]`, nonempty when present.
    gt: Option<Tensor>,
    provenance: Provenance,
}

fn check_binary_nonempty(data: &[u8], what: &str) -> Result<()> {
    let mut any = false;
    for &v in data {
        if v > 1 {
            return Err(Error::Input(format!("{what} contains value {v}, expected 0/1")));
        }
        any |= v == 1;
    }
    if !any {
        return Err(Error::DegenerateMask(format!("{what} has no active token")));
    }
    Ok(())
}

impl MaskSet {
    pub fn new(masks: Tensor, gt: Option<Tensor>, provenance: Provenance) -> Result<MaskSet> {
        if masks.dtype() != Dtype::U8 || masks.shape().len() != 3 {
            return Err(Error::Input(format!(
                "proposals must be u8 [K, n, n], got {:?} {:?}",
                masks.dtype(),
                masks.shape()
            )));
        }
        let (k, h, w) = (masks.shape()[0], masks.shape()[1], masks.shape()[2]);
        if h != w {
            return Err(Error::Input("token grid must be square".into()));
        }
        let data = masks.as_u8()?;
        for i in 0..k {
            check_binary_nonempty(&data[i * h * w..(i + 1) * h * w], "proposal")?;
        }
        if let Some(gt) = &gt {
            if gt.dtype() != Dtype::U8 || gt.shape() != [h, w] {
                return Err(Error::Input(format!(
                    "ground truth must be u8 [{h}, {w}], got {:?}",
                    gt.shape()
                )));
            }
            check_binary_nonempty(gt.as_u8()?, "ground truth")?;
        }
        Ok(MaskSet {
            masks,
            gt,
            provenance,
        })
    }

    pub fn with_gt(mut self, gt: Tensor) -> Result<MaskSet> {
        self.gt = Some(gt);
        MaskSet::new(self.masks, self.gt, self.provenance)
    }

    /// Number of proposals K.
    pub fn count(&self) -> usize {
        self.masks.shape()[0]
    }

    pub fn token_side(&self) -> usize {
        self.masks.shape()[1]
    }

    /// Flat `n*n` view of proposal `k`.
    pub fn mask(&self, k: usize) -> &[u8] {
        let cells = self.token_side() * self.token_side();
        &self.masks.as_u8().expect("validated u8")[k * cells..(k + 1) * cells]
    }

    /// Proposal `k` as a standalone `[n, n]` tensor.
    pub fn mask_tensor(&self, k: usize) -> Tensor {
        let n = self.token_side();
        Tensor::from_u8(&[n, n], self.mask(k).to_vec()).expect("validated mask")
    }

    pub fn masks(&self) -> &Tensor {
        &self.masks
    }

    pub fn gt(&self) -> Option<&Tensor> {
        self.gt.as_ref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Leading Voronoi-cell proposals for synthetic sets; all of them for
    /// ingested sets.
    pub fn base_cells(&self) -> usize {
        match self.provenance {
            Provenance::Synthetic { base_cells, .. } => base_cells,
            Provenance::Ingested { .. } => self.count(),
        }
    }
}

/// Sample `count` distinct values from `0..bound` by partial Fisher-Yates.
fn sample_distinct(rng: &mut SplitMix64, bound: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..bound).collect();
    for i in 0..count {
        let j = i + rng.next_below((bound - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Assign every token to its nearest seed (squared Euclidean on token
/// coordinates, ties to the lower seed index). Returns one 0/1 mask per
/// seed; the cells partition the grid and each contains its own seed.
pub fn voronoi_cells(token_side: usize, seeds: &[(usize, usize)]) -> Vec<Vec<u8>> {
    let n = token_side;
    let mut cells = alloc::vec![alloc::vec![0u8; n * n]; seeds.len()];
    for r in 0..n {
        for c in 0..n {
            let mut best = 0usize;
            let mut best_d = usize::MAX;
            for (idx, &(sr, sc)) in seeds.iter().enumerate() {
                let dr = sr.abs_diff(r);
                let dc = sc.abs_diff(c);
                let d = dr * dr + dc * dc;
                if d < best_d {
                    best_d = d;
                    best = idx;
                }
            }
            cells[best][r * n + c] = 1;
        }
    }
    cells
}

/// Unordered pairs of cells that touch along a 4-neighbor edge, sorted.
fn adjacent_cell_pairs(assign: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut push = (|pairs: &mut Vec<(usize, usize)>, a: usize, b: usize| {
        if a != b {
            let p = (a.min(b), a.max(b));
            if !pairs.contains(&p) {
                pairs.push(p);
            }
        }
    });
    for r in 0..n {
        for c in 0..n {
            let here = assign[r * n + c];
            if c + 1 < n {
                push(&mut pairs, here, assign[r * n + c + 1]);
            }
            if r + 1 < n {
                push(&mut pairs, here, assign[(r + 1) * n + c]);
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Default seed-token count: one seed per `(37/32)^2` tokens — the density
/// of a 32x32 SAM prompt grid over a 37-token side — clamped to `[2, N_g]`.
pub fn default_seed_count(cfg: &GridConfig) -> usize {
    let n_g = cfg.global_tokens();
    let scaled = (n_g * 1024 + 684) / 1369;
    scaled.clamp(2, n_g)
}

/// Generate an over-segmented proposal set on the token grid.
///
/// `n_seeds` distinct seed tokens induce a Voronoi partition (the base
/// cells). When the grid is not saturated, `n_seeds / 4` extra proposals
/// are added, each the union of two adjacent cells.
pub fn gen_proposals(cfg: &GridConfig, seed: u64, n_seeds: usize) -> Result<MaskSet> {
    let n = cfg.token_side;
    let n_g = cfg.global_tokens();
    if n_seeds < 2 || n_seeds > n_g {
        return Err(Error::Config(format!(
            "n_seeds {n_seeds} outside 2..={n_g}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let seed_tokens: Vec<(usize, usize)> = sample_distinct(&mut rng, n_g, n_seeds)
        .into_iter()
        .map(|t| (t / n, t % n))
        .collect();
    let cells = voronoi_cells(n, &seed_tokens);

    let mut assign = alloc::vec![0usize; n * n];
    for (idx, cell) in cells.iter().enumerate() {
        for (t, &v) in cell.iter().enumerate() {
            if v == 1 {
                assign[t] = idx;
            }
        }
    }

    let mut flat: Vec<u8> = Vec::with_capacity(cells.len() * n * n);
    for cell in &cells {
        flat.extend_from_slice(cell);
    }
    let mut k = cells.len();

    // Saturated seeding leaves nothing to merge: every proposal stays a
    // single token.
    if n_seeds < n_g {
        let mut pairs = adjacent_cell_pairs(&assign, n);
        let extras = n_seeds / 4;
        for _ in 0..extras {
            if pairs.is_empty() {
                break;
            }
            let pick = rng.next_below(pairs.len() as u64) as usize;
            let (a, b) = pairs.remove(pick);
            for t in 0..n * n {
                flat.push(cells[a][t] | cells[b][t]);
            }
            k += 1;
        }
    }

    MaskSet::new(
        Tensor::from_u8(&[k, n, n], flat)?,
        None,
        Provenance::Synthetic {
            seed,
            base_cells: cells.len(),
        },
    )
}

/// How the ground truth relates to the proposal set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GtMode {
    /// Equals one proposal exactly.
    Exact,
    /// Union of 2-3 base cells, never equal to any single proposal.
    Union,
    /// A rectangle that cuts through at least one cell and equals no
    /// proposal.
    Partial,
}

impl GtMode {
    pub fn parse(s: &str) -> Result<GtMode> {
        match s {
            "exact" => Ok(GtMode::Exact),
            "union" => Ok(GtMode::Union),
            "partial" => Ok(GtMode::Partial),
            other => Err(Error::Config(format!("unknown gt mode \"{other}\""))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GtMode::Exact => "exact",
            GtMode::Union => "union",
            GtMode::Partial => "partial",
        }
    }
}

fn equals_any_proposal(maskset: &MaskSet, candidate: &[u8]) -> bool {
    (0..maskset.count()).any(|k| maskset.mask(k) == candidate)
}

const GT_RETRIES: usize = 64;

/// Draw a ground-truth mask for a synthetic proposal set.
pub fn gen_gt(maskset: &MaskSet, seed: u64, mode: GtMode) -> Result<Tensor> {
    let n = maskset.token_side();
    let cells = n * n;
    let mut rng = SplitMix64::new(seed);
    match mode {
        GtMode::Exact => {
            let k = rng.next_below(maskset.count() as u64) as usize;
            Ok(maskset.mask_tensor(k))
        }
        GtMode::Union => {
            let base = maskset.base_cells();
            if base < 2 {
                return Err(Error::Config("union gt needs at least 2 base cells".into()));
            }
            for _ in 0..GT_RETRIES {
                let take = if base >= 3 {
                    2 + rng.next_below(2) as usize
                } else {
                    2
                };
                let chosen = sample_distinct(&mut rng, base, take);
                let mut gt = alloc::vec![0u8; cells];
                for &c in &chosen {
                    for (t, v) in gt.iter_mut().enumerate() {
                        *v |= maskset.mask(c)[t];
                    }
                }
                if !equals_any_proposal(maskset, &gt) {
                    return Ok(Tensor::from_u8(&[n, n], gt)?);
                }
            }
            Err(Error::Config(
                "could not draw a union ground truth distinct from every proposal".into(),
            ))
        }
        GtMode::Partial => {
            for _ in 0..GT_RETRIES {
                let r0 = rng.next_below(n as u64) as usize;
                let r1 = r0 + 1 + rng.next_below((n - r0) as u64) as usize;
                let c0 = rng.next_below(n as u64) as usize;
                let c1 = c0 + 1 + rng.next_below((n - c0) as u64) as usize;
                let mut gt = alloc::vec![0u8; cells];
                for r in r0..r1 {
                    for c in c0..c1 {
                        gt[r * n + c] = 1;
                    }
                }
                // Require a cell the rectangle cuts through, and a mask no
                // proposal matches.
                let cuts_a_cell = (0..maskset.base_cells()).any(|k| {
                    let cell = maskset.mask(k);
                    let inside: usize = (0..cells).filter(|&t| cell[t] == 1 && gt[t] == 1).count();
                    let size: usize = cell.iter().map(|&v| v as usize).sum();
                    inside > 0 && inside < size
                });
                if cuts_a_cell && !equals_any_proposal(maskset, &gt) {
                    return Ok(Tensor::from_u8(&[n, n], gt)?);
                }
            }
            Err(Error::Config(
                "could not draw a partial ground truth for this proposal set".into(),
            ))
        }
    }
}

/// Procedural color-field image: three seeded sinusoidal plaids, one per
/// channel. Smooth, full-range, and a pure function of `(h, w, seed)`.
pub fn gen_image(height: usize, width: usize, seed: u64) -> Result<Tensor> {
    if height == 0 || width == 0 {
        return Err(Error::Input("zero-sized image".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut params = [[0.0f64; 3]; 3];
    for ch in params.iter_mut() {
        ch[0] = 1.0 + 3.0 * rng.next_f64(); // row frequency
        ch[1] = 1.0 + 3.0 * rng.next_f64(); // col frequency
        ch[2] = core::f64::consts::TAU * rng.next_f64(); // phase
    }
    let mut data = Vec::with_capacity(height * width * 3);
    for r in 0..height {
        for c in 0..width {
            for p in &params {
                let t = core::f64::consts::TAU
                    * (p[0] * r as f64 / height as f64 + p[1] * c as f64 / width as f64)
                    + p[2];
                let v = 0.5 + 0.5 * libm::sin(t);
                data.push(libm::round(255.0 * v) as u8);
            }
        }
    }
    Tensor::from_u8(&[height, width, 3], data)
}

/// Synthesize a raw SEG embedding from the pooled ground-truth feature:
/// add seeded Gaussian noise of scale `sigma`, then lift `d -> d_llm` with
/// a fixed seeded matrix. Gives the selection heads a learnable signal
/// without any language model in the loop.
pub fn synth_seg_embedding(
    pooled: &[f32],
    sigma: f64,
    d_llm: usize,
    lift_seed: u64,
    noise_seed: u64,
) -> Vec<f32> {
    let d = pooled.len();
    let mut lift_rng = SplitMix64::new(lift_seed);
    let lift: Vec<f64> = (0..d_llm * d).map(|_| lift_rng.next_normal()).collect();
    let mut noise_rng = SplitMix64::new(noise_seed);
    let noisy: Vec<f64> = pooled
        .iter()
        .map(|&v| v as f64 + sigma * noise_rng.next_normal())
        .collect();
    (0..d_llm)
        .map(|i| {
            let row = &lift[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..d {
                acc += row[j] * noisy[j];
            }
            acc as f32
        })
        .collect()
}

/// Stable per-sample / per-purpose sub-seeds for dataset assembly.
pub mod streams {
    pub const IMAGE: u64 = 1;
    pub const PROPOSALS: u64 = 2;
    pub const GT: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const ENCODER: u64 = 5;
    pub const PARAMS: u64 = 6;
    pub const LIFT: u64 = 7;
    pub const HEADS: u64 = 8;
}

/// Seed for stream `purpose` of sample `index` under dataset seed `base`.
pub fn sample_seed(base: u64, index: u64, purpose: u64) -> u64 {
    child_seed(child_seed(base, index), purpose)
}
