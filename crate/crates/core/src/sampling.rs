//! Uniform random secondary structures and complete binary phylogenies.

use num_bigint::{BigUint, RandBigInt};
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::phylogeny::Phylogeny;
use crate::structure::SecondaryStructure;

/// Parameters of a RANDOM dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Structure length `N`.
    pub length: usize,
    /// Minimum number of unpaired positions enclosed by a pair.
    pub theta: usize,
    /// Height of the complete binary phylogeny.
    pub height: u32,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(length: usize, seed: u64) -> Self {
        Self {
            length,
            theta: 3,
            height: 5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidStructure("length must be positive".into()));
        }
        if self.height == 0 {
            return Err(Error::InvalidTree(
                "phylogeny height must be positive".into(),
            ));
        }
        if self.height > 20 {
            return Err(Error::CapExceeded {
                what: "phylogeny height",
                value: self.height as usize,
                cap: 20,
            });
        }
        Ok(())
    }
}

/// `counts[L]` for every `L <= n`: structures of length `L` whose pairs
/// `(i, j)` all satisfy `j - i - 1 >= theta`.
fn count_table(n: usize, theta: usize) -> Vec<BigUint> {
    let mut c: Vec<BigUint> = Vec::with_capacity(n + 1);
    for len in 0..=n {
        if len == 0 {
            c.push(BigUint::one());
            continue;
        }
        // The first position is unpaired, or pairs to enclose `m` positions.
        let mut total = c[len - 1].clone();
        for m in theta..len.saturating_sub(1) {
            total += &c[m] * &c[len - 2 - m];
        }
        c.push(total);
    }
    c
}

/// Number of structures of length `n` obeying the hairpin gate `theta`.
pub fn count_structures(n: usize, theta: usize) -> BigUint {
    count_table(n, theta)
        .pop()
        .expect("table has n + 1 entries")
}

/// Draws structures uniformly from those of one length and gate.
#[derive(Debug, Clone)]
pub struct Sampler {
    length: usize,
    theta: usize,
    counts: Vec<BigUint>,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(length: usize, theta: usize, seed: u64) -> Self {
        Self {
            length,
            theta,
            counts: count_table(length, theta),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> SecondaryStructure {
        let mut pairs = Vec::new();
        // Regions (first position, length) still to be drawn.
        let mut todo = vec![(1usize, self.length)];
        while let Some((start, len)) = todo.pop() {
            if len == 0 {
                continue;
            }
            let mut r = self.rng.gen_biguint_below(&self.counts[len]);
            if r < self.counts[len - 1] {
                todo.push((start + 1, len - 1));
                continue;
            }
            r -= &self.counts[len - 1];
            let mut chosen = None;
            for m in self.theta..len - 1 {
                let w = &self.counts[m] * &self.counts[len - 2 - m];
                if r < w {
                    chosen = Some(m);
                    break;
                }
                r -= w;
            }
            let m = chosen.expect("draw lies below the total count");
            pairs.push((start, start + m + 1));
            todo.push((start + 1, m));
            todo.push((start + m + 2, len - 2 - m));
        }
        SecondaryStructure::new(self.length, pairs).expect("sampled pairs are nested")
    }
}

/// One uniform structure of `config.length`.
pub fn sample_structure(config: &SamplerConfig) -> Result<SecondaryStructure> {
    config.validate()?;
    Ok(Sampler::new(config.length, config.theta, config.seed).sample())
}

/// Label of the `k`-th leaf of a sampled phylogeny.
pub fn leaf_label(k: usize) -> String {
    format!("leaf{k}")
}

/// Complete binary phylogeny of `config.height` with an independent uniform
/// structure at each of its `2^H` leaves, listed left to right.
pub fn sample_phylogeny(
    config: &SamplerConfig,
) -> Result<(Phylogeny, Vec<(String, SecondaryStructure)>)> {
    config.validate()?;
    let phy = Phylogeny::complete_binary(config.height, leaf_label)?;
    let mut sampler = Sampler::new(config.length, config.theta, config.seed);
    let records = phy
        .leaves()
        .into_iter()
        .map(|v| (phy.node_id(v), sampler.sample()))
        .collect();
    Ok((phy, records))
}
