//! BPSK over AWGN, sum-product decoding and a seeded Monte-Carlo harness that
//! sorts decoding failures into absorbing-set classes.

use crate::code::{CodeDescriptor, ParityCheckMatrix};
use crate::existence::classify_instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("frame count must be at least 1")]
    NoFrames,
    #[error("decoder needs at least one iteration")]
    NoIterations,
    #[error("llr clip must be positive and finite, got {0}")]
    BadClip(f64),
    #[error("Eb/N0 must be finite, got {0}")]
    BadSnr(f64),
    #[error("codeword has length {0}, code has {1} columns")]
    Length(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub ebn0_db: f64,
    pub seed: u64,
    pub frames: u64,
}

impl ChannelConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.frames == 0 {
            return Err(SimError::NoFrames);
        }
        if !self.ebn0_db.is_finite() {
            return Err(SimError::BadSnr(self.ebn0_db));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iters: usize,
    pub llr_clip: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { max_iters: 50, llr_clip: 30.0 }
    }
}

impl DecoderConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.max_iters == 0 {
            return Err(SimError::NoIterations);
        }
        if !(self.llr_clip.is_finite() && self.llr_clip > 0.0) {
            return Err(SimError::BadClip(self.llr_clip));
        }
        Ok(())
    }
}

/// Noise standard deviation for unit-energy BPSK at the given Eb/N0 and rate.
pub fn noise_sigma(ebn0_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt()
}

/// Generator for one frame. Each frame owns a ChaCha stream, so the noise does
/// not depend on which worker draws it.
pub fn frame_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    rng
}

/// Channel LLRs for `codeword` sent as 0 -> +1, 1 -> -1.
pub fn transmit(codeword: &[u8], sigma: f64, seed: u64, frame_index: u64) -> Vec<f64> {
    let mut rng = frame_rng(seed, frame_index);
    let var = sigma * sigma;
    codeword
        .iter()
        .map(|&b| {
            let x = if b == 0 { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(&mut rng);
            2.0 * (x + sigma * n) / var
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Edge layout of the Tanner graph, built once per code.
pub struct SpaDecoder<'a> {
    code: &'a ParityCheckMatrix,
    // edge ids grouped by check, and for each variable the ids of its edges
    check_edges: Vec<Vec<usize>>,
    var_edges: Vec<Vec<usize>>,
    edges: usize,
}

impl<'a> SpaDecoder<'a> {
    pub fn new(code: &'a ParityCheckMatrix) -> Self {
        let mut check_edges = vec![Vec::new(); code.rows()];
        let mut var_edges = vec![Vec::new(); code.cols()];
        let mut e = 0;
        for (v, ve) in var_edges.iter_mut().enumerate() {
            for &r in code.col(v) {
                check_edges[r].push(e);
                ve.push(e);
                e += 1;
            }
        }
        SpaDecoder { code, check_edges, var_edges, edges: e }
    }

    /// Flooding sum-product in the log domain with the tanh rule.
    pub fn decode(&self, llr: &[f64], cfg: &DecoderConfig) -> DecodeResult {
        let clip = cfg.llr_clip;
        let n = self.var_edges.len();
        let mut v2c = vec![0.0; self.edges];
        let mut c2v = vec![0.0; self.edges];
        for (v, es) in self.var_edges.iter().enumerate() {
            for &e in es {
                v2c[e] = llr[v].clamp(-clip, clip);
            }
        }
        let mut bits: Vec<u8> = llr.iter().map(|&l| u8::from(l < 0.0)).collect();
        if self.done(&bits, llr) {
            return DecodeResult { bits, converged: true, iterations: 0 };
        }
        let mut total = vec![0.0; n];
        let mut t = Vec::new();
        for it in 1..=cfg.max_iters {
            for es in &self.check_edges {
                t.clear();
                t.extend(es.iter().map(|&e| (v2c[e] * 0.5).tanh()));
                let zeros = t.iter().filter(|x| **x == 0.0).count();
                let prod: f64 = t.iter().filter(|x| **x != 0.0).product();
                for (&e, &ti) in es.iter().zip(&t) {
                    let p = match zeros {
                        0 => prod / ti,
                        1 if ti == 0.0 => prod,
                        _ => 0.0,
                    };
                    c2v[e] = (2.0 * p.clamp(-1.0, 1.0).atanh()).clamp(-clip, clip);
                }
            }
            for (v, es) in self.var_edges.iter().enumerate() {
                let s = llr[v] + es.iter().map(|&e| c2v[e]).sum::<f64>();
                total[v] = s;
                bits[v] = u8::from(s < 0.0);
                for &e in es {
                    v2c[e] = (s - c2v[e]).clamp(-clip, clip);
                }
            }
            if self.done(&bits, &total) {
                return DecodeResult { bits, converged: true, iterations: it };
            }
        }
        DecodeResult { bits, converged: false, iterations: cfg.max_iters }
    }

    // A bit with a zero posterior has no decision, so it blocks convergence.
    fn done(&self, bits: &[u8], post: &[f64]) -> bool {
        post.iter().all(|&x| x != 0.0) && self.code.syndrome_is_zero(bits)
    }
}

pub fn spa_decode(code: &ParityCheckMatrix, llr: &[f64], cfg: &DecoderConfig) -> DecodeResult {
    SpaDecoder::new(code).decode(llr, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub a: usize,
    pub b: usize,
    pub fully: bool,
    pub elementary: bool,
}

/// Absorbing-set class of a failed frame's error support, if it is one.
pub fn classify_failure(code: &ParityCheckMatrix, error_support: &[usize]) -> Option<Detection> {
    let c = classify_instance(code, error_support).ok()?;
    c.is_absorbing.then_some(Detection { a: c.a, b: c.b, fully: c.is_fully, elementary: c.is_elementary })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionCell {
    pub a: usize,
    pub b: usize,
    pub total: u64,
    pub fully: u64,
    pub elementary: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub code: CodeDescriptor,
    pub channel: ChannelConfig,
    pub decoder: DecoderConfig,
    pub sigma: f64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    /// Failed frames whose decoder stopped on a wrong codeword.
    pub miscorrections: u64,
    /// Failed frames whose final error support is not absorbing.
    pub unclassified: u64,
    pub ber: f64,
    pub fer: f64,
    pub mean_iterations: f64,
    pub detections: Vec<DetectionCell>,
}

#[derive(Default)]
struct Tally {
    bit_errors: u64,
    frame_errors: u64,
    miscorrections: u64,
    unclassified: u64,
    iterations: u64,
    cells: BTreeMap<(usize, usize), DetectionCell>,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.bit_errors += o.bit_errors;
        self.frame_errors += o.frame_errors;
        self.miscorrections += o.miscorrections;
        self.unclassified += o.unclassified;
        self.iterations += o.iterations;
        for (k, c) in o.cells {
            let e = self.cells.entry(k).or_insert(DetectionCell { a: k.0, b: k.1, ..Default::default() });
            e.total += c.total;
            e.fully += c.fully;
            e.elementary += c.elementary;
        }
        self
    }
}

/// Sends the all-zero word `channel.frames` times and decodes each frame.
pub fn run_simulation(
    code: &ParityCheckMatrix,
    channel: &ChannelConfig,
    decoder: &DecoderConfig,
) -> Result<SimReport, SimError> {
    channel.validate()?;
    decoder.validate()?;
    let desc = code.descriptor();
    let sigma = noise_sigma(channel.ebn0_db, desc.rate);
    let spa = SpaDecoder::new(code);
    let zero = vec![0u8; code.cols()];
    let tally = (0..channel.frames)
        .into_par_iter()
        .fold(Tally::default, |mut t, f| {
            let llr = transmit(&zero, sigma, channel.seed, f);
            let r = spa.decode(&llr, decoder);
            t.iterations += r.iterations as u64;
            let support: Vec<usize> = (0..r.bits.len()).filter(|&i| r.bits[i] != 0).collect();
            if !support.is_empty() {
                t.frame_errors += 1;
                t.bit_errors += support.len() as u64;
                if r.converged {
                    t.miscorrections += 1;
                }
                match classify_failure(code, &support) {
                    Some(d) => {
                        let c =
                            t.cells.entry((d.a, d.b)).or_insert(DetectionCell { a: d.a, b: d.b, ..Default::default() });
                        c.total += 1;
                        c.fully += u64::from(d.fully);
                        c.elementary += u64::from(d.elementary);
                    }
                    None => t.unclassified += 1,
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    let frames = channel.frames as f64;
    Ok(SimReport {
        sigma,
        bit_errors: tally.bit_errors,
        frame_errors: tally.frame_errors,
        miscorrections: tally.miscorrections,
        unclassified: tally.unclassified,
        ber: tally.bit_errors as f64 / (frames * code.cols() as f64),
        fer: tally.frame_errors as f64 / frames,
        mean_iterations: tally.iterations as f64 / frames,
        detections: tally.cells.into_values().collect(),
        code: desc,
        channel: channel.clone(),
        decoder: decoder.clone(),
    })
}

/// Seed for the `i`-th point of a sweep, so points draw unrelated noise.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    let mut z = seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One row per report, then the detection table.
pub fn reports_csv(reports: &[SimReport]) -> String {
    let mut s = String::from("ebn0_db,frames,bit_errors,frame_errors,ber,fer,miscorrections,unclassified\n");
    for r in reports {
        s += &format!(
            "{},{},{},{},{:e},{:e},{},{}\n",
            r.channel.ebn0_db,
            r.channel.frames,
            r.bit_errors,
            r.frame_errors,
            r.ber,
            r.fer,
            r.miscorrections,
            r.unclassified
        );
    }
    s += "\nebn0_db,a,b,total,fully,elementary\n";
    for r in reports {
        for c in &r.detections {
            s += &format!("{},{},{},{},{},{}\n", r.channel.ebn0_db, c.a, c.b, c.total, c.fully, c.elementary);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::code_from_mols;
    use crate::gf::PrimeField;
    use crate::mols::MolsSet;

    fn code(q: u64, alphas: &[i64]) -> ParityCheckMatrix {
        code_from_mols(&MolsSet::reduced(PrimeField::new(q).unwrap(), alphas).unwrap())
    }

    #[test]
    fn sigma_closed_form() {
        let s = noise_sigma(5.0, 0.71);
        let want = 1.0 / (2.0 * 0.71 * 10f64.sqrt());
        assert!((s * s - want).abs() < 1e-12);
    }

    #[test]
    fn low_noise_llrs_are_large() {
        let llr = transmit(&[0; 25], 1e-3, 1, 0);
        assert!(llr.iter().all(|&l| l > 1e5));
        assert_eq!(transmit(&[0; 25], 0.8, 9, 4), transmit(&[0; 25], 0.8, 9, 4));
        assert_ne!(transmit(&[0; 25], 0.8, 9, 4), transmit(&[0; 25], 0.8, 9, 5));
    }

    #[test]
    fn decoder_basics() {
        let h = code(5, &[1, 2]);
        let cfg = DecoderConfig { max_iters: 20, llr_clip: 30.0 };
        let r = spa_decode(&h, &[10.0; 25], &cfg);
        assert!(r.converged && r.iterations <= 1 && r.bits.iter().all(|&b| b == 0));
        let mut llr = vec![8.0; 25];
        llr[7] = -8.0;
        let r = spa_decode(&h, &llr, &cfg);
        assert!(r.converged && r.bits.iter().all(|&b| b == 0));
        let r = spa_decode(&h, &[0.0; 25], &cfg);
        assert!(!r.converged);
        assert_eq!(r.iterations, 20);
    }

    #[test]
    fn rejects_bad_configs() {
        let h = code(5, &[1, 2]);
        let ch = ChannelConfig { ebn0_db: 3.0, seed: 1, frames: 0 };
        assert_eq!(run_simulation(&h, &ch, &DecoderConfig::default()), Err(SimError::NoFrames));
        let ch = ChannelConfig { frames: 1, ..ch };
        let dec = DecoderConfig { max_iters: 0, llr_clip: 30.0 };
        assert_eq!(run_simulation(&h, &ch, &dec), Err(SimError::NoIterations));
    }

    #[test]
    fn point_seeds_differ() {
        assert_ne!(point_seed(7, 0), point_seed(7, 1));
        assert_eq!(point_seed(7, 3), point_seed(7, 3));
    }
}
