//! XOR privacy amplification.
//!
//! Each stage replaces every pair of key bits with their XOR. If Eve guesses
//! each bit correctly with probability `p`, independently, she gets the XOR
//! right exactly when she gets both or neither constituent right, so
//! `p ← p² + (1 − p)²` and `p − ½ ← 2(p − ½)²`.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{derive_seed, rng_from_seed, stream};

/// Key bits with Eve's per-bit guessing probability.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyMaterial {
    pub bits: Vec<u8>,
    pub eve_p: f64,
}

impl KeyMaterial {
    pub fn new(bits: Vec<u8>, eve_p: f64) -> Result<Self> {
        check_p(eve_p)?;
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("key bits must be 0 or 1, found {b}")));
        }
        Ok(KeyMaterial { bits, eve_p })
    }

    pub fn to_text(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationReport {
    pub stages: u32,
    pub input_len: usize,
    pub output_len: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub slowdown_factor: f64,
    /// `p_out − ½`
    pub epsilon: f64,
    /// `1 − H₂(p_out)`, bits per key bit.
    pub mutual_information_leak: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::invalid(format!("Eve's p must lie in [0.5, 1], got {p}")));
    }
    Ok(())
}

/// Pairwise XOR. An odd trailing bit is dropped.
pub fn xor_stage(bits: &[u8]) -> Result<Vec<u8>> {
    if bits.len() < 2 {
        return Err(Error::invalid(format!("xor stage needs at least 2 bits, got {}", bits.len())));
    }
    Ok(bits.chunks_exact(2).map(|c| c[0] ^ c[1]).collect())
}

pub fn predicted_p_after_stages(p0: f64, stages: u32) -> Result<f64> {
    check_p(p0)?;
    Ok((0..stages).fold(p0, |p, _| p * p + (1.0 - p) * (1.0 - p)))
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

/// `(p − ½, 1 − H₂(p))`.
pub fn leak_metrics(p: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    let eps = p - 0.5;
    // 1 − H₂ loses all precision near ½; use the series there
    let mi = if eps.abs() < 1e-3 {
        let x = 4.0 * eps * eps;
        (x / 2.0 + x * x / 12.0 + x * x * x / 30.0) / std::f64::consts::LN_2
    } else {
        1.0 - binary_entropy(p)
    };
    Ok((eps, mi))
}

/// Applies `stages` XOR stages.
pub fn amplify(key: &KeyMaterial, stages: u32) -> Result<(KeyMaterial, AmplificationReport)> {
    check_p(key.eve_p)?;
    let factor = 1usize
        .checked_shl(stages)
        .filter(|_| stages < usize::BITS)
        .ok_or_else(|| Error::invalid(format!("{stages} stages is too many")))?;
    if key.bits.len() < factor {
        return Err(Error::invalid(format!(
            "{} bits cannot survive {stages} stages (need >= {factor})",
            key.bits.len()
        )));
    }
    let mut bits = key.bits.clone();
    for _ in 0..stages {
        bits = xor_stage(&bits)?;
    }
    let p_out = predicted_p_after_stages(key.eve_p, stages)?;
    let (epsilon, mutual_information_leak) = leak_metrics(p_out)?;
    let report = AmplificationReport {
        stages,
        input_len: key.bits.len(),
        output_len: bits.len(),
        p_in: key.eve_p,
        p_out,
        slowdown_factor: factor as f64,
        epsilon,
        mutual_information_leak,
    };
    Ok((KeyMaterial { bits, eve_p: p_out }, report))
}

/// Empirical Eve correctness after amplification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationTrial {
    pub n_out: usize,
    pub n_correct: usize,
    pub p_hat: f64,
    pub predicted: f64,
    /// Binomial standard deviation of `p_hat` under the prediction.
    pub sigma: f64,
}

/// Draws `n_bits` random key bits and Eve guesses that are right
/// independently with probability `p0`, amplifies both, and scores Eve on
/// the output.
pub fn simulate_amplification(p0: f64, stages: u32, n_bits: usize, seed: u64) -> Result<AmplificationTrial> {
    check_p(p0)?;
    const BLOCK: usize = 1 << 14;
    let blocks = n_bits.div_ceil(BLOCK);
    let (key, guess): (Vec<Vec<u8>>, Vec<Vec<u8>>) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(derive_seed(seed, stream::PRIVACY, b as u64));
            let len = BLOCK.min(n_bits - b * BLOCK);
            let mut key = Vec::with_capacity(len);
            let mut guess = Vec::with_capacity(len);
            for _ in 0..len {
                let bit: u8 = rng.random_range(0..=1);
                let right = rng.random_bool(p0);
                key.push(bit);
                guess.push(if right { bit } else { bit ^ 1 });
            }
            (key, guess)
        })
        .unzip();
    let key: Vec<u8> = key.concat();
    let guess: Vec<u8> = guess.concat();
    let (out_key, report) = amplify(&KeyMaterial { bits: key, eve_p: p0 }, stages)?;
    let (out_guess, _) = amplify(&KeyMaterial { bits: guess, eve_p: p0 }, stages)?;
    let n_out = out_key.bits.len();
    let n_correct = out_key.bits.iter().zip(&out_guess.bits).filter(|(a, b)| a == b).count();
    let predicted = report.p_out;
    Ok(AmplificationTrial {
        n_out,
        n_correct,
        p_hat: n_correct as f64 / n_out as f64,
        predicted,
        sigma: (predicted * (1.0 - predicted) / n_out as f64).sqrt(),
    })
}

/// Key-value report text.
pub fn report_text(r: &AmplificationReport) -> String {
    format!(
        "stages={}\ninput_len={}\noutput_len={}\np_in={}\np_out={:.9}\nslowdown_factor={}\nepsilon={:.6e}\nmutual_information_leak={:.6e}\n",
        r.stages, r.input_len, r.output_len, r.p_in, r.p_out, r.slowdown_factor, r.epsilon, r.mutual_information_leak
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xor_truth_table() {
        assert_eq!(xor_stage(&[0, 1, 1, 1]).unwrap(), vec![1, 0]);
        assert_eq!(xor_stage(&[0, 0, 0, 0, 0, 0]).unwrap(), vec![0, 0, 0]);
        assert_eq!(xor_stage(&[1, 0, 1]).unwrap(), vec![1]);
        assert!(xor_stage(&[1]).is_err());
    }

    #[test]
    fn xor_correctness_enumeration() {
        // Eve's guess of a XOR bit is right iff both or neither inputs are
        let p: f64 = 0.7;
        let mut total = 0.0;
        for right_a in [true, false] {
            for right_b in [true, false] {
                let w = if right_a { p } else { 1.0 - p } * if right_b { p } else { 1.0 - p };
                let (a, b) = (0u8, 1u8);
                let ga = if right_a { a } else { a ^ 1 };
                let gb = if right_b { b } else { b ^ 1 };
                if (ga ^ gb) == (a ^ b) {
                    total += w;
                }
            }
        }
        assert!((total - predicted_p_after_stages(p, 1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn recursion_examples() {
        assert!((predicted_p_after_stages(0.7, 1).unwrap() - 0.58).abs() < 1e-12);
        let p = predicted_p_after_stages(0.8, 4).unwrap();
        assert!((p - 0.500141).abs() < 1e-6, "{p}");
        assert!(p > 0.5 && p < 0.5006);
        for s in 0..6 {
            assert_eq!(predicted_p_after_stages(0.5, s).unwrap(), 0.5);
            assert_eq!(predicted_p_after_stages(1.0, s).unwrap(), 1.0);
        }
        assert!(predicted_p_after_stages(0.4, 1).is_err());
    }

    #[test]
    fn leak_examples() {
        assert_eq!(leak_metrics(0.5).unwrap(), (0.0, 0.0));
        let (e, mi) = leak_metrics(1.0).unwrap();
        assert_eq!((e, mi), (0.5, 1.0));
        let (_, mi) = leak_metrics(0.500141).unwrap();
        let expected = 2.0 * 0.000141f64.powi(2) / std::f64::consts::LN_2;
        assert!((mi / expected - 1.0).abs() < 1e-3, "{mi}");
        assert!((mi - 5.7e-8).abs() < 0.1e-8);
    }

    #[test]
    fn leak_series_matches_entropy_away_from_half() {
        for p in [0.5009, 0.501, 0.52] {
            let direct = 1.0 - binary_entropy(p);
            let eps: f64 = p - 0.5;
            let x = 4.0 * eps * eps;
            let series = (x / 2.0 + x * x / 12.0 + x * x * x / 30.0) / std::f64::consts::LN_2;
            assert!((direct / series - 1.0).abs() < 1e-6, "{p}");
        }
    }

    #[test]
    fn amplify_bookkeeping() {
        let key = KeyMaterial::new(vec![1; 1600], 0.75).unwrap();
        let (out, rep) = amplify(&key, 4).unwrap();
        assert_eq!(out.bits.len(), 100);
        assert_eq!(rep.output_len, 100);
        assert_eq!(rep.slowdown_factor, 16.0);
        assert!((rep.epsilon - (rep.p_out - 0.5)).abs() < 1e-15);
        let (same, rep0) = amplify(&key, 0).unwrap();
        assert_eq!(same.bits, key.bits);
        assert_eq!(rep0.slowdown_factor, 1.0);
        assert!(amplify(&KeyMaterial::new(vec![0; 15], 0.7).unwrap(), 4).is_err());
    }

    #[test]
    fn monte_carlo_matches_recursion() {
        for p0 in [0.6, 0.7, 0.8, 0.9] {
            for s in 1..=4 {
                let t = simulate_amplification(p0, s, 1 << 16, 17).unwrap();
                assert!((t.p_hat - t.predicted).abs() <= 3.0 * t.sigma, "p0={p0} s={s} {t:?}");
            }
        }
    }

    #[test]
    fn bad_key_material_rejected() {
        assert!(KeyMaterial::new(vec![2], 0.7).is_err());
        assert!(KeyMaterial::new(vec![0], 0.3).is_err());
    }

    proptest! {
        #[test]
        fn each_stage_halves_length(bits in proptest::collection::vec(0u8..=1, 2..500)) {
            let out = xor_stage(&bits).unwrap();
            prop_assert_eq!(out.len(), bits.len() / 2);
        }

        #[test]
        fn amplified_length_is_floor(n in 16usize..3000, s in 0u32..5) {
            let key = KeyMaterial::new(vec![0; n], 0.6).unwrap();
            let (out, rep) = amplify(&key, s).unwrap();
            prop_assert_eq!(out.bits.len(), n >> s);
            prop_assert_eq!(rep.slowdown_factor, (1u64 << s) as f64);
        }

        #[test]
        fn recursion_contracts_quadratically(p in 0.5f64..1.0) {
            let next = predicted_p_after_stages(p, 1).unwrap();
            prop_assert!(next <= p + 1e-15);
            prop_assert!(next >= 0.5);
            prop_assert!((next - 0.5 - 2.0 * (p - 0.5).powi(2)).abs() < 1e-12);
        }
    }
}
