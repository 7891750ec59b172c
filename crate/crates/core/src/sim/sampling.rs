use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::sim::state::StateVector;

/// Measurement outcome; `bits[0]` is wire 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    bits: Vec<bool>,
}

impl Bitstring {
    pub fn from_index(index: usize, n_qubits: usize) -> Self {
        let bits = (0..n_qubits)
            .map(|w| index & (1 << (n_qubits - 1 - w)) != 0)
            .collect();
        Self { bits }
    }

    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Draws `shots` i.i.d. computational-basis samples.
pub fn sample_bitstrings(state: &StateVector, shots: usize, seed: u64) -> Result<Vec<Bitstring>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(state, shots, &mut rng)
}

pub fn sample_with(
    state: &StateVector,
    shots: usize,
    rng: &mut impl rand::Rng,
) -> Result<Vec<Bitstring>> {
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    let dist = WeightedIndex::new(state.probabilities())
        .map_err(|e| invalid(format!("cannot sample from state: {e}")))?;
    Ok((0..shots)
        .map(|_| Bitstring::from_index(dist.sample(rng), state.n_qubits()))
        .collect())
}

/// Argmax of the outcome distribution; the lowest index wins ties.
pub fn most_probable_bitstring(state: &StateVector) -> Bitstring {
    let mut best = 0;
    let mut best_p = f64::NEG_INFINITY;
    for (k, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p > best_p {
            best = k;
            best_p = p;
        }
    }
    Bitstring::from_index(best, state.n_qubits())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_index_round_trip() {
        for k in 0..16 {
            let b = Bitstring::from_index(k, 4);
            assert_eq!(b.index(), k);
            assert_eq!(b.count_ones(), k.count_ones() as usize);
        }
        assert_eq!(Bitstring::from_index(4, 3).to_string(), "100");
    }

    #[test]
    fn frequencies_follow_probabilities() {
        let s = StateVector::from_real(&[1.0, 0.0, 3f64.sqrt(), 0.0]).unwrap();
        let shots = 20_000;
        let draws = sample_bitstrings(&s, shots, 3).unwrap();
        assert!(draws.iter().all(|b| b.index() == 0 || b.index() == 2));
        let f = draws.iter().filter(|b| b.index() == 2).count() as f64 / shots as f64;
        // binomial sd is about 0.003
        assert!((f - 0.75).abs() < 0.02, "{f}");
        assert_eq!(draws, sample_bitstrings(&s, shots, 3).unwrap());
        assert_eq!(most_probable_bitstring(&s).index(), 2);
        assert!(sample_bitstrings(&s, 0, 3).is_err());
    }
}
