//! RIS element response profiles (the diagonal of Θ) and phase alignment.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Per-element magnitude `α_n ∈ [0, 1]` and phase `φ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisPhaseProfile {
    magnitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl RisPhaseProfile {
    /// Unit-magnitude profile with the given phases.
    pub fn from_phases(phases: Vec<f64>) -> Self {
        Self {
            magnitudes: vec![1.0; phases.len()],
            phases,
        }
    }

    pub fn new(magnitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if magnitudes.len() != phases.len() {
            return Err(Error::DimensionMismatch {
                expected: phases.len(),
                actual: magnitudes.len(),
            });
        }
        if let Some(a) = magnitudes.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid("magnitudes", format!("{a} outside [0, 1]")));
        }
        Ok(Self { magnitudes, phases })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Diagonal entries `α_n e^{jφ_n}`.
    pub fn coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.magnitudes
            .iter()
            .zip(&self.phases)
            .map(|(&a, &p)| Complex64::from_polar(a, p))
    }

    /// Snap every phase to the nearest of `2^bits` uniform levels on `[0, 2π)`.
    pub fn quantize(&self, bits: u32) -> Result<Self> {
        quantize(self, bits)
    }
}

/// Co-phasing profile: every cascaded term `g_n h_n` is rotated onto the
/// direct path (or onto the real axis when there is no direct path), which
/// maximizes `|gᵀΘh + h_siso|` over continuous phases.
pub fn optimal_phases(r: &ChannelRealization) -> RisPhaseProfile {
    let reference = if r.h_siso == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        r.h_siso.arg()
    };
    let phases =
        r.g.iter()
            .zip(&r.h)
            .map(|(g, h)| (reference - (g * h).arg()).rem_euclid(TWO_PI))
            .collect();
    RisPhaseProfile::from_phases(phases)
}

/// Independent uniform phases on `[0, 2π)`.
pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RisPhaseProfile {
    RisPhaseProfile::from_phases((0..n).map(|_| rng.random::<f64>() * TWO_PI).collect())
}

/// RIS switched off: `α_n = 0`.
pub fn off_profile(n: usize) -> RisPhaseProfile {
    RisPhaseProfile {
        magnitudes: vec![0.0; n],
        phases: vec![0.0; n],
    }
}

pub fn quantize(profile: &RisPhaseProfile, bits: u32) -> Result<RisPhaseProfile> {
    if bits == 0 || bits > 52 {
        return Err(Error::invalid("bits", format!("{bits} outside 1..=52")));
    }
    let levels = (1u64 << bits) as f64;
    let step = TWO_PI / levels;
    let phases = profile
        .phases
        .iter()
        .map(|p| {
            let k = (p.rem_euclid(TWO_PI) / step).round() % levels;
            k * step
        })
        .collect();
    Ok(RisPhaseProfile {
        magnitudes: profile.magnitudes.clone(),
        phases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channel, LosIndicators};
    use crate::rng::{substream, Stream};
    use rand_distr::{Distribution, StandardNormal};

    fn realization(h: Vec<Complex64>, g: Vec<Complex64>, h_siso: Complex64) -> ChannelRealization {
        ChannelRealization {
            h,
            g,
            h_siso,
            seed: 0,
            index: 0,
            los: LosIndicators::default(),
        }
    }

    fn random_realization(seed: u64, n: usize, direct: bool) -> ChannelRealization {
        let mut rng = substream(seed, 0, Stream::TxRis);
        let mut c = || {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        };
        let h = (0..n).map(|_| c()).collect();
        let g = (0..n).map(|_| c()).collect();
        let s = if direct { c() } else { Complex64::new(0.0, 0.0) };
        realization(h, g, s)
    }

    #[test]
    fn single_element_alignment() {
        let r = realization(
            vec![Complex64::from_polar(0.3, 1.1)],
            vec![Complex64::from_polar(2.0, -2.5)],
            Complex64::new(0.0, 0.0),
        );
        let p = optimal_phases(&r);
        let e = effective_channel(&r, &p).unwrap();
        assert!((e.norm() - 0.6).abs() < 1e-14);
        assert!(e.arg().abs() < 1e-12);
    }

    #[test]
    fn optimal_beats_random_profiles() {
        for seed in 0..20 {
            let r = random_realization(seed, 9, seed % 2 == 0);
            let best = effective_channel(&r, &optimal_phases(&r)).unwrap().norm();
            let bound = r.h_siso.norm() + r.g.iter().zip(&r.h).map(|(g, h)| (g * h).norm()).sum::<f64>();
            assert!((best - bound).abs() < 1e-12 * bound);
            let mut rng = substream(seed, 1, Stream::Phases);
            for _ in 0..50 {
                let p = random_phases(&mut rng, 9);
                assert!(effective_channel(&r, &p).unwrap().norm() <= best + 1e-12);
            }
        }
    }

    #[test]
    fn global_phase_offset_is_harmless_without_direct_link() {
        let r = random_realization(5, 16, false);
        let p = optimal_phases(&r);
        let base = effective_channel(&r, &p).unwrap().norm();
        let shifted = RisPhaseProfile::from_phases(p.phases().iter().map(|x| x + 1.234).collect());
        let moved = effective_channel(&r, &shifted).unwrap().norm();
        assert!((base - moved).abs() < 1e-12 * base);
        assert_eq!(optimal_phases(&r), p);
    }

    #[test]
    fn off_profile_leaves_direct_link() {
        let r = random_realization(2, 4, true);
        assert_eq!(effective_channel(&r, &off_profile(4)).unwrap(), r.h_siso);
    }

    #[test]
    fn random_defaults_and_range() {
        let mut rng = substream(1, 0, Stream::Phases);
        let p = random_phases(&mut rng, 64);
        assert!(p.magnitudes().iter().all(|a| *a == 1.0));
        assert!(p.phases().iter().all(|x| (0.0..TWO_PI).contains(x)));
    }

    #[test]
    fn quantization_levels() {
        let p = RisPhaseProfile::from_phases(vec![0.1, 1.7, 3.0, 4.9, 6.2, -0.4]);
        let q = quantize(&p, 1).unwrap();
        assert!(q.phases().iter().all(|x| *x == 0.0 || *x == PI));
        assert_eq!(q.phases(), &[0.0, PI, PI, 0.0, 0.0, 0.0]);
        assert!(quantize(&p, 0).is_err());

        // residual error is at most half a step
        for bits in [4, 20, 32] {
            let q = quantize(&p, bits).unwrap();
            let half_step = PI / (1u64 << bits) as f64;
            for (a, b) in p.phases().iter().zip(q.phases()) {
                let d = (Complex64::cis(*a) - Complex64::cis(*b)).norm();
                assert!(d <= half_step * (1.0 + 1e-9), "bits {bits}: {d}");
            }
        }
        let q = quantize(&p, 32).unwrap();
        for (a, b) in p.phases().iter().zip(q.phases()) {
            assert!((Complex64::cis(*a) - Complex64::cis(*b)).norm() < 1e-9);
        }
    }

    #[test]
    fn two_bit_quantization_loss_is_bounded() {
        // Equal-amplitude terms: asymptotic loss is sinc²(π/4) = -0.91 dB.
        let n = 64;
        let mut continuous = 0.0;
        let mut quantized = 0.0;
        for seed in 0..2000 {
            let mut rng = substream(seed, 0, Stream::TxRis);
            let h: Vec<Complex64> = (0..n).map(|_| Complex64::cis(rng.random::<f64>() * TWO_PI)).collect();
            let r = realization(h, vec![Complex64::new(1.0, 0.0); n], Complex64::new(0.0, 0.0));
            let p = optimal_phases(&r);
            continuous += effective_channel(&r, &p).unwrap().norm_sqr();
            quantized += effective_channel(&r, &p.quantize(2).unwrap()).unwrap().norm_sqr();
        }
        let loss_db = 10.0 * (continuous / quantized).log10();
        assert!(loss_db > 0.0 && loss_db <= 0.91, "{loss_db}");
    }

    #[test]
    fn profile_rejects_bad_magnitudes() {
        assert!(RisPhaseProfile::new(vec![1.2], vec![0.0]).is_err());
        assert!(RisPhaseProfile::new(vec![1.0, 1.0], vec![0.0]).is_err());
    }
}
