//! Periodic voltage waveforms and their induced phase signals.
//!
//! Voltages are in units of `h*f0/e` and frequencies in `f0`, so the phase
//! signal obeys `dPhi/dt = 4*pi*V(t)` (`2e/hbar = 4*pi` with `h = e = 1`).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `2e/hbar` in the engine units.
pub const PHASE_RATE: f64 = 2.0 * TAU;

/// An exact rational harmonic coefficient `num/den` of `V0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub const fn new(num: i64, den: i64) -> Self {
        Self { num, den }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// One odd harmonic of the drive: `c * V0 * sin(m * Omega * t)` with odd `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Odd integer multiple of the base frequency.
    pub multiple: u32,
    /// Coefficient of `V0`, kept as an exact rational where the source gives one.
    pub coefficient: Rational,
}

/// An additional drive tone `amplitude * sin(omega t + phase)` carried
/// outside the odd-harmonic structure (protocol modulation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetTone {
    /// Angular frequency (units `f0`, i.e. radians per `1/f0`).
    pub angular_frequency: f64,
    /// Voltage amplitude (units `h*f0/e`).
    pub amplitude: f64,
    /// Phase offset in radians.
    pub phase: f64,
}

/// Periodic voltage drive built from odd-harmonic sine waves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    /// Drive frequency `f_dr` in units of `f0`.
    pub base_frequency: f64,
    /// Odd-harmonic content; coefficients multiply `amplitude_scale`.
    pub harmonics: Vec<Harmonic>,
    /// Overall voltage scale `V0` in units of `h*f0/e`.
    pub amplitude_scale: f64,
}

impl Waveform {
    pub fn new(base_frequency: f64, harmonics: Vec<Harmonic>, amplitude_scale: f64) -> Result<Self> {
        if base_frequency <= 0.0 {
            return Err(Error::Waveform("base frequency must be positive".into()));
        }
        for h in &harmonics {
            if h.multiple % 2 == 0 {
                return Err(Error::Waveform(format!(
                    "harmonic multiple {} is even; only odd harmonics keep the node structure",
                    h.multiple
                )));
            }
        }
        Ok(Self { base_frequency, harmonics, amplitude_scale })
    }

    /// Pure sine drive `V0 sin(Omega t)`.
    pub fn sine(base_frequency: f64, v0: f64) -> Self {
        Self {
            base_frequency,
            harmonics: vec![Harmonic { multiple: 1, coefficient: Rational::new(1, 1) }],
            amplitude_scale: v0,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.base_frequency
    }

    /// Angular drive frequency `Omega = 2 pi f_dr`.
    pub fn angular_frequency(&self) -> f64 {
        TAU * self.base_frequency
    }

    /// `V(t)`.
    pub fn voltage(&self, t: f64) -> f64 {
        let omega = self.angular_frequency();
        self.amplitude_scale
            * self
                .harmonics
                .iter()
                .map(|h| h.coefficient.value() * (h.multiple as f64 * omega * t).sin())
                .sum::<f64>()
    }

    /// `dV/dt`.
    pub fn slope(&self, t: f64) -> f64 {
        let omega = self.angular_frequency();
        self.amplitude_scale
            * omega
            * self
                .harmonics
                .iter()
                .map(|h| {
                    h.coefficient.value() * h.multiple as f64 * (h.multiple as f64 * omega * t).cos()
                })
                .sum::<f64>()
    }

    /// Peak voltage from dense sampling over one period.
    pub fn peak(&self, samples: usize) -> f64 {
        let t0 = self.period() / samples as f64;
        (0..samples)
            .map(|k| self.voltage(k as f64 * t0).abs())
            .fold(0.0, f64::max)
    }

    /// Rescale `V0` so that the peak voltage equals `v_max`.
    pub fn with_peak(mut self, v_max: f64) -> Self {
        let unit_peak = {
            let unit = Waveform { amplitude_scale: 1.0, ..self.clone() };
            unit.peak(20000)
        };
        self.amplitude_scale = v_max / unit_peak;
        self
    }
}

/// Capped seven-harmonic waveform.
///
/// The voltage is the antiderivative of `cos^13(Omega t)`: the sine series
/// with coefficients `C(13, 6-n) / (4096 (2n+1))`. This keeps the nodal slope
/// exactly `V0 * Omega` while flattening the peak to `(1024/3003) V0`, with
/// the second through twelfth derivatives vanishing at the cap.
pub fn capped_waveform(v0: f64, f_dr: f64) -> Result<Waveform> {
    if v0 <= 0.0 {
        return Err(Error::Waveform("V0 must be positive".into()));
    }
    // binomial column C(13, 6-n), n = 0..6
    const BINOM: [i64; 7] = [1716, 1287, 715, 286, 78, 13, 1];
    let harmonics = BINOM
        .iter()
        .enumerate()
        .map(|(n, &b)| {
            let m = 2 * n as u32 + 1;
            let g = gcd(b, 4096 * m as i64);
            Harmonic {
                multiple: m,
                coefficient: Rational::new(b / g, 4096 * m as i64 / g),
            }
        })
        .collect();
    Waveform::new(f_dr, harmonics, v0)
}

/// Peak fraction of the capped waveform, `1024/3003`.
pub const CAPPED_PEAK_FRACTION: f64 = 1024.0 / 3003.0;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Closed-form phase signal `Phi(t)` induced by a waveform, in the gauge
/// where its time average over one period vanishes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSignal {
    pub waveform: Waveform,
    pub offset_tones: Vec<OffsetTone>,
}

impl PhaseSignal {
    /// `Phi(t) = -sum_n (2e c_n V0 / hbar m_n Omega) cos(m_n Omega t)` plus
    /// the offset-tone contributions, each integrated in the zero-mean gauge.
    pub fn phi(&self, t: f64) -> f64 {
        let omega = self.waveform.angular_frequency();
        let v0 = self.waveform.amplitude_scale;
        let mut phi = -self
            .waveform
            .harmonics
            .iter()
            .map(|h| {
                let m = h.multiple as f64;
                PHASE_RATE * h.coefficient.value() * v0 / (m * omega) * (m * omega * t).cos()
            })
            .sum::<f64>();
        for tone in &self.offset_tones {
            // d/dt [-A' cos(w t + p)] = A' w sin(w t + p)
            phi -= PHASE_RATE * tone.amplitude / tone.angular_frequency
                * (tone.angular_frequency * t + tone.phase).cos();
        }
        phi
    }

    /// `dPhi/dt = (2e/hbar) V(t)`.
    pub fn phi_dot(&self, t: f64) -> f64 {
        let mut v = self.waveform.voltage(t);
        for tone in &self.offset_tones {
            v += tone.amplitude * (tone.angular_frequency * t + tone.phase).sin();
        }
        PHASE_RATE * v
    }
}

pub fn phase_signal(waveform: &Waveform) -> PhaseSignal {
    PhaseSignal { waveform: waveform.clone(), offset_tones: Vec::new() }
}

/// A node of `V(t)`: time, voltage slope, and the curvature sign
/// `mu = sgn(Phi''(t))` entering the stationary-phase weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub time: f64,
    pub slope: f64,
    pub mu: f64,
}

/// All zeros of `V(t)` in `[t0, t0 + periods*T)`.
///
/// For a valid odd-harmonic waveform these are exactly `t = T/2 * Z`; the
/// scan verifies no additional sign changes exist at 10^4 samples per period
/// and rejects coefficient choices that create extra nodes.
pub fn nodes(waveform: &Waveform, t0: f64, periods: u32) -> Result<Vec<Node>> {
    let t_period = waveform.period();
    let samples_per_period = 10_000usize;
    let total = samples_per_period * periods as usize;
    let dt = t_period / samples_per_period as f64;
    let v0 = waveform.amplitude_scale;

    let mut found: Vec<Node> = Vec::new();
    let mut prev_t = t0;
    let mut prev_v = waveform.voltage(prev_t);
    for k in 1..=total {
        let t = t0 + k as f64 * dt;
        let v = waveform.voltage(t);
        if prev_v == 0.0 || (prev_v > 0.0) != (v > 0.0) || v == 0.0 {
            // refine by bisection
            let (mut a, mut b) = (prev_t, t);
            let mut va = prev_v;
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let vm = waveform.voltage(m);
                if vm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if (va > 0.0) != (vm > 0.0) {
                    b = m;
                } else {
                    a = m;
                    va = vm;
                }
            }
            let tn = 0.5 * (a + b);
            if waveform.voltage(tn).abs() > 1e-10 * v0 {
                return Err(Error::Waveform(format!(
                    "sign change near t = {tn} does not refine to a clean node"
                )));
            }
            if tn >= t0 + periods as f64 * t_period - 1e-9 * t_period {
                // belongs to the next window
            } else if found.last().map_or(true, |last| (tn - last.time).abs() > 1e-6 * t_period) {
                let slope = waveform.slope(tn);
                found.push(Node { time: tn, slope, mu: slope.signum() });
            }
        }
        prev_t = t;
        prev_v = v;
    }

    // the half-period lattice is the only admissible node set
    let expected = 2 * periods as usize;
    if found.len() != expected {
        return Err(Error::Waveform(format!(
            "waveform has {} nodes in {periods} period(s), expected {expected}: \
             coefficients violate the node-structure requirement",
            found.len()
        )));
    }
    for (i, node) in found.iter().enumerate() {
        let lattice = t0 + i as f64 * t_period / 2.0;
        if (node.time - lattice).abs() > 1e-7 * t_period {
            return Err(Error::Waveform(format!(
                "node at t = {} is off the half-period lattice point {lattice}",
                node.time
            )));
        }
    }
    Ok(found)
}

/// Quarter-period phase amplitude `Phi0 = Int_0^{T/4} (2e/hbar) V(t) dt`,
/// in closed form from the harmonic coefficients.
pub fn phase_amplitude(waveform: &Waveform) -> f64 {
    let omega = waveform.angular_frequency();
    PHASE_RATE
        * waveform.amplitude_scale
        * waveform
            .harmonics
            .iter()
            .map(|h| h.coefficient.value() / (h.multiple as f64 * omega))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn capped_coefficients_are_the_expected_rationals() {
        let w = capped_waveform(1.0, 2.0).unwrap();
        let expect: [(u32, i64, i64); 7] = [
            (1, 429, 1024),
            (3, 429, 4096),
            (5, 143, 4096),
            (7, 143, 14336),
            (9, 13, 6144),
            (11, 13, 45056),
            (13, 1, 53248),
        ];
        for (h, (m, num, den)) in w.harmonics.iter().zip(expect.iter()) {
            assert_eq!(h.multiple, *m);
            assert_eq!((h.coefficient.num, h.coefficient.den), (*num, *den));
        }
    }

    #[test]
    fn capped_peak_is_exact_rational() {
        // exact i128 check: sum (-1)^n c_n = 1024/3003 with common denominator
        let w = capped_waveform(1.0, 2.0).unwrap();
        let mut num: i128 = 0;
        let mut den: i128 = 1;
        for (n, h) in w.harmonics.iter().enumerate() {
            let sign = if n % 2 == 0 { 1i128 } else { -1i128 };
            let hn = sign * h.coefficient.num as i128;
            let hd = h.coefficient.den as i128;
            num = num * hd + hn * den;
            den *= hd;
        }
        // num/den == 1024/3003  <=>  num * 3003 == 1024 * den
        assert_eq!(num * 3003, 1024 * den);

        // and the dense-sampled peak agrees, sitting at T/4
        let v0 = 3.7;
        let w = capped_waveform(v0, 2.0).unwrap();
        let peak = w.peak(200_000);
        assert_abs_diff_eq!(peak / v0, CAPPED_PEAK_FRACTION, epsilon = 1e-9);
        assert_abs_diff_eq!(peak / v0, 0.340992, epsilon = 1e-6);
        let t_quarter = w.period() / 4.0;
        assert_abs_diff_eq!(w.voltage(t_quarter) / v0, CAPPED_PEAK_FRACTION, epsilon = 1e-12);
        assert!(w.voltage(w.period() / 2.0).abs() < 1e-12 * v0);
    }

    #[test]
    fn capped_nodal_slope_is_exact() {
        let v0 = 2.5;
        let f_dr = 1.9976;
        let w = capped_waveform(v0, f_dr).unwrap();
        // sum of C(13, 6-n) over the odd column is 2^12, so the slope is V0*Omega
        assert_abs_diff_eq!(w.slope(0.0), v0 * w.angular_frequency(), epsilon = 1e-9 * v0);
    }

    #[test]
    fn antisymmetry_properties() {
        use rand::{Rng, SeedableRng};
        let w = capped_waveform(1.0, 2.0).unwrap();
        let t_half = w.period() / 2.0;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let t = rng.gen_range(0.0..w.period());
            assert!((w.voltage(t) + w.voltage(-t)).abs() < 1e-12);
            assert!((w.voltage(t) + w.voltage(t + t_half)).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_signal_pure_sine() {
        let v0 = 1.3;
        let f_dr = 2.0;
        let w = Waveform::sine(f_dr, v0);
        let sig = phase_signal(&w);
        let omega = w.angular_frequency();
        // Phi(t) = -(2e V0 / hbar Omega) cos(Omega t) in the zero-mean gauge
        let expect = -PHASE_RATE * v0 / omega;
        assert_abs_diff_eq!(sig.phi(0.0), expect, epsilon = 1e-12);
        assert!(sig.phi(w.period() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn phase_signal_matches_quadrature() {
        use rand::{Rng, SeedableRng};
        let w = capped_waveform(0.7, 1.9976).unwrap();
        let sig = phase_signal(&w);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..2.0 * w.period());
            // adaptive-ish Simpson quadrature of phi_dot from 0 to t
            let mut n = 64;
            let mut prev = simpson(|x| sig.phi_dot(x), 0.0, t, n);
            loop {
                n *= 2;
                let cur = simpson(|x| sig.phi_dot(x), 0.0, t, n);
                if (cur - prev).abs() < 1e-11 || n > 1 << 16 {
                    prev = cur;
                    break;
                }
                prev = cur;
            }
            let integral = prev + sig.phi(0.0);
            assert!((integral - sig.phi(t)).abs() < 1e-8, "t={t}");
        }
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + k as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn zero_mean_gauge() {
        let w = capped_waveform(1.1, 2.0).unwrap();
        let sig = phase_signal(&w);
        let avg = simpson(|t| sig.phi(t), 0.0, w.period(), 4096) / w.period();
        assert!(avg.abs() < 1e-9, "gauge average {avg}");
    }

    #[test]
    fn nodes_of_sine_and_capped() {
        let v0 = 1.0;
        let w = Waveform::sine(2.0, v0);
        let ns = nodes(&w, 0.0, 1).unwrap();
        assert_eq!(ns.len(), 2);
        let omega = w.angular_frequency();
        assert_abs_diff_eq!(ns[0].time, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ns[0].slope, v0 * omega, epsilon = 1e-8);
        assert_abs_diff_eq!(ns[1].time, w.period() / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ns[1].slope, -v0 * omega, epsilon = 1e-8);

        let w = capped_waveform(v0, 2.0).unwrap();
        let ns = nodes(&w, 0.0, 2).unwrap();
        assert_eq!(ns.len(), 4);
        for n in &ns {
            assert_abs_diff_eq!(n.slope.abs(), v0 * omega, epsilon = 1e-7);
        }
    }

    #[test]
    fn adversarial_waveform_has_extra_nodes() {
        let w = Waveform::new(
            2.0,
            vec![
                Harmonic { multiple: 1, coefficient: Rational::new(1, 1) },
                Harmonic { multiple: 3, coefficient: Rational::new(-1, 1) },
            ],
            1.0,
        )
        .unwrap();
        assert!(nodes(&w, 0.0, 1).is_err());
    }

    #[test]
    fn phase_amplitude_sine_and_slope_relation() {
        let v0 = 2.0;
        let f_dr = 2.0;
        let w = Waveform::sine(f_dr, v0);
        assert_abs_diff_eq!(
            phase_amplitude(&w),
            PHASE_RATE * v0 / w.angular_frequency(),
            epsilon = 1e-12
        );

        // capped waveform with peak 70 h f0 / e: nodal slope ~ 2.94 * 2 pi f_dr V_max
        let f_dr = 2.0 * (1.0 - 0.0012);
        let v_max = 70.0;
        let w = capped_waveform(v_max / CAPPED_PEAK_FRACTION, f_dr).unwrap();
        let slope = w.slope(0.0);
        let quoted = 2.94 * TAU * f_dr * v_max;
        assert!((slope / quoted - 1.0).abs() < 0.01, "slope ratio {}", slope / quoted);
    }

    #[test]
    fn peak_from_sampling_matches_closed_form() {
        let w = capped_waveform(1.0, 2.0).unwrap();
        // closed form at T/4: alternating sum of coefficients
        let closed: f64 = w
            .harmonics
            .iter()
            .enumerate()
            .map(|(n, h)| if n % 2 == 0 { h.coefficient.value() } else { -h.coefficient.value() })
            .sum();
        assert_abs_diff_eq!(w.peak(400_000), closed, epsilon = 1e-9);
    }
}
