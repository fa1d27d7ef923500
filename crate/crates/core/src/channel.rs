//! Carriers, propagation, and the SNR-to-rate mapping.
//!
//! A component carrier splits its transmit power equally across its resource
//! blocks. Propagation follows a log-distance model anchored at a free-space
//! reference distance `d0`:
//!
//! ```text
//! PL(d) = PL0(f) + 10 * n_p * log10(d / d0)   [dB]
//! PL0(f) = 20 * log10(4 * pi * d0 * f / c)
//! ```
//!
//! so the d-for-loss inversion used to rank carrier footprints is closed
//! form. A block with SNR `g` carries `W * log2(1 + beta * g)` where `W` is
//! the per-block bandwidth in the simulation's rate unit and `beta` is an
//! SNR efficiency gap (1 for the Shannon bound). The logarithm base can be
//! switched to natural log for sensitivity runs.

use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Error raised by propagation queries that depend on scenario data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error(
        "no coverage: loss threshold {threshold_db} dB is below the reference-distance \
         path loss {reference_db} dB at {freq_hz} Hz"
    )]
    NoCoverage {
        freq_hz: f64,
        threshold_db: f64,
        reference_db: f64,
    },
}

/// Base of the logarithm in the rate mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    /// `W * log2(1 + beta * snr)` — rate in bits per unit bandwidth.
    #[default]
    Base2,
    /// `W * ln(1 + beta * snr)` — nats, for sensitivity checks.
    Natural,
}

/// One component carrier at the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    /// Small integer identifier, unique within a scenario.
    pub id: u32,
    /// Carrier frequency in Hz. Higher frequency means a smaller footprint.
    pub freq_hz: f64,
    /// Total transmit power in watts, split equally over resource blocks.
    pub total_power_w: f64,
    /// Number of resource blocks.
    pub n_rbs: usize,
    /// Per-block bandwidth in the simulation's rate unit (the bundled
    /// scenarios use MHz, so block rates come out in Mbit/s).
    pub rb_bandwidth: f64,
    /// SNR efficiency gap `beta`; 1.0 is the Shannon bound.
    pub snr_gap: f64,
}

impl Carrier {
    /// Power per resource block under equal power allocation.
    pub fn rb_power(&self) -> f64 {
        assert!(self.n_rbs > 0, "carrier {} has no resource blocks", self.id);
        self.total_power_w / self.n_rbs as f64
    }

    /// Rate of one resource block at the given SNR.
    pub fn rb_rate(&self, snr: f64, base: LogBase) -> f64 {
        assert!(snr >= 0.0, "negative SNR {snr}");
        let x = (self.snr_gap * snr).ln_1p();
        match base {
            LogBase::Base2 => self.rb_bandwidth * x / std::f64::consts::LN_2,
            LogBase::Natural => self.rb_bandwidth * x,
        }
    }
}

/// How channel gains are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainMode {
    /// Every user sees the same squared channel gain on every block.
    Equal(f64),
    /// Squared gain `10^(-PL(d)/10)` from the log-distance path loss.
    FromPathloss,
}

/// Propagation environment shared by all carriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    /// Reference distance `d0` in meters for the free-space anchor.
    pub ref_distance_m: f64,
    /// Path-loss exponent `n_p` (3.76 is a typical urban macro value).
    pub pathloss_exponent: f64,
    /// Noise power per resource block in watts.
    pub noise_power_w: f64,
    /// Gain source for the rate tables.
    pub gain_mode: GainMode,
}

impl ChannelModel {
    /// Free-space path loss at the reference distance, in dB.
    pub fn reference_loss_db(&self, freq_hz: f64) -> f64 {
        assert!(freq_hz > 0.0, "non-positive frequency {freq_hz}");
        20.0 * (4.0 * std::f64::consts::PI * self.ref_distance_m * freq_hz / SPEED_OF_LIGHT)
            .log10()
    }

    /// Log-distance path loss at `distance_m > 0`, in dB. Strictly
    /// increasing in both frequency and distance.
    pub fn pathloss_db(&self, freq_hz: f64, distance_m: f64) -> f64 {
        assert!(distance_m > 0.0, "non-positive distance {distance_m}");
        self.reference_loss_db(freq_hz)
            + 10.0 * self.pathloss_exponent * (distance_m / self.ref_distance_m).log10()
    }

    /// Distance at which the path loss reaches `loss_threshold_db`; the
    /// closed-form inverse of [`pathloss_db`](Self::pathloss_db). Errors if
    /// the threshold is below the reference-distance loss, where the model
    /// has no footprint.
    pub fn coverage_radius_m(
        &self,
        freq_hz: f64,
        loss_threshold_db: f64,
    ) -> Result<f64, ChannelError> {
        let reference_db = self.reference_loss_db(freq_hz);
        if loss_threshold_db < reference_db {
            return Err(ChannelError::NoCoverage {
                freq_hz,
                threshold_db: loss_threshold_db,
                reference_db,
            });
        }
        Ok(self.ref_distance_m
            * 10f64.powf((loss_threshold_db - reference_db) / (10.0 * self.pathloss_exponent)))
    }

    /// Squared channel gain seen by a user at `distance_m` on `freq_hz`.
    pub fn gain(&self, freq_hz: f64, distance_m: f64) -> f64 {
        match self.gain_mode {
            GainMode::Equal(g) => g,
            GainMode::FromPathloss => 10f64.powf(-self.pathloss_db(freq_hz, distance_m) / 10.0),
        }
    }

    /// SNR of one resource block: `p * g / noise`.
    pub fn rb_snr(&self, rb_power_w: f64, gain: f64) -> f64 {
        assert!(self.noise_power_w > 0.0, "non-positive noise power");
        assert!(rb_power_w >= 0.0 && gain >= 0.0, "negative power or gain");
        rb_power_w * gain / self.noise_power_w
    }
}

// ---------------------------------------------------------------------------
