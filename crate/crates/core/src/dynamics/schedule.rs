//! Piecewise parameter schedules.

use crate::error::{domain, Result};

/// Interpolation profile of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shape {
    Linear,
    /// `3s² − 2s³`: zero slope at both ends.
    #[default]
    Smoothstep,
}

impl Shape {
    fn weight(self, s: f64) -> f64 {
        match self {
            Shape::Linear => s,
            Shape::Smoothstep => s * s * (3.0 - 2.0 * s),
        }
    }
}

/// Controllable parameters at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub j: f64,
    /// Per-site chemical potential (enters as `−μᵢnᵢ`).
    pub mu: Vec<f64>,
    /// Amplitude multiplying the schedule's tilt pattern, added to `μ`.
    pub tilt: f64,
    /// Envelope of the sinusoidal drive.
    pub drive_amplitude: f64,
}

impl Params {
    pub fn new(j: f64, mu: Vec<f64>) -> Self {
        Params {
            j,
            mu,
            tilt: 0.0,
            drive_amplitude: 0.0,
        }
    }

    pub fn with_tilt(mut self, tilt: f64) -> Self {
        self.tilt = tilt;
        self
    }

    pub fn with_drive(mut self, amplitude: f64) -> Self {
        self.drive_amplitude = amplitude;
        self
    }

    fn blend(&self, other: &Params, w: f64) -> Params {
        let lerp = |a: f64, b: f64| a + (b - a) * w;
        Params {
            j: lerp(self.j, other.j),
            mu: self.mu.iter().zip(&other.mu).map(|(&a, &b)| lerp(a, b)).collect(),
            tilt: lerp(self.tilt, other.tilt),
            drive_amplitude: lerp(self.drive_amplitude, other.drive_amplitude),
        }
    }
}

/// Sinusoidal modulation `A(t)·sin(ω(t − t₀))·γᵢ nᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub omega: f64,
    pub pattern: Vec<f64>,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub from: Params,
    pub to: Params,
    pub shape: Shape,
}

/// Contiguous sequence of parameter ramps.
///
/// Before the first segment the initial parameters hold; after the last one
/// the final parameters hold.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule {
    pub u: f64,
    pub tilt_pattern: Vec<f64>,
    pub drive: Option<Drive>,
    start_time: f64,
    initial: Params,
    segments: Vec<Segment>,
}

impl RampSchedule {
    /// Schedule sitting at `initial` from `t_start` on, with no tilt pattern.
    pub fn new(u: f64, initial: Params, t_start: f64) -> Self {
        let n = initial.mu.len();
        RampSchedule {
            u,
            tilt_pattern: vec![0.0; n],
            drive: None,
            start_time: t_start,
            initial,
            segments: Vec::new(),
        }
    }

    /// Constant parameters forever.
    pub fn constant(u: f64, params: Params) -> Self {
        Self::new(u, params, 0.0)
    }

    pub fn with_tilt_pattern(mut self, pattern: Vec<f64>) -> Result<Self> {
        if pattern.len() != self.nsites() {
            return domain("tilt pattern length differs from the number of sites");
        }
        self.tilt_pattern = pattern;
        Ok(self)
    }

    pub fn with_drive(mut self, drive: Drive) -> Result<Self> {
        if drive.pattern.len() != self.nsites() {
            return domain("drive pattern length differs from the number of sites");
        }
        self.drive = Some(drive);
        Ok(self)
    }

    /// Append a ramp from the current end point to `target`. A zero duration
    /// appends nothing.
    pub fn then(mut self, duration: f64, target: Params, shape: Shape) -> Result<Self> {
        if !(duration >= 0.0) || !duration.is_finite() {
            return domain(format!("segment duration must be finite and non-negative, got {duration}"));
        }
        if target.mu.len() != self.nsites() {
            return domain("segment target has the wrong number of sites");
        }
        if duration == 0.0 {
            return Ok(self);
        }
        let t_start = self.end_time();
        let from = self.final_params().clone();
        self.segments.push(Segment {
            t_start,
            t_end: t_start + duration,
            from,
            to: target,
            shape,
        });
        Ok(self)
    }

    /// Hold the current end point for `duration`.
    pub fn hold(self, duration: f64) -> Result<Self> {
        let p = self.final_params().clone();
        self.then(duration, p, Shape::Linear)
    }

    pub fn nsites(&self) -> usize {
        self.initial.mu.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.start_time, |s| s.t_end)
    }

    pub fn final_params(&self) -> &Params {
        self.segments.last().map_or(&self.initial, |s| &s.to)
    }

    /// Parameters at time `t`.
    pub fn at(&self, t: f64) -> Params {
        let Some(k) = self.segments.iter().position(|s| t < s.t_end) else {
            return self.final_params().clone();
        };
        let s = &self.segments[k];
        if t <= s.t_start {
            return s.from.clone();
        }
        let frac = (t - s.t_start) / (s.t_end - s.t_start);
        s.from.blend(&s.to, s.shape.weight(frac))
    }

    /// Per-site coefficients `cᵢ` of `nᵢ` at time `t`.
    pub fn onsite(&self, t: f64, p: &Params) -> Vec<f64> {
        let drive = self.drive.as_ref().map(|d| (p.drive_amplitude * (d.omega * (t - d.t0)).sin(), &d.pattern));
        (0..self.nsites())
            .map(|i| {
                let mut c = -(p.mu[i] + p.tilt * self.tilt_pattern[i]);
                if let Some((a, g)) = drive {
                    c += a * g[i];
                }
                c
            })
            .collect()
    }
}
