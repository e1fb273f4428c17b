//! Per-slot Age of Information state machine: Bernoulli packet arrivals,
//! packet-availability indicator, queuing time, the AoI recursion, and
//! scheduling-constraint validation.

use rand::Rng;

use crate::error::{Error, Result};

/// Per-stream AoI state at one slot.
#[derive(Debug, Clone)]
pub struct AoiState {
    /// Age of information, in slots.
    pub age: Vec<u64>,
    /// Queuing/system time, in slots; resets when the stream is scheduled.
    pub queue_time: Vec<u64>,
    /// Packet-availability indicator.
    pub has_packet: Vec<bool>,
    /// Arrival indicator for the current slot.
    pub arrived: Vec<bool>,
}

impl AoiState {
    /// Initial state: age 1, queue time 0, availability equal to the first
    /// slot's arrivals.
    pub fn initial(arrivals: &[bool]) -> Self {
        Self {
            age: vec![1; arrivals.len()],
            queue_time: vec![0; arrivals.len()],
            has_packet: arrivals.to_vec(),
            arrived: arrivals.to_vec(),
        }
    }

    pub fn num_streams(&self) -> usize {
        self.age.len()
    }
}

/// Binary one-channel schedule: at most one stream scheduled per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleVector {
    pub scheduled: Vec<bool>,
}

impl ScheduleVector {
    pub fn none(num_streams: usize) -> Self {
        Self { scheduled: vec![false; num_streams] }
    }

    pub fn single(num_streams: usize, stream: usize) -> Self {
        let mut scheduled = vec![false; num_streams];
        scheduled[stream] = true;
        Self { scheduled }
    }

    /// Index of the scheduled stream, if any.
    pub fn chosen(&self) -> Option<usize> {
        self.scheduled.iter().position(|&s| s)
    }

    pub fn validate(&self) -> Result<()> {
        let count = self.scheduled.iter().filter(|&&s| s).count();
        if count > 1 {
            return Err(Error::Schedule(format!(
                "{count} streams scheduled simultaneously, at most one channel available"
            )));
        }
        Ok(())
    }
}

/// Independent Bernoulli arrival draws, one per stream.
pub fn draw_arrivals<R: Rng>(probs: &[f64], rng: &mut R) -> Vec<bool> {
    probs.iter().map(|&p| rng.gen::<f64>() < p).collect()
}

/// Packet-availability recursion:
/// `xi' = p' + xi (1 - alpha)(1 - p')`.
pub fn step_xi(xi: bool, alpha: bool, p_next: bool) -> bool {
    p_next || (xi && !alpha)
}

/// Queuing-time recursion: resets to 0 when the stream is scheduled,
/// otherwise grows by one slot.
pub fn step_z(z: u64, alpha: bool) -> u64 {
    if alpha {
        0
    } else {
        z + 1
    }
}

/// AoI recursion `A' = z a xi + A (1 - a xi) + 1`: a successful delivery
/// resets the age to `z + 1`, otherwise it grows by one slot.
pub fn step_aoi(age: u64, z: u64, alpha: bool, xi: bool) -> u64 {
    if alpha && xi {
        z + 1
    } else {
        age + 1
    }
}

/// Checks the per-stream SNR constraint `gamma_k >= alpha_k xi_k gamma_th`
/// and the single-channel constraint. Returns per-stream acceptance; the
/// constraint is vacuous for unscheduled streams and for streams without an
/// available packet.
pub fn validate_schedule(
    schedule: &ScheduleVector,
    has_packet: &[bool],
    snr: &[f64],
    snr_threshold: f64,
) -> Result<Vec<bool>> {
    if schedule.scheduled.len() != has_packet.len() || snr.len() != has_packet.len() {
        return Err(Error::Dimension(format!(
            "schedule/xi/snr lengths differ: {}/{}/{}",
            schedule.scheduled.len(),
            has_packet.len(),
            snr.len()
        )));
    }
    schedule.validate()?;
    Ok(schedule
        .scheduled
        .iter()
        .zip(has_packet)
        .zip(snr)
        .map(|((&a, &xi), &g)| !(a && xi) || g >= snr_threshold)
        .collect())
}
