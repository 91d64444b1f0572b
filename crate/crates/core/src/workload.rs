use crate::arrivals::{ArrivalSchedule, LengthDistribution};
use crate::error::{Error, Result};
use crate::request::{Request, RequestId};

/// The requests one simulation run serves, in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    requests: Vec<Request>,
}

impl Workload {
    pub fn new(mut requests: Vec<Request>) -> Result<Self> {
        if requests.is_empty() {
            return Err(Error::Config("workload has no requests".into()));
        }
        for r in &requests {
            r.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        let mut ids: Vec<RequestId> = requests.iter().map(|r| r.id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate request id {}", w[0])));
        }
        requests.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.id.cmp(&b.id)));
        Ok(Self { requests })
    }

    /// Pairs a schedule with per-request EOS iterations. `max_output_length`
    /// caps every request; when `None`, each request's cap is its own sampled
    /// length (the sampled value is the request's length limit).
    pub fn from_parts(
        schedule: &ArrivalSchedule,
        lengths: &[u32],
        max_output_length: Option<u32>,
        batch_size: u32,
    ) -> Result<Self> {
        if schedule.len() != lengths.len() {
            return Err(Error::Config(format!("{} arrivals but {} lengths", schedule.len(), lengths.len())));
        }
        let requests = schedule
            .entries()
            .iter()
            .zip(lengths)
            .map(|(&(id, t), &len)| {
                let cap = max_output_length.unwrap_or(len);
                Request {
                    id,
                    batch_size,
                    input_len: 8,
                    max_output_length: cap,
                    actual_output_length: len.min(cap),
                    arrival_time: t,
                }
            })
            .collect();
        Self::new(requests)
    }

    pub fn generate(
        schedule: &ArrivalSchedule,
        lengths: LengthDistribution,
        max_output_length: Option<u32>,
        batch_size: u32,
        seed: u64,
    ) -> Result<Self> {
        let sampled = crate::arrivals::sample_output_lengths(schedule.len(), lengths, seed)?;
        Self::from_parts(schedule, &sampled, max_output_length, batch_size)
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}
