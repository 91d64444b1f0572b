//! Slot-granular model of the contiguous device buffer that holds every fused
//! request, plus the sliding-window search that decides where a compacted
//! region should live.
//!
//! One slot holds one request. The live window `[buffer_offset,
//! buffer_offset + buffer_size)` is what kernels and collectives operate on,
//! so empty (orphaned) slots inside it still cost time until they are trimmed
//! off the ends or compacted away.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::request::RequestId;

/// Longest input accepted by [`brute_force_min_window`].
pub const ORACLE_BOUND: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Freed slot. Keeps the size of its last occupant so orphaned bytes can
    /// still be charged while the slot sits inside the live window.
    Empty {
        size: u64,
    },
    Occupied {
        request: RequestId,
        size: u64,
    },
}

impl Slot {
    pub fn size(&self) -> u64 {
        match *self {
            Slot::Empty { size } | Slot::Occupied { size, .. } => size,
        }
    }

    pub fn occupant(&self) -> Option<RequestId> {
        match *self {
            Slot::Occupied { request, .. } => Some(request),
            Slot::Empty { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Slot::Empty { .. })
    }

    /// Cost the shuffle search assigns to this slot: zero when free.
    fn weight(&self) -> u64 {
        match *self {
            Slot::Occupied { size, .. } => size,
            Slot::Empty { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub request: RequestId,
    pub src_slot: usize,
    pub dst_slot: usize,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShufflePlan {
    pub moves: Vec<Move>,
    /// Absolute slot index where the compacted region starts.
    pub window_offset: usize,
    pub window_len: usize,
    pub total_bytes_moved: u64,
    generation: u64,
}

impl ShufflePlan {
    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BufferLayout {
    slots: Vec<Slot>,
    buffer_offset: usize,
    buffer_size: usize,
    offsets: BTreeMap<RequestId, usize>,
    max_slots: Option<usize>,
    generation: u64,
}

impl BufferLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_max_slots(max_slots: usize) -> Self {
        Self { max_slots: Some(max_slots), ..Self::default() }
    }

    /// Builds a layout whose live window spans all of `slots`. Mostly useful
    /// for tests and for replaying a recorded buffer state.
    pub fn from_slots(slots: Vec<Slot>) -> Result<Self> {
        let mut offsets = BTreeMap::new();
        for (idx, slot) in slots.iter().enumerate() {
            if let Slot::Occupied { request, size } = *slot {
                if size == 0 {
                    return Err(Error::InvalidParam(format!("slot {idx} is occupied with size 0")));
                }
                if offsets.insert(request, idx).is_some() {
                    return Err(Error::DuplicateRequest(request));
                }
            }
        }
        Ok(Self { buffer_offset: 0, buffer_size: slots.len(), slots, offsets, max_slots: None, generation: 0 })
    }

    /// Shorthand for `from_slots` where a zero size means an empty slot and
    /// occupied slot `i` holds request `i`.
    pub fn from_sizes(sizes: &[u64]) -> Self {
        let slots = sizes
            .iter()
            .enumerate()
            .map(|(i, &size)| {
                if size == 0 {
                    Slot::Empty { size: 0 }
                } else {
                    Slot::Occupied { request: RequestId(i as u32), size }
                }
            })
            .collect();
        Self::from_slots(slots).expect("distinct ids and positive sizes")
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn buffer_offset(&self) -> usize {
        self.buffer_offset
    }

    pub fn buffer_size(&self) -> usize {
        self.buffer_size
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn live_window(&self) -> &[Slot] {
        &self.slots[self.buffer_offset..self.buffer_offset + self.buffer_size]
    }

    /// Bytes spanned by the live window, orphans included.
    pub fn live_bytes(&self) -> u64 {
        self.live_window().iter().map(Slot::size).sum()
    }

    pub fn occupied_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn offset_of(&self, request: RequestId) -> Option<usize> {
        self.offsets.get(&request).copied()
    }

    pub fn has_interior_holes(&self) -> bool {
        self.live_window().iter().any(Slot::is_empty)
    }

    /// True when the occupied slots are exactly the live window.
    pub fn is_contiguous(&self) -> bool {
        let occupied: Vec<usize> = self.offsets.values().copied().collect();
        let lo = self.buffer_offset;
        occupied.len() == self.buffer_size && occupied.iter().all(|&i| i >= lo && i < lo + self.buffer_size)
    }

    /// Places a new request immediately after the live window.
    pub fn fuse_request(&mut self, request: RequestId, size: u64) -> Result<usize> {
        if self.offsets.contains_key(&request) {
            return Err(Error::DuplicateRequest(request));
        }
        if size == 0 {
            return Err(Error::InvalidParam(format!("request {request} has zero tensor size")));
        }
        let idx = self.buffer_offset + self.buffer_size;
        if let Some(max_slots) = self.max_slots {
            if idx >= max_slots {
                return Err(Error::CapacityExceeded { max_slots });
            }
        }
        if idx >= self.slots.len() {
            self.slots.resize(idx + 1, Slot::Empty { size: 0 });
        }
        debug_assert!(self.slots[idx].is_empty());
        self.slots[idx] = Slot::Occupied { request, size };
        self.buffer_size += 1;
        self.offsets.insert(request, idx);
        self.generation += 1;
        Ok(idx)
    }

    /// Frees a request's slot in place, leaving an orphan. The window bounds
    /// are untouched.
    pub fn evict_request(&mut self, request: RequestId) -> Result<()> {
        let idx = self.offsets.remove(&request).ok_or(Error::UnknownRequest(request))?;
        let size = self.slots[idx].size();
        self.slots[idx] = Slot::Empty { size };
        self.generation += 1;
        Ok(())
    }

    /// Drops orphaned slots from both ends of the live window. Moves no data.
    pub fn trim_boundaries(&mut self) {
        let before = (self.buffer_offset, self.buffer_size);
        while self.buffer_size > 0 && self.slots[self.buffer_offset].is_empty() {
            self.buffer_offset += 1;
            self.buffer_size -= 1;
        }
        while self.buffer_size > 0 && self.slots[self.buffer_offset + self.buffer_size - 1].is_empty() {
            self.buffer_size -= 1;
        }
        if before != (self.buffer_offset, self.buffer_size) {
            self.generation += 1;
        }
    }

    /// Collapses the window once nothing in it is live. This is the only
    /// compaction the naive (no-shuffle) discipline performs.
    pub fn release_if_drained(&mut self) {
        if self.offsets.is_empty() && self.buffer_size > 0 {
            self.trim_boundaries();
        }
    }

    /// Chooses the cheapest region of `occupied_count` slots inside the live
    /// window and pairs out-of-region occupants with in-region holes, both in
    /// ascending slot order.
    pub fn plan_shuffle(&self) -> ShufflePlan {
        let window = self.live_window();
        let weights: Vec<u64> = window.iter().map(Slot::weight).collect();
        let region = find_shuffled_memory_region(&weights);
        let len = self.occupied_count();
        let inside = |i: usize| i >= region && i < region + len;

        let sources = window.iter().enumerate().filter(|&(i, s)| !s.is_empty() && !inside(i));
        let holes = window.iter().enumerate().filter(|&(i, s)| s.is_empty() && inside(i));

        let moves: Vec<Move> = sources
            .zip(holes)
            .map(|((src, slot), (dst, _))| Move {
                request: slot.occupant().expect("source slot is occupied"),
                src_slot: self.buffer_offset + src,
                dst_slot: self.buffer_offset + dst,
                bytes: slot.size(),
            })
            .collect();
        let total_bytes_moved = moves.iter().map(|m| m.bytes).sum();
        ShufflePlan {
            moves,
            window_offset: self.buffer_offset + region,
            window_len: len,
            total_bytes_moved,
            generation: self.generation,
        }
    }

    pub fn apply_shuffle(&mut self, plan: &ShufflePlan) -> Result<()> {
        if plan.generation != self.generation {
            return Err(Error::StalePlan { planned: plan.generation, current: self.generation });
        }
        for mv in &plan.moves {
            debug_assert!(self.slots[mv.dst_slot].is_empty());
            self.slots[mv.dst_slot] = Slot::Occupied { request: mv.request, size: mv.bytes };
            self.slots[mv.src_slot] = Slot::Empty { size: mv.bytes };
            self.offsets.insert(mv.request, mv.dst_slot);
        }
        let before = (self.buffer_offset, self.buffer_size);
        self.buffer_offset = plan.window_offset;
        self.buffer_size = plan.window_len;
        if !plan.moves.is_empty() || before != (self.buffer_offset, self.buffer_size) {
            self.generation += 1;
        }
        debug_assert!(self.is_contiguous());
        Ok(())
    }
}

/// Sliding-window search for the start of the region that should hold all
/// non-zero entries of `arr` after compaction.
///
/// The window length is the number of non-zero entries; its cost is the
/// weight lying outside it, i.e. what would have to be copied in. Runs in
/// O(n) and returns the earliest minimiser. Returns 0 when `arr` has no
/// non-zero entry.
pub fn find_shuffled_memory_region(arr: &[u64]) -> usize {
    min_cost_window(arr).0
}

/// [`find_shuffled_memory_region`] together with the cost of the chosen window.
pub fn min_cost_window(arr: &[u64]) -> (usize, u64) {
    let mut total_cost = 0u64;
    let mut non_zero = 0usize;
    for &v in arr {
        if v != 0 {
            non_zero += 1;
            total_cost += v;
        }
    }

    let mut window_cost: u64 = arr[..non_zero].iter().sum();
    let mut min_cost = total_cost - window_cost;
    let mut mem_offset = 0;
    for i in non_zero..arr.len() {
        window_cost = window_cost + arr[i] - arr[i - non_zero];
        let current_cost = total_cost - window_cost;
        if current_cost < min_cost {
            min_cost = current_cost;
            mem_offset = i + 1 - non_zero;
        }
    }
    (mem_offset, min_cost)
}

/// Independent check for [`find_shuffled_memory_region`]: sums every window
/// from scratch and keeps the first one with the smallest outside weight.
pub fn brute_force_min_window(arr: &[u64]) -> Result<(usize, u64)> {
    if arr.len() > ORACLE_BOUND {
        return Err(Error::OracleBoundExceeded { len: arr.len(), bound: ORACLE_BOUND });
    }
    let len = arr.iter().filter(|&&v| v != 0).count();
    let mut best: Option<(usize, u64)> = None;
    for start in 0..=arr.len() - len {
        let outside: u64 =
            arr.iter().enumerate().filter(|&(i, _)| i < start || i >= start + len).map(|(_, &v)| v).sum();
        if best.is_none_or(|(_, c)| outside < c) {
            best = Some((start, outside));
        }
    }
    Ok(best.unwrap_or((0, 0)))
}

/// Summary of an oracle sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub cases: usize,
    pub mismatches: Vec<Vec<u64>>,
}

/// Compares the sliding window against the brute-force oracle on every 0/1
/// array of length `len`.
pub fn exhaustive_binary_check(len: u32) -> OracleReport {
    let mut report = OracleReport::default();
    for mask in 0u64..(1u64 << len) {
        let arr: Vec<u64> = (0..len).map(|b| (mask >> b) & 1).collect();
        check_one(&arr, &mut report);
    }
    report
}

/// Compares the two routes on `cases` random arrays (length 0..=`max_len`,
/// entries 0..=`max_value`, roughly a third of them zero).
pub fn random_weighted_check(cases: usize, max_len: usize, max_value: u64, seed: u64) -> OracleReport {
    let mut rng = crate::rng::SimRng::new(seed);
    let mut report = OracleReport::default();
    for _ in 0..cases {
        let len = rng.uniform_inclusive(0, max_len as u64) as usize;
        let arr: Vec<u64> = (0..len)
            .map(|_| if rng.uniform_inclusive(0, 2) == 0 { 0 } else { rng.uniform_inclusive(1, max_value) })
            .collect();
        check_one(&arr, &mut report);
    }
    report
}

fn check_one(arr: &[u64], report: &mut OracleReport) {
    report.cases += 1;
    let fast = min_cost_window(arr);
    let slow = brute_force_min_window(arr).expect("within oracle bound");
    if fast != slow {
        report.mismatches.push(arr.to_vec());
    }
}
