//! Search counters. Every searcher owns a private [`SearchStats`]; they are
//! merged only after the searchers have joined.

use alloc::vec::Vec;
use core::time::Duration;

/// Batch occupancy counts in power-of-two buckets: bucket 0 holds size 1,
/// bucket `i` holds sizes in `(2^(i-1), 2^i]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OccupancyHistogram {
    buckets: Vec<u64>,
}

impl OccupancyHistogram {
    pub fn bucket_of(occupancy: usize) -> usize {
        debug_assert!(occupancy > 0);
        occupancy.next_power_of_two().trailing_zeros() as usize
    }

    pub fn record(&mut self, occupancy: usize) {
        let b = Self::bucket_of(occupancy);
        if self.buckets.len() <= b {
            self.buckets.resize(b + 1, 0);
        }
        self.buckets[b] += 1;
    }

    /// `(upper bound of bucket, count)` pairs.
    pub fn buckets(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.buckets.iter().enumerate().map(|(i, &c)| (1usize << i, c))
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().sum()
    }

    pub fn merge(&mut self, other: &Self) {
        if self.buckets.len() < other.buckets.len() {
            self.buckets.resize(other.buckets.len(), 0);
        }
        for (a, b) in self.buckets.iter_mut().zip(&other.buckets) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IterationStats {
    pub threshold: u32,
    pub expanded: u64,
    pub generated: u64,
    pub batches: u64,
    /// Items evaluated across this iteration's batches.
    pub evaluated: u64,
}

impl IterationStats {
    pub fn mean_batch(&self) -> f64 {
        if self.batches == 0 {
            0.0
        } else {
            self.evaluated as f64 / self.batches as f64
        }
    }

    fn merge(&mut self, other: &Self) {
        self.threshold = self.threshold.max(other.threshold);
        self.expanded += other.expanded;
        self.generated += other.generated;
        self.batches += other.batches;
        self.evaluated += other.evaluated;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub batches: u64,
    pub evaluated: u64,
    pub max_batch: usize,
    pub occupancy: OccupancyHistogram,
    pub iterations: Vec<IterationStats>,
    pub peak_live_frames: usize,
    /// Synchronous evaluator calls made outside the batch buffers (the
    /// root and the work-generation frontier) and the states they covered.
    pub direct_calls: u64,
    pub direct_evaluated: u64,
    pub wall_time: Duration,
    /// Frames expanded or pruned before their heuristic was available.
    pub completeness_violations: u64,
    /// Frames expanded with f above the bound or pruned with f within it.
    pub alignment_violations: u64,
}

impl SearchStats {
    pub fn record_batch(&mut self, occupancy: usize) {
        debug_assert!(occupancy > 0);
        self.batches += 1;
        self.evaluated += occupancy as u64;
        self.max_batch = self.max_batch.max(occupancy);
        self.occupancy.record(occupancy);
    }

    pub fn mean_batch(&self) -> f64 {
        if self.batches == 0 {
            0.0
        } else {
            self.evaluated as f64 / self.batches as f64
        }
    }

    /// Every call into an evaluator backend, batched or direct.
    pub fn evaluator_calls(&self) -> u64 {
        self.batches + self.direct_calls
    }

    /// Sums counters, merges histograms and per-iteration rows (by index),
    /// and keeps the larger peak and wall time.
    pub fn merge(&mut self, other: &Self) {
        self.expanded += other.expanded;
        self.generated += other.generated;
        self.batches += other.batches;
        self.evaluated += other.evaluated;
        self.max_batch = self.max_batch.max(other.max_batch);
        self.occupancy.merge(&other.occupancy);
        if self.iterations.len() < other.iterations.len() {
            self.iterations.resize(other.iterations.len(), IterationStats::default());
        }
        for (a, b) in self.iterations.iter_mut().zip(&other.iterations) {
            a.merge(b);
        }
        self.peak_live_frames = self.peak_live_frames.max(other.peak_live_frames);
        self.direct_calls += other.direct_calls;
        self.direct_evaluated += other.direct_evaluated;
        self.wall_time = self.wall_time.max(other.wall_time);
        self.completeness_violations += other.completeness_violations;
        self.alignment_violations += other.alignment_violations;
    }

    pub fn merged(mut self, other: &Self) -> Self {
        self.merge(other);
        self
    }
}
