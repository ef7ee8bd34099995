use std::sync::atomic::{AtomicU64, Ordering};

use super::{CountVariant, Executor};

/// Work items pre-summed together by [`CountVariant::GroupReduce`].
pub const GROUP_WIDTH: u32 = 32;
/// Groups pre-summed together by [`CountVariant::TwoLevelReduce`].
pub const SUPER_GROUP_WIDTH: u32 = 32;

/// Per-block accumulator for newly discovered vertices.
///
/// `add` is called exactly once per work item. The variants only differ in
/// how often the shared counter is touched: once per item with a non-zero
/// count, once per group of [`GROUP_WIDTH`] items, or once per super-group of
/// `GROUP_WIDTH * SUPER_GROUP_WIDTH` items.
pub struct Tally<'a> {
    variant: CountVariant,
    shared: &'a AtomicU64,
    group_sum: u64,
    group_len: u32,
    super_sum: u64,
    super_len: u32,
}

impl<'a> Tally<'a> {
    pub(crate) fn new(variant: CountVariant, shared: &'a AtomicU64) -> Self {
        Tally {
            variant,
            shared,
            group_sum: 0,
            group_len: 0,
            super_sum: 0,
            super_len: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, local: u64) {
        match self.variant {
            CountVariant::DirectAtomic => {
                if local > 0 {
                    self.shared.fetch_add(local, Ordering::Relaxed);
                }
            }
            CountVariant::GroupReduce | CountVariant::TwoLevelReduce => {
                self.group_sum += local;
                self.group_len += 1;
                if self.group_len == GROUP_WIDTH {
                    self.close_group();
                }
            }
        }
    }

    #[inline]
    fn close_group(&mut self) {
        let sum = std::mem::take(&mut self.group_sum);
        self.group_len = 0;
        match self.variant {
            CountVariant::GroupReduce => {
                if sum > 0 {
                    self.shared.fetch_add(sum, Ordering::Relaxed);
                }
            }
            _ => {
                self.super_sum += sum;
                self.super_len += 1;
                if self.super_len == SUPER_GROUP_WIDTH {
                    self.close_super_group();
                }
            }
        }
    }

    fn close_super_group(&mut self) {
        let sum = std::mem::take(&mut self.super_sum);
        self.super_len = 0;
        if sum > 0 {
            self.shared.fetch_add(sum, Ordering::Relaxed);
        }
    }

    /// Flushes partial groups at the end of a block.
    pub fn finish(mut self) {
        if self.group_len > 0 {
            self.close_group();
        }
        if self.super_len > 0 {
            self.close_super_group();
        }
    }
}

/// Sums per-work-item counts through the given aggregation strategy. The
/// total is exact for every variant.
pub fn aggregate_count(executor: &Executor, local_counts: &[u64], variant: CountVariant) -> u64 {
    executor
        .run_blocks(local_counts.len(), variant, |range, tally| {
            for &c in &local_counts[range] {
                tally.add(c);
            }
        })
        .new_frontier_count
}
