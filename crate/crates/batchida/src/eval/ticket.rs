use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use batchida_core::Cost;

const PENDING: u32 = u32::MAX;

/// Write-once cell shared between a ticket and the agent that resolves it.
#[derive(Debug)]
pub(crate) struct Slot(AtomicU32);

impl Slot {
    pub(crate) fn new() -> Arc<Self> {
        Arc::new(Slot(AtomicU32::new(PENDING)))
    }

    /// Stores `value` unless the slot already holds one. Returns whether
    /// this call was the one that resolved it.
    pub(crate) fn resolve(&self, value: Cost) -> bool {
        debug_assert_ne!(value, PENDING);
        self.0.compare_exchange(PENDING, value, Ordering::Release, Ordering::Relaxed).is_ok()
    }

    fn get(&self) -> Option<Cost> {
        match self.0.load(Ordering::Acquire) {
            PENDING => None,
            v => Some(v),
        }
    }
}

/// Handle to the heuristic value of one submitted state.
///
/// A ticket is resolved exactly once by its evaluator; [`Ticket::poll`]
/// never blocks.
#[derive(Clone, Debug)]
pub struct Ticket(Inner);

#[derive(Clone, Debug)]
enum Inner {
    Ready(Cost),
    Pending(Arc<Slot>),
}

impl Ticket {
    /// A ticket whose value is already known.
    pub fn ready(value: Cost) -> Self {
        Ticket(Inner::Ready(value))
    }

    pub(crate) fn pending(slot: Arc<Slot>) -> Self {
        Ticket(Inner::Pending(slot))
    }

    pub fn poll(&self) -> Option<Cost> {
        match &self.0 {
            Inner::Ready(v) => Some(*v),
            Inner::Pending(slot) => slot.get(),
        }
    }

    pub fn is_ready(&self) -> bool {
        self.poll().is_some()
    }
}
