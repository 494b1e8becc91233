use std::collections::BTreeMap;

/// Virtual clock with a pending-event queue. Events at the same instant pop
/// in the order they were scheduled.
#[derive(Debug, Clone)]
pub struct SimClock<E> {
    now: u64,
    next_tiebreak: u64,
    queue: BTreeMap<(u64, u64), E>,
}

impl<E> Default for SimClock<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> SimClock<E> {
    pub fn new() -> Self {
        Self { now: 0, next_tiebreak: 0, queue: BTreeMap::new() }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Schedules `event` at `at`, clamped to the present.
    pub fn schedule(&mut self, at: u64, event: E) {
        let at = at.max(self.now);
        self.queue.insert((at, self.next_tiebreak), event);
        self.next_tiebreak += 1;
    }

    /// Pops the earliest event and moves the clock to its time.
    pub fn pop(&mut self) -> Option<(u64, E)> {
        let ((at, _), e) = self.queue.pop_first()?;
        self.now = at;
        Some((at, e))
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.queue.keys().next().map(|&(t, _)| t)
    }

    /// Moves the clock forward; never backward.
    pub fn advance_to(&mut self, at: u64) {
        self.now = self.now.max(at);
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}
