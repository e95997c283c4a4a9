/// An action as stored in a transition.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Discrete(usize),
    /// Raw (unclipped) Gaussian sample for one action block.
    Continuous(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: Action,
    pub log_prob_old: f64,
    pub reward: f64,
    pub done: bool,
    pub value_estimate: f64,
    /// Trajectory this transition belongs to; returns never cross streams.
    pub stream: usize,
    /// For Gaussian policies with several action blocks per forward pass, the
    /// block this action was drawn from. Zero otherwise.
    pub block: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BufferOwner {
    Central,
    Local,
}

/// On-policy rollout storage.
///
/// Transitions are appended per stream. A stream's transitions stay pending
/// until one with `done` arrives, then move as one contiguous segment into
/// the ready queue, so the ready queue is always a concatenation of finished
/// trajectories. An update consumes the ready queue only; unfinished
/// trajectories are carried into the next batch.
#[derive(Clone, Debug)]
pub struct RolloutBuffer {
    capacity: usize,
    owner: BufferOwner,
    ready: Vec<Transition>,
    pending: Vec<Vec<Transition>>,
    pending_len: usize,
}

impl RolloutBuffer {
    pub fn new(capacity: usize, owner: BufferOwner) -> Self {
        RolloutBuffer {
            capacity: capacity.max(1),
            owner,
            ready: Vec::with_capacity(capacity),
            pending: Vec::new(),
            pending_len: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn owner(&self) -> BufferOwner {
        self.owner
    }

    pub fn len(&self) -> usize {
        self.ready.len() + self.pending_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ready_len(&self) -> usize {
        self.ready.len()
    }

    pub fn push(&mut self, t: Transition) {
        if self.pending.len() <= t.stream {
            self.pending.resize_with(t.stream + 1, Vec::new);
        }
        let stream = t.stream;
        let done = t.done;
        self.pending[stream].push(t);
        self.pending_len += 1;
        if done {
            let seg = std::mem::take(&mut self.pending[stream]);
            self.pending_len -= seg.len();
            self.ready.extend(seg);
        }
    }

    /// True once the buffer holds at least `capacity` transitions and some of
    /// them belong to finished trajectories.
    pub fn should_update(&self) -> bool {
        self.len() >= self.capacity && !self.ready.is_empty()
    }

    /// Removes and returns every finished transition.
    pub fn take_ready(&mut self) -> Vec<Transition> {
        std::mem::take(&mut self.ready)
    }

    pub fn clear(&mut self) {
        self.ready.clear();
        self.pending.iter_mut().for_each(Vec::clear);
        self.pending_len = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(stream: usize, done: bool) -> Transition {
        Transition {
            observation: vec![stream as f64],
            action: Action::Discrete(0),
            log_prob_old: 0.0,
            reward: 1.0,
            done,
            value_estimate: 0.0,
            stream,
            block: 0,
        }
    }

    #[test]
    fn interleaved_streams_become_contiguous_segments() {
        let mut b = RolloutBuffer::new(4, BufferOwner::Local);
        for t in 0..3 {
            for s in 0..2 {
                b.push(tr(s, t == 2));
            }
        }
        assert_eq!(b.len(), 6);
        assert!(b.should_update());
        let ready = b.take_ready();
        let streams: Vec<usize> = ready.iter().map(|t| t.stream).collect();
        assert_eq!(streams, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(b.len(), 0);
    }

    #[test]
    fn unfinished_trajectories_are_carried_over() {
        let mut b = RolloutBuffer::new(3, BufferOwner::Central);
        b.push(tr(0, false));
        b.push(tr(0, true));
        b.push(tr(1, false));
        assert!(b.should_update());
        assert_eq!(b.take_ready().len(), 2);
        assert_eq!(b.len(), 1);
        assert!(!b.should_update());
        b.clear();
        assert!(b.is_empty());
    }

    #[test]
    fn no_update_without_a_finished_trajectory() {
        let mut b = RolloutBuffer::new(2, BufferOwner::Local);
        for _ in 0..5 {
            b.push(tr(0, false));
        }
        assert!(!b.should_update());
    }
}
