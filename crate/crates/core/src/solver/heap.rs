/// Indexed binary max-heap over variables ordered by score, ties by lower index.
#[derive(Clone, Debug, Default)]
pub(crate) struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

#[inline]
fn before(scores: &[f64], a: u32, b: u32) -> bool {
    let (sa, sb) = (scores[a as usize], scores[b as usize]);
    sa > sb || (sa == sb && a < b)
}

impl VarHeap {
    pub(crate) fn new(num_vars: usize) -> Self {
        VarHeap {
            heap: Vec::with_capacity(num_vars),
            pos: vec![ABSENT; num_vars],
        }
    }

    pub(crate) fn contains(&self, v: usize) -> bool {
        self.pos[v] != ABSENT
    }

    pub(crate) fn insert(&mut self, v: usize, scores: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len() as u32;
        self.heap.push(v as u32);
        self.sift_up(self.heap.len() - 1, scores);
    }

    /// Restores order after `v`'s score increased.
    pub(crate) fn increased(&mut self, v: usize, scores: &[f64]) {
        if self.contains(v) {
            self.sift_up(self.pos[v] as usize, scores);
        }
    }

    pub(crate) fn pop(&mut self, scores: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0, scores);
        }
        Some(top as usize)
    }

    /// Rebuilds the heap from scratch over `vars`.
    pub(crate) fn rebuild(&mut self, vars: impl IntoIterator<Item = usize>, scores: &[f64]) {
        for &v in &self.heap {
            self.pos[v as usize] = ABSENT;
        }
        self.heap.clear();
        for v in vars {
            self.pos[v] = self.heap.len() as u32;
            self.heap.push(v as u32);
        }
        for i in (0..self.heap.len() / 2).rev() {
            self.sift_down(i, scores);
        }
    }

    fn sift_up(&mut self, mut i: usize, scores: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !before(scores, v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn sift_down(&mut self, mut i: usize, scores: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && before(scores, self.heap[right], self.heap[left]) {
                right
            } else {
                left
            };
            let c = self.heap[child];
            if !before(scores, c, v) {
                break;
            }
            self.heap[i] = c;
            self.pos[c as usize] = i as u32;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }
}
