use crate::runtime::TestCase;

/// Per goal, the shortest test seen that covers it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Archive {
    slots: Vec<Option<TestCase>>,
}

impl Archive {
    pub fn new(goals: usize) -> Archive {
        Archive { slots: vec![None; goals] }
    }

    /// Offers a test covering goal `g`. Returns true when the goal was not covered before.
    pub fn offer(&mut self, g: usize, test: &TestCase) -> bool {
        match &mut self.slots[g] {
            slot @ None => {
                *slot = Some(test.clone());
                true
            }
            Some(old) => {
                if test.len() < old.len() {
                    *old = test.clone();
                }
                false
            }
        }
    }

    pub fn is_covered(&self, g: usize) -> bool {
        self.slots[g].is_some()
    }

    pub fn get(&self, g: usize) -> Option<&TestCase> {
        self.slots[g].as_ref()
    }

    pub fn covered_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn covered(&self) -> Vec<usize> {
        self.slots.iter().enumerate().filter(|(_, s)| s.is_some()).map(|(i, _)| i).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    /// Distinct archived tests in goal order.
    pub fn tests(&self) -> Vec<TestCase> {
        let mut out: Vec<TestCase> = Vec::new();
        for t in self.slots.iter().flatten() {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }
}
