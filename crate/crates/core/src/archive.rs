//! The evaluated data set D.

use serde::{Deserialize, Serialize};

use crate::moo::FrontSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Initial,
    Warmstart,
    Psl,
    /// Operator-requested evaluation through the service.
    Manual,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Warmstart => "warmstart",
            Stage::Psl => "psl",
            Stage::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRow {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub iteration: usize,
    pub stage: Stage,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationArchive {
    pub rows: Vec<ArchiveRow>,
}

impl EvaluationArchive {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>, iteration: usize, stage: Stage) {
        self.rows.push(ArchiveRow { x, y, iteration, stage });
    }

    pub fn designs(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.x.clone()).collect()
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.y.clone()).collect()
    }

    /// Non-dominated archive objectives inside the reference box.
    pub fn front(&self, reference: &[f64]) -> FrontSet {
        FrontSet::new(self.objectives(), reference.to_vec()).normalized()
    }

    /// Designs of the non-dominated rows, in archive order.
    pub fn non_dominated_designs(&self) -> Vec<Vec<f64>> {
        let ys = self.objectives();
        crate::moo::non_dominated_filter(&ys)
            .into_iter()
            .map(|i| self.rows[i].x.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_and_designs() {
        let mut a = EvaluationArchive::default();
        a.push(vec![0.0], vec![0.2, 0.8], 0, Stage::Initial);
        a.push(vec![1.0], vec![0.5, 0.9], 0, Stage::Initial);
        a.push(vec![2.0], vec![0.9, 0.1], 1, Stage::Warmstart);
        a.push(vec![3.0], vec![2.0, 0.0], 1, Stage::Warmstart);
        assert_eq!(a.len(), 4);
        assert_eq!(a.front(&[1.0, 1.0]).points, vec![vec![0.2, 0.8], vec![0.9, 0.1]]);
        assert_eq!(a.non_dominated_designs(), vec![vec![0.0], vec![2.0], vec![3.0]]);
    }
}
