use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Training stage: which imperfections are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CurriculumStage {
    Perfect,
    PositionPerturbation,
    InconsistentGains,
    InconsistentPhases,
    MutualCoupling,
    Nonlinear,
    AllEffects,
}

impl CurriculumStage {
    pub const ALL: [CurriculumStage; 7] = [
        CurriculumStage::Perfect,
        CurriculumStage::PositionPerturbation,
        CurriculumStage::InconsistentGains,
        CurriculumStage::InconsistentPhases,
        CurriculumStage::MutualCoupling,
        CurriculumStage::Nonlinear,
        CurriculumStage::AllEffects,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| invalid(format!("stage index {i} outside 0..7")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::PositionPerturbation => "position",
            Self::InconsistentGains => "gain",
            Self::InconsistentPhases => "phase",
            Self::MutualCoupling => "coupling",
            Self::Nonlinear => "nonlinear",
            Self::AllEffects => "all",
        }
    }

    pub fn positions(self) -> bool {
        matches!(self, Self::PositionPerturbation | Self::AllEffects)
    }
    pub fn gains(self) -> bool {
        matches!(self, Self::InconsistentGains | Self::AllEffects)
    }
    pub fn phases(self) -> bool {
        matches!(self, Self::InconsistentPhases | Self::AllEffects)
    }
    pub fn coupling(self) -> bool {
        matches!(self, Self::MutualCoupling | Self::AllEffects)
    }
    pub fn nonlinear(self) -> bool {
        matches!(self, Self::Nonlinear | Self::AllEffects)
    }
}

impl std::fmt::Display for CurriculumStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CurriculumStage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| invalid(format!("unknown stage '{s}'")))
    }
}

/// Stage for training step `step_index`: the seven stages in order, then
/// start over.
pub fn curriculum_stage_for(step_index: usize) -> CurriculumStage {
    CurriculumStage::ALL[step_index % CurriculumStage::ALL.len()]
}

/// Which stage each generated sample is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageSchedule {
    Fixed {
        stage: CurriculumStage,
    },
    /// Sample `i` uses `curriculum_stage_for(i / block)`.
    Cyclic {
        block: usize,
    },
}

impl StageSchedule {
    pub fn stage_for(&self, sample: usize) -> CurriculumStage {
        match self {
            Self::Fixed { stage } => *stage,
            Self::Cyclic { block } => curriculum_stage_for(sample / (*block).max(1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_order() {
        assert_eq!(curriculum_stage_for(0), CurriculumStage::Perfect);
        assert_eq!(curriculum_stage_for(6), CurriculumStage::AllEffects);
        assert_eq!(curriculum_stage_for(7), CurriculumStage::Perfect);
        assert_eq!(
            curriculum_stage_for(8),
            CurriculumStage::PositionPerturbation
        );
    }

    #[test]
    fn index_round_trip_and_errors() {
        for s in CurriculumStage::ALL {
            assert_eq!(CurriculumStage::from_index(s.index()).unwrap(), s);
            assert_eq!(s.name().parse::<CurriculumStage>().unwrap(), s);
        }
        assert!(CurriculumStage::from_index(7).is_err());
    }
}
