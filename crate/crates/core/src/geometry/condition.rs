use std::fmt;

use serde::{Deserialize, Serialize};

use super::RigidMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointOfView {
    Opposing,
    Identical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Embodiment {
    Exact,
    Mirrored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WorkspaceMode {
    Exact,
    Mirrored,
}

/// The four conditions that carry a name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionName {
    /// Real-life face-to-face.
    RL,
    /// Simulated side-by-side.
    SS,
    /// Mirrored person.
    MP,
    /// Mirrored workspace.
    MW,
}

impl ConditionName {
    pub const ALL: [ConditionName; 4] = [ConditionName::RL, ConditionName::SS, ConditionName::MP, ConditionName::MW];

    pub fn spec(self) -> ConditionSpec {
        use {Embodiment as E, PointOfView as P, WorkspaceMode as W};
        match self {
            ConditionName::RL => ConditionSpec::new(P::Opposing, E::Exact, W::Exact),
            ConditionName::SS => ConditionSpec::new(P::Identical, E::Exact, W::Exact),
            ConditionName::MP => ConditionSpec::new(P::Identical, E::Mirrored, W::Exact),
            ConditionName::MW => ConditionSpec::new(P::Identical, E::Exact, W::Mirrored),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionName::RL => "RL",
            ConditionName::SS => "SS",
            ConditionName::MP => "MP",
            ConditionName::MW => "MW",
        }
    }
}

impl fmt::Display for ConditionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of the (point-of-view, embodiment, workspace) design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub pov: PointOfView,
    pub embodiment: Embodiment,
    pub workspace: WorkspaceMode,
}

impl ConditionSpec {
    pub const fn new(pov: PointOfView, embodiment: Embodiment, workspace: WorkspaceMode) -> Self {
        Self { pov, embodiment, workspace }
    }

    /// All eight triples, ordered by (pov, embodiment, workspace).
    pub fn all() -> [ConditionSpec; 8] {
        let mut out = [ConditionName::RL.spec(); 8];
        for (code, slot) in out.iter_mut().enumerate() {
            *slot = ConditionSpec::from_code(code as u8).expect("codes 0..8 are valid");
        }
        out
    }

    /// Three-bit wire code: bit 2 = identical pov, bit 1 = mirrored embodiment, bit 0 = mirrored workspace.
    pub fn code(&self) -> u8 {
        ((self.pov == PointOfView::Identical) as u8) << 2
            | ((self.embodiment == Embodiment::Mirrored) as u8) << 1
            | (self.workspace == WorkspaceMode::Mirrored) as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        if code > 7 {
            return None;
        }
        Some(Self {
            pov: if code & 4 != 0 { PointOfView::Identical } else { PointOfView::Opposing },
            embodiment: if code & 2 != 0 { Embodiment::Mirrored } else { Embodiment::Exact },
            workspace: if code & 1 != 0 { WorkspaceMode::Mirrored } else { WorkspaceMode::Exact },
        })
    }

    pub fn name(&self) -> Option<ConditionName> {
        ConditionName::ALL.into_iter().find(|n| n.spec() == *self)
    }

    /// `RL`/`SS`/`MP`/`MW` for named triples, otherwise a compact code like `O-M-M`.
    pub fn label(&self) -> String {
        match self.name() {
            Some(n) => n.to_string(),
            None => format!(
                "{}-{}-{}",
                match self.pov {
                    PointOfView::Opposing => 'O',
                    PointOfView::Identical => 'I',
                },
                match self.embodiment {
                    Embodiment::Exact => 'E',
                    Embodiment::Mirrored => 'M',
                },
                match self.workspace {
                    WorkspaceMode::Exact => 'E',
                    WorkspaceMode::Mirrored => 'M',
                },
            ),
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        if let Some(n) = ConditionName::ALL.into_iter().find(|n| n.as_str() == label) {
            return Some(n.spec());
        }
        Self::all().into_iter().find(|c| c.label() == label)
    }
}

impl From<ConditionName> for ConditionSpec {
    fn from(n: ConditionName) -> Self {
        n.spec()
    }
}

impl fmt::Display for ConditionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entity {
    Workspace,
    Embodiment,
}

/// Transform the assembler's renderer applies to `entity`'s canonical geometry.
///
/// Opposing views glue the rooms physically (identity). Identical views turn
/// the workspace half way round about +y so the assembler sees the board from
/// the instructor's side; the embodiment is left alone. A mirrored flag then
/// reflects the entity across `x = 0`.
pub fn glue_transform(cond: ConditionSpec, entity: Entity) -> RigidMap {
    match entity {
        Entity::Workspace => {
            let base = match cond.pov {
                PointOfView::Opposing => RigidMap::identity(),
                PointOfView::Identical => RigidMap::half_turn_y(),
            };
            match cond.workspace {
                WorkspaceMode::Exact => base,
                WorkspaceMode::Mirrored => base.then(&RigidMap::mirror_x()),
            }
        }
        Entity::Embodiment => match cond.embodiment {
            Embodiment::Exact => RigidMap::identity(),
            Embodiment::Mirrored => RigidMap::identity().then(&RigidMap::mirror_x()),
        },
    }
}
