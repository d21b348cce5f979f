//! Pushbutton stimuli and the stimulus -> behavior map.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// The four Boolean inputs an operator can toggle at any tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct StimulusState {
    pub mech_lips: bool,
    pub chem_lips: bool,
    pub mech_grasper: bool,
    pub arousal: bool,
}

impl StimulusState {
    pub const QUIESCENT: Self = Self { mech_lips: false, chem_lips: false, mech_grasper: false, arousal: false };
    pub const SWALLOW: Self = Self { mech_lips: true, chem_lips: true, mech_grasper: true, arousal: true };
    pub const BITE: Self = Self { mech_lips: true, chem_lips: true, mech_grasper: false, arousal: true };
    pub const REJECT: Self = Self { mech_lips: false, chem_lips: false, mech_grasper: true, arousal: true };

    pub fn get(&self, field: StimulusField) -> bool {
        match field {
            StimulusField::MechLips => self.mech_lips,
            StimulusField::ChemLips => self.chem_lips,
            StimulusField::MechGrasper => self.mech_grasper,
            StimulusField::Arousal => self.arousal,
        }
    }

    pub fn set(&mut self, field: StimulusField, value: bool) {
        match field {
            StimulusField::MechLips => self.mech_lips = value,
            StimulusField::ChemLips => self.chem_lips = value,
            StimulusField::MechGrasper => self.mech_grasper = value,
            StimulusField::Arousal => self.arousal = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StimulusField {
    MechLips,
    ChemLips,
    MechGrasper,
    Arousal,
}

impl StimulusField {
    pub const ALL: [StimulusField; 4] = [Self::MechLips, Self::ChemLips, Self::MechGrasper, Self::Arousal];

    pub fn name(self) -> &'static str {
        match self {
            Self::MechLips => "mech_lips",
            Self::ChemLips => "chem_lips",
            Self::MechGrasper => "mech_grasper",
            Self::Arousal => "arousal",
        }
    }
}

impl FromStr for StimulusField {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum BehaviorMode {
    #[default]
    Quiescent,
    Bite,
    Swallow,
    Reject,
}

impl BehaviorMode {
    /// Bite and swallow move food inward; CBI-3 is on in these modes.
    pub fn is_ingestive(self) -> bool {
        matches!(self, Self::Bite | Self::Swallow)
    }

    pub fn code(self) -> u8 {
        match self {
            Self::Quiescent => 0,
            Self::Bite => 1,
            Self::Swallow => 2,
            Self::Reject => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Quiescent => "Quiescent",
            Self::Bite => "Bite",
            Self::Swallow => "Swallow",
            Self::Reject => "Reject",
        }
    }
}

impl fmt::Display for BehaviorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BehaviorMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        [Self::Quiescent, Self::Bite, Self::Swallow, Self::Reject]
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

/// One row of the behavior map. `None` fields are "don't care".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BehaviorRule {
    pub mode: BehaviorMode,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub arousal: Option<bool>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub chem_lips: Option<bool>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub mech_lips: Option<bool>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub mech_grasper: Option<bool>,
}

impl BehaviorRule {
    fn matches(&self, s: &StimulusState) -> bool {
        let ok = |want: Option<bool>, have: bool| want.is_none_or(|w| w == have);
        ok(self.arousal, s.arousal)
            && ok(self.chem_lips, s.chem_lips)
            && ok(self.mech_lips, s.mech_lips)
            && ok(self.mech_grasper, s.mech_grasper)
    }
}

/// Ordered rule table; the first matching rule wins, no match is quiescent.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct BehaviorMap {
    pub rules: Vec<BehaviorRule>,
}

impl Default for BehaviorMap {
    fn default() -> Self {
        let rule = |mode, arousal, chem_lips, mech_lips, mech_grasper| BehaviorRule {
            mode,
            arousal,
            chem_lips,
            mech_lips,
            mech_grasper,
        };
        let (t, f, any) = (Some(true), Some(false), None);
        Self {
            rules: vec![
                rule(BehaviorMode::Swallow, t, t, t, t),
                rule(BehaviorMode::Bite, t, t, t, f),
                rule(BehaviorMode::Reject, t, f, any, t),
            ],
        }
    }
}

impl BehaviorMap {
    pub fn classify(&self, s: &StimulusState) -> BehaviorMode {
        self.rules.iter().find(|r| r.matches(s)).map_or(BehaviorMode::Quiescent, |r| r.mode)
    }
}

/// Classify with the default map: chemical + mechanical stimulus at the lips
/// is ingestive (swallow when the grasper also has contact, bite otherwise);
/// grasper contact without a chemical cue is rejection.
pub fn classify_behavior(s: &StimulusState) -> BehaviorMode {
    match (s.arousal, s.chem_lips, s.mech_lips, s.mech_grasper) {
        (true, true, true, true) => BehaviorMode::Swallow,
        (true, true, true, false) => BehaviorMode::Bite,
        (true, false, _, true) => BehaviorMode::Reject,
        _ => BehaviorMode::Quiescent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(arousal: bool, chem: bool, lips: bool, grasper: bool) -> StimulusState {
        StimulusState { arousal, chem_lips: chem, mech_lips: lips, mech_grasper: grasper }
    }

    #[test]
    fn documented_examples() {
        assert_eq!(classify_behavior(&st(true, true, true, true)), BehaviorMode::Swallow);
        assert_eq!(classify_behavior(&st(false, false, false, false)), BehaviorMode::Quiescent);
        assert_eq!(classify_behavior(&st(true, false, false, true)), BehaviorMode::Reject);
        assert_eq!(classify_behavior(&st(true, true, true, false)), BehaviorMode::Bite);
    }

    #[test]
    fn exhaustive_against_closed_form() {
        for bits in 0u8..16 {
            let s = st(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0);
            let want = if s.arousal && s.chem_lips && s.mech_lips && s.mech_grasper {
                BehaviorMode::Swallow
            } else if s.arousal && s.chem_lips && s.mech_lips && !s.mech_grasper {
                BehaviorMode::Bite
            } else if s.arousal && s.mech_grasper && !s.chem_lips {
                BehaviorMode::Reject
            } else {
                BehaviorMode::Quiescent
            };
            assert_eq!(classify_behavior(&s), want, "{s:?}");
        }
    }

    #[test]
    fn custom_map_overrides() {
        let map = BehaviorMap {
            rules: vec![BehaviorRule {
                mode: BehaviorMode::Bite,
                arousal: Some(true),
                chem_lips: None,
                mech_lips: None,
                mech_grasper: None,
            }],
        };
        assert_eq!(map.classify(&st(true, false, false, false)), BehaviorMode::Bite);
        assert_eq!(map.classify(&st(false, true, true, true)), BehaviorMode::Quiescent);
    }

    #[test]
    fn field_names_round_trip() {
        for f in StimulusField::ALL {
            assert_eq!(f.name().parse::<StimulusField>(), Ok(f));
        }
        assert!("lips".parse::<StimulusField>().is_err());
    }
}
