//! The closed semantic code table shared by point labels, boxes and grids.

use core::fmt;
use core::str::FromStr;

use crate::error::Error;

/// Voxel or point marked as noise; never scored.
pub const IGNORE: u8 = 254;
/// Unoccupied voxel.
pub const FREE: u8 = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum SemanticClass {
    Car = 0,
    Pedestrian = 1,
    Rider = 2,
    LargeVehicle = 3,
    Cycle = 4,
    RoadObstacle = 5,
    TrafficFence = 6,
    DriveableSurface = 7,
    Sidewalk = 8,
    Vegetation = 9,
    Manmade = 10,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 11] = [
        SemanticClass::Car,
        SemanticClass::Pedestrian,
        SemanticClass::Rider,
        SemanticClass::LargeVehicle,
        SemanticClass::Cycle,
        SemanticClass::RoadObstacle,
        SemanticClass::TrafficFence,
        SemanticClass::DriveableSurface,
        SemanticClass::Sidewalk,
        SemanticClass::Vegetation,
        SemanticClass::Manmade,
    ];

    /// Classes scored by the detection benchmark.
    pub const DETECTION: [SemanticClass; 4] = [
        SemanticClass::Car,
        SemanticClass::LargeVehicle,
        SemanticClass::Rider,
        SemanticClass::Pedestrian,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<SemanticClass> {
        SemanticClass::ALL.get(usize::from(code)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::Car => "car",
            SemanticClass::Pedestrian => "pedestrian",
            SemanticClass::Rider => "rider",
            SemanticClass::LargeVehicle => "large_vehicle",
            SemanticClass::Cycle => "cycle",
            SemanticClass::RoadObstacle => "road_obstacle",
            SemanticClass::TrafficFence => "traffic_fence",
            SemanticClass::DriveableSurface => "driveable_surface",
            SemanticClass::Sidewalk => "sidewalk",
            SemanticClass::Vegetation => "vegetation",
            SemanticClass::Manmade => "manmade",
        }
    }
}

impl fmt::Display for SemanticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemanticClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SemanticClass::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownLabelName(s.into()))
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for SemanticClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for SemanticClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::string::String as serde::Deserialize>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True for the codes a grid or label file may contain.
pub fn is_valid_code(code: u8) -> bool {
    code <= SemanticClass::Manmade as u8 || code == IGNORE || code == FREE
}

/// Parses a label name, accepting `ignore` alongside the semantic classes.
pub fn parse_label(name: &str) -> Result<u8, Error> {
    if name == "ignore" {
        return Ok(IGNORE);
    }
    name.parse::<SemanticClass>().map(SemanticClass::code)
}
