//! Dotted field paths addressing values inside JSON payloads.
//!
//! A path is a list of segments. Field segments name object properties and
//! the items marker stands for "every element of this array". The text form
//! joins fields with `.` and appends `[]` for each items marker, so
//! `sensors[].temp` reads "the `temp` field of every element of `sensors`".

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Field(String),
    Items,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Path {
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("empty path")]
    Empty,
    #[error("empty segment in path `{0}`")]
    EmptySegment(String),
    #[error("path `{0}` starts with an items marker")]
    LeadingItems(String),
}

impl Path {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_segments(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn child(&self, name: &str) -> Self {
        let mut segments = self.segments.clone();
        segments.push(Segment::Field(name.to_string()));
        Self { segments }
    }

    pub fn items(&self) -> Self {
        let mut segments = self.segments.clone();
        segments.push(Segment::Items);
        Self { segments }
    }

    /// Last field name, ignoring trailing items markers.
    pub fn leaf_name(&self) -> Option<&str> {
        self.segments.iter().rev().find_map(|s| match s {
            Segment::Field(name) => Some(name.as_str()),
            Segment::Items => None,
        })
    }

    /// The same path with every items marker removed.
    pub fn without_items(&self) -> Self {
        Self { segments: self.segments.iter().filter(|s| matches!(s, Segment::Field(_))).cloned().collect() }
    }

    pub fn items_count(&self) -> usize {
        self.segments.iter().filter(|s| matches!(s, Segment::Items)).count()
    }

    pub fn depth(&self) -> usize {
        self.segments.len() - self.items_count()
    }

    pub fn has_items(&self) -> bool {
        self.items_count() > 0
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for seg in &self.segments {
            match seg {
                Segment::Field(name) => {
                    if !first {
                        f.write_str(".")?;
                    }
                    f.write_str(name)?;
                }
                Segment::Items => f.write_str("[]")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Path {
    type Err = PathError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.is_empty() {
            return Err(PathError::Empty);
        }
        let mut segments = Vec::new();
        for part in text.split('.') {
            let mut name = part;
            let mut markers = 0;
            while let Some(stripped) = name.strip_suffix("[]") {
                name = stripped;
                markers += 1;
            }
            if name.is_empty() {
                return Err(if markers > 0 {
                    PathError::LeadingItems(text.to_string())
                } else {
                    PathError::EmptySegment(text.to_string())
                });
            }
            segments.push(Segment::Field(name.to_string()));
            segments.extend(core::iter::repeat_n(Segment::Items, markers));
        }
        Ok(Self { segments })
    }
}

impl Serialize for Path {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Path {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A property name is addressable iff it survives a round trip through
/// the path text form.
pub fn is_addressable_name(name: &str) -> bool {
    !name.is_empty() && !name.contains('.') && !name.ends_with("[]")
}
