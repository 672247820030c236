use serde::{Deserialize, Serialize};

/// Outcome of a check.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Verified,
    Refuted,
    Inconclusive,
}

impl Status {
    pub fn is_verified(self) -> bool {
        self == Status::Verified
    }

    pub fn is_refuted(self) -> bool {
        self == Status::Refuted
    }

    /// Conjunction: any refutation wins, then any inconclusive part.
    pub fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::Refuted, _) | (_, Status::Refuted) => Status::Refuted,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Verified,
        }
    }

    pub fn all<I: IntoIterator<Item = Status>>(it: I) -> Status {
        it.into_iter().fold(Status::Verified, Status::and)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Verified => "Verified",
            Status::Refuted => "Refuted",
            Status::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}
