use core::fmt;

/// A host resource the agent can profile and load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceKind {
    Cpu,
    Memory,
    Network,
    StorageBandwidth,
    StorageSpace,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 5] = [
        ResourceKind::Cpu,
        ResourceKind::Memory,
        ResourceKind::Network,
        ResourceKind::StorageBandwidth,
        ResourceKind::StorageSpace,
    ];

    /// Token used on the agent wire protocol.
    pub fn wire_token(self) -> &'static str {
        match self {
            ResourceKind::Cpu => "CPU",
            ResourceKind::Memory => "MEM",
            ResourceKind::Network => "NET",
            ResourceKind::StorageBandwidth => "STORBW",
            ResourceKind::StorageSpace => "STORSP",
        }
    }

    pub fn from_wire_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.wire_token() == token)
    }

    /// Keyword used in test scripts.
    pub fn script_name(self) -> &'static str {
        match self {
            ResourceKind::Cpu => "cpu",
            ResourceKind::Memory => "memory",
            ResourceKind::Network => "network",
            ResourceKind::StorageBandwidth => "storage_bw",
            ResourceKind::StorageSpace => "storage_space",
        }
    }

    /// Script keywords are case-insensitive.
    pub fn from_script_name(word: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.script_name().eq_ignore_ascii_case(word))
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.script_name())
    }
}

/// An integer percentage in `0..=100`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percentage(u8);

impl Percentage {
    pub const ZERO: Percentage = Percentage(0);
    pub const FULL: Percentage = Percentage(100);

    pub fn new(value: i64) -> Option<Self> {
        (0..=100).contains(&value).then_some(Percentage(value as u8))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// `percentage% of total`, rounded down.
    pub fn of(self, total: u64) -> u64 {
        ((total as u128 * self.0 as u128) / 100) as u64
    }
}

impl fmt::Display for Percentage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Either one resource kind or every kind at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReleaseTarget {
    Kind(ResourceKind),
    All,
}

impl ReleaseTarget {
    pub fn wire_token(self) -> &'static str {
        match self {
            ReleaseTarget::Kind(k) => k.wire_token(),
            ReleaseTarget::All => "ALL",
        }
    }

    pub fn from_wire_token(token: &str) -> Option<Self> {
        if token == "ALL" {
            Some(ReleaseTarget::All)
        } else {
            ResourceKind::from_wire_token(token).map(ReleaseTarget::Kind)
        }
    }

    pub fn covers(self, kind: ResourceKind) -> bool {
        match self {
            ReleaseTarget::Kind(k) => k == kind,
            ReleaseTarget::All => true,
        }
    }
}

/// A sustained consumption goal for one resource kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LoadTarget {
    pub kind: ResourceKind,
    pub percentage: Percentage,
    pub active: bool,
}

impl LoadTarget {
    pub fn active(kind: ResourceKind, percentage: Percentage) -> Self {
        LoadTarget {
            kind,
            percentage,
            active: true,
        }
    }
}

impl fmt::Display for LoadTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.kind.wire_token(), self.percentage)
    }
}
