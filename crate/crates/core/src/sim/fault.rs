/// Which server a fault plan applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultTarget {
    #[default]
    Device,
    Voice,
}

/// Injected faults. `drop_after = Some(n)` closes a connection when its
/// `n+1`-th command arrives, after answering `n`. `drop_limit` caps how
/// many connections are dropped (`None` drops every one). `fail_next`
/// answers the next that many commands with `ERROR:injected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaultPlan {
    pub drop_after: Option<u32>,
    pub drop_limit: Option<u32>,
    pub fail_next: u32,
    pub apply_to: FaultTarget,
}

impl FaultPlan {
    pub fn none() -> Self {
        FaultPlan::default()
    }

    pub fn drop_every_connection_after(n: u32) -> Self {
        FaultPlan {
            drop_after: Some(n),
            ..FaultPlan::default()
        }
    }

    pub fn drop_once_after(n: u32) -> Self {
        FaultPlan {
            drop_after: Some(n),
            drop_limit: Some(1),
            ..FaultPlan::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultAction {
    Serve,
    /// Reply `ERROR:injected` instead of serving.
    Fail,
    /// Close the connection without replying.
    Drop,
}

/// Applies a [`FaultPlan`] across the connections of one server.
#[derive(Debug, Clone)]
pub struct FaultTracker {
    plan: FaultPlan,
    fail_left: u32,
    drops: u32,
    accepted: u32,
    answered_here: u32,
    doomed: bool,
}

impl FaultTracker {
    pub fn new(plan: FaultPlan) -> Self {
        FaultTracker {
            plan,
            fail_left: plan.fail_next,
            drops: 0,
            accepted: 0,
            answered_here: 0,
            doomed: false,
        }
    }

    pub fn plan(&self) -> FaultPlan {
        self.plan
    }

    pub fn on_connect(&mut self) {
        self.accepted += 1;
        self.answered_here = 0;
        self.doomed = self.plan.drop_after.is_some() && self.plan.drop_limit.is_none_or(|l| self.drops < l);
    }

    pub fn on_command(&mut self) -> FaultAction {
        if self.doomed && Some(self.answered_here) >= self.plan.drop_after {
            self.doomed = false;
            self.drops += 1;
            return FaultAction::Drop;
        }
        self.answered_here += 1;
        if self.fail_left > 0 {
            self.fail_left -= 1;
            return FaultAction::Fail;
        }
        FaultAction::Serve
    }

    pub fn accepted(&self) -> u32 {
        self.accepted
    }

    pub fn drops(&self) -> u32 {
        self.drops
    }
}
