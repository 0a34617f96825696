use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The inequality carries no information on this run (for example zero dissipation).
    Vacuous,
    /// Hypotheses of the check are not met by the configuration.
    NotApplicable,
    /// Measured constant or diagnostic without a pass criterion.
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Vacuous => "vacuous",
            Status::NotApplicable => "n/a",
            Status::Info => "info",
        })
    }
}

/// One line of a residual report: `lhs ≤ rhs` up to `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub status: Status,
    /// Identities whose failure must abort the verify command.
    pub mandatory: bool,
    pub note: String,
}

impl InequalityRow {
    /// Row for `lhs ≤ rhs + tolerance`.
    pub fn check(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let status = if lhs <= rhs + tolerance { Status::Pass } else { Status::Fail };
        Self {
            name: name.into(),
            lhs,
            rhs,
            tolerance,
            status,
            mandatory: false,
            note: String::new(),
        }
    }

    pub fn with_status(name: impl Into<String>, lhs: f64, rhs: f64, status: Status) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            tolerance: 0.0,
            status,
            mandatory: false,
            note: String::new(),
        }
    }

    pub fn mandatory(mut self) -> Self {
        self.mandatory = true;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// `rhs / lhs` (infinite for `lhs = 0 < rhs`).
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 && self.rhs == 0.0 {
            1.0
        } else {
            self.rhs / self.lhs
        }
    }

    pub fn passed(&self) -> bool {
        !matches!(self.status, Status::Fail)
    }

    pub fn header() -> String {
        format!(
            "{:<28} {:>14} {:>14} {:>14} {:>12} {:>10} {:>8}  note",
            "inequality", "lhs", "rhs", "slack", "rhs/lhs", "tolerance", "status"
        )
    }
}

impl fmt::Display for InequalityRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.4e} {:>10.2e} {:>8}",
            self.name,
            self.lhs,
            self.rhs,
            self.slack(),
            self.ratio(),
            self.tolerance,
            self.status
        )?;
        if !self.note.is_empty() {
            write!(f, "  {}", self.note)?;
        }
        Ok(())
    }
}
