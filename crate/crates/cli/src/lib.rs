//! Front end for `qrs-core`: JSON inputs with file and field diagnostics,
//! report envelopes, and the acceptance suite run by `qrs selftest`.

pub mod acceptance;
pub mod input;
pub mod report;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    /// Unreadable or malformed input, or an invalid argument combination.
    Malformed = 1,
    /// The optimizer certified nothing and the trivial feasible point was
    /// reported.
    Fallback = 2,
    SelftestFailed = 3,
}
