use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure category, mapped onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("epa_no_pressure equals epa_sack ({0}); weight is undefined")]
    DegenerateEpa(f64),

    #[error("invalid severity weights: {0}")]
    InvalidWeights(String),

    #[error("game {game_id} has no week in the schedule")]
    UnknownWeek { game_id: String },

    #[error("no quarterback frame for game {game_id} play {play_id} frame {frame}")]
    MissingQb { game_id: String, play_id: String, frame: u32 },

    #[error("multiple quarterback frames for game {game_id} play {play_id} frame {frame}")]
    DuplicateQb { game_id: String, play_id: String, frame: u32 },

    #[error("no frame for player {player_id} in game {game_id} play {play_id} frame {frame}")]
    MissingPlayer { game_id: String, play_id: String, player_id: String, frame: u32 },

    #[error("dangling engagement in game {game_id} play {play_id} (rusher {rusher_id}, blocker {blocker_id}): {reason}")]
    DanglingEngagement {
        game_id: String,
        play_id: String,
        rusher_id: String,
        blocker_id: String,
        reason: String,
    },

    #[error("engagement window [{start}, {end}] does not intersect [{snap}, {horizon_end}]")]
    EmptyWindow { start: u32, end: u32, snap: u32, horizon_end: u32 },

    #[error("distance series does not cover frame {0}")]
    SeriesGap(u32),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("table is not in canonical (game_id, play_id, event_game_index) order")]
    Unsorted,

    #[error("probability vector does not sum to one (sum = {0})")]
    NotNormalized(f64),

    #[error("labels are degenerate: {0}")]
    DegenerateLabels(&'static str),

    #[error("smoothed profile for {player} has zero loss probability; log ratio undefined")]
    ZeroLossComponent { player: String },

    #[error("target has a single value ({0}); intercept is unbounded")]
    DegenerateTarget(&'static str),

    #[error("solver did not converge after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),

    #[error("{failed} of {total} bootstrap replicates failed, above the 5% limit")]
    TooManyFailures { failed: usize, total: usize },

    #[error("schema check failed for {path}: expected header `{expected}`, found `{found}`")]
    Schema { path: String, expected: String, found: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("malformed record in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            InvalidArgument(_) | Config(_) => ErrorKind::Usage,
            DegenerateEpa(_) | NonConvergence { .. } | NonFinite(_) | TooManyFailures { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub(crate) fn csv(path: impl AsRef<std::path::Path>, source: csv::Error) -> Self {
        Error::Csv { path: path.as_ref().display().to_string(), source }
    }
}
