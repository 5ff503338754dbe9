use std::fmt;

/// Broad failure classes; each maps to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Input,
    Schema,
    Backend,
    Runtime,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Category::Runtime => 1,
            Category::Config => 2,
            Category::Input => 3,
            Category::Schema => 4,
            Category::Backend => 5,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Input => "input",
            Category::Schema => "schema",
            Category::Backend => "backend",
            Category::Runtime => "runtime",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {:#}", self.category.as_str(), self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attach a category to any error.
pub trait Categorize<T> {
    fn category(self, category: Category) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Categorize<T> for Result<T, E> {
    fn category(self, category: Category) -> CliResult<T> {
        self.map_err(|e| CliError { category, error: e.into() })
    }
}

pub fn fail<T>(category: Category, msg: impl fmt::Display) -> CliResult<T> {
    Err(CliError { category, error: anyhow::anyhow!("{msg}") })
}

/// Engine errors split by cause: backend failures vs everything else.
pub fn engine_category(e: &traitsim::engine::EngineError) -> Category {
    use traitsim::engine::EngineError;
    match e {
        EngineError::Backend { .. } => Category::Backend,
        EngineError::Config(_) | EngineError::Population(_) => Category::Config,
        _ => Category::Runtime,
    }
}

pub fn io_category(e: &traitsim::io::IoError) -> Category {
    use traitsim::io::IoError;
    match e {
        IoError::Schema(_) => Category::Schema,
        IoError::Engine(inner) => engine_category(inner),
        _ => Category::Input,
    }
}

pub fn from_engine(e: traitsim::engine::EngineError) -> CliError {
    CliError { category: engine_category(&e), error: e.into() }
}

pub fn from_io(e: traitsim::io::IoError) -> CliError {
    CliError { category: io_category(&e), error: e.into() }
}
