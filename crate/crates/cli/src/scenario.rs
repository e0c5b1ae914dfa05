use std::path::Path;

use fairalloc::Instance;

use crate::CliError;

/// Reads a scenario file. Errors name the offending field and position.
pub fn load(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text).map_err(|msg| CliError::Input(format!("{}: {msg}", path.display())))
}

pub fn parse(text: &str) -> Result<Instance, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        if field == "." {
            e.inner().to_string()
        } else {
            format!("{field}: {}", e.inner())
        }
    })
}
