use std::path::Path;
use std::sync::Arc;

use crate::env::MapSpec;

use super::ExperimentError;

/// Map files compiled into the binary, by name.
pub const BUILTIN_MAPS: &[(&str, &str)] = &[
    (
        "basesWorkers8x8A",
        include_str!("../../maps/basesWorkers8x8A.map"),
    ),
    ("noresources", include_str!("../../maps/noresources.map")),
    (
        "TwoBasesBarracks",
        include_str!("../../maps/TwoBasesBarracks.map"),
    ),
    (
        "basesWorkers12x12",
        include_str!("../../maps/basesWorkers12x12.map"),
    ),
    (
        "FourBasesWorkers",
        include_str!("../../maps/FourBasesWorkers.map"),
    ),
    (
        "basesWorkers16x16",
        include_str!("../../maps/basesWorkers16x16.map"),
    ),
    (
        "basesWorkers24x24",
        include_str!("../../maps/basesWorkers24x24.map"),
    ),
    (
        "basesWorkers24x24L",
        include_str!("../../maps/basesWorkers24x24L.map"),
    ),
    (
        "DoubleGame24x24",
        include_str!("../../maps/DoubleGame24x24.map"),
    ),
];

pub fn builtin_map(name: &str) -> Option<Result<MapSpec, ExperimentError>> {
    BUILTIN_MAPS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| MapSpec::parse(text).map_err(ExperimentError::from))
}

/// A builtin map name, or else a path to a map file.
pub fn resolve_map(name_or_path: &str) -> Result<Arc<MapSpec>, ExperimentError> {
    if let Some(m) = builtin_map(name_or_path) {
        return m.map(Arc::new);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(ExperimentError::Usage(format!(
            "`{name_or_path}` is neither a builtin map nor a readable file"
        )));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(Arc::new(MapSpec::parse(&text)?))
}
