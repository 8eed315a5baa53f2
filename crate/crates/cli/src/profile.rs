//! Exploration-bound presets, selectable by name or via the
//! `WM_BOUND_PROFILE` environment variable.

use wmstack_core::trace::ExplorationBounds;

pub const ENV_VAR: &str = "WM_BOUND_PROFILE";

pub fn bounds_by_name(name: &str) -> Option<ExplorationBounds> {
    match name {
        "quick" => Some(ExplorationBounds::quick()),
        "default" => Some(ExplorationBounds::default_profile()),
        "thorough" => Some(ExplorationBounds::thorough()),
        _ => None,
    }
}

/// The profile from the environment, falling back to the default profile.
pub fn bounds_from_env() -> ExplorationBounds {
    std::env::var(ENV_VAR)
        .ok()
        .and_then(|n| bounds_by_name(&n))
        .unwrap_or_else(ExplorationBounds::default_profile)
}
