//! Mapping from the simulator's conceptual API verbs to CLI invocations.

/// `(api_verb, cli_invocation)` pairs covering the simulator surface.
pub const API_VERB_MAPPING: [(&str, &str); 9] = [
    ("initialize_simulator", "mocomr gen-corpus --config <cfg>"),
    ("set_behavior_profile", "mocomr fit --config <cfg>"),
    ("set_task", "mocomr fit --config <cfg> (task metrics read from corpus sessions)"),
    ("run_simulation", "mocomr simulate --config <cfg>"),
    ("get_user_data", "mocomr export --what sessions --format jsonl"),
    ("get_group_data", "mocomr export --what sessions --format jsonl"),
    ("generate_sociograph", "mocomr sociogram --config <cfg>"),
    ("calculate_task_performance", "mocomr evaluate --config <cfg>"),
    ("export_data", "mocomr export --what <what> --format <format>"),
];

/// Human-readable table for `--help` style output.
pub fn verb_table() -> String {
    let width = API_VERB_MAPPING
        .iter()
        .map(|(v, _)| v.len())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (verb, cli) in API_VERB_MAPPING {
        out.push_str(&format!("{verb:width$}  {cli}\n"));
    }
    out
}
